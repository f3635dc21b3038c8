use super::{dtw_distance, profile_dissimilarity, vertical_profile, MatchError, Method, Profile};
use crate::imgcore::distance_transform;
use crate::segmenter::Glyph;

/// A glyph with its bit-packed grid, distance transform and profile
/// precomputed, for repeated matching.
#[derive(Debug, Clone)]
pub struct PreparedGlyph {
    id: String,
    side: usize,
    bits: Vec<u64>,
    ink: u32,
    dt: Vec<f64>,
    profile: Profile,
}

impl PreparedGlyph {
    pub fn new(g: &Glyph) -> PreparedGlyph {
        let n = g.grid.width() * g.grid.height();
        let mut bits = vec![0u64; n.div_ceil(64)];
        for (i, &b) in g.grid.mask().iter().enumerate() {
            if b {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        PreparedGlyph {
            id: g.id.clone(),
            side: g.side(),
            ink: g.grid.count() as u32,
            dt: distance_transform(&g.grid).values().to_vec(),
            profile: vertical_profile(g),
            bits,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Sum of `weights` over the set bits of `mask`, in ascending pixel order.
    fn weighted_sum(mask: impl Iterator<Item = u64>, weights: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, mut word) in mask.enumerate() {
            while word != 0 {
                let bit = word.trailing_zeros() as usize;
                acc += weights[w * 64 + bit];
                word &= word - 1;
            }
        }
        acc
    }

    pub fn dissimilarity(&self, other: &PreparedGlyph, method: Method) -> Result<f64, MatchError> {
        if self.side != other.side {
            return Err(MatchError::SideMismatch(self.side, other.side));
        }
        match method {
            Method::Xor => {
                let diff: u32 = self.bits.iter().zip(&other.bits).map(|(a, b)| (a ^ b).count_ones()).sum();
                Ok(diff as f64 / (self.side * self.side) as f64)
            }
            Method::Edm => {
                for g in [self, other] {
                    if g.ink == 0 {
                        return Err(MatchError::EmptyGlyph(g.id.clone()));
                    }
                }
                let only_self = self.bits.iter().zip(&other.bits).map(|(a, b)| a & !b);
                let only_other = self.bits.iter().zip(&other.bits).map(|(a, b)| b & !a);
                let s = Self::weighted_sum(only_self, &other.dt);
                let o = Self::weighted_sum(only_other, &self.dt);
                Ok((s + o) / (self.ink + other.ink) as f64)
            }
            Method::Vproj => profile_dissimilarity(&self.profile, &other.profile),
            Method::VprojDtw => dtw_distance(&self.profile, &other.profile, None),
        }
    }
}
