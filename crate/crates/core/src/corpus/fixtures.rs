use std::fmt;
use std::str::FromStr;

use super::CorpusError;
use crate::BinaryImage;

/// Analytic test rasters with known box-counting dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FractalFixture {
    /// Sierpinski gasket, `(x & y) == 0`; dimension log2(3).
    Sierpinski,
    /// All ink; dimension 2.
    FilledSquare,
    /// One ink pixel at the origin; dimension 0.
    SinglePixel,
}

impl FractalFixture {
    pub const ALL: [FractalFixture; 3] = [FractalFixture::Sierpinski, FractalFixture::FilledSquare, FractalFixture::SinglePixel];

    pub fn name(self) -> &'static str {
        match self {
            FractalFixture::Sierpinski => "sierpinski",
            FractalFixture::FilledSquare => "filled_square",
            FractalFixture::SinglePixel => "single_pixel",
        }
    }

    pub fn expected_dimension(self) -> f64 {
        match self {
            FractalFixture::Sierpinski => 3f64.log2(),
            FractalFixture::FilledSquare => 2.0,
            FractalFixture::SinglePixel => 0.0,
        }
    }
}

impl fmt::Display for FractalFixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FractalFixture {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FractalFixture::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CorpusError::InvalidParameter(format!("unknown fixture '{s}'")))
    }
}

/// Renders a `side x side` fixture; `side` must be a power of two.
pub fn render_fractal_fixture(kind: FractalFixture, side: usize) -> Result<BinaryImage, CorpusError> {
    if !side.is_power_of_two() {
        return Err(CorpusError::InvalidParameter(format!("fixture side must be a power of two, got {side}")));
    }
    Ok(BinaryImage::from_fn(side, side, |x, y| match kind {
        FractalFixture::Sierpinski => x & y == 0,
        FractalFixture::FilledSquare => true,
        FractalFixture::SinglePixel => x == 0 && y == 0,
    }))
}
