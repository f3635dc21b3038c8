use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{prepare_all, rank_prepared, Cutoff, SpotError, SpotResult, Spottable};
use crate::matchers::{Method, WordParams};

/// Relevant corpus ids per query id.
pub type Truth = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEval {
    pub method: Method,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when results were cut by rank or carry different thresholds.
    pub tau_used: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub pr_curve: Vec<PrPoint>,
}

/// A published precision/recall pair, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub method: Method,
    pub precision: f64,
    pub recall: f64,
}

/// Precision/recall reported for the original historical-document
/// collection. Kept for side-by-side display only; that collection is not
/// available, so these are never compared against.
pub const PUBLISHED_BASELINE: [ReferenceValue; 3] = [
    ReferenceValue { method: Method::Xor, precision: 63.14, recall: 55.34 },
    ReferenceValue { method: Method::Edm, precision: 78.43, recall: 79.32 },
    ReferenceValue { method: Method::Vproj, precision: 41.67, recall: 34.46 },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub queries: usize,
    pub relevant: usize,
    pub methods: Vec<MethodEval>,
    pub published_baseline: Vec<ReferenceValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauPolicy {
    /// Per method, the tau with the highest micro-F1; ties go to the
    /// smaller tau.
    BestF1,
    Fixed(f64),
}

impl FromStr for TauPolicy {
    type Err = SpotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        if s == "best-f1" {
            return Ok(TauPolicy::BestF1);
        }
        s.strip_prefix("fixed:")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .map(TauPolicy::Fixed)
            .ok_or_else(|| SpotError::InvalidParameter(format!("tau policy must be best-f1 or fixed:<tau>, got '{s}'")))
    }
}

fn ratio(num: usize, den: usize, undefined: f64) -> f64 {
    if den == 0 {
        undefined
    } else {
        num as f64 / den as f64
    }
}

fn precision_of(tp: usize, retrieved: usize, relevant: usize) -> f64 {
    ratio(tp, retrieved, if relevant == 0 { 1.0 } else { 0.0 })
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Micro-averaged PR points at every distinct value in the pooled rankings.
fn sweep(results: &[&SpotResult], truth: &Truth, relevant: usize) -> Vec<PrPoint> {
    let mut pooled: Vec<(f64, bool)> = results
        .iter()
        .flat_map(|r| {
            let rel = &truth[&r.query_id];
            r.ranked.iter().map(move |x| (x.value, rel.contains(&x.id)))
        })
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut curve = Vec::new();
    let (mut tp, mut retrieved) = (0, 0);
    let mut i = 0;
    while i < pooled.len() {
        let tau = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == tau {
            retrieved += 1;
            tp += usize::from(pooled[i].1);
            i += 1;
        }
        curve.push(PrPoint { tau, precision: precision_of(tp, retrieved, relevant), recall: ratio(tp, relevant, 1.0) });
    }
    curve
}

fn best_f1_tau(curve: &[PrPoint]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for p in curve {
        let f = f1(p.precision, p.recall);
        if best.is_none_or(|(bf, _)| f > bf) {
            best = Some((f, p.tau));
        }
    }
    best.map(|(_, t)| t)
}

/// Pooled counts over the retrieved prefixes of `results`, per method.
pub fn evaluate(results: &[SpotResult], truth: &Truth) -> Result<EvalReport, SpotError> {
    for r in results {
        if !truth.contains_key(&r.query_id) {
            return Err(SpotError::MissingTruth(r.query_id.clone()));
        }
    }
    let mut by_method: BTreeMap<Method, Vec<&SpotResult>> = BTreeMap::new();
    for r in results {
        by_method.entry(r.method).or_default().push(r);
    }
    let mut queries = BTreeSet::new();
    let mut methods = Vec::new();
    let mut report_relevant = 0;
    for (method, mut rs) in by_method {
        rs.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let mut seen = BTreeSet::new();
        rs.retain(|r| seen.insert(r.query_id.clone()));
        let relevant: usize = rs.iter().map(|r| truth[&r.query_id].len()).sum();
        let (mut tp, mut retrieved) = (0, 0);
        for r in &rs {
            queries.insert(r.query_id.clone());
            let rel = &truth[&r.query_id];
            retrieved += r.matched;
            tp += r.matches().iter().filter(|m| rel.contains(&m.id)).count();
        }
        let thresholds: BTreeSet<u64> = rs.iter().map(|r| r.threshold.map_or(u64::MAX, f64::to_bits)).collect();
        let tau_used = match thresholds.iter().collect::<Vec<_>>()[..] {
            [&bits] if bits != u64::MAX => Some(f64::from_bits(bits)),
            _ => None,
        };
        let precision = precision_of(tp, retrieved, relevant);
        let recall = ratio(tp, relevant, 1.0);
        report_relevant = report_relevant.max(relevant);
        methods.push(MethodEval {
            method,
            precision,
            recall,
            f1: f1(precision, recall),
            tau_used,
            tp,
            fp: retrieved - tp,
            fn_: relevant - tp,
            pr_curve: sweep(&rs, truth, relevant),
        });
    }
    Ok(EvalReport { queries: queries.len(), relevant: report_relevant, methods, published_baseline: PUBLISHED_BASELINE.to_vec() })
}

/// Full rankings of every query against `corpus` for one method. Queries
/// run in parallel; the output follows query order.
pub fn rank_all<T: Spottable>(corpus: &[T], queries: &[T], method: Method, params: &WordParams) -> Result<Vec<SpotResult>, SpotError> {
    if corpus.is_empty() {
        return Err(SpotError::EmptyCorpus);
    }
    let prepared = prepare_all(corpus);
    queries
        .par_iter()
        .map(|q| {
            let ranked = rank_prepared::<T>(q.spot_id(), &q.prepare(), &prepared, method, params)?;
            Ok(SpotResult { query_id: q.spot_id().to_string(), method, ranked, threshold: None, matched: 0 })
        })
        .collect()
}

/// Spots every query with every method, picks each method's tau by
/// `policy` and evaluates.
pub fn compare_methods<T: Spottable>(
    corpus: &[T],
    queries: &[T],
    truth: &Truth,
    methods: &[Method],
    policy: TauPolicy,
    params: &WordParams,
) -> Result<(EvalReport, Vec<SpotResult>), SpotError> {
    if queries.is_empty() {
        return Err(SpotError::EmptyQueries);
    }
    let mut all = Vec::new();
    for &method in methods {
        let mut results = rank_all(corpus, queries, method, params)?;
        let tau = match policy {
            TauPolicy::Fixed(t) => t,
            TauPolicy::BestF1 => {
                let curve = evaluate(&results, truth)?.methods.pop().map(|m| m.pr_curve).unwrap_or_default();
                best_f1_tau(&curve).unwrap_or(0.0)
            }
        };
        for r in &mut results {
            r.apply(Cutoff::Tau(tau));
        }
        all.extend(results);
    }
    Ok((evaluate(&all, truth)?, all))
}

fn display_name(m: Method) -> &'static str {
    match m {
        Method::Xor => "XOR",
        Method::Edm => "EDM",
        Method::Vproj => "VPROJ",
        Method::VprojDtw => "VPROJ-DTW",
    }
}

impl EvalReport {
    pub fn method(&self, m: Method) -> Option<&MethodEval> {
        self.methods.iter().find(|e| e.method == m)
    }

    /// Fixed-width table: methods as columns, percentages to two decimals.
    /// Published figures appear in the last two rows where they exist.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let cell = |v: String| format!("{v:>12}");
        let pct = |v: f64| cell(format!("{:.2}%", 100.0 * v));
        let _ = write!(s, "{:<16}", "Method");
        for m in &self.methods {
            s.push_str(&cell(display_name(m.method).to_string()));
        }
        s.push('\n');
        let rows: [(&str, &dyn Fn(&MethodEval) -> String); 4] = [
            ("Precision", &|m| pct(m.precision)),
            ("Recall", &|m| pct(m.recall)),
            ("F1", &|m| pct(m.f1)),
            ("tau", &|m| cell(m.tau_used.map_or("-".into(), |t| format!("{t:.4}")))),
        ];
        for (name, f) in rows {
            let _ = write!(s, "{name:<16}");
            for m in &self.methods {
                s.push_str(&f(m));
            }
            s.push('\n');
        }
        let reference = |m: Method| self.published_baseline.iter().find(|r| r.method == m);
        for (name, pick) in [("Published P", true), ("Published R", false)] {
            let _ = write!(s, "{name:<16}");
            for m in &self.methods {
                s.push_str(&cell(reference(m.method).map_or("-".into(), |r| format!("{:.2}%", if pick { r.precision } else { r.recall }))));
            }
            s.push('\n');
        }
        let _ = writeln!(s, "{} queries, {} relevant occurrences", self.queries, self.relevant);
        s
    }
}
