use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::imgcore::BinaryImage;

fn glyph(id: &str, rows: &[&str]) -> Glyph {
    Glyph::from_grid(id, BinaryImage::from_ascii(rows))
}

fn bar(id: &str, col: usize) -> Glyph {
    let grid = BinaryImage::from_fn(8, 8, |x, y| (2..6).contains(&y) && x == col);
    Glyph::from_grid(id, grid)
}

fn ranked(ids_values: &[(&str, f64)]) -> Vec<Ranked> {
    ids_values.iter().map(|&(id, value)| Ranked { id: id.into(), value }).collect()
}

fn truth(entries: &[(&str, &[&str])]) -> Truth {
    entries.iter().map(|(q, rel)| (q.to_string(), rel.iter().map(|s| s.to_string()).collect())).collect()
}

fn result(query: &str, method: Method, ranked_list: Vec<Ranked>, matched: usize) -> SpotResult {
    SpotResult { query_id: query.into(), method, ranked: ranked_list, threshold: None, matched }
}

const L: [&str; 4] = ["#...", "#...", "#...", "####"];
const T: [&str; 4] = ["####", ".#..", ".#..", ".#.."];

#[test]
fn duplicate_ranks_first_at_zero() {
    let q = glyph("q", &L);
    let corpus = vec![glyph("a", &T), glyph("b", &L), q.clone()];
    for m in Method::ALL {
        let r = spot(&q, &corpus, m, Cutoff::TopK(5), &WordParams::default()).unwrap();
        assert_eq!(r.ranked[0].id, "b", "{m:?}");
        assert_eq!(r.ranked[0].value, 0.0);
        assert!(r.ranked.iter().all(|x| x.id != "q"), "own id is excluded");
        assert_eq!(r.matched, 2);
    }
}

#[test]
fn tau_zero_keeps_exact_copies() {
    let q = glyph("q", &L);
    let corpus = vec![glyph("a", &T), glyph("b", &L), glyph("c", &L)];
    let r = spot(&q, &corpus, Method::Edm, Cutoff::Tau(0.0), &WordParams::default()).unwrap();
    let ids: Vec<_> = r.matches().iter().map(|m| m.id.as_str()).collect();
    assert_eq!(ids, ["b", "c"]);
    assert_eq!(r.threshold, Some(0.0));
}

#[test]
fn ties_order_by_id() {
    let q = bar("q", 3);
    let corpus = vec![bar("z", 3), bar("m", 3), bar("a", 3)];
    let r = spot(&q, &corpus, Method::Xor, Cutoff::TopK(3), &WordParams::default()).unwrap();
    let ids: Vec<_> = r.ranked.iter().map(|m| m.id.as_str()).collect();
    assert_eq!(ids, ["a", "m", "z"]);
}

#[test]
fn empty_corpus_and_cutoff_errors() {
    let q = glyph("q", &L);
    assert!(matches!(spot(&q, &[], Method::Xor, Cutoff::TopK(1), &WordParams::default()), Err(SpotError::EmptyCorpus)));
    assert!(matches!(Cutoff::from_options(Some(0.1), Some(3)), Err(SpotError::Cutoff)));
    assert!(matches!(Cutoff::from_options(None, None), Err(SpotError::Cutoff)));
    assert!(matches!(Cutoff::from_options(Some(f64::NAN), None), Err(SpotError::Cutoff)));
    assert_eq!(Cutoff::from_options(None, Some(2)).unwrap(), Cutoff::TopK(2));
}

#[test]
fn toy_precision_and_recall() {
    let list = ranked(&[("r1", 0.1), ("x1", 0.2), ("r2", 0.3), ("x2", 0.4), ("r3", 0.5), ("r4", 0.9)]);
    let results = vec![result("q", Method::Xor, list, 5)];
    let report = evaluate(&results, &truth(&[("q", &["r1", "r2", "r3", "r4"])])).unwrap();
    let m = &report.methods[0];
    assert!((m.precision - 0.6).abs() < 1e-12);
    assert!((m.recall - 0.75).abs() < 1e-12);
    assert!((m.f1 - 2.0 * 0.6 * 0.75 / 1.35).abs() < 1e-12);
    assert_eq!((m.tp, m.fp, m.fn_), (3, 2, 1));
}

#[test]
fn perfect_retrieval() {
    let list = ranked(&[("r1", 0.0), ("r2", 0.1), ("x", 0.5)]);
    let report = evaluate(&[result("q", Method::Edm, list, 2)], &truth(&[("q", &["r1", "r2"])])).unwrap();
    assert_eq!((report.methods[0].precision, report.methods[0].recall), (1.0, 1.0));
}

#[test]
fn undefined_ratios() {
    // Nothing retrieved, nothing relevant.
    let r = evaluate(&[result("q", Method::Xor, ranked(&[("x", 0.5)]), 0)], &truth(&[("q", &[])])).unwrap();
    assert_eq!((r.methods[0].precision, r.methods[0].recall, r.methods[0].f1), (1.0, 1.0, 1.0));
    // Nothing retrieved, something relevant.
    let r = evaluate(&[result("q", Method::Xor, ranked(&[("a", 0.5)]), 0)], &truth(&[("q", &["a"])])).unwrap();
    assert_eq!((r.methods[0].precision, r.methods[0].recall, r.methods[0].f1), (0.0, 0.0, 0.0));
}

#[test]
fn missing_truth_is_an_error() {
    let err = evaluate(&[result("q", Method::Xor, vec![], 0)], &Truth::new()).unwrap_err();
    assert!(matches!(err, SpotError::MissingTruth(id) if id == "q"));
}

#[test]
fn best_f1_duplicate_gives_tau_zero() {
    let q = glyph("q", &L);
    let corpus = vec![glyph("a", &T), glyph("dup", &L)];
    let t = truth(&[("q", &["dup"])]);
    let (report, results) = compare_methods(&corpus, &[q], &t, &[Method::Edm], TauPolicy::BestF1, &WordParams::default()).unwrap();
    let m = &report.methods[0];
    assert_eq!((m.precision, m.recall, m.tau_used), (1.0, 1.0, Some(0.0)));
    assert_eq!(results[0].matched, 1);
}

#[test]
fn best_f1_ties_take_the_smaller_tau() {
    // Retrieving {r} gives P = 1, R = 0.5; retrieving {r, x, y, r2} gives
    // P = 0.5, R = 1. Both have F1 = 2/3.
    let mut items = scalars::<0>(&[0.0, 1.0, 2.0, 2.0, 3.0]);
    for (s, id) in items.iter_mut().zip(["q", "r", "x", "y", "r2"]) {
        s.id = id.into();
    }
    let t = truth(&[("q", &["r", "r2"])]);
    let (report, _) = compare_methods(&items, &items[..1], &t, &[Method::Xor], TauPolicy::BestF1, &WordParams::default()).unwrap();
    let m = &report.methods[0];
    assert_eq!(m.pr_curve.len(), 3);
    assert_eq!(m.tau_used, Some(1.0));
    assert_eq!((m.precision, m.recall), (1.0, 0.5));
}

#[test]
fn fixed_policy_uses_given_tau() {
    let q = glyph("q", &L);
    let corpus = vec![glyph("a", &T), glyph("dup", &L)];
    let t = truth(&[("q", &["dup"])]);
    let (report, results) =
        compare_methods(&corpus, &[q], &t, &[Method::Xor], TauPolicy::Fixed(1.0), &WordParams::default()).unwrap();
    assert_eq!(report.methods[0].tau_used, Some(1.0));
    assert_eq!(results[0].matched, 2);
    assert_eq!("fixed:0.25".parse::<TauPolicy>().unwrap(), TauPolicy::Fixed(0.25));
    assert_eq!("best-f1".parse::<TauPolicy>().unwrap(), TauPolicy::BestF1);
    assert!("fixed:x".parse::<TauPolicy>().is_err());
}

#[test]
fn table_layout() {
    let list = ranked(&[("r1", 0.1), ("x1", 0.2)]);
    let results = vec![result("q", Method::Xor, list.clone(), 1), result("q", Method::Edm, list, 2)];
    let report = evaluate(&results, &truth(&[("q", &["r1"])])).unwrap();
    let table = report.to_table();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], format!("{:<16}{:>12}{:>12}", "Method", "XOR", "EDM"));
    assert_eq!(lines[1], format!("{:<16}{:>12}{:>12}", "Precision", "100.00%", "50.00%"));
    assert_eq!(lines[5], format!("{:<16}{:>12}{:>12}", "Published P", "63.14%", "78.43%"));
    assert_eq!(lines[6], format!("{:<16}{:>12}{:>12}", "Published R", "55.34%", "79.32%"));
    assert_eq!(lines[7], "1 queries, 1 relevant occurrences");
}

#[test]
fn published_baseline_values() {
    let get = |m| PUBLISHED_BASELINE.iter().find(|r| r.method == m).map(|r| (r.precision, r.recall));
    assert_eq!(get(Method::Xor), Some((63.14, 55.34)));
    assert_eq!(get(Method::Edm), Some((78.43, 79.32)));
    assert_eq!(get(Method::Vproj), Some((41.67, 34.46)));
}

#[test]
fn word_spotting_finds_the_same_word() {
    let letters = [bar("", 1), bar("", 4), Glyph::from_grid("", BinaryImage::from_fn(8, 8, |x, y| x == y))];
    let word = |id: &str, idx: &[usize]| Word {
        id: id.into(),
        source_id: String::new(),
        bbox: BBox::new(0, 0, 1, 1),
        glyphs: idx.iter().map(|&i| letters[i].clone()).collect(),
        label: None,
    };
    let q = word("q", &[0, 1, 2]);
    let corpus = vec![word("a", &[2, 1]), word("b", &[0, 1, 2]), word("c", &[0, 2])];
    let r = spot(&q, &corpus, Method::Edm, Cutoff::TopK(1), &WordParams::default()).unwrap();
    assert_eq!(r.matches()[0].id, "b");
    assert_eq!(r.matches()[0].value, 0.0);
}

/// A scalar item whose dissimilarity is `|a - b|` passed through `F`.
struct Scalar<const F: u8> {
    id: String,
    v: f64,
}

impl<const F: u8> Spottable for Scalar<F> {
    type Prepared = f64;

    fn spot_id(&self) -> &str {
        &self.id
    }

    fn prepare(&self) -> f64 {
        self.v
    }

    fn dissimilarity(a: &f64, b: &f64, _: Method, _: &WordParams) -> Result<f64, MatchError> {
        let d = (a - b).abs();
        Ok(if F == 0 { d } else { d.powi(3) + 2.0 * d + 1.0 })
    }
}

fn scalars<const F: u8>(values: &[f64]) -> Vec<Scalar<F>> {
    values.iter().enumerate().map(|(i, &v)| Scalar { id: format!("s{i:02}"), v }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_transform_keeps_rankings(values in prop::collection::vec(0u8..20, 3..16), nq in 1usize..3) {
        let vals: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        let (a, b) = (scalars::<0>(&vals), scalars::<1>(&vals));
        let nq = nq.min(vals.len());
        let t: Truth = (0..nq)
            .map(|q| (format!("s{q:02}"), a.iter().filter(|s| s.v == vals[q] && s.id != format!("s{q:02}")).map(|s| s.id.clone()).collect()))
            .collect();
        let ra = rank_all(&a, &a[..nq], Method::Xor, &WordParams::default()).unwrap();
        let rb = rank_all(&b, &b[..nq], Method::Xor, &WordParams::default()).unwrap();
        for (x, y) in ra.iter().zip(&rb) {
            let ix: Vec<_> = x.ranked.iter().map(|r| &r.id).collect();
            let iy: Vec<_> = y.ranked.iter().map(|r| &r.id).collect();
            prop_assert_eq!(ix, iy);
        }
        let ca = evaluate(&ra, &t).unwrap().methods[0].pr_curve.clone();
        let cb = evaluate(&rb, &t).unwrap().methods[0].pr_curve.clone();
        prop_assert_eq!(ca.len(), cb.len());
        for (p, q) in ca.iter().zip(&cb) {
            prop_assert_eq!((p.precision, p.recall), (q.precision, q.recall));
        }
    }

    #[test]
    fn evaluation_invariants(
        lists in prop::collection::vec(prop::collection::vec((0u8..6, any::<bool>()), 0..10), 1..5),
        cut in 0u8..7,
        rotate in 0usize..5,
    ) {
        let tau = f64::from(cut) / 6.0;
        let mut results = Vec::new();
        let mut t = Truth::new();
        for (qi, list) in lists.iter().enumerate() {
            let q = format!("q{qi}");
            let mut rel = BTreeSet::new();
            let mut rk: Vec<Ranked> = list.iter().enumerate().map(|(i, &(v, relevant))| {
                let id = format!("{q}-{i}");
                if relevant { rel.insert(id.clone()); }
                Ranked { id, value: f64::from(v) / 6.0 }
            }).collect();
            // An unretrievable relevant item keeps recall honest.
            if qi % 2 == 1 { rel.insert(format!("{q}-missing")); }
            rk.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.id.cmp(&b.id)));
            let mut r = result(&q, Method::Edm, rk, 0);
            r.apply(Cutoff::Tau(tau));
            t.insert(q, rel);
            results.push(r);
        }
        let report = evaluate(&results, &t).unwrap();
        let m = &report.methods[0];
        let relevant: usize = t.values().map(BTreeSet::len).sum();
        let retrieved: usize = results.iter().map(|r| r.matched).sum();
        prop_assert_eq!(m.tp + m.fn_, relevant);
        prop_assert_eq!(m.tp + m.fp, retrieved);
        for r in &results {
            let rel = &t[&r.query_id];
            let tp = r.matches().iter().filter(|x| rel.contains(&x.id)).count();
            prop_assert!(tp <= rel.len() && tp <= r.matched);
        }
        // Permuting the result list changes nothing.
        let mut shuffled = results.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rotate % n);
        shuffled.reverse();
        prop_assert_eq!(&evaluate(&shuffled, &t).unwrap(), &report);
        // Recall never decreases and TP never drops as tau rises.
        for w in m.pr_curve.windows(2) {
            prop_assert!(w[0].tau < w[1].tau);
            prop_assert!(w[0].recall <= w[1].recall);
        }
    }

    #[test]
    fn raising_tau_never_removes_matches(values in prop::collection::vec(0u8..10, 1..12), t1 in 0u8..10, t2 in 0u8..10) {
        let (lo, hi) = (f64::from(t1.min(t2)), f64::from(t1.max(t2)));
        let items = scalars::<0>(&values.iter().map(|&v| f64::from(v)).collect::<Vec<_>>());
        let q = Scalar::<0> { id: "query".into(), v: 0.0 };
        let a = spot(&q, &items, Method::Xor, Cutoff::Tau(lo), &WordParams::default()).unwrap();
        let b = spot(&q, &items, Method::Xor, Cutoff::Tau(hi), &WordParams::default()).unwrap();
        let sa: BTreeSet<_> = a.matches().iter().map(|m| m.id.clone()).collect();
        let sb: BTreeSet<_> = b.matches().iter().map(|m| m.id.clone()).collect();
        prop_assert!(sa.is_subset(&sb));
        prop_assert!(b.ranked.windows(2).all(|w| w[0].value <= w[1].value));
    }
}
