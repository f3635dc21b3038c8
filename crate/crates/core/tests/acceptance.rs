//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero when a criterion fails that is not a documented gap.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use glyphspot::clustering::{kmeans, leader_cluster, quantization_error, som_initial, som_train, zoning_vector, SomParams};
use glyphspot::corpus::{build_default_corpus, render_fractal_fixture, CorpusManifest, FractalFixture};
use glyphspot::features::{box_counting_dimension, dbc_dimension, haar_subband_energies, Extractor};
use glyphspot::imgcore::distance_transform;
use glyphspot::matchers::{dtw_cost, dtw_distance, edm_dissimilarity, Method, Profile, WordParams};
use glyphspot::rng::stream;
use glyphspot::segmenter::{BBox, Glyph};
use glyphspot::spotting::{
    char_benchmark, compare_methods, evaluate, fontspot_eval, segment_corpus_page, FontspotParams, Ranked, SegmentParams,
    SpotResult, TauPolicy, Truth,
};
use glyphspot::{BinaryImage, GrayImage};
use rand::Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    /// Known not to hold on the synthetic corpus; reported but not fatal.
    known_gap: bool,
    run: fn(&Ctx) -> Outcome,
}

struct Ctx {
    root: tempfile::TempDir,
    manifest: CorpusManifest,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t <= limit {
        Ok(t)
    } else {
        Err(format!("took {t:.2?}, limit {limit:?}"))
    }
}

fn random_mask(r: &mut impl Rng, w: usize, h: usize, density: f64) -> BinaryImage {
    BinaryImage::from_fn(w, h, |_, _| r.random_bool(density))
}

fn brute_force_edt(bin: &BinaryImage) -> Vec<f64> {
    let ink: Vec<(i64, i64)> =
        (0..bin.height()).flat_map(|y| (0..bin.width()).map(move |x| (x, y))).filter(|&(x, y)| bin.get(x, y)).map(|(x, y)| (x as i64, y as i64)).collect();
    let mut out = Vec::with_capacity(bin.width() * bin.height());
    for y in 0..bin.height() as i64 {
        for x in 0..bin.width() as i64 {
            let d2 = ink.iter().map(|&(a, b)| (a - x).pow(2) + (b - y).pow(2)).min();
            out.push(d2.map_or((bin.width() + bin.height()) as f64, |d| (d as f64).sqrt()));
        }
    }
    out
}

fn c1_distance_transform(_: &Ctx) -> Outcome {
    let start = Instant::now();
    let mut r = stream(42, "acceptance-edt", 0);
    for i in 0..200 {
        let (w, h) = (r.random_range(8..=32), r.random_range(8..=32));
        let density = r.random_range(0.01..0.5);
        let mask = random_mask(&mut r, w, h, density);
        let got = distance_transform(&mask);
        if got.values() != brute_force_edt(&mask).as_slice() {
            return Err(format!("mask {i} ({w}x{h}) differs from brute force"));
        }
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("200 masks exact, {t:.2?}"))
}

fn brute_force_edm(a: &BinaryImage, b: &BinaryImage) -> f64 {
    let pts = |m: &BinaryImage| -> Vec<(f64, f64)> {
        (0..m.height()).flat_map(|y| (0..m.width()).map(move |x| (x, y))).filter(|&(x, y)| m.get(x, y)).map(|(x, y)| (x as f64, y as f64)).collect()
    };
    let (pa, pb) = (pts(a), pts(b));
    let nearest = |p: (f64, f64), set: &[(f64, f64)]| set.iter().map(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for &p in &pa {
        if !b.get(p.0 as usize, p.1 as usize) {
            sum += nearest(p, &pb);
        }
    }
    for &p in &pb {
        if !a.get(p.0 as usize, p.1 as usize) {
            sum += nearest(p, &pa);
        }
    }
    sum / (pa.len() + pb.len()) as f64
}

fn c2_edm_oracle(_: &Ctx) -> Outcome {
    let mut r = stream(42, "acceptance-edm", 0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let side = [16, 24, 32][i % 3];
        let mut pair = Vec::new();
        for _ in 0..2 {
            let density = r.random_range(0.05..0.4);
            let mut m = random_mask(&mut r, side, side, density);
            if m.is_empty() {
                m.set(0, 0, true);
            }
            pair.push(Glyph::from_grid(format!("g{i}"), m));
        }
        let (a, b) = (&pair[0], &pair[1]);
        let d = edm_dissimilarity(a, b).map_err(|e| e.to_string())?;
        worst = worst.max((d - brute_force_edm(&a.grid, &b.grid)).abs());
        if edm_dissimilarity(b, a).map_err(|e| e.to_string())? != d {
            return Err(format!("pair {i} is not symmetric"));
        }
        if edm_dissimilarity(a, a).map_err(|e| e.to_string())? != 0.0 {
            return Err(format!("pair {i}: d(a, a) != 0"));
        }
    }
    check(worst <= 1e-9, format!("100 pairs, max deviation {worst:.1e}, symmetric, zero on identity"))
}

fn c3_fractal_fixtures(_: &Ctx) -> Outcome {
    let start = Instant::now();
    let bc = |kind, side| box_counting_dimension(&render_fractal_fixture(kind, side).unwrap()).unwrap();
    let square = bc(FractalFixture::FilledSquare, 256).slope;
    let pixel = bc(FractalFixture::SinglePixel, 256).slope;
    let sierpinski = bc(FractalFixture::Sierpinski, 512);
    let constant = dbc_dimension(&GrayImage::new(128, 128, 97)).slope;
    let t = within(Duration::from_secs(10), start)?;
    let detail = format!(
        "square {square}, pixel {pixel}, sierpinski {:.4} (r2 {:.4}), constant dbc {constant}, {t:.2?}",
        sierpinski.slope, sierpinski.r2
    );
    check(
        square == 2.0 && pixel == 0.0 && (sierpinski.slope - 1.585).abs() <= 0.05 && sierpinski.r2 >= 0.98 && constant == 2.0,
        detail,
    )
}

fn c4_wavelet_parseval(_: &Ctx) -> Outcome {
    let mut r = stream(42, "acceptance-parseval", 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (w, h) = (8 * r.random_range(1..=8), 8 * r.random_range(1..=8));
        let img = GrayImage::from_vec(w, h, (0..w * h).map(|_| r.random()).collect()).unwrap();
        let direct: f64 = img.data().iter().map(|&v| f64::from(v).powi(2)).sum();
        for levels in 1..=3 {
            let e: f64 = haar_subband_energies(&img, levels).map_err(|e| e.to_string())?.iter().sum();
            worst = worst.max((e - direct).abs() / direct.max(1.0));
        }
    }
    check(worst <= 1e-6, format!("50 images x 3 depths, max relative error {worst:.1e}"))
}

/// Minimum raw cost over every monotone alignment path.
fn enumerate_alignments(a: &[u32], b: &[u32], i: usize, j: usize) -> u32 {
    let here = a[i].abs_diff(b[j]);
    if i + 1 == a.len() && j + 1 == b.len() {
        return here;
    }
    let mut best = u32::MAX;
    if i + 1 < a.len() {
        best = best.min(enumerate_alignments(a, b, i + 1, j));
    }
    if j + 1 < b.len() {
        best = best.min(enumerate_alignments(a, b, i, j + 1));
    }
    if i + 1 < a.len() && j + 1 < b.len() {
        best = best.min(enumerate_alignments(a, b, i + 1, j + 1));
    }
    here + best
}

fn c5_dtw(_: &Ctx) -> Outcome {
    let mut r = stream(42, "acceptance-dtw", 0);
    let profile = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<u32> { (0..r.random_range(1..=6)).map(|_| r.random_range(0..=2)).collect() };
    for i in 0..500 {
        let (a, b) = (profile(&mut r), profile(&mut r));
        let raw = enumerate_alignments(&a, &b, 0, 0);
        let want = f64::from(raw) / (a.len() + b.len()) as f64;
        let got = dtw_distance(&Profile { values: a.clone() }, &Profile { values: b.clone() }, None).map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("pair {i} {a:?} {b:?}: {got} vs oracle {want}"));
        }
        // Duplicating any column is absorbed by warping.
        let k = r.random_range(0..a.len());
        let mut stretched = a.clone();
        stretched.insert(k, a[k]);
        let fa: Vec<f64> = a.iter().map(|&v| f64::from(v)).collect();
        let fs: Vec<f64> = stretched.iter().map(|&v| f64::from(v)).collect();
        if dtw_cost(&fa, &fs, None).map_err(|e| e.to_string())?.raw != 0.0 {
            return Err(format!("duplicating column {k} of {a:?} costs"));
        }
    }
    Ok("500 pairs equal exhaustive enumeration; column duplication costs 0".into())
}

fn c6_table_ordering(ctx: &Ctx) -> Outcome {
    let start = Instant::now();
    let bench = char_benchmark(ctx.root.path(), &ctx.manifest, "mild", &SegmentParams::default(), Some("base")).map_err(|e| e.to_string())?;
    let methods = [Method::Xor, Method::Edm, Method::Vproj];
    let (report, _) = compare_methods(&bench.corpus, &bench.queries, &bench.truth, &methods, TauPolicy::BestF1, &WordParams::default())
        .map_err(|e| e.to_string())?;
    let t = within(Duration::from_secs(300), start)?;
    let m = |x| report.method(x).unwrap();
    let (xor, edm, vproj) = (m(Method::Xor), m(Method::Edm), m(Method::Vproj));
    for e in &report.methods {
        if e.pr_curve.windows(2).any(|w| w[1].recall < w[0].recall) {
            return Err(format!("{:?} recall decreases along the sweep", e.method));
        }
    }
    let detail = format!(
        "F1 EDM {:.4} / XOR {:.4} / VPROJ {:.4}; EDM P {:.4} R {:.4}; {} queries; {t:.2?}",
        edm.f1,
        xor.f1,
        vproj.f1,
        edm.precision,
        edm.recall,
        report.queries
    );
    check(edm.f1 >= xor.f1 && xor.f1 >= vproj.f1 && edm.precision >= 0.70 && edm.recall >= 0.70, detail)
}

fn c7_font_robustness(ctx: &Ctx) -> Outcome {
    let ex = [Extractor::FractalSig, Extractor::WaveletEnergy];
    let params = FontspotParams::default();
    let run = |test: &str| fontspot_eval(ctx.root.path(), &ctx.manifest, "clean", test, &ex, &params).map_err(|e| e.to_string());
    let (clean, heavy) = (run("clean")?, run("heavy")?);
    let acc = |r: &glyphspot::spotting::FontspotReport, e| r.accuracy(e).unwrap();
    let (fc, wc) = (acc(&clean, Extractor::FractalSig), acc(&clean, Extractor::WaveletEnergy));
    let (fh, wh) = (acc(&heavy, Extractor::FractalSig), acc(&heavy, Extractor::WaveletEnergy));
    let detail = format!(
        "clean fractal {fc:.3} wavelet {wc:.3}; heavy fractal {fh:.3} wavelet {wh:.3}; drops {:.3} vs {:.3}",
        fc - fh,
        wc - wh
    );
    check(fc >= 0.90 && fh - wh >= 0.10 && fc - fh < wc - wh, detail)
}

fn c8_segmentation(ctx: &Ctx) -> Outcome {
    let params = SegmentParams::default();
    let (mut hit, mut total) = (0, 0);
    for page in &ctx.manifest.pages {
        let (_, seg) = segment_corpus_page(ctx.root.path(), page, "clean", &params).map_err(|e| e.to_string())?;
        let found: Vec<BBox> = seg.chars().copied().collect();
        hit += page.glyphs.iter().filter(|g| found.iter().any(|f| f.iou(&g.bbox) >= 0.5)).count();
        total += page.glyphs.len();
    }
    let rate = hit as f64 / total as f64;
    check(rate >= 0.95, format!("{hit}/{total} glyph boxes recovered ({:.2}%)", 100.0 * rate))
}

fn blobs(r: &mut impl Rng, n: usize, dim: usize, centers: usize) -> Vec<Vec<f64>> {
    let c: Vec<Vec<f64>> = (0..centers).map(|_| (0..dim).map(|_| r.random_range(-10.0..10.0)).collect()).collect();
    (0..n).map(|i| c[i % centers].iter().map(|x| x + r.random_range(-1.5..1.5)).collect()).collect()
}

fn c9_clustering(ctx: &Ctx) -> Outcome {
    let mut r = stream(42, "acceptance-cluster", 0);
    let mut runs = 0;
    for i in 0..40u64 {
        let v = blobs(&mut r, 60 + i as usize, 2 + (i as usize % 4), 2 + (i as usize % 5));
        let k = 1 + (i as usize % 7);
        let fit = kmeans(&v, k, i, 100).map_err(|e| e.to_string())?;
        if fit.history.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("k-means run {i}: inertia rose {:?}", fit.history));
        }
        let tau = r.random_range(0.5..8.0);
        let d = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        for class in leader_cluster(&v, d, tau).map_err(|e| e.to_string())? {
            if class.iter().any(|&m| d(&v[class[0]], &v[m]) > tau) {
                return Err(format!("leader run {i}: member beyond tau"));
            }
        }
        runs += 1;
    }
    // SOM on glyph zoning vectors from the corpus and on two blobs.
    let bench = char_benchmark(ctx.root.path(), &ctx.manifest, "clean", &SegmentParams::default(), Some("base")).map_err(|e| e.to_string())?;
    let glyph_vectors: Vec<Vec<f64>> = bench.corpus.iter().step_by(7).map(|g| zoning_vector(&g.grid, 8)).collect();
    let two_blobs = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 10.0], vec![10.0, 11.0]];
    let mut qe = Vec::new();
    for (data, params) in [
        (&glyph_vectors, SomParams { rows: 5, cols: 5, epochs: 10, seed: 42, ..SomParams::default() }),
        (&two_blobs, SomParams { rows: 2, cols: 2, epochs: 50, seed: 42, ..SomParams::default() }),
    ] {
        let before = quantization_error(&som_initial(data, &params).map_err(|e| e.to_string())?, data);
        let after = quantization_error(&som_train(data, &params).map_err(|e| e.to_string())?, data);
        if after > before {
            return Err(format!("SOM quantization error rose {before:.4} -> {after:.4}"));
        }
        qe.push(format!("{before:.3} -> {after:.3}"));
    }
    Ok(format!("{runs} k-means and leader runs hold; SOM error {}", qe.join(", ")))
}

fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

fn c10_determinism(_: &Ctx) -> Outcome {
    let mut snapshots = Vec::new();
    for threads in ["1", "1", "4"] {
        let cwd = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = Command::new(env!("CARGO_BIN_EXE_glyphspot"))
            .current_dir(cwd.path())
            .env("GLYPHSPOT_THREADS", threads)
            .args(["pipeline", "--synth", "--seed", "42", "--corpus", "corpus", "--out", "run"])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("pipeline failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
        snapshots.push((threads, snapshot(cwd.path())));
    }
    let files = snapshots[0].1.len();
    let bytes: usize = snapshots[0].1.iter().map(|f| f.1.len()).sum();
    for (threads, snap) in &snapshots[1..] {
        if *snap != snapshots[0].1 {
            return Err(format!("outputs with GLYPHSPOT_THREADS={threads} differ"));
        }
    }
    Ok(format!("3 runs (threads 1, 1, 4) identical: {files} files, {bytes} bytes"))
}

fn c11_evaluation(ctx: &Ctx) -> Outcome {
    let ranked = |v: &[(&str, f64)]| v.iter().map(|&(id, value)| Ranked { id: id.into(), value }).collect::<Vec<_>>();
    let toy = SpotResult {
        query_id: "q".into(),
        method: Method::Edm,
        ranked: ranked(&[("r1", 0.1), ("x1", 0.2), ("r2", 0.3), ("x2", 0.4), ("r3", 0.5), ("r4", 0.9)]),
        threshold: None,
        matched: 5,
    };
    let mut truth = Truth::new();
    truth.insert("q".into(), ["r1", "r2", "r3", "r4"].iter().map(|s| s.to_string()).collect());
    let report = evaluate(&[toy], &truth).map_err(|e| e.to_string())?;
    let (p, r) = (report.methods[0].precision, report.methods[0].recall);
    if (p, r) != (0.6, 0.75) {
        return Err(format!("toy case gave P {p} R {r}"));
    }
    let mut sweeps = 0;
    let bench = char_benchmark(ctx.root.path(), &ctx.manifest, "heavy", &SegmentParams::default(), Some("base")).map_err(|e| e.to_string())?;
    let (corpus_report, _) =
        compare_methods(&bench.corpus, &bench.queries, &bench.truth, &Method::ALL, TauPolicy::BestF1, &WordParams::default())
            .map_err(|e| e.to_string())?;
    let mut rng = stream(42, "acceptance-sweep", 0);
    let mut reports = vec![corpus_report];
    for i in 0..50 {
        let mut t = Truth::new();
        let mut results = Vec::new();
        for q in 0..rng.random_range(1..5) {
            let id = format!("q{q}");
            let mut list: Vec<Ranked> = (0..rng.random_range(0..12)).map(|j| Ranked { id: format!("{id}-{j}"), value: f64::from(rng.random_range(0..5u8)) }).collect();
            list.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.id.cmp(&b.id)));
            t.insert(id.clone(), list.iter().filter(|_| rng.random_bool(0.4)).map(|x| x.id.clone()).chain([format!("{id}-x{i}")]).collect());
            results.push(SpotResult { query_id: id, method: Method::Xor, ranked: list, threshold: None, matched: 0 });
        }
        reports.push(evaluate(&results, &t).map_err(|e| e.to_string())?);
    }
    for rep in &reports {
        for m in &rep.methods {
            sweeps += 1;
            if m.pr_curve.windows(2).any(|w| w[1].recall < w[0].recall || w[1].tau <= w[0].tau) {
                return Err(format!("a {:?} sweep has decreasing recall", m.method));
            }
        }
    }
    Ok(format!("toy P {p:.3} R {r:.3}; recall non-decreasing on {sweeps} sweeps"))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "distance transform exactness", known_gap: false, run: c1_distance_transform },
        Criterion { id: 2, name: "EDM oracle equivalence", known_gap: false, run: c2_edm_oracle },
        Criterion { id: 3, name: "fractal fixtures", known_gap: false, run: c3_fractal_fixtures },
        Criterion { id: 4, name: "wavelet Parseval", known_gap: false, run: c4_wavelet_parseval },
        Criterion { id: 5, name: "DTW correctness", known_gap: false, run: c5_dtw },
        Criterion { id: 6, name: "method ordering EDM >= XOR >= VPROJ", known_gap: false, run: c6_table_ordering },
        Criterion { id: 7, name: "font-feature robustness", known_gap: true, run: c7_font_robustness },
        Criterion { id: 8, name: "segmentation recovery", known_gap: false, run: c8_segmentation },
        Criterion { id: 9, name: "clustering properties", known_gap: false, run: c9_clustering },
        Criterion { id: 10, name: "pipeline determinism", known_gap: false, run: c10_determinism },
        Criterion { id: 11, name: "evaluation arithmetic", known_gap: false, run: c11_evaluation },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let root = tempfile::tempdir().expect("temp dir");
    let manifest = build_default_corpus(root.path(), 42).expect("default corpus");
    let ctx = Ctx { root, manifest };
    let mut fatal = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str()) || f == &c.id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)(&ctx);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  #{:<2} {}: {detail} [{secs:.1}s]", c.id, c.name),
            Err(detail) if c.known_gap => println!("FAIL  #{:<2} {} (known gap, not fatal): {detail} [{secs:.1}s]", c.id, c.name),
            Err(detail) => {
                fatal += 1;
                println!("FAIL  #{:<2} {}: {detail} [{secs:.1}s]", c.id, c.name);
            }
        }
    }
    if fatal > 0 {
        eprintln!("{fatal} acceptance criteria failed");
        std::process::exit(1);
    }
}
