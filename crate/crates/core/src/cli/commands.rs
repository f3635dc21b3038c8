use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::*;
use crate::clustering::{kmeans, leader_cluster, purity, quantization_error, som_initial, som_map, som_train, zoning_vector};
use crate::clustering::{ClusterReport, SomParams};
use crate::corpus::{build_corpus, load_atlas, load_manifest, CorpusConfig, CorpusManifest, GlyphAtlas};
use crate::features::{fractal_signature, wavelet_energy_features, FeatureRecord};
use crate::imgcore::{load_image, save_image, BinaryImage, GrayImage, ImageFormat};
use crate::matchers::{PreparedGlyph, WordParams};
use crate::segmenter::{normalize_glyph, read_glyph_set, write_glyph_set, Glyph};
use crate::spotting::{
    char_benchmark, compare_methods, font_windows, fontspot_eval, preprocess, segment_corpus_page, segment_page, spot,
    window_features, word_benchmark, Cutoff, EvalReport, SegmentParams, SpotResult,
};

/// Longest precision/recall curve kept in persisted reports.
const MAX_CURVE_POINTS: usize = 512;

#[derive(Serialize)]
struct RunMetadata<'a, P: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    argv: &'a [String],
    seed: u64,
    params: &'a P,
    resolved: Value,
    inputs: Vec<InputDigest>,
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct SpotRecord<'a> {
    query_id: &'a str,
    method: Method,
    threshold: Option<f64>,
    matches: &'a [crate::spotting::Ranked],
}

pub(super) fn execute(command: &Command, argv: &[String]) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => synth(a, argv),
        Command::Preprocess(a) => preprocess_cmd(a, argv),
        Command::Segment(a) => segment_cmd(a, argv),
        Command::Features(a) => features_cmd(a, argv),
        Command::Spot(a) => spot_cmd(a, argv),
        Command::Fontspot(a) => fontspot_cmd(a, argv),
        Command::Cluster(a) => cluster_cmd(a, argv),
        Command::Eval(a) => eval_cmd(a, argv),
        Command::Pipeline(a) => pipeline(a, argv),
    }
}

fn synth(a: &SynthArgs, argv: &[String]) -> Result<(), CliError> {
    let atlas = match &a.atlas {
        Some(dir) => load_atlas(&require(dir)?)?,
        None => GlyphAtlas::builtin(),
    };
    let cfg = CorpusConfig {
        target_glyphs: a.target_glyphs,
        queries: a.queries,
        extra_occurrences: a.extra_occurrences,
        vocabulary: a.vocabulary,
        ..CorpusConfig::new(a.seed)
    };
    let manifest = build_corpus(&atlas, &cfg, &a.out)?;
    println!(
        "{} pages, {} glyphs, {} queries, {} occurrences",
        manifest.pages.len(),
        manifest.glyph_count(),
        manifest.queries.len(),
        manifest.occurrence_count()
    );
    let inputs: Vec<&Path> = a.atlas.iter().map(PathBuf::as_path).collect();
    write_run(&a.out, "synth", argv, a.seed, a, json!({ "config": cfg }), &inputs)
}

fn preprocess_cmd(a: &PreprocessArgs, argv: &[String]) -> Result<(), CliError> {
    fs::create_dir_all(&a.out)?;
    for input in &a.input {
        let bin = preprocess(&load_image(require(input)?)?, a.sigma)?;
        save_image(&GrayImage::from_binary(&bin), a.out.join(format!("{}.pgm", stem(input))), ImageFormat::Pgm)?;
    }
    let inputs: Vec<&Path> = a.input.iter().map(PathBuf::as_path).collect();
    write_run(&a.out, "preprocess", argv, DEFAULT_SEED, a, json!({ "sigma": a.sigma }), &inputs)
}

fn segment_cmd(a: &SegmentArgs, argv: &[String]) -> Result<(), CliError> {
    let params = a.segment.params();
    fs::create_dir_all(&a.out)?;
    let mut glyphs = Vec::new();
    for input in &a.input {
        let img = load_image(require(input)?)?;
        let bin = if a.binary { BinaryImage::from_fn(img.width(), img.height(), |x, y| img.get(x, y) < 128) } else { preprocess(&img, params.sigma)? };
        let seg = segment_page(&bin, &params)?;
        let name = stem(input);
        write_json(&a.out.join(format!("{name}.json")), &seg)?;
        for (i, c) in seg.chars().enumerate() {
            let mut g = normalize_glyph(&bin, c, params.side)?;
            g.id = format!("{name}/g{i:05}");
            g.source_id = name.clone();
            glyphs.push(g);
        }
        info!("{name}: {} blocks, {} lines, {} words", seg.blocks.len(), seg.lines.len(), seg.words.len());
    }
    write_glyph_set(&a.out.join("glyphs"), &glyphs)?;
    println!("{} glyphs from {} pages", glyphs.len(), a.input.len());
    let inputs: Vec<&Path> = a.input.iter().map(PathBuf::as_path).collect();
    write_run(&a.out, "segment", argv, DEFAULT_SEED, a, json!({ "segment": params }), &inputs)
}

fn features_cmd(a: &FeaturesArgs, argv: &[String]) -> Result<(), CliError> {
    let params = a.font.params();
    let mut samples: Vec<(String, GrayImage)> = Vec::new();
    let mut inputs: Vec<&Path> = Vec::new();
    if let Some(dir) = &a.glyphs {
        samples.extend(read_glyph_set(&require(dir)?)?.into_iter().map(|g| (g.id, GrayImage::from_binary(&g.grid))));
        inputs.push(dir);
    }
    for input in &a.input {
        let name = stem(input);
        let tiles = font_windows(&load_image(require(input)?)?, &params)?;
        samples.extend(tiles.into_iter().enumerate().map(|(i, t)| (format!("{name}/t{i:03}"), t)));
        inputs.push(input);
    }
    fs::create_dir_all(&a.out)?;
    let mut records = Vec::new();
    for &e in &a.extractors {
        let from_glyphs = a.glyphs.is_some();
        let batch: Vec<FeatureRecord> = samples
            .par_iter()
            .map(|(id, img)| {
                let fv = if from_glyphs {
                    match e {
                        crate::features::Extractor::FractalSig => fractal_signature(img, params.k)?,
                        crate::features::Extractor::WaveletEnergy => wavelet_energy_features(img, params.levels)?,
                    }
                } else {
                    window_features(img, e, &params)?
                };
                Ok(FeatureRecord::new(id.clone(), &fv))
            })
            .collect::<Result<_, CliError>>()?;
        records.extend(batch);
    }
    write_jsonl(&a.out.join("features.jsonl"), &records)?;
    println!("{} feature records", records.len());
    write_run(&a.out, "features", argv, DEFAULT_SEED, a, json!({ "font": params }), &inputs)
}

fn spot_cmd(a: &SpotArgs, argv: &[String]) -> Result<(), CliError> {
    let corpus = read_glyph_set(&require(&a.glyphs)?)?;
    let mut inputs: Vec<&Path> = vec![&a.glyphs];
    let queries: Vec<Glyph> = match &a.queries {
        Some(dir) => {
            inputs.push(dir);
            read_glyph_set(&require(dir)?)?
        }
        None => a
            .query
            .iter()
            .map(|id| corpus.iter().find(|g| &g.id == id).cloned().ok_or_else(|| CliError::Data(format!("no glyph with id '{id}'"))))
            .collect::<Result<_, _>>()?,
    };
    let cutoff = match (a.tau, a.top_k) {
        (None, None) => Cutoff::TopK(10),
        (tau, k) => Cutoff::from_options(tau, k)?,
    };
    let params = WordParams::default();
    let results: Vec<SpotResult> =
        queries.par_iter().map(|q| spot(q, &corpus, a.method, cutoff, &params)).collect::<Result<_, _>>()?;
    fs::create_dir_all(&a.out)?;
    write_spot_results(&a.out.join("results.jsonl"), &results)?;
    for r in &results {
        println!("{}: {} matches", r.query_id, r.matched);
    }
    write_run(&a.out, "spot", argv, DEFAULT_SEED, a, json!({ "cutoff": cutoff }), &inputs)
}

fn fontspot_cmd(a: &FontspotArgs, argv: &[String]) -> Result<(), CliError> {
    let manifest = read_manifest(&a.corpus)?;
    let params = a.font.params();
    let report = fontspot_eval(&a.corpus, &manifest, &a.train_tier, &a.test_tier, &a.extractors, &params)?;
    fs::create_dir_all(&a.out)?;
    write_json(&a.out.join("fontspot.json"), &report)?;
    let table = report.to_table();
    fs::write(a.out.join("fontspot.txt"), &table)?;
    print!("{table}");
    write_run(&a.out, "fontspot", argv, manifest.seed, a, json!({ "font": params }), &[&a.corpus])
}

fn cluster_cmd(a: &ClusterArgs, argv: &[String]) -> Result<(), CliError> {
    let glyphs = read_glyph_set(&require(&a.glyphs)?)?;
    fs::create_dir_all(&a.out)?;
    let summary = cluster_glyphs(&glyphs, &a.cluster, a.seed, &a.out)?;
    println!("{} classes, purity {}", summary["classes"], summary["purity"]);
    write_run(&a.out, "cluster", argv, a.seed, a, summary, &[&a.glyphs])
}

fn eval_cmd(a: &EvalArgs, argv: &[String]) -> Result<(), CliError> {
    let manifest = read_manifest(&a.corpus)?;
    let params = a.segment.params();
    fs::create_dir_all(&a.out)?;
    let (report, _) = spot_and_evaluate(&a.corpus, &manifest, &a.tier, a.unit, &a.query_font, &a.methods, a.tau_policy, &params)?;
    write_report(&a.out, "eval", &report)?;
    write_run(&a.out, "eval", argv, manifest.seed, a, json!({ "segment": params }), &[&a.corpus])
}

/// Runs spotting for every method and evaluates it against the corpus truth.
#[allow(clippy::too_many_arguments)]
fn spot_and_evaluate(
    root: &Path,
    manifest: &CorpusManifest,
    tier: &str,
    unit: Unit,
    query_font: &str,
    methods: &[Method],
    policy: TauPolicy,
    params: &SegmentParams,
) -> Result<(EvalReport, Vec<SpotResult>), CliError> {
    let font = (query_font != "all").then_some(query_font);
    if let Some(f) = font {
        if unit == Unit::Char && !manifest.pages.iter().any(|p| p.font_id == f) {
            return Err(CliError::Data(format!("no pages in font '{f}'")));
        }
    }
    Ok(match unit {
        Unit::Char => {
            let bench = char_benchmark(root, manifest, tier, params, font)?;
            compare_methods(&bench.corpus, &bench.queries, &bench.truth, methods, policy, &WordParams::default())?
        }
        Unit::Word => {
            let bench = word_benchmark(root, manifest, tier, params)?;
            if bench.missing > 0 {
                info!("{} occurrences were not segmented as words", bench.missing);
            }
            compare_methods(&bench.corpus, &bench.queries, &bench.truth, methods, policy, &WordParams::default())?
        }
    })
}

fn pipeline(a: &PipelineArgs, argv: &[String]) -> Result<(), CliError> {
    let manifest_path = a.corpus.join("manifest.json");
    if !manifest_path.exists() {
        if !a.synth {
            return Err(CliError::Io(format!("stage corpus: {} not found; pass --synth to generate it", manifest_path.display())));
        }
        info!("generating corpus in {}", a.corpus.display());
        build_corpus(&GlyphAtlas::builtin(), &CorpusConfig::new(a.seed), &a.corpus).map_err(|e| CliError::from(e).in_stage("corpus"))?;
    }
    let manifest = read_manifest(&a.corpus).map_err(|e| e.in_stage("corpus"))?;
    if manifest.tier(&a.tier).is_none() {
        return Err(CliError::Data(format!("stage corpus: unknown tier '{}'", a.tier)));
    }
    let params = a.segment.params();
    fs::create_dir_all(&a.out)?;

    let pre_dir = a.out.join("preprocessed");
    let seg_dir = a.out.join("segmentation");
    fs::create_dir_all(&pre_dir)?;
    fs::create_dir_all(&seg_dir)?;
    let segmented: Vec<(String, BinaryImage, crate::spotting::PageSegmentation)> = manifest
        .pages
        .par_iter()
        .map(|p| {
            let (bin, seg) = segment_corpus_page(&a.corpus, p, &a.tier, &params)?;
            Ok((p.page_id.clone(), bin, seg))
        })
        .collect::<Result<_, CliError>>()
        .map_err(|e| e.in_stage("segment"))?;
    for (id, bin, seg) in &segmented {
        save_image(&GrayImage::from_binary(bin), pre_dir.join(format!("{id}.pgm")), ImageFormat::Pgm)
            .map_err(|e| CliError::from(e).in_stage("preprocess"))?;
        write_json(&seg_dir.join(format!("{id}.json")), seg).map_err(|e| e.in_stage("segment"))?;
    }

    let chars = char_benchmark(&a.corpus, &manifest, &a.tier, &params, (a.query_font != "all").then_some(a.query_font.as_str()))
        .map_err(|e| CliError::from(e).in_stage("normalize"))?;
    write_glyph_set(&a.out.join("glyphs"), &chars.corpus).map_err(|e| CliError::from(e).in_stage("normalize"))?;
    let mut summary = json!({
        "pages": segmented.len(),
        "glyphs": chars.corpus.len(),
        "segment": params,
    });

    if a.stages.contains(&Stage::Spot) {
        let (report, results) =
            spot_and_evaluate(&a.corpus, &manifest, &a.tier, a.unit, &a.query_font, &a.methods, a.tau_policy, &params)
                .map_err(|e| e.in_stage("spot"))?;
        write_spot_results(&a.out.join("spot_results.jsonl"), &results)?;
        write_report(&a.out, "eval", &report).map_err(|e| e.in_stage("evaluate"))?;
        summary["spot"] = json!({ "queries": report.queries, "relevant": report.relevant });
    }
    if a.stages.contains(&Stage::Fontspot) {
        let font = a.font.params();
        let report = fontspot_eval(&a.corpus, &manifest, &a.train_tier, &a.tier, &a.extractors, &font)
            .map_err(|e| CliError::from(e).in_stage("fontspot"))?;
        write_json(&a.out.join("fontspot.json"), &report)?;
        fs::write(a.out.join("fontspot.txt"), report.to_table())?;
        print!("{}", report.to_table());
        summary["fontspot"] = json!(font);
    }
    if a.stages.contains(&Stage::Cluster) {
        let s = cluster_glyphs(&chars.corpus, &a.cluster, a.seed, &a.out).map_err(|e| e.in_stage("cluster"))?;
        println!("{} classes, purity {}", s["classes"], s["purity"]);
        summary["cluster"] = s;
    }
    write_run(&a.out, "pipeline", argv, a.seed, a, summary, &[&a.corpus])
}

/// Clusters `glyphs` and writes `clusters.json`; returns a summary.
fn cluster_glyphs(glyphs: &[Glyph], opts: &ClusterOpts, seed: u64, out: &Path) -> Result<Value, CliError> {
    if glyphs.is_empty() {
        return Err(CliError::Data("no glyphs to cluster".into()));
    }
    let vectors = || -> Vec<Vec<f64>> { glyphs.par_iter().map(|g| zoning_vector(&g.grid, opts.zones)).collect() };
    let (classes, params, extra): (Vec<Vec<usize>>, Value, Value) = match opts.algorithm {
        Algorithm::Kmeans => {
            let v = vectors();
            let fit = kmeans(&v, opts.k, seed, opts.max_iter)?;
            let mut classes = vec![Vec::new(); opts.k];
            for (i, &l) in fit.labels.iter().enumerate() {
                classes[l].push(i);
            }
            (
                classes,
                json!({ "k": opts.k, "max_iter": opts.max_iter, "zones": opts.zones }),
                json!({ "inertia": fit.inertia, "inertia_history": fit.history }),
            )
        }
        Algorithm::Som => {
            let v = vectors();
            let sp = SomParams { rows: opts.rows, cols: opts.cols, epochs: opts.epochs, seed, ..SomParams::default() };
            let initial = quantization_error(&som_initial(&v, &sp)?, &v);
            let grid = som_train(&v, &sp)?;
            let mut classes = vec![Vec::new(); opts.rows * opts.cols];
            for (i, x) in v.iter().enumerate() {
                let (r, c) = som_map(&grid, x)?;
                classes[r * opts.cols + c].push(i);
            }
            (
                classes,
                json!({ "som": sp, "zones": opts.zones }),
                json!({ "quantization_error_initial": initial, "quantization_error": quantization_error(&grid, &v) }),
            )
        }
        Algorithm::Leader => {
            let prepared: Vec<PreparedGlyph> = glyphs.par_iter().map(PreparedGlyph::new).collect();
            let method = opts.cluster_method;
            // Dissimilarities of well-formed grids cannot fail; treat a failure as infinitely far.
            let d = |x: &PreparedGlyph, y: &PreparedGlyph| x.dissimilarity(y, method).unwrap_or(f64::INFINITY);
            let classes = leader_cluster(&prepared, d, opts.cluster_tau)?;
            (classes, json!({ "tau": opts.cluster_tau, "method": method }), Value::Null)
        }
    };
    let labels: Vec<Option<String>> = glyphs.iter().map(|g| g.label.clone()).collect();
    let purity = purity(&classes, &labels);
    let report = ClusterReport {
        method: serde_json::to_value(opts.algorithm)?.as_str().unwrap_or_default().to_string(),
        params,
        seed,
        classes: classes.iter().filter(|c| !c.is_empty()).map(|c| c.iter().map(|&i| glyphs[i].id.clone()).collect()).collect(),
    };
    write_json(&out.join("clusters.json"), &json!({ "report": report, "purity": purity, "diagnostics": extra }))?;
    Ok(json!({ "classes": report.classes.len(), "purity": purity }))
}

fn read_manifest(root: &Path) -> Result<CorpusManifest, CliError> {
    Ok(load_manifest(&require(&root.join("manifest.json"))?)?)
}

/// Missing inputs are I/O failures, not data failures.
fn require(path: &Path) -> Result<PathBuf, CliError> {
    if path.exists() {
        Ok(path.to_path_buf())
    } else {
        Err(CliError::Io(format!("{}: no such file or directory", path.display())))
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn write_spot_results(path: &Path, results: &[SpotResult]) -> Result<(), CliError> {
    let records: Vec<SpotRecord> = results
        .iter()
        .map(|r| SpotRecord { query_id: &r.query_id, method: r.method, threshold: r.threshold, matches: r.matches() })
        .collect();
    write_jsonl(path, &records)
}

/// Writes `<name>.json` and `<name>.txt` and prints the table.
fn write_report(dir: &Path, name: &str, report: &EvalReport) -> Result<(), CliError> {
    let mut thinned = report.clone();
    for m in &mut thinned.methods {
        m.pr_curve = thin(&m.pr_curve, MAX_CURVE_POINTS);
    }
    write_json(&dir.join(format!("{name}.json")), &thinned)?;
    let table = report.to_table();
    fs::write(dir.join(format!("{name}.txt")), &table)?;
    print!("{table}");
    Ok(())
}

/// At most `max` evenly spaced points, always keeping both ends.
fn thin<T: Clone>(points: &[T], max: usize) -> Vec<T> {
    if points.len() <= max || max < 2 {
        return points.to_vec();
    }
    (0..max).map(|i| points[i * (points.len() - 1) / (max - 1)].clone()).collect()
}

fn write_run<P: Serialize>(
    out: &Path,
    subcommand: &'static str,
    argv: &[String],
    seed: u64,
    params: &P,
    resolved: Value,
    inputs: &[&Path],
) -> Result<(), CliError> {
    let inputs = inputs
        .iter()
        .map(|p| Ok(InputDigest { path: p.to_string_lossy().replace('\\', "/"), sha256: digest_path(p)? }))
        .collect::<Result<_, CliError>>()?;
    let meta = RunMetadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        argv,
        seed,
        params,
        resolved,
        inputs,
    };
    write_json(&out.join(RUN_METADATA), &meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_keeps_ends() {
        let v: Vec<usize> = (0..1000).collect();
        let t = thin(&v, 5);
        assert_eq!(t, vec![0, 249, 499, 749, 999]);
        assert_eq!(thin(&v[..3], 5), vec![0, 1, 2]);
    }

    #[test]
    fn config_parsing() {
        let c = parse_config("# defaults\nsigma = 1.5\n\nmin_gap=2\n--binary = true\n").unwrap();
        assert_eq!(
            c,
            vec![("sigma".into(), "1.5".into()), ("min-gap".into(), "2".into()), ("binary".into(), "true".into())]
        );
        assert!(matches!(parse_config("sigma"), Err(CliError::Usage(_))));
    }
}
