use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use ffiredt::evalharness::{
    bench_distances, bench_extractors, distance_timing_csv, extractor_timing_csv, leave_one_out_scores, pca_project,
    precision_recall_curve, roc_curve, run_grid, CvConfig, EvaluationReport, TrainSplit,
};
use ffiredt::featurestore::to_storage_precision;
use ffiredt::synth::{write_corpus, SyntheticSpec};
use ffiredt::{
    classify, decode_image, extract, Collection, DescriptorId, EvaluationFunctionId, FeatureStore, FeatureVector, Label,
    RasterImage, StoredInstance,
};
use rayon::prelude::*;

use crate::manifest::{read_manifest, ManifestRow};
use crate::stores::{open_store, read_index, store_path, write_index, IndexRow, INDEX_FILE};
use crate::{BenchMode, Command, Context, EvaluateArgs};

pub fn run(ctx: &Context, command: Command) -> Result<ExitCode> {
    match command {
        Command::Extract { manifest, fems } => cmd_extract(ctx, &manifest, &fems.unwrap_or(DescriptorId::ALL.to_vec())),
        Command::Classify {
            store,
            fem,
            ef,
            k,
            images,
        } => cmd_classify(ctx, &store, fem, ef, k as usize, &images),
        Command::Query {
            store,
            fem,
            ef,
            k,
            image,
        } => cmd_query(ctx, &store, fem, ef, k as usize, &image),
        Command::Evaluate(args) => cmd_evaluate(ctx, &args),
        Command::Synth {
            per_class,
            width,
            height,
            modes,
        } => {
            let spec = SyntheticSpec {
                per_class,
                seed: ctx.global.seed,
                width,
                height,
                modes: modes.unwrap_or_else(|| SyntheticSpec::default().modes),
                ..SyntheticSpec::default()
            };
            cmd_synth(ctx, &spec)
        }
        Command::Bench {
            mode,
            manifest,
            evals,
            dim,
        } => cmd_bench(ctx, mode, manifest.as_deref(), evals, dim),
    }
}

fn load_image(path: &Path) -> Result<RasterImage> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_image(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// Extracts `fems` from every manifest row in parallel. Image ids are row
/// positions. Vectors are rounded to storage precision.
fn extract_rows(
    ctx: &Context,
    rows: &[ManifestRow],
    fems: &[DescriptorId],
) -> Vec<Result<Vec<ffiredt::Result<FeatureVector>>>> {
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| {
            let img = load_image(&row.path)?.with_id(i as u64);
            Ok(fems
                .iter()
                .map(|&f| extract(&img, f, &ctx.config).map(to_storage_precision))
                .collect())
        })
        .collect()
}

fn cmd_extract(ctx: &Context, manifest: &Path, fems: &[DescriptorId]) -> Result<ExitCode> {
    let dir = ctx.global.out.clone().unwrap_or_else(|| PathBuf::from("store"));
    let rows = read_manifest(manifest)?;
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let existing: Vec<PathBuf> = fems.iter().map(|&f| store_path(&dir, f)).filter(|p| p.exists()).collect();
    if !existing.is_empty() {
        if !ctx.global.overwrite {
            bail!("{} already exists; pass --overwrite to replace", existing[0].display());
        }
        for p in &existing {
            std::fs::remove_file(p)?;
        }
    }

    let extracted = extract_rows(ctx, &rows, fems);
    let mut stores = fems
        .iter()
        .map(|&f| FeatureStore::open(store_path(&dir, f), f, ctx.config.dimension(f)))
        .collect::<ffiredt::Result<Vec<_>>>()?;
    let mut failed = vec![0usize; fems.len()];
    let mut index = Vec::new();
    for (i, (row, result)) in rows.iter().zip(extracted).enumerate() {
        let vectors = match result {
            Ok(v) => v,
            Err(e) => {
                log::warn!("skipping {}: {e:#}", row.path.display());
                failed.iter_mut().for_each(|f| *f += 1);
                continue;
            }
        };
        index.push(IndexRow {
            image_id: i as u64,
            path: row.path.display().to_string(),
            label: row.label,
        });
        for (j, v) in vectors.into_iter().enumerate() {
            match v {
                Ok(v) => stores[j].insert(StoredInstance::new(row.label, v))?,
                Err(e) => {
                    log::warn!("{} on {}: {e}", fems[j], row.path.display());
                    failed[j] += 1;
                }
            }
        }
    }
    write_index(&dir, &index)?;
    let mut out = csv::Writer::from_writer(std::io::stdout());
    out.write_record(["fem", "stored", "failed", "path"])?;
    for (store, fails) in stores.into_iter().zip(failed) {
        out.write_record([
            store.descriptor().code().to_string(),
            store.len().to_string(),
            fails.to_string(),
            store.path().display().to_string(),
        ])?;
        store.close()?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn query_vector(ctx: &Context, path: &Path, fem: DescriptorId) -> Result<FeatureVector> {
    let img = load_image(path)?;
    Ok(to_storage_precision(extract(&img, fem, &ctx.config)?))
}

fn cmd_classify(
    ctx: &Context,
    dir: &Path,
    fem: DescriptorId,
    ef: EvaluationFunctionId,
    k: usize,
    images: &[PathBuf],
) -> Result<ExitCode> {
    let store = open_store(dir, fem)?;
    if images.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    let results: Vec<Result<ffiredt::Classification>> = images
        .par_iter()
        .map(|p| Ok(classify(store.collection(), &query_vector(ctx, p, fem)?, k, ef)?))
        .collect();
    let mut out = csv::Writer::from_writer(std::io::stdout());
    out.write_record(["path", "label", "score"])?;
    let mut ok = true;
    for (path, r) in images.iter().zip(results) {
        match r {
            Ok(c) => out.write_record([path.display().to_string(), c.predicted.to_string(), format!("{:.6}", c.score)])?,
            Err(e) => {
                eprintln!("error: {}: {e:#}", path.display());
                ok = false;
            }
        }
    }
    out.flush()?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_query(
    ctx: &Context,
    dir: &Path,
    fem: DescriptorId,
    ef: EvaluationFunctionId,
    k: usize,
    image: &Path,
) -> Result<ExitCode> {
    let store = open_store(dir, fem)?;
    let index = read_index(dir)?;
    let hits = store.knn(&query_vector(ctx, image, fem)?, k, ef, None)?;
    let mut out = csv::Writer::from_writer(std::io::stdout());
    out.write_record(["rank", "image_id", "path", "label", "distance"])?;
    for (rank, n) in hits.neighbors.iter().enumerate() {
        let path = index.get(&n.image_id).map(|r| r.path.as_str()).unwrap_or("");
        out.write_record([
            (rank + 1).to_string(),
            n.image_id.to_string(),
            path.to_string(),
            n.label.to_string(),
            n.distance.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn load_corpora(
    ctx: &Context,
    args: &EvaluateArgs,
    fems: &[DescriptorId],
) -> Result<(BTreeMap<DescriptorId, Vec<StoredInstance>>, Vec<PathBuf>)> {
    let mut corpora = BTreeMap::new();
    if let Some(manifest) = &args.manifest {
        let rows = read_manifest(manifest)?;
        let extracted = extract_rows(ctx, &rows, fems);
        let mut paths = Vec::new();
        for (row, result) in rows.iter().zip(extracted) {
            let vectors = match result {
                Ok(v) => v,
                Err(e) => {
                    log::warn!("skipping {}: {e:#}", row.path.display());
                    continue;
                }
            };
            paths.push(row.path.clone());
            for (&fem, v) in fems.iter().zip(vectors) {
                match v {
                    Ok(v) if row.label.is_labeled() => {
                        corpora.entry(fem).or_insert_with(Vec::new).push(StoredInstance::new(row.label, v))
                    }
                    Ok(_) => {}
                    Err(e) => log::warn!("{fem} on {}: {e}", row.path.display()),
                }
            }
        }
        for &fem in fems {
            corpora.entry(fem).or_default();
        }
        return Ok((corpora, paths));
    }
    for &fem in fems {
        let store = open_store(&args.store, fem)?;
        let labeled = store.scan().iter().filter(|i| i.label.is_labeled()).cloned().collect();
        corpora.insert(fem, labeled);
    }
    let paths = read_index(&args.store)?.into_values().map(|r| PathBuf::from(r.path)).collect();
    Ok((corpora, paths))
}

fn cmd_evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<ExitCode> {
    let fems = args.fems.clone().unwrap_or(DescriptorId::ALL.to_vec());
    let efs = args.efs.clone().unwrap_or(EvaluationFunctionId::ALL.to_vec());
    let out_dir = ctx.global.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    let (corpora, image_paths) = load_corpora(ctx, args, &fems)?;
    if args.manifest.is_none() && !args.store.join(INDEX_FILE).exists() {
        log::info!("no index in {}; extraction timing unavailable", args.store.display());
    }

    let cfg = CvConfig {
        k: args.k as usize,
        folds: args.folds,
        seed: ctx.global.seed,
        split: if args.conventional_split {
            TrainSplit::AllButOne
        } else {
            TrainSplit::OneFold
        },
    };
    let grid = run_grid(&corpora, &efs, &cfg);
    print!("{}", grid.render_table());

    type Extras = (
        Option<(DescriptorId, EvaluationFunctionId, ffiredt::evalharness::PrCurve)>,
        Option<(DescriptorId, EvaluationFunctionId, ffiredt::evalharness::RocCurve)>,
        Option<(DescriptorId, ffiredt::evalharness::PcaProjection, Vec<(u64, Label)>)>,
    );
    let extras: Vec<Extras> = corpora
        .par_iter()
        .map(|(&fem, corpus)| {
            let Some(ef) = grid.best_ef(fem) else {
                return (None, None, None);
            };
            let warn = |what: &str, e: &dyn std::fmt::Display| log::warn!("{what} for {fem}x{ef}: {e}");
            let mut coll = Collection::new(fem, corpus.first().map_or(0, |i| i.vector.dim()));
            for inst in corpus {
                coll.insert(inst.clone()).expect("corpus ids are unique");
            }
            let pr = precision_recall_curve(&coll, corpus, ef)
                .map_err(|e| warn("precision-recall", &e))
                .ok()
                .map(|c| (fem, ef, c));
            let roc = leave_one_out_scores(corpus, ef, args.roc_k as usize)
                .and_then(|s| roc_curve(&s))
                .map_err(|e| warn("ROC", &e))
                .ok()
                .map(|c| (fem, ef, c));
            let vectors: Vec<FeatureVector> = corpus.iter().map(|i| i.vector.clone()).collect();
            let pca = pca_project(&vectors)
                .map_err(|e| log::info!("no PCA for {fem}: {e}"))
                .ok()
                .map(|p| (fem, p, corpus.iter().map(|i| (i.image_id, i.label)).collect()));
            (pr, roc, pca)
        })
        .collect();

    let mut report = EvaluationReport {
        grid,
        pr: Vec::new(),
        roc: Vec::new(),
        pca: Vec::new(),
        extraction: Vec::new(),
        distances: Vec::new(),
    };
    for (pr, roc, pca) in extras {
        report.pr.extend(pr);
        report.roc.extend(roc);
        report.pca.extend(pca);
    }
    if args.bench {
        report.distances = bench_distances(args.bench_evals, ffiredt::evalharness::DEFAULT_BENCH_DIM, ctx.global.seed);
        let images: Vec<RasterImage> = image_paths.iter().filter_map(|p| load_image(p).ok()).collect();
        if images.is_empty() {
            log::warn!("no readable images; extraction timing skipped");
        } else {
            report.extraction = bench_extractors(&images, &ctx.config)?;
        }
    }
    for path in report.write_dir(&out_dir)? {
        log::info!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(ctx: &Context, spec: &SyntheticSpec) -> Result<ExitCode> {
    let dir = ctx.global.out.clone().unwrap_or_else(|| PathBuf::from("synth"));
    let manifest = dir.join("manifest.csv");
    if manifest.exists() && !ctx.global.overwrite {
        bail!("{} already exists; pass --overwrite to replace", manifest.display());
    }
    let path = write_corpus(spec, &dir)?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(ctx: &Context, mode: BenchMode, manifest: Option<&Path>, evals: u64, dim: usize) -> Result<ExitCode> {
    let (name, csv) = match mode {
        BenchMode::Distance => {
            if evals < 1_000_000 {
                eprintln!("error: --evals must be at least 1000000");
                return Ok(ExitCode::from(1));
            }
            ("bench_distance.csv", distance_timing_csv(&bench_distances(evals, dim, ctx.global.seed))?)
        }
        BenchMode::Extract => {
            let Some(manifest) = manifest else {
                eprintln!("error: --mode extract requires --manifest");
                return Ok(ExitCode::from(1));
            };
            let mut images = Vec::new();
            for row in read_manifest(manifest)? {
                match load_image(&row.path) {
                    Ok(img) => images.push(img),
                    Err(e) => log::warn!("skipping {}: {e:#}", row.path.display()),
                }
            }
            ("bench_extract.csv", extractor_timing_csv(&bench_extractors(&images, &ctx.config)?)?)
        }
    };
    std::io::stdout().write_all(csv.as_bytes())?;
    if let Some(dir) = &ctx.global.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), &csv)?;
    }
    Ok(ExitCode::SUCCESS)
}
