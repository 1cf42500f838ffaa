use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use rcw_core::baselines::IndicatorKind;
use rcw_core::classifiers::{
    apply_cost_reweighting, train_c45, write_model, C45Params, ClassifierSpec, Model, ModelFile,
};
use rcw_core::evaluation::extract_critical_threshold;
use rcw_core::features::Feature;
use rcw_core::trajdata::Dataset;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{create_output, load_dataset, write_err};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled feature CSV or episode CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// rf, c45, knn, knnK or nb.
    #[arg(long, default_value = "rf")]
    pub method: String,
    /// Model file to write.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Grow the tree on this indicator only (ttc or tg) and report its
    /// root threshold.
    #[arg(long)]
    pub feature: Option<String>,
    /// Maximum tree depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Number of forest trees.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Neighbours for kNN.
    #[arg(long)]
    pub k: Option<usize>,
}

fn model_file(model: Model, method: &str, cfg: &RunConfig, data: &Path) -> ModelFile {
    let mut file = ModelFile::new(model);
    file.meta.insert("command".into(), "train".into());
    file.meta.insert("method".into(), method.into());
    file.meta.insert("data".into(), data.display().to_string());
    file.meta
        .insert("no_threat_cap".into(), format!("{:?}", cfg.no_threat_cap));
    for (k, v) in cfg.flatten() {
        file.meta.insert(format!("config.{k}"), v);
    }
    file
}

fn save(file: &ModelFile, path: &Path, force: bool) -> CliResult<()> {
    let mut out = create_output(path, force)?;
    write_model(file, &mut out).map_err(write_err(path))?;
    out.flush().map_err(write_err(path))?;
    println!("wrote {} model to {}", file.model.kind(), path.display());
    Ok(())
}

fn summary(model: &Model) -> String {
    match model {
        Model::Tree(t) => format!("tree with {} leaves, depth {}", t.n_leaves(), t.depth()),
        Model::Forest(f) => {
            let leaves: usize = f.trees.iter().map(|t| t.n_leaves()).sum();
            format!(
                "forest of {} trees, {:.1} leaves per tree",
                f.trees.len(),
                leaves as f64 / f.trees.len() as f64
            )
        }
        Model::Knn(k) => format!("kNN with k = {} over {} points", k.k, k.points.len()),
        Model::NaiveBayes(_) => "Gaussian naive Bayes".into(),
    }
}

/// Depth-limited (or pruned) C4.5 on one indicator.
fn extract(
    args: &TrainArgs,
    indicator: IndicatorKind,
    ds: &Dataset,
    cfg: &RunConfig,
    force: bool,
) -> CliResult<()> {
    if args.method != "c45" {
        return Err(CliError::Usage("--feature needs --method c45".into()));
    }
    let cost = cfg.cost_matrix()?;
    let threshold = match extract_critical_threshold(indicator, ds, &cost, args.depth) {
        Ok(t) => t,
        Err(rcw_core::Error::NoSplit) => {
            return Err(CliError::Data(format!(
                "no {indicator} split lowers the weighted cost on this data"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let feature = Feature::from_index(indicator.feature_index()).expect("indicator column");
    println!(
        "critical {} threshold: {threshold} {}",
        feature.name(),
        feature.unit()
    );
    if let Some(path) = &args.out {
        let params = C45Params {
            prune: args.depth.is_none(),
            max_depth: args.depth,
            features: vec![indicator.feature_index()],
            ..cfg.c45_params()
        };
        let tree = train_c45(&apply_cost_reweighting(&ds.instances, &cost), &params)?;
        let mut file = model_file(Model::Tree(tree), "c45", cfg, &args.data);
        file.meta.insert("feature".into(), indicator.to_string());
        file.meta
            .insert("critical_threshold".into(), format!("{threshold:?}"));
        save(&file, path, force)?;
    }
    Ok(())
}

pub fn run(args: &TrainArgs, cfg: &RunConfig, force: bool) -> CliResult<()> {
    let mut cfg = cfg.clone();
    if let Some(n) = args.trees {
        cfg.forest.n_trees = n;
    }
    if let Some(k) = args.k {
        cfg.knn.k = k;
    }
    let ds = load_dataset(&args.data, &cfg)?;
    let (w, s) = ds.class_counts();
    println!(
        "{} instances: {w} warning, {s} safe; cost {}",
        ds.len(),
        cfg.cost
    );

    if let Some(f) = &args.feature {
        let indicator: IndicatorKind = f
            .parse()
            .map_err(|e: rcw_core::Error| CliError::Usage(e.to_string()))?;
        return extract(args, indicator, &ds, &cfg, force);
    }
    if args.depth.is_some() {
        cfg.c45.max_depth = args.depth;
        cfg.forest.max_depth = args.depth;
    }
    cfg.validate()?;
    let spec = cfg.learner(&args.method)?.ok_or_else(|| {
        CliError::Usage(format!(
            "'{}' is not a trainable method (rf, c45, knn, knnK, nb)",
            args.method
        ))
    })?;
    if let (ClassifierSpec::Knn { k }, true) = (&spec, args.depth.is_some()) {
        return Err(CliError::Usage(format!("--depth does not apply to knn{k}")));
    }
    let weighted = apply_cost_reweighting(&ds.instances, &cfg.cost_matrix()?);
    let model = spec.train(&weighted, cfg.seed)?;
    println!(
        "trained {} (seed {}): {}",
        spec.id(),
        cfg.seed,
        summary(&model)
    );
    if let Some(path) = &args.out {
        save(
            &model_file(model, &spec.id(), &cfg, &args.data),
            path,
            force,
        )?;
    }
    Ok(())
}
