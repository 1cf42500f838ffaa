use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rcw_core::features::{build_dataset, write_labeled_csv};
use rcw_core::trajdata::{generate_synthetic_dataset, write_episode_csv, Provenance};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::io::{create_output, write_err, write_sidecar};

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Episode CSV to write.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the labeled feature CSV here.
    #[arg(long)]
    pub labeled: Option<PathBuf>,
    /// Number of episodes (overrides the config).
    #[arg(long)]
    pub episodes: Option<usize>,
}

pub fn run(args: &GenArgs, cfg: &RunConfig, force: bool) -> CliResult<()> {
    let mut cfg = cfg.clone();
    if let Some(n) = args.episodes {
        cfg.generator.n_episodes = n;
    }
    let episodes = generate_synthetic_dataset(&cfg.generator.to_core(), cfg.seed)?;

    let mut out = create_output(&args.out, force)?;
    write_episode_csv(&episodes, &mut out).map_err(write_err(&args.out))?;
    out.flush().map_err(write_err(&args.out))?;
    write_sidecar(&args.out, "gen", &cfg)?;
    let samples: usize = episodes.iter().map(|e| e.samples.len()).sum();
    println!(
        "wrote {} episodes ({samples} samples) to {}",
        episodes.len(),
        args.out.display()
    );

    if let Some(path) = &args.labeled {
        let ds = build_dataset(
            &episodes,
            &cfg.encoding()?,
            Provenance::Synthetic,
            Some(cfg.seed),
        )?;
        let mut out = create_output(path, force)?;
        write_labeled_csv(&ds, &mut out).map_err(write_err(path))?;
        write_sidecar(path, "gen", &cfg)?;
        let (w, s) = ds.class_counts();
        println!(
            "wrote {} labeled samples ({w} warning, {s} safe, {:.2}:1) to {}",
            ds.len(),
            s as f64 / w.max(1) as f64,
            path.display()
        );
    }
    Ok(())
}
