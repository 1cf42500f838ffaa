use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};

use rcw_core::classifiers::{read_model, ModelFile};
use rcw_core::features::{build_dataset, read_labeled_csv, FeatureEncoding};
use rcw_core::trajdata::{parse_episode_csv, Dataset, Provenance};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Opens `path` for writing; an existing file is only replaced with `force`.
pub fn create_output(path: &Path, force: bool) -> CliResult<BufWriter<File>> {
    let file = if force {
        File::create(path)
    } else {
        File::create_new(path)
    };
    file.map(BufWriter::new).map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => CliError::Usage(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )),
        _ => CliError::io(path, e),
    })
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.toml");
    PathBuf::from(s)
}

/// Writes the configuration next to a CSV artifact. The sidecar is itself
/// a valid `--config` file.
pub fn write_sidecar(path: &Path, command: &str, cfg: &RunConfig) -> CliResult<()> {
    let side = sidecar_path(path);
    std::fs::write(
        &side,
        format!("# written by rcw {command}\n{}", cfg.to_toml()),
    )
    .map_err(|e| CliError::io(&side, e))
}

pub fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

/// Reads a labeled feature CSV, or an episode CSV which is then labeled
/// and featurized with the configured encoding.
pub fn load_dataset(path: &Path, cfg: &RunConfig) -> CliResult<Dataset> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::io(path, e))?;
    let in_file = |e: rcw_core::Error| CliError::Data(format!("{}: {e}", path.display()));
    if text.starts_with("episode_id") {
        let episodes =
            parse_episode_csv(text.as_bytes(), cfg.units.into(), None).map_err(in_file)?;
        build_dataset(&episodes, &cfg.encoding()?, Provenance::Ingested, None).map_err(in_file)
    } else {
        read_labeled_csv(text.as_bytes()).map_err(in_file)
    }
}

pub fn load_model(path: &Path) -> CliResult<ModelFile> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_model(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Feature encoding a model was trained with, from its metadata.
pub fn model_encoding(model: &ModelFile) -> CliResult<FeatureEncoding> {
    match model.meta.get("no_threat_cap") {
        None => Ok(FeatureEncoding::default()),
        Some(v) => {
            let cap = v.parse().map_err(|_| {
                CliError::Data(format!("model no_threat_cap '{v}' is not a number"))
            })?;
            FeatureEncoding::new(cap).map_err(|e| CliError::Data(e.to_string()))
        }
    }
}
