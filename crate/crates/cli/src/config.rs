//! Run configuration: a TOML file, overridden by command-line flags.
//!
//! Every key is optional. A complete file with the defaults looks like
//!
//! ```toml
//! seed = 1
//! units = "si"
//! cost = "5:1"
//! no_threat_cap = 100.0
//!
//! [generator]
//! n_episodes = 84
//! sampling_period = 0.1
//! # ... every generator range as [low, high]
//!
//! [forest]
//! n_trees = 100
//! features_per_split = 3
//! bootstrap = true
//! min_leaf_weight = 2.0
//!
//! [c45]
//! prune = true
//! confidence = 0.25
//! min_leaf_weight = 2.0
//!
//! [knn]
//! k = 2
//!
//! [compare]
//! scenarios = [0.65, 0.7, 0.8]
//! seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
//! methods = ["rf", "c45", "knn", "nb", "ttc", "tg", "honda", "hirst-graham", "stop-distance", "mazda", "path"]
//! timing_repeats = 1
//!
//! [baselines.ttc]
//! threshold = 6.5
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rcw_core::baselines::{Baseline, BASELINE_NAMES};
use rcw_core::classifiers::{C45Params, ClassifierSpec, CostMatrix, ForestParams};
use rcw_core::evaluation::{ComparisonConfig, Method, Timing};
use rcw_core::features::FeatureEncoding;
use rcw_core::trajdata::{GeneratorConfig, SpeedUnits};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_ENV: &str = "RCW_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Si,
    Kmh,
}

impl From<Units> for SpeedUnits {
    fn from(u: Units) -> Self {
        match u {
            Units::Si => SpeedUnits::Si,
            Units::Kmh => SpeedUnits::Kmh,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub units: Units,
    /// Cost matrix as `FN:FP`.
    pub cost: String,
    pub no_threat_cap: f64,
    pub generator: GeneratorSection,
    pub forest: ForestSection,
    pub c45: C45Section,
    pub knn: KnnSection,
    pub compare: CompareSection,
    pub baselines: BTreeMap<String, BaselineOverride>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            units: Units::Si,
            cost: "5:1".into(),
            no_threat_cap: rcw_core::features::DEFAULT_NO_THREAT_CAP,
            generator: GeneratorSection::default(),
            forest: ForestSection::default(),
            c45: C45Section::default(),
            knn: KnnSection::default(),
            compare: CompareSection::default(),
            baselines: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub n_episodes: usize,
    pub sampling_period: f64,
    pub episode_duration: f64,
    pub event_onset: (f64, f64),
    pub cruise_speed: (f64, f64),
    pub headway: (f64, f64),
    pub speed_fluctuation: (f64, f64),
    pub fluctuation_period: (f64, f64),
    pub leader_decel: (f64, f64),
    pub speed_drop: (f64, f64),
    pub follower_decel: (f64, f64),
    pub reaction_time: (f64, f64),
    pub min_gap: (f64, f64),
    pub speed_noise_std: f64,
    pub range_noise_std: f64,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        GeneratorSection {
            n_episodes: g.n_episodes,
            sampling_period: g.sampling_period,
            episode_duration: g.episode_duration,
            event_onset: g.event_onset,
            cruise_speed: g.cruise_speed,
            headway: g.headway,
            speed_fluctuation: g.speed_fluctuation,
            fluctuation_period: g.fluctuation_period,
            leader_decel: g.leader_decel,
            speed_drop: g.speed_drop,
            follower_decel: g.follower_decel,
            reaction_time: g.reaction_time,
            min_gap: g.min_gap,
            speed_noise_std: g.speed_noise_std,
            range_noise_std: g.range_noise_std,
        }
    }
}

impl GeneratorSection {
    pub fn to_core(&self) -> GeneratorConfig {
        GeneratorConfig {
            n_episodes: self.n_episodes,
            sampling_period: self.sampling_period,
            episode_duration: self.episode_duration,
            event_onset: self.event_onset,
            cruise_speed: self.cruise_speed,
            headway: self.headway,
            speed_fluctuation: self.speed_fluctuation,
            fluctuation_period: self.fluctuation_period,
            leader_decel: self.leader_decel,
            speed_drop: self.speed_drop,
            follower_decel: self.follower_decel,
            reaction_time: self.reaction_time,
            min_gap: self.min_gap,
            speed_noise_std: self.speed_noise_std,
            range_noise_std: self.range_noise_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    pub n_trees: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub min_leaf_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
}

impl Default for ForestSection {
    fn default() -> Self {
        let p = ForestParams::default();
        ForestSection {
            n_trees: p.n_trees,
            features_per_split: p.features_per_split,
            bootstrap: p.bootstrap,
            min_leaf_weight: p.min_leaf_weight,
            max_depth: p.max_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct C45Section {
    pub prune: bool,
    pub confidence: f64,
    pub min_leaf_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
}

impl Default for C45Section {
    fn default() -> Self {
        let p = C45Params::default();
        C45Section {
            prune: p.prune,
            confidence: p.confidence,
            min_leaf_weight: p.min_leaf_weight,
            max_depth: p.max_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnSection {
    pub k: usize,
}

impl Default for KnnSection {
    fn default() -> Self {
        KnnSection { k: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Training fractions, each in (0, 1).
    pub scenarios: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<String>,
    /// Timed runs per cell; 0 disables timing.
    pub timing_repeats: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        let mut methods: Vec<String> = ["rf", "c45", "knn", "nb"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        methods.extend(BASELINE_NAMES.iter().map(|s| s.to_string()));
        CompareSection {
            scenarios: vec![0.65, 0.7, 0.8],
            seeds: (1..=10).collect(),
            methods,
            timing_repeats: 1,
        }
    }
}

/// Parameter overrides for a named baseline preset. Only the fields that
/// belong to the preset's family may be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ttc_crit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
}

fn set(slot: &mut f64, v: Option<f64>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl BaselineOverride {
    fn apply(&self, name: &str, b: Baseline) -> CliResult<Baseline> {
        let foreign = |fields: &[(&str, Option<f64>)]| -> CliResult<()> {
            match fields.iter().find(|(_, v)| v.is_some()) {
                Some((f, _)) => Err(CliError::Usage(format!(
                    "baseline '{name}' has no parameter '{f}'"
                ))),
                None => Ok(()),
            }
        };
        let kinematic = [
            ("a_f", self.a_f),
            ("a_l", self.a_l),
            ("tau", self.tau),
            ("d0", self.d0),
            ("tau2", self.tau2),
        ];
        let out = match b {
            Baseline::Perceptual(mut p) => {
                foreign(&[("ttc_crit", self.ttc_crit), ("offset", self.offset)])?;
                foreign(&kinematic)?;
                set(&mut p.threshold, self.threshold);
                Baseline::Perceptual(p)
            }
            Baseline::WarningDistance(mut p) => {
                foreign(&[("threshold", self.threshold)])?;
                foreign(&kinematic)?;
                set(&mut p.ttc_crit, self.ttc_crit);
                set(&mut p.offset, self.offset);
                Baseline::WarningDistance(p)
            }
            Baseline::StopDistance(p) | Baseline::Mazda(p) | Baseline::Path(p) => {
                foreign(&[
                    ("threshold", self.threshold),
                    ("ttc_crit", self.ttc_crit),
                    ("offset", self.offset),
                ])?;
                let mut p = p;
                set(&mut p.a_f, self.a_f);
                set(&mut p.a_l, self.a_l);
                set(&mut p.tau, self.tau);
                set(&mut p.d0, self.d0);
                set(&mut p.tau2, self.tau2);
                match b {
                    Baseline::StopDistance(_) => Baseline::StopDistance(p),
                    Baseline::Mazda(_) => Baseline::Mazda(p),
                    _ => Baseline::Path(p),
                }
            }
        };
        out.validate()?;
        Ok(out)
    }
}

impl RunConfig {
    /// Reads `path`, or the file named by `RCW_CONFIG`, or the defaults.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.cost_matrix()?;
        self.encoding()?;
        self.generator.to_core().validate()?;
        if self
            .compare
            .scenarios
            .iter()
            .any(|f| !(*f > 0.0 && *f < 1.0))
        {
            return Err(CliError::Usage(
                "scenario fractions must lie in (0, 1)".into(),
            ));
        }
        for name in self.baselines.keys() {
            self.baseline(name)?;
        }
        for m in &self.compare.methods {
            self.method(m)?;
        }
        self.forest_params().validate()?;
        self.c45_params().validate()?;
        Ok(())
    }

    pub fn cost_matrix(&self) -> CliResult<CostMatrix> {
        self.cost
            .parse()
            .map_err(|e: rcw_core::Error| CliError::Usage(format!("cost '{}': {e}", self.cost)))
    }

    pub fn encoding(&self) -> CliResult<FeatureEncoding> {
        Ok(FeatureEncoding::new(self.no_threat_cap)?)
    }

    pub fn timing(&self) -> Timing {
        match self.compare.timing_repeats {
            0 => Timing::Off,
            n => Timing::Repeats(n),
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        let f = &self.forest;
        ForestParams {
            n_trees: f.n_trees,
            features_per_split: f.features_per_split,
            bootstrap: f.bootstrap,
            min_leaf_weight: f.min_leaf_weight,
            max_depth: f.max_depth,
            ..Default::default()
        }
    }

    pub fn c45_params(&self) -> C45Params {
        let c = &self.c45;
        C45Params {
            prune: c.prune,
            confidence: c.confidence,
            min_leaf_weight: c.min_leaf_weight,
            max_depth: c.max_depth,
            ..Default::default()
        }
    }

    /// A baseline preset with any configured overrides applied.
    pub fn baseline(&self, name: &str) -> CliResult<Baseline> {
        let preset = Baseline::preset(name).map_err(|_| {
            CliError::Usage(format!(
                "unknown baseline '{name}' (known: {})",
                BASELINE_NAMES.join(", ")
            ))
        })?;
        match self.baselines.get(name) {
            Some(o) => o.apply(name, preset),
            None => Ok(preset),
        }
    }

    /// Learner spec for `rf`, `c45`, `knn`, `knnK` or `nb`.
    pub fn learner(&self, name: &str) -> CliResult<Option<ClassifierSpec>> {
        Ok(Some(match name {
            "rf" => ClassifierSpec::RandomForest(self.forest_params()),
            "c45" => ClassifierSpec::C45(self.c45_params()),
            "knn" => ClassifierSpec::Knn { k: self.knn.k },
            "nb" => ClassifierSpec::NaiveBayes,
            _ => match name.strip_prefix("knn").map(str::parse::<usize>) {
                Some(Ok(k)) if k > 0 => ClassifierSpec::Knn { k },
                Some(_) => return Err(CliError::Usage(format!("bad kNN method '{name}'"))),
                None => return Ok(None),
            },
        }))
    }

    pub fn method(&self, name: &str) -> CliResult<Method> {
        match self.learner(name)? {
            Some(spec) => Ok(Method::learner(spec)),
            None => Ok(Method::baseline(
                name,
                self.baseline(name).map_err(|_| unknown_method(name))?,
            )),
        }
    }

    pub fn comparison(&self) -> CliResult<ComparisonConfig> {
        Ok(ComparisonConfig {
            fractions: self.compare.scenarios.clone(),
            methods: self
                .compare
                .methods
                .iter()
                .map(|m| self.method(m))
                .collect::<CliResult<_>>()?,
            seeds: self.compare.seeds.clone(),
            cost: self.cost_matrix()?,
            timing: self.timing(),
            encoding: self.encoding()?,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// The configuration flattened to `(dotted.key, value)` pairs.
    pub fn flatten(&self) -> Vec<(String, String)> {
        let value = toml::Value::try_from(self).expect("configuration serializes");
        let mut out = Vec::new();
        flatten_into("", &value, &mut out);
        out
    }
}

fn unknown_method(name: &str) -> CliError {
    CliError::Usage(format!(
        "unknown method '{name}' (learners: rf, c45, knn, knnK, nb; baselines: {})",
        BASELINE_NAMES.join(", ")
    ))
}

fn flatten_into(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Parses a scenario given as a fraction (`0.8`) or a percentage (`80`).
pub fn parse_scenario(s: &str) -> CliResult<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad scenario '{s}'")))?;
    let f = if v >= 1.0 { v / 100.0 } else { v };
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(CliError::Usage(format!(
            "scenario '{s}' is not a training fraction in (0, 1)"
        )))
    }
}

/// Parses `1,2,5` or `1-10` (or a mix) into seeds.
pub fn parse_seeds(s: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Usage(format!("bad seed list '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) =
                    (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg: RunConfig =
            toml::from_str("seed = 9\n[forest]\nn_trees = 7\n[baselines.ttc]\nthreshold = 4.0\n")
                .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.forest.n_trees, 7);
        assert_eq!(cfg.forest.features_per_split, 3);
        match cfg.baseline("ttc").unwrap() {
            Baseline::Perceptual(p) => assert_eq!(p.threshold, 4.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_foreign_overrides() {
        assert!(toml::from_str::<RunConfig>("sed = 1\n").is_err());
        let cfg: RunConfig = toml::from_str("[baselines.honda]\ntau = 1.0\n").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        let cfg: RunConfig = toml::from_str("[baselines.nope]\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn method_names() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.method("knn").unwrap().id, "knn2");
        assert_eq!(cfg.method("knn5").unwrap().id, "knn5");
        assert_eq!(cfg.method("stop-distance").unwrap().id, "stop-distance");
        assert!(cfg.method("svm").is_err());
        assert!(cfg.method("knn0").is_err());
    }

    #[test]
    fn scenario_and_seed_lists() {
        assert_eq!(parse_scenario("80").unwrap(), 0.8);
        assert_eq!(parse_scenario("0.65").unwrap(), 0.65);
        assert!(parse_scenario("100").is_err());
        assert_eq!(parse_seeds("1-3,7").unwrap(), vec![1, 2, 3, 7]);
        assert!(parse_seeds("3-1").is_err());
    }

    #[test]
    fn flattened_keys() {
        let flat = RunConfig::default().flatten();
        assert!(flat.contains(&("forest.n_trees".into(), "100".into())));
        assert!(flat.contains(&("cost".into(), "\"5:1\"".into())));
    }
}
