//! The five classification features: follower speed, gap, relative speed,
//! time gap and time to collision.

use std::fmt;
use std::io::{Read, Write};

use crate::classifiers::LabeledInstance;
use crate::error::{Error, Result};
use crate::trajdata::{label_episode, ClassLabel, Dataset, Episode, Provenance, TrajectorySample};

pub const N_FEATURES: usize = 5;
pub const DEFAULT_NO_THREAT_CAP: f64 = 100.0;
pub const LABELED_HEADER: [&str; 6] = [
    "speed_kmh",
    "delta_x_m",
    "delta_v_ms",
    "tg_s",
    "ttc_s",
    "label",
];

const KMH_PER_MS: f64 = 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Speed = 0,
    DeltaX = 1,
    DeltaV = 2,
    TimeGap = 3,
    TimeToCollision = 4,
}

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Feature::Speed,
        Feature::DeltaX,
        Feature::DeltaV,
        Feature::TimeGap,
        Feature::TimeToCollision,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Feature> {
        Feature::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Speed => "Speed",
            Feature::DeltaX => "DeltaX",
            Feature::DeltaV => "DeltaV",
            Feature::TimeGap => "TimeGap",
            Feature::TimeToCollision => "TimeToCollision",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Feature::Speed => "km/h",
            Feature::DeltaX => "m",
            Feature::DeltaV => "m/s",
            Feature::TimeGap | Feature::TimeToCollision => "s",
        }
    }
}

impl std::str::FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "speed" | "speed_kmh" => Ok(Feature::Speed),
            "delta_x" | "deltax" | "range" => Ok(Feature::DeltaX),
            "delta_v" | "deltav" => Ok(Feature::DeltaV),
            "tg" | "timegap" | "time_gap" => Ok(Feature::TimeGap),
            "ttc" | "timetocollision" | "time_to_collision" => Ok(Feature::TimeToCollision),
            other => Err(Error::InvalidInput(format!("unknown feature '{other}'"))),
        }
    }
}

/// A time indicator that is undefined when there is no collision course.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Indicator {
    Seconds(f64),
    NoThreat,
}

impl Indicator {
    pub fn seconds(self) -> Option<f64> {
        match self {
            Indicator::Seconds(s) => Some(s),
            Indicator::NoThreat => None,
        }
    }

    pub fn is_no_threat(self) -> bool {
        self == Indicator::NoThreat
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indicator::Seconds(s) => write!(f, "{s} s"),
            Indicator::NoThreat => f.write_str("no threat"),
        }
    }
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::InvalidInput(format!(
            "{name} must be non-negative, got {v}"
        )));
    }
    Ok(())
}

/// Time to collision: gap over closing speed, `NoThreat` unless closing.
pub fn compute_ttc(delta_x: f64, v_f: f64, v_l: f64) -> Result<Indicator> {
    check_non_negative("delta_x", delta_x)?;
    check_non_negative("v_f", v_f)?;
    check_non_negative("v_l", v_l)?;
    if v_f > v_l {
        Ok(Indicator::Seconds(delta_x / (v_f - v_l)))
    } else {
        Ok(Indicator::NoThreat)
    }
}

/// Time gap: gap over follower speed, `NoThreat` for a stationary follower.
pub fn compute_tg(delta_x: f64, v_f: f64) -> Result<Indicator> {
    check_non_negative("delta_x", delta_x)?;
    check_non_negative("v_f", v_f)?;
    if v_f > 0.0 {
        Ok(Indicator::Seconds(delta_x / v_f))
    } else {
        Ok(Indicator::NoThreat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Follower speed, km/h.
    pub speed: f64,
    /// Gap, m.
    pub delta_x: f64,
    /// Leader minus follower speed, m/s; negative when closing.
    pub delta_v: f64,
    pub tg: Indicator,
    pub ttc: Indicator,
}

impl FeatureVector {
    /// Follower and leader speeds in m/s recovered from the features.
    pub fn speeds(&self) -> (f64, f64) {
        let v_f = self.speed / KMH_PER_MS;
        (v_f, (v_f + self.delta_v).max(0.0))
    }
}

pub fn build_feature_vector(s: &TrajectorySample) -> Result<FeatureVector> {
    Ok(FeatureVector {
        speed: s.v_f * KMH_PER_MS,
        delta_x: s.delta_x,
        delta_v: s.v_l - s.v_f,
        tg: compute_tg(s.delta_x, s.v_f)?,
        ttc: compute_ttc(s.delta_x, s.v_f, s.v_l)?,
    })
}

/// Numeric encoding fed to the learners. `NoThreat` becomes `cap`; finite
/// indicators at or beyond the cap saturate just below it so the
/// `NoThreat` code stays strictly greater than every finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureEncoding {
    pub cap: f64,
}

impl Default for FeatureEncoding {
    fn default() -> Self {
        FeatureEncoding {
            cap: DEFAULT_NO_THREAT_CAP,
        }
    }
}

impl FeatureEncoding {
    pub fn new(cap: f64) -> Result<Self> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "NoThreat cap must be positive, got {cap}"
            )));
        }
        Ok(FeatureEncoding { cap })
    }

    fn encode_indicator(&self, ind: Indicator) -> f64 {
        match ind {
            Indicator::Seconds(s) if s < self.cap => s,
            Indicator::Seconds(_) => self.cap.next_down(),
            Indicator::NoThreat => self.cap,
        }
    }

    fn decode_indicator(&self, v: f64) -> Indicator {
        if v >= self.cap {
            Indicator::NoThreat
        } else {
            Indicator::Seconds(v)
        }
    }

    pub fn encode(&self, fv: &FeatureVector) -> [f64; N_FEATURES] {
        [
            fv.speed,
            fv.delta_x,
            fv.delta_v,
            self.encode_indicator(fv.tg),
            self.encode_indicator(fv.ttc),
        ]
    }

    pub fn decode(&self, x: &[f64; N_FEATURES]) -> FeatureVector {
        FeatureVector {
            speed: x[0],
            delta_x: x[1],
            delta_v: x[2],
            tg: self.decode_indicator(x[3]),
            ttc: self.decode_indicator(x[4]),
        }
    }

    /// Extracts and encodes features for one raw sample.
    pub fn sample_features(&self, s: &TrajectorySample) -> Result<[f64; N_FEATURES]> {
        Ok(self.encode(&build_feature_vector(s)?))
    }
}

/// Labels every episode and turns the retained samples into instances.
pub fn build_dataset(
    episodes: &[Episode],
    encoding: &FeatureEncoding,
    provenance: Provenance,
    seed: Option<u64>,
) -> Result<Dataset> {
    let mut instances = Vec::new();
    for ep in episodes {
        for (sample, label) in label_episode(ep) {
            let x = encoding.sample_features(&sample)?;
            if x[3] > encoding.cap
                || x[4] > encoding.cap
                || (x[3] == encoding.cap) != (sample.v_f == 0.0)
            {
                return Err(Error::InvalidInput(format!(
                    "episode '{}' t={}: indicator encoding collides with the NoThreat cap",
                    ep.episode_id, sample.t
                )));
            }
            instances.push(LabeledInstance::new(x, label));
        }
    }
    Dataset::new(instances, provenance, seed)
}

pub fn write_labeled_csv<W: Write>(ds: &Dataset, out: W) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", LABELED_HEADER.join(","))?;
    for inst in &ds.instances {
        let x = &inst.features;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            x[0],
            x[1],
            x[2],
            x[3],
            x[4],
            inst.label.bit()
        )?;
    }
    w.flush()
}

pub fn read_labeled_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().ne(LABELED_HEADER.iter().copied()) {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!("expected header '{}'", LABELED_HEADER.join(",")),
        });
    }
    let mut instances = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut x = [0.0; N_FEATURES];
        for (i, slot) in x.iter_mut().enumerate() {
            let raw = &rec[i];
            *slot = raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedRow {
                    line,
                    message: format!("bad {} value '{raw}'", LABELED_HEADER[i]),
                })?;
        }
        let label = rec[5]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(ClassLabel::from_bit)
            .ok_or_else(|| Error::MalformedRow {
                line,
                message: format!("label must be 0 or 1, got '{}'", &rec[5]),
            })?;
        instances.push(LabeledInstance::new(x, label));
    }
    Dataset::new(instances, Provenance::Ingested, None)
}
