//! Trajectory episodes: data model, CSV ingestion, event-window labeling,
//! synthetic generation and dataset splitting.
//!
//! All quantities are SI internally (seconds, meters, m/s). km/h only
//! appears at the ingestion boundary and in the speed feature.

mod episode_csv;
mod generator;
mod split;

pub use episode_csv::{parse_episode_csv, write_episode_csv, EventManifest, SpeedUnits};
pub use generator::{generate_synthetic_dataset, GeneratorConfig};
pub use split::split_dataset;

use std::fmt;

use crate::classifiers::LabeledInstance;
use crate::error::{Error, Result};

/// Seconds of trajectory kept before the event onset.
pub const PRE_EVENT_WINDOW: f64 = 30.0;
/// Seconds of trajectory kept after the event end.
pub const POST_EVENT_WINDOW: f64 = 10.0;

const WINDOW_EPS: f64 = 1e-9;

/// One observation of a follower/leader pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    /// Seconds since episode start.
    pub t: f64,
    /// Follower speed, m/s.
    pub v_f: f64,
    /// Leader speed, m/s.
    pub v_l: f64,
    /// Leader minus follower position, m.
    pub delta_x: f64,
}

impl TrajectorySample {
    pub fn new(t: f64, v_f: f64, v_l: f64, delta_x: f64) -> Self {
        TrajectorySample {
            t,
            v_f,
            v_l,
            delta_x,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite()
            && self.v_f.is_finite()
            && self.v_l.is_finite()
            && self.delta_x.is_finite())
        {
            return Err(Error::InvalidInput("non-finite sample field".into()));
        }
        if self.delta_x < 0.0 {
            return Err(Error::InvalidInput(format!(
                "negative gap {}",
                self.delta_x
            )));
        }
        if self.v_f < 0.0 || self.v_l < 0.0 {
            return Err(Error::InvalidInput("negative speed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Safe = 0,
    Warning = 1,
}

impl ClassLabel {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(ClassLabel::Safe),
            1 => Some(ClassLabel::Warning),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn is_warning(self) -> bool {
        self == ClassLabel::Warning
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Safe => f.write_str("Safe"),
            ClassLabel::Warning => f.write_str("Warning"),
        }
    }
}

/// A near-crash recording with its event window.
///
/// The event runs from the leader's braking onset to the onset of the
/// follower's evasive braking.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub episode_id: String,
    pub samples: Vec<TrajectorySample>,
    pub event_start: f64,
    pub event_end: f64,
}

impl Episode {
    pub fn new(
        episode_id: impl Into<String>,
        samples: Vec<TrajectorySample>,
        event_start: f64,
        event_end: f64,
    ) -> Result<Self> {
        let ep = Episode {
            episode_id: episode_id.into(),
            samples,
            event_start,
            event_end,
        };
        ep.validate()?;
        Ok(ep)
    }

    fn invalid(&self, message: impl Into<String>) -> Error {
        Error::InvalidEpisode {
            episode: self.episode_id.clone(),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (first, last) = match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => return Err(self.invalid("no samples")),
        };
        for s in &self.samples {
            s.validate().map_err(|e| self.invalid(e.to_string()))?;
        }
        if self.samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(self.invalid("non-monotone time"));
        }
        if self.event_start.partial_cmp(&self.event_end) != Some(std::cmp::Ordering::Less) {
            return Err(self.invalid("event_start must precede event_end"));
        }
        if self.event_start < first || self.event_end > last {
            return Err(self.invalid("event window outside the recorded span"));
        }
        let n = self.samples.len();
        if n > 2 {
            let mean = (last - first) / (n - 1) as f64;
            let irregular = self
                .samples
                .windows(2)
                .any(|w| ((w[1].t - w[0].t) - mean).abs() > 0.01 * mean);
            if irregular {
                return Err(self.invalid("sampling period varies by more than 1 %"));
            }
        }
        Ok(())
    }

    /// Mean sampling period in seconds.
    pub fn sampling_period(&self) -> Option<f64> {
        let n = self.samples.len();
        (n > 1).then(|| (self.samples[n - 1].t - self.samples[0].t) / (n - 1) as f64)
    }
}

/// Labels every sample inside the retained window around the event.
///
/// Samples in `[event_start, event_end]` are warnings; the 30 s before and
/// the 10 s after are safe; everything else is dropped.
pub fn label_episode(ep: &Episode) -> Vec<(TrajectorySample, ClassLabel)> {
    let lo = ep.event_start - PRE_EVENT_WINDOW - WINDOW_EPS;
    let hi = ep.event_end + POST_EVENT_WINDOW + WINDOW_EPS;
    ep.samples
        .iter()
        .filter(|s| s.t >= lo && s.t <= hi)
        .map(|s| {
            let label = if s.t >= ep.event_start && s.t <= ep.event_end {
                ClassLabel::Warning
            } else {
                ClassLabel::Safe
            };
            (*s, label)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Ingested,
    Synthetic,
}

/// Labeled feature instances ready for training or evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<LabeledInstance>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn new(
        instances: Vec<LabeledInstance>,
        provenance: Provenance,
        seed: Option<u64>,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset {
            instances,
            provenance,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// (warning count, safe count)
    pub fn class_counts(&self) -> (usize, usize) {
        let w = self
            .instances
            .iter()
            .filter(|i| i.label.is_warning())
            .count();
        (w, self.instances.len() - w)
    }
}
