//! Classical warning algorithms: perceptual thresholds on TTC or time gap,
//! TTC-based warning distances (Honda, Hirst-Graham) and kinematic
//! stopping-distance forms (stop-distance, Mazda, PATH).

use std::fmt;
use std::str::FromStr;

use crate::classifiers::{Classifier, Prediction};
use crate::error::{Error, Result};
use crate::features::{FeatureEncoding, FeatureVector, Indicator, N_FEATURES};
use crate::trajdata::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorKind {
    Ttc,
    Tg,
}

impl IndicatorKind {
    pub fn of(self, fv: &FeatureVector) -> Indicator {
        match self {
            IndicatorKind::Ttc => fv.ttc,
            IndicatorKind::Tg => fv.tg,
        }
    }

    /// Column of the indicator in an encoded feature vector.
    pub fn feature_index(self) -> usize {
        match self {
            IndicatorKind::Ttc => 4,
            IndicatorKind::Tg => 3,
        }
    }
}

impl FromStr for IndicatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ttc" => Ok(IndicatorKind::Ttc),
            "tg" => Ok(IndicatorKind::Tg),
            _ => Err(Error::InvalidInput(format!(
                "indicator '{s}' is not ttc or tg"
            ))),
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndicatorKind::Ttc => "ttc",
            IndicatorKind::Tg => "tg",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptualParams {
    pub indicator: IndicatorKind,
    pub threshold: f64,
}

impl PerceptualParams {
    pub const TTC: PerceptualParams = PerceptualParams {
        indicator: IndicatorKind::Ttc,
        threshold: 6.5,
    };
    pub const TG: PerceptualParams = PerceptualParams {
        indicator: IndicatorKind::Tg,
        threshold: 0.8,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidConfig(
                "perceptual threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarningDistanceParams {
    pub ttc_crit: f64,
    pub offset: f64,
}

impl WarningDistanceParams {
    pub const HONDA: WarningDistanceParams = WarningDistanceParams {
        ttc_crit: 2.2,
        offset: 6.2,
    };
    pub const HIRST_GRAHAM: WarningDistanceParams = WarningDistanceParams {
        ttc_crit: 3.0,
        offset: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.ttc_crit > 0.0
            && self.ttc_crit.is_finite()
            && self.offset >= 0.0
            && self.offset.is_finite())
        {
            return Err(Error::InvalidConfig(
                "warning distance needs ttc_crit > 0 and offset ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicParams {
    /// Follower deceleration, m/s².
    pub a_f: f64,
    /// Leader deceleration, m/s².
    pub a_l: f64,
    /// Driver reaction time, s.
    pub tau: f64,
    /// Standstill margin, m.
    pub d0: f64,
    /// Relative-speed time constant, s (Mazda only).
    pub tau2: f64,
}

impl KinematicParams {
    pub const fn new(a_f: f64, a_l: f64, tau: f64) -> Self {
        KinematicParams {
            a_f,
            a_l,
            tau,
            d0: 0.0,
            tau2: 0.6,
        }
    }

    /// The four stop-distance parameter sets: the algorithm's own, Mazda's,
    /// PATH's and the tuned set.
    pub const SCENARIOS: [KinematicParams; 4] = [
        KinematicParams::new(5.0, 5.0, 1.5),
        KinematicParams::new(6.0, 8.0, 0.1),
        KinematicParams::new(6.0, 6.0, 0.5),
        KinematicParams::new(7.0, 7.0, 0.8),
    ];
    pub const STOP_DISTANCE: KinematicParams = KinematicParams::SCENARIOS[0];
    pub const MAZDA: KinematicParams = KinematicParams {
        d0: 5.0,
        ..KinematicParams::SCENARIOS[1]
    };
    pub const PATH: KinematicParams = KinematicParams::SCENARIOS[2];

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a_f, self.a_l, self.tau, self.d0, self.tau2]
            .iter()
            .all(|v| v.is_finite());
        if !(finite
            && self.a_f > 0.0
            && self.a_l > 0.0
            && self.tau >= 0.0
            && self.d0 >= 0.0
            && self.tau2 >= 0.0)
        {
            return Err(Error::InvalidConfig(
                "kinematic parameters need a_f, a_l > 0 and tau, d0 ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

/// Warning iff the indicator is finite and at most the threshold.
pub fn perceptual_warn(fv: &FeatureVector, p: &PerceptualParams) -> ClassLabel {
    match p.indicator.of(fv) {
        Indicator::Seconds(s) if s <= p.threshold => ClassLabel::Warning,
        _ => ClassLabel::Safe,
    }
}

/// `d_w = ttc_crit · max(v_f − v_l, 0) + offset`, with the verdict for `delta_x`.
pub fn warning_distance_perceptual(
    delta_x: f64,
    v_f: f64,
    v_l: f64,
    p: &WarningDistanceParams,
) -> (f64, ClassLabel) {
    let d_w = p.ttc_crit * (v_f - v_l).max(0.0) + p.offset;
    (d_w, kinematic_warn(delta_x, d_w))
}

pub fn stop_distance(v_f: f64, v_l: f64, p: &KinematicParams) -> f64 {
    (v_f * p.tau + v_f * v_f / (2.0 * p.a_f) - v_l * v_l / (2.0 * p.a_l) + p.d0).max(0.0)
}

pub fn mazda_distance(v_f: f64, v_l: f64, p: &KinematicParams) -> f64 {
    (0.5 * (v_f * v_f / p.a_f - v_l * v_l / p.a_l) + v_f * p.tau + (v_f - v_l) * p.tau2 + p.d0)
        .max(0.0)
}

pub fn path_distance(v_f: f64, v_l: f64, p: &KinematicParams) -> f64 {
    stop_distance(v_f, v_l, p)
}

pub fn kinematic_warn(delta_x: f64, d_w: f64) -> ClassLabel {
    if delta_x <= d_w {
        ClassLabel::Warning
    } else {
        ClassLabel::Safe
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    Perceptual(PerceptualParams),
    WarningDistance(WarningDistanceParams),
    StopDistance(KinematicParams),
    Mazda(KinematicParams),
    Path(KinematicParams),
}

/// Names accepted by [`Baseline::preset`], in reporting order.
pub const BASELINE_NAMES: [&str; 7] = [
    "ttc",
    "tg",
    "honda",
    "hirst-graham",
    "stop-distance",
    "mazda",
    "path",
];

impl Baseline {
    pub fn preset(name: &str) -> Result<Baseline> {
        Ok(match name {
            "ttc" => Baseline::Perceptual(PerceptualParams::TTC),
            "tg" => Baseline::Perceptual(PerceptualParams::TG),
            "honda" => Baseline::WarningDistance(WarningDistanceParams::HONDA),
            "hirst-graham" => Baseline::WarningDistance(WarningDistanceParams::HIRST_GRAHAM),
            "stop-distance" => Baseline::StopDistance(KinematicParams::STOP_DISTANCE),
            "mazda" => Baseline::Mazda(KinematicParams::MAZDA),
            "path" => Baseline::Path(KinematicParams::PATH),
            _ => return Err(Error::InvalidConfig(format!("unknown baseline '{name}'"))),
        })
    }

    pub fn all_presets() -> Vec<(String, Baseline)> {
        BASELINE_NAMES
            .iter()
            .map(|&n| (n.to_string(), Baseline::preset(n).unwrap()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Baseline::Perceptual(p) => p.validate(),
            Baseline::WarningDistance(p) => p.validate(),
            Baseline::StopDistance(p) | Baseline::Mazda(p) | Baseline::Path(p) => p.validate(),
        }
    }

    pub fn decide(&self, fv: &FeatureVector) -> ClassLabel {
        let (v_f, v_l) = fv.speeds();
        match self {
            Baseline::Perceptual(p) => perceptual_warn(fv, p),
            Baseline::WarningDistance(p) => warning_distance_perceptual(fv.delta_x, v_f, v_l, p).1,
            Baseline::StopDistance(p) => kinematic_warn(fv.delta_x, stop_distance(v_f, v_l, p)),
            Baseline::Mazda(p) => kinematic_warn(fv.delta_x, mazda_distance(v_f, v_l, p)),
            Baseline::Path(p) => kinematic_warn(fv.delta_x, path_distance(v_f, v_l, p)),
        }
    }
}

/// A baseline applied to encoded feature vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineClassifier {
    pub baseline: Baseline,
    pub encoding: FeatureEncoding,
}

impl Classifier for BaselineClassifier {
    fn predict(&self, x: &[f64; N_FEATURES]) -> Prediction {
        let label = self.baseline.decide(&self.encoding.decode(x));
        Prediction {
            label,
            warning_score: label.bit() as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_feature_vector;
    use crate::trajdata::TrajectorySample;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fv(v_f: f64, v_l: f64, gap: f64) -> FeatureVector {
        build_feature_vector(&TrajectorySample::new(0.0, v_f, v_l, gap)).unwrap()
    }

    #[test]
    fn perceptual_examples() {
        // ttc = 20 / 10 = 2
        assert_eq!(
            perceptual_warn(&fv(20.0, 10.0, 20.0), &PerceptualParams::TTC),
            ClassLabel::Warning
        );
        // tg = 20 / 20 = 1
        assert_eq!(
            perceptual_warn(&fv(20.0, 10.0, 20.0), &PerceptualParams::TG),
            ClassLabel::Safe
        );
        let opening = fv(10.0, 20.0, 1.0);
        let any = PerceptualParams {
            indicator: IndicatorKind::Ttc,
            threshold: 1e9,
        };
        assert_eq!(perceptual_warn(&opening, &any), ClassLabel::Safe);
    }

    #[test]
    fn warning_distance_examples() {
        let (d, _) = warning_distance_perceptual(30.0, 25.0, 15.0, &WarningDistanceParams::HONDA);
        assert_abs_diff_eq!(d, 28.2, epsilon = 1e-12);
        let (d, l) =
            warning_distance_perceptual(0.5, 20.0, 20.0, &WarningDistanceParams::HIRST_GRAHAM);
        assert_eq!((d, l), (0.0, ClassLabel::Safe));
        assert_eq!(WarningDistanceParams::HIRST_GRAHAM.ttc_crit, 3.0);
    }

    #[test]
    fn kinematic_examples() {
        assert_abs_diff_eq!(
            stop_distance(20.0, 0.0, &KinematicParams::SCENARIOS[0]),
            70.0,
            epsilon = 1e-12
        );
        let with_margin = KinematicParams {
            d0: 4.0,
            ..KinematicParams::STOP_DISTANCE
        };
        assert_eq!(stop_distance(0.0, 0.0, &with_margin), 4.0);
        assert_abs_diff_eq!(
            stop_distance(20.0, 20.0, &KinematicParams::STOP_DISTANCE),
            30.0,
            epsilon = 1e-12
        );
        assert_eq!(mazda_distance(0.0, 0.0, &KinematicParams::MAZDA), 5.0);
        assert_abs_diff_eq!(
            mazda_distance(20.0, 20.0, &KinematicParams::MAZDA),
            15.0 + 1.0 / 3.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            path_distance(20.0, 10.0, &KinematicParams::PATH),
            35.0,
            epsilon = 1e-12
        );
        assert_eq!(path_distance(1.0, 30.0, &KinematicParams::PATH), 0.0);
        assert_eq!(
            KinematicParams::SCENARIOS[3],
            KinematicParams::new(7.0, 7.0, 0.8)
        );
        assert_eq!(kinematic_warn(50.0, 70.0), ClassLabel::Warning);
        assert_eq!(kinematic_warn(80.0, 70.0), ClassLabel::Safe);
        assert_eq!(kinematic_warn(70.0, 70.0), ClassLabel::Warning);
    }

    #[test]
    fn presets_cover_all_names() {
        let all = Baseline::all_presets();
        assert_eq!(all.len(), 7);
        assert!(all.iter().all(|(_, b)| b.validate().is_ok()));
        assert!(Baseline::preset("volvo").is_err());
    }

    #[test]
    fn classifier_decodes_encoded_vectors() {
        let enc = FeatureEncoding::default();
        let c = BaselineClassifier {
            baseline: Baseline::preset("path").unwrap(),
            encoding: enc,
        };
        let x = enc.encode(&fv(20.0, 10.0, 34.0));
        assert_eq!(c.predict(&x).label, ClassLabel::Warning);
        let x = enc.encode(&fv(20.0, 10.0, 36.0));
        assert_eq!(c.predict(&x).label, ClassLabel::Safe);
    }

    proptest! {
        #[test]
        fn stop_distance_monotone(v_f in 0.0..40.0f64, dv in 0.0..5.0f64, v_l in 0.0..40.0f64, s in 0usize..4) {
            let p = KinematicParams::SCENARIOS[s];
            let raw = |v_f: f64, v_l: f64| v_f * p.tau + v_f * v_f / (2.0 * p.a_f) - v_l * v_l / (2.0 * p.a_l);
            if raw(v_f, v_l) > 0.0 {
                prop_assert!(stop_distance(v_f + dv, v_l, &p) >= stop_distance(v_f, v_l, &p));
            }
            if raw(v_f, v_l + dv) > 0.0 {
                prop_assert!(stop_distance(v_f, v_l + dv, &p) <= stop_distance(v_f, v_l, &p));
            }
        }

        #[test]
        fn distances_non_negative(v_f in 0.0..60.0f64, v_l in 0.0..60.0f64) {
            for d in [
                stop_distance(v_f, v_l, &KinematicParams::STOP_DISTANCE),
                mazda_distance(v_f, v_l, &KinematicParams::MAZDA),
                path_distance(v_f, v_l, &KinematicParams::PATH),
                warning_distance_perceptual(0.0, v_f, v_l, &WarningDistanceParams::HONDA).0,
            ] {
                prop_assert!(d >= 0.0 && d.is_finite());
            }
        }

        #[test]
        fn ttc_threshold_equals_zero_offset_distance(v_f in 0.0..40.0f64, v_l in 0.0..40.0f64, gap in 0.0..200.0f64, t in 0.1..10.0f64) {
            let a = perceptual_warn(&fv(v_f, v_l, gap), &PerceptualParams { indicator: IndicatorKind::Ttc, threshold: t });
            let b = warning_distance_perceptual(gap, v_f, v_l, &WarningDistanceParams { ttc_crit: t, offset: 0.0 }).1;
            // both compare gap / closing against t; rounding can differ only at the boundary
            let closing = v_f - v_l;
            let off_boundary = closing <= 0.0 || (gap / closing - t).abs() > 1e-9 * t.max(1.0);
            if off_boundary && (closing > 0.0 || gap > 0.0) {
                prop_assert_eq!(a, b);
            }
        }
    }
}
