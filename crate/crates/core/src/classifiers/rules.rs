use std::fmt;

use super::TreeModel;
use crate::features::{Feature, N_FEATURES};
use crate::trajdata::ClassLabel;

/// Half-open interval `(lower, upper]`; a missing bound is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Interval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower.is_none_or(|lo| v > lo) && self.upper.is_none_or(|hi| v <= hi)
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower.is_none() && self.upper.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub intervals: [Interval; N_FEATURES],
    pub class: ClassLabel,
    pub support_weight: f64,
    pub error_weight: f64,
}

impl Rule {
    pub fn matches(&self, x: &[f64; N_FEATURES]) -> bool {
        self.intervals.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }
}

/// One rule per leaf, in depth-first order with the `≤` branch first.
pub fn extract_rules(tree: &TreeModel) -> Vec<Rule> {
    let mut rules = Vec::new();
    let mut stack = vec![(0usize, [Interval::default(); N_FEATURES])];
    while let Some((i, intervals)) = stack.pop() {
        let node = &tree.nodes[i];
        match node.split {
            None => rules.push(Rule {
                intervals,
                class: node.class(),
                support_weight: node.total(),
                error_weight: node.error(),
            }),
            Some(s) => {
                let mut right = intervals;
                right[s.feature].lower = Some(
                    right[s.feature]
                        .lower
                        .map_or(s.threshold, |lo| lo.max(s.threshold)),
                );
                let mut left = intervals;
                left[s.feature].upper = Some(
                    left[s.feature]
                        .upper
                        .map_or(s.threshold, |hi| hi.min(s.threshold)),
                );
                stack.push((s.right, right));
                stack.push((s.left, left));
            }
        }
    }
    rules
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn condition(feature: Feature, iv: &Interval) -> String {
    let range = match (iv.lower, iv.upper) {
        (Some(lo), Some(hi)) => format!("∈ ({},{}]", num(lo), num(hi)),
        (None, Some(hi)) => format!("≤ {}", num(hi)),
        (Some(lo), None) => format!("> {}", num(lo)),
        (None, None) => unreachable!("unbounded intervals are not rendered"),
    };
    format!("\"{} {} {}\"", feature.name(), range, feature.unit())
}

/// Renders `If "Speed ≤ 73 km/h" & ... Then "Warning with frequency=(s, e)"`.
impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let conds: Vec<String> = Feature::ALL
            .iter()
            .zip(&self.intervals)
            .filter(|(_, iv)| !iv.is_unbounded())
            .map(|(&feat, iv)| condition(feat, iv))
            .collect();
        let outcome = if self.error_weight > 0.0 {
            format!(
                "{} with frequency=({}, {})",
                self.class,
                num(self.support_weight),
                num(self.error_weight)
            )
        } else {
            format!("{} with frequency {}", self.class, num(self.support_weight))
        };
        if conds.is_empty() {
            write!(f, "Always \"{outcome}\"")
        } else {
            write!(f, "If {} Then \"{outcome}\"", conds.join(" & "))
        }
    }
}
