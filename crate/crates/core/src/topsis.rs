//! TOPSIS ranking with vector normalization.

use std::io::Write;

use crate::error::{Error, Result};
use crate::evaluation::EvaluationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Benefit,
    Cost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub direction: Direction,
}

impl Criterion {
    pub fn new(name: &str, direction: Direction) -> Self {
        Criterion {
            name: name.into(),
            direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix {
    pub alternatives: Vec<String>,
    pub criteria: Vec<Criterion>,
    /// One row per alternative.
    pub values: Vec<Vec<f64>>,
}

impl DecisionMatrix {
    pub fn new(
        alternatives: Vec<String>,
        criteria: Vec<Criterion>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = DecisionMatrix {
            alternatives,
            criteria,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alternatives.is_empty() || self.criteria.is_empty() {
            return Err(Error::Topsis("empty decision matrix".into()));
        }
        if self.values.len() != self.alternatives.len()
            || self.values.iter().any(|r| r.len() != self.criteria.len())
        {
            return Err(Error::Topsis("inconsistent dimensions".into()));
        }
        if self
            .values
            .iter()
            .flatten()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::Topsis(
                "values must be finite and non-negative".into(),
            ));
        }
        for (j, c) in self.criteria.iter().enumerate() {
            if self.values.iter().all(|r| r[j] == 0.0) {
                return Err(Error::Topsis(format!("criterion '{}' is all zero", c.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Topsis("weights must be non-negative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Topsis(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Weight presets over (sensitivity, specificity, processing time).
pub const ASSUMPTIONS: [[f64; 3]; 4] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [1.0 / 2.0, 1.0 / 2.0, 0.0],
    [2.0 / 6.0, 3.0 / 6.0, 1.0 / 6.0],
    [3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0],
];

/// Weights of assumption `index` (1-based).
pub fn assumption_weights(index: usize) -> Result<WeightVector> {
    let w = ASSUMPTIONS
        .get(index.wrapping_sub(1))
        .ok_or_else(|| Error::Topsis(format!("assumption {index} outside 1..=4")))?;
    WeightVector::new(w.to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    pub alternative: String,
    pub closeness: f64,
    pub rank: usize,
}

/// Ranks alternatives by closeness to the ideal point, best first. Equal
/// closeness falls back to alternative id order.
pub fn topsis_rank(m: &DecisionMatrix, w: &WeightVector) -> Result<Vec<Ranked>> {
    m.validate()?;
    let w = w.as_slice();
    if w.len() != m.criteria.len() {
        return Err(Error::Topsis(format!(
            "{} weights for {} criteria",
            w.len(),
            m.criteria.len()
        )));
    }
    let n_crit = m.criteria.len();
    let norms: Vec<f64> = (0..n_crit)
        .map(|j| m.values.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();
    let weighted: Vec<Vec<f64>> = m
        .values
        .iter()
        .map(|r| (0..n_crit).map(|j| w[j] * r[j] / norms[j]).collect())
        .collect();
    let column = |j: usize| weighted.iter().map(move |r| r[j]);
    let col_max: Vec<f64> = (0..n_crit)
        .map(|j| column(j).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let col_min: Vec<f64> = (0..n_crit)
        .map(|j| column(j).fold(f64::INFINITY, f64::min))
        .collect();
    let (ideal, anti): (Vec<f64>, Vec<f64>) = m
        .criteria
        .iter()
        .enumerate()
        .map(|(j, c)| match c.direction {
            Direction::Benefit => (col_max[j], col_min[j]),
            Direction::Cost => (col_min[j], col_max[j]),
        })
        .unzip();
    let dist = |r: &[f64], p: &[f64]| {
        r.iter()
            .zip(p)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut ranked: Vec<Ranked> = m
        .alternatives
        .iter()
        .zip(&weighted)
        .map(|(id, r)| {
            let s_plus = dist(r, &ideal);
            let s_minus = dist(r, &anti);
            let closeness = if s_plus + s_minus == 0.0 {
                0.5
            } else {
                s_minus / (s_plus + s_minus)
            };
            Ranked {
                alternative: id.clone(),
                closeness,
                rank: 0,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.closeness
            .total_cmp(&a.closeness)
            .then_with(|| a.alternative.cmp(&b.alternative))
    });
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best: String,
    pub ranking: Vec<Ranked>,
    /// Reports left out or criteria dropped, for display.
    pub notices: Vec<String>,
}

/// Ranks reports on (sensitivity, specificity, time) under one of the four
/// weight assumptions. Reports missing a metric are skipped. An all-zero
/// time column (timing disabled) is dropped and the remaining weights
/// rescaled.
pub fn select_best(reports: &[EvaluationReport], assumption: usize) -> Result<Selection> {
    let weights = assumption_weights(assumption)?;
    let mut notices = Vec::new();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for r in reports {
        match (r.sensitivity, r.specificity) {
            (Some(se), Some(sp)) if r.time_s.is_finite() && r.time_s >= 0.0 => {
                ids.push(r.method.clone());
                rows.push(vec![se, sp, r.time_s]);
            }
            _ => notices.push(format!("'{}' skipped: incomplete criteria", r.method)),
        }
    }
    if rows.len() < 2 {
        return Err(Error::Topsis(
            "at least two complete reports are needed".into(),
        ));
    }
    let mut criteria = vec![
        Criterion::new("sensitivity", Direction::Benefit),
        Criterion::new("specificity", Direction::Benefit),
        Criterion::new("time", Direction::Cost),
    ];
    let mut w = weights.as_slice().to_vec();
    if rows.iter().all(|r| r[2] == 0.0) {
        notices.push("processing time is zero everywhere; time criterion dropped".into());
        criteria.pop();
        w.pop();
        for r in &mut rows {
            r.pop();
        }
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
    }
    let m = DecisionMatrix::new(ids, criteria, rows)?;
    let ranking = topsis_rank(&m, &WeightVector::new(w)?)?;
    Ok(Selection {
        best: ranking[0].alternative.clone(),
        ranking,
        notices,
    })
}

pub const RANKING_HEADER: &str = "alternative,closeness,rank";

pub fn write_ranking_csv<W: Write>(ranking: &[Ranked], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RANKING_HEADER}")?;
    for r in ranking {
        writeln!(out, "{},{},{}", r.alternative, r.closeness, r.rank)?;
    }
    out.flush()
}
