//! C4.5-style binary decision trees over numeric features.
//!
//! Candidate thresholds are midpoints between consecutive distinct values.
//! A split must leave at least `min_leaf_weight` on each side. Among the
//! candidates whose information gain reaches the mean gain, the largest gain
//! ratio wins. When a depth cap forces the children to be leaves, the split
//! minimizing the children's weighted misclassification is taken instead,
//! because that is what the resulting leaves are judged on.

use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Classifier, LabeledInstance, Prediction};
use crate::error::{Error, Result};
use crate::features::N_FEATURES;
use crate::trajdata::ClassLabel;

const GAIN_EPS: f64 = 1e-12;
/// Largest integral total weight served from the x·ln(x) table.
const XLOGX_TABLE_LIMIT: f64 = 4_194_304.0;

#[derive(Debug, Clone, PartialEq)]
pub struct C45Params {
    pub min_leaf_weight: f64,
    pub prune: bool,
    /// Pessimistic pruning confidence factor.
    pub confidence: f64,
    pub max_depth: Option<usize>,
    /// Feature indices the tree may split on, ascending.
    pub features: Vec<usize>,
}

impl Default for C45Params {
    fn default() -> Self {
        C45Params {
            min_leaf_weight: 2.0,
            prune: true,
            confidence: 0.25,
            max_depth: None,
            features: (0..N_FEATURES).collect(),
        }
    }
}

impl C45Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_leaf_weight >= 0.0 && self.min_leaf_weight.is_finite()) {
            return Err(Error::InvalidConfig(
                "min_leaf_weight must be non-negative".into(),
            ));
        }
        if !(self.confidence > 0.0 && self.confidence <= 0.5) {
            return Err(Error::InvalidConfig(
                "confidence must lie in (0, 0.5]".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        validate_feature_set(&self.features)
    }
}

pub(crate) fn validate_feature_set(features: &[usize]) -> Result<()> {
    if features.is_empty()
        || features.iter().any(|&f| f >= N_FEATURES)
        || features.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidConfig(format!(
            "feature set {features:?} must be ascending indices below {N_FEATURES}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

/// Every node keeps the weighted class totals that reached it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub warning: f64,
    pub safe: f64,
    pub split: Option<Split>,
}

impl Node {
    pub fn total(&self) -> f64 {
        self.warning + self.safe
    }

    /// Majority class; ties go to Warning.
    pub fn class(&self) -> ClassLabel {
        if self.warning >= self.safe {
            ClassLabel::Warning
        } else {
            ClassLabel::Safe
        }
    }

    /// Weight of the instances the node's class gets wrong.
    pub fn error(&self) -> f64 {
        self.warning.min(self.safe)
    }
}

/// A trained tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn leaf_for(&self, x: &[f64; N_FEATURES]) -> &Node {
        let mut node = &self.nodes[0];
        while let Some(s) = node.split {
            node = if x[s.feature] <= s.threshold {
                &self.nodes[s.left]
            } else {
                &self.nodes[s.right]
            };
        }
        node
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &TreeModel, i: usize) -> usize {
            match t.nodes[i].split {
                None => 0,
                Some(s) => 1 + walk(t, s.left).max(walk(t, s.right)),
            }
        }
        walk(self, 0)
    }

    /// Checks the arena is a well-formed tree rooted at node 0.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() || seen[i] {
                return Err(Error::Format(format!(
                    "node {i} referenced twice or out of range"
                )));
            }
            seen[i] = true;
            let n = &self.nodes[i];
            if !(n.warning >= 0.0 && n.safe >= 0.0) {
                return Err(Error::Format(format!("node {i} has negative weight")));
            }
            match n.split {
                Some(s) => {
                    if s.feature >= N_FEATURES || !s.threshold.is_finite() {
                        return Err(Error::Format(format!("node {i} has an invalid split")));
                    }
                    stack.push(s.left);
                    stack.push(s.right);
                }
                None if n.total() <= 0.0 => {
                    return Err(Error::Format(format!("leaf {i} has no weight")))
                }
                None => {}
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Format("unreachable nodes".into()));
        }
        Ok(())
    }
}

impl Classifier for TreeModel {
    fn predict(&self, x: &[f64; N_FEATURES]) -> Prediction {
        let leaf = self.leaf_for(x);
        Prediction {
            label: leaf.class(),
            warning_score: leaf.warning / leaf.total(),
        }
    }
}

/// Induces a C4.5 tree, pruned when `params.prune` is set.
pub fn train_c45(instances: &[LabeledInstance], params: &C45Params) -> Result<TreeModel> {
    params.validate()?;
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let data = TrainingData::from_instances(instances)?;
    let order = data.presort(&params.features);
    let mut grower = Grower::new(
        &data,
        order,
        params.min_leaf_weight,
        params.max_depth,
        &params.features,
    );
    grower.grow_root::<rand_chacha::ChaCha8Rng>(None);
    let mut tree = TreeModel {
        nodes: grower.nodes,
    };
    if params.prune {
        prune(&mut tree, params.confidence);
    }
    Ok(tree)
}

/// Column view of weighted training instances.
#[derive(Clone)]
pub(crate) struct TrainingData {
    pub x: Vec<[f64; N_FEATURES]>,
    pub warn: Vec<bool>,
    pub w: Vec<f64>,
}

impl TrainingData {
    pub fn from_instances(instances: &[LabeledInstance]) -> Result<Self> {
        for inst in instances {
            if inst.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite feature value".into()));
            }
            if !(inst.weight >= 0.0 && inst.weight.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "invalid instance weight {}",
                    inst.weight
                )));
            }
        }
        if instances.iter().map(|i| i.weight).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidInput("total instance weight is zero".into()));
        }
        Ok(TrainingData {
            x: instances.iter().map(|i| i.features).collect(),
            warn: instances.iter().map(|i| i.label.is_warning()).collect(),
            w: instances.iter().map(|i| i.weight).collect(),
        })
    }

    /// Per-feature index orders sorted by value, ties by index. Features not
    /// in `features` get empty orders.
    pub fn presort(&self, features: &[usize]) -> Vec<Vec<u32>> {
        let mut order = vec![Vec::new(); N_FEATURES];
        for &f in features {
            let mut idx: Vec<u32> = (0..self.x.len() as u32).collect();
            idx.sort_by(|&a, &b| {
                self.x[a as usize][f]
                    .total_cmp(&self.x[b as usize][f])
                    .then(a.cmp(&b))
            });
            order[f] = idx;
        }
        order
    }
}

/// x·ln(x), tabulated for integral weights.
struct XLogX {
    table: Vec<f64>,
}

impl XLogX {
    /// Table lookup for an integral weight known to be in range.
    #[inline]
    fn at(&self, i: u32) -> f64 {
        self.table[i as usize]
    }

    fn is_tabulated(&self) -> bool {
        !self.table.is_empty()
    }
}

impl XLogX {
    fn new(w: &[f64]) -> Self {
        let total: f64 = w.iter().sum();
        let integral = w.iter().all(|v| v.fract() == 0.0);
        let table = if integral && total <= XLOGX_TABLE_LIMIT {
            (0..=total as usize).map(|i| xlogx(i as f64)).collect()
        } else {
            Vec::new()
        };
        XLogX { table }
    }

    #[inline]
    fn get(&self, v: f64) -> f64 {
        let i = v as usize;
        if i as f64 == v && i < self.table.len() {
            self.table[i]
        } else {
            xlogx(v)
        }
    }
}

#[inline]
fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    threshold: f64,
    /// Integral left weight, valid when the x·ln(x) table is in use.
    li: u32,
    lw: f64,
    ls: f64,
    gain: f64,
}

#[derive(Debug, Clone, Copy)]
struct Chosen {
    feature: usize,
    threshold: f64,
}

/// One instance in a feature's sorted order, stored inline so scans run
/// over contiguous memory.
#[derive(Debug, Clone, Copy)]
struct Entry {
    x: f64,
    w: f64,
    /// `w` as an integer when every weight is integral and tabulated.
    wi: u32,
    idx: u32,
    warn: bool,
}

/// Recursive partitioning over presorted orders.
pub(crate) struct Grower<'a> {
    order: Vec<Vec<Entry>>,
    allowed: &'a [usize],
    min_leaf: f64,
    max_depth: Option<usize>,
    /// Features sampled per node; `None` examines all allowed features.
    per_split: Option<usize>,
    xlogx: XLogX,
    goes_left: Vec<bool>,
    scratch: Vec<Entry>,
    candidates: Vec<Vec<Candidate>>,
    pub nodes: Vec<Node>,
}

impl<'a> Grower<'a> {
    pub fn new(
        data: &'a TrainingData,
        order: Vec<Vec<u32>>,
        min_leaf: f64,
        max_depth: Option<usize>,
        allowed: &'a [usize],
    ) -> Self {
        let n = data.x.len();
        let order = order
            .into_iter()
            .enumerate()
            .map(|(f, o)| {
                o.into_iter()
                    .map(|i| {
                        let k = i as usize;
                        Entry {
                            x: data.x[k][f],
                            w: data.w[k],
                            wi: data.w[k] as u32,
                            idx: i,
                            warn: data.warn[k],
                        }
                    })
                    .collect()
            })
            .collect();
        Grower {
            order,
            allowed,
            min_leaf,
            max_depth,
            per_split: None,
            xlogx: XLogX::new(&data.w),
            goes_left: vec![false; n],
            scratch: Vec::with_capacity(n),
            candidates: vec![Vec::new(); N_FEATURES],
            nodes: Vec::new(),
        }
    }

    pub fn with_features_per_split(mut self, k: usize) -> Self {
        self.per_split = Some(k);
        self
    }

    pub fn grow_root<R: Rng>(&mut self, mut rng: Option<&mut R>) {
        let n = self.order[self.allowed[0]].len();
        self.grow(0, n, 0, &mut rng);
    }

    fn totals(&self, lo: usize, hi: usize) -> (f64, f64) {
        let (mut w, mut s) = (0.0, 0.0);
        for e in &self.order[self.allowed[0]][lo..hi] {
            if e.warn {
                w += e.w;
            } else {
                s += e.w;
            }
        }
        (w, s)
    }

    fn grow<R: Rng>(
        &mut self,
        lo: usize,
        hi: usize,
        depth: usize,
        rng: &mut Option<&mut R>,
    ) -> usize {
        let (tw, ts) = self.totals(lo, hi);
        let id = self.nodes.len();
        self.nodes.push(Node {
            warning: tw,
            safe: ts,
            split: None,
        });

        let pure = tw <= 0.0 || ts <= 0.0;
        let at_cap = self.max_depth.is_some_and(|d| depth >= d);
        if pure || at_cap || tw + ts < 2.0 * self.min_leaf {
            return id;
        }
        let terminal = self.max_depth.is_some_and(|d| depth + 1 >= d);
        let Some(chosen) = self.find_split(lo, hi, tw, ts, terminal, rng) else {
            return id;
        };
        let mid = self.partition(lo, hi, chosen);
        let left = self.grow(lo, mid, depth + 1, rng);
        let right = self.grow(mid, hi, depth + 1, rng);
        self.nodes[id].split = Some(Split {
            feature: chosen.feature,
            threshold: chosen.threshold,
            left,
            right,
        });
        id
    }

    /// Fills `self.candidates[f]` with every admissible midpoint of feature `f`.
    fn scan(&mut self, f: usize, lo: usize, hi: usize, tw: f64, ts: f64) -> bool {
        if self.xlogx.is_tabulated() {
            return self.scan_integral(f, lo, hi, tw, ts);
        }
        let entries = &self.order[f][lo..hi];
        let out = &mut self.candidates[f];
        out.clear();
        let total = tw + ts;
        let parent = xlogx_sum(&self.xlogx, tw, ts);
        let (mut lw, mut ls) = (0.0, 0.0);
        let mut any_positive = false;
        for pair in entries.windows(2) {
            let e = pair[0];
            if e.warn {
                lw += e.w;
            } else {
                ls += e.w;
            }
            let (a, b) = (e.x, pair[1].x);
            if a >= b {
                continue;
            }
            let left = lw + ls;
            let rw = (tw - lw).max(0.0);
            let rs = (ts - ls).max(0.0);
            let right = rw + rs;
            if left < self.min_leaf || right < self.min_leaf || left <= 0.0 || right <= 0.0 {
                continue;
            }
            let gain =
                (parent - xlogx_sum(&self.xlogx, lw, ls) - xlogx_sum(&self.xlogx, rw, rs)) / total;
            any_positive |= gain > GAIN_EPS;
            out.push(Candidate {
                threshold: midpoint(a, b),
                li: 0,
                lw,
                ls,
                gain,
            });
        }
        any_positive
    }

    /// Same as [`Self::scan`] with integer class weights, which are summed
    /// exactly and index the x·ln(x) table directly.
    fn scan_integral(&mut self, f: usize, lo: usize, hi: usize, tw: f64, ts: f64) -> bool {
        let entries = &self.order[f][lo..hi];
        let out = &mut self.candidates[f];
        out.clear();
        let t = &self.xlogx;
        let (twi, tsi) = (tw as u32, ts as u32);
        let total = tw + ts;
        let parent = t.at(twi + tsi) - t.at(twi) - t.at(tsi);
        let (mut lw, mut ls) = (0u32, 0u32);
        let mut any_positive = false;
        for pair in entries.windows(2) {
            let e = pair[0];
            if e.warn {
                lw += e.wi;
            } else {
                ls += e.wi;
            }
            let (a, b) = (e.x, pair[1].x);
            if a >= b {
                continue;
            }
            let (rw, rs) = (twi - lw, tsi - ls);
            let (left, right) = (lw + ls, rw + rs);
            if (left as f64) < self.min_leaf
                || (right as f64) < self.min_leaf
                || left == 0
                || right == 0
            {
                continue;
            }
            let gain =
                (parent - (t.at(left) - t.at(lw) - t.at(ls)) - (t.at(right) - t.at(rw) - t.at(rs)))
                    / total;
            any_positive |= gain > GAIN_EPS;
            out.push(Candidate {
                threshold: midpoint(a, b),
                li: left,
                lw: lw as f64,
                ls: ls as f64,
                gain,
            });
        }
        any_positive
    }

    fn find_split<R: Rng>(
        &mut self,
        lo: usize,
        hi: usize,
        tw: f64,
        ts: f64,
        terminal: bool,
        rng: &mut Option<&mut R>,
    ) -> Option<Chosen> {
        let mut pool: Vec<usize> = self.allowed.to_vec();
        let k = match (self.per_split, rng.as_deref_mut()) {
            (Some(k), Some(r)) => {
                pool.shuffle(r);
                k.min(pool.len())
            }
            _ => pool.len(),
        };
        // examine k features; keep drawing while none offers positive gain
        let mut examined = Vec::with_capacity(pool.len());
        let mut found = false;
        for (pos, &f) in pool.iter().enumerate() {
            if pos >= k && found {
                break;
            }
            found |= self.scan(f, lo, hi, tw, ts);
            examined.push(f);
        }
        if !found {
            return None;
        }
        examined.sort_unstable();

        let total = tw + ts;
        let mut best: Option<(Chosen, f64)> = None;
        if terminal {
            let parent_cost = tw.min(ts);
            for &f in &examined {
                for c in &self.candidates[f] {
                    if c.gain <= GAIN_EPS {
                        continue;
                    }
                    let cost = c.lw.min(c.ls) + (tw - c.lw).max(0.0).min((ts - c.ls).max(0.0));
                    if cost < parent_cost && best.is_none_or(|(_, b)| cost < b) {
                        best = Some((
                            Chosen {
                                feature: f,
                                threshold: c.threshold,
                            },
                            cost,
                        ));
                    }
                }
            }
        } else {
            let (sum, count) = examined.iter().fold((0.0, 0usize), |(s, n), &f| {
                (
                    s + self.candidates[f].iter().map(|c| c.gain).sum::<f64>(),
                    n + self.candidates[f].len(),
                )
            });
            let mean = sum / count as f64;
            let whole = self.xlogx.get(total);
            let tabulated = self.xlogx.is_tabulated();
            let ti = total as u32;
            for &f in &examined {
                for c in &self.candidates[f] {
                    if c.gain <= GAIN_EPS || c.gain < mean {
                        continue;
                    }
                    let left = c.lw + c.ls;
                    let split_info = if tabulated {
                        (whole - self.xlogx.at(c.li) - self.xlogx.at(ti - c.li)) / total
                    } else {
                        (whole - self.xlogx.get(left) - self.xlogx.get(total - left)) / total
                    };
                    if split_info <= 0.0 {
                        continue;
                    }
                    let ratio = c.gain / split_info;
                    if best.is_none_or(|(_, b)| ratio > b) {
                        best = Some((
                            Chosen {
                                feature: f,
                                threshold: c.threshold,
                            },
                            ratio,
                        ));
                    }
                }
            }
        }
        best.map(|(c, _)| c)
    }

    /// Stable partition of every allowed order; returns the boundary.
    fn partition(&mut self, lo: usize, hi: usize, chosen: Chosen) -> usize {
        let mut n_left = 0;
        for e in &self.order[chosen.feature][lo..hi] {
            let left = e.x <= chosen.threshold;
            self.goes_left[e.idx as usize] = left;
            n_left += usize::from(left);
        }
        for &f in self.allowed {
            let slice = &mut self.order[f][lo..hi];
            self.scratch.clear();
            let mut write = 0;
            for r in 0..slice.len() {
                let e = slice[r];
                if self.goes_left[e.idx as usize] {
                    slice[write] = e;
                    write += 1;
                } else {
                    self.scratch.push(e);
                }
            }
            slice[write..].copy_from_slice(&self.scratch);
        }
        lo + n_left
    }
}

/// Midpoint of `a < b`, falling back to `a` when rounding would reach `b`.
#[inline]
fn midpoint(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    if m >= b {
        a
    } else {
        m
    }
}

#[inline]
fn xlogx_sum(t: &XLogX, a: f64, b: f64) -> f64 {
    t.get(a + b) - t.get(a) - t.get(b)
}

/// Extra errors a leaf is charged under pessimistic pruning: the upper
/// confidence bound of the binomial error rate, times `n`, minus `e`.
pub fn pessimistic_extra_errors(n: f64, e: f64, confidence: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - confidence.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (pessimistic_extra_errors(n, 1.0, confidence) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - confidence);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - e
}

/// Bottom-up subtree replacement.
pub fn prune(tree: &mut TreeModel, confidence: f64) {
    fn visit(nodes: &mut [Node], i: usize, cf: f64) -> f64 {
        let node = nodes[i];
        let as_leaf = node.error() + pessimistic_extra_errors(node.total(), node.error(), cf);
        match node.split {
            None => as_leaf,
            Some(s) => {
                let subtree = visit(nodes, s.left, cf) + visit(nodes, s.right, cf);
                if as_leaf <= subtree + 0.1 {
                    nodes[i].split = None;
                    as_leaf
                } else {
                    subtree
                }
            }
        }
    }
    visit(&mut tree.nodes, 0, confidence);
    compact(tree);
}

/// Drops unreachable nodes, renumbering in preorder.
fn compact(tree: &mut TreeModel) {
    fn copy(src: &[Node], i: usize, out: &mut Vec<Node>) -> usize {
        let id = out.len();
        out.push(Node {
            split: None,
            ..src[i]
        });
        if let Some(s) = src[i].split {
            let left = copy(src, s.left, out);
            let right = copy(src, s.right, out);
            out[id].split = Some(Split { left, right, ..s });
        }
        id
    }
    let mut out = Vec::with_capacity(tree.nodes.len());
    copy(&tree.nodes, 0, &mut out);
    tree.nodes = out;
}
