//! Plain-text model files.
//!
//! ```text
//! rcw-model 1
//! kind forest
//! meta seed 7
//! param n_trees 2
//! tree 0 nodes 3
//! n 0 split 4 2.85 1 2 40.0 12.0
//! n 1 leaf 38.0 2.0
//! n 2 leaf 2.0 10.0
//! end
//! ...
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces every stored number exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{
    ClassGaussian, ForestModel, ForestParams, KnnModel, LabeledInstance, Model, NaiveBayesModel,
    Node, Split, TreeModel,
};
use crate::error::{Error, Result};
use crate::features::N_FEATURES;
use crate::trajdata::ClassLabel;

pub const FORMAT_ID: &str = "rcw-model";
pub const FORMAT_VERSION: u32 = 1;

/// A model plus free-form metadata (config snapshot, feature cap, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub meta: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn new(model: Model) -> Self {
        ModelFile {
            model,
            meta: BTreeMap::new(),
        }
    }
}

fn floats(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_tree<W: Write>(out: &mut W, index: usize, tree: &TreeModel) -> std::io::Result<()> {
    writeln!(out, "tree {index} nodes {}", tree.nodes.len())?;
    for (i, n) in tree.nodes.iter().enumerate() {
        match n.split {
            Some(s) => writeln!(
                out,
                "n {i} split {} {:?} {} {} {:?} {:?}",
                s.feature, s.threshold, s.left, s.right, n.warning, n.safe
            )?,
            None => writeln!(out, "n {i} leaf {:?} {:?}", n.warning, n.safe)?,
        }
    }
    writeln!(out, "end")
}

pub fn write_model<W: Write>(file: &ModelFile, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{FORMAT_ID} {FORMAT_VERSION}")?;
    writeln!(out, "kind {}", file.model.kind())?;
    for (k, v) in &file.meta {
        let v = v.replace(['\n', '\r'], " ");
        writeln!(out, "meta {k} {v}")?;
    }
    match &file.model {
        Model::Tree(t) => write_tree(&mut out, 0, t)?,
        Model::Forest(f) => {
            let p = &f.params;
            writeln!(out, "param n_trees {}", p.n_trees)?;
            writeln!(out, "param features_per_split {}", p.features_per_split)?;
            writeln!(out, "param bootstrap {}", p.bootstrap)?;
            writeln!(out, "param min_leaf_weight {:?}", p.min_leaf_weight)?;
            match p.max_depth {
                Some(d) => writeln!(out, "param max_depth {d}")?,
                None => writeln!(out, "param max_depth none")?,
            }
            let feats: Vec<String> = p.features.iter().map(|f| f.to_string()).collect();
            writeln!(out, "param features {}", feats.join(","))?;
            writeln!(out, "param seed {}", f.seed)?;
            for (i, t) in f.trees.iter().enumerate() {
                write_tree(&mut out, i, t)?;
            }
        }
        Model::Knn(m) => {
            writeln!(out, "param k {}", m.k)?;
            writeln!(out, "min {}", floats(&m.min))?;
            writeln!(out, "max {}", floats(&m.max))?;
            writeln!(out, "points {}", m.points.len())?;
            for p in &m.points {
                writeln!(
                    out,
                    "p {} {} {:?}",
                    floats(&p.features),
                    p.label.bit(),
                    p.weight
                )?;
            }
            writeln!(out, "end")?;
        }
        Model::NaiveBayes(m) => {
            for (name, g) in [("warning", &m.warning), ("safe", &m.safe)] {
                writeln!(
                    out,
                    "class {name} {:?} {} {}",
                    g.prior,
                    floats(&g.mean),
                    floats(&g.variance)
                )?;
            }
        }
    }
    out.flush()
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: u64,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        loop {
            match self.inner.next() {
                None => return Ok(None),
                Some(Err(e)) => return Err(Error::Format(format!("read error: {e}"))),
                Some(Ok(l)) => {
                    self.line += 1;
                    if !l.trim().is_empty() {
                        return Ok(Some(l));
                    }
                }
            }
        }
    }

    fn expect(&mut self) -> Result<String> {
        self.next_line()?.ok_or_else(|| {
            Error::Format(format!("unexpected end of file after line {}", self.line))
        })
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Format(format!("line {}: {msg}", self.line))
    }
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> std::result::Result<T, String> {
    let tok = tok.ok_or_else(|| format!("missing {what}"))?;
    tok.parse().map_err(|_| format!("bad {what} '{tok}'"))
}

fn parse_floats<const N: usize>(
    toks: &mut std::str::SplitWhitespace<'_>,
    what: &str,
) -> std::result::Result<[f64; N], String> {
    let mut out = [0.0; N];
    for v in &mut out {
        *v = parse(toks.next(), what)?;
    }
    Ok(out)
}

fn read_tree<R: BufRead>(lines: &mut Lines<R>, header: &str, index: usize) -> Result<TreeModel> {
    let toks: Vec<&str> = header.split_whitespace().collect();
    let n: usize = match toks.as_slice() {
        ["tree", i, "nodes", n] if i.parse() == Ok(index) => {
            n.parse().map_err(|_| lines.err("bad node count"))?
        }
        _ => return Err(lines.err(format!("expected 'tree {index} nodes <n>'"))),
    };
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let l = lines.expect()?;
        let node = parse_node(&l, i).map_err(|m| lines.err(m))?;
        nodes.push(node);
    }
    if lines.expect()?.trim() != "end" {
        return Err(lines.err("expected 'end'"));
    }
    let tree = TreeModel { nodes };
    tree.validate().map_err(|e| lines.err(e))?;
    Ok(tree)
}

fn parse_node(line: &str, index: usize) -> std::result::Result<Node, String> {
    let mut t = line.split_whitespace();
    if t.next() != Some("n") || parse::<usize>(t.next(), "node id")? != index {
        return Err(format!("expected node record {index}"));
    }
    let node = match t.next() {
        Some("split") => {
            let feature = parse(t.next(), "feature")?;
            let threshold = parse(t.next(), "threshold")?;
            let left = parse(t.next(), "left child")?;
            let right = parse(t.next(), "right child")?;
            let [warning, safe] = parse_floats(&mut t, "class weight")?;
            Node {
                warning,
                safe,
                split: Some(Split {
                    feature,
                    threshold,
                    left,
                    right,
                }),
            }
        }
        Some("leaf") => {
            let [warning, safe] = parse_floats(&mut t, "class weight")?;
            Node {
                warning,
                safe,
                split: None,
            }
        }
        _ => return Err("expected 'split' or 'leaf'".into()),
    };
    if t.next().is_some() {
        return Err("trailing tokens".into());
    }
    Ok(node)
}

pub fn read_model<R: BufRead>(input: R) -> Result<ModelFile> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    let head = lines.expect()?;
    match head.split_whitespace().collect::<Vec<_>>().as_slice() {
        [id, v] if *id == FORMAT_ID => {
            if v.parse::<u32>() != Ok(FORMAT_VERSION) {
                return Err(lines.err(format!("unsupported version {v}")));
            }
        }
        _ => return Err(lines.err(format!("not an {FORMAT_ID} file"))),
    }
    let kind_line = lines.expect()?;
    let kind = kind_line
        .strip_prefix("kind ")
        .map(str::trim)
        .ok_or_else(|| lines.err("expected 'kind <kind>'"))?
        .to_string();

    let mut meta = BTreeMap::new();
    let mut params = BTreeMap::new();
    let mut line = lines.next_line()?;
    while let Some(l) = &line {
        if let Some(rest) = l.strip_prefix("meta ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.insert(k.to_string(), v.to_string());
        } else if let Some(rest) = l.strip_prefix("param ") {
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| lines.err("param without value"))?;
            params.insert(k.to_string(), v.trim().to_string());
        } else {
            break;
        }
        line = lines.next_line()?;
    }
    let param = |k: &str| params.get(k).map(String::as_str);
    let need = |k: &str| param(k).ok_or_else(|| Error::Format(format!("missing param '{k}'")));

    let model = match kind.as_str() {
        "tree" => {
            let header = line.take().ok_or_else(|| lines.err("missing tree"))?;
            Model::Tree(read_tree(&mut lines, &header, 0)?)
        }
        "forest" => {
            let bad = |k: &str| Error::Format(format!("bad param '{k}'"));
            let n_trees: usize = need("n_trees")?.parse().map_err(|_| bad("n_trees"))?;
            let max_depth = match need("max_depth")? {
                "none" => None,
                d => Some(d.parse().map_err(|_| bad("max_depth"))?),
            };
            let features = need("features")?
                .split(',')
                .map(|f| f.parse().map_err(|_| bad("features")))
                .collect::<Result<Vec<usize>>>()?;
            let fp = ForestParams {
                n_trees,
                features_per_split: need("features_per_split")?
                    .parse()
                    .map_err(|_| bad("features_per_split"))?,
                bootstrap: need("bootstrap")?.parse().map_err(|_| bad("bootstrap"))?,
                min_leaf_weight: need("min_leaf_weight")?
                    .parse()
                    .map_err(|_| bad("min_leaf_weight"))?,
                max_depth,
                features,
            };
            fp.validate().map_err(|e| Error::Format(e.to_string()))?;
            let seed = need("seed")?.parse().map_err(|_| bad("seed"))?;
            let mut trees = Vec::with_capacity(n_trees);
            let mut header = line;
            for i in 0..n_trees {
                let h = header.ok_or_else(|| lines.err(format!("missing tree {i}")))?;
                trees.push(read_tree(&mut lines, &h, i)?);
                header = lines.next_line()?;
            }
            line = header;
            Model::Forest(ForestModel {
                trees,
                params: fp,
                seed,
            })
        }
        "knn" => {
            let k: usize = need("k")?
                .parse()
                .map_err(|_| Error::Format("bad param 'k'".into()))?;
            let read_bound =
                |lines: &Lines<R>, l: Option<String>, tag: &str| -> Result<[f64; N_FEATURES]> {
                    let l = l.ok_or_else(|| lines.err(format!("missing '{tag}'")))?;
                    let mut t = l.split_whitespace();
                    if t.next() != Some(tag) {
                        return Err(lines.err(format!("expected '{tag}'")));
                    }
                    parse_floats(&mut t, tag).map_err(|m| lines.err(m))
                };
            let min = read_bound(&lines, line, "min")?;
            let next = lines.expect()?;
            let max = read_bound(&lines, Some(next), "max")?;
            let count_line = lines.expect()?;
            let n: usize = count_line
                .strip_prefix("points ")
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| lines.err("expected 'points <n>'"))?;
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                let l = lines.expect()?;
                let mut t = l.split_whitespace();
                let p = (|| {
                    if t.next() != Some("p") {
                        return Err("expected point record".to_string());
                    }
                    let features = parse_floats(&mut t, "feature")?;
                    let label =
                        ClassLabel::from_bit(parse(t.next(), "label")?).ok_or("bad label")?;
                    let weight = parse(t.next(), "weight")?;
                    Ok(LabeledInstance {
                        features,
                        label,
                        weight,
                    })
                })()
                .map_err(|m| lines.err(m))?;
                points.push(p);
            }
            if lines.expect()?.trim() != "end" {
                return Err(lines.err("expected 'end'"));
            }
            if k == 0 || k > points.len() {
                return Err(Error::Format(format!(
                    "k = {k} invalid for {} points",
                    points.len()
                )));
            }
            line = None;
            Model::Knn(KnnModel {
                k,
                min,
                max,
                points,
            })
        }
        "naive-bayes" => {
            let read_class =
                |lines: &Lines<R>, l: Option<String>, name: &str| -> Result<ClassGaussian> {
                    let l = l.ok_or_else(|| lines.err(format!("missing class {name}")))?;
                    let mut t = l.split_whitespace();
                    if t.next() != Some("class") || t.next() != Some(name) {
                        return Err(lines.err(format!("expected 'class {name}'")));
                    }
                    let r = (|| {
                        let prior = parse(t.next(), "prior")?;
                        let mean = parse_floats(&mut t, "mean")?;
                        let variance = parse_floats(&mut t, "variance")?;
                        Ok::<_, String>(ClassGaussian {
                            prior,
                            mean,
                            variance,
                        })
                    })();
                    r.map_err(|m| lines.err(m))
                };
            let warning = read_class(&lines, line, "warning")?;
            let next = lines.expect()?;
            let safe = read_class(&lines, Some(next), "safe")?;
            line = None;
            Model::NaiveBayes(NaiveBayesModel { warning, safe })
        }
        other => return Err(Error::Format(format!("unknown model kind '{other}'"))),
    };
    if line.is_some() || lines.next_line()?.is_some() {
        return Err(lines.err("trailing content"));
    }
    Ok(ModelFile { model, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{
        train_c45, train_knn, train_naive_bayes, train_random_forest, C45Params,
    };
    use crate::rng;
    use rand::Rng;

    fn data() -> Vec<LabeledInstance> {
        let mut r = rng::stream(2, 0);
        (0..120)
            .map(|i| {
                let label = if i % 3 == 0 {
                    ClassLabel::Warning
                } else {
                    ClassLabel::Safe
                };
                let x = std::array::from_fn(|d| {
                    r.random::<f64>() * (d as f64 + 1.0) / 3.0 + label.bit() as f64
                });
                LabeledInstance::weighted(x, label, 0.1 + r.random::<f64>())
            })
            .collect()
    }

    fn round_trip(model: Model) {
        let mut file = ModelFile::new(model);
        file.meta.insert("seed".into(), "42".into());
        file.meta.insert("config".into(), "cost = \"5:1\"".into());
        let mut buf = Vec::new();
        write_model(&file, &mut buf).unwrap();
        let back = read_model(buf.as_slice()).unwrap();
        assert_eq!(back, file);
        let mut again = Vec::new();
        write_model(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn all_kinds_round_trip() {
        let d = data();
        round_trip(Model::Tree(train_c45(&d, &C45Params::default()).unwrap()));
        let fp = ForestParams {
            n_trees: 4,
            max_depth: Some(6),
            features: vec![0, 2, 4],
            features_per_split: 2,
            ..Default::default()
        };
        round_trip(Model::Forest(train_random_forest(&d, &fp, 9).unwrap()));
        round_trip(Model::Knn(train_knn(&d, 3).unwrap()));
        round_trip(Model::NaiveBayes(train_naive_bayes(&d).unwrap()));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_model("hello\n".as_bytes()).is_err());
        assert!(read_model("rcw-model 2\nkind tree\n".as_bytes()).is_err());
        let truncated = "rcw-model 1\nkind tree\ntree 0 nodes 3\nn 0 split 0 1.0 1 2 1.0 1.0\nn 1 leaf 1.0 0.0\n";
        assert!(read_model(truncated.as_bytes()).is_err());
        let cyclic = "rcw-model 1\nkind tree\ntree 0 nodes 1\nn 0 split 0 1.0 0 0 1.0 1.0\nend\n";
        assert!(read_model(cyclic.as_bytes()).is_err());
        let ok = "rcw-model 1\nkind tree\ntree 0 nodes 1\nn 0 leaf 1.0 0.0\nend\n";
        assert!(read_model(ok.as_bytes()).is_ok());
        assert!(read_model(format!("{ok}junk\n").as_bytes()).is_err());
    }
}
