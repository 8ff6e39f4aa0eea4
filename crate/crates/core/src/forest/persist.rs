//! Plain-text model files.
//!
//! ```text
//! barohar-forest 1
//! seed 42
//! max_depth None
//! n_estimators 2
//! classes 0:Null 1:Lift Up 2:Lift Down 3:Stairs Up 4:Stairs Down
//! features 26
//! <one feature name per line>
//! tree 0 <node count>
//! S <feature> <threshold> <left> <right> <c0> <c1> <c2> <c3> <c4>
//! L <label ordinal> <c0> <c1> <c2> <c3> <c4>
//! end
//! ```
//!
//! Thresholds use the shortest round-trip decimal form, so a reloaded
//! forest predicts bit-identically.

use std::io::{BufRead, Write};

use super::tree::{Node, NodeKind, Tree};
use super::{ForestHyperparams, TrainedForest};
use crate::domain::ActivityLabel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &str = "barohar-forest";
const VERSION: u32 = 1;

pub fn save_forest<T: Scalar, W: Write>(forest: &TrainedForest<T>, mut w: W) -> Result<()> {
    writeln!(w, "{MODEL_MAGIC} {VERSION}")?;
    writeln!(w, "seed {}", forest.seed)?;
    writeln!(w, "max_depth {}", forest.params.depth_label())?;
    writeln!(w, "n_estimators {}", forest.params.n_estimators)?;
    let classes: Vec<String> = forest.classes.iter().map(|c| format!("{}:{}", c.ordinal(), c)).collect();
    writeln!(w, "classes {}", classes.join(" "))?;
    writeln!(w, "features {}", forest.feature_names.len())?;
    for name in &forest.feature_names {
        writeln!(w, "{name}")?;
    }
    for (i, tree) in forest.trees.iter().enumerate() {
        writeln!(w, "tree {i} {}", tree.nodes.len())?;
        for node in &tree.nodes {
            let c = node.counts;
            match node.kind {
                NodeKind::Split { feature, threshold, left, right } => writeln!(
                    w,
                    "S {feature} {threshold} {left} {right} {} {} {} {} {}",
                    c[0], c[1], c[2], c[3], c[4]
                )?,
                NodeKind::Leaf { label } => writeln!(
                    w,
                    "L {} {} {} {} {} {}",
                    label.ordinal(),
                    c[0], c[1], c[2], c[3], c[4]
                )?,
            }
        }
    }
    writeln!(w, "end")?;
    w.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(Error::ModelFormat(format!("unexpected end of file at line {}", self.line))),
        }
    }

    fn fail(&self, what: &str) -> Error {
        Error::ModelFormat(format!("line {}: {what}", self.line))
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let l = self.next()?;
        l.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| self.fail(&format!("expected `{key}`")))
    }
}

fn num<N: std::str::FromStr>(tok: Option<&str>, lines: &Lines<impl BufRead>) -> Result<N> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| lines.fail("bad number"))
}

pub fn load_forest<T: Scalar, R: BufRead>(source: R) -> Result<TrainedForest<T>> {
    let mut lines = Lines { inner: source.lines(), line: 0 };
    let header = lines.next()?;
    if header != format!("{MODEL_MAGIC} {VERSION}") {
        return Err(lines.fail("not a version 1 forest file"));
    }
    let seed: u64 = lines.keyed("seed")?.parse().map_err(|_| lines.fail("bad seed"))?;
    let max_depth = match lines.keyed("max_depth")?.as_str() {
        "None" => None,
        d => Some(d.parse().map_err(|_| lines.fail("bad max_depth"))?),
    };
    let n_estimators: usize = lines.keyed("n_estimators")?.parse().map_err(|_| lines.fail("bad n_estimators"))?;
    let classes_line = lines.keyed("classes")?;
    let mut classes = Vec::new();
    for (i, label) in ActivityLabel::ALL.iter().enumerate() {
        let want = format!("{i}:{label}");
        if !classes_line.contains(&want) {
            return Err(lines.fail(&format!("class table lacks {want}")));
        }
        classes.push(*label);
    }
    let n_features: usize = lines.keyed("features")?.parse().map_err(|_| lines.fail("bad feature count"))?;
    let feature_names = (0..n_features).map(|_| lines.next()).collect::<Result<Vec<_>>>()?;

    let mut trees = Vec::with_capacity(n_estimators);
    for i in 0..n_estimators {
        let head = lines.keyed("tree")?;
        let mut tok = head.split(' ');
        let index: usize = num(tok.next(), &lines)?;
        let count: usize = num(tok.next(), &lines)?;
        if index != i || count == 0 {
            return Err(lines.fail("bad tree header"));
        }
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let l = lines.next()?;
            let mut tok = l.split(' ');
            let kind = tok.next();
            let kind = match kind {
                Some("S") => {
                    let feature: usize = num(tok.next(), &lines)?;
                    let threshold: T = num(tok.next(), &lines)?;
                    let left: u32 = num(tok.next(), &lines)?;
                    let right: u32 = num(tok.next(), &lines)?;
                    if feature >= n_features || left as usize >= count || right as usize >= count {
                        return Err(lines.fail("split refers outside the tree"));
                    }
                    NodeKind::Split { feature, threshold, left, right }
                }
                Some("L") => {
                    let ord: usize = num(tok.next(), &lines)?;
                    let label = ActivityLabel::from_ordinal(ord).ok_or_else(|| lines.fail("bad label"))?;
                    NodeKind::Leaf { label }
                }
                _ => return Err(lines.fail("expected S or L node")),
            };
            let mut counts = [0u32; ActivityLabel::COUNT];
            for c in &mut counts {
                *c = num(tok.next(), &lines)?;
            }
            if tok.next().is_some() {
                return Err(lines.fail("trailing tokens"));
            }
            nodes.push(Node { counts, kind });
        }
        // children must come after their parent, which also rules out cycles
        for (at, node) in nodes.iter().enumerate() {
            if let NodeKind::Split { left, right, .. } = node.kind {
                if left as usize <= at || right as usize <= at {
                    return Err(Error::ModelFormat(format!("tree {i}: node {at} points backwards")));
                }
            }
        }
        trees.push(Tree { nodes });
    }
    if lines.next()? != "end" {
        return Err(lines.fail("expected `end`"));
    }
    Ok(TrainedForest {
        trees,
        feature_names,
        params: ForestHyperparams::new(max_depth, n_estimators),
        seed,
        classes,
    })
}
