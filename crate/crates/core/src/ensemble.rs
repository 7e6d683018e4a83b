//! Random forests over pre-binned mixed-type data, in two modes: classification with
//! Gini splits, and uplift with splits on the squared difference of child
//! treatment effects gated by a two-proportion z-test. Also permutation importance.

use std::collections::BTreeSet;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const FOREST_VERSION: u32 = 1;
/// Numeric columns with more distinct values are cut at this many quantiles.
pub const MAX_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical { levels: Vec<String> },
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureSpec>,
}

impl Schema {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }
}

/// One raw feature value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Num(f64),
    Cat(String),
}

/// Raw column data used to build a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
    Boolean(Vec<bool>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
            Column::Boolean(v) => v.len(),
        }
    }
}

/// Column-major dataset whose features are stored as small integer codes: bin indices
/// for numeric columns (upper bin edges kept alongside), level indices for categorical
/// columns and 0/1 for booleans.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    codes: Vec<Vec<u16>>,
    edges: Vec<Vec<f64>>,
    pub target: Vec<bool>,
    pub treatment: Option<Vec<bool>>,
}

fn numeric_edges(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= MAX_BINS {
        return distinct;
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..=MAX_BINS)
        .map(|b| sorted[((b * n).div_ceil(MAX_BINS)).saturating_sub(1).min(n - 1)])
        .collect();
    edges.dedup();
    edges
}

fn numeric_code(edges: &[f64], x: f64) -> u16 {
    edges.partition_point(|&e| e < x).min(edges.len() - 1) as u16
}

impl Dataset {
    /// Builds a dataset from named columns. Categorical levels are sorted; every
    /// column must have one entry per target row.
    pub fn new(
        columns: Vec<(String, Column)>,
        target: Vec<bool>,
        treatment: Option<Vec<bool>>,
    ) -> Result<Self> {
        let n = target.len();
        if let Some(t) = &treatment {
            if t.len() != n {
                return Err(Error::Schema {
                    field: "treatment".into(),
                    message: format!("{} values for {n} rows", t.len()),
                });
            }
        }
        let mut features = Vec::with_capacity(columns.len());
        let mut codes = Vec::with_capacity(columns.len());
        let mut edges = Vec::with_capacity(columns.len());
        for (name, col) in columns {
            if col.len() != n {
                return Err(Error::Schema {
                    field: name,
                    message: format!("{} values for {n} rows", col.len()),
                });
            }
            match col {
                Column::Numeric(v) => {
                    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                        return Err(Error::Schema {
                            field: name,
                            message: format!("non-finite value {bad}"),
                        });
                    }
                    let e = if v.is_empty() {
                        vec![0.0]
                    } else {
                        numeric_edges(&v)
                    };
                    codes.push(v.iter().map(|&x| numeric_code(&e, x)).collect());
                    edges.push(e);
                    features.push(FeatureSpec {
                        name,
                        kind: FeatureKind::Numeric,
                    });
                }
                Column::Categorical(v) => {
                    let levels: Vec<String> = v
                        .iter()
                        .cloned()
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    if levels.len() > usize::from(u16::MAX) {
                        return Err(Error::Schema {
                            field: name,
                            message: "too many levels".into(),
                        });
                    }
                    codes.push(
                        v.iter()
                            .map(|x| levels.binary_search(x).expect("level present") as u16)
                            .collect(),
                    );
                    edges.push(Vec::new());
                    features.push(FeatureSpec {
                        name,
                        kind: FeatureKind::Categorical { levels },
                    });
                }
                Column::Boolean(v) => {
                    codes.push(v.iter().map(|&b| u16::from(b)).collect());
                    edges.push(Vec::new());
                    features.push(FeatureSpec {
                        name,
                        kind: FeatureKind::Boolean,
                    });
                }
            }
        }
        Ok(Dataset {
            schema: Schema { features },
            codes,
            edges,
            target,
            treatment,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn codes(&self, feature: usize) -> &[u16] {
        &self.codes[feature]
    }

    /// Number of distinct codes of a feature.
    pub fn n_bins(&self, feature: usize) -> usize {
        match &self.schema.features[feature].kind {
            FeatureKind::Numeric => self.edges[feature].len(),
            FeatureKind::Categorical { levels } => levels.len().max(1),
            FeatureKind::Boolean => 2,
        }
    }

    /// Rows at the given indices (duplicates allowed), sharing bin edges.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            codes: self
                .codes
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            edges: self.edges.clone(),
            target: rows.iter().map(|&r| self.target[r]).collect(),
            treatment: self
                .treatment
                .as_ref()
                .map(|t| rows.iter().map(|&r| t[r]).collect()),
        }
    }

    /// Returns a copy with column `feature` replaced by `codes`.
    pub fn with_codes(&self, feature: usize, codes: Vec<u16>) -> Dataset {
        let mut d = self.clone();
        d.codes[feature] = codes;
        d
    }

    /// Appends a column that copies `source` with its values permuted.
    pub fn push_shuffled_copy(&mut self, source: usize, name: String, rng: &mut impl Rng) {
        let mut c = self.codes[source].clone();
        c.shuffle(rng);
        self.codes.push(c);
        self.edges.push(self.edges[source].clone());
        let kind = self.schema.features[source].kind.clone();
        self.schema.features.push(FeatureSpec { name, kind });
    }

    /// Keeps only the listed feature columns, in the given order.
    pub fn select_features(&self, keep: &[usize]) -> Dataset {
        Dataset {
            schema: Schema {
                features: keep
                    .iter()
                    .map(|&f| self.schema.features[f].clone())
                    .collect(),
            },
            codes: keep.iter().map(|&f| self.codes[f].clone()).collect(),
            edges: keep.iter().map(|&f| self.edges[f].clone()).collect(),
            target: self.target.clone(),
            treatment: self.treatment.clone(),
        }
    }

    /// Raw value of one cell (numeric cells report their bin's upper edge).
    pub fn value(&self, row: usize, feature: usize) -> Value {
        let code = self.codes[feature][row];
        match &self.schema.features[feature].kind {
            FeatureKind::Numeric => Value::Num(self.edges[feature][usize::from(code)]),
            FeatureKind::Categorical { levels } => Value::Cat(levels[usize::from(code)].clone()),
            FeatureKind::Boolean => Value::Bool(code == 1),
        }
    }

    pub fn row(&self, row: usize) -> Vec<Value> {
        (0..self.n_features()).map(|f| self.value(row, f)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Classify,
    Uplift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means ⌈√p⌉.
    pub mtry: Option<usize>,
    pub mode: Mode,
    pub seed: u64,
    /// Two-sided level of the uplift split test.
    pub significance: f64,
    /// Minimum treated and control rows in each uplift child.
    pub min_arm: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 32,
            min_leaf: 50,
            mtry: None,
            mode: Mode::Classify,
            seed: 0,
            significance: 0.05,
            min_arm: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Split {
    /// Left when the value is at most `threshold` (code at most `bin`).
    Numeric {
        feature: usize,
        threshold: f64,
        bin: u16,
    },
    /// Left when the value equals the level (`1` = true for booleans).
    Level { feature: usize, level: u16 },
}

impl Split {
    pub fn feature(&self) -> usize {
        match *self {
            Split::Numeric { feature, .. } | Split::Level { feature, .. } => feature,
        }
    }

    fn goes_left(&self, code: u16) -> bool {
        match *self {
            Split::Numeric { bin, .. } => code <= bin,
            Split::Level { level, .. } => code == level,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arms {
    pub n_treated: u32,
    pub n_control: u32,
    pub rate_treated: Option<f64>,
    pub rate_control: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub n: u32,
    /// Positive-class probability, or treated minus control response rate.
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<Arms>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf(Leaf),
    Split { split: Split, left: u32, right: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub seed: u64,
    /// Sorted indices of the features this tree splits on.
    pub features_used: Vec<usize>,
    /// Bitset of rows drawn into the bootstrap sample; not persisted.
    #[serde(skip)]
    in_bag: Vec<u64>,
}

impl PartialEq for Tree {
    fn eq(&self, o: &Self) -> bool {
        self.nodes == o.nodes && self.seed == o.seed && self.features_used == o.features_used
    }
}

impl Tree {
    fn leaf_by(&self, code: impl Fn(usize) -> u16) -> &Leaf {
        self.leaf_from(0, code)
    }

    fn leaf_from(&self, start: usize, code: impl Fn(usize) -> u16) -> &Leaf {
        let mut i = start;
        loop {
            match &self.nodes[i] {
                Node::Leaf(l) => return l,
                Node::Split { split, left, right } => {
                    i = if split.goes_left(code(split.feature())) {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// First node on the row's path that splits on `feature`.
    fn first_split_on(&self, data: &Dataset, row: usize, feature: usize) -> Option<usize> {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf(_) => return None,
                Node::Split { split, left, right } => {
                    let f = split.feature();
                    if f == feature {
                        return Some(i);
                    }
                    i = if split.goes_left(data.codes[f][row]) {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    fn predict_row(&self, data: &Dataset, row: usize) -> f64 {
        self.leaf_by(|f| data.codes[f][row]).value
    }

    pub fn root_split(&self) -> Option<&Split> {
        match &self.nodes[0] {
            Node::Split { split, .. } => Some(split),
            Node::Leaf(_) => None,
        }
    }

    pub fn uses(&self, feature: usize) -> bool {
        self.features_used.binary_search(&feature).is_ok()
    }

    /// Whether the row was drawn into this tree's bootstrap sample. Always false for
    /// trees loaded from disk.
    pub fn in_bag(&self, row: usize) -> bool {
        self.in_bag
            .get(row / 64)
            .is_some_and(|w| w >> (row % 64) & 1 == 1)
    }

    pub fn has_bag(&self) -> bool {
        !self.in_bag.is_empty()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub version: u32,
    pub schema: Schema,
    pub params: ForestParams,
    pub trees: Vec<Tree>,
    pub n_train_rows: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of tree `i`: `splitmix64(master + (i + 1)·γ)` with γ the 64-bit golden ratio.
pub fn tree_seed(master: u64, i: usize) -> u64 {
    splitmix64(master.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN)))
}

struct Grower<'a> {
    data: &'a Dataset,
    params: &'a ForestParams,
    mtry: usize,
    z_crit: f64,
    nodes: Vec<Node>,
    used: BTreeSet<usize>,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    n: u32,
    pos: u32,
    nt: u32,
    rt: u32,
}

impl Stats {
    fn add(&mut self, y: bool, t: bool) {
        self.n += 1;
        self.pos += u32::from(y);
        if t {
            self.nt += 1;
            self.rt += u32::from(y);
        }
    }

    fn sub(self, o: Stats) -> Stats {
        Stats {
            n: self.n - o.n,
            pos: self.pos - o.pos,
            nt: self.nt - o.nt,
            rt: self.rt - o.rt,
        }
    }

    fn plus(self, o: Stats) -> Stats {
        Stats {
            n: self.n + o.n,
            pos: self.pos + o.pos,
            nt: self.nt + o.nt,
            rt: self.rt + o.rt,
        }
    }

    fn nc(&self) -> u32 {
        self.n - self.nt
    }

    fn rc(&self) -> u32 {
        self.pos - self.rt
    }

    fn gini(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let p = f64::from(self.pos) / f64::from(self.n);
        2.0 * p * (1.0 - p)
    }

    fn rates(&self) -> (Option<f64>, Option<f64>) {
        let rt = (self.nt > 0).then(|| f64::from(self.rt) / f64::from(self.nt));
        let rc = (self.nc() > 0).then(|| f64::from(self.rc()) / f64::from(self.nc()));
        (rt, rc)
    }

    /// Treated-minus-control rate and its sampling variance.
    fn uplift(&self) -> (f64, f64) {
        let (nt, nc) = (f64::from(self.nt), f64::from(self.nc()));
        let pt = f64::from(self.rt) / nt;
        let pc = f64::from(self.rc()) / nc;
        (pt - pc, pt * (1.0 - pt) / nt + pc * (1.0 - pc) / nc)
    }
}

struct Candidate {
    score: f64,
    split: Split,
}

impl<'a> Grower<'a> {
    fn stats(&self, rows: &[u32]) -> Stats {
        let mut s = Stats::default();
        let t = self.data.treatment.as_deref();
        for &r in rows {
            let r = r as usize;
            s.add(self.data.target[r], t.is_some_and(|t| t[r]));
        }
        s
    }

    fn leaf(&self, s: Stats) -> Node {
        match self.params.mode {
            Mode::Classify => Node::Leaf(Leaf {
                n: s.n,
                value: if s.n == 0 {
                    0.0
                } else {
                    f64::from(s.pos) / f64::from(s.n)
                },
                arms: None,
            }),
            Mode::Uplift => {
                let (rate_treated, rate_control) = s.rates();
                Node::Leaf(Leaf {
                    n: s.n,
                    value: match (rate_treated, rate_control) {
                        (Some(a), Some(b)) => a - b,
                        _ => 0.0,
                    },
                    arms: Some(Arms {
                        n_treated: s.nt,
                        n_control: s.nc(),
                        rate_treated,
                        rate_control,
                    }),
                })
            }
        }
    }

    fn score(&self, parent: Stats, left: Stats) -> Option<f64> {
        let right = parent.sub(left);
        let min_leaf = self.params.min_leaf as u32;
        if left.n < min_leaf || right.n < min_leaf || left.n == 0 || right.n == 0 {
            return None;
        }
        match self.params.mode {
            Mode::Classify => {
                let n = f64::from(parent.n);
                let gain = parent.gini()
                    - (f64::from(left.n) * left.gini() + f64::from(right.n) * right.gini()) / n;
                (gain > 1e-12).then_some(gain)
            }
            Mode::Uplift => {
                let m = self.params.min_arm.max(1) as u32;
                if left.nt < m || left.nc() < m || right.nt < m || right.nc() < m {
                    return None;
                }
                let (ul, vl) = left.uplift();
                let (ur, vr) = right.uplift();
                let d = ul - ur;
                let var = vl + vr;
                let significant = if var > 0.0 {
                    d.abs() / var.sqrt() > self.z_crit
                } else {
                    d != 0.0
                };
                (significant && d * d > 1e-15).then_some(d * d)
            }
        }
    }

    fn best_split(&self, rows: &[u32], parent: Stats, rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let p = self.data.n_features();
        if p == 0 {
            return None;
        }
        let mut features: Vec<usize> = (0..p).collect();
        let (chosen, _) = features.partial_shuffle(rng, self.mtry);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        let t = self.data.treatment.as_deref();
        let mut best: Option<Candidate> = None;
        for f in chosen {
            let nb = self.data.n_bins(f);
            let mut hist = vec![Stats::default(); nb];
            let codes = &self.data.codes[f];
            for &r in rows {
                let r = r as usize;
                hist[usize::from(codes[r])].add(self.data.target[r], t.is_some_and(|t| t[r]));
            }
            let mut consider = |score: Option<f64>, split: Split| {
                if let Some(s) = score {
                    if best.as_ref().is_none_or(|b| s > b.score) {
                        best = Some(Candidate { score: s, split });
                    }
                }
            };
            match self.data.schema.features[f].kind {
                FeatureKind::Numeric => {
                    let mut left = Stats::default();
                    for (b, h) in hist.iter().enumerate().take(nb.saturating_sub(1)) {
                        left = left.plus(*h);
                        if h.n == 0 {
                            continue;
                        }
                        let split = Split::Numeric {
                            feature: f,
                            threshold: self.data.edges[f][b],
                            bin: b as u16,
                        };
                        consider(self.score(parent, left), split);
                    }
                }
                FeatureKind::Boolean => {
                    let split = Split::Level {
                        feature: f,
                        level: 1,
                    };
                    consider(self.score(parent, hist[1]), split);
                }
                FeatureKind::Categorical { .. } => {
                    for (b, h) in hist.iter().enumerate() {
                        if h.n == 0 || h.n == parent.n {
                            continue;
                        }
                        let split = Split::Level {
                            feature: f,
                            level: b as u16,
                        };
                        consider(self.score(parent, *h), split);
                    }
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [u32], depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let s = self.stats(rows);
        let id = self.nodes.len() as u32;
        let pure = match self.params.mode {
            Mode::Classify => s.pos == 0 || s.pos == s.n,
            Mode::Uplift => false,
        };
        if depth >= self.params.max_depth
            || (s.n as usize) < 2 * self.params.min_leaf.max(1)
            || pure
        {
            self.nodes.push(self.leaf(s));
            return id;
        }
        let Some(best) = self.best_split(rows, s, rng) else {
            self.nodes.push(self.leaf(s));
            return id;
        };
        let f = best.split.feature();
        self.used.insert(f);
        let codes = &self.data.codes[f];
        let mut lo = 0;
        for i in 0..rows.len() {
            if best.split.goes_left(codes[rows[i] as usize]) {
                rows.swap(lo, i);
                lo += 1;
            }
        }
        self.nodes.push(self.leaf(s));
        let (l, r) = rows.split_at_mut(lo);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id as usize] = Node::Split {
            split: best.split,
            left,
            right,
        };
        id
    }
}

fn grow_tree(data: &Dataset, params: &ForestParams, mtry: usize, z_crit: f64, seed: u64) -> Tree {
    let n = data.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
    let mut in_bag = vec![0u64; n.div_ceil(64)];
    for &r in &rows {
        in_bag[r as usize / 64] |= 1 << (r % 64);
    }
    let mut g = Grower {
        data,
        params,
        mtry,
        z_crit,
        nodes: Vec::new(),
        used: BTreeSet::new(),
    };
    g.grow(&mut rows, 0, &mut rng);
    Tree {
        nodes: g.nodes,
        seed,
        features_used: g.used.into_iter().collect(),
        in_bag,
    }
}

/// Fits a bagged forest. Trees are grown in parallel from per-tree seeds, so the
/// result equals sequential fitting.
pub fn fit_forest(data: &Dataset, params: &ForestParams) -> Result<Forest> {
    let n = data.n_rows();
    let p = data.n_features();
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(Error::Config(
            "n_trees and min_leaf must be positive".into(),
        ));
    }
    if !(0.0 < params.significance && params.significance < 1.0) {
        return Err(Error::Config("significance must lie in (0, 1)".into()));
    }
    if n < 2 * params.min_leaf {
        return Err(Error::InvalidInput(format!(
            "{n} rows is fewer than twice the minimum leaf size {}",
            params.min_leaf
        )));
    }
    let mut warnings = Vec::new();
    match params.mode {
        Mode::Uplift => {
            let t = data.treatment.as_ref().ok_or_else(|| {
                Error::InvalidInput("uplift mode needs a treatment column".into())
            })?;
            let nt = t.iter().filter(|&&x| x).count();
            if nt == 0 || nt == n {
                return Err(Error::Degenerate("a treatment arm is empty".into()));
            }
        }
        Mode::Classify => {
            let pos = data.target.iter().filter(|&&y| y).count();
            if pos == 0 || pos == n {
                warnings.push("single-class target: every tree is a single leaf".to_owned());
            }
        }
    }
    let mtry = params
        .mtry
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p.max(1));
    let z_crit = Normal::standard().inverse_cdf(1.0 - params.significance / 2.0);
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| grow_tree(data, params, mtry, z_crit, tree_seed(params.seed, i)))
        .collect();
    Ok(Forest {
        version: FOREST_VERSION,
        schema: data.schema.clone(),
        params: params.clone(),
        trees,
        n_train_rows: n,
        warnings,
    })
}

/// Forest output for one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    /// Probabilities of the negative and positive class.
    Class([f64; 2]),
    Uplift(f64),
}

impl Prediction {
    pub fn value(&self) -> f64 {
        match *self {
            Prediction::Class(p) => p[1],
            Prediction::Uplift(u) => u,
        }
    }
}

impl Forest {
    fn codes_for(&self, row: &[Value]) -> Result<Vec<u16>> {
        if row.len() != self.schema.len() {
            return Err(Error::Schema {
                field: "row".into(),
                message: format!("{} values for {} features", row.len(), self.schema.len()),
            });
        }
        // Numeric values are carried as raw numbers; they are compared with thresholds
        // directly in `leaf_for_values`, so the code slot is unused.
        self.schema
            .features
            .iter()
            .zip(row)
            .map(|(f, v)| match (&f.kind, v) {
                (FeatureKind::Numeric, Value::Num(x)) if x.is_finite() => Ok(0),
                (FeatureKind::Categorical { levels }, Value::Cat(s)) => {
                    Ok(levels.binary_search(s).map_or(u16::MAX, |i| i as u16))
                }
                (FeatureKind::Boolean, Value::Bool(b)) => Ok(u16::from(*b)),
                _ => Err(Error::Schema {
                    field: f.name.clone(),
                    message: format!("value {v:?} does not match the feature type"),
                }),
            })
            .collect()
    }

    fn leaf_value(tree: &Tree, row: &[Value], codes: &[u16]) -> f64 {
        let mut i = 0usize;
        loop {
            match &tree.nodes[i] {
                Node::Leaf(l) => return l.value,
                Node::Split { split, left, right } => {
                    let go_left = match *split {
                        Split::Numeric {
                            feature, threshold, ..
                        } => match row[feature] {
                            Value::Num(x) => x <= threshold,
                            _ => unreachable!("checked by codes_for"),
                        },
                        Split::Level { feature, level } => codes[feature] == level,
                    };
                    i = if go_left {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Averaged prediction for a raw row. Unseen categorical levels follow the
    /// "not equal" branch of every level split.
    pub fn predict(&self, row: &[Value]) -> Result<Prediction> {
        let codes = self.codes_for(row)?;
        let mean = self
            .trees
            .iter()
            .map(|t| Self::leaf_value(t, row, &codes))
            .sum::<f64>()
            / self.trees.len() as f64;
        Ok(self.wrap(mean))
    }

    fn wrap(&self, mean: f64) -> Prediction {
        match self.params.mode {
            Mode::Classify => Prediction::Class([1.0 - mean, mean]),
            Mode::Uplift => Prediction::Uplift(mean),
        }
    }

    /// Predictions for every row of a dataset built with the same schema.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_schema(data)?;
        let t = self.trees.len() as f64;
        Ok((0..data.n_rows())
            .into_par_iter()
            .map(|r| {
                self.trees
                    .iter()
                    .map(|tree| tree.predict_row(data, r))
                    .sum::<f64>()
                    / t
            })
            .collect())
    }

    fn check_schema(&self, data: &Dataset) -> Result<()> {
        for (i, f) in self.schema.features.iter().enumerate() {
            match data.schema.features.get(i) {
                Some(g)
                    if g.name == f.name
                        && std::mem::discriminant(&g.kind) == std::mem::discriminant(&f.kind) => {}
                _ => {
                    return Err(Error::Schema {
                        field: f.name.clone(),
                        message: "dataset schema differs from the forest schema".into(),
                    })
                }
            }
        }
        if data.schema.len() != self.schema.len() {
            return Err(Error::Schema {
                field: "schema".into(),
                message: "feature count differs".into(),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let f: Forest = serde_json::from_slice(bytes)?;
        if f.version != FOREST_VERSION {
            return Err(Error::Version {
                kind: "forest",
                found: f.version,
                expected: FOREST_VERSION,
            });
        }
        Ok(f)
    }
}

/// Rows on which importance is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalRows {
    /// Each row is scored only by trees that did not see it (needs the in-bag record
    /// of a freshly fitted forest).
    OutOfBag,
    All,
}

/// Quality measure whose drop under permutation is the importance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Classification accuracy at probability 0.5.
    Accuracy,
    /// Negative Brier score of the positive-class probability.
    Brier,
    /// Negative mean squared error against the transformed outcome
    /// `y·(T/e − (1−T)/(1−e))`, whose expectation is the uplift.
    TransformedOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceParams {
    pub repetitions: usize,
    pub seed: u64,
    pub rows: EvalRows,
    pub metric: Metric,
}

impl Default for ImportanceParams {
    fn default() -> Self {
        ImportanceParams {
            repetitions: 5,
            seed: 0,
            rows: EvalRows::OutOfBag,
            metric: Metric::Accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub mean_drop: f64,
    pub sd_drop: f64,
    /// Mean over standard deviation of the drops; absent when they do not vary.
    pub z: Option<f64>,
    pub drops: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline: f64,
    pub repetitions: usize,
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    pub fn get(&self, name: &str) -> Option<&FeatureImportance> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Feature indices ordered by mean drop, largest first (index order on ties).
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.features.len()).collect();
        idx.sort_by(|&a, &b| {
            self.features[b]
                .mean_drop
                .total_cmp(&self.features[a].mean_drop)
                .then(a.cmp(&b))
        });
        idx
    }
}

struct Scorer<'a> {
    metric: Metric,
    target: &'a [bool],
    transformed: Vec<f64>,
}

impl Scorer<'_> {
    fn quality(&self, sums: &[f64], counts: &[u32], rows: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for &r in rows {
            if counts[r] == 0 {
                continue;
            }
            let pred = sums[r] / f64::from(counts[r]);
            n += 1;
            total += match self.metric {
                Metric::Accuracy => f64::from(u8::from((pred > 0.5) == self.target[r])),
                Metric::Brier => -(pred - f64::from(u8::from(self.target[r]))).powi(2),
                Metric::TransformedOutcome => -(pred - self.transformed[r]).powi(2),
            };
        }
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }
}

/// Permutation importance: for each feature and repetition, the feature's column is
/// shuffled and the drop in forest quality recorded. Only trees splitting on the
/// feature are re-evaluated.
pub fn permutation_importance(
    forest: &Forest,
    data: &Dataset,
    params: &ImportanceParams,
) -> Result<ImportanceReport> {
    forest.check_schema(data)?;
    if params.repetitions < 2 {
        return Err(Error::Config(
            "at least two repetitions are required".into(),
        ));
    }
    let n = data.n_rows();
    let oob = params.rows == EvalRows::OutOfBag;
    if oob
        && forest
            .trees
            .iter()
            .any(|t| !t.has_bag() || data.n_rows() != forest.n_train_rows)
    {
        return Err(Error::InvalidInput(
            "out-of-bag importance needs the training data of a freshly fitted forest".into(),
        ));
    }
    let transformed = if params.metric == Metric::TransformedOutcome {
        let t = data.treatment.as_ref().ok_or_else(|| {
            Error::InvalidInput("transformed outcome needs a treatment column".into())
        })?;
        let e = t.iter().filter(|&&x| x).count() as f64 / n as f64;
        if e == 0.0 || e == 1.0 {
            return Err(Error::Degenerate("a treatment arm is empty".into()));
        }
        (0..n)
            .map(|r| {
                let y = f64::from(u8::from(data.target[r]));
                if t[r] {
                    y / e
                } else {
                    -y / (1.0 - e)
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let scorer = Scorer {
        metric: params.metric,
        target: &data.target,
        transformed,
    };

    // Per-tree cached predictions and the rows each tree scores.
    let uses_row = |t: &Tree, r: usize| !oob || !t.in_bag(r);
    let cache: Vec<Vec<f64>> = forest
        .trees
        .par_iter()
        .map(|t| {
            (0..n)
                .map(|r| {
                    if uses_row(t, r) {
                        t.predict_row(data, r)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0u32; n];
    for (t, preds) in forest.trees.iter().zip(&cache) {
        for r in 0..n {
            if uses_row(t, r) {
                sums[r] += preds[r];
                counts[r] += 1;
            }
        }
    }
    let all_rows: Vec<usize> = (0..n).collect();
    let baseline = scorer.quality(&sums, &counts, &all_rows);

    let features = (0..data.n_features())
        .map(|f| {
            let users: Vec<usize> = (0..forest.trees.len())
                .filter(|&i| forest.trees[i].uses(f))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(params.seed, f));
            // Only rows whose path reaches a split on `f` can change; resume from there.
            let entry: Vec<Vec<(u32, u32)>> = users
                .par_iter()
                .map(|&i| {
                    let t = &forest.trees[i];
                    (0..n)
                        .filter(|&r| uses_row(t, r))
                        .filter_map(|r| {
                            t.first_split_on(data, r, f)
                                .map(|node| (r as u32, node as u32))
                        })
                        .collect()
                })
                .collect();
            let drops: Vec<f64> = (0..params.repetitions)
                .map(|_| {
                    let mut perm = data.codes[f].clone();
                    perm.shuffle(&mut rng);
                    if users.is_empty() {
                        return 0.0;
                    }
                    let deltas: Vec<Vec<(usize, f64)>> = users
                        .par_iter()
                        .zip(&entry)
                        .map(|(&i, rows)| {
                            let t = &forest.trees[i];
                            rows.iter()
                                .filter_map(|&(r, node)| {
                                    let r = r as usize;
                                    let v = t
                                        .leaf_from(node as usize, |g| {
                                            if g == f {
                                                perm[r]
                                            } else {
                                                data.codes[g][r]
                                            }
                                        })
                                        .value;
                                    let d = v - cache[i][r];
                                    (d != 0.0).then_some((r, d))
                                })
                                .collect()
                        })
                        .collect();
                    let mut s = sums.clone();
                    for list in deltas {
                        for (r, d) in list {
                            s[r] += d;
                        }
                    }
                    baseline - scorer.quality(&s, &counts, &all_rows)
                })
                .collect();
            let k = drops.len() as f64;
            let mean = drops.iter().sum::<f64>() / k;
            let sd = (drops.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
            FeatureImportance {
                name: data.schema.features[f].name.clone(),
                mean_drop: mean,
                sd_drop: sd,
                z: (sd > 1e-15).then(|| mean / sd),
                drops,
            }
        })
        .collect();
    Ok(ImportanceReport {
        baseline,
        repetitions: params.repetitions,
        features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let b: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let y = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        Dataset::new(
            vec![
                ("a".into(), Column::Boolean(a)),
                ("b".into(), Column::Boolean(b)),
            ],
            y,
            None,
        )
        .unwrap()
    }

    #[test]
    fn binning_edges_are_upper_bounds() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        let e = numeric_edges(&v);
        assert_eq!(e.len(), MAX_BINS);
        assert_eq!(*e.last().unwrap(), 999.0);
        for &x in &v {
            let c = numeric_code(&e, x) as usize;
            assert!(x <= e[c]);
            assert!(c == 0 || x > e[c - 1]);
        }
        assert_eq!(numeric_edges(&[3.0, 1.0, 3.0]), vec![1.0, 3.0]);
    }

    #[test]
    fn xor_is_learned() {
        let d = xor_data(200, 1);
        let params = ForestParams {
            n_trees: 20,
            min_leaf: 5,
            mtry: Some(2),
            ..ForestParams::default()
        };
        let f = fit_forest(&d, &params).unwrap();
        let preds = f.predict_dataset(&d).unwrap();
        let acc = preds
            .iter()
            .zip(&d.target)
            .filter(|(p, &y)| (**p > 0.5) == y)
            .count() as f64
            / 200.0;
        assert!(acc >= 0.95, "accuracy {acc}");
    }

    #[test]
    fn constant_target_gives_constant_leaves() {
        let mut d = xor_data(100, 2);
        d.target = vec![true; 100];
        let f = fit_forest(
            &d,
            &ForestParams {
                n_trees: 5,
                min_leaf: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!f.warnings.is_empty());
        for t in &f.trees {
            assert_eq!(t.nodes.len(), 1);
        }
        let p = f.predict(&[Value::Bool(true), Value::Bool(false)]).unwrap();
        assert_eq!(p, Prediction::Class([0.0, 1.0]));
    }

    #[test]
    fn parallel_equals_sequential_and_round_trips() {
        let d = xor_data(300, 3);
        let params = ForestParams {
            n_trees: 8,
            min_leaf: 5,
            seed: 9,
            ..Default::default()
        };
        let f = fit_forest(&d, &params).unwrap();
        let z = Normal::standard().inverse_cdf(0.975);
        for (i, t) in f.trees.iter().enumerate() {
            let seq = grow_tree(&d, &params, 2, z, tree_seed(9, i));
            assert_eq!(&seq, t);
        }
        let back = Forest::from_json(&serde_json::to_vec(&f).unwrap()).unwrap();
        assert_eq!(
            back.predict_dataset(&d).unwrap(),
            f.predict_dataset(&d).unwrap()
        );
    }

    #[test]
    fn schema_errors_name_the_field() {
        let d = xor_data(100, 4);
        let f = fit_forest(
            &d,
            &ForestParams {
                n_trees: 2,
                min_leaf: 5,
                ..Default::default()
            },
        )
        .unwrap();
        match f.predict(&[Value::Bool(true), Value::Num(1.0)]) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "b"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(f.predict(&[Value::Bool(true)]).is_err());
    }

    #[test]
    fn bootstrap_preserves_row_count() {
        let d = xor_data(257, 5);
        let t = grow_tree(
            &d,
            &ForestParams {
                min_leaf: 300,
                ..Default::default()
            },
            1,
            1.96,
            3,
        );
        assert_eq!(t.nodes.len(), 1);
        match t.nodes[0] {
            Node::Leaf(l) => assert_eq!(l.n, 257),
            _ => unreachable!(),
        }
        assert!((0..257).any(|r| !t.in_bag(r)));
    }

    #[test]
    fn too_few_rows_or_missing_arm() {
        let d = xor_data(10, 6);
        assert!(fit_forest(&d, &ForestParams::default()).is_err());
        let d = xor_data(200, 6);
        let up = ForestParams {
            mode: Mode::Uplift,
            min_leaf: 5,
            ..Default::default()
        };
        assert!(fit_forest(&d, &up).is_err());
        let mut d2 = d.clone();
        d2.treatment = Some(vec![true; 200]);
        assert!(matches!(fit_forest(&d2, &up), Err(Error::Degenerate(_))));
    }

    #[test]
    fn label_copy_is_most_important_and_unused_feature_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 1000;
        let y: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let d = Dataset::new(
            vec![
                ("noise".into(), Column::Numeric(noise)),
                ("copy".into(), Column::Boolean(y.clone())),
                ("const".into(), Column::Categorical(vec!["x".into(); n])),
            ],
            y,
            None,
        )
        .unwrap();
        let f = fit_forest(
            &d,
            &ForestParams {
                n_trees: 30,
                min_leaf: 5,
                mtry: Some(3),
                ..Default::default()
            },
        )
        .unwrap();
        let rep = permutation_importance(&f, &d, &ImportanceParams::default()).unwrap();
        assert_eq!(rep.ranking()[0], 1);
        let c = rep.get("const").unwrap();
        assert_eq!(c.mean_drop, 0.0);
        assert_eq!(c.z, None);
    }
}
