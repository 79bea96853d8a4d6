//! Critical clause trees, labeled trees, cut events, and label density.
//!
//! For a normalized uniquely satisfiable formula, the tree of a variable
//! `x` witnesses how setting early variables forces `x`: a cut (every safe
//! root-to-leaf path blocked by a node placed before the root) certifies
//! that `x` is forced under the induced order.

use crate::dist::PlacementSampler;
use crate::formula::{Assignment, Clause, CnfFormula, VarId};
use crate::{formula, quad, seeds, Error, Result};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

/// A tree label: a real variable or a fresh symbol that collides with
/// nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    Var(VarId),
    Fresh(u64),
}

impl Label {
    pub fn fresh(counter: u64) -> Label {
        Label::Fresh(counter)
    }

    pub fn display(&self) -> String {
        match self {
            Label::Var(v) => format!("{v}"),
            Label::Fresh(c) => format!("f{c}"),
        }
    }
}

/// A placement: label -> value in [0, 1].
#[derive(Clone, Debug, Default)]
pub struct Placement {
    values: BTreeMap<Label, f64>,
}

impl Placement {
    pub fn new() -> Placement {
        Placement::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, f64)>) -> Placement {
        Placement {
            values: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, l: Label, v: f64) {
        self.values.insert(l, v);
    }

    pub fn get(&self, l: Label) -> Result<f64> {
        self.values
            .get(&l)
            .copied()
            .ok_or_else(|| Error::MissingLabel { label: l.display() })
    }

    pub fn var(&self, v: VarId) -> Result<f64> {
        self.get(Label::Var(v))
    }
}

/// Node role in a labeled tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LeafKind {
    Internal,
    Safe,
    Unsafe,
}

#[derive(Clone, Debug, Serialize)]
pub struct LabeledNode {
    pub label: Label,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub depth: usize,
    pub canonical: bool,
    pub kind: LeafKind,
}

/// A rooted tree with labels, canonical flags, and safe/unsafe leaves.
/// Node 0 is the root. No label repeats on a root-to-node path.
#[derive(Clone, Debug, Serialize)]
pub struct LabeledTree {
    pub nodes: Vec<LabeledNode>,
}

impl LabeledTree {
    pub fn root(&self) -> &LabeledNode {
        &self.nodes[0]
    }

    pub fn labels(&self) -> Vec<Label> {
        let set: BTreeSet<Label> = self.nodes.iter().map(|n| n.label).collect();
        set.into_iter().collect()
    }

    fn assert_down_path_distinct(&self) {
        for (i, n) in self.nodes.iter().enumerate() {
            let mut cur = n.parent;
            while let Some(p) = cur {
                assert_ne!(
                    self.nodes[p].label, n.label,
                    "label repeats on down-path at node {i}"
                );
                cur = self.nodes[p].parent;
            }
        }
    }
}

/// The complete (k-1)-ary tree of depth `t` with distinct fresh labels and
/// safe leaves at depth `t`.
pub fn complete_tree(k: usize, t: usize) -> LabeledTree {
    assert!(k >= 2);
    let arity = k - 1;
    let mut nodes = vec![LabeledNode {
        label: Label::fresh(0),
        children: vec![],
        parent: None,
        depth: 0,
        canonical: true,
        kind: if t == 0 {
            LeafKind::Safe
        } else {
            LeafKind::Internal
        },
    }];
    let mut counter = 1u64;
    let mut frontier = vec![0usize];
    for depth in 1..=t {
        let mut next = Vec::new();
        for &p in &frontier {
            for _ in 0..arity {
                let idx = nodes.len();
                nodes.push(LabeledNode {
                    label: Label::fresh(counter),
                    children: vec![],
                    parent: Some(p),
                    depth,
                    canonical: true,
                    kind: if depth == t {
                        LeafKind::Safe
                    } else {
                        LeafKind::Internal
                    },
                });
                counter += 1;
                nodes[p].children.push(idx);
                next.push(idx);
            }
        }
        frontier = next;
    }
    LabeledTree { nodes }
}

// ---------------------------------------------------------------------------
// Critical clause trees
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct CctNode {
    pub varlabel: VarId,
    /// Absent exactly on nodes at the height cutoff.
    pub clause: Option<Clause>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub depth: usize,
    pub canonical: bool,
}

/// The critical clause tree of one variable, built to a height cutoff.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalClauseTree {
    pub var: VarId,
    pub height: usize,
    pub nodes: Vec<CctNode>,
}

impl CriticalClauseTree {
    pub fn root(&self) -> &CctNode {
        &self.nodes[0]
    }

    fn path_vars(&self, mut node: usize) -> Vec<VarId> {
        let mut out = vec![self.nodes[node].varlabel];
        while let Some(p) = self.nodes[node].parent {
            out.push(self.nodes[p].varlabel);
            node = p;
        }
        out
    }

    /// Marks canonical nodes: a node is canonical when every node on its
    /// root path has a variable outside `twocc` and a clause label (where
    /// present) equal to that variable's canonical critical clause.
    /// Ancestors of canonical nodes are canonical by construction.
    pub fn mark_canonical_with(&mut self, f: &CnfFormula, twocc: &BTreeSet<VarId>) {
        let order: Vec<usize> = (0..self.nodes.len()).collect();
        for i in order {
            let node = &self.nodes[i];
            let parent_ok = node.parent.is_none_or(|p| self.nodes[p].canonical);
            let own_ok = !twocc.contains(&node.varlabel)
                && match &node.clause {
                    Some(c) => f.canonical_critical_clause(node.varlabel) == Some(c),
                    None => true,
                };
            self.nodes[i].canonical = parent_ok && own_ok;
        }
    }

    /// `mark_canonical_with` using the formula's default two-critical-clause
    /// mode (the inferred closure for 3-CNF).
    pub fn mark_canonical(&mut self, f: &CnfFormula) -> Result<()> {
        let twocc = formula::twocc_set(f, formula::default_twocc_mode(f))?;
        self.mark_canonical_with(f, &twocc);
        Ok(())
    }

    /// Forgets clause labels: depth-cutoff leaves become safe, every other
    /// childless node unsafe.
    pub fn to_labeled(&self) -> LabeledTree {
        let nodes = self
            .nodes
            .iter()
            .map(|n| LabeledNode {
                label: Label::Var(n.varlabel),
                children: n.children.clone(),
                parent: n.parent,
                depth: n.depth,
                canonical: n.canonical,
                kind: if !n.children.is_empty() {
                    LeafKind::Internal
                } else if n.depth == self.height {
                    LeafKind::Safe
                } else {
                    LeafKind::Unsafe
                },
            })
            .collect();
        let t = LabeledTree { nodes };
        t.assert_down_path_distinct();
        t
    }
}

/// Builds the critical clause tree of `x` up to height `h` by the standard
/// loop: each node `u` flips its root path to zero in the all-ones
/// assignment; the clause label is the canonical critical clause of
/// `varlabel(u)` if that is violated, otherwise the lexicographically
/// smallest violated clause; children are the negated variables.
/// Deterministic BFS order.
pub fn build_cct(f: &CnfFormula, x: VarId, h: usize) -> Result<CriticalClauseTree> {
    let mut tree = CriticalClauseTree {
        var: x,
        height: h,
        nodes: vec![CctNode {
            varlabel: x,
            clause: None,
            children: vec![],
            parent: None,
            depth: 0,
            canonical: true,
        }],
    };
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        if tree.nodes[u].depth >= h {
            continue;
        }
        let path = tree.path_vars(u);
        let mut alpha = Assignment::all_ones(f.n);
        for &v in &path {
            alpha.set(v, false);
        }
        let violated = |c: &&Clause| {
            c.literals()
                .iter()
                .all(|l| l.positive != alpha.value(l.var))
        };
        let canonical = f.canonical_critical_clause(tree.nodes[u].varlabel);
        let chosen: Clause = match canonical.filter(violated) {
            Some(c) => c.clone(),
            None => f
                .clauses()
                .iter()
                .filter(|c| violated(c))
                .min()
                .ok_or(Error::NoViolatedClause {
                    var: tree.nodes[u].varlabel.0,
                })?
                .clone(),
        };
        for lit in chosen.literals() {
            if !lit.positive {
                // A violated negative literal has its variable at 1, hence
                // off the flipped path.
                debug_assert!(!path.contains(&lit.var));
                let idx = tree.nodes.len();
                tree.nodes.push(CctNode {
                    varlabel: lit.var,
                    clause: None,
                    children: vec![],
                    parent: Some(u),
                    depth: tree.nodes[u].depth + 1,
                    canonical: true,
                });
                tree.nodes[u].children.push(idx);
                queue.push_back(idx);
            }
        }
        tree.nodes[u].clause = Some(chosen);
    }
    validate_cct(&tree, f);
    Ok(tree)
}

/// Structural invariants of a built tree, asserted after every build:
/// positive clause-label literals appear as ancestor labels, children
/// correspond to the negated literals, and no label repeats on a
/// down-path.
fn validate_cct(t: &CriticalClauseTree, _f: &CnfFormula) {
    for (i, node) in t.nodes.iter().enumerate() {
        if let Some(c) = &node.clause {
            let ancestors = t.path_vars(i);
            for lit in c.literals() {
                if lit.positive {
                    assert!(
                        ancestors.contains(&lit.var),
                        "positive literal {} not on ancestor path of node {i}",
                        lit.var
                    );
                }
            }
            let child_labels: Vec<VarId> = node
                .children
                .iter()
                .map(|&cix| t.nodes[cix].varlabel)
                .collect();
            let neg_vars: Vec<VarId> = c
                .literals()
                .iter()
                .filter(|l| !l.positive)
                .map(|l| l.var)
                .collect();
            assert_eq!(child_labels, neg_vars, "children mismatch at node {i}");
        } else {
            assert_eq!(
                node.depth, t.height,
                "missing clause label above the cutoff"
            );
        }
        let mut cur = node.parent;
        while let Some(p) = cur {
            assert_ne!(
                t.nodes[p].varlabel, node.varlabel,
                "label repeats on down-path"
            );
            cur = t.nodes[p].parent;
        }
    }
}

// ---------------------------------------------------------------------------
// Cut events
// ---------------------------------------------------------------------------

/// Whether every safe path of `t` contains a dead node under placement
/// `pi` at threshold `r`. A non-root node is dead when `pi(label) < r`;
/// in weak mode the root is additionally dead when `pi(root) < r`.
pub fn cut_event(t: &LabeledTree, pi: &Placement, r: f64, weak: bool) -> Result<bool> {
    // Resolve all labels up front so a missing label errors deterministically.
    for l in t.labels() {
        pi.get(l)?;
    }
    Ok(!alive_safe_path(t, 0, pi, r, weak))
}

fn alive_safe_path(t: &LabeledTree, u: usize, pi: &Placement, r: f64, weak: bool) -> bool {
    let node = &t.nodes[u];
    let dead = (node.parent.is_some() || weak) && pi.get(node.label).unwrap() < r;
    if dead {
        return false;
    }
    match node.kind {
        LeafKind::Safe => true,
        LeafKind::Unsafe => false,
        LeafKind::Internal => node
            .children
            .iter()
            .any(|&c| alive_safe_path(t, c, pi, r, weak)),
    }
}

/// Lazy evaluation for samplers with independent identically distributed
/// coordinates: node values are drawn on first visit, which leaves the cut
/// law unchanged while the search exits early.
fn alive_safe_path_lazy(
    t: &LabeledTree,
    u: usize,
    r: f64,
    draw: &mut impl FnMut() -> f64,
    is_root: bool,
) -> bool {
    let node = &t.nodes[u];
    if !is_root && draw() < r {
        return false;
    }
    match node.kind {
        LeafKind::Safe => true,
        LeafKind::Unsafe => false,
        LeafKind::Internal => node
            .children
            .iter()
            .any(|&c| alive_safe_path_lazy(t, c, r, draw, false)),
    }
}

/// Threshold mode for `cut_probability_mc`.
#[derive(Clone, Copy, Debug)]
pub enum CutThreshold {
    Fixed(f64),
    /// `r = pi(root)`: the root's own placement, drawn from the sampler's
    /// marginal.
    RootRelative,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Estimate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        Estimate {
            mean,
            stderr: (var / n).sqrt(),
            trials: values.len() as u64,
        }
    }
}

/// Monte Carlo cut probability of a labeled tree under a placement sampler.
/// Deterministic in `(seed, trials)` regardless of thread count.
pub fn cut_probability_mc(
    t: &LabeledTree,
    sampler: &dyn PlacementSampler,
    threshold: CutThreshold,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    use rayon::prelude::*;
    assert!(trials >= 1);
    let labels = t.labels();
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::trial_rng(seed, i);
            // Fast path: draw values on visit when coordinates are iid.
            if sampler.sample_one_iid(&mut rng).is_some() {
                let mut rng = seeds::trial_rng(seed, i);
                let r = match threshold {
                    CutThreshold::Fixed(r) => r,
                    CutThreshold::RootRelative => sampler.sample_one_iid(&mut rng).unwrap(),
                };
                let mut draw = || sampler.sample_one_iid(&mut rng).unwrap();
                return if alive_safe_path_lazy(t, 0, r, &mut draw, true) {
                    0.0
                } else {
                    1.0
                };
            }
            let vals = sampler.sample(&labels, &mut rng);
            let pi = Placement::from_pairs(labels.iter().copied().zip(vals.iter().copied()));
            let r = match threshold {
                CutThreshold::Fixed(r) => r,
                CutThreshold::RootRelative => pi.get(t.root().label).unwrap(),
            };
            if cut_event(t, &pi, r, false).unwrap() {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(Estimate::from_values(&values))
}

// ---------------------------------------------------------------------------
// Label density
// ---------------------------------------------------------------------------

/// Pointwise depth weight `(1-2r)^2/(1-r)^3 * r^(d+1)` for `r < 1/2`.
pub fn density_weight_at(r: f64, depth: usize) -> f64 {
    if !(0.0..0.5).contains(&r) {
        return 0.0;
    }
    let t = 1.0 - 2.0 * r;
    t * t / (1.0 - r).powi(3) * r.powi(depth as i32 + 1)
}

/// The depth weight integrated over `r` in `[0, 1/2]`, memoized per depth.
pub fn density_weight_integrated(depth: usize) -> f64 {
    static CACHE: Mutex<Vec<f64>> = Mutex::new(Vec::new());
    let mut cache = CACHE.lock().unwrap();
    while cache.len() <= depth {
        let d = cache.len();
        cache.push(quad::integrate(
            |r| density_weight_at(r, d),
            0.0,
            0.5,
            1e-12,
        ));
    }
    cache[depth]
}

/// Where `label_density` evaluates the depth weight.
#[derive(Clone, Copy, Debug)]
pub enum DensityMode {
    At(f64),
    Integrated,
}

/// Depth-discounted count of canonical occurrences of `z` in the tree.
pub fn label_density(z: VarId, t: &CriticalClauseTree, mode: DensityMode) -> f64 {
    t.nodes
        .iter()
        .filter(|n| n.canonical && n.varlabel == z)
        .map(|n| match mode {
            DensityMode::At(r) => density_weight_at(r, n.depth),
            DensityMode::Integrated => density_weight_integrated(n.depth),
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Tree similarity
// ---------------------------------------------------------------------------

/// Outcome of checking that a canonical descendant path replicates inside
/// the tree of its top label.
#[derive(Clone, Debug, Serialize)]
pub enum SimilarityReport {
    /// The label sequence was found, ending at a canonical node.
    Matched { labels: Vec<u32> },
    /// The endpoint is not canonical, so nothing is claimed.
    PreconditionViolated,
    /// A counterexample: the sequence breaks at this position.
    Mismatch { position: usize },
}

/// For a canonical node `v` below `u` in `tx`, the tree of
/// `a = varlabel(u)` must contain a root path with the same label sequence
/// as `u -> v`, ending at a canonical node.
pub fn similarity_check(
    f: &CnfFormula,
    tx: &CriticalClauseTree,
    u: usize,
    v: usize,
) -> Result<SimilarityReport> {
    if !tx.nodes[v].canonical {
        return Ok(SimilarityReport::PreconditionViolated);
    }
    // Collect the u -> v label sequence.
    let mut seq = Vec::new();
    let mut cur = v;
    loop {
        seq.push(tx.nodes[cur].varlabel);
        if cur == u {
            break;
        }
        cur = tx.nodes[cur].parent.ok_or_else(|| {
            Error::OutOfRange("node is not a descendant of the claimed ancestor".into())
        })?;
    }
    seq.reverse();
    let a = tx.nodes[u].varlabel;
    let mut ta = build_cct(f, a, seq.len() + 1)?;
    ta.mark_canonical(f)?;
    let mut node = 0usize;
    for (i, &want) in seq.iter().enumerate().skip(1) {
        match ta.nodes[node]
            .children
            .iter()
            .find(|&&c| ta.nodes[c].varlabel == want)
        {
            Some(&c) => node = c,
            None => return Ok(SimilarityReport::Mismatch { position: i }),
        }
    }
    if !ta.nodes[node].canonical {
        return Ok(SimilarityReport::Mismatch {
            position: seq.len(),
        });
    }
    Ok(SimilarityReport::Matched {
        labels: seq.iter().map(|v| v.0).collect(),
    })
}

/// DOT rendering of a built tree (for the command-line export).
pub fn cct_to_dot(t: &CriticalClauseTree) -> String {
    let mut out = String::from("digraph cct {\n  node [shape=box];\n");
    for (i, n) in t.nodes.iter().enumerate() {
        let clause = n
            .clause
            .as_ref()
            .map(|c| format!("{c:?}"))
            .unwrap_or_default();
        let style = if n.canonical { "solid" } else { "dashed" };
        out.push_str(&format!(
            "  n{i} [label=\"{} d{}\\n{}\", style={style}];\n",
            n.varlabel, n.depth, clause
        ));
        if let Some(p) = n.parent {
            out.push_str(&format!("  n{p} -> n{i};\n"));
        }
    }
    out.push_str("}\n");
    out
}
