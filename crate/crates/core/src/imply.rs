//! The bounded implication oracle: `F` w-implies `(x = b)` when some set of
//! at most `w` clauses of `F` semantically forces `x` to `b`.
//!
//! A set of clauses implies `(x = b)` only if its connected component
//! containing `x` does, or if some connected component is unsatisfiable
//! (which implies anything). The search therefore enumerates connected
//! clause sets only, by iterative deepening on the set size; a reference
//! all-subsets mode exists for cross-checking.

use crate::formula::{Clause, CnfFormula, VarId};
use crate::{Error, Result};
use std::collections::BTreeSet;

/// Cap on the number of variables a candidate clause set may mention.
pub const SUBSET_VAR_CAP: usize = 20;

/// Default cap on the implication width `w`.
pub const DEFAULT_W_CAP: usize = 4;

/// How `w_implies` searches for a witnessing clause set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Iterative deepening over connected clause sets.
    Connected,
    /// Reference mode: every subset of at most `w` clauses.
    Exhaustive,
}

/// Configuration for the oracle.
#[derive(Clone, Copy, Debug)]
pub struct Implier {
    pub cap: usize,
    pub mode: SearchMode,
}

impl Default for Implier {
    fn default() -> Self {
        Implier {
            cap: DEFAULT_W_CAP,
            mode: SearchMode::Connected,
        }
    }
}

/// True iff every total assignment of `vars(G) + {x}` satisfying every
/// clause of `G` sets `x = b`; in particular an unsatisfiable `G` implies
/// anything. Brute force over the mentioned variables.
pub fn subset_implies(g: &[&Clause], x: VarId, b: bool) -> Result<bool> {
    let mut vars: BTreeSet<VarId> = g.iter().flat_map(|c| c.vars()).collect();
    if vars.len() > SUBSET_VAR_CAP {
        return Err(Error::BruteForceCap {
            what: "subset_implies",
            cap: SUBSET_VAR_CAP as u32,
            n: vars.len() as u32,
        });
    }
    vars.insert(x);
    let vars: Vec<VarId> = vars.into_iter().collect();
    let masks = local_masks(g, &vars);
    let xbit = 1u32 << vars.iter().position(|&u| u == x).unwrap();
    for a in 0u32..1 << vars.len() {
        if masks.iter().all(|&(p, n)| (p & a) | (n & !a) != 0) && ((a & xbit != 0) != b) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff no assignment over `vars(G)` satisfies every clause of `G`.
pub fn subset_unsat(g: &[&Clause]) -> Result<bool> {
    let vars: Vec<VarId> = g
        .iter()
        .flat_map(|c| c.vars())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vars.len() > SUBSET_VAR_CAP {
        return Err(Error::BruteForceCap {
            what: "subset_unsat",
            cap: SUBSET_VAR_CAP as u32,
            n: vars.len() as u32,
        });
    }
    let masks = local_masks(g, &vars);
    for a in 0u32..1 << vars.len() {
        if masks.iter().all(|&(p, n)| (p & a) | (n & !a) != 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn local_masks(g: &[&Clause], vars: &[VarId]) -> Vec<(u32, u32)> {
    g.iter()
        .map(|c| {
            let (mut p, mut n) = (0u32, 0u32);
            for l in c.literals() {
                let bit = 1u32 << vars.iter().position(|&u| u == l.var).unwrap();
                if l.positive {
                    p |= bit;
                } else {
                    n |= bit;
                }
            }
            (p, n)
        })
        .collect()
}

struct Search<'a> {
    clauses: &'a [Clause],
    adj: Vec<Vec<usize>>,
    mentions_x: Vec<bool>,
    x: VarId,
    b: bool,
}

impl<'a> Search<'a> {
    fn new(f: &'a CnfFormula, x: VarId, b: bool) -> Search<'a> {
        let clauses = f.clauses();
        let mut adj = vec![Vec::new(); clauses.len()];
        for i in 0..clauses.len() {
            for j in (i + 1)..clauses.len() {
                if clauses[i].vars().any(|v| clauses[j].contains_var(v)) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let mentions_x = clauses.iter().map(|c| c.vars().any(|v| v == x)).collect();
        Search {
            clauses,
            adj,
            mentions_x,
            x,
            b,
        }
    }

    /// Tests one connected candidate set. Sets mentioning `x` get the full
    /// implication check (which subsumes unsatisfiability); others can only
    /// witness via unsatisfiability.
    fn witnesses(&self, set: &[usize]) -> Result<bool> {
        let refs: Vec<&Clause> = set.iter().map(|&i| &self.clauses[i]).collect();
        let vars: BTreeSet<VarId> = refs.iter().flat_map(|c| c.vars()).collect();
        if vars.len() > SUBSET_VAR_CAP {
            return Ok(false);
        }
        if set.iter().any(|&i| self.mentions_x[i]) {
            subset_implies(&refs, self.x, self.b)
        } else {
            subset_unsat(&refs)
        }
    }

    /// Size-1 sets: only a unit clause `(x = b)` or an empty clause can
    /// witness.
    fn size_one(&self) -> Result<bool> {
        for c in self.clauses {
            if c.is_empty() {
                return Ok(true);
            }
            if c.len() == 1 {
                let l = c.literals()[0];
                if l.var == self.x && l.positive == self.b {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Size-2 sets: connected means the pair shares a variable.
    fn size_two(&self) -> Result<bool> {
        for i in 0..self.clauses.len() {
            for &j in &self.adj[i] {
                if j > i && self.witnesses(&[i, j])? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Enumerates every connected set of size exactly `s` once (rooted at
    /// its smallest member, extension-set style) and tests it.
    fn size_s(&self, s: usize) -> Result<bool> {
        let m = self.clauses.len();
        for root in 0..m {
            let mut set = vec![root];
            let mut in_set = vec![false; m];
            in_set[root] = true;
            let mut ext: Vec<usize> = self.adj[root]
                .iter()
                .copied()
                .filter(|&v| v > root)
                .collect();
            ext.sort_unstable();
            ext.dedup();
            if self.grow(&mut set, &mut in_set, ext, root, s)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn grow(
        &self,
        set: &mut Vec<usize>,
        in_set: &mut Vec<bool>,
        ext: Vec<usize>,
        root: usize,
        s: usize,
    ) -> Result<bool> {
        if set.len() == s {
            return self.witnesses(set);
        }
        let mut remaining = ext;
        while let Some(w) = remaining.pop() {
            set.push(w);
            in_set[w] = true;
            // New extension: the untouched part of the old one plus w's
            // neighbors above the root that are not already reachable.
            let mut next = remaining.clone();
            for &u in &self.adj[w] {
                if u > root && !in_set[u] && !next.contains(&u) {
                    next.push(u);
                }
            }
            if self.grow(set, in_set, next, root, s)? {
                return Ok(true);
            }
            in_set[w] = false;
            set.pop();
        }
        Ok(false)
    }

    fn exhaustive(&self, w: usize) -> Result<bool> {
        let mut set: Vec<usize> = Vec::new();
        self.exhaustive_rec(&mut set, 0, w)
    }

    fn exhaustive_rec(&self, set: &mut Vec<usize>, from: usize, w: usize) -> Result<bool> {
        if !set.is_empty() {
            let refs: Vec<&Clause> = set.iter().map(|&i| &self.clauses[i]).collect();
            let vars: BTreeSet<VarId> = refs.iter().flat_map(|c| c.vars()).collect();
            if vars.len() <= SUBSET_VAR_CAP && subset_implies(&refs, self.x, self.b)? {
                return Ok(true);
            }
        }
        if set.len() == w {
            return Ok(false);
        }
        for i in from..self.clauses.len() {
            set.push(i);
            if self.exhaustive_rec(set, i + 1, w)? {
                return Ok(true);
            }
            set.pop();
        }
        Ok(false)
    }
}

/// True iff some set `G` of at most `w` clauses of `F` implies `(x = b)`.
pub fn w_implies(f: &CnfFormula, w: usize, x: VarId, b: bool) -> Result<bool> {
    w_implies_with(&Implier::default(), f, w, x, b)
}

/// `w_implies` under an explicit cap and search mode.
pub fn w_implies_with(cfg: &Implier, f: &CnfFormula, w: usize, x: VarId, b: bool) -> Result<bool> {
    assert!(w >= 1, "implication width must be positive");
    if w > cfg.cap {
        return Err(Error::WidthCapExceeded { w, cap: cfg.cap });
    }
    let search = Search::new(f, x, b);
    match cfg.mode {
        SearchMode::Exhaustive => search.exhaustive(w),
        SearchMode::Connected => {
            for s in 1..=w {
                let hit = match s {
                    1 => search.size_one()?,
                    2 => search.size_two()?,
                    _ => search.size_s(s)?,
                };
                if hit {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}
