//! CNF formulas: DIMACS I/O, brute-force semantics, unique-solution
//! normalization, critical clauses, and random unique-SAT instances.

use crate::{seeds, Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Cap for exhaustive assignment enumeration (2^24 assignments).
pub const BRUTE_FORCE_CAP: u32 = 24;

/// A 1-based variable index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A variable or its negation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: VarId,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: u32, positive: bool) -> Literal {
        Literal {
            var: VarId(var),
            positive,
        }
    }

    /// DIMACS encoding: signed variable index.
    pub fn code(self) -> i64 {
        let v = i64::from(self.var.0);
        if self.positive {
            v
        } else {
            -v
        }
    }

    pub fn negated(self) -> Literal {
        Literal {
            var: self.var,
            positive: !self.positive,
        }
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "~")?;
        }
        write!(f, "{}", self.var)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A set of literals over distinct variables, kept sorted by variable index.
///
/// Clause order is significant for tie-breaking, so `Ord` compares the
/// variable index sequence first and the polarity sequence second
/// (a negative literal sorts before a positive one).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    /// Builds a clause, rejecting duplicate or conflicting occurrences of a
    /// variable.
    pub fn new(mut literals: Vec<Literal>) -> Result<Clause> {
        literals.sort_by_key(|l| (l.var, l.positive));
        for w in literals.windows(2) {
            if w[0].var == w[1].var {
                return Err(Error::DuplicateVariable { var: w[0].var.0 });
            }
        }
        Ok(Clause { literals })
    }

    /// Convenience constructor from DIMACS codes, e.g. `[1, -2, -3]`.
    pub fn from_codes(codes: &[i32]) -> Result<Clause> {
        Clause::new(
            codes
                .iter()
                .map(|&c| Literal::new(c.unsigned_abs(), c > 0))
                .collect(),
        )
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn contains(&self, lit: Literal) -> bool {
        self.literals
            .binary_search_by_key(&(lit.var, lit.positive), |l| (l.var, l.positive))
            .is_ok()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.literals.iter().map(|l| l.var)
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.literals.binary_search_by_key(&v, |l| l.var).is_ok()
    }

    /// Critical shape for `x`: `x` positive, every other literal negative.
    pub fn is_critical_for(&self, x: VarId) -> bool {
        self.literals
            .iter()
            .all(|l| if l.var == x { l.positive } else { !l.positive })
            && self.contains(Literal {
                var: x,
                positive: true,
            })
    }
}

impl PartialOrd for Clause {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Clause {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let vars = self
            .vars()
            .collect::<Vec<_>>()
            .cmp(&other.vars().collect::<Vec<_>>());
        vars.then_with(|| {
            let pols = |c: &Clause| c.literals.iter().map(|l| l.positive).collect::<Vec<_>>();
            pols(self).cmp(&pols(other))
        })
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// A total assignment on variables `1..=n`, packed as bits (bit `i-1` is
/// the value of variable `i`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub n: u32,
    pub bits: u32,
}

impl Assignment {
    pub fn all_ones(n: u32) -> Assignment {
        Assignment {
            n,
            bits: if n == 32 { u32::MAX } else { (1u32 << n) - 1 },
        }
    }

    pub fn value(&self, v: VarId) -> bool {
        self.bits >> v.index() & 1 == 1
    }

    pub fn set(&mut self, v: VarId, b: bool) {
        let mask = 1u32 << v.index();
        if b {
            self.bits |= mask;
        } else {
            self.bits &= !mask;
        }
    }

    pub fn values(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.bits >> i & 1 == 1).collect()
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for i in 0..self.n {
            write!(f, "{}", self.bits >> i & 1)?;
        }
        write!(f, ")")
    }
}

/// A partial assignment (domain a subset of `1..=n`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialAssignment {
    values: Vec<Option<bool>>,
}

impl PartialAssignment {
    pub fn empty(n: u32) -> PartialAssignment {
        PartialAssignment {
            values: vec![None; n as usize],
        }
    }

    pub fn assign(&mut self, v: VarId, b: bool) {
        self.values[v.index()] = Some(b);
    }

    pub fn with(mut self, v: VarId, b: bool) -> Self {
        self.assign(v, b);
        self
    }

    pub fn get(&self, v: VarId) -> Option<bool> {
        self.values[v.index()]
    }
}

/// A CNF formula over variables `1..=n` with clause width at most `k`.
/// Clause list order is stable; it defines lexicographic tie-breaking.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    pub n: u32,
    pub k: usize,
    clauses: Vec<Clause>,
}

impl fmt::Debug for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CnfFormula(n={}, k={}, {:?})",
            self.n, self.k, self.clauses
        )
    }
}

impl CnfFormula {
    pub fn new(n: u32, k: usize, clauses: Vec<Clause>) -> Result<CnfFormula> {
        for c in &clauses {
            if c.len() > k {
                return Err(Error::WidthExceeded { width: c.len(), k });
            }
            for v in c.vars() {
                if v.0 == 0 || v.0 > n {
                    return Err(Error::VariableOutOfRange { var: v.0, n });
                }
            }
        }
        Ok(CnfFormula { n, k, clauses })
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        (1..=self.n).map(VarId)
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }

    pub fn evaluate(&self, a: &Assignment) -> bool {
        self.clauses
            .iter()
            .all(|c| c.literals().iter().any(|l| l.positive == a.value(l.var)))
    }

    /// Bitmask form of the clause list for brute-force loops; only valid
    /// for `n <= 32`.
    pub(crate) fn masks(&self) -> Vec<(u32, u32)> {
        assert!(self.n <= 32);
        self.clauses
            .iter()
            .map(|c| {
                let mut pos = 0u32;
                let mut neg = 0u32;
                for l in c.literals() {
                    if l.positive {
                        pos |= 1 << l.var.index();
                    } else {
                        neg |= 1 << l.var.index();
                    }
                }
                (pos, neg)
            })
            .collect()
    }

    /// Applies a partial assignment: satisfied clauses are removed,
    /// falsified literals are dropped, and an empty clause is retained as a
    /// mark of unsatisfiability. Variable indexing is unchanged.
    pub fn restrict(&self, rho: &PartialAssignment) -> CnfFormula {
        let mut out = Vec::new();
        'clause: for c in &self.clauses {
            let mut kept = Vec::new();
            for &l in c.literals() {
                match rho.get(l.var) {
                    Some(b) if b == l.positive => continue 'clause,
                    Some(_) => {}
                    None => kept.push(l),
                }
            }
            out.push(Clause { literals: kept });
        }
        CnfFormula {
            n: self.n,
            k: self.k,
            clauses: out,
        }
    }

    /// All satisfying assignments in ascending binary order, reading the
    /// value tuple `(x1, ..., xn)` as a binary number with `x1` the most
    /// significant digit.
    pub fn all_satisfying(&self) -> Result<Vec<Assignment>> {
        if self.n > BRUTE_FORCE_CAP {
            return Err(Error::BruteForceCap {
                what: "all_satisfying",
                cap: BRUTE_FORCE_CAP,
                n: self.n,
            });
        }
        let masks = self.masks();
        let n = self.n;
        let mut out = Vec::new();
        for m in 0u64..(1u64 << n) {
            // Tuple-ascending order means x1 is the high bit of the counter.
            let bits = (m as u32).reverse_bits() >> (32 - n);
            if masks.iter().all(|&(p, g)| (p & bits) | (g & !bits) != 0) {
                out.push(Assignment { n, bits });
            }
        }
        Ok(out)
    }

    /// The unique satisfying assignment, or an error.
    pub fn unique_solution(&self) -> Result<Assignment> {
        let sols = self.all_satisfying()?;
        if sols.len() != 1 {
            return Err(Error::NotUniquelySatisfiable {
                solutions: sols.len(),
            });
        }
        Ok(sols[0])
    }

    /// Flips literal polarities per variable so that the unique satisfying
    /// assignment becomes all-ones; clause order is preserved.
    pub fn normalize_all_ones(&self) -> Result<CnfFormula> {
        let alpha = self.unique_solution()?;
        let clauses = self
            .clauses
            .iter()
            .map(|c| Clause {
                literals: c
                    .literals()
                    .iter()
                    .map(|&l| Literal {
                        var: l.var,
                        positive: l.positive == alpha.value(l.var),
                    })
                    .collect(),
            })
            .collect();
        Ok(CnfFormula {
            n: self.n,
            k: self.k,
            clauses,
        })
    }

    /// True if the all-ones assignment satisfies the formula (necessary for
    /// a normalized instance; cheap to check).
    pub fn satisfied_by_all_ones(&self) -> bool {
        self.evaluate(&Assignment::all_ones(self.n))
    }

    /// All clauses in which `x` occurs positively and every other literal
    /// negatively, in clause-list order.
    pub fn critical_clauses(&self, x: VarId) -> Vec<&Clause> {
        self.clauses
            .iter()
            .filter(|c| c.is_critical_for(x))
            .collect()
    }

    /// The lexicographically smallest critical clause of `x`.
    pub fn canonical_critical_clause(&self, x: VarId) -> Option<&Clause> {
        self.critical_clauses(x).into_iter().min()
    }
}

// ---------------------------------------------------------------------------
// DIMACS
// ---------------------------------------------------------------------------

/// Parses DIMACS CNF: `c` comment lines, a `p cnf n m` header and
/// zero-terminated clauses. `k` is the maximum clause width encountered.
pub fn parse_dimacs(input: &str) -> Result<CnfFormula> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.trim();
        let err = |msg: String| Error::Dimacs {
            line: lineno + 1,
            msg,
        };
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err("duplicate header".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[1] != "cnf" {
                return Err(err(format!("malformed header {line:?}")));
            }
            let n: u32 = fields[2]
                .parse()
                .map_err(|_| err("bad variable count".into()))?;
            let m: usize = fields[3]
                .parse()
                .map_err(|_| err("bad clause count".into()))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| err("clause before header".into()))?;
        for tok in line.split_whitespace() {
            let code: i64 = tok
                .parse()
                .map_err(|_| err(format!("bad literal {tok:?}")))?;
            if code == 0 {
                let lits: Vec<Literal> = current
                    .iter()
                    .map(|&c| Literal::new(c.unsigned_abs() as u32, c > 0))
                    .collect();
                clauses.push(Clause::new(lits)?);
                current.clear();
            } else {
                if code.unsigned_abs() > u64::from(n) {
                    return Err(Error::VariableOutOfRange {
                        var: code.unsigned_abs() as u32,
                        n,
                    });
                }
                current.push(code);
            }
        }
    }
    let (n, _m) = header.ok_or(Error::Dimacs {
        line: 0,
        msg: "missing header".into(),
    })?;
    if !current.is_empty() {
        return Err(Error::Dimacs {
            line: 0,
            msg: "missing clause terminator".into(),
        });
    }
    // A header clause count that disagrees with the body is tolerated;
    // plenty of files in the wild get it wrong.
    let k = clauses.iter().map(Clause::len).max().unwrap_or(0).max(1);
    CnfFormula::new(n, k, clauses)
}

/// Writes DIMACS, emitting each string in `comments` as a `c` line.
pub fn write_dimacs(f: &CnfFormula, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("c ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&format!("p cnf {} {}\n", f.n, f.clauses().len()));
    for c in f.clauses() {
        for l in c.literals() {
            out.push_str(&l.code().to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

// ---------------------------------------------------------------------------
// Inferred clauses and TwoCC
// ---------------------------------------------------------------------------

/// `F` plus every 3-clause over the variables of some pair of clauses of `F`
/// that the pair semantically implies. Implication is checked by exhaustive
/// enumeration over the pair's variables; duplicates are removed and the
/// added clauses are appended in sorted order.
pub fn f_tilde(f: &CnfFormula) -> Result<CnfFormula> {
    if f.k != 3 {
        return Err(Error::WrongWidth {
            expected: 3,
            got: f.k,
        });
    }
    let present: BTreeSet<Clause> = f.clauses().iter().cloned().collect();
    let mut added: BTreeSet<Clause> = BTreeSet::new();
    let m = f.clauses().len();
    for i in 0..m {
        for j in (i + 1)..m {
            let (ci, cj) = (&f.clauses()[i], &f.clauses()[j]);
            let vars: Vec<VarId> = ci
                .vars()
                .chain(cj.vars())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if vars.len() < 3 {
                continue;
            }
            // Local brute-force tables over the pair's variables.
            let idx = |v: VarId| vars.iter().position(|&u| u == v).unwrap();
            let lit_mask = |c: &Clause| {
                let (mut pos, mut neg) = (0u32, 0u32);
                for l in c.literals() {
                    if l.positive {
                        pos |= 1 << idx(l.var);
                    } else {
                        neg |= 1 << idx(l.var);
                    }
                }
                (pos, neg)
            };
            let mi = lit_mask(ci);
            let mj = lit_mask(cj);
            let sat = |(p, g): (u32, u32), a: u32| (p & a) | (g & !a) != 0;
            // Assignments over the pair's variables that satisfy both clauses.
            let models: Vec<u32> = (0u32..1 << vars.len())
                .filter(|&a| sat(mi, a) && sat(mj, a))
                .collect();
            for t in triples(vars.len()) {
                for pol in 0u8..8 {
                    let (mut pos, mut neg) = (0u32, 0u32);
                    for (b, &vi) in t.iter().enumerate() {
                        if pol >> b & 1 == 1 {
                            pos |= 1 << vi;
                        } else {
                            neg |= 1 << vi;
                        }
                    }
                    if models.iter().all(|&a| sat((pos, neg), a)) {
                        let lits = t
                            .iter()
                            .enumerate()
                            .map(|(b, &vi)| Literal {
                                var: vars[vi],
                                positive: pol >> b & 1 == 1,
                            })
                            .collect();
                        let d = Clause::new(lits)?;
                        if !present.contains(&d) {
                            added.insert(d);
                        }
                    }
                }
            }
        }
    }
    let mut clauses = f.clauses().to_vec();
    clauses.extend(added);
    CnfFormula::new(f.n, 3, clauses)
}

fn triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// How `twocc_set` counts critical clauses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoCcMode {
    /// Count critical clauses in the inferred closure (3-CNF only).
    InferredClosure,
    /// Count critical clauses in `F` as given (any width).
    Plain,
}

/// Variables with at least two distinct critical clauses, either in the
/// inferred closure or in `F` itself depending on `mode`.
pub fn twocc_set(f: &CnfFormula, mode: TwoCcMode) -> Result<BTreeSet<VarId>> {
    let host;
    let counted: &CnfFormula = match mode {
        TwoCcMode::InferredClosure => {
            host = f_tilde(f)?;
            &host
        }
        TwoCcMode::Plain => f,
    };
    let mut out = BTreeSet::new();
    for x in f.vars() {
        let distinct: BTreeSet<&Clause> = counted.critical_clauses(x).into_iter().collect();
        if distinct.len() >= 2 {
            out.insert(x);
        }
    }
    Ok(out)
}

/// The `twocc_set` mode a formula's width calls for: the inferred closure
/// for 3-CNF, plain counting otherwise.
pub fn default_twocc_mode(f: &CnfFormula) -> TwoCcMode {
    if f.k == 3 {
        TwoCcMode::InferredClosure
    } else {
        TwoCcMode::Plain
    }
}

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

/// Sidecar metadata emitted next to generated instances.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratedSidecar {
    pub n: u32,
    pub k: usize,
    pub seed: u64,
    pub unique_solution: Vec<u8>,
}

/// Retry budget for `generate_unique_instance`.
pub const GENERATION_BUDGET: usize = 500;

/// Generates a k-CNF with the all-ones assignment as its unique solution:
/// one critical clause per variable with random negative companions, plus
/// random clauses satisfied by all-ones, re-sampled until `all_satisfying`
/// confirms uniqueness. Deterministic in `seed`.
pub fn generate_unique_instance(n: u32, k: usize, density: f64, seed: u64) -> Result<CnfFormula> {
    if n > BRUTE_FORCE_CAP {
        return Err(Error::BruteForceCap {
            what: "generate_unique_instance",
            cap: BRUTE_FORCE_CAP,
            n,
        });
    }
    assert!(n >= 1 && k >= 1 && density >= 0.0);
    let mut rng = seeds::rng(seed);
    let target = ((density * f64::from(n)).round() as usize).max(n as usize);
    let all_vars: Vec<u32> = (1..=n).collect();
    for _ in 0..GENERATION_BUDGET {
        let mut clauses: Vec<Clause> = Vec::new();
        for x in 1..=n {
            let mut others: Vec<u32> = all_vars.iter().copied().filter(|&v| v != x).collect();
            others.shuffle(&mut rng);
            let companions = others.into_iter().take(k - 1);
            let mut lits = vec![Literal::new(x, true)];
            lits.extend(companions.map(|v| Literal::new(v, false)));
            clauses.push(Clause::new(lits)?);
        }
        while clauses.len() < target {
            let mut vars = all_vars.clone();
            vars.shuffle(&mut rng);
            let width = k.min(n as usize);
            let chosen: Vec<u32> = vars.into_iter().take(width).collect();
            let mut lits: Vec<Literal> =
                chosen.iter().map(|&v| Literal::new(v, rng.gen())).collect();
            if lits.iter().all(|l| !l.positive) {
                let i = rng.gen_range(0..lits.len());
                lits[i] = lits[i].negated();
            }
            clauses.push(Clause::new(lits)?);
        }
        let mut seen = BTreeSet::new();
        clauses.retain(|c| seen.insert(c.clone()));
        let f = CnfFormula::new(n, k, clauses)?;
        let sols = f.all_satisfying()?;
        if sols.len() == 1 && sols[0] == Assignment::all_ones(n) {
            return Ok(f);
        }
    }
    Err(Error::GenerationBudget {
        attempts: GENERATION_BUDGET,
    })
}

/// A structured, fully regular 3-CNF with the all-ones unique solution:
/// variable `i` gets the critical clause `(i | ~(i+a) | ~(i+b))` with
/// cyclic offsets, and every positive pair `(i | j)` is added so that no
/// assignment with two or more zeros survives. The critical clause graph
/// is 2-regular and, for suitable offsets, the inferred-closure
/// two-critical-clause set is empty.
pub fn shift_instance(n: u32, a: u32, b: u32) -> Result<CnfFormula> {
    if n < 4 || a == 0 || b == 0 || a % n == b % n || a.is_multiple_of(n) || b.is_multiple_of(n) {
        return Err(Error::OutOfRange(format!(
            "bad shift offsets ({a}, {b}) for n={n}"
        )));
    }
    let at = |i: u32, off: u32| (i - 1 + off) % n + 1;
    let mut clauses = Vec::new();
    for i in 1..=n {
        clauses.push(Clause::new(vec![
            Literal::new(i, true),
            Literal::new(at(i, a), false),
            Literal::new(at(i, b), false),
        ])?);
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            clauses.push(Clause::new(vec![
                Literal::new(i, true),
                Literal::new(j, true),
            ])?);
        }
    }
    CnfFormula::new(n, 3, clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clause(codes: &[i32]) -> Clause {
        Clause::from_codes(codes).unwrap()
    }

    fn formula(n: u32, k: usize, cs: &[&[i32]]) -> CnfFormula {
        CnfFormula::new(n, k, cs.iter().map(|c| clause(c)).collect()).unwrap()
    }

    /// Arbitrary small formulas: n in 2..=10, up to 12 clauses of width
    /// up to 3 over distinct variables.
    fn arb_formula() -> impl Strategy<Value = CnfFormula> {
        (2u32..=10).prop_flat_map(|n| {
            let lit = (1..=n, any::<bool>());
            let cl = proptest::collection::vec(lit, 1..=3).prop_filter_map(
                "distinct variables",
                |lits| {
                    let mut seen = std::collections::BTreeSet::new();
                    let lits: Vec<Literal> = lits
                        .into_iter()
                        .filter(|&(v, _)| seen.insert(v))
                        .map(|(v, pos)| Literal::new(v, pos))
                        .collect();
                    Clause::new(lits).ok()
                },
            );
            proptest::collection::vec(cl, 0..=12)
                .prop_map(move |clauses| CnfFormula::new(n, 3, clauses).unwrap())
        })
    }

    proptest! {
        /// Restricting and then evaluating equals evaluating the combined
        /// assignment, checked over every total assignment.
        #[test]
        fn restrict_commutes_with_evaluation(f in arb_formula(), mask in any::<u32>(), vals in any::<u32>()) {
            let mut rho = PartialAssignment::empty(f.n);
            for v in f.vars() {
                if mask >> v.index() & 1 == 1 {
                    rho.assign(v, vals >> v.index() & 1 == 1);
                }
            }
            let restricted = f.restrict(&rho);
            for bits in 0..(1u32 << f.n) {
                let tau = Assignment { n: f.n, bits };
                let mut combined = tau;
                for v in f.vars() {
                    if let Some(b) = rho.get(v) {
                        combined.set(v, b);
                    }
                }
                prop_assert_eq!(restricted.evaluate(&tau), f.evaluate(&combined));
            }
        }

        /// Writing and re-parsing reproduces the formula (width bound taken
        /// from the widest clause).
        #[test]
        fn dimacs_round_trip(f in arb_formula()) {
            let text = write_dimacs(&f, &[]);
            let back = parse_dimacs(&text).unwrap();
            prop_assert_eq!(back.n, f.n);
            prop_assert_eq!(back.clauses(), f.clauses());
        }
    }

    #[test]
    fn parse_smallest() {
        let f = parse_dimacs("p cnf 1 1\n1 0").unwrap();
        assert_eq!(f.n, 1);
        assert_eq!(f.clauses(), &[clause(&[1])]);
    }

    #[test]
    fn parse_three_literals() {
        let f = parse_dimacs("p cnf 3 1\n1 -2 -3 0").unwrap();
        assert_eq!(f.clauses(), &[clause(&[1, -2, -3])]);
        assert_eq!(f.k, 3);
    }

    #[test]
    fn parse_rejects_conflicting_polarities() {
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 -1 0"),
            Err(Error::DuplicateVariable { var: 1 })
        ));
    }

    #[test]
    fn parse_rejects_out_of_range_and_unterminated() {
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n3 0"),
            Err(Error::VariableOutOfRange { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 2"),
            Err(Error::Dimacs { .. })
        ));
        assert!(matches!(
            parse_dimacs("p dnf 2 1\n1 0"),
            Err(Error::Dimacs { .. })
        ));
    }

    #[test]
    fn dimacs_round_trip_with_comments() {
        let f = formula(3, 3, &[&[1, -2, -3], &[2]]);
        let text = write_dimacs(&f, &["generated".to_string()]);
        assert!(text.starts_with("c generated\n"));
        assert_eq!(parse_dimacs(&text).unwrap(), f);
    }

    #[test]
    fn restrict_examples() {
        // (x | ~y) with y -> 1 keeps (x).
        let f = formula(2, 2, &[&[1, -2]]);
        let r = f.restrict(&PartialAssignment::empty(2).with(VarId(2), true));
        assert_eq!(r.clauses(), &[clause(&[1])]);
        // (x | ~y) with y -> 0 is satisfied and removed.
        let r = f.restrict(&PartialAssignment::empty(2).with(VarId(2), false));
        assert!(r.clauses().is_empty());
        // (x | ~y) & (y) with x -> 0, y -> 0 leaves an empty clause.
        let g = formula(2, 2, &[&[1, -2], &[2]]);
        let rho = PartialAssignment::empty(2)
            .with(VarId(1), false)
            .with(VarId(2), false);
        assert!(g.restrict(&rho).has_empty_clause());
    }

    #[test]
    fn all_satisfying_examples() {
        let f = formula(1, 1, &[&[1]]);
        assert_eq!(
            f.all_satisfying().unwrap(),
            vec![Assignment { n: 1, bits: 1 }]
        );

        let free = CnfFormula::new(2, 2, vec![]).unwrap();
        let sols = free.all_satisfying().unwrap();
        assert_eq!(sols.len(), 4);
        // Ascending binary order on (x1, x2).
        let tuples: Vec<Vec<bool>> = sols.iter().map(Assignment::values).collect();
        assert_eq!(
            tuples,
            vec![
                vec![false, false],
                vec![false, true],
                vec![true, false],
                vec![true, true]
            ]
        );

        let unsat = formula(1, 1, &[&[1], &[-1]]);
        assert!(unsat.all_satisfying().unwrap().is_empty());
    }

    #[test]
    fn all_satisfying_cap() {
        let f = CnfFormula::new(25, 3, vec![]).unwrap();
        assert!(matches!(
            f.all_satisfying(),
            Err(Error::BruteForceCap { .. })
        ));
    }

    #[test]
    fn normalize_flips_to_all_ones() {
        // Unique solution (0, 1): x1 forced false, x2 forced true.
        let f = formula(2, 2, &[&[-1], &[2]]);
        let g = f.normalize_all_ones().unwrap();
        assert_eq!(g.clauses(), &[clause(&[1]), clause(&[2])]);
        assert_eq!(g.unique_solution().unwrap(), Assignment::all_ones(2));
        // Already normalized input is unchanged.
        let h = formula(2, 2, &[&[1], &[2], &[1, -2]]);
        assert_eq!(h.normalize_all_ones().unwrap(), h);
        // Two solutions is an error.
        let two = formula(2, 2, &[&[1, 2]]);
        assert!(matches!(
            two.normalize_all_ones(),
            Err(Error::NotUniquelySatisfiable { solutions: 3 })
        ));
    }

    #[test]
    fn critical_clause_scan() {
        let f = formula(3, 3, &[&[1, -2, -3], &[2, -1], &[3]]);
        assert_eq!(f.critical_clauses(VarId(1)), vec![&clause(&[1, -2, -3])]);
        assert_eq!(f.critical_clauses(VarId(3)), vec![&clause(&[3])]);
        let g = formula(3, 3, &[&[1, -2], &[1, -3], &[2], &[3]]);
        assert_eq!(g.critical_clauses(VarId(1)).len(), 2);
    }

    #[test]
    fn canonical_is_lexicographic() {
        let f = formula(4, 3, &[&[1, -2, -4], &[1, -2, -3]]);
        assert_eq!(
            f.canonical_critical_clause(VarId(1)),
            Some(&clause(&[1, -2, -3]))
        );
        let g = formula(5, 2, &[&[1, -5], &[1, -2]]);
        assert_eq!(
            g.canonical_critical_clause(VarId(1)),
            Some(&clause(&[1, -2]))
        );
        let single = formula(3, 3, &[&[1, -2, -3]]);
        assert_eq!(
            single.canonical_critical_clause(VarId(1)),
            Some(&clause(&[1, -2, -3]))
        );
    }

    #[test]
    fn f_tilde_resolvent() {
        // (x | ~y | ~z) and (a | ~x | ~y) imply (a | ~y | ~z);
        // variables: x=1 y=2 z=3 a=4.
        let f = formula(4, 3, &[&[1, -2, -3], &[4, -1, -2]]);
        let ft = f_tilde(&f).unwrap();
        assert!(ft.clauses().contains(&clause(&[4, -2, -3])));
        // Original clauses still present, in order, first.
        assert_eq!(&ft.clauses()[..2], f.clauses());
    }

    #[test]
    fn f_tilde_no_resolvable_pair() {
        let f = formula(6, 3, &[&[1, -2, -3], &[4, -5, -6]]);
        assert_eq!(f_tilde(&f).unwrap(), f);
    }

    #[test]
    fn f_tilde_widens_implied_two_clause() {
        // (x) and (y | ~z) have a unit: every 3-clause over {x,y,z}
        // containing the literal x is implied.
        let f = formula(3, 3, &[&[1], &[2, -3]]);
        let ft = f_tilde(&f).unwrap();
        assert!(ft.clauses().contains(&clause(&[1, -2, -3])));
        assert!(ft.clauses().contains(&clause(&[1, 2, 3])));
        // ...but nothing the pair does not entail.
        assert!(!ft.clauses().contains(&clause(&[-1, 2, 3])));
    }

    #[test]
    fn f_tilde_requires_k3() {
        let f = formula(4, 4, &[&[1, -2, -3, -4]]);
        assert!(matches!(f_tilde(&f), Err(Error::WrongWidth { .. })));
    }

    #[test]
    fn twocc_modes() {
        // One critical clause, no resolvable pair: not in TwoCC.
        let f = formula(3, 3, &[&[1, -2, -3], &[2], &[3]]);
        let set = twocc_set(&f, TwoCcMode::Plain).unwrap();
        assert!(!set.contains(&VarId(1)));

        // Two criticals in F itself.
        let g = formula(5, 3, &[&[1, -2, -3], &[1, -4, -5], &[2], &[3], &[4], &[5]]);
        assert!(twocc_set(&g, TwoCcMode::Plain).unwrap().contains(&VarId(1)));

        // Second critical appears only after inference: x=1 has the critical
        // (1 | -2 | -3); the pair (1 | -2 | -3), (3 | -4) infers (1 | -2 | -4).
        let h = formula(4, 3, &[&[1, -2, -3], &[3, -4]]);
        assert!(!twocc_set(&h, TwoCcMode::Plain).unwrap().contains(&VarId(1)));
        assert!(twocc_set(&h, TwoCcMode::InferredClosure)
            .unwrap()
            .contains(&VarId(1)));
    }

    #[test]
    fn generator_forced_single_variable() {
        let f = generate_unique_instance(1, 3, 1.0, 3).unwrap();
        assert_eq!(f.clauses(), &[clause(&[1])]);
    }

    #[test]
    fn generator_unique_all_ones() {
        for seed in [7u64, 8, 9] {
            let f = generate_unique_instance(3, 3, 4.0, seed).unwrap();
            assert_eq!(f.unique_solution().unwrap(), Assignment::all_ones(3));
        }
    }

    #[test]
    fn generator_cap() {
        assert!(matches!(
            generate_unique_instance(25, 3, 4.0, 0),
            Err(Error::BruteForceCap { .. })
        ));
    }

    #[test]
    fn generator_deterministic() {
        let a = generate_unique_instance(8, 3, 4.0, 42).unwrap();
        let b = generate_unique_instance(8, 3, 4.0, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_corpus_every_variable_has_a_critical_clause() {
        for seed in 0..20u64 {
            let f = generate_unique_instance(8, 3, 4.0, seed).unwrap();
            for x in f.vars() {
                assert!(!f.critical_clauses(x).is_empty(), "var {x} in seed {seed}");
            }
        }
    }

    #[test]
    fn shift_instance_is_regular_and_unique() {
        for (n, a, b) in [(9u32, 1u32, 3u32), (12, 1, 5), (16, 3, 7)] {
            let f = shift_instance(n, a, b).unwrap();
            assert_eq!(f.unique_solution().unwrap(), Assignment::all_ones(n));
            for x in f.vars() {
                assert_eq!(f.critical_clauses(x).len(), 1, "n={n} x={x}");
            }
            assert!(
                twocc_set(&f, TwoCcMode::InferredClosure)
                    .unwrap()
                    .is_empty(),
                "(n={n}, a={a}, b={b})"
            );
        }
        assert!(shift_instance(9, 2, 2).is_err());
    }

    #[test]
    fn canonical_choice_is_stable_across_threads() {
        let f = formula(4, 3, &[&[1, -3, -4], &[1, -2, -3], &[2], &[3], &[4]]);
        let reference = f.canonical_critical_clause(VarId(1)).cloned();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let f = f.clone();
                std::thread::spawn(move || f.canonical_critical_clause(VarId(1)).cloned())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), reference);
        }
    }
}
