//! The PPSZ loop, forced-variable statistics, and exact / Monte Carlo
//! success probabilities.
//!
//! A run processes variables in order; a variable whose value is w-implied
//! by the current formula is inferred, anything else costs one coin. On a
//! uniquely satisfiable formula a run succeeds exactly when every coin
//! matches the solution, so for a fixed order the success probability is
//! exactly `2^(-(n - Forced))`.

use crate::cct::{Estimate, Label, Placement};
use crate::dist::PlacementSampler;
use crate::formula::{Assignment, CnfFormula, PartialAssignment, VarId};
use crate::imply::{self, Implier};
use crate::{seeds, Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Orders variables by ascending placement value, ties by ascending index.
pub fn permutation_from_placement(
    pi: &Placement,
    vars: impl Iterator<Item = VarId>,
) -> Result<Vec<VarId>> {
    let mut keyed: Vec<(f64, VarId)> = vars.map(|v| Ok((pi.var(v)?, v))).collect::<Result<_>>()?;
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, v)| v).collect())
}

/// Source of guess bits.
pub trait CoinSource {
    fn next_coin(&mut self) -> bool;
}

/// Coins drawn from a seeded generator.
pub struct SeededCoins(pub ChaCha8Rng);

impl SeededCoins {
    pub fn new(seed: u64) -> SeededCoins {
        SeededCoins(seeds::rng(seed))
    }
}

impl CoinSource for SeededCoins {
    fn next_coin(&mut self) -> bool {
        self.0.gen()
    }
}

/// A fixed coin list; panics when exhausted.
pub struct ListCoins {
    bits: Vec<bool>,
    next: usize,
}

impl ListCoins {
    pub fn new(bits: &[bool]) -> ListCoins {
        ListCoins {
            bits: bits.to_vec(),
            next: 0,
        }
    }

    pub fn consumed(&self) -> usize {
        self.next
    }
}

impl CoinSource for ListCoins {
    fn next_coin(&mut self) -> bool {
        let b = self
            .bits
            .get(self.next)
            .copied()
            .expect("coin list exhausted");
        self.next += 1;
        b
    }
}

/// Result of one run.
#[derive(Clone, Debug, Serialize)]
pub struct PpszOutcome {
    /// The satisfying assignment, if the run found one.
    pub result: Option<Assignment>,
    /// Per-variable: inferred rather than guessed (indexed by `VarId - 1`).
    pub forced_mask: Vec<bool>,
    pub guessed_count: u32,
}

/// One pass of the algorithm with a fixed variable order. When both values
/// of a variable are implied the formula is already unsatisfiable under the
/// prefix; the run sets 1 and fails naturally.
pub fn run_fixed(
    f: &CnfFormula,
    order: &[VarId],
    w: usize,
    coins: &mut dyn CoinSource,
) -> Result<PpszOutcome> {
    run_fixed_with(&Implier::default(), f, order, w, coins)
}

pub fn run_fixed_with(
    cfg: &Implier,
    f: &CnfFormula,
    order: &[VarId],
    w: usize,
    coins: &mut dyn CoinSource,
) -> Result<PpszOutcome> {
    assert_eq!(order.len(), f.n as usize, "order must cover all variables");
    let mut current = f.clone();
    let mut beta = Assignment::all_ones(f.n);
    let mut forced_mask = vec![false; f.n as usize];
    let mut guessed = 0u32;
    for &x in order {
        let b = if imply::w_implies_with(cfg, &current, w, x, true)? {
            forced_mask[x.index()] = true;
            true
        } else if imply::w_implies_with(cfg, &current, w, x, false)? {
            forced_mask[x.index()] = true;
            false
        } else {
            guessed += 1;
            coins.next_coin()
        };
        beta.set(x, b);
        current = current.restrict(&PartialAssignment::empty(f.n).with(x, b));
    }
    // Soundness: a returned assignment always satisfies the input.
    let ok = f.evaluate(&beta);
    debug_assert_eq!(ok, !current.has_empty_clause());
    Ok(PpszOutcome {
        result: ok.then_some(beta),
        forced_mask,
        guessed_count: guessed,
    })
}

/// Whether `x` is inferred when processed under `order` on a normalized
/// formula: with `A` the variables before `x`, whether `F|_{A=1}`
/// w-implies `(x = 1)`.
pub fn forced(f: &CnfFormula, order: &[VarId], w: usize, x: VarId) -> Result<bool> {
    forced_with(&Implier::default(), f, order, w, x)
}

pub fn forced_with(
    cfg: &Implier,
    f: &CnfFormula,
    order: &[VarId],
    w: usize,
    x: VarId,
) -> Result<bool> {
    if !f.satisfied_by_all_ones() {
        return Err(Error::NotNormalized);
    }
    let mut rho = PartialAssignment::empty(f.n);
    for &v in order {
        if v == x {
            break;
        }
        rho.assign(v, true);
    }
    imply::w_implies_with(cfg, &f.restrict(&rho), w, x, true)
}

/// Number of variables inferred under `order`.
pub fn forced_count(f: &CnfFormula, order: &[VarId], w: usize) -> Result<u32> {
    let mut count = 0;
    for &x in order {
        if forced(f, order, w, x)? {
            count += 1;
        }
    }
    Ok(count)
}

/// A dyadic success probability `2^(-guessed)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SuccessProbability {
    pub guessed: u32,
}

impl SuccessProbability {
    pub fn value(self) -> f64 {
        0.5f64.powi(self.guessed as i32)
    }

    /// Exact numerator over denominator `2^n`.
    pub fn numerator(self, n: u32) -> u128 {
        1u128 << (n - self.guessed)
    }
}

/// The exact success probability of a run with fixed order on a normalized
/// formula: `2^(-(n - Forced))` as an exact dyadic rational.
pub fn exact_success_probability(
    f: &CnfFormula,
    order: &[VarId],
    w: usize,
) -> Result<SuccessProbability> {
    let forced = forced_count(f, order, w)?;
    Ok(SuccessProbability {
        guessed: f.n - forced,
    })
}

/// A Monte Carlo success-probability estimate.
#[derive(Clone, Debug, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub forced_mean: f64,
    pub trials: u64,
    pub seed: u64,
    pub distribution: String,
}

/// Averages the exact per-order success probability over placements drawn
/// from `sampler`. Trial `i` uses its own generator derived from
/// `(seed, i)`, so the result does not depend on thread scheduling.
pub fn success_probability_mc(
    f: &CnfFormula,
    w: usize,
    sampler: &dyn PlacementSampler,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    use rayon::prelude::*;
    assert!(trials >= 1);
    let labels: Vec<Label> = f.vars().map(Label::Var).collect();
    let per_trial: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::trial_rng(seed, i);
            let values = sampler.sample(&labels, &mut rng);
            let pi = Placement::from_pairs(labels.iter().copied().zip(values.iter().copied()));
            let order = permutation_from_placement(&pi, f.vars())?;
            let p = exact_success_probability(f, &order, w)?;
            Ok((p.value(), f64::from(f.n - p.guessed)))
        })
        .collect::<Result<_>>()?;
    let probs: Vec<f64> = per_trial.iter().map(|&(p, _)| p).collect();
    let est = Estimate::from_values(&probs);
    let forced_mean = per_trial.iter().map(|&(_, c)| c).sum::<f64>() / trials as f64;
    Ok(McEstimate {
        mean: est.mean,
        stderr: est.stderr,
        forced_mean,
        trials,
        seed,
        distribution: sampler.describe(),
    })
}

/// Per-variable forced frequencies over sampled placements.
pub fn forced_statistics(
    f: &CnfFormula,
    w: usize,
    sampler: &dyn PlacementSampler,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    let labels: Vec<Label> = f.vars().map(Label::Var).collect();
    let counts: Vec<Vec<u32>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::trial_rng(seed, i);
            let values = sampler.sample(&labels, &mut rng);
            let pi = Placement::from_pairs(labels.iter().copied().zip(values.iter().copied()));
            let order = permutation_from_placement(&pi, f.vars())?;
            let mut row = vec![0u32; f.n as usize];
            for x in f.vars() {
                if forced(f, &order, w, x)? {
                    row[x.index()] = 1;
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut freq = vec![0.0; f.n as usize];
    for row in counts {
        for (i, c) in row.into_iter().enumerate() {
            freq[i] += f64::from(c);
        }
    }
    for v in &mut freq {
        *v /= trials as f64;
    }
    Ok(freq)
}

// ---------------------------------------------------------------------------
// Exhaustive-coin oracle
// ---------------------------------------------------------------------------

/// Independent reference: runs the actual loop over every coin stream,
/// branching only where a coin is consumed, and totals the success weight
/// exactly. Returns the numerator over denominator `2^n`.
///
/// This is the oracle against which `exact_success_probability` is checked;
/// it shares the algorithm loop but not the forced-count formula.
pub fn exhaustive_coin_success_numerator(
    f: &CnfFormula,
    order: &[VarId],
    w: usize,
) -> Result<u128> {
    fn rec(
        f: &CnfFormula,
        original: &CnfFormula,
        order: &[VarId],
        w: usize,
        pos: usize,
        beta: Assignment,
        coins: u32,
    ) -> Result<u128> {
        if pos == order.len() {
            let n = original.n;
            return Ok(if original.evaluate(&beta) {
                1u128 << (n - coins)
            } else {
                0
            });
        }
        let x = order[pos];
        let step = |b: bool, coins: u32| -> Result<u128> {
            let mut nb = beta;
            nb.set(x, b);
            let restricted = f.restrict(&PartialAssignment::empty(original.n).with(x, b));
            rec(&restricted, original, order, w, pos + 1, nb, coins)
        };
        if imply::w_implies(f, w, x, true)? {
            step(true, coins)
        } else if imply::w_implies(f, w, x, false)? {
            step(false, coins)
        } else {
            Ok(step(true, coins + 1)? + step(false, coins + 1)?)
        }
    }
    rec(f, f, order, w, 0, Assignment::all_ones(f.n), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::UniformSampler;
    use crate::formula::Clause;

    fn clause(codes: &[i32]) -> Clause {
        Clause::from_codes(codes).unwrap()
    }

    fn formula(n: u32, k: usize, cs: &[&[i32]]) -> CnfFormula {
        CnfFormula::new(n, k, cs.iter().map(|c| clause(c)).collect()).unwrap()
    }

    fn vars(ids: &[u32]) -> Vec<VarId> {
        ids.iter().map(|&i| VarId(i)).collect()
    }

    #[test]
    fn permutation_examples() {
        let pi = Placement::from_pairs([(Label::Var(VarId(1)), 0.9), (Label::Var(VarId(2)), 0.1)]);
        let order = permutation_from_placement(&pi, [VarId(1), VarId(2)].into_iter()).unwrap();
        assert_eq!(order, vars(&[2, 1]));
        // Equal values break ties by index.
        let pi = Placement::from_pairs([
            (Label::Var(VarId(1)), 0.5),
            (Label::Var(VarId(2)), 0.5),
            (Label::Var(VarId(3)), 0.2),
        ]);
        let order =
            permutation_from_placement(&pi, [VarId(1), VarId(2), VarId(3)].into_iter()).unwrap();
        assert_eq!(order, vars(&[3, 1, 2]));
        // Missing value errors.
        let pi = Placement::new();
        assert!(permutation_from_placement(&pi, [VarId(1)].into_iter()).is_err());
    }

    #[test]
    fn run_unit_clause() {
        let f = formula(1, 1, &[&[1]]);
        let mut coins = ListCoins::new(&[]);
        let out = run_fixed(&f, &vars(&[1]), 1, &mut coins).unwrap();
        assert!(out.result.is_some());
        assert_eq!(out.forced_mask, vec![true]);
        assert_eq!(out.guessed_count, 0);
    }

    #[test]
    fn run_traces_on_two_variables() {
        // F = (x | ~y) with order (y, x), x=1 y=2.
        let f = formula(2, 2, &[&[1, -2]]);
        let order = vars(&[2, 1]);
        // Coin 0 for y satisfies the clause; x is unconstrained and guessed.
        for second in [false, true] {
            let mut coins = ListCoins::new(&[false, second]);
            let out = run_fixed(&f, &order, 1, &mut coins).unwrap();
            assert!(out.result.is_some(), "any x works once y=0");
            assert_eq!(out.guessed_count, 2);
            assert_eq!(coins.consumed(), 2);
        }
        // Coin 1 for y leaves the unit (x); x is then forced to 1.
        let mut coins = ListCoins::new(&[true, false]);
        let out = run_fixed(&f, &order, 1, &mut coins).unwrap();
        let beta = out.result.expect("success");
        assert!(beta.value(VarId(1)) && beta.value(VarId(2)));
        assert_eq!(out.guessed_count, 1);
        assert_eq!(coins.consumed(), 1, "second coin unused");
    }

    #[test]
    fn run_failure_is_a_value() {
        // (x) & (y | ~x): guessing x = 0 falsifies the unit.
        let f = formula(2, 2, &[&[1], &[2, -1]]);
        let order = vars(&[2, 1]);
        // y first: not implied (w=1), guess 0; then (x) forces x=1, but
        // (y | ~x) was falsified.
        let mut coins = ListCoins::new(&[false]);
        let out = run_fixed(&f, &order, 1, &mut coins).unwrap();
        assert!(out.result.is_none());
    }

    #[test]
    fn success_returns_all_ones_on_normalized_unique_instances() {
        for seed in 0..10u64 {
            let f = crate::formula::generate_unique_instance(6, 3, 4.0, seed).unwrap();
            let order: Vec<VarId> = f.vars().collect();
            let mut coins = SeededCoins::new(seed);
            let out = run_fixed(&f, &order, 2, &mut coins).unwrap();
            if let Some(beta) = out.result {
                assert_eq!(beta, Assignment::all_ones(f.n));
            }
        }
    }

    #[test]
    fn forced_examples() {
        // x last with the full chain restricted to a unit.
        let f = formula(3, 3, &[&[1, -2, -3], &[2], &[3]]);
        let order = vars(&[2, 3, 1]);
        assert!(forced(&f, &order, 1, VarId(1)).unwrap());
        // x first: no set of clauses without predecessors implies it at w=1.
        let order = vars(&[1, 2, 3]);
        assert!(!forced(&f, &order, 1, VarId(1)).unwrap());
        // A unit clause is forced under every order.
        assert!(forced(&f, &order, 1, VarId(2)).unwrap());
        // Non-normalized input is rejected.
        let bad = formula(1, 1, &[&[-1]]);
        assert!(matches!(
            forced(&bad, &vars(&[1]), 1, VarId(1)),
            Err(Error::NotNormalized)
        ));
    }

    #[test]
    fn forced_monotone_in_position() {
        // Moving x later (growing the prefix) never flips forced off.
        for seed in 0..6u64 {
            let f = crate::formula::generate_unique_instance(7, 3, 4.0, seed).unwrap();
            let base: Vec<VarId> = f.vars().collect();
            for x in f.vars() {
                let mut prev = false;
                for pos in 0..base.len() {
                    let mut order: Vec<VarId> = base.iter().copied().filter(|&v| v != x).collect();
                    order.insert(pos, x);
                    let now = forced(&f, &order, 2, x).unwrap();
                    assert!(!prev || now, "forced lost at seed {seed} x={x} pos={pos}");
                    prev = now;
                }
            }
        }
    }

    #[test]
    fn exact_probability_trivial_values() {
        let f = formula(1, 1, &[&[1]]);
        let p = exact_success_probability(&f, &vars(&[1]), 1).unwrap();
        assert_eq!(p.guessed, 0);
        assert_eq!(p.value(), 1.0);
        // n = 3 with one forced variable: 1/4.
        let g = formula(3, 3, &[&[1], &[1, 2, 3], &[1, -2, -3]]);
        let p = exact_success_probability(&g, &vars(&[1, 2, 3]), 1).unwrap();
        assert_eq!(p.guessed, 2);
        assert_eq!(p.value(), 0.25);
    }

    #[test]
    fn exact_probability_matches_exhaustive_coins() {
        use rand::seq::SliceRandom;
        let mut rng = seeds::rng(1234);
        for seed in 0..12u64 {
            let f = crate::formula::generate_unique_instance(6, 3, 4.0, seed).unwrap();
            let mut order: Vec<VarId> = f.vars().collect();
            for _ in 0..4 {
                order.shuffle(&mut rng);
                let exact = exact_success_probability(&f, &order, 2).unwrap();
                let oracle = exhaustive_coin_success_numerator(&f, &order, 2).unwrap();
                assert_eq!(oracle, exact.numerator(f.n), "seed {seed} order {order:?}");
            }
        }
    }

    #[test]
    fn coin_oracle_matches_naive_stream_enumeration() {
        // The branching oracle itself, validated against the most naive
        // route: run the actual loop on every fixed coin list of length n.
        // A run consuming c coins is represented by 2^(n-c) such lists, so
        // the success count over all 2^n lists equals the oracle numerator.
        for seed in 20..26u64 {
            let f = crate::formula::generate_unique_instance(5, 3, 4.0, seed).unwrap();
            let order: Vec<VarId> = f.vars().collect();
            for w in 1..=2usize {
                let mut successes = 0u128;
                for bits in 0u32..1 << f.n {
                    let coins: Vec<bool> = (0..f.n).map(|i| bits >> i & 1 == 1).collect();
                    let mut source = ListCoins::new(&coins);
                    if run_fixed(&f, &order, w, &mut source)
                        .unwrap()
                        .result
                        .is_some()
                    {
                        successes += 1;
                    }
                }
                let oracle = exhaustive_coin_success_numerator(&f, &order, w).unwrap();
                assert_eq!(successes, oracle, "seed {seed} w={w}");
            }
        }
    }

    #[test]
    fn mc_estimate_single_variable_is_exactly_one() {
        let f = formula(1, 1, &[&[1]]);
        let est = success_probability_mc(&f, 1, &UniformSampler, 50, 7).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn mc_estimate_matches_exhaustive_permutation_average() {
        // All 8! orders of an n = 8 instance versus a sampled estimate
        // (w = 1 keeps the full enumeration cheap; the property under test
        // is the sampling machinery, which is width-agnostic).
        use rayon::prelude::*;
        let f = crate::formula::generate_unique_instance(8, 3, 4.0, 3).unwrap();
        let ids: Vec<VarId> = f.vars().collect();
        let mut orders: Vec<Vec<VarId>> = Vec::new();
        let mut scratch = ids.clone();
        permute(&mut scratch, 0, &mut |o| orders.push(o.to_vec()));
        assert_eq!(orders.len(), 40_320);
        let total: f64 = orders
            .par_iter()
            .map(|o| exact_success_probability(&f, o, 1).unwrap().value())
            .sum();
        let exhaustive = total / orders.len() as f64;
        let est = success_probability_mc(&f, 1, &UniformSampler, 4000, 99).unwrap();
        assert!(
            (est.mean - exhaustive).abs() < 3.0 * est.stderr,
            "mc {} vs exhaustive {exhaustive} (stderr {})",
            est.mean,
            est.stderr
        );
    }

    fn permute(items: &mut Vec<VarId>, k: usize, visit: &mut impl FnMut(&[VarId])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    #[test]
    fn mc_deterministic_across_thread_counts() {
        let f = crate::formula::generate_unique_instance(7, 3, 4.0, 2).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                success_probability_mc(&f, 2, &UniformSampler, 200, 5)
                    .unwrap()
                    .mean
            })
        };
        assert_eq!(run(1), run(2));
    }

    #[test]
    fn forced_statistics_unit_clause_always_forced() {
        let f = formula(3, 3, &[&[1], &[2, -1, -3], &[3, -1, -2], &[2, 3]]);
        let freq = forced_statistics(&f, 2, &UniformSampler, 100, 1).unwrap();
        assert_eq!(freq[0], 1.0);
    }
}
