//! Placement distributions.
//!
//! Everything here is parametrized by a bias function `gamma` with
//! derivative `phi`: the univariate law has CDF `r + eps*gamma(r)`, the
//! correlated pair has density `1 + eps*phi(x)phi(y)`, and a graph `G`
//! carries the joint density `1 + eps * sum over edges of phi(x_u)phi(x_v)`,
//! under which every vertex is uniform, every edge follows the pair law,
//! and non-adjacent vertices are independent.

use crate::cct::Label;
use crate::quad;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A bias function `gamma` on `[0,1]` with derivative `phi`, identically zero
/// beyond `support_end`.
#[derive(Clone)]
pub struct GammaSpec {
    pub name: String,
    pub support_end: f64,
    /// Interior points where gamma or phi has a kink; quadratures split here.
    pub kinks: Vec<f64>,
    gamma: RealFn,
    phi: RealFn,
}

impl std::fmt::Debug for GammaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GammaSpec({})", self.name)
    }
}

impl GammaSpec {
    pub fn gamma(&self, r: f64) -> f64 {
        if r >= self.support_end {
            0.0
        } else {
            (self.gamma)(r)
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        if r >= self.support_end {
            0.0
        } else {
            (self.phi)(r)
        }
    }

    /// The correlation bias `r (1-2r)^(3/2)` with `phi = sqrt(1-2r)(1-5r)`.
    pub fn main() -> GammaSpec {
        GammaSpec {
            name: "main".into(),
            support_end: 0.5,
            kinks: vec![],
            gamma: Arc::new(|r| r * (1.0 - 2.0 * r).powf(1.5)),
            phi: Arc::new(|r| (1.0 - 2.0 * r).sqrt() * (1.0 - 5.0 * r)),
        }
    }

    /// `25 r^3 (1-2r)^2`, the early bias for variables with two critical
    /// clauses in the correlated analysis.
    pub fn twocc() -> GammaSpec {
        GammaSpec {
            name: "twocc".into(),
            support_end: 0.5,
            kinks: vec![],
            gamma: Arc::new(|r| 25.0 * r.powi(3) * (1.0 - 2.0 * r).powi(2)),
            phi: Arc::new(|r| 25.0 * r * r * (1.0 - 2.0 * r) * (3.0 - 10.0 * r)),
        }
    }

    /// `10 r^2 (1-2r)^2`, the late bias for low-indegree variables.
    pub fn id01() -> GammaSpec {
        GammaSpec {
            name: "id01".into(),
            support_end: 0.5,
            kinks: vec![],
            gamma: Arc::new(|r| 10.0 * r * r * (1.0 - 2.0 * r).powi(2)),
            phi: Arc::new(|r| 20.0 * r * (1.0 - 2.0 * r) * (1.0 - 4.0 * r)),
        }
    }

    /// `61/6 r^3 (1-2r)^2`, the compensating bias for their parents.
    pub fn pid01() -> GammaSpec {
        GammaSpec {
            name: "pid01".into(),
            support_end: 0.5,
            kinks: vec![],
            gamma: Arc::new(|r| 61.0 / 6.0 * r.powi(3) * (1.0 - 2.0 * r).powi(2)),
            phi: Arc::new(|r| 61.0 / 6.0 * r * r * (1.0 - 2.0 * r) * (3.0 - 10.0 * r)),
        }
    }

    /// `20 r^3 (1-2r)`, the two-critical-clause bias in the irregular case.
    pub fn twocc_irregular() -> GammaSpec {
        GammaSpec {
            name: "twocc-irregular".into(),
            support_end: 0.5,
            kinks: vec![],
            gamma: Arc::new(|r| 20.0 * r.powi(3) * (1.0 - 2.0 * r)),
            phi: Arc::new(|r| 20.0 * r * r * (3.0 - 8.0 * r)),
        }
    }

    /// `r (rho - r)` on `[0, rho]`, the general-width matching bias.
    pub fn general_k(rho: f64) -> GammaSpec {
        assert!(rho > 0.0 && rho < 1.0);
        GammaSpec {
            name: format!("general-k(rho={rho})"),
            support_end: rho,
            kinks: vec![],
            gamma: Arc::new(move |r| r * (rho - r)),
            phi: Arc::new(move |r| rho - 2.0 * r),
        }
    }

    /// Registry lookup by name; `general-k` needs `rho`.
    pub fn by_name(name: &str, rho: Option<f64>) -> Result<GammaSpec> {
        Ok(match name {
            "main" => GammaSpec::main(),
            "twocc" => GammaSpec::twocc(),
            "id01" => GammaSpec::id01(),
            "pid01" => GammaSpec::pid01(),
            "twocc-irregular" => GammaSpec::twocc_irregular(),
            "general-k" => GammaSpec::general_k(
                rho.ok_or_else(|| Error::OutOfRange("general-k needs rho".into()))?,
            ),
            other => return Err(Error::OutOfRange(format!("unknown gamma spec {other:?}"))),
        })
    }

    /// All fixed registry entries (excludes the rho-parametrized family).
    pub fn registry() -> Vec<GammaSpec> {
        vec![
            GammaSpec::main(),
            GammaSpec::twocc(),
            GammaSpec::id01(),
            GammaSpec::pid01(),
            GammaSpec::twocc_irregular(),
        ]
    }

    /// Quadrature split points for this spec.
    pub fn splits(&self) -> Vec<f64> {
        let mut s = self.kinks.clone();
        s.push(self.support_end);
        s
    }

    /// Extremes of `phi` on a fine grid (used by density validation).
    pub fn phi_range(&self, grid: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=grid {
            let v = self.phi(i as f64 / grid as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Mean of `phi` over an interval (exactly `(gamma(b)-gamma(a))/(b-a)`
    /// since `gamma` is the antiderivative of `phi`).
    pub fn phi_mean(&self, iv: Interval) -> f64 {
        match iv {
            Interval::Point(r) => self.phi(r),
            Interval::Lo(r) => {
                if r <= 0.0 {
                    self.phi(0.0)
                } else {
                    self.gamma(r) / r
                }
            }
            Interval::Hi(r) => {
                if r >= 1.0 {
                    self.phi(1.0)
                } else {
                    -self.gamma(r) / (1.0 - r)
                }
            }
            Interval::Full => 0.0,
            Interval::General(a, b) => {
                if (b - a).abs() < 1e-300 {
                    self.phi(a)
                } else {
                    (self.gamma(b) - self.gamma(a)) / (b - a)
                }
            }
        }
    }
}

/// Moments `m_d = E[phi^d(X)]` for uniform `X`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Moments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

/// Computes the first four moments of `phi` by quadrature.
pub fn moments(spec: &GammaSpec) -> Moments {
    let m =
        |d: i32| quad::integrate_split(|r| spec.phi(r).powi(d), 0.0, 1.0, &spec.splits(), 1e-12);
    Moments {
        m1: m(1),
        m2: m(2),
        m3: m(3),
        m4: m(4),
    }
}

// ---------------------------------------------------------------------------
// Intervals
// ---------------------------------------------------------------------------

/// A conditioning range for one coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Interval {
    /// The single point {r}.
    Point(f64),
    /// [0, r].
    Lo(f64),
    /// [r, 1].
    Hi(f64),
    /// [0, 1].
    Full,
    /// [a, b].
    General(f64, f64),
}

impl Interval {
    pub fn measure(self) -> f64 {
        match self {
            Interval::Point(_) => 0.0,
            Interval::Lo(r) => r,
            Interval::Hi(r) => 1.0 - r,
            Interval::Full => 1.0,
            Interval::General(a, b) => (b - a).max(0.0),
        }
    }

    pub fn contains(self, x: f64) -> bool {
        match self {
            Interval::Point(r) => (x - r).abs() < 1e-12,
            Interval::Lo(r) => x <= r,
            Interval::Hi(r) => x >= r,
            Interval::Full => true,
            Interval::General(a, b) => (a..=b).contains(&x),
        }
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Checks that the univariate density `1 + eps*phi` is nonnegative.
pub fn validate_univariate(spec: &GammaSpec, eps: f64) -> Result<()> {
    let (lo, hi) = spec.phi_range(10_000);
    if 1.0 + eps * lo < -1e-12 || 1.0 + eps * hi < -1e-12 {
        return Err(Error::NegativeDensity {
            spec: spec.name.clone(),
            eps,
        });
    }
    Ok(())
}

/// Inverse-CDF sample from the law `Pr[X < r] = r + eps*gamma(r)`.
/// Negative `eps` biases late instead of early.
pub fn sample_univariate(spec: &GammaSpec, eps: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    invert_cdf(spec, eps, u)
}

fn invert_cdf(spec: &GammaSpec, eps: f64, u: f64) -> f64 {
    // The CDF is monotone whenever the density is nonnegative.
    let cdf = |r: f64| r + eps * spec.gamma(r);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..52 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Samples the correlated pair with density `1 + eps*phi(x)phi(y)` by exact
/// factorization: `X` uniform, then `Y` univariate with effective
/// `eps' = eps * phi(X)`.
pub fn sample_pair(spec: &GammaSpec, eps: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let x: f64 = rng.gen();
    let y = invert_cdf(spec, eps * spec.phi(x), rng.gen());
    (x, y)
}

/// A small graph carrying pairwise correlations on its edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphKind {
    Path,
    Cycle,
    General,
}

#[derive(Clone, Debug)]
pub struct GraphShape {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub kind: GraphKind,
}

impl GraphShape {
    /// A path with `t` edges on `t+1` vertices.
    pub fn path(t: usize) -> GraphShape {
        GraphShape {
            vertices: t + 1,
            edges: (0..t).map(|i| (i, i + 1)).collect(),
            kind: GraphKind::Path,
        }
    }

    /// A cycle with `t` edges on `t` vertices (t >= 3).
    pub fn cycle(t: usize) -> GraphShape {
        assert!(t >= 3);
        GraphShape {
            vertices: t,
            edges: (0..t).map(|i| (i, (i + 1) % t)).collect(),
            kind: GraphKind::Cycle,
        }
    }

    pub fn general(vertices: usize, edges: Vec<(usize, usize)>) -> GraphShape {
        GraphShape {
            vertices,
            edges,
            kind: GraphKind::General,
        }
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            if a == v {
                out.push(b);
            } else if b == v {
                out.push(a);
            }
        }
        out
    }

    pub fn density(&self, spec: &GammaSpec, eps: f64, x: &[f64]) -> f64 {
        1.0 + eps
            * self
                .edges
                .iter()
                .map(|&(a, b)| spec.phi(x[a]) * spec.phi(x[b]))
                .sum::<f64>()
    }
}

/// Checks that the graph density stays nonnegative and returns the
/// rejection envelope constant `M >= sup density`.
pub fn validate_graph(shape: &GraphShape, spec: &GammaSpec, eps: f64) -> Result<f64> {
    let (lo, hi) = spec.phi_range(10_000);
    let worst_neg = (-(lo * hi)).max(0.0);
    let worst_pos = (hi * hi).max(lo * lo);
    let e = shape.edges.len() as f64;
    if 1.0 - eps.abs() * e * worst_neg < -1e-9 {
        let cap = (1.0 / (eps.abs() * worst_neg)).floor() as usize;
        return Err(Error::GraphDensityNegative {
            edges: shape.edges.len(),
            eps,
            cap,
        });
    }
    Ok(1.0 + eps.abs() * e * worst_pos)
}

/// Rejection-sampling statistics.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SampleStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl SampleStats {
    pub fn acceptance_ratio(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}

/// Samples one placement over the graph's vertices by rejection from the
/// uniform envelope.
pub fn sample_graph(
    shape: &GraphShape,
    spec: &GammaSpec,
    eps: f64,
    rng: &mut ChaCha8Rng,
    stats: &mut SampleStats,
) -> Result<Vec<f64>> {
    let envelope = validate_graph(shape, spec, eps)?;
    loop {
        let x: Vec<f64> = (0..shape.vertices).map(|_| rng.gen::<f64>()).collect();
        stats.proposed += 1;
        let d = shape.density(spec, eps, &x);
        debug_assert!(d >= -1e-9);
        if rng.gen::<f64>() * envelope <= d {
            stats.accepted += 1;
            return Ok(x);
        }
    }
}

// ---------------------------------------------------------------------------
// Conditional probabilities
// ---------------------------------------------------------------------------

/// Exact conditional probability under the graph law:
///
/// `Pr[X_k in A_k for k in K | X_i in A_i for i in I]`
/// `= prod_K mu(A_k) * (1 + eps * S_{E \ E_I} / (1 + eps * S_{E_I}))`
///
/// where `S_E'` sums `T_u T_v` over the edge set and `T_v` is the mean of
/// `phi` over `A_v`. `K` and its complement `I` partition the vertices;
/// point ranges are handled as limits (a point range in `K` makes the
/// product vanish).
pub fn cond_prob(
    shape: &GraphShape,
    k_set: &[usize],
    intervals: &[Interval],
    spec: &GammaSpec,
    eps: f64,
) -> f64 {
    assert_eq!(intervals.len(), shape.vertices);
    let mut in_k = vec![false; shape.vertices];
    for &k in k_set {
        in_k[k] = true;
    }
    let t: Vec<f64> = intervals.iter().map(|&iv| spec.phi_mean(iv)).collect();
    let mut sum_inner = 0.0; // edges fully inside I
    let mut sum_touching = 0.0; // edges touching K
    for &(a, b) in &shape.edges {
        let prod = t[a] * t[b];
        if in_k[a] || in_k[b] {
            sum_touching += prod;
        } else {
            sum_inner += prod;
        }
    }
    let measure: f64 = k_set.iter().map(|&k| intervals[k].measure()).product();
    measure * (1.0 + eps * sum_touching / (1.0 + eps * sum_inner))
}

/// The guaranteed lower bound on `Pr[X_u < r | ranges on all other
/// vertices]` for the `main` bias on a path or cycle with at most 22
/// edges, `eps <= 0.1`, and at most one point range:
/// `r + 1.147 eps gamma(r) sum over neighbors of min(0, T_v)`.
pub fn cond_range_lower_bound(
    shape: &GraphShape,
    u: usize,
    intervals: &[Interval],
    spec: &GammaSpec,
    eps: f64,
    r: f64,
) -> Result<f64> {
    if shape.kind == GraphKind::General {
        return Err(Error::OutOfRange("bound needs a path or cycle".into()));
    }
    if eps > 0.1 {
        return Err(Error::OutOfRange(format!(
            "bound needs eps <= 0.1, got {eps}"
        )));
    }
    if shape.edges.len() > 22 {
        return Err(Error::GraphDensityNegative {
            edges: shape.edges.len(),
            eps,
            cap: 22,
        });
    }
    let points = intervals
        .iter()
        .enumerate()
        .filter(|&(i, iv)| i != u && matches!(iv, Interval::Point(_)))
        .count();
    if points > 1 {
        return Err(Error::OutOfRange("at most one point range allowed".into()));
    }
    let neighbor_terms: f64 = shape
        .neighbors(u)
        .into_iter()
        .map(|v| spec.phi_mean(intervals[v]).min(0.0))
        .sum();
    Ok(r + 1.147 * eps * spec.gamma(r) * neighbor_terms)
}

// ---------------------------------------------------------------------------
// Divergence
// ---------------------------------------------------------------------------

/// `f_KL(eps) = (1 - eps) ln(1 - eps) + eps`, the univariate divergence
/// envelope.
pub fn f_kl(eps: f64) -> f64 {
    (1.0 - eps) * (1.0 - eps).ln() + eps
}

/// Numeric KL divergence (bits) from uniform to the univariate law, with
/// the envelope bound `m2 * f_KL(eps) / ln 2` (valid while `|phi| <= 1`).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UnivariateKl {
    pub numeric: f64,
    pub bound: f64,
}

pub fn kl_univariate(spec: &GammaSpec, eps: f64) -> UnivariateKl {
    let numeric = quad::integrate_split(
        |r| {
            let d = 1.0 + eps * spec.phi(r);
            if d <= 0.0 {
                0.0
            } else {
                d * d.log2()
            }
        },
        0.0,
        1.0,
        &spec.splits(),
        1e-12,
    );
    let m2 = moments(spec).m2;
    UnivariateKl {
        numeric,
        bound: m2 * f_kl(eps) / std::f64::consts::LN_2,
    }
}

/// Envelope bound for a spec whose `|phi|` exceeds 1: scaling `gamma` by
/// `1/s` and `eps` by `s` leaves the law unchanged, so
/// `KL <= f_KL(s*eps)/(s^2 ln 2) * int phi^2`.
pub fn kl_univariate_bound_scaled(spec: &GammaSpec, eps: f64, scale: f64) -> f64 {
    let psi = moments(spec).m2;
    f_kl(scale * eps) / (scale * scale * std::f64::consts::LN_2) * psi
}

/// How `kl_graph` evaluates the divergence.
#[derive(Clone, Copy, Debug)]
pub enum KlMode {
    /// Moment expansion of `E[(1+z)ln(1+z)]` through the quartic term;
    /// an upper bound via `ln(1+z) <= z - z^2/2 + z^3/3`. Supported for
    /// paths, cycles, the triangle, and the 4-cycle.
    MomentExpansion,
    /// Monte Carlo estimate of `E[(1+z)ln(1+z)] / ln 2` under uniform.
    MonteCarlo { trials: u64, seed: u64 },
}

/// KL divergence (bits) from uniform to the graph law.
pub fn kl_graph(shape: &GraphShape, spec: &GammaSpec, eps: f64, mode: KlMode) -> Result<f64> {
    match mode {
        KlMode::MomentExpansion => {
            let (q2, q3, q4) = kl_moment_terms(shape, spec, eps)?;
            Ok((q2 + q3 + q4) / std::f64::consts::LN_2)
        }
        KlMode::MonteCarlo { trials, seed } => {
            let mut acc = 0.0;
            for i in 0..trials {
                let mut rng = crate::seeds::trial_rng(seed, i);
                let x: Vec<f64> = (0..shape.vertices).map(|_| rng.gen::<f64>()).collect();
                let z = shape.density(spec, eps, &x) - 1.0;
                acc += (1.0 + z) * (1.0 + z).ln();
            }
            Ok(acc / trials as f64 / std::f64::consts::LN_2)
        }
    }
}

/// The three expansion terms `E[z^2/2]`, `E[-z^3/6]`, `E[z^4/3]` in nats.
/// Only vanishing-free edge tuples survive the expectation, which reduces
/// each term to moment arithmetic specific to the shape.
pub fn kl_moment_terms(shape: &GraphShape, spec: &GammaSpec, eps: f64) -> Result<(f64, f64, f64)> {
    let m = moments(spec);
    let t = shape.edges.len() as f64;
    let quadratic = eps * eps * t * m.m2 * m.m2 / 2.0;
    let cubic = if shape.kind == GraphKind::Cycle && shape.edges.len() == 3 {
        // In the triangle, three distinct edges leave no vertex exposed.
        -eps.powi(3) / 6.0 * (3.0 * m.m3 * m.m3 + 6.0 * m.m2.powi(3))
    } else {
        -eps.powi(3) * t * m.m3 * m.m3 / 6.0
    };
    let (m2, m4) = (m.m2, m.m4);
    let quartic_coeff = match (&shape.kind, shape.edges.len()) {
        (GraphKind::Path, _) => {
            t * m4 * m4 + 3.0 * (t - 1.0) * (2.0 * m4 * m2 * m2 + (t - 2.0) * m2.powi(4))
        }
        (GraphKind::Cycle, 3) => 3.0 * m4 * m4 + 18.0 * m4 * m2 * m2 + 36.0 * m.m3 * m.m3 * m2,
        (GraphKind::Cycle, 4) => 4.0 * m4 * m4 + 24.0 * m4 * m2 * m2 + 36.0 * m2.powi(4),
        (GraphKind::Cycle, _) => {
            t * m4 * m4 + 3.0 * t * (2.0 * m4 * m2 * m2 + (t - 3.0) * m2.powi(4))
        }
        (GraphKind::General, _) => {
            return Err(Error::OutOfRange(
                "moment expansion needs a path or cycle".into(),
            ))
        }
    };
    Ok((quadratic, cubic, eps.powi(4) / 3.0 * quartic_coeff))
}

// ---------------------------------------------------------------------------
// Placement samplers
// ---------------------------------------------------------------------------

/// Source of placements over a fixed label list. Implementations must be
/// deterministic functions of the provided generator so that Monte Carlo
/// runs stay reproducible under the per-trial-seed contract.
pub trait PlacementSampler: Sync {
    /// Values aligned with `labels`.
    fn sample(&self, labels: &[Label], rng: &mut ChaCha8Rng) -> Vec<f64>;

    /// For samplers whose coordinates are independent and identically
    /// distributed, a single-coordinate draw (enables lazy tree
    /// exploration). `None` for correlated samplers.
    fn sample_one_iid(&self, _rng: &mut ChaCha8Rng) -> Option<f64> {
        None
    }

    fn describe(&self) -> String;
}

/// Independent uniform placements.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformSampler;

impl PlacementSampler for UniformSampler {
    fn sample(&self, labels: &[Label], rng: &mut ChaCha8Rng) -> Vec<f64> {
        labels.iter().map(|_| rng.gen::<f64>()).collect()
    }

    fn sample_one_iid(&self, rng: &mut ChaCha8Rng) -> Option<f64> {
        Some(rng.gen::<f64>())
    }

    fn describe(&self) -> String {
        "uniform".into()
    }
}

/// Independent draws from one univariate biased law for every label.
pub struct IidBiasedSampler {
    pub spec: GammaSpec,
    pub eps: f64,
}

impl IidBiasedSampler {
    pub fn new(spec: GammaSpec, eps: f64) -> Result<IidBiasedSampler> {
        validate_univariate(&spec, eps)?;
        Ok(IidBiasedSampler { spec, eps })
    }
}

impl PlacementSampler for IidBiasedSampler {
    fn sample(&self, labels: &[Label], rng: &mut ChaCha8Rng) -> Vec<f64> {
        labels
            .iter()
            .map(|_| sample_univariate(&self.spec, self.eps, rng))
            .collect()
    }

    fn sample_one_iid(&self, rng: &mut ChaCha8Rng) -> Option<f64> {
        Some(sample_univariate(&self.spec, self.eps, rng))
    }

    fn describe(&self) -> String {
        format!("iid-{}(eps={})", self.spec.name, self.eps)
    }
}
