//! The numerical audit: recomputes every constant and inequality the
//! running-time analysis rests on, by independent quadrature or arithmetic,
//! and certifies each against its claimed value.
//!
//! Every entry with a closed form passes a self-consistency gate first
//! (|closed form - quadrature| below `SELF_CHECK_TOL`); only then is the
//! claimed relation evaluated. Known discrepancies in the source material
//! are reported as FLAG, not FAIL, with both values computed.

use crate::dist::{self, GammaSpec, GraphShape, KlMode};
use crate::gw;
use crate::hp::Hp;
use crate::quad;
use serde::Serialize;

/// Tolerance for the closed-form-versus-quadrature self-check.
pub const SELF_CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Flag,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryResult {
    pub id: String,
    pub note: String,
    /// The independently computed value (quadrature, grid, arithmetic).
    pub computed: f64,
    /// Decimal rendering of the exact closed form, when one exists.
    pub closed_form: Option<String>,
    /// Discrepancy of the self-check, when a closed form exists.
    pub self_check: Option<f64>,
    /// The claimed value or bound.
    pub reference: Option<f64>,
    pub relation: String,
    pub status: Status,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub entries: Vec<EntryResult>,
}

impl AuditReport {
    pub fn failures(&self) -> Vec<&EntryResult> {
        self.entries
            .iter()
            .filter(|e| e.status == Status::Fail)
            .collect()
    }

    pub fn flags(&self) -> Vec<&EntryResult> {
        self.entries
            .iter()
            .filter(|e| e.status == Status::Flag)
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    /// Fixed-width table, one line per entry.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{:<4} {:<32} computed={:<22} {:<28} {}\n",
                match e.status {
                    Status::Pass => "ok",
                    Status::Flag => "FLAG",
                    Status::Fail => "FAIL",
                },
                e.id,
                format!("{:.10e}", e.computed),
                match e.reference {
                    Some(r) => format!("{} {:.8e}", e.relation, r),
                    None => e.relation.clone(),
                },
                e.note,
            ));
        }
        out
    }
}

enum Relation {
    /// |value - reference| <= tol.
    Equals { tol: f64 },
    /// value <= reference (+1e-12).
    AtMost,
    /// value <= reference + slack (for references printed with fewer
    /// digits than the value: half a unit in the last printed place).
    AtMostSlack { slack: f64 },
    /// value >= reference (-1e-12).
    AtLeast,
    /// `computed` counts violations; zero passes.
    NoViolations,
    /// Known discrepancy: always FLAG.
    Flag,
}

struct Audit {
    selection: Option<Vec<String>>,
    entries: Vec<EntryResult>,
}

impl Audit {
    fn wants(&self, id: &str) -> bool {
        match &self.selection {
            None => true,
            Some(ids) => ids.iter().any(|s| s == id),
        }
    }

    fn push(
        &mut self,
        id: &str,
        note: &str,
        computed: f64,
        closed: Option<Hp>,
        relation: Relation,
        reference: Option<f64>,
    ) {
        if !self.wants(id) {
            return;
        }
        let closed_f64 = closed.as_ref().map(Hp::to_f64);
        let self_check = closed_f64.map(|c| (c - computed).abs());
        let value = closed_f64.unwrap_or(computed);
        let (relation_str, ok, is_flag) = match relation {
            Relation::Equals { tol } => (
                "=".to_string(),
                (value - reference.unwrap()).abs() <= tol,
                false,
            ),
            Relation::AtMost => ("<=".to_string(), value <= reference.unwrap() + 1e-12, false),
            Relation::AtMostSlack { slack } => {
                ("<~".to_string(), value <= reference.unwrap() + slack, false)
            }
            Relation::AtLeast => (">=".to_string(), value >= reference.unwrap() - 1e-12, false),
            Relation::NoViolations => ("no-violations".to_string(), computed == 0.0, false),
            Relation::Flag => ("flag".to_string(), true, true),
        };
        let status = if is_flag {
            Status::Flag
        } else if self_check.is_some_and(|gap| gap >= SELF_CHECK_TOL) || !ok {
            Status::Fail
        } else {
            Status::Pass
        };
        self.entries.push(EntryResult {
            id: id.to_string(),
            note: note.to_string(),
            computed,
            closed_form: closed.map(|h| h.to_decimal(18)),
            self_check,
            reference,
            relation: relation_str,
            status,
        });
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn q3(r: f64) -> f64 {
    gw::q(3, r)
}

fn p3(r: f64) -> f64 {
    gw::p(3, r)
}

fn qbar(r: f64) -> f64 {
    1.0 - q3(r)
}

fn int_half<F: Fn(f64) -> f64>(f: F) -> f64 {
    quad::integrate(f, 0.0, 0.5, 1e-12)
}

/// The larger of the two drag branches used by the decorrelation step.
fn delta_max(spec: &GammaSpec, eps: f64, r: f64) -> f64 {
    if r <= 0.0 || r >= 0.5 {
        return 0.0;
    }
    let g = spec.gamma(r);
    let branch1 = 2.0 * g / (1.0 - r);
    let branch2 = g / (1.0 - r) - spec.phi(r);
    1.147 * eps * g * branch1.max(branch2)
}

/// `int_0^(1/2) curve(r) r^d dr` in the scaled form `2^-(d+1) * int_0^1
/// curve(u/2) u^d du`, which stays well-conditioned at large depth. The
/// mass concentrates near u = 1, so the panels refine dyadically toward 1
/// (a plain adaptive pass samples only the flat region and exits early).
fn depth_weighted(curve: impl Fn(f64) -> f64, d: usize) -> (f64, f64) {
    let cuts: Vec<f64> = (1..14).map(|j| 1.0 - 0.5f64.powi(j)).collect();
    let scaled = quad::integrate_split(
        |u| curve(0.5 * u) * u.powi(d as i32),
        0.0,
        1.0,
        &cuts,
        1e-13,
    );
    (scaled, 0.5f64.powi(d as i32 + 1) * scaled)
}

/// `OCB*(d) = 0.8948 * int r(1-2r)/(1-r)^2 r^d dr` over [0, 1/2];
/// returns (scaled, absolute).
fn ocb_star(d: usize) -> (f64, f64) {
    let (s, v) = depth_weighted(|r| r * (1.0 - 2.0 * r) / ((1.0 - r) * (1.0 - r)), d);
    (0.8948 * s, 0.8948 * v)
}

/// `MLB*(d) = 0.9 * int (1-2r)^2/(1-r)^3 r^d dr` over [0, 1/2];
/// returns (scaled, absolute).
fn mlb_star(d: usize) -> (f64, f64) {
    let (s, v) = depth_weighted(|r| (1.0 - 2.0 * r).powi(2) / (1.0 - r).powi(3), d);
    (0.9 * s, 0.9 * v)
}

/// Derivative of the general-k extinction fixed point via implicit
/// differentiation: with c = (k-1) P^(k-2), Q' = c (1-Q) / (1 - c (1-r)).
fn q_prime_general(k: usize, r: f64) -> f64 {
    let p = gw::p(k, r);
    let c = (k - 1) as f64 * p.powi(k as i32 - 2);
    c * (1.0 - gw::q(k, r)) / (1.0 - c * (1.0 - r))
}

/// General-k damage and benefit integrals in scaled form: returns
/// `(damage/(eps rho^(2k)), benefit/(eps rho^(k+2)))`, numerically stable
/// for small `rho` via the substitution `r = rho u`.
fn damage_benefit_scaled(k: usize, rho: f64, eps: f64) -> (f64, f64) {
    let gamma = |r: f64| if r <= rho { r * (rho - r) } else { 0.0 };
    let damage = quad::integrate(
        |u| {
            let r = rho * u;
            let delta = eps * rho * gamma(r);
            (k - 1) as f64
                * (1.0 - r)
                * gw::p(k, r).powi(k as i32 - 2)
                * delta
                * q_prime_general(k, r)
                * rho
                / (eps * rho.powi(2 * k as i32))
        },
        0.0,
        1.0,
        1e-10,
    );
    let benefit = quad::integrate(
        |u| {
            let r = rho * u;
            let delta = eps * rho * gamma(r);
            let g = gamma(r);
            eps * g
                * g
                * (1.0 - gw::q(k, r)).powi(2)
                * gw::p(k, (r - delta).max(0.0)).powi(k as i32 - 3)
                * rho
                / (eps * rho.powi(k as i32 + 2))
        },
        0.0,
        1.0,
        1e-10,
    );
    (damage, benefit)
}

// ---------------------------------------------------------------------------
// The registry
// ---------------------------------------------------------------------------

/// Runs the audit, either everything (`None`) or a list of entry ids.
pub fn run_audit(selection: Option<Vec<String>>) -> AuditReport {
    let mut a = Audit {
        selection,
        entries: Vec::new(),
    };
    let ln2 = std::f64::consts::LN_2;
    let main = GammaSpec::main();
    let id01 = GammaSpec::id01();
    let pid01 = GammaSpec::pid01();
    let twocc = GammaSpec::twocc();
    let twocc_irr = GammaSpec::twocc_irregular();
    let b = gw::b_twocc;

    // ----- branching-process basics -------------------------------------
    a.push(
        "s3-value",
        "s_3 by quadrature against 2 - 2 ln 2",
        gw::s(3),
        Some(Hp::int(2) - Hp::int(2) * Hp::ln2()),
        Relation::Equals { tol: 1e-10 },
        Some(2.0 - 2.0 * ln2),
    );
    a.push(
        "s3-base",
        "2^(1-s_3), the baseline running-time base",
        f64::powf(2.0, 1.0 - gw::s(3)),
        None,
        Relation::Equals { tol: 1e-5 },
        Some(1.3070319),
    );
    a.push(
        "sk-asymptotic",
        "relative gap of s_10 from pi^2/60",
        (gw::s(10) - std::f64::consts::PI.powi(2) / 60.0).abs()
            / (std::f64::consts::PI.powi(2) / 60.0),
        None,
        Relation::AtMost,
        Some(0.15),
    );
    {
        let values: Vec<f64> = (3..=10).map(gw::s).collect();
        let violations = values.windows(2).filter(|w| w[1] >= w[0]).count();
        a.push(
            "sk-monotone",
            "s_k strictly decreasing for k = 3..10",
            violations as f64,
            None,
            Relation::NoViolations,
            None,
        );
    }
    {
        let mut worst = 0.0f64;
        for i in 0..1000 {
            let r = 0.5 * i as f64 / 1000.0;
            worst = worst.max((gw::q(3, r) - gw::q_fixed_point(3, r)).abs());
        }
        a.push(
            "q3-closed-vs-iteration",
            "closed form against the fixed-point iteration, 1000-point grid",
            worst,
            None,
            Relation::AtMost,
            Some(1e-11),
        );
    }
    {
        let mut violations = 0usize;
        for k in 3..=7usize {
            let thr = gw::threshold(k);
            let ratio = (k as f64 - 1.0) / (k as f64 - 2.0);
            let grid: Vec<f64> = (0..=400).map(|i| thr * i as f64 / 400.0).collect();
            for &r in &grid {
                let pv = gw::p(k, r);
                if pv < r - 1e-12 || pv > ratio * r + 1e-12 {
                    violations += 1;
                }
                if gw::q(k, r) > (ratio * r).powi(k as i32 - 1) + 1e-12 {
                    violations += 1;
                }
            }
            // The e-form of the Q bound holds in the small-r regime where
            // the analysis uses it (up to 1/16), not on the whole interval.
            for i in 0..=100 {
                let r = i as f64 / 1600.0;
                if gw::q(k, r) > std::f64::consts::E * r.powi(k as i32 - 1) + 1e-12 {
                    violations += 1;
                }
            }
            for w in grid.windows(3) {
                if gw::p(k, w[2]) - 2.0 * gw::p(k, w[1]) + gw::p(k, w[0]) < -1e-9 {
                    violations += 1;
                }
            }
        }
        a.push(
            "qp-bounds-convexity",
            "r <= P <= r(k-1)/(k-2), Q <= (ratio r)^(k-1), e-form near 0, P convex",
            violations as f64,
            None,
            Relation::NoViolations,
            None,
        );
    }
    {
        let mut worst = 0.0f64;
        for i in 1..100 {
            let r = 0.49 * i as f64 / 100.0;
            let h = 1e-6;
            let fd = (gw::q(3, r + h) - gw::q(3, r - h)) / (2.0 * h);
            worst = worst.max((gw::q_prime(r) - fd).abs());
        }
        a.push(
            "q-prime-finite-difference",
            "2r/(1-r)^3 against central differences of Q",
            worst,
            None,
            Relation::AtMost,
            Some(1e-6),
        );
    }

    // ----- moments -------------------------------------------------------
    let moment_entries: Vec<(&str, &GammaSpec, i32, Hp)> = vec![
        ("m2-main", &main, 2, Hp::rat(3, 32)),
        ("m3-main", &main, 3, Hp::rat(12, 385)),
        ("m4-main", &main, 4, Hp::rat(9, 224)),
        ("m2-twocc", &twocc, 2, Hp::rat(125, 1008)),
        ("psi-twocc-irregular", &twocc_irr, 2, Hp::rat(15, 14)),
        ("psi-pid01", &pid01, 2, Hp::rat(3721, 181_440)),
    ];
    for (id, spec, d, closed) in moment_entries {
        let numeric =
            quad::integrate_split(|r| spec.phi(r).powi(d), 0.0, 1.0, &spec.splits(), 1e-12);
        let reference = closed.to_f64();
        a.push(
            id,
            &format!("int phi^{d} for the {} bias", spec.name),
            numeric,
            Some(closed),
            Relation::Equals { tol: 1e-9 },
            Some(reference),
        );
    }
    {
        // Combined biases: a late pull on the variable itself plus an early
        // compensation per low-indegree child.
        for (id, children, closed) in [
            ("psi-1-0", 0.0, Hp::rat(5, 21)),
            ("psi-1-1", 1.0, Hp::rat(24_961, 181_440)),
            ("psi-1-2", 2.0, Hp::rat(3541, 45_360)),
        ] {
            let numeric = int_half(|r| {
                let v = -id01.phi(r) + children * pid01.phi(r);
                v * v
            });
            let reference = closed.to_f64();
            a.push(
                id,
                "squared derivative of a combined variable bias",
                numeric,
                Some(closed),
                Relation::Equals { tol: 1e-9 },
                Some(reference),
            );
        }
    }
    {
        let mut worst = 0.0f64;
        for rho in [0.2, 0.35, 0.5] {
            let spec = GammaSpec::general_k(rho);
            let m2 = dist::moments(&spec).m2;
            worst = worst.max((m2 - rho * rho * rho / 3.0).abs());
        }
        a.push(
            "m2-general-k",
            "int phi^2 = rho^3/3 for the general-width bias",
            worst,
            None,
            Relation::AtMost,
            Some(1e-10),
        );
    }

    // ----- irregular-case constants --------------------------------------
    let bfs = -int_half(|r| id01.phi(r) * q3(r));
    let dfc = int_half(|r| id01.gamma(r) * p3(r) * qbar(r));
    let dfs = -int_half(|r| pid01.phi(r) * q3(r));
    let junk1 = -int_half(|r| id01.phi(r) * id01.gamma(r) * p3(r) * qbar(r));
    let junk2 = int_half(|r| pid01.phi(r) * id01.gamma(r) * p3(r) * qbar(r));
    a.push(
        "bfs",
        "benefit from selfish bias: -int phi_id01 Q",
        bfs,
        Some(Hp::int(380) * Hp::ln2() - Hp::rat(790, 3)),
        Relation::AtLeast,
        Some(0.06259),
    );
    a.push(
        "dfc",
        "damage from children's selfish bias: int gamma_id01 P (1-Q)",
        dfc,
        Some(Hp::rat(915, 4) - Hp::int(330) * Hp::ln2()),
        Relation::AtMost,
        Some(0.01144),
    );
    a.push(
        "dfs",
        "damage from selfless bias: -int phi_pid01 Q",
        dfs,
        Some(Hp::rat(1586, 3) * Hp::ln2() - Hp::rat(52_765, 144)),
        Relation::AtMost,
        Some(0.0202),
    );
    a.push(
        "dfb",
        "damage from both biases (dfc + dfs)",
        dfc + dfs,
        Some(Hp::rat(596, 3) * Hp::ln2() - Hp::rat(19_825, 144)),
        Relation::AtMost,
        Some(0.03163),
    );
    a.push(
        "junk1",
        "quadratic cross term: -int phi_id01 gamma_id01 P (1-Q)",
        junk1,
        Some(Hp::int(46_800) * Hp::ln2() - Hp::rat(227_075, 7)),
        Relation::AtMost,
        Some(0.00235),
    );
    {
        let closed = Hp::rat(8_767_591, 192) - Hp::int(65_880) * Hp::ln2();
        let reference = closed.to_f64();
        a.push(
            "junk2-value",
            "quadratic cross term: int phi_pid01 gamma_id01 P (1-Q)",
            junk2,
            Some(closed),
            Relation::Equals { tol: 1e-9 },
            Some(reference),
        );
    }
    a.push(
        "junk2-stated-bound",
        "stated decimal 0.000184 understates the exact value 8767591/192 - 65880 ln 2 \
         = 2.0304e-4; the downstream coefficient 0.0028 on junk1 + 2 junk2 still holds",
        junk2,
        None,
        Relation::Flag,
        Some(0.000184),
    );
    a.push(
        "junk-aggregate",
        "junk1 + 2 junk2 stays below the 0.0028 used downstream",
        junk1 + 2.0 * junk2,
        None,
        Relation::AtMost,
        Some(0.0028),
    );

    // ----- two-critical-clause constants ----------------------------------
    a.push(
        "cut2cc-bonus",
        "int Q B(r) - s_3, the two-critical-clause head start",
        int_half(|r| q3(r) * b(r)) + 0.5 - gw::s(3),
        Some(Hp::rat(104, 3) - Hp::int(50) * Hp::ln2()),
        Relation::Equals { tol: 1e-6 },
        Some(0.009307),
    );
    {
        // Regular case: drag 2.294 gamma_main^2/(1-r), root bias gamma_twocc.
        let grest = |r: f64| 2.294 * main.gamma(r) * main.gamma(r) / (1.0 - r);
        a.push(
            "dfs2cc-regular",
            "-int Q B phi_twocc",
            -int_half(|r| q3(r) * b(r) * twocc.phi(r)),
            Some(Hp::int(52_300) * Hp::ln2() - Hp::rat(1_522_565, 42)),
            Relation::AtMost,
            Some(0.05),
        );
        a.push(
            "dfd2cc-regular",
            "int 2r gamma_rest B/(1-r)^3",
            int_half(|r| 2.0 * r * grest(r) * b(r) / (1.0 - r).powi(3)),
            Some(Hp::dec("1.147") * (Hp::int(7908) * Hp::ln2() - Hp::rat(27_407, 5))),
            Relation::AtMost,
            Some(0.0091),
        );
        let closed =
            Hp::dec("1.147") * (Hp::int(9_302_500) * Hp::ln2() - Hp::rat(1_624_896_415, 252));
        let reference = closed.to_f64();
        a.push(
            "junk2cc-regular",
            "int 2r gamma_rest B phi_twocc/(1-r)^3; its stated decimal 0.00034 \
             understates the exact 3.825e-4 (unused downstream, not asserted)",
            int_half(|r| 2.0 * r * grest(r) * b(r) * twocc.phi(r) / (1.0 - r).powi(3)),
            Some(closed),
            Relation::Equals { tol: 1e-9 },
            Some(reference),
        );
    }
    {
        // Irregular case: drag gamma_id01, root bias gamma_twocc_irregular.
        a.push(
            "dfs2cc-irregular",
            "-int Q B phi_twocc_irr",
            -int_half(|r| q3(r) * b(r) * twocc_irr.phi(r)),
            Some(Hp::rat(39_094, 3) - Hp::int(18_800) * Hp::ln2()),
            Relation::AtMost,
            Some(0.16634),
        );
        a.push(
            "dfd2cc-irregular",
            "int 2r gamma_id01 B/(1-r)^3; the exact value 0.07413533 rounds to the \
             stated 0.074135, compared at half a unit in the last printed place",
            int_half(|r| 2.0 * r * id01.gamma(r) * b(r) / (1.0 - r).powi(3)),
            Some(Hp::int(11_420) * Hp::ln2() - Hp::rat(23_747, 3)),
            Relation::AtMostSlack { slack: 5e-7 },
            Some(0.074135),
        );
        a.push(
            "junk2cc-irregular",
            "int 2r gamma_id01 B phi_twocc_irr/(1-r)^3",
            int_half(|r| 2.0 * r * id01.gamma(r) * b(r) * twocc_irr.phi(r) / (1.0 - r).powi(3)),
            Some(Hp::rat(17_923_400, 7) - Hp::int(3_694_000) * Hp::ln2()),
            Relation::AtMost,
            Some(0.03125),
        );
    }

    // ----- conditioning-on-ranges constants --------------------------------
    let s1 = |r: f64| -main.gamma(r) * main.gamma(r) / (r * (1.0 - r));
    let s2 = |r: f64| main.phi(r) * main.gamma(r) / r;
    let s3f = |r: f64| -main.phi(r) * main.gamma(r) / (1.0 - r);
    let r_star = 2.0 / 3.0 - 10f64.sqrt() / 6.0;
    {
        let s1_closed = (Hp::int(254) - Hp::int(83) * Hp::sqrt_int(10))
            / (Hp::int(27) * (Hp::sqrt_int(10) + Hp::int(2)));
        let mut grid_min = f64::INFINITY;
        for i in 1..20_000 {
            grid_min = grid_min.min(s1(0.5 * i as f64 / 20_000.0));
        }
        a.push(
            "s1-minimum",
            "min of -gamma^2/(r(1-r)) at r* = 2/3 - sqrt(10)/6; the stated -0.06076 \
             is a 4-digit rounding of -0.0607616",
            grid_min.min(s1(r_star)),
            Some(s1_closed),
            Relation::Equals { tol: 1e-5 },
            Some(-0.06076),
        );
        a.push(
            "s1-denominator-chain",
            "1 + 0.1 * 21 * S1(r*) stays above 1/1.147",
            1.0 + 0.1 * 21.0 * s1(r_star),
            None,
            Relation::AtLeast,
            Some(1.0 / 1.147),
        );
    }
    {
        let mut worst = f64::INFINITY;
        for i in 1..20_000 {
            let r = 0.5 * i as f64 / 20_000.0;
            worst = worst.min(s1(r).min(s2(r)).min(s3f(r)));
        }
        let ok = (s2(0.3) + 2.0 / 25.0).abs() < 1e-12 && worst >= -2.0 / 25.0 - 1e-12;
        a.push(
            "range-product-floor",
            "all three T-product curves stay above -2/25, attained at r = 3/10",
            if ok { 0.0 } else { 1.0 },
            None,
            Relation::NoViolations,
            None,
        );
    }
    {
        // Branch crossover of the drag maximum: gamma/(1-r) = -phi.
        let g = |r: f64| main.gamma(r) / (1.0 - r) + main.phi(r);
        let (mut lo, mut hi) = (0.21f64, 0.45f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        a.push(
            "r-bend",
            "branch crossover of the drag maximum at (5 - sqrt 13)/6",
            0.5 * (lo + hi),
            Some((Hp::int(5) - Hp::sqrt_int(13)) / Hp::int(6)),
            Relation::Equals { tol: 1e-4 },
            Some(0.2324),
        );
    }
    {
        let eps = 0.1;
        let mut worst = 0.0f64;
        for i in 1..5000 {
            let r = 0.5 * i as f64 / 5000.0;
            let d = delta_max(&main, eps, r);
            worst = worst.max((1.0 - gw::q(3, (r - d).max(0.0))) / (1.0 - gw::q(3, r)));
        }
        a.push(
            "biased-nodes-factor",
            "max of (1 - Q at r - delta_max)/(1 - Q at r), eps = 0.1",
            worst,
            None,
            Relation::AtMost,
            Some(1.014),
        );
    }
    {
        let eps = 0.1;
        let violations = (1..10_000)
            .filter(|&i| {
                let r = 0.5 * i as f64 / 10_000.0;
                r * (1.0 - 2.0 * r) < 2.0 * delta_max(&main, eps, r)
            })
            .count();
        a.push(
            "one-child-condition",
            "r(1-2r) >= 2 delta_max on (0, 1/2) at eps = 0.1",
            violations as f64,
            None,
            Relation::NoViolations,
            None,
        );
    }
    {
        let c = 2.028 * 1.147;
        let violations = (1..10_000)
            .filter(|&i| {
                let r = 0.5 * i as f64 / 10_000.0;
                let rhs = c
                    * main.gamma(r)
                    * ((-main.phi(r)).max(0.0)
                        + 2.0 * r * main.gamma(r) / ((1.0 - r) * (1.0 - 2.0 * r)));
                twocc.gamma(r) < rhs - 1e-12
            })
            .count();
        a.push(
            "gamma-twocc-condition",
            "the subtree-replacement condition on gamma_twocc, 10^4-point grid",
            violations as f64,
            None,
            Relation::NoViolations,
            None,
        );
        // Its proof's two splits: 10/25 reduces to 2C/(1-r) <= 4C <= 10,
        // and 15/25 to the quadratic 15r^2 - 5Cr + C with no real roots.
        let c_hp = Hp::dec("2.028") * Hp::dec("1.147");
        let four_c = Hp::int(4) * c_hp.clone();
        let disc = Hp::int(25) * c_hp.powi(2) - Hp::int(60) * c_hp;
        let ok = four_c.to_f64() <= 10.0 && disc.to_f64() < 0.0;
        a.push(
            "gamma-twocc-proof-claims",
            &format!(
                "4C = {:.6} <= 10 and discriminant 25C^2 - 60C = {:.6} < 0",
                four_c.to_f64(),
                disc.to_f64()
            ),
            if ok { 0.0 } else { 1.0 },
            None,
            Relation::NoViolations,
            None,
        );
    }

    // ----- label-density damage chain --------------------------------------
    let basel_direct = {
        // Evaluated in log space; the raw powers overflow past d ~ 140.
        let a_d = |d: f64| ((d + 1.0) * (d + 1.0).ln() - (d + 3.0) * (d + 3.0).ln()).exp();
        // Tail: a_d < e^-2/(d+1)^2, so the remainder past N is below e^-2/N.
        let head: f64 = (1..=4000).map(|d| a_d(d as f64)).sum();
        let proof_route = std::f64::consts::E.powi(-2) * (std::f64::consts::PI.powi(2) / 6.0 - 1.0)
            + (1..=100)
                .map(|d| {
                    let d = d as f64;
                    a_d(d) - std::f64::consts::E.powi(-2) / ((d + 1.0) * (d + 1.0))
                })
                .sum::<f64>();
        let with_tail = head + std::f64::consts::E.powi(-2) / 4001.0;
        a.push(
            "basel-style-sum",
            "sum of (d+1)^(d+1)/(d+3)^(d+3) with explicit tail bound",
            with_tail,
            None,
            Relation::AtMost,
            Some(0.0544),
        );
        a.push(
            "basel-routes-agree",
            "direct summation against the e^-2 (pi^2/6 - 1) rewrite",
            (head - proof_route).abs(),
            None,
            Relation::AtMost,
            Some(1e-4),
        );
        with_tail
    };
    {
        let mut worst = 0.0f64;
        for i in 0..=10_000 {
            let r = 0.2 + 0.3 * i as f64 / 10_000.0;
            worst = worst.max(1.014 * 1.147 * (1.0 - 2.0 * r) * (5.0 * r - 1.0));
        }
        a.push(
            "leading-factor-root",
            "max of 1.014*1.147*(1-2r)(5r-1), attained at r = 7/20",
            worst,
            Some(Hp::dec("1.014") * Hp::dec("1.147") * Hp::rat(9, 40)),
            Relation::AtMost,
            Some(0.262),
        );
    }
    {
        let mut violations = 0usize;
        for d in 1..=30usize {
            let rhs = 4.652_232 * 0.5f64.powi(d as i32) * (d as f64 + 1.0).powf(d as f64 + 1.0)
                / (d as f64 + 3.0).powf(d as f64 + 3.0);
            for i in 1..2000 {
                let r = 0.5 * i as f64 / 2000.0;
                let lhs = 1.163_058 * r.powi(d as i32 + 1) * (1.0 - 2.0 * r).powi(2) / (1.0 - r);
                if lhs > rhs + 1e-15 {
                    violations += 1;
                }
            }
        }
        a.push(
            "nonroot-drag-bound",
            "depth-d drag of subordinate labels against its stated maximum, d = 1..30",
            violations as f64,
            None,
            Relation::NoViolations,
            None,
        );
    }
    a.push(
        "total-density-damage",
        "0.524 + 9.304464 * basel sum, the per-threshold damage multiplier",
        0.524 + 9.304_464 * basel_direct,
        None,
        Relation::AtMost,
        Some(1.0302),
    );
    a.push(
        "hlow-benefit",
        "int gamma^2 (1-Q)^2, the per-edge correlation gain",
        int_half(|r| main.gamma(r).powi(2) * qbar(r).powi(2)),
        Some(Hp::int(170) * Hp::ln2() - Hp::rat(707, 6)),
        Relation::AtLeast,
        Some(0.00168728),
    );

    // ----- divergence bounds ------------------------------------------------
    a.push(
        "f-kl-value",
        "(1-eps) ln(1-eps) + eps at eps = 0.1",
        dist::f_kl(0.1),
        None,
        Relation::Equals { tol: 1e-8 },
        Some(0.0051755356),
    );
    {
        let violations = (1..50)
            .filter(|&i| {
                let e = i as f64 / 100.0;
                dist::f_kl(e) > (e * e + e * e * e) / 2.0 + 1e-15
            })
            .count();
        a.push(
            "f-kl-envelope",
            "f_KL(eps) <= (eps^2 + eps^3)/2 on (0, 0.5)",
            violations as f64,
            None,
            Relation::NoViolations,
            None,
        );
    }
    {
        let kl = dist::kl_univariate(&main, 0.1);
        a.push(
            "kl-univariate-envelope",
            "numeric univariate divergence against m2 f_KL(eps)/ln 2 at eps = 0.1",
            kl.numeric,
            None,
            Relation::AtMost,
            Some(kl.bound),
        );
    }
    {
        let eps = 0.1;
        let mut worst = 0.0f64;
        let mut dominance = 0.0f64;
        for t in 1..=22usize {
            let bound = 0.00638 * eps * eps * t as f64;
            let mut shapes = vec![GraphShape::path(t)];
            if t >= 3 {
                shapes.push(GraphShape::cycle(t));
            }
            for shape in shapes {
                let v = dist::kl_graph(&shape, &main, eps, KlMode::MomentExpansion).unwrap();
                worst = worst.max(v / bound);
                let (q2, q3t, q4) = dist::kl_moment_terms(&shape, &main, eps).unwrap();
                dominance = dominance.max((q2 + q3t + q4) / q2);
            }
        }
        a.push(
            "kl-graph-constant",
            "moment-expansion divergence over 0.00638 eps^2 t, all shapes, t <= 22",
            worst,
            None,
            Relation::AtMost,
            Some(1.0),
        );
        a.push(
            "kl-quadratic-dominates",
            "full expansion over its quadratic term, all shapes, t <= 22",
            dominance,
            None,
            Relation::AtMost,
            Some(1.01),
        );
    }
    {
        let eps = 0.029;
        a.push(
            "kl-twocc-scaled",
            "divergence of the irregular TwoCC bias against f_KL(5 eps) Psi/(25 ln 2)",
            dist::kl_univariate(&twocc_irr, eps).numeric,
            None,
            Relation::AtMost,
            Some(dist::kl_univariate_bound_scaled(&twocc_irr, eps, 5.0)),
        );
    }
    {
        // Pair divergence for the general-width bias: the exact moment
        // factorization gives eps^2 (rho^3/3)^2/ln 2 to leading order; the
        // stated eps^2 rho^3/(3 ln 2) is a loose but valid envelope.
        let (rho, eps) = (0.3, 0.1);
        let spec = GammaSpec::general_k(rho);
        let inner = |x: f64| {
            quad::integrate_split(
                |y| {
                    let d = 1.0 + eps * spec.phi(x) * spec.phi(y);
                    d * d.ln()
                },
                0.0,
                1.0,
                &[rho],
                1e-12,
            )
        };
        let numeric = quad::integrate_split(inner, 0.0, 1.0, &[rho], 1e-9) / ln2;
        a.push(
            "kl-pair-general-k",
            "2-d quadrature against the stated eps^2 rho^3/(3 ln 2) envelope",
            numeric,
            None,
            Relation::AtMost,
            Some(eps * eps * rho.powi(3) / (3.0 * ln2)),
        );
    }

    // ----- one-child and multi-label bonuses -------------------------------
    {
        let mut floor = f64::INFINITY;
        for d in 0..=4usize {
            floor = floor.min(ocb_star(d).1).min(mlb_star(d).1);
        }
        a.push(
            "ocb-mlb-small-depth",
            "both starred bonuses at depths 0..4 stay above 1/1131 (>= the threshold)",
            floor,
            None,
            Relation::AtLeast,
            Some(1.0 / 1131.0),
        );
    }
    {
        // Compared in scaled form: both sides carry the same 2^-(d+1).
        let violations = (5..=200usize)
            .filter(|&d| ocb_star(d).0 < mlb_star(d).0)
            .count();
        a.push(
            "ocb-dominates-mlb",
            "OCB*(d) >= MLB*(d) for 5 <= d <= 200",
            violations as f64,
            None,
            Relation::NoViolations,
            None,
        );
    }
    {
        // The three graph claims behind the starred bounds at eps = 0.1.
        let eps = 0.1;
        let s_warp = |r: f64| r - delta_max(&main, eps, r) / (1.0 - r);
        let f_curve = |r: f64| r * (1.0 - 2.0 * r) / ((1.0 - r) * (1.0 - r));
        let g_curve = |r: f64| (1.0 - 2.0 * r).powi(2) / (1.0 - r).powi(3);
        let r_bend = (5.0 - 13f64.sqrt()) / 6.0;
        let h = 1e-6;
        let mut max_slope = 0.0f64;
        let mut violations = 0usize;
        for i in 1..20_000 {
            let r = 0.5 * i as f64 / 20_000.0;
            if (r - r_bend).abs() < 1e-4 {
                continue; // kink of the branch maximum
            }
            max_slope = max_slope.max((s_warp(r + h) - s_warp(r - h)) / (2.0 * h));
            if f_curve(r) < 0.98 * f_curve(s_warp(r)) - 1e-12 {
                violations += 1;
            }
            if g_curve(r) < 0.95 * g_curve(s_warp(r)) - 1e-12 {
                violations += 1;
            }
        }
        a.push(
            "warp-slope",
            "derivative of r - delta_max/(1-r) stays below 1.047",
            max_slope,
            None,
            Relation::AtMost,
            Some(1.047),
        );
        a.push(
            "warp-curve-claims",
            "f(r) >= 0.98 f(s(r)) and g(r) >= 0.95 g(s(r)) on a fine grid",
            violations as f64,
            None,
            Relation::NoViolations,
            None,
        );
    }

    // ----- the gain chains --------------------------------------------------
    {
        let eps = 0.029;
        let fkl = dist::f_kl(eps);
        let id1_line = 0.030966 * eps - 0.0028 * eps * eps - 0.4027 * fkl;
        let id0_line = 0.06259 * eps - 0.344 * fkl;
        let tcc_line =
            0.009307 - 0.2405 * eps - 0.03125 * eps * eps - 0.06183 * dist::f_kl(5.0 * eps);
        a.push(
            "irregular-id1-line",
            "low-indegree gain coefficient at eps = 0.029",
            id1_line,
            None,
            Relation::AtLeast,
            Some(1.0 / 1380.0),
        );
        a.push(
            "irregular-id0-line",
            "zero-indegree gain coefficient at eps = 0.029",
            id0_line,
            None,
            Relation::AtLeast,
            Some(1.0 / 600.0),
        );
        a.push(
            "irregular-twocc-line",
            "two-critical-clause gain coefficient at eps = 0.029",
            tcc_line,
            None,
            Relation::AtLeast,
            Some(1.0 / 617.0),
        );
        let ok = id0_line >= 2.0 / 1380.0 && tcc_line >= 2.0 / 1380.0;
        a.push(
            "irregular-gain-combination",
            "both auxiliary lines clear 2/1380, giving (|ID1| + 2|ID0|)/1380",
            if ok { 0.0 } else { 1.0 },
            None,
            Relation::NoViolations,
            None,
        );
    }
    {
        let eps = 0.1;
        let c_raw = 0.00168728 * eps - 0.00638 * eps * eps;
        let raw_denominator = 1.0 / c_raw;
        let corrected = 12.0 / 11.0 * raw_denominator;
        let thr = 2.0 / (0.9 * corrected);
        let penalty = 1.0302 * eps * thr;
        // max((1-i)/corrected - penalty, i/1380) is minimized where the
        // branches cross.
        let i_star = (1.0 / corrected - penalty) / (1.0 / 1380.0 + 1.0 / corrected);
        let combined_min = i_star / 1380.0;
        a.push(
            "regular-raw-denominator",
            "1/(0.00168728 eps - 0.00638 eps^2) at eps = 0.1, within 1 of 9531",
            raw_denominator,
            None,
            Relation::Equals { tol: 1.0 },
            Some(9531.0),
        );
        a.push(
            "regular-corrected-denominator",
            "12/11 of the raw denominator (stated unexpanded, about 10398)",
            corrected,
            None,
            Relation::Equals { tol: 2.0 },
            Some(10398.0),
        );
        a.push(
            "threshold-value",
            "Thr = 2/(0.9 corrected) stays below 1/4678",
            thr,
            None,
            Relation::AtMost,
            Some(1.0 / 4678.0),
        );
        a.push(
            "density-penalty",
            "1/(1.0302 eps Thr): stated 45408, derived 45414",
            1.0 / penalty,
            None,
            Relation::Equals { tol: 50.0 },
            Some(45_408.0),
        );
        a.push(
            "combined-minimum",
            "worst mix of regular and irregular gains stays above 1/15276",
            combined_min,
            None,
            Relation::AtLeast,
            Some(1.0 / 15_276.0),
        );
        a.push(
            "improved-bound",
            "2^(1 - s_3 - combined minimum), the improved running-time base",
            f64::powf(2.0, 1.0 - gw::s(3) - combined_min),
            None,
            Relation::AtMost,
            Some(1.306973 + 1e-6),
        );
    }

    // ----- general width ----------------------------------------------------
    {
        let mut ok = true;
        let mut worst_margin = f64::INFINITY;
        for (k, rho) in [(3usize, 0.005f64), (4, 0.03), (5, 0.04)] {
            let eps = rho.powi(k as i32 - 3);
            let (c_dam, c_ben) = damage_benefit_scaled(k, rho, eps);
            let floor = 1.0 / (k * (k + 1) * (k + 2)) as f64;
            ok &= c_ben >= floor;
            let m = 1.0 / (2.0 * (k * k) as f64);
            let kl_pair = eps * eps * (rho.powi(3) / 3.0).powi(2) / ln2;
            let gain = c_ben * eps * rho.powi(k as i32 + 2) * m
                - kl_pair * m
                - c_dam * eps * rho.powi(2 * k as i32);
            worst_margin = worst_margin.min(gain / (c_ben * eps * rho.powi(k as i32 + 2) * m));
            ok &= gain > 0.0;
        }
        a.push(
            "general-k-damage-benefit",
            "benefit clears its width-only floor and beats damage plus divergence \
             at small rho for k = 3, 4, 5 (relative margin reported)",
            if ok { worst_margin } else { -1.0 },
            None,
            Relation::AtLeast,
            Some(0.0),
        );
    }
    {
        let mut ok = true;
        for k in 3..=7usize {
            let thr = gw::threshold(k);
            let i1 = quad::integrate(
                |r| (1.0 - r).powi(2) * r.powi(2 * k as i32 - 4) * (1.0 - gw::q(k, r)).powi(2),
                0.0,
                thr,
                1e-12,
            );
            ok &= i1 > 1e-5;
            let i2 = Hp::rat(1, 2 * k as i64) * Hp::rat(1, 16).powi(k as u32)
                - Hp::rat(1, 2 * k as i64 - 1) * Hp::rat(1, 16).powi(2 * k as u32 - 1);
            ok &= i2.to_f64() > 0.0;
            let e_factor =
                (std::f64::consts::E * (k as f64 - 1.0) * (1.0f64 / 16.0).powi(k as i32 - 2)).exp();
            ok &= e_factor <= 1.5;
        }
        a.push(
            "privileged-bonus-integrals",
            "both privileged-variable integrals positive and the e-factor <= 1.5, k = 3..7",
            if ok { 0.0 } else { 1.0 },
            None,
            Relation::NoViolations,
            None,
        );
    }

    // ----- superseded variant and known discrepancies -----------------------
    a.push(
        "superseded-range-factor",
        "the older range-conditioning factor (t <= 4, eps <= 0.13); audit-only, \
         the 1.147 variant is the one in use",
        1.0 / (1.0 - 2.0 * 0.13 * 3.0 / 25.0),
        None,
        Relation::AtMost,
        Some(1.033),
    );
    {
        let psi_twocc = dist::moments(&twocc).m2;
        let fkl01 = dist::f_kl(0.1);
        let coeff_quoted = 5.0 / 48.0 / ln2;
        let coeff_quadrature = psi_twocc / ln2;
        let line = |c: f64| 0.009307 - 0.0577 * 0.1 - c * fkl01;
        a.push(
            "kl-twocc-coefficient",
            &format!(
                "TwoCC divergence coefficient: quadrature supports 125/1008/ln2 = \
                 {coeff_quadrature:.6}, the gain summary uses 5/48/ln2 = {coeff_quoted:.6}; \
                 per-variable gain 1/{:.0} vs 1/{:.0}",
                1.0 / line(coeff_quadrature),
                1.0 / line(coeff_quoted)
            ),
            coeff_quadrature,
            Some(Hp::rat(125, 1008) / Hp::ln2()),
            Relation::Flag,
            Some(coeff_quoted),
        );
    }
    {
        let cap_current = (5f64.sqrt() / 0.1).floor();
        let cap_old = (5f64.sqrt() / 0.13).floor();
        a.push(
            "component-edge-cap",
            &format!(
                "nonnegative graph density allows sqrt(5)/eps edges: 22 at eps = 0.1; \
                 the prose also carries the older cap {cap_old} from eps = 0.13"
            ),
            cap_current,
            None,
            Relation::Flag,
            Some(22.0),
        );
    }

    // ----- forced identities -------------------------------------------------
    {
        let mut worst = 0.0f64;
        for spec in GammaSpec::registry() {
            worst = worst.max(spec.gamma(0.0).abs()).max(spec.gamma(1.0).abs());
        }
        worst = worst
            .max(dist::f_kl(0.0).abs())
            .max(dist::kl_univariate(&main, 0.0).numeric.abs())
            .max(gw::q(3, 0.0))
            .max(gw::q(6, 0.0))
            .max((gw::b_twocc(0.5) - 1.0).abs())
            .max((gw::b_twocc(0.0) - 2.0).abs());
        a.push(
            "forced-identities",
            "zero-argument and boundary identities across the registry",
            worst,
            None,
            Relation::AtMost,
            Some(1e-10),
        );
    }

    AuditReport { entries: a.entries }
}
