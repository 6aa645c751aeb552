//! Verifiers for the inequality chain, one report per check.
//!
//! Every quantity is an [`Interval`]: a point in exact mode, a confidence band
//! in Monte Carlo mode. Bands are pushed through maps that are monotone in the
//! parameters, using common random numbers so that the point estimates at the
//! band ends are ordered.

use std::f64::consts::LN_2;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::connectivity::estimate_theta;
use crate::coupling::{check_threshold_dominance, CouplingProblem, TREE_EDGE_CAP};
use crate::error::{Error, Result};
use crate::exact::pi_exact;
use crate::interval::Interval;
use crate::lattice::BallGraph;
use crate::mode::Mode;
use crate::params::{homogeneous, EdgeParams};
use crate::qmap::{q_iterated, q_map, MappedParams};
use crate::report::{Instance, Relation, Verdict, VerificationReport};

/// Additive slack for exact comparisons.
pub const SLACK: f64 = 1e-10;

/// Pointwise tolerance for the elementary inequality.
pub const ELEMENTARY_TOL: f64 = 1e-12;

/// `C_0 = 4 log 2`.
pub const C0: f64 = 4.0 * LN_2;

/// Shifted parameter used by the quantitative bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `p - 2 theta_m(p)`.
    Standard,
    /// `p (1 - 2 theta_m(p))`.
    ProductForm,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "product-form" | "product" => Ok(Self::ProductForm),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

fn check_radius(g: &BallGraph, needed: usize) -> Result<()> {
    if needed > g.radius() {
        Err(Error::RadiusOutOfRange {
            requested: needed,
            max: g.radius(),
        })
    } else {
        Ok(())
    }
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::InvalidArgument(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// `theta_n(params)`.
pub fn theta_params(g: &BallGraph, params: &EdgeParams, n: usize, mode: &Mode) -> Result<Interval> {
    check_radius(g, n)?;
    if n > 0 && g.edges_within(n)?.all(|e| params.get(e) == 0.0) {
        return Ok(Interval::point(0.0));
    }
    match mode {
        Mode::Exact { .. } => Ok(Interval::point(
            1.0 - pi_exact(g, params, n, &mode.oracle())?,
        )),
        Mode::MonteCarlo {
            samples,
            seed,
            level,
        } => Ok(estimate_theta(g, params, n, *samples, *seed, *level)?.into()),
    }
}

/// `theta_n` over a band; `theta_n` is increasing in each parameter.
pub fn theta_band(g: &BallGraph, band: &MappedParams, n: usize, mode: &Mode) -> Result<Interval> {
    let at_point = theta_params(g, &band.point, n, mode)?;
    if band.is_exact() && band.lo == band.point {
        return Ok(at_point);
    }
    let lo = theta_params(g, &band.lo, n, mode)?;
    let hi = theta_params(g, &band.hi, n, mode)?;
    Ok(Interval::new(
        lo.lo,
        at_point.value.clamp(lo.lo, hi.hi),
        hi.hi,
    ))
}

pub fn pi_band(g: &BallGraph, band: &MappedParams, n: usize, mode: &Mode) -> Result<Interval> {
    Ok(theta_band(g, band, n, mode)?.complement())
}

fn homogeneous_band(g: &BallGraph, p: Interval) -> Result<MappedParams> {
    let p = p.clamp_unit();
    Ok(MappedParams {
        point: homogeneous(g, p.value)?,
        lo: homogeneous(g, p.lo)?,
        hi: homogeneous(g, p.hi)?,
    })
}

/// `theta_n` at a homogeneous parameter known up to an interval.
pub fn theta_at(g: &BallGraph, p: Interval, n: usize, mode: &Mode) -> Result<Interval> {
    theta_band(g, &homogeneous_band(g, p)?, n, mode)
}

/// `pi_n` at a homogeneous parameter known up to an interval.
pub fn pi_at(g: &BallGraph, p: Interval, n: usize, mode: &Mode) -> Result<Interval> {
    Ok(theta_at(g, p, n, mode)?.complement())
}

fn homogeneous_label(g: &BallGraph, params: &EdgeParams) -> Instance {
    let first = params.get(0);
    if params.as_slice().iter().all(|&x| x == first) {
        Instance::of(g).p(first)
    } else {
        Instance::of(g).params("inhomogeneous")
    }
}

/// `pi_n(p pi_m(p)) >= pi_n(p) / pi_{n+m}(p)`.
pub fn verify_cor_homog(
    g: &BallGraph,
    p: f64,
    n: usize,
    m: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("n", n)?;
    check_positive("m", m)?;
    check_p(p)?;
    check_radius(g, n + m)?;
    let p0 = Interval::point(p);
    let pi_m = pi_at(g, p0, m, mode)?;
    let lhs = pi_at(g, p0 * pi_m, n, mode)?;
    let rhs = pi_at(g, p0, n, mode)? / pi_at(g, p0, n + m, mode)?;
    Ok(VerificationReport::decide(
        "cor-homog",
        Instance::of(g).n(n).m(m).p(p),
        Relation::Ge,
        lhs,
        rhs,
        SLACK,
        mode,
    ))
}

/// `pi_n(q_n^m(p)) >= pi_n(p) / pi_{n+m}(p)` for arbitrary parameters, exact,
/// together with threshold dominance of the coupling when the decision tree fits.
pub fn verify_prop_coupl(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    m: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    let report = verify_prop_coupl_inequality(g, params, n, m, mode)?;
    let num_e = g.num_edges_within(n + m)?;
    if num_e > TREE_EDGE_CAP || params.check_conditioning_domain(0..num_e).is_err() {
        return Ok(report.with_note("threshold dominance not run"));
    }
    let problem = CouplingProblem::with_options(g, params.clone(), n, m, mode.oracle())?;
    let dominance = check_threshold_dominance(&problem)?;
    Ok(report
        .require(dominance.verdict, "threshold dominance")
        .with_extra("dominance_min_slack", dominance.lhs)
        .with_extra(
            "dominance_nodes",
            dominance
                .extras
                .get("nodes_checked")
                .copied()
                .unwrap_or(0.0),
        ))
}

/// The eq.-style inequality of [`verify_prop_coupl`] without the coupling audit.
pub fn verify_prop_coupl_inequality(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    m: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("n", n)?;
    check_positive("m", m)?;
    check_radius(g, n + m)?;
    let exact = Mode::Exact {
        cap: mode.oracle().cap,
    };
    let q = q_map(g, params, n, m, &exact)?;
    let input = MappedParams::exact(params.clone());
    let lhs = pi_band(g, &q, n, &exact)?;
    let rhs = pi_band(g, &input, n, &exact)? / pi_band(g, &input, n + m, &exact)?;
    Ok(VerificationReport::decide(
        "prop-coupl",
        homogeneous_label(g, params).n(n).m(m),
        Relation::Ge,
        lhs,
        rhs,
        SLACK,
        &exact,
    ))
}

/// Finite partial product `prod_{i <= i_max} pi_{im}(p pi_m(p)) >= pi_m(p)`.
pub fn verify_lem_prod(
    g: &BallGraph,
    p: f64,
    m: usize,
    i_max: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("m", m)?;
    check_positive("i_max", i_max)?;
    check_p(p)?;
    check_radius(g, i_max * m)?;
    let p0 = Interval::point(p);
    let rhs = pi_at(g, p0, m, mode)?;
    let shifted = p0 * rhs;
    let mut lhs = Interval::point(1.0);
    for i in 1..=i_max {
        lhs = lhs * pi_at(g, shifted, i * m, mode)?;
    }
    Ok(VerificationReport::decide(
        "lem-prod",
        Instance::of(g).m(m).i(i_max).p(p),
        Relation::Ge,
        lhs,
        rhs,
        SLACK,
        mode,
    )
    .with_note(format!("finite check: partial product up to i = {i_max}")))
}

/// Finite partial product `prod_{n <= n_max} pi_n(p)` against a floor.
pub fn verify_summability(
    g: &BallGraph,
    p: f64,
    n_max: usize,
    floor: f64,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("n_max", n_max)?;
    check_p(p)?;
    check_radius(g, n_max)?;
    let p0 = Interval::point(p);
    let mut lhs = Interval::point(1.0);
    for n in 1..=n_max {
        lhs = lhs * pi_at(g, p0, n, mode)?;
    }
    Ok(VerificationReport::decide(
        "summability",
        Instance::of(g).n(n_max).p(p),
        Relation::Ge,
        lhs,
        Interval::point(floor),
        0.0,
        mode,
    )
    .with_note(format!("finite check: partial product up to n = {n_max}")))
}

/// `pi_{n+m}(q_n^m(p)) >= sqrt(pi_n(p))`, with the two facts it rests on:
/// the left side is at least `pi_{n+m}(p)` and at least `pi_n(q_n^m(p))`.
pub fn verify_sqrt_step(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    m: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("n", n)?;
    check_positive("m", m)?;
    check_radius(g, n + m)?;
    let q = q_map(g, params, n, m, mode)?;
    let input = MappedParams::exact(params.clone());
    let lhs = pi_band(g, &q, n + m, mode)?;
    let pi_n = pi_band(g, &input, n, mode)?;
    let pi_nm = pi_band(g, &input, n + m, mode)?;
    let pi_n_q = pi_band(g, &q, n, mode)?;
    let inst = homogeneous_label(g, params).n(n).m(m);
    let first = VerificationReport::decide("", inst.clone(), Relation::Ge, lhs, pi_nm, SLACK, mode);
    let second =
        VerificationReport::decide("", inst.clone(), Relation::Ge, lhs, pi_n_q, SLACK, mode);
    Ok(VerificationReport::decide(
        "sqrt-step",
        inst,
        Relation::Ge,
        lhs,
        pi_n.powf(0.5),
        SLACK,
        mode,
    )
    .require(first.verdict, "lhs >= pi_{n+m}(p)")
    .require(second.verdict, "lhs >= pi_n(q)")
    .with_extra("pi_n_plus_m_p", pi_nm.value)
    .with_extra("pi_n_q", pi_n_q.value))
}

/// `pi_{n+im}(q_n^{m,(i)}(p)) >= pi_n(p)^{2^{-i}}`.
pub fn verify_ind_sigma(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    m: usize,
    i: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("n", n)?;
    check_positive("m", m)?;
    check_positive("i", i)?;
    check_radius(g, n + i * m)?;
    let q = q_iterated(g, params, n, m, i, mode)?;
    let lhs = pi_band(g, &q, n + i * m, mode)?;
    let rhs =
        pi_band(g, &MappedParams::exact(params.clone()), n, mode)?.powf(0.5f64.powi(i as i32));
    Ok(VerificationReport::decide(
        "ind-sigma",
        homogeneous_label(g, params).n(n).m(m).i(i),
        Relation::Ge,
        lhs,
        rhs,
        SLACK,
        mode,
    ))
}

/// `pi_{n+im}(p pi_m(p)^2) >= pi_n(p)^{2^{-i}}`.
pub fn verify_gamma_suff(
    g: &BallGraph,
    p: f64,
    n: usize,
    m: usize,
    i: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("n", n)?;
    check_positive("m", m)?;
    check_positive("i", i)?;
    check_p(p)?;
    check_radius(g, n + i * m)?;
    let p0 = Interval::point(p);
    let pi_m = pi_at(g, p0, m, mode)?;
    let lhs = pi_at(g, p0 * pi_m * pi_m, n + i * m, mode)?;
    let rhs = pi_at(g, p0, n, mode)?.powf(0.5f64.powi(i as i32));
    Ok(VerificationReport::decide(
        "gamma-suff",
        Instance::of(g).n(n).m(m).i(i).p(p),
        Relation::Ge,
        lhs,
        rhs,
        SLACK,
        mode,
    ))
}

/// Every entry of `q_n^{m,(i)}(p)` is at least `p prod_{j <= i} pi_{jm}(p)`.
pub fn verify_lem_lower(
    g: &BallGraph,
    p: f64,
    n: usize,
    m: usize,
    i: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("n", n)?;
    check_positive("m", m)?;
    check_positive("i", i)?;
    check_p(p)?;
    check_radius(g, n + i * m)?;
    let q = q_iterated(g, &homogeneous(g, p)?, n, m, i, mode)?;
    let lhs = (0..g.num_edges())
        .map(|e| q.entry(e))
        .fold(Interval::point(p), Interval::min);
    let mut rhs = Interval::point(p);
    for j in 1..=i {
        rhs = rhs * pi_at(g, Interval::point(p), j * m, mode)?;
    }
    Ok(VerificationReport::decide(
        "lem-lower",
        Instance::of(g).n(n).m(m).i(i).p(p),
        Relation::Ge,
        lhs,
        rhs,
        SLACK,
        mode,
    )
    .with_note("lhs = smallest entry of the iterate"))
}

/// `theta_{2n}(shift) <= C_0 theta_n(p) / 2^{n/m}` where the shift is
/// `p - 2 theta_m(p)` or `p (1 - 2 theta_m(p))`; non-positive shifts give `theta = 0`.
pub fn verify_thm_quant(
    g: &BallGraph,
    p: f64,
    n: usize,
    m: usize,
    variant: Variant,
    mode: &Mode,
) -> Result<VerificationReport> {
    check_positive("n", n)?;
    check_positive("m", m)?;
    check_p(p)?;
    check_radius(g, (2 * n).max(m))?;
    let theta_m = theta_at(g, Interval::point(p), m, mode)?;
    let shift = match variant {
        Variant::Standard => theta_m.map_decreasing(|t| p - 2.0 * t),
        Variant::ProductForm => theta_m.map_decreasing(|t| p * (1.0 - 2.0 * t)),
    };
    let lhs = theta_at(g, shift.map_increasing(|s| s.max(0.0)), 2 * n, mode)?;
    let rhs = theta_at(g, Interval::point(p), n, mode)?.scale(C0 / 2f64.powf(n as f64 / m as f64));
    let check = match variant {
        Variant::Standard => "thm-quant",
        Variant::ProductForm => "thm-quant-product",
    };
    let mut report = VerificationReport::decide(
        check,
        Instance::of(g).n(n).m(m).p(p),
        Relation::Le,
        lhs,
        rhs,
        SLACK,
        mode,
    )
    .with_extra("shifted_p", shift.value)
    .with_extra("theta_m", theta_m.value)
    .with_extra("c0", C0);
    if shift.hi <= 0.0 {
        report = report.with_note("shifted parameter is non-positive, lhs = 0");
    }
    if theta_m.lo >= 0.5 {
        report = report.with_note("trivial branch: theta_m(p) >= 1/2");
    }
    if m >= n {
        report = report
            .with_note("trivial branch m >= n: lhs <= theta_n(p) <= (C0/2) theta_n(p) <= rhs");
    }
    Ok(report)
}

/// Least-squares slope weights `w_k` with `slope = sum w_k y_k`.
fn slope_weights(xs: &[f64]) -> Vec<f64> {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    xs.iter().map(|x| (x - mean) / sxx).collect()
}

/// Lower bounds on `theta_n(p)` above `pc_ref`, and a negative fitted slope of
/// `log theta_n` against `n` below it (a consistency check, not a proof of decay).
pub fn verify_sharpness_consequences(
    g: &BallGraph,
    p: f64,
    pc_ref: Option<f64>,
    ns: &[usize],
    mode: &Mode,
) -> Result<VerificationReport> {
    let pc = pc_ref.ok_or(Error::MissingCriticalPoint)?;
    check_p(p)?;
    check_p(pc)?;
    let n_max = *ns
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("empty n range".into()))?;
    check_radius(g, n_max)?;
    if ns.contains(&0) {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if p >= pc {
        let theta = theta_at(g, Interval::point(p), n_max, mode)?;
        let (over_p, half) = if p > pc {
            ((p - pc) / p, (p - pc) / 2.0)
        } else {
            (0.0, 0.0)
        };
        let inst = Instance::of(g).n(n_max).p(p);
        let half_check = VerificationReport::decide(
            "",
            inst.clone(),
            Relation::Ge,
            theta,
            Interval::point(half),
            SLACK,
            mode,
        );
        return Ok(VerificationReport::decide(
            "sharpness",
            inst,
            Relation::Ge,
            theta,
            Interval::point(over_p),
            SLACK,
            mode,
        )
        .require(half_check.verdict, "(p - pc)/2 bound")
        .with_note(format!("pc_ref = {pc}; rhs = (p - pc)/p"))
        .with_extra("bound_half", half)
        .with_extra("bound_over_p", over_p)
        .with_extra("pc_ref", pc));
    }
    let mut sorted = ns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(Error::InvalidArgument(
            "the slope fit needs at least two distinct n".into(),
        ));
    }
    let thetas: Vec<Interval> = sorted
        .iter()
        .map(|&n| theta_at(g, Interval::point(p), n, mode))
        .collect::<Result<_>>()?;
    let weights = slope_weights(&sorted.iter().map(|&n| n as f64).collect::<Vec<_>>());
    let mut slope = Interval::point(0.0);
    for (w, t) in weights.iter().zip(&thetas) {
        let (lo, value, hi) = (t.lo.ln(), t.value.ln(), t.hi.ln());
        let (a, b) = if *w >= 0.0 {
            (w * lo, w * hi)
        } else {
            (w * hi, w * lo)
        };
        slope = Interval {
            lo: slope.lo + a,
            value: slope.value + w * value,
            hi: slope.hi + b,
        };
    }
    let mut report = VerificationReport::decide(
        "sharpness",
        Instance::of(g).n(n_max).p(p),
        Relation::Le,
        slope,
        Interval::point(0.0),
        0.0,
        mode,
    )
    .with_note(format!(
        "consistency: fitted slope of log theta_n over n, pc_ref = {pc}"
    ))
    .with_extra("pc_ref", pc)
    .with_extra("slope", slope.value);
    for (n, t) in sorted.iter().zip(&thetas) {
        report = report
            .with_extra(&format!("theta_{n}"), t.value)
            .with_extra(&format!("theta_{n}_hi"), t.hi);
    }
    Ok(report)
}

/// Uniform grid of `nx * na` points covering `[0, 1/2] x [0, a_max]`.
pub fn elementary_grid(nx: usize, na: usize, a_max: f64) -> Vec<(f64, f64)> {
    let step = |k: usize, count: usize, top: f64| {
        if count <= 1 {
            0.0
        } else {
            top * k as f64 / (count - 1) as f64
        }
    };
    (0..nx)
        .flat_map(|j| (0..na).map(move |k| (step(j, nx, 0.5), step(k, na, a_max))))
        .collect()
}

/// `1 - (1 - x)^a <= 2 log 2 a x` at every grid point, tolerance `1e-12`.
pub fn check_elementary_ineq(grid: &[(f64, f64)]) -> Result<VerificationReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut at = (0.0, 0.0);
    for &(x, a) in grid {
        if !(0.0..=0.5).contains(&x) || a.is_nan() || a < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid point ({x}, {a}) outside [0, 1/2] x [0, inf)"
            )));
        }
        let lhs = -(a * (-x).ln_1p()).exp_m1();
        let gap = lhs - 2.0 * LN_2 * a * x;
        if gap > worst {
            worst = gap;
            at = (x, a);
        }
    }
    if grid.is_empty() {
        worst = 0.0;
    }
    let inst = Instance {
        graph: "none".into(),
        ..Default::default()
    };
    Ok(VerificationReport::decide(
        "elementary",
        inst,
        Relation::Le,
        Interval::point(worst),
        Interval::point(0.0),
        ELEMENTARY_TOL,
        &Mode::exact(),
    )
    .with_note("lhs = max over the grid of 1-(1-x)^a - 2 log2 a x")
    .with_extra("grid_points", grid.len() as f64)
    .with_extra("worst_x", at.0)
    .with_extra("worst_a", at.1))
}

/// Threshold dominance of the coupling as a suite check.
pub fn verify_threshold_dominance(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    m: usize,
    mode: &Mode,
) -> Result<VerificationReport> {
    let problem = CouplingProblem::with_options(g, params.clone(), n, m, mode.oracle())?;
    check_threshold_dominance(&problem)
}

/// Worst verdict of a batch of reports.
pub fn overall(reports: &[VerificationReport]) -> Verdict {
    reports
        .iter()
        .fold(Verdict::Pass, |acc, r| acc.and(r.verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_ball, Family};
    use crate::report::Verdict;

    fn line(r: usize) -> BallGraph {
        build_ball(Family::Hypercubic, 1, r).unwrap()
    }

    fn pi_line(p: f64, n: i32) -> f64 {
        (1.0 - p.powi(n)).powi(2)
    }

    const GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

    #[test]
    fn cor_homog_line_example() {
        let g = line(2);
        let r = verify_cor_homog(&g, 0.5, 1, 1, &Mode::exact()).unwrap();
        assert!((r.lhs - 0.765625).abs() < 1e-12);
        assert!((r.rhs - 0.25 / 0.5625).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Pass);
        let tiny = verify_cor_homog(&g, 1e-9, 1, 1, &Mode::exact()).unwrap();
        assert!(tiny.passed() && (tiny.lhs - 1.0).abs() < 1e-8 && (tiny.rhs - 1.0).abs() < 1e-8);
        assert!(matches!(
            verify_cor_homog(&g, 0.5, 2, 1, &Mode::exact()),
            Err(Error::RadiusOutOfRange { .. })
        ));
    }

    #[test]
    fn cor_homog_exact_grid() {
        let g = line(6);
        for p in GRID {
            for n in 1..=3 {
                for m in 1..=3 {
                    assert!(verify_cor_homog(&g, p, n, m, &Mode::exact())
                        .unwrap()
                        .passed());
                }
            }
        }
        let sq = build_ball(Family::Hypercubic, 2, 2).unwrap();
        for p in GRID {
            assert!(verify_cor_homog(&sq, p, 1, 1, &Mode::exact())
                .unwrap()
                .passed());
        }
    }

    #[test]
    fn prop_coupl_dominates_homogeneous_bound() {
        let g = line(2);
        for p in GRID {
            let params = homogeneous(&g, p).unwrap();
            let prop = verify_prop_coupl(&g, &params, 1, 1, &Mode::exact()).unwrap();
            let cor = verify_cor_homog(&g, p, 1, 1, &Mode::exact()).unwrap();
            assert!(prop.passed(), "{prop:?}");
            // q >= p pi_1(p) entrywise and pi_1 is decreasing, so the general
            // bound is the sharper of the two.
            assert!(prop.lhs <= cor.lhs + 1e-12 && prop.lhs >= prop.rhs);
            assert!((prop.rhs - cor.rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn prop_coupl_stress_and_random() {
        let g = line(2);
        let mut probs = vec![0.5; g.num_edges()];
        probs[1] = 1.0 - 1e-9;
        let params = EdgeParams::new(&g, probs).unwrap();
        assert!(verify_prop_coupl(&g, &params, 1, 1, &Mode::exact())
            .unwrap()
            .passed());
        let mut stream = crate::params::UniformStream::new(2024, 0);
        for draw in 0..100 {
            stream.reset(2024, draw);
            let probs = (0..g.num_edges())
                .map(|e| 0.2 + 0.6 * stream.get(e))
                .collect();
            let params = EdgeParams::new(&g, probs).unwrap();
            assert!(verify_prop_coupl(&g, &params, 1, 1, &Mode::exact())
                .unwrap()
                .passed());
        }
    }

    #[test]
    fn lem_prod_and_summability_line() {
        let g = line(10);
        let r = verify_lem_prod(&g, 0.5, 1, 6, &Mode::exact()).unwrap();
        let expected: f64 = (1..=6).map(|i| pi_line(0.125, i)).product();
        assert!((r.lhs - expected).abs() < 1e-12 && (expected - 0.7386).abs() < 1e-4);
        assert!((r.rhs - 0.25).abs() < 1e-12 && r.passed());
        let closed: f64 = (1..=10).map(|n| pi_line(0.5, n)).product();
        let s = verify_summability(&g, 0.5, 10, 0.05, &Mode::exact()).unwrap();
        assert!((s.lhs - closed).abs() < 1e-12 && (closed - 0.083562).abs() < 1e-6 && s.passed());
        assert_eq!(
            verify_summability(&g, 0.5, 10, 0.1, &Mode::exact())
                .unwrap()
                .verdict,
            Verdict::Fail
        );
        let small = verify_summability(&g, 1e-6, 10, 0.1, &Mode::exact()).unwrap();
        assert!((small.lhs - 1.0).abs() < 1e-5);
    }

    #[test]
    fn sqrt_step_and_ind_sigma_line() {
        let g = line(3);
        let params = homogeneous(&g, 0.5).unwrap();
        let r = verify_sqrt_step(&g, &params, 1, 1, &Mode::exact()).unwrap();
        assert!((r.rhs - 0.5).abs() < 1e-15 && r.passed(), "{r:?}");
        let base = verify_ind_sigma(&g, &params, 1, 1, 1, &Mode::exact()).unwrap();
        assert_eq!(base.lhs, r.lhs);
        assert_eq!(base.rhs, r.rhs);
        let two = verify_ind_sigma(&g, &params, 1, 1, 2, &Mode::exact()).unwrap();
        assert!((two.rhs - 0.25f64.powf(0.25)).abs() < 1e-15 && two.passed());
        let sq = build_ball(Family::Hypercubic, 2, 2).unwrap();
        let sp = homogeneous(&sq, 0.5).unwrap();
        assert!(verify_sqrt_step(&sq, &sp, 1, 1, &Mode::exact())
            .unwrap()
            .passed());
        assert!(verify_ind_sigma(&sq, &sp, 1, 1, 1, &Mode::exact())
            .unwrap()
            .passed());
    }

    #[test]
    fn gamma_suff_line_example() {
        let g = line(2);
        let r = verify_gamma_suff(&g, 0.5, 1, 1, 1, &Mode::exact()).unwrap();
        assert!((r.lhs - pi_line(0.03125, 2)).abs() < 1e-15);
        assert!((r.lhs - 0.998047).abs() < 1e-6 && (r.rhs - 0.5).abs() < 1e-15 && r.passed());
    }

    #[test]
    fn chain_on_the_line() {
        // Lemma bound plus induction imply the sufficient condition instance by instance.
        let g = line(5);
        for p in GRID {
            for i in 1..=2 {
                let params = homogeneous(&g, p).unwrap();
                let lower = verify_lem_lower(&g, p, 1, 1, i, &Mode::exact()).unwrap();
                let ind = verify_ind_sigma(&g, &params, 1, 1, i, &Mode::exact()).unwrap();
                let gamma = verify_gamma_suff(&g, p, 1, 1, i, &Mode::exact()).unwrap();
                let sqrt = verify_sqrt_step(&g, &params, 1, 1, &Mode::exact()).unwrap();
                assert!(lower.passed() && ind.passed() && gamma.passed() && sqrt.passed());
                // p pi_1(p)^2 <= every entry of the iterate, and pi is decreasing.
                let lifted = p * pi_line(p, 1).powi(2);
                assert!(lifted <= lower.lhs + 1e-12);
                assert!(gamma.lhs >= ind.lhs - 1e-12);
            }
        }
    }

    #[test]
    fn thm_quant_examples() {
        let g = line(12);
        let r = verify_thm_quant(&g, 0.3, 6, 3, Variant::Standard, &Mode::exact()).unwrap();
        let theta = |p: f64, n: i32| 1.0 - pi_line(p, n);
        let shift = 0.3 - 2.0 * theta(0.3, 3);
        assert!((r.extras["shifted_p"] - shift).abs() < 1e-15 && (shift - 0.193458).abs() < 1e-6);
        assert!((r.lhs - theta(shift, 12)).abs() < 1e-13 && (r.lhs - 5.5e-9).abs() < 1e-10);
        assert!((r.rhs - C0 * theta(0.3, 6) / 4.0).abs() < 1e-15 && (r.rhs - 1.0e-3).abs() < 5e-5);
        assert!(r.passed());
        let neg = verify_thm_quant(&g, 0.9, 3, 1, Variant::Standard, &Mode::exact()).unwrap();
        assert_eq!(neg.lhs, 0.0);
        assert!(neg.passed() && neg.note.contains("non-positive"));
        let trivial =
            verify_thm_quant(&g, 0.5, 2, 3, Variant::ProductForm, &Mode::exact()).unwrap();
        assert!(trivial.passed() && trivial.note.contains("m >= n"));
        for p in GRID {
            for variant in [Variant::Standard, Variant::ProductForm] {
                assert!(verify_thm_quant(&g, p, 4, 2, variant, &Mode::exact())
                    .unwrap()
                    .passed());
            }
        }
    }

    #[test]
    fn sharpness_rules() {
        let g = build_ball(Family::Hypercubic, 2, 4).unwrap();
        let mode = Mode::monte_carlo(2000, 1, 0.999);
        assert_eq!(
            verify_sharpness_consequences(&g, 0.6, None, &[4], &mode),
            Err(Error::MissingCriticalPoint)
        );
        let at_pc = verify_sharpness_consequences(&g, 0.5, Some(0.5), &[4], &mode).unwrap();
        assert!(at_pc.passed() && at_pc.rhs == 0.0);
        let above = verify_sharpness_consequences(&g, 0.9, Some(0.5), &[4], &mode).unwrap();
        assert!(above.passed());
        let below =
            verify_sharpness_consequences(&g, 0.2, Some(0.5), &[1, 2, 3, 4], &mode).unwrap();
        assert!(below.extras["slope"] < 0.0);
    }

    #[test]
    fn elementary_inequality() {
        let grid = elementary_grid(500, 500, 10.0);
        assert_eq!(grid.len(), 250_000);
        assert!(check_elementary_ineq(&grid).unwrap().passed());
        let single = |x, a| check_elementary_ineq(&[(x, a)]).unwrap();
        assert_eq!(single(0.0, 3.0).lhs, 0.0);
        assert!((single(0.5, 1.0).lhs - (0.5 - LN_2)).abs() < 1e-15);
        assert!((single(0.5, 2.0).lhs - (0.75 - 2.0 * LN_2)).abs() < 1e-15);
        assert!(check_elementary_ineq(&[(0.6, 1.0)]).is_err());
    }

    #[test]
    fn summability_square_monte_carlo() {
        let g = build_ball(Family::Hypercubic, 2, 16).unwrap();
        let r =
            verify_summability(&g, 0.35, 16, 0.001, &Mode::monte_carlo(5000, 3, 0.999)).unwrap();
        let (lo, hi) = r.lhs_ci.unwrap();
        assert!(lo <= r.lhs && r.lhs <= hi && hi < 0.01);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn monte_carlo_matches_exact_in_expectation() {
        let g = line(4);
        let exact = verify_cor_homog(&g, 0.5, 2, 2, &Mode::exact()).unwrap();
        let mc = verify_cor_homog(&g, 0.5, 2, 2, &Mode::monte_carlo(200_000, 9, 0.999)).unwrap();
        let (lo, hi) = mc.lhs_ci.unwrap();
        assert!(lo <= exact.lhs && exact.lhs <= hi);
        assert!(mc.passed());
    }

    #[test]
    fn monte_carlo_false_fail_rate() {
        // A true inequality with a small gap: fails must be rare.
        let g = line(3);
        let fails = (0..500u64)
            .filter(|&seed| {
                let r =
                    verify_cor_homog(&g, 0.7, 1, 2, &Mode::monte_carlo(4000, seed, 0.999)).unwrap();
                r.verdict == Verdict::Fail
            })
            .count();
        assert!(fails <= 1, "{fails} false fails");
    }

    #[test]
    fn wilson_coverage() {
        let g = line(3);
        let params = homogeneous(&g, 0.5).unwrap();
        let truth = 1.0 - pi_line(0.5, 3);
        let covered = (0..100u64)
            .filter(|&seed| {
                let t =
                    theta_params(&g, &params, 3, &Mode::monte_carlo(2000, seed, 0.999)).unwrap();
                t.lo <= truth && truth <= t.hi
            })
            .count();
        assert!(covered >= 97, "{covered}/100");
    }
}
