//! The acceptance suite as library calls, so the CLI `selftest` command and the
//! acceptance test run the same code.

use std::time::Instant;

use rayon::prelude::*;

use crate::coupling::{
    check_threshold_dominance_on, enumerate_decision_tree, independence_audit, sample_summary,
    x_law_total_variation, CouplingProblem,
};
use crate::error::Result;
use crate::exact::{fkg_covariance, pi_exact, EventSpec, OracleOptions};
use crate::lattice::{build_ball, BallGraph, Family};
use crate::mode::Mode;
use crate::params::{homogeneous, EdgeParams, UniformStream};
use crate::report::Verdict;
use crate::verify::{
    check_elementary_ineq, elementary_grid, verify_cor_homog, verify_gamma_suff, verify_ind_sigma,
    verify_lem_lower, verify_prop_coupl, verify_prop_coupl_inequality,
    verify_sharpness_consequences, verify_sqrt_step, verify_thm_quant, Variant,
};

/// The p-grid `{0.1, ..., 0.9}`.
pub const P_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {} {}: {} ({}; {:.2}s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail,
            self.seconds
        )
    }
}

fn timed(
    id: u32,
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn ball(dim: usize, radius: usize) -> Result<BallGraph> {
    build_ball(Family::Hypercubic, dim, radius)
}

/// Exact `pi_n(p)` on `Z^1` against `(1 - p^n)^2`, `n <= 6`.
pub fn closed_form_line() -> CriterionOutcome {
    timed(1, "closed-form oracle on Z^1", || {
        let g = ball(1, 6)?;
        let mut worst = 0.0f64;
        for p in P_GRID {
            let params = homogeneous(&g, p)?;
            for n in 1..=6 {
                let exact = pi_exact(&g, &params, n, &OracleOptions::default())?;
                worst = worst.max((exact - (1.0 - p.powi(n as i32)).powi(2)).abs());
            }
        }
        Ok((worst <= 1e-12, format!("max abs error {worst:.3e}")))
    })
}

/// The homogeneous corollary, exact, on `Z^1` (`n, m <= 3`) and `Z^2` (`n = m = 1`).
pub fn cor_homog_exact() -> CriterionOutcome {
    timed(2, "homogeneous corollary exact", || {
        let line = ball(1, 6)?;
        let square = ball(2, 2)?;
        let mut cases = Vec::new();
        for p in P_GRID {
            for n in 1..=3 {
                for m in 1..=3 {
                    cases.push((&line, p, n, m));
                }
            }
            cases.push((&square, p, 1, 1));
        }
        let reports: Vec<_> = cases
            .par_iter()
            .map(|&(g, p, n, m)| verify_cor_homog(g, p, n, m, &Mode::exact()))
            .collect::<Result<_>>()?;
        let passed = reports.iter().filter(|r| r.passed()).count();
        let min_gap = reports
            .iter()
            .map(|r| r.lhs - r.rhs)
            .fold(f64::INFINITY, f64::min);
        Ok((
            passed == reports.len(),
            format!("{passed}/{} pass, min lhs-rhs {min_gap:.3e}", reports.len()),
        ))
    })
}

/// Dominance, leaf law, sampled transcripts, and randomized inhomogeneous inputs.
pub fn coupling_suite(transcripts: u64) -> CriterionOutcome {
    timed(3, "coupling and inhomogeneous inequality", || {
        let line = ball(1, 2)?;
        let square = ball(2, 2)?;
        let mut tree_cases: Vec<(&BallGraph, f64)> = P_GRID.iter().map(|&p| (&line, p)).collect();
        tree_cases.extend([0.3, 0.5, 0.7].map(|p| (&square, p)));
        let mut worst_tv = 0.0f64;
        let mut dominance_ok = true;
        let mut nodes = 0.0;
        for (g, p) in &tree_cases {
            let problem = CouplingProblem::new(g, homogeneous(g, *p)?, 1, 1)?;
            let tree = enumerate_decision_tree(&problem)?;
            let report = check_threshold_dominance_on(&problem, &tree)?;
            dominance_ok &= report.passed();
            nodes += report.extras["nodes_checked"];
            worst_tv = worst_tv.max(x_law_total_variation(&problem, &tree)?);
        }
        let mut violations = 0;
        for g in [&line, &square] {
            let problem = CouplingProblem::new(g, homogeneous(g, 0.5)?, 1, 1)?;
            violations += sample_summary(&problem, 20_240_101, transcripts)?.violating_runs;
        }
        let mut random_pass = 0;
        let draws = 100u64;
        for (g, with_tree) in [(&line, true), (&square, false)] {
            let outcomes: Vec<bool> = (0..draws)
                .into_par_iter()
                .map(|draw| {
                    let mut stream = UniformStream::new(77, draw);
                    let probs = (0..g.num_edges())
                        .map(|e| 0.2 + 0.6 * stream.get(e))
                        .collect();
                    let params = EdgeParams::new(g, probs)?;
                    let r = if with_tree {
                        verify_prop_coupl(g, &params, 1, 1, &Mode::exact())?
                    } else {
                        verify_prop_coupl_inequality(g, &params, 1, 1, &Mode::exact())?
                    };
                    Ok(r.passed())
                })
                .collect::<Result<_>>()?;
            random_pass += outcomes.iter().filter(|&&b| b).count();
        }
        let passed = dominance_ok
            && worst_tv <= 1e-10
            && violations == 0
            && random_pass == 2 * draws as usize;
        Ok((
            passed,
            format!(
                "dominance {} over {nodes} nodes, max TV {worst_tv:.3e}, {violations} violating runs of {}, {random_pass}/{} random inputs pass",
                if dominance_ok { "holds" } else { "FAILS" },
                2 * transcripts,
                2 * draws
            ),
        ))
    })
}

/// Square-root step, its induction, the sufficient condition and the iterate lower bound, exact on `Z^1`.
pub fn square_root_chain() -> CriterionOutcome {
    timed(4, "square-root chain exact on Z^1", || {
        let g = ball(1, 6)?;
        let mut cases = Vec::new();
        for p in P_GRID {
            for n in 1..=2 {
                for m in 1..=2 {
                    for i in 1..=2 {
                        cases.push((p, n, m, i));
                    }
                }
            }
        }
        let verdicts: Vec<Vec<Verdict>> = cases
            .par_iter()
            .map(|&(p, n, m, i)| {
                let params = homogeneous(&g, p)?;
                let mode = Mode::exact();
                let mut out = vec![
                    verify_ind_sigma(&g, &params, n, m, i, &mode)?.verdict,
                    verify_gamma_suff(&g, p, n, m, i, &mode)?.verdict,
                    verify_lem_lower(&g, p, n, m, i, &mode)?.verdict,
                ];
                if i == 1 {
                    out.push(verify_sqrt_step(&g, &params, n, m, &mode)?.verdict);
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let total: usize = verdicts.iter().map(Vec::len).sum();
        let passed = verdicts
            .iter()
            .flatten()
            .filter(|v| **v == Verdict::Pass)
            .count();
        Ok((passed == total, format!("{passed}/{total} checks pass")))
    })
}

fn increasing_catalog(g: &BallGraph) -> Vec<EventSpec> {
    let mut catalog = vec![
        EventSpec::OriginReaches { radius: 1 },
        EventSpec::OriginReaches { radius: 2 },
    ];
    for vertex in g.sphere_range(1).into_iter().flatten().take(2) {
        catalog.push(EventSpec::VertexReaches { vertex, radius: 2 });
    }
    let last = g.num_edges() - 1;
    catalog.push(EventSpec::EdgeOpen(0));
    catalog.push(EventSpec::EdgeOpen(last));
    catalog.push(EventSpec::and([
        EventSpec::EdgeOpen(0),
        EventSpec::EdgeOpen(last),
    ]));
    catalog.push(EventSpec::and([
        EventSpec::OriginReaches { radius: 1 },
        EventSpec::EdgeOpen(last),
    ]));
    catalog
}

/// Harris covariance on increasing events and the independence identity at every tree history.
pub fn fkg_and_independence() -> CriterionOutcome {
    timed(7, "FKG and independence audits", || {
        let line = ball(1, 3)?;
        let square = ball(2, 2)?;
        let mut min_cov = f64::INFINITY;
        let mut pairs = 0;
        for g in [&line, &square] {
            let support: Vec<usize> = (0..g.num_edges()).collect();
            let catalog = increasing_catalog(g);
            for p in P_GRID {
                let params = homogeneous(g, p)?;
                for (a, ea) in catalog.iter().enumerate() {
                    for eb in &catalog[a..] {
                        min_cov = min_cov.min(fkg_covariance(g, &params, ea, eb, &support)?);
                        pairs += 1;
                    }
                }
            }
        }
        let mut worst = 0.0f64;
        let small = ball(1, 2)?;
        for (g, p) in [(&small, 0.3), (&small, 0.7), (&square, 0.5)] {
            let problem = CouplingProblem::new(g, homogeneous(g, p)?, 1, 1)?;
            let tree = enumerate_decision_tree(&problem)?;
            worst = worst.max(independence_audit(&problem, &tree)?);
        }
        Ok((
            min_cov >= -1e-12 && worst <= 1e-10,
            format!(
                "min covariance {min_cov:.3e} over {pairs} pairs, max independence gap {worst:.3e}"
            ),
        ))
    })
}

/// The elementary inequality on a 500 x 500 grid of `[0, 1/2] x [0, 10]`.
pub fn elementary() -> CriterionOutcome {
    timed(8, "elementary inequality", || {
        let r = check_elementary_ineq(&elementary_grid(500, 500, 10.0))?;
        Ok((r.passed(), format!("max excess {:.3e}", r.lhs)))
    })
}

/// Quantitative bound on `Z^2` by Monte Carlo.
pub fn thm_quant_statistical(samples: u64, seed: u64) -> CriterionOutcome {
    timed(5, "quantitative bound on Z^2 (Monte Carlo)", || {
        let g = ball(2, 32)?;
        let mut cases = Vec::new();
        for p in [0.35, 0.45, 0.5, 0.55] {
            for m in [1, 2, 4] {
                for n in [4, 8, 16] {
                    cases.push((p, n, m));
                }
            }
        }
        let mode = Mode::monte_carlo(samples, seed, 0.999);
        let mut verdicts = Vec::new();
        for &(p, n, m) in &cases {
            verdicts.push(verify_thm_quant(&g, p, n, m, Variant::Standard, &mode)?.verdict);
        }
        let fails = verdicts.iter().filter(|v| **v == Verdict::Fail).count();
        let passes = verdicts.iter().filter(|v| **v == Verdict::Pass).count();
        let ok = fails == 0 && passes * 5 >= verdicts.len() * 4;
        Ok((
            ok,
            format!(
                "{passes} pass, {fails} fail, {} inconclusive",
                verdicts.len() - passes - fails
            ),
        ))
    })
}

/// Lower bounds above `pc_ref = 0.5` and decay below it on `Z^2` by Monte Carlo.
pub fn sharpness_statistical(
    samples_above: u64,
    samples_below: u64,
    seed: u64,
) -> CriterionOutcome {
    timed(6, "sharpness consequences on Z^2 (Monte Carlo)", || {
        let g = ball(2, 64)?;
        let above = verify_sharpness_consequences(
            &g,
            0.6,
            Some(0.5),
            &[64],
            &Mode::monte_carlo(samples_above, seed, 0.999),
        )?;
        let lower = above.lhs_ci.map_or(above.lhs, |c| c.0);
        let below = verify_sharpness_consequences(
            &g,
            0.35,
            Some(0.5),
            &[4, 8, 16, 32],
            &Mode::monte_carlo(samples_below, seed, 0.999),
        )?;
        let slope_hi = below.lhs_ci.map_or(below.lhs, |c| c.1);
        let theta32_hi = below.extras["theta_32_hi"];
        let (over_p, half) = (above.extras["bound_over_p"], above.extras["bound_half"]);
        let ok = lower >= over_p
            && lower >= half
            && above.passed()
            && below.passed()
            && theta32_hi <= 0.02;
        Ok((
            ok,
            format!(
                "theta_64(0.6) lower CI {lower:.4}, slope {:.4} (upper {slope_hi:.4}), theta_32(0.35) upper CI {theta32_hi:.2e}",
                below.lhs
            ),
        ))
    })
}

/// Criteria decided by exact computation.
pub fn run_exact_suite() -> Vec<CriterionOutcome> {
    vec![
        closed_form_line(),
        cor_homog_exact(),
        coupling_suite(100_000),
        square_root_chain(),
        fkg_and_independence(),
        elementary(),
    ]
}
