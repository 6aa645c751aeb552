use perclab::coupling::{
    check_threshold_dominance_on, enumerate_decision_tree, sample_coupling, sample_summary,
    x_law_total_variation,
};
use perclab::exact::{OracleOptions, DEFAULT_CAP};
use perclab::qmap::q_iterated;
use perclab::report::{Instance, Relation};
use perclab::verify::{self, Variant};
use perclab::{
    build_ball, homogeneous, selftest, BallGraph, CouplingProblem, EdgeParams, Family, Interval,
    Measurement, Mode, Verdict, VerificationReport, CSV_HEADER,
};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::{CliError, Outcome};

type Result<T> = std::result::Result<T, CliError>;

const CHECKS: &[&str] = &[
    "cor-homog",
    "prop-coupl",
    "lem-prod",
    "summability",
    "sqrt-step",
    "ind-sigma",
    "gamma-suff",
    "lem-lower",
    "thm-quant",
    "sharpness",
    "elementary",
    "threshold-dominance",
];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| usage(format!("{flag} is required")))
}

fn graph(cfg: &ExperimentConfig, default_radius: Option<usize>) -> Result<BallGraph> {
    let family: Family = cfg.graph.as_deref().unwrap_or("zd").parse()?;
    let dim = cfg.dim.unwrap_or(match family {
        Family::Hypercubic => 2,
        Family::RegularTree => 3,
    });
    let radius = cfg
        .radius
        .or(default_radius)
        .ok_or_else(|| usage("--radius is required"))?;
    Ok(build_ball(family, dim, radius)?)
}

fn mode(cfg: &ExperimentConfig, default: &str) -> Result<Mode> {
    match cfg.mode.as_deref().unwrap_or(default) {
        "exact" => Ok(Mode::Exact {
            cap: cfg.cap.unwrap_or(DEFAULT_CAP),
        }),
        "mc" | "monte-carlo" => {
            let samples = cfg.samples.unwrap_or(100_000);
            if samples == 0 {
                return Err(usage("--samples must be positive"));
            }
            let level = cfg.level.unwrap_or(0.999);
            if !(level > 0.0 && level < 1.0) {
                return Err(usage("--level must lie in (0, 1)"));
            }
            Ok(Mode::monte_carlo(samples, cfg.seed.unwrap_or(1), level))
        }
        other => Err(usage(format!(
            "unknown mode `{other}` (expected exact or mc)"
        ))),
    }
}

fn p_values(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    match &cfg.p_grid {
        Some(grid) if grid.is_empty() => Err(usage("--p-grid is empty")),
        Some(grid) => Ok(grid.clone()),
        None => Ok(vec![need(cfg.p, "--p")?]),
    }
}

fn edge_params(cfg: &ExperimentConfig, g: &BallGraph, p: Option<f64>) -> Result<EdgeParams> {
    match &cfg.params {
        Some(v) => Ok(EdgeParams::new(g, v.clone())?),
        None => Ok(homogeneous(g, need(p, "--p or --params")?)?),
    }
}

fn csv(rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn json_array(items: impl IntoIterator<Item = String>) -> String {
    format!("[{}]\n", items.into_iter().collect::<Vec<_>>().join(",\n"))
}

fn measurements(ms: &[Measurement]) -> Outcome {
    Outcome {
        csv: csv(ms.iter().map(Measurement::to_csv_row)),
        json: json_array(ms.iter().map(Measurement::to_json)),
        text: None,
        verdict: None,
    }
}

fn reports(rs: &[VerificationReport], text: Option<(String, String)>) -> Outcome {
    Outcome {
        csv: csv(rs.iter().map(VerificationReport::to_csv_row)),
        json: json_array(rs.iter().map(VerificationReport::to_json)),
        text,
        verdict: Some(verify::overall(rs)),
    }
}

pub(crate) fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.command.as_deref().unwrap_or_default() {
        "estimate" => estimate(cfg),
        "exact" => exact(cfg),
        "qmap" => qmap(cfg),
        "couple" => couple(cfg),
        "verify" => run_verify(cfg),
        "scan" => scan(cfg),
        "selftest" => run_selftest(cfg),
        other => Err(usage(format!("unknown command `{other}`"))),
    }
}

fn estimate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n = need(cfg.n, "--n")?;
    let g = graph(cfg, Some(n))?;
    let mode = mode(cfg, "mc")?;
    let mut rows = Vec::new();
    for p in p_values(cfg)? {
        let params = edge_params(cfg, &g, Some(p))?;
        let theta = verify::theta_params(&g, &params, n, &mode)?;
        rows.push(Measurement::new(
            "theta",
            Instance::of(&g).n(n).p(p),
            theta,
            &mode,
        ));
    }
    Ok(measurements(&rows))
}

fn exact(cfg: &ExperimentConfig) -> Result<Outcome> {
    if cfg.mode.as_deref().is_some_and(|m| m != "exact") {
        return Err(usage("the exact command only runs in exact mode"));
    }
    let n = need(cfg.n, "--n")?;
    let g = graph(cfg, Some(n))?;
    let mode = mode(cfg, "exact")?;
    let mut rows = Vec::new();
    for p in p_values(cfg)? {
        let params = edge_params(cfg, &g, Some(p))?;
        let theta = verify::theta_params(&g, &params, n, &mode)?;
        let inst = Instance::of(&g).n(n).p(p);
        rows.push(Measurement::new("theta", inst.clone(), theta, &mode));
        rows.push(Measurement::new("pi", inst, theta.complement(), &mode));
    }
    Ok(measurements(&rows))
}

fn qmap(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (n, m) = (need(cfg.n, "--n")?, need(cfg.m, "--m")?);
    let i = cfg.i.unwrap_or(1);
    let g = graph(cfg, Some(n + i * m))?;
    let mode = mode(cfg, "exact")?;
    let params = edge_params(cfg, &g, cfg.p)?;
    let q = q_iterated(&g, &params, n, m, i, &mode)?;
    let f = perclab::report::fmt_f64;
    let mut table = String::from("edge,radius,lo,hi,p,q,q_lo,q_hi\n");
    let mut items = Vec::new();
    for (e, edge) in g.edges().iter().enumerate() {
        let entry = q.entry(e);
        table.push_str(&format!(
            "{e},{},{},{},{},{},{},{}\n",
            edge.radius,
            edge.lo,
            edge.hi,
            f(params.get(e)),
            f(entry.value),
            f(entry.lo),
            f(entry.hi)
        ));
        items.push(format!(
            "{{\"edge\":{e},\"radius\":{},\"lo\":{},\"hi\":{},\"p\":{},\"q\":{},\"q_lo\":{},\"q_hi\":{}}}",
            edge.radius,
            edge.lo,
            edge.hi,
            f(params.get(e)),
            f(entry.value),
            f(entry.lo),
            f(entry.hi)
        ));
    }
    Ok(Outcome {
        csv: table,
        json: json_array(items),
        text: None,
        verdict: None,
    })
}

fn couple(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (n, m) = (need(cfg.n, "--n")?, need(cfg.m, "--m")?);
    let g = graph(cfg, Some(n + m))?;
    let mode = mode(cfg, "exact")?;
    let params = edge_params(cfg, &g, cfg.p)?;
    let opts = OracleOptions::with_cap(cfg.cap.unwrap_or(DEFAULT_CAP));
    let problem = CouplingProblem::with_options(&g, params, n, m, opts)?;
    match mode {
        Mode::Exact { .. } => {
            let tree = enumerate_decision_tree(&problem)?;
            let dominance = check_threshold_dominance_on(&problem, &tree)?;
            let tv = x_law_total_variation(&problem, &tree)?;
            let total = tree.total_probability();
            let inst = problem.instance();
            let law = VerificationReport::decide(
                "x-law-tv",
                inst.clone(),
                Relation::Le,
                Interval::point(tv),
                Interval::point(0.0),
                verify::SLACK,
                &mode,
            );
            let mass = VerificationReport::decide(
                "tree-total",
                inst,
                Relation::Le,
                Interval::point((total - 1.0).abs()),
                Interval::point(0.0),
                verify::SLACK,
                &mode,
            )
            .with_extra("total", total)
            .with_extra("leaves", tree.leaves.len() as f64);
            Ok(reports(
                &[dominance, law, mass],
                Some(("tree.txt".into(), tree.dump(&problem))),
            ))
        }
        Mode::MonteCarlo { samples, seed, .. } => {
            let summary = sample_summary(&problem, seed, samples)?;
            let transcript = sample_coupling(&problem, seed, cfg.transcript.unwrap_or(0))?;
            let mut report = VerificationReport::decide(
                "coupling-order",
                problem.instance(),
                Relation::Le,
                Interval::point(summary.violating_runs as f64),
                Interval::point(0.0),
                0.0,
                &mode,
            )
            .with_note("lhs = runs with Y > X somewhere on F")
            .with_extra("runs", summary.runs as f64);
            for e in 0..problem.num_e() {
                report = report
                    .with_extra(&format!("x_open_{e:03}"), summary.x_open[e] as f64)
                    .with_extra(&format!("y_open_{e:03}"), summary.y_open[e] as f64);
            }
            Ok(reports(
                &[report],
                Some(("transcript.txt".into(), transcript.dump())),
            ))
        }
    }
}

fn run_verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let check = cfg
        .check
        .as_deref()
        .ok_or_else(|| usage(format!("--check is required; one of {}", CHECKS.join(", "))))?;
    if !CHECKS.contains(&check) {
        return Err(usage(format!(
            "unknown check `{check}`; one of {}",
            CHECKS.join(", ")
        )));
    }
    let mode = mode(cfg, "exact")?;
    if check == "elementary" {
        let grid = verify::elementary_grid(
            cfg.grid_x.unwrap_or(500),
            cfg.grid_a.unwrap_or(500),
            cfg.a_max.unwrap_or(10.0),
        );
        return Ok(reports(&[verify::check_elementary_ineq(&grid)?], None));
    }
    let g = graph(cfg, None)?;
    let uses_params = matches!(
        check,
        "prop-coupl" | "sqrt-step" | "ind-sigma" | "threshold-dominance"
    );
    let ps = if uses_params && cfg.params.is_some() {
        vec![f64::NAN]
    } else {
        p_values(cfg)?
    };
    let variant: Variant = cfg.variant.as_deref().unwrap_or("standard").parse()?;
    let mut out = Vec::new();
    for p in ps {
        let n = || need(cfg.n, "--n");
        let m = || need(cfg.m, "--m");
        let i = || need(cfg.i, "--i");
        let report = match check {
            "cor-homog" => verify::verify_cor_homog(&g, p, n()?, m()?, &mode)?,
            "prop-coupl" => {
                verify::verify_prop_coupl(&g, &edge_params(cfg, &g, Some(p))?, n()?, m()?, &mode)?
            }
            "lem-prod" => verify::verify_lem_prod(&g, p, m()?, i()?, &mode)?,
            "summability" => {
                verify::verify_summability(&g, p, n()?, cfg.floor.unwrap_or(0.1), &mode)?
            }
            "sqrt-step" => {
                verify::verify_sqrt_step(&g, &edge_params(cfg, &g, Some(p))?, n()?, m()?, &mode)?
            }
            "ind-sigma" => verify::verify_ind_sigma(
                &g,
                &edge_params(cfg, &g, Some(p))?,
                n()?,
                m()?,
                i()?,
                &mode,
            )?,
            "gamma-suff" => verify::verify_gamma_suff(&g, p, n()?, m()?, i()?, &mode)?,
            "lem-lower" => verify::verify_lem_lower(&g, p, n()?, m()?, i()?, &mode)?,
            "thm-quant" => verify::verify_thm_quant(&g, p, n()?, m()?, variant, &mode)?,
            "sharpness" => {
                let ns = match &cfg.n_grid {
                    Some(grid) => grid.clone(),
                    None => vec![n()?],
                };
                let report = verify::verify_sharpness_consequences(&g, p, cfg.pc_ref, &ns, &mode)
                    .map_err(|e| match e {
                    perclab::Error::MissingCriticalPoint => {
                        usage("--pc-ref is required for the sharpness check")
                    }
                    other => other.into(),
                })?;
                match &cfg.pc_ref_provenance {
                    Some(src) => report.with_note(format!("pc_ref source: {src}")),
                    None => report,
                }
            }
            "threshold-dominance" => verify::verify_threshold_dominance(
                &g,
                &edge_params(cfg, &g, Some(p))?,
                n()?,
                m()?,
                &mode,
            )?,
            _ => unreachable!("checked against CHECKS"),
        };
        out.push(report);
    }
    Ok(reports(&out, None))
}

fn scan(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mode = mode(cfg, "mc")?;
    let mut rows = Vec::new();
    match (&cfg.p_grid, &cfg.n_grid) {
        (Some(ps), _) => {
            if ps.is_empty() {
                return Err(usage("--p-grid is empty"));
            }
            let n = need(cfg.n, "--n")?;
            let g = graph(cfg, Some(n))?;
            for &p in ps {
                let theta = verify::theta_params(&g, &homogeneous(&g, p)?, n, &mode)?;
                rows.push(Measurement::new(
                    "theta",
                    Instance::of(&g).n(n).p(p),
                    theta,
                    &mode,
                ));
            }
        }
        (None, Some(ns)) => {
            let n_max = *ns.iter().max().ok_or_else(|| usage("--n-grid is empty"))?;
            let p = need(cfg.p, "--p")?;
            let g = graph(cfg, Some(n_max))?;
            let params = homogeneous(&g, p)?;
            for &n in ns {
                let theta = verify::theta_params(&g, &params, n, &mode)?;
                rows.push(Measurement::new(
                    "theta",
                    Instance::of(&g).n(n).p(p),
                    theta,
                    &mode,
                ));
            }
        }
        (None, None) => return Err(usage("scan needs --p-grid or --n-grid")),
    }
    Ok(measurements(&rows))
}

fn run_selftest(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut outcomes = selftest::run_exact_suite();
    if cfg.full == Some(true) {
        let seed = cfg.seed.unwrap_or(1);
        outcomes.push(selftest::thm_quant_statistical(
            cfg.samples.unwrap_or(100_000),
            seed,
        ));
        outcomes.push(selftest::sharpness_statistical(
            20_000,
            cfg.samples.unwrap_or(100_000),
            seed,
        ));
        outcomes.sort_by_key(|o| o.id);
    }
    let mut table = String::from("criterion,name,result\n");
    let mut text = String::new();
    let mut items = Vec::new();
    for o in &outcomes {
        let result = if o.passed { "pass" } else { "fail" };
        table.push_str(&format!(
            "{},{},{}\n",
            o.id,
            o.name.replace(',', ";"),
            result
        ));
        text.push_str(&o.line());
        text.push('\n');
        items.push(
            json!({ "criterion": o.id, "name": o.name, "passed": o.passed, "detail": o.detail })
                .to_string(),
        );
    }
    let all = outcomes.iter().all(|o| o.passed);
    Ok(Outcome {
        csv: table,
        json: json_array(items),
        text: Some(("selftest.txt".into(), text)),
        verdict: Some(if all { Verdict::Pass } else { Verdict::Fail }),
    })
}
