//! Sequential coupling of `mu_p = P_p[. | A]`, `A = {0 not connected to S_{n+m}}`,
//! with the product measure of parameters `q_n^m(p)` on `E = E_{n+m}`.
//!
//! Both configurations are driven by the same uniforms `U_e`. `Y` opens `e`
//! iff `U_e <= q_e`. `X` reveals edges one at a time: the next edge is the
//! canonical-first unrevealed edge of `E` touching the open cluster of the
//! origin among revealed edges, or the canonical-first unrevealed edge if the
//! cluster has no unrevealed boundary. Edge `e_k` is opened iff `U_{e_k}` is
//! at most `mu_p[omega_{e_k} = 1 | revealed history]`, computed exactly.
//! On `F = E_n` this yields `X >= Y` pointwise.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::connectivity::Explorer;
use crate::error::{Error, Result};
use crate::exact::{conditional_prob_with, exact_prob_with, EventSpec, OracleOptions};
use crate::interval::Interval;
use crate::lattice::BallGraph;
use crate::mode::Mode;
use crate::params::{Configuration, EdgeParams, UniformStream};
use crate::qmap::q_map;
use crate::report::{fmt_f64, Instance, Relation, Verdict, VerificationReport};

/// Largest `|E|` for which the full decision tree is materialised.
pub const TREE_EDGE_CAP: usize = 20;

const SLACK: f64 = 1e-10;

/// Revealed history: `(edge, open)` in reveal order.
pub type History = [(usize, bool)];

#[derive(Clone, Debug)]
pub struct CouplingProblem<'g> {
    graph: &'g BallGraph,
    params: EdgeParams,
    n: usize,
    m: usize,
    num_e: usize,
    num_f: usize,
    q: EdgeParams,
    pi: Vec<f64>,
    opts: OracleOptions,
}

impl<'g> CouplingProblem<'g> {
    pub fn new(g: &'g BallGraph, params: EdgeParams, n: usize, m: usize) -> Result<Self> {
        Self::with_options(g, params, n, m, OracleOptions::default())
    }

    pub fn with_options(
        g: &'g BallGraph,
        params: EdgeParams,
        n: usize,
        m: usize,
        opts: OracleOptions,
    ) -> Result<Self> {
        if n < 1 || m < 1 {
            return Err(Error::InvalidArgument("n and m must be at least 1".into()));
        }
        if params.len() != g.num_edges() {
            return Err(Error::LengthMismatch {
                expected: g.num_edges(),
                got: params.len(),
            });
        }
        let num_e = g.num_edges_within(n + m)?;
        let num_f = g.num_edges_within(n)?;
        params.check_conditioning_domain(0..num_e)?;
        let cap = opts.cap.min(63);
        if num_e > cap {
            return Err(Error::CapExceeded { size: num_e, cap });
        }
        let q = q_map(g, &params, n, m, &Mode::Exact { cap: opts.cap })?.point;
        let pi = (0..num_f).map(|e| q.get(e) / params.get(e)).collect();
        Ok(Self {
            graph: g,
            params,
            n,
            m,
            num_e,
            num_f,
            q,
            pi,
            opts,
        })
    }

    pub fn graph(&self) -> &'g BallGraph {
        self.graph
    }

    pub fn params(&self) -> &EdgeParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `|E|`; edges of `E` are `0..num_e()`.
    pub fn num_e(&self) -> usize {
        self.num_e
    }

    /// `|F|`; edges of `F` are `0..num_f()`.
    pub fn num_f(&self) -> usize {
        self.num_f
    }

    pub fn q(&self) -> &EdgeParams {
        &self.q
    }

    /// `pi_{n+m}(e, p)` for `e` in `F`.
    pub fn pi_edge(&self, e: usize) -> f64 {
        self.pi[e]
    }

    pub fn event_a(&self) -> EventSpec {
        EventSpec::OriginAvoids {
            radius: self.n + self.m,
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.num_e).collect()
    }

    pub fn options(&self) -> &OracleOptions {
        &self.opts
    }

    pub fn instance(&self) -> Instance {
        let inst = Instance::of(self.graph).n(self.n).m(self.m);
        let first = self.params.get(0);
        if (0..self.num_e).all(|e| self.params.get(e) == first) {
            inst.p(first)
        } else {
            inst.params("inhomogeneous")
        }
    }

    fn masks(&self, history: &History) -> Result<(u64, u64)> {
        let (mut revealed, mut open) = (0u64, 0u64);
        for &(e, s) in history {
            if e >= self.num_e {
                return Err(Error::InvalidHistory(format!("edge {e} is not in E")));
            }
            if revealed >> e & 1 == 1 {
                return Err(Error::InvalidHistory(format!("edge {e} revealed twice")));
            }
            revealed |= 1 << e;
            open |= (s as u64) << e;
        }
        Ok((revealed, open))
    }

    /// Next edge and whether it touches the origin's revealed open cluster.
    fn next_from_masks(
        &self,
        revealed: u64,
        open: u64,
        explorer: &mut Explorer,
    ) -> Option<(usize, bool)> {
        let g = self.graph;
        explorer.mark_cluster(g, g.origin(), |e| e < self.num_e && open >> e & 1 == 1);
        let unrevealed = || (0..self.num_e).filter(|&e| revealed >> e & 1 == 0);
        unrevealed()
            .find(|&e| explorer.in_cluster(g.edge(e).lo) || explorer.in_cluster(g.edge(e).hi))
            .map(|e| (e, true))
            .or_else(|| unrevealed().next().map(|e| (e, false)))
    }

    /// The edge revealed after `history`.
    pub fn next_edge(&self, history: &History) -> Result<usize> {
        let (revealed, open) = self.masks(history)?;
        self.next_from_masks(revealed, open, &mut Explorer::new(self.graph))
            .map(|(e, _)| e)
            .ok_or(Error::HistoryExhausted)
    }

    /// `mu_p[omega_e = 1 | history]`, or `None` if the history has probability zero under `mu_p`.
    pub fn threshold(&self, history: &History, e: usize) -> Result<Option<f64>> {
        let given = EventSpec::and([self.event_a(), EventSpec::EdgeStates(history.to_vec())]);
        match conditional_prob_with(
            &self.opts,
            self.graph,
            &self.params,
            &EventSpec::EdgeOpen(e),
            &given,
            &self.support(),
        ) {
            Ok(v) => Ok(Some(v)),
            Err(Error::NullConditioning) => Ok(None),
            Err(other) => Err(other),
        }
    }

    fn history_event(&self, history: &History) -> EventSpec {
        EventSpec::and([self.event_a(), EventSpec::EdgeStates(history.to_vec())])
    }

    /// `P_p[e not pivotal for A | A, history]`.
    pub fn not_pivotal_given(&self, history: &History, e: usize) -> Result<f64> {
        let target = EventSpec::Pivotal {
            edge: e,
            radius: self.n + self.m,
        }
        .not();
        conditional_prob_with(
            &self.opts,
            self.graph,
            &self.params,
            &target,
            &self.history_event(history),
            &self.support(),
        )
    }
}

/// One run of the coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTranscript {
    pub seed: u64,
    pub index: u64,
    /// `U_e` for `e` in `E`.
    pub uniforms: Vec<f64>,
    /// Reveal order `e_1, ..., e_N`.
    pub order: Vec<usize>,
    pub x: Configuration,
    pub y: Configuration,
    /// `thresholds[k]` is the conditional probability used at step `k + 1`.
    pub thresholds: Vec<f64>,
    /// Whether step `k + 1` revealed an edge touching the origin's cluster.
    pub frontier: Vec<bool>,
    /// Last 1-based step that revealed a frontier edge.
    pub tau: usize,
}

impl CouplingTranscript {
    /// Edges of `F` with `Y = 1` and `X = 0`.
    pub fn violations(&self, num_f: usize) -> usize {
        (0..num_f)
            .filter(|&e| self.y.get(e) && !self.x.get(e))
            .count()
    }

    /// Text dump: one line per step with edge, threshold, `U`, `X`, `Y`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# transcript seed={} index={} edges={} tau={}",
            self.seed,
            self.index,
            self.order.len(),
            self.tau
        );
        let _ = writeln!(out, "k,edge,threshold,u,x,y");
        for (k, &e) in self.order.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                k + 1,
                e,
                fmt_f64(self.thresholds[k]),
                fmt_f64(self.uniforms[e]),
                self.x.get(e) as u8,
                self.y.get(e) as u8
            );
        }
        out
    }
}

/// Sampler with per-node memoisation of thresholds.
pub struct CouplingSampler<'p, 'g> {
    problem: &'p CouplingProblem<'g>,
    memo: HashMap<(u64, u64), Option<f64>>,
    explorer: Explorer,
    history: Vec<(usize, bool)>,
}

impl<'p, 'g> CouplingSampler<'p, 'g> {
    pub fn new(problem: &'p CouplingProblem<'g>) -> Self {
        Self {
            problem,
            memo: HashMap::new(),
            explorer: Explorer::new(problem.graph),
            history: Vec::new(),
        }
    }

    pub fn sample(&mut self, seed: u64, index: u64) -> Result<CouplingTranscript> {
        let pb = self.problem;
        let n_e = pb.num_e;
        let uniforms = UniformStream::new(seed, index).take(n_e);
        let mut y = Configuration::closed(n_e);
        for (e, &u) in uniforms.iter().enumerate() {
            y.set(e, u <= pb.q.get(e));
        }
        let mut x = Configuration::closed(n_e);
        let (mut revealed, mut open) = (0u64, 0u64);
        let mut order = Vec::with_capacity(n_e);
        let mut thresholds = Vec::with_capacity(n_e);
        let mut frontier = Vec::with_capacity(n_e);
        self.history.clear();
        for step in 1..=n_e {
            let (e, on_frontier) = pb
                .next_from_masks(revealed, open, &mut self.explorer)
                .expect("edges remain");
            let threshold = match self.memo.get(&(revealed, open)) {
                Some(&t) => t,
                None => {
                    let t = pb.threshold(&self.history, e)?;
                    self.memo.insert((revealed, open), t);
                    t
                }
            };
            let threshold = threshold.ok_or(Error::DegenerateConditioning { step })?;
            let bit = uniforms[e] <= threshold;
            if bit && threshold == 0.0 {
                return Err(Error::DegenerateConditioning { step });
            }
            x.set(e, bit);
            revealed |= 1 << e;
            open |= (bit as u64) << e;
            self.history.push((e, bit));
            order.push(e);
            thresholds.push(threshold);
            frontier.push(on_frontier);
        }
        let tau = frontier.iter().rposition(|&f| f).map_or(0, |k| k + 1);
        Ok(CouplingTranscript {
            seed,
            index,
            uniforms,
            order,
            x,
            y,
            thresholds,
            frontier,
            tau,
        })
    }
}

pub fn sample_coupling(
    problem: &CouplingProblem<'_>,
    seed: u64,
    index: u64,
) -> Result<CouplingTranscript> {
    CouplingSampler::new(problem).sample(seed, index)
}

/// Aggregate over many sampled transcripts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingSummary {
    pub runs: u64,
    /// Runs with at least one edge of `F` where `Y = 1 > X = 0`.
    pub violating_runs: u64,
    pub x_open: Vec<u64>,
    pub y_open: Vec<u64>,
}

impl CouplingSummary {
    fn empty(n_e: usize) -> Self {
        Self {
            runs: 0,
            violating_runs: 0,
            x_open: vec![0; n_e],
            y_open: vec![0; n_e],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.runs += other.runs;
        self.violating_runs += other.violating_runs;
        self.x_open
            .iter_mut()
            .zip(other.x_open)
            .for_each(|(a, b)| *a += b);
        self.y_open
            .iter_mut()
            .zip(other.y_open)
            .for_each(|(a, b)| *a += b);
        self
    }
}

/// Samples transcripts `0..runs` of `seed` in parallel and tallies them.
pub fn sample_summary(
    problem: &CouplingProblem<'_>,
    seed: u64,
    runs: u64,
) -> Result<CouplingSummary> {
    let n_e = problem.num_e;
    (0..runs)
        .into_par_iter()
        .map_init(
            || CouplingSampler::new(problem),
            |sampler, index| sampler.sample(seed, index),
        )
        .try_fold(
            || CouplingSummary::empty(n_e),
            |mut acc, t| {
                let t = t?;
                acc.runs += 1;
                acc.violating_runs += (t.violations(problem.num_f) > 0) as u64;
                for e in 0..n_e {
                    acc.x_open[e] += t.x.get(e) as u64;
                    acc.y_open[e] += t.y.get(e) as u64;
                }
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(|| CouplingSummary::empty(n_e), |a, b| Ok(a.merge(b)))
}

/// Internal node of the decision tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub history: Vec<(usize, bool)>,
    /// Edge revealed at this node.
    pub edge: usize,
    pub frontier: bool,
    /// `mu_p` probability of reaching this node.
    pub reach: f64,
    /// `None` on nodes of probability zero.
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub x: Configuration,
    pub order: Vec<usize>,
    pub probability: f64,
    pub thresholds: Vec<Option<f64>>,
    pub frontier: Vec<bool>,
    pub tau: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub leaves: Vec<Leaf>,
}

#[derive(Clone)]
struct Partial {
    history: Vec<(usize, bool)>,
    thresholds: Vec<Option<f64>>,
    frontier: Vec<bool>,
    reach: f64,
    revealed: u64,
    open: u64,
}

/// Walks the full decision tree level by level; children are listed closed first.
pub fn enumerate_decision_tree(problem: &CouplingProblem<'_>) -> Result<DecisionTree> {
    let n_e = problem.num_e;
    if n_e > TREE_EDGE_CAP {
        return Err(Error::CapExceeded {
            size: n_e,
            cap: TREE_EDGE_CAP,
        });
    }
    let mut level = vec![Partial {
        history: Vec::new(),
        thresholds: Vec::new(),
        frontier: Vec::new(),
        reach: 1.0,
        revealed: 0,
        open: 0,
    }];
    let mut nodes = Vec::with_capacity((1usize << n_e) - 1);
    for _ in 0..n_e {
        let expanded: Vec<(TreeNode, [Partial; 2])> = level
            .into_par_iter()
            .map_init(
                || Explorer::new(problem.graph),
                |explorer, part| {
                    let (e, frontier) = problem
                        .next_from_masks(part.revealed, part.open, explorer)
                        .expect("edges remain");
                    let threshold = if part.reach > 0.0 {
                        problem.threshold(&part.history, e)?
                    } else {
                        None
                    };
                    let t = threshold.unwrap_or(0.0);
                    let child = |open: bool| {
                        let mut c = part.clone();
                        c.history.push((e, open));
                        c.thresholds.push(threshold);
                        c.frontier.push(frontier);
                        c.reach = match threshold {
                            Some(_) if open => part.reach * t,
                            Some(_) => part.reach * (1.0 - t),
                            None => 0.0,
                        };
                        c.revealed |= 1 << e;
                        c.open |= (open as u64) << e;
                        c
                    };
                    let children = [child(false), child(true)];
                    let node = TreeNode {
                        history: part.history,
                        edge: e,
                        frontier,
                        reach: part.reach,
                        threshold,
                    };
                    Ok((node, children))
                },
            )
            .collect::<Result<_>>()?;
        level = Vec::with_capacity(expanded.len() * 2);
        for (node, children) in expanded {
            nodes.push(node);
            level.extend(children);
        }
    }
    let leaves = level
        .into_iter()
        .map(|p| {
            let mut x = Configuration::closed(n_e);
            for &(e, s) in &p.history {
                x.set(e, s);
            }
            let tau = p.frontier.iter().rposition(|&f| f).map_or(0, |k| k + 1);
            Leaf {
                x,
                order: p.history.iter().map(|h| h.0).collect(),
                probability: p.reach,
                thresholds: p.thresholds,
                frontier: p.frontier,
                tau,
            }
        })
        .collect();
    Ok(DecisionTree { nodes, leaves })
}

impl DecisionTree {
    pub fn total_probability(&self) -> f64 {
        self.leaves.iter().map(|l| l.probability).sum()
    }

    pub fn dump(&self, problem: &CouplingProblem<'_>) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# decision tree graph={} n={} m={} edges={} f_edges={} leaves={}",
            problem.graph.descriptor(),
            problem.n,
            problem.m,
            problem.num_e,
            problem.num_f,
            self.leaves.len()
        );
        let _ = writeln!(out, "leaf,probability,x,order,tau");
        for (j, leaf) in self.leaves.iter().enumerate() {
            let order: Vec<String> = leaf.order.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                j,
                fmt_f64(leaf.probability),
                leaf.x.to_bit_string(),
                order.join(" "),
                leaf.tau
            );
        }
        let _ = writeln!(out, "# total {}", fmt_f64(self.total_probability()));
        out
    }
}

/// Total variation between the leaf law of `X` and the exact `mu_p`.
pub fn x_law_total_variation(problem: &CouplingProblem<'_>, tree: &DecisionTree) -> Result<f64> {
    let g = problem.graph;
    let support = problem.support();
    let p_a = exact_prob_with(
        &problem.opts,
        g,
        &problem.params,
        &problem.event_a(),
        &support,
    )?;
    let mut seen = std::collections::HashSet::new();
    let diffs: Vec<f64> = tree
        .leaves
        .par_iter()
        .map(|leaf| {
            let states: Vec<(usize, bool)> =
                (0..problem.num_e).map(|e| (e, leaf.x.get(e))).collect();
            let joint = exact_prob_with(
                &problem.opts,
                g,
                &problem.params,
                &EventSpec::and([problem.event_a(), EventSpec::EdgeStates(states)]),
                &support,
            )?;
            Ok((leaf.probability - joint / p_a).abs())
        })
        .collect::<Result<_>>()?;
    for leaf in &tree.leaves {
        if !seen.insert(leaf.x.clone()) {
            return Err(Error::InvalidHistory(
                "two leaves share a configuration".into(),
            ));
        }
    }
    Ok(0.5 * diffs.iter().sum::<f64>())
}

struct NodeAudit {
    threshold_slack: f64,
    pivotal_slack: f64,
}

/// Checks at every reachable node revealing an edge of `F` that the threshold is
/// at least `q_e` and that `P[e not pivotal | A, history] >= pi_{n+m}(e, p)`.
pub fn check_threshold_dominance(problem: &CouplingProblem<'_>) -> Result<VerificationReport> {
    let tree = enumerate_decision_tree(problem)?;
    check_threshold_dominance_on(problem, &tree)
}

pub fn check_threshold_dominance_on(
    problem: &CouplingProblem<'_>,
    tree: &DecisionTree,
) -> Result<VerificationReport> {
    let reachable: Vec<&TreeNode> = tree.nodes.iter().filter(|nd| nd.reach > 0.0).collect();
    let audits: Vec<NodeAudit> = reachable
        .par_iter()
        .filter(|nd| nd.edge < problem.num_f)
        .map(|nd| {
            let threshold = nd.threshold.ok_or(Error::DegenerateConditioning {
                step: nd.history.len() + 1,
            })?;
            let not_piv = problem.not_pivotal_given(&nd.history, nd.edge)?;
            Ok(NodeAudit {
                threshold_slack: threshold - problem.q.get(nd.edge),
                pivotal_slack: not_piv - problem.pi[nd.edge],
            })
        })
        .collect::<Result<_>>()?;
    let min_threshold = audits
        .iter()
        .map(|a| a.threshold_slack)
        .fold(f64::INFINITY, f64::min);
    let min_pivotal = audits
        .iter()
        .map(|a| a.pivotal_slack)
        .fold(f64::INFINITY, f64::min);
    let mode = Mode::Exact {
        cap: problem.opts.cap,
    };
    let pivotal_verdict = if min_pivotal >= -SLACK {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(VerificationReport::decide(
        "threshold-dominance",
        problem.instance(),
        Relation::Ge,
        Interval::point(min_threshold),
        Interval::point(0.0),
        SLACK,
        &mode,
    )
    .require(pivotal_verdict, "pivotal form")
    .with_note("lhs = min over reachable F-nodes of threshold - q_e")
    .with_extra("nodes_checked", audits.len() as f64)
    .with_extra("reachable_nodes", reachable.len() as f64)
    .with_extra("min_pivotal_slack", min_pivotal))
}

/// Largest deviation, over reachable nodes, of
/// `P(omega_e = 1, A, H, e not pivotal)` from `p_e P(A, H, e not pivotal)`.
pub fn independence_audit(problem: &CouplingProblem<'_>, tree: &DecisionTree) -> Result<f64> {
    let g = problem.graph;
    let support = problem.support();
    let worst: Vec<f64> = tree
        .nodes
        .par_iter()
        .filter(|nd| nd.reach > 0.0)
        .map(|nd| {
            let not_piv = EventSpec::Pivotal {
                edge: nd.edge,
                radius: problem.n + problem.m,
            }
            .not();
            let base = EventSpec::and([problem.history_event(&nd.history), not_piv]);
            let with_open = EventSpec::and([base.clone(), EventSpec::EdgeOpen(nd.edge)]);
            let lhs = exact_prob_with(&problem.opts, g, &problem.params, &with_open, &support)?;
            let rest = exact_prob_with(&problem.opts, g, &problem.params, &base, &support)?;
            Ok((lhs - problem.params.get(nd.edge) * rest).abs())
        })
        .collect::<Result<_>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}
