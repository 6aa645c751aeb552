//! Exact probabilities under the product measure `P_p` by full enumeration.
//!
//! The enumerated support is split into a low and a high half. Both halves
//! are walked in Gray-code order, so each step flips one edge, and the weight
//! of a configuration is the product of two precomputed half-weights. Partial
//! sums are accumulated per high-half state with compensated summation and
//! combined in index order, which keeps results bit-identical however the
//! work is scheduled.
//!
//! Top-level conjunctions of fixed edge states are peeled off before
//! enumeration and contribute their probability as a factor, so conditioning
//! on a revealed history only enumerates the unrevealed edges.

use rayon::prelude::*;

use crate::connectivity::Explorer;
use crate::error::{Error, Result};
use crate::lattice::BallGraph;
use crate::params::{Configuration, EdgeParams};

/// Default bound on the number of enumerated edges.
pub const DEFAULT_CAP: usize = 24;

const LOW_BITS: usize = 12;
const FLIP_SCAN_MAX: usize = 12;

/// An event decidable from a configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum EventSpec {
    Always,
    /// `{0 <-> S_radius}`.
    OriginReaches {
        radius: usize,
    },
    /// `{0 not connected to S_radius}`.
    OriginAvoids {
        radius: usize,
    },
    VertexReaches {
        vertex: usize,
        radius: usize,
    },
    VertexAvoids {
        vertex: usize,
        radius: usize,
    },
    /// `vertex` reaches `S_radius` along a path that uses no edge of `forbidden`.
    ReachesAvoiding {
        vertex: usize,
        radius: usize,
        forbidden: Vec<usize>,
    },
    EdgeOpen(usize),
    /// Conjunction of fixed edge states.
    EdgeStates(Vec<(usize, bool)>),
    /// `edge` is pivotal for `{0 not connected to S_radius}`.
    Pivotal {
        edge: usize,
        radius: usize,
    },
    Not(Box<EventSpec>),
    And(Vec<EventSpec>),
}

impl EventSpec {
    pub fn and(parts: impl IntoIterator<Item = EventSpec>) -> Self {
        EventSpec::And(parts.into_iter().collect())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        EventSpec::Not(Box::new(self))
    }

    pub fn holds(&self, g: &BallGraph, config: &Configuration, explorer: &mut Explorer) -> bool {
        match self {
            EventSpec::Always => true,
            EventSpec::OriginReaches { radius } => {
                explorer.reaches(g, g.origin(), *radius, |e| config.get(e))
            }
            EventSpec::OriginAvoids { radius } => {
                !explorer.reaches(g, g.origin(), *radius, |e| config.get(e))
            }
            EventSpec::VertexReaches { vertex, radius } => {
                explorer.reaches(g, *vertex, *radius, |e| config.get(e))
            }
            EventSpec::VertexAvoids { vertex, radius } => {
                !explorer.reaches(g, *vertex, *radius, |e| config.get(e))
            }
            EventSpec::ReachesAvoiding {
                vertex,
                radius,
                forbidden,
            } => explorer.reaches(g, *vertex, *radius, |e| {
                config.get(e) && !forbidden.contains(&e)
            }),
            EventSpec::EdgeOpen(e) => config.get(*e),
            EventSpec::EdgeStates(states) => states.iter().all(|&(e, s)| config.get(e) == s),
            EventSpec::Pivotal { edge, radius } => {
                let o = g.origin();
                let opened = explorer.reaches(g, o, *radius, |f| f == *edge || config.get(f));
                let closed = explorer.reaches(g, o, *radius, |f| f != *edge && config.get(f));
                opened != closed
            }
            EventSpec::Not(inner) => !inner.holds(g, config, explorer),
            EventSpec::And(parts) => parts.iter().all(|p| p.holds(g, config, explorer)),
        }
    }

    /// Splits top-level fixed edge states from the rest of the event.
    fn peel(&self, literals: &mut Vec<(usize, bool)>, rest: &mut Vec<EventSpec>) {
        match self {
            EventSpec::Always => {}
            EventSpec::EdgeOpen(e) => literals.push((*e, true)),
            EventSpec::EdgeStates(states) => literals.extend_from_slice(states),
            EventSpec::Not(inner) if matches!(**inner, EventSpec::EdgeOpen(_)) => {
                if let EventSpec::EdgeOpen(e) = **inner {
                    literals.push((e, false));
                }
            }
            EventSpec::And(parts) => parts.iter().for_each(|p| p.peel(literals, rest)),
            other => rest.push(other.clone()),
        }
    }
}

/// Cap and debug switches for the oracle.
#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub cap: usize,
    /// Measurability and monotonicity scans on small supports.
    pub debug_checks: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            debug_checks: cfg!(debug_assertions),
        }
    }
}

impl OracleOptions {
    pub fn with_cap(cap: usize) -> Self {
        Self {
            cap,
            ..Self::default()
        }
    }
}

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.carry
    }
}

fn half_weights(params: &EdgeParams, edges: &[usize]) -> Vec<f64> {
    (0..1usize << edges.len())
        .map(|state| {
            edges
                .iter()
                .enumerate()
                .map(|(bit, &e)| {
                    if state >> bit & 1 == 1 {
                        params.get(e)
                    } else {
                        1.0 - params.get(e)
                    }
                })
                .product()
        })
        .collect()
}

/// `sum_x P(x) f(x)` over all states `x` of `free`, other edges as in `base`.
fn enumerate<F>(
    g: &BallGraph,
    params: &EdgeParams,
    free: &[usize],
    base: &Configuration,
    f: F,
) -> f64
where
    F: Fn(&Configuration, &mut Explorer) -> f64 + Sync,
{
    let low_len = free.len().min(LOW_BITS);
    let (low, high) = free.split_at(low_len);
    let w_low = half_weights(params, low);
    let w_high = half_weights(params, high);
    let chunk = |explorer: &mut Explorer, h: usize| -> f64 {
        let hs = h ^ (h >> 1);
        let mut config = base.clone();
        for (bit, &e) in high.iter().enumerate() {
            config.set(e, hs >> bit & 1 == 1);
        }
        let mut acc = CompensatedSum::default();
        for t in 0..w_low.len() {
            if t > 0 {
                config.flip(low[t.trailing_zeros() as usize]);
            }
            let w = w_low[t ^ (t >> 1)] * w_high[hs];
            if w != 0.0 {
                let v = f(&config, explorer);
                if v != 0.0 {
                    acc.add(w * v);
                }
            }
        }
        acc.total()
    };
    let partials: Vec<f64> = if w_high.len() * w_low.len() >= 1 << 14 {
        (0..w_high.len())
            .into_par_iter()
            .map_init(|| Explorer::new(g), |ex, h| chunk(ex, h))
            .collect()
    } else {
        let mut ex = Explorer::new(g);
        (0..w_high.len()).map(|h| chunk(&mut ex, h)).collect()
    };
    let mut total = CompensatedSum::default();
    partials.into_iter().for_each(|x| total.add(x));
    total.total()
}

fn normalized_support(g: &BallGraph, support: &[usize]) -> Result<Vec<usize>> {
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&e| e >= g.num_edges()) {
        return Err(Error::InvalidArgument(format!(
            "edge {bad} is not an edge of the ball"
        )));
    }
    Ok(s)
}

/// `P_p[event]`, enumerating the states of `support` (all other edges closed).
pub fn exact_prob(
    g: &BallGraph,
    params: &EdgeParams,
    event: &EventSpec,
    support: &[usize],
) -> Result<f64> {
    exact_prob_with(&OracleOptions::default(), g, params, event, support)
}

pub fn exact_prob_with(
    opts: &OracleOptions,
    g: &BallGraph,
    params: &EdgeParams,
    event: &EventSpec,
    support: &[usize],
) -> Result<f64> {
    if params.len() != g.num_edges() {
        return Err(Error::LengthMismatch {
            expected: g.num_edges(),
            got: params.len(),
        });
    }
    let support = normalized_support(g, support)?;
    let mut literals = Vec::new();
    let mut rest = Vec::new();
    event.peel(&mut literals, &mut rest);
    literals.sort_unstable();
    literals.dedup();
    if literals.windows(2).any(|w| w[0].0 == w[1].0) {
        return Ok(0.0);
    }
    if let Some(&(bad, _)) = literals.iter().find(|(e, _)| *e >= g.num_edges()) {
        return Err(Error::InvalidArgument(format!(
            "edge {bad} is not an edge of the ball"
        )));
    }
    let factor: f64 = literals
        .iter()
        .map(|&(e, s)| {
            if s {
                params.get(e)
            } else {
                1.0 - params.get(e)
            }
        })
        .product();
    let free: Vec<usize> = support
        .iter()
        .copied()
        .filter(|e| literals.binary_search_by_key(e, |l| l.0).is_err())
        .collect();
    if free.len() > opts.cap {
        return Err(Error::CapExceeded {
            size: free.len(),
            cap: opts.cap,
        });
    }
    if factor == 0.0 {
        return Ok(0.0);
    }
    let mut base = Configuration::closed(g.num_edges());
    for &(e, s) in &literals {
        base.set(e, s);
    }
    let residual = EventSpec::And(rest);

    if opts.debug_checks && support.len() <= 16 {
        scan_measurability(g, &residual, &free, &base, &support, &literals)?;
    }
    let sum = enumerate(g, params, &free, &base, |c, ex| {
        residual.holds(g, c, ex) as u8 as f64
    });
    Ok(factor * sum)
}

/// Compares every state of the free edges against the same state with all
/// edges outside the support opened.
fn scan_measurability(
    g: &BallGraph,
    event: &EventSpec,
    free: &[usize],
    base: &Configuration,
    support: &[usize],
    literals: &[(usize, bool)],
) -> Result<()> {
    let outside: Vec<usize> = (0..g.num_edges())
        .filter(|e| {
            support.binary_search(e).is_err() && literals.binary_search_by_key(e, |l| l.0).is_err()
        })
        .collect();
    if outside.is_empty() {
        return Ok(());
    }
    let mut explorer = Explorer::new(g);
    let mut config = base.clone();
    for state in 0..1usize << free.len() {
        for (bit, &e) in free.iter().enumerate() {
            config.set(e, state >> bit & 1 == 1);
        }
        let mut alt = config.clone();
        for &e in &outside {
            alt.set(e, true);
        }
        if event.holds(g, &config, &mut explorer) != event.holds(g, &alt, &mut explorer) {
            let culprit = outside
                .iter()
                .copied()
                .find(|&e| {
                    let mut single = config.clone();
                    single.set(e, true);
                    event.holds(g, &single, &mut explorer) != event.holds(g, &config, &mut explorer)
                })
                .unwrap_or(outside[0]);
            return Err(Error::NotMeasurable { edge: culprit });
        }
    }
    Ok(())
}

/// `P_p[target | given]`.
pub fn conditional_prob(
    g: &BallGraph,
    params: &EdgeParams,
    target: &EventSpec,
    given: &EventSpec,
    support: &[usize],
) -> Result<f64> {
    conditional_prob_with(&OracleOptions::default(), g, params, target, given, support)
}

pub fn conditional_prob_with(
    opts: &OracleOptions,
    g: &BallGraph,
    params: &EdgeParams,
    target: &EventSpec,
    given: &EventSpec,
    support: &[usize],
) -> Result<f64> {
    let denom = exact_prob_with(opts, g, params, given, support)?;
    if denom <= 0.0 {
        return Err(Error::NullConditioning);
    }
    let joint = exact_prob_with(
        opts,
        g,
        params,
        &EventSpec::and([target.clone(), given.clone()]),
        support,
    )?;
    Ok((joint / denom).min(1.0))
}

/// `P(inc1 and inc2) - P(inc1) P(inc2)` for increasing events.
pub fn fkg_covariance(
    g: &BallGraph,
    params: &EdgeParams,
    inc1: &EventSpec,
    inc2: &EventSpec,
    support: &[usize],
) -> Result<f64> {
    fkg_covariance_with(&OracleOptions::default(), g, params, inc1, inc2, support)
}

pub fn fkg_covariance_with(
    opts: &OracleOptions,
    g: &BallGraph,
    params: &EdgeParams,
    inc1: &EventSpec,
    inc2: &EventSpec,
    support: &[usize],
) -> Result<f64> {
    let support = normalized_support(g, support)?;
    if opts.debug_checks && support.len() <= FLIP_SCAN_MAX {
        for ev in [inc1, inc2] {
            if !is_increasing_on(g, ev, &support) {
                return Err(Error::InvalidArgument(format!(
                    "event {ev:?} is not increasing"
                )));
            }
        }
    }
    let a = exact_prob_with(opts, g, params, inc1, &support)?;
    let b = exact_prob_with(opts, g, params, inc2, &support)?;
    let ab = exact_prob_with(
        opts,
        g,
        params,
        &EventSpec::and([inc1.clone(), inc2.clone()]),
        &support,
    )?;
    Ok(ab - a * b)
}

/// Exhaustive monotone flip scan: opening any closed support edge never
/// destroys the event.
pub fn is_increasing_on(g: &BallGraph, event: &EventSpec, support: &[usize]) -> bool {
    let mut explorer = Explorer::new(g);
    let mut config = Configuration::closed(g.num_edges());
    for state in 0..1usize << support.len() {
        for (bit, &e) in support.iter().enumerate() {
            config.set(e, state >> bit & 1 == 1);
        }
        if !event.holds(g, &config, &mut explorer) {
            continue;
        }
        for &e in support {
            if !config.get(e) {
                config.set(e, true);
                let still = event.holds(g, &config, &mut explorer);
                config.set(e, false);
                if !still {
                    return false;
                }
            }
        }
    }
    true
}

/// Exact `pi_n(p) = P_p[0 not connected to S_n]`, enumerating `E_n`.
pub fn pi_exact(g: &BallGraph, params: &EdgeParams, n: usize, opts: &OracleOptions) -> Result<f64> {
    let support: Vec<usize> = g.edges_within(n)?.collect();
    exact_prob_with(
        opts,
        g,
        params,
        &EventSpec::OriginAvoids { radius: n },
        &support,
    )
}

/// Exact `P_p[v not connected to S_r]` on the whole ball.
pub fn vertex_avoid_exact(
    g: &BallGraph,
    params: &EdgeParams,
    v: usize,
    r: usize,
    opts: &OracleOptions,
) -> Result<f64> {
    g.sphere_range(r)?;
    if v == g.origin() {
        return pi_exact(g, params, r, opts);
    }
    let support: Vec<usize> = (0..g.num_edges()).collect();
    exact_prob_with(
        opts,
        g,
        params,
        &EventSpec::VertexAvoids {
            vertex: v,
            radius: r,
        },
        &support,
    )
}
