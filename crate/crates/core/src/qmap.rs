//! The edge non-connection probability `pi_r(e, p)` and the parameter map
//! `q_n^m` with its iterates.
//!
//! `q_n^m(p)_e = p_e * pi_{n+m}(e, p)` on `E_n` and `p_e` elsewhere, where
//! `pi_r(e, p)` is the smaller of the two endpoint probabilities of not
//! reaching `S_r`. Endpoint events are evaluated on the whole ball `B_R`, so
//! exact mode needs every edge of the ball within the enumeration cap.
//!
//! In Monte Carlo mode results carry entrywise lower and upper bands; the map
//! is propagated through the bands using that `pi_r(e, .)` is decreasing in
//! the parameters.

use rayon::prelude::*;

use crate::connectivity::estimate_reach;
use crate::error::{Error, Result};
use crate::exact::vertex_avoid_exact;
use crate::interval::Interval;
use crate::lattice::BallGraph;
use crate::mode::Mode;
use crate::params::EdgeParams;

/// Parameters together with entrywise bounds. Exact results have
/// `lo == point == hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct MappedParams {
    pub point: EdgeParams,
    pub lo: EdgeParams,
    pub hi: EdgeParams,
}

impl MappedParams {
    pub fn exact(params: EdgeParams) -> Self {
        Self {
            lo: params.clone(),
            hi: params.clone(),
            point: params,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn entry(&self, e: usize) -> Interval {
        Interval::new(self.lo.get(e), self.point.get(e), self.hi.get(e))
    }

    /// Largest half-width over all entries.
    pub fn max_half_width(&self) -> f64 {
        (0..self.point.len())
            .map(|e| self.entry(e).half_width())
            .fold(0.0, f64::max)
    }
}

/// `P_p[v not connected to S_r]` on the whole ball.
pub fn vertex_avoidance(
    g: &BallGraph,
    params: &EdgeParams,
    v: usize,
    r: usize,
    mode: &Mode,
) -> Result<Interval> {
    match mode {
        Mode::Exact { .. } => Ok(Interval::point(vertex_avoid_exact(
            g,
            params,
            v,
            r,
            &mode.oracle(),
        )?)),
        Mode::MonteCarlo {
            samples,
            seed,
            level,
        } => Ok(estimate_reach(g, params, v, r, *samples, *seed, *level)?
            .complement()
            .into()),
    }
}

/// `pi_r(e, p)`: the smaller endpoint probability of not reaching `S_r`.
pub fn pi_edge(
    g: &BallGraph,
    params: &EdgeParams,
    e: usize,
    r: usize,
    mode: &Mode,
) -> Result<Interval> {
    if e >= g.num_edges() {
        return Err(Error::InvalidArgument(format!(
            "edge {e} is not an edge of the ball"
        )));
    }
    let edge = g.edge(e);
    let a = vertex_avoidance(g, params, edge.lo, r, mode)?;
    let b = vertex_avoidance(g, params, edge.hi, r, mode)?;
    Ok(a.min(b))
}

/// `pi_r(e, p)` for every edge of `E_n`, each distinct endpoint evaluated once.
fn pi_edges_within(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    r: usize,
    mode: &Mode,
) -> Result<Vec<Interval>> {
    let edges = g.edges_within(n)?;
    let mut vertices: Vec<usize> = edges
        .clone()
        .flat_map(|e| [g.edge(e).lo, g.edge(e).hi])
        .collect();
    vertices.sort_unstable();
    vertices.dedup();
    let values: Vec<Interval> = vertices
        .par_iter()
        .map(|&v| vertex_avoidance(g, params, v, r, mode))
        .collect::<Result<_>>()?;
    let lookup = |v: usize| values[vertices.binary_search(&v).expect("endpoint listed")];
    Ok(edges
        .map(|e| lookup(g.edge(e).lo).min(lookup(g.edge(e).hi)))
        .collect())
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

/// `q_n^m(p)`.
pub fn q_map(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    m: usize,
    mode: &Mode,
) -> Result<MappedParams> {
    q_map_band(g, &MappedParams::exact(params.clone()), n, m, mode)
}

/// `q_n^m` applied to a band of parameters: the lower output uses the lower
/// input entry and the multiplier at the upper input, and vice versa.
pub fn q_map_band(
    g: &BallGraph,
    input: &MappedParams,
    n: usize,
    m: usize,
    mode: &Mode,
) -> Result<MappedParams> {
    if n < 1 || m < 1 {
        return Err(Error::InvalidArgument("n and m must be at least 1".into()));
    }
    check_radius(g, n + m)?;
    if input.point.len() != g.num_edges() {
        return Err(Error::LengthMismatch {
            expected: g.num_edges(),
            got: input.point.len(),
        });
    }
    let at_point = pi_edges_within(g, &input.point, n, n + m, mode)?;
    let (at_hi, at_lo) = if input.is_exact() && input.lo == input.point {
        (at_point.clone(), at_point.clone())
    } else {
        (
            pi_edges_within(g, &input.hi, n, n + m, mode)?,
            pi_edges_within(g, &input.lo, n, n + m, mode)?,
        )
    };
    let mut point = input.point.as_slice().to_vec();
    let mut lo = input.lo.as_slice().to_vec();
    let mut hi = input.hi.as_slice().to_vec();
    for e in 0..at_point.len() {
        point[e] *= at_point[e].value;
        lo[e] *= at_hi[e].lo;
        hi[e] *= at_lo[e].hi;
    }
    Ok(MappedParams {
        point: EdgeParams::from_vec_unchecked(point),
        lo: EdgeParams::from_vec_unchecked(lo),
        hi: EdgeParams::from_vec_unchecked(hi),
    })
}

/// `q_n^{m,(i)} = q_{n+(i-1)m}^m o ... o q_{n+m}^m o q_n^m`; `i = 0` is the identity.
pub fn q_iterated(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    m: usize,
    i: usize,
    mode: &Mode,
) -> Result<MappedParams> {
    check_radius(g, n + i * m)?;
    let mut current = MappedParams::exact(params.clone());
    for j in 0..i {
        current = q_map_band(g, &current, n + j * m, m, mode)?;
    }
    Ok(current)
}
