//! Finite balls `B_R` around the origin of a vertex-transitive lattice.
//!
//! Two families are supported: the hypercubic lattice `Z^d` (graph distance is
//! the L1 norm) and the `k`-regular tree. Vertices are stored sorted by
//! `(distance to origin, coordinates)` so that every sphere `S_n` is a
//! contiguous index range and vertex `0` is the origin. Edges are stored in
//! canonical order `(edge radius, lower endpoint coordinates, upper endpoint
//! coordinates)`, which makes every `E_n` a prefix of the edge list.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default limit on the number of vertices in a ball.
pub const DEFAULT_VERTEX_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `Z^d` with nearest-neighbour edges.
    Hypercubic,
    /// The infinite `k`-regular tree.
    RegularTree,
}

impl Family {
    pub fn short_name(self) -> &'static str {
        match self {
            Family::Hypercubic => "zd",
            Family::RegularTree => "tree",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zd" | "hypercubic" | "hypercubic-Z^d" => Ok(Family::Hypercubic),
            "tree" | "regular-tree" | "regular-tree-k" => Ok(Family::RegularTree),
            other => Err(Error::InvalidLattice(format!(
                "unknown graph family `{other}`"
            ))),
        }
    }
}

/// An unordered edge `{lo, hi}` where `lo` precedes `hi` in coordinate order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub lo: usize,
    pub hi: usize,
    /// Smallest `r` with both endpoints in `B_r`.
    pub radius: usize,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.lo {
            self.hi
        } else {
            self.lo
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.lo == v || self.hi == v
    }
}

/// Immutable finite ball of a transitive lattice.
#[derive(Clone, Debug)]
pub struct BallGraph {
    family: Family,
    param: usize,
    radius: usize,
    stride: usize,
    coords: Vec<i32>,
    dist0: Vec<usize>,
    edges: Vec<Edge>,
    adj_offsets: Vec<usize>,
    adj: Vec<(usize, usize)>,
    sphere_offsets: Vec<usize>,
    edge_prefix: Vec<usize>,
}

/// Builds `B_radius` with the default vertex cap.
pub fn build_ball(family: Family, param: usize, radius: usize) -> Result<BallGraph> {
    build_ball_with_cap(family, param, radius, DEFAULT_VERTEX_CAP)
}

pub fn build_ball_with_cap(
    family: Family,
    param: usize,
    radius: usize,
    vertex_cap: usize,
) -> Result<BallGraph> {
    if radius < 1 {
        return Err(Error::InvalidLattice("radius must be at least 1".into()));
    }
    match family {
        Family::Hypercubic if param < 1 => {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()))
        }
        Family::RegularTree if param < 2 => {
            return Err(Error::InvalidLattice(
                "tree degree must be at least 2".into(),
            ))
        }
        _ => {}
    }
    let count = expected_vertex_count(family, param, radius);
    if count > vertex_cap as u128 {
        return Err(Error::VertexCapExceeded {
            count,
            cap: vertex_cap,
        });
    }
    let (stride, coords, dist0, parents) = match family {
        Family::Hypercubic => {
            let (stride, coords, dist0) = hypercubic_vertices(param, radius);
            (stride, coords, dist0, Vec::new())
        }
        Family::RegularTree => tree_vertices(param, radius),
    };
    let n_vertices = dist0.len();
    let coord_of = |v: usize| &coords[v * stride..(v + 1) * stride];

    let mut edges = match family {
        Family::Hypercubic => {
            let index: HashMap<&[i32], usize> = (0..n_vertices).map(|v| (coord_of(v), v)).collect();
            let mut edges = Vec::new();
            let mut shifted = vec![0i32; stride];
            for v in 0..n_vertices {
                for axis in 0..stride {
                    shifted.copy_from_slice(coord_of(v));
                    shifted[axis] += 1;
                    if let Some(&w) = index.get(shifted.as_slice()) {
                        edges.push(Edge {
                            lo: v,
                            hi: w,
                            radius: dist0[v].max(dist0[w]),
                        });
                    }
                }
            }
            edges
        }
        Family::RegularTree => (1..n_vertices)
            .map(|child| Edge {
                lo: parents[child],
                hi: child,
                radius: dist0[child],
            })
            .collect(),
    };
    edges.sort_by(|a, b| {
        a.radius
            .cmp(&b.radius)
            .then_with(|| coord_of(a.lo).cmp(coord_of(b.lo)))
            .then_with(|| coord_of(a.hi).cmp(coord_of(b.hi)))
    });

    let mut degree = vec![0usize; n_vertices];
    for e in &edges {
        degree[e.lo] += 1;
        degree[e.hi] += 1;
    }
    let mut adj_offsets = Vec::with_capacity(n_vertices + 1);
    adj_offsets.push(0);
    for d in &degree {
        adj_offsets.push(adj_offsets.last().unwrap() + d);
    }
    let mut fill = adj_offsets.clone();
    let mut adj = vec![(0, 0); adj_offsets[n_vertices]];
    for (idx, e) in edges.iter().enumerate() {
        adj[fill[e.lo]] = (e.hi, idx);
        fill[e.lo] += 1;
        adj[fill[e.hi]] = (e.lo, idx);
        fill[e.hi] += 1;
    }

    let mut sphere_offsets = vec![0usize; radius + 2];
    for &d in &dist0 {
        sphere_offsets[d + 1] += 1;
    }
    for r in 0..=radius {
        sphere_offsets[r + 1] += sphere_offsets[r];
    }
    let mut edge_prefix = vec![0usize; radius + 1];
    for e in &edges {
        edge_prefix[e.radius] += 1;
    }
    for r in 1..=radius {
        edge_prefix[r] += edge_prefix[r - 1];
    }

    Ok(BallGraph {
        family,
        param,
        radius,
        stride,
        coords,
        dist0,
        edges,
        adj_offsets,
        adj,
        sphere_offsets,
        edge_prefix,
    })
}

/// Number of vertices of `B_radius`, computed combinatorially.
pub fn expected_vertex_count(family: Family, param: usize, radius: usize) -> u128 {
    match family {
        // Points of Z^d with L1 norm <= R: sum_k 2^k C(d,k) C(R,k).
        Family::Hypercubic => {
            let mut total: u128 = 0;
            for k in 0..=param.min(radius) {
                let term = binomial(param, k)
                    .saturating_mul(binomial(radius, k))
                    .saturating_mul(1u128.checked_shl(k as u32).unwrap_or(u128::MAX));
                total = total.saturating_add(term);
            }
            total
        }
        Family::RegularTree => {
            let mut total: u128 = 1;
            let mut level: u128 = param as u128;
            for _ in 0..radius {
                total = total.saturating_add(level);
                level = level.saturating_mul(param as u128 - 1);
            }
            total
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn hypercubic_vertices(dim: usize, radius: usize) -> (usize, Vec<i32>, Vec<usize>) {
    let mut points: Vec<Vec<i32>> = Vec::new();
    let mut current = vec![0i32; dim];
    fn rec(axis: usize, budget: i32, current: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if axis == current.len() {
            out.push(current.clone());
            return;
        }
        for x in -budget..=budget {
            current[axis] = x;
            rec(axis + 1, budget - x.abs(), current, out);
        }
        current[axis] = 0;
    }
    rec(0, radius as i32, &mut current, &mut points);
    let norm = |p: &[i32]| p.iter().map(|x| x.unsigned_abs() as usize).sum::<usize>();
    points.sort_by(|a, b| norm(a).cmp(&norm(b)).then_with(|| a.cmp(b)));
    let dist0 = points.iter().map(|p| norm(p)).collect();
    (dim, points.concat(), dist0)
}

/// Tree vertices are labelled by their path from the root: the first step
/// picks one of `k` children, later steps one of the `k - 1` non-parent
/// neighbours. Labels are padded with `-1` up to length `radius`.
fn tree_vertices(degree: usize, radius: usize) -> (usize, Vec<i32>, Vec<usize>, Vec<usize>) {
    let mut coords = vec![-1i32; radius];
    let mut dist0 = vec![0usize];
    let mut parents = vec![0usize];
    let mut level: Vec<usize> = vec![0];
    for depth in 1..=radius {
        let mut next = Vec::new();
        for &parent in &level {
            let branching = if depth == 1 { degree } else { degree - 1 };
            for child in 0..branching {
                let id = dist0.len();
                coords.extend_from_within(parent * radius..(parent + 1) * radius);
                coords[id * radius + depth - 1] = child as i32;
                dist0.push(depth);
                parents.push(parent);
                next.push(id);
            }
        }
        level = next;
    }
    (radius, coords, dist0, parents)
}

impl BallGraph {
    pub fn family(&self) -> Family {
        self.family
    }

    /// Dimension for `Z^d`, degree for the tree.
    pub fn param(&self) -> usize {
        self.param
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn num_vertices(&self) -> usize {
        self.dist0.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn origin(&self) -> usize {
        0
    }

    pub fn dist0(&self, v: usize) -> usize {
        self.dist0[v]
    }

    /// Coordinates of `v`: an integer vector for `Z^d`, the path label for trees.
    pub fn coord(&self, v: usize) -> &[i32] {
        let full = &self.coords[v * self.stride..(v + 1) * self.stride];
        match self.family {
            Family::Hypercubic => full,
            Family::RegularTree => &full[..self.dist0[v]],
        }
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbour, edge index)` pairs around `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    fn check_radius(&self, n: usize) -> Result<()> {
        if n > self.radius {
            Err(Error::RadiusOutOfRange {
                requested: n,
                max: self.radius,
            })
        } else {
            Ok(())
        }
    }

    /// Index range of the vertices of `S_n`.
    pub fn sphere_range(&self, n: usize) -> Result<Range<usize>> {
        self.check_radius(n)?;
        Ok(self.sphere_offsets[n]..self.sphere_offsets[n + 1])
    }

    pub fn sphere(&self, n: usize) -> Result<Vec<usize>> {
        Ok(self.sphere_range(n)?.collect())
    }

    /// Index range of `E_n`, the edges with both endpoints in `B_n`.
    pub fn edges_within(&self, n: usize) -> Result<Range<usize>> {
        self.check_radius(n)?;
        Ok(0..self.edge_prefix[n])
    }

    pub fn num_edges_within(&self, n: usize) -> Result<usize> {
        Ok(self.edges_within(n)?.end)
    }

    /// Canonical-first edge adjacent to `v`.
    pub fn first_edge_at(&self, v: usize) -> Option<usize> {
        self.neighbors(v).iter().map(|&(_, e)| e).min()
    }

    /// Short descriptor such as `zd2-R4`.
    pub fn descriptor(&self) -> String {
        format!(
            "{}{}-R{}",
            self.family.short_name(),
            self.param,
            self.radius
        )
    }

    pub fn compare_coords(&self, a: usize, b: usize) -> Ordering {
        self.coord(a).cmp(self.coord(b))
    }

    /// Deterministic text form: a header, one line per vertex, one per edge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "ball family={} param={} radius={} vertices={} edges={}",
            self.family.short_name(),
            self.param,
            self.radius,
            self.num_vertices(),
            self.num_edges()
        );
        let join = |c: &[i32]| {
            c.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        for v in 0..self.num_vertices() {
            let _ = writeln!(
                out,
                "v {} dist={} coord=({})",
                v,
                self.dist0[v],
                join(self.coord(v))
            );
        }
        for (i, e) in self.edges.iter().enumerate() {
            let _ = writeln!(out, "e {} radius={} {} {}", i, e.radius, e.lo, e.hi);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_edge_count_zd(dim: usize, radius: usize) -> usize {
        let g = build_ball(Family::Hypercubic, dim, radius).unwrap();
        let mut count = 0;
        for a in 0..g.num_vertices() {
            for b in a + 1..g.num_vertices() {
                let l1: i32 = g
                    .coord(a)
                    .iter()
                    .zip(g.coord(b))
                    .map(|(x, y)| (x - y).abs())
                    .sum();
                if l1 == 1 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn line_ball() {
        let g = build_ball(Family::Hypercubic, 1, 2).unwrap();
        assert_eq!(g.num_vertices(), 5);
        assert_eq!(g.num_edges(), 4);
        let s2: Vec<i32> = g
            .sphere(2)
            .unwrap()
            .iter()
            .map(|&v| g.coord(v)[0])
            .collect();
        assert_eq!(s2, vec![-2, 2]);
        let s1: Vec<i32> = g
            .sphere(1)
            .unwrap()
            .iter()
            .map(|&v| g.coord(v)[0])
            .collect();
        assert_eq!(s1, vec![-1, 1]);
        assert_eq!(g.num_edges_within(1).unwrap(), 2);
    }

    #[test]
    fn square_lattice_balls() {
        let g1 = build_ball(Family::Hypercubic, 2, 1).unwrap();
        assert_eq!((g1.num_vertices(), g1.num_edges()), (5, 4));
        assert_eq!(brute_force_edge_count_zd(2, 1), 4);
        let g2 = build_ball(Family::Hypercubic, 2, 2).unwrap();
        assert_eq!(g2.num_vertices(), 13);
        assert_eq!(g2.num_edges_within(2).unwrap(), 16);
        assert_eq!(brute_force_edge_count_zd(2, 2), 16);
        assert_eq!(g2.sphere(2).unwrap().len(), 8);
    }

    #[test]
    fn edge_counts_match_brute_force() {
        for (d, r) in [(1, 5), (2, 4), (3, 3), (4, 2)] {
            let g = build_ball(Family::Hypercubic, d, r).unwrap();
            assert_eq!(
                g.num_edges(),
                brute_force_edge_count_zd(d, r),
                "d={d} r={r}"
            );
        }
    }

    #[test]
    fn tree_spheres() {
        let g = build_ball(Family::RegularTree, 3, 2).unwrap();
        assert_eq!(g.sphere(2).unwrap().len(), 6);
        assert_eq!(g.num_vertices(), 10);
        assert_eq!(g.num_edges(), 9);
        for n in 1..=4 {
            let g = build_ball(Family::RegularTree, 3, n).unwrap();
            assert_eq!(g.sphere(n).unwrap().len(), 3 * (1 << (n - 1)));
        }
    }

    #[test]
    fn vertex_counts_match_formula() {
        for (fam, k, r) in [
            (Family::Hypercubic, 1, 7),
            (Family::Hypercubic, 2, 6),
            (Family::Hypercubic, 3, 4),
            (Family::RegularTree, 2, 5),
            (Family::RegularTree, 4, 3),
        ] {
            let g = build_ball(fam, k, r).unwrap();
            assert_eq!(g.num_vertices() as u128, expected_vertex_count(fam, k, r));
        }
    }

    #[test]
    fn structural_invariants() {
        for (fam, k, r) in [
            (Family::Hypercubic, 2, 5),
            (Family::Hypercubic, 3, 3),
            (Family::RegularTree, 3, 4),
        ] {
            let g = build_ball(fam, k, r).unwrap();
            assert_eq!(g.dist0(0), 0);
            let total: usize = (0..=r).map(|n| g.sphere(n).unwrap().len()).sum();
            assert_eq!(total, g.num_vertices());
            for (i, e) in g.edges().iter().enumerate() {
                assert!(g.dist0(e.lo).abs_diff(g.dist0(e.hi)) <= 1);
                assert_eq!(e.radius, g.dist0(e.lo).max(g.dist0(e.hi)));
                assert!(e.radius <= r);
                assert!(g.edges_within(e.radius).unwrap().contains(&i));
                assert_eq!(g.compare_coords(e.lo, e.hi), Ordering::Less);
            }
            if fam == Family::Hypercubic {
                for v in 0..g.num_vertices() {
                    let l1: i32 = g.coord(v).iter().map(|x| x.abs()).sum();
                    assert_eq!(l1 as usize, g.dist0(v));
                }
            }
            for n in 1..r {
                assert!(g.num_edges_within(n).unwrap() <= g.num_edges_within(n + 1).unwrap());
            }
        }
    }

    #[test]
    fn errors() {
        assert!(build_ball(Family::Hypercubic, 0, 2).is_err());
        assert!(build_ball(Family::Hypercubic, 2, 0).is_err());
        assert!(build_ball(Family::RegularTree, 1, 2).is_err());
        assert!(matches!(
            build_ball_with_cap(Family::Hypercubic, 3, 10, 1000),
            Err(Error::VertexCapExceeded { .. })
        ));
        let g = build_ball(Family::Hypercubic, 1, 2).unwrap();
        assert!(g.sphere(3).is_err());
        assert!(g.edges_within(3).is_err());
    }

    #[test]
    fn canonical_order_is_stable() {
        let a = build_ball(Family::Hypercubic, 2, 3).unwrap().to_text();
        let b = build_ball(Family::Hypercubic, 2, 3).unwrap().to_text();
        assert_eq!(a, b);
        let g = build_ball(Family::Hypercubic, 1, 2).unwrap();
        assert_eq!(
            g.to_text(),
            "ball family=zd param=1 radius=2 vertices=5 edges=4\n\
             v 0 dist=0 coord=(0)\n\
             v 1 dist=1 coord=(-1)\n\
             v 2 dist=1 coord=(1)\n\
             v 3 dist=2 coord=(-2)\n\
             v 4 dist=2 coord=(2)\n\
             e 0 radius=1 1 0\n\
             e 1 radius=1 0 2\n\
             e 2 radius=2 3 1\n\
             e 3 radius=2 2 4\n"
        );
    }
}
