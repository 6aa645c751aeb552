//! Connection events `{v <-> S_n}`, pivotality and Monte Carlo estimates of
//! `theta_n` / `pi_n`.
//!
//! Two engines answer "does `source` reach `S_n`": an early-exit BFS (the
//! default, also used in the hot Monte Carlo loop with lazily drawn edge
//! states) and a single-pass union-find. They are kept in agreement by tests.

mod estimate;
mod union_find;

pub use estimate::{estimate_reach, estimate_theta, wilson_interval, Estimate};
pub use union_find::DisjointSet;

use crate::lattice::BallGraph;
use crate::params::Configuration;

/// Reusable BFS scratch space sized for one graph.
#[derive(Clone, Debug)]
pub struct Explorer {
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<usize>,
}

impl Explorer {
    pub fn new(g: &BallGraph) -> Self {
        Self {
            stamp: vec![0; g.num_vertices()],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.queue.clear();
    }

    /// Whether an open path from `source` meets `S_n`, where `open(e)` gives
    /// the state of edge `e`. Exploration stops at the first vertex of `S_n`,
    /// so from the origin only edges of `E_n` are ever queried.
    pub fn reaches<F: FnMut(usize) -> bool>(
        &mut self,
        g: &BallGraph,
        source: usize,
        n: usize,
        mut open: F,
    ) -> bool {
        if g.dist0(source) == n {
            return true;
        }
        self.next_epoch();
        let epoch = self.epoch;
        self.stamp[source] = epoch;
        self.queue.push(source);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for &(w, e) in g.neighbors(v) {
                if self.stamp[w] == epoch || !open(e) {
                    continue;
                }
                if g.dist0(w) == n {
                    return true;
                }
                self.stamp[w] = epoch;
                self.queue.push(w);
            }
        }
        false
    }

    /// Marks the open cluster of `source`; query it with [`Explorer::in_cluster`].
    pub fn mark_cluster<F: FnMut(usize) -> bool>(
        &mut self,
        g: &BallGraph,
        source: usize,
        mut open: F,
    ) {
        self.next_epoch();
        let epoch = self.epoch;
        self.stamp[source] = epoch;
        self.queue.push(source);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for &(w, e) in g.neighbors(v) {
                if self.stamp[w] != epoch && open(e) {
                    self.stamp[w] = epoch;
                    self.queue.push(w);
                }
            }
        }
    }

    pub fn in_cluster(&self, v: usize) -> bool {
        self.stamp[v] == self.epoch
    }

    /// Vertices of the most recently marked cluster, in BFS order.
    pub fn cluster(&self) -> &[usize] {
        &self.queue
    }
}

/// True iff an open path from `source` meets `S_n`.
pub fn reaches_sphere(g: &BallGraph, config: &Configuration, source: usize, n: usize) -> bool {
    Explorer::new(g).reaches(g, source, n, |e| config.get(e))
}

/// As [`reaches_sphere`], but paths may not use any edge in `forbidden`.
pub fn reaches_avoiding(
    g: &BallGraph,
    config: &Configuration,
    source: usize,
    n: usize,
    forbidden: &[usize],
) -> bool {
    Explorer::new(g).reaches(g, source, n, |e| config.get(e) && !forbidden.contains(&e))
}

/// Union-find version of [`reaches_sphere`].
pub fn reaches_sphere_uf(g: &BallGraph, config: &Configuration, source: usize, n: usize) -> bool {
    if g.dist0(source) == n {
        return true;
    }
    // From the origin E_n suffices; other sources may need the whole ball.
    let edges = if source == g.origin() {
        g.num_edges_within(n).unwrap_or(g.num_edges())
    } else {
        g.num_edges()
    };
    let mut ds = DisjointSet::new(g.num_vertices());
    for e in 0..edges {
        if config.get(e) {
            let edge = g.edge(e);
            ds.union(edge.lo, edge.hi);
        }
    }
    let root = ds.find(source);
    g.sphere_range(n)
        .map(|r| r.into_iter().any(|w| ds.find(w) == root))
        .unwrap_or(false)
}

/// True iff flipping edge `e` changes the indicator of `{0 not connected to S_n_event}`.
pub fn is_pivotal(g: &BallGraph, config: &Configuration, e: usize, n_event: usize) -> bool {
    let mut explorer = Explorer::new(g);
    let origin = g.origin();
    let with_open = explorer.reaches(g, origin, n_event, |f| {
        if f == e {
            true
        } else {
            config.get(f)
        }
    });
    let with_closed = explorer.reaches(g, origin, n_event, |f| {
        if f == e {
            false
        } else {
            config.get(f)
        }
    });
    with_open != with_closed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_ball, Family};
    use crate::params::{homogeneous, sample};

    fn line2() -> BallGraph {
        build_ball(Family::Hypercubic, 1, 2).unwrap()
    }

    /// Edge index of `{a, b}` on the line by coordinates.
    fn line_edge(g: &BallGraph, a: i32, b: i32) -> usize {
        (0..g.num_edges())
            .find(|&e| {
                let ed = g.edge(e);
                let (x, y) = (g.coord(ed.lo)[0], g.coord(ed.hi)[0]);
                (x, y) == (a.min(b), a.max(b))
            })
            .unwrap()
    }

    fn vertex(g: &BallGraph, x: i32) -> usize {
        (0..g.num_vertices()).find(|&v| g.coord(v)[0] == x).unwrap()
    }

    #[test]
    fn trivial_configurations() {
        let g = build_ball(Family::Hypercubic, 2, 4).unwrap();
        let open = Configuration::open(g.num_edges());
        let closed = Configuration::closed(g.num_edges());
        for n in 1..=4 {
            assert!(reaches_sphere(&g, &open, 0, n));
            assert!(!reaches_sphere(&g, &closed, 0, n));
        }
    }

    #[test]
    fn line_paths() {
        let g = line2();
        let mut c = Configuration::closed(4);
        c.set(line_edge(&g, 0, 1), true);
        assert!(!reaches_sphere(&g, &c, 0, 2));
        c.set(line_edge(&g, 1, 2), true);
        assert!(reaches_sphere(&g, &c, 0, 2));
    }

    #[test]
    fn avoiding() {
        let g = line2();
        let open = Configuration::open(4);
        let one = vertex(&g, 1);
        let all: Vec<usize> = (0..4).collect();
        assert!(reaches_avoiding(&g, &open, one, 2, &[line_edge(&g, 1, 2)]));
        assert!(!reaches_avoiding(&g, &open, one, 2, &all));
        assert_eq!(
            reaches_avoiding(&g, &open, one, 2, &[]),
            reaches_sphere(&g, &open, one, 2)
        );
    }

    #[test]
    fn pivotality() {
        let g = line2();
        let e01 = line_edge(&g, 0, 1);
        assert!(!is_pivotal(&g, &Configuration::closed(4), e01, 2));
        let mut c = Configuration::closed(4);
        c.set(line_edge(&g, 1, 2), true);
        assert!(is_pivotal(&g, &c, e01, 2));
        // Redundant: the left arm already connects 0 to S_2.
        let mut c = Configuration::closed(4);
        c.set(line_edge(&g, -1, 0), true);
        c.set(line_edge(&g, -2, -1), true);
        c.set(line_edge(&g, 1, 2), true);
        assert!(!is_pivotal(&g, &c, e01, 2));
    }

    #[test]
    fn bfs_and_union_find_agree() {
        let g = build_ball(Family::Hypercubic, 2, 5).unwrap();
        let tree = build_ball(Family::RegularTree, 3, 5).unwrap();
        for (graph, p) in [(&g, 0.5), (&g, 0.3), (&tree, 0.7)] {
            let params = homogeneous(graph, p).unwrap();
            for i in 0..10_000u64 {
                let c = sample(&params, 99, i);
                let source = (i as usize * 7) % graph.num_vertices();
                let n = 1 + (i as usize % graph.radius());
                assert_eq!(
                    reaches_sphere(graph, &c, 0, n),
                    reaches_sphere_uf(graph, &c, 0, n)
                );
                assert_eq!(
                    reaches_sphere(graph, &c, source, n),
                    reaches_sphere_uf(graph, &c, source, n)
                );
            }
        }
    }

    #[test]
    fn origin_event_is_local_to_the_ball() {
        // {0 <-> S_n} read on B_n with E_n agrees with the same event on B_{n+2}
        // when E_n is shared and the outside is independent.
        let n = 3;
        let small = build_ball(Family::Hypercubic, 2, n).unwrap();
        let big = build_ball(Family::Hypercubic, 2, n + 2).unwrap();
        let ps = homogeneous(&small, 0.5).unwrap();
        let pb = homogeneous(&big, 0.5).unwrap();
        // Canonical order restricted to the first |E_n| edges coincides.
        for e in 0..small.num_edges() {
            assert_eq!(small.coord(small.edge(e).lo), big.coord(big.edge(e).lo));
            assert_eq!(small.coord(small.edge(e).hi), big.coord(big.edge(e).hi));
        }
        for i in 0..2000 {
            let inner = sample(&ps, 5, i);
            let mut outer = sample(&pb, 6, i);
            for e in 0..small.num_edges() {
                outer.set(e, inner.get(e));
            }
            assert_eq!(
                reaches_sphere(&small, &inner, 0, n),
                reaches_sphere(&big, &outer, 0, n)
            );
        }
    }

    #[test]
    fn monotone_in_parameters() {
        let g = build_ball(Family::Hypercubic, 2, 4).unwrap();
        let lo = homogeneous(&g, 0.4).unwrap();
        let hi = homogeneous(&g, 0.55).unwrap();
        for i in 0..2000 {
            if reaches_sphere(&g, &sample(&lo, 8, i), 0, 4) {
                assert!(reaches_sphere(&g, &sample(&hi, 8, i), 0, 4));
            }
        }
    }
}
