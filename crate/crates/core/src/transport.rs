//! Exact solver for the balanced transportation problem
//!
//!   min Σ_ij c_ij x_ij   s.t.  Σ_j x_ij = s_i,  Σ_i x_ij = d_j,  x ≥ 0,
//!
//! by the transportation simplex on the basis spanning tree: northwest-corner
//! start, dual (u, v) recomputation per pivot, cycle flow shift. Entering
//! arcs are chosen by most-negative reduced cost with a deterministic
//! first-index tie break; after a generous pivot budget the rule degrades to
//! Bland's first-eligible rule, which cannot cycle. Reduced costs count as
//! negative only below a tolerance scaled to the largest cost, so ties from
//! rounding do not trigger pivots.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::math;

/// Optimal transport cost between weighted point sets with cost `cost(i, j)`.
/// `supplies` and `demands` must be positive and share the same total mass.
pub fn transport_cost<C>(supplies: &[f64], demands: &[f64], cost: C) -> Result<f64, CoreError>
where
    C: Fn(usize, usize) -> f64,
{
    let n = supplies.len();
    let m = demands.len();
    debug_assert!(n > 0 && m > 0);
    if n == 1 {
        return Ok(demands.iter().enumerate().map(|(j, w)| w * cost(0, j)).sum());
    }
    if m == 1 {
        return Ok(supplies.iter().enumerate().map(|(i, w)| w * cost(i, 0)).sum());
    }

    let costs: Vec<f64> = (0..n * m).map(|e| cost(e / m, e % m)).collect();
    let cost_scale = costs.iter().fold(0.0f64, |a, &c| a.max(math::abs(c))).max(1.0);
    let tol = 1e-12 * cost_scale;

    Simplex::new(supplies, demands, &costs, tol).solve()
}

struct Arc {
    supply: usize,
    demand: usize,
    flow: f64,
}

struct Simplex<'a> {
    n: usize,
    m: usize,
    costs: &'a [f64],
    tol: f64,
    arcs: Vec<Arc>,
    is_basic: Vec<bool>,
    // adjacency of the basis tree over nodes 0..n (supplies) and n..n+m
    // (demands): (other node, arc index)
    adj: Vec<Vec<(usize, usize)>>,
}

impl<'a> Simplex<'a> {
    fn new(supplies: &[f64], demands: &[f64], costs: &'a [f64], tol: f64) -> Self {
        let n = supplies.len();
        let m = demands.len();
        let mut s = Simplex {
            n,
            m,
            costs,
            tol,
            arcs: Vec::with_capacity(n + m - 1),
            is_basic: vec![false; n * m],
            adj: vec![Vec::new(); n + m],
        };
        s.northwest_corner(supplies, demands);
        s
    }

    /// Deterministic initial basic feasible solution with exactly n+m−1 arcs;
    /// simultaneous exhaustion inserts a degenerate zero-flow arc.
    fn northwest_corner(&mut self, supplies: &[f64], demands: &[f64]) {
        let (n, m) = (self.n, self.m);
        let mut rem_s = supplies.to_vec();
        let mut rem_d = demands.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let q = rem_s[i].min(rem_d[j]).max(0.0);
            self.add_basic(i, j, q);
            rem_s[i] -= q;
            rem_d[j] -= q;
            if i + 1 == n && j + 1 == m {
                break;
            }
            // advance exactly one index per step so the basis stays a tree
            if j + 1 == m || (rem_s[i] <= rem_d[j] && i + 1 < n) {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(self.arcs.len(), n + m - 1);
    }

    fn add_basic(&mut self, supply: usize, demand: usize, flow: f64) {
        let idx = self.arcs.len();
        self.arcs.push(Arc { supply, demand, flow });
        self.is_basic[supply * self.m + demand] = true;
        self.adj[supply].push((self.n + demand, idx));
        self.adj[self.n + demand].push((supply, idx));
    }

    fn remove_basic(&mut self, arc_idx: usize) -> (usize, usize) {
        let Arc { supply, demand, .. } = self.arcs[arc_idx];
        self.is_basic[supply * self.m + demand] = false;
        self.adj[supply].retain(|&(_, a)| a != arc_idx);
        self.adj[self.n + demand].retain(|&(_, a)| a != arc_idx);
        (supply, demand)
    }

    /// Node potentials from c_ij = u_i + v_j on basic arcs, rooted at node 0.
    fn duals(&self, scratch: &mut Vec<usize>) -> Vec<f64> {
        let total = self.n + self.m;
        let mut pot = vec![0.0f64; total];
        let mut seen = vec![false; total];
        scratch.clear();
        scratch.push(0);
        seen[0] = true;
        while let Some(node) = scratch.pop() {
            for &(other, arc) in &self.adj[node] {
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                let a = &self.arcs[arc];
                let c = self.costs[a.supply * self.m + a.demand];
                pot[other] = c - pot[node];
                scratch.push(other);
            }
        }
        pot
    }

    /// Path of arc indices from `from` to `to` through the basis tree,
    /// together with the node sequence.
    fn tree_path(&self, from: usize, to: usize) -> Vec<usize> {
        let total = self.n + self.m;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut queue = vec![from];
        seen[from] = true;
        let mut head = 0;
        while head < queue.len() {
            let node = queue[head];
            head += 1;
            if node == to {
                break;
            }
            for &(other, arc) in &self.adj[node] {
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = Some((node, arc));
                    queue.push(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = to;
        while let Some((prev, arc)) = parent[node] {
            path.push(arc);
            node = prev;
        }
        path.reverse();
        path
    }

    fn solve(mut self) -> Result<f64, CoreError> {
        let (n, m) = (self.n, self.m);
        let dantzig_budget = 200 + 20 * (n + m);
        let total_budget = dantzig_budget + 40 * (n + m) * (n + m);
        let mut scratch = Vec::new();
        let mut pivots = 0usize;
        loop {
            let pot = self.duals(&mut scratch);
            // entering arc
            let mut entering: Option<(usize, usize)> = None;
            let mut best = -self.tol;
            'scan: for i in 0..n {
                for j in 0..m {
                    if self.is_basic[i * m + j] {
                        continue;
                    }
                    let rc = self.costs[i * m + j] - pot[i] - pot[n + j];
                    if rc < best {
                        best = rc;
                        entering = Some((i, j));
                        if pivots >= dantzig_budget {
                            // Bland phase: first eligible arc wins
                            break 'scan;
                        }
                    }
                }
            }
            let Some((ei, ej)) = entering else {
                let value = self
                    .arcs
                    .iter()
                    .map(|a| a.flow * self.costs[a.supply * self.m + a.demand])
                    .sum();
                return Ok(value);
            };

            // cycle: entering arc plus the tree path demand -> supply
            let path = self.tree_path(self.n + ej, ei);
            // arcs at even positions along the path lose flow
            let mut theta = f64::INFINITY;
            let mut leaving = usize::MAX;
            for (pos, &arc) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    let f = self.arcs[arc].flow;
                    if f < theta {
                        theta = f;
                        leaving = arc;
                    }
                }
            }
            debug_assert!(leaving != usize::MAX);
            let theta = theta.max(0.0);
            for (pos, &arc) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    self.arcs[arc].flow -= theta;
                } else {
                    self.arcs[arc].flow += theta;
                }
            }
            let _ = self.remove_basic(leaving);
            // recycle the arc slot for the entering arc
            self.arcs[leaving] = Arc {
                supply: ei,
                demand: ej,
                flow: theta,
            };
            self.is_basic[ei * m + ej] = true;
            self.adj[ei].push((n + ej, leaving));
            self.adj[n + ej].push((ei, leaving));

            pivots += 1;
            if pivots > total_budget {
                return Err(CoreError::TransportStalled { pivots });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_source_closed_form() {
        let cost = |_i: usize, j: usize| [2.0, 5.0][j];
        let c = transport_cost(&[1.0], &[0.25, 0.75], cost).unwrap();
        assert_relative_eq!(c, 0.25 * 2.0 + 0.75 * 5.0);
    }

    #[test]
    fn matches_hand_solved_instance() {
        // 3x3 transportation instance solved by hand; optimality certified by
        // the duals u = (0, 3, 3), v = (6, 6, 10), all reduced costs >= 0
        let supplies = [0.4, 0.35, 0.25];
        let demands = [0.3, 0.3, 0.4];
        let costs = [
            [8.0, 6.0, 10.0],
            [9.0, 12.0, 13.0],
            [14.0, 9.0, 16.0],
        ];
        let c = transport_cost(&supplies, &demands, |i, j| costs[i][j]).unwrap();
        // optimal plan: s0->d1 .05, s0->d2 .35, s1->d0 .3, s1->d2 .05, s2->d1 .25
        let optimum = 0.05 * 6.0 + 0.35 * 10.0 + 0.3 * 9.0 + 0.05 * 13.0 + 0.25 * 9.0;
        assert_relative_eq!(c, optimum, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_equal_split_terminates() {
        // simultaneous exhaustion forces degenerate basic arcs
        let supplies = [0.5, 0.5];
        let demands = [0.5, 0.5];
        let c = transport_cost(&supplies, &demands, |i, j| {
            if i == j {
                0.0
            } else {
                1.0
            }
        })
        .unwrap();
        assert_relative_eq!(c, 0.0);
    }
}
