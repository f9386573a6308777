//! Exact nearest-neighbor search over low-dimensional point sets.
//!
//! The tree stores raw coordinates; queries carry per-axis weights so the
//! same tree serves any diagonal quadratic metric
//! `d²(x, y) = Σ_k w_k (x_k − y_k)²`. Pruning uses the weighted distance, so
//! results are exact (identical to a linear scan), and ties are broken by
//! the lowest point index to keep downstream iterations deterministic.

const LEAF_SIZE: usize = 12;

#[derive(Debug)]
enum Node {
    Leaf {
        points: Vec<usize>,
    },
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    root: Node,
}

impl KdTree {
    /// `coords` is a flat row-major array of `count × dim` values.
    pub fn build(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && !coords.is_empty() && coords.len() % dim == 0);
        let count = coords.len() / dim;
        let mut index: Vec<usize> = (0..count).collect();
        let root = Self::build_node(dim, &coords, &mut index);
        Self { dim, coords, root }
    }

    fn build_node(dim: usize, coords: &[f64], index: &mut [usize]) -> Node {
        if index.len() <= LEAF_SIZE {
            return Node::Leaf {
                points: index.to_vec(),
            };
        }
        // Split the axis of largest spread at the median.
        let mut axis = 0;
        let mut spread = -1.0;
        for k in 0..dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in index.iter() {
                let v = coords[i * dim + k];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > spread {
                spread = hi - lo;
                axis = k;
            }
        }
        if spread <= 0.0 {
            // All points coincide on every axis.
            return Node::Leaf {
                points: index.to_vec(),
            };
        }
        let mid = index.len() / 2;
        index.select_nth_unstable_by(mid, |&a, &b| {
            let va = coords[a * dim + axis];
            let vb = coords[b * dim + axis];
            va.partial_cmp(&vb).unwrap().then(a.cmp(&b))
        });
        let value = coords[index[mid] * dim + axis];
        let (left_idx, right_idx) = index.split_at_mut(mid);
        let left = Self::build_node(dim, coords, left_idx);
        let right = Self::build_node(dim, coords, right_idx);
        Node::Split {
            axis,
            value,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Index and weighted squared distance of the nearest point.
    pub fn nearest(&self, query: &[f64], weights: &[f64]) -> (usize, f64) {
        assert_eq!(query.len(), self.dim);
        assert_eq!(weights.len(), self.dim);
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(&self.root, query, weights, &mut best);
        best
    }

    fn dist2(&self, i: usize, query: &[f64], weights: &[f64]) -> f64 {
        let base = i * self.dim;
        let mut s = 0.0;
        for k in 0..self.dim {
            let d = self.coords[base + k] - query[k];
            s += weights[k] * d * d;
        }
        s
    }

    fn search(&self, node: &Node, query: &[f64], weights: &[f64], best: &mut (usize, f64)) {
        match node {
            Node::Leaf { points } => {
                for &i in points {
                    let d = self.dist2(i, query, weights);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = query[*axis] - value;
                let (near, far) = if delta < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, weights, best);
                // Visit the far side when the splitting plane can still hold
                // a point at least as close (<=. not <, so equal-distance
                // ties resolve by index).
                if weights[*axis] * delta * delta <= best.1 {
                    self.search(far, query, weights, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn linear_scan(dim: usize, coords: &[f64], query: &[f64], weights: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for i in 0..coords.len() / dim {
            let mut d = 0.0;
            for k in 0..dim {
                let t = coords[i * dim + k] - query[k];
                d += weights[k] * t * t;
            }
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn matches_linear_scan_with_weights() {
        let mut rng = Rng::new(4);
        for dim in [2usize, 8, 18] {
            let count = 1000;
            let coords: Vec<f64> = (0..count * dim).map(|_| rng.normal()).collect();
            let weights: Vec<f64> = (0..dim).map(|_| rng.log_uniform(0.1, 10.0)).collect();
            let tree = KdTree::build(dim, coords.clone());
            for _ in 0..100 {
                let q: Vec<f64> = (0..dim).map(|_| 1.5 * rng.normal()).collect();
                let got = tree.nearest(&q, &weights);
                let want = linear_scan(dim, &coords, &q, &weights);
                assert_eq!(got.0, want.0);
                assert!((got.1 - want.1).abs() <= 1e-12 * (1.0 + want.1));
            }
        }
    }

    #[test]
    fn ties_break_by_lowest_index() {
        // Duplicate points: the smaller index must win.
        let coords = vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let tree = KdTree::build(2, coords);
        let (idx, d) = tree.nearest(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(idx, 0);
        assert_eq!(d, 0.0);
        let (idx, _) = tree.nearest(&[0.4, 0.4], &[1.0, 1.0]);
        assert_eq!(idx, 1);
    }

    #[test]
    fn query_on_stored_point_returns_it() {
        let mut rng = Rng::new(6);
        let dim = 8;
        let coords: Vec<f64> = (0..500 * dim).map(|_| rng.normal()).collect();
        let tree = KdTree::build(dim, coords.clone());
        let w = vec![1.0; dim];
        for i in (0..500).step_by(37) {
            let q = &coords[i * dim..(i + 1) * dim];
            let (idx, d) = tree.nearest(q, &w);
            assert!(d == 0.0);
            // Another stored point may coincide; index must then be minimal.
            assert!(idx <= i);
        }
    }
}
