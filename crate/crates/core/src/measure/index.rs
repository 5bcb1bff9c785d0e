//! Static k-d tree over the atoms of a [`DiscreteMeasure`](super::DiscreteMeasure).
//!
//! The tree is built once and the owning measure reorders its atoms into tree
//! order, so every node covers a contiguous range of atom indices and a
//! left-first traversal visits atoms in ascending index order. That is what
//! lets the exact ball query reproduce the brute-force scan bit for bit.

use std::cmp::Ordering;

pub(crate) const LEAF_SIZE: usize = 16;
const STACK_DEPTH: usize = 128;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub start: usize,
    pub end: usize,
    pub children: Option<(u32, u32)>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct KdTree {
    dim: usize,
    nodes: Vec<Node>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Weighted centroid of each node, `dim` entries per node.
    centroid: Vec<f64>,
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (p, q) in a.iter().zip(b) {
        let d = p - q;
        acc += d * d;
    }
    acc
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        match p.total_cmp(q) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl KdTree {
    /// Builds the tree over `coords` (row-major, `dim` columns) and returns it
    /// with the permutation that puts atoms into tree order: position `k` of
    /// the reordered measure holds original atom `perm[k]`.
    pub fn build(dim: usize, coords: &[f64]) -> (Self, Vec<usize>) {
        let n = if dim == 0 { 0 } else { coords.len() / dim };
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tree = KdTree {
            dim,
            nodes: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            centroid: Vec::new(),
        };
        if n > 0 {
            tree.build_node(coords, &mut perm, 0);
        }
        (tree, perm)
    }

    fn build_node(&mut self, coords: &[f64], idx: &mut [usize], offset: usize) -> u32 {
        let dim = self.dim;
        let point = |i: usize| &coords[i * dim..(i + 1) * dim];
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in idx.iter() {
            for (k, &c) in point(i).iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            start: offset,
            end: offset + idx.len(),
            children: None,
            weight: 0.0,
        });
        let axis = (0..dim)
            .max_by(|&a, &b| {
                (hi[a] - lo[a])
                    .total_cmp(&(hi[b] - lo[b]))
                    .then_with(|| b.cmp(&a))
            })
            .unwrap_or(0);
        let spread = hi[axis] - lo[axis];
        self.lo.extend_from_slice(&lo);
        self.hi.extend_from_slice(&hi);

        if idx.len() <= LEAF_SIZE || spread <= 0.0 {
            idx.sort_unstable_by(|&a, &b| lex_cmp(point(a), point(b)));
            return id;
        }
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            point(a)[axis]
                .total_cmp(&point(b)[axis])
                .then_with(|| lex_cmp(point(a), point(b)))
        });
        let (left, right) = idx.split_at_mut(mid);
        let l = self.build_node(coords, left, offset);
        let r = self.build_node(coords, right, offset + mid);
        self.nodes[id as usize].children = Some((l, r));
        id
    }

    /// Fills subtree weights and centroids; both slices in tree order.
    pub fn set_weights(&mut self, coords: &[f64], weights: &[f64]) {
        let dim = self.dim;
        self.centroid = vec![0.0; self.nodes.len() * dim];
        for id in (0..self.nodes.len()).rev() {
            let node = self.nodes[id];
            let mut c = vec![0.0; dim];
            let w = match node.children {
                Some((l, r)) => {
                    let (wl, wr) = (self.nodes[l as usize].weight, self.nodes[r as usize].weight);
                    for k in 0..dim {
                        c[k] = wl * self.centroid[l as usize * dim + k] + wr * self.centroid[r as usize * dim + k];
                    }
                    wl + wr
                }
                None => {
                    for i in node.start..node.end {
                        for k in 0..dim {
                            c[k] += weights[i] * coords[i * dim + k];
                        }
                    }
                    weights[node.start..node.end].iter().sum()
                }
            };
            for k in 0..dim {
                // clamped to the box against rounding; a massless node keeps its lower corner
                let v = if w > 0.0 { c[k] / w } else { self.lo[id * dim + k] };
                self.centroid[id * dim + k] = v.clamp(self.lo[id * dim + k], self.hi[id * dim + k]);
            }
            self.nodes[id].weight = w;
        }
    }

    pub fn centroid(&self, id: u32) -> &[f64] {
        &self.centroid[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    /// Largest squared distance from the centroid to a point of the node box.
    pub fn centroid_spread2(&self, id: u32) -> f64 {
        let base = id as usize * self.dim;
        (0..self.dim)
            .map(|k| {
                let c = self.centroid[base + k];
                let d = (c - self.lo[base + k]).max(self.hi[base + k] - c);
                d * d
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: u32) -> &Node {
        &self.nodes[id as usize]
    }

    /// Squared distance from `x` to the closest point of the node box.
    #[inline]
    pub fn min_dist2(&self, id: u32, x: &[f64]) -> f64 {
        let base = id as usize * self.dim;
        let mut acc = 0.0;
        for (k, &c) in x.iter().enumerate() {
            let lo = self.lo[base + k];
            let hi = self.hi[base + k];
            let d = if c < lo {
                lo - c
            } else if c > hi {
                c - hi
            } else {
                0.0
            };
            acc += d * d;
        }
        acc
    }

    /// Squared distance from `x` to the farthest corner of the node box.
    #[inline]
    pub fn max_dist2(&self, id: u32, x: &[f64]) -> f64 {
        let base = id as usize * self.dim;
        let mut acc = 0.0;
        for (k, &c) in x.iter().enumerate() {
            let a = c - self.lo[base + k];
            let b = self.hi[base + k] - c;
            let d = a.abs().max(b.abs());
            acc += d * d;
        }
        acc
    }

    /// Sum of weights within the closed ball, in ascending atom order.
    pub fn ball_sum_exact(&self, coords: &[f64], weights: &[f64], x: &[f64], r2: f64) -> f64 {
        let dim = self.dim;
        let mut sum = 0.0;
        self.visit(x, r2, |node| {
            for i in node.start..node.end {
                if dist2(&coords[i * dim..(i + 1) * dim], x) <= r2 {
                    sum += weights[i];
                }
            }
            false
        });
        sum
    }

    /// Sum of weights within the closed ball, adding whole subtrees that lie
    /// inside the ball. Membership is exact; only the summation order differs
    /// from [`ball_sum_exact`](Self::ball_sum_exact).
    pub fn ball_sum_fast(&self, coords: &[f64], weights: &[f64], x: &[f64], r2: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let dim = self.dim;
        let mut sum = 0.0;
        let mut stack = [0u32; STACK_DEPTH];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let id = stack[top];
            if self.min_dist2(id, x) > r2 {
                continue;
            }
            let node = &self.nodes[id as usize];
            if self.max_dist2(id, x) <= r2 {
                sum += node.weight;
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack[top] = r;
                    stack[top + 1] = l;
                    top += 2;
                }
                None => {
                    for i in node.start..node.end {
                        if dist2(&coords[i * dim..(i + 1) * dim], x) <= r2 {
                            sum += weights[i];
                        }
                    }
                }
            }
        }
        sum
    }

    /// Calls `leaf` on every leaf whose box meets the closed ball, left to
    /// right. The callback returns `true` to stop early.
    fn visit(&self, x: &[f64], r2: f64, mut leaf: impl FnMut(&Node) -> bool) {
        if self.is_empty() {
            return;
        }
        let mut stack = [0u32; STACK_DEPTH];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let id = stack[top];
            if self.min_dist2(id, x) > r2 {
                continue;
            }
            let node = &self.nodes[id as usize];
            match node.children {
                Some((l, r)) => {
                    stack[top] = r;
                    stack[top + 1] = l;
                    top += 2;
                }
                None => {
                    if leaf(node) {
                        return;
                    }
                }
            }
        }
    }

    /// Atom indices inside the closed ball, ascending.
    pub fn ball_indices(&self, coords: &[f64], x: &[f64], r2: f64, out: &mut Vec<usize>) {
        let dim = self.dim;
        out.clear();
        self.visit(x, r2, |node| {
            for i in node.start..node.end {
                if dist2(&coords[i * dim..(i + 1) * dim], x) <= r2 {
                    out.push(i);
                }
            }
            false
        });
    }

    /// Squared distance from atom `i` to its nearest other atom.
    pub fn nearest_other_dist2(&self, coords: &[f64], i: usize) -> f64 {
        let dim = self.dim;
        let x = &coords[i * dim..(i + 1) * dim];
        let mut best = f64::INFINITY;
        let mut stack = [0u32; STACK_DEPTH];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let id = stack[top];
            if self.min_dist2(id, x) >= best {
                continue;
            }
            let node = &self.nodes[id as usize];
            match node.children {
                Some((l, r)) => {
                    let (near, far) = if self.min_dist2(l, x) <= self.min_dist2(r, x) {
                        (l, r)
                    } else {
                        (r, l)
                    };
                    stack[top] = far;
                    stack[top + 1] = near;
                    top += 2;
                }
                None => {
                    for j in node.start..node.end {
                        if j != i {
                            let d = dist2(&coords[j * dim..(j + 1) * dim], x);
                            if d < best {
                                best = d;
                            }
                        }
                    }
                }
            }
        }
        best
    }
}
