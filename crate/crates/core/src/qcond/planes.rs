//! Alternating plane updates for the two-setting and multisetting conditions.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde_json::Value;

use super::{best_two_party_planes, matrix_of, plane_to_frame, random_plane, sorted_eigen, OptimizerOptions, Plane};
use crate::qstate::CorrelationTensor;
use crate::tensor;

pub(crate) struct SharedRun {
    pub value: f64,
    pub planes: Vec<Plane>,
    pub converged: bool,
}

fn plane_map(p: &Plane) -> [f64; 6] {
    [p[0].x, p[0].y, p[0].z, p[1].x, p[1].y, p[1].z]
}

/// `sum_{x in outer, y in inner} v v^T` where `v_r = data[(x * 3 + r) * inner + y]`.
fn gram_along(data: &[f64], outer: usize, inner: usize) -> Matrix3<f64> {
    let mut g = Matrix3::zeros();
    for x in 0..outer {
        for y in 0..inner {
            let v = Vector3::new(
                data[(x * 3) * inner + y],
                data[(x * 3 + 1) * inner + y],
                data[(x * 3 + 2) * inner + y],
            );
            g += v * v.transpose();
        }
    }
    g
}

/// Contracts every axis but `skip` with its plane (two rows each).
fn contract_except(m: &[f64], n: usize, planes: &[Plane], skip: usize) -> Vec<f64> {
    let mut cur = m.to_vec();
    let mut dims = vec![3; n];
    for (axis, p) in planes.iter().enumerate() {
        if axis != skip {
            cur = tensor::apply_map(&cur, &dims, axis, &plane_map(p), 2);
            dims[axis] = 2;
        }
    }
    cur
}

fn shared_value(m: &[f64], n: usize, planes: &[Plane]) -> f64 {
    contract_except(m, n, planes, usize::MAX).iter().map(|x| x * x).sum()
}

/// One restart of the two-setting optimizer from `start`.
fn shared_ascent(m: &[f64], n: usize, mut planes: Vec<Plane>, opts: &OptimizerOptions) -> SharedRun {
    let mut value = shared_value(m, n, &planes);
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        let before = value;
        for j in 0..n {
            let c = contract_except(m, n, &planes, j);
            let g = gram_along(&c, 1 << j, 1 << (n - 1 - j));
            let (vals, vecs) = sorted_eigen(&g);
            let candidate = vals[0] + vals[1];
            // Keep the old plane when the eigen solver cannot improve on it.
            let current = quad(&g, &planes[j][0]) + quad(&g, &planes[j][1]);
            if candidate > current {
                planes[j] = [vecs[0], vecs[1]];
                value = candidate;
            } else {
                value = current;
            }
        }
        if value - before < opts.tolerance {
            converged = true;
            break;
        }
    }
    SharedRun {
        value,
        planes,
        converged,
    }
}

fn quad(g: &Matrix3<f64>, v: &Vector3<f64>) -> f64 {
    v.dot(&(g * v))
}

/// Top-two eigenvectors of each party's Gram matrix with all other indices
/// summed over the full `{x, y, z}` range.
fn principal_planes(m: &[f64], n: usize) -> Vec<Plane> {
    (0..n)
        .map(|j| {
            let outer = 3usize.pow(j as u32);
            let inner = 3usize.pow((n - 1 - j) as u32);
            let (_, v) = sorted_eigen(&gram_along(m, outer, inner));
            [v[0], v[1]]
        })
        .collect()
}

pub(crate) fn optimize_shared_planes(t: &CorrelationTensor, opts: &OptimizerOptions) -> SharedRun {
    let n = t.n_qubits();
    let m = t.correlation_part();
    let mut best: Option<SharedRun> = None;
    for r in 0..opts.restarts {
        let start = if r == 0 {
            principal_planes(&m, n)
        } else {
            let mut rng = opts.rng(r);
            (0..n).map(|_| random_plane(&mut rng)).collect()
        };
        let run = shared_ascent(&m, n, start, opts);
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

/// Planes of the multisetting recurrence.
///
/// Party `p >= 2` (0-based) has `2^(N-1-p)` planes, one per choice of axes of
/// parties `p+1..N-1`; branch `b` at party `p` continues to branches
/// `2b` and `2b+1` at party `p-1`. The `2^(N-2)` leaves hold planes for
/// parties 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTree {
    n: usize,
    nodes: Vec<Vec<Plane>>,
    leaves: Vec<[Plane; 2]>,
}

impl FrameTree {
    /// Every branch uses the same plane for a given party.
    pub fn broadcast(planes: &[Plane]) -> Self {
        let n = planes.len();
        assert!(n >= 2);
        let nodes = (0..n)
            .map(|p| if p < 2 { Vec::new() } else { vec![planes[p]; 1 << (n - 1 - p)] })
            .collect();
        FrameTree {
            n,
            nodes,
            leaves: vec![[planes[0], planes[1]]; 1 << (n - 2)],
        }
    }

    pub fn n_parties(&self) -> usize {
        self.n
    }

    /// Planes along the branch that takes the first axis everywhere.
    pub fn first_branch(&self) -> Vec<Plane> {
        let mut out = vec![self.leaves[0][0], self.leaves[0][1]];
        out.extend((2..self.n).map(|p| self.nodes[p][0]));
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = (2..self.n)
            .rev()
            .map(|p| {
                let frames: Vec<_> = self.nodes[p].iter().map(plane_to_frame).collect();
                serde_json::json!({ "party": p + 1, "frames": frames })
            })
            .collect();
        let leaves: Vec<Value> = self
            .leaves
            .iter()
            .map(|l| serde_json::json!([plane_to_frame(&l[0]), plane_to_frame(&l[1])]))
            .collect();
        serde_json::json!({ "levels": levels, "leaves": leaves })
    }
}

/// Contracts parties `N-1 .. p+1` along the path that reaches branch `b` at
/// party `p`. Contracted axes keep length 1.
fn upper_contract(m: &[f64], tree: &FrameTree, p: usize, b: usize) -> (Vec<f64>, Vec<usize>) {
    let n = tree.n;
    let mut cur = m.to_vec();
    let mut dims = vec![3; n];
    for q in (p + 1..n).rev() {
        let bq = b >> (q - p);
        let iq = (b >> (q - p - 1)) & 1;
        let v = tree.nodes[q][bq][iq];
        cur = tensor::apply_map(&cur, &dims, q, v.as_slice(), 1);
        dims[q] = 1;
    }
    (cur, dims)
}

fn leaf_matrix(m: &[f64], tree: &FrameTree, leaf: usize) -> Matrix3<f64> {
    let (c, _) = upper_contract(m, tree, 1, leaf);
    matrix_of(&c)
}

fn leaf_value(mat: &Matrix3<f64>, planes: &[Plane; 2]) -> f64 {
    let mut s = 0.0;
    for a in &planes[0] {
        for b in &planes[1] {
            let x = a.dot(&(mat * b));
            s += x * x;
        }
    }
    s
}

/// Value of the recurrence for fixed planes everywhere, leaves included.
pub fn cn_objective(t: &CorrelationTensor, tree: &FrameTree) -> f64 {
    assert_eq!(t.n_qubits(), tree.n);
    let m = t.correlation_part();
    (0..tree.leaves.len())
        .map(|l| leaf_value(&leaf_matrix(&m, tree, l), &tree.leaves[l]))
        .sum()
}

/// Vectors `v` such that the subtree below (`q`, `b`) contributes
/// `sum (v . u)^2` for the free axis's vector `u`.
fn subtree_vectors(s: &[f64], dims: &[usize], q: usize, b: usize, tree: &FrameTree, out: &mut Vec<Vector3<f64>>) {
    if q < 2 {
        let leaf = &tree.leaves[b];
        for a in &leaf[0] {
            let s1 = tensor::apply_map(s, dims, 0, a.as_slice(), 1);
            let mut d1 = dims.to_vec();
            d1[0] = 1;
            for c in &leaf[1] {
                let s2 = tensor::apply_map(&s1, &d1, 1, c.as_slice(), 1);
                out.push(Vector3::new(s2[0], s2[1], s2[2]));
            }
        }
        return;
    }
    for (i, v) in tree.nodes[q][b].iter().enumerate() {
        let next = tensor::apply_map(s, dims, q, v.as_slice(), 1);
        let mut d = dims.to_vec();
        d[q] = 1;
        subtree_vectors(&next, &d, q - 1, (b << 1) | i, tree, out);
    }
}

/// Best unit vector orthogonal to `other` for the quadratic form `g`.
fn best_orthogonal(g: &Matrix3<f64>, other: &Vector3<f64>) -> Vector3<f64> {
    let e1 = super::any_orthogonal(other);
    let e2 = other.cross(&e1);
    let h = Matrix2::new(quad(g, &e1), e1.dot(&(g * e2)), e2.dot(&(g * e1)), quad(g, &e2));
    let e = h.symmetric_eigen();
    let top = if e.eigenvalues[0] >= e.eigenvalues[1] { 0 } else { 1 };
    let c = e.eigenvectors.column(top);
    (e1 * c[0] + e2 * c[1]).normalize()
}

/// Alternately re-optimizes each vector in the plane orthogonal to the other.
fn alternate_pair(g: &[Matrix3<f64>; 2], mut u: Plane) -> (f64, Plane) {
    let value = |u: &Plane| quad(&g[0], &u[0]) + quad(&g[1], &u[1]);
    let mut current = value(&u);
    for _ in 0..200 {
        for k in 0..2 {
            let cand = best_orthogonal(&g[k], &u[1 - k]);
            if quad(&g[k], &cand) > quad(&g[k], &u[k]) {
                u[k] = cand;
            }
        }
        let next = value(&u);
        if next - current <= 1e-15 * next.abs().max(1.0) {
            return (next, u);
        }
        current = next;
    }
    (current, u)
}

/// Maximizes `u1^T G1 u1 + u2^T G2 u2` over orthonormal pairs. Alternation
/// alone can stall, so it is also started from the leading eigenvector of
/// either form; the result is never worse than `start`.
fn best_orthonormal_pair(g: &[Matrix3<f64>; 2], start: Plane) -> Plane {
    let (_, v1) = sorted_eigen(&g[0]);
    let (_, v2) = sorted_eigen(&g[1]);
    let starts = [
        start,
        [v1[0], best_orthogonal(&g[1], &v1[0])],
        [best_orthogonal(&g[0], &v2[0]), v2[0]],
    ];
    let mut best = alternate_pair(g, start);
    for s in &starts[1..] {
        let run = alternate_pair(g, *s);
        if run.0 > best.0 {
            best = run;
        }
    }
    best.1
}

pub(crate) struct TreeRun {
    pub value: f64,
    pub tree: FrameTree,
    pub converged: bool,
}

fn refresh_leaves(m: &[f64], tree: &mut FrameTree) -> f64 {
    let mut total = 0.0;
    for l in 0..tree.leaves.len() {
        let mat = leaf_matrix(m, tree, l);
        let current = leaf_value(&mat, &tree.leaves[l]);
        let (best, a, b) = best_two_party_planes(&mat);
        if best > current {
            tree.leaves[l] = [a, b];
            total += best;
        } else {
            total += current;
        }
    }
    total
}

fn tree_ascent(m: &[f64], mut tree: FrameTree, opts: &OptimizerOptions) -> TreeRun {
    let n = tree.n;
    let mut value = refresh_leaves(m, &mut tree);
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        let before = value;
        for p in (2..n).rev() {
            for b in 0..tree.nodes[p].len() {
                let (s, dims) = upper_contract(m, &tree, p, b);
                let mut g = [Matrix3::zeros(); 2];
                for (i, gi) in g.iter_mut().enumerate() {
                    let mut vs = Vec::new();
                    subtree_vectors(&s, &dims, p - 1, (b << 1) | i, &tree, &mut vs);
                    *gi = vs.iter().map(|v| v * v.transpose()).sum();
                }
                tree.nodes[p][b] = best_orthonormal_pair(&g, tree.nodes[p][b]);
            }
        }
        value = refresh_leaves(m, &mut tree);
        if value - before < opts.tolerance {
            converged = true;
            break;
        }
    }
    TreeRun { value, tree, converged }
}

/// Greedy start: at each node, top-two directions of the sub-tensor reached
/// so far with all lower indices summed over.
fn greedy_tree(m: &[f64], n: usize) -> FrameTree {
    let mut tree = FrameTree::broadcast(&vec![[Vector3::x(), Vector3::y()]; n]);
    for p in (2..n).rev() {
        for b in 0..tree.nodes[p].len() {
            let (s, _) = upper_contract(m, &tree, p, b);
            // Only axes 0..=p are still 3-dimensional; axis p is the last of them.
            let outer = 3usize.pow(p as u32);
            let (_, v) = sorted_eigen(&gram_along(&s, outer, 1));
            tree.nodes[p][b] = [v[0], v[1]];
        }
    }
    tree
}

pub(crate) fn optimize_frame_tree(t: &CorrelationTensor, opts: &OptimizerOptions, shared: &[Plane]) -> TreeRun {
    let n = t.n_qubits();
    let m = t.correlation_part();
    let mut best: Option<TreeRun> = None;
    for r in 0..opts.restarts {
        let start = match r {
            0 => FrameTree::broadcast(shared),
            1 => greedy_tree(&m, n),
            _ => {
                let mut rng = opts.rng(r);
                let mut tree = FrameTree::broadcast(&vec![[Vector3::x(), Vector3::y()]; n]);
                for level in tree.nodes.iter_mut() {
                    level.iter_mut().for_each(|pl| *pl = random_plane(&mut rng));
                }
                tree
            }
        };
        let run = tree_ascent(&m, start, opts);
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}
