//! Bernstein bases on the reference line, square and triangle together with
//! the element operators built from them: preconditioned gradients, subcell
//! mass matrices, face integrals and consistent-mass solves.
//!
//! Node numbering:
//!
//! * line: node `i` sits at `i / p`;
//! * quadrilateral: node `i + (p + 1) j` sits at `(i / p, j / p)`;
//! * triangle: multi-index `(a1, a2, a3)` with `|a| = p` sits at
//!   `(a2 / p, a3 / p)` and has local number
//!   `(p + 1) a3 - a3 (a3 - 1) / 2 + a2`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::ElementKind;
use crate::quadrature::{gauss_legendre, square_rule, triangle_rule, QuadratureRule};

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// All degree-`p` Bernstein polynomials on `[0, 1]` at `x`.
pub fn bernstein_1d_all(p: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() > p);
    // de Casteljau style recursion keeps every value in [0, 1]
    out[0] = 1.0;
    let y = 1.0 - x;
    for q in 1..=p {
        let mut prev = 0.0;
        for i in 0..q {
            let cur = out[i];
            out[i] = y * cur + prev;
            prev = x * cur;
        }
        out[q] = prev;
    }
}

/// Values and derivatives of all degree-`p` Bernstein polynomials at `x`.
pub fn bernstein_1d_with_derivatives(p: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) {
    bernstein_1d_all(p, x, values);
    if p == 0 {
        derivs[0] = 0.0;
        return;
    }
    let mut lower = vec![0.0; p];
    bernstein_1d_all(p - 1, x, &mut lower);
    for i in 0..=p {
        let left = if i > 0 { lower[i - 1] } else { 0.0 };
        let right = if i < p { lower[i] } else { 0.0 };
        derivs[i] = p as f64 * (left - right);
    }
}

pub fn bernstein_1d(p: usize, i: usize, x: f64) -> f64 {
    binomial(p, i) * (1.0 - x).powi((p - i) as i32) * x.powi(i as i32)
}

/// Local number to multi-index table of the degree-`p` triangle.
pub fn multiindex_table(p: usize) -> Vec<[usize; 3]> {
    let mut table = Vec::with_capacity((p + 1) * (p + 2) / 2);
    for a3 in 0..=p {
        for a2 in 0..=(p - a3) {
            table.push([p - a2 - a3, a2, a3]);
        }
    }
    table
}

/// Inverse of [`multiindex_table`].
pub fn multiindex_to_local(p: usize, alpha: [usize; 3]) -> Result<usize> {
    if alpha.iter().sum::<usize>() != p {
        return Err(Error::InvalidInput(format!("multi-index {alpha:?} does not have order {p}")));
    }
    Ok(local_index(p, alpha))
}

#[inline]
fn local_index(p: usize, alpha: [usize; 3]) -> usize {
    let a3 = alpha[2];
    (p + 1) * a3 + alpha[1] - a3 * a3.saturating_sub(1) / 2
}

/// The tridiagonal matrix `M^{-1} C` of the 1D Bernstein mass and
/// derivative matrices in closed form.
pub fn precond_grad_1d(p: usize) -> DMatrix<f64> {
    let n = p + 1;
    let mut g = DMatrix::zeros(n, n);
    for c in 0..n {
        if c > 0 {
            g[(c - 1, c)] = (p + 1 - c) as f64;
        }
        g[(c, c)] = 2.0 * c as f64 - p as f64;
        if c + 1 < n {
            g[(c + 1, c)] = -((c + 1) as f64);
        }
    }
    g
}

/// Sparse vector-valued matrix stored as `(row, column, value)` triples.
#[derive(Debug, Clone, Default)]
pub struct SparseGradient {
    pub size: usize,
    pub entries: Vec<(usize, usize, [f64; 2])>,
}

impl SparseGradient {
    pub fn to_dense(&self, component: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v[component];
        }
        m
    }

    fn transformed(&self, adj: &[[f64; 2]; 2], dim: usize) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|&(i, j, v)| (i, j, apply_adjugate(adj, v, dim)))
            .collect();
        Self { size: self.size, entries }
    }
}

/// `c_k = sum_l adj[l][k] c_hat_l`.
#[inline]
pub fn apply_adjugate(adj: &[[f64; 2]; 2], v: [f64; 2], dim: usize) -> [f64; 2] {
    if dim == 1 {
        [adj[0][0] * v[0], 0.0]
    } else {
        [adj[0][0] * v[0] + adj[1][0] * v[1], adj[0][1] * v[0] + adj[1][1] * v[1]]
    }
}

/// Preconditioned gradient of a line or quadrilateral element with
/// adjugate `adj`, assembled from the 1D closed form.
pub fn precond_grad_box(kind: ElementKind, p: usize, adj: &[[f64; 2]; 2]) -> SparseGradient {
    let g = precond_grad_1d(p);
    let n1 = p + 1;
    let mut entries = Vec::new();
    match kind {
        ElementKind::Line => {
            let s = 1.0 / n1 as f64;
            for i in 0..n1 {
                for j in i.saturating_sub(1)..(i + 2).min(n1) {
                    entries.push((i, j, [g[(i, j)] * s, 0.0]));
                }
            }
        }
        ElementKind::Quadrilateral => {
            let s = 1.0 / (n1 * n1) as f64;
            for jy in 0..n1 {
                for ix in 0..n1 {
                    let row = ix + n1 * jy;
                    for kx in ix.saturating_sub(1)..(ix + 2).min(n1) {
                        if kx == ix {
                            continue;
                        }
                        entries.push((row, kx + n1 * jy, [g[(ix, kx)] * s, 0.0]));
                    }
                    for ky in jy.saturating_sub(1)..(jy + 2).min(n1) {
                        if ky == jy {
                            continue;
                        }
                        entries.push((row, ix + n1 * ky, [0.0, g[(jy, ky)] * s]));
                    }
                    entries.push((row, row, [g[(ix, ix)] * s, g[(jy, jy)] * s]));
                }
            }
        }
        ElementKind::Triangle => panic!("precond_grad_box called for a triangle"),
    }
    let reference = SparseGradient { size: entries.iter().map(|e| e.0).max().unwrap_or(0) + 1, entries };
    reference.transformed(adj, kind.dim())
}

/// Preconditioned gradient of a triangle from the degree elevation identity;
/// `grad_bary[k]` is the gradient of the `k`-th barycentric coordinate and
/// `measure` the element area.
pub fn precond_grad_simplex(p: usize, grad_bary: &[[f64; 2]; 3], measure: f64) -> SparseGradient {
    let table = multiindex_table(p);
    let n = table.len();
    let lumped = measure / n as f64;
    let mut dense = vec![[0.0f64; 2]; n * n];
    for (j, &alpha) in table.iter().enumerate() {
        for k in 0..3 {
            if alpha[k] == 0 {
                continue;
            }
            for l in 0..3 {
                let mut beta = alpha;
                beta[k] -= 1;
                beta[l] += 1;
                if beta[l] > p {
                    continue;
                }
                let i = local_index(p, beta);
                let coeff = (alpha[l] + 1 - usize::from(l == k)) as f64;
                for m in 0..2 {
                    dense[i * n + j][m] += grad_bary[k][m] * coeff;
                }
            }
        }
    }
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = dense[i * n + j];
            if v != [0.0, 0.0] || (i == j) {
                entries.push((i, j, [v[0] * lumped, v[1] * lumped]));
            }
        }
    }
    SparseGradient { size: n, entries }
}

/// A stencil pair `i < j` with reference gradient entries in both directions
/// and the (partially lumped) reference subcell mass coupling.
#[derive(Debug, Clone, Copy)]
pub struct NodePair {
    pub i: usize,
    pub j: usize,
    pub grad_ij: [f64; 2],
    pub grad_ji: [f64; 2],
    pub subcell_mass: f64,
}

/// Symmetric positive definite reference mass matrix with a reusable
/// Cholesky factorization. Box elements factor the 1D matrix only.
#[derive(Debug, Clone)]
pub struct MassSolver {
    dim_factors: usize,
    n: usize,
    matrix: Vec<f64>,
    lower: Vec<f64>,
    refine: bool,
}

impl MassSolver {
    fn new(matrix: DMatrix<f64>, dim_factors: usize, refine: bool) -> Self {
        let n = matrix.nrows();
        let chol = matrix.clone().cholesky().expect("Bernstein mass matrix is SPD");
        let l = chol.l();
        Self {
            dim_factors,
            n,
            matrix: matrix.transpose().as_slice().to_vec(),
            lower: l.transpose().as_slice().to_vec(),
            refine,
        }
    }

    /// Row-major dense factor size (the 1D size for box elements).
    pub fn factor_size(&self) -> usize {
        self.n
    }

    fn solve_dense(&self, x: &mut [f64], stride: usize) {
        let n = self.n;
        let l = &self.lower;
        for i in 0..n {
            let mut s = x[i * stride];
            for k in 0..i {
                s -= l[i * n + k] * x[k * stride];
            }
            x[i * stride] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i * stride];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k * stride];
            }
            x[i * stride] = s / l[i * n + i];
        }
    }

    fn apply_dense(&self, x: &[f64], stride: usize, out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            out[i * stride] = (0..n).map(|k| self.matrix[i * n + k] * x[k * stride]).sum();
        }
    }

    fn solve_once(&self, x: &mut [f64]) {
        let n = self.n;
        match self.dim_factors {
            2 => {
                for row in 0..n {
                    self.solve_dense(&mut x[row * n..(row + 1) * n], 1);
                }
                for col in 0..n {
                    self.solve_dense(&mut x[col..], n);
                }
            }
            _ => self.solve_dense(x, 1),
        }
    }

    /// Apply the reference mass matrix.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        match self.dim_factors {
            2 => {
                let mut tmp = vec![0.0; n * n];
                for row in 0..n {
                    self.apply_dense(&x[row * n..(row + 1) * n], 1, &mut tmp[row * n..(row + 1) * n]);
                }
                for col in 0..n {
                    self.apply_dense(&tmp[col..], n, &mut out[col..]);
                }
            }
            _ => self.apply_dense(x, 1, out),
        }
    }

    /// Solve `M x = b` in place, with one refinement sweep at high degree.
    pub fn solve(&self, b: &mut [f64]) {
        if !self.refine {
            self.solve_once(b);
            return;
        }
        let rhs = b.to_vec();
        self.solve_once(b);
        let mut r = vec![0.0; rhs.len()];
        self.apply(b, &mut r);
        for (ri, bi) in r.iter_mut().zip(&rhs) {
            *ri = bi - *ri;
        }
        self.solve_once(&mut r);
        for (xi, ri) in b.iter_mut().zip(&r) {
            *xi += ri;
        }
    }
}

/// Subcell low order mass matrices on the reference element and the stored
/// inverse of the regularized subcell Poisson operator.
#[derive(Debug, Clone)]
pub struct SubcellOperators {
    pub consistent: DMatrix<f64>,
    pub lumped: Vec<f64>,
    pub poisson_inverse: DMatrix<f64>,
}

/// Degree-`p` reference element with nodes, stencils, quadrature tables and
/// reference operators.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub kind: ElementKind,
    pub degree: usize,
    pub num_nodes: usize,
    pub nodes: Vec<[f64; 2]>,
    pub multi_indices: Vec<[usize; 3]>,
    /// Local node numbers on each face, ordered along the face parameter.
    pub face_nodes: Vec<Vec<usize>>,
    /// Nearest neighbors of each node, excluding the node itself.
    pub stencils: Vec<Vec<usize>>,
    pub pairs: Vec<NodePair>,
    /// Reference gradient including diagonal entries.
    pub gradient: SparseGradient,
    /// Integrals of the face basis over a unit-measure face.
    pub face_weights: Vec<f64>,
    pub volume_rule: QuadratureRule,
    /// `basis[q * N + i]`.
    pub volume_basis: Vec<f64>,
    /// Reference gradients, same layout as `volume_basis`.
    pub volume_grads: Vec<[f64; 2]>,
    pub face_points: Vec<f64>,
    pub face_quad_weights: Vec<f64>,
    /// `face_basis[q * (face_degree + 1) + a]`.
    pub face_basis: Vec<f64>,
    pub mass: MassSolver,
    pub subcell: SubcellOperators,
}

impl ReferenceElement {
    pub fn new(kind: ElementKind, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("polynomial degree must be at least 1".into()));
        }
        let p = degree;
        let (nodes, multi_indices) = match kind {
            ElementKind::Line => ((0..=p).map(|i| [i as f64 / p as f64, 0.0]).collect(), Vec::new()),
            ElementKind::Quadrilateral => {
                let mut v = Vec::with_capacity((p + 1) * (p + 1));
                for j in 0..=p {
                    for i in 0..=p {
                        v.push([i as f64 / p as f64, j as f64 / p as f64]);
                    }
                }
                (v, Vec::new())
            }
            ElementKind::Triangle => {
                let t = multiindex_table(p);
                (t.iter().map(|a| [a[1] as f64 / p as f64, a[2] as f64 / p as f64]).collect(), t)
            }
        };
        let n = nodes.len();
        let face_nodes: Vec<Vec<usize>> = match kind {
            ElementKind::Line => vec![vec![0], vec![p]],
            ElementKind::Quadrilateral => {
                let id = |i: usize, j: usize| i + (p + 1) * j;
                vec![
                    (0..=p).map(|a| id(a, 0)).collect(),
                    (0..=p).map(|a| id(p, a)).collect(),
                    (0..=p).map(|a| id(p - a, p)).collect(),
                    (0..=p).map(|a| id(0, p - a)).collect(),
                ]
            }
            ElementKind::Triangle => vec![
                (0..=p).map(|a| local_index(p, [p - a, a, 0])).collect(),
                (0..=p).map(|a| local_index(p, [0, p - a, a])).collect(),
                (0..=p).map(|a| local_index(p, [a, 0, p - a])).collect(),
            ],
        };

        let identity = [[1.0, 0.0], [0.0, 1.0]];
        let gradient = match kind {
            ElementKind::Triangle => precond_grad_simplex(p, &[[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]], 0.5),
            _ => precond_grad_box(kind, p, &identity),
        };

        let subcell = subcell_operators(kind, p, &multi_indices)?;

        let mut pair_map = std::collections::BTreeMap::new();
        for &(i, j, v) in &gradient.entries {
            if i == j || (v[0] == 0.0 && v[1] == 0.0) {
                continue;
            }
            let key = (i.min(j), i.max(j));
            let e = pair_map.entry(key).or_insert(([0.0; 2], [0.0; 2]));
            if i < j {
                e.0 = v;
            } else {
                e.1 = v;
            }
        }
        let pairs: Vec<NodePair> = pair_map
            .into_iter()
            .map(|((i, j), (gij, gji))| NodePair {
                i,
                j,
                grad_ij: gij,
                grad_ji: gji,
                subcell_mass: subcell.consistent[(i, j)],
            })
            .collect();
        let mut stencils = vec![Vec::new(); n];
        for pr in &pairs {
            stencils[pr.i].push(pr.j);
            stencils[pr.j].push(pr.i);
        }
        for s in &mut stencils {
            s.sort_unstable();
        }
        // every subcell coupling must lie on the gradient stencil
        for i in 0..n {
            for j in 0..n {
                if i != j && subcell.consistent[(i, j)] != 0.0 && !stencils[i].contains(&j) {
                    return Err(Error::InvariantViolation {
                        quantity: "subcell coupling outside gradient stencil",
                        value: subcell.consistent[(i, j)],
                        location: Some((i, j)),
                    });
                }
            }
        }

        let nq = p + 2;
        let volume_rule = match kind {
            ElementKind::Line => {
                let (x, w) = gauss_legendre(nq);
                QuadratureRule { points: x.into_iter().map(|x| [x, 0.0]).collect(), weights: w }
            }
            ElementKind::Quadrilateral => square_rule(nq),
            ElementKind::Triangle => triangle_rule(nq),
        };
        let mut volume_basis = vec![0.0; volume_rule.len() * n];
        let mut volume_grads = vec![[0.0; 2]; volume_rule.len() * n];
        for (q, &x) in volume_rule.points.iter().enumerate() {
            basis_all(kind, p, &multi_indices, x, &mut volume_basis[q * n..(q + 1) * n], Some(&mut volume_grads[q * n..(q + 1) * n]));
        }

        let face_degree = if kind == ElementKind::Line { 0 } else { p };
        let (face_points, face_quad_weights) = if kind == ElementKind::Line {
            (vec![0.0], vec![1.0])
        } else {
            gauss_legendre(nq)
        };
        let nf = face_degree + 1;
        let mut face_basis = vec![0.0; face_points.len() * nf];
        for (q, &s) in face_points.iter().enumerate() {
            bernstein_1d_all(face_degree, s, &mut face_basis[q * nf..(q + 1) * nf]);
        }
        // b_a(s_q) = b_{fd-a}(s_{nq-1-q}) bitwise, so both sides of a face
        // integrate identical products
        let nqf = face_points.len();
        for q in 0..nqf {
            let qm = nqf - 1 - q;
            for a in 0..nf {
                let am = nf - 1 - a;
                if (qm, am) > (q, a) {
                    face_basis[qm * nf + am] = face_basis[q * nf + a];
                }
            }
        }
        // every degree-q Bernstein polynomial integrates to 1/(q+1); the exact
        // value keeps the weights of partner nodes bitwise identical
        let face_weights = vec![1.0 / nf as f64; nf];

        let mass = reference_mass(kind, p, &multi_indices);

        Ok(Self {
            kind,
            degree,
            num_nodes: n,
            nodes,
            multi_indices,
            face_nodes,
            stencils,
            pairs,
            gradient,
            face_weights,
            volume_rule,
            volume_basis,
            volume_grads,
            face_points,
            face_quad_weights,
            face_basis,
            mass,
            subcell,
        })
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Polynomial degree of the trace on a face (0 for points).
    pub fn face_degree(&self) -> usize {
        if self.kind == ElementKind::Line {
            0
        } else {
            self.degree
        }
    }

    /// Value of basis function `i` at a reference point.
    pub fn eval(&self, i: usize, point: [f64; 2]) -> Result<f64> {
        if i >= self.num_nodes {
            return Err(Error::InvalidInput(format!("basis index {i} out of range 0..{}", self.num_nodes)));
        }
        let mut v = vec![0.0; self.num_nodes];
        basis_all(self.kind, self.degree, &self.multi_indices, point, &mut v, None);
        Ok(v[i])
    }

    /// All basis values (and optionally reference gradients) at a point.
    pub fn eval_all(&self, point: [f64; 2], values: &mut [f64], grads: Option<&mut [[f64; 2]]>) {
        basis_all(self.kind, self.degree, &self.multi_indices, point, values, grads);
    }

    /// Dense reference consistent mass matrix.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let n = self.num_nodes;
        let mut m = DMatrix::zeros(n, n);
        let rule = match self.kind {
            ElementKind::Line => {
                let (x, w) = gauss_legendre(self.degree + 1);
                QuadratureRule { points: x.into_iter().map(|x| [x, 0.0]).collect(), weights: w }
            }
            ElementKind::Quadrilateral => square_rule(self.degree + 1),
            ElementKind::Triangle => triangle_rule(self.degree + 1),
        };
        let mut v = vec![0.0; n];
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            self.eval_all(*x, &mut v, None);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        m
    }

    /// Dense reference gradient matrices `C_k[i][j] = int phi_i d_k phi_j`.
    pub fn gradient_matrices(&self) -> [DMatrix<f64>; 2] {
        let n = self.num_nodes;
        let mut c = [DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
        for (q, &w) in self.volume_rule.weights.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let g = self.volume_grads[q * n + j];
                    for (k, ck) in c.iter_mut().enumerate() {
                        ck[(i, j)] += w * self.volume_basis[q * n + i] * g[k];
                    }
                }
            }
        }
        c
    }

    /// Measure of the reference element.
    pub fn measure(&self) -> f64 {
        self.kind.reference_measure()
    }
}

fn basis_all(kind: ElementKind, p: usize, table: &[[usize; 3]], x: [f64; 2], values: &mut [f64], grads: Option<&mut [[f64; 2]]>) {
    match kind {
        ElementKind::Line => {
            let mut d = vec![0.0; p + 1];
            bernstein_1d_with_derivatives(p, x[0], values, &mut d);
            if let Some(g) = grads {
                for i in 0..=p {
                    g[i] = [d[i], 0.0];
                }
            }
        }
        ElementKind::Quadrilateral => {
            let n1 = p + 1;
            let (mut bx, mut dx, mut by, mut dy) = (vec![0.0; n1], vec![0.0; n1], vec![0.0; n1], vec![0.0; n1]);
            bernstein_1d_with_derivatives(p, x[0], &mut bx, &mut dx);
            bernstein_1d_with_derivatives(p, x[1], &mut by, &mut dy);
            for j in 0..n1 {
                for i in 0..n1 {
                    values[i + n1 * j] = bx[i] * by[j];
                }
            }
            if let Some(g) = grads {
                for j in 0..n1 {
                    for i in 0..n1 {
                        g[i + n1 * j] = [dx[i] * by[j], bx[i] * dy[j]];
                    }
                }
            }
        }
        ElementKind::Triangle => {
            let bary = [1.0 - x[0] - x[1], x[0], x[1]];
            let grad_bary = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
            let fact: Vec<f64> = (0..=p).scan(1.0, |acc, k| {
                if k > 0 {
                    *acc *= k as f64;
                }
                Some(*acc)
            }).collect();
            let mut grads = grads;
            for (idx, a) in table.iter().enumerate() {
                let coeff = fact[p] / (fact[a[0]] * fact[a[1]] * fact[a[2]]);
                let pw: [f64; 3] = std::array::from_fn(|k| bary[k].powi(a[k] as i32));
                values[idx] = coeff * pw[0] * pw[1] * pw[2];
                if let Some(g) = grads.as_deref_mut() {
                    let mut gr = [0.0; 2];
                    for k in 0..3 {
                        if a[k] == 0 {
                            continue;
                        }
                        let mut term = a[k] as f64 * bary[k].powi(a[k] as i32 - 1);
                        for (l, pl) in pw.iter().enumerate() {
                            if l != k {
                                term *= pl;
                            }
                        }
                        gr[0] += coeff * term * grad_bary[k][0];
                        gr[1] += coeff * term * grad_bary[k][1];
                    }
                    g[idx] = gr;
                }
            }
        }
    }
}

fn reference_mass(kind: ElementKind, p: usize, table: &[[usize; 3]]) -> MassSolver {
    let refine = p > 8;
    match kind {
        ElementKind::Line | ElementKind::Quadrilateral => {
            let n1 = p + 1;
            let mut m = DMatrix::zeros(n1, n1);
            for i in 0..n1 {
                for j in 0..n1 {
                    m[(i, j)] = binomial(p, i) * binomial(p, j) / ((2 * p + 1) as f64 * binomial(2 * p, i + j));
                }
            }
            MassSolver::new(m, kind.dim(), refine)
        }
        ElementKind::Triangle => {
            // int_T b_a b_b = C(a+b choose a) / C(2p choose p) * 2|T| / ((2p+1)(2p+2))
            let n = table.len();
            let mut m = DMatrix::zeros(n, n);
            let norm = 1.0 / (binomial(2 * p, p) * ((2 * p + 1) * (2 * p + 2)) as f64);
            for (i, a) in table.iter().enumerate() {
                for (j, b) in table.iter().enumerate() {
                    let mut c = 1.0;
                    for k in 0..3 {
                        c *= binomial(a[k] + b[k], a[k]);
                    }
                    m[(i, j)] = c * binomial(p, p) * norm;
                }
            }
            MassSolver::new(m, 1, refine)
        }
    }
}

fn subcell_operators(kind: ElementKind, p: usize, table: &[[usize; 3]]) -> Result<SubcellOperators> {
    let n = match kind {
        ElementKind::Line => p + 1,
        ElementKind::Quadrilateral => (p + 1) * (p + 1),
        ElementKind::Triangle => table.len(),
    };
    let mut mc = DMatrix::zeros(n, n);
    let mut ml = vec![0.0; n];
    match kind {
        ElementKind::Line => {
            let len = 1.0 / p as f64;
            for c in 0..p {
                let (a, b) = (c, c + 1);
                mc[(a, a)] += len / 3.0;
                mc[(b, b)] += len / 3.0;
                mc[(a, b)] += len / 6.0;
                mc[(b, a)] += len / 6.0;
                ml[a] += len / 2.0;
                ml[b] += len / 2.0;
            }
        }
        ElementKind::Quadrilateral => {
            let area = 1.0 / (p * p) as f64;
            let id = |i: usize, j: usize| i + (p + 1) * j;
            for cj in 0..p {
                for ci in 0..p {
                    let corners = [(ci, cj), (ci + 1, cj), (ci + 1, cj + 1), (ci, cj + 1)];
                    for &(ia, ja) in &corners {
                        ml[id(ia, ja)] += area / 4.0;
                        for &(ib, jb) in &corners {
                            let fx = if ia == ib { 1.0 / 3.0 } else { 1.0 / 6.0 };
                            let fy = if ja == jb { 1.0 / 3.0 } else { 1.0 / 6.0 };
                            mc[(id(ia, ja), id(ib, jb))] += area * fx * fy;
                        }
                    }
                }
            }
            // partial lumping of diagonal-neighbor couplings
            for jy in 0..=p {
                for ix in 0..=p {
                    let a = id(ix, jy);
                    for (dx, dy) in [(-1i64, -1i64), (-1, 1), (1, -1), (1, 1)] {
                        let (bx, by) = (ix as i64 + dx, jy as i64 + dy);
                        if bx < 0 || by < 0 || bx > p as i64 || by > p as i64 {
                            continue;
                        }
                        let b = id(bx as usize, by as usize);
                        let v = mc[(a, b)];
                        mc[(a, a)] += v;
                        mc[(a, b)] = 0.0;
                    }
                }
            }
        }
        ElementKind::Triangle => {
            let area = 0.5 / (p * p) as f64;
            let mut cells: Vec<[usize; 3]> = Vec::new();
            for a in multiindex_table(p - 1) {
                cells.push([
                    local_index(p, [a[0] + 1, a[1], a[2]]),
                    local_index(p, [a[0], a[1] + 1, a[2]]),
                    local_index(p, [a[0], a[1], a[2] + 1]),
                ]);
            }
            if p >= 2 {
                for a in multiindex_table(p - 2) {
                    cells.push([
                        local_index(p, [a[0] + 1, a[1] + 1, a[2]]),
                        local_index(p, [a[0], a[1] + 1, a[2] + 1]),
                        local_index(p, [a[0] + 1, a[1], a[2] + 1]),
                    ]);
                }
            }
            for cell in cells {
                for &a in &cell {
                    ml[a] += area / 3.0;
                    for &b in &cell {
                        mc[(a, b)] += if a == b { area / 6.0 } else { area / 12.0 };
                    }
                }
            }
        }
    }
    let mut poisson = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            poisson[(i, j)] = if i == j { ml[i] } else { 0.0 } - mc[(i, j)];
        }
    }
    for j in 0..n {
        poisson[(n - 1, j)] = 1.0;
    }
    let poisson_inverse = poisson.try_inverse().ok_or(Error::InvariantViolation {
        quantity: "singular subcell Poisson matrix",
        value: 0.0,
        location: None,
    })?;
    Ok(SubcellOperators { consistent: mc, lumped: ml, poisson_inverse })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_values() {
        let r = ReferenceElement::new(ElementKind::Line, 1).unwrap();
        assert!((r.eval(0, [0.5, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((r.eval(1, [0.5, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        let r3 = ReferenceElement::new(ElementKind::Line, 3).unwrap();
        assert_eq!(r3.eval(2, [1.0, 0.0]).unwrap(), 0.0);
        assert!(r3.eval(4, [0.2, 0.0]).is_err());
    }

    #[test]
    fn quad_partition_of_unity_at_center() {
        let r = ReferenceElement::new(ElementKind::Quadrilateral, 2).unwrap();
        let s: f64 = (0..9).map(|i| r.eval(i, [0.5, 0.5]).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn de_casteljau_matches_closed_form() {
        let mut v = vec![0.0; 8];
        bernstein_1d_all(7, 0.3, &mut v);
        for (i, vi) in v.iter().enumerate() {
            assert!((vi - bernstein_1d(7, i, 0.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn multiindex_examples() {
        let t = multiindex_table(1);
        assert_eq!(t, vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(multiindex_to_local(2, [0, 0, 2]).unwrap(), 5);
        assert!(multiindex_to_local(2, [1, 0, 2]).is_err());
        for p in 1..8 {
            for (i, &a) in multiindex_table(p).iter().enumerate() {
                assert_eq!(multiindex_to_local(p, a).unwrap(), i);
            }
        }
    }

    #[test]
    fn closed_form_gradient_small_degrees() {
        let g1 = precond_grad_1d(1);
        assert_eq!(g1, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -1.0, 1.0]));
        let g2 = precond_grad_1d(2);
        assert_eq!(g2, DMatrix::from_row_slice(3, 3, &[-2.0, 2.0, 0.0, -1.0, 0.0, 1.0, 0.0, -2.0, 2.0]));
        for p in 1..20 {
            let g = precond_grad_1d(p);
            for i in 0..=p {
                assert_eq!(g.row(i).sum(), 0.0);
            }
        }
    }

    #[test]
    fn quad_p1_example_and_diagonal_zeros() {
        let c = precond_grad_box(ElementKind::Quadrilateral, 1, &[[1.0, 0.0], [0.0, 1.0]]);
        let c1 = c.to_dense(0);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0],
        ) / 4.0;
        assert_eq!(c1, expected);
        let c2 = c.to_dense(1);
        for (i, j) in [(0, 3), (1, 2), (2, 1), (3, 0)] {
            assert_eq!(c1[(i, j)], 0.0);
            assert_eq!(c2[(i, j)], 0.0);
        }
    }

    #[test]
    fn face_integrals() {
        let r1 = ReferenceElement::new(ElementKind::Quadrilateral, 1).unwrap();
        assert!(r1.face_weights.iter().all(|w| (w - 0.5).abs() < 1e-15));
        let r2 = ReferenceElement::new(ElementKind::Quadrilateral, 2).unwrap();
        // int_0^1 b_a ds = 1/3 for every a
        let oracle: Vec<f64> = (0..3)
            .map(|a| {
                let (x, w) = gauss_legendre(10);
                x.iter().zip(&w).map(|(x, w)| w * bernstein_1d(2, a, *x)).sum()
            })
            .collect();
        for (w, o) in r2.face_weights.iter().zip(&oracle) {
            assert!((w - o).abs() < 1e-15);
        }
        let rl = ReferenceElement::new(ElementKind::Line, 3).unwrap();
        assert_eq!(rl.face_weights, vec![1.0]);
    }

    #[test]
    fn face_nodes_lie_on_faces() {
        for kind in [ElementKind::Triangle, ElementKind::Quadrilateral] {
            let r = ReferenceElement::new(kind, 3).unwrap();
            let verts: Vec<[f64; 2]> = match kind {
                ElementKind::Triangle => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                _ => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            };
            for (k, nodes) in r.face_nodes.iter().enumerate() {
                let (a, b) = (verts[k], verts[(k + 1) % verts.len()]);
                for (pos, &i) in nodes.iter().enumerate() {
                    let s = pos as f64 / 3.0;
                    let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                    assert!((x[0] - r.nodes[i][0]).abs() < 1e-14 && (x[1] - r.nodes[i][1]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn line_p1_subcell_matrices() {
        let r = ReferenceElement::new(ElementKind::Line, 1).unwrap();
        let mc = &r.subcell.consistent;
        assert!((mc[(0, 0)] - 2.0 / 6.0).abs() < 1e-15 && (mc[(0, 1)] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.subcell.lumped, vec![0.5, 0.5]);
    }

    #[test]
    fn quad_p1_partial_lumping() {
        let r = ReferenceElement::new(ElementKind::Quadrilateral, 1).unwrap();
        let mc = &r.subcell.consistent;
        assert_eq!(mc[(0, 3)], 0.0);
        assert!((mc[(0, 0)] - (4.0 + 1.0) / 36.0).abs() < 1e-15);
        for i in 0..4 {
            assert!((mc.row(i).sum() - r.subcell.lumped[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_solver_round_trip() {
        for (kind, p) in [(ElementKind::Line, 5), (ElementKind::Quadrilateral, 4), (ElementKind::Triangle, 4), (ElementKind::Line, 12)] {
            let r = ReferenceElement::new(kind, p).unwrap();
            let m = r.mass_matrix();
            let w: Vec<f64> = (0..r.num_nodes).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.4).collect();
            let mut b: Vec<f64> = (&m * nalgebra::DVector::from_vec(w.clone())).iter().copied().collect();
            r.mass.solve(&mut b);
            for (x, y) in b.iter().zip(&w) {
                assert!((x - y).abs() < 1e-9, "{kind:?} p={p}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn simplex_stencil_distance_two() {
        let p = 3;
        let r = ReferenceElement::new(ElementKind::Triangle, p).unwrap();
        for &(i, j, v) in &r.gradient.entries {
            if i == j || v == [0.0, 0.0] {
                continue;
            }
            let (a, b) = (r.multi_indices[i], r.multi_indices[j]);
            let dist: usize = (0..3).map(|k| a[k].abs_diff(b[k])).sum();
            assert_eq!(dist, 2);
        }
    }
}
