//! A mesh, a reference element and a conservation law bound together: node
//! positions, co-located node groups, boundary data and the coefficient
//! field type.

use std::sync::Arc;

use crate::bernstein::ReferenceElement;
use crate::error::{Error, Result};
use crate::law::{ConservationLaw, State, MAX_COMPONENTS};
use crate::mesh::{BoundaryTag, ElementKind, Mesh};
use crate::quadrature::{gauss_legendre, square_rule, triangle_rule, QuadratureRule};

/// Prescribed state at a boundary point and time.
pub type InflowFn = Arc<dyn Fn([f64; 2], f64) -> State + Send + Sync>;

/// Bernstein coefficients of all elements, element-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub nodes_per_element: usize,
    pub components: usize,
    pub values: Vec<State>,
}

impl StateField {
    pub fn zeros(num_elements: usize, nodes_per_element: usize, components: usize) -> Self {
        Self { nodes_per_element, components, values: vec![[0.0; MAX_COMPONENTS]; num_elements * nodes_per_element] }
    }

    pub fn num_elements(&self) -> usize {
        self.values.len() / self.nodes_per_element
    }

    pub fn element(&self, e: usize) -> &[State] {
        &self.values[e * self.nodes_per_element..(e + 1) * self.nodes_per_element]
    }

    pub fn element_mut(&mut self, e: usize) -> &mut [State] {
        let n = self.nodes_per_element;
        &mut self.values[e * n..(e + 1) * n]
    }

    /// Minimum and maximum coefficient of component `c`.
    pub fn range(&self, c: usize) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| (lo.min(u[c]), hi.max(u[c])))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|u| u[..self.components].iter().all(|x| x.is_finite()))
    }

    /// Max-norm of the difference over all coefficients and components.
    pub fn max_difference(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (0..self.components).map(|c| (a[c] - b[c]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// Discrete setting shared by all spatial schemes.
pub struct Discretization {
    pub mesh: Mesh,
    pub reference: ReferenceElement,
    pub law: ConservationLaw,
    inflow: Option<InflowFn>,
    node_group: Vec<usize>,
    num_groups: usize,
    /// Reference coordinates of face quadrature points, per local face.
    face_ref_points: Vec<Vec<[f64; 2]>>,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("kind", &self.mesh.kind())
            .field("elements", &self.mesh.num_elements())
            .field("degree", &self.reference.degree)
            .field("law", &self.law)
            .finish()
    }
}

fn reference_vertices(kind: ElementKind) -> &'static [[f64; 2]] {
    match kind {
        ElementKind::Line => &[[0.0, 0.0], [1.0, 0.0]],
        ElementKind::Triangle => &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        ElementKind::Quadrilateral => &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
    }
}

impl Discretization {
    pub fn new(mesh: Mesh, degree: usize, law: ConservationLaw, inflow: Option<InflowFn>) -> Result<Self> {
        if mesh.dim() != law.dim() {
            return Err(Error::InvalidInput(format!(
                "mesh dimension {} does not match law dimension {}",
                mesh.dim(),
                law.dim()
            )));
        }
        let has_inflow = mesh.faces().iter().any(|f| f.second.is_none() && f.tag == BoundaryTag::Inflow);
        if has_inflow && inflow.is_none() {
            return Err(Error::Config("mesh has inflow faces but no inflow data was given".into()));
        }
        let reference = ReferenceElement::new(mesh.kind(), degree)?;
        let kind = mesh.kind();
        let verts = reference_vertices(kind);
        let face_ref_points = (0..kind.num_faces())
            .map(|k| {
                let (a, b) = match kind {
                    ElementKind::Line => (verts[k], verts[k]),
                    _ => (verts[k], verts[(k + 1) % verts.len()]),
                };
                reference
                    .face_points
                    .iter()
                    .map(|&s| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
                    .collect()
            })
            .collect();

        // union-find over face node correspondences
        let n = reference.num_nodes;
        let total = mesh.num_elements() * n;
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let fd = reference.face_degree();
        for face in mesh.faces() {
            let Some(second) = face.second else { continue };
            let own = &reference.face_nodes[face.first.local_face];
            let other = &reference.face_nodes[second.local_face];
            for a in 0..=fd {
                let b = if face.reversed { fd - a } else { a };
                let x = find(&mut parent, face.first.element * n + own[a]);
                let y = find(&mut parent, second.element * n + other[b]);
                if x != y {
                    parent[x.max(y)] = x.min(y);
                }
            }
        }
        let mut group_of_root = vec![usize::MAX; total];
        let mut node_group = vec![0; total];
        let mut num_groups = 0;
        for v in 0..total {
            let r = find(&mut parent, v);
            if group_of_root[r] == usize::MAX {
                group_of_root[r] = num_groups;
                num_groups += 1;
            }
            node_group[v] = group_of_root[r];
        }

        Ok(Self { mesh, reference, law, inflow, node_group, num_groups, face_ref_points })
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.reference.num_nodes
    }

    pub fn num_dofs(&self) -> usize {
        self.num_elements() * self.nodes_per_element()
    }

    pub fn components(&self) -> usize {
        self.law.num_components()
    }

    pub fn zero_field(&self) -> StateField {
        StateField::zeros(self.num_elements(), self.nodes_per_element(), self.components())
    }

    /// Lumped mass `|K| / N`, equal for all nodes of an element.
    pub fn lumped_mass(&self, e: usize) -> f64 {
        self.mesh.geometry(e).measure / self.nodes_per_element() as f64
    }

    pub fn node_position(&self, e: usize, i: usize) -> [f64; 2] {
        self.mesh.geometry(e).map(self.reference.nodes[i])
    }

    /// Index of the co-location group of node `i` of element `e`.
    pub fn node_group(&self, e: usize, i: usize) -> usize {
        self.node_group[e * self.nodes_per_element() + i]
    }

    pub fn node_groups(&self) -> &[usize] {
        &self.node_group
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    /// Partner of face node position `a` on local face `k` of element `e`.
    pub fn neighbor_node(&self, e: usize, k: usize, a: usize) -> Option<(usize, usize)> {
        let link = &self.mesh.links(e)[k];
        let nb = link.neighbor?;
        let fd = self.reference.face_degree();
        let b = if link.reversed { fd - a } else { a };
        Some((nb.element, self.reference.face_nodes[nb.local_face][b]))
    }

    /// Reference coordinates of quadrature point `q` on local face `k`.
    pub fn face_reference_point(&self, k: usize, q: usize) -> [f64; 2] {
        self.face_ref_points[k][q]
    }

    /// Ghost state beyond a boundary face at physical point `x`.
    pub fn ghost_state(&self, tag: BoundaryTag, inner: &State, n: [f64; 2], x: [f64; 2], t: f64) -> Result<State> {
        self.law.ghost_state(tag, inner, n, || self.inflow.as_ref().map(|f| f(x, t)))
    }

    pub fn has_inflow_data(&self) -> bool {
        self.inflow.is_some()
    }

    /// Coefficients equal to point values at the Bernstein nodes.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> State) -> StateField {
        let mut field = self.zero_field();
        for e in 0..self.num_elements() {
            for i in 0..self.nodes_per_element() {
                field.element_mut(e)[i] = f(self.node_position(e, i));
            }
        }
        field
    }

    fn error_rule(&self) -> QuadratureRule {
        let nq = self.reference.degree + 2;
        match self.mesh.kind() {
            ElementKind::Line => {
                let (x, w) = gauss_legendre(nq);
                QuadratureRule { points: x.into_iter().map(|x| [x, 0.0]).collect(), weights: w }
            }
            ElementKind::Quadrilateral => square_rule(nq),
            ElementKind::Triangle => triangle_rule(nq),
        }
    }

    /// Element-wise L2 projection.
    pub fn project_l2(&self, f: impl Fn([f64; 2]) -> State) -> StateField {
        let n = self.nodes_per_element();
        let m = self.components();
        let rule = self.error_rule();
        let mut field = self.zero_field();
        let mut phi = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for e in 0..self.num_elements() {
            let geo = self.mesh.geometry(e);
            let mut moments = vec![[0.0; MAX_COMPONENTS]; n];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                self.reference.eval_all(*x, &mut phi, None);
                let v = f(geo.map(*x));
                for i in 0..n {
                    for c in 0..m {
                        moments[i][c] += w * phi[i] * v[c];
                    }
                }
            }
            for c in 0..m {
                for i in 0..n {
                    rhs[i] = moments[i][c];
                }
                self.reference.mass.solve(&mut rhs);
                for i in 0..n {
                    field.element_mut(e)[i][c] = rhs[i];
                }
            }
        }
        field
    }

    /// Values of the discrete solution at a reference point of element `e`.
    pub fn evaluate(&self, field: &StateField, e: usize, xr: [f64; 2]) -> State {
        let n = self.nodes_per_element();
        let mut phi = vec![0.0; n];
        self.reference.eval_all(xr, &mut phi, None);
        let mut out = [0.0; MAX_COMPONENTS];
        for (i, u) in field.element(e).iter().enumerate() {
            for c in 0..self.components() {
                out[c] += phi[i] * u[c];
            }
        }
        out
    }

    /// L1 norm of `exact - u_h` per component, by element quadrature with
    /// `p + 2` points per direction.
    pub fn l1_error(&self, field: &StateField, exact: impl Fn([f64; 2]) -> State) -> State {
        let n = self.nodes_per_element();
        let m = self.components();
        let rule = self.error_rule();
        let mut phi_table = vec![0.0; rule.len() * n];
        for (q, x) in rule.points.iter().enumerate() {
            self.reference.eval_all(*x, &mut phi_table[q * n..(q + 1) * n], None);
        }
        let mut err = [0.0; MAX_COMPONENTS];
        for e in 0..self.num_elements() {
            let geo = self.mesh.geometry(e);
            let scale = geo.measure / self.mesh.kind().reference_measure();
            let coeffs = field.element(e);
            for (q, x) in rule.points.iter().enumerate() {
                let v = exact(geo.map(*x));
                for c in 0..m {
                    let uh: f64 = (0..n).map(|i| phi_table[q * n + i] * coeffs[i][c]).sum();
                    err[c] += rule.weights[q] * scale * (v[c] - uh).abs();
                }
            }
        }
        err
    }

    /// Integral of each component over the domain.
    pub fn total(&self, field: &StateField) -> State {
        let mut out = [0.0; MAX_COMPONENTS];
        for e in 0..self.num_elements() {
            let m = self.lumped_mass(e);
            for u in field.element(e) {
                for c in 0..self.components() {
                    out[c] += m * u[c];
                }
            }
        }
        out
    }
}
