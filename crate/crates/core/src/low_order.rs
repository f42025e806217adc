//! Invariant domain preserving low-order scheme: graph viscosity on the
//! preconditioned gradient stencil, flux-lumped Lax-Friedrichs face terms and
//! the bar states both are built from.
//!
//! Bar states are stored as products `P = 2 d u_bar` so the limiter never
//! divides by a dissipation coefficient.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bernstein::apply_adjugate;
use crate::discretization::{Discretization, StateField};
use crate::error::{Error, Result};
use crate::law::{Flux, State, MAX_COMPONENTS};

/// Face wave speeds below this are treated as zero.
pub const FACE_SPEED_FLOOR: f64 = 1e-14;

/// Low-order operator pieces of one element. Face slots are indexed
/// `k * (fd + 1) + a` for face node `a` of local face `k`.
#[derive(Debug, Clone, Default)]
pub struct LowOrderData {
    pub flux: Vec<Flux>,
    /// `sum_j d_ij (u_j - u_i) - (F_j - F_i) . c_ij`.
    pub volume: Vec<State>,
    /// `sum_k (w/2) [(F_i - F_hat) . n + lambda (u_hat - u_i)]`.
    pub face: Vec<State>,
    /// `sum_k w F_i . n`, the boundary term of the group formulation.
    pub normal_flux: Vec<State>,
    /// `sum_j d_ij + sum_k d_ik`.
    pub dsum: Vec<f64>,
    /// Per reference pair.
    pub pair_d: Vec<f64>,
    /// `[2 d u_bar_ij, 2 d u_bar_ji]` per reference pair.
    pub pair_bar: Vec<[State; 2]>,
    pub face_ghost: Vec<State>,
    pub face_d: Vec<f64>,
    /// `2 d_ik u_bar_ik`.
    pub face_bar: Vec<State>,
    /// `w H(u_i, u_hat; n)`, the flux-lumped face flux.
    pub face_lf: Vec<State>,
}

impl LowOrderData {
    pub fn new(disc: &Discretization) -> Self {
        let n = disc.nodes_per_element();
        let slots = disc.mesh.kind().num_faces() * (disc.reference.face_degree() + 1);
        let np = disc.reference.pairs.len();
        let z = [0.0; MAX_COMPONENTS];
        Self {
            flux: vec![[[0.0; 2]; MAX_COMPONENTS]; n],
            volume: vec![z; n],
            face: vec![z; n],
            normal_flux: vec![z; n],
            dsum: vec![0.0; n],
            pair_d: vec![0.0; np],
            pair_bar: vec![[z; 2]; np],
            face_ghost: vec![z; slots],
            face_d: vec![0.0; slots],
            face_bar: vec![z; slots],
            face_lf: vec![z; slots],
        }
    }

    /// `m_i du_i/dt` of the low-order scheme.
    pub fn rhs(&self, i: usize, m: usize) -> State {
        let mut out = [0.0; MAX_COMPONENTS];
        for c in 0..m {
            out[c] = self.volume[i][c] + self.face[i][c];
        }
        out
    }
}

/// Nodal neighbor state across face slot `(k, a)`: the partner coefficient
/// or the ghost state at the node position.
pub fn face_partner_state(disc: &Discretization, field: &StateField, e: usize, k: usize, a: usize, t: f64) -> Result<State> {
    let r = &disc.reference;
    let i = r.face_nodes[k][a];
    let u = field.element(e)[i];
    match disc.neighbor_node(e, k, a) {
        Some((e2, i2)) => Ok(field.element(e2)[i2]),
        None => {
            let link = &disc.mesh.links(e)[k];
            disc.ghost_state(link.tag, &u, link.normal, disc.node_position(e, i), t)
        }
    }
}

/// Fill `out` with the low-order data of element `e` at time `t`.
pub fn element_low_order(disc: &Discretization, field: &StateField, e: usize, t: f64, out: &mut LowOrderData) -> Result<()> {
    let r = &disc.reference;
    let law = &disc.law;
    let m = disc.components();
    let dim = disc.mesh.dim();
    let geo = disc.mesh.geometry(e);
    let u = field.element(e);
    let z = [0.0; MAX_COMPONENTS];

    for (i, ui) in u.iter().enumerate() {
        out.flux[i] = law.try_flux(ui).map_err(|err| err.at(e, i))?;
        out.volume[i] = z;
        out.face[i] = z;
        out.normal_flux[i] = z;
        out.dsum[i] = 0.0;
    }

    for (p, pair) in r.pairs.iter().enumerate() {
        let (i, j) = (pair.i, pair.j);
        let cij = apply_adjugate(&geo.adjugate, pair.grad_ij, dim);
        let cji = apply_adjugate(&geo.adjugate, pair.grad_ji, dim);
        let directed = |c: [f64; 2], a: &State, b: &State| {
            let norm = (c[0] * c[0] + c[1] * c[1]).sqrt();
            if norm == 0.0 {
                0.0
            } else {
                norm * law.max_wave_speed(a, b, [c[0] / norm, c[1] / norm])
            }
        };
        let d = directed(cij, &u[i], &u[j]).max(directed(cji, &u[j], &u[i]));
        let (fi, fj) = (&out.flux[i], &out.flux[j]);
        let mut bar_ij = z;
        let mut bar_ji = z;
        for c in 0..m {
            let dfij = (fj[c][0] - fi[c][0]) * cij[0] + (fj[c][1] - fi[c][1]) * cij[1];
            let dfji = (fi[c][0] - fj[c][0]) * cji[0] + (fi[c][1] - fj[c][1]) * cji[1];
            let du = u[j][c] - u[i][c];
            out.volume[i][c] += d * du - dfij;
            out.volume[j][c] += -d * du - dfji;
            let sum = d * (u[i][c] + u[j][c]);
            bar_ij[c] = sum - dfij;
            bar_ji[c] = sum - dfji;
        }
        out.dsum[i] += d;
        out.dsum[j] += d;
        out.pair_d[p] = d;
        out.pair_bar[p] = [bar_ij, bar_ji];
    }

    let nfn = r.face_degree() + 1;
    for (k, link) in disc.mesh.links(e).iter().enumerate() {
        let n = link.normal;
        for a in 0..nfn {
            let slot = k * nfn + a;
            let i = r.face_nodes[k][a];
            let uhat = face_partner_state(disc, field, e, k, a, t).map_err(|err| err.at(e, i))?;
            let fhat = law.try_flux(&uhat).map_err(|err| err.at(e, i))?;
            let fi = &out.flux[i];
            let w = link.measure * r.face_weights[a];
            let lambda = law.max_wave_speed(&u[i], &uhat, n);
            out.face_ghost[slot] = uhat;
            let lf = law.lax_friedrichs_with_fluxes(&u[i], &uhat, fi, &fhat, n);
            let active = lambda >= FACE_SPEED_FLOOR;
            let d = if active { 0.5 * lambda * w } else { 0.0 };
            let mut bar = z;
            for c in 0..m {
                out.face_lf[slot][c] = w * lf[c];
                out.normal_flux[i][c] += w * (fi[c][0] * n[0] + fi[c][1] * n[1]);
                if active {
                    let dfn = (fhat[c][0] - fi[c][0]) * n[0] + (fhat[c][1] - fi[c][1]) * n[1];
                    out.face[i][c] += 0.5 * w * (-dfn + lambda * (uhat[c] - u[i][c]));
                    bar[c] = d * (u[i][c] + uhat[c]) - 0.5 * w * dfn;
                }
            }
            out.face_d[slot] = d;
            out.face_bar[slot] = bar;
            out.dsum[i] += d;
        }
    }
    Ok(())
}

/// Low-order data of every element.
pub fn bar_states(disc: &Discretization, field: &StateField, t: f64) -> Result<Vec<LowOrderData>> {
    (0..disc.num_elements())
        .into_par_iter()
        .with_min_len(64)
        .map(|e| {
            let mut data = LowOrderData::new(disc);
            element_low_order(disc, field, e, t, &mut data)?;
            Ok(data)
        })
        .collect()
}

/// `m_i du_i/dt` of the low-order scheme for every node.
pub fn low_order_rhs(disc: &Discretization, field: &StateField, t: f64) -> Result<StateField> {
    let mut out = disc.zero_field();
    let n = disc.nodes_per_element();
    let m = disc.components();
    out.values
        .par_chunks_mut(n)
        .enumerate()
        .with_min_len(64)
        .try_for_each_init(
            || LowOrderData::new(disc),
            |data, (e, chunk)| {
                element_low_order(disc, field, e, t, data)?;
                for (i, v) in chunk.iter_mut().enumerate() {
                    *v = data.rhs(i, m);
                }
                Ok::<(), Error>(())
            },
        )?;
    Ok(out)
}

/// The same right-hand side written as `sum 2d (u_bar - u_i)` over volume
/// pairs and face slots.
pub fn bar_state_form(disc: &Discretization, field: &StateField, e: usize, data: &LowOrderData) -> Vec<State> {
    let r = &disc.reference;
    let m = disc.components();
    let u = field.element(e);
    let mut out = vec![[0.0; MAX_COMPONENTS]; r.num_nodes];
    for (p, pair) in r.pairs.iter().enumerate() {
        let d2 = 2.0 * data.pair_d[p];
        for c in 0..m {
            out[pair.i][c] += data.pair_bar[p][0][c] - d2 * u[pair.i][c];
            out[pair.j][c] += data.pair_bar[p][1][c] - d2 * u[pair.j][c];
        }
    }
    let nfn = r.face_degree() + 1;
    for (k, nodes) in r.face_nodes.iter().enumerate() {
        for (a, &i) in nodes.iter().enumerate() {
            let slot = k * nfn + a;
            let d2 = 2.0 * data.face_d[slot];
            for c in 0..m {
                out[i][c] += data.face_bar[slot][c] - d2 * u[i][c];
            }
        }
    }
    out
}

/// Largest forward Euler step keeping every update a convex combination of
/// the current state and its bar states; infinite when nothing dissipates.
pub fn max_idp_timestep(disc: &Discretization, data: &[LowOrderData]) -> f64 {
    data.iter()
        .enumerate()
        .map(|(e, d)| {
            let mass = disc.lumped_mass(e);
            d.dsum
                .iter()
                .map(|&s| if s > 0.0 { mass / (2.0 * s) } else { f64::INFINITY })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Dense element dissipation matrix: `d_ij` off the diagonal and negative
/// row sums on it.
pub fn dissipation_matrix(disc: &Discretization, data: &LowOrderData) -> DMatrix<f64> {
    let n = disc.nodes_per_element();
    let mut dm = DMatrix::zeros(n, n);
    for (p, pair) in disc.reference.pairs.iter().enumerate() {
        dm[(pair.i, pair.j)] = data.pair_d[p];
        dm[(pair.j, pair.i)] = data.pair_d[p];
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| dm[(i, j)]).sum();
        dm[(i, i)] = -s;
    }
    dm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::ConservationLaw;
    use crate::mesh::{Mesh, QuadBoundarySpec};

    fn burgers_quad(p: usize) -> Discretization {
        let mesh = Mesh::structured_quad(3, 2, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::periodic()).unwrap();
        Discretization::new(mesh, p, ConservationLaw::burgers(2).unwrap(), None).unwrap()
    }

    #[test]
    fn constant_field_is_steady() {
        let d = burgers_quad(2);
        let field = d.sample(|_| [0.7, 0.0, 0.0, 0.0]);
        let r = low_order_rhs(&d, &field, 0.0).unwrap();
        assert!(r.values.iter().all(|v| v[0].abs() < 1e-13));
    }

    #[test]
    fn hand_computed_line_element() {
        // p = 1, h = 1/2: c_01 = -c_10 = 1/2, velocity 1 gives d = 1/2
        let mesh = Mesh::structured_line(2, [0.0, 1.0], true).unwrap();
        let d = Discretization::new(mesh, 1, ConservationLaw::advection([1.0, 0.0], 1).unwrap(), None).unwrap();
        let field = d.sample(|x| [x[0], 0.0, 0.0, 0.0]);
        let data = bar_states(&d, &field, 0.0).unwrap();
        assert_eq!(data[0].pair_d, vec![0.5]);
        let dm = dissipation_matrix(&d, &data[0]);
        assert_eq!(dm[(0, 0)], -0.5);
        // upwind bar state of the outflow face is the node value itself
        // at x = 1 the partner across the periodic face holds 0
        let slot = 1;
        let u1 = field.values[3][0];
        assert_eq!(u1, 1.0);
        assert_eq!(data[1].face_ghost[slot][0], 0.0);
        assert!((data[1].face_bar[slot][0] / (2.0 * data[1].face_d[slot]) - u1).abs() < 1e-15);
    }

    #[test]
    fn bar_state_form_matches() {
        let d = burgers_quad(3);
        let field = d.sample(|x| [(7.0 * x[0]).sin() + 0.3 * (11.0 * x[1]).cos(), 0.0, 0.0, 0.0]);
        let r = low_order_rhs(&d, &field, 0.0).unwrap();
        let data = bar_states(&d, &field, 0.0).unwrap();
        for e in 0..d.num_elements() {
            let alt = bar_state_form(&d, &field, e, &data[e]);
            for i in 0..d.nodes_per_element() {
                assert!((alt[i][0] - r.element(e)[i][0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_velocity_gives_unbounded_step() {
        let mesh = Mesh::structured_line(4, [0.0, 1.0], true).unwrap();
        let d = Discretization::new(mesh, 2, ConservationLaw::advection([0.0, 0.0], 1).unwrap(), None).unwrap();
        let field = d.sample(|x| [x[0], 0.0, 0.0, 0.0]);
        let data = bar_states(&d, &field, 0.0).unwrap();
        assert_eq!(max_idp_timestep(&d, &data), f64::INFINITY);
    }

    #[test]
    fn timestep_scales_with_h() {
        let dt = |n: usize| {
            let mesh = Mesh::structured_line(n, [0.0, 1.0], true).unwrap();
            let d = Discretization::new(mesh, 1, ConservationLaw::advection([1.0, 0.0], 1).unwrap(), None).unwrap();
            let field = d.sample(|x| [x[0], 0.0, 0.0, 0.0]);
            max_idp_timestep(&d, &bar_states(&d, &field, 0.0).unwrap())
        };
        assert!((dt(10) / dt(20) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn box_diagonal_pairs_carry_no_dissipation() {
        let d = burgers_quad(2);
        assert!(d.reference.pairs.iter().all(|p| {
            let (a, b) = (d.reference.nodes[p.i], d.reference.nodes[p.j]);
            a[0] == b[0] || a[1] == b[1]
        }));
    }
}
