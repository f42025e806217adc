//! Unlimited high-order DG operator: volume integrals of `F(U_h) . grad phi_i`,
//! Lax-Friedrichs face integrals of the polynomial traces and the element
//! mass solve that turns the weak residual into nodal time derivatives.

use rayon::prelude::*;

use crate::bernstein::apply_adjugate;
use crate::discretization::{Discretization, StateField};
use crate::error::{Error, Result};
use crate::law::{State, MAX_COMPONENTS};

/// Per-element buffers of the target operator. Reused across calls.
#[derive(Debug, Clone, Default)]
pub struct TargetWorkspace {
    /// `int F(U_h) . grad phi_i - sum_k int phi_i H ds`.
    pub residual: Vec<State>,
    /// `int_{Gamma_k} phi_i H(U_h, U_hat; n) ds`, slot `k * (fd + 1) + a`.
    pub face_integrals: Vec<State>,
    /// Solution of `M_C u_dot = residual`.
    pub udot: Vec<State>,
    own_trace: Vec<State>,
    rhs: Vec<f64>,
}

impl TargetWorkspace {
    pub fn new(disc: &Discretization) -> Self {
        let n = disc.nodes_per_element();
        let nfn = disc.reference.face_degree() + 1;
        let nf = disc.mesh.kind().num_faces();
        Self {
            residual: vec![[0.0; MAX_COMPONENTS]; n],
            face_integrals: vec![[0.0; MAX_COMPONENTS]; nf * nfn],
            udot: vec![[0.0; MAX_COMPONENTS]; n],
            own_trace: vec![[0.0; MAX_COMPONENTS]; disc.reference.face_points.len()],
            rhs: vec![0.0; n],
        }
    }
}

/// Trace of element coefficients on local face `k` at face quadrature point `q`.
#[inline]
fn face_trace(disc: &Discretization, coeffs: &[State], k: usize, q: usize) -> State {
    let r = &disc.reference;
    let nfn = r.face_degree() + 1;
    let m = disc.components();
    let mut u = [0.0; MAX_COMPONENTS];
    for (a, &node) in r.face_nodes[k].iter().enumerate() {
        let b = r.face_basis[q * nfn + a];
        for c in 0..m {
            u[c] += b * coeffs[node][c];
        }
    }
    u
}

/// Weak residual and face integrals of element `e` at time `t`.
pub fn element_target(disc: &Discretization, field: &StateField, e: usize, t: f64, ws: &mut TargetWorkspace) -> Result<()> {
    let r = &disc.reference;
    let law = &disc.law;
    let n = r.num_nodes;
    let m = disc.components();
    let dim = disc.mesh.dim();
    let geo = disc.mesh.geometry(e);
    let coeffs = field.element(e);

    for v in ws.residual.iter_mut() {
        *v = [0.0; MAX_COMPONENTS];
    }
    for (q, &wq) in r.volume_rule.weights.iter().enumerate() {
        let basis = &r.volume_basis[q * n..(q + 1) * n];
        let mut u = [0.0; MAX_COMPONENTS];
        for (b, ui) in basis.iter().zip(coeffs) {
            for c in 0..m {
                u[c] += b * ui[c];
            }
        }
        let f = law.try_flux(&u).map_err(|err| err.at(e, usize::MAX))?;
        for i in 0..n {
            let g = apply_adjugate(&geo.adjugate, r.volume_grads[q * n + i], dim);
            for c in 0..m {
                ws.residual[i][c] += wq * (f[c][0] * g[0] + f[c][1] * g[1]);
            }
        }
    }

    let fd = r.face_degree();
    let nfn = fd + 1;
    let nq = r.face_points.len();
    for (k, link) in disc.mesh.links(e).iter().enumerate() {
        for q in 0..nq {
            ws.own_trace[q] = face_trace(disc, coeffs, k, q);
        }
        let slots = &mut ws.face_integrals[k * nfn..(k + 1) * nfn];
        for s in slots.iter_mut() {
            *s = [0.0; MAX_COMPONENTS];
        }
        let is_second = disc.mesh.faces()[link.face].first != crate::mesh::FaceSide { element: e, local_face: k };
        // the second side of a reversed face walks the points backwards so
        // both sides accumulate the same products in the same order
        let descending = is_second && link.reversed;
        for step in 0..nq {
            let q = if descending { nq - 1 - step } else { step };
            let u = ws.own_trace[q];
            let v = match link.neighbor {
                Some(nb) => {
                    let qn = if link.reversed { nq - 1 - q } else { q };
                    face_trace(disc, field.element(nb.element), nb.local_face, qn)
                }
                None => {
                    let x = geo.map(disc.face_reference_point(k, q));
                    disc.ghost_state(link.tag, &u, link.normal, x, t)?
                }
            };
            let fu = law.try_flux(&u).map_err(|err| err.at(e, usize::MAX))?;
            let fv = law.try_flux(&v).map_err(|err| err.at(e, usize::MAX))?;
            let h = law.lax_friedrichs_with_fluxes(&u, &v, &fu, &fv, link.normal);
            let wq = r.face_quad_weights[q];
            for (a, slot) in slots.iter_mut().enumerate() {
                let weight = wq * r.face_basis[q * nfn + a];
                for c in 0..m {
                    slot[c] += weight * h[c];
                }
            }
        }
        for (a, slot) in slots.iter_mut().enumerate() {
            for c in 0..m {
                slot[c] *= link.measure;
            }
            let node = r.face_nodes[k][a];
            for c in 0..m {
                ws.residual[node][c] -= slot[c];
            }
        }
    }
    Ok(())
}

/// Solve `M_C^e u_dot = residual` for the element held in `ws`.
pub fn element_time_derivative(disc: &Discretization, e: usize, ws: &mut TargetWorkspace) {
    let det = disc.mesh.geometry(e).det;
    let m = disc.components();
    for c in 0..m {
        for (x, res) in ws.rhs.iter_mut().zip(&ws.residual) {
            *x = res[c];
        }
        disc.reference.mass.solve(&mut ws.rhs);
        for (ud, x) in ws.udot.iter_mut().zip(&ws.rhs) {
            ud[c] = x / det;
        }
    }
}

/// Weak residual of the target scheme for every element.
pub fn target_rhs(disc: &Discretization, field: &StateField, t: f64) -> Result<StateField> {
    let mut out = disc.zero_field();
    let n = disc.nodes_per_element();
    out.values
        .par_chunks_mut(n)
        .enumerate()
        .with_min_len(64)
        .try_for_each_init(
            || TargetWorkspace::new(disc),
            |ws, (e, chunk)| {
                element_target(disc, field, e, t, ws)?;
                chunk.copy_from_slice(&ws.residual);
                Ok::<(), Error>(())
            },
        )?;
    Ok(out)
}

/// Nodal time derivatives `u_dot` of the target scheme.
pub fn nodal_time_derivatives(disc: &Discretization, field: &StateField, t: f64) -> Result<StateField> {
    let mut out = disc.zero_field();
    let n = disc.nodes_per_element();
    out.values
        .par_chunks_mut(n)
        .enumerate()
        .with_min_len(64)
        .try_for_each_init(
            || TargetWorkspace::new(disc),
            |ws, (e, chunk)| {
                element_target(disc, field, e, t, ws)?;
                element_time_derivative(disc, e, ws);
                chunk.copy_from_slice(&ws.udot);
                Ok::<(), Error>(())
            },
        )?;
    Ok(out)
}
