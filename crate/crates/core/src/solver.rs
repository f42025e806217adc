//! Semi-discrete right-hand side of the three spatial schemes.
//!
//! One evaluation runs in three phases: per-element low-order data, target
//! derivatives, raw fluxes and bound candidates; a gluing reduction of the
//! bounds over co-located nodes; per-element limiting and assembly.

use std::str::FromStr;

use rayon::prelude::*;

use crate::dg_target::{element_target, element_time_derivative, TargetWorkspace};
use crate::discretization::{Discretization, StateField};
use crate::error::{Error, Result};
use crate::limiter::{
    decompose_element_fluxes, limit_face_scalar, limit_face_sequential, limit_volume_scalar, limit_volume_sequential, Bounds,
    DegeneracyGuard, MainVariable,
};
use crate::low_order::{element_low_order, LowOrderData};
use crate::law::{State, MAX_COMPONENTS};
use crate::mesh::FaceSide;

const MIN_CHUNK: usize = 32;

/// Spatial discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Unlimited high-order DG with consistent mass.
    Dg,
    /// Invariant domain preserving low-order scheme.
    Lo,
    /// Monolithic convex limiting of the DG target.
    Mcl,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dg => "dg",
            Scheme::Lo => "lo",
            Scheme::Mcl => "mcl",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dg" => Ok(Scheme::Dg),
            "lo" => Ok(Scheme::Lo),
            "mcl" => Ok(Scheme::Mcl),
            _ => Err(Error::Config(format!("unknown scheme '{s}' (expected dg, lo or mcl)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
struct ElementWork {
    lo: LowOrderData,
    target: TargetWorkspace,
    raw: Vec<State>,
    pair_flux: Vec<State>,
    face_flux: Vec<State>,
    node_min: Vec<State>,
    node_max: Vec<State>,
    face_phi_min: Vec<State>,
    face_phi_max: Vec<State>,
}

impl ElementWork {
    fn new(disc: &Discretization) -> Self {
        let n = disc.nodes_per_element();
        let nf = disc.mesh.kind().num_faces();
        let slots = nf * (disc.reference.face_degree() + 1);
        let z = [0.0; MAX_COMPONENTS];
        Self {
            lo: LowOrderData::new(disc),
            target: TargetWorkspace::new(disc),
            raw: vec![z; n],
            pair_flux: vec![z; disc.reference.pairs.len()],
            face_flux: vec![z; slots],
            node_min: vec![z; n],
            node_max: vec![z; n],
            face_phi_min: vec![z; nf],
            face_phi_max: vec![z; nf],
        }
    }
}

/// Reusable evaluator of `du/dt` for one discretization and scheme.
#[derive(Debug)]
pub struct Solver<'a> {
    disc: &'a Discretization,
    scheme: Scheme,
    limiting: bool,
    work: Vec<ElementWork>,
    group_min: Vec<State>,
    group_max: Vec<State>,
    idp_timestep: f64,
}

impl<'a> Solver<'a> {
    pub fn new(disc: &'a Discretization, scheme: Scheme) -> Self {
        let work = (0..disc.num_elements()).map(|_| ElementWork::new(disc)).collect();
        Self {
            disc,
            scheme,
            limiting: true,
            work,
            group_min: vec![[0.0; MAX_COMPONENTS]; disc.num_groups()],
            group_max: vec![[0.0; MAX_COMPONENTS]; disc.num_groups()],
            idp_timestep: f64::INFINITY,
        }
    }

    pub fn discretization(&self) -> &'a Discretization {
        self.disc
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// With limiting off, MCL applies the raw antidiffusive fluxes and
    /// reproduces the target scheme under lumped mass.
    pub fn set_limiting(&mut self, on: bool) {
        self.limiting = on;
    }

    /// IDP forward Euler bound of the most recent evaluation (infinite for
    /// DG, which does not compute it).
    pub fn max_idp_timestep(&self) -> f64 {
        self.idp_timestep
    }

    /// Glued bounds of the most recent limited evaluation, per node group.
    pub fn group_bounds(&self) -> (&[State], &[State]) {
        (&self.group_min, &self.group_max)
    }

    /// `du/dt` at time `t`, written into `out`.
    pub fn time_derivative(&mut self, field: &StateField, t: f64, out: &mut StateField) -> Result<()> {
        let disc = self.disc;
        let scheme = self.scheme;
        let limiting = self.limiting && scheme == Scheme::Mcl;
        if field.values.len() != disc.num_dofs() || out.values.len() != disc.num_dofs() {
            return Err(Error::InvalidInput("field does not match the discretization".into()));
        }

        self.work
            .par_iter_mut()
            .enumerate()
            .with_min_len(MIN_CHUNK)
            .try_for_each(|(e, w)| phase_one(disc, scheme, limiting, field, t, e, w))?;

        self.idp_timestep = if scheme == Scheme::Dg {
            f64::INFINITY
        } else {
            self.work
                .iter()
                .enumerate()
                .map(|(e, w)| {
                    let mass = disc.lumped_mass(e);
                    w.lo.dsum.iter().map(|&s| if s > 0.0 { mass / (2.0 * s) } else { f64::INFINITY }).fold(f64::INFINITY, f64::min)
                })
                .fold(f64::INFINITY, f64::min)
        };

        let m = disc.components();
        if limiting {
            for v in self.group_min.iter_mut() {
                *v = [f64::INFINITY; MAX_COMPONENTS];
            }
            for v in self.group_max.iter_mut() {
                *v = [f64::NEG_INFINITY; MAX_COMPONENTS];
            }
            for (e, w) in self.work.iter().enumerate() {
                for i in 0..disc.nodes_per_element() {
                    let g = disc.node_group(e, i);
                    for c in 0..m {
                        self.group_min[g][c] = self.group_min[g][c].min(w.node_min[i][c]);
                        self.group_max[g][c] = self.group_max[g][c].max(w.node_max[i][c]);
                    }
                }
            }
        }

        let rho_scale = if disc.law.is_scalar() { 1.0 } else { field.range(0).1.abs() };
        let guard = DegeneracyGuard::for_scale(rho_scale);
        let n = disc.nodes_per_element();
        let (gmin, gmax) = (&self.group_min, &self.group_max);
        out.values
            .par_chunks_mut(n)
            .zip(self.work.par_iter())
            .enumerate()
            .with_min_len(MIN_CHUNK)
            .try_for_each(|(e, (chunk, w))| phase_three(disc, scheme, limiting, e, w, gmin, gmax, guard, chunk))
    }
}

fn phase_one(
    disc: &Discretization,
    scheme: Scheme,
    limiting: bool,
    field: &StateField,
    t: f64,
    e: usize,
    w: &mut ElementWork,
) -> Result<()> {
    let law = &disc.law;
    let m = disc.components();
    let u = field.element(e);
    if scheme != Scheme::Dg && !law.is_scalar() {
        for (i, ui) in u.iter().enumerate() {
            law.in_invariant_set(ui).map_err(|err| err.at(e, i))?;
        }
    }
    if scheme != Scheme::Dg {
        element_low_order(disc, field, e, t, &mut w.lo)?;
    }
    if scheme != Scheme::Lo {
        element_target(disc, field, e, t, &mut w.target)?;
        element_time_derivative(disc, e, &mut w.target);
    }
    if scheme != Scheme::Mcl {
        return Ok(());
    }

    let r = &disc.reference;
    let nfn = r.face_degree() + 1;
    let mass = disc.lumped_mass(e);
    let mut scale = [0.0; MAX_COMPONENTS];
    for i in 0..r.num_nodes {
        for c in 0..m {
            let a = mass * w.target.udot[i][c];
            let b = w.lo.volume[i][c];
            let d = w.lo.normal_flux[i][c];
            w.raw[i][c] = a - b - d;
            scale[c] += a.abs() + b.abs() + d.abs();
        }
    }
    for (k, nodes) in r.face_nodes.iter().enumerate() {
        for (a, &i) in nodes.iter().enumerate() {
            let slot = k * nfn + a;
            let fi = w.target.face_integrals[slot];
            for c in 0..m {
                w.raw[i][c] += fi[c];
                scale[c] += fi[c].abs();
                w.face_flux[slot][c] = w.lo.face_lf[slot][c] - fi[c];
            }
        }
    }
    decompose_element_fluxes(r, &w.raw, u, &w.lo.pair_d, m, &scale, &mut w.pair_flux).map_err(|err| match err {
        Error::InvariantViolation { quantity, value, .. } => Error::InvariantViolation { quantity, value, location: Some((e, 0)) },
        other => other,
    })?;

    if limiting {
        element_bounds(disc, u, w);
    }
    Ok(())
}

/// Bound candidates of each node and the per-face bounds of specific
/// variables. Main variable: the node, its stencil and its face partners
/// (ghost states included). Specific variables: the nodal ratio and every
/// bar state the node takes part in.
fn element_bounds(disc: &Discretization, u: &[State], w: &mut ElementWork) {
    let r = &disc.reference;
    let nfn = r.face_degree() + 1;
    let products = disc.law.product_variables();
    for i in 0..r.num_nodes {
        let mut lo = u[i];
        let mut hi = u[i];
        for &j in &r.stencils[i] {
            lo[0] = lo[0].min(u[j][0]);
            hi[0] = hi[0].max(u[j][0]);
        }
        for c in products.clone() {
            let phi = u[i][c] / u[i][0];
            lo[c] = phi;
            hi[c] = phi;
        }
        w.node_min[i] = lo;
        w.node_max[i] = hi;
    }
    for (k, nodes) in r.face_nodes.iter().enumerate() {
        w.face_phi_min[k] = [f64::INFINITY; MAX_COMPONENTS];
        w.face_phi_max[k] = [f64::NEG_INFINITY; MAX_COMPONENTS];
        for (a, &i) in nodes.iter().enumerate() {
            let slot = k * nfn + a;
            let partner = w.lo.face_ghost[slot][0];
            w.node_min[i][0] = w.node_min[i][0].min(partner);
            w.node_max[i][0] = w.node_max[i][0].max(partner);
            let bar = &w.lo.face_bar[slot];
            if w.lo.face_d[slot] > 0.0 && bar[0] > 0.0 {
                for c in products.clone() {
                    let phi = bar[c] / bar[0];
                    w.node_min[i][c] = w.node_min[i][c].min(phi);
                    w.node_max[i][c] = w.node_max[i][c].max(phi);
                    w.face_phi_min[k][c] = w.face_phi_min[k][c].min(phi);
                    w.face_phi_max[k][c] = w.face_phi_max[k][c].max(phi);
                }
            }
        }
    }
    if products.is_empty() {
        return;
    }
    for (p, pair) in r.pairs.iter().enumerate() {
        let [bij, bji] = &w.lo.pair_bar[p];
        let denom = bij[0] + bji[0];
        if w.lo.pair_d[p] > 0.0 && denom > 0.0 {
            for c in products.clone() {
                let phi = (bij[c] + bji[c]) / denom;
                for node in [pair.i, pair.j] {
                    w.node_min[node][c] = w.node_min[node][c].min(phi);
                    w.node_max[node][c] = w.node_max[node][c].max(phi);
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn phase_three(
    disc: &Discretization,
    scheme: Scheme,
    limiting: bool,
    e: usize,
    w: &ElementWork,
    gmin: &[State],
    gmax: &[State],
    guard: DegeneracyGuard,
    out: &mut [State],
) -> Result<()> {
    if scheme == Scheme::Dg {
        out.copy_from_slice(&w.target.udot);
        return Ok(());
    }
    let r = &disc.reference;
    let m = disc.components();
    for (i, v) in out.iter_mut().enumerate() {
        *v = w.lo.rhs(i, m);
    }
    if scheme == Scheme::Mcl {
        let nfn = r.face_degree() + 1;
        if limiting {
            let bounds = |i: usize, c: usize| {
                let g = disc.node_group(e, i);
                Bounds::new(gmin[g][c], gmax[g][c])
            };
            let products = disc.law.product_variables();
            for (p, pair) in r.pairs.iter().enumerate() {
                let (i, j) = (pair.i, pair.j);
                let d = w.lo.pair_d[p];
                let f = &w.pair_flux[p];
                let [bij, bji] = &w.lo.pair_bar[p];
                let mut limited = [0.0; MAX_COMPONENTS];
                limited[0] = limit_volume_scalar(f[0], d, bij[0], bji[0], bounds(i, 0), bounds(j, 0));
                let main = MainVariable { bar: bij[0], bar_reverse: bji[0], limited: limited[0] };
                for c in products.clone() {
                    limited[c] = limit_volume_sequential(f[c], d, bij[c], bji[c], main, bounds(i, c), bounds(j, c), guard)
                        .map_err(|err| err.at(e, i))?;
                }
                for c in 0..m {
                    out[i][c] += limited[c];
                    out[j][c] -= limited[c];
                }
            }
            for (k, link) in disc.mesh.links(e).iter().enumerate() {
                let interior = link.neighbor.is_some();
                let is_first = disc.mesh.faces()[link.face].first == FaceSide { element: e, local_face: k };
                // both sides limit the flux of the first side, so the
                // results cancel exactly
                let sign = if interior && !is_first { -1.0 } else { 1.0 };
                let phi = |c: usize| Bounds::new(w.face_phi_min[k][c], w.face_phi_max[k][c]);
                for (a, &i) in r.face_nodes[k].iter().enumerate() {
                    let slot = k * nfn + a;
                    let d = w.lo.face_d[slot];
                    let bar = &w.lo.face_bar[slot];
                    let f = w.face_flux[slot];
                    let mut limited = [0.0; MAX_COMPONENTS];
                    limited[0] = limit_face_scalar(sign * f[0], d, bar[0], bounds(i, 0));
                    let main = MainVariable { bar: bar[0], bar_reverse: 0.0, limited: limited[0] };
                    for c in products.clone() {
                        limited[c] = limit_face_sequential(sign * f[c], d, bar[c], main, phi(c), interior, guard)
                            .map_err(|err| err.at(e, i))?;
                    }
                    for c in 0..m {
                        out[i][c] += sign * limited[c];
                    }
                }
            }
        } else {
            for (pair, f) in r.pairs.iter().zip(&w.pair_flux) {
                for c in 0..m {
                    out[pair.i][c] += f[c];
                    out[pair.j][c] -= f[c];
                }
            }
            for (k, nodes) in r.face_nodes.iter().enumerate() {
                for (a, &i) in nodes.iter().enumerate() {
                    for c in 0..m {
                        out[i][c] += w.face_flux[k * nfn + a][c];
                    }
                }
            }
        }
    }
    let inv_mass = 1.0 / disc.lumped_mass(e);
    for v in out.iter_mut() {
        for x in v.iter_mut().take(m) {
            *x *= inv_mass;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::ConservationLaw;
    use crate::mesh::{Mesh, QuadBoundarySpec};

    fn evaluate(solver: &mut Solver, field: &StateField) -> StateField {
        let mut out = solver.discretization().zero_field();
        solver.time_derivative(field, 0.0, &mut out).unwrap();
        out
    }

    #[test]
    fn unlimited_mcl_matches_target() {
        let mesh = Mesh::structured_quad(3, 2, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::periodic()).unwrap();
        let law = ConservationLaw::euler(1.4, 2).unwrap();
        let d = Discretization::new(mesh, 2, law, None).unwrap();
        let field = d.sample(|x| {
            let rho = 1.0 + 0.4 * (6.0 * x[0]).sin() * (4.0 * x[1]).cos();
            [rho, 0.3 * rho, -0.2 * x[0], 2.5 + 0.5 * x[1]]
        });
        let mut dg = Solver::new(&d, Scheme::Dg);
        let mut mcl = Solver::new(&d, Scheme::Mcl);
        mcl.set_limiting(false);
        let a = evaluate(&mut dg, &field);
        let b = evaluate(&mut mcl, &field);
        assert!(a.max_difference(&b) < 1e-10, "{}", a.max_difference(&b));
    }

    #[test]
    fn limited_scheme_is_conservative() {
        let mesh = Mesh::structured_quad(4, 3, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::periodic()).unwrap();
        let law = ConservationLaw::shallow_water(9.81, 2).unwrap();
        let d = Discretization::new(mesh, 2, law, None).unwrap();
        let field = d.sample(|x| [if x[0] < 0.4 { 2.0 } else { 0.5 }, 0.1 * x[1], -0.3 * x[0], 0.0]);
        for scheme in [Scheme::Lo, Scheme::Mcl, Scheme::Dg] {
            let mut s = Solver::new(&d, scheme);
            let r = evaluate(&mut s, &field);
            let total = d.total(&r);
            for c in 0..3 {
                assert!(total[c].abs() < 1e-12, "{scheme} {c} {}", total[c]);
            }
        }
    }
}
