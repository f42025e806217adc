//! Registered benchmark problems: law, mesh recipe, initial and boundary
//! data, step size, horizon and exact solutions where one is known.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::discretization::{Discretization, InflowFn, StateField};
use crate::error::{Error, Result};
use crate::law::{
    burgers_quadrants_exact, burgers_sine_exact, double_mach_state, gaussian_pulse, step_and_bump, wrap_periodic,
    ConservationLaw, State,
};
use crate::mesh::{BoundaryTag, ElementKind, Mesh, QuadBoundarySpec, SideRule};

/// Exact solution `u(x, t)`; errors when no classical solution exists.
pub type ExactFn = Arc<dyn Fn([f64; 2], f64) -> Result<State> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    Advect1dMixed,
    Advect1dSmooth,
    Burgers1d,
    Burgers2d,
    Sod,
    DoubleMach,
    DamBreak,
    Channel,
}

impl PresetName {
    pub const ALL: [PresetName; 8] = [
        PresetName::Advect1dMixed,
        PresetName::Advect1dSmooth,
        PresetName::Burgers1d,
        PresetName::Burgers2d,
        PresetName::Sod,
        PresetName::DoubleMach,
        PresetName::DamBreak,
        PresetName::Channel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Advect1dMixed => "advect1d_mixed",
            PresetName::Advect1dSmooth => "advect1d_smooth",
            PresetName::Burgers1d => "burgers1d",
            PresetName::Burgers2d => "burgers2d",
            PresetName::Sod => "sod",
            PresetName::DoubleMach => "double_mach",
            PresetName::DamBreak => "dam_break",
            PresetName::Channel => "channel",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))
    }
}

/// How far to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Transient { t_final: f64 },
    /// Forward Euler pseudo-time marching until the update norm stays below `tol`.
    Steady { tol: f64, max_steps: usize },
}

/// How initial coefficients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    /// Point values at the Bernstein nodes; bound preserving.
    Sampled,
    /// Element-wise L2 projection; used where optimal convergence rates are measured.
    Projected,
}

/// Immutable description of one benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    pub dt: f64,
    pub horizon: Horizon,
    pub initial_data: InitialData,
    pub default_degree: usize,
    /// `1/h` values swept by a convergence study.
    pub table_resolutions: &'static [usize],
    /// Excluded from default suites because of run time.
    pub long: bool,
}

impl Preset {
    pub fn new(name: PresetName) -> Self {
        let (dt, horizon, initial_data, default_degree, table_resolutions, long): (f64, Horizon, InitialData, usize, &'static [usize], bool) =
            match name {
                PresetName::Advect1dMixed => (1e-3, Horizon::Transient { t_final: 1.0 }, InitialData::Sampled, 2, &[], false),
                PresetName::Advect1dSmooth => (
                    1e-4,
                    Horizon::Transient { t_final: 2.0 },
                    InitialData::Projected,
                    1,
                    &[24, 32, 48, 64, 96, 128, 192],
                    false,
                ),
                PresetName::Burgers1d => (
                    4e-4,
                    Horizon::Transient { t_final: 0.1 },
                    InitialData::Projected,
                    1,
                    &[48, 64, 96, 128, 192, 256, 384],
                    false,
                ),
                PresetName::Burgers2d => (1e-3, Horizon::Transient { t_final: 0.5 }, InitialData::Sampled, 1, &[], false),
                PresetName::Sod => (4e-4, Horizon::Transient { t_final: 0.231 }, InitialData::Sampled, 1, &[], false),
                PresetName::DoubleMach => (5e-5, Horizon::Transient { t_final: 0.2 }, InitialData::Sampled, 1, &[], true),
                PresetName::DamBreak => (1e-4, Horizon::Transient { t_final: 0.06 }, InitialData::Sampled, 1, &[], false),
                PresetName::Channel => (
                    0.025,
                    Horizon::Steady { tol: 1e-12, max_steps: 200_000 },
                    InitialData::Sampled,
                    1,
                    &[],
                    false,
                ),
            };
        Self { name, dt, horizon, initial_data, default_degree, table_resolutions, long }
    }

    pub fn all() -> Vec<Preset> {
        PresetName::ALL.into_iter().map(Preset::new).collect()
    }

    /// Element shape of the generated mesh.
    pub fn element_kind(&self) -> ElementKind {
        match self.name {
            PresetName::Advect1dMixed | PresetName::Advect1dSmooth | PresetName::Burgers1d | PresetName::Sod => ElementKind::Line,
            PresetName::Channel => ElementKind::Triangle,
            _ => ElementKind::Quadrilateral,
        }
    }

    /// Default `1/h` for degree `p`. Presets defined by a fixed number of
    /// unknowns per direction keep it constant across degrees.
    pub fn default_resolution(&self, p: usize) -> usize {
        let per_dof = |dof: usize| ((dof as f64 / (p + 1) as f64).round() as usize).max(1);
        match self.name {
            PresetName::Advect1dMixed => per_dof(192),
            PresetName::Advect1dSmooth => 24,
            PresetName::Burgers1d => 48,
            PresetName::Burgers2d => per_dof(128),
            PresetName::Sod => per_dof(256),
            // side length 2
            PresetName::DamBreak => per_dof(128),
            // 4 x 48^2 coarse level
            PresetName::DoubleMach => 48,
            // element layers across the channel
            PresetName::Channel => 24,
        }
    }

    /// Conservation law with its invariant set.
    pub fn law(&self) -> Result<ConservationLaw> {
        Ok(match self.name {
            PresetName::Advect1dMixed | PresetName::Advect1dSmooth => {
                ConservationLaw::advection([1.0, 0.0], 1)?.with_scalar_range(0.0, 1.0)
            }
            PresetName::Burgers1d => ConservationLaw::burgers(1)?.with_scalar_range(-1.0, 1.0),
            PresetName::Burgers2d => ConservationLaw::burgers(2)?.with_scalar_range(-1.0, 0.8),
            PresetName::Sod => ConservationLaw::euler(1.4, 1)?,
            PresetName::DoubleMach => ConservationLaw::euler(1.4, 2)?,
            PresetName::DamBreak => ConservationLaw::shallow_water(9.81, 2)?,
            PresetName::Channel => ConservationLaw::shallow_water(0.16, 2)?,
        })
    }

    /// Mesh at resolution `inv_h` (see [`Preset::default_resolution`]).
    pub fn mesh(&self, inv_h: usize) -> Result<Mesh> {
        if inv_h == 0 {
            return Err(Error::Config("resolution must be positive".into()));
        }
        match self.name {
            PresetName::Advect1dMixed => Mesh::structured_line(inv_h, [0.0, 1.0], true),
            PresetName::Advect1dSmooth => Mesh::structured_line(2 * inv_h, [-1.0, 1.0], true),
            PresetName::Burgers1d => Mesh::structured_line(inv_h, [0.0, 1.0], true),
            PresetName::Sod => {
                Mesh::structured_line_tagged(inv_h, [0.0, 1.0], false, BoundaryTag::Wall, BoundaryTag::Wall)
            }
            PresetName::Burgers2d => {
                Mesh::structured_quad(inv_h, inv_h, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::uniform(BoundaryTag::Inflow))
            }
            PresetName::DamBreak => Mesh::structured_quad(
                2 * inv_h,
                2 * inv_h,
                [[-1.0, 1.0], [-1.0, 1.0]],
                &QuadBoundarySpec::uniform(BoundaryTag::Outflow),
            ),
            PresetName::DoubleMach => Mesh::structured_quad(
                4 * inv_h,
                inv_h,
                [[0.0, 4.0], [0.0, 1.0]],
                &QuadBoundarySpec {
                    left: SideRule::Tag(BoundaryTag::Inflow),
                    right: SideRule::Tag(BoundaryTag::Outflow),
                    bottom: SideRule::Split { at: 1.0 / 6.0, below: BoundaryTag::Inflow, above: BoundaryTag::Wall },
                    top: SideRule::Tag(BoundaryTag::Inflow),
                },
            ),
            PresetName::Channel => channel_mesh(inv_h),
        }
    }

    fn inflow(&self) -> Option<InflowFn> {
        match self.name {
            PresetName::Burgers2d => Some(Arc::new(|x, t| [burgers_quadrants_exact(x, t), 0.0, 0.0, 0.0])),
            PresetName::DoubleMach => Some(Arc::new(double_mach_state)),
            PresetName::Channel => Some(Arc::new(|_, _| CHANNEL_INFLOW)),
            _ => None,
        }
    }

    /// Initial data as a function of position.
    pub fn initial_condition(&self, x: [f64; 2]) -> State {
        let s = |v: f64| [v, 0.0, 0.0, 0.0];
        match self.name {
            PresetName::Advect1dMixed => s(step_and_bump(x[0])),
            PresetName::Advect1dSmooth => s(gaussian_pulse(x[0])),
            PresetName::Burgers1d => s((2.0 * PI * x[0]).sin()),
            PresetName::Burgers2d => s(burgers_quadrants_exact(x, 0.0)),
            PresetName::Sod => {
                if x[0] < 0.5 {
                    [1.0, 0.0, 2.5, 0.0]
                } else {
                    [0.125, 0.0, 0.25, 0.0]
                }
            }
            PresetName::DoubleMach => double_mach_state(x, 0.0),
            PresetName::DamBreak => {
                if x[0].hypot(x[1]) <= 0.5 {
                    [1.0, 0.0, 0.0, 0.0]
                } else {
                    [0.1, 0.0, 0.0, 0.0]
                }
            }
            PresetName::Channel => CHANNEL_INFLOW,
        }
    }

    /// Exact solution, where a closed form is available.
    pub fn exact_solution(&self) -> Option<ExactFn> {
        let scalar = |v: f64| [v, 0.0, 0.0, 0.0];
        match self.name {
            PresetName::Advect1dMixed => {
                Some(Arc::new(move |x, t| Ok(scalar(step_and_bump(wrap_periodic(x[0] - t, 0.0, 1.0))))))
            }
            PresetName::Advect1dSmooth => {
                Some(Arc::new(move |x, t| Ok(scalar(gaussian_pulse(wrap_periodic(x[0] - t, -1.0, 1.0))))))
            }
            PresetName::Burgers1d => Some(Arc::new(move |x, t| burgers_sine_exact(x[0], t).map(scalar))),
            PresetName::Burgers2d => Some(Arc::new(move |x, t| Ok(scalar(burgers_quadrants_exact(x, t))))),
            _ => None,
        }
    }

    /// Discretization, initial coefficients and run parameters at degree
    /// `p`. `inv_h` defaults to [`Preset::default_resolution`]; `mesh`
    /// replaces the generated mesh (its boundary tags are used as given).
    pub fn build(&self, p: usize, inv_h: Option<usize>, mesh: Option<Mesh>) -> Result<Problem> {
        if p == 0 {
            return Err(Error::Config("polynomial degree must be at least 1".into()));
        }
        let inv_h = inv_h.unwrap_or_else(|| self.default_resolution(p));
        let mesh = match mesh {
            Some(m) => {
                if m.kind() != self.element_kind() {
                    return Err(Error::Config(format!(
                        "preset {} needs {:?} elements, mesh has {:?}",
                        self.name,
                        self.element_kind(),
                        m.kind()
                    )));
                }
                m
            }
            None => self.mesh(inv_h)?,
        };
        let disc = Discretization::new(mesh, p, self.law()?, self.inflow())?;
        let initial = match self.initial_data {
            InitialData::Sampled => sample_inside(&disc, |x| self.initial_condition(x)),
            InitialData::Projected => disc.project_l2(|x| self.initial_condition(x)),
        };
        Ok(Problem {
            preset: self.clone(),
            disc,
            initial,
            inv_h,
            dt: self.dt,
            horizon: self.horizon,
            exact: self.exact_solution(),
        })
    }
}

/// Channel inflow and initial state `(H, Hu, Hv)`.
pub const CHANNEL_INFLOW: State = [1.0, 1.0, 0.0, 0.0];

/// A ready-to-run benchmark instance.
pub struct Problem {
    pub preset: Preset,
    pub disc: Discretization,
    pub initial: StateField,
    pub inv_h: usize,
    pub dt: f64,
    pub horizon: Horizon,
    exact: Option<ExactFn>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("preset", &self.preset.name)
            .field("disc", &self.disc)
            .field("inv_h", &self.inv_h)
            .field("dt", &self.dt)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl Problem {
    pub fn has_exact_solution(&self) -> bool {
        self.exact.is_some()
    }

    /// L1 error per component against the exact solution at time `t`,
    /// divided by the domain measure so that tables on domains of
    /// different size are comparable.
    pub fn l1_error(&self, field: &StateField, t: f64) -> Result<State> {
        let exact = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::Config(format!("preset {} has no exact solution", self.preset.name)))?;
        // surface the first failure of the exact solution instead of panicking
        let failure = std::cell::RefCell::new(None);
        let err = self.disc.l1_error(field, |x| match exact(x, t) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                [0.0; 4]
            }
        });
        match failure.into_inner() {
            Some(e) => Err(e),
            None => {
                let area = self.disc.mesh.total_measure();
                Ok(err.map(|v| v / area))
            }
        }
    }
}

/// Point values at the Bernstein nodes, each node evaluated a hair inside
/// its own element so that data discontinuous along element boundaries
/// is sampled consistently from the element's side.
pub fn sample_inside(disc: &Discretization, f: impl Fn([f64; 2]) -> State) -> StateField {
    let centroid_ref = match disc.mesh.kind() {
        ElementKind::Line => [0.5, 0.0],
        ElementKind::Quadrilateral => [0.5, 0.5],
        ElementKind::Triangle => [1.0 / 3.0, 1.0 / 3.0],
    };
    let mut field = disc.zero_field();
    for e in 0..disc.num_elements() {
        let c = disc.mesh.geometry(e).map(centroid_ref);
        for i in 0..disc.nodes_per_element() {
            let x = disc.node_position(e, i);
            let nudged = [x[0] + 1e-10 * (c[0] - x[0]), x[1] + 1e-10 * (c[1] - x[1])];
            field.element_mut(e)[i] = f(nudged);
        }
    }
    field
}

/// Estimated orders of convergence between consecutive entries.
/// `None` marks a pair where an error is exactly zero.
pub fn eoc(errors: &[f64], inv_h: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != inv_h.len() || errors.len() < 2 {
        return Err(Error::InvalidInput("convergence rates need at least two (error, 1/h) pairs".into()));
    }
    if inv_h.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("mesh sizes must decrease strictly".into()));
    }
    Ok(errors
        .windows(2)
        .zip(inv_h.windows(2))
        .map(|(e, r)| {
            if e[0] > 0.0 && e[1] > 0.0 {
                Some((e[0] / e[1]).ln() / (r[1] / r[0]).ln())
            } else {
                None
            }
        })
        .collect())
}

const CHANNEL_X: [f64; 2] = [-10.0, 80.0];
const CHANNEL_WIDTH: f64 = 40.0;

/// Lower wall of the channel; horizontal up to `x = 0`, then rising at 5 degrees.
pub fn channel_lower_wall(x: f64) -> f64 {
    (PI / 36.0).tan() * x.max(0.0)
}

/// Structured, mirror-symmetric triangulation of the narrowing channel
/// with `layers` element rows across and `3 layers` columns along it.
/// Left edge inflow, right edge outflow, lateral walls.
pub fn channel_mesh(layers: usize) -> Result<Mesh> {
    if layers < 2 || !layers.is_multiple_of(2) {
        return Err(Error::Config(format!("channel mesh needs an even number of layers, got {layers}")));
    }
    let nx = 3 * layers;
    let [x0, x1] = CHANNEL_X;
    // keep the kink at x = 0 on a vertex column
    let n_straight = ((nx as f64) * (0.0 - x0) / (x1 - x0)).round().max(1.0) as usize;
    let xs: Vec<f64> = (0..=nx)
        .map(|i| {
            if i <= n_straight {
                x0 + (0.0 - x0) * i as f64 / n_straight as f64
            } else {
                x1 * (i - n_straight) as f64 / (nx - n_straight) as f64
            }
        })
        .collect();
    let ny = layers;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for &x in &xs {
            let lo = channel_lower_wall(x);
            let hi = CHANNEL_WIDTH - lo;
            let y = if 2 * j == ny { 0.5 * CHANNEL_WIDTH } else { lo + (hi - lo) * j as f64 / ny as f64 };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            // diagonals mirror about the centre line
            if 2 * j < ny {
                elements.push(vec![a, b, c]);
                elements.push(vec![a, c, d]);
            } else {
                elements.push(vec![a, b, d]);
                elements.push(vec![b, c, d]);
            }
        }
    }
    let verts = vertices.clone();
    Mesh::from_connectivity(ElementKind::Triangle, vertices, elements, |fv| {
        let (p, q) = (verts[fv[0]], verts[fv[1]]);
        let tol = 1e-9;
        Some(if (p[0] - x0).abs() < tol && (q[0] - x0).abs() < tol {
            BoundaryTag::Inflow
        } else if (p[0] - x1).abs() < tol && (q[0] - x1).abs() < tol {
            BoundaryTag::Outflow
        } else {
            BoundaryTag::Wall
        })
    })
}

/// Relative L1 defect of component `c` under reflection about the channel
/// centre line: `sum m_i |u_i - u_mirror(i)| / sum m_i |u_i|`.
/// Fails if the mesh is not mirror symmetric.
pub fn mirror_defect(disc: &Discretization, field: &StateField, c: usize) -> Result<f64> {
    let key = |x: [f64; 2]| ((x[0] * 1e6).round() as i64, (x[1] * 1e6).round() as i64);
    let mut node_at: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
    for e in 0..disc.num_elements() {
        for i in 0..disc.nodes_per_element() {
            node_at.entry(key(disc.node_position(e, i))).or_default().push((e, i));
        }
    }
    let centroid = |e: usize| {
        let vs = disc.mesh.element_vertices(e);
        let n = vs.len() as f64;
        let s = vs.iter().fold([0.0, 0.0], |s, &v| {
            let x = disc.mesh.vertices()[v];
            [s[0] + x[0], s[1] + x[1]]
        });
        [s[0] / n, s[1] / n]
    };
    let mut element_at: HashMap<(i64, i64), usize> = HashMap::new();
    for e in 0..disc.num_elements() {
        element_at.insert(key(centroid(e)), e);
    }
    let (mut defect, mut total) = (0.0, 0.0);
    for e in 0..disc.num_elements() {
        let ce = centroid(e);
        let mirror_e = *element_at
            .get(&key([ce[0], CHANNEL_WIDTH - ce[1]]))
            .ok_or_else(|| Error::Mesh(format!("element {e} has no mirror image")))?;
        let m = disc.lumped_mass(e);
        for i in 0..disc.nodes_per_element() {
            let x = disc.node_position(e, i);
            let j = node_at
                .get(&key([x[0], CHANNEL_WIDTH - x[1]]))
                .and_then(|v| v.iter().find(|(ee, _)| *ee == mirror_e))
                .map(|&(_, j)| j)
                .ok_or_else(|| Error::Mesh(format!("node {i} of element {e} has no mirror image")))?;
            let (u, v) = (field.element(e)[i][c], field.element(mirror_e)[j][c]);
            defect += m * (u - v).abs();
            total += m * u.abs();
        }
    }
    Ok(if total > 0.0 { defect / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in PresetName::ALL {
            assert_eq!(p.as_str().parse::<PresetName>().unwrap(), p);
        }
        assert!("nope".parse::<PresetName>().is_err());
    }

    #[test]
    fn preset_parameters() {
        let check = |n, dt, t: f64| {
            let p = Preset::new(n);
            assert_eq!(p.dt, dt, "{n}");
            assert_eq!(p.horizon, Horizon::Transient { t_final: t }, "{n}");
        };
        check(PresetName::Advect1dMixed, 1e-3, 1.0);
        check(PresetName::Advect1dSmooth, 1e-4, 2.0);
        check(PresetName::Burgers1d, 4e-4, 0.1);
        check(PresetName::Burgers2d, 1e-3, 0.5);
        check(PresetName::Sod, 4e-4, 0.231);
        check(PresetName::DoubleMach, 5e-5, 0.2);
        check(PresetName::DamBreak, 1e-4, 0.06);
        let ch = Preset::new(PresetName::Channel);
        assert_eq!(ch.dt, 0.025);
        assert!(matches!(ch.horizon, Horizon::Steady { tol, .. } if tol == 1e-12));
        assert!(Preset::new(PresetName::DoubleMach).long);
    }

    #[test]
    fn dof_counts_are_held_fixed() {
        let sod = Preset::new(PresetName::Sod);
        for p in [1, 3, 7, 15] {
            let prob = sod.build(p, None, None).unwrap();
            assert_eq!(prob.disc.num_dofs(), 256);
        }
        let dam = Preset::new(PresetName::DamBreak);
        assert_eq!(dam.default_resolution(1), 64);
        let b2 = Preset::new(PresetName::Burgers2d).build(1, None, None).unwrap();
        assert_eq!(b2.disc.num_dofs(), 128 * 128);
    }

    #[test]
    fn sampled_initial_data_respects_invariant_sets() {
        for preset in Preset::all().into_iter().filter(|p| p.initial_data == InitialData::Sampled) {
            let inv_h = match preset.name {
                PresetName::DoubleMach => 6,
                PresetName::Channel => 6,
                _ => preset.default_resolution(3).min(16),
            };
            let prob = preset.build(3, Some(inv_h), None).unwrap();
            for u in &prob.initial.values {
                prob.disc.law.in_invariant_set(u).unwrap();
            }
        }
    }

    #[test]
    fn dam_break_heights_take_two_values() {
        let prob = Preset::new(PresetName::DamBreak).build(2, Some(8), None).unwrap();
        let mut seen = [false; 2];
        for u in &prob.initial.values {
            assert!(u[0] == 0.1 || u[0] == 1.0);
            seen[(u[0] == 1.0) as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn mixed_profile_coefficients_are_nodal_values() {
        let prob = Preset::new(PresetName::Advect1dMixed).build(1, Some(50), None).unwrap();
        for e in 0..prob.disc.num_elements() {
            for i in 0..2 {
                let u = prob.initial.element(e)[i][0];
                assert!((0.0..=1.0).contains(&u));
            }
        }
        // node at x = 0.3 lies inside the plateau
        assert_eq!(prob.initial.element(15)[0][0], 1.0);
    }

    #[test]
    fn constant_data_gives_constant_coefficients() {
        let prob = Preset::new(PresetName::Channel).build(2, Some(4), None).unwrap();
        assert!(prob.initial.values.iter().all(|u| *u == CHANNEL_INFLOW));
    }

    #[test]
    fn eoc_examples() {
        let r = eoc(&[1e-2, 2.5e-3], &[1.0, 2.0]).unwrap();
        assert!((r[0].unwrap() - 2.0).abs() < 1e-14);
        let r = eoc(&[1.27e-2, 6.43e-3], &[24.0, 32.0]).unwrap();
        assert!((r[0].unwrap() - 2.36).abs() < 1e-2);
        let r = eoc(&[2.59e-4, 1.01e-4], &[128.0, 192.0]).unwrap();
        assert!((r[0].unwrap() - 2.33).abs() < 1e-2);
        assert_eq!(eoc(&[1e-3, 0.0], &[1.0, 2.0]).unwrap(), vec![None]);
        assert!(eoc(&[1e-3], &[1.0]).is_err());
        assert!(eoc(&[1e-3, 1e-4], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn exact_solutions_at_time_zero_match_initial_data() {
        for preset in Preset::all() {
            if let Some(exact) = preset.exact_solution() {
                for x in [0.13, 0.37, 0.61, 0.89] {
                    let pt = [x, 1.0 - x];
                    let a = exact(pt, 0.0).unwrap();
                    let b = preset.initial_condition(pt);
                    assert!((a[0] - b[0]).abs() < 1e-14, "{}", preset.name);
                }
            }
        }
    }

    #[test]
    fn channel_mesh_geometry() {
        let mesh = channel_mesh(24).unwrap();
        assert_eq!(mesh.num_elements(), 2 * 72 * 24);
        let area: f64 = mesh.total_measure();
        // 90 x 40 minus two wedges of base 80 and height 80 tan 5deg
        let wedge = 0.5 * 80.0 * channel_lower_wall(80.0);
        assert!((area - (90.0 * 40.0 - 2.0 * wedge)).abs() < 1e-8);
        let mut tags = HashMap::new();
        for f in mesh.faces().iter().filter(|f| f.second.is_none()) {
            *tags.entry(f.tag).or_insert(0usize) += 1;
        }
        assert_eq!(tags[&BoundaryTag::Inflow], 24);
        assert_eq!(tags[&BoundaryTag::Outflow], 24);
        assert_eq!(tags[&BoundaryTag::Wall], 2 * 72);
        assert!(channel_mesh(5).is_err());
    }

    #[test]
    fn mirror_defect_of_symmetric_field_is_zero() {
        let prob = Preset::new(PresetName::Channel).build(1, Some(6), None).unwrap();
        let mut field = prob.initial.clone();
        for e in 0..prob.disc.num_elements() {
            for i in 0..3 {
                let x = prob.disc.node_position(e, i);
                field.element_mut(e)[i][0] = 1.0 + x[0] * 0.01 + (x[1] - 20.0).abs() * 0.02;
            }
        }
        assert!(mirror_defect(&prob.disc, &field, 0).unwrap() < 1e-14);
        field.element_mut(0)[0][0] += 1.0;
        assert!(mirror_defect(&prob.disc, &field, 0).unwrap() > 0.0);
    }

    #[test]
    fn missing_exact_solution_is_an_error() {
        let prob = Preset::new(PresetName::Sod).build(1, Some(8), None).unwrap();
        assert!(prob.l1_error(&prob.initial, 0.0).is_err());
    }
}
