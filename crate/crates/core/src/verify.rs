//! Randomized self-checks of the structural properties the schemes rely
//! on. Each check reports instead of panicking so that a driver can print
//! a summary and choose an exit status.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use nalgebra::DMatrix;

use crate::benchmarks::{channel_mesh, Preset};
use crate::bernstein::ReferenceElement;
use crate::limiter::{limit_face_scalar, limit_volume_scalar, Bounds};
use crate::time_integration::{ssprk_step, RkMethod};
use crate::discretization::{Discretization, StateField};
use crate::error::Result;
use crate::law::{ConservationLaw, LawKind, State};
use crate::mesh::{ElementKind, Mesh, QuadBoundarySpec};
use crate::solver::{Scheme, Solver};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Random fields per randomized check.
    pub trials: usize,
    /// Forward Euler steps per IDP trial.
    pub steps: usize,
    /// Include presets flagged as long running in the time step check.
    pub include_long: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { trials: 100, steps: 100, include_long: false, seed: 2024 }
    }
}

pub fn run_checks(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut out = vec![
        face_pairing()?,
        partition_of_unity(&mut rng)?,
        gradient_oracle()?,
        flux_consistency(&mut rng)?,
        unlimited_equivalence(&mut rng, opts.trials.min(50))?,
    ];
    out.extend(conservation(&mut rng)?);
    out.push(long_run_conservation(&mut rng, 10 * opts.steps)?);
    out.extend(scalar_idp(&mut rng, opts)?);
    out.push(limiter_oracle(&mut rng, 100 * opts.trials)?);
    out.extend(preset_timesteps(opts.include_long)?);
    Ok(out)
}

fn face_pairing() -> Result<CheckOutcome> {
    let meshes = [
        Mesh::structured_line(5, [0.0, 1.0], true)?,
        Mesh::structured_quad(4, 3, [[0.0, 1.0], [0.0, 2.0]], &QuadBoundarySpec::periodic())?,
        channel_mesh(4)?,
    ];
    let mut worst: f64 = 0.0;
    let mut involution = true;
    for mesh in &meshes {
        for e in 0..mesh.num_elements() {
            let mut closure = [0.0; 2];
            for (k, link) in mesh.links(e).iter().enumerate() {
                closure[0] += link.measure * link.normal[0];
                closure[1] += link.measure * link.normal[1];
                if let Some(nb) = link.neighbor {
                    let back = mesh.links(nb.element)[nb.local_face];
                    involution &= back.neighbor.is_some_and(|s| s.element == e && s.local_face == k);
                    worst = worst.max((back.normal[0] + link.normal[0]).abs()).max((back.normal[1] + link.normal[1]).abs());
                }
            }
            worst = worst.max(closure[0].abs()).max(closure[1].abs());
        }
    }
    Ok(CheckOutcome::new(
        "mesh faces pair up with opposite normals and close",
        involution && worst <= 1e-12,
        format!("involution {involution}, worst defect {worst:.2e}"),
    ))
}

fn random_reference_point(kind: ElementKind, rng: &mut StdRng) -> [f64; 2] {
    match kind {
        ElementKind::Line => [rng.random(), 0.0],
        ElementKind::Quadrilateral => [rng.random(), rng.random()],
        ElementKind::Triangle => {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            if a + b > 1.0 { [1.0 - a, 1.0 - b] } else { [a, b] }
        }
    }
}

fn partition_of_unity(rng: &mut StdRng) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for kind in [ElementKind::Line, ElementKind::Quadrilateral, ElementKind::Triangle] {
        for p in 1..=4 {
            let reference = ReferenceElement::new(kind, p)?;
            let mut values = vec![0.0; reference.num_nodes];
            for _ in 0..1000 {
                reference.eval_all(random_reference_point(kind, rng), &mut values, None);
                worst = worst.max((values.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    Ok(CheckOutcome::new("Bernstein basis is a partition of unity", worst <= 1e-12, format!("worst {worst:.2e}")))
}

/// `M_L M_C^{-1} C_k` assembled densely from quadrature.
pub fn dense_preconditioned_gradient(reference: &ReferenceElement) -> Result<[DMatrix<f64>; 2]> {
    let mass = reference.mass_matrix();
    let lumped = DMatrix::from_diagonal(&mass.column_sum());
    let inverse = mass.try_inverse().ok_or_else(|| crate::Error::InvalidInput("singular mass matrix".into()))?;
    let [c0, c1] = reference.gradient_matrices();
    Ok([&lumped * &inverse * c0, &lumped * &inverse * c1])
}

/// Compares the sparse preconditioned gradient against the dense oracle,
/// checks zero row sums and that nonzeros stay on the nearest-neighbor
/// stencil (the Cartesian cross on boxes).
fn gradient_oracle() -> Result<CheckOutcome> {
    let (mut oracle, mut rows, mut stencil) = (0.0_f64, 0.0_f64, true);
    for kind in [ElementKind::Line, ElementKind::Quadrilateral, ElementKind::Triangle] {
        for p in 1..=3 {
            let reference = ReferenceElement::new(kind, p)?;
            let dense = dense_preconditioned_gradient(&reference)?;
            for (k, d) in dense.iter().enumerate().take(reference.dim()) {
                let sparse = reference.gradient.to_dense(k);
                oracle = oracle.max((&sparse - d).amax() / d.amax().max(1e-300));
                for i in 0..reference.num_nodes {
                    rows = rows.max(sparse.row(i).sum().abs());
                    for j in 0..reference.num_nodes {
                        if i != j && !reference.stencils[i].contains(&j) {
                            stencil &= sparse[(i, j)] == 0.0 && d[(i, j)].abs() <= 1e-10;
                        }
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        "preconditioned gradient matches the dense oracle on its stencil",
        oracle <= 1e-8 && rows <= 1e-12 && stencil,
        format!("relative oracle defect {oracle:.2e}, worst row sum {rows:.2e}, stencil sparsity {stencil}"),
    ))
}

/// A random state inside the invariant set of `law`.
pub fn random_admissible_state(law: &ConservationLaw, rng: &mut StdRng) -> State {
    let mut u = [0.0; crate::law::MAX_COMPONENTS];
    let dim = law.dim();
    let mut velocity = [0.0_f64; 2];
    for v in velocity.iter_mut().take(dim) {
        *v = rng.random_range(-1.0..1.0);
    }
    match law.kind() {
        LawKind::Advection { .. } => u[0] = rng.random_range(0.0..1.0),
        LawKind::Burgers => u[0] = rng.random_range(-1.0..1.0),
        LawKind::Euler { gamma } => {
            let rho = rng.random_range(0.1..2.0);
            let p = rng.random_range(0.1..2.0);
            u[0] = rho;
            for d in 0..dim {
                u[1 + d] = rho * velocity[d];
            }
            u[dim + 1] = p / (gamma - 1.0) + 0.5 * rho * (velocity[0].powi(2) + velocity[1].powi(2));
        }
        LawKind::ShallowWater { .. } => {
            let h = rng.random_range(0.1..2.0);
            u[0] = h;
            for d in 0..dim {
                u[1 + d] = h * velocity[d];
            }
        }
    }
    u
}

fn test_laws(dim: usize) -> Result<Vec<ConservationLaw>> {
    Ok(vec![
        ConservationLaw::advection([1.0, 0.5], dim)?.with_scalar_range(0.0, 1.0),
        ConservationLaw::burgers(dim)?.with_scalar_range(-1.0, 1.0),
        ConservationLaw::euler(1.4, dim)?,
        ConservationLaw::shallow_water(9.81, dim)?,
    ])
}

fn flux_consistency(rng: &mut StdRng) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for law in test_laws(2)? {
        let m = law.num_components();
        for _ in 0..10_000 {
            let u = random_admissible_state(&law, rng);
            let v = random_admissible_state(&law, rng);
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let n = [angle.cos(), angle.sin()];
            let exact = law.normal_flux(&law.flux(&u), n);
            let same = law.lax_friedrichs(&u, &u, n);
            let forward = law.lax_friedrichs(&u, &v, n);
            let backward = law.lax_friedrichs(&v, &u, [-n[0], -n[1]]);
            for c in 0..m {
                let scale = 1.0 + exact[c].abs() + forward[c].abs();
                worst = worst.max((same[c] - exact[c]).abs() / scale).max((forward[c] + backward[c]).abs() / scale);
            }
        }
    }
    Ok(CheckOutcome::new("Lax-Friedrichs flux is consistent and conservative", worst <= 1e-13, format!("worst {worst:.2e}")))
}

fn random_field(disc: &Discretization, rng: &mut StdRng) -> StateField {
    let mut field = disc.zero_field();
    for u in field.values.iter_mut() {
        *u = random_admissible_state(&disc.law, rng);
    }
    field
}

fn periodic_disc(law: ConservationLaw, p: usize) -> Result<Discretization> {
    let mesh = if law.dim() == 1 {
        Mesh::structured_line(6, [0.0, 1.0], true)?
    } else {
        Mesh::structured_quad(3, 3, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::periodic())?
    };
    Discretization::new(mesh, p, law, None)
}

fn conservation(rng: &mut StdRng) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for scheme in [Scheme::Dg, Scheme::Lo, Scheme::Mcl] {
        let mut worst: f64 = 0.0;
        for law in test_laws(2)? {
            let disc = periodic_disc(law, 2)?;
            let mut solver = Solver::new(&disc, scheme);
            let mut rate = disc.zero_field();
            for _ in 0..10 {
                let field = random_field(&disc, rng);
                solver.time_derivative(&field, 0.0, &mut rate)?;
                let total = disc.total(&rate);
                let scale = 1.0 + disc.total(&field).iter().map(|x| x.abs()).fold(0.0, f64::max);
                worst = worst.max(total.iter().map(|x| x.abs()).fold(0.0, f64::max) / scale);
            }
        }
        out.push(CheckOutcome::new(
            format!("{scheme} right-hand side conserves mass on periodic meshes"),
            worst <= 1e-11,
            format!("worst {worst:.2e}"),
        ));
    }
    Ok(out)
}

fn unlimited_equivalence(rng: &mut StdRng, fields: usize) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for dim in [1, 2] {
        for law in test_laws(dim)? {
            let disc = periodic_disc(law, 3)?;
            let mut target = Solver::new(&disc, Scheme::Dg);
            let mut unlimited = Solver::new(&disc, Scheme::Mcl);
            unlimited.set_limiting(false);
            let (mut a, mut b) = (disc.zero_field(), disc.zero_field());
            for _ in 0..fields {
                let field = random_field(&disc, rng);
                target.time_derivative(&field, 0.0, &mut a)?;
                unlimited.time_derivative(&field, 0.0, &mut b)?;
                let scale = a.values.iter().flat_map(|u| u.iter()).fold(1.0_f64, |m, x| m.max(x.abs()));
                worst = worst.max(a.max_difference(&b) / scale);
            }
        }
    }
    Ok(CheckOutcome::new("unlimited MCL reproduces the target scheme", worst <= 1e-10, format!("worst relative {worst:.2e}")))
}

/// Total of every component over `steps` SSP-RK3 steps of MCL on a
/// periodic mesh, from a smooth random start.
fn long_run_conservation(rng: &mut StdRng, steps: usize) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for law in test_laws(2)? {
        let disc = periodic_disc(law, 2)?;
        let (a, b) = (random_admissible_state(&disc.law, rng), random_admissible_state(&disc.law, rng));
        let mut field = disc.sample(|x| {
            let w = 0.5 + 0.5 * (std::f64::consts::TAU * x[0]).sin() * (std::f64::consts::TAU * x[1]).cos();
            std::array::from_fn(|c| w * a[c] + (1.0 - w) * b[c])
        });
        let initial = disc.total(&field);
        let mut solver = Solver::new(&disc, Scheme::Mcl);
        let mut probe = disc.zero_field();
        solver.time_derivative(&field, 0.0, &mut probe)?;
        let dt = 0.5 * solver.max_idp_timestep();
        for n in 0..steps {
            ssprk_step(|u, t, out| solver.time_derivative(u, t, out), &mut field, n as f64 * dt, dt, RkMethod::Ssprk3)?;
        }
        let total = disc.total(&field);
        for c in 0..disc.components() {
            worst = worst.max((total[c] - initial[c]).abs());
        }
    }
    Ok(CheckOutcome::new(
        format!("MCL keeps periodic totals over {steps} SSP-RK3 steps"),
        worst < 1e-10,
        format!("worst drift {worst:.2e}"),
    ))
}

/// Largest-magnitude `g` between 0 and `f` with every constraint in
/// `feasible` satisfied; the feasible set is an interval containing 0, so
/// the optimum is 0, `f` or a point where one constraint is tight.
fn brute_force_clip(f: f64, tight: &[f64], feasible: impl Fn(f64) -> bool) -> f64 {
    let (lo, hi) = if f >= 0.0 { (0.0, f) } else { (f, 0.0) };
    std::iter::once(f)
        .chain(tight.iter().map(|&g| g.clamp(lo, hi)))
        .chain(std::iter::once(0.0))
        .filter(|&g| g == 0.0 || feasible(g))
        .fold(0.0, |best: f64, g| if g.abs() > best.abs() { g } else { best })
}

fn limiter_oracle(rng: &mut StdRng, cases: usize) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let bounds = |rng: &mut StdRng| {
        let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        Bounds::new(a.min(b), a.max(b))
    };
    for _ in 0..cases {
        let d: f64 = rng.random_range(1e-3..2.0);
        let d2 = 2.0 * d;
        let f: f64 = rng.random_range(-5.0..5.0);
        let (bi, bj) = (bounds(rng), bounds(rng));
        let ui = rng.random_range(bi.min..=bi.max);
        let uj = rng.random_range(bj.min..=bj.max);
        let tol = 1e-13 * (1.0 + f.abs());
        let inside = |b: Bounds, u: f64| u >= b.min - tol / d2 && u <= b.max + tol / d2;

        let limited = limit_volume_scalar(f, d, d2 * ui, d2 * uj, bi, bj);
        let tight = [d2 * (bi.max - ui), d2 * (bi.min - ui), d2 * (uj - bj.min), d2 * (uj - bj.max)];
        let best = brute_force_clip(f, &tight, |g| inside(bi, ui + g / d2) && inside(bj, uj - g / d2));
        worst = worst.max((limited - best).abs() / (1.0 + f.abs()));

        let limited = limit_face_scalar(f, d, d2 * ui, bi);
        let tight = [d2 * (bi.max - ui), d2 * (bi.min - ui), d2 * (ui - bi.min), d2 * (ui - bi.max)];
        let best = brute_force_clip(f, &tight, |g| inside(bi, ui + g / d2) && inside(bi, ui - g / d2));
        worst = worst.max((limited - best).abs() / (1.0 + f.abs()));
    }
    Ok(CheckOutcome::new(
        "clip formulas equal the brute-force constrained maximizer",
        worst <= 1e-12,
        format!("{cases} cases, worst {worst:.2e}"),
    ))
}

fn scalar_idp(rng: &mut StdRng, opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for scheme in [Scheme::Lo, Scheme::Mcl] {
        let mut worst: f64 = 0.0;
        for dim in [1, 2] {
            for law in test_laws(dim)?.into_iter().take(2) {
                let disc = periodic_disc(law, 2)?;
                let mut solver = Solver::new(&disc, scheme);
                let mut rate = disc.zero_field();
                for _ in 0..opts.trials {
                    let mut field = random_field(&disc, rng);
                    let (lo, hi) = field.range(0);
                    for _ in 0..opts.steps {
                        solver.time_derivative(&field, 0.0, &mut rate)?;
                        let dt = solver.max_idp_timestep();
                        for (u, r) in field.values.iter_mut().zip(&rate.values) {
                            u[0] += dt * r[0];
                        }
                        let (a, b) = field.range(0);
                        worst = worst.max(lo - a).max(b - hi);
                    }
                }
            }
        }
        out.push(CheckOutcome::new(
            format!("{scheme} forward Euler at the IDP step keeps scalar bounds"),
            worst <= 1e-11,
            format!("worst excursion {worst:.2e}"),
        ));
    }
    Ok(out)
}

fn preset_timesteps(include_long: bool) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for preset in Preset::all() {
        if preset.long && !include_long {
            continue;
        }
        let problem = preset.build(preset.default_degree, None, None)?;
        let mut solver = Solver::new(&problem.disc, Scheme::Lo);
        let mut rate = problem.disc.zero_field();
        solver.time_derivative(&problem.initial, 0.0, &mut rate)?;
        let bound = solver.max_idp_timestep();
        out.push(CheckOutcome::new(
            format!("{} preset step respects the low-order IDP bound", preset.name),
            preset.dt <= bound,
            format!("dt {:.3e}, bound {bound:.3e}", preset.dt),
        ));
    }
    Ok(out)
}
