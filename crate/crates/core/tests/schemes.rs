use mcldg::discretization::{Discretization, StateField};
use mcldg::law::ConservationLaw;
use mcldg::low_order::bar_states;
use mcldg::mesh::{Mesh, QuadBoundarySpec};
use mcldg::time_integration::{ssprk_step, RkMethod};
use mcldg::verify::random_admissible_state;
use mcldg::{Scheme, Solver};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn law(index: usize, dim: usize) -> ConservationLaw {
    match index {
        0 => ConservationLaw::advection([1.0, 0.5], dim).unwrap().with_scalar_range(0.0, 1.0),
        1 => ConservationLaw::burgers(dim).unwrap().with_scalar_range(-1.0, 1.0),
        2 => ConservationLaw::euler(1.4, dim).unwrap(),
        _ => ConservationLaw::shallow_water(9.81, dim).unwrap(),
    }
}

fn periodic(law: ConservationLaw, p: usize, n: usize) -> Discretization {
    let mesh = if law.dim() == 1 {
        Mesh::structured_line(2 * n, [0.0, 1.0], true).unwrap()
    } else {
        Mesh::structured_quad(n, n + 1, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::periodic()).unwrap()
    };
    Discretization::new(mesh, p, law, None).unwrap()
}

fn random_field(disc: &Discretization, rng: &mut StdRng) -> StateField {
    let mut field = disc.zero_field();
    for u in field.values.iter_mut() {
        *u = random_admissible_state(&disc.law, rng);
    }
    field
}

fn rate(solver: &mut Solver, field: &StateField) -> StateField {
    let mut out = solver.discretization().zero_field();
    solver.time_derivative(field, 0.0, &mut out).unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn unlimited_mcl_equals_target(seed in any::<u64>(), p in 1..=3usize) {
        let mut rng = StdRng::seed_from_u64(seed);
        for dim in [1, 2] {
            for l in 0..4 {
                let disc = periodic(law(l, dim), p, 2);
                let field = random_field(&disc, &mut rng);
                let a = rate(&mut Solver::new(&disc, Scheme::Dg), &field);
                let mut mcl = Solver::new(&disc, Scheme::Mcl);
                mcl.set_limiting(false);
                let b = rate(&mut mcl, &field);
                let scale = a.values.iter().flat_map(|u| u.iter()).fold(1.0_f64, |m, x| m.max(x.abs()));
                prop_assert!(a.max_difference(&b) <= 1e-10 * scale, "law {l} dim {dim}: {:e}", a.max_difference(&b));
            }
        }
    }

    /// Interfacial bar states are shared by the two sides of a face.
    #[test]
    fn interfacial_bar_states_agree(seed in any::<u64>(), p in 1..=3usize, l in 0..4usize) {
        let mut rng = StdRng::seed_from_u64(seed);
        let disc = periodic(law(l, 2), p, 2);
        let field = random_field(&disc, &mut rng);
        let data = bar_states(&disc, &field, 0.0).unwrap();
        let fd = disc.reference.face_degree();
        for e in 0..disc.num_elements() {
            for (k, link) in disc.mesh.links(e).iter().enumerate() {
                let nb = link.neighbor.unwrap();
                for a in 0..=fd {
                    let b = if link.reversed { fd - a } else { a };
                    let (s, t) = (k * (fd + 1) + a, nb.local_face * (fd + 1) + b);
                    let (mine, theirs) = (&data[e], &data[nb.element]);
                    prop_assert!((mine.face_d[s] - theirs.face_d[t]).abs() <= 1e-13 * (1.0 + mine.face_d[s]));
                    if mine.face_d[s] > 0.0 {
                        for c in 0..disc.components() {
                            let u = mine.face_bar[s][c] / (2.0 * mine.face_d[s]);
                            let v = theirs.face_bar[t][c] / (2.0 * theirs.face_d[t]);
                            prop_assert!((u - v).abs() <= 1e-13 * (1.0 + u.abs()), "{u} vs {v}");
                        }
                    }
                }
            }
        }
    }
}

/// Forward Euler at the IDP step keeps scalar coefficients inside the
/// global bounds of the start field and, for MCL, inside the local group
/// bounds.
fn scalar_idp(scheme: Scheme, trials: usize, steps: usize) {
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for dim in [1, 2] {
        for l in 0..2 {
            let disc = periodic(law(l, dim), 2, 2);
            let mut solver = Solver::new(&disc, scheme);
            let mut r = disc.zero_field();
            for _ in 0..trials {
                let mut field = random_field(&disc, &mut rng);
                let (lo, hi) = field.range(0);
                for _ in 0..steps {
                    solver.time_derivative(&field, 0.0, &mut r).unwrap();
                    let dt = solver.max_idp_timestep();
                    let (gmin, gmax) = solver.group_bounds();
                    let n = disc.nodes_per_element();
                    for (k, (u, du)) in field.values.iter_mut().zip(&r.values).enumerate() {
                        u[0] += dt * du[0];
                        // group bounds are only assembled by the limiter
                        if scheme == Scheme::Mcl {
                            let g = disc.node_group(k / n, k % n);
                            worst = worst.max(gmin[g][0] - u[0]).max(u[0] - gmax[g][0]);
                        }
                    }
                    let (a, b) = field.range(0);
                    worst = worst.max(lo - a).max(b - hi);
                }
            }
        }
    }
    assert!(worst <= 1e-11, "{scheme}: worst excursion {worst:e}");
}

#[test]
fn low_order_is_idp_for_scalars() {
    scalar_idp(Scheme::Lo, 100, 100);
}

#[test]
fn mcl_is_idp_for_scalars() {
    scalar_idp(Scheme::Mcl, 100, 100);
}

#[test]
fn periodic_totals_survive_many_rk3_steps() {
    let mut rng = StdRng::seed_from_u64(5);
    for scheme in [Scheme::Dg, Scheme::Lo, Scheme::Mcl] {
        for l in 0..4 {
            let disc = periodic(law(l, 2), 2, 3);
            let (a, b) = (random_admissible_state(&disc.law, &mut rng), random_admissible_state(&disc.law, &mut rng));
            let phase: f64 = rng.random_range(0.0..1.0);
            let mut field = disc.sample(|x| {
                let w = 0.5 + 0.5 * (std::f64::consts::TAU * (x[0] + phase)).sin() * (std::f64::consts::TAU * x[1]).cos();
                std::array::from_fn(|c| w * a[c] + (1.0 - w) * b[c])
            });
            let initial = disc.total(&field);
            let mut solver = Solver::new(&disc, scheme);
            let mut lo = Solver::new(&disc, Scheme::Lo);
            rate(&mut lo, &field);
            let dt = 0.5 * lo.max_idp_timestep();
            for n in 0..1000 {
                ssprk_step(|u, t, out| solver.time_derivative(u, t, out), &mut field, n as f64 * dt, dt, RkMethod::Ssprk3)
                    .unwrap();
            }
            let total = disc.total(&field);
            for c in 0..disc.components() {
                assert!((total[c] - initial[c]).abs() < 1e-10, "{scheme} law {l} component {c}: {:e}", total[c] - initial[c]);
            }
        }
    }
}

#[test]
fn constant_states_are_steady() {
    let mut rng = StdRng::seed_from_u64(3);
    for scheme in [Scheme::Dg, Scheme::Lo, Scheme::Mcl] {
        for l in 0..4 {
            let disc = periodic(law(l, 2), 3, 2);
            let u = random_admissible_state(&disc.law, &mut rng);
            let field = disc.sample(|_| u);
            let r = rate(&mut Solver::new(&disc, scheme), &field);
            let worst = r.values.iter().flat_map(|v| v.iter()).fold(0.0_f64, |m, x| m.max(x.abs()));
            // rates scale like |F| / h; the consistent-mass solve adds a few digits
            let flux = disc.law.flux(&u);
            let scale = 1.0 + flux.iter().flat_map(|f| f.iter()).fold(0.0_f64, |m, x| m.max(x.abs()));
            assert!(worst <= 1e-11 * scale, "{scheme} law {l}: {worst:e}");
        }
    }
}
