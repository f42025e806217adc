//! Clip formulas of monolithic convex limiting and the subcell flux
//! decomposition. All formulas take bar states as products `P = 2 d u_bar`
//! and never divide by `d`.
//!
//! Each clip bound is clamped at zero, so a bar state that already lies
//! outside its bounds only forbids fluxes that would push it further out.
//! For the main variable of a system this is exactly the bounds extension
//! by the bar state itself.

use crate::bernstein::ReferenceElement;
use crate::error::{Error, Result};
use crate::law::{State, MAX_COMPONENTS};

/// Inclusive interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub const UNBOUNDED: Bounds = Bounds { min: f64::NEG_INFINITY, max: f64::INFINITY };

    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.min - tol && x <= self.max + tol
    }
}

#[inline]
fn clip_positive(f: f64, cap: f64) -> f64 {
    f.min(cap.max(0.0))
}

#[inline]
fn clip_negative(f: f64, cap: f64) -> f64 {
    f.max(cap.min(0.0))
}

/// Limited volumetric flux `f*_ij` of a scalar quantity. `bar_ij`, `bar_ji`
/// are `2 d u_bar_ij`, `2 d u_bar_ji`; node `i` gains `f*` and node `j`
/// loses it.
pub fn limit_volume_scalar(f: f64, d: f64, bar_ij: f64, bar_ji: f64, bi: Bounds, bj: Bounds) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let d2 = 2.0 * d;
    if f >= 0.0 {
        clip_positive(f, (d2 * bi.max - bar_ij).min(bar_ji - d2 * bj.min))
    } else {
        clip_negative(f, (d2 * bi.min - bar_ij).max(bar_ji - d2 * bj.max))
    }
}

/// Limited interfacial flux `f*_ik` of a scalar quantity. `bar` is
/// `2 d_ik u_bar_ik`, shared with the partner node.
pub fn limit_face_scalar(f: f64, d: f64, bar: f64, b: Bounds) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let d2 = 2.0 * d;
    if f >= 0.0 {
        clip_positive(f, (d2 * b.max - bar).min(bar - d2 * b.min))
    } else {
        clip_negative(f, (d2 * b.min - bar).max(bar - d2 * b.max))
    }
}

/// Main-variable data of one volumetric pair or face slot for the
/// sequential limiter.
#[derive(Debug, Clone, Copy)]
pub struct MainVariable {
    /// `2 d rho_bar` (for pairs: of the `ij` orientation).
    pub bar: f64,
    /// `2 d rho_bar_ji`; unused for faces.
    pub bar_reverse: f64,
    /// Limited main-variable flux `f*_rho`.
    pub limited: f64,
}

/// Limiting of a degenerate main-variable bar state.
#[derive(Debug, Clone, Copy)]
pub struct DegeneracyGuard {
    /// `rho_bar*` below this freezes the product flux at its low-order split.
    pub floor: f64,
    /// `rho_bar*` below `-tolerance` is an invariant violation.
    pub tolerance: f64,
}

impl DegeneracyGuard {
    pub fn for_scale(scale: f64) -> Self {
        let s = scale.abs().max(f64::MIN_POSITIVE);
        Self { floor: 1e-12 * s, tolerance: 1e-10 * s }
    }

    fn check(&self, limited_bar: f64, d2: f64) -> Result<bool> {
        let rho = limited_bar / d2;
        if rho < -self.tolerance {
            return Err(Error::InvariantViolation { quantity: "limited main-variable bar state", value: rho, location: None });
        }
        Ok(rho >= self.floor)
    }
}

/// Sequentially limited volumetric flux of a product `(rho phi)` for pair
/// `ij`. `bar` / `bar_reverse` are `2 d (rho phi)_bar_ij` and `_ji`.
#[allow(clippy::too_many_arguments)]
pub fn limit_volume_sequential(
    f: f64,
    d: f64,
    bar: f64,
    bar_reverse: f64,
    main: MainVariable,
    phi_i: Bounds,
    phi_j: Bounds,
    guard: DegeneracyGuard,
) -> Result<f64> {
    if d == 0.0 {
        return Ok(0.0);
    }
    let d2 = 2.0 * d;
    let denom = main.bar + main.bar_reverse;
    if denom <= 0.0 {
        return Err(Error::InvariantViolation { quantity: "main-variable bar state", value: denom / (2.0 * d2), location: None });
    }
    let phi_bar = (bar + bar_reverse) / denom;
    let r_ij = main.bar + main.limited;
    let r_ji = main.bar_reverse - main.limited;
    let base = r_ij * phi_bar - bar;
    let g = f - base;
    let (gmin_ij, gmax_ij) = if guard.check(r_ij, d2)? {
        (r_ij * (phi_i.min - phi_bar), r_ij * (phi_i.max - phi_bar))
    } else {
        (0.0, 0.0)
    };
    let (gmin_ji, gmax_ji) = if guard.check(r_ji, d2)? {
        (r_ji * (phi_j.min - phi_bar), r_ji * (phi_j.max - phi_bar))
    } else {
        (0.0, 0.0)
    };
    let g_star = if g >= 0.0 { clip_positive(g, gmax_ij.min(-gmin_ji)) } else { clip_negative(g, gmin_ij.max(-gmax_ji)) };
    Ok(base + g_star)
}

/// Sequentially limited interfacial flux of a product `(rho phi)`, seen
/// from one side of the face. With `two_sided` the partner's limited main
/// bar state constrains the flux as well, which keeps the correction
/// conservative; boundary faces use the own-side form.
pub fn limit_face_sequential(
    f: f64,
    d: f64,
    bar: f64,
    main: MainVariable,
    phi: Bounds,
    two_sided: bool,
    guard: DegeneracyGuard,
) -> Result<f64> {
    if d == 0.0 {
        return Ok(0.0);
    }
    let d2 = 2.0 * d;
    if main.bar <= 0.0 {
        return Err(Error::InvariantViolation { quantity: "main-variable bar state", value: main.bar / d2, location: None });
    }
    let phi_bar = bar / main.bar;
    let r_own = main.bar + main.limited;
    let r_other = if two_sided { main.bar - main.limited } else { r_own };
    let base = r_own * phi_bar - bar;
    let g = f - base;
    let (gmin, gmax) = if guard.check(r_own, d2)? { (r_own * (phi.min - phi_bar), r_own * (phi.max - phi_bar)) } else { (0.0, 0.0) };
    let (gmin_o, gmax_o) =
        if guard.check(r_other, d2)? { (r_other * (phi.min - phi_bar), r_other * (phi.max - phi_bar)) } else { (0.0, 0.0) };
    let g_star = if g >= 0.0 { clip_positive(g, gmax.min(-gmin_o)) } else { clip_negative(g, gmin.max(-gmax_o)) };
    Ok(base + g_star)
}

/// Split element fluxes `f_i` (zero sum) into pairwise fluxes
/// `f_ij = m_ij (v_i - v_j) + d_ij (u_i - u_j)` on the reference pair list.
/// `scale` bounds the magnitude of the terms `f_i` was assembled from and
/// sets the tolerance of the zero-sum check.
pub fn decompose_element_fluxes(
    reference: &ReferenceElement,
    f: &[State],
    u: &[State],
    pair_d: &[f64],
    components: usize,
    scale: &State,
    out: &mut [State],
) -> Result<()> {
    let n = reference.num_nodes;
    for c in 0..components {
        let sum: f64 = f.iter().map(|x| x[c]).sum();
        if sum.abs() > 1e-8 * scale[c] + 1e-300 {
            return Err(Error::InvariantViolation { quantity: "element flux sum", value: sum, location: None });
        }
    }
    let mut q = f[..n].to_vec();
    for (p, pair) in reference.pairs.iter().enumerate() {
        let d = pair_d[p];
        for c in 0..components {
            let du = u[pair.j][c] - u[pair.i][c];
            q[pair.i][c] += d * du;
            q[pair.j][c] -= d * du;
        }
    }
    // the last row of the Poisson matrix fixes the free constant
    q[n - 1] = [0.0; MAX_COMPONENTS];
    let pinv = &reference.subcell.poisson_inverse;
    let mut v = vec![[0.0; MAX_COMPONENTS]; n];
    for i in 0..n {
        for j in 0..n {
            let a = pinv[(i, j)];
            if a != 0.0 {
                for c in 0..components {
                    v[i][c] += a * q[j][c];
                }
            }
        }
    }
    for (p, pair) in reference.pairs.iter().enumerate() {
        let d = pair_d[p];
        let mass = pair.subcell_mass;
        for c in 0..components {
            out[p][c] = mass * (v[pair.i][c] - v[pair.j][c]) + d * (u[pair.i][c] - u[pair.j][c]);
        }
    }
    Ok(())
}
