//! Conservation laws: physical fluxes, wave-speed bounds, the local
//! Lax-Friedrichs flux, admissibility checks, boundary ghost states and the
//! roles used by sequential limiting.
//!
//! States are stored in fixed `[f64; 4]` arrays; only the first
//! [`ConservationLaw::num_components`] entries are meaningful.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::BoundaryTag;

pub const MAX_COMPONENTS: usize = 4;

pub type State = [f64; MAX_COMPONENTS];
/// Row `c` holds the flux of component `c` in each spatial direction.
pub type Flux = [[f64; 2]; MAX_COMPONENTS];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawKind {
    Advection { velocity: [f64; 2] },
    /// Flux `v u^2 / 2` with `v = (1, 1)`; in 1D only the first entry acts.
    Burgers,
    Euler { gamma: f64 },
    ShallowWater { gravity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationLaw {
    kind: LawKind,
    dim: usize,
    /// Admissible interval for scalar laws.
    scalar_range: Option<(f64, f64)>,
}

impl ConservationLaw {
    pub fn new(kind: LawKind, dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!("unsupported dimension {dim}")));
        }
        match kind {
            LawKind::Euler { gamma } if gamma.partial_cmp(&1.0) != Some(std::cmp::Ordering::Greater) => {
                return Err(Error::InvalidInput(format!("ratio of specific heats must exceed 1, got {gamma}")));
            }
            LawKind::ShallowWater { gravity } if gravity.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) => {
                return Err(Error::InvalidInput(format!("gravity must be positive, got {gravity}")));
            }
            _ => {}
        }
        Ok(Self { kind, dim, scalar_range: None })
    }

    pub fn advection(velocity: [f64; 2], dim: usize) -> Result<Self> {
        Self::new(LawKind::Advection { velocity }, dim)
    }

    pub fn burgers(dim: usize) -> Result<Self> {
        Self::new(LawKind::Burgers, dim)
    }

    pub fn euler(gamma: f64, dim: usize) -> Result<Self> {
        Self::new(LawKind::Euler { gamma }, dim)
    }

    pub fn shallow_water(gravity: f64, dim: usize) -> Result<Self> {
        Self::new(LawKind::ShallowWater { gravity }, dim)
    }

    /// Attach an admissible interval used by [`Self::in_invariant_set`] for
    /// scalar laws.
    pub fn with_scalar_range(mut self, lo: f64, hi: f64) -> Self {
        self.scalar_range = Some((lo, hi));
        self
    }

    pub fn scalar_range(&self) -> Option<(f64, f64)> {
        self.scalar_range
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_components(&self) -> usize {
        match self.kind {
            LawKind::Advection { .. } | LawKind::Burgers => 1,
            LawKind::Euler { .. } => self.dim + 2,
            LawKind::ShallowWater { .. } => self.dim + 1,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.num_components() == 1
    }

    /// Index of the main variable for sequential limiting (systems only).
    pub fn main_variable(&self) -> Option<usize> {
        if self.is_scalar() {
            None
        } else {
            Some(0)
        }
    }

    /// Conserved products limited through their specific counterparts.
    pub fn product_variables(&self) -> std::ops::Range<usize> {
        if self.is_scalar() {
            0..0
        } else {
            1..self.num_components()
        }
    }

    /// Physical flux; rejects states outside the domain of definition.
    pub fn try_flux(&self, u: &State) -> Result<Flux> {
        self.check_domain(u)?;
        Ok(self.flux(u))
    }

    /// Physical flux without admissibility checks.
    #[inline]
    pub fn flux(&self, u: &State) -> Flux {
        let mut f = [[0.0; 2]; MAX_COMPONENTS];
        match self.kind {
            LawKind::Advection { velocity } => {
                f[0] = [velocity[0] * u[0], if self.dim == 2 { velocity[1] * u[0] } else { 0.0 }];
            }
            LawKind::Burgers => {
                let half = 0.5 * u[0] * u[0];
                f[0] = [half, if self.dim == 2 { half } else { 0.0 }];
            }
            LawKind::Euler { gamma } => {
                let rho = u[0];
                if self.dim == 1 {
                    let v = u[1] / rho;
                    let p = (gamma - 1.0) * (u[2] - 0.5 * u[1] * v);
                    f[0][0] = u[1];
                    f[1][0] = u[1] * v + p;
                    f[2][0] = (u[2] + p) * v;
                } else {
                    let (vx, vy) = (u[1] / rho, u[2] / rho);
                    let p = (gamma - 1.0) * (u[3] - 0.5 * (u[1] * vx + u[2] * vy));
                    f[0] = [u[1], u[2]];
                    f[1] = [u[1] * vx + p, u[1] * vy];
                    f[2] = [u[2] * vx, u[2] * vy + p];
                    f[3] = [(u[3] + p) * vx, (u[3] + p) * vy];
                }
            }
            LawKind::ShallowWater { gravity } => {
                let h = u[0];
                let hydro = 0.5 * gravity * h * h;
                if self.dim == 1 {
                    let v = u[1] / h;
                    f[0][0] = u[1];
                    f[1][0] = u[1] * v + hydro;
                } else {
                    let (vx, vy) = (u[1] / h, u[2] / h);
                    f[0] = [u[1], u[2]];
                    f[1] = [u[1] * vx + hydro, u[1] * vy];
                    f[2] = [u[2] * vx, u[2] * vy + hydro];
                }
            }
        }
        f
    }

    /// Pressure of an Euler state (zero for other laws).
    pub fn pressure(&self, u: &State) -> f64 {
        match self.kind {
            LawKind::Euler { gamma } => {
                let kinetic = self.kinetic_energy(u);
                (gamma - 1.0) * (u[self.dim + 1] - kinetic)
            }
            _ => 0.0,
        }
    }

    fn kinetic_energy(&self, u: &State) -> f64 {
        let m2: f64 = (1..=self.dim).map(|k| u[k] * u[k]).sum();
        0.5 * m2 / u[0]
    }

    /// Normal velocity and sound (or gravity wave) speed.
    #[inline]
    fn normal_velocity_and_celerity(&self, u: &State, n: [f64; 2]) -> (f64, f64) {
        let vn = if self.dim == 1 { u[1] * n[0] } else { u[1] * n[0] + u[2] * n[1] } / u[0];
        let c = match self.kind {
            LawKind::Euler { gamma } => {
                let p = (gamma - 1.0) * (u[self.dim + 1] - self.kinetic_energy(u));
                (gamma * p / u[0]).max(0.0).sqrt()
            }
            LawKind::ShallowWater { gravity } => (gravity * u[0]).max(0.0).sqrt(),
            _ => 0.0,
        };
        (vn, c)
    }

    /// Upper bound for the fastest wave speed in the Riemann fan of `u`, `v`.
    /// Exact for advection and Burgers; the two-state Davis estimate for
    /// systems.
    #[inline]
    pub fn max_wave_speed(&self, u: &State, v: &State, n: [f64; 2]) -> f64 {
        match self.kind {
            LawKind::Advection { velocity } => {
                let an = if self.dim == 1 { velocity[0] * n[0] } else { velocity[0] * n[0] + velocity[1] * n[1] };
                an.abs()
            }
            LawKind::Burgers => {
                let sum = if self.dim == 1 { n[0] } else { n[0] + n[1] };
                u[0].abs().max(v[0].abs()) * sum.abs()
            }
            LawKind::Euler { .. } | LawKind::ShallowWater { .. } => {
                let (vu, cu) = self.normal_velocity_and_celerity(u, n);
                let (vv, cv) = self.normal_velocity_and_celerity(v, n);
                (vu.abs() + cu).max(vv.abs() + cv)
            }
        }
    }

    /// `F(u) n` for the first `m` components.
    #[inline]
    pub fn normal_flux(&self, f: &Flux, n: [f64; 2]) -> State {
        let mut out = [0.0; MAX_COMPONENTS];
        for c in 0..self.num_components() {
            out[c] = f[c][0] * n[0] + f[c][1] * n[1];
        }
        out
    }

    /// Local Lax-Friedrichs flux. Evaluated so that
    /// `H(u, v; n) = -H(v, u; -n)` holds exactly in floating point.
    #[inline]
    pub fn lax_friedrichs(&self, u: &State, v: &State, n: [f64; 2]) -> State {
        let (fu, fv) = (self.flux(u), self.flux(v));
        self.lax_friedrichs_with_fluxes(u, v, &fu, &fv, n)
    }

    #[inline]
    pub fn lax_friedrichs_with_fluxes(&self, u: &State, v: &State, fu: &Flux, fv: &Flux, n: [f64; 2]) -> State {
        let lambda = self.max_wave_speed(u, v, n);
        let mut out = [0.0; MAX_COMPONENTS];
        for c in 0..self.num_components() {
            let avg = (fu[c][0] + fv[c][0]) * n[0] + (fu[c][1] + fv[c][1]) * n[1];
            out[c] = 0.5 * avg + 0.5 * lambda * (u[c] - v[c]);
        }
        out
    }

    fn check_domain(&self, u: &State) -> Result<()> {
        match self.kind {
            LawKind::Euler { .. } if u[0].partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) => {
                Err(Error::InvariantViolation { quantity: "density", value: u[0], location: None })
            }
            LawKind::ShallowWater { .. } if u[0].partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) => {
                Err(Error::InvariantViolation { quantity: "water height", value: u[0], location: None })
            }
            _ => Ok(()),
        }
    }

    /// Admissibility check: interval membership for scalars (when a range
    /// is configured), positive density and internal energy for Euler,
    /// positive water height for shallow water.
    pub fn in_invariant_set(&self, u: &State) -> Result<()> {
        for c in 0..self.num_components() {
            if !u[c].is_finite() {
                return Err(Error::InvariantViolation { quantity: "finite state", value: u[c], location: None });
            }
        }
        match self.kind {
            LawKind::Advection { .. } | LawKind::Burgers => match self.scalar_range {
                Some((lo, _)) if u[0] < lo => Err(Error::InvariantViolation { quantity: "lower bound", value: u[0], location: None }),
                Some((_, hi)) if u[0] > hi => Err(Error::InvariantViolation { quantity: "upper bound", value: u[0], location: None }),
                _ => Ok(()),
            },
            LawKind::Euler { .. } => {
                self.check_domain(u)?;
                let e = (u[self.dim + 1] - self.kinetic_energy(u)) / u[0];
                if e > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvariantViolation { quantity: "specific internal energy", value: e, location: None })
                }
            }
            LawKind::ShallowWater { .. } => self.check_domain(u),
        }
    }

    /// Specific entropy `log(e^(1/(gamma-1)) / rho)` of an Euler state,
    /// reported for diagnostics only.
    pub fn specific_entropy(&self, u: &State) -> Option<f64> {
        match self.kind {
            LawKind::Euler { gamma } => {
                let e = (u[self.dim + 1] - self.kinetic_energy(u)) / u[0];
                Some((e.powf(1.0 / (gamma - 1.0)) / u[0]).ln())
            }
            _ => None,
        }
    }

    /// Ghost state outside a boundary face. `inflow` supplies prescribed
    /// data and is only called for inflow faces.
    pub fn ghost_state(
        &self,
        tag: BoundaryTag,
        inner: &State,
        n: [f64; 2],
        inflow: impl FnOnce() -> Option<State>,
    ) -> Result<State> {
        match tag {
            BoundaryTag::Inflow => inflow().ok_or_else(|| Error::Config("inflow boundary without prescribed data".into())),
            BoundaryTag::Outflow => Ok(*inner),
            BoundaryTag::Wall => {
                let mut g = *inner;
                if !self.is_scalar() {
                    let mn = if self.dim == 1 { inner[1] * n[0] } else { inner[1] * n[0] + inner[2] * n[1] };
                    g[1] -= 2.0 * mn * n[0];
                    if self.dim == 2 {
                        g[2] -= 2.0 * mn * n[1];
                    }
                }
                Ok(g)
            }
            BoundaryTag::Interior | BoundaryTag::Periodic => {
                Err(Error::InvalidInput(format!("no ghost state for {tag:?} faces")))
            }
        }
    }
}

/// `exp(-25 x^2)`.
pub fn gaussian_pulse(x: f64) -> f64 {
    (-25.0 * x * x).exp()
}

/// Step plus smooth bump on `(0, 1)`.
pub fn step_and_bump(x: f64) -> f64 {
    if (0.2..=0.4).contains(&x) {
        1.0
    } else if x > 0.5 && x < 0.9 {
        // peak value 1 at x = 0.7; clamp the rounding overshoot
        (10.0 + 1.0 / (0.5 - x) + 1.0 / (x - 0.9)).exp().min(1.0)
    } else {
        0.0
    }
}

/// Periodic wrap of `x` into `[a, b)`.
pub fn wrap_periodic(x: f64, a: f64, b: f64) -> f64 {
    let len = b - a;
    a + (x - a).rem_euclid(len)
}

/// Classical solution of the 1D Burgers equation with data `sin(2 pi x)`,
/// valid before shock formation at `t = 1 / (2 pi)`.
pub fn burgers_sine_exact(x: f64, t: f64) -> Result<f64> {
    if t >= 1.0 / (2.0 * PI) {
        return Err(Error::InvalidInput(format!("no classical solution at t = {t} after shock formation")));
    }
    if t == 0.0 {
        return Ok((2.0 * PI * x).sin());
    }
    // g(u) = u - sin(2 pi (x - u t)) is increasing for t < 1/(2 pi), root in [-1, 1]
    let g = |u: f64| u - (2.0 * PI * (x - u * t)).sin();
    let dg = |u: f64| 1.0 + 2.0 * PI * t * (2.0 * PI * (x - u * t)).cos();
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut u = (2.0 * PI * x).sin();
    for _ in 0..200 {
        let gu = g(u);
        if gu == 0.0 {
            return Ok(u);
        }
        if gu > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let step = u - gu / dg(u);
        u = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-16 || (gu.abs() < 1e-16 && (u - step).abs() < 1e-16) {
            break;
        }
    }
    Ok(u)
}

/// Exact entropy solution of the 2D Burgers equation with flux
/// `(1, 1) u^2 / 2` and four-quadrant data `-0.2 | -1 / 0.5 | 0.8` centred
/// at `(0.5, 0.5)`.
///
/// Along each line `x - y = const` the problem reduces to the 1D law
/// `u_t + (u^2)_s = 0` in `s = x + y` with piecewise constant data, which
/// is solved by the Hopf-Lax formula.
pub fn burgers_quadrants_exact(x: [f64; 2], t: f64) -> f64 {
    let (s, eta) = (x[0] + x[1], x[0] - x[1]);
    let initial = |x: f64, y: f64| -> f64 {
        match (x < 0.5, y > 0.5) {
            (true, true) => -0.2,
            (false, true) => -1.0,
            (true, false) => 0.5,
            (false, false) => 0.8,
        }
    };
    // breakpoints in s of the data along this line
    let mut breaks = vec![1.0 - eta, 1.0 + eta];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let value_at = |s: f64| initial(0.5 * (s + eta), 0.5 * (s - eta));
    // pieces: (-inf, b0), (b0, b1), ..., (b_last, inf)
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    let mut left = f64::NEG_INFINITY;
    for &b in &breaks {
        let mid = if left.is_finite() { 0.5 * (left + b) } else { b - 1.0 };
        pieces.push((left, b, value_at(mid)));
        left = b;
    }
    pieces.push((left, f64::INFINITY, value_at(left + 1.0)));
    if t <= 0.0 {
        return value_at(s);
    }
    // primitive of the data, anchored at the first breakpoint
    let anchor = breaks[0];
    let mut prim_at_left = Vec::with_capacity(pieces.len());
    let mut acc = 0.0;
    for (k, &(a, b, v)) in pieces.iter().enumerate() {
        if k == 0 {
            prim_at_left.push(f64::NAN);
            continue;
        }
        prim_at_left.push(acc);
        if b.is_finite() {
            acc += v * (b - a);
        }
    }
    let primitive = |k: usize, y: f64| -> f64 {
        let (a, _, v) = pieces[k];
        if k == 0 {
            v * (y - anchor)
        } else {
            prim_at_left[k] + v * (y - a)
        }
    };
    // minimize U0(y) + (s - y)^2 / (4 t) over y; the flux u^2 has Legendre
    // transform q^2 / 4 and velocity 2u
    let mut best = (f64::INFINITY, 0.0);
    for (k, &(a, b, v)) in pieces.iter().enumerate() {
        // interior stationary point carries the piece value exactly
        let stationary = s - 2.0 * t * v;
        let mut candidates = Vec::with_capacity(3);
        if stationary > a && stationary < b {
            candidates.push((stationary, v));
        }
        for y in [a, b] {
            if y.is_finite() {
                candidates.push((y, (s - y) / (2.0 * t)));
            }
        }
        for (y, u) in candidates {
            let value = primitive(k, y) + (s - y) * (s - y) / (4.0 * t);
            if value < best.0 {
                best = (value, u);
            }
        }
    }
    best.1.clamp(-1.0, 0.8)
}

/// Double Mach reflection post-shock state.
pub fn double_mach_left_state() -> State {
    let angle = PI / 6.0;
    [8.0, 66.0 * angle.cos(), -66.0 * angle.sin(), 563.5]
}

/// Double Mach reflection pre-shock state.
pub fn double_mach_right_state() -> State {
    [1.4, 0.0, 0.0, 2.5]
}

/// Shock position rule: post-shock state left of the moving line.
pub fn double_mach_state(x: [f64; 2], t: f64) -> State {
    if x[0] < 1.0 / 6.0 + (x[1] + 20.0 * t) / 3f64.sqrt() {
        double_mach_left_state()
    } else {
        double_mach_right_state()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn euler_sod_left_flux() {
        let law = ConservationLaw::euler(1.4, 1).unwrap();
        let u = [1.0, 0.0, 2.5, 0.0];
        assert!(close(law.pressure(&u), 1.0, 1e-15));
        let f = law.try_flux(&u).unwrap();
        assert!(f[0][0] == 0.0 && close(f[1][0], 1.0, 1e-15) && f[2][0] == 0.0);
        let lambda = law.max_wave_speed(&u, &u, [1.0, 0.0]);
        assert!(close(lambda, 1.4f64.sqrt(), 1e-15));
    }

    #[test]
    fn swe_channel_inflow_flux() {
        let law = ConservationLaw::shallow_water(0.16, 2).unwrap();
        let f = law.flux(&[1.0, 1.0, 0.0, 0.0]);
        assert!(close(f[0][0], 1.0, 1e-15) && close(f[1][0], 1.08, 1e-15) && close(f[2][0], 0.0, 1e-15));
    }

    #[test]
    fn nonpositive_density_is_rejected() {
        let law = ConservationLaw::euler(1.4, 1).unwrap();
        let err = law.try_flux(&[0.0, 1.0, 1.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("density"));
        let swe = ConservationLaw::shallow_water(9.81, 2).unwrap();
        assert!(swe.try_flux(&[-0.1, 0.0, 0.0, 0.0]).unwrap_err().to_string().contains("water height"));
    }

    #[test]
    fn parameter_validation() {
        assert!(ConservationLaw::euler(1.0, 2).is_err());
        assert!(ConservationLaw::shallow_water(0.0, 2).is_err());
        assert!(ConservationLaw::burgers(3).is_err());
    }

    #[test]
    fn wave_speed_examples() {
        let adv = ConservationLaw::advection([1.0, 0.0], 2).unwrap();
        assert_eq!(adv.max_wave_speed(&[3.0; 4], &[1.0; 4], [1.0, 0.0]), 1.0);
        let b = ConservationLaw::burgers(1).unwrap();
        assert_eq!(b.max_wave_speed(&[1.0, 0.0, 0.0, 0.0], &[-0.5, 0.0, 0.0, 0.0], [1.0, 0.0]), 1.0);
    }

    #[test]
    fn upwind_trace_for_1d_advection() {
        let adv = ConservationLaw::advection([1.0, 0.0], 1).unwrap();
        let (u, v) = ([0.3, 0.0, 0.0, 0.0], [0.9, 0.0, 0.0, 0.0]);
        assert!(close(adv.lax_friedrichs(&u, &v, [1.0, 0.0])[0], 0.3, 1e-15));
        assert!(close(adv.lax_friedrichs(&u, &v, [-1.0, 0.0])[0], -0.9, 1e-15));
    }

    #[test]
    fn invariant_set_examples() {
        let e = ConservationLaw::euler(1.4, 1).unwrap();
        assert!(e.in_invariant_set(&[1.0, 0.0, 2.5, 0.0]).is_ok());
        assert!(e.in_invariant_set(&[1.0, 3.0, 2.5, 0.0]).is_err());
        let s = ConservationLaw::shallow_water(9.81, 2).unwrap();
        assert!(s.in_invariant_set(&[0.1, 0.0, 0.0, 0.0]).is_ok());
        let b = ConservationLaw::burgers(2).unwrap().with_scalar_range(-1.0, 0.8);
        assert!(b.in_invariant_set(&[0.81, 0.0, 0.0, 0.0]).is_err());
        assert!(b.in_invariant_set(&[-1.0, 0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn ghost_states() {
        let s = ConservationLaw::shallow_water(9.81, 2).unwrap();
        let u = [1.0, 1.0, 0.0, 0.0];
        assert_eq!(s.ghost_state(BoundaryTag::Wall, &u, [1.0, 0.0], || None).unwrap(), [1.0, -1.0, 0.0, 0.0]);
        assert_eq!(s.ghost_state(BoundaryTag::Outflow, &u, [1.0, 0.0], || None).unwrap(), u);
        assert!(s.ghost_state(BoundaryTag::Inflow, &u, [1.0, 0.0], || None).is_err());
        let e = ConservationLaw::euler(1.4, 2).unwrap();
        let g = e
            .ghost_state(BoundaryTag::Inflow, &double_mach_right_state(), [-1.0, 0.0], || Some(double_mach_state([0.0, 0.5], 0.01)))
            .unwrap();
        assert_eq!(g, double_mach_left_state());
    }

    #[test]
    fn burgers_sine_exact_examples() {
        assert!(close(burgers_sine_exact(0.25, 0.0).unwrap(), 1.0, 1e-15));
        let u = burgers_sine_exact(0.3, 0.05).unwrap();
        assert!((u - (2.0 * PI * (0.3 - 0.05 * u)).sin()).abs() < 1e-14);
        assert!(burgers_sine_exact(0.3, 0.2).is_err());
    }

    #[test]
    fn quadrant_solution_initial_and_far_field() {
        assert_eq!(burgers_quadrants_exact([0.2, 0.8], 0.0), -0.2);
        assert_eq!(burgers_quadrants_exact([0.8, 0.8], 0.0), -1.0);
        assert_eq!(burgers_quadrants_exact([0.2, 0.2], 0.0), 0.5);
        assert_eq!(burgers_quadrants_exact([0.8, 0.2], 0.0), 0.8);
        // values stay within the data range
        for i in 0..50 {
            for j in 0..50 {
                let u = burgers_quadrants_exact([i as f64 / 49.0, j as f64 / 49.0], 0.5);
                assert!((-1.0..=0.8).contains(&u), "{i} {j} {u}");
            }
        }
    }

    #[test]
    fn quadrant_solution_matches_1d_riemann_fan() {
        // on the diagonal x = y the data jumps from 0.5 to -1 at s = 1: a
        // shock with speed (u_l + u_r) in s for the flux u^2
        let t = 0.2;
        let speed = 0.5 + -1.0;
        let shock = 1.0 + speed * t;
        let left = burgers_quadrants_exact([0.5 * (shock - 0.01), 0.5 * (shock - 0.01)], t);
        let right = burgers_quadrants_exact([0.5 * (shock + 0.01), 0.5 * (shock + 0.01)], t);
        assert!(close(left, 0.5, 1e-12) && close(right, -1.0, 1e-12));
    }
}
