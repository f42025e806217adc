//! Strong stability preserving Runge-Kutta methods in Shu-Osher form and
//! forward Euler pseudo-time marching to steady state.

use std::str::FromStr;

use crate::discretization::StateField;
use crate::error::{Error, Result};
use crate::solver::Solver;

/// Consecutive sub-tolerance steps required for steady convergence.
pub const STEADY_CONSECUTIVE: usize = 10;
/// Residual growth over the first residual that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkMethod {
    Ssprk1,
    Ssprk2,
    Ssprk3,
}

impl RkMethod {
    pub fn stages(self) -> usize {
        match self {
            RkMethod::Ssprk1 => 1,
            RkMethod::Ssprk2 => 2,
            RkMethod::Ssprk3 => 3,
        }
    }
}

impl FromStr for RkMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssprk1" | "euler" => Ok(RkMethod::Ssprk1),
            "ssprk2" => Ok(RkMethod::Ssprk2),
            "ssprk3" => Ok(RkMethod::Ssprk3),
            _ => Err(Error::Config(format!("unknown time integrator '{s}'"))),
        }
    }
}

/// `u <- a u + b (v + dt k)` over the active components.
fn combine(u: &mut StateField, a: f64, b: f64, v: &StateField, k: &StateField, dt: f64) {
    let m = u.components;
    for ((x, y), z) in u.values.iter_mut().zip(&v.values).zip(&k.values) {
        for c in 0..m {
            x[c] = a * x[c] + b * (y[c] + dt * z[c]);
        }
    }
}

fn check_finite(field: &StateField, stage: usize) -> Result<()> {
    if field.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { stage })
    }
}

/// One SSP Runge-Kutta step of `du/dt = L(u, t)`, in place.
pub fn ssprk_step<F>(mut rhs: F, field: &mut StateField, t: f64, dt: f64, method: RkMethod) -> Result<()>
where
    F: FnMut(&StateField, f64, &mut StateField) -> Result<()>,
{
    let first = {
        let mut k = field.clone();
        rhs(field, t, &mut k)?;
        k
    };
    ssprk_step_with_first_stage(rhs, field, t, dt, method, first)
}

/// As [`ssprk_step`], with `L(u, t)` already evaluated into `k0`.
pub fn ssprk_step_with_first_stage<F>(mut rhs: F, field: &mut StateField, t: f64, dt: f64, method: RkMethod, k0: StateField) -> Result<()>
where
    F: FnMut(&StateField, f64, &mut StateField) -> Result<()>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let u0 = field.clone();
    let mut k = k0;
    let mut stage = u0.clone();
    combine(&mut stage, 0.0, 1.0, &u0, &k, dt);
    check_finite(&stage, 1)?;
    match method {
        RkMethod::Ssprk1 => {}
        RkMethod::Ssprk2 => {
            rhs(&stage, t + dt, &mut k)?;
            let s1 = stage.clone();
            combine(&mut stage, 0.0, 0.5, &s1, &k, dt);
            for (x, y) in stage.values.iter_mut().zip(&u0.values) {
                for c in 0..u0.components {
                    x[c] += 0.5 * y[c];
                }
            }
            check_finite(&stage, 2)?;
        }
        RkMethod::Ssprk3 => {
            rhs(&stage, t + dt, &mut k)?;
            let s1 = stage.clone();
            stage.clone_from(&u0);
            combine(&mut stage, 0.75, 0.25, &s1, &k, dt);
            check_finite(&stage, 2)?;
            rhs(&stage, t + 0.5 * dt, &mut k)?;
            let s2 = stage.clone();
            stage.clone_from(&u0);
            combine(&mut stage, 1.0 / 3.0, 2.0 / 3.0, &s2, &k, dt);
            check_finite(&stage, 3)?;
        }
    }
    *field = stage;
    Ok(())
}

/// Step size policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// `safety` times the IDP bound of the current state.
    Auto { safety: f64 },
}

/// Summary of a time integration.
#[derive(Debug, Clone, Default)]
pub struct IntegrationReport {
    pub steps: usize,
    pub final_time: f64,
    /// Smallest IDP bound seen at the start of a step.
    pub min_idp_timestep: f64,
    /// Largest ratio of the step taken to the IDP bound at its start.
    pub max_step_ratio: f64,
}

/// Integrate from `t0` to `t_end`, shortening the last step to land on
/// `t_end`. `observer` is called after every step with the new time.
pub fn integrate(
    solver: &mut Solver,
    field: &mut StateField,
    t0: f64,
    t_end: f64,
    step: StepSize,
    method: RkMethod,
    mut observer: impl FnMut(usize, f64, &StateField) -> Result<()>,
) -> Result<IntegrationReport> {
    if let StepSize::Fixed(dt) = step {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
    }
    if let StepSize::Auto { safety } = step {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::InvalidInput(format!("safety factor must lie in (0, 1], got {safety}")));
        }
    }
    let mut report = IntegrationReport { min_idp_timestep: f64::INFINITY, ..Default::default() };
    let mut t = t0;
    let mut k0 = field.clone();
    // fixed steps advance on a grid t0 + n dt to avoid drift
    let mut n = 0usize;
    while t < t_end - 1e-12 * t_end.abs().max(1.0) {
        solver.time_derivative(field, t, &mut k0)?;
        let bound = solver.max_idp_timestep();
        report.min_idp_timestep = report.min_idp_timestep.min(bound);
        let (dt, t_next) = match step {
            StepSize::Fixed(dt) => {
                let next = (t0 + (n + 1) as f64 * dt).min(t_end);
                (next - t, next)
            }
            StepSize::Auto { safety } => {
                if !bound.is_finite() {
                    return Err(Error::InvalidInput("automatic step size needs a finite IDP bound".into()));
                }
                let dt = (safety * bound).min(t_end - t);
                debug_assert!(dt <= safety * bound);
                (dt, if dt == t_end - t { t_end } else { t + dt })
            }
        };
        if bound.is_finite() {
            report.max_step_ratio = report.max_step_ratio.max(dt / bound);
        }
        let k = std::mem::replace(&mut k0, field.clone());
        ssprk_step_with_first_stage(|u, s, out| solver.time_derivative(u, s, out), field, t, dt, method, k)?;
        n += 1;
        t = t_next;
        report.steps += 1;
        observer(report.steps, t, field)?;
    }
    report.final_time = t;
    Ok(report)
}

/// Outcome of pseudo-time marching.
#[derive(Debug, Clone, Default)]
pub struct SteadyReport {
    pub converged: bool,
    pub steps: usize,
    /// Max-norm update `|U^(k+1) - U^k|` per step.
    pub residuals: Vec<f64>,
    /// Discrete L2 norm of the same update, for diagnostics.
    pub residuals_l2: Vec<f64>,
}

/// Forward Euler pseudo-time marching until the max-norm update stays
/// below `tol` for [`STEADY_CONSECUTIVE`] consecutive steps (or vanishes
/// exactly once), or `max_steps` is reached.
pub fn march_to_steady<F>(mut rhs: F, field: &mut StateField, dt: f64, tol: f64, max_steps: usize) -> Result<SteadyReport>
where
    F: FnMut(&StateField, f64, &mut StateField) -> Result<()>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let m = field.components;
    let mut report = SteadyReport::default();
    let mut k = field.clone();
    let mut below = 0usize;
    let mut first = None;
    for step in 1..=max_steps {
        rhs(field, (step - 1) as f64 * dt, &mut k)?;
        let mut r_max: f64 = 0.0;
        let mut r_sq = 0.0;
        for (u, du) in field.values.iter_mut().zip(&k.values) {
            for c in 0..m {
                let inc = dt * du[c];
                u[c] += inc;
                r_max = r_max.max(inc.abs());
                r_sq += inc * inc;
            }
        }
        if !r_max.is_finite() || !field.is_finite() {
            return Err(Error::NonFinite { stage: 1 });
        }
        report.residuals.push(r_max);
        report.residuals_l2.push((r_sq / (field.values.len() * m) as f64).sqrt());
        report.steps = step;
        let r0 = *first.get_or_insert(r_max);
        if r0 > 0.0 && r_max > DIVERGENCE_FACTOR * r0 {
            return Err(Error::Divergence { step, residual: r_max });
        }
        if r_max == 0.0 {
            report.converged = true;
            break;
        }
        below = if r_max < tol { below + 1 } else { 0 };
        if below >= STEADY_CONSECUTIVE {
            report.converged = true;
            break;
        }
    }
    Ok(report)
}
