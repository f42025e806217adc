//! Drives one benchmark run: scheme selection, time integration or
//! steady marching, and the summary quantities reported afterwards.

use crate::benchmarks::{Horizon, Problem};
use crate::discretization::StateField;
use crate::error::{Error, Result};
use crate::law::{LawKind, State};
use crate::solver::{Scheme, Solver};
use crate::time_integration::{integrate, march_to_steady, RkMethod, StepSize, SteadyReport};

/// Per-run knobs; `None` keeps the preset value.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scheme: Scheme,
    pub method: RkMethod,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    /// Disable limiting to obtain the raw high-order update through the MCL pipeline.
    pub limiting: bool,
}

impl RunOptions {
    pub fn new(scheme: Scheme) -> Self {
        Self { scheme, method: RkMethod::Ssprk3, dt: None, t_final: None, limiting: true }
    }
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub field: StateField,
    pub final_time: f64,
    pub steps: usize,
    pub dt: f64,
    /// IDP step bound of the initial state.
    pub initial_idp_timestep: f64,
    /// Smallest IDP bound encountered at the start of a step.
    pub min_idp_timestep: f64,
    pub l1_error: Option<State>,
    pub steady: Option<SteadyReport>,
}

impl RunOutcome {
    /// Coefficient range of component `c`.
    pub fn range(&self, c: usize) -> (f64, f64) {
        self.field.range(c)
    }
}

/// Range of a derived quantity over all coefficients.
pub fn derived_range(field: &StateField, f: impl Fn(&State) -> f64) -> (f64, f64) {
    field
        .values
        .iter()
        .map(f)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Run `problem` to its horizon. `observer` sees every accepted step.
pub fn run(
    problem: &Problem,
    options: &RunOptions,
    observer: impl FnMut(usize, f64, &StateField) -> Result<()>,
) -> Result<RunOutcome> {
    let dt = options.dt.unwrap_or(problem.dt);
    if !(dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if let Some(t) = options.t_final {
        if !(t > 0.0) {
            return Err(Error::Config(format!("final time must be positive, got {t}")));
        }
    }
    let mut solver = Solver::new(&problem.disc, options.scheme);
    solver.set_limiting(options.limiting);
    let mut field = problem.initial.clone();
    let mut scratch = field.clone();
    solver.time_derivative(&field, 0.0, &mut scratch)?;
    let initial_idp_timestep = solver.max_idp_timestep();

    match problem.horizon {
        Horizon::Transient { t_final } => {
            let t_final = options.t_final.unwrap_or(t_final);
            let report = integrate(&mut solver, &mut field, 0.0, t_final, StepSize::Fixed(dt), options.method, observer)?;
            let l1_error = if problem.has_exact_solution() { Some(problem.l1_error(&field, report.final_time)?) } else { None };
            Ok(RunOutcome {
                field,
                final_time: report.final_time,
                steps: report.steps,
                dt,
                initial_idp_timestep,
                min_idp_timestep: report.min_idp_timestep.min(initial_idp_timestep),
                l1_error,
                steady: None,
            })
        }
        Horizon::Steady { tol, max_steps } => {
            let mut observer = observer;
            let mut min_idp = initial_idp_timestep;
            let mut step = 0usize;
            let report = march_to_steady(
                |u, t, out| {
                    solver.time_derivative(u, t, out)?;
                    min_idp = min_idp.min(solver.max_idp_timestep());
                    step += 1;
                    if step > 1 {
                        observer(step - 1, t, u)?;
                    }
                    Ok(())
                },
                &mut field,
                dt,
                tol,
                max_steps,
            )?;
            Ok(RunOutcome {
                field,
                final_time: report.steps as f64 * dt,
                steps: report.steps,
                dt,
                initial_idp_timestep,
                min_idp_timestep: min_idp,
                l1_error: None,
                steady: Some(report),
            })
        }
    }
}

/// Check every coefficient against the invariant set. Scalar ranges are
/// widened by `tol` to absorb rounding; positivity conditions are exact.
pub fn check_admissible(problem: &Problem, field: &StateField, tol: f64) -> Result<()> {
    let law = &problem.disc.law;
    let n = problem.disc.nodes_per_element();
    for (k, u) in field.values.iter().enumerate() {
        let verdict = match law.scalar_range() {
            Some((lo, hi)) if law.is_scalar() => {
                if !u[0].is_finite() {
                    Err(Error::InvariantViolation { quantity: "finite state", value: u[0], location: None })
                } else if u[0] < lo - tol {
                    Err(Error::InvariantViolation { quantity: "lower bound", value: u[0], location: None })
                } else if u[0] > hi + tol {
                    Err(Error::InvariantViolation { quantity: "upper bound", value: u[0], location: None })
                } else {
                    Ok(())
                }
            }
            _ => law.in_invariant_set(u),
        };
        verdict.map_err(|e| e.at(k / n, k % n))?;
    }
    Ok(())
}

/// Pressure for Euler states, water height otherwise the first component.
pub fn derived_quantity(problem: &Problem, u: &State) -> f64 {
    match problem.disc.law.kind() {
        LawKind::Euler { .. } => problem.disc.law.pressure(u),
        _ => u[0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{Preset, PresetName};

    #[test]
    fn short_sod_run_stays_admissible() {
        let prob = Preset::new(PresetName::Sod).build(1, Some(32), None).unwrap();
        let mut opts = RunOptions::new(Scheme::Mcl);
        opts.t_final = Some(0.02);
        opts.dt = Some(2e-3);
        let out = run(&prob, &opts, |_, _, _| Ok(())).unwrap();
        assert_eq!(out.steps, 10);
        assert!((out.final_time - 0.02).abs() < 1e-15);
        let (lo, hi) = out.range(0);
        assert!(lo >= 0.125 - 1e-9 && hi <= 1.0 + 1e-9);
        assert!(out.l1_error.is_none());
        check_admissible(&prob, &out.field, 0.0).unwrap();
    }

    #[test]
    fn admissibility_reports_location() {
        let prob = Preset::new(PresetName::Advect1dMixed).build(1, Some(4), None).unwrap();
        let mut field = prob.initial.clone();
        field.values[5][0] = 1.0 + 1e-6;
        assert!(check_admissible(&prob, &field, 1e-9).is_err_and(|e| matches!(
            e,
            Error::InvariantViolation { location: Some((2, 1)), .. }
        )));
        assert!(check_admissible(&prob, &field, 1e-5).is_ok());
    }

    #[test]
    fn advection_run_reports_error() {
        let prob = Preset::new(PresetName::Advect1dSmooth).build(2, Some(8), None).unwrap();
        let mut opts = RunOptions::new(Scheme::Dg);
        opts.t_final = Some(0.1);
        opts.dt = Some(1e-2);
        let out = run(&prob, &opts, |_, _, _| Ok(())).unwrap();
        let e = out.l1_error.unwrap()[0];
        assert!(e > 0.0 && e < 0.1);
    }
}
