use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcldg::benchmarks::{eoc, Horizon, Preset};
use mcldg::io::{self, ErrorRow, RunConfig, RunSettings, OUTPUT_DIR_ENV};
use mcldg::runner::{check_admissible, derived_range, run, RunOptions};
use mcldg::verify::{run_checks, VerifyOptions};
use mcldg::{Error, Scheme};

/// Scalar-range slack for the per-step admissibility check.
const RANGE_TOLERANCE: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "mcldg", version, about = "Bernstein DG solvers with monolithic convex limiting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one benchmark and write field dumps.
    Run(RunArgs),
    /// Sweep the table resolutions of a preset and write an error table.
    Convergence(ConvergenceArgs),
    /// Run the randomized self-check suite.
    Verify(VerifyArgs),
}

/// Flags shared by `run` and `convergence`; each overrides the same key of
/// the configuration file.
#[derive(Args)]
struct CommonArgs {
    /// TOML file with run keys (preset, scheme, p, h, mesh, dt, t_final, ...).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<i64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    integrator: Option<String>,
    /// Output directory (default: $MCLDG_OUTPUT_DIR, then ./output).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    threads: Option<i64>,
}

impl CommonArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            preset: self.preset.clone(),
            p: self.p,
            dt: self.dt,
            t_final: self.t_final,
            integrator: self.integrator.clone(),
            output_dir: self.output_dir.clone(),
            threads: self.threads,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// dg, lo or mcl.
    #[arg(long)]
    scheme: Option<String>,
    /// Inverse mesh size 1/h.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<i64>,
    /// Triangle mesh file.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Dump the field every N steps (0: final state only).
    #[arg(long, allow_negative_numbers = true)]
    dump_every: Option<i64>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Schemes to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "dg,lo,mcl")]
    schemes: Vec<String>,
    /// Resolutions 1/h, comma separated (default: the preset's table).
    #[arg(long, value_delimiter = ',')]
    resolutions: Vec<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Also check long-running presets.
    #[arg(long)]
    long: bool,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvariantViolation { .. } | Error::NonFinite { .. } | Error::Divergence { .. } => 2,
        Error::InvalidInput(_) | Error::Mesh(_) | Error::Config(_) | Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(&args),
        Command::Convergence(args) => convergence_command(&args),
        Command::Verify(args) => verify_command(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn settings(common: &CommonArgs, overrides: RunConfig) -> mcldg::Result<RunSettings> {
    let file = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let env = std::env::var(OUTPUT_DIR_ENV).ok();
    let settings = file.merged(common.config()).merged(overrides).resolve(env.as_deref())?;
    if let Some(n) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    Ok(settings)
}

fn stem(s: &RunSettings) -> String {
    format!("{}_{}_p{}", s.preset.name, s.scheme, s.degree)
}

fn run_command(args: &RunArgs) -> mcldg::Result<u8> {
    let overrides = RunConfig {
        scheme: args.scheme.clone(),
        h: args.h,
        mesh: args.mesh.clone(),
        dump_every: args.dump_every,
        ..Default::default()
    };
    let s = settings(&args.common, overrides)?;
    let problem = s.preset.build(s.degree, s.inv_h, s.load_mesh()?)?;
    let mut options = RunOptions::new(s.scheme);
    options.method = s.method;
    options.dt = s.dt;
    options.t_final = s.t_final;
    let stem = stem(&s);
    let out_dir = s.output_dir.as_path();
    println!(
        "{}: scheme {}, p = {}, 1/h = {}, {} elements, {} DOFs, dt = {:e}",
        s.preset.name,
        s.scheme,
        s.degree,
        problem.inv_h,
        problem.disc.num_elements(),
        problem.disc.num_dofs(),
        options.dt.unwrap_or(problem.dt)
    );
    let limited = s.scheme != Scheme::Dg;
    if limited {
        check_admissible(&problem, &problem.initial, RANGE_TOLERANCE)?;
    }
    let out = run(&problem, &options, |step, t, field| {
        if limited {
            check_admissible(&problem, field, RANGE_TOLERANCE).inspect_err(|_| {
                eprintln!("invariant check failed after step {step} (t = {t})");
                let _ = io::write_vtk(&problem.disc, field, &out_dir.join(format!("{stem}_violation.vtk")));
            })?;
        }
        if s.dump_every > 0 && step % s.dump_every == 0 {
            io::write_vtk(&problem.disc, field, &out_dir.join(format!("{stem}_{step:06}.vtk")))?;
        }
        Ok(())
    })?;
    if limited && out.dt > out.initial_idp_timestep {
        eprintln!("warning: dt = {:e} exceeds the initial IDP bound {:e}", out.dt, out.initial_idp_timestep);
    }
    let final_path = out_dir.join(format!("{stem}_final.vtk"));
    io::write_vtk(&problem.disc, &out.field, &final_path)?;
    println!("steps {}, final time {}", out.steps, out.final_time);
    if limited {
        println!("smallest IDP bound {:e}", out.min_idp_timestep);
    }
    let (lo, hi) = out.range(0);
    println!("component 0 range [{lo:.16e}, {hi:.16e}]");
    if matches!(problem.disc.law.kind(), mcldg::law::LawKind::Euler { .. }) {
        let (lo, hi) = derived_range(&out.field, |u| problem.disc.law.pressure(u));
        println!("pressure range [{lo:.16e}, {hi:.16e}]");
    }
    if let Some(e) = out.l1_error {
        println!("L1 error {}", io::format_sci(e[0]));
    }
    let mut code = 0;
    if let Some(report) = &out.steady {
        let path = out_dir.join(format!("{stem}_residuals.csv"));
        io::write_residual_history(&path, &report.residuals, &report.residuals_l2)?;
        println!(
            "steady: converged {}, steps {}, last residual {:e}",
            report.converged,
            report.steps,
            report.residuals.last().copied().unwrap_or(0.0)
        );
        if !report.converged {
            code = 2;
        }
    }
    println!("wrote {}", final_path.display());
    Ok(code)
}

fn convergence_command(args: &ConvergenceArgs) -> mcldg::Result<u8> {
    let s = settings(&args.common, RunConfig::default())?;
    let resolutions: Vec<usize> =
        if args.resolutions.is_empty() { s.preset.table_resolutions.to_vec() } else { args.resolutions.clone() };
    check_sweep(&s.preset, &resolutions)?;
    let schemes = args.schemes.iter().map(|x| x.parse()).collect::<mcldg::Result<Vec<Scheme>>>()?;
    let mut rows = Vec::new();
    for scheme in schemes {
        let mut options = RunOptions::new(scheme);
        options.method = s.method;
        options.dt = s.dt;
        options.t_final = s.t_final;
        let mut errors = Vec::new();
        for &r in &resolutions {
            let problem = s.preset.build(s.degree, Some(r), None)?;
            let out = run(&problem, &options, |_, _, _| Ok(()))?;
            let error = out.l1_error.map(|e| e[0]).ok_or_else(|| Error::Config("preset has no exact solution".into()))?;
            eprintln!("{} {scheme} p = {} 1/h = {r}: {}", s.preset.name, s.degree, io::format_sci(error));
            errors.push(error);
            rows.push(ErrorRow {
                preset: s.preset.name.to_string(),
                scheme: scheme.to_string(),
                p: s.degree,
                inv_h: r,
                dof: problem.disc.num_dofs(),
                l1_error: error,
                eoc: None,
            });
        }
        let inv_h: Vec<f64> = resolutions.iter().map(|&r| r as f64).collect();
        let rates = eoc(&errors, &inv_h)?;
        let first = rows.len() - resolutions.len();
        for (row, rate) in rows[first + 1..].iter_mut().zip(rates) {
            row.eoc = rate;
        }
    }
    let path = s.output_dir.join(format!("{}_p{}_errors.csv", s.preset.name, s.degree));
    io::write_error_csv(&path, &rows)?;
    print!("{}", io::error_csv(&rows));
    eprintln!("wrote {}", path.display());
    Ok(0)
}

fn check_sweep(preset: &Preset, resolutions: &[usize]) -> mcldg::Result<()> {
    if matches!(preset.horizon, Horizon::Steady { .. }) || preset.exact_solution().is_none() {
        return Err(Error::Config(format!("preset {} has no exact solution to measure errors against", preset.name)));
    }
    if resolutions.len() < 2 {
        return Err(Error::Config("a convergence sweep needs at least two resolutions".into()));
    }
    Ok(())
}

fn verify_command(args: &VerifyArgs) -> mcldg::Result<u8> {
    let opts = VerifyOptions { trials: args.trials, steps: args.steps, include_long: args.long, seed: args.seed };
    let results = run_checks(&opts)?;
    let mut failed = 0;
    for r in &results {
        println!("{} {} ({})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        failed += usize::from(!r.passed);
    }
    println!("{} of {} checks passed", results.len() - failed, results.len());
    Ok(if failed == 0 { 0 } else { 2 })
}
