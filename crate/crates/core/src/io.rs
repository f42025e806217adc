//! Run configuration and output writers: error tables (CSV), residual
//! histories (CSV) and field dumps (legacy VTK).

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::benchmarks::{Horizon, Preset, PresetName};
use crate::bernstein::multiindex_to_local;
use crate::discretization::{Discretization, StateField};
use crate::error::{Error, Result};
use crate::law::{LawKind, State};
use crate::mesh::{ElementKind, Mesh};
use crate::solver::Scheme;
use crate::time_integration::RkMethod;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MCLDG_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "output";

/// Raw run configuration as read from a TOML file or command line; every
/// key is optional so that sources can be layered.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub scheme: Option<String>,
    /// Polynomial degree. Signed so that negative input is reported as a
    /// configuration error rather than a parse failure.
    pub p: Option<i64>,
    /// `1/h` (see the preset documentation).
    pub h: Option<i64>,
    /// Triangle mesh file replacing the generated mesh.
    pub mesh: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub integrator: Option<String>,
    pub output_dir: Option<PathBuf>,
    /// Write a field dump every this many steps (0: final state only).
    pub dump_every: Option<i64>,
    pub threads: Option<i64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Keys set in `overrides` replace those in `self`.
    pub fn merged(self, overrides: RunConfig) -> Self {
        Self {
            preset: overrides.preset.or(self.preset),
            scheme: overrides.scheme.or(self.scheme),
            p: overrides.p.or(self.p),
            h: overrides.h.or(self.h),
            mesh: overrides.mesh.or(self.mesh),
            dt: overrides.dt.or(self.dt),
            t_final: overrides.t_final.or(self.t_final),
            integrator: overrides.integrator.or(self.integrator),
            output_dir: overrides.output_dir.or(self.output_dir),
            dump_every: overrides.dump_every.or(self.dump_every),
            threads: overrides.threads.or(self.threads),
        }
    }

    /// Validate and fill in preset defaults. `env_output_dir` is the value
    /// of [`OUTPUT_DIR_ENV`], if set.
    pub fn resolve(&self, env_output_dir: Option<&str>) -> Result<RunSettings> {
        let preset: PresetName = self.preset.as_deref().ok_or_else(|| Error::Config("no preset given".into()))?.parse()?;
        let preset = Preset::new(preset);
        let scheme: Scheme = self.scheme.as_deref().unwrap_or("mcl").parse()?;
        let positive_int = |v: Option<i64>, what: &str| -> Result<Option<usize>> {
            match v {
                None => Ok(None),
                Some(x) if x >= 1 => Ok(Some(x as usize)),
                Some(x) => Err(Error::Config(format!("{what} must be a positive integer, got {x}"))),
            }
        };
        let positive_real = |v: Option<f64>, what: &str| -> Result<Option<f64>> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Config(format!("{what} must be positive, got {x}"))),
                v => Ok(v),
            }
        };
        let degree = positive_int(self.p, "p")?.unwrap_or(preset.default_degree);
        let inv_h = positive_int(self.h, "h")?;
        let dt = positive_real(self.dt, "dt")?;
        let t_final = positive_real(self.t_final, "t_final")?;
        let dump_every = match self.dump_every {
            None | Some(0) => 0,
            Some(x) if x > 0 => x as usize,
            Some(x) => return Err(Error::Config(format!("dump_every must be non-negative, got {x}"))),
        };
        let threads = positive_int(self.threads, "threads")?;
        let method = match &self.integrator {
            Some(s) => s.parse()?,
            None => RkMethod::Ssprk3,
        };
        if self.mesh.is_some() && preset.element_kind() != ElementKind::Triangle {
            return Err(Error::Config(format!("preset {} does not accept a mesh file", preset.name)));
        }
        if t_final.is_some() && matches!(preset.horizon, Horizon::Steady { .. }) {
            return Err(Error::Config(format!("preset {} runs to steady state; t_final does not apply", preset.name)));
        }
        let output_dir = self
            .output_dir
            .clone()
            .or_else(|| env_output_dir.filter(|s| !s.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Ok(RunSettings {
            preset,
            scheme,
            degree,
            inv_h,
            mesh: self.mesh.clone(),
            dt,
            t_final,
            method,
            output_dir,
            dump_every,
            threads,
        })
    }
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub preset: Preset,
    pub scheme: Scheme,
    pub degree: usize,
    pub inv_h: Option<usize>,
    pub mesh: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub method: RkMethod,
    pub output_dir: PathBuf,
    pub dump_every: usize,
    pub threads: Option<usize>,
}

impl RunSettings {
    /// Load the mesh file, if one was configured.
    pub fn load_mesh(&self) -> Result<Option<Mesh>> {
        match &self.mesh {
            None => Ok(None),
            Some(path) => {
                let text =
                    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                Mesh::read_tri_text(&text).map(Some)
            }
        }
    }
}

/// One line of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub preset: String,
    pub scheme: String,
    pub p: usize,
    pub inv_h: usize,
    pub dof: usize,
    pub l1_error: f64,
    /// Rate against the previous row; empty for the first row of a sweep.
    pub eoc: Option<f64>,
}

pub const ERROR_CSV_HEADER: &str = "preset,scheme,p,inv_h,dof,l1_error,eoc";

/// Scientific notation with six significant digits and a signed,
/// two-digit exponent, e.g. `1.27000e-02`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Render rows in the fixed CSV layout.
pub fn error_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from(ERROR_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let eoc = r.eoc.map(format_sci).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{},{}", r.preset, r.scheme, r.p, r.inv_h, r.dof, format_sci(r.l1_error), eoc);
    }
    out
}

pub fn write_error_csv(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    write_file(path, error_csv(rows).as_bytes())
}

/// Pseudo-time residual history as `step,r_max,r_l2`.
pub fn write_residual_history(path: &Path, r_max: &[f64], r_l2: &[f64]) -> Result<()> {
    let mut out = String::from("step,r_max,r_l2\n");
    for (k, (a, b)) in r_max.iter().zip(r_l2).enumerate() {
        let _ = writeln!(out, "{},{},{}", k + 1, format_sci(*a), format_sci(*b));
    }
    write_file(path, out.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Names of the conserved components of a law.
pub fn component_names(disc: &Discretization) -> Vec<&'static str> {
    let dim = disc.mesh.dim();
    match disc.law.kind() {
        LawKind::Advection { .. } | LawKind::Burgers => vec!["u"],
        LawKind::Euler { .. } if dim == 1 => vec!["density", "momentum_x", "energy"],
        LawKind::Euler { .. } => vec!["density", "momentum_x", "momentum_y", "energy"],
        LawKind::ShallowWater { .. } => vec!["height", "discharge_x", "discharge_y"],
    }
}

type PointMap<'a> = Box<dyn Fn(&State) -> f64 + 'a>;

/// Derived point field written next to the conserved components.
fn derived_field(disc: &Discretization) -> Option<(&'static str, PointMap<'_>)> {
    match disc.law.kind() {
        LawKind::Euler { .. } => Some(("pressure", Box::new(|u: &State| disc.law.pressure(u)))),
        LawKind::ShallowWater { .. } => Some(("velocity_magnitude", Box::new(|u: &State| u[1].hypot(u[2]) / u[0]))),
        _ => None,
    }
}

/// Local node indices of the Bezier subcells of one element together
/// with the VTK cell type.
fn subcells(disc: &Discretization) -> (Vec<Vec<usize>>, u8) {
    let p = disc.reference.degree;
    match disc.mesh.kind() {
        ElementKind::Line => ((0..p).map(|i| vec![i, i + 1]).collect(), 3),
        ElementKind::Quadrilateral => {
            let id = |i: usize, j: usize| i + (p + 1) * j;
            let mut cells = Vec::with_capacity(p * p);
            for j in 0..p {
                for i in 0..p {
                    cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
            (cells, 9)
        }
        ElementKind::Triangle => {
            let index = |a2: usize, a3: usize| {
                multiindex_to_local(p, [p - a2 - a3, a2, a3]).expect("multi-index of order p")
            };
            let mut cells = Vec::with_capacity(p * p);
            for a3 in 0..p {
                for a2 in 0..p - a3 {
                    cells.push(vec![index(a2, a3), index(a2 + 1, a3), index(a2, a3 + 1)]);
                    if a2 + a3 + 2 <= p {
                        cells.push(vec![index(a2 + 1, a3), index(a2 + 1, a3 + 1), index(a2, a3 + 1)]);
                    }
                }
            }
            (cells, 5)
        }
    }
}

/// Legacy ASCII VTK unstructured grid with one point per element node
/// (interface nodes duplicated), one cell per Bezier subcell and the
/// Bernstein coefficients as point data.
pub fn vtk_string(disc: &Discretization, field: &StateField) -> String {
    let n = disc.nodes_per_element();
    let ne = disc.num_elements();
    let (cells, cell_type) = subcells(disc);
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nmcldg field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", ne * n);
    for e in 0..ne {
        for i in 0..n {
            let x = disc.node_position(e, i);
            let _ = writeln!(out, "{:e} {:e} 0", x[0], x[1]);
        }
    }
    let per = cells.first().map_or(0, Vec::len);
    let _ = writeln!(out, "CELLS {} {}", ne * cells.len(), ne * cells.len() * (per + 1));
    for e in 0..ne {
        for c in &cells {
            let _ = write!(out, "{per}");
            for &i in c {
                let _ = write!(out, " {}", e * n + i);
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "CELL_TYPES {}", ne * cells.len());
    for _ in 0..ne * cells.len() {
        let _ = writeln!(out, "{cell_type}");
    }
    let _ = writeln!(out, "POINT_DATA {}", ne * n);
    let mut scalar = |name: &str, values: &mut dyn Iterator<Item = f64>| {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(out, "{v:e}");
        }
    };
    for (c, name) in component_names(disc).into_iter().enumerate() {
        scalar(name, &mut field.values.iter().map(|u| u[c]));
    }
    if let Some((name, f)) = derived_field(disc) {
        scalar(name, &mut field.values.iter().map(f));
    }
    out
}

pub fn write_vtk(disc: &Discretization, field: &StateField, path: &Path) -> Result<()> {
    write_file(path, vtk_string(disc, field).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::ConservationLaw;
    use crate::mesh::QuadBoundarySpec;

    fn quad_disc(p: usize) -> Discretization {
        let mesh = Mesh::structured_quad(1, 1, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::periodic()).unwrap();
        Discretization::new(mesh, p, ConservationLaw::shallow_water(1.0, 2).unwrap(), None).unwrap()
    }

    fn count_after(s: &str, key: &str) -> usize {
        let line = s.lines().find(|l| l.starts_with(key)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    }

    #[test]
    fn vtk_point_and_cell_counts() {
        for (p, points, cells) in [(1, 4, 1), (2, 9, 4)] {
            let disc = quad_disc(p);
            let field = disc.sample(|_| [1.0, 0.5, 0.0, 0.0]);
            let s = vtk_string(&disc, &field);
            assert_eq!(count_after(&s, "POINTS"), points);
            assert_eq!(count_after(&s, "CELLS"), cells);
            let block: Vec<&str> = s.lines().skip_while(|l| !l.starts_with("SCALARS height")).skip(2).take(points).collect();
            assert!(block.iter().all(|v| v.parse::<f64>().unwrap() == 1.0));
            let vel: Vec<&str> =
                s.lines().skip_while(|l| !l.starts_with("SCALARS velocity_magnitude")).skip(2).take(points).collect();
            assert!(vel.iter().all(|v| v.parse::<f64>().unwrap() == 0.5));
        }
    }

    #[test]
    fn triangle_subcells_cover_the_element() {
        let mesh = crate::benchmarks::channel_mesh(2).unwrap();
        for p in 1..=4 {
            let disc = Discretization::new(
                mesh.clone(),
                p,
                ConservationLaw::shallow_water(1.0, 2).unwrap(),
                Some(std::sync::Arc::new(|_, _| [1.0, 0.0, 0.0, 0.0])),
            )
            .unwrap();
            let (cells, _) = subcells(&disc);
            assert_eq!(cells.len(), p * p);
            // subcell areas add up to the element area
            let area: f64 = cells
                .iter()
                .map(|c| {
                    let x: Vec<[f64; 2]> = c.iter().map(|&i| disc.node_position(0, i)).collect();
                    0.5 * ((x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]))
                })
                .sum();
            assert!((area - disc.mesh.geometry(0).measure).abs() < 1e-9, "p = {p}");
        }
    }

    #[test]
    fn sci_format() {
        assert_eq!(format_sci(1.27e-2), "1.27000e-02");
        assert_eq!(format_sci(2.36), "2.36000e+00");
        assert_eq!(format_sci(123456.7), "1.23457e+05");
    }

    #[test]
    fn csv_layout() {
        let rows = vec![
            ErrorRow { preset: "advect1d_smooth".into(), scheme: "dg".into(), p: 1, inv_h: 24, dof: 96, l1_error: 1.27e-2, eoc: None },
            ErrorRow { preset: "advect1d_smooth".into(), scheme: "mcl".into(), p: 1, inv_h: 24, dof: 96, l1_error: 1.04e-2, eoc: None },
            ErrorRow { preset: "burgers1d".into(), scheme: "mcl".into(), p: 1, inv_h: 64, dof: 128, l1_error: 7.68e-4, eoc: Some(1.80) },
        ];
        let s = error_csv(&rows);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], ERROR_CSV_HEADER);
        assert_eq!(lines[1], "advect1d_smooth,dg,1,24,96,1.27000e-02,");
        assert_eq!(lines[3], "burgers1d,mcl,1,64,128,7.68000e-04,1.80000e+00");
        assert_eq!(s, error_csv(&rows));
    }

    #[test]
    fn config_layering_and_validation() {
        let file = RunConfig::from_toml_str("preset = \"sod\"\nscheme = \"lo\"\np = 2\n").unwrap();
        let cli = RunConfig { scheme: Some("mcl".into()), p: Some(3), ..Default::default() };
        let s = file.merged(cli).resolve(None).unwrap();
        assert_eq!(s.preset.name, PresetName::Sod);
        assert_eq!(s.scheme, Scheme::Mcl);
        assert_eq!(s.degree, 3);
        assert_eq!(s.output_dir, PathBuf::from("output"));

        assert!(RunConfig::from_toml_str("preset = \"sod\"\nbogus = 1\n").is_err());
        let bad = RunConfig { preset: Some("sod".into()), p: Some(-1), ..Default::default() };
        assert!(matches!(bad.resolve(None), Err(Error::Config(_))));
        let bad = RunConfig { preset: Some("nope".into()), ..Default::default() };
        assert!(bad.resolve(None).is_err());
        let bad = RunConfig { preset: Some("sod".into()), dt: Some(-1.0), ..Default::default() };
        assert!(bad.resolve(None).is_err());
        let env = RunConfig { preset: Some("sod".into()), ..Default::default() }.resolve(Some("/tmp/x")).unwrap();
        assert_eq!(env.output_dir, PathBuf::from("/tmp/x"));
    }
}
