//! Configuration-driven experiment runner: JSON configs with presets for the
//! five stock experiments, field/report CSV output at full precision, and a
//! diagnose pass that recomputes the summary from files on disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::densities::{make_density, DensitySpec, GaussianComponent};
use crate::error::{Error, Result};
use crate::grid::{CellField, FaceField, Grid, SourceSeries, SpatialField, SpatialGrid, TimeGrid};
use crate::solver::{solve_uw2, IterationReport, SolverConfig};
use crate::uw1::{solve_uw1, uw1_report, Uw1Report};

pub const DEFAULT_ALPHA_SWEEP: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Exp1,
    Exp2Balanced,
    Exp2Unbalanced,
    Exp3,
    Exp4,
    Exp5,
    Custom,
}

impl Preset {
    pub fn from_name(name: &str) -> Result<Preset> {
        match name {
            "exp1" => Ok(Preset::Exp1),
            "exp2-balanced" => Ok(Preset::Exp2Balanced),
            "exp2-unbalanced" => Ok(Preset::Exp2Unbalanced),
            "exp3" => Ok(Preset::Exp3),
            "exp4" => Ok(Preset::Exp4),
            "exp5" => Ok(Preset::Exp5),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::config(
                "preset",
                format!("unknown preset {other:?}"),
            )),
        }
    }
}

/// JSON-facing config: every field optional so presets can fill the rest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub p: Option<u8>,
    pub alpha: Option<f64>,
    pub dims: Option<u8>,
    pub n_t: Option<usize>,
    pub n_x: Option<usize>,
    pub n_y: Option<usize>,
    pub mu0: Option<DensitySpec>,
    pub mu1: Option<DensitySpec>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub report_every: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub alpha_sweep: Option<Vec<f64>>,
    pub freeze_source: Option<bool>,
}

/// Fully resolved run description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Preset,
    pub p: u8,
    pub alpha: f64,
    pub dims: u8,
    pub n_t: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub mu0: DensitySpec,
    pub mu1: DensitySpec,
    pub tau1: f64,
    pub tau2: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub report_every: usize,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_sweep: Option<Vec<f64>>,
    pub freeze_source: bool,
}

fn gauss1(mean: f64) -> DensitySpec {
    DensitySpec::gaussian(vec![mean], vec![0.01], 1.0)
}

fn two_bumps_1d(scale: f64) -> DensitySpec {
    DensitySpec::mixture(
        vec![
            GaussianComponent {
                mean: vec![0.0],
                variance: vec![0.01],
                weight: 1.0,
            },
            GaussianComponent {
                mean: vec![1.0 / 3.0],
                variance: vec![0.01],
                weight: 1.0,
            },
        ],
        scale,
    )
}

impl RawConfig {
    /// Shared numerical parameters plus the experiment's densities.
    /// A custom run supplies everything itself.
    fn preset_defaults(preset: Preset) -> RawConfig {
        if preset == Preset::Custom {
            return RawConfig::default();
        }
        let mut base = RawConfig {
            p: Some(2),
            alpha: Some(100.0),
            dims: Some(1),
            n_t: Some(15),
            n_x: Some(35),
            n_y: Some(35),
            tau1: Some(1e-3),
            tau2: Some(1e-1),
            iterations: Some(200_000),
            tolerance: Some(1e-6),
            report_every: Some(1000),
            freeze_source: Some(false),
            ..RawConfig::default()
        };
        match preset {
            Preset::Exp1 => {
                base.mu0 = Some(gauss1(1.0 / 3.0));
                base.mu1 = Some(gauss1(2.0 / 3.0));
            }
            Preset::Exp2Balanced => {
                base.mu0 = Some(two_bumps_1d(0.5));
                base.mu1 = Some(gauss1(2.0 / 3.0));
                base.alpha_sweep = Some(DEFAULT_ALPHA_SWEEP.to_vec());
            }
            Preset::Exp2Unbalanced => {
                base.mu0 = Some(two_bumps_1d(1.0));
                base.mu1 = Some(gauss1(2.0 / 3.0));
                base.alpha_sweep = Some(DEFAULT_ALPHA_SWEEP.to_vec());
            }
            Preset::Exp3 => {
                base.dims = Some(2);
                base.mu0 = Some(DensitySpec::mixture(
                    vec![
                        GaussianComponent {
                            mean: vec![0.3, 0.3],
                            variance: vec![0.01, 0.01],
                            weight: 1.0,
                        },
                        GaussianComponent {
                            mean: vec![0.7, 0.3],
                            variance: vec![0.01, 0.01],
                            weight: 1.0,
                        },
                    ],
                    1.0,
                ));
                base.mu1 = Some(DensitySpec::gaussian(
                    vec![0.7, 0.7],
                    vec![0.01, 0.01],
                    1.0,
                ));
            }
            Preset::Exp4 => {
                base.dims = Some(2);
                base.mu0 = Some(DensitySpec {
                    kind: crate::densities::DensityKind::Image {
                        path: PathBuf::from("assets/densities/blob_a.pgm"),
                    },
                    scale: 1.0,
                });
                base.mu1 = Some(DensitySpec {
                    kind: crate::densities::DensityKind::Image {
                        path: PathBuf::from("assets/densities/blob_b.pgm"),
                    },
                    scale: 1.0,
                });
            }
            Preset::Exp5 => {
                base.p = Some(1);
                base.mu0 = Some(two_bumps_1d(1.0));
                base.mu1 = Some(gauss1(2.0 / 3.0));
                // operator-norm-safe steps for the minimal-flux solver at n_x = 35
                let step = 1.0 / 35.0 / 8f64.sqrt();
                base.tau1 = Some(step);
                base.tau2 = Some(step);
            }
            Preset::Custom => {}
        }
        base
    }

    /// Apply preset defaults underneath the explicitly set fields.
    pub fn resolve(self) -> Result<RunConfig> {
        let preset = match &self.preset {
            Some(name) => Preset::from_name(name)?,
            None => Preset::Custom,
        };
        let defaults = RawConfig::preset_defaults(preset);
        macro_rules! pick {
            ($field:ident) => {
                self.$field.or(defaults.$field)
            };
        }
        let p = pick!(p).ok_or_else(|| Error::config("p", "missing"))?;
        let dims = pick!(dims).ok_or_else(|| Error::config("dims", "missing"))?;
        let n_x = pick!(n_x).ok_or_else(|| Error::config("n_x", "missing"))?;
        let tau1 = match pick!(tau1) {
            Some(t) => t,
            // the UW1 default step needs the grid spacing
            None if p == 1 => {
                let nmax = n_x.max(if dims == 2 {
                    pick!(n_y).unwrap_or(n_x)
                } else {
                    n_x
                });
                1.0 / nmax as f64 / 8f64.sqrt()
            }
            None => return Err(Error::config("tau1", "missing")),
        };
        let tau2 = match pick!(tau2) {
            Some(t) => t,
            None if p == 1 => tau1,
            None => return Err(Error::config("tau2", "missing")),
        };
        let cfg = RunConfig {
            preset,
            p,
            alpha: pick!(alpha).ok_or_else(|| Error::config("alpha", "missing"))?,
            dims,
            n_t: pick!(n_t).ok_or_else(|| Error::config("n_t", "missing"))?,
            n_x,
            n_y: pick!(n_y).unwrap_or(n_x),
            mu0: pick!(mu0).ok_or_else(|| Error::config("mu0", "missing"))?,
            mu1: pick!(mu1).ok_or_else(|| Error::config("mu1", "missing"))?,
            tau1,
            tau2,
            iterations: pick!(iterations).ok_or_else(|| Error::config("iterations", "missing"))?,
            tolerance: pick!(tolerance).ok_or_else(|| Error::config("tolerance", "missing"))?,
            report_every: pick!(report_every)
                .ok_or_else(|| Error::config("report_every", "missing"))?,
            out_dir: pick!(out_dir).unwrap_or_else(|| PathBuf::from("out")),
            alpha_sweep: pick!(alpha_sweep),
            freeze_source: pick!(freeze_source).unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig {
            field: "config".into(),
            message: e.to_string(),
        })?;
        raw.resolve()
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text)
    }

    pub fn preset(name: &str) -> Result<RunConfig> {
        RawConfig {
            preset: Some(name.to_string()),
            ..RawConfig::default()
        }
        .resolve()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims != 1 && self.dims != 2 {
            return Err(Error::config("dims", "must be 1 or 2"));
        }
        self.solver_config().validate()?;
        self.mu0.validate(self.dims).map_err(prefix_field("mu0"))?;
        self.mu1.validate(self.dims).map_err(prefix_field("mu1"))?;
        if let Some(sweep) = &self.alpha_sweep {
            if sweep.is_empty() || sweep.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(Error::config("alpha_sweep", "entries must be > 0"));
            }
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            p: self.p,
            alpha: self.alpha,
            tau1: self.tau1,
            tau2: self.tau2,
            max_iterations: self.iterations,
            tolerance: self.tolerance,
            report_every: self.report_every,
            freeze_source: self.freeze_source,
        }
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        if self.dims == 2 {
            SpatialGrid::square(self.n_x, self.n_y)
        } else {
            SpatialGrid::line(self.n_x)
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.spatial_grid()?, TimeGrid::new(self.n_t)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn prefix_field(prefix: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::InvalidConfig { field, message } => Error::InvalidConfig {
            field: format!("{prefix}.{field}"),
            message,
        },
        other => other,
    }
}

/// Everything `run` reports back about one solve.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uw2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uw1: Option<f64>,
    pub dual: f64,
    pub gap: f64,
    pub continuity_residual: f64,
    pub hj_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_error_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_error_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pushforward_residual: Option<f64>,
    pub converged: bool,
    pub iterations_run: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub directory: PathBuf,
    pub summary: Summary,
}

/// Execute one config. For an alpha sweep every entry runs into its own
/// subdirectory and a top-level sweep.csv collects the plot-ready trend.
pub fn run(config: &RunConfig) -> Result<Vec<RunOutput>> {
    match &config.alpha_sweep {
        None => Ok(vec![run_single(config, &config.out_dir)?]),
        Some(alphas) => {
            let mut outputs = Vec::new();
            for &alpha in alphas {
                let mut sub = config.clone();
                sub.alpha = alpha;
                sub.alpha_sweep = None;
                let dir = config.out_dir.join(format!("alpha_{alpha:e}"));
                sub.out_dir = dir.clone();
                outputs.push(run_single(&sub, &dir)?);
            }
            let mut sweep = String::from("alpha,objective,metric,dual,gap,converged\n");
            for (alpha, out) in alphas.iter().zip(&outputs) {
                let s = &out.summary;
                let metric = s.uw2.or(s.uw1).unwrap_or(f64::NAN);
                let objective = s.objective.or(s.uw1).unwrap_or(f64::NAN);
                let _ = writeln!(
                    sweep,
                    "{alpha:e},{},{},{},{},{}",
                    fmt17(objective),
                    fmt17(metric),
                    fmt17(s.dual),
                    fmt17(s.gap),
                    s.converged
                );
            }
            write_text(&config.out_dir.join("sweep.csv"), &sweep)?;
            Ok(outputs)
        }
    }
}

fn run_single(config: &RunConfig, dir: &Path) -> Result<RunOutput> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let grid = config.grid()?;
    let space = grid.space;
    let mu0 = make_density(&config.mu0, &space).map_err(prefix_field("mu0"))?;
    let mu1 = make_density(&config.mu1, &space).map_err(prefix_field("mu1"))?;
    let cfg = config.solver_config();
    let start = Instant::now();
    let summary = if config.p == 2 {
        let sol = solve_uw2(&mu0, &mu1, &cfg, &grid)?;
        let wall = start.elapsed().as_secs_f64();
        let diag = analysis::diagnostics(&sol.state, &mu0, &mu1, &cfg, &grid);
        write_uw2_outputs(dir, &sol.state.mu, &sol.state.phi, &sol.state.m, &sol.state.f)?;
        write_reports(dir, &sol.reports)?;
        Summary {
            objective: finite(sol.objective),
            uw2: finite(sol.uw2),
            uw1: None,
            dual: diag.dual,
            gap: diag.gap,
            continuity_residual: diag.continuity_residual,
            hj_violation: diag.hj.max_violation,
            mass_error_f: Some(diag.mass_error_f),
            mass_error_phi: Some(diag.mass_error_phi),
            pushforward_residual: diag.pushforward.map(|p| p.l1),
            converged: sol.converged,
            iterations_run: sol.iterations_run,
            wall_seconds: wall,
        }
    } else {
        let sol = solve_uw1(&mu0, &mu1, &cfg, &space)?;
        let wall = start.elapsed().as_secs_f64();
        write_uw1_outputs(dir, &mu0, &mu1, &sol.flux, &sol.potential, sol.source_constant)?;
        write_uw1_reports(dir, &sol.reports)?;
        let last = sol.reports.last().copied();
        Summary {
            objective: None,
            uw2: None,
            uw1: finite(sol.value),
            dual: last.map(|r| r.dual).unwrap_or(0.0),
            gap: last.map(|r| r.gap).unwrap_or(0.0),
            continuity_residual: sol.residual,
            hj_violation: last.map(|r| r.grad_bound_violation).unwrap_or(0.0),
            mass_error_f: None,
            mass_error_phi: None,
            pushforward_residual: None,
            converged: sol.converged,
            iterations_run: sol.iterations_run,
            wall_seconds: wall,
        }
    };
    write_text(&dir.join("config.json"), &config.to_json())?;
    write_text(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(RunOutput {
        directory: dir.to_path_buf(),
        summary,
    })
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// 17 significant digits: round-trips f64 exactly and re-serializes
/// byte-identically.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_matrix(path: &Path, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
    debug_assert_eq!(rows * cols, values.len());
    let mut text = String::with_capacity(values.len() * 24);
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                text.push(',');
            }
            text.push_str(&fmt17(values[r * cols + c]));
        }
        text.push('\n');
    }
    write_text(path, &text)
}

fn read_matrix(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = 0usize;
    let mut cols = None;
    let mut values = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let mut n = 0usize;
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, format!("bad number {tok:?}")))?;
            values.push(v);
            n += 1;
        }
        match cols {
            None => cols = Some(n),
            Some(c) if c != n => {
                return Err(Error::parse(path, "ragged row width"));
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::parse(path, "empty matrix"))?;
    Ok((rows, cols, values))
}

fn write_uw2_outputs(
    dir: &Path,
    mu: &CellField,
    phi: &CellField,
    m: &FaceField,
    f: &SourceSeries,
) -> Result<()> {
    let n_t = mu.n_t();
    let n_x = mu.n_x();
    let n_y = mu.n_y();
    for k in 0..n_t {
        write_matrix(&dir.join(format!("mu_{k:03}.csv")), n_y, n_x, mu.slice(k))?;
        write_matrix(&dir.join(format!("phi_{k:03}.csv")), n_y, n_x, phi.slice(k))?;
        let row = k * n_y * (n_x + 1);
        write_matrix(
            &dir.join(format!("mx_{k:03}.csv")),
            n_y,
            n_x + 1,
            &m.x_values()[row..row + n_y * (n_x + 1)],
        )?;
        if m.dims() == 2 {
            let row = k * (n_y + 1) * n_x;
            write_matrix(
                &dir.join(format!("my_{k:03}.csv")),
                n_y + 1,
                n_x,
                &m.y_values()[row..row + (n_y + 1) * n_x],
            )?;
        }
    }
    let f_text: String = f.values().iter().map(|v| fmt17(*v) + "\n").collect();
    write_text(&dir.join("f.csv"), &f_text)
}

fn write_reports(dir: &Path, reports: &[IterationReport]) -> Result<()> {
    let mut text = String::from("iter,primal,dual,gap,continuity_residual,hj_violation\n");
    for r in reports {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.iteration,
            fmt17(r.primal),
            fmt17(r.dual),
            fmt17(r.gap),
            fmt17(r.continuity_residual),
            fmt17(r.max_hj_violation)
        );
    }
    write_text(&dir.join("reports.csv"), &text)
}

fn write_uw1_outputs(
    dir: &Path,
    mu0: &SpatialField,
    mu1: &SpatialField,
    flux: &FaceField,
    potential: &SpatialField,
    source_constant: f64,
) -> Result<()> {
    let n_x = mu0.n_x();
    let n_y = mu0.n_y();
    write_matrix(&dir.join("mu_000.csv"), n_y, n_x, mu0.values())?;
    write_matrix(&dir.join("mu_001.csv"), n_y, n_x, mu1.values())?;
    write_matrix(&dir.join("phi_000.csv"), n_y, n_x, potential.values())?;
    write_matrix(
        &dir.join("mx_000.csv"),
        n_y,
        n_x + 1,
        flux.x_values(),
    )?;
    if flux.dims() == 2 {
        write_matrix(&dir.join("my_000.csv"), n_y + 1, n_x, flux.y_values())?;
    }
    write_text(&dir.join("f.csv"), &(fmt17(source_constant) + "\n"))
}

fn write_uw1_reports(dir: &Path, reports: &[Uw1Report]) -> Result<()> {
    let mut text = String::from("iter,primal,dual,gap,continuity_residual,hj_violation\n");
    for r in reports {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.iteration,
            fmt17(r.flux_cost),
            fmt17(r.dual),
            fmt17(r.gap),
            fmt17(r.residual),
            fmt17(r.grad_bound_violation)
        );
    }
    write_text(&dir.join("reports.csv"), &text)
}

/// Recompute the diagnostics of a finished run from its files. Returns the
/// freshly computed summary (wall_seconds reports the diagnose time).
pub fn diagnose(dir: &Path) -> Result<Summary> {
    let config = RunConfig::from_file(&dir.join("config.json"))?;
    let grid = config.grid()?;
    let space = grid.space;
    let start = Instant::now();
    if config.p == 2 {
        let n_t = grid.time.n_t();
        let mut mu_slices = Vec::with_capacity(n_t);
        let mut phi_slices = Vec::with_capacity(n_t);
        let mut m = FaceField::zeros(&space, n_t);
        for k in 0..n_t {
            let (rows, cols, v) = read_matrix(&dir.join(format!("mu_{k:03}.csv")))?;
            expect_shape(dir, "mu", rows, cols, space.n_y(), space.n_x())?;
            mu_slices.push(v);
            let (rows, cols, v) = read_matrix(&dir.join(format!("phi_{k:03}.csv")))?;
            expect_shape(dir, "phi", rows, cols, space.n_y(), space.n_x())?;
            phi_slices.push(v);
            let (rows, cols, v) = read_matrix(&dir.join(format!("mx_{k:03}.csv")))?;
            expect_shape(dir, "mx", rows, cols, space.n_y(), space.n_x() + 1)?;
            let at = k * space.n_y() * (space.n_x() + 1);
            m.x_values_mut()[at..at + v.len()].copy_from_slice(&v);
            if space.dims() == 2 {
                let (rows, cols, v) = read_matrix(&dir.join(format!("my_{k:03}.csv")))?;
                expect_shape(dir, "my", rows, cols, space.n_y() + 1, space.n_x())?;
                let at = k * (space.n_y() + 1) * space.n_x();
                m.y_values_mut()[at..at + v.len()].copy_from_slice(&v);
            }
        }
        let mu = CellField::from_slices(&grid, mu_slices)?;
        let phi = CellField::from_slices(&grid, phi_slices)?;
        let (_, f_cols, f_vals) = read_matrix(&dir.join("f.csv"))?;
        if f_cols != 1 || f_vals.len() != n_t {
            return Err(Error::parse(dir.join("f.csv"), "expected n_t lines"));
        }
        let f = SourceSeries::from_values(f_vals)?;
        let mu0 = SpatialField::from_values(&space, mu.slice(0).to_vec())?;
        let mu1 = SpatialField::from_values(&space, mu.slice(n_t - 1).to_vec())?;
        let cfg = config.solver_config();
        let diag = analysis::diagnostics_fields(&m, &mu, &f, &phi, &mu0, &mu1, &cfg, &grid);
        let objective = diag.primal;
        Ok(Summary {
            objective: finite(objective),
            uw2: finite((2.0 * objective.max(0.0)).sqrt()),
            uw1: None,
            dual: diag.dual,
            gap: diag.gap,
            continuity_residual: diag.continuity_residual,
            hj_violation: diag.hj.max_violation,
            mass_error_f: Some(diag.mass_error_f),
            mass_error_phi: Some(diag.mass_error_phi),
            pushforward_residual: diag.pushforward.map(|p| p.l1),
            converged: false,
            iterations_run: 0,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    } else {
        let (rows, cols, v0) = read_matrix(&dir.join("mu_000.csv"))?;
        expect_shape(dir, "mu_000", rows, cols, space.n_y(), space.n_x())?;
        let (_, _, v1) = read_matrix(&dir.join("mu_001.csv"))?;
        let (_, _, pv) = read_matrix(&dir.join("phi_000.csv"))?;
        let mu0 = SpatialField::from_values(&space, v0)?;
        let mu1 = SpatialField::from_values(&space, v1)?;
        let potential = SpatialField::from_values(&space, pv)?;
        let mut flux = FaceField::zeros(&space, 1);
        let (rows, cols, mx) = read_matrix(&dir.join("mx_000.csv"))?;
        expect_shape(dir, "mx_000", rows, cols, space.n_y(), space.n_x() + 1)?;
        flux.x_values_mut().copy_from_slice(&mx);
        if space.dims() == 2 {
            let (_, _, my) = read_matrix(&dir.join("my_000.csv"))?;
            flux.y_values_mut().copy_from_slice(&my);
        }
        let m0 = crate::grid::integrate(mu0.values(), &space);
        let m1 = crate::grid::integrate(mu1.values(), &space);
        let g_cell: Vec<f64> = mu0
            .values()
            .iter()
            .zip(mu1.values())
            .map(|(a, b)| b - a + (m0 - m1))
            .collect();
        let report = uw1_report(0, &flux, &potential, &g_cell, &space);
        Ok(Summary {
            objective: None,
            uw2: None,
            uw1: finite(report.flux_cost + (m0 - m1).abs() / config.alpha),
            dual: report.dual,
            gap: report.gap,
            continuity_residual: report.residual,
            hj_violation: report.grad_bound_violation,
            mass_error_f: None,
            mass_error_phi: None,
            pushforward_residual: None,
            converged: false,
            iterations_run: 0,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

fn expect_shape(
    dir: &Path,
    what: &str,
    rows: usize,
    cols: usize,
    want_rows: usize,
    want_cols: usize,
) -> Result<()> {
    if rows != want_rows || cols != want_cols {
        return Err(Error::parse(
            dir.to_path_buf(),
            format!("{what}: {rows}x{cols} does not match the grid ({want_rows}x{want_cols})"),
        ));
    }
    Ok(())
}
