//! Primal-dual iteration for the dynamic UW2 problem in minimal-flux form.
//!
//! One iteration performs proximal descent on the flux m, the density mu and
//! the source f (all reading the previous iterate and the current potential),
//! an over-relaxed extrapolation, and gradient ascent on the multiplier Phi.
//! The endpoint density slices stay pinned to the input data bitwise.

use crate::analysis;
use crate::cubic::root_plus_prox;
use crate::densities::linear_path;
use crate::error::{Error, Result};
use crate::grid::{integrate, CellField, FaceField, Grid, SourceSeries, SpatialField};

pub use crate::cubic::root_plus;

/// Step sizes and budgets for either solver family.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Transport exponent, 1 or 2.
    pub p: u8,
    /// Source penalty weight alpha > 0.
    pub alpha: f64,
    /// Primal step.
    pub tau1: f64,
    /// Dual (ascent) step.
    pub tau2: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the duality gap and the continuity residual.
    pub tolerance: f64,
    /// Iteration stride between diagnostic reports.
    pub report_every: usize,
    /// Keep f at zero (the classical balanced transport solver).
    pub freeze_source: bool,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p != 1 && self.p != 2 {
            return Err(Error::config("p", "must be 1 or 2"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::config("alpha", "must be > 0"));
        }
        if !(self.tau1.is_finite() && self.tau1 > 0.0) {
            return Err(Error::config("tau1", "must be > 0"));
        }
        if !(self.tau2.is_finite() && self.tau2 > 0.0) {
            return Err(Error::config("tau2", "must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("iterations", "must be >= 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be > 0"));
        }
        if self.report_every == 0 {
            return Err(Error::config("report_every", "must be >= 1"));
        }
        Ok(())
    }

    /// Operator-norm-safe default steps for the UW1 solver.
    pub fn uw1_default_step(space: &crate::grid::SpatialGrid) -> f64 {
        space.dx().min(space.dy()) / 8f64.sqrt()
    }
}

/// The primal-dual iterate: (m, mu, f, Phi) plus the extrapolated triple.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub m: FaceField,
    pub mu: CellField,
    pub f: SourceSeries,
    pub phi: CellField,
    pub m_tilde: FaceField,
    pub mu_tilde: CellField,
    pub f_tilde: SourceSeries,
    next_m: FaceField,
    next_mu: CellField,
    next_f: SourceSeries,
    iteration: usize,
}

impl SolverState {
    /// Feasible-in-mass start: mu on the straight-line path with pinned ends,
    /// m = 0, f constant at the mass imbalance (so the integrated mass
    /// identity holds from iteration 0), Phi = 0.
    pub fn init(
        mu0: &SpatialField,
        mu1: &SpatialField,
        cfg: &SolverConfig,
        grid: &Grid,
    ) -> Result<Self> {
        let mut mu = linear_path(mu0, mu1, grid)?;
        mu.set_slice(0, mu0.values());
        mu.set_slice(grid.time.n_t() - 1, mu1.values());
        let imbalance = integrate(mu1.values(), &grid.space) - integrate(mu0.values(), &grid.space);
        let f = if cfg.freeze_source {
            SourceSeries::zeros(&grid.time)
        } else {
            SourceSeries::constant(&grid.time, imbalance)
        };
        let m = FaceField::zeros(&grid.space, grid.time.n_t());
        let phi = CellField::zeros(grid);
        Ok(SolverState {
            m_tilde: m.clone(),
            mu_tilde: mu.clone(),
            f_tilde: f.clone(),
            next_m: m.clone(),
            next_mu: mu.clone(),
            next_f: f.clone(),
            m,
            mu,
            f,
            phi,
            iteration: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }
}

/// Diagnostics recorded every `report_every` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub continuity_residual: f64,
    pub max_hj_violation: f64,
}

/// One full primal-dual iteration for UW2. `mu0`/`mu1` are the pinned endpoint
/// densities; the step rewrites those slices from them verbatim.
pub fn pd_step_uw2(
    state: &mut SolverState,
    mu0: &SpatialField,
    mu1: &SpatialField,
    cfg: &SolverConfig,
    grid: &Grid,
) -> Result<()> {
    let n_t = grid.time.n_t();
    let n_x = grid.space.n_x();
    let n_y = grid.space.n_y();
    let dt = grid.time.dt();
    let dx = grid.space.dx();
    let dy = grid.space.dy();
    let two_d = grid.space.dims() == 2;
    let tau1 = cfg.tau1;
    let iteration = state.iteration;

    // density update: cubic prox at interior-time cells, endpoints pinned
    let mut check = 0.0;
    {
        let mu = &state.mu;
        let m = &state.m;
        let phi = &state.phi;
        let next = &mut state.next_mu;
        next.set_slice(0, mu0.values());
        next.set_slice(n_t - 1, mu1.values());
        for k in 1..n_t - 1 {
            for j in 0..n_y {
                for i in 0..n_x {
                    let c = j * n_x + i;
                    let sx = m.x_at(k, i, j) + m.x_at(k, i + 1, j);
                    let sum_sq = if two_d {
                        let sy = m.y_at(k, i, j) + m.y_at(k, i, j + 1);
                        sx * sx + sy * sy
                    } else {
                        sx * sx
                    };
                    let b = -(tau1 * phi.dt_phi_at(k, c, dt) + mu.at_flat(k, c));
                    let d = -(tau1 / 8.0) * sum_sq;
                    let root = root_plus_prox(b, d);
                    next.slice_mut(k)[c] = root;
                    check += root;
                }
            }
        }
    }
    if !check.is_finite() {
        return Err(Error::Divergence {
            update: "density",
            iteration,
        });
    }

    // flux update: face-averaged density weight, boundary faces stay zero
    check = 0.0;
    {
        let mu = &state.mu;
        let m = &state.m;
        let phi = &state.phi;
        let next = &mut state.next_m;
        for k in 0..n_t {
            for j in 0..n_y {
                for e in 1..n_x {
                    let musum = mu.at(k, e, j) + mu.at(k, e - 1, j);
                    let w = musum / (musum + 2.0 * tau1);
                    let g = (phi.at(k, e, j) - phi.at(k, e - 1, j)) / dx;
                    let idx = m.x_index(k, e, j);
                    let v = w * (tau1 * g + m.x_values()[idx]);
                    next.x_values_mut()[idx] = v;
                    check += v;
                }
            }
            if two_d {
                for g_row in 1..n_y {
                    for i in 0..n_x {
                        let musum = mu.at(k, i, g_row) + mu.at(k, i, g_row - 1);
                        let w = musum / (musum + 2.0 * tau1);
                        let g = (phi.at(k, i, g_row) - phi.at(k, i, g_row - 1)) / dy;
                        let idx = m.y_index(k, i, g_row);
                        let v = w * (tau1 * g + m.y_values()[idx]);
                        next.y_values_mut()[idx] = v;
                        check += v;
                    }
                }
            }
        }
    }
    if !check.is_finite() {
        return Err(Error::Divergence {
            update: "flux",
            iteration,
        });
    }

    // source update
    check = 0.0;
    {
        let phi = &state.phi;
        let f = &state.f;
        let next = &mut state.next_f;
        if cfg.freeze_source {
            next.values_mut().copy_from_slice(f.values());
        } else {
            let shrink = cfg.alpha / (cfg.alpha + tau1);
            let measure = grid.space.cell_measure();
            for k in 0..n_t {
                let int_phi: f64 = phi.slice(k).iter().sum::<f64>() * measure;
                let v = shrink * (tau1 * int_phi + f.at(k));
                next.values_mut()[k] = v;
                check += v;
            }
        }
    }
    if !check.is_finite() {
        return Err(Error::Divergence {
            update: "source",
            iteration,
        });
    }

    // extrapolate (tilde = 2 next - current), then promote next -> current
    for ((tilde, next), cur) in state
        .mu_tilde
        .values_mut()
        .iter_mut()
        .zip(state.next_mu.values())
        .zip(state.mu.values())
    {
        *tilde = 2.0 * next - cur;
    }
    for ((tilde, next), cur) in state
        .m_tilde
        .x_values_mut()
        .iter_mut()
        .zip(state.next_m.x_values())
        .zip(state.m.x_values())
    {
        *tilde = 2.0 * next - cur;
    }
    for ((tilde, next), cur) in state
        .m_tilde
        .y_values_mut()
        .iter_mut()
        .zip(state.next_m.y_values())
        .zip(state.m.y_values())
    {
        *tilde = 2.0 * next - cur;
    }
    for ((tilde, next), cur) in state
        .f_tilde
        .values_mut()
        .iter_mut()
        .zip(state.next_f.values())
        .zip(state.f.values())
    {
        *tilde = 2.0 * next - cur;
    }
    std::mem::swap(&mut state.mu, &mut state.next_mu);
    std::mem::swap(&mut state.m, &mut state.next_m);
    std::mem::swap(&mut state.f, &mut state.next_f);

    // multiplier ascent on the extrapolated continuity residual
    check = 0.0;
    {
        let mu_t = &state.mu_tilde;
        let m_t = &state.m_tilde;
        let f_t = &state.f_tilde;
        let phi = &mut state.phi;
        for k in 0..n_t {
            let fk = f_t.at(k);
            for j in 0..n_y {
                for i in 0..n_x {
                    let c = j * n_x + i;
                    let resid =
                        mu_t.dt_u_at(k, c, dt) + m_t.divergence_at(k, i, j, &grid.space) - fk;
                    let slot = &mut phi.slice_mut(k)[c];
                    *slot += cfg.tau2 * resid;
                    check += *slot;
                }
            }
        }
    }
    if !check.is_finite() {
        return Err(Error::Divergence {
            update: "potential",
            iteration,
        });
    }

    state.iteration += 1;
    Ok(())
}

/// Result of a UW2 solve.
#[derive(Debug, Clone)]
pub struct Uw2Solution {
    pub state: SolverState,
    pub reports: Vec<IterationReport>,
    /// J = (1/2) sum |m|^2/mu + (1/(2 alpha)) sum f^2; the halved objective
    /// the experiments report.
    pub objective: f64,
    /// The metric value sqrt(2 J).
    pub uw2: f64,
    pub converged: bool,
    pub iterations_run: usize,
}

/// Solve the dynamic UW2 problem between `mu0` and `mu1`.
///
/// Runs `pd_step_uw2` until both the duality gap and the continuity residual
/// fall below the tolerance (checked at report strides) or the budget is
/// spent. Deterministic for fixed inputs and config.
pub fn solve_uw2(
    mu0: &SpatialField,
    mu1: &SpatialField,
    cfg: &SolverConfig,
    grid: &Grid,
) -> Result<Uw2Solution> {
    cfg.validate()?;
    if cfg.p != 2 {
        return Err(Error::config("p", "solve_uw2 requires p = 2"));
    }
    if grid.time.n_t() < 3 {
        return Err(Error::InvalidGrid(format!(
            "UW2 solver needs n_t >= 3, got {}",
            grid.time.n_t()
        )));
    }
    if !mu0.same_shape(mu1) {
        return Err(Error::ShapeMismatch("mu0 and mu1 differ in shape".into()));
    }
    if mu0.n_x() != grid.space.n_x() || mu0.n_y() != grid.space.n_y() {
        return Err(Error::ShapeMismatch(
            "density shape does not match the grid".into(),
        ));
    }
    if mu0.values().iter().chain(mu1.values()).any(|&v| v < 0.0) {
        return Err(Error::ShapeMismatch(
            "input densities must be nonnegative".into(),
        ));
    }

    let mut state = SolverState::init(mu0, mu1, cfg, grid)?;
    let mut reports: Vec<IterationReport> = Vec::new();
    let mut converged = false;
    while state.iteration < cfg.max_iterations {
        pd_step_uw2(&mut state, mu0, mu1, cfg, grid)?;
        let it = state.iteration;
        if it.is_multiple_of(cfg.report_every) || it == cfg.max_iterations {
            let report = analysis::iteration_report(&state, mu0, mu1, cfg, grid);
            let done = report.gap.abs() <= cfg.tolerance * (1.0 + report.primal.abs())
                && report.continuity_residual <= cfg.tolerance;
            reports.push(report);
            if done {
                converged = true;
                break;
            }
        }
    }
    let (objective, _) = analysis::primal_objective(&state.m, &state.mu, &state.f, cfg.alpha, grid);
    let uw2 = (2.0 * objective.max(0.0)).sqrt();
    Ok(Uw2Solution {
        iterations_run: state.iteration,
        state,
        reports,
        objective,
        uw2,
        converged,
    })
}
