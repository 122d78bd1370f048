//! Variational identities and optimality diagnostics on solver output:
//! primal/dual objectives and their gap, continuity and Hamilton-Jacobi
//! residuals, the integrated mass identities, and the 1D push-forward
//! residual of the induced transport map.

use crate::error::{Error, Result};
use crate::grid::{integrate, CellField, FaceField, Grid, SourceSeries, SpatialField};
use crate::solver::{IterationReport, SolverConfig, SolverState};

/// Cells with density at or below this threshold are treated as empty in the
/// kinetic term: zero local flux contributes nothing, nonzero flux is
/// infeasible (the F(m, mu) convention).
pub const DENSITY_EPS: f64 = 1e-12;

/// Threshold selecting the support {mu > eps} for the HJ equality check.
pub const HJ_SUPPORT_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjResidual {
    /// max(r, 0) over interior-time cells, r = dt_phi(Phi) + |grad Phi|^2 / 2.
    pub max_violation: f64,
    /// Same including the endpoint rows, whose stencil carries the boundary
    /// pairing and is not a pointwise time derivative.
    pub max_violation_all: f64,
    /// max |r| over interior-time cells with mu above the support threshold.
    pub max_support_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushforwardResidual {
    /// L1 norm of the push-forward defect over cells mapped into [0, 1].
    pub l1: f64,
    /// Fraction of cells whose image leaves the domain (excluded from l1).
    pub excluded_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub continuity_residual: f64,
    pub hj: HjResidual,
    /// Trapezoidal integral of f minus the mass imbalance M1 - M0.
    pub mass_error_f: f64,
    /// alpha times the space-time integral of Phi minus M1 - M0.
    pub mass_error_phi: f64,
    pub pushforward: Option<PushforwardResidual>,
    /// Cells with vanishing density but nonzero local flux (primal is +inf).
    pub infeasible_cells: usize,
}

/// Halved kinetic-plus-source objective:
/// (1/2) sum_cells |m_cell|^2 / mu dx dy dt + (1/(2 alpha)) sum_k f_k^2 dt,
/// with the cell flux taken as the average of opposing faces (the same
/// combination the density prox optimizes). Returns the value (+inf when an
/// empty cell carries flux) and the count of such infeasible cells.
#[inline(never)]
pub fn primal_objective(
    m: &FaceField,
    mu: &CellField,
    f: &SourceSeries,
    alpha: f64,
    grid: &Grid,
) -> (f64, usize) {
    let n_t = grid.time.n_t();
    let n_x = grid.space.n_x();
    let n_y = grid.space.n_y();
    let w = grid.space.cell_measure() * grid.time.dt();
    let mut kinetic = 0.0;
    let mut infeasible = 0usize;
    for k in 0..n_t {
        for j in 0..n_y {
            for i in 0..n_x {
                let (cx, cy) = m.cell_avg_at(k, i, j);
                let flux_sq = cx * cx + cy * cy;
                let density = mu.at(k, i, j);
                if density > DENSITY_EPS {
                    kinetic += flux_sq / density;
                } else if flux_sq.sqrt() > DENSITY_EPS {
                    infeasible += 1;
                }
            }
        }
    }
    if infeasible > 0 {
        return (f64::INFINITY, infeasible);
    }
    let source: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * grid.time.dt();
    (0.5 * kinetic * w + source / (2.0 * alpha), 0)
}

/// Endpoint pairing of the Kantorovich dual. The discrete time stencils put
/// the boundary pairing on the summation-by-parts combinations
/// Phi(1) = Phi_{n_t-1} + Phi_{n_t-2}/2 and Phi(0) = Phi_0 + Phi_1/2;
/// pairing bare end slices instead leaves an O(1) gap at the saddle point.
#[inline(never)]
pub fn dual_endpoint_pairing(
    phi: &CellField,
    mu0: &SpatialField,
    mu1: &SpatialField,
    grid: &Grid,
) -> f64 {
    let last = grid.time.n_t() - 1;
    let measure = grid.space.cell_measure();
    let mut acc = 0.0;
    for c in 0..grid.space.n_cells() {
        let phi_end = phi.at_flat(last, c) + 0.5 * phi.at_flat(last - 1, c);
        let phi_start = phi.at_flat(0, c) + 0.5 * phi.at_flat(1, c);
        acc += phi_end * mu1.values()[c] - phi_start * mu0.values()[c];
    }
    acc * measure
}

/// Kantorovich dual value:
/// pairing - (alpha/2) sum_k (integral of Phi_k)^2 dt.
#[inline(never)]
pub fn dual_objective(
    phi: &CellField,
    mu0: &SpatialField,
    mu1: &SpatialField,
    alpha: f64,
    grid: &Grid,
) -> f64 {
    dual_endpoint_pairing(phi, mu0, mu1, grid) - 0.5 * alpha * phi_square_term(phi, grid)
}

fn phi_square_term(phi: &CellField, grid: &Grid) -> f64 {
    let measure = grid.space.cell_measure();
    (0..grid.time.n_t())
        .map(|k| {
            let s: f64 = phi.slice(k).iter().sum::<f64>() * measure;
            s * s
        })
        .sum::<f64>()
        * grid.time.dt()
}

/// primal - dual at the current state. For a frozen source the quadratic
/// alpha-term is not part of the dual and is dropped.
#[inline(never)]
pub fn duality_gap(
    state: &SolverState,
    mu0: &SpatialField,
    mu1: &SpatialField,
    cfg: &SolverConfig,
    grid: &Grid,
) -> f64 {
    let (primal, _) = primal_objective(&state.m, &state.mu, &state.f, cfg.alpha, grid);
    let dual = if cfg.freeze_source {
        dual_endpoint_pairing(&state.phi, mu0, mu1, grid)
    } else {
        dual_objective(&state.phi, mu0, mu1, cfg.alpha, grid)
    };
    primal - dual
}

/// L2 grid norm of dt_u(mu) + div m - f, weighted by sqrt(dx dy dt).
#[inline(never)]
pub fn continuity_residual(
    m: &FaceField,
    mu: &CellField,
    f: &SourceSeries,
    grid: &Grid,
) -> f64 {
    let n_t = grid.time.n_t();
    let n_x = grid.space.n_x();
    let n_y = grid.space.n_y();
    let dt = grid.time.dt();
    let mut acc = 0.0;
    for k in 0..n_t {
        let fk = f.at(k);
        for j in 0..n_y {
            for i in 0..n_x {
                let c = j * n_x + i;
                let r = mu.dt_u_at(k, c, dt) + m.divergence_at(k, i, j, &grid.space) - fk;
                acc += r * r;
            }
        }
    }
    (acc * grid.space.cell_measure() * dt).sqrt()
}

/// Hamilton-Jacobi residual r = dt_phi(Phi) + |grad Phi|^2 / 2 with the face
/// gradients averaged back to cells. Reported, never enforced.
#[inline(never)]
pub fn hj_residual(phi: &CellField, mu: &CellField, eps: f64, grid: &Grid) -> HjResidual {
    let n_t = grid.time.n_t();
    let n_x = grid.space.n_x();
    let n_y = grid.space.n_y();
    let two_d = grid.space.dims() == 2;
    let dt = grid.time.dt();
    let dx = grid.space.dx();
    let dy = grid.space.dy();
    let mut max_violation = 0.0f64;
    let mut max_violation_all = 0.0f64;
    let mut max_support_error = 0.0f64;
    for k in 0..n_t {
        let interior = k > 0 && k < n_t - 1;
        for j in 0..n_y {
            for i in 0..n_x {
                let c = j * n_x + i;
                // average the two opposing face gradients; boundary faces are zero
                let gl = if i > 0 {
                    (phi.at(k, i, j) - phi.at(k, i - 1, j)) / dx
                } else {
                    0.0
                };
                let gr = if i + 1 < n_x {
                    (phi.at(k, i + 1, j) - phi.at(k, i, j)) / dx
                } else {
                    0.0
                };
                let gx = 0.5 * (gl + gr);
                let gy = if two_d {
                    let gd = if j > 0 {
                        (phi.at(k, i, j) - phi.at(k, i, j - 1)) / dy
                    } else {
                        0.0
                    };
                    let gu = if j + 1 < n_y {
                        (phi.at(k, i, j + 1) - phi.at(k, i, j)) / dy
                    } else {
                        0.0
                    };
                    0.5 * (gd + gu)
                } else {
                    0.0
                };
                let r = phi.dt_phi_at(k, c, dt) + 0.5 * (gx * gx + gy * gy);
                max_violation_all = max_violation_all.max(r);
                if interior {
                    max_violation = max_violation.max(r);
                    if mu.at_flat(k, c) > eps {
                        max_support_error = max_support_error.max(r.abs());
                    }
                }
            }
        }
    }
    HjResidual {
        max_violation: max_violation.max(0.0),
        max_violation_all: max_violation_all.max(0.0),
        max_support_error,
    }
}

/// The two integrated mass identities, as signed errors:
/// e1 = integral of f dt - (M1 - M0) and e2 = alpha * integral of Phi dx dt
/// minus (M1 - M0). Both use the trapezoidal node weights under which the
/// discrete continuity rows telescope exactly.
#[inline(never)]
pub fn mass_identities(
    f: &SourceSeries,
    phi: &CellField,
    mu0: &SpatialField,
    mu1: &SpatialField,
    alpha: f64,
    grid: &Grid,
) -> (f64, f64) {
    let imbalance = integrate(mu1.values(), &grid.space) - integrate(mu0.values(), &grid.space);
    let f_int: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| v * grid.time.node_weight(k))
        .sum();
    let measure = grid.space.cell_measure();
    let phi_int: f64 = (0..grid.time.n_t())
        .map(|k| phi.slice(k).iter().sum::<f64>() * measure * grid.time.node_weight(k))
        .sum();
    (f_int - imbalance, alpha * phi_int - imbalance)
}

/// 1D push-forward defect of the map M(x) = x + d/dx Phi(0, x), with the
/// endpoint potential taken as the summation-by-parts combination
/// Phi_0 + Phi_1/2 (the bare end slice is a half-amplitude boundary layer):
/// residual = mu1(M(x)) M'(x) - mu0(x) - integral of f(t) (t M' + 1 - t) dt.
#[inline(never)]
pub fn pushforward_residual_1d(
    phi: &CellField,
    f: &SourceSeries,
    mu0: &SpatialField,
    mu1: &SpatialField,
    grid: &Grid,
) -> Result<PushforwardResidual> {
    if grid.space.dims() != 1 {
        return Err(Error::ShapeMismatch(
            "push-forward residual is defined in 1D".into(),
        ));
    }
    let n_x = grid.space.n_x();
    let n_t = grid.time.n_t();
    let dx = grid.space.dx();

    // endpoint potential and its cell-centered gradient
    let p0: Vec<f64> = (0..n_x)
        .map(|i| phi.at(0, i, 0) + 0.5 * phi.at(1, i, 0))
        .collect();
    let mut map = vec![0.0; n_x];
    for i in 0..n_x {
        let gl = if i > 0 { (p0[i] - p0[i - 1]) / dx } else { 0.0 };
        let gr = if i + 1 < n_x {
            (p0[i + 1] - p0[i]) / dx
        } else {
            0.0
        };
        map[i] = grid.space.x_center(i) + 0.5 * (gl + gr);
    }
    // centered derivative of the map, one-sided at the ends
    let mut map_deriv = vec![0.0; n_x];
    for i in 0..n_x {
        map_deriv[i] = if i == 0 {
            (map[1] - map[0]) / dx
        } else if i == n_x - 1 {
            (map[n_x - 1] - map[n_x - 2]) / dx
        } else {
            (map[i + 1] - map[i - 1]) / (2.0 * dx)
        };
    }

    let mut l1 = 0.0;
    let mut excluded = 0usize;
    for i in 0..n_x {
        if !(0.0..=1.0).contains(&map[i]) {
            excluded += 1;
            continue;
        }
        // linear interpolation of mu1 between cell centers, clamped at the ends
        let pos = ((map[i] - 0.5 * dx) / dx).clamp(0.0, (n_x - 1) as f64);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(n_x - 1);
        let frac = pos - i0 as f64;
        let mu1_at_map = mu1.values()[i0] * (1.0 - frac) + mu1.values()[i1] * frac;
        // trapezoidal time integral of f(t) (t M' + (1 - t))
        let mut source = 0.0;
        for k in 0..n_t {
            let t = grid.time.node(k);
            source += f.at(k) * (t * map_deriv[i] + (1.0 - t)) * grid.time.node_weight(k);
        }
        let r = mu1_at_map * map_deriv[i] - mu0.values()[i] - source;
        l1 += r.abs() * dx;
    }
    Ok(PushforwardResidual {
        l1,
        excluded_fraction: excluded as f64 / n_x as f64,
    })
}

/// Full diagnostic bundle for a UW2 state.
pub fn diagnostics(
    state: &SolverState,
    mu0: &SpatialField,
    mu1: &SpatialField,
    cfg: &SolverConfig,
    grid: &Grid,
) -> Diagnostics {
    diagnostics_fields(
        &state.m,
        &state.mu,
        &state.f,
        &state.phi,
        mu0,
        mu1,
        cfg,
        grid,
    )
}

/// Same bundle from bare fields (the diagnose-from-disk path). Keeping one
/// instantiation guarantees a recomputation from round-tripped files is
/// bit-identical to the in-memory diagnostics.
#[allow(clippy::too_many_arguments)]
#[inline(never)]
pub fn diagnostics_fields(
    m: &FaceField,
    mu: &CellField,
    f: &SourceSeries,
    phi: &CellField,
    mu0: &SpatialField,
    mu1: &SpatialField,
    cfg: &SolverConfig,
    grid: &Grid,
) -> Diagnostics {
    let (primal, infeasible_cells) = primal_objective(m, mu, f, cfg.alpha, grid);
    let dual = if cfg.freeze_source {
        dual_endpoint_pairing(phi, mu0, mu1, grid)
    } else {
        dual_objective(phi, mu0, mu1, cfg.alpha, grid)
    };
    let hj = hj_residual(phi, mu, HJ_SUPPORT_EPS, grid);
    let (mass_error_f, mass_error_phi) = mass_identities(f, phi, mu0, mu1, cfg.alpha, grid);
    let pushforward = if grid.space.dims() == 1 {
        pushforward_residual_1d(phi, f, mu0, mu1, grid).ok()
    } else {
        None
    };
    Diagnostics {
        primal,
        dual,
        gap: primal - dual,
        continuity_residual: continuity_residual(m, mu, f, grid),
        hj,
        mass_error_f,
        mass_error_phi,
        pushforward,
        infeasible_cells,
    }
}

/// The per-stride report row the solver records.
#[inline(never)]
pub fn iteration_report(
    state: &SolverState,
    mu0: &SpatialField,
    mu1: &SpatialField,
    cfg: &SolverConfig,
    grid: &Grid,
) -> IterationReport {
    let (primal, _) = primal_objective(&state.m, &state.mu, &state.f, cfg.alpha, grid);
    let dual = if cfg.freeze_source {
        dual_endpoint_pairing(&state.phi, mu0, mu1, grid)
    } else {
        dual_objective(&state.phi, mu0, mu1, cfg.alpha, grid)
    };
    let hj = hj_residual(&state.phi, &state.mu, HJ_SUPPORT_EPS, grid);
    IterationReport {
        iteration: state.iteration(),
        primal,
        dual,
        gap: primal - dual,
        continuity_residual: continuity_residual(&state.m, &state.mu, &state.f, grid),
        max_hj_violation: hj.max_violation,
    }
}
