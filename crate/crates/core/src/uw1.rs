//! The L1 metric: minimal-flux (Beckmann) solver and the 1D closed form.
//!
//! Integrating the time variable out of the dynamic problem leaves a single
//! flux field m on the spatial grid with the constraint
//! mu1 - mu0 + c + div m = 0, c = M0 - M1, and the value
//! sum |m| dx dy + |M0 - M1| / alpha. The solver is a primal-dual iteration
//! with vector soft-shrinkage on m and ascent on the one constraint field.

use crate::error::{Error, Result};
use crate::grid::{integrate, FaceField, SourceSeries, SpatialField, SpatialGrid};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uw1Report {
    pub iteration: usize,
    /// Flux part of the objective, sum |m| dx dy.
    pub flux_cost: f64,
    /// Dual value <phi, g> of the flux subproblem.
    pub dual: f64,
    pub gap: f64,
    /// L2 norm of the constraint residual div m + g.
    pub residual: f64,
    /// Worst violation of the dual bound |grad phi| <= 1.
    pub grad_bound_violation: f64,
}

#[derive(Debug, Clone)]
pub struct Uw1Solution {
    /// Optimal flux on a single time slab.
    pub flux: FaceField,
    /// Dual potential of the divergence constraint.
    pub potential: SpatialField,
    /// sum |m| dx dy + |M0 - M1| / alpha.
    pub value: f64,
    /// The time-integrated source, f = M1 - M0 (constant in time).
    pub source_constant: f64,
    pub residual: f64,
    pub converged: bool,
    pub iterations_run: usize,
    pub reports: Vec<Uw1Report>,
}

impl Uw1Solution {
    /// The constant-in-time source as a one-node series for file output.
    pub fn source_series(&self) -> SourceSeries {
        SourceSeries::from_values(vec![self.source_constant]).expect("finite")
    }
}

/// Solve the minimal-flux UW1 problem between `mu0` and `mu1`.
pub fn solve_uw1(
    mu0: &SpatialField,
    mu1: &SpatialField,
    cfg: &SolverConfig,
    space: &SpatialGrid,
) -> Result<Uw1Solution> {
    cfg.validate()?;
    if cfg.p != 1 {
        return Err(Error::config("p", "solve_uw1 requires p = 1"));
    }
    if !mu0.same_shape(mu1) {
        return Err(Error::ShapeMismatch("mu0 and mu1 differ in shape".into()));
    }
    if mu0.n_x() != space.n_x() || mu0.n_y() != space.n_y() {
        return Err(Error::ShapeMismatch(
            "density shape does not match the grid".into(),
        ));
    }
    if mu0.values().iter().chain(mu1.values()).any(|&v| v < 0.0) {
        return Err(Error::ShapeMismatch(
            "input densities must be nonnegative".into(),
        ));
    }

    let n_x = space.n_x();
    let n_y = space.n_y();
    let two_d = space.dims() == 2;
    let dx = space.dx();
    let dy = space.dy();
    let m0 = integrate(mu0.values(), space);
    let m1 = integrate(mu1.values(), space);
    let mass_shift = m0 - m1;
    // balanced residual source: g = mu1 - mu0 + c sums to zero
    let g_cell: Vec<f64> = mu0
        .values()
        .iter()
        .zip(mu1.values())
        .map(|(a, b)| b - a + mass_shift)
        .collect();

    let (tau1, tau2) = (cfg.tau1, cfg.tau2);
    let mut m = FaceField::zeros(space, 1);
    let mut m_tilde = m.clone();
    let mut phi = SpatialField::zeros(space);
    let mut reports = Vec::new();
    let mut converged = false;
    let mut iteration = 0usize;

    while iteration < cfg.max_iterations {
        // shrink step: each interior cell owns its left x-face and lower
        // y-face; the pair is shrunk as a vector
        let mut check = 0.0;
        for j in 0..n_y {
            for i in 0..n_x {
                let own_x = i >= 1;
                let own_y = two_d && j >= 1;
                if !own_x && !own_y {
                    continue;
                }
                let mut vx = 0.0;
                let mut vy = 0.0;
                if own_x {
                    let grad = (phi.at(i, j) - phi.at(i - 1, j)) / dx;
                    vx = m.x_at(0, i, j) + tau1 * grad;
                }
                if own_y {
                    let grad = (phi.at(i, j) - phi.at(i, j - 1)) / dy;
                    vy = m.y_at(0, i, j) + tau1 * grad;
                }
                let norm = (vx * vx + vy * vy).sqrt();
                let scale = if norm > tau1 { 1.0 - tau1 / norm } else { 0.0 };
                if own_x {
                    let idx = m.x_index(0, i, j);
                    let old = m.x_values()[idx];
                    let new = scale * vx;
                    m.x_values_mut()[idx] = new;
                    m_tilde.x_values_mut()[idx] = 2.0 * new - old;
                    check += new;
                }
                if own_y {
                    let idx = m.y_index(0, i, j);
                    let old = m.y_values()[idx];
                    let new = scale * vy;
                    m.y_values_mut()[idx] = new;
                    m_tilde.y_values_mut()[idx] = 2.0 * new - old;
                    check += new;
                }
            }
        }
        if !check.is_finite() {
            return Err(Error::Divergence {
                update: "flux",
                iteration,
            });
        }

        // ascent on the divergence constraint
        check = 0.0;
        for j in 0..n_y {
            for i in 0..n_x {
                let c = j * n_x + i;
                let resid = m_tilde.divergence_at(0, i, j, space) + g_cell[c];
                let slot = &mut phi.values_mut()[c];
                *slot += tau2 * resid;
                check += *slot;
            }
        }
        if !check.is_finite() {
            return Err(Error::Divergence {
                update: "potential",
                iteration,
            });
        }

        iteration += 1;
        if iteration.is_multiple_of(cfg.report_every) || iteration == cfg.max_iterations {
            let report = uw1_report(iteration, &m, &phi, &g_cell, space);
            let done = report.residual <= cfg.tolerance;
            reports.push(report);
            if done {
                converged = true;
                break;
            }
        }
    }

    let last = reports
        .last()
        .copied()
        .unwrap_or_else(|| uw1_report(iteration, &m, &phi, &g_cell, space));
    let value = last.flux_cost + mass_shift.abs() / cfg.alpha;
    Ok(Uw1Solution {
        flux: m,
        potential: phi,
        value,
        source_constant: m1 - m0,
        residual: last.residual,
        converged,
        iterations_run: iteration,
        reports,
    })
}

pub(crate) fn uw1_report(
    iteration: usize,
    m: &FaceField,
    phi: &SpatialField,
    g_cell: &[f64],
    space: &SpatialGrid,
) -> Uw1Report {
    let n_x = space.n_x();
    let n_y = space.n_y();
    let two_d = space.dims() == 2;
    let measure = space.cell_measure();
    let mut flux_cost = 0.0;
    let mut grad_violation = 0.0f64;
    for j in 0..n_y {
        for i in 0..n_x {
            let mut mx = 0.0;
            let mut my = 0.0;
            let mut gx = 0.0;
            let mut gy = 0.0;
            if i >= 1 {
                mx = m.x_at(0, i, j);
                gx = (phi.at(i, j) - phi.at(i - 1, j)) / space.dx();
            }
            if two_d && j >= 1 {
                my = m.y_at(0, i, j);
                gy = (phi.at(i, j) - phi.at(i, j - 1)) / space.dy();
            }
            flux_cost += (mx * mx + my * my).sqrt();
            grad_violation = grad_violation.max((gx * gx + gy * gy).sqrt() - 1.0);
        }
    }
    flux_cost *= measure;
    let mut dual = 0.0;
    let mut resid_sq = 0.0;
    for j in 0..n_y {
        for i in 0..n_x {
            let c = j * n_x + i;
            dual += phi.values()[c] * g_cell[c];
            let r = m.divergence_at(0, i, j, space) + g_cell[c];
            resid_sq += r * r;
        }
    }
    dual *= measure;
    Uw1Report {
        iteration,
        flux_cost,
        dual,
        gap: flux_cost - dual,
        residual: (resid_sq * measure).sqrt(),
        grad_bound_violation: grad_violation.max(0.0),
    }
}

/// Explicit 1D value: the integral of |F1(x) - F0(x) - x (M1 - M0)| over the
/// staggered face cells (cumulative cell sums, face midpoints) plus the
/// mass-shift term |M1 - M0| / alpha.
pub fn uw1_closed_form_1d(
    mu0: &SpatialField,
    mu1: &SpatialField,
    alpha: f64,
    space: &SpatialGrid,
) -> Result<f64> {
    if space.dims() != 1 {
        return Err(Error::ShapeMismatch(
            "closed form is for 1D densities".into(),
        ));
    }
    if !mu0.same_shape(mu1) || mu0.n_x() != space.n_x() {
        return Err(Error::ShapeMismatch("density shapes differ".into()));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::config("alpha", "must be > 0"));
    }
    let n_x = space.n_x();
    let dx = space.dx();
    let delta = integrate(mu1.values(), space) - integrate(mu0.values(), space);
    let mut f0 = 0.0;
    let mut f1 = 0.0;
    let mut total = 0.0;
    for e in 1..n_x {
        f0 += mu0.values()[e - 1] * dx;
        f1 += mu1.values()[e - 1] * dx;
        let x = e as f64 * dx;
        total += (f1 - f0 - x * delta).abs() * dx;
    }
    Ok(total + delta.abs() / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;

    fn cfg(space: &SpatialGrid) -> SolverConfig {
        let step = SolverConfig::uw1_default_step(space);
        SolverConfig {
            p: 1,
            alpha: 100.0,
            tau1: step,
            tau2: step,
            max_iterations: 200_000,
            tolerance: 1e-9,
            report_every: 200,
            freeze_source: false,
        }
    }

    #[test]
    fn identical_inputs_cost_nothing() {
        let s = SpatialGrid::line(16).unwrap();
        let mu = SpatialField::from_values(&s, (0..16).map(|i| 0.2 + (i % 3) as f64).collect())
            .unwrap();
        let sol = solve_uw1(&mu, &mu, &cfg(&s), &s).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.flux.x_values().iter().all(|&v| v == 0.0));
        assert!((uw1_closed_form_1d(&mu, &mu, 100.0, &s).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn uniform_mass_mismatch_is_absorbed_by_the_shift() {
        // mu0 = 1, mu1 = 2: the balanced residual source vanishes, m stays 0,
        // and the whole value is |M0 - M1| / alpha = 0.01
        let s = SpatialGrid::line(8).unwrap();
        let a = SpatialField::from_values(&s, vec![1.0; 8]).unwrap();
        let b = SpatialField::from_values(&s, vec![2.0; 8]).unwrap();
        let sol = solve_uw1(&a, &b, &cfg(&s), &s).unwrap();
        assert!((sol.value - 0.01).abs() < 1e-12);
        assert!(sol.flux.x_values().iter().all(|&v| v.abs() < 1e-12));
        assert!((sol.source_constant - 1.0).abs() < 1e-12);
        // closed form: integrand vanishes identically, value = 1/alpha
        let cf = uw1_closed_form_1d(&a, &b, 100.0, &s).unwrap();
        assert!((cf - 0.01).abs() < 1e-12);
    }

    #[test]
    fn half_to_half_matches_continuum_tent() {
        // unit density on the left half vs right half: integral of |F1 - F0|
        // is 1/4 in the continuum; discrete within O(dx)
        let n = 64;
        let s = SpatialGrid::line(n).unwrap();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for i in 0..n / 2 {
            left[i] = 1.0;
            right[n / 2 + i] = 1.0;
        }
        let a = SpatialField::from_values(&s, left).unwrap();
        let b = SpatialField::from_values(&s, right).unwrap();
        let cf = uw1_closed_form_1d(&a, &b, 100.0, &s).unwrap();
        assert!((cf - 0.25).abs() < 2.0 / n as f64, "{cf}");
    }

    #[test]
    fn solver_matches_closed_form_on_a_rough_pair() {
        let n = 32;
        let s = SpatialGrid::line(n).unwrap();
        let a = SpatialField::from_values(
            &s,
            (0..n).map(|i| if i % 5 < 2 { 1.5 } else { 0.25 }).collect(),
        )
        .unwrap();
        let b = SpatialField::from_values(
            &s,
            (0..n).map(|i| if i > n / 2 { 1.0 } else { 0.1 }).collect(),
        )
        .unwrap();
        let mut c = cfg(&s);
        c.tolerance = 1e-8;
        let sol = solve_uw1(&a, &b, &c, &s).unwrap();
        let cf = uw1_closed_form_1d(&a, &b, c.alpha, &s).unwrap();
        assert!(
            (sol.value - cf).abs() <= 1e-3 * cf.max(1e-9),
            "solver {} vs closed form {cf}",
            sol.value
        );
        assert!(sol.converged);
    }

    #[test]
    fn closed_form_rejects_2d() {
        let s = SpatialGrid::square(4, 4).unwrap();
        let a = SpatialField::zeros(&s);
        assert!(uw1_closed_form_1d(&a, &a, 1.0, &s).is_err());
    }
}
