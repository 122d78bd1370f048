//! Behavioral checks of the primal-dual iteration that need checkpoints
//! beyond the built-in report rows.

use uot_core::analysis::mass_identities;
use uot_core::densities::{make_density, DensitySpec};
use uot_core::grid::{Grid, SpatialGrid, TimeGrid};
use uot_core::solver::{pd_step_uw2, SolverConfig, SolverState};

/// After the initial transient the integrated-source mass error |e1| keeps
/// shrinking: the potential ascent averages the constraint rows out.
#[test]
fn mass_identity_error_decreases_after_transient() {
    let grid = Grid::new(
        SpatialGrid::line(16).expect("grid"),
        TimeGrid::new(7).expect("time"),
    );
    let mu0 = make_density(
        &DensitySpec::gaussian(vec![0.35], vec![0.02], 1.6),
        &grid.space,
    )
    .expect("mu0");
    let mu1 = make_density(
        &DensitySpec::gaussian(vec![0.6], vec![0.02], 1.0),
        &grid.space,
    )
    .expect("mu1");
    let cfg = SolverConfig {
        p: 2,
        alpha: 100.0,
        tau1: 1e-3,
        tau2: 1e-1,
        max_iterations: 40_000,
        tolerance: 1e-12,
        report_every: 1000,
        freeze_source: false,
    };
    let mut state = SolverState::init(&mu0, &mu1, &cfg, &grid).expect("init");
    let mut checkpoints = Vec::new();
    for it in 0..cfg.max_iterations {
        pd_step_uw2(&mut state, &mu0, &mu1, &cfg, &grid).expect("step");
        if (it + 1) % 2000 == 0 {
            let (e1, _) = mass_identities(&state.f, &state.phi, &mu0, &mu1, cfg.alpha, &grid);
            checkpoints.push(e1.abs());
        }
    }
    // exact at iteration 0 by construction, perturbed through the transient,
    // then contracting; the iterates spiral, so the decay shows in the
    // envelope: each half's peak error beats the previous one's
    let mid = checkpoints.len() / 2;
    let peak_early = checkpoints[..mid].iter().cloned().fold(0.0, f64::max);
    let peak_late = checkpoints[mid..].iter().cloned().fold(0.0, f64::max);
    assert!(
        peak_late < 0.5 * peak_early,
        "mass error envelope stopped contracting: {checkpoints:?}"
    );
    assert!(
        checkpoints.last().unwrap() < &1e-4,
        "final |e1| too large: {checkpoints:?}"
    );
}
