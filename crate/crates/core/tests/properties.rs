//! Property tests for the discrete calculus and the construction helpers.

use proptest::prelude::*;

use uot_core::densities::{make_density, DensitySpec, GaussianComponent};
use uot_core::grid::{
    divergence, dt_phi, dt_u, grad, integrate, CellField, FaceField, Grid, SpatialGrid, TimeGrid,
};

fn grid_strategy() -> impl Strategy<Value = (usize, usize)> {
    (3usize..=12, 2usize..=24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The two time stencils are exact negative adjoints for any fields.
    #[test]
    fn summation_by_parts((n_t, n_x) in grid_strategy(),
                          seed in any::<u64>()) {
        let grid = Grid::new(SpatialGrid::line(n_x).unwrap(), TimeGrid::new(n_t).unwrap());
        let mut state = seed.max(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut u = CellField::zeros(&grid);
        let mut phi = CellField::zeros(&grid);
        for k in 0..n_t {
            for v in u.slice_mut(k) { *v = next(); }
            for v in phi.slice_mut(k) { *v = next(); }
        }
        let du = dt_u(&u, &grid.time);
        let dphi = dt_phi(&phi, &grid.time).unwrap();
        let mut total = 0.0;
        let mut scale = 0.0;
        for k in 0..n_t {
            for c in 0..n_x {
                let a = phi.at_flat(k, c) * du.at_flat(k, c);
                let b = dphi.at_flat(k, c) * u.at_flat(k, c);
                total += (a + b) * grid.time.dt();
                scale += (a.abs() + b.abs()) * grid.time.dt();
            }
        }
        prop_assert!(total.abs() <= 1e-12 * scale.max(1.0));
    }

    /// Divergence of any admissible flux integrates to zero, and pairs with
    /// the negative gradient.
    #[test]
    fn grad_div_adjoint((n_x, n_y) in (2usize..=9, 2usize..=9), seed in any::<u64>()) {
        let space = SpatialGrid::square(n_x, n_y).unwrap();
        let grid = Grid::new(space, TimeGrid::new(2).unwrap());
        let mut state = seed.max(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut phi = CellField::zeros(&grid);
        for v in phi.slice_mut(0) { *v = next(); }
        let mut m = FaceField::zeros(&space, 1);
        for j in 0..n_y {
            for e in 1..n_x {
                m.set_x(0, e, j, next()).unwrap();
            }
        }
        for i in 0..n_x {
            for g in 1..n_y {
                m.set_y(0, i, g, next()).unwrap();
            }
        }
        let gs = grad(&phi, 0, &space).unwrap();
        let div = divergence(&m, 0, &space).unwrap();
        prop_assert!(integrate(&div, &space).abs() < 1e-12);
        let mut cell = 0.0;
        let mut face = 0.0;
        for j in 0..n_y {
            for i in 0..n_x {
                cell += phi.at(0, i, j) * div[j * n_x + i];
            }
        }
        for j in 0..n_y {
            for e in 0..=n_x {
                face += gs.gx[j * (n_x + 1) + e] * m.x_at(0, e, j);
            }
        }
        for g in 0..=n_y {
            for i in 0..n_x {
                face += gs.gy[g * n_x + i] * m.y_at(0, i, g);
            }
        }
        prop_assert!((cell + face).abs() <= 1e-11 * (cell.abs() + face.abs()).max(1.0));
    }

    /// Gaussian mixtures are nonnegative with the declared discrete mass.
    #[test]
    fn mixture_mass_is_declared(
        n_x in 4usize..=50,
        means in prop::collection::vec(0.0f64..=1.0, 1..4),
        variances in prop::collection::vec(0.004f64..0.2, 1..4),
        weights in prop::collection::vec(0.01f64..3.0, 1..4),
        scale in 0.0f64..4.0,
    ) {
        let n = means.len().min(variances.len()).min(weights.len());
        let components: Vec<GaussianComponent> = (0..n)
            .map(|i| GaussianComponent {
                mean: vec![means[i]],
                variance: vec![variances[i]],
                weight: weights[i],
            })
            .collect();
        let weight_sum: f64 = components.iter().map(|c| c.weight).sum();
        let spec = DensitySpec::mixture(components, scale);
        let space = SpatialGrid::line(n_x).unwrap();
        let d = make_density(&spec, &space).unwrap();
        prop_assert!(d.values().iter().all(|&v| v >= 0.0));
        let mass = integrate(d.values(), &space);
        let declared = scale * weight_sum;
        prop_assert!((mass - declared).abs() <= 1e-12 * (1.0 + declared));
    }

    /// dt_u annihilates time-constant fields; grad annihilates
    /// space-constant slices.
    #[test]
    fn constant_fields_are_annihilated((n_t, n_x) in grid_strategy(), level in -5.0f64..5.0) {
        let grid = Grid::new(SpatialGrid::line(n_x).unwrap(), TimeGrid::new(n_t).unwrap());
        let mut u = CellField::zeros(&grid);
        for k in 0..n_t {
            for v in u.slice_mut(k) { *v = level; }
        }
        let du = dt_u(&u, &grid.time);
        prop_assert!(du.values().iter().all(|&v| v == 0.0));
        let gs = grad(&u, 0, &grid.space).unwrap();
        prop_assert!(gs.gx.iter().all(|&v| v == 0.0));
    }
}
