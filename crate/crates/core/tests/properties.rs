use proptest::prelude::*;

use demto::demsolver::{apply_dirichlet, build_periodic_bcs, periodic_penalty, BoundarySpec};
use demto::elasticity::{MaterialModel, Mode};
use demto::femsolver::element_stiffness;
use demto::grid::{precompute_quadrature, Grid};
use demto::topopt::{build_filter, mma_update, MmaSettings, MmaState};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn filter_rows_are_normalized(nx in 3usize..20, ny in 3usize..12, lx in 0.5f64..5.0, r in 0.05f64..1.5) {
        let g = Grid::new(&[lx, 1.0], &[nx, ny]).unwrap();
        let w = build_filter(&g, r).unwrap();
        for i in 0..w.len() {
            let s: f64 = w.matrix().row(i).map(|(_, v)| v).sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(w.matrix().get(i, i) > 0.0);
        }
        let c = 0.37;
        prop_assert!(w.apply(&vec![c; w.len()]).iter().all(|v| (v - c).abs() <= 1e-15));
    }

    #[test]
    fn dirichlet_values_hold_for_any_raw_field(raw in prop::collection::vec(-10.0f64..10.0, 2 * 20), value in -1.0f64..1.0) {
        let g = Grid::new(&[1.0, 1.0], &[5, 4]).unwrap();
        let mut bcs = BoundarySpec::new(&g);
        bcs.clamp(g.boundary_set("y-").unwrap());
        bcs.fix(g.boundary_set("y+").unwrap(), 0, value);
        let u = apply_dirichlet(&raw, &bcs).unwrap();
        for &n in g.boundary_set("y-").unwrap() {
            prop_assert_eq!(u[2 * n], 0.0);
            prop_assert_eq!(u[2 * n + 1], 0.0);
        }
        for &n in g.boundary_set("y+").unwrap() {
            prop_assert_eq!(u[2 * n], value);
        }
    }

    #[test]
    fn mma_stays_in_bounds_and_feasible(
        x in prop::collection::vec(0.0f64..1.0, 30),
        df in prop::collection::vec(-1e3f64..1e3, 30),
    ) {
        let n = x.len();
        let a = vec![1.0 / n as f64; n];
        let mean = x.iter().sum::<f64>() / n as f64;
        let b = mean.max(0.3);
        let mut st = MmaState::new(n, MmaSettings::default());
        let y = mma_update(&mut st, &x, &df, &a, b).unwrap();
        prop_assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(y.iter().zip(&x).all(|(y, x)| (y - x).abs() <= 0.2 + 1e-12));
        prop_assert!(y.iter().sum::<f64>() / n as f64 <= b + 1e-9);
    }

    #[test]
    fn penalty_is_nonnegative_and_vanishes_on_periodic_fields(
        raw in prop::collection::vec(-1.0f64..1.0, 2 * 36),
    ) {
        let g = Grid::new(&[1.0, 1.0], &[6, 6]).unwrap();
        let mut strain = [[0.0; 3]; 3];
        strain[0][1] = 0.01;
        strain[1][0] = 0.01;
        let bcs = build_periodic_bcs(&g, &strain, None).unwrap();
        let (p, _) = periodic_penalty(&raw, &bcs, 200.0);
        prop_assert!(p >= 0.0);
        // A field depending only on x is periodic in y.
        let periodic: Vec<f64> = (0..2 * 36).map(|k| raw[2 * ((k / 2) % 6) + k % 2]).collect();
        prop_assert_eq!(periodic_penalty(&periodic, &bcs, 200.0).0, 0.0);
    }

    #[test]
    fn element_stiffness_is_symmetric(lx in 0.1f64..10.0, ly in 0.1f64..10.0, nu in 0.0f64..0.45) {
        let g = Grid::new(&[lx, ly], &[3, 3]).unwrap();
        let q = precompute_quadrature(&g, 2).unwrap();
        let mat = MaterialModel::new(200.0, nu, 3.0, Mode::PlaneStress2d).unwrap();
        let k = element_stiffness(&g, &q, 0, &mat);
        let n = 8;
        for i in 0..n {
            prop_assert!(k[i * n + i] > 0.0);
            for j in 0..n {
                prop_assert!((k[i * n + j] - k[j * n + i]).abs() <= 1e-12 * k[i * n + i]);
            }
        }
    }
}
