use musielak::modular::luxemburg_norm;
use musielak::{CellField, Field, Grid, NFunctionSpec};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::rectangle([1.0, 2.0], [4, 5]).unwrap()
}

fn interior_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, grid().node_count())
}

fn dirichlet(mut v: Vec<f64>) -> Field {
    let g = grid();
    for n in 0..g.node_count() {
        if g.is_boundary(n) {
            v[n] = 0.0;
        }
    }
    Field::new(g, v, true).unwrap()
}

fn families() -> impl Strategy<Value = NFunctionSpec> {
    prop_oneof![
        (1.5f64..4.0).prop_map(|p| NFunctionSpec::power(p).unwrap()),
        (1.0f64..2.5).prop_map(|a| NFunctionSpec::elasticity(a).unwrap()),
        (1.5f64..3.0, 0.2f64..1.5).prop_map(|(a, b)| NFunctionSpec::plasticity(a, b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_is_linear(a in interior_values(), b in interior_values(), c in -3.0f64..3.0) {
        let (u, v) = (dirichlet(a), dirichlet(b));
        let lhs = u.add_scaled(&v, c).gradient();
        let (gu, gv) = (u.gradient(), v.gradient());
        for (k, w) in lhs.values().iter().enumerate() {
            for i in 0..2 {
                let expect = gu.values()[k][i] + c * gv.values()[k][i];
                prop_assert!((w[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn integration_is_monotone(a in prop::collection::vec(0.0f64..5.0, 20), bump in prop::collection::vec(0.0f64..1.0, 20)) {
        let f = CellField::new(grid(), a.clone());
        let g = CellField::new(grid(), a.iter().zip(&bump).map(|(x, y)| x + y).collect());
        prop_assert!(f.integrate() <= g.integrate());
        prop_assert!(f.integrate() >= 0.0);
    }

    #[test]
    fn luxemburg_is_homogeneous(spec in families(), a in interior_values(), c in 0.05f64..20.0) {
        let m = dirichlet(a).gradient().magnitude();
        prop_assume!(m.values().iter().any(|&x| x > 1e-6));
        let n = luxemburg_norm(&spec, &m).unwrap();
        let nc = luxemburg_norm(&spec, &m.scaled(c)).unwrap();
        prop_assert!((nc - c * n).abs() <= 1e-8 * c * n);
    }

    #[test]
    fn luxemburg_triangle(spec in families(), a in interior_values(), b in interior_values()) {
        let (u, v) = (dirichlet(a), dirichlet(b));
        let (mu, mv) = (u.gradient().magnitude(), v.gradient().magnitude());
        let sum = u.add_scaled(&v, 1.0).gradient().magnitude();
        let lhs = luxemburg_norm(&spec, &sum).unwrap();
        let rhs = luxemburg_norm(&spec, &mu).unwrap() + luxemburg_norm(&spec, &mv).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-300);
    }
}
