use milp::{solve_lp, Engine, LinearModel, Sense, SolverConfig, Status};
use proptest::prelude::*;

fn cfg(engine: Engine) -> SolverConfig {
    SolverConfig {
        engine,
        ..SolverConfig::default()
    }
}

const ENGINES: [Engine; 3] = [Engine::Dense, Engine::Sparse, Engine::Interior];

#[test]
fn single_lower_bound_row() {
    for e in ENGINES {
        let mut m = LinearModel::new();
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        m.add_constraint("c", [(x, 1.0)], Sense::Ge, 3.0);
        let r = solve_lp(&m, &cfg(e)).unwrap();
        assert_eq!(r.status, Status::Optimal, "{:?}", e);
        assert!((r.objective - 3.0).abs() < 1e-7);
        assert!((r.values[0] - 3.0).abs() < 1e-7);
    }
}

#[test]
fn contradictory_bounds_are_infeasible() {
    for e in ENGINES {
        let mut m = LinearModel::new();
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        m.add_constraint("hi", [(x, 1.0)], Sense::Le, 0.0);
        m.add_constraint("lo", [(x, 1.0)], Sense::Ge, 1.0);
        let r = solve_lp(&m, &cfg(e)).unwrap();
        assert_eq!(r.status, Status::Infeasible, "{:?}", e);
    }
}

#[test]
fn unbounded_ray_detected() {
    for e in [Engine::Dense, Engine::Sparse] {
        let mut m = LinearModel::new();
        let x = m.continuous("x", 0.0, f64::INFINITY, -1.0);
        let y = m.continuous("y", 0.0, f64::INFINITY, 0.0);
        m.add_constraint("c", [(x, 1.0), (y, -1.0)], Sense::Le, 2.0);
        let r = solve_lp(&m, &cfg(e)).unwrap();
        assert_eq!(r.status, Status::Unbounded, "{:?}", e);
    }
}

/// 2x2 transportation problem; the oracle walks the single free parameter x11
/// over its feasible interval and keeps the cheaper endpoint.
#[test]
fn transportation_two_by_two_matches_parametric_oracle() {
    let supply = [20.0, 30.0];
    let demand = [25.0, 25.0];
    let cost = [[4.0, 6.0], [5.0, 3.0]];

    let eval = |x11: f64| {
        let x12 = supply[0] - x11;
        let x21 = demand[0] - x11;
        let x22 = supply[1] - x21;
        let ok = [x11, x12, x21, x22].iter().all(|&v| v >= -1e-12) && (x12 + x22 - demand[1]).abs() < 1e-9;
        ok.then(|| cost[0][0] * x11 + cost[0][1] * x12 + cost[1][0] * x21 + cost[1][1] * x22)
    };
    let lo = 0.0f64.max(demand[0] - supply[1]);
    let hi = supply[0].min(demand[0]);
    let oracle = [lo, hi]
        .iter()
        .filter_map(|&x| eval(x))
        .fold(f64::INFINITY, f64::min);

    for e in ENGINES {
        let mut m = LinearModel::new();
        let mut x = [[milp::VarId(0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                x[i][j] = m.continuous(format!("x{}{}", i, j), 0.0, f64::INFINITY, cost[i][j]);
            }
        }
        for i in 0..2 {
            m.add_constraint(format!("s{}", i), [(x[i][0], 1.0), (x[i][1], 1.0)], Sense::Eq, supply[i]);
        }
        for j in 0..2 {
            m.add_constraint(format!("d{}", j), [(x[0][j], 1.0), (x[1][j], 1.0)], Sense::Eq, demand[j]);
        }
        let r = solve_lp(&m, &cfg(e)).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective - oracle).abs() < 1e-6, "{:?}: {} vs {}", e, r.objective, oracle);
    }
}

/// Random bounded LP with a known feasible point so it is never infeasible.
fn bounded_lp() -> impl Strategy<Value = LinearModel> {
    (2usize..8, 1usize..8).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-5i32..=5, n),
            prop::collection::vec(prop::collection::vec(-4i32..=4, n), m),
            prop::collection::vec(0usize..3, m),
            prop::collection::vec(0i32..=3, n),
            prop::collection::vec(1i32..=4, n),
        )
            .prop_map(move |(c, a, senses, point, width)| {
                let mut model = LinearModel::new();
                let vars: Vec<_> = (0..n)
                    .map(|j| {
                        let lo = point[j] - width[j];
                        model.continuous(format!("x{}", j), lo as f64, (point[j] + width[j]) as f64, c[j] as f64)
                    })
                    .collect();
                for (i, row) in a.iter().enumerate() {
                    let act: i32 = row.iter().zip(&point).map(|(p, q)| p * q).sum();
                    let (sense, rhs) = match senses[i] {
                        0 => (Sense::Le, act + 1),
                        1 => (Sense::Ge, act - 1),
                        _ => (Sense::Eq, act),
                    };
                    model.add_constraint(
                        format!("r{}", i),
                        row.iter().enumerate().map(|(j, &v)| (vars[j], v as f64)),
                        sense,
                        rhs as f64,
                    );
                }
                model
            })
    })
}

/// Dual objective from row duals: b'y plus the bound terms of the reduced costs.
fn dual_objective(m: &LinearModel, y: &[f64]) -> Option<f64> {
    let mut obj = 0.0;
    for (i, c) in m.constraints.iter().enumerate() {
        let ok = match c.sense {
            Sense::Le => y[i] <= 1e-7,
            Sense::Ge => y[i] >= -1e-7,
            Sense::Eq => true,
        };
        if !ok {
            return None;
        }
        obj += c.rhs * y[i];
    }
    let mut reduced: Vec<f64> = m.variables.iter().map(|v| v.cost).collect();
    for (i, c) in m.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            reduced[v.0] -= a * y[i];
        }
    }
    for (v, &r) in m.variables.iter().zip(&reduced) {
        if r > 1e-9 {
            obj += r * v.lower;
        } else if r < -1e-9 {
            obj += r * v.upper;
        }
    }
    obj.is_finite().then_some(obj)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engines_agree_and_duals_certify_optimality(m in bounded_lp()) {
        let dense = solve_lp(&m, &cfg(Engine::Dense)).unwrap();
        prop_assert_eq!(dense.status, Status::Optimal);
        prop_assert!(m.max_violation(&dense.values) <= 1e-6);
        let sparse = solve_lp(&m, &cfg(Engine::Sparse)).unwrap();
        prop_assert!((dense.objective - sparse.objective).abs() <= 1e-6 * dense.objective.abs().max(1.0));
        let interior = solve_lp(&m, &cfg(Engine::Interior)).unwrap();
        prop_assert!((dense.objective - interior.objective).abs() <= 1e-5 * dense.objective.abs().max(1.0));

        let y = dense.duals.clone().unwrap();
        let dual = dual_objective(&m, &y);
        prop_assert!(dual.is_some(), "dual infeasible multipliers {:?}", y);
        prop_assert!((dual.unwrap() - dense.objective).abs() <= 1e-6 * dense.objective.abs().max(1.0));
    }

    /// Degenerate instances (many rows tight at the same point, zero-width slack)
    /// solved with Bland's rule forced from the first pivot.
    #[test]
    fn bland_terminates_on_degenerate_instances(
        n in 2usize..=20,
        rows in prop::collection::vec(prop::collection::vec(-2i32..=2, 20), 1..25),
        c in prop::collection::vec(-3i32..=3, 20),
    ) {
        let mut m = LinearModel::new();
        let vars: Vec<_> = (0..n).map(|j| m.continuous(format!("x{}", j), 0.0, 1.0, c[j] as f64)).collect();
        for (i, row) in rows.iter().enumerate() {
            m.add_constraint(format!("r{}", i), (0..n).map(|j| (vars[j], row[j] as f64)), Sense::Le, 0.0);
        }
        let mut config = cfg(Engine::Dense);
        config.bland = true;
        config.iter_limit = 100_000;
        let r = solve_lp(&m, &config).unwrap();
        prop_assert_eq!(r.status, Status::Optimal);
        let reference = solve_lp(&m, &cfg(Engine::Sparse)).unwrap();
        prop_assert!((r.objective - reference.objective).abs() <= 1e-6);
    }
}

#[test]
fn iteration_limit_reported() {
    let mut m = LinearModel::new();
    let vars: Vec<_> = (0..6).map(|j| m.continuous(format!("x{}", j), 0.0, 10.0, -1.0)).collect();
    for k in 0..5 {
        m.add_constraint(format!("r{}", k), [(vars[k], 1.0), (vars[k + 1], 1.0)], Sense::Le, 3.0);
    }
    let config = SolverConfig {
        engine: Engine::Dense,
        iter_limit: 1,
        ..SolverConfig::default()
    };
    assert_eq!(solve_lp(&m, &config).unwrap().status, Status::IterationLimit);
}
