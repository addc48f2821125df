use ats_core::newsvendor::{
    best_revision_time, dynamic_targets, evaluate_orders, order_quantities, post_revision_cost, simulate,
    simulate_curve, solve_policy, write_curve_csv, CurvePolicy, Demand, NewsvendorConfig, PolicyKind, Simulation,
};
use ats_core::Error;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

const Z_0125: f64 = -1.150_349_380_376_008;

fn sim(scenarios: usize) -> Simulation {
    Simulation { scenarios, seed: 42 }
}

fn with_std(mut c: NewsvendorConfig, sd: f64) -> NewsvendorConfig {
    for d in &mut c.demand {
        if let Demand::Normal { std_dev, .. } = d {
            *std_dev = sd;
        }
    }
    c
}

/// Expected cost of a fixed schedule under independent normal demands,
/// from the standard normal loss function.
fn normal_schedule_cost(c: &NewsvendorConfig, orders: &[f64]) -> f64 {
    let std = Normal::new(0.0, 1.0).unwrap();
    let (mut mean, mut var, mut placed, mut total) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..c.horizon() {
        if let Demand::Normal { mean: m, std_dev: s } = c.demand[t] {
            mean += m;
            var += s * s;
        }
        placed += orders[t];
        let sd = var.sqrt();
        let z = (placed - mean) / sd;
        let short = sd * (std.pdf(z) - z * (1.0 - std.cdf(z)));
        let over = short + placed - mean;
        total += c.order_cost[t] * orders[t] + c.holding_cost[t] * over + c.backorder_cost[t] * short;
    }
    total
}

#[test]
fn stationary_targets() {
    let c = with_std(NewsvendorConfig::stationary(), 2.0);
    let p = solve_policy(&c, 5).unwrap();
    assert_eq!(&p.fractiles[..4], &[0.5; 4]);
    assert_eq!(p.fractiles[4], 0.125);
    for (t, x) in p.pre_targets.iter().enumerate() {
        assert!((x - 10.0 * (t + 1) as f64).abs() < 1e-9);
    }
    let full = solve_policy(&c, 1).unwrap();
    let expected = 50.0 + 20f64.sqrt() * Z_0125;
    assert!((full.post_quantiles[4] - expected).abs() < 1e-6, "{}", full.post_quantiles[4]);
    assert!((expected - 44.86).abs() < 0.005);
}

#[test]
fn revision_at_one_is_static() {
    let c = NewsvendorConfig::increasing_costs();
    let s = sim(500);
    let a = simulate(&c, PolicyKind::Static, &s).unwrap();
    let b = simulate(&c, PolicyKind::Adaptive(1), &s).unwrap();
    assert_eq!(a, b);
    let p = solve_policy(&c, 1).unwrap();
    assert!(p.pre_targets.is_empty());
    let path = c.scenario(1, 0);
    let other = c.scenario(1, 1);
    assert_eq!(order_quantities(&p, &path).unwrap(), order_quantities(&p, &other).unwrap());
}

#[test]
fn orders_follow_targets() {
    let c = NewsvendorConfig::increasing_demand();
    let p = solve_policy(&c, 4).unwrap();
    let mean_path: Vec<f64> = c.demand.iter().map(|d| d.mean()).collect();
    let orders = order_quantities(&p, &mean_path).unwrap();
    assert!((orders[0] - p.pre_targets[0]).abs() < 1e-12);
    assert!((orders[1] - (p.pre_targets[1] - p.pre_targets[0])).abs() < 1e-12);
    // a demand spike before the revision is covered by a large reorder
    let spike = [10.0, 12.0, 200.0, 0.0, 0.0];
    let o = order_quantities(&p, &spike).unwrap();
    let s = p.pre_targets[2] - 222.0;
    assert!((o[3] - (p.post_quantiles[0] - s)).abs() < 1e-9);
    assert!(o[3] > 150.0);
    assert!(o.iter().all(|x| *x >= 0.0));
    assert!(order_quantities(&p, &[1.0]).is_err());
}

#[test]
fn zero_variance_makes_policies_agree() {
    let c = with_std(NewsvendorConfig::stationary(), 0.0);
    let s = sim(50);
    let st = simulate(&c, PolicyKind::Static, &s).unwrap().mean;
    let dy = simulate(&c, PolicyKind::Dynamic, &s).unwrap().mean;
    for t in 1..=5 {
        let ad = simulate(&c, PolicyKind::Adaptive(t), &s).unwrap().mean;
        assert!((ad - st).abs() < 1e-9 && (ad - dy).abs() < 1e-9);
    }
    let p = solve_policy(&c, 3).unwrap();
    assert_eq!(order_quantities(&p, &[10.0; 5]).unwrap(), vec![10.0; 5]);
}

#[test]
fn simulation_matches_closed_form() {
    for c in [NewsvendorConfig::stationary(), NewsvendorConfig::increasing_costs()] {
        let p = solve_policy(&c, 1).unwrap();
        let orders = order_quantities(&p, &[]).unwrap();
        let exact = normal_schedule_cost(&c, &orders);
        let est = simulate(&c, PolicyKind::Static, &sim(100_000)).unwrap();
        assert!((est.mean - exact).abs() < 4.0 * est.std_error, "{} vs {exact} ± {}", est.mean, est.std_error);
    }
}

#[test]
fn adaptive_costs_sit_between_baselines() {
    for c in [
        NewsvendorConfig::stationary(),
        NewsvendorConfig::increasing_demand(),
        NewsvendorConfig::increasing_costs(),
    ] {
        let s = sim(20_000);
        let st = simulate(&c, PolicyKind::Static, &s).unwrap();
        let dy = simulate(&c, PolicyKind::Dynamic, &s).unwrap();
        for t in 2..=5 {
            let ad = simulate(&c, PolicyKind::Adaptive(t), &s).unwrap();
            assert!(dy.mean < ad.mean && ad.mean < st.mean, "t={t}: {} {} {}", dy.mean, ad.mean, st.mean);
        }
    }
}

#[test]
fn static_targets_are_stationary_points() {
    let c = NewsvendorConfig::increasing_demand();
    let p = solve_policy(&c, 1).unwrap();
    let orders = order_quantities(&p, &[]).unwrap();
    assert!(orders.iter().all(|x| *x > 1.0));
    let s = sim(200_000);
    let h = 0.5;
    for t in 0..5 {
        let mut up = orders.clone();
        let mut down = orders.clone();
        up[t] += h;
        down[t] -= h;
        let slope = (evaluate_orders(&c, &up, &s).unwrap().mean - evaluate_orders(&c, &down, &s).unwrap().mean) / (2.0 * h);
        assert!(slope.abs() < 0.1, "period {}: slope {slope}", t + 1);
        // the closed form agrees that the schedule is a stationary point
        let exact = (normal_schedule_cost(&c, &up) - normal_schedule_cost(&c, &down)) / (2.0 * h);
        assert!(exact.abs() < 0.02, "period {}: {exact}", t + 1);
    }
}

#[test]
fn post_revision_cost_slope_is_order_cost() {
    let c = NewsvendorConfig::increasing_costs();
    let s = sim(20_000);
    for t_star in 2..=5 {
        let hi = post_revision_cost(&c, t_star, 1.0, &s).unwrap().mean;
        let lo = post_revision_cost(&c, t_star, -1.0, &s).unwrap().mean;
        let slope = (hi - lo) / 2.0;
        assert!((slope + c.order_cost[t_star - 1]).abs() < 1e-6, "t*={t_star}: {slope}");
    }
}

#[test]
fn curves_and_csv() {
    let c = NewsvendorConfig::stationary();
    let pts = simulate_curve(&c, &[CurvePolicy::Static, CurvePolicy::Adaptive, CurvePolicy::Dynamic], 1..=5, &sim(300)).unwrap();
    assert_eq!(pts.len(), 15);
    assert_eq!(pts[0].mean, pts[5].mean);
    assert!(best_revision_time(&pts).is_some());
    let mut buf = Vec::new();
    write_curve_csv(&pts, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("policy,revision_time,mean,std_error\n"));
    assert_eq!(text.lines().count(), 16);
}

#[test]
fn parallel_runs_are_reproducible() {
    let c = NewsvendorConfig::increasing_demand();
    let a = simulate(&c, PolicyKind::Adaptive(3), &sim(4000)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| simulate(&c, PolicyKind::Adaptive(3), &sim(4000)).unwrap());
    assert_eq!(a, b);
}

#[test]
fn non_normal_families_use_sampled_quantiles() {
    let mut c = NewsvendorConfig::stationary();
    c.demand = vec![Demand::Uniform { low: 0.0, high: 20.0 }; 5];
    c.quantile_draws = 200_000;
    let p = solve_policy(&c, 1).unwrap();
    // median of a sum of uniforms is its mean
    assert!((p.post_quantiles[1] - 20.0).abs() < 0.2, "{}", p.post_quantiles[1]);
    c.demand[0] = Demand::Empirical { values: vec![4.0, 8.0, 12.0] };
    let p = solve_policy(&c, 1).unwrap();
    assert_eq!(p.post_quantiles[0], 8.0);
    assert!(dynamic_targets(&c).is_ok());
}

#[test]
fn invalid_configs() {
    let mut c = NewsvendorConfig::stationary();
    c.order_cost[2] = 9.0;
    assert!(matches!(solve_policy(&c, 2), Err(Error::InvalidCosts(_))));
    let mut c = NewsvendorConfig::stationary();
    c.backorder_cost[4] = 1.0;
    assert!(matches!(solve_policy(&c, 2), Err(Error::InvalidCosts(_))));
    let mut c = NewsvendorConfig::stationary();
    c.demand[1] = Demand::Empirical { values: vec![] };
    assert!(matches!(solve_policy(&c, 2), Err(Error::UnsupportedDistribution(_))));
    assert!(matches!(solve_policy(&NewsvendorConfig::stationary(), 6), Err(Error::InvalidRange(_))));
    let text = serde_json::to_string(&NewsvendorConfig::increasing_costs()).unwrap();
    let back: NewsvendorConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, NewsvendorConfig::increasing_costs());
}
