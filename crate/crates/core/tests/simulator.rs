mod common;

use rand_distr::{Distribution, StandardNormal};
use volfeedback::rng::{CorrelatedShocks, StreamFactory};
use volfeedback::simulate::{path_statistics, simulate_path_with_shocks, simulate_paths, SimConfig};
use volfeedback::{solve_pd_ratio, PdGridConfig, PdSolution};

fn fig3() -> PdSolution {
    solve_pd_ratio(&common::base(2.0, 0.05, -0.5), &PdGridConfig::default()).unwrap()
}

#[test]
fn feedback_statistics_on_a_short_run() {
    let sol = fig3();
    let cfg = SimConfig { horizon: 2.0, n_paths: 8, seed: 3, ..Default::default() };
    let stats = path_statistics(&simulate_paths(&sol, &cfg).unwrap(), &sol).unwrap();
    assert!((stats.corr_dx2_dlnp + 0.89).abs() < 0.06, "{}", stats.corr_dx2_dlnp);
    assert!((stats.corr_dx2_dlnd + 0.50).abs() < 0.08, "{}", stats.corr_dx2_dlnd);
    assert!(stats.feedback_gap < 0.0);
    assert!(stats.mean_vol_ratio > 1.0);
    assert!((stats.mean_rho_rx + 0.892).abs() < 0.02);
}

#[test]
fn squared_returns_cluster() {
    let sol = fig3();
    for seed in 1..=3 {
        let cfg = SimConfig { horizon: 4.0, seed, ..Default::default() };
        let stats = path_statistics(&simulate_paths(&sol, &cfg).unwrap(), &sol).unwrap();
        assert!(stats.sq_return_autocorr_lag1 > 0.0, "seed {seed}: {}", stats.sq_return_autocorr_lag1);
    }
}

#[test]
fn paths_depend_only_on_seed_and_index() {
    let sol = fig3();
    let cfg = SimConfig { horizon: 0.1, n_paths: 6, seed: 11, ..Default::default() };
    let a = simulate_paths(&sol, &cfg).unwrap();
    let b = simulate_paths(&sol, &SimConfig { n_paths: 3, ..cfg }).unwrap();
    assert_eq!(a.paths[..3], b.paths[..]);
    let c = simulate_paths(&sol, &SimConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.paths[0], c.paths[0]);
}

/// Mean over paths of `sup_t |ln D_direct - ln(P / f(x))|` when the step
/// is `2^-fine_exp · 2^level`, using one set of Brownian increments.
fn dividend_gaps(sol: &PdSolution, n_paths: usize, fine_exp: i32, levels: usize) -> Vec<f64> {
    let p = *sol.params();
    let fine_n = 1usize << fine_exp;
    let streams = StreamFactory::new(5, "dt-order");
    let mut gaps = vec![0.0; levels];
    for path in 0..n_paths {
        let mut rng = streams.stream(path as u64);
        let mut zd: Vec<f64> = (0..fine_n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut zx: Vec<f64> = (0..fine_n).map(|_| StandardNormal.sample(&mut rng)).collect();
        for (level, gap) in gaps.iter_mut().enumerate() {
            if level > 0 {
                let pair = |v: &Vec<f64>| v.chunks(2).map(|c| (c[0] + c[1]) / 2f64.sqrt()).collect::<Vec<_>>();
                zd = pair(&zd);
                zx = pair(&zx);
            }
            let dt = 1.0 / zd.len() as f64;
            let shocks: Vec<_> = zd.iter().zip(&zx).map(|(&d, &x)| CorrelatedShocks::from_independent(d, x, p.rho_dx)).collect();
            let sim = simulate_path_with_shocks(sol, &p, 0.2, 100.0, dt, &shocks, true);
            let direct = sim.dividend_direct.unwrap();
            *gap += sim.dividend.iter().zip(&direct).map(|(a, b)| (a.ln() - b.ln()).abs()).fold(0.0, f64::max);
        }
    }
    gaps.iter().map(|g| g / n_paths as f64).collect()
}

#[test]
fn direct_and_derived_dividends_converge_at_order_one_half() {
    let sol = fig3();
    let gaps = dividend_gaps(&sol, 200, 14, 7);
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
    // Least-squares slope of ln(gap) against ln(dt).
    let pts: Vec<(f64, f64)> = gaps.iter().enumerate().map(|(k, g)| (k as f64 * 2f64.ln(), g.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let order = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!("gaps {gaps:?} order {order:.3}");
    assert!((0.35..=0.65).contains(&order), "fitted order {order}");
}

#[test]
fn sign_flip_of_volatility_and_shocks_leaves_prices_unchanged() {
    let sol = fig3();
    let p = *sol.params();
    let mut rng = StreamFactory::new(9, "mirror").stream(0);
    let shocks: Vec<_> = (0..2000).map(|_| CorrelatedShocks::draw(&mut rng, p.rho_dx)).collect();
    let flipped: Vec<_> = shocks.iter().map(|s| s.negated()).collect();
    for x0 in [0.05, 0.2, 0.6] {
        let a = simulate_path_with_shocks(&sol, &p, x0, 100.0, 1.0 / 252.0, &shocks, true);
        let b = simulate_path_with_shocks(&sol, &p, -x0, 100.0, 1.0 / 252.0, &flipped, true);
        assert_eq!(a.price, b.price);
        assert_eq!(a.dividend, b.dividend);
        assert!(a.x.iter().zip(&b.x).all(|(u, v)| *u == -*v));
    }
}

#[test]
fn gamma_zero_paths_have_equal_return_and_dividend_volatility() {
    let mut p = common::base(0.0, 0.015, -0.5);
    p.gamma = 0.0;
    let sol = solve_pd_ratio(&p, &PdGridConfig::default()).unwrap();
    let cfg = SimConfig { horizon: 0.5, n_paths: 2, seed: 4, direct_dividend: true, ..Default::default() };
    let set = simulate_paths(&sol, &cfg).unwrap();
    for path in &set.paths {
        for (pr, d) in path.price.iter().zip(&path.dividend) {
            assert!((pr / d - 200.0).abs() < 1e-9);
        }
    }
    let stats = path_statistics(&set, &sol).unwrap();
    assert!((stats.mean_vol_ratio - 1.0).abs() < 1e-9);
}
