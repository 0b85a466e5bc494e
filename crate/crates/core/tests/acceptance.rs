//! End-to-end acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use common::{base, black_scholes_call, fd_oracle, FIG1_GRID};
use volfeedback::calibrate::{
    calibrate, implied_vol_risk_premium_from, synthetic_quotes, CalibrationConfig, CalibrationMode, PanelPricer,
    SyntheticPanel,
};
use volfeedback::nelder_mead::NelderMeadOptions;
use volfeedback::pricer::{
    call_unit_payoffs, heston_reduction_check, paired_difference, price_call, McConfig, OptionSpec, PriceEstimate,
};
use volfeedback::simulate::{path_statistics, simulate_paths, SimConfig};
use volfeedback::{pd_ratio_constant, solve_pd_ratio, Error, MarketState, ModelParams, PdGridConfig, PdSolution};

struct Outcome {
    pass: bool,
    detail: String,
    /// Bit patterns of every stochastic output, for the determinism check.
    fingerprint: Vec<u64>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail, fingerprint: Vec::new() }
    }
}

fn grid() -> PdGridConfig {
    PdGridConfig::default()
}

fn solve(p: &ModelParams) -> PdSolution {
    solve_pd_ratio(p, &grid()).unwrap()
}

fn within(t: Instant, limit: Duration) -> (bool, String) {
    let e = t.elapsed();
    (e < limit, format!("{:.2?}", e))
}

fn c1_anchor() -> Outcome {
    let t = Instant::now();
    let s = solve(&base(2.0, 0.05, -0.5));
    let (fast, took) = within(t, Duration::from_secs(5));
    let f0 = s.f(0.0);
    Outcome::new(
        (f0 - 30.15).abs() <= 0.6 && fast,
        format!("f(0) = {f0:.6}, 100/f(0) = {:.4}, {took}", 100.0 / f0),
    )
}

fn c2_gamma_zero() -> Outcome {
    let p = ModelParams { gamma: 0.0, ..base(0.0, 0.015, -0.5) };
    let c = pd_ratio_constant(p, &grid()).unwrap();
    let exact = (0..=100).all(|i| {
        let x = -5.0 + 0.1 * i as f64;
        c.f(x) == 1.0 / (0.02 - 0.015) && c.fx(x) == 0.0
    });
    let s = solve(&base(1e-6, 0.015, -0.5));
    let rel = s.f(0.0) / 200.0 - 1.0;
    Outcome::new(exact && rel.abs() < 0.005, format!("constant exact: {exact}; gamma=1e-6 f(0) = {:.5} ({:+.3e} rel)", s.f(0.0), rel))
}

fn c3_infeasible() -> Outcome {
    let t = Instant::now();
    let bad = solve_pd_ratio(&base(1.0, 0.08, -0.5), &grid());
    let good = solve_pd_ratio(&base(3.0, 0.08, -0.5), &grid());
    let (fast, took) = within(t, Duration::from_secs(30));
    let ok = matches!(bad, Err(Error::NoSolution(_))) && good.is_ok();
    Outcome::new(
        ok && fast,
        format!(
            "gamma=1: {}; gamma=3: f(0) = {:.4}; {took}",
            bad.err().map(|e| e.name()).unwrap_or("solved"),
            good.map(|s| s.f(0.0)).unwrap_or(f64::NAN)
        ),
    )
}

fn c4_excess_volatility() -> Outcome {
    let s = solve(&base(3.0, 0.08, -0.5));
    let min_ratio = s
        .mesh()
        .iter()
        .filter(|&&x| x > 0.0 && x < 0.5)
        .map(|&x| x / s.dividend_vol(x).unwrap())
        .fold(f64::INFINITY, f64::min);
    let s = solve(&base(3.115, 0.08, -0.5));
    let (peak, at) = s.mesh()[1..]
        .iter()
        .map(|&x| (x / s.dividend_vol(x).unwrap(), x))
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    Outcome::new(
        min_ratio > 10.0 && peak > 100.0,
        format!("min x/y on (0, 0.5) = {min_ratio:.2}; gamma=3.115 peak x/y = {peak:.1} at x = {at:.4}"),
    )
}

fn c5_oracle() -> Outcome {
    let mut worst_oracle: f64 = 0.0;
    let mut worst_b: f64 = 0.0;
    for &(g, a, rho) in &FIG1_GRID {
        let p = base(g, a, rho);
        let s5 = solve(&p);
        let s7 = solve_pd_ratio(&p, &PdGridConfig { b: 7.0, ..grid() }).unwrap();
        let oracle = fd_oracle(&p, 5.0);
        for i in 0..=1000 {
            let x = i as f64 * 0.001;
            worst_oracle = worst_oracle.max((s5.f(x) - oracle[i]).abs());
            worst_b = worst_b.max((s5.f(x) - s7.f(x)).abs());
        }
    }
    Outcome::new(
        worst_oracle < 5e-5 && worst_b < 5e-5,
        format!("max |f - oracle| = {worst_oracle:.2e}, max |f(b=5) - f(b=7)| = {worst_b:.2e} on [0, 1]"),
    )
}

fn c6_simulation() -> Outcome {
    let t = Instant::now();
    let sol = solve(&base(2.0, 0.05, -0.5));
    let dt = 1.0 / (24.0 * 252.0);
    let cfg = SimConfig { dt, horizon: 100_000.0 * dt, n_paths: 1, seed: 1, ..Default::default() };
    let set = simulate_paths(&sol, &cfg).unwrap();
    let st = path_statistics(&set, &sol).unwrap();
    let (fast, took) = within(t, Duration::from_secs(60));
    let pass = (st.corr_dx2_dlnd + 0.50).abs() <= 0.05
        && (st.corr_dx2_dlnp + 0.89).abs() <= 0.04
        && (st.mean_vol_ratio - 1.91).abs() <= 0.1
        && fast;
    let mut o = Outcome::new(
        pass,
        format!(
            "{} steps: corr(dx2, dlnD) = {:.4}, corr(dx2, dlnP) = {:.4}, mean x/y = {:.4}; {took}",
            st.n_steps, st.corr_dx2_dlnd, st.corr_dx2_dlnp, st.mean_vol_ratio
        ),
    );
    o.fingerprint = vec![st.corr_dx2_dlnd.to_bits(), st.corr_dx2_dlnp.to_bits(), st.mean_vol_ratio.to_bits()];
    o.fingerprint.extend(set.paths[0].price.iter().step_by(997).map(|v| v.to_bits()));
    o
}

fn spot_state(sol: &PdSolution, x0: f64) -> MarketState {
    MarketState::new(0.0, 100.0, 100.0 / sol.f(x0), x0).unwrap()
}

fn c7_pricing_oracles() -> Outcome {
    let t = Instant::now();
    let mut fp = Vec::new();
    let mut notes = Vec::new();

    let p = ModelParams { gamma: 0.0, sigma_x: 0.0, ..base(0.0, 0.015, -0.5) };
    let sol = solve(&p);
    let mc = McConfig { n_paths: 20_000, seed: 7, ..Default::default() };
    let mut a_ok = true;
    for (k, m) in [(100.0, 1.0), (90.0, 0.5), (0.0, 2.0)] {
        let e = price_call(&OptionSpec::new(k, m).unwrap(), &spot_state(&sol, 0.0), &sol, &p, &mc).unwrap();
        let exact = (-p.r * m).exp() * (100.0 * (p.alpha * m).exp() - k).max(0.0);
        a_ok &= (e.price / exact - 1.0).abs() <= 1e-10;
        fp.push(e.price.to_bits());
    }
    notes.push(format!("(a) {}", if a_ok { "ok" } else { "off" }));

    let mut b_ok = true;
    for (k, m) in [(100.0, 1.0), (90.0, 0.5), (115.0, 1.0)] {
        let e = price_call(&OptionSpec::new(k, m).unwrap(), &spot_state(&sol, 0.2), &sol, &p, &mc).unwrap();
        let n = (m / mc.dt).round() as usize;
        let h = m / n as f64;
        let var: f64 = (0..n).map(|i| (0.2 * (-p.beta_q * i as f64 * h).exp()).powi(2) * h).sum();
        let oracle = black_scholes_call(100.0, k, p.r, p.r - p.alpha, (var / m).sqrt(), m);
        let z = (e.price - oracle) / e.std_error;
        b_ok &= z.abs() <= 3.0;
        notes.push(format!("(b) K={k} T={m}: z = {z:+.2}"));
        fp.push(e.price.to_bits());
    }

    let p = base(0.0, 0.015, -0.5);
    let sol = solve(&p);
    let mut c_ok = true;
    for (k, m) in [(100.0, 1.0), (90.0, 0.25), (110.0, 0.5)] {
        let rep = heston_reduction_check(&p, &OptionSpec::new(k, m).unwrap(), &spot_state(&sol, 0.2), &mc).unwrap();
        c_ok &= rep.agrees;
        notes.push(format!("(c) K={k} T={m}: diff {:.2e} vs 3se {:.2e}", rep.difference, 3.0 * rep.combined_std_error));
        fp.extend([rep.full.price.to_bits(), rep.reduced.price.to_bits()]);
    }
    let (fast, took) = within(t, Duration::from_secs(120));
    notes.push(took);
    Outcome { pass: a_ok && b_ok && c_ok && fast, detail: notes.join("; "), fingerprint: fp }
}

/// Checks that consecutive paired differences `units[i] - units[i+1]`
/// are positive beyond three standard errors.
fn decreasing(units: &[Vec<f64>]) -> (bool, Vec<f64>, Vec<PriceEstimate>) {
    let prices = units.iter().map(|u| u.iter().sum::<f64>() / u.len() as f64).collect();
    let diffs: Vec<PriceEstimate> = units.windows(2).map(|w| paired_difference(&w[0], &w[1])).collect();
    (diffs.iter().all(|d| d.price > 3.0 * d.std_error), prices, diffs)
}

fn zs(diffs: &[PriceEstimate]) -> String {
    diffs.iter().map(|d| format!("{:.1}", d.price / d.std_error)).collect::<Vec<_>>().join("/")
}

fn c8_figure_shapes() -> Outcome {
    let mc = McConfig { n_paths: 20_000, seed: 11, ..Default::default() };
    let atm = OptionSpec::new(100.0, 1.0).unwrap();
    let mut fp = Vec::new();
    let mut notes = Vec::new();
    let mut pass = true;
    let mut record = |label: &str, units: Vec<Vec<f64>>, fp: &mut Vec<u64>| {
        let (ok, prices, diffs) = decreasing(&units);
        pass &= ok;
        fp.extend(prices.iter().map(|p: &f64| p.to_bits()));
        notes.push(format!(
            "{label}: {} [{}] z {}",
            if ok { "ok" } else { "FAIL" },
            prices.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(", "),
            zs(&diffs)
        ));
    };

    for rho in [-0.5, 0.5] {
        let units = [0.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&g| {
                let p = base(g, 0.015, rho);
                let s = solve(&p);
                call_unit_payoffs(&atm, &spot_state(&s, 0.2), &s, &p, &mc).unwrap()
            })
            .collect();
        record(&format!("gamma 0..3 (rho {rho})"), units, &mut fp);

        let p0 = base(2.0, 0.05, rho);
        let s = solve(&p0);
        let units = [-0.2, 0.0, 0.2, 0.4]
            .iter()
            .map(|&lam| {
                let p = ModelParams { beta_q: p0.beta + lam, ..p0 };
                call_unit_payoffs(&atm, &spot_state(&s, 0.2), &s, &p, &mc).unwrap()
            })
            .collect();
        record(&format!("lambda -0.2..0.4 at beta 0.5 (rho {rho})"), units, &mut fp);

        let zero = OptionSpec::new(0.0, 1.0).unwrap();
        let units = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
            .iter()
            .map(|&x0| call_unit_payoffs(&zero, &spot_state(&s, x0), &s, &p0, &mc).unwrap())
            .collect();
        record(&format!("K=0 x0 0..0.5 (rho {rho})"), units, &mut fp);
    }

    let p = base(2.0, 0.05, -0.5);
    let s = solve(&p);
    let d0 = 100.0 / s.f(0.0);
    let short = OptionSpec::new(100.0, 0.1).unwrap();
    let curve: Vec<Vec<f64>> = [0.0, 0.1, 0.3]
        .iter()
        .map(|&x0| {
            let state = MarketState::new(0.0, d0 * s.f(x0), d0, x0).unwrap();
            call_unit_payoffs(&short, &state, &s, &p, &mc).unwrap()
        })
        .collect();
    let rise = paired_difference(&curve[1], &curve[0]);
    let fall = paired_difference(&curve[1], &curve[2]);
    let ok = rise.price > 3.0 * rise.std_error && fall.price > 3.0 * fall.std_error;
    pass &= ok;
    fp.extend([rise.price.to_bits(), fall.price.to_bits()]);
    notes.push(format!(
        "D0-fixed K=100 T=0.1 x0 0/0.1/0.3: {} rise z {:.1}, fall z {:.1}",
        if ok { "ok" } else { "FAIL" },
        rise.price / rise.std_error,
        fall.price / fall.std_error
    ));
    Outcome { pass, detail: notes.join("; "), fingerprint: fp }
}

fn c9_premium() -> Outcome {
    let v = implied_vol_risk_premium_from(1.7929, 0.2713, -0.7879);
    Outcome::new((v + 0.383).abs() <= 0.001, format!("gamma sigma_x rho_rx = {v:.5}"))
}

fn calibration_truth() -> ModelParams {
    ModelParams { r: 0.05, alpha: 0.03, gamma: 1.8, beta: 1.25 + 0.34, beta_q: 1.25, sigma_x: 0.27, rho_dx: -0.64 }
}

fn calibration_start() -> ModelParams {
    ModelParams { gamma: 1.5, beta_q: 1.1, beta: 1.1 + 0.2, sigma_x: 0.3, rho_dx: -0.5, ..calibration_truth() }
}

fn calibration_config(mode: CalibrationMode, optimizer: NelderMeadOptions) -> CalibrationConfig {
    CalibrationConfig {
        mode,
        alpha_bar: 0.03,
        mc: McConfig { n_paths: 2000, seed: 7, ..Default::default() },
        optimizer,
        standard_errors: false,
        ..Default::default()
    }
}

fn tight() -> NelderMeadOptions {
    NelderMeadOptions { x_tol: 1e-6, f_tol: 1e-9, max_iterations: 3000, max_evaluations: 6000, ..Default::default() }
}

fn c10_calibration() -> Outcome {
    let t = Instant::now();
    let truth = calibration_truth();
    let full = calibration_config(CalibrationMode::Full, tight());
    let quotes = synthetic_quotes(&truth, &SyntheticPanel::default(), &full.mc, &full.grid).unwrap();
    let a = calibrate(&quotes, &calibration_start(), &full).unwrap();
    let b = calibrate(&quotes, &calibration_start(), &calibration_config(CalibrationMode::GammaZero, tight())).unwrap();
    let (fast, took) = within(t, Duration::from_secs(1800));
    let f = &a.params;
    let rel = |v: f64, w: f64| (v / w - 1.0).abs();
    let lam = a.lambda_x.unwrap_or(f64::NAN);
    let pass = quotes.len() == 600
        && rel(f.gamma, truth.gamma) <= 0.1
        && rel(f.sigma_x, truth.sigma_x) <= 0.1
        && rel(f.beta_q, truth.beta_q) <= 0.1
        && (f.rho_dx - truth.rho_dx).abs() <= 0.1
        && (lam - truth.lambda_x()).abs() <= 0.1
        && a.in_sample_rmse <= b.in_sample_rmse
        && fast;
    Outcome {
        pass,
        detail: format!(
            "{} quotes; gamma {:.4}, beta~ {:.4}, sigma_x {:.4}, rho {:.4}, lambda {:.4}; rmse {:.2e} vs gamma=0 {:.4}; {} evals; {took}",
            quotes.len(),
            f.gamma,
            f.beta_q,
            f.sigma_x,
            f.rho_dx,
            lam,
            a.in_sample_rmse,
            b.in_sample_rmse,
            a.evaluations
        ),
        fingerprint: a.estimates.iter().chain(&b.estimates).map(|v| v.to_bits()).collect(),
    }
}

fn c11_antithetic() -> Outcome {
    let p = base(2.0, 0.015, -0.5);
    let s = solve(&p);
    let spec = OptionSpec::new(100.0, 1.0).unwrap();
    let mut ratios = Vec::new();
    let mut fp = Vec::new();
    for seed in 0..10 {
        let anti = McConfig { n_paths: 20_000, seed, antithetic: true, ..Default::default() };
        let plain = McConfig { antithetic: false, ..anti };
        let a = price_call(&spec, &spot_state(&s, 0.2), &s, &p, &anti).unwrap();
        let b = price_call(&spec, &spot_state(&s, 0.2), &s, &p, &plain).unwrap();
        ratios.push(a.std_error / b.std_error);
        fp.extend([a.price.to_bits(), b.price.to_bits()]);
    }
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Outcome { pass: worst <= 1.0, detail: format!("se ratio antithetic/plain: worst {worst:.3} over 10 seeds"), fingerprint: fp }
}

/// Short calibration used for the thread-count comparison.
fn calibration_probe() -> Vec<u64> {
    let cfg = calibration_config(
        CalibrationMode::Full,
        NelderMeadOptions { max_evaluations: 40, ..Default::default() },
    );
    let cfg = CalibrationConfig { restart: false, ..cfg };
    let quotes = synthetic_quotes(&calibration_truth(), &SyntheticPanel::default(), &cfg.mc, &cfg.grid).unwrap();
    let pricer = PanelPricer::new(&quotes, &cfg.mc, &cfg.grid).unwrap();
    let mut fp: Vec<u64> = pricer.model_prices(&calibration_start()).unwrap().iter().map(|v| v.to_bits()).collect();
    let fit = calibrate(&quotes, &calibration_start(), &cfg).unwrap();
    fp.extend(fit.estimates.iter().map(|v| v.to_bits()));
    fp.push(fit.in_sample_rmse.to_bits());
    fp
}

fn stochastic_fingerprints() -> Vec<Vec<u64>> {
    vec![
        c6_simulation().fingerprint,
        c7_pricing_oracles().fingerprint,
        c8_figure_shapes().fingerprint,
        c11_antithetic().fingerprint,
        calibration_probe(),
    ]
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn c12_determinism() -> Outcome {
    let runs: Vec<Vec<Vec<u64>>> = [1, 4, 8].iter().map(|&n| in_pool(n, stochastic_fingerprints)).collect();
    let same = runs[1] == runs[0] && runs[2] == runs[0];
    let values: usize = runs[0].iter().map(Vec::len).sum();
    Outcome::new(
        same,
        format!("{values} stochastic outputs from criteria 6, 7, 8, 11 and a 40-evaluation calibration compared across 1/4/8 threads"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("price-dividend anchor", c1_anchor),
        ("gamma = 0 reduction", c2_gamma_zero),
        ("infeasibility detection", c3_infeasible),
        ("excess volatility", c4_excess_volatility),
        ("finite-difference oracle", c5_oracle),
        ("simulator statistics", c6_simulation),
        ("pricing oracles", c7_pricing_oracles),
        ("figure shapes", c8_figure_shapes),
        ("implied risk premium", c9_premium),
        ("calibration round trip", c10_calibration),
        ("antithetic variance reduction", c11_antithetic),
        ("determinism across threads", c12_determinism),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}) [{:.1?}]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            t.elapsed()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
