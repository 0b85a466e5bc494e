//! Collocation solver for the price-dividend ratio boundary value problem.
//!
//! The domain `[0, ∞)` is truncated to `[0, b]` with `f'(0) = 0` and a
//! right boundary condition taken from the decay `f ~ 1/(γ x²)`: either
//! its logarithmic slope `f'(b) = -2 f(b) / b` (default) or its value
//! `f(b) = 1 / (γ b²)`. The first-order
//! system is discretised with three-point Lobatto IIIA collocation
//! (Hermite-Simpson, fourth order), solved by damped Newton on a banded
//! Jacobian, and the mesh is refined wherever the residual of the cubic
//! interpolant exceeds the tolerance. For `ρ_dx ≠ 0` the problem is first
//! solved at `ρ_dx = 0`, where it is linear, and then continued in `ρ_dx`.

use serde::{Deserialize, Serialize};

use super::ode::PdOde;
use super::solution::PdSolution;
use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::hermite::HermiteTable;
use crate::params::ModelParams;

/// Smallest value an `f` iterate may take before the solve is abandoned.
const MIN_F: f64 = 1e-10;
/// Successive non-decreasing Newton steps tolerated.
const MAX_STALLED_STEPS: usize = 5;
const MAX_NEWTON_ITERS: usize = 60;
const MAX_REFINEMENTS: usize = 25;

/// Condition imposed at the truncation point `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `f'(b) = -2 f(b) / b`.
    #[default]
    AsymptoticSlope,
    /// `f(b) = 1 / (γ b²)`.
    AsymptoticValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdGridConfig {
    /// Truncation point of the volatility domain.
    pub b: f64,
    pub boundary: BoundaryCondition,
    pub initial_mesh_size: usize,
    /// Residual tolerance of the collocation solution.
    pub tol: f64,
    /// Increment of `ρ_dx` between continuation stages.
    pub continuation_step: f64,
    pub max_continuation_steps: usize,
    /// Upper bound on mesh nodes during refinement.
    pub max_nodes: usize,
}

impl Default for PdGridConfig {
    fn default() -> Self {
        Self {
            b: 5.0,
            boundary: BoundaryCondition::AsymptoticSlope,
            initial_mesh_size: 201,
            tol: 1e-6,
            continuation_step: 0.1,
            max_continuation_steps: 20,
            max_nodes: 50_000,
        }
    }
}

impl PdGridConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("grid: {msg}")));
        if !(self.b > 0.0) || !self.b.is_finite() {
            return bad("b must be positive");
        }
        if self.initial_mesh_size < 11 {
            return bad("initial_mesh_size must be at least 11");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.continuation_step > 0.0 && self.continuation_step <= 0.25) {
            return bad("continuation_step must lie in (0, 0.25]");
        }
        if self.max_nodes < self.initial_mesh_size {
            return bad("max_nodes must be at least initial_mesh_size");
        }
        Ok(())
    }
}

/// Solves for the price-dividend ratio. `γ = 0` is dispatched to the
/// constant solution.
pub fn solve_pd_ratio(params: &ModelParams, cfg: &PdGridConfig) -> Result<PdSolution> {
    let params = params.validate()?;
    cfg.validate()?;
    if params.gamma == 0.0 {
        return pd_ratio_constant(params, cfg);
    }

    let n = cfg.initial_mesh_size;
    let mut mesh: Vec<f64> = (0..n).map(|i| cfg.b * i as f64 / (n - 1) as f64).collect();
    mesh[n - 1] = cfg.b;
    let f_b = match cfg.boundary {
        BoundaryCondition::AsymptoticSlope => RightBc::LogSlope(cfg.b),
        BoundaryCondition::AsymptoticValue => RightBc::Value(1.0 / (params.gamma * cfg.b * cfg.b)),
    };
    let mut state = vec![0.0; 2 * n];
    for i in 0..n {
        state[2 * i] = 1.0;
    }

    let target = params.rho_dx;
    let mut rho = 0.0;
    let mut step = cfg.continuation_step.copysign(target);
    let mut stages = 0usize;
    let mut residual;

    // ρ = 0 is linear: a single Newton step from any guess is exact.
    let ode = PdOde::new(&params, 0.0);
    (mesh, state, residual) = solve_stage(&ode, f_b, cfg, mesh, state)?;

    while rho != target {
        if stages >= cfg.max_continuation_steps {
            return Err(Error::NoSolution(format!(
                "continuation did not reach rho_dx = {target} within {} stages",
                cfg.max_continuation_steps
            )));
        }
        stages += 1;
        let next = if (target - rho).abs() <= step.abs() * (1.0 + 1e-12) {
            target
        } else {
            rho + step
        };
        let ode = PdOde::new(&params, next);
        match solve_stage(&ode, f_b, cfg, mesh.clone(), state.clone()) {
            Ok((m, s, res)) => {
                mesh = m;
                state = s;
                residual = res;
                rho = next;
            }
            // A stalled Newton solve is retried with a smaller increment.
            Err(Error::NoSolution(msg)) if msg.starts_with(STALL) && step.abs() > 0.01 => {
                step *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }

    let ode = PdOde::new(&params, target);
    if target != 0.0 {
        check_sqrt_domain(&ode, &mesh, &state, cfg.tol)?;
    }
    Ok(PdSolution::from_collocation(
        params, cfg, &ode, mesh, state, residual,
    ))
}

/// Constant solution `f ≡ 1 / (r - α)` for `γ = 0`.
pub fn pd_ratio_constant(params: ModelParams, cfg: &PdGridConfig) -> Result<PdSolution> {
    if params.r <= params.alpha {
        return Err(Error::GammaZeroRequiresRGreaterAlpha {
            r: params.r,
            alpha: params.alpha,
        });
    }
    if params.gamma != 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: params.gamma,
            reason: "constant solution requires gamma = 0",
        });
    }
    Ok(PdSolution::constant(params, cfg))
}

const STALL: &str = "Newton stalled";

#[derive(Debug, Clone, Copy)]
enum RightBc {
    Value(f64),
    LogSlope(f64),
}

type Stage = (Vec<f64>, Vec<f64>, f64);

/// Newton solve followed by residual-driven mesh refinement.
fn solve_stage(
    ode: &PdOde,
    f_b: RightBc,
    cfg: &PdGridConfig,
    mut mesh: Vec<f64>,
    mut state: Vec<f64>,
) -> Result<Stage> {
    for _ in 0..MAX_REFINEMENTS {
        newton(ode, f_b, &mesh, &mut state)?;
        let residuals = interval_residuals(ode, &mesh, &state);
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        if worst <= cfg.tol {
            return Ok((mesh, state, worst));
        }
        let (new_mesh, new_state) = refine(ode, &mesh, &state, &residuals, cfg.tol);
        if new_mesh.len() > cfg.max_nodes {
            return Err(Error::MeshRefinementExhausted {
                nodes: new_mesh.len(),
                residual: worst,
            });
        }
        mesh = new_mesh;
        state = new_state;
    }
    let residuals = interval_residuals(ode, &mesh, &state);
    Err(Error::MeshRefinementExhausted {
        nodes: mesh.len(),
        residual: residuals.iter().cloned().fold(0.0, f64::max),
    })
}

/// Collocation residual vector; layout matches the Jacobian rows.
fn residual(ode: &PdOde, f_b: RightBc, mesh: &[f64], u: &[f64], out: &mut [f64]) {
    let n = mesh.len();
    out[0] = u[1];
    for i in 0..n - 1 {
        let h = mesh[i + 1] - mesh[i];
        let (f0, g0, f1, g1) = (u[2 * i], u[2 * i + 1], u[2 * i + 2], u[2 * i + 3]);
        let gp0 = ode.second_derivative(mesh[i], f0, g0);
        let gp1 = ode.second_derivative(mesh[i + 1], f1, g1);
        let xm = mesh[i] + 0.5 * h;
        let fm = 0.5 * (f0 + f1) + h / 8.0 * (g0 - g1);
        let gm = 0.5 * (g0 + g1) + h / 8.0 * (gp0 - gp1);
        let gpm = ode.second_derivative(xm, fm, gm);
        out[2 * i + 1] = f1 - f0 - h / 6.0 * (g0 + 4.0 * gm + g1);
        out[2 * i + 2] = g1 - g0 - h / 6.0 * (gp0 + 4.0 * gpm + gp1);
    }
    out[2 * n - 1] = match f_b {
        RightBc::Value(v) => u[2 * n - 2] - v,
        RightBc::LogSlope(b) => u[2 * n - 1] + 2.0 * u[2 * n - 2] / b,
    };
}

fn jacobian(ode: &PdOde, f_b: RightBc, mesh: &[f64], u: &[f64]) -> BandMatrix {
    let n = mesh.len();
    let dim = 2 * n;
    let mut jac = BandMatrix::zeros(dim, 2, 2);
    jac.add(0, 1, 1.0);
    for i in 0..n - 1 {
        let h = mesh[i + 1] - mesh[i];
        let (f0, g0, f1, g1) = (u[2 * i], u[2 * i + 1], u[2 * i + 2], u[2 * i + 3]);
        let (gp0, a0, b0) = ode.second_derivative_jac(mesh[i], f0, g0);
        let (gp1, a1, b1) = ode.second_derivative_jac(mesh[i + 1], f1, g1);
        let xm = mesh[i] + 0.5 * h;
        let fm = 0.5 * (f0 + f1) + h / 8.0 * (g0 - g1);
        let gm = 0.5 * (g0 + g1) + h / 8.0 * (gp0 - gp1);
        let (_, am, bm) = ode.second_derivative_jac(xm, fm, gm);

        // J = [[0, 1], [a, b]] at each point.
        let j0 = [[0.0, 1.0], [a0, b0]];
        let j1 = [[0.0, 1.0], [a1, b1]];
        let jm = [[0.0, 1.0], [am, bm]];
        // ∂u_m/∂u_i = ½I + h/8 J_i ; ∂u_m/∂u_{i+1} = ½I - h/8 J_{i+1}
        let mut dm0 = [[0.0; 2]; 2];
        let mut dm1 = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let id = if r == c { 0.5 } else { 0.0 };
                dm0[r][c] = id + h / 8.0 * j0[r][c];
                dm1[r][c] = id - h / 8.0 * j1[r][c];
            }
        }
        let mul = |a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]| {
            let mut out = [[0.0; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
                }
            }
            out
        };
        let jm_dm0 = mul(&jm, &dm0);
        let jm_dm1 = mul(&jm, &dm1);
        for r in 0..2 {
            let row = 2 * i + 1 + r;
            for c in 0..2 {
                let id = if r == c { 1.0 } else { 0.0 };
                let left = -id - h / 6.0 * (j0[r][c] + 4.0 * jm_dm0[r][c]);
                let right = id - h / 6.0 * (j1[r][c] + 4.0 * jm_dm1[r][c]);
                jac.add(row, 2 * i + c, left);
                jac.add(row, 2 * i + 2 + c, right);
            }
        }
    }
    match f_b {
        RightBc::Value(_) => jac.add(dim - 1, dim - 2, 1.0),
        RightBc::LogSlope(b) => {
            jac.add(dim - 1, dim - 2, 2.0 / b);
            jac.add(dim - 1, dim - 1, 1.0);
        }
    }
    jac
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn min_f(u: &[f64]) -> f64 {
    u.iter().step_by(2).cloned().fold(f64::INFINITY, f64::min)
}

fn newton(ode: &PdOde, f_b: RightBc, mesh: &[f64], u: &mut Vec<f64>) -> Result<()> {
    let dim = u.len();
    let mut res = vec![0.0; dim];
    let mut trial_res = vec![0.0; dim];
    residual(ode, f_b, mesh, u, &mut res);
    let mut norm = norm2(&res);
    let mut stalled = 0usize;

    for _ in 0..MAX_NEWTON_ITERS {
        let jac = jacobian(ode, f_b, mesh, u);
        let mut delta: Vec<f64> = res.iter().map(|v| -v).collect();
        jac.solve_in_place(&mut delta)
            .map_err(|s| Error::NoSolution(format!("singular collocation Jacobian at row {}", s.0)))?;

        let mut lambda = 1.0;
        let mut accepted = None;
        let mut trial = vec![0.0; dim];
        for _ in 0..12 {
            for k in 0..dim {
                trial[k] = u[k] + lambda * delta[k];
            }
            if min_f(&trial) >= MIN_F {
                residual(ode, f_b, mesh, &trial, &mut trial_res);
                let t_norm = norm2(&trial_res);
                if t_norm.is_finite() && t_norm < (1.0 - 1e-4 * lambda) * norm {
                    accepted = Some(t_norm);
                    break;
                }
            }
            lambda *= 0.5;
        }

        let step_size = delta
            .iter()
            .zip(u.iter())
            .map(|(d, v)| (lambda * d).abs() / (1.0 + v.abs()))
            .fold(0.0, f64::max);

        match accepted {
            Some(t_norm) => {
                std::mem::swap(u, &mut trial);
                std::mem::swap(&mut res, &mut trial_res);
                norm = t_norm;
                stalled = 0;
            }
            None => {
                // Take the full Newton step anyway so that an inadmissible
                // solution (negative f) is detected rather than masked.
                for k in 0..dim {
                    u[k] += delta[k];
                }
                if min_f(u) < MIN_F {
                    return Err(Error::NoSolution(format!(
                        "price-dividend ratio iterate fell to {:.3e}",
                        min_f(u)
                    )));
                }
                residual(ode, f_b, mesh, u, &mut res);
                let new_norm = norm2(&res);
                if !(new_norm < norm) {
                    stalled += 1;
                    if stalled >= MAX_STALLED_STEPS {
                        return Err(Error::NoSolution(format!(
                            "{STALL}: residual {new_norm:.3e} not reduced in {MAX_STALLED_STEPS} steps"
                        )));
                    }
                } else {
                    stalled = 0;
                }
                norm = new_norm;
                continue;
            }
        }
        if step_size < 1e-11 || norm < 1e-13 {
            return Ok(());
        }
    }
    if norm < 1e-8 {
        return Ok(());
    }
    Err(Error::NoSolution(format!(
        "{STALL}: no convergence in {MAX_NEWTON_ITERS} iterations (residual {norm:.3e})"
    )))
}

/// Interpolants of `(f, g)` built from node values and ODE slopes.
pub(crate) fn interpolants(ode: &PdOde, mesh: &[f64], u: &[f64]) -> (HermiteTable, HermiteTable) {
    let n = mesh.len();
    let f: Vec<f64> = (0..n).map(|i| u[2 * i]).collect();
    let g: Vec<f64> = (0..n).map(|i| u[2 * i + 1]).collect();
    let gp: Vec<f64> = (0..n)
        .map(|i| ode.second_derivative(mesh[i], f[i], g[i]))
        .collect();
    (
        HermiteTable::new(mesh.to_vec(), f, g.clone()),
        HermiteTable::new(mesh.to_vec(), g, gp),
    )
}

const SAMPLE_POINTS: [f64; 3] = [0.25, 0.5, 0.75];

/// Scaled residual of the cubic interpolant on each interval, sampled at
/// the quarter points and the midpoint.
fn interval_residuals(ode: &PdOde, mesh: &[f64], u: &[f64]) -> Vec<f64> {
    let (tf, tg) = interpolants(ode, mesh, u);
    (0..mesh.len() - 1)
        .map(|k| {
            let h = mesh[k + 1] - mesh[k];
            SAMPLE_POINTS
                .iter()
                .map(|s| {
                    let x = mesh[k] + s * h;
                    let (f, df) = tf.eval_in(k, x);
                    let (g, dg) = tg.eval_in(k, x);
                    let gp = ode.second_derivative(x, f, g);
                    let r1 = (df - g).abs() / (1.0 + g.abs());
                    let r2 = (dg - gp).abs() / (1.0 + gp.abs());
                    r1.max(r2)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn refine(
    ode: &PdOde,
    mesh: &[f64],
    u: &[f64],
    residuals: &[f64],
    tol: f64,
) -> (Vec<f64>, Vec<f64>) {
    let (tf, tg) = interpolants(ode, mesh, u);
    let mut new_mesh = Vec::with_capacity(mesh.len() * 2);
    let mut new_state = Vec::with_capacity(u.len() * 2);
    for k in 0..mesh.len() - 1 {
        new_mesh.push(mesh[k]);
        new_state.push(u[2 * k]);
        new_state.push(u[2 * k + 1]);
        let pieces = if residuals[k] > 100.0 * tol {
            3
        } else if residuals[k] > tol {
            2
        } else {
            1
        };
        let h = mesh[k + 1] - mesh[k];
        for p in 1..pieces {
            let x = mesh[k] + h * p as f64 / pieces as f64;
            new_mesh.push(x);
            new_state.push(tf.eval_in(k, x).0);
            new_state.push(tg.eval_in(k, x).0);
        }
    }
    let last = mesh.len() - 1;
    new_mesh.push(mesh[last]);
    new_state.push(u[2 * last]);
    new_state.push(u[2 * last + 1]);
    (new_mesh, new_state)
}

fn check_sqrt_domain(ode: &PdOde, mesh: &[f64], u: &[f64], tol: f64) -> Result<()> {
    for (i, &x) in mesh.iter().enumerate().skip(1) {
        let arg = ode.sqrt_arg(x, u[2 * i], u[2 * i + 1]);
        if arg < -tol {
            return Err(Error::SqrtDomainViolation { x, arg });
        }
    }
    Ok(())
}
