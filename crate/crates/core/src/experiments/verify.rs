//! Self-checks of the integrator against independent references.

use std::f64::consts::TAU;
use std::fmt;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::fock::{DensityMatrix, ModeSpace};
use crate::lindblad::{propagate, whole_multiple, CollapseMode, Diagnostics, Frame, IntegratorConfig, Method, SystemSpec, Trajectory};
use crate::readout::encode_input;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.3e} (tolerance {:.1e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance,
            self.detail
        )
    }
}

fn check(name: &str, value: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: value <= tolerance,
        value,
        tolerance,
        detail,
    }
}

fn failed(name: &str, tolerance: f64, err: impl fmt::Display) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: false,
        value: f64::INFINITY,
        tolerance,
        detail: err.to_string(),
    }
}

/// `cfg` shortened to `horizon`, keeping the sample spacing when it fits.
fn over(cfg: &IntegratorConfig, horizon: f64) -> IntegratorConfig {
    let sample_interval = if whole_multiple(horizon, cfg.sample_interval, "horizon").is_ok() {
        cfg.sample_interval
    } else {
        horizon
    };
    IntegratorConfig {
        t_end: horizon,
        sample_interval,
        ..*cfg
    }
}

/// Runs without the leakage guard: these comparisons test the numerics on a
/// fixed truncation, not whether the truncation is adequate.
fn unguarded(cfg: IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig { leakage_tol: 1.0, ..cfg }
}

fn run(spec: &SystemSpec, space: &ModeSpace, cfg: &IntegratorConfig) -> Result<Trajectory> {
    propagate(spec, space, &DensityMatrix::vacuum(space), cfg, &[])
}

fn max_abs_diff(a: &Trajectory, b: &Trajectory) -> f64 {
    (a.final_state.matrix() - b.final_state.matrix()).camax()
}

/// RK4 against the matrix exponential of the Liouvillian.
pub fn oracle_check(c: &ExperimentConfig) -> CheckResult {
    let v = &c.verify;
    let name = "rk4_vs_expm";
    let body = || -> Result<CheckResult> {
        let space = ModeSpace::two_mode(v.oracle_k, v.oracle_k)?;
        let cfg = unguarded(over(&c.integrator, v.horizon));
        cfg.validate()?;
        let rk4 = run(&c.system, &space, &IntegratorConfig { method: Method::Rk4Fixed, ..cfg })?;
        let expm = run(&c.system, &space, &IntegratorConfig { method: Method::ExpmOracle, ..cfg })?;
        Ok(check(
            name,
            max_abs_diff(&rk4, &expm),
            v.oracle_tol,
            format!("max |rho_rk4 - rho_expm| at t = {:e} s, k = {}", v.horizon, v.oracle_k),
        ))
    };
    body().unwrap_or_else(|e| failed(name, v.oracle_tol, e))
}

/// Photon number of a driven damped oscillator at steady state,
/// `2 kappa eps^2 / (w^2 + kappa^2 / 4)`.
pub fn driven_steady_state(omega: f64, kappa: f64, eps: f64) -> f64 {
    2.0 * kappa * eps * eps / (omega * omega + kappa * kappa / 4.0)
}

/// Long-time `N_a` of the uncoupled, singly driven system against its
/// closed form.
pub fn steady_state_check(c: &ExperimentConfig) -> CheckResult {
    let v = &c.verify;
    let name = "steady_state";
    let body = || -> Result<CheckResult> {
        let spec = SystemSpec {
            g: 0.0,
            eps_b: 0.0,
            kappa_a: TAU * v.steady_kappa,
            collapse_mode: CollapseMode::Independent,
            ..c.system
        };
        let omega = match spec.frame {
            Frame::Lab => spec.omega_a,
            Frame::Rotating { delta_a, .. } => delta_a,
        };
        let want = driven_steady_state(omega, spec.kappa_a, spec.eps_a);
        let space = ModeSpace::two_mode(v.steady_k, 2)?;
        let cfg = over(&c.integrator, v.steady_t_end);
        cfg.validate()?;
        let traj = run(&spec, &space, &cfg)?;
        let got = traj.photon_numbers.last().map(|p| p.0).unwrap_or(0.0);
        let rel = if want > 0.0 { (got - want).abs() / want } else { got.abs() };
        Ok(check(
            name,
            rel,
            v.steady_tol,
            format!("relative error of N_a = {got:.6e} against {want:.6e}"),
        ))
    };
    body().unwrap_or_else(|e| failed(name, v.steady_tol, e))
}

/// Final states at `dt` and `dt / 2` over the verification horizon.
pub fn halving_check(c: &ExperimentConfig) -> CheckResult {
    let v = &c.verify;
    let name = "dt_halving";
    let body = || -> Result<CheckResult> {
        let space = ModeSpace::two_mode(v.oracle_k, v.oracle_k)?;
        let cfg = unguarded(over(&c.integrator, v.horizon));
        cfg.validate()?;
        let coarse = run(&c.system, &space, &cfg)?;
        let fine = run(&c.system, &space, &IntegratorConfig { dt: cfg.dt / 2.0, ..cfg })?;
        Ok(check(
            name,
            max_abs_diff(&coarse, &fine),
            v.halving_tol,
            format!("max |rho(dt) - rho(dt/2)| at t = {:e} s, dt = {:e} s", v.horizon, cfg.dt),
        ))
    };
    body().unwrap_or_else(|e| failed(name, v.halving_tol, e))
}

/// Full-length runs on the configured truncation at several drive
/// strengths, with every invariant and the leakage guard active.
pub fn validity_check(c: &ExperimentConfig) -> (CheckResult, Diagnostics) {
    let v = &c.verify;
    let name = "state_validity";
    let tol = c.integrator.leakage_tol;
    let n = v.sweep_points;
    let mut diagnostics = Diagnostics::default();
    for i in 0..n {
        let s = if n == 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
        let outcome = encode_input(s, &c.encoding)
            .and_then(|(ea, eb)| run(&c.system.with_drives(ea, eb), &c.space, &c.integrator));
        match outcome {
            Ok(traj) => diagnostics.merge(&traj.diagnostics),
            Err(e) => return (failed(name, tol, format!("s = {s}: {e}")), diagnostics),
        }
    }
    let passed = diagnostics.within(tol);
    let result = CheckResult {
        name: name.into(),
        passed,
        value: diagnostics.max_leakage,
        tolerance: tol,
        detail: format!(
            "{n} drive settings; max leakage, with trace {:.1e}, hermiticity {:.1e}, min eigenvalue {:.1e}",
            diagnostics.max_trace_defect, diagnostics.max_hermiticity_defect, diagnostics.min_eigenvalue
        ),
    };
    (result, diagnostics)
}

/// Every check, in a fixed order, plus the invariant summary of the
/// guarded runs.
pub fn run_checks(c: &ExperimentConfig) -> (Vec<CheckResult>, Diagnostics) {
    let mut checks = vec![oracle_check(c), steady_state_check(c), halving_check(c)];
    let (validity, diagnostics) = validity_check(c);
    checks.push(validity);
    (checks, diagnostics)
}
