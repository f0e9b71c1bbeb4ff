//! Time propagation with sampled observables and run-time invariant checks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{validate_state, BasisLabel, CMatrix, DensityMatrix, ModeSpace, StateReport};
use crate::lindblad::kernel::{from_flat, hermiticity_defect_flat, hermitize_flat, to_flat, Evolver, Generator, Stepping};
use crate::lindblad::liouvillian::{liouvillian_matrix, propagator, unvectorize, vectorize};
use crate::lindblad::model::{build_collapse, build_hamiltonian, SystemSpec};
use crate::lindblad::observables::{occupation_probabilities, photon_numbers};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4Fixed,
    /// Exact propagation by `exp(L t)`; only practical for small spaces.
    ExpmOracle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    pub method: Method,
    /// Largest population allowed on any mode's top kept level.
    pub leakage_tol: f64,
    pub stepping: Stepping,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.25e-12,
            t_end: 100e-9,
            sample_interval: 2e-9,
            method: Method::Rk4Fixed,
            leakage_tol: 1e-4,
            stepping: Stepping::Auto,
        }
    }
}

/// `x / unit` as an integer when it is one to within a relative 1e-6.
pub(crate) fn whole_multiple(x: f64, unit: f64, what: &str) -> Result<usize> {
    let ratio = x / unit;
    let n = ratio.round();
    if !(n >= 1.0 && (ratio - n).abs() <= 1e-6 * n) {
        return Err(Error::InvalidParameter(format!(
            "{what}: {x:e} is not a whole multiple of {unit:e}"
        )));
    }
    Ok(n as usize)
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.dt <= self.sample_interval
            && self.sample_interval <= self.t_end
            && self.t_end.is_finite();
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt <= sample_interval <= t_end, got dt={:e}, sample_interval={:e}, t_end={:e}",
                self.dt, self.sample_interval, self.t_end
            )));
        }
        if !(self.leakage_tol > 0.0) {
            return Err(Error::InvalidParameter("leakage_tol must be > 0".into()));
        }
        self.steps_per_sample()?;
        self.sample_count()?;
        Ok(())
    }

    pub fn steps_per_sample(&self) -> Result<usize> {
        whole_multiple(self.sample_interval, self.dt, "sample_interval / dt")
    }

    /// Samples after t = 0.
    pub fn sample_count(&self) -> Result<usize> {
        whole_multiple(self.t_end, self.sample_interval, "t_end / sample_interval")
    }
}

/// Worst invariant defects seen over a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub max_trace_defect: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub max_leakage: f64,
    pub samples_checked: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            max_trace_defect: 0.0,
            max_hermiticity_defect: 0.0,
            min_eigenvalue: f64::INFINITY,
            max_leakage: 0.0,
            samples_checked: 0,
        }
    }
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.max_trace_defect = self.max_trace_defect.max(other.max_trace_defect);
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(other.max_hermiticity_defect);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.max_leakage = self.max_leakage.max(other.max_leakage);
        self.samples_checked += other.samples_checked;
    }

    fn record(&mut self, report: &StateReport, leakage: f64) {
        self.max_trace_defect = self.max_trace_defect.max(report.trace_defect);
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(report.hermiticity_defect);
        self.min_eigenvalue = self.min_eigenvalue.min(report.min_eigenvalue);
        self.max_leakage = self.max_leakage.max(leakage);
        self.samples_checked += 1;
    }

    /// True when every recorded defect is inside the density-matrix and
    /// leakage tolerances.
    pub fn within(&self, leakage_tol: f64) -> bool {
        let report = StateReport {
            hermiticity_defect: self.max_hermiticity_defect,
            trace_defect: self.max_trace_defect,
            min_eigenvalue: if self.samples_checked == 0 { 0.0 } else { self.min_eigenvalue },
        };
        report.is_valid() && self.max_leakage <= leakage_tol
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub watched: Vec<BasisLabel>,
    /// `occupations[t][w]` is the population of `watched[w]` at `times[t]`.
    pub occupations: Vec<Vec<f64>>,
    pub photon_numbers: Vec<(f64, f64)>,
    pub final_state: DensityMatrix,
    pub diagnostics: Diagnostics,
}

enum Backend {
    Rk4(Evolver),
    Expm {
        liouvillian: CMatrix,
        cache: HashMap<usize, CMatrix>,
    },
}

/// Evolves a flat state under one fixed drive setting, checking the state
/// invariants and the truncation leakage whenever asked.
pub(crate) struct Engine {
    space: ModeSpace,
    dt: f64,
    leakage_tol: f64,
    backend: Backend,
    pub(crate) diagnostics: Diagnostics,
}

impl Engine {
    pub fn new(spec: &SystemSpec, space: &ModeSpace, cfg: &IntegratorConfig) -> Result<Self> {
        let h = build_hamiltonian(spec, space)?;
        let c = build_collapse(spec, space)?;
        let backend = match cfg.method {
            Method::Rk4Fixed => Backend::Rk4(Evolver::new(Generator::new(&h, &c), cfg.dt, cfg.stepping)),
            Method::ExpmOracle => Backend::Expm {
                liouvillian: liouvillian_matrix(&h, &c)?,
                cache: HashMap::new(),
            },
        };
        Ok(Self {
            space: space.clone(),
            dt: cfg.dt,
            leakage_tol: cfg.leakage_tol,
            backend,
            diagnostics: Diagnostics::default(),
        })
    }

    /// Replaces the drive while keeping the evolution settings.
    pub fn redrive(&mut self, spec: &SystemSpec, cfg: &IntegratorConfig) -> Result<()> {
        let diagnostics = self.diagnostics;
        *self = Self::new(spec, &self.space, cfg)?;
        self.diagnostics = diagnostics;
        Ok(())
    }

    /// Advances by `steps` steps of `dt`; `repetitions` hints how often the
    /// same interval will be requested again.
    pub fn advance(&mut self, rho: &mut [num_complex::Complex64], steps: usize, repetitions: usize) -> f64 {
        let d = self.space.total_dim();
        match &mut self.backend {
            Backend::Rk4(ev) => ev.advance(rho, steps, repetitions),
            Backend::Expm { liouvillian, cache } => {
                let dt = self.dt;
                let p = cache
                    .entry(steps)
                    .or_insert_with(|| propagator(liouvillian, dt * steps as f64));
                let v = &*p * vectorize(&from_flat(rho, d));
                let m = unvectorize(&v, d).expect("propagator shape matches the state");
                rho.copy_from_slice(&to_flat(&m));
                let defect = hermiticity_defect_flat(rho, d);
                hermitize_flat(rho, d);
                defect
            }
        }
    }

    /// Checks invariants and leakage on `rho` at time `t`.
    pub fn check(&mut self, rho: &DensityMatrix, t: f64, raw_hermiticity_defect: f64) -> Result<()> {
        let mut report = validate_state(rho);
        report.hermiticity_defect = report.hermiticity_defect.max(raw_hermiticity_defect);
        let leaks = rho.top_level_populations();
        let worst = leaks.iter().copied().fold(0.0, f64::max);
        self.diagnostics.record(&report, worst);
        if !report.is_valid() || report.min_eigenvalue.is_nan() {
            return Err(Error::InvariantViolation { time: t, report });
        }
        if let Some((mode, &population)) = leaks
            .iter()
            .enumerate()
            .find(|(_, &p)| p > self.leakage_tol)
        {
            return Err(Error::Leakage {
                time: t,
                mode,
                population,
                tolerance: self.leakage_tol,
            });
        }
        Ok(())
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }
}

/// Integrates the master equation from `rho0` to `cfg.t_end`, recording the
/// watched occupations and both photon numbers at `t = 0` and every
/// `cfg.sample_interval`.
pub fn propagate(
    spec: &SystemSpec,
    space: &ModeSpace,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    watched: &[BasisLabel],
) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.space() != space {
        return Err(Error::DimensionMismatch {
            expected: space.total_dim(),
            found: rho0.dim(),
        });
    }
    for l in watched {
        space.index_of(&l.occupations())?;
    }
    let initial = validate_state(rho0);
    if !initial.is_valid() {
        return Err(Error::InvariantViolation { time: 0.0, report: initial });
    }
    let steps = cfg.steps_per_sample()?;
    let n = cfg.sample_count()?;
    let d = space.total_dim();

    let mut engine = Engine::new(spec, space, cfg)?;
    let mut flat = to_flat(rho0.matrix());
    let mut traj = Trajectory {
        times: Vec::with_capacity(n + 1),
        watched: watched.to_vec(),
        occupations: Vec::with_capacity(n + 1),
        photon_numbers: Vec::with_capacity(n + 1),
        final_state: rho0.clone(),
        diagnostics: Diagnostics::default(),
    };
    let mut raw_defect = 0.0;
    for k in 0..=n {
        if k > 0 {
            raw_defect = engine.advance(&mut flat, steps, n);
        }
        let t = k as f64 * cfg.sample_interval;
        let rho = DensityMatrix::new(space.clone(), from_flat(&flat, d))?;
        engine.check(&rho, t, raw_defect)?;
        traj.times.push(t);
        traj.occupations.push(occupation_probabilities(&rho, watched)?);
        traj.photon_numbers.push(photon_numbers(&rho)?);
        traj.final_state = rho;
    }
    traj.diagnostics = engine.diagnostics;
    Ok(traj)
}
