//! Experiment drivers behind the `qrc` command: each reads an
//! [`ExperimentConfig`], writes CSV files into the output directory and
//! finishes with a `manifest.txt` describing the run.

pub mod metrics;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::config::{ConfigFile, ExperimentConfig};
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::lindblad::{propagate, Diagnostics, SystemSpec, Trajectory};
use crate::readout::{collect_features_with_diagnostics, memory_capacity, nonlinearity_score, MemoryCapacity};

pub use verify::{run_checks, CheckResult};

pub const VERSION: &str = concat!("qrc ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "FAILED")]
    Failed,
}

/// Result of one command: what was written, what was printed, and whether
/// the run met every tolerance.
#[derive(Debug)]
pub struct RunOutcome {
    pub command: &'static str,
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub report: Vec<String>,
    pub error: Option<Error>,
}

impl RunOutcome {
    /// 0 on success, 2 for configuration errors, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match (&self.error, self.status) {
            (Some(e), _) if e.is_configuration() => 2,
            (None, Status::Ok) => 0,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
struct ManifestRun<'a> {
    status: Status,
    command: &'a str,
    version: &'a str,
    wall_time_s: f64,
    threads: usize,
    files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: ManifestRun<'a>,
    diagnostics: Diagnostics,
    #[serde(rename = "check", skip_serializing_if = "<[_]>::is_empty")]
    checks: &'a [CheckResult],
    config: &'a ConfigFile,
}

/// Accumulates the pieces of a run before the manifest is written.
struct Run<'a> {
    config: &'a ExperimentConfig,
    command: &'static str,
    threads: usize,
    started: Instant,
    files: Vec<PathBuf>,
    report: Vec<String>,
    diagnostics: Diagnostics,
    checks: Vec<CheckResult>,
}

impl<'a> Run<'a> {
    fn new(config: &'a ExperimentConfig, command: &'static str, threads: usize) -> Self {
        Self {
            config,
            command,
            threads,
            started: Instant::now(),
            files: Vec::new(),
            report: Vec::new(),
            diagnostics: Diagnostics::default(),
            checks: Vec::new(),
        }
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.config
            .output
            .directory
            .join(format!("{}{suffix}.csv", self.config.output.prefix))
    }

    fn finish(mut self, result: Result<()>) -> RunOutcome {
        let diagnostics_ok =
            self.diagnostics.samples_checked == 0 || self.diagnostics.within(self.config.integrator.leakage_tol);
        let checks_ok = self.checks.iter().all(|c| c.passed);
        if result.is_ok() && !diagnostics_ok {
            self.report.push(format!(
                "invariant summary outside tolerance: {}",
                summarize(&self.diagnostics)
            ));
        }
        let status = if result.is_ok() && diagnostics_ok && checks_ok {
            Status::Ok
        } else {
            Status::Failed
        };
        let error = result.err();
        let manifest = self.config.output.directory.join(MANIFEST_NAME);
        let doc = Manifest {
            run: ManifestRun {
                status,
                command: self.command,
                version: VERSION,
                wall_time_s: elapsed(self.started.elapsed()),
                threads: self.threads,
                files: self.files.iter().map(|p| p.display().to_string()).collect(),
                error: error.as_ref().map(|e| e.to_string()),
            },
            diagnostics: self.diagnostics,
            checks: &self.checks,
            config: &self.config.file,
        };
        let text = toml::to_string(&doc).expect("manifest always serializes");
        let mut error = error;
        let mut status = status;
        if let Err(e) = write_file(&manifest, &text) {
            status = Status::Failed;
            error.get_or_insert(e);
        }
        RunOutcome {
            command: self.command,
            status,
            files: self.files,
            manifest,
            report: self.report,
            error,
        }
    }
}

fn elapsed(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e3).round() / 1e3
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub fn summarize(d: &Diagnostics) -> String {
    format!(
        "max |Tr rho - 1| = {:.2e}, max hermiticity defect = {:.2e}, min eigenvalue = {:.2e}, max leakage = {:.2e} over {} samples",
        d.max_trace_defect, d.max_hermiticity_defect, d.min_eigenvalue, d.max_leakage, d.samples_checked
    )
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Occupation probabilities of the watched states after one drive segment,
/// over the configured grid of normalized drive amplitudes.
///
/// Writes `<prefix>.csv` with columns `s,eps_a,eps_b,<watched...>` and
/// `<prefix>_scores.csv` with each state's nonlinearity score. `threads = 0`
/// uses every core; the output does not depend on the thread count.
pub fn cmd_nonlinearity(config: &ExperimentConfig, threads: usize) -> RunOutcome {
    let mut run = Run::new(config, "nonlinearity", threads);
    let result = nonlinearity(&mut run, threads);
    run.finish(result)
}

fn nonlinearity(run: &mut Run, threads: usize) -> Result<()> {
    let c = run.config;
    ensure_dir(&c.output.directory)?;
    let grid = c.sweep.grid();
    let (features, diagnostics) = with_pool(threads, || {
        collect_features_with_diagnostics(&grid, &c.encoding, &c.system, &c.space, &c.integrator, &c.watched)
    })??;
    run.diagnostics = diagnostics;

    let names = &features.columns()[..features.columns().len() - 1];
    let mut header: Vec<String> = vec!["s".into(), "eps_a".into(), "eps_b".into()];
    header.extend(names.iter().cloned());
    let rows = grid.iter().enumerate().map(|(i, &s)| {
        let mut row = vec![fmt_f64(s), fmt_f64(s * c.encoding.eps_a_max), fmt_f64(s * c.encoding.eps_b_max)];
        row.extend(features.matrix().row(i).iter().take(names.len()).map(|&p| fmt_f64(p)));
        row
    });
    let path = run.path("");
    write_csv(&path, &header, rows)?;
    run.files.push(path);

    if grid.len() >= 3 {
        let mut scores = Vec::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            let score = nonlinearity_score(&grid, &features.neuron_column(j))?;
            scores.push(vec![name.clone(), fmt_f64(score)]);
            run.report.push(format!("{name}: nonlinearity score {score:.4}"));
        }
        let path = run.path("_scores");
        write_csv(&path, &["state".into(), "score".into()], scores)?;
        run.files.push(path);
    }
    run.report.push(format!("{} inputs; {}", grid.len(), summarize(&run.diagnostics)));
    Ok(())
}

fn trajectory_rows(traj: &Trajectory) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.times.iter().enumerate().map(move |(i, &t)| {
        let (na, nb) = traj.photon_numbers[i];
        let mut row = vec![fmt_f64(t), fmt_f64(na), fmt_f64(nb)];
        row.extend(traj.occupations[i].iter().map(|&p| fmt_f64(p)));
        row
    })
}

/// Propagates every case from vacuum, sampling every `sample_interval`.
/// Writes one `<prefix>_<case>.csv` per case with columns
/// `t,N_a,N_b,<watched...>`, or `<prefix>.csv` when there are no cases.
pub fn cmd_dynamics(config: &ExperimentConfig) -> RunOutcome {
    let mut run = Run::new(config, "dynamics", 1);
    let result = dynamics(&mut run);
    run.finish(result)
}

fn dynamics(run: &mut Run) -> Result<()> {
    let c = run.config;
    ensure_dir(&c.output.directory)?;
    let mut header: Vec<String> = vec!["t".into(), "N_a".into(), "N_b".into()];
    header.extend(c.watched.iter().map(|l| l.column_name()));
    for case in c.dynamics_cases() {
        let traj = propagate(&case.system, &case.space, &DensityMatrix::vacuum(&case.space), &c.integrator, &c.watched)?;
        run.diagnostics.merge(&traj.diagnostics);
        let path = if c.cases.is_empty() {
            run.path("")
        } else {
            run.path(&format!("_{}", case.name))
        };
        write_csv(&path, &header, trajectory_rows(&traj))?;
        run.files.push(path);
        run.report.push(case_summary(&case.name, &traj));
    }
    run.report.push(summarize(&run.diagnostics));
    Ok(())
}

fn case_summary(name: &str, traj: &Trajectory) -> String {
    let na: Vec<f64> = traj.photon_numbers.iter().map(|p| p.0).collect();
    let t = &traj.times;
    let end = *t.last().unwrap_or(&0.0);
    let (na_end, nb_end) = *traj.photon_numbers.last().unwrap_or(&(0.0, 0.0));
    let window = 20e-9_f64.min(end);
    let early = metrics::peak_to_peak(t, &na, 0.0, window);
    let late = metrics::peak_to_peak(t, &na, end - window, end);
    format!(
        "{name}: N_a(end) = {na_end:.4e}, N_b(end) = {nb_end:.4e}, N_a maxima = {}, settle |N_a(end) - N_a(end/2)|/N_a(end) = {:.3e}, late/early peak-to-peak = {:.3}",
        metrics::local_maxima(&na),
        metrics::settle_ratio(t, &na, end / 2.0, end),
        if early > 0.0 { late / early } else { f64::NAN },
    )
}

fn with_kappa(system: &SystemSpec, kappa_hz: f64) -> SystemSpec {
    let k = std::f64::consts::TAU * kappa_hz;
    SystemSpec {
        kappa_a: k,
        kappa_b: k,
        ..*system
    }
}

/// Memory capacity per delay for each configured decay rate.
///
/// Writes `<prefix>.csv` with rows `kappa,delay,capacity` for delays
/// `0..=max_delay`, then one row per rate with delay `sum` holding the
/// total over delays `>= 1`. Rates are in Hz; without a rate grid the
/// `[system]` rates are used and `kappa` holds `kappa_a`.
pub fn cmd_memory(config: &ExperimentConfig) -> RunOutcome {
    let mut run = Run::new(config, "memory", 1);
    let result = memory(&mut run);
    run.finish(result)
}

fn memory(run: &mut Run) -> Result<()> {
    let c = run.config;
    ensure_dir(&c.output.directory)?;
    let runs: Vec<(f64, SystemSpec)> = if c.sweep.kappas_hz.is_empty() {
        vec![(c.file.system.kappa_a, c.system)]
    } else {
        c.sweep.kappas_hz.iter().map(|&k| (k, with_kappa(&c.system, k))).collect()
    };
    let mut results: Vec<(f64, MemoryCapacity)> = Vec::with_capacity(runs.len());
    for (kappa, system) in runs {
        let cap = memory_capacity(
            &system,
            &c.space,
            &c.encoding,
            &c.integrator,
            &c.watched,
            c.sweep.seq_len,
            c.sweep.max_delay,
            c.seed,
        )?;
        run.diagnostics.merge(&cap.diagnostics);
        run.report.push(format!(
            "kappa = {kappa:e} Hz: capacities {:?}, delayed sum {:.4}",
            cap.per_delay.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            cap.delayed_sum()
        ));
        results.push((kappa, cap));
    }
    let mut rows = Vec::new();
    for (kappa, cap) in &results {
        for (d, x) in cap.per_delay.iter().enumerate() {
            rows.push(vec![fmt_f64(*kappa), d.to_string(), fmt_f64(*x)]);
        }
    }
    for (kappa, cap) in &results {
        rows.push(vec![fmt_f64(*kappa), "sum".into(), fmt_f64(cap.delayed_sum())]);
    }
    let path = run.path("");
    write_csv(&path, &["kappa".into(), "delay".into(), "capacity".into()], rows)?;
    run.files.push(path);
    run.report.push(summarize(&run.diagnostics));
    Ok(())
}

/// Runs the verification checks, writes `<prefix>.csv` with one row per
/// check, and fails unless every check passes.
pub fn cmd_verify(config: &ExperimentConfig) -> RunOutcome {
    let mut run = Run::new(config, "verify", 1);
    let result = verify_cmd(&mut run);
    run.finish(result)
}

fn verify_cmd(run: &mut Run) -> Result<()> {
    let c = run.config;
    ensure_dir(&c.output.directory)?;
    let (checks, diagnostics) = run_checks(c);
    run.diagnostics = diagnostics;
    let rows = checks.iter().map(|k| {
        vec![
            k.name.clone(),
            if k.passed { "pass".into() } else { "fail".into() },
            fmt_f64(k.value),
            fmt_f64(k.tolerance),
            k.detail.clone(),
        ]
    });
    let header = ["check", "result", "value", "tolerance", "detail"].map(String::from);
    let path = run.path("");
    write_csv(&path, &header, rows)?;
    run.files.push(path);
    for k in &checks {
        run.report.push(k.to_string());
    }
    run.checks = checks;
    Ok(())
}
