//! Experiment configuration files.
//!
//! A config is TOML with the sections `[system]`, `[space]`, `[integrator]`,
//! `[encoding]`, `[sweep]`, `[verify]` and `[output]`, an optional top-level
//! `seed`, and any number of `[[case]]` overrides. Frequencies and rates are
//! ordinary frequencies in Hz, drive amplitudes in sqrt(Hz), times in
//! seconds. Every key is optional; unknown keys are rejected.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{default_watched_states, BasisLabel, ModeSpace};
use crate::lindblad::{CollapseMode, Frame, IntegratorConfig, Method, Stepping, SystemSpec};
use crate::readout::{EncodingSpec, DEFAULT_REL_TOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    #[default]
    Lab,
    Rotating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub f_a: f64,
    pub f_b: f64,
    pub g: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub collapse_mode: CollapseMode,
    pub frame: FrameKind,
    /// Detunings in Hz, used only in the rotating frame.
    pub delta_a: f64,
    pub delta_b: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            f_a: 10e9,
            f_b: 9.5e9,
            g: 700e6,
            kappa_a: 17e6,
            kappa_b: 21e6,
            eps_a: 1e6,
            eps_b: 5e5,
            collapse_mode: CollapseMode::Combined,
            frame: FrameKind::Lab,
            delta_a: 0.0,
            delta_b: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceSection {
    pub k_a: usize,
    pub k_b: usize,
    /// Basis labels such as `"01"` or `"|1,2>"`; empty means the default eight.
    pub watched: Vec<String>,
}

impl Default for SpaceSection {
    fn default() -> Self {
        Self {
            k_a: 4,
            k_b: 4,
            watched: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[default]
    Rk4,
    Expm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    pub leakage_tol: f64,
    pub method: MethodKind,
    pub stepping: Stepping,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            dt: d.dt,
            t_end: d.t_end,
            sample_interval: d.sample_interval,
            leakage_tol: d.leakage_tol,
            method: MethodKind::Rk4,
            stepping: d.stepping,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingSection {
    pub eps_a_max: f64,
    pub eps_b_max: f64,
    pub duration: f64,
    pub readout_time: f64,
    pub feature_samples: usize,
}

impl Default for EncodingSection {
    fn default() -> Self {
        let d = EncodingSpec::default();
        Self {
            eps_a_max: d.eps_a_max,
            eps_b_max: d.eps_b_max,
            duration: d.duration,
            readout_time: d.readout_time,
            feature_samples: d.feature_samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Grid size for the drive-amplitude sweep.
    pub points: usize,
    pub s_min: f64,
    pub s_max: f64,
    /// Memory benchmark decay rates in Hz, applied to both modes. Empty
    /// runs the `[system]` rates only.
    pub kappas: Vec<f64>,
    pub seq_len: usize,
    pub max_delay: usize,
    pub rel_tol: f64,
    pub ridge: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            points: 51,
            s_min: 0.0,
            s_max: 1.0,
            kappas: Vec::new(),
            seq_len: 500,
            max_delay: 5,
            rel_tol: DEFAULT_REL_TOL,
            ridge: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Per-mode truncation for the oracle and step-halving checks.
    pub oracle_k: usize,
    pub horizon: f64,
    pub oracle_tol: f64,
    pub halving_tol: f64,
    /// Decay rate (Hz) and truncation of the driven single-mode steady-state check.
    pub steady_kappa: f64,
    pub steady_k: usize,
    pub steady_t_end: f64,
    pub steady_tol: f64,
    /// Drive settings, as fractions of the encoding maxima, in the validity sweep.
    pub sweep_points: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            oracle_k: 3,
            horizon: 10e-9,
            oracle_tol: 1e-6,
            halving_tol: 1e-7,
            steady_kappa: 100e6,
            steady_k: 8,
            steady_t_end: 50e-9,
            steady_tol: 0.01,
            sweep_points: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            prefix: "run".into(),
        }
    }
}

/// One `[[case]]`: a name plus overrides of `[system]` and `[space]` keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collapse_mode: Option<CollapseMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_a: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_b: Option<usize>,
}

/// The file as written, with defaults filled in.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    pub system: SystemSection,
    pub space: SpaceSection,
    pub integrator: IntegratorSection,
    pub encoding: EncodingSection,
    pub sweep: SweepSection,
    pub verify: VerifySection,
    pub output: OutputSection,
    #[serde(rename = "case", skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseSection>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Canonical TOML with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections always serialize")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub name: String,
    pub system: SystemSpec,
    pub space: ModeSpace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub points: usize,
    pub s_min: f64,
    pub s_max: f64,
    /// Hz, as configured.
    pub kappas_hz: Vec<f64>,
    pub seq_len: usize,
    pub max_delay: usize,
    pub rel_tol: f64,
    pub ridge: f64,
}

impl SweepSpec {
    /// `points` evenly spaced inputs from `s_min` to `s_max` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.s_min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.s_min + (self.s_max - self.s_min) * (i as f64 / n))
            .collect()
    }
}

/// A validated configuration in the library's units.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub file: ConfigFile,
    pub system: SystemSpec,
    pub space: ModeSpace,
    pub watched: Vec<BasisLabel>,
    pub integrator: IntegratorConfig,
    pub encoding: EncodingSpec,
    pub sweep: SweepSpec,
    pub verify: VerifySection,
    pub cases: Vec<Case>,
    pub seed: u64,
    pub output: OutputSection,
}

fn system_from(s: &SystemSection) -> Result<SystemSpec> {
    let mut spec = SystemSpec::from_hz(s.f_a, s.f_b, s.g, s.kappa_a, s.kappa_b, s.eps_a, s.eps_b, s.collapse_mode);
    if s.frame == FrameKind::Rotating {
        spec.frame = Frame::Rotating {
            delta_a: TAU * s.delta_a,
            delta_b: TAU * s.delta_b,
        };
    } else if s.delta_a != 0.0 || s.delta_b != 0.0 {
        return Err(Error::Config("delta_a / delta_b apply only with frame = \"rotating\"".into()));
    }
    spec.validate()?;
    Ok(spec)
}

fn valid_case_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && name.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'-')
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::resolve(ConfigFile::load(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::resolve(ConfigFile::parse(text)?)
    }

    /// Validates `file`; every failure is reported as [`Error::Config`].
    pub fn resolve(file: ConfigFile) -> Result<Self> {
        Self::resolve_inner(file).map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn resolve_inner(file: ConfigFile) -> Result<Self> {
        let system = system_from(&file.system)?;
        let space = ModeSpace::two_mode(file.space.k_a, file.space.k_b)?;

        let watched = if file.space.watched.is_empty() {
            default_watched_states()
        } else {
            file.space
                .watched
                .iter()
                .map(|s| s.parse::<BasisLabel>())
                .collect::<Result<Vec<_>>>()?
        };
        for l in &watched {
            space.index_of(&l.occupations())?;
        }

        let i = &file.integrator;
        let integrator = IntegratorConfig {
            dt: i.dt,
            t_end: i.t_end,
            sample_interval: i.sample_interval,
            method: match i.method {
                MethodKind::Rk4 => Method::Rk4Fixed,
                MethodKind::Expm => Method::ExpmOracle,
            },
            leakage_tol: i.leakage_tol,
            stepping: i.stepping,
        };
        integrator.validate()?;

        let e = &file.encoding;
        let encoding = EncodingSpec {
            eps_a_max: e.eps_a_max,
            eps_b_max: e.eps_b_max,
            duration: e.duration,
            readout_time: e.readout_time,
            feature_samples: e.feature_samples,
        };
        encoding.validate()?;
        encoding.read_steps(&integrator)?;
        encoding.segment_steps(&integrator)?;

        let s = &file.sweep;
        if s.points == 0 {
            return Err(Error::Config("sweep.points must be >= 1".into()));
        }
        if !(0.0 <= s.s_min && s.s_min <= s.s_max && s.s_max <= 1.0) {
            return Err(Error::Config(format!(
                "sweep range must satisfy 0 <= s_min <= s_max <= 1, got [{}, {}]",
                s.s_min, s.s_max
            )));
        }
        if s.kappas.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(Error::Config("sweep.kappas must be finite and >= 0".into()));
        }
        if s.seq_len < 10 * s.max_delay.max(1) {
            return Err(Error::Config(format!(
                "sweep.seq_len ({}) must be at least 10 * max(max_delay, 1)",
                s.seq_len
            )));
        }
        if !(s.rel_tol.is_finite() && s.rel_tol >= 0.0 && s.ridge.is_finite() && s.ridge >= 0.0) {
            return Err(Error::Config("sweep.rel_tol and sweep.ridge must be >= 0".into()));
        }
        let sweep = SweepSpec {
            points: s.points,
            s_min: s.s_min,
            s_max: s.s_max,
            kappas_hz: s.kappas.clone(),
            seq_len: s.seq_len,
            max_delay: s.max_delay,
            rel_tol: s.rel_tol,
            ridge: s.ridge,
        };

        let v = &file.verify;
        let positive = [
            ("horizon", v.horizon),
            ("oracle_tol", v.oracle_tol),
            ("halving_tol", v.halving_tol),
            ("steady_kappa", v.steady_kappa),
            ("steady_t_end", v.steady_t_end),
            ("steady_tol", v.steady_tol),
        ];
        for (name, x) in positive {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Config(format!("verify.{name} must be > 0, got {x}")));
            }
        }
        if v.oracle_k < 2 || v.steady_k < 2 || v.sweep_points == 0 {
            return Err(Error::Config("verify truncations must be >= 2 and sweep_points >= 1".into()));
        }

        if file.output.prefix.is_empty() || !valid_case_name(&file.output.prefix) {
            return Err(Error::Config(format!(
                "output.prefix {:?} must be non-empty and use only letters, digits, '_' or '-'",
                file.output.prefix
            )));
        }

        let mut cases = Vec::with_capacity(file.cases.len());
        for c in &file.cases {
            if !valid_case_name(&c.name) {
                return Err(Error::Config(format!(
                    "case name {:?} must be non-empty and use only letters, digits, '_' or '-'",
                    c.name
                )));
            }
            if cases.iter().any(|k: &Case| k.name == c.name) {
                return Err(Error::Config(format!("duplicate case name {:?}", c.name)));
            }
            let base = &file.system;
            let merged = SystemSection {
                f_a: c.f_a.unwrap_or(base.f_a),
                f_b: c.f_b.unwrap_or(base.f_b),
                g: c.g.unwrap_or(base.g),
                kappa_a: c.kappa_a.unwrap_or(base.kappa_a),
                kappa_b: c.kappa_b.unwrap_or(base.kappa_b),
                eps_a: c.eps_a.unwrap_or(base.eps_a),
                eps_b: c.eps_b.unwrap_or(base.eps_b),
                collapse_mode: c.collapse_mode.unwrap_or(base.collapse_mode),
                ..base.clone()
            };
            let case_space = ModeSpace::two_mode(c.k_a.unwrap_or(file.space.k_a), c.k_b.unwrap_or(file.space.k_b))?;
            for l in &watched {
                case_space.index_of(&l.occupations())?;
            }
            cases.push(Case {
                name: c.name.clone(),
                system: system_from(&merged)?,
                space: case_space,
            });
        }

        Ok(Self {
            system,
            space,
            watched,
            integrator,
            encoding,
            sweep,
            verify: file.verify.clone(),
            cases,
            seed: file.seed,
            output: file.output.clone(),
            file,
        })
    }

    /// The configured cases, or the base system as a single case named
    /// after the output prefix.
    pub fn dynamics_cases(&self) -> Vec<Case> {
        if self.cases.is_empty() {
            vec![Case {
                name: self.output.prefix.clone(),
                system: self.system,
                space: self.space.clone(),
            }]
        } else {
            self.cases.clone()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.file.seed = seed;
        self
    }

    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.output.directory = dir.clone();
        self.file.output.directory = dir;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.system, SystemSpec::reference().with_drives(1e6, 5e5));
        assert_eq!(c.space.dims(), &[4, 4]);
        assert_eq!(c.watched, default_watched_states());
        assert_eq!(c.integrator, IntegratorConfig::default());
        assert_eq!(c.sweep.grid().len(), 51);
        assert!(c.cases.is_empty());
    }

    #[test]
    fn grid_is_exact_at_the_ends() {
        let c = ExperimentConfig::parse("").unwrap();
        let g = c.sweep.grid();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[50], 1.0);
        assert_eq!(g[25], 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["[system]\nkapa_a = 1e6\n", "sed = 3\n", "[outptu]\n", "[[case]]\nname = \"x\"\nkb = 3\n"] {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert!(err.is_configuration(), "{text}: {err}");
        }
    }

    #[test]
    fn units_are_converted() {
        let c = ExperimentConfig::parse("[system]\nf_a = 1.0\ng = 2.0\neps_a = 3.0\n").unwrap();
        assert_eq!(c.system.omega_a, TAU);
        assert_eq!(c.system.g, 2.0 * TAU);
        assert_eq!(c.system.eps_a, 3.0);
    }

    #[test]
    fn rotating_frame() {
        let c = ExperimentConfig::parse("[system]\nframe = \"rotating\"\ndelta_a = 1e6\ndelta_b = -2e6\n").unwrap();
        assert_eq!(c.system.frame, Frame::Rotating { delta_a: TAU * 1e6, delta_b: -TAU * 2e6 });
        assert!(ExperimentConfig::parse("[system]\ndelta_a = 1e6\n").is_err());
    }

    #[test]
    fn cases_override_base() {
        let text = r#"
[system]
kappa_a = 17e6

[[case]]
name = "fast"
kappa_a = 100e6
k_a = 6

[[case]]
name = "slow"
collapse_mode = "independent"
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.cases.len(), 2);
        assert_eq!(c.cases[0].system.kappa_a, TAU * 100e6);
        assert_eq!(c.cases[0].space.dims(), &[6, 4]);
        assert_eq!(c.cases[1].system.kappa_a, TAU * 17e6);
        assert_eq!(c.cases[1].system.collapse_mode, CollapseMode::Independent);
    }

    #[test]
    fn bad_values_are_configuration_errors() {
        let cases = [
            "[space]\nk_a = 1\n",
            "[space]\nwatched = [\"44\"]\n",
            "[space]\nwatched = [\"x\"]\n",
            "[integrator]\ndt = 0.0\n",
            "[integrator]\nsample_interval = 1.1e-12\n",
            "[system]\nkappa_a = -1.0\n",
            "[sweep]\npoints = 0\n",
            "[sweep]\ns_max = 2.0\n",
            "[sweep]\nseq_len = 20\nmax_delay = 5\n",
            "[encoding]\nreadout_time = 1.0\n",
            "[output]\nprefix = \"../x\"\n",
            "[[case]]\nname = \"a b\"\n",
            "[[case]]\nname = \"a\"\n[[case]]\nname = \"a\"\n",
            "[verify]\noracle_tol = 0.0\n",
            "seed = -1\n",
            "[system]\nf_a = \"ten\"\n",
        ];
        for text in cases {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert!(err.is_configuration(), "{text:?} gave {err}");
        }
    }

    #[test]
    fn resolved_toml_round_trips() {
        let text = "seed = 9\n[[case]]\nname = \"x\"\ng = 30e6\n";
        let c = ExperimentConfig::parse(text).unwrap();
        let again = ExperimentConfig::parse(&c.file.to_toml()).unwrap();
        assert_eq!(c, again);
    }
}
