//! Short-term memory benchmark: a seeded random input sequence drives the
//! reservoir segment by segment without resets, and linear readouts try to
//! recover delayed inputs from the present state.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{BasisLabel, DensityMatrix, ModeSpace};
use crate::lindblad::{to_flat, Diagnostics, Engine, IntegratorConfig, SystemSpec};

use super::encoding::{encode_input, EncodingSpec};
use super::features::{feature_names, run_segment, FeatureMatrix};
use super::linear::{predict, train_readout, DEFAULT_REL_TOL};

/// Fraction of the usable sequence, taken from the start, used for training.
pub const TRAIN_FRACTION: f64 = 0.7;

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryCapacity {
    /// Squared test-set correlation for delays `0..=max_delay`.
    pub per_delay: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl MemoryCapacity {
    /// Sum over delays `d >= 1`.
    pub fn delayed_sum(&self) -> f64 {
        self.per_delay.iter().skip(1).sum()
    }
}

/// Squared Pearson correlation; zero when `pred` is constant.
pub fn squared_correlation(pred: &[f64], target: &[f64]) -> f64 {
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mt = target.iter().sum::<f64>() / n;
    let (mut spp, mut stt, mut spt) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(target) {
        spp += (p - mp) * (p - mp);
        stt += (t - mt) * (t - mt);
        spt += (p - mp) * (t - mt);
    }
    if spp == 0.0 || stt == 0.0 {
        return 0.0;
    }
    (spt * spt / (spp * stt)).clamp(0.0, 1.0)
}

fn is_constant(xs: impl Iterator<Item = f64> + Clone) -> bool {
    let mut it = xs.clone();
    match it.next() {
        Some(first) => xs.into_iter().all(|x| x == first),
        None => true,
    }
}

/// Features at the end of every segment of the driven sequence `inputs`.
pub fn drive_sequence(
    system: &SystemSpec,
    space: &ModeSpace,
    enc: &EncodingSpec,
    cfg: &IntegratorConfig,
    watched: &[BasisLabel],
    inputs: &[f64],
) -> Result<(FeatureMatrix, Diagnostics)> {
    enc.validate()?;
    cfg.validate()?;
    system.validate()?;
    let mut raw = DMatrix::zeros(inputs.len(), watched.len() * enc.feature_samples);
    let mut flat = to_flat(DensityMatrix::vacuum(space).matrix());
    let mut engine: Option<Engine> = None;
    for (t, &u) in inputs.iter().enumerate() {
        let (eps_a, eps_b) = encode_input(u, enc)?;
        let driven = system.with_drives(eps_a, eps_b);
        match engine.as_mut() {
            Some(e) => e.redrive(&driven, cfg)?,
            None => engine = Some(Engine::new(&driven, space, cfg)?),
        }
        let e = engine.as_mut().expect("engine was just set");
        let row = run_segment(e, &mut flat, t as f64 * enc.duration, enc, cfg, watched)?;
        raw.row_mut(t).copy_from_slice(&row);
    }
    let diagnostics = engine.map(|e| e.diagnostics).unwrap_or_default();
    Ok((FeatureMatrix::from_raw(&raw, feature_names(watched, enc.feature_samples))?, diagnostics))
}

/// The seeded input sequence used by [`memory_capacity`].
pub fn input_sequence(seq_len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..seq_len).map(|_| rng.random::<f64>()).collect()
}

/// Capacity to recall `u_{t-d}` for `d = 0..=max_delay`.
///
/// The first `max_delay` segments are discarded as washout; the remainder
/// is split by time, the earlier [`TRAIN_FRACTION`] for training and the
/// rest for scoring.
#[allow(clippy::too_many_arguments)]
pub fn memory_capacity(
    system: &SystemSpec,
    space: &ModeSpace,
    enc: &EncodingSpec,
    cfg: &IntegratorConfig,
    watched: &[BasisLabel],
    seq_len: usize,
    max_delay: usize,
    seed: u64,
) -> Result<MemoryCapacity> {
    if max_delay == 0 && seq_len < 10 || seq_len < 10 * max_delay {
        return Err(Error::InvalidParameter(format!(
            "seq_len {seq_len} must be at least 10 * max_delay ({}) and at least 10",
            10 * max_delay
        )));
    }
    let inputs = input_sequence(seq_len, seed);
    let (features, diagnostics) = drive_sequence(system, space, enc, cfg, watched, &inputs)?;

    let usable = seq_len - max_delay;
    let n_train = (usable as f64 * TRAIN_FRACTION).floor() as usize;
    let n_test = usable - n_train;
    if n_train < 2 || n_test < 2 {
        return Err(Error::InvalidParameter("sequence too short to split".into()));
    }
    let f_all = features.rows(max_delay, usable);
    let neurons = f_all.ncols() - 1;
    if (0..neurons).all(|j| is_constant(f_all.column(j).iter().copied())) {
        return Err(Error::Degenerate("all reservoir features are constant".into()));
    }
    let f_train = f_all.rows(0, n_train).into_owned();
    let f_test = f_all.rows(n_train, n_test).into_owned();

    let mut per_delay = Vec::with_capacity(max_delay + 1);
    for d in 0..=max_delay {
        let target: Vec<f64> = (max_delay..seq_len).map(|t| inputs[t - d]).collect();
        let (y_train, y_test) = target.split_at(n_train);
        if is_constant(y_train.iter().copied()) || is_constant(y_test.iter().copied()) {
            return Err(Error::Degenerate(format!("target for delay {d} is constant")));
        }
        let w = train_readout(&f_train, &DMatrix::from_column_slice(n_train, 1, y_train), DEFAULT_REL_TOL, 0.0)?;
        let pred = predict(&w, &f_test)?;
        per_delay.push(squared_correlation(pred.as_slice(), y_test));
    }
    Ok(MemoryCapacity { per_delay, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::default_watched_states;
    use crate::lindblad::CollapseMode;

    fn setup(kappa: f64, eps: f64, k: usize) -> (SystemSpec, ModeSpace, EncodingSpec, IntegratorConfig) {
        let system = SystemSpec::from_hz(10e9, 9.5e9, 700e6, kappa, kappa, 0.0, 0.0, CollapseMode::Independent);
        let enc = EncodingSpec {
            eps_a_max: eps,
            eps_b_max: eps,
            duration: 20e-9,
            readout_time: 20e-9,
            feature_samples: 1,
        };
        let cfg = IntegratorConfig { t_end: 20e-9, sample_interval: 20e-9, ..IntegratorConfig::default() };
        (system, ModeSpace::two_mode(k, k).unwrap(), enc, cfg)
    }

    #[test]
    fn correlation_oracle() {
        assert!((squared_correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((squared_correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(squared_correlation(&[1.0, 1.0, 1.0], &[3.0, 2.0, 1.0]), 0.0);
        let r2 = squared_correlation(&[0.0, 1.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 1.0]);
        assert!(r2.abs() < 1e-15);
    }

    #[test]
    fn sequence_is_seeded() {
        assert_eq!(input_sequence(20, 5), input_sequence(20, 5));
        assert_ne!(input_sequence(20, 5), input_sequence(20, 6));
        assert!(input_sequence(100, 1).iter().all(|u| (0.0..1.0).contains(u)));
    }

    #[test]
    fn zero_drive_is_degenerate() {
        let (system, space, enc, cfg) = setup(20e6, 0.0, 3);
        let err = memory_capacity(&system, &space, &enc, &cfg, &default_watched_states(), 40, 2, 1).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn rejects_short_sequences() {
        let (system, space, enc, cfg) = setup(20e6, 1e5, 3);
        assert!(memory_capacity(&system, &space, &enc, &cfg, &default_watched_states(), 30, 5, 1).is_err());
    }

    #[test]
    fn present_input_is_recoverable_and_deterministic() {
        let (system, space, enc, cfg) = setup(20e6, 1e5, 3);
        let watched = default_watched_states();
        let a = memory_capacity(&system, &space, &enc, &cfg, &watched, 120, 3, 9).unwrap();
        let b = memory_capacity(&system, &space, &enc, &cfg, &watched, 120, 3, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_delay.len(), 4);
        assert!(a.per_delay[0] > 0.5, "{:?}", a.per_delay);
        assert!(a.per_delay.iter().all(|c| (0.0..=1.0).contains(c)));
    }

    #[test]
    fn heavy_dissipation_forgets() {
        let (system, space, enc, cfg) = setup(1e9, 3e4, 3);
        let c = memory_capacity(&system, &space, &enc, &cfg, &default_watched_states(), 120, 3, 9).unwrap();
        assert!(c.per_delay[3] < 0.1, "{:?}", c.per_delay);
    }
}
