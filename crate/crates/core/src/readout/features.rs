use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{BasisLabel, DensityMatrix, ModeSpace};
use crate::lindblad::{from_flat, occupation_probabilities, to_flat, whole_multiple, Diagnostics, Engine, IntegratorConfig, SystemSpec};

use super::encoding::{encode_input, EncodingSpec};

pub const BIAS_COLUMN: &str = "bias";

/// One row per input sample, one column per measured neuron, plus a
/// trailing constant bias column.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    matrix: DMatrix<f64>,
    columns: Vec<String>,
}

impl FeatureMatrix {
    /// Appends the bias column to `raw`.
    pub fn from_raw(raw: &DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if names.len() != raw.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{} column names for {} columns",
                names.len(),
                raw.ncols()
            )));
        }
        let matrix = raw.clone().insert_column(raw.ncols(), 1.0);
        let mut columns = names;
        columns.push(BIAS_COLUMN.to_string());
        Ok(Self { matrix, columns })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn num_samples(&self) -> usize {
        self.matrix.nrows()
    }

    /// Neuron values without the bias column.
    pub fn neurons(&self) -> DMatrix<f64> {
        self.matrix.columns(0, self.matrix.ncols() - 1).into_owned()
    }

    pub fn neuron_column(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j).iter().copied().collect()
    }

    /// Rows `start..start + len`.
    pub fn rows(&self, start: usize, len: usize) -> DMatrix<f64> {
        self.matrix.rows(start, len).into_owned()
    }
}

pub(crate) fn feature_names(watched: &[BasisLabel], samples: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(watched.len() * samples);
    for j in 1..=samples {
        for l in watched {
            if samples == 1 {
                names.push(l.column_name());
            } else {
                names.push(format!("{}_t{j}", l.column_name()));
            }
        }
    }
    names
}

/// Drives `flat` for one segment, checking invariants every
/// `cfg.sample_interval` and reading the watched occupations at each read
/// time. `t0` only labels errors.
pub(crate) fn run_segment(
    engine: &mut Engine,
    flat: &mut [num_complex::Complex64],
    t0: f64,
    enc: &EncodingSpec,
    cfg: &IntegratorConfig,
    watched: &[BasisLabel],
) -> Result<Vec<f64>> {
    let total = enc.segment_steps(cfg)?;
    let check = whole_multiple(cfg.sample_interval, cfg.dt, "sample_interval")?;
    let reads = enc.read_steps(cfg)?;
    let mut marks: Vec<usize> = (1..=total / check).map(|k| k * check).collect();
    marks.extend(&reads);
    marks.push(total);
    marks.sort_unstable();
    marks.dedup();

    let space = engine.space().clone();
    let d = space.total_dim();
    let mut row = Vec::with_capacity(reads.len() * watched.len());
    let mut at = 0;
    for &m in &marks {
        let defect = engine.advance(flat, m - at, marks.len());
        at = m;
        let rho = DensityMatrix::new(space.clone(), from_flat(flat, d))?;
        engine.check(&rho, t0 + m as f64 * cfg.dt, defect)?;
        if reads.binary_search(&m).is_ok() {
            row.extend(occupation_probabilities(&rho, watched)?);
        }
    }
    Ok(row)
}

fn features_for_input(
    s: f64,
    enc: &EncodingSpec,
    system: &SystemSpec,
    space: &ModeSpace,
    cfg: &IntegratorConfig,
    watched: &[BasisLabel],
) -> Result<(Vec<f64>, Diagnostics)> {
    let (eps_a, eps_b) = encode_input(s, enc)?;
    let mut engine = Engine::new(&system.with_drives(eps_a, eps_b), space, cfg)?;
    let mut flat = to_flat(DensityMatrix::vacuum(space).matrix());
    let row = run_segment(&mut engine, &mut flat, 0.0, enc, cfg, watched)?;
    Ok((row, engine.diagnostics))
}

/// Like [`collect_features`], also returning the merged invariant checks.
pub fn collect_features_with_diagnostics(
    inputs: &[f64],
    enc: &EncodingSpec,
    system: &SystemSpec,
    space: &ModeSpace,
    cfg: &IntegratorConfig,
    watched: &[BasisLabel],
) -> Result<(FeatureMatrix, Diagnostics)> {
    enc.validate()?;
    cfg.validate()?;
    system.validate()?;
    for l in watched {
        space.index_of(&l.occupations())?;
    }
    for &s in inputs {
        encode_input(s, enc)?;
    }
    let rows: Vec<(Vec<f64>, Diagnostics)> = inputs
        .par_iter()
        .map(|&s| features_for_input(s, enc, system, space, cfg, watched))
        .collect::<Result<_>>()?;

    let width = watched.len() * enc.feature_samples;
    let mut raw = DMatrix::zeros(inputs.len(), width);
    let mut diagnostics = Diagnostics::default();
    for (i, (row, diag)) in rows.iter().enumerate() {
        raw.row_mut(i).copy_from_slice(row);
        diagnostics.merge(diag);
    }
    let f = FeatureMatrix::from_raw(&raw, feature_names(watched, enc.feature_samples))?;
    Ok((f, diagnostics))
}

/// Propagates each input from vacuum with its encoded drive for one segment
/// and records the watched occupations at the read times. Inputs are
/// independent and evaluated on the current rayon pool; rows keep input
/// order.
pub fn collect_features(
    inputs: &[f64],
    enc: &EncodingSpec,
    system: &SystemSpec,
    space: &ModeSpace,
    cfg: &IntegratorConfig,
    watched: &[BasisLabel],
) -> Result<FeatureMatrix> {
    collect_features_with_diagnostics(inputs, enc, system, space, cfg, watched).map(|(f, _)| f)
}
