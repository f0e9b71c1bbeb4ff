//! Dense operator algebra on truncated multi-mode Fock spaces.
//!
//! Basis states are ordered row-major in the mode index: for two modes with
//! truncations `[k_a, k_b]` the state `|n_a n_b>` sits at `n_a * k_b + n_b`.
//! Every CSV column and every watched-state label relies on this ordering.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Maximum element-wise `|rho - rho^dagger|` accepted for a density matrix.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Maximum `|Tr rho - 1|` accepted for a density matrix.
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Truncation levels of each mode and the resulting tensor-product dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeSpace {
    dims: Vec<usize>,
    total_dim: usize,
}

impl ModeSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidParameter("a mode space needs at least one mode".into()));
        }
        if let Some(&k) = dims.iter().find(|&&k| k < 2) {
            return Err(Error::InvalidTruncation(k));
        }
        let total_dim = dims
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .ok_or_else(|| Error::InvalidParameter("mode space dimension overflows".into()))?;
        Ok(Self { dims, total_dim })
    }

    pub fn single(k: usize) -> Result<Self> {
        Self::new(vec![k])
    }

    pub fn two_mode(k_a: usize, k_b: usize) -> Result<Self> {
        Self::new(vec![k_a, k_b])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn num_modes(&self) -> usize {
        self.dims.len()
    }

    /// Row-major basis index of the given per-mode occupations.
    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                found: occupations.len(),
            });
        }
        let mut index = 0;
        for (mode, (&n, &k)) in occupations.iter().zip(&self.dims).enumerate() {
            if n >= k {
                return Err(Error::OccupationOutOfRange {
                    mode,
                    occupation: n,
                    truncation: k,
                });
            }
            index = index * k + n;
        }
        Ok(index)
    }

    /// Inverse of [`ModeSpace::index_of`].
    pub fn occupations_of(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for (slot, &k) in occ.iter_mut().zip(&self.dims).rev() {
            *slot = index % k;
            index /= k;
        }
        occ
    }

    /// Basis indices whose occupation of `mode` is the highest kept level.
    pub fn top_level_indices(&self, mode: usize) -> impl Iterator<Item = usize> + '_ {
        let top = self.dims[mode] - 1;
        (0..self.total_dim).filter(move |&i| self.occupations_of(i)[mode] == top)
    }
}

/// Two-mode basis label `|n_a n_b>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub n_a: usize,
    pub n_b: usize,
}

impl BasisLabel {
    pub const fn new(n_a: usize, n_b: usize) -> Self {
        Self { n_a, n_b }
    }

    pub fn occupations(&self) -> [usize; 2] {
        [self.n_a, self.n_b]
    }

    /// CSV column name, `p01` style, with an underscore once either count
    /// needs more than one digit.
    pub fn column_name(&self) -> String {
        if self.n_a < 10 && self.n_b < 10 {
            format!("p{}{}", self.n_a, self.n_b)
        } else {
            format!("p{}_{}", self.n_a, self.n_b)
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n_a < 10 && self.n_b < 10 {
            write!(f, "|{}{}>", self.n_a, self.n_b)
        } else {
            write!(f, "|{},{}>", self.n_a, self.n_b)
        }
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    /// Accepts `|01>`, `01`, `|1,2>`, `1,2` and `p01`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed basis label {s:?}"));
        let mut body = s.trim();
        if let Some(rest) = body.strip_prefix('|') {
            body = rest.strip_suffix('>').or_else(|| rest.strip_suffix('⟩')).ok_or_else(bad)?;
        } else if let Some(rest) = body.strip_prefix('p') {
            body = rest;
        }
        let body = body.trim();
        let (a, b) = match body.split_once([',', '_']) {
            Some((a, b)) => (a.trim(), b.trim()),
            None => {
                let mut chars = body.chars();
                match (chars.next(), chars.next(), chars.next()) {
                    (Some(a), Some(b), None) if a.is_ascii_digit() && b.is_ascii_digit() => {
                        (&body[..1], &body[1..])
                    }
                    _ => return Err(bad()),
                }
            }
        };
        let parse = |t: &str| {
            if t.is_empty() || !t.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            t.parse::<usize>().map_err(|_| bad())
        };
        Ok(Self::new(parse(a)?, parse(b)?))
    }
}

/// The eight states `|01>` ... `|22>` (all `n_a, n_b <= 2` except vacuum).
pub fn default_watched_states() -> Vec<BasisLabel> {
    [(0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (1, 2), (2, 1), (2, 2)]
        .into_iter()
        .map(|(a, b)| BasisLabel::new(a, b))
        .collect()
}

/// Dense complex matrix acting on a [`ModeSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: ModeSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: ModeSpace, matrix: CMatrix) -> Result<Self> {
        check_square(&space, &matrix)?;
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &ModeSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(space: &ModeSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * factor,
        }
    }

    /// Operator product `self * rhs`, checked.
    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        same_space(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn checked_add(&self, rhs: &Operator) -> Result<Operator> {
        same_space(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        })
    }

    /// Largest element-wise `|A - A^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }
}

// The std operator impls panic on mismatched spaces; use the checked methods
// when operands come from different sources.
impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.checked_add(rhs).expect("operator spaces differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        same_space(&self.space, &rhs.space).expect("operator spaces differ");
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.compose(rhs).expect("operator spaces differ")
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

/// Single-mode lowering operator truncated to `k` levels.
pub fn annihilation(k: usize) -> Result<Operator> {
    let space = ModeSpace::single(k)?;
    let mut m = CMatrix::zeros(k, k);
    for n in 0..k - 1 {
        m[(n, n + 1)] = C64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    Ok(Operator { space, matrix: m })
}

pub fn creation(k: usize) -> Result<Operator> {
    Ok(annihilation(k)?.adjoint())
}

/// Single-mode number operator `a^dagger a`.
pub fn number(k: usize) -> Result<Operator> {
    let space = ModeSpace::single(k)?;
    let diag = nalgebra::DVector::from_fn(k, |n, _| C64::new(n as f64, 0.0));
    Ok(Operator {
        space,
        matrix: CMatrix::from_diagonal(&diag),
    })
}

/// Lifts a single-mode operator onto `space`, acting as the identity on
/// every other mode.
pub fn embed(op: &Operator, mode_index: usize, space: &ModeSpace) -> Result<Operator> {
    if mode_index >= space.num_modes() {
        return Err(Error::ModeIndex {
            index: mode_index,
            modes: space.num_modes(),
        });
    }
    let k = space.dims()[mode_index];
    if op.dim() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: op.dim(),
        });
    }
    let left: usize = space.dims()[..mode_index].iter().product();
    let right: usize = space.dims()[mode_index + 1..].iter().product();
    let matrix = CMatrix::identity(left, left)
        .kronecker(&op.matrix)
        .kronecker(&CMatrix::identity(right, right));
    Ok(Operator {
        space: space.clone(),
        matrix,
    })
}

/// Mode-`mode_index` annihilation operator on the full space.
pub fn mode_annihilation(space: &ModeSpace, mode_index: usize) -> Result<Operator> {
    let k = *space.dims().get(mode_index).ok_or(Error::ModeIndex {
        index: mode_index,
        modes: space.num_modes(),
    })?;
    embed(&annihilation(k)?, mode_index, space)
}

pub fn mode_number(space: &ModeSpace, mode_index: usize) -> Result<Operator> {
    let k = *space.dims().get(mode_index).ok_or(Error::ModeIndex {
        index: mode_index,
        modes: space.num_modes(),
    })?;
    embed(&number(k)?, mode_index, space)
}

/// `Tr(op rho)`.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<C64> {
    same_space(&op.space, &rho.space)?;
    let d = op.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += op.matrix[(i, j)] * rho.matrix[(j, i)];
        }
    }
    Ok(acc)
}

/// Rank-one projector onto the basis state with the given occupations.
pub fn basis_projector(occupations: &[usize], space: &ModeSpace) -> Result<Operator> {
    let idx = space.index_of(occupations)?;
    let d = space.total_dim();
    let mut m = CMatrix::zeros(d, d);
    m[(idx, idx)] = C64::new(1.0, 0.0);
    Ok(Operator {
        space: space.clone(),
        matrix: m,
    })
}

/// State of the coupled system. Construction only checks the shape; use
/// [`validate_state`] to test the physical invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: ModeSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: ModeSpace, matrix: CMatrix) -> Result<Self> {
        check_square(&space, &matrix)?;
        Ok(Self { space, matrix })
    }

    /// Pure basis state `|n...><n...|`.
    pub fn basis_state(space: &ModeSpace, occupations: &[usize]) -> Result<Self> {
        let p = basis_projector(occupations, space)?;
        Ok(Self {
            space: p.space,
            matrix: p.matrix,
        })
    }

    pub fn vacuum(space: &ModeSpace) -> Self {
        let d = space.total_dim();
        let mut m = CMatrix::zeros(d, d);
        m[(0, 0)] = C64::new(1.0, 0.0);
        Self {
            space: space.clone(),
            matrix: m,
        }
    }

    /// `I / d`.
    pub fn maximally_mixed(space: &ModeSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        }
    }

    /// Convex mixture of basis states; weights must be non-negative.
    pub fn mixture(space: &ModeSpace, terms: &[(f64, &[usize])]) -> Result<Self> {
        let d = space.total_dim();
        let mut m = CMatrix::zeros(d, d);
        for &(w, occ) in terms {
            if w < 0.0 {
                return Err(Error::InvalidParameter("negative mixture weight".into()));
            }
            let i = space.index_of(occ)?;
            m[(i, i)] += C64::new(w, 0.0);
        }
        Ok(Self {
            space: space.clone(),
            matrix: m,
        })
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // Tr(rho rho) = sum_ij rho_ij rho_ji
        let d = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc.re
    }

    /// Replaces `rho` with `(rho + rho^dagger) / 2`.
    pub fn hermitize(&mut self) {
        hermitize_in_place(&mut self.matrix);
    }

    /// Population of basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    /// Total population on the top kept level of each mode.
    pub fn top_level_populations(&self) -> Vec<f64> {
        (0..self.space.num_modes())
            .map(|m| self.space.top_level_indices(m).map(|i| self.population(i)).sum())
            .collect()
    }
}

/// Diagnostic report on the density-matrix invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateReport {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
}

impl StateReport {
    pub fn hermitian_ok(&self) -> bool {
        self.hermiticity_defect <= HERMITICITY_TOL
    }

    pub fn trace_ok(&self) -> bool {
        self.trace_defect <= TRACE_TOL
    }

    pub fn positivity_ok(&self) -> bool {
        self.min_eigenvalue >= -POSITIVITY_TOL
    }

    pub fn is_valid(&self) -> bool {
        self.hermitian_ok() && self.trace_ok() && self.positivity_ok()
    }
}

impl fmt::Display for StateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hermiticity defect {:.3e}, trace defect {:.3e}, min eigenvalue {:.3e}",
            self.hermiticity_defect, self.trace_defect, self.min_eigenvalue
        )
    }
}

/// Measures Hermiticity, trace and positivity defects. Never fails; a
/// non-finite matrix reports infinite defects.
pub fn validate_state(rho: &DensityMatrix) -> StateReport {
    let m = &rho.matrix;
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return StateReport {
            hermiticity_defect: f64::INFINITY,
            trace_defect: f64::INFINITY,
            min_eigenvalue: f64::NEG_INFINITY,
        };
    }
    let hermiticity_defect = hermiticity_defect(m);
    let trace_defect = (m.trace() - C64::new(1.0, 0.0)).norm();
    // Eigenvalues of the Hermitian part; the anti-Hermitian part is
    // reported separately above.
    let mut h = m.clone();
    hermitize_in_place(&mut h);
    let min_eigenvalue = h
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    StateReport {
        hermiticity_defect,
        trace_defect,
        min_eigenvalue,
    }
}

pub(crate) fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn hermitize_in_place(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in i + 1..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

fn check_square(space: &ModeSpace, m: &CMatrix) -> Result<()> {
    let d = space.total_dim();
    if m.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.nrows(),
        });
    }
    if m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn same_space(a: &ModeSpace, b: &ModeSpace) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.total_dim(),
            found: b.total_dim(),
        });
    }
    Ok(())
}
