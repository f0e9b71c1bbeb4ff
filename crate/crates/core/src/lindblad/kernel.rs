//! Compiled Lindblad generator and the two RK4 execution paths.
//!
//! States are flat row-major `d * d` buffers. The generator is stored as
//! `H_eff = H - i/2 sum C^+C` plus the collapse operators, all in CSR form,
//! so that one right-hand-side evaluation costs `O(nnz * d)`.
//!
//! For a time-invariant generator `n` RK4 steps are the `n`-th power of the
//! one-step map `p(hL) = I + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24`. The
//! `Power` path materialises that map as a `d^2 x d^2` matrix and raises it
//! by repeated squaring, which wins for small `d` and long intervals.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::fock::{CMatrix, Operator, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Largest state dimension for which the power path is considered.
const POWER_MAX_DIM: usize = 40;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepping {
    /// Pick the cheaper path from a flop estimate.
    #[default]
    Auto,
    /// Explicit RK4 steps, re-Hermitized after every step.
    Step,
    /// Powers of the one-step RK4 map, re-Hermitized after every interval.
    Power,
}

#[derive(Clone, Debug)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_dense(m: &CMatrix) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = self * x` for row-major `d x d` buffers.
    fn mul_into(&self, x: &[C64], out: &mut [C64], d: usize) {
        out.fill(C64::new(0.0, 0.0));
        for i in 0..d {
            let row = &mut out[i * d..(i + 1) * d];
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.vals[idx];
                let src = &x[self.cols[idx] * d..(self.cols[idx] + 1) * d];
                for (o, s) in row.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
    }
}

fn adjoint_into(x: &[C64], out: &mut [C64], d: usize) {
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = x[i * d + j].conj();
        }
    }
}

pub(crate) fn hermitize_flat(x: &mut [C64], d: usize) {
    for i in 0..d {
        x[i * d + i].im = 0.0;
        for j in i + 1..d {
            let avg = (x[i * d + j] + x[j * d + i].conj()) * 0.5;
            x[i * d + j] = avg;
            x[j * d + i] = avg.conj();
        }
    }
}

pub(crate) fn hermiticity_defect_flat(x: &[C64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((x[i * d + j] - x[j * d + i].conj()).norm());
        }
    }
    worst
}

pub(crate) fn to_flat(m: &CMatrix) -> Vec<C64> {
    let d = m.nrows();
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = m[(i, j)];
        }
    }
    out
}

pub(crate) fn from_flat(x: &[C64], d: usize) -> CMatrix {
    CMatrix::from_row_slice(d, d, x)
}

/// Lindblad generator compiled for repeated application.
#[derive(Clone, Debug)]
pub(crate) struct Generator {
    d: usize,
    heff: Csr,
    collapses: Vec<Csr>,
}

struct Scratch {
    x: Vec<C64>,
    y: Vec<C64>,
    w: Vec<C64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); d * d];
        Self {
            x: z.clone(),
            y: z.clone(),
            w: z,
        }
    }
}

impl Generator {
    pub fn new(h: &Operator, collapses: &[Operator]) -> Self {
        let d = h.dim();
        let mut heff = h.matrix().clone();
        for c in collapses {
            let cdc = c.matrix().adjoint() * c.matrix();
            heff -= cdc * (I * 0.5);
        }
        Self {
            d,
            heff: Csr::from_dense(&heff),
            collapses: collapses.iter().map(|c| Csr::from_dense(c.matrix())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `out = L(rho)`. With `hermitian` set the input must be Hermitian,
    /// which lets `rho H_eff^+` be read off `(H_eff rho)^+`.
    fn apply(&self, rho: &[C64], out: &mut [C64], s: &mut Scratch, hermitian: bool) {
        let d = self.d;
        self.heff.mul_into(rho, &mut s.x, d);
        if hermitian {
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] = -I * s.x[i * d + j] + I * s.x[j * d + i].conj();
                }
            }
        } else {
            // rho H_eff^+ = (H_eff rho^+)^+
            adjoint_into(rho, &mut s.w, d);
            self.heff.mul_into(&s.w, &mut s.y, d);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] = -I * s.x[i * d + j] + I * s.y[j * d + i].conj();
                }
            }
        }
        for c in &self.collapses {
            // C rho C^+ = (C (C rho)^+)^+
            c.mul_into(rho, &mut s.x, d);
            adjoint_into(&s.x, &mut s.w, d);
            c.mul_into(&s.w, &mut s.y, d);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += s.y[j * d + i].conj();
                }
            }
        }
    }

    /// Complex multiply-adds for one right-hand side.
    fn rhs_cost(&self, hermitian: bool) -> f64 {
        let d = self.d as f64;
        let h = self.heff.nnz() as f64 * d * if hermitian { 1.0 } else { 2.0 };
        let c: f64 = self.collapses.iter().map(|c| 2.0 * c.nnz() as f64 * d).sum();
        h + c + (2 + self.collapses.len()) as f64 * d * d
    }
}

/// Fixed-step RK4 stepper.
struct Rk4 {
    k: Vec<C64>,
    acc: Vec<C64>,
    stage: Vec<C64>,
    scratch: Scratch,
}

impl Rk4 {
    fn new(d: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); d * d];
        Self {
            k: z.clone(),
            acc: z.clone(),
            stage: z,
            scratch: Scratch::new(d),
        }
    }

    fn step(&mut self, gen: &Generator, rho: &mut [C64], h: f64, hermitian: bool) {
        let half = h * 0.5;
        gen.apply(rho, &mut self.k, &mut self.scratch, hermitian);
        for ((a, s), (k, r)) in self.acc.iter_mut().zip(self.stage.iter_mut()).zip(self.k.iter().zip(rho.iter())) {
            *a = *k;
            *s = r + k * half;
        }
        gen.apply(&self.stage, &mut self.k, &mut self.scratch, hermitian);
        for ((a, s), (k, r)) in self.acc.iter_mut().zip(self.stage.iter_mut()).zip(self.k.iter().zip(rho.iter())) {
            *a += k * 2.0;
            *s = r + k * half;
        }
        gen.apply(&self.stage, &mut self.k, &mut self.scratch, hermitian);
        for ((a, s), (k, r)) in self.acc.iter_mut().zip(self.stage.iter_mut()).zip(self.k.iter().zip(rho.iter())) {
            *a += k * 2.0;
            *s = r + k * h;
        }
        gen.apply(&self.stage, &mut self.k, &mut self.scratch, hermitian);
        let sixth = h / 6.0;
        for ((r, a), k) in rho.iter_mut().zip(&self.acc).zip(&self.k) {
            *r += (a + k) * sixth;
        }
    }
}

/// Dense square matrix with split real and imaginary planes, row-major.
#[derive(Clone, Debug)]
struct SplitMatrix {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SplitMatrix {
    fn mul(&self, rhs: &SplitMatrix) -> SplitMatrix {
        let n = self.n;
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        for i in 0..n {
            let (cr, ci) = (&mut re[i * n..(i + 1) * n], &mut im[i * n..(i + 1) * n]);
            for k in 0..n {
                let (ar, ai) = (self.re[i * n + k], self.im[i * n + k]);
                if ar == 0.0 && ai == 0.0 {
                    continue;
                }
                let (br, bi) = (&rhs.re[k * n..(k + 1) * n], &rhs.im[k * n..(k + 1) * n]);
                for j in 0..n {
                    cr[j] += ar * br[j] - ai * bi[j];
                    ci[j] += ar * bi[j] + ai * br[j];
                }
            }
        }
        SplitMatrix { n, re, im }
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let (row_re, row_im) = (&self.re[i * n..(i + 1) * n], &self.im[i * n..(i + 1) * n]);
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for ((mr, mi), v) in row_re.iter().zip(row_im).zip(x) {
                acc_re += mr * v.re - mi * v.im;
                acc_im += mr * v.im + mi * v.re;
            }
            out[i] = C64::new(acc_re, acc_im);
        }
    }
}

/// Evolves flat states under a fixed generator with fixed-step RK4.
pub(crate) struct Evolver {
    gen: Generator,
    dt: f64,
    stepping: Stepping,
    rk4: Rk4,
    one_step: Option<SplitMatrix>,
    powers: HashMap<usize, SplitMatrix>,
    buf: Vec<C64>,
}

impl Evolver {
    pub fn new(gen: Generator, dt: f64, stepping: Stepping) -> Self {
        let d = gen.dim();
        let stepping = if d > POWER_MAX_DIM && stepping == Stepping::Auto {
            Stepping::Step
        } else {
            stepping
        };
        Self {
            rk4: Rk4::new(d),
            buf: vec![C64::new(0.0, 0.0); d * d],
            gen,
            dt,
            stepping,
            one_step: None,
            powers: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.gen.dim()
    }

    /// Path that [`Evolver::advance`] will take for `steps` steps repeated
    /// about `repetitions` times.
    pub fn plan(&self, steps: usize, repetitions: usize) -> Stepping {
        match self.stepping {
            Stepping::Auto => {}
            fixed => return fixed,
        }
        if steps == 0 || self.powers.contains_key(&steps) {
            return Stepping::Power;
        }
        let d = self.gen.dim() as f64;
        let big = d * d;
        let step_cost = 4.0 * self.gen.rhs_cost(true) + 8.0 * big;
        let stepping = repetitions as f64 * steps as f64 * step_cost;
        let build = if self.one_step.is_some() {
            0.0
        } else {
            big * (4.0 * self.gen.rhs_cost(false) + 8.0 * big)
        };
        let mults = (usize::BITS - steps.leading_zeros() - 1 + steps.count_ones() - 1) as f64;
        // split-plane products vectorise; count them at a third of a CSR MAC
        let power = build + mults * big * big * big / 3.0 + repetitions as f64 * big * big;
        if power < stepping {
            Stepping::Power
        } else {
            Stepping::Step
        }
    }

    /// Advances `rho` by `steps` RK4 steps and re-Hermitizes it. Returns the
    /// Hermiticity defect measured just before the final re-Hermitization.
    pub fn advance(&mut self, rho: &mut [C64], steps: usize, repetitions: usize) -> f64 {
        if steps == 0 {
            let defect = hermiticity_defect_flat(rho, self.dim());
            hermitize_flat(rho, self.dim());
            return defect;
        }
        match self.plan(steps, repetitions) {
            Stepping::Power => self.advance_power(rho, steps),
            _ => self.advance_steps(rho, steps),
        }
    }

    fn advance_steps(&mut self, rho: &mut [C64], steps: usize) -> f64 {
        let d = self.dim();
        for _ in 0..steps - 1 {
            self.rk4.step(&self.gen, rho, self.dt, true);
            hermitize_flat(rho, d);
        }
        self.rk4.step(&self.gen, rho, self.dt, true);
        let defect = hermiticity_defect_flat(rho, d);
        hermitize_flat(rho, d);
        defect
    }

    fn advance_power(&mut self, rho: &mut [C64], steps: usize) -> f64 {
        let d = self.dim();
        if !self.powers.contains_key(&steps) {
            let one = self.one_step_map().clone();
            let p = power(&one, steps);
            self.powers.insert(steps, p);
        }
        let p = &self.powers[&steps];
        p.apply(rho, &mut self.buf);
        rho.copy_from_slice(&self.buf);
        let defect = hermiticity_defect_flat(rho, d);
        hermitize_flat(rho, d);
        defect
    }

    fn one_step_map(&mut self) -> &SplitMatrix {
        if self.one_step.is_none() {
            let d = self.dim();
            let n = d * d;
            let mut re = vec![0.0; n * n];
            let mut im = vec![0.0; n * n];
            let mut basis = vec![C64::new(0.0, 0.0); n];
            for col in 0..n {
                basis.fill(C64::new(0.0, 0.0));
                basis[col] = C64::new(1.0, 0.0);
                self.rk4.step(&self.gen, &mut basis, self.dt, false);
                for (row, v) in basis.iter().enumerate() {
                    re[row * n + col] = v.re;
                    im[row * n + col] = v.im;
                }
            }
            self.one_step = Some(SplitMatrix { n, re, im });
        }
        self.one_step.as_ref().unwrap()
    }
}

fn power(base: &SplitMatrix, mut exp: usize) -> SplitMatrix {
    let mut result: Option<SplitMatrix> = None;
    let mut square = base.clone();
    loop {
        if exp & 1 == 1 {
            result = Some(match result {
                None => square.clone(),
                Some(r) => r.mul(&square),
            });
        }
        exp >>= 1;
        if exp == 0 {
            break;
        }
        square = square.mul(&square);
    }
    result.expect("power called with a positive exponent")
}
