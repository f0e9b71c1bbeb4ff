//! Physical parameters of the two-oscillator system and the operators built
//! from them. All rates here are angular (rad/s) with hbar = 1.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{mode_annihilation, ModeSpace, Operator, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseMode {
    /// One correlated channel `sqrt(kappa_a) a + sqrt(kappa_b) b`.
    #[default]
    Combined,
    /// Separate channels `sqrt(kappa_a) a` and `sqrt(kappa_b) b`.
    Independent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Frame {
    #[default]
    Lab,
    /// Mode frequencies replaced by the detunings from a common drive.
    Rotating { delta_a: f64, delta_b: f64 },
}

/// Parameters of the coupled driven-dissipative oscillators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSpec {
    pub omega_a: f64,
    pub omega_b: f64,
    pub g: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    /// Drive amplitudes in sqrt(Hz); they enter as `eps * sqrt(2 kappa)`.
    pub eps_a: f64,
    pub eps_b: f64,
    pub collapse_mode: CollapseMode,
    pub frame: Frame,
}

impl SystemSpec {
    /// Builds a spec from ordinary frequencies in Hz, applying `2 pi` to
    /// every frequency and rate. Drive amplitudes are taken as given.
    #[allow(clippy::too_many_arguments)]
    pub fn from_hz(
        f_a: f64,
        f_b: f64,
        g: f64,
        kappa_a: f64,
        kappa_b: f64,
        eps_a: f64,
        eps_b: f64,
        collapse_mode: CollapseMode,
    ) -> Self {
        Self {
            omega_a: TAU * f_a,
            omega_b: TAU * f_b,
            g: TAU * g,
            kappa_a: TAU * kappa_a,
            kappa_b: TAU * kappa_b,
            eps_a,
            eps_b,
            collapse_mode,
            frame: Frame::Lab,
        }
    }

    /// Operating point used throughout the experiments: 10 GHz and 9.5 GHz
    /// oscillators, 700 MHz coupling, 17 MHz / 21 MHz decay, no drive.
    pub fn reference() -> Self {
        Self::from_hz(10e9, 9.5e9, 700e6, 17e6, 21e6, 0.0, 0.0, CollapseMode::Combined)
    }

    pub fn with_drives(mut self, eps_a: f64, eps_b: f64) -> Self {
        self.eps_a = eps_a;
        self.eps_b = eps_b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("g", self.g),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("eps_a", self.eps_a),
            ("eps_b", self.eps_b),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        for (name, v) in [("kappa_a", self.kappa_a), ("kappa_b", self.kappa_b), ("g", self.g)] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("eps_a", self.eps_a), ("eps_b", self.eps_b)] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        match self.frame {
            Frame::Lab => {
                if self.omega_a <= 0.0 || self.omega_b <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "mode frequencies must be positive in the lab frame".into(),
                    ));
                }
            }
            Frame::Rotating { delta_a, delta_b } => {
                if !delta_a.is_finite() || !delta_b.is_finite() {
                    return Err(Error::InvalidParameter("detunings must be finite".into()));
                }
            }
        }
        Ok(())
    }

    fn mode_frequencies(&self) -> (f64, f64) {
        match self.frame {
            Frame::Lab => (self.omega_a, self.omega_b),
            Frame::Rotating { delta_a, delta_b } => (delta_a, delta_b),
        }
    }
}

fn require_two_modes(space: &ModeSpace) -> Result<()> {
    if space.num_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: space.num_modes(),
        });
    }
    Ok(())
}

/// Full Hamiltonian
/// `w_a a^+a + w_b b^+b + g (a b^+ + a^+ b) + i eps_a sqrt(2 k_a)(a - a^+) + i eps_b sqrt(2 k_b)(b - b^+)`.
pub fn build_hamiltonian(spec: &SystemSpec, space: &ModeSpace) -> Result<Operator> {
    let free = build_coupled_hamiltonian(spec, space)?;
    let drive = build_drive(spec, space)?;
    free.checked_add(&drive)
}

/// The undriven part: both oscillators plus their exchange coupling.
pub fn build_coupled_hamiltonian(spec: &SystemSpec, space: &ModeSpace) -> Result<Operator> {
    spec.validate()?;
    require_two_modes(space)?;
    let a = mode_annihilation(space, 0)?;
    let b = mode_annihilation(space, 1)?;
    let (ad, bd) = (a.adjoint(), b.adjoint());
    let (w_a, w_b) = spec.mode_frequencies();
    let h = &(&(&ad * &a) * w_a) + &(&(&bd * &b) * w_b);
    let exchange = &(&a * &bd) + &(&ad * &b);
    Ok(&h + &(&exchange * spec.g))
}

/// Static drive term `i eps sqrt(2 kappa)(c - c^+)` summed over both modes.
pub fn build_drive(spec: &SystemSpec, space: &ModeSpace) -> Result<Operator> {
    spec.validate()?;
    require_two_modes(space)?;
    let mut h = Operator::zeros(space);
    for (mode, eps, kappa) in [(0, spec.eps_a, spec.kappa_a), (1, spec.eps_b, spec.kappa_b)] {
        let c = mode_annihilation(space, mode)?;
        let amp = C64::new(0.0, eps * (2.0 * kappa).sqrt());
        h = &h + &(&(&c - &c.adjoint()) * amp);
    }
    Ok(h)
}

/// Collapse operators for the configured decay model.
pub fn build_collapse(spec: &SystemSpec, space: &ModeSpace) -> Result<Vec<Operator>> {
    spec.validate()?;
    require_two_modes(space)?;
    let a = &mode_annihilation(space, 0)? * spec.kappa_a.sqrt();
    let b = &mode_annihilation(space, 1)? * spec.kappa_b.sqrt();
    Ok(match spec.collapse_mode {
        CollapseMode::Combined => vec![&a + &b],
        CollapseMode::Independent => vec![a, b],
    })
}
