//! Physical and numerical parameters of the two-ensemble mixture.
//!
//! All rates and frequencies are in units of the decay rate of the first
//! ensemble, and all times in its inverse.

use crate::error::{Error, Mode, Result};

/// Order at which the square roots of the bosonized collective operators are
/// expanded in the excitation density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HpOrder {
    /// `S- ~ sqrt(N) a`.
    Zeroth,
    /// `S- ~ sqrt(N) (1 - a†a / 2N) a`.
    First,
}

impl HpOrder {
    pub fn from_number(n: u32) -> Option<Self> {
        match n {
            0 => Some(HpOrder::Zeroth),
            1 => Some(HpOrder::First),
            _ => None,
        }
    }

    pub fn number(self) -> u32 {
        match self {
            HpOrder::Zeroth => 0,
            HpOrder::First => 1,
        }
    }
}

/// How the intra-ensemble interaction `beta S+ S-` is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumberTerm {
    /// `N a†a - a†² a²`, exact under the bosonization at any order.
    Exact,
    /// The product of the expanded `S+` and `S-` matrices at the chosen
    /// order. At zeroth order this is `N a†a`, which gives the linear model
    /// with effective detuning `delta + (N - 1) beta`.
    Expanded,
}

/// One ensemble: its Fock cutoff and its physical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    /// Highest retained Fock level.
    pub cutoff: usize,
    /// Number of atoms.
    pub atoms: usize,
    pub gamma: f64,
    pub beta: f64,
    /// Laser detuning.
    pub delta: f64,
    /// Single-atom Rabi frequency.
    pub omega_rabi: f64,
}

impl ModeSpec {
    pub fn new(cutoff: usize, atoms: usize) -> Self {
        ModeSpec {
            cutoff,
            atoms,
            gamma: 1.0,
            beta: 0.0,
            delta: 0.0,
            omega_rabi: 0.0,
        }
    }

    /// Number of retained Fock levels, `cutoff + 1`.
    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub fn n(&self) -> f64 {
        self.atoms as f64
    }

    /// Collective Rabi frequency `Omega sqrt(N)`.
    pub fn collective_rabi(&self) -> f64 {
        self.omega_rabi * self.n().sqrt()
    }

    /// Effective detuning of the linear model, `delta + (N - 1) beta`.
    pub fn effective_detuning(&self) -> f64 {
        self.delta + (self.n() - 1.0) * self.beta
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 1 {
            return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
        }
        if self.atoms < 1 {
            return Err(Error::InvalidParameter(
                "atom number must be at least 1".into(),
            ));
        }
        if self.cutoff > self.atoms {
            return Err(Error::InvalidParameter(format!(
                "cutoff {} exceeds the atom number {}",
                self.cutoff, self.atoms
            )));
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("delta", self.delta),
            ("omega", self.omega_rabi),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter("gamma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Full parameter set for the mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixParams {
    pub mode1: ModeSpec,
    pub mode2: ModeSpec,
    /// Cross-coupling strength, in `[0, 1]`.
    pub eta: f64,
    /// Laser frequency difference `omega1 - omega2`.
    pub delta_omega: f64,
    /// Initial laser phase difference.
    pub phi0: f64,
    pub hp_order: HpOrder,
    pub number_term: NumberTerm,
}

impl MixParams {
    pub fn symmetric(mode: ModeSpec, eta: f64, delta_omega: f64, hp_order: HpOrder) -> Self {
        MixParams {
            mode1: mode,
            mode2: mode,
            eta,
            delta_omega,
            phi0: 0.0,
            hp_order,
            number_term: NumberTerm::Exact,
        }
    }

    pub fn mode(&self, mode: Mode) -> &ModeSpec {
        match mode {
            Mode::One => &self.mode1,
            Mode::Two => &self.mode2,
        }
    }

    pub fn mode_mut(&mut self, mode: Mode) -> &mut ModeSpec {
        match mode {
            Mode::One => &mut self.mode1,
            Mode::Two => &mut self.mode2,
        }
    }

    /// Dipole-dipole cross coupling `eta sqrt(beta1 beta2)`.
    pub fn beta12(&self) -> f64 {
        self.eta * (self.mode1.beta * self.mode2.beta).sqrt()
    }

    /// `sqrt(gamma1 gamma2)`.
    pub fn gamma12(&self) -> f64 {
        (self.mode1.gamma * self.mode2.gamma).sqrt()
    }

    /// Dimension of the joint truncated Fock space.
    pub fn dim(&self) -> usize {
        self.mode1.levels() * self.mode2.levels()
    }

    pub fn with_cutoffs(mut self, m1: usize, m2: usize) -> Self {
        self.mode1.cutoff = m1;
        self.mode2.cutoff = m2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.mode1.validate()?;
        self.mode2.validate()?;
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!(
                "eta = {} outside [0, 1]",
                self.eta
            )));
        }
        if self.mode1.beta * self.mode2.beta < 0.0 && self.eta != 0.0 {
            return Err(Error::InvalidParameter(
                "cross coupling needs beta1 and beta2 of equal sign".into(),
            ));
        }
        if !self.delta_omega.is_finite() || !self.phi0.is_finite() {
            return Err(Error::InvalidParameter(
                "delta_omega and phi0 must be finite".into(),
            ));
        }
        Ok(())
    }
}
