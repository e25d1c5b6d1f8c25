//! Scenario objects: Hilbert space dimension, Hamiltonian dynamics, the
//! state at the fiducial time, and generalized (POV) observables.

use crate::error::{Error, Result};
use crate::numerics::{
    classify_default, unitary_exp, ComplexMatrix, OperatorClass, DEFAULT_MAX_TENSOR_DIM,
    SPECTRAL_TOL,
};

/// POV measures must sum to the identity within this Frobenius distance.
pub const POVM_NORMALIZATION_TOL: f64 = 1e-10;

/// A closed finite-dimensional quantum system with time-independent
/// Hamiltonian and a state given at the fiducial time.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    dim: usize,
    hamiltonian: ComplexMatrix,
    hbar: f64,
    fiducial_time: f64,
    initial_state: ComplexMatrix,
    max_tensor_dim: usize,
}

impl Scenario {
    pub fn new(
        hamiltonian: ComplexMatrix,
        initial_state: ComplexMatrix,
        fiducial_time: f64,
    ) -> Result<Self> {
        Self::with_hbar(hamiltonian, initial_state, fiducial_time, 1.0)
    }

    pub fn with_hbar(
        hamiltonian: ComplexMatrix,
        initial_state: ComplexMatrix,
        fiducial_time: f64,
        hbar: f64,
    ) -> Result<Self> {
        let dim = hamiltonian.dim();
        if initial_state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: initial_state.dim(),
            });
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        if !fiducial_time.is_finite() {
            return Err(Error::InvalidParameter(
                "fiducial time must be finite".into(),
            ));
        }
        let deviation = hamiltonian.hermitian_deviation();
        if deviation > SPECTRAL_TOL * hamiltonian.tolerance_scale() {
            return Err(Error::NotHermitian { deviation });
        }
        if !classify_default(&initial_state).is_density {
            return Err(Error::NotADensity("initial state".into()));
        }
        Ok(Self {
            dim,
            hamiltonian,
            hbar,
            fiducial_time,
            initial_state,
            max_tensor_dim: DEFAULT_MAX_TENSOR_DIM,
        })
    }

    /// Overrides the tensor-dimension budget used by the extended class operator.
    pub fn with_max_tensor_dim(mut self, limit: usize) -> Self {
        self.max_tensor_dim = limit;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn fiducial_time(&self) -> f64 {
        self.fiducial_time
    }

    pub fn initial_state(&self) -> &ComplexMatrix {
        &self.initial_state
    }

    pub fn max_tensor_dim(&self) -> usize {
        self.max_tensor_dim
    }

    /// `U(t_to, t_from) = exp(-i (t_to - t_from) H / hbar)`.
    pub fn propagator(&self, t_to: f64, t_from: f64) -> Result<ComplexMatrix> {
        unitary_exp(&self.hamiltonian, (t_to - t_from) / self.hbar)
    }

    /// Moves an effect from `t_ref` to `t`: `U(t, t_ref) e U(t, t_ref)^dagger`.
    pub fn heisenberg_translate(
        &self,
        e: &ComplexMatrix,
        t: f64,
        t_ref: f64,
    ) -> Result<ComplexMatrix> {
        if e.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: e.dim(),
            });
        }
        if !classify_default(e).is_effect {
            return Err(Error::NotAnEffect("translated operator".into()));
        }
        if t == t_ref {
            return Ok(e.clone());
        }
        let u = self.propagator(t, t_ref)?;
        Ok((&(&u * e) * &u.adjoint()).hermitian_part())
    }
}

/// A finite-outcome effect valued measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PovMeasure {
    pub outcomes: Vec<String>,
    pub effects: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PovmEntry {
    pub outcome: String,
    pub class: OperatorClass,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PovmReport {
    pub entries: Vec<PovmEntry>,
    /// `||sum of effects - I||_F`.
    pub deviation: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

impl PovMeasure {
    pub fn new(outcomes: Vec<String>, effects: Vec<ComplexMatrix>) -> Result<Self> {
        if outcomes.len() != effects.len() {
            return Err(Error::ArityMismatch {
                expected: outcomes.len(),
                found: effects.len(),
            });
        }
        if effects.is_empty() {
            return Err(Error::InvalidParameter(
                "a POV measure needs at least one outcome".into(),
            ));
        }
        Ok(Self { outcomes, effects })
    }

    pub fn validate(&self) -> PovmReport {
        let dim = self.effects[0].dim();
        let mut failures = Vec::new();
        let mut entries = Vec::with_capacity(self.effects.len());
        let mut sum = ComplexMatrix::zeros(dim);
        let mut dims_agree = true;
        for (label, effect) in self.outcomes.iter().zip(&self.effects) {
            let class = classify_default(effect);
            if !class.is_effect {
                failures.push(format!("not an effect: {label}"));
            }
            match sum.try_add(effect) {
                Ok(s) => sum = s,
                Err(_) => {
                    dims_agree = false;
                    failures.push(format!("dimension mismatch: {label}"));
                }
            }
            entries.push(PovmEntry {
                outcome: label.clone(),
                class,
            });
        }
        let deviation = if dims_agree {
            sum.frobenius_distance(&ComplexMatrix::identity(dim))
        } else {
            f64::INFINITY
        };
        if dims_agree && deviation > POVM_NORMALIZATION_TOL {
            failures.push(format!(
                "effects do not sum to identity (deviation {deviation:e})"
            ));
        }
        PovmReport {
            entries,
            deviation,
            passed: failures.is_empty(),
            failures,
        }
    }
}

/// Free-function form of [`PovMeasure::validate`].
pub fn validate_povm(p: &PovMeasure) -> PovmReport {
    p.validate()
}
