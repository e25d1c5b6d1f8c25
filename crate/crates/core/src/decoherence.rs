//! Decoherence functionals.
//!
//! The first-kind functional uses the square-root class operator of a
//! homogeneous effect history. The extended functional is the bilinear form
//! `tr(C(a) rho C(b)^dagger)` built from the linear class-operator extension on
//! tensor histories; on projectors both coincide.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::histories::{
    class_operator_extension, class_operator_first_kind, History, HomogeneousEffectHistory,
    TensorHistory,
};
use crate::logic::{BooleanLattice, Element};
use crate::numerics::{ComplexMatrix, C64};
use crate::quantum::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    FirstKind,
    Extended,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceContext {
    pub scenario: Scenario,
    pub kind: FunctionalKind,
}

impl DecoherenceContext {
    pub fn new(scenario: Scenario, kind: FunctionalKind) -> Self {
        Self { scenario, kind }
    }

    pub fn first_kind(scenario: Scenario) -> Self {
        Self::new(scenario, FunctionalKind::FirstKind)
    }

    pub fn extended(scenario: Scenario) -> Self {
        Self::new(scenario, FunctionalKind::Extended)
    }

    /// The class operator appropriate for `self.kind`.
    pub fn class_operator(&self, h: &History) -> Result<ComplexMatrix> {
        match (self.kind, h) {
            (FunctionalKind::FirstKind, History::Homogeneous(u)) => {
                class_operator_first_kind(&self.scenario, u)
            }
            (FunctionalKind::FirstKind, History::Tensor(_)) => Err(Error::InvalidParameter(
                "the first-kind functional needs homogeneous histories".into(),
            )),
            (FunctionalKind::Extended, h) => {
                class_operator_extension(&self.scenario, &h.to_tensor()?)
            }
        }
    }

    /// `tr(left rho right^dagger)` for precomputed class operators.
    pub fn trace_form(&self, left: &ComplexMatrix, right: &ComplexMatrix) -> C64 {
        trace_form(left, self.scenario.initial_state(), right)
    }
}

/// `tr(a rho b^dagger) = sum_ij (a rho)_ij conj(b_ij)`.
pub fn trace_form(a: &ComplexMatrix, rho: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let ar = a * rho;
    ar.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x * y.conj())
        .sum()
}

/// First-kind decoherence weight `tr(C(u) rho C(v)^dagger)`.
pub fn weight_first_kind(
    ctx: &DecoherenceContext,
    u: &HomogeneousEffectHistory,
    v: &HomogeneousEffectHistory,
) -> Result<C64> {
    let cu = class_operator_first_kind(&ctx.scenario, u)?;
    let cv = class_operator_first_kind(&ctx.scenario, v)?;
    Ok(ctx.trace_form(&cu, &cv))
}

/// Extended decoherence functional on tensor histories.
pub fn weight_extended(
    ctx: &DecoherenceContext,
    a: &TensorHistory,
    b: &TensorHistory,
) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    // The extension is invariant under support embedding, so both sides are
    // evaluated on their own supports.
    let ca = class_operator_extension(&ctx.scenario, a)?;
    let cb = class_operator_extension(&ctx.scenario, b)?;
    Ok(ctx.trace_form(&ca, &cb))
}

/// The functional tabulated over a family of histories.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixResiduals {
    /// `max |d_ij - conj(d_ji)|`.
    pub hermiticity: f64,
    /// `max |Im d_ii|`.
    pub diagonal_imaginary: f64,
    pub min_diagonal: f64,
}

impl DecoherenceMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn residuals(&self) -> MatrixResiduals {
        let n = self.len();
        let mut hermiticity: f64 = 0.0;
        let mut diagonal_imaginary: f64 = 0.0;
        let mut min_diagonal = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                hermiticity =
                    hermiticity.max((self.values[i][j] - self.values[j][i].conj()).norm());
            }
            diagonal_imaginary = diagonal_imaginary.max(self.values[i][i].im.abs());
            min_diagonal = min_diagonal.min(self.values[i][i].re);
        }
        MatrixResiduals {
            hermiticity,
            diagonal_imaginary,
            min_diagonal,
        }
    }

    /// Hermitian with a real non-negative diagonal, all within `tol`.
    pub fn satisfies_invariants(&self, tol: f64) -> bool {
        let r = self.residuals();
        r.hermiticity <= tol && r.diagonal_imaginary <= tol && r.min_diagonal >= -tol
    }
}

/// Tabulates `d(h_i, h_j)` over a family. Every member must be of the same
/// kind; homogeneous families evaluated with the extended functional go
/// through `sigma_fin`.
pub fn decoherence_matrix(
    ctx: &DecoherenceContext,
    family: &[(String, History)],
) -> Result<DecoherenceMatrix> {
    if let Some((_, first)) = family.first() {
        let homogeneous = matches!(first, History::Homogeneous(_));
        if family
            .iter()
            .any(|(_, h)| matches!(h, History::Homogeneous(_)) != homogeneous)
        {
            return Err(Error::MixedHistoryKinds);
        }
        if let Some((_, bad)) = family.iter().find(|(_, h)| h.dim() != ctx.scenario.dim()) {
            return Err(Error::DimensionMismatch {
                expected: ctx.scenario.dim(),
                found: bad.dim(),
            });
        }
    }
    let class_ops = family
        .iter()
        .map(|(_, h)| ctx.class_operator(h))
        .collect::<Result<Vec<_>>>()?;
    let rho = ctx.scenario.initial_state();
    let left: Vec<ComplexMatrix> = class_ops.iter().map(|c| c * rho).collect();
    let values = left
        .iter()
        .map(|l| {
            class_ops
                .iter()
                .map(|r| {
                    l.data()
                        .iter()
                        .zip(r.data())
                        .map(|(x, y)| x * y.conj())
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(DecoherenceMatrix {
        labels: family.iter().map(|(l, _)| l.clone()).collect(),
        values,
    })
}

/// `d_B(p1, p2) = d(M(p1), M(p2))` with the extended functional.
pub fn lattice_consistency_functional(
    ctx: &DecoherenceContext,
    lattice: &BooleanLattice,
    p1: Element,
    p2: Element,
) -> Result<C64> {
    let a = lattice.valuation(p1)?;
    let b = lattice.valuation(p2)?;
    weight_extended(ctx, &a, &b)
}
