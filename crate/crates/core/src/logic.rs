//! Admissible Boolean lattices of effect histories and the probabilistic
//! reasoning they license.
//!
//! A lattice is generated by a finite list of atoms; its elements are atom
//! subsets, with union, intersection and complement as the lattice
//! operations. The valuation `M` sends an element to an effect history. By
//! default `M(S) = z + sum of the atoms in S`, where `z = M(0_B)` (the zero
//! operator unless given). Individual images can be overridden by a custom
//! table, which is how non-additive valuations are explored.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::decoherence::DecoherenceContext;
use crate::error::{Error, Result};
use crate::histories::{class_operator_extension, union_support, TensorHistory};
use crate::numerics::{spectral_bounds, ComplexMatrix, C64, SPECTRAL_TOL};

/// Lattices are enumerated exhaustively by the checks, so the atom count is capped.
pub const MAX_ATOMS: usize = 10;
/// Distinct elements must have images at least this far apart (Frobenius).
pub const INJECTIVITY_TOL: f64 = 1e-9;
pub const VALUATION_TOL: f64 = 1e-10;
pub const WEIGHT_TOL: f64 = 1e-10;
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-9;
/// Width of the window around one used by implication.
pub const IMPLICATION_TOL: f64 = 1e-9;
/// Probabilities and normalizations at or below this are treated as zero.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// A lattice element: a set of atom indices stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Element(pub u64);

impl Element {
    pub const EMPTY: Element = Element(0);

    pub fn singleton(atom: usize) -> Self {
        Element(1 << atom)
    }

    pub fn from_atoms<I: IntoIterator<Item = usize>>(atoms: I) -> Self {
        Element(atoms.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    pub fn full(n_atoms: usize) -> Self {
        Element(if n_atoms >= 64 {
            u64::MAX
        } else {
            (1 << n_atoms) - 1
        })
    }

    pub fn join(self, other: Self) -> Self {
        Element(self.0 | other.0)
    }

    pub fn meet(self, other: Self) -> Self {
        Element(self.0 & other.0)
    }

    pub fn complement(self, n_atoms: usize) -> Self {
        Element(!self.0 & Self::full(n_atoms).0)
    }

    pub fn contains(self, atom: usize) -> bool {
        self.0 & (1 << atom) != 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn atoms(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", atoms.join(","))
    }
}

/// A finite atomic Boolean lattice with a valuation into effect histories.
#[derive(Debug, Clone, PartialEq)]
pub struct BooleanLattice {
    dim: usize,
    support: Vec<f64>,
    atoms: Vec<TensorHistory>,
    zero_image: TensorHistory,
    overrides: BTreeMap<Element, TensorHistory>,
}

/// Builds the lattice generated by `atoms` with the additive valuation and
/// verifies summability, injectivity and the valuation condition.
pub fn lattice_from_atoms(
    atoms: Vec<TensorHistory>,
    zero_image: Option<TensorHistory>,
) -> Result<BooleanLattice> {
    let first = atoms.first().ok_or(Error::EmptyLattice)?;
    if atoms.len() > MAX_ATOMS {
        return Err(Error::TooManyAtoms {
            found: atoms.len(),
            limit: MAX_ATOMS,
        });
    }
    let dim = first.dim();
    let zero_image = zero_image.unwrap_or_else(|| TensorHistory::zero(dim));
    let mut support = zero_image.support().to_vec();
    for a in &atoms {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.dim(),
            });
        }
        support = union_support(&support, a.support());
    }
    let atoms = atoms
        .iter()
        .map(|a| a.embed_support(&support))
        .collect::<Result<Vec<_>>>()?;
    let zero_image = zero_image.embed_support(&support)?;

    let mut total = zero_image.op().clone();
    for a in &atoms {
        total = &total + a.op();
    }
    let (_, max) = spectral_bounds(&total.hermitian_part())?;
    if max > 1.0 + SPECTRAL_TOL * total.tolerance_scale() {
        return Err(Error::AtomsNotSummable {
            max_eigenvalue: max,
        });
    }

    let lattice = BooleanLattice {
        dim,
        support,
        atoms,
        zero_image,
        overrides: BTreeMap::new(),
    };
    let images = lattice.images()?;
    if let Some((a, b, _)) = closest_pair(&images) {
        return Err(Error::ValuationNotInjective(a.0, b.0));
    }
    let violations = valuation_violations(&lattice, &images)?;
    if let Some(v) = violations.first() {
        return Err(Error::ValuationConditionViolated {
            residual: v.residual,
        });
    }
    Ok(lattice)
}

/// The pair of elements whose images are closest, if closer than
/// [`INJECTIVITY_TOL`], together with their distance.
fn closest_pair(images: &[TensorHistory]) -> Option<(Element, Element, f64)> {
    let (_, pair) = min_distance(images);
    pair
}

fn min_distance(images: &[TensorHistory]) -> (f64, Option<(Element, Element, f64)>) {
    let mut best = f64::INFINITY;
    let mut offending = None;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            let d = images[i].op().frobenius_distance(images[j].op());
            if d < best {
                best = d;
            }
            if d <= INJECTIVITY_TOL && offending.is_none() {
                offending = Some((Element(i as u64), Element(j as u64), d));
            }
        }
    }
    (best, offending)
}

impl BooleanLattice {
    /// Replaces the valuation on the given elements. The table is not
    /// validated here; [`check_admissible`] reports on it.
    pub fn with_custom_valuation(
        mut self,
        table: BTreeMap<Element, TensorHistory>,
    ) -> Result<Self> {
        for (element, image) in table {
            self.check_element(element)?;
            let image = image.embed_support(&self.support)?;
            self.overrides.insert(element, image);
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn atoms(&self) -> &[TensorHistory] {
        &self.atoms
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn zero_image(&self) -> &TensorHistory {
        &self.zero_image
    }

    pub fn custom_valuation(&self) -> &BTreeMap<Element, TensorHistory> {
        &self.overrides
    }

    pub fn top(&self) -> Element {
        Element::full(self.n_atoms())
    }

    pub fn bottom(&self) -> Element {
        Element::EMPTY
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> {
        (0..=self.top().0).map(Element)
    }

    pub fn negate(&self, e: Element) -> Element {
        e.complement(self.n_atoms())
    }

    pub fn check_element(&self, e: Element) -> Result<()> {
        if e.is_subset_of(self.top()) {
            Ok(())
        } else {
            Err(Error::UnknownElement(e.0))
        }
    }

    /// `z + sum of atoms in e`: the element itself viewed as an effect history.
    pub fn additive_image(&self, e: Element) -> Result<TensorHistory> {
        self.check_element(e)?;
        let mut op = self.zero_image.op().clone();
        for i in e.atoms() {
            op = &op + self.atoms[i].op();
        }
        Ok(TensorHistory::from_parts(
            self.dim,
            self.support.clone(),
            op,
        ))
    }

    /// `M(e)`.
    pub fn valuation(&self, e: Element) -> Result<TensorHistory> {
        self.check_element(e)?;
        match self.overrides.get(&e) {
            Some(image) => Ok(image.clone()),
            None => self.additive_image(e),
        }
    }

    /// `M(e)` for every element, indexed by the element's bit mask.
    pub fn images(&self) -> Result<Vec<TensorHistory>> {
        self.elements().map(|e| self.valuation(e)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValuationViolation {
    pub b1: Element,
    pub b2: Element,
    /// `||(M(b1 v b2) - M(b1)) - (M(b2) - M(b1 ^ b2))||_F`.
    pub residual: f64,
    pub lhs_defined: bool,
    pub rhs_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightViolation {
    pub e1: Element,
    pub e2: Element,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub passed: bool,
    pub valuation_violations: Vec<ValuationViolation>,
    pub max_valuation_residual: f64,
    pub injective: bool,
    pub min_image_distance: f64,
    pub weight_violations: Vec<WeightViolation>,
    pub max_weight_residual: f64,
}

fn is_below(lower: &ComplexMatrix, upper: &ComplexMatrix) -> Result<bool> {
    let diff = (upper - lower).hermitian_part();
    let (min, _) = spectral_bounds(&diff)?;
    Ok(min >= -SPECTRAL_TOL * upper.tolerance_scale())
}

fn valuation_violations(
    lattice: &BooleanLattice,
    images: &[TensorHistory],
) -> Result<Vec<ValuationViolation>> {
    let mut out = Vec::new();
    for b1 in lattice.elements() {
        for b2 in lattice.elements() {
            let join = images[b1.join(b2).0 as usize].op();
            let meet = images[b1.meet(b2).0 as usize].op();
            let m1 = images[b1.0 as usize].op();
            let m2 = images[b2.0 as usize].op();
            let lhs = join - m1;
            let rhs = m2 - meet;
            let residual = lhs.frobenius_distance(&rhs);
            let lhs_defined = is_below(m1, join)?;
            let rhs_defined = is_below(meet, m2)?;
            if residual > VALUATION_TOL || !lhs_defined || !rhs_defined {
                out.push(ValuationViolation {
                    b1,
                    b2,
                    residual,
                    lhs_defined,
                    rhs_defined,
                });
            }
        }
    }
    Ok(out)
}

/// Checks the valuation condition, injectivity and weight preservation of
/// `custom` (or of the lattice's own valuation) over all element pairs.
pub fn check_admissible(
    ctx: &DecoherenceContext,
    lattice: &BooleanLattice,
    custom: Option<&BTreeMap<Element, TensorHistory>>,
) -> Result<AdmissibilityReport> {
    let owned;
    let lattice = match custom {
        Some(table) => {
            owned = lattice.clone().with_custom_valuation(table.clone())?;
            &owned
        }
        None => lattice,
    };
    let images = lattice.images()?;

    let valuation_violations = valuation_violations(lattice, &images)?;
    let max_valuation_residual = valuation_violations
        .iter()
        .map(|v| v.residual)
        .fold(0.0, f64::max);

    let (min_image_distance, offending) = min_distance(&images);
    let injective = offending.is_none();

    let s = &ctx.scenario;
    let rho = s.initial_state();
    let mut plain_ops = Vec::with_capacity(images.len());
    let mut mapped_ops = Vec::with_capacity(images.len());
    for e in lattice.elements() {
        let plain = class_operator_extension(s, &lattice.additive_image(e)?)?;
        let mapped = if lattice.overrides.contains_key(&e) {
            class_operator_extension(s, &images[e.0 as usize])?
        } else {
            plain.clone()
        };
        plain_ops.push((&plain * rho, plain));
        mapped_ops.push((&mapped * rho, mapped));
    }
    let form =
        |left: &(ComplexMatrix, ComplexMatrix), right: &(ComplexMatrix, ComplexMatrix)| -> C64 {
            left.0
                .data()
                .iter()
                .zip(right.1.data())
                .map(|(x, y)| x * y.conj())
                .sum()
        };
    let mut weight_violations = Vec::new();
    let mut max_weight_residual: f64 = 0.0;
    for e1 in lattice.elements() {
        for e2 in lattice.elements() {
            let (i, j) = (e1.0 as usize, e2.0 as usize);
            let plain = form(&plain_ops[i], &plain_ops[j]);
            let mapped = form(&mapped_ops[i], &mapped_ops[j]);
            let residual = (plain - mapped).norm();
            max_weight_residual = max_weight_residual.max(residual);
            if residual > WEIGHT_TOL {
                weight_violations.push(WeightViolation { e1, e2, residual });
            }
        }
    }

    Ok(AdmissibilityReport {
        passed: valuation_violations.is_empty() && injective && weight_violations.is_empty(),
        valuation_violations,
        max_valuation_residual,
        injective,
        min_image_distance,
        weight_violations,
        max_weight_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// Atom indices of the worst pair; absent for single-atom lattices.
    pub worst_pair: Option<(usize, usize)>,
    /// `max |Re d_B(a_i, a_j)|` over distinct atoms (`|d_B|` when strict).
    pub worst_value: f64,
    /// Effective threshold: `tol * max(1, |d_B(1_B, 1_B)|)`.
    pub tol: f64,
    pub strict: bool,
}

/// Class operators of every atom image and of `M(1_B)`.
struct AtomOperators {
    atoms: Vec<ComplexMatrix>,
    top: ComplexMatrix,
}

fn atom_operators(ctx: &DecoherenceContext, lattice: &BooleanLattice) -> Result<AtomOperators> {
    let s = &ctx.scenario;
    let atoms = (0..lattice.n_atoms())
        .map(|i| class_operator_extension(s, &lattice.valuation(Element::singleton(i))?))
        .collect::<Result<Vec<_>>>()?;
    let top = class_operator_extension(s, &lattice.valuation(lattice.top())?)?;
    Ok(AtomOperators { atoms, top })
}

/// Weak consistency: `Re d_B` vanishes on disjoint atom pairs. Disjoint
/// elements then follow by bi-additivity.
pub fn check_consistent(
    ctx: &DecoherenceContext,
    lattice: &BooleanLattice,
    tol: f64,
) -> Result<ConsistencyReport> {
    check_consistent_with(ctx, lattice, tol, false)
}

/// As [`check_consistent`]; with `strict` the full complex value must vanish.
pub fn check_consistent_with(
    ctx: &DecoherenceContext,
    lattice: &BooleanLattice,
    tol: f64,
    strict: bool,
) -> Result<ConsistencyReport> {
    let ops = atom_operators(ctx, lattice)?;
    let norm = ctx.trace_form(&ops.top, &ops.top);
    let threshold = tol * norm.norm().max(1.0);
    let mut worst_value = 0.0;
    let mut worst_pair = None;
    let n = ops.atoms.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ctx.trace_form(&ops.atoms[i], &ops.atoms[j]);
            let value = if strict { d.norm() } else { d.re.abs() };
            if worst_pair.is_none() || value > worst_value {
                worst_value = value;
                worst_pair = Some((i, j));
            }
        }
    }
    Ok(ConsistencyReport {
        consistent: worst_value <= threshold,
        worst_pair,
        worst_value,
        tol: threshold,
        strict,
    })
}

/// The probability functional of a consistent lattice.
#[derive(Debug, Clone)]
pub struct ProbabilityModel<'a> {
    ctx: &'a DecoherenceContext,
    lattice: &'a BooleanLattice,
    normalization: f64,
    consistency: ConsistencyReport,
}

impl<'a> ProbabilityModel<'a> {
    /// Fails with `InconsistentLattice` unless the lattice is consistent at
    /// `tol`, and with `DegenerateNormalization` if `d_B(1_B, 1_B)` vanishes.
    pub fn new(ctx: &'a DecoherenceContext, lattice: &'a BooleanLattice, tol: f64) -> Result<Self> {
        let consistency = check_consistent(ctx, lattice, tol)?;
        if !consistency.consistent {
            return Err(Error::InconsistentLattice {
                worst_value: consistency.worst_value,
            });
        }
        let top = lattice.valuation(lattice.top())?;
        let c = class_operator_extension(&ctx.scenario, &top)?;
        let normalization = ctx.trace_form(&c, &c).re;
        if normalization <= PROBABILITY_FLOOR {
            return Err(Error::DegenerateNormalization(normalization));
        }
        Ok(Self {
            ctx,
            lattice,
            normalization,
            consistency,
        })
    }

    pub fn consistency(&self) -> &ConsistencyReport {
        &self.consistency
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `d_B(M b, M b) / d_B(M 1_B, M 1_B)`.
    pub fn probability(&self, e: Element) -> Result<f64> {
        let image = self.lattice.valuation(e)?;
        let c = class_operator_extension(&self.ctx.scenario, &image)?;
        Ok(self.ctx.trace_form(&c, &c).re / self.normalization)
    }

    /// `p(e1 ^ e2) / p(e1)`.
    pub fn conditional(&self, e2: Element, given: Element) -> Result<f64> {
        let p1 = self.probability(given)?;
        if p1 <= PROBABILITY_FLOOR {
            return Err(Error::ConditionalUndefined(p1));
        }
        Ok(self.probability(given.meet(e2))? / p1)
    }

    pub fn implies(&self, e1: Element, e2: Element) -> Result<bool> {
        Ok((self.conditional(e2, e1)? - 1.0).abs() <= IMPLICATION_TOL)
    }

    pub fn equivalent(&self, e1: Element, e2: Element) -> Result<bool> {
        Ok(self.implies(e1, e2)? && self.implies(e2, e1)?)
    }

    /// Implication through a common lower bound `e3` of `e1` and `e2`:
    /// `p(e3) / p(e1) = 1`.
    pub fn implies_lower_bound(&self, e1: Element, e2: Element, e3: Element) -> Result<bool> {
        for e in [e1, e2, e3] {
            self.lattice.check_element(e)?;
        }
        if !(e3.is_subset_of(e1) && e3.is_subset_of(e2)) {
            return Err(Error::NotCommonLowerBound);
        }
        let p1 = self.probability(e1)?;
        if p1 <= PROBABILITY_FLOOR {
            return Err(Error::ConditionalUndefined(p1));
        }
        Ok((self.probability(e3)? / p1 - 1.0).abs() <= IMPLICATION_TOL)
    }
}

pub fn probability(ctx: &DecoherenceContext, lattice: &BooleanLattice, e: Element) -> Result<f64> {
    ProbabilityModel::new(ctx, lattice, DEFAULT_CONSISTENCY_TOL)?.probability(e)
}

pub fn implies(
    ctx: &DecoherenceContext,
    lattice: &BooleanLattice,
    e1: Element,
    e2: Element,
) -> Result<bool> {
    ProbabilityModel::new(ctx, lattice, DEFAULT_CONSISTENCY_TOL)?.implies(e1, e2)
}

pub fn equivalent(
    ctx: &DecoherenceContext,
    lattice: &BooleanLattice,
    e1: Element,
    e2: Element,
) -> Result<bool> {
    ProbabilityModel::new(ctx, lattice, DEFAULT_CONSISTENCY_TOL)?.equivalent(e1, e2)
}

pub fn implies_lower_bound(
    ctx: &DecoherenceContext,
    lattice: &BooleanLattice,
    e1: Element,
    e2: Element,
    e3: Element,
) -> Result<bool> {
    ProbabilityModel::new(ctx, lattice, DEFAULT_CONSISTENCY_TOL)?.implies_lower_bound(e1, e2, e3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::lattice_consistency_functional;
    use crate::histories::{sigma_fin, HomogeneousEffectHistory};
    use crate::quantum::Scenario;

    fn proj(plus: bool, x_basis: bool) -> ComplexMatrix {
        let s = if plus { 0.5 } else { -0.5 };
        if x_basis {
            ComplexMatrix::from_real_rows(&[vec![0.5, s], vec![s, 0.5]]).unwrap()
        } else if plus {
            ComplexMatrix::from_diagonal(&[1.0, 0.0])
        } else {
            ComplexMatrix::from_diagonal(&[0.0, 1.0])
        }
    }

    fn ctx() -> DecoherenceContext {
        let s = Scenario::new(ComplexMatrix::zeros(2), proj(true, false), 0.0).unwrap();
        DecoherenceContext::extended(s)
    }

    /// Atoms ++, +-, -+, -- with the first basis at t=1 and z at t=2.
    fn fixture(first_x: bool) -> BooleanLattice {
        let mut atoms = Vec::new();
        for a in [true, false] {
            for b in [true, false] {
                let h = HomogeneousEffectHistory::new(
                    2,
                    vec![(1.0, proj(a, first_x)), (2.0, proj(b, false))],
                )
                .unwrap();
                atoms.push(sigma_fin(&h).unwrap());
            }
        }
        lattice_from_atoms(atoms, None).unwrap()
    }

    fn single(e: ComplexMatrix) -> TensorHistory {
        TensorHistory::new(2, vec![1.0], e).unwrap()
    }

    #[test]
    fn element_algebra() {
        let a = Element::from_atoms([0, 2]);
        let b = Element::from_atoms([2, 3]);
        assert_eq!(a.join(b), Element::from_atoms([0, 2, 3]));
        assert_eq!(a.meet(b), Element::singleton(2));
        assert_eq!(a.complement(4), Element::from_atoms([1, 3]));
        assert!(Element::singleton(2).is_subset_of(a));
        assert!(!a.is_disjoint(b));
        assert_eq!(a.to_string(), "{0,2}");
    }

    #[test]
    fn two_atom_lattice() {
        let p = proj(true, true);
        let q = &ComplexMatrix::identity(2) - &p;
        let lattice = lattice_from_atoms(vec![single(p), single(q)], None).unwrap();
        assert_eq!(lattice.elements().count(), 4);
        let top = lattice.valuation(lattice.top()).unwrap();
        assert!(top.op().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn sixteen_element_fixture() {
        assert_eq!(fixture(false).elements().count(), 16);
    }

    #[test]
    fn constructor_errors() {
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(matches!(
            lattice_from_atoms(vec![single(half.clone()), single(half.clone())], None),
            Err(Error::ValuationNotInjective(..))
        ));
        let big = ComplexMatrix::identity(2).scale_real(0.6);
        assert!(matches!(
            lattice_from_atoms(vec![single(big.clone()), single(big)], None),
            Err(Error::AtomsNotSummable { .. })
        ));
        assert_eq!(lattice_from_atoms(vec![], None), Err(Error::EmptyLattice));
    }

    #[test]
    fn atoms_on_different_supports_are_aligned() {
        let a = TensorHistory::new(2, vec![1.0], proj(true, false).scale_real(0.5)).unwrap();
        let b = TensorHistory::new(2, vec![2.0], proj(false, false).scale_real(0.5)).unwrap();
        let lattice = lattice_from_atoms(vec![a, b], None).unwrap();
        assert_eq!(lattice.support(), &[1.0, 2.0]);
        assert_eq!(lattice.atoms()[0].op().dim(), 4);
    }

    #[test]
    fn default_valuation_is_admissible() {
        let lattice = fixture(true);
        let report = check_admissible(&ctx(), &lattice, None).unwrap();
        assert!(report.passed);
        assert_eq!(report.max_valuation_residual, 0.0);
        assert_eq!(report.max_weight_residual, 0.0);
    }

    #[test]
    fn scaled_atom_breaks_valuation() {
        let lattice = fixture(false);
        let atom = lattice.atoms()[1].clone();
        let scaled =
            TensorHistory::new(2, atom.support().to_vec(), atom.op().scale_real(0.9)).unwrap();
        let table = BTreeMap::from([(Element::singleton(1), scaled)]);
        let report = check_admissible(&ctx(), &lattice, Some(&table)).unwrap();
        assert!(!report.passed);
        let expected = 0.1 * atom.op().frobenius_norm();
        assert!((report.max_valuation_residual - expected).abs() < 1e-12);
    }

    #[test]
    fn swapping_equal_weight_atoms() {
        // rho = |z+><z+|, H = 0: x+ and x- at one time carry weight ½ each.
        let p = single(proj(true, true));
        let q = single(proj(false, true));
        let lattice = lattice_from_atoms(vec![p.clone(), q.clone()], None).unwrap();
        let table = BTreeMap::from([(Element::singleton(0), q), (Element::singleton(1), p)]);
        let report = check_admissible(&ctx(), &lattice, Some(&table)).unwrap();
        assert!(report.valuation_violations.is_empty());
        assert!(report.injective);
        // off-diagonal weights differ only by conjugation and are real here
        assert!(report.max_weight_residual < 1e-12);
        assert!(report.passed);
    }

    #[test]
    fn consistency_fixtures() {
        let ctx = ctx();
        let zz = check_consistent(&ctx, &fixture(false), DEFAULT_CONSISTENCY_TOL).unwrap();
        assert!(zz.consistent);
        assert_eq!(zz.worst_value, 0.0);

        let xz = check_consistent(&ctx, &fixture(true), DEFAULT_CONSISTENCY_TOL).unwrap();
        assert!(!xz.consistent);
        assert!((xz.worst_value - 0.25).abs() < 1e-15);
        assert_eq!(xz.worst_pair, Some((0, 2)));

        let one = lattice_from_atoms(
            vec![TensorHistory::identity_on(2, vec![1.0]).unwrap()],
            None,
        )
        .unwrap();
        let report = check_consistent(&ctx, &one, DEFAULT_CONSISTENCY_TOL).unwrap();
        assert!(report.consistent);
        assert_eq!(report.worst_pair, None);
    }

    #[test]
    fn probabilities_on_z_fixture() {
        let ctx = ctx();
        let lattice = fixture(false);
        let model = ProbabilityModel::new(&ctx, &lattice, DEFAULT_CONSISTENCY_TOL).unwrap();
        assert!((model.probability(lattice.top()).unwrap() - 1.0).abs() < 1e-15);
        assert!((model.probability(Element::singleton(0)).unwrap() - 1.0).abs() < 1e-9);
        for i in 1..4 {
            assert!(model.probability(Element::singleton(i)).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn implication_on_z_fixture() {
        let ctx = ctx();
        let lattice = fixture(false);
        // atoms: 0 = ++, 1 = +-, 2 = -+, 3 = --
        let z_plus_first = Element::from_atoms([0, 1]);
        let z_plus_second = Element::from_atoms([0, 2]);
        let z_minus_second = Element::from_atoms([1, 3]);
        assert!(implies(&ctx, &lattice, z_plus_first, z_plus_second).unwrap());
        assert!(!implies(&ctx, &lattice, z_plus_first, z_minus_second).unwrap());
        assert!(implies(&ctx, &lattice, z_plus_first, z_plus_first).unwrap());
        assert!(equivalent(&ctx, &lattice, z_plus_first, z_plus_second).unwrap());
        assert!(matches!(
            implies(&ctx, &lattice, Element::singleton(3), z_plus_first),
            Err(Error::ConditionalUndefined(_))
        ));

        let e3 = Element::singleton(0);
        assert!(implies_lower_bound(&ctx, &lattice, z_plus_first, z_plus_second, e3).unwrap());
        assert!(
            !implies_lower_bound(&ctx, &lattice, z_plus_first, z_plus_second, Element::EMPTY)
                .unwrap()
        );
        assert_eq!(
            implies_lower_bound(
                &ctx,
                &lattice,
                z_plus_first,
                z_plus_second,
                Element::singleton(3)
            ),
            Err(Error::NotCommonLowerBound)
        );
    }

    #[test]
    fn inconsistent_lattice_has_no_probabilities() {
        let ctx = ctx();
        assert!(matches!(
            probability(&ctx, &fixture(true), Element::singleton(0)),
            Err(Error::InconsistentLattice { .. })
        ));
    }

    #[test]
    fn lattice_functional_is_additive() {
        let ctx = ctx();
        let lattice = fixture(true);
        let b = Element::from_atoms([1, 3]);
        let (a1, a2) = (Element::singleton(0), Element::singleton(2));
        let joint = lattice_consistency_functional(&ctx, &lattice, a1.join(a2), b).unwrap();
        let split = lattice_consistency_functional(&ctx, &lattice, a1, b).unwrap()
            + lattice_consistency_functional(&ctx, &lattice, a2, b).unwrap();
        assert!((joint - split).norm() < 1e-10);
        let zero = lattice_consistency_functional(&ctx, &lattice, Element::EMPTY, b).unwrap();
        assert_eq!(zero, C64::new(0.0, 0.0));
    }

    #[test]
    fn unknown_elements_are_rejected() {
        let lattice = fixture(false);
        assert_eq!(
            lattice.valuation(Element(1 << 5)),
            Err(Error::UnknownElement(32))
        );
    }
}
