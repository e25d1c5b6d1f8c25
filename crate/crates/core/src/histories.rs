//! Effect histories of both kinds.
//!
//! A [`HomogeneousEffectHistory`] assigns one effect to each of finitely many
//! times. A [`TensorHistory`] is an effect on the tensor product of one copy of
//! the Hilbert space per time in its support; the earliest time is the leftmost
//! tensor factor. Histories with empty support are scalars (`[1]` is the unit
//! history, `[0]` the zero history) and embed into every support.

use crate::error::{Error, Result};
use crate::numerics::{
    classify_default, hermitian_eig, kron_with_limit, psd_power, psd_sqrt, spectral_bounds,
    ComplexMatrix, C64, DEFAULT_MAX_TENSOR_DIM, SPECTRAL_TOL,
};
use crate::quantum::Scenario;

/// Threshold for treating an event effect as the identity or as zero.
const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub effect: ComplexMatrix,
}

/// A finite homogeneous effect history (first kind).
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousEffectHistory {
    dim: usize,
    events: Vec<Event>,
    zero: bool,
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("times must be finite".into()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::TimesNotIncreasing);
    }
    Ok(())
}

fn check_effect(e: &ComplexMatrix, dim: usize, what: &str) -> Result<()> {
    if e.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: e.dim(),
        });
    }
    if !classify_default(e).is_effect {
        return Err(Error::NotAnEffect(what.to_string()));
    }
    Ok(())
}

impl HomogeneousEffectHistory {
    /// Builds a history from `(time, effect)` pairs with strictly increasing
    /// times. Identity events are dropped; any zero event collapses the whole
    /// history to the zero history.
    pub fn new(dim: usize, events: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let times: Vec<f64> = events.iter().map(|(t, _)| *t).collect();
        check_increasing(&times)?;
        for (t, e) in &events {
            check_effect(e, dim, &format!("event at t = {t}"))?;
        }
        let identity = ComplexMatrix::identity(dim);
        if events.iter().any(|(_, e)| e.is_zero(NORMALIZATION_TOL)) {
            return Ok(Self::zero(dim));
        }
        let events = events
            .into_iter()
            .filter(|(_, e)| e.frobenius_distance(&identity) > NORMALIZATION_TOL)
            .map(|(time, effect)| Event { time, effect })
            .collect();
        Ok(Self {
            dim,
            events,
            zero: false,
        })
    }

    /// The history with `u_t = 1` for all `t`.
    pub fn unit(dim: usize) -> Self {
        Self {
            dim,
            events: Vec::new(),
            zero: false,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            events: Vec::new(),
            zero: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn is_unit(&self) -> bool {
        !self.zero && self.events.is_empty()
    }

    /// Times whose effect differs from the identity.
    pub fn support(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }

    pub fn initial_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.time)
    }

    pub fn final_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }

    /// Temporal concatenation `self ∘ later`.
    pub fn compose(&self, later: &Self) -> Result<Self> {
        if self.dim != later.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: later.dim,
            });
        }
        if self.zero || later.zero {
            return Ok(Self::zero(self.dim));
        }
        if let (Some(tf), Some(ti)) = (self.final_time(), later.initial_time()) {
            if tf >= ti {
                return Err(Error::TemporalOverlap);
            }
        }
        let mut events = self.events.clone();
        events.extend(later.events.iter().cloned());
        Ok(Self {
            dim: self.dim,
            events,
            zero: false,
        })
    }
}

/// Free-function form of [`HomogeneousEffectHistory::compose`].
pub fn compose(
    a: &HomogeneousEffectHistory,
    b: &HomogeneousEffectHistory,
) -> Result<HomogeneousEffectHistory> {
    a.compose(b)
}

/// An effect on the tensor product over a finite time support.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorHistory {
    dim: usize,
    support: Vec<f64>,
    op: ComplexMatrix,
}

fn tensor_dim(dim: usize, slots: usize, limit: usize) -> Result<usize> {
    let mut total: usize = 1;
    for _ in 0..slots {
        total = total.checked_mul(dim).filter(|&t| t <= limit).ok_or(
            Error::TensorDimensionOverflow {
                requested: dim.saturating_pow(slots as u32),
                limit,
            },
        )?;
    }
    Ok(total)
}

/// Sorted union of two strictly increasing time lists.
pub fn union_support(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    out
}

impl TensorHistory {
    pub fn new(dim: usize, support: Vec<f64>, op: ComplexMatrix) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        check_increasing(&support)?;
        let expected = tensor_dim(dim, support.len(), usize::MAX)?;
        check_effect(&op, expected, "tensor history operator")?;
        Ok(Self { dim, support, op })
    }

    /// Internal constructor for results that are effects by construction.
    pub(crate) fn from_parts(dim: usize, support: Vec<f64>, op: ComplexMatrix) -> Self {
        debug_assert_eq!(op.dim(), dim.pow(support.len() as u32));
        Self { dim, support, op }
    }

    pub fn unit(dim: usize) -> Self {
        Self::from_parts(dim, Vec::new(), ComplexMatrix::identity(1))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_parts(dim, Vec::new(), ComplexMatrix::zeros(1))
    }

    /// The identity on the given support.
    pub fn identity_on(dim: usize, support: Vec<f64>) -> Result<Self> {
        check_increasing(&support)?;
        let n = tensor_dim(dim, support.len(), DEFAULT_MAX_TENSOR_DIM)?;
        Ok(Self::from_parts(dim, support, ComplexMatrix::identity(n)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn op(&self) -> &ComplexMatrix {
        &self.op
    }

    pub fn into_op(self) -> ComplexMatrix {
        self.op
    }

    /// Interleaves identity factors at the times of `bigger` not in the
    /// current support.
    pub fn embed_support(&self, bigger: &[f64]) -> Result<Self> {
        self.embed_support_with_limit(bigger, DEFAULT_MAX_TENSOR_DIM)
    }

    pub fn embed_support_with_limit(&self, bigger: &[f64], limit: usize) -> Result<Self> {
        check_increasing(bigger)?;
        let mut positions = Vec::with_capacity(self.support.len());
        let mut cursor = 0;
        for t in &self.support {
            while cursor < bigger.len() && bigger[cursor] < *t {
                cursor += 1;
            }
            if cursor == bigger.len() || bigger[cursor] != *t {
                return Err(Error::SupportNotSuperset);
            }
            positions.push(cursor);
            cursor += 1;
        }
        if bigger.len() == self.support.len() {
            return Ok(self.clone());
        }
        let d = self.dim;
        let m = bigger.len();
        let new_dim = tensor_dim(d, m, limit)?;
        // place value of slot s (slot 0 most significant)
        let place: Vec<usize> = (0..m).map(|s| d.pow((m - 1 - s) as u32)).collect();
        let fresh: Vec<usize> = (0..m).filter(|s| !positions.contains(s)).collect();

        let spread = |index: usize, slots: &[usize]| -> usize {
            let mut rem = index;
            let mut out = 0;
            for &s in slots.iter().rev() {
                out += (rem % d) * place[s];
                rem /= d;
            }
            out
        };
        let old_dim = self.op.dim();
        let old_offsets: Vec<usize> = (0..old_dim).map(|r| spread(r, &positions)).collect();
        let fresh_count = d.pow(fresh.len() as u32);
        let fresh_offsets: Vec<usize> = (0..fresh_count).map(|e| spread(e, &fresh)).collect();

        let mut op = ComplexMatrix::zeros(new_dim);
        for r in 0..old_dim {
            for c in 0..old_dim {
                let v = self.op.get(r, c);
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for &f in &fresh_offsets {
                    op.set(old_offsets[r] + f, old_offsets[c] + f, v);
                }
            }
        }
        Ok(Self::from_parts(d, bigger.to_vec(), op))
    }

    /// Embeds both histories into the union of their supports.
    pub fn align(&self, other: &Self) -> Result<(Self, Self)> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let support = union_support(&self.support, &other.support);
        Ok((
            self.embed_support(&support)?,
            other.embed_support(&support)?,
        ))
    }

    /// Partial sum, defined when the sum is still below the identity.
    pub fn oplus(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.align(other)?;
        let sum = (&a.op + &b.op).hermitian_part();
        let (_, max) = spectral_bounds(&sum)?;
        if max > 1.0 + SPECTRAL_TOL * sum.tolerance_scale() {
            return Err(Error::OplusUndefined {
                max_eigenvalue: max,
            });
        }
        Ok(Self::from_parts(a.dim, a.support, sum))
    }

    /// Partial difference `self ⊖ other`, defined when `other ≤ self`.
    pub fn ominus(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.align(other)?;
        let diff = (&a.op - &b.op).hermitian_part();
        let (min, _) = spectral_bounds(&diff)?;
        if min < -SPECTRAL_TOL * a.op.tolerance_scale() {
            return Err(Error::OminusUndefined);
        }
        Ok(Self::from_parts(a.dim, a.support, diff))
    }

    /// `self ≤ other` in the effect order.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        match other.ominus(self) {
            Ok(_) => Ok(true),
            Err(Error::OminusUndefined) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// `1 ⊖ self` on the same support.
    pub fn complement(&self) -> Self {
        let id = ComplexMatrix::identity(self.op.dim());
        Self::from_parts(
            self.dim,
            self.support.clone(),
            (&id - &self.op).hermitian_part(),
        )
    }

    /// Infimum and supremum where they can be determined exactly: for two
    /// projectors, or for comparable effects. `None` otherwise.
    pub fn meet_join(&self, other: &Self) -> Result<Option<(Self, Self)>> {
        let (a, b) = self.align(other)?;
        let (ca, cb) = (classify_default(&a.op), classify_default(&b.op));
        if ca.is_projector && cb.is_projector {
            let sum = (&a.op + &b.op).hermitian_part();
            let eig = hermitian_eig(&sum)?;
            let one = C64::new(1.0, 0.0);
            let zero = C64::new(0.0, 0.0);
            let meet = eig.map(|l| if l >= 2.0 - RANGE_TOL { one } else { zero });
            let join = eig.map(|l| if l > RANGE_TOL { one } else { zero });
            let support = a.support.clone();
            return Ok(Some((
                Self::from_parts(a.dim, support.clone(), meet),
                Self::from_parts(a.dim, support, join),
            )));
        }
        if a.leq(&b)? {
            return Ok(Some((a, b)));
        }
        if b.leq(&a)? {
            return Ok(Some((b, a)));
        }
        Ok(None)
    }
}

/// Eigenvalue threshold separating range/kernel in projector meets and joins.
const RANGE_TOL: f64 = 1e-9;

pub fn embed_support(h: &TensorHistory, bigger: &[f64]) -> Result<TensorHistory> {
    h.embed_support(bigger)
}

pub fn dposet_oplus(a: &TensorHistory, b: &TensorHistory) -> Result<TensorHistory> {
    a.oplus(b)
}

pub fn dposet_ominus(a: &TensorHistory, b: &TensorHistory) -> Result<TensorHistory> {
    a.ominus(b)
}

pub fn meet_join(
    a: &TensorHistory,
    b: &TensorHistory,
) -> Result<Option<(TensorHistory, TensorHistory)>> {
    a.meet_join(b)
}

/// `⊗_{t in support} u_t`, earliest time leftmost.
pub fn sigma_fin(u: &HomogeneousEffectHistory) -> Result<TensorHistory> {
    if u.is_zero() {
        return Ok(TensorHistory::zero(u.dim()));
    }
    let mut op = ComplexMatrix::identity(1);
    for event in u.events() {
        op = kron_with_limit(&op, &event.effect, DEFAULT_MAX_TENSOR_DIM)?;
    }
    Ok(TensorHistory::from_parts(u.dim(), u.support(), op))
}

/// Either kind of history, as stored in named families.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    Homogeneous(HomogeneousEffectHistory),
    Tensor(TensorHistory),
}

impl History {
    pub fn dim(&self) -> usize {
        match self {
            History::Homogeneous(h) => h.dim(),
            History::Tensor(h) => h.dim(),
        }
    }

    /// The tensor-history view; homogeneous histories go through `sigma_fin`.
    pub fn to_tensor(&self) -> Result<TensorHistory> {
        match self {
            History::Homogeneous(h) => sigma_fin(h),
            History::Tensor(h) => Ok(h.clone()),
        }
    }
}

fn check_scenario_dim(s: &Scenario, dim: usize) -> Result<()> {
    if s.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: dim,
        });
    }
    Ok(())
}

/// `C(u) = U(t0, tn) sqrt(u_tn) U(tn, tn-1) ... sqrt(u_t1) U(t1, t0)`.
pub fn class_operator_first_kind(
    s: &Scenario,
    u: &HomogeneousEffectHistory,
) -> Result<ComplexMatrix> {
    check_scenario_dim(s, u.dim())?;
    if u.is_zero() {
        return Ok(ComplexMatrix::zeros(u.dim()));
    }
    let t0 = s.fiducial_time();
    let mut previous = t0;
    let mut c = ComplexMatrix::identity(u.dim());
    for event in u.events() {
        c = &s.propagator(event.time, previous)? * &c;
        c = &psd_sqrt(&event.effect)? * &c;
        previous = event.time;
    }
    Ok(&s.propagator(t0, previous)? * &c)
}

/// The linear extension of the class operator to arbitrary operators on the
/// support tensor product. On product operators `A_1 ⊗ ... ⊗ A_n` it equals
/// `U(t0, tn) A_n U(tn, tn-1) ... A_1 U(t1, t0)`.
pub fn class_operator_extension(s: &Scenario, h: &TensorHistory) -> Result<ComplexMatrix> {
    check_scenario_dim(s, h.dim())?;
    let d = h.dim();
    let n = h.support().len();
    if n == 0 {
        return Ok(ComplexMatrix::scalar(d, h.op().get(0, 0)));
    }
    let big = tensor_dim(d, n, s.max_tensor_dim())?;
    let t0 = s.fiducial_time();
    let times = h.support();
    let x = h.op();

    // Interleave row/column digits so that pair k = (i_k, j_k) is contiguous,
    // earliest pair most significant.
    let d2 = d * d;
    let mut xp = vec![C64::new(0.0, 0.0); big * big];
    for r in 0..big {
        for c in 0..big {
            let v = x.get(r, c);
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let (mut rr, mut cc) = (r, c);
            let mut index = 0;
            let mut place = 1;
            for _ in 0..n {
                index += ((rr % d) * d + cc % d) * place;
                rr /= d;
                cc /= d;
                place *= d2;
            }
            xp[index] = v;
        }
    }

    // w[rest][x][b]: x is the pending row index of the last absorbed slot.
    let first = s.propagator(times[0], t0)?;
    let mut rest = d2.pow((n - 1) as u32);
    let mut w = vec![C64::new(0.0, 0.0); rest * d2];
    for rem in 0..rest {
        for xi in 0..d {
            for j in 0..d {
                let v = xp[(xi * d + j) * rest + rem];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                let base = (rem * d + xi) * d;
                for b in 0..d {
                    w[base + b] += v * first.get(j, b);
                }
            }
        }
    }
    for k in 1..n {
        let u = s.propagator(times[k], times[k - 1])?;
        let next_rest = rest / d2;
        let mut next = vec![C64::new(0.0, 0.0); next_rest * d2];
        for rem in 0..next_rest {
            for y in 0..d {
                let dst = (rem * d + y) * d;
                for j in 0..d {
                    let src_rest = (y * d + j) * next_rest + rem;
                    for xi in 0..d {
                        let coeff = u.get(j, xi);
                        let src = (src_rest * d + xi) * d;
                        for b in 0..d {
                            next[dst + b] += coeff * w[src + b];
                        }
                    }
                }
            }
        }
        w = next;
        rest = next_rest;
    }
    let last = s.propagator(t0, times[n - 1])?;
    let mut out = ComplexMatrix::zeros(d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for xi in 0..d {
                acc += last.get(a, xi) * w[xi * d + b];
            }
            out.set(a, b, acc);
        }
    }
    Ok(out)
}

/// Moves event `k` to `new_times[k]`, Heisenberg-translating its effect.
pub fn shift_translate(
    s: &Scenario,
    u: &HomogeneousEffectHistory,
    new_times: &[f64],
) -> Result<HomogeneousEffectHistory> {
    check_scenario_dim(s, u.dim())?;
    if new_times.len() != u.events().len() {
        return Err(Error::ArityMismatch {
            expected: u.events().len(),
            found: new_times.len(),
        });
    }
    if u.is_zero() {
        return Ok(u.clone());
    }
    let events = u
        .events()
        .iter()
        .zip(new_times)
        .map(|(e, &t)| Ok((t, s.heisenberg_translate(&e.effect, t, e.time)?)))
        .collect::<Result<Vec<_>>>()?;
    HomogeneousEffectHistory::new(u.dim(), events)
}

/// Relative spacing of repeated occurrences inside an order-k block.
const MICRO_SPACING: f64 = 1e-3;

/// Times `base_j + i * delta` for `i < k`, with `delta` a thousandth of the
/// smallest gap between base times.
pub fn order_k_times(base_times: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::InvalidParameter("order must be positive".into()));
    }
    check_increasing(base_times)?;
    let gap = base_times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let delta = if gap.is_finite() {
        MICRO_SPACING * gap
    } else {
        MICRO_SPACING
    };
    if gap.is_finite() && (k - 1) as f64 * delta >= gap {
        return Err(Error::InvalidParameter(format!(
            "order {k} does not fit between base times"
        )));
    }
    Ok(base_times
        .iter()
        .map(|&t| (0..k).map(|i| t + i as f64 * delta).collect())
        .collect())
}

/// The order-k history: each effect repeated at `k` successive times, every
/// occurrence translated from the first time of its block.
pub fn build_order_k(
    s: &Scenario,
    effects: &[ComplexMatrix],
    k: usize,
    base_times: &[f64],
) -> Result<HomogeneousEffectHistory> {
    if effects.len() != base_times.len() {
        return Err(Error::ArityMismatch {
            expected: effects.len(),
            found: base_times.len(),
        });
    }
    for (j, e) in effects.iter().enumerate() {
        check_effect(e, s.dim(), &format!("effect {j}"))?;
    }
    let blocks = order_k_times(base_times, k)?;
    let mut events = Vec::with_capacity(effects.len() * k);
    for (effect, block) in effects.iter().zip(&blocks) {
        for &t in block {
            events.push((t, s.heisenberg_translate(effect, t, block[0])?));
        }
    }
    HomogeneousEffectHistory::new(s.dim(), events)
}

/// Result of mapping an order-k history onto an order-2 history.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReduction {
    /// `F_j = E_j^(k/2)`.
    pub reduced_effects: Vec<ComplexMatrix>,
    pub history: HomogeneousEffectHistory,
}

pub fn order_reduce(
    s: &Scenario,
    effects: &[ComplexMatrix],
    k: usize,
    base_times: &[f64],
) -> Result<OrderReduction> {
    if k == 0 {
        return Err(Error::InvalidParameter("order must be positive".into()));
    }
    let reduced_effects = if k == 2 {
        effects.to_vec()
    } else {
        effects
            .iter()
            .map(|e| psd_power(e, k as f64 / 2.0))
            .collect::<Result<Vec<_>>>()?
    };
    let history = build_order_k(s, &reduced_effects, 2, base_times)?;
    Ok(OrderReduction {
        reduced_effects,
        history,
    })
}
