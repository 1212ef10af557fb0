//! The Ψ_k family of multiset functions and their incremental maintenance.
//!
//! Ψ_k(A) is k! times the sum of all monomials of total degree k over the
//! elements of the multiset A, with Ψ_0 = 1 and Ψ_k(∅) = 0 for k >= 1. In
//! particular Ψ_1(A) = L(A), the sum of the elements. These functions price
//! resources in the potential-game relaxation of a weighted congestion game
//! and build its potential, so they are evaluated exactly and updated in
//! O(kmax) rational operations per element insertion or removal.

use crate::scalar::{cmp_exact, kth_root_interval, pow_scalar, Scalar};
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PsiError {
    #[error("multiset elements must be non-negative")]
    NegativeElement,
    #[error("cannot remove from an empty aggregate")]
    RemoveFromEmpty,
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("root-interval comparison undecided at maximum precision")]
    Undecided,
}

/// Computes the vector (Ψ_0(A), ..., Ψ_kmax(A)) by inserting the elements one
/// at a time through the recurrence Ψ_k(A ∪ {b}) = Ψ_k(A) + k·b·Ψ_{k-1}(A ∪ {b}).
pub fn psi_vector(elements: &[Scalar], kmax: usize) -> Result<Vec<Scalar>, PsiError> {
    let mut agg = PsiAggregate::new(kmax);
    for w in elements {
        agg.insert(w)?;
    }
    Ok(agg.into_values())
}

/// Incrementally maintained vector (Ψ_0, ..., Ψ_kmax) of an implicit weight
/// multiset. Values are exact rationals; insert/remove cost O(kmax) each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsiAggregate {
    values: Vec<Scalar>,
    count: usize,
}

impl PsiAggregate {
    /// Empty-multiset aggregate: Ψ_0 = 1 and Ψ_k = 0 for k >= 1.
    pub fn new(kmax: usize) -> Self {
        let mut values = vec![Scalar::zero(); kmax + 1];
        values[0] = Scalar::one();
        PsiAggregate { values, count: 0 }
    }

    pub fn kmax(&self) -> usize {
        self.values.len() - 1
    }

    /// Number of elements currently held.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Ψ_k of the current multiset.
    pub fn psi(&self, k: usize) -> &Scalar {
        &self.values[k]
    }

    /// Ψ_1, i.e. the total weight L(A) of the held multiset.
    pub fn total(&self) -> &Scalar {
        &self.values[1.min(self.kmax())]
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Scalar> {
        self.values
    }

    /// Adds `w` to the multiset. Increasing k lets each update reuse the
    /// already-updated Ψ_{k-1}(A ∪ {w}).
    pub fn insert(&mut self, w: &Scalar) -> Result<(), PsiError> {
        if w.is_negative() {
            return Err(PsiError::NegativeElement);
        }
        for k in 1..self.values.len() {
            let delta = w * &self.values[k - 1] * Scalar::from_integer(k.into());
            self.values[k] += delta;
        }
        self.count += 1;
        Ok(())
    }

    /// Removes one occurrence of `w`; the caller guarantees it was inserted.
    /// Solves the insertion recurrence for the smaller set:
    /// Ψ_k(A) = Ψ_k(A ∪ {w}) - k·w·Ψ_{k-1}(A ∪ {w}), so each step needs the
    /// *old* Ψ_{k-1}, carried along before it is overwritten.
    pub fn remove(&mut self, w: &Scalar) -> Result<(), PsiError> {
        if w.is_negative() {
            return Err(PsiError::NegativeElement);
        }
        if self.count == 0 {
            return Err(PsiError::RemoveFromEmpty);
        }
        let mut old_prev = self.values[0].clone();
        for k in 1..self.values.len() {
            let cur_old = self.values[k].clone();
            let delta = w * &old_prev * Scalar::from_integer(k.into());
            self.values[k] -= delta;
            old_prev = cur_old;
        }
        self.count -= 1;
        Ok(())
    }

    /// Vector for the multiset A ∪ {w} without mutating the aggregate; this is
    /// how deviations are priced against resources the player does not yet use.
    pub fn inserted_values(&self, w: &Scalar) -> Vec<Scalar> {
        let mut out = self.values.clone();
        for k in 1..out.len() {
            let delta = w * &out[k - 1] * Scalar::from_integer(k.into());
            out[k] += delta;
        }
        out
    }
}

/// Exact check of the concavity inequality `z^a - 1 >= a(z-1)z^(a-1)` for a
/// rational exponent a ∈ (0,1) and z > 1.
///
/// Multiplying both sides by z^(1-a) > 0 turns it into
/// `z^a >= z / (z - a(z-1))`, and with a = s/t both sides are positive so the
/// comparison is equivalent to `z^s >= (z / (z - a(z-1)))^t`, a pure rational
/// comparison with no rounding.
pub fn check_concavity_claim(z: &Scalar, alpha: &Scalar) -> Result<bool, PsiError> {
    if *z <= Scalar::one() {
        return Err(PsiError::Domain("z must exceed 1".into()));
    }
    if !alpha.is_positive() || *alpha >= Scalar::one() {
        return Err(PsiError::Domain("alpha must lie in (0,1)".into()));
    }
    let s: u32 = alpha
        .numer()
        .try_into()
        .map_err(|_| PsiError::Domain("alpha numerator too large".into()))?;
    let t: u32 = alpha
        .denom()
        .try_into()
        .map_err(|_| PsiError::Domain("alpha denominator too large".into()))?;
    // z - a(z-1) ∈ (1, z), so the right-hand side is positive.
    let rhs_base = z / (z - alpha * (z - Scalar::one()));
    Ok(cmp_exact(&pow_scalar(z, s), &pow_scalar(&rhs_base, t)) != Ordering::Less)
}

/// Decides `lhs^(1/k)` versus `x^(1/k) + y^(1/k)` for non-negative rationals.
///
/// Trivial exponents and zero operands reduce to exact rational comparisons.
/// Otherwise both roots are bracketed by directed-rounding decimal intervals
/// that are refined until the two sides separate; callers only reach this
/// branch in configurations where equality is impossible, but a precision cap
/// turns a would-be infinite loop into an explicit error.
pub fn cmp_root_sum(lhs: &Scalar, x: &Scalar, y: &Scalar, k: u32) -> Result<Ordering, PsiError> {
    if lhs.is_negative() || x.is_negative() || y.is_negative() {
        return Err(PsiError::NegativeElement);
    }
    if k == 0 {
        return Err(PsiError::Domain("root order must be positive".into()));
    }
    if k == 1 {
        return Ok(lhs.cmp(&(x + y)));
    }
    if x.is_zero() {
        return Ok(lhs.cmp(y));
    }
    if y.is_zero() {
        return Ok(lhs.cmp(x));
    }
    let mut digits = 40;
    while digits <= 2560 {
        let (l_lo, l_hi) = kth_root_interval(lhs, k, digits);
        let (x_lo, x_hi) = kth_root_interval(x, k, digits);
        let (y_lo, y_hi) = kth_root_interval(y, k, digits);
        let sum_lo = &x_lo + &y_lo;
        let sum_hi = &x_hi + &y_hi;
        if cmp_exact(&l_hi, &sum_lo) != Ordering::Greater {
            return Ok(Ordering::Less);
        }
        if cmp_exact(&l_lo, &sum_hi) != Ordering::Less {
            return Ok(Ordering::Greater);
        }
        digits *= 2;
    }
    Err(PsiError::Undecided)
}

/// Checks Ψ-superadditivity, `psi_union <= (psi_single^(1/k) + psi_rest^(1/k))^k`,
/// by comparing k-th roots. Equality happens exactly when one side of the
/// union is empty (or k = 1), and those cases are decided rationally.
pub fn check_root_superadditivity(
    psi_union: &Scalar,
    psi_single: &Scalar,
    psi_rest: &Scalar,
    k: u32,
) -> Result<bool, PsiError> {
    Ok(cmp_root_sum(psi_union, psi_single, psi_rest, k)? != Ordering::Greater)
}

/// Minkowski spot check: `sum_t (a_t + b_t)^k <= ((sum a^k)^(1/k) + (sum b^k)^(1/k))^k`.
///
/// Equality holds iff the vectors are proportional, which is detected exactly
/// before falling back to the strict interval comparison.
pub fn check_minkowski(alphas: &[Scalar], betas: &[Scalar], k: u32) -> Result<bool, PsiError> {
    if alphas.len() != betas.len() {
        return Err(PsiError::Domain("vector lengths differ".into()));
    }
    if alphas.iter().chain(betas.iter()).any(|v| v.is_negative()) {
        return Err(PsiError::NegativeElement);
    }
    if k == 0 {
        return Err(PsiError::Domain("exponent must be positive".into()));
    }
    let lhs: Scalar = alphas
        .iter()
        .zip(betas)
        .map(|(a, b)| pow_scalar(&(a + b), k))
        .sum();
    let x: Scalar = alphas.iter().map(|a| pow_scalar(a, k)).sum();
    let y: Scalar = betas.iter().map(|b| pow_scalar(b, k)).sum();
    if k == 1 || x.is_zero() || y.is_zero() || proportional(alphas, betas) {
        // Equality configuration: the right-hand side collapses to a rational.
        return Ok(lhs <= sum_of_roots_exact(&x, &y, k));
    }
    Ok(cmp_root_sum(&lhs, &x, &y, k)? != Ordering::Greater)
}

// In the equality configurations above, (x^(1/k) + y^(1/k))^k collapses to a
// rational: one operand is zero, k = 1, or proportional vectors make
// lhs = x + y hold... except proportionality gives lhs = (1+r)^k * x with
// y = r^k x, so reconstruct it from the exact proportionality ratio instead.
fn sum_of_roots_exact(x: &Scalar, y: &Scalar, k: u32) -> Scalar {
    if k == 1 {
        return x + y;
    }
    if x.is_zero() {
        return y.clone();
    }
    if y.is_zero() {
        return x.clone();
    }
    // Proportional case: y = r^k * x for the rational ratio r of the vectors,
    // recovered here as the exact k-th root of y/x (which must be rational).
    let ratio = y / x;
    let r_num = num_integer::Roots::nth_root(ratio.numer().magnitude(), k);
    let r_den = num_integer::Roots::nth_root(ratio.denom().magnitude(), k);
    let r = Scalar::new(r_num.into(), r_den.into());
    debug_assert_eq!(pow_scalar(&r, k), ratio);
    pow_scalar(&(Scalar::one() + r), k) * x
}

fn proportional(alphas: &[Scalar], betas: &[Scalar]) -> bool {
    // True when one vector is a scalar multiple of the other.
    let a_zero = alphas.iter().all(Zero::is_zero);
    let b_zero = betas.iter().all(Zero::is_zero);
    if a_zero || b_zero {
        return true;
    }
    let mut ratio: Option<Scalar> = None;
    for (a, b) in alphas.iter().zip(betas) {
        match (a.is_zero(), b.is_zero()) {
            (true, true) => continue,
            (true, false) | (false, true) => return false,
            (false, false) => {
                let r = b / a;
                match &ratio {
                    None => ratio = Some(r),
                    Some(prev) if *prev == r => {}
                    Some(_) => return false,
                }
            }
        }
    }
    true
}
