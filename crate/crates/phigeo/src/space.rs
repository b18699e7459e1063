//! Finite measure space, strictly positive densities, tangent vectors as
//! functions on the sample points, and the expectation functionals
//!
//! ```text
//! E1[h] = ∫ h φ'(f) dμ / ∫ u0 φ'(f) dμ       (and E2, E3 with φ'', φ''')
//! ```
//!
//! that every geometric quantity in this crate is built from.

use crate::error::{GeomError, Result};
use crate::phi::PhiFunction;
use crate::scalar::{as_f64, lit, Scalar};

/// Entries of a density below this floor are rejected rather than clamped:
/// the inverse deformation may diverge at 0.
pub const POSITIVITY_FLOOR: f64 = 1e-12;
/// Loaded data may be off normalization by at most this much before it is
/// treated as a data error instead of float drift.
pub const DATA_NORMALIZATION_TOL: f64 = 1e-6;

/// Finite measure space: `m >= 2` points with strictly positive weights.
/// The counting measure (all weights 1) is the default.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace<T> {
    weights: Vec<T>,
}

impl<T: Scalar> FiniteSpace<T> {
    /// Counting measure on `m` points.
    pub fn counting(m: usize) -> Result<Self> {
        Self::with_weights(vec![T::one(); m])
    }

    /// Explicit weights, fixed at construction.
    pub fn with_weights(weights: Vec<T>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(GeomError::InvalidSpace(format!(
                "need at least 2 sample points, got {}",
                weights.len()
            )));
        }
        if let Some((k, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| !(w > T::zero()) || !w.is_finite())
        {
            return Err(GeomError::InvalidSpace(format!(
                "weight at index {k} is {w}; weights must be positive and finite"
            )));
        }
        Ok(FiniteSpace { weights })
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `∫ v dμ` over the finite space.
    pub fn integrate(&self, values: &[T]) -> T {
        self.weights
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size() {
            return Err(GeomError::LengthMismatch {
                expected: self.size(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Strictly positive density normalized against the space's measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Density<T> {
    space: FiniteSpace<T>,
    values: Vec<T>,
}

impl<T: Scalar> Density<T> {
    /// Normalizing constructor: entries must clear the positivity floor;
    /// the mass is then rescaled to exactly 1 to absorb float drift.
    pub fn new(space: FiniteSpace<T>, values: Vec<T>) -> Result<Self> {
        space.check_len(values.len())?;
        let floor = lit::<T>(POSITIVITY_FLOOR);
        if let Some((k, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > floor) || !v.is_finite())
        {
            return Err(GeomError::InvalidDensity(format!(
                "entry {k} is {v}; density entries must exceed {POSITIVITY_FLOOR}"
            )));
        }
        let mass = space.integrate(&values);
        if !mass.is_finite() || mass <= T::zero() {
            return Err(GeomError::InvalidDensity(format!("total mass is {mass}")));
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(Density { space, values })
    }

    /// Loader-facing constructor: rejects data whose mass is off by more
    /// than [`DATA_NORMALIZATION_TOL`] before normalizing, so data errors
    /// are distinguished from float drift.
    pub fn from_data(space: FiniteSpace<T>, values: Vec<T>) -> Result<Self> {
        space.check_len(values.len())?;
        let mass = space.integrate(&values);
        if (mass - T::one()).abs() > lit(DATA_NORMALIZATION_TOL) {
            return Err(GeomError::InvalidDensity(format!(
                "input mass {mass} deviates from 1 by more than {DATA_NORMALIZATION_TOL}"
            )));
        }
        Self::new(space, values)
    }

    pub fn space(&self) -> &FiniteSpace<T> {
        &self.space
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &Density<T>) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// A tangent vector represented as a function on the sample points
/// (an element of the span of the coordinate fields `∂f/∂θ^i`).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T> {
    space: FiniteSpace<T>,
    values: Vec<T>,
}

impl<T: Scalar> TangentVector<T> {
    pub fn new(space: FiniteSpace<T>, values: Vec<T>) -> Result<Self> {
        space.check_len(values.len())?;
        Ok(TangentVector { space, values })
    }

    pub fn space(&self) -> &FiniteSpace<T> {
        &self.space
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `a * self + b * other`, pointwise.
    pub fn linear_combination(&self, a: T, other: &TangentVector<T>, b: T) -> Result<Self> {
        self.space.check_len(other.values.len())?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(TangentVector {
            space: self.space.clone(),
            values,
        })
    }
}

/// Which derivative of the deformation weights the expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectationOrder {
    First,
    Second,
    Third,
}

/// Precomputed expectation weights at a fixed `f`: `w_k = μ_k φ^(r)(f_k)`
/// for r = 1, 2, 3, plus the shared denominator `∫ u0 φ'(f) dμ`.
#[derive(Debug, Clone)]
pub struct ExpectationKernel<T> {
    w1: Vec<T>,
    w2: Vec<T>,
    w3: Vec<T>,
    denom: T,
}

impl<T: Scalar> ExpectationKernel<T> {
    pub fn new(space: &FiniteSpace<T>, phi: &PhiFunction<T>, f: &[T], u0: &[T]) -> Result<Self> {
        space.check_len(f.len())?;
        space.check_len(u0.len())?;
        let m = space.size();
        let mut w1 = Vec::with_capacity(m);
        let mut w2 = Vec::with_capacity(m);
        let mut w3 = Vec::with_capacity(m);
        for (&fk, &mu) in f.iter().zip(space.weights()) {
            let b = phi.eval_bundle(fk)?;
            w1.push(mu * b.d1);
            w2.push(mu * b.d2);
            w3.push(mu * b.d3);
        }
        let denom = dot(u0, &w1);
        let floor = lit::<T>(1e-300).max(T::min_positive_value());
        if !denom.is_finite() || !(denom > floor) {
            return Err(GeomError::DegenerateWeight {
                denom: as_f64(denom),
            });
        }
        Ok(ExpectationKernel { w1, w2, w3, denom })
    }

    pub fn denom(&self) -> T {
        self.denom
    }

    pub fn expect(&self, order: ExpectationOrder, h: &[T]) -> T {
        let w = match order {
            ExpectationOrder::First => &self.w1,
            ExpectationOrder::Second => &self.w2,
            ExpectationOrder::Third => &self.w3,
        };
        dot(h, w) / self.denom
    }

    pub fn e1(&self, h: &[T]) -> T {
        self.expect(ExpectationOrder::First, h)
    }

    pub fn e2(&self, h: &[T]) -> T {
        self.expect(ExpectationOrder::Second, h)
    }

    pub fn e3(&self, h: &[T]) -> T {
        self.expect(ExpectationOrder::Third, h)
    }

    /// `E2[a b]` without materializing the product.
    pub fn e2_prod(&self, a: &[T], b: &[T]) -> T {
        triple_dot(a, b, &self.w2) / self.denom
    }

    /// `E3[a b c]`.
    pub fn e3_prod(&self, a: &[T], b: &[T], c: &[T]) -> T {
        a.iter()
            .zip(b)
            .zip(c)
            .zip(&self.w3)
            .fold(T::zero(), |acc, (((&x, &y), &z), &w)| acc + x * y * z * w)
            / self.denom
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn triple_dot<T: Scalar>(a: &[T], b: &[T], c: &[T]) -> T {
    a.iter()
        .zip(b)
        .zip(c)
        .fold(T::zero(), |acc, ((&x, &y), &z)| acc + x * y * z)
}

/// `E^(order)[h] = ∫ h φ^(order)(f) dμ / ∫ u0 φ'(f) dμ`.
pub fn expectation<T: Scalar>(
    order: ExpectationOrder,
    space: &FiniteSpace<T>,
    phi: &PhiFunction<T>,
    f: &[T],
    u0: &[T],
    h: &[T],
) -> Result<T> {
    space.check_len(h.len())?;
    let kernel = ExpectationKernel::new(space, phi, f, u0)?;
    Ok(kernel.expect(order, h))
}

/// Semi-inner product `E2[X Y]` between tangent vectors at the point with
/// chart value `f`. Always symmetric; positive semi-definite whenever the
/// deformation is convex.
pub fn semi_inner_product<T: Scalar>(
    space: &FiniteSpace<T>,
    phi: &PhiFunction<T>,
    f: &[T],
    u0: &[T],
    x: &TangentVector<T>,
    y: &TangentVector<T>,
) -> Result<T> {
    space.check_len(x.values().len())?;
    space.check_len(y.values().len())?;
    let kernel = ExpectationKernel::new(space, phi, f, u0)?;
    Ok(kernel.e2_prod(x.values(), y.values()))
}
