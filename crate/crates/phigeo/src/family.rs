//! Parametric families `p(t; θ) = φ(c + Σ θ^i u_i − ψ(θ) u0)` centered at a
//! density `p = φ(c)`, together with the normalizer solve and the chart
//! derivatives the geometry layer consumes.

use crate::error::{GeomError, Result};
use crate::phi::PhiFunction;
use crate::scalar::{as_f64, lit, Scalar};
use crate::space::{Density, ExpectationKernel, FiniteSpace, TangentVector};

/// Bracket expansion cap for the normalizer solve.
const BRACKET_CAP: f64 = 1e6;

/// Project a raw direction onto the subspace satisfying the centering
/// condition `∫ u φ'(c) dμ = 0`, by removing its `u0` component.
///
/// Errors with [`GeomError::DegenerateDirection`] when the input is
/// (numerically) parallel to `u0`.
pub fn orthogonalize_direction<T: Scalar>(
    space: &FiniteSpace<T>,
    phi: &PhiFunction<T>,
    center: &[T],
    u0: &[T],
    raw: &[T],
) -> Result<Vec<T>> {
    space.check_len(center.len())?;
    space.check_len(u0.len())?;
    space.check_len(raw.len())?;
    let w: Vec<T> = center
        .iter()
        .zip(space.weights())
        .map(|(&c, &mu)| phi.d1(c) * mu)
        .collect();
    let denom = dot(u0, &w);
    let floor = lit::<T>(1e-300).max(T::min_positive_value());
    if !denom.is_finite() || !(denom > floor) {
        return Err(GeomError::DegenerateWeight {
            denom: as_f64(denom),
        });
    }
    let coef = dot(raw, &w) / denom;
    let out: Vec<T> = raw
        .iter()
        .zip(u0)
        .map(|(&r, &u)| r - coef * u)
        .collect();
    let raw_scale = raw
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()))
        .max(T::one());
    let out_scale = out.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if out_scale <= lit::<T>(1e-12) * raw_scale {
        return Err(GeomError::DegenerateDirection);
    }
    Ok(out)
}

/// A chart on the manifold of positive densities: center, reference
/// direction `u0`, and `n` independent direction functions, all fixed at
/// construction. Immutable and safe to share across threads.
#[derive(Debug, Clone)]
pub struct PhiFamily<T> {
    space: FiniteSpace<T>,
    phi: PhiFunction<T>,
    center: Vec<T>,
    u0: Vec<T>,
    directions: Vec<Vec<T>>,
}

impl<T: Scalar> PhiFamily<T> {
    /// Build a family centered at `center_density`. Raw directions are
    /// always passed through [`orthogonalize_direction`], so the centering
    /// condition is a constructor guarantee rather than a caller
    /// obligation. `u0` defaults to the constant function 1.
    pub fn new(
        phi: PhiFunction<T>,
        center_density: &Density<T>,
        u0: Option<Vec<T>>,
        raw_directions: &[Vec<T>],
    ) -> Result<Self> {
        let space = center_density.space().clone();
        let u0 = match u0 {
            Some(u0) => {
                space.check_len(u0.len())?;
                if let Some((k, &v)) = u0
                    .iter()
                    .enumerate()
                    .find(|(_, &v)| !(v > T::zero()) || !v.is_finite())
                {
                    return Err(GeomError::InvalidParameter(format!(
                        "u0 entry {k} is {v}; u0 must be positive and finite"
                    )));
                }
                u0
            }
            None => vec![T::one(); space.size()],
        };
        if raw_directions.is_empty() {
            return Err(GeomError::InvalidParameter(
                "family needs at least one direction".into(),
            ));
        }
        let center: Vec<T> = center_density.values().iter().map(|&p| phi.inv(p)).collect();
        if let Some(&c) = center.iter().find(|c| !c.is_finite()) {
            return Err(GeomError::InvalidDensity(format!(
                "inverse deformation of the center is non-finite ({c})"
            )));
        }

        let directions: Vec<Vec<T>> = raw_directions
            .iter()
            .map(|raw| orthogonalize_direction(&space, &phi, &center, &u0, raw))
            .collect::<Result<_>>()?;

        // independence of the direction set, via the L2(mu) Gram spectrum
        let n = directions.len();
        let mut gram = crate::linalg::zeros_matrix::<T>(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for ((&a, &b), &mu) in directions[i]
                    .iter()
                    .zip(&directions[j])
                    .zip(space.weights())
                {
                    s = s + a * b * mu;
                }
                gram[i][j] = s;
            }
        }
        let (eigs, _) = crate::linalg::sym_eigen(&gram);
        let lambda_max = eigs[n - 1];
        let rank = eigs
            .iter()
            .filter(|&&l| l > lit::<T>(1e-10) * lambda_max)
            .count();
        if rank < n {
            return Err(GeomError::RankDeficientDirections { rank, expected: n });
        }

        Ok(PhiFamily {
            space,
            phi,
            center,
            u0,
            directions,
        })
    }

    pub fn space(&self) -> &FiniteSpace<T> {
        &self.space
    }

    pub fn phi(&self) -> &PhiFunction<T> {
        &self.phi
    }

    /// Chart value of the center: `c = φ^{-1}(p)`.
    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn center_density(&self) -> Result<Density<T>> {
        let values = self.center.iter().map(|&c| self.phi.eval(c)).collect();
        Density::new(self.space.clone(), values)
    }

    pub fn u0(&self) -> &[T] {
        &self.u0
    }

    /// Orthogonalized direction functions, one row per parameter.
    pub fn directions(&self) -> &[Vec<T>] {
        &self.directions
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    fn check_theta(&self, theta: &[T]) -> Result<()> {
        if theta.len() != self.dimension() {
            return Err(GeomError::LengthMismatch {
                expected: self.dimension(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(GeomError::InvalidParameter("theta must be finite".into()));
        }
        Ok(())
    }

    /// `c + Σ θ^i u_i`, the chart value before the normalizer term.
    fn unnormalized_chart(&self, theta: &[T]) -> Vec<T> {
        let mut f0 = self.center.clone();
        for (t, u) in theta.iter().zip(&self.directions) {
            for (f, &uk) in f0.iter_mut().zip(u) {
                *f = *f + *t * uk;
            }
        }
        f0
    }

    /// Solve for the unique `ψ` with `∫ φ(c + Σ θ^i u_i − ψ u0) dμ = 1`.
    ///
    /// The residual is strictly decreasing in `ψ`, so a bracketed bisection
    /// is unconditionally safe; a short Newton polish then pushes the root
    /// to machine precision, which the finite-difference consumers of `ψ`
    /// rely on.
    pub fn solve_psi(&self, theta: &[T]) -> Result<T> {
        self.check_theta(theta)?;
        let f0 = self.unnormalized_chart(theta);
        self.solve_psi_from_chart(&f0)
    }

    fn solve_psi_from_chart(&self, f0: &[T]) -> Result<T> {
        let residual = |psi: T| -> T {
            let mut s = T::zero();
            for ((&f, &u), &mu) in f0.iter().zip(&self.u0).zip(self.space.weights()) {
                s = s + self.phi.eval(f - psi * u) * mu;
            }
            s - T::one()
        };

        let cap = lit::<T>(BRACKET_CAP);
        let mut lo = -T::one();
        let mut hi = T::one();
        while residual(hi) > T::zero() {
            lo = hi;
            hi = hi * lit(2.0);
            if hi > cap {
                return Err(GeomError::UnboundedNormalizer { cap: BRACKET_CAP });
            }
        }
        while residual(lo) < T::zero() {
            hi = lo;
            lo = lo * lit(2.0);
            if lo < -cap {
                return Err(GeomError::UnboundedNormalizer { cap: BRACKET_CAP });
            }
        }

        for _ in 0..60 {
            let mid = (lo + hi) / lit(2.0);
            if mid == lo || mid == hi {
                break;
            }
            if residual(mid) >= T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        let mut psi = (lo + hi) / lit(2.0);
        for _ in 0..3 {
            let r = residual(psi);
            if r == T::zero() {
                break;
            }
            let mut dr = T::zero();
            for ((&f, &u), &mu) in f0.iter().zip(&self.u0).zip(self.space.weights()) {
                dr = dr - u * self.phi.d1(f - psi * u) * mu;
            }
            if !dr.is_finite() || dr >= T::zero() {
                break;
            }
            let next = psi - r / dr;
            if !next.is_finite() {
                break;
            }
            psi = next.max(lo).min(hi);
        }

        let tol = lit::<T>(1e-12).max(T::epsilon() * lit(64.0));
        let r = residual(psi);
        if r.abs() > tol {
            return Err(GeomError::NormalizerResidual {
                residual: as_f64(r),
            });
        }
        Ok(psi)
    }

    /// Gradient of the normalizer: `∂ψ/∂θ^i = E1[u_i]` at the point.
    pub fn grad_psi(&self, theta: &[T]) -> Result<Vec<T>> {
        self.point_at(theta)?.grad_psi()
    }

    /// Assemble the manifold point at `theta`.
    pub fn point_at(&self, theta: &[T]) -> Result<ManifoldPoint<'_, T>> {
        self.check_theta(theta)?;
        let f0 = self.unnormalized_chart(theta);
        let psi = self.solve_psi_from_chart(&f0)?;
        if psi < lit(-1e-9) {
            return Err(GeomError::InvalidParameter(format!(
                "normalizer {psi} is negative; the deformation is not a valid phi-function"
            )));
        }
        let f: Vec<T> = f0
            .iter()
            .zip(&self.u0)
            .map(|(&f0k, &u)| f0k - psi * u)
            .collect();
        let density = Density::new(
            self.space.clone(),
            f.iter().map(|&fk| self.phi.eval(fk)).collect(),
        )?;
        Ok(ManifoldPoint {
            family: self,
            theta: theta.to_vec(),
            psi,
            f,
            density,
        })
    }
}

/// A point of the family: parameters, normalizer value, chart value
/// `f = φ^{-1}(p_θ)` and the density itself.
#[derive(Debug, Clone)]
pub struct ManifoldPoint<'f, T> {
    family: &'f PhiFamily<T>,
    theta: Vec<T>,
    psi: T,
    f: Vec<T>,
    density: Density<T>,
}

impl<'f, T: Scalar> ManifoldPoint<'f, T> {
    pub fn family(&self) -> &'f PhiFamily<T> {
        self.family
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn psi(&self) -> T {
        self.psi
    }

    pub fn f(&self) -> &[T] {
        &self.f
    }

    pub fn density(&self) -> &Density<T> {
        &self.density
    }

    /// Expectation weights at this point.
    pub fn kernel(&self) -> Result<ExpectationKernel<T>> {
        ExpectationKernel::new(
            self.family.space(),
            self.family.phi(),
            &self.f,
            self.family.u0(),
        )
    }

    /// `∂ψ/∂θ^i = E1[u_i]`, component-wise.
    pub fn grad_psi(&self) -> Result<Vec<T>> {
        let kernel = self.kernel()?;
        Ok(self
            .family
            .directions()
            .iter()
            .map(|u| kernel.e1(u))
            .collect())
    }

    /// Coordinate tangent field `∂f/∂θ^i = u_i − (∂ψ/∂θ^i) u0` as a
    /// function on the sample points.
    pub fn d_f(&self, i: usize) -> Result<TangentVector<T>> {
        let grad = self.grad_psi()?;
        self.d_f_with_grad(i, &grad)
    }

    pub(crate) fn d_f_with_grad(&self, i: usize, grad_psi: &[T]) -> Result<TangentVector<T>> {
        let u = self
            .family
            .directions()
            .get(i)
            .ok_or_else(|| GeomError::InvalidParameter(format!("direction index {i}")))?;
        let gi = grad_psi[i];
        let values = u
            .iter()
            .zip(self.family.u0())
            .map(|(&uk, &u0k)| uk - gi * u0k)
            .collect();
        TangentVector::new(self.family.space().clone(), values)
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli_exp() -> PhiFamily<f64> {
        let space = FiniteSpace::counting(2).unwrap();
        let p = Density::new(space, vec![0.5, 0.5]).unwrap();
        PhiFamily::new(
            PhiFunction::exponential(),
            &p,
            None,
            &[vec![1.0, 0.0]],
        )
        .unwrap()
    }

    fn kaniadakis_family() -> PhiFamily<f64> {
        let space = FiniteSpace::counting(4).unwrap();
        let p = Density::new(space, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        PhiFamily::new(
            PhiFunction::kaniadakis(0.5).unwrap(),
            &p,
            None,
            &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]],
        )
        .unwrap()
    }

    /// log-partition of the tilted exponential family, closed form.
    fn exp_log_partition(p: &[f64], u: &[f64], theta: f64) -> f64 {
        p.iter()
            .zip(u)
            .map(|(&pk, &uk)| pk * (theta * uk).exp())
            .sum::<f64>()
            .ln()
    }

    #[test]
    fn orthogonalize_keeps_centered_input_unchanged() {
        let space = FiniteSpace::counting(2).unwrap();
        let phi = PhiFunction::exponential();
        let c = [0.5_f64.ln(), 0.5_f64.ln()];
        let u0 = [1.0, 1.0];
        let raw = [0.7, -0.7]; // already centered under the uniform density
        let out = orthogonalize_direction(&space, &phi, &c, &u0, &raw).unwrap();
        assert!((out[0] - 0.7).abs() < 1e-15);
        assert!((out[1] + 0.7).abs() < 1e-15);
    }

    #[test]
    fn orthogonalize_rejects_u0_multiples() {
        let space = FiniteSpace::counting(2).unwrap();
        let phi = PhiFunction::exponential();
        let c = [0.5_f64.ln(), 0.5_f64.ln()];
        let u0 = [1.0, 1.0];
        let err = orthogonalize_direction(&space, &phi, &c, &u0, &u0).unwrap_err();
        assert!(matches!(err, GeomError::DegenerateDirection));
    }

    #[test]
    fn orthogonalize_indicator_on_uniform_two_points() {
        let space = FiniteSpace::counting(2).unwrap();
        let phi = PhiFunction::exponential();
        let c = [0.5_f64.ln(), 0.5_f64.ln()];
        let u0 = [1.0, 1.0];
        let out = orthogonalize_direction(&space, &phi, &c, &u0, &[1.0, 0.0]).unwrap();
        assert!((out[0] - 0.5).abs() < 1e-15);
        assert!((out[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn centering_condition_holds_after_construction() {
        for family in [bernoulli_exp(), kaniadakis_family()] {
            for u in family.directions() {
                let integral: f64 = u
                    .iter()
                    .zip(family.center())
                    .zip(family.space().weights())
                    .map(|((&uk, &ck), &mu)| uk * family.phi().d1(ck) * mu)
                    .sum();
                assert!(integral.abs() < 1e-10, "condition violated: {integral}");
            }
        }
    }

    #[test]
    fn duplicate_directions_are_rejected() {
        let space = FiniteSpace::counting(3).unwrap();
        let p = Density::new(space, vec![0.2, 0.3, 0.5]).unwrap();
        let err = PhiFamily::new(
            PhiFunction::exponential(),
            &p,
            None,
            &[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, GeomError::RankDeficientDirections { .. }));
    }

    #[test]
    fn psi_at_origin_is_zero() {
        for family in [bernoulli_exp(), kaniadakis_family()] {
            let psi = family.solve_psi(&vec![0.0; family.dimension()]).unwrap();
            assert!(psi.abs() < 1e-12, "psi(0) = {psi}");
        }
    }

    #[test]
    fn exponential_normalizer_matches_log_partition() {
        let family = bernoulli_exp();
        let p = family.center_density().unwrap();
        let u = &family.directions()[0];
        for theta in [-2.0, -0.5, 0.0, 0.7, 1.9] {
            let psi = family.solve_psi(&[theta]).unwrap();
            let oracle = exp_log_partition(p.values(), u, theta);
            assert!(
                (psi - oracle).abs() < 1e-10,
                "psi({theta}) = {psi} vs {oracle}"
            );
        }
    }

    #[test]
    fn defining_residual_vanishes_at_solution() {
        let family = kaniadakis_family();
        for theta in [[0.3, -0.8], [1.2, 0.4], [-0.9, -0.2]] {
            let point = family.point_at(&theta).unwrap();
            let mass = family.space().integrate(
                &point
                    .f()
                    .iter()
                    .map(|&fk| family.phi().eval(fk))
                    .collect::<Vec<_>>(),
            );
            assert!((mass - 1.0).abs() < 1e-12, "residual {}", mass - 1.0);
            assert!(point.psi() >= -1e-9);
        }
    }

    #[test]
    fn grad_psi_vanishes_at_origin() {
        let family = kaniadakis_family();
        let grad = family.grad_psi(&[0.0, 0.0]).unwrap();
        for g in grad {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_grad_matches_tilted_mean() {
        let family = bernoulli_exp();
        let p = family.center_density().unwrap();
        let u = &family.directions()[0];
        for theta in [-1.5, 0.2, 0.9] {
            let grad = family.grad_psi(&[theta]).unwrap()[0];
            let z: f64 = p
                .values()
                .iter()
                .zip(u)
                .map(|(&pk, &uk)| pk * (theta * uk).exp())
                .sum();
            let tilted_mean: f64 = p
                .values()
                .iter()
                .zip(u)
                .map(|(&pk, &uk)| pk * (theta * uk).exp() * uk)
                .sum::<f64>()
                / z;
            assert!((grad - tilted_mean).abs() < 1e-10);
        }
    }

    #[test]
    fn grad_psi_matches_finite_differences() {
        let family = kaniadakis_family();
        let theta = [0.4, -0.6];
        let grad = family.grad_psi(&theta).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut tp = theta;
            let mut tm = theta;
            tp[i] += h;
            tm[i] -= h;
            let fd =
                (family.solve_psi(&tp).unwrap() - family.solve_psi(&tm).unwrap()) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() < 1e-6,
                "component {i}: {} vs {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn point_at_origin_recovers_center() {
        let family = kaniadakis_family();
        let point = family.point_at(&[0.0, 0.0]).unwrap();
        let center = family.center_density().unwrap();
        assert!(point.density().max_abs_diff(&center) < 1e-13);
    }

    #[test]
    fn exponential_tilt_is_softmax() {
        let family = bernoulli_exp();
        let point = family.point_at(&[0.5]).unwrap();
        // direction is (1/2, -1/2), so p_theta(1) = sigmoid(theta)
        let sigmoid = 1.0 / (1.0 + (-0.5_f64).exp());
        assert!((point.density().values()[0] - sigmoid).abs() < 1e-12);
        assert!(point.density().values().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn coordinate_fields_at_origin_equal_directions() {
        let family = kaniadakis_family();
        let point = family.point_at(&[0.0, 0.0]).unwrap();
        for i in 0..2 {
            let df = point.d_f(i).unwrap();
            for (&got, &want) in df.values().iter().zip(&family.directions()[i]) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coordinate_fields_have_zero_first_expectation() {
        let family = kaniadakis_family();
        let point = family.point_at(&[0.7, -0.3]).unwrap();
        let kernel = point.kernel().unwrap();
        for i in 0..2 {
            let df = point.d_f(i).unwrap();
            let e1 = kernel.e1(df.values());
            assert!(e1.abs() < 1e-9, "E1[df_{i}] = {e1}");
        }
    }

    #[test]
    fn coordinate_fields_match_finite_differences_of_chart() {
        let family = kaniadakis_family();
        let theta = [0.4, -0.6];
        let point = family.point_at(&theta).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let df = point.d_f(i).unwrap();
            let mut tp = theta;
            let mut tm = theta;
            tp[i] += h;
            tm[i] -= h;
            let fp = family.point_at(&tp).unwrap();
            let fm = family.point_at(&tm).unwrap();
            for ((&d, &fpk), &fmk) in df.values().iter().zip(fp.f()).zip(fm.f()) {
                let fd = (fpk - fmk) / (2.0 * h);
                assert!((d - fd).abs() < 1e-6, "df_{i}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn normalizer_is_convex_and_nonnegative_along_segments() {
        let family = kaniadakis_family();
        let pairs = [([0.9, -0.7], [-0.5, 0.8]), ([1.5, 0.2], [0.1, -1.1])];
        for (a, b) in pairs {
            let pa = family.solve_psi(&a).unwrap();
            let pb = family.solve_psi(&b).unwrap();
            assert!(pa >= 0.0 && pb >= 0.0);
            for lambda in [0.25, 0.5, 0.75] {
                let mid = [
                    lambda * a[0] + (1.0 - lambda) * b[0],
                    lambda * a[1] + (1.0 - lambda) * b[1],
                ];
                let pm = family.solve_psi(&mid).unwrap();
                assert!(pm <= lambda * pa + (1.0 - lambda) * pb + 1e-10);
            }
        }
    }

    #[test]
    fn theta_dimension_is_checked() {
        let family = bernoulli_exp();
        assert!(family.solve_psi(&[0.1, 0.2]).is_err());
        assert!(family.solve_psi(&[f64::NAN]).is_err());
    }
}
