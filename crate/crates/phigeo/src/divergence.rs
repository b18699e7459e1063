//! The phi-divergence, the Kullback-Leibler oracle it generalizes, and the
//! divergence-calculus routes that recover the metric and the dual
//! connection pair by differentiating the divergence numerically.
//!
//! Orientation: the geometry-facing derivative operators treat the
//! divergence with swapped arguments, `F(a, b) = D_phi(p_b || p_a)`; the
//! derivative of slot `a` twice and slot `b` once yields the plus-one
//! connection. [`phi_divergence`] itself keeps its arguments in the plain
//! order `D_phi(p || q)`.

use crate::error::{GeomError, Result};
use crate::family::PhiFamily;
use crate::linalg::{zeros_matrix, zeros_tensor3, Matrix, Tensor3};
use crate::phi::PhiFunction;
use crate::scalar::{lit, Scalar};
use crate::space::Density;

/// Default step for the third-order divergence stencils.
pub const FD_STEP_THIRD_ORDER: f64 = 1e-3;
/// Default step for the second-order divergence stencils.
pub const FD_STEP_SECOND_ORDER: f64 = 1e-4;

/// `D_phi(p || q)`: the normalized Bregman-style gap
/// `∫ [φ^{-1}(p) − φ^{-1}(q)] / (φ^{-1})'(p) dμ / ∫ u0 / (φ^{-1})'(p) dμ`,
/// with `1/(φ^{-1})'(p)` computed as `φ'(φ^{-1}(p))` so a single derivative
/// implementation is the source of truth.
///
/// Non-negative for every convex deformation and any positive `u0`; zero
/// exactly on the diagonal when the deformation is strictly convex.
pub fn phi_divergence<T: Scalar>(
    phi: &PhiFunction<T>,
    u0: &[T],
    p: &Density<T>,
    q: &Density<T>,
) -> Result<T> {
    if p.space() != q.space() {
        return Err(GeomError::InvalidDensity(
            "densities live on different spaces".into(),
        ));
    }
    let space = p.space();
    space.check_len(u0.len())?;

    let mut num = T::zero();
    let mut den = T::zero();
    for (k, (((&pk, &qk), &u0k), &mu)) in p
        .values()
        .iter()
        .zip(q.values())
        .zip(u0)
        .zip(space.weights())
        .enumerate()
    {
        let fp = phi.inv(pk);
        let fq = phi.inv(qk);
        let w = phi.d1(fp);
        if !w.is_finite() || !(w > T::zero()) {
            return Err(GeomError::SingularWeight { index: k });
        }
        num = num + (fp - fq) * w * mu;
        den = den + u0k * w * mu;
    }
    if !den.is_finite() || !(den > T::zero()) {
        return Err(GeomError::SingularWeight { index: 0 });
    }
    Ok(num / den)
}

/// Kullback-Leibler divergence `∫ p log(p/q) dμ`, the classical oracle the
/// phi-divergence reduces to for the exponential deformation with `u0 = 1`.
pub fn kl_divergence<T: Scalar>(p: &Density<T>, q: &Density<T>) -> Result<T> {
    if p.space() != q.space() {
        return Err(GeomError::InvalidDensity(
            "densities live on different spaces".into(),
        ));
    }
    let mut s = T::zero();
    for ((&pk, &qk), &mu) in p
        .values()
        .iter()
        .zip(q.values())
        .zip(p.space().weights())
    {
        s = s + pk * (pk / qk).ln() * mu;
    }
    Ok(s)
}

/// `F(a, b) = D_phi(p_b || p_a)`, the orientation the derivative operators
/// below differentiate.
fn oriented_divergence<T: Scalar>(family: &PhiFamily<T>, a: &[T], b: &[T]) -> Result<T> {
    let pa = family.point_at(a)?;
    let pb = family.point_at(b)?;
    phi_divergence(family.phi(), family.u0(), pb.density(), pa.density())
}

/// Metric from the divergence: `g_ij = −∂_{a_i} ∂_{b_j} F |_{a=b=θ}` by a
/// mixed central difference of step `h`.
pub fn divergence_metric_fd<T: Scalar>(
    family: &PhiFamily<T>,
    theta: &[T],
    h: T,
) -> Result<Matrix<T>> {
    if !(h > T::zero()) {
        return Err(GeomError::InvalidParameter("step h must be positive".into()));
    }
    let n = family.dimension();
    let mut g = zeros_matrix::<T>(n);
    let four_h2 = lit::<T>(4.0) * h * h;
    for i in 0..n {
        for j in 0..n {
            let mut acc = T::zero();
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut a = theta.to_vec();
                let mut b = theta.to_vec();
                a[i] = a[i] + lit::<T>(sa) * h;
                b[j] = b[j] + lit::<T>(sb) * h;
                let sign = lit::<T>(sa * sb);
                acc = acc + sign * oriented_divergence(family, &a, &b)?;
            }
            g[i][j] = -acc / four_h2;
        }
    }
    Ok(g)
}

/// Dual Christoffel pair from the divergence:
/// `Γ_ijk = −∂²_{a_i a_j} ∂_{b_k} F` and `Γ*_ijk = −∂_{a_k} ∂²_{b_i b_j} F`,
/// both at `a = b = θ`, by third-order central stencils of step `h`.
/// The first output approximates the plus-one connection, the second the
/// minus-one connection.
pub fn divergence_christoffels_fd<T: Scalar>(
    family: &PhiFamily<T>,
    theta: &[T],
    h: T,
) -> Result<(Tensor3<T>, Tensor3<T>)> {
    if !(h > T::zero()) {
        return Err(GeomError::InvalidParameter("step h must be positive".into()));
    }
    let n = family.dimension();
    let two_h = lit::<T>(2.0) * h;
    let mut gamma = zeros_tensor3::<T>(n);
    let mut gamma_star = zeros_tensor3::<T>(n);

    // second derivative in the differenced slot, at a fixed value of the
    // other slot
    let second = |i: usize,
                  j: usize,
                  fixed: &[T],
                  fixed_is_b: bool|
     -> Result<T> {
        let eval = |varied: &[T]| -> Result<T> {
            if fixed_is_b {
                oriented_divergence(family, varied, fixed)
            } else {
                oriented_divergence(family, fixed, varied)
            }
        };
        if i == j {
            let mut vp = theta.to_vec();
            let mut vm = theta.to_vec();
            vp[i] = vp[i] + h;
            vm[i] = vm[i] - h;
            Ok((eval(&vp)? - lit::<T>(2.0) * eval(theta)? + eval(&vm)?) / (h * h))
        } else {
            let mut acc = T::zero();
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = theta.to_vec();
                v[i] = v[i] + lit::<T>(si) * h;
                v[j] = v[j] + lit::<T>(sj) * h;
                acc = acc + lit::<T>(si * sj) * eval(&v)?;
            }
            Ok(acc / (lit::<T>(4.0) * h * h))
        }
    };

    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let mut bp = theta.to_vec();
                let mut bm = theta.to_vec();
                bp[k] = bp[k] + h;
                bm[k] = bm[k] - h;

                let v = -(second(i, j, &bp, true)? - second(i, j, &bm, true)?) / two_h;
                gamma[i][j][k] = v;
                gamma[j][i][k] = v;

                let vs = -(second(i, j, &bp, false)? - second(i, j, &bm, false)?) / two_h;
                gamma_star[i][j][k] = vs;
                gamma_star[j][i][k] = vs;
            }
        }
    }
    Ok((gamma, gamma_star))
}

/// `D_phi(target || p_θ)` together with its analytic θ-gradient
/// `∂_i = −∫ ∂f/∂θ^i φ'(φ^{-1}(target)) dμ / ∫ u0 φ'(φ^{-1}(target)) dμ`,
/// for gradient-based fitting of the family to a fixed density.
pub fn target_divergence_with_grad<T: Scalar>(
    family: &PhiFamily<T>,
    target: &Density<T>,
    theta: &[T],
) -> Result<(T, Vec<T>)> {
    if target.space() != family.space() {
        return Err(GeomError::InvalidDensity(
            "target density lives on a different space".into(),
        ));
    }
    let point = family.point_at(theta)?;
    let value = phi_divergence(family.phi(), family.u0(), target, point.density())?;

    let phi = family.phi();
    let space = family.space();
    let w: Vec<T> = target
        .values()
        .iter()
        .zip(space.weights())
        .map(|(&pk, &mu)| phi.d1(phi.inv(pk)) * mu)
        .collect();
    let den = family
        .u0()
        .iter()
        .zip(&w)
        .fold(T::zero(), |acc, (&u, &wk)| acc + u * wk);

    let grad_psi = point.grad_psi()?;
    let mut grad = Vec::with_capacity(family.dimension());
    for i in 0..family.dimension() {
        let df = point.d_f_with_grad(i, &grad_psi)?;
        let num = df
            .values()
            .iter()
            .zip(&w)
            .fold(T::zero(), |acc, (&d, &wk)| acc + d * wk);
        grad.push(-num / den);
    }
    Ok((value, grad))
}
