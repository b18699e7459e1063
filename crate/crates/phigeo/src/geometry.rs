//! Metric, connection coefficients, skewness, curvature, geodesics and
//! natural-gradient steps at points of a family.
//!
//! Index conventions: Christoffel symbols of the first kind are stored as
//! `gamma[i][j][k]`, symmetric in `(i, j)`. The Riemann tensor is stored as
//! `riemann[l][k][i][j]` for `R^l_{kij}`.

use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::family::{ManifoldPoint, PhiFamily};
use crate::linalg::{
    mat_vec, max_abs_diff_matrix, max_abs_matrix, spd_certify_invert, zeros_matrix, zeros_tensor3,
    zeros_tensor4, Matrix, Tensor3, Tensor4,
};
use crate::scalar::{lit, Scalar};
use crate::space::ExpectationKernel;

/// Default relative step for metric derivatives (Levi-Civita, duality
/// checks, curvature); the absolute step is this times `max(1, |theta|_inf)`.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Central-difference step scaled to the working point.
pub fn default_fd_step<T: Scalar>(theta: &[T]) -> T {
    let scale = theta
        .iter()
        .fold(T::one(), |acc, &t| acc.max(t.abs()));
    lit::<T>(DEFAULT_FD_STEP) * scale
}

/// Metric at a point, in the `E2[df df]` form, with its certified inverse.
#[derive(Debug, Clone, Serialize)]
pub struct MetricTensor<T> {
    pub theta: Vec<T>,
    pub g: Matrix<T>,
    pub g_inv: Matrix<T>,
}

/// Which connection a Christoffel tensor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind<T> {
    Plus1,
    Minus1,
    Alpha(T),
    LeviCivita,
}

/// Christoffel symbols of the first kind at a point, indexed `(i, j, k)`
/// and symmetric in the first two slots (all connections here are
/// torsion-free).
#[derive(Debug, Clone, Serialize)]
pub struct ChristoffelTensor<T> {
    pub theta: Vec<T>,
    pub kind: ConnectionKind<T>,
    pub gamma: Tensor3<T>,
}

/// Shared per-point quantities: expectation kernel, coordinate fields
/// `df_i = u_i − ψ_i u0`, the normalizer Hessian, and the recurring
/// moments `E2[u0 df_k]`.
pub(crate) struct PointOps<T> {
    pub kernel: ExpectationKernel<T>,
    pub grad_psi: Vec<T>,
    pub hess_psi: Matrix<T>,
    pub df: Vec<Vec<T>>,
    pub u0_df: Vec<T>,
    n: usize,
}

impl<T: Scalar> PointOps<T> {
    pub fn new(point: &ManifoldPoint<'_, T>) -> Result<Self> {
        let family = point.family();
        let n = family.dimension();
        let u0 = family.u0();
        let kernel = point.kernel()?;

        let grad_psi: Vec<T> = family.directions().iter().map(|u| kernel.e1(u)).collect();
        let df: Vec<Vec<T>> = (0..n)
            .map(|i| {
                family.directions()[i]
                    .iter()
                    .zip(u0)
                    .map(|(&uk, &u0k)| uk - grad_psi[i] * u0k)
                    .collect()
            })
            .collect();

        let u0_df: Vec<T> = df.iter().map(|d| kernel.e2_prod(u0, d)).collect();

        // Hessian of the normalizer by implicit differentiation of
        // ψ_i = E1[u_i]; algebraically symmetric, mirrored to keep the
        // downstream tensors exactly index-symmetric.
        let mut hess_psi = zeros_matrix::<T>(n);
        for i in 0..n {
            for j in 0..n {
                let ui = &family.directions()[i];
                hess_psi[i][j] = kernel.e2_prod(ui, &df[j]) - grad_psi[i] * u0_df[j];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = (hess_psi[i][j] + hess_psi[j][i]) / lit(2.0);
                hess_psi[i][j] = avg;
                hess_psi[j][i] = avg;
            }
        }

        Ok(PointOps {
            kernel,
            grad_psi,
            hess_psi,
            df,
            u0_df,
            n,
        })
    }

    /// Second chart derivative `∂²f/∂θ^i∂θ^j = −ψ_ij u0` as a vector on
    /// the sample points.
    fn d2f(&self, u0: &[T], i: usize, j: usize) -> Vec<T> {
        let coeff = self.hess_psi[i][j];
        u0.iter().map(|&u| -coeff * u).collect()
    }

    /// Metric in the second-expectation form `g_ij = E2[df_i df_j]`.
    pub fn metric_e2(&self) -> Matrix<T> {
        let mut g = zeros_matrix::<T>(self.n);
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.kernel.e2_prod(&self.df[i], &self.df[j]);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }

    /// Metric in the first-expectation form `g_ij = −E1[∂²f/∂θ^i∂θ^j]`,
    /// evaluated literally on the second-derivative vectors.
    pub fn metric_e1(&self, u0: &[T]) -> Matrix<T> {
        let mut g = zeros_matrix::<T>(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                g[i][j] = -self.kernel.e1(&self.d2f(u0, i, j));
            }
        }
        g
    }

    pub fn gamma_pm1(&self, u0: &[T]) -> (Tensor3<T>, Tensor3<T>) {
        let n = self.n;
        let mut g1 = zeros_tensor3::<T>(n);
        let mut gm1 = zeros_tensor3::<T>(n);
        let g = self.metric_e2();
        for i in 0..n {
            for j in i..n {
                let d2f = self.d2f(u0, i, j);
                let e1_d2f = self.kernel.e1(&d2f);
                for k in 0..n {
                    let e2_d2f_dfk = self.kernel.e2_prod(&d2f, &self.df[k]);
                    let v1 = e2_d2f_dfk - e1_d2f * self.u0_df[k];
                    let vm1 = e2_d2f_dfk
                        + self.kernel.e3_prod(&self.df[i], &self.df[j], &self.df[k])
                        - g[j][k] * self.u0_df[i]
                        - g[i][k] * self.u0_df[j];
                    g1[i][j][k] = v1;
                    g1[j][i][k] = v1;
                    gm1[i][j][k] = vm1;
                    gm1[j][i][k] = vm1;
                }
            }
        }
        (g1, gm1)
    }

    /// Skewness tensor by its defining four-term formula; totally
    /// symmetric by construction of the index pairings.
    pub fn skewness(&self) -> Tensor3<T> {
        let n = self.n;
        let half = lit::<T>(0.5);
        let g = self.metric_e2();
        let mut t = zeros_tensor3::<T>(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let e3 = self.kernel.e3_prod(&self.df[i], &self.df[j], &self.df[k]);
                    t[i][j][k] = half
                        * (e3
                            - g[k][i] * self.u0_df[j]
                            - g[k][j] * self.u0_df[i]
                            - g[i][j] * self.u0_df[k]);
                }
            }
        }
        t
    }
}

/// Both analytic metric forms at a point: `(−E1[∂²f], E2[∂f ∂f])`. The two
/// are algebraically equal through the score identity; comparing their
/// numerically distinct evaluation routes is one of the standing checks.
pub fn metric_forms<T: Scalar>(
    point: &ManifoldPoint<'_, T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let ops = PointOps::new(point)?;
    let g1 = ops.metric_e1(point.family().u0());
    let g2 = ops.metric_e2();
    Ok((g1, g2))
}

/// Compute the metric at a point: both analytic forms are evaluated, their
/// agreement is enforced, and the returned tensor uses the `E2` form with a
/// positive-definiteness certificate and eigen-based inverse.
pub fn metric<T: Scalar>(point: &ManifoldPoint<'_, T>) -> Result<MetricTensor<T>> {
    let ops = PointOps::new(point)?;
    let g2 = ops.metric_e2();
    let g1 = ops.metric_e1(point.family().u0());
    let diff = max_abs_diff_matrix(&g1, &g2);
    let tol = lit::<T>(1e-8).max(T::epsilon() * lit(64.0))
        * max_abs_matrix(&g2).max(T::one());
    if diff > tol {
        return Err(GeomError::MetricFormMismatch {
            max_err: crate::scalar::as_f64(diff),
        });
    }
    let (_eigs, g_inv) = spd_certify_invert(&g2)?;
    Ok(MetricTensor {
        theta: point.theta().to_vec(),
        g: g2,
        g_inv,
    })
}

/// Metric matrix only (E2 form), for finite-difference consumers that do
/// not need the inverse or the certificate.
pub(crate) fn metric_matrix_at<T: Scalar>(family: &PhiFamily<T>, theta: &[T]) -> Result<Matrix<T>> {
    let point = family.point_at(theta)?;
    Ok(PointOps::new(&point)?.metric_e2())
}

/// The dual connection pair `(Γ^(1), Γ^(-1))` at a point.
pub fn christoffel_pm1<T: Scalar>(
    point: &ManifoldPoint<'_, T>,
) -> Result<(ChristoffelTensor<T>, ChristoffelTensor<T>)> {
    let ops = PointOps::new(point)?;
    let (g1, gm1) = ops.gamma_pm1(point.family().u0());
    Ok((
        ChristoffelTensor {
            theta: point.theta().to_vec(),
            kind: ConnectionKind::Plus1,
            gamma: g1,
        },
        ChristoffelTensor {
            theta: point.theta().to_vec(),
            kind: ConnectionKind::Minus1,
            gamma: gm1,
        },
    ))
}

/// Convex blend `Γ^(α) = (1+α)/2 Γ^(1) + (1−α)/2 Γ^(−1)`.
pub fn christoffel_alpha<T: Scalar>(
    point: &ManifoldPoint<'_, T>,
    alpha: T,
) -> Result<ChristoffelTensor<T>> {
    let (g1, gm1) = christoffel_pm1(point)?;
    let n = point.family().dimension();
    let wp = (T::one() + alpha) / lit(2.0);
    let wm = (T::one() - alpha) / lit(2.0);
    let mut gamma = zeros_tensor3::<T>(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[i][j][k] = wp * g1.gamma[i][j][k] + wm * gm1.gamma[i][j][k];
            }
        }
    }
    Ok(ChristoffelTensor {
        theta: point.theta().to_vec(),
        kind: ConnectionKind::Alpha(alpha),
        gamma,
    })
}

/// Skewness tensor `T_ijk` at a point.
pub fn skewness<T: Scalar>(point: &ManifoldPoint<'_, T>) -> Result<Tensor3<T>> {
    Ok(PointOps::new(point)?.skewness())
}

/// Levi-Civita Christoffels from central differences of the metric:
/// `Γ_ijk = (∂_j g_ki + ∂_i g_kj − ∂_k g_ij) / 2`.
pub fn levi_civita<T: Scalar>(
    family: &PhiFamily<T>,
    theta: &[T],
    h: T,
) -> Result<ChristoffelTensor<T>> {
    if !(h > T::zero()) {
        return Err(GeomError::InvalidParameter("step h must be positive".into()));
    }
    let n = family.dimension();
    let dg = metric_derivatives(family, theta, h)?;
    let half = lit::<T>(0.5);
    let mut gamma = zeros_tensor3::<T>(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[i][j][k] = half * (dg[j][k][i] + dg[i][k][j] - dg[k][i][j]);
            }
        }
    }
    Ok(ChristoffelTensor {
        theta: theta.to_vec(),
        kind: ConnectionKind::LeviCivita,
        gamma,
    })
}

/// `dg[i][j][k] = ∂g_jk/∂θ^i` by central differences.
pub(crate) fn metric_derivatives<T: Scalar>(
    family: &PhiFamily<T>,
    theta: &[T],
    h: T,
) -> Result<Tensor3<T>> {
    let n = family.dimension();
    let mut dg = zeros_tensor3::<T>(n);
    for i in 0..n {
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[i] = tp[i] + h;
        tm[i] = tm[i] - h;
        let gp = metric_matrix_at(family, &tp)?;
        let gm = metric_matrix_at(family, &tm)?;
        for j in 0..n {
            for k in 0..n {
                dg[i][j][k] = (gp[j][k] - gm[j][k]) / (lit::<T>(2.0) * h);
            }
        }
    }
    Ok(dg)
}

/// Christoffels of the second kind, `Γ^l_ij = Σ_s Γ_ijs g^{sl}`, stored as
/// `gamma2[l][i][j]`. Raising always goes through the E2-form metric.
pub(crate) fn raised_christoffel_at<T: Scalar>(
    family: &PhiFamily<T>,
    theta: &[T],
    alpha: T,
) -> Result<Tensor3<T>> {
    let point = family.point_at(theta)?;
    let gamma = christoffel_alpha(&point, alpha)?.gamma;
    let g = metric(&point)?;
    let n = family.dimension();
    let mut gamma2 = zeros_tensor3::<T>(n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for (k, row) in g.g_inv.iter().enumerate() {
                    s = s + gamma[i][j][k] * row[l];
                }
                gamma2[l][i][j] = s;
            }
        }
    }
    Ok(gamma2)
}

/// Riemann tensor `R^l_{kij}` of the alpha-connection, with the Christoffel
/// derivatives taken by central differences of step `h`.
pub fn riemann_curvature<T: Scalar>(
    family: &PhiFamily<T>,
    theta: &[T],
    alpha: T,
    h: T,
) -> Result<Tensor4<T>> {
    if !(h > T::zero()) {
        return Err(GeomError::InvalidParameter("step h must be positive".into()));
    }
    let n = family.dimension();
    if n == 1 {
        return Ok(zeros_tensor4::<T>(1));
    }

    let gamma2 = raised_christoffel_at(family, theta, alpha)?;
    // d_gamma2[i][l][j][k] = ∂_i Γ^l_jk
    let mut d_gamma2 = vec![zeros_tensor3::<T>(n); n];
    for i in 0..n {
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[i] = tp[i] + h;
        tm[i] = tm[i] - h;
        let gp = raised_christoffel_at(family, &tp, alpha)?;
        let gm = raised_christoffel_at(family, &tm, alpha)?;
        for l in 0..n {
            for j in 0..n {
                for k in 0..n {
                    d_gamma2[i][l][j][k] = (gp[l][j][k] - gm[l][j][k]) / (lit::<T>(2.0) * h);
                }
            }
        }
    }

    let mut r = zeros_tensor4::<T>(n);
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = d_gamma2[i][l][j][k] - d_gamma2[j][l][i][k];
                    for m in 0..n {
                        v = v + gamma2[l][i][m] * gamma2[m][j][k]
                            - gamma2[l][j][m] * gamma2[m][i][k];
                    }
                    r[l][k][i][j] = v;
                }
            }
        }
    }
    Ok(r)
}

/// Integrate the geodesic equation of the alpha-connection with the
/// classical fourth-order one-step method at fixed step, returning the
/// sampled `(t, θ(t))` trajectory.
pub fn geodesic<T: Scalar>(
    family: &PhiFamily<T>,
    theta0: &[T],
    v0: &[T],
    alpha: T,
    t_end: T,
    steps: usize,
) -> Result<Vec<(T, Vec<T>)>> {
    Ok(geodesic_with_velocity(family, theta0, v0, alpha, t_end, steps)?
        .into_iter()
        .map(|(t, theta, _)| (t, theta))
        .collect())
}

/// One node of an integrated trajectory: `(t, theta, velocity)`.
pub type PhaseNode<T> = (T, Vec<T>, Vec<T>);

/// Same integration, also returning the velocity at each node; used by the
/// conservation checks.
pub fn geodesic_with_velocity<T: Scalar>(
    family: &PhiFamily<T>,
    theta0: &[T],
    v0: &[T],
    alpha: T,
    t_end: T,
    steps: usize,
) -> Result<Vec<PhaseNode<T>>> {
    if steps < 2 {
        return Err(GeomError::InvalidParameter("steps must be >= 2".into()));
    }
    if v0.len() != family.dimension() {
        return Err(GeomError::LengthMismatch {
            expected: family.dimension(),
            got: v0.len(),
        });
    }
    let n = family.dimension();
    let dt = t_end / T::from_usize(steps).unwrap();
    let mut theta = theta0.to_vec();
    let mut vel = v0.to_vec();
    let mut path = Vec::with_capacity(steps + 1);
    path.push((T::zero(), theta.clone(), vel.clone()));

    let accel = |th: &[T], v: &[T]| -> Result<Vec<T>> {
        let gamma2 = raised_christoffel_at(family, th, alpha)?;
        let mut a = vec![T::zero(); n];
        for (l, al) in a.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    *al = *al - gamma2[l][i][j] * v[i] * v[j];
                }
            }
        }
        Ok(a)
    };

    for step in 0..steps {
        let t = dt * T::from_usize(step).unwrap();
        let result = rk4_step(&theta, &vel, dt, &accel);
        match result {
            Ok((next_theta, next_vel)) => {
                theta = next_theta;
                vel = next_vel;
                path.push((t + dt, theta.clone(), vel.clone()));
            }
            Err(e) => {
                return Err(GeomError::TruncatedPath {
                    last_t: crate::scalar::as_f64(t),
                    source: Box::new(e),
                });
            }
        }
    }
    Ok(path)
}

/// One RK4 step of the second-order system `θ'' = a(θ, θ')`.
#[allow(clippy::type_complexity)]
fn rk4_step<T: Scalar>(
    theta: &[T],
    vel: &[T],
    dt: T,
    accel: &dyn Fn(&[T], &[T]) -> Result<Vec<T>>,
) -> Result<(Vec<T>, Vec<T>)> {
    let n = theta.len();
    let half = dt / lit(2.0);
    let add = |base: &[T], d: &[T], s: T| -> Vec<T> {
        base.iter().zip(d).map(|(&b, &x)| b + s * x).collect()
    };

    let k1_x = vel.to_vec();
    let k1_v = accel(theta, vel)?;
    let k2_x = add(vel, &k1_v, half);
    let k2_v = accel(&add(theta, &k1_x, half), &k2_x)?;
    let k3_x = add(vel, &k2_v, half);
    let k3_v = accel(&add(theta, &k2_x, half), &k3_x)?;
    let k4_x = add(vel, &k3_v, dt);
    let k4_v = accel(&add(theta, &k3_x, dt), &k4_x)?;

    let sixth = dt / lit(6.0);
    let two = lit::<T>(2.0);
    let mut next_theta = Vec::with_capacity(n);
    let mut next_vel = Vec::with_capacity(n);
    for i in 0..n {
        next_theta.push(theta[i] + sixth * (k1_x[i] + two * k2_x[i] + two * k3_x[i] + k4_x[i]));
        next_vel.push(vel[i] + sixth * (k1_v[i] + two * k2_v[i] + two * k3_v[i] + k4_v[i]));
    }
    Ok((next_theta, next_vel))
}

/// One natural-gradient step: `θ − rate · g^{-1} ∇`.
pub fn natural_gradient_step<T: Scalar>(
    family: &PhiFamily<T>,
    theta: &[T],
    objective_gradient: &[T],
    rate: T,
) -> Result<Vec<T>> {
    if objective_gradient.len() != family.dimension() {
        return Err(GeomError::LengthMismatch {
            expected: family.dimension(),
            got: objective_gradient.len(),
        });
    }
    let point = family.point_at(theta)?;
    let m = metric(&point)?;
    let natural = mat_vec(&m.g_inv, objective_gradient);
    Ok(theta
        .iter()
        .zip(&natural)
        .map(|(&t, &d)| t - rate * d)
        .collect())
}
