//! Invariant battery: every identity the geometry is supposed to satisfy,
//! evaluated on a configured family at seeded random points, with observed
//! error against the pinned tolerance per check. The CLI `check-all`
//! subcommand runs this battery and fails on any violated invariant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::divergence;
use crate::error::Result;
use crate::family::PhiFamily;
use crate::geometry::{self, PointOps};
use crate::linalg::{max_abs_diff_matrix, max_abs_diff_tensor3, max_abs_tensor3, max_abs_tensor4};
use crate::phi::PhiFunction;
use crate::scalar::{as_f64, lit, Scalar};
use crate::space::Density;
use crate::transport;

/// One line of the battery: the worst observed violation against the
/// tolerance the identity is held to.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, observed: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            observed,
            tolerance,
            passed: observed <= tolerance,
        }
    }
}

/// Sampling parameters for the randomized checks.
#[derive(Debug, Clone)]
pub struct BatteryConfig {
    /// Seed for the deterministic sampler; recorded in the output.
    pub seed: u64,
    /// Number of random parameter points per pointwise identity.
    pub random_points: usize,
    /// Parameters are drawn uniformly from `[-theta_range, theta_range]^n`.
    pub theta_range: f64,
    /// Number of random density pairs for the divergence axioms.
    pub density_pairs: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            seed: 0,
            random_points: 10,
            theta_range: 0.8,
            density_pairs: 1000,
        }
    }
}

fn max_update<T: Scalar>(worst: &mut f64, value: T) {
    let v = as_f64(value.abs());
    if v > *worst {
        *worst = v;
    }
}

/// Run the full battery on a family. Each returned entry is one invariant;
/// `passed` is `observed <= tolerance` with the tolerances pinned below.
pub fn run_battery<T: Scalar>(
    family: &PhiFamily<T>,
    cfg: &BatteryConfig,
) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = family.dimension();
    let m = family.space().size();
    let mut results = Vec::new();

    let sample_theta = |rng: &mut ChaCha8Rng| -> Vec<T> {
        (0..n)
            .map(|_| lit::<T>(rng.gen_range(-cfg.theta_range..cfg.theta_range)))
            .collect()
    };
    let thetas: Vec<Vec<T>> = (0..cfg.random_points.max(2))
        .map(|_| sample_theta(&mut rng))
        .collect();

    // metric forms, Hessian identity, score expectation, normalizer
    {
        let mut form_gap = 0.0;
        let mut hess_gap = 0.0;
        let mut score = 0.0;
        let mut psi_neg = 0.0;
        let mut psi_div_gap = 0.0;
        for theta in &thetas {
            let point = family.point_at(theta)?;
            let ops = PointOps::new(&point)?;
            let g2 = ops.metric_e2();
            let g1 = ops.metric_e1(family.u0());
            max_update(&mut form_gap, max_abs_diff_matrix(&g1, &g2));

            let fd_hess = fd_hessian_psi(family, theta)?;
            max_update(&mut hess_gap, max_abs_diff_matrix(&fd_hess, &g2));

            let kernel = point.kernel()?;
            for i in 0..n {
                let df = point.d_f_with_grad(i, &ops.grad_psi)?;
                max_update(&mut score, kernel.e1(df.values()));
            }

            if point.psi() < T::zero() {
                max_update(&mut psi_neg, point.psi());
            }
            let center = family.center_density()?;
            let dv = divergence::phi_divergence(
                family.phi(),
                family.u0(),
                &center,
                point.density(),
            )?;
            max_update(&mut psi_div_gap, point.psi() - dv);
        }
        results.push(CheckResult::new("metric-form-equivalence", form_gap, 1e-8));
        results.push(CheckResult::new("metric-hessian-identity", hess_gap, 1e-5));
        results.push(CheckResult::new("score-expectation-zero", score, 1e-9));
        results.push(CheckResult::new("normalizer-nonnegative", psi_neg, 1e-9));
        results.push(CheckResult::new(
            "normalizer-divergence-identity",
            psi_div_gap,
            1e-10,
        ));
    }

    // convexity of the normalizer along random segments
    {
        let mut worst = 0.0;
        for pair in thetas.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let pa = family.solve_psi(a)?;
            let pb = family.solve_psi(b)?;
            for lambda in [0.25, 0.5, 0.75] {
                let l = lit::<T>(lambda);
                let mid: Vec<T> = a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| l * x + (T::one() - l) * y)
                    .collect();
                let pm = family.solve_psi(&mid)?;
                let gap = pm - (l * pa + (T::one() - l) * pb);
                if gap > T::zero() {
                    max_update(&mut worst, gap);
                }
            }
        }
        results.push(CheckResult::new("normalizer-convexity", worst, 1e-10));
    }

    // flatness of the plus-one connection in the natural chart
    {
        let mut worst = 0.0;
        for theta in &thetas {
            let point = family.point_at(theta)?;
            let (g1, _) = geometry::christoffel_pm1(&point)?;
            max_update(&mut worst, max_abs_tensor3(&g1.gamma));
        }
        results.push(CheckResult::new("plus-one-flatness", worst, 1e-9));
    }

    // duality of the alpha pairs against metric derivatives
    {
        let mut worst = 0.0;
        for theta in thetas.iter().take(3) {
            let h = geometry::default_fd_step(theta);
            let dg = geometry::metric_derivatives(family, theta, h)?;
            let point = family.point_at(theta)?;
            for alpha in [1.0, 0.5, 0.0, -0.5] {
                let gp = geometry::christoffel_alpha(&point, lit(alpha))?.gamma;
                let gm = geometry::christoffel_alpha(&point, lit(-alpha))?.gamma;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            max_update(&mut worst, dg[i][j][k] - (gp[i][j][k] + gm[i][k][j]));
                        }
                    }
                }
            }
        }
        results.push(CheckResult::new("connection-duality", worst, 1e-5));
    }

    // blend consistency against the skewness tensor, and its symmetry
    {
        let mut blend_gap = 0.0;
        let mut symmetry = 0.0;
        for theta in thetas.iter().take(3) {
            let point = family.point_at(theta)?;
            let t = geometry::skewness(&point)?;
            let g0 = geometry::christoffel_alpha(&point, T::zero())?.gamma;
            let alpha = lit::<T>(0.3);
            let ga = geometry::christoffel_alpha(&point, alpha)?.gamma;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        max_update(
                            &mut blend_gap,
                            ga[i][j][k] - (g0[i][j][k] - alpha * t[i][j][k]),
                        );
                        max_update(&mut symmetry, t[i][j][k] - t[j][i][k]);
                        max_update(&mut symmetry, t[i][j][k] - t[i][k][j]);
                    }
                }
            }
        }
        results.push(CheckResult::new("alpha-blend-skewness", blend_gap, 1e-9));
        results.push(CheckResult::new("skewness-symmetry", symmetry, 1e-9));
    }

    // Levi-Civita from metric derivatives against the zero blend
    {
        let theta = &thetas[0];
        let h = geometry::default_fd_step(theta);
        let lc = geometry::levi_civita(family, theta, h)?;
        let point = family.point_at(theta)?;
        let blend0 = geometry::christoffel_alpha(&point, T::zero())?;
        results.push(CheckResult::new(
            "levi-civita-consistency",
            as_f64(max_abs_diff_tensor3(&lc.gamma, &blend0.gamma)),
            1e-5,
        ));
    }

    // curvature of the flat connection
    {
        let theta = &thetas[0];
        let h = geometry::default_fd_step(theta);
        let r = geometry::riemann_curvature(family, theta, T::one(), h)?;
        results.push(CheckResult::new(
            "plus-one-curvature",
            as_f64(max_abs_tensor4(&r)),
            1e-4,
        ));
    }

    // geodesics: affine for alpha = 1, isometric speed for alpha = 0
    {
        let theta0 = &thetas[0];
        let v0: Vec<T> = (0..n)
            .map(|_| lit::<T>(rng.gen_range(-0.5..0.5)))
            .collect();
        let mut worst = 0.0;
        let path = geometry::geodesic(family, theta0, &v0, T::one(), T::one(), 32)?;
        for (t, theta) in &path {
            for k in 0..n {
                max_update(&mut worst, theta[k] - (theta0[k] + *t * v0[k]));
            }
        }
        results.push(CheckResult::new("flat-geodesics-affine", worst, 1e-8));

        let mut drift = 0.0;
        let path =
            geometry::geodesic_with_velocity(family, theta0, &v0, T::zero(), T::one(), 64)?;
        let speed = |theta: &[T], v: &[T]| -> Result<T> {
            let g = geometry::metric(&family.point_at(theta)?)?.g;
            let mut s = T::zero();
            for i in 0..n {
                for j in 0..n {
                    s = s + g[i][j] * v[i] * v[j];
                }
            }
            Ok(s)
        };
        let initial = speed(&path[0].1, &path[0].2)?;
        for (_, theta, v) in &path {
            max_update(&mut drift, speed(theta, v)? - initial);
        }
        results.push(CheckResult::new("metric-geodesic-speed", drift, 1e-6));
    }

    // divergence calculus: finite-difference metric and connection pair
    {
        let theta = &thetas[0];
        let fd_g = divergence::divergence_metric_fd(
            family,
            theta,
            lit(divergence::FD_STEP_SECOND_ORDER),
        )?;
        let point = family.point_at(theta)?;
        let g = geometry::metric(&point)?.g;
        results.push(CheckResult::new(
            "divergence-metric",
            as_f64(max_abs_diff_matrix(&fd_g, &g)),
            1e-4,
        ));

        let (fd1, fdm1) = divergence::divergence_christoffels_fd(
            family,
            theta,
            lit(divergence::FD_STEP_THIRD_ORDER),
        )?;
        let (g1, gm1) = geometry::christoffel_pm1(&point)?;
        let gap = as_f64(
            max_abs_diff_tensor3(&fd1, &g1.gamma)
                .max(max_abs_diff_tensor3(&fdm1, &gm1.gamma)),
        );
        results.push(CheckResult::new("divergence-christoffels", gap, 5e-3));
    }

    // divergence axioms on random density pairs
    {
        let mut negativity = 0.0;
        let mut coupling_violations = 0.0;
        for idx in 0..cfg.density_pairs {
            let draw = |rng: &mut ChaCha8Rng| -> Result<Density<T>> {
                let values: Vec<T> = (0..m)
                    .map(|_| lit::<T>(rng.gen_range(0.05..1.0)))
                    .collect();
                Density::new(family.space().clone(), values)
            };
            let p = draw(&mut rng)?;
            // every eighth pair is the diagonal case
            let q = if idx % 8 == 0 { p.clone() } else { draw(&mut rng)? };
            let value = divergence::phi_divergence(family.phi(), family.u0(), &p, &q)?;
            if value < T::zero() {
                max_update(&mut negativity, value);
            }
            let near_zero = value < lit(1e-12);
            let equal = p.max_abs_diff(&q) < lit(1e-9);
            if near_zero != equal {
                coupling_violations += 1.0;
            }
        }
        results.push(CheckResult::new(
            "divergence-nonnegativity",
            negativity,
            1e-12,
        ));
        results.push(CheckResult::new(
            "divergence-zero-iff-equal",
            coupling_violations,
            0.0,
        ));
    }

    // closed-form transport: round trips, composition, target tangency
    {
        let pa = family.point_at(&thetas[0])?;
        let pb = family.point_at(&thetas[1])?;
        let pc = family.point_at(thetas.get(2).unwrap_or(&thetas[0]))?;
        let mut worst = 0.0;
        let mut tangency = 0.0;
        for i in 0..n {
            let x = pa.d_f(i)?;
            let back = transport::transport_1(&pa, &transport::transport_1(&pb, &x)?)?;
            for (&a, &b) in back.values().iter().zip(x.values()) {
                max_update(&mut worst, a - b);
            }
            let two_hop = transport::transport_1(&pc, &transport::transport_1(&pb, &x)?)?;
            let direct = transport::transport_1(&pc, &x)?;
            for (&a, &b) in two_hop.values().iter().zip(direct.values()) {
                max_update(&mut worst, a - b);
            }
            let kernel = pb.kernel()?;
            let moved = transport::transport_1(&pb, &x)?;
            max_update(&mut tangency, kernel.e1(moved.values()));
        }
        results.push(CheckResult::new("transport-path-independence", worst, 1e-10));
        results.push(CheckResult::new("transport-target-tangency", tangency, 1e-9));
    }

    // ODE transport against the closed form, dual pairing, isometry
    {
        let curve: Vec<Vec<T>> = thetas.iter().take(3).cloned().collect();
        let v0: Vec<T> = (0..n)
            .map(|_| lit::<T>(rng.gen_range(-1.0..1.0)))
            .collect();
        let w0: Vec<T> = (0..n)
            .map(|_| lit::<T>(rng.gen_range(-1.0..1.0)))
            .collect();
        let steps = 40;

        let ode = transport::transport_ode(family, &curve, T::one(), &v0, steps)?;
        let from = family.point_at(&curve[0])?;
        let to = family.point_at(curve.last().unwrap())?;
        let x = transport::from_coordinates(&from, &v0)?;
        let moved = transport::transport_1(&to, &x)?;
        let (closed, _residual) = transport::to_coordinates(&to, &moved)?;
        let mut gap = 0.0;
        for k in 0..n {
            max_update(&mut gap, ode.last().unwrap()[k] - closed[k]);
        }
        results.push(CheckResult::new("transport-ode-closed-form", gap, 1e-5));

        let pairing = |theta: &[T], v: &[T], w: &[T]| -> Result<T> {
            let g = geometry::metric(&family.point_at(theta)?)?.g;
            let mut s = T::zero();
            for i in 0..n {
                for j in 0..n {
                    s = s + g[i][j] * v[i] * w[j];
                }
            }
            Ok(s)
        };
        let alpha = lit::<T>(1.0);
        let vs = transport::transport_ode(family, &curve, alpha, &v0, steps)?;
        let ws = transport::transport_ode(family, &curve, -alpha, &w0, steps)?;
        let first = pairing(&curve[0], &vs[0], &ws[0])?;
        let mut drift = 0.0;
        for idx in 1..curve.len() {
            max_update(&mut drift, pairing(&curve[idx], &vs[idx], &ws[idx])? - first);
        }
        results.push(CheckResult::new("dual-pair-preservation", drift, 1e-5));

        let vs0 = transport::transport_ode(family, &curve, T::zero(), &v0, steps)?;
        let first = pairing(&curve[0], &vs0[0], &vs0[0])?;
        let mut drift = 0.0;
        for idx in 1..curve.len() {
            max_update(&mut drift, pairing(&curve[idx], &vs0[idx], &vs0[idx])? - first);
        }
        results.push(CheckResult::new("metric-transport-isometry", drift, 1e-5));
    }

    // connection recovery from the transport
    {
        let theta = &thetas[0];
        let point = family.point_at(theta)?;
        let kernel = point.kernel()?;
        let fr = transport::frame(&point)?;
        let (g1, _) = geometry::christoffel_pm1(&point)?;
        let mut worst = 0.0;
        for i in 0..n {
            for j in 0..n {
                let cov = transport::recover_connection_1(family, theta, i, j, lit(1e-4))?;
                for (k, df) in fr.iter().enumerate() {
                    let ip = kernel.e2_prod(cov.values(), df.values());
                    max_update(&mut worst, ip - g1.gamma[i][j][k]);
                }
            }
        }
        results.push(CheckResult::new("connection-recovery", worst, 1e-4));
    }

    // natural-gradient fit of an in-family target
    {
        let target_theta = sample_theta(&mut rng);
        let target = family.point_at(&target_theta)?.density().clone();
        let mut theta = vec![T::zero(); n];
        for _ in 0..200 {
            let (_, grad) = divergence::target_divergence_with_grad(family, &target, &theta)?;
            let next = geometry::natural_gradient_step(family, &theta, &grad, T::one())?;
            let moved = next
                .iter()
                .zip(&theta)
                .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
            theta = next;
            if moved < lit(1e-13) {
                break;
            }
        }
        let mut gap = 0.0;
        for k in 0..n {
            max_update(&mut gap, theta[k] - target_theta[k]);
        }
        results.push(CheckResult::new("natural-gradient-convergence", gap, 1e-6));
    }

    // classical reduction, when the family is an ordinary exponential family
    if matches!(family.phi(), PhiFunction::Exponential)
        && family.u0().iter().all(|&u| u == T::one())
    {
        let mut worst = 0.0;
        let mut kl_gap = 0.0;
        for theta in thetas.iter().take(3) {
            let point = family.point_at(theta)?;
            let oracle = classical::exponential_family_tensors(
                family.center_density()?.values(),
                family.directions(),
                family.space().weights(),
                theta,
            );
            let g = geometry::metric(&point)?.g;
            max_update(&mut worst, max_abs_diff_matrix(&g, &oracle.metric));
            let (g1, gm1) = geometry::christoffel_pm1(&point)?;
            max_update(&mut worst, max_abs_diff_tensor3(&g1.gamma, &oracle.gamma_e));
            max_update(&mut worst, max_abs_diff_tensor3(&gm1.gamma, &oracle.gamma_m));
            let t = geometry::skewness(&point)?;
            max_update(&mut worst, max_abs_diff_tensor3(&t, &oracle.skewness));

            let center = family.center_density()?;
            let dv = divergence::phi_divergence(
                family.phi(),
                family.u0(),
                &center,
                point.density(),
            )?;
            let kl = divergence::kl_divergence(&center, point.density())?;
            max_update(&mut kl_gap, dv - kl);
        }
        results.push(CheckResult::new("classical-reduction", worst, 1e-8));
        results.push(CheckResult::new("classical-kl-reduction", kl_gap, 1e-12));
    }

    Ok(results)
}

/// Finite-difference Hessian of the normalizer.
pub fn fd_hessian_psi<T: Scalar>(
    family: &PhiFamily<T>,
    theta: &[T],
) -> Result<crate::linalg::Matrix<T>> {
    let n = family.dimension();
    let h = geometry::default_fd_step(theta);
    let mut hess = crate::linalg::zeros_matrix::<T>(n);
    let psi_at = |t: &[T]| family.solve_psi(t);
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                let mut tp = theta.to_vec();
                let mut tm = theta.to_vec();
                tp[i] = tp[i] + h;
                tm[i] = tm[i] - h;
                (psi_at(&tp)? - lit::<T>(2.0) * psi_at(theta)? + psi_at(&tm)?) / (h * h)
            } else {
                let mut acc = T::zero();
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut t = theta.to_vec();
                    t[i] = t[i] + lit::<T>(si) * h;
                    t[j] = t[j] + lit::<T>(sj) * h;
                    acc = acc + lit::<T>(si * sj) * psi_at(&t)?;
                }
                acc / (lit::<T>(4.0) * h * h)
            };
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

/// Classical statistical-manifold formulas for an exponential family,
/// computed from the tilted density in closed form (no expectation
/// functionals, no normalizer solve). Used as the independent oracle for
/// the reduction checks.
pub mod classical {
    use crate::linalg::{zeros_matrix, zeros_tensor3, Matrix, Tensor3};
    use crate::scalar::{lit, Scalar};

    /// Tensors of the classical geometry built from `l = log p`.
    pub struct ClassicalTensors<T> {
        pub metric: Matrix<T>,
        /// exponential-connection Christoffels `E[∂i∂j l · ∂k l]`
        pub gamma_e: Tensor3<T>,
        /// mixture-connection Christoffels `E[(∂i∂j l + ∂i l ∂j l) ∂k l]`
        pub gamma_m: Tensor3<T>,
        /// half the third central moment `E[∂i l ∂j l ∂k l] / 2`
        pub skewness: Tensor3<T>,
    }

    /// Evaluate the classical tensors of the tilted family
    /// `p_θ = p exp(θ·u − log Z(θ))` at `theta`.
    pub fn exponential_family_tensors<T: Scalar>(
        center: &[T],
        directions: &[Vec<T>],
        weights: &[T],
        theta: &[T],
    ) -> ClassicalTensors<T> {
        let n = directions.len();
        let m = center.len();

        // tilted density
        let mut tilted: Vec<T> = center
            .iter()
            .enumerate()
            .map(|(k, &pk)| {
                let mut dot = T::zero();
                for (t, u) in theta.iter().zip(directions) {
                    dot = dot + *t * u[k];
                }
                pk * dot.exp()
            })
            .collect();
        let z = tilted
            .iter()
            .zip(weights)
            .fold(T::zero(), |acc, (&v, &w)| acc + v * w);
        for v in tilted.iter_mut() {
            *v = *v / z;
        }

        let mean = |h: &[T]| -> T {
            h.iter()
                .zip(&tilted)
                .zip(weights)
                .fold(T::zero(), |acc, ((&hv, &pv), &w)| acc + hv * pv * w)
        };

        // score components dl_i = u_i − E[u_i]
        let dl: Vec<Vec<T>> = directions
            .iter()
            .map(|u| {
                let mu = mean(u);
                u.iter().map(|&uk| uk - mu).collect()
            })
            .collect();

        // second derivative ∂i∂j l = −Cov(u_i, u_j), constant over samples
        let mut d2l = zeros_matrix::<T>(n);
        for i in 0..n {
            for j in 0..n {
                let prod: Vec<T> = dl[i]
                    .iter()
                    .zip(&dl[j])
                    .map(|(&a, &b)| a * b)
                    .collect();
                d2l[i][j] = -mean(&prod);
            }
        }

        let mut metric = zeros_matrix::<T>(n);
        for i in 0..n {
            for j in 0..n {
                let prod: Vec<T> = dl[i]
                    .iter()
                    .zip(&dl[j])
                    .map(|(&a, &b)| a * b)
                    .collect();
                metric[i][j] = mean(&prod);
            }
        }

        let mut gamma_e = zeros_tensor3::<T>(n);
        let mut gamma_m = zeros_tensor3::<T>(n);
        let mut skewness = zeros_tensor3::<T>(n);
        let half = lit::<T>(0.5);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut first = T::zero();
                    let mut third = T::zero();
                    for s in 0..m {
                        let w = tilted[s] * weights[s];
                        first = first + d2l[i][j] * dl[k][s] * w;
                        third = third + dl[i][s] * dl[j][s] * dl[k][s] * w;
                    }
                    gamma_e[i][j][k] = first;
                    gamma_m[i][j][k] = first + third;
                    skewness[i][j][k] = half * third;
                }
            }
        }

        ClassicalTensors {
            metric,
            gamma_e,
            gamma_m,
            skewness,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::FiniteSpace;

    #[test]
    fn battery_passes_on_kaniadakis_family() {
        let space = FiniteSpace::counting(4).unwrap();
        let p = Density::new(space, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let family = PhiFamily::new(
            PhiFunction::kaniadakis(0.5).unwrap(),
            &p,
            None,
            &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]],
        )
        .unwrap();
        let cfg = BatteryConfig {
            density_pairs: 200,
            random_points: 5,
            ..BatteryConfig::default()
        };
        let results = run_battery(&family, &cfg).unwrap();
        for r in &results {
            assert!(
                r.passed,
                "{}: observed {} > tolerance {}",
                r.name, r.observed, r.tolerance
            );
        }
    }

    #[test]
    fn battery_includes_classical_checks_for_exponential_families() {
        let space = FiniteSpace::counting(2).unwrap();
        let p = Density::new(space, vec![0.5, 0.5]).unwrap();
        let family =
            PhiFamily::new(PhiFunction::exponential(), &p, None, &[vec![1.0, 0.0]]).unwrap();
        let cfg = BatteryConfig {
            density_pairs: 100,
            random_points: 4,
            ..BatteryConfig::default()
        };
        let results = run_battery(&family, &cfg).unwrap();
        assert!(results.iter().any(|r| r.name == "classical-reduction"));
        for r in &results {
            assert!(
                r.passed,
                "{}: observed {} > tolerance {}",
                r.name, r.observed, r.tolerance
            );
        }
    }

    #[test]
    fn battery_is_deterministic_for_a_fixed_seed() {
        let space = FiniteSpace::counting(3).unwrap();
        let p = Density::new(space, vec![0.2, 0.3, 0.5]).unwrap();
        let family =
            PhiFamily::new(PhiFunction::exponential(), &p, None, &[vec![1.0, 0.0, 0.0]]).unwrap();
        let cfg = BatteryConfig {
            density_pairs: 50,
            random_points: 3,
            seed: 7,
            ..BatteryConfig::default()
        };
        let a = run_battery(&family, &cfg).unwrap();
        let b = run_battery(&family, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.observed, y.observed);
        }
    }
}
