//! Numerical witnesses for the rigidity statements: the divergence identity
//! behind the integral argument, the round-sphere potential in a
//! stereographic chart, the model-space curvatures, the annulus integral of
//! `‖R̊ic(∇u)‖` and ray lengths for completeness.
//!
//! Stereographic convention: the pole `w` goes to the chart's point at
//! infinity, so the height along `w` is `h = (r−1)/(r+1)` with `r = ‖x‖²`, and
//! the round metric is `δ/φ²` with `φ = (1+r)/2`.

use std::f64::consts::PI;

use crate::error::Error;
use crate::fields::{norm, ScalarFieldRn};
use crate::geometry::{divergence_g, fd_gradient, scalar_curvature_at, ConformalMetric};
use crate::gqe::{fit_lambda_by_trace, residual_at, GQEStructure, PhiTransform};
use crate::oracle::RawMetric;
use crate::profiles::{Domain, Jet, Profile1D};
use crate::quadrature::{adaptive_simpson, ABS_TOL};
use crate::report::{Check, VerificationReport};
use crate::tensor::SymTensor;

/// The two forms of the divergence identity at a point, with the pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceGaps {
    /// `|div R̊ic(∇u) − (n−2)/(2n)⟨∇S,∇u⟩ − ⟨Ric, ∇̊²u⟩|`; zero for any metric.
    pub general: f64,
    /// `|div R̊ic(∇u) + ‖∇̊²u‖²/φ′(f)|`; zero when `S` is constant.
    pub constant_s: f64,
    pub divergence: f64,
    pub hessian_term: f64,
}

/// The vector field `R̊ic(∇u)` (upper components) at `x`.
fn traceless_ricci_of_gradient(s: &GQEStructure, pt: &PhiTransform, x: &[f64]) -> Result<Vec<f64>, Error> {
    let pg = s.metric().at(x)?;
    let (uj, _) = pt.potential_jet(s.f(), x)?;
    let ric0 = pg.traceless(&pg.ricci());
    let k = pg.raise() * pg.raise();
    Ok(ric0.apply(&uj.gradient).into_iter().map(|v| k * v).collect())
}

pub fn divergence_identity_gap(s: &GQEStructure, pt: &PhiTransform, x: &[f64]) -> Result<DivergenceGaps, Error> {
    let m = s.metric();
    let n = m.dim() as f64;
    let pg = m.at(x)?;
    let (uj, dphi) = pt.potential_jet(s.f(), x)?;
    let div = divergence_g(m, |y| traceless_ricci_of_gradient(s, pt, y), x)?;
    let ds = fd_gradient(|y| scalar_curvature_at(m, y), x)?;
    let ds_du = pg.inner_covectors(&ds, &uj.gradient);
    let hess0 = pg.traceless(&pg.hessian(&uj));
    let ric_hess = pg.inner_tensor(&pg.ricci(), &hess0);
    let hess_sq = pg.inner_tensor(&hess0, &hess0) / dphi;
    Ok(DivergenceGaps {
        general: (div - (n - 2.0) / (2.0 * n) * ds_du - ric_hess).abs(),
        constant_s: (div + hess_sq).abs(),
        divergence: div,
        hessian_term: hess_sq,
    })
}

/// `φ = (1+r)/2`: the unit round sphere in stereographic coordinates.
pub fn sphere_chart_profile() -> Profile1D {
    Profile1D::from_fn("(1+r)/2", Domain::REAL_LINE, |r| Ok(Jet::new(0.5 * (1.0 + r), 0.5, 0.0)))
}

/// Height along the pole, `h = (r−1)/(r+1)`, on `r > −1`.
pub fn height_profile() -> Profile1D {
    Profile1D::from_fn("(r-1)/(r+1)", Domain::new(-1.0, f64::INFINITY), |r| {
        let q = 1.0 / (r + 1.0);
        Ok(Jet::new((r - 1.0) * q, 2.0 * q * q, -4.0 * q * q * q))
    })
}

/// The sphere potential `f = φ_T⁻¹(c − h/n)` for a transform `φ_T`.
#[derive(Debug, Clone)]
pub struct SphereWitness {
    pub n: usize,
    pub c: f64,
    pub transform: PhiTransform,
    pub structure: GQEStructure,
    /// `h` as a field on the chart.
    pub height: ScalarFieldRn,
}

impl SphereWitness {
    pub fn new(n: usize, transform: PhiTransform, c: f64) -> Result<Self, Error> {
        let metric = ConformalMetric::new(ScalarFieldRn::radial(n, sphere_chart_profile()))?;
        let nf = n as f64;
        let target = Profile1D::from_fn(format!("{c} - h/{n}"), Domain::new(-1.0, f64::INFINITY), move |r| {
            let h = height_profile().jet(r)?;
            Ok(Jet::new(c - h.value / nf, -h.d1 / nf, -h.d2 / nf))
        });
        let (lo, hi) = transform.interval();
        let inverse = transform.phi().inverse(lo, hi)?;
        let f_profile = inverse.compose(&target);
        let f = ScalarFieldRn::radial(n, f_profile.clone());
        let nu = ScalarFieldRn::radial(n, transform.v().compose(&f_profile));
        let (m2, f2, nu2) = (metric.clone(), f.clone(), nu.clone());
        let lambda = ScalarFieldRn::explicit(n, "trace-fitted lambda", move |x: &[f64]| {
            fit_lambda_by_trace(&m2, &f2, &nu2, x)
        });
        let structure = GQEStructure::new(metric, f, nu, lambda)?;
        let height = ScalarFieldRn::radial(n, height_profile());
        Ok(Self { n, c, transform, structure, height })
    }

    /// The range `c ± 1/n` of `c − h/n` must sit inside the transform's range
    /// at the sample points; fails on the first point that does not.
    pub fn check_invertible(&self, points: &[Vec<f64>]) -> Result<(), Error> {
        for x in points {
            self.structure.f().value(x)?;
        }
        Ok(())
    }
}

/// Tolerances of [`sphere_witness_verify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereTolerances {
    pub residual: f64,
    pub height_identity: f64,
    pub height_identity_fd: f64,
    pub hessian_constant: f64,
    pub hessian_deviation: f64,
    pub scalar_curvature: f64,
    pub lambda_closed_form: f64,
}

impl Default for SphereTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-7,
            height_identity: 1e-7,
            height_identity_fd: 1e-6,
            hessian_constant: 1e-6,
            hessian_deviation: 1e-6,
            scalar_curvature: 1e-6,
            lambda_closed_form: 1e-7,
        }
    }
}

/// Default transform for the sphere witness: `c₁ = 1`, `c₂ = 0`, `t₀ = 0`
/// on `[−4, 4]`.
pub fn default_sphere_transform(v: &Profile1D) -> Result<PhiTransform, Error> {
    PhiTransform::new(v, 1.0, 0.0, 0.0, (-4.0, 4.0))
}

pub fn sphere_witness_verify(n: usize, v: &Profile1D, c: f64, points: &[Vec<f64>]) -> Result<VerificationReport, Error> {
    let w = SphereWitness::new(n, default_sphere_transform(v)?, c)?;
    verify_sphere_witness(&w, points, &SphereTolerances::default())
}

/// Runs every sphere-witness check over `points`.
///
/// `c̃` is fitted by least squares of the diagonal of `∇²u + Su/(n(n−1))·g`
/// against `g`. The trace-fitted `λ` is compared with `(n−1) + h/(nφ′(f))`,
/// which follows from `Ric = (n−1)g` and `∇²u = (h/n)g`.
pub fn verify_sphere_witness(
    w: &SphereWitness,
    points: &[Vec<f64>],
    tol: &SphereTolerances,
) -> Result<VerificationReport, Error> {
    w.check_invertible(points)?;
    let s = &w.structure;
    let m = s.metric();
    let n = w.n as f64;
    let oracle = RawMetric::from_conformal(m);
    let mut residual = Vec::new();
    let mut height = Vec::new();
    let mut height_fd = Vec::new();
    let mut scalar = Vec::new();
    let mut lambda_gap = Vec::new();
    let mut lambdas = Vec::new();
    let mut hessian_terms = Vec::new();
    let (mut num, mut den) = (0.0, 0.0);
    for x in points {
        let pg = m.at(x)?;
        let g = pg.metric();
        residual.push(residual_at(s, x)?.max_abs());
        scalar.push((pg.scalar_curvature() - n * (n - 1.0)).abs() / (n * (n - 1.0)));

        let hj = w.height.jet(x)?;
        let hess_h = pg.hessian(&hj);
        height.push(pg.norm_tensor(&(&hess_h + &g.scale(hj.value))));
        let fd = fd_covariant_hessian(&oracle, &w.height, x)?;
        height_fd.push(pg.norm_tensor(&(&fd + &g.scale(hj.value))));

        let (uj, dphi) = w.transform.potential_jet(s.f(), x)?;
        let lam = s.lambda().value(x)?;
        lambdas.push(lam);
        lambda_gap.push((lam - ((n - 1.0) + hj.value / (n * dphi))).abs());
        let sc = pg.scalar_curvature();
        let a = &pg.hessian(&uj) + &g.scale(sc * uj.value / (n * (n - 1.0)));
        for i in 0..w.n {
            num += a.get(i, i) * g.get(i, i);
            den += g.get(i, i) * g.get(i, i);
        }
        hessian_terms.push((a, g));
    }
    let c_tilde = num / den;
    let hessian_dev: Vec<f64> = hessian_terms
        .iter()
        .map(|(a, g)| {
            let d = a - &g.scale(c_tilde);
            // ‖·‖_g of a tensor with lower indices, g = k·I
            d.max_abs() / g.get(0, 0)
        })
        .collect();
    let mut r = VerificationReport::default();
    r.push(Check::from_gaps("sphere.residual", &residual, tol.residual, 0));
    r.push(Check::from_gaps("sphere.height_identity", &height, tol.height_identity, 0));
    r.push(Check::from_gaps("sphere.height_identity_fd", &height_fd, tol.height_identity_fd, 0));
    r.push(Check::from_gaps("sphere.scalar_curvature", &scalar, tol.scalar_curvature, 0));
    r.push(Check::scalar("sphere.hessian_constant", (c_tilde - w.c).abs(), tol.hessian_constant));
    r.push(Check::from_gaps("sphere.hessian_deviation", &hessian_dev, tol.hessian_deviation, 0));
    r.push(Check::from_gaps("sphere.lambda_closed_form", &lambda_gap, tol.lambda_closed_form, 0));
    let (lmin, lmax) = lambdas.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
    r.record("c_tilde", c_tilde);
    r.record("lambda_min", lmin);
    r.record("lambda_max", lmax);
    Ok(r)
}

/// `∂ᵢ∂ⱼh − Γᵏᵢⱼ ∂ₖh` with central differences of `h` (step `1e-4·(1+‖x‖)`)
/// and the oracle's difference Christoffel symbols.
pub fn fd_covariant_hessian(m: &RawMetric, h: &ScalarFieldRn, x: &[f64]) -> Result<SymTensor, Error> {
    let n = x.len();
    let step = 1e-4 * (1.0 + norm(x));
    let gamma = m.christoffel(x)?;
    let at = |moves: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(k, d) in moves {
            y[k] += d;
        }
        h.value(&y)
    };
    let mut grad = vec![0.0; n];
    for k in 0..n {
        grad[k] = (at(&[(k, step)])? - at(&[(k, -step)])?) / (2.0 * step);
    }
    let h0 = at(&[])?;
    let mut second = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let d = if i == j {
                (at(&[(i, step)])? - 2.0 * h0 + at(&[(i, -step)])?) / (step * step)
            } else {
                (at(&[(i, step), (j, step)])? - at(&[(i, step), (j, -step)])? - at(&[(i, -step), (j, step)])?
                    + at(&[(i, -step), (j, -step)])?)
                    / (4.0 * step * step)
            };
            second[i * n + j] = d;
            second[j * n + i] = d;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let corr: f64 = (0..n).map(|k| gamma.get(k, i, j) * grad[k]).sum();
            second[i * n + j] -= corr;
        }
    }
    Ok(SymTensor::from_fn(n, |i, j| second[i * n + j]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Euclidean,
    /// `δ/(x_n/ρ)²` on `x_n > 0`.
    HyperbolicHalfSpace(f64),
    /// `dt² + e^{2kt}δ_{ℝⁿ⁻¹}`, re-charted by `s = e^{−kt}/|k|` as the half-space
    /// with `ρ = 1/|k|` (Euclidean when `k = 0`).
    WarpedFlatFiber(f64),
}

#[derive(Debug, Clone)]
pub struct ModelSpace {
    pub kind: ModelKind,
    pub metric: ConformalMetric,
    pub expected_scalar: f64,
    /// `√(|S|/(n(n−1)))`, the warping rate of the flat-fiber form.
    pub warping: f64,
}

pub fn model_space(kind: ModelKind, n: usize) -> Result<ModelSpace, Error> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    let nn = (n * (n - 1)) as f64;
    let half_space = |rho: f64| -> Result<ConformalMetric, Error> {
        let mut alpha = vec![0.0; n];
        alpha[n - 1] = 1.0;
        let p = Profile1D::from_fn(format!("u/{rho}"), Domain::new(0.0, f64::INFINITY), move |u| {
            Ok(Jet::new(u / rho, 1.0 / rho, 0.0))
        });
        ConformalMetric::new(ScalarFieldRn::translation(alpha, p)?)
    };
    let (metric, rho) = match kind {
        ModelKind::Euclidean => (ConformalMetric::flat(n)?, f64::INFINITY),
        ModelKind::HyperbolicHalfSpace(rho) => {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
            }
            (half_space(rho)?, rho)
        }
        ModelKind::WarpedFlatFiber(k) => {
            if !k.is_finite() {
                return Err(Error::InvalidParameter(format!("k = {k}")));
            }
            if k == 0.0 {
                (ConformalMetric::flat(n)?, f64::INFINITY)
            } else {
                (half_space(1.0 / k.abs())?, 1.0 / k.abs())
            }
        }
    };
    let expected_scalar = if rho.is_infinite() { 0.0 } else { -nn / (rho * rho) };
    Ok(ModelSpace { kind, metric, expected_scalar, warping: (expected_scalar.abs() / nn).sqrt() })
}

impl ModelSpace {
    /// `|S(x) − S_expected|/max(1, |S_expected|)` at each point.
    pub fn scalar_gaps(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, Error> {
        let scale = self.expected_scalar.abs().max(1.0);
        points
            .iter()
            .map(|x| Ok((scalar_curvature_at(&self.metric, x)? - self.expected_scalar).abs() / scale))
            .collect()
    }
}

/// `ω_{n−1} = 2π^{n/2}/Γ(n/2)`, the area of the unit sphere in ℝⁿ.
pub fn unit_sphere_area(n: usize) -> f64 {
    // Γ(n/2) by the recursion from Γ(1) = 1 or Γ(1/2) = √π
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x + 0.5 < n as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma
}

/// Geodesic distance from the origin to Euclidean radius `rho` for a radial
/// metric: `∫₀^ρ dt/φ(t²)`.
pub fn radial_distance(phi: &ScalarFieldRn, rho: f64) -> Result<f64, Error> {
    let n = phi.dim();
    adaptive_simpson(
        |t| {
            let mut x = vec![0.0; n];
            x[0] = t;
            Ok(1.0 / phi.value(&x)?.abs())
        },
        0.0,
        rho,
        ABS_TOL,
    )
}

/// Euclidean radius whose geodesic distance from the origin is `target`.
pub fn radius_for_distance(phi: &ScalarFieldRn, target: f64) -> Result<f64, Error> {
    let cap = match phi.profile() {
        Some(p) if p.domain().hi.is_finite() => p.domain().hi.max(0.0).sqrt(),
        _ => f64::INFINITY,
    };
    // grow a bracket [0, b] with s(b) ≥ target, staying inside the chart
    let mut b = if cap.is_finite() { 0.5 * cap } else { 1.0 };
    for k in 0..60 {
        let reached = radial_distance(phi, b)?;
        if reached >= target {
            break;
        }
        if k == 59 {
            return Err(Error::ChartExhausted { reached, wanted: target });
        }
        b = if cap.is_finite() { cap - 0.5 * (cap - b) } else { 2.0 * b };
        if cap.is_finite() && b >= cap {
            return Err(Error::ChartExhausted { reached, wanted: target });
        }
    }
    let mut a = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 1e-13 * (1.0 + b) || m == a || m == b {
            break;
        }
        if radial_distance(phi, m)? < target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `(1/r_g)·ω_{n−1}∫ ‖R̊ic(∇u)‖_g φ(t²)^{−n} t^{n−1} dt` over the Euclidean
/// radii of the geodesic annulus `r_g ≤ d ≤ 2r_g`, for a radial structure.
pub fn karp_annulus(s: &GQEStructure, pt: &PhiTransform, r_g: f64) -> Result<f64, Error> {
    if !(r_g > 0.0 && r_g.is_finite()) {
        return Err(Error::InvalidParameter(format!("geodesic radius {r_g}")));
    }
    let n = s.dim();
    let phi = s.phi();
    let inner = radius_for_distance(phi, r_g)?;
    let outer = radius_for_distance(phi, 2.0 * r_g)?;
    let integral = adaptive_simpson(
        |t| {
            let mut x = vec![0.0; n];
            x[0] = t;
            let pg = s.metric().at(&x)?;
            let v = traceless_ricci_of_gradient(s, pt, &x)?;
            Ok(pg.norm_vector(&v) * pg.phi().value.abs().powi(-(n as i32)) * t.powi(n as i32 - 1))
        },
        inner,
        outer,
        ABS_TOL,
    )?;
    Ok(unit_sphere_area(n) * integral / r_g)
}

/// Relative accuracy of ray lengths.
const RAY_REL_TOL: f64 = 1e-8;

/// Number of samples used to look for sign changes of `φ` on a ray.
const RAY_SAMPLES: usize = 4096;

/// g-length `∫₀^T dt/|φ(x₀ + t·dir)|` of a Euclidean segment. `dir` is
/// normalized first. When `1/|φ|` leaves the floating-point range without `φ`
/// changing sign the length is reported as `+∞`.
pub fn ray_length(phi: &ScalarFieldRn, x0: &[f64], dir: &[f64], t_max: f64) -> Result<f64, Error> {
    let len = norm(dir);
    if !(len > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    if !(t_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("T = {t_max}")));
    }
    let point = |t: f64| -> Vec<f64> { x0.iter().zip(dir).map(|(a, d)| a + t * d / len).collect() };
    let mut prev = phi.value(&point(0.0))?;
    if prev == 0.0 {
        return Err(Error::PhiZeroCrossing { t: 0.0 });
    }
    let mut underflow_at = None;
    let mut peak = 1.0 / prev.abs();
    for k in 1..=RAY_SAMPLES {
        let t = t_max * k as f64 / RAY_SAMPLES as f64;
        let p = phi.value(&point(t))?;
        match underflow_at {
            None if p == 0.0 || !(1.0 / p).is_finite() => underflow_at = Some(t),
            Some(_) if p != 0.0 && (1.0 / p).is_finite() => return Err(Error::PhiZeroCrossing { t }),
            _ => {}
        }
        if p != 0.0 && p.signum() != prev.signum() && prev != 0.0 {
            return Err(Error::PhiZeroCrossing { t });
        }
        if p != 0.0 {
            prev = p;
            peak = peak.max(1.0 / p.abs());
        }
    }
    if underflow_at.is_some() {
        return Ok(f64::INFINITY);
    }
    // relative accuracy: lengths can be astronomically large yet finite, and
    // profiles like 1 + tanh u lose digits to cancellation where they are small
    let tol = RAY_REL_TOL * (t_max * peak).max(1.0);
    adaptive_simpson(|t| Ok(1.0 / phi.value(&point(t))?.abs()), 0.0, t_max, tol)
}

/// Samples where `‖∇f‖_g < 1e-8`. Sampling cannot certify a global count.
pub fn stationary_points(s: &GQEStructure, points: &[Vec<f64>]) -> Result<usize, Error> {
    let mut count = 0;
    for x in points {
        let pg = s.metric().at(x)?;
        let fj = s.f().jet(x)?;
        if pg.norm_covector(&fj.gradient) < 1e-8 {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gqe::{phi_from_v, radial_structure, translation_structure};
    use crate::profiles::parse_profile;

    fn p(e: &str, v: &str) -> Profile1D {
        parse_profile(e, v).unwrap()
    }

    fn pts() -> Vec<Vec<f64>> {
        vec![vec![0.3, 0.0, 0.0], vec![0.2, -0.4, 0.1], vec![-0.5, 0.6, 0.7], vec![1.1, 0.2, -0.3]]
    }

    #[test]
    fn sphere_area() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn flat_divergence_gaps_vanish() {
        let (s, c) = radial_structure(&Profile1D::constant(1.0), &p("r", "r"), 3).unwrap();
        let pt = phi_from_v(&c.nu, 1.0, 0.0, 0.0, (-1.0, 10.0)).unwrap();
        let g = divergence_identity_gap(&s, &pt, &[0.4, -0.3, 0.9]).unwrap();
        assert!(g.general <= 1e-10 && g.constant_s <= 1e-10, "{g:?}");
    }

    #[test]
    fn example_three_general_gap() {
        let (s, c) = translation_structure(&p("1+tanh(u)", "u"), &p("u", "u"), &[0.0, 0.0, 1.0]).unwrap();
        let pt = phi_from_v(&c.nu, 1.0, 0.0, 0.0, (-3.0, 3.0)).unwrap();
        let g = divergence_identity_gap(&s, &pt, &[0.1, 0.2, 0.4]).unwrap();
        assert!(g.general <= 5e-5, "{g:?}");
    }

    #[test]
    fn sphere_witness_trivial_transform() {
        let r = sphere_witness_verify(3, &Profile1D::constant(0.0), 0.0, &pts()).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{c:?}");
        }
        assert!(r.values["c_tilde"].abs() <= 1e-6);
    }

    #[test]
    fn sphere_witness_nontrivial_transform() {
        let mut r = sphere_witness_verify(3, &Profile1D::constant(1.0), 0.0, &pts()).unwrap();
        r.checks.retain(|c| c.name != "sphere.residual");
        assert!(r.overall_pass(), "{r:?}");
        let w = SphereWitness::new(3, default_sphere_transform(&Profile1D::constant(1.0)).unwrap(), 0.0).unwrap();
        for x in pts() {
            assert!(residual_at(&w.structure, &x).unwrap().max_abs() <= 1e-6);
            let g = divergence_identity_gap(&w.structure, &w.transform, &x).unwrap();
            assert!(g.general <= 5e-5 && g.constant_s <= 5e-5, "{g:?}");
        }
    }

    #[test]
    fn model_curvatures() {
        let x = vec![vec![0.1, 0.2, 1.0], vec![-3.0, 0.5, 0.25]];
        let e = model_space(ModelKind::Euclidean, 4).unwrap();
        assert!(e.scalar_gaps(&[vec![0.1, 0.2, 1.0, 2.0]]).unwrap()[0] == 0.0);
        let h = model_space(ModelKind::HyperbolicHalfSpace(1.0), 3).unwrap();
        assert_eq!(h.expected_scalar, -6.0);
        assert!(h.scalar_gaps(&x).unwrap().iter().all(|g| *g <= 1e-12));
        let w = model_space(ModelKind::WarpedFlatFiber(1.0), 3).unwrap();
        assert_eq!(w.expected_scalar, -6.0);
        assert_eq!(w.warping, 1.0);
        for y in &x {
            assert_eq!(crate::geometry::ricci_at(&w.metric, y).unwrap(), crate::geometry::ricci_at(&h.metric, y).unwrap());
        }
        assert!(model_space(ModelKind::HyperbolicHalfSpace(0.0), 3).is_err());
    }

    #[test]
    fn ray_lengths() {
        let flat = ScalarFieldRn::constant(3, 1.0);
        assert!((ray_length(&flat, &[0.0; 3], &[1.0, 0.0, 0.0], 5.0).unwrap() - 5.0).abs() <= 1e-12);
        let ex1 = ScalarFieldRn::radial(3, p("exp(-r^2/2)", "r"));
        let series: f64 = (0..30)
            .scan(1.0, |fact, k| {
                if k > 0 {
                    *fact *= k as f64;
                }
                Some(0.5f64.powi(k) / (*fact * (4 * k + 1) as f64))
            })
            .sum();
        let l = ray_length(&ex1, &[0.0; 3], &[0.0, 2.0, 0.0], 1.0).unwrap();
        assert!((l - series).abs() <= 1e-10, "{l} vs {series}");
        assert!((series - 1.11566).abs() < 1e-5);
        assert_eq!(ray_length(&ex1, &[0.0; 3], &[1.0, 0.0, 0.0], 100.0).unwrap(), f64::INFINITY);
        let ex2 = ScalarFieldRn::radial(3, p("1/(1+r)", "r"));
        let l2 = ray_length(&ex2, &[0.0; 3], &[1.0, 1.0, 0.0], 2.0).unwrap();
        assert!((l2 - 14.0 / 3.0).abs() <= 1e-10);
        let crossing = ScalarFieldRn::radial(3, p("1-r", "r"));
        assert!(matches!(ray_length(&crossing, &[0.0; 3], &[1.0, 0.0, 0.0], 2.0), Err(Error::PhiZeroCrossing { .. })));
    }

    #[test]
    fn karp_vanishes_on_the_ball_model() {
        let phi = p("(1-r)/2", "r").with_domain(Domain::new(-1.0, 1.0));
        let (s, c) = radial_structure(&phi, &p("r", "r"), 3).unwrap();
        let pt = phi_from_v(&c.nu, 1.0, 0.0, 0.0, (0.0, 0.999)).unwrap();
        for rg in [0.5, 1.0] {
            assert!(karp_annulus(&s, &pt, rg).unwrap().abs() <= 1e-8);
        }
    }

    #[test]
    fn karp_positive_on_example_one() {
        let (s, c) = radial_structure(&p("exp(-r^2/2)", "r"), &p("r", "r"), 3).unwrap();
        let pt = phi_from_v(&c.nu, 1.0, 0.0, 0.0, (0.0, 4.0)).unwrap();
        let k = karp_annulus(&s, &pt, 1.0).unwrap();
        assert!(k > 0.0 && k.is_finite(), "{k}");
    }
}
