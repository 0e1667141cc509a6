//! Generalized quasi-Einstein structures `Ric + ∇²f − ν df⊗df = λg`.
//!
//! A [`GQEStructure`] bundles a conformal metric `g = g₀/φ²` with fields
//! `f`, `ν`, `λ` and evaluates the defining equation pointwise. The radial and
//! translation closures produce `ν`, `λ` (and the scalar curvature `S`) from a
//! pair of profiles `(φ, f)`; [`PhiTransform`] implements the change of
//! potential `u = φ∘f` for `ν = v∘f`, where
//!
//! ```text
//! φ′(t) = c₁ exp(−∫_{t₀}^t v),   φ(t) = c₂ + ∫_{t₀}^t φ′,   φ″ = −vφ′
//! ```
//!
//! turns the equation into `Ric + ∇²u/φ′(f) = λg`.

use std::sync::Arc;

use crate::error::Error;
use crate::fields::{FieldJet, ScalarFieldRn, SymmetryKind};
use crate::geometry::{ConformalMetric, PointGeometry};
use crate::profiles::{Domain, Jet, JetSource, Profile1D, ProfileError};
use crate::quadrature::CumulativeIntegral;
use crate::tensor::SymTensor;

/// Candidate solution `(g = g₀/φ², f, ν, λ)` on ℝⁿ, `n ≥ 3`.
#[derive(Debug, Clone)]
pub struct GQEStructure {
    metric: ConformalMetric,
    f: ScalarFieldRn,
    nu: ScalarFieldRn,
    lambda: ScalarFieldRn,
}

impl GQEStructure {
    pub fn new(
        metric: ConformalMetric,
        f: ScalarFieldRn,
        nu: ScalarFieldRn,
        lambda: ScalarFieldRn,
    ) -> Result<Self, Error> {
        let n = metric.dim();
        for field in [&f, &nu, &lambda] {
            if field.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: field.dim() });
            }
        }
        Ok(Self { metric, f, nu, lambda })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric(&self) -> &ConformalMetric {
        &self.metric
    }

    pub fn phi(&self) -> &ScalarFieldRn {
        self.metric.phi()
    }

    pub fn f(&self) -> &ScalarFieldRn {
        &self.f
    }

    pub fn nu(&self) -> &ScalarFieldRn {
        &self.nu
    }

    pub fn lambda(&self) -> &ScalarFieldRn {
        &self.lambda
    }

    pub fn with_lambda(&self, lambda: ScalarFieldRn) -> Result<Self, Error> {
        Self::new(self.metric.clone(), self.f.clone(), self.nu.clone(), lambda)
    }

    /// The same structure with `λ` replaced by `λ + k`; used to break it on purpose.
    pub fn with_lambda_offset(&self, k: f64) -> Self {
        let shift = Profile1D::from_fn(format!("t+{k}"), Domain::REAL_LINE, move |t| {
            Ok(Jet::new(t + k, 1.0, 0.0))
        });
        Self { lambda: ScalarFieldRn::composite(shift, self.lambda.clone()), ..self.clone() }
    }

    pub fn residual_at(&self, x: &[f64]) -> Result<SymTensor, Error> {
        residual_at(self, x)
    }

    pub fn wedge_invariant_at(&self, x: &[f64]) -> Result<f64, Error> {
        wedge_invariant_at(self, x)
    }
}

/// `Ric + ∇²f − ν df⊗df − λg` at `x`.
pub fn residual_at(s: &GQEStructure, x: &[f64]) -> Result<SymTensor, Error> {
    let pg = s.metric.at(x)?;
    let fj = s.f.jet(x)?;
    let nu = s.nu.value(x)?;
    let lambda = s.lambda.value(x)?;
    Ok(&(&(&pg.ricci() + &pg.hessian(&fj)) - &SymTensor::outer(&fj.gradient).scale(nu))
        - &pg.metric().scale(lambda))
}

/// Largest absolute 3×3 minor of the matrix with rows `d‖∇f‖²_g`, `dν`, `df`
/// (coordinate components). Zero iff `d‖∇f‖² ∧ dν ∧ df = 0` at `x`.
pub fn wedge_invariant_at(s: &GQEStructure, x: &[f64]) -> Result<f64, Error> {
    let n = s.dim();
    let pg = s.metric.at(x)?;
    let fj = s.f.jet(x)?;
    let nuj = s.nu.jet(x)?;
    let rows = [grad_norm_sq_differential(&pg, &fj), nuj.gradient, fj.gradient];
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let m = |r: usize, c: usize| rows[r][[i, j, k][c]];
                let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
                worst = worst.max(det.abs());
            }
        }
    }
    Ok(worst)
}

/// Coordinate differential of `‖∇f‖²_g = φ² Σ fᵢ²`, exact from the jets.
fn grad_norm_sq_differential(pg: &PointGeometry, fj: &FieldJet) -> Vec<f64> {
    let p = pg.phi();
    let g2: f64 = fj.gradient.iter().map(|v| v * v).sum();
    (0..fj.gradient.len())
        .map(|k| {
            let hf: f64 = (0..fj.gradient.len()).map(|i| fj.gradient[i] * fj.hessian.get(i, k)).sum();
            2.0 * p.value * p.gradient[k] * g2 + 2.0 * p.value * p.value * hf
        })
        .collect()
}

/// `λ = (S + Δ_g f − ν‖∇f‖²_g)/n`: the value making the g-trace of the
/// residual vanish.
pub fn fit_lambda_by_trace(
    metric: &ConformalMetric,
    f: &ScalarFieldRn,
    nu: &ScalarFieldRn,
    x: &[f64],
) -> Result<f64, Error> {
    let pg = metric.at(x)?;
    let fj = f.jet(x)?;
    let grad2 = pg.inner_covectors(&fj.gradient, &fj.gradient);
    let n = pg.dim() as f64;
    Ok((pg.scalar_curvature() + pg.laplacian(&fj) - nu.value(x)? * grad2) / n)
}

/// Compares the structure's `λ` with the trace-fitted one. Returns the
/// relative gap, or [`Error::Inconsistent`] when it exceeds `tol`.
pub fn check_lambda_consistency(s: &GQEStructure, x: &[f64], tol: f64) -> Result<f64, Error> {
    let fitted = fit_lambda_by_trace(&s.metric, &s.f, &s.nu, x)?;
    let stored = s.lambda.value(x)?;
    let gap = (fitted - stored).abs() / stored.abs().max(1.0);
    if gap > tol {
        return Err(Error::Inconsistent(format!(
            "lambda at {x:?}: structure has {stored}, trace fit gives {fitted}"
        )));
    }
    Ok(gap)
}

/// `ν`, `λ` and `S` of a family as profiles in the symmetry variable.
/// Values are exact in the jets of `φ` and `f`; their own derivatives are
/// five-point differences.
#[derive(Debug, Clone)]
pub struct Closure {
    pub nu: Profile1D,
    pub lambda: Profile1D,
    pub scalar: Profile1D,
}

struct Pair {
    phi: Jet,
    f: Jet,
}

fn pair(phi: &Profile1D, f: &Profile1D, t: f64) -> Result<Pair, ProfileError> {
    let (p, q) = (phi.jet(t)?, f.jet(t)?);
    if p.value == 0.0 {
        return Err(ProfileError::Eval { kind: "vanishing conformal factor", expr: phi.label().to_string(), arg: t });
    }
    if q.d1 == 0.0 {
        return Err(ProfileError::Eval { kind: "vanishing f'", expr: f.label().to_string(), arg: t });
    }
    Ok(Pair { phi: p, f: q })
}

fn nu_formula(n: f64, j: &Pair) -> f64 {
    let (p, f) = (&j.phi, &j.f);
    ((n - 2.0) * p.d2 / p.value + f.d2 + 2.0 * f.d1 * p.d1 / p.value) / (f.d1 * f.d1)
}

fn intersect(a: Domain, b: Domain) -> Domain {
    Domain::new(a.lo.max(b.lo), a.hi.min(b.hi))
}

fn closure_from<N, L, S>(phi: &Profile1D, f: &Profile1D, tag: &str, nu: N, lambda: L, scalar: S) -> Closure
where
    N: Fn(&Pair, f64) -> f64 + Send + Sync + 'static,
    L: Fn(&Pair, f64) -> f64 + Send + Sync + 'static,
    S: Fn(&Pair, f64) -> f64 + Send + Sync + 'static,
{
    let domain = intersect(phi.domain(), f.domain());
    let make = |name: &str, rule: Arc<dyn Fn(&Pair, f64) -> f64 + Send + Sync>| {
        let (phi, f) = (phi.clone(), f.clone());
        Profile1D::from_values(format!("{name}[{tag}; {}, {}]", phi.label(), f.label()), domain, move |t| {
            Ok(rule(&pair(&phi, &f, t)?, t))
        })
    };
    Closure {
        nu: make("nu", Arc::new(nu)),
        lambda: make("lambda", Arc::new(lambda)),
        scalar: make("S", Arc::new(scalar)),
    }
}

/// Closure of the radial family: all data functions of `r = ‖x‖²`.
///
/// ```text
/// ν = [(n−2)φ″/φ + f″ + 2f′φ′/φ]/f′²
/// λ = 4[(n−1)φ′(φ − rφ′) + rφ(φ″ − f′φ′)] + 2f′φ²
/// S = 4(n−1)[2rφφ″ − nrφ′² + nφφ′]
/// ```
pub fn radial_closure(phi: &Profile1D, f: &Profile1D, n: usize) -> Result<Closure, Error> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    let nf = n as f64;
    Ok(closure_from(
        phi,
        f,
        "radial",
        move |j, _| nu_formula(nf, j),
        move |j, r| {
            let (p, f) = (&j.phi, &j.f);
            4.0 * ((nf - 1.0) * p.d1 * (p.value - r * p.d1) + r * p.value * (p.d2 - f.d1 * p.d1))
                + 2.0 * f.d1 * p.value * p.value
        },
        move |j, r| {
            let p = &j.phi;
            4.0 * (nf - 1.0) * (2.0 * r * p.value * p.d2 - nf * r * p.d1 * p.d1 + nf * p.value * p.d1)
        },
    ))
}

/// Closure of the translation family: all data functions of `u = α·x`,
/// `a = |α|²`.
///
/// ```text
/// ν = [(n−2)φ″/φ + f″ + 2f′φ′/φ]/f′²
/// λ = a[φφ″ − f′φφ′ − (n−1)φ′²]
/// S = a(n−1)[2φφ″ − nφ′²]
/// ```
pub fn translation_closure(phi: &Profile1D, f: &Profile1D, alpha: &[f64], n: usize) -> Result<Closure, Error> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    if alpha.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
    }
    let a: f64 = alpha.iter().map(|v| v * v).sum();
    if !(a > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let nf = n as f64;
    Ok(closure_from(
        phi,
        f,
        "translation",
        move |j, _| nu_formula(nf, j),
        move |j, _| {
            let (p, f) = (&j.phi, &j.f);
            a * (p.value * p.d2 - f.d1 * p.value * p.d1 - (nf - 1.0) * p.d1 * p.d1)
        },
        move |j, _| {
            let p = &j.phi;
            a * (nf - 1.0) * (2.0 * p.value * p.d2 - nf * p.d1 * p.d1)
        },
    ))
}

/// Assembles the radial-family structure on ℝⁿ together with its closure.
pub fn radial_structure(phi: &Profile1D, f: &Profile1D, n: usize) -> Result<(GQEStructure, Closure), Error> {
    let c = radial_closure(phi, f, n)?;
    let s = GQEStructure::new(
        ConformalMetric::new(ScalarFieldRn::radial(n, phi.clone()))?,
        ScalarFieldRn::radial(n, f.clone()),
        ScalarFieldRn::radial(n, c.nu.clone()),
        ScalarFieldRn::radial(n, c.lambda.clone()),
    )?;
    Ok((s, c))
}

/// Assembles the translation-family structure on ℝⁿ, `n = alpha.len()`.
pub fn translation_structure(
    phi: &Profile1D,
    f: &Profile1D,
    alpha: &[f64],
) -> Result<(GQEStructure, Closure), Error> {
    let n = alpha.len();
    let c = translation_closure(phi, f, alpha, n)?;
    let lift = |p: &Profile1D| ScalarFieldRn::translation(alpha.to_vec(), p.clone());
    let s = GQEStructure::new(
        ConformalMetric::new(lift(phi)?)?,
        lift(f)?,
        lift(&c.nu)?,
        lift(&c.lambda)?,
    )?;
    Ok((s, c))
}

/// Samples `f′` at `ts` and fails unless it keeps one strict sign.
pub fn check_strictly_monotone(f: &Profile1D, ts: &[f64]) -> Result<(), Error> {
    let mut sign = 0.0;
    for &t in ts {
        let d = f.d1(t)?;
        if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
            return Err(Error::VanishingDerivative { what: "f'", at: t });
        }
        sign = d.signum();
    }
    Ok(())
}

/// Target width of one cumulative-table segment in [`PhiTransform`].
const TABLE_SEGMENT: f64 = 2e-3;

/// `φ` built from `v` by the two nested antiderivatives, on a working interval
/// `[lo, hi] ∋ t₀`.
#[derive(Clone)]
pub struct PhiTransform {
    v: Profile1D,
    lo: f64,
    hi: f64,
    c1: f64,
    c2: f64,
    t0: f64,
    phi: Profile1D,
    phiprime: Profile1D,
}

impl std::fmt::Debug for PhiTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhiTransform")
            .field("v", &self.v.label())
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("t0", &self.t0)
            .field("interval", &self.interval())
            .finish()
    }
}

struct Tables {
    v: Profile1D,
    c1: f64,
    c2: f64,
    log_slope: CumulativeIntegral,
    phi: CumulativeIntegral,
}

impl Tables {
    fn phiprime(&self, t: f64) -> Result<f64, Error> {
        Ok(self.c1 * (-self.log_slope.value(t)?).exp())
    }
}

fn to_profile_error(e: Error) -> ProfileError {
    match e {
        Error::Profile(p) => p,
        other => ProfileError::Other(other.to_string()),
    }
}

struct PhiSource(Arc<Tables>);

impl JetSource for PhiSource {
    fn value(&self, t: f64) -> Result<f64, ProfileError> {
        Ok(self.0.c2 + self.0.phi.value(t).map_err(to_profile_error)?)
    }

    fn jet(&self, t: f64) -> Result<Jet, ProfileError> {
        let d1 = self.0.phiprime(t).map_err(to_profile_error)?;
        let v = self.0.v.eval(t)?;
        Ok(Jet::new(self.value(t)?, d1, -v * d1))
    }
}

struct PhiPrimeSource(Arc<Tables>);

impl JetSource for PhiPrimeSource {
    fn value(&self, t: f64) -> Result<f64, ProfileError> {
        self.0.phiprime(t).map_err(to_profile_error)
    }

    fn jet(&self, t: f64) -> Result<Jet, ProfileError> {
        let p = self.value(t)?;
        let v = self.0.v.jet(t)?;
        Ok(Jet::new(p, -v.value * p, (v.value * v.value - v.d1) * p))
    }
}

/// Builds `φ` from `v` on `interval = (lo, hi)` with `lo ≤ t0 ≤ hi`.
pub fn phi_from_v(v: &Profile1D, c1: f64, c2: f64, t0: f64, interval: (f64, f64)) -> Result<PhiTransform, Error> {
    PhiTransform::new(v, c1, c2, t0, interval)
}

impl PhiTransform {
    pub fn new(v: &Profile1D, c1: f64, c2: f64, t0: f64, interval: (f64, f64)) -> Result<Self, Error> {
        if c1 == 0.0 {
            return Err(Error::DegenerateTransform);
        }
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(Error::InvalidParameter(format!("c1 = {c1}, c2 = {c2}")));
        }
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo <= t0 && t0 <= hi && lo < hi) {
            return Err(Error::OutsideWorkingInterval { t: t0, lo, hi });
        }
        let segments = (((hi - lo) / TABLE_SEGMENT).ceil() as usize).clamp(64, 1 << 16);
        let vv = v.clone();
        let log_slope = CumulativeIntegral::new(Arc::new(move |t| Ok(vv.eval(t)?)), t0, lo, hi, segments)?;
        let inner = log_slope.clone();
        let phi = CumulativeIntegral::new(
            Arc::new(move |t| Ok(c1 * (-inner.value(t)?).exp())),
            t0,
            lo,
            hi,
            segments,
        )?;
        let tables = Arc::new(Tables { v: v.clone(), c1, c2, log_slope, phi });
        // profile domains are open; widen by a hair so the closed working
        // interval stays usable, the tables still reject anything outside it
        let eps = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let domain = Domain::new(lo - eps, hi + eps);
        let label = format!("phi[v={}; c1={c1}, c2={c2}, t0={t0}]", v.label());
        Ok(Self {
            v: v.clone(),
            lo,
            hi,
            c1,
            c2,
            t0,
            phi: Profile1D::from_source(label.clone(), domain, Arc::new(PhiSource(tables.clone()))),
            phiprime: Profile1D::from_source(format!("d/dt {label}"), domain, Arc::new(PhiPrimeSource(tables))),
        })
    }

    pub fn v(&self) -> &Profile1D {
        &self.v
    }

    pub fn constants(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }

    pub fn base_point(&self) -> f64 {
        self.t0
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `φ(t)`, jet `(φ, φ′, −vφ′)`.
    pub fn phi(&self) -> &Profile1D {
        &self.phi
    }

    /// `φ′(t)`, jet `(φ′, −vφ′, (v² − v′)φ′)`.
    pub fn phiprime(&self) -> &Profile1D {
        &self.phiprime
    }

    /// `|φ″ + vφ′|` at `t` with both derivatives taken by five-point central
    /// differences (step `1e-3`) of the quadrature values of `φ`, divided by
    /// `max(1, |φ(t)|)`.
    pub fn ode_residual(&self, t: f64) -> Result<f64, Error> {
        let (lo, hi) = self.interval();
        let h = 1e-3_f64.min((t - lo) / 3.0).min((hi - t) / 3.0);
        if !(h > 0.0) {
            return Err(Error::OutsideWorkingInterval { t, lo, hi });
        }
        let p = |s: f64| self.phi.eval(s);
        let (f0, p1, m1, p2, m2) = (p(t)?, p(t + h)?, p(t - h)?, p(t + 2.0 * h)?, p(t - 2.0 * h)?);
        let d1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        let d2 = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * f0) / (12.0 * h * h);
        Ok((d2 + self.v.eval(t)? * d1).abs() / f0.abs().max(1.0))
    }

    /// The potential `u = φ∘f`.
    pub fn potential(&self, f: &ScalarFieldRn) -> ScalarFieldRn {
        ScalarFieldRn::composite(self.phi.clone(), f.clone())
    }

    /// Coordinate jet of `u = φ∘f` at `x` together with `φ′(f(x))`.
    pub fn potential_jet(&self, f: &ScalarFieldRn, x: &[f64]) -> Result<(FieldJet, f64), Error> {
        let fj = f.jet(x)?;
        let p = self.phi.jet(fj.value)?;
        if p.d1 == 0.0 {
            return Err(Error::VanishingDerivative { what: "phi'", at: fj.value });
        }
        Ok((fj.compose(p.value, p.d1, p.d2), p.d1))
    }
}

/// Largest `|ν(x) − v(f(x))|` over `points`: the precondition of the
/// transformed equation.
pub fn nu_mismatch(s: &GQEStructure, pt: &PhiTransform, points: &[Vec<f64>]) -> Result<f64, Error> {
    let mut worst = 0.0_f64;
    for x in points {
        let gap = s.nu.value(x)? - pt.v.eval(s.f.value(x)?)?;
        worst = worst.max(gap.abs());
    }
    Ok(worst)
}

/// `Ric + ∇²u/φ′(f) − λg` at `x` with `u = φ∘f`.
pub fn transformed_residual_at(s: &GQEStructure, pt: &PhiTransform, x: &[f64]) -> Result<SymTensor, Error> {
    let pg = s.metric.at(x)?;
    let (uj, dphi) = pt.potential_jet(&s.f, x)?;
    let lambda = s.lambda.value(x)?;
    Ok(&(&pg.ricci() + &pg.hessian(&uj).scale(1.0 / dphi)) - &pg.metric().scale(lambda))
}

/// `‖R̊ic + ∇̊²u/φ′(f)‖_g` at `x`; does not involve `λ`.
pub fn traceless_identity_gap(s: &GQEStructure, pt: &PhiTransform, x: &[f64]) -> Result<f64, Error> {
    let (ric, hess) = traceless_terms(s, pt, x)?;
    let pg = s.metric.at(x)?;
    Ok(pg.norm_tensor(&(&ric + &hess)))
}

/// `(R̊ic, ∇̊²u/φ′(f))` at `x`, for callers that want the two sides separately.
pub fn traceless_terms(s: &GQEStructure, pt: &PhiTransform, x: &[f64]) -> Result<(SymTensor, SymTensor), Error> {
    let pg = s.metric.at(x)?;
    let (uj, dphi) = pt.potential_jet(&s.f, x)?;
    Ok((pg.traceless(&pg.ricci()), pg.traceless(&pg.hessian(&uj)).scale(1.0 / dphi)))
}

/// `v = ν∘f⁻¹` for a radial or translation structure whose `f` is strictly
/// monotone on `[lo, hi]` (in the symmetry variable).
pub fn reparametrize_nu(nu: &Profile1D, f: &Profile1D, lo: f64, hi: f64) -> Result<Profile1D, Error> {
    Ok(nu.compose(&f.inverse(lo, hi)?))
}

/// True when every field of the structure shares the symmetry of `φ`.
pub fn is_family_structure(s: &GQEStructure) -> bool {
    let same = |a: &SymmetryKind, b: &SymmetryKind| match (a, b) {
        (SymmetryKind::Radial, SymmetryKind::Radial) => true,
        (SymmetryKind::Translation { alpha: x, .. }, SymmetryKind::Translation { alpha: y, .. }) => x == y,
        _ => false,
    };
    let k = s.phi().kind();
    [s.f.kind(), s.nu.kind(), s.lambda.kind()].iter().all(|o| same(&k, o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::parse_profile;

    fn p(e: &str, v: &str) -> Profile1D {
        parse_profile(e, v).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn flat_gaussian_residual_is_exactly_zero() {
        let (s, c) = radial_structure(&Profile1D::constant(1.0), &p("r", "r"), 3).unwrap();
        assert_eq!(c.nu.eval(0.7).unwrap(), 0.0);
        assert_eq!(c.lambda.eval(0.7).unwrap(), 2.0);
        assert_eq!(c.scalar.eval(0.7).unwrap(), 0.0);
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 0.5]] {
            assert_eq!(s.residual_at(&x).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn example_one_closure_values() {
        let (s, c) = radial_structure(&p("exp(-r^2/2)", "r"), &p("r", "r"), 3).unwrap();
        let e = 1f64.exp();
        assert!(close(c.nu.eval(1.0).unwrap(), -2.0, 1e-14));
        assert!(close(c.lambda.eval(1.0).unwrap(), -10.0 / e, 1e-14));
        assert!(close(c.scalar.eval(1.0).unwrap(), -48.0 / e, 1e-14));
        let x = [1.0, 0.0, 0.0];
        assert!(s.residual_at(&x).unwrap().max_abs() <= 1e-9);
        assert!(close(fit_lambda_by_trace(s.metric(), s.f(), s.nu(), &x).unwrap(), -10.0 / e, 1e-12));
        // λ + 1 leaves −g behind; g = e^{r²}·I with r = ‖x‖² = 1
        let broken = s.with_lambda_offset(1.0).residual_at(&x).unwrap();
        let want = SymTensor::scaled_identity(3, -e);
        assert!((&broken - &want).max_abs() <= 1e-9 * e);
    }

    #[test]
    fn example_two_and_three_closure_values() {
        let c = radial_closure(&p("1/(1+r)", "r"), &p("r", "r"), 3).unwrap();
        assert!(close(c.nu.eval(0.0).unwrap(), 0.0, 1e-15));
        assert!(close(c.lambda.eval(0.0).unwrap(), -6.0, 1e-15));
        assert!(close(c.scalar.eval(0.0).unwrap(), -24.0, 1e-15));
        let t = translation_closure(&p("1+tanh(u)", "u"), &p("u", "u"), &[0.0, 0.0, 1.0], 3).unwrap();
        assert!(close(t.nu.eval(0.0).unwrap(), 2.0, 1e-15));
        assert!(close(t.lambda.eval(0.0).unwrap(), -3.0, 1e-15));
        assert!(close(t.scalar.eval(0.0).unwrap(), -6.0, 1e-15));
        let h = translation_closure(&p("u", "u"), &p("u", "u"), &[0.0, 0.0, 1.0], 3).unwrap();
        assert!(close(h.nu.eval(1.0).unwrap(), 2.0, 1e-15));
        assert!(close(h.lambda.eval(1.0).unwrap(), -3.0, 1e-15));
        for u in [0.5, 1.0, 3.0] {
            assert!(close(h.scalar.eval(u).unwrap(), -6.0, 1e-15));
        }
        let flat = translation_closure(&Profile1D::constant(1.0), &p("u", "u"), &[1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(
            (flat.nu.eval(0.3).unwrap(), flat.lambda.eval(0.3).unwrap(), flat.scalar.eval(0.3).unwrap()),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn degenerate_closures_are_errors() {
        let c = radial_closure(&p("exp(-r^2/2)", "r"), &p("(r-1)^2", "r"), 3).unwrap();
        assert!(c.nu.eval(1.0).is_err());
        let z = radial_closure(&p("1-r", "r"), &p("r", "r"), 3).unwrap();
        assert!(z.lambda.eval(1.0).is_err());
        assert!(translation_closure(&p("u", "u"), &p("u", "u"), &[0.0, 0.0, 0.0], 3).is_err());
        assert!(check_strictly_monotone(&p("(r-1)^2", "r"), &[0.0, 0.5, 1.5]).is_err());
        assert!(check_strictly_monotone(&p("r", "r"), &[0.0, 0.5, 1.5]).is_ok());
    }

    #[test]
    fn wedge_vanishes_on_families_and_detects_counterexample() {
        let (s, _) = radial_structure(&p("exp(-r^2/2)", "r"), &p("r", "r"), 3).unwrap();
        assert!(s.wedge_invariant_at(&[0.3, -0.7, 0.2]).unwrap() <= 1e-12);
        let (t, _) = translation_structure(&p("1+tanh(u)", "u"), &p("u", "u"), &[0.3, 0.0, 1.0]).unwrap();
        assert!(t.wedge_invariant_at(&[0.3, -0.7, 0.2]).unwrap() <= 1e-12);
        let c = GQEStructure::new(
            ConformalMetric::flat(3).unwrap(),
            ScalarFieldRn::explicit(3, "x1+x2^2", |x: &[f64]| Ok(x[0] + x[1] * x[1])),
            ScalarFieldRn::explicit(3, "x3", |x: &[f64]| Ok(x[2])),
            ScalarFieldRn::constant(3, 0.0),
        )
        .unwrap();
        let w = c.wedge_invariant_at(&[0.0, 1.0, 0.0]).unwrap();
        assert!((w - 8.0).abs() <= 1e-6, "{w}");
    }

    #[test]
    fn phi_transform_closed_forms() {
        let t = phi_from_v(&Profile1D::constant(0.0), 1.0, 0.0, 0.0, (-2.0, 2.0)).unwrap();
        for s in [-1.5, 0.0, 0.7, 1.9] {
            assert!((t.phi().eval(s).unwrap() - s).abs() <= 1e-12);
        }
        let one = phi_from_v(&Profile1D::constant(1.0), 1.0, 1.0, 0.0, (-1.0, 3.0)).unwrap();
        assert!((one.phi().eval(1.0).unwrap() - (2.0 - (-1f64).exp())).abs() <= 1e-10);
        assert!((one.phi().eval(1.0).unwrap() - 1.6321206).abs() <= 1e-7);
        let half = phi_from_v(&Profile1D::constant(-0.5), 0.5, 1.0, 0.0, (-2.0, 4.0)).unwrap();
        for s in [-1.0, 0.0, 2.0, 3.5] {
            assert!((half.phi().eval(s).unwrap() - (s / 2.0).exp()).abs() <= 1e-10);
        }
        assert_eq!(phi_from_v(&Profile1D::constant(1.0), 0.0, 1.0, 0.0, (-1.0, 1.0)).unwrap_err(), Error::DegenerateTransform);
        assert!(phi_from_v(&Profile1D::constant(1.0), 1.0, 1.0, 2.0, (-1.0, 1.0)).is_err());
    }

    #[test]
    fn phi_transform_satisfies_its_ode() {
        let v = p("tanh(t) + t^2/4", "t");
        let t = phi_from_v(&v, -2.0, 0.5, 0.3, (-3.0, 3.0)).unwrap();
        for k in 0..100 {
            let s = -2.9 + 5.8 * k as f64 / 99.0;
            assert!(t.ode_residual(s).unwrap() <= 1e-8, "t={s}");
            let j = t.phi().jet(s).unwrap();
            assert!(j.d1 < 0.0);
            assert_eq!(j.d2, -v.eval(s).unwrap() * j.d1);
        }
    }

    #[test]
    fn transformed_equation_on_example_one() {
        let (s, c) = radial_structure(&p("exp(-r^2/2)", "r"), &p("r", "r"), 3).unwrap();
        let pt = phi_from_v(&c.nu, 1.0, 0.0, 0.0, (0.0, 10.0)).unwrap();
        let x = [1.0, 0.0, 0.0];
        assert!(nu_mismatch(&s, &pt, &[x.to_vec()]).unwrap() == 0.0);
        assert!(transformed_residual_at(&s, &pt, &x).unwrap().max_abs() <= 1e-7);
        let gap = traceless_identity_gap(&s, &pt, &x).unwrap();
        assert!(gap <= 1e-7);
        let broken = s.with_lambda_offset(1.0);
        assert_eq!(traceless_identity_gap(&broken, &pt, &x).unwrap(), gap);
        assert!(transformed_residual_at(&broken, &pt, &x).unwrap().max_abs() > 0.1);
    }

    #[test]
    fn zero_potential_transform_reduces_to_the_plain_residual() {
        let (s, _) = radial_structure(&p("exp(-r^2/2)", "r"), &p("r", "r"), 3).unwrap();
        let flat_nu = s.with_lambda(s.lambda().clone()).unwrap();
        let zero = GQEStructure::new(
            flat_nu.metric().clone(),
            flat_nu.f().clone(),
            ScalarFieldRn::constant(3, 0.0),
            flat_nu.lambda().clone(),
        )
        .unwrap();
        let pt = phi_from_v(&Profile1D::constant(0.0), 1.0, 0.0, 0.0, (-1.0, 10.0)).unwrap();
        let x = [0.4, 0.3, -0.2];
        let a = transformed_residual_at(&zero, &pt, &x).unwrap();
        let b = zero.residual_at(&x).unwrap();
        assert!((&a - &b).max_abs() <= 1e-12 * (1.0 + b.max_abs()));
    }
}
