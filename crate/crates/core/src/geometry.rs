//! Closed-form geometry of the conformally flat metric `g = g₀/φ²` on ℝⁿ.
//!
//! All tensors are stored with lower indices. Because `g` is diagonal,
//! raising an index is multiplication by `φ²`.
//!
//! With `φᵢ = ∂ᵢφ` and `φᵢⱼ = ∂ᵢ∂ⱼφ` (coordinate derivatives):
//!
//! ```text
//! Γᵏᵢⱼ     = −(φᵢ δⱼₖ + φⱼ δᵢₖ − φₖ δᵢⱼ)/φ
//! Ric_ij   = (n−2) φᵢⱼ/φ + Σₖ [φₖₖ/φ − (n−1)(φₖ/φ)²] δᵢⱼ
//! S        = (n−1)(2φ Δ₀φ − n|∇₀φ|²)
//! (∇²f)ᵢⱼ = fᵢⱼ + (fᵢφⱼ + φᵢfⱼ)/φ − (Σₖ fₖφₖ/φ) δᵢⱼ
//! ```

use crate::error::Error;
use crate::fields::{norm, FieldJet, ScalarFieldRn};
use crate::tensor::{self, SymTensor};

/// `|φ(x)|` at or below this is treated as a zero of the conformal factor.
pub const PHI_GUARD: f64 = 1e-300;
/// Relative step for differentiating derived fields (Ricci, scalar
/// curvature, vector fields): `h = 1e-4·(1 + ‖x‖)`, five-point stencils.
pub const DERIVED_FD_STEP: f64 = 1e-4;

pub fn derived_step(x: &[f64]) -> f64 {
    DERIVED_FD_STEP * (1.0 + norm(x))
}

/// Christoffel symbols `Γᵏᵢⱼ`, stored as `data[(k·n + i)·n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.n;
        self.data[(k * n + i) * n + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// The metric `δᵢⱼ/φ²` on ℝⁿ.
#[derive(Debug, Clone)]
pub struct ConformalMetric {
    phi: ScalarFieldRn,
}

impl ConformalMetric {
    pub fn new(phi: ScalarFieldRn) -> Result<Self, Error> {
        if phi.dim() < 3 {
            return Err(Error::InvalidDimension(phi.dim()));
        }
        Ok(Self { phi })
    }

    pub fn flat(n: usize) -> Result<Self, Error> {
        Self::new(ScalarFieldRn::constant(n, 1.0))
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn phi(&self) -> &ScalarFieldRn {
        &self.phi
    }

    /// Same metric shape with `φ` replaced by `k·φ`.
    pub fn scaled(&self, k: f64) -> Self {
        let profile = crate::profiles::Profile1D::from_fn(
            format!("{k}*s"),
            crate::profiles::Domain::REAL_LINE,
            move |s| Ok(crate::profiles::Jet::variable(s) * k),
        );
        Self { phi: ScalarFieldRn::composite(profile, self.phi.clone()) }
    }

    /// Evaluates the conformal factor's jet at `x`, rejecting zeros.
    pub fn at(&self, x: &[f64]) -> Result<PointGeometry, Error> {
        let phi = self.phi.jet(x)?;
        if !(phi.value.abs() > PHI_GUARD) {
            return Err(Error::ZeroConformalFactor { at: x.to_vec(), value: phi.value });
        }
        Ok(PointGeometry { x: x.to_vec(), phi })
    }
}

/// Everything the closed forms need at one point: the coordinate jet of `φ`.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    x: Vec<f64>,
    phi: FieldJet,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn point(&self) -> &[f64] {
        &self.x
    }

    pub fn phi(&self) -> &FieldJet {
        &self.phi
    }

    /// `φ²`, the factor that raises one index.
    pub fn raise(&self) -> f64 {
        self.phi.value * self.phi.value
    }

    pub fn metric(&self) -> SymTensor {
        SymTensor::scaled_identity(self.dim(), 1.0 / self.raise())
    }

    pub fn christoffel(&self) -> Christoffel {
        let n = self.dim();
        let p = self.phi.value;
        let d = &self.phi.gradient;
        let mut c = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if j == k {
                        v += d[i];
                    }
                    if i == k {
                        v += d[j];
                    }
                    if i == j {
                        v -= d[k];
                    }
                    c.set(k, i, j, -v / p);
                }
            }
        }
        c
    }

    pub fn ricci(&self) -> SymTensor {
        let n = self.dim();
        let nf = n as f64;
        let p = self.phi.value;
        let lap0 = self.phi.hessian.trace();
        let grad2: f64 = self.phi.gradient.iter().map(|v| v * v).sum();
        let diag = lap0 / p - (nf - 1.0) * grad2 / (p * p);
        &self.phi.hessian.scale((nf - 2.0) / p) + &SymTensor::scaled_identity(n, diag)
    }

    pub fn scalar_curvature(&self) -> f64 {
        let nf = self.dim() as f64;
        let p = self.phi.value;
        let lap0 = self.phi.hessian.trace();
        let grad2: f64 = self.phi.gradient.iter().map(|v| v * v).sum();
        (nf - 1.0) * (2.0 * p * lap0 - nf * grad2)
    }

    /// Covariant Hessian of a function with coordinate jet `f`.
    pub fn hessian(&self, f: &FieldJet) -> SymTensor {
        let n = self.dim();
        let p = self.phi.value;
        let dphi = &self.phi.gradient;
        let df = &f.gradient;
        let cross: f64 = df.iter().zip(dphi).map(|(a, b)| a * b).sum::<f64>() / p;
        SymTensor::from_fn(n, |i, j| {
            let delta = if i == j { cross } else { 0.0 };
            f.hessian.get(i, j) + (df[i] * dphi[j] + dphi[i] * df[j]) / p - delta
        })
    }

    /// `(∇f)ⁱ = φ² ∂ᵢf`.
    pub fn gradient(&self, f: &FieldJet) -> Vec<f64> {
        let k = self.raise();
        f.gradient.iter().map(|v| k * v).collect()
    }

    pub fn laplacian(&self, f: &FieldJet) -> f64 {
        self.trace(&self.hessian(f))
    }

    /// `g^{ij} Tᵢⱼ`.
    pub fn trace(&self, t: &SymTensor) -> f64 {
        self.raise() * t.trace()
    }

    /// `T − (tr_g T/n) g`.
    pub fn traceless(&self, t: &SymTensor) -> SymTensor {
        let n = self.dim() as f64;
        t - &self.metric().scale(self.trace(t) / n)
    }

    /// `|X|_g` for a vector with upper-index components.
    pub fn norm_vector(&self, v: &[f64]) -> f64 {
        (v.iter().map(|a| a * a).sum::<f64>() / self.raise()).sqrt()
    }

    /// `|ω|_g` for a covector (lower-index components).
    pub fn norm_covector(&self, w: &[f64]) -> f64 {
        (self.raise() * w.iter().map(|a| a * a).sum::<f64>()).sqrt()
    }

    /// `⟨A, B⟩_g = g^{ik} g^{jl} Aᵢⱼ Bₖₗ` for lower-index tensors.
    pub fn inner_tensor(&self, a: &SymTensor, b: &SymTensor) -> f64 {
        let k = self.raise();
        k * k * a.contract(b)
    }

    pub fn norm_tensor(&self, t: &SymTensor) -> f64 {
        self.inner_tensor(t, t).sqrt()
    }

    /// `⟨∇a, ∇b⟩_g` from lower-index differentials.
    pub fn inner_covectors(&self, a: &[f64], b: &[f64]) -> f64 {
        self.raise() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }
}

pub fn metric_at(m: &ConformalMetric, x: &[f64]) -> Result<SymTensor, Error> {
    Ok(m.at(x)?.metric())
}

pub fn christoffel_at(m: &ConformalMetric, x: &[f64]) -> Result<Christoffel, Error> {
    Ok(m.at(x)?.christoffel())
}

pub fn ricci_at(m: &ConformalMetric, x: &[f64]) -> Result<SymTensor, Error> {
    Ok(m.at(x)?.ricci())
}

pub fn scalar_curvature_at(m: &ConformalMetric, x: &[f64]) -> Result<f64, Error> {
    Ok(m.at(x)?.scalar_curvature())
}

pub fn hessian_g(m: &ConformalMetric, f: &ScalarFieldRn, x: &[f64]) -> Result<SymTensor, Error> {
    Ok(m.at(x)?.hessian(&f.jet(x)?))
}

pub fn gradient_g(m: &ConformalMetric, f: &ScalarFieldRn, x: &[f64]) -> Result<Vec<f64>, Error> {
    Ok(m.at(x)?.gradient(&f.jet(x)?))
}

pub fn laplacian_g(m: &ConformalMetric, f: &ScalarFieldRn, x: &[f64]) -> Result<f64, Error> {
    Ok(m.at(x)?.laplacian(&f.jet(x)?))
}

/// `tr_g`-free part of `t` with respect to a general positive-definite `g`.
pub fn traceless(t: &SymTensor, g: &SymTensor) -> Result<SymTensor, Error> {
    tensor::traceless(t, g)
}

/// `div_g X = ∂ᵢXⁱ + Γⁱᵢₖ Xᵏ` for a vector field given by upper components,
/// with `∂ᵢXⁱ` from five-point central differences.
pub fn divergence_g<F>(m: &ConformalMetric, field: F, x: &[f64]) -> Result<f64, Error>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, Error>,
{
    let n = m.dim();
    let pg = m.at(x)?;
    let gamma = pg.christoffel();
    let h = derived_step(x);
    let mut div = 0.0;
    for i in 0..n {
        div += five_point(|d| Ok(field(&shift(x, i, d))?[i]), h)?;
    }
    let v = field(x)?;
    for i in 0..n {
        for k in 0..n {
            div += gamma.get(i, i, k) * v[k];
        }
    }
    Ok(div)
}

/// Divergence of a symmetric 2-tensor field with lower indices:
/// `(div T)ⱼ = g^{ik}(∂ₖTᵢⱼ − Γᵐₖᵢ Tₘⱼ − Γᵐₖⱼ Tᵢₘ)`.
pub fn divergence_tensor_g<F>(m: &ConformalMetric, field: F, x: &[f64]) -> Result<Vec<f64>, Error>
where
    F: Fn(&[f64]) -> Result<SymTensor, Error>,
{
    let n = m.dim();
    let pg = m.at(x)?;
    let gamma = pg.christoffel();
    let h = derived_step(x);
    let t0 = field(x)?;
    let mut dt = Vec::with_capacity(n);
    for k in 0..n {
        let at = |d: f64| field(&shift(x, k, d));
        let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
        dt.push((&(&p1 - &m1).scale(8.0) - &(&p2 - &m2)).scale(1.0 / (12.0 * h)));
    }
    let raise = pg.raise();
    Ok((0..n)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..n {
                // g^{ik} = φ² δ^{ik}
                let k = i;
                let mut term = dt[k].get(i, j);
                for mm in 0..n {
                    term -= gamma.get(mm, k, i) * t0.get(mm, j) + gamma.get(mm, k, j) * t0.get(i, mm);
                }
                s += term;
            }
            raise * s
        })
        .collect())
}

/// Five-point central-difference coordinate gradient of a scalar function.
pub fn fd_gradient<F>(f: F, x: &[f64]) -> Result<Vec<f64>, Error>
where
    F: Fn(&[f64]) -> Result<f64, Error>,
{
    let h = derived_step(x);
    (0..x.len()).map(|i| five_point(|d| f(&shift(x, i, d)), h)).collect()
}

fn shift(x: &[f64], i: usize, d: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += d;
    y
}

/// `g′(0)` from `g(±h)`, `g(±2h)`; fourth order.
fn five_point<G>(g: G, h: f64) -> Result<f64, Error>
where
    G: Fn(f64) -> Result<f64, Error>,
{
    Ok((8.0 * (g(h)? - g(-h)?) - (g(2.0 * h)? - g(-2.0 * h)?)) / (12.0 * h))
}

/// `‖div_g Ric − ½ dS‖_g` at `x`: the contracted second Bianchi identity,
/// with both sides obtained by differencing the closed-form fields.
pub fn bianchi_gap(m: &ConformalMetric, x: &[f64]) -> Result<f64, Error> {
    let div = divergence_tensor_g(m, |y| ricci_at(m, y), x)?;
    let ds = fd_gradient(|y| scalar_curvature_at(m, y), x)?;
    let resid: Vec<f64> = div.iter().zip(&ds).map(|(a, b)| a - 0.5 * b).collect();
    Ok(m.at(x)?.norm_covector(&resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{parse_profile, Domain};

    fn radial(n: usize, e: &str) -> ScalarFieldRn {
        ScalarFieldRn::radial(n, parse_profile(e, "r").unwrap())
    }

    fn sphere(n: usize) -> ConformalMetric {
        ConformalMetric::new(radial(n, "(1+r)/2")).unwrap()
    }

    fn half_space(n: usize) -> ConformalMetric {
        let mut alpha = vec![0.0; n];
        alpha[n - 1] = 1.0;
        let p = parse_profile("u", "u").unwrap().with_domain(Domain::new(0.0, f64::INFINITY));
        ConformalMetric::new(ScalarFieldRn::translation(alpha, p).unwrap()).unwrap()
    }

    fn max_diff(a: &SymTensor, b: &SymTensor) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn metric_examples() {
        let flat = ConformalMetric::flat(3).unwrap();
        assert_eq!(metric_at(&flat, &[0.3, 1.0, 2.0]).unwrap(), SymTensor::identity(3));
        assert_eq!(metric_at(&sphere(3), &[0.0; 3]).unwrap(), SymTensor::scaled_identity(3, 4.0));
        let gauss = ConformalMetric::new(radial(3, "exp(-r^2/2)")).unwrap();
        let g = metric_at(&gauss, &[1.0, 0.0, 0.0]).unwrap();
        assert!(max_diff(&g, &SymTensor::scaled_identity(3, std::f64::consts::E)) < 1e-14);
    }

    #[test]
    fn zero_conformal_factor_is_an_error() {
        let m = ConformalMetric::new(radial(3, "1-r")).unwrap();
        assert!(matches!(ricci_at(&m, &[1.0, 0.0, 0.0]), Err(Error::ZeroConformalFactor { .. })));
    }

    #[test]
    fn dimension_two_is_rejected() {
        assert!(matches!(
            ConformalMetric::new(ScalarFieldRn::constant(2, 1.0)),
            Err(Error::InvalidDimension(2))
        ));
    }

    #[test]
    fn christoffel_examples() {
        let flat = ConformalMetric::flat(3).unwrap();
        assert_eq!(christoffel_at(&flat, &[1.0, 2.0, 3.0]).unwrap().max_abs(), 0.0);
        let c = christoffel_at(&half_space(3), &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(c.get(2, 0, 0), 1.0);
        assert_eq!(c.get(0, 0, 2), -1.0);
        assert_eq!(c.get(2, 2, 2), -1.0);
        let m = sphere(4);
        let x = [0.3, -0.2, 0.5, 0.1];
        let a = christoffel_at(&m, &x).unwrap();
        let b = christoffel_at(&m.scaled(-2.5), &x).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn ricci_examples() {
        let flat = ConformalMetric::flat(3).unwrap();
        assert_eq!(ricci_at(&flat, &[1.0, 2.0, 3.0]).unwrap().max_abs(), 0.0);
        let r = ricci_at(&sphere(3), &[0.0; 3]).unwrap();
        assert!(max_diff(&r, &SymTensor::scaled_identity(3, 8.0)) < 1e-14);
        let h = ricci_at(&half_space(3), &[0.0, 0.0, 1.0]).unwrap();
        assert!(max_diff(&h, &SymTensor::scaled_identity(3, -2.0)) < 1e-14);
    }

    #[test]
    fn scalar_curvature_examples() {
        let flat = ConformalMetric::flat(3).unwrap();
        assert_eq!(scalar_curvature_at(&flat, &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        for x in [[0.0, 0.0, 0.0], [1.0, 2.0, -3.0], [0.1, 0.0, 0.4]] {
            assert!((scalar_curvature_at(&sphere(3), &x).unwrap() - 6.0).abs() < 1e-12);
        }
        // closed form of Example 2 at n = 3, r = 1 is -2.5
        let ex2 = ConformalMetric::new(radial(3, "1/(1+r)")).unwrap();
        let s = scalar_curvature_at(&ex2, &[1.0, 0.0, 0.0]).unwrap();
        assert!((s + 2.5).abs() < 1e-14);
    }

    #[test]
    fn scalar_curvature_is_two_homogeneous_in_phi() {
        let m = ConformalMetric::new(radial(3, "exp(-r^2/2)")).unwrap();
        let x = [0.4, -0.3, 0.2];
        let s = scalar_curvature_at(&m, &x).unwrap();
        for k in [2.0, 1.0 / 3.0] {
            let sk = scalar_curvature_at(&m.scaled(k), &x).unwrap();
            assert!((sk - k * k * s).abs() <= 1e-12 * s.abs().max(1.0));
        }
    }

    #[test]
    fn hessian_examples() {
        let flat = ConformalMetric::flat(3).unwrap();
        let f = radial(3, "r");
        assert_eq!(hessian_g(&flat, &f, &[0.2, 0.1, 0.3]).unwrap(), SymTensor::scaled_identity(3, 2.0));
        let lin = ScalarFieldRn::translation(vec![1.0, 0.0, 0.0], parse_profile("u", "u").unwrap()).unwrap();
        assert_eq!(hessian_g(&flat, &lin, &[0.2, 0.1, 0.3]).unwrap().max_abs(), 0.0);
        let h = radial(3, "(r-1)/(r+1)");
        assert!(hessian_g(&sphere(3), &h, &[1.0, 0.0, 0.0]).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn height_function_satisfies_obata_identity() {
        let m = sphere(3);
        let h = radial(3, "(r-1)/(r+1)");
        for x in [[0.3, 0.0, 0.0], [0.5, -1.2, 0.7], [2.0, 1.0, 1.0]] {
            let pg = m.at(&x).unwrap();
            let hj = h.jet(&x).unwrap();
            let resid = &pg.hessian(&hj) + &pg.metric().scale(hj.value);
            assert!(pg.norm_tensor(&resid) < 1e-13);
        }
    }

    #[test]
    fn differential_operator_examples() {
        let flat = ConformalMetric::flat(3).unwrap();
        assert!((laplacian_g(&flat, &radial(3, "r"), &[0.1, 0.2, 0.3]).unwrap() - 6.0).abs() < 1e-14);

        let two = ConformalMetric::new(ScalarFieldRn::constant(3, 2.0)).unwrap();
        let lin = ScalarFieldRn::translation(vec![1.0, 0.0, 0.0], parse_profile("u", "u").unwrap()).unwrap();
        let x = [0.5, 0.5, 0.5];
        let pg = two.at(&x).unwrap();
        let df = lin.jet(&x).unwrap().gradient;
        assert!((pg.norm_covector(&df).powi(2) - 4.0).abs() < 1e-14);
        assert!((pg.norm_vector(&pg.gradient(&lin.jet(&x).unwrap())).powi(2) - 4.0).abs() < 1e-14);

        let m = sphere(3);
        let h = radial(3, "(r-1)/(r+1)");
        let div = divergence_g(&m, |y| gradient_g(&m, &h, y), &[0.0; 3]).unwrap();
        assert!((div - 3.0).abs() < 1e-7, "{div}");
        assert!((laplacian_g(&m, &h, &[0.0; 3]).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn traceless_of_sphere_ricci_vanishes() {
        let m = sphere(4);
        let x = [0.4, 0.1, -0.9, 0.3];
        let pg = m.at(&x).unwrap();
        assert!(pg.traceless(&pg.ricci()).max_abs() < 1e-13);
        let t = traceless(&pg.ricci(), &pg.metric()).unwrap();
        assert!(t.max_abs() < 1e-12);
    }

    #[test]
    fn bianchi_identity_on_gaussian_factor() {
        let m = ConformalMetric::new(radial(3, "exp(-r^2/2)")).unwrap();
        let gap = bianchi_gap(&m, &[0.5, 0.3, -0.2]).unwrap();
        assert!(gap < 5e-5, "{gap}");
    }
}
