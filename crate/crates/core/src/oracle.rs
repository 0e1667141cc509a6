//! Brute-force curvature from raw metric components.
//!
//! Nothing here uses the conformal closed forms: the oracle only ever samples
//! `x ↦ gᵢⱼ(x)`. Christoffel symbols come from central differences of `g` with
//! step `h₁ = 1e-4·(1+‖x‖)`; their derivatives come from central differences of
//! those Christoffel symbols with step `h₂ = 2.5e-4·(1+‖x‖)`. Both stencils
//! are second order, so the truncation error of the curvature scales as `h₂²`.
//!
//! Index conventions: `Γᵏᵢⱼ` as in [`Christoffel`],
//! `Rᵖ_σμν = ∂μΓᵖνσ − ∂νΓᵖμσ + ΓᵖμλΓ^λνσ − ΓᵖνλΓ^λμσ`, `Ric_σν = Rᵖ_σpν`.

use std::sync::Arc;

use crate::error::Error;
use crate::fields::norm;
use crate::geometry::{Christoffel, ConformalMetric};
use crate::tensor::SymTensor;

pub type MetricFn = Arc<dyn Fn(&[f64]) -> Result<SymTensor, Error> + Send + Sync>;

/// Relative finite-difference steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub first: f64,
    pub second: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { first: 1e-4, second: 2.5e-4 }
    }
}

impl StepPolicy {
    pub fn scaled(self, k: f64) -> Self {
        Self { first: self.first * k, second: self.second * k }
    }
}

#[derive(Clone)]
pub struct RawMetric {
    n: usize,
    g: MetricFn,
    steps: StepPolicy,
}

impl std::fmt::Debug for RawMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RawMetric").field("n", &self.n).field("steps", &self.steps).finish()
    }
}

/// Riemann tensor `Rᵖ_σμν`, stored at `((p·n + σ)·n + μ)·n + ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
}

impl Riemann {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// All indices lowered with `g`: `R_ρσμν = g_ρλ R^λ_σμν`.
    pub fn lowered(&self, g: &SymTensor) -> Riemann {
        let n = self.n;
        let mut out = Riemann::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v: f64 = (0..n).map(|l| g.get(a, l) * self.get(l, b, c, d)).sum();
                        let i = out.idx(a, b, c, d);
                        out.data[i] = v;
                    }
                }
            }
        }
        out
    }

    /// Largest violations of `R_abcd = −R_bacd` and `R_abcd = R_cdab` (expects a
    /// fully lowered tensor).
    pub fn symmetry_defects(&self) -> (f64, f64) {
        let n = self.n;
        let (mut anti, mut pair) = (0.0_f64, 0.0_f64);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = self.get(a, b, c, d);
                        anti = anti.max((v + self.get(b, a, c, d)).abs());
                        pair = pair.max((v - self.get(c, d, a, b)).abs());
                    }
                }
            }
        }
        (anti, pair)
    }
}

#[derive(Debug, Clone)]
pub struct Curvature {
    pub christoffel: Christoffel,
    pub riemann: Riemann,
    pub ricci: SymTensor,
    /// Largest `|Ric_ij − Ric_ji|` before symmetrization.
    pub ricci_asymmetry: f64,
    pub scalar: f64,
    pub metric: SymTensor,
}

impl RawMetric {
    pub fn new(n: usize, g: MetricFn) -> Self {
        Self { n, g, steps: StepPolicy::default() }
    }

    /// Samples only the values of `φ` and builds `δ/φ²`.
    pub fn from_conformal(m: &ConformalMetric) -> Self {
        let phi = m.phi().clone();
        let n = m.dim();
        Self::new(
            n,
            Arc::new(move |x| {
                let p = phi.value(x)?;
                Ok(SymTensor::scaled_identity(n, 1.0 / (p * p)))
            }),
        )
    }

    pub fn with_steps(mut self, steps: StepPolicy) -> Self {
        self.steps = steps;
        self
    }

    pub fn steps(&self) -> StepPolicy {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn metric(&self, x: &[f64]) -> Result<SymTensor, Error> {
        let g = (self.g)(x)?;
        if g.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: g.dim() });
        }
        if g.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(g)
    }

    fn step(&self, x: &[f64], rel: f64) -> Result<f64, Error> {
        let h = rel * (1.0 + norm(x));
        if x.iter().any(|&xi| xi + h == xi || xi - h == xi) || !(h > 0.0) {
            return Err(Error::StepUnderflow(x.to_vec()));
        }
        Ok(h)
    }

    /// Christoffel symbols at `x` from first differences of `g` with step `h`.
    fn christoffel_with(&self, x: &[f64], h: f64) -> Result<Christoffel, Error> {
        let n = self.n;
        let ginv = self.metric(x)?.inverse_spd()?;
        // dg[l] = ∂_l g
        let mut dg = Vec::with_capacity(n);
        let mut y = x.to_vec();
        for l in 0..n {
            y[l] = x[l] + h;
            let plus = self.metric(&y)?;
            y[l] = x[l] - h;
            let minus = self.metric(&y)?;
            y[l] = x[l];
            dg.push((&plus - &minus).scale(1.0 / (2.0 * h)));
        }
        let mut c = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = (0..n)
                        .map(|l| ginv.get(k, l) * (dg[i].get(j, l) + dg[j].get(i, l) - dg[l].get(i, j)))
                        .sum::<f64>()
                        * 0.5;
                    c.set(k, i, j, v);
                    c.set(k, j, i, v);
                }
            }
        }
        Ok(c)
    }

    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel, Error> {
        let h1 = self.step(x, self.steps.first)?;
        self.christoffel_with(x, h1)
    }

    pub fn curvature(&self, x: &[f64]) -> Result<Curvature, Error> {
        let n = self.n;
        let h1 = self.step(x, self.steps.first)?;
        let h2 = self.step(x, self.steps.second)?;
        let metric = self.metric(x)?;
        let gamma = self.christoffel_with(x, h1)?;
        // dgamma[m] = ∂_m Γ
        let mut dgamma = Vec::with_capacity(n);
        let mut y = x.to_vec();
        for m in 0..n {
            y[m] = x[m] + h2;
            let plus = self.christoffel_with(&y, h1)?;
            y[m] = x[m] - h2;
            let minus = self.christoffel_with(&y, h1)?;
            y[m] = x[m];
            let mut d = Christoffel::zeros(n);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        d.set(a, b, c, (plus.get(a, b, c) - minus.get(a, b, c)) / (2.0 * h2));
                    }
                }
            }
            dgamma.push(d);
        }
        let mut riemann = Riemann::zeros(n);
        for p in 0..n {
            for s in 0..n {
                for mu in 0..n {
                    for nu in 0..n {
                        let mut v = dgamma[mu].get(p, nu, s) - dgamma[nu].get(p, mu, s);
                        for l in 0..n {
                            v += gamma.get(p, mu, l) * gamma.get(l, nu, s)
                                - gamma.get(p, nu, l) * gamma.get(l, mu, s);
                        }
                        let i = riemann.idx(p, s, mu, nu);
                        riemann.data[i] = v;
                    }
                }
            }
        }
        let raw_ricci: Vec<f64> = (0..n * n)
            .map(|ij| {
                let (s, nu) = (ij / n, ij % n);
                (0..n).map(|p| riemann.get(p, s, p, nu)).sum()
            })
            .collect();
        let ricci_asymmetry = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (raw_ricci[i * n + j] - raw_ricci[j * n + i]).abs())
            .fold(0.0_f64, f64::max);
        let ricci = SymTensor::from_fn(n, |i, j| raw_ricci[i * n + j]);
        let scalar = ricci.trace_g(&metric)?;
        Ok(Curvature { christoffel: gamma, riemann, ricci, ricci_asymmetry, scalar, metric })
    }
}

/// `(Γ, Riemann, Ricci, S)` of `m` at `x` by finite differences.
pub fn fd_curvature(m: &RawMetric, x: &[f64]) -> Result<Curvature, Error> {
    m.curvature(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarFieldRn;
    use crate::profiles::{parse_profile, Domain};

    fn conformal(e: &str, n: usize) -> RawMetric {
        let phi = ScalarFieldRn::radial(n, parse_profile(e, "r").unwrap());
        RawMetric::from_conformal(&ConformalMetric::new(phi).unwrap())
    }

    #[test]
    fn euclidean_curvature_vanishes() {
        let m = RawMetric::new(3, Arc::new(|_| Ok(SymTensor::identity(3))));
        let c = fd_curvature(&m, &[0.3, 0.2, 0.1]).unwrap();
        assert_eq!(c.christoffel.max_abs(), 0.0);
        assert_eq!(c.riemann.max_abs(), 0.0);
        assert_eq!(c.ricci.max_abs(), 0.0);
        assert_eq!(c.scalar, 0.0);
    }

    #[test]
    fn sphere_chart_ricci_at_origin() {
        let c = fd_curvature(&conformal("(1+r)/2", 3), &[0.0; 3]).unwrap();
        assert!((&c.ricci - &SymTensor::scaled_identity(3, 8.0)).max_abs() < 1e-6);
        assert!(c.ricci_asymmetry < 1e-7);
    }

    #[test]
    fn half_space_scalar_curvature() {
        let m = RawMetric::new(
            3,
            Arc::new(|x: &[f64]| Ok(SymTensor::scaled_identity(3, 1.0 / (x[2] * x[2])))),
        );
        let c = fd_curvature(&m, &[0.0, 0.0, 1.0]).unwrap();
        assert!((c.scalar + 6.0).abs() < 1e-5, "{}", c.scalar);
    }

    #[test]
    fn riemann_symmetries_hold() {
        let m = conformal("exp(-r^2/2)", 3);
        let c = fd_curvature(&m, &[0.4, -0.3, 0.5]).unwrap();
        let (anti, pair) = c.riemann.lowered(&c.metric).symmetry_defects();
        assert!(anti < 1e-5 && pair < 1e-5, "{anti} {pair}");
    }

    #[test]
    fn non_positive_definite_metric_is_rejected() {
        let m = RawMetric::new(3, Arc::new(|_| Ok(SymTensor::diagonal(&[1.0, -1.0, 1.0]))));
        assert!(matches!(fd_curvature(&m, &[0.0; 3]), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn step_underflow_is_reported() {
        let m = RawMetric::new(3, Arc::new(|_| Ok(SymTensor::identity(3))))
            .with_steps(StepPolicy { first: 1e-30, second: 1e-30 });
        assert!(matches!(fd_curvature(&m, &[1.0, 0.0, 0.0]), Err(Error::StepUnderflow(_))));
    }

    #[test]
    fn domain_errors_surface() {
        let p = parse_profile("u", "u").unwrap().with_domain(Domain::new(0.0, f64::INFINITY));
        let phi = ScalarFieldRn::translation(vec![0.0, 0.0, 1.0], p).unwrap();
        let m = RawMetric::from_conformal(&ConformalMetric::new(phi).unwrap());
        assert!(fd_curvature(&m, &[0.0, 0.0, 1e-4]).is_err());
    }
}
