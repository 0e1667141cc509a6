//! The three worked families plus the flat Gaussian soliton, with their
//! printed closed forms for `ν`, `λ` and `S`.
//!
//! 1. `φ = e^{−r²/2}`, `f = cr` (radial)
//! 2. `φ = 1/(1+r)`, `f = cr` (radial)
//! 3. `φ = 1 + tanh u`, `f = u`, `u = α·x` (translation)

use std::sync::Arc;

use crate::error::Error;
use crate::gqe::{phi_from_v, radial_structure, translation_structure, Closure, GQEStructure, PhiTransform};
use crate::profiles::{Domain, Jet, Profile1D};
use crate::suite::{ClosedForms, Subject};

#[derive(Clone)]
pub struct WorkedExample {
    pub id: u8,
    pub n: usize,
    pub phi: Profile1D,
    pub f: Profile1D,
    /// `Some(α)` for translation families.
    pub alpha: Option<Vec<f64>>,
    pub structure: GQEStructure,
    pub closure: Closure,
    pub closed_forms: ClosedForms,
    /// Name of the symmetry variable, `r` or `u`.
    pub var: &'static str,
}

impl std::fmt::Debug for WorkedExample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "WorkedExample({}, n={}, phi={}, f={})", self.id, self.n, self.phi.label(), self.f.label())
    }
}

fn linear(c: f64, var: &str) -> Profile1D {
    Profile1D::from_fn(format!("{c}*{var}"), Domain::REAL_LINE, move |t| Ok(Jet::new(c * t, c, 0.0)))
}

/// `ν, λ, S` of the first example as printed.
pub fn example1_forms(n: usize, c: f64) -> ClosedForms {
    let n = n as f64;
    Arc::new(move |r: f64| {
        let e = (-r * r).exp();
        (
            (n * r * r - 2.0 * c * r - 2.0 * r * r - n + 2.0) / (c * c),
            4.0 * e * r * (-n * r * r + c * r + 2.0 * r * r - n) + 2.0 * c * e,
            -4.0 * (n - 1.0) * e * r * (n * r * r - 2.0 * r * r + n + 2.0),
        )
    })
}

/// `ν, λ, S` of the second example as printed.
pub fn example2_forms(n: usize, c: f64) -> ClosedForms {
    let n = n as f64;
    Arc::new(move |r: f64| {
        let q = 1.0 + r;
        (
            2.0 / (c * c * q * q) * (n - 2.0 - c * q),
            4.0 / q.powi(4) * (c * r * q - 2.0 * r * (n - 2.0) - n + 1.0) + 2.0 * c / (q * q),
            4.0 * (n - 1.0) / q.powi(4) * (4.0 * r - 2.0 * n * r - n),
        )
    })
}

/// `ν, λ, S` of the third example as printed, `a = |α|²`.
pub fn example3_forms(n: usize, a: f64) -> ClosedForms {
    let n = n as f64;
    Arc::new(move |u: f64| {
        let (t, ch) = (u.tanh(), u.cosh());
        let s = 1.0 / (ch * ch);
        (
            2.0 * (1.0 - (n - 2.0) * t) * s / (1.0 + t),
            a * s * ((n - 3.0) * t * t - 3.0 * t - n),
            a * (n - 1.0) * s * ((n - 4.0) * t * t - 4.0 * t - n),
        )
    })
}

/// Builds example `id ∈ {1, 2, 3}` in dimension `n`. `c` scales the radial
/// potential `f = cr`; the third example uses `f = u` and direction `alpha`
/// (default `e₁`).
pub fn example(id: u8, n: usize, c: f64, alpha: Option<Vec<f64>>) -> Result<WorkedExample, Error> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    match id {
        1 | 2 => {
            if c == 0.0 || !c.is_finite() {
                return Err(Error::InvalidParameter(format!("c = {c} must be a non-zero number")));
            }
            if alpha.is_some() {
                return Err(Error::InvalidParameter("radial examples take no direction".into()));
            }
            let (phi, forms) = if id == 1 {
                (Profile1D::parse("exp(-r^2/2)", "r")?, example1_forms(n, c))
            } else {
                (Profile1D::parse("1/(1+r)", "r")?.with_domain(Domain::new(-1.0, f64::INFINITY)), example2_forms(n, c))
            };
            let f = linear(c, "r");
            let (structure, closure) = radial_structure(&phi, &f, n)?;
            Ok(WorkedExample { id, n, phi, f, alpha: None, structure, closure, closed_forms: forms, var: "r" })
        }
        3 => {
            if c != 1.0 {
                return Err(Error::InvalidParameter("example 3 uses f = u; c must be 1".into()));
            }
            let alpha = alpha.unwrap_or_else(|| {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                e
            });
            if alpha.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
            }
            let a: f64 = alpha.iter().map(|v| v * v).sum();
            let phi = Profile1D::parse("1+tanh(u)", "u")?;
            let f = Profile1D::parse("u", "u")?;
            let (structure, closure) = translation_structure(&phi, &f, &alpha)?;
            Ok(WorkedExample {
                id,
                n,
                phi,
                f,
                alpha: Some(alpha),
                structure,
                closure,
                closed_forms: example3_forms(n, a),
                var: "u",
            })
        }
        other => Err(Error::InvalidParameter(format!("no example {other}; choose 1, 2 or 3"))),
    }
}

/// `φ ≡ 1`, `f = cr`, `ν ≡ 0`, `λ ≡ 2c`.
pub fn flat_gaussian(n: usize, c: f64) -> Result<WorkedExample, Error> {
    let phi = Profile1D::constant(1.0);
    let f = linear(c, "r");
    let (structure, closure) = radial_structure(&phi, &f, n)?;
    Ok(WorkedExample {
        id: 0,
        n,
        phi,
        f,
        alpha: None,
        structure,
        closure,
        closed_forms: Arc::new(move |_| (0.0, 2.0 * c, 0.0)),
        var: "r",
    })
}

impl WorkedExample {
    /// `v = ν∘f⁻¹`: for `f = ct` this is `t ↦ ν(t/c)`.
    pub fn v(&self) -> Result<Profile1D, Error> {
        let c = self.f.d1(0.0)?;
        let back = linear(1.0 / c, "t");
        Ok(self.closure.nu.compose(&back))
    }

    /// Transform with `c₁ = 1`, `c₂ = 0` based at `f(t_lo)` over the `f`-image of
    /// `[t_lo, t_hi]` in the symmetry variable.
    pub fn transform(&self, t_lo: f64, t_hi: f64) -> Result<PhiTransform, Error> {
        let (a, b) = (self.f.eval(t_lo)?, self.f.eval(t_hi)?);
        let (lo, hi) = (a.min(b), a.max(b));
        phi_from_v(&self.v()?, 1.0, 0.0, a, (lo, hi))
    }

    /// Transform with `v ≡ 0`, so `u = f`; enough for identities that hold
    /// for every potential.
    pub fn identity_transform(&self, t_lo: f64, t_hi: f64) -> Result<PhiTransform, Error> {
        let (a, b) = (self.f.eval(t_lo)?, self.f.eval(t_hi)?);
        phi_from_v(&Profile1D::constant(0.0), 1.0, 0.0, a, (a.min(b), a.max(b)))
    }

    pub fn subject(&self) -> Subject {
        Subject {
            structure: self.structure.clone(),
            closure: Some(self.closure.clone()),
            transform: None,
            divergence_transform: None,
            closed_forms: Some(self.closed_forms.clone()),
        }
    }
}
