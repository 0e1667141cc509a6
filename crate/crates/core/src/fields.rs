//! Scalar fields on ℝⁿ built from one-dimensional profiles.
//!
//! **Convention:** the radial argument is the *squared* norm `r = ‖x‖²`, not
//! `‖x‖`. A radial profile `F` therefore defines the field `x ↦ F(‖x‖²)` with
//!
//! ```text
//! ∂ᵢF   = 2 xᵢ F′(r)
//! ∂ᵢ∂ⱼF = 2 δᵢⱼ F′(r) + 4 xᵢ xⱼ F″(r)
//! ```
//!
//! A translation profile uses `u = α·x` and gives `∂ᵢF = αᵢF′(u)`,
//! `∂ᵢ∂ⱼF = αᵢαⱼF″(u)`. Explicit fields are arbitrary closures differentiated
//! by central differences with step `h = 1e-5·(1 + ‖x‖)`. Composite fields
//! apply a profile to another field.

use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::profiles::Profile1D;
use crate::tensor::SymTensor;

pub type ExplicitFn = Arc<dyn Fn(&[f64]) -> Result<f64, Error> + Send + Sync>;

/// Relative step for explicit-field central differences.
pub const EXPLICIT_FD_STEP: f64 = 1e-5;

#[derive(Clone)]
pub enum SymmetryKind {
    Radial,
    Translation { alpha: Vec<f64>, a: f64 },
    Explicit { label: String, f: ExplicitFn },
}

impl fmt::Debug for SymmetryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetryKind::Radial => write!(f, "Radial"),
            SymmetryKind::Translation { alpha, a } => write!(f, "Translation(alpha={alpha:?}, a={a})"),
            SymmetryKind::Explicit { label, .. } => write!(f, "Explicit({label})"),
        }
    }
}

#[derive(Clone)]
enum Repr {
    Profiled { profile: Profile1D, kind: SymmetryKind },
    Explicit { label: String, f: ExplicitFn },
    Composite { outer: Profile1D, inner: Box<ScalarFieldRn> },
}

/// A scalar field on ℝⁿ. Cheap to clone; immutable.
#[derive(Clone)]
pub struct ScalarFieldRn {
    n: usize,
    repr: Repr,
}

impl fmt::Debug for ScalarFieldRn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFieldRn(n={}, {})", self.n, self.label())
    }
}

/// Value, coordinate gradient and coordinate Hessian of a field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymTensor,
}

impl FieldJet {
    pub fn constant(n: usize, value: f64) -> Self {
        Self { value, gradient: vec![0.0; n], hessian: SymTensor::zeros(n) }
    }

    /// Jet of `p ∘ self`.
    pub fn compose(&self, p0: f64, p1: f64, p2: f64) -> Self {
        Self {
            value: p0,
            gradient: self.gradient.iter().map(|g| p1 * g).collect(),
            hessian: &self.hessian.scale(p1) + &SymTensor::outer(&self.gradient).scale(p2),
        }
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ScalarFieldRn {
    pub fn radial(n: usize, profile: Profile1D) -> Self {
        Self { n, repr: Repr::Profiled { profile, kind: SymmetryKind::Radial } }
    }

    /// Field `F(α·x)`; requires `Σαₖ² > 0`.
    pub fn translation(alpha: Vec<f64>, profile: Profile1D) -> Result<Self, Error> {
        let a: f64 = alpha.iter().map(|v| v * v).sum();
        if !(a > 0.0) {
            return Err(Error::DegenerateDirection);
        }
        Ok(Self {
            n: alpha.len(),
            repr: Repr::Profiled { profile, kind: SymmetryKind::Translation { alpha, a } },
        })
    }

    pub fn explicit<F>(n: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, Error> + Send + Sync + 'static,
    {
        Self { n, repr: Repr::Explicit { label: label.into(), f: Arc::new(f) } }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self::radial(n, Profile1D::constant(value))
    }

    /// The field `outer ∘ inner`.
    pub fn composite(outer: Profile1D, inner: ScalarFieldRn) -> Self {
        Self { n: inner.n, repr: Repr::Composite { outer, inner: Box::new(inner) } }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SymmetryKind {
        match &self.repr {
            Repr::Profiled { kind, .. } => kind.clone(),
            Repr::Explicit { label, f } => SymmetryKind::Explicit { label: label.clone(), f: f.clone() },
            Repr::Composite { inner, .. } => inner.kind(),
        }
    }

    /// The underlying profile for radial and translation fields.
    pub fn profile(&self) -> Option<&Profile1D> {
        match &self.repr {
            Repr::Profiled { profile, .. } => Some(profile),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.repr {
            Repr::Profiled { profile, kind: SymmetryKind::Radial } => format!("radial[{}]", profile.label()),
            Repr::Profiled { profile, .. } => format!("translation[{}]", profile.label()),
            Repr::Explicit { label, .. } => format!("explicit[{label}]"),
            Repr::Composite { outer, inner } => format!("{}∘{}", outer.label(), inner.label()),
        }
    }

    /// The symmetry variable (`‖x‖²` or `α·x`) for profiled fields.
    pub fn argument(&self, x: &[f64]) -> Option<f64> {
        match &self.repr {
            Repr::Profiled { kind: SymmetryKind::Radial, .. } => Some(x.iter().map(|v| v * v).sum()),
            Repr::Profiled { kind: SymmetryKind::Translation { alpha, .. }, .. } => {
                Some(alpha.iter().zip(x).map(|(a, b)| a * b).sum())
            }
            _ => None,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), Error> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, Error> {
        self.check_dim(x)?;
        match &self.repr {
            Repr::Profiled { profile, .. } => Ok(profile.eval(self.argument(x).unwrap())?),
            Repr::Explicit { f, .. } => f(x),
            Repr::Composite { outer, inner } => Ok(outer.eval(inner.value(x)?)?),
        }
    }

    /// Coordinate jet at `x`.
    pub fn jet(&self, x: &[f64]) -> Result<FieldJet, Error> {
        self.check_dim(x)?;
        let n = self.n;
        match &self.repr {
            Repr::Profiled { profile, kind } => match kind {
                SymmetryKind::Radial => {
                    let r: f64 = x.iter().map(|v| v * v).sum();
                    let p = profile.jet(r)?;
                    Ok(FieldJet {
                        value: p.value,
                        gradient: x.iter().map(|xi| 2.0 * xi * p.d1).collect(),
                        hessian: SymTensor::from_fn(n, |i, j| {
                            let delta = if i == j { 2.0 * p.d1 } else { 0.0 };
                            delta + 4.0 * x[i] * x[j] * p.d2
                        }),
                    })
                }
                SymmetryKind::Translation { alpha, .. } => {
                    let u: f64 = alpha.iter().zip(x).map(|(a, b)| a * b).sum();
                    let p = profile.jet(u)?;
                    Ok(FieldJet {
                        value: p.value,
                        gradient: alpha.iter().map(|a| a * p.d1).collect(),
                        hessian: SymTensor::from_fn(n, |i, j| alpha[i] * alpha[j] * p.d2),
                    })
                }
                SymmetryKind::Explicit { f, .. } => explicit_jet(f.as_ref(), x),
            },
            Repr::Explicit { f, .. } => explicit_jet(f.as_ref(), x),
            Repr::Composite { outer, inner } => {
                let ij = inner.jet(x)?;
                let o = outer.jet(ij.value)?;
                Ok(ij.compose(o.value, o.d1, o.d2))
            }
        }
    }
}

/// `(value, gradient, hessian)` of `field` at `x`.
pub fn field_jet(field: &ScalarFieldRn, x: &[f64]) -> Result<FieldJet, Error> {
    field.jet(x)
}

fn explicit_jet(f: &(dyn Fn(&[f64]) -> Result<f64, Error> + Send + Sync), x: &[f64]) -> Result<FieldJet, Error> {
    let n = x.len();
    let h = EXPLICIT_FD_STEP * (1.0 + norm(x));
    let f0 = f(x)?;
    let shifted = |moves: &[(usize, f64)]| -> Result<f64, Error> {
        let mut y = x.to_vec();
        for &(k, d) in moves {
            y[k] += d;
        }
        f(&y)
    };
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for i in 0..n {
        plus[i] = shifted(&[(i, h)])?;
        minus[i] = shifted(&[(i, -h)])?;
    }
    let gradient = (0..n).map(|i| (plus[i] - minus[i]) / (2.0 * h)).collect();
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        hess[i * n + i] = (plus[i] - 2.0 * f0 + minus[i]) / (h * h);
        for j in 0..i {
            let pp = shifted(&[(i, h), (j, h)])?;
            let pm = shifted(&[(i, h), (j, -h)])?;
            let mp = shifted(&[(i, -h), (j, h)])?;
            let mm = shifted(&[(i, -h), (j, -h)])?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    Ok(FieldJet { value: f0, gradient, hessian: SymTensor::from_fn(n, |i, j| hess[i * n + j]) })
}
