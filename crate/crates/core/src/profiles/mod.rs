//! One-dimensional profile functions with exact first and second derivatives.
//!
//! A [`Profile1D`] is an immutable, cheaply clonable handle to a function of one
//! real variable that can report its second-order [`Jet`] at any point of its
//! open domain. Profiles come from the built-in [`catalog`], from a parsed
//! [`ExpressionAst`], or from other profiles (composition, inversion, closures
//! over quadrature tables).

pub mod catalog;
pub mod expr;
pub mod jet;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use expr::ExpressionAst;
pub use jet::Jet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("{kind} in '{expr}' at argument {arg}")]
    Eval {
        kind: &'static str,
        expr: String,
        arg: f64,
    },
    #[error("argument {t} outside profile domain ({lo}, {hi}) of '{label}'")]
    Domain { t: f64, lo: f64, hi: f64, label: String },
    #[error("unknown catalog profile '{0}'")]
    UnknownCatalogEntry(String),
    #[error("inversion of '{label}': target {target} not bracketed by [{lo}, {hi}]")]
    NotBracketed { label: String, target: f64, lo: f64, hi: f64 },
    #[error("inversion of '{label}' at {at}: derivative vanishes")]
    SingularInverse { label: String, at: f64 },
    #[error("{0}")]
    Other(String),
}

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty domain ({lo}, {hi})");
        Self { lo, hi }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }
}

impl Default for Domain {
    fn default() -> Self {
        Self::REAL_LINE
    }
}

/// Anything that can produce a second-order jet at a point.
pub trait JetSource: Send + Sync {
    fn jet(&self, t: f64) -> Result<Jet, ProfileError>;

    /// Value only; sources whose derivatives are expensive override this.
    fn value(&self, t: f64) -> Result<f64, ProfileError> {
        Ok(self.jet(t)?.value)
    }
}

impl JetSource for ExpressionAst {
    fn jet(&self, t: f64) -> Result<Jet, ProfileError> {
        ExpressionAst::jet(self, t)
    }
}

impl<F> JetSource for F
where
    F: Fn(f64) -> Result<Jet, ProfileError> + Send + Sync,
{
    fn jet(&self, t: f64) -> Result<Jet, ProfileError> {
        self(t)
    }
}

#[derive(Clone)]
pub struct Profile1D {
    label: String,
    domain: Domain,
    source: Arc<dyn JetSource>,
}

impl fmt::Debug for Profile1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile1D")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Parses `text` as an expression in `varname` and wraps it as a profile on the
/// whole real line.
pub fn parse_profile(text: &str, varname: &str) -> Result<Profile1D, ProfileError> {
    Profile1D::parse(text, varname)
}

/// `(value, d1, d2)` of `p` at `t`.
pub fn profile_derivatives(p: &Profile1D, t: f64) -> Result<(f64, f64, f64), ProfileError> {
    let j = p.jet(t)?;
    Ok((j.value, j.d1, j.d2))
}

impl Profile1D {
    pub fn parse(text: &str, varname: &str) -> Result<Self, ProfileError> {
        let ast = ExpressionAst::parse(text, varname)?;
        Ok(Self::from_ast(ast))
    }

    pub fn from_ast(ast: ExpressionAst) -> Self {
        Self {
            label: ast.to_string(),
            domain: Domain::REAL_LINE,
            source: Arc::new(ast),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::from_fn(format!("{value}"), Domain::REAL_LINE, move |_| Ok(Jet::constant(value)))
    }

    /// The identity map `t ↦ t`.
    pub fn identity() -> Self {
        Self::from_fn("t", Domain::REAL_LINE, |t| Ok(Jet::variable(t)))
    }

    pub fn from_fn<F>(label: impl Into<String>, domain: Domain, f: F) -> Self
    where
        F: Fn(f64) -> Result<Jet, ProfileError> + Send + Sync + 'static,
    {
        Self { label: label.into(), domain, source: Arc::new(f) }
    }

    pub fn from_source(label: impl Into<String>, domain: Domain, source: Arc<dyn JetSource>) -> Self {
        Self { label: label.into(), domain, source }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    fn check(&self, t: f64) -> Result<(), ProfileError> {
        if !self.domain.contains(t) {
            return Err(ProfileError::Domain {
                t,
                lo: self.domain.lo,
                hi: self.domain.hi,
                label: self.label.clone(),
            });
        }
        Ok(())
    }

    pub fn jet(&self, t: f64) -> Result<Jet, ProfileError> {
        self.check(t)?;
        self.source.jet(t)
    }

    /// A profile known only through its values. Derivatives come from
    /// five-point central differences with step `1e-3·(1+|t|)`, shrunk to stay
    /// inside the domain.
    pub fn from_values<F>(label: impl Into<String>, domain: Domain, f: F) -> Self
    where
        F: Fn(f64) -> Result<f64, ProfileError> + Send + Sync + 'static,
    {
        Self { label: label.into(), domain, source: Arc::new(ValueSource { f, domain }) }
    }

    pub fn eval(&self, t: f64) -> Result<f64, ProfileError> {
        self.check(t)?;
        self.source.value(t)
    }

    pub fn d1(&self, t: f64) -> Result<f64, ProfileError> {
        Ok(self.jet(t)?.d1)
    }

    pub fn d2(&self, t: f64) -> Result<f64, ProfileError> {
        Ok(self.jet(t)?.d2)
    }

    /// `self ∘ inner`, with the jet assembled by the chain rule.
    pub fn compose(&self, inner: &Profile1D) -> Profile1D {
        Profile1D {
            label: format!("({})∘({})", self.label, inner.label),
            domain: inner.domain,
            source: Arc::new(Composed { outer: self.clone(), inner: inner.clone() }),
        }
    }

    /// Inverse of a strictly monotone profile on `[lo, hi]`, located by bisection
    /// to `1e-12` and differentiated by the inverse function rule.
    pub fn inverse(&self, lo: f64, hi: f64) -> Result<Profile1D, ProfileError> {
        let (a, b) = (self.eval(lo)?, self.eval(hi)?);
        if a == b {
            return Err(ProfileError::SingularInverse { label: self.label.clone(), at: lo });
        }
        let (ylo, yhi) = if a < b { (a, b) } else { (b, a) };
        Ok(Profile1D {
            label: format!("inverse({})", self.label),
            domain: Domain::new(ylo, yhi),
            source: Arc::new(Inverse { fwd: self.clone(), lo, hi }),
        })
    }
}

struct Inverse {
    fwd: Profile1D,
    lo: f64,
    hi: f64,
}

impl JetSource for Inverse {
    fn value(&self, y: f64) -> Result<f64, ProfileError> {
        invert_monotone(&self.fwd, y, self.lo, self.hi, INVERSION_TOL)
    }

    fn jet(&self, y: f64) -> Result<Jet, ProfileError> {
        let t = self.value(y)?;
        let j = self.fwd.jet(t)?;
        if j.d1 == 0.0 {
            return Err(ProfileError::SingularInverse { label: self.fwd.label.clone(), at: t });
        }
        let d1 = 1.0 / j.d1;
        Ok(Jet::new(t, d1, -j.d2 * d1 * d1 * d1))
    }
}

struct Composed {
    outer: Profile1D,
    inner: Profile1D,
}

impl JetSource for Composed {
    fn jet(&self, t: f64) -> Result<Jet, ProfileError> {
        let i = self.inner.jet(t)?;
        let o = self.outer.jet(i.value)?;
        Ok(i.chain(o.value, o.d1, o.d2))
    }

    fn value(&self, t: f64) -> Result<f64, ProfileError> {
        self.outer.eval(self.inner.eval(t)?)
    }
}

/// Relative step of the five-point stencils behind [`Profile1D::from_values`].
pub const VALUE_FD_STEP: f64 = 1e-3;

struct ValueSource<F> {
    f: F,
    domain: Domain,
}

impl<F> JetSource for ValueSource<F>
where
    F: Fn(f64) -> Result<f64, ProfileError> + Send + Sync,
{
    fn value(&self, t: f64) -> Result<f64, ProfileError> {
        (self.f)(t)
    }

    fn jet(&self, t: f64) -> Result<Jet, ProfileError> {
        let room = (t - self.domain.lo).min(self.domain.hi - t) / 3.0;
        let h = (VALUE_FD_STEP * (1.0 + t.abs())).min(room);
        let f = &self.f;
        let f0 = f(t)?;
        let (p1, m1, p2, m2) = (f(t + h)?, f(t - h)?, f(t + 2.0 * h)?, f(t - 2.0 * h)?);
        let d1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        let d2 = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * f0) / (12.0 * h * h);
        Ok(Jet::new(f0, d1, d2))
    }
}

/// Bisection tolerance for inverting monotone profiles.
pub const INVERSION_TOL: f64 = 1e-12;

/// Solves `p(t) = target` for `t ∈ [lo, hi]` by bisection. `p` must be monotone
/// on the bracket.
pub fn invert_monotone(
    p: &Profile1D,
    target: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, ProfileError> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = p.eval(a)? - target;
    let fb = p.eval(b)? - target;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(ProfileError::NotBracketed { label: p.label.clone(), target, lo, hi });
    }
    // bisection halves the bracket; 200 steps exhaust f64 resolution on any finite bracket
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return Ok(m);
        }
        let fm = p.eval(m)? - target;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Central first and second differences of `eval`, used as the independent
/// check on jet derivatives.
pub fn central_differences(p: &Profile1D, t: f64, h: f64) -> Result<(f64, f64), ProfileError> {
    let (fp, f0, fm) = (p.eval(t + h)?, p.eval(t)?, p.eval(t - h)?);
    Ok(((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)))
}
