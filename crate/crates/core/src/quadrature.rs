//! Adaptive Simpson quadrature and cumulative antiderivative tables.

use std::sync::Arc;

use crate::error::Error;

/// Absolute tolerance used throughout for one-dimensional integrals.
pub const ABS_TOL: f64 = 1e-10;
/// Maximum bisection depth; an interval is never split into more than 2⁴⁰ pieces.
pub const MAX_DEPTH: u32 = 40;

pub type Integrand = Arc<dyn Fn(f64) -> Result<f64, Error> + Send + Sync>;

/// `∫_a^b f` by adaptive Simpson with Richardson correction. Returns
/// [`Error::QuadratureNonConvergence`] when the depth cap is reached before the
/// local error estimate drops under its share of `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, Error>
where
    F: Fn(f64) -> Result<f64, Error>,
{
    // a handful of initial panels so narrow features are not stepped over
    adaptive_simpson_panels(f, a, b, tol, 8)
}

/// [`adaptive_simpson`] starting from `panels` equal sub-intervals. One panel
/// is enough on short intervals of a smooth integrand.
pub fn adaptive_simpson_panels<F>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Result<f64, Error>
where
    F: Fn(f64) -> Result<f64, Error>,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return Ok(-adaptive_simpson_panels(f, b, a, tol, panels)?);
    }
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + w * k as f64;
        let hi = if k + 1 == panels { b } else { lo + w };
        let (flo, fhi) = (f(lo)?, f(hi)?);
        let m = 0.5 * (lo + hi);
        let fm = f(m)?;
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        total += refine(&f, lo, hi, flo, fm, fhi, whole, tol / panels as f64, MAX_DEPTH)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, Error>
where
    F: Fn(f64) -> Result<f64, Error>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let both = left + right;
    let delta = both - whole;
    if !delta.is_finite() {
        return Err(Error::QuadratureNonConvergence { lo: a, hi: b });
    }
    let floor = 64.0 * f64::EPSILON * both.abs();
    if delta.abs() <= 15.0 * tol.max(floor) || m <= a || m >= b {
        return Ok(both + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence { lo: a, hi: b });
    }
    Ok(refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Antiderivative `t ↦ ∫_{t0}^t f` on a working interval `[lo, hi] ∋ t0`,
/// stored as a cumulative table on a uniform node grid and refined locally
/// from the nearest node on each query. Nodes should be dense enough that each
/// segment is resolved by a few Simpson levels; queries then cost a handful of
/// integrand calls, which keeps nested antiderivatives affordable.
#[derive(Clone)]
pub struct CumulativeIntegral {
    f: Integrand,
    t0: f64,
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    tol: f64,
}

impl std::fmt::Debug for CumulativeIntegral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CumulativeIntegral")
            .field("t0", &self.t0)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl CumulativeIntegral {
    pub fn new(f: Integrand, t0: f64, lo: f64, hi: f64, segments: usize) -> Result<Self, Error> {
        if !(lo <= t0 && t0 <= hi && lo < hi) {
            return Err(Error::OutsideWorkingInterval { t: t0, lo, hi });
        }
        let segments = segments.max(1);
        let mut nodes: Vec<f64> = (0..=segments)
            .map(|k| lo + (hi - lo) * k as f64 / segments as f64)
            .collect();
        *nodes.last_mut().unwrap() = hi;
        if !nodes.contains(&t0) {
            let pos = nodes.partition_point(|&x| x < t0);
            nodes.insert(pos, t0);
        }
        let base = nodes.iter().position(|&x| x == t0).unwrap();
        let tol = ABS_TOL / nodes.len() as f64;
        let mut values = vec![0.0; nodes.len()];
        for k in base + 1..nodes.len() {
            values[k] = values[k - 1] + adaptive_simpson_panels(|s| f(s), nodes[k - 1], nodes[k], tol, 1)?;
        }
        for k in (0..base).rev() {
            values[k] = values[k + 1] - adaptive_simpson_panels(|s| f(s), nodes[k], nodes[k + 1], tol, 1)?;
        }
        Ok(Self { f, t0, lo, hi, nodes, values, tol })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn base_point(&self) -> f64 {
        self.t0
    }

    pub fn integrand(&self, t: f64) -> Result<f64, Error> {
        (self.f)(t)
    }

    pub fn value(&self, t: f64) -> Result<f64, Error> {
        if !(t >= self.lo && t <= self.hi) {
            return Err(Error::OutsideWorkingInterval { t, lo: self.lo, hi: self.hi });
        }
        let idx = self.nearest_node(t);
        let f = &self.f;
        Ok(self.values[idx] + adaptive_simpson_panels(|s| f(s), self.nodes[idx], t, self.tol, 1)?)
    }

    fn nearest_node(&self, t: f64) -> usize {
        let pos = self.nodes.partition_point(|&x| x < t);
        match pos {
            0 => 0,
            p if p >= self.nodes.len() => self.nodes.len() - 1,
            p => {
                if (self.nodes[p] - t).abs() < (t - self.nodes[p - 1]).abs() {
                    p
                } else {
                    p - 1
                }
            }
        }
    }
}
