//! Grid verification of a family structure: every pointwise identity is
//! evaluated at each sample in parallel and reduced in sample order.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::scalar_curvature_at;
use crate::grid::Sample;
use crate::gqe::{
    fit_lambda_by_trace, residual_at, traceless_identity_gap, transformed_residual_at, wedge_invariant_at, Closure,
    GQEStructure, PhiTransform,
};
use crate::report::{Check, VerificationReport};
use crate::rigidity::divergence_identity_gap;

/// Every tolerance used by the suites. All of them are echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub residual: f64,
    pub wedge: f64,
    pub lambda_trace: f64,
    pub closed_forms: f64,
    pub nu_transform: f64,
    pub transformed_residual: f64,
    pub traceless_identity: f64,
    pub divergence: f64,
    pub oracle: f64,
    pub scalar_curvature: f64,
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-8,
            wedge: 1e-12,
            lambda_trace: 1e-9,
            closed_forms: 1e-10,
            nu_transform: 1e-9,
            transformed_residual: 1e-7,
            traceless_identity: 1e-7,
            divergence: 5e-5,
            oracle: 5e-6,
            scalar_curvature: 1e-6,
            ode: 1e-8,
        }
    }
}

/// Independent closed forms `t ↦ (ν, λ, S)` to compare a closure against.
pub type ClosedForms = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

/// What a suite runs on.
#[derive(Clone)]
pub struct Subject {
    pub structure: GQEStructure,
    pub closure: Option<Closure>,
    /// Transform with `ν = v∘f`; enables the transformed-equation checks.
    pub transform: Option<PhiTransform>,
    /// Potential for the divergence identity (any `u` works for its general
    /// form); defaults to `transform`.
    pub divergence_transform: Option<PhiTransform>,
    pub closed_forms: Option<ClosedForms>,
}

/// Per-sample data for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub var: f64,
    pub nu: f64,
    pub lambda: f64,
    pub scalar: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Default)]
struct PointResult {
    row: Option<Row>,
    residual: f64,
    wedge: f64,
    lambda_trace: f64,
    closed: Option<[f64; 3]>,
    closure_scalar: Option<f64>,
    transform: Option<[f64; 3]>,
    divergence: Option<f64>,
    stationary: bool,
}

/// `|a − b|/|b|`, or `|a − b|` when `b = 0`.
pub fn rel_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if b == 0.0 {
        d
    } else {
        d / b.abs()
    }
}

fn evaluate(subject: &Subject, s: &Sample) -> Result<PointResult, Error> {
    let st = &subject.structure;
    let x = &s.x;
    let res = residual_at(st, x)?.max_abs();
    let grad_f = st.metric().at(x)?.norm_covector(&st.f().jet(x)?.gradient);
    let nu = st.nu().value(x)?;
    let lambda = st.lambda().value(x)?;
    let scalar = scalar_curvature_at(st.metric(), x)?;
    let fitted = fit_lambda_by_trace(st.metric(), st.f(), st.nu(), x)?;
    let mut out = PointResult {
        row: Some(Row { var: s.var, nu, lambda, scalar, residual: res }),
        residual: res,
        wedge: wedge_invariant_at(st, x)?,
        lambda_trace: (fitted - lambda).abs() / lambda.abs().max(1.0),
        stationary: grad_f < 1e-8,
        ..Default::default()
    };
    if let Some(c) = &subject.closure {
        out.closure_scalar = Some(rel_gap(c.scalar.eval(s.var)?, scalar));
        if let Some(p) = &subject.closed_forms {
            let (pn, pl, ps) = p(s.var);
            out.closed = Some([
                rel_gap(c.nu.eval(s.var)?, pn),
                rel_gap(c.lambda.eval(s.var)?, pl),
                rel_gap(c.scalar.eval(s.var)?, ps),
            ]);
        }
    }
    if let Some(pt) = &subject.transform {
        let mismatch = (nu - pt.v().eval(st.f().value(x)?)?).abs();
        out.transform = Some([
            mismatch,
            transformed_residual_at(st, pt, x)?.max_abs(),
            traceless_identity_gap(st, pt, x)?,
        ]);
    }
    if let Some(pt) = subject.divergence_transform.as_ref().or(subject.transform.as_ref()) {
        out.divergence = Some(divergence_identity_gap(st, pt, x)?.general);
    }
    Ok(out)
}

/// Runs the family checks on `samples`; `skipped` is the number of grid
/// points already dropped near zeros of `φ`.
pub fn verify_subject(
    subject: &Subject,
    samples: &[Sample],
    skipped: usize,
    tol: &Tolerances,
) -> Result<(VerificationReport, Vec<Row>), Error> {
    let results: Vec<PointResult> =
        samples.par_iter().map(|s| evaluate(subject, s)).collect::<Result<Vec<_>, Error>>()?;
    let col = |f: &dyn Fn(&PointResult) -> Option<f64>| -> Vec<f64> { results.iter().filter_map(f).collect() };
    let mut r = VerificationReport::default();
    r.push(Check::from_gaps("residual", &col(&|p| Some(p.residual)), tol.residual, skipped));
    r.push(Check::from_gaps("wedge", &col(&|p| Some(p.wedge)), tol.wedge, skipped));
    r.push(Check::from_gaps("lambda_trace", &col(&|p| Some(p.lambda_trace)), tol.lambda_trace, skipped));
    if subject.closure.is_some() {
        r.push(Check::from_gaps(
            "closure_scalar_curvature",
            &col(&|p| p.closure_scalar),
            tol.scalar_curvature,
            skipped,
        ));
    }
    if subject.closed_forms.is_some() {
        for (k, name) in ["closed_form_nu", "closed_form_lambda", "closed_form_scalar_curvature"].iter().enumerate() {
            r.push(Check::from_gaps(*name, &col(&|p| p.closed.map(|v| v[k])), tol.closed_forms, skipped));
        }
    }
    if subject.transform.is_some() {
        let names = [
            ("nu_equals_v_of_f", tol.nu_transform),
            ("transformed_residual", tol.transformed_residual),
            ("traceless_identity", tol.traceless_identity),
        ];
        for (k, (name, t)) in names.iter().enumerate() {
            r.push(Check::from_gaps(*name, &col(&|p| p.transform.map(|v| v[k])), *t, skipped));
        }
    }
    if subject.divergence_transform.is_some() || subject.transform.is_some() {
        r.push(Check::from_gaps("divergence_general", &col(&|p| p.divergence), tol.divergence, skipped));
    }
    let stationary = results.iter().filter(|p| p.stationary).count();
    // sampling cannot certify a global count; this is per grid only
    r.record("stationary_points_on_grid", stationary as f64);
    let rows = results.into_iter().filter_map(|p| p.row).collect();
    Ok((r, rows))
}

/// CSV text with a header naming the sampled variable.
pub fn rows_to_csv(var_name: &str, rows: &[Row]) -> String {
    let mut s = format!("{var_name},nu,lambda,S,residual\n");
    for r in rows {
        s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", r.var, r.nu, r.lambda, r.scalar, r.residual));
    }
    s
}
