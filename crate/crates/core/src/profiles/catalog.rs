//! Named profiles usable from the CLI and config files.

use super::{Domain, Profile1D, ProfileError};

pub struct CatalogEntry {
    pub name: &'static str,
    pub expr: &'static str,
    pub var: &'static str,
    pub domain: Domain,
    pub note: &'static str,
}

const fn real_line() -> Domain {
    Domain { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
}

pub const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "gaussian-factor",
        expr: "exp(-r^2/2)",
        var: "r",
        domain: real_line(),
        note: "radial conformal factor with sup 1",
    },
    CatalogEntry {
        name: "inverse-linear",
        expr: "1/(1+r)",
        var: "r",
        domain: Domain { lo: -1.0, hi: f64::INFINITY },
        note: "radial conformal factor, bounded on r >= 0",
    },
    CatalogEntry {
        name: "tanh-step",
        expr: "1+tanh(u)",
        var: "u",
        domain: real_line(),
        note: "translation-invariant conformal factor",
    },
    CatalogEntry {
        name: "sphere-chart",
        expr: "(1+r)/2",
        var: "r",
        domain: real_line(),
        note: "stereographic chart of the unit sphere",
    },
    CatalogEntry {
        name: "height",
        expr: "(r-1)/(r+1)",
        var: "r",
        domain: Domain { lo: -1.0, hi: f64::INFINITY },
        note: "height function in the stereographic chart",
    },
    CatalogEntry {
        name: "ball-chart",
        expr: "(1-r)/2",
        var: "r",
        domain: Domain { lo: f64::NEG_INFINITY, hi: 1.0 },
        note: "Poincare ball model of hyperbolic space",
    },
    CatalogEntry {
        name: "half-space",
        expr: "u",
        var: "u",
        domain: Domain { lo: 0.0, hi: f64::INFINITY },
        note: "upper half-space model of hyperbolic space",
    },
    CatalogEntry {
        name: "linear",
        expr: "t",
        var: "t",
        domain: real_line(),
        note: "identity",
    },
    CatalogEntry {
        name: "unit",
        expr: "1",
        var: "t",
        domain: real_line(),
        note: "constant one (flat metric)",
    },
    CatalogEntry {
        name: "sech-bump",
        expr: "1/cosh(t)",
        var: "t",
        domain: real_line(),
        note: "bounded positive bump",
    },
    CatalogEntry {
        name: "log-shift",
        expr: "log(2+t)",
        var: "t",
        domain: Domain { lo: -2.0, hi: f64::INFINITY },
        note: "logarithm",
    },
    CatalogEntry {
        name: "hyperbola",
        expr: "sqrt(1+t^2)",
        var: "t",
        domain: real_line(),
        note: "smooth even profile",
    },
    CatalogEntry {
        name: "cubic",
        expr: "t^3/3 + t",
        var: "t",
        domain: real_line(),
        note: "strictly increasing polynomial",
    },
];

pub fn lookup(name: &str) -> Result<&'static CatalogEntry, ProfileError> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| ProfileError::UnknownCatalogEntry(name.to_string()))
}

pub fn catalog_profile(name: &str) -> Result<Profile1D, ProfileError> {
    let e = lookup(name)?;
    Ok(Profile1D::parse(e.expr, e.var)?
        .with_domain(e.domain)
        .with_label(e.name))
}

/// Resolves either a catalog name (optionally written `catalog:name`) or an
/// inline expression in `var`.
pub fn resolve(spec: &str, var: &str) -> Result<Profile1D, ProfileError> {
    let name = spec.strip_prefix("catalog:").unwrap_or(spec).trim();
    if let Ok(p) = catalog_profile(name) {
        return Ok(p);
    }
    if spec.starts_with("catalog:") {
        return Err(ProfileError::UnknownCatalogEntry(name.to_string()));
    }
    Profile1D::parse(spec, var)
}
