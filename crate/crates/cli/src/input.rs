//! Domain and field files.

use std::path::Path;

use fracmem::{DomainSpec, Field64, Mask64};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Field file: a domain file plus either explicit values, one per cell of
/// the mask in increasing cell order, or a radial bump profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldSpec {
    #[serde(flatten)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub bump: Option<Bump>,
}

/// `height · max(0, 1 - |x - center|² / width²)^power`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default = "one")]
    pub height: f64,
    #[serde(default = "two")]
    pub power: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, field: &'static str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::param(field, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::param(field, format!("cannot parse {}: {e}", path.display())))
}

pub fn load_domain(path: &Path, field: &'static str, h: Option<f64>) -> Result<(DomainSpec, Mask64), CliError> {
    let mut spec: DomainSpec = read_json(path, field)?;
    if let Some(h) = h {
        spec = spec.with_h(h).map_err(|e| CliError::from_core(field, e))?;
    }
    let mask = spec.mask::<f64>().map_err(|e| CliError::from_core(field, e))?;
    if mask.is_empty() {
        return Err(CliError::param(field, format!("{} selects no cells", path.display())));
    }
    Ok((spec, mask))
}

pub fn load_field(path: &Path, field: &'static str) -> Result<(FieldSpec, Field64), CliError> {
    let spec: FieldSpec = read_json(path, field)?;
    let mask = spec.domain.mask::<f64>().map_err(|e| CliError::from_core(field, e))?;
    let out = match (&spec.values, &spec.bump) {
        (Some(v), None) => Field64::new(mask, v.clone()).map_err(|e| CliError::from_core(field, e))?,
        (None, Some(b)) => {
            if b.center.len() != spec.domain.dim {
                return Err(CliError::param(field, "bump center must have one entry per dimension"));
            }
            if !(b.width > 0.0) {
                return Err(CliError::param(field, "bump width must be positive"));
            }
            Field64::from_fn(mask, |x| {
                let r2: f64 = b.center.iter().zip(x).map(|(c, y)| (y - c).powi(2)).sum();
                b.height * (1.0 - r2 / (b.width * b.width)).max(0.0).powf(b.power)
            })
        }
        _ => return Err(CliError::param(field, "give exactly one of `values` and `bump`")),
    };
    Ok((spec, out))
}
