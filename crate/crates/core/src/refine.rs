//! Grid refinement studies and extrapolation of `λ₁`.

use serde::Serialize;

use crate::eigensolve::dirichlet_eigenvalue;
use crate::error::{Error, Result};
use crate::gagliardo::{assemble_form, FormSpec};
use crate::grid::DomainSpec;
use crate::Real;

/// Aitken Δ² limit of three values on successively halved grids, with the
/// observed convergence order `log2(|λ₂-λ₁| / |λ₃-λ₂|)`.
pub fn aitken<T: Real>(v: [T; 3]) -> Result<(T, T)> {
    let d1 = v[1] - v[0];
    let d2 = v[2] - v[1];
    let denom = d2 - d1;
    if denom == T::zero() || d2 == T::zero() {
        return Err(Error::param("values", "sequence is not contracting"));
    }
    let limit = v[2] - d2 * d2 / denom;
    let order = (d1 / d2).abs().log2();
    Ok((limit, order))
}

/// Richardson step for a known order `p` and refinement ratio `r`.
pub fn richardson<T: Real>(coarse: T, fine: T, ratio: T, order: T) -> T {
    let f = ratio.powf(order);
    (f * fine - coarse) / (f - T::one())
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct RefinementStudy<T> {
    pub hs: Vec<T>,
    pub lambdas: Vec<T>,
    /// Aitken limit of every consecutive triple.
    pub extrapolated: Vec<T>,
    pub orders: Vec<T>,
}

/// `λ₁` of one domain description at each cell size.
pub fn refinement_study<T: Real>(domain: &DomainSpec, s: T, hs: &[f64], tol: T) -> Result<RefinementStudy<T>> {
    if hs.is_empty() {
        return Err(Error::param("h", "at least one cell size is required"));
    }
    let spec = FormSpec::new(domain.dim, s)?;
    let mut lambdas = Vec::with_capacity(hs.len());
    for &h in hs {
        let mask = domain.with_h(h)?.mask::<T>()?;
        lambdas.push(dirichlet_eigenvalue(&assemble_form(&mask, &spec)?, tol)?);
    }
    let mut extrapolated = Vec::new();
    let mut orders = Vec::new();
    for w in lambdas.windows(3) {
        let (l, p) = aitken([w[0], w[1], w[2]])?;
        extrapolated.push(l);
        orders.push(p);
    }
    Ok(RefinementStudy {
        hs: hs.iter().map(|&h| T::of(h)).collect(),
        lambdas,
        extrapolated,
        orders,
    })
}
