//! Discrete Gagliardo form of `H^s_0(Ω)` on a cell mask.
//!
//! For a field `u` on the active cells (zero elsewhere) the form is
//!
//! ```text
//! Q(u) = Σ_{i<j} 2 w_ij (u_i - u_j)² + Σ_i t_i u_i²
//! ```
//!
//! where `w_ij ≈ ∫_{cell_i}∫_{cell_j} |x-y|^{-N-2s}` depends only on the
//! lattice offset of the two cells and `t_i = Σ_{j ∉ Ω} 2 w_ij` is the
//! interaction with the exterior, where `u` vanishes. With the full-lattice
//! row sum `S = Σ_{k≠0} 2 w(k)` this is `Q(u) = S |u|² - 2 uᵀ W u`, so the form
//! of a field does not depend on which enclosing domain it is assembled on.
//! `Q` carries no normalization constant; `C_{N,s}/2` enters only through
//! [`rayleigh_quotient`] and the eigensolver.

mod conv;
mod kernel;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub(crate) use conv::Convolver;
pub use kernel::NearFieldPolicy;
use kernel::UnitKernel;

use crate::error::{Error, Result};
use crate::grid::{Field, Mask};
use crate::Real;

/// Below this many active cells the operator is applied as a dense matrix.
const DENSE_APPLY_MAX: usize = 320;

/// Radius (in cells) of the explicitly summed part of the lattice row sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicy {
    /// 65536 cells in 1-D, 256 in 2-D, enlarged to the domain extent if needed.
    #[default]
    Auto,
    Radius(usize),
}

impl TailPolicy {
    fn radius(self, dim: usize, extent: usize) -> usize {
        let base = match self {
            TailPolicy::Auto if dim == 1 => 1 << 16,
            TailPolicy::Auto => 256,
            TailPolicy::Radius(r) => r,
        };
        base.max(extent)
    }
}

/// Fractional order and the constants that go with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FormSpec<T> {
    dim: usize,
    s: T,
    c_ns: T,
    near: NearFieldPolicy,
    tail: TailPolicy,
}

impl<T: Real> FormSpec<T> {
    pub fn new(dim: usize, s: T) -> Result<Self> {
        Ok(FormSpec {
            dim,
            s,
            c_ns: normalization_constant(dim, s)?,
            near: NearFieldPolicy::default(),
            tail: TailPolicy::default(),
        })
    }

    pub fn with_near_field(mut self, near: NearFieldPolicy) -> Self {
        self.near = near;
        self
    }

    pub fn with_tail(mut self, tail: TailPolicy) -> Self {
        self.tail = tail;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> T {
        self.s
    }

    /// `C_{N,s}`.
    pub fn c_ns(&self) -> T {
        self.c_ns
    }

    pub fn near_field(&self) -> NearFieldPolicy {
        self.near
    }

    pub fn tail(&self) -> TailPolicy {
        self.tail
    }
}

/// `C_{N,s} = s 2^{2s} Γ((N+2s)/2) / (π^{N/2} Γ(1-s))`, the constant for which
/// the symbol of `(-Δ)^s` is `|ξ|^{2s}`.
pub fn normalization_constant<T: Real>(dim: usize, s: T) -> Result<T> {
    if dim != 1 && dim != 2 {
        return Err(Error::param("dim", format!("must be 1 or 2, got {dim}")));
    }
    let sf = s.as_f64();
    if !(sf > 0.0 && sf < 1.0) {
        return Err(Error::param("s", format!("must lie in (0, 1), got {sf}")));
    }
    let n = dim as f64;
    let c = sf * 4f64.powf(sf) * libm::tgamma((n + 2.0 * sf) / 2.0)
        / (std::f64::consts::PI.powf(n / 2.0) * libm::tgamma(1.0 - sf));
    Ok(T::of(c))
}

/// Assembled form on a domain mask.
pub struct QuadraticForm<T: Real> {
    spec: FormSpec<T>,
    domain: Mask<T>,
    unit: UnitKernel,
    /// `h^{N-2s}`.
    scale: f64,
    /// Pair weights over bbox offsets, `(2e0-1) × (2e1-1)`.
    table: Vec<T>,
    extent: [usize; 2],
    /// Bbox-relative coordinates of the active cells.
    coords: Vec<[usize; 2]>,
    slots: Vec<usize>,
    row_sum: T,
    tail: Vec<T>,
    conv: Convolver<T>,
    dense: Option<Vec<T>>,
}

impl<T: Real> std::fmt::Debug for QuadraticForm<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadraticForm")
            .field("spec", &self.spec)
            .field("cells", &self.domain.len())
            .field("row_sum", &self.row_sum)
            .finish()
    }
}

/// Assemble the form of `spec` on `domain`.
pub fn assemble_form<T: Real>(domain: &Mask<T>, spec: &FormSpec<T>) -> Result<QuadraticForm<T>> {
    let grid = *domain.grid();
    if grid.dim() != spec.dim {
        return Err(Error::Mismatch(format!(
            "form spec is {}-D but the domain is {}-D",
            spec.dim,
            grid.dim()
        )));
    }
    let (lo, hi) = domain
        .bbox()
        .ok_or_else(|| Error::EmptyMask("cannot assemble a form on an empty domain".into()))?;
    let extent = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1];
    let sf = spec.s.as_f64();
    let unit = UnitKernel::new(spec.dim, sf, spec.near);
    let scale = grid.h().as_f64().powf(spec.dim as f64 - 2.0 * sf);
    let radius = spec.tail.radius(spec.dim, extent[0].max(extent[1]));
    let row_sum = T::of(scale * unit.row_sum(radius));

    let (t0, t1) = (2 * extent[0] - 1, 2 * extent[1] - 1);
    let mut table = vec![T::zero(); t0 * t1];
    for a in 0..t0 {
        for b in 0..t1 {
            let k = [a as i64 - (extent[0] as i64 - 1), b as i64 - (extent[1] as i64 - 1)];
            table[a * t1 + b] = T::of(scale * unit.weight(k));
        }
    }
    let lookup = |k: [i64; 2]| {
        let a = (k[0] + extent[0] as i64 - 1) as usize;
        let b = (k[1] + extent[1] as i64 - 1) as usize;
        table[a * t1 + b]
    };
    let conv = Convolver::new(extent, lookup);
    let coords: Vec<[usize; 2]> = domain
        .cells()
        .iter()
        .map(|&c| {
            let x = grid.coords(c);
            [x[0] - lo[0], x[1] - lo[1]]
        })
        .collect();
    let slots = coords.iter().map(|&c| conv.slot(c)).collect();

    let mut form = QuadraticForm {
        spec: *spec,
        domain: domain.clone(),
        unit,
        scale,
        table,
        extent,
        coords,
        slots,
        row_sum,
        tail: Vec::new(),
        conv,
        dense: None,
    };
    if domain.len() <= DENSE_APPLY_MAX {
        form.dense = Some(form.dense_matrix());
    }
    // t = S·1 - 2 W 1 = A 1
    let ones = vec![T::one(); domain.len()];
    let mut tail = vec![T::zero(); domain.len()];
    form.apply(&ones, &mut tail);
    form.tail = tail;
    Ok(form)
}

impl<T: Real> QuadraticForm<T> {
    pub fn spec(&self) -> &FormSpec<T> {
        &self.spec
    }

    pub fn domain(&self) -> &Mask<T> {
        &self.domain
    }

    /// Number of active cells.
    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// Full-lattice row sum `S = Σ_{k≠0} 2 w(k)`, the diagonal of the form.
    pub fn row_sum(&self) -> T {
        self.row_sum
    }

    /// Exterior interaction `t_i` per active cell.
    pub fn tail(&self) -> &[T] {
        &self.tail
    }

    /// Pair weight at an arbitrary lattice offset.
    pub fn weight_at(&self, k: [i64; 2]) -> T {
        let inside = (k[0].unsigned_abs() as usize) < self.extent[0]
            && (k[1].unsigned_abs() as usize) < self.extent[1];
        if inside {
            let t1 = 2 * self.extent[1] - 1;
            let a = (k[0] + self.extent[0] as i64 - 1) as usize;
            let b = (k[1] + self.extent[1] as i64 - 1) as usize;
            self.table[a * t1 + b]
        } else {
            T::of(self.scale * self.unit.weight(k))
        }
    }

    /// `w_ij` between active cells `i` and `j` (local indices).
    pub fn pair_weight(&self, i: usize, j: usize) -> T {
        let (a, b) = (self.coords[i], self.coords[j]);
        self.weight_at([a[0] as i64 - b[0] as i64, a[1] as i64 - b[1] as i64])
    }

    /// `out = A u` with `uᵀ A u = Q(u)`.
    pub fn apply(&self, u: &[T], out: &mut [T]) {
        let n = self.len();
        assert_eq!(u.len(), n, "field length");
        assert_eq!(out.len(), n, "output length");
        if let Some(a) = &self.dense {
            for (row, o) in a.chunks_exact(n).zip(out.iter_mut()) {
                *o = row.iter().zip(u).map(|(&x, &y)| x * y).sum();
            }
            return;
        }
        self.conv.filter(&self.slots, u, out, |k| k);
        let two = T::of(2.0);
        for (o, &x) in out.iter_mut().zip(u) {
            *o = self.row_sum * x - two * *o;
        }
    }

    /// `Q(u) = uᵀ A u`.
    pub fn quadratic(&self, u: &[T]) -> T {
        let mut au = vec![T::zero(); u.len()];
        self.apply(u, &mut au);
        u.iter().zip(&au).map(|(&x, &y)| x * y).sum()
    }

    /// `Q(u)` summed over the pair list and the tail.
    pub fn quadratic_pairwise(&self, u: &[T]) -> T {
        assert_eq!(u.len(), self.len(), "field length");
        let two = T::of(2.0);
        let mut acc = T::zero();
        for i in 0..u.len() {
            for j in i + 1..u.len() {
                let d = u[i] - u[j];
                acc = acc + two * self.pair_weight(i, j) * d * d;
            }
        }
        acc + self.tail.iter().zip(u).map(|(&t, &x)| t * x * x).sum::<T>()
    }

    /// Dense symmetric matrix of the form, row-major.
    pub fn dense_matrix(&self) -> Vec<T> {
        let n = self.len();
        let two = T::of(2.0);
        let mut a = vec![T::zero(); n * n];
        for i in 0..n {
            a[i * n + i] = self.row_sum;
            for j in i + 1..n {
                let w = -two * self.pair_weight(i, j);
                a[i * n + j] = w;
                a[j * n + i] = w;
            }
        }
        a
    }

    /// Solve `(scale · A_per + shift) x = r` with the periodic (circulant)
    /// extension of `A` on the padded box.
    pub(crate) fn periodic_solve(&self, r: &[T], out: &mut [T], scale: T, shift: T) {
        let two = T::of(2.0);
        let s = self.row_sum;
        self.conv
            .filter(&self.slots, r, out, |k| T::one() / (scale * (s - two * k) + shift));
    }

    /// Audit dump: `pair,i,j,w_ij` rows for `i < j` then `tail,i,,t_i`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "i", "j", "value"])?;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                w.write_record(&[
                    "pair".to_string(),
                    i.to_string(),
                    j.to_string(),
                    format!("{:e}", self.pair_weight(i, j)),
                ])?;
            }
        }
        for (i, t) in self.tail.iter().enumerate() {
            w.write_record(&["tail".to_string(), i.to_string(), String::new(), format!("{t:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub(crate) fn check_field<'a>(&self, field: &'a Field<T>) -> Result<std::borrow::Cow<'a, [T]>> {
        if field.mask() == &self.domain {
            Ok(std::borrow::Cow::Borrowed(field.values()))
        } else {
            field.embed_into(&self.domain).map(std::borrow::Cow::Owned)
        }
    }
}

/// Discrete `[u]_s²` (tail included, no `C_{N,s}`). The field may live on
/// any sub-mask of the form's domain.
pub fn seminorm_sq<T: Real>(form: &QuadraticForm<T>, field: &Field<T>) -> Result<T> {
    let u = form.check_field(field)?;
    Ok(form.quadratic(&u))
}

/// `((C/2) Q(u) + α Σ_{D} u² h^N) / Σ u² h^N`.
pub fn rayleigh_quotient<T: Real>(
    form: &QuadraticForm<T>,
    field: &Field<T>,
    support: &Mask<T>,
    alpha: T,
) -> Result<T> {
    let u = form.check_field(field)?;
    if !support.is_subset_of(&form.domain) {
        return Err(Error::Mismatch("D is not contained in the form's domain".into()));
    }
    if alpha < T::zero() {
        return Err(Error::param("alpha", "must be nonnegative"));
    }
    let vol = form.domain.grid().cell_volume();
    let mass: T = u.iter().map(|&x| x * x).sum::<T>() * vol;
    if !(mass > T::zero()) {
        return Err(Error::param("field", "Rayleigh quotient of a zero field"));
    }
    let on_d: T = support
        .cells()
        .iter()
        .map(|&c| {
            let x = u[form.domain.position(c).expect("subset")];
            x * x
        })
        .sum::<T>()
        * vol;
    let half_c = form.spec.c_ns / T::of(2.0);
    Ok((half_c * form.quadratic(&u) + alpha * on_d) / mass)
}
