//! Shift-integrated seminorm of the product `u_x(y) = u₁(y) u₂(y - x)`.
//!
//! Writing `u_x(y) - u_x(z) = a - b` with
//! `a = (u₁(y) - u₁(z)) u₂(y - x)` and `b = u₁(z) (u₂(z - x) - u₂(y - x))`,
//! the integral over `x` of `[u_x]²` splits into `J1 + J2 + J3` with
//! `J1 = [u₁]² ‖u₂‖²`, `J3 = [u₂]² ‖u₁‖²` and the cross term `J2 = -2 ∫ a b`.
//! Summing over `x` first turns `J2` into
//! `-2 Σ_d w(d) (R₁(d) - R₁(0)) (R₂(d) - R₂(0))` with `R` the
//! autocorrelations, which is never positive and vanishes only in degenerate
//! cases. The check computes all three terms by direct summation.
//!
//! Pairs are restricted to offsets `0 < |d|_∞ <= window`, on both sides, so
//! that every sum is finite and the decomposition is exact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gagliardo::{assemble_form, FormSpec};
use crate::grid::Field;
use crate::Real;

/// Default pair window (in cells).
pub const DEFAULT_WINDOW: usize = 6;

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct IdentityReport<T> {
    pub j1: T,
    pub j2: T,
    pub j3: T,
    /// `Σ_x [u_x]² h^N`, summed directly.
    pub lhs: T,
    /// `[u₁]² ‖u₂‖² + [u₂]² ‖u₁‖²`.
    pub rhs: T,
    /// `rhs - lhs`.
    pub defect: T,
    pub seminorm1: T,
    pub seminorm2: T,
    pub norm1_sq: T,
    pub norm2_sq: T,
    pub j1_rel_err: T,
    pub j3_rel_err: T,
    /// `|lhs - (J1 + J2 + J3)| / lhs`.
    pub split_rel_err: T,
    pub window: usize,
    pub shifts: usize,
}

/// Zero-extended values on a rectangle of lattice points.
struct Patch<T> {
    lo: [i64; 2],
    ext: [usize; 2],
    vals: Vec<T>,
}

impl<T: Real> Patch<T> {
    fn from_field(f: &Field<T>, offset: [i64; 2]) -> Self {
        let g = f.grid();
        let (lo, hi) = f.mask().bbox().unwrap_or(([0, 0], [0, 0]));
        let ext = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1];
        let mut vals = vec![T::zero(); ext[0] * ext[1]];
        for (&c, &v) in f.mask().cells().iter().zip(f.values()) {
            let x = g.coords(c);
            vals[(x[0] - lo[0]) * ext[1] + (x[1] - lo[1])] = v;
        }
        Patch {
            lo: [lo[0] as i64 + offset[0], lo[1] as i64 + offset[1]],
            ext,
            vals,
        }
    }

    #[inline]
    fn get(&self, p: [i64; 2]) -> T {
        let a = p[0] - self.lo[0];
        let b = p[1] - self.lo[1];
        if a < 0 || b < 0 || a >= self.ext[0] as i64 || b >= self.ext[1] as i64 {
            return T::zero();
        }
        self.vals[a as usize * self.ext[1] + b as usize]
    }

    /// Inclusive lattice box of the patch grown by `r` on every axis used.
    fn grown(&self, r: [i64; 2]) -> ([i64; 2], [i64; 2]) {
        (
            [self.lo[0] - r[0], self.lo[1] - r[1]],
            [self.lo[0] + self.ext[0] as i64 - 1 + r[0], self.lo[1] + self.ext[1] as i64 - 1 + r[1]],
        )
    }
}

fn boxed(lo: [i64; 2], hi: [i64; 2]) -> impl Iterator<Item = [i64; 2]> {
    (lo[0]..=hi[0]).flat_map(move |a| (lo[1]..=hi[1]).map(move |b| [a, b]))
}

struct Window<T> {
    offsets: Vec<([i64; 2], T)>,
    reach: [i64; 2],
}

impl<T: Real> Window<T> {
    fn new(dim: usize, window: usize, weight: impl Fn([i64; 2]) -> T) -> Self {
        let r = window as i64;
        let reach = if dim == 1 { [r, 0] } else { [r, r] };
        let offsets = boxed([-reach[0], -reach[1]], reach)
            .filter(|&d| d != [0, 0])
            .map(|d| (d, weight(d)))
            .collect();
        Window { offsets, reach }
    }
}

/// `Σ_y Σ_{0<|d|_∞<=window} w(d) (u(y) - u(y+d))²` over ordered pairs.
pub fn pair_seminorm_sq<T: Real>(u: &Field<T>, spec: &FormSpec<T>, window: usize) -> Result<T> {
    let form = assemble_form(u.mask(), spec)?;
    let win = Window::new(spec.dim(), window, |d| form.weight_at(d));
    Ok(seminorm_on(&Patch::from_field(u, [0, 0]), &win))
}

fn seminorm_on<T: Real>(p: &Patch<T>, win: &Window<T>) -> T {
    let (lo, hi) = p.grown(win.reach);
    let mut acc = T::zero();
    for y in boxed(lo, hi) {
        let uy = p.get(y);
        for &(d, w) in &win.offsets {
            let diff = uy - p.get([y[0] + d[0], y[1] + d[1]]);
            acc = acc + w * diff * diff;
        }
    }
    acc
}

/// Direct evaluation of `J1`, `J2`, `J3` and `Σ_x [u_x]²` over every lattice
/// shift with a nonzero term.
pub fn product_identity_check<T: Real>(
    u1: &Field<T>,
    u2: &Field<T>,
    spec: &FormSpec<T>,
    window: usize,
) -> Result<IdentityReport<T>> {
    let (g1, g2) = (u1.grid(), u2.grid());
    let offset = g2
        .lattice_offset_to(g1)
        .map_err(|e| Error::param("u2", format!("grid incompatible with u1: {e}")))?;
    if g1.dim() != spec.dim() {
        return Err(Error::param("spec", "dimension differs from the fields"));
    }
    if window == 0 {
        return Err(Error::param("window", "must be at least 1"));
    }
    if u1.values().iter().chain(u2.values()).any(|&v| v < T::zero()) {
        return Err(Error::param("u", "fields must be nonnegative"));
    }
    let form = assemble_form(u1.mask(), spec)?;
    let win = Window::new(spec.dim(), window, |d| form.weight_at(d));
    let p1 = Patch::from_field(u1, [0, 0]);
    let p2 = Patch::from_field(u2, offset);
    let vol = g1.cell_volume();
    let two = T::of(2.0);

    let (lo1, hi1) = p1.grown([0, 0]);
    let (lo2, hi2) = p2.grown([0, 0]);
    let reach = win.reach;
    let shifts: Vec<[i64; 2]> = boxed(
        [lo1[0] - hi2[0] - reach[0], lo1[1] - hi2[1] - reach[1]],
        [hi1[0] - lo2[0] + reach[0], hi1[1] - lo2[1] + reach[1]],
    )
    .collect();

    let (mut j1, mut j2, mut j3, mut lhs) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &k in &shifts {
        let u2k = |y: [i64; 2]| p2.get([y[0] - k[0], y[1] - k[1]]);
        let (mut a1, mut a2, mut a3, mut al) = (T::zero(), T::zero(), T::zero(), T::zero());
        // y ranges over every point with a possibly nonzero summand
        let (lo, hi) = p1.grown(reach);
        for y in boxed(lo, hi) {
            let (v1y, v2y) = (p1.get(y), u2k(y));
            let uxy = v1y * v2y;
            for &(d, w) in &win.offsets {
                let z = [y[0] + d[0], y[1] + d[1]];
                let (v1z, v2z) = (p1.get(z), u2k(z));
                let a = (v1y - v1z) * v2y;
                let b = v1z * (v2z - v2y);
                a1 = a1 + w * a * a;
                a2 = a2 + w * a * b;
                a3 = a3 + w * b * b;
                let diff = uxy - v1z * v2z;
                al = al + w * diff * diff;
            }
        }
        j1 = j1 + a1 * vol;
        j2 = j2 - two * a2 * vol;
        j3 = j3 + a3 * vol;
        lhs = lhs + al * vol;
    }

    let s1 = seminorm_on(&p1, &win);
    let s2 = seminorm_on(&p2, &win);
    let (n1, n2) = (u1.norm_sq(), u2.norm_sq());
    let (c1, c3) = (s1 * n2, s2 * n1);
    let rhs = c1 + c3;
    let rel = |x: T, y: T| if y == T::zero() { x.abs() } else { (x - y).abs() / y.abs() };
    Ok(IdentityReport {
        j1,
        j2,
        j3,
        lhs,
        rhs,
        defect: rhs - lhs,
        seminorm1: s1,
        seminorm2: s2,
        norm1_sq: n1,
        norm2_sq: n2,
        j1_rel_err: rel(j1, c1),
        j3_rel_err: rel(j3, c3),
        split_rel_err: rel(j1 + j2 + j3, lhs),
        window,
        shifts: shifts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Mask};

    fn bump(g: Grid<f64>, center: [f64; 2], width: f64) -> Field<f64> {
        Field::from_fn(Mask::full(g), |x| {
            let r2 = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (width * width);
            (1.0 - r2).max(0.0).powi(2)
        })
    }

    #[test]
    fn spike_collapses_the_shift_sum() {
        let g = Grid::new(1, &[0.0], 0.1, &[12]).unwrap();
        let u1 = bump(g, [0.6, 0.0], 0.5);
        let gs = Grid::new(1, &[0.3], 0.1, &[1]).unwrap();
        let spike = Field::new(Mask::full(gs), vec![1.0 / 0.1f64.sqrt()]).unwrap();
        let spec = FormSpec::new(1, 0.5).unwrap();
        let r = product_identity_check(&u1, &spike, &spec, 5).unwrap();
        assert!((spike.norm_sq() - 1.0).abs() < 1e-14);
        assert!((r.j1 - r.seminorm1).abs() < 1e-12 * r.seminorm1);
    }

    #[test]
    fn closed_forms_and_split() {
        let g1 = Grid::new(2, &[0.0, 0.0], 0.1, &[6, 5]).unwrap();
        let g2 = Grid::new(2, &[0.3, -0.2], 0.1, &[5, 6]).unwrap();
        let u1 = bump(g1, [0.3, 0.25], 0.4);
        let u2 = bump(g2, [0.55, 0.1], 0.35);
        let spec = FormSpec::new(2, 0.4).unwrap();
        let r = product_identity_check(&u1, &u2, &spec, 4).unwrap();
        assert!(r.j1_rel_err < 1e-10 && r.j3_rel_err < 1e-10 && r.split_rel_err < 1e-10, "{r:?}");
        assert!(r.j2 <= 0.0);
        assert!(r.lhs <= r.rhs + 1e-10);

        // independent double loop for J1 = Σ_k Σ_y Σ_d w (u1(y) - u1(y+d))² u2(y-k)² h²
        let form = assemble_form(u1.mask(), &spec).unwrap();
        let mut oracle = 0.0;
        let off = g2.lattice_offset_to(&g1).unwrap();
        for a in -20i64..20 {
            for b in -20i64..20 {
                for y0 in -8i64..14 {
                    for y1 in -8i64..14 {
                        let at1 = |p: [i64; 2]| {
                            g1.index_checked(p).map_or(0.0, |c| u1.get(c))
                        };
                        let at2 = |p: [i64; 2]| {
                            g2.index_checked([p[0] - off[0] - a, p[1] - off[1] - b]).map_or(0.0, |c| u2.get(c))
                        };
                        let v2 = at2([y0, y1]);
                        if v2 == 0.0 {
                            continue;
                        }
                        for d0 in -4i64..=4 {
                            for d1 in -4i64..=4 {
                                if d0 == 0 && d1 == 0 {
                                    continue;
                                }
                                let diff = at1([y0, y1]) - at1([y0 + d0, y1 + d1]);
                                oracle += form.weight_at([d0, d1]) * diff * diff * v2 * v2 * 0.01;
                            }
                        }
                    }
                }
            }
        }
        assert!((oracle - r.j1).abs() < 1e-10 * oracle, "{oracle} vs {}", r.j1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = Grid::new(1, &[0.0], 0.1, &[8]).unwrap();
        let u = bump(g, [0.4, 0.0], 0.3);
        let spec = FormSpec::new(1, 0.5).unwrap();
        let coarse = Grid::new(1, &[0.0], 0.2, &[4]).unwrap();
        let v = bump(coarse, [0.4, 0.0], 0.3);
        assert!(product_identity_check(&u, &v, &spec, 4).unwrap_err().is_parameter_error());
        let neg = u.scaled(-1.0);
        assert!(product_identity_check(&u, &neg, &spec, 4).is_err());
    }
}
