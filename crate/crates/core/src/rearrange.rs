//! Rearrangements of grid fields and the inequalities they satisfy.
//!
//! Schwarz symmetrization on a lattice places sorted values on a quasi-ball:
//! cells of a grid centered at the origin ranked by the distance of their
//! centers, ties broken by linear index. Rearranging is then a permutation of
//! values, so equimeasurability and Hardy–Littlewood hold exactly; the
//! Pólya–Szegő inequality holds up to the anisotropy of the lattice.

use std::io::Write;

use crate::error::{Error, Result};
use crate::gagliardo::{assemble_form, seminorm_sq, FormSpec};
use crate::grid::{Field, Grid, Mask};
use crate::Real;

/// Step profile of a one-dimensional rearrangement on `[0, |Ω|]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RearrangementProfile<T> {
    /// `n + 1` breakpoints `0, h^N, 2 h^N, ..., |Ω|`.
    pub xi: Vec<T>,
    /// Value on each of the `n` intervals.
    pub values: Vec<T>,
    pub decreasing: bool,
}

impl<T: Real> RearrangementProfile<T> {
    fn build(f: &Field<T>, decreasing: bool) -> Self {
        let mut values = f.values().to_vec();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite field"));
        if decreasing {
            values.reverse();
        }
        let vol = f.grid().cell_volume();
        let xi = (0..=values.len()).map(|i| T::of_usize(i) * vol).collect();
        RearrangementProfile { xi, values, decreasing }
    }

    pub fn total_length(&self) -> T {
        *self.xi.last().expect("at least one breakpoint")
    }

    /// Decreasing profile: `f^#(ξ) = inf{t : |{f > t}| < ξ}`, which on cell
    /// data is a step function with right-closed steps and `f^#(0) = max f`.
    /// Increasing profile: left-closed steps with `f_#(|Ω|) = max f`.
    pub fn eval(&self, xi: T) -> T {
        let n = self.values.len();
        if n == 0 {
            return T::zero();
        }
        let vol = self.xi[1];
        let t = xi / vol;
        let i = if self.decreasing {
            // right-closed steps (i v, (i+1) v]
            (t.ceil().to_usize().unwrap_or(0)).saturating_sub(1)
        } else {
            // left-closed steps [i v, (i+1) v)
            t.floor().to_usize().unwrap_or(0)
        };
        self.values[i.min(n - 1)]
    }

    /// `xi,value` rows, one per interval (left endpoint).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi", "value"])?;
        for (x, v) in self.xi.iter().zip(&self.values) {
            w.write_record([format!("{x:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn decreasing_rearrangement<T: Real>(f: &Field<T>) -> RearrangementProfile<T> {
    RearrangementProfile::build(f, true)
}

pub fn increasing_rearrangement<T: Real>(f: &Field<T>) -> RearrangementProfile<T> {
    RearrangementProfile::build(f, false)
}

/// A field on a quasi-ball `Ω*`, with the cells of `Ω*` in radial order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrizedField<T> {
    pub field: Field<T>,
    /// `ordering[r]` is the linear index of the cell of radial rank `r`.
    pub ordering: Vec<usize>,
}

impl<T: Real> SymmetrizedField<T> {
    /// `cell,radial_rank,value` rows in rank order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cell", "radial_rank", "value"])?;
        for (r, &c) in self.ordering.iter().enumerate() {
            w.write_record([c.to_string(), r.to_string(), format!("{:e}", self.field.get(c))])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Centered grid, with the cell size of `g`, large enough to hold a
/// quasi-ball of `k` cells. 1-D grids keep their shape; 2-D grids become
/// square.
pub fn symmetric_grid<T: Real>(g: &Grid<T>, k: usize) -> Grid<T> {
    if g.dim() == 1 {
        return g.centered();
    }
    let needed = (2.0 * (k as f64 / std::f64::consts::PI).sqrt()).ceil() as usize + 2;
    let side = g.shape2()[0].max(g.shape2()[1]).max(needed);
    let half = -T::of_usize(side) * g.h() * T::of(0.5);
    Grid::new(2, &[half, half], g.h(), &[side, side]).expect("valid centered grid")
}

/// All cells of a centered grid by radial rank.
fn radial_order<T: Real>(g: &Grid<T>) -> Vec<usize> {
    let mut cells: Vec<usize> = (0..g.len()).collect();
    cells.sort_by_key(|&c| (g.centered_radius_key(c), c));
    cells
}

fn ball<T: Real>(mask: &Mask<T>) -> (Mask<T>, Vec<usize>) {
    let g = symmetric_grid(mask.grid(), mask.len());
    let mut ordering = radial_order(&g);
    ordering.truncate(mask.len());
    let mut cells = ordering.clone();
    cells.sort_unstable();
    (Mask::from_sorted(g, cells), ordering)
}

/// `Ω*`: the `|Ω|/h^N` cells of smallest radial rank about the origin.
pub fn symmetrize_mask<T: Real>(mask: &Mask<T>) -> Mask<T> {
    ball(mask).0
}

fn schwarz<T: Real>(f: &Field<T>, decreasing: bool) -> SymmetrizedField<T> {
    let (star, ordering) = ball(f.mask());
    let profile = RearrangementProfile::build(f, decreasing);
    let mut values = vec![T::zero(); star.len()];
    for (&c, &v) in ordering.iter().zip(&profile.values) {
        values[star.position(c).expect("ball cell")] = v;
    }
    SymmetrizedField {
        field: Field::new(star, values).expect("one value per cell"),
        ordering,
    }
}

/// `f*`: values in decreasing order outwards from the origin.
pub fn schwarz_decreasing<T: Real>(f: &Field<T>) -> SymmetrizedField<T> {
    schwarz(f, true)
}

/// `f_*`: values in increasing order outwards from the origin.
pub fn schwarz_increasing<T: Real>(f: &Field<T>) -> SymmetrizedField<T> {
    schwarz(f, false)
}

/// `(Σ_{Ω*} f_* g* h^N, Σ_Ω f g h^N)`; the first never exceeds the second.
pub fn hardy_littlewood_check<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<(T, T)> {
    if f.mask() != g.mask() {
        return Err(Error::param("g", "f and g must live on the same mask"));
    }
    let vol = f.grid().cell_volume();
    let lo = increasing_rearrangement(f).values;
    let hi = decreasing_rearrangement(g).values;
    let lhs = lo.iter().zip(&hi).map(|(&a, &b)| a * b).sum::<T>() * vol;
    let rhs = f.values().iter().zip(g.values()).map(|(&a, &b)| a * b).sum::<T>() * vol;
    Ok((lhs, rhs))
}

/// `([f*]², [f]²)` with the same form spec on both sides.
pub fn polya_szego_check<T: Real>(f: &Field<T>, spec: &FormSpec<T>) -> Result<(T, T)> {
    let star = schwarz_decreasing(f);
    let fs = assemble_form(star.field.mask(), spec)?;
    let fo = assemble_form(f.mask(), spec)?;
    Ok((seminorm_sq(&fs, &star.field)?, seminorm_sq(&fo, f)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{mask_from_shape, ShapeSpec};

    fn line(values: &[f64]) -> Field<f64> {
        let g = Grid::new(1, &[0.0], 1.0, &[values.len()]).unwrap();
        Field::new(Mask::full(g), values.to_vec()).unwrap()
    }

    #[test]
    fn profiles() {
        let f = line(&[3.0, 1.0, 2.0]);
        let d = decreasing_rearrangement(&f);
        assert_eq!(d.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(d.total_length(), 3.0);
        assert_eq!(d.eval(0.0), 3.0);
        assert_eq!(d.eval(1.0), 3.0);
        assert_eq!(d.eval(1.5), 2.0);
        assert_eq!(d.eval(3.0), 1.0);
        let inc = increasing_rearrangement(&f);
        assert_eq!(inc.eval(0.0), 1.0);
        assert_eq!(inc.eval(1.0), 2.0);
        assert_eq!(inc.eval(3.0), 3.0);
        let neg = line(&[-3.0, -1.0, -2.0]);
        let mut rev = inc.values.clone();
        rev.reverse();
        let dneg = decreasing_rearrangement(&neg);
        assert_eq!(dneg.values, inc.values.iter().map(|v| -v).collect::<Vec<_>>());
        assert_ne!(dneg.values, rev);
        assert_eq!(decreasing_rearrangement(&line(&[2.0; 4])).values, vec![2.0; 4]);
    }

    #[test]
    fn symmetrized_masks() {
        let g = Grid::new(1, &[0.0], 1.0, &[10]).unwrap();
        let m = Mask::new(g, vec![0, 3, 9]).unwrap();
        let s = symmetrize_mask(&m);
        assert_eq!(s.len(), 3);
        let centers: Vec<f64> = s.cells().iter().map(|&c| s.grid().center(c)[0]).collect();
        assert_eq!(centers, vec![-1.5, -0.5, 0.5]);

        let g2: Grid<f64> = Grid::new(2, &[0.0, 0.0], 0.5, &[8, 8]).unwrap();
        let cells: Vec<usize> = (0..12).map(|i| i * 5).collect();
        let m2 = Mask::new(g2, cells).unwrap();
        let s2 = symmetrize_mask(&m2);
        assert_eq!(s2.len(), 12);
        assert_eq!(s2.measure(), m2.measure());
        assert_eq!(symmetrize_mask(&s2), s2);
        // 12 cells: the 4 central cells and their 8 edge neighbours
        for &c in s2.cells() {
            let x = s2.grid().center(c);
            assert!(x[0].abs() < 1.0 && x[1].abs() < 1.0);
        }
    }

    #[test]
    fn thin_grids_get_room_for_the_ball() {
        let g: Grid<f64> = Grid::new(2, &[0.0, 0.0], 1.0, &[40, 2]).unwrap();
        let m = Mask::full(g);
        let s = symmetrize_mask(&m);
        assert_eq!(s.len(), 80);
        assert_eq!(s.grid().shape2()[0], s.grid().shape2()[1]);
    }

    #[test]
    fn schwarz_is_a_permutation() {
        let g: Grid<f64> = Grid::new(2, &[0.0, 0.0], 0.25, &[9, 7]).unwrap();
        let m = mask_from_shape(&g, &ShapeSpec::Rect { min: vec![0.3, 0.2], max: vec![2.0, 1.4] }).unwrap();
        let f = Field::from_fn(m, |x| (3.0 * x[0]).sin() + x[1]);
        let s = schwarz_decreasing(&f);
        assert!((s.field.norm_sq() - f.norm_sq()).abs() < 1e-12 * f.norm_sq());
        let by_rank: Vec<f64> = s.ordering.iter().map(|&c| s.field.get(c)).collect();
        assert!(by_rank.windows(2).all(|w| w[0] >= w[1]));
        let mut a = f.values().to_vec();
        let mut b = s.field.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        let twice = schwarz_decreasing(&s.field);
        assert_eq!(twice.field, s.field);
        let inc = schwarz_increasing(&f);
        let by_rank: Vec<f64> = inc.ordering.iter().map(|&c| inc.field.get(c)).collect();
        assert!(by_rank.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn indicator_goes_to_the_rim() {
        let g: Grid<f64> = Grid::new(2, &[-1.0, -1.0], 0.25, &[8, 8]).unwrap();
        let omega = Mask::full(g);
        let d = Mask::new(g, vec![0, 1, 2, 9, 63]).unwrap();
        let chi = Field::from_fn(omega.clone(), |_| 0.0);
        let mut vals = chi.values().to_vec();
        for &c in d.cells() {
            vals[omega.position(c).unwrap()] = 1.0;
        }
        let chi = Field::new(omega, vals).unwrap();
        let low = schwarz_increasing(&chi);
        let ones: Vec<usize> = low.ordering.iter().copied().filter(|&c| low.field.get(c) == 1.0).collect();
        assert_eq!(ones, low.ordering[59..].to_vec());
        let high = schwarz_decreasing(&chi);
        let ones: Vec<usize> = high.ordering.iter().copied().filter(|&c| high.field.get(c) == 1.0).collect();
        assert_eq!(ones, high.ordering[..5].to_vec());
    }

    #[test]
    fn hardy_littlewood_examples() {
        let (l, r) = hardy_littlewood_check(&line(&[1.0, 2.0]), &line(&[1.0, 3.0])).unwrap();
        assert_eq!((l, r), (5.0, 7.0));
        let f = line(&[0.3, -1.0, 2.5, 4.0]);
        let (l, r) = hardy_littlewood_check(&f, &line(&[2.0; 4])).unwrap();
        assert!((l - r).abs() < 1e-14);
        assert!(hardy_littlewood_check(&f, &line(&[1.0; 3])).is_err());
    }

    #[test]
    fn polya_szego_on_a_symmetric_decreasing_field() {
        let g: Grid<f64> = Grid::new(2, &[-1.0, -1.0], 1.0 / 16.0, &[32, 32]).unwrap();
        let star = symmetrize_mask(&mask_from_shape(&g, &ShapeSpec::Ball { center: vec![0.0, 0.0], radius: 0.7 }).unwrap());
        let f = Field::from_fn(star, |x| (-(x[0] * x[0] + x[1] * x[1]) * 3.0).exp());
        let spec = FormSpec::new(2, 0.5).unwrap();
        let (a, b) = polya_szego_check(&f, &spec).unwrap();
        assert!((a / b - 1.0).abs() < 1e-10);
        let shifted = Field::from_fn(
            mask_from_shape(&g, &ShapeSpec::Ball { center: vec![0.25, -0.3], radius: 0.6 }).unwrap(),
            |x| (-((x[0] - 0.25).powi(2) + (x[1] + 0.3).powi(2)) * 3.0).exp(),
        );
        let (a, b) = polya_szego_check(&shifted, &spec).unwrap();
        assert!(a <= 1.01 * b && a >= 0.99 * b, "{a} {b}");
    }
}
