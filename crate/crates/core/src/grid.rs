//! Lattice geometry: grids, cell masks, fields, translations and overlaps.
//!
//! Every set handled by the crate (the domain `Ω`, a potential support `D`,
//! intersections `Ω₁ ∩ (Ω₂ + x)`) is a union of whole cells of a uniform
//! Cartesian lattice, so Lebesgue measure is cell counting and translations
//! are integer index shifts.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Lattice translation in whole cells; the second component is zero in 1-D.
pub type Shift = [i64; 2];

/// Uniform Cartesian lattice in one or two dimensions.
///
/// Cell `(i, j)` has center `origin + ((i + ½)h, (j + ½)h)` and linear index
/// `i * shape[1] + j`, so linear order is lexicographic order. In 1-D the
/// second axis is degenerate (`shape[1] == 1`, `origin[1] == 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Grid<T> {
    dim: usize,
    origin: [T; 2],
    h: T,
    shape: [usize; 2],
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, origin: &[T], h: T, shape: &[usize]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::param("dim", format!("must be 1 or 2, got {dim}")));
        }
        if origin.len() != dim {
            return Err(Error::param(
                "origin",
                format!("expected {dim} components, got {}", origin.len()),
            ));
        }
        if shape.len() != dim {
            return Err(Error::param(
                "shape",
                format!("expected {dim} components, got {}", shape.len()),
            ));
        }
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::param("h", format!("must be positive, got {h}")));
        }
        if shape.contains(&0) {
            return Err(Error::param("shape", "every axis needs at least one cell"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::param("origin", "must be finite"));
        }
        let mut g = Grid {
            dim,
            origin: [T::zero(); 2],
            h,
            shape: [1, 1],
        };
        g.origin[..dim].copy_from_slice(origin);
        g.shape[..dim].copy_from_slice(shape);
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn origin(&self) -> &[T] {
        &self.origin[..self.dim]
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    /// Shape padded to two axes.
    pub fn shape2(&self) -> [usize; 2] {
        self.shape
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^dim`.
    pub fn cell_volume(&self) -> T {
        self.h.powi(self.dim as i32)
    }

    pub fn coords(&self, idx: usize) -> [usize; 2] {
        [idx / self.shape[1], idx % self.shape[1]]
    }

    pub fn index(&self, c: [usize; 2]) -> usize {
        c[0] * self.shape[1] + c[1]
    }

    /// Index of signed coordinates, if inside the grid.
    pub fn index_checked(&self, c: [i64; 2]) -> Option<usize> {
        if c[0] < 0 || c[1] < 0 {
            return None;
        }
        let (a, b) = (c[0] as usize, c[1] as usize);
        (a < self.shape[0] && b < self.shape[1]).then(|| self.index([a, b]))
    }

    pub fn center(&self, idx: usize) -> [T; 2] {
        let c = self.coords(idx);
        let half = T::of(0.5);
        let mut x = [T::zero(); 2];
        for a in 0..self.dim {
            x[a] = self.origin[a] + (T::of_usize(c[a]) + half) * self.h;
        }
        x
    }

    /// The grid with the same `h` and shape whose box is centered at the origin.
    pub fn centered(&self) -> Self {
        let mut g = *self;
        for a in 0..self.dim {
            g.origin[a] = -T::of_usize(self.shape[a]) * self.h * T::of(0.5);
        }
        g
    }

    /// Integer offset `o` such that cell coordinates `c` here are `c + o` on
    /// `other`. Fails unless both grids sit on one common lattice.
    pub fn lattice_offset_to(&self, other: &Grid<T>) -> Result<[i64; 2]> {
        if self.dim != other.dim {
            return Err(Error::Mismatch(format!(
                "dimensions differ ({} vs {})",
                self.dim, other.dim
            )));
        }
        let (h1, h2) = (self.h.as_f64(), other.h.as_f64());
        if (h1 - h2).abs() > 1e-9 * h1.max(h2) {
            return Err(Error::Mismatch(format!("cell sizes differ ({h1} vs {h2})")));
        }
        let mut off = [0i64; 2];
        for a in 0..self.dim {
            let d = (self.origin[a].as_f64() - other.origin[a].as_f64()) / h1;
            let r = d.round();
            if (d - r).abs() > 1e-6 {
                return Err(Error::Mismatch(format!(
                    "origins are not a whole number of cells apart on axis {a}"
                )));
            }
            off[a] = r as i64;
        }
        Ok(off)
    }

    /// Twice the squared distance of the cell center from the origin, in
    /// units of `h²/4`, as an exact integer. Only meaningful on a centered
    /// grid, where `2x/h` is an integer on every axis.
    pub(crate) fn centered_radius_key(&self, idx: usize) -> u64 {
        let c = self.coords(idx);
        let mut r2 = 0u64;
        for a in 0..self.dim {
            let t = 2 * c[a] as i64 + 1 - self.shape[a] as i64;
            r2 += (t * t) as u64;
        }
        r2
    }
}

/// Build a grid; the preconditions are those of [`Grid::new`].
pub fn make_grid<T: Real>(dim: usize, origin: &[T], h: T, shape: &[usize]) -> Result<Grid<T>> {
    Grid::new(dim, origin, h, shape)
}

/// A union of grid cells, stored as sorted unique linear indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Mask<T> {
    grid: Grid<T>,
    cells: Vec<usize>,
}

impl<T: Real> Mask<T> {
    pub fn new(grid: Grid<T>, mut cells: Vec<usize>) -> Result<Self> {
        cells.sort_unstable();
        cells.dedup();
        if let Some(&last) = cells.last() {
            if last >= grid.len() {
                return Err(Error::param(
                    "cells",
                    format!("index {last} outside a grid of {} cells", grid.len()),
                ));
            }
        }
        Ok(Mask { grid, cells })
    }

    pub(crate) fn from_sorted(grid: Grid<T>, cells: Vec<usize>) -> Self {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        Mask { grid, cells }
    }

    pub fn from_indicator(grid: Grid<T>, inside: &[bool]) -> Self {
        let cells = inside
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Mask { grid, cells }
    }

    pub fn empty(grid: Grid<T>) -> Self {
        Mask {
            grid,
            cells: Vec::new(),
        }
    }

    pub fn full(grid: Grid<T>) -> Self {
        Mask {
            grid,
            cells: (0..grid.len()).collect(),
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell count times `h^dim`.
    pub fn measure(&self) -> T {
        T::of_usize(self.cells.len()) * self.grid.cell_volume()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.cells.binary_search(&idx).is_ok()
    }

    /// Position of a grid cell within `cells()`.
    pub fn position(&self, idx: usize) -> Option<usize> {
        self.cells.binary_search(&idx).ok()
    }

    pub fn indicator(&self) -> Vec<bool> {
        let mut v = vec![false; self.grid.len()];
        for &c in &self.cells {
            v[c] = true;
        }
        v
    }

    pub fn is_subset_of(&self, other: &Mask<T>) -> bool {
        self.grid == other.grid && self.cells.iter().all(|&c| other.contains(c))
    }

    /// Inclusive coordinate bounding box, `None` when empty.
    pub fn bbox(&self) -> Option<([usize; 2], [usize; 2])> {
        let mut it = self.cells.iter().map(|&c| self.grid.coords(c));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), c| {
            (
                [lo[0].min(c[0]), lo[1].min(c[1])],
                [hi[0].max(c[0]), hi[1].max(c[1])],
            )
        }))
    }

    pub fn intersection(&self, other: &Mask<T>) -> Result<Mask<T>> {
        self.same_grid(other)?;
        let cells = self
            .cells
            .iter()
            .copied()
            .filter(|&c| other.contains(c))
            .collect();
        Ok(Mask::from_sorted(self.grid, cells))
    }

    pub fn union(&self, other: &Mask<T>) -> Result<Mask<T>> {
        self.same_grid(other)?;
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        Mask::new(self.grid, cells)
    }

    pub fn difference(&self, other: &Mask<T>) -> Result<Mask<T>> {
        self.same_grid(other)?;
        let cells = self
            .cells
            .iter()
            .copied()
            .filter(|&c| !other.contains(c))
            .collect();
        Ok(Mask::from_sorted(self.grid, cells))
    }

    fn same_grid(&self, other: &Mask<T>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Mismatch("masks live on different grids".into()));
        }
        Ok(())
    }
}

/// Lebesgue measure of a mask.
pub fn measure<T: Real>(mask: &Mask<T>) -> T {
    mask.measure()
}

/// Real values on the cells of a mask, extended by zero elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Field<T> {
    mask: Mask<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(mask: Mask<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(Error::param(
                "values",
                format!("{} values for {} cells", values.len(), mask.len()),
            ));
        }
        Ok(Field { mask, values })
    }

    pub fn zeros(mask: Mask<T>) -> Self {
        let values = vec![T::zero(); mask.len()];
        Field { mask, values }
    }

    /// Sample a function of the cell center.
    pub fn from_fn(mask: Mask<T>, f: impl Fn([T; 2]) -> T) -> Self {
        let values = mask.cells.iter().map(|&c| f(mask.grid.center(c))).collect();
        Field { mask, values }
    }

    pub fn mask(&self) -> &Mask<T> {
        &self.mask
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.mask.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_parts(self) -> (Mask<T>, Vec<T>) {
        (self.mask, self.values)
    }

    /// Value at a grid cell (zero outside the mask).
    pub fn get(&self, idx: usize) -> T {
        self.mask
            .position(idx)
            .map_or(T::zero(), |p| self.values[p])
    }

    /// `Σ v² h^dim`.
    pub fn norm_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>() * self.grid().cell_volume()
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: T) -> Self {
        Field {
            mask: self.mask.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    /// Rescale to unit `L²` norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > T::zero()) {
            return Err(Error::param("field", "cannot normalize a zero field"));
        }
        Ok(self.scaled(T::one() / n))
    }

    /// Values on the cells of a superset mask (zero where this field has no cell).
    pub fn embed_into(&self, target: &Mask<T>) -> Result<Vec<T>> {
        if !self.mask.is_subset_of(target) {
            return Err(Error::Mismatch(
                "field support is not contained in the target mask".into(),
            ));
        }
        let mut out = vec![T::zero(); target.len()];
        for (&c, &v) in self.mask.cells.iter().zip(&self.values) {
            out[target.position(c).expect("subset")] = v;
        }
        Ok(out)
    }

    /// The sub-field on the cells where the value is nonzero.
    pub fn support(&self) -> Field<T> {
        let (cells, values) = self
            .mask
            .cells
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| **v != T::zero())
            .map(|(&c, &v)| (c, v))
            .unzip();
        Field {
            mask: Mask::from_sorted(self.mask.grid, cells),
            values,
        }
    }
}

fn default_roughness() -> f64 {
    0.3
}

fn default_smoothing() -> f64 {
    3.0
}

/// Shape predicate realized on a grid by cell-center membership.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ShapeSpec {
    /// Closed ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Closed axis-aligned box.
    Rect { min: Vec<f64>, max: Vec<f64> },
    Union { parts: Vec<ShapeSpec> },
    Difference {
        base: Box<ShapeSpec>,
        minus: Box<ShapeSpec>,
    },
    /// Star-shaped random domain: `|x - center| <= radius (1 + roughness n(x))`
    /// with `n` seeded Gaussian-smoothed noise scaled to `[-1, 1]`; only the
    /// largest edge-connected component is kept.
    Blob {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "default_roughness")]
        roughness: f64,
        /// Smoothing length in cells.
        #[serde(default = "default_smoothing")]
        smoothing: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Explicit cell coordinates.
    Cells { cells: Vec<Vec<usize>> },
}

impl ShapeSpec {
    fn check_point(field: &'static str, p: &[f64], dim: usize) -> Result<()> {
        if p.len() != dim {
            return Err(Error::param(
                field,
                format!("expected {dim} components, got {}", p.len()),
            ));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::param(field, "must be finite"));
        }
        Ok(())
    }

    fn indicator<T: Real>(&self, grid: &Grid<T>) -> Result<Vec<bool>> {
        let dim = grid.dim();
        let centers = || (0..grid.len()).map(|i| grid.center(i).map(Real::as_f64));
        match self {
            ShapeSpec::Ball { center, radius } => {
                Self::check_point("center", center, dim)?;
                if !(*radius > 0.0) {
                    return Err(Error::param("radius", format!("must be positive, got {radius}")));
                }
                let r2 = radius * radius;
                Ok(centers()
                    .map(|x| (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>() <= r2)
                    .collect())
            }
            ShapeSpec::Rect { min, max } => {
                Self::check_point("min", min, dim)?;
                Self::check_point("max", max, dim)?;
                if (0..dim).any(|a| !(min[a] < max[a])) {
                    return Err(Error::param("max", "rect needs min < max on every axis"));
                }
                Ok(centers()
                    .map(|x| (0..dim).all(|a| min[a] <= x[a] && x[a] <= max[a]))
                    .collect())
            }
            ShapeSpec::Union { parts } => {
                if parts.is_empty() {
                    return Err(Error::param("parts", "union needs at least one part"));
                }
                let mut acc = vec![false; grid.len()];
                for p in parts {
                    for (a, b) in acc.iter_mut().zip(p.indicator(grid)?) {
                        *a |= b;
                    }
                }
                Ok(acc)
            }
            ShapeSpec::Difference { base, minus } => {
                let mut acc = base.indicator(grid)?;
                for (a, b) in acc.iter_mut().zip(minus.indicator(grid)?) {
                    *a &= !b;
                }
                Ok(acc)
            }
            ShapeSpec::Blob {
                center,
                radius,
                roughness,
                smoothing,
                seed,
            } => {
                Self::check_point("center", center, dim)?;
                if !(*radius > 0.0) {
                    return Err(Error::param("radius", format!("must be positive, got {radius}")));
                }
                if !(0.0..1.0).contains(roughness) {
                    return Err(Error::param("roughness", "must lie in [0, 1)"));
                }
                if !(*smoothing >= 0.0) {
                    return Err(Error::param("smoothing", "must be nonnegative"));
                }
                let noise = smoothed_noise(grid, *smoothing, *seed);
                let inside: Vec<bool> = centers()
                    .zip(&noise)
                    .map(|(x, n)| {
                        let d2 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>();
                        d2.sqrt() <= radius * (1.0 + roughness * n)
                    })
                    .collect();
                Ok(largest_component(grid, &inside))
            }
            ShapeSpec::Cells { cells } => {
                let mut acc = vec![false; grid.len()];
                for c in cells {
                    if c.len() != dim {
                        return Err(Error::param("cells", "coordinate length differs from dim"));
                    }
                    let mut cc = [0usize; 2];
                    cc[..dim].copy_from_slice(c);
                    if cc[0] >= grid.shape2()[0] || cc[1] >= grid.shape2()[1] {
                        return Err(Error::param("cells", format!("{c:?} lies outside the grid")));
                    }
                    acc[grid.index(cc)] = true;
                }
                Ok(acc)
            }
        }
    }
}

/// Uniform noise smoothed by a separable Gaussian of width `sigma` cells,
/// rescaled so that `max |n| = 1`.
fn smoothed_noise<T: Real>(grid: &Grid<T>, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if sigma > 0.0 {
        let reach = (3.0 * sigma).ceil() as i64;
        let taps: Vec<f64> = (-reach..=reach)
            .map(|k| (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        let shape = grid.shape2();
        for axis in 0..grid.dim() {
            let mut out = vec![0.0; n.len()];
            for (idx, o) in out.iter_mut().enumerate() {
                let c = grid.coords(idx);
                let mut acc = 0.0;
                for (t, k) in taps.iter().zip(-reach..=reach) {
                    let mut cc = c;
                    let p = (c[axis] as i64 + k).clamp(0, shape[axis] as i64 - 1);
                    cc[axis] = p as usize;
                    acc += t * n[grid.index(cc)];
                }
                *o = acc;
            }
            n = out;
        }
    }
    let peak = n.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        n.iter_mut().for_each(|v| *v /= peak);
    }
    n
}

/// Keep the largest edge-connected component (ties go to the component
/// holding the smallest cell index).
fn largest_component<T: Real>(grid: &Grid<T>, inside: &[bool]) -> Vec<bool> {
    let mut label = vec![usize::MAX; inside.len()];
    let mut best: Option<(usize, usize)> = None;
    let mut queue = VecDeque::new();
    for start in 0..inside.len() {
        if !inside[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = start;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let c = grid.coords(i);
            for a in 0..grid.dim() {
                for step in [-1i64, 1] {
                    let mut cc = [c[0] as i64, c[1] as i64];
                    cc[a] += step;
                    if let Some(j) = grid.index_checked(cc) {
                        if inside[j] && label[j] == usize::MAX {
                            label[j] = start;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((start, size));
        }
    }
    match best {
        Some((root, _)) => label.iter().map(|&l| l == root).collect(),
        None => vec![false; inside.len()],
    }
}

/// Cells whose centers satisfy the shape predicate.
pub fn mask_from_shape<T: Real>(grid: &Grid<T>, spec: &ShapeSpec) -> Result<Mask<T>> {
    let inside = spec.indicator(grid)?;
    let mask = Mask::from_indicator(*grid, &inside);
    if mask.is_empty() {
        return Err(Error::EmptyMask(format!(
            "shape {spec:?} covers no cell center"
        )));
    }
    Ok(mask)
}

/// `Ω₁ ∩ (Ω₂ + k h)` on the grid of `mask1`; possibly empty.
pub fn intersect_translate<T: Real>(
    mask1: &Mask<T>,
    mask2: &Mask<T>,
    k: Shift,
) -> Result<Mask<T>> {
    let off = mask1.grid.lattice_offset_to(&mask2.grid)?;
    let g1 = &mask1.grid;
    let cells = mask1
        .cells
        .iter()
        .copied()
        .filter(|&c| {
            let x = g1.coords(c);
            let y = [
                x[0] as i64 + off[0] - k[0],
                x[1] as i64 + off[1] - k[1],
            ];
            mask2
                .grid
                .index_checked(y)
                .is_some_and(|j| mask2.contains(j))
        })
        .collect();
    Ok(Mask::from_sorted(*g1, cells))
}

/// `k ↦ |Ω₁ ∩ (Ω₂ + k h)|` over every shift with nonzero overlap, in
/// lexicographic shift order.
pub fn overlap_volume_map<T: Real>(mask1: &Mask<T>, mask2: &Mask<T>) -> Result<BTreeMap<Shift, T>> {
    let off = mask1.grid.lattice_offset_to(&mask2.grid)?;
    let mut counts: BTreeMap<Shift, usize> = BTreeMap::new();
    let c2: Vec<[usize; 2]> = mask2.cells.iter().map(|&j| mask2.grid.coords(j)).collect();
    for &i in &mask1.cells {
        let a = mask1.grid.coords(i);
        for b in &c2 {
            let k = [
                a[0] as i64 + off[0] - b[0] as i64,
                a[1] as i64 + off[1] - b[1] as i64,
            ];
            *counts.entry(k).or_default() += 1;
        }
    }
    let vol = mask1.grid.cell_volume();
    Ok(counts
        .into_iter()
        .map(|(k, n)| (k, T::of_usize(n) * vol))
        .collect())
}

/// Domain file schema: a grid plus a shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub h: f64,
    pub shape: Vec<usize>,
    pub domain: ShapeSpec,
}

impl DomainSpec {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn grid<T: Real>(&self) -> Result<Grid<T>> {
        let origin: Vec<T> = self.origin.iter().map(|&x| T::of(x)).collect();
        Grid::new(self.dim, &origin, T::of(self.h), &self.shape)
    }

    pub fn mask<T: Real>(&self) -> Result<Mask<T>> {
        mask_from_shape(&self.grid()?, &self.domain)
    }

    /// Same physical box resolved with cell size `h`.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::param("h", format!("must be positive, got {h}")));
        }
        let mut out = self.clone();
        out.shape = self
            .shape
            .iter()
            .map(|&n| ((n as f64 * self.h) / h).round().max(1.0) as usize)
            .collect();
        out.h = h;
        Ok(out)
    }
}
