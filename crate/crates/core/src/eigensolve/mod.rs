//! Ground state of `H = (C_{N,s}/2) A + α χ_D` with the lumped cell mass.
//!
//! With cell volume `h^N` the discrete eigenproblem reads
//! `(C/2) A u + α h^N χ_D u = λ h^N u`, i.e. the symmetric operator
//! `(C / (2 h^N)) A + α χ_D` on the active cells. Returned vectors are scaled
//! to `Σ u² h^N = 1` and signed so that the largest entry is positive.

mod dense;
mod lobpcg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gagliardo::QuadraticForm;
use crate::grid::{Field, Mask};
use crate::Real;

/// Problems with at most this many cells are solved densely under
/// [`SolverMethod::Auto`].
pub const DENSE_CUTOFF: usize = 64;

const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Dense below [`DENSE_CUTOFF`] cells, iterative above.
    #[default]
    Auto,
    Dense,
    /// Block LOBPCG with an FFT preconditioner.
    Iterative,
}

#[derive(Clone, Debug)]
pub struct EigenOptions<T> {
    /// Bound on `|H u - λ u| / (|λ| |u|)`.
    pub tol: T,
    pub max_iter: usize,
    pub method: SolverMethod,
    /// Starting vector on the form's domain (iterative solver only).
    pub guess: Option<Vec<T>>,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        EigenOptions {
            tol: default_tol(),
            max_iter: DEFAULT_MAX_ITER,
            method: SolverMethod::Auto,
            guess: None,
        }
    }
}

impl<T: Real> EigenOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        EigenOptions { tol, ..Self::default() }
    }
}

/// `1e-10` in `f64`, a few hundred ulps in `f32`.
pub fn default_tol<T: Real>() -> T {
    T::of(1e-10).max(T::epsilon() * T::of(200.0))
}

#[derive(Clone, Debug)]
pub struct EigenPair<T: Real> {
    pub lambda: T,
    pub vector: Field<T>,
    /// `|H u - λ u| / (|λ| |u|)`.
    pub residual: T,
    pub iterations: usize,
    /// The second Ritz value is within `1e-12 |λ|` of the first.
    pub degenerate: bool,
}

/// Operator `H` restricted to the form's domain.
pub(crate) struct Shifted<'a, T: Real> {
    pub form: &'a QuadraticForm<T>,
    pub scale: T,
    pub alpha: T,
    pub in_d: Vec<bool>,
}

impl<'a, T: Real> Shifted<'a, T> {
    fn new(form: &'a QuadraticForm<T>, d: &Mask<T>, alpha: T) -> Result<Self> {
        if !d.is_subset_of(form.domain()) {
            return Err(Error::Mismatch("D is not contained in the form's domain".into()));
        }
        let mut in_d = vec![false; form.len()];
        for &c in d.cells() {
            in_d[form.domain().position(c).expect("subset")] = true;
        }
        let vol = form.domain().grid().cell_volume();
        Ok(Shifted {
            form,
            scale: form.spec().c_ns() / (T::of(2.0) * vol),
            alpha,
            in_d,
        })
    }

    pub fn len(&self) -> usize {
        self.form.len()
    }

    pub fn apply(&self, u: &[T], out: &mut [T]) {
        self.form.apply(u, out);
        for ((o, &x), &d) in out.iter_mut().zip(u).zip(&self.in_d) {
            *o = self.scale * *o + if d { self.alpha * x } else { T::zero() };
        }
    }

    pub fn dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut a: Vec<f64> = self.form.dense_matrix().iter().map(|x| (self.scale * *x).as_f64()).collect();
        for (i, &d) in self.in_d.iter().enumerate() {
            if d {
                a[i * n + i] += self.alpha.as_f64();
            }
        }
        a
    }

    /// Approximate inverse: periodic extension of `A`, mean potential.
    pub fn precondition(&self, r: &[T], out: &mut [T]) {
        let frac = T::of_usize(self.in_d.iter().filter(|&&d| d).count()) / T::of_usize(self.len());
        self.form.periodic_solve(r, out, self.scale, self.alpha * frac);
    }

    pub fn residual(&self, lambda: T, u: &[T]) -> T {
        let mut hu = vec![T::zero(); u.len()];
        self.apply(u, &mut hu);
        let r: T = hu.iter().zip(u).map(|(&a, &b)| (a - lambda * b).powi(2)).sum::<T>().sqrt();
        let nu: T = u.iter().map(|&x| x * x).sum::<T>().sqrt();
        r / (lambda.abs() * nu)
    }
}

/// Raw solver output on the local cell ordering.
pub(crate) struct Raw<T> {
    pub lambda: T,
    pub second: Option<T>,
    pub vector: Vec<T>,
    pub iterations: usize,
}

/// Smallest eigenpair of `(C/2) A + α χ_D` on the form's domain.
pub fn smallest_eigenpair<T: Real>(
    form: &QuadraticForm<T>,
    d: &Mask<T>,
    alpha: T,
    tol: T,
) -> Result<EigenPair<T>> {
    smallest_eigenpair_with(form, d, alpha, &EigenOptions::with_tol(tol))
}

pub fn smallest_eigenpair_with<T: Real>(
    form: &QuadraticForm<T>,
    d: &Mask<T>,
    alpha: T,
    opts: &EigenOptions<T>,
) -> Result<EigenPair<T>> {
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(Error::param("alpha", "must be finite and nonnegative"));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::param("tol", "must be positive"));
    }
    if let Some(g) = &opts.guess {
        if g.len() != form.len() {
            return Err(Error::param("guess", format!("expected {} entries", form.len())));
        }
    }
    let op = Shifted::new(form, d, alpha)?;
    let n = op.len();
    let dense = match opts.method {
        SolverMethod::Dense => true,
        SolverMethod::Iterative => n < lobpcg::MIN_CELLS,
        SolverMethod::Auto => n <= DENSE_CUTOFF.max(lobpcg::MIN_CELLS - 1),
    };
    let raw = if dense { dense::solve(&op) } else { lobpcg::solve(&op, opts)? };
    finish(&op, raw)
}

fn finish<T: Real>(op: &Shifted<'_, T>, raw: Raw<T>) -> Result<EigenPair<T>> {
    let Raw { lambda, second, mut vector, iterations } = raw;
    let vol = op.form.domain().grid().cell_volume();
    let norm = (vector.iter().map(|&x| x * x).sum::<T>() * vol).sqrt();
    let peak = vector.iter().copied().fold(T::zero(), |m, x| if x.abs() > m.abs() { x } else { m });
    let sign = if peak < T::zero() { -T::one() } else { T::one() };
    for x in vector.iter_mut() {
        *x = *x * sign / norm;
    }
    let residual = op.residual(lambda, &vector);
    let gap_tol = T::of(1e-12).max(T::epsilon() * T::of(10.0));
    let degenerate = second.is_some_and(|l2| (l2 - lambda).abs() < gap_tol * lambda.abs());
    Ok(EigenPair {
        lambda,
        vector: Field::new(op.form.domain().clone(), vector)?,
        residual,
        iterations,
        degenerate,
    })
}

/// Upper bound on the smallest eigenvalue from `steps` iterations started at
/// `guess`; exact on domains small enough for the dense path.
pub(crate) fn ritz_bound<T: Real>(
    form: &QuadraticForm<T>,
    d: &Mask<T>,
    alpha: T,
    guess: &[T],
    steps: usize,
) -> Result<T> {
    let op = Shifted::new(form, d, alpha)?;
    if op.len() <= DENSE_CUTOFF.max(lobpcg::MIN_CELLS - 1) {
        return Ok(dense::solve(&op).lambda);
    }
    Ok(lobpcg::ritz_bound(&op, guess, steps))
}

/// First Dirichlet eigenvalue of the form's domain.
pub fn dirichlet_eigenvalue<T: Real>(form: &QuadraticForm<T>, tol: T) -> Result<T> {
    let empty = Mask::empty(*form.domain().grid());
    smallest_eigenpair(form, &empty, T::zero(), tol).map(|p| p.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gagliardo::{assemble_form, rayleigh_quotient, FormSpec};
    use crate::grid::{mask_from_shape, Grid, ShapeSpec};

    fn disc(n: usize, s: f64) -> QuadraticForm<f64> {
        let g = Grid::new(2, &[-1.0, -1.0], 2.0 / n as f64, &[n, n]).unwrap();
        let m = mask_from_shape(&g, &ShapeSpec::Ball { center: vec![0.0, 0.0], radius: 0.95 }).unwrap();
        assemble_form(&m, &FormSpec::new(2, s).unwrap()).unwrap()
    }

    #[test]
    fn single_cell_closed_form() {
        let g: Grid<f64> = Grid::new(1, &[0.0], 0.2, &[5]).unwrap();
        let m = Mask::new(g, vec![3]).unwrap();
        let f = assemble_form(&m, &FormSpec::new(1, 0.5).unwrap()).unwrap();
        let p = smallest_eigenpair(&f, &m, 2.0, 1e-10).unwrap();
        let expected = f.spec().c_ns() / 2.0 * f.tail()[0] / 0.2 + 2.0;
        assert!((p.lambda - expected).abs() < 1e-12 * expected);
        assert!((p.vector.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iterative_matches_dense() {
        let f = disc(24, 0.5);
        assert!(f.len() > 300);
        let d = mask_from_shape(
            f.domain().grid(),
            &ShapeSpec::Rect { min: vec![-1.0, -1.0], max: vec![0.0, 0.2] },
        )
        .unwrap()
        .intersection(f.domain())
        .unwrap();
        let it = EigenOptions { method: SolverMethod::Iterative, ..EigenOptions::with_tol(1e-10) };
        let de = EigenOptions { method: SolverMethod::Dense, ..EigenOptions::with_tol(1e-10) };
        let a = smallest_eigenpair_with(&f, &d, 5.0, &it).unwrap();
        let b = smallest_eigenpair_with(&f, &d, 5.0, &de).unwrap();
        assert!((a.lambda - b.lambda).abs() < 1e-10 * b.lambda, "{} vs {}", a.lambda, b.lambda);
        assert!(a.residual <= 1e-10);
        let diff: f64 = a.vector.values().iter().zip(b.vector.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6);
    }

    #[test]
    fn ground_state_properties() {
        let f = disc(20, 0.3);
        let d = Mask::new(*f.domain().grid(), f.domain().cells()[..40].to_vec()).unwrap();
        let p = smallest_eigenpair(&f, &d, 3.0, 1e-10).unwrap();
        assert!(p.vector.values().iter().all(|&x| x >= -1e-10));
        assert!((p.vector.norm() - 1.0).abs() < 1e-12);
        assert!(!p.degenerate);
        let rq = rayleigh_quotient(&f, &p.vector, &d, 3.0).unwrap();
        assert!((rq - p.lambda).abs() < 10.0 * 1e-10 * p.lambda);
        let l1 = dirichlet_eigenvalue(&f, 1e-10).unwrap();
        assert!(l1 <= p.lambda && p.lambda <= l1 + 3.0);
        let full = smallest_eigenpair(&f, f.domain(), 3.0, 1e-10).unwrap();
        assert!((full.lambda - l1 - 3.0).abs() < 1e-10 * full.lambda);
    }

    #[test]
    fn nested_domains_are_ordered() {
        let g = Grid::new(2, &[0.0, 0.0], 0.05, &[30, 30]).unwrap();
        let spec = FormSpec::new(2, 0.5).unwrap();
        let big = mask_from_shape(&g, &ShapeSpec::Rect { min: vec![0.0, 0.0], max: vec![1.5, 1.0] }).unwrap();
        let small = mask_from_shape(&g, &ShapeSpec::Rect { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }).unwrap();
        let lb = dirichlet_eigenvalue(&assemble_form(&big, &spec).unwrap(), 1e-10).unwrap();
        let ls = dirichlet_eigenvalue(&assemble_form(&small, &spec).unwrap(), 1e-10).unwrap();
        assert!(ls >= lb);
    }

    #[test]
    fn warm_start_and_f32() {
        let f = disc(22, 0.5);
        let empty = Mask::empty(*f.domain().grid());
        let it = EigenOptions { method: SolverMethod::Iterative, ..EigenOptions::default() };
        let cold = smallest_eigenpair_with(&f, &empty, 0.0, &it).unwrap();
        let warm = smallest_eigenpair_with(
            &f,
            &empty,
            0.0,
            &EigenOptions { guess: Some(cold.vector.values().to_vec()), ..it.clone() },
        )
        .unwrap();
        assert!(warm.iterations <= 2);
        assert!((warm.lambda - cold.lambda).abs() < 1e-10 * cold.lambda);

        let g32 = Grid::<f32>::new(1, &[-1.0], 0.02, &[100]).unwrap();
        let m32 = Mask::full(g32);
        let f32form = assemble_form(&m32, &FormSpec::new(1, 0.5f32).unwrap()).unwrap();
        let l32 = dirichlet_eigenvalue(&f32form, default_tol()).unwrap();
        let g64 = Grid::<f64>::new(1, &[-1.0], 0.02, &[100]).unwrap();
        let f64form = assemble_form(&Mask::full(g64), &FormSpec::new(1, 0.5).unwrap()).unwrap();
        let l64 = dirichlet_eigenvalue(&f64form, 1e-10).unwrap();
        assert!(((l32 as f64) - l64).abs() < 1e-4 * l64);
    }

    #[test]
    fn invalid_inputs() {
        let f = disc(8, 0.5);
        let empty = Mask::empty(*f.domain().grid());
        assert!(smallest_eigenpair(&f, &empty, -1.0, 1e-10).unwrap_err().is_parameter_error());
        assert!(smallest_eigenpair(&f, &empty, 1.0, 0.0).is_err());
    }
}
