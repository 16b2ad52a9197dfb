//! Block LOBPCG for the lowest eigenpair.
//!
//! Block size 2: the second Ritz vector speeds up convergence when the
//! spectral gap is small and its Ritz value feeds the degeneracy flag.

use super::dense::small_eigen;
use super::{EigenOptions, Raw, Shifted};
use crate::error::{Error, Result};
use crate::Real;

pub(crate) const MIN_CELLS: usize = 8;
const BLOCK: usize = 2;
/// Images `H x` are recomputed from scratch this often.
const REFRESH: usize = 16;

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn axpy<T: Real>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

fn scale<T: Real>(a: T, x: &mut [T]) {
    for v in x.iter_mut() {
        *v = *v * a;
    }
}

/// Orthonormalize `v` (and its image, if tracked) against `basis` with two
/// Gram–Schmidt passes. Returns false if `v` is numerically dependent.
fn orthonormalize<T: Real>(
    v: &mut [T],
    mut hv: Option<&mut [T]>,
    basis: &[Vec<T>],
    hbasis: &[Vec<T>],
) -> bool {
    let n0 = dot(v, v).sqrt();
    if !(n0 > T::zero()) || !n0.is_finite() {
        return false;
    }
    scale(T::one() / n0, v);
    if let Some(h) = hv.as_deref_mut() {
        scale(T::one() / n0, h);
    }
    for _ in 0..2 {
        for (b, hb) in basis.iter().zip(hbasis.iter().map(Some).chain(std::iter::repeat(None))) {
            let c = dot(b, v);
            axpy(-c, b, v);
            if let (Some(h), Some(hb)) = (hv.as_deref_mut(), hb) {
                axpy(-c, hb, h);
            }
        }
    }
    let n1 = dot(v, v).sqrt();
    if !(n1 > T::of(1e-8).max(T::epsilon() * T::of(1e3))) {
        return false;
    }
    scale(T::one() / n1, v);
    if let Some(h) = hv {
        scale(T::one() / n1, h);
    }
    true
}

fn image<T: Real>(op: &Shifted<'_, T>, v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    op.apply(v, &mut out);
    out
}

/// Deterministic start vectors: preconditioned constant (a smooth bump) and
/// an oscillating companion.
fn initial<T: Real>(op: &Shifted<'_, T>, guess: Option<&[T]>, block: usize) -> Vec<Vec<T>> {
    let n = op.len();
    let first = match guess {
        Some(g) => g.to_vec(),
        None => {
            let mut v = vec![T::zero(); n];
            op.precondition(&vec![T::one(); n], &mut v);
            v
        }
    };
    let golden = 0.618_033_988_749_894_9_f64;
    let mut out = vec![first];
    for j in 1..block {
        let mut v: Vec<T> = (0..n)
            .map(|i| T::of(((i as f64 + 1.0) * golden * (j as f64 + 2.0)).fract() - 0.5))
            .collect();
        let mut pv = vec![T::zero(); n];
        op.precondition(&v, &mut pv);
        v = pv;
        out.push(v);
    }
    out
}

pub(crate) fn solve<T: Real>(op: &Shifted<'_, T>, opts: &EigenOptions<T>) -> Result<Raw<T>> {
    iterate(op, opts, BLOCK, false)
}

/// At most `steps` iterations from `guess`; the smallest Ritz value is an
/// upper bound on the eigenvalue whether or not it has converged.
pub(crate) fn ritz_bound<T: Real>(op: &Shifted<'_, T>, guess: &[T], steps: usize) -> T {
    let opts = EigenOptions {
        tol: T::epsilon(),
        max_iter: steps,
        method: Default::default(),
        guess: Some(guess.to_vec()),
    };
    iterate(op, &opts, 1, true).map(|r| r.lambda).expect("budgeted run does not fail")
}

fn iterate<T: Real>(op: &Shifted<'_, T>, opts: &EigenOptions<T>, block: usize, budget: bool) -> Result<Raw<T>> {
    let n = op.len();
    let mut x: Vec<Vec<T>> = Vec::with_capacity(block);
    for mut v in initial(op, opts.guess.as_deref(), block) {
        if !orthonormalize(&mut v, None, &x, &[]) {
            // fall back to a unit vector not yet spanned
            for k in 0..n {
                let mut e = vec![T::zero(); n];
                e[(k * 7 + x.len()) % n] = T::one();
                if orthonormalize(&mut e, None, &x, &[]) {
                    v = e;
                    break;
                }
            }
        }
        x.push(v);
    }
    let mut hx: Vec<Vec<T>> = x.iter().map(|v| image(op, v)).collect();
    let mut p: Vec<Vec<T>>;
    let mut hp: Vec<Vec<T>>;
    let mut theta = vec![T::zero(); block];
    let mut best = f64::INFINITY;

    // Rayleigh–Ritz on the starting block; afterwards on [X, P, W].
    let mut basis = x.clone();
    let mut hbasis = hx.clone();
    let mut iterations = 0usize;
    loop {
        let k = basis.len();
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let v = 0.5 * (dot(&basis[i], &hbasis[j]) + dot(&basis[j], &hbasis[i])).as_f64();
                g[i * k + j] = v;
                g[j * k + i] = v;
            }
        }
        let (vals, y) = small_eigen(k, &g);
        let combine = |rows: std::ops::Range<usize>, col: usize, src: &[Vec<T>]| {
            let mut out = vec![T::zero(); n];
            for r in rows {
                axpy(T::of(y[(r, col)]), &src[r], &mut out);
            }
            out
        };
        let mut new_x = Vec::with_capacity(block);
        let mut new_hx = Vec::with_capacity(block);
        let mut new_p = Vec::new();
        let mut new_hp = Vec::new();
        for j in 0..block {
            new_x.push(combine(0..k, j, &basis));
            new_hx.push(combine(0..k, j, &hbasis));
            if k > block {
                new_p.push(combine(block..k, j, &basis));
                new_hp.push(combine(block..k, j, &hbasis));
            }
            theta[j] = T::of(vals[j]);
        }
        x = new_x;
        hx = new_hx;
        p = new_p;
        hp = new_hp;
        if iterations > 0 && iterations.is_multiple_of(REFRESH) {
            hx = x.iter().map(|v| image(op, v)).collect();
            hp = p.iter().map(|v| image(op, v)).collect();
        }

        let residuals: Vec<Vec<T>> = (0..block)
            .map(|j| {
                let mut r = hx[j].clone();
                axpy(-theta[j], &x[j], &mut r);
                r
            })
            .collect();
        let mut res = dot(&residuals[0], &residuals[0]).sqrt() / theta[0].abs();
        if res < opts.tol {
            // confirm against a freshly applied operator
            res = op.residual(theta[0], &x[0]);
            if res < opts.tol {
                return Ok(Raw {
                    lambda: theta[0],
                    second: theta.get(1).copied(),
                    vector: x.swap_remove(0),
                    iterations,
                });
            }
            hx = x.iter().map(|v| image(op, v)).collect();
            hp = p.iter().map(|v| image(op, v)).collect();
        }
        best = best.min(res.as_f64());
        if iterations >= opts.max_iter {
            if budget {
                return Ok(Raw {
                    lambda: theta[0],
                    second: theta.get(1).copied(),
                    vector: x.swap_remove(0),
                    iterations,
                });
            }
            return Err(Error::Solver { iterations, best_residual: best, start: None });
        }
        iterations += 1;

        basis = x.clone();
        hbasis = hx.clone();
        for (mut v, mut hv) in p.drain(..).zip(hp.drain(..)) {
            if orthonormalize(&mut v, Some(&mut hv), &basis, &hbasis) {
                basis.push(v);
                hbasis.push(hv);
            }
        }
        for r in &residuals {
            let mut w = vec![T::zero(); n];
            op.precondition(r, &mut w);
            if orthonormalize(&mut w, None, &basis, &[]) {
                hbasis.push(image(op, &w));
                basis.push(w);
            }
        }
    }
}
