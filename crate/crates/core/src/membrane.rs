//! Composite membrane optimization: minimize `λ_Ω(α, D)` over supports `D`
//! of prescribed measure by alternating eigen-solves and bathtub steps.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{
    default_tol, ritz_bound, smallest_eigenpair_with, EigenOptions, EigenPair, DENSE_CUTOFF,
};
use crate::error::{Error, Result};
use crate::gagliardo::QuadraticForm;
use crate::grid::{Field, Mask};
use crate::Real;

/// Domains up to this size try every single-cell exchange at a fixed point.
pub const FULL_EXCHANGE_CELLS: usize = 24;

/// Hard cap on the exhaustive oracle.
pub const BRUTE_FORCE_MAX_CELLS: usize = 20;

/// Order among cells with equal `u²` in the bathtub step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Lower cell index first.
    #[default]
    Lexicographic,
    /// Higher cell index first.
    ReverseLexicographic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MembraneConfig<T> {
    pub alpha: T,
    /// Target measure of `D`; snapped to the nearest multiple of `h^N`.
    pub c: T,
    pub starts: usize,
    pub seed: u64,
    /// Stop once a round improves `λ` by less than `tol · λ`.
    pub tol: T,
    pub max_outer: usize,
    /// Residual tolerance of each eigen-solve.
    pub eig_tol: T,
    pub tie_rule: TieRule,
    /// Candidates per side for the exchange step at a fixed point; every
    /// exchange is tried on domains of at most [`FULL_EXCHANGE_CELLS`] cells.
    pub swap_width: usize,
    /// Solver iterations used to rank exchange candidates on large domains;
    /// only the best-ranked one is solved to `eig_tol`. Zero solves every
    /// candidate fully.
    #[serde(default = "default_screen_iters")]
    pub screen_iters: usize,
}

fn default_screen_iters() -> usize {
    4
}

impl<T: Real> MembraneConfig<T> {
    pub fn new(alpha: T, c: T) -> Self {
        MembraneConfig {
            alpha,
            c,
            starts: 16,
            seed: 0,
            tol: T::of(1e-12).max(T::epsilon() * T::of(10.0)),
            max_outer: 200,
            eig_tol: default_tol(),
            tie_rule: TieRule::default(),
            swap_width: 4,
            screen_iters: default_screen_iters(),
        }
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be positive and finite"));
        }
        if self.starts == 0 {
            return Err(Error::param("starts", "at least one start is required"));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::param("tol", "must be positive"));
        }
        if !(self.eig_tol > T::zero()) {
            return Err(Error::param("eig_tol", "must be positive"));
        }
        if self.max_outer == 0 {
            return Err(Error::param("max_outer", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationResult<T: Real> {
    /// `Λ_Ω(α, c)`.
    pub lambda: T,
    pub u: Field<T>,
    pub d: Mask<T>,
    /// `λ` after every eigen-solve of the winning start.
    pub trace: Vec<T>,
    pub start_id: usize,
    pub converged: bool,
    /// Number of cells in `D`.
    pub k: usize,
    pub c_snapped: T,
    /// Final `λ` of every start, by start index.
    pub start_lambdas: Vec<T>,
    pub degenerate_flags: Vec<bool>,
}

/// Number of cells of measure closest to `c`.
pub fn snap_cells<T: Real>(mask: &Mask<T>, c: T) -> Result<usize> {
    let vol = mask.grid().cell_volume();
    if !(c >= T::zero()) || !c.is_finite() {
        return Err(Error::param("c", "must be finite and nonnegative"));
    }
    let k = (c / vol).round().to_usize().unwrap_or(usize::MAX);
    if k > mask.len() {
        return Err(Error::param(
            "c",
            format!("exceeds the domain measure {}", mask.measure().as_f64()),
        ));
    }
    Ok(k)
}

/// The `k` cells with smallest `u²`.
pub(crate) fn bathtub_cells<T: Real>(u: &Field<T>, k: usize, tie: TieRule) -> Mask<T> {
    let cells = u.mask().cells();
    let vals = u.values();
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| {
        let by_value = (vals[a] * vals[a]).partial_cmp(&(vals[b] * vals[b])).expect("finite field");
        match tie {
            TieRule::Lexicographic => by_value.then(cells[a].cmp(&cells[b])),
            TieRule::ReverseLexicographic => by_value.then(cells[b].cmp(&cells[a])),
        }
    });
    let mut chosen: Vec<usize> = order[..k].iter().map(|&i| cells[i]).collect();
    chosen.sort_unstable();
    Mask::from_sorted(*u.grid(), chosen)
}

/// Cells of smallest `u²` with total measure `c` (snapped): the minimizer of
/// `Σ_D u²` over admissible `D` for fixed `u`.
pub fn bathtub_subset<T: Real>(u: &Field<T>, c: T, tie: TieRule) -> Result<Mask<T>> {
    let k = snap_cells(u.mask(), c)?;
    Ok(bathtub_cells(u, k, tie))
}

fn solve<T: Real>(
    form: &QuadraticForm<T>,
    d: &Mask<T>,
    alpha: T,
    tol: T,
    guess: Option<&Field<T>>,
) -> Result<EigenPair<T>> {
    let opts = EigenOptions {
        guess: guess.map(|g| g.values().to_vec()),
        ..EigenOptions::with_tol(tol)
    };
    smallest_eigenpair_with(form, d, alpha, &opts)
}

struct Run<T: Real> {
    pair: EigenPair<T>,
    d: Mask<T>,
    trace: Vec<T>,
    converged: bool,
}

/// An exchange of cells between `D` and its complement that lowers `λ`, if
/// one is found.
///
/// Alternating minimization stops at any support that is a bathtub set of its
/// own eigenfunction, and such fixed points need not be global (on a
/// symmetric interval, lopsided supports are fixed points too). Exchanging
/// the cells where `u²` is largest inside `D` with the ones where it is
/// smallest outside escapes most of them.
fn exchange<T: Real>(
    form: &QuadraticForm<T>,
    cfg: &MembraneConfig<T>,
    d: &Mask<T>,
    pair: &EigenPair<T>,
) -> Result<Option<(Mask<T>, EigenPair<T>)>> {
    let u = &pair.vector;
    let by_u2 = |cells: &mut Vec<usize>, descending: bool| {
        cells.sort_by(|&a, &b| {
            let (x, y) = (u.get(a) * u.get(a), u.get(b) * u.get(b));
            let o = if descending { y.partial_cmp(&x) } else { x.partial_cmp(&y) };
            o.expect("finite field").then(a.cmp(&b))
        });
    };
    let mut inside = d.cells().to_vec();
    let mut outside = form.domain().difference(d)?.cells().to_vec();
    if form.len() > FULL_EXCHANGE_CELLS {
        by_u2(&mut inside, true);
        by_u2(&mut outside, false);
        inside.truncate(cfg.swap_width);
        outside.truncate(cfg.swap_width);
    }
    let bar = pair.lambda - cfg.tol * pair.lambda.abs();
    let swapped = |moves: &[(usize, usize)]| {
        let mut cells: Vec<usize> = d
            .cells()
            .iter()
            .copied()
            .filter(|c| !moves.iter().any(|m| m.0 == *c))
            .chain(moves.iter().map(|m| m.1))
            .collect();
        cells.sort_unstable();
        Mask::from_sorted(*d.grid(), cells)
    };

    if cfg.screen_iters == 0 || form.len() <= DENSE_CUTOFF {
        let mut best: Option<(Mask<T>, EigenPair<T>)> = None;
        for &a in &inside {
            for &b in &outside {
                let cand = swapped(&[(a, b)]);
                let cp = solve(form, &cand, cfg.alpha, cfg.eig_tol, Some(u))?;
                if cp.lambda < best.as_ref().map_or(bar, |b| b.1.lambda) {
                    best = Some((cand, cp));
                }
            }
        }
        return Ok(best);
    }

    // Rank by Ritz bounds, then try every disjoint improving swap at once
    // before falling back to the single best one.
    let mut ranked = Vec::new();
    for &a in &inside {
        for &b in &outside {
            let bound = ritz_bound(form, &swapped(&[(a, b)]), cfg.alpha, u.values(), cfg.screen_iters)?;
            if bound < bar {
                ranked.push((bound, a, b));
            }
        }
    }
    if ranked.is_empty() {
        return Ok(None);
    }
    ranked.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite bound").then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut moves: Vec<(usize, usize)> = Vec::new();
    for &(_, a, b) in &ranked {
        if moves.iter().all(|m| m.0 != a && m.1 != b) {
            moves.push((a, b));
        }
    }
    if moves.len() > 1 {
        let cand = swapped(&moves);
        let cp = solve(form, &cand, cfg.alpha, cfg.eig_tol, Some(u))?;
        if cp.lambda < ranked[0].0 {
            return Ok(Some((cand, cp)));
        }
    }
    let cand = swapped(&moves[..1]);
    let cp = solve(form, &cand, cfg.alpha, cfg.eig_tol, Some(u))?;
    Ok((cp.lambda < bar).then_some((cand, cp)))
}

fn descend<T: Real>(
    form: &QuadraticForm<T>,
    cfg: &MembraneConfig<T>,
    k: usize,
    start: Mask<T>,
) -> Result<Run<T>> {
    let mut d = start;
    let mut pair = solve(form, &d, cfg.alpha, cfg.eig_tol, None)?;
    let mut trace = vec![pair.lambda];
    let mut converged = false;
    for _ in 0..cfg.max_outer {
        let next = bathtub_cells(&pair.vector, k, cfg.tie_rule);
        let stalled = if next == d {
            true
        } else {
            let next_pair = solve(form, &next, cfg.alpha, cfg.eig_tol, Some(&pair.vector))?;
            let improvement = pair.lambda - next_pair.lambda;
            trace.push(next_pair.lambda);
            d = next;
            pair = next_pair;
            improvement < cfg.tol * pair.lambda.abs()
        };
        if stalled {
            let swap = if cfg.swap_width > 0 { exchange(form, cfg, &d, &pair)? } else { None };
            match swap {
                Some((better, better_pair)) => {
                    trace.push(better_pair.lambda);
                    d = better;
                    pair = better_pair;
                }
                _ => {
                    converged = true;
                    break;
                }
            }
        }
    }
    Ok(Run { pair, d, trace, converged })
}

fn random_start<T: Real>(domain: &Mask<T>, k: usize, seed: u64, start: usize) -> Mask<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    let mut cells: Vec<usize> = rand::seq::index::sample(&mut rng, domain.len(), k)
        .into_iter()
        .map(|i| domain.cells()[i])
        .collect();
    cells.sort_unstable();
    Mask::from_sorted(*domain.grid(), cells)
}

fn check_k<T: Real>(form: &QuadraticForm<T>, c: T) -> Result<usize> {
    let k = snap_cells(form.domain(), c)?;
    if k == 0 || k >= form.len() {
        return Err(Error::param(
            "c",
            format!("snaps to {k} of {} cells; need 0 < k < n", form.len()),
        ));
    }
    Ok(k)
}

fn best_of<T: Real>(
    form: &QuadraticForm<T>,
    cfg: &MembraneConfig<T>,
    k: usize,
    starts: Vec<Mask<T>>,
) -> Result<OptimizationResult<T>> {
    let runs: Vec<Result<Run<T>>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, d0)| descend(form, cfg, k, d0).map_err(|e| e.in_start(i)))
        .collect();
    let runs: Vec<Run<T>> = runs.into_iter().collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.pair.lambda < runs[best].pair.lambda {
            best = i;
        }
    }
    let start_lambdas = runs.iter().map(|r| r.pair.lambda).collect();
    let degenerate_flags = runs.iter().map(|r| r.pair.degenerate).collect();
    let win = runs.into_iter().nth(best).expect("at least one start");
    Ok(OptimizationResult {
        lambda: win.pair.lambda,
        u: win.pair.vector,
        d: win.d,
        trace: win.trace,
        start_id: best,
        converged: win.converged,
        k,
        c_snapped: T::of_usize(k) * form.domain().grid().cell_volume(),
        start_lambdas,
        degenerate_flags,
    })
}

/// `Λ_Ω(α, c)` by multi-start alternating minimization.
pub fn optimize<T: Real>(form: &QuadraticForm<T>, cfg: &MembraneConfig<T>) -> Result<OptimizationResult<T>> {
    cfg.validate()?;
    let k = check_k(form, cfg.c)?;
    let starts = (0..cfg.starts)
        .map(|i| random_start(form.domain(), k, cfg.seed, i))
        .collect();
    best_of(form, cfg, k, starts)
}

/// As [`optimize`], with the random starts followed by the given initial
/// supports (each of the snapped size).
pub fn optimize_from<T: Real>(
    form: &QuadraticForm<T>,
    cfg: &MembraneConfig<T>,
    initial: &[Mask<T>],
) -> Result<OptimizationResult<T>> {
    cfg.validate()?;
    let k = check_k(form, cfg.c)?;
    for d in initial {
        if d.len() != k || !d.is_subset_of(form.domain()) {
            return Err(Error::param("initial", format!("every initial set must be {k} domain cells")));
        }
    }
    let starts = (0..cfg.starts)
        .map(|i| random_start(form.domain(), k, cfg.seed, i))
        .chain(initial.iter().cloned())
        .collect();
    best_of(form, cfg, k, starts)
}

/// Exact discrete `Λ_Ω(α, c)` by enumerating every support of the snapped
/// size; also returns the minimizing support (first in enumeration order).
pub fn brute_force_optimum<T: Real>(form: &QuadraticForm<T>, alpha: T, c: T) -> Result<(T, Mask<T>)> {
    let n = form.len();
    if n > BRUTE_FORCE_MAX_CELLS {
        return Err(Error::param(
            "domain",
            format!("{n} cells exceed the exhaustive cap of {BRUTE_FORCE_MAX_CELLS}"),
        ));
    }
    if !(alpha >= T::zero()) {
        return Err(Error::param("alpha", "must be nonnegative"));
    }
    let k = snap_cells(form.domain(), c)?;
    let scale = (form.spec().c_ns() / (T::of(2.0) * form.domain().grid().cell_volume())).as_f64();
    let base: Vec<f64> = form.dense_matrix().iter().map(|x| scale * x.as_f64()).collect();
    let a = alpha.as_f64();
    let mut best = (f64::INFINITY, 0u32);
    let mut subset: u32 = if k == 0 { 0 } else { (1u32 << k) - 1 };
    loop {
        let mut m = DMatrix::from_row_slice(n, n, &base);
        for i in 0..n {
            if subset & (1 << i) != 0 {
                m[(i, i)] += a;
            }
        }
        let lam = SymmetricEigen::new(m).eigenvalues.min();
        if lam < best.0 {
            best = (lam, subset);
        }
        if k == 0 || k == n {
            break;
        }
        // next subset of the same size (Gosper)
        let c0 = subset & subset.wrapping_neg();
        let r = subset + c0;
        subset = (((r ^ subset) >> 2) / c0) | r;
        if subset >> n != 0 {
            break;
        }
    }
    let cells = (0..n).filter(|&i| best.1 & (1 << i) != 0).map(|i| form.domain().cells()[i]).collect();
    Ok((T::of(best.0), Mask::from_sorted(*form.domain().grid(), cells)))
}

/// Exact discrete `Λ_Ω(α, c)`; at most 20 active cells.
pub fn brute_force_lambda<T: Real>(form: &QuadraticForm<T>, alpha: T, c: T) -> Result<T> {
    brute_force_optimum(form, alpha, c).map(|(l, _)| l)
}

/// Monotonicity failure between adjacent table entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `"alpha"` or `"c"`.
    pub axis: String,
    pub i: usize,
    pub j: usize,
    /// How far the later entry falls below the earlier one.
    pub amount: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SweepTable<T> {
    pub alphas: Vec<T>,
    pub cs: Vec<T>,
    pub cells: Vec<usize>,
    /// `lambda[i][j] = Λ(alphas[i], cs[j])`.
    pub lambda: Vec<Vec<T>>,
    pub violations: Vec<Violation>,
    /// Entries lowered by reseeding from neighbouring optima.
    pub repairs: usize,
    pub slack: f64,
}

impl<T: Real> SweepTable<T> {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The `k` cells of `d` where `u²` is smallest. For `k <= |d|` this is an
/// admissible support whose `λ` does not exceed that of `d`.
pub(crate) fn trim_support<T: Real>(u: &Field<T>, d: &Mask<T>, k: usize, tie: TieRule) -> Mask<T> {
    let vals = d.cells().iter().map(|&c| u.get(c)).collect();
    let on_d = Field::new(d.clone(), vals).expect("one value per cell");
    bathtub_cells(&on_d, k, tie)
}

/// Slack for the monotonicity flags.
pub const SWEEP_SLACK: f64 = 1e-9;

/// `Λ(α, c)` on the tensor grid `alphas × cs`.
///
/// Each entry starts from `base.starts` random supports. A support optimal at
/// a larger `α` or `c`, trimmed to the smaller size, bounds the smaller
/// problem from above, so entries that come out above a neighbour are
/// re-optimized from that support until the table settles.
pub fn monotonicity_sweep<T: Real>(
    form: &QuadraticForm<T>,
    alphas: &[T],
    cs: &[T],
    base: &MembraneConfig<T>,
) -> Result<SweepTable<T>> {
    if alphas.is_empty() || cs.is_empty() {
        return Err(Error::param("sweep", "parameter lists must be nonempty"));
    }
    if alphas.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::param("alphas", "must be sorted ascending"));
    }
    if cs.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::param("cs", "must be sorted ascending"));
    }
    let cells = cs.iter().map(|&c| check_k(form, c)).collect::<Result<Vec<_>>>()?;
    let cfg_at = |i: usize, j: usize| MembraneConfig {
        alpha: alphas[i],
        c: cs[j],
        ..base.clone()
    };
    let points: Vec<(usize, usize)> = (0..alphas.len())
        .flat_map(|i| (0..cs.len()).map(move |j| (i, j)))
        .collect();
    let mut grid: Vec<OptimizationResult<T>> = points
        .iter()
        .map(|&(i, j)| optimize(form, &cfg_at(i, j)))
        .collect::<Result<_>>()?;
    let idx = |i: usize, j: usize| i * cs.len() + j;
    let slack = T::of(SWEEP_SLACK);
    let mut repairs = 0;
    for _ in 0..points.len() {
        let mut changed = false;
        for &(i, j) in &points {
            let mut seeds = Vec::new();
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                if ni < alphas.len() && nj < cs.len() {
                    let nb = &grid[idx(ni, nj)];
                    if grid[idx(i, j)].lambda > nb.lambda + slack {
                        seeds.push(trim_support(&nb.u, &nb.d, cells[j], base.tie_rule));
                    }
                }
            }
            if seeds.is_empty() {
                continue;
            }
            let cfg = MembraneConfig { starts: 0, ..cfg_at(i, j) };
            let starts = seeds;
            let again = best_of(form, &cfg, cells[j], starts)?;
            if again.lambda < grid[idx(i, j)].lambda {
                grid[idx(i, j)] = again;
                repairs += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let lambda: Vec<Vec<T>> = (0..alphas.len())
        .map(|i| (0..cs.len()).map(|j| grid[idx(i, j)].lambda).collect())
        .collect();
    let mut violations = Vec::new();
    for i in 0..alphas.len() {
        for j in 0..cs.len() {
            if i + 1 < alphas.len() && lambda[i][j] > lambda[i + 1][j] + slack {
                violations.push(Violation {
                    axis: "alpha".into(),
                    i,
                    j,
                    amount: (lambda[i][j] - lambda[i + 1][j]).as_f64(),
                });
            }
            if j + 1 < cs.len() && lambda[i][j] > lambda[i][j + 1] + slack {
                violations.push(Violation {
                    axis: "c".into(),
                    i,
                    j,
                    amount: (lambda[i][j] - lambda[i][j + 1]).as_f64(),
                });
            }
        }
    }
    Ok(SweepTable {
        alphas: alphas.to_vec(),
        cs: cs.to_vec(),
        cells,
        lambda,
        violations,
        repairs,
        slack: SWEEP_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{dirichlet_eigenvalue, smallest_eigenpair};
    use crate::gagliardo::{assemble_form, FormSpec};
    use crate::grid::{mask_from_shape, Grid, ShapeSpec};

    fn line(n: usize, s: f64) -> QuadraticForm<f64> {
        let g = Grid::new(1, &[0.0], 1.0 / n as f64, &[n]).unwrap();
        assemble_form(&Mask::full(g), &FormSpec::new(1, s).unwrap()).unwrap()
    }

    #[test]
    fn bathtub_examples() {
        let g = Grid::new(1, &[0.0], 1.0, &[3]).unwrap();
        let m = Mask::full(g);
        let u = Field::new(m.clone(), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(bathtub_subset(&u, 1.0, TieRule::default()).unwrap().cells(), &[0]);
        assert_eq!(bathtub_subset(&u, 3.0, TieRule::default()).unwrap(), m);
        assert!(bathtub_subset(&u, 0.0, TieRule::default()).unwrap().is_empty());
        let tied = Field::new(m.clone(), vec![1.0, 1.0, 2.0]).unwrap();
        assert_eq!(bathtub_subset(&tied, 1.0, TieRule::Lexicographic).unwrap().cells(), &[0]);
        assert_eq!(bathtub_subset(&tied, 1.0, TieRule::ReverseLexicographic).unwrap().cells(), &[1]);
        assert!(bathtub_subset(&u, 3.6, TieRule::default()).is_err());
        // signs do not matter, only u²
        let signed = Field::new(m, vec![-3.0, 2.0, 1.5]).unwrap();
        assert_eq!(bathtub_subset(&signed, 2.0, TieRule::default()).unwrap().cells(), &[1, 2]);
    }

    #[test]
    fn brute_force_endpoints() {
        let f = line(8, 0.5);
        let l1 = dirichlet_eigenvalue(&f, 1e-12).unwrap();
        let h = 1.0 / 8.0;
        assert!((brute_force_lambda(&f, 2.0, 0.0).unwrap() - l1).abs() < 1e-10 * l1);
        assert!((brute_force_lambda(&f, 2.0, 8.0 * h).unwrap() - l1 - 2.0).abs() < 1e-10 * l1);
        let big = line(21, 0.5);
        assert!(brute_force_lambda(&big, 1.0, 0.1).unwrap_err().is_parameter_error());
    }

    #[test]
    fn optimize_matches_exhaustive_search_in_1d() {
        let f = line(10, 0.5);
        for k in 1..10 {
            let c = k as f64 / 10.0;
            let cfg = MembraneConfig::new(5.0, c).with_seed(3);
            let r = optimize(&f, &cfg).unwrap();
            let (exact, _) = brute_force_optimum(&f, 5.0, c).unwrap();
            assert!((r.lambda - exact).abs() < 1e-9 * exact, "k={k}");
            assert_eq!(r.d.len(), k);
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0]));
            let again = smallest_eigenpair(&f, &r.d, 5.0, 1e-12).unwrap();
            assert!((again.lambda - r.lambda).abs() < 1e-10 * r.lambda);
        }
    }

    #[test]
    fn small_alpha_support_hugs_the_boundary() {
        let f = line(12, 0.5);
        let (_, d) = brute_force_optimum(&f, 0.5, 4.0 / 12.0).unwrap();
        assert_eq!(d.cells(), &[0, 1, 10, 11]);
        let r = optimize(&f, &MembraneConfig::new(0.5, 4.0 / 12.0)).unwrap();
        assert_eq!(r.d, d);
    }

    #[test]
    fn invalid_configs() {
        let f = line(10, 0.5);
        let bad = [
            MembraneConfig::new(1.0, 0.01),
            MembraneConfig::new(1.0, 1.0),
            MembraneConfig::new(0.0, 0.5),
            MembraneConfig::new(1.0, 0.5).with_starts(0),
        ];
        for cfg in bad {
            assert!(optimize(&f, &cfg).unwrap_err().is_parameter_error());
        }
    }

    #[test]
    fn result_is_reproducible_and_a_fixed_point() {
        let g: Grid<f64> = Grid::new(2, &[-1.0, -1.0], 0.125, &[16, 16]).unwrap();
        let m = mask_from_shape(&g, &ShapeSpec::Ball { center: vec![0.0, 0.0], radius: 0.9 }).unwrap();
        let f = assemble_form(&m, &FormSpec::new(2, 0.5).unwrap()).unwrap();
        let cfg = MembraneConfig::new(10.0, 0.3 * m.measure()).with_starts(4).with_seed(11);
        let a = optimize(&f, &cfg).unwrap();
        let b = optimize(&f, &cfg).unwrap();
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        assert_eq!(a.d, b.d);
        assert_eq!(a.start_lambdas.len(), 4);
        if a.converged {
            let fixed = bathtub_cells(&a.u, a.k, cfg.tie_rule);
            let l_fixed = smallest_eigenpair(&f, &fixed, 10.0, 1e-10).unwrap().lambda;
            assert!((l_fixed - a.lambda).abs() < 1e-9 * a.lambda);
        }
        let l1 = dirichlet_eigenvalue(&f, 1e-10).unwrap();
        assert!(l1 <= a.lambda && a.lambda <= l1 + 10.0);
    }

    #[test]
    fn sweep_is_monotone() {
        let f = line(14, 0.5);
        let alphas = [1.0, 2.0, 4.0];
        let cs = [2.0 / 14.0, 5.0 / 14.0, 9.0 / 14.0];
        let t = monotonicity_sweep(&f, &alphas, &cs, &MembraneConfig::new(1.0, 0.5).with_starts(2)).unwrap();
        assert!(t.is_monotone(), "{:?}", t.violations);
        assert_eq!(t.lambda.len(), 3);
        assert!(monotonicity_sweep(&f, &[], &cs, &MembraneConfig::new(1.0, 0.5)).is_err());
        assert!(monotonicity_sweep(&f, &[2.0, 1.0], &cs, &MembraneConfig::new(1.0, 0.5)).is_err());
    }
}
