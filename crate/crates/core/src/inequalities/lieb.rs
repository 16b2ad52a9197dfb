//! Lieb-type inequality: some translate of `Ω₂` meets `Ω₁` in a set whose
//! composite eigenvalue is below `Λ_{Ω₁}(α₁,c₁) + Λ_{Ω₂}(α₂,c₂)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{dirichlet_eigenvalue, smallest_eigenpair};
use crate::error::{Error, Result};
use crate::gagliardo::{assemble_form, FormSpec};
use crate::grid::{intersect_translate, overlap_volume_map, Mask, Shift};
use crate::membrane::{optimize, optimize_from, trim_support, MembraneConfig, OptimizationResult};
use crate::Real;

/// Which lattice shifts get the per-shift optimizations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftSet {
    /// Every shift with positive overlap.
    #[default]
    All,
    /// Overlapping shifts whose components are multiples of the stride.
    Stride(usize),
    /// The listed shifts that overlap.
    Explicit(Vec<Shift>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LiebConfig<T> {
    pub alpha1: T,
    pub alpha2: T,
    pub c1: T,
    pub c2: T,
    /// Potential height on the intersections; `(α₁+α₂)/2` when absent.
    pub alpha: Option<T>,
    pub shift_set: ShiftSet,
    /// Starts for the optimizations on `Ω₁` and `Ω₂`.
    pub starts: usize,
    /// Starts for each per-shift optimization.
    pub shift_starts: usize,
    pub seed: u64,
    pub eig_tol: T,
}

impl<T: Real> LiebConfig<T> {
    pub fn new(alpha1: T, alpha2: T, c1: T, c2: T) -> Self {
        LiebConfig {
            alpha1,
            alpha2,
            c1,
            c2,
            alpha: None,
            shift_set: ShiftSet::All,
            starts: 16,
            shift_starts: 4,
            seed: 0,
            eig_tol: crate::eigensolve::default_tol(),
        }
    }

    pub fn resolved_alpha(&self) -> T {
        self.alpha.unwrap_or((self.alpha1 + self.alpha2) / T::of(2.0))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct ShiftRecord<T> {
    pub k: Shift,
    /// `|Ω_x|`.
    pub overlap: T,
    pub cells: usize,
    /// `c_x = |D₁ ∩ D_{2,x}|`.
    pub c_x: T,
    pub k_x: usize,
    /// Measure used for `Λ_{Ω_x}(α, c)`: `c_x/2` snapped.
    pub c: T,
    pub lambda_dirichlet: T,
    /// `Λ_{Ω_x}(α₁+α₂, c_x)`.
    pub lambda_upper: T,
    /// `Λ_{Ω_x}(α, c)`; absent when `k_x < 2` leaves no `c ∈ (0, c_x)`.
    pub lambda_intersection: Option<T>,
    pub strict: bool,
    /// `λ₁(Ω_x) <= Λ_{Ω_x}(α₁+α₂, c_x)`.
    pub chain_holds: bool,
    /// `Λ_{Ω_x}(α, c) <= Λ_{Ω_x}(α₁+α₂, c_x)`.
    pub monotone_holds: bool,
}

/// `U(x)` and `W(x)` at one shift.
#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct WuTerm<T> {
    pub k: Shift,
    pub u: T,
    pub w: T,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct LiebReport<T> {
    pub lambda1: T,
    pub lambda2: T,
    /// `Λ = Λ_{Ω₁}(α₁,c₁) + Λ_{Ω₂}(α₂,c₂)`.
    pub lambda_sum: T,
    pub alpha: T,
    pub records: Vec<ShiftRecord<T>>,
    pub witnesses: Vec<Shift>,
    /// `Σ_x (W(x) - Λ U(x)) h^N` over every overlapping shift.
    pub wu_sum: T,
    /// `Σ_x U(x) h^N`, which is 1 for normalized eigenfunctions.
    pub u_total: T,
    pub wu_slack: T,
    pub wu_holds: bool,
    pub wu_terms: Vec<WuTerm<T>>,
    pub config: LiebConfig<T>,
}

fn select_shifts<T: Real>(all: &[(Shift, T)], set: &ShiftSet) -> Vec<(Shift, T)> {
    match set {
        ShiftSet::All => all.to_vec(),
        ShiftSet::Stride(s) => all
            .iter()
            .copied()
            .filter(|(k, _)| k[0].rem_euclid(*s as i64) == 0 && k[1].rem_euclid(*s as i64) == 0)
            .collect(),
        ShiftSet::Explicit(list) => all.iter().copied().filter(|(k, _)| list.contains(k)).collect(),
    }
}

/// `(u_x values on Ω₁, indicator of D₁ ∩ D_{2,x} on Ω₁)`.
fn product<T: Real>(
    one: &OptimizationResult<T>,
    two: &OptimizationResult<T>,
    offset: [i64; 2],
    k: Shift,
) -> (Vec<T>, Vec<bool>) {
    let (g1, g2) = (one.u.grid(), two.u.grid());
    one.u
        .mask()
        .cells()
        .iter()
        .zip(one.u.values())
        .map(|(&c, &v1)| {
            let x = g1.coords(c);
            let y = [x[0] as i64 + offset[0] - k[0], x[1] as i64 + offset[1] - k[1]];
            match g2.index_checked(y) {
                Some(j) => (v1 * two.u.get(j), one.d.contains(c) && two.d.contains(j)),
                None => (T::zero(), false),
            }
        })
        .unzip()
}

fn evaluate_shift<T: Real>(
    spec: &FormSpec<T>,
    cfg: &LiebConfig<T>,
    omega_x: Mask<T>,
    d_x: Mask<T>,
    k: Shift,
    lambda_sum: T,
) -> Result<ShiftRecord<T>> {
    let vol = omega_x.grid().cell_volume();
    let form = assemble_form(&omega_x, spec)?;
    let (n, k_x) = (omega_x.len(), d_x.len());
    let alpha_sum = cfg.alpha1 + cfg.alpha2;
    let alpha = cfg.resolved_alpha();
    let lambda_dirichlet = dirichlet_eigenvalue(&form, cfg.eig_tol)?;
    let upper_cfg = MembraneConfig {
        starts: cfg.shift_starts,
        seed: cfg.seed,
        eig_tol: cfg.eig_tol,
        ..MembraneConfig::new(alpha_sum, T::of_usize(k_x) * vol)
    };
    // (value, eigenfunction, support) of Λ_{Ω_x}(α₁+α₂, c_x)
    let (lambda_upper, upper) = if k_x == 0 {
        (lambda_dirichlet, None)
    } else if k_x == n {
        let p = smallest_eigenpair(&form, &omega_x, alpha_sum, cfg.eig_tol)?;
        (p.lambda, Some((p.vector, omega_x.clone())))
    } else {
        let r = optimize(&form, &upper_cfg)?;
        (r.lambda, Some((r.u, r.d)))
    };
    let c_cells = ((k_x as f64) / 2.0).round() as usize;
    let applicable = k_x >= 2;
    let lambda_intersection = match (&upper, applicable) {
        (Some((u, d)), true) => {
            let lower_cfg = MembraneConfig {
                alpha,
                c: T::of_usize(c_cells) * vol,
                ..upper_cfg.clone()
            };
            let seed_set = trim_support(u, d, c_cells, lower_cfg.tie_rule);
            Some(optimize_from(&form, &lower_cfg, &[seed_set])?.lambda)
        }
        _ => None,
    };
    let tiny = T::of(1e-9) * lambda_upper.abs();
    Ok(ShiftRecord {
        k,
        overlap: T::of_usize(n) * vol,
        cells: n,
        c_x: T::of_usize(k_x) * vol,
        k_x,
        c: T::of_usize(if applicable { c_cells } else { 0 }) * vol,
        lambda_dirichlet,
        lambda_upper,
        lambda_intersection,
        strict: lambda_intersection.is_some_and(|l| l < lambda_sum),
        chain_holds: lambda_dirichlet <= lambda_upper + tiny,
        monotone_holds: lambda_intersection.is_none_or(|l| l <= lambda_upper + tiny),
    })
}

/// Optimize on `Ω₁` and `Ω₂`, then evaluate the composite problem on
/// `Ω₁ ∩ (Ω₂ + x)` for the selected shifts and the `W - Λ U` balance over
/// all overlapping shifts.
pub fn lieb_experiment<T: Real>(
    omega1: &Mask<T>,
    omega2: &Mask<T>,
    spec: &FormSpec<T>,
    cfg: &LiebConfig<T>,
) -> Result<LiebReport<T>> {
    let alpha = cfg.resolved_alpha();
    let alpha_sum = cfg.alpha1 + cfg.alpha2;
    if !(alpha > T::zero() && alpha < alpha_sum) {
        return Err(Error::param("alpha", "must lie in (0, alpha1 + alpha2)"));
    }
    if let ShiftSet::Stride(0) = cfg.shift_set {
        return Err(Error::param("shift_set", "stride must be positive"));
    }
    if cfg.shift_starts == 0 {
        return Err(Error::param("shift_starts", "at least one start is required"));
    }
    let offset = omega1.grid().lattice_offset_to(omega2.grid())?;
    let all: Vec<(Shift, T)> = overlap_volume_map(omega1, omega2)?.into_iter().collect();
    let chosen = select_shifts(&all, &cfg.shift_set);
    if chosen.is_empty() {
        return Err(Error::EmptyReport("no selected shift has positive overlap".into()));
    }

    let form1 = assemble_form(omega1, spec)?;
    let form2 = assemble_form(omega2, spec)?;
    let base = |a: T, c: T| MembraneConfig {
        starts: cfg.starts,
        seed: cfg.seed,
        eig_tol: cfg.eig_tol,
        ..MembraneConfig::new(a, c)
    };
    let one = optimize(&form1, &base(cfg.alpha1, cfg.c1))?;
    let two = optimize(&form2, &base(cfg.alpha2, cfg.c2))?;
    let lambda_sum = one.lambda + two.lambda;

    let vol = omega1.grid().cell_volume();
    let half_c = spec.c_ns() / T::of(2.0);
    let wu_terms: Vec<WuTerm<T>> = all
        .par_iter()
        .map(|&(k, _)| {
            let (ux, in_d) = product(&one, &two, offset, k);
            let mass: T = ux.iter().map(|&v| v * v).sum::<T>() * vol;
            let on_d: T = ux
                .iter()
                .zip(&in_d)
                .filter(|(_, &d)| d)
                .map(|(&v, _)| v * v)
                .sum::<T>()
                * vol;
            WuTerm {
                k,
                u: mass,
                w: half_c * form1.quadratic(&ux) + alpha_sum * on_d,
            }
        })
        .collect();
    let wu_sum = wu_terms.iter().map(|t| (t.w - lambda_sum * t.u) * vol).sum::<T>();
    let u_total = wu_terms.iter().map(|t| t.u * vol).sum::<T>();
    let wu_slack = T::of(1e-9) * lambda_sum;

    let records: Vec<ShiftRecord<T>> = chosen
        .par_iter()
        .map(|&(k, _)| {
            let omega_x = intersect_translate(omega1, omega2, k)?;
            let d_x = intersect_translate(&one.d, &two.d, k)?;
            evaluate_shift(spec, cfg, omega_x, d_x, k, lambda_sum)
        })
        .collect::<Result<_>>()?;
    let witnesses = records.iter().filter(|r| r.strict).map(|r| r.k).collect();
    Ok(LiebReport {
        lambda1: one.lambda,
        lambda2: two.lambda,
        lambda_sum,
        alpha,
        records,
        witnesses,
        wu_sum,
        u_total,
        wu_slack,
        wu_holds: wu_sum <= wu_slack,
        wu_terms,
        config: cfg.clone(),
    })
}
