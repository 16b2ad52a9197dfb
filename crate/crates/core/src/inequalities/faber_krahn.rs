//! Composite Faber–Krahn: the quasi-ball of equal measure does not do worse.

use serde::Serialize;

use crate::error::Result;
use crate::gagliardo::{assemble_form, rayleigh_quotient, FormSpec};
use crate::grid::{Field, Mask};
use crate::membrane::{optimize, MembraneConfig};
use crate::rearrange::{schwarz_decreasing, schwarz_increasing};
use crate::Real;

/// Tolerated `Λ_{Ω*} - Λ_Ω` as a fraction of `Λ_Ω`.
pub const DEFAULT_FK_SLACK: f64 = 0.02;

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct FKReport<T> {
    pub lambda_omega: T,
    pub lambda_ball: T,
    /// `Λ_Ω - Λ_{Ω*}`.
    pub gap: T,
    pub h: T,
    pub cells: usize,
    /// Cells in `D` on both sides.
    pub k: usize,
    pub c_snapped: T,
    /// Rayleigh quotient of `(u*, D_*)` built from the optimal pair on `Ω`.
    pub chain_symmetrized: T,
    pub chain_holds: bool,
    pub slack: T,
    pub within_slack: bool,
    pub s: T,
    pub alpha: T,
    pub c: T,
    pub starts: usize,
    pub seed: u64,
    pub omega_start: usize,
    pub ball_start: usize,
}

/// Optimize on `Ω` and on its quasi-ball with one snapped `c`, and replay
/// the rearrangement step of the argument on the optimal pair of `Ω`.
pub fn faber_krahn_experiment<T: Real>(
    omega: &Mask<T>,
    spec: &FormSpec<T>,
    cfg: &MembraneConfig<T>,
    slack_fraction: T,
) -> Result<FKReport<T>> {
    let form = assemble_form(omega, spec)?;
    let here = optimize(&form, cfg)?;

    let u_star = schwarz_decreasing(&here.u);
    let star = u_star.field.mask().clone();
    let ball_form = assemble_form(&star, spec)?;
    let ball = optimize(&ball_form, cfg)?;

    // (χ_D)_*: the k outermost cells of Ω*
    let mut chi = vec![T::zero(); omega.len()];
    for &c in here.d.cells() {
        chi[omega.position(c).expect("D ⊆ Ω")] = T::one();
    }
    let chi_low = schwarz_increasing(&Field::new(omega.clone(), chi)?);
    let d_star = Mask::new(
        *star.grid(),
        chi_low
            .ordering
            .iter()
            .copied()
            .filter(|&c| chi_low.field.get(c) == T::one())
            .collect(),
    )?;
    let chain = rayleigh_quotient(&ball_form, &u_star.field, &d_star, cfg.alpha)?;

    let slack = slack_fraction * here.lambda;
    let tiny = T::of(1e-9) * here.lambda;
    Ok(FKReport {
        lambda_omega: here.lambda,
        lambda_ball: ball.lambda,
        gap: here.lambda - ball.lambda,
        h: omega.grid().h(),
        cells: omega.len(),
        k: here.k,
        c_snapped: here.c_snapped,
        chain_symmetrized: chain,
        chain_holds: chain <= here.lambda + slack,
        slack,
        within_slack: ball.lambda <= here.lambda + slack + tiny,
        s: spec.s(),
        alpha: cfg.alpha,
        c: cfg.c,
        starts: cfg.starts,
        seed: cfg.seed,
        omega_start: here.start_id,
        ball_start: ball.start_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{mask_from_shape, Grid, ShapeSpec};

    #[test]
    fn square_versus_ball() {
        let g: Grid<f64> = Grid::new(2, &[-1.0, -1.0], 1.0 / 12.0, &[24, 24]).unwrap();
        let sq = mask_from_shape(&g, &ShapeSpec::Rect { min: vec![-0.6, -0.6], max: vec![0.6, 0.6] }).unwrap();
        let spec = FormSpec::new(2, 0.5).unwrap();
        let cfg = MembraneConfig::new(10.0, 0.3 * sq.measure()).with_starts(4);
        let r = faber_krahn_experiment(&sq, &spec, &cfg, DEFAULT_FK_SLACK).unwrap();
        assert!(r.gap >= 0.0, "{r:?}");
        assert!(r.chain_holds && r.within_slack);
        assert_eq!(r.k, (0.3 * sq.len() as f64).round() as usize);
    }

    #[test]
    fn quasi_ball_is_an_equality_case() {
        let g: Grid<f64> = Grid::new(2, &[-1.0, -1.0], 1.0 / 12.0, &[24, 24]).unwrap();
        let disc = mask_from_shape(&g, &ShapeSpec::Ball { center: vec![0.0, 0.0], radius: 0.7 }).unwrap();
        let star = crate::rearrange::symmetrize_mask(&disc);
        let spec = FormSpec::new(2, 0.5).unwrap();
        let cfg = MembraneConfig::new(10.0, 0.3 * star.measure()).with_starts(4);
        let r = faber_krahn_experiment(&star, &spec, &cfg, DEFAULT_FK_SLACK).unwrap();
        assert!(r.gap.abs() <= 0.01 * r.lambda_omega, "{r:?}");
    }
}
