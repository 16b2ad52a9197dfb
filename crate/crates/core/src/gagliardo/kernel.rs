//! Dimensionless lattice weights of the kernel `|z|^{-N-2s}` (cell size 1).
//!
//! The pair weight of two cells at lattice offset `k` is
//! `h^{N-2s} · unit_weight(k)`. Far offsets use the midpoint value
//! `|k|^{-N-2s}`. For `|k|_∞ <= 1` the midpoint value misses the singular part
//! of the kernel, so the weight is obtained by product integration: the
//! difference quotient `(u(x+z) - u(x))² / |z|²` is interpolated with tensor
//! hat functions centered on the lattice and integrated exactly against
//! `|z|^{2-N-2s}`. The hat at `z = 0` carries the gradient energy and is
//! split evenly over the axis neighbours.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

/// How weights of touching cells (`|k|_∞ <= 1`) are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NearFieldPolicy {
    /// Hat-profile product integration (finite for every `s ∈ (0,1)`).
    #[default]
    HatProfile,
    /// Plain midpoint rule everywhere. Inconsistent as `h → 0`; kept for
    /// comparisons.
    Midpoint,
}

/// Gauss–Legendre rule on `[0, 1]`.
pub(crate) fn gauss_legendre01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

fn hat(k: [i64; 2], z: [f64; 2]) -> f64 {
    (1.0 - (z[0] - k[0] as f64).abs()).max(0.0) * (1.0 - (z[1] - k[1] as f64).abs()).max(0.0)
}

/// `∫ |z|^{-2s} H_k(z) dz` over the unit square `[m, m+1] × [n, n+1]` (2-D).
fn square_integral(s: f64, k: [i64; 2], m: i64, n: i64) -> f64 {
    let touches_origin = (m == 0 || m == -1) && (n == 0 || n == -1);
    if touches_origin {
        // Reflect onto [0,1]², where the hat is bilinear: a + b t1 + c t2 + d t1 t2.
        let (s1, s2) = (if m == 0 { 1.0 } else { -1.0 }, if n == 0 { 1.0 } else { -1.0 });
        let p = |t1: f64, t2: f64| hat(k, [s1 * t1, s2 * t2]);
        let (p00, p10, p01, p11) = (p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(1.0, 1.0));
        let a = p00;
        let b = p10 - p00;
        let c = p01 - p00;
        let d = p11 - p10 - p01 + p00;
        // Duffy split along the diagonal; the radial factor u^{1-2s} is
        // integrated in closed form, the angular one by Gauss–Legendre.
        let (e1, e2, e3) = (1.0 / (2.0 - 2.0 * s), 1.0 / (3.0 - 2.0 * s), 1.0 / (4.0 - 2.0 * s));
        let (x, w) = gauss_legendre01(48);
        x.iter()
            .zip(&w)
            .map(|(&v, &wv)| {
                let ang = (1.0 + v * v).powf(-s);
                let lower = a * e1 + (b + c * v) * e2 + d * v * e3;
                let upper = a * e1 + (c + b * v) * e2 + d * v * e3;
                wv * ang * (lower + upper)
            })
            .sum()
    } else {
        let (x, w) = gauss_legendre01(24);
        let mut acc = 0.0;
        for (&xi, &wi) in x.iter().zip(&w) {
            for (&yj, &wj) in x.iter().zip(&w) {
                let z = [m as f64 + xi, n as f64 + yj];
                let r2 = z[0] * z[0] + z[1] * z[1];
                acc += wi * wj * r2.powf(-s) * hat(k, z);
            }
        }
        acc
    }
}

/// `∫_{R²} |z|^{-2s} H_k(z) dz` for the tensor hat centered at `k`.
pub(crate) fn hat_integral_2d(s: f64, k: [i64; 2]) -> f64 {
    let mut acc = 0.0;
    for m in k[0] - 1..=k[0] {
        for n in k[1] - 1..=k[1] {
            acc += square_integral(s, k, m, n);
        }
    }
    acc
}

/// `∫_R |z|^{1-2s} H_1(z) dz` in closed form.
pub(crate) fn hat_integral_1d_neighbor(s: f64) -> f64 {
    let a = 2.0 - 2.0 * s;
    let b = 3.0 - 2.0 * s;
    1.0 / b + 2.0 * (2f64.powf(a) - 1.0) / a - (2f64.powf(b) - 1.0) / b
}

/// `∫_R |z|^{1-2s} H_0(z) dz` in closed form.
pub(crate) fn hat_integral_1d_center(s: f64) -> f64 {
    2.0 * (1.0 / (2.0 - 2.0 * s) - 1.0 / (3.0 - 2.0 * s))
}

/// Dimensionless weights for one `(dim, s, policy)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct UnitKernel {
    pub dim: usize,
    pub s: f64,
    pub policy: NearFieldPolicy,
    axis: f64,
    diagonal: f64,
}

impl UnitKernel {
    pub fn new(dim: usize, s: f64, policy: NearFieldPolicy) -> Self {
        let midpoint = |k: [i64; 2]| {
            let r2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            r2.powf(-(dim as f64 + 2.0 * s) / 2.0)
        };
        let (axis, diagonal) = match (policy, dim) {
            (NearFieldPolicy::Midpoint, _) => (midpoint([1, 0]), midpoint([1, 1])),
            (NearFieldPolicy::HatProfile, 1) => (
                hat_integral_1d_neighbor(s) + hat_integral_1d_center(s) / 2.0,
                0.0,
            ),
            (NearFieldPolicy::HatProfile, _) => (
                hat_integral_2d(s, [1, 0]) + hat_integral_2d(s, [0, 0]) / 4.0,
                hat_integral_2d(s, [1, 1]) / 2.0,
            ),
        };
        UnitKernel {
            dim,
            s,
            policy,
            axis,
            diagonal,
        }
    }

    /// Weight at lattice offset `k` (zero at `k = 0`).
    pub fn weight(&self, k: [i64; 2]) -> f64 {
        let (a, b) = (k[0].unsigned_abs(), k[1].unsigned_abs());
        match (a.max(b), a.min(b)) {
            (0, _) => 0.0,
            (1, 0) => self.axis,
            (1, 1) => self.diagonal,
            _ => {
                let r2 = (a * a + b * b) as f64;
                r2.powf(-(self.dim as f64 + 2.0 * self.s) / 2.0)
            }
        }
    }

    /// `Σ_{k≠0} 2 w(k)` over the infinite lattice: explicit for `|k|_∞ <= radius`,
    /// plus the integral of the kernel over the complement of the box
    /// `[-radius-½, radius+½]^N` covered by the remaining cells.
    pub fn row_sum(&self, radius: usize) -> f64 {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64, NearFieldPolicy, usize), f64>>> =
            OnceLock::new();
        let key = (self.dim, self.s.to_bits(), self.policy, radius);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(&v) = cache.lock().expect("cache poisoned").get(&key) {
            return v;
        }
        let r = radius as i64;
        let mut sum = Kahan::default();
        let edge = radius as f64 + 0.5;
        let remainder = if self.dim == 1 {
            for k in 1..=r {
                sum.add(2.0 * self.weight([k, 0]));
            }
            edge.powf(-2.0 * self.s) / self.s
        } else {
            for a in -r..=r {
                for b in -r..=r {
                    sum.add(self.weight([a, b]));
                }
            }
            // Polar form: the ray at angle θ leaves the box at edge / cos θ
            // (θ ∈ [0, π/4], eight symmetric sectors).
            let (x, w) = gauss_legendre01(40);
            let quarter = std::f64::consts::FRAC_PI_4;
            let ang: f64 = x
                .iter()
                .zip(&w)
                .map(|(&t, &wt)| wt * quarter * (t * quarter).cos().powf(2.0 * self.s))
                .sum();
            8.0 * ang * edge.powf(-2.0 * self.s) / (2.0 * self.s)
        };
        sum.add(remainder);
        let total = 2.0 * sum.value();
        cache.lock().expect("cache poisoned").insert(key, total);
        total
    }
}

/// Compensated summation.
#[derive(Default, Clone, Copy)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force 2-D oracle: split each unit square into a geometrically
    /// graded set of sub-squares towards the origin and apply a tensor
    /// Gauss–Legendre rule on each piece.
    fn graded_oracle(s: f64, k: [i64; 2]) -> f64 {
        let (x, w) = gauss_legendre01(16);
        let rule = |x0: f64, y0: f64, len: f64| {
            let mut acc = 0.0;
            for (&xi, &wi) in x.iter().zip(&w) {
                for (&yj, &wj) in x.iter().zip(&w) {
                    let z = [x0 + len * xi, y0 + len * yj];
                    acc += wi * wj * (z[0] * z[0] + z[1] * z[1]).powf(-s) * hat(k, z);
                }
            }
            acc * len * len
        };
        let mut total = 0.0;
        for m in k[0] - 1..=k[0] {
            for n in k[1] - 1..=k[1] {
                let touches = (m == 0 || m == -1) && (n == 0 || n == -1);
                if !touches {
                    total += rule(m as f64, n as f64, 1.0);
                    continue;
                }
                let (sx, sy) = (if m == 0 { 1.0 } else { -1.0 }, if n == 0 { 1.0 } else { -1.0 });
                // L-shaped shells [0,L]² \ [0,L/2]², each cut into 3 squares.
                let mut len = 1.0;
                for _ in 0..260 {
                    let half = len / 2.0;
                    for (ox, oy) in [(half, 0.0), (0.0, half), (half, half)] {
                        let (lo_x, lo_y) = if sx > 0.0 { (ox, 0.0) } else { (-ox - half, 0.0) };
                        let lo_y = lo_y + if sy > 0.0 { oy } else { -oy - half };
                        total += rule(lo_x, lo_y, half);
                    }
                    len = half;
                }
            }
        }
        total
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre01(10);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
        assert!((m - 1.0 / 20.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn near_field_2d_matches_graded_quadrature() {
        for &s in &[0.1, 0.5, 0.9] {
            for k in [[0, 0], [1, 0], [1, 1]] {
                let fast = hat_integral_2d(s, k);
                let slow = graded_oracle(s, k);
                assert!(
                    (fast - slow).abs() < 1e-9 * slow,
                    "s={s} k={k:?}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn near_field_1d_closed_forms_match_quadrature() {
        for &s in &[0.2, 0.5, 0.8] {
            // dyadic shells towards the singularity at z = 0
            let (x, w) = gauss_legendre01(20);
            let graded = |f: &dyn Fn(f64) -> f64| {
                let mut acc = 0.0;
                let mut hi = 1.0;
                for _ in 0..400 {
                    let lo = hi / 2.0;
                    acc += x.iter().zip(&w).map(|(&t, &wt)| wt * f(lo + (hi - lo) * t)).sum::<f64>()
                        * (hi - lo);
                    hi = lo;
                }
                acc
            };
            let center = 2.0 * graded(&|z| z.powf(1.0 - 2.0 * s) * (1.0 - z));
            assert!((center - hat_integral_1d_center(s)).abs() < 1e-12);
            let left = graded(&|z| z.powf(1.0 - 2.0 * s) * z);
            let right: f64 = x
                .iter()
                .zip(&w)
                .map(|(&t, &wt)| {
                    let z = 1.0 + t;
                    wt * z.powf(1.0 - 2.0 * s) * (1.0 - t)
                })
                .sum();
            assert!((left + right - hat_integral_1d_neighbor(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn far_weights_are_midpoint_values() {
        let k = UnitKernel::new(2, 0.5, NearFieldPolicy::HatProfile);
        assert_eq!(k.weight([0, 0]), 0.0);
        assert!((k.weight([3, 4]) - 5f64.powi(-3)).abs() < 1e-15);
        assert_eq!(k.weight([-1, 0]), k.weight([0, 1]));
        assert_eq!(k.weight([1, -1]), k.weight([-1, 1]));
    }

    #[test]
    fn row_sum_converges_in_the_box_radius() {
        for dim in [1, 2] {
            let k = UnitKernel::new(dim, 0.4, NearFieldPolicy::HatProfile);
            let coarse = k.row_sum(32);
            let fine = k.row_sum(if dim == 1 { 4096 } else { 256 });
            assert!((coarse - fine).abs() < 1e-4 * fine, "{dim}: {coarse} {fine}");
        }
    }
}
