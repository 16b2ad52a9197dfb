//! Zero-padded FFT convolution with a translation-invariant lattice kernel.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::Real;

pub(crate) struct Convolver<T: Real> {
    len: [usize; 2],
    fwd: [Option<Arc<dyn Fft<T>>>; 2],
    inv: [Option<Arc<dyn Fft<T>>>; 2],
    /// Real spectrum of the kernel on the padded periodic lattice.
    spectrum: Vec<T>,
}

impl<T: Real> Convolver<T> {
    /// `extent` is the bounding box of the signals; `kernel(k)` is queried for
    /// `|k_a| < extent[a]`.
    pub fn new(extent: [usize; 2], kernel: impl Fn([i64; 2]) -> T) -> Self {
        let len = extent.map(|e| if e <= 1 { 1 } else { (2 * e).next_power_of_two() });
        let mut planner = FftPlanner::<T>::new();
        let plan = |p: &mut FftPlanner<T>, n: usize, inverse: bool| {
            (n > 1).then(|| {
                if inverse {
                    p.plan_fft_inverse(n)
                } else {
                    p.plan_fft_forward(n)
                }
            })
        };
        let fwd = [plan(&mut planner, len[0], false), plan(&mut planner, len[1], false)];
        let inv = [plan(&mut planner, len[0], true), plan(&mut planner, len[1], true)];
        let mut conv = Convolver {
            len,
            fwd,
            inv,
            spectrum: Vec::new(),
        };
        let mut buf = vec![Complex::new(T::zero(), T::zero()); len[0] * len[1]];
        let (e0, e1) = (extent[0] as i64, extent[1] as i64);
        for a in -(e0 - 1)..e0 {
            for b in -(e1 - 1)..e1 {
                let i = a.rem_euclid(len[0] as i64) as usize;
                let j = b.rem_euclid(len[1] as i64) as usize;
                buf[i * len[1] + j].re = kernel([a, b]);
            }
        }
        conv.transform(&mut buf, false);
        conv.spectrum = buf.iter().map(|c| c.re).collect();
        conv
    }

    /// Position of bbox-relative coordinates in the padded buffer.
    pub fn slot(&self, c: [usize; 2]) -> usize {
        c[0] * self.len[1] + c[1]
    }

    fn transform(&self, buf: &mut [Complex<T>], inverse: bool) {
        let plans = if inverse { &self.inv } else { &self.fwd };
        let [l0, l1] = self.len;
        if let Some(f) = &plans[1] {
            f.process(buf);
        }
        if let Some(f) = &plans[0] {
            let mut t = vec![Complex::new(T::zero(), T::zero()); buf.len()];
            for i in 0..l0 {
                for j in 0..l1 {
                    t[j * l0 + i] = buf[i * l1 + j];
                }
            }
            f.process(&mut t);
            for i in 0..l0 {
                for j in 0..l1 {
                    buf[i * l1 + j] = t[j * l0 + i];
                }
            }
        }
    }

    /// `out[p] = Σ_q filter(ξ) applied to values placed at `slots``: the
    /// signal is scattered, transformed, multiplied pointwise by
    /// `multiplier(spectrum[ξ])` and gathered back.
    pub fn filter(
        &self,
        slots: &[usize],
        values: &[T],
        out: &mut [T],
        multiplier: impl Fn(T) -> T,
    ) {
        let zero = Complex::new(T::zero(), T::zero());
        let mut buf = vec![zero; self.len[0] * self.len[1]];
        for (&p, &v) in slots.iter().zip(values) {
            buf[p].re = v;
        }
        self.transform(&mut buf, false);
        for (b, &k) in buf.iter_mut().zip(&self.spectrum) {
            *b = *b * multiplier(k);
        }
        self.transform(&mut buf, true);
        let scale = T::one() / T::of_usize(buf.len());
        for (o, &p) in out.iter_mut().zip(slots) {
            *o = buf[p].re * scale;
        }
    }
}
