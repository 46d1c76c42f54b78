//! FFT plumbing shared by physical-space evaluation and the dealiased
//! pseudo-spectral products. Plans are cached per thread, so concurrent
//! workers never share mutable state.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(PlanCache::default());
}

#[derive(Default)]
struct PlanCache {
    planner: Option<FftPlanner<f64>>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

impl PlanCache {
    fn plan(&mut self, len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
        let planner = self.planner.get_or_insert_with(FftPlanner::new);
        let map = match direction {
            FftDirection::Forward => &mut self.forward,
            FftDirection::Inverse => &mut self.inverse,
        };
        map.entry(len)
            .or_insert_with(|| match direction {
                FftDirection::Forward => planner.plan_fft_forward(len),
                FftDirection::Inverse => planner.plan_fft_inverse(len),
            })
            .clone()
    }
}

/// Unnormalized inverse DFT: `buf[j] ← Σₖ buf[k] e^{+2πi jk/M}`.
pub fn inverse_in_place(buf: &mut [Complex64]) {
    let plan = PLANS.with(|p| p.borrow_mut().plan(buf.len(), FftDirection::Inverse));
    plan.process(buf);
}

/// Unnormalized forward DFT: `buf[k] ← Σⱼ buf[j] e^{-2πi jk/M}`.
pub fn forward_in_place(buf: &mut [Complex64]) {
    let plan = PLANS.with(|p| p.borrow_mut().plan(buf.len(), FftDirection::Forward));
    plan.process(buf);
}

/// Smallest 5-smooth integer `≥ target`; keeps FFT sizes fast without
/// hitting rustfft's Bluestein fallback.
pub fn fast_grid_size(target: usize) -> usize {
    let mut m = target.max(1);
    loop {
        let mut r = m;
        for p in [2usize, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_grid_sizes_are_5_smooth() {
        assert_eq!(fast_grid_size(1), 1);
        assert_eq!(fast_grid_size(97), 100);
        assert_eq!(fast_grid_size(386), 400);
        assert_eq!(fast_grid_size(400), 400);
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let original: Vec<Complex64> = (0..12)
            .map(|k| Complex64::new(k as f64 * 0.3 - 1.0, (k as f64).sin()))
            .collect();
        let mut buf = original.clone();
        forward_in_place(&mut buf);
        inverse_in_place(&mut buf);
        for (got, want) in buf.iter().zip(&original) {
            let scaled = got / 12.0;
            assert!((scaled - want).norm() < 1e-13);
        }
    }
}
