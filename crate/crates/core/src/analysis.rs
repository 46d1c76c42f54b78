//! Verification harness: each estimate, identity, and symmetry the solver
//! construction relies on becomes an executable check producing a
//! [`VerificationReport`].
//!
//! None of the inequality constants are quantified in closed form, so checks
//! either compare against the one explicit constant available (the `1/√2`
//! propagator bound), demand exact structural properties (support
//! monotonicity, mode-wise identities), or measure empirical constants and
//! require them to be stable under refinement.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::commutator::{commutator_direct, commutator_fast};
use crate::evolution::{
    self, picard_solve, simulate, EvolutionError, SolverConfig, Termination, Trajectory,
};
use crate::field::SpectralField;
use crate::norms::{hs_norm, hs_norm_sq};
use crate::report::VerificationReport;

// ---------------------------------------------------------------------------
// Random trigonometric-polynomial ensembles

/// Spectral envelope for random test fields. Three profiles stress different
/// regimes of the commutator estimate; a single ensemble can hide constant
/// growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandProfile {
    /// Unit weight on every mode up to the band cap.
    Flat,
    /// `|n|^{-2}` decay.
    InverseSquare,
    /// Only the top half of the band.
    HighBand,
}

pub const ALL_PROFILES: [BandProfile; 3] = [
    BandProfile::Flat,
    BandProfile::InverseSquare,
    BandProfile::HighBand,
];

/// Hermitian complex-Gaussian field supported on modes `1..=band_cap`,
/// embedded at the given cutoff.
pub fn random_field(
    rng: &mut ChaCha8Rng,
    cutoff: usize,
    band_cap: usize,
    profile: BandProfile,
) -> SpectralField {
    assert!(band_cap <= cutoff && band_cap >= 1);
    random_band_field(rng, cutoff, 1, band_cap, profile)
}

/// Hermitian complex-Gaussian field supported on modes `lo..=hi` with the
/// profile weights applied relative to that band.
pub fn random_band_field(
    rng: &mut ChaCha8Rng,
    cutoff: usize,
    lo: usize,
    hi: usize,
    profile: BandProfile,
) -> SpectralField {
    assert!(1 <= lo && lo <= hi && hi <= cutoff);
    let mut pairs = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let w = match profile {
            BandProfile::Flat => 1.0,
            BandProfile::InverseSquare => {
                let r = n as f64 / lo as f64;
                1.0 / (r * r)
            }
            BandProfile::HighBand => {
                if 2 * n > lo + hi {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        pairs.push((
            n as i64,
            Complex64::new(re, im) * (w / std::f64::consts::SQRT_2),
        ));
    }
    SpectralField::from_modes(&pairs, cutoff).expect("generated modes are valid")
}

// ---------------------------------------------------------------------------
// Propagator bound (the one explicit constant)

/// 16-point Gauss–Legendre nodes and weights on `[-1, 1]`, computed once by
/// Newton iteration on the Legendre polynomial.
fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    TABLE.get_or_init(|| {
        const N: usize = 16;
        let mut table = [(0.0, 0.0); N];
        for (i, slot) in table.iter_mut().enumerate() {
            // Chebyshev-angle initial guess, then Newton on P_N.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(N, x);
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(N, x);
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        table
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gauss_segment(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    gauss_legendre_16()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// `‖e^{-·Λ³}f₀‖_{L⁴_T Ḣ^{9/4}}` by Gauss–Legendre quadrature on dyadically
/// graded time intervals: refined toward `t = 0` to resolve the fastest mode
/// and truncated where the integrand falls below `1e-16` of its peak (the
/// neglected analytic tail is below that relative size).
pub fn semigroup_l4t_h94(f0: &SpectralField, horizon: f64) -> f64 {
    let weights: Vec<(f64, f64)> = (1..=f0.cutoff() as i64)
        .filter_map(|n| {
            let w = 2.0 * (n as f64).powf(4.5) * f0.coeff(n).norm_sqr();
            (w > 0.0).then_some((2.0 * (n as f64).powi(3), w))
        })
        .collect();
    if weights.is_empty() || horizon <= 0.0 {
        return 0.0;
    }
    let integrand = |t: f64| -> f64 {
        let s: f64 = weights.iter().map(|&(rate, w)| w * (-rate * t).exp()).sum();
        s * s
    };
    let slowest = weights.first().map(|&(r, _)| r).unwrap();
    let fastest = weights.last().map(|&(r, _)| r).unwrap();
    // The integrand decays at least as fast as e^{-2·slowest·t}, so it sits
    // below 1e-16 of its peak beyond 37/(2·slowest).
    let t_end = (37.0 / (2.0 * slowest)).min(horizon);
    let mut a = (1e-2 / (2.0 * fastest)).min(t_end / 2.0);

    let mut integral = gauss_segment(&integrand, 0.0, a);
    while a < t_end {
        let b = (2.0 * a).min(t_end);
        integral += gauss_segment(&integrand, a, b);
        a = b;
    }
    integral.powf(0.25)
}

/// Checks `‖e^{-·Λ³}f₀‖_{L⁴_T Ḣ^{9/4}} ≤ (1/√2)‖f₀‖_{3/2}`. The constant
/// `1/√2` is exact; for a single active frequency the bound is attained.
pub fn check_propagator_bound(f0: &SpectralField, horizon: f64) -> VerificationReport {
    let left = semigroup_l4t_h94(f0, horizon);
    let right = hs_norm(f0, 1.5) / std::f64::consts::SQRT_2;
    VerificationReport::upper_bound(
        "propagator_bound",
        left,
        right,
        1e-6,
        format!(
            "T = {horizon:.3e}, ratio = {:.6}",
            if right > 0.0 { left / right } else { 1.0 }
        ),
    )
}

// ---------------------------------------------------------------------------
// Commutator estimate probes

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeParams {
    pub s: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub sample_count: usize,
    pub cutoff: usize,
    pub seed: u64,
}

/// Empirical supremum over random fields of
/// `‖Λ^s [H,φ]Λ^σψ‖ / (‖φ‖_{s+1/4+α} ‖ψ‖_{σ+1/4-α})`, all norms in the
/// `Ḣ` scale. Finiteness is the pass condition here; stability under
/// refinement is checked by [`probe_commutator_stability`].
pub fn probe_commutator_constant(p: &ProbeParams) -> VerificationReport {
    let max_ratio = probe_max_ratio(p);
    VerificationReport::upper_bound(
        format!("commutator_constant_s{}_sig{}_a{}", p.s, p.sigma, p.alpha),
        max_ratio,
        f64::INFINITY,
        0.0,
        format!(
            "N = {}, samples = {}, seed = {}",
            p.cutoff, p.sample_count, p.seed
        ),
    )
}

/// One probe sample draws a dyadic frequency band, a profile shape applied
/// within it, and Gaussian coefficients, all from a per-index seed. Samples
/// whose band exceeds the cutoff are skipped, so refining the cutoff replays
/// the coarse run's samples exactly and only adds higher bands — whose
/// ratios are suppressed by the estimate's scaling.
///
/// A raw Gaussian draw sits far below the ratio's supremum and its running
/// max climbs for thousands of samples, so each draw is sharpened by
/// alternating maximization: for fixed ψ the ratio is a top singular value
/// over φ (the commutator is bilinear), computed by power iteration on the
/// band-restricted kernel, and vice versa. The reported supremum is then a
/// max over local maximizers and saturates at modest sample counts.
fn probe_max_ratio(p: &ProbeParams) -> f64 {
    const BAND_UNIVERSE: usize = 8;
    let samples: Vec<usize> = (0..p.sample_count).collect();
    samples
        .par_iter()
        .map(|&i| {
            let octave = i % BAND_UNIVERSE;
            let profile = ALL_PROFILES[(i / BAND_UNIVERSE) % ALL_PROFILES.len()];
            let lo = 1usize << octave;
            let hi = 2 * lo;
            if hi > p.cutoff {
                return 0.0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(
                p.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let phi = random_band_field(&mut rng, p.cutoff, lo, hi, profile);
            let psi = random_band_field(&mut rng, p.cutoff, lo, hi, profile);
            probe::polished_ratio(p, &phi, &psi, lo, hi)
        })
        .reduce(|| 0.0, f64::max)
}

/// Band-restricted kernel algebra behind the commutator-constant probe.
mod probe {
    use super::ProbeParams;
    use crate::field::SpectralField;
    use num_complex::Complex64;

    /// Signed modes of a band, `-hi..=-lo` then `lo..=hi`.
    fn band_modes(lo: usize, hi: usize) -> Vec<i64> {
        let mut modes: Vec<i64> = (-(hi as i64)..=-(lo as i64)).collect();
        modes.extend(lo as i64..=hi as i64);
        modes
    }

    fn sign_factor(n: i64, k: i64) -> f64 {
        (-n.signum() + (n - k).signum()) as f64
    }

    /// Kernel of `φ ↦ Λ^s [H,φ]Λ^σψ` over band-supported φ:
    /// `out(n) = Σ_k K(n,k) φ̂(k)` with `K(n,k) = i·S(n,k)|n-k|^σ ψ̂(n-k)`.
    fn kernel_in_phi(
        psi: &SpectralField,
        sigma: f64,
        cutoff: usize,
        phi_modes: &[i64],
    ) -> Vec<Vec<Complex64>> {
        let mut rows = Vec::with_capacity(2 * cutoff + 1);
        for n in -(cutoff as i64)..=cutoff as i64 {
            let mut row = Vec::with_capacity(phi_modes.len());
            for &k in phi_modes {
                let s = sign_factor(n, k);
                let c = if n == 0 || s == 0.0 {
                    Complex64::ZERO
                } else {
                    let m = n - k;
                    let w = ((m.unsigned_abs()) as f64).powf(sigma) * s;
                    let p = psi.coeff(m) * w;
                    Complex64::new(-p.im, p.re)
                };
                row.push(c);
            }
            rows.push(row);
        }
        rows
    }

    /// Kernel of `ψ ↦ Λ^s [H,φ]Λ^σψ` over band-supported ψ:
    /// `K'(n,m) = i·S(n, n-m)|m|^σ φ̂(n-m)`.
    fn kernel_in_psi(
        phi: &SpectralField,
        sigma: f64,
        cutoff: usize,
        psi_modes: &[i64],
    ) -> Vec<Vec<Complex64>> {
        let mut rows = Vec::with_capacity(2 * cutoff + 1);
        for n in -(cutoff as i64)..=cutoff as i64 {
            let mut row = Vec::with_capacity(psi_modes.len());
            for &m in psi_modes {
                let s = sign_factor(n, n - m);
                let c = if n == 0 || s == 0.0 {
                    Complex64::ZERO
                } else {
                    let w = (m.unsigned_abs() as f64).powf(sigma) * s;
                    let p = phi.coeff(n - m) * w;
                    Complex64::new(-p.im, p.re)
                };
                row.push(c);
            }
            rows.push(row);
        }
        rows
    }

    /// Largest singular value of `A = W_out · K · W_in⁻¹` by power iteration
    /// on `A*A`, warm-started from `start` (an unweighted input vector).
    /// Returns the singular value and the maximizing unweighted input.
    fn top_singular(
        kernel: &[Vec<Complex64>],
        out_weight: &[f64],
        in_weight: &[f64],
        start: &[Complex64],
    ) -> (f64, Vec<Complex64>) {
        let cols = in_weight.len();
        let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        // x lives in the weighted space: x = W_in · input.
        let mut x: Vec<Complex64> = start.iter().zip(in_weight).map(|(v, w)| v * *w).collect();
        let n0 = norm(&x);
        if n0 == 0.0 {
            return (0.0, vec![Complex64::ZERO; cols]);
        }
        x.iter_mut().for_each(|c| *c /= n0);

        let mut sigma = 0.0;
        let mut y = vec![Complex64::ZERO; kernel.len()];
        for _ in 0..80 {
            // y = A x = W_out · K · W_in⁻¹ x
            for (yi, (row, w)) in y.iter_mut().zip(kernel.iter().zip(out_weight)) {
                let mut acc = Complex64::ZERO;
                for ((k, xv), wi) in row.iter().zip(&x).zip(in_weight) {
                    acc += k * (xv / *wi);
                }
                *yi = acc * *w;
            }
            // z = A* y
            let mut z = vec![Complex64::ZERO; cols];
            for (row, (yv, w)) in kernel.iter().zip(y.iter().zip(out_weight)) {
                let yw = yv * *w;
                for (zj, kv) in z.iter_mut().zip(row) {
                    *zj += kv.conj() * yw;
                }
            }
            for (zj, w) in z.iter_mut().zip(in_weight) {
                *zj /= *w;
            }
            let zn = norm(&z);
            if zn == 0.0 {
                return (0.0, vec![Complex64::ZERO; cols]);
            }
            let next = zn.sqrt();
            let converged = (next - sigma).abs() <= 1e-9 * next.max(1e-300);
            sigma = next;
            x = z;
            x.iter_mut().for_each(|c| *c /= zn);
            if converged {
                break;
            }
        }
        let maximizer: Vec<Complex64> = x.iter().zip(in_weight).map(|(v, w)| v / *w).collect();
        (sigma, maximizer)
    }

    fn weights(modes: &[i64], exponent: f64) -> Vec<f64> {
        modes
            .iter()
            .map(|&m| (m.unsigned_abs() as f64).powf(exponent))
            .collect()
    }

    fn gather(field: &SpectralField, modes: &[i64]) -> Vec<Complex64> {
        modes.iter().map(|&m| field.coeff(m)).collect()
    }

    /// Project the iterate back onto Hermitian fields. The singular space is
    /// invariant under `v ↦ conj(v(-·))`, but the iterate carries a free
    /// complex phase; of the two symmetric combinations `v + Jv` and
    /// `i(v - Jv)` at least one has norm ≥ √2·‖v‖, so pick the longer to
    /// avoid destructive collapse.
    fn scatter(values: &[Complex64], modes: &[i64], cutoff: usize) -> SpectralField {
        let coeff = |m: i64| -> Complex64 {
            modes
                .iter()
                .position(|&mm| mm == m)
                .map(|i| values[i])
                .unwrap_or_default()
        };
        let mut plus = Vec::new();
        let mut rot = Vec::new();
        let mut norm_plus = 0.0;
        let mut norm_rot = 0.0;
        for &m in modes.iter().filter(|&&m| m > 0) {
            let v = coeff(m);
            let jv = coeff(-m).conj();
            let a = (v + jv) * 0.5;
            let i_v = Complex64::new(0.0, 1.0) * v;
            let j_iv = (Complex64::new(0.0, 1.0) * coeff(-m)).conj();
            let b = (i_v + j_iv) * 0.5;
            norm_plus += a.norm_sqr();
            norm_rot += b.norm_sqr();
            plus.push((m, a));
            rot.push((m, b));
        }
        let chosen = if norm_plus >= norm_rot { plus } else { rot };
        SpectralField::from_modes(&chosen, cutoff).expect("band modes valid")
    }

    /// Alternating maximization of the ratio over the band, starting from
    /// the random draw. Each half-step solves its singular-value problem
    /// exactly, so the result is a local maximum of the ratio.
    pub(super) fn polished_ratio(
        p: &ProbeParams,
        phi0: &SpectralField,
        psi0: &SpectralField,
        lo: usize,
        hi: usize,
    ) -> f64 {
        let cutoff = phi0.cutoff();
        let modes = band_modes(lo, hi);
        let out_modes: Vec<i64> = (-(cutoff as i64)..=cutoff as i64).collect();
        let w_out = weights(&out_modes, p.s);
        let w_phi = weights(&modes, p.s + 0.25 + p.alpha);
        let w_psi = weights(&modes, p.sigma + 0.25 - p.alpha);

        let mut phi = phi0.clone();
        let mut psi = psi0.clone();
        let mut ratio = 0.0;
        for _ in 0..6 {
            let k_phi = kernel_in_phi(&psi, p.sigma, cutoff, &modes);
            let psi_norm = crate::norms::hs_norm(&psi, p.sigma + 0.25 - p.alpha);
            if psi_norm == 0.0 {
                return ratio;
            }
            let (sig_phi, phi_vec) = top_singular(&k_phi, &w_out, &w_phi, &gather(&phi, &modes));
            if sig_phi == 0.0 {
                return ratio;
            }
            phi = scatter(&phi_vec, &modes, cutoff);

            let k_psi = kernel_in_psi(&phi, p.sigma, cutoff, &modes);
            let phi_norm = crate::norms::hs_norm(&phi, p.s + 0.25 + p.alpha);
            if phi_norm == 0.0 {
                return ratio;
            }
            let (sig_psi, psi_vec) = top_singular(&k_psi, &w_out, &w_psi, &gather(&psi, &modes));
            psi = scatter(&psi_vec, &modes, cutoff);

            ratio = ratio.max(sig_phi / psi_norm);
            let next = sig_psi / phi_norm;
            if next <= ratio * (1.0 + 1e-4) {
                return ratio.max(next);
            }
            ratio = next;
        }
        ratio
    }
}

/// Doubles both the cutoff and the sample count and requires the empirical
/// supremum to move by at most 10%.
pub fn probe_commutator_stability(p: &ProbeParams) -> VerificationReport {
    let base = probe_max_ratio(p);
    let refined = probe_max_ratio(&ProbeParams {
        cutoff: 2 * p.cutoff,
        sample_count: 2 * p.sample_count,
        ..*p
    });
    let drift = if base > 0.0 {
        (refined - base).abs() / base
    } else {
        f64::INFINITY
    };
    VerificationReport::upper_bound(
        format!("commutator_stability_s{}_sig{}_a{}", p.s, p.sigma, p.alpha),
        drift,
        0.10,
        0.0,
        format!(
            "base = {base:.6e} (N = {}), refined = {refined:.6e} (N = {})",
            p.cutoff,
            2 * p.cutoff
        ),
    )
}

/// Empirical constant of the forced-solve bound
/// `‖U(φ,ψ)‖_{L⁴_T Ḣ^{9/4}} ≤ C ‖φ‖_{L⁴_T Ḣ^{9/4}} ‖ψ‖_{L⁴_T Ḣ^{9/4}}`,
/// measured on semigroup orbits of random data. No closed-form `C` is
/// available; the report logs the largest observed ratio and passes if it is
/// finite.
pub fn probe_forcing_bound(
    samples: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<VerificationReport, EvolutionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let linear = SolverConfig {
        linear_only: true,
        ..config.clone()
    };
    let cutoff = config.cutoff;
    let mut max_ratio: f64 = 0.0;
    for i in 0..samples {
        let profile = ALL_PROFILES[i % ALL_PROFILES.len()];
        let phi0 = random_field(&mut rng, cutoff, cutoff, profile);
        let psi0 = random_field(&mut rng, cutoff, cutoff, profile);
        let phi = simulate(&phi0, &linear)?;
        let psi = simulate(&psi0, &linear)?;
        let u = evolution::forced_linear_solve(&phi, &psi)?;
        let num = u.trace.lpt_hs_norm(4.0, 2.25)?;
        let den = phi.trace.lpt_hs_norm(4.0, 2.25)? * psi.trace.lpt_hs_norm(4.0, 2.25)?;
        if den > 0.0 {
            max_ratio = max_ratio.max(num / den);
        }
    }
    Ok(VerificationReport::upper_bound(
        "forcing_bound_constant",
        max_ratio,
        f64::INFINITY,
        0.0,
        format!("N = {cutoff}, samples = {samples}, seed = {seed}"),
    ))
}

// ---------------------------------------------------------------------------
// Support monotonicity

/// For every output mode `n ≠ 0` of the direct commutator, zeroing `φ̂(k)`
/// for all `|k| ≤ |n|` must leave `out̂(n)` unchanged bit-for-bit: the
/// output draws only on `|k| > |n|`.
pub fn check_support_monotonicity(
    phi: &SpectralField,
    psi: &SpectralField,
    sigma: f64,
) -> VerificationReport {
    let reference = commutator_direct(phi, psi, sigma).expect("common cutoff");
    let cutoff = reference.cutoff();
    let mut violations = 0usize;
    for n in 1..=cutoff as i64 {
        let masked = phi.band_select(n as f64, true);
        let redone = commutator_direct(&masked, psi, sigma).expect("common cutoff");
        let (a, b) = (reference.coeff(n), redone.coeff(n));
        if a.re.to_bits() != b.re.to_bits() || a.im.to_bits() != b.im.to_bits() {
            violations += 1;
        }
    }
    VerificationReport::identity(
        "support_monotonicity",
        violations as f64,
        0.0,
        0.0,
        format!("N = {cutoff}, sigma = {sigma}"),
    )
}

// ---------------------------------------------------------------------------
// Energy identity

/// Max residual over interior recorded times of
/// `½ d/dt ‖f‖_s² + ‖f‖_{s+3/2}² - ⟨Λ^s ∂ₓ[H,f]Λ³f, Λ^s f⟩`,
/// with `d/dt` by centered differences on the recorded grid and the pairing
/// evaluated spectrally.
pub fn energy_identity_residual(traj: &Trajectory, s: f64) -> Result<f64, EvolutionError> {
    let times = traj.times();
    if times.len() < 3 {
        return Err(EvolutionError::InsufficientSnapshots(times.len(), 3));
    }
    let snaps = traj.snapshots();
    let energy: Vec<f64> = snaps.iter().map(|f| hs_norm_sq(f, s)).collect();
    let mut worst = 0.0_f64;
    for i in 1..times.len() - 1 {
        let dissipation = hs_norm_sq(&snaps[i], s + 1.5);
        let pairing = if traj.config.linear_only {
            0.0
        } else {
            let g = crate::commutator::nonlinearity(&snaps[i])?;
            let mut acc = 0.0;
            for n in 1..=snaps[i].cutoff() as i64 {
                let w = (n as f64).powf(2.0 * s);
                acc += 2.0 * w * (g.coeff(n) * snaps[i].coeff(n).conj()).re;
            }
            acc
        };
        let de_dt = (energy[i + 1] - energy[i - 1]) / (times[i + 1] - times[i - 1]);
        worst = worst.max((0.5 * de_dt + dissipation - pairing).abs());
    }
    Ok(worst)
}

pub fn check_energy_identity(
    traj: &Trajectory,
    s: f64,
    tolerance: f64,
) -> Result<VerificationReport, EvolutionError> {
    let residual = energy_identity_residual(traj, s)?;
    Ok(VerificationReport::identity(
        format!("energy_identity_s{s}"),
        residual,
        0.0,
        tolerance,
        format!(
            "dt = {:.3e}, points = {}",
            traj.config.dt,
            traj.times().len()
        ),
    ))
}

/// Observed convergence order of the energy-identity residual under one dt
/// halving; the centered-difference derivative makes it second order.
pub fn energy_identity_order(
    f0: &SpectralField,
    config: &SolverConfig,
    s: f64,
) -> Result<VerificationReport, EvolutionError> {
    let coarse = simulate(f0, config)?;
    let fine = simulate(
        f0,
        &SolverConfig {
            dt: config.dt / 2.0,
            ..config.clone()
        },
    )?;
    let r_coarse = energy_identity_residual(&coarse, s)?;
    let r_fine = energy_identity_residual(&fine, s)?;
    let order = (r_coarse / r_fine).log2();
    Ok(VerificationReport::identity(
        format!("energy_identity_order_s{s}"),
        order,
        2.0,
        0.3,
        format!(
            "residuals {r_coarse:.3e} -> {r_fine:.3e} at dt = {:.1e}",
            config.dt
        ),
    ))
}

// ---------------------------------------------------------------------------
// Scaling family

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFamilyResult {
    /// `(dt, Ḣ^{3/2} discrepancy)` per refinement rung, coarsest first.
    pub ladder: Vec<(f64, f64)>,
    pub discrepancy_report: VerificationReport,
    pub order_report: VerificationReport,
}

/// Two-run comparison of the symmetry `f ↦ λ⁻¹f(λx, λ³t)`: run A evolves
/// `f₀` to `t_final` at each ladder step, run B evolves the rescaled datum to
/// `t_final/λ³` on a fixed fine reference grid, and the rescaled run-A state
/// is compared against B in `Ḣ^{3/2}`. The discrepancy is dominated by run
/// A's time-discretization error and must shrink at the integrator's order.
pub fn check_scaling_family(
    f0: &SpectralField,
    lambda: u32,
    t_final: f64,
    config: &SolverConfig,
    dt_ladder: &[f64],
    finest_tolerance: f64,
) -> Result<ScalingFamilyResult, EvolutionError> {
    assert!(lambda >= 1 && !dt_ladder.is_empty());
    let lam3 = f64::from(lambda).powi(3);
    let scaled_cutoff = config.cutoff * lambda as usize;
    let dt_min = dt_ladder.iter().copied().fold(f64::INFINITY, f64::min);

    let reference_config = SolverConfig {
        cutoff: scaled_cutoff,
        dt: dt_min / lam3 / 2.0,
        t_final: t_final / lam3,
        record_every: usize::MAX,
        ..config.clone()
    };
    let scaled_datum = f0.scale(lambda, scaled_cutoff)?;
    let reference = simulate(&scaled_datum, &reference_config)?;
    let b_final = reference.final_field();

    let mut ladder = Vec::with_capacity(dt_ladder.len());
    for &dt in dt_ladder {
        let a_config = SolverConfig {
            dt,
            t_final,
            record_every: usize::MAX,
            ..config.clone()
        };
        let a = simulate(f0, &a_config)?;
        let rescaled = a.final_field().scale(lambda, scaled_cutoff)?;
        ladder.push((dt, hs_norm(&rescaled.sub(b_final), 1.5)));
    }
    ladder.sort_by(|x, y| y.0.total_cmp(&x.0));

    let finest = ladder.last().expect("nonempty ladder").1;
    let discrepancy_report = VerificationReport::upper_bound(
        "scaling_family_discrepancy",
        finest,
        finest_tolerance,
        0.0,
        format!("lambda = {lambda}, dt = {:.3e}", ladder.last().unwrap().0),
    );

    // Observed order from consecutive rungs that sit above the rounding
    // floor of the comparison.
    let floor = 1e-13 * hs_norm(f0, 1.5).max(1e-3);
    let mut orders = Vec::new();
    for w in ladder.windows(2) {
        let ((dt0, d0), (dt1, d1)) = (w[0], w[1]);
        if d0 > floor && d1 > floor {
            orders.push((d0 / d1).ln() / (dt0 / dt1).ln());
        }
    }
    let observed = if orders.is_empty() {
        f64::NAN
    } else {
        orders.iter().sum::<f64>() / orders.len() as f64
    };
    let order_report = VerificationReport::lower_bound(
        "scaling_family_order",
        observed,
        3.7,
        0.0,
        format!("ladder = {ladder:?}"),
    );

    Ok(ScalingFamilyResult {
        ladder,
        discrepancy_report,
        order_report,
    })
}

// ---------------------------------------------------------------------------
// Frequency split and existence time

/// Exact partition of a datum at frequency `rho`: `high` carries the modes
/// `|n| > rho`, `low` the rest, and `high + low` reconstructs the input.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub rho: f64,
    pub high: SpectralField,
    pub low: SpectralField,
}

pub fn frequency_split(f0: &SpectralField, rho: f64) -> SplitSpec {
    assert!(rho > 0.0, "split frequency must be positive");
    SplitSpec {
        rho,
        high: f0.band_select(rho, true),
        low: f0.band_select(rho, false),
    }
}

/// Largest dyadic amplitude at which the Picard iteration contracts with
/// factor ≤ 1/2 on `T = 1` for the flat two-mode profile, reported as its
/// `Ḣ^{3/2}` norm. This is the operational stand-in for the
/// (non-constructive) smallness level.
pub fn calibrate_epsilon_work(config: &SolverConfig) -> f64 {
    let mut amplitude = 4.0;
    for _ in 0..24 {
        let f0 = SpectralField::from_modes(
            &[
                (1, Complex64::new(amplitude / 2.0, 0.0)),
                (2, Complex64::new(amplitude / 2.0, 0.0)),
            ],
            config.cutoff,
        )
        .expect("profile modes valid");
        if let Ok((_, diag)) = picard_solve(&f0, 1.0_f64.min(config.t_final), 1e-9, 30, config) {
            if diag.contraction_factors.iter().all(|&q| q <= 0.5) {
                return hs_norm(&f0, 1.5);
            }
        }
        amplitude /= 2.0;
    }
    0.0
}

/// Certified `(ρ, T)` for a datum: the smallest dyadic `ρ` whose
/// high-frequency part is below `margin · ε_work`, then the largest
/// `T = c/ρ³` (halving `c` from 1, floored at `1e-6`) at which the Picard
/// iteration contracts. `T` is capped at the configured horizon.
pub fn existence_time(
    f0: &SpectralField,
    margin: f64,
    config: &SolverConfig,
    eps_work: Option<f64>,
) -> Result<(f64, f64, VerificationReport), EvolutionError> {
    assert!(margin > 0.0 && margin < 1.0);
    let eps = eps_work.unwrap_or_else(|| calibrate_epsilon_work(config));
    let target = margin * eps;

    let mut rho = 1.0_f64;
    while rho < config.cutoff as f64 {
        if hs_norm(&f0.band_select(rho, true), 1.5) <= target {
            break;
        }
        rho *= 2.0;
    }

    let t_min = 1e-6;
    let mut horizon = (1.0 / rho.powi(3)).min(config.t_final);
    loop {
        match picard_solve(f0, horizon, 1e-9, 30, config) {
            Ok((_, diag)) => {
                let worst = diag.contraction_factors.iter().copied().fold(0.0, f64::max);
                let report = VerificationReport::upper_bound(
                    "existence_time_contraction",
                    worst,
                    1.0,
                    0.0,
                    format!(
                        "rho = {rho}, T = {horizon:.3e}, eps_work = {eps:.3e}, margin = {margin}"
                    ),
                );
                return Ok((rho, horizon, report));
            }
            Err(EvolutionError::NonContraction { .. }) if horizon / 2.0 >= t_min => {
                horizon /= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
}

// ---------------------------------------------------------------------------
// Smallness sweep

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub termination: Termination,
    pub final_h32: f64,
    pub max_h32: f64,
    /// Ḣ^{3/2} nonincreasing at every recorded step and run completed.
    pub decays: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `(largest decaying amplitude, smallest non-decaying amplitude)`;
    /// `None` when every row decays.
    pub bracket: Option<(f64, f64)>,
}

/// Scales the profile by each amplitude, runs the solver, and records
/// decay/no-decay per row plus the bracket where monotone decay first fails.
/// Rows are independent and run on the worker pool; results merge in input
/// order.
pub fn smallness_sweep(
    profile: &SpectralField,
    amplitudes: &[f64],
    t_final: f64,
    config: &SolverConfig,
) -> Result<SweepTable, EvolutionError> {
    if amplitudes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvolutionError::InvalidConfig {
            field: "sweep_amplitudes",
            message: "amplitudes must be strictly increasing".into(),
        });
    }
    let run_config = SolverConfig {
        t_final,
        ..config.clone()
    };
    let rows: Result<Vec<SweepRow>, EvolutionError> = amplitudes
        .par_iter()
        .map(|&amplitude| {
            let traj = simulate(&profile.scalar_mul(amplitude), &run_config)?;
            let h32 = traj.trace.norm_series(1.5)?;
            let monotone = h32.windows(2).all(|w| w[1] <= w[0]);
            Ok(SweepRow {
                amplitude,
                termination: traj.termination,
                final_h32: *h32.last().unwrap(),
                max_h32: h32.iter().copied().fold(0.0, f64::max),
                decays: monotone && traj.termination == Termination::Completed,
            })
        })
        .collect();
    let rows = rows?;
    let first_bad = rows.iter().position(|r| !r.decays);
    let bracket = first_bad.map(|i| {
        let lo = if i > 0 { rows[i - 1].amplitude } else { 0.0 };
        (lo, rows[i].amplitude)
    });
    Ok(SweepTable { rows, bracket })
}

// ---------------------------------------------------------------------------
// Cross-validation helpers

/// `L⁴_T Ḣ^{9/4}` distance between two trajectories on a shared grid.
pub fn trajectory_l4t_h94_distance(a: &Trajectory, b: &Trajectory) -> Result<f64, EvolutionError> {
    if a.times() != b.times() {
        return Err(EvolutionError::GridMismatch);
    }
    let mut integral = 0.0;
    let mut prev = 0.0;
    for (i, t) in a.times().iter().enumerate() {
        let d = hs_norm(&a.snapshots()[i].sub(&b.snapshots()[i]), 2.25).powi(4);
        if i > 0 {
            integral += 0.5 * (t - a.times()[i - 1]) * (prev + d);
        }
        prev = d;
    }
    Ok(integral.powf(0.25))
}

/// Observed temporal order of the stepper by Richardson refinement against a
/// `dt/8` reference run: `log₂` of the error ratio between `dt` and `dt/2`.
pub fn temporal_order(
    f0: &SpectralField,
    config: &SolverConfig,
    dt: f64,
) -> Result<VerificationReport, EvolutionError> {
    // Snap the horizon to a whole number of coarse steps so every run ends
    // at exactly the same time.
    let t_final = (config.t_final / dt).round().max(1.0) * dt;
    let run = |dt: f64| -> Result<SpectralField, EvolutionError> {
        let cfg = SolverConfig {
            dt,
            t_final,
            record_every: usize::MAX,
            ..config.clone()
        };
        Ok(simulate(f0, &cfg)?.final_field().clone())
    };
    let reference = run(dt / 8.0)?;
    let e_coarse = hs_norm(&run(dt)?.sub(&reference), 1.5);
    let e_fine = hs_norm(&run(dt / 2.0)?.sub(&reference), 1.5);
    let order = (e_coarse / e_fine).log2();
    Ok(VerificationReport::identity(
        "temporal_order",
        order,
        4.0,
        0.3,
        format!("errors {e_coarse:.3e} -> {e_fine:.3e} at dt = {dt:.1e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_mode(amplitude: f64, cutoff: usize) -> SpectralField {
        SpectralField::from_modes(
            &[
                (1, Complex64::new(amplitude / 2.0, 0.0)),
                (2, Complex64::new(amplitude / 2.0, 0.0)),
            ],
            cutoff,
        )
        .unwrap()
    }

    #[test]
    fn propagator_bound_zero_datum() {
        let report = check_propagator_bound(&SpectralField::zero(8), f64::INFINITY);
        assert!(report.passed);
        assert_eq!(report.measured, 0.0);
    }

    #[test]
    fn propagator_bound_single_mode_saturates() {
        // Single active frequency: equality. Closed form for cos(nx):
        // left = right = n^{3/2}/2.
        for n in [1u32, 2, 5] {
            let f0 = SpectralField::cosine(n, 1.0, 8).unwrap();
            let report = check_propagator_bound(&f0, f64::INFINITY);
            assert!(report.passed, "{report}");
            let exact = f64::from(n).powf(1.5) / 2.0;
            assert!(
                (report.measured - exact).abs() <= 1e-3 * exact,
                "mode {n}: measured {} vs exact {exact}",
                report.measured
            );
            assert!(
                (report.bound_or_target - exact).abs() <= 1e-12 * exact,
                "mode {n}: bound {} vs exact {exact}",
                report.bound_or_target
            );
        }
    }

    #[test]
    fn propagator_bound_strict_for_multimode() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let f0 = random_field(&mut rng, 16, 16, BandProfile::Flat);
            let report = check_propagator_bound(&f0, f64::INFINITY);
            assert!(report.passed, "{report}");
            assert!(report.measured < report.bound_or_target, "{report}");
        }
    }

    #[test]
    fn support_monotonicity_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sigma in [0.0, 3.0] {
            let phi = random_field(&mut rng, 16, 16, BandProfile::Flat);
            let psi = random_field(&mut rng, 16, 16, BandProfile::Flat);
            let report = check_support_monotonicity(&phi, &psi, sigma);
            assert!(report.passed, "{report}");
        }
    }

    #[test]
    fn support_monotonicity_vacuous_on_zero_psi() {
        let phi = SpectralField::cosine(5, 1.0, 8).unwrap();
        let report = check_support_monotonicity(&phi, &SpectralField::zero(8), 3.0);
        assert!(report.passed);
    }

    #[test]
    fn single_high_mode_phi_limits_output_support() {
        // φ at |k| = 5 only: output supported in 0 < |n| < 5.
        let phi = SpectralField::cosine(5, 1.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = random_field(&mut rng, 16, 16, BandProfile::Flat);
        let out = commutator_direct(&phi, &psi, 3.0).unwrap();
        for n in 5..=16i64 {
            assert_eq!(out.coeff(n), Complex64::ZERO, "mode {n}");
        }
    }

    #[test]
    fn frequency_split_cases() {
        let f = SpectralField::from_modes(
            &[(1, Complex64::new(0.5, 0.0)), (5, Complex64::new(0.5, 0.0))],
            8,
        )
        .unwrap();
        let split = frequency_split(&f, 3.0);
        assert_eq!(split.low.coeff(1), Complex64::new(0.5, 0.0));
        assert_eq!(split.low.coeff(5), Complex64::ZERO);
        assert_eq!(split.high.coeff(5), Complex64::new(0.5, 0.0));
        // Exact reconstruction.
        let sum = split.high.add(&split.low);
        for n in -8..=8i64 {
            assert_eq!(sum.coeff(n), f.coeff(n), "mode {n}");
        }
        // ρ ≥ N: everything is low; ρ < 1: everything is high.
        let all_low = frequency_split(&f, 8.0);
        assert_eq!(all_low.low, f);
        let all_high = frequency_split(&f, 0.5);
        assert_eq!(all_high.high, f);
    }

    #[test]
    fn energy_identity_zero_trajectory() {
        let config = SolverConfig {
            dt: 0.01,
            t_final: 0.05,
            ..SolverConfig::with_cutoff(8)
        };
        let traj = simulate(&SpectralField::zero(8), &config).unwrap();
        assert_eq!(energy_identity_residual(&traj, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn sweep_rejects_nonincreasing_amplitudes() {
        let config = SolverConfig {
            dt: 0.01,
            t_final: 0.05,
            ..SolverConfig::with_cutoff(8)
        };
        let profile = two_mode(1.0, 8);
        assert!(smallness_sweep(&profile, &[0.2, 0.1], 0.05, &config).is_err());
    }

    #[test]
    fn sweep_zero_amplitude_trivial_row() {
        let config = SolverConfig {
            dt: 0.01,
            t_final: 0.05,
            ..SolverConfig::with_cutoff(8)
        };
        let profile = two_mode(1.0, 8);
        let table = smallness_sweep(&profile, &[0.0], 0.05, &config).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].decays);
        assert_eq!(table.rows[0].final_h32, 0.0);
        assert!(table.bracket.is_none());
    }
}
