//! The commutator `[H, φ]Λ^σψ = H(φ·Λ^σψ) - φ·H(Λ^σψ)` and the equation's
//! nonlinearity `∂ₓ[H, f]Λ³f`.
//!
//! Two independent evaluation routes are kept side by side:
//!
//! * [`commutator_direct`] — the exact `O(N²)` Fourier double sum
//!   `out̂(n) = i Σₖ (-sgn(n) + sgn(n-k)) |n-k|^σ φ̂(k) ψ̂(n-k)`,
//!   the reference oracle;
//! * [`commutator_fast`] — two dealiased pseudo-spectral products plus
//!   multipliers, the production path.
//!
//! The sign factor vanishes unless `0 < |n| < |k|`, so the output at mode `n`
//! draws only on input modes strictly above `n` — the support-monotonicity
//! property the verification harness checks bit-for-bit.
//!
//! Convention: `sgn(0) = 0` and mode 0 of every output is zeroed. The raw
//! commutator can carry a nonzero mean, but the outer `∂ₓ` annihilates it and
//! the zero-mean function spaces quotient it out, so all operators here stay
//! inside the invariant representation.

use num_complex::Complex64;

use crate::field::{FieldError, SpectralField};
use crate::transforms;

fn check_common_cutoff(phi: &SpectralField, psi: &SpectralField) -> Result<usize, FieldError> {
    if phi.cutoff() != psi.cutoff() {
        return Err(FieldError::CutoffMismatch {
            left: phi.cutoff(),
            right: psi.cutoff(),
        });
    }
    Ok(phi.cutoff())
}

/// Exact double-sum evaluation of `[H, φ]Λ^σψ`, truncated to the common
/// cutoff. Terms whose sign factor vanishes are skipped, as are the
/// identically-zero mode-0 factors, so the sum touches exactly the modes the
/// support condition `0 < |n| < |k|` allows; this is what makes the
/// monotonicity check reproducible bit-for-bit.
pub fn commutator_direct(
    phi: &SpectralField,
    psi: &SpectralField,
    sigma: f64,
) -> Result<SpectralField, FieldError> {
    let cutoff = check_common_cutoff(phi, psi)?;
    let full = SpectralField::zero(2 * cutoff).map_modes(|n, _| {
        let mut acc = Complex64::ZERO;
        for k in -(cutoff as i64)..=cutoff as i64 {
            if k == 0 || n == k {
                continue;
            }
            let m = n - k;
            if m.unsigned_abs() as usize > cutoff {
                continue;
            }
            let sign = -n.signum() + m.signum();
            if sign == 0 {
                continue;
            }
            let weight = (m.unsigned_abs() as f64).powf(sigma) * sign as f64;
            let prod = phi.coeff(k) * psi.coeff(m);
            // i · weight · prod
            acc += Complex64::new(-weight * prod.im, weight * prod.re);
        }
        acc
    });
    Ok(full.with_cutoff(cutoff))
}

/// Dealiased physical-space product, truncated to the inputs' cutoff and
/// with the mean dropped (zero-mean quotient). Exact for band-limited inputs
/// thanks to the 3/2-rule padding: aliases of the quadratic product land
/// strictly outside the retained band when the grid has at least `3N+1`
/// points.
fn dealiased_product_on_grid(
    a: &SpectralField,
    b: &SpectralField,
    grid: usize,
) -> Result<SpectralField, FieldError> {
    let cutoff = check_common_cutoff(a, b)?;
    let required = 3 * cutoff + 1;
    if grid < required {
        return Err(FieldError::AliasedGrid {
            grid,
            cutoff,
            required,
        });
    }
    let mut pa = vec![Complex64::ZERO; grid];
    let mut pb = vec![Complex64::ZERO; grid];
    for n in 1..=cutoff {
        pa[n] = a.coeff(n as i64);
        pa[grid - n] = a.coeff(-(n as i64));
        pb[n] = b.coeff(n as i64);
        pb[grid - n] = b.coeff(-(n as i64));
    }
    transforms::inverse_in_place(&mut pa);
    transforms::inverse_in_place(&mut pb);
    // Both factors are real functions; the inverse transform leaves only
    // rounding residue in the imaginary parts. Dropping it keeps the forward
    // transform of the product Hermitian to rounding, and the mirrored
    // extraction below makes it Hermitian exactly.
    let mut prod: Vec<Complex64> = pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| Complex64::new(x.re * y.re, 0.0))
        .collect();
    transforms::forward_in_place(&mut prod);
    let scale = 1.0 / grid as f64;
    Ok(SpectralField::zero(cutoff).map_modes(|n, _| prod[n as usize] * scale))
}

/// `[H, φ]Λ^σψ` via two dealiased pseudo-spectral products, on an explicit
/// transform grid. Errors if the grid is below the 3/2-rule budget.
pub fn commutator_fast_on_grid(
    phi: &SpectralField,
    psi: &SpectralField,
    sigma: f64,
    grid: usize,
) -> Result<SpectralField, FieldError> {
    let a = psi.lambda_pow(sigma);
    let ha = a.hilbert();
    let t1 = dealiased_product_on_grid(phi, &a, grid)?.hilbert();
    let t2 = dealiased_product_on_grid(phi, &ha, grid)?;
    Ok(t1.sub(&t2))
}

/// `[H, φ]Λ^σψ` on an automatically chosen dealiased grid. Agrees with
/// [`commutator_direct`] to near machine precision on band-limited inputs.
pub fn commutator_fast(
    phi: &SpectralField,
    psi: &SpectralField,
    sigma: f64,
) -> Result<SpectralField, FieldError> {
    let cutoff = check_common_cutoff(phi, psi)?;
    let grid = transforms::fast_grid_size(3 * cutoff + 1);
    commutator_fast_on_grid(phi, psi, sigma, grid)
}

/// The right-hand side `∂ₓ[H, f]Λ³f`. Zero-mean automatically: the outer
/// `∂ₓ` kills mode 0.
pub fn nonlinearity(f: &SpectralField) -> Result<SpectralField, FieldError> {
    Ok(commutator_fast(f, f, 3.0)?.dx())
}

/// Relative L² distance between two coefficient sets, used by the oracle
/// equivalence checks: `‖a - b‖ / max(‖b‖, ε)`.
pub fn relative_l2_distance(a: &SpectralField, b: &SpectralField) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let cutoff = a.cutoff().max(b.cutoff()) as i64;
    for n in -cutoff..=cutoff {
        num += (a.coeff(n) - b.coeff(n)).norm_sqr();
        den += b.coeff(n).norm_sqr();
    }
    (num / den.max(1e-300)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cos(k: u32, cutoff: usize) -> SpectralField {
        SpectralField::cosine(k, 1.0, cutoff).unwrap()
    }

    #[test]
    fn direct_closed_form_pair() {
        // [H, cos 3x]Λ³ cos 2x = 8 sin x: modes ±1 with coefficients ∓4i.
        let out = commutator_direct(&cos(3, 8), &cos(2, 8), 3.0).unwrap();
        assert!((out.coeff(1) - Complex64::new(0.0, -4.0)).norm() < 1e-12);
        assert!((out.coeff(-1) - Complex64::new(0.0, 4.0)).norm() < 1e-12);
        for n in 2..=8i64 {
            assert_eq!(out.coeff(n), Complex64::ZERO, "mode {n}");
        }
        out.validate().unwrap();
    }

    #[test]
    fn direct_empty_support() {
        // φ at |k| = 1 only: no output mode satisfies 0 < |n| < 1.
        let out = commutator_direct(&cos(1, 8), &cos(5, 8), 3.0).unwrap();
        for n in -8..=8i64 {
            assert_eq!(out.coeff(n), Complex64::ZERO, "mode {n}");
        }
    }

    #[test]
    fn direct_zero_inputs() {
        let z = SpectralField::zero(8);
        let out = commutator_direct(&z, &z, 3.0).unwrap();
        assert!(out.coeffs().iter().all(|&c| c == Complex64::ZERO));
    }

    #[test]
    fn fast_matches_direct_on_closed_form() {
        let fast = commutator_fast(&cos(3, 8), &cos(2, 8), 3.0).unwrap();
        assert!((fast.coeff(1) - Complex64::new(0.0, -4.0)).norm() < 1e-13);
        let direct = commutator_direct(&cos(3, 8), &cos(2, 8), 3.0).unwrap();
        assert!(relative_l2_distance(&fast, &direct) < 1e-13);
    }

    #[test]
    fn fast_low_phi_vanishes_after_dx() {
        // φ = cos x supports output only at mode 0, which ∂ₓ removes.
        let psi = SpectralField::from_modes(
            &[
                (2, Complex64::new(0.3, -0.1)),
                (5, Complex64::new(-0.2, 0.4)),
            ],
            8,
        )
        .unwrap();
        let out = commutator_fast(&cos(1, 8), &psi, 3.0).unwrap().dx();
        let scale: f64 = psi.coeffs().iter().map(|c| c.norm()).sum();
        for n in -8..=8i64 {
            assert!(out.coeff(n).norm() <= 1e-12 * scale.max(1.0), "mode {n}");
        }
    }

    #[test]
    fn fast_is_bilinear() {
        let phi = cos(3, 8);
        let psi = cos(2, 8);
        let scaled = commutator_fast(&phi.scalar_mul(2.0), &psi.scalar_mul(-1.5), 3.0).unwrap();
        let base = commutator_fast(&phi, &psi, 3.0).unwrap().scalar_mul(-3.0);
        assert!(relative_l2_distance(&scaled, &base) < 1e-13);
    }

    #[test]
    fn fast_rejects_undersized_grid() {
        let out = commutator_fast_on_grid(&cos(3, 8), &cos(2, 8), 3.0, 24);
        assert!(matches!(out, Err(FieldError::AliasedGrid { required: 25, .. })));
    }

    #[test]
    fn cutoff_mismatch_is_rejected() {
        let out = commutator_direct(&cos(3, 8), &cos(2, 9), 3.0);
        assert!(matches!(out, Err(FieldError::CutoffMismatch { .. })));
    }

    #[test]
    fn nonlinearity_cross_term() {
        // f = cos 3x + cos 2x: the (3,2) pair feeds modes ±1; after ∂ₓ the
        // result is 8 cos x and nothing else survives.
        let f = SpectralField::from_modes(
            &[
                (3, Complex64::new(0.5, 0.0)),
                (2, Complex64::new(0.5, 0.0)),
            ],
            8,
        )
        .unwrap();
        let out = nonlinearity(&f).unwrap();
        assert!((out.coeff(1) - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        for n in 2..=8i64 {
            assert!(out.coeff(n).norm() < 1e-12, "mode {n}");
        }
    }

    #[test]
    fn nonlinearity_single_lowest_mode_vanishes() {
        for amp in [0.1, 1.0, 17.5] {
            let f = SpectralField::cosine(1, amp, 8).unwrap();
            let out = nonlinearity(&f).unwrap();
            for n in -8..=8i64 {
                assert!(out.coeff(n).norm() < 1e-12 * amp * amp, "amp {amp} mode {n}");
            }
        }
    }

    #[test]
    fn nonlinearity_zero_is_zero() {
        let out = nonlinearity(&SpectralField::zero(8)).unwrap();
        assert!(out.coeffs().iter().all(|&c| c == Complex64::ZERO));
    }
}
