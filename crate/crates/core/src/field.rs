//! Zero-mean real periodic functions stored as complex Fourier coefficients
//! on the signed mode range `-N..=N`, plus the diagonal (Fourier-multiplier)
//! operators acting on them: Hilbert transform, fractional derivatives `Λ^s`,
//! `∂ₓ`, and the integer rescaling `f(x) ↦ f(λx)/λ`.
//!
//! Convention: `v(x) = Σₙ v̂(n) e^{inx}` with `v̂(n) = (1/2π)∫ v e^{-inx} dx`,
//! so `cos(x)` has coefficients `1/2` at modes `±1`.
//!
//! Two invariants hold for every constructed field and are preserved exactly
//! (bit-level, not just to rounding) by every operator in this module:
//!
//! * Hermitian symmetry, `v̂(-n) = conj(v̂(n))` — realness of the function;
//! * zero mean, `v̂(0) = 0`.
//!
//! Exactness is achieved by computing coefficients for `n ≥ 1` only and
//! mirroring the conjugate onto `-n`, which is the mathematically correct
//! value for any operator that maps real functions to real functions.

use num_complex::Complex64;
use thiserror::Error;

use crate::transforms;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("mode 0 must have zero amplitude (zero-mean invariant)")]
    NonzeroMean,
    #[error("mode {mode} outside cutoff {cutoff}")]
    ModeOutOfRange { mode: i64, cutoff: usize },
    #[error("mode {mode} listed more than once")]
    DuplicateMode { mode: i64 },
    #[error("modes {mode} and {minus_mode} violate Hermitian symmetry", minus_mode = -mode)]
    HermitianConflict { mode: i64 },
    #[error("physical grid of {grid} points aliases cutoff {cutoff}; need at least {required}")]
    AliasedGrid { grid: usize, cutoff: usize, required: usize },
    #[error("samples have imaginary residue {max_imag:e} (Hermitian symmetry broken)")]
    NonRealSamples { max_imag: f64 },
    #[error("scale factor {lambda} overflows cutoff {out_cutoff} from input cutoff {in_cutoff}")]
    CutoffOverflow { lambda: u32, in_cutoff: usize, out_cutoff: usize },
    #[error("fields have different cutoffs ({left} vs {right})")]
    CutoffMismatch { left: usize, right: usize },
}

/// Real, zero-mean periodic function represented by its Fourier coefficients
/// on modes `-N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    cutoff: usize,
    /// Length `2N+1`; index `i` holds mode `i - N`.
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// The zero field at cutoff `n`.
    pub fn zero(cutoff: usize) -> Self {
        Self {
            cutoff,
            coeffs: vec![Complex64::ZERO; 2 * cutoff + 1],
        }
    }

    /// Build a field from listed `(mode, amplitude)` pairs, completing
    /// Hermitian symmetry when only one of `±n` is given.
    pub fn from_modes(pairs: &[(i64, Complex64)], cutoff: usize) -> Result<Self, FieldError> {
        let mut field = Self::zero(cutoff);
        let mut listed: Vec<i64> = Vec::with_capacity(pairs.len());
        for &(mode, amp) in pairs {
            if mode == 0 {
                if amp != Complex64::ZERO {
                    return Err(FieldError::NonzeroMean);
                }
                continue;
            }
            if mode.unsigned_abs() as usize > cutoff {
                return Err(FieldError::ModeOutOfRange { mode, cutoff });
            }
            if listed.contains(&mode) {
                return Err(FieldError::DuplicateMode { mode });
            }
            listed.push(mode);
            field.set(mode, amp);
        }
        // Hermitian completion, rejecting explicit conflicting pairs.
        for &mode in &listed {
            if listed.contains(&(-mode)) {
                let c = field.coeff(mode);
                let d = field.coeff(-mode);
                if d != c.conj() {
                    return Err(FieldError::HermitianConflict { mode: mode.abs() });
                }
            } else {
                field.set(-mode, field.coeff(mode).conj());
            }
        }
        Ok(field)
    }

    /// `a·cos(kx)`.
    pub fn cosine(k: u32, amplitude: f64, cutoff: usize) -> Result<Self, FieldError> {
        Self::from_modes(
            &[(i64::from(k), Complex64::new(amplitude / 2.0, 0.0))],
            cutoff,
        )
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Coefficient of mode `n`; zero outside the cutoff.
    pub fn coeff(&self, mode: i64) -> Complex64 {
        if mode.unsigned_abs() as usize > self.cutoff {
            Complex64::ZERO
        } else {
            self.coeffs[(mode + self.cutoff as i64) as usize]
        }
    }

    fn set(&mut self, mode: i64, value: Complex64) {
        let idx = (mode + self.cutoff as i64) as usize;
        self.coeffs[idx] = value;
    }

    /// All stored coefficients in mode order `-N..=N`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Apply a diagonal operator: `out̂(n) = op(n, v̂(n))` for `n ≥ 1`,
    /// mirrored conjugate on `-n`, zero at mode 0.
    pub fn map_modes(&self, op: impl Fn(i64, Complex64) -> Complex64) -> Self {
        let mut out = Self::zero(self.cutoff);
        for n in 1..=self.cutoff as i64 {
            let c = op(n, self.coeff(n));
            out.set(n, c);
            out.set(-n, c.conj());
        }
        out
    }

    /// Hilbert transform: multiplier `-i·sgn(n)`, zero on the mean.
    pub fn hilbert(&self) -> Self {
        self.map_modes(|_, c| Complex64::new(c.im, -c.re))
    }

    /// Fractional derivative `Λ^s`: multiplier `|n|^s`. Negative `s` is safe
    /// because mode 0 is excluded.
    pub fn lambda_pow(&self, s: f64) -> Self {
        self.map_modes(|n, c| c * (n as f64).powf(s))
    }

    /// Spatial derivative `∂ₓ`: multiplier `i·n`.
    pub fn dx(&self) -> Self {
        self.map_modes(|n, c| Complex64::new(-c.im * n as f64, c.re * n as f64))
    }

    /// `f(x) ↦ f(λx)/λ`: moves mode `n` to `λn` with amplitude `v̂(n)/λ`.
    /// The caller supplies the enlarged output cutoff.
    pub fn scale(&self, lambda: u32, out_cutoff: usize) -> Result<Self, FieldError> {
        let lam = lambda as usize;
        if lam * self.cutoff > out_cutoff || lambda == 0 {
            return Err(FieldError::CutoffOverflow {
                lambda,
                in_cutoff: self.cutoff,
                out_cutoff,
            });
        }
        let inv = 1.0 / f64::from(lambda);
        let mut out = Self::zero(out_cutoff);
        for n in 1..=self.cutoff as i64 {
            let c = self.coeff(n) * inv;
            out.set(n * i64::from(lambda), c);
            out.set(-n * i64::from(lambda), c.conj());
        }
        Ok(out)
    }

    /// Drop all modes `|n| > new_cutoff` (Galerkin projection) or zero-pad
    /// up to a larger cutoff.
    pub fn with_cutoff(&self, new_cutoff: usize) -> Self {
        let mut out = Self::zero(new_cutoff);
        let keep = self.cutoff.min(new_cutoff) as i64;
        for n in 1..=keep {
            out.set(n, self.coeff(n));
            out.set(-n, self.coeff(-n));
        }
        out
    }

    /// Keep only modes with `|n| > rho` (`high = true`) or `|n| ≤ rho`.
    pub fn band_select(&self, rho: f64, high: bool) -> Self {
        let mut out = Self::zero(self.cutoff);
        for n in 1..=self.cutoff as i64 {
            if ((n as f64) > rho) == high {
                out.set(n, self.coeff(n));
                out.set(-n, self.coeff(-n));
            }
        }
        out
    }

    /// Samples of the function at `x_j = 2πj/M`, `j = 0..M`.
    ///
    /// Requires `M ≥ 2N+2` so the inverse transform is alias-free. Imaginary
    /// residues below `1e-12` are discarded; anything larger means the
    /// Hermitian invariant was broken upstream and is reported as an error.
    pub fn sample_physical(&self, grid: usize) -> Result<Vec<f64>, FieldError> {
        let required = 2 * self.cutoff + 2;
        if grid < required {
            return Err(FieldError::AliasedGrid {
                grid,
                cutoff: self.cutoff,
                required,
            });
        }
        let mut buf = vec![Complex64::ZERO; grid];
        buf[0] = Complex64::ZERO;
        for n in 1..=self.cutoff {
            buf[n] = self.coeff(n as i64);
            buf[grid - n] = self.coeff(-(n as i64));
        }
        transforms::inverse_in_place(&mut buf);
        let max_imag = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if max_imag >= 1e-12 {
            return Err(FieldError::NonRealSamples { max_imag });
        }
        Ok(buf.into_iter().map(|c| c.re).collect())
    }

    /// True when every coefficient is finite.
    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Check both representation invariants; used by tests and debug asserts.
    pub fn validate(&self) -> Result<(), FieldError> {
        if self.coeff(0) != Complex64::ZERO {
            return Err(FieldError::NonzeroMean);
        }
        for n in 1..=self.cutoff as i64 {
            if self.coeff(-n) != self.coeff(n).conj() {
                return Err(FieldError::HermitianConflict { mode: n });
            }
        }
        Ok(())
    }

    /// Coefficient-wise sum. Panics on cutoff mismatch.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.cutoff, other.cutoff, "cutoff mismatch in add");
        self.map_modes(|n, c| c + other.coeff(n))
    }

    /// Coefficient-wise difference. Panics on cutoff mismatch.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.cutoff, other.cutoff, "cutoff mismatch in sub");
        self.map_modes(|n, c| c - other.coeff(n))
    }

    pub fn scalar_mul(&self, a: f64) -> Self {
        self.map_modes(|_, c| c * a)
    }
}

/// A `b(Λ)` operator given by its symbol on nonnegative frequencies.
/// The action on mode 0 is defined to be 0 (zero-mean quotient).
pub struct MultiplierSpec {
    symbol: Box<dyn Fn(u64) -> f64 + Send + Sync>,
}

impl MultiplierSpec {
    pub fn new(symbol: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            symbol: Box::new(symbol),
        }
    }

    pub fn symbol(&self, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            (self.symbol)(n)
        }
    }

    pub fn apply(&self, field: &SpectralField) -> SpectralField {
        field.map_modes(|n, c| {
            let b = self.symbol(n as u64);
            debug_assert!(b.is_finite(), "multiplier symbol not finite at |n| = {n}");
            c * b
        })
    }
}
