//! Time evolution of `f_t + Λ³f = ∂ₓ[H, f]Λ³f`:
//!
//! * the exact linear semigroup `e^{-tΛ³}` (multiplier `e^{-t|n|³}`),
//! * stiff fourth-order steppers (ETDRK4 and integrating-factor RK4) that
//!   treat the linear part exactly,
//! * the forced linear solve `U_t + Λ³U = ∂ₓ[H, φ]Λ³ψ, U(0) = 0` by
//!   per-mode exponential quadrature,
//! * the Duhamel fixed-point (Picard) iterator
//!   `f ↦ e^{-tΛ³}f₀ + U(f, f)` with distances measured in `L⁴_T Ḣ^{9/4}`.
//!
//! ETDRK4 coefficients are evaluated by averaging the φ-functions over a
//! unit circle around each `dt·|n|³`; the naive formulas lose digits to
//! cancellation when `dt·|n|³` is small.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commutator::nonlinearity;
use crate::field::{FieldError, SpectralField};
use crate::norms::{hs_norm, NormError, NormTrace};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("solver.{field}: {message}")]
    InvalidConfig {
        field: &'static str,
        message: String,
    },
    #[error("datum cutoff {datum} exceeds solver cutoff {solver}")]
    DatumExceedsCutoff { datum: usize, solver: usize },
    #[error("trajectories do not share a time grid")]
    GridMismatch,
    #[error("trajectory has {0} snapshots; need at least {1}")]
    InsufficientSnapshots(usize, usize),
    #[error("Picard iteration failed to contract (final distance {final_distance:.3e} after {iterates} iterates)")]
    NonContraction {
        final_distance: f64,
        iterates: usize,
        diagnostics: Box<PicardDiagnostics>,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Etdrk4,
    Ifrk4,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupDetected,
    UnderResolved,
}

impl Termination {
    /// The CLI exit-code contract: 0 ok, 2 blowup, 3 under-resolved.
    pub fn exit_code(self) -> i32 {
        match self {
            Termination::Completed => 0,
            Termination::BlowupDetected => 2,
            Termination::UnderResolved => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Mode cutoff N.
    pub cutoff: usize,
    /// Time step (seconds).
    pub dt: f64,
    /// Horizon (seconds); truncated to a whole number of steps.
    pub t_final: f64,
    pub integrator: Integrator,
    /// Record the trace and a snapshot every this many steps.
    pub record_every: usize,
    /// Ḣ^{3/2} cap; `None` means 10³ × the initial norm.
    pub blowup_threshold: Option<f64>,
    /// Max admissible fraction of Ḣ^{3/2} energy above mode 3N/4.
    pub tail_alarm: f64,
    /// Disable the nonlinearity (exact semigroup stepping).
    pub linear_only: bool,
}

impl SolverConfig {
    /// Defaults for a given cutoff. The default step resolves the fastest
    /// linear time scale `e^{-tN³}`; runs that rely on the exact treatment
    /// of the linear part routinely override it upward.
    pub fn with_cutoff(cutoff: usize) -> Self {
        Self {
            cutoff,
            dt: 0.25 / (cutoff.max(1) as f64).powi(3),
            t_final: 1.0,
            integrator: Integrator::Etdrk4,
            record_every: 1,
            blowup_threshold: None,
            tail_alarm: 1e-8,
            linear_only: false,
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        if self.cutoff == 0 {
            return Err(EvolutionError::InvalidConfig {
                field: "n",
                message: "mode cutoff must be positive".into(),
            });
        }
        if !(self.dt > 0.0) {
            return Err(EvolutionError::InvalidConfig {
                field: "dt",
                message: format!("time step must be positive, got {}", self.dt),
            });
        }
        if !(self.t_final > 0.0) {
            return Err(EvolutionError::InvalidConfig {
                field: "t",
                message: format!("horizon must be positive, got {}", self.t_final),
            });
        }
        if self.record_every == 0 {
            return Err(EvolutionError::InvalidConfig {
                field: "record_every",
                message: "must be at least 1".into(),
            });
        }
        if let Some(b) = self.blowup_threshold {
            if !(b > 0.0) {
                return Err(EvolutionError::InvalidConfig {
                    field: "blowup_threshold",
                    message: format!("must be positive, got {b}"),
                });
            }
        }
        if !(self.tail_alarm > 0.0 && self.tail_alarm < 1.0) {
            return Err(EvolutionError::InvalidConfig {
                field: "tail_alarm",
                message: format!("must lie in (0, 1), got {}", self.tail_alarm),
            });
        }
        Ok(())
    }
}

/// Time-stamped solution snapshots with the attached norm trace.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    times: Vec<f64>,
    snapshots: Vec<SpectralField>,
    pub trace: NormTrace,
    pub termination: Termination,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[SpectralField] {
        &self.snapshots
    }

    pub fn initial(&self) -> &SpectralField {
        &self.snapshots[0]
    }

    pub fn final_field(&self) -> &SpectralField {
        self.snapshots.last().expect("trajectory is never empty")
    }
}

/// Per-iterate `L⁴_T Ḣ^{9/4}` distances of the Picard iteration and their
/// successive ratios.
#[derive(Debug, Clone, Serialize)]
pub struct PicardDiagnostics {
    pub iterate_count: usize,
    pub distances: Vec<f64>,
    pub contraction_factors: Vec<f64>,
    pub converged: bool,
}

/// The propagator `e^{-tΛ³}`.
pub fn semigroup(field: &SpectralField, t: f64) -> SpectralField {
    debug_assert!(t >= 0.0);
    field.map_modes(|n, c| c * (-t * (n as f64).powi(3)).exp())
}

/// Mean of `g` over the unit circle centered at `z`, with half-offset nodes
/// so real `z = ∓1` never lands on a pole.
fn contour_mean(z: f64, g: impl Fn(Complex64) -> Complex64) -> f64 {
    const NODES: usize = 64;
    let mut acc = Complex64::ZERO;
    for j in 0..NODES {
        let theta = PI * (2.0 * j as f64 + 1.0) / NODES as f64;
        acc += g(Complex64::new(z + theta.cos(), theta.sin()));
    }
    (acc / NODES as f64).re
}

/// `φ₁(z) = (e^z - 1)/z`, cancellation-safe.
fn phi1(z: f64) -> f64 {
    contour_mean(z, |lr| (lr.exp() - 1.0) / lr)
}

/// `φ₂(z) = (e^z - 1 - z)/z²`, cancellation-safe.
fn phi2(z: f64) -> f64 {
    contour_mean(z, |lr| (lr.exp() - 1.0 - lr) / (lr * lr))
}

/// Per-mode weights for one exponential-quadrature cell of width `h`:
/// `U⁺(n) = decay·U(n) + w0·F(n) + w1·F⁺(n)` integrates the kernel
/// `e^{-(h-τ)|n|³}` exactly against a linear-in-`τ` interpolant of the
/// forcing.
struct ExpQuadWeights {
    decay: Vec<f64>,
    w0: Vec<f64>,
    w1: Vec<f64>,
}

impl ExpQuadWeights {
    fn new(cutoff: usize, h: f64) -> Self {
        let mut decay = Vec::with_capacity(cutoff + 1);
        let mut w0 = Vec::with_capacity(cutoff + 1);
        let mut w1 = Vec::with_capacity(cutoff + 1);
        for n in 0..=cutoff {
            let z = -h * (n as f64).powi(3);
            let p1 = phi1(z);
            let p2 = phi2(z);
            decay.push(z.exp());
            w0.push(h * (p1 - p2));
            w1.push(h * p2);
        }
        Self { decay, w0, w1 }
    }
}

/// Precomputed per-mode ETDRK4 tables for a fixed `(cutoff, dt)`.
struct EtdTables {
    e_full: Vec<f64>,
    e_half: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

impl EtdTables {
    fn new(cutoff: usize, dt: f64) -> Self {
        let mut t = Self {
            e_full: Vec::with_capacity(cutoff + 1),
            e_half: Vec::with_capacity(cutoff + 1),
            q: Vec::with_capacity(cutoff + 1),
            f1: Vec::with_capacity(cutoff + 1),
            f2: Vec::with_capacity(cutoff + 1),
            f3: Vec::with_capacity(cutoff + 1),
        };
        for n in 0..=cutoff {
            let z = -dt * (n as f64).powi(3);
            t.e_full.push(z.exp());
            t.e_half.push((z / 2.0).exp());
            t.q.push(dt * contour_mean(z, |lr| ((lr / 2.0).exp() - 1.0) / lr));
            t.f1.push(dt * contour_mean(z, |lr| {
                (-4.0 - lr + lr.exp() * (4.0 - 3.0 * lr + lr * lr)) / (lr * lr * lr)
            }));
            t.f2.push(dt * contour_mean(z, |lr| {
                (2.0 + lr + lr.exp() * (lr - 2.0)) / (lr * lr * lr)
            }));
            t.f3.push(dt * contour_mean(z, |lr| {
                (-4.0 - 3.0 * lr - lr * lr + lr.exp() * (4.0 - lr)) / (lr * lr * lr)
            }));
        }
        t
    }
}

/// One-step integrator with coefficient tables cached for a fixed
/// `(cutoff, dt)` pair.
pub struct Stepper {
    cutoff: usize,
    integrator: Integrator,
    linear_only: bool,
    dt: f64,
    etd: EtdTables,
}

impl Stepper {
    pub fn new(cutoff: usize, dt: f64, integrator: Integrator, linear_only: bool) -> Self {
        Self {
            cutoff,
            integrator,
            linear_only,
            dt,
            etd: EtdTables::new(cutoff, dt),
        }
    }

    fn rhs(&self, f: &SpectralField) -> Result<SpectralField, FieldError> {
        nonlinearity(f)
    }

    /// Advance one step of `f_t = -Λ³f + ∂ₓ[H,f]Λ³f`.
    pub fn step(&self, f: &SpectralField) -> Result<SpectralField, EvolutionError> {
        assert_eq!(f.cutoff(), self.cutoff, "field/stepper cutoff mismatch");
        if self.linear_only {
            return Ok(self.apply(&self.etd.e_full, f));
        }
        match self.integrator {
            Integrator::Etdrk4 => self.step_etdrk4(f),
            Integrator::Ifrk4 => self.step_ifrk4(f),
        }
    }

    fn apply(&self, table: &[f64], f: &SpectralField) -> SpectralField {
        f.map_modes(|n, c| c * table[n as usize])
    }

    fn step_etdrk4(&self, v: &SpectralField) -> Result<SpectralField, EvolutionError> {
        let t = &self.etd;
        let nv = self.rhs(v)?;
        let a = v.map_modes(|n, c| {
            let i = n as usize;
            c * t.e_half[i] + nv.coeff(n) * t.q[i]
        });
        let na = self.rhs(&a)?;
        let b = v.map_modes(|n, c| {
            let i = n as usize;
            c * t.e_half[i] + na.coeff(n) * t.q[i]
        });
        let nb = self.rhs(&b)?;
        let c_stage = a.map_modes(|n, c| {
            let i = n as usize;
            c * t.e_half[i] + (nb.coeff(n) * 2.0 - nv.coeff(n)) * t.q[i]
        });
        let nc = self.rhs(&c_stage)?;
        Ok(v.map_modes(|n, c| {
            let i = n as usize;
            c * t.e_full[i]
                + nv.coeff(n) * t.f1[i]
                + (na.coeff(n) + nb.coeff(n)) * (2.0 * t.f2[i])
                + nc.coeff(n) * t.f3[i]
        }))
    }

    fn step_ifrk4(&self, v: &SpectralField) -> Result<SpectralField, EvolutionError> {
        let t = &self.etd;
        let h = self.dt;
        let k1 = self.rhs(v)?;
        let s2 = v.map_modes(|n, c| {
            let i = n as usize;
            (c + k1.coeff(n) * (h / 2.0)) * t.e_half[i]
        });
        let k2 = self.rhs(&s2)?;
        let s3 = v.map_modes(|n, c| {
            let i = n as usize;
            c * t.e_half[i] + k2.coeff(n) * (h / 2.0)
        });
        let k3 = self.rhs(&s3)?;
        let s4 = v.map_modes(|n, c| {
            let i = n as usize;
            c * t.e_full[i] + k3.coeff(n) * t.e_half[i] * h
        });
        let k4 = self.rhs(&s4)?;
        Ok(v.map_modes(|n, c| {
            let i = n as usize;
            c * t.e_full[i]
                + (k1.coeff(n) * t.e_full[i]
                    + (k2.coeff(n) + k3.coeff(n)) * (2.0 * t.e_half[i])
                    + k4.coeff(n))
                    * (h / 6.0)
        }))
    }
}

/// One integrator step with fresh coefficient tables; long runs should build
/// a [`Stepper`] once instead.
pub fn step(
    f: &SpectralField,
    dt: f64,
    integrator: Integrator,
) -> Result<SpectralField, EvolutionError> {
    Stepper::new(f.cutoff(), dt, integrator, false).step(f)
}

fn tail_monitor_mode(cutoff: usize) -> usize {
    3 * cutoff / 4
}

/// March the full equation until the horizon, a blow-up threshold crossing,
/// or a resolution alarm; records the norm trace and snapshots along the way.
pub fn simulate(f0: &SpectralField, config: &SolverConfig) -> Result<Trajectory, EvolutionError> {
    config.validate()?;
    if f0.cutoff() > config.cutoff {
        return Err(EvolutionError::DatumExceedsCutoff {
            datum: f0.cutoff(),
            solver: config.cutoff,
        });
    }
    let f0 = f0.with_cutoff(config.cutoff);
    let threshold = config
        .blowup_threshold
        .unwrap_or_else(|| 1e3 * hs_norm(&f0, 1.5));
    let tail_mode = tail_monitor_mode(config.cutoff);
    let steps = ((config.t_final / config.dt) + 1e-9).floor() as usize;
    let stepper = Stepper::new(
        config.cutoff,
        config.dt,
        config.integrator,
        config.linear_only,
    );

    let mut trace = NormTrace::new(&[]);
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let mut termination = Termination::Completed;

    let record = |t: f64,
                      f: &SpectralField,
                      trace: &mut NormTrace,
                      times: &mut Vec<f64>,
                      snapshots: &mut Vec<SpectralField>|
     -> Result<bool, EvolutionError> {
        trace.record(t, f)?;
        times.push(t);
        snapshots.push(f.clone());
        Ok(crate::norms::tail_fraction(f, tail_mode) > config.tail_alarm)
    };

    if record(0.0, &f0, &mut trace, &mut times, &mut snapshots)? {
        termination = Termination::UnderResolved;
        return Ok(Trajectory {
            config: config.clone(),
            times,
            snapshots,
            trace,
            termination,
        });
    }

    let mut f = f0;
    for i in 1..=steps {
        f = stepper.step(&f)?;
        let t = i as f64 * config.dt;
        if !f.is_finite() || hs_norm(&f, 1.5) > threshold {
            termination = Termination::BlowupDetected;
            if f.is_finite() {
                record(t, &f, &mut trace, &mut times, &mut snapshots)?;
            }
            break;
        }
        if i % config.record_every == 0 || i == steps {
            if record(t, &f, &mut trace, &mut times, &mut snapshots)? {
                termination = Termination::UnderResolved;
                break;
            }
        }
    }

    Ok(Trajectory {
        config: config.clone(),
        times,
        snapshots,
        trace,
        termination,
    })
}

/// Exponential-quadrature march of `U_t + Λ³U = F(t)` with `U(0) = 0`,
/// given the forcing on the grid. Shared by the forced solve, the Picard
/// iteration, and the Duhamel residual.
fn march_forced(
    cutoff: usize,
    times: &[f64],
    forcing: &[SpectralField],
) -> Vec<SpectralField> {
    assert_eq!(times.len(), forcing.len());
    let mut out = Vec::with_capacity(times.len());
    out.push(SpectralField::zero(cutoff));
    let mut weights: Option<(f64, ExpQuadWeights)> = None;
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        let fresh = match &weights {
            Some((h_cached, _)) => (h - h_cached).abs() > 1e-15 * h.abs(),
            None => true,
        };
        if fresh {
            weights = Some((h, ExpQuadWeights::new(cutoff, h)));
        }
        let (_, w) = weights.as_ref().expect("weights just set");
        let prev = &out[i - 1];
        let next = prev.map_modes(|n, c| {
            let j = n as usize;
            c * w.decay[j] + forcing[i - 1].coeff(n) * w.w0[j] + forcing[i].coeff(n) * w.w1[j]
        });
        out.push(next);
    }
    out
}

fn forcing_series(
    phi: &[SpectralField],
    psi: &[SpectralField],
) -> Result<Vec<SpectralField>, FieldError> {
    phi.iter()
        .zip(psi)
        .map(|(p, q)| Ok(crate::commutator::commutator_fast(p, q, 3.0)?.dx()))
        .collect()
}

/// Solve `U_t + Λ³U = ∂ₓ[H, φ]Λ³ψ`, `U(0) = 0` along the shared grid of the
/// two trajectories.
pub fn forced_linear_solve(
    phi: &Trajectory,
    psi: &Trajectory,
) -> Result<Trajectory, EvolutionError> {
    if phi.times() != psi.times() || phi.config.cutoff != psi.config.cutoff {
        return Err(EvolutionError::GridMismatch);
    }
    let cutoff = phi.config.cutoff;
    let forcing = forcing_series(phi.snapshots(), psi.snapshots())?;
    let fields = march_forced(cutoff, phi.times(), &forcing);
    let mut trace = NormTrace::new(&[]);
    for (t, f) in phi.times().iter().zip(&fields) {
        trace.record(*t, f)?;
    }
    Ok(Trajectory {
        config: phi.config.clone(),
        times: phi.times().to_vec(),
        snapshots: fields,
        trace,
        termination: Termination::Completed,
    })
}

/// `L⁴_T Ḣ^{9/4}` distance between two field series on a shared grid.
fn l4t_h94_distance(times: &[f64], a: &[SpectralField], b: &[SpectralField]) -> f64 {
    let mut integral = 0.0;
    let mut prev = 0.0;
    for i in 0..times.len() {
        let d = hs_norm(&a[i].sub(&b[i]), 2.25).powi(4);
        if i > 0 {
            integral += 0.5 * (times[i] - times[i - 1]) * (prev + d);
        }
        prev = d;
    }
    integral.powf(0.25)
}

/// Picard iteration `f⁽ʲ⁺¹⁾ = e^{-tΛ³}f₀ + U(f⁽ʲ⁾, f⁽ʲ⁾)` on a uniform grid,
/// iterated until the `L⁴_T Ḣ^{9/4}` distance between successive iterates
/// drops below `tol`.
///
/// Distances that stop decreasing within `maxit` signal data too large for
/// this horizon and surface as [`EvolutionError::NonContraction`].
pub fn picard_solve(
    f0: &SpectralField,
    t_horizon: f64,
    tol: f64,
    maxit: usize,
    config: &SolverConfig,
) -> Result<(Trajectory, PicardDiagnostics), EvolutionError> {
    config.validate()?;
    if !(tol > 0.0) {
        return Err(EvolutionError::InvalidConfig {
            field: "picard_tol",
            message: format!("must be positive, got {tol}"),
        });
    }
    if maxit == 0 {
        return Err(EvolutionError::InvalidConfig {
            field: "picard_maxit",
            message: "must be at least 1".into(),
        });
    }
    if f0.cutoff() > config.cutoff {
        return Err(EvolutionError::DatumExceedsCutoff {
            datum: f0.cutoff(),
            solver: config.cutoff,
        });
    }
    let cutoff = config.cutoff;
    let f0 = f0.with_cutoff(cutoff);
    let steps = ((t_horizon / config.dt) + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * config.dt).collect();
    let base: Vec<SpectralField> = times.iter().map(|&t| semigroup(&f0, t)).collect();

    let mut current = base.clone();
    let mut distances = Vec::new();
    let mut factors = Vec::new();
    let mut converged = false;

    for _ in 0..maxit {
        let forcing = forcing_series(&current, &current)?;
        let correction = march_forced(cutoff, &times, &forcing);
        let next: Vec<SpectralField> = base
            .iter()
            .zip(&correction)
            .map(|(b, u)| b.add(u))
            .collect();
        let d = l4t_h94_distance(&times, &next, &current);
        if let Some(&d_prev) = distances.last() {
            factors.push(if d_prev == 0.0 { 0.0 } else { d / d_prev });
        }
        distances.push(d);
        current = next;
        if d <= tol {
            converged = true;
            break;
        }
        if factors.last().is_some_and(|&q| q >= 1.0) {
            break;
        }
    }

    let diagnostics = PicardDiagnostics {
        iterate_count: distances.len(),
        distances: distances.clone(),
        contraction_factors: factors,
        converged,
    };

    if !converged {
        return Err(EvolutionError::NonContraction {
            final_distance: distances.last().copied().unwrap_or(f64::NAN),
            iterates: diagnostics.iterate_count,
            diagnostics: Box::new(diagnostics),
        });
    }

    let mut trace = NormTrace::new(&[]);
    for (t, f) in times.iter().zip(&current) {
        trace.record(*t, f)?;
    }
    let trajectory = Trajectory {
        config: SolverConfig {
            t_final: t_horizon,
            ..config.clone()
        },
        times,
        snapshots: current,
        trace,
        termination: Termination::Completed,
    };
    Ok((trajectory, diagnostics))
}

/// Max over recorded times of
/// `‖f(t) - e^{-tΛ³}f₀ - ∫₀ᵗ e^{-(t-t')Λ³}(∂ₓ[H,f]Λ³f)(t') dt'‖_{3/2}`,
/// with the integral quadratured on the recorded grid. Linear-only runs are
/// checked against the bare semigroup.
pub fn duhamel_residual(traj: &Trajectory) -> Result<f64, EvolutionError> {
    if traj.snapshots().len() < 2 {
        return Err(EvolutionError::InsufficientSnapshots(
            traj.snapshots().len(),
            2,
        ));
    }
    let cutoff = traj.config.cutoff;
    let f0 = traj.initial();
    let forcing: Vec<SpectralField> = if traj.config.linear_only {
        traj.snapshots()
            .iter()
            .map(|_| SpectralField::zero(cutoff))
            .collect()
    } else {
        forcing_series(traj.snapshots(), traj.snapshots())?
    };
    let duhamel = march_forced(cutoff, traj.times(), &forcing);
    let mut worst = 0.0_f64;
    for (i, t) in traj.times().iter().enumerate() {
        let mild = semigroup(f0, *t).add(&duhamel[i]);
        worst = worst.max(hs_norm(&traj.snapshots()[i].sub(&mild), 1.5));
    }
    Ok(worst)
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

    fn small_config(cutoff: usize, dt: f64, t_final: f64) -> SolverConfig {
        SolverConfig {
            dt,
            t_final,
            ..SolverConfig::with_cutoff(cutoff)
        }
    }

    #[test]
    fn semigroup_identity_and_decay() {
        let f = SpectralField::cosine(2, 1.0, 4).unwrap();
        assert_eq!(semigroup(&f, 0.0), f);
        let g = semigroup(&f, 0.1);
        let expected = 0.5 * (-0.8_f64).exp();
        assert!((g.coeff(2).re - expected).abs() < 1e-16);
    }

    #[test]
    fn semigroup_law_exact() {
        let f = SpectralField::from_modes(
            &[(1, Complex64::new(0.3, 0.2)), (3, Complex64::new(-0.1, 0.7))],
            4,
        )
        .unwrap();
        let a = semigroup(&semigroup(&f, 0.2), 0.3);
        let b = semigroup(&f, 0.5);
        for n in 1..=4i64 {
            assert!((a.coeff(n) - b.coeff(n)).norm() <= 4.0 * f64::EPSILON * b.coeff(n).norm());
        }
    }

    #[test]
    fn phi_functions_match_series_and_closed_form() {
        // Tiny z (the cancellation regime for the naive formulas): Taylor.
        for z in [-1e-8, -1e-4] {
            let series1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
            assert!((phi1(z) - series1).abs() < 1e-15, "phi1({z})");
            let series2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
            assert!((phi2(z) - series2).abs() < 1e-15, "phi2({z})");
        }
        // Moderate and large z: the direct formulas are stable.
        for z in [-0.5, -5.0, -40.0] {
            assert!((phi1(z) - (z.exp() - 1.0) / z).abs() < 1e-14, "phi1({z})");
            assert!(
                (phi2(z) - (z.exp() - 1.0 - z) / (z * z)).abs() < 1e-14,
                "phi2({z})"
            );
        }
    }

    #[test]
    fn linear_only_step_is_exact_semigroup() {
        let f = two_mode(0.3, 8);
        for integrator in [Integrator::Etdrk4, Integrator::Ifrk4] {
            let stepper = Stepper::new(8, 0.05, integrator, true);
            let stepped = stepper.step(&f).unwrap();
            let exact = semigroup(&f, 0.05);
            for n in 1..=8i64 {
                let (a, b) = (stepped.coeff(n), exact.coeff(n));
                assert!((a - b).norm() <= 1e-14 * b.norm().max(1e-300), "mode {n}");
            }
        }
    }

    #[test]
    fn step_on_lowest_cosine_matches_semigroup() {
        // nonlinearity(a·cos x) = 0, so the full step equals the semigroup.
        let f = SpectralField::cosine(1, 0.4, 8).unwrap();
        let stepped = step(&f, 0.01, Integrator::Etdrk4).unwrap();
        let exact = semigroup(&f, 0.01);
        assert!((stepped.coeff(1) - exact.coeff(1)).norm() < 1e-14);
    }

    #[test]
    fn steps_preserve_invariants() {
        let f = two_mode(0.05, 16);
        for integrator in [Integrator::Etdrk4, Integrator::Ifrk4] {
            let stepper = Stepper::new(16, 1e-3, integrator, false);
            let mut g = f.clone();
            for _ in 0..5 {
                g = stepper.step(&g).unwrap();
                g.validate().unwrap();
            }
        }
    }

    #[test]
    fn simulate_zero_datum() {
        let traj = simulate(
            &SpectralField::zero(8),
            &small_config(8, 1e-2, 0.1),
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        for f in traj.snapshots() {
            assert!(f.coeffs().iter().all(|&c| c == Complex64::ZERO));
        }
    }

    #[test]
    fn simulate_small_data_decays() {
        let f0 = two_mode(0.01, 16);
        let traj = simulate(&f0, &small_config(16, 1e-3, 0.5)).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        let h32 = traj.trace.norm_series(1.5).unwrap();
        for w in h32.windows(2) {
            assert!(w[1] <= w[0], "Ḣ^{{3/2}} must not increase: {w:?}");
        }
    }

    #[test]
    fn simulate_linear_only_exact_decay() {
        let f0 = SpectralField::cosine(2, 1.0, 8).unwrap();
        let config = SolverConfig {
            linear_only: true,
            ..small_config(8, 1e-2, 0.2)
        };
        let traj = simulate(&f0, &config).unwrap();
        let h32 = traj.trace.norm_series(1.5).unwrap();
        for (t, got) in traj.times().iter().zip(h32) {
            let expected = 2.0 * (-8.0 * t).exp();
            assert!((got - expected).abs() <= 1e-12 * expected.max(1e-12));
        }
    }

    #[test]
    fn simulate_flags_blowup_on_threshold() {
        let f0 = two_mode(0.05, 16);
        let config = SolverConfig {
            blowup_threshold: Some(hs_norm(&f0, 1.5) * 0.5),
            ..small_config(16, 1e-3, 0.1)
        };
        // Threshold below the initial norm: first step must trip it.
        let traj = simulate(&f0, &config).unwrap();
        assert_eq!(traj.termination, Termination::BlowupDetected);
    }

    #[test]
    fn forced_solve_zero_psi_is_zero() {
        let config = small_config(8, 1e-2, 0.1);
        let phi = simulate(&two_mode(0.05, 8), &config).unwrap();
        let psi = simulate(&SpectralField::zero(8), &config).unwrap();
        let u = forced_linear_solve(&phi, &psi).unwrap();
        for f in u.snapshots() {
            assert!(f.coeffs().iter().all(|&c| c.norm() == 0.0));
        }
    }

    #[test]
    fn forced_solve_low_phi_is_zero() {
        // φ = cos x: the commutator forcing vanishes identically.
        let config = SolverConfig {
            linear_only: true,
            ..small_config(8, 1e-2, 0.1)
        };
        let phi = simulate(&SpectralField::cosine(1, 0.5, 8).unwrap(), &config).unwrap();
        let psi = simulate(&two_mode(0.3, 8), &config).unwrap();
        let u = forced_linear_solve(&phi, &psi).unwrap();
        let worst = u
            .snapshots()
            .iter()
            .map(|f| hs_norm(f, 2.25))
            .fold(0.0, f64::max);
        assert!(worst < 1e-13, "got {worst}");
    }

    #[test]
    fn forced_solve_rejects_mismatched_grids() {
        let phi = simulate(&two_mode(0.05, 8), &small_config(8, 1e-2, 0.1)).unwrap();
        let psi = simulate(&two_mode(0.05, 8), &small_config(8, 5e-3, 0.1)).unwrap();
        assert!(matches!(
            forced_linear_solve(&phi, &psi),
            Err(EvolutionError::GridMismatch)
        ));
    }

    #[test]
    fn picard_zero_datum_one_iterate() {
        let config = small_config(8, 1e-2, 0.5);
        let (traj, diag) = picard_solve(&SpectralField::zero(8), 0.5, 1e-10, 10, &config).unwrap();
        assert!(diag.converged);
        assert_eq!(diag.iterate_count, 1);
        assert_eq!(traj.termination, Termination::Completed);
    }

    #[test]
    fn picard_small_data_contracts() {
        let f0 = two_mode(0.01, 16);
        let config = small_config(16, 5e-3, 1.0);
        let (_, diag) = picard_solve(&f0, 1.0, 1e-10, 25, &config).unwrap();
        assert!(diag.converged);
        assert!(diag.contraction_factors.iter().all(|&q| q < 1.0));
    }

    #[test]
    fn duhamel_residual_zero_and_linear() {
        let z = simulate(&SpectralField::zero(8), &small_config(8, 1e-2, 0.1)).unwrap();
        assert_eq!(duhamel_residual(&z).unwrap(), 0.0);

        let config = SolverConfig {
            linear_only: true,
            ..small_config(8, 1e-3, 0.2)
        };
        let lin = simulate(&SpectralField::cosine(2, 1.0, 8).unwrap(), &config).unwrap();
        assert!(duhamel_residual(&lin).unwrap() < 1e-12);
    }

    #[test]
    fn duhamel_residual_shrinks_under_refinement() {
        let f0 = two_mode(0.02, 16);
        let r: Vec<f64> = [4e-3, 2e-3]
            .iter()
            .map(|&dt| {
                let traj = simulate(&f0, &small_config(16, dt, 0.2)).unwrap();
                duhamel_residual(&traj).unwrap()
            })
            .collect();
        assert!(
            r[1] < r[0] / 2.5,
            "expected ~2nd-order shrink, got {r:?}"
        );
    }
}
