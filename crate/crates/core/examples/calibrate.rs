//! Scratch calibration runs (not part of the deliverable test suite).

use std::time::Instant;

use capspec::analysis::{
    calibrate_epsilon_work, check_scaling_family, energy_identity_residual, probe_commutator_stability,
    smallness_sweep, temporal_order, ProbeParams,
};
use capspec::evolution::{picard_solve, simulate, SolverConfig};
use capspec::field::SpectralField;
use capspec::norms::hs_norm;
use num_complex::Complex64;

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

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());

    if which == "crit6" || which == "all" {
        // Criterion 6: N = 128, T = 5, ||f0||_{3/2} = 0.01.
        for dt in [2e-3, 1e-3] {
            let t0 = Instant::now();
            let profile = two_mode(1.0, 128);
            let f0 = profile.scalar_mul(0.01 / hs_norm(&profile, 1.5));
            let config = SolverConfig {
                dt,
                t_final: 5.0,
                ..SolverConfig::with_cutoff(128)
            };
            let traj = simulate(&f0, &config).unwrap();
            let h32 = traj.trace.norm_series(1.5).unwrap();
            let monotone = h32.windows(2).all(|w| w[1] <= w[0]);
            let h3sq = traj.trace.accumulators().iter().find(|a| a.s == 3.0).unwrap();
            println!(
                "crit6 dt={dt:.0e}: {:?} monotone={monotone} h32(0)={:.3e} h32(T)={:.3e} int_h3sq={:.6e} elapsed={:.2?}",
                traj.termination,
                h32[0],
                h32.last().unwrap(),
                h3sq.running.last().unwrap(),
                t0.elapsed()
            );
        }
    }

    if which == "crit9" || which == "all" {
        // Criterion 9: temporal order, Richardson vs dt/8.
        for (n, amp, t_final, dt) in [
            (32, 0.05, 0.5, 4e-3),
            (32, 0.05, 0.5, 2e-3),
            (32, 0.2, 0.5, 2e-3),
            (16, 0.1, 1.0, 4e-3),
        ] {
            let f0 = two_mode(amp, n);
            let config = SolverConfig {
                dt,
                t_final,
                ..SolverConfig::with_cutoff(n)
            };
            let t0 = Instant::now();
            let report = temporal_order(&f0, &config, dt).unwrap();
            println!("crit9 N={n} amp={amp} T={t_final} dt={dt:.0e}: {report} elapsed={:.2?}", t0.elapsed());
        }
    }

    if which == "crit5" || which == "all" {
        // Criterion 5: scaling family.
        let f0 = SpectralField::from_modes(
            &[
                (1, Complex64::new(0.025, 0.0)),
                (2, Complex64::new(0.0125, 0.0)),
            ],
            32,
        )
        .unwrap();
        let config = SolverConfig {
            dt: 1e-3,
            t_final: 0.5,
            ..SolverConfig::with_cutoff(32)
        };
        let t0 = Instant::now();
        let result =
            check_scaling_family(&f0, 2, 0.5, &config, &[0.5 / 16.0, 0.5 / 32.0, 0.5 / 64.0], 1e-6).unwrap();
        println!(
            "crit5 ladder={:?}\n  {}\n  {}\n  elapsed={:.2?}",
            result.ladder, result.discrepancy_report, result.order_report, t0.elapsed()
        );
    }

    if which == "crit7" || which == "all" {
        // Criterion 7: Picard vs stepper, N = 128, T = 1.
        for dt in [2e-3, 1e-3] {
            let profile = two_mode(1.0, 128);
            let f0 = profile.scalar_mul(0.01 / hs_norm(&profile, 1.5));
            let config = SolverConfig {
                dt,
                t_final: 1.0,
                ..SolverConfig::with_cutoff(128)
            };
            let t0 = Instant::now();
            let (picard_traj, diag) = picard_solve(&f0, 1.0, 1e-10, 25, &config).unwrap();
            let sim = simulate(&f0, &config).unwrap();
            let dist = capspec::analysis::trajectory_l4t_h94_distance(&picard_traj, &sim).unwrap();
            println!(
                "crit7 dt={dt:.0e}: iterates={} factors={:?} dist={dist:.3e} elapsed={:.2?}",
                diag.iterate_count, diag.contraction_factors, t0.elapsed()
            );
        }
    }

    if which == "crit8" || which == "all" {
        // Criterion 8: energy identity.
        // Linear-only single modes.
        for (k, dt) in [(1u32, 2e-6), (2, 2e-6)] {
            let f0 = SpectralField::cosine(k, 0.01, 8).unwrap();
            let config = SolverConfig {
                dt,
                t_final: 20.0 * dt,
                linear_only: true,
                ..SolverConfig::with_cutoff(8)
            };
            let traj = simulate(&f0, &config).unwrap();
            let r = energy_identity_residual(&traj, 1.5).unwrap();
            println!("crit8 linear mode={k} dt={dt:.0e}: residual={r:.3e}");
        }
        // Nonlinear order.
        for (dt, t_final) in [(2e-3, 0.2), (1e-3, 0.2)] {
            let f0 = two_mode(0.02, 16);
            let config = SolverConfig {
                dt,
                t_final,
                ..SolverConfig::with_cutoff(16)
            };
            let traj = simulate(&f0, &config).unwrap();
            let r = energy_identity_residual(&traj, 1.5).unwrap();
            println!("crit8 nonlinear dt={dt:.0e}: residual={r:.3e}");
        }
    }

    if which == "crit11" || which == "all" {
        // Criterion 11: probe stability 64->128, 200->400.
        let t0 = Instant::now();
        for s in [0.5, 1.0, 1.5] {
            for (sigma, alphas) in [(0.0, vec![0.0]), (3.0, vec![0.0, 1.5, 3.0])] {
                for alpha in alphas {
                    let p = ProbeParams {
                        s,
                        sigma,
                        alpha,
                        sample_count: 200,
                        cutoff: 64,
                        seed: 0x1D57,
                    };
                    let report = probe_commutator_stability(&p);
                    println!("crit11 {report}");
                }
            }
        }
        println!("crit11 elapsed={:.2?}", t0.elapsed());
    }

    if which == "crit12" || which == "all" {
        // Criterion 12: sweep bracket stability.
        let amplitudes: Vec<f64> = (0..28).map(|k| 0.05 * 1.25f64.powi(k)).collect();
        for (n, dt) in [(32, 2e-3), (64, 1e-3)] {
            let t0 = Instant::now();
            let profile = two_mode(1.0, n);
            let config = SolverConfig {
                dt,
                t_final: 2.0,
                ..SolverConfig::with_cutoff(n)
            };
            match smallness_sweep(&profile, &amplitudes, 2.0, &config) {
                Ok(table) => {
                    for row in &table.rows {
                        println!(
                            "  N={n} amp={:.4}: {:?} decays={} max={:.3e}",
                            row.amplitude, row.termination, row.decays, row.max_h32
                        );
                    }
                    println!("crit12 N={n} dt={dt:.0e}: bracket={:?} elapsed={:.2?}", table.bracket, t0.elapsed());
                }
                Err(e) => println!("crit12 N={n}: error {e}"),
            }
        }
    }

    if which == "epswork" || which == "all" {
        for n in [16usize, 32] {
            let config = SolverConfig {
                dt: 5e-3,
                t_final: 1.0,
                ..SolverConfig::with_cutoff(n)
            };
            let t0 = Instant::now();
            let eps = calibrate_epsilon_work(&config);
            println!("epswork N={n}: {eps:.4e} elapsed={:.2?}", t0.elapsed());
        }
    }
}
