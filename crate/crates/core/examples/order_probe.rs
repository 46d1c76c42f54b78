use capspec::analysis::{random_band_field, BandProfile, ALL_PROFILES};
use capspec::commutator::commutator_fast;
use capspec::norms::hs_norm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let (s, sigma) = (1.5f64, 3.0f64);
    for alpha in [0.0, 1.5] {
        println!("== s={s} sigma={sigma} alpha={alpha}");
        for cutoff in [64usize, 128, 256] {
            let mut per_octave = vec![0.0f64; 9];
            for i in 0..1600usize {
                let octave = i % 8;
                let profile = ALL_PROFILES[(i / 8) % 3];
                let lo = 1usize << octave;
                let hi = 2 * lo;
                if hi > cutoff { continue; }
                let mut rng = ChaCha8Rng::seed_from_u64(0x1D57 ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let phi = random_band_field(&mut rng, cutoff, lo, hi, profile);
                let psi = random_band_field(&mut rng, cutoff, lo, hi, profile);
                let out = commutator_fast(&phi, &psi, sigma).unwrap();
                let num = hs_norm(&out, s);
                let den = hs_norm(&phi, s + 0.25 + alpha) * hs_norm(&psi, sigma + 0.25 - alpha);
                if den > 0.0 { per_octave[octave] = per_octave[octave].max(num / den); }
            }
            println!("  N={cutoff}: per-octave max = {:?}", per_octave.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>());
        }
    }
    // Decompose by profile at a fixed big cutoff.
    for profile in [BandProfile::Flat, BandProfile::InverseSquare, BandProfile::HighBand] {
        let mut per_octave = vec![0.0f64; 8];
        for octave in 0..8usize {
            let lo = 1usize << octave;
            let hi = 2 * lo;
            for rep in 0..200usize {
                let mut rng = ChaCha8Rng::seed_from_u64(777 + (octave * 1000 + rep) as u64);
                let phi = random_band_field(&mut rng, 256, lo, hi, profile);
                let psi = random_band_field(&mut rng, 256, lo, hi, profile);
                let out = commutator_fast(&phi, &psi, 3.0).unwrap();
                let num = hs_norm(&out, 1.5);
                let den = hs_norm(&phi, 1.75) * hs_norm(&psi, 3.25);
                if den > 0.0 { per_octave[octave] = per_octave[octave].max(num / den); }
            }
        }
        println!("profile {profile:?} alpha=0: per-octave {:?}", per_octave.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>());
    }
}
