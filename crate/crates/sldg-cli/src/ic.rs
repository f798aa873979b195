//! Built-in initial conditions.
//!
//! `smooth` is a single sine over the domain; `oscillatory` superposes the
//! first eight harmonics with 1/m amplitudes and pseudo-random phases drawn
//! from a seeded ChaCha stream, so runs are reproducible bit-for-bit from
//! (name, seed) alone.

use std::fmt;
use std::str::FromStr;

use anyhow::bail;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    Smooth,
    Oscillatory,
}

impl FromStr for InitialCondition {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "smooth" => Ok(InitialCondition::Smooth),
            "oscillatory" => Ok(InitialCondition::Oscillatory),
            other => bail!("unknown initial condition `{other}` (expected smooth or oscillatory)"),
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialCondition::Smooth => "smooth",
            InitialCondition::Oscillatory => "oscillatory",
        })
    }
}

/// Build the profile over a periodic domain of the given length.
///
/// smooth: sin(2πx/L). oscillatory: Σ_{m=1..8} m⁻¹ sin(2πmx/L + φ_m) with
/// the phases φ_m ~ U[0, 2π) drawn in order m = 1..8 from ChaCha8(seed).
pub fn profile(
    ic: InitialCondition,
    length: f64,
    seed: u64,
) -> Box<dyn Fn(f64) -> f64 + Send + Sync> {
    match ic {
        InitialCondition::Smooth => Box::new(move |x| (TAU * x / length).sin()),
        InitialCondition::Oscillatory => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phases: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..TAU)).collect();
            Box::new(move |x| {
                let mut acc = 0.0;
                for (idx, &phi) in phases.iter().enumerate() {
                    let m = (idx + 1) as f64;
                    acc += (TAU * m * x / length + phi).sin() / m;
                }
                acc
            })
        }
    }
}
