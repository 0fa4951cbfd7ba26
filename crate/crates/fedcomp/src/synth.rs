//! Deterministic synthetic multivariate series: cross-correlated sinusoid
//! mixtures plus Gaussian noise, a desk-scale stand-in for real sensor data.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::series::TimeSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidComponent {
    /// Cycles per time step.
    pub frequency: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Generator spec: per-feature sinusoid mixtures with shared base
/// frequencies so that cross-feature structure exists for the federation
/// to exploit.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub d: usize,
    pub t: usize,
    /// One mixture per feature.
    pub components: Vec<Vec<SinusoidComponent>>,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Build a spec where features sharing a base frequency also share its
    /// phase, so shared-frequency pairs are strongly correlated. Each
    /// feature adds a weaker private harmonic for diversity.
    pub fn correlated(d: usize, t: usize, noise_std: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5359_4e54_4845_5449);
        let n_base = 3usize.min(d.max(1));
        let base: Vec<(f64, f64)> = (0..n_base)
            .map(|k| {
                let freq = (k as f64 + 1.0) / 200.0;
                let phase = rng.random_range(0.0..core::f64::consts::TAU);
                (freq, phase)
            })
            .collect();
        let components = (0..d)
            .map(|f| {
                let (freq, phase) = base[f % n_base];
                let mut mix = alloc::vec![SinusoidComponent {
                    frequency: freq,
                    amplitude: rng.random_range(0.8..1.2),
                    phase,
                }];
                mix.push(SinusoidComponent {
                    frequency: freq * rng.random_range(2.5..4.5),
                    amplitude: 0.15,
                    phase: rng.random_range(0.0..core::f64::consts::TAU),
                });
                mix
            })
            .collect();
        Self { d, t, components, noise_std, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.t == 0 {
            return Err(Error::InvalidParameter {
                name: "synthetic",
                reason: "d and t must be >= 1".into(),
            });
        }
        if self.components.len() != self.d {
            return Err(Error::LengthMismatch { expected: self.d, got: self.components.len() });
        }
        if self.noise_std < 0.0 || self.noise_std.is_nan() {
            return Err(Error::InvalidParameter {
                name: "noise_std",
                reason: alloc::format!("must be >= 0, got {}", self.noise_std),
            });
        }
        Ok(())
    }
}

/// Sample the spec into a series; deterministic per seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(spec.d * spec.t);
    for mix in &spec.components {
        for t in 0..spec.t {
            let mut v = 0.0;
            for c in mix {
                v += c.amplitude
                    * libm::sin(core::f64::consts::TAU * c.frequency * t as f64 + c.phase);
            }
            if spec.noise_std > 0.0 {
                v += spec.noise_std * gaussian(&mut rng);
            }
            values.push(v);
        }
    }
    let names = (0..spec.d).map(|f| alloc::format!("synth_{f}")).collect();
    TimeSeries::new(values, spec.d, spec.t, names)
}

/// Box-Muller standard normal draw.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}
