//! BPSK over AWGN: modulation, noise, Eb/N0 conversion and channel LLRs.
//!
//! Bit 0 maps to +1 and bit 1 to −1, so a positive LLR favours bit 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::code_graph::GeneratorMatrix;
use crate::error::{Error, Result};
use crate::LLR_SAT;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservation {
    pub y: Vec<f64>,
    pub sigma: f64,
    pub llr: Vec<f64>,
}

/// Noise standard deviation for unit-energy BPSK at `ebn0_db` and code rate `rate`.
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "code rate must lie in (0, 1], got {rate}"
        )));
    }
    Ok((1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt())
}

pub fn modulate(bits: &[u8]) -> Result<Vec<f64>> {
    bits.iter()
        .enumerate()
        .map(|(index, &b)| match b {
            0 => Ok(1.0),
            1 => Ok(-1.0),
            value => Err(Error::NonBinary { index, value }),
        })
        .collect()
}

/// `2y/σ²`, saturated at ±[`LLR_SAT`].
pub fn channel_llr(y: &[f64], sigma: f64) -> Vec<f64> {
    let scale = 2.0 / (sigma * sigma);
    y.iter()
        .map(|&yi| (scale * yi).clamp(-LLR_SAT, LLR_SAT))
        .collect()
}

/// Adds white Gaussian noise drawn from `rng`.
pub fn transmit_with<R: Rng + ?Sized>(
    symbols: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<ChannelObservation> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise standard deviation must be positive, got {sigma}"
        )));
    }
    let y: Vec<f64> = symbols
        .iter()
        .map(|&s| s + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let llr = channel_llr(&y, sigma);
    Ok(ChannelObservation { y, sigma, llr })
}

/// Seeded variant of [`transmit_with`]; equal seeds give equal outputs.
pub fn transmit(symbols: &[f64], sigma: f64, seed: u64) -> Result<ChannelObservation> {
    transmit_with(symbols, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Independent generator for frame `frame` under `seed`: the ChaCha stream
/// id is the frame index, so frames can be simulated in any order.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Which codewords a simulation or training batch transmits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodewordMode {
    #[default]
    AllZero,
    Random,
}

impl std::str::FromStr for CodewordMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all-zero" | "zero" => Ok(Self::AllZero),
            "random" => Ok(Self::Random),
            other => Err(Error::Config(format!(
                "codeword mode must be all-zero or random, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for CodewordMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AllZero => "all-zero",
            Self::Random => "random",
        })
    }
}

/// Draws a codeword: the zero word, or the encoding of a uniform message.
pub fn sample_codeword<R: Rng + ?Sized>(
    gen: &GeneratorMatrix,
    mode: CodewordMode,
    rng: &mut R,
) -> Vec<u8> {
    match mode {
        CodewordMode::AllZero => vec![0; gen.n()],
        CodewordMode::Random => {
            let msg: Vec<u8> = (0..gen.k()).map(|_| rng.gen::<u8>() & 1).collect();
            gen.encode(&msg).expect("message length equals k")
        }
    }
}

/// `y · (−1)^bit`, by flipping the sign bit.
#[inline]
pub fn signed(y: f64, bit: u8) -> f64 {
    f64::from_bits(y.to_bits() ^ (u64::from(bit & 1) << 63))
}

/// Correlation `Σ_j y_j (−1)^{c_j}` between received values and a word,
/// summed left to right.
pub fn correlation(y: &[f64], word: &[u8]) -> f64 {
    y.iter().zip(word).fold(0.0, |acc, (&yi, &c)| acc + signed(yi, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigma_examples() {
        assert_abs_diff_eq!(ebn0_to_sigma(0.0, 1.0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-12);
        let s = ebn0_to_sigma(4.0, 0.5).unwrap();
        assert_abs_diff_eq!(s * s, 10f64.powf(-0.4), epsilon = 1e-12);
        assert_abs_diff_eq!(s, 0.630957, epsilon = 1e-6);
        assert_abs_diff_eq!(ebn0_to_sigma(10.0, 0.5).unwrap(), 0.316228, epsilon = 1e-6);
        assert!(ebn0_to_sigma(1.0, 0.0).is_err());
        assert!(ebn0_to_sigma(1.0, 1.5).is_err());
    }

    #[test]
    fn modulation() {
        assert_eq!(modulate(&[0, 0, 0]).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(modulate(&[1, 0, 1]).unwrap(), vec![-1.0, 1.0, -1.0]);
        assert_eq!(modulate(&[1; 7]).unwrap(), vec![-1.0; 7]);
        assert!(matches!(
            modulate(&[0, 2]),
            Err(Error::NonBinary { index: 1, value: 2 })
        ));
    }

    #[test]
    fn llr_examples() {
        let sigma = 0.5f64.sqrt();
        assert_abs_diff_eq!(channel_llr(&[1.0], sigma)[0], 4.0, epsilon = 1e-12);
        assert_eq!(channel_llr(&[0.0], sigma)[0], 0.0);
        let sigma = 10f64.powf(-0.4).sqrt();
        assert_abs_diff_eq!(channel_llr(&[0.63096], sigma)[0], 3.1698, epsilon = 1e-4);
        assert_eq!(channel_llr(&[100.0, -100.0], 1.0), vec![LLR_SAT, -LLR_SAT]);
    }

    #[test]
    fn llr_is_odd() {
        let y = [0.3, -2.0, 45.0, -0.0, 1e-3];
        let pos = channel_llr(&y, 0.4);
        let neg = channel_llr(&y.map(|v| -v), 0.4);
        for (a, b) in pos.iter().zip(&neg) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn transmission_is_seeded() {
        let symbols = modulate(&[0, 1, 1, 0, 1]).unwrap();
        let a = transmit(&symbols, 0.8, 42).unwrap();
        let b = transmit(&symbols, 0.8, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y, transmit(&symbols, 0.8, 43).unwrap().y);
        assert!(transmit(&symbols, 0.0, 1).is_err());
    }

    #[test]
    fn tiny_noise_preserves_signs() {
        let symbols = modulate(&[0, 1, 1, 0]).unwrap();
        let obs = transmit(&symbols, 1e-9, 7).unwrap();
        for (y, s) in obs.y.iter().zip(&symbols) {
            assert_abs_diff_eq!(*y, *s, epsilon = 1e-7);
        }
        for (l, s) in obs.llr.iter().zip(&symbols) {
            assert_eq!(l.signum(), s.signum());
        }
    }

    #[test]
    fn noise_mean_is_small() {
        let sigma = 0.7;
        let symbols = vec![1.0; 1_000_000];
        let obs = transmit(&symbols, sigma, 3).unwrap();
        let mean = obs.y.iter().map(|y| y - 1.0).sum::<f64>() / symbols.len() as f64;
        assert!(mean.abs() <= 4.0 * sigma / 1e3, "mean {mean}");
    }

    #[test]
    fn frame_streams_differ() {
        let mut a = frame_rng(9, 0);
        let mut b = frame_rng(9, 1);
        assert_ne!(a.gen::<u64>(), b.gen::<u64>());
        assert_eq!(frame_rng(9, 5).gen::<u64>(), frame_rng(9, 5).gen::<u64>());
    }

    #[test]
    fn correlation_metric() {
        assert_abs_diff_eq!(correlation(&[0.9, -1.1, 0.3], &[0, 1, 0]), 2.3, epsilon = 1e-12);
        assert_abs_diff_eq!(correlation(&[0.9, -1.1, 0.3], &[0, 0, 0]), 0.1, epsilon = 1e-12);
    }
}
