//! Exact references by codebook enumeration: soft-decision ML decoding and
//! bitwise MAP posteriors. Only practical for small dimensions.

use crate::channel::correlation;
use crate::code_graph::GeneratorMatrix;
use crate::error::{check_len, Error, Result};

const LANES: usize = 8;

/// Dimension limit for [`exact_bit_map`].
pub const MAX_MAP_DIMENSION: usize = 20;
/// Dimension limit for [`ml_decode`] and [`Codebook`].
pub const MAX_ML_DIMENSION: usize = 24;

/// Every codeword of a code, sorted lexicographically (bit 0 first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    k: usize,
    words: Vec<Vec<u8>>,
    /// Bit `j` of entry `i` is bit `j` of word `i`; empty when `n > 64`.
    packed: Vec<u64>,
}

fn pack(n: usize, words: &[Vec<u8>]) -> Vec<u64> {
    if n > 64 {
        return Vec::new();
    }
    words
        .iter()
        .map(|w| w.iter().enumerate().fold(0u64, |acc, (j, &b)| acc | (u64::from(b & 1) << j)))
        .collect()
}

impl Codebook {
    pub fn from_generator(gen: &GeneratorMatrix) -> Result<Self> {
        let mut words = gen.enumerate_codewords()?;
        words.sort_unstable();
        Ok(Self {
            n: gen.n(),
            k: gen.k(),
            packed: pack(gen.n(), &words),
            words,
        })
    }

    /// Builds a codebook from an explicit word list, which must be a linear
    /// code: size `2^k`, zero word present, closed under addition.
    pub fn from_words(n: usize, mut words: Vec<Vec<u8>>) -> Result<Self> {
        for w in &words {
            check_len("codeword", n, w.len())?;
        }
        words.sort_unstable();
        words.dedup();
        let size = words.len();
        if !size.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "a linear code has 2^k words, got {size}"
            )));
        }
        let k = size.trailing_zeros() as usize;
        if k > MAX_ML_DIMENSION {
            return Err(Error::DimensionTooLarge {
                k,
                limit: MAX_ML_DIMENSION,
            });
        }
        if words[0].iter().any(|&b| b != 0) {
            return Err(Error::InvalidParameter("codebook lacks the zero word".into()));
        }
        Ok(Self {
            n,
            k,
            packed: pack(n, &words),
            words,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn words(&self) -> &[Vec<u8>] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Maximum-correlation decoding over the whole codebook; ties resolve to the
/// lexicographically smallest word.
pub fn ml_decode(y: &[f64], cb: &Codebook) -> Result<Vec<u8>> {
    if cb.k > MAX_ML_DIMENSION {
        return Err(Error::DimensionTooLarge {
            k: cb.k,
            limit: MAX_ML_DIMENSION,
        });
    }
    check_len("channel output", cb.n, y.len())?;
    let best = if cb.packed.is_empty() {
        (0..cb.words.len()).fold((0, f64::NEG_INFINITY), |(bi, bs), i| {
            let score = correlation(y, &cb.words[i]);
            if score > bs {
                (i, score)
            } else {
                (bi, bs)
            }
        })
        .0
    } else {
        best_packed(y, &cb.packed)
    };
    Ok(cb.words[best].clone())
}

/// Index of the first maximum-correlation word. Several words are scored
/// side by side, but each score is summed left to right exactly as in
/// `correlation`, so the result is identical.
fn best_packed(y: &[f64], packed: &[u64]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (q, lane) in packed.chunks(LANES).enumerate() {
        let mut scores = [0.0; LANES];
        for (j, &yj) in y.iter().enumerate() {
            let bits = yj.to_bits();
            for (s, &w) in scores.iter_mut().zip(lane) {
                *s += f64::from_bits(bits ^ (((w >> j) & 1) << 63));
            }
        }
        for (i, &score) in scores.iter().enumerate().take(lane.len()) {
            if score > best_score {
                best = q * LANES + i;
                best_score = score;
            }
        }
    }
    best
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Exact posterior LLR of every bit given channel LLRs, by summing over the
/// codebook with weight `exp(½ Σ_j (−1)^{c_j} llr_j)`.
pub fn exact_bit_map(llr: &[f64], cb: &Codebook) -> Result<Vec<f64>> {
    if cb.k > MAX_MAP_DIMENSION {
        return Err(Error::DimensionTooLarge {
            k: cb.k,
            limit: MAX_MAP_DIMENSION,
        });
    }
    check_len("LLR vector", cb.n, llr.len())?;
    let metrics: Vec<f64> = cb
        .words
        .iter()
        .map(|w| 0.5 * correlation(llr, w))
        .collect();
    let mut zeros = Vec::with_capacity(cb.len());
    let mut ones = Vec::with_capacity(cb.len());
    Ok((0..cb.n)
        .map(|i| {
            zeros.clear();
            ones.clear();
            for (w, &m) in cb.words.iter().zip(&metrics) {
                if w[i] == 0 {
                    zeros.push(m);
                } else {
                    ones.push(m);
                }
            }
            log_sum_exp(&zeros) - log_sum_exp(&ones)
        })
        .collect())
}
