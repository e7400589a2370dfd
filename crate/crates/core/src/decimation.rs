//! NBP with two-stage decimation.
//!
//! The list stage repeatedly decodes every live branch, picks the least
//! reliable variable node and splits the branch into a `+LLR_SAT` and a
//! `−LLR_SAT` copy of its channel LLRs. After `n_D` splits there are `2^n_D`
//! branches. The learned stage then alternates decoding with a nudge of
//! every channel LLR by `sign(posterior) · |f_NN(features)|`, where `f_NN` is
//! a small MLP shared by all variable nodes. A last decode yields one
//! candidate codeword per branch; the candidate with the largest
//! correlation to the channel output wins.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::correlation;
use crate::code_graph::TannerGraph;
use crate::decoder::{saturate, DecodeResult, NbpDecoder, WeightSet};
use crate::error::{check_len, Error, Result};
use crate::LLR_SAT;

/// Width of both hidden layers of the decimation MLP.
pub const HIDDEN: usize = 16;

pub const MLP_FORMAT: &str = "nbpd-mlp-v1";

/// `NBP-D(l_max, n_D, n_LD)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NbpdConfig {
    /// Iterations of every NBP run.
    pub l_max: usize,
    /// List-based decimations.
    pub n_d: usize,
    /// Learned decimations.
    pub n_ld: usize,
}

impl NbpdConfig {
    pub fn new(l_max: usize, n_d: usize, n_ld: usize) -> Self {
        Self { l_max, n_d, n_ld }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.l_max == 0 {
            return Err(Error::InvalidParameter("l_max must be at least 1".into()));
        }
        if self.n_d > n {
            return Err(Error::InvalidParameter(format!(
                "n_D = {} exceeds the code length {n}",
                self.n_d
            )));
        }
        Ok(())
    }

    /// Number of NBP runs per frame: `2^(n_D+1) − 1 + n_LD · 2^n_D`.
    pub fn nbp_runs(&self) -> usize {
        (1usize << (self.n_d + 1)) - 1 + self.n_ld * (1usize << self.n_d)
    }
}

impl std::fmt::Display for NbpdConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "NBP-D({},{},{})", self.l_max, self.n_d, self.n_ld)
    }
}

/// One node of the decoding tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    /// Channel LLRs of this branch.
    pub mu_ch: Vec<f64>,
    /// VNs fixed by the list stage, in decimation order.
    pub decimated: Vec<usize>,
    pub last_result: Option<DecodeResult>,
}

impl BranchState {
    pub fn new(mu_ch: Vec<f64>) -> Self {
        Self {
            mu_ch,
            decimated: Vec::new(),
            last_result: None,
        }
    }

    /// Bit value implied by the sign of each list-stage decimation.
    pub fn decimation_bits(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.decimated
            .iter()
            .map(|&v| (v, u8::from(self.mu_ch[v] < 0.0)))
    }
}

/// Index of the smallest `|posterior|` outside `exclude`, lowest index on ties.
pub fn least_reliable_vn(posteriors: &[f64], exclude: &[usize]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (v, p) in posteriors.iter().enumerate() {
        if exclude.contains(&v) {
            continue;
        }
        let mag = p.abs();
        if best.map_or(true, |(_, b)| mag < b) {
            best = Some((v, mag));
        }
    }
    best.map(|(v, _)| v).ok_or(Error::AllExcluded)
}

/// Splits `branch` at VN `v` into the `+LLR_SAT` and the `−LLR_SAT` child.
pub fn split_branch(branch: &BranchState, v: usize) -> Result<(BranchState, BranchState)> {
    if v >= branch.mu_ch.len() {
        return Err(Error::InvalidParameter(format!(
            "VN {v} out of range for length {}",
            branch.mu_ch.len()
        )));
    }
    if branch.decimated.contains(&v) {
        return Err(Error::AlreadyDecimated(v));
    }
    let mut plus = BranchState {
        mu_ch: branch.mu_ch.clone(),
        decimated: branch.decimated.clone(),
        last_result: None,
    };
    plus.decimated.push(v);
    let mut minus = plus.clone();
    plus.mu_ch[v] = LLR_SAT;
    minus.mu_ch[v] = -LLR_SAT;
    Ok((plus, minus))
}

/// Parameters of the decimation MLP: `(1 + d_max) → 16 → 16 → 1`, ReLU on
/// the hidden layers, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecimatorParams {
    pub d_max: usize,
    pub layer1_w: Vec<Vec<f64>>,
    pub layer1_b: Vec<f64>,
    pub layer2_w: Vec<Vec<f64>>,
    pub layer2_b: Vec<f64>,
    pub layer3_w: Vec<Vec<f64>>,
    pub layer3_b: f64,
}

#[derive(Serialize, Deserialize)]
struct MlpFile {
    format: String,
    #[serde(flatten)]
    params: DecimatorParams,
}

/// `16(1 + d_max) + 16 + 16·16 + 16 + 16 + 1`.
pub fn count_decimator_params(d_max: usize) -> usize {
    HIDDEN * (1 + d_max) + HIDDEN + HIDDEN * HIDDEN + HIDDEN + HIDDEN + 1
}

impl DecimatorParams {
    pub fn zeros(d_max: usize) -> Self {
        Self {
            d_max,
            layer1_w: vec![vec![0.0; 1 + d_max]; HIDDEN],
            layer1_b: vec![0.0; HIDDEN],
            layer2_w: vec![vec![0.0; HIDDEN]; HIDDEN],
            layer2_b: vec![0.0; HIDDEN],
            layer3_w: vec![vec![0.0; HIDDEN]],
            layer3_b: 0.0,
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn random<R: Rng + ?Sized>(d_max: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(d_max);
        let mut fill = |rows: &mut Vec<Vec<f64>>, fan_in: usize| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            for w in rows.iter_mut().flatten() {
                *w = rng.gen_range(-scale..scale);
            }
        };
        fill(&mut p.layer1_w, 1 + d_max);
        fill(&mut p.layer2_w, HIDDEN);
        fill(&mut p.layer3_w, HIDDEN);
        p
    }

    pub fn input_len(&self) -> usize {
        1 + self.d_max
    }

    pub fn num_params(&self) -> usize {
        count_decimator_params(self.d_max)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Format(format!("decimator parameters: {msg}")));
        if self.layer1_w.len() != HIDDEN || self.layer1_w.iter().any(|r| r.len() != self.input_len()) {
            return bad("layer1_w must be 16 × (1 + d_max)");
        }
        if self.layer2_w.len() != HIDDEN || self.layer2_w.iter().any(|r| r.len() != HIDDEN) {
            return bad("layer2_w must be 16 × 16");
        }
        if self.layer3_w.len() != 1 || self.layer3_w[0].len() != HIDDEN {
            return bad("layer3_w must be 1 × 16");
        }
        if self.layer1_b.len() != HIDDEN || self.layer2_b.len() != HIDDEN {
            return bad("hidden biases must have length 16");
        }
        if self.to_flat().iter().any(|x| !x.is_finite()) {
            return bad("all parameters must be finite");
        }
        Ok(())
    }

    /// Flattened in the order layer1 weights (row-major), layer1 biases,
    /// layer2 weights, layer2 biases, layer3 weights, layer3 bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend(self.layer1_w.iter().flatten());
        out.extend(&self.layer1_b);
        out.extend(self.layer2_w.iter().flatten());
        out.extend(&self.layer2_b);
        out.extend(self.layer3_w.iter().flatten());
        out.push(self.layer3_b);
        out
    }

    pub fn from_flat(d_max: usize, flat: &[f64]) -> Result<Self> {
        check_len("flat decimator parameters", count_decimator_params(d_max), flat.len())?;
        let mut it = flat.iter().copied();
        let mut take = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
            (0..rows).map(|_| it.by_ref().take(cols).collect()).collect()
        };
        let layer1_w = take(HIDDEN, 1 + d_max);
        let layer1_b = take(1, HIDDEN).remove(0);
        let layer2_w = take(HIDDEN, HIDDEN);
        let layer2_b = take(1, HIDDEN).remove(0);
        let layer3_w = take(1, HIDDEN);
        let layer3_b = take(1, 1)[0][0];
        Ok(Self {
            d_max,
            layer1_w,
            layer1_b,
            layer2_w,
            layer2_b,
            layer3_w,
            layer3_b,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(&MlpFile {
            format: MLP_FORMAT.into(),
            params: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MlpFile = serde_json::from_str(text)?;
        if file.format != MLP_FORMAT {
            return Err(Error::Format(format!(
                "expected format {MLP_FORMAT:?}, found {:?}",
                file.format
            )));
        }
        file.params.validate()?;
        Ok(file.params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub(crate) fn dense(weights: &[f64], bias: f64, input: &[f64]) -> f64 {
    weights
        .iter()
        .zip(input)
        .fold(bias, |acc, (w, x)| acc + w * x)
}

/// Evaluates the MLP on one feature vector.
pub fn mlp_forward(params: &DecimatorParams, features: &[f64]) -> Result<f64> {
    check_len("decimator features", params.input_len(), features.len())?;
    Ok(mlp_forward_unchecked(params, features))
}

fn mlp_forward_unchecked(params: &DecimatorParams, features: &[f64]) -> f64 {
    let mut h1 = [0.0; HIDDEN];
    for (h, (w, b)) in h1.iter_mut().zip(params.layer1_w.iter().zip(&params.layer1_b)) {
        *h = dense(w, *b, features).max(0.0);
    }
    let mut h2 = [0.0; HIDDEN];
    for (h, (w, b)) in h2.iter_mut().zip(params.layer2_w.iter().zip(&params.layer2_b)) {
        *h = dense(w, *b, &h1).max(0.0);
    }
    dense(&params.layer3_w[0], params.layer3_b, &h2)
}

/// Features of VN `v`: its channel LLR, then the CN→VN messages in
/// ascending check order, zero-padded to `1 + d_max`.
pub fn decimation_features(
    graph: &TannerGraph,
    mu_ch: &[f64],
    c2v: &[f64],
    v: usize,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|x| *x = 0.0);
    out[0] = mu_ch[v];
    for (slot, e) in out[1..].iter_mut().zip(graph.vn_edges(v)) {
        *slot = c2v[e];
    }
}

/// Applies one learned decimation to every VN of `branch`.
pub fn learned_decimate(
    graph: &TannerGraph,
    params: &DecimatorParams,
    branch: &BranchState,
) -> Result<BranchState> {
    let result = branch.last_result.as_ref().ok_or(Error::MissingDecode)?;
    check_len("branch channel LLRs", graph.n(), branch.mu_ch.len())?;
    if params.d_max < graph.max_vn_degree() {
        return Err(Error::InvalidParameter(format!(
            "decimator expects degree ≤ {}, graph has {}",
            params.d_max,
            graph.max_vn_degree()
        )));
    }
    let posterior = result.final_posterior();
    let mut features = vec![0.0; params.input_len()];
    let mu_ch = (0..graph.n())
        .map(|v| {
            decimation_features(graph, &branch.mu_ch, &result.final_c2v_messages, v, &mut features);
            let nudge = mlp_forward_unchecked(params, &features).abs();
            let sign = if posterior[v] < 0.0 { -1.0 } else { 1.0 };
            saturate(branch.mu_ch[v] + sign * nudge)
        })
        .collect();
    Ok(BranchState {
        mu_ch,
        decimated: branch.decimated.clone(),
        last_result: None,
    })
}

/// Index of the word with the largest correlation to `y`; lowest index on ties.
pub fn select_candidate(y: &[f64], candidates: &[Vec<u8>]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        check_len("candidate", y.len(), c.len())?;
        let score = correlation(y, c);
        if best.map_or(true, |(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyCandidates)
}

/// How NBP-D picks its output among the branch candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Largest correlation among candidates that satisfy every check,
    /// falling back to all candidates when none does.
    #[default]
    CodewordFirst,
    /// Largest correlation among all candidates.
    Correlation,
}

/// Applies `rule` to `candidates`; see [`Selection`].
pub fn select_with(
    graph: &TannerGraph,
    y: &[f64],
    candidates: &[Vec<u8>],
    rule: Selection,
) -> Result<usize> {
    if rule == Selection::CodewordFirst {
        let mut valid = Vec::new();
        for (i, c) in candidates.iter().enumerate() {
            if graph.syndrome_ok(c)? {
                valid.push(i);
            }
        }
        if !valid.is_empty() {
            let words: Vec<Vec<u8>> = valid.iter().map(|&i| candidates[i].clone()).collect();
            return Ok(valid[select_candidate(y, &words)?]);
        }
    }
    select_candidate(y, candidates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbpdOutput {
    pub codeword: Vec<u8>,
    pub selected: usize,
    /// One hard decision per branch, in branch order.
    pub candidates: Vec<Vec<u8>>,
    /// Final state of every branch, including its last decode.
    pub branches: Vec<BranchState>,
}

/// Full NBP-D decode of one frame with [`Selection::CodewordFirst`].
///
/// `y` is only used for the final selection; any positive multiple of the
/// channel output (the channel LLRs, for instance) selects the same word.
pub fn nbp_d_decode(
    graph: &TannerGraph,
    weights: &WeightSet,
    params: Option<&DecimatorParams>,
    mu_ch: &[f64],
    y: &[f64],
    cfg: NbpdConfig,
) -> Result<NbpdOutput> {
    nbp_d_decode_with(graph, weights, params, mu_ch, y, cfg, Selection::default())
}

/// [`nbp_d_decode`] with an explicit selection rule.
pub fn nbp_d_decode_with(
    graph: &TannerGraph,
    weights: &WeightSet,
    params: Option<&DecimatorParams>,
    mu_ch: &[f64],
    y: &[f64],
    cfg: NbpdConfig,
    selection: Selection,
) -> Result<NbpdOutput> {
    cfg.validate(graph.n())?;
    check_len("channel LLR vector", graph.n(), mu_ch.len())?;
    check_len("channel output", graph.n(), y.len())?;
    let params = match (params, cfg.n_ld) {
        (_, 0) => None,
        (Some(p), _) => Some(p),
        (None, _) => {
            return Err(Error::InvalidParameter(
                "learned decimation requires decimator parameters".into(),
            ))
        }
    };
    let mut decoder = NbpDecoder::new(graph, weights)?;
    let mut branches = vec![BranchState::new(mu_ch.to_vec())];

    for _ in 0..cfg.n_d {
        let live = branches.len();
        for j in 0..live {
            let result = decoder.decode(&branches[j].mu_ch, cfg.l_max, false)?;
            let v = least_reliable_vn(result.final_posterior(), &branches[j].decimated)?;
            let (plus, minus) = split_branch(&branches[j], v)?;
            branches[j] = plus;
            branches.push(minus);
        }
    }

    if let Some(params) = params {
        for _ in 0..cfg.n_ld {
            for branch in branches.iter_mut() {
                branch.last_result = Some(decoder.decode(&branch.mu_ch, cfg.l_max, false)?);
                *branch = learned_decimate(graph, params, branch)?;
            }
        }
    }

    let mut candidates = Vec::with_capacity(branches.len());
    for branch in branches.iter_mut() {
        let result = decoder.decode(&branch.mu_ch, cfg.l_max, false)?;
        candidates.push(result.final_hard_decision.clone());
        branch.last_result = Some(result);
    }
    let selected = select_with(graph, y, &candidates, selection)?;
    Ok(NbpdOutput {
        codeword: candidates[selected].clone(),
        selected,
        candidates,
        branches,
    })
}

/// Check-node update count `d̄_c · m · l_max · (2^(n_D+1) − 1 + n_LD · 2^n_D)`.
pub fn complexity(l_max: usize, n_d: usize, n_ld: usize, avg_cn_degree: f64, m: usize) -> f64 {
    let runs = NbpdConfig::new(l_max, n_d, n_ld).nbp_runs();
    avg_cn_degree * m as f64 * l_max as f64 * runs as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_graph::ccsds_128_64;
    use crate::decoder::decode_nbp;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn least_reliable_examples() {
        assert_eq!(least_reliable_vn(&[-3.2, 0.1, 5.0], &[]).unwrap(), 1);
        assert_eq!(least_reliable_vn(&[0.5, 0.5], &[]).unwrap(), 0);
        assert_eq!(least_reliable_vn(&[0.5, -0.5], &[]).unwrap(), 0);
        assert_eq!(least_reliable_vn(&[0.1, 7.0], &[0]).unwrap(), 1);
        assert!(matches!(
            least_reliable_vn(&[0.1, 7.0], &[0, 1]),
            Err(Error::AllExcluded)
        ));
    }

    #[test]
    fn split_examples() {
        let b = BranchState::new(vec![0.2, -1.0]);
        let (p, m) = split_branch(&b, 0).unwrap();
        assert_eq!(p.mu_ch, vec![60.0, -1.0]);
        assert_eq!(m.mu_ch, vec![-60.0, -1.0]);
        assert_eq!(p.decimated, vec![0]);
        assert_eq!(m.decimated, vec![0]);
        assert!(matches!(split_branch(&p, 0), Err(Error::AlreadyDecimated(0))));
        assert_eq!(m.decimation_bits().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn zero_mlp_is_zero() {
        let p = DecimatorParams::zeros(5);
        assert_eq!(mlp_forward(&p, &[1.0, -2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(), 0.0);
        assert!(mlp_forward(&p, &[1.0; 5]).is_err());
    }

    #[test]
    fn one_hot_chain_mlp() {
        // Unit path feature 0 → h1[0] → h2[0] → output, scaled by 3 at the end.
        let mut p = DecimatorParams::zeros(2);
        p.layer1_w[0][0] = 1.0;
        p.layer2_w[0][0] = 1.0;
        p.layer3_w[0][0] = 3.0;
        assert_eq!(mlp_forward(&p, &[2.5, 9.0, -4.0]).unwrap(), 7.5);
        assert_eq!(mlp_forward(&p, &[-2.5, 9.0, -4.0]).unwrap(), 0.0);
        p.layer3_b = -1.0;
        assert_eq!(mlp_forward(&p, &[-2.5, 9.0, -4.0]).unwrap(), -1.0);
    }

    #[test]
    fn mlp_matches_matrix_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = DecimatorParams::random(5, &mut rng);
        for b in p.layer1_b.iter_mut().chain(p.layer2_b.iter_mut()) {
            *b = rng.gen_range(-0.5..0.5);
        }
        p.layer3_b = 0.3;
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-4.0..4.0)).collect();
        // Explicit matrix-vector products.
        let relu = |v: f64| if v > 0.0 { v } else { 0.0 };
        let h1: Vec<f64> = (0..HIDDEN)
            .map(|i| relu(p.layer1_b[i] + (0..6).map(|j| p.layer1_w[i][j] * x[j]).sum::<f64>()))
            .collect();
        let h2: Vec<f64> = (0..HIDDEN)
            .map(|i| relu(p.layer2_b[i] + (0..HIDDEN).map(|j| p.layer2_w[i][j] * h1[j]).sum::<f64>()))
            .collect();
        let out = p.layer3_b + (0..HIDDEN).map(|j| p.layer3_w[0][j] * h2[j]).sum::<f64>();
        assert_abs_diff_eq!(mlp_forward(&p, &x).unwrap(), out, epsilon = 1e-12);
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(count_decimator_params(5), 401);
        assert_eq!(count_decimator_params(1), 337);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = DecimatorParams::random(5, &mut rng);
        assert_eq!(p.to_flat().len(), 401);
        assert_eq!(DecimatorParams::from_flat(5, &p.to_flat()).unwrap(), p);
    }

    #[test]
    fn mlp_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = DecimatorParams::random(3, &mut rng);
        let text = p.to_json().unwrap();
        assert!(text.contains("\"format\": \"nbpd-mlp-v1\""));
        assert!(text.contains("\"layer3_b\""));
        assert_eq!(DecimatorParams::from_json(&text).unwrap(), p);
        let mut broken = p.clone();
        broken.layer2_w.pop();
        assert!(broken.to_json().is_err());
    }

    fn decoded_branch(g: &TannerGraph, mu: Vec<f64>, posterior: Vec<f64>) -> BranchState {
        let mut b = BranchState::new(mu);
        b.last_result = Some(DecodeResult {
            posteriors_per_iteration: vec![posterior],
            final_hard_decision: vec![0; g.n()],
            converged_at: None,
            final_c2v_messages: vec![0.0; g.num_edges()],
        });
        b
    }

    #[test]
    fn learned_decimation_examples() {
        let g = TannerGraph::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let mu = vec![1.0, -0.5, 0.25];
        let b = decoded_branch(&g, mu.clone(), vec![-2.0, 0.0, 3.0]);

        let zero = DecimatorParams::zeros(2);
        assert_eq!(learned_decimate(&g, &zero, &b).unwrap().mu_ch, mu);

        // Constant output −2.5 through the bias; |f| = 2.5.
        let mut p = DecimatorParams::zeros(2);
        p.layer3_b = -2.5;
        let out = learned_decimate(&g, &p, &b).unwrap();
        assert_eq!(out.mu_ch, vec![1.0 - 2.5, -0.5 + 2.5, 0.25 + 2.5]);

        assert!(matches!(
            learned_decimate(&g, &p, &BranchState::new(mu)),
            Err(Error::MissingDecode)
        ));
    }

    #[test]
    fn select_examples() {
        let y = [0.9, -1.1, 0.3];
        assert_eq!(select_candidate(&y, &[vec![0, 1, 0], vec![0, 0, 0]]).unwrap(), 0);
        assert_eq!(select_candidate(&y, &[vec![1, 1, 1]]).unwrap(), 0);
        assert_eq!(
            select_candidate(&y, &[vec![0, 0, 0], vec![0, 1, 0], vec![0, 1, 0]]).unwrap(),
            1
        );
        assert!(matches!(select_candidate(&y, &[]), Err(Error::EmptyCandidates)));
    }

    #[test]
    fn codeword_first_prefers_valid_words() {
        // Repetition code of length 3.
        let g = TannerGraph::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let y = [0.9, -1.1, 0.3];
        let cands = [vec![0, 1, 0], vec![1, 1, 1], vec![0, 0, 0]];
        assert_eq!(select_with(&g, &y, &cands, Selection::Correlation).unwrap(), 0);
        // 000 scores 0.1, 111 scores −0.1.
        assert_eq!(select_with(&g, &y, &cands, Selection::CodewordFirst).unwrap(), 2);
        let invalid = [vec![0, 1, 0], vec![1, 0, 0]];
        assert_eq!(select_with(&g, &y, &invalid, Selection::CodewordFirst).unwrap(), 0);
        assert!(select_with(&g, &y, &[vec![0, 1]], Selection::CodewordFirst).is_err());
    }

    #[test]
    fn complexity_values() {
        assert_eq!(complexity(50, 0, 0, 8.0, 64), 25600.0);
        assert_eq!(complexity(10, 4, 0, 8.0, 64), 158720.0);
        assert_eq!(complexity(10, 4, 4, 8.0, 64), 486400.0);
        // Offset against the printed table rows is d̄_c · m · l_max · n_D.
        assert_eq!(complexity(10, 4, 0, 8.0, 64) - 138240.0, 8.0 * 64.0 * 10.0 * 4.0);
        assert_eq!(complexity(10, 4, 1, 8.0, 64) - 220160.0, 8.0 * 64.0 * 10.0 * 4.0);
        assert_eq!(complexity(10, 4, 4, 8.0, 64) - 465920.0, 8.0 * 64.0 * 10.0 * 4.0);
    }

    fn noisy_frame(seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..128).map(|_| 1.0 + 0.8 * rng.gen_range(-1.7..1.7)).collect();
        let llr = crate::channel::channel_llr(&y, 0.8);
        (y, llr)
    }

    #[test]
    fn degenerate_tree_matches_plain_decode() {
        let g = ccsds_128_64();
        let w = WeightSet::uniform(&g);
        for seed in 0..5 {
            let (y, llr) = noisy_frame(seed);
            let out = nbp_d_decode(&g, &w, None, &llr, &y, NbpdConfig::new(8, 0, 0)).unwrap();
            let plain = decode_nbp(&g, &w, &llr, 8, false).unwrap();
            assert_eq!(out.candidates, vec![plain.final_hard_decision.clone()]);
            assert_eq!(out.branches[0].last_result.as_ref().unwrap(), &plain);
        }
    }

    #[test]
    fn tree_of_depth_two() {
        let g = ccsds_128_64();
        let w = WeightSet::uniform(&g);
        let (y, llr) = noisy_frame(3);
        let out = nbp_d_decode(&g, &w, None, &llr, &y, NbpdConfig::new(5, 2, 0)).unwrap();
        assert_eq!(out.candidates.len(), 4);
        // Branch layout: 0 = (+,+), 1 = (−,+), 2 = (+,−), 3 = (−,−).
        let first = out.branches[0].decimated[0];
        let second_a = out.branches[0].decimated[1];
        let second_b = out.branches[1].decimated[1];
        assert_eq!(out.branches[2].decimated, vec![first, second_a]);
        assert_eq!(out.branches[3].decimated, vec![first, second_b]);
        let signs = |b: &BranchState| b.decimation_bits().map(|(_, s)| s).collect::<Vec<_>>();
        assert_eq!(signs(&out.branches[0]), vec![0, 0]);
        assert_eq!(signs(&out.branches[1]), vec![1, 0]);
        assert_eq!(signs(&out.branches[2]), vec![0, 1]);
        assert_eq!(signs(&out.branches[3]), vec![1, 1]);
    }

    #[test]
    fn learned_stage_needs_params() {
        let g = ccsds_128_64();
        let w = WeightSet::uniform(&g);
        let (y, llr) = noisy_frame(4);
        assert!(nbp_d_decode(&g, &w, None, &llr, &y, NbpdConfig::new(5, 1, 1)).is_err());
        let p = DecimatorParams::zeros(5);
        let with_zero = nbp_d_decode(&g, &w, Some(&p), &llr, &y, NbpdConfig::new(5, 1, 1)).unwrap();
        let without = nbp_d_decode(&g, &w, None, &llr, &y, NbpdConfig::new(5, 1, 0)).unwrap();
        assert_eq!(with_zero.candidates, without.candidates);
    }

    proptest! {
        #[test]
        fn learned_increment_is_exact(
            mu in proptest::collection::vec(-20.0f64..20.0, 3),
            post in proptest::collection::vec(-20.0f64..20.0, 3),
            bias in -10.0f64..10.0,
        ) {
            let g = TannerGraph::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
            let b = decoded_branch(&g, mu.clone(), post.clone());
            let mut p = DecimatorParams::zeros(2);
            p.layer3_b = bias;
            let out = learned_decimate(&g, &p, &b).unwrap();
            for v in 0..3 {
                let delta = out.mu_ch[v] - mu[v];
                prop_assert!((delta.abs() - bias.abs()).abs() < 1e-12);
                prop_assert!(delta == 0.0 || (delta > 0.0) == (post[v] >= 0.0));
            }
        }

        #[test]
        fn selection_is_scale_invariant(
            y in proptest::collection::vec(-3.0f64..3.0, 6),
            words in proptest::collection::vec(proptest::collection::vec(0u8..2, 6), 1..8),
            scale in 0.1f64..50.0,
        ) {
            let scaled: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let a = select_candidate(&y, &words).unwrap();
            let b = select_candidate(&scaled, &words).unwrap();
            let ca = correlation(&y, &words[a]);
            let cb = correlation(&y, &words[b]);
            prop_assert!(a == b || (ca - cb).abs() < 1e-9);
        }
    }
}
