//! Flooding-schedule belief propagation with per-edge weights.
//!
//! Weights are tied over iterations and untied over edges: every variable
//! node has a channel weight, every edge a VN→CN and a CN→VN weight. With all
//! weights equal to one the updates are exactly those of plain sum-product
//! BP. Every message and posterior is saturated at ±[`LLR_SAT`].
//!
//! Summation order is fixed (channel term first, then incoming messages by
//! ascending edge id) so that results are reproducible bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::code_graph::TannerGraph;
use crate::error::{check_len, Error, Result};
use crate::{ATANH_EPS, LLR_SAT};

pub const WEIGHTS_FORMAT: &str = "nbpd-weights-v1";

/// NBP weights, tied over iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    /// Channel weight per variable node.
    pub w_ch: Vec<f64>,
    /// VN→CN weight per edge id.
    pub w_v2c: Vec<f64>,
    /// CN→VN weight per edge id.
    pub w_c2v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightFile {
    format: String,
    n: usize,
    m: usize,
    #[serde(rename = "E")]
    e: usize,
    w_ch: Vec<f64>,
    w_v2c: Vec<f64>,
    w_c2v: Vec<f64>,
}

impl WeightSet {
    /// All weights one: plain BP.
    pub fn uniform(graph: &TannerGraph) -> Self {
        Self {
            w_ch: vec![1.0; graph.n()],
            w_v2c: vec![1.0; graph.num_edges()],
            w_c2v: vec![1.0; graph.num_edges()],
        }
    }

    pub fn validate(&self, graph: &TannerGraph) -> Result<()> {
        check_len("w_ch", graph.n(), self.w_ch.len())?;
        check_len("w_v2c", graph.num_edges(), self.w_v2c.len())?;
        check_len("w_c2v", graph.num_edges(), self.w_c2v.len())?;
        if self.iter().any(|w| !w.is_finite()) {
            return Err(Error::Format("weights must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.w_ch.len() + self.w_v2c.len() + self.w_c2v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat view in the order `w_ch, w_v2c, w_c2v`.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.w_ch
            .iter()
            .chain(&self.w_v2c)
            .chain(&self.w_c2v)
            .copied()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().collect()
    }

    pub fn from_flat(graph: &TannerGraph, flat: &[f64]) -> Result<Self> {
        let (n, e) = (graph.n(), graph.num_edges());
        check_len("flat weight vector", n + 2 * e, flat.len())?;
        Ok(Self {
            w_ch: flat[..n].to_vec(),
            w_v2c: flat[n..n + e].to_vec(),
            w_c2v: flat[n + e..].to_vec(),
        })
    }

    pub fn to_json(&self, graph: &TannerGraph) -> Result<String> {
        self.validate(graph)?;
        let file = WeightFile {
            format: WEIGHTS_FORMAT.into(),
            n: graph.n(),
            m: graph.m(),
            e: graph.num_edges(),
            w_ch: self.w_ch.clone(),
            w_v2c: self.w_v2c.clone(),
            w_c2v: self.w_c2v.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses a weight document and checks it against `graph`.
    pub fn from_json(text: &str, graph: &TannerGraph) -> Result<Self> {
        let file: WeightFile = serde_json::from_str(text)?;
        if file.format != WEIGHTS_FORMAT {
            return Err(Error::Format(format!(
                "expected format {WEIGHTS_FORMAT:?}, found {:?}",
                file.format
            )));
        }
        if (file.n, file.m, file.e) != (graph.n(), graph.m(), graph.num_edges()) {
            return Err(Error::Format(format!(
                "weights are for n={} m={} E={}, graph has n={} m={} E={}",
                file.n,
                file.m,
                file.e,
                graph.n(),
                graph.m(),
                graph.num_edges()
            )));
        }
        let weights = Self {
            w_ch: file.w_ch,
            w_v2c: file.w_v2c,
            w_c2v: file.w_c2v,
        };
        weights.validate(graph)?;
        Ok(weights)
    }

    pub fn save(&self, graph: &TannerGraph, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json(graph)?)?;
        Ok(())
    }

    pub fn load(graph: &TannerGraph, path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, graph)
    }
}

/// Number of NBP weights stored for `graph`: `2E + n`.
pub fn count_weights(graph: &TannerGraph) -> usize {
    2 * graph.num_edges() + graph.n()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Posterior LLRs after each iteration.
    pub posteriors_per_iteration: Vec<Vec<f64>>,
    pub final_hard_decision: Vec<u8>,
    /// First iteration (1-based) whose hard decision has zero syndrome.
    pub converged_at: Option<usize>,
    /// CN→VN messages of the last iteration, indexed by edge id.
    pub final_c2v_messages: Vec<f64>,
}

impl DecodeResult {
    pub fn final_posterior(&self) -> &[f64] {
        self.posteriors_per_iteration
            .last()
            .expect("a decode runs at least one iteration")
    }
}

/// `(1 − sign(llr))/2` with `sign(0) = +1`.
pub fn hard_decision(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&x| u8::from(x < 0.0)).collect()
}

/// `atanh` evaluated on `|x|` with the sign restored, so it is exactly odd
/// (the std implementation is not).
#[inline]
pub fn atanh_odd(x: f64) -> f64 {
    x.abs().atanh().copysign(x)
}

#[inline]
pub(crate) fn saturate(x: f64) -> f64 {
    x.clamp(-LLR_SAT, LLR_SAT)
}

fn check_sizes(graph: &TannerGraph, weights: &WeightSet, mu_ch: Option<&[f64]>) -> Result<()> {
    weights.validate(graph)?;
    if let Some(mu) = mu_ch {
        check_len("channel LLR vector", graph.n(), mu.len())?;
    }
    Ok(())
}

#[inline]
fn vn_node(g: &TannerGraph, w: &WeightSet, mu_ch: &[f64], c2v: &[f64], v: usize, mut emit: impl FnMut(usize, f64)) {
    let base = w.w_ch[v] * mu_ch[v];
    let edges = g.vn_edges(v);
    for e in edges.clone() {
        let mut acc = base;
        for other in edges.clone() {
            if other != e {
                acc += c2v[other];
            }
        }
        emit(e, saturate(w.w_v2c[e] * acc));
    }
}

#[inline]
fn half_tanh(x: f64) -> f64 {
    (0.5 * x).tanh()
}

#[inline]
fn cn_node(g: &TannerGraph, w: &WeightSet, half_tanh: &[f64], c: usize, mut emit: impl FnMut(usize, f64)) {
    let bound = 1.0 - ATANH_EPS;
    let edges = g.cn_edges(c);
    for &e in edges {
        let mut prod = 1.0;
        for &other in edges {
            if other != e {
                prod *= half_tanh[other];
            }
        }
        let arg = prod.clamp(-bound, bound);
        emit(e, saturate(2.0 * w.w_c2v[e] * atanh_odd(arg)));
    }
}

#[inline]
fn posterior_node(g: &TannerGraph, w: &WeightSet, mu_ch: &[f64], c2v: &[f64], v: usize) -> f64 {
    let mut acc = w.w_ch[v] * mu_ch[v];
    for e in g.vn_edges(v) {
        acc += c2v[e];
    }
    saturate(acc)
}

fn vn_update_into(g: &TannerGraph, w: &WeightSet, mu_ch: &[f64], c2v: &[f64], v2c: &mut [f64]) {
    for v in 0..g.n() {
        vn_node(g, w, mu_ch, c2v, v, |e, x| v2c[e] = x);
    }
}

fn cn_update_into(g: &TannerGraph, w: &WeightSet, v2c: &[f64], scratch: &mut [f64], c2v: &mut [f64]) {
    for (t, &x) in scratch.iter_mut().zip(v2c) {
        *t = half_tanh(x);
    }
    for c in 0..g.m() {
        cn_node(g, w, scratch, c, |e, x| c2v[e] = x);
    }
}

fn posterior_into(g: &TannerGraph, w: &WeightSet, mu_ch: &[f64], c2v: &[f64], out: &mut [f64]) {
    for (v, o) in out.iter_mut().enumerate() {
        *o = posterior_node(g, w, mu_ch, c2v, v);
    }
}

/// VN→CN messages: `w_v→c (w_ch μ_ch + Σ_{c'≠c} μ_{c'→v})`.
pub fn vn_update(
    graph: &TannerGraph,
    weights: &WeightSet,
    mu_ch: &[f64],
    c2v: &[f64],
) -> Result<Vec<f64>> {
    check_sizes(graph, weights, Some(mu_ch))?;
    check_len("c2v message vector", graph.num_edges(), c2v.len())?;
    let mut out = vec![0.0; graph.num_edges()];
    vn_update_into(graph, weights, mu_ch, c2v, &mut out);
    Ok(out)
}

/// CN→VN messages: `2 w_c→v atanh(Π_{v'≠v} tanh(μ_{v'→c}/2))`.
pub fn cn_update(graph: &TannerGraph, weights: &WeightSet, v2c: &[f64]) -> Result<Vec<f64>> {
    check_sizes(graph, weights, None)?;
    check_len("v2c message vector", graph.num_edges(), v2c.len())?;
    let mut scratch = vec![0.0; graph.num_edges()];
    let mut out = vec![0.0; graph.num_edges()];
    cn_update_into(graph, weights, v2c, &mut scratch, &mut out);
    Ok(out)
}

/// A-posteriori LLRs: `w_ch μ_ch + Σ_c μ_{c→v}`.
pub fn posterior_llr(
    graph: &TannerGraph,
    weights: &WeightSet,
    mu_ch: &[f64],
    c2v: &[f64],
) -> Result<Vec<f64>> {
    check_sizes(graph, weights, Some(mu_ch))?;
    check_len("c2v message vector", graph.num_edges(), c2v.len())?;
    let mut out = vec![0.0; graph.n()];
    posterior_into(graph, weights, mu_ch, c2v, &mut out);
    Ok(out)
}

/// Reusable NBP decoder owning its message buffers.
///
/// Nodes whose inputs are bitwise unchanged since the previous iteration are
/// not recomputed; their outputs would be identical, so results match the
/// plain flooding schedule exactly.
#[derive(Debug, Clone)]
pub struct NbpDecoder<'a> {
    graph: &'a TannerGraph,
    weights: &'a WeightSet,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    half_tanh: Vec<f64>,
    v2c_changed: Vec<bool>,
    c2v_changed: Vec<bool>,
}

impl<'a> NbpDecoder<'a> {
    pub fn new(graph: &'a TannerGraph, weights: &'a WeightSet) -> Result<Self> {
        check_sizes(graph, weights, None)?;
        let e = graph.num_edges();
        Ok(Self {
            graph,
            weights,
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            half_tanh: vec![0.0; e],
            v2c_changed: vec![true; e],
            c2v_changed: vec![true; e],
        })
    }

    pub fn graph(&self) -> &'a TannerGraph {
        self.graph
    }

    pub fn weights(&self) -> &'a WeightSet {
        self.weights
    }

    /// Runs `l_max` flooding iterations from zero CN→VN messages.
    ///
    /// With `early_exit` the run stops at the first iteration whose hard
    /// decision is a codeword. Without it, exactly `l_max` posteriors are
    /// returned; once the CN→VN messages repeat bit for bit the remaining
    /// iterations are copies and are filled in without recomputation.
    pub fn decode(&mut self, mu_ch: &[f64], l_max: usize, early_exit: bool) -> Result<DecodeResult> {
        check_len("channel LLR vector", self.graph.n(), mu_ch.len())?;
        if l_max == 0 {
            return Err(Error::InvalidParameter(
                "at least one iteration is required".into(),
            ));
        }
        let (g, w) = (self.graph, self.weights);
        self.c2v.iter_mut().for_each(|x| *x = 0.0);
        let mut posteriors: Vec<Vec<f64>> = Vec::with_capacity(l_max);
        let mut converged_at = None;
        let mut hard = vec![0u8; g.n()];

        for iter in 1..=l_max {
            let first = iter == 1;

            for v in 0..g.n() {
                if first || g.vn_edges(v).any(|e| self.c2v_changed[e]) {
                    let (v2c, changed, ht) = (&mut self.v2c, &mut self.v2c_changed, &mut self.half_tanh);
                    vn_node(g, w, mu_ch, &self.c2v, v, |e, x| {
                        changed[e] = first || x.to_bits() != v2c[e].to_bits();
                        if changed[e] {
                            v2c[e] = x;
                            ht[e] = half_tanh(x);
                        }
                    });
                } else {
                    g.vn_edges(v).for_each(|e| self.v2c_changed[e] = false);
                }
            }

            let mut any_c2v_changed = false;
            for c in 0..g.m() {
                if first || g.cn_edges(c).iter().any(|&e| self.v2c_changed[e]) {
                    let (c2v, changed) = (&mut self.c2v, &mut self.c2v_changed);
                    cn_node(g, w, &self.half_tanh, c, |e, x| {
                        changed[e] = first || x.to_bits() != c2v[e].to_bits();
                        if changed[e] {
                            c2v[e] = x;
                            any_c2v_changed = true;
                        }
                    });
                } else {
                    g.cn_edges(c).iter().for_each(|&e| self.c2v_changed[e] = false);
                }
            }

            let post: Vec<f64> = match posteriors.last() {
                Some(prev) if !first => (0..g.n())
                    .map(|v| {
                        if g.vn_edges(v).any(|e| self.c2v_changed[e]) {
                            posterior_node(g, w, mu_ch, &self.c2v, v)
                        } else {
                            prev[v]
                        }
                    })
                    .collect(),
                _ => (0..g.n()).map(|v| posterior_node(g, w, mu_ch, &self.c2v, v)).collect(),
            };

            for (h, &p) in hard.iter_mut().zip(&post) {
                *h = u8::from(p < 0.0);
            }
            if converged_at.is_none() && g.syndrome_ok_unchecked(&hard) {
                converged_at = Some(iter);
            }
            posteriors.push(post);
            if early_exit && converged_at.is_some() {
                break;
            }
            if !first && !any_c2v_changed {
                let last = posteriors.last().cloned().expect("pushed above");
                posteriors.resize(l_max, last);
                break;
            }
        }

        Ok(DecodeResult {
            posteriors_per_iteration: posteriors,
            final_hard_decision: hard,
            converged_at,
            final_c2v_messages: self.c2v.clone(),
        })
    }
}

/// One NBP decode of `mu_ch`; see [`NbpDecoder::decode`].
pub fn decode_nbp(
    graph: &TannerGraph,
    weights: &WeightSet,
    mu_ch: &[f64],
    l_max: usize,
    early_exit: bool,
) -> Result<DecodeResult> {
    NbpDecoder::new(graph, weights)?.decode(mu_ch, l_max, early_exit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_graph::ccsds_128_64;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// One VN (index 1 below) attached to three checks, each check also
    /// holding a private degree-1 neighbour.
    fn star() -> TannerGraph {
        TannerGraph::from_dense(&[
            vec![1, 1, 0, 0],
            vec![0, 1, 1, 0],
            vec![0, 1, 0, 1],
        ])
        .unwrap()
    }

    #[test]
    fn vn_update_examples() {
        let g = star();
        let mut w = WeightSet::uniform(&g);
        let mu = [0.0, 1.0, 0.0, 0.0];
        // VN 1 owns edges 1, 2, 3 (checks 0, 1, 2).
        let mut c2v = vec![0.0; g.num_edges()];
        c2v[2] = 0.5;
        c2v[3] = -0.25;
        let out = vn_update(&g, &w, &mu, &c2v).unwrap();
        assert_abs_diff_eq!(out[1], 1.25, epsilon = 1e-15);

        w.w_ch[1] = 0.5;
        w.w_v2c[1] = 2.0;
        let out = vn_update(&g, &w, &mu, &c2v).unwrap();
        assert_abs_diff_eq!(out[1], 1.5, epsilon = 1e-15);

        let w = WeightSet::uniform(&g);
        let mu = [0.3, -1.2, 2.0, 0.7];
        let out = vn_update(&g, &w, &mu, &vec![0.0; g.num_edges()]).unwrap();
        for (e, &(v, _)) in g.edges().iter().enumerate() {
            assert_eq!(out[e], mu[v]);
        }
    }

    #[test]
    fn cn_update_examples() {
        // One check over three variables.
        let g = TannerGraph::from_dense(&[vec![1, 1, 1]]).unwrap();
        let w = WeightSet::uniform(&g);
        let out = cn_update(&g, &w, &[5.0, 2.0, 2.0]).unwrap();
        let expected = 2.0 * atanh_odd(1.0f64.tanh() * 1.0f64.tanh());
        assert_abs_diff_eq!(out[0], expected, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0], 1.3251, epsilon = 1e-4);

        let out = cn_update(&g, &w, &[0.0, 2.0, -3.0]).unwrap();
        assert_eq!(out[1], 0.0);
        assert_eq!(out[2], 0.0);

        // A saturated neighbour passes the other message through.
        let out = cn_update(&g, &w, &[0.0, LLR_SAT, 1.0]).unwrap();
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-12);
        let out = cn_update(&g, &w, &[0.0, -LLR_SAT, 1.0]).unwrap();
        assert_abs_diff_eq!(out[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn cn_update_guards_atanh() {
        let g = TannerGraph::from_dense(&[vec![1, 1, 1]]).unwrap();
        let w = WeightSet::uniform(&g);
        let out = cn_update(&g, &w, &[LLR_SAT, LLR_SAT, LLR_SAT]).unwrap();
        let cap = 2.0 * (1.0 - ATANH_EPS).atanh();
        for x in out {
            assert!(x.is_finite());
            assert_eq!(x, cap);
        }
    }

    #[test]
    fn posterior_examples() {
        let g = star();
        let mut w = WeightSet::uniform(&g);
        let mu = [0.4, 1.0, -0.2, 0.0];
        let zeros = vec![0.0; g.num_edges()];
        assert_eq!(posterior_llr(&g, &w, &mu, &zeros).unwrap(), mu.to_vec());

        let mut c2v = zeros.clone();
        c2v[1] = 0.5;
        c2v[2] = -0.25;
        c2v[3] = 0.75;
        assert_abs_diff_eq!(posterior_llr(&g, &w, &mu, &c2v).unwrap()[1], 2.0, epsilon = 1e-15);
        w.w_ch[1] = 0.0;
        assert_abs_diff_eq!(posterior_llr(&g, &w, &mu, &c2v).unwrap()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn size_errors() {
        let g = star();
        let w = WeightSet::uniform(&g);
        assert!(vn_update(&g, &w, &[0.0; 3], &vec![0.0; g.num_edges()]).is_err());
        assert!(cn_update(&g, &w, &[0.0; 2]).is_err());
        assert!(decode_nbp(&g, &w, &[0.0; 4], 0, false).is_err());
        let short = WeightSet {
            w_ch: vec![1.0; 3],
            ..WeightSet::uniform(&g)
        };
        assert!(decode_nbp(&g, &short, &[0.0; 4], 3, false).is_err());
    }

    #[test]
    fn noiseless_zero_word_converges_immediately() {
        let g = ccsds_128_64();
        let w = WeightSet::uniform(&g);
        let r = decode_nbp(&g, &w, &vec![8.0; 128], 20, true).unwrap();
        assert_eq!(r.converged_at, Some(1));
        assert_eq!(r.posteriors_per_iteration.len(), 1);
        assert!(r.final_hard_decision.iter().all(|&b| b == 0));

        let r = decode_nbp(&g, &w, &vec![8.0; 128], 20, false).unwrap();
        assert_eq!(r.posteriors_per_iteration.len(), 20);
        assert_eq!(r.converged_at, Some(1));
    }

    #[test]
    fn weight_counts() {
        assert_eq!(count_weights(&ccsds_128_64()), 1152);
        let toy = TannerGraph::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        assert_eq!(count_weights(&toy), 11);
        assert_eq!(WeightSet::uniform(&toy).len(), 11);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g = star();
        let mut w = WeightSet::uniform(&g);
        w.w_c2v[2] = 0.75;
        let text = w.to_json(&g).unwrap();
        assert!(text.contains("\"format\": \"nbpd-weights-v1\""));
        assert!(text.contains("\"E\": 6"));
        assert_eq!(WeightSet::from_json(&text, &g).unwrap(), w);

        let other = TannerGraph::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        assert!(WeightSet::from_json(&text, &other).is_err());
        let wrong = text.replace("nbpd-weights-v1", "nbpd-weights-v0");
        assert!(WeightSet::from_json(&wrong, &g).is_err());
    }

    #[test]
    fn hard_decision_sign_zero_is_bit_zero() {
        assert_eq!(hard_decision(&[0.0, -0.0, -1e-300, 2.0]), vec![0, 0, 1, 0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn decode_is_odd_and_bounded(
            llr in proptest::collection::vec(-12.0f64..12.0, 128),
            weights in proptest::collection::vec(0.3f64..1.7, 1152),
        ) {
            let g = ccsds_128_64();
            let w = WeightSet::from_flat(&g, &weights).unwrap();
            let neg: Vec<f64> = llr.iter().map(|x| -x).collect();
            let a = decode_nbp(&g, &w, &llr, 6, false).unwrap();
            let b = decode_nbp(&g, &w, &neg, 6, false).unwrap();
            for (pa, pb) in a.posteriors_per_iteration.iter().zip(&b.posteriors_per_iteration) {
                for (x, y) in pa.iter().zip(pb) {
                    prop_assert_eq!(*x, -*y);
                    prop_assert!(x.is_finite() && x.abs() <= LLR_SAT);
                }
            }
            for (x, y) in a.final_c2v_messages.iter().zip(&b.final_c2v_messages) {
                prop_assert_eq!(*x, -*y);
            }
        }
    }
}
