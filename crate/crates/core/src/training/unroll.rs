//! The decoders of `decoder` and `decimation` replayed on a [`Tape`].
//!
//! Every primitive is applied in the same order and with the same operands
//! as the plain implementations, so forward values agree bit for bit.

use crate::code_graph::TannerGraph;
use crate::decimation::{least_reliable_vn, learned_decimate, split_branch, BranchState, DecimatorParams, NbpdConfig};
use crate::decoder::{NbpDecoder, WeightSet};
use crate::error::{check_len, Error, Result};
use crate::LLR_SAT;

use super::tape::{softplus, Tape, Var};

/// Which parameters are recorded as trainable leaves.
///
/// Gradient slots hold the weights first (in [`WeightSet::to_flat`] order)
/// and then the decimator (in [`DecimatorParams::to_flat`] order), skipping
/// whichever group is frozen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trainable {
    Weights,
    Decimator,
    All,
}

impl Trainable {
    fn weights(self) -> bool {
        matches!(self, Self::Weights | Self::All)
    }

    fn decimator(self) -> bool {
        matches!(self, Self::Decimator | Self::All)
    }
}

/// One VN layer: either recorded on the tape or, when it depends on no
/// trainable parameter, computed directly.
#[derive(Debug, Clone)]
pub enum Layer {
    Tape(Vec<Var>),
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Unrolled {
    pub tape: Tape,
    /// Posterior LLRs of every VN layer, in decoding order.
    pub layers: Vec<Layer>,
    pub num_slots: usize,
}

impl Unrolled {
    pub fn posteriors(&self) -> Vec<Vec<f64>> {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Tape(vars) => self.tape.values(vars),
                Layer::Fixed(vals) => vals.clone(),
            })
            .collect()
    }

    /// Records the multiloss against `bits` and returns its node.
    pub fn loss(&mut self, bits: &[u8]) -> Result<Var> {
        let n = bits.len();
        let total = (self.layers.len() * n) as f64;
        if total == 0.0 {
            return Err(Error::InvalidParameter("multiloss over no terms".into()));
        }
        let mut fixed = 0.0;
        let mut terms = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Fixed(vals) => {
                    check_len("posterior layer", n, vals.len())?;
                    fixed += vals.iter().zip(bits).map(|(&mu, &b)| bce(mu, b)).sum::<f64>();
                }
                Layer::Tape(vars) => {
                    check_len("posterior layer", n, vars.len())?;
                    for (&mu, &b) in vars.iter().zip(bits) {
                        let arg = if b == 0 { self.tape.scale(mu, -1.0) } else { mu };
                        terms.push(self.tape.softplus(arg));
                    }
                }
            }
        }
        terms.push(self.tape.constant(fixed));
        let sum = self.tape.sum(&terms);
        Ok(self.tape.scale(sum, 1.0 / total))
    }

    pub fn gradient(&self, output: Var) -> Vec<f64> {
        self.tape.gradient(output, self.num_slots)
    }
}

/// Cross-entropy of bit `b` under an LLR `mu` (positive favours 0).
fn bce(mu: f64, b: u8) -> f64 {
    if b == 0 {
        softplus(-mu)
    } else {
        softplus(mu)
    }
}

/// Mean bitwise cross-entropy over every layer and bit.
pub fn multiloss(layers: &[Vec<f64>], bits: &[u8]) -> Result<f64> {
    if layers.is_empty() || bits.is_empty() {
        return Err(Error::InvalidParameter("multiloss over no terms".into()));
    }
    let mut sum = 0.0;
    for layer in layers {
        check_len("posterior layer", bits.len(), layer.len())?;
        sum += layer.iter().zip(bits).map(|(&mu, &b)| bce(mu, b)).sum::<f64>();
    }
    Ok(sum / (layers.len() * bits.len()) as f64)
}

struct WeightVars {
    w_ch: Vec<Var>,
    w_v2c: Vec<Var>,
    w_c2v: Vec<Var>,
}

struct MlpVars {
    l1: Vec<(Vec<Var>, Var)>,
    l2: Vec<(Vec<Var>, Var)>,
    l3: (Vec<Var>, Var),
}

struct Builder<'a> {
    g: &'a TannerGraph,
    weights: &'a WeightSet,
    trainable: Trainable,
    l_max: usize,
    tape: Tape,
    wv: WeightVars,
    zero: Var,
    layers: Vec<Layer>,
}

struct DecodeOut {
    c2v: Vec<Var>,
    post: Vec<f64>,
}

impl<'a> Builder<'a> {
    fn new(g: &'a TannerGraph, weights: &'a WeightSet, trainable: Trainable, l_max: usize) -> Self {
        let mut tape = Tape::with_capacity(16 * g.num_edges() * l_max);
        let mut slot = 0;
        let mut leaf = |tape: &mut Tape, w: f64| {
            if trainable.weights() {
                slot += 1;
                tape.param(w, slot - 1)
            } else {
                tape.constant(w)
            }
        };
        let w_ch = weights.w_ch.iter().map(|&w| leaf(&mut tape, w)).collect();
        let w_v2c = weights.w_v2c.iter().map(|&w| leaf(&mut tape, w)).collect();
        let w_c2v = weights.w_c2v.iter().map(|&w| leaf(&mut tape, w)).collect();
        let zero = tape.constant(0.0);
        Self {
            g,
            weights,
            trainable,
            l_max,
            tape,
            wv: WeightVars { w_ch, w_v2c, w_c2v },
            zero,
            layers: Vec::new(),
        }
    }

    fn weight_slots(&self) -> usize {
        if self.trainable.weights() {
            self.weights.len()
        } else {
            0
        }
    }

    fn mlp_vars(&mut self, params: &DecimatorParams) -> MlpVars {
        let base = self.weight_slots();
        let train = self.trainable.decimator();
        let flat = params.to_flat();
        let mut it = flat.into_iter().enumerate();
        let tape = &mut self.tape;
        let mut next = || {
            let (i, w) = it.next().expect("flat length matches layout");
            if train {
                tape.param(w, base + i)
            } else {
                tape.constant(w)
            }
        };
        let mut rows = |count: usize, cols: usize| -> Vec<Vec<Var>> {
            (0..count).map(|_| (0..cols).map(|_| next()).collect()).collect()
        };
        let w1 = rows(params.layer1_w.len(), params.input_len());
        let b1 = rows(1, w1.len()).remove(0);
        let w2 = rows(params.layer2_w.len(), w1.len());
        let b2 = rows(1, w2.len()).remove(0);
        let w3 = rows(1, w2.len()).remove(0);
        let b3 = rows(1, 1)[0][0];
        MlpVars {
            l1: w1.into_iter().zip(b1).collect(),
            l2: w2.into_iter().zip(b2).collect(),
            l3: (w3, b3),
        }
    }

    /// `l_max` flooding iterations from zero CN→VN messages.
    fn decode(&mut self, mu: &[Var], on_tape: bool) -> Result<DecodeOut> {
        if !on_tape {
            let mu_vals = self.tape.values(mu);
            let result = NbpDecoder::new(self.g, self.weights)?.decode(&mu_vals, self.l_max, false)?;
            let c2v = result
                .final_c2v_messages
                .iter()
                .map(|&x| self.tape.constant(x))
                .collect();
            let post = result.final_posterior().to_vec();
            self.layers.extend(result.posteriors_per_iteration.into_iter().map(Layer::Fixed));
            return Ok(DecodeOut { c2v, post });
        }
        let (g, e) = (self.g, self.g.num_edges());
        let mut c2v = vec![self.zero; e];
        let mut v2c = vec![self.zero; e];
        let mut half_tanh = vec![self.zero; e];
        let mut post = Vec::new();
        for _ in 0..self.l_max {
            let t = &mut self.tape;
            for v in 0..g.n() {
                let base = t.mul(self.wv.w_ch[v], mu[v]);
                let edges = g.vn_edges(v);
                for ed in edges.clone() {
                    let mut acc = base;
                    for other in edges.clone() {
                        if other != ed {
                            acc = t.add(acc, c2v[other]);
                        }
                    }
                    let weighted = t.mul(self.wv.w_v2c[ed], acc);
                    v2c[ed] = t.saturate(weighted);
                }
            }
            for (h, &x) in half_tanh.iter_mut().zip(&v2c) {
                let half = t.scale(x, 0.5);
                *h = t.tanh(half);
            }
            for c in 0..g.m() {
                let edges = g.cn_edges(c);
                for &ed in edges {
                    let mut prod: Option<Var> = None;
                    for &other in edges {
                        if other != ed {
                            prod = Some(match prod {
                                None => half_tanh[other],
                                Some(p) => t.mul(p, half_tanh[other]),
                            });
                        }
                    }
                    let prod = prod.unwrap_or_else(|| t.constant(1.0));
                    let at = t.atanh_clip(prod);
                    let two_w = t.scale(self.wv.w_c2v[ed], 2.0);
                    let msg = t.mul(two_w, at);
                    c2v[ed] = t.saturate(msg);
                }
            }
            post = (0..g.n())
                .map(|v| {
                    let mut acc = t.mul(self.wv.w_ch[v], mu[v]);
                    for ed in g.vn_edges(v) {
                        acc = t.add(acc, c2v[ed]);
                    }
                    t.saturate(acc)
                })
                .collect();
            self.layers.push(Layer::Tape(post.clone()));
        }
        let post = self.tape.values(&post);
        Ok(DecodeOut { c2v, post })
    }

    fn mlp(&mut self, m: &MlpVars, features: &[Var]) -> Var {
        let t = &mut self.tape;
        let h1: Vec<Var> = m
            .l1
            .iter()
            .map(|(w, b)| {
                let z = t.affine(w, features, *b);
                t.relu(z)
            })
            .collect();
        let h2: Vec<Var> = m
            .l2
            .iter()
            .map(|(w, b)| {
                let z = t.affine(w, &h1, *b);
                t.relu(z)
            })
            .collect();
        t.affine(&m.l3.0, &h2, m.l3.1)
    }

    fn learned_decimate(&mut self, m: &MlpVars, d_max: usize, mu: &[Var], out: &DecodeOut) -> Vec<Var> {
        let g = self.g;
        (0..g.n())
            .map(|v| {
                let mut features = vec![self.zero; 1 + d_max];
                features[0] = mu[v];
                for (slot, e) in features[1..].iter_mut().zip(g.vn_edges(v)) {
                    *slot = out.c2v[e];
                }
                let f = self.mlp(m, &features);
                let t = &mut self.tape;
                let nudge = t.abs(f);
                let sign = if out.post[v] < 0.0 { -1.0 } else { 1.0 };
                let gated = t.sign_gate(nudge, sign);
                let sum = t.add(mu[v], gated);
                t.saturate(sum)
            })
            .collect()
    }
}

fn check_genie(n: usize, genie: &[u8]) -> Result<()> {
    check_len("genie codeword", n, genie.len())?;
    match genie.iter().position(|&b| b > 1) {
        Some(index) => Err(Error::NonBinary {
            index,
            value: genie[index],
        }),
        None => Ok(()),
    }
}

fn check_params<'p>(
    graph: &TannerGraph,
    params: Option<&'p DecimatorParams>,
    cfg: &NbpdConfig,
) -> Result<Option<&'p DecimatorParams>> {
    if cfg.n_ld == 0 {
        return Ok(None);
    }
    let p = params.ok_or_else(|| {
        Error::InvalidParameter("learned decimation requires decimator parameters".into())
    })?;
    p.validate()?;
    if p.d_max < graph.max_vn_degree() {
        return Err(Error::InvalidParameter(format!(
            "decimator expects degree ≤ {}, graph has {}",
            p.d_max,
            graph.max_vn_degree()
        )));
    }
    Ok(Some(p))
}

/// Unrolls the genie path of `NBP-D(cfg)` on a tape: every list-stage split
/// keeps the sign of the true bit `genie[v]`, then the learned stages and the
/// final decode follow. With `n_D = n_LD = 0` this is plain NBP.
///
/// Decodes that depend on no trainable parameter are evaluated off the tape
/// and appear as [`Layer::Fixed`].
pub fn forward_with_tape(
    graph: &TannerGraph,
    weights: &WeightSet,
    params: Option<&DecimatorParams>,
    mu_ch: &[f64],
    genie: &[u8],
    cfg: &NbpdConfig,
    trainable: Trainable,
) -> Result<Unrolled> {
    weights.validate(graph)?;
    cfg.validate(graph.n())?;
    check_len("channel LLR vector", graph.n(), mu_ch.len())?;
    check_genie(graph.n(), genie)?;
    let params = check_params(graph, params, cfg)?;
    if trainable == Trainable::Decimator && params.is_none() {
        return Err(Error::InvalidParameter(
            "no decimator parameters to differentiate".into(),
        ));
    }

    let mut b = Builder::new(graph, weights, trainable, cfg.l_max);
    let mut mu: Vec<Var> = mu_ch.iter().map(|&x| b.tape.constant(x)).collect();
    // True once `mu` depends on a trainable parameter.
    let mut live = trainable.weights();

    let mut decimated = Vec::with_capacity(cfg.n_d);
    for _ in 0..cfg.n_d {
        let out = b.decode(&mu, live)?;
        let v = least_reliable_vn(&out.post, &decimated)?;
        decimated.push(v);
        mu[v] = b.tape.constant(if genie[v] == 0 { LLR_SAT } else { -LLR_SAT });
    }

    let mut num_slots = b.weight_slots();
    if let Some(p) = params {
        let m = b.mlp_vars(p);
        if trainable.decimator() {
            num_slots += p.num_params();
        }
        for _ in 0..cfg.n_ld {
            let out = b.decode(&mu, live)?;
            mu = b.learned_decimate(&m, p.d_max, &mu, &out);
            live |= trainable.decimator();
        }
    }
    b.decode(&mu, live)?;

    Ok(Unrolled {
        tape: b.tape,
        layers: b.layers,
        num_slots,
    })
}

/// Plain NBP(`l_max`) on a tape with the weights trainable.
pub fn nbp_forward_with_tape(
    graph: &TannerGraph,
    weights: &WeightSet,
    mu_ch: &[f64],
    l_max: usize,
) -> Result<Unrolled> {
    let zero = vec![0; graph.n()];
    forward_with_tape(
        graph,
        weights,
        None,
        mu_ch,
        &zero,
        &NbpdConfig::new(l_max, 0, 0),
        Trainable::Weights,
    )
}

/// The genie path evaluated with the plain decoders, returning every VN
/// layer in decoding order.
pub fn genie_path(
    graph: &TannerGraph,
    weights: &WeightSet,
    params: Option<&DecimatorParams>,
    mu_ch: &[f64],
    genie: &[u8],
    cfg: &NbpdConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate(graph.n())?;
    check_len("channel LLR vector", graph.n(), mu_ch.len())?;
    check_genie(graph.n(), genie)?;
    let params = check_params(graph, params, cfg)?;
    let mut decoder = NbpDecoder::new(graph, weights)?;
    let mut layers = Vec::new();
    let mut branch = BranchState::new(mu_ch.to_vec());
    for _ in 0..cfg.n_d {
        let result = decoder.decode(&branch.mu_ch, cfg.l_max, false)?;
        let v = least_reliable_vn(result.final_posterior(), &branch.decimated)?;
        layers.extend(result.posteriors_per_iteration);
        let (plus, minus) = split_branch(&branch, v)?;
        branch = if genie[v] == 0 { plus } else { minus };
    }
    if let Some(p) = params {
        for _ in 0..cfg.n_ld {
            let result = decoder.decode(&branch.mu_ch, cfg.l_max, false)?;
            layers.extend(result.posteriors_per_iteration.iter().cloned());
            branch.last_result = Some(result);
            branch = learned_decimate(graph, p, &branch)?;
        }
    }
    let result = decoder.decode(&branch.mu_ch, cfg.l_max, false)?;
    layers.extend(result.posteriors_per_iteration);
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_llr, frame_rng, modulate, transmit_with};
    use crate::code_graph::ccsds_128_64;
    use crate::decoder::decode_nbp;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn star() -> TannerGraph {
        TannerGraph::from_dense(&[vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 1, 0, 1]]).unwrap()
    }

    fn noisy(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let y = transmit_with(&vec![1.0; n], sigma, &mut frame_rng(seed, 0)).unwrap();
        y.llr
    }

    #[test]
    fn multiloss_examples() {
        let sat = vec![vec![LLR_SAT; 4]];
        assert!(multiloss(&sat, &[0; 4]).unwrap() < 1e-20);
        assert_abs_diff_eq!(multiloss(&[vec![0.0]], &[0]).unwrap(), 2f64.ln(), epsilon = 1e-15);
        let wrong = vec![vec![-LLR_SAT; 4]];
        assert_abs_diff_eq!(multiloss(&wrong, &[0; 4]).unwrap(), 60.0, epsilon = 1e-12);
        assert_abs_diff_eq!(multiloss(&[vec![3.0]], &[1]).unwrap(), softplus(3.0), epsilon = 1e-15);
        assert!(multiloss(&[vec![0.0; 3]], &[0; 4]).is_err());
        assert!(multiloss(&[], &[0; 4]).is_err());
    }

    #[test]
    fn tape_matches_plain_decoder_bitwise() {
        let g = ccsds_128_64();
        let mut rng = frame_rng(3, 0);
        let mut w = WeightSet::uniform(&g);
        for x in w.w_ch.iter_mut().chain(&mut w.w_v2c).chain(&mut w.w_c2v) {
            *x = rng.gen_range(0.5..1.5);
        }
        for frame in 0..10 {
            let mu = noisy(g.n(), 0.8, 100 + frame);
            let plain = decode_nbp(&g, &w, &mu, 5, false).unwrap();
            let un = nbp_forward_with_tape(&g, &w, &mu, 5).unwrap();
            let post = un.posteriors();
            assert_eq!(post.len(), 5);
            for (a, b) in post.iter().zip(&plain.posteriors_per_iteration) {
                for (x, y) in a.iter().zip(b) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn tape_grows_linearly_in_iterations() {
        let g = ccsds_128_64();
        let w = WeightSet::uniform(&g);
        let mu = noisy(g.n(), 0.8, 1);
        let len = |l| nbp_forward_with_tape(&g, &w, &mu, l).unwrap().tape.len();
        let (a, b, c) = (len(1), len(2), len(3));
        assert_eq!(b - a, c - b);
        assert!(b > a);
    }

    #[test]
    fn loss_on_tape_matches_multiloss() {
        let g = star();
        let w = WeightSet::uniform(&g);
        let mu = [0.4, -0.3, 1.2, 0.9];
        let bits = [0, 1, 0, 0];
        let mut un = nbp_forward_with_tape(&g, &w, &mu, 3).unwrap();
        let node = un.loss(&bits).unwrap();
        let direct = multiloss(&un.posteriors(), &bits).unwrap();
        assert_abs_diff_eq!(un.tape.value(node), direct, epsilon = 1e-14);
    }

    #[test]
    fn saturated_weight_has_zero_gradient() {
        // Channel LLR far beyond saturation: the v→c messages clip, so the
        // v→c weights of the degree-1 VNs receive no gradient.
        let g = star();
        let mut w = WeightSet::uniform(&g);
        w.w_v2c.iter_mut().for_each(|x| *x = 10.0);
        let mu = [30.0, 30.0, 30.0, 30.0];
        let mut un = nbp_forward_with_tape(&g, &w, &mu, 2).unwrap();
        let loss = un.loss(&[0; 4]).unwrap();
        let grad = un.gradient(loss);
        let n = g.n();
        for v in [0, 2, 3] {
            let e = g.vn_edges(v).start;
            assert_eq!(grad[n + e], 0.0);
        }
    }

    #[test]
    fn genie_path_on_tape_matches_plain() {
        let g = ccsds_128_64();
        let w = WeightSet::uniform(&g);
        let p = DecimatorParams::random(g.max_vn_degree(), &mut frame_rng(9, 0));
        let cfg = NbpdConfig::new(4, 2, 1);
        for frame in 0..3 {
            let bits = vec![0u8; g.n()];
            let mu = noisy(g.n(), 0.9, 40 + frame);
            let plain = genie_path(&g, &w, Some(&p), &mu, &bits, &cfg).unwrap();
            assert_eq!(plain.len(), 4 * 4);
            for trainable in [Trainable::All, Trainable::Decimator, Trainable::Weights] {
                let un = forward_with_tape(&g, &w, Some(&p), &mu, &bits, &cfg, trainable).unwrap();
                for (a, b) in un.posteriors().iter().zip(&plain) {
                    for (x, y) in a.iter().zip(b) {
                        assert_eq!(x.to_bits(), y.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn genie_path_is_a_tree_branch() {
        let g = ccsds_128_64();
        let w = WeightSet::uniform(&g);
        let cfg = NbpdConfig::new(5, 3, 0);
        let bits = vec![0u8; g.n()];
        let y: Vec<f64> = modulate(&bits).unwrap();
        let mut rng = frame_rng(5, 0);
        let y: Vec<f64> = y.iter().map(|s| s + 0.9 * rng.gen_range(-1.5..1.5)).collect();
        let mu = channel_llr(&y, 0.9);
        let layers = genie_path(&g, &w, None, &mu, &bits, &cfg).unwrap();
        let out = crate::decimation::nbp_d_decode(&g, &w, None, &mu, &y, cfg).unwrap();
        let branch = out
            .branches
            .iter()
            .find(|b| b.decimation_bits().all(|(v, bit)| bit == bits[v]))
            .unwrap();
        let last = branch.last_result.as_ref().unwrap();
        assert_eq!(layers.last().unwrap(), last.final_posterior());
    }

    #[test]
    fn zero_mlp_is_a_no_op() {
        let g = ccsds_128_64();
        let w = WeightSet::uniform(&g);
        let bits = vec![0u8; g.n()];
        let mu = noisy(g.n(), 0.9, 77);
        let zero = DecimatorParams::zeros(g.max_vn_degree());
        let with = genie_path(&g, &w, Some(&zero), &mu, &bits, &NbpdConfig::new(4, 2, 1)).unwrap();
        let without = genie_path(&g, &w, None, &mu, &bits, &NbpdConfig::new(4, 2, 0)).unwrap();
        assert_eq!(with[with.len() - 4..], without[without.len() - 4..]);
    }

    #[test]
    fn argument_errors() {
        let g = star();
        let w = WeightSet::uniform(&g);
        let mu = [1.0; 4];
        let cfg = NbpdConfig::new(2, 1, 1);
        assert!(forward_with_tape(&g, &w, None, &mu, &[0; 4], &cfg, Trainable::All).is_err());
        assert!(forward_with_tape(&g, &w, None, &mu, &[0; 3], &NbpdConfig::new(2, 0, 0), Trainable::Weights).is_err());
        assert!(forward_with_tape(&g, &w, None, &mu, &[0, 2, 0, 0], &NbpdConfig::new(2, 0, 0), Trainable::Weights).is_err());
        assert!(forward_with_tape(&g, &w, None, &mu, &[0; 4], &NbpdConfig::new(2, 0, 0), Trainable::Decimator).is_err());
        let small = DecimatorParams::zeros(1);
        assert!(genie_path(&g, &w, Some(&small), &mu, &[0; 4], &cfg).is_err());
    }
}
