//! Scalar reverse-mode differentiation on a flat tape.
//!
//! Every operation appends one node holding its value; operands always have
//! smaller indices than the node itself, so a single reverse sweep over the
//! node list visits each node after all of its consumers.

use crate::{ATANH_EPS, LLR_SAT};

use crate::decoder::atanh_odd;

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// Multiplication by a constant; also used for detached sign gates.
    Scale(Var, f64),
    Tanh(Var),
    /// `atanh` of the argument clipped to `±(1 − ATANH_EPS)`.
    AtanhClip(Var),
    /// Clamp to `±LLR_SAT`.
    Saturate(Var),
    Abs(Var),
    Relu(Var),
    /// `ln(1 + e^x)`.
    Softplus(Var),
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<f64>,
    /// Leaves that are trainable, with their position in the gradient vector.
    params: Vec<(Var, usize)>,
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        Self {
            ops: Vec::with_capacity(nodes),
            values: Vec::with_capacity(nodes),
            params: Vec::new(),
        }
    }

    /// Drops all nodes, keeping the allocations.
    pub fn clear(&mut self) {
        self.ops.clear();
        self.values.clear();
        self.params.clear();
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, v: Var) -> f64 {
        self.values[v.index()]
    }

    pub fn values(&self, vars: &[Var]) -> Vec<f64> {
        vars.iter().map(|&v| self.value(v)).collect()
    }

    fn push(&mut self, op: Op, value: f64) -> Var {
        let id = Var(u32::try_from(self.ops.len()).expect("tape exceeds u32 nodes"));
        self.ops.push(op);
        self.values.push(value);
        id
    }

    /// A leaf that receives no gradient.
    pub fn constant(&mut self, value: f64) -> Var {
        self.push(Op::Leaf, value)
    }

    /// A trainable leaf whose gradient lands at `slot` of the gradient vector.
    pub fn param(&mut self, value: f64, slot: usize) -> Var {
        let v = self.push(Op::Leaf, value);
        self.params.push((v, slot));
        v
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) + self.value(b);
        self.push(Op::Add(a, b), value)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) - self.value(b);
        self.push(Op::Sub(a, b), value)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) * self.value(b);
        self.push(Op::Mul(a, b), value)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a) * c;
        self.push(Op::Scale(a, c), value)
    }

    /// Multiplies by a sign that is treated as a constant.
    pub fn sign_gate(&mut self, a: Var, sign: f64) -> Var {
        self.scale(a, sign)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).tanh();
        self.push(Op::Tanh(a), value)
    }

    pub fn atanh_clip(&mut self, a: Var) -> Var {
        let bound = 1.0 - ATANH_EPS;
        let value = atanh_odd(self.value(a).clamp(-bound, bound));
        self.push(Op::AtanhClip(a), value)
    }

    pub fn saturate(&mut self, a: Var) -> Var {
        let value = self.value(a).clamp(-LLR_SAT, LLR_SAT);
        self.push(Op::Saturate(a), value)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let value = self.value(a).abs();
        self.push(Op::Abs(a), value)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let x = self.value(a);
        self.push(Op::Relu(a), if x > 0.0 { x } else { 0.0 })
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let value = softplus(self.value(a));
        self.push(Op::Softplus(a), value)
    }

    /// Left-to-right sum; `terms` must be non-empty.
    pub fn sum(&mut self, terms: &[Var]) -> Var {
        let (&first, rest) = terms.split_first().expect("sum of no terms");
        rest.iter().fold(first, |acc, &t| self.add(acc, t))
    }

    /// `bias + Σ_j weights[j] · inputs[j]`, accumulated left to right.
    pub fn affine(&mut self, weights: &[Var], inputs: &[Var], bias: Var) -> Var {
        weights
            .iter()
            .zip(inputs)
            .fold(bias, |acc, (&w, &x)| {
                let prod = self.mul(w, x);
                self.add(acc, prod)
            })
    }

    /// Adjoint of every node with respect to `output`.
    pub fn adjoints(&self, output: Var) -> Vec<f64> {
        let mut adj = vec![0.0; output.index() + 1];
        adj[output.index()] = 1.0;
        for i in (0..=output.index()).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let out = self.values[i];
            match self.ops[i] {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    adj[a.index()] += g;
                    adj[b.index()] += g;
                }
                Op::Sub(a, b) => {
                    adj[a.index()] += g;
                    adj[b.index()] -= g;
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(a), self.value(b));
                    adj[a.index()] += g * vb;
                    adj[b.index()] += g * va;
                }
                Op::Scale(a, c) => adj[a.index()] += g * c,
                Op::Tanh(a) => adj[a.index()] += g * (1.0 - out * out),
                Op::AtanhClip(a) => {
                    let x = self.value(a);
                    if x.abs() < 1.0 - ATANH_EPS {
                        adj[a.index()] += g / (1.0 - x * x);
                    }
                }
                Op::Saturate(a) => {
                    if self.value(a).abs() < LLR_SAT {
                        adj[a.index()] += g;
                    }
                }
                Op::Abs(a) => {
                    let sign = if self.value(a) >= 0.0 { 1.0 } else { -1.0 };
                    adj[a.index()] += g * sign;
                }
                Op::Relu(a) => {
                    if self.value(a) > 0.0 {
                        adj[a.index()] += g;
                    }
                }
                Op::Softplus(a) => adj[a.index()] += g * sigmoid(self.value(a)),
            }
        }
        adj
    }

    /// Gradient of `output` with respect to the trainable leaves, scattered
    /// into a vector of length `num_slots`.
    pub fn gradient(&self, output: Var, num_slots: usize) -> Vec<f64> {
        let adj = self.adjoints(output);
        let mut grad = vec![0.0; num_slots];
        for &(v, slot) in &self.params {
            if v.index() < adj.len() {
                grad[slot] += adj[v.index()];
            }
        }
        grad
    }
}
