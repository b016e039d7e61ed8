//! Row-major matrices and a reverse-mode tape over the handful of operations
//! the transformer needs.

use crate::float::{gemm, Float, View};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Float> Tensor<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data does not match its shape");
        Tensor { rows, cols, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn add_assign(&mut self, other: &Tensor<T>) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// A named trainable matrix.
#[derive(Clone, Debug)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
}

#[derive(Clone, Debug, Default)]
pub struct Params<T> {
    pub list: Vec<Param<T>>,
}

impl<T: Float> Params<T> {
    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> Var {
        self.list.push(Param { name: name.into(), value });
        Var::P(self.list.len() - 1)
    }

    pub fn count(&self) -> usize {
        self.list.iter().map(|p| p.value.len()).sum()
    }

    pub fn zeros_like(&self) -> Vec<Tensor<T>> {
        self.list.iter().map(|p| Tensor::zeros(p.value.rows, p.value.cols)).collect()
    }
}

/// Gradients, one tensor per parameter.
pub type Grads<T> = Vec<Tensor<T>>;

/// A handle to a parameter or to a value computed on a tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    P(usize),
    N(usize),
}

/// Batch layout of a multi-head attention call. Queries are `batch * tq`
/// rows, keys and values `batch * tk` rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttnShape {
    pub batch: usize,
    pub tq: usize,
    pub tk: usize,
    pub heads: usize,
    pub causal: bool,
}

enum Op<T> {
    Input,
    Gather { table: Var, ids: Vec<Option<u32>> },
    MatMul { a: Var, b: Var, trans_b: bool },
    AddBias { x: Var, bias: Var },
    Add { a: Var, b: Var },
    Gelu { x: Var },
    LayerNorm { x: Var, gain: Var, bias: Var, xhat: Vec<T>, rstd: Vec<T> },
    Attention { q: Var, k: Var, v: Var, shape: AttnShape, probs: Vec<T> },
    WeightedCe { logits: Var, targets: Vec<u32>, weights: Vec<T>, lse: Vec<T>, wsum: T },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

pub const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_K: f64 = 0.044_715;

pub struct Tape<'p, T> {
    params: &'p Params<T>,
    nodes: Vec<Node<T>>,
    /// When false, intermediate state needed only for backward is not kept.
    pub record: bool,
}

impl<'p, T: Float> Tape<'p, T> {
    pub fn new(params: &'p Params<T>, record: bool) -> Self {
        Tape { params, nodes: Vec::new(), record }
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        match v {
            Var::P(i) => &self.params.list[i].value,
            Var::N(i) => &self.nodes[i].value,
        }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var::N(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Input)
    }

    /// Rows of `table` picked by id; `None` gives a zero row.
    pub fn gather(&mut self, table: Var, ids: Vec<Option<u32>>) -> Var {
        let t = self.value(table);
        let mut out = Tensor::zeros(ids.len(), t.cols);
        for (r, id) in ids.iter().enumerate() {
            if let Some(id) = *id {
                assert!((id as usize) < t.rows, "embedding id {id} out of range {}", t.rows);
                out.row_mut(r).copy_from_slice(t.row(id as usize));
            }
        }
        self.push(out, Op::Gather { table, ids })
    }

    /// `a * b`, or `a * b^T` with `trans_b`.
    pub fn matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let (k, n) = if trans_b { (bv.cols, bv.rows) } else { (bv.rows, bv.cols) };
        assert_eq!(av.cols, k, "matmul inner dimensions differ");
        let mut out = Tensor::zeros(av.rows, n);
        let vb = if trans_b { View::t(0, bv.cols) } else { View::rows(0, bv.cols) };
        gemm(av.rows, k, n, T::one(), &av.data, View::rows(0, av.cols), &bv.data, vb, T::zero(), &mut out.data, View::rows(0, n));
        self.push(out, Op::MatMul { a, b, trans_b })
    }

    pub fn add_bias(&mut self, x: Var, bias: Var) -> Var {
        let (xv, bv) = (self.value(x), self.value(bias));
        assert_eq!(bv.len(), xv.cols);
        let mut out = xv.clone();
        for r in 0..out.rows {
            for (o, &b) in out.row_mut(r).iter_mut().zip(&bv.data) {
                *o += b;
            }
        }
        self.push(out, Op::AddBias { x, bias })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!((av.rows, av.cols), (bv.rows, bv.cols), "add shapes differ");
        let mut out = av.clone();
        out.add_assign(bv);
        self.push(out, Op::Add { a, b })
    }

    /// Tanh approximation of GELU.
    pub fn gelu(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let (c, k, half) = (T::of(GELU_C), T::of(GELU_K), T::of(0.5));
        let mut t: Vec<T> = xv.data.iter().map(|&v| c * (v + k * v * v * v)).collect();
        T::tanh_in_place(&mut t);
        let data = xv.data.iter().zip(&t).map(|(&v, &t)| half * v * (T::one() + t)).collect();
        let out = Tensor::from_vec(xv.rows, xv.cols, data);
        self.push(out, Op::Gelu { x })
    }

    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Var {
        let (xv, g, b) = (self.value(x), self.value(gain), self.value(bias));
        let (rows, cols) = (xv.rows, xv.cols);
        let n = T::of(cols as f64);
        let eps = T::of(LN_EPS);
        let mut out = Tensor::zeros(rows, cols);
        let mut xhat = vec![T::zero(); if self.record { rows * cols } else { 0 }];
        let mut rstds = vec![T::zero(); rows];
        for r in 0..rows {
            let row = xv.row(r);
            let mean = row.iter().copied().sum::<T>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let rstd = T::one() / (var + eps).sqrt();
            rstds[r] = rstd;
            let o = &mut out.data[r * cols..(r + 1) * cols];
            for j in 0..cols {
                let h = (row[j] - mean) * rstd;
                if !xhat.is_empty() {
                    xhat[r * cols + j] = h;
                }
                o[j] = h * g.data[j] + b.data[j];
            }
        }
        self.push(out, Op::LayerNorm { x, gain, bias, xhat, rstd: rstds })
    }

    /// Scaled dot-product attention over `heads` column blocks.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, shape: AttnShape) -> Var {
        let AttnShape { batch, tq, tk, heads, causal } = shape;
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let d = qv.cols;
        assert_eq!(d % heads, 0, "model width must split evenly into heads");
        assert_eq!(qv.rows, batch * tq);
        assert_eq!(kv.rows, batch * tk);
        assert_eq!(vv.rows, batch * tk);
        let dh = d / heads;
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let mut out = Tensor::zeros(batch * tq, d);
        let block = tq * tk;
        let mut probs = vec![T::zero(); batch * heads * block];
        for b in 0..batch {
            for h in 0..heads {
                let p = &mut probs[(b * heads + h) * block..(b * heads + h + 1) * block];
                let qo = b * tq * d + h * dh;
                let ko = b * tk * d + h * dh;
                gemm(tq, dh, tk, scale, &qv.data, View::rows(qo, d), &kv.data, View::t(ko, d), T::zero(), p, View::rows(0, tk));
                softmax_rows(p, tq, tk, causal);
                gemm(tq, tk, dh, T::one(), p, View::rows(0, tk), &vv.data, View::rows(ko, d), T::zero(), &mut out.data, View::rows(qo, d));
            }
        }
        if !self.record {
            probs = Vec::new();
        }
        self.push(out, Op::Attention { q, k, v, shape, probs })
    }

    /// Mean of `weights[i] * cross_entropy(logits[i], targets[i])` divided by
    /// the weight total. Returns a 1x1 value.
    pub fn weighted_ce(&mut self, logits: Var, targets: Vec<u32>, weights: Vec<T>) -> Var {
        let lv = self.value(logits);
        assert_eq!(targets.len(), lv.rows);
        assert_eq!(weights.len(), lv.rows);
        let wsum: T = weights.iter().copied().sum();
        assert!(wsum > T::zero(), "all loss weights are zero");
        let mut lse = vec![T::zero(); lv.rows];
        let mut total = T::zero();
        let mut buf = vec![T::zero(); lv.cols];
        for r in 0..lv.rows {
            let row = lv.row(r);
            let m = lane_max(row);
            for (b, &z) in buf.iter_mut().zip(row) {
                *b = z - m;
            }
            T::exp_in_place(&mut buf);
            let s = lane_sum(&buf);
            lse[r] = m + s.ln();
            total += weights[r] * (lse[r] - row[targets[r] as usize]);
        }
        let out = Tensor::from_vec(1, 1, vec![total / wsum]);
        self.push(out, Op::WeightedCe { logits, targets, weights, lse, wsum })
    }

    /// Back-propagates from the scalar `loss`, adding parameter gradients
    /// into `grads`.
    pub fn backward(self, loss: Var, grads: &mut Grads<T>) {
        self.backward_scaled(loss, T::one(), grads)
    }

    /// Like [`Tape::backward`] for the loss multiplied by `scale`.
    pub fn backward_scaled(mut self, loss: Var, scale: T, grads: &mut Grads<T>) {
        assert!(self.record, "tape was built without recording");
        let Var::N(root) = loss else { panic!("loss must be a computed value") };
        assert_eq!(self.nodes[root].value.len(), 1, "loss must be a scalar");
        let mut node_grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        node_grads[root] = Some(Tensor::from_vec(1, 1, vec![scale]));
        let nodes = std::mem::take(&mut self.nodes);
        // Values of earlier nodes are still needed while walking backwards.
        let value = |v: Var| -> &Tensor<T> {
            match v {
                Var::P(i) => &self.params.list[i].value,
                Var::N(i) => &nodes[i].value,
            }
        };
        for i in (0..=root).rev() {
            let Some(g) = node_grads[i].take() else { continue };
            let mut acc = |v: Var, t: Tensor<T>, node_grads: &mut Vec<Option<Tensor<T>>>| match v {
                Var::P(p) => grads[p].add_assign(&t),
                Var::N(n) => match &mut node_grads[n] {
                    Some(existing) => existing.add_assign(&t),
                    slot => *slot = Some(t),
                },
            };
            match &nodes[i].op {
                Op::Input => {}
                Op::Gather { table, ids } => {
                    let tv = value(*table);
                    let mut gt = Tensor::zeros(tv.rows, tv.cols);
                    for (r, id) in ids.iter().enumerate() {
                        if let Some(id) = *id {
                            for (a, &b) in gt.row_mut(id as usize).iter_mut().zip(g.row(r)) {
                                *a += b;
                            }
                        }
                    }
                    acc(*table, gt, &mut node_grads);
                }
                Op::MatMul { a, b, trans_b } => {
                    let (av, bv) = (value(*a), value(*b));
                    let (m, k) = (av.rows, av.cols);
                    let n = g.cols;
                    let mut ga = Tensor::zeros(m, k);
                    let mut gb = Tensor::zeros(bv.rows, bv.cols);
                    if *trans_b {
                        // c = a b^T, b is n x k
                        gemm(m, n, k, T::one(), &g.data, View::rows(0, n), &bv.data, View::rows(0, k), T::zero(), &mut ga.data, View::rows(0, k));
                        gemm(n, m, k, T::one(), &g.data, View::t(0, n), &av.data, View::rows(0, k), T::zero(), &mut gb.data, View::rows(0, k));
                    } else {
                        // c = a b, b is k x n
                        gemm(m, n, k, T::one(), &g.data, View::rows(0, n), &bv.data, View::t(0, n), T::zero(), &mut ga.data, View::rows(0, k));
                        gemm(k, m, n, T::one(), &av.data, View::t(0, k), &g.data, View::rows(0, n), T::zero(), &mut gb.data, View::rows(0, n));
                    }
                    acc(*a, ga, &mut node_grads);
                    acc(*b, gb, &mut node_grads);
                }
                Op::AddBias { x, bias } => {
                    let mut gbias = Tensor::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (a, &b) in gbias.data.iter_mut().zip(g.row(r)) {
                            *a += b;
                        }
                    }
                    acc(*bias, gbias, &mut node_grads);
                    acc(*x, g, &mut node_grads);
                }
                Op::Add { a, b } => {
                    acc(*a, g.clone(), &mut node_grads);
                    acc(*b, g, &mut node_grads);
                }
                Op::Gelu { x } => {
                    let xv = value(*x);
                    let (c, k, half) = (T::of(GELU_C), T::of(GELU_K), T::of(0.5));
                    let three = T::of(3.0);
                    let mut t: Vec<T> = xv.data.iter().map(|&v| c * (v + k * v * v * v)).collect();
                    T::tanh_in_place(&mut t);
                    let data = xv
                        .data
                        .iter()
                        .zip(&g.data)
                        .zip(&t)
                        .map(|((&v, &gv), &t)| {
                            let d = half * (T::one() + t) + half * v * (T::one() - t * t) * c * (T::one() + three * k * v * v);
                            gv * d
                        })
                        .collect();
                    acc(*x, Tensor::from_vec(xv.rows, xv.cols, data), &mut node_grads);
                }
                Op::LayerNorm { x, gain, bias, xhat, rstd } => {
                    let gv = value(*gain);
                    let (rows, cols) = (g.rows, g.cols);
                    let n = T::of(cols as f64);
                    let mut gx = Tensor::zeros(rows, cols);
                    let mut gg = Tensor::zeros(1, cols);
                    let mut gb = Tensor::zeros(1, cols);
                    let mut dxhat = vec![T::zero(); cols];
                    for r in 0..rows {
                        let gr = g.row(r);
                        let xh = &xhat[r * cols..(r + 1) * cols];
                        let (mut s1, mut s2) = (T::zero(), T::zero());
                        for j in 0..cols {
                            gg.data[j] += gr[j] * xh[j];
                            gb.data[j] += gr[j];
                            dxhat[j] = gr[j] * gv.data[j];
                            s1 += dxhat[j];
                            s2 += dxhat[j] * xh[j];
                        }
                        let (m1, m2) = (s1 / n, s2 / n);
                        let out = gx.row_mut(r);
                        for j in 0..cols {
                            out[j] = rstd[r] * (dxhat[j] - m1 - xh[j] * m2);
                        }
                    }
                    acc(*gain, gg, &mut node_grads);
                    acc(*bias, gb, &mut node_grads);
                    acc(*x, gx, &mut node_grads);
                }
                Op::Attention { q, k, v, shape, probs } => {
                    let AttnShape { batch, tq, tk, heads, .. } = *shape;
                    let (qv, kv, vv) = (value(*q), value(*k), value(*v));
                    let d = qv.cols;
                    let dh = d / heads;
                    let scale = T::of(1.0 / (dh as f64).sqrt());
                    let block = tq * tk;
                    let mut gq = Tensor::zeros(qv.rows, d);
                    let mut gk = Tensor::zeros(kv.rows, d);
                    let mut gvv = Tensor::zeros(vv.rows, d);
                    let mut dp = vec![T::zero(); block];
                    for b in 0..batch {
                        for h in 0..heads {
                            let p = &probs[(b * heads + h) * block..(b * heads + h + 1) * block];
                            let qo = b * tq * d + h * dh;
                            let ko = b * tk * d + h * dh;
                            // dP = dO V^T
                            gemm(tq, dh, tk, T::one(), &g.data, View::rows(qo, d), &vv.data, View::t(ko, d), T::zero(), &mut dp, View::rows(0, tk));
                            // dV += P^T dO
                            gemm(tk, tq, dh, T::one(), p, View::t(0, tk), &g.data, View::rows(qo, d), T::one(), &mut gvv.data, View::rows(ko, d));
                            // dS = P * (dP - rowsum(dP * P))
                            for r in 0..tq {
                                let pr = &p[r * tk..(r + 1) * tk];
                                let dr = &mut dp[r * tk..(r + 1) * tk];
                                let dot: T = pr.iter().zip(dr.iter()).map(|(&a, &b)| a * b).sum();
                                for (dv, &pv) in dr.iter_mut().zip(pr) {
                                    *dv = pv * (*dv - dot);
                                }
                            }
                            gemm(tq, tk, dh, scale, &dp, View::rows(0, tk), &kv.data, View::rows(ko, d), T::one(), &mut gq.data, View::rows(qo, d));
                            gemm(tk, tq, dh, scale, &dp, View::t(0, tk), &qv.data, View::rows(qo, d), T::one(), &mut gk.data, View::rows(ko, d));
                        }
                    }
                    acc(*q, gq, &mut node_grads);
                    acc(*k, gk, &mut node_grads);
                    acc(*v, gvv, &mut node_grads);
                }
                Op::WeightedCe { logits, targets, weights, lse, wsum } => {
                    let lv = value(*logits);
                    let scale = g.data[0] / *wsum;
                    let mut gl = Tensor::zeros(lv.rows, lv.cols);
                    for r in 0..lv.rows {
                        let w = weights[r] * scale;
                        let out = gl.row_mut(r);
                        for (o, &z) in out.iter_mut().zip(lv.row(r)) {
                            *o = z - lse[r];
                        }
                        T::exp_in_place(out);
                        for o in out.iter_mut() {
                            *o *= w;
                        }
                        out[targets[r] as usize] -= w;
                    }
                    acc(*logits, gl, &mut node_grads);
                }
            }
        }
    }
}

/// Sum with eight independent accumulators.
fn lane_sum<T: Float>(xs: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let mut chunks = xs.chunks_exact(8);
    for c in &mut chunks {
        for (a, &x) in acc.iter_mut().zip(c) {
            *a += x;
        }
    }
    let tail: T = chunks.remainder().iter().copied().sum();
    acc.iter().copied().sum::<T>() + tail
}

fn lane_max<T: Float>(xs: &[T]) -> T {
    let mut acc = [T::neg_infinity(); 8];
    let mut chunks = xs.chunks_exact(8);
    for c in &mut chunks {
        for (a, &x) in acc.iter_mut().zip(c) {
            *a = if x > *a { x } else { *a };
        }
    }
    let tail = chunks.remainder().iter().copied().fold(T::neg_infinity(), T::max);
    acc.iter().copied().fold(tail, T::max)
}

/// In-place row softmax; with `causal`, entries right of the diagonal are zero.
pub fn softmax_rows<T: Float>(p: &mut [T], rows: usize, cols: usize, causal: bool) {
    for r in 0..rows {
        let row = &mut p[r * cols..(r + 1) * cols];
        let visible = if causal { (r + 1).min(cols) } else { cols };
        let m = lane_max(&row[..visible]);
        for v in row[..visible].iter_mut() {
            *v -= m;
        }
        T::exp_in_place(&mut row[..visible]);
        let inv = T::one() / lane_sum(&row[..visible]);
        for v in row[..visible].iter_mut() {
            *v *= inv;
        }
        for v in row[visible..].iter_mut() {
            *v = T::zero();
        }
    }
}
