//! Tape of tensor-valued operations and its reverse sweep.
//!
//! Every op appends one node whose value is computed eagerly. `backward`
//! walks the tape from the loss node down to the leaves, so node order is a
//! valid topological order by construction.

use rand::Rng;

use super::kernels::{self, ConvGeometry, LstmCache};
use super::{AutodiffError, Scalar, Tensor};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    Conv1d {
        x: Var,
        w: Var,
        b: Option<Var>,
        geom: ConvGeometry,
    },
    WeightNorm {
        v: Var,
        g: Var,
        norms: Vec<T>,
    },
    Lstm {
        x: Var,
        w_ih: Var,
        w_hh: Var,
        b: Var,
        cache: LstmCache<T>,
    },
    LastStep(Var),
    Relu(Var),
    Add(Var, Var),
    Concat(Var, Var),
    Linear {
        x: Var,
        w: Var,
        b: Var,
    },
    Dropout {
        x: Var,
        mask: Vec<T>,
    },
    SoftmaxCe {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<T>,
    },
    WeightedSum {
        x: Var,
        weights: Vec<T>,
    },
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Conv1d { .. } => "conv1d",
            Op::WeightNorm { .. } => "weight_norm",
            Op::Lstm { .. } => "lstm",
            Op::LastStep(_) => "last_step",
            Op::Relu(_) => "relu",
            Op::Add(..) => "add",
            Op::Concat(..) => "concat_channels",
            Op::Linear { .. } => "linear",
            Op::Dropout { .. } => "spatial_dropout",
            Op::SoftmaxCe { .. } => "softmax_cross_entropy",
            Op::WeightedSum { .. } => "weighted_sum",
        }
    }
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    tracked: bool,
}

/// A single forward pass. Build one per mini-batch and drop it after `backward`.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Accumulated gradients, indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn expect_rank<T: Scalar>(t: &Tensor<T>, rank: usize, what: &str) -> Result<(), AutodiffError> {
    if t.rank() != rank {
        return Err(AutodiffError::Shape(format!(
            "{what}: expected rank {rank}, got shape {:?}",
            t.shape()
        )));
    }
    Ok(())
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, tracked: bool) -> Result<Var, AutodiffError> {
        if !value.is_finite() {
            let bad = value.data().iter().filter(|v| !v.is_finite()).count();
            return Err(AutodiffError::NonFinite {
                op: op.name(),
                node: self.nodes.len(),
                count: bad,
            });
        }
        self.nodes.push(Node { value, op, tracked });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Input or parameter leaf. Gradients are only retained for leaves with `requires_grad`.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            tracked: requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Constant input (no gradient).
    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    /// Valid (unpadded) cross-correlation. `x`: `[B, T, F]`, `w`: `[L, F, k]`, `b`: `[L]`.
    /// Output `[B, (T - k) / stride + 1, L]`.
    pub fn conv1d_valid(&mut self, x: Var, w: Var, b: Option<Var>, stride: usize) -> Result<Var, AutodiffError> {
        if stride == 0 {
            return Err(AutodiffError::Shape("conv1d_valid: stride must be >= 1".into()));
        }
        let k = self.conv_kernel_len(w)?;
        let t = self.value(x).shape().get(1).copied().unwrap_or(0);
        if t < k {
            return Err(AutodiffError::Shape(format!(
                "conv1d_valid: sequence length {t} shorter than kernel {k}"
            )));
        }
        self.conv1d(x, w, b, ConvGeometry { stride, dilation: 1, pad_left: 0 })
    }

    /// Causal dilated convolution: left zero-padding of `(k - 1) * dilation`, output length = input length.
    pub fn conv1d_causal(&mut self, x: Var, w: Var, b: Option<Var>, dilation: usize) -> Result<Var, AutodiffError> {
        if dilation == 0 {
            return Err(AutodiffError::Shape("conv1d_causal: dilation must be >= 1".into()));
        }
        let k = self.conv_kernel_len(w)?;
        self.conv1d(x, w, b, ConvGeometry { stride: 1, dilation, pad_left: (k - 1) * dilation })
    }

    fn conv_kernel_len(&self, w: Var) -> Result<usize, AutodiffError> {
        let wv = self.value(w);
        expect_rank(wv, 3, "conv filters")?;
        if wv.dim(2) == 0 {
            return Err(AutodiffError::Shape("conv filters: kernel length 0".into()));
        }
        Ok(wv.dim(2))
    }

    fn conv1d(&mut self, x: Var, w: Var, b: Option<Var>, geom: ConvGeometry) -> Result<Var, AutodiffError> {
        let xv = self.value(x);
        let wv = self.value(w);
        expect_rank(xv, 3, "conv input")?;
        if xv.dim(2) != wv.dim(1) {
            return Err(AutodiffError::Shape(format!(
                "conv: input has {} channels, filters expect {}",
                xv.dim(2),
                wv.dim(1)
            )));
        }
        if let Some(b) = b {
            let bv = self.value(b);
            if bv.shape() != [wv.dim(0)] {
                return Err(AutodiffError::Shape(format!(
                    "conv bias shape {:?}, expected [{}]",
                    bv.shape(),
                    wv.dim(0)
                )));
            }
        }
        let out = kernels::conv1d_forward(xv, wv, b.map(|b| self.value(b)), geom);
        let tracked = self.tracked(x) || self.tracked(w) || b.is_some_and(|b| self.tracked(b));
        self.push(out, Op::Conv1d { x, w, b, geom }, tracked)
    }

    /// Per-filter reparameterisation `w[l] = g[l] * v[l] / ||v[l]||`. `v`: `[L, ...]`, `g`: `[L]`.
    pub fn weight_norm(&mut self, v: Var, g: Var) -> Result<Var, AutodiffError> {
        let vv = self.value(v);
        let gv = self.value(g);
        if vv.rank() == 0 || gv.shape() != [vv.dim(0)] {
            return Err(AutodiffError::Shape(format!(
                "weight_norm: v {:?} vs g {:?}",
                vv.shape(),
                gv.shape()
            )));
        }
        let rows = vv.dim(0);
        let width = vv.len() / rows.max(1);
        let mut norms = Vec::with_capacity(rows);
        let mut out = Tensor::zeros(vv.shape());
        for l in 0..rows {
            let row = &vv.data()[l * width..(l + 1) * width];
            let n = row.iter().map(|&a| a * a).sum::<T>().sqrt();
            if !(n > T::zero()) {
                return Err(AutodiffError::ZeroNorm { filter: l });
            }
            let scale = gv.data()[l] / n;
            for (o, &a) in out.data_mut()[l * width..(l + 1) * width].iter_mut().zip(row) {
                *o = scale * a;
            }
            norms.push(n);
        }
        let tracked = self.tracked(v) || self.tracked(g);
        self.push(out, Op::WeightNorm { v, g, norms }, tracked)
    }

    /// Unidirectional single-layer LSTM over `x`: `[B, T, C]`, returning every hidden state `[B, T, H]`.
    ///
    /// `w_ih`: `[C, 4H]`, `w_hh`: `[H, 4H]`, `b`: `[4H]`; gate blocks are ordered input, forget, cell, output.
    pub fn lstm(&mut self, x: Var, w_ih: Var, w_hh: Var, b: Var) -> Result<Var, AutodiffError> {
        let xv = self.value(x);
        expect_rank(xv, 3, "lstm input")?;
        let (wi, wh, bv) = (self.value(w_ih), self.value(w_hh), self.value(b));
        expect_rank(wi, 2, "lstm w_ih")?;
        expect_rank(wh, 2, "lstm w_hh")?;
        let h = wh.dim(0);
        if wh.dim(1) != 4 * h || wi.dim(1) != 4 * h || wi.dim(0) != xv.dim(2) || bv.shape() != [4 * h] {
            return Err(AutodiffError::Shape(format!(
                "lstm: x {:?}, w_ih {:?}, w_hh {:?}, b {:?}",
                xv.shape(),
                wi.shape(),
                wh.shape(),
                bv.shape()
            )));
        }
        if xv.dim(1) == 0 {
            return Err(AutodiffError::Shape("lstm: empty sequence".into()));
        }
        let (out, cache) = kernels::lstm_forward(xv, wi, wh, bv);
        let tracked = [x, w_ih, w_hh, b].iter().any(|&v| self.tracked(v));
        self.push(out, Op::Lstm { x, w_ih, w_hh, b, cache }, tracked)
    }

    /// `[B, T, C]` → `[B, C]` at the final time step.
    pub fn last_step(&mut self, x: Var) -> Result<Var, AutodiffError> {
        let xv = self.value(x);
        expect_rank(xv, 3, "last_step")?;
        let (bn, t, c) = (xv.dim(0), xv.dim(1), xv.dim(2));
        if t == 0 {
            return Err(AutodiffError::Shape("last_step: empty sequence".into()));
        }
        let mut out = Tensor::zeros(&[bn, c]);
        for bi in 0..bn {
            let src = &xv.data()[(bi * t + t - 1) * c..(bi * t + t) * c];
            out.data_mut()[bi * c..(bi + 1) * c].copy_from_slice(src);
        }
        let tracked = self.tracked(x);
        self.push(out, Op::LastStep(x), tracked)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, AutodiffError> {
        let out = self.value(x).map(|v| if v > T::zero() { v } else { T::zero() });
        let tracked = self.tracked(x);
        self.push(out, Op::Relu(x), tracked)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(AutodiffError::Shape(format!("add: {:?} vs {:?}", av.shape(), bv.shape())));
        }
        let mut out = av.clone();
        out.add_assign(bv);
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(out, Op::Add(a, b), tracked)
    }

    /// Concatenate `[B, T, C1]` and `[B, T, C2]` into `[B, T, C1 + C2]`.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        expect_rank(av, 3, "concat lhs")?;
        expect_rank(bv, 3, "concat rhs")?;
        if av.dim(0) != bv.dim(0) || av.dim(1) != bv.dim(1) {
            return Err(AutodiffError::Shape(format!(
                "concat_channels: length mismatch {:?} vs {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let (bn, t, c1, c2) = (av.dim(0), av.dim(1), av.dim(2), bv.dim(2));
        let c = c1 + c2;
        let mut out = Tensor::zeros(&[bn, t, c]);
        let od = out.data_mut();
        for r in 0..bn * t {
            od[r * c..r * c + c1].copy_from_slice(&av.data()[r * c1..(r + 1) * c1]);
            od[r * c + c1..(r + 1) * c].copy_from_slice(&bv.data()[r * c2..(r + 1) * c2]);
        }
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(out, Op::Concat(a, b), tracked)
    }

    /// `x`: `[B, D]`, `w`: `[D, N]`, `b`: `[N]` → `[B, N]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, AutodiffError> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        expect_rank(xv, 2, "linear input")?;
        expect_rank(wv, 2, "linear weight")?;
        if xv.dim(1) != wv.dim(0) || bv.shape() != [wv.dim(1)] {
            return Err(AutodiffError::Shape(format!(
                "linear: x {:?}, w {:?}, b {:?}",
                xv.shape(),
                wv.shape(),
                bv.shape()
            )));
        }
        let (bn, d, n) = (xv.dim(0), xv.dim(1), wv.dim(1));
        let mut out = Tensor::zeros(&[bn, n]);
        for r in 0..bn {
            out.data_mut()[r * n..(r + 1) * n].copy_from_slice(bv.data());
        }
        kernels::matmul_acc(xv.data(), wv.data(), out.data_mut(), bn, d, n);
        let tracked = [x, w, b].iter().any(|&v| self.tracked(v));
        self.push(out, Op::Linear { x, w, b }, tracked)
    }

    /// Drops whole channels of `[B, T, C]` with probability `rate` and rescales survivors by
    /// `1 / (1 - rate)`. Identity when not training or when `rate == 0`.
    pub fn spatial_dropout<R: Rng + ?Sized>(
        &mut self,
        x: Var,
        rate: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var, AutodiffError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(AutodiffError::Shape(format!("spatial_dropout: rate {rate} outside [0, 1)")));
        }
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let xv = self.value(x);
        expect_rank(xv, 3, "spatial_dropout")?;
        let (bn, t, c) = (xv.dim(0), xv.dim(1), xv.dim(2));
        let keep = T::of(1.0 / (1.0 - rate));
        let mask: Vec<T> = (0..bn * c)
            .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
            .collect();
        let mut out = xv.clone();
        let od = out.data_mut();
        for bi in 0..bn {
            for ti in 0..t {
                let row = &mut od[(bi * t + ti) * c..(bi * t + ti + 1) * c];
                for (v, &m) in row.iter_mut().zip(&mask[bi * c..(bi + 1) * c]) {
                    *v *= m;
                }
            }
        }
        let tracked = self.tracked(x);
        self.push(out, Op::Dropout { x, mask }, tracked)
    }

    /// Mean softmax cross-entropy of `[B, N]` logits against class indices.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var, AutodiffError> {
        let lv = self.value(logits);
        expect_rank(lv, 2, "softmax_cross_entropy")?;
        let (bn, n) = (lv.dim(0), lv.dim(1));
        if labels.len() != bn || bn == 0 {
            return Err(AutodiffError::Shape(format!(
                "softmax_cross_entropy: {} labels for batch of {bn}",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n) {
            return Err(AutodiffError::Shape(format!("label {bad} out of range for {n} classes")));
        }
        let probs = kernels::softmax_rows(lv.data(), n);
        let mut loss = T::zero();
        for (r, &y) in labels.iter().enumerate() {
            loss -= probs[r * n + y].max(T::min_positive_value()).ln();
        }
        loss /= T::of(bn as f64);
        let tracked = self.tracked(logits);
        self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCe {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            tracked,
        )
    }

    /// `sum(x * weights)`: a scalar probe used to pull gradients out of non-scalar ops.
    pub fn weighted_sum(&mut self, x: Var, weights: &Tensor<T>) -> Result<Var, AutodiffError> {
        let xv = self.value(x);
        if xv.shape() != weights.shape() {
            return Err(AutodiffError::Shape(format!(
                "weighted_sum: {:?} vs {:?}",
                xv.shape(),
                weights.shape()
            )));
        }
        let s = xv.data().iter().zip(weights.data()).map(|(&a, &b)| a * b).sum::<T>();
        let tracked = self.tracked(x);
        self.push(
            Tensor::scalar(s),
            Op::WeightedSum {
                x,
                weights: weights.data().to_vec(),
            },
            tracked,
        )
    }

    /// Reverse sweep from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>, AutodiffError> {
        if self.value(loss).len() != 1 {
            return Err(AutodiffError::Shape(format!(
                "backward needs a scalar, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_fn(self.value(loss).shape(), |_| T::one()));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.tracked {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            if !g.is_finite() {
                return Err(AutodiffError::NonFinite {
                    op: node.op.name(),
                    node: i,
                    count: g.data().iter().filter(|v| !v.is_finite()).count(),
                });
            }
            self.backprop_node(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
        if !self.tracked(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn backprop_node(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        match &node.op {
            Op::Leaf => {}
            Op::Conv1d { x, w, b, geom } => {
                let (dx, dw, db) = kernels::conv1d_backward(self.value(*x), self.value(*w), g, *geom);
                self.accumulate(grads, *x, dx);
                self.accumulate(grads, *w, dw);
                if let Some(b) = b {
                    self.accumulate(grads, *b, db);
                }
            }
            Op::WeightNorm { v, g: gain, norms } => {
                let vv = self.value(*v);
                let gv = self.value(*gain);
                let rows = norms.len();
                let width = vv.len() / rows;
                let mut dv = Tensor::zeros(vv.shape());
                let mut dg = Tensor::zeros(gv.shape());
                for l in 0..rows {
                    let row = &vv.data()[l * width..(l + 1) * width];
                    let grow = &g.data()[l * width..(l + 1) * width];
                    let n = norms[l];
                    let dot: T = row.iter().zip(grow).map(|(&a, &b)| a * b).sum();
                    dg.data_mut()[l] = dot / n;
                    let s = gv.data()[l] / n;
                    let s3 = gv.data()[l] * dot / (n * n * n);
                    for ((o, &a), &gw) in dv.data_mut()[l * width..(l + 1) * width].iter_mut().zip(row).zip(grow) {
                        *o = s * gw - s3 * a;
                    }
                }
                self.accumulate(grads, *v, dv);
                self.accumulate(grads, *gain, dg);
            }
            Op::Lstm { x, w_ih, w_hh, b, cache } => {
                let lg = kernels::lstm_backward(
                    self.value(*x),
                    self.value(*w_ih),
                    self.value(*w_hh),
                    &node.value,
                    cache,
                    g,
                );
                self.accumulate(grads, *x, lg.dx);
                self.accumulate(grads, *w_ih, lg.dw_ih);
                self.accumulate(grads, *w_hh, lg.dw_hh);
                self.accumulate(grads, *b, lg.db);
            }
            Op::LastStep(x) => {
                let xv = self.value(*x);
                let (bn, t, c) = (xv.dim(0), xv.dim(1), xv.dim(2));
                let mut dx = Tensor::zeros(xv.shape());
                for bi in 0..bn {
                    dx.data_mut()[(bi * t + t - 1) * c..(bi * t + t) * c]
                        .copy_from_slice(&g.data()[bi * c..(bi + 1) * c]);
                }
                self.accumulate(grads, *x, dx);
            }
            Op::Relu(x) => {
                let mut dx = g.clone();
                for (d, &y) in dx.data_mut().iter_mut().zip(node.value.data()) {
                    if y <= T::zero() {
                        *d = T::zero();
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Concat(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (c1, c2) = (av.dim(2), bv.dim(2));
                let c = c1 + c2;
                let rows = av.dim(0) * av.dim(1);
                let mut da = Tensor::zeros(av.shape());
                let mut db = Tensor::zeros(bv.shape());
                for r in 0..rows {
                    da.data_mut()[r * c1..(r + 1) * c1].copy_from_slice(&g.data()[r * c..r * c + c1]);
                    db.data_mut()[r * c2..(r + 1) * c2].copy_from_slice(&g.data()[r * c + c1..(r + 1) * c]);
                }
                self.accumulate(grads, *a, da);
                self.accumulate(grads, *b, db);
            }
            Op::Linear { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (bn, d, n) = (xv.dim(0), xv.dim(1), wv.dim(1));
                let mut dx = Tensor::zeros(xv.shape());
                let mut dw = Tensor::zeros(wv.shape());
                let mut db = Tensor::zeros(&[n]);
                for r in 0..bn {
                    let grow = &g.data()[r * n..(r + 1) * n];
                    for (acc, &gv) in db.data_mut().iter_mut().zip(grow) {
                        *acc += gv;
                    }
                    let xrow = &xv.data()[r * d..(r + 1) * d];
                    let dxrow = &mut dx.data_mut()[r * d..(r + 1) * d];
                    for di in 0..d {
                        let wrow = &wv.data()[di * n..(di + 1) * n];
                        dxrow[di] = kernels::dot(grow, wrow);
                        kernels::axpy(xrow[di], grow, &mut dw.data_mut()[di * n..(di + 1) * n]);
                    }
                }
                self.accumulate(grads, *x, dx);
                self.accumulate(grads, *w, dw);
                self.accumulate(grads, *b, db);
            }
            Op::Dropout { x, mask } => {
                let xv = self.value(*x);
                let (bn, t, c) = (xv.dim(0), xv.dim(1), xv.dim(2));
                let mut dx = g.clone();
                let dd = dx.data_mut();
                for bi in 0..bn {
                    for ti in 0..t {
                        let row = &mut dd[(bi * t + ti) * c..(bi * t + ti + 1) * c];
                        for (v, &m) in row.iter_mut().zip(&mask[bi * c..(bi + 1) * c]) {
                            *v *= m;
                        }
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::SoftmaxCe { logits, labels, probs } => {
                let lv = self.value(*logits);
                let n = lv.dim(1);
                let scale = g.item() / T::of(labels.len() as f64);
                let mut dl = Tensor::from_vec(lv.shape(), probs.clone()).expect("probs shape");
                for (r, &y) in labels.iter().enumerate() {
                    dl.data_mut()[r * n + y] -= T::one();
                }
                for v in dl.data_mut() {
                    *v *= scale;
                }
                self.accumulate(grads, *logits, dl);
            }
            Op::WeightedSum { x, weights } => {
                let s = g.item();
                let dx = Tensor::from_vec(self.value(*x).shape(), weights.iter().map(|&w| w * s).collect())
                    .expect("weights shape");
                self.accumulate(grads, *x, dx);
            }
        }
    }
}
