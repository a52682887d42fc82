//! Reverse-mode differentiation over a per-step computation graph.
//!
//! A [`Graph`] records every operation as a node holding its forward value.
//! Nodes are appended in creation order, so parents always have smaller
//! indices than their children and the graph is acyclic by construction.
//! [`Graph::backward`] walks the node list once in reverse.

use std::collections::BTreeMap;

use super::params::ParamStore;
use super::tensor::{expect_matrix, matmul_nn, matmul_nt, matmul_tn, Tensor, TensorError};

/// Clamp applied to probabilities before taking a logarithm in
/// [`Graph::cross_entropy_rows`].
pub const LOG_EPSILON: f64 = 1e-9;

/// Variance epsilon used by [`Graph::layer_norm`].
pub const LAYER_NORM_EPSILON: f64 = 1e-5;

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Gelu(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normed: Tensor,
        inv_std: Vec<f64>,
    },
    SoftmaxRows(Var),
    CrossEntropyRows {
        probs: Var,
        target: Tensor,
        row_mask: Vec<bool>,
    },
    GatherRows(Var, Vec<usize>),
    GatherCols(Var, Vec<usize>),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    MaskRows(Var, Vec<bool>),
    RepeatRows(Var),
    Sum(Var),
    SumSquares(Var),
    AddAll(Vec<Var>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Computation graph for one forward/backward pass.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: BTreeMap<String, Var>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// A value that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Registers a trainable tensor from `store`. Repeated calls with the same
    /// name return the same node, so gradients accumulate exactly once per
    /// parameter.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var, TensorError> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let value = store
            .get(name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))?
            .clone();
        let v = self.push(value, Op::Param, true);
        self.params.insert(name.to_string(), v);
        Ok(v)
    }

    /// Parameters registered so far, by name.
    pub fn params(&self) -> &BTreeMap<String, Var> {
        &self.params
    }

    fn matrix(&self, op: &'static str, v: Var) -> Result<&Tensor, TensorError> {
        let t = self.value(v);
        expect_matrix(op, t)?;
        Ok(t)
    }

    fn mismatch(&self, op: &'static str, a: Var, b: Var) -> TensorError {
        TensorError::ShapeMismatch {
            op,
            left: self.shape(a).to_vec(),
            right: self.shape(b).to_vec(),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (self.matrix("matmul", a)?, self.matrix("matmul", b)?);
        if ta.cols() != tb.rows() {
            return Err(self.mismatch("matmul", a, b));
        }
        let out = matmul_nn(ta, tb);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::MatMul(a, b), ng))
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (self.matrix("matmul_t", a)?, self.matrix("matmul_t", b)?);
        if ta.cols() != tb.cols() {
            return Err(self.mismatch("matmul_t", a, b));
        }
        let out = matmul_nt(ta, tb);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::MatMulT(a, b), ng))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.matrix("transpose", a)?.transpose();
        let ng = self.needs(a);
        Ok(self.push(out, Op::Transpose(a), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(self.mismatch("add", a, b));
        }
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Add(a, b), ng))
    }

    /// Adds a `1×n` row to every row of an `m×n` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let ta = self.matrix("add_row", a)?;
        let tr = self.matrix("add_row", row)?;
        if tr.rows() != 1 || tr.cols() != ta.cols() {
            return Err(self.mismatch("add_row", a, row));
        }
        let n = ta.cols();
        let mut out = ta.clone();
        for chunk in out.data_mut().chunks_mut(n.max(1)) {
            for (o, r) in chunk.iter_mut().zip(tr.data()) {
                *o += r;
            }
        }
        let ng = self.needs(a) || self.needs(row);
        Ok(self.push(out, Op::AddRow(a, row), ng))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|v| v * c);
        let ng = self.needs(a);
        self.push(out, Op::Scale(a, c), ng)
    }

    /// GELU with the tanh approximation.
    pub fn gelu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(gelu);
        let ng = self.needs(a);
        self.push(out, Op::Gelu(a), ng)
    }

    /// Row-wise layer normalization with a learned `1×n` gain and bias.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var, TensorError> {
        let tx = self.matrix("layer_norm", x)?;
        let n = tx.cols();
        for p in [gain, bias] {
            let tp = self.value(p);
            if tp.rows() != 1 || tp.cols() != n {
                return Err(self.mismatch("layer_norm", x, p));
            }
        }
        let (g, b) = (self.value(gain).data(), self.value(bias).data());
        let mut normed = Tensor::zeros(tx.shape());
        let mut out = Tensor::zeros(tx.shape());
        let mut inv_std = Vec::with_capacity(tx.rows());
        for r in 0..tx.rows() {
            let row = tx.row(r);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + LAYER_NORM_EPSILON).sqrt();
            inv_std.push(is);
            for c in 0..n {
                let xh = (row[c] - mean) * is;
                normed.data_mut()[r * n + c] = xh;
                out.data_mut()[r * n + c] = xh * g[c] + b[c];
            }
        }
        let ng = self.needs(x) || self.needs(gain) || self.needs(bias);
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normed,
                inv_std,
            },
            ng,
        ))
    }

    /// Numerically stable row softmax. `mask[r*c + j] == false` removes
    /// position `j` of row `r`; removed positions get probability exactly 0.
    pub fn softmax_rows(&mut self, a: Var, mask: Option<&[bool]>) -> Result<Var, TensorError> {
        let ta = self.matrix("softmax_rows", a)?;
        let (r, c) = (ta.rows(), ta.cols());
        if let Some(m) = mask {
            if m.len() != r * c {
                return Err(TensorError::ShapeMismatch {
                    op: "softmax_rows",
                    left: ta.shape().to_vec(),
                    right: vec![m.len()],
                });
            }
        }
        let out = softmax_matrix(ta, mask)?;
        let ng = self.needs(a);
        Ok(self.push(out, Op::SoftmaxRows(a), ng))
    }

    /// Mean over unmasked rows of `−Σ_j target·ln(max(p, LOG_EPSILON))`.
    /// With no unmasked rows the loss is 0 and contributes no gradient.
    pub fn cross_entropy_rows(
        &mut self,
        probs: Var,
        target: Tensor,
        row_mask: &[bool],
    ) -> Result<Var, TensorError> {
        let tp = self.matrix("cross_entropy_rows", probs)?;
        if tp.shape() != target.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "cross_entropy_rows",
                left: tp.shape().to_vec(),
                right: target.shape().to_vec(),
            });
        }
        if row_mask.len() != tp.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "cross_entropy_rows",
                left: tp.shape().to_vec(),
                right: vec![row_mask.len()],
            });
        }
        let active = row_mask.iter().filter(|&&m| m).count();
        let mut total = 0.0;
        for (r, _) in row_mask.iter().enumerate().filter(|(_, &m)| m) {
            for (p, t) in tp.row(r).iter().zip(target.row(r)) {
                if *t != 0.0 {
                    total -= t * p.max(LOG_EPSILON).ln();
                }
            }
        }
        let value = if active == 0 {
            0.0
        } else {
            total / active as f64
        };
        let ng = self.needs(probs) && active > 0;
        Ok(self.push(
            Tensor::scalar(value),
            Op::CrossEntropyRows {
                probs,
                target,
                row_mask: row_mask.to_vec(),
            },
            ng,
        ))
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let ta = self.matrix("gather_rows", a)?;
        let c = ta.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            if i >= ta.rows() {
                return Err(TensorError::IndexOutOfRange {
                    index: i,
                    extent: ta.rows(),
                });
            }
            data.extend_from_slice(ta.row(i));
        }
        let out = Tensor::matrix(idx.len(), c, data)?;
        let ng = self.needs(a);
        Ok(self.push(out, Op::GatherRows(a, idx.to_vec()), ng))
    }

    pub fn gather_cols(&mut self, a: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let ta = self.matrix("gather_cols", a)?;
        let (r, c) = (ta.rows(), ta.cols());
        if let Some(&bad) = idx.iter().find(|&&i| i >= c) {
            return Err(TensorError::IndexOutOfRange {
                index: bad,
                extent: c,
            });
        }
        let mut data = Vec::with_capacity(r * idx.len());
        for row in 0..r {
            for &j in idx {
                data.push(ta.at(row, j));
            }
        }
        let out = Tensor::matrix(r, idx.len(), data)?;
        let ng = self.needs(a);
        Ok(self.push(out, Op::GatherCols(a, idx.to_vec()), ng))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var, TensorError> {
        let ta = self.matrix("slice_cols", a)?;
        if start > end || end > ta.cols() {
            return Err(TensorError::IndexOutOfRange {
                index: end,
                extent: ta.cols(),
            });
        }
        let (r, w) = (ta.rows(), end - start);
        let mut data = Vec::with_capacity(r * w);
        for row in 0..r {
            data.extend_from_slice(&ta.row(row)[start..end]);
        }
        let out = Tensor::matrix(r, w, data)?;
        let ng = self.needs(a);
        Ok(self.push(out, Op::SliceCols(a, start), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = *parts
            .first()
            .ok_or_else(|| TensorError::Invalid("concat_cols of nothing".into()))?;
        let r = self.matrix("concat_cols", first)?.rows();
        for &p in parts {
            let t = self.matrix("concat_cols", p)?;
            if t.rows() != r {
                return Err(self.mismatch("concat_cols", first, p));
            }
        }
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(r * total);
        for row in 0..r {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(row));
            }
        }
        let out = Tensor::matrix(r, total, data)?;
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), ng))
    }

    /// Zeroes rows where `keep` is false.
    pub fn mask_rows(&mut self, a: Var, keep: &[bool]) -> Result<Var, TensorError> {
        let ta = self.matrix("mask_rows", a)?;
        if keep.len() != ta.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "mask_rows",
                left: ta.shape().to_vec(),
                right: vec![keep.len()],
            });
        }
        let c = ta.cols();
        let mut out = ta.clone();
        for (r, &k) in keep.iter().enumerate() {
            if !k {
                out.data_mut()[r * c..(r + 1) * c].fill(0.0);
            }
        }
        let ng = self.needs(a);
        Ok(self.push(out, Op::MaskRows(a, keep.to_vec()), ng))
    }

    /// Stacks a `1×n` row `m` times.
    pub fn repeat_rows(&mut self, a: Var, m: usize) -> Result<Var, TensorError> {
        let ta = self.matrix("repeat_rows", a)?;
        if ta.rows() != 1 {
            return Err(TensorError::Invalid(format!(
                "repeat_rows expects one row, got {:?}",
                ta.shape()
            )));
        }
        let mut data = Vec::with_capacity(m * ta.cols());
        for _ in 0..m {
            data.extend_from_slice(ta.data());
        }
        let out = Tensor::matrix(m, ta.cols(), data)?;
        let ng = self.needs(a);
        Ok(self.push(out, Op::RepeatRows(a), ng))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let ng = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), ng)
    }

    pub fn sum_squares(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().map(|v| v * v).sum();
        let ng = self.needs(a);
        self.push(Tensor::scalar(s), Op::SumSquares(a), ng)
    }

    /// Elementwise sum of equally shaped tensors, accumulated in argument order.
    pub fn add_all(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = *parts
            .first()
            .ok_or_else(|| TensorError::Invalid("add_all of nothing".into()))?;
        let mut out = self.value(first).clone();
        for &p in &parts[1..] {
            if self.shape(p) != out.shape() {
                return Err(self.mismatch("add_all", first, p));
            }
            out.add_assign(self.value(p));
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(out, Op::AddAll(parts.to_vec()), ng))
    }

    /// Gradients of the scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(TensorError::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(lv.shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if node.needs_grad {
                self.propagate(node, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut acc = |v: Var, d: Tensor| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&d),
                slot @ None => *slot = Some(d),
            }
        };
        match &node.op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                if self.needs(*a) {
                    acc(*a, matmul_nt(g, self.value(*b)));
                }
                if self.needs(*b) {
                    acc(*b, matmul_tn(self.value(*a), g));
                }
            }
            Op::MatMulT(a, b) => {
                if self.needs(*a) {
                    acc(*a, matmul_nn(g, self.value(*b)));
                }
                if self.needs(*b) {
                    acc(*b, matmul_tn(g, self.value(*a)));
                }
            }
            Op::Transpose(a) => acc(*a, g.transpose()),
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::AddRow(a, row) => {
                acc(*a, g.clone());
                if self.needs(*row) {
                    acc(*row, column_sums(g));
                }
            }
            Op::Scale(a, c) => acc(*a, g.map(|v| v * c)),
            Op::Gelu(a) => {
                let x = self.value(*a);
                let mut d = g.clone();
                for (dv, xv) in d.data_mut().iter_mut().zip(x.data()) {
                    *dv *= gelu_grad(*xv);
                }
                acc(*a, d);
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                normed,
                inv_std,
            } => {
                let n = normed.cols();
                let gv = self.value(*gain).data();
                if self.needs(*x) {
                    let mut dx = Tensor::zeros(normed.shape());
                    for r in 0..normed.rows() {
                        let gr = g.row(r);
                        let xh = normed.row(r);
                        let dxh: Vec<f64> = gr.iter().zip(gv).map(|(a, b)| a * b).collect();
                        let mean_dxh = dxh.iter().sum::<f64>() / n as f64;
                        let mean_dxh_xh =
                            dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                        for c in 0..n {
                            dx.data_mut()[r * n + c] =
                                inv_std[r] * (dxh[c] - mean_dxh - xh[c] * mean_dxh_xh);
                        }
                    }
                    acc(*x, dx);
                }
                if self.needs(*gain) {
                    let mut dg = Tensor::zeros(&[1, n]);
                    for r in 0..normed.rows() {
                        for c in 0..n {
                            dg.data_mut()[c] += g.at(r, c) * normed.at(r, c);
                        }
                    }
                    acc(*gain, dg);
                }
                if self.needs(*bias) {
                    acc(*bias, column_sums(g));
                }
            }
            Op::SoftmaxRows(a) => {
                let p = &node.value;
                let c = p.cols();
                let mut d = Tensor::zeros(p.shape());
                for r in 0..p.rows() {
                    let (pr, gr) = (p.row(r), g.row(r));
                    let dot: f64 = pr.iter().zip(gr).map(|(x, y)| x * y).sum();
                    for j in 0..c {
                        d.data_mut()[r * c + j] = pr[j] * (gr[j] - dot);
                    }
                }
                acc(*a, d);
            }
            Op::CrossEntropyRows {
                probs,
                target,
                row_mask,
            } => {
                let p = self.value(*probs);
                let active = row_mask.iter().filter(|&&m| m).count();
                let scale = g.item() / active as f64;
                let c = p.cols();
                let mut d = Tensor::zeros(p.shape());
                for (r, _) in row_mask.iter().enumerate().filter(|(_, &m)| m) {
                    for j in 0..c {
                        let (pv, tv) = (p.at(r, j), target.at(r, j));
                        if tv != 0.0 && pv > LOG_EPSILON {
                            d.data_mut()[r * c + j] = -scale * tv / pv;
                        }
                    }
                }
                acc(*probs, d);
            }
            Op::GatherRows(a, idx) => {
                let src = self.value(*a);
                let c = src.cols();
                let mut d = Tensor::zeros(src.shape());
                for (r, &i) in idx.iter().enumerate() {
                    for j in 0..c {
                        d.data_mut()[i * c + j] += g.at(r, j);
                    }
                }
                acc(*a, d);
            }
            Op::GatherCols(a, idx) => {
                let src = self.value(*a);
                let c = src.cols();
                let mut d = Tensor::zeros(src.shape());
                for r in 0..src.rows() {
                    for (k, &j) in idx.iter().enumerate() {
                        d.data_mut()[r * c + j] += g.at(r, k);
                    }
                }
                acc(*a, d);
            }
            Op::SliceCols(a, start) => {
                let src = self.value(*a);
                let c = src.cols();
                let w = g.cols();
                let mut d = Tensor::zeros(src.shape());
                for r in 0..src.rows() {
                    d.data_mut()[r * c + start..r * c + start + w].copy_from_slice(g.row(r));
                }
                acc(*a, d);
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if self.needs(p) {
                        let mut d = Tensor::zeros(self.shape(p));
                        for r in 0..g.rows() {
                            d.data_mut()[r * w..(r + 1) * w]
                                .copy_from_slice(&g.row(r)[offset..offset + w]);
                        }
                        acc(p, d);
                    }
                    offset += w;
                }
            }
            Op::MaskRows(a, keep) => {
                let c = g.cols();
                let mut d = g.clone();
                for (r, &k) in keep.iter().enumerate() {
                    if !k {
                        d.data_mut()[r * c..(r + 1) * c].fill(0.0);
                    }
                }
                acc(*a, d);
            }
            Op::RepeatRows(a) => acc(*a, column_sums(g)),
            Op::Sum(a) => acc(*a, Tensor::filled(self.shape(*a), g.item())),
            Op::SumSquares(a) => {
                let s = 2.0 * g.item();
                acc(*a, self.value(*a).map(|v| s * v));
            }
            Op::AddAll(parts) => {
                for &p in parts {
                    acc(p, g.clone());
                }
            }
        }
    }
}

/// Result of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient for every parameter registered in `graph`; parameters the
    /// loss does not depend on get an all-zero tensor.
    pub fn params(&self, graph: &Graph) -> BTreeMap<String, Tensor> {
        graph
            .params
            .iter()
            .map(|(name, &v)| {
                let g = self
                    .wrt(v)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(graph.shape(v)));
                (name.clone(), g)
            })
            .collect()
    }
}

fn column_sums(g: &Tensor) -> Tensor {
    let c = g.cols();
    let mut out = Tensor::zeros(&[1, c]);
    for r in 0..g.rows() {
        for (o, v) in out.data_mut().iter_mut().zip(g.row(r)) {
            *o += v;
        }
    }
    out
}

pub(crate) fn softmax_matrix(t: &Tensor, mask: Option<&[bool]>) -> Result<Tensor, TensorError> {
    let (r, c) = (t.rows(), t.cols());
    let mut out = Tensor::zeros(t.shape());
    for row in 0..r {
        let allowed = |j: usize| mask.map_or(true, |m| m[row * c + j]);
        let x = t.row(row);
        let mut max = f64::NEG_INFINITY;
        for (j, &v) in x.iter().enumerate() {
            if allowed(j) && v > max {
                max = v;
            }
        }
        if max == f64::NEG_INFINITY {
            return Err(TensorError::FullyMaskedRow { row });
        }
        let mut denom = 0.0;
        let o = &mut out.data_mut()[row * c..(row + 1) * c];
        for (j, &v) in x.iter().enumerate() {
            if allowed(j) {
                let e = (v - max).exp();
                o[j] = e;
                denom += e;
            }
        }
        for v in o.iter_mut() {
            *v /= denom;
        }
    }
    Ok(out)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    let du = GELU_C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}
