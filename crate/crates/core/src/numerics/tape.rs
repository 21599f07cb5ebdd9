//! Reverse-mode differentiation over [`Tensor`] values.
//!
//! Every operation appends a node holding its value and a backward rule.
//! [`Tape::backward`] walks the nodes in reverse recording order and
//! accumulates gradients additively. Gradients are retained for leaves only.

use std::sync::Arc;

use super::tensor::{gemm, Tensor};
use crate::error::NumericsError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unary {
    Tanh,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binary {
    Add,
    Sub,
    Hadamard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    Mean,
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    L1,
    Mse,
}

/// Row-normalization epsilon inside the square root.
pub const LAYER_NORM_EPS: f64 = 1e-5;
/// Below this norm product, cosine distance is pinned to 1.
pub const COSINE_EPS: f64 = 1e-12;
/// Below this range, min-max normalization yields zeros.
pub const RANGE_EPS: f64 = 1e-12;

const NO_ROW: usize = usize::MAX;

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul { a: Var, b: Var, trans_b: bool },
    Binary { kind: Binary, a: Var, b: Var },
    Scale { a: Var, s: f64 },
    Unary { kind: Unary, a: Var },
    AddRow { x: Var, bias: Var },
    Concat { a: Var, b: Var },
    Gather { x: Var, index: Arc<[usize]> },
    /// Items `e` take row `src[e]` of `x` (or row `e` when `src` is None)
    /// and reduce into output row `dst[e]`.
    Reduce { kind: Reduce, x: Var, src: Option<Arc<[usize]>>, dst: Arc<[usize]>, aux: Vec<usize> },
    LayerNorm { x: Var, gain: Var, bias: Var, xhat: Vec<f64>, inv_std: Vec<f64> },
    BasisCombine { coef: Var, row: usize, bases: Vec<Var> },
    CosineRows { a: Var, b: Var, dot: Vec<f64>, na: Vec<f64>, nb: Vec<f64> },
    MinMax { x: Var, seg: Arc<[usize]>, lo: Vec<usize>, hi: Vec<usize> },
    Loss { kind: LossKind, pred: Var, target: Var },
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::MatMul { a, b, .. } | Op::Binary { a, b, .. } | Op::Concat { a, b } | Op::CosineRows { a, b, .. } => {
                vec![*a, *b]
            }
            Op::Scale { a, .. } | Op::Unary { a, .. } => vec![*a],
            Op::AddRow { x, bias } => vec![*x, *bias],
            Op::Gather { x, .. } | Op::Reduce { x, .. } | Op::MinMax { x, .. } => vec![*x],
            Op::LayerNorm { x, gain, bias, .. } => vec![*x, *gain, *bias],
            Op::BasisCombine { coef, bases, .. } => std::iter::once(*coef).chain(bases.iter().copied()).collect(),
            Op::Loss { pred, target, .. } => vec![*pred, *target],
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    backward_done: bool,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> NumericsError {
    NumericsError::Shape { op, lhs: a.shape(), rhs: b.shape() }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
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
        Tape::default()
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

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records a leaf. Leaves with `requires_grad` receive gradients.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn record(&mut self, name: &'static str, value: Tensor, op: Op) -> Result<Var, NumericsError> {
        if !value.is_finite() {
            return Err(NumericsError::NonFinite(name));
        }
        let rg = op.inputs().iter().any(|&i| self.nodes[i.0].requires_grad);
        Ok(self.push(value, op, rg))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.rows() {
            return Err(shape_err("matmul", x, y));
        }
        let mut out = Tensor::zeros(x.rows(), y.cols());
        gemm(x, false, y, false, 0.0, &mut out);
        self.record("matmul", out, Op::MatMul { a, b, trans_b: false })
    }

    /// `x * w^T`: applies the linear map `w` (out x in) to every row of `x`.
    pub fn linear(&mut self, x: Var, w: Var) -> Result<Var, NumericsError> {
        let (a, b) = (self.value(x), self.value(w));
        if a.cols() != b.cols() {
            return Err(shape_err("linear", a, b));
        }
        let mut out = Tensor::zeros(a.rows(), b.rows());
        gemm(a, false, b, true, 0.0, &mut out);
        self.record("linear", out, Op::MatMul { a: x, b: w, trans_b: true })
    }

    pub fn binary(&mut self, kind: Binary, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("elementwise", x, y));
        }
        let out = match kind {
            Binary::Add => x.zip_map(y, |p, q| p + q),
            Binary::Sub => x.zip_map(y, |p, q| p - q),
            Binary::Hadamard => x.zip_map(y, |p, q| p * q),
        };
        self.record("elementwise", out, Op::Binary { kind, a, b })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary(Binary::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary(Binary::Sub, a, b)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary(Binary::Hadamard, a, b)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var, NumericsError> {
        let out = self.value(a).scale(s);
        self.record("scale", out, Op::Scale { a, s })
    }

    pub fn unary(&mut self, kind: Unary, a: Var) -> Result<Var, NumericsError> {
        let out = match kind {
            Unary::Tanh => self.value(a).map(f64::tanh),
            Unary::Sigmoid => self.value(a).map(sigmoid),
        };
        self.record("activation", out, Op::Unary { kind, a })
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, NumericsError> {
        self.unary(Unary::Tanh, a)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, NumericsError> {
        self.unary(Unary::Sigmoid, a)
    }

    /// Adds a `1 x d` bias row to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var, NumericsError> {
        let (a, b) = (self.value(x), self.value(bias));
        if b.rows() != 1 || a.cols() != b.cols() {
            return Err(shape_err("add_row", a, b));
        }
        let mut out = a.clone();
        for r in 0..out.rows() {
            out.row_mut(r).iter_mut().zip(b.data()).for_each(|(o, &c)| *o += c);
        }
        self.record("add_row", out, Op::AddRow { x, bias })
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.rows() != y.rows() {
            return Err(shape_err("concat_cols", x, y));
        }
        let mut out = Tensor::zeros(x.rows(), x.cols() + y.cols());
        for r in 0..x.rows() {
            let row = out.row_mut(r);
            row[..x.cols()].copy_from_slice(x.row(r));
            row[x.cols()..].copy_from_slice(y.row(r));
        }
        self.record("concat_cols", out, Op::Concat { a, b })
    }

    /// Output row `k` is row `index[k]` of `x`.
    pub fn gather_rows(&mut self, x: Var, index: Arc<[usize]>) -> Result<Var, NumericsError> {
        let v = self.value(x);
        if let Some(&bad) = index.iter().find(|&&i| i >= v.rows()) {
            return Err(NumericsError::IndexOutOfRange { index: bad, rows: v.rows() });
        }
        let mut out = Tensor::zeros(index.len(), v.cols());
        for (k, &i) in index.iter().enumerate() {
            out.row_mut(k).copy_from_slice(v.row(i));
        }
        self.record("gather_rows", out, Op::Gather { x, index })
    }

    /// Reduces rows of `x` into `segments` output rows; row `e` goes to
    /// `segment_of[e]`. Empty segments yield zero rows.
    pub fn segment_reduce(
        &mut self,
        kind: Reduce,
        x: Var,
        segment_of: Arc<[usize]>,
        segments: usize,
    ) -> Result<Var, NumericsError> {
        if segment_of.len() != self.value(x).rows() {
            return Err(NumericsError::Shape {
                op: "segment_reduce",
                lhs: self.value(x).shape(),
                rhs: (segment_of.len(), 1),
            });
        }
        self.reduce_impl(kind, x, None, segment_of, segments)
    }

    /// Fused gather + segment reduce: item `e` contributes row `src[e]` of
    /// `x` to output row `dst[e]`.
    pub fn neighbor_reduce(
        &mut self,
        kind: Reduce,
        x: Var,
        src: Arc<[usize]>,
        dst: Arc<[usize]>,
        segments: usize,
    ) -> Result<Var, NumericsError> {
        if src.len() != dst.len() {
            return Err(NumericsError::Shape { op: "neighbor_reduce", lhs: (src.len(), 1), rhs: (dst.len(), 1) });
        }
        let rows = self.value(x).rows();
        if let Some(&bad) = src.iter().find(|&&i| i >= rows) {
            return Err(NumericsError::IndexOutOfRange { index: bad, rows });
        }
        self.reduce_impl(kind, x, Some(src), dst, segments)
    }

    fn reduce_impl(
        &mut self,
        kind: Reduce,
        x: Var,
        src: Option<Arc<[usize]>>,
        dst: Arc<[usize]>,
        segments: usize,
    ) -> Result<Var, NumericsError> {
        if let Some(&bad) = dst.iter().find(|&&s| s >= segments) {
            return Err(NumericsError::SegmentOutOfRange { id: bad, segments });
        }
        let v = self.value(x);
        let d = v.cols();
        let row_of = |e: usize| src.as_ref().map_or(e, |s| s[e]);
        let mut out = Tensor::zeros(segments, d);
        let aux = match kind {
            Reduce::Mean => {
                let mut counts = vec![0usize; segments];
                for (e, &s) in dst.iter().enumerate() {
                    counts[s] += 1;
                    out.row_mut(s).iter_mut().zip(v.row(row_of(e))).for_each(|(o, &x)| *o += x);
                }
                for (s, &c) in counts.iter().enumerate() {
                    if c > 1 {
                        let inv = 1.0 / c as f64;
                        out.row_mut(s).iter_mut().for_each(|o| *o *= inv);
                    }
                }
                counts
            }
            Reduce::Max | Reduce::Min => {
                // aux[s * d + c] = item index that won, NO_ROW when empty.
                let mut arg = vec![NO_ROW; segments * d];
                let better = |new: f64, old: f64| if kind == Reduce::Max { new > old } else { new < old };
                for (e, &s) in dst.iter().enumerate() {
                    let row = v.row(row_of(e));
                    for c in 0..d {
                        let slot = &mut arg[s * d + c];
                        if *slot == NO_ROW || better(row[c], out.get(s, c)) {
                            *slot = e;
                            out.set(s, c, row[c]);
                        }
                    }
                }
                arg
            }
        };
        self.record("segment_reduce", out, Op::Reduce { kind, x, src, dst, aux })
    }

    /// Per-row standardization with `LAYER_NORM_EPS`, then `gain * xhat + bias`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var, NumericsError> {
        let (v, g, b) = (self.value(x), self.value(gain), self.value(bias));
        let d = v.cols();
        if d < 2 {
            return Err(NumericsError::Invalid("layer_norm needs at least 2 columns".into()));
        }
        if g.shape() != (1, d) || b.shape() != (1, d) {
            return Err(shape_err("layer_norm", v, g));
        }
        let mut xhat = vec![0.0; v.len()];
        let mut inv_std = vec![0.0; v.rows()];
        let mut out = Tensor::zeros(v.rows(), d);
        for r in 0..v.rows() {
            let row = v.row(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std[r] = inv;
            for c in 0..d {
                let h = (row[c] - mean) * inv;
                xhat[r * d + c] = h;
                out.set(r, c, h * g.data()[c] + b.data()[c]);
            }
        }
        self.record("layer_norm", out, Op::LayerNorm { x, gain, bias, xhat, inv_std })
    }

    /// `sum_b coef[row, b] * bases[b]`.
    pub fn basis_combine(&mut self, coef: Var, row: usize, bases: &[Var]) -> Result<Var, NumericsError> {
        let a = self.value(coef);
        if row >= a.rows() || a.cols() != bases.len() || bases.is_empty() {
            return Err(NumericsError::Invalid(format!(
                "basis_combine: coefficient shape {:?}, row {row}, {} bases",
                a.shape(),
                bases.len()
            )));
        }
        let shape = self.value(bases[0]).shape();
        let mut out = Tensor::zeros(shape.0, shape.1);
        for (b, &v) in bases.iter().enumerate() {
            let m = self.value(v);
            if m.shape() != shape {
                return Err(shape_err("basis_combine", self.value(bases[0]), m));
            }
            let w = a.get(row, b);
            out.data_mut().iter_mut().zip(m.data()).for_each(|(o, &x)| *o += w * x);
        }
        self.record("basis_combine", out, Op::BasisCombine { coef, row, bases: bases.to_vec() })
    }

    /// Row-wise cosine distance `1 - cos(a_i, b_i)` as an `n x 1` column.
    /// Rows whose norm product is below `COSINE_EPS` get distance 1 and no gradient.
    pub fn cosine_distance_rows(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("cosine_distance_rows", x, y));
        }
        let n = x.rows();
        let (mut dot, mut na, mut nb) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut out = Tensor::zeros(n, 1);
        for r in 0..n {
            let (p, q) = (x.row(r), y.row(r));
            dot[r] = p.iter().zip(q).map(|(u, v)| u * v).sum();
            na[r] = p.iter().map(|u| u * u).sum::<f64>().sqrt();
            nb[r] = q.iter().map(|u| u * u).sum::<f64>().sqrt();
            let denom = na[r] * nb[r];
            out.set(r, 0, if denom < COSINE_EPS { 1.0 } else { 1.0 - dot[r] / denom });
        }
        self.record("cosine_distance_rows", out, Op::CosineRows { a, b, dot, na, nb })
    }

    /// Min-max rescaling of an `n x 1` column to [0, 1] within each segment.
    /// Segments whose range is below `RANGE_EPS` map to zeros.
    pub fn minmax_normalize(&mut self, x: Var, segment_of: Arc<[usize]>, segments: usize) -> Result<Var, NumericsError> {
        let v = self.value(x);
        if v.cols() != 1 || segment_of.len() != v.rows() {
            return Err(NumericsError::Shape { op: "minmax_normalize", lhs: v.shape(), rhs: (segment_of.len(), 1) });
        }
        if let Some(&bad) = segment_of.iter().find(|&&s| s >= segments) {
            return Err(NumericsError::SegmentOutOfRange { id: bad, segments });
        }
        let (mut lo, mut hi) = (vec![NO_ROW; segments], vec![NO_ROW; segments]);
        let vals = v.data();
        for (i, &s) in segment_of.iter().enumerate() {
            if lo[s] == NO_ROW || vals[i] < vals[lo[s]] {
                lo[s] = i;
            }
            if hi[s] == NO_ROW || vals[i] > vals[hi[s]] {
                hi[s] = i;
            }
        }
        let mut out = Tensor::zeros(v.rows(), 1);
        for (i, &s) in segment_of.iter().enumerate() {
            let (mn, mx) = (vals[lo[s]], vals[hi[s]]);
            if mx - mn >= RANGE_EPS {
                out.set(i, 0, (vals[i] - mn) / (mx - mn));
            }
        }
        self.record("minmax_normalize", out, Op::MinMax { x, seg: segment_of, lo, hi })
    }

    /// Mean absolute or mean squared error as a 1x1 value.
    pub fn loss(&mut self, kind: LossKind, pred: Var, target: Var) -> Result<Var, NumericsError> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(shape_err("loss", p, t));
        }
        let n = p.len().max(1) as f64;
        let total: f64 = match kind {
            LossKind::L1 => p.data().iter().zip(t.data()).map(|(a, b)| (a - b).abs()).sum(),
            LossKind::Mse => p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum(),
        };
        self.record("loss", Tensor::scalar(total / n), Op::Loss { kind, pred, target })
    }

    /// Gradient of the last backward pass for `v`; zeros when `v` received none.
    pub fn grad(&self, v: Var) -> Tensor {
        match self.grads.get(v.0).and_then(Option::as_ref) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.value(v).shape();
                Tensor::zeros(r, c)
            }
        }
    }

    pub fn backward(&mut self, root: Var) -> Result<(), NumericsError> {
        let order: Vec<Var> = (0..self.nodes.len()).rev().map(Var).collect();
        self.backward_in_order(root, &order)
    }

    /// Runs the backward pass visiting nodes in `order`, which must list every
    /// node once with each node before all of its inputs.
    pub fn backward_in_order(&mut self, root: Var, order: &[Var]) -> Result<(), NumericsError> {
        if self.backward_done {
            return Err(NumericsError::BackwardTwice);
        }
        if root.0 >= self.nodes.len() {
            return Err(NumericsError::DetachedRoot);
        }
        let shape = self.value(root).shape();
        if shape != (1, 1) {
            return Err(NumericsError::NonScalarRoot(shape));
        }
        if order.len() != self.nodes.len() {
            return Err(NumericsError::InvalidOrder(format!("{} entries for {} nodes", order.len(), self.nodes.len())));
        }
        let mut position = vec![usize::MAX; self.nodes.len()];
        for (p, v) in order.iter().enumerate() {
            if v.0 >= self.nodes.len() || position[v.0] != usize::MAX {
                return Err(NumericsError::InvalidOrder(format!("node {} repeated or unknown", v.0)));
            }
            position[v.0] = p;
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.op.inputs().iter().any(|inp| position[inp.0] < position[i]) {
                return Err(NumericsError::InvalidOrder(format!("node {i} visited after one of its inputs")));
            }
        }
        self.backward_done = true;

        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Tensor::scalar(1.0));
        for &v in order {
            let node = &self.nodes[v.0];
            if !node.requires_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[v.0].take() else { continue };
            self.propagate(v, &g, &mut grads);
        }
        self.grads = grads;
        Ok(())
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn propagate(&self, v: Var, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[v.0];
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b, trans_b } => {
                let (x, y) = (self.value(*a), self.value(*b));
                if self.needs(*a) {
                    // C = A B  -> dA = dC B^T ;  C = A B^T -> dA = dC B
                    let mut da = Tensor::zeros(x.rows(), x.cols());
                    gemm(g, false, y, !trans_b, 0.0, &mut da);
                    accumulate(grads, *a, da);
                }
                if self.needs(*b) {
                    let mut db = Tensor::zeros(y.rows(), y.cols());
                    if *trans_b {
                        gemm(g, true, x, false, 0.0, &mut db);
                    } else {
                        gemm(x, true, g, false, 0.0, &mut db);
                    }
                    accumulate(grads, *b, db);
                }
            }
            Op::Binary { kind, a, b } => {
                let (x, y) = (self.value(*a), self.value(*b));
                match kind {
                    Binary::Add => {
                        if self.needs(*a) {
                            accumulate(grads, *a, g.clone());
                        }
                        if self.needs(*b) {
                            accumulate(grads, *b, g.clone());
                        }
                    }
                    Binary::Sub => {
                        if self.needs(*a) {
                            accumulate(grads, *a, g.clone());
                        }
                        if self.needs(*b) {
                            accumulate(grads, *b, g.scale(-1.0));
                        }
                    }
                    Binary::Hadamard => {
                        if self.needs(*a) {
                            accumulate(grads, *a, g.zip_map(y, |p, q| p * q));
                        }
                        if self.needs(*b) {
                            accumulate(grads, *b, g.zip_map(x, |p, q| p * q));
                        }
                    }
                }
            }
            Op::Scale { a, s } => accumulate(grads, *a, g.scale(*s)),
            Op::Unary { kind, a } => {
                let d = match kind {
                    Unary::Tanh => g.zip_map(out, |p, y| p * (1.0 - y * y)),
                    Unary::Sigmoid => g.zip_map(out, |p, y| p * y * (1.0 - y)),
                };
                accumulate(grads, *a, d);
            }
            Op::AddRow { x, bias } => {
                if self.needs(*x) {
                    accumulate(grads, *x, g.clone());
                }
                if self.needs(*bias) {
                    let mut db = Tensor::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        db.data_mut().iter_mut().zip(g.row(r)).for_each(|(o, &p)| *o += p);
                    }
                    accumulate(grads, *bias, db);
                }
            }
            Op::Concat { a, b } => {
                let p = self.value(*a).cols();
                let q = self.value(*b).cols();
                if self.needs(*a) {
                    let mut da = Tensor::zeros(g.rows(), p);
                    for r in 0..g.rows() {
                        da.row_mut(r).copy_from_slice(&g.row(r)[..p]);
                    }
                    accumulate(grads, *a, da);
                }
                if self.needs(*b) {
                    let mut db = Tensor::zeros(g.rows(), q);
                    for r in 0..g.rows() {
                        db.row_mut(r).copy_from_slice(&g.row(r)[p..]);
                    }
                    accumulate(grads, *b, db);
                }
            }
            Op::Gather { x, index } => {
                let (r, c) = self.value(*x).shape();
                let mut dx = Tensor::zeros(r, c);
                for (k, &i) in index.iter().enumerate() {
                    dx.row_mut(i).iter_mut().zip(g.row(k)).for_each(|(o, &p)| *o += p);
                }
                accumulate(grads, *x, dx);
            }
            Op::Reduce { kind, x, src, dst, aux } => {
                let (r, d) = self.value(*x).shape();
                let row_of = |e: usize| src.as_ref().map_or(e, |s| s[e]);
                let mut dx = Tensor::zeros(r, d);
                match kind {
                    Reduce::Mean => {
                        for (e, &s) in dst.iter().enumerate() {
                            let inv = 1.0 / aux[s] as f64;
                            dx.row_mut(row_of(e)).iter_mut().zip(g.row(s)).for_each(|(o, &p)| *o += p * inv);
                        }
                    }
                    Reduce::Max | Reduce::Min => {
                        for s in 0..g.rows() {
                            for c in 0..d {
                                let e = aux[s * d + c];
                                if e != NO_ROW {
                                    let row = row_of(e);
                                    dx.set(row, c, dx.get(row, c) + g.get(s, c));
                                }
                            }
                        }
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::LayerNorm { x, gain, bias, xhat, inv_std } => {
                let (n, d) = g.shape();
                let gv = self.value(*gain).data();
                if self.needs(*gain) {
                    let mut dg = Tensor::zeros(1, d);
                    for r in 0..n {
                        for c in 0..d {
                            dg.data_mut()[c] += g.get(r, c) * xhat[r * d + c];
                        }
                    }
                    accumulate(grads, *gain, dg);
                }
                if self.needs(*bias) {
                    let mut db = Tensor::zeros(1, d);
                    for r in 0..n {
                        db.data_mut().iter_mut().zip(g.row(r)).for_each(|(o, &p)| *o += p);
                    }
                    accumulate(grads, *bias, db);
                }
                if self.needs(*x) {
                    let mut dx = Tensor::zeros(n, d);
                    let mut dxhat = vec![0.0; d];
                    for r in 0..n {
                        let h = &xhat[r * d..(r + 1) * d];
                        for c in 0..d {
                            dxhat[c] = g.get(r, c) * gv[c];
                        }
                        let mean_d = dxhat.iter().sum::<f64>() / d as f64;
                        let mean_dh = dxhat.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                        for c in 0..d {
                            dx.set(r, c, inv_std[r] * (dxhat[c] - mean_d - h[c] * mean_dh));
                        }
                    }
                    accumulate(grads, *x, dx);
                }
            }
            Op::BasisCombine { coef, row, bases } => {
                if self.needs(*coef) {
                    let (r, c) = self.value(*coef).shape();
                    let mut da = Tensor::zeros(r, c);
                    for (b, &m) in bases.iter().enumerate() {
                        let dotp: f64 = g.data().iter().zip(self.value(m).data()).map(|(p, q)| p * q).sum();
                        da.set(*row, b, dotp);
                    }
                    accumulate(grads, *coef, da);
                }
                let a = self.value(*coef);
                for (b, &m) in bases.iter().enumerate() {
                    if self.needs(m) {
                        accumulate(grads, m, g.scale(a.get(*row, b)));
                    }
                }
            }
            Op::CosineRows { a, b, dot, na, nb } => {
                let (x, y) = (self.value(*a), self.value(*b));
                let d = x.cols();
                let mut da = Tensor::zeros(x.rows(), d);
                let mut db = Tensor::zeros(x.rows(), d);
                for r in 0..x.rows() {
                    let denom = na[r] * nb[r];
                    if denom < COSINE_EPS {
                        continue;
                    }
                    let cos = dot[r] / denom;
                    let gr = g.get(r, 0);
                    for c in 0..d {
                        let (p, q) = (x.get(r, c), y.get(r, c));
                        da.set(r, c, -gr * (q / denom - cos * p / (na[r] * na[r])));
                        db.set(r, c, -gr * (p / denom - cos * q / (nb[r] * nb[r])));
                    }
                }
                if self.needs(*a) {
                    accumulate(grads, *a, da);
                }
                if self.needs(*b) {
                    accumulate(grads, *b, db);
                }
            }
            Op::MinMax { x, seg, lo, hi } => {
                let vals = self.value(*x).data();
                let mut dx = Tensor::zeros(vals.len(), 1);
                let segments = lo.len();
                let (mut dlo, mut dhi) = (vec![0.0; segments], vec![0.0; segments]);
                for (i, &s) in seg.iter().enumerate() {
                    let (mn, mx) = (vals[lo[s]], vals[hi[s]]);
                    let range = mx - mn;
                    if range < RANGE_EPS {
                        continue;
                    }
                    let gi = g.get(i, 0);
                    dx.data_mut()[i] += gi / range;
                    dlo[s] += gi * (vals[i] - mx) / (range * range);
                    dhi[s] -= gi * (vals[i] - mn) / (range * range);
                }
                for s in 0..segments {
                    if lo[s] != NO_ROW {
                        dx.data_mut()[lo[s]] += dlo[s];
                        dx.data_mut()[hi[s]] += dhi[s];
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::Loss { kind, pred, target } => {
                let (p, t) = (self.value(*pred), self.value(*target));
                let n = p.len().max(1) as f64;
                let scale = g.item() / n;
                let dp = match kind {
                    LossKind::L1 => p.zip_map(t, |a, b| {
                        let r = a - b;
                        if r > 0.0 {
                            scale
                        } else if r < 0.0 {
                            -scale
                        } else {
                            0.0
                        }
                    }),
                    LossKind::Mse => p.zip_map(t, |a, b| 2.0 * (a - b) * scale),
                };
                if self.needs(*target) {
                    accumulate(grads, *target, dp.scale(-1.0));
                }
                if self.needs(*pred) {
                    accumulate(grads, *pred, dp);
                }
            }
        }
    }
}
