use std::collections::HashMap;

use crate::error::{shape_err, AutodiffError, Result};
use crate::param::{ParamId, ParamStore};
use crate::real::Real;
use crate::tensor::{gemm_acc, gemm_nt_acc, gemm_tn_acc, Tensor};

/// Additive attention mask value for disallowed positions.
pub const MASK_NEG: f64 = -1e9;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulRow(Var, Var),
    Scale(Var, T),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    Embedding(Var, Vec<usize>),
    MeanBag(Var, Vec<Vec<usize>>),
    Softmax(Var),
    LogSoftmax(Var),
    LayerNorm(Var, Vec<T>),
    Relu(Var),
    Dropout(Var, Tensor<T>),
    CrossEntropy(Var, Vec<usize>, Tensor<T>),
    Sum(Var),
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Record of a forward computation, consumed by [`Tape::backward`].
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    params: HashMap<ParamId, Var>,
}

fn row_softmax<T: Real>(x: &[T], out: &mut [T]) {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for (o, &v) in out.iter_mut().zip(x) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

fn row_log_softmax<T: Real>(x: &[T], out: &mut [T]) {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = x.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = v - lse;
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: HashMap::new(),
        }
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

    fn push(&mut self, value: Tensor<T>, op: Op<T>, name: &'static str) -> Result<Var> {
        if cfg!(debug_assertions) && !value.is_finite() {
            return Err(AutodiffError::NonFinite { op: name });
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Constant,
        });
        Var(self.nodes.len() - 1)
    }

    /// Brings a parameter onto the tape. Repeated calls return the same var,
    /// so every use of a parameter feeds one gradient accumulator.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: store.value(id).clone(),
            op: Op::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k) = (av.rows(), av.cols());
        if bv.shape().len() != 2 || bv.shape()[0] != k {
            return Err(shape_err("matmul", av.shape(), bv.shape()));
        }
        let n = bv.cols();
        let mut out = vec![T::zero(); m * n];
        gemm_acc(av.data(), bv.data(), &mut out, m, k, n);
        let value = Tensor::new(vec![m, n], out)?;
        self.push(value, Op::MatMul(a, b), "matmul")
    }

    /// `a · bᵀ` without materializing the transpose.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k) = (av.rows(), av.cols());
        if bv.cols() != k {
            return Err(shape_err("matmul_nt", av.shape(), bv.shape()));
        }
        let n = bv.rows();
        let mut out = vec![T::zero(); m * n];
        gemm_nt_acc(av.data(), bv.data(), &mut out, m, k, n);
        let value = Tensor::new(vec![m, n], out)?;
        self.push(value, Op::MatMulNt(a, b), "matmul_nt")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let (m, n) = (av.rows(), av.cols());
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = av.data()[i * n + j];
            }
        }
        let value = Tensor::new(vec![n, m], out)?;
        self.push(value, Op::Transpose(a), "transpose")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(shape_err("add", av.shape(), bv.shape()));
        }
        let mut value = av.clone();
        value.add_assign(bv);
        self.push(value, Op::Add(a, b), "add")
    }

    /// Adds a row vector to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.len() != av.cols() {
            return Err(shape_err("add_row", av.shape(), rv.shape()));
        }
        let mut value = av.clone();
        for r in 0..value.rows() {
            for (x, &b) in value.row_mut(r).iter_mut().zip(rv.data()) {
                *x += b;
            }
        }
        self.push(value, Op::AddRow(a, row), "add_row")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(shape_err("mul", av.shape(), bv.shape()));
        }
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| x * y).collect();
        let value = Tensor::new(av.shape().to_vec(), data)?;
        self.push(value, Op::Mul(a, b), "mul")
    }

    /// Multiplies every row of `a` elementwise by a row vector.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.len() != av.cols() {
            return Err(shape_err("mul_row", av.shape(), rv.shape()));
        }
        let mut value = av.clone();
        for r in 0..value.rows() {
            for (x, &g) in value.row_mut(r).iter_mut().zip(rv.data()) {
                *x *= g;
            }
        }
        self.push(value, Op::MulRow(a, row), "mul_row")
    }

    pub fn scale(&mut self, a: Var, s: T) -> Result<Var> {
        let value = self.value(a).map(|x| x * s);
        self.push(value, Op::Scale(a, s), "scale")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(first) = parts.first() else {
            return Err(AutodiffError::Invalid {
                op: "concat_cols",
                msg: "no inputs".into(),
            });
        };
        let rows = self.value(*first).rows();
        let mut total = 0;
        for &p in parts {
            let pv = self.value(p);
            if pv.rows() != rows {
                return Err(shape_err("concat_cols", self.value(*first).shape(), pv.shape()));
            }
            total += pv.cols();
        }
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(r));
            }
        }
        let value = Tensor::new(vec![rows, total], out)?;
        self.push(value, Op::ConcatCols(parts.to_vec()), "concat_cols")
    }

    /// Columns `start..end` of `a`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let av = self.value(a);
        if start >= end || end > av.cols() {
            return Err(AutodiffError::Invalid {
                op: "slice_cols",
                msg: format!("range {start}..{end} of {:?}", av.shape()),
            });
        }
        let rows = av.rows();
        let mut out = Vec::with_capacity(rows * (end - start));
        for r in 0..rows {
            out.extend_from_slice(&av.row(r)[start..end]);
        }
        let value = Tensor::new(vec![rows, end - start], out)?;
        self.push(value, Op::SliceCols(a, start), "slice_cols")
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(first) = parts.first() else {
            return Err(AutodiffError::Invalid {
                op: "concat_rows",
                msg: "no inputs".into(),
            });
        };
        let cols = self.value(*first).cols();
        let mut out = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let pv = self.value(p);
            if pv.cols() != cols {
                return Err(shape_err("concat_rows", self.value(*first).shape(), pv.shape()));
            }
            rows += pv.rows();
            out.extend_from_slice(pv.data());
        }
        let value = Tensor::new(vec![rows, cols], out)?;
        self.push(value, Op::ConcatRows(parts.to_vec()), "concat_rows")
    }

    /// Rows `start..end` of `a`.
    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let av = self.value(a);
        if start >= end || end > av.rows() {
            return Err(AutodiffError::Invalid {
                op: "slice_rows",
                msg: format!("range {start}..{end} of {:?}", av.shape()),
            });
        }
        let c = av.cols();
        let value = Tensor::new(vec![end - start, c], av.data()[start * c..end * c].to_vec())?;
        self.push(value, Op::SliceRows(a, start), "slice_rows")
    }

    /// Gathers rows of `table` (shape `V x d`).
    pub fn embedding(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let tv = self.value(table);
        let (v, d) = (tv.rows(), tv.cols());
        let mut out = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= v {
                return Err(AutodiffError::Index {
                    op: "embedding",
                    index: i,
                    size: v,
                });
            }
            out.extend_from_slice(tv.row(i));
        }
        let value = Tensor::new(vec![indices.len(), d], out)?;
        self.push(value, Op::Embedding(table, indices.to_vec()), "embedding")
    }

    /// One output row per bag: the mean of the bag's rows of `table`.
    pub fn mean_bag(&mut self, table: Var, bags: &[Vec<usize>]) -> Result<Var> {
        let tv = self.value(table);
        let (v, d) = (tv.rows(), tv.cols());
        let mut out = vec![T::zero(); bags.len() * d];
        for (b, bag) in bags.iter().enumerate() {
            if bag.is_empty() {
                return Err(AutodiffError::Invalid {
                    op: "mean_bag",
                    msg: format!("bag {b} is empty"),
                });
            }
            let inv = T::one() / T::from_lit(bag.len() as f64);
            let dst = &mut out[b * d..(b + 1) * d];
            for &i in bag {
                if i >= v {
                    return Err(AutodiffError::Index {
                        op: "mean_bag",
                        index: i,
                        size: v,
                    });
                }
                for (o, &x) in dst.iter_mut().zip(tv.row(i)) {
                    *o += x * inv;
                }
            }
        }
        let value = Tensor::new(vec![bags.len(), d], out)?;
        self.push(value, Op::MeanBag(table, bags.to_vec()), "mean_bag")
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let mut value = Tensor::zeros(av.shape());
        for r in 0..av.rows() {
            row_softmax(av.row(r), value.row_mut(r));
        }
        self.push(value, Op::Softmax(a), "softmax")
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let mut value = Tensor::zeros(av.shape());
        for r in 0..av.rows() {
            row_log_softmax(av.row(r), value.row_mut(r));
        }
        self.push(value, Op::LogSoftmax(a), "log_softmax")
    }

    /// Row-wise standardization to zero mean and unit variance. The affine
    /// gain and bias are applied separately with [`Tape::mul_row`] and
    /// [`Tape::add_row`].
    pub fn layer_norm(&mut self, a: Var, eps: T) -> Result<Var> {
        let av = self.value(a);
        let n = T::from_lit(av.cols() as f64);
        let mut value = Tensor::zeros(av.shape());
        let mut inv_std = Vec::with_capacity(av.rows());
        for r in 0..av.rows() {
            let x = av.row(r);
            let mean = x.iter().copied().sum::<T>() / n;
            let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let is = T::one() / (var + eps).sqrt();
            for (o, &v) in value.row_mut(r).iter_mut().zip(x) {
                *o = (v - mean) * is;
            }
            inv_std.push(is);
        }
        self.push(value, Op::LayerNorm(a, inv_std), "layer_norm")
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|x| x.max(T::zero()));
        self.push(value, Op::Relu(a), "relu")
    }

    /// Multiplies by a caller-supplied mask. The mask carries the inverted
    /// keep-probability scaling, so entries are `0` or `1 / (1 - p)`.
    pub fn dropout(&mut self, a: Var, mask: Tensor<T>) -> Result<Var> {
        let av = self.value(a);
        if av.shape() != mask.shape() {
            return Err(shape_err("dropout", av.shape(), mask.shape()));
        }
        let data = av.data().iter().zip(mask.data()).map(|(&x, &m)| x * m).collect();
        let value = Tensor::new(av.shape().to_vec(), data)?;
        self.push(value, Op::Dropout(a, mask), "dropout")
    }

    /// Sum over rows of `-log softmax(logits[r])[targets[r]]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        let (rows, v) = (lv.rows(), lv.cols());
        if targets.len() != rows {
            return Err(AutodiffError::Invalid {
                op: "cross_entropy",
                msg: format!("{} targets for {rows} rows", targets.len()),
            });
        }
        let mut probs = Tensor::zeros(&[rows, v]);
        let mut loss = T::zero();
        let mut logp = vec![T::zero(); v];
        for (r, &t) in targets.iter().enumerate() {
            if t >= v {
                return Err(AutodiffError::Index {
                    op: "cross_entropy",
                    index: t,
                    size: v,
                });
            }
            row_log_softmax(lv.row(r), &mut logp);
            loss -= logp[t];
            for (p, &l) in probs.row_mut(r).iter_mut().zip(&logp) {
                *p = l.exp();
            }
        }
        self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy(logits, targets.to_vec(), probs),
            "cross_entropy",
        )
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().copied().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), "sum")
    }

    /// Backpropagates from a one-element `root` with upstream gradient 1.
    pub fn backward(&self, root: Var, store: &mut ParamStore<T>) -> Result<()> {
        let rv = self.value(root);
        if rv.len() != 1 {
            return Err(AutodiffError::Invalid {
                op: "backward",
                msg: format!("root must be a scalar, got shape {:?}", rv.shape()),
            });
        }
        self.backward_with(root, Tensor::full(rv.shape(), T::one()), store)
    }

    /// Backpropagates an explicit upstream gradient for `root` and adds the
    /// resulting parameter gradients into `store`.
    pub fn backward_with(&self, root: Var, upstream: Tensor<T>, store: &mut ParamStore<T>) -> Result<()> {
        if upstream.shape() != self.value(root).shape() {
            return Err(shape_err("backward", self.value(root).shape(), upstream.shape()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..=root.0).map(|_| None).collect();
        grads[root.0] = Some(upstream);

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => store.get_mut(*id).grad.add_assign(&g),
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    let mut ga = Tensor::zeros(av.shape());
                    gemm_nt_acc(g.data(), bv.data(), ga.data_mut(), m, n, k);
                    let mut gb = Tensor::zeros(bv.shape());
                    gemm_tn_acc(av.data(), g.data(), gb.data_mut(), m, k, n);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::MatMulNt(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.rows());
                    let mut ga = Tensor::zeros(av.shape());
                    gemm_acc(g.data(), bv.data(), ga.data_mut(), m, n, k);
                    let mut gb = Tensor::zeros(bv.shape());
                    gemm_tn_acc(g.data(), av.data(), gb.data_mut(), m, n, k);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Transpose(a) => {
                    let (n, m) = (g.rows(), g.cols());
                    let mut ga = Tensor::zeros(self.value(*a).shape());
                    for i in 0..n {
                        for j in 0..m {
                            ga.data_mut()[j * n + i] = g.data()[i * m + j];
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *b, g.clone());
                    accumulate(&mut grads, *a, g);
                }
                Op::AddRow(a, row) => {
                    let rv = self.value(*row);
                    let mut gr = Tensor::zeros(rv.shape());
                    for r in 0..g.rows() {
                        for (o, &x) in gr.data_mut().iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                    accumulate(&mut grads, *row, gr);
                    accumulate(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let ga = zip_map(&g, bv, |x, y| x * y);
                    let gb = zip_map(&g, av, |x, y| x * y);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::MulRow(a, row) => {
                    let (av, rv) = (self.value(*a), self.value(*row));
                    let mut ga = g.clone();
                    let mut gr = Tensor::zeros(rv.shape());
                    for r in 0..g.rows() {
                        for (c, x) in ga.row_mut(r).iter_mut().enumerate() {
                            *x *= rv.data()[c];
                        }
                        for (c, o) in gr.data_mut().iter_mut().enumerate() {
                            *o += g.row(r)[c] * av.row(r)[c];
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *row, gr);
                }
                Op::Scale(a, s) => {
                    let s = *s;
                    accumulate(&mut grads, *a, g.map(|x| x * s));
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let pv = self.value(p);
                        let w = pv.cols();
                        let mut gp = Tensor::zeros(pv.shape());
                        for r in 0..g.rows() {
                            gp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + w]);
                        }
                        offset += w;
                        accumulate(&mut grads, p, gp);
                    }
                }
                Op::SliceCols(a, start) => {
                    let mut ga = Tensor::zeros(self.value(*a).shape());
                    let w = g.cols();
                    for r in 0..g.rows() {
                        ga.row_mut(r)[*start..*start + w].copy_from_slice(g.row(r));
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::ConcatRows(parts) => {
                    let c = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let pv = self.value(p);
                        let n = pv.rows() * c;
                        let gp = Tensor::new(pv.shape().to_vec(), g.data()[offset..offset + n].to_vec())?;
                        offset += n;
                        accumulate(&mut grads, p, gp);
                    }
                }
                Op::SliceRows(a, start) => {
                    let mut ga = Tensor::zeros(self.value(*a).shape());
                    let c = g.cols();
                    ga.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                    accumulate(&mut grads, *a, ga);
                }
                Op::Embedding(table, indices) => {
                    let mut gt = Tensor::zeros(self.value(*table).shape());
                    for (r, &i) in indices.iter().enumerate() {
                        for (o, &x) in gt.row_mut(i).iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                    accumulate(&mut grads, *table, gt);
                }
                Op::MeanBag(table, bags) => {
                    let mut gt = Tensor::zeros(self.value(*table).shape());
                    for (b, bag) in bags.iter().enumerate() {
                        let inv = T::one() / T::from_lit(bag.len() as f64);
                        for &i in bag {
                            for (o, &x) in gt.row_mut(i).iter_mut().zip(g.row(b)) {
                                *o += x * inv;
                            }
                        }
                    }
                    accumulate(&mut grads, *table, gt);
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let mut ga = Tensor::zeros(y.shape());
                    for r in 0..y.rows() {
                        let dot: T = g.row(r).iter().zip(y.row(r)).map(|(&d, &p)| d * p).sum();
                        for ((o, &d), &p) in ga.row_mut(r).iter_mut().zip(g.row(r)).zip(y.row(r)) {
                            *o = p * (d - dot);
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::LogSoftmax(a) => {
                    let y = &node.value;
                    let mut ga = Tensor::zeros(y.shape());
                    for r in 0..y.rows() {
                        let total: T = g.row(r).iter().copied().sum();
                        for ((o, &d), &l) in ga.row_mut(r).iter_mut().zip(g.row(r)).zip(y.row(r)) {
                            *o = d - l.exp() * total;
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::LayerNorm(a, inv_std) => {
                    let y = &node.value;
                    let n = T::from_lit(y.cols() as f64);
                    let mut ga = Tensor::zeros(y.shape());
                    for r in 0..y.rows() {
                        let (gr, yr) = (g.row(r), y.row(r));
                        let mean_g = gr.iter().copied().sum::<T>() / n;
                        let mean_gy = gr.iter().zip(yr).map(|(&d, &v)| d * v).sum::<T>() / n;
                        for ((o, &d), &v) in ga.row_mut(r).iter_mut().zip(gr).zip(yr) {
                            *o = inv_std[r] * (d - mean_g - v * mean_gy);
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::Relu(a) => {
                    let av = self.value(*a);
                    let ga = zip_map(&g, av, |d, x| if x > T::zero() { d } else { T::zero() });
                    accumulate(&mut grads, *a, ga);
                }
                Op::Dropout(a, mask) => {
                    accumulate(&mut grads, *a, zip_map(&g, mask, |d, m| d * m));
                }
                Op::CrossEntropy(logits, targets, probs) => {
                    let up = g.item();
                    let mut gl = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        gl.row_mut(r)[t] -= T::one();
                    }
                    for x in gl.data_mut() {
                        *x *= up;
                    }
                    accumulate(&mut grads, *logits, gl);
                }
                Op::Sum(a) => {
                    let up = g.item();
                    accumulate(&mut grads, *a, Tensor::full(self.value(*a).shape(), up));
                }
            }
        }
        Ok(())
    }
}

fn zip_map<T: Real>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let mut out = a.clone();
    for (x, &y) in out.data_mut().iter_mut().zip(b.data()) {
        *x = f(*x, y);
    }
    out
}

fn accumulate<T: Real>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
