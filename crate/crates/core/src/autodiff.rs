//! Reverse-mode automatic differentiation over dense row-major matrices.
//!
//! A [`Tape`] records every operation in append order; [`Tape::backward`]
//! walks it once in reverse. Nodes are addressed by [`Var`] handles that are
//! only meaningful on the tape that created them.

use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor({}x{}, {:?})", self.rows, self.cols, self.data)
    }
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} tensor",
                data.len()
            )));
        }
        Ok(Tensor { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    /// The single value of a 1x1 tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    fn matmul(&self, other: &Tensor) -> Tensor {
        let mut out = Tensor::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                dst.iter_mut().zip(row).for_each(|(d, b)| *d += a * b);
            }
        }
        out
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.get(r, c);
            }
        }
        out
    }

    /// Sums a gradient of shape `self.shape()` down to `shape` (the inverse
    /// of broadcasting).
    fn reduce_to(&self, shape: (usize, usize)) -> Tensor {
        if shape == self.shape() {
            return self.clone();
        }
        let mut out = Tensor::zeros(shape.0, shape.1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(r % shape.0, c % shape.1) += self.get(r, c);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    ScalarMul(Var, f64),
    MatMul(Var, Var),
    RowConcat(Var, Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Log(Var),
    Softplus(Var),
    MeanRows(Var),
    Sum(Var),
    ScatterMean { input: Var, index: Vec<usize>, counts: Vec<usize> },
    GatherRows { input: Var, index: Vec<usize> },
    L2NormRows(Var),
    FeatureNorm { input: Var, inv_std: Vec<Option<f64>> },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Column variance below which [`Tape::feature_norm`] only centers.
pub const FEATURE_NORM_MIN_VAR: f64 = 1e-12;

/// Append-only record of a forward computation.
pub struct Tape {
    nodes: Vec<Node>,
    kink_margin: f64,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn broadcastable(a: (usize, usize), b: (usize, usize)) -> bool {
    (b.0 == a.0 || b.0 == 1) && (b.1 == a.1 || b.1 == 1)
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            kink_margin: f64::INFINITY,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest distance of any input to a non-differentiable point seen so
    /// far (leaky-relu at 0, row norms at 0).
    pub fn kink_margin(&self) -> f64 {
        self.kink_margin
    }

    fn note_kink(&mut self, margin: f64) {
        self.kink_margin = self.kink_margin.min(margin);
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn grad_flag(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    /// A leaf that receives gradients.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf treated as a constant.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn binary_broadcast(&mut self, a: Var, b: Var, name: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if !broadcastable(sa, sb) {
            return Err(Error::ShapeMismatch(format!("{name}: {sa:?} with {sb:?}")));
        }
        let (va, vb) = (self.value(a), self.value(b));
        let mut out = Tensor::zeros(sa.0, sa.1);
        for r in 0..sa.0 {
            for c in 0..sa.1 {
                *out.at_mut(r, c) = f(va.get(r, c), vb.get(r % sb.0, c % sb.1));
            }
        }
        Ok(out)
    }

    /// `a + b`; `b` may be `1 x cols` or `1 x 1` and is broadcast.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary_broadcast(a, b, "add", |x, y| x + y)?;
        let g = self.grad_flag(&[a, b]);
        Ok(self.push(v, Op::Add(a, b), g))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary_broadcast(a, b, "sub", |x, y| x - y)?;
        let g = self.grad_flag(&[a, b]);
        Ok(self.push(v, Op::Sub(a, b), g))
    }

    /// Elementwise product with the same broadcasting as [`Tape::add`].
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary_broadcast(a, b, "mul", |x, y| x * y)?;
        let g = self.grad_flag(&[a, b]);
        Ok(self.push(v, Op::Mul(a, b), g))
    }

    pub fn scalar_mul(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x * c);
        let g = self.grad_flag(&[a]);
        self.push(v, Op::ScalarMul(a, c), g)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(Error::ShapeMismatch(format!("matmul: {sa:?} by {sb:?}")));
        }
        let v = self.value(a).matmul(self.value(b));
        let g = self.grad_flag(&[a, b]);
        Ok(self.push(v, Op::MatMul(a, b), g))
    }

    /// Stacks the rows of `b` below the rows of `a`.
    pub fn row_concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.1 {
            return Err(Error::ShapeMismatch(format!("row_concat: {sa:?} over {sb:?}")));
        }
        let mut data = self.value(a).data.clone();
        data.extend_from_slice(&self.value(b).data);
        let v = Tensor::new(sa.0 + sb.0, sa.1, data)?;
        let g = self.grad_flag(&[a, b]);
        Ok(self.push(v, Op::RowConcat(a, b), g))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var> {
        if !(slope > 0.0 && slope < 1.0) {
            return Err(Error::Domain(format!("leaky_relu slope {slope} outside (0, 1)")));
        }
        let x = self.value(a);
        let margin = x.data.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let v = x.map(|v| if v >= 0.0 { v } else { slope * v });
        self.note_kink(margin);
        let g = self.grad_flag(&[a]);
        Ok(self.push(v, Op::LeakyRelu(a, slope), g))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        let g = self.grad_flag(&[a]);
        self.push(v, Op::Sigmoid(a), g)
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if let Some(bad) = x.data.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Domain(format!("log of non-positive value {bad}")));
        }
        let v = x.map(f64::ln);
        let g = self.grad_flag(&[a]);
        Ok(self.push(v, Op::Log(a), g))
    }

    /// `ln(1 + e^x)`, evaluated without overflow.
    pub fn softplus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(softplus);
        let g = self.grad_flag(&[a]);
        self.push(v, Op::Softplus(a), g)
    }

    /// Column means, `r x c -> 1 x c`.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut v = Tensor::zeros(1, x.cols);
        for r in 0..x.rows {
            for c in 0..x.cols {
                v.data[c] += x.get(r, c);
            }
        }
        let n = x.rows.max(1) as f64;
        v.data.iter_mut().for_each(|s| *s /= n);
        let g = self.grad_flag(&[a]);
        self.push(v, Op::MeanRows(a), g)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).data.iter().sum());
        let g = self.grad_flag(&[a]);
        self.push(v, Op::Sum(a), g)
    }

    /// Row `k` of the output is the mean of the input rows `e` with
    /// `index[e] == k`, or zero when there are none.
    pub fn scatter_mean(&mut self, a: Var, index: &[usize], size: usize) -> Result<Var> {
        let x = self.value(a);
        if index.len() != x.rows {
            return Err(Error::ShapeMismatch(format!(
                "scatter_mean: {} indices for {} rows",
                index.len(),
                x.rows
            )));
        }
        if let Some(&bad) = index.iter().find(|&&k| k >= size) {
            return Err(Error::ShapeMismatch(format!("scatter_mean: index {bad} >= size {size}")));
        }
        let mut counts = vec![0usize; size];
        let mut v = Tensor::zeros(size, x.cols);
        for (e, &k) in index.iter().enumerate() {
            counts[k] += 1;
            for c in 0..x.cols {
                *v.at_mut(k, c) += x.get(e, c);
            }
        }
        for (k, &n) in counts.iter().enumerate() {
            if n > 1 {
                for c in 0..x.cols {
                    *v.at_mut(k, c) /= n as f64;
                }
            }
        }
        let g = self.grad_flag(&[a]);
        Ok(self.push(
            v,
            Op::ScatterMean {
                input: a,
                index: index.to_vec(),
                counts,
            },
            g,
        ))
    }

    pub fn gather_rows(&mut self, a: Var, index: &[usize]) -> Result<Var> {
        let x = self.value(a);
        if let Some(&bad) = index.iter().find(|&&k| k >= x.rows) {
            return Err(Error::ShapeMismatch(format!("gather_rows: index {bad} >= {} rows", x.rows)));
        }
        let mut data = Vec::with_capacity(index.len() * x.cols);
        for &k in index {
            data.extend_from_slice(&x.data[k * x.cols..(k + 1) * x.cols]);
        }
        let v = Tensor::new(index.len(), x.cols, data)?;
        let g = self.grad_flag(&[a]);
        Ok(self.push(
            v,
            Op::GatherRows {
                input: a,
                index: index.to_vec(),
            },
            g,
        ))
    }

    /// Euclidean norm of every row, `r x c -> r x 1`.
    pub fn l2_norm_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let norms: Vec<f64> = (0..x.rows)
            .map(|r| x.data[r * x.cols..(r + 1) * x.cols].iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let margin = norms.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        let v = Tensor {
            rows: x.rows,
            cols: 1,
            data: norms,
        };
        self.note_kink(margin);
        let g = self.grad_flag(&[a]);
        self.push(v, Op::L2NormRows(a), g)
    }

    /// Standardizes every column over the rows (population variance).
    /// Columns with variance below [`FEATURE_NORM_MIN_VAR`] are only
    /// centered.
    pub fn feature_norm(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let n = x.rows as f64;
        let mut v = x.clone();
        let mut inv_std = vec![None; x.cols];
        for c in 0..x.cols {
            let mean = (0..x.rows).map(|r| x.get(r, c)).sum::<f64>() / n;
            let var = (0..x.rows).map(|r| (x.get(r, c) - mean).powi(2)).sum::<f64>() / n;
            if var >= FEATURE_NORM_MIN_VAR {
                inv_std[c] = Some(1.0 / var.sqrt());
            }
            let scale = inv_std[c].unwrap_or(1.0);
            for r in 0..x.rows {
                *v.at_mut(r, c) = (x.get(r, c) - mean) * scale;
            }
        }
        let g = self.grad_flag(&[a]);
        self.push(v, Op::FeatureNorm { input: a, inv_std }, g)
    }

    /// Gradients of the scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let (r, c) = self.shape(loss);
        if (r, c) != (1, 1) {
            return Err(Error::NonScalarLoss(r, c));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(upstream) = grads[idx].take() else { continue };
            let mut send = |v: Var, g: Tensor| {
                if !self.nodes[v.0].needs_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.add_assign(&g),
                    slot @ None => *slot = Some(g),
                }
            };
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(upstream);
                    continue;
                }
                Op::Add(a, b) => {
                    send(*b, upstream.reduce_to(self.shape(*b)));
                    send(*a, upstream);
                }
                Op::Sub(a, b) => {
                    send(*b, upstream.map(|v| -v).reduce_to(self.shape(*b)));
                    send(*a, upstream);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let sb = vb.shape();
                    let mut ga = upstream.clone();
                    let mut gb_full = upstream;
                    for r in 0..ga.rows {
                        for c in 0..ga.cols {
                            let bv = vb.get(r % sb.0, c % sb.1);
                            let av = va.get(r, c);
                            *ga.at_mut(r, c) *= bv;
                            *gb_full.at_mut(r, c) *= av;
                        }
                    }
                    send(*a, ga);
                    send(*b, gb_full.reduce_to(sb));
                }
                Op::ScalarMul(a, k) => send(*a, upstream.map(|v| v * k)),
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    if self.nodes[a.0].needs_grad {
                        send(*a, upstream.matmul(&vb.transpose()));
                    }
                    if self.nodes[b.0].needs_grad {
                        send(*b, va.transpose().matmul(&upstream));
                    }
                }
                Op::RowConcat(a, b) => {
                    let ra = self.shape(*a).0;
                    let cols = upstream.cols;
                    let ga = Tensor::new(ra, cols, upstream.data[..ra * cols].to_vec())?;
                    let gb = Tensor::new(upstream.rows - ra, cols, upstream.data[ra * cols..].to_vec())?;
                    send(*a, ga);
                    send(*b, gb);
                }
                Op::LeakyRelu(a, slope) => {
                    let x = self.value(*a);
                    let mut g = upstream;
                    g.data
                        .iter_mut()
                        .zip(&x.data)
                        .for_each(|(gv, &xv)| if xv < 0.0 { *gv *= slope });
                    send(*a, g);
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let mut g = upstream;
                    g.data.iter_mut().zip(&y.data).for_each(|(gv, &s)| *gv *= s * (1.0 - s));
                    send(*a, g);
                }
                Op::Log(a) => {
                    let x = self.value(*a);
                    let mut g = upstream;
                    g.data.iter_mut().zip(&x.data).for_each(|(gv, &xv)| *gv /= xv);
                    send(*a, g);
                }
                Op::Softplus(a) => {
                    let x = self.value(*a);
                    let mut g = upstream;
                    g.data.iter_mut().zip(&x.data).for_each(|(gv, &xv)| *gv *= sigmoid(xv));
                    send(*a, g);
                }
                Op::MeanRows(a) => {
                    let (rows, cols) = self.shape(*a);
                    let n = rows.max(1) as f64;
                    let mut g = Tensor::zeros(rows, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            *g.at_mut(r, c) = upstream.data[c] / n;
                        }
                    }
                    send(*a, g);
                }
                Op::Sum(a) => {
                    let (rows, cols) = self.shape(*a);
                    send(*a, Tensor::filled(rows, cols, upstream.item()));
                }
                Op::ScatterMean { input, index, counts } => {
                    let cols = upstream.cols;
                    let mut g = Tensor::zeros(index.len(), cols);
                    for (e, &k) in index.iter().enumerate() {
                        let n = counts[k] as f64;
                        for c in 0..cols {
                            *g.at_mut(e, c) = upstream.get(k, c) / n;
                        }
                    }
                    send(*input, g);
                }
                Op::GatherRows { input, index } => {
                    let (rows, cols) = self.shape(*input);
                    let mut g = Tensor::zeros(rows, cols);
                    for (e, &k) in index.iter().enumerate() {
                        for c in 0..cols {
                            *g.at_mut(k, c) += upstream.get(e, c);
                        }
                    }
                    send(*input, g);
                }
                Op::L2NormRows(a) => {
                    let x = self.value(*a);
                    let norms = &node.value;
                    let mut g = Tensor::zeros(x.rows, x.cols);
                    for r in 0..x.rows {
                        let nr = norms.data[r];
                        if nr > 0.0 {
                            for c in 0..x.cols {
                                *g.at_mut(r, c) = upstream.data[r] * x.get(r, c) / nr;
                            }
                        }
                    }
                    send(*a, g);
                }
                Op::FeatureNorm { input, inv_std } => {
                    let y = &node.value;
                    let (rows, cols) = y.shape();
                    let n = rows as f64;
                    let mut g = Tensor::zeros(rows, cols);
                    for c in 0..cols {
                        let mean_g = (0..rows).map(|r| upstream.get(r, c)).sum::<f64>() / n;
                        match inv_std[c] {
                            None => {
                                for r in 0..rows {
                                    *g.at_mut(r, c) = upstream.get(r, c) - mean_g;
                                }
                            }
                            Some(k) => {
                                let mean_gy =
                                    (0..rows).map(|r| upstream.get(r, c) * y.get(r, c)).sum::<f64>() / n;
                                for r in 0..rows {
                                    *g.at_mut(r, c) = k * (upstream.get(r, c) - mean_g - y.get(r, c) * mean_gy);
                                }
                            }
                        }
                    }
                    send(*input, g);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Per-node gradients from one backward pass.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of `v`; `None` when the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, zeros when unreachable.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape.0, shape.1))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Outcome of comparing analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// `max |a - n| / max(|a|, |n|, 1e-8)` over all input elements.
    pub max_rel_error: f64,
    /// Smallest distance of any kinked-op input to its kink.
    pub kink_margin: f64,
}

impl GradCheck {
    /// Points within 1e-6 of a kink are subgradient points and are reported
    /// but never fail.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.kink_margin < 1e-6 || self.max_rel_error < tolerance
    }
}

/// Checks the gradient of the scalar function `f` at `x` against central
/// differences with step `eps`.
pub fn grad_check<F>(f: F, x: &Tensor, eps: f64) -> Result<GradCheck>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("finite-difference step {eps} must be positive")));
    }
    let mut tape = Tape::new();
    let input = tape.param(x.clone());
    let out = f(&mut tape, input)?;
    let grads = tape.backward(out)?;
    let analytic = grads.get_or_zeros(input, x.shape());
    let kink_margin = tape.kink_margin();

    let eval = |probe: &Tensor| -> Result<f64> {
        let mut t = Tape::new();
        let v = t.param(probe.clone());
        let o = f(&mut t, v)?;
        Ok(t.value(o).item())
    };
    let mut max_rel_error: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.data.len() {
        let orig = probe.data[i];
        probe.data[i] = orig + eps;
        let plus = eval(&probe)?;
        probe.data[i] = orig - eps;
        let minus = eval(&probe)?;
        probe.data[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.data[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        max_rel_error = max_rel_error.max(err);
    }
    Ok(GradCheck {
        max_rel_error,
        kink_margin,
    })
}
