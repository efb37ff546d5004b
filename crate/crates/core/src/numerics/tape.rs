//! Define-by-run reverse-mode automatic differentiation over [`DenseArray`]s.
//!
//! Every operation on a [`Tape`] evaluates eagerly and appends a node, so node
//! inputs always precede the node itself and the recorded graph is acyclic by
//! construction. [`Tape::forward_backward`] walks the nodes once in reverse
//! order and returns gradients for parameter leaves only.
//!
//! The primitive set is small: `add`, `sub`, `mul`, `matmul`, `relu`, `gelu`,
//! `tanh`, `sum`, `mean`, `square`, `concat`, `slice`, `broadcast`,
//! `softmax`, `layer_norm` and the metadata-only `reshape`. Everything else
//! (scaling, affine layers, attention) is composed from these.

use std::collections::BTreeMap;

use super::array::DenseArray;
use super::kernels::gemm;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Leaf {
    Param(String),
    Input(String),
    Constant,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf(Leaf),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MatMul { a: Var, b: Var, transpose_b: bool },
    Relu(Var),
    Gelu(Var),
    Tanh(Var),
    Sum(Var),
    Mean(Var),
    Square(Var),
    Concat { inputs: Vec<Var>, axis: usize },
    Slice { input: Var, axis: usize, start: usize },
    Broadcast(Var),
    Softmax(Var),
    LayerNorm { input: Var, eps: f64 },
    Reshape(Var),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf(Leaf::Param(_)) => "param",
            Op::Leaf(Leaf::Input(_)) => "input",
            Op::Leaf(Leaf::Constant) => "constant",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::MatMul { .. } => "matmul",
            Op::Relu(_) => "relu",
            Op::Gelu(_) => "gelu",
            Op::Tanh(_) => "tanh",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::Square(_) => "square",
            Op::Concat { .. } => "concat",
            Op::Slice { .. } => "slice",
            Op::Broadcast(_) => "broadcast",
            Op::Softmax(_) => "softmax",
            Op::LayerNorm { .. } => "layer_norm",
            Op::Reshape(_) => "reshape",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: DenseArray,
}

/// Recorded computation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    first_non_finite: Option<usize>,
}

/// Gradients of a scalar output with respect to every parameter leaf, keyed by name.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    by_name: BTreeMap<String, DenseArray>,
}

impl Gradients {
    pub fn from_map(by_name: BTreeMap<String, DenseArray>) -> Self {
        Self { by_name }
    }

    pub fn get(&self, name: &str) -> Option<&DenseArray> {
        self.by_name.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DenseArray)> {
        self.by_name.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    pub fn into_map(self) -> BTreeMap<String, DenseArray> {
        self.by_name
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let th = u.tanh();
    0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Shape bookkeeping for a matmul: `rows × k` times `k × cols`, repeated `batch` times.
struct MatMulDims {
    batch: usize,
    rows: usize,
    k: usize,
    cols: usize,
    shared_b: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &DenseArray {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, op: Op, value: DenseArray) -> Var {
        let id = self.nodes.len();
        if self.first_non_finite.is_none() && !value.is_finite() {
            self.first_non_finite = Some(id);
        }
        self.nodes.push(Node { op, value });
        Var(id)
    }

    /// Trainable leaf; receives a gradient.
    pub fn param(&mut self, name: impl Into<String>, value: DenseArray) -> Var {
        self.push(Op::Leaf(Leaf::Param(name.into())), value)
    }

    /// Named non-trainable leaf.
    pub fn input(&mut self, name: impl Into<String>, value: DenseArray) -> Var {
        self.push(Op::Leaf(Leaf::Input(name.into())), value)
    }

    /// Name given to a parameter or input leaf.
    pub fn leaf_name(&self, v: Var) -> Option<&str> {
        match &self.nodes[v.0].op {
            Op::Leaf(Leaf::Param(name) | Leaf::Input(name)) => Some(name),
            _ => None,
        }
    }

    pub fn constant(&mut self, value: DenseArray) -> Var {
        self.push(Op::Leaf(Leaf::Constant), value)
    }

    fn binary(&mut self, a: Var, b: Var, op_name: &'static str) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::shape(op_name, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add")?;
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub")?;
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), v))
    }

    fn matmul_dims(&self, a: Var, b: Var, transpose_b: bool) -> Result<MatMulDims> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let err = || Error::shape("matmul", format!("{sa:?} x {sb:?} (transpose_b={transpose_b})"));
        if sa.len() < 2 || sb.len() < 2 {
            return Err(err());
        }
        let (bk, bcols) = if transpose_b {
            (sb[sb.len() - 1], sb[sb.len() - 2])
        } else {
            (sb[sb.len() - 2], sb[sb.len() - 1])
        };
        let k = sa[sa.len() - 1];
        if k != bk {
            return Err(err());
        }
        if sb.len() == 2 {
            let rows: usize = sa[..sa.len() - 1].iter().product();
            Ok(MatMulDims {
                batch: 1,
                rows,
                k,
                cols: bcols,
                shared_b: true,
            })
        } else {
            if sa[..sa.len() - 2] != sb[..sb.len() - 2] {
                return Err(err());
            }
            Ok(MatMulDims {
                batch: sa[..sa.len() - 2].iter().product(),
                rows: sa[sa.len() - 2],
                k,
                cols: bcols,
                shared_b: false,
            })
        }
    }

    /// Matrix product over the two trailing axes.
    ///
    /// `a` is `[..., n, k]`. `b` is either a shared `[k, m]` matrix or a batch
    /// `[..., k, m]` with the same leading axes as `a`. With `transpose_b` the
    /// trailing axes of `b` are read as `[m, k]`.
    pub fn matmul_ext(&mut self, a: Var, b: Var, transpose_b: bool) -> Result<Var> {
        let d = self.matmul_dims(a, b, transpose_b)?;
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let mut out = vec![0.0; d.batch * d.rows * d.cols];
        let b_strides = if transpose_b { (1, d.k) } else { (d.cols, 1) };
        let (a_step, b_step, c_step) = (
            d.rows * d.k,
            if d.shared_b { 0 } else { d.k * d.cols },
            d.rows * d.cols,
        );
        for i in 0..d.batch {
            gemm(
                d.rows,
                d.k,
                d.cols,
                &av[i * a_step..(i + 1) * a_step],
                (d.k, 1),
                &bv[i * b_step..i * b_step + d.k * d.cols],
                b_strides,
                &mut out[i * c_step..(i + 1) * c_step],
                false,
            );
        }
        let mut shape = self.shape(a).to_vec();
        *shape.last_mut().unwrap() = d.cols;
        let value = DenseArray::from_parts(shape, out);
        Ok(self.push(Op::MatMul { a, b, transpose_b }, value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_ext(a, b, false)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(Op::Relu(a), v)
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(gelu);
        self.push(Op::Gelu(a), v)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), v)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        self.push(Op::Square(a), v)
    }

    /// Sum of all elements, as a rank-0 array.
    pub fn sum(&mut self, a: Var) -> Var {
        let v = DenseArray::scalar(self.value(a).sum());
        self.push(Op::Sum(a), v)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = DenseArray::scalar(self.value(a).mean());
        self.push(Op::Mean(a), v)
    }

    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = inputs
            .first()
            .ok_or_else(|| Error::shape("concat", "no inputs"))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(Error::shape("concat", format!("axis {axis} on {base:?}")));
        }
        let mut total = 0;
        for &v in inputs {
            let s = self.shape(v);
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(i, (x, y))| i == axis || x == y);
            if !compatible {
                return Err(Error::shape("concat", format!("{s:?} vs {base:?} on axis {axis}")));
            }
            total += s[axis];
        }
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &v in inputs {
                let chunk = self.shape(v)[axis] * inner;
                data.extend_from_slice(&self.value(v).data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let value = DenseArray::from_parts(shape, data);
        Ok(self.push(
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            value,
        ))
    }

    /// Contiguous range `start..start + len` along `axis`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if axis >= s.len() || start + len > s[axis] {
            return Err(Error::shape(
                "slice",
                format!("{start}..{} on axis {axis} of {s:?}", start + len),
            ));
        }
        let outer: usize = s[..axis].iter().product();
        let inner: usize = s[axis + 1..].iter().product();
        let src = self.value(a).data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * s[axis] + start) * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut shape = s;
        shape[axis] = len;
        let value = DenseArray::from_parts(shape, data);
        Ok(self.push(Op::Slice { input: a, axis, start }, value))
    }

    /// Numpy-style broadcast of `a` to `shape` (trailing-aligned; size-1 or missing axes expand).
    pub fn broadcast(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let src_shape = self.shape(a).to_vec();
        let src = self.value(a).data();
        let data = if is_trailing_block(&src_shape, shape) {
            let total: usize = shape.iter().product();
            let mut data = Vec::with_capacity(total);
            while data.len() < total {
                data.extend_from_slice(src);
            }
            data
        } else {
            let map = broadcast_index_map(&src_shape, shape)?;
            map.iter().map(|&i| src[i]).collect()
        };
        let value = DenseArray::from_parts(shape.to_vec(), data);
        Ok(self.push(Op::Broadcast(a), value))
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        let n = *s.last().ok_or_else(|| Error::shape("softmax", "rank-0 input"))?;
        let mut data = self.value(a).data().to_vec();
        for row in data.chunks_mut(n) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                total += *x;
            }
            for x in row.iter_mut() {
                *x /= total;
            }
        }
        Ok(self.push(Op::Softmax(a), DenseArray::from_parts(s, data)))
    }

    /// Normalization to zero mean and unit variance over the last axis (no affine terms).
    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Result<Var> {
        let s = self.shape(a).to_vec();
        let n = *s.last().ok_or_else(|| Error::shape("layer_norm", "rank-0 input"))?;
        let mut data = self.value(a).data().to_vec();
        for row in data.chunks_mut(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for x in row.iter_mut() {
                *x = (*x - mean) * inv;
            }
        }
        Ok(self.push(Op::LayerNorm { input: a, eps }, DenseArray::from_parts(s, data)))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(a).clone().reshape(shape)?;
        Ok(self.push(Op::Reshape(a), v))
    }

    // Composite helpers.

    /// `a * k` for a compile-time scalar `k`.
    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let c = self.constant(DenseArray::scalar(k));
        let cb = self.broadcast(c, &shape)?;
        self.mul(a, cb)
    }

    /// `a + b` where `b` is broadcast to `a`'s shape.
    pub fn add_broadcast(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if self.shape(b) == shape.as_slice() {
            return self.add(a, b);
        }
        let bb = self.broadcast(b, &shape)?;
        self.add(a, bb)
    }

    /// `a * b` where `b` is broadcast to `a`'s shape.
    pub fn mul_broadcast(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if self.shape(b) == shape.as_slice() {
            return self.mul(a, b);
        }
        let bb = self.broadcast(b, &shape)?;
        self.mul(a, bb)
    }

    /// `x · w + b` with a shared weight matrix.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let h = self.matmul(x, w)?;
        self.add_broadcast(h, b)
    }

    /// Runs the backward pass from a scalar `output`.
    ///
    /// Returns the forward value and the gradient of every parameter leaf,
    /// keyed by parameter name. Parameters that do not influence the output get
    /// zero gradients; input and constant leaves get none.
    pub fn forward_backward(&self, output: Var) -> Result<(f64, Gradients)> {
        if let Some(node) = self.first_non_finite {
            if node <= output.0 {
                return Err(Error::NonFinite {
                    node,
                    op: self.nodes[node].op.name(),
                });
            }
        }
        let out = &self.nodes[output.0].value;
        if out.len() != 1 {
            return Err(Error::shape(
                "forward_backward",
                format!("output must be scalar, got {:?}", out.shape()),
            ));
        }
        let value = out.item();

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        grads[output.0] = Some(vec![1.0]);

        for id in (0..=output.0).rev() {
            let Some(g) = grads[id].take() else {
                continue;
            };
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    node: id,
                    op: self.nodes[id].op.name(),
                });
            }
            let node = &self.nodes[id];
            match &node.op {
                Op::Leaf(_) => {
                    grads[id] = Some(g);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                    accumulate(&mut grads, *b, &neg);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.nodes[a.0].value.data(), self.nodes[b.0].value.data());
                    let ga: Vec<f64> = g.iter().zip(vb).map(|(x, y)| x * y).collect();
                    let gb: Vec<f64> = g.iter().zip(va).map(|(x, y)| x * y).collect();
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::MatMul { a, b, transpose_b } => {
                    let (ga, gb) = self.matmul_backward(*a, *b, *transpose_b, &g)?;
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::Relu(a) => {
                    let va = self.nodes[a.0].value.data();
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(va)
                        .map(|(x, &y)| if y > 0.0 { *x } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Gelu(a) => {
                    let va = self.nodes[a.0].value.data();
                    let ga: Vec<f64> = g.iter().zip(va).map(|(x, &y)| x * gelu_grad(y)).collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Tanh(a) => {
                    let out = node.value.data();
                    let ga: Vec<f64> = g.iter().zip(out).map(|(x, y)| x * (1.0 - y * y)).collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Square(a) => {
                    let va = self.nodes[a.0].value.data();
                    let ga: Vec<f64> = g.iter().zip(va).map(|(x, y)| 2.0 * x * y).collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Sum(a) => {
                    let n = self.nodes[a.0].value.len();
                    accumulate(&mut grads, *a, &vec![g[0]; n]);
                }
                Op::Mean(a) => {
                    let n = self.nodes[a.0].value.len();
                    accumulate(&mut grads, *a, &vec![g[0] / n as f64; n]);
                }
                Op::Concat { inputs, axis } => {
                    let shape = node.value.shape();
                    let outer: usize = shape[..*axis].iter().product();
                    let inner: usize = shape[axis + 1..].iter().product();
                    let row = shape[*axis] * inner;
                    let mut offset = 0;
                    for &v in inputs {
                        let chunk = self.nodes[v.0].value.shape()[*axis] * inner;
                        let mut gv = Vec::with_capacity(outer * chunk);
                        for o in 0..outer {
                            gv.extend_from_slice(&g[o * row + offset..o * row + offset + chunk]);
                        }
                        accumulate(&mut grads, v, &gv);
                        offset += chunk;
                    }
                }
                Op::Slice { input, axis, start } => {
                    let src_shape = self.nodes[input.0].value.shape();
                    let len = node.value.shape()[*axis];
                    let outer: usize = src_shape[..*axis].iter().product();
                    let inner: usize = src_shape[axis + 1..].iter().product();
                    let mut gv = vec![0.0; self.nodes[input.0].value.len()];
                    for o in 0..outer {
                        let dst = (o * src_shape[*axis] + start) * inner;
                        gv[dst..dst + len * inner]
                            .copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
                    }
                    accumulate(&mut grads, *input, &gv);
                }
                Op::Broadcast(a) => {
                    let src_shape = self.nodes[a.0].value.shape();
                    let mut gv = vec![0.0; self.nodes[a.0].value.len()];
                    if is_trailing_block(src_shape, node.value.shape()) {
                        for chunk in g.chunks(gv.len().max(1)) {
                            for (dst, x) in gv.iter_mut().zip(chunk) {
                                *dst += x;
                            }
                        }
                    } else {
                        let map = broadcast_index_map(src_shape, node.value.shape())?;
                        for (gi, &si) in g.iter().zip(&map) {
                            gv[si] += gi;
                        }
                    }
                    accumulate(&mut grads, *a, &gv);
                }
                Op::Softmax(a) => {
                    let n = *node.value.shape().last().unwrap();
                    let y = node.value.data();
                    let mut gv = vec![0.0; y.len()];
                    for ((yr, gr), out) in y.chunks(n).zip(g.chunks(n)).zip(gv.chunks_mut(n)) {
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((o, yi), gi) in out.iter_mut().zip(yr).zip(gr) {
                            *o = yi * (gi - dot);
                        }
                    }
                    accumulate(&mut grads, *a, &gv);
                }
                Op::LayerNorm { input, eps } => {
                    let n = *node.value.shape().last().unwrap();
                    let x = self.nodes[input.0].value.data();
                    let y = node.value.data();
                    let mut gv = vec![0.0; y.len()];
                    for (((xr, yr), gr), out) in x
                        .chunks(n)
                        .zip(y.chunks(n))
                        .zip(g.chunks(n))
                        .zip(gv.chunks_mut(n))
                    {
                        let mean = xr.iter().sum::<f64>() / n as f64;
                        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                        let inv = 1.0 / (var + eps).sqrt();
                        let g_mean = gr.iter().sum::<f64>() / n as f64;
                        let gy_mean = gr.iter().zip(yr).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                        for ((o, gi), yi) in out.iter_mut().zip(gr).zip(yr) {
                            *o = inv * (gi - g_mean - yi * gy_mean);
                        }
                    }
                    accumulate(&mut grads, *input, &gv);
                }
                Op::Reshape(a) => {
                    accumulate(&mut grads, *a, &g);
                }
            }
        }

        let mut by_name = BTreeMap::new();
        for (id, node) in self.nodes[..=output.0].iter().enumerate() {
            if let Op::Leaf(Leaf::Param(name)) = &node.op {
                let shape = node.value.shape().to_vec();
                let g = grads[id]
                    .take()
                    .unwrap_or_else(|| vec![0.0; node.value.len()]);
                let entry = by_name
                    .entry(name.clone())
                    .or_insert_with(|| DenseArray::zeros(&shape));
                for (dst, src) in entry.data_mut().iter_mut().zip(&g) {
                    *dst += src;
                }
            }
        }
        // Parameters registered after `output` cannot affect it.
        for node in &self.nodes[output.0 + 1..] {
            if let Op::Leaf(Leaf::Param(name)) = &node.op {
                by_name
                    .entry(name.clone())
                    .or_insert_with(|| DenseArray::zeros(node.value.shape()));
            }
        }
        Ok((value, Gradients { by_name }))
    }

    fn matmul_backward(
        &self,
        a: Var,
        b: Var,
        transpose_b: bool,
        g: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.matmul_dims(a, b, transpose_b)?;
        let av = self.nodes[a.0].value.data();
        let bv = self.nodes[b.0].value.data();
        let mut ga = vec![0.0; av.len()];
        let mut gb = vec![0.0; bv.len()];
        let (a_step, b_step, c_step) = (
            d.rows * d.k,
            if d.shared_b { 0 } else { d.k * d.cols },
            d.rows * d.cols,
        );
        let b_len = d.k * d.cols;
        for i in 0..d.batch {
            let gc = &g[i * c_step..(i + 1) * c_step];
            let ai = &av[i * a_step..(i + 1) * a_step];
            let bi = &bv[i * b_step..i * b_step + b_len];
            // dA = dC · B_effᵀ
            let bt_strides = if transpose_b { (d.k, 1) } else { (1, d.cols) };
            gemm(
                d.rows,
                d.cols,
                d.k,
                gc,
                (d.cols, 1),
                bi,
                bt_strides,
                &mut ga[i * a_step..(i + 1) * a_step],
                false,
            );
            let gbi = &mut gb[i * b_step..i * b_step + b_len];
            if transpose_b {
                // B stored [cols, k]: dB = dCᵀ · A
                gemm(d.cols, d.rows, d.k, gc, (1, d.cols), ai, (d.k, 1), gbi, true);
            } else {
                // B stored [k, cols]: dB = Aᵀ · dC
                gemm(d.k, d.rows, d.cols, ai, (1, d.k), gc, (d.cols, 1), gbi, true);
            }
        }
        Ok((ga, gb))
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, g: &[f64]) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (e, x) in existing.iter_mut().zip(g) {
                *e += x;
            }
        }
        slot @ None => *slot = Some(g.to_vec()),
    }
}

/// Whether broadcasting `src` to `dst` only repeats `src` over new leading axes.
fn is_trailing_block(src: &[usize], dst: &[usize]) -> bool {
    src.len() <= dst.len() && src == &dst[dst.len() - src.len()..]
}

/// For every element of the broadcast output, the flat index of its source element.
fn broadcast_index_map(src: &[usize], dst: &[usize]) -> Result<Vec<usize>> {
    let err = || Error::shape("broadcast", format!("{src:?} -> {dst:?}"));
    if src.len() > dst.len() {
        return Err(err());
    }
    let offset = dst.len() - src.len();
    let mut src_strides = vec![0usize; dst.len()];
    let mut stride = 1;
    for i in (0..src.len()).rev() {
        let (s, d) = (src[i], dst[i + offset]);
        if s == d {
            src_strides[i + offset] = stride;
        } else if s != 1 {
            return Err(err());
        }
        stride *= s;
    }
    let total: usize = dst.iter().product();
    let mut map = Vec::with_capacity(total);
    let mut idx = vec![0usize; dst.len()];
    for _ in 0..total {
        map.push(idx.iter().zip(&src_strides).map(|(i, s)| i * s).sum());
        for ax in (0..dst.len()).rev() {
            idx[ax] += 1;
            if idx[ax] < dst[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_at_three() {
        let mut t = Tape::new();
        let x = t.param("x", DenseArray::scalar(3.0));
        let y = t.square(x);
        let (v, g) = t.forward_backward(y).unwrap();
        assert_eq!(v, 9.0);
        assert_eq!(g.get("x").unwrap().item(), 6.0);
    }

    #[test]
    fn sum_gives_ones() {
        let mut t = Tape::new();
        let x = t.param("x", DenseArray::from_vec(vec![1.0, -2.0, 3.5, 0.0]));
        let y = t.sum(x);
        let (_, g) = t.forward_backward(y).unwrap();
        assert_eq!(g.get("x").unwrap(), &DenseArray::ones(&[4]));
    }

    #[test]
    fn inputs_get_no_gradient() {
        let mut t = Tape::new();
        let x = t.input("x", DenseArray::from_vec(vec![1.0, 2.0]));
        let w = t.param("w", DenseArray::from_vec(vec![3.0, 4.0]));
        let p = t.mul(x, w).unwrap();
        let s = t.sum(p);
        let (v, g) = t.forward_backward(s).unwrap();
        assert_eq!(v, 11.0);
        assert_eq!(g.len(), 1);
        assert_eq!(g.get("w").unwrap().data(), &[1.0, 2.0]);
        assert!(g.get("x").is_none());
    }

    #[test]
    fn non_scalar_output_is_rejected() {
        let mut t = Tape::new();
        let x = t.param("x", DenseArray::from_vec(vec![1.0, 2.0]));
        let y = t.square(x);
        assert!(matches!(t.forward_backward(y), Err(Error::Shape { .. })));
    }

    #[test]
    fn non_finite_names_the_node() {
        let mut t = Tape::new();
        let x = t.param("x", DenseArray::from_vec(vec![1e200, 1.0]));
        let y = t.square(x);
        let s = t.sum(y);
        match t.forward_backward(s) {
            Err(Error::NonFinite { node, op }) => {
                assert_eq!(node, y.index());
                assert_eq!(op, "square");
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn shape_mismatch_is_structured() {
        let mut t = Tape::new();
        let a = t.input("a", DenseArray::zeros(&[2, 3]));
        let b = t.input("b", DenseArray::zeros(&[3, 2]));
        assert!(matches!(t.add(a, b), Err(Error::Shape { op: "add", .. })));
        assert!(matches!(t.matmul(a, a), Err(Error::Shape { op: "matmul", .. })));
    }

    #[test]
    fn broadcast_general_and_suffix() {
        let mut t = Tape::new();
        let a = t.input("a", DenseArray::new(vec![2, 1], vec![1.0, 2.0]).unwrap());
        let b = t.broadcast(a, &[3, 2, 2]).unwrap();
        assert_eq!(
            t.value(b).data(),
            &[1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]
        );
        let c = t.input("c", DenseArray::from_vec(vec![1.0, 2.0]));
        let d = t.broadcast(c, &[2, 2]).unwrap();
        assert_eq!(t.value(d).data(), &[1.0, 2.0, 1.0, 2.0]);
        assert!(t.broadcast(c, &[3]).is_err());
    }

    #[test]
    fn concat_and_slice_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = Tape::new();
        let a = t.input("a", DenseArray::randn(&[2, 3, 4], &mut rng));
        let b = t.input("b", DenseArray::randn(&[2, 1, 4], &mut rng));
        let c = t.concat(&[b, a], 1).unwrap();
        assert_eq!(t.shape(c), &[2, 4, 4]);
        let back = t.slice(c, 1, 1, 3).unwrap();
        assert_eq!(t.value(back), t.value(a));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut t = Tape::new();
        let a = t.input("a", DenseArray::randn(&[3, 5], &mut rng));
        let s = t.softmax(a).unwrap();
        for r in 0..3 {
            let total: f64 = t.value(s).row(r).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn batched_matmul_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DenseArray::randn(&[2, 3, 4], &mut rng);
        let b = DenseArray::randn(&[2, 5, 4], &mut rng);
        let mut t = Tape::new();
        let va = t.input("a", a.clone());
        let vb = t.input("b", b.clone());
        let c = t.matmul_ext(va, vb, true).unwrap();
        assert_eq!(t.shape(c), &[2, 3, 5]);
        for i in 0..2 {
            let expect = a.outer(i).matmul2(&b.outer(i).transpose2()).unwrap();
            assert!(t.value(c).outer(i).max_abs_diff(&expect) < 1e-12);
        }
    }
}
