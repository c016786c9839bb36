//! Tape-based reverse-mode differentiation.
//!
//! Every operation appends a node holding its value. Gradients are built by
//! [`Graph::grad`] out of ordinary graph operations, so a gradient is itself a
//! node that later computations (and a second call to `grad`) can use. This
//! is what lets an input-gradient penalty be differentiated with respect to
//! the parameters that produced it.
//!
//! Rules per primitive (forward / backward / backward-of-backward):
//!
//! | op | forward | backward | second order |
//! |----|---------|----------|--------------|
//! | `matmul` | `op(A) op(B)` | two `matmul`s with flipped transposes | closed (matmul) |
//! | `add_row_broadcast` | `X + 1 b` | `G`, `sum_rows(G)` | closed |
//! | `sum_rows` / `broadcast_rows` | column sums / row copies | each other | closed |
//! | `sum_cols` / `broadcast_cols` | row sums / column copies | each other | closed |
//! | `sum_all` / `expand` | total / fill | each other | closed |
//! | `add`, `sub`, `mul`, `scale`, `add_scalar` | elementwise | elementwise | closed |
//! | `square` | `x^2` | `2 x G` | closed |
//! | `sqrt` | `sqrt x` | `G / (2 y)` via `recip` | closed |
//! | `recip` | `1 / x` | `-G y^2` | closed |
//! | `leaky_relu` | `max(x, s x)` | `G * mask` with a constant slope mask | zero almost everywhere |
//! | `block_softmax` | per-block softmax | `y (G - block_sum(G y))` | closed |
//! | `block_sum` | per-block sum broadcast | itself (self-adjoint) | closed |
//! | `pairwise_dist` | row Euclidean distances | frozen constant | unsupported |
//! | `min_cols` | per-row minimum | frozen scatter | unsupported |
//!
//! Frozen gradients carry their origins for dependency tracking; attempting to
//! differentiate through one returns [`EngineError::SecondOrderUnsupported`].

use std::sync::Arc;

use super::tensor::{gemm, Tensor};
use super::EngineError;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf { param: bool },
    MatMul { a: Var, b: Var, ta: bool, tb: bool },
    AddRowBroadcast { x: Var, bias: Var },
    SumRows(Var),
    BroadcastRows(Var),
    SumCols(Var),
    BroadcastCols(Var),
    SumAll(Var),
    Expand(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Square(Var),
    Sqrt(Var),
    Recip(Var),
    LeakyRelu { x: Var, slope: f64 },
    BlockSoftmax { x: Var, layout: Arc<[usize]> },
    BlockSum { x: Var, layout: Arc<[usize]> },
    PairwiseDist { a: Var, b: Var },
    MinCols(Var),
    Frozen { origins: Vec<Var> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf { .. } => "leaf",
            Op::MatMul { .. } => "matmul",
            Op::AddRowBroadcast { .. } => "add_row_broadcast",
            Op::SumRows(_) => "sum_rows",
            Op::BroadcastRows(_) => "broadcast_rows",
            Op::SumCols(_) => "sum_cols",
            Op::BroadcastCols(_) => "broadcast_cols",
            Op::SumAll(_) => "sum_all",
            Op::Expand(_) => "expand",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::Square(_) => "square",
            Op::Sqrt(_) => "sqrt",
            Op::Recip(_) => "recip",
            Op::LeakyRelu { .. } => "leaky_relu",
            Op::BlockSoftmax { .. } => "block_softmax",
            Op::BlockSum { .. } => "block_sum",
            Op::PairwiseDist { .. } => "pairwise_dist",
            Op::MinCols(_) => "min_cols",
            Op::Frozen { .. } => "frozen",
        }
    }

    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf { .. } => vec![],
            Op::MatMul { a, b, .. } => vec![*a, *b],
            Op::AddRowBroadcast { x, bias } => vec![*x, *bias],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::PairwiseDist { a, b } => vec![*a, *b],
            Op::SumRows(x)
            | Op::SumCols(x)
            | Op::SumAll(x)
            | Op::Scale(x, _)
            | Op::AddScalar(x)
            | Op::BroadcastRows(x)
            | Op::BroadcastCols(x)
            | Op::Expand(x)
            | Op::Square(x)
            | Op::Sqrt(x)
            | Op::Recip(x)
            | Op::MinCols(x) => vec![*x],
            Op::LeakyRelu { x, .. } | Op::BlockSoftmax { x, .. } | Op::BlockSum { x, .. } => {
                vec![*x]
            }
            Op::Frozen { origins } => origins.clone(),
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// An append-only computation graph.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
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

    /// A differentiable leaf, reported by [`Graph::backward`].
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_unchecked(Op::Leaf { param: true }, value)
    }

    /// A leaf that is not a parameter. Gradients with respect to it are still
    /// available through [`Graph::grad`].
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_unchecked(Op::Leaf { param: false }, value)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn params(&self) -> Vec<Var> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.op, Op::Leaf { param: true }))
            .map(|(i, _)| Var(i))
            .collect()
    }

    fn push_unchecked(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, op: Op, value: Tensor) -> Result<Var, EngineError> {
        if !value.is_finite() {
            return Err(EngineError::NonFinite { op: op.name() });
        }
        Ok(self.push_unchecked(op, value))
    }

    fn check(&self, var: Var) -> Result<&Tensor, EngineError> {
        self.nodes
            .get(var.0)
            .map(|n| &n.value)
            .ok_or(EngineError::UnknownVar(var.0))
    }

    // ---- forward operations -------------------------------------------------

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, EngineError> {
        self.matmul_t(a, false, b, false)
    }

    /// `op(a) * op(b)`, transposing each side when its flag is set.
    pub fn matmul_t(&mut self, a: Var, ta: bool, b: Var, tb: bool) -> Result<Var, EngineError> {
        let value = gemm(self.check(a)?, ta, self.check(b)?, tb)?;
        self.push(Op::MatMul { a, b, ta, tb }, value)
    }

    /// Adds a `1 x m` bias to every row of an `n x m` input.
    pub fn add_row_broadcast(&mut self, x: Var, bias: Var) -> Result<Var, EngineError> {
        let (xv, bv) = (self.check(x)?, self.check(bias)?);
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(EngineError::ShapeMismatch {
                op: "add_row_broadcast",
                left: xv.shape(),
                right: bv.shape(),
            });
        }
        let mut out = xv.clone();
        let b = bv.data();
        for r in 0..out.rows() {
            for (o, bb) in out.row_mut(r).iter_mut().zip(b) {
                *o += bb;
            }
        }
        self.push(Op::AddRowBroadcast { x, bias }, out)
    }

    /// Column sums: `n x m -> 1 x m`.
    pub fn sum_rows(&mut self, x: Var) -> Result<Var, EngineError> {
        let xv = self.check(x)?;
        let mut out = Tensor::zeros(1, xv.cols());
        for r in 0..xv.rows() {
            for (o, v) in out.data_mut().iter_mut().zip(xv.row(r)) {
                *o += v;
            }
        }
        self.push(Op::SumRows(x), out)
    }

    /// Repeats a `1 x m` row `rows` times.
    pub fn broadcast_rows(&mut self, x: Var, rows: usize) -> Result<Var, EngineError> {
        let xv = self.check(x)?;
        if xv.rows() != 1 {
            return Err(EngineError::ShapeMismatch {
                op: "broadcast_rows",
                left: xv.shape(),
                right: [1, xv.cols()],
            });
        }
        let out = Tensor::from_fn(rows, xv.cols(), |_, c| xv.data()[c]);
        self.push(Op::BroadcastRows(x), out)
    }

    /// Row sums: `n x m -> n x 1`.
    pub fn sum_cols(&mut self, x: Var) -> Result<Var, EngineError> {
        let xv = self.check(x)?;
        let data = (0..xv.rows()).map(|r| xv.row(r).iter().sum()).collect();
        let out = Tensor::new(xv.rows(), 1, data)?;
        self.push(Op::SumCols(x), out)
    }

    /// Repeats an `n x 1` column `cols` times.
    pub fn broadcast_cols(&mut self, x: Var, cols: usize) -> Result<Var, EngineError> {
        let xv = self.check(x)?;
        if xv.cols() != 1 {
            return Err(EngineError::ShapeMismatch {
                op: "broadcast_cols",
                left: xv.shape(),
                right: [xv.rows(), 1],
            });
        }
        let out = Tensor::from_fn(xv.rows(), cols, |r, _| xv.data()[r]);
        self.push(Op::BroadcastCols(x), out)
    }

    pub fn sum_all(&mut self, x: Var) -> Result<Var, EngineError> {
        let total = self.check(x)?.data().iter().sum();
        self.push(Op::SumAll(x), Tensor::scalar(total))
    }

    /// Fills a `rows x cols` tensor with the value of a scalar.
    pub fn expand(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var, EngineError> {
        let v = self.scalar_value(x, "expand")?;
        self.push(Op::Expand(x), Tensor::filled(rows, cols, v))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, EngineError> {
        let out = self
            .check(a)?
            .zip_map(self.check(b)?, "add", |x, y| x + y)?;
        self.push(Op::Add(a, b), out)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, EngineError> {
        let out = self
            .check(a)?
            .zip_map(self.check(b)?, "sub", |x, y| x - y)?;
        self.push(Op::Sub(a, b), out)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, EngineError> {
        let out = self
            .check(a)?
            .zip_map(self.check(b)?, "mul", |x, y| x * y)?;
        self.push(Op::Mul(a, b), out)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var, EngineError> {
        let out = self.check(x)?.map(|v| v * factor);
        self.push(Op::Scale(x, factor), out)
    }

    pub fn add_scalar(&mut self, x: Var, offset: f64) -> Result<Var, EngineError> {
        let out = self.check(x)?.map(|v| v + offset);
        self.push(Op::AddScalar(x), out)
    }

    pub fn square(&mut self, x: Var) -> Result<Var, EngineError> {
        let out = self.check(x)?.map(|v| v * v);
        self.push(Op::Square(x), out)
    }

    pub fn sqrt(&mut self, x: Var) -> Result<Var, EngineError> {
        let xv = self.check(x)?;
        if xv.data().iter().any(|&v| v < 0.0) {
            return Err(EngineError::NonFinite { op: "sqrt" });
        }
        let out = xv.map(f64::sqrt);
        self.push(Op::Sqrt(x), out)
    }

    pub fn recip(&mut self, x: Var) -> Result<Var, EngineError> {
        let out = self.check(x)?.map(|v| 1.0 / v);
        self.push(Op::Recip(x), out)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var, EngineError> {
        let out = self.check(x)?.map(|v| if v > 0.0 { v } else { slope * v });
        self.push(Op::LeakyRelu { x, slope }, out)
    }

    /// Softmax applied independently to each block of consecutive columns.
    /// `layout` lists the block widths and must sum to the column count.
    pub fn block_softmax(&mut self, x: Var, layout: Arc<[usize]>) -> Result<Var, EngineError> {
        let xv = self.check(x)?;
        check_layout(xv, &layout, "block_softmax")?;
        let mut out = xv.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let mut start = 0;
            for &w in layout.iter() {
                let block = &mut row[start..start + w];
                let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for v in block.iter_mut() {
                    *v = (*v - max).exp();
                    total += *v;
                }
                for v in block.iter_mut() {
                    *v /= total;
                }
                start += w;
            }
        }
        self.push(Op::BlockSoftmax { x, layout }, out)
    }

    /// Replaces each entry with the sum of its block.
    pub fn block_sum(&mut self, x: Var, layout: Arc<[usize]>) -> Result<Var, EngineError> {
        let xv = self.check(x)?;
        check_layout(xv, &layout, "block_sum")?;
        let mut out = xv.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let mut start = 0;
            for &w in layout.iter() {
                let block = &mut row[start..start + w];
                let total: f64 = block.iter().sum();
                block.fill(total);
                start += w;
            }
        }
        self.push(Op::BlockSum { x, layout }, out)
    }

    /// Euclidean distance between every row of `a` (`n x d`) and every row
    /// of `b` (`m x d`), as an `n x m` matrix.
    pub fn pairwise_dist(&mut self, a: Var, b: Var) -> Result<Var, EngineError> {
        let out = pairwise_distances(self.check(a)?, self.check(b)?)?;
        self.push(Op::PairwiseDist { a, b }, out)
    }

    /// Minimum of each row: `n x m -> n x 1`.
    pub fn min_cols(&mut self, x: Var) -> Result<Var, EngineError> {
        let xv = self.check(x)?;
        if xv.cols() == 0 {
            return Err(EngineError::ShapeMismatch {
                op: "min_cols",
                left: xv.shape(),
                right: [xv.rows(), 1],
            });
        }
        let data = (0..xv.rows())
            .map(|r| xv.row(r).iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        let out = Tensor::new(xv.rows(), 1, data)?;
        self.push(Op::MinCols(x), out)
    }

    // ---- composites ---------------------------------------------------------

    pub fn mean(&mut self, x: Var) -> Result<Var, EngineError> {
        let n = self.check(x)?.len();
        if n == 0 {
            return Err(EngineError::Empty { op: "mean" });
        }
        let total = self.sum_all(x)?;
        self.scale(total, 1.0 / n as f64)
    }

    /// Euclidean norm of each row: `n x m -> n x 1`.
    pub fn row_l2_norm(&mut self, x: Var) -> Result<Var, EngineError> {
        let sq = self.square(x)?;
        let sums = self.sum_cols(sq)?;
        self.sqrt(sums)
    }

    pub fn neg(&mut self, x: Var) -> Result<Var, EngineError> {
        self.scale(x, -1.0)
    }

    fn scalar_value(&self, x: Var, op: &'static str) -> Result<f64, EngineError> {
        let v = self.check(x)?;
        v.item().ok_or(EngineError::ShapeMismatch {
            op,
            left: v.shape(),
            right: [1, 1],
        })
    }

    // ---- differentiation ----------------------------------------------------

    /// Gradients of a scalar `output` with respect to each of `wrt`, returned
    /// as graph nodes that can be used in further computation and
    /// differentiated again.
    ///
    /// Fails if any `wrt` does not influence `output`.
    pub fn grad(&mut self, output: Var, wrt: &[Var]) -> Result<Vec<Var>, EngineError> {
        let grads = self.grad_inner(output, wrt)?;
        grads
            .into_iter()
            .zip(wrt)
            .map(|(g, w)| g.ok_or(EngineError::NotInGraph(w.0)))
            .collect()
    }

    /// Gradient tensors of a scalar `output` for every parameter leaf, in
    /// creation order. Parameters that do not influence `output` get zeros.
    pub fn backward(&mut self, output: Var) -> Result<Vec<(Var, Tensor)>, EngineError> {
        let params = self.params();
        let grads = self.grad_inner(output, &params)?;
        Ok(params
            .into_iter()
            .zip(grads)
            .map(|(p, g)| {
                let t = match g {
                    Some(g) => self.value(g).clone(),
                    None => {
                        let [r, c] = self.value(p).shape();
                        Tensor::zeros(r, c)
                    }
                };
                (p, t)
            })
            .collect())
    }

    fn grad_inner(&mut self, output: Var, wrt: &[Var]) -> Result<Vec<Option<Var>>, EngineError> {
        let out_shape = self.check(output)?.shape();
        if out_shape != [1, 1] {
            return Err(EngineError::NonScalarOutput(out_shape));
        }
        for w in wrt {
            self.check(*w)?;
        }
        let end = output.0 + 1;
        let mut needs = vec![false; end];
        for w in wrt {
            if w.0 < end {
                needs[w.0] = true;
            }
        }
        for i in 0..end {
            if !needs[i] && self.nodes[i].op.inputs().iter().any(|v| needs[v.0]) {
                needs[i] = true;
            }
        }

        let mut adjoint: Vec<Option<Var>> = vec![None; end];
        if needs[output.0] {
            adjoint[output.0] = Some(self.constant(Tensor::scalar(1.0)));
        }
        for i in (0..end).rev() {
            let Some(g) = adjoint[i] else { continue };
            if matches!(self.nodes[i].op, Op::Leaf { .. }) {
                continue;
            }
            let contributions = self.backward_node(Var(i), g, &needs)?;
            for (input, contrib) in contributions {
                adjoint[input.0] = Some(match adjoint[input.0] {
                    Some(prev) => self.add(prev, contrib)?,
                    None => contrib,
                });
            }
        }
        Ok(wrt
            .iter()
            .map(|w| if w.0 < end { adjoint[w.0] } else { None })
            .collect())
    }

    /// Vector-Jacobian products of one node, built as new graph nodes.
    fn backward_node(
        &mut self,
        node: Var,
        g: Var,
        needs: &[bool],
    ) -> Result<Vec<(Var, Var)>, EngineError> {
        let op = self.nodes[node.0].op.clone();
        let need = |v: Var| needs[v.0];
        let mut out = Vec::new();
        match op {
            Op::Leaf { .. } => {}
            Op::MatMul { a, b, ta, tb } => {
                if need(a) {
                    let ga = if ta {
                        self.matmul_t(b, tb, g, true)?
                    } else {
                        self.matmul_t(g, false, b, !tb)?
                    };
                    out.push((a, ga));
                }
                if need(b) {
                    let gb = if tb {
                        self.matmul_t(g, true, a, ta)?
                    } else {
                        self.matmul_t(a, !ta, g, false)?
                    };
                    out.push((b, gb));
                }
            }
            Op::AddRowBroadcast { x, bias } => {
                if need(x) {
                    out.push((x, g));
                }
                if need(bias) {
                    out.push((bias, self.sum_rows(g)?));
                }
            }
            Op::SumRows(x) => {
                let rows = self.value(x).rows();
                out.push((x, self.broadcast_rows(g, rows)?));
            }
            Op::BroadcastRows(x) => out.push((x, self.sum_rows(g)?)),
            Op::SumCols(x) => {
                let cols = self.value(x).cols();
                out.push((x, self.broadcast_cols(g, cols)?));
            }
            Op::BroadcastCols(x) => out.push((x, self.sum_cols(g)?)),
            Op::SumAll(x) => {
                let [r, c] = self.value(x).shape();
                out.push((x, self.expand(g, r, c)?));
            }
            Op::Expand(x) => out.push((x, self.sum_all(g)?)),
            Op::Add(a, b) => {
                if need(a) {
                    out.push((a, g));
                }
                if need(b) {
                    out.push((b, g));
                }
            }
            Op::Sub(a, b) => {
                if need(a) {
                    out.push((a, g));
                }
                if need(b) {
                    out.push((b, self.neg(g)?));
                }
            }
            Op::Mul(a, b) => {
                if need(a) {
                    out.push((a, self.mul(g, b)?));
                }
                if need(b) {
                    out.push((b, self.mul(g, a)?));
                }
            }
            Op::Scale(x, c) => out.push((x, self.scale(g, c)?)),
            Op::AddScalar(x) => out.push((x, g)),
            Op::Square(x) => {
                let two_x = self.scale(x, 2.0)?;
                out.push((x, self.mul(g, two_x)?));
            }
            Op::Sqrt(x) => {
                let inv = self.recip(node)?;
                let half_inv = self.scale(inv, 0.5)?;
                out.push((x, self.mul(g, half_inv)?));
            }
            Op::Recip(x) => {
                let y2 = self.square(node)?;
                let gy2 = self.mul(g, y2)?;
                out.push((x, self.neg(gy2)?));
            }
            Op::LeakyRelu { x, slope } => {
                let mask = self.value(x).map(|v| if v > 0.0 { 1.0 } else { slope });
                let mask = self.constant(mask);
                out.push((x, self.mul(g, mask)?));
            }
            Op::BlockSoftmax { x, layout } => {
                let gy = self.mul(g, node)?;
                let sums = self.block_sum(gy, layout)?;
                let centered = self.sub(g, sums)?;
                out.push((x, self.mul(node, centered)?));
            }
            Op::BlockSum { x, layout } => out.push((x, self.block_sum(g, layout)?)),
            Op::PairwiseDist { a, b } => {
                let (ga, gb) = pairwise_dist_vjp(
                    self.value(a),
                    self.value(b),
                    self.value(node),
                    self.value(g),
                    need(a),
                    need(b),
                )?;
                if let Some(ga) = ga {
                    let v = self.push(
                        Op::Frozen {
                            origins: vec![a, b, g],
                        },
                        ga,
                    )?;
                    out.push((a, v));
                }
                if let Some(gb) = gb {
                    let v = self.push(
                        Op::Frozen {
                            origins: vec![a, b, g],
                        },
                        gb,
                    )?;
                    out.push((b, v));
                }
            }
            Op::MinCols(x) => {
                let xv = self.value(x);
                let gv = self.value(g);
                let mut gx = Tensor::zeros(xv.rows(), xv.cols());
                for r in 0..xv.rows() {
                    let row = xv.row(r);
                    let mut best = 0;
                    for (c, &v) in row.iter().enumerate() {
                        if v < row[best] {
                            best = c;
                        }
                    }
                    gx.row_mut(r)[best] = gv.data()[r];
                }
                let v = self.push(
                    Op::Frozen {
                        origins: vec![x, g],
                    },
                    gx,
                )?;
                out.push((x, v));
            }
            Op::Frozen { .. } => return Err(EngineError::SecondOrderUnsupported),
        }
        Ok(out)
    }
}

fn check_layout(x: &Tensor, layout: &[usize], op: &'static str) -> Result<(), EngineError> {
    let width: usize = layout.iter().sum();
    if width != x.cols() || layout.contains(&0) {
        return Err(EngineError::ShapeMismatch {
            op,
            left: x.shape(),
            right: [x.rows(), width],
        });
    }
    Ok(())
}

/// Row-to-row Euclidean distances.
///
/// Uses the expansion `|a|^2 + |b|^2 - 2 a.b`; entries whose squared distance
/// is small relative to the row norms are recomputed directly so that
/// coincident rows come out as exactly zero.
pub fn pairwise_distances(a: &Tensor, b: &Tensor) -> Result<Tensor, EngineError> {
    if a.cols() != b.cols() {
        return Err(EngineError::ShapeMismatch {
            op: "pairwise_dist",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let sq_a: Vec<f64> = (0..a.rows())
        .map(|i| a.row(i).iter().map(|v| v * v).sum())
        .collect();
    let sq_b: Vec<f64> = (0..b.rows())
        .map(|j| b.row(j).iter().map(|v| v * v).sum())
        .collect();
    let mut out = gemm(a, false, b, true)?;
    for i in 0..a.rows() {
        let row = out.row_mut(i);
        for (j, cell) in row.iter_mut().enumerate() {
            let scale = sq_a[i] + sq_b[j];
            let mut d2 = scale - 2.0 * *cell;
            if d2 <= 1e-4 * scale {
                d2 = a
                    .row(i)
                    .iter()
                    .zip(b.row(j))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
            }
            *cell = d2.max(0.0).sqrt();
        }
    }
    Ok(out)
}

/// Gradients of `sum(G * D)` with respect to the inputs of a distance matrix.
/// The derivative at coincident rows is taken as zero.
fn pairwise_dist_vjp(
    a: &Tensor,
    b: &Tensor,
    dist: &Tensor,
    upstream: &Tensor,
    need_a: bool,
    need_b: bool,
) -> Result<(Option<Tensor>, Option<Tensor>), EngineError> {
    let weights = upstream.zip_map(
        dist,
        "pairwise_dist",
        |g, d| if d > 0.0 { g / d } else { 0.0 },
    )?;
    let ga = if need_a {
        let mut ga = gemm(&weights, false, b, false)?;
        for i in 0..a.rows() {
            let s: f64 = weights.row(i).iter().sum();
            for (o, x) in ga.row_mut(i).iter_mut().zip(a.row(i)) {
                *o = s * x - *o;
            }
        }
        Some(ga)
    } else {
        None
    };
    let gb = if need_b {
        let mut gb = gemm(&weights, true, a, false)?;
        let mut col_sums = vec![0.0; b.rows()];
        for i in 0..weights.rows() {
            for (s, w) in col_sums.iter_mut().zip(weights.row(i)) {
                *s += w;
            }
        }
        for (j, s) in col_sums.iter().enumerate() {
            for (o, y) in gb.row_mut(j).iter_mut().zip(b.row(j)) {
                *o = s * y - *o;
            }
        }
        Some(gb)
    } else {
        None
    };
    Ok((ga, gb))
}
