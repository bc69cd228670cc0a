//! Reverse-mode differentiation tape over a fixed operator set.
//!
//! Values are computed eagerly as ops are recorded, so shape errors surface
//! at the call site. `backward` walks the record in reverse and accumulates
//! exact gradients into the [`ParamStore`]. Embedding gradients are sparse:
//! only gathered rows receive updates.

use crate::error::{CdnError, Result};
use crate::numerics::{Matrix, ParamId, ParamStore};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op {
    /// External constant, not differentiated.
    Input,
    /// Leaf referencing a parameter slot (small dense weights).
    Param(ParamId),
    /// Embedding lookup: row `rows[i]` of `table` becomes output row `i`.
    Gather { table: ParamId, rows: Vec<u32> },
    /// Bag embedding: output row `i` is the mean of `bags[i]` rows of `table`.
    GatherMean { table: ParamId, bags: Vec<Vec<u32>> },
    MatMul(NodeId, NodeId),
    /// `A * B^T`; the natural form for batched dot-product logits.
    MatMulNt(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// Adds a `1 x n` row to every row of an `m x n` matrix.
    AddBias(NodeId, NodeId),
    Relu(NodeId),
    /// Row-wise concatenation: output row i is `a[i] ++ b[i]`.
    ConcatRows(NodeId, NodeId),
    Scale(NodeId, f64),
    /// Scales row `i` of an `m x n` matrix by the `m x 1` column `s[i]`.
    ScaleRows { a: NodeId, s: NodeId },
    SliceCols { a: NodeId, start: usize, len: usize },
    SoftmaxRows(NodeId),
    /// In-batch sampled softmax cross entropy with diagonal targets.
    SoftmaxXent {
        logits: NodeId,
        weights: Vec<f64>,
        probs: Matrix,
        weight_sum: f64,
    },
}

struct Node {
    op: Op,
    value: Matrix,
}

/// Ordered record of primitive ops; each node is written once and the record
/// is topologically ordered by construction.
pub struct Tape {
    nodes: Vec<Node>,
    min_relu_abs: f64,
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            min_relu_abs: f64::INFINITY,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Value of a `1 x 1` node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].value.shape(), (1, 1));
        self.nodes[id.0].value.data()[0]
    }

    /// Smallest `|x|` seen at any relu input during forward evaluation.
    /// Finite-difference checks use it to detect kink-adjacent evaluations.
    pub fn min_relu_abs(&self) -> f64 {
        self.min_relu_abs
    }

    fn push(&mut self, op: Op, value: Matrix) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value });
        id
    }

    pub fn input(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Input, value)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.push(Op::Param(id), store.value(id).clone())
    }

    pub fn gather_rows(&mut self, store: &ParamStore, table: ParamId, rows: &[u32]) -> Result<NodeId> {
        let t = store.value(table);
        let mut out = Matrix::zeros(rows.len(), t.cols());
        for (i, &r) in rows.iter().enumerate() {
            let r = r as usize;
            if r >= t.rows() {
                return Err(CdnError::Shape {
                    op: "gather_rows",
                    details: format!("row {} out of range for {}x{} table", r, t.rows(), t.cols()),
                });
            }
            out.row_mut(i).copy_from_slice(t.row(r));
        }
        Ok(self.push(
            Op::Gather {
                table,
                rows: rows.to_vec(),
            },
            out,
        ))
    }

    pub fn gather_rows_mean(
        &mut self,
        store: &ParamStore,
        table: ParamId,
        bags: &[Vec<u32>],
    ) -> Result<NodeId> {
        let t = store.value(table);
        let mut out = Matrix::zeros(bags.len(), t.cols());
        for (i, bag) in bags.iter().enumerate() {
            if bag.is_empty() {
                return Err(CdnError::Shape {
                    op: "gather_rows_mean",
                    details: format!("empty bag at row {i}"),
                });
            }
            let inv = 1.0 / bag.len() as f64;
            let row = out.row_mut(i);
            for &r in bag {
                let r = r as usize;
                if r >= t.rows() {
                    return Err(CdnError::Shape {
                        op: "gather_rows_mean",
                        details: format!("row {} out of range for {}x{} table", r, t.rows(), t.cols()),
                    });
                }
                for (o, &v) in row.iter_mut().zip(t.row(r)) {
                    *o += v * inv;
                }
            }
        }
        Ok(self.push(
            Op::GatherMean {
                table,
                bags: bags.to_vec(),
            },
            out,
        ))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul_nt(self.value(b))?;
        Ok(self.push(Op::MatMulNt(a, b), value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(CdnError::Shape {
                op: "add",
                details: format!("{:?} vs {:?}", va.shape(), vb.shape()),
            });
        }
        let mut out = va.clone();
        out.add_assign(vb)?;
        Ok(self.push(Op::Add(a, b), out))
    }

    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(bias));
        if vb.rows() != 1 || vb.cols() != va.cols() {
            return Err(CdnError::Shape {
                op: "add_bias",
                details: format!("{:?} with bias {:?}", va.shape(), vb.shape()),
            });
        }
        let mut out = va.clone();
        for i in 0..out.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(vb.row(0)) {
                *o += b;
            }
        }
        Ok(self.push(Op::AddBias(a, bias), out))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        let mut min_abs = f64::INFINITY;
        let mut out = va.clone();
        for v in out.data_mut() {
            min_abs = min_abs.min(v.abs());
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.min_relu_abs = self.min_relu_abs.min(min_abs);
        self.push(Op::Relu(a), out)
    }

    pub fn concat_rows(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.rows() != vb.rows() {
            return Err(CdnError::Shape {
                op: "concat_rows",
                details: format!("{:?} vs {:?}", va.shape(), vb.shape()),
            });
        }
        let (m, ca, cb) = (va.rows(), va.cols(), vb.cols());
        let mut out = Matrix::zeros(m, ca + cb);
        for i in 0..m {
            out.row_mut(i)[..ca].copy_from_slice(va.row(i));
            out.row_mut(i)[ca..].copy_from_slice(vb.row(i));
        }
        Ok(self.push(Op::ConcatRows(a, b), out))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let mut out = self.value(a).clone();
        out.scale_assign(c);
        self.push(Op::Scale(a, c), out)
    }

    pub fn scale_rows(&mut self, a: NodeId, s: NodeId) -> Result<NodeId> {
        let (va, vs) = (self.value(a), self.value(s));
        if vs.rows() != va.rows() || vs.cols() != 1 {
            return Err(CdnError::Shape {
                op: "scale_rows",
                details: format!("{:?} with scales {:?}", va.shape(), vs.shape()),
            });
        }
        let mut out = va.clone();
        for i in 0..out.rows() {
            let c = vs.at(i, 0);
            for v in out.row_mut(i) {
                *v *= c;
            }
        }
        Ok(self.push(Op::ScaleRows { a, s }, out))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let va = self.value(a);
        if start + len > va.cols() {
            return Err(CdnError::Shape {
                op: "slice_cols",
                details: format!("[{start}, {}) of {:?}", start + len, va.shape()),
            });
        }
        let mut out = Matrix::zeros(va.rows(), len);
        for i in 0..va.rows() {
            out.row_mut(i).copy_from_slice(&va.row(i)[start..start + len]);
        }
        Ok(self.push(Op::SliceCols { a, start, len }, out))
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let out = softmax_by_rows(self.value(a));
        self.push(Op::SoftmaxRows(a), out)
    }

    /// In-batch sampled softmax cross entropy: row `r`'s positive is column
    /// `r`, remaining columns act as negatives. Returns a `1 x 1` node with
    /// `-sum_r w_r * log softmax(logits[r])[r] / sum_r w_r`.
    pub fn softmax_xent_inbatch(&mut self, logits: NodeId, weights: &[f64]) -> Result<NodeId> {
        let l = self.value(logits);
        if l.rows() != l.cols() {
            return Err(CdnError::Shape {
                op: "softmax_xent_inbatch",
                details: format!("logits must be square, got {:?}", l.shape()),
            });
        }
        if weights.len() != l.rows() {
            return Err(CdnError::Shape {
                op: "softmax_xent_inbatch",
                details: format!("{} weights for {} rows", weights.len(), l.rows()),
            });
        }
        if !l.all_finite() {
            return Err(CdnError::Numeric("non-finite logits in softmax_xent_inbatch".into()));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(CdnError::Numeric("negative or non-finite row weight".into()));
        }
        let weight_sum: f64 = weights.iter().sum();
        if weight_sum <= 0.0 {
            return Err(CdnError::Numeric("row weights sum to zero".into()));
        }
        let probs = softmax_by_rows(l);
        let mut loss = 0.0;
        for r in 0..l.rows() {
            // log softmax computed from shifted logits for stability
            let row = l.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let logsum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
            loss -= weights[r] * (row[r] - logsum);
        }
        loss /= weight_sum;
        let value = Matrix::from_vec(1, 1, vec![loss])?;
        Ok(self.push(
            Op::SoftmaxXent {
                logits,
                weights: weights.to_vec(),
                probs,
                weight_sum,
            },
            value,
        ))
    }

    /// Reverse-mode sweep from `loss` (a `1 x 1` node). Gradients accumulate
    /// into the store; parameters not reachable from `loss` are untouched.
    pub fn backward(&self, loss: NodeId, store: &mut ParamStore) -> Result<()> {
        let loss_val = &self.nodes[loss.0].value;
        if loss_val.shape() != (1, 1) {
            return Err(CdnError::Shape {
                op: "backward",
                details: format!("loss node must be 1x1, got {:?}", loss_val.shape()),
            });
        }
        let mut adjoints: Vec<Option<Matrix>> = (0..=loss.0).map(|_| None).collect();
        adjoints[loss.0] = Some(Matrix::from_vec(1, 1, vec![1.0])?);

        for id in (0..=loss.0).rev() {
            let Some(grad) = adjoints[id].take() else {
                continue;
            };
            match &self.nodes[id].op {
                Op::Input => {}
                Op::Param(pid) => {
                    store.grad_mut(*pid).add_assign(&grad)?;
                }
                Op::Gather { table, rows } => {
                    let gt = store.grad_mut(*table);
                    for (i, &r) in rows.iter().enumerate() {
                        let dst = gt.row_mut(r as usize);
                        for (d, &g) in dst.iter_mut().zip(grad.row(i)) {
                            *d += g;
                        }
                    }
                }
                Op::GatherMean { table, bags } => {
                    let gt = store.grad_mut(*table);
                    for (i, bag) in bags.iter().enumerate() {
                        let inv = 1.0 / bag.len() as f64;
                        for &r in bag {
                            let dst = gt.row_mut(r as usize);
                            for (d, &g) in dst.iter_mut().zip(grad.row(i)) {
                                *d += g * inv;
                            }
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    // C = A B: dA = G B^T, dB = A^T G
                    let da = grad.matmul_nt(&self.nodes[b.0].value)?;
                    let db = self.nodes[a.0].value.matmul_tn(&grad)?;
                    accumulate(&mut adjoints, a.0, da)?;
                    accumulate(&mut adjoints, b.0, db)?;
                }
                Op::MatMulNt(a, b) => {
                    // C = A B^T: dA = G B, dB = G^T A
                    let da = grad.matmul(&self.nodes[b.0].value)?;
                    let db = grad.matmul_tn(&self.nodes[a.0].value)?;
                    accumulate(&mut adjoints, a.0, da)?;
                    accumulate(&mut adjoints, b.0, db)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut adjoints, a.0, grad.clone())?;
                    accumulate(&mut adjoints, b.0, grad)?;
                }
                Op::AddBias(a, bias) => {
                    let mut db = Matrix::zeros(1, grad.cols());
                    for i in 0..grad.rows() {
                        for (d, &g) in db.row_mut(0).iter_mut().zip(grad.row(i)) {
                            *d += g;
                        }
                    }
                    accumulate(&mut adjoints, a.0, grad)?;
                    accumulate(&mut adjoints, bias.0, db)?;
                }
                Op::Relu(a) => {
                    // subgradient at 0 is 0
                    let x = &self.nodes[a.0].value;
                    let mut da = grad;
                    for (d, &xv) in da.data_mut().iter_mut().zip(x.data()) {
                        if xv <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut adjoints, a.0, da)?;
                }
                Op::ConcatRows(a, b) => {
                    let ca = self.nodes[a.0].value.cols();
                    let cb = self.nodes[b.0].value.cols();
                    let mut da = Matrix::zeros(grad.rows(), ca);
                    let mut db = Matrix::zeros(grad.rows(), cb);
                    for i in 0..grad.rows() {
                        da.row_mut(i).copy_from_slice(&grad.row(i)[..ca]);
                        db.row_mut(i).copy_from_slice(&grad.row(i)[ca..]);
                    }
                    accumulate(&mut adjoints, a.0, da)?;
                    accumulate(&mut adjoints, b.0, db)?;
                }
                Op::Scale(a, c) => {
                    let mut da = grad;
                    da.scale_assign(*c);
                    accumulate(&mut adjoints, a.0, da)?;
                }
                Op::ScaleRows { a, s } => {
                    let va = &self.nodes[a.0].value;
                    let vs = &self.nodes[s.0].value;
                    let mut da = grad.clone();
                    let mut ds = Matrix::zeros(vs.rows(), 1);
                    for i in 0..grad.rows() {
                        let c = vs.at(i, 0);
                        let mut dot = 0.0;
                        for ((d, &g), &av) in da.row_mut(i).iter_mut().zip(grad.row(i)).zip(va.row(i)) {
                            dot += g * av;
                            *d = g * c;
                        }
                        ds.set(i, 0, dot);
                    }
                    accumulate(&mut adjoints, a.0, da)?;
                    accumulate(&mut adjoints, s.0, ds)?;
                }
                Op::SliceCols { a, start, len } => {
                    let va = &self.nodes[a.0].value;
                    let mut da = Matrix::zeros(va.rows(), va.cols());
                    for i in 0..grad.rows() {
                        da.row_mut(i)[*start..start + len].copy_from_slice(grad.row(i));
                    }
                    accumulate(&mut adjoints, a.0, da)?;
                }
                Op::SoftmaxRows(a) => {
                    let y = &self.nodes[id].value;
                    let mut da = Matrix::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let dot: f64 = grad.row(i).iter().zip(y.row(i)).map(|(&g, &yv)| g * yv).sum();
                        for ((d, &g), &yv) in da.row_mut(i).iter_mut().zip(grad.row(i)).zip(y.row(i)) {
                            *d = yv * (g - dot);
                        }
                    }
                    accumulate(&mut adjoints, a.0, da)?;
                }
                Op::SoftmaxXent {
                    logits,
                    weights,
                    probs,
                    weight_sum,
                } => {
                    let g = grad.data()[0];
                    let mut dl = probs.clone();
                    for r in 0..dl.rows() {
                        let w = weights[r] / weight_sum;
                        let row = dl.row_mut(r);
                        for v in row.iter_mut() {
                            *v *= w;
                        }
                        row[r] -= w;
                    }
                    dl.scale_assign(g);
                    accumulate(&mut adjoints, logits.0, dl)?;
                }
            }
        }
        Ok(())
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn accumulate(adjoints: &mut [Option<Matrix>], idx: usize, grad: Matrix) -> Result<()> {
    match &mut adjoints[idx] {
        Some(existing) => existing.add_assign(&grad),
        slot @ None => {
            *slot = Some(grad);
            Ok(())
        }
    }
}

/// Numerically-stable row softmax.
pub fn softmax_by_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(name: &str, m: Matrix) -> (ParamStore, ParamId) {
        let mut store = ParamStore::new();
        let id = store.register(name, m).unwrap();
        (store, id)
    }

    #[test]
    fn relu_clamps_negatives() {
        let mut tape = Tape::new();
        let x = tape.input(Matrix::from_rows(&[&[-1.0, 2.0]]));
        let y = tape.relu(x);
        assert_eq!(tape.value(y).data(), &[0.0, 2.0]);
    }

    #[test]
    fn concat_rows_widens() {
        let mut tape = Tape::new();
        let a = tape.input(Matrix::from_rows(&[&[1.0, 2.0]]));
        let b = tape.input(Matrix::from_rows(&[&[3.0]]));
        let c = tape.concat_rows(a, b).unwrap();
        assert_eq!(tape.value(c).shape(), (1, 3));
        assert_eq!(tape.value(c).data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn xent_uniform_logits_is_ln_b() {
        let mut tape = Tape::new();
        let l = tape.input(Matrix::zeros(2, 2));
        let loss = tape.softmax_xent_inbatch(l, &[1.0, 1.0]).unwrap();
        assert!((tape.scalar(loss) - (2.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn xent_single_candidate_is_zero() {
        let mut tape = Tape::new();
        let l = tape.input(Matrix::from_rows(&[&[3.7]]));
        let loss = tape.softmax_xent_inbatch(l, &[1.0]).unwrap();
        assert_eq!(tape.scalar(loss), 0.0);
    }

    #[test]
    fn xent_matches_scalar_formula_oracle() {
        // independent evaluation of -sum w_r log(e^{l_rr} / sum_j e^{l_rj}) / sum w
        let logits = Matrix::from_rows(&[
            &[0.3, -1.2, 0.7, 0.0],
            &[1.5, 2.0, -0.3, 0.4],
            &[-0.8, 0.1, 0.9, -1.1],
            &[0.2, 0.6, -0.5, 1.3],
        ]);
        let weights = [1.0, 0.5, 2.0, 0.25];
        let mut expected = 0.0;
        for r in 0..4 {
            let denom: f64 = (0..4).map(|j| logits.at(r, j).exp()).sum();
            expected -= weights[r] * (logits.at(r, r).exp() / denom).ln();
        }
        expected /= weights.iter().sum::<f64>();

        let mut tape = Tape::new();
        let l = tape.input(logits);
        let loss = tape.softmax_xent_inbatch(l, &weights).unwrap();
        assert!((tape.scalar(loss) - expected).abs() < 1e-12);
    }

    #[test]
    fn xent_rejects_non_finite() {
        let mut tape = Tape::new();
        let l = tape.input(Matrix::from_rows(&[&[f64::NAN, 0.0], &[0.0, 0.0]]));
        assert!(tape.softmax_xent_inbatch(l, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[-5.0, 0.0, 5.0]]);
        let s = softmax_by_rows(&m);
        for i in 0..2 {
            let sum: f64 = s.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_loss_leaves_gradients_zero() {
        let (mut store, w) = store_with("w", Matrix::from_rows(&[&[1.0, 2.0]]));
        let mut tape = Tape::new();
        let _unused = tape.param(&store, w);
        let c = tape.input(Matrix::from_vec(1, 1, vec![5.0]).unwrap());
        tape.backward(c, &mut store).unwrap();
        assert_eq!(store.grad(w).data(), &[0.0, 0.0]);
    }

    #[test]
    fn linear_squared_gradient_matches_hand_derivation() {
        // y = x W^T (row form of W x), loss = y y^T = |W x|^2 => dL/dW = 2 (W x) x^T
        let w_val = Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let x_val = Matrix::from_rows(&[&[2.0, 1.0]]);
        let (mut store, w) = store_with("w", w_val.clone());

        let mut tape = Tape::new();
        let wn = tape.param(&store, w);
        let x = tape.input(x_val.clone());
        let y = tape.matmul_nt(x, wn).unwrap(); // 1x2
        let loss = tape.matmul_nt(y, y).unwrap(); // 1x1
        tape.backward(loss, &mut store).unwrap();

        let y_col = [
            w_val.at(0, 0) * x_val.at(0, 0) + w_val.at(0, 1) * x_val.at(0, 1),
            w_val.at(1, 0) * x_val.at(0, 0) + w_val.at(1, 1) * x_val.at(0, 1),
        ];
        for i in 0..2 {
            for j in 0..2 {
                let expected = 2.0 * y_col[i] * x_val.at(0, j);
                assert!(
                    (store.grad(w).at(i, j) - expected).abs() < 1e-12,
                    "dW[{i}][{j}]"
                );
            }
        }
    }

    #[test]
    fn gather_accumulates_only_touched_rows() {
        let (mut store, table) = store_with("emb", Matrix::from_rows(&[&[1.0], &[2.0], &[3.0]]));
        let mut tape = Tape::new();
        let g = tape.gather_rows(&store, table, &[2, 2]).unwrap();
        // loss = sum of gathered = [1,1] * g
        let ones = tape.input(Matrix::from_rows(&[&[1.0, 1.0]]));
        let loss = tape.matmul(ones, g).unwrap();
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad(table).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn gather_mean_splits_gradient() {
        let (mut store, table) = store_with("emb", Matrix::from_rows(&[&[1.0], &[3.0]]));
        let mut tape = Tape::new();
        let g = tape
            .gather_rows_mean(&store, table, &[vec![0, 1]])
            .unwrap();
        assert_eq!(tape.value(g).data(), &[2.0]);
        let ones = tape.input(Matrix::from_rows(&[&[1.0]]));
        let loss = tape.matmul(ones, g).unwrap();
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad(table).data(), &[0.5, 0.5]);
    }
}
