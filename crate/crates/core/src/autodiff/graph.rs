//! Reverse-mode differentiation over a per-forward-pass tape.
//!
//! Every value is a row-major matrix. A [`Graph`] borrows the parameter store
//! read-only, records each op as it runs, and [`Graph::backward`] walks the
//! tape once in reverse. Nodes that cannot reach a parameter are never
//! visited during the reverse pass.

use super::params::{Gradients, ParamId, ParamStore};
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine(Var, f64),
    AddRow(Var, Var),
    MatMul(Var, Var),
    Transpose(Var),
    Reshape(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    Row(Var, usize),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Log(Var),
    Embedding(Var, Vec<usize>),
    Nll(Var, Vec<usize>),
    Sum(Var),
    Conv1d(Var, Var),
}

#[derive(Debug)]
enum Value {
    Owned(Vec<f64>),
    Param(ParamId),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Value,
    rows: usize,
    cols: usize,
    needs_grad: bool,
}

pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::with_capacity(1024),
            param_vars: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match &self.nodes[v.0].value {
            Value::Owned(d) => d,
            Value::Param(id) => self.params.get(*id).data(),
        }
    }

    pub fn dims(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    pub fn to_tensor(&self, v: Var) -> Tensor {
        let (r, c) = self.dims(v);
        Tensor::matrix(r, c, self.value(v).to_vec()).expect("node shape")
    }

    fn push(&mut self, op: Op, data: Vec<f64>, rows: usize, cols: usize, needs_grad: bool) -> Var {
        debug_assert_eq!(data.len(), rows * cols);
        self.nodes.push(Node {
            op,
            value: Value::Owned(data),
            rows,
            cols,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    // ── leaves ───────────────────────────────────────────────────────────

    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Var {
        assert_eq!(rows * cols, data.len(), "constant shape");
        self.push(Op::Constant, data, rows, cols, false)
    }

    pub fn constant_tensor(&mut self, t: &Tensor) -> Var {
        let (r, c) = t.dims2();
        self.constant(r, c, t.data().to_vec())
    }

    /// Leaf for a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let t = self.params.get(id);
        let (rows, cols) = t.dims2();
        self.nodes.push(Node {
            op: Op::Param(id),
            value: Value::Param(id),
            rows,
            cols,
            needs_grad: t.requires_grad(),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.0] = Some(v);
        v
    }

    // ── elementwise ──────────────────────────────────────────────────────

    fn same_dims(&self, a: Var, b: Var, what: &str) {
        assert_eq!(self.dims(a), self.dims(b), "{what}: shape mismatch");
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.same_dims(a, b, "add");
        let d: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let (r, c) = self.dims(a);
        let ng = self.ng(a) || self.ng(b);
        self.push(Op::Add(a, b), d, r, c, ng)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.same_dims(a, b, "sub");
        let d: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x - y).collect();
        let (r, c) = self.dims(a);
        let ng = self.ng(a) || self.ng(b);
        self.push(Op::Sub(a, b), d, r, c, ng)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.same_dims(a, b, "mul");
        let d: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        let (r, c) = self.dims(a);
        let ng = self.ng(a) || self.ng(b);
        self.push(Op::Mul(a, b), d, r, c, ng)
    }

    /// `scale * a + shift`.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let d: Vec<f64> = self.value(a).iter().map(|x| scale * x + shift).collect();
        let (r, c) = self.dims(a);
        let ng = self.ng(a);
        self.push(Op::Affine(a, scale), d, r, c, ng)
    }

    /// Adds the `1 x n` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Var {
        let (r, c) = self.dims(a);
        assert_eq!(self.dims(b), (1, c), "add_row: bias shape");
        let bv = self.value(b);
        let mut d = self.value(a).to_vec();
        for row in d.chunks_mut(c) {
            for (x, y) in row.iter_mut().zip(bv) {
                *x += y;
            }
        }
        let ng = self.ng(a) || self.ng(b);
        self.push(Op::AddRow(a, b), d, r, c, ng)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let d: Vec<f64> = self.value(a).iter().map(|x| x.tanh()).collect();
        let (r, c) = self.dims(a);
        let ng = self.ng(a);
        self.push(Op::Tanh(a), d, r, c, ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let d: Vec<f64> = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        let (r, c) = self.dims(a);
        let ng = self.ng(a);
        self.push(Op::Sigmoid(a), d, r, c, ng)
    }

    pub fn log(&mut self, a: Var) -> Var {
        let d: Vec<f64> = self.value(a).iter().map(|x| x.ln()).collect();
        let (r, c) = self.dims(a);
        let ng = self.ng(a);
        self.push(Op::Log(a), d, r, c, ng)
    }

    // ── linear algebra and layout ────────────────────────────────────────

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        assert_eq!(k, k2, "matmul: inner dims {k} vs {k2}");
        let mut d = vec![0.0; m * n];
        matmul_acc(self.value(a), self.value(b), &mut d, m, k, n);
        let ng = self.ng(a) || self.ng(b);
        self.push(Op::MatMul(a, b), d, m, n, ng)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let (r, c) = self.dims(a);
        let d = transposed(self.value(a), r, c);
        let ng = self.ng(a);
        self.push(Op::Transpose(a), d, c, r, ng)
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let (r, c) = self.dims(a);
        assert_eq!(r * c, rows * cols, "reshape: size");
        let d = self.value(a).to_vec();
        let ng = self.ng(a);
        self.push(Op::Reshape(a), d, rows, cols, ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.dims(parts[0]).0;
        let cols: usize = parts
            .iter()
            .map(|&p| {
                assert_eq!(self.dims(p).0, rows, "concat_cols: row mismatch");
                self.dims(p).1
            })
            .sum();
        let mut d = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                let pc = self.dims(p).1;
                d.extend_from_slice(&self.value(p)[r * pc..(r + 1) * pc]);
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(Op::ConcatCols(parts.to_vec()), d, rows, cols, ng)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.dims(parts[0]).1;
        let mut rows = 0;
        let mut d = Vec::new();
        for &p in parts {
            assert_eq!(self.dims(p).1, cols, "concat_rows: col mismatch");
            rows += self.dims(p).0;
            d.extend_from_slice(self.value(p));
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(Op::ConcatRows(parts.to_vec()), d, rows, cols, ng)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let (r, c) = self.dims(a);
        assert!(start + len <= c, "slice_cols out of range");
        let av = self.value(a);
        let mut d = Vec::with_capacity(r * len);
        for row in av.chunks(c) {
            d.extend_from_slice(&row[start..start + len]);
        }
        let ng = self.ng(a);
        self.push(Op::SliceCols(a, start), d, r, len, ng)
    }

    pub fn row(&mut self, a: Var, idx: usize) -> Var {
        let (r, c) = self.dims(a);
        assert!(idx < r, "row out of range");
        let d = self.value(a)[idx * c..(idx + 1) * c].to_vec();
        let ng = self.ng(a);
        self.push(Op::Row(a, idx), d, 1, c, ng)
    }

    // ── normalizers and losses ───────────────────────────────────────────

    /// Row-wise softmax with max subtraction.
    pub fn softmax(&mut self, a: Var) -> Var {
        let (r, c) = self.dims(a);
        let mut d = self.value(a).to_vec();
        for row in d.chunks_mut(c) {
            softmax_in_place(row);
        }
        let ng = self.ng(a);
        self.push(Op::Softmax(a), d, r, c, ng)
    }

    /// Row-wise log-softmax with max subtraction.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let (r, c) = self.dims(a);
        let mut d = self.value(a).to_vec();
        for row in d.chunks_mut(c) {
            log_softmax_in_place(row);
        }
        let ng = self.ng(a);
        self.push(Op::LogSoftmax(a), d, r, c, ng)
    }

    /// Gathers rows of `table` (one per id) into an `ids.len() x cols` matrix.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Var {
        let (r, c) = self.dims(table);
        let tv = self.value(table);
        let mut d = Vec::with_capacity(ids.len() * c);
        for &i in ids {
            assert!(i < r, "embedding id {i} out of range {r}");
            d.extend_from_slice(&tv[i * c..(i + 1) * c]);
        }
        let ng = self.ng(table);
        self.push(Op::Embedding(table, ids.to_vec()), d, ids.len(), c, ng)
    }

    /// Sum over rows of `-logp[row, target[row]]`. Consumes log-probabilities.
    pub fn nll(&mut self, logp: Var, targets: &[usize]) -> Var {
        let (r, c) = self.dims(logp);
        assert_eq!(r, targets.len(), "nll: one target per row");
        let lv = self.value(logp);
        let s: f64 = targets
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                assert!(t < c, "nll target {t} out of range {c}");
                -lv[i * c + t]
            })
            .sum();
        let ng = self.ng(logp);
        self.push(Op::Nll(logp, targets.to_vec()), vec![s], 1, 1, ng)
    }

    /// Summed cross-entropy of row-wise logits against hard targets.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Var {
        let lp = self.log_softmax(logits);
        self.nll(lp, targets)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        let ng = self.ng(a);
        self.push(Op::Sum(a), vec![s], 1, 1, ng)
    }

    /// Same-padded 1-D convolution of a `1 x T` signal with a `C x K` bank
    /// (K odd), producing `T x C`.
    pub fn conv1d(&mut self, x: Var, kernel: Var) -> Var {
        let (xr, t) = self.dims(x);
        assert_eq!(xr, 1, "conv1d expects a single row");
        let (ch, k) = self.dims(kernel);
        assert_eq!(k % 2, 1, "conv1d kernel width must be odd");
        let half = k / 2;
        let xv = self.value(x);
        let kv = self.value(kernel);
        let mut d = vec![0.0; t * ch];
        for pos in 0..t {
            for c in 0..ch {
                let mut acc = 0.0;
                for j in 0..k {
                    let src = pos as isize + j as isize - half as isize;
                    if src >= 0 && (src as usize) < t {
                        acc += kv[c * k + j] * xv[src as usize];
                    }
                }
                d[pos * ch + c] = acc;
            }
        }
        let ng = self.ng(x) || self.ng(kernel);
        self.push(Op::Conv1d(x, kernel), d, t, ch, ng)
    }

    // ── reverse pass ─────────────────────────────────────────────────────

    /// Gradients of the scalar `loss` with respect to every parameter it reaches.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let (r, c) = self.dims(loss);
        if (r, c) != (1, 1) {
            return Err(Error::NonScalarLoss(vec![r, c]));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::new();

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            if g.iter().any(|v| v.is_nan()) {
                return Err(Error::NonFinite("reverse pass"));
            }
            self.propagate(node, &g, &mut grads, &mut out);
        }
        if !out.is_finite() {
            return Err(Error::NonFinite("parameter gradients"));
        }
        Ok(out)
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>], out: &mut Gradients) {
        let y = match &node.value {
            Value::Owned(d) => d.as_slice(),
            Value::Param(_) => &[],
        };
        match &node.op {
            Op::Constant => {}
            Op::Param(id) => {
                out.accumulate(*id, self.params.get(*id).shape(), g);
            }
            Op::Add(a, b) => {
                self.acc(grads, *a, |ga| add_into(ga, g));
                self.acc(grads, *b, |gb| add_into(gb, g));
            }
            Op::Sub(a, b) => {
                self.acc(grads, *a, |ga| add_into(ga, g));
                self.acc(grads, *b, |gb| gb.iter_mut().zip(g).for_each(|(x, y)| *x -= y));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                self.acc(grads, *a, |ga| {
                    for ((x, gi), bi) in ga.iter_mut().zip(g).zip(bv) {
                        *x += gi * bi;
                    }
                });
                self.acc(grads, *b, |gb| {
                    for ((x, gi), ai) in gb.iter_mut().zip(g).zip(av) {
                        *x += gi * ai;
                    }
                });
            }
            Op::Affine(a, s) => {
                self.acc(grads, *a, |ga| ga.iter_mut().zip(g).for_each(|(x, gi)| *x += s * gi));
            }
            Op::AddRow(a, b) => {
                let c = node.cols;
                self.acc(grads, *a, |ga| add_into(ga, g));
                self.acc(grads, *b, |gb| {
                    for row in g.chunks(c) {
                        add_into(gb, row);
                    }
                });
            }
            Op::MatMul(a, b) => {
                let (m, k) = self.dims(*a);
                let n = node.cols;
                let (av, bv) = (self.value(*a), self.value(*b));
                // dA = G · Bᵀ
                self.acc(grads, *a, |ga| {
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        let garow = &mut ga[i * k..(i + 1) * k];
                        for (kk, slot) in garow.iter_mut().enumerate() {
                            let brow = &bv[kk * n..(kk + 1) * n];
                            *slot += dot(grow, brow);
                        }
                    }
                });
                // dB = Aᵀ · G
                self.acc(grads, *b, |gb| {
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        let arow = &av[i * k..(i + 1) * k];
                        for (kk, &aik) in arow.iter().enumerate() {
                            if aik == 0.0 {
                                continue;
                            }
                            let gbrow = &mut gb[kk * n..(kk + 1) * n];
                            for (x, gi) in gbrow.iter_mut().zip(grow) {
                                *x += aik * gi;
                            }
                        }
                    }
                });
            }
            Op::Transpose(a) => {
                let gt = transposed(g, node.rows, node.cols);
                self.acc(grads, *a, |ga| add_into(ga, &gt));
            }
            Op::Reshape(a) => {
                self.acc(grads, *a, |ga| add_into(ga, g));
            }
            Op::ConcatCols(parts) => {
                let cols = node.cols;
                let mut off = 0;
                for &p in parts {
                    let pc = self.dims(p).1;
                    self.acc(grads, p, |gp| {
                        for (r, grow) in g.chunks(cols).enumerate() {
                            add_into(&mut gp[r * pc..(r + 1) * pc], &grow[off..off + pc]);
                        }
                    });
                    off += pc;
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    self.acc(grads, p, |gp| add_into(gp, &g[off..off + len]));
                    off += len;
                }
            }
            Op::SliceCols(a, start) => {
                let c = self.dims(*a).1;
                let len = node.cols;
                self.acc(grads, *a, |ga| {
                    for (r, grow) in g.chunks(len).enumerate() {
                        add_into(&mut ga[r * c + start..r * c + start + len], grow);
                    }
                });
            }
            Op::Row(a, r) => {
                let c = node.cols;
                self.acc(grads, *a, |ga| add_into(&mut ga[r * c..(r + 1) * c], g));
            }
            Op::Tanh(a) => {
                self.acc(grads, *a, |ga| {
                    for ((x, gi), yi) in ga.iter_mut().zip(g).zip(y) {
                        *x += gi * (1.0 - yi * yi);
                    }
                });
            }
            Op::Sigmoid(a) => {
                self.acc(grads, *a, |ga| {
                    for ((x, gi), yi) in ga.iter_mut().zip(g).zip(y) {
                        *x += gi * yi * (1.0 - yi);
                    }
                });
            }
            Op::Log(a) => {
                let av = self.value(*a);
                self.acc(grads, *a, |ga| {
                    for ((x, gi), ai) in ga.iter_mut().zip(g).zip(av) {
                        *x += gi / ai;
                    }
                });
            }
            Op::Softmax(a) => {
                let c = node.cols;
                self.acc(grads, *a, |ga| {
                    for ((garow, grow), yrow) in ga.chunks_mut(c).zip(g.chunks(c)).zip(y.chunks(c)) {
                        let s = dot(grow, yrow);
                        for ((x, gi), yi) in garow.iter_mut().zip(grow).zip(yrow) {
                            *x += yi * (gi - s);
                        }
                    }
                });
            }
            Op::LogSoftmax(a) => {
                let c = node.cols;
                self.acc(grads, *a, |ga| {
                    for ((garow, grow), yrow) in ga.chunks_mut(c).zip(g.chunks(c)).zip(y.chunks(c)) {
                        let s: f64 = grow.iter().sum();
                        for ((x, gi), yi) in garow.iter_mut().zip(grow).zip(yrow) {
                            *x += gi - yi.exp() * s;
                        }
                    }
                });
            }
            Op::Embedding(table, ids) => {
                let c = node.cols;
                self.acc(grads, *table, |gt| {
                    for (r, &id) in ids.iter().enumerate() {
                        add_into(&mut gt[id * c..(id + 1) * c], &g[r * c..(r + 1) * c]);
                    }
                });
            }
            Op::Nll(logp, targets) => {
                let c = self.dims(*logp).1;
                let g0 = g[0];
                self.acc(grads, *logp, |gl| {
                    for (r, &t) in targets.iter().enumerate() {
                        gl[r * c + t] -= g0;
                    }
                });
            }
            Op::Sum(a) => {
                let g0 = g[0];
                self.acc(grads, *a, |ga| ga.iter_mut().for_each(|x| *x += g0));
            }
            Op::Conv1d(x, kernel) => {
                let t = node.rows;
                let ch = node.cols;
                let k = self.dims(*kernel).1;
                let half = k / 2;
                let (xv, kv) = (self.value(*x), self.value(*kernel));
                self.acc(grads, *x, |gx| {
                    for pos in 0..t {
                        for c in 0..ch {
                            let gi = g[pos * ch + c];
                            for j in 0..k {
                                let src = pos as isize + j as isize - half as isize;
                                if src >= 0 && (src as usize) < t {
                                    gx[src as usize] += gi * kv[c * k + j];
                                }
                            }
                        }
                    }
                });
                self.acc(grads, *kernel, |gk| {
                    for pos in 0..t {
                        for c in 0..ch {
                            let gi = g[pos * ch + c];
                            for j in 0..k {
                                let src = pos as isize + j as isize - half as isize;
                                if src >= 0 && (src as usize) < t {
                                    gk[c * k + j] += gi * xv[src as usize];
                                }
                            }
                        }
                    }
                });
            }
        }
    }

    fn acc(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        let node = &self.nodes[v.0];
        if !node.needs_grad {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; node.rows * node.cols]);
        f(slot);
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in row.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in row.iter_mut() {
        *x /= s;
    }
}

fn log_softmax_in_place(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    for x in row.iter_mut() {
        *x -= lse;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn add_into(dst: &mut [f64], src: &[f64]) {
    for (x, y) in dst.iter_mut().zip(src) {
        *x += y;
    }
}

fn transposed(v: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut d = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            d[j * r + i] = v[i * c + j];
        }
    }
    d
}

/// `out += a (m x k) · b (k x n)`, i-k-j loop order.
pub(crate) fn matmul_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for kk in 0..k {
            let aik = a[i * k + kk];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
}
