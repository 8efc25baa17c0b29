//! Vector-valued reverse-mode tape.
//!
//! Every node holds a flat `Vec<f64>`. Binary elementwise ops broadcast a
//! length-1 operand against the other side.

use super::{Gradients, NnetError, ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Const,
    Param(ParamId),
    Row { param: ParamId, row: usize },
    MatVec { param: ParamId, x: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Ln(Var),
    Sin(Var),
    Cos(Var),
    Relu(Var),
    Softplus(Var),
    Sum(Var),
    Pick(Var, usize),
    LogSoftmax(Var),
    Min(Var, f64),
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::with_capacity(256),
        }
    }

    pub fn store(&self) -> &ParamStore {
        self.store
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Const)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let value = self.store.get(id).value.clone();
        self.push(value, Op::Param(id))
    }

    /// One row of a matrix parameter (embedding lookup).
    pub fn row(&mut self, id: ParamId, row: usize) -> Var {
        let p = self.store.get(id);
        let value = p.value[row * p.cols..(row + 1) * p.cols].to_vec();
        self.push(value, Op::Row { param: id, row })
    }

    /// `W x` for a `rows × cols` parameter.
    pub fn matvec(&mut self, id: ParamId, x: Var) -> Result<Var, NnetError> {
        let p = self.store.get(id);
        let xv = &self.nodes[x.0].value;
        if xv.len() != p.cols {
            return Err(NnetError::WidthMismatch {
                expected: p.cols,
                got: xv.len(),
            });
        }
        let value = (0..p.rows)
            .map(|r| {
                p.value[r * p.cols..(r + 1) * p.cols]
                    .iter()
                    .zip(xv)
                    .map(|(w, x)| w * x)
                    .sum()
            })
            .collect();
        Ok(self.push(value, Op::MatVec { param: id, x }))
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let n = av.len().max(bv.len());
        assert!(
            av.len() == bv.len() || av.len() == 1 || bv.len() == 1,
            "incompatible operand lengths {} and {}",
            av.len(),
            bv.len()
        );
        let value = (0..n)
            .map(|i| f(av[i.min(av.len() - 1)], bv[i.min(bv.len() - 1)]))
            .collect();
        self.push(value, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x / y, Op::Div(a, b))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let value = self.nodes[a.0].value.iter().map(|&x| f(x)).collect();
        self.push(value, op)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.unary(a, |x| k * x, Op::Scale(a, k))
    }

    /// Adds a constant; the gradient passes through unchanged.
    pub fn offset(&mut self, a: Var, k: f64) -> Var {
        self.unary(a, |x| x + k, Op::Offset(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.unary(a, f64::ln, Op::Ln(a))
    }

    pub fn sin(&mut self, a: Var) -> Var {
        self.unary(a, f64::sin, Op::Sin(a))
    }

    pub fn cos(&mut self, a: Var) -> Var {
        self.unary(a, f64::cos, Op::Cos(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    /// `ln(1 + e^x)`, evaluated without overflow.
    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(a, softplus, Op::Softplus(a))
    }

    /// Elementwise `min(x, cap)`.
    pub fn min_const(&mut self, a: Var, cap: f64) -> Var {
        self.unary(a, |x| x.min(cap), Op::Min(a, cap))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.iter().sum();
        self.push(vec![s], Op::Sum(a))
    }

    pub fn pick(&mut self, a: Var, i: usize) -> Var {
        let v = self.nodes[a.0].value[i];
        self.push(vec![v], Op::Pick(a, i))
    }

    pub fn log_softmax(&mut self, a: Var) -> Var {
        let value = log_softmax(&self.nodes[a.0].value);
        self.push(value, Op::LogSoftmax(a))
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients, NnetError> {
        let root_len = self.nodes[root.0].value.len();
        if root_len != 1 {
            return Err(NnetError::NonScalarRoot(root_len));
        }
        let mut grads = self.store.zero_gradients();
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        adj[root.0] = Some(vec![1.0]);

        for idx in (0..=root.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match node.op {
                Op::Const => {}
                Op::Param(id) => {
                    for (acc, gi) in grads.grads[id.0].iter_mut().zip(&g) {
                        *acc += gi;
                    }
                }
                Op::Row { param, row } => {
                    let cols = self.store.get(param).cols;
                    let dst = &mut grads.grads[param.0][row * cols..(row + 1) * cols];
                    for (acc, gi) in dst.iter_mut().zip(&g) {
                        *acc += gi;
                    }
                }
                Op::MatVec { param, x } => {
                    let p = self.store.get(param);
                    let xv = &self.nodes[x.0].value;
                    let dw = &mut grads.grads[param.0];
                    let mut dx = vec![0.0; p.cols];
                    for r in 0..p.rows {
                        let gr = g[r];
                        if gr == 0.0 {
                            continue;
                        }
                        let wrow = &p.value[r * p.cols..(r + 1) * p.cols];
                        let drow = &mut dw[r * p.cols..(r + 1) * p.cols];
                        for c in 0..p.cols {
                            drow[c] += gr * xv[c];
                            dx[c] += gr * wrow[c];
                        }
                    }
                    accumulate(&mut adj, x, dx);
                }
                Op::Add(a, b) => {
                    let ga = self.reduce_to(a, &g);
                    let gb = self.reduce_to(b, &g);
                    accumulate(&mut adj, a, ga);
                    accumulate(&mut adj, b, gb);
                }
                Op::Sub(a, b) => {
                    let ga = self.reduce_to(a, &g);
                    let gb: Vec<f64> = self.reduce_to(b, &g).into_iter().map(|x| -x).collect();
                    accumulate(&mut adj, a, ga);
                    accumulate(&mut adj, b, gb);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let at = |i: usize| av[i.min(av.len() - 1)];
                    let bt = |i: usize| bv[i.min(bv.len() - 1)];
                    let ga_full: Vec<f64> = (0..g.len()).map(|i| g[i] * bt(i)).collect();
                    let gb_full: Vec<f64> = (0..g.len()).map(|i| g[i] * at(i)).collect();
                    let ga = self.reduce_to(a, &ga_full);
                    let gb = self.reduce_to(b, &gb_full);
                    accumulate(&mut adj, a, ga);
                    accumulate(&mut adj, b, gb);
                }
                Op::Div(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let at = |i: usize| av[i.min(av.len() - 1)];
                    let bt = |i: usize| bv[i.min(bv.len() - 1)];
                    let ga_full: Vec<f64> = (0..g.len()).map(|i| g[i] / bt(i)).collect();
                    let gb_full: Vec<f64> = (0..g.len())
                        .map(|i| -g[i] * at(i) / (bt(i) * bt(i)))
                        .collect();
                    let ga = self.reduce_to(a, &ga_full);
                    let gb = self.reduce_to(b, &gb_full);
                    accumulate(&mut adj, a, ga);
                    accumulate(&mut adj, b, gb);
                }
                Op::Scale(a, k) => accumulate(&mut adj, a, g.iter().map(|x| k * x).collect()),
                Op::Offset(a) => accumulate(&mut adj, a, g),
                Op::Sigmoid(a) => {
                    let d = zip_map(&g, &node.value, |gi, y| gi * y * (1.0 - y));
                    accumulate(&mut adj, a, d);
                }
                Op::Tanh(a) => {
                    let d = zip_map(&g, &node.value, |gi, y| gi * (1.0 - y * y));
                    accumulate(&mut adj, a, d);
                }
                Op::Exp(a) => {
                    let d = zip_map(&g, &node.value, |gi, y| gi * y);
                    accumulate(&mut adj, a, d);
                }
                Op::Ln(a) => {
                    let d = zip_map(&g, &self.nodes[a.0].value, |gi, x| gi / x);
                    accumulate(&mut adj, a, d);
                }
                Op::Sin(a) => {
                    let d = zip_map(&g, &self.nodes[a.0].value, |gi, x| gi * x.cos());
                    accumulate(&mut adj, a, d);
                }
                Op::Cos(a) => {
                    let d = zip_map(&g, &self.nodes[a.0].value, |gi, x| -gi * x.sin());
                    accumulate(&mut adj, a, d);
                }
                Op::Relu(a) => {
                    let d = zip_map(&g, &self.nodes[a.0].value, |gi, x| {
                        if x > 0.0 {
                            gi
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut adj, a, d);
                }
                Op::Softplus(a) => {
                    let d = zip_map(&g, &self.nodes[a.0].value, |gi, x| gi * sigmoid(x));
                    accumulate(&mut adj, a, d);
                }
                Op::Min(a, cap) => {
                    let d = zip_map(&g, &self.nodes[a.0].value, |gi, x| {
                        if x < cap {
                            gi
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut adj, a, d);
                }
                Op::Sum(a) => {
                    let n = self.nodes[a.0].value.len();
                    accumulate(&mut adj, a, vec![g[0]; n]);
                }
                Op::Pick(a, i) => {
                    let mut d = vec![0.0; self.nodes[a.0].value.len()];
                    d[i] = g[0];
                    accumulate(&mut adj, a, d);
                }
                Op::LogSoftmax(a) => {
                    let gsum: f64 = g.iter().sum();
                    let d = zip_map(&g, &node.value, |gi, y| gi - y.exp() * gsum);
                    accumulate(&mut adj, a, d);
                }
            }
        }
        Ok(grads)
    }

    /// Sums a broadcast gradient back down to a length-1 operand.
    fn reduce_to(&self, target: Var, g: &[f64]) -> Vec<f64> {
        if self.nodes[target.0].value.len() == 1 && g.len() != 1 {
            vec![g.iter().sum()]
        } else {
            g.to_vec()
        }
    }
}

fn accumulate(adj: &mut [Option<Vec<f64>>], v: Var, g: Vec<f64>) {
    match &mut adj[v.0] {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(g),
    }
}

fn zip_map(g: &[f64], v: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    g.iter().zip(v).map(|(&a, &b)| f(a, b)).collect()
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

pub fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    xs.iter().map(|x| x - lse).collect()
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    log_softmax(xs).into_iter().map(f64::exp).collect()
}
