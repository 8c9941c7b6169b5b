use super::params::{ParamId, ParameterStore};
use super::Tensor;
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Handle to a node on a [`Graph`] tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

type CustomBackward = Box<dyn Fn(&[&Tensor], &Tensor, &[f64]) -> Vec<Vec<f64>>>;

enum Op {
    Leaf,
    Param,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Relu(Var),
    Sigmoid(Var),
    Exp(Var),
    Softmax(Var, f64),
    LogSoftmax(Var),
    Sum(Var),
    Mean(Var),
    Concat(Vec<Var>),
    Stack(Vec<Var>),
    Slice(Var, usize),
    Pick(Var, usize),
    Custom(Vec<Var>, CustomBackward),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param => "param",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Exp(_) => "exp",
            Op::Softmax(..) => "softmax",
            Op::LogSoftmax(_) => "log_softmax",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::Concat(_) => "concat",
            Op::Stack(_) => "stack",
            Op::Slice(..) => "slice",
            Op::Pick(..) => "pick",
            Op::Custom(..) => "custom",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Append-only tape of tensor operations.
///
/// Every node's parents precede it, so iterating indices in reverse is a
/// valid reverse-topological order for [`Graph::backward`].
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    param_vars: Vec<Option<Var>>,
    params: Vec<(ParamId, Var)>,
}

pub struct CategoricalSample {
    pub index: usize,
    pub log_prob: Var,
    pub log_probs: Var,
}

fn is_scalar_shape(t: &Tensor) -> bool {
    t.numel() == 1
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

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.name()
    }

    /// Gradient of the last `backward` call w.r.t. `v`, if it was reached.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Leaf that does not take part in differentiation.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Leaf that collects a gradient.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Leaf mirroring a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParameterStore, id: ParamId) -> Var {
        if let Some(Some(v)) = self.param_vars.get(id.index()) {
            return *v;
        }
        let var = self.push(store.value(id).clone(), Op::Param, true);
        if self.param_vars.len() <= id.index() {
            self.param_vars.resize(id.index() + 1, None);
        }
        self.param_vars[id.index()] = Some(var);
        self.params.push((id, var));
        var
    }

    /// Parameter leaves registered on this tape, in registration order.
    pub fn param_vars(&self) -> &[(ParamId, Var)] {
        &self.params
    }

    pub fn detach(&mut self, v: Var) -> Var {
        let t = self.value(v).clone();
        self.constant(t)
    }

    /// Standard matrix product. A 1-D left operand is treated as a single row
    /// and the result is 1-D.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (r, k, a_vec) = match ta.shape() {
            [k] => (1, *k, true),
            [r, k] => (*r, *k, false),
            _ => {
                return Err(Error::Dimension {
                    op: "matmul",
                    lhs: ta.shape().to_vec(),
                    rhs: tb.shape().to_vec(),
                })
            }
        };
        let c = match tb.shape() {
            [k2, c] if *k2 == k => *c,
            _ => {
                return Err(Error::Dimension {
                    op: "matmul",
                    lhs: ta.shape().to_vec(),
                    rhs: tb.shape().to_vec(),
                })
            }
        };
        let (ad, bd) = (ta.data(), tb.data());
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &mut out[i * c..(i + 1) * c];
            for p in 0..k {
                let av = ad[i * k + p];
                if av == 0.0 {
                    continue;
                }
                let brow = &bd[p * c..(p + 1) * c];
                for (o, bv) in row.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        let shape = if a_vec { vec![c] } else { vec![r, c] };
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(shape, out)?, Op::MatMul(a, b), rg))
    }

    fn binary_shape(&self, op: &'static str, a: Var, b: Var) -> Result<Vec<usize>> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() == tb.shape() {
            Ok(ta.shape().to_vec())
        } else if is_scalar_shape(tb) {
            Ok(ta.shape().to_vec())
        } else if is_scalar_shape(ta) {
            Ok(tb.shape().to_vec())
        } else {
            Err(Error::Dimension {
                op,
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            })
        }
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let shape = self.binary_shape(name, a, b)?;
        let (ta, tb) = (self.value(a), self.value(b));
        let n: usize = shape.iter().product();
        let (da, db) = (ta.data(), tb.data());
        let out: Vec<f64> = (0..n)
            .map(|i| {
                let x = if da.len() == 1 { da[0] } else { da[i] };
                let y = if db.len() == 1 { db[0] } else { db[i] };
                f(x, y)
            })
            .collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(shape, out)?, op, rg))
    }

    /// Elementwise sum. Shapes must match, or one side must be a scalar.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let t = self.value(a);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v * c).collect())
            .expect("shape preserved");
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, c), rg)
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(a);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|&v| f(v)).collect())
            .expect("shape preserved");
        let rg = self.rg(a);
        self.push(out, op, rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |v| v.max(0.0), Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    fn check_finite(&self, op: &str, a: Var) -> Result<()> {
        if self.value(a).all_finite() {
            Ok(())
        } else {
            Err(Error::Numeric(format!(
                "{op}: non-finite input {:?}",
                self.value(a).data()
            )))
        }
    }

    /// `softmax(x / temperature)` over a 1-D tensor, max-subtracted.
    pub fn softmax(&mut self, a: Var, temperature: f64) -> Result<Var> {
        if !(temperature > 0.0) {
            return Err(Error::contract(format!(
                "softmax temperature must be positive, got {temperature}"
            )));
        }
        self.check_finite("softmax", a)?;
        let t = self.value(a);
        if t.shape().len() != 1 || t.numel() == 0 {
            return Err(Error::Dimension {
                op: "softmax",
                lhs: t.shape().to_vec(),
                rhs: vec![],
            });
        }
        let out = softmax_values(t.data(), temperature);
        let rg = self.rg(a);
        Ok(self.push(Tensor::vector(out), Op::Softmax(a, temperature), rg))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        self.check_finite("log_softmax", a)?;
        let t = self.value(a);
        if t.shape().len() != 1 || t.numel() == 0 {
            return Err(Error::Dimension {
                op: "log_softmax",
                lhs: t.shape().to_vec(),
                rhs: vec![],
            });
        }
        let d = t.data();
        let m = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + d.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let out = d.iter().map(|v| v - lse).collect();
        let rg = self.rg(a);
        Ok(self.push(Tensor::vector(out), Op::LogSoftmax(a), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let s = t.sum() / t.numel().max(1) as f64;
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Mean(a), rg)
    }

    /// Concatenate 1-D tensors. Scalars count as length-1 vectors.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let mut out = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if t.shape().len() > 1 {
                return Err(Error::Dimension {
                    op: "concat",
                    lhs: t.shape().to_vec(),
                    rhs: vec![],
                });
            }
            out.extend_from_slice(t.data());
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Tensor::vector(out), Op::Concat(parts.to_vec()), rg))
    }

    /// Stack equal-length 1-D tensors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows
            .first()
            .ok_or_else(|| Error::contract("stack of zero rows"))?;
        let width = self.value(*first).numel();
        let mut out = Vec::with_capacity(width * rows.len());
        for &r in rows {
            let t = self.value(r);
            if t.shape() != [width] {
                return Err(Error::Dimension {
                    op: "stack",
                    lhs: vec![width],
                    rhs: t.shape().to_vec(),
                });
            }
            out.extend_from_slice(t.data());
        }
        let rg = rows.iter().any(|&r| self.rg(r));
        Ok(self.push(
            Tensor::matrix(rows.len(), width, out)?,
            Op::Stack(rows.to_vec()),
            rg,
        ))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.value(a);
        if t.shape().len() != 1 || start + len > t.numel() {
            return Err(Error::Dimension {
                op: "slice",
                lhs: t.shape().to_vec(),
                rhs: vec![start, len],
            });
        }
        let out = t.data()[start..start + len].to_vec();
        let rg = self.rg(a);
        Ok(self.push(Tensor::vector(out), Op::Slice(a, start), rg))
    }

    pub fn pick(&mut self, a: Var, index: usize) -> Result<Var> {
        let t = self.value(a);
        if index >= t.numel() {
            return Err(Error::Dimension {
                op: "pick",
                lhs: t.shape().to_vec(),
                rhs: vec![index],
            });
        }
        let v = t.data()[index];
        let rg = self.rg(a);
        Ok(self.push(Tensor::scalar(v), Op::Pick(a, index), rg))
    }

    /// Inner product of two 1-D tensors.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::Dimension {
                op: "dot",
                lhs: self.value(a).shape().to_vec(),
                rhs: self.value(b).shape().to_vec(),
            });
        }
        let p = self.mul(a, b)?;
        Ok(self.sum(p))
    }

    /// `x · W + b` for a 1-D `x`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add(xw, b)
    }

    /// Adds `N(0, sigma²)` noise elementwise. The noise is a constant on the
    /// tape, so the gradient passes straight through.
    pub fn gaussian_noise<R: Rng + ?Sized>(&mut self, x: Var, sigma: f64, rng: &mut R) -> Var {
        if sigma == 0.0 || self.value(x).numel() == 0 {
            return x;
        }
        let t = self.value(x);
        let noise: Vec<f64> = (0..t.numel())
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let noise = Tensor::new(t.shape().to_vec(), noise).expect("same shape");
        let n = self.constant(noise);
        self.add(x, n).expect("same shape")
    }

    /// Draws an index from `softmax(logits)`. The returned log-probability
    /// stays on the tape.
    pub fn categorical_sample<R: Rng + ?Sized>(
        &mut self,
        logits: Var,
        rng: &mut R,
    ) -> Result<CategoricalSample> {
        let log_probs = self.log_softmax(logits)?;
        let u: f64 = rng.random();
        let index = sample_index(self.value(log_probs).data(), u);
        let log_prob = self.pick(log_probs, index)?;
        Ok(CategoricalSample {
            index,
            log_prob,
            log_probs,
        })
    }

    /// Registers an operation with a caller-supplied backward rule.
    pub fn custom(
        &mut self,
        inputs: &[Var],
        value: Tensor,
        backward: impl Fn(&[&Tensor], &Tensor, &[f64]) -> Vec<Vec<f64>> + 'static,
    ) -> Var {
        let rg = inputs.iter().any(|&v| self.rg(v));
        self.push(value, Op::Custom(inputs.to_vec(), Box::new(backward)), rg)
    }

    /// Reverse-mode accumulation from a scalar `loss`.
    ///
    /// Afterwards [`Graph::grad`] answers for every node that `loss` depends
    /// on. Parameters that `loss` does not reach keep no gradient here and
    /// contribute zero when folded into a store.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let lt = self.value(loss);
        if lt.numel() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lt.shape()
            )));
        }
        self.grads = vec![None; self.nodes.len()];
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            if self.nodes[i].requires_grad {
                self.propagate(i, &g);
            }
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn acc(&mut self, v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let n = self.nodes[v.0].value.numel();
        let slot = self.grads[v.0].get_or_insert_with(|| vec![0.0; n]);
        f(slot);
    }

    fn acc_broadcast(&mut self, v: Var, g: &[f64], sign: f64) {
        let scalar = self.nodes[v.0].value.numel() == 1 && g.len() != 1;
        self.acc(v, |s| {
            if scalar {
                s[0] += sign * g.iter().sum::<f64>();
            } else {
                for (a, b) in s.iter_mut().zip(g) {
                    *a += sign * b;
                }
            }
        });
    }

    fn propagate(&mut self, i: usize, g: &[f64]) {
        let out = &self.nodes[i].value;
        match &self.nodes[i].op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (a, b) = (*a, *b);
                let ta = &self.nodes[a.0].value;
                let tb = &self.nodes[b.0].value;
                let (k, c) = (tb.shape()[0], tb.shape()[1]);
                let r = ta.numel() / k;
                let mut da = vec![0.0; r * k];
                let mut db = vec![0.0; k * c];
                let (ad, bd) = (ta.data(), tb.data());
                for row in 0..r {
                    let grow = &g[row * c..(row + 1) * c];
                    for p in 0..k {
                        let brow = &bd[p * c..(p + 1) * c];
                        da[row * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                        let av = ad[row * k + p];
                        if av != 0.0 {
                            for (d, gv) in db[p * c..(p + 1) * c].iter_mut().zip(grow) {
                                *d += av * gv;
                            }
                        }
                    }
                }
                self.acc(a, |s| s.iter_mut().zip(&da).for_each(|(x, y)| *x += y));
                self.acc(b, |s| s.iter_mut().zip(&db).for_each(|(x, y)| *x += y));
            }
            Op::Add(a, b) => {
                let (a, b) = (*a, *b);
                self.acc_broadcast(a, g, 1.0);
                self.acc_broadcast(b, g, 1.0);
            }
            Op::Sub(a, b) => {
                let (a, b) = (*a, *b);
                self.acc_broadcast(a, g, 1.0);
                self.acc_broadcast(b, g, -1.0);
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                let da = self.nodes[a.0].value.data();
                let db = self.nodes[b.0].value.data();
                let n = g.len();
                let ga: Vec<f64> = (0..n)
                    .map(|j| g[j] * if db.len() == 1 { db[0] } else { db[j] })
                    .collect();
                let gb: Vec<f64> = (0..n)
                    .map(|j| g[j] * if da.len() == 1 { da[0] } else { da[j] })
                    .collect();
                self.acc_broadcast(a, &ga, 1.0);
                self.acc_broadcast(b, &gb, 1.0);
            }
            Op::Scale(a, c) => {
                let (a, c) = (*a, *c);
                self.acc(a, |s| s.iter_mut().zip(g).for_each(|(x, y)| *x += c * y));
            }
            Op::Tanh(a) => {
                let a = *a;
                let d: Vec<f64> = out
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(y, gv)| gv * (1.0 - y * y))
                    .collect();
                self.acc(a, |s| s.iter_mut().zip(&d).for_each(|(x, y)| *x += y));
            }
            Op::Relu(a) => {
                let a = *a;
                let d: Vec<f64> = self.nodes[a.0]
                    .value
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(x, gv)| if *x > 0.0 { *gv } else { 0.0 })
                    .collect();
                self.acc(a, |s| s.iter_mut().zip(&d).for_each(|(x, y)| *x += y));
            }
            Op::Sigmoid(a) => {
                let a = *a;
                let d: Vec<f64> = out
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(y, gv)| gv * y * (1.0 - y))
                    .collect();
                self.acc(a, |s| s.iter_mut().zip(&d).for_each(|(x, y)| *x += y));
            }
            Op::Exp(a) => {
                let a = *a;
                let d: Vec<f64> = out.data().iter().zip(g).map(|(y, gv)| gv * y).collect();
                self.acc(a, |s| s.iter_mut().zip(&d).for_each(|(x, y)| *x += y));
            }
            Op::Softmax(a, temp) => {
                let (a, temp) = (*a, *temp);
                let y = out.data();
                let gy: f64 = y.iter().zip(g).map(|(p, q)| p * q).sum();
                let d: Vec<f64> = y
                    .iter()
                    .zip(g)
                    .map(|(p, gv)| p * (gv - gy) / temp)
                    .collect();
                self.acc(a, |s| s.iter_mut().zip(&d).for_each(|(x, y)| *x += y));
            }
            Op::LogSoftmax(a) => {
                let a = *a;
                let gs: f64 = g.iter().sum();
                let d: Vec<f64> = out
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(lp, gv)| gv - lp.exp() * gs)
                    .collect();
                self.acc(a, |s| s.iter_mut().zip(&d).for_each(|(x, y)| *x += y));
            }
            Op::Sum(a) => {
                let (a, gv) = (*a, g[0]);
                self.acc(a, |s| s.iter_mut().for_each(|x| *x += gv));
            }
            Op::Mean(a) => {
                let a = *a;
                let n = self.nodes[a.0].value.numel().max(1) as f64;
                let gv = g[0] / n;
                self.acc(a, |s| s.iter_mut().for_each(|x| *x += gv));
            }
            Op::Concat(parts) => {
                let parts = parts.clone();
                let mut off = 0;
                for p in parts {
                    let n = self.nodes[p.0].value.numel();
                    let seg = &g[off..off + n];
                    self.acc(p, |s| s.iter_mut().zip(seg).for_each(|(x, y)| *x += y));
                    off += n;
                }
            }
            Op::Stack(rows) => {
                let rows = rows.clone();
                let w = out.shape()[1];
                for (r, p) in rows.into_iter().enumerate() {
                    let seg = &g[r * w..(r + 1) * w];
                    self.acc(p, |s| s.iter_mut().zip(seg).for_each(|(x, y)| *x += y));
                }
            }
            Op::Slice(a, start) => {
                let (a, start) = (*a, *start);
                self.acc(a, |s| {
                    s[start..start + g.len()]
                        .iter_mut()
                        .zip(g)
                        .for_each(|(x, y)| *x += y)
                });
            }
            Op::Pick(a, idx) => {
                let (a, idx, gv) = (*a, *idx, g[0]);
                self.acc(a, |s| s[idx] += gv);
            }
            Op::Custom(inputs, backward) => {
                let ins: Vec<&Tensor> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
                let parts = backward(&ins, out, g);
                let inputs = inputs.clone();
                for (v, d) in inputs.into_iter().zip(parts) {
                    self.acc(v, |s| s.iter_mut().zip(&d).for_each(|(x, y)| *x += y));
                }
            }
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_values(x: &[f64], temperature: f64) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| ((v - m) / temperature).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Inverse-CDF draw from log-probabilities given a uniform `u` in `[0, 1)`.
pub(crate) fn sample_index(log_probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, lp) in log_probs.iter().enumerate() {
        cum += lp.exp();
        if u < cum {
            return i;
        }
    }
    log_probs.len() - 1
}
