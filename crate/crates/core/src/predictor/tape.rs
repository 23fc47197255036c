//! A small reverse-mode tape over vector-valued nodes.

use nalgebra::{DMatrix, DVector};

pub type NodeId = usize;

/// Dense parameter blocks stored back to back in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    shapes: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl Params {
    pub fn zeros(shapes: &[(usize, usize)]) -> Self {
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut total = 0;
        for &(r, c) in shapes {
            offsets.push(total);
            total += r * c;
        }
        Self {
            shapes: shapes.to_vec(),
            offsets,
            data: vec![0.0; total],
        }
    }

    pub fn from_flat(shapes: &[(usize, usize)], data: Vec<f64>) -> Option<Self> {
        let mut p = Self::zeros(shapes);
        if p.data.len() != data.len() {
            return None;
        }
        p.data = data;
        Some(p)
    }

    pub fn shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Block `i` as a column-major matrix.
    pub fn block(&self, i: usize) -> DMatrix<f64> {
        let (r, c) = self.shapes[i];
        DMatrix::from_column_slice(r, c, &self.data[self.offsets[i]..self.offsets[i] + r * c])
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let (r, c) = self.shapes[i];
        &mut self.data[self.offsets[i]..self.offsets[i] + r * c]
    }

    fn range(&self, i: usize) -> std::ops::Range<usize> {
        let (r, c) = self.shapes[i];
        self.offsets[i]..self.offsets[i] + r * c
    }
}

#[derive(Debug, Clone)]
pub enum Op {
    Leaf,
    Concat(Vec<NodeId>),
    /// `W·x` with `W` a parameter block.
    MatVec { param: usize, x: NodeId },
    /// `x + b` with `b` a parameter block (column).
    Bias { param: usize, x: NodeId },
    Add(NodeId, NodeId),
    Tanh(NodeId),
    Clip {
        x: NodeId,
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
}

/// Recorded computation: every node keeps its op and forward value.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<DVector<f64>>,
}

fn eval(op: &Op, values: &[DVector<f64>], params: &Params) -> DVector<f64> {
    match op {
        Op::Leaf => unreachable!("leaves carry their own value"),
        Op::Concat(parts) => {
            let len = parts.iter().map(|&p| values[p].len()).sum();
            DVector::from_iterator(len, parts.iter().flat_map(|&p| values[p].iter().copied()))
        }
        Op::MatVec { param, x } => params.block(*param) * &values[*x],
        Op::Bias { param, x } => &values[*x] + params.block(*param).column(0),
        Op::Add(a, b) => &values[*a] + &values[*b],
        Op::Tanh(x) => values[*x].map(f64::tanh),
        Op::Clip { x, lower, upper } => {
            let v = &values[*x];
            DVector::from_fn(v.len(), |i, _| v[i].max(lower[i]).min(upper[i]))
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &DVector<f64> {
        &self.values[id]
    }

    fn push(&mut self, op: Op, params: &Params) -> NodeId {
        let v = eval(&op, &self.values, params);
        self.ops.push(op);
        self.values.push(v);
        self.ops.len() - 1
    }

    pub fn leaf(&mut self, v: DVector<f64>) -> NodeId {
        self.ops.push(Op::Leaf);
        self.values.push(v);
        self.ops.len() - 1
    }

    pub fn concat(&mut self, parts: Vec<NodeId>, params: &Params) -> NodeId {
        self.push(Op::Concat(parts), params)
    }

    pub fn matvec(&mut self, param: usize, x: NodeId, params: &Params) -> NodeId {
        self.push(Op::MatVec { param, x }, params)
    }

    pub fn bias(&mut self, param: usize, x: NodeId, params: &Params) -> NodeId {
        self.push(Op::Bias { param, x }, params)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId, params: &Params) -> NodeId {
        self.push(Op::Add(a, b), params)
    }

    pub fn tanh(&mut self, x: NodeId, params: &Params) -> NodeId {
        self.push(Op::Tanh(x), params)
    }

    pub fn clip(&mut self, x: NodeId, lower: DVector<f64>, upper: DVector<f64>, params: &Params) -> NodeId {
        self.push(Op::Clip { x, lower, upper }, params)
    }

    /// Re-runs every non-leaf op against `params`.
    pub fn replay(&self, params: &Params) -> Vec<DVector<f64>> {
        let mut values: Vec<DVector<f64>> = Vec::with_capacity(self.values.len());
        for (op, recorded) in self.ops.iter().zip(&self.values) {
            let v = match op {
                Op::Leaf => recorded.clone(),
                _ => eval(op, &values, params),
            };
            values.push(v);
        }
        values
    }

    /// Gradient of `Σ seedᵀ·node` with respect to the flat parameters.
    pub fn backward(&self, params: &Params, seeds: &[(NodeId, DVector<f64>)]) -> Vec<f64> {
        let mut adj: Vec<Option<DVector<f64>>> = vec![None; self.ops.len()];
        let accumulate = |adj: &mut Vec<Option<DVector<f64>>>, id: NodeId, g: DVector<f64>| {
            match &mut adj[id] {
                Some(a) => *a += g,
                slot => *slot = Some(g),
            }
        };
        for (id, g) in seeds {
            accumulate(&mut adj, *id, g.clone());
        }
        let mut grad = vec![0.0; params.len()];
        for id in (0..self.ops.len()).rev() {
            let Some(g) = adj[id].take() else { continue };
            match &self.ops[id] {
                Op::Leaf => {}
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let len = self.values[p].len();
                        accumulate(&mut adj, p, g.rows(off, len).into_owned());
                        off += len;
                    }
                }
                Op::MatVec { param, x } => {
                    let w = params.block(*param);
                    let xv = &self.values[*x];
                    let (r, c) = params.shapes()[*param];
                    let range = params.range(*param);
                    let gw = &mut grad[range];
                    for j in 0..c {
                        for i in 0..r {
                            gw[j * r + i] += g[i] * xv[j];
                        }
                    }
                    accumulate(&mut adj, *x, w.transpose() * &g);
                }
                Op::Bias { param, x } => {
                    let range = params.range(*param);
                    for (dst, v) in grad[range].iter_mut().zip(g.iter()) {
                        *dst += v;
                    }
                    accumulate(&mut adj, *x, g);
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj, *a, g.clone());
                    accumulate(&mut adj, *b, g);
                }
                Op::Tanh(x) => {
                    let y = &self.values[id];
                    accumulate(&mut adj, *x, g.zip_map(y, |gi, yi| gi * (1.0 - yi * yi)));
                }
                Op::Clip { x, lower, upper } => {
                    let v = &self.values[*x];
                    let masked = DVector::from_fn(g.len(), |i, _| {
                        if v[i] >= lower[i] && v[i] <= upper[i] {
                            g[i]
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut adj, *x, masked);
                }
            }
        }
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (Params, Tape, NodeId) {
        let mut p = Params::zeros(&[(2, 3), (2, 1)]);
        for (i, v) in p.flat_mut().iter_mut().enumerate() {
            *v = 0.1 * (i as f64) - 0.3;
        }
        let mut t = Tape::new();
        let a = t.leaf(DVector::from_vec(vec![0.5, -1.0]));
        let b = t.leaf(DVector::from_vec(vec![2.0]));
        let x = t.concat(vec![a, b], &p);
        let h = t.matvec(0, x, &p);
        let h = t.bias(1, h, &p);
        let h = t.tanh(h, &p);
        let s = t.add(h, a, &p);
        let out = t.clip(s, DVector::from_vec(vec![-1.0, -1.0]), DVector::from_vec(vec![1.0, 0.0]), &p);
        (p, t, out)
    }

    #[test]
    fn replay_is_bitwise() {
        let (p, t, _) = small();
        let again = t.replay(&p);
        for (i, v) in again.iter().enumerate() {
            assert_eq!(v, t.value(i));
        }
    }

    #[test]
    fn backward_matches_differences() {
        let (p, t, out) = small();
        let seed = DVector::from_vec(vec![1.0, -2.0]);
        let g = t.backward(&p, &[(out, seed.clone())]);
        let h = 1e-6;
        for k in 0..p.len() {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.flat_mut()[k] += h;
            pm.flat_mut()[k] -= h;
            let fp = seed.dot(&t.replay(&pp)[out]);
            let fm = seed.dot(&t.replay(&pm)[out]);
            assert!(((fp - fm) / (2.0 * h) - g[k]).abs() < 1e-8, "param {k}");
        }
    }
}
