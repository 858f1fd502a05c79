//! Matrix-valued reverse-mode tape.
//!
//! A [`GradTape`] records every operation of one forward pass. Nodes are
//! appended in evaluation order, so the backward sweep simply walks the node
//! list in reverse. A fresh tape is built for every minibatch.

use super::Matrix;

/// Handle to a node on a [`GradTape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Index of a registered parameter, in registration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MatMulT(Var, Var),
    Relu(Var),
    MulConst(Var, Matrix),
    Scale(Var, f64),
    GroupedLinear { design: Var, coef: Var },
    Sum(Var),
    AbsSum(Var),
    Mse(Var, Var),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct GradTape {
    nodes: Vec<Node>,
    params: Vec<Var>,
}

/// Gradient of a scalar with respect to every registered parameter.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Matrix>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix)> {
        self.grads.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }

    pub fn into_vec(self) -> Vec<Matrix> {
        self.grads
    }
}

impl GradTape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        let needs_grad = match &op {
            Op::Leaf => false,
            Op::Add(a, b)
            | Op::AddRow(a, b)
            | Op::Mul(a, b)
            | Op::MatMulT(a, b)
            | Op::Mse(a, b)
            | Op::GroupedLinear { design: a, coef: b } => self.needs(*a) || self.needs(*b),
            Op::Relu(a) | Op::MulConst(a, _) | Op::Scale(a, _) | Op::Sum(a) | Op::AbsSum(a) => {
                self.needs(*a)
            }
        };
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        debug_assert_eq!(m.shape(), (1, 1));
        m.data()[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Differentiable input; its gradient is reported by [`GradTape::backward`].
    pub fn param(&mut self, value: Matrix) -> (ParamId, Var) {
        let v = self.push(value, Op::Leaf);
        self.nodes[v.0].needs_grad = true;
        self.params.push(v);
        (ParamId(self.params.len() - 1), v)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).add(self.value(b)).expect("tape add shape");
        self.push(value, Op::Add(a, b))
    }

    /// Adds the 1×n row `row` to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        let mut value = self.value(a).clone();
        assert_eq!(r.shape(), (1, value.cols()), "tape add_row shape");
        let r = r.data().to_vec();
        for i in 0..value.rows() {
            for (x, b) in value.row_mut(i).iter_mut().zip(&r) {
                *x += b;
            }
        }
        self.push(value, Op::AddRow(a, row))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).hadamard(self.value(b)).expect("tape mul shape");
        self.push(value, Op::Mul(a, b))
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul_t(self.value(b)).expect("tape matmul_t shape");
        self.push(value, Op::MatMulT(a, b))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(value, Op::Relu(a))
    }

    /// Elementwise product with a constant (dropout masks).
    pub fn mul_const(&mut self, a: Var, mask: Matrix) -> Var {
        let value = self.value(a).hadamard(&mask).expect("tape mul_const shape");
        self.push(value, Op::MulConst(a, mask))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).scale(c);
        self.push(value, Op::Scale(a, c))
    }

    /// Per-group linear map: `design` is B×(G·p), `coef` is G×p, output B×G with
    /// `out[b, g] = Σ_k design[b, g·p + k] · coef[g, k]`.
    pub fn grouped_linear(&mut self, design: Var, coef: Var) -> Var {
        let d = self.value(design);
        let c = self.value(coef);
        let (g, p) = c.shape();
        assert_eq!(d.cols(), g * p, "tape grouped_linear shape");
        let mut value = Matrix::zeros(d.rows(), g);
        for b in 0..d.rows() {
            let row = d.row(b);
            for s in 0..g {
                value[(b, s)] = super::matrix::dot(&row[s * p..(s + 1) * p], c.row(s));
            }
        }
        self.push(value, Op::GroupedLinear { design, coef })
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::filled(1, 1, self.value(a).sum());
        self.push(value, Op::Sum(a))
    }

    /// Σ|a|; the subgradient at zero is taken as zero.
    pub fn abs_sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().map(|x| x.abs()).sum();
        self.push(Matrix::filled(1, 1, s), Op::AbsSum(a))
    }

    /// Mean of squared differences over all elements.
    pub fn mse(&mut self, pred: Var, target: Var) -> Var {
        let p = self.value(pred);
        let t = self.value(target);
        assert_eq!(p.shape(), t.shape(), "tape mse shape");
        let n = p.len().max(1) as f64;
        let s: f64 = p
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.push(Matrix::filled(1, 1, s / n), Op::Mse(pred, target))
    }

    /// Reverse sweep from the scalar node `loss`.
    pub fn backward(&self, loss: Var) -> Gradients {
        let mut adj: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        assert_eq!(self.value(loss).shape(), (1, 1), "backward needs a scalar");
        adj[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        let needs: Vec<bool> = self.nodes.iter().map(|n| n.needs_grad).collect();
        let acc = |adj: &mut [Option<Matrix>], v: Var, g: Matrix| {
            if !needs[v.0] {
                return;
            }
            match &mut adj[v.0] {
                Some(existing) => existing.add_assign(&g).expect("adjoint shape"),
                slot @ None => *slot = Some(g),
            }
        };

        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {
                    adj[idx] = Some(g);
                }
                Op::Add(a, b) => {
                    acc(&mut adj, *a, g.clone());
                    acc(&mut adj, *b, g);
                }
                Op::AddRow(a, row) => {
                    let mut rg = Matrix::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (r, x) in rg.data_mut().iter_mut().zip(g.row(i)) {
                            *r += x;
                        }
                    }
                    acc(&mut adj, *a, g);
                    acc(&mut adj, *row, rg);
                }
                Op::Mul(a, b) => {
                    let ga = g.hadamard(self.value(*b)).unwrap();
                    let gb = g.hadamard(self.value(*a)).unwrap();
                    acc(&mut adj, *a, ga);
                    acc(&mut adj, *b, gb);
                }
                Op::MatMulT(a, b) => {
                    // out = A Bᵀ ; dA = G B ; dB = Gᵀ A
                    if needs[a.0] {
                        acc(&mut adj, *a, g.matmul(self.value(*b)).unwrap());
                    }
                    if needs[b.0] {
                        acc(&mut adj, *b, g.t_matmul(self.value(*a)).unwrap());
                    }
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let mut ga = g;
                    for (gv, xv) in ga.data_mut().iter_mut().zip(x.data()) {
                        if *xv <= 0.0 {
                            *gv = 0.0;
                        }
                    }
                    acc(&mut adj, *a, ga);
                }
                Op::MulConst(a, mask) => {
                    acc(&mut adj, *a, g.hadamard(mask).unwrap());
                }
                Op::Scale(a, c) => {
                    acc(&mut adj, *a, g.scale(*c));
                }
                Op::GroupedLinear { design, coef } => {
                    let d = self.value(*design);
                    let c = self.value(*coef);
                    let (groups, p) = c.shape();
                    let want_d = needs[design.0];
                    let mut gc = Matrix::zeros(groups, p);
                    let mut gd = Matrix::zeros(if want_d { d.rows() } else { 0 }, d.cols());
                    for b in 0..d.rows() {
                        for s in 0..groups {
                            let gbs = g[(b, s)];
                            if gbs == 0.0 {
                                continue;
                            }
                            let drow = &d.row(b)[s * p..(s + 1) * p];
                            for (k, dv) in drow.iter().enumerate() {
                                gc[(s, k)] += gbs * dv;
                                if want_d {
                                    gd[(b, s * p + k)] += gbs * c[(s, k)];
                                }
                            }
                        }
                    }
                    if want_d {
                        acc(&mut adj, *design, gd);
                    }
                    acc(&mut adj, *coef, gc);
                }
                Op::Sum(a) => {
                    let x = self.value(*a);
                    acc(&mut adj, *a, Matrix::filled(x.rows(), x.cols(), g.data()[0]));
                }
                Op::AbsSum(a) => {
                    let s = g.data()[0];
                    let ga = self.value(*a).map(|x| {
                        if x > 0.0 {
                            s
                        } else if x < 0.0 {
                            -s
                        } else {
                            0.0
                        }
                    });
                    acc(&mut adj, *a, ga);
                }
                Op::Mse(p, t) => {
                    let pv = self.value(*p);
                    let tv = self.value(*t);
                    let k = 2.0 * g.data()[0] / pv.len().max(1) as f64;
                    let gp = pv.sub(tv).unwrap().scale(k);
                    if needs[t.0] {
                        acc(&mut adj, *t, gp.scale(-1.0));
                    }
                    acc(&mut adj, *p, gp);
                }
            }
        }

        let grads = self
            .params
            .iter()
            .map(|v| {
                adj[v.0].take().unwrap_or_else(|| {
                    let m = self.value(*v);
                    Matrix::zeros(m.rows(), m.cols())
                })
            })
            .collect();
        Gradients { grads }
    }
}

/// Central finite-difference gradient of `f` at `x`, entry by entry.
pub fn finite_difference(x: &Matrix, h: f64, mut f: impl FnMut(&Matrix) -> f64) -> Matrix {
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (up - down) / (2.0 * h);
    }
    grad
}
