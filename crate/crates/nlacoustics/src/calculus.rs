//! Expression trees over space–evolution fields and two ways to evaluate them:
//! on a stack of uniformly spaced evolution levels (derivatives along the
//! evolution variable by nested central differences) or on a jet (evolution
//! derivatives supplied exactly). Periodic-axis derivatives are spectral in
//! both cases.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::grid::{Field, Frame, Grid};
use crate::spectral::Spectral;

#[derive(Debug)]
enum Node {
    Base(usize),
    Const(f64),
    Sum(Vec<(f64, Expr)>),
    Prod(Vec<Expr>),
    Evol(Expr),
    Axis(Expr, usize, u32),
    Anti(Expr, usize),
}

/// A shared, immutable expression.
#[derive(Debug, Clone)]
pub struct Expr(Rc<Node>);

impl Expr {
    /// The `i`-th base field supplied by the evaluation context.
    pub fn base(i: usize) -> Expr {
        Expr(Rc::new(Node::Base(i)))
    }

    pub fn constant(v: f64) -> Expr {
        Expr(Rc::new(Node::Const(v)))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    /// `Σ wᵢ eᵢ`, dropping zero weights and folding constants.
    pub fn lin(terms: Vec<(f64, Expr)>) -> Expr {
        let mut out: Vec<(f64, Expr)> = Vec::new();
        let mut k = 0.0;
        for (w, e) in terms {
            if w == 0.0 {
                continue;
            }
            if let Some(v) = e.as_const() {
                k += w * v;
                continue;
            }
            if let Node::Sum(inner) = &*e.0 {
                out.extend(inner.iter().map(|(wi, ei)| (w * wi, ei.clone())));
            } else {
                out.push((w, e));
            }
        }
        if k != 0.0 {
            if out.is_empty() {
                return Expr::constant(k);
            }
            out.push((k, Expr::constant(1.0)));
        }
        match out.len() {
            0 => Expr::zero(),
            1 if out[0].0 == 1.0 => out.pop().expect("one term").1,
            _ => Expr(Rc::new(Node::Sum(out))),
        }
    }

    /// `w·self`.
    pub fn scale(&self, w: f64) -> Expr {
        Expr::lin(vec![(w, self.clone())])
    }

    /// Product of factors (zero if any factor is the zero constant).
    pub fn prod(factors: Vec<Expr>) -> Expr {
        let mut k = 1.0;
        let mut out = Vec::new();
        for f in factors {
            match f.as_const() {
                Some(v) => k *= v,
                None => out.push(f),
            }
        }
        if k == 0.0 {
            return Expr::zero();
        }
        let p = match out.len() {
            0 => return Expr::constant(k),
            1 => out.pop().expect("one factor"),
            _ => Expr(Rc::new(Node::Prod(out))),
        };
        if k == 1.0 {
            p
        } else {
            p.scale(k)
        }
    }

    pub fn sq(&self) -> Expr {
        Expr::prod(vec![self.clone(), self.clone()])
    }

    /// Derivative along the evolution variable.
    pub fn ev(&self) -> Expr {
        if self.as_const().is_some() {
            return Expr::zero();
        }
        Expr(Rc::new(Node::Evol(self.clone())))
    }

    /// `order`-th spectral derivative along grid axis `axis`.
    pub fn d(&self, axis: usize, order: u32) -> Expr {
        if order == 0 {
            return self.clone();
        }
        if self.as_const().is_some() {
            return Expr::zero();
        }
        Expr(Rc::new(Node::Axis(self.clone(), axis, order)))
    }

    /// Mean-zero antiderivative along grid axis `axis`.
    pub fn anti(&self, axis: usize) -> Expr {
        Expr(Rc::new(Node::Anti(self.clone(), axis)))
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::lin(vec![(1.0, self), (1.0, rhs)])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::lin(vec![(1.0, self), (-1.0, rhs)])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-1.0)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::prod(vec![self, rhs])
    }
}

impl Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        rhs.scale(self)
    }
}

/// `Σ exprs`.
pub fn sum(exprs: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::lin(exprs.into_iter().map(|e| (1.0, e)).collect())
}

/// Operations an evaluation context must provide.
pub trait Calculus {
    type Value: Clone;
    fn base(&self, i: usize) -> Result<Self::Value>;
    fn constant(&self, v: f64) -> Self::Value;
    fn lin(&self, terms: &[(f64, &Self::Value)]) -> Result<Self::Value>;
    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn evol(&self, a: &Self::Value) -> Result<Self::Value>;
    fn axis(&self, a: &Self::Value, axis: usize, order: u32) -> Result<Self::Value>;
    fn anti(&self, a: &Self::Value, axis: usize) -> Result<Self::Value>;
}

/// Evaluates `expr`, sharing the value of every repeated sub-expression.
pub fn evaluate<C: Calculus>(ctx: &C, expr: &Expr) -> Result<C::Value> {
    let mut memo = HashMap::new();
    eval_memo(ctx, expr, &mut memo)
}

/// Evaluates several expressions with a shared memo table.
pub fn evaluate_all<C: Calculus>(ctx: &C, exprs: &[Expr]) -> Result<Vec<C::Value>> {
    let mut memo = HashMap::new();
    exprs.iter().map(|e| eval_memo(ctx, e, &mut memo)).collect()
}

fn eval_memo<C: Calculus>(ctx: &C, expr: &Expr, memo: &mut HashMap<*const Node, C::Value>) -> Result<C::Value> {
    let key = Rc::as_ptr(&expr.0);
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    let v = match &*expr.0 {
        Node::Base(i) => ctx.base(*i)?,
        Node::Const(v) => ctx.constant(*v),
        Node::Sum(terms) => {
            let vals: Vec<C::Value> = terms.iter().map(|(_, e)| eval_memo(ctx, e, memo)).collect::<Result<_>>()?;
            let pairs: Vec<(f64, &C::Value)> = terms.iter().map(|(w, _)| *w).zip(vals.iter()).collect();
            ctx.lin(&pairs)?
        }
        Node::Prod(fs) => {
            let mut acc = eval_memo(ctx, &fs[0], memo)?;
            for f in &fs[1..] {
                let v = eval_memo(ctx, f, memo)?;
                acc = ctx.mul(&acc, &v)?;
            }
            acc
        }
        Node::Evol(e) => {
            let v = eval_memo(ctx, e, memo)?;
            ctx.evol(&v)?
        }
        Node::Axis(e, a, k) => {
            let v = eval_memo(ctx, e, memo)?;
            ctx.axis(&v, *a, *k)?
        }
        Node::Anti(e, a) => {
            let v = eval_memo(ctx, e, memo)?;
            ctx.anti(&v, *a)?
        }
    };
    memo.insert(key, v.clone());
    Ok(v)
}

fn lin_fields(terms: &[(f64, &[f64])], len: usize, k: f64) -> Vec<f64> {
    let mut out = vec![k; len];
    for (w, f) in terms {
        for (o, v) in out.iter_mut().zip(f.iter()) {
            *o += w * v;
        }
    }
    out
}

fn mul_fields(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// A value on a stack of evolution levels: either a constant or fields on the
/// contiguous level range `start .. start + levels.len()`.
#[derive(Debug, Clone)]
pub enum LevelValue {
    Const(f64),
    Levels { start: usize, data: Rc<Vec<Vec<f64>>> },
}

/// Fields sampled at `2m + 1` evolution levels `s_c + (j − m)h`.
pub struct LevelStack {
    sp: Spectral,
    spacing: f64,
    bases: Vec<Rc<Vec<Vec<f64>>>>,
    levels: usize,
}

impl LevelStack {
    /// `bases[i][j]` is base field `i` at level `j`; all levels share `grid`.
    pub fn new(grid: &Grid, spacing: f64, bases: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let levels = bases.first().map(|b| b.len()).unwrap_or(0);
        if levels.is_multiple_of(2)
            || bases.iter().any(|b| b.len() != levels || b.iter().any(|f| f.len() != grid.len()))
        {
            return Err(Error::InvalidInput("level stacks need an odd, common number of full-grid levels".into()));
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidInput("level spacing must be positive".into()));
        }
        Ok(LevelStack { sp: Spectral::new(grid), spacing, bases: bases.into_iter().map(Rc::new).collect(), levels })
    }

    pub fn center(&self) -> usize {
        self.levels / 2
    }

    /// The value at the central level.
    pub fn at_center(&self, v: &LevelValue) -> Result<Vec<f64>> {
        match v {
            LevelValue::Const(k) => Ok(vec![*k; self.sp.len()]),
            LevelValue::Levels { start, data } => {
                let c = self.center();
                if c < *start || c >= start + data.len() {
                    return Err(Error::MissingInput("too few evolution levels for the requested derivatives".into()));
                }
                Ok(data[c - start].clone())
            }
        }
    }
}

impl Calculus for LevelStack {
    type Value = LevelValue;

    fn base(&self, i: usize) -> Result<LevelValue> {
        let data = self.bases.get(i).ok_or_else(|| Error::MissingInput(format!("base field #{i}")))?;
        Ok(LevelValue::Levels { start: 0, data: Rc::clone(data) })
    }

    fn constant(&self, v: f64) -> LevelValue {
        LevelValue::Const(v)
    }

    fn lin(&self, terms: &[(f64, &LevelValue)]) -> Result<LevelValue> {
        let mut k = 0.0;
        let mut lo = 0;
        let mut hi = usize::MAX;
        let mut any = false;
        for (w, v) in terms {
            match v {
                LevelValue::Const(c) => k += w * c,
                LevelValue::Levels { start, data } => {
                    any = true;
                    lo = lo.max(*start);
                    hi = hi.min(start + data.len());
                }
            }
        }
        if !any {
            return Ok(LevelValue::Const(k));
        }
        if lo >= hi {
            return Err(Error::MissingInput("too few evolution levels for the requested derivatives".into()));
        }
        let data = (lo..hi)
            .map(|j| {
                let fs: Vec<(f64, &[f64])> = terms
                    .iter()
                    .filter_map(|(w, v)| match v {
                        LevelValue::Levels { start, data } => Some((*w, data[j - start].as_slice())),
                        LevelValue::Const(_) => None,
                    })
                    .collect();
                lin_fields(&fs, self.sp.len(), k)
            })
            .collect();
        Ok(LevelValue::Levels { start: lo, data: Rc::new(data) })
    }

    fn mul(&self, a: &LevelValue, b: &LevelValue) -> Result<LevelValue> {
        match (a, b) {
            (LevelValue::Const(x), LevelValue::Const(y)) => Ok(LevelValue::Const(x * y)),
            (LevelValue::Const(x), v) | (v, LevelValue::Const(x)) => self.lin(&[(*x, v)]),
            (LevelValue::Levels { start: sa, data: da }, LevelValue::Levels { start: sb, data: db }) => {
                let lo = (*sa).max(*sb);
                let hi = (sa + da.len()).min(sb + db.len());
                if lo >= hi {
                    return Err(Error::MissingInput("too few evolution levels for the requested derivatives".into()));
                }
                let data = (lo..hi).map(|j| mul_fields(&da[j - sa], &db[j - sb])).collect();
                Ok(LevelValue::Levels { start: lo, data: Rc::new(data) })
            }
        }
    }

    fn evol(&self, a: &LevelValue) -> Result<LevelValue> {
        match a {
            LevelValue::Const(_) => Ok(LevelValue::Const(0.0)),
            LevelValue::Levels { start, data } => {
                if data.len() < 3 {
                    return Err(Error::MissingInput("too few evolution levels for the requested derivatives".into()));
                }
                let inv = 0.5 / self.spacing;
                let out = (1..data.len() - 1)
                    .map(|j| data[j + 1].iter().zip(&data[j - 1]).map(|(p, m)| (p - m) * inv).collect())
                    .collect();
                Ok(LevelValue::Levels { start: start + 1, data: Rc::new(out) })
            }
        }
    }

    fn axis(&self, a: &LevelValue, axis: usize, order: u32) -> Result<LevelValue> {
        match a {
            LevelValue::Const(_) => Ok(LevelValue::Const(0.0)),
            LevelValue::Levels { start, data } => {
                let out = data.iter().map(|f| self.sp.derivative(f, axis, order)).collect::<Result<_>>()?;
                Ok(LevelValue::Levels { start: *start, data: Rc::new(out) })
            }
        }
    }

    fn anti(&self, a: &LevelValue, axis: usize) -> Result<LevelValue> {
        match a {
            LevelValue::Const(k) if *k == 0.0 => Ok(LevelValue::Const(0.0)),
            LevelValue::Const(_) => Err(Error::InvalidInput("antiderivative of a nonzero constant".into())),
            LevelValue::Levels { start, data } => {
                let out = data.iter().map(|f| self.sp.antiderivative(f, axis)).collect::<Result<_>>()?;
                Ok(LevelValue::Levels { start: *start, data: Rc::new(out) })
            }
        }
    }
}

/// A value on a jet: a constant or the field and its first `k` evolution
/// derivatives.
#[derive(Debug, Clone)]
pub enum JetValue {
    Const(f64),
    Jet(Rc<Vec<Vec<f64>>>),
}

/// Fields with exactly known evolution derivatives at one evolution value.
pub struct JetContext {
    sp: Spectral,
    bases: Vec<Rc<Vec<Vec<f64>>>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl JetContext {
    /// `bases[i][k]` is the `k`-th evolution derivative of base field `i`.
    pub fn new(grid: &Grid, bases: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if bases.iter().any(|b| b.is_empty() || b.iter().any(|f| f.len() != grid.len())) {
            return Err(Error::InvalidInput("jets need at least the field itself on the full grid".into()));
        }
        Ok(JetContext { sp: Spectral::new(grid), bases: bases.into_iter().map(Rc::new).collect() })
    }

    /// The zeroth-order part of a value.
    pub fn value(&self, v: &JetValue) -> Vec<f64> {
        match v {
            JetValue::Const(k) => vec![*k; self.sp.len()],
            JetValue::Jet(d) => d[0].clone(),
        }
    }

    fn missing() -> Error {
        Error::MissingInput("evolution derivative beyond the supplied jet order".into())
    }
}

impl Calculus for JetContext {
    type Value = JetValue;

    fn base(&self, i: usize) -> Result<JetValue> {
        let d = self.bases.get(i).ok_or_else(|| Error::MissingInput(format!("base field #{i}")))?;
        Ok(JetValue::Jet(Rc::clone(d)))
    }

    fn constant(&self, v: f64) -> JetValue {
        JetValue::Const(v)
    }

    fn lin(&self, terms: &[(f64, &JetValue)]) -> Result<JetValue> {
        let mut k = 0.0;
        let mut order = usize::MAX;
        for (w, v) in terms {
            match v {
                JetValue::Const(c) => k += w * c,
                JetValue::Jet(d) => order = order.min(d.len()),
            }
        }
        if order == usize::MAX {
            return Ok(JetValue::Const(k));
        }
        let out = (0..order)
            .map(|j| {
                let fs: Vec<(f64, &[f64])> = terms
                    .iter()
                    .filter_map(|(w, v)| match v {
                        JetValue::Jet(d) => Some((*w, d[j].as_slice())),
                        JetValue::Const(_) => None,
                    })
                    .collect();
                lin_fields(&fs, self.sp.len(), if j == 0 { k } else { 0.0 })
            })
            .collect();
        Ok(JetValue::Jet(Rc::new(out)))
    }

    fn mul(&self, a: &JetValue, b: &JetValue) -> Result<JetValue> {
        match (a, b) {
            (JetValue::Const(x), JetValue::Const(y)) => Ok(JetValue::Const(x * y)),
            (JetValue::Const(x), v) | (v, JetValue::Const(x)) => self.lin(&[(*x, v)]),
            (JetValue::Jet(da), JetValue::Jet(db)) => {
                let order = da.len().min(db.len());
                let out = (0..order)
                    .map(|n| {
                        let mut acc = vec![0.0; self.sp.len()];
                        for k in 0..=n {
                            let w = binomial(n, k);
                            for ((o, x), y) in acc.iter_mut().zip(&da[k]).zip(&db[n - k]) {
                                *o += w * x * y;
                            }
                        }
                        acc
                    })
                    .collect();
                Ok(JetValue::Jet(Rc::new(out)))
            }
        }
    }

    fn evol(&self, a: &JetValue) -> Result<JetValue> {
        match a {
            JetValue::Const(_) => Ok(JetValue::Const(0.0)),
            JetValue::Jet(d) if d.len() < 2 => Err(JetContext::missing()),
            JetValue::Jet(d) => Ok(JetValue::Jet(Rc::new(d[1..].to_vec()))),
        }
    }

    fn axis(&self, a: &JetValue, axis: usize, order: u32) -> Result<JetValue> {
        match a {
            JetValue::Const(_) => Ok(JetValue::Const(0.0)),
            JetValue::Jet(d) => {
                Ok(JetValue::Jet(Rc::new(d.iter().map(|f| self.sp.derivative(f, axis, order)).collect::<Result<_>>()?)))
            }
        }
    }

    fn anti(&self, a: &JetValue, axis: usize) -> Result<JetValue> {
        match a {
            JetValue::Const(k) if *k == 0.0 => Ok(JetValue::Const(0.0)),
            JetValue::Const(_) => Err(Error::InvalidInput("antiderivative of a nonzero constant".into())),
            JetValue::Jet(d) => {
                Ok(JetValue::Jet(Rc::new(d.iter().map(|f| self.sp.antiderivative(f, axis)).collect::<Result<_>>()?)))
            }
        }
    }
}

/// Physical derivatives expressed in the coordinates of a frame.
///
/// * physical: evolution = `t`, axes = `x1, x2, …`;
/// * KZK: evolution = `z`, axis 0 = `τ`, further axes = `y`;
///   `∂t = ∂τ`, `∂x1 = ε∂z − ∂τ/c`, `∂xj = √ε ∂yj`;
/// * NPE: evolution = `τ`, axis 0 = `z`, further axes = `y`;
///   `∂t = ε∂τ − c∂z`, `∂x1 = ∂z`, `∂xj = √ε ∂yj`.
#[derive(Debug, Clone, Copy)]
pub struct FrameCalculus {
    pub frame: Frame,
    pub c: f64,
    pub eps: f64,
    pub ndim: usize,
}

impl FrameCalculus {
    pub fn new(frame: Frame, c: f64, eps: f64, ndim: usize) -> Self {
        FrameCalculus { frame, c, eps, ndim }
    }

    /// `∂t e`.
    pub fn dt(&self, e: &Expr) -> Expr {
        match self.frame {
            Frame::Physical => e.ev(),
            Frame::Kzk => e.d(0, 1),
            Frame::Npe => Expr::lin(vec![(self.eps, e.ev()), (-self.c, e.d(0, 1))]),
        }
    }

    /// `∂xᵢ e` (`i` counts from 0).
    pub fn dx(&self, e: &Expr, i: usize) -> Expr {
        match (self.frame, i) {
            (Frame::Physical, _) | (Frame::Npe, 0) => e.d(i, 1),
            (Frame::Kzk, 0) => Expr::lin(vec![(self.eps, e.ev()), (-1.0 / self.c, e.d(0, 1))]),
            (_, _) => e.d(i, 1).scale(self.eps.sqrt()),
        }
    }

    pub fn grad(&self, e: &Expr) -> Vec<Expr> {
        (0..self.ndim).map(|i| self.dx(e, i)).collect()
    }

    pub fn lap(&self, e: &Expr) -> Expr {
        sum((0..self.ndim).map(|i| self.dx(&self.dx(e, i), i)))
    }

    pub fn div(&self, v: &[Expr]) -> Expr {
        sum(v.iter().enumerate().map(|(i, vi)| self.dx(vi, i)))
    }

    pub fn dot(a: &[Expr], b: &[Expr]) -> Expr {
        sum(a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()))
    }
}

/// Evaluates `expr` at the centre of a stack and wraps it as a field.
pub fn center_field(stack: &LevelStack, grid: &Grid, expr: &Expr) -> Result<Field> {
    let v = evaluate(stack, expr)?;
    Field::scalar(grid.clone(), stack.at_center(&v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(vec![Axis::periodic("x", 2.0 * PI, 16)], Frame::Physical).unwrap()
    }

    fn stack(h: f64) -> LevelStack {
        let g = grid();
        let levels: Vec<Vec<f64>> = (0..9).map(|j| g.sample(|x| (x[0] + 0.3 * (j as f64 - 4.0) * h).sin())).collect();
        LevelStack::new(&g, h, vec![levels]).unwrap()
    }

    #[test]
    fn level_stack_differentiates_products() {
        // f = sin(x + 0.3 s) ⇒ ∂s(f²) = 0.6 sin cos at s = 0.
        let g = grid();
        let f = Expr::base(0);
        let e = f.sq().ev();
        let err = |h: f64| {
            let st = stack(h);
            let v = st.at_center(&evaluate(&st, &e).unwrap()).unwrap();
            let exact = g.sample(|x| 0.6 * x[0].sin() * x[0].cos());
            v.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn jet_leibniz_rule() {
        let g = grid();
        let f = g.sample(|x| x[0].sin());
        let fp = g.sample(|x| x[0].cos());
        let fpp = g.sample(|x| -x[0].sin());
        let ctx = JetContext::new(&g, vec![vec![f.clone(), fp.clone(), fpp.clone()]]).unwrap();
        let e = Expr::base(0).sq().ev().ev();
        let v = ctx.value(&evaluate(&ctx, &e).unwrap());
        for i in 0..g.len() {
            let exact = 2.0 * fp[i] * fp[i] + 2.0 * f[i] * fpp[i];
            assert!((v[i] - exact).abs() < 1e-14);
        }
        assert!(matches!(evaluate(&ctx, &e.ev()), Err(Error::MissingInput(_))));
    }

    #[test]
    fn constant_folding() {
        let e = Expr::base(0).scale(0.0) + Expr::constant(2.0) * Expr::constant(3.0);
        assert_eq!(e.as_const(), Some(6.0));
        assert_eq!(Expr::constant(4.0).ev().as_const(), Some(0.0));
    }
}
