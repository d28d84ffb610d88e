//! A small expression language for reaction terms `f(u)`.
//!
//! Expressions are parsed into an AST over real literals, variables
//! `u1..un`, the binary operators `+ - * / ^`, unary minus, and the
//! functions `tanh exp sin cos sqrt abs`. Evaluation walks the tree with a
//! generic scalar type, so plain values and forward-mode duals share one
//! code path and the Jacobian is the exact derivative of `eval`.
//!
//! Grammar (EBNF, `^` binds tighter than unary minus, right-associative):
//!
//! ```text
//! field   = expr { ";" expr } ;
//! expr    = term { ("+" | "-") term } ;
//! term    = factor { ("*" | "/") factor } ;
//! factor  = "-" factor | power ;
//! power   = atom [ "^" factor ] ;
//! atom    = number | variable | function "(" expr ")" | "(" expr ")" ;
//! ```

mod dual;
mod parse;

pub use dual::Dual;
pub use parse::parse;

use crate::error::{CoreError, Result};

/// Unary functions available in reaction expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Tanh,
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree. Variable indices are zero-based internally and printed
/// one-based (`u1`).
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

impl Expr {
    fn eval_scalar<T: ExprScalar>(&self, vars: &[T]) -> T {
        match self {
            Expr::Const(c) => T::from_const(*c),
            Expr::Var(i) => vars[*i],
            Expr::Neg(e) => e.eval_scalar(vars).neg(),
            Expr::Bin(op, a, b) => {
                let a = a.eval_scalar(vars);
                let b = b.eval_scalar(vars);
                match op {
                    BinOp::Add => a.add(b),
                    BinOp::Sub => a.sub(b),
                    BinOp::Mul => a.mul(b),
                    BinOp::Div => a.div(b),
                    BinOp::Pow => a.pow(b),
                }
            }
            Expr::Func(f, e) => e.eval_scalar(vars).func(*f),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, out: &mut String) {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    out.push_str(&format!("({c})"));
                } else {
                    out.push_str(&format!("{c}"));
                }
            }
            Expr::Var(i) => out.push_str(&format!("u{}", i + 1)),
            Expr::Neg(e) => {
                out.push('-');
                wrap_if(out, e, e.precedence() < 3);
            }
            Expr::Bin(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                // Left operand needs parens below our precedence; right
                // operand also at equal precedence for the left-associative
                // operators (and for `^` the left side, since it is
                // right-associative).
                let left_strict = *op == BinOp::Pow;
                wrap_if(out, a, a.precedence() < prec || (left_strict && a.precedence() == prec));
                out.push_str(sym);
                wrap_if(out, b, b.precedence() < prec || (!left_strict && b.precedence() == prec));
            }
            Expr::Func(f, e) => {
                out.push_str(f.name());
                out.push('(');
                e.fmt_prec(out);
                out.push(')');
            }
        }
    }
}

fn wrap_if(out: &mut String, e: &Expr, wrap: bool) {
    if wrap {
        out.push('(');
        e.fmt_prec(out);
        out.push(')');
    } else {
        e.fmt_prec(out);
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        self.fmt_prec(&mut s);
        f.write_str(&s)
    }
}

/// Scalar abstraction shared by plain and dual evaluation.
trait ExprScalar: Copy {
    fn from_const(c: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn pow(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn func(self, f: Func) -> Self;
}

impl ExprScalar for f64 {
    fn from_const(c: f64) -> Self {
        c
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn pow(self, o: Self) -> Self {
        self.powf(o)
    }
    fn neg(self) -> Self {
        -self
    }
    fn func(self, f: Func) -> Self {
        match f {
            Func::Tanh => self.tanh(),
            Func::Exp => self.exp(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Sqrt => self.sqrt(),
            Func::Abs => self.abs(),
        }
    }
}

impl ExprScalar for Dual {
    fn from_const(c: f64) -> Self {
        Dual::constant(c)
    }
    fn add(self, o: Self) -> Self {
        Dual::add(self, o)
    }
    fn sub(self, o: Self) -> Self {
        Dual::sub(self, o)
    }
    fn mul(self, o: Self) -> Self {
        Dual::mul(self, o)
    }
    fn div(self, o: Self) -> Self {
        Dual::div(self, o)
    }
    fn pow(self, o: Self) -> Self {
        Dual::pow(self, o)
    }
    fn neg(self) -> Self {
        Dual::neg(self)
    }
    fn func(self, f: Func) -> Self {
        match f {
            Func::Tanh => self.tanh(),
            Func::Exp => self.exp(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Sqrt => self.sqrt(),
            Func::Abs => self.abs(),
        }
    }
}

/// An `n`-component reaction term, one expression per species.
#[derive(Clone, Debug, PartialEq)]
pub struct ReactionField {
    arity: usize,
    components: Vec<Expr>,
}

impl ReactionField {
    pub fn new(arity: usize, components: Vec<Expr>) -> Result<Self> {
        if components.len() != arity {
            return Err(CoreError::InvalidParameter {
                name: "components",
                detail: format!("declared arity {} but {} components", arity, components.len()),
            });
        }
        for c in &components {
            check_vars(c, arity)?;
        }
        Ok(ReactionField { arity, components })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Componentwise evaluation. Non-finite results are evaluation errors
    /// carrying the offending component index rather than silent NaNs.
    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.arity];
        self.eval_into(u, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(u.len(), self.arity);
        for (i, c) in self.components.iter().enumerate() {
            let v = c.eval_scalar(u);
            if !v.is_finite() {
                return Err(CoreError::Eval {
                    component: i,
                    message: format!("non-finite result {v} at u = {u:?}"),
                });
            }
            out[i] = v;
        }
        Ok(())
    }

    /// Exact Jacobian `J[i][j] = d f_i / d u_j` via one dual pass per input,
    /// written row-major into `out` (length `n*n`).
    pub fn jacobian_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.arity;
        debug_assert_eq!(u.len(), n);
        debug_assert_eq!(out.len(), n * n);
        let mut vars: Vec<Dual> = u.iter().map(|&v| Dual::constant(v)).collect();
        for j in 0..n {
            vars[j].deriv = 1.0;
            for (i, c) in self.components.iter().enumerate() {
                let d = c.eval_scalar(&vars[..]);
                if !d.value.is_finite() || !d.deriv.is_finite() {
                    return Err(CoreError::Eval {
                        component: i,
                        message: format!("non-finite derivative at u = {u:?}"),
                    });
                }
                out[i * n + j] = d.deriv;
            }
            vars[j].deriv = 0.0;
        }
        Ok(())
    }

    pub fn jacobian(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.arity * self.arity];
        self.jacobian_into(u, &mut out)?;
        Ok(out)
    }

    /// Pretty-printed source that reparses to a structurally identical field.
    pub fn to_source(&self) -> String {
        self.components
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

fn check_vars(e: &Expr, arity: usize) -> Result<()> {
    match e {
        Expr::Const(_) => Ok(()),
        Expr::Var(i) => {
            if *i < arity {
                Ok(())
            } else {
                Err(CoreError::InvalidParameter {
                    name: "variable",
                    detail: format!("u{} out of range for arity {}", i + 1, arity),
                })
            }
        }
        Expr::Neg(a) | Expr::Func(_, a) => check_vars(a, arity),
        Expr::Bin(_, a, b) => {
            check_vars(a, arity)?;
            check_vars(b, arity)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh2_eval_examples() {
        let f = parse("-u1 + 2*tanh(u2); -u2 + 2*tanh(u1)", 2).unwrap();
        assert_eq!(f.eval(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let v = f.eval(&[1.0, 1.0]).unwrap();
        let expect = -1.0 + 2.0 * 1.0_f64.tanh();
        assert!((v[0] - expect).abs() < 1e-12);
        assert!((v[1] - expect).abs() < 1e-12);
        assert!((expect - 0.523188).abs() < 1e-6);
    }

    #[test]
    fn cubic_eval_and_jacobian() {
        let f = parse("u1 - u1^3", 1).unwrap();
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![0.0]);
        let j = f.jacobian(&[1.0]).unwrap();
        assert!((j[0] - -2.0).abs() < 1e-12);
        // Negative base with integer exponent must stay finite.
        let v = f.eval(&[-0.5]).unwrap();
        assert!((v[0] - (-0.5 - -0.125)).abs() < 1e-12);
    }

    #[test]
    fn tanh2_jacobian_at_origin() {
        let f = parse("-u1 + 2*tanh(u2); -u2 + 2*tanh(u1)", 2).unwrap();
        let j = f.jacobian(&[0.0, 0.0]).unwrap();
        assert_eq!(j, vec![-1.0, 2.0, 2.0, -1.0]);
    }

    #[test]
    fn precedence_examples() {
        let f = parse("-u1^2", 1).unwrap();
        // ^ binds tighter than unary minus: -(u1^2).
        assert_eq!(f.eval(&[3.0]).unwrap(), vec![-9.0]);
        let g = parse("2*u1^3 - 1", 1).unwrap();
        assert_eq!(g.eval(&[2.0]).unwrap(), vec![15.0]);
        // ^ is right-associative: 2^(3^2) = 512.
        let h = parse("2^3^2 + 0*u1", 1).unwrap();
        assert_eq!(h.eval(&[0.0]).unwrap(), vec![512.0]);
    }

    #[test]
    fn domain_error_carries_component() {
        let f = parse("u1; sqrt(u2)", 2).unwrap();
        match f.eval(&[1.0, -1.0]) {
            Err(CoreError::Eval { component, .. }) => assert_eq!(component, 1),
            other => panic!("expected eval error, got {other:?}"),
        }
    }

    #[test]
    fn division_by_zero_is_eval_error() {
        let f = parse("1/u1", 1).unwrap();
        assert!(matches!(f.eval(&[0.0]), Err(CoreError::Eval { component: 0, .. })));
    }

    #[test]
    fn print_reparse_roundtrip() {
        let src = "-u1 + 2*tanh(u2); -(u2 + 1)*u1^2 - u2/4";
        let f = parse(src, 2).unwrap();
        let printed = f.to_source();
        let g = parse(&printed, 2).unwrap();
        assert_eq!(f, g);
    }
}
