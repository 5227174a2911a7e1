use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Failure while evaluating an expression at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative number")]
    NegativeSqrt,
    #[error("invalid power (negative base with fractional exponent or zero to a negative power)")]
    InvalidPow,
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("variable index out of range")]
    VariableOutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn from_function_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64, EvalError> {
        let out = match self {
            UnaryOp::Neg => -v,
            UnaryOp::Sin => v.sin(),
            UnaryOp::Cos => v.cos(),
            UnaryOp::Exp => v.exp(),
            UnaryOp::Sqrt => {
                if v < 0.0 {
                    return Err(EvalError::NegativeSqrt);
                }
                v.sqrt()
            }
            UnaryOp::Abs => v.abs(),
        };
        finite(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }

    fn apply(self, a: f64, b: f64) -> Result<f64, EvalError> {
        let out = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a / b
            }
            BinaryOp::Pow => pow(a, b)?,
        };
        finite(out)
    }
}

const UNARY_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err(EvalError::InvalidPow);
        }
        return Ok(base.powi(exponent as i32));
    }
    if base < 0.0 || (base == 0.0 && exponent < 0.0) {
        return Err(EvalError::InvalidPow);
    }
    Ok(base.powf(exponent))
}

/// Expression tree for one component of a vector field.
///
/// `Var(i)` is zero-based (`x1` is `Var(0)`). Parameters keep their name for
/// printing and carry their bound value for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Param { name: String, value: f64 },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn neg(e: Expr) -> Self {
        Self::unary(UnaryOp::Neg, e)
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Pow, a, b)
    }

    /// True if the subtree contains no state variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Param { .. } => true,
            Expr::Var(_) => false,
            Expr::Unary(_, e) => e.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Const(_) | Expr::Param { .. } => None,
            Expr::Unary(_, e) => e.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param { .. } => 1,
            Expr::Unary(_, e) => 1 + e.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Evaluates at `x`.
    ///
    /// A product with one factor exactly zero is zero even when the other
    /// factor cannot be evaluated; this extends fields such as
    /// `x2 * r^6 * sin(pi / r^2)^2` continuously through their removable
    /// singularity at the origin.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(i) => x.get(*i).copied().ok_or(EvalError::VariableOutOfRange),
            Expr::Param { value, .. } => Ok(*value),
            Expr::Unary(op, e) => op.apply(e.eval(x)?),
            Expr::Binary(BinaryOp::Mul, a, b) => {
                let va = a.eval(x);
                if va == Ok(0.0) {
                    return Ok(0.0);
                }
                let vb = b.eval(x);
                if vb == Ok(0.0) {
                    return Ok(0.0);
                }
                BinaryOp::Mul.apply(va?, vb?)
            }
            Expr::Binary(op, a, b) => op.apply(a.eval(x)?, b.eval(x)?),
        }
    }

    /// Symbolic partial derivative with respect to `Var(k)`, simplified.
    pub fn derivative(&self, k: usize) -> Expr {
        self.diff(k).simplify()
    }

    fn diff(&self, k: usize) -> Expr {
        use Expr as E;
        match self {
            E::Const(_) | E::Param { .. } => E::Const(0.0),
            E::Var(i) => E::Const(if *i == k { 1.0 } else { 0.0 }),
            E::Unary(op, u) => {
                let du = u.diff(k);
                let u = (**u).clone();
                match op {
                    UnaryOp::Neg => E::neg(du),
                    UnaryOp::Sin => E::mul(E::unary(UnaryOp::Cos, u), du),
                    UnaryOp::Cos => E::mul(E::neg(E::unary(UnaryOp::Sin, u)), du),
                    UnaryOp::Exp => E::mul(E::unary(UnaryOp::Exp, u), du),
                    UnaryOp::Sqrt => E::div(
                        du,
                        E::mul(E::Const(2.0), E::unary(UnaryOp::Sqrt, u)),
                    ),
                    UnaryOp::Abs => E::mul(E::div(u.clone(), E::unary(UnaryOp::Abs, u)), du),
                }
            }
            E::Binary(op, a, b) => {
                let (ua, ub) = ((**a).clone(), (**b).clone());
                match op {
                    BinaryOp::Add => E::add(a.diff(k), b.diff(k)),
                    BinaryOp::Sub => E::sub(a.diff(k), b.diff(k)),
                    BinaryOp::Mul => E::add(E::mul(a.diff(k), ub), E::mul(ua, b.diff(k))),
                    BinaryOp::Div => E::div(
                        E::sub(E::mul(a.diff(k), ub.clone()), E::mul(ua, b.diff(k))),
                        E::pow(ub, E::Const(2.0)),
                    ),
                    BinaryOp::Pow => {
                        let reduced = match &ub {
                            E::Const(c) => E::Const(c - 1.0),
                            other => E::sub(other.clone(), E::Const(1.0)),
                        };
                        E::mul(E::mul(ub, E::pow(ua, reduced)), a.diff(k))
                    }
                }
            }
        }
    }

    /// Constant folding, 0/1 identities and double negation.
    pub fn simplify(&self) -> Expr {
        use Expr as E;
        match self {
            E::Const(_) | E::Var(_) | E::Param { .. } => self.clone(),
            E::Unary(op, u) => {
                let u = u.simplify();
                match (op, u) {
                    (_, E::Const(c)) if op.apply(c).is_ok() => E::Const(op.apply(c).unwrap()),
                    (UnaryOp::Neg, E::Unary(UnaryOp::Neg, inner)) => *inner,
                    (op, u) => E::unary(*op, u),
                }
            }
            E::Binary(op, a, b) => {
                let a = a.simplify();
                let b = b.simplify();
                if let (E::Const(x), E::Const(y)) = (&a, &b) {
                    if let Ok(v) = op.apply(*x, *y) {
                        return E::Const(v);
                    }
                }
                let is = |e: &E, v: f64| matches!(e, E::Const(c) if *c == v);
                match op {
                    BinaryOp::Add if is(&a, 0.0) => b,
                    BinaryOp::Add | BinaryOp::Sub if is(&b, 0.0) => a,
                    BinaryOp::Sub if is(&a, 0.0) => E::neg(b).simplify(),
                    BinaryOp::Mul if is(&a, 0.0) || is(&b, 0.0) => E::Const(0.0),
                    BinaryOp::Mul if is(&a, 1.0) => b,
                    BinaryOp::Mul if is(&b, 1.0) => a,
                    BinaryOp::Div if is(&b, 1.0) => a,
                    BinaryOp::Div if is(&a, 0.0) => E::Const(0.0),
                    BinaryOp::Pow if is(&b, 1.0) => a,
                    BinaryOp::Pow if is(&b, 0.0) => E::Const(1.0),
                    _ => E::binary(*op, a, b),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => UNARY_PRECEDENCE,
            Expr::Const(_) | Expr::Var(_) | Expr::Param { .. } => ATOM_PRECEDENCE,
            Expr::Unary(UnaryOp::Neg, _) => UNARY_PRECEDENCE,
            Expr::Unary(_, _) => ATOM_PRECEDENCE,
            Expr::Binary(op, _, _) => op.precedence(),
        }
    }
}

/// Reads `pi` as a named constant.
pub(crate) fn named_constant(name: &str) -> Option<f64> {
    (name == "pi").then_some(PI)
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    /// Prints with the minimum parentheses needed to parse back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Param { name, .. } => write!(f, "{name}"),
            Expr::Unary(UnaryOp::Neg, e) => {
                write!(f, "-")?;
                // `-2` would read back as the literal -2, and `-(-2)` as a
                // literal inside a negation; keep both explicit.
                let parens = e.precedence() < UNARY_PRECEDENCE || matches!(**e, Expr::Const(_));
                write_child(f, e, parens)
            }
            Expr::Unary(op, e) => write!(f, "{}({e})", op.name()),
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let (left_parens, right_parens) = if *op == BinaryOp::Pow {
                    // Right associative; the exponent is parsed at unary level.
                    (a.precedence() <= p, b.precedence() < UNARY_PRECEDENCE)
                } else {
                    (a.precedence() < p, b.precedence() <= p)
                };
                write_child(f, a, left_parens)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, b, right_parens)
            }
        }
    }
}
