//! Immutable symbolic expression trees over exact rationals.
//!
//! An [`Expression`] is a normalised tree of rational literals, symbols,
//! n-ary sums and products, powers with exact rational exponents, and the
//! function heads `exp` and `log`. Square roots are represented as
//! `Power(base, 1/2)`; unary minus is `Product(-1, ..)`. All constructors
//! normalise, so two structurally equal trees denote the same expression
//! under the canonical ordering.

mod diff;
mod eval;
mod parse;
pub mod poly;
mod print;
mod zerotest;

pub use diff::differentiate;
pub use eval::{evaluate, evaluate_with_magnitude, EvalError};
pub use parse::{parse_expression, ParseError};
pub use poly::{normalise_rational, RationalForm};
pub use zerotest::{equivalent_zero, Proof, ZeroTestConfig, ZeroTestError, ZeroVerdict};

use crate::symbol::Symbol;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Exact rational scalar used throughout the symbolic layer.
pub type Rational = BigRational;

/// Function heads that stay opaque in the tree (`sqrt` folds into `Power`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum FuncHead {
    Exp,
    Log,
}

/// A normalised symbolic expression.
///
/// Invariants maintained by the constructors:
/// - rational literals are in lowest terms with positive denominator;
/// - sums and products are flattened, have at least two children, and the
///   children are sorted by the derived total order;
/// - sums carry no rational term other than an optional leading literal and
///   no two terms share the same non-rational core;
/// - products carry at most one rational coefficient (first child) and no
///   two factors share the same base;
/// - powers have a rational exponent that is neither 0 nor 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Expression {
    Rational(Rational),
    Symbol(Symbol),
    Sum(Vec<Expression>),
    Product(Vec<Expression>),
    Power(Box<Expression>, Rational),
    Func(FuncHead, Box<Expression>),
}

impl Expression {
    pub fn integer(n: i64) -> Self {
        Expression::Rational(Rational::from(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational literal with zero denominator");
        Expression::Rational(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(r: Rational) -> Self {
        Expression::Rational(r)
    }

    pub fn symbol(name: impl Into<Symbol>) -> Self {
        Expression::Symbol(name.into())
    }

    pub fn zero() -> Self {
        Expression::integer(0)
    }

    pub fn one() -> Self {
        Expression::integer(1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expression::Rational(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expression::Rational(r) if r.is_one())
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Expression::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// n-ary sum, normalised: flattens nested sums, folds rational literals
    /// and collects terms that share the same non-rational core.
    pub fn sum(terms: Vec<Expression>) -> Self {
        let mut constant = Rational::zero();
        // core -> accumulated rational coefficient
        let mut by_core: BTreeMap<Expression, Rational> = BTreeMap::new();

        let mut stack = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t {
                Expression::Rational(r) => constant += r,
                Expression::Sum(children) => {
                    for c in children.into_iter().rev() {
                        stack.push(c);
                    }
                }
                other => {
                    let (coeff, core) = split_term(other);
                    if core.is_one() {
                        constant += coeff;
                    } else {
                        *by_core.entry(core).or_insert_with(Rational::zero) += coeff;
                    }
                }
            }
        }

        let mut out: Vec<Expression> = Vec::with_capacity(by_core.len() + 1);
        if !constant.is_zero() {
            out.push(Expression::Rational(constant));
        }
        for (core, coeff) in by_core {
            if coeff.is_zero() {
                continue;
            }
            out.push(Expression::mul2(Expression::Rational(coeff), core));
        }
        match out.len() {
            0 => Expression::zero(),
            1 => out.pop().unwrap(),
            _ => Expression::Sum(out),
        }
    }

    /// n-ary product, normalised: flattens, folds the rational coefficient,
    /// and merges factors with equal bases by adding exponents.
    pub fn product(factors: Vec<Expression>) -> Self {
        let mut coeff = Rational::one();
        // base -> accumulated exponent
        let mut by_base: BTreeMap<Expression, Rational> = BTreeMap::new();

        let mut stack = factors;
        stack.reverse();
        while let Some(f) = stack.pop() {
            match f {
                Expression::Rational(r) => {
                    if r.is_zero() {
                        return Expression::zero();
                    }
                    coeff *= r;
                }
                Expression::Product(children) => {
                    for c in children.into_iter().rev() {
                        stack.push(c);
                    }
                }
                Expression::Power(base, exp) => {
                    *by_base.entry(*base).or_insert_with(Rational::zero) += exp;
                }
                other => {
                    *by_base.entry(other).or_insert_with(Rational::zero) += Rational::one();
                }
            }
        }

        let mut out: Vec<Expression> = Vec::with_capacity(by_base.len() + 1);
        let mut needs_repass = false;
        for (base, exp) in by_base {
            let factor = Expression::pow(base, exp);
            match factor {
                Expression::Rational(r) => {
                    if r.is_zero() {
                        return Expression::zero();
                    }
                    coeff *= r;
                }
                one if one.is_one() => {}
                other => {
                    // pow() may have folded into a product (e.g. integer powers
                    // distributing over product bases); those factors must be
                    // merged again.
                    if matches!(other, Expression::Product(_)) {
                        needs_repass = true;
                    }
                    out.push(other);
                }
            }
        }
        if needs_repass {
            out.push(Expression::Rational(coeff));
            return Expression::product(out);
        }
        out.sort();
        if !coeff.is_one() {
            out.insert(0, Expression::Rational(coeff));
        }
        match out.len() {
            0 => Expression::one(),
            1 => out.pop().unwrap(),
            _ => Expression::Product(out),
        }
    }

    fn add2(a: Expression, b: Expression) -> Expression {
        Expression::sum(vec![a, b])
    }

    fn mul2(a: Expression, b: Expression) -> Expression {
        Expression::product(vec![a, b])
    }

    /// Power with an exact rational exponent.
    ///
    /// Folding rules (all sound for real principal-branch semantics up to
    /// extension of the domain of definition):
    /// - `e == 0` -> 1, `e == 1` -> base;
    /// - rational base with exactly computable power folds to a literal;
    /// - `(u^a)^b -> u^(a*b)` when `b` is an integer or `a` has an even
    ///   denominator (never for e.g. `(x^2)^(1/2)`, which is `|x|`);
    /// - integer powers distribute over products; fractional powers extract
    ///   an exactly-rooted positive rational coefficient.
    pub fn pow(base: Expression, exp: Rational) -> Self {
        if exp.is_zero() {
            return Expression::one();
        }
        if exp.is_one() {
            return base;
        }
        match base {
            Expression::Rational(r) => match rational_pow(&r, &exp) {
                Some(v) => Expression::Rational(v),
                None => Expression::Power(Box::new(Expression::Rational(r)), exp),
            },
            Expression::Power(inner, a) => {
                let b_is_int = exp.is_integer();
                let a_den_even = (a.denom() % BigInt::from(2)).is_zero();
                if b_is_int || a_den_even {
                    Expression::pow(*inner, a * exp)
                } else {
                    Expression::Power(Box::new(Expression::Power(inner, a)), exp)
                }
            }
            Expression::Product(children) if exp.is_integer() => {
                Expression::product(children.into_iter().map(|c| Expression::pow(c, exp.clone())).collect())
            }
            Expression::Product(children) => {
                // pull an exactly-rooted positive rational coefficient out front
                let mut coeff: Option<Rational> = None;
                let mut rest = Vec::with_capacity(children.len());
                for c in children {
                    match c {
                        Expression::Rational(r) if r.is_positive() && coeff.is_none() => {
                            coeff = rational_pow(&r, &exp);
                            if coeff.is_none() {
                                rest.push(Expression::Rational(r));
                            }
                        }
                        other => rest.push(other),
                    }
                }
                let core = Expression::Power(Box::new(Expression::product(rest)), exp);
                match coeff {
                    Some(c) => Expression::mul2(Expression::Rational(c), core),
                    None => core,
                }
            }
            other => Expression::Power(Box::new(other), exp),
        }
    }

    pub fn sqrt(base: Expression) -> Self {
        Expression::pow(base, Rational::new(BigInt::one(), BigInt::from(2)))
    }

    pub fn exp(arg: Expression) -> Self {
        if arg.is_zero() {
            return Expression::one();
        }
        if let Expression::Func(FuncHead::Log, inner) = arg {
            return *inner;
        }
        Expression::Func(FuncHead::Exp, Box::new(arg))
    }

    pub fn log(arg: Expression) -> Self {
        if arg.is_one() {
            return Expression::zero();
        }
        if let Expression::Func(FuncHead::Exp, inner) = arg {
            return *inner;
        }
        Expression::Func(FuncHead::Log, Box::new(arg))
    }

    pub fn neg(self) -> Self {
        Expression::mul2(Expression::integer(-1), self)
    }

    pub fn recip(self) -> Self {
        Expression::pow(self, -Rational::one())
    }

    /// `self` raised to an integer power.
    pub fn powi(self, n: i64) -> Self {
        Expression::pow(self, Rational::from(BigInt::from(n)))
    }

    /// Simultaneous substitution of symbols by expressions.
    ///
    /// Bound symbols inside the replacements are not substituted again, so
    /// `{x -> y, y -> x}` swaps the two. The result is renormalised bottom-up.
    pub fn substitute(&self, bindings: &BTreeMap<Symbol, Expression>) -> Expression {
        if bindings.is_empty() {
            return self.clone();
        }
        match self {
            Expression::Rational(_) => self.clone(),
            Expression::Symbol(s) => match bindings.get(s) {
                Some(e) => e.clone(),
                None => self.clone(),
            },
            Expression::Sum(children) => {
                Expression::sum(children.iter().map(|c| c.substitute(bindings)).collect())
            }
            Expression::Product(children) => {
                Expression::product(children.iter().map(|c| c.substitute(bindings)).collect())
            }
            Expression::Power(base, exp) => Expression::pow(base.substitute(bindings), exp.clone()),
            Expression::Func(FuncHead::Exp, arg) => Expression::exp(arg.substitute(bindings)),
            Expression::Func(FuncHead::Log, arg) => Expression::log(arg.substitute(bindings)),
        }
    }

    /// Substitute a single symbol.
    pub fn substitute_symbol(&self, sym: &Symbol, value: &Expression) -> Expression {
        let mut m = BTreeMap::new();
        m.insert(sym.clone(), value.clone());
        self.substitute(&m)
    }

    pub fn contains_symbol(&self, sym: &Symbol) -> bool {
        match self {
            Expression::Rational(_) => false,
            Expression::Symbol(s) => s == sym,
            Expression::Sum(cs) | Expression::Product(cs) => cs.iter().any(|c| c.contains_symbol(sym)),
            Expression::Power(base, _) => base.contains_symbol(sym),
            Expression::Func(_, arg) => arg.contains_symbol(sym),
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Expression::Rational(_) => {}
            Expression::Symbol(s) => {
                out.insert(s.clone());
            }
            Expression::Sum(cs) | Expression::Product(cs) => {
                for c in cs {
                    c.collect_symbols(out);
                }
            }
            Expression::Power(base, _) => base.collect_symbols(out),
            Expression::Func(_, arg) => arg.collect_symbols(out),
        }
    }

    /// Splits off the rational content: `e = content * primitive` with the
    /// primitive's leading term positively oriented. Used to key `exp`
    /// arguments so that e.g. `exp(-b/2)` and `exp(b)` share a generator.
    pub fn split_content(&self) -> (Rational, Expression) {
        match self {
            Expression::Rational(r) => {
                if r.is_zero() {
                    (Rational::zero(), Expression::one())
                } else {
                    (r.clone(), Expression::one())
                }
            }
            Expression::Product(children) => {
                if let Some(Expression::Rational(r)) = children.first() {
                    let rest = Expression::product(children[1..].to_vec());
                    (r.clone(), rest)
                } else {
                    (Rational::one(), self.clone())
                }
            }
            Expression::Sum(children) => {
                let parts: Vec<(Rational, Expression)> =
                    children.iter().map(|c| c.split_content()).collect();
                let mut content = Rational::zero();
                for (q, _) in &parts {
                    content = rational_gcd(&content, q);
                }
                if content.is_zero() {
                    return (Rational::one(), self.clone());
                }
                // orient: first term of the primitive gets a positive coefficient
                if (parts[0].0.clone() / &content).is_negative() {
                    content = -content;
                }
                let prim = Expression::sum(
                    parts
                        .into_iter()
                        .map(|(q, core)| {
                            Expression::mul2(Expression::Rational(q / &content), core)
                        })
                        .collect(),
                );
                (content, prim)
            }
            _ => (Rational::one(), self.clone()),
        }
    }
}

/// Splits a (non-sum, non-rational) term into rational coefficient and core.
fn split_term(e: Expression) -> (Rational, Expression) {
    match e {
        Expression::Product(children) => {
            if let Some(Expression::Rational(r)) = children.first() {
                let coeff = r.clone();
                let rest: Vec<Expression> = children[1..].to_vec();
                let core = match rest.len() {
                    0 => Expression::one(),
                    1 => rest.into_iter().next().unwrap(),
                    _ => Expression::Product(rest),
                };
                (coeff, core)
            } else {
                (Rational::one(), Expression::Product(children))
            }
        }
        other => (Rational::one(), other),
    }
}

/// gcd of two rationals: gcd of numerators over lcm of denominators.
pub(crate) fn rational_gcd(a: &Rational, b: &Rational) -> Rational {
    use num::Integer;
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let num = a.numer().gcd(b.numer());
    let den = a.denom().lcm(b.denom());
    Rational::new(num, den)
}

/// Exact `r^e` when representable as a rational, else `None`.
fn rational_pow(r: &Rational, e: &Rational) -> Option<Rational> {
    use num::integer::Roots;
    use num::ToPrimitive;
    if e.is_integer() {
        let n = e.numer().to_i64()?;
        if r.is_zero() {
            return if n > 0 { Some(Rational::zero()) } else { None };
        }
        if n.unsigned_abs() > 4096 {
            return None;
        }
        let p = if n >= 0 {
            num::pow::pow(r.clone(), n as usize)
        } else {
            num::pow::pow(r.clone(), (-n) as usize).recip()
        };
        return Some(p);
    }
    // fractional exponent m/n: exact only if |r| has an exact n-th root
    let n = e.denom().to_u32()?;
    let m = e.numer().to_i64()?;
    if r.is_zero() {
        return if m > 0 { Some(Rational::zero()) } else { None };
    }
    let negative = r.is_negative();
    if negative && n % 2 == 0 {
        return None;
    }
    let abs = r.abs();
    let root_num = abs.numer().nth_root(n);
    let root_den = abs.denom().nth_root(n);
    if num::pow::pow(root_num.clone(), n as usize) != *abs.numer()
        || num::pow::pow(root_den.clone(), n as usize) != *abs.denom()
    {
        return None;
    }
    let root = Rational::new(root_num, root_den);
    let mut out = rational_pow(&root, &Rational::from(BigInt::from(m)))?;
    if negative && m % 2 != 0 {
        out = -out;
    }
    Some(out)
}

impl std::ops::Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        Expression::add2(self, rhs)
    }
}

impl std::ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        Expression::add2(self, rhs.neg())
    }
}

impl std::ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        Expression::mul2(self, rhs)
    }
}

impl std::ops::Div for Expression {
    type Output = Expression;
    fn div(self, rhs: Expression) -> Expression {
        Expression::mul2(self, rhs.recip())
    }
}

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Expression {
        Expression::symbol(s)
    }

    #[test]
    fn rationals_fold_to_lowest_terms() {
        let e = Expression::rational(2, 4);
        assert_eq!(e, Expression::rational(1, 2));
        let e = Expression::rational(3, -6);
        assert_eq!(e, Expression::rational(-1, 2));
    }

    #[test]
    fn sums_flatten_and_collect() {
        let x = sym("x");
        let e = (x.clone() + Expression::integer(2) * x.clone()) + x.clone();
        assert_eq!(e, Expression::integer(4) * x);
    }

    #[test]
    fn products_merge_bases() {
        let x = sym("x");
        let e = x.clone() * x.clone();
        assert_eq!(e, x.clone().powi(2));
        let e = x.clone().powi(3) * x.clone().powi(-3);
        assert!(e.is_one());
        // x^(1/2) * x^(1/2) = x
        let e = Expression::sqrt(x.clone()) * Expression::sqrt(x.clone());
        assert_eq!(e, x);
    }

    #[test]
    fn zero_annihilates_products() {
        let e = sym("x") * Expression::zero();
        assert!(e.is_zero());
    }

    #[test]
    fn unary_minus_is_product_with_minus_one() {
        let e = -sym("x");
        match &e {
            Expression::Product(cs) => {
                assert_eq!(cs[0], Expression::integer(-1));
            }
            other => panic!("expected product, got {:?}", other),
        }
    }

    #[test]
    fn power_folding_rules() {
        let x = sym("x");
        // (x^(1/2))^2 = x
        let e = Expression::pow(Expression::sqrt(x.clone()), Rational::from(BigInt::from(2)));
        assert_eq!(e, x);
        // (x^2)^(1/2) stays |x|-like: must NOT fold to x
        let sq = x.clone().powi(2);
        let e = Expression::sqrt(sq.clone());
        assert_ne!(e, x);
        match e {
            Expression::Power(base, exp) => {
                assert_eq!(*base, sq);
                assert_eq!(exp, Rational::new(BigInt::one(), BigInt::from(2)));
            }
            other => panic!("unexpected fold: {:?}", other),
        }
    }

    #[test]
    fn exact_rational_roots() {
        // sqrt(1/4) = 1/2
        let e = Expression::sqrt(Expression::rational(1, 4));
        assert_eq!(e, Expression::rational(1, 2));
        // (27)^(2/3) = 9
        let e = Expression::pow(Expression::integer(27), Rational::new(BigInt::from(2), BigInt::from(3)));
        assert_eq!(e, Expression::integer(9));
        // (-8)^(1/3) = -2
        let e = Expression::pow(Expression::integer(-8), Rational::new(BigInt::one(), BigInt::from(3)));
        assert_eq!(e, Expression::integer(-2));
        // sqrt(2) stays symbolic
        let e = Expression::sqrt(Expression::integer(2));
        assert!(matches!(e, Expression::Power(_, _)));
        // sqrt(4x) = 2*sqrt(x)
        let e = Expression::sqrt(Expression::integer(4) * sym("x"));
        assert_eq!(e, Expression::integer(2) * Expression::sqrt(sym("x")));
    }

    #[test]
    fn exp_log_shortcuts() {
        assert!(Expression::exp(Expression::zero()).is_one());
        assert!(Expression::log(Expression::one()).is_zero());
        let x = sym("x");
        assert_eq!(Expression::exp(Expression::log(x.clone())), x);
        assert_eq!(Expression::log(Expression::exp(x.clone())), x);
    }

    #[test]
    fn substitution_is_simultaneous() {
        let x = Symbol::new("x");
        let y = Symbol::new("y");
        let e = sym("x") + sym("y") * Expression::integer(2);
        let mut swap = BTreeMap::new();
        swap.insert(x.clone(), sym("y"));
        swap.insert(y.clone(), sym("x"));
        let swapped = e.substitute(&swap);
        assert_eq!(swapped, sym("y") + sym("x") * Expression::integer(2));
    }

    #[test]
    fn substitute_empty_is_identity() {
        let e = sym("x");
        assert_eq!(e.substitute(&BTreeMap::new()), e);
    }

    #[test]
    fn split_content_orients_sums() {
        // -x/2 - y/2 has content -1/2 and primitive x + y
        let e = Expression::rational(-1, 2) * sym("x") + Expression::rational(-1, 2) * sym("y");
        let (content, prim) = e.split_content();
        assert_eq!(content, Rational::new(BigInt::from(-1), BigInt::from(2)));
        assert_eq!(prim, sym("x") + sym("y"));
    }
}
