//! Deterministic text form of expressions. The output re-parses to a
//! structurally equal tree under the crate grammar.

use super::{Expression, FuncHead, Rational};
use num::{One, Signed, Zero};
use std::fmt;

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

fn render(e: &Expression) -> String {
    match e {
        Expression::Rational(r) => render_rational(r),
        Expression::Symbol(s) => s.as_str().to_string(),
        Expression::Sum(terms) => {
            let mut out = String::new();
            for (i, t) in terms.iter().enumerate() {
                let (neg, body) = render_signed(t);
                if i == 0 {
                    if neg {
                        out.push('-');
                    }
                } else if neg {
                    out.push_str(" - ");
                } else {
                    out.push_str(" + ");
                }
                out.push_str(&body);
            }
            out
        }
        Expression::Product(_) => {
            let (neg, body) = render_signed(e);
            if neg {
                format!("-{body}")
            } else {
                body
            }
        }
        Expression::Power(base, exp) => render_power(base, exp),
        Expression::Func(head, arg) => {
            let name = match head {
                FuncHead::Exp => "exp",
                FuncHead::Log => "log",
            };
            format!("{name}({})", render(arg))
        }
    }
}

fn render_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders a term as (is_negative, unsigned body). Products split their
/// factors into a numerator and a denominator around `/`.
fn render_signed(e: &Expression) -> (bool, String) {
    let (coeff, factors): (Rational, Vec<&Expression>) = match e {
        Expression::Product(children) => match children.first() {
            Some(Expression::Rational(r)) => (r.clone(), children[1..].iter().collect()),
            _ => (Rational::one(), children.iter().collect()),
        },
        Expression::Rational(r) => (r.clone(), Vec::new()),
        other => (Rational::one(), vec![other]),
    };

    let neg = coeff.is_negative();
    let coeff = coeff.abs();

    let mut num_parts: Vec<String> = Vec::new();
    let mut den_parts: Vec<String> = Vec::new();
    if !coeff.numer().is_one() || factors.is_empty() {
        num_parts.push(coeff.numer().to_string());
    }
    if !coeff.denom().is_one() {
        den_parts.push(coeff.denom().to_string());
    }
    for fct in factors {
        match fct {
            Expression::Power(base, exp) if exp.is_negative() => {
                let flipped = -exp.clone();
                if flipped.is_one() {
                    den_parts.push(render_atom(base));
                } else {
                    den_parts.push(render_power(base, &flipped));
                }
            }
            other => num_parts.push(render_atom(other)),
        }
    }

    let num = if num_parts.is_empty() {
        "1".to_string()
    } else {
        num_parts.join("*")
    };
    let body = if den_parts.is_empty() {
        num
    } else if den_parts.len() == 1 && !den_parts[0].contains(['*', '/']) {
        format!("{num}/{}", den_parts[0])
    } else {
        format!("{num}/({})", den_parts.join("*"))
    };
    (neg, body)
}

fn render_power(base: &Expression, exp: &Rational) -> String {
    if *exp == Rational::new(1.into(), 2.into()) {
        return format!("sqrt({})", render(base));
    }
    let base_str = render_atom(base);
    if exp.is_integer() && !exp.is_negative() {
        format!("{base_str}^{}", exp.numer())
    } else {
        format!("{base_str}^({})", render_rational(exp))
    }
}

/// Renders with parentheses whenever the node binds looser than `^`/`*`.
fn render_atom(e: &Expression) -> String {
    match e {
        Expression::Rational(r) => {
            if r.is_negative() || !r.denom().is_one() {
                format!("({})", render_rational(r))
            } else {
                render_rational(r)
            }
        }
        Expression::Symbol(_) | Expression::Func(_, _) => render(e),
        Expression::Power(base, exp) => {
            if *exp == Rational::new(1.into(), 2.into()) {
                render(e)
            } else {
                render_power(base, exp)
            }
        }
        Expression::Sum(_) | Expression::Product(_) => format!("({})", render(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::Expression;

    fn sym(s: &str) -> Expression {
        Expression::symbol(s)
    }

    #[test]
    fn renders_terms_and_signs() {
        // canonical term order: symbols before powers
        let e = sym("x").powi(2) - Expression::integer(3) * sym("y");
        assert_eq!(e.to_string(), "-3*y + x^2");
        let e = -sym("x") + sym("y");
        assert_eq!(e.to_string(), "-x + y");
    }

    #[test]
    fn renders_divisions() {
        let e = Expression::integer(2) * sym("y") / sym("x").powi(2);
        assert_eq!(e.to_string(), "2*y/x^2");
        let e = sym("k1") / sym("y");
        assert_eq!(e.to_string(), "k1/y");
        let e = Expression::rational(3, 2) * sym("x") / sym("y");
        assert_eq!(e.to_string(), "3*x/(2*y)");
    }

    #[test]
    fn renders_powers_and_roots() {
        let e = Expression::sqrt(sym("x") + Expression::one());
        assert_eq!(e.to_string(), "sqrt(1 + x)");
        let e = Expression::pow(sym("x"), num::rational::BigRational::new(3.into(), 2.into()));
        assert_eq!(e.to_string(), "x^(3/2)");
        let e = (sym("x") + sym("y")).powi(2);
        assert_eq!(e.to_string(), "(x + y)^2");
    }

    #[test]
    fn renders_plain_rationals() {
        assert_eq!(Expression::rational(-1, 2).to_string(), "-1/2");
        assert_eq!(Expression::integer(7).to_string(), "7");
    }
}
