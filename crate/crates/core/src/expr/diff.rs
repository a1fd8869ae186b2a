//! Exact partial differentiation. Symbols other than the differentiation
//! variable are treated as constants.

use super::{Expression, FuncHead};
use crate::symbol::Symbol;
use num::One;

pub fn differentiate(e: &Expression, var: &Symbol) -> Expression {
    match e {
        Expression::Rational(_) => Expression::zero(),
        Expression::Symbol(s) => {
            if s == var {
                Expression::one()
            } else {
                Expression::zero()
            }
        }
        Expression::Sum(terms) => {
            Expression::sum(terms.iter().map(|t| differentiate(t, var)).collect())
        }
        Expression::Product(factors) => {
            // d(f1..fn) = sum_i f1..f_{i-1} * dfi * f_{i+1}..fn
            let mut terms = Vec::with_capacity(factors.len());
            for (i, fi) in factors.iter().enumerate() {
                if !fi.contains_symbol(var) {
                    continue;
                }
                let mut parts: Vec<Expression> = Vec::with_capacity(factors.len());
                parts.push(differentiate(fi, var));
                for (j, fj) in factors.iter().enumerate() {
                    if i != j {
                        parts.push(fj.clone());
                    }
                }
                terms.push(Expression::product(parts));
            }
            Expression::sum(terms)
        }
        Expression::Power(base, exp) => {
            if !base.contains_symbol(var) {
                return Expression::zero();
            }
            // d(u^q) = q * u^(q-1) * du
            let du = differentiate(base, var);
            let scaled = Expression::from_rational(exp.clone())
                * Expression::pow((**base).clone(), exp.clone() - num::rational::BigRational::one());
            scaled * du
        }
        Expression::Func(FuncHead::Exp, arg) => {
            Expression::exp((**arg).clone()) * differentiate(arg, var)
        }
        Expression::Func(FuncHead::Log, arg) => {
            differentiate(arg, var) * (**arg).clone().recip()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn d(e: &str, v: &str) -> Expression {
        differentiate(&parse_expression(e).unwrap(), &Symbol::new(v))
    }

    fn p(e: &str) -> Expression {
        parse_expression(e).unwrap()
    }

    #[test]
    fn constants_and_linear_terms() {
        assert_eq!(d("-3*y", "y"), p("-3"));
        assert_eq!(d("7", "y"), Expression::zero());
        assert_eq!(d("x", "y"), Expression::zero());
    }

    #[test]
    fn quotient_with_foreign_symbol() {
        // d/dy (2y/x^2) = 2/x^2
        assert_eq!(d("2*y/x^2", "y"), p("2/x^2"));
    }

    #[test]
    fn chain_rule_through_exp() {
        // d/dx exp(x^2) = 2x exp(x^2)
        assert_eq!(d("exp(x^2)", "x"), p("2*x*exp(x^2)"));
    }

    #[test]
    fn power_and_log_rules() {
        assert_eq!(d("x^3", "x"), p("3*x^2"));
        assert_eq!(d("sqrt(x)", "x"), p("1/(2*sqrt(x))"));
        assert_eq!(d("log(x)", "x"), p("1/x"));
        assert_eq!(d("1/x", "x"), p("-1/x^2"));
    }
}
