//! Floating-point evaluation with distinct error causes, so samplers can
//! tell singular points from missing assignments.

use super::{Expression, FuncHead};
use crate::real::Real;
use crate::symbol::Symbol;
use num::ToPrimitive;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("negative or out-of-domain argument to a root/log")]
    Domain,
    #[error("symbol `{0}` has no assigned value")]
    Unassigned(Symbol),
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// Evaluates `e` under the given assignment.
pub fn evaluate<F: Real>(
    e: &Expression,
    assignment: &BTreeMap<Symbol, F>,
) -> Result<F, EvalError> {
    Ok(eval_mag(e, assignment)?.0)
}

/// Evaluates and also reports the largest absolute value reached by any
/// subterm, which the zero tester uses to scale its tolerance.
pub fn evaluate_with_magnitude<F: Real>(
    e: &Expression,
    assignment: &BTreeMap<Symbol, F>,
) -> Result<(F, F), EvalError> {
    eval_mag(e, assignment)
}

fn finite<F: Real>(v: F) -> Result<F, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_mag<F: Real>(
    e: &Expression,
    assignment: &BTreeMap<Symbol, F>,
) -> Result<(F, F), EvalError> {
    let (value, mut mag) = match e {
        Expression::Rational(r) => {
            let v = F::from_f64_lossy(r.to_f64().unwrap_or(f64::NAN));
            (finite(v)?, F::zero())
        }
        Expression::Symbol(s) => {
            let v = *assignment
                .get(s)
                .ok_or_else(|| EvalError::Unassigned(s.clone()))?;
            (finite(v)?, F::zero())
        }
        Expression::Sum(terms) => {
            let mut acc = F::zero();
            let mut mag = F::zero();
            for t in terms {
                let (v, m) = eval_mag(t, assignment)?;
                acc = acc + v;
                mag = mag.max(m);
            }
            (finite(acc)?, mag)
        }
        Expression::Product(factors) => {
            let mut acc = F::one();
            let mut mag = F::zero();
            for f in factors {
                let (v, m) = eval_mag(f, assignment)?;
                acc = acc * v;
                mag = mag.max(m);
            }
            (finite(acc)?, mag)
        }
        Expression::Power(base, exp) => {
            let (b, m) = eval_mag(base, assignment)?;
            (finite(eval_power(b, exp)?)?, m)
        }
        Expression::Func(FuncHead::Exp, arg) => {
            let (v, m) = eval_mag(arg, assignment)?;
            (finite(v.exp())?, m)
        }
        Expression::Func(FuncHead::Log, arg) => {
            let (v, m) = eval_mag(arg, assignment)?;
            if v <= F::zero() {
                return Err(EvalError::Domain);
            }
            (finite(v.ln())?, m)
        }
    };
    mag = mag.max(value.abs());
    Ok((value, mag))
}

fn eval_power<F: Real>(base: F, exp: &super::Rational) -> Result<F, EvalError> {
    let num = exp
        .numer()
        .to_i64()
        .ok_or(EvalError::NonFinite)?;
    let den = exp
        .denom()
        .to_u64()
        .ok_or(EvalError::NonFinite)?;
    if base.is_zero() {
        return if num > 0 {
            Ok(F::zero())
        } else {
            Err(EvalError::DivisionByZero)
        };
    }
    if den == 1 {
        if num.unsigned_abs() <= i32::MAX as u64 {
            return Ok(base.powi(num as i32));
        }
        return Err(EvalError::NonFinite);
    }
    // fractional exponent: real n-th root, principal for positive bases,
    // sign-carrying for odd denominators
    let e = F::from_f64_lossy(num as f64 / den as f64);
    if base > F::zero() {
        return Ok(base.powf(e));
    }
    if den % 2 == 0 {
        return Err(EvalError::Domain);
    }
    let mag = base.abs().powf(e);
    if num % 2 == 0 {
        Ok(mag)
    } else {
        Ok(-mag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn assign(pairs: &[(&str, f64)]) -> BTreeMap<Symbol, f64> {
        pairs
            .iter()
            .map(|(k, v)| (Symbol::new(k), *v))
            .collect()
    }

    fn ev(e: &str, pairs: &[(&str, f64)]) -> Result<f64, EvalError> {
        evaluate(&parse_expression(e).unwrap(), &assign(pairs))
    }

    #[test]
    fn evaluates_rational_functions() {
        assert_eq!(ev("2*x/(x^2+1)", &[("x", 1.0)]).unwrap(), 1.0);
        assert_eq!(ev("exp(0)", &[]).unwrap(), 1.0);
    }

    #[test]
    fn division_by_zero_is_distinct() {
        assert_eq!(ev("k1/y", &[("k1", 1.0), ("y", 0.0)]), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn domain_errors_are_distinct() {
        assert_eq!(ev("sqrt(x)", &[("x", -1.0)]), Err(EvalError::Domain));
        assert_eq!(ev("log(x)", &[("x", -1.0)]), Err(EvalError::Domain));
    }

    #[test]
    fn unassigned_symbols_are_distinct() {
        assert_eq!(
            ev("x + z", &[("x", 1.0)]),
            Err(EvalError::Unassigned(Symbol::new("z")))
        );
    }

    #[test]
    fn odd_roots_of_negative_bases() {
        let v = ev("x^(1/3)", &[("x", -8.0)]).unwrap();
        assert!((v + 2.0).abs() < 1e-12);
    }

    #[test]
    fn magnitude_tracks_largest_subterm() {
        let e = parse_expression("x^2 - x^2 + 1").unwrap();
        // normalisation folds this to 1, so magnitude is simply 1
        let (v, m) = evaluate_with_magnitude(&e, &assign(&[("x", 100.0)])).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(m, 1.0);
    }
}
