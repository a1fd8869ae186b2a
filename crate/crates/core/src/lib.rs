//! Symbolic toolkit for linearisable second-order ODEs.
//!
//! The crate decides whether `y'' = f(x, y, y')` is linearisable by a point
//! transformation, verifies a supplied pair of symmetries and a linearising
//! change of variables, fits the two constants of the generic cubic equation
//! `X Y'' = b/3a + b^3/27a^2 + (1 + b^2/3a) Y' + b Y'^2 + a Y'^3`, and pulls
//! a universal two-parameter solution back to the original variables. A
//! verification layer checks results both by implicit differentiation and by
//! numerical integration.
//!
//! Symbolic values are exact (arbitrary-precision rationals in the tree);
//! the numeric lane (evaluation, sampling, integration) is generic over the
//! float width through [`real::Real`], defaulting to `f64`.

pub mod canonical;
pub mod expr;
pub mod lintest;
pub mod real;
pub mod symbol;
pub mod vecfield;
pub mod verify;

pub use expr::{
    differentiate, equivalent_zero, evaluate, normalise_rational, parse_expression, Expression,
    Proof, Rational, ZeroTestConfig, ZeroVerdict,
};
pub use symbol::Symbol;

/// `f64` zero-test configuration (the default lane).
pub type ZeroTestConfig64 = expr::ZeroTestConfig<f64>;
/// `f32` zero-test configuration.
pub type ZeroTestConfig32 = expr::ZeroTestConfig<f32>;
/// `f64` numeric integration check configuration.
pub type NumericCheckConfig64 = verify::NumericCheckConfig<f64>;
/// `f32` numeric integration check configuration.
pub type NumericCheckConfig32 = verify::NumericCheckConfig<f32>;
