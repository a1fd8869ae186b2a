//! Cubic-in-derivative coefficient extraction and the two invariant
//! conditions that decide linearisability by a point transformation.

use crate::expr::poly::normalise_extended;
use crate::expr::{
    differentiate, equivalent_zero, Expression, Proof, ZeroTestConfig, ZeroTestError,
};
use crate::real::Real;
use crate::vecfield::{Chart, SecondOrderODE};
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum LinTestError {
    #[error("right-hand side is not cubic in the derivative: d^4 f/dp^4 = {residual}")]
    NotCubic { residual: Expression },
    #[error("extracted coefficients fail to reconstruct the right-hand side")]
    ReconstructionFailed { difference: Expression },
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

/// The four coefficient functions of `y'' = A p^3 + B p^2 + C p + D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubicCoeffs {
    pub chart: Chart,
    pub cubic: Expression,
    pub quadratic: Expression,
    pub linear: Expression,
    pub constant: Expression,
}

impl CubicCoeffs {
    /// Reassembles `A p^3 + B p^2 + C p + D`.
    pub fn reconstruct(&self) -> Expression {
        let p = Expression::Symbol(self.chart.slope.clone());
        self.cubic.clone() * p.clone().powi(3)
            + self.quadratic.clone() * p.clone().powi(2)
            + self.linear.clone() * p
            + self.constant.clone()
    }
}

/// Extracts the cubic coefficients by differentiating in the slope symbol:
/// cubicity demands `d^4 f/dp^4 = 0` identically, after which the
/// coefficients are slope-free and the reconstruction must equal `f`.
pub fn extract_cubic<F: Real>(
    ode: &SecondOrderODE,
    cfg: &ZeroTestConfig<F>,
) -> Result<CubicCoeffs, LinTestError> {
    let slope = &ode.chart.slope;
    let f = &ode.rhs;
    let d1 = differentiate(f, slope);
    let d2 = differentiate(&d1, slope);
    let d3 = differentiate(&d2, slope);
    let d4 = differentiate(&d3, slope);
    if !equivalent_zero(&d4, cfg)?.is_zero {
        return Err(LinTestError::NotCubic {
            residual: normalise_extended(&d4),
        });
    }

    // p-constant expressions may keep a vestigial p; evaluating at p = 0 is
    // exact once cubicity holds
    let at_zero = |e: &Expression| -> Expression {
        let sub = e.substitute_symbol(slope, &Expression::zero());
        normalise_extended(&sub)
    };
    let coeffs = CubicCoeffs {
        chart: ode.chart.clone(),
        cubic: at_zero(&(d3 * Expression::rational(1, 6))),
        quadratic: at_zero(&(d2 * Expression::rational(1, 2))),
        linear: at_zero(&d1),
        constant: at_zero(f),
    };

    let difference = coeffs.reconstruct() - f.clone();
    if !equivalent_zero(&difference, cfg)?.is_zero {
        return Err(LinTestError::ReconstructionFailed {
            difference: normalise_extended(&difference),
        });
    }
    Ok(coeffs)
}

/// The two invariant residuals; both vanish identically exactly when the
/// cubic-form equation is linearisable by a point transformation.
pub fn invariant_conditions(c: &CubicCoeffs) -> (Expression, Expression) {
    let x = &c.chart.indep;
    let y = &c.chart.dep;
    let a = &c.cubic;
    let b = &c.quadratic;
    let cc = &c.linear;
    let d = &c.constant;

    let dx = |e: &Expression| differentiate(e, x);
    let dy = |e: &Expression| differentiate(e, y);
    let n = Expression::integer;

    // 3A_xx + 3A_x C - 3A_y D + 3A C_x + C_yy - 6A D_y + B C_y - 2B B_x - 2B_xy
    let r1 = n(3) * dx(&dx(a))
        + n(3) * dx(a) * cc.clone()
        - n(3) * dy(a) * d.clone()
        + n(3) * a.clone() * dx(cc)
        + dy(&dy(cc))
        - n(6) * a.clone() * dy(d)
        + b.clone() * dy(cc)
        - n(2) * b.clone() * dx(b)
        - n(2) * dy(&dx(b));

    // 6A_x D - 3B_y D + 3A D_x + B_xx - 2C_xy - 3B D_y + 3D_yy + 2C C_y - C B_x
    let r2 = n(6) * dx(a) * d.clone()
        - n(3) * dy(b) * d.clone()
        + n(3) * a.clone() * dx(d)
        + dx(&dx(b))
        - n(2) * dy(&dx(cc))
        - n(3) * b.clone() * dy(d)
        + n(3) * dy(&dy(d))
        + n(2) * cc.clone() * dy(cc)
        - cc.clone() * dx(b);

    (normalise_extended(&r1), normalise_extended(&r2))
}

/// Linearisability decision with the audit trail: coefficients, residuals,
/// and how each residual verdict was reached.
#[derive(Debug, Clone)]
pub struct LinearisabilityReport {
    pub linearisable: bool,
    pub coefficients: Option<CubicCoeffs>,
    pub residuals: Option<(Expression, Expression)>,
    pub residual_proofs: Option<(Proof, Proof)>,
    pub not_cubic: Option<String>,
}

/// Runs [`extract_cubic`] and both invariant conditions. A non-cubic
/// right-hand side yields a definitive `false` with the reason recorded.
pub fn is_linearisable<F: Real>(
    ode: &SecondOrderODE,
    cfg: &ZeroTestConfig<F>,
) -> Result<LinearisabilityReport, LinTestError> {
    let coeffs = match extract_cubic(ode, cfg) {
        Ok(c) => c,
        Err(LinTestError::NotCubic { residual }) => {
            return Ok(LinearisabilityReport {
                linearisable: false,
                coefficients: None,
                residuals: None,
                residual_proofs: None,
                not_cubic: Some(format!("fourth derivative in the slope is {residual}")),
            })
        }
        Err(e) => return Err(e),
    };
    let (r1, r2) = invariant_conditions(&coeffs);
    let v1 = equivalent_zero(&r1, cfg)?;
    let v2 = equivalent_zero(&r2, cfg)?;
    Ok(LinearisabilityReport {
        linearisable: v1.is_zero && v2.is_zero,
        coefficients: Some(coeffs),
        residuals: Some((r1, r2)),
        residual_proofs: Some((v1.proof, v2.proof)),
        not_cubic: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::expr::poly::is_exactly_zero;

    fn p(s: &str) -> Expression {
        parse_expression(s).unwrap()
    }

    fn cfg() -> ZeroTestConfig {
        ZeroTestConfig::default()
    }

    #[test]
    fn emden_coefficients() {
        let ode = SecondOrderODE::in_xy(p("-3*y*p - y^3"));
        let c = extract_cubic(&ode, &cfg()).unwrap();
        assert!(c.cubic.is_zero());
        assert!(c.quadratic.is_zero());
        assert_eq!(c.linear, p("-3*y"));
        assert_eq!(c.constant, p("-y^3"));
    }

    #[test]
    fn kamke_6_180_coefficients() {
        // (y-1)^2 x^2 y'' = 2 p^2 x^2 + p (y-1) x + 2 y (y-1)^2, solved for y''
        let ode = SecondOrderODE::in_xy(p(
            "(2*x^2*p^2 + x*(y - 1)*p + 2*y*(y - 1)^2)/(x^2*(y - 1)^2)",
        ));
        let c = extract_cubic(&ode, &cfg()).unwrap();
        assert!(c.cubic.is_zero());
        assert!(is_exactly_zero(&(c.quadratic - p("2/(y - 1)^2"))));
        assert!(is_exactly_zero(&(c.linear - p("1/(x*(y - 1))"))));
        assert!(is_exactly_zero(&(c.constant - p("2*y/x^2"))));
    }

    #[test]
    fn quartic_rhs_is_rejected() {
        let ode = SecondOrderODE::in_xy(p("p^4"));
        assert!(matches!(
            extract_cubic(&ode, &cfg()),
            Err(LinTestError::NotCubic { .. })
        ));
    }

    #[test]
    fn emden_invariant_conditions_vanish() {
        // R1 = C_yy = 0 and R2 = 3 D_yy + 2 C C_y = -18y + 18y = 0
        let ode = SecondOrderODE::in_xy(p("-3*y*p - y^3"));
        let c = extract_cubic(&ode, &cfg()).unwrap();
        let (r1, r2) = invariant_conditions(&c);
        assert!(r1.is_zero(), "r1 = {r1}");
        assert!(r2.is_zero(), "r2 = {r2}");
    }

    #[test]
    fn y_squared_fails_with_residual_minus_six() {
        // A = B = C = 0, D = -y^2: R2 = 3 D_yy = -6
        let ode = SecondOrderODE::in_xy(p("-y^2"));
        let c = extract_cubic(&ode, &cfg()).unwrap();
        let (r1, r2) = invariant_conditions(&c);
        assert!(r1.is_zero());
        assert_eq!(r2, Expression::integer(-6));
        let report = is_linearisable(&ode, &cfg()).unwrap();
        assert!(!report.linearisable);
    }

    #[test]
    fn free_particle_is_linearisable() {
        let ode = SecondOrderODE::in_xy(Expression::zero());
        let report = is_linearisable(&ode, &cfg()).unwrap();
        assert!(report.linearisable);
        let (r1, r2) = report.residuals.unwrap();
        assert!(r1.is_zero() && r2.is_zero());
    }

    #[test]
    fn reconstruction_is_identity_on_cubic_forms() {
        let ode = SecondOrderODE::in_xy(p("x*p^3 + (x + y)*p^2 - p/y + exp(x)"));
        let c = extract_cubic(&ode, &cfg()).unwrap();
        let diff = c.reconstruct() - ode.rhs;
        assert!(equivalent_zero(&diff, &cfg()).unwrap().is_zero);
    }
}
