//! Plane vector fields, second prolongations, point-symmetry verification,
//! commutators, and the admissibility test for symmetry pairs.

use crate::expr::{differentiate, equivalent_zero, Expression, ZeroTestConfig, ZeroTestError};
use crate::real::Real;
use crate::symbol::Symbol;
use std::collections::BTreeMap;
use thiserror::Error;

/// Names of a plane chart: independent and dependent variable plus the
/// reserved symbol standing for the first derivative.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Chart {
    pub indep: Symbol,
    pub dep: Symbol,
    pub slope: Symbol,
}

impl Chart {
    pub fn new(indep: &str, dep: &str, slope: &str) -> Self {
        Chart {
            indep: Symbol::new(indep),
            dep: Symbol::new(dep),
            slope: Symbol::new(slope),
        }
    }

    /// The source chart `(x, y)` with slope `p`.
    pub fn xy() -> Self {
        Chart::new("x", "y", "p")
    }

    /// The canonical target chart `(X, Y)` with slope `P`.
    pub fn canonical() -> Self {
        Chart::new("X", "Y", "P")
    }

    /// The free-particle chart `(Z, W)` with slope `Q`.
    pub fn free_particle() -> Self {
        Chart::new("Z", "W", "Q")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VecFieldError {
    #[error("vector field component references the slope symbol `{0}`")]
    SlopeInComponent(Symbol),
    #[error("both components are identically zero")]
    ZeroField,
}

/// Infinitesimal generator `xi d/dx + eta d/dy` on a chart.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VectorField {
    pub chart: Chart,
    pub xi: Expression,
    pub eta: Expression,
}

impl VectorField {
    pub fn new(chart: Chart, xi: Expression, eta: Expression) -> Result<Self, VecFieldError> {
        if xi.contains_symbol(&chart.slope) || eta.contains_symbol(&chart.slope) {
            return Err(VecFieldError::SlopeInComponent(chart.slope.clone()));
        }
        if xi.is_zero() && eta.is_zero() {
            return Err(VecFieldError::ZeroField);
        }
        Ok(VectorField { chart, xi, eta })
    }

    pub fn in_xy(xi: Expression, eta: Expression) -> Result<Self, VecFieldError> {
        VectorField::new(Chart::xy(), xi, eta)
    }

    /// Applies the field as a derivation to a scalar function of the chart.
    pub fn apply(&self, g: &Expression) -> Expression {
        self.xi.clone() * differentiate(g, &self.chart.indep)
            + self.eta.clone() * differentiate(g, &self.chart.dep)
    }

    pub fn scale(&self, c: &Expression) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            xi: c.clone() * self.xi.clone(),
            eta: c.clone() * self.eta.clone(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.chart, other.chart, "chart mismatch in field sum");
        VectorField {
            chart: self.chart.clone(),
            xi: self.xi.clone() + other.xi.clone(),
            eta: self.eta.clone() + other.eta.clone(),
        }
    }

    pub fn is_zero_field(&self) -> bool {
        self.xi.is_zero() && self.eta.is_zero()
    }
}

/// Second-order ODE `y'' = rhs(x, y, p)` on a chart.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SecondOrderODE {
    pub chart: Chart,
    pub rhs: Expression,
}

impl SecondOrderODE {
    pub fn new(chart: Chart, rhs: Expression) -> Self {
        SecondOrderODE { chart, rhs }
    }

    pub fn in_xy(rhs: Expression) -> Self {
        SecondOrderODE::new(Chart::xy(), rhs)
    }
}

/// Second prolongation of a point field, with the on-shell replacement
/// `y'' -> f` already applied in the second extension coefficient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProlongedField {
    pub chart: Chart,
    pub xi: Expression,
    pub eta: Expression,
    pub eta1: Expression,
    pub eta2: Expression,
}

/// Second prolongation:
/// `eta1 = eta_x + (eta_y - xi_x) p - xi_y p^2`,
/// `eta2 = D(eta1) - f * D(xi)` with `D = d/dx + p d/dy + f d/dp`.
pub fn prolong2(v: &VectorField, ode: &SecondOrderODE) -> ProlongedField {
    assert_eq!(v.chart, ode.chart, "chart mismatch in prolongation");
    let x = &v.chart.indep;
    let y = &v.chart.dep;
    let p = Expression::Symbol(v.chart.slope.clone());
    let f = &ode.rhs;

    let xi_x = differentiate(&v.xi, x);
    let xi_y = differentiate(&v.xi, y);
    let eta_x = differentiate(&v.eta, x);
    let eta_y = differentiate(&v.eta, y);

    let eta1 = eta_x.clone()
        + (eta_y - xi_x.clone()) * p.clone()
        + xi_y.clone().neg() * p.clone().powi(2);

    let total = |g: &Expression| -> Expression {
        differentiate(g, x)
            + p.clone() * differentiate(g, y)
            + f.clone() * differentiate(g, &v.chart.slope)
    };
    let eta2 = total(&eta1) - f.clone() * (xi_x + p * xi_y);

    ProlongedField {
        chart: v.chart.clone(),
        xi: v.xi.clone(),
        eta: v.eta.clone(),
        eta1,
        eta2,
    }
}

/// Residual of the invariance condition
/// `eta2 - xi f_x - eta f_y - eta1 f_p`; the field is a point symmetry of
/// the ODE precisely when this vanishes identically.
pub fn symmetry_residual(v: &VectorField, ode: &SecondOrderODE) -> Expression {
    let pr = prolong2(v, ode);
    let f = &ode.rhs;
    pr.eta2
        - v.xi.clone() * differentiate(f, &v.chart.indep)
        - v.eta.clone() * differentiate(f, &v.chart.dep)
        - pr.eta1 * differentiate(f, &v.chart.slope)
}

pub fn is_point_symmetry<F: Real>(
    v: &VectorField,
    ode: &SecondOrderODE,
    cfg: &ZeroTestConfig<F>,
) -> Result<bool, ZeroTestError> {
    Ok(equivalent_zero(&symmetry_residual(v, ode), cfg)?.is_zero)
}

/// Lie bracket `[v, w]`: components `v(w.xi) - w(v.xi)`, `v(w.eta) - w(v.eta)`.
pub fn commutator(v: &VectorField, w: &VectorField) -> VectorField {
    assert_eq!(v.chart, w.chart, "chart mismatch in commutator");
    VectorField {
        chart: v.chart.clone(),
        xi: v.apply(&w.xi) - w.apply(&v.xi),
        eta: v.apply(&w.eta) - w.apply(&v.eta),
    }
}

/// True when the fields are parallel as direction fields, i.e. the
/// determinant `xi_v eta_w - xi_w eta_v` vanishes identically.
pub fn is_proportional<F: Real>(
    v: &VectorField,
    w: &VectorField,
    cfg: &ZeroTestConfig<F>,
) -> Result<bool, ZeroTestError> {
    let det = v.xi.clone() * w.eta.clone() - w.xi.clone() * v.eta.clone();
    Ok(equivalent_zero(&det, cfg)?.is_zero)
}

/// Outcome of the four admissibility sub-checks for a symmetry pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiePairReport {
    pub v1_is_symmetry: bool,
    pub v2_is_symmetry: bool,
    pub commutator_is_v1: bool,
    pub not_proportional: bool,
}

impl LiePairReport {
    pub fn admissible(&self) -> bool {
        self.v1_is_symmetry && self.v2_is_symmetry && self.commutator_is_v1 && self.not_proportional
    }

    pub fn as_flags(&self) -> [bool; 4] {
        [
            self.v1_is_symmetry,
            self.v2_is_symmetry,
            self.commutator_is_v1,
            self.not_proportional,
        ]
    }
}

/// Checks that `(v1, v2)` is an admissible pair for the ODE: both are
/// symmetries, `[v1, v2] = v1`, and the fields are not proportional.
pub fn check_lie_pair<F: Real>(
    v1: &VectorField,
    v2: &VectorField,
    ode: &SecondOrderODE,
    cfg: &ZeroTestConfig<F>,
) -> Result<LiePairReport, ZeroTestError> {
    let v1_is_symmetry = is_point_symmetry(v1, ode, cfg)?;
    let v2_is_symmetry = is_point_symmetry(v2, ode, cfg)?;
    let bracket = commutator(v1, v2);
    let commutator_is_v1 = equivalent_zero(&(bracket.xi.clone() - v1.xi.clone()), cfg)?.is_zero
        && equivalent_zero(&(bracket.eta.clone() - v1.eta.clone()), cfg)?.is_zero;
    let not_proportional = !is_proportional(v1, v2, cfg)?;
    Ok(LiePairReport {
        v1_is_symmetry,
        v2_is_symmetry,
        commutator_is_v1,
        not_proportional,
    })
}

/// Serialises a field as `{"xi": ..., "eta": ...}` strings in the grammar.
pub fn field_to_strings(v: &VectorField) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("xi".to_string(), v.xi.to_string());
    m.insert("eta".to_string(), v.eta.to_string());
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn p(s: &str) -> Expression {
        parse_expression(s).unwrap()
    }

    fn field(xi: &str, eta: &str) -> VectorField {
        VectorField::in_xy(p(xi), p(eta)).unwrap()
    }

    fn cfg() -> ZeroTestConfig {
        ZeroTestConfig::default()
    }

    /// Modified Emden equation y'' = -3yp - y^3.
    fn emden() -> SecondOrderODE {
        SecondOrderODE::in_xy(p("-3*y*p - y^3"))
    }

    #[test]
    fn rejects_slope_in_components() {
        assert!(matches!(
            VectorField::in_xy(p("p"), p("1")),
            Err(VecFieldError::SlopeInComponent(_))
        ));
        assert!(matches!(
            VectorField::in_xy(p("0"), p("0")),
            Err(VecFieldError::ZeroField)
        ));
    }

    #[test]
    fn translation_prolongs_trivially() {
        let v = field("1", "0");
        let pr = prolong2(&v, &emden());
        assert!(pr.eta1.is_zero());
        assert!(pr.eta2.is_zero());
    }

    #[test]
    fn scaling_field_prolongation_matches_hand_computation() {
        // v = x d/dx - y d/dy: eta1 = -2p, eta2 = -3f on shell
        let v = field("x", "-y");
        let ode = emden();
        let pr = prolong2(&v, &ode);
        assert_eq!(pr.eta1, p("-2*p"));
        let want = Expression::integer(-3) * ode.rhs.clone();
        assert!(crate::expr::poly::is_exactly_zero(&(pr.eta2 - want)));
    }

    #[test]
    fn x_scaling_on_free_particle() {
        // v = x d/dx on y'' = 0: eta1 = -p and eta2 vanishes on shell
        let v = field("x", "0");
        let ode = SecondOrderODE::in_xy(Expression::zero());
        let pr = prolong2(&v, &ode);
        assert_eq!(pr.eta1, p("-p"));
        assert!(pr.eta2.is_zero());
    }

    #[test]
    fn emden_symmetries_verify() {
        let ode = emden();
        assert!(is_point_symmetry(&field("1", "0"), &ode, &cfg()).unwrap());
        assert!(is_point_symmetry(&field("x", "-y"), &ode, &cfg()).unwrap());
        // d/dy is not a symmetry; residual 3p + 3y^2
        let v = field("0", "1");
        assert!(!is_point_symmetry(&v, &ode, &cfg()).unwrap());
        let res = symmetry_residual(&v, &ode);
        assert!(
            crate::expr::poly::is_exactly_zero(&(res - p("3*p + 3*y^2"))),
            "residual should be 3p + 3y^2 up to sign convention"
        );
    }

    #[test]
    fn commutators_match_hand_values() {
        // [d/dx, x d/dx - y d/dy] = d/dx
        let b = commutator(&field("1", "0"), &field("x", "-y"));
        assert_eq!(b.xi, p("1"));
        assert!(b.eta.is_zero());
        // [v, v] = 0
        let v = field("x^2", "x*y");
        let b = commutator(&v, &v);
        assert!(b.is_zero_field());
        // [d/dZ, Z d/dZ] = d/dZ on the free-particle chart
        let zw = Chart::free_particle();
        let o1 = VectorField::new(zw.clone(), p("1"), p("0")).unwrap();
        let o3 = VectorField::new(zw, p("Z"), p("0")).unwrap();
        let b = commutator(&o1, &o3);
        assert_eq!(b.xi, p("1"));
        assert!(b.eta.is_zero());
    }

    #[test]
    fn proportionality_detection() {
        // d/dx vs x d/dx - y d/dy: determinant -y, not identically zero
        assert!(!is_proportional(&field("1", "0"), &field("x", "-y"), &cfg()).unwrap());
        // v vs 3v
        let v = field("x", "y^2");
        let w = v.scale(&Expression::integer(3));
        assert!(is_proportional(&v, &w, &cfg()).unwrap());
        // y d/dx vs x y d/dx: parallel with non-constant ratio
        assert!(is_proportional(&field("y", "0"), &field("x*y", "0"), &cfg()).unwrap());
    }

    #[test]
    fn emden_pair_is_admissible() {
        let report = check_lie_pair(&field("1", "0"), &field("x", "-y"), &emden(), &cfg()).unwrap();
        assert!(report.admissible(), "report: {report:?}");
    }

    #[test]
    fn proportional_pair_is_rejected() {
        let report = check_lie_pair(&field("1", "0"), &field("2", "0"), &emden(), &cfg()).unwrap();
        assert!(!report.admissible());
        assert!(!report.not_proportional);
    }
}
