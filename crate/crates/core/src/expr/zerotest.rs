//! Probabilistic zero-equivalence testing.
//!
//! Exact first: an expression that reduces to the zero polynomial over the
//! extended generator algebra is identically zero. Everything else is
//! sampled at seeded random points; evaluation errors (poles, branch cuts)
//! trigger resampling so restricted domains do not produce spurious
//! failures. Verdicts are deterministic for a fixed seed: the per-call
//! generator is derived from the seed and a stable hash of the expression,
//! which also keeps concurrent callers reproducible.

use super::poly::is_exactly_zero;
use super::{evaluate_with_magnitude, Expression};
use crate::real::Real;
use crate::symbol::Symbol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZeroTestError {
    #[error("inconclusive: only {obtained} of {needed} samples avoided singularities")]
    Inconclusive { needed: usize, obtained: usize },
    #[error("invalid zero-test configuration: {0}")]
    InvalidConfig(String),
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proof {
    /// Reduced to the literal zero polynomial; no sampling involved.
    Exact,
    /// Held (or failed) at this many random sample points.
    Sampled(usize),
}

#[derive(Debug, Clone)]
pub struct ZeroVerdict<F: Real = f64> {
    pub is_zero: bool,
    pub proof: Proof,
    /// Failing assignment when `is_zero` is false.
    pub witness: Option<BTreeMap<Symbol, F>>,
}

impl<F: Real> ZeroVerdict<F> {
    pub fn is_exact(&self) -> bool {
        matches!(self.proof, Proof::Exact)
    }
}

/// Configuration for [`equivalent_zero`].
#[derive(Debug, Clone)]
pub struct ZeroTestConfig<F: Real = f64> {
    pub sample_count: usize,
    /// Relative tolerance: a sample passes when
    /// `|value| <= tolerance * (1 + max |subterm|)`.
    pub tolerance: F,
    pub default_box: (F, F),
    pub symbol_boxes: BTreeMap<Symbol, (F, F)>,
    pub rng_seed: u64,
    pub max_retries: usize,
}

impl Default for ZeroTestConfig<f64> {
    fn default() -> Self {
        ZeroTestConfig {
            sample_count: 24,
            tolerance: 1e-8,
            default_box: (-2.0, 2.0),
            symbol_boxes: BTreeMap::new(),
            rng_seed: 0x0d_e1_1a,
            max_retries: 200,
        }
    }
}

impl<F: Real> ZeroTestConfig<F> {
    pub fn new(sample_count: usize, tolerance: F, rng_seed: u64) -> Result<Self, ZeroTestError> {
        let cfg = ZeroTestConfig {
            sample_count,
            tolerance,
            default_box: (F::from_f64_lossy(-2.0), F::from_f64_lossy(2.0)),
            symbol_boxes: BTreeMap::new(),
            rng_seed,
            max_retries: 200,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ZeroTestError> {
        if self.sample_count < 8 {
            return Err(ZeroTestError::InvalidConfig(
                "sample_count must be at least 8".into(),
            ));
        }
        let tol = self.tolerance.to_f64().unwrap_or(f64::NAN);
        if !(tol > 0.0 && tol <= 1e-4) {
            return Err(ZeroTestError::InvalidConfig(
                "tolerance must lie in (0, 1e-4]".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        assert!(n >= 8, "sample_count must be at least 8");
        self.sample_count = n;
        self
    }

    /// Restricts the sampling interval for one symbol.
    pub fn with_symbol_box(mut self, sym: impl Into<Symbol>, lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty sampling box");
        self.symbol_boxes
            .insert(sym.into(), (F::from_f64_lossy(lo), F::from_f64_lossy(hi)));
        self
    }

    fn box_for(&self, sym: &Symbol) -> (F, F) {
        self.symbol_boxes
            .get(sym)
            .copied()
            .unwrap_or(self.default_box)
    }
}

/// Stable 64-bit hash of the canonical printed form (FNV-1a).
fn stable_hash(e: &Expression) -> u64 {
    let text = e.to_string();
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Decides whether `e` is identically zero.
///
/// Exact reduction first; otherwise seeded sampling over the configured
/// boxes. A `false` verdict carries the failing assignment as witness.
pub fn equivalent_zero<F: Real>(
    e: &Expression,
    cfg: &ZeroTestConfig<F>,
) -> Result<ZeroVerdict<F>, ZeroTestError> {
    cfg.validate()?;
    if is_exactly_zero(e) {
        return Ok(ZeroVerdict {
            is_zero: true,
            proof: Proof::Exact,
            witness: None,
        });
    }

    let symbols: Vec<Symbol> = e.free_symbols().into_iter().collect();
    let seed = cfg.rng_seed ^ stable_hash(e).rotate_left(17);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut obtained = 0usize;
    for _ in 0..cfg.sample_count {
        let mut accepted = false;
        for _ in 0..cfg.max_retries.max(1) {
            let mut assignment: BTreeMap<Symbol, F> = BTreeMap::new();
            for s in &symbols {
                let (lo, hi) = cfg.box_for(s);
                let t = F::from_f64_lossy(rng.gen::<f64>());
                assignment.insert(s.clone(), lo + (hi - lo) * t);
            }
            match evaluate_with_magnitude(e, &assignment) {
                Ok((value, magnitude)) => {
                    let bound = cfg.tolerance * (F::one() + magnitude);
                    if value.abs() > bound {
                        return Ok(ZeroVerdict {
                            is_zero: false,
                            proof: Proof::Sampled(obtained + 1),
                            witness: Some(assignment),
                        });
                    }
                    obtained += 1;
                    accepted = true;
                    break;
                }
                Err(_) => continue,
            }
        }
        if !accepted {
            return Err(ZeroTestError::Inconclusive {
                needed: cfg.sample_count,
                obtained,
            });
        }
    }

    Ok(ZeroVerdict {
        is_zero: true,
        proof: Proof::Sampled(obtained),
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn p(s: &str) -> Expression {
        parse_expression(s).unwrap()
    }

    fn check(s: &str) -> ZeroVerdict {
        equivalent_zero(&p(s), &ZeroTestConfig::default()).unwrap()
    }

    #[test]
    fn exact_for_rational_identities() {
        let v = check("(x + y)^2 - x^2 - 2*x*y - y^2");
        assert!(v.is_zero);
        assert!(v.is_exact());
    }

    #[test]
    fn sampled_truth_for_transcendental_identities() {
        let v = check("exp(x)*exp(-x) - 1");
        assert!(v.is_zero);
    }

    #[test]
    fn false_with_witness() {
        let v = check("x*y - 1");
        assert!(!v.is_zero);
        let w = v.witness.expect("witness expected");
        let x = w[&Symbol::new("x")];
        let y = w[&Symbol::new("y")];
        assert!((x * y - 1.0).abs() > 1e-8);
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let e = p("x*y - 1");
        let cfg = ZeroTestConfig::default().with_seed(7);
        let a = equivalent_zero(&e, &cfg).unwrap();
        let b = equivalent_zero(&e, &cfg).unwrap();
        assert_eq!(a.is_zero, b.is_zero);
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn resamples_through_singularities() {
        // log(y) errors on half the box; valid samples all agree
        let v = check("log(y^2) - 2*log(y)");
        assert!(v.is_zero);
        assert!(!v.is_exact());
    }

    #[test]
    fn respects_symbol_boxes() {
        // sqrt(x^2) = x only on x > 0
        let cfg = ZeroTestConfig::default().with_symbol_box("x", 0.1, 2.0);
        let v = equivalent_zero(&p("sqrt(x^2) - x"), &cfg).unwrap();
        assert!(v.is_zero);
        let cfg = ZeroTestConfig::default();
        let v = equivalent_zero(&p("sqrt(x^2) - x"), &cfg).unwrap();
        assert!(!v.is_zero);
    }

    #[test]
    fn config_validation() {
        assert!(ZeroTestConfig::<f64>::new(4, 1e-8, 0).is_err());
        assert!(ZeroTestConfig::<f64>::new(24, 1e-3, 0).is_err());
        assert!(ZeroTestConfig::<f64>::new(24, 1e-8, 0).is_ok());
    }
}
