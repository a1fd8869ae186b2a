//! Sparse multivariate polynomial layer behind rational-function
//! normalisation and exact zero detection.
//!
//! Expressions are flattened to `num/den` pairs of polynomials over a set of
//! *generators*: plain symbols, fractional powers (`base^(1/n)`, carrying the
//! rewrite rule `g^n = base`), exponentials keyed by the primitive part of
//! their argument (so `exp(-b/2)^2` and `exp(-b)^-1` meet in one generator),
//! and opaque logarithms. Reduction by the root rules makes identities such
//! as `sqrt(u)^2 - u` vanish exactly; what survives is handled by sampling in
//! the zero tester.

use super::{rational_gcd, Expression, FuncHead, Rational};
use crate::symbol::Symbol;
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

const MAX_INT_POW: i64 = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("division by an identically zero denominator")]
    ZeroDenominator,
    #[error("exponent too large for polynomial expansion")]
    ExponentOverflow,
}

/// A power-product of generators; exponents are strictly positive.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub(crate) struct Monomial(BTreeMap<usize, u32>);

impl Monomial {
    fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    fn of(gen: usize, exp: u32) -> Self {
        let mut m = BTreeMap::new();
        if exp > 0 {
            m.insert(gen, exp);
        }
        Monomial(m)
    }

    fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (g, e) in &other.0 {
            *out.entry(*g).or_insert(0) += e;
        }
        Monomial(out)
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().all(|(g, e)| other.0.get(g).copied().unwrap_or(0) >= *e)
    }

    fn div(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (g, e) in &other.0 {
            let cur = out.get_mut(g).expect("monomial division underflow");
            *cur -= e;
            if *cur == 0 {
                out.remove(g);
            }
        }
        Monomial(out)
    }

    fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = BTreeMap::new();
        for (g, e) in &self.0 {
            if let Some(oe) = other.0.get(g) {
                out.insert(*g, (*e).min(*oe));
            }
        }
        Monomial(out)
    }

    fn degree_of(&self, gen: usize) -> u32 {
        self.0.get(&gen).copied().unwrap_or(0)
    }

    fn without(&self, gen: usize) -> Monomial {
        let mut out = self.0.clone();
        out.remove(&gen);
        Monomial(out)
    }
}

impl Ord for Monomial {
    /// Lexicographic by generator id: an admissible monomial order.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let mut ids: Vec<usize> = self.0.keys().chain(other.0.keys()).copied().collect();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            let a = self.degree_of(id);
            let b = other.degree_of(id);
            if a != b {
                return a.cmp(&b);
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial with rational coefficients.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub(crate) struct MultiPoly(BTreeMap<Monomial, Rational>);

impl MultiPoly {
    pub(crate) fn zero() -> Self {
        MultiPoly(BTreeMap::new())
    }

    fn one() -> Self {
        MultiPoly::constant(Rational::one())
    }

    fn constant(r: Rational) -> Self {
        let mut m = BTreeMap::new();
        if !r.is_zero() {
            m.insert(Monomial::one(), r);
        }
        MultiPoly(m)
    }

    fn gen(id: usize) -> Self {
        let mut m = BTreeMap::new();
        m.insert(Monomial::of(id, 1), Rational::one());
        MultiPoly(m)
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn as_constant(&self) -> Option<Rational> {
        if self.0.is_empty() {
            return Some(Rational::zero());
        }
        if self.0.len() == 1 {
            if let Some(c) = self.0.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    fn insert_add(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn add(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.insert_add(m.clone(), c.clone());
        }
        out
    }

    fn neg(&self) -> MultiPoly {
        MultiPoly(self.0.iter().map(|(m, c)| (m.clone(), -c.clone())).collect())
    }

    fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.add(&other.neg())
    }

    fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                out.insert_add(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }

    fn scale(&self, r: &Rational) -> MultiPoly {
        if r.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly(
            self.0
                .iter()
                .map(|(m, c)| (m.clone(), c.clone() * r.clone()))
                .collect(),
        )
    }

    fn mul_monomial(&self, mono: &Monomial, coeff: &Rational) -> MultiPoly {
        MultiPoly(
            self.0
                .iter()
                .map(|(m, c)| (m.mul(mono), c.clone() * coeff.clone()))
                .collect(),
        )
    }

    fn pow(&self, n: u32) -> MultiPoly {
        let mut out = MultiPoly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                out = out.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.0.iter().next_back()
    }

    /// Rational content carrying the sign of the leading coefficient.
    fn content(&self) -> Rational {
        let mut c = Rational::zero();
        for coeff in self.0.values() {
            c = rational_gcd(&c, coeff);
        }
        if let Some((_, lead)) = self.leading() {
            if lead.is_negative() {
                c = -c;
            }
        }
        c
    }

    /// Common monomial factor of all terms.
    fn monomial_content(&self) -> Monomial {
        let mut iter = self.0.keys();
        let mut acc = match iter.next() {
            Some(m) => m.clone(),
            None => return Monomial::one(),
        };
        for m in iter {
            acc = acc.gcd(m);
            if acc.is_one() {
                break;
            }
        }
        acc
    }

    fn div_monomial(&self, mono: &Monomial) -> MultiPoly {
        MultiPoly(
            self.0
                .iter()
                .map(|(m, c)| (m.div(mono), c.clone()))
                .collect(),
        )
    }

    fn degree_in(&self, gen: usize) -> u32 {
        self.0.keys().map(|m| m.degree_of(gen)).max().unwrap_or(0)
    }

    fn gens_used(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .0
            .keys()
            .flat_map(|m| m.0.keys().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Univariate view in `gen`: exponent -> coefficient polynomial.
    fn coeffs_in(&self, gen: usize) -> BTreeMap<u32, MultiPoly> {
        let mut out: BTreeMap<u32, MultiPoly> = BTreeMap::new();
        for (m, c) in &self.0 {
            let d = m.degree_of(gen);
            out.entry(d)
                .or_insert_with(MultiPoly::zero)
                .insert_add(m.without(gen), c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    pub(crate) fn term_count(&self) -> usize {
        self.0.len()
    }
}

/// Exact multivariate division; `None` when `b` does not divide `a`.
fn exact_div(a: &MultiPoly, b: &MultiPoly) -> Option<MultiPoly> {
    if a.is_zero() {
        return Some(MultiPoly::zero());
    }
    let (lmb, lcb) = b.leading()?;
    let mut rem = a.clone();
    let mut quot = MultiPoly::zero();
    while !rem.is_zero() {
        let (lma, lca) = rem.leading().unwrap();
        if !lmb.divides(lma) {
            return None;
        }
        let qm = lma.div(lmb);
        let qc = lca.clone() / lcb.clone();
        quot.insert_add(qm.clone(), qc.clone());
        rem = rem.sub(&b.mul_monomial(&qm, &qc));
    }
    Some(quot)
}

/// Pseudo-remainder of `f` by `g` with respect to `gen`.
fn pseudo_rem(f: &MultiPoly, g: &MultiPoly, gen: usize) -> MultiPoly {
    let dg = g.degree_in(gen);
    let lc_g = g
        .coeffs_in(gen)
        .remove(&dg)
        .expect("leading coefficient missing");
    let mut r = f.clone();
    while !r.is_zero() {
        let dr = r.degree_in(gen);
        if dr < dg {
            break;
        }
        let lc_r = r.coeffs_in(gen).remove(&dr).expect("coefficient missing");
        // r <- lc_g * r - lc_r * v^(dr-dg) * g
        let shift = Monomial::of(gen, dr - dg);
        r = r
            .mul(&lc_g)
            .sub(&g.mul(&lc_r).mul_monomial(&shift, &Rational::one()));
    }
    r
}

/// Content of `p` viewed as univariate in `gen` (gcd of its coefficients).
fn content_in(p: &MultiPoly, gen: usize) -> MultiPoly {
    let coeffs = p.coeffs_in(gen);
    let mut acc = MultiPoly::zero();
    for c in coeffs.values() {
        acc = poly_gcd(&acc, c);
        if acc.as_constant().map(|r| r.is_one()).unwrap_or(false) {
            break;
        }
    }
    acc
}

/// Multivariate gcd by primitive pseudo-remainder sequences. The result is
/// canonical up to sign: primitive with a positive leading coefficient, times
/// the rational content gcd.
pub(crate) fn poly_gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() {
        return sign_canonical(b.clone());
    }
    if b.is_zero() {
        return sign_canonical(a.clone());
    }
    if let (Some(ca), Some(cb)) = (a.as_constant(), b.as_constant()) {
        return MultiPoly::constant(rational_gcd(&ca, &cb).abs());
    }
    // shared monomial factor first
    let mono = a.monomial_content().gcd(&b.monomial_content());
    let a = a.div_monomial(&mono);
    let b = b.div_monomial(&mono);

    let shared: Vec<usize> = {
        let ga = a.gens_used();
        let gb = b.gens_used();
        ga.into_iter().filter(|g| gb.contains(g)).collect()
    };
    let var = shared
        .iter()
        .min_by_key(|g| a.degree_in(**g).min(b.degree_in(**g)))
        .copied();
    let var = match var {
        Some(v) => v,
        None => {
            let g = MultiPoly::constant(rational_gcd(&a.content(), &b.content()).abs());
            return g.mul_monomial(&mono, &Rational::one());
        }
    };

    let cont_a = content_in(&a, var);
    let cont_b = content_in(&b, var);
    let prim_a = exact_div(&a, &cont_a).expect("content must divide");
    let prim_b = exact_div(&b, &cont_b).expect("content must divide");
    let cont_gcd = poly_gcd(&cont_a, &cont_b);

    let (mut f, mut g) = if prim_a.degree_in(var) >= prim_b.degree_in(var) {
        (prim_a, prim_b)
    } else {
        (prim_b, prim_a)
    };
    loop {
        let r = pseudo_rem(&f, &g, var);
        if r.is_zero() {
            break;
        }
        if r.degree_in(var) == 0 {
            // coprime in the main variable
            g = MultiPoly::one();
            break;
        }
        let cont_r = content_in(&r, var);
        f = g;
        g = exact_div(&r, &cont_r).expect("content must divide");
    }
    let g = make_canonical(g);
    cont_gcd.mul(&g).mul_monomial(&mono, &Rational::one())
}

/// Divides out the rational content, leaving a positive leading coefficient.
fn make_canonical(p: MultiPoly) -> MultiPoly {
    if p.is_zero() {
        return p;
    }
    let c = p.content();
    p.scale(&(Rational::one() / c))
}

/// Flips the overall sign so the leading coefficient is positive; keeps the
/// rational content (gcds track contents, so `gcd(0, 2x+2)` stays `2x+2`).
fn sign_canonical(p: MultiPoly) -> MultiPoly {
    match p.leading() {
        Some((_, c)) if c.is_negative() => p.neg(),
        _ => p,
    }
}

/// Generator kinds. `Root` carries the rewrite `g^degree = num/den`.
#[derive(Clone, Debug)]
enum Generator {
    Sym(Symbol),
    Root {
        base: Expression,
        degree: u32,
        rel_num: MultiPoly,
        rel_den: MultiPoly,
    },
    Exp {
        primitive: Expression,
        denom: BigInt,
    },
    Log {
        arg: Expression,
    },
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum GenKey {
    Sym(Symbol),
    Root(Expression, u32),
    Exp(Expression),
    Log(Expression),
}

/// A `num/den` pair of polynomials over a shared generator table.
#[derive(Clone, Debug)]
pub(crate) struct RatPoly {
    pub(crate) num: MultiPoly,
    pub(crate) den: MultiPoly,
}

impl RatPoly {
    fn constant(r: Rational) -> Self {
        RatPoly {
            num: MultiPoly::constant(r),
            den: MultiPoly::one(),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

/// Conversion context: owns the generator table and the arithmetic that
/// keeps polynomials reduced with respect to the root rewrite rules.
pub(crate) struct PolyContext {
    gens: Vec<Generator>,
    by_key: HashMap<GenKey, usize>,
    /// primitive exp argument -> least common multiple of the denominators
    /// under which it occurs
    exp_denoms: HashMap<Expression, BigInt>,
}

impl PolyContext {
    /// Prescans the expressions so that all `exp` occurrences of a shared
    /// primitive argument land on one generator.
    pub(crate) fn new(roots: &[&Expression]) -> Self {
        let mut ctx = PolyContext {
            gens: Vec::new(),
            by_key: HashMap::new(),
            exp_denoms: HashMap::new(),
        };
        for r in roots {
            ctx.scan_exp(r);
        }
        ctx
    }

    fn scan_exp(&mut self, e: &Expression) {
        match e {
            Expression::Rational(_) | Expression::Symbol(_) => {}
            Expression::Sum(cs) | Expression::Product(cs) => {
                for c in cs {
                    self.scan_exp(c);
                }
            }
            Expression::Power(base, _) => self.scan_exp(base),
            Expression::Func(FuncHead::Exp, arg) => {
                self.scan_exp(arg);
                let (q, prim) = arg.split_content();
                let den = q.denom().clone();
                use num::Integer;
                self.exp_denoms
                    .entry(prim)
                    .and_modify(|l| *l = l.lcm(&den))
                    .or_insert(den);
            }
            Expression::Func(FuncHead::Log, arg) => self.scan_exp(arg),
        }
    }

    fn sym_gen(&mut self, s: &Symbol) -> usize {
        let key = GenKey::Sym(s.clone());
        if let Some(id) = self.by_key.get(&key) {
            return *id;
        }
        let id = self.gens.len();
        self.gens.push(Generator::Sym(s.clone()));
        self.by_key.insert(key, id);
        id
    }

    /// Generator id for an already-interned symbol, if present.
    pub(crate) fn lookup_sym(&self, s: &Symbol) -> Option<usize> {
        self.by_key.get(&GenKey::Sym(s.clone())).copied()
    }

    fn root_gen(&mut self, base: &Expression, degree: u32) -> Result<usize, PolyError> {
        let key = GenKey::Root(base.clone(), degree);
        if let Some(id) = self.by_key.get(&key) {
            return Ok(*id);
        }
        let rel = self.to_ratpoly(base)?;
        let id = self.gens.len();
        self.gens.push(Generator::Root {
            base: base.clone(),
            degree,
            rel_num: rel.num,
            rel_den: rel.den,
        });
        self.by_key.insert(key, id);
        Ok(id)
    }

    fn exp_gen(&mut self, primitive: &Expression) -> usize {
        let key = GenKey::Exp(primitive.clone());
        if let Some(id) = self.by_key.get(&key) {
            return *id;
        }
        let denom = self
            .exp_denoms
            .get(primitive)
            .cloned()
            .unwrap_or_else(BigInt::one);
        let id = self.gens.len();
        self.gens.push(Generator::Exp {
            primitive: primitive.clone(),
            denom,
        });
        self.by_key.insert(key, id);
        id
    }

    fn log_gen(&mut self, arg: &Expression) -> usize {
        let key = GenKey::Log(arg.clone());
        if let Some(id) = self.by_key.get(&key) {
            return *id;
        }
        let id = self.gens.len();
        self.gens.push(Generator::Log { arg: arg.clone() });
        self.by_key.insert(key, id);
        id
    }

    fn is_root_gen(&self, id: usize) -> Option<u32> {
        match &self.gens[id] {
            Generator::Root { degree, .. } => Some(*degree),
            _ => None,
        }
    }

    /// True when the generator is anything other than a plain symbol.
    pub(crate) fn gen_is_transcendental(&self, id: usize) -> bool {
        !matches!(self.gens[id], Generator::Sym(_))
    }

    /// Does the generator's defining expression mention `sym`?
    pub(crate) fn gen_mentions(&self, id: usize, sym: &Symbol) -> bool {
        match &self.gens[id] {
            Generator::Sym(s) => s == sym,
            Generator::Root { base, .. } => base.contains_symbol(sym),
            Generator::Exp { primitive, .. } => primitive.contains_symbol(sym),
            Generator::Log { arg } => arg.contains_symbol(sym),
        }
    }

    fn has_excess(&self, p: &MultiPoly) -> bool {
        p.0.keys().any(|m| {
            m.0.iter().any(|(g, e)| match self.is_root_gen(*g) {
                Some(d) => *e >= d,
                None => false,
            })
        })
    }

    /// One rewriting layer: returns `p` as a `num/den` pair with every root
    /// exponent beneath its degree (smaller generators may gain excess).
    fn reduce_pass(&self, p: &MultiPoly) -> (MultiPoly, MultiPoly) {
        let mut acc_num = MultiPoly::zero();
        let mut acc_den = MultiPoly::one();
        for (mono, coeff) in &p.0 {
            let mut residue = BTreeMap::new();
            let mut term_num = MultiPoly::constant(coeff.clone());
            let mut term_den = MultiPoly::one();
            for (g, e) in &mono.0 {
                match self.is_root_gen(*g) {
                    Some(d) if *e >= d => {
                        let q = e / d;
                        let r = e % d;
                        if r > 0 {
                            residue.insert(*g, r);
                        }
                        if let Generator::Root {
                            rel_num, rel_den, ..
                        } = &self.gens[*g]
                        {
                            term_num = term_num.mul(&rel_num.pow(q));
                            term_den = term_den.mul(&rel_den.pow(q));
                        }
                    }
                    _ => {
                        residue.insert(*g, *e);
                    }
                }
            }
            term_num = term_num.mul_monomial(&Monomial(residue), &Rational::one());
            // acc_num/acc_den + term_num/term_den
            acc_num = acc_num.mul(&term_den).add(&term_num.mul(&acc_den));
            acc_den = acc_den.mul(&term_den);
            let (n, d) = cheap_cancel(acc_num, acc_den);
            acc_num = n;
            acc_den = d;
        }
        (acc_num, acc_den)
    }

    fn make(&self, mut num: MultiPoly, mut den: MultiPoly) -> Result<RatPoly, PolyError> {
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        loop {
            let num_excess = self.has_excess(&num);
            let den_excess = self.has_excess(&den);
            if !num_excess && !den_excess {
                break;
            }
            let (n1, d1) = if num_excess {
                self.reduce_pass(&num)
            } else {
                (num.clone(), MultiPoly::one())
            };
            let (n2, d2) = if den_excess {
                self.reduce_pass(&den)
            } else {
                (den.clone(), MultiPoly::one())
            };
            num = n1.mul(&d2);
            den = n2.mul(&d1);
            if den.is_zero() {
                return Err(PolyError::ZeroDenominator);
            }
        }
        let (num, den) = cheap_cancel(num, den);
        Ok(RatPoly { num, den })
    }

    fn rp_add(&self, a: &RatPoly, b: &RatPoly) -> Result<RatPoly, PolyError> {
        self.make(
            a.num.mul(&b.den).add(&b.num.mul(&a.den)),
            a.den.mul(&b.den),
        )
    }

    fn rp_mul(&self, a: &RatPoly, b: &RatPoly) -> Result<RatPoly, PolyError> {
        self.make(a.num.mul(&b.num), a.den.mul(&b.den))
    }

    fn rp_int_pow(&self, a: &RatPoly, n: i64) -> Result<RatPoly, PolyError> {
        if n.unsigned_abs() > MAX_INT_POW as u64 {
            return Err(PolyError::ExponentOverflow);
        }
        let k = n.unsigned_abs() as u32;
        if n >= 0 {
            self.make(a.num.pow(k), a.den.pow(k))
        } else {
            if a.num.is_zero() {
                return Err(PolyError::ZeroDenominator);
            }
            self.make(a.den.pow(k), a.num.pow(k))
        }
    }

    /// Flattens an expression into a reduced `num/den` pair.
    pub(crate) fn to_ratpoly(&mut self, e: &Expression) -> Result<RatPoly, PolyError> {
        match e {
            Expression::Rational(r) => Ok(RatPoly::constant(r.clone())),
            Expression::Symbol(s) => {
                let id = self.sym_gen(s);
                Ok(RatPoly {
                    num: MultiPoly::gen(id),
                    den: MultiPoly::one(),
                })
            }
            Expression::Sum(terms) => {
                let mut acc = RatPoly::constant(Rational::zero());
                for t in terms {
                    let rp = self.to_ratpoly(t)?;
                    acc = self.rp_add(&acc, &rp)?;
                }
                Ok(acc)
            }
            Expression::Product(factors) => {
                let mut acc = RatPoly::constant(Rational::one());
                for f in factors {
                    let rp = self.to_ratpoly(f)?;
                    acc = self.rp_mul(&acc, &rp)?;
                }
                Ok(acc)
            }
            Expression::Power(base, exp) => {
                if exp.is_integer() {
                    let n = exp.to_integer().to_i64().ok_or(PolyError::ExponentOverflow)?;
                    let b = self.to_ratpoly(base)?;
                    return self.rp_int_pow(&b, n);
                }
                let degree = exp
                    .denom()
                    .to_u32()
                    .ok_or(PolyError::ExponentOverflow)?;
                let m = exp.numer().to_i64().ok_or(PolyError::ExponentOverflow)?;
                // a root of an identically zero base collapses
                let base_rp = self.to_ratpoly(base)?;
                if base_rp.num.is_zero() {
                    if m > 0 {
                        return Ok(RatPoly::constant(Rational::zero()));
                    }
                    return Err(PolyError::ZeroDenominator);
                }
                let id = self.root_gen(base, degree)?;
                let g = RatPoly {
                    num: MultiPoly::gen(id),
                    den: MultiPoly::one(),
                };
                self.rp_int_pow(&g, m)
            }
            Expression::Func(FuncHead::Exp, arg) => {
                let (q, prim) = arg.split_content();
                if q.is_zero() {
                    return Ok(RatPoly::constant(Rational::one()));
                }
                let id = self.exp_gen(&prim);
                let denom = match &self.gens[id] {
                    Generator::Exp { denom, .. } => denom.clone(),
                    _ => unreachable!(),
                };
                // q * denom is integral by construction of the lcm table
                let power = (q * Rational::from(denom))
                    .to_integer()
                    .to_i64()
                    .ok_or(PolyError::ExponentOverflow)?;
                let g = RatPoly {
                    num: MultiPoly::gen(id),
                    den: MultiPoly::one(),
                };
                self.rp_int_pow(&g, power)
            }
            Expression::Func(FuncHead::Log, arg) => {
                let id = self.log_gen(arg);
                Ok(RatPoly {
                    num: MultiPoly::gen(id),
                    den: MultiPoly::one(),
                })
            }
        }
    }

    /// Multiplies numerator and denominator by square-root conjugates until
    /// the denominator is free of degree-2 root generators.
    fn rationalise_denominator(&self, rp: RatPoly) -> Result<RatPoly, PolyError> {
        let mut cur = rp;
        loop {
            let root_in_den = cur
                .den
                .gens_used()
                .into_iter()
                .rev()
                .find(|g| self.is_root_gen(*g) == Some(2) && cur.den.degree_in(*g) > 0);
            let g = match root_in_den {
                Some(g) => g,
                None => return Ok(cur),
            };
            let coeffs = cur.den.coeffs_in(g);
            let a = coeffs.get(&0).cloned().unwrap_or_else(MultiPoly::zero);
            let b = coeffs.get(&1).cloned().unwrap_or_else(MultiPoly::zero);
            // den = a + b g; conjugate = a - b g
            let conj = a.sub(&b.mul(&MultiPoly::gen(g)));
            if conj.is_zero() {
                return Ok(cur);
            }
            let new_num = cur.num.mul(&conj);
            let new_den = cur.den.mul(&conj);
            let reduced = self.make(new_num, new_den)?;
            // bail out if the conjugate annihilated the denominator
            if reduced.den.is_zero() || reduced.den.degree_in(g) > 0 {
                return Ok(cur);
            }
            cur = reduced;
        }
    }

    fn gen_expression(&self, id: usize) -> Expression {
        match &self.gens[id] {
            Generator::Sym(s) => Expression::Symbol(s.clone()),
            Generator::Root { base, degree, .. } => Expression::Power(
                Box::new(base.clone()),
                Rational::new(BigInt::one(), BigInt::from(*degree)),
            ),
            Generator::Exp { primitive, denom } => Expression::exp(Expression::product(vec![
                Expression::from_rational(Rational::new(BigInt::one(), denom.clone())),
                primitive.clone(),
            ])),
            Generator::Log { arg } => {
                Expression::Func(FuncHead::Log, Box::new(arg.clone()))
            }
        }
    }

    pub(crate) fn poly_to_expr(&self, p: &MultiPoly) -> Expression {
        let mut terms = Vec::with_capacity(p.0.len());
        for (mono, coeff) in &p.0 {
            let mut factors = vec![Expression::from_rational(coeff.clone())];
            for (g, e) in &mono.0 {
                factors.push(Expression::pow(
                    self.gen_expression(*g),
                    Rational::from(BigInt::from(*e)),
                ));
            }
            terms.push(Expression::product(factors));
        }
        Expression::sum(terms)
    }

    pub(crate) fn ratpoly_to_expr(&self, rp: &RatPoly) -> Expression {
        let num = self.poly_to_expr(&rp.num);
        if let Some(c) = rp.den.as_constant() {
            if c.is_one() {
                return num;
            }
        }
        let den = self.poly_to_expr(&rp.den);
        num / den
    }

    /// Full canonicalisation: gcd-cancel and orient the denominator.
    pub(crate) fn cancel(&self, rp: RatPoly) -> RatPoly {
        if rp.num.is_zero() {
            return RatPoly {
                num: MultiPoly::zero(),
                den: MultiPoly::one(),
            };
        }
        let (mut num, mut den) = (rp.num, rp.den);
        if num.term_count() <= GCD_TERM_LIMIT && den.term_count() <= GCD_TERM_LIMIT {
            let g = poly_gcd(&num, &den);
            if g.as_constant().map(|c| !c.is_one()).unwrap_or(true) {
                if let (Some(n), Some(d)) = (exact_div(&num, &g), exact_div(&den, &g)) {
                    num = n;
                    den = d;
                }
            }
        }
        let c = den.content();
        let inv = Rational::one() / c;
        RatPoly {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }
}

const GCD_TERM_LIMIT: usize = 3000;

/// Cancels common rational and monomial content between `num` and `den`.
fn cheap_cancel(num: MultiPoly, den: MultiPoly) -> (MultiPoly, MultiPoly) {
    if num.is_zero() {
        return (num, MultiPoly::one());
    }
    let mono = num.monomial_content().gcd(&den.monomial_content());
    let (mut num, mut den) = if mono.is_one() {
        (num, den)
    } else {
        (num.div_monomial(&mono), den.div_monomial(&mono))
    };
    let c = rational_gcd(&num.content(), &den.content());
    if !c.is_one() && !c.is_zero() {
        let inv = Rational::one() / c;
        num = num.scale(&inv);
        den = den.scale(&inv);
    }
    (num, den)
}

/// Result of [`normalise_rational`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalForm {
    pub expr: Expression,
    /// False when the input contains transcendental or fractional-power
    /// heads, in which case `expr` is the input unchanged.
    pub is_rational: bool,
}

/// Canonical `num/den` form for rational functions: expanded, gcd-reduced,
/// denominator with positive primitive leading part. Identically zero
/// rational functions collapse to the literal `0`. Inputs with
/// transcendental heads are returned unchanged with `is_rational: false`.
pub fn normalise_rational(e: &Expression) -> RationalForm {
    let mut ctx = PolyContext::new(&[e]);
    let rp = match ctx.to_ratpoly(e) {
        Ok(rp) => rp,
        Err(_) => {
            return RationalForm {
                expr: e.clone(),
                is_rational: false,
            }
        }
    };
    let transcendental = rp
        .num
        .gens_used()
        .into_iter()
        .chain(rp.den.gens_used())
        .any(|g| ctx.gen_is_transcendental(g));
    if transcendental {
        return RationalForm {
            expr: e.clone(),
            is_rational: false,
        };
    }
    let rp = ctx.cancel(rp);
    RationalForm {
        expr: ctx.ratpoly_to_expr(&rp),
        is_rational: true,
    }
}

/// Generator-aware canonicalisation: reduces root relations, rationalises
/// square roots out of denominators where possible, gcd-cancels and rebuilds.
/// Falls back to the input on conversion failure.
pub(crate) fn normalise_extended(e: &Expression) -> Expression {
    let mut ctx = PolyContext::new(&[e]);
    let rp = match ctx.to_ratpoly(e) {
        Ok(rp) => rp,
        Err(_) => return e.clone(),
    };
    let rp = match ctx.rationalise_denominator(rp) {
        Ok(rp) => rp,
        Err(_) => return e.clone(),
    };
    let rp = ctx.cancel(rp);
    ctx.ratpoly_to_expr(&rp)
}

/// Exact zero test: true when the expression reduces to the zero polynomial
/// over the extended generator algebra. A `false` is *not* a proof of
/// nonzero-ness; the sampler owns that side.
pub(crate) fn is_exactly_zero(e: &Expression) -> bool {
    if e.is_zero() {
        return true;
    }
    let mut ctx = PolyContext::new(&[e]);
    match ctx.to_ratpoly(e) {
        Ok(rp) => rp.num.is_zero(),
        Err(_) => false,
    }
}

/// Numerator coefficients of `e` as a polynomial in `var`, lowest power
/// first, together with the denominator (which must be free of `var`).
/// `None` when `e` is not polynomial in `var` after clearing denominators —
/// for example when `var` occurs under a root or inside an exponential.
pub(crate) fn coefficients_in_symbol(
    e: &Expression,
    var: &Symbol,
) -> Option<(Vec<Expression>, Expression)> {
    let mut ctx = PolyContext::new(&[e]);
    let rp = ctx.to_ratpoly(e).ok()?;
    let gen = match ctx.lookup_sym(var) {
        Some(g) => g,
        None => {
            // var absent entirely: degree-0 polynomial
            return Some((vec![ctx.ratpoly_to_expr(&rp)], Expression::one()));
        }
    };
    for g in rp.num.gens_used().into_iter().chain(rp.den.gens_used()) {
        if g != gen && ctx.gen_is_transcendental(g) && ctx.gen_mentions(g, var) {
            return None;
        }
    }
    if rp.den.degree_in(gen) > 0 {
        return None;
    }
    let rp = ctx.cancel(rp);
    if rp.den.degree_in(gen) > 0 {
        return None;
    }
    let coeffs = rp.num.coeffs_in(gen);
    let deg = coeffs.keys().max().copied().unwrap_or(0);
    let mut out = Vec::with_capacity(deg as usize + 1);
    for k in 0..=deg {
        let c = coeffs
            .get(&k)
            .map(|p| ctx.poly_to_expr(p))
            .unwrap_or_else(Expression::zero);
        out.push(c);
    }
    Some((out, ctx.poly_to_expr(&rp.den)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn p(s: &str) -> Expression {
        parse_expression(s).unwrap()
    }

    #[test]
    fn cancels_polynomial_factors() {
        let f = normalise_rational(&p("(x^2 - y^2)/(x - y)"));
        assert!(f.is_rational);
        assert_eq!(f.expr, p("x + y"));
    }

    #[test]
    fn detects_identically_zero() {
        let f = normalise_rational(&p("(x + y)^2 - x^2 - 2*x*y - y^2"));
        assert!(f.is_rational);
        assert!(f.expr.is_zero());
        assert!(is_exactly_zero(&p("(x + y)^2 - x^2 - 2*x*y - y^2")));
    }

    #[test]
    fn flags_transcendental_heads() {
        let f = normalise_rational(&p("exp(x) + 0"));
        assert!(!f.is_rational);
        assert_eq!(f.expr, p("exp(x)"));
        let f = normalise_rational(&p("sqrt(x) + 1"));
        assert!(!f.is_rational);
    }

    #[test]
    fn root_relations_reduce_exactly() {
        // sqrt(u)^2 = u even when hidden behind arithmetic
        assert!(is_exactly_zero(&p("sqrt(1 - y)*sqrt(1 - y) - 1 + y")));
        // mixed parity keeps a residual root factor
        assert!(!is_exactly_zero(&p("sqrt(1 - y) - 1")));
        // sqrt(x^2) is |x|, not x
        assert!(!is_exactly_zero(&p("sqrt(x^2) - x")));
    }

    #[test]
    fn exp_generators_share_primitives() {
        // exp(b/2)^2 * exp(-b) = 1
        assert!(is_exactly_zero(&p("exp(b/2)*exp(b/2)*exp(-b) - 1")));
        // exp over a sum primitive is not split
        assert!(!is_exactly_zero(&p("exp(b + c) - exp(b)*exp(c)")));
        // concrete rational arguments share the unit primitive
        assert!(is_exactly_zero(&p("exp(2/3)*exp(1/3) - exp(1)")));
    }

    #[test]
    fn rationalises_square_root_denominators() {
        let e = p("1/(1 + sqrt(x))");
        let n = normalise_extended(&e);
        // (1 - sqrt(x))/(1 - x)
        let diff = n - p("(1 - sqrt(x))/(1 - x)");
        assert!(is_exactly_zero(&diff));
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let e = p("1/((x + 1)^2 - x^2 - 2*x - 1)");
        let mut ctx = PolyContext::new(&[&e]);
        assert!(matches!(
            ctx.to_ratpoly(&e),
            Err(PolyError::ZeroDenominator)
        ));
    }

    #[test]
    fn coefficient_extraction() {
        let e = p("a*y^2 + b*y + c + x/y");
        // times y: a y^3 + b y^2 + c y + x -> not polynomial? denominator y
        // here e itself has a 1/y term so den contains y
        assert!(coefficients_in_symbol(&e, &Symbol::new("y")).is_none());
        let e = p("(2 - y)*x + y^2");
        let (coeffs, den) = coefficients_in_symbol(&e, &Symbol::new("y")).unwrap();
        assert_eq!(den, Expression::one());
        assert_eq!(coeffs.len(), 3);
        assert_eq!(coeffs[0], p("2*x"));
        assert_eq!(coeffs[1], p("-x"));
        assert_eq!(coeffs[2], Expression::one());
    }

    #[test]
    fn gcd_handles_contents() {
        let mut ctx = PolyContext::new(&[]);
        let a = ctx.to_ratpoly(&p("2*x + 2")).unwrap().num;
        let b = ctx.to_ratpoly(&p("4*x^2 - 4")).unwrap().num;
        let g = poly_gcd(&a, &b);
        let expected = ctx.to_ratpoly(&p("2*x + 2")).unwrap().num;
        assert_eq!(g, expected);
    }
}
