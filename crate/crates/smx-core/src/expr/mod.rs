//! The graded term algebra.
//!
//! An `Expr` is a normalized finite sum of terms. Each term is a monomial in
//! the invariants `X_g` of its variable groups (with exponents that may carry
//! regulator symbols), their logs `log(M^2 X_g)`, mass factors
//! `m^l log^p(m/M)`, an optional power of the fixed scale `M`, times a sorted
//! list of structural factors: direct-extension markers, contracted moment
//! operators, formal box operators, delta counterterms and opaque remainders.
//!
//! There is no primitive for `log(M^4 X_g X_h)`: mixed logs are represented
//! expanded, `log(M^2 X_g) + log(M^2 X_h)`, which keeps the normal form
//! unique.

pub mod calculus;
pub mod fields;
pub mod json;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::linform::LinForm;
use crate::rat::{rat_int, rat_string, Rat};
use num::{One, Signed};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Group = u8;

/// Signature and dimension bookkeeping. `s = -1` is the Minkowski convention
/// with X = -(x^2 - i0) (the i0 never enters symbolic rules); `s = +1` is
/// Euclidean X = |x|^2, used by the numeric backend. `k = d*(n-1)` is the
/// dimension of the relative-coordinate space on which extension happens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricConvention {
    pub s: i8,
    pub d: u32,
    pub k: u32,
}

impl MetricConvention {
    pub fn minkowski(d: u32, n_vertices: u32) -> Self {
        MetricConvention { s: -1, d, k: d * (n_vertices - 1) }
    }

    pub fn euclidean(d: u32, n_vertices: u32) -> Self {
        MetricConvention { s: 1, d, k: d * (n_vertices - 1) }
    }

    pub fn sign_rat(&self) -> Rat {
        rat_int(self.s as i64)
    }
}

/// Exponents attached to one variable group: `X^inv * log(M^2 X)^log`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct GroupPows {
    pub inv: LinForm,
    pub log: u32,
}

impl GroupPows {
    pub fn is_trivial(&self) -> bool {
        self.inv.is_zero() && self.log == 0
    }
}

/// `coeff * m^mass * log(m/M)^log_m * M^scale * prod_g X_g^inv_g log(M^2 X_g)^log_g`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: Coeff,
    pub mass: LinForm,
    pub log_m: u32,
    pub scale: LinForm,
    pub groups: BTreeMap<Group, GroupPows>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial {
            coeff: Coeff::one(),
            mass: LinForm::zero(),
            log_m: 0,
            scale: LinForm::zero(),
            groups: BTreeMap::new(),
        }
    }

    pub fn with_coeff(mut self, c: Coeff) -> Self {
        self.coeff = c;
        self
    }

    pub fn with_mass(mut self, l: i64) -> Self {
        self.mass = LinForm::from_int(l);
        self
    }

    pub fn with_mass_form(mut self, l: LinForm) -> Self {
        self.mass = l;
        self
    }

    pub fn with_log_m(mut self, p: u32) -> Self {
        self.log_m = p;
        self
    }

    pub fn with_scale_form(mut self, s: LinForm) -> Self {
        self.scale = s;
        self
    }

    pub fn with_x_pow(mut self, g: Group, inv: LinForm) -> Self {
        let e = self.groups.entry(g).or_default();
        e.inv = inv;
        if e.is_trivial() {
            self.groups.remove(&g);
        }
        self
    }

    pub fn with_x_int(self, g: Group, n: i64) -> Self {
        self.with_x_pow(g, LinForm::from_int(n))
    }

    pub fn with_log_x(mut self, g: Group, q: u32) -> Self {
        let e = self.groups.entry(g).or_default();
        e.log = q;
        if e.is_trivial() {
            self.groups.remove(&g);
        }
        self
    }

    pub fn group(&self, g: Group) -> GroupPows {
        self.groups.get(&g).cloned().unwrap_or_default()
    }

    fn clean(&mut self) {
        self.groups.retain(|_, gp| !gp.is_trivial());
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut groups = self.groups.clone();
        for (g, gp) in &other.groups {
            let e = groups.entry(*g).or_default();
            e.inv = e.inv.add(&gp.inv);
            e.log += gp.log;
        }
        let mut m = Monomial {
            coeff: self.coeff.mul(&other.coeff),
            mass: self.mass.add(&other.mass),
            log_m: self.log_m + other.log_m,
            scale: self.scale.add(&other.scale),
            groups,
        };
        m.clean();
        m
    }

    /// The coefficient-independent sort/merge key: lexicographic in
    /// (mass_power, log_m_power, scale, inv vector, log vector).
    fn key(&self) -> MonoKey<'_> {
        MonoKey { mass: &self.mass, log_m: self.log_m, scale: &self.scale, groups: &self.groups }
    }

    /// True when the x-dependence is a polynomial in the invariants
    /// (nonnegative integer exponents, no logs) for the given groups.
    pub fn smooth_in(&self, gs: &BTreeSet<Group>) -> bool {
        gs.iter().all(|g| {
            let gp = self.group(*g);
            gp.log == 0
                && gp.inv.is_pure_rat()
                && crate::rat::rat_is_nat(&gp.inv.rat)
        })
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct MonoKey<'a> {
    mass: &'a LinForm,
    log_m: u32,
    scale: &'a LinForm,
    groups: &'a BTreeMap<Group, GroupPows>,
}

/// Invariant differential operators acting on a delta distribution.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeltaOp {
    Id,
    Box(Group),
    GradDot(Group, Group),
    /// Abstract multi-index derivative of the given total order; carried as a
    /// pattern only (no free-index calculus).
    Partial(u32),
}

impl DeltaOp {
    pub fn order(&self) -> u32 {
        match self {
            DeltaOp::Id => 0,
            DeltaOp::Box(_) | DeltaOp::GradDot(_, _) => 2,
            DeltaOp::Partial(n) => *n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    /// Direct-extension marker over the ambient `k`-dimensional space. With
    /// `z_moment = l > 0` the marked object is the l-th moment
    /// `z_{r1}..z_{rl} * child`, legal only directly under a `MomentDiv` of
    /// the same order (the free indices contract there).
    Overline { k: u32, z_moment: u32, child: Expr },
    /// Fully contracted `d_{r1}..d_{rl} ( z_{r1}..z_{rl} * child )`.
    MomentDiv { l: u32, k: u32, child: Expr },
    /// Formal wave operator in one variable group, kept unevaluated until
    /// restriction or pairing.
    BoxOp { group: Group, child: Expr },
    /// Delta distribution at the origin of the listed groups, of total
    /// dimension `k`, acted on by an invariant operator.
    Delta { op: DeltaOp, k: u32, groups: Vec<Group> },
    /// Opaque remainder: only (tag, joint degree, order) participate.
    Remainder { tag: String, degree: LinForm, order: u32 },
}

impl Factor {
    /// Variable groups this factor constrains (used for product well-definedness).
    pub fn groups(&self) -> BTreeSet<Group> {
        match self {
            Factor::Overline { child, .. } | Factor::MomentDiv { child, .. } => child.groups(),
            Factor::BoxOp { group, child } => {
                let mut s = child.groups();
                s.insert(*group);
                s
            }
            Factor::Delta { groups, .. } => groups.iter().copied().collect(),
            Factor::Remainder { .. } => BTreeSet::new(),
        }
    }

    fn sort_key(&self) -> (u8, String) {
        let tag = match self {
            Factor::Delta { .. } => 0,
            Factor::Remainder { .. } => 1,
            Factor::BoxOp { .. } => 2,
            Factor::Overline { .. } => 3,
            Factor::MomentDiv { .. } => 4,
        };
        (tag, format!("{self}"))
    }

    /// Markers are linear in their child.
    pub fn child(&self) -> Option<&Expr> {
        match self {
            Factor::Overline { child, .. }
            | Factor::MomentDiv { child, .. }
            | Factor::BoxOp { child, .. } => Some(child),
            _ => None,
        }
    }

    fn set_child(&mut self, e: Expr) {
        match self {
            Factor::Overline { child, .. }
            | Factor::MomentDiv { child, .. }
            | Factor::BoxOp { child, .. } => *child = e,
            _ => {}
        }
    }

    fn scale_child(&mut self, c: &Coeff) {
        match self {
            Factor::Overline { child, .. }
            | Factor::MomentDiv { child, .. }
            | Factor::BoxOp { child, .. } => *child = child.scale(c),
            _ => {}
        }
    }

    /// Same marker kind and parameters, children ignored.
    fn shape_eq(&self, other: &Factor) -> bool {
        match (self, other) {
            (
                Factor::Overline { k: a, z_moment: za, .. },
                Factor::Overline { k: b, z_moment: zb, .. },
            ) => a == b && za == zb,
            (Factor::MomentDiv { l: la, k: ka, .. }, Factor::MomentDiv { l: lb, k: kb, .. }) => {
                la == lb && ka == kb
            }
            (Factor::BoxOp { group: a, .. }, Factor::BoxOp { group: b, .. }) => a == b,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub mono: Monomial,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn from_mono(m: Monomial) -> Self {
        Term { mono: m, factors: Vec::new() }
    }

    pub fn from_factor(f: Factor) -> Self {
        Term { mono: Monomial::one(), factors: vec![f] }
    }

    fn key_eq(&self, other: &Term) -> bool {
        self.mono.key() == other.mono.key() && self.factors == other.factors
    }

    fn cmp_key(&self, other: &Term) -> Ordering {
        self.mono
            .key()
            .cmp(&other.mono.key())
            .then_with(|| {
                let a: Vec<_> = self.factors.iter().map(|f| f.sort_key()).collect();
                let b: Vec<_> = other.factors.iter().map(|f| f.sort_key()).collect();
                a.cmp(&b)
            })
    }

    pub fn groups(&self) -> BTreeSet<Group> {
        let mut s: BTreeSet<Group> = self.mono.groups.keys().copied().collect();
        for f in &self.factors {
            s.extend(f.groups());
        }
        s
    }
}

/// Normalized sum of terms. The empty sum is zero.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Expr {
    terms: Vec<Term>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Expr::from_mono(Monomial::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Expr::from_mono(Monomial::one().with_coeff(c))
    }

    pub fn from_rat(r: Rat) -> Self {
        Expr::constant(Coeff::from_rat(r))
    }

    pub fn from_int(n: i64) -> Self {
        Expr::from_rat(rat_int(n))
    }

    pub fn from_mono(m: Monomial) -> Self {
        Expr::from_terms(vec![Term::from_mono(m)])
    }

    pub fn from_term(t: Term) -> Self {
        Expr::from_terms(vec![t])
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut e = Expr { terms };
        e.normalize();
        e
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn groups(&self) -> BTreeSet<Group> {
        let mut s = BTreeSet::new();
        for t in &self.terms {
            s.extend(t.groups());
        }
        s
    }

    /// All regulator symbols appearing in exponents or coefficients.
    pub fn regulators(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        fn visit(e: &Expr, s: &mut BTreeSet<String>) {
            for t in &e.terms {
                s.extend(t.mono.mass.reg.keys().cloned());
                s.extend(t.mono.scale.reg.keys().cloned());
                for gp in t.mono.groups.values() {
                    s.extend(gp.inv.reg.keys().cloned());
                }
                for f in &t.factors {
                    match f {
                        Factor::Overline { child, .. }
                        | Factor::MomentDiv { child, .. }
                        | Factor::BoxOp { child, .. } => visit(child, s),
                        Factor::Remainder { degree, .. } => {
                            s.extend(degree.reg.keys().cloned())
                        }
                        Factor::Delta { .. } => {}
                    }
                }
            }
        }
        visit(self, &mut s);
        s
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Expr::from_terms(terms)
    }

    pub fn neg(&self) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t.mono.coeff = t.mono.coeff.neg();
                    t
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Coeff) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        let mut e = self.clone();
        for t in &mut e.terms {
            t.mono.coeff = t.mono.coeff.mul(c);
        }
        e.normalize();
        e
    }

    pub fn scale_rat(&self, r: &Rat) -> Expr {
        self.scale(&Coeff::from_rat(r.clone()))
    }

    /// Substitutes a regulator symbol inside exponents and coefficients by a
    /// linear form in other regulators (e.g. eta -> -4 zeta).
    pub fn subst_reg(&self, var: &str, replacement: &LinForm) -> Expr {
        let poly = replacement.to_poly();
        let map_term = |t: &Term| -> Term {
            let mut t = t.clone();
            t.mono.coeff = t.mono.coeff.subst(var, &poly);
            t.mono.mass = t.mono.mass.subst_reg(var, replacement);
            t.mono.scale = t.mono.scale.subst_reg(var, replacement);
            for gp in t.mono.groups.values_mut() {
                gp.inv = gp.inv.subst_reg(var, replacement);
            }
            t.mono.clean();
            for f in &mut t.factors {
                match f {
                    Factor::Overline { child, .. }
                    | Factor::MomentDiv { child, .. }
                    | Factor::BoxOp { child, .. } => *child = child.subst_reg(var, replacement),
                    Factor::Remainder { degree, .. } => {
                        *degree = degree.subst_reg(var, replacement)
                    }
                    Factor::Delta { .. } => {}
                }
            }
            t
        };
        Expr::from_terms(self.terms.iter().map(map_term).collect())
    }

    fn normalize(&mut self) {
        let mut terms = std::mem::take(&mut self.terms);
        loop {
            let mut flat: Vec<Term> = Vec::with_capacity(terms.len());
            for mut t in terms {
                t.mono.clean();
                if t.mono.coeff.is_zero() {
                    continue;
                }
                if t.factors.iter().any(|f| f.child().is_some_and(Expr::is_zero)) {
                    continue;
                }
                // Scalar coefficients live inside the first marker child, so
                // that marker linearity is visible to the merge below.
                if !t.mono.coeff.is_one() {
                    if let Some(f) = t.factors.iter_mut().find(|f| f.child().is_some()) {
                        let c = std::mem::replace(&mut t.mono.coeff, Coeff::one());
                        f.scale_child(&c);
                    }
                }
                t.factors.sort_by_key(|f| f.sort_key());
                flat.push(t);
            }
            flat.sort_by(|a, b| a.cmp_key(b));
            let mut merged: Vec<Term> = Vec::with_capacity(flat.len());
            let mut changed = false;
            'terms: for t in flat {
                if let Some(last) = merged.last_mut() {
                    if last.key_eq(&t) {
                        last.mono.coeff = last.mono.coeff.add(&t.mono.coeff);
                        changed = true;
                        if last.mono.coeff.is_zero() {
                            merged.pop();
                        }
                        continue 'terms;
                    }
                }
                for prev in merged.iter_mut() {
                    if Self::try_linear_merge(prev, &t) {
                        changed = true;
                        continue 'terms;
                    }
                }
                merged.push(t);
            }
            if !changed {
                self.terms = merged;
                return;
            }
            terms = merged;
        }
    }

    /// Adds two terms into one when they agree everywhere except the child
    /// of a single marker of equal shape.
    fn try_linear_merge(a: &mut Term, b: &Term) -> bool {
        if a.factors.len() != b.factors.len() || a.factors.is_empty() || a.mono != b.mono {
            return false;
        }
        let mut diff: Option<usize> = None;
        for (i, (fa, fb)) in a.factors.iter().zip(&b.factors).enumerate() {
            if fa == fb {
                continue;
            }
            if diff.is_some() || !fa.shape_eq(fb) {
                return false;
            }
            diff = Some(i);
        }
        let Some(i) = diff else {
            return false;
        };
        let merged = a.factors[i].child().unwrap().add(b.factors[i].child().unwrap());
        a.factors[i].set_child(merged);
        true
    }

    /// Graded commutative product. Pointwise products are refused when a
    /// delta (or another structural factor) would meet a singular factor in
    /// one of its own variable groups.
    pub fn multiply(&self, other: &Expr) -> Result<Expr> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for ta in &self.terms {
            for tb in &other.terms {
                terms.push(merge_terms(ta, tb)?);
            }
        }
        Ok(Expr::from_terms(terms))
    }

    pub fn pow(&self, n: u32) -> Result<Expr> {
        let mut acc = Expr::one();
        for _ in 0..n {
            acc = acc.multiply(self)?;
        }
        Ok(acc)
    }

    /// Wraps the whole expression in a direct-extension marker. The scaling
    /// degree precondition is the caller's contract (`direct_extend` checks
    /// it); deltas living on the full ambient origin may not be re-extended.
    pub fn overline(self, k: u32) -> Result<Expr> {
        Self::check_no_full_delta(&self, k)?;
        Ok(Expr::from_term(Term::from_factor(Factor::Overline { k, z_moment: 0, child: self })))
    }

    /// `d^l ( overline{ z^l * child } )`, the moment-extension composite.
    pub fn moment_extension(self, l: u32, k: u32) -> Result<Expr> {
        Self::check_no_full_delta(&self, k)?;
        let inner = Expr::from_term(Term::from_factor(Factor::Overline {
            k,
            z_moment: l,
            child: self,
        }));
        Ok(Expr::from_term(Term::from_factor(Factor::MomentDiv { l, k, child: inner })))
    }

    pub fn moment_div(child: Expr, l: u32, k: u32) -> Expr {
        Expr::from_term(Term::from_factor(Factor::MomentDiv { l, k, child }))
    }

    pub fn box_op(group: Group, child: Expr) -> Expr {
        Expr::from_term(Term::from_factor(Factor::BoxOp { group, child }))
    }

    pub fn box_op_pow(group: Group, child: Expr, n: u32) -> Expr {
        let mut e = child;
        for _ in 0..n {
            e = Expr::box_op(group, e);
        }
        e
    }

    pub fn delta(op: DeltaOp, k: u32, groups: Vec<Group>) -> Expr {
        Expr::from_term(Term::from_factor(Factor::Delta { op, k, groups }))
    }

    pub fn remainder(tag: &str, degree: LinForm, order: u32) -> Expr {
        Expr::from_term(Term::from_factor(Factor::Remainder {
            tag: tag.to_string(),
            degree,
            order,
        }))
    }

    fn check_no_full_delta(e: &Expr, k: u32) -> Result<()> {
        for t in &e.terms {
            for f in &t.factors {
                if let Factor::Delta { k: dk, .. } = f {
                    if *dk >= k {
                        return Err(Error::IllDefinedProduct(format!(
                            "delta of dimension {dk} at the extension origin cannot sit under an extension marker over k={k}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn merge_terms(a: &Term, b: &Term) -> Result<Term> {
    let mono = a.mono.mul(&b.mono);
    let mut factors = a.factors.clone();
    factors.extend(b.factors.iter().cloned());

    // Well-definedness: every delta and every structural factor must see only
    // smooth monomial dependence and no second structural factor in its own
    // variable groups. Cross-term checks only (each input term was already
    // validated when built).
    for (i, f) in factors.iter().enumerate() {
        let gs = f.groups();
        if gs.is_empty() {
            continue;
        }
        let from_a = i < a.factors.len();
        let other_mono = if from_a { &b.mono } else { &a.mono };
        let singular_mono = !other_mono.smooth_in(&gs);
        if singular_mono {
            if let Factor::Delta { .. } = f {
                return Err(Error::IllDefinedProduct(format!(
                    "delta on groups {gs:?} multiplied by a singular monomial in the same groups"
                )));
            }
            return Err(Error::IllDefinedProduct(format!(
                "structural factor `{f}` multiplied by a singular monomial in groups {gs:?}"
            )));
        }
        for (j, g) in factors.iter().enumerate() {
            if i == j || (from_a) == (j < a.factors.len()) {
                continue;
            }
            if let Factor::Remainder { .. } = g {
                continue;
            }
            if !gs.is_disjoint(&g.groups()) {
                return Err(Error::IllDefinedProduct(format!(
                    "structural factors `{f}` and `{g}` share variable groups"
                )));
            }
        }
    }
    Ok(Term { mono, factors })
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let coeff_str = format!("{}", self.coeff);
        if coeff_str != "1" {
            if self.coeff.den.as_constant().map(|r| r.is_one()).unwrap_or(false)
                && self.coeff.num.0.len() <= 1
            {
                parts.push(coeff_str);
            } else {
                parts.push(format!("({coeff_str})"));
            }
        }
        if !self.mass.is_zero() {
            parts.push(format!("m^({})", self.mass));
        }
        if self.log_m > 0 {
            parts.push(if self.log_m == 1 {
                "log(m/M)".into()
            } else {
                format!("log(m/M)^{}", self.log_m)
            });
        }
        if !self.scale.is_zero() {
            parts.push(format!("M^({})", self.scale));
        }
        for (g, gp) in &self.groups {
            if !gp.inv.is_zero() {
                if gp.inv.is_pure_rat() && gp.inv.rat.denom() == &num::BigInt::from(1) && !gp.inv.rat.is_negative() {
                    parts.push(format!("X{g}^{}", rat_string(&gp.inv.rat)));
                } else {
                    parts.push(format!("X{g}^({})", gp.inv));
                }
            }
            if gp.log > 0 {
                parts.push(if gp.log == 1 {
                    format!("log(M^2 X{g})")
                } else {
                    format!("log(M^2 X{g})^{}", gp.log)
                });
            }
        }
        if parts.is_empty() {
            return write!(f, "1");
        }
        write!(f, "{}", parts.join("*"))
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Overline { k, z_moment, child } => {
                if *z_moment == 0 {
                    write!(f, "ov[k={k}]{{{child}}}")
                } else {
                    write!(f, "ov[k={k}, z^{z_moment}]{{{child}}}")
                }
            }
            Factor::MomentDiv { l, k, child } => write!(f, "mdiv[l={l}, k={k}]{{{child}}}"),
            Factor::BoxOp { group, child } => write!(f, "box_{group}{{{child}}}"),
            Factor::Delta { op, k, groups } => {
                let op_s = match op {
                    DeltaOp::Id => String::new(),
                    DeltaOp::Box(g) => format!("box_{g} "),
                    DeltaOp::GradDot(g, h) => format!("grad_{g}.grad_{h} "),
                    DeltaOp::Partial(n) => format!("d^{n} "),
                };
                write!(f, "{op_s}delta[k={k}, groups={groups:?}]")
            }
            Factor::Remainder { tag, degree, order } => {
                write!(f, "rem[{tag}, D={degree}, order={order}]")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mono)?;
        for fac in &self.factors {
            write!(f, " * {fac}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "  +  ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn x_inv(g: Group, n: i64) -> Expr {
        Expr::from_mono(Monomial::one().with_x_int(g, n))
    }

    #[test]
    fn exponent_addition() {
        // (a0/X) * (a0/X) = a0^2 X^-2
        let a0 = Coeff::var("a0");
        let e = Expr::from_mono(Monomial::one().with_coeff(a0.clone()).with_x_int(0, -1));
        let sq = e.multiply(&e).unwrap();
        assert_eq!(sq.terms().len(), 1);
        let t = &sq.terms()[0];
        assert_eq!(t.mono.coeff, a0.mul(&a0));
        assert_eq!(t.mono.group(0).inv, LinForm::from_int(-2));
    }

    #[test]
    fn mass_log_combination() {
        // m^2 log(m/M) X^-1 * m^2 X^-1 = m^4 log(m/M) X^-2
        let e1 = Expr::from_mono(Monomial::one().with_mass(2).with_log_m(1).with_x_int(0, -1));
        let e2 = Expr::from_mono(Monomial::one().with_mass(2).with_x_int(0, -1));
        let p = e1.multiply(&e2).unwrap();
        let t = &p.terms()[0];
        assert_eq!(t.mono.mass, LinForm::from_int(4));
        assert_eq!(t.mono.log_m, 1);
        assert_eq!(t.mono.group(0).inv, LinForm::from_int(-2));
    }

    #[test]
    fn normalize_merges_and_cancels() {
        let a = x_inv(0, -1);
        let b = x_inv(0, -1).scale_rat(&rat(1, 2));
        let s = a.add(&b); // 3/2 X^-1
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.terms()[0].mono.coeff.as_rat(), Some(rat(3, 2)));
        assert!(s.sub(&s).is_zero());
    }

    #[test]
    fn normalization_idempotent() {
        let e = x_inv(0, -2).add(&x_inv(1, -1)).add(&Expr::from_int(3));
        let renorm = Expr::from_terms(e.terms().to_vec());
        assert_eq!(e, renorm);
    }

    #[test]
    fn delta_times_singular_same_group_rejected() {
        let delta = Expr::delta(DeltaOp::Id, 4, vec![0]);
        let sing = x_inv(0, -1);
        assert!(matches!(delta.multiply(&sing), Err(Error::IllDefinedProduct(_))));
        // different group is fine
        let other = x_inv(1, -1);
        assert!(delta.multiply(&other).is_ok());
        // smooth same group is fine
        let smooth = Expr::from_mono(Monomial::one().with_x_int(0, 2));
        assert!(delta.multiply(&smooth).is_ok());
    }

    #[test]
    fn structural_factors_cannot_collide() {
        let ov = x_inv(0, -1).overline(4).unwrap();
        let sing = x_inv(0, -1);
        assert!(ov.multiply(&sing).is_err());
        let other = x_inv(1, -1);
        assert!(ov.multiply(&other).is_ok());
        let ov2 = x_inv(0, -1).overline(4).unwrap();
        assert!(ov.multiply(&ov2).is_err());
    }

    #[test]
    fn remainder_products_are_formal() {
        let r = Expr::remainder("R4[F]", LinForm::from_int(2), 4);
        let sq = r.multiply(&r).unwrap();
        assert_eq!(sq.terms().len(), 1);
        assert_eq!(sq.terms()[0].factors.len(), 2);
        let mixed = r.multiply(&x_inv(0, -1)).unwrap();
        assert_eq!(mixed.terms()[0].factors.len(), 1);
    }

    #[test]
    fn binomial_cube() {
        // 6(H+d)^3 = 6H^3 + 18H^2 d + 18H d^2 + 6d^3 with H, d formal symbols
        let h = Expr::constant(Coeff::var("H"));
        let d = Expr::constant(Coeff::var("dd"));
        let lhs = h.add(&d).pow(3).unwrap().scale_rat(&rat_int(6));
        let rhs = h
            .pow(3)
            .unwrap()
            .scale_rat(&rat_int(6))
            .add(&h.pow(2).unwrap().multiply(&d).unwrap().scale_rat(&rat_int(18)))
            .add(&h.multiply(&d.pow(2).unwrap()).unwrap().scale_rat(&rat_int(18)))
            .add(&d.pow(3).unwrap().scale_rat(&rat_int(6)));
        assert_eq!(lhs, rhs);
    }
}
