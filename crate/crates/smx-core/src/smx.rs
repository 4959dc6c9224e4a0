//! Expansion tables in the mass: a finite part
//! `sum_{l<=L} m^l sum_{p<=P_l} log^p(m/M) u_{l,p}(x)` plus an opaque
//! remainder of vanishing order L+1. The coefficient distributions are
//! m-independent expressions; the remainder participates through its
//! metadata only.

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::expr::calculus::{apply_box, apply_euler};
use crate::expr::{Expr, Group, MetricConvention, Monomial};
use crate::json::{obj, to_json_string};
use crate::linform::LinForm;
use crate::rat::{rat, rat_int, Rat};
use crate::scaling::homogeneity_analyze;
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemainderMeta {
    /// Joint (x, m) scaling degree of the remainder.
    pub degree: u32,
    /// Vanishing order as m goes to 0: always the table order plus one.
    pub order: u32,
    /// Identity label; carried through products and derivatives.
    pub tag: String,
    /// True when the table is exact and the remainder vanishes identically.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmRow {
    pub l: u32,
    pub p: u32,
    pub expr: Expr,
}

#[derive(Clone, Debug)]
pub struct SmExpansion {
    pub degree: u32,
    /// Highest mass order kept in the table.
    pub order: u32,
    /// Dimension of the relative-coordinate space the coefficients live on.
    pub k: u32,
    /// Sorted by (l, p); zero entries dropped.
    pub rows: Vec<SmRow>,
    pub remainder: RemainderMeta,
}

impl PartialEq for SmExpansion {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.order == other.order
            && self.k == other.k
            && self.rows == other.rows
            && self.remainder.degree == other.remainder.degree
            && self.remainder.order == other.remainder.order
            && self.remainder.exact == other.remainder.exact
    }
}

impl SmExpansion {
    pub fn new(degree: u32, order: u32, k: u32, rows: Vec<SmRow>, tag: &str) -> Self {
        let mut s = SmExpansion {
            degree,
            order,
            k,
            rows,
            remainder: RemainderMeta {
                degree,
                order: order + 1,
                tag: tag.to_string(),
                exact: false,
            },
        };
        s.normalize_rows();
        s
    }

    /// The trivial expansion of the constant 1 (exact to every order).
    pub fn one(k: u32, order: u32) -> Self {
        let mut s = SmExpansion::new(0, order, k, vec![SmRow { l: 0, p: 0, expr: Expr::one() }], "1");
        s.remainder.exact = true;
        s
    }

    fn normalize_rows(&mut self) {
        let mut map: BTreeMap<(u32, u32), Expr> = BTreeMap::new();
        for row in std::mem::take(&mut self.rows) {
            let e = map.entry((row.l, row.p)).or_insert_with(Expr::zero);
            *e = e.add(&row.expr);
        }
        self.rows = map
            .into_iter()
            .filter(|(_, e)| !e.is_zero())
            .map(|((l, p), expr)| SmRow { l, p, expr })
            .collect();
    }

    pub fn row(&self, l: u32, p: u32) -> Option<&Expr> {
        self.rows.iter().find(|r| r.l == l && r.p == p).map(|r| &r.expr)
    }

    pub fn row_or_zero(&self, l: u32, p: u32) -> Expr {
        self.row(l, p).cloned().unwrap_or_else(Expr::zero)
    }

    /// Highest log power present at mass order l.
    pub fn log_bound(&self, l: u32) -> u32 {
        self.rows.iter().filter(|r| r.l == l).map(|r| r.p).max().unwrap_or(0)
    }

    pub fn max_log_power(&self) -> u32 {
        self.rows.iter().map(|r| r.p).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Coeff) -> SmExpansion {
        let mut s = self.clone();
        for r in &mut s.rows {
            r.expr = r.expr.scale(c);
        }
        s.normalize_rows();
        s
    }

    /// `m^l log^p(m/M) * u_{l,p}` for one row.
    pub fn row_term(row: &SmRow) -> Expr {
        let mass = Expr::from_mono(
            Monomial::one().with_mass(row.l as i64).with_log_m(row.p),
        );
        mass.multiply(&row.expr).expect("mass factors never collide with coefficients")
    }

    /// The remainder at truncation order l1 <= L: the kept rows above l1 plus
    /// the opaque tail.
    pub fn remainder_at(&self, l1: u32) -> Expr {
        let mut acc = Expr::zero();
        for row in &self.rows {
            if row.l > l1 {
                acc = acc.add(&Self::row_term(row));
            }
        }
        if !self.remainder.exact {
            acc = acc.add(&Expr::remainder(
                &self.remainder.tag,
                LinForm::from_int(self.remainder.degree as i64),
                self.remainder.order,
            ));
        }
        acc
    }

    /// The whole object as a single expression (rows plus opaque tail).
    pub fn to_expr(&self) -> Expr {
        let mut acc = Expr::zero();
        for row in &self.rows {
            acc = acc.add(&Self::row_term(row));
        }
        if !self.remainder.exact {
            acc = acc.add(&Expr::remainder(
                &self.remainder.tag,
                LinForm::from_int(self.remainder.degree as i64),
                self.remainder.order,
            ));
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        obj(vec![
            ("D", Value::from(self.degree)),
            ("L", Value::from(self.order)),
            ("k", Value::from(self.k)),
            (
                "rows",
                Value::Array(
                    self.rows
                        .iter()
                        .map(|r| {
                            obj(vec![
                                ("l", Value::from(r.l)),
                                ("p", Value::from(r.p)),
                                ("expr", r.expr.to_json()),
                            ])
                        })
                        .collect(),
                ),
            ),
            (
                "remainder",
                obj(vec![
                    ("D", Value::from(self.remainder.degree)),
                    ("order", Value::from(self.remainder.order)),
                    ("exact", Value::Bool(self.remainder.exact)),
                    ("tag", Value::String(self.remainder.tag.clone())),
                ]),
            ),
        ])
    }

    pub fn to_json_string(&self) -> String {
        to_json_string(&self.to_json())
    }
}

/// Pointwise product of two expansion tables: coefficient convolution
/// `u_l = sum_k u_{1,k} u_{2,l-k}` (log powers convolve too), degree
/// addition, order the minimum of the operands; overflow rows and remainder
/// cross terms are absorbed into the remainder metadata.
pub fn sm_product(s1: &SmExpansion, s2: &SmExpansion) -> Result<SmExpansion> {
    let order = if s1.remainder.exact && s2.remainder.exact {
        s1.order + s2.order
    } else if s1.remainder.exact {
        s2.order
    } else if s2.remainder.exact {
        s1.order
    } else {
        s1.order.min(s2.order)
    };
    let mut rows: Vec<SmRow> = Vec::new();
    for r1 in &s1.rows {
        for r2 in &s2.rows {
            let l = r1.l + r2.l;
            if l > order {
                continue;
            }
            rows.push(SmRow { l, p: r1.p + r2.p, expr: r1.expr.multiply(&r2.expr)? });
        }
    }
    let mut out = SmExpansion::new(
        s1.degree + s2.degree,
        order,
        s1.k.max(s2.k),
        rows,
        &format!("{}*{}", s1.remainder.tag, s2.remainder.tag),
    );
    out.remainder.exact = s1.remainder.exact && s2.remainder.exact;
    Ok(out)
}

pub fn sm_power(s: &SmExpansion, n: u32) -> Result<SmExpansion> {
    let mut acc = SmExpansion::one(s.k, s.order);
    for _ in 0..n {
        acc = sm_product(&acc, s)?;
    }
    Ok(acc)
}

/// Wave operator in one variable group applied row-wise; the degree rises by
/// two (both for the table and the remainder).
pub fn sm_derivative_box(
    conv: &MetricConvention,
    s: &SmExpansion,
    group: Group,
) -> Result<SmExpansion> {
    let mut rows = Vec::with_capacity(s.rows.len());
    for r in &s.rows {
        rows.push(SmRow { l: r.l, p: r.p, expr: apply_box(conv, group, &r.expr)? });
    }
    let mut out = SmExpansion::new(
        s.degree + 2,
        s.order,
        s.k,
        rows,
        &format!("box{}({})", group, s.remainder.tag),
    );
    out.remainder.exact = s.remainder.exact;
    Ok(out)
}

/// x-scaling degree bound of the remainder at truncation order L: D - (L+1).
pub fn sm_remainder_bound(s: &SmExpansion) -> Rat {
    rat_int(s.degree as i64) - rat_int(s.remainder.order as i64)
}

#[derive(Clone, Debug)]
pub struct SmCheckItem {
    pub property: char,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SmCheckReport {
    pub items: Vec<SmCheckItem>,
    pub degree: u32,
}

impl SmCheckReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn to_json(&self) -> Value {
        obj(vec![
            ("D", Value::from(self.degree)),
            ("pass", Value::Bool(self.all_pass())),
            (
                "properties",
                Value::Array(
                    self.items
                        .iter()
                        .map(|i| {
                            obj(vec![
                                ("property", Value::String(i.property.to_string())),
                                ("pass", Value::Bool(i.pass)),
                                ("detail", Value::String(i.detail.clone())),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }
}

/// Structural audit of a table: (A) the mass-independent head has no log
/// rows, (B) coefficients are genuinely m-independent log polynomials, (C)
/// every row is almost homogeneous of degree D - l, (D)/(E) the remainder
/// metadata is consistent.
pub fn sm_check(s: &SmExpansion) -> SmCheckReport {
    let mut items = Vec::new();

    let a_bad: Vec<String> = s
        .rows
        .iter()
        .filter(|r| r.l == 0 && r.p > 0)
        .map(|r| format!("u[0][{}]", r.p))
        .collect();
    items.push(SmCheckItem {
        property: 'A',
        pass: a_bad.is_empty(),
        detail: if a_bad.is_empty() {
            "head coefficient is m-independent".into()
        } else {
            format!("mass logs in the head: {}", a_bad.join(", "))
        },
    });

    let b_bad: Vec<String> = s
        .rows
        .iter()
        .filter(|r| expr_depends_on_mass(&r.expr))
        .map(|r| format!("u[{}][{}]", r.l, r.p))
        .collect();
    items.push(SmCheckItem {
        property: 'B',
        pass: b_bad.is_empty(),
        detail: if b_bad.is_empty() {
            "coefficients are m-independent".into()
        } else {
            format!("m-dependent coefficients: {}", b_bad.join(", "))
        },
    });

    let mut c_bad: Vec<String> = Vec::new();
    for r in &s.rows {
        let want = LinForm::from_int(s.degree as i64 - r.l as i64);
        match homogeneity_analyze(&r.expr, false) {
            Ok(rep) if rep.degree == want => {}
            Ok(rep) => c_bad.push(format!(
                "u[{}][{}] has degree {} instead of {}",
                r.l, r.p, rep.degree, want
            )),
            Err(e) => c_bad.push(format!("u[{}][{}]: {e}", r.l, r.p)),
        }
    }
    items.push(SmCheckItem {
        property: 'C',
        pass: c_bad.is_empty(),
        detail: if c_bad.is_empty() {
            "all rows almost homogeneous with degree D - l".into()
        } else {
            c_bad.join("; ")
        },
    });

    items.push(SmCheckItem {
        property: 'D',
        pass: s.remainder.degree == s.degree,
        detail: format!(
            "remainder joint degree {} (table degree {})",
            s.remainder.degree, s.degree
        ),
    });

    items.push(SmCheckItem {
        property: 'E',
        pass: s.remainder.order > s.order,
        detail: format!(
            "remainder vanishing order {} (table order {})",
            s.remainder.order, s.order
        ),
    });

    SmCheckReport { items, degree: s.degree }
}

fn expr_depends_on_mass(e: &Expr) -> bool {
    e.terms().iter().any(|t| {
        !t.mono.mass.is_zero()
            || t.mono.log_m > 0
            || t.factors.iter().any(|f| match f {
                crate::expr::Factor::Overline { child, .. }
                | crate::expr::Factor::MomentDiv { child, .. }
                | crate::expr::Factor::BoxOp { child, .. } => expr_depends_on_mass(child),
                crate::expr::Factor::Delta { .. } => false,
                crate::expr::Factor::Remainder { .. } => true,
            })
    })
}

/// Certifies the joint scaling of every row: `(E - m d/dm + D)^N` kills
/// `m^l log^p(m/M) u_{l,p}` for N = annihilator order; returns the maximal
/// order over the rows.
pub fn sm_joint_scaling_order(s: &SmExpansion, n_max: u32) -> Result<u32> {
    let shift = Coeff::from_rat(rat_int(s.degree as i64));
    let mut worst = 0u32;
    for row in &s.rows {
        let mut acc = SmExpansion::row_term(row);
        let mut killed = false;
        for n in 1..=n_max {
            acc = apply_euler(&acc, true)?.add(&acc.scale(&shift));
            if acc.is_zero() {
                worst = worst.max(n);
                killed = true;
                break;
            }
        }
        if !killed {
            return Err(Error::NotAlmostHomogeneous {
                degree: s.degree.to_string(),
                with_mass: true,
                n_max,
            });
        }
    }
    Ok(worst)
}

/// The generic even-dimension massive propagator table: a head `a0 X^(1-d/2)`
/// and mass rows `m^(2j) X^(j+1-d/2) (a_j (log(M^2 X) + 2 log(m/M)) + A_j)`.
/// The `log_m_rows` switch drops the `2 a_j log(m/M)` parts (a propagator
/// smooth in m^2, with its scale logs folded into the constants).
pub fn propagator_table(
    d: u32,
    order: u32,
    group: Group,
    k: u32,
    log_m_rows: bool,
    tag: &str,
    extra_const: Option<&str>,
) -> SmExpansion {
    let half = d as i64 / 2;
    let mut rows = Vec::new();
    rows.push(SmRow {
        l: 0,
        p: 0,
        expr: Expr::from_mono(
            Monomial::one().with_coeff(Coeff::var("a0")).with_x_int(group, 1 - half),
        ),
    });
    for j in 1..=(order / 2) {
        let a = Coeff::var(&format!("a{j}"));
        let big_a = {
            let base = Coeff::var(&format!("A{j}"));
            match extra_const {
                None => base,
                Some(name) => base.add(&a.mul(&Coeff::var(name)).scale(&rat_int(2))),
            }
        };
        let xpow = j as i64 + 1 - half;
        let logless = Expr::from_mono(
            Monomial::one().with_coeff(a.clone()).with_x_int(group, xpow).with_log_x(group, 1),
        )
        .add(&Expr::from_mono(Monomial::one().with_coeff(big_a).with_x_int(group, xpow)));
        rows.push(SmRow { l: 2 * j, p: 0, expr: logless });
        if log_m_rows {
            rows.push(SmRow {
                l: 2 * j,
                p: 1,
                expr: Expr::from_mono(
                    Monomial::one().with_coeff(a.scale(&rat_int(2))).with_x_int(group, xpow),
                ),
            });
        }
    }
    SmExpansion::new(d - 2, order, k, rows, tag)
}

/// Dimension of the head singularity: d - 2, as a rational.
pub fn propagator_degree(d: u32) -> Rat {
    rat(d as i64 - 2, 1)
}
