//! Enumeration of the local ambiguity of an extension: delta counterterms
//! at the extension origin, graded by mass power, log power and derivative
//! order subject to `|beta| + l = D - k`.

use crate::expr::{DeltaOp, Expr, Group, Monomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CtFlags {
    /// Restrict to elements invariant under permuting the variable groups.
    pub symmetric: bool,
    /// Restrict to rotation/Lorentz-covariant derivative combinations.
    pub covariant: bool,
}

impl Default for CtFlags {
    fn default() -> Self {
        CtFlags { symmetric: false, covariant: true }
    }
}

/// Derivative-delta patterns of a fixed order on the origin of the combined
/// `k`-dimensional space. Covariant order-2 combinations are the per-group
/// wave operators and the mixed gradient pairings; odd covariant orders are
/// empty; everything else is kept as an unreduced span marker.
pub fn invariant_delta_ops(order: u32, k: u32, groups: &[Group], flags: &CtFlags) -> Vec<Expr> {
    let gs = groups.to_vec();
    let delta = |op: DeltaOp| Expr::delta(op, k, gs.clone());
    match (order, flags.covariant) {
        (0, _) => vec![delta(DeltaOp::Id)],
        (n, false) => vec![delta(DeltaOp::Partial(n))],
        (n, true) if n % 2 == 1 => vec![],
        (2, true) => {
            let boxes: Vec<Expr> = groups.iter().map(|&g| delta(DeltaOp::Box(g))).collect();
            let mut out = Vec::new();
            if flags.symmetric {
                let sum = boxes.iter().fold(Expr::zero(), |acc, b| acc.add(b));
                out.push(sum);
                let mixed = pair_sum(groups, k, &gs);
                if let Some(m) = mixed {
                    out.push(m);
                }
            } else {
                out.extend(boxes);
                for (i, &g1) in groups.iter().enumerate() {
                    for &g2 in &groups[i + 1..] {
                        out.push(delta(DeltaOp::GradDot(g1, g2)));
                    }
                }
            }
            out
        }
        (n, true) => vec![delta(DeltaOp::Partial(n))],
    }
}

fn pair_sum(groups: &[Group], k: u32, gs: &[Group]) -> Option<Expr> {
    let mut acc = Expr::zero();
    let mut any = false;
    for (i, &g1) in groups.iter().enumerate() {
        for &g2 in &groups[i + 1..] {
            acc = acc.add(&Expr::delta(DeltaOp::GradDot(g1, g2), k, gs.to_vec()));
            any = true;
        }
    }
    if any { Some(acc) } else { None }
}

/// Basis of local counterterms for an extension problem of total degree
/// `d_total` on a `k`-dimensional origin: all `m^l log^p(m/M) P(d) delta`
/// with `|beta| + l = d_total - k`, log powers bounded by `p_max` (and by 0
/// for the mass-independent slot).
pub fn counterterm_basis(
    d_total: i64,
    k: u32,
    groups: &[Group],
    p_max: u32,
    flags: &CtFlags,
) -> Vec<Expr> {
    if d_total < k as i64 {
        return Vec::new();
    }
    let c = (d_total - k as i64) as u32;
    let mut out = Vec::new();
    for l in 0..=c {
        let ops = invariant_delta_ops(c - l, k, groups, flags);
        if ops.is_empty() {
            continue;
        }
        let p_top = if l == 0 { 0 } else { p_max };
        for p in 0..=p_top {
            let weight = Expr::from_mono(Monomial::one().with_mass(l as i64).with_log_m(p));
            for op in &ops {
                out.push(weight.multiply(op).expect("mass weights never collide with deltas"));
            }
        }
    }
    out
}
