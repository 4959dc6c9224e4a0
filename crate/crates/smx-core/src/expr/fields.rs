//! Field monomials at a vertex: products of derivated scalar fields
//! `(d^b phi)^n`, their submonomial decompositions and Wick pairing counts.

use crate::rat::{rat, rat_int, Rat};
use std::collections::BTreeMap;
use std::fmt;

/// One field species: name plus total derivative order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FieldKey {
    pub field: String,
    pub deriv: u32,
}

impl FieldKey {
    pub fn plain(field: &str) -> Self {
        FieldKey { field: field.to_string(), deriv: 0 }
    }
}

/// A product of derivated fields with multiplicities, e.g. `phi^3` or
/// `phi * (d phi)^2`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FieldMonomial {
    pub powers: BTreeMap<FieldKey, u32>,
}

impl FieldMonomial {
    pub fn one() -> Self {
        FieldMonomial::default()
    }

    pub fn phi_power(n: u32) -> Self {
        let mut m = FieldMonomial::one();
        m.insert(FieldKey::plain("phi"), n);
        m
    }

    pub fn insert(&mut self, key: FieldKey, n: u32) {
        if n > 0 {
            *self.powers.entry(key).or_insert(0) += n;
        }
    }

    pub fn total_fields(&self) -> u32 {
        self.powers.values().sum()
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    /// Mass dimension in d spacetime dimensions: each field carries
    /// `(d-2)/2`, each derivative adds one.
    pub fn mass_dimension(&self, d: u32) -> Rat {
        let field_dim = rat(d as i64 - 2, 2);
        let mut acc = rat_int(0);
        for (key, n) in &self.powers {
            let per = &field_dim + rat_int(key.deriv as i64);
            acc += per * rat_int(*n as i64);
        }
        acc
    }
}

impl fmt::Display for FieldMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.powers.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (key, n) in &self.powers {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            let base = if key.deriv == 0 {
                key.field.clone()
            } else {
                format!("(d^{} {})", key.deriv, key.field)
            };
            if *n == 1 {
                write!(f, "{base}")?;
            } else {
                write!(f, "{base}^{n}")?;
            }
        }
        Ok(())
    }
}

fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// Every way of splitting the monomial into a kept part and its complement,
/// with the multiplicity of the split. The kept part descends from the full
/// monomial to 1.
pub fn submonomials(a: &FieldMonomial) -> Vec<(FieldMonomial, FieldMonomial, u64)> {
    let keys: Vec<(&FieldKey, u32)> = a.powers.iter().map(|(k, n)| (k, *n)).collect();
    let mut out = Vec::new();
    let mut kept = vec![0u32; keys.len()];

    fn rec(
        keys: &[(&FieldKey, u32)],
        idx: usize,
        kept: &mut Vec<u32>,
        out: &mut Vec<(FieldMonomial, FieldMonomial, u64)>,
    ) {
        if idx == keys.len() {
            let mut kept_m = FieldMonomial::one();
            let mut comp_m = FieldMonomial::one();
            let mut factor: u64 = 1;
            for (i, (key, n)) in keys.iter().enumerate() {
                kept_m.insert((*key).clone(), kept[i]);
                comp_m.insert((*key).clone(), n - kept[i]);
                factor *= binomial(*n, kept[i]);
            }
            out.push((kept_m, comp_m, factor));
            return;
        }
        let n = keys[idx].1;
        for j in (0..=n).rev() {
            kept[idx] = j;
            rec(keys, idx + 1, kept, out);
        }
    }

    rec(&keys, 0, &mut kept, &mut out);
    out
}

/// Number of complete Wick pairings between the fields of `a` and `b`:
/// fields pair only within the same species, and every field must pair.
pub fn pairing_count(a: &FieldMonomial, b: &FieldMonomial) -> u64 {
    let keys: std::collections::BTreeSet<&FieldKey> =
        a.powers.keys().chain(b.powers.keys()).collect();
    let mut acc: u64 = 1;
    for key in keys {
        let na = a.powers.get(key).copied().unwrap_or(0);
        let nb = b.powers.get(key).copied().unwrap_or(0);
        if na != nb {
            return 0;
        }
        acc *= factorial(na);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_squared_submonomials() {
        let subs = submonomials(&FieldMonomial::phi_power(2));
        let view: Vec<(String, String, u64)> = subs
            .iter()
            .map(|(a, b, c)| (format!("{a}"), format!("{b}"), *c))
            .collect();
        assert_eq!(
            view,
            vec![
                ("phi^2".to_string(), "1".to_string(), 1),
                ("phi".to_string(), "phi".to_string(), 2),
                ("1".to_string(), "phi^2".to_string(), 1),
            ]
        );
    }

    #[test]
    fn phi_submonomials() {
        let subs = submonomials(&FieldMonomial::phi_power(1));
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].2, 1);
        assert_eq!(subs[1].2, 1);
    }

    #[test]
    fn submonomial_factors_sum_to_subset_count() {
        // the factors over all splits of phi^n count all 2^n field subsets
        for n in 1..=6 {
            let total: u64 = submonomials(&FieldMonomial::phi_power(n)).iter().map(|s| s.2).sum();
            assert_eq!(total, 1 << n);
        }
        // multi-species check: phi^2 * (d phi) has (2+1)*(1+1) splits
        let mut a = FieldMonomial::phi_power(2);
        a.insert(FieldKey { field: "phi".into(), deriv: 1 }, 1);
        let subs = submonomials(&a);
        assert_eq!(subs.len(), 6);
        let total: u64 = subs.iter().map(|s| s.2).sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn pairing_counts() {
        assert_eq!(pairing_count(&FieldMonomial::phi_power(3), &FieldMonomial::phi_power(3)), 6);
        assert_eq!(pairing_count(&FieldMonomial::phi_power(2), &FieldMonomial::phi_power(3)), 0);
        assert_eq!(pairing_count(&FieldMonomial::one(), &FieldMonomial::one()), 1);
    }

    #[test]
    fn field_dimensions() {
        assert_eq!(FieldMonomial::phi_power(3).mass_dimension(4), rat_int(3));
        assert_eq!(FieldMonomial::phi_power(1).mass_dimension(6), rat_int(2));
        let mut a = FieldMonomial::phi_power(1);
        a.insert(FieldKey { field: "phi".into(), deriv: 2 }, 1);
        assert_eq!(a.mass_dimension(4), rat_int(4));
    }
}
