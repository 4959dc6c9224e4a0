//! Moment-weight solver for homogeneous extensions.
//!
//! The reduction of an order-l moment marker under restriction is the Euler
//! product `P_l(B) = prod_{j<l} (B + j)` with `B = k + E`. An extension
//! built from moments of orders `l_min..l_min+N-1` restricts back to the
//! original distribution exactly when the weights satisfy
//! `sum_l c_l P_l(B) = 1 mod (B + c + eta)^N`, where `c` is the divergence
//! shift and `eta` the regulator offset of the annihilated degree. The
//! solver works over the rational-function field in `eta`, so resonances
//! show up as poles of the weights rather than as failures.

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::poly::CoeffPoly;
use crate::rat::{rat_int, rat_string, Rat};

#[derive(Clone, Debug)]
pub struct MomentSolution {
    pub n: u32,
    pub l_min: u32,
    pub shift: Rat,
    pub eta: String,
    /// Moment order paired with its weight, a rational function of `eta`.
    pub coeffs: Vec<(u32, Coeff)>,
}

/// Coefficients of `prod_{j<l} (B + j)` as a polynomial in `A = B + shift +
/// eta`, truncated after `A^(n-1)`.
fn euler_product_mod(l: u32, shift: &Rat, eta: &str, n: usize) -> Vec<CoeffPoly> {
    let mut acc = vec![CoeffPoly::zero(); n];
    acc[0] = CoeffPoly::one();
    for j in 0..l {
        // B + j = A + (j - shift - eta)
        let c0 = CoeffPoly::constant(rat_int(j as i64) - shift.clone())
            .sub(&CoeffPoly::var(eta));
        let mut next = vec![CoeffPoly::zero(); n];
        for i in 0..n {
            next[i] = next[i].add(&acc[i].mul(&c0));
            if i + 1 < n {
                next[i + 1] = next[i + 1].add(&acc[i]);
            }
        }
        acc = next;
    }
    acc
}

/// Solves for weights on moments of orders `l_min..l_min+n-1` so that the
/// assembled extension restricts to the identity modulo the annihilator
/// `(B + shift + eta)^n`. The ambient dimension `k` only names the moment
/// markers the weights will be attached to.
pub fn moment_solver(
    n: u32,
    l_min: u32,
    shift: &Rat,
    eta: &str,
    _k: u32,
) -> Result<MomentSolution> {
    let nn = n as usize;
    let ls: Vec<u32> = (l_min..l_min + n).collect();
    let cols: Vec<Vec<CoeffPoly>> =
        ls.iter().map(|&l| euler_product_mod(l, shift, eta, nn)).collect();

    // Row i: sum_l x_l * cols[l][i] = (i == 0).
    let mut m: Vec<Vec<Coeff>> = (0..nn)
        .map(|i| {
            let mut row: Vec<Coeff> =
                cols.iter().map(|c| Coeff::from_poly(c[i].clone())).collect();
            row.push(if i == 0 { Coeff::one() } else { Coeff::zero() });
            row
        })
        .collect();

    for col in 0..nn {
        let pivot = (col..nn)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::UnsupportedOperation("singular moment system".into()))?;
        m.swap(col, pivot);
        let inv = Coeff::one().div(&m[col][col].clone())?;
        for entry in m[col].iter_mut() {
            *entry = entry.mul(&inv);
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (c2, pv) in pivot_row.iter().enumerate().skip(col) {
                let delta = pv.mul(&f);
                row[c2] = row[c2].sub(&delta);
            }
        }
    }

    let coeffs: Vec<(u32, Coeff)> =
        ls.iter().enumerate().map(|(i, &l)| (l, m[i][nn].clone())).collect();
    let sol = MomentSolution { n, l_min, shift: shift.clone(), eta: eta.to_string(), coeffs };
    moment_certificate(&sol)?;
    Ok(sol)
}

/// Recomputes `sum_l c_l P_l(B) mod (B + shift + eta)^n` and demands the
/// constant 1; the exactness certificate shipped with every solution.
pub fn moment_certificate(sol: &MomentSolution) -> Result<()> {
    let nn = sol.n as usize;
    for i in 0..nn {
        let mut acc = Coeff::zero();
        for (l, c) in &sol.coeffs {
            let pl = euler_product_mod(*l, &sol.shift, &sol.eta, nn);
            acc = acc.add(&c.mul(&Coeff::from_poly(pl[i].clone())));
        }
        let want = if i == 0 { Coeff::one() } else { Coeff::zero() };
        if acc != want {
            return Err(Error::UnsupportedOperation(format!(
                "moment certificate failed at order {i}: residual {acc}"
            )));
        }
    }
    Ok(())
}

/// Evaluates the weights at a concrete regulator offset. Poles of the
/// rational functions are the resonant degrees.
pub fn specialize_moments(sol: &MomentSolution, value: &Rat) -> Result<Vec<(u32, Coeff)>> {
    let at = CoeffPoly::constant(value.clone());
    let mut out = Vec::with_capacity(sol.coeffs.len());
    for (l, c) in &sol.coeffs {
        let den_at = c.den.subst(&sol.eta, &at);
        if den_at.is_zero() {
            return Err(Error::ResonantDegree {
                eta: rat_string(value),
                factor: format!("{}", c.den),
            });
        }
        out.push((*l, c.subst(&sol.eta, &at)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn cvar(e: &str) -> Coeff {
        Coeff::var(e)
    }

    #[test]
    fn two_term_solution() {
        let sol = moment_solver(2, 1, &rat_int(0), "eta", 4).unwrap();
        let eta = cvar("eta");
        // c1 = -(2 eta - 1)/eta^2, c2 = -1/eta^2
        let c1 = eta.scale(&rat_int(2)).sub(&Coeff::one()).neg().div(&eta.pow(2)).unwrap();
        let c2 = Coeff::one().neg().div(&eta.pow(2)).unwrap();
        assert_eq!(sol.coeffs[0], (1, c1));
        assert_eq!(sol.coeffs[1], (2, c2));
    }

    #[test]
    fn three_term_solution() {
        let sol = moment_solver(3, 1, &rat_int(0), "eta", 4).unwrap();
        let eta = cvar("eta");
        let d = eta.pow(3);
        // -(3 eta^2 - 3 eta + 1)/eta^3
        let c1 = eta
            .pow(2)
            .scale(&rat_int(3))
            .sub(&eta.scale(&rat_int(3)))
            .add(&Coeff::one())
            .neg()
            .div(&d)
            .unwrap();
        // -(3 eta - 3)/eta^3
        let c2 = eta.scale(&rat_int(3)).sub(&Coeff::from_rat(rat_int(3))).neg().div(&d).unwrap();
        let c3 = Coeff::one().neg().div(&d).unwrap();
        assert_eq!(sol.coeffs, vec![(1, c1), (2, c2), (3, c3)]);
    }

    #[test]
    fn shifted_solution() {
        let sol = moment_solver(2, 3, &rat_int(2), "eta", 8).unwrap();
        let eta = cvar("eta");
        // denominator eta^2 (1+eta)^2 (2+eta)^2
        let d = eta
            .pow(2)
            .mul(&Coeff::one().add(&eta).pow(2))
            .mul(&Coeff::from_rat(rat_int(2)).add(&eta).pow(2));
        // c3 = (2 + 2 eta - 6 eta^2 - 4 eta^3)/d
        let n3 = Coeff::from_rat(rat_int(2))
            .add(&eta.scale(&rat_int(2)))
            .sub(&eta.pow(2).scale(&rat_int(6)))
            .sub(&eta.pow(3).scale(&rat_int(4)));
        // c4 = -(2 + 6 eta + 3 eta^2)/d
        let n4 = Coeff::from_rat(rat_int(2))
            .add(&eta.scale(&rat_int(6)))
            .add(&eta.pow(2).scale(&rat_int(3)))
            .neg();
        assert_eq!(sol.coeffs[0], (3, n3.div(&d).unwrap()));
        assert_eq!(sol.coeffs[1], (4, n4.div(&d).unwrap()));
    }

    #[test]
    fn certificate_rejects_tampering() {
        let mut sol = moment_solver(2, 1, &rat_int(0), "eta", 4).unwrap();
        sol.coeffs[0].1 = sol.coeffs[0].1.add(&Coeff::one());
        assert!(moment_certificate(&sol).is_err());
    }

    #[test]
    fn resonant_specialization_is_a_pole() {
        let sol = moment_solver(2, 1, &rat_int(0), "eta", 4).unwrap();
        match specialize_moments(&sol, &rat_int(0)) {
            Err(Error::ResonantDegree { .. }) => {}
            other => panic!("expected resonance, got {other:?}"),
        }
        // away from the resonance the weights are finite
        let vals = specialize_moments(&sol, &rat(1, 3)).unwrap();
        assert_eq!(vals.len(), 2);
        assert_eq!(vals[1].1, Coeff::from_rat(rat_int(-9)));
    }

    #[test]
    fn nonresonant_rational_shift() {
        // shift 1/2: no natural-number root, eta = 0 is regular
        let sol = moment_solver(2, 1, &rat(1, 2), "eta", 4).unwrap();
        let vals = specialize_moments(&sol, &rat_int(0)).unwrap();
        for (_, v) in &vals {
            assert!(v.as_rat().is_some());
        }
    }
}
