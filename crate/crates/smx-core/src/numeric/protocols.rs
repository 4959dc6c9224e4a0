//! Limit protocols built on the numeric pairing: infrared cutoff limits,
//! scaling-profile fits against log polynomials, and recovery of expansion
//! coefficients from mass samples.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::json::obj;
use crate::numeric::pairing::{pair_with_probe, Probe};
use crate::numeric::testfn::TestFunction;
use serde_json::Value;
use std::collections::BTreeMap;

/// Least squares of ys against powers of xs up to `deg`, via the normal
/// equations. Returns ascending coefficients and the rms residual.
fn polyfit(xs: &[f64], ys: &[f64], deg: usize) -> Result<(Vec<f64>, f64)> {
    let n = deg + 1;
    let mut ata = vec![vec![0.0f64; n]; n];
    let mut atb = vec![0.0f64; n];
    for (x, y) in xs.iter().zip(ys) {
        let mut pow = 1.0;
        let mut powers = Vec::with_capacity(n);
        for _ in 0..n {
            powers.push(pow);
            pow *= x;
        }
        for i in 0..n {
            atb[i] += powers[i] * y;
            for j in 0..n {
                ata[i][j] += powers[i] * powers[j];
            }
        }
    }
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, ata[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pivot < 1e-300 {
            return Err(Error::FitFailure("singular normal equations in the log fit".into()));
        }
        ata.swap(col, pivot_row);
        atb.swap(col, pivot_row);
        let prow = ata[col].clone();
        let pb = atb[col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = ata[r][col] / prow[col];
            for (c, pv) in prow.iter().enumerate().skip(col) {
                ata[r][c] -= f * pv;
            }
            atb[r] -= f * pb;
        }
    }
    let coeffs: Vec<f64> = (0..n).map(|i| atb[i] / ata[i][i]).collect();
    let mut ssr = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let mut fit = 0.0;
        for c in coeffs.iter().rev() {
            fit = fit * x + c;
        }
        ssr += (y - fit) * (y - fit);
    }
    Ok((coeffs, (ssr / xs.len() as f64).sqrt()))
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn float_list(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::from(*x)).collect())
}

#[derive(Clone, Debug)]
pub struct DirectLimitReport {
    pub limit: f64,
    pub rhos: Vec<f64>,
    pub values: Vec<f64>,
    /// Relative Cauchy increments |I_j - I_(j-1)| / max(1, |I_j|).
    pub increments: Vec<f64>,
    /// Grid index from which every increment stays below tolerance.
    pub converged_at: usize,
    pub tolerance: f64,
}

impl DirectLimitReport {
    pub fn to_json(&self) -> Value {
        obj(vec![
            ("converged_at", Value::from(self.converged_at as u64)),
            ("increments", float_list(&self.increments)),
            ("limit", Value::from(self.limit)),
            ("rhos", float_list(&self.rhos)),
            ("tolerance", Value::from(self.tolerance)),
            ("values", float_list(&self.values)),
        ])
    }
}

/// Pairs the expression against the test function under an infrared cutoff
/// that removes the ball of radius rho_j = 2^-j around the origin, and
/// checks that the values form a Cauchy sequence. Inputs whose scaling
/// degree reaches the critical dimension produce increments that never
/// contract and are reported as a convergence failure.
pub fn direct_limit_check(
    e: &Expr,
    h: &TestFunction,
    env: &BTreeMap<String, f64>,
    steps: u32,
    tol: f64,
) -> Result<DirectLimitReport> {
    let quad_tol = (tol * 1e-2).max(1e-13);
    let mut rhos = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut increments = Vec::new();
    for j in 0..=steps {
        let rho = 0.5f64.powi(j as i32);
        let probe = Probe { h, arg_scale: 1.0, cutoff: Some(rho) };
        let rep = pair_with_probe(e, &probe, env, quad_tol)?;
        if j > 0 {
            let prev = *values.last().unwrap();
            increments.push((rep.value - prev).abs() / f64::max(1.0, rep.value.abs()));
        }
        rhos.push(rho);
        values.push(rep.value);
    }
    let tail_start = increments
        .iter()
        .rposition(|d| *d > tol)
        .map(|i| i + 1)
        .unwrap_or(0);
    let settled = increments.len() - tail_start;
    if settled < 2 {
        return Err(Error::NoConvergence(format!(
            "cutoff increments do not contract below {tol}: last increments {:?}",
            &increments[increments.len().saturating_sub(3)..]
        )));
    }
    Ok(DirectLimitReport {
        limit: *values.last().unwrap(),
        rhos,
        values,
        increments,
        // +1 maps the increment index back to the rho grid.
        converged_at: tail_start + 1,
        tolerance: tol,
    })
}

#[derive(Clone, Debug)]
pub struct ScalingFitReport {
    pub degree: u32,
    pub residual: f64,
    /// Ascending coefficients of the fitted polynomial in log rho.
    pub coefficients: Vec<f64>,
    pub rhos: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalingFitReport {
    pub fn to_json(&self) -> Value {
        obj(vec![
            ("coefficients", float_list(&self.coefficients)),
            ("degree", Value::from(self.degree as u64)),
            ("residual", Value::from(self.residual)),
            ("rhos", float_list(&self.rhos)),
            ("values", float_list(&self.values)),
        ])
    }
}

const MAX_LOG_DEGREE: usize = 6;

/// Profiles rho^(degree - k) <e, h(./rho)> over a geometric rho grid and
/// fits it by a polynomial in log rho of minimal degree. An almost
/// homogeneous input of the given degree produces a polynomial profile
/// whose log-degree is its log order; anything else fails the fit.
pub fn scaling_fit(
    e: &Expr,
    h: &TestFunction,
    degree: f64,
    env: &BTreeMap<String, f64>,
    steps: u32,
    tol: f64,
) -> Result<ScalingFitReport> {
    let quad_tol = (tol * 1e-3).max(1e-14);
    let mut rhos = Vec::new();
    let mut values = Vec::new();
    for j in 0..=steps {
        let rho = 0.5f64.powi(j as i32);
        let probe = Probe { h, arg_scale: rho, cutoff: None };
        let rep = pair_with_probe(e, &probe, env, quad_tol)?;
        rhos.push(rho);
        values.push(rho.powf(degree - h.k as f64) * rep.value);
    }
    let xs: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    let scale = f64::max(1.0, rms(&values));
    let mut best = f64::INFINITY;
    for q in 0..=MAX_LOG_DEGREE.min(values.len() - 1) {
        let (coeffs, wrms) = polyfit(&xs, &values, q)?;
        let rel = wrms / scale;
        if rel < tol {
            return Ok(ScalingFitReport {
                degree: q as u32,
                residual: rel,
                coefficients: coeffs,
                rhos,
                values,
            });
        }
        best = best.min(rel);
    }
    Err(Error::FitFailure(format!(
        "no log polynomial of degree <= {MAX_LOG_DEGREE} fits the scaling profile; best relative residual {best:.3e}"
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmFitEntry {
    pub l: u32,
    pub p: u32,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct SmExtractReport {
    pub entries: Vec<SmFitEntry>,
    pub levels: u32,
    pub log_order: u32,
}

impl SmExtractReport {
    pub fn coefficient(&self, l: u32, p: u32) -> Option<f64> {
        self.entries.iter().find(|e| e.l == l && e.p == p).map(|e| e.value)
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                obj(vec![
                    ("l", Value::from(e.l as u64)),
                    ("p", Value::from(e.p as u64)),
                    ("value", Value::from(e.value)),
                ])
            })
            .collect();
        obj(vec![
            ("entries", Value::Array(entries)),
            ("levels", Value::from(self.levels as u64)),
            ("log_order", Value::from(self.log_order as u64)),
        ])
    }
}

/// Geometric mass grid, ascending.
pub fn mass_grid(m_min: f64, m_max: f64, count: usize) -> Vec<f64> {
    let ratio = (m_max / m_min).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| m_min * ratio.powi(i as i32)).collect()
}

/// One joint fit of the samples against the active basis columns.
struct JointFit {
    /// Coefficient of each column in original units.
    values: Vec<f64>,
    /// L2 size of each column's contribution to the data vector.
    contributions: Vec<f64>,
    /// Standard error of each contribution, from the inverse normal matrix.
    errors: Vec<f64>,
}

/// Least squares of the samples against the columns m^l log^p m. Each
/// column is scaled to unit norm before forming the normal equations, so
/// the mass suppression across the grid cannot wreck the conditioning.
fn joint_mass_fit(
    ms: &[f64],
    logs: &[f64],
    gs: &[f64],
    basis: &[(u32, u32)],
) -> Result<JointFit> {
    let n = basis.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for (l, p) in basis {
        let mut col: Vec<f64> = ms
            .iter()
            .zip(logs)
            .map(|(m, li)| m.powi(*l as i32) * li.powi(*p as i32))
            .collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::FitFailure("degenerate column in the mass fit".into()));
        }
        for v in &mut col {
            *v /= norm;
        }
        cols.push(col);
        norms.push(norm);
    }
    let mut ata = vec![vec![0.0f64; n]; n];
    let mut atb = vec![0.0f64; n];
    let mut aug = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        atb[i] = cols[i].iter().zip(gs).map(|(a, g)| a * g).sum();
        aug[i][i] = 1.0;
        for j in 0..n {
            ata[i][j] = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
        }
    }
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, ata[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pivot < 1e-12 {
            return Err(Error::FitFailure("collinear columns in the mass fit".into()));
        }
        ata.swap(col, pivot_row);
        atb.swap(col, pivot_row);
        aug.swap(col, pivot_row);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = ata[r][col] / ata[col][col];
            for c in 0..n {
                ata[r][c] -= f * ata[col][c];
                aug[r][c] -= f * aug[col][c];
            }
            atb[r] -= f * atb[col];
        }
    }
    let scaled: Vec<f64> = (0..n).map(|i| atb[i] / ata[i][i]).collect();
    let mut ssr = 0.0;
    for (row, g) in gs.iter().enumerate() {
        let fit: f64 = (0..n).map(|j| scaled[j] * cols[j][row]).sum();
        ssr += (g - fit) * (g - fit);
    }
    let sigma2 = ssr / gs.len().saturating_sub(n).max(1) as f64;
    Ok(JointFit {
        values: scaled.iter().zip(&norms).map(|(c, nm)| c / nm).collect(),
        contributions: scaled.iter().map(|c| c.abs()).collect(),
        errors: (0..n).map(|i| ((aug[i][i] / ata[i][i]).max(0.0) * sigma2).sqrt()).collect(),
    })
}

/// Recovers expansion coefficients u_(l,p) from samples (m_i, g(m_i)) with
/// the fixed scale M = 1.
///
/// All candidate contributions m^l log^p m are fitted jointly. Estimating
/// one mass level at a time and subtracting would propagate each level's
/// estimation bias into the deeper levels amplified by m^-l, which the
/// small-mass tail cannot absorb. Backward elimination then drops, one at
/// a time, every contribution indistinguishable from the fit residual
/// (eight standard errors) or below the noise floor of the data, so absent
/// coefficients stay absent instead of soaking up noise. Sample values
/// growing toward m = 0 faster than the allowed log power indicate a limit
/// outside the basis and abort the protocol.
pub fn sm_extract_from_samples(
    samples: &[(f64, f64)],
    l_max: u32,
    p_max: u32,
) -> Result<SmExtractReport> {
    let basis_len = (l_max as usize + 1) * (p_max as usize + 1);
    if samples.len() < basis_len + 2 {
        return Err(Error::FitFailure(format!(
            "{} samples cannot resolve {basis_len} expansion coefficients",
            samples.len()
        )));
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.first().unwrap().0 <= 0.0 || pts.last().unwrap().0 >= 1.0 {
        return Err(Error::UnsupportedOperation(
            "mass samples must lie strictly between 0 and the fixed scale M = 1".into(),
        ));
    }
    let ms: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = ms.iter().map(|m| m.ln()).collect();
    let gs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let quarter = (ms.len() / 4).max(1);
    let ys: Vec<f64> =
        gs.iter().zip(&logs).map(|(g, li)| g / li.powi(p_max as i32)).collect();
    let small: f64 = ys[..quarter].iter().map(|y| y.abs()).sum::<f64>() / quarter as f64;
    let large: f64 =
        ys[ys.len() - quarter..].iter().map(|y| y.abs()).sum::<f64>() / quarter as f64;
    if small > 3.0 * large && small > 1e-6 * (1.0 + large) {
        return Err(Error::DivergentLimit { p: p_max });
    }
    let mut active: Vec<(u32, u32)> =
        (0..=l_max).flat_map(|l| (0..=p_max).map(move |p| (l, p))).collect();
    let floor = 1e-9 * (1.0 + gs.iter().map(|g| g * g).sum::<f64>().sqrt());
    let mut entries = Vec::new();
    while !active.is_empty() {
        let fit = joint_mass_fit(&ms, &logs, &gs, &active)?;
        let weakest = (0..active.len())
            .filter(|&j| {
                fit.contributions[j] <= 8.0 * fit.errors[j] || fit.contributions[j] <= floor
            })
            .min_by(|&a, &b| fit.contributions[a].total_cmp(&fit.contributions[b]));
        match weakest {
            Some(j) => {
                active.remove(j);
            }
            None => {
                entries = active
                    .iter()
                    .zip(&fit.values)
                    .map(|(&(l, p), &value)| SmFitEntry { l, p, value })
                    .collect();
                break;
            }
        }
    }
    entries.sort_by_key(|e| (e.l, e.p));
    Ok(SmExtractReport { entries, levels: l_max, log_order: p_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, Monomial};
    use crate::models::{setting_sun_pipeline, Normalization};

    fn env() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn x_pow_log(g: u8, n: i64, q: u32) -> Expr {
        Expr::from_mono(Monomial::one().with_x_int(g, n).with_log_x(g, q))
    }

    fn x_pow(g: u8, n: i64) -> Expr {
        Expr::from_mono(Monomial::one().with_x_int(g, n))
    }

    #[test]
    fn direct_limit_converges_for_subcritical_scaling() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let e = x_pow_log(0, -1, 1);
        let rep = direct_limit_check(&e, &h, &env(), 16, 1e-6).unwrap();
        assert!(rep.converged_at <= 16, "converged at {}", rep.converged_at);
        assert!(*rep.increments.last().unwrap() < 1e-6);
        assert!(rep.limit.is_finite());
    }

    #[test]
    fn direct_limit_flags_the_critical_power() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let e = x_pow(0, -2);
        match direct_limit_check(&e, &h, &env(), 16, 1e-6) {
            Err(Error::NoConvergence(msg)) => {
                assert!(msg.contains("increments"), "{msg}");
            }
            other => panic!("expected a convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn vanishing_test_function_restores_the_critical_limit() {
        let h = TestFunction::gaussian(4, 0.0, 1.0).with_poly(vec![0.0, 1.0]);
        let e = x_pow(0, -2);
        let rep = direct_limit_check(&e, &h, &env(), 24, 1e-6).unwrap();
        assert!(*rep.increments.last().unwrap() < 1e-6);
    }

    #[test]
    fn scaling_fit_reads_off_the_log_degree() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let quarter_log = x_pow_log(0, -1, 1)
            .scale(&crate::coeff::Coeff::from_rat(crate::rat::Rat::new(1.into(), 4.into())));
        let e = quarter_log.overline(4).unwrap();
        let rep = scaling_fit(&e, &h, 2.0, &env(), 10, 1e-8).unwrap();
        assert_eq!(rep.degree, 1);
        assert!(rep.residual < 1e-8);
    }

    #[test]
    fn scaling_fit_of_a_homogeneous_input_needs_no_logs() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let rep = scaling_fit(&x_pow(0, -1), &h, 2.0, &env(), 10, 1e-8).unwrap();
        assert_eq!(rep.degree, 0);
        assert!(rep.residual < 1e-8);
    }

    #[test]
    fn scaling_fit_of_an_extended_row_stays_within_its_log_order() {
        let conv = crate::expr::MetricConvention::minkowski(4, 2);
        let pipe = setting_sun_pipeline(&conv, Normalization::Vertex).unwrap();
        let row = pipe.extended.table.row(2, 1).expect("row (2,1)").clone();
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let mut e = env();
        for name in ["a0", "a1", "A1", "hbar"] {
            e.insert(name.into(), 1.0);
        }
        let degree = (pipe.table.degree - 2) as f64;
        let rep = scaling_fit(&row, &h, degree, &e, 10, 1e-8).unwrap();
        assert!(rep.degree <= 2, "fitted degree {}", rep.degree);
        assert!(rep.residual < 1e-8);
    }

    #[test]
    fn extraction_recovers_planted_coefficients() {
        let grid = mass_grid(1e-8, 1e-3, 25);
        let samples: Vec<(f64, f64)> = grid
            .iter()
            .map(|m| {
                let l = m.ln();
                (*m, 3.0 + m * m * (5.0 + 7.0 * l) + m.powi(4))
            })
            .collect();
        let rep = sm_extract_from_samples(&samples, 2, 2).unwrap();
        let u00 = rep.coefficient(0, 0).expect("u00");
        let u20 = rep.coefficient(2, 0).expect("u20");
        let u21 = rep.coefficient(2, 1).expect("u21");
        assert!((u00 - 3.0).abs() < 1e-3, "u00 = {u00}");
        assert!((u20 - 5.0).abs() < 1e-3, "u20 = {u20}");
        assert!((u21 - 7.0).abs() < 1e-3, "u21 = {u21}");
        assert!(rep.entries.iter().all(|e| e.l != 1), "level 1 must stay empty");
        assert_eq!(rep.entries.len(), 3);
    }

    #[test]
    fn extraction_flags_a_divergent_log_limit() {
        let grid = mass_grid(1e-8, 1e-3, 25);
        let samples: Vec<(f64, f64)> =
            grid.iter().map(|m| (*m, 3.0 + m.ln() * m.ln())).collect();
        match sm_extract_from_samples(&samples, 0, 0) {
            Err(Error::DivergentLimit { p }) => assert_eq!(p, 0),
            other => panic!("expected a divergent limit, got {other:?}"),
        }
    }

    #[test]
    fn protocol_reports_are_deterministic() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let e = x_pow_log(0, -1, 1);
        let a = direct_limit_check(&e, &h, &env(), 16, 1e-6).unwrap();
        let b = direct_limit_check(&e, &h, &env(), 16, 1e-6).unwrap();
        assert_eq!(
            crate::json::to_json_string(&a.to_json()),
            crate::json::to_json_string(&b.to_json())
        );
    }
}
