use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub correlation: f64,
    pub n: usize,
}

/// Ordinary least squares y = slope·x + intercept with Pearson correlation.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Invalid("x and y lengths differ".into()));
    }
    if n < 2 {
        return Err(Error::Invalid("need at least two points".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Invalid("degenerate regression: all x values equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let slope_stderr = if n > 2 { (ssr / (n - 2) as f64 / sxx).sqrt() } else { f64::NAN };
    let correlation = if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { f64::NAN };
    Ok(LinearFit { slope, intercept, slope_stderr, correlation, n })
}

/// τ against 1/σ from (τ, σ) pairs.
pub fn regress_tau_sigma(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::Invalid(format!("need at least {MIN_POINTS} (τ, σ) points, got {}", points.len())));
    }
    if points.iter().any(|&(t, s)| !(s > 0.0) || !t.is_finite()) {
        return Err(Error::Invalid("σ must be positive and τ finite".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| 1.0 / p.1).collect();
    let y: Vec<f64> = points.iter().map(|p| p.0).collect();
    linear_fit(&x, &y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLaw {
    pub exponent: f64,
    pub stderr: f64,
    /// log of the prefactor in 1/τ = c·δV^exponent.
    pub log_prefactor: f64,
}

/// Slope of log(1/τ) against log δV from (δV, τ) pairs.
pub fn perturbation_exponent(points: &[(f64, f64)]) -> Result<PowerLaw> {
    if points.len() < MIN_POINTS {
        return Err(Error::Invalid(format!("need at least {MIN_POINTS} (δV, τ) points, got {}", points.len())));
    }
    if points.iter().any(|&(d, t)| !(d > 0.0) || !(t > 0.0) || !t.is_finite() || !d.is_finite()) {
        return Err(Error::Invalid("δV and τ must be positive and finite".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| -p.1.ln()).collect();
    let f = linear_fit(&x, &y)?;
    Ok(PowerLaw { exponent: f.slope, stderr: f.slope_stderr, log_prefactor: f.intercept })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub parameter: String,
    pub value: f64,
    pub tau: f64,
    pub tau_stderr: f64,
    pub sigma: Option<f64>,
    pub delta_v: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    pub tau_sigma: Option<LinearFit>,
    pub exponent: Option<PowerLaw>,
}

impl ScanResult {
    /// Runs whichever regressions the points support; failures leave the slot empty.
    pub fn from_points(points: Vec<ScanPoint>) -> Self {
        let finite = |p: &&ScanPoint| p.tau.is_finite();
        let ts: Option<Vec<_>> = points.iter().filter(finite).map(|p| p.sigma.map(|s| (p.tau, s))).collect();
        let dv: Option<Vec<_>> = points.iter().filter(finite).map(|p| p.delta_v.map(|d| (d, p.tau))).collect();
        ScanResult {
            tau_sigma: ts.and_then(|v| regress_tau_sigma(&v).ok()),
            exponent: dv.and_then(|v| perturbation_exponent(&v).ok()),
            points,
        }
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let mut s = String::from("parameter,value,tau,tau_stderr,sigma,inv_sigma,delta_v,seed,config_hash\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{},{},{},{},{}\n",
                p.parameter,
                p.value,
                p.tau,
                p.tau_stderr,
                opt(p.sigma),
                opt(p.sigma.map(|x| 1.0 / x)),
                opt(p.delta_v),
                p.seed,
                p.config_hash
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|&s| (2.0 / s, s)).collect();
        let f = regress_tau_sigma(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && f.intercept.abs() < 1e-12);
        assert!((f.correlation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shuffled_pairing_lowers_correlation() {
        let sig = [0.1, 0.15, 0.2, 0.3, 0.45, 0.6];
        let tau: Vec<f64> = sig.iter().map(|s| 3.0 / s + 1.0).collect();
        let matched: Vec<_> = tau.iter().cloned().zip(sig).collect();
        let shuffled: Vec<_> = [3, 0, 5, 1, 4, 2].iter().map(|&k| tau[k]).zip(sig).collect();
        let a = regress_tau_sigma(&matched).unwrap().correlation;
        let b = regress_tau_sigma(&shuffled).unwrap().correlation;
        assert!(a > 0.999999 && b < 0.5, "{a} {b}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(regress_tau_sigma(&[(1.0, 0.5); 5]).is_err());
        assert!(regress_tau_sigma(&[(1.0, 0.5), (2.0, 0.25), (3.0, 0.1)]).is_err());
        assert!(perturbation_exponent(&[(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0)]).is_err());
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.01, 0.0125, 0.02, 0.03, 0.05].iter().map(|&d| (d, 0.7 / d)).collect();
        let e = perturbation_exponent(&pts).unwrap();
        assert!((e.exponent - 1.0).abs() < 1e-12 && e.stderr < 1e-12, "{e:?}");
    }

    #[test]
    fn scan_csv_rows_reference_config() {
        let pts = (1..=4)
            .map(|k| ScanPoint {
                parameter: "u".into(),
                value: k as f64,
                tau: k as f64,
                tau_stderr: 0.1,
                sigma: Some(1.0 / k as f64),
                delta_v: Some(1.0 / k as f64),
                seed: 7,
                config_hash: "abc".into(),
            })
            .collect();
        let r = ScanResult::from_points(pts);
        assert!((r.tau_sigma.unwrap().slope - 1.0).abs() < 1e-12);
        assert!((r.exponent.unwrap().exponent - 1.0).abs() < 1e-12);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",7,abc")));
    }
}
