use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};

pub const MIN_PERIODS: f64 = 5.0;
/// Envelope decay e^{-W/τ} closer to 1 than this over the window W reports τ = ∞.
pub const NO_DECAY: f64 = 1e-6;

const MAX_ITER: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffRule {
    FirstEnvelopeMinimum,
    FixedTime(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub converged: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub ssr: f64,
}

/// τ fitted on windows shortened and lengthened by 20%.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowSensitivity {
    pub tau_short: Option<f64>,
    pub tau_long: Option<f64>,
    /// Largest |τ'/τ − 1| over the perturbed windows that could be fitted.
    pub max_rel_change: f64,
}

/// f(t) = A cos(Ωt + φ) exp(−t/τ). `tau` is +∞ for an undamped series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LifetimeFit {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub tau: f64,
    /// Standard errors of (A, Ω, φ, τ).
    pub std_errors: [f64; 4],
    /// Covariance of (A, Ω, φ, 1/τ).
    pub covariance: [[f64; 4]; 4],
    pub window: (f64, f64),
    pub cutoff_rule: CutoffRule,
    pub residual_rms: f64,
    pub n_points: usize,
    pub report: FitReport,
    pub sensitivity: Option<WindowSensitivity>,
}

impl LifetimeFit {
    pub fn model(&self, t: f64) -> f64 {
        let g = if self.tau.is_finite() { 1.0 / self.tau } else { 0.0 };
        model(&[self.amplitude, self.omega, self.phase, g], t)
    }

    pub fn is_undamped(&self) -> bool {
        self.tau.is_infinite()
    }
}

fn model(p: &[f64; 4], t: f64) -> f64 {
    p[0] * (p[1] * t + p[2]).cos() * (-p[3] * t).exp()
}

/// Dominant angular frequency by a periodogram of the mean-subtracted series, refined by
/// golden-section search around the best grid point.
pub fn dominant_frequency(times: &[f64], values: &[f64]) -> Result<f64> {
    let n = times.len();
    if n < 8 {
        return Err(Error::Invalid("series too short for a spectrum".into()));
    }
    let span = times[n - 1] - times[0];
    let dt = span / (n - 1) as f64;
    if !(span > 0.0) {
        return Err(Error::Invalid("series has zero time span".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let power = |w: f64| {
        let (mut c, mut s) = (0.0, 0.0);
        for (t, y) in times.iter().zip(values) {
            let (sn, cs) = (w * t).sin_cos();
            c += (y - mean) * cs;
            s += (y - mean) * sn;
        }
        c * c + s * s
    };
    let dw = 2.0 * PI / span / 8.0;
    let w_max = PI / dt;
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut w = 2.0 * PI / span;
    while w < w_max {
        let p = power(w);
        if p > best.1 {
            best = (w, p);
        }
        w += dw;
    }
    if best.1 <= 0.0 {
        return Err(Error::Invalid("series has no oscillating component".into()));
    }
    let (mut a, mut b) = (best.0 - dw, best.0 + dw);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (x1, x2) = (b - r * (b - a), a + r * (b - a));
        if power(x1) > power(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    Ok(0.5 * (a + b))
}

/// (time, |value|) at oscillation extrema. Sampled extrema are refined by a parabola through
/// their neighbours; candidates closer than `min_gap` are merged keeping the largest.
pub fn envelope_extrema(times: &[f64], values: &[f64], min_gap: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = vec![];
    for i in 1..values.len().saturating_sub(1) {
        let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
        if (y1 - y0) * (y2 - y1) >= 0.0 {
            continue;
        }
        let (t0, t1, t2) = (times[i - 1], times[i], times[i + 1]);
        let d01 = (y1 - y0) / (t1 - t0);
        let d12 = (y2 - y1) / (t2 - t1);
        let c = (d12 - d01) / (t2 - t0);
        let b = d01 - c * (t0 + t1);
        let (t, y) = if c != 0.0 {
            let tv = (-b / (2.0 * c)).clamp(t0, t2);
            (tv, y1 + b * (tv - t1) + c * (tv * tv - t1 * t1))
        } else {
            (t1, y1)
        };
        match out.last_mut() {
            Some(last) if t - last.0 < min_gap => {
                if y.abs() > last.1 {
                    *last = (t, y.abs());
                }
            }
            _ => out.push((t, y.abs())),
        }
    }
    out
}

/// Time of the first extremum whose envelope value is below both neighbours.
pub fn first_envelope_minimum(extrema: &[(f64, f64)]) -> Option<f64> {
    const REL: f64 = 1e-4;
    (1..extrema.len().saturating_sub(1))
        .find(|&k| {
            let e = extrema[k].1;
            e < extrema[k - 1].1 * (1.0 - REL) && e < extrema[k + 1].1 * (1.0 - REL)
        })
        .map(|k| extrema[k].0)
}

pub fn fit_lifetime(series: &TimeSeries, rule: CutoffRule) -> Result<LifetimeFit> {
    let (times, values) = (&series.times, &series.values);
    if times.len() != values.len() || times.len() < 16 {
        return Err(Error::Invalid(format!("series `{}` has too few points to fit", series.name)));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("series times must increase".into()));
    }
    let omega = dominant_frequency(times, values)?;
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let periods = omega * span / (2.0 * PI);
    if periods < MIN_PERIODS {
        return Err(Error::Invalid(format!(
            "series spans {periods:.2} oscillation periods; at least {MIN_PERIODS} are needed"
        )));
    }
    let extrema = envelope_extrema(times, values, 0.25 * 2.0 * PI / omega);
    let cutoff = match rule {
        CutoffRule::FixedTime(t) => {
            if !(t > t0) {
                return Err(Error::Invalid(format!("cutoff {t} precedes the series start")));
            }
            t
        }
        CutoffRule::FirstEnvelopeMinimum => first_envelope_minimum(&extrema).unwrap_or(times[times.len() - 1]),
    };
    let mut fit = fit_window(times, values, cutoff, omega, &extrema)?;
    fit.cutoff_rule = rule;

    let mut taus = [None, None];
    for (slot, f) in taus.iter_mut().zip([0.8, 1.2]) {
        let c = t0 + f * (cutoff - t0);
        *slot = fit_window(times, values, c, omega, &extrema).ok().map(|x| x.tau);
    }
    let rel = |t: Option<f64>| match t {
        Some(t) if t.is_infinite() && fit.tau.is_infinite() => 0.0,
        Some(t) => (t / fit.tau - 1.0).abs(),
        None => 0.0,
    };
    fit.sensitivity = Some(WindowSensitivity {
        tau_short: taus[0],
        tau_long: taus[1],
        max_rel_change: rel(taus[0]).max(rel(taus[1])),
    });
    Ok(fit)
}

fn fit_window(times: &[f64], values: &[f64], cutoff: f64, omega: f64, extrema: &[(f64, f64)]) -> Result<LifetimeFit> {
    let n = times.partition_point(|&t| t <= cutoff * (1.0 + 1e-12));
    if n < 16 {
        return Err(Error::Invalid(format!("fit window up to t = {cutoff} holds only {n} samples")));
    }
    let (ts, ys) = (&times[..n], &values[..n]);
    let window = (ts[0], ts[n - 1]);
    let width = window.1 - window.0;

    let inside: Vec<_> = extrema.iter().filter(|e| e.0 <= window.1).collect();
    let gamma0 = match inside.as_slice() {
        [a, b, ..] if a.1 > 0.0 && b.1 > 0.0 => ((a.1 / b.1).ln() / (b.0 - a.0)).max(0.0),
        _ => 0.0,
    };

    let mut best: Option<(Vec<f64>, FitReport)> = None;
    let starts = [(1.0, 1.0), (1.0, 0.5), (1.0, 2.0), (0.98, 1.0), (1.02, 1.0), (1.0, 0.0)];
    for (k, (wf, gf)) in starts.iter().enumerate() {
        let w = omega * wf;
        let g = gamma0 * gf;
        let (a, phi) = linear_amplitude(ts, ys, w, g);
        let (p, mut rep) = levenberg_marquardt(ts, ys, [a, w, phi, g]);
        rep.restarts = k;
        let better = match &best {
            None => true,
            Some((_, b)) => (rep.converged && !b.converged) || (rep.converged == b.converged && rep.ssr < b.ssr),
        };
        if better {
            best = Some((p.to_vec(), rep));
        }
        if best.as_ref().is_some_and(|b| b.1.converged) {
            break;
        }
    }
    let (p, report) = best.expect("at least one start");
    if !report.converged {
        return Err(Error::Numerical(format!(
            "lifetime fit did not converge after {} restarts (ssr {:.3e}, {} iterations)",
            report.restarts, report.ssr, report.iterations
        )));
    }
    let (mut a, w, mut phi, g) = (p[0], p[1], p[2], p[3]);
    if a < 0.0 {
        a = -a;
        phi += PI;
    }
    phi = (phi + PI).rem_euclid(2.0 * PI) - PI;

    let pp = [a, w, phi, g];
    let jtj = normal_matrix(ts, &pp);
    let dof = (n as f64 - 4.0).max(1.0);
    let s2 = report.ssr / dof;
    let covariance = invert4(&jtj)
        .map(|m| m.map(|r| r.map(|x| x * s2)))
        .unwrap_or([[f64::NAN; 4]; 4]);

    let decay = 1.0 - (-g * width).exp();
    let tau = if decay.abs() < NO_DECAY {
        f64::INFINITY
    } else if g < 0.0 {
        return Err(Error::Numerical(format!("fitted envelope grows (1/τ = {g:.3e})")));
    } else {
        1.0 / g
    };
    let tau_err = if tau.is_finite() { covariance[3][3].sqrt() / (g * g) } else { f64::INFINITY };
    Ok(LifetimeFit {
        amplitude: a,
        omega: w,
        phase: phi,
        tau,
        std_errors: [covariance[0][0].sqrt(), covariance[1][1].sqrt(), covariance[2][2].sqrt(), tau_err],
        covariance,
        window,
        cutoff_rule: CutoffRule::FixedTime(window.1),
        residual_rms: (report.ssr / n as f64).sqrt(),
        n_points: n,
        report,
        sensitivity: None,
    })
}

/// Amplitude and phase by linear least squares at fixed Ω and 1/τ.
fn linear_amplitude(ts: &[f64], ys: &[f64], w: f64, g: f64) -> (f64, f64) {
    let (mut cc, mut cs, mut ss, mut yc, mut ysn) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, y) in ts.iter().zip(ys) {
        let e = (-g * t).exp();
        let (s, c) = (w * t).sin_cos();
        let (c, s) = (c * e, s * e);
        cc += c * c;
        cs += c * s;
        ss += s * s;
        yc += y * c;
        ysn += y * s;
    }
    let det = cc * ss - cs * cs;
    if det.abs() < 1e-300 {
        return (1.0, 0.0);
    }
    let a = (yc * ss - ysn * cs) / det;
    let b = (ysn * cc - yc * cs) / det;
    // a cos + b sin = A cos(Ωt + φ) with A cos φ = a, −A sin φ = b
    ((a * a + b * b).sqrt(), (-b).atan2(a))
}

fn gradient(p: &[f64; 4], t: f64) -> ([f64; 4], f64) {
    let e = (-p[3] * t).exp();
    let (s, c) = (p[1] * t + p[2]).sin_cos();
    let f = p[0] * c * e;
    ([c * e, -p[0] * t * s * e, -p[0] * s * e, -t * f], f)
}

fn normal_matrix(ts: &[f64], p: &[f64; 4]) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for &t in ts {
        let (g, _) = gradient(p, t);
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += g[i] * g[j];
            }
        }
    }
    m
}

fn ssr(ts: &[f64], ys: &[f64], p: &[f64; 4]) -> f64 {
    ts.iter().zip(ys).map(|(&t, y)| (y - model(p, t)).powi(2)).sum()
}

fn levenberg_marquardt(ts: &[f64], ys: &[f64], start: [f64; 4]) -> ([f64; 4], FitReport) {
    let mut p = start;
    let mut cost = ssr(ts, ys, &p);
    let mut lambda = 1e-3;
    let scale: f64 = ys.iter().map(|y| y * y).sum::<f64>().max(1e-300);
    for it in 0..MAX_ITER {
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&t, y) in ts.iter().zip(ys) {
            let (g, f) = gradient(&p, t);
            let r = y - f;
            for i in 0..4 {
                jtr[i] += g[i] * r;
                for j in 0..4 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut m = jtj;
            for i in 0..4 {
                m[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let Some(d) = solve4(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let q = [p[0] + d[0], p[1] + d[1], p[2] + d[2], p[3] + d[3]];
            let c = ssr(ts, ys, &q);
            if c.is_finite() && c <= cost {
                let small_step = d.iter().zip(&q).all(|(d, q)| d.abs() <= 1e-12 * (q.abs() + 1e-12));
                let small_gain = cost - c <= 1e-15 * cost + 1e-30 * scale;
                p = q;
                cost = c;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if small_step || small_gain {
                    return (p, FitReport { converged: true, iterations: it + 1, restarts: 0, ssr: cost });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: stationary to working precision
            return (p, FitReport { converged: true, iterations: it + 1, restarts: 0, ssr: cost });
        }
    }
    (p, FitReport { converged: false, iterations: MAX_ITER, restarts: 0, ssr: cost })
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for c in 0..4 {
        let piv = (c..4).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if !(a[piv][c].abs() > 1e-300) {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..4 {
            let f = a[r][c] / a[c][c];
            for k in c..4 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..4).rev() {
        x[r] = (b[r] - (r + 1..4).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
    }
    Some(x)
}

fn invert4(a: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut inv = [[0.0; 4]; 4];
    for c in 0..4 {
        let mut e = [0.0; 4];
        e[c] = 1.0;
        let x = solve4(*a, e)?;
        for r in 0..4 {
            inv[r][c] = x[r];
        }
    }
    Some(inv)
}
