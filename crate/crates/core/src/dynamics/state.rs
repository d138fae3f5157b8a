use serde::Serialize;

use crate::basis::FockBasis;
use crate::error::{Error, Result};
use crate::C64;

/// Normalized amplitude vector over a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    pub amps: Vec<C64>,
}

impl QuantumState {
    pub fn from_word(basis: &FockBasis, word: &[u8]) -> Result<Self> {
        let k = basis.configuration_index(word)?;
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[k] = C64::new(1.0, 0.0);
        Ok(QuantumState { amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("state norm {n}")));
        }
        Ok(QuantumState { amps })
    }

    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if !(n > 0.0) {
            return Err(Error::Invalid("zero state".into()));
        }
        amps.iter_mut().for_each(|z| *z /= n);
        Ok(QuantumState { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: &str, times: Vec<f64>, values: Vec<f64>) -> Self {
        TimeSeries { name: name.into(), times, values }
    }

    pub fn to_csv(&self) -> String {
        series_csv(&[self])
    }

    pub fn from_csv(text: &str, column: Option<&str>) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| Error::Invalid("empty CSV".into()))?.split(',').map(str::trim).collect();
        if header.first() != Some(&"time") || header.len() < 2 {
            return Err(Error::Invalid("CSV header must start with `time` and name at least one column".into()));
        }
        let col = match column {
            Some(c) => header.iter().position(|h| *h == c).ok_or_else(|| Error::Invalid(format!("no column `{c}`")))?,
            None => 1,
        };
        let (mut times, mut values) = (vec![], vec![]);
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            let parse = |k: usize| -> Result<f64> {
                f.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Invalid(format!("line {}: bad value in column {}", n + 2, k + 1)))
            };
            times.push(parse(0)?);
            values.push(parse(col)?);
        }
        Ok(TimeSeries::new(header[col], times, values))
    }
}

/// CSV with a shared time column; every value printed with 17 significant digits.
pub fn series_csv(series: &[&TimeSeries]) -> String {
    let mut s = String::from("time");
    for x in series {
        s.push(',');
        s.push_str(&x.name);
    }
    s.push('\n');
    let Some(first) = series.first() else { return s };
    for (k, t) in first.times.iter().enumerate() {
        s.push_str(&format!("{t:.16e}"));
        for x in series {
            s.push_str(&format!(",{:.16e}", x.values[k]));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let t = TimeSeries::new("fidelity", vec![0.0, 0.1, 1.0 / 3.0], vec![1.0, 0.987654321012345678, std::f64::consts::PI]);
        let back = TimeSeries::from_csv(&t.to_csv(), None).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn bad_norm_rejected() {
        assert!(QuantumState::from_amplitudes(vec![C64::new(0.5, 0.0)]).is_err());
        let s = QuantumState::normalized(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }
}
