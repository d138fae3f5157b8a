use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ShotAverage {
    pub mean: TimeSeries,
    /// Sample standard deviation across shots (zero for a single shot).
    pub spread: TimeSeries,
    pub shots: Vec<TimeSeries>,
}

pub fn shot_average(shots: &[TimeSeries]) -> Result<ShotAverage> {
    let first = shots.first().ok_or_else(|| Error::Invalid("no shots to average".into()))?;
    for s in shots {
        if s.times != first.times || s.values.len() != first.times.len() {
            return Err(Error::Mismatch(format!("shot `{}` has a different time grid", s.name)));
        }
    }
    let n = shots.len() as f64;
    let len = first.times.len();
    let mean: Vec<f64> = (0..len).map(|k| shots.iter().map(|s| s.values[k]).sum::<f64>() / n).collect();
    let spread = (0..len)
        .map(|k| {
            if shots.len() < 2 {
                return 0.0;
            }
            (shots.iter().map(|s| (s.values[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect();
    Ok(ShotAverage {
        mean: TimeSeries::new(&format!("{}_mean", first.name), first.times.clone(), mean),
        spread: TimeSeries::new(&format!("{}_std", first.name), first.times.clone(), spread),
        shots: shots.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> TimeSeries {
        TimeSeries::new("x", (0..v.len()).map(|k| k as f64).collect(), v.to_vec())
    }

    #[test]
    fn identical_shots() {
        let s = series(&[1.0, 0.5, -0.25]);
        let a = shot_average(&[s.clone(), s.clone(), s.clone()]).unwrap();
        assert_eq!(a.mean.values, s.values);
        assert!(a.spread.values.iter().all(|&x| x == 0.0));
        assert_eq!(a.shots.len(), 3);
    }

    #[test]
    fn opposite_shots_cancel() {
        let a = shot_average(&[series(&[1.0, -2.0, 0.3]), series(&[-1.0, 2.0, -0.3])]).unwrap();
        assert!(a.mean.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn grid_mismatch() {
        let mut b = series(&[1.0, 2.0, 3.0]);
        b.times[1] = 1.5;
        assert!(shot_average(&[series(&[1.0, 2.0, 3.0]), b]).is_err());
    }
}
