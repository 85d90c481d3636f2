//! Per-variable standardization, fitted once on the initial training block and
//! frozen afterwards so every model in a run shares the same scale.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::types::Sample;

/// Frozen per-variable mean/std for inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    x_mean: DVector<f64>,
    x_std: DVector<f64>,
    y_mean: DVector<f64>,
    y_std: DVector<f64>,
}

impl Standardizer {
    /// Fits means and (population) standard deviations on `samples`.
    /// Constant variables get std 1 so they pass through unscaled.
    pub fn fit(samples: &[Sample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit a standardizer on an empty sample set".into(),
            ));
        }
        let d = samples[0].input_dim();
        let r = samples[0].output_dim();
        for s in samples {
            if s.input_dim() != d || s.output_dim() != r {
                return Err(Error::InvalidArgument(
                    "inconsistent sample dimensions in standardizer fit".into(),
                ));
            }
        }
        let n = samples.len() as f64;
        let mut x_mean = DVector::zeros(d);
        let mut y_mean = DVector::zeros(r);
        for s in samples {
            x_mean += &s.x;
            y_mean += &s.y;
        }
        x_mean /= n;
        y_mean /= n;

        let mut x_var = DVector::zeros(d);
        let mut y_var = DVector::zeros(r);
        for s in samples {
            let dx = &s.x - &x_mean;
            let dy = &s.y - &y_mean;
            x_var += dx.component_mul(&dx);
            y_var += dy.component_mul(&dy);
        }
        x_var /= n;
        y_var /= n;

        let floor_std = |v: f64| {
            let s = v.sqrt();
            if s.is_finite() && s > 0.0 {
                s
            } else {
                1.0
            }
        };
        Ok(Standardizer {
            x_mean,
            x_std: x_var.map(floor_std),
            y_mean,
            y_std: y_var.map(floor_std),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.x_mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.y_mean.len()
    }

    pub fn transform_x(&self, x: &DVector<f64>) -> DVector<f64> {
        (x - &self.x_mean).component_div(&self.x_std)
    }

    pub fn transform_y(&self, y: &DVector<f64>) -> DVector<f64> {
        (y - &self.y_mean).component_div(&self.y_std)
    }

    pub fn inverse_y(&self, y_std: &DVector<f64>) -> DVector<f64> {
        y_std.component_mul(&self.y_std) + &self.y_mean
    }

    pub fn transform(&self, s: &Sample) -> Sample {
        Sample {
            index: s.index,
            x: self.transform_x(&s.x),
            y: self.transform_y(&s.y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_samples() -> Vec<Sample> {
        vec![
            Sample::new(0, vec![1.0, 10.0], vec![100.0]),
            Sample::new(1, vec![3.0, 10.0], vec![300.0]),
        ]
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std() {
        let sc = Standardizer::fit(&toy_samples()).unwrap();
        let t0 = sc.transform(&toy_samples()[0]);
        let t1 = sc.transform(&toy_samples()[1]);
        assert_relative_eq!(t0.x[0] + t1.x[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(t0.x[0], -1.0, epsilon = 1e-12);
        // constant column passes through with std floor 1
        assert_relative_eq!(t0.x[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(t0.y[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_y_round_trips() {
        let sc = Standardizer::fit(&toy_samples()).unwrap();
        let y = DVector::from_vec(vec![123.0]);
        let back = sc.inverse_y(&sc.transform_y(&y));
        assert_relative_eq!(back[0], 123.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_fit_is_an_error() {
        assert!(Standardizer::fit(&[]).is_err());
    }
}
