//! Shared record types.

use nalgebra::DVector;

/// One stream record: a `d`-dimensional input paired with an `r`-dimensional
/// target. The stream index doubles as the record's identity when the same
/// point is held by more than one memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl Sample {
    pub fn new(index: usize, x: Vec<f64>, y: Vec<f64>) -> Self {
        Sample {
            index,
            x: DVector::from_vec(x),
            y: DVector::from_vec(y),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.x.len()
    }

    pub fn output_dim(&self) -> usize {
        self.y.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite()) && self.y.iter().all(|v| v.is_finite())
    }

    /// Extended vector `z = (x, y)` used by distance-based selection.
    pub fn extended(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.x.len() + self.y.len());
        z.rows_mut(0, self.x.len()).copy_from(&self.x);
        z.rows_mut(self.x.len(), self.y.len()).copy_from(&self.y);
        z
    }
}
