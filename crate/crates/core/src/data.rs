//! Column-standardized regression data.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::norm_squared;
use crate::matrix::Matrix;
use crate::sparse::SparseCoefficients;

/// Means removed by the optional centering step, kept so fits on centered
/// data can report an intercept on the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Centering {
    /// Per-column means of the raw design.
    pub column_means: Vec<f64>,
    /// Mean of the raw response.
    pub response_mean: f64,
}

/// A response vector and a design whose columns are rescaled to norm `sqrt(n)`.
///
/// `column_scales[j]` is the multiplier `c_j` with standardized column
/// `= c_j ·` raw column, so dividing by it inverts the standardization
/// exactly, and a standardized-scale coefficient maps to the original scale
/// by multiplying with `c_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: Matrix,
    response: Vec<f64>,
    column_scales: Vec<f64>,
    centering: Option<Centering>,
}

impl Dataset {
    /// Rescale every design column to Euclidean norm `sqrt(n)`; the response
    /// is left untouched. Errors when a column is identically zero.
    pub fn standardize(design: Matrix, response: Vec<f64>) -> Result<Self> {
        Self::build(design, response, false)
    }

    /// Like [`Self::standardize`], but first removes column means from the
    /// design and the mean from the response. Intended for real-data fits
    /// where an intercept is wanted; the synthetic harness does not center.
    pub fn standardize_centered(design: Matrix, response: Vec<f64>) -> Result<Self> {
        Self::build(design, response, true)
    }

    fn build(mut design: Matrix, mut response: Vec<f64>, center: bool) -> Result<Self> {
        let n = design.rows();
        if n == 0 || design.cols() == 0 {
            return Err(Error::InvalidArgument(
                "dataset needs at least one row and one column".into(),
            ));
        }
        if response.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "response has {} entries but the design has {} rows",
                response.len(),
                n
            )));
        }
        let centering = if center {
            let mut column_means = Vec::with_capacity(design.cols());
            for j in 0..design.cols() {
                let col = design.column_mut(j);
                let mean = col.iter().sum::<f64>() / n as f64;
                for v in col.iter_mut() {
                    *v -= mean;
                }
                column_means.push(mean);
            }
            let response_mean = response.iter().sum::<f64>() / n as f64;
            for v in response.iter_mut() {
                *v -= response_mean;
            }
            Some(Centering {
                column_means,
                response_mean,
            })
        } else {
            None
        };

        let mut column_scales = Vec::with_capacity(design.cols());
        let sqrt_n = libm::sqrt(n as f64);
        for j in 0..design.cols() {
            let col = design.column_mut(j);
            let norm = libm::sqrt(norm_squared(col));
            if norm == 0.0 {
                return Err(Error::DegenerateColumn { index: j });
            }
            let scale = sqrt_n / norm;
            for v in col.iter_mut() {
                *v *= scale;
            }
            column_scales.push(scale);
        }
        Ok(Dataset {
            design,
            response,
            column_scales,
            centering,
        })
    }

    /// Sample count `n`.
    pub fn n(&self) -> usize {
        self.design.rows()
    }

    /// Predictor count `p`.
    pub fn p(&self) -> usize {
        self.design.cols()
    }

    /// The standardized design.
    pub fn design(&self) -> &Matrix {
        &self.design
    }

    /// The response (centered iff built with centering).
    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Per-column standardization multipliers.
    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    /// Centering metadata when built with centering.
    pub fn centering(&self) -> Option<&Centering> {
        self.centering.as_ref()
    }

    /// Map standardized-scale coefficients to the original column scale.
    pub fn to_original_scale(&self, standardized: &[f64]) -> Result<Vec<f64>> {
        if standardized.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector length {} does not match {} columns",
                standardized.len(),
                self.p()
            )));
        }
        Ok(standardized
            .iter()
            .zip(&self.column_scales)
            .map(|(&b, &c)| b * c)
            .collect())
    }

    /// Intercept on the original scale for a fit on centered data; `None`
    /// when the dataset was not centered.
    pub fn intercept(&self, original_scale_coefficients: &[f64]) -> Option<f64> {
        let c = self.centering.as_ref()?;
        let shift: f64 = c
            .column_means
            .iter()
            .zip(original_scale_coefficients)
            .map(|(&mean, &b)| mean * b)
            .sum();
        Some(c.response_mean - shift)
    }

    /// Residual `y - X beta` on the standardized scale.
    pub fn residual(&self, beta: &SparseCoefficients) -> Vec<f64> {
        let fitted = self
            .design
            .mul_support(beta.support(), &beta.support_values());
        self.response
            .iter()
            .zip(fitted)
            .map(|(&y, f)| y - f)
            .collect()
    }
}
