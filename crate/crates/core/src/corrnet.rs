//! Pearson cross-correlations and the metric distance `d = sqrt(2 (1 - c))`.

use crate::error::{Error, Result};
use crate::ingest::ReturnsMatrix;

/// Symmetric `N x N` matrix of Pearson coefficients with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    symbols: Vec<String>,
    values: Vec<f64>,
}

/// Symmetric `N x N` matrix of non-negative distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    symbols: Vec<String>,
    values: Vec<f64>,
    /// The correlations this matrix was derived from, when known.
    correlations: Option<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn n(&self) -> usize {
        self.symbols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    /// Row-major entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl DistanceMatrix {
    /// Wraps an arbitrary dissimilarity matrix (row-major).
    ///
    /// Entries must be finite, symmetric, within `[0, 2]`, with a zero
    /// diagonal. Edge correlations for such a matrix are recovered by
    /// inverting `d = sqrt(2 (1 - c))`.
    pub fn from_values(symbols: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = symbols.len();
        if values.len() != n * n {
            return Err(Error::Shape(format!("{} entries for {n} symbols", values.len())));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidDistance(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = values[i * n + j];
                if !(d.is_finite() && (0.0..=2.0).contains(&d)) {
                    return Err(Error::InvalidDistance(format!("entry ({i},{j}) = {d}")));
                }
                if d != values[j * n + i] {
                    return Err(Error::InvalidDistance(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(DistanceMatrix {
            symbols,
            values,
            correlations: None,
        })
    }

    /// Builds a matrix from the strict upper triangle via `f(i, j)`, `i < j`.
    pub fn from_fn(symbols: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = symbols.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self::from_values(symbols, values)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn n(&self) -> usize {
        self.symbols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The correlation behind entry `(i, j)`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        match &self.correlations {
            Some(c) => c[i * self.n() + j],
            None => {
                let d = self.get(i, j);
                1.0 - d * d / 2.0
            }
        }
    }
}

/// Pearson correlation matrix over all rows of `returns`.
///
/// Averages are population averages (divide by `T`). Each entry is summed in
/// row order from pre-centered columns, so the result does not depend on how
/// pairs are scheduled. Values are clamped into `[-1, 1]`.
pub fn pearson_matrix(returns: &ReturnsMatrix) -> Result<CorrelationMatrix> {
    let t_len = returns.n_rows();
    let n = returns.n_cols();
    if t_len < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: t_len,
        });
    }
    if let Some(&i) = returns.constant_columns().first() {
        return Err(Error::ZeroVariance(returns.symbols()[i].clone()));
    }

    let inv_t = 1.0 / t_len as f64;
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let mean = returns.column(i).sum::<f64>() * inv_t;
        let col: Vec<f64> = returns.column(i).map(|x| x - mean).collect();
        let var = col.iter().map(|x| x * x).sum::<f64>() * inv_t;
        if var.is_nan() || var <= 0.0 {
            return Err(Error::ZeroVariance(returns.symbols()[i].clone()));
        }
        scale.push(var.sqrt());
        centered.push(col);
    }

    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            let cov = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                * inv_t;
            let c = (cov / (scale[i] * scale[j])).clamp(-1.0, 1.0);
            values[i * n + j] = c;
            values[j * n + i] = c;
        }
    }
    Ok(CorrelationMatrix {
        symbols: returns.symbols().to_vec(),
        values,
    })
}

/// Maps each correlation to `sqrt(2 (1 - c))`; the diagonal is exactly zero.
pub fn correlation_to_distance(corr: &CorrelationMatrix) -> DistanceMatrix {
    let n = corr.n();
    let values = corr
        .values
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            if k / n == k % n {
                0.0
            } else {
                (2.0 * (1.0 - c)).sqrt()
            }
        })
        .collect();
    DistanceMatrix {
        symbols: corr.symbols.clone(),
        values,
        correlations: Some(corr.values.clone()),
    }
}
