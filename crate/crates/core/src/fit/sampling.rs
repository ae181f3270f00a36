use crate::pwl::Grid;

/// Sparse sampling matrix `[S]_{m,n} = phi_n(x_m)`; each row holds the two
/// active basis weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOperator {
    grid: Grid,
    xs: Vec<f64>,
    rows: Vec<(usize, f64, f64)>,
}

impl SamplingOperator {
    pub fn new(grid: &Grid, xs: &[f64]) -> Self {
        let rows = xs.iter().map(|&x| grid.active(x)).collect();
        Self {
            grid: grid.clone(),
            xs: xs.to_vec(),
            rows,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sample_locations(&self) -> &[f64] {
        &self.xs
    }

    /// Row `m` as `(k, phi_k(x_m), phi_{k+1}(x_m))`.
    pub fn row(&self, m: usize) -> (usize, f64, f64) {
        self.rows[m]
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.grid.len()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|&(k, w0, w1)| w0 * f[k] + w1 * f[k + 1])
            .collect()
    }

    pub fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (&(k, w0, w1), &v) in self.rows.iter().zip(u) {
            out[k] += w0 * v;
            out[k + 1] += w1 * v;
        }
        out
    }

    /// Tridiagonal `S^T S` as `(diag, off)` with `off[k]` at `(k, k+1)`.
    pub(crate) fn gram(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for &(k, w0, w1) in &self.rows {
            diag[k] += w0 * w0;
            diag[k + 1] += w1 * w1;
            off[k] += w0 * w1;
        }
        (diag, off)
    }
}
