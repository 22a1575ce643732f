//! Numerical kernels shared by the simulator and the likelihood.

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A series stored back to front so that the lags `x_{t-1}, x_{t-2}, ...`
/// of any index form one contiguous slice.
#[derive(Debug, Clone)]
pub(crate) struct Reversed {
    rev: Vec<f64>,
}

impl Reversed {
    pub(crate) fn new(values: &[f64]) -> Self {
        Self {
            rev: values.iter().rev().copied().collect(),
        }
    }

    pub(crate) fn zeros(len: usize) -> Self {
        Self { rev: vec![0.0; len] }
    }

    #[inline]
    pub(crate) fn set(&mut self, t: usize, v: f64) {
        let n = self.rev.len();
        self.rev[n - 1 - t] = v;
    }

    /// `x_{t-1}, ..., x_{t-lags}` for a 0-based index `t >= lags`.
    #[inline]
    pub(crate) fn lags(&self, t: usize, lags: usize) -> &[f64] {
        let n = self.rev.len();
        &self.rev[n - t..n - t + lags]
    }
}
