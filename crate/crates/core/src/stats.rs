//! Streaming first and second moments.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance; zero with fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Folds per-batch moment vectors (one entry per tracked quantity) in order.
pub fn merge_all<'a, I: IntoIterator<Item = &'a [Moments]>>(width: usize, parts: I) -> Vec<Moments> {
    let mut out = vec![Moments::default(); width];
    for part in parts {
        for (acc, m) in out.iter_mut().zip(part) {
            acc.merge(m);
        }
    }
    out
}

/// |a - b| in units of the combined standard error.
pub fn discrepancy(a: &Moments, b: &Moments) -> f64 {
    let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
    let d = (a.mean() - b.mean()).abs();
    if se == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        d / se
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_small_sample() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.std_error() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_sample_has_zero_error() {
        let mut m = Moments::default();
        for _ in 0..10 {
            m.push(1.0);
        }
        assert_eq!(m.std_error(), 0.0);
        assert_eq!(discrepancy(&m, &m), 0.0);
    }
}
