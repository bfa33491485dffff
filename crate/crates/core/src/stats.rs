//! Small numeric helpers shared by the experiment modules.

/// Mean of a slice. Empty input returns NaN.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean with the n-1 variance estimator.
/// Zero for fewer than two values.
pub fn stderr(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Upper empirical quantile: the smallest sorted value with at least a
/// `level` fraction of the sample at or below it.
pub fn upper_quantile(values: &[f64], level: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&level));
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite quantile input"));
    let idx = ((level * sorted.len() as f64).ceil() as usize)
        .clamp(1, sorted.len())
        - 1;
    sorted[idx]
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr_basics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(stderr(&[5.0]), 0.0);
        let se = stderr(&[1.0, 2.0, 3.0]);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn quantile_convention() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(upper_quantile(&v, 0.95), 95.0);
        assert_eq!(upper_quantile(&v, 1.0), 100.0);
        assert_eq!(upper_quantile(&[3.0], 0.5), 3.0);
    }

    #[test]
    fn kahan_sums_repeated_step_exactly() {
        let mut acc = KahanSum::new();
        for _ in 0..250 {
            acc.add(0.01);
        }
        assert_eq!(acc.value(), 2.5);
        let mut acc = KahanSum::new();
        for _ in 0..50_000 {
            acc.add(0.01);
        }
        assert_eq!(acc.value(), 500.0);
    }
}
