use serde::{Deserialize, Serialize};

/// `n` consecutive seeds starting at `base`.
pub fn seed_triple(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| base.wrapping_add(i)).collect()
}

/// Arithmetic mean and sample standard deviation
/// (`n - 1` denominator; 0 for fewer than two values).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len();
    if n == 0 {
        return MeanStd {
            mean: f64::NAN,
            std: f64::NAN,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    MeanStd { mean, std, n }
}

/// Square root of the mean of the two sample variances.
pub fn pooled_std(a: &MeanStd, b: &MeanStd) -> f64 {
    ((a.std * a.std + b.std * b.std) / 2.0).sqrt()
}

/// Runs `f` once per seed, in order.
pub fn over_seeds<T, E, F>(seeds: &[u64], mut f: F) -> Result<Vec<T>, E>
where
    F: FnMut(u64) -> Result<T, E>,
{
    seeds.iter().map(|&s| f(s)).collect()
}
