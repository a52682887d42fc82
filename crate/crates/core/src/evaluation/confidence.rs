use serde::{Deserialize, Serialize};

/// Quantile levels reported for every confidence grouping.
pub const QUANTILES: [f64; 7] = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceGroup {
    /// `top<k>`, `bottom<k>` or `all`.
    pub name: String,
    pub k: Option<usize>,
    #[serde(with = "nan_as_null")]
    pub mean: f64,
    pub count: usize,
    /// Values at [`QUANTILES`], linearly interpolated.
    #[serde(with = "nan_as_null::vec")]
    pub quantiles: Vec<f64>,
}

/// Empty groups carry NaN statistics, stored as JSON `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        v.is_finite().then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub mod vec {
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            v.iter()
                .map(|x| x.is_finite().then_some(*x))
                .collect::<Vec<_>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Option<f64>>::deserialize(d)?
                .into_iter()
                .map(|x| x.unwrap_or(f64::NAN))
                .collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceStats {
    pub groups: Vec<ConfidenceGroup>,
}

impl ConfidenceStats {
    pub fn group(&self, name: &str) -> Option<&ConfidenceGroup> {
        self.groups.iter().find(|g| g.name == name)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn group(name: String, k: Option<usize>, mut values: Vec<f64>) -> ConfidenceGroup {
    let count = values.len();
    let mean = if count == 0 {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / count as f64
    };
    values.sort_by(f64::total_cmp);
    ConfidenceGroup {
        name,
        k,
        mean,
        count,
        quantiles: QUANTILES.iter().map(|&q| quantile(&values, q)).collect(),
    }
}

/// Pools, over all prediction lists, the `k` highest and `k` lowest
/// confidences of each list (all of it when shorter than `k`) and every
/// confidence, and summarizes each pool.
pub fn confidence_stats(lists: &[Vec<f64>], ks: &[usize]) -> ConfidenceStats {
    let sorted: Vec<Vec<f64>> = lists
        .iter()
        .map(|l| {
            let mut l = l.clone();
            l.sort_by(|a, b| b.total_cmp(a));
            l
        })
        .collect();
    let mut groups = Vec::new();
    for &k in ks {
        let top = sorted.iter().flat_map(|l| l[..k.min(l.len())].iter().copied()).collect();
        groups.push(group(format!("top{k}"), Some(k), top));
    }
    for &k in ks {
        let bottom = sorted
            .iter()
            .flat_map(|l| l[l.len() - k.min(l.len())..].iter().copied())
            .collect();
        groups.push(group(format!("bottom{k}"), Some(k), bottom));
    }
    let all = sorted.iter().flatten().copied().collect();
    groups.push(group("all".into(), None, all));
    ConfidenceStats { groups }
}
