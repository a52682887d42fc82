use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    /// Hold the peak rate after warmup.
    Constant,
    /// Decay linearly to zero at `total_steps`.
    Linear,
}

/// Learning rate for update number `step` (the first update is step 1).
/// Ramps linearly from 0 at step 0 to `peak` at `warmup`.
pub fn lr_schedule(step: u64, warmup: u64, peak: f64, decay: Decay, total_steps: u64) -> f64 {
    if warmup > 0 && step < warmup {
        return peak * step as f64 / warmup as f64;
    }
    match decay {
        Decay::Constant => peak,
        Decay::Linear => {
            if total_steps <= warmup {
                return peak;
            }
            let left = total_steps.saturating_sub(step) as f64;
            peak * left / (total_steps - warmup) as f64
        }
    }
}
