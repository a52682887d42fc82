//! Central finite differences against analytic gradients.
//!
//! Only meaningful for functions that are smooth around the probe point.
//! Piecewise-constant functions (argmax, top-k selection) and functions with
//! kinks inside the probe radius are unsupported inputs: the check will
//! report arbitrary errors for them.

use std::collections::BTreeMap;

use super::params::ParamStore;
use super::tensor::Tensor;

/// Denominator floor for the relative error so that components where both
/// gradients are essentially zero compare on an absolute scale.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst component.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Perturbs every scalar of every parameter in `analytic` by `±eps` and
/// compares `(f(θ+ε) − f(θ−ε)) / 2ε` against the analytic value.
pub fn finite_difference_check<F>(
    mut f: F,
    params: &ParamStore,
    analytic: &BTreeMap<String, Tensor>,
    eps: f64,
) -> GradCheck
where
    F: FnMut(&ParamStore) -> f64,
{
    let mut probe = params.clone();
    let mut report = GradCheck {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
    };
    for (name, grad) in analytic {
        let n = grad.len();
        for i in 0..n {
            let orig = probe.get(name).expect("analytic names exist").data()[i];
            probe.get_mut(name).unwrap().data_mut()[i] = orig + eps;
            let plus = f(&probe);
            probe.get_mut(name).unwrap().data_mut()[i] = orig - eps;
            let minus = f(&probe);
            probe.get_mut(name).unwrap().data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = grad.data()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    report
}
