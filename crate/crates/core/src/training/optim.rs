use std::collections::BTreeMap;

use crate::numerics::{ParamStore, Tensor};

use super::TrainError;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// AdamW with decoupled weight decay: each step first scales parameters by
/// `1 - lr·λ`, then applies the bias-corrected Adam update.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW {
    pub weight_decay: f64,
    pub step: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl AdamW {
    pub fn new(weight_decay: f64) -> AdamW {
        AdamW {
            weight_decay,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn first_moment(&self, name: &str) -> Option<&Tensor> {
        self.m.get(name)
    }

    pub fn second_moment(&self, name: &str) -> Option<&Tensor> {
        self.v.get(name)
    }

    /// Updates every parameter that has an entry in `grads`. A non-finite
    /// gradient aborts before anything is modified.
    pub fn step(
        &mut self,
        params: &mut ParamStore,
        grads: &BTreeMap<String, Tensor>,
        lr: f64,
    ) -> Result<(), TrainError> {
        for (name, g) in grads {
            let p = params
                .get(name)
                .ok_or_else(|| TrainError::UnknownParam(name.clone()))?;
            if p.shape() != g.shape() {
                return Err(TrainError::Shape {
                    name: name.clone(),
                    param: p.shape().to_vec(),
                    grad: g.shape().to_vec(),
                });
            }
            if let Some(index) = g.data().iter().position(|v| !v.is_finite()) {
                return Err(TrainError::NonFiniteGradient {
                    name: name.clone(),
                    index,
                    value: g.data()[index],
                    step: self.step + 1,
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        let shrink = 1.0 - lr * self.weight_decay;
        for (name, g) in grads {
            let p = params.get_mut(name).expect("checked above");
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(g.shape()));
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(g.shape()));
            let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
            for (i, &gi) in g.data().iter().enumerate() {
                md[i] = BETA1 * md[i] + (1.0 - BETA1) * gi;
                vd[i] = BETA2 * vd[i] + (1.0 - BETA2) * gi * gi;
                let mhat = md[i] / c1;
                let vhat = vd[i] / c2;
                pd[i] = pd[i] * shrink - lr * mhat / (vhat.sqrt() + ADAM_EPSILON);
            }
        }
        Ok(())
    }
}

/// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut BTreeMap<String, Tensor>, max_norm: f64) -> f64 {
    let norm = grads
        .values()
        .flat_map(|g| g.data().iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.values_mut() {
            g.data_mut().iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}
