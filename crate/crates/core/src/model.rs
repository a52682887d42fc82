//! Text and multimodal reference models sharing one encoder layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{
    mm_ground_truth, text_ground_truth, MmGroundTruth, MmInstance, PerLabel, RelationLabel,
    TextGroundTruth, TextInstance,
};
use crate::encoder::{tokenize_window, Encoder, EncoderConfig, Vocab, ENCODER_PREFIX};
use crate::fusion::{Fusion, FusionConfig};
use crate::heads::{loss_mrr, loss_trr, MrrHead, TrrHead};
use crate::numerics::{Graph, ParamStore, Tensor, TensorError, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Textual reference resolution: encoder + mention-mention head.
    Trr,
    /// Multimodal reference resolution: encoder + fusion + mention-object head.
    Mrr,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Trr => "trr",
            ModelKind::Mrr => "mrr",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub encoder: EncoderConfig,
    /// Present exactly for [`ModelKind::Mrr`].
    pub fusion: Option<FusionConfig>,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.encoder.validate()?;
        match (self.kind, &self.fusion) {
            (ModelKind::Trr, None) => Ok(()),
            (ModelKind::Trr, Some(_)) => Err("text models take no fusion config".into()),
            (ModelKind::Mrr, None) => Err("multimodal models need a fusion config".into()),
            (ModelKind::Mrr, Some(f)) => {
                f.validate()?;
                if f.d_text != self.encoder.d_model {
                    return Err(format!(
                        "fusion text width {} differs from encoder width {}",
                        f.d_text, self.encoder.d_model
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("encoder transfer mismatch: {0}")]
    TransferMismatch(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// A tokenized text window with its gold targets.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedText {
    pub ids: Vec<u32>,
    pub mentions: Vec<u32>,
    pub first_subwords: Vec<usize>,
    pub gold: TextGroundTruth,
}

/// A tokenized window, one frame's candidate features and gold targets.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedMm {
    pub ids: Vec<u32>,
    pub mentions: Vec<u32>,
    pub first_subwords: Vec<usize>,
    pub features: Tensor,
    pub gold: MmGroundTruth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub encoder: Encoder,
    pub fusion: Option<Fusion>,
    pub trr: Option<TrrHead>,
    pub mrr: Option<MrrHead>,
    pub params: ParamStore,
}

impl Model {
    /// Builds the model and initializes every parameter from `seed`
    /// (encoder, then fusion, then head).
    pub fn new(config: ModelConfig, vocab: Vocab, seed: u64) -> Result<Model, ModelError> {
        let mut model = Model::skeleton(config, vocab)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        model.encoder.init(&mut store, &mut rng);
        if let Some(f) = &model.fusion {
            f.init(&mut store, &mut rng);
        }
        if let Some(h) = &model.trr {
            h.init(&mut store, &mut rng);
        }
        if let Some(h) = &model.mrr {
            h.init(&mut store, &mut rng);
        }
        model.params = store;
        Ok(model)
    }

    /// Layout only, with an empty parameter store.
    pub fn skeleton(config: ModelConfig, vocab: Vocab) -> Result<Model, ModelError> {
        config.validate().map_err(ModelError::Config)?;
        let encoder = Encoder::new(config.encoder.clone(), vocab.len());
        let (fusion, trr, mrr) = match &config.fusion {
            None => (None, Some(TrrHead::new(config.encoder.d_model)), None),
            Some(f) => (
                Some(Fusion::new(f.clone())),
                None,
                Some(MrrHead::new(f.d_model)),
            ),
        };
        Ok(Model {
            config,
            vocab,
            encoder,
            fusion,
            trr,
            mrr,
            params: ParamStore::new(),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    /// Replaces every encoder parameter with the one in `source`. Encoder
    /// configs and vocabularies must agree.
    pub fn load_encoder_from(&mut self, source: &Model) -> Result<(), ModelError> {
        if source.config.encoder != self.config.encoder {
            return Err(ModelError::TransferMismatch(format!(
                "encoder config {:?} vs {:?}",
                source.config.encoder, self.config.encoder
            )));
        }
        if source.vocab != self.vocab {
            return Err(ModelError::TransferMismatch(format!(
                "vocabularies differ ({} vs {} entries)",
                source.vocab.len(),
                self.vocab.len()
            )));
        }
        let names: Vec<String> = self
            .params
            .with_prefix(ENCODER_PREFIX)
            .map(|(n, _)| n.clone())
            .collect();
        for n in names {
            let v = source
                .params
                .get(&n)
                .ok_or_else(|| ModelError::TransferMismatch(format!("source lacks {n}")))?;
            self.params.insert(n, v.clone());
        }
        Ok(())
    }

    pub fn prepare_text(&self, inst: &TextInstance, labels: &[RelationLabel]) -> PreparedText {
        let tok = tokenize_window(inst, &self.vocab, self.config.encoder.max_len);
        let mentions = tok.mention_ids();
        let gold = text_ground_truth(inst, &mentions, labels);
        PreparedText {
            first_subwords: tok.first_subwords(),
            ids: tok.ids,
            mentions,
            gold,
        }
    }

    /// `None` when the frame has no candidates.
    pub fn prepare_mm(
        &self,
        inst: &MmInstance,
        labels: &[RelationLabel],
    ) -> Result<Option<PreparedMm>, ModelError> {
        let q = inst.candidates.len();
        if q == 0 {
            return Ok(None);
        }
        let d = self.config.fusion.as_ref().map_or(0, |f| f.d_object);
        let mut data = Vec::with_capacity(q * d);
        for c in &inst.candidates {
            if c.feature.len() != d {
                return Err(ModelError::Config(format!(
                    "candidate feature width {} differs from configured {d}",
                    c.feature.len()
                )));
            }
            data.extend(c.feature.iter().map(|&v| v as f64));
        }
        let tok = tokenize_window(&inst.window, &self.vocab, self.config.encoder.max_len);
        let mentions = tok.mention_ids();
        let gold = mm_ground_truth(inst, &mentions, labels);
        Ok(Some(PreparedMm {
            first_subwords: tok.first_subwords(),
            ids: tok.ids,
            mentions,
            features: Tensor::matrix(q, d, data)?,
            gold,
        }))
    }

    fn head_missing(&self) -> ModelError {
        ModelError::Config(format!("{} model lacks this head", self.kind().as_str()))
    }

    /// `m×(m+1)` TRR logits per label.
    pub fn text_logits(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        ids: &[u32],
        first_subwords: &[usize],
        labels: &[RelationLabel],
    ) -> Result<PerLabel<Var>, ModelError> {
        let head = self.trr.as_ref().ok_or_else(|| self.head_missing())?;
        let t = self.encoder.forward(g, store, ids, None)?;
        let rows = g.gather_rows(t, first_subwords)?;
        Ok(head.logits(g, store, rows, labels)?)
    }

    /// `m×q` MRR logits per label.
    pub fn mm_logits(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        ids: &[u32],
        first_subwords: &[usize],
        features: &Tensor,
        labels: &[RelationLabel],
    ) -> Result<PerLabel<Var>, ModelError> {
        let (fusion, head) = match (&self.fusion, &self.mrr) {
            (Some(f), Some(h)) => (f, h),
            _ => return Err(self.head_missing()),
        };
        let t = self.encoder.forward(g, store, ids, None)?;
        let x = g.constant(features.clone());
        let (tp, xp) = fusion.project_inputs(g, store, t, x)?;
        let fused = fusion.decode(g, store, xp, tp, None)?;
        let rows = g.gather_rows(tp, first_subwords)?;
        Ok(head.logits(g, store, rows, fused, labels)?)
    }

    pub fn text_loss(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        inst: &PreparedText,
        active: &[RelationLabel],
    ) -> Result<Var, ModelError> {
        let logits = self.text_logits(g, store, &inst.ids, &inst.first_subwords, active)?;
        Ok(loss_trr(g, &logits, &inst.gold, active)?)
    }

    pub fn mm_loss(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        inst: &PreparedMm,
        active: &[RelationLabel],
    ) -> Result<Var, ModelError> {
        let logits = self.mm_logits(
            g,
            store,
            &inst.ids,
            &inst.first_subwords,
            &inst.features,
            active,
        )?;
        Ok(loss_mrr(g, &logits, &inst.gold, active)?)
    }

    /// Plain-value MRR logits for one prepared instance.
    pub fn mm_scores(
        &self,
        inst: &PreparedMm,
        labels: &[RelationLabel],
    ) -> Result<PerLabel<Tensor>, ModelError> {
        let mut g = Graph::new();
        let l = self.mm_logits(
            &mut g,
            &self.params,
            &inst.ids,
            &inst.first_subwords,
            &inst.features,
            labels,
        )?;
        let mut out = PerLabel::new();
        for (label, &v) in l.iter() {
            out.insert(label, g.value(v).clone());
        }
        Ok(out)
    }

    /// Plain-value TRR logits for one prepared instance.
    pub fn text_scores(
        &self,
        inst: &PreparedText,
        labels: &[RelationLabel],
    ) -> Result<PerLabel<Tensor>, ModelError> {
        let mut g = Graph::new();
        let l = self.text_logits(&mut g, &self.params, &inst.ids, &inst.first_subwords, labels)?;
        let mut out = PerLabel::new();
        for (label, &v) in l.iter() {
            out.insert(label, g.value(v).clone());
        }
        Ok(out)
    }
}
