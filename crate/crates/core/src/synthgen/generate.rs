use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{
    assign_feature_refs, iou, BoundingBox, CandidatesRef, DialogueDocument, Frame, Mention,
    ObjectCandidate, PartOfSpeech, RelationLabel, Speaker, TextRelation, Utterance,
    VisualRelation, SCHEMA_VERSION,
};

use super::lexicon::*;

pub const IMAGE_WIDTH: i64 = 640;
pub const IMAGE_HEIGHT: i64 = 480;
/// Upper bound on IoU between any two boxes of one scene.
pub const MAX_SCENE_IOU: f64 = 0.3;
/// Candidate slot of the master (speaker A) in every frame.
pub const MASTER_SLOT: usize = 0;
/// Candidate slot of the robot (speaker B) in every frame.
pub const ROBOT_SLOT: usize = 1;
/// Utterances, counting back from the current one, within which an earlier
/// noun keeps an object eligible for pronoun or zero realization.
pub const RESOLUTION_WINDOW: usize = 3;

const TOPIC_REUSE: f64 = 0.6;
const ACK_RATE: f64 = 0.15;
const ATTRIBUTE_RATE: f64 = 0.3;
const LISTENER_AGENT_RATE: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub dialogues: usize,
    pub min_utterances: usize,
    pub max_utterances: usize,
    /// Number of object prototypes drawn from the lexicon.
    pub object_vocabulary: usize,
    /// Gold objects placed in each dialogue's scene.
    pub scene_objects: usize,
    /// Candidates per frame, including the two participant slots.
    pub candidates: usize,
    pub pronoun_rate: f64,
    pub zero_rate: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dialogues: 100,
            min_utterances: 10,
            max_utterances: 16,
            object_vocabulary: OBJECT_NOUNS.len(),
            scene_objects: 4,
            candidates: 8,
            pronoun_rate: 0.5,
            zero_rate: 0.3,
            feature_dim: 64,
            feature_noise: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("infeasible config: {0}")]
    Infeasible(String),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Infeasible(m));
        for (name, r) in [("pronoun_rate", self.pronoun_rate), ("zero_rate", self.zero_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} {r} outside [0, 1]"));
            }
        }
        if self.min_utterances == 0 || self.min_utterances > self.max_utterances {
            return bad("utterance range must be non-empty and positive".into());
        }
        if self.object_vocabulary > OBJECT_NOUNS.len() {
            return bad(format!("at most {} object prototypes", OBJECT_NOUNS.len()));
        }
        if self.scene_objects < 2 || self.scene_objects > self.object_vocabulary {
            return bad(format!(
                "scene needs between 2 and {} objects, got {}",
                self.object_vocabulary, self.scene_objects
            ));
        }
        if self.candidates < self.scene_objects + 2 {
            return bad(format!(
                "{} gold objects plus 2 participants exceed {} candidates",
                self.scene_objects, self.candidates
            ));
        }
        if self.candidates > self.scene_objects + 2 && self.object_vocabulary == self.scene_objects {
            return bad("distractors need prototypes outside the scene".into());
        }
        if self.feature_dim == 0 || !(self.feature_noise >= 0.0) {
            return bad("feature_dim must be positive and noise non-negative".into());
        }
        Ok(())
    }
}

/// One object class (or participant) with its feature centroid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectPrototype {
    pub class_id: usize,
    pub noun: Vec<String>,
    pub attributes: Vec<String>,
    pub feature: Vec<f32>,
}

/// Counts of Bernoulli draws, for checking realized rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub pronoun_trials: u64,
    pub pronoun_hits: u64,
    pub zero_trials: u64,
    pub zero_hits: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub documents: Vec<DialogueDocument>,
    /// Object prototypes followed by the master and robot prototypes.
    pub prototypes: Vec<ObjectPrototype>,
    pub stats: GenerationStats,
}

/// Object prototypes then master and robot, with centroids at least
/// `0.75·√(2d)` apart where achievable.
pub fn prototypes(cfg: &SynthConfig) -> Vec<ObjectPrototype> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let n = cfg.object_vocabulary + 2;
    let d = cfg.feature_dim;
    let min_dist = 0.75 * (2.0 * d as f64).sqrt();
    let mut feats: Vec<Vec<f32>> = Vec::with_capacity(n);
    while feats.len() < n {
        let mut best: Option<(f64, Vec<f32>)> = None;
        for _ in 0..64 {
            let f: Vec<f32> = (0..d)
                .map(|_| StandardNormal.sample(&mut rng))
                .map(|v: f64| v as f32)
                .collect();
            let nearest = feats
                .iter()
                .map(|g| {
                    f.iter()
                        .zip(g)
                        .map(|(a, b)| ((a - b) as f64).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            if nearest >= min_dist {
                best = Some((nearest, f));
                break;
            }
            if best.as_ref().is_none_or(|(b, _)| nearest > *b) {
                best = Some((nearest, f));
            }
        }
        feats.push(best.expect("at least one sample").1);
    }
    feats
        .into_iter()
        .enumerate()
        .map(|(class_id, feature)| {
            let (noun, attributes) = if class_id < cfg.object_vocabulary {
                (
                    OBJECT_NOUNS[class_id].iter().map(|s| s.to_string()).collect(),
                    vec![ATTRIBUTES[class_id % ATTRIBUTES.len()].to_string()],
                )
            } else if class_id == cfg.object_vocabulary {
                (vec![MASTER.to_string()], Vec::new())
            } else {
                (vec![ROBOT.to_string()], Vec::new())
            };
            ObjectPrototype {
                class_id,
                noun,
                attributes,
                feature,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Entity {
    Object(usize),
    Master,
    Robot,
}

fn participant(s: Speaker) -> Entity {
    match s {
        Speaker::A => Entity::Master,
        Speaker::B => Entity::Robot,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Realization {
    Noun,
    Pronoun,
    Zero,
}

fn sample_box<R: Rng>(rng: &mut R, taken: &[BoundingBox]) -> BoundingBox {
    loop {
        let w = rng.random_range(60..=160i64);
        let h = rng.random_range(60..=160i64);
        let x = rng.random_range(0..=IMAGE_WIDTH - w);
        let y = rng.random_range(0..=IMAGE_HEIGHT - h);
        let b = BoundingBox::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64)
            .expect("positive size");
        if taken.iter().all(|t| iou(t, &b) < MAX_SCENE_IOU) {
            return b;
        }
    }
}

struct DialogueBuilder<'a> {
    cfg: &'a SynthConfig,
    protos: &'a [ObjectPrototype],
    rng: ChaCha8Rng,
    stats: GenerationStats,
    scene: Vec<usize>,
    boxes: HashMap<Entity, BoundingBox>,
    last_mention: HashMap<Entity, u32>,
    last_noun_utt: HashMap<Entity, usize>,
    topic: Option<usize>,
    mentions: Vec<Mention>,
    text_relations: Vec<TextRelation>,
    // Per utterance
    utt: usize,
    tokens: Vec<String>,
    visual: Vec<VisualRelation>,
    special_used: bool,
}

impl DialogueBuilder<'_> {
    fn bernoulli(&mut self, p: f64) -> bool {
        self.rng.random::<f64>() < p
    }

    fn push_word(&mut self, w: &str) {
        self.tokens.push(w.to_string());
    }

    fn push_mention(&mut self, words: &[String], pos: PartOfSpeech) -> u32 {
        let id = self.mentions.len() as u32;
        let start = self.tokens.len();
        self.tokens.extend(words.iter().cloned());
        self.mentions.push(Mention {
            id,
            utt: self.utt,
            span: [start, self.tokens.len()],
            pos,
        });
        id
    }

    fn visual(&mut self, src: u32, label: RelationLabel, e: Entity, zero_ref: bool) {
        self.visual.push(VisualRelation {
            src,
            label,
            boxes: vec![self.boxes[&e]],
            zero_ref,
        });
    }

    /// Registers an overt reference to `e`: coreference link to the
    /// previous mention and a direct visual link.
    fn refer(&mut self, m: u32, e: Entity, noun: bool) {
        if let Some(&prev) = self.last_mention.get(&e) {
            self.text_relations.push(TextRelation {
                src: m,
                tgt: prev,
                label: RelationLabel::Direct,
            });
        }
        self.visual(m, RelationLabel::Direct, e, false);
        self.last_mention.insert(e, m);
        if noun {
            self.last_noun_utt.insert(e, self.utt);
        }
        if let Entity::Object(o) = e {
            self.topic = Some(o);
        }
    }

    fn eligible(&self, obj: usize) -> bool {
        !self.special_used
            && self.topic == Some(obj)
            && self
                .last_noun_utt
                .get(&Entity::Object(obj))
                .is_some_and(|&u| u + RESOLUTION_WINDOW > self.utt)
    }

    fn choose_realization(&mut self, obj: usize, allow_zero: bool) -> Realization {
        if !self.eligible(obj) {
            return Realization::Noun;
        }
        self.stats.pronoun_trials += 1;
        if self.bernoulli(self.cfg.pronoun_rate) {
            self.stats.pronoun_hits += 1;
            self.special_used = true;
            return Realization::Pronoun;
        }
        if allow_zero {
            self.stats.zero_trials += 1;
            if self.bernoulli(self.cfg.zero_rate) {
                self.stats.zero_hits += 1;
                self.special_used = true;
                return Realization::Zero;
            }
        }
        Realization::Noun
    }

    fn object_words(&mut self, obj: usize) -> Vec<String> {
        self.protos[obj].noun.clone()
    }

    /// Emits an object argument and returns its mention, if overt.
    fn object_slot(&mut self, obj: usize, allow_zero: bool) -> (Realization, Option<u32>) {
        let r = self.choose_realization(obj, allow_zero);
        let e = Entity::Object(obj);
        match r {
            Realization::Noun => {
                self.push_word(THE);
                if self.bernoulli(ATTRIBUTE_RATE) {
                    let a = self.protos[obj].attributes[0].clone();
                    self.push_word(&a);
                }
                let words = self.object_words(obj);
                let m = self.push_mention(&words, PartOfSpeech::Noun);
                self.refer(m, e, true);
                (r, Some(m))
            }
            Realization::Pronoun => {
                let m = self.push_mention(&[PRONOUN.to_string()], PartOfSpeech::Pronoun);
                self.refer(m, e, false);
                (r, Some(m))
            }
            Realization::Zero => (r, None),
        }
    }

    /// Links predicate `p` to argument `e` under `label`.
    fn argument(&mut self, p: u32, label: RelationLabel, e: Entity, mention: Option<u32>) {
        match mention {
            Some(a) => {
                self.text_relations.push(TextRelation {
                    src: p,
                    tgt: a,
                    label,
                });
                self.visual(p, label, e, false);
            }
            None => {
                if let (Entity::Object(_), Some(&prev)) = (e, self.last_mention.get(&e)) {
                    self.text_relations.push(TextRelation {
                        src: p,
                        tgt: prev,
                        label,
                    });
                }
                self.visual(p, label, e, true);
            }
        }
    }

    fn pick_first_object(&mut self) -> usize {
        let reuse = self.bernoulli(TOPIC_REUSE);
        match self.topic {
            Some(t) if reuse => t,
            _ => *self.scene.choose(&mut self.rng).expect("scene non-empty"),
        }
    }

    fn pick_other_object(&mut self, not: usize) -> usize {
        let others: Vec<usize> = self.scene.iter().copied().filter(|&o| o != not).collect();
        *others.choose(&mut self.rng).expect("scene has two objects")
    }

    fn participant_noun(e: Entity) -> &'static str {
        match e {
            Entity::Master => MASTER,
            _ => ROBOT,
        }
    }

    /// Agent prefix; returns the agent entity and its mention if overt.
    fn agent(&mut self, speaker: Entity, listener: Entity) -> (Entity, Option<u32>) {
        let agent = if self.bernoulli(LISTENER_AGENT_RATE) {
            listener
        } else {
            speaker
        };
        self.stats.zero_trials += 1;
        if self.bernoulli(self.cfg.zero_rate) {
            self.stats.zero_hits += 1;
            if agent == listener {
                self.push_word(PLEASE);
            } else {
                LET_ME.iter().for_each(|w| self.push_word(w));
            }
            (agent, None)
        } else {
            let m = self.push_mention(&[Self::participant_noun(agent).to_string()], PartOfSpeech::Noun);
            self.refer(m, agent, true);
            (agent, Some(m))
        }
    }

    fn predicate(&mut self, word: &str) -> u32 {
        self.push_mention(&[word.to_string()], PartOfSpeech::Predicate)
    }

    fn utterance(&mut self) {
        let speaker = participant(Speaker::of_utterance(self.utt));
        let listener = if speaker == Entity::Master {
            Entity::Robot
        } else {
            Entity::Master
        };
        if self.utt % 2 == 1 && self.bernoulli(ACK_RATE) {
            let w = *ACKNOWLEDGEMENTS.choose(&mut self.rng).unwrap();
            self.push_word(w);
            return;
        }
        let bridging_ok = self.topic.is_some_and(|t| {
            self.last_noun_utt
                .get(&Entity::Object(t))
                .is_some_and(|&u| u + RESOLUTION_WINDOW > self.utt)
        });
        let roll: f64 = self.rng.random();
        if bridging_ok && roll < 0.2 {
            let topic = self.topic.unwrap();
            self.push_word(THE);
            let part = PARTS.choose(&mut self.rng).unwrap().to_string();
            let m = self.push_mention(&[part], PartOfSpeech::Noun);
            let prev = self.last_mention[&Entity::Object(topic)];
            self.text_relations.push(TextRelation {
                src: m,
                tgt: prev,
                label: RelationLabel::Bridging,
            });
            self.visual(m, RelationLabel::Bridging, Entity::Object(topic), false);
            self.push_word(IS);
            let state = *PART_STATES.choose(&mut self.rng).unwrap();
            self.push_word(state);
            return;
        }
        let (agent, agent_m) = self.agent(speaker, listener);
        let obj = self.pick_first_object();
        if roll < 0.55 {
            let w = *ACC_PREDICATES.choose(&mut self.rng).unwrap();
            let p = self.predicate(w);
            self.argument(p, RelationLabel::Nom, agent, agent_m);
            let (_, m) = self.object_slot(obj, true);
            self.argument(p, RelationLabel::Acc, Entity::Object(obj), m);
        } else if roll < 0.7 {
            let p = self.predicate(PUT);
            self.argument(p, RelationLabel::Nom, agent, agent_m);
            let (_, m) = self.object_slot(obj, true);
            self.argument(p, RelationLabel::Acc, Entity::Object(obj), m);
            let dest = self.pick_other_object(obj);
            self.push_word(INTO);
            let (_, d) = self.object_slot(dest, false);
            self.argument(p, RelationLabel::Dat, Entity::Object(dest), d);
        } else if roll < 0.85 {
            let p = self.predicate(GIVE);
            self.argument(p, RelationLabel::Nom, agent, agent_m);
            let (_, m) = self.object_slot(obj, true);
            self.argument(p, RelationLabel::Acc, Entity::Object(obj), m);
            let recipient = if agent == speaker { listener } else { speaker };
            self.stats.zero_trials += 1;
            if self.bernoulli(self.cfg.zero_rate) {
                self.stats.zero_hits += 1;
                self.argument(p, RelationLabel::Dat, recipient, None);
            } else {
                self.push_word(TO);
                let r = self.push_mention(
                    &[Self::participant_noun(recipient).to_string()],
                    PartOfSpeech::Noun,
                );
                self.refer(r, recipient, true);
                self.argument(p, RelationLabel::Dat, recipient, Some(r));
            }
        } else {
            let (w, prep) = *INS_LOC_PREDICATES.choose(&mut self.rng).unwrap();
            let p = self.predicate(w);
            self.argument(p, RelationLabel::Nom, agent, agent_m);
            let (_, m) = self.object_slot(obj, true);
            self.argument(p, RelationLabel::Acc, Entity::Object(obj), m);
            let tool = self.pick_other_object(obj);
            self.push_word(prep);
            let (_, t) = self.object_slot(tool, false);
            self.argument(p, RelationLabel::InsLoc, Entity::Object(tool), t);
        }
    }
}

fn generate_dialogue(
    cfg: &SynthConfig,
    protos: &[ObjectPrototype],
    index: usize,
    stats: &mut GenerationStats,
) -> DialogueDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let v = cfg.object_vocabulary;
    let mut classes: Vec<usize> = (0..v).collect();
    classes.shuffle(&mut rng);
    let scene: Vec<usize> = classes[..cfg.scene_objects].to_vec();
    let pool: Vec<usize> = classes[cfg.scene_objects..].to_vec();
    let distractors: Vec<usize> = (0..cfg.candidates - cfg.scene_objects - 2)
        .map(|i| pool[i % pool.len().max(1)])
        .collect();

    let mut taken = Vec::new();
    let mut boxes = HashMap::new();
    for e in [Entity::Master, Entity::Robot]
        .into_iter()
        .chain(scene.iter().map(|&o| Entity::Object(o)))
    {
        let b = sample_box(&mut rng, &taken);
        taken.push(b);
        boxes.insert(e, b);
    }
    let distractor_boxes: Vec<BoundingBox> = distractors
        .iter()
        .map(|_| {
            let b = sample_box(&mut rng, &taken);
            taken.push(b);
            b
        })
        .collect();
    let n_utt = rng.random_range(cfg.min_utterances..=cfg.max_utterances);

    let mut b = DialogueBuilder {
        cfg,
        protos,
        rng,
        stats: GenerationStats::default(),
        scene: scene.clone(),
        boxes,
        last_mention: HashMap::new(),
        last_noun_utt: HashMap::new(),
        topic: None,
        mentions: Vec::new(),
        text_relations: Vec::new(),
        utt: 0,
        tokens: Vec::new(),
        visual: Vec::new(),
        special_used: false,
    };
    let noise = Normal::new(0.0, cfg.feature_noise).expect("validated noise");
    let mut utterances = Vec::with_capacity(n_utt);
    let mut frames = Vec::new();
    let mut t = 0.0;
    for u in 0..n_utt {
        b.utt = u;
        b.tokens.clear();
        b.visual.clear();
        b.special_used = false;
        b.utterance();
        let dur = b.rng.random_range(1..=2) as f64;
        utterances.push(Utterance {
            idx: u,
            text: b.tokens.join(" "),
            tokens: b.tokens.clone(),
            start_s: t,
            end_s: t + dur,
        });
        let mut k = 0.5;
        while k < dur {
            let mut slots: Vec<(usize, BoundingBox)> = scene
                .iter()
                .map(|&o| (o, b.boxes[&Entity::Object(o)]))
                .chain(distractors.iter().copied().zip(distractor_boxes.iter().copied()))
                .collect();
            slots.shuffle(&mut b.rng);
            let people = [
                (v, b.boxes[&Entity::Master]),
                (v + 1, b.boxes[&Entity::Robot]),
            ];
            let candidates = people
                .into_iter()
                .chain(slots)
                .map(|(class, bbox)| ObjectCandidate {
                    bbox,
                    confidence: b.rng.random_range(0.5f32..1.0),
                    feature: protos[class]
                        .feature
                        .iter()
                        .map(|&f| f + noise.sample(&mut b.rng) as f32)
                        .collect(),
                })
                .collect();
            frames.push(Frame {
                t_s: t + k,
                candidates_ref: CandidatesRef {
                    path: String::new(),
                    offset: 0,
                },
                visual_relations: b.visual.clone(),
                candidates,
            });
            k += 1.0;
        }
        t += dur;
    }
    stats.pronoun_trials += b.stats.pronoun_trials;
    stats.pronoun_hits += b.stats.pronoun_hits;
    stats.zero_trials += b.stats.zero_trials;
    stats.zero_hits += b.stats.zero_hits;
    let mut doc = DialogueDocument {
        schema_version: SCHEMA_VERSION,
        doc_id: format!("dlg{index:05}"),
        utterances,
        mentions: b.mentions,
        text_relations: b.text_relations,
        frames,
    };
    assign_feature_refs(&mut doc);
    doc
}

/// Generates `cfg.dialogues` dialogues. Dialogue `i` draws from its own
/// random stream, so prefixes of larger corpora are identical.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    cfg.validate()?;
    let protos = prototypes(cfg);
    let mut stats = GenerationStats::default();
    let documents = (0..cfg.dialogues)
        .map(|i| generate_dialogue(cfg, &protos, i, &mut stats))
        .collect();
    Ok(SynthCorpus {
        documents,
        prototypes: protos,
        stats,
    })
}
