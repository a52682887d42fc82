use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The six reference-relation types: direct reference plus five indirect
/// (case and bridging) relations.
///
/// Instrumental and locative cases share one label, `INS_LOC`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationLabel {
    #[serde(rename = "=")]
    Direct,
    #[serde(rename = "NOM")]
    Nom,
    #[serde(rename = "ACC")]
    Acc,
    #[serde(rename = "DAT")]
    Dat,
    #[serde(rename = "INS_LOC")]
    InsLoc,
    #[serde(rename = "BRIDGING")]
    Bridging,
}

impl RelationLabel {
    pub const ALL: [RelationLabel; 6] = [
        RelationLabel::Direct,
        RelationLabel::Nom,
        RelationLabel::Acc,
        RelationLabel::Dat,
        RelationLabel::InsLoc,
        RelationLabel::Bridging,
    ];

    pub const INDIRECT: [RelationLabel; 5] = [
        RelationLabel::Nom,
        RelationLabel::Acc,
        RelationLabel::Dat,
        RelationLabel::InsLoc,
        RelationLabel::Bridging,
    ];

    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationLabel::Direct => "=",
            RelationLabel::Nom => "NOM",
            RelationLabel::Acc => "ACC",
            RelationLabel::Dat => "DAT",
            RelationLabel::InsLoc => "INS_LOC",
            RelationLabel::Bridging => "BRIDGING",
        }
    }

    /// Identifier-safe name used in parameter names and file names.
    pub fn slug(self) -> &'static str {
        match self {
            RelationLabel::Direct => "direct",
            RelationLabel::Nom => "nom",
            RelationLabel::Acc => "acc",
            RelationLabel::Dat => "dat",
            RelationLabel::InsLoc => "ins_loc",
            RelationLabel::Bridging => "bridging",
        }
    }

    pub fn is_direct(self) -> bool {
        self == RelationLabel::Direct
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "=" | "DIRECT" | "direct" => Ok(RelationLabel::Direct),
            "NOM" | "nom" => Ok(RelationLabel::Nom),
            "ACC" | "acc" => Ok(RelationLabel::Acc),
            "DAT" | "dat" => Ok(RelationLabel::Dat),
            "INS_LOC" | "INS-LOC" | "ins_loc" => Ok(RelationLabel::InsLoc),
            "BRIDGING" | "bridging" => Ok(RelationLabel::Bridging),
            other => Err(format!("unknown relation label `{other}`")),
        }
    }
}

/// A fixed-size map from [`RelationLabel`] to `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerLabel<T>([Option<T>; RelationLabel::COUNT]);

impl<T> Default for PerLabel<T> {
    fn default() -> Self {
        Self(std::array::from_fn(|_| None))
    }
}

impl<T> PerLabel<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: RelationLabel, value: T) {
        self.0[label.index()] = Some(value);
    }

    pub fn get(&self, label: RelationLabel) -> Option<&T> {
        self.0[label.index()].as_ref()
    }

    pub fn get_mut(&mut self, label: RelationLabel) -> Option<&mut T> {
        self.0[label.index()].as_mut()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RelationLabel, &T)> {
        RelationLabel::ALL
            .into_iter()
            .zip(self.0.iter())
            .filter_map(|(l, v)| v.as_ref().map(|v| (l, v)))
    }

    pub fn labels(&self) -> Vec<RelationLabel> {
        self.iter().map(|(l, _)| l).collect()
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Named label subsets used for training ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelPreset {
    /// Coreference only: direct links between mentions.
    Coref,
    /// Predicate-argument structure and bridging: the five indirect labels.
    PasBa,
    /// All six relations (full textual reference resolution).
    Trr,
    /// Direct reference only (phrase grounding).
    DirectOnly,
    /// All six relations for multimodal training.
    All,
}

impl LabelPreset {
    pub fn labels(self) -> Vec<RelationLabel> {
        match self {
            LabelPreset::Coref | LabelPreset::DirectOnly => vec![RelationLabel::Direct],
            LabelPreset::PasBa => RelationLabel::INDIRECT.to_vec(),
            LabelPreset::Trr | LabelPreset::All => RelationLabel::ALL.to_vec(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelPreset::Coref => "coref",
            LabelPreset::PasBa => "pas-ba",
            LabelPreset::Trr => "trr",
            LabelPreset::DirectOnly => "direct-only",
            LabelPreset::All => "all",
        }
    }

    /// Whether the preset is meaningful for textual (`true`) or multimodal
    /// (`false`) training.
    pub fn valid_for_text(self) -> bool {
        matches!(self, LabelPreset::Coref | LabelPreset::PasBa | LabelPreset::Trr)
    }

    pub fn valid_for_multimodal(self) -> bool {
        matches!(self, LabelPreset::DirectOnly | LabelPreset::All)
    }
}

impl FromStr for LabelPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coref" => Ok(LabelPreset::Coref),
            "pas-ba" => Ok(LabelPreset::PasBa),
            "trr" => Ok(LabelPreset::Trr),
            "direct-only" => Ok(LabelPreset::DirectOnly),
            "all" => Ok(LabelPreset::All),
            other => Err(format!(
                "unknown label preset `{other}` (expected coref, pas-ba, trr, direct-only or all)"
            )),
        }
    }
}

impl fmt::Display for LabelPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
