use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bidirectional gloss ↔ id map. Ids are dense in `[0, V)`; the CTC blank is
/// the extra class `V`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct GlossVocabulary {
    glosses: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl GlossVocabulary {
    pub fn new(glosses: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, g) in glosses.iter().enumerate() {
            if g.is_empty() || g.chars().any(char::is_whitespace) {
                return Err(Error::Schema(format!("invalid gloss string {g:?}")));
            }
            if index.insert(g.clone(), i as u32).is_some() {
                return Err(Error::Schema(format!("gloss {g:?} listed twice")));
            }
        }
        Ok(GlossVocabulary { glosses, index })
    }

    /// Number of glosses `V` (the blank is not counted).
    pub fn len(&self) -> usize {
        self.glosses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.glosses.is_empty()
    }

    pub fn blank(&self) -> u32 {
        self.glosses.len() as u32
    }

    /// Number of output classes, `V + 1`.
    pub fn num_classes(&self) -> usize {
        self.glosses.len() + 1
    }

    pub fn id(&self, gloss: &str) -> Option<u32> {
        self.index.get(gloss).copied()
    }

    pub fn gloss(&self, id: u32) -> Option<&str> {
        self.glosses.get(id as usize).map(String::as_str)
    }

    pub fn glosses(&self) -> &[String] {
        &self.glosses
    }

    pub fn encode<S: AsRef<str>>(&self, glosses: &[S]) -> Result<Labeling> {
        glosses
            .iter()
            .map(|g| self.id(g.as_ref()).ok_or_else(|| Error::UnknownGloss(g.as_ref().to_string())))
            .collect::<Result<Vec<_>>>()
            .map(Labeling)
    }

    pub fn decode(&self, labeling: &Labeling) -> Result<Vec<String>> {
        labeling
            .ids()
            .iter()
            .map(|&id| {
                self.gloss(id)
                    .map(str::to_string)
                    .ok_or_else(|| Error::Input(format!("id {id} is outside the vocabulary")))
            })
            .collect()
    }

    /// Parses the one-gloss-per-line file format (line number = id).
    pub fn from_lines(text: &str) -> Result<Self> {
        let glosses = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        Self::new(glosses)
    }

    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for g in &self.glosses {
            out.push_str(g);
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_lines(&text)
    }
}

impl TryFrom<Vec<String>> for GlossVocabulary {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GlossVocabulary> for Vec<String> {
    fn from(v: GlossVocabulary) -> Self {
        v.glosses
    }
}

/// A blank-free gloss id sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Labeling(pub Vec<u32>);

impl Labeling {
    pub fn new(ids: Vec<u32>) -> Self {
        Labeling(ids)
    }

    pub fn empty() -> Self {
        Labeling(Vec::new())
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Minimum number of frames a CTC alignment of this labeling needs: one
    /// per label plus a separating blank between equal neighbours.
    pub fn min_frames(&self) -> usize {
        self.0.len() + self.0.windows(2).filter(|w| w[0] == w[1]).count()
    }

    /// Collapses a frame-level path: merge adjacent repeats, then drop blanks.
    pub fn collapse(path: &[u32], blank: u32) -> Self {
        let mut out = Vec::new();
        let mut prev = None;
        for &k in path {
            if Some(k) != prev && k != blank {
                out.push(k);
            }
            prev = Some(k);
        }
        Labeling(out)
    }

    pub(crate) fn check_against(&self, blank: u32) -> Result<()> {
        match self.0.iter().find(|&&id| id >= blank) {
            Some(id) => Err(Error::Input(format!(
                "labeling contains id {id}, which is not a gloss (blank = {blank})"
            ))),
            None => Ok(()),
        }
    }
}

impl From<Vec<u32>> for Labeling {
    fn from(v: Vec<u32>) -> Self {
        Labeling(v)
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> GlossVocabulary {
        GlossVocabulary::new(vec!["RAIN".into(), "SUN".into(), "WIND".into()]).unwrap()
    }

    #[test]
    fn blank_is_last_class() {
        let v = vocab();
        assert_eq!(v.blank(), 3);
        assert_eq!(v.num_classes(), 4);
        assert_eq!(v.gloss(3), None);
    }

    #[test]
    fn encode_preserves_order_and_repeats() {
        let v = vocab();
        assert_eq!(v.encode::<&str>(&[]).unwrap(), Labeling::empty());
        assert_eq!(v.encode(&["RAIN", "RAIN"]).unwrap().ids(), &[0, 0]);
        let l = v.encode(&["WIND", "RAIN", "SUN"]).unwrap();
        assert_eq!(v.decode(&l).unwrap(), vec!["WIND", "RAIN", "SUN"]);
    }

    #[test]
    fn unknown_gloss_is_named() {
        let err = vocab().encode(&["XYZ"]).unwrap_err();
        assert!(err.to_string().contains("XYZ"));
    }

    #[test]
    fn duplicate_gloss_rejected() {
        assert!(GlossVocabulary::new(vec!["A".into(), "A".into()]).is_err());
    }

    #[test]
    fn lines_round_trip() {
        let v = vocab();
        assert_eq!(GlossVocabulary::from_lines(&v.to_lines()).unwrap(), v);
    }

    #[test]
    fn collapse_rules() {
        let b = 9;
        assert_eq!(Labeling::collapse(&[b, 0, 0, b, 1], b).ids(), &[0, 1]);
        assert!(Labeling::collapse(&[b, b, b], b).is_empty());
        assert_eq!(Labeling::collapse(&[0, b, 0], b).ids(), &[0, 0]);
    }

    #[test]
    fn min_frames_counts_repeats() {
        assert_eq!(Labeling::new(vec![0, 0]).min_frames(), 3);
        assert_eq!(Labeling::new(vec![0, 1, 1, 1]).min_frames(), 6);
        assert_eq!(Labeling::empty().min_frames(), 0);
    }
}
