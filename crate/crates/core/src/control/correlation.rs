use serde::{Deserialize, Serialize};

use super::{m_ext, m_len, m_spe, ControlError};
use crate::num::Scalar;
use crate::text::{tokenize, Tagger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Length,
    Extractiveness,
    Specificity,
}

impl Attribute {
    /// Bucket level of a control value name: low/short 0, medium 1,
    /// high/long 2.
    pub fn level(self, value: &str) -> Result<u8, ControlError> {
        let level = match (self, value) {
            (Self::Length, "short") => 0,
            (Self::Length, "medium") => 1,
            (Self::Length, "long") => 2,
            (Self::Extractiveness, "low") => 0,
            (Self::Extractiveness, "medium") => 1,
            (Self::Extractiveness, "high") => 2,
            (Self::Specificity, "medium") => 1,
            (Self::Specificity, "high") => 2,
            _ => return Err(ControlError::UnknownValue(value.to_string())),
        };
        Ok(level)
    }

    pub fn measure<S: Scalar>(self, summary: &str, document: &str, tagger: &dyn Tagger) -> Result<S, ControlError> {
        match self {
            Self::Length => Ok(m_len(&tokenize(summary))),
            Self::Extractiveness => m_ext(&tokenize(summary), &tokenize(document)),
            Self::Specificity => m_spe(summary, tagger),
        }
    }
}

impl std::str::FromStr for Attribute {
    type Err = ControlError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length" => Ok(Self::Length),
            "extractiveness" => Ok(Self::Extractiveness),
            "specificity" => Ok(Self::Specificity),
            other => Err(ControlError::UnknownValue(other.to_string())),
        }
    }
}

/// Two summaries of one document under controls differing in one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CcSample {
    pub document: String,
    pub attribute: Attribute,
    pub value_a: String,
    pub summary_a: String,
    pub value_b: String,
    pub summary_b: String,
}

/// Mean over samples of `(m(y_b) - m(y_a)) / (level(v_b) - level(v_a))`.
///
/// A controller that moves the metric in the direction of the requested
/// level change scores positive.
pub fn control_correlation<S: Scalar>(samples: &[CcSample], tagger: &dyn Tagger) -> Result<S, ControlError> {
    if samples.is_empty() {
        return Err(ControlError::Empty);
    }
    let mut total = S::zero();
    for s in samples {
        let la = s.attribute.level(&s.value_a)?;
        let lb = s.attribute.level(&s.value_b)?;
        if la == lb {
            return Err(ControlError::ZeroDistance);
        }
        let ma: S = s.attribute.measure(&s.summary_a, &s.document, tagger)?;
        let mb: S = s.attribute.measure(&s.summary_b, &s.document, tagger)?;
        total = total
            + if lb > la {
                (mb - ma) / S::from_count((lb - la) as u64)
            } else {
                (ma - mb) / S::from_count((la - lb) as u64)
            };
    }
    Ok(total / S::from_count(samples.len() as u64))
}
