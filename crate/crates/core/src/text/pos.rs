use std::collections::HashMap;

use super::TokenSeq;

const BUNDLED_LEXICON: &str = include_str!("../../data/pos_lexicon.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pos {
    Verb,
    Noun,
    Numeral,
    Other,
}

/// Part-of-speech tagger contract. Implementations must be deterministic.
pub trait Tagger: Send + Sync {
    fn tag(&self, token: &str) -> Pos;
}

/// Closed lexicon plus suffix heuristics.
///
/// Resolution order: numeric pattern, lexicon, verb suffixes, noun suffixes,
/// otherwise [`Pos::Other`].
#[derive(Debug, Clone)]
pub struct ReferenceTagger {
    lexicon: HashMap<String, Pos>,
}

const VERB_SUFFIXES: &[(&str, usize)] = &[("ing", 5), ("ed", 4), ("ize", 5), ("ise", 6), ("ify", 5)];
const NOUN_SUFFIXES: &[(&str, usize)] = &[
    ("tion", 5),
    ("sion", 5),
    ("ment", 6),
    ("ness", 6),
    ("ity", 5),
    ("ism", 5),
    ("ist", 5),
    ("ists", 6),
    ("ship", 6),
    ("ance", 6),
    ("ence", 6),
    ("ers", 5),
    ("er", 5),
];

impl Default for ReferenceTagger {
    fn default() -> Self {
        Self::from_lexicon(BUNDLED_LEXICON).expect("bundled lexicon parses")
    }
}

impl ReferenceTagger {
    /// Parses `word<TAB>TAG` lines, TAG one of `VB`, `NN`, `CD`, `O`.
    pub fn from_lexicon(text: &str) -> Result<Self, String> {
        let mut lexicon = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(tag), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(format!("lexicon line {}: expected `word TAG`", n + 1));
            };
            let pos = match tag {
                "VB" => Pos::Verb,
                "NN" => Pos::Noun,
                "CD" => Pos::Numeral,
                "O" => Pos::Other,
                other => return Err(format!("lexicon line {}: unknown tag {other}", n + 1)),
            };
            lexicon.insert(word.to_lowercase(), pos);
        }
        Ok(Self { lexicon })
    }
}

fn is_numeric(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit())
        && token.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',')
}

impl Tagger for ReferenceTagger {
    fn tag(&self, token: &str) -> Pos {
        if is_numeric(token) {
            return Pos::Numeral;
        }
        if let Some(&pos) = self.lexicon.get(token) {
            return pos;
        }
        if !token.chars().all(char::is_alphabetic) {
            return Pos::Other;
        }
        let len = token.chars().count();
        if VERB_SUFFIXES.iter().any(|&(s, min)| len >= min && token.ends_with(s)) {
            return Pos::Verb;
        }
        if NOUN_SUFFIXES.iter().any(|&(s, min)| len >= min && token.ends_with(s)) {
            return Pos::Noun;
        }
        Pos::Other
    }
}

#[cfg(test)]
fn default_tagger() -> &'static ReferenceTagger {
    static TAGGER: std::sync::OnceLock<ReferenceTagger> = std::sync::OnceLock::new();
    TAGGER.get_or_init(ReferenceTagger::default)
}

/// Inputs of the specificity score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PosCounts {
    pub vb: u64,
    pub nn: u64,
    pub cd: u64,
    pub tok: u64,
    /// Sentences, counted as runs of `.`/`!`/`?` tokens plus an unterminated
    /// tail.
    pub sent: u64,
}

pub fn pos_counts(tokens: &TokenSeq, tagger: &dyn Tagger) -> PosCounts {
    let mut counts = PosCounts::default();
    let mut open = false;
    for t in tokens.iter() {
        counts.tok += 1;
        match tagger.tag(t) {
            Pos::Verb => counts.vb += 1,
            Pos::Noun => counts.nn += 1,
            Pos::Numeral => counts.cd += 1,
            Pos::Other => {}
        }
        if matches!(t, "." | "!" | "?") {
            if open {
                counts.sent += 1;
            }
            open = false;
        } else {
            open = true;
        }
    }
    if open {
        counts.sent += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn counts(text: &str) -> PosCounts {
        pos_counts(&tokenize(text), default_tagger())
    }

    #[test]
    fn numeral() {
        let c = counts("500");
        assert_eq!((c.cd, c.vb, c.nn, c.tok), (1, 0, 0, 1));
    }

    #[test]
    fn ing_suffix_is_verb() {
        assert_eq!(counts("running").vb, 1);
        // lexicon overrides the suffix rule
        assert_eq!(counts("morning").nn, 1);
    }

    #[test]
    fn ten_token_fixture() {
        // The(O) council(NN) approved(VB) 12(CD) new(O) taxes(NN) during(O) the(O) meeting(NN) .(O)
        let c = counts("The council approved 12 new taxes during the meeting.");
        assert_eq!(c, PosCounts { vb: 1, nn: 3, cd: 1, tok: 10, sent: 1 });
    }

    #[test]
    fn sentence_runs() {
        assert_eq!(counts("a b. c d! e").sent, 3);
        assert_eq!(counts("a b?!").sent, 1);
        assert_eq!(counts("").sent, 0);
    }

    #[test]
    fn lexicon_rejects_bad_lines() {
        assert!(ReferenceTagger::from_lexicon("word XX").is_err());
        assert!(ReferenceTagger::from_lexicon("lonely").is_err());
    }
}
