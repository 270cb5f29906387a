use std::collections::HashSet;
use std::ops::Range;
use std::sync::OnceLock;

const BUNDLED_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

/// Rule-based sentence splitter.
///
/// A boundary is a run of `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets), then whitespace, then an uppercase letter or digit.
/// A period directly after a word in the abbreviation list never ends a
/// sentence.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::from_list(BUNDLED_ABBREVIATIONS)
    }
}

impl SentenceSplitter {
    /// Parses a stop-list with one abbreviation per line (without the final
    /// period). Blank lines and `#` comments are ignored.
    pub fn from_list(list: &str) -> Self {
        let abbreviations = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { abbreviations }
    }

    pub fn with_abbreviations<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            abbreviations: items.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
        }
    }

    /// Byte spans of sentences, trimmed of surrounding whitespace. Spans are
    /// ordered, non-overlapping, and together cover every non-whitespace
    /// character of `text`.
    pub fn split(&self, text: &str) -> Vec<Range<usize>> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start: Option<usize> = None;
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if start.is_none() && !c.is_whitespace() {
                start = Some(pos);
            }
            if matches!(c, '.' | '!' | '?') {
                let mut j = i;
                while chars.get(j + 1).is_some_and(|&(_, n)| matches!(n, '.' | '!' | '?')) {
                    j += 1;
                }
                let single_period = c == '.' && j == i;
                while chars
                    .get(j + 1)
                    .is_some_and(|&(_, n)| matches!(n, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}'))
                {
                    j += 1;
                }
                let end = chars.get(j + 1).map(|&(b, _)| b).unwrap_or(text.len());
                let mut k = j + 1;
                let mut saw_space = false;
                while chars.get(k).is_some_and(|&(_, n)| n.is_whitespace()) {
                    saw_space = true;
                    k += 1;
                }
                let next_ok = chars
                    .get(k)
                    .is_some_and(|&(_, n)| n.is_uppercase() || n.is_ascii_digit());
                let abbreviated = single_period && self.is_abbreviation(text, pos);
                if saw_space && next_ok && !abbreviated {
                    if let Some(s) = start.take() {
                        sentences.push(s..end);
                    }
                    i = k;
                    continue;
                }
                i = j + 1;
                continue;
            }
            i += 1;
        }
        if let Some(s) = start {
            let end = text.trim_end().len();
            if end > s {
                sentences.push(s..end);
            }
        }
        sentences
    }

    fn is_abbreviation(&self, text: &str, period_at: usize) -> bool {
        let before = &text[..period_at];
        let word_start = before
            .char_indices()
            .rev()
            .take_while(|&(_, c)| c.is_alphanumeric() || c == '.')
            .last()
            .map(|(b, _)| b);
        match word_start {
            Some(b) => self.abbreviations.contains(&before[b..].to_lowercase()),
            None => false,
        }
    }
}

fn default_splitter() -> &'static SentenceSplitter {
    static SPLITTER: OnceLock<SentenceSplitter> = OnceLock::new();
    SPLITTER.get_or_init(SentenceSplitter::default)
}

/// Splits with the bundled abbreviation list.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    default_splitter().split(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &SentenceSplitter, text: &str) -> Vec<String> {
        s.split(text).into_iter().map(|r| text[r].to_string()).collect()
    }

    #[test]
    fn empty_has_no_sentences() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn initials_split_when_not_listed() {
        let s = SentenceSplitter::with_abbreviations(["mr"]);
        assert_eq!(texts(&s, "A. B."), ["A.", "B."]);
    }

    #[test]
    fn abbreviation_does_not_split() {
        let s = SentenceSplitter::with_abbreviations(["mr"]);
        assert_eq!(texts(&s, "Mr. Smith left. He ran."), ["Mr. Smith left.", "He ran."]);
        assert_eq!(split_sentences("Mr. Smith left. He ran.").len(), 2);
    }

    #[test]
    fn requires_uppercase_or_digit_after_boundary() {
        assert_eq!(split_sentences("one. two. Three.").len(), 2);
        assert_eq!(split_sentences("Scores rose. 42 people came!").len(), 2);
        assert_eq!(split_sentences("Really?! Yes.").len(), 2);
    }

    #[test]
    fn unterminated_tail_is_a_sentence() {
        let text = "First one. Second without period  ";
        let s = SentenceSplitter::default();
        assert_eq!(texts(&s, text), ["First one.", "Second without period"]);
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        let s = SentenceSplitter::default();
        assert_eq!(texts(&s, "He said \"go.\" Then left."), ["He said \"go.\"", "Then left."]);
    }

    #[test]
    fn spans_cover_all_non_whitespace() {
        let text = " Alpha beta. Gamma!  Delta? epsilon ";
        let spans = split_sentences(text);
        let mut covered = vec![false; text.len()];
        for r in &spans {
            for b in r.clone() {
                assert!(!covered[b]);
                covered[b] = true;
            }
        }
        for (b, c) in text.char_indices() {
            if !c.is_whitespace() {
                assert!(covered[b], "byte {b}");
            }
        }
        for r in &spans {
            assert_eq!(text[r.clone()].trim(), &text[r.clone()]);
        }
    }
}
