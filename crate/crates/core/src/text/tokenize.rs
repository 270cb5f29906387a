use std::ops::Range;

/// Lowercased word/punctuation tokens with byte spans into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq {
    tokens: Vec<String>,
    spans: Vec<Range<usize>>,
}

impl TokenSeq {
    /// Builds a sequence from already-tokenized strings. Spans index into the
    /// single-space join of the tokens.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut spans = Vec::with_capacity(tokens.len());
        let mut at = 0;
        for t in &tokens {
            spans.push(at..at + t.len());
            at += t.len() + 1;
        }
        Self { tokens, spans }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn spans(&self) -> &[Range<usize>] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits on whitespace, detaches punctuation and lowercases.
///
/// A word is a run of alphanumeric characters; `.` or `,` between two digits
/// stays inside the word so `3.5` and `1,000` are single numerals. An
/// apostrophe that directly follows a word and precedes letters starts a
/// clitic token (`farrell's` gives `farrell`, `'s`). Every other
/// non-space character is a token of its own.
pub fn tokenize(text: &str) -> TokenSeq {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| -> usize {
        chars.get(i + 1).map(|&(b, _)| b).unwrap_or(text.len())
    };
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    let mut push = |range: Range<usize>| {
        tokens.push(text[range.clone()].to_lowercase());
        spans.push(range);
    };

    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i;
            loop {
                let next = j + 1;
                match chars.get(next) {
                    Some(&(_, n)) if n.is_alphanumeric() => j = next,
                    Some(&(_, n))
                        if (n == '.' || n == ',')
                            && chars[j].1.is_ascii_digit()
                            && chars.get(next + 1).is_some_and(|&(_, d)| d.is_ascii_digit()) =>
                    {
                        j = next + 1
                    }
                    _ => break,
                }
            }
            push(start..end_of(j));
            i = j + 1;
            // clitic
            if let (Some(&(a_start, a)), Some(&(_, l))) = (chars.get(i), chars.get(i + 1)) {
                if is_apostrophe(a) && l.is_alphabetic() {
                    let mut k = i + 1;
                    while chars.get(k + 1).is_some_and(|&(_, n)| n.is_alphabetic()) {
                        k += 1;
                    }
                    push(a_start..end_of(k));
                    i = k + 1;
                }
            }
            continue;
        }
        push(start..end_of(i));
        i += 1;
    }
    TokenSeq { tokens, spans }
}

fn attaches_left(token: &str) -> bool {
    matches!(token, "." | "," | "!" | "?" | ";" | ":" | ")" | "%")
        || token.starts_with('\'') && token.len() > 1
}

fn attaches_right(token: &str) -> bool {
    token == "("
}

fn ends_sentence(token: &str) -> bool {
    matches!(token, "." | "!" | "?")
}

/// Renders tokens as display text: punctuation attached, sentence starts
/// capitalized. `tokenize(detokenize(t))` reproduces `t` for lowercase
/// token streams produced by [`tokenize`].
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut capitalize = true;
    let mut glue_next = false;
    let mut prev: Option<&str> = None;
    for tok in tokens {
        let tok = tok.as_ref();
        let dash_run = tok == "-" && prev == Some("-");
        if !out.is_empty() && !glue_next && !attaches_left(tok) && !dash_run {
            out.push(' ');
        }
        if capitalize && tok.chars().next().is_some_and(char::is_alphabetic) {
            let mut cs = tok.chars();
            if let Some(first) = cs.next() {
                out.extend(first.to_uppercase());
                out.push_str(cs.as_str());
            }
            capitalize = false;
        } else {
            out.push_str(tok);
            if tok.chars().any(char::is_alphanumeric) {
                capitalize = false;
            }
        }
        if ends_sentence(tok) {
            capitalize = true;
        }
        glue_next = attaches_right(tok);
        prev = Some(tok);
    }
    out
}
