//! Utterance normalization, sentence segmentation and tokenization.

/// Returned when an utterance has no content left after normalization.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("utterance is empty after normalization")]
pub struct EmptyAfterNormalize;

/// Lowercases, trims and collapses whitespace runs to a single space.
/// Punctuation is kept as-is.
pub fn normalize(text: &str) -> Result<String, EmptyAfterNormalize> {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    if out.is_empty() {
        Err(EmptyAfterNormalize)
    } else {
        Ok(out)
    }
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// Splits on `.`, `?` or `!` when followed by a space or the end of input.
/// Delimiters stay attached to their sentence; pieces are trimmed and empty
/// pieces dropped.
pub fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_sentence_end(c) {
            continue;
        }
        let boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if boundary {
            let end = i + c.len_utf8();
            let piece = text[start..end].trim();
            if !piece.is_empty() {
                out.push(piece);
            }
            start = end;
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest);
    }
    out
}

/// Strips a single trailing `?`, `.` or `!`, if present.
pub fn strip_terminal_punct(text: &str) -> Option<&str> {
    let c = text.chars().last()?;
    is_sentence_end(c).then(|| text[..text.len() - c.len_utf8()].trim_end())
}

fn is_detached_punct(c: char) -> bool {
    matches!(c, '?' | '.' | '!' | ',')
}

/// Normalizes, splits on whitespace and detaches `? . ! ,` as standalone
/// tokens. Empty or whitespace-only input yields no tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let Ok(norm) = normalize(text) else {
        return Vec::new();
    };
    let mut tokens = Vec::new();
    for word in norm.split(' ') {
        let mut current = String::new();
        for c in word.chars() {
            if is_detached_punct(c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}
