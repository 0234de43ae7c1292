//! Rule-based tokenization and sentence segmentation.
//!
//! Both are deterministic and locale-free. Tokens are lowercased maximal runs
//! of alphanumeric characters (an apostrophe between two alphanumerics stays
//! inside the word, so `didn't` is one token); every other non-whitespace
//! character is a punctuation token of its own.
//!
//! Sentences end after a run of terminal punctuation (`.`, `!`, `?`, `…`),
//! optionally followed by closing quotes or brackets, when the next character
//! is whitespace or the end of the text. A lone `.` does not end a sentence
//! when the word before it is in [`ABBREVIATIONS`], is a single letter (an
//! initial), or contains an inner period (`U.S.`).

/// Words that never end a sentence when followed by a single period.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "vs", "etc", "approx", "dept", "inc", "ltd", "co",
    "jan", "feb", "aug", "sept", "oct", "nov", "dec",
];

const TERMINATORS: &[char] = &['.', '!', '?', '…'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '”', '’', '»'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’'
}

/// Splits `text` into lowercased tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let mut word = String::new();
            while i < chars.len() {
                let ch = chars[i];
                let inner_apostrophe =
                    is_apostrophe(ch) && !word.is_empty() && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
                if ch.is_alphanumeric() || inner_apostrophe {
                    word.extend(ch.to_lowercase());
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(Token {
                text: word,
                kind: TokenKind::Word,
            });
        } else {
            tokens.push(Token {
                text: c.to_string(),
                kind: TokenKind::Punct,
            });
            i += 1;
        }
    }
    tokens
}

/// Lowercased word tokens only (punctuation excluded).
pub fn words(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.text)
        .collect()
}

/// `(all tokens, word tokens)` counts for `text`.
pub fn token_counts(text: &str) -> (usize, usize) {
    let tokens = tokenize(text);
    let words = tokens.iter().filter(|t| t.kind == TokenKind::Word).count();
    (tokens.len(), words)
}

/// Trims and collapses internal whitespace runs to a single space.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn guards_period(word: &str) -> bool {
    if word.is_empty() {
        return false;
    }
    let lower = word.to_lowercase();
    if lower.contains('.') {
        return true;
    }
    let mut letters = lower.chars();
    if let (Some(c), None) = (letters.next(), letters.next()) {
        if c.is_alphabetic() {
            return true;
        }
    }
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Splits `text` into trimmed sentence strings, in text order.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !TERMINATORS.contains(&chars[i]) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && TERMINATORS.contains(&chars[i]) {
            i += 1;
        }
        let run_len = i - run_start;
        while i < chars.len() && CLOSERS.contains(&chars[i]) {
            i += 1;
        }
        let at_boundary = i == chars.len() || chars[i].is_whitespace();
        if !at_boundary {
            continue;
        }
        if run_len == 1 && chars[run_start] == '.' && i < chars.len() {
            let mut w = run_start;
            while w > start && (chars[w - 1].is_alphanumeric() || chars[w - 1] == '.') {
                w -= 1;
            }
            let word: String = chars[w..run_start].iter().collect();
            if guards_period(&word) {
                continue;
            }
        }
        push_span(&chars[start..i], &mut sentences);
        start = i;
    }
    push_span(&chars[start..], &mut sentences);
    sentences
}

fn push_span(span: &[char], out: &mut Vec<String>) {
    let s: String = span.iter().collect();
    let trimmed = s.trim();
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
}
