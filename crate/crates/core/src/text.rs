//! Tokenization, verb tagging and verb extraction.
//!
//! Tokenization rule set:
//! 1. Split on Unicode whitespace.
//! 2. The mask slot `[MASK]` is always a token of its own.
//! 3. Leading and trailing non-alphanumeric characters are peeled off one
//!    character per token; the remaining core (which may contain inner
//!    apostrophes, hyphens or dots) is a single token.
//!
//! Every token keeps its byte span in the source text, so replacing a token
//! never touches the surrounding bytes.

use crate::error::{Error, Result};
use crate::lexicon::LEXICON;
use crate::types::{Sentence, VerbOccurrence};

pub const MASK_TOKEN: &str = "[MASK]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn push_chunk(out: &mut Vec<Token>, chunk: &str, offset: usize) {
    let mut start = 0;
    let mut end = chunk.len();
    let mut leading = Vec::new();
    for (i, c) in chunk.char_indices() {
        if c.is_alphanumeric() {
            break;
        }
        leading.push(Token {
            text: c.to_string(),
            start: offset + i,
            end: offset + i + c.len_utf8(),
        });
        start = i + c.len_utf8();
    }
    out.extend(leading);
    if start >= end {
        return;
    }
    let mut trailing = Vec::new();
    for (i, c) in chunk[start..].char_indices().rev() {
        if c.is_alphanumeric() {
            break;
        }
        let abs = start + i;
        trailing.push(Token {
            text: c.to_string(),
            start: offset + abs,
            end: offset + abs + c.len_utf8(),
        });
        end = abs;
    }
    if start < end {
        out.push(Token {
            text: chunk[start..end].to_string(),
            start: offset + start,
            end: offset + end,
        });
    }
    out.extend(trailing.into_iter().rev());
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk_start: Option<usize> = None;
    let bytes_len = text.len();
    let flush = |tokens: &mut Vec<Token>, from: usize, to: usize| {
        let mut rest = &text[from..to];
        let mut offset = from;
        while let Some(pos) = rest.find(MASK_TOKEN) {
            push_chunk(tokens, &rest[..pos], offset);
            tokens.push(Token {
                text: MASK_TOKEN.to_string(),
                start: offset + pos,
                end: offset + pos + MASK_TOKEN.len(),
            });
            offset += pos + MASK_TOKEN.len();
            rest = &rest[pos + MASK_TOKEN.len()..];
        }
        push_chunk(tokens, rest, offset);
    };
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                flush(&mut tokens, s, i);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        flush(&mut tokens, s, bytes_len);
    }
    tokens
}

/// Collapses runs of whitespace to one space and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_closing_punct(tok: &str) -> bool {
    tok.chars().count() == 1
        && matches!(
            tok.chars().next(),
            Some(',' | '.' | ';' | ':' | '!' | '?' | ')' | ']' | '}')
        )
}

/// Joins tokens with single spaces, attaching closing punctuation to the
/// preceding token.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        let t = t.as_ref();
        if i > 0 && !is_closing_punct(t) {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

/// Rewrites `original` so that its tokens become `replacement`.
///
/// When both token sequences have the same length only the differing token
/// spans are rewritten and all other bytes are preserved. Otherwise the
/// replacement is detokenized from scratch.
pub fn splice_tokens<S: AsRef<str>>(original: &str, replacement: &[S]) -> String {
    let tokens = tokenize(original);
    if tokens.len() != replacement.len() {
        return detokenize(replacement);
    }
    let mut out = String::with_capacity(original.len());
    let mut cursor = 0;
    for (tok, new) in tokens.iter().zip(replacement) {
        out.push_str(&original[cursor..tok.start]);
        out.push_str(new.as_ref());
        cursor = tok.end;
    }
    out.push_str(&original[cursor..]);
    out
}

/// Replaces the token at `index` with `replacement`, keeping every other byte.
pub fn replace_token(text: &str, index: usize, replacement: &str) -> Result<String> {
    let tokens = tokenize(text);
    let tok = tokens.get(index).ok_or_else(|| {
        Error::invalid(format!(
            "token index {index} out of range for {} tokens",
            tokens.len()
        ))
    })?;
    let mut out = String::with_capacity(text.len() + replacement.len());
    out.push_str(&text[..tok.start]);
    out.push_str(replacement);
    out.push_str(&text[tok.end..]);
    Ok(out)
}

/// Part-of-speech contract: one entry per token, `Some(lemma)` for verbs.
pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: &[Token]) -> Vec<Option<String>>;
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "his", "her", "my", "your", "their", "our", "its", "every", "each", "these",
    "those", "thy", "thine",
];

const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "with", "for", "from", "by", "through", "into", "over", "under",
    "between", "upon", "across", "beneath", "without", "within",
];

const BE_FORMS: &[&str] = &["am", "is", "are", "was", "were", "be", "been", "being"];

const MODALS: &[&str] = &[
    "will", "would", "can", "could", "shall", "should", "may", "might", "must",
];

/// Lexicon-driven tagger with context rules: a known verb form is not a verb
/// right after a determiner or a preposition, nor right before a modal.
/// After a form of "be" only inflected forms ("covered", "falling") count.
///
/// Particle verbs ("loosened up") are tagged on the head verb only.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleTagger;

impl PosTagger for RuleTagger {
    fn tag(&self, tokens: &[Token]) -> Vec<Option<String>> {
        let lower: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
        (0..tokens.len())
            .map(|i| {
                let lemma = LEXICON.lemma_of(&lower[i])?;
                if i > 0 {
                    let prev = lower[i - 1].as_str();
                    if DETERMINERS.contains(&prev) || PREPOSITIONS.contains(&prev) {
                        return None;
                    }
                    if BE_FORMS.contains(&prev) && lower[i] == lemma {
                        return None;
                    }
                }
                if let Some(next) = lower.get(i + 1) {
                    if MODALS.contains(&next.as_str()) {
                        return None;
                    }
                }
                Some(lemma.to_string())
            })
            .collect()
    }
}

/// All verb tokens of `sentence` in token order.
pub fn extract_verbs(sentence: &Sentence, tagger: &dyn PosTagger) -> Result<Vec<VerbOccurrence>> {
    if sentence.text.trim().is_empty() {
        return Err(Error::invalid("sentence text is empty"));
    }
    let tokens = tokenize(&sentence.text);
    let tags = tagger.tag(&tokens);
    Ok(tokens
        .into_iter()
        .zip(tags)
        .enumerate()
        .filter_map(|(i, (tok, lemma))| {
            lemma.map(|lemma| VerbOccurrence {
                sentence_id: sentence.id.clone(),
                token_index: i,
                surface: tok.text,
                lemma,
            })
        })
        .collect())
}

/// Lemma assigned by `tagger` to the token at `index`, if it is a verb.
pub fn verb_lemma_at(text: &str, index: usize, tagger: &dyn PosTagger) -> Option<String> {
    let tokens = tokenize(text);
    tagger.tag(&tokens).into_iter().nth(index).flatten()
}
