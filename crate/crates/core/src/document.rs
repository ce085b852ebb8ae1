//! Tokens, token sequences, revisions and section detection.

use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use chrono::{DateTime, FixedOffset};
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A single non-empty unit of document content.
///
/// Equality checks the cached hash first and falls back to the text, so a
/// hash collision can never make two different tokens compare equal.
#[derive(Clone)]
pub struct Token {
    text: Arc<str>,
    hash: u64,
}

impl Token {
    /// Panics if `text` is empty; tokens are produced by [`tokenize`] which
    /// never yields empty pieces.
    pub fn new(text: impl Into<Arc<str>>) -> Self {
        let text = text.into();
        assert!(!text.is_empty(), "tokens must be non-empty");
        let hash = content_hash(&text);
        Token { text, hash }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn content_hash(&self) -> u64 {
        self.hash
    }
}

fn content_hash(text: &str) -> u64 {
    let mut h = DefaultHasher::new();
    text.hash(&mut h);
    h.finish()
}

impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.text == other.text
    }
}

impl Eq for Token {}

impl Hash for Token {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.text, f)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Token {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Token {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        if text.is_empty() {
            return Err(serde::de::Error::custom("empty token"));
        }
        Ok(Token::new(text))
    }
}

/// Ordered token content of one document state. Positions are 0-based.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<Token>);

impl TokenSeq {
    pub fn new() -> Self {
        TokenSeq(Vec::new())
    }

    /// Builds a sequence from whitespace separated words; handy in tests.
    pub fn from_words(text: &str) -> Self {
        tokenize(text, Granularity::Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<Token> {
        self.0
    }

    pub fn push(&mut self, token: Token) {
        self.0.push(token);
    }

    /// Joins tokens with the canonical separator for `granularity`.
    pub fn join(&self, granularity: Granularity) -> String {
        let sep = granularity.separator();
        let mut out = String::new();
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                out.push_str(sep);
            }
            out.push_str(t.as_str());
        }
        out
    }
}

impl fmt::Debug for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl From<Vec<Token>> for TokenSeq {
    fn from(tokens: Vec<Token>) -> Self {
        TokenSeq(tokens)
    }
}

impl From<&[Token]> for TokenSeq {
    fn from(tokens: &[Token]) -> Self {
        TokenSeq(tokens.to_vec())
    }
}

impl FromIterator<Token> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().collect())
    }
}

impl std::ops::Deref for TokenSeq {
    type Target = [Token];

    fn deref(&self) -> &[Token] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Word,
    Line,
}

impl Granularity {
    pub fn separator(self) -> &'static str {
        match self {
            Granularity::Word => " ",
            Granularity::Line => "\n",
        }
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word" => Ok(Granularity::Word),
            "line" => Ok(Granularity::Line),
            other => Err(format!("unknown granularity `{other}` (expected word or line)")),
        }
    }
}

/// Splits `text` into tokens.
///
/// Word mode splits on maximal whitespace runs and drops the whitespace.
/// Line mode splits on `\n` (a trailing `\r` is dropped too); blank lines are
/// skipped because tokens are never empty.
pub fn tokenize(text: &str, granularity: Granularity) -> TokenSeq {
    match granularity {
        Granularity::Word => text.split_whitespace().map(Token::new).collect(),
        Granularity::Line => text
            .split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .filter(|l| !l.is_empty())
            .map(Token::new)
            .collect(),
    }
}

/// One entry of a linear document history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    /// 1-based position in the history.
    pub index: usize,
    pub author: String,
    pub timestamp: DateTime<FixedOffset>,
    #[serde(default)]
    pub comment: String,
    pub content: TokenSeq,
}

impl Revision {
    pub fn new(
        index: usize,
        author: impl Into<String>,
        timestamp: DateTime<FixedOffset>,
        content: TokenSeq,
    ) -> Self {
        Revision { index, author: author.into(), timestamp, comment: String::new(), content }
    }
}

/// Heading syntax used to split the latest revision into sections.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionFormat {
    Latex,
    Mediawiki,
    #[default]
    None,
}

impl FromStr for SectionFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "latex" => Ok(SectionFormat::Latex),
            "mediawiki" => Ok(SectionFormat::Mediawiki),
            "none" => Ok(SectionFormat::None),
            other => Err(format!("unknown section format `{other}` (expected latex, mediawiki or none)")),
        }
    }
}

/// A half-open token range `[start, end)` of the latest revision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpan {
    pub title: String,
    pub start: usize,
    pub end: usize,
}

fn latex_heading() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\\section\*?\{([^{}]*)\}").unwrap())
}

fn mediawiki_heading() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Level-2 headings only; `===` and deeper are subsections.
    RE.get_or_init(|| Regex::new(r"^==([^=].*?)==$").unwrap())
}

/// A heading may be a single token (`\section{Intro}`, or a whole line in
/// line mode) or, in word mode, a run of tokens such as `==`, `History`, `==`.
fn heading_at(tokens: &[Token], i: usize, format: SectionFormat) -> Option<String> {
    match format {
        SectionFormat::None => None,
        SectionFormat::Latex => latex_heading().captures(tokens[i].as_str()).map(|c| c[1].trim().to_string()),
        SectionFormat::Mediawiki => {
            let first = tokens[i].as_str();
            if let Some(c) = mediawiki_heading().captures(first.trim()) {
                return Some(c[1].trim().to_string());
            }
            if first != "==" {
                return None;
            }
            // Word mode: collect up to the closing `==`.
            let mut words = Vec::new();
            for t in tokens.iter().skip(i + 1).take(32) {
                if t.as_str() == "==" {
                    return (!words.is_empty()).then(|| words.join(" "));
                }
                if t.as_str().contains('=') {
                    return None;
                }
                words.push(t.as_str());
            }
            None
        }
    }
}

/// Partitions the latest revision into sections.
///
/// Each heading opens a span that runs to the next heading or to the end of
/// the document. Content before the first heading becomes an untitled span,
/// so the spans always cover `[0, latest.len())` without gaps.
pub fn detect_sections(latest: &TokenSeq, format: SectionFormat) -> Vec<SectionSpan> {
    let len = latest.len();
    if len == 0 {
        return Vec::new();
    }
    let mut starts: Vec<(usize, String)> =
        (0..len).filter_map(|i| heading_at(latest, i, format).map(|title| (i, title))).collect();
    if starts.first().is_none_or(|(s, _)| *s != 0) {
        starts.insert(0, (0, String::new()));
    }
    let mut spans = Vec::with_capacity(starts.len());
    for (k, (start, title)) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(len, |(s, _)| *s);
        spans.push(SectionSpan { title: title.clone(), start: *start, end });
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(seq: &TokenSeq) -> Vec<&str> {
        seq.iter().map(Token::as_str).collect()
    }

    #[test]
    fn word_mode_drops_whitespace_runs() {
        assert_eq!(words(&tokenize("a  b\nc", Granularity::Word)), ["a", "b", "c"]);
        assert!(tokenize("", Granularity::Word).is_empty());
        assert!(tokenize(" \t\n ", Granularity::Word).is_empty());
    }

    #[test]
    fn line_mode_drops_terminators() {
        assert_eq!(words(&tokenize("x\ny\n", Granularity::Line)), ["x", "y"]);
        assert_eq!(words(&tokenize("x\r\n\ny", Granularity::Line)), ["x", "y"]);
        assert!(tokenize("", Granularity::Line).is_empty());
    }

    #[test]
    fn join_round_trips_modulo_whitespace() {
        let text = "  the quick\tbrown \n fox ";
        let seq = tokenize(text, Granularity::Word);
        assert_eq!(seq.join(Granularity::Word), "the quick brown fox");
        assert_eq!(tokenize(&seq.join(Granularity::Word), Granularity::Word), seq);
    }

    #[test]
    fn equal_text_equal_hash() {
        let a = Token::new("alpha");
        let b = Token::new(String::from("alpha"));
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(a, b);
        assert_ne!(a, Token::new("beta"));
    }

    #[test]
    #[should_panic]
    fn empty_token_rejected() {
        let _ = Token::new("");
    }

    #[test]
    fn latex_section_at_token_271() {
        let mut text = String::new();
        for i in 0..271 {
            text.push_str(&format!("w{i} "));
        }
        text.push_str("\\section{Introduction} more text here");
        let seq = tokenize(&text, Granularity::Word);
        let spans = detect_sections(&seq, SectionFormat::Latex);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[1].title, "Introduction");
        assert_eq!(spans[1].start, 271);
        assert_eq!(spans[1].end, seq.len());
        assert_eq!(spans[0].start, 0);
        assert_eq!(spans[0].end, 271);
    }

    #[test]
    fn latex_ignores_subsections() {
        let seq = TokenSeq::from_words("\\section{A} x \\subsection{B} y");
        let spans = detect_sections(&seq, SectionFormat::Latex);
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (0, 4));
    }

    #[test]
    fn no_headings_gives_one_anonymous_span() {
        let seq = TokenSeq::from_words("a b c d");
        for format in [SectionFormat::Latex, SectionFormat::Mediawiki, SectionFormat::None] {
            let spans = detect_sections(&seq, format);
            assert_eq!(spans, vec![SectionSpan { title: String::new(), start: 0, end: 4 }]);
        }
        assert!(detect_sections(&TokenSeq::new(), SectionFormat::Latex).is_empty());
    }

    #[test]
    fn mediawiki_line_headings_partition() {
        let mut lines = vec!["==History==".to_string()];
        lines.extend((1..10).map(|i| format!("line {i}")));
        lines.push("== Reception ==".to_string());
        lines.extend((11..20).map(|i| format!("line {i}")));
        let seq = tokenize(&lines.join("\n"), Granularity::Line);
        assert_eq!(seq.len(), 20);
        let spans = detect_sections(&seq, SectionFormat::Mediawiki);
        let ranges: Vec<_> = spans.iter().map(|s| (s.title.as_str(), s.start, s.end)).collect();
        assert_eq!(ranges, [("History", 0, 10), ("Reception", 10, 20)]);
    }

    #[test]
    fn mediawiki_word_headings() {
        let seq = TokenSeq::from_words("== Early life == born here === Family === x == Career == y");
        let spans = detect_sections(&seq, SectionFormat::Mediawiki);
        let ranges: Vec<_> = spans.iter().map(|s| (s.title.as_str(), s.start, s.end)).collect();
        assert_eq!(ranges, [("Early life", 0, 10), ("Career", 10, seq.len())]);
    }

    #[test]
    fn spans_partition_document() {
        let seq = TokenSeq::from_words("x \\section{A} a a \\section{B} \\section{C} c");
        let spans = detect_sections(&seq, SectionFormat::Latex);
        assert_eq!(spans.first().unwrap().start, 0);
        assert_eq!(spans.last().unwrap().end, seq.len());
        for w in spans.windows(2) {
            assert_eq!(w[0].end, w[1].start);
            assert!(w[0].start < w[0].end);
        }
    }
}
