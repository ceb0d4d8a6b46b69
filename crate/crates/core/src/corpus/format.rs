//! Line-delimited corpus files.
//!
//! One record per line, five tab-separated fields:
//!
//! ```text
//! pair_id <TAB> article_id <TAB> cat1,cat2 <TAB> statement-tokens <TAB> proof-tokens
//! ```
//!
//! Token lists are space-separated items `t:surface`, `m:surface` or
//! `m:surface#font`. Tabs, spaces, `#`, `:`, `,`, `%` and line breaks inside
//! any field value are percent-encoded. Lines starting with `#` are comments;
//! the writer emits a `#!split=<tag>` directive for split corpora.
//!
//! Raw (pre-ingest) files may additionally carry `x:<math>...</math>` items
//! holding percent-encoded Presentation MathML.

use std::fs;
use std::path::Path;

use super::token::{Font, Token, TokenKind};
use super::{Corpus, CorpusError, PairRecord, SplitTag};

const SPLIT_DIRECTIVE: &str = "#!split=";

fn needs_escape(c: char) -> bool {
    matches!(c, '%' | '\t' | ' ' | '#' | ':' | ',' | '\n' | '\r')
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if needs_escape(c) {
            out.push_str(&format!("%{:02X}", c as u32));
        } else {
            out.push(c);
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    if !s.contains('%') {
        return Ok(s.to_owned());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3).ok_or_else(|| "truncated percent escape".to_owned())?;
            let b = u8::from_str_radix(hex, 16).map_err(|_| format!("bad percent escape %{hex}"))?;
            out.push(b);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| "percent escape decodes to invalid UTF-8".to_owned())
}

fn render_tokens(tokens: &[Token], out: &mut String) {
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match t.kind() {
            TokenKind::Text => out.push_str("t:"),
            TokenKind::Math => out.push_str("m:"),
        }
        out.push_str(&escape(t.surface()));
        if let (TokenKind::Math, Some(suffix)) = (t.kind(), t.font().suffix()) {
            out.push('#');
            out.push_str(suffix);
        }
    }
}

fn render_record(p: &PairRecord, out: &mut String) {
    out.push_str(&escape(&p.pair_id));
    out.push('\t');
    out.push_str(&escape(&p.article_id));
    out.push('\t');
    let cats: Vec<String> = p.categories.iter().map(|c| escape(c)).collect();
    out.push_str(&cats.join(","));
    out.push('\t');
    render_tokens(&p.statement, out);
    out.push('\t');
    render_tokens(&p.proof, out);
    out.push('\n');
}

/// Serializes a corpus into the canonical text form.
pub fn render_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    if corpus.split_tag != SplitTag::Unsplit {
        out.push_str(SPLIT_DIRECTIVE);
        out.push_str(corpus.split_tag.as_str());
        out.push('\n');
    }
    for p in corpus.pairs() {
        render_record(p, &mut out);
    }
    out
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    fs::write(path, render_corpus(corpus))?;
    Ok(())
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path)?;
    parse_corpus(&text)
}

/// An item of a raw token list: either an already-typed token or an
/// embedded MathML fragment still to be linearized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawToken {
    Token(Token),
    MathMl(String),
}

struct Cursor<'a> {
    line: &'a str,
    line_no: usize,
}

impl Cursor<'_> {
    fn err(&self, byte_offset: usize, message: impl Into<String>) -> CorpusError {
        let column = self.line[..byte_offset.min(self.line.len())].chars().count() + 1;
        CorpusError::Format { line: self.line_no, column, message: message.into() }
    }
}

fn field_offsets(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::with_capacity(5);
    let mut start = 0;
    for (i, c) in line.char_indices() {
        if c == '\t' {
            out.push((start, &line[start..i]));
            start = i + 1;
        }
    }
    out.push((start, &line[start..]));
    out
}

fn parse_items(
    cur: &Cursor<'_>,
    field_start: usize,
    field: &str,
    allow_mathml: bool,
) -> Result<Vec<RawToken>, CorpusError> {
    let mut out = Vec::new();
    if field.is_empty() {
        return Ok(out);
    }
    let mut offset = field_start;
    for item in field.split(' ') {
        let here = offset;
        offset += item.len() + 1;
        if item.is_empty() {
            return Err(cur.err(here, "empty token item (double space?)"));
        }
        let (sigil, body) = match item.split_once(':') {
            Some(x) => x,
            None => return Err(cur.err(here, format!("token item {item:?} lacks a kind sigil"))),
        };
        let decode = |s: &str| unescape(s).map_err(|m| cur.err(here, m));
        let token = match sigil {
            "t" => Token::text(decode(body)?),
            "m" => {
                let (surface, font) = match body.rsplit_once('#') {
                    Some((s, f)) => match Font::from_suffix(f) {
                        Some(font) => (s, font),
                        None => return Err(cur.err(here, format!("unknown font {f:?}"))),
                    },
                    None => (body, Font::Normal),
                };
                Token::math(decode(surface)?, font)
            }
            "x" if allow_mathml => {
                out.push(RawToken::MathMl(decode(body)?));
                continue;
            }
            other => return Err(cur.err(here, format!("unknown token kind sigil {other:?}"))),
        };
        out.push(RawToken::Token(token.map_err(|e| cur.err(here, e.to_string()))?));
    }
    Ok(out)
}

struct RawRecord {
    pair_id: String,
    article_id: String,
    categories: Vec<String>,
    statement: Vec<RawToken>,
    proof: Vec<RawToken>,
}

fn parse_record(line: &str, line_no: usize, allow_mathml: bool) -> Result<RawRecord, CorpusError> {
    let cur = Cursor { line, line_no };
    let fields = field_offsets(line);
    if fields.len() != 5 {
        return Err(cur.err(line.len(), format!("expected 5 tab-separated fields, found {}", fields.len())));
    }
    let text = |i: usize| unescape(fields[i].1).map_err(|m| cur.err(fields[i].0, m));
    let pair_id = text(0)?;
    if pair_id.is_empty() {
        return Err(cur.err(0, "empty pair id"));
    }
    let article_id = text(1)?;
    let categories = if fields[2].1.is_empty() {
        Vec::new()
    } else {
        fields[2].1.split(',').map(|c| unescape(c).map_err(|m| cur.err(fields[2].0, m))).collect::<Result<_, _>>()?
    };
    let statement = parse_items(&cur, fields[3].0, fields[3].1, allow_mathml)?;
    let proof = parse_items(&cur, fields[4].0, fields[4].1, allow_mathml)?;
    Ok(RawRecord { pair_id, article_id, categories, statement, proof })
}

fn record_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses the canonical corpus form. Raw `x:` items are rejected here.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut split_tag = SplitTag::Unsplit;
    for (no, line) in text.lines().enumerate() {
        if let Some(tag) = line.strip_prefix(SPLIT_DIRECTIVE) {
            split_tag = SplitTag::parse(tag.trim()).ok_or_else(|| CorpusError::Format {
                line: no + 1,
                column: SPLIT_DIRECTIVE.len() + 1,
                message: format!("unknown split tag {tag:?}"),
            })?;
        }
    }
    let mut pairs = Vec::new();
    for (no, line) in record_lines(text) {
        let raw = parse_record(line, no, false)?;
        let unwrap = |items: Vec<RawToken>| {
            items
                .into_iter()
                .map(|t| match t {
                    RawToken::Token(t) => t,
                    RawToken::MathMl(_) => unreachable!("x: items rejected by parser"),
                })
                .collect()
        };
        pairs.push(PairRecord {
            pair_id: raw.pair_id,
            article_id: raw.article_id,
            categories: raw.categories,
            statement: unwrap(raw.statement),
            proof: unwrap(raw.proof),
        });
    }
    if pairs.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Corpus::new(pairs, split_tag)
}

/// Parses one raw record line, linearizing embedded MathML fragments.
pub fn parse_raw_record_line(line: &str, line_no: usize) -> Result<PairRecord, CorpusError> {
    let raw = parse_record(line, line_no, true)?;
    let expand = |items: Vec<RawToken>| -> Result<Vec<Token>, CorpusError> {
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item {
                RawToken::Token(t) => out.push(t),
                RawToken::MathMl(xml) => out.extend(super::linearize_mathml(&xml)?),
            }
        }
        Ok(out)
    };
    Ok(PairRecord {
        pair_id: raw.pair_id,
        article_id: raw.article_id,
        categories: raw.categories,
        statement: expand(raw.statement)?,
        proof: expand(raw.proof)?,
    })
}
