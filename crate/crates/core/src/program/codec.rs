//! Canonical text form: parenthesised prefix notation.
//!
//! ```text
//! (add (lat) (const:Number 2.5))
//! ```
//!
//! Every node is wrapped in parentheses, separators are a single space and
//! constants print with Rust's shortest round-trip float formatting, so equal
//! trees always produce byte-identical text.

use std::fmt::Write;

use thiserror::Error;

use super::primitives::{Category, PrimitiveSet};
use super::tree::{Node, ProgramTree, ValidationError};

/// Nesting limit applied while parsing untrusted text.
const MAX_PARSE_NESTING: usize = 256;

pub fn serialize(tree: &ProgramTree) -> String {
    let mut out = String::with_capacity(tree.size() * 8);
    write_node(tree.root(), &mut out);
    out
}

fn write_node(node: &Node, out: &mut String) {
    out.push('(');
    out.push_str(&node.kind.name);
    if let Some(value) = node.value {
        let _ = write!(out, " {value}");
    }
    for child in &node.children {
        out.push(' ');
        write_node(child, out);
    }
    out.push(')');
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected `{expected}` at byte {at}")]
    Expected { expected: char, at: usize },
    #[error("empty node name at byte {0}")]
    EmptyName(usize),
    #[error("invalid number `{text}` at byte {at}")]
    BadNumber { text: String, at: usize },
    #[error("trailing input at byte {0}")]
    Trailing(usize),
    #[error("nesting deeper than {MAX_PARSE_NESTING}")]
    TooDeep,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid program: {0}")]
    Invalid(#[from] ValidationError),
}

/// Parses and validates a tree against `prims` (no depth bound).
pub fn deserialize(text: &str, prims: &PrimitiveSet) -> Result<ProgramTree, DecodeError> {
    decode(text, prims, None)
}

/// Like [`deserialize`] but also rejects trees deeper than `max_depth`.
pub fn deserialize_bounded(
    text: &str,
    prims: &PrimitiveSet,
    max_depth: usize,
) -> Result<ProgramTree, DecodeError> {
    decode(text, prims, Some(max_depth))
}

fn decode(
    text: &str,
    prims: &PrimitiveSet,
    max_depth: Option<usize>,
) -> Result<ProgramTree, DecodeError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    parser.skip_ws();
    let raw = parser.node(0)?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(ParseError::Trailing(parser.pos).into());
    }
    let tree = ProgramTree::new(resolve(raw, prims)?);
    tree.validate(prims, max_depth)?;
    Ok(tree)
}

struct RawNode {
    name: String,
    value: Option<f64>,
    children: Vec<RawNode>,
}

fn resolve(raw: RawNode, prims: &PrimitiveSet) -> Result<Node, ValidationError> {
    let kind = prims
        .kind(&raw.name)
        .ok_or_else(|| ValidationError::UnknownKind(raw.name.clone()))?
        .clone();
    match (kind.category, raw.value) {
        (Category::Constant, None) => return Err(ValidationError::MissingPayload(raw.name)),
        (Category::Function | Category::Terminal, Some(_)) => {
            return Err(ValidationError::UnexpectedPayload(raw.name))
        }
        _ => {}
    }
    let children = raw
        .children
        .into_iter()
        .map(|child| resolve(child, prims))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Node {
        kind,
        value: raw.value,
        children,
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, ch: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(ParseError::Expected {
                expected: ch as char,
                at: self.pos,
            }),
            None => Err(ParseError::UnexpectedEnd),
        }
    }

    fn atom(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || c == b'(' || c == b')' {
                break;
            }
            self.pos += 1;
        }
        // Input came from a &str and we only split on ASCII bytes.
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default()
    }

    fn node(&mut self, nesting: usize) -> Result<RawNode, ParseError> {
        if nesting >= MAX_PARSE_NESTING {
            return Err(ParseError::TooDeep);
        }
        self.expect(b'(')?;
        let at = self.pos;
        let name = self.atom().to_string();
        if name.is_empty() {
            return Err(ParseError::EmptyName(at));
        }
        let mut value = None;
        let mut children = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(ParseError::UnexpectedEnd),
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(b'(') => children.push(self.node(nesting + 1)?),
                Some(_) => {
                    let at = self.pos;
                    let text = self.atom();
                    let parsed = text
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite() && value.is_none() && children.is_empty());
                    match parsed {
                        Some(v) => value = Some(v),
                        None => {
                            return Err(ParseError::BadNumber {
                                text: text.to_string(),
                                at,
                            })
                        }
                    }
                }
            }
        }
        Ok(RawNode {
            name,
            value,
            children,
        })
    }
}
