//! Line-oriented graph DSL.
//!
//! ```text
//! # comment
//! var Z1 : 2 left
//! var X : 2            # side defaults to right
//! edge Z1 -> X -> Y    # chains are allowed
//! confound U_r { X, Y }
//! confound left        # one confounder spanning the whole side
//! unobserved Y
//! ```

use super::{CausalGraph, GraphBuilder, Side};
use crate::error::ParseError;

pub fn parse_graph(text: &str) -> Result<CausalGraph, ParseError> {
    parse_graph_at(text, 1)
}

/// Parses with line numbers offset so errors point into an enclosing file.
pub(crate) fn parse_graph_at(text: &str, first_line: usize) -> Result<CausalGraph, ParseError> {
    let mut b = GraphBuilder::default();
    for (offset, raw) in text.lines().enumerate() {
        let line_no = first_line + offset;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| ParseError::syntax(line_no, 1, msg);
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match keyword {
            "var" => {
                let (name, spec) =
                    rest.split_once(':').ok_or_else(|| err("expected `var NAME : CARD [left|right]`"))?;
                let name = ident(name.trim()).ok_or_else(|| err("invalid variable name"))?;
                let mut parts = spec.split_whitespace();
                let card: u32 = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| err("expected an integer cardinality"))?;
                let side = match parts.next() {
                    None | Some("right") => Side::Right,
                    Some("left") => Side::Left,
                    Some(other) => return Err(err(&format!("unknown side `{other}`"))),
                };
                if parts.next().is_some() {
                    return Err(err("trailing tokens after side"));
                }
                b.variable(name, card, side);
            }
            "edge" => {
                let names: Vec<&str> = rest.split("->").map(str::trim).collect();
                if names.len() < 2 {
                    return Err(err("expected `edge A -> B`"));
                }
                for n in &names {
                    ident(n).ok_or_else(|| err(&format!("invalid variable name `{n}`")))?;
                }
                for pair in names.windows(2) {
                    b.edge(pair[0], pair[1]);
                }
            }
            "confound" => match rest {
                "left" => {
                    b.confound_side(Side::Left);
                }
                "right" => {
                    b.confound_side(Side::Right);
                }
                _ => {
                    let (name, body) = rest
                        .split_once('{')
                        .ok_or_else(|| err("expected `confound NAME { A, B }`"))?;
                    let body = body
                        .trim()
                        .strip_suffix('}')
                        .ok_or_else(|| err("missing closing `}`"))?;
                    let name = ident(name.trim()).ok_or_else(|| err("invalid confounder name"))?;
                    let kids: Vec<&str> =
                        body.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
                    for k in &kids {
                        ident(k).ok_or_else(|| err(&format!("invalid variable name `{k}`")))?;
                    }
                    b.confounder(name, &kids);
                }
            },
            "unobserved" => {
                for n in rest.split(',').map(str::trim) {
                    let n = ident(n).ok_or_else(|| err("expected variable name"))?;
                    b.unobserved(n);
                }
            }
            other => return Err(err(&format!("unknown statement `{other}`"))),
        }
    }
    b.build().map_err(ParseError::Model)
}

pub(crate) fn ident(s: &str) -> Option<&str> {
    let mut chars = s.chars();
    let first = chars.next()?;
    if (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        Some(s)
    } else {
        None
    }
}
