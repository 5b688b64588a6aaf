//! Brace-delimited text format for tree definitions.
//!
//! ```text
//! fallback root {
//!   sequence mission {
//!     leaf CheckLevel
//!     leaf GoSomewhere
//!   }
//!   leaf WaitForUser
//! }
//!
//! leaf CheckLevel {
//!   skill LevelSkill
//!   request [<get>]
//!   map m[1] = <ok> and m[2] >= 30 -> success
//!   map m[1] = <ok> -> failure
//! }
//! ```
//!
//! The first block is the tree; every leaf then needs a binding block with
//! its skill, the request message, an optional `halt` message, and ordered
//! `map <condition> -> <status>` rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bt::def::{BtDefinition, BtNode, BtStatus, LeafBinding};
use crate::cond::MessageCondition;
use crate::error::ParseError;
use crate::value::{Message, RelOp, Scalar};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(String),
    Punct(&'static str),
}

struct Lexed {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(input: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut out = Vec::new();
    for (ln, raw) in input.lines().enumerate() {
        let line = ln + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c == '<' && chars.get(i + 1).is_some_and(|d| d.is_alphabetic() || *d == '_') {
                let mut j = i + 1;
                while j < chars.len() && chars[j] != '>' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(ParseError::new(line, col, "unterminated symbol literal"));
                }
                out.push((Tok::Sym(chars[i + 1..j].iter().collect()), line, col));
                i = j + 1;
                continue;
            }
            if c.is_ascii_digit()
                || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
            {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n = s
                    .parse()
                    .map_err(|_| ParseError::new(line, col, format!("bad integer `{s}`")))?;
                out.push((Tok::Int(n), line, col));
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.')
                {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), line, col));
                continue;
            }
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let tok2 = match two.as_str() {
                "!=" => Some("!="),
                "<=" => Some("<="),
                ">=" => Some(">="),
                "->" => Some("->"),
                _ => None,
            };
            if let Some(p) = tok2 {
                out.push((Tok::Punct(p), line, col));
                i += 2;
                continue;
            }
            let one = match c {
                '{' => "{",
                '}' => "}",
                '(' => "(",
                ')' => ")",
                '[' => "[",
                ']' => "]",
                ',' => ",",
                '=' => "=",
                '<' => "<",
                '>' => ">",
                _ => {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("unexpected character `{c}`"),
                    ))
                }
            };
            out.push((Tok::Punct(one), line, col));
            i += 1;
        }
    }
    Ok(out)
}

impl Lexed {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some((_, l, c)) => ParseError::new(*l, *c, msg),
            None => ParseError::new(1, 1, msg),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err("expected identifier"))
            }
        }
    }

    fn scalar(&mut self) -> Result<Scalar, ParseError> {
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Scalar::Int(n)),
            Some(Tok::Sym(s)) => Ok(Scalar::Sym(s)),
            Some(Tok::Ident(s)) if s == "true" => Ok(Scalar::Bool(true)),
            Some(Tok::Ident(s)) if s == "false" => Ok(Scalar::Bool(false)),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err("expected a scalar"))
            }
        }
    }

    fn message(&mut self) -> Result<Message, ParseError> {
        self.expect_punct("[")?;
        let mut parts = vec![self.scalar()?];
        while self.eat_punct(",") {
            parts.push(self.scalar()?);
        }
        self.expect_punct("]")?;
        Message::new(parts).map_err(|e| self.err(e.to_string()))
    }

    fn relop(&mut self) -> Result<RelOp, ParseError> {
        let op = match self.peek() {
            Some(Tok::Punct("=")) => RelOp::Eq,
            Some(Tok::Punct("!=")) => RelOp::Ne,
            Some(Tok::Punct("<")) => RelOp::Lt,
            Some(Tok::Punct(">")) => RelOp::Gt,
            Some(Tok::Punct("<=")) => RelOp::Le,
            Some(Tok::Punct(">=")) => RelOp::Ge,
            _ => return Err(self.err("expected a comparison operator")),
        };
        self.pos += 1;
        Ok(op)
    }

    // condition := cand ('or' cand)* ; cand := unary ('and' unary)*
    fn condition(&mut self) -> Result<MessageCondition, ParseError> {
        let mut c = self.cond_and()?;
        while self.eat_kw("or") {
            c = MessageCondition::or(c, self.cond_and()?);
        }
        Ok(c)
    }

    fn cond_and(&mut self) -> Result<MessageCondition, ParseError> {
        let mut c = self.cond_unary()?;
        while self.eat_kw("and") {
            c = MessageCondition::and(c, self.cond_unary()?);
        }
        Ok(c)
    }

    fn cond_unary(&mut self) -> Result<MessageCondition, ParseError> {
        if self.eat_kw("not") {
            return Ok(MessageCondition::negate(self.cond_unary()?));
        }
        if self.eat_punct("(") {
            let c = self.condition()?;
            self.expect_punct(")")?;
            return Ok(c);
        }
        if self.eat_kw("true") {
            return Ok(MessageCondition::True);
        }
        let m = self.expect_ident()?;
        if m != "m" {
            return Err(self.err("conditions refer to message parts as m[i]"));
        }
        self.expect_punct("[")?;
        let idx = match self.bump() {
            Some(Tok::Int(n)) if n >= 1 => n as usize,
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return Err(self.err("message parts are numbered from 1"));
            }
        };
        self.expect_punct("]")?;
        let op = self.relop()?;
        let rhs = self.scalar()?;
        Ok(MessageCondition::cmp(idx, op, rhs))
    }

    fn node(&mut self) -> Result<BtNode, ParseError> {
        if self.eat_kw("sequence") {
            let name = self.expect_ident()?;
            Ok(BtNode::sequence(name, self.children()?))
        } else if self.eat_kw("fallback") {
            let name = self.expect_ident()?;
            Ok(BtNode::fallback(name, self.children()?))
        } else if self.eat_kw("leaf") {
            Ok(BtNode::leaf(self.expect_ident()?))
        } else {
            Err(self.err("expected `sequence`, `fallback`, or `leaf`"))
        }
    }

    fn children(&mut self) -> Result<Vec<BtNode>, ParseError> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            if self.peek().is_none() {
                return Err(self.err("unterminated node block"));
            }
            out.push(self.node()?);
        }
        Ok(out)
    }

    fn binding(&mut self) -> Result<(String, LeafBinding), ParseError> {
        // `leaf` was already consumed by the caller.
        let name = self.expect_ident()?;
        self.expect_punct("{")?;
        let mut skill = None;
        let mut request = None;
        let mut halt = None;
        let mut mapping = Vec::new();
        while !self.eat_punct("}") {
            if self.eat_kw("skill") {
                skill = Some(self.expect_ident()?);
            } else if self.eat_kw("request") {
                request = Some(self.message()?);
            } else if self.eat_kw("halt") {
                halt = Some(self.message()?);
            } else if self.eat_kw("map") {
                let cond = self.condition()?;
                self.expect_punct("->")?;
                let status = match self.expect_ident()?.as_str() {
                    "success" => BtStatus::Success,
                    "failure" => BtStatus::Failure,
                    "running" => BtStatus::Running,
                    other => {
                        return Err(self.err(format!(
                            "unknown status `{other}` (success, failure, running)"
                        )))
                    }
                };
                mapping.push((cond, status));
            } else {
                return Err(self.err("expected `skill`, `request`, `halt`, or `map`"));
            }
        }
        let skill =
            skill.ok_or_else(|| self.err(format!("binding `{name}` is missing `skill`")))?;
        let request =
            request.ok_or_else(|| self.err(format!("binding `{name}` is missing `request`")))?;
        Ok((
            name,
            LeafBinding {
                skill,
                request,
                halt_request: halt,
                mapping,
            },
        ))
    }
}

/// Parses a tree definition file.
pub fn parse_bt(input: &str) -> Result<BtDefinition, ParseError> {
    let toks = lex(input)?;
    let mut p = Lexed { toks, pos: 0 };
    let root = p.node()?;
    if matches!(root, BtNode::Leaf { .. }) && p.eat_punct("{") {
        return Err(p.err("the tree root must come before binding blocks"));
    }
    let mut bindings = BTreeMap::new();
    while p.pos < p.toks.len() {
        if !p.eat_kw("leaf") {
            return Err(p.err("expected a `leaf <name> { ... }` binding block"));
        }
        let (name, b) = p.binding()?;
        if bindings.insert(name.clone(), b).is_some() {
            return Err(p.err(format!("duplicate binding for `{name}`")));
        }
    }
    let def = BtDefinition { root, bindings };
    def.validate()
        .map_err(|e| ParseError::new(0, 0, e.to_string()))?;
    Ok(def)
}

/// Prints a definition in the brace format; `parse_bt` reads it back.
pub fn print_bt(def: &BtDefinition) -> String {
    let mut out = String::new();
    fn node(n: &BtNode, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match n {
            BtNode::Sequence { name, children } | BtNode::Fallback { name, children } => {
                let kw = if matches!(n, BtNode::Sequence { .. }) {
                    "sequence"
                } else {
                    "fallback"
                };
                let _ = writeln!(out, "{pad}{kw} {name} {{");
                for c in children {
                    node(c, indent + 1, out);
                }
                let _ = writeln!(out, "{pad}}}");
            }
            BtNode::Leaf { name } => {
                let _ = writeln!(out, "{pad}leaf {name}");
            }
        }
    }
    node(&def.root, 0, &mut out);
    for (name, b) in &def.bindings {
        let _ = writeln!(out);
        let _ = writeln!(out, "leaf {name} {{");
        let _ = writeln!(out, "  skill {}", b.skill);
        let _ = writeln!(out, "  request {}", b.request);
        if let Some(h) = &b.halt_request {
            let _ = writeln!(out, "  halt {h}");
        }
        for (cond, status) in &b.mapping {
            let _ = writeln!(out, "  map {cond} -> {status}");
        }
        let _ = writeln!(out, "}}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
fallback root {
  sequence mission {
    leaf CheckLevel
    leaf GoSomewhere
  }
  leaf WaitForUser
}

leaf CheckLevel {
  skill LevelSkill
  request [<get>]
  map m[1] = <ok> and m[2] >= 30 -> success
  map m[1] = <ok> -> failure
}

leaf GoSomewhere {
  skill GoSkill
  request [<go>]
  halt [<halt>]
  map m[1] = <running> -> running
  map m[1] = <reached> -> success
}

leaf WaitForUser {
  skill WaitSkill
  request [<wait>]
  map true -> running
}
";

    #[test]
    fn parses_and_round_trips() {
        let def = parse_bt(SAMPLE).unwrap();
        assert_eq!(def.bindings.len(), 3);
        let printed = print_bt(&def);
        let again = parse_bt(&printed).unwrap();
        assert_eq!(again, def);
    }

    #[test]
    fn pretty_marks_composites() {
        let def = parse_bt(SAMPLE).unwrap();
        let art = def.pretty();
        assert!(art.contains("? root"));
        assert!(art.contains("→ mission"));
        assert!(art.contains("WaitForUser"));
    }

    #[test]
    fn missing_binding_is_rejected() {
        let bad = "sequence s { leaf A }\n";
        assert!(parse_bt(bad).is_err());
    }
}
