//! Parser for the property language and for property files.
//!
//! ```text
//! # φ-style properties, one per `property` header; formulas may span lines
//! property low_battery_reported:
//!   always ((Reader, Skill, m[1] = <ok>) implies (Reader, Skill, m[2] >= 20))
//! ```
//!
//! Grammar (loosest to tightest): `implies` (right-assoc), `or`, `and`,
//! `until` (right-assoc), then the unary `not` / `next` / `always` /
//! `eventually`, then atoms: `true`, `false`, an event
//! `(source, dest, condition)`, `time_until(event) relop bound`, or a
//! parenthesized formula. Conditions compare 1-based message parts:
//! `m[1] = <ok> and m[2] >= 20`.

use crate::cond::MessageCondition;
use crate::error::ParseError;
use crate::scope::ast::{Event, Formula, Property, TimeBound};
use crate::value::{RelOp, Scalar};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(input: &str) -> Result<Vec<Spanned>, ParseError> {
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
                out.push(Spanned {
                    tok: Tok::Sym(chars[i + 1..j].iter().collect()),
                    line,
                    col,
                });
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
                out.push(Spanned {
                    tok: Tok::Int(n),
                    line,
                    col,
                });
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.')
                {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line,
                    col,
                });
                continue;
            }
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let tok2 = match two.as_str() {
                "!=" => Some("!="),
                "<=" => Some("<="),
                ">=" => Some(">="),
                _ => None,
            };
            if let Some(p) = tok2 {
                out.push(Spanned {
                    tok: Tok::Punct(p),
                    line,
                    col,
                });
                i += 2;
                continue;
            }
            let one = match c {
                '(' => "(",
                ')' => ")",
                '[' => "[",
                ']' => "]",
                ',' => ",",
                ':' => ":",
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
            out.push(Spanned {
                tok: Tok::Punct(one),
                line,
                col,
            });
            i += 1;
        }
    }
    Ok(out)
}

struct P {
    toks: Vec<Spanned>,
    pos: usize,
}

impl P {
    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some(s) => ParseError::new(s.line, s.col, msg),
            None => ParseError::new(1, 1, msg),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
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
            Err(self.err_here(format!("expected `{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_here("expected identifier"))
            }
        }
    }

    fn relop(&mut self) -> Result<RelOp, ParseError> {
        let op = match self.peek() {
            Some(Tok::Punct("=")) => RelOp::Eq,
            Some(Tok::Punct("!=")) => RelOp::Ne,
            Some(Tok::Punct("<")) => RelOp::Lt,
            Some(Tok::Punct(">")) => RelOp::Gt,
            Some(Tok::Punct("<=")) => RelOp::Le,
            Some(Tok::Punct(">=")) => RelOp::Ge,
            _ => return Err(self.err_here("expected a comparison operator")),
        };
        self.pos += 1;
        Ok(op)
    }

    fn scalar(&mut self) -> Result<Scalar, ParseError> {
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Scalar::Int(n)),
            Some(Tok::Sym(s)) => Ok(Scalar::Sym(s)),
            Some(Tok::Ident(s)) if s == "true" => Ok(Scalar::Bool(true)),
            Some(Tok::Ident(s)) if s == "false" => Ok(Scalar::Bool(false)),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_here("expected a scalar (integer, <symbol>, true, false)"))
            }
        }
    }

    // condition := cond_and ('or' cond_and)*
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
        // m[i] relop scalar
        let m = self.expect_ident()?;
        if m != "m" {
            return Err(self.err_here("conditions refer to message parts as m[i]"));
        }
        self.expect_punct("[")?;
        let idx = match self.bump() {
            Some(Tok::Int(n)) if n >= 1 => n as usize,
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return Err(self.err_here("message parts are numbered from 1"));
            }
        };
        self.expect_punct("]")?;
        let op = self.relop()?;
        let rhs = self.scalar()?;
        Ok(MessageCondition::cmp(idx, op, rhs))
    }

    /// Event body after its opening `(`: `source, dest, condition)`.
    fn event_body(&mut self) -> Result<Event, ParseError> {
        let source = self.expect_ident()?;
        self.expect_punct(",")?;
        let dest = self.expect_ident()?;
        self.expect_punct(",")?;
        let cond = self.condition()?;
        self.expect_punct(")")?;
        Ok(Event { source, dest, cond })
    }

    fn time_bound(&mut self) -> Result<TimeBound, ParseError> {
        match self.bump() {
            Some(Tok::Int(n)) => Ok(TimeBound::Const(n)),
            Some(Tok::Ident(s)) => Ok(TimeBound::Param(s)),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_here("expected a tick count or parameter name"))
            }
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        if self.eat_kw("true") {
            return Ok(Formula::True);
        }
        if self.eat_kw("false") {
            return Ok(Formula::not(Formula::True));
        }
        if self.eat_kw("time_until") {
            self.expect_punct("(")?;
            // Accept both time_until((a, b, c)) and time_until(a, b, c).
            let event = if self.eat_punct("(") {
                let e = self.event_body()?;
                self.expect_punct(")")?;
                e
            } else {
                self.event_body()?
            };
            let op = self.relop()?;
            let bound = self.time_bound()?;
            return Ok(Formula::TimeUntil { event, op, bound });
        }
        if self.eat_punct("(") {
            // Either an event or a parenthesized formula: an event starts
            // with a non-keyword identifier followed by a comma.
            let is_event = matches!(
                (self.peek(), self.peek2()),
                (Some(Tok::Ident(id)), Some(Tok::Punct(",")))
                    if !is_keyword(id)
            );
            if is_event {
                return Ok(Formula::Event(self.event_body()?));
            }
            let f = self.formula()?;
            self.expect_punct(")")?;
            return Ok(f);
        }
        Err(self.err_here("expected a formula"))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat_kw("not") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat_kw("next") {
            return Ok(Formula::next(self.unary()?));
        }
        if self.eat_kw("always") {
            return Ok(Formula::always(self.unary()?));
        }
        if self.eat_kw("eventually") {
            return Ok(Formula::eventually(self.unary()?));
        }
        self.atom()
    }

    fn until_chain(&mut self) -> Result<Formula, ParseError> {
        let left = self.unary()?;
        if self.eat_kw("until") {
            let right = self.until_chain()?;
            return Ok(Formula::until(left, right));
        }
        Ok(left)
    }

    fn and_chain(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.until_chain()?;
        while self.eat_kw("and") {
            f = Formula::and(f, self.until_chain()?);
        }
        Ok(f)
    }

    fn or_chain(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and_chain()?;
        while self.eat_kw("or") {
            f = Formula::or(f, self.and_chain()?);
        }
        Ok(f)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let left = self.or_chain()?;
        if self.eat_kw("implies") {
            let right = self.formula()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "true"
            | "false"
            | "not"
            | "and"
            | "or"
            | "implies"
            | "until"
            | "next"
            | "always"
            | "eventually"
            | "time_until"
            | "property"
    )
}

/// Parses a single formula.
pub fn parse_formula(input: &str) -> Result<Formula, ParseError> {
    let toks = lex(input)?;
    let mut p = P { toks, pos: 0 };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.err_here("unexpected trailing tokens"));
    }
    Ok(f)
}

/// Parses a property file: a sequence of `property <name>: <formula>`
/// blocks; each formula runs until the next `property` keyword.
pub fn parse_properties(input: &str) -> Result<Vec<Property>, ParseError> {
    let toks = lex(input)?;
    let mut p = P { toks, pos: 0 };
    let mut out = Vec::new();
    while p.pos < p.toks.len() {
        if !p.eat_kw("property") {
            return Err(p.err_here("expected `property`"));
        }
        let name = p.expect_ident()?;
        p.expect_punct(":")?;
        let formula = p.formula()?;
        out.push(Property { name, formula });
    }
    if out.is_empty() {
        return Err(ParseError::new(1, 1, "no properties found"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_report_property_shape() {
        let f = parse_formula(
            "always ((Reader, Level, m[1] = <ok>) implies (Reader, Level, m[2] >= 20))",
        )
        .unwrap();
        let body = Formula::implies(
            Formula::Event(Event::new(
                "Reader",
                "Level",
                MessageCondition::cmp(1, RelOp::Eq, Scalar::sym("ok")),
            )),
            Formula::Event(Event::new(
                "Reader",
                "Level",
                MessageCondition::cmp(2, RelOp::Ge, Scalar::Int(20)),
            )),
        );
        assert_eq!(f, Formula::always(body));
    }

    #[test]
    fn bounded_response_with_parameter() {
        let f = parse_formula(
            "always ((Nav, GoTo, m[1] = <ok> and m[2] = <running>) \
             implies time_until((GoStation, Nav, m[1] = <start>)) < theta)",
        )
        .unwrap();
        let trigger = Formula::Event(Event::new(
            "Nav",
            "GoTo",
            MessageCondition::and(
                MessageCondition::cmp(1, RelOp::Eq, Scalar::sym("ok")),
                MessageCondition::cmp(2, RelOp::Eq, Scalar::sym("running")),
            ),
        ));
        let response = Formula::TimeUntil {
            event: Event::new(
                "GoStation",
                "Nav",
                MessageCondition::cmp(1, RelOp::Eq, Scalar::sym("start")),
            ),
            op: RelOp::Lt,
            bound: TimeBound::Param("theta".into()),
        };
        assert_eq!(f, Formula::always(Formula::implies(trigger, response)));
    }

    #[test]
    fn precedence_until_binds_tighter_than_and() {
        let f = parse_formula("true until true and false until true").unwrap();
        assert_eq!(
            f,
            Formula::and(
                Formula::until(Formula::True, Formula::True),
                Formula::until(Formula::not(Formula::True), Formula::True),
            )
        );
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "not (true until not (Reader, Level, m[2] >= 20))",
            "next (a, b, true) or (c, d, m[1] != <x>) and true",
            "time_until((a, b, m[3] <= 7)) >= 4 until true",
        ] {
            let f = parse_formula(src).unwrap();
            let printed = f.to_string();
            assert_eq!(parse_formula(&printed).unwrap(), f, "printed: {printed}");
        }
    }

    #[test]
    fn property_file_parses_multiple() {
        let props = parse_properties(
            "# two properties\n\
             property first:\n  always (a, b, m[1] = 1)\n\
             property second:\n  eventually (c, d, true)\n",
        )
        .unwrap();
        assert_eq!(props.len(), 2);
        assert_eq!(props[0].name, "first");
        assert_eq!(props[1].name, "second");
    }
}
