//! Line-oriented text format for channel systems.
//!
//! ```text
//! # comment
//! shared level : int 0..100 = [100]
//! channel Reader -> Skill cap 1
//! tick Gen -> Root
//!
//! process Reader
//!   init Idle
//!   var req : any = [<none>]
//!   Idle --[ req[1] = <get> : !(Reader, Skill, req) ]--> Wait
//!   Wait --[ ?(Skill, Reader, reply) ]--> Idle
//! ```
//!
//! Transition labels are `guard : action` where either part may be omitted
//! (guard defaults to `true`, action to `skip`). Actions are either `skip`,
//! semicolon-separated assignments `v := [expr, ...]`, or a communication
//! `!(src, dst, payload)` / `?(src, dst, payload)` with a variable or a
//! message literal as payload. Only systems without native effects can be
//! printed and re-parsed.

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::model::guard::{Action, Assignment, Expr, Guard};
use crate::model::pg::{ChannelId, CommAction, CommDir, Label, Payload, PgBuilder};
use crate::model::system::{ChannelSystem, ChannelSystemBuilder};
use crate::value::{Domain, Message, RelOp, Scalar};
use crate::cond::MessageCondition;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(String),
    Punct(&'static str),
}

fn lex(line: &str, line_no: usize) -> Result<Vec<Tok>, ParseError> {
    let err = |col: usize, msg: String| ParseError::new(line_no, col, msg);
    let bytes: Vec<char> = line.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c == '<' && bytes.get(i + 1).is_some_and(|d| d.is_alphabetic() || *d == '_') {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j] != '>' {
                j += 1;
            }
            if j == bytes.len() {
                return Err(err(i + 1, "unterminated symbol literal".into()));
            }
            out.push(Tok::Sym(bytes[start..j].iter().collect()));
            i = j + 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && bytes.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = bytes[start..i].iter().collect();
            out.push(Tok::Int(s.parse().map_err(|_| {
                err(start + 1, format!("bad integer `{s}`"))
            })?));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_alphanumeric() || bytes[i] == '_' || bytes[i] == '.')
            {
                i += 1;
            }
            out.push(Tok::Ident(bytes[start..i].iter().collect()));
            continue;
        }
        let two: String = bytes[i..(i + 2).min(bytes.len())].iter().collect();
        let tok2 = match two.as_str() {
            ":=" => Some(":="),
            "!=" => Some("!="),
            "<=" => Some("<="),
            ">=" => Some(">="),
            "->" => Some("->"),
            ".." => Some(".."),
            _ => None,
        };
        if let Some(p) = tok2 {
            out.push(Tok::Punct(p));
            i += 2;
            continue;
        }
        let one = match c {
            '(' => "(",
            ')' => ")",
            '[' => "[",
            ']' => "]",
            '{' => "{",
            '}' => "}",
            ',' => ",",
            ';' => ";",
            ':' => ":",
            '!' => "!",
            '?' => "?",
            '=' => "=",
            '<' => "<",
            '>' => ">",
            '+' => "+",
            '-' => "-",
            _ => return Err(err(i + 1, format!("unexpected character `{c}`"))),
        };
        out.push(Tok::Punct(one));
        i += 1;
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Tok], line: usize) -> Self {
        Cursor { toks, pos: 0, line }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.pos + 1, msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
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

    fn eat_ident(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s.clone()),
            _ => Err(self.err("expected identifier")),
        }
    }

    fn expect_int(&mut self) -> Result<i64, ParseError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(*n),
            _ => Err(self.err("expected integer")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos == self.toks.len()
    }
}

fn parse_scalar(c: &mut Cursor<'_>) -> Result<Scalar, ParseError> {
    match c.next().cloned() {
        Some(Tok::Int(n)) => Ok(Scalar::Int(n)),
        Some(Tok::Sym(s)) => Ok(Scalar::Sym(s)),
        Some(Tok::Ident(s)) if s == "true" => Ok(Scalar::Bool(true)),
        Some(Tok::Ident(s)) if s == "false" => Ok(Scalar::Bool(false)),
        _ => Err(c.err("expected a scalar (integer, <symbol>, true, false)")),
    }
}

fn parse_message(c: &mut Cursor<'_>) -> Result<Message, ParseError> {
    c.expect_punct("[")?;
    let mut parts = vec![parse_scalar(c)?];
    while c.eat_punct(",") {
        parts.push(parse_scalar(c)?);
    }
    c.expect_punct("]")?;
    Message::new(parts).map_err(|e| c.err(e.to_string()))
}

fn parse_relop(c: &mut Cursor<'_>) -> Result<RelOp, ParseError> {
    let op = match c.next() {
        Some(Tok::Punct("=")) => RelOp::Eq,
        Some(Tok::Punct("!=")) => RelOp::Ne,
        Some(Tok::Punct("<")) => RelOp::Lt,
        Some(Tok::Punct(">")) => RelOp::Gt,
        Some(Tok::Punct("<=")) => RelOp::Le,
        Some(Tok::Punct(">=")) => RelOp::Ge,
        _ => return Err(c.err("expected a comparison operator")),
    };
    Ok(op)
}

fn parse_guard(c: &mut Cursor<'_>) -> Result<Guard, ParseError> {
    let mut g = parse_guard_and(c)?;
    while c.eat_ident("or") {
        g = Guard::or(g, parse_guard_and(c)?);
    }
    Ok(g)
}

fn parse_guard_and(c: &mut Cursor<'_>) -> Result<Guard, ParseError> {
    let mut g = parse_guard_unary(c)?;
    while c.eat_ident("and") {
        g = Guard::and(g, parse_guard_unary(c)?);
    }
    Ok(g)
}

fn parse_guard_unary(c: &mut Cursor<'_>) -> Result<Guard, ParseError> {
    if c.eat_ident("not") {
        return Ok(Guard::negate(parse_guard_unary(c)?));
    }
    if c.eat_punct("(") {
        let g = parse_guard(c)?;
        c.expect_punct(")")?;
        return Ok(g);
    }
    if c.eat_ident("true") {
        return Ok(Guard::True);
    }
    // var[index] relop scalar
    let var = c.expect_ident()?;
    c.expect_punct("[")?;
    let index = c.expect_int()?;
    if index < 1 {
        return Err(c.err("message parts are numbered from 1"));
    }
    c.expect_punct("]")?;
    let op = parse_relop(c)?;
    let rhs = parse_scalar(c)?;
    Ok(Guard::test(
        var,
        MessageCondition::cmp(index as usize, op, rhs),
    ))
}

fn parse_expr(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    let mut e = parse_expr_atom(c)?;
    loop {
        if c.eat_punct("+") {
            e = Expr::add(e, parse_expr_atom(c)?);
        } else if c.eat_punct("-") {
            e = Expr::sub(e, parse_expr_atom(c)?);
        } else {
            break;
        }
    }
    Ok(e)
}

fn parse_expr_atom(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    if c.eat_punct("(") {
        let e = parse_expr(c)?;
        c.expect_punct(")")?;
        return Ok(e);
    }
    match c.peek().cloned() {
        Some(Tok::Ident(s)) if s != "true" && s != "false" => {
            c.next();
            c.expect_punct("[")?;
            let index = c.expect_int()?;
            if index < 1 {
                return Err(c.err("message parts are numbered from 1"));
            }
            c.expect_punct("]")?;
            Ok(Expr::part(s, index as usize))
        }
        _ => Ok(Expr::Const(parse_scalar(c)?)),
    }
}

fn parse_action(c: &mut Cursor<'_>) -> Result<Action, ParseError> {
    if c.eat_ident("skip") {
        return Ok(Action::Nop);
    }
    let mut assignments = Vec::new();
    loop {
        let var = c.expect_ident()?;
        c.expect_punct(":=")?;
        c.expect_punct("[")?;
        let mut parts = vec![parse_expr(c)?];
        while c.eat_punct(",") {
            parts.push(parse_expr(c)?);
        }
        c.expect_punct("]")?;
        assignments.push(Assignment { var, parts });
        if !c.eat_punct(";") {
            break;
        }
    }
    Ok(Action::Assign(assignments))
}

fn parse_comm(c: &mut Cursor<'_>) -> Result<CommAction, ParseError> {
    let dir = if c.eat_punct("!") {
        CommDir::Send
    } else if c.eat_punct("?") {
        CommDir::Recv
    } else {
        return Err(c.err("expected `!` or `?`"));
    };
    c.expect_punct("(")?;
    let a = c.expect_ident()?;
    c.expect_punct(",")?;
    let b = c.expect_ident()?;
    c.expect_punct(",")?;
    let payload = if matches!(c.peek(), Some(Tok::Punct("["))) {
        Payload::Lit(parse_message(c)?)
    } else if matches!(c.peek(), Some(Tok::Sym(_))) {
        // Bare symbol shorthand for a one-part literal.
        match c.next().cloned() {
            Some(Tok::Sym(s)) => Payload::Lit(Message::of(vec![Scalar::Sym(s)])),
            _ => unreachable!(),
        }
    } else {
        Payload::Var(c.expect_ident()?)
    };
    c.expect_punct(")")?;
    // In `?(src, dst, x)` the first name is the source: the channel is
    // src->dst regardless of direction.
    Ok(CommAction {
        dir,
        channel: ChannelId::new(a, b),
        payload,
    })
}

fn parse_label(c: &mut Cursor<'_>) -> Result<(Guard, Label), ParseError> {
    // Split on the first top-level `:`; left is the guard, right the action.
    let mut depth = 0usize;
    let mut split = None;
    for (i, t) in c.toks[c.pos..].iter().enumerate() {
        match t {
            Tok::Punct("(") | Tok::Punct("[") => depth += 1,
            Tok::Punct(")") | Tok::Punct("]") => depth = depth.saturating_sub(1),
            Tok::Punct(":") if depth == 0 => {
                split = Some(c.pos + i);
                break;
            }
            _ => {}
        }
    }
    let (guard_toks, action_toks) = match split {
        Some(s) => (&c.toks[c.pos..s], &c.toks[s + 1..]),
        None => (&c.toks[c.pos..], &c.toks[c.toks.len()..]),
    };
    let guard = if guard_toks.is_empty() {
        Guard::True
    } else {
        let mut gc = Cursor::new(guard_toks, c.line);
        // A leading `!`/`?` with no separate action means the guard slot
        // actually holds a communication.
        if matches!(gc.peek(), Some(Tok::Punct("!")) | Some(Tok::Punct("?"))) {
            let comm = parse_comm(&mut gc)?;
            if !gc.at_end() {
                return Err(gc.err("unexpected trailing tokens"));
            }
            if split.is_some() && !action_toks.is_empty() {
                return Err(c.err("a communication label cannot be followed by an action"));
            }
            c.pos = c.toks.len();
            return Ok((Guard::True, Label::Comm(comm)));
        }
        let g = parse_guard(&mut gc)?;
        if !gc.at_end() {
            return Err(gc.err("unexpected trailing tokens in guard"));
        }
        g
    };
    let label = if action_toks.is_empty() {
        Label::Internal(Action::Nop)
    } else {
        let mut ac = Cursor::new(action_toks, c.line);
        let l = if matches!(ac.peek(), Some(Tok::Punct("!")) | Some(Tok::Punct("?"))) {
            Label::Comm(parse_comm(&mut ac)?)
        } else {
            Label::Internal(parse_action(&mut ac)?)
        };
        if !ac.at_end() {
            return Err(ac.err("unexpected trailing tokens in action"));
        }
        l
    };
    c.pos = c.toks.len();
    Ok((guard, label))
}

fn parse_domain(c: &mut Cursor<'_>) -> Result<Domain, ParseError> {
    if c.eat_ident("any") {
        return Ok(Domain::Any);
    }
    if c.eat_ident("bool") {
        return Ok(Domain::Bool);
    }
    if c.eat_ident("int") {
        let lo = c.expect_int()?;
        c.expect_punct("..")?;
        let hi = c.expect_int()?;
        return Ok(Domain::IntRange(lo, hi));
    }
    if c.eat_ident("syms") {
        c.expect_punct("{")?;
        let mut syms = vec![c.expect_ident()?];
        while c.eat_punct(",") {
            syms.push(c.expect_ident()?);
        }
        c.expect_punct("}")?;
        return Ok(Domain::Syms(syms));
    }
    Err(c.err("expected a domain (any, bool, int lo..hi, syms {..})"))
}

/// Parses a whole channel-system description.
pub fn parse_system(input: &str) -> Result<ChannelSystem, ParseError> {
    let mut builder = ChannelSystemBuilder::new();
    let mut current: Option<PgBuilder> = None;
    let mut tick: Option<(String, String)> = None;

    let finish =
        |b: Option<PgBuilder>, builder: &mut ChannelSystemBuilder, line: usize| -> Result<(), ParseError> {
            if let Some(b) = b {
                let pg = b.build().map_err(|e| ParseError::new(line, 1, e.to_string()))?;
                builder.process(pg).map_err(|e| ParseError::new(line, 1, e.to_string()))?;
            }
            Ok(())
        };

    for (ln, raw) in input.lines().enumerate() {
        let line_no = ln + 1;
        let toks = lex(raw, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor::new(&toks, line_no);
        let map_err = |e: crate::error::ModelError, c: &Cursor<'_>| ParseError::new(c.line, 1, e.to_string());
        if c.eat_ident("shared") {
            let name = c.expect_ident()?;
            c.expect_punct(":")?;
            let domain = parse_domain(&mut c)?;
            c.expect_punct("=")?;
            let init = parse_message(&mut c)?;
            builder
                .shared_var(name, domain, init)
                .map_err(|e| map_err(e, &c))?;
        } else if c.eat_ident("channel") {
            let src = c.expect_ident()?;
            c.expect_punct("->")?;
            let dst = c.expect_ident()?;
            if !c.eat_ident("cap") {
                return Err(c.err("expected `cap`"));
            }
            let cap = c.expect_int()?;
            if !(0..=1).contains(&cap) {
                return Err(c.err("capacity must be 0 or 1"));
            }
            builder
                .channel(src, dst, cap as u8)
                .map_err(|e| map_err(e, &c))?;
        } else if c.eat_ident("tick") {
            let src = c.expect_ident()?;
            c.expect_punct("->")?;
            let dst = c.expect_ident()?;
            tick = Some((src, dst));
        } else if c.eat_ident("process") {
            finish(current.take(), &mut builder, line_no)?;
            current = Some(PgBuilder::new(c.expect_ident()?));
        } else if c.eat_ident("init") {
            let pg = current
                .as_mut()
                .ok_or_else(|| c.err("`init` outside a process"))?;
            let name = c.expect_ident()?;
            pg.initial(&name);
        } else if c.eat_ident("var") {
            let pg = current
                .as_mut()
                .ok_or_else(|| c.err("`var` outside a process"))?;
            let name = c.expect_ident()?;
            c.expect_punct(":")?;
            let domain = parse_domain(&mut c)?;
            c.expect_punct("=")?;
            let init = parse_message(&mut c)?;
            pg.var(name, domain, init).map_err(|e| map_err(e, &c))?;
        } else {
            // Transition: from --[ label ]--> to
            let pg = current
                .as_mut()
                .ok_or_else(|| c.err("transition outside a process"))?;
            let from = c.expect_ident()?;
            c.expect_punct("-")?;
            c.expect_punct("-")?;
            c.expect_punct("[")?;
            // Collect the label tokens up to the matching `]-->`.
            let mut depth = 0usize;
            let start = c.pos;
            let mut end = None;
            let mut i = c.pos;
            while i < c.toks.len() {
                match &c.toks[i] {
                    Tok::Punct("[") | Tok::Punct("(") => depth += 1,
                    Tok::Punct("]") if depth == 0 => {
                        end = Some(i);
                        break;
                    }
                    Tok::Punct("]") | Tok::Punct(")") => depth -= 1,
                    _ => {}
                }
                i += 1;
            }
            let end = end.ok_or_else(|| c.err("unterminated transition label"))?;
            let label_toks = &c.toks[start..end];
            let mut lc = Cursor::new(label_toks, line_no);
            let (guard, label) = parse_label(&mut lc)?;
            c.pos = end + 1;
            c.expect_punct("-")?;
            c.expect_punct("->")?;
            let to = c.expect_ident()?;
            pg.transition(&from, guard, label, &to);
        }
        if !c.at_end() {
            return Err(c.err("unexpected trailing tokens"));
        }
    }
    finish(current.take(), &mut builder, input.lines().count())?;
    if let Some((src, dst)) = tick {
        builder.tick_channel(src, dst);
    }
    builder.build().map_err(|e| ParseError::new(0, 0, e.to_string()))
}

fn fmt_domain(d: &Domain) -> String {
    match d {
        Domain::Any => "any".into(),
        Domain::Bool => "bool".into(),
        Domain::IntRange(lo, hi) => format!("int {lo}..{hi}"),
        Domain::Syms(s) => format!("syms {{{}}}", s.join(", ")),
    }
}

/// Prints a channel system in the text format. Native actions are printed as
/// `native <name>` and will not re-parse.
pub fn print_system(cs: &ChannelSystem) -> String {
    let mut out = String::new();
    for v in &cs.shared_vars {
        let _ = writeln!(out, "shared {} : {} = {}", v.name, fmt_domain(&v.domain), v.init);
    }
    for ch in &cs.channels {
        let _ = writeln!(
            out,
            "channel {} -> {} cap {}",
            ch.id.source, ch.id.dest, ch.capacity
        );
    }
    if let Some(ti) = cs.tick_channel {
        let ch = &cs.channels[ti];
        let _ = writeln!(out, "tick {} -> {}", ch.id.source, ch.id.dest);
    }
    for pg in &cs.processes {
        let _ = writeln!(out);
        out.push_str(&print_process(pg));
    }
    out
}

/// Prints a single process block.
pub fn print_process(pg: &crate::model::pg::ProgramGraph) -> String {
    let mut out = String::new();
    {
        let _ = writeln!(out, "process {}", pg.name);
        let _ = writeln!(out, "  init {}", pg.locations[pg.initial_location]);
        for v in &pg.vars {
            // Strip the qualification prefix for printing.
            let name = v
                .name
                .strip_prefix(&format!("{}.", pg.name))
                .unwrap_or(&v.name);
            let _ = writeln!(out, "  var {} : {} = {}", name, fmt_domain(&v.domain), v.init);
        }
        for t in &pg.transitions {
            let guard = match &t.guard {
                Guard::True => String::new(),
                g => strip_prefix_all(&format!("{g} "), pg),
            };
            let label = match &t.label {
                Label::Internal(Action::Nop) => ": skip".to_string(),
                Label::Internal(a) => format!(": {}", strip_prefix_all(&a.to_string(), pg)),
                Label::Comm(cm) => {
                    let s = strip_prefix_all(&cm.to_string(), pg);
                    if guard.is_empty() {
                        s
                    } else {
                        format!(": {s}")
                    }
                }
            };
            let _ = writeln!(
                out,
                "  {} --[ {}{} ]--> {}",
                pg.locations[t.from], guard, label, pg.locations[t.to]
            );
        }
    }
    out
}

/// Printing uses unqualified local names so the output re-parses.
fn strip_prefix_all(s: &str, pg: &crate::model::pg::ProgramGraph) -> String {
    let prefix = format!("{}.", pg.name);
    s.replace(&prefix, "")
}
