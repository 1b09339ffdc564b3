use std::collections::BTreeSet;
use std::ops::Range;

use ratm_core::outline::ProofOutline;
use ratm_core::program::{
    lower, AtomicCommand, BoolExpr, CmpOp, Expr, Postcondition, Program, ProgramError, Quantifier, Stmt, ThreadCode,
};
use ratm_core::taro::Assertion;
use ratm_core::tms2ra::SyncFlag;
use ratm_core::{Reg, ThreadId};

use super::assertion;
use super::cursor::Cursor;
use super::lexer::Tok;
use super::{ParseError, Pos};

/// Names that cannot be used for locations or registers.
const RESERVED: &[&str] = &[
    "program",
    "locations",
    "txlocations",
    "thread",
    "initially",
    "finally",
    "forall",
    "exists",
    "if",
    "else",
    "do",
    "until",
    "TxBegin",
    "TxRead",
    "TxWrite",
    "TxEnd",
    "CAS",
    "true",
    "false",
    "defined",
    "in",
    "notin",
    "WS",
    "RS",
    "Rel",
    "Acq",
    "M",
    "NW",
    "status",
    "beginIdx",
    "dom",
];

/// Resolves a register name at a position.
pub(super) type RegLookup<'r> = dyn FnMut(&str, Pos) -> Result<Reg, ParseError> + 'r;

/// Prefix of the marks standing in for assertion blocks. Not a valid
/// identifier, so user labels cannot collide with it.
const BLOCK_MARK: &str = "#block";

struct PendingBlock {
    thread: ThreadId,
    mark: String,
    range: Range<usize>,
    pos: Pos,
}

#[derive(Default)]
struct Builder {
    name: Option<String>,
    locations: Vec<String>,
    tx_locations: Vec<String>,
    registers: Vec<(String, ThreadId)>,
    threads: Vec<(ThreadCode, Pos)>,
    /// Name of the thread being parsed.
    current: Option<String>,
    labels: BTreeSet<String>,
    blocks: Vec<PendingBlock>,
}

impl Builder {
    fn declare(&mut self, name: &str, pos: Pos) -> Result<(), ParseError> {
        if RESERVED.contains(&name) {
            return Err(ParseError::new(pos, format!("`{name}` is a reserved word")));
        }
        if self.locations.iter().chain(&self.tx_locations).any(|l| l == name) {
            return Err(ParseError::new(pos, format!("location `{name}` is declared twice")));
        }
        Ok(())
    }

    fn thread_name(&self, t: ThreadId) -> &str {
        match self.threads.get(t) {
            Some((code, _)) => &code.name,
            None => self.current.as_deref().unwrap_or("?"),
        }
    }

    fn register(&mut self, name: &str, pos: Pos) -> Result<Reg, ParseError> {
        let thread = self.threads.len();
        if self.locations.iter().any(|l| l == name) {
            return Err(ParseError::new(pos, format!("`{name}` is a location, not a register")));
        }
        if self.tx_locations.iter().any(|l| l == name) {
            return Err(ParseError::new(pos, format!("`{name}` is a transactional location, not a register")));
        }
        if RESERVED.contains(&name) {
            return Err(ParseError::new(pos, format!("`{name}` is a reserved word")));
        }
        match self.registers.iter().position(|(n, _)| n == name) {
            Some(r) if self.registers[r].1 == thread => Ok(r),
            Some(r) => Err(ParseError::new(
                pos,
                format!("register `{name}` already belongs to thread `{}`", self.thread_name(self.registers[r].1)),
            )),
            None => {
                self.registers.push((name.to_string(), thread));
                Ok(self.registers.len() - 1)
            }
        }
    }

    fn location(&self, name: &str, pos: Pos) -> Result<usize, ParseError> {
        if let Some(x) = self.locations.iter().position(|l| l == name) {
            return Ok(x);
        }
        if self.tx_locations.iter().any(|l| l == name) {
            return Err(ParseError::new(pos, format!("`{name}` is transactional; access it with TxRead or TxWrite")));
        }
        Err(ParseError::new(pos, format!("undeclared location `{name}`")))
    }

    fn tx_location(&self, name: &str, pos: Pos) -> Result<usize, ParseError> {
        if let Some(x) = self.tx_locations.iter().position(|l| l == name) {
            return Ok(x);
        }
        if self.locations.iter().any(|l| l == name) {
            return Err(ParseError::new(pos, format!("`{name}` is not a transactional location")));
        }
        Err(ParseError::new(pos, format!("undeclared transactional location `{name}`")))
    }
}

pub(super) fn parse(toks: &[(Tok, Pos)]) -> Result<(Program, ProofOutline), ParseError> {
    let mut cur = Cursor::new(toks);
    let mut b = Builder::default();
    let mut initially: Option<Range<usize>> = None;
    let mut finally: Option<Range<usize>> = None;
    let mut post: Option<Range<usize>> = None;

    while !cur.at_end() {
        let pos = cur.pos();
        let (kw, _) = cur.ident("a section keyword")?;
        let late = !b.threads.is_empty();
        match kw.as_str() {
            "program" if b.name.is_none() && !late => b.name = Some(program_name(&mut cur)?),
            "locations" | "txlocations" if !late => loop {
                let (name, pos) = cur.ident("a location name")?;
                b.declare(&name, pos)?;
                if kw == "txlocations" {
                    b.tx_locations.push(name);
                } else {
                    b.locations.push(name);
                }
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            },
            "program" | "locations" | "txlocations" => {
                return Err(ParseError::new(pos, format!("`{kw}` must appear at most once, before any thread")));
            }
            "initially" | "finally" => {
                let slot = if kw == "initially" { &mut initially } else { &mut finally };
                if slot.is_some() {
                    return Err(ParseError::new(pos, format!("second `{kw}` block")));
                }
                *slot = Some(cur.skip_braces()?);
            }
            "thread" => {
                if post.is_some() {
                    return Err(ParseError::new(pos, "threads must precede the postcondition"));
                }
                thread(&mut cur, &mut b, pos)?;
            }
            "forall" | "exists" => {
                if post.is_some() {
                    return Err(ParseError::new(pos, "second postcondition"));
                }
                let start = cur.index() - 1;
                while !cur.at_end() && !["initially", "finally", "thread"].iter().any(|k| cur.check_kw(k)) {
                    cur.bump();
                }
                post = Some(start..cur.index());
            }
            other => return Err(ParseError::new(pos, format!("unknown section `{other}`"))),
        }
    }

    let mut threads = Vec::new();
    let mut thread_pos = Vec::new();
    for (code, pos) in b.threads {
        threads.push(code);
        thread_pos.push(pos);
    }
    let mut prog = Program {
        name: b.name.unwrap_or_else(|| "unnamed".into()),
        locations: b.locations,
        tx_locations: b.tx_locations,
        registers: b.registers,
        threads,
        postcondition: Postcondition { quantifier: Quantifier::Forall, predicate: BoolExpr::Const(true) },
    };
    if let Some(range) = post {
        let mut sub = Cursor::new(cur.slice(range));
        prog.postcondition = postcondition(&mut sub, &prog)?;
        sub.finish()?;
    }
    prog.validate().map_err(|e| {
        let pos =
            prog.threads.iter().position(|c| c.name == error_thread(&e)).map_or_else(Pos::default, |t| thread_pos[t]);
        ParseError::new(pos, e.to_string())
    })?;

    let mut outline = ProofOutline::trivial();
    let standalone = |range: Option<Range<usize>>| -> Result<Assertion, ParseError> {
        match range {
            Some(range) => block(cur.slice(range), &prog),
            None => Ok(Assertion::Const(true)),
        }
    };
    outline.initial = standalone(initially)?;
    outline.fin = standalone(finally)?;
    for pending in b.blocks {
        let code = &mut prog.threads[pending.thread];
        let Some(label) = code.marks.remove(&pending.mark) else {
            return Err(ParseError::new(pending.pos, "assertion block has no program point"));
        };
        let a = block(cur.slice(pending.range), &prog)?;
        outline.annotate(pending.thread, label, a);
    }
    Ok((prog, outline))
}

fn block(toks: &[(Tok, Pos)], prog: &Program) -> Result<Assertion, ParseError> {
    let mut sub = Cursor::new(toks);
    let a = assertion::parse(&mut sub, prog)?;
    sub.finish()?;
    Ok(a)
}

fn error_thread(e: &ProgramError) -> &str {
    match e {
        ProgramError::MissingLabel { thread, .. }
        | ProgramError::UnknownIndex { thread, .. }
        | ProgramError::ForeignRegister { thread, .. }
        | ProgramError::TransactionNesting { thread, .. }
        | ProgramError::UnreachableTerminal { thread } => thread,
    }
}

/// Hyphenated names such as `tx-mp` arrive as several tokens.
fn program_name(cur: &mut Cursor) -> Result<String, ParseError> {
    let (mut name, _) = cur.ident("a program name")?;
    while cur.eat(&Tok::Minus) {
        match cur.bump() {
            Some(Tok::Ident(s)) => name = format!("{name}-{s}"),
            Some(Tok::Int(v)) => name = format!("{name}-{v}"),
            _ => return Err(cur.error("expected a name part after `-`")),
        }
    }
    Ok(name)
}

fn thread(cur: &mut Cursor, b: &mut Builder, pos: Pos) -> Result<(), ParseError> {
    let (name, name_pos) = cur.ident("a thread name")?;
    if b.threads.iter().any(|(c, _)| c.name == name) {
        return Err(ParseError::new(name_pos, format!("thread `{name}` is defined twice")));
    }
    b.current = Some(name.clone());
    b.labels.clear();
    cur.expect(&Tok::LBrace)?;
    let body = stmts(cur, b)?;
    cur.expect(&Tok::RBrace)?;
    b.threads.push((lower(&name, &body), pos));
    b.current = None;
    Ok(())
}

fn stmts(cur: &mut Cursor, b: &mut Builder) -> Result<Vec<Stmt>, ParseError> {
    let mut out = Vec::new();
    while !cur.check(&Tok::RBrace) && !cur.at_end() {
        if cur.eat(&Tok::Semi) {
            continue;
        }
        out.push(stmt(cur, b)?);
    }
    Ok(out)
}

/// A block at the end of a branch would land on the join point, which the
/// other branch reaches too.
fn reject_trailing_block(body: &[Stmt], b: &Builder) -> Result<(), ParseError> {
    for s in body.iter().rev() {
        let Stmt::Mark(m) = s else { break };
        if let Some(p) = b.blocks.iter().find(|p| &p.mark == m) {
            return Err(ParseError::new(
                p.pos,
                "an assertion block cannot end a branch; move it after the conditional",
            ));
        }
    }
    Ok(())
}

fn branch(cur: &mut Cursor, b: &mut Builder) -> Result<Vec<Stmt>, ParseError> {
    cur.expect(&Tok::LBrace)?;
    let body = stmts(cur, b)?;
    cur.expect(&Tok::RBrace)?;
    reject_trailing_block(&body, b)?;
    Ok(body)
}

fn stmt(cur: &mut Cursor, b: &mut Builder) -> Result<Stmt, ParseError> {
    let pos = cur.pos();
    if cur.check(&Tok::LBrace) {
        let range = cur.skip_braces()?;
        let mark = format!("{BLOCK_MARK}{}", b.blocks.len());
        b.blocks.push(PendingBlock { thread: b.threads.len(), mark: mark.clone(), range, pos });
        return Ok(Stmt::Mark(mark));
    }
    let (word, _) = cur.ident("a statement")?;
    let stmt = match word.as_str() {
        "if" => {
            let cond = bool_expr(cur, &mut |n, p| b.register(n, p))?;
            let then = branch(cur, b)?;
            let els = if cur.eat_kw("else") {
                if cur.check_kw("if") {
                    vec![stmt(cur, b)?]
                } else {
                    branch(cur, b)?
                }
            } else {
                Vec::new()
            };
            Stmt::If { cond, then, els }
        }
        "do" => {
            cur.expect(&Tok::LBrace)?;
            let body = stmts(cur, b)?;
            cur.expect(&Tok::RBrace)?;
            cur.expect_kw("until")?;
            let cond = bool_expr(cur, &mut |n, p| b.register(n, p))?;
            Stmt::DoUntil { body, cond }
        }
        "TxBegin" => {
            let flag = match annotation(cur, &["RX", "R", "A", "RA"])?.as_deref() {
                None | Some("RX") => SyncFlag::Rx,
                Some("R") => SyncFlag::R,
                Some("A") => SyncFlag::A,
                _ => SyncFlag::Ra,
            };
            cur.expect(&Tok::LParen)?;
            cur.expect(&Tok::LBrace)?;
            let mut regs = BTreeSet::new();
            if !cur.eat(&Tok::RBrace) {
                loop {
                    let (n, p) = cur.ident("a register")?;
                    regs.insert(b.register(&n, p)?);
                    if cur.eat(&Tok::RBrace) {
                        break;
                    }
                    cur.expect(&Tok::Comma)?;
                }
            }
            cur.expect(&Tok::RParen)?;
            Stmt::Atomic(AtomicCommand::TxBegin { flag, regs })
        }
        "TxRead" => {
            cur.expect(&Tok::LParen)?;
            let (x, xp) = cur.ident("a transactional location")?;
            let loc = b.tx_location(&x, xp)?;
            cur.expect(&Tok::Comma)?;
            let (r, rp) = cur.ident("a register")?;
            let reg = b.register(&r, rp)?;
            cur.expect(&Tok::RParen)?;
            Stmt::Atomic(AtomicCommand::TxRead { loc, reg })
        }
        "TxWrite" => {
            cur.expect(&Tok::LParen)?;
            let (x, xp) = cur.ident("a transactional location")?;
            let loc = b.tx_location(&x, xp)?;
            cur.expect(&Tok::Comma)?;
            let expr = expr(cur, &mut |n, p| b.register(n, p))?;
            cur.expect(&Tok::RParen)?;
            Stmt::Atomic(AtomicCommand::TxWrite { loc, expr })
        }
        "TxEnd" => Stmt::Atomic(AtomicCommand::TxEnd),
        _ if cur.check(&Tok::Colon) && !RESERVED.contains(&word.as_str()) => {
            cur.bump();
            if !b.labels.insert(word.clone()) {
                return Err(ParseError::new(pos, format!("duplicate label `{word}`")));
            }
            Stmt::Mark(word)
        }
        _ if cur.check(&Tok::Assign) => {
            cur.bump();
            let ann = annotation(cur, &["RX", "R"])?;
            let value = expr(cur, &mut |n, p| b.register(n, p))?;
            if b.locations.contains(&word) {
                Stmt::Atomic(AtomicCommand::Store {
                    loc: b.location(&word, pos)?,
                    expr: value,
                    release: ann.as_deref() == Some("R"),
                })
            } else if b.tx_locations.contains(&word) {
                return Err(b.location(&word, pos).unwrap_err());
            } else {
                if ann.is_some() {
                    return Err(ParseError::new(pos, "register assignments take no annotation"));
                }
                let reg = b.register(&word, pos)?;
                Stmt::Atomic(AtomicCommand::Assign { reg, expr: value })
            }
        }
        _ if cur.check(&Tok::Arrow) => {
            cur.bump();
            let reg = b.register(&word, pos)?;
            if cur.check(&Tok::Caret) {
                let acquire = annotation(cur, &["RX", "A"])?.as_deref() == Some("A");
                let (x, xp) = cur.ident("a location")?;
                let loc = b.location(&x, xp)?;
                Stmt::Atomic(AtomicCommand::Load { reg, loc, acquire })
            } else if cur.eat_kw("CAS") {
                let ann = annotation(cur, &["RX", "R", "A", "RA"])?;
                let (release, acquire) = match ann.as_deref() {
                    Some("R") => (true, false),
                    Some("A") => (false, true),
                    Some("RA") => (true, true),
                    _ => (false, false),
                };
                cur.expect(&Tok::LParen)?;
                let (x, xp) = cur.ident("a location")?;
                let loc = b.location(&x, xp)?;
                cur.expect(&Tok::Comma)?;
                let expected = expr(cur, &mut |n, p| b.register(n, p))?;
                cur.expect(&Tok::Comma)?;
                let new = expr(cur, &mut |n, p| b.register(n, p))?;
                cur.expect(&Tok::RParen)?;
                Stmt::Atomic(AtomicCommand::Cas { reg, loc, expected, new, release, acquire })
            } else {
                let (x, xp) = cur.ident("a location")?;
                let loc = b.location(&x, xp)?;
                Stmt::Atomic(AtomicCommand::Load { reg, loc, acquire: false })
            }
        }
        _ => return Err(ParseError::new(pos, format!("expected a statement, found `{word}`"))),
    };
    Ok(stmt)
}

/// An optional `^NAME` from `allowed`.
fn annotation(cur: &mut Cursor, allowed: &[&str]) -> Result<Option<String>, ParseError> {
    if !cur.eat(&Tok::Caret) {
        return Ok(None);
    }
    let pos = cur.pos();
    match cur.peek() {
        Some(Tok::Ident(s)) if allowed.contains(&s.as_str()) => {
            cur.bump();
            Ok(Some(s.clone()))
        }
        Some(t) => Err(ParseError::new(
            pos,
            format!("invalid annotation {}; expected one of {}", t.describe(), allowed.join(", ")),
        )),
        None => Err(cur.unexpected("an annotation")),
    }
}

pub(super) fn postcondition(cur: &mut Cursor, prog: &Program) -> Result<Postcondition, ParseError> {
    let quantifier = if cur.eat_kw("exists") {
        Quantifier::Exists
    } else {
        cur.eat_kw("forall");
        Quantifier::Forall
    };
    let predicate = bool_expr(cur, &mut |name, pos| {
        prog.reg_index(name).ok_or_else(|| ParseError::new(pos, format!("unknown register `{name}`")))
    })?;
    Ok(Postcondition { quantifier, predicate })
}

pub(super) fn bool_expr(cur: &mut Cursor, regs: &mut RegLookup) -> Result<BoolExpr, ParseError> {
    let lhs = disjunction(cur, regs)?;
    if cur.eat(&Tok::Implies) {
        Ok(BoolExpr::implies(lhs, bool_expr(cur, regs)?))
    } else {
        Ok(lhs)
    }
}

fn disjunction(cur: &mut Cursor, regs: &mut RegLookup) -> Result<BoolExpr, ParseError> {
    let lhs = conjunction(cur, regs)?;
    if cur.eat(&Tok::OrOr) {
        Ok(BoolExpr::or(lhs, disjunction(cur, regs)?))
    } else {
        Ok(lhs)
    }
}

fn conjunction(cur: &mut Cursor, regs: &mut RegLookup) -> Result<BoolExpr, ParseError> {
    let lhs = negation(cur, regs)?;
    if cur.eat(&Tok::AndAnd) {
        Ok(BoolExpr::and(lhs, conjunction(cur, regs)?))
    } else {
        Ok(lhs)
    }
}

fn negation(cur: &mut Cursor, regs: &mut RegLookup) -> Result<BoolExpr, ParseError> {
    if cur.eat(&Tok::Bang) {
        return Ok(BoolExpr::negate(negation(cur, regs)?));
    }
    if cur.eat_kw("true") {
        return Ok(BoolExpr::Const(true));
    }
    if cur.eat_kw("false") {
        return Ok(BoolExpr::Const(false));
    }
    if cur.eat_kw("defined") {
        cur.expect(&Tok::LParen)?;
        let (n, p) = cur.ident("a register")?;
        let r = regs(&n, p)?;
        cur.expect(&Tok::RParen)?;
        return Ok(BoolExpr::Defined(r));
    }
    if cur.check(&Tok::LParen) {
        // Either a parenthesised predicate or a comparison whose left
        // operand is parenthesised.
        let start = cur.index();
        cur.bump();
        let grouped = bool_expr(cur, regs).and_then(|e| cur.expect(&Tok::RParen).map(|_| e));
        match grouped {
            Ok(e) if !starts_comparison_tail(cur) => return Ok(e),
            Ok(_) => cur.reset(start),
            Err(err) => {
                cur.reset(start);
                return comparison(cur, regs).map_err(|_| err);
            }
        }
    }
    comparison(cur, regs)
}

fn starts_comparison_tail(cur: &Cursor) -> bool {
    matches!(cur.peek(), Some(Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::Plus | Tok::Minus))
        || cur.check_kw("in")
        || cur.check_kw("notin")
}

pub(super) fn cmp_op(tok: Option<&Tok>) -> Option<CmpOp> {
    Some(match tok? {
        Tok::Eq => CmpOp::Eq,
        Tok::Ne => CmpOp::Ne,
        Tok::Lt => CmpOp::Lt,
        Tok::Le => CmpOp::Le,
        Tok::Gt => CmpOp::Gt,
        Tok::Ge => CmpOp::Ge,
        _ => return None,
    })
}

fn comparison(cur: &mut Cursor, regs: &mut RegLookup) -> Result<BoolExpr, ParseError> {
    let lhs = expr(cur, regs)?;
    if let Some(op) = cmp_op(cur.peek()) {
        cur.bump();
        return Ok(BoolExpr::Cmp(op, lhs, expr(cur, regs)?));
    }
    if cur.eat_kw("in") {
        return Ok(BoolExpr::In(lhs, cur.value_set()?));
    }
    if cur.eat_kw("notin") {
        return Ok(BoolExpr::negate(BoolExpr::In(lhs, cur.value_set()?)));
    }
    Err(cur.unexpected("a comparison"))
}

pub(super) fn expr(cur: &mut Cursor, regs: &mut RegLookup) -> Result<Expr, ParseError> {
    let mut acc = operand(cur, regs)?;
    loop {
        if cur.eat(&Tok::Plus) {
            acc = Expr::Add(Box::new(acc), Box::new(operand(cur, regs)?));
        } else if cur.eat(&Tok::Minus) {
            acc = Expr::Sub(Box::new(acc), Box::new(operand(cur, regs)?));
        } else {
            return Ok(acc);
        }
    }
}

fn operand(cur: &mut Cursor, regs: &mut RegLookup) -> Result<Expr, ParseError> {
    match cur.peek() {
        Some(Tok::Int(_) | Tok::Minus) => Ok(Expr::Const(cur.int()?)),
        Some(Tok::Ident(_)) => {
            let (n, p) = cur.ident("a register")?;
            Ok(Expr::Reg(regs(&n, p)?))
        }
        Some(Tok::LParen) => {
            cur.bump();
            let e = expr(cur, regs)?;
            cur.expect(&Tok::RParen)?;
            Ok(e)
        }
        _ => Err(cur.unexpected("an expression")),
    }
}

#[cfg(test)]
mod tests {
    use ratm_core::program::LabelledCommand;

    use super::*;
    use crate::dsl::{parse_outline, parse_program};

    fn err(src: &str) -> ParseError {
        parse_program(src).expect_err(src)
    }

    #[test]
    fn cas_flags_and_loads() {
        let p = parse_program("locations x\nthread t { a <- CAS^RA(x, 0, 1); b <-^A x; c <- x }").unwrap();
        let cmds: Vec<_> = p.threads[0].commands.iter().collect();
        assert!(matches!(cmds[0], LabelledCommand::Step(AtomicCommand::Cas { release: true, acquire: true, .. }, 1)));
        assert!(matches!(cmds[1], LabelledCommand::Step(AtomicCommand::Load { acquire: true, .. }, 2)));
        assert!(matches!(cmds[2], LabelledCommand::Step(AtomicCommand::Load { acquire: false, .. }, 3)));
        assert_eq!(p.registers, vec![("a".into(), 0), ("b".into(), 0), ("c".into(), 0)]);
    }

    #[test]
    fn names_are_resolved() {
        let e = err("locations x\nthread t { r <- y }");
        assert!(e.message.contains("undeclared location `y`"), "{e}");
        let e = err("txlocations f\nthread t { r <- f }");
        assert!(e.message.contains("TxRead"), "{e}");
        let e = err("locations x\nthread t1 { r := 1 }\nthread t2 { r := 2 }");
        assert_eq!((e.pos.line, e.pos.col), (3, 13));
        assert!(e.message.contains("belongs to thread `t1`"), "{e}");
        let e = err("locations x\nthread t { r := 1 }\nforall q = 1");
        assert!(e.message.contains("unknown register `q`"), "{e}");
        let e = err("locations x, x");
        assert!(e.message.contains("twice"), "{e}");
    }

    #[test]
    fn labels_must_be_unique() {
        let p = parse_program("locations x\nthread t { a: x := 1; b: x := 2 }").unwrap();
        assert_eq!(p.threads[0].marks.get("b"), Some(&1));
        let e = err("locations x\nthread t { a: x := 1\n a: x := 2 }");
        assert_eq!((e.pos.line, e.pos.col), (3, 2));
        assert!(e.message.contains("duplicate label"), "{e}");
    }

    #[test]
    fn transactional_begin_needs_a_register_set() {
        assert!(parse_program("txlocations f\nthread t { TxBegin^R; TxEnd }").is_err());
        assert!(parse_program("txlocations f\nthread t { TxBegin^Q({}); TxEnd }").is_err());
        let p = parse_program("txlocations f\nthread t { TxBegin({}); TxEnd }").unwrap();
        assert!(matches!(
            p.threads[0].commands[0],
            LabelledCommand::Step(AtomicCommand::TxBegin { flag: SyncFlag::Rx, .. }, 1)
        ));
    }

    #[test]
    fn blocks_attach_to_the_following_point() {
        let src = "locations x\nthread t {\n  { [x = 0]@t }\n  do {\n    r <- x\n    { true }\n  } until r = 1\n  { r = 1 }\n}";
        let (p, o) = parse_outline(src).unwrap();
        // Load, guard, terminal.
        assert_eq!(p.threads[0].terminal(), 2);
        let points: Vec<_> = o.annotations.keys().copied().collect();
        assert_eq!(points, vec![(0, 0), (0, 1), (0, 2)]);
        assert!(p.threads[0].marks.is_empty());
    }

    #[test]
    fn block_ending_a_branch_is_rejected() {
        let src = "locations x\nthread t {\n  if r = 1 {\n    x := 1\n    { true }\n  }\n}";
        let e = parse_outline(src).unwrap_err();
        assert_eq!((e.pos.line, e.pos.col), (5, 5));
    }

    #[test]
    fn block_errors_carry_their_own_position() {
        let src = "locations x\nthread t {\n  { [y = 0]@t }\n}";
        let e = parse_outline(src).unwrap_err();
        assert_eq!((e.pos.line, e.pos.col), (3, 6));
    }

    #[test]
    fn parenthesised_operands_and_predicates() {
        let p = parse_program("locations x\nthread t { r <- x }\nforall (r + 1) = 2 || (r = 0)").unwrap();
        let BoolExpr::Or(lhs, rhs) = &p.postcondition.predicate else { panic!() };
        assert!(matches!(**lhs, BoolExpr::Cmp(CmpOp::Eq, Expr::Add(..), _)));
        assert!(matches!(**rhs, BoolExpr::Cmp(CmpOp::Eq, Expr::Reg(0), Expr::Const(0))));
    }
}
