//! Assertion syntax, matching [`Assertion::render`].

use ratm_core::program::Program;
use ratm_core::taro::{status_from_name, Assertion, Domain, Term};
use ratm_core::{Loc, ThreadId};

use super::cursor::Cursor;
use super::lexer::Tok;
use super::program::cmp_op;
use super::ParseError;

struct Parser<'c, 'a, 'p> {
    cur: &'c mut Cursor<'a>,
    prog: &'p Program,
    /// Quantified variables in scope, innermost last.
    bound: Vec<String>,
}

pub(super) fn parse(cur: &mut Cursor, prog: &Program) -> Result<Assertion, ParseError> {
    Parser { cur, prog, bound: Vec::new() }.assertion()
}

impl Parser<'_, '_, '_> {
    fn assertion(&mut self) -> Result<Assertion, ParseError> {
        if self.cur.check_kw("forall") || self.cur.check_kw("exists") {
            return self.quantifier();
        }
        let lhs = self.disjunction()?;
        if self.cur.eat(&Tok::Implies) {
            return Ok(Assertion::implies(lhs, self.assertion()?));
        }
        Ok(lhs)
    }

    fn quantifier(&mut self) -> Result<Assertion, ParseError> {
        let universal = self.cur.eat_kw("forall");
        if !universal {
            self.cur.expect_kw("exists")?;
        }
        let (var, pos) = self.cur.ident("a variable")?;
        if self.prog.reg_index(&var).is_some() {
            return Err(ParseError::new(pos, format!("`{var}` shadows a register")));
        }
        self.cur.expect_kw("in")?;
        let domain = if self.cur.eat_kw("dom") {
            self.cur.expect(&Tok::LParen)?;
            self.cur.expect_kw("M")?;
            self.cur.expect(&Tok::RParen)?;
            Domain::Memories
        } else {
            Domain::Values(self.cur.value_set()?)
        };
        self.cur.expect(&Tok::Colon)?;
        self.bound.push(var.clone());
        let body = Box::new(self.assertion()?);
        self.bound.pop();
        Ok(if universal { Assertion::Forall { var, domain, body } } else { Assertion::Exists { var, domain, body } })
    }

    fn disjunction(&mut self) -> Result<Assertion, ParseError> {
        let lhs = self.conjunction()?;
        if self.cur.eat(&Tok::OrOr) {
            return Ok(Assertion::or(lhs, self.disjunction()?));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Assertion, ParseError> {
        let lhs = self.unary()?;
        if self.cur.eat(&Tok::AndAnd) {
            return Ok(Assertion::and(lhs, self.conjunction()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Assertion, ParseError> {
        if self.cur.eat(&Tok::Bang) {
            return Ok(Assertion::negate(self.unary()?));
        }
        self.atom()
    }

    fn thread(&mut self) -> Result<ThreadId, ParseError> {
        self.cur.expect(&Tok::At)?;
        let (name, pos) = self.cur.ident("a thread name")?;
        self.prog.thread_index(&name).ok_or_else(|| ParseError::new(pos, format!("unknown thread `{name}`")))
    }

    /// A location name, transactional when followed by `^`.
    fn location(&mut self) -> Result<(Loc, bool), ParseError> {
        let (name, pos) = self.cur.ident("a location")?;
        if self.cur.eat(&Tok::Caret) {
            let x = self
                .prog
                .tx_loc_index(&name)
                .ok_or_else(|| ParseError::new(pos, format!("unknown transactional location `{name}`")))?;
            Ok((x, true))
        } else {
            let x =
                self.prog.loc_index(&name).ok_or_else(|| ParseError::new(pos, format!("unknown location `{name}`")))?;
            Ok((x, false))
        }
    }

    fn expect_location(&mut self, transactional: bool) -> Result<Loc, ParseError> {
        let pos = self.cur.pos();
        let (x, tx) = self.location()?;
        match (tx, transactional) {
            (true, false) => Err(ParseError::new(pos, "expected a client location, without `^`")),
            (false, true) => Err(ParseError::new(pos, "expected a transactional location, marked `^`")),
            _ => Ok(x),
        }
    }

    fn atom(&mut self) -> Result<Assertion, ParseError> {
        let pos = self.cur.pos();
        match self.cur.peek() {
            Some(Tok::LBracket) => return self.view_atom(),
            Some(Tok::Lt) => return self.conditional(),
            Some(Tok::LParen) => {
                if matches!(self.cur.peek_at(1), Some(Tok::Ident(_)))
                    && self.cur.peek_at(2) == Some(&Tok::Caret)
                    && self.cur.peek_at(3) == Some(&Tok::Comma)
                {
                    return self.set_membership();
                }
                self.cur.bump();
                let inner = self.assertion()?;
                self.cur.expect(&Tok::RParen)?;
                return Ok(inner);
            }
            _ => {}
        }
        if let Some(Tok::Ident(word)) = self.cur.peek() {
            let keyword = match word.as_str() {
                "true" | "false" | "Rel" | "Acq" | "status" | "beginIdx" | "NW" | "WS" => true,
                // `M` alone is the snapshot sequence; `|M|` is handled by terms.
                "M" => self.cur.peek_at(1) == Some(&Tok::LBracket),
                _ => false,
            };
            if keyword && !self.bound.contains(word) {
                let word = word.clone();
                self.cur.bump();
                return self.keyword_atom(&word, pos);
            }
        }
        let lhs = self.term()?;
        if let Some(op) = cmp_op(self.cur.peek()) {
            self.cur.bump();
            return Ok(Assertion::Cmp(op, lhs, self.term()?));
        }
        if self.cur.eat_kw("in") {
            return Ok(Assertion::In(lhs, self.cur.value_set()?));
        }
        if self.cur.eat_kw("notin") {
            return Ok(Assertion::negate(Assertion::In(lhs, self.cur.value_set()?)));
        }
        Err(self.cur.unexpected("a comparison"))
    }

    fn keyword_atom(&mut self, word: &str, pos: super::Pos) -> Result<Assertion, ParseError> {
        Ok(match word {
            "true" => Assertion::Const(true),
            "false" => Assertion::Const(false),
            "Rel" => Assertion::Rel(self.thread()?),
            "Acq" => Assertion::Acq(self.thread()?),
            "status" => {
                let thread = self.thread()?;
                let negated = if self.cur.eat(&Tok::Ne) {
                    true
                } else {
                    self.cur.expect(&Tok::Eq)?;
                    false
                };
                let (name, name_pos) = self.cur.ident("a transaction status")?;
                let status = status_from_name(&name).ok_or_else(|| {
                    ParseError::new(
                        name_pos,
                        format!("unknown status `{name}`; expected NOTSTARTED, READY, COMMITTED or ABORTED"),
                    )
                })?;
                let a = Assertion::StatusIs { thread, status };
                if negated {
                    Assertion::negate(a)
                } else {
                    a
                }
            }
            "beginIdx" => {
                let thread = self.thread()?;
                self.cur.expect(&Tok::Eq)?;
                Assertion::BeginIndex { thread, index: self.term()? }
            }
            "NW" => {
                self.cur.expect(&Tok::LBracket)?;
                let loc = self.expect_location(true)?;
                self.cur.expect(&Tok::Comma)?;
                let val = self.term()?;
                self.cur.expect(&Tok::RBracket)?;
                Assertion::NeverWritten { loc, val }
            }
            "M" => {
                self.cur.expect(&Tok::LBracket)?;
                let loc = self.expect_location(true)?;
                self.cur.expect(&Tok::Eq)?;
                let val = self.term()?;
                self.cur.expect(&Tok::RBracket)?;
                self.cur.expect(&Tok::At)?;
                let index = if self.cur.eat(&Tok::LParen) {
                    let t = self.term()?;
                    self.cur.expect(&Tok::RParen)?;
                    t
                } else {
                    self.term_atom()?
                };
                Assertion::MemValue { index, loc, val }
            }
            "WS" => {
                let thread = self.thread()?;
                self.cur.expect(&Tok::Eq)?;
                self.cur.expect(&Tok::LBrace)?;
                let mut entries = Vec::new();
                if !self.cur.eat(&Tok::RBrace) {
                    loop {
                        self.cur.expect(&Tok::LParen)?;
                        let x = self.expect_location(true)?;
                        self.cur.expect(&Tok::Comma)?;
                        entries.push((x, self.term()?));
                        self.cur.expect(&Tok::RParen)?;
                        if self.cur.eat(&Tok::RBrace) {
                            break;
                        }
                        self.cur.expect(&Tok::Comma)?;
                    }
                }
                Assertion::WriteSetIs { thread, entries }
            }
            _ => return Err(ParseError::new(pos, format!("unexpected `{word}`"))),
        })
    }

    /// `(x^, v) in WS@t`, `(x^, _) notin RS@t` and so on.
    fn set_membership(&mut self) -> Result<Assertion, ParseError> {
        self.cur.expect(&Tok::LParen)?;
        let loc = self.expect_location(true)?;
        self.cur.expect(&Tok::Comma)?;
        let val = if self.cur.check_kw("_") {
            self.cur.bump();
            None
        } else {
            Some(self.term()?)
        };
        self.cur.expect(&Tok::RParen)?;
        let negated = if self.cur.eat_kw("notin") {
            true
        } else {
            self.cur.expect_kw("in")?;
            false
        };
        let pos = self.cur.pos();
        let (set, _) = self.cur.ident("`WS` or `RS`")?;
        let thread = self.thread()?;
        let a = match set.as_str() {
            "WS" => Assertion::InWriteSet { thread, loc, val },
            "RS" => Assertion::InReadSet { thread, loc, val },
            _ => return Err(ParseError::new(pos, "expected `WS` or `RS`")),
        };
        Ok(if negated { Assertion::negate(a) } else { a })
    }

    /// `[x = v]@t`, `[x ~ v]@t`, `[x !~ v]@t`, `[x S= v]@t` and their
    /// transactional forms over `x^`.
    fn view_atom(&mut self) -> Result<Assertion, ParseError> {
        self.cur.expect(&Tok::LBracket)?;
        let (loc, tx) = self.location()?;
        enum Op {
            Definite,
            Possible,
            Impossible,
            CommitView,
        }
        let op_pos = self.cur.pos();
        let op = match self.cur.bump() {
            Some(Tok::Eq) => Op::Definite,
            Some(Tok::Tilde) => Op::Possible,
            Some(Tok::NotTilde) => Op::Impossible,
            Some(Tok::Ident(s)) if s == "S" => {
                self.cur.expect(&Tok::Eq)?;
                Op::CommitView
            }
            _ => {
                return Err(ParseError::new(op_pos, "expected `=`, `~`, `!~` or `S=`"));
            }
        };
        let val = self.term()?;
        self.cur.expect(&Tok::RBracket)?;
        let thread = self.thread()?;
        Ok(match (op, tx) {
            (Op::Definite, false) => Assertion::Definite { thread, loc, val },
            (Op::Definite, true) => Assertion::TxDefinite { thread, loc, val },
            (Op::Possible, false) => Assertion::Possible { thread, loc, val },
            (Op::Possible, true) => Assertion::TxPossible { thread, loc, val },
            (Op::Impossible, false) => Assertion::negate(Assertion::Possible { thread, loc, val }),
            (Op::Impossible, true) => Assertion::negate(Assertion::TxPossible { thread, loc, val }),
            (Op::CommitView, false) => Assertion::CommitView { thread, loc, val },
            (Op::CommitView, true) => {
                return Err(ParseError::new(op_pos, "`S=` applies to client locations"));
            }
        })
    }

    /// `<y = u>[x = v]@t`, with `y^` for the transactional form.
    fn conditional(&mut self) -> Result<Assertion, ParseError> {
        self.cur.expect(&Tok::Lt)?;
        let (guard_loc, tx) = self.location()?;
        self.cur.expect(&Tok::Eq)?;
        let guard_val = self.term()?;
        self.cur.expect(&Tok::Gt)?;
        self.cur.expect(&Tok::LBracket)?;
        let loc = self.expect_location(false)?;
        self.cur.expect(&Tok::Eq)?;
        let val = self.term()?;
        self.cur.expect(&Tok::RBracket)?;
        let thread = self.thread()?;
        Ok(if tx {
            Assertion::TxConditional { thread, guard_loc, guard_val, loc, val }
        } else {
            Assertion::Conditional { thread, guard_loc, guard_val, loc, val }
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.term_atom()?;
        loop {
            let sign = if self.cur.eat(&Tok::Plus) {
                1
            } else if self.cur.eat(&Tok::Minus) {
                -1
            } else {
                return Ok(acc);
            };
            let k = self.cur.int()?;
            acc = Term::Offset(Box::new(acc), sign * k);
        }
    }

    fn term_atom(&mut self) -> Result<Term, ParseError> {
        match self.cur.peek() {
            Some(Tok::Int(_) | Tok::Minus) => Ok(Term::Const(self.cur.int()?)),
            Some(Tok::Bar) => {
                self.cur.bump();
                self.cur.expect_kw("M")?;
                self.cur.expect(&Tok::Bar)?;
                Ok(Term::MemCount)
            }
            Some(Tok::Ident(_)) => {
                let (name, pos) = self.cur.ident("a term")?;
                if self.bound.contains(&name) {
                    Ok(Term::Var(name))
                } else if let Some(r) = self.prog.reg_index(&name) {
                    Ok(Term::Reg(r))
                } else {
                    Err(ParseError::new(pos, format!("unknown register or variable `{name}`")))
                }
            }
            _ => Err(self.cur.unexpected("a term")),
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use ratm_core::corpus::builtin;
    use ratm_core::program::CmpOp;
    use ratm_core::tms2ra::TxnStatus;

    use super::*;
    use crate::dsl::parse_assertion;

    fn chain() -> Program {
        builtin("tx-chain").unwrap()
    }

    #[test]
    fn sugar_expands_to_negations() {
        let p = chain();
        let a = parse_assertion("[f^ !~ 1]@t2 && (f^, _) notin RS@t3 && status@t1 != READY", &p).unwrap();
        let expected = Assertion::all([
            Assertion::negate(Assertion::TxPossible { thread: 1, loc: 0, val: Term::Const(1) }),
            Assertion::negate(Assertion::InReadSet { thread: 2, loc: 0, val: None }),
            Assertion::negate(Assertion::StatusIs { thread: 0, status: TxnStatus::Ready }),
        ]);
        assert_eq!(a, expected);
    }

    #[test]
    fn implication_binds_loosest_and_nests_right() {
        let p = chain();
        let a = parse_assertion("r3 = 2 => s1 = 5 && s2 = 10 => true", &p).unwrap();
        let Assertion::Implies(_, rhs) = a else { panic!() };
        assert!(matches!(*rhs, Assertion::Implies(..)));
    }

    #[test]
    fn quantified_variables_shadow_nothing_and_scope_ends() {
        let p = chain();
        assert!(parse_assertion("forall i in dom(M): M[f^ = 0]@i", &p).is_ok());
        assert!(parse_assertion("(forall i in dom(M): true) && i = 0", &p).is_err());
        assert!(parse_assertion("forall r2 in {0}: true", &p).is_err());
    }

    #[test]
    fn location_kinds_are_checked() {
        let p = chain();
        assert!(parse_assertion("[d1^ = 0]@t1", &p).is_err());
        assert!(parse_assertion("NW[d1, 0]", &p).is_err());
        assert!(parse_assertion("[f^ S= 0]@t1", &p).is_err());
        let err = parse_assertion("[d1 = 0]@t9", &p).unwrap_err();
        assert!(err.message.contains("t9"));
    }

    fn term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            (-5i64..6).prop_map(Term::Const),
            (0usize..4).prop_map(Term::Reg),
            Just(Term::MemCount),
            Just(Term::Var("i".into())),
        ];
        leaf.prop_recursive(2, 4, 1, |inner| (inner, -3i64..4).prop_map(|(t, k)| Term::Offset(Box::new(t), k)))
    }

    fn status() -> impl Strategy<Value = TxnStatus> {
        prop_oneof![
            Just(TxnStatus::NotStarted),
            Just(TxnStatus::Ready),
            Just(TxnStatus::Committed),
            Just(TxnStatus::Aborted),
        ]
    }

    fn op() -> impl Strategy<Value = CmpOp> {
        prop_oneof![
            Just(CmpOp::Eq),
            Just(CmpOp::Ne),
            Just(CmpOp::Lt),
            Just(CmpOp::Le),
            Just(CmpOp::Gt),
            Just(CmpOp::Ge),
        ]
    }

    fn atom() -> impl Strategy<Value = Assertion> {
        let (t, x, y) = (0usize..3, 0usize..2, 0usize..1);
        prop_oneof![
            any::<bool>().prop_map(Assertion::Const),
            (t.clone(), x.clone(), term()).prop_map(|(thread, loc, val)| Assertion::Definite { thread, loc, val }),
            (t.clone(), x.clone(), term()).prop_map(|(thread, loc, val)| Assertion::Possible { thread, loc, val }),
            (t.clone(), x.clone(), term(), x.clone(), term()).prop_map(|(thread, guard_loc, guard_val, loc, val)| {
                Assertion::Conditional { thread, guard_loc, guard_val, loc, val }
            }),
            (t.clone(), y.clone(), term()).prop_map(|(thread, loc, val)| Assertion::TxDefinite { thread, loc, val }),
            (t.clone(), y.clone(), term()).prop_map(|(thread, loc, val)| Assertion::TxPossible { thread, loc, val }),
            (t.clone(), y.clone(), term(), x.clone(), term()).prop_map(|(thread, guard_loc, guard_val, loc, val)| {
                Assertion::TxConditional { thread, guard_loc, guard_val, loc, val }
            }),
            (t.clone(), x.clone(), term()).prop_map(|(thread, loc, val)| Assertion::CommitView { thread, loc, val }),
            (t.clone(), y.clone(), proptest::option::of(term())).prop_map(|(thread, loc, val)| Assertion::InWriteSet {
                thread,
                loc,
                val
            }),
            (t.clone(), y.clone(), proptest::option::of(term())).prop_map(|(thread, loc, val)| Assertion::InReadSet {
                thread,
                loc,
                val
            }),
            (t.clone(), proptest::collection::vec((y.clone(), term()), 0..3))
                .prop_map(|(thread, entries)| Assertion::WriteSetIs { thread, entries }),
            t.clone().prop_map(Assertion::Rel),
            t.clone().prop_map(Assertion::Acq),
            (term(), y.clone(), term()).prop_map(|(index, loc, val)| Assertion::MemValue { index, loc, val }),
            (y, term()).prop_map(|(loc, val)| Assertion::NeverWritten { loc, val }),
            (t.clone(), status()).prop_map(|(thread, status)| Assertion::StatusIs { thread, status }),
            (t, term()).prop_map(|(thread, index)| Assertion::BeginIndex { thread, index }),
            (op(), term(), term()).prop_map(|(o, l, r)| Assertion::Cmp(o, l, r)),
            (term(), proptest::collection::vec(-3i64..4, 0..3)).prop_map(|(t, vs)| Assertion::In(t, vs)),
        ]
    }

    fn assertion() -> impl Strategy<Value = Assertion> {
        atom().prop_recursive(4, 24, 2, |inner| {
            let domain = prop_oneof![
                Just(Domain::Memories),
                proptest::collection::vec(-2i64..3, 0..3).prop_map(Domain::Values),
            ];
            prop_oneof![
                inner.clone().prop_map(Assertion::negate),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Assertion::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Assertion::Or(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Assertion::Implies(Box::new(a), Box::new(b))),
                (domain.clone(), inner.clone()).prop_map(|(domain, body)| Assertion::Forall {
                    var: "i".into(),
                    domain,
                    body: Box::new(body),
                }),
                (domain, inner).prop_map(|(domain, body)| Assertion::Exists {
                    var: "i".into(),
                    domain,
                    body: Box::new(body),
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn rendering_parses_back(body in assertion()) {
            let p = chain();
            // `i` is bound at the top so any occurrence parses.
            let a = Assertion::Forall { var: "i".into(), domain: Domain::Memories, body: Box::new(body) };
            let text = a.render(&p);
            let back = parse_assertion(&text, &p).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(back, a, "{}", text);
        }
    }
}
