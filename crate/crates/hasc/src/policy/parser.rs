// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for `.hascpolicy` files.
//!
//! ```text
//! policy   := rule+
//! rule     := "rule" NAME ("block" | "warn") "{" "when" expr ";" "message" STRING ";" "}"
//! expr     := and ("or" and)*
//! and      := unary ("and" unary)*
//! unary    := "not" unary | cmp
//! cmp      := primary (CMPOP primary | "matches" STRING)?
//! primary  := STRING | NUMBER | "true" | "false" | "(" expr ")" | call | selector
//! call     := ("exists" | "count") "(" selector ")"
//!           | ("any" | "all") "(" selector "," NAME "->" expr ")"
//!           | ("semver" | "days_since") "(" expr ")"
//! selector := ("card" | "prev" | NAME) ("." NAME | "[" INT "]" | "[" NAME ("==" | "!=") expr "]")*
//! ```

use regex::Regex;

use super::ast::{CmpOp, Expr, Lit, Root, Rule, RuleSeverity, Selector, Step};
use super::lexer::{tokenize, Tok, Token};
use super::PolicyError;

const RESERVED: &[&str] = &[
    "rule",
    "block",
    "warn",
    "when",
    "message",
    "and",
    "or",
    "not",
    "matches",
    "true",
    "false",
    "card",
    "prev",
    "exists",
    "count",
    "any",
    "all",
    "semver",
    "days_since",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

pub(crate) fn parse_rules(src: &str) -> Result<Vec<Rule>, PolicyError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let mut rules = Vec::new();
    loop {
        if p.peek() == &Tok::Eof && !rules.is_empty() {
            return Ok(rules);
        }
        rules.push(p.rule()?);
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: impl Into<String>) -> Result<T, PolicyError> {
        let t = &self.toks[self.pos];
        Err(PolicyError::Parse {
            line: t.line,
            col: t.col,
            expected: expected.into(),
        })
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn word(&mut self, w: &str) -> Result<(), PolicyError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            self.fail(format!("`{w}`"))
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(t) if *t == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn sym(&mut self, s: &str) -> Result<(), PolicyError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.fail(format!("`{s}`"))
        }
    }

    fn name(&mut self, what: &str) -> Result<String, PolicyError> {
        match self.peek() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.fail(what),
        }
    }

    fn field_name(&mut self) -> Result<String, PolicyError> {
        // Field names may coincide with keywords (`version`, `count` ...).
        match self.peek() {
            Tok::Ident(s) if !s.contains('-') => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.fail("a field name"),
        }
    }

    fn rule(&mut self) -> Result<Rule, PolicyError> {
        self.word("rule")?;
        let name = match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                s
            }
            _ => return self.fail("a rule name"),
        };
        let severity = if self.eat_word("block") {
            RuleSeverity::Block
        } else if self.eat_word("warn") {
            RuleSeverity::Warn
        } else {
            return self.fail("`block` or `warn`");
        };
        self.sym("{")?;
        self.word("when")?;
        let when = self.expr()?;
        self.sym(";")?;
        self.word("message")?;
        let message = match self.peek() {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                s
            }
            _ => return self.fail("a message string"),
        };
        self.sym(";")?;
        self.sym("}")?;
        Ok(Rule {
            name,
            severity,
            when,
            message,
        })
    }

    fn expr(&mut self) -> Result<Expr, PolicyError> {
        let mut lhs = self.and()?;
        while self.eat_word("or") {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, PolicyError> {
        let mut lhs = self.unary()?;
        while self.eat_word("and") {
            lhs = Expr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, PolicyError> {
        if self.eat_word("not") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.cmp()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        match self.peek() {
            Tok::Sym("==") => Some(CmpOp::Eq),
            Tok::Sym("!=") => Some(CmpOp::Ne),
            Tok::Sym("<") => Some(CmpOp::Lt),
            Tok::Sym("<=") => Some(CmpOp::Le),
            Tok::Sym(">") => Some(CmpOp::Gt),
            Tok::Sym(">=") => Some(CmpOp::Ge),
            _ => None,
        }
    }

    fn cmp(&mut self) -> Result<Expr, PolicyError> {
        let lhs = self.primary()?;
        if let Some(op) = self.cmp_op() {
            self.bump();
            let rhs = self.primary()?;
            return Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)));
        }
        if self.eat_word("matches") {
            let Tok::Str(pattern) = self.peek().clone() else {
                return self.fail("a regular expression string");
            };
            let re = match Regex::new(&pattern) {
                Ok(re) => re,
                Err(_) => return self.fail("a valid regular expression"),
            };
            self.bump();
            return Ok(Expr::Matches(Box::new(lhs), re));
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, PolicyError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Lit::Str(s)))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Lit(Lit::Num(n)))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.sym(")")?;
                Ok(e)
            }
            Tok::Ident(w) => match w.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr::Lit(Lit::Bool(w == "true")))
                }
                "exists" | "count" | "any" | "all" | "semver" | "days_since" if self.peek_at(1) == &Tok::Sym("(") => {
                    self.call(&w)
                }
                _ => Ok(Expr::Sel(self.selector()?)),
            },
            _ => self.fail("an expression"),
        }
    }

    fn call(&mut self, f: &str) -> Result<Expr, PolicyError> {
        self.bump();
        self.sym("(")?;
        let e = match f {
            "exists" => Expr::Exists(self.selector()?),
            "count" => Expr::Count(self.selector()?),
            "any" | "all" => {
                let over = self.selector()?;
                self.sym(",")?;
                let var = self.name("a variable name")?;
                self.sym("->")?;
                let body = self.expr()?;
                Expr::Quant {
                    all: f == "all",
                    over,
                    var,
                    body: Box::new(body),
                }
            }
            "semver" => Expr::Semver(Box::new(self.expr()?)),
            _ => Expr::DaysSince(Box::new(self.expr()?)),
        };
        self.sym(")")?;
        Ok(e)
    }

    fn selector(&mut self) -> Result<Selector, PolicyError> {
        let root = if self.eat_word("card") {
            Root::Card
        } else if self.eat_word("prev") {
            Root::Prev
        } else {
            Root::Var(self.name("a selector (`card.`, `prev.` or a bound variable)")?)
        };
        let mut steps = Vec::new();
        loop {
            if self.eat_sym(".") {
                steps.push(Step::Field(self.field_name()?));
            } else if self.eat_sym("[") {
                match self.peek().clone() {
                    Tok::Num(n) if n.fract().is_zero() && n >= 0.into() => {
                        self.bump();
                        let i = usize::try_from(n.mantissa()).or_else(|_| self.fail("a list index"))?;
                        steps.push(Step::Index(i));
                    }
                    _ => {
                        let field = self.field_name()?;
                        let op = match self.cmp_op() {
                            Some(op @ (CmpOp::Eq | CmpOp::Ne)) => op,
                            _ => return self.fail("`==` or `!=`"),
                        };
                        self.bump();
                        let value = self.expr()?;
                        steps.push(Step::Filter {
                            field,
                            op,
                            value: Box::new(value),
                        });
                    }
                }
                self.sym("]")?;
            } else {
                return Ok(Selector { root, steps });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rule() {
        let r = parse_rules(
            "rule no-missing-contact block { when not exists(card.governance.security_contact); message \"card lacks a security contact\"; }",
        )
        .unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].name, "no-missing-contact");
        assert_eq!(r[0].severity, RuleSeverity::Block);
        assert!(matches!(r[0].when, Expr::Not(_)));
    }

    #[test]
    fn filter_and_lambda() {
        let r = parse_rules(
            "rule r warn { when any(card.guardrails, g -> semver(g.version) < semver(prev.guardrails[name == g.name].version)); message \"m\"; }",
        )
        .unwrap();
        assert!(r[0].references_prev());
    }

    #[test]
    fn empty_input_is_parse_error() {
        assert!(matches!(
            parse_rules(""),
            Err(PolicyError::Parse { line: 1, col: 1, .. })
        ));
        assert!(matches!(
            parse_rules("  # only a comment\n"),
            Err(PolicyError::Parse { .. })
        ));
    }

    #[test]
    fn error_position() {
        match parse_rules("rule x block {\n  when true\n  message \"m\"; }") {
            Err(PolicyError::Parse { line, col, expected }) => {
                assert_eq!((line, col), (3, 3));
                assert_eq!(expected, "`;`");
            }
            other => panic!("{other:?}"),
        }
    }
}
