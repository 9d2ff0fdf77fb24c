// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use regex::Regex;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleSeverity {
    Warn,
    Block,
}

impl fmt::Display for RuleSeverity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleSeverity::Warn => "warn",
            RuleSeverity::Block => "block",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    pub severity: RuleSeverity,
    /// Violation condition: the rule fires when this is true.
    pub when: Expr,
    pub message: String,
}

impl Rule {
    pub fn references_prev(&self) -> bool {
        self.when.references_prev()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Str(String),
    Num(Decimal),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Root {
    Card,
    Prev,
    /// A variable bound by `any`/`all`.
    Var(String),
}

#[derive(Debug, Clone)]
pub enum Step {
    Field(String),
    Index(usize),
    /// `[field == expr]` or `[field != expr]`: the first element whose field
    /// satisfies the comparison.
    Filter {
        field: String,
        op: CmpOp,
        value: Box<Expr>,
    },
}

#[derive(Debug, Clone)]
pub struct Selector {
    pub root: Root,
    pub steps: Vec<Step>,
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.root {
            Root::Card => f.write_str("card")?,
            Root::Prev => f.write_str("prev")?,
            Root::Var(v) => f.write_str(v)?,
        }
        for s in &self.steps {
            match s {
                Step::Field(k) => write!(f, ".{k}")?,
                Step::Index(i) => write!(f, "[{i}]")?,
                Step::Filter { field, op, .. } => write!(f, "[{field} {} ...]", op.symbol())?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    Lit(Lit),
    Sel(Selector),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Matches(Box<Expr>, Regex),
    Exists(Selector),
    Count(Selector),
    Quant {
        all: bool,
        over: Selector,
        var: String,
        body: Box<Expr>,
    },
    Semver(Box<Expr>),
    DaysSince(Box<Expr>),
}

impl Expr {
    pub fn references_prev(&self) -> bool {
        fn sel(s: &Selector) -> bool {
            s.root == Root::Prev
                || s.steps.iter().any(|st| match st {
                    Step::Filter { value, .. } => value.references_prev(),
                    _ => false,
                })
        }
        match self {
            Expr::Lit(_) => false,
            Expr::Sel(s) | Expr::Exists(s) | Expr::Count(s) => sel(s),
            Expr::Not(e) | Expr::Matches(e, _) | Expr::Semver(e) | Expr::DaysSince(e) => e.references_prev(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) => a.references_prev() || b.references_prev(),
            Expr::Quant { over, body, .. } => sel(over) || body.references_prev(),
        }
    }
}
