// SPDX-License-Identifier: Apache-2.0

use std::str::FromStr;

use chrono::NaiveDate;
use rust_decimal::Decimal;
use serde_json::Value;

use super::ast::{CmpOp, Expr, Lit, Root, Selector, Step};
use super::check::{field_ty, Kind, Ty};
use super::PolicyError;
use crate::card::CardVersion;
use crate::path::FieldPath;

#[derive(Debug, Clone)]
struct Node<'a> {
    value: &'a Value,
    /// Set only for nodes inside the evaluated card, never for `prev`.
    path: Option<FieldPath>,
    ty: Ty,
}

#[derive(Debug, Clone)]
enum V<'a> {
    Absent,
    Bool(bool),
    Num(Decimal),
    Str(String),
    Ver(CardVersion),
    Date(NaiveDate),
    Node(Node<'a>),
}

pub(crate) struct Ctx<'a> {
    pub card: &'a Value,
    pub prev: Option<&'a Value>,
    pub today: NaiveDate,
    pub rule: &'a str,
    scope: Vec<(String, Node<'a>)>,
}

fn child_ty(parent: &Ty, field: &str) -> Ty {
    match parent {
        Ty::Obj(k) => field_ty(*k, field).unwrap_or(Ty::Dyn),
        _ => Ty::Dyn,
    }
}

fn elem_ty(parent: &Ty) -> Ty {
    match parent {
        Ty::List(t) => (**t).clone(),
        _ => Ty::Dyn,
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    s.get(..10)?.parse().ok()
}

fn parse_decimal(s: &str) -> Option<Decimal> {
    Decimal::from_str(s).or_else(|_| Decimal::from_scientific(s)).ok()
}

impl<'a> Ctx<'a> {
    pub fn new(card: &'a Value, prev: Option<&'a Value>, today: NaiveDate, rule: &'a str) -> Self {
        Self {
            card,
            prev,
            today,
            rule,
            scope: Vec::new(),
        }
    }

    fn type_err<T>(&self, reason: impl Into<String>) -> Result<T, PolicyError> {
        Err(PolicyError::EvalType {
            rule: self.rule.to_string(),
            reason: reason.into(),
        })
    }

    fn select(&mut self, s: &Selector) -> Result<Option<Node<'a>>, PolicyError> {
        let mut node = match &s.root {
            Root::Card => Node {
                value: self.card,
                path: Some(FieldPath::root()),
                ty: Ty::Obj(Kind::Card),
            },
            Root::Prev => match self.prev {
                Some(p) => Node {
                    value: p,
                    path: None,
                    ty: Ty::Obj(Kind::Card),
                },
                None => return Ok(None),
            },
            Root::Var(v) => match self.scope.iter().rev().find(|(n, _)| n == v) {
                Some((_, n)) => n.clone(),
                None => return self.type_err(format!("unbound variable `{v}`")),
            },
        };
        for step in &s.steps {
            let next = match step {
                Step::Field(f) => node.value.get(f).filter(|v| !v.is_null()).map(|v| Node {
                    value: v,
                    path: node.path.as_ref().map(|p| p.key(f.clone())),
                    ty: child_ty(&node.ty, f),
                }),
                Step::Index(i) => node.value.as_array().and_then(|a| a.get(*i)).map(|v| Node {
                    value: v,
                    path: node.path.as_ref().map(|p| p.index(*i)),
                    ty: elem_ty(&node.ty),
                }),
                Step::Filter { field, op, value } => {
                    let Some(items) = node.value.as_array() else {
                        return self.type_err(format!("`{s}` filters a non-list value"));
                    };
                    let want = self.value(value)?;
                    let want = self.scalar(want)?;
                    let ety = elem_ty(&node.ty);
                    let fty = child_ty(&ety, field);
                    let mut found = None;
                    for (i, item) in items.iter().enumerate() {
                        let Some(fv) = item.get(field).filter(|v| !v.is_null()) else {
                            continue;
                        };
                        let got = self.scalar(V::Node(Node {
                            value: fv,
                            path: None,
                            ty: fty.clone(),
                        }))?;
                        if self.compare(*op, &got, &want)? {
                            found = Some(Node {
                                value: item,
                                path: node.path.as_ref().map(|p| p.index(i)),
                                ty: ety.clone(),
                            });
                            break;
                        }
                    }
                    found
                }
            };
            match next {
                Some(n) => node = n,
                None => return Ok(None),
            }
        }
        Ok(Some(node))
    }

    /// Reduces a node to a scalar according to its static type. Lists and
    /// objects stay nodes.
    fn scalar(&self, v: V<'a>) -> Result<V<'a>, PolicyError> {
        let V::Node(n) = v else { return Ok(v) };
        let bad = |what: &str| PolicyError::EvalType {
            rule: self.rule.to_string(),
            reason: format!("expected {what}, found {}", n.value),
        };
        Ok(match (&n.ty, n.value) {
            (_, Value::Null) => V::Absent,
            (Ty::Str, Value::String(s)) => V::Str(s.clone()),
            (Ty::Str, Value::Number(x)) => V::Str(x.to_string()),
            (Ty::Str, _) => return Err(bad("a string")),
            (Ty::Num | Ty::Dyn, Value::Number(x)) => {
                V::Num(parse_decimal(&x.to_string()).ok_or_else(|| bad("a number"))?)
            }
            (Ty::Num, Value::String(s)) => V::Num(parse_decimal(s).ok_or_else(|| bad("a number"))?),
            (Ty::Num, _) => return Err(bad("a number")),
            (Ty::Date, Value::String(s)) => V::Date(parse_date(s).ok_or_else(|| bad("a date"))?),
            (Ty::Date, _) => return Err(bad("a date")),
            (Ty::Bool | Ty::Dyn, Value::Bool(b)) => V::Bool(*b),
            (Ty::Bool, _) => return Err(bad("a bool")),
            (Ty::Dyn, Value::String(s)) => V::Str(s.clone()),
            _ => V::Node(n),
        })
    }

    fn compare(&self, op: CmpOp, a: &V<'a>, b: &V<'a>) -> Result<bool, PolicyError> {
        use std::cmp::Ordering;
        let ord: Ordering = match (a, b) {
            (V::Absent, _) | (_, V::Absent) => return Ok(false),
            (V::Num(x), V::Num(y)) => x.cmp(y),
            (V::Str(x), V::Str(y)) => x.cmp(y),
            (V::Ver(x), V::Ver(y)) => x.cmp(y),
            (V::Date(x), V::Date(y)) => x.cmp(y),
            (V::Bool(x), V::Bool(y)) => x.cmp(y),
            (V::Date(x), V::Str(s)) => match parse_date(s) {
                Some(y) => x.cmp(&y),
                None => return self.type_err(format!("`{s}` is not a date")),
            },
            (V::Str(s), V::Date(y)) => match parse_date(s) {
                Some(x) => x.cmp(y),
                None => return self.type_err(format!("`{s}` is not a date")),
            },
            (V::Num(x), V::Str(s)) => match parse_decimal(s) {
                Some(y) => x.cmp(&y),
                None => return self.type_err(format!("cannot compare a number with `{s}`")),
            },
            (V::Str(s), V::Num(y)) => match parse_decimal(s) {
                Some(x) => x.cmp(y),
                None => return self.type_err(format!("cannot compare `{s}` with a number")),
            },
            (x, y) => return self.type_err(format!("cannot compare {x:?} {} {y:?}", op.symbol())),
        };
        Ok(match op {
            CmpOp::Eq => ord.is_eq(),
            CmpOp::Ne => ord.is_ne(),
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
        })
    }

    fn value(&mut self, e: &Expr) -> Result<V<'a>, PolicyError> {
        Ok(match e {
            Expr::Lit(Lit::Str(s)) => V::Str(s.clone()),
            Expr::Lit(Lit::Num(n)) => V::Num(*n),
            Expr::Lit(Lit::Bool(b)) => V::Bool(*b),
            Expr::Sel(s) => self.select(s)?.map_or(V::Absent, V::Node),
            Expr::Cmp(op, a, b) => {
                let a = self.value(a)?;
                let a = self.scalar(a)?;
                let b = self.value(b)?;
                let b = self.scalar(b)?;
                V::Bool(self.compare(*op, &a, &b)?)
            }
            Expr::Matches(a, re) => {
                let v = self.value(a)?;
                match self.scalar(v)? {
                    V::Absent => V::Bool(false),
                    V::Str(s) => V::Bool(re.is_match(&s)),
                    V::Num(n) => V::Bool(re.is_match(&n.to_string())),
                    other => return self.type_err(format!("`matches` on {other:?}")),
                }
            }
            Expr::Exists(s) => V::Bool(self.select(s)?.is_some()),
            Expr::Count(s) => match self.select(s)? {
                None => V::Num(Decimal::ZERO),
                Some(n) => match n.value.as_array() {
                    Some(a) => V::Num(a.len().into()),
                    None => return self.type_err(format!("`count` of non-list `{s}`")),
                },
            },
            Expr::Semver(a) => {
                let v = self.value(a)?;
                match self.scalar(v)? {
                    V::Absent => V::Absent,
                    V::Str(s) => match s.parse::<CardVersion>() {
                        Ok(ver) => V::Ver(ver),
                        Err(_) => return self.type_err(format!("`{s}` is not a semantic version")),
                    },
                    other => return self.type_err(format!("`semver` of {other:?}")),
                }
            }
            Expr::DaysSince(a) => {
                let v = self.value(a)?;
                let d = match self.scalar(v)? {
                    V::Absent => return Ok(V::Absent),
                    V::Date(d) => d,
                    V::Str(s) => match parse_date(&s) {
                        Some(d) => d,
                        None => return self.type_err(format!("`{s}` is not a date")),
                    },
                    other => return self.type_err(format!("`days_since` of {other:?}")),
                };
                V::Num((self.today - d).num_days().into())
            }
            Expr::Not(_) | Expr::And(..) | Expr::Or(..) | Expr::Quant { .. } => V::Bool(self.truth(e)?.0),
        })
    }

    /// Evaluates a condition, returning the card paths that witnessed it.
    pub fn truth(&mut self, e: &Expr) -> Result<(bool, Vec<FieldPath>), PolicyError> {
        match e {
            Expr::Not(a) => Ok((!self.truth(a)?.0, Vec::new())),
            Expr::And(a, b) => {
                let (ta, mut wa) = self.truth(a)?;
                if !ta {
                    return Ok((false, Vec::new()));
                }
                let (tb, wb) = self.truth(b)?;
                if !tb {
                    return Ok((false, Vec::new()));
                }
                wa.extend(wb);
                Ok((true, wa))
            }
            Expr::Or(a, b) => {
                let (ta, mut wa) = self.truth(a)?;
                let (tb, wb) = self.truth(b)?;
                if !ta {
                    wa.clear();
                }
                if tb {
                    wa.extend(wb);
                }
                Ok((ta || tb, wa))
            }
            Expr::Quant { all, over, var, body } => {
                let Some(list) = self.select(over)? else {
                    return Ok((*all, Vec::new()));
                };
                let Some(items) = list.value.as_array() else {
                    return self.type_err(format!("`{over}` is not a list"));
                };
                let ety = elem_ty(&list.ty);
                let (mut hits, mut witnesses) = (0, Vec::new());
                for (i, item) in items.iter().enumerate() {
                    let path = list.path.as_ref().map(|p| p.index(i));
                    self.scope.push((
                        var.clone(),
                        Node {
                            value: item,
                            path: path.clone(),
                            ty: ety.clone(),
                        },
                    ));
                    let r = self.truth(body);
                    self.scope.pop();
                    if r?.0 {
                        hits += 1;
                        witnesses.extend(path);
                    }
                }
                if *all {
                    Ok((hits == items.len(), Vec::new()))
                } else {
                    Ok((hits > 0, witnesses))
                }
            }
            _ => {
                let v = self.value(e)?;
                match self.scalar(v)? {
                    V::Bool(b) => Ok((b, Vec::new())),
                    V::Absent => Ok((false, Vec::new())),
                    other => self.type_err(format!("expected a bool, found {other:?}")),
                }
            }
        }
    }
}
