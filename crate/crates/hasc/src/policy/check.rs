// SPDX-License-Identifier: Apache-2.0

//! Static typing of policy expressions against the card shape.

use std::fmt;

use chrono::NaiveDate;

use super::ast::{CmpOp, Expr, Lit, Root, Rule, Selector, Step};
use super::PolicyError;

/// Object shapes reachable from a card.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Card,
    Blueprint,
    Component,
    DataFlow,
    Model,
    Intent,
    Provenance,
    Evaluation,
    Limitation,
    Hazard,
    Hex,
    Guardrail,
    Remediation,
    History,
    Governance,
    Optional,
    Oss,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Ty {
    Str,
    Num,
    Bool,
    Ver,
    Date,
    List(Box<Ty>),
    Obj(Kind),
    /// Untyped content (vendor extensions); checked at evaluation time.
    Dyn,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Str => f.write_str("string"),
            Ty::Num => f.write_str("number"),
            Ty::Bool => f.write_str("bool"),
            Ty::Ver => f.write_str("semver"),
            Ty::Date => f.write_str("date"),
            Ty::List(t) => write!(f, "list of {t}"),
            Ty::Obj(k) => write!(f, "{k:?} object"),
            Ty::Dyn => f.write_str("dynamic"),
        }
    }
}

fn list(t: Ty) -> Ty {
    Ty::List(Box::new(t))
}

pub(crate) fn field_ty(kind: Kind, field: &str) -> Option<Ty> {
    use Kind as K;
    use Ty::*;
    Some(match (kind, field) {
        (K::Card, "card_id" | "version" | "remediation_link") => Str,
        (K::Card, "published") => Date,
        (K::Card, "blueprint") => Obj(K::Blueprint),
        (K::Card, "intent") => Obj(K::Intent),
        (K::Card, "provenance") => list(Obj(K::Provenance)),
        (K::Card, "evaluations") => list(Obj(K::Evaluation)),
        (K::Card, "limitations") => list(Obj(K::Limitation)),
        (K::Card, "hazard_log") => list(Obj(K::Hazard)),
        (K::Card, "none_identified") => Bool,
        (K::Card, "guardrails") => list(Obj(K::Guardrail)),
        (K::Card, "remediations") => list(Obj(K::Remediation)),
        (K::Card, "history") => list(Obj(K::History)),
        (K::Card, "governance") => Obj(K::Governance),
        (K::Card, "optional_components") => Obj(K::Optional),
        (K::Card, "references") => list(Obj(K::Reference)),
        (K::Card, "visibility_marks" | "redaction_notice") => Dyn,
        (K::Card, f) if f.starts_with("x_") => Dyn,
        (K::Blueprint, "architecture_summary" | "system_prompt_doc") => Str,
        (K::Blueprint, "components") => list(Obj(K::Component)),
        (K::Blueprint, "data_flows") => list(Obj(K::DataFlow)),
        (K::Blueprint, "models") => list(Obj(K::Model)),
        (K::Component, "name" | "kind" | "version") => Str,
        (K::DataFlow, "from" | "to" | "description") => Str,
        (K::Model, "name" | "version" | "sbom_link" | "provenance_link") => Str,
        (K::Intent, "intended_users" | "intended_uses" | "prohibited_uses") => list(Str),
        (K::Intent, "operational_boundaries") => Str,
        (K::Provenance, "source" | "actor" | "transformation" | "content_digest" | "prior_digest") => Str,
        (K::Provenance, "acquired") => Date,
        (K::Evaluation, "name" | "metric" | "dataset" | "conditions") => Str,
        (K::Evaluation, "value") => Dyn,
        (K::Limitation, "category" | "text") => Str,
        (
            K::Hazard,
            "id" | "title" | "category" | "description" | "probability_context" | "status" | "incident_link",
        ) => Str,
        (K::Hazard, "probability_score") => Num,
        (K::Hazard, "mitigations") => list(Str),
        (K::Hazard, "discovered") => Date,
        (K::Hazard, "hex") => Obj(K::Hex),
        (K::Hex, "hazard" | "product" | "status" | "statement") => Str,
        (K::Hex, "issued") => Date,
        (K::Guardrail, "name" | "version" | "mechanism") => Str,
        (K::Guardrail, "covers") => list(Str),
        (K::Remediation, "id" | "fixed_in" | "summary") => Str,
        (K::History, "version" | "change_type" | "change_label" | "summary" | "incident_link") => Str,
        (K::History, "published") => Date,
        (K::History, "associated_hazards" | "affected_components") => list(Str),
        (K::Governance, "security_contact" | "safety_contact" | "owner") => Str,
        (K::Optional, "inference_engine" | "agentic_architecture" | "hosting_platform") => Str,
        (K::Optional, "oss_components") => list(Obj(K::Oss)),
        (K::Oss, "name" | "version") => Str,
        (K::Reference, "label" | "url") => Str,
        _ => return None,
    })
}

pub(crate) struct Checker<'r> {
    rule: &'r str,
    scope: Vec<(String, Ty)>,
}

impl<'r> Checker<'r> {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T, PolicyError> {
        Err(PolicyError::TypeCheck {
            rule: self.rule.to_string(),
            reason: reason.into(),
        })
    }

    pub(crate) fn selector(&mut self, s: &Selector) -> Result<Ty, PolicyError> {
        let mut ty = match &s.root {
            Root::Card | Root::Prev => Ty::Obj(Kind::Card),
            Root::Var(v) => match self.scope.iter().rev().find(|(n, _)| n == v) {
                Some((_, t)) => t.clone(),
                None => {
                    return self.err(format!(
                        "`{v}` is not bound (use `card.`, `prev.` or an `any`/`all` variable)"
                    ))
                }
            },
        };
        for step in &s.steps {
            ty = match (step, ty) {
                (_, Ty::Dyn) => {
                    if let Step::Filter { value, .. } = step {
                        self.expr(value)?;
                    }
                    Ty::Dyn
                }
                (Step::Field(f), Ty::Obj(k)) => match field_ty(k, f) {
                    Some(t) => t,
                    None => return self.err(format!("`{s}`: {k:?} has no field `{f}`")),
                },
                (Step::Index(_), Ty::List(t)) => *t,
                (Step::Filter { field, op: _, value }, Ty::List(t)) => {
                    let Ty::Obj(k) = *t else {
                        return self.err(format!("`{s}`: filters need a list of objects"));
                    };
                    let Some(ft) = field_ty(k, field) else {
                        return self.err(format!("`{s}`: {k:?} has no field `{field}`"));
                    };
                    let vt = self.expr(value)?;
                    self.comparable(CmpOp::Eq, &ft, &vt, value)?;
                    Ty::Obj(k)
                }
                (Step::Field(f), t) => return self.err(format!("`{s}`: cannot take `.{f}` of a {t}")),
                (_, t) => return self.err(format!("`{s}`: cannot index a {t}")),
            };
        }
        Ok(ty)
    }

    fn comparable(&self, op: CmpOp, a: &Ty, b: &Ty, rhs: &Expr) -> Result<(), PolicyError> {
        let ok = match (a, b) {
            (Ty::Dyn, t) | (t, Ty::Dyn) => !matches!(t, Ty::List(_) | Ty::Obj(_)),
            (Ty::Date, Ty::Str) | (Ty::Str, Ty::Date) => {
                if let Expr::Lit(Lit::Str(s)) = rhs {
                    if s.parse::<NaiveDate>().is_err() {
                        return self.err(format!("`{s}` is not a YYYY-MM-DD date"));
                    }
                }
                true
            }
            (Ty::Bool, Ty::Bool) => op.is_equality(),
            (Ty::List(_) | Ty::Obj(_), _) | (_, Ty::List(_) | Ty::Obj(_)) => false,
            (x, y) => x == y,
        };
        if ok {
            Ok(())
        } else {
            self.err(format!("cannot compare {a} {} {b}", op.symbol()))
        }
    }

    fn boolean(&mut self, e: &Expr) -> Result<(), PolicyError> {
        match self.expr(e)? {
            Ty::Bool | Ty::Dyn => Ok(()),
            t => self.err(format!("expected a bool condition, found {t}")),
        }
    }

    pub(crate) fn expr(&mut self, e: &Expr) -> Result<Ty, PolicyError> {
        Ok(match e {
            Expr::Lit(Lit::Str(_)) => Ty::Str,
            Expr::Lit(Lit::Num(_)) => Ty::Num,
            Expr::Lit(Lit::Bool(_)) => Ty::Bool,
            Expr::Sel(s) => self.selector(s)?,
            Expr::Not(a) => {
                self.boolean(a)?;
                Ty::Bool
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                self.boolean(a)?;
                self.boolean(b)?;
                Ty::Bool
            }
            Expr::Cmp(op, a, b) => {
                let (ta, tb) = (self.expr(a)?, self.expr(b)?);
                self.comparable(*op, &ta, &tb, if matches!(**a, Expr::Lit(_)) { a } else { b })?;
                Ty::Bool
            }
            Expr::Matches(a, _) => match self.expr(a)? {
                Ty::Str | Ty::Dyn => Ty::Bool,
                t => return self.err(format!("`matches` needs a string, found {t}")),
            },
            Expr::Exists(s) => {
                self.selector(s)?;
                Ty::Bool
            }
            Expr::Count(s) => match self.selector(s)? {
                Ty::List(_) | Ty::Dyn => Ty::Num,
                t => return self.err(format!("`count` needs a list, found {t} at `{s}`")),
            },
            Expr::Quant { over, var, body, .. } => {
                let elem = match self.selector(over)? {
                    Ty::List(t) => *t,
                    Ty::Dyn => Ty::Dyn,
                    t => return self.err(format!("`any`/`all` need a list, found {t} at `{over}`")),
                };
                self.scope.push((var.clone(), elem));
                let r = self.boolean(body);
                self.scope.pop();
                r?;
                Ty::Bool
            }
            Expr::Semver(a) => match self.expr(a)? {
                Ty::Str | Ty::Dyn => Ty::Ver,
                t => return self.err(format!("`semver` needs a string, found {t}")),
            },
            Expr::DaysSince(a) => match self.expr(a)? {
                Ty::Date | Ty::Str | Ty::Dyn => Ty::Num,
                t => return self.err(format!("`days_since` needs a date, found {t}")),
            },
        })
    }
}

pub(crate) fn check_rule(rule: &Rule) -> Result<(), PolicyError> {
    let mut c = Checker {
        rule: &rule.name,
        scope: Vec::new(),
    };
    c.boolean(&rule.when)
}
