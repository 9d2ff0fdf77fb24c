// SPDX-License-Identifier: Apache-2.0

//! Release gates written as policy-as-code.
//!
//! A policy file is a list of rules. Each rule names a violation condition
//! over `card` (the candidate) and optionally `prev` (its predecessor); when
//! the condition holds the rule fires at `block` or `warn` severity.
//!
//! ```text
//! rule no-open-hazards warn {
//!   when any(card.hazard_log, h -> h.status == "open");
//!   message "open hazard at {path}";
//! }
//! ```
//!
//! Paths that do not exist in a card never error: `exists` is false, `count`
//! is zero, and any comparison involving them is false.

mod ast;
mod check;
mod eval;
mod lexer;
mod parser;

use std::collections::HashSet;
use std::path::Path;

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{CmpOp, Expr, Lit, Root, Rule, RuleSeverity, Selector, Step};

use crate::card::{to_tree, SystemCard};
use crate::path::FieldPath;

const BUILTIN: &str = include_str!("builtin.hascpolicy");

/// Message used when a rule needs `prev` and none was supplied.
pub const PREDECESSOR_REQUIRED: &str = "predecessor required";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("PARSE at line {line}, column {col}: expected {expected}")]
    Parse { line: usize, col: usize, expected: String },
    #[error("TYPECHECK in rule `{rule}`: {reason}")]
    TypeCheck { rule: String, reason: String },
    #[error("DUPLICATE_RULE: `{0}` is defined more than once")]
    DuplicateRule(String),
    #[error("EVAL_TYPE in rule `{rule}`: {reason}")]
    EvalType { rule: String, reason: String },
    #[error("IO: {path}: {message}")]
    Io { path: String, message: String },
}

impl PolicyError {
    pub fn code(&self) -> &'static str {
        match self {
            PolicyError::Parse { .. } => "PARSE",
            PolicyError::TypeCheck { .. } => "TYPECHECK",
            PolicyError::DuplicateRule(_) => "DUPLICATE_RULE",
            PolicyError::EvalType { .. } => "EVAL_TYPE",
            PolicyError::Io { .. } => "IO",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicySet {
    pub rules: Vec<Rule>,
    pub source_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Warn,
    Block,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fired {
    pub rule: String,
    pub severity: RuleSeverity,
    pub message: String,
    pub witnesses: Vec<FieldPath>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub fired: Vec<Fired>,
}

impl Verdict {
    pub fn from_fired(fired: Vec<Fired>) -> Self {
        let outcome = match fired.iter().map(|f| f.severity).max() {
            None => Outcome::Pass,
            Some(RuleSeverity::Warn) => Outcome::Warn,
            Some(RuleSeverity::Block) => Outcome::Block,
        };
        Verdict { outcome, fired }
    }

    pub fn fired_rule(&self, name: &str) -> Option<&Fired> {
        self.fired.iter().find(|f| f.rule == name)
    }
}

pub fn parse_policy(text: &str) -> Result<PolicySet, PolicyError> {
    parse_policy_named(text, "<inline>")
}

pub fn parse_policy_named(text: &str, source_name: &str) -> Result<PolicySet, PolicyError> {
    let rules = parser::parse_rules(text)?;
    let mut seen = HashSet::new();
    for r in &rules {
        if !seen.insert(r.name.as_str()) {
            return Err(PolicyError::DuplicateRule(r.name.clone()));
        }
        check::check_rule(r)?;
    }
    Ok(PolicySet {
        rules,
        source_name: source_name.to_string(),
    })
}

pub fn load_policy(path: &Path) -> Result<PolicySet, PolicyError> {
    let text = std::fs::read_to_string(path).map_err(|e| PolicyError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_policy_named(&text, &path.display().to_string())
}

/// The three stock release gates: a missing security contact, an open hazard
/// without mitigation, and a guardrail whose version went backwards.
pub fn builtin_policies() -> PolicySet {
    parse_policy_named(BUILTIN, "builtin").expect("builtin policy is well formed")
}

/// The builtin policy source text.
pub fn builtin_source() -> &'static str {
    BUILTIN
}

pub fn evaluate(policies: &PolicySet, card: &SystemCard, prev: Option<&SystemCard>) -> Result<Verdict, PolicyError> {
    evaluate_at(policies, card, prev, Utc::now().date_naive())
}

/// Like [`evaluate`] with a fixed date for `days_since`.
pub fn evaluate_at(
    policies: &PolicySet,
    card: &SystemCard,
    prev: Option<&SystemCard>,
    today: NaiveDate,
) -> Result<Verdict, PolicyError> {
    let card_tree = to_tree(card);
    let prev_tree = prev.map(to_tree);
    let mut fired = Vec::new();
    for rule in &policies.rules {
        if prev_tree.is_none() && rule.references_prev() {
            fired.push(Fired {
                rule: rule.name.clone(),
                severity: RuleSeverity::Warn,
                message: PREDECESSOR_REQUIRED.to_string(),
                witnesses: Vec::new(),
            });
            continue;
        }
        let mut ctx = eval::Ctx::new(&card_tree, prev_tree.as_ref(), today, &rule.name);
        let (hit, witnesses) = ctx.truth(&rule.when)?;
        if hit {
            let at = if witnesses.is_empty() {
                "card".to_string()
            } else {
                witnesses.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
            };
            fired.push(Fired {
                rule: rule.name.clone(),
                severity: rule.severity,
                message: rule.message.replace("{path}", &at),
                witnesses,
            });
        }
    }
    Ok(Verdict::from_fired(fired))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::{parse_card, Format, HazardStatus};

    fn fixture(name: &str) -> SystemCard {
        let p = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures/scenario")
            .join(name);
        parse_card(&std::fs::read(p).unwrap(), Format::Json).unwrap()
    }

    fn today() -> NaiveDate {
        NaiveDate::from_ymd_opt(2025, 8, 1).unwrap()
    }

    #[test]
    fn builtin_has_three_block_rules() {
        let b = builtin_policies();
        assert_eq!(b.rules.len(), 3);
        assert!(b.rules.iter().all(|r| r.severity == RuleSeverity::Block));
    }

    #[test]
    fn scenario_passes_with_predecessor() {
        let v = evaluate_at(
            &builtin_policies(),
            &fixture("card-v1.3.hasc.json"),
            Some(&fixture("card-v1.2.hasc.json")),
            today(),
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Pass, "{v:?}");
    }

    #[test]
    fn missing_predecessor_warns() {
        let v = evaluate_at(&builtin_policies(), &fixture("card-v1.3.hasc.json"), None, today()).unwrap();
        assert_eq!(v.outcome, Outcome::Warn);
        assert_eq!(v.fired.len(), 1);
        assert_eq!(v.fired[0].rule, "guardrail-version-regression");
        assert_eq!(v.fired[0].message, PREDECESSOR_REQUIRED);
    }

    #[test]
    fn missing_contact_blocks() {
        let v = evaluate_at(
            &builtin_policies(),
            &fixture("card-v1.3-no-contact.hasc.json"),
            Some(&fixture("card-v1.2.hasc.json")),
            today(),
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Block);
        assert!(v.fired_rule("no-missing-contact").is_some());
    }

    #[test]
    fn open_hazard_witness() {
        let mut c = fixture("card-v1.3.hasc.json");
        c.hazard_log[1].status = HazardStatus::Open;
        c.hazard_log[1].mitigations.clear();
        let v = evaluate_at(&builtin_policies(), &c, Some(&fixture("card-v1.2.hasc.json")), today()).unwrap();
        let f = v.fired_rule("hazard-without-mitigation").unwrap();
        assert_eq!(f.witnesses, vec!["hazard_log[1]".parse::<FieldPath>().unwrap()]);
        assert!(f.message.ends_with("hazard_log[1]"));
        assert_eq!(v.outcome, Outcome::Block);
    }

    #[test]
    fn guardrail_regression_blocks() {
        let cur = fixture("card-v1.2.hasc.json");
        let prev = fixture("card-v1.3.hasc.json");
        let v = evaluate_at(&builtin_policies(), &cur, Some(&prev), today()).unwrap();
        let f = v.fired_rule("guardrail-version-regression").unwrap();
        let i = cur
            .guardrails
            .iter()
            .position(|g| g.name == "Medical query safety check")
            .unwrap();
        assert_eq!(f.witnesses, vec![FieldPath::root().key("guardrails").index(i)]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_policy(""), Err(PolicyError::Parse { .. })));
        let dup = "rule x warn { when true; message \"a\"; } rule x block { when false; message \"b\"; }";
        assert_eq!(parse_policy(dup).unwrap_err(), PolicyError::DuplicateRule("x".into()));
    }

    #[test]
    fn typecheck_errors() {
        for bad in [
            "card.nope == 1",
            "card.version < 3",
            "semver(card.version) < \"v1.0\"",
            "card.hazard_log.status == \"open\"",
            "count(card.card_id) > 0",
            "h.status == \"open\"",
            "card.published < \"yesterday\"",
            "card.card_id",
        ] {
            let src = format!("rule r warn {{ when {bad}; message \"m\"; }}");
            assert!(
                matches!(parse_policy(&src), Err(PolicyError::TypeCheck { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn absent_paths_collapse_to_false() {
        let c = fixture("card-v1.3-no-contact.hasc.json");
        let p = parse_policy(
            "rule a warn { when card.governance.security_contact == \"x\"; message \"m\"; }
             rule b warn { when card.governance.security_contact != \"x\"; message \"m\"; }
             rule c warn { when count(card.x_missing) > 0; message \"m\"; }
             rule d warn { when card.published < \"2030-01-01\" and days_since(card.published) == 9; message \"m\"; }",
        )
        .unwrap();
        let v = evaluate_at(&p, &c, None, today()).unwrap();
        let names: Vec<_> = v.fired.iter().map(|f| f.rule.as_str()).collect();
        assert_eq!(names, ["d"]);
    }

    #[test]
    fn dynamic_extensions_and_eval_type() {
        let c = fixture("card-v1.3.hasc.json");
        let ok = parse_policy("rule r warn { when card.x_vendor.pipeline matches \"^tek\"; message \"m\"; }").unwrap();
        assert_eq!(evaluate_at(&ok, &c, None, today()).unwrap().outcome, Outcome::Warn);
        let bad = parse_policy("rule r warn { when semver(card.x_vendor.pipeline) > semver(\"1.0\"); message \"m\"; }")
            .unwrap();
        assert!(matches!(
            evaluate_at(&bad, &c, None, today()),
            Err(PolicyError::EvalType { .. })
        ));
    }

    #[test]
    fn warn_rule_that_never_fires_passes() {
        let p = parse_policy("rule r warn { when false; message \"m\"; }").unwrap();
        assert_eq!(
            evaluate_at(&p, &fixture("card-v1.0.hasc.json"), None, today())
                .unwrap()
                .outcome,
            Outcome::Pass
        );
    }
}
