//! Execution of assessment rules against intended functions.

use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::arg::Arg;
use crate::interpretation::{Interpretation, InterpretationError, Pair};
use crate::ontology::{
    AssessmentRule, Ontology, RuleEnv, RuleEvalError, RuleExpr, RuleMode, RuleTypeError, RuleValue, Template, Var,
};
use crate::text::TextFiller;
use crate::workbook::{CellAddress, Evaluation, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Judgment {
    Good,
    Bad,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Green,
    Red,
    Gray,
}

impl Judgment {
    pub fn color(self) -> Color {
        match self {
            Judgment::Good => Color::Green,
            Judgment::Bad => Color::Red,
            Judgment::Unknown => Color::Gray,
        }
    }

    /// Bad dominates Good, Good dominates Unknown.
    pub fn combine(self, other: Judgment) -> Judgment {
        use Judgment::*;
        match (self, other) {
            (Bad, _) | (_, Bad) => Bad,
            (Good, _) | (_, Good) => Good,
            _ => Unknown,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Green => "green",
            Color::Red => "red",
            Color::Gray => "gray",
        })
    }
}

/// Judgment of one rule at one argument/value pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(rename = "block")]
    pub block_id: String,
    pub addr: CellAddress,
    pub arg: Arg,
    #[serde(with = "crate::num")]
    pub value: Decimal,
    pub judgment: Judgment,
    pub color: Color,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub mode: RuleMode,
    #[serde(rename = "rule")]
    pub rule_id: String,
    pub verdicts: Vec<Verdict>,
    pub violations: Vec<Verdict>,
}

impl AssessmentReport {
    fn new(mode: RuleMode, rule_id: &str, verdicts: Vec<Verdict>) -> Self {
        let violations = verdicts.iter().filter(|v| v.judgment == Judgment::Bad).cloned().collect();
        Self {
            mode,
            rule_id: rule_id.to_string(),
            verdicts,
            violations,
        }
    }

    pub fn at(&self, arg: &Arg) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| &v.arg == arg)
    }

    pub fn judgments(&self) -> Vec<Judgment> {
        self.verdicts.iter().map(|v| v.judgment).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssessError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error(transparent)]
    Interpretation(#[from] InterpretationError),
    #[error(transparent)]
    RuleType(#[from] RuleTypeError),
    #[error("rule `{rule}` belongs to concept `{rule_concept}`, block `{block}` interprets `{block_concept}`")]
    RuleNotForBlock {
        rule: String,
        rule_concept: String,
        block: String,
        block_concept: String,
    },
    #[error("block `{0}` needs at least two pairs for a domain assessment")]
    BlockTooSmall(String),
    #[error("the concepts of invariant `{0}` share no argument")]
    EmptyDomain(String),
    #[error("cell {0} belongs to no functional block")]
    Unresolved(CellAddress),
    #[error("unknown community profile `{0}`")]
    UnknownProfile(String),
}

/// One rule's verdict inside a trace; `None` when the concept has no value at the argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleVerdict {
    #[serde(rename = "rule")]
    pub rule_id: String,
    pub mode: RuleMode,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceNode {
    #[serde(rename = "concept")]
    pub concept_id: String,
    pub arg: Arg,
    pub judgment: Judgment,
    pub color: Color,
    pub verdicts: Vec<RuleVerdict>,
    pub children: Vec<TraceNode>,
}

impl TraceNode {
    /// Pre-order walk over the trace tree.
    pub fn walk(&self) -> Vec<&TraceNode> {
        let mut out = vec![self];
        for child in &self.children {
            out.extend(child.walk());
        }
        out
    }

    pub fn find(&self, concept_id: &str) -> Option<&TraceNode> {
        self.walk().into_iter().find(|n| n.concept_id == concept_id)
    }
}

/// Runs rules over an evaluated, interpreted workbook under one community profile.
#[derive(Clone, Copy)]
pub struct Assessor<'a> {
    pub ontology: &'a Ontology,
    pub interpretation: &'a Interpretation,
    pub evaluation: &'a Evaluation,
    /// Overrides each rule's own community profile when set.
    pub profile: Option<&'a str>,
}

struct Env<'a, 'b> {
    assessor: &'b Assessor<'a>,
    rule: &'b AssessmentRule,
    arg: Option<&'b Arg>,
    value: Option<Decimal>,
    prev: Option<Decimal>,
    next: Option<Decimal>,
}

impl RuleEnv for Env<'_, '_> {
    fn var(&self, var: Var) -> Result<Arg, RuleEvalError> {
        let unbound = || RuleEvalError(format!("{var:?} is not bound here"));
        match var {
            Var::Arg => self.arg.cloned().ok_or_else(unbound),
            Var::Value => self.value.map(Arg::Number).ok_or_else(unbound),
            Var::PrevValue => self.prev.map(Arg::Number).ok_or_else(unbound),
            Var::NextValue => self.next.map(Arg::Number).ok_or_else(unbound),
        }
    }

    fn param(&self, name: &str) -> Result<Decimal, RuleEvalError> {
        let profile = self.assessor.profile.unwrap_or(&self.rule.community);
        self.assessor
            .ontology
            .param(profile, name)
            .ok_or_else(|| RuleEvalError(format!("parameter `{name}` is not set in profile `{profile}`")))
    }

    fn apply(&self, concept: &str, arg: &Arg) -> Result<Decimal, RuleEvalError> {
        self.assessor
            .interpretation
            .concept_value(concept, arg, self.assessor.evaluation)
            .ok_or_else(|| RuleEvalError(format!("{concept} has no value at {arg}")))
    }
}

fn judge(predicate: &RuleExpr, env: &Env) -> Result<Judgment, RuleEvalError> {
    match predicate.eval(env)? {
        RuleValue::Bool(true) => Ok(Judgment::Good),
        RuleValue::Bool(false) => Ok(Judgment::Bad),
        _ => Err(RuleEvalError("predicate did not produce a truth value".into())),
    }
}

impl<'a> Assessor<'a> {
    fn filler(&self) -> TextFiller<'a> {
        TextFiller {
            ontology: self.ontology,
            interpretation: self.interpretation,
            evaluation: self.evaluation,
        }
    }

    fn rule(&self, rule_id: &str, mode: RuleMode) -> Result<&'a AssessmentRule, AssessError> {
        if let Some(p) = self.profile.filter(|p| !self.ontology.profiles().contains_key(*p)) {
            return Err(AssessError::UnknownProfile(p.to_string()));
        }
        let rule = self
            .ontology
            .rule(rule_id)
            .ok_or_else(|| AssessError::UnknownRule(rule_id.to_string()))?;
        if rule.mode != mode {
            return Err(RuleTypeError(format!("rule `{rule_id}` is a {} rule, not a {mode} rule", rule.mode)).into());
        }
        rule.predicate.check_predicate(mode)?;
        Ok(rule)
    }

    fn block_pairs(&self, block_id: &str, rule: &AssessmentRule) -> Result<Vec<Pair>, AssessError> {
        let block = self
            .interpretation
            .block(block_id)
            .ok_or_else(|| InterpretationError::UnknownBlock(block_id.to_string()))?;
        if block.concept_id != rule.concept_id {
            return Err(AssessError::RuleNotForBlock {
                rule: rule.id.clone(),
                rule_concept: rule.concept_id.clone(),
                block: block.id.clone(),
                block_concept: block.concept_id.clone(),
            });
        }
        Ok(self.interpretation.intended_function(block_id, self.evaluation)?.pairs)
    }

    fn verdict(&self, block_id: &str, rule: &AssessmentRule, pair: &Pair, outcome: Result<Judgment, RuleEvalError>) -> Verdict {
        let value = Value::Number(pair.value);
        let (judgment, text) = match outcome {
            Ok(j) => (j, self.judgment_text(rule, j, &pair.arg, &value)),
            Err(e) => (Judgment::Unknown, format!("{} at {} could not be assessed: {e}", rule.id, pair.arg)),
        };
        Verdict {
            block_id: block_id.to_string(),
            addr: pair.addr,
            arg: pair.arg.clone(),
            value: pair.value,
            judgment,
            color: judgment.color(),
            text,
        }
    }

    fn judgment_text(&self, rule: &AssessmentRule, judgment: Judgment, arg: &Arg, value: &Value) -> String {
        let template: &Template = match judgment {
            Judgment::Good => &rule.good_text,
            Judgment::Bad => &rule.bad_text,
            Judgment::Unknown => return format!("{} at {arg} could not be assessed", rule.id),
        };
        self.filler().render(template, Some(arg), Some(value))
    }

    /// Judges every pair of the block on its own.
    pub fn assess_values(&self, block_id: &str, rule_id: &str) -> Result<AssessmentReport, AssessError> {
        let rule = self.rule(rule_id, RuleMode::Value)?;
        let pairs = self.block_pairs(block_id, rule)?;
        let verdicts = pairs
            .iter()
            .map(|pair| {
                let env = Env {
                    assessor: self,
                    rule,
                    arg: Some(&pair.arg),
                    value: Some(pair.value),
                    prev: None,
                    next: None,
                };
                self.verdict(block_id, rule, pair, judge(&rule.predicate, &env))
            })
            .collect();
        Ok(AssessmentReport::new(RuleMode::Value, rule_id, verdicts))
    }

    /// Judges each pair against its neighbours. A pair whose referenced
    /// neighbour does not exist (the first for `prev_value`, the last for
    /// `next_value`) takes the judgment of the adjacent pair.
    pub fn assess_domain(&self, block_id: &str, rule_id: &str) -> Result<AssessmentReport, AssessError> {
        let rule = self.rule(rule_id, RuleMode::Domain)?;
        let pairs = self.block_pairs(block_id, rule)?;
        let n = pairs.len();
        if n < 2 {
            return Err(AssessError::BlockTooSmall(block_id.to_string()));
        }
        let vars = rule.predicate.vars();
        let edge = |i: usize| {
            (vars.contains(&Var::PrevValue) && i == 0) || (vars.contains(&Var::NextValue) && i == n - 1)
        };
        let outcomes: Vec<Option<Result<Judgment, RuleEvalError>>> = (0..n)
            .map(|i| {
                if edge(i) {
                    return None;
                }
                let env = Env {
                    assessor: self,
                    rule,
                    arg: Some(&pairs[i].arg),
                    value: Some(pairs[i].value),
                    prev: i.checked_sub(1).map(|j| pairs[j].value),
                    next: pairs.get(i + 1).map(|p| p.value),
                };
                Some(judge(&rule.predicate, &env))
            })
            .collect();
        let verdicts = (0..n)
            .map(|i| {
                let outcome = match &outcomes[i] {
                    Some(o) => o.clone(),
                    None => {
                        let neighbour = if i == 0 { 1 } else { n - 2 };
                        match &outcomes[neighbour] {
                            Some(Ok(j)) => Ok(*j),
                            Some(Err(e)) => Err(e.clone()),
                            None => Err(RuleEvalError("no neighbouring pair to compare with".into())),
                        }
                    }
                };
                self.verdict(block_id, rule, &pairs[i], outcome)
            })
            .collect();
        Ok(AssessmentReport::new(RuleMode::Domain, rule_id, verdicts))
    }

    /// Arguments shared by every concept the invariant applies, in the order
    /// of the first concept's blocks.
    fn shared_domain(&self, concepts: &[String]) -> Vec<Arg> {
        let domain_of = |concept: &str| -> Vec<Arg> {
            let mut args: Vec<Arg> = Vec::new();
            for block in self.interpretation.blocks_for_concept(concept) {
                for (addr, arg) in block.region.cells().zip(self.interpretation.args(&block.id).unwrap_or(&[])) {
                    if self.evaluation.get(addr).as_number().is_some() && !args.contains(arg) {
                        args.push(arg.clone());
                    }
                }
            }
            args
        };
        let Some((first, rest)) = concepts.split_first() else {
            return Vec::new();
        };
        let others: Vec<Vec<Arg>> = rest.iter().map(|c| domain_of(c)).collect();
        domain_of(first)
            .into_iter()
            .filter(|a| others.iter().all(|d| d.contains(a)))
            .collect()
    }

    /// Evaluates an invariant at every argument shared by the concepts it relates.
    pub fn check_invariant(&self, rule_id: &str) -> Result<AssessmentReport, AssessError> {
        let rule = self.rule(rule_id, RuleMode::Invariant)?;
        let concepts = rule.predicate.applied_concepts();
        let domain = self.shared_domain(&concepts);
        if domain.is_empty() {
            return Err(AssessError::EmptyDomain(rule_id.to_string()));
        }
        let first = &concepts[0];
        let verdicts = domain
            .iter()
            .map(|arg| {
                let (block, addr) = self.interpretation.locate(first, arg).expect("arg in shared domain");
                let value = self.evaluation.get(addr).as_number().expect("numeric in shared domain");
                let env = Env {
                    assessor: self,
                    rule,
                    arg: Some(arg),
                    value: None,
                    prev: None,
                    next: None,
                };
                let pair = Pair {
                    addr,
                    arg: arg.clone(),
                    value,
                };
                let mut verdict = self.verdict(&block.id, rule, &pair, judge(&rule.predicate, &env));
                let operands: Vec<String> = concepts
                    .iter()
                    .filter_map(|c| {
                        let v = self.interpretation.concept_value(c, arg, self.evaluation)?;
                        Some(format!("{c}({arg}) = {}", v.normalize()))
                    })
                    .collect();
                verdict.text = format!("{} [{}]", verdict.text, operands.join(", "));
                verdict
            })
            .collect();
        Ok(AssessmentReport::new(RuleMode::Invariant, rule_id, verdicts))
    }

    /// Runs a rule in whatever mode it declares. `block_id` is ignored for invariants.
    pub fn assess(&self, block_id: &str, rule_id: &str) -> Result<AssessmentReport, AssessError> {
        let rule = self
            .ontology
            .rule(rule_id)
            .ok_or_else(|| AssessError::UnknownRule(rule_id.to_string()))?;
        match rule.mode {
            RuleMode::Value => self.assess_values(block_id, rule_id),
            RuleMode::Domain => self.assess_domain(block_id, rule_id),
            RuleMode::Invariant => self.check_invariant(rule_id),
        }
    }

    fn rule_verdict_at(&self, rule: &AssessmentRule, concept_id: &str, arg: &Arg) -> RuleVerdict {
        let report = match rule.mode {
            RuleMode::Invariant => self.check_invariant(&rule.id).ok(),
            RuleMode::Value | RuleMode::Domain => self
                .interpretation
                .locate(concept_id, arg)
                .and_then(|(block, _)| self.assess(&block.id, &rule.id).ok()),
        };
        RuleVerdict {
            rule_id: rule.id.clone(),
            mode: rule.mode,
            verdict: report.and_then(|r| r.at(arg).cloned()),
        }
    }

    fn trace_node(&self, concept_id: &str, arg: &Arg, level: usize, depth: usize) -> TraceNode {
        let concept = self.ontology.concept(concept_id);
        let verdicts: Vec<RuleVerdict> = concept
            .map(|c| c.rules.iter().map(|r| self.rule_verdict_at(r, concept_id, arg)).collect())
            .unwrap_or_default();
        let judgment = if self.interpretation.locate(concept_id, arg).is_none() {
            Judgment::Unknown
        } else {
            verdicts
                .iter()
                .filter_map(|v| v.verdict.as_ref())
                .fold(Judgment::Unknown, |acc, v| acc.combine(v.judgment))
        };
        let children = if level < depth {
            concept
                .map(|c| {
                    c.depends_on
                        .iter()
                        .map(|d| self.trace_node(d, arg, level + 1, depth))
                        .collect()
                })
                .unwrap_or_default()
        } else {
            Vec::new()
        };
        TraceNode {
            concept_id: concept_id.to_string(),
            arg: arg.clone(),
            judgment,
            color: judgment.color(),
            verdicts,
            children,
        }
    }

    /// Assessments of the cell's concept at its argument, followed through
    /// `depends_on` for `depth` levels (at least one).
    pub fn trace(&self, addr: CellAddress, depth: usize) -> Result<TraceNode, AssessError> {
        let hit = self
            .interpretation
            .hits(addr, self.evaluation)
            .into_iter()
            .next()
            .ok_or(AssessError::Unresolved(addr))?;
        Ok(self.trace_node(&hit.concept_id, &hit.arg, 0, depth.max(1)))
    }
}
