//! Rule ranking and pruning of specific and conflicting rules.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::miner::AssociationRule;
use crate::transactions::FeatureItem;

/// Orders rules best-first: `Less` means `a` ranks above `b`.
///
/// Higher confidence wins, then higher support, then the shorter antecedent;
/// remaining ties fall back to (antecedent, consequent) lexicographically.
pub fn compare_rank(a: &AssociationRule, b: &AssociationRule) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| b.support.total_cmp(&a.support))
        .then_with(|| a.antecedent.len().cmp(&b.antecedent.len()))
        .then_with(|| a.antecedent.cmp(&b.antecedent))
        .then_with(|| a.consequent.cmp(&b.consequent))
}

/// Rules in strictly descending rank.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedRuleSet {
    rules: Vec<AssociationRule>,
}

impl RankedRuleSet {
    /// Sorts `rules` into rank order without pruning.
    pub fn from_rules(mut rules: Vec<AssociationRule>) -> Self {
        rules.sort_by(compare_rank);
        Self { rules }
    }

    pub fn rules(&self) -> &[AssociationRule] {
        &self.rules
    }

    pub fn into_rules(self) -> Vec<AssociationRule> {
        self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Checks rank order and the absence of subsumed or conflicting pairs.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, hi) in self.rules.iter().enumerate() {
            if let Some(next) = self.rules.get(i + 1) {
                if compare_rank(hi, next) != Ordering::Less {
                    return Err(format!("rules {i} and {} out of rank order", i + 1));
                }
            }
            for lo in &self.rules[i + 1..] {
                if hi.consequent == lo.consequent && is_subset(&hi.antecedent, &lo.antecedent) {
                    return Err(format!("{} subsumes {}", hi.dump_line(), lo.dump_line()));
                }
                if hi.consequent != lo.consequent && hi.antecedent == lo.antecedent {
                    return Err(format!("{} conflicts with {}", hi.dump_line(), lo.dump_line()));
                }
            }
        }
        Ok(())
    }
}

/// Both slices sorted.
pub fn is_subset(small: &[FeatureItem], big: &[FeatureItem]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// A kept, higher-ranked rule with the same consequent has a subset antecedent.
    Cond1,
    /// A kept, higher-ranked rule has the same antecedent and another consequent.
    Cond3,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::Cond1 => "COND1",
            DropReason::Cond3 => "COND3",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRule {
    pub rule: AssociationRule,
    pub reason: DropReason,
    pub kept_by: AssociationRule,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PruneReport {
    pub kept: RankedRuleSet,
    pub dropped: Vec<DroppedRule>,
}

impl PruneReport {
    /// One line per dropped rule: reason code, dropped rule, surviving rule.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# kept {} rules, dropped {}\n",
            self.kept.len(),
            self.dropped.len()
        );
        for d in &self.dropped {
            out.push_str(&format!(
                "{} dropped: {} | kept: {}\n",
                d.reason,
                d.rule.dump_line(),
                d.kept_by.dump_line()
            ));
        }
        out
    }
}

pub fn prune(rules: Vec<AssociationRule>) -> RankedRuleSet {
    prune_with_report(rules).kept
}

/// Walks the rules in rank order, keeping each unless an already-kept rule
/// makes it redundant (same consequent, subset antecedent) or conflicting
/// (same antecedent, different consequent).
pub fn prune_with_report(rules: Vec<AssociationRule>) -> PruneReport {
    let ranked = RankedRuleSet::from_rules(rules).rules;
    let mut kept: Vec<AssociationRule> = Vec::new();
    let mut by_consequent: HashMap<String, Vec<usize>> = HashMap::new();
    let mut by_antecedent: HashMap<Vec<FeatureItem>, usize> = HashMap::new();
    let mut dropped = Vec::new();

    for rule in ranked {
        let general = by_consequent.get(&rule.consequent).and_then(|idx| {
            idx.iter()
                .copied()
                .find(|&k| is_subset(&kept[k].antecedent, &rule.antecedent))
        });
        if let Some(k) = general {
            dropped.push(DroppedRule {
                rule,
                reason: DropReason::Cond1,
                kept_by: kept[k].clone(),
            });
            continue;
        }
        // any kept rule with this antecedent has a different consequent here
        if let Some(&k) = by_antecedent.get(&rule.antecedent) {
            dropped.push(DroppedRule {
                rule,
                reason: DropReason::Cond3,
                kept_by: kept[k].clone(),
            });
            continue;
        }
        let k = kept.len();
        by_consequent.entry(rule.consequent.clone()).or_default().push(k);
        by_antecedent.insert(rule.antecedent.clone(), k);
        kept.push(rule);
    }
    PruneReport {
        kept: RankedRuleSet { rules: kept },
        dropped,
    }
}
