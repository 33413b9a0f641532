//! Level-wise, keyword-anchored frequent itemset mining producing
//! `features => keyword` rules.
//!
//! Level 0 holds frequent keywords and level 1 frequent feature items. Level
//! 2 pairs every frequent keyword with every frequent feature item. From
//! level 3 on, candidates are joins of frequent sets that carry the same
//! keyword and differ in their last feature item; a candidate survives only
//! if every subset obtained by dropping one feature is frequent. Before each
//! counting pass the table is reduced to the items that still occur in some
//! frequent set of the previous level.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transactions::{FeatureItem, Item, Transaction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    /// Minimum support as a fraction of the database size.
    pub min_support: f64,
    pub min_confidence: f64,
    /// Largest itemset size counted, keyword included. `None` mines to exhaustion.
    pub max_level: Option<usize>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            min_support: 0.10,
            min_confidence: 0.97,
            max_level: None,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("min support", self.min_support), ("min confidence", self.min_confidence)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if let Some(l) = self.max_level {
            if l < 2 {
                return Err(Error::Config(format!("max level must be at least 2, got {l}")));
            }
        }
        Ok(())
    }
}

#[inline]
fn meets_support(count: usize, n: usize, min_support: f64) -> bool {
    count as f64 / n as f64 >= min_support
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemSet {
    /// Sorted, duplicate-free.
    pub items: Vec<Item>,
    pub support_count: usize,
    pub support: f64,
}

impl ItemSet {
    pub fn new(items: impl IntoIterator<Item = Item>) -> Self {
        let items: BTreeSet<Item> = items.into_iter().collect();
        Self {
            items: items.into_iter().collect(),
            support_count: 0,
            support: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    /// Sorted feature items.
    pub antecedent: Vec<FeatureItem>,
    /// Keyword token, without the `kw_` prefix.
    pub consequent: String,
    pub support: f64,
    pub confidence: f64,
}

impl AssociationRule {
    /// Rule dump line, e.g. `f3_b2 & f17_b0 => kw_malign support=0.12 confidence=0.98`.
    pub fn dump_line(&self) -> String {
        let body: Vec<String> = self.antecedent.iter().map(FeatureItem::to_string).collect();
        format!(
            "{} => kw_{} support={} confidence={}",
            body.join(" & "),
            self.consequent,
            self.support,
            self.confidence
        )
    }

    /// True when `items` (sorted) contains the whole antecedent.
    pub fn matches(&self, items: &[FeatureItem]) -> bool {
        self.antecedent.iter().all(|a| items.binary_search(a).is_ok())
    }
}

/// Fills `support_count` and `support` for each itemset by subset counting.
pub fn count_support(itemsets: &mut [ItemSet], transactions: &[Transaction]) {
    let n = transactions.len();
    let counts: Vec<usize> = itemsets
        .par_iter()
        .map(|set| {
            transactions
                .iter()
                .filter(|t| set.items.iter().all(|i| t.items.contains(i)))
                .count()
        })
        .collect();
    for (set, c) in itemsets.iter_mut().zip(counts) {
        set.support_count = c;
        set.support = if n == 0 { 0.0 } else { c as f64 / n as f64 };
    }
}

/// Dense item encoding: ids follow item order, so feature ids precede keyword ids.
struct Encoded {
    items: Vec<Item>,
    first_keyword: u32,
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl Encoded {
    fn new(transactions: &[Transaction]) -> Self {
        let universe: BTreeSet<&Item> = transactions.iter().flat_map(|t| t.items.iter()).collect();
        let items: Vec<Item> = universe.into_iter().cloned().collect();
        let index: HashMap<&Item, u32> = items.iter().enumerate().map(|(i, it)| (it, i as u32)).collect();
        let first_keyword = items.iter().position(Item::is_keyword).unwrap_or(items.len()) as u32;
        let words = items.len().div_ceil(64).max(1);
        let rows = transactions
            .iter()
            .map(|t| {
                let mut row = vec![0u64; words];
                for it in &t.items {
                    let id = index[it] as usize;
                    row[id / 64] |= 1 << (id % 64);
                }
                row
            })
            .collect();
        Self {
            items,
            first_keyword,
            words,
            rows,
        }
    }
}

#[inline]
fn has(row: &[u64], id: u32) -> bool {
    row[id as usize / 64] >> (id % 64) & 1 == 1
}

/// Counts each candidate (a list of item ids) over the rows, sharding rows
/// across workers and summing shard counts.
fn count_rows(candidates: &[Vec<u32>], rows: &[Vec<u64>]) -> Vec<usize> {
    const SHARD: usize = 64;
    let zero = || vec![0usize; candidates.len()];
    rows.par_chunks(SHARD)
        .map(|shard| {
            let mut counts = zero();
            for row in shard {
                for (c, cand) in counts.iter_mut().zip(candidates) {
                    if cand.iter().all(|&id| has(row, id)) {
                        *c += 1;
                    }
                }
            }
            counts
        })
        .reduce(zero, |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        })
}

/// Keeps only the items in `keep` and drops rows with fewer than `min_len` items.
fn filter_table(rows: &[Vec<u64>], keep: &[u64], min_len: usize) -> Vec<Vec<u64>> {
    rows.iter()
        .filter_map(|row| {
            let masked: Vec<u64> = row.iter().zip(keep).map(|(r, k)| r & k).collect();
            let len: u32 = masked.iter().map(|w| w.count_ones()).sum();
            (len as usize >= min_len).then_some(masked)
        })
        .collect()
}

/// A frequent keyword-anchored set: sorted feature ids plus the keyword id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Anchored {
    keyword: u32,
    features: Vec<u32>,
}

impl Anchored {
    fn ids(&self) -> Vec<u32> {
        let mut v = self.features.clone();
        v.push(self.keyword);
        v
    }
}

/// Joins same-keyword sets sharing all but their last feature item.
fn join(level: &[Anchored]) -> Vec<Anchored> {
    let mut out = Vec::new();
    // `level` is sorted, so a join group is a contiguous run
    let mut start = 0;
    while start < level.len() {
        let head = &level[start];
        let prefix = &head.features[..head.features.len() - 1];
        let mut end = start + 1;
        while end < level.len()
            && level[end].keyword == head.keyword
            && &level[end].features[..prefix.len()] == prefix
        {
            end += 1;
        }
        for a in start..end {
            for b in a + 1..end {
                let mut features = level[a].features.clone();
                features.push(*level[b].features.last().unwrap());
                out.push(Anchored {
                    keyword: head.keyword,
                    features,
                });
            }
        }
        start = end;
    }
    out
}

/// Drops candidates having an infrequent one-feature-smaller subset.
fn prune_candidates(candidates: Vec<Anchored>, previous: &HashSet<&Anchored>) -> Vec<Anchored> {
    candidates
        .into_iter()
        .filter(|c| {
            (0..c.features.len()).all(|skip| {
                let sub = Anchored {
                    keyword: c.keyword,
                    features: c
                        .features
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != skip)
                        .map(|(_, &f)| f)
                        .collect(),
                };
                previous.contains(&sub)
            })
        })
        .collect()
}

/// Frequent itemsets found by a mining run, plus the rules derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct MiningOutcome {
    /// Levels 0 and 1 (single keywords and single feature items) followed by
    /// every frequent keyword-anchored set, in level order.
    pub frequent: Vec<ItemSet>,
    pub rules: Vec<AssociationRule>,
}

pub fn mine_rules(transactions: &[Transaction], cfg: &MiningConfig) -> Result<Vec<AssociationRule>> {
    Ok(mine(transactions, cfg)?.rules)
}

/// Runs the level-wise search. Rules are returned sorted by
/// (antecedent, consequent).
pub fn mine(transactions: &[Transaction], cfg: &MiningConfig) -> Result<MiningOutcome> {
    cfg.validate()?;
    if transactions.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let n = transactions.len();
    let enc = Encoded::new(transactions);
    let max_level = cfg.max_level.unwrap_or(usize::MAX);
    let to_set = |ids: &[u32], count: usize| ItemSet {
        items: ids.iter().map(|&i| enc.items[i as usize].clone()).collect(),
        support_count: count,
        support: count as f64 / n as f64,
    };

    // levels 0 and 1: single-item counts
    let singles: Vec<Vec<u32>> = (0..enc.items.len() as u32).map(|i| vec![i]).collect();
    let single_counts = count_rows(&singles, &enc.rows);
    let frequent_single: Vec<u32> = (0..enc.items.len() as u32)
        .filter(|&i| meets_support(single_counts[i as usize], n, cfg.min_support))
        .collect();
    let (f1, f0): (Vec<u32>, Vec<u32>) =
        frequent_single.iter().partition(|&&i| i < enc.first_keyword);
    let mut frequent: Vec<ItemSet> = f0
        .iter()
        .chain(&f1)
        .map(|&i| to_set(&[i], single_counts[i as usize]))
        .collect();

    // level 2: (feature, keyword) pairs over the full table
    let mut level: Vec<(Anchored, usize)> = Vec::new();
    if max_level >= 2 {
        let c2: Vec<Anchored> = f0
            .iter()
            .flat_map(|&k| {
                f1.iter().map(move |&f| Anchored {
                    keyword: k,
                    features: vec![f],
                })
            })
            .collect();
        level = count_and_filter(c2, &enc.rows, n, cfg.min_support);
    }
    let mut anchored: Vec<(Anchored, usize)> = Vec::new();
    let mut table = enc.rows.clone();
    let mut size = 2;
    loop {
        level.sort_by(|a, b| a.0.cmp(&b.0));
        let keep_mask = {
            let mut mask = vec![0u64; enc.words];
            for (a, _) in &level {
                for id in a.ids() {
                    mask[id as usize / 64] |= 1 << (id % 64);
                }
            }
            mask
        };
        let sets: Vec<Anchored> = level.iter().map(|(a, _)| a.clone()).collect();
        anchored.append(&mut level);
        if sets.is_empty() || size >= max_level {
            break;
        }
        size += 1;
        let previous: HashSet<&Anchored> = sets.iter().collect();
        let candidates = prune_candidates(join(&sets), &previous);
        if candidates.is_empty() {
            break;
        }
        table = filter_table(&table, &keep_mask, size);
        level = count_and_filter(candidates, &table, n, cfg.min_support);
    }

    // antecedent supports come from the unfiltered table
    let mut antecedents: Vec<Vec<u32>> = anchored.iter().map(|(a, _)| a.features.clone()).collect();
    antecedents.sort();
    antecedents.dedup();
    let antecedent_counts: HashMap<Vec<u32>, usize> = antecedents
        .iter()
        .cloned()
        .zip(count_rows(&antecedents, &enc.rows))
        .collect();

    let mut rules = Vec::new();
    for (set, count) in &anchored {
        frequent.push(to_set(&set.ids(), *count));
        let denom = antecedent_counts[&set.features];
        if denom == 0 {
            return Err(Error::Invariant("frequent set with zero antecedent support".into()));
        }
        let confidence = *count as f64 / denom as f64;
        if confidence >= cfg.min_confidence {
            rules.push(AssociationRule {
                antecedent: set
                    .features
                    .iter()
                    .map(|&f| match &enc.items[f as usize] {
                        Item::Feature(fi) => *fi,
                        Item::Keyword(_) => unreachable!("feature ids precede keyword ids"),
                    })
                    .collect(),
                consequent: match &enc.items[set.keyword as usize] {
                    Item::Keyword(k) => k.clone(),
                    Item::Feature(_) => unreachable!("keyword ids follow feature ids"),
                },
                support: *count as f64 / n as f64,
                confidence,
            });
        }
    }
    rules.sort_by(|a, b| (&a.antecedent, &a.consequent).cmp(&(&b.antecedent, &b.consequent)));
    Ok(MiningOutcome { frequent, rules })
}

fn count_and_filter(
    candidates: Vec<Anchored>,
    rows: &[Vec<u64>],
    n: usize,
    min_support: f64,
) -> Vec<(Anchored, usize)> {
    let ids: Vec<Vec<u32>> = candidates.iter().map(Anchored::ids).collect();
    let counts = count_rows(&ids, rows);
    candidates
        .into_iter()
        .zip(counts)
        .filter(|&(_, c)| meets_support(c, n, min_support))
        .collect()
}

/// Largest number of distinct items the exhaustive search accepts.
pub const ORACLE_MAX_ITEMS: usize = 20;

/// Exhaustive reference: every subset of feature items paired with every
/// keyword, filtered by support and confidence. Shares no code with `mine`.
pub fn brute_force_frequent(
    transactions: &[Transaction],
    cfg: &MiningConfig,
) -> Result<Vec<AssociationRule>> {
    cfg.validate()?;
    if transactions.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let universe: BTreeSet<&Item> = transactions.iter().flat_map(|t| t.items.iter()).collect();
    if universe.len() > ORACLE_MAX_ITEMS {
        return Err(Error::OracleSizeGuard(universe.len()));
    }
    let features: Vec<FeatureItem> = universe
        .iter()
        .filter_map(|i| match i {
            Item::Feature(f) => Some(*f),
            Item::Keyword(_) => None,
        })
        .collect();
    let keywords: Vec<&str> = universe
        .iter()
        .filter_map(|i| match i {
            Item::Keyword(k) => Some(k.as_str()),
            Item::Feature(_) => None,
        })
        .collect();
    let n = transactions.len();
    let mut rules = Vec::new();
    for mask in 1u32..(1 << features.len()) {
        let body: Vec<FeatureItem> = (0..features.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| features[b])
            .collect();
        if cfg.max_level.is_some_and(|l| body.len() + 1 > l) {
            continue;
        }
        let covering: Vec<&Transaction> = transactions
            .iter()
            .filter(|t| body.iter().all(|f| t.items.contains(&Item::Feature(*f))))
            .collect();
        if covering.is_empty() {
            continue;
        }
        for kw in &keywords {
            let hits = covering
                .iter()
                .filter(|t| t.items.contains(&Item::Keyword(kw.to_string())))
                .count();
            if hits as f64 / n as f64 >= cfg.min_support {
                let confidence = hits as f64 / covering.len() as f64;
                if confidence >= cfg.min_confidence {
                    rules.push(AssociationRule {
                        antecedent: body.clone(),
                        consequent: kw.to_string(),
                        support: hits as f64 / n as f64,
                        confidence,
                    });
                }
            }
        }
    }
    rules.sort_by(|a, b| (&a.antecedent, &a.consequent).cmp(&(&b.antecedent, &b.consequent)));
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(items: &[&str]) -> Transaction {
        Transaction::new(
            "t",
            items.iter().map(|s| match s.strip_prefix("kw_") {
                Some(k) => Item::keyword(k),
                None => Item::Feature(s.parse().unwrap()),
            }),
        )
    }

    fn cfg(min_support: f64, min_confidence: f64) -> MiningConfig {
        MiningConfig {
            min_support,
            min_confidence,
            max_level: None,
        }
    }

    #[test]
    fn support_counting() {
        let d = vec![tx(&["f1_b0", "kw_a"]), tx(&["f1_b1", "kw_a"])];
        let mut sets = vec![
            ItemSet::new([Item::feature(1, 0)]),
            ItemSet::new([]),
            ItemSet::new([Item::feature(9, 9)]),
        ];
        count_support(&mut sets, &d);
        assert_eq!(sets.iter().map(|s| s.support_count).collect::<Vec<_>>(), [1, 2, 0]);
        assert_eq!(sets[0].support, 0.5);
    }

    #[test]
    fn three_transaction_example() {
        let d = vec![
            tx(&["f1_b0", "kw_a"]),
            tx(&["f1_b0", "kw_a"]),
            tx(&["f2_b0", "kw_b"]),
        ];
        let expected = vec![AssociationRule {
            antecedent: vec![FeatureItem::new(1, 0)],
            consequent: "a".into(),
            support: 2.0 / 3.0,
            confidence: 1.0,
        }];
        assert_eq!(mine_rules(&d, &cfg(0.5, 0.97)).unwrap(), expected);
        assert_eq!(brute_force_frequent(&d, &cfg(0.5, 0.97)).unwrap(), expected);
        assert!(mine_rules(&d, &cfg(1.0, 0.97)).unwrap().is_empty());
    }

    #[test]
    fn single_transaction_full_support() {
        let d = vec![tx(&["f1_b0", "kw_a"])];
        let rules = brute_force_frequent(&d, &cfg(1.0, 0.97)).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!((rules[0].support, rules[0].confidence), (1.0, 1.0));
        assert_eq!(mine_rules(&d, &cfg(1.0, 0.97)).unwrap(), rules);
    }

    #[test]
    fn oracle_guard_and_empty_db() {
        let items: Vec<String> = (0..21).map(|i| format!("f{i}_b0")).collect();
        let refs: Vec<&str> = items.iter().map(String::as_str).collect();
        let err = brute_force_frequent(&[tx(&refs)], &cfg(0.5, 0.5)).unwrap_err();
        assert!(err.to_string().contains("oracle size guard"));
        assert!(matches!(mine_rules(&[], &cfg(0.5, 0.5)), Err(Error::EmptyDatabase)));
    }

    #[test]
    fn deeper_levels_and_cap() {
        let d = vec![
            tx(&["f0_b0", "f1_b0", "f2_b0", "kw_x"]),
            tx(&["f0_b0", "f1_b0", "f2_b0", "kw_x"]),
            tx(&["f0_b0", "f1_b1", "f2_b0", "kw_y"]),
            tx(&["f0_b0", "f1_b0", "f2_b1", "kw_y"]),
        ];
        let full = mine_rules(&d, &cfg(0.25, 0.97)).unwrap();
        assert_eq!(full, brute_force_frequent(&d, &cfg(0.25, 0.97)).unwrap());
        assert!(full.iter().any(|r| r.antecedent.len() == 3));

        let capped = MiningConfig { max_level: Some(3), ..cfg(0.25, 0.97) };
        let rules = mine_rules(&d, &capped).unwrap();
        assert!(rules.iter().all(|r| r.antecedent.len() <= 2));
        assert_eq!(rules, brute_force_frequent(&d, &capped).unwrap());
    }

    #[test]
    fn rule_dump_format() {
        let r = AssociationRule {
            antecedent: vec![FeatureItem::new(3, 2), FeatureItem::new(17, 0)],
            consequent: "malign".into(),
            support: 0.12,
            confidence: 0.98,
        };
        assert_eq!(r.dump_line(), "f3_b2 & f17_b0 => kw_malign support=0.12 confidence=0.98");
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0.0, 0.5).validate().is_err());
        assert!(cfg(0.5, 1.5).validate().is_err());
        assert!(MiningConfig { max_level: Some(1), ..Default::default() }.validate().is_err());
    }
}
