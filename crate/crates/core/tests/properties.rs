use std::collections::BTreeSet;

use proptest::prelude::*;
use texmine_core::classifier::{score_abnormality, suggest_keywords, MatchTally};
use texmine_core::eval::roc;
use texmine_core::miner::{count_support, mine, AssociationRule, ItemSet, MiningConfig};
use texmine_core::pipeline::with_jobs;
use texmine_core::pruner::{compare_rank, RankedRuleSet};
use texmine_core::texture::{
    cooccurrence, descriptors, extract_features, quantize, Direction, ExtractionConfig,
    NormalizedMatrix, DESCRIPTOR_COUNT,
};
use texmine_core::transactions::{FeatureItem, Item, Transaction};
use texmine_core::GrayImage;

fn raster(max_w: usize, max_h: usize, levels: u16) -> impl Strategy<Value = GrayImage> {
    (1..=max_w, 1..=max_h).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(0..levels, w * h)
            .prop_map(move |px| GrayImage::new(w, h, levels - 1, px).unwrap())
    })
}

fn brute_pairs(img: &GrayImage, d: usize, dir: Direction) -> Vec<Vec<u64>> {
    let g = img.max_value() as usize + 1;
    let mut counts = vec![vec![0u64; g]; g];
    let (dr, dc) = dir.offset();
    for r1 in 0..img.height() {
        for c1 in 0..img.width() {
            for r2 in 0..img.height() {
                for c2 in 0..img.width() {
                    let (dr2, dc2) = (r2 as isize - r1 as isize, c2 as isize - c1 as isize);
                    if dr2 == dr * d as isize && dc2 == dc * d as isize {
                        counts[img.get(c1, r1) as usize][img.get(c2, r2) as usize] += 1;
                    }
                }
            }
        }
    }
    counts
}

fn l1_tolerance(terms: impl Iterator<Item = f64>) -> f64 {
    1e-12 * terms.map(f64::abs).sum::<f64>().max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn cooccurrence_matches_pair_enumeration(img in raster(7, 7, 4), d in 1usize..4) {
        let mut total = 0;
        for dir in Direction::ALL {
            let m = cooccurrence(&img, 4, d, dir).unwrap();
            let brute = brute_pairs(&img, d, dir);
            prop_assert_eq!(m.rows(), brute.clone());
            let sum: u64 = brute.iter().flatten().sum();
            prop_assert_eq!(m.total(), sum);
            total += m.total();
            if m.total() > 0 {
                let p = m.normalize().unwrap();
                prop_assert!((p.cells().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        let (w, h) = (img.width(), img.height());
        let expected = h * w.saturating_sub(d)
            + 2 * h.saturating_sub(d) * w.saturating_sub(d)
            + h.saturating_sub(d) * w;
        prop_assert_eq!(total as usize, expected);
    }

    #[test]
    fn descriptor_ranges_and_contrast_diagonal(raw in proptest::collection::vec(0u32..5, 16)) {
        prop_assume!(raw.iter().any(|&c| c > 0));
        let sum: u32 = raw.iter().sum();
        let cells: Vec<f64> = raw.iter().map(|&c| c as f64 / sum as f64).collect();
        let p = NormalizedMatrix::from_cells(4, cells).unwrap();
        let d = descriptors(&p, &ExtractionConfig::default());
        prop_assert!((0.0..=1.0).contains(&d.energy));
        prop_assert!((0.0..=1.0).contains(&d.maximum_probability));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d.homogeneity));
        prop_assert!(d.entropy >= 0.0 && d.contrast >= 0.0 && d.variance >= 0.0);
        prop_assert!(d.correlation.abs() <= 1.0 + 1e-12);
        let diagonal_only = (0..4).all(|i| (0..4).all(|j| i == j || raw[i * 4 + j] == 0));
        prop_assert_eq!(d.contrast == 0.0, diagonal_only);
    }

    #[test]
    fn odd_exponent_descriptors_match_oracle(
        raw in proptest::collection::vec(0.0f64..1.0, 16),
        k_idm in 1i32..4,
        k_ct in 1i32..6,
    ) {
        let sum: f64 = raw.iter().sum();
        prop_assume!(sum > 0.0);
        let p: Vec<f64> = raw.iter().map(|v| v / sum).collect();
        let cfg = ExtractionConfig { gray_levels: 4, distance: 1, idm_exponent: k_idm, cluster_exponent: k_ct };
        let d = descriptors(&NormalizedMatrix::from_cells(4, p.clone()).unwrap(), &cfg);
        let cell = |i: usize, j: usize| p[i * 4 + j];
        let mu: f64 = (0..16).map(|k| (k / 4) as f64 * p[k]).sum();
        let idm_terms: Vec<f64> = (0..16)
            .filter(|k| k / 4 != k % 4)
            .map(|k| cell(k / 4, k % 4) / ((k / 4) as f64 - (k % 4) as f64).abs().powi(k_idm))
            .collect();
        let ct_terms: Vec<f64> = (0..16)
            .map(|k| ((k / 4 + k % 4) as f64 - 2.0 * mu).powi(k_ct) * cell(k / 4, k % 4))
            .collect();
        let idm: f64 = idm_terms.iter().sum();
        let ct: f64 = ct_terms.iter().sum();
        prop_assert!((d.inverse_difference_moment - idm).abs() <= l1_tolerance(idm_terms.into_iter()));
        prop_assert!((d.cluster_tendency - ct).abs() <= l1_tolerance(ct_terms.into_iter()));
    }

    #[test]
    fn mirrored_image_keeps_vertical_features(img in raster(9, 9, 256)) {
        prop_assume!(img.height() >= 2 && img.width() >= 2);
        let (w, h) = (img.width(), img.height());
        let mirrored: Vec<u16> = (0..h).flat_map(|y| (0..w).rev().map(move |x| (x, y))).map(|(x, y)| img.get(x, y)).collect();
        let mirrored = GrayImage::new(w, h, 255, mirrored).unwrap();
        let cfg = ExtractionConfig::default();
        let a = extract_features(&img, &cfg).unwrap();
        let b = extract_features(&mirrored, &cfg).unwrap();
        let v = 2 * DESCRIPTOR_COUNT..3 * DESCRIPTOR_COUNT;
        prop_assert_eq!(&a[v.clone()], &b[v]);
    }
}

#[test]
fn golden_feature_vector() {
    // 6x5 ramp-and-checker raster at 8 bits; values frozen from a run and
    // cross-checked below against the pair enumeration for 0 degrees.
    let px: Vec<u16> = (0..30).map(|i| ((i * 37 + (i / 6) * 91) % 256) as u16).collect();
    let img = GrayImage::new(6, 5, 255, px).unwrap();
    let cfg = ExtractionConfig { gray_levels: 4, ..ExtractionConfig::default() };
    let f = extract_features(&img, &cfg).unwrap();
    let got: Vec<String> = f.iter().map(|&x| texmine_core::numfmt::sig17(x)).collect();
    let golden: &[&str] = &GOLDEN;
    assert_eq!(got, golden);

    let q = quantize(&img, 4).unwrap();
    let brute = brute_pairs(&q, 1, Direction::Deg0);
    let total: u64 = brute.iter().flatten().sum();
    let contrast: f64 = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j): (usize, usize)| (i.abs_diff(j) as f64).powi(2) * brute[i][j] as f64 / total as f64)
        .sum();
    assert!((f[2] - contrast).abs() < 1e-12);
}

const GOLDEN: [&str; 40] = [
    "2.0470505587205428e0", "1.3280000000000000e-1", "1.5200000000000000e0", "6.9000000000000006e-1",
    "1.3599999999999999e0", "1.2320000000000000e0", "1.6000000000000000e-1", "4.5333333333333331e-1",
    "3.4079999999999999e0", "3.8422012703924380e-1", "1.9730014063936125e0", "1.5000000000000002e-1",
    "1.1000000000000001e0", "8.2500000000000007e-1", "1.5000000000000000e0", "1.3025000000000002e0",
    "2.0000000000000001e-1", "2.1111111111111114e-1", "4.1100000000000003e0", "5.8039256477000001e-1",
    "1.6664530027229569e0", "2.0138888888888890e-1", "2.5416666666666670e0", "5.1041666666666674e-1",
    "1.4375000000000000e0", "1.2881944444444446e0", "2.5000000000000000e-1", "6.8981481481481488e-1",
    "2.6111111111111116e0", "1.3494158496151600e-2", "2.0331436209409195e0", "1.3500000000000001e-1",
    "3.5499999999999998e0", "3.8749999999999996e-1", "1.4250000000000000e0", "1.2949999999999999e0",
    "1.4999999999999999e-1", "5.2916666666666667e-1", "1.6299999999999999e0", "-3.7133510473637638e-1",
];

fn rule(body: &[(u16, u16)], head: &str, support: f64, confidence: f64) -> AssociationRule {
    AssociationRule {
        antecedent: body.iter().map(|&(f, b)| FeatureItem::new(f, b)).collect::<BTreeSet<_>>().into_iter().collect(),
        consequent: head.into(),
        support,
        confidence,
    }
}

fn arb_rule() -> impl Strategy<Value = AssociationRule> {
    (
        proptest::collection::vec((0u16..4, 0u16..2), 1..4),
        prop::sample::select(vec!["normal", "benign", "malign"]),
        1u32..4,
        prop::sample::select(vec![0.97, 0.98, 1.0]),
    )
        .prop_map(|(body, head, s, c)| rule(&body, head, s as f64 / 4.0, c))
}

fn arb_db() -> impl Strategy<Value = Vec<Transaction>> {
    proptest::collection::vec(
        (proptest::collection::vec(0u16..3, 4), 0usize..3),
        1..25,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (bins, kw))| {
                let mut items: Vec<Item> = bins.iter().enumerate().map(|(f, &b)| Item::feature(f as u16, b)).collect();
                items.push(Item::keyword(["normal", "benign", "malign"][kw]));
                Transaction::new(format!("t{i}"), items)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn rank_is_a_total_order(a in arb_rule(), b in arb_rule(), c in arb_rule()) {
        use std::cmp::Ordering::*;
        prop_assert_eq!(compare_rank(&a, &b), compare_rank(&b, &a).reverse());
        if compare_rank(&a, &b) == Equal {
            prop_assert_eq!(&a, &b);
        }
        if compare_rank(&a, &b) != Greater && compare_rank(&b, &c) != Greater {
            prop_assert_ne!(compare_rank(&a, &c), Greater);
        }
    }

    #[test]
    fn mined_output_is_consistent(d in arb_db(), sigma in 1u32..6, conf in prop::sample::select(vec![0.5, 0.97])) {
        let cfg = MiningConfig { min_support: sigma as f64 / 10.0, min_confidence: conf, max_level: None };
        let out = mine(&d, &cfg).unwrap();
        let n = d.len();
        let frequent: BTreeSet<Vec<Item>> = out.frequent.iter().map(|s| s.items.clone()).collect();
        for set in &out.frequent {
            prop_assert!(set.support_count as f64 / n as f64 >= cfg.min_support);
            // every keyword-anchored subset one item smaller is also reported
            if set.items.len() > 2 {
                for skip in 0..set.items.len() - 1 {
                    let mut sub = set.items.clone();
                    sub.remove(skip);
                    prop_assert!(frequent.contains(&sub));
                }
            }
        }
        for r in &out.rules {
            prop_assert!(!r.antecedent.is_empty());
            let body: Vec<Item> = r.antecedent.iter().map(|f| Item::Feature(*f)).collect();
            let mut sets = vec![
                ItemSet::new(body.iter().cloned().chain([Item::keyword(&r.consequent)])),
                ItemSet::new(body),
            ];
            count_support(&mut sets, &d);
            prop_assert_eq!(r.support, sets[0].support);
            prop_assert!(r.support <= sets[1].support);
            prop_assert_eq!(r.confidence, sets[0].support_count as f64 / sets[1].support_count as f64);
            prop_assert!(r.confidence >= cfg.min_confidence);
        }
        let single = with_jobs(Some(1), || mine(&d, &cfg).unwrap());
        let many = with_jobs(Some(4), || mine(&d, &cfg).unwrap());
        prop_assert_eq!(&single, &out);
        prop_assert_eq!(&many, &out);
    }

    #[test]
    fn suggestions_shrink_as_threshold_grows(
        rules in proptest::collection::vec(arb_rule(), 0..30),
        bins in proptest::collection::vec(0u16..2, 4),
        t1 in 0.0f64..1.0,
        t2 in 0.0f64..1.0,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let items: Vec<FeatureItem> = bins.iter().enumerate().map(|(f, &b)| FeatureItem::new(f as u16, b)).collect();
        let ranked = RankedRuleSet::from_rules(rules.clone());
        let s_lo = suggest_keywords(&items, &ranked, lo);
        let s_hi = suggest_keywords(&items, &ranked, hi);
        prop_assert!(s_hi.is_subset(&s_lo));

        let mut reversed = rules.clone();
        reversed.reverse();
        prop_assert_eq!(MatchTally::new(&items, &rules), MatchTally::new(&items, &reversed));

        let score = score_abnormality(&items, &ranked);
        prop_assert!((0.0..=1.0).contains(&score));
        let tally = MatchTally::new(&items, ranked.rules());
        for (head, ratio) in tally.ratios() {
            if head != "normal" {
                prop_assert!(score >= ratio);
            }
        }
    }

    #[test]
    fn roc_points_are_monotone(scores in proptest::collection::vec((0u8..6, any::<bool>()), 2..40)) {
        let mut scores: Vec<(f64, bool)> = scores.into_iter().map(|(s, l)| (s as f64 / 5.0, l)).collect();
        scores[0].1 = true;
        scores[1].1 = false;
        let r = roc(&scores).unwrap();
        // ascending threshold means descending rates
        for w in r.points.windows(2) {
            prop_assert!(w[0].threshold < w[1].threshold);
            prop_assert!(w[0].tpr >= w[1].tpr && w[0].fpr >= w[1].fpr);
        }
        prop_assert!((0.0..=1.0).contains(&r.auc));
        let last = r.points.last().unwrap();
        prop_assert_eq!((last.tpr, last.fpr), (0.0, 0.0));
        prop_assert_eq!((r.points[0].tpr, r.points[0].fpr), (1.0, 1.0));
    }
}
