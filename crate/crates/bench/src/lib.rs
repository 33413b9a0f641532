//! Fixtures shared by the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texmine_core::transactions::{Item, Transaction};
use texmine_core::GrayImage;

/// Uniform random 8-bit raster.
pub fn random_image(size: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = (0..size * size).map(|_| rng.random_range(0..=255u16)).collect();
    GrayImage::new(size, size, 255, px).unwrap()
}

/// Transactions with one bin per feature, where the class keyword skews the
/// bin distribution so rules exist.
pub fn random_transactions(n: usize, features: u16, bins: u16, seed: u64) -> Vec<Transaction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let class = (i % 3) as u16;
            let mut items: Vec<Item> = (0..features)
                .map(|f| {
                    let bin = if rng.random_bool(0.7) {
                        (class * 3 + f) % bins
                    } else {
                        rng.random_range(0..bins)
                    };
                    Item::feature(f, bin)
                })
                .collect();
            items.push(Item::keyword(["normal", "benign", "malign"][class as usize]));
            Transaction::new(format!("t{i}"), items)
        })
        .collect()
}
