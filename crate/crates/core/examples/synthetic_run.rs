//! Trains and evaluates on the generated three-class dataset, printing the report.

use std::time::Instant;

use texmine_core::image_io::load_manifest;
use texmine_core::pipeline::{evaluate, train, TrainConfig};
use texmine_core::synthetic::{write_dataset, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("texmine-synthetic");
    let mut cfg = TrainConfig::default();
    if let Some(l) = std::env::args().nth(1) {
        cfg.mining.max_level = l.parse().ok().filter(|&l: &usize| l > 0);
    }
    let start = Instant::now();
    let (train_csv, test_csv) = write_dataset(&dir, &SyntheticConfig::default())?;
    let outcome = train(&load_manifest(train_csv)?, &cfg)?;
    println!(
        "mined {} rules ({} frequent sets), kept {}",
        outcome.mined_rules,
        outcome.frequent_itemsets,
        outcome.model.rules.len()
    );
    let eval = evaluate(&outcome.model, &load_manifest(test_csv)?)?;
    print!("{}", eval.report_text());
    println!("elapsed {:?}", start.elapsed());
    Ok(())
}
