//! Off-target rates, tier means and deviation shares from detections.

use lavs::{deviation_distribution, otr_matrix, tier_aggregate, DetectionTable, Result, TierSpec};

const DETECTIONS: &str = "\
en\tde\tde
en\tde\tde
de\tfr\tde
de\tfr\tfr
fr\tro\ten
fr\tro\tro
ro\tde\tother
ro\tde\tde
";

fn main() -> Result<()> {
    let table = DetectionTable::parse_tsv(DETECTIONS, &[])?;
    let matrix = otr_matrix(&table.records, Some("en"));
    print!("{}", matrix.to_csv());
    println!("zero-shot mean: {:?}", matrix.grand_mean());
    println!("pooled rate:    {:?}", matrix.pooled_rate());

    let tiers = TierSpec::parse("de=high,fr=high,ro=low,en=high")?;
    println!("{:?}", tier_aggregate(&matrix, &tiers)?);

    for s in deviation_distribution(&table.records).shares {
        println!("{:>6} {:.2}", s.category.to_string(), s.share);
    }
    Ok(())
}
