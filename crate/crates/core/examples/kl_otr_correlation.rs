//! Per-source correlation between KL divergence and off-target rate.

use lavs::divergence::KlMatrix;
use lavs::{correlate_kl_otr, otr_matrix, DetectionTable, Orientation, Result};

fn main() -> Result<()> {
    let kl = KlMatrix::from_json(
        r#"{"langs":["a","b","c","d"],
            "values":[[0,0.1,0.4,0.9],[0.2,0,0.3,0.5],[0.6,0.2,0,0.1],[0.8,0.7,0.3,0]]}"#,
    )?;
    // Off-target counts out of ten outputs per direction.
    let off = [[0, 6, 4, 1], [7, 0, 5, 2], [3, 6, 0, 8], [1, 2, 5, 0]];
    let codes = ["a", "b", "c", "d"];
    let mut tsv = String::new();
    for (s, row) in off.iter().enumerate() {
        for (t, &k) in row.iter().enumerate() {
            if s == t {
                continue;
            }
            for i in 0..10 {
                let detected = if i < k { codes[s] } else { codes[t] };
                tsv.push_str(&format!("{}\t{}\t{}\n", codes[s], codes[t], detected));
            }
        }
    }
    let table = DetectionTable::parse_tsv(&tsv, &[])?;
    let matrix = otr_matrix(&table.records, None);
    for orientation in [Orientation::TargetToSource, Orientation::SourceToTarget] {
        let report = correlate_kl_otr(&matrix, &kl, orientation);
        println!("{orientation:?}: mean r = {:?}, sd = {:?}", report.mean, report.sd);
    }
    print!("{}", correlate_kl_otr(&matrix, &kl, Orientation::default()).to_json());
    Ok(())
}
