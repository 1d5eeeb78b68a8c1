//! Per-language decoding masks over a vocabulary with specific entries.

use lavs::corpus::CorpusStats;
use lavs::mask::read_binary_mask;
use lavs::vocab::TokenEntry;
use lavs::{build_mask, mask_report, Languages, Result, Vocabulary};

fn main() -> Result<()> {
    let langs = Languages::new(["de", "fr"])?;
    let (de, fr) = (langs.require("de")?.clone(), langs.require("fr")?.clone());
    let vocab = Vocabulary::new(vec![
        TokenEntry::shared("</s>"),
        TokenEntry::shared("▁la"),
        TokenEntry::shared("▁die"),
        TokenEntry::shared("n"),
        TokenEntry::specific("n", de.clone()),
        TokenEntry::specific("n", fr.clone()),
    ])?;
    let de_stats = CorpusStats::from_counts(de.clone(), vec![0, 0, 9, 0, 4, 0]);
    let fr_stats = CorpusStats::from_counts(fr.clone(), vec![0, 7, 0, 0, 0, 3]);

    let masks = vec![
        build_mask(&de, &de_stats, &vocab, &["</s>"], 0)?,
        build_mask(&fr, &fr_stats, &vocab, &["</s>"], 0)?,
    ];
    for m in &masks {
        print!("[{}]\n{}", m.lang, m.to_text(&vocab)?);
    }
    for (lang, size) in mask_report(&masks) {
        println!("{lang}: {size} allowed");
    }
    let bits = read_binary_mask(&masks[0].to_binary())?;
    println!("binary round trip keeps {} bits", bits.count_ones());
    Ok(())
}
