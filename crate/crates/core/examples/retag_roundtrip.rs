//! Retag a sentence for one language and strip the tags again.

use lavs::retag::{detag_text, retag_text};
use lavs::vocab::TokenEntry;
use lavs::{Languages, RetagMap, Result, UnkPolicy, Vocabulary};

fn main() -> Result<()> {
    let langs = Languages::new(["de", "en"])?;
    let de = langs.require("de")?.clone();
    let vocab = Vocabulary::new(vec![
        TokenEntry::shared("▁die"),
        TokenEntry::shared("▁Katze"),
        TokenEntry::shared("."),
        TokenEntry::specific("▁die", de.clone()),
    ])?;
    let map = RetagMap::new(&vocab);

    let line = "▁die ▁Katze .";
    let tagged = retag_text(line, &de, &map, UnkPolicy::Strict)?;
    let restored = detag_text(&tagged);
    println!("input:    {line}");
    println!("retagged: {tagged}");
    println!("detagged: {restored}");
    assert_eq!(restored, line);
    Ok(())
}
