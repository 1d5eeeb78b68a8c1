//! Split every token used by more than one language.

use lavs::corpus::{usage_from_stats, CorpusStats};
use lavs::{split_all, Languages, Result, Vocabulary};

fn main() -> Result<()> {
    let langs = Languages::new(["a", "b"])?;
    let vocab = Vocabulary::from_shared(["t1", "t2", "t3"])?;
    let stats = vec![
        CorpusStats::from_counts(langs.require("a")?.clone(), vec![4, 2, 0]),
        CorpusStats::from_counts(langs.require("b")?.clone(), vec![0, 3, 5]),
    ];
    let usage = usage_from_stats(&vocab, &stats, 0)?;
    let separated = split_all(&vocab, &usage)?;
    print!("{}", separated.to_text());
    println!(
        "{} -> {} entries, fully separated: {}",
        vocab.len(),
        separated.len(),
        separated.is_fully_separated()
    );
    Ok(())
}
