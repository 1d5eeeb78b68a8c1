//! Count two small corpora and print their smoothed token distributions.

use lavs::{distribution, ingest_corpus, Languages, Result, UnkPolicy, Vocabulary};

fn main() -> Result<()> {
    let langs = Languages::new(["en", "de"])?;
    let vocab = Vocabulary::from_shared(["▁the", "▁der", "▁haus", "▁house", "s"])?;

    let en = ingest_corpus(
        [vec!["▁the", "▁house"], vec!["▁the", "▁house", "s"]],
        langs.require("en")?,
        &vocab,
        UnkPolicy::Strict,
    )?;
    let de = ingest_corpus(
        [vec!["▁der", "▁haus"], vec!["▁der", "▁haus", "▁xyz"]],
        langs.require("de")?,
        &vocab,
        UnkPolicy::Drop,
    )?;
    println!("de dropped {} unknown token(s)", de.dropped);

    for stats in [&en, &de] {
        let dist = distribution(stats, &vocab)?;
        println!("{} ({} tokens):", stats.lang, stats.total);
        for id in vocab.ids() {
            println!("  {:>8} count={} p={:.4}", vocab.surface(id), stats.count(id), dist.prob(id));
        }
    }
    print!("{}", en.to_json(&vocab)?);
    Ok(())
}
