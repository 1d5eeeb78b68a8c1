//! Pairwise KL divergence between three languages and the mean objective.

use lavs::corpus::CorpusStats;
use lavs::{distribution, objective, pairwise_kl, Languages, Result, Vocabulary};

fn main() -> Result<()> {
    let langs = Languages::new(["cs", "de", "fr"])?;
    let vocab = Vocabulary::from_shared(["a", "b", "c", "d"])?;
    let counts = [vec![40, 30, 20, 10], vec![35, 30, 25, 10], vec![5, 10, 25, 60]];

    let dists = langs
        .iter()
        .zip(counts)
        .map(|(l, c)| distribution(&CorpusStats::from_counts(l.clone(), c), &vocab))
        .collect::<Result<Vec<_>>>()?;

    let matrix = pairwise_kl(&dists)?;
    print!("{}", matrix.to_csv());
    println!("objective = {:.6}", objective(&vocab, &dists)?);
    Ok(())
}
