//! Greedy selection of language-specific entries under a budget.

use lavs::{apply_splits, select_splits, Languages, Result, TokenDistribution, Vocabulary};

fn main() -> Result<()> {
    let langs = Languages::new(["a", "b", "c"])?;
    let vocab = Vocabulary::from_shared(["x", "y", "z"])?;
    let probs = [[0.5, 0.3, 0.2], [0.1, 0.4, 0.5], [0.45, 0.05, 0.5]];
    let dists = langs
        .iter()
        .zip(probs)
        .map(|(l, p)| TokenDistribution::from_probs(l.clone(), p.to_vec()))
        .collect::<Result<Vec<_>>>()?;

    for budget in [0, 2, 5] {
        let plan = select_splits(&vocab, &dists, budget)?;
        let out = apply_splits(&vocab, &plan)?;
        let added: Vec<&str> = out.ids().skip(vocab.len()).map(|id| out.surface(id)).collect();
        println!("N={budget}: |V'|={} added {:?}", out.len(), added);
    }
    let plan = select_splits(&vocab, &dists, 2)?;
    print!("{}", plan.to_json(&vocab)?);
    Ok(())
}
