//! Score posters from judge ratings with the fixed-judge and random-judge
//! models and compare both against raw averages.
//!
//! ```text
//! cargo run --example fit_scores
//! ```

use nbibd::rng::Stream;
use nbibd::{fit_fixed, fit_random, generate, rank_posters, DesignConfig, GeneratorKind, ScoreTable};

fn main() {
    let (t, k, b) = (40, 4, 30);
    let config = DesignConfig::new(t, k, b, 5).expect("valid configuration");
    let (design, _) = generate(&config, GeneratorKind::Nb1).expect("generation succeeds");

    let mut rng = Stream::new(42);
    let quality: Vec<f64> = (0..t).map(|_| rng.normal(0.0, 7.0)).collect();
    let harshness: Vec<f64> = (0..b).map(|_| rng.normal(0.0, 6.0)).collect();
    let matrix: Vec<Vec<f64>> = (0..t)
        .map(|i| (0..b).map(|j| 80.0 + quality[i] + harshness[j] + rng.normal(0.0, 7.0)).collect())
        .collect();
    let scores = ScoreTable::from_matrix(&design, &matrix);

    let fixed = fit_fixed(&design, &scores).expect("connected design");
    let random = fit_random(&design, &scores).expect("fit succeeds");
    println!(
        "random-judge fit: judge variance {:.2}, error variance {:.2}, converged {}",
        random.var_judge.unwrap(),
        random.var_error,
        random.converged
    );

    let mut sums = vec![0.0; t];
    let mut counts = vec![0.0; t];
    for o in scores.observations() {
        sums[o.poster] += o.score;
        counts[o.poster] += 1.0;
    }
    let raw: Vec<f64> = sums.iter().zip(&counts).map(|(s, n)| s / n).collect();

    let truth_top = {
        let mut ids: Vec<usize> = (0..t).collect();
        ids.sort_by(|&a, &b| quality[b].total_cmp(&quality[a]));
        ids.truncate(8);
        ids
    };
    println!("\n{:>6} {:>8} {:>8} {:>8} {:>8} {:>6}", "poster", "truth", "raw", "fixed", "random", "rank");
    for &i in &truth_top {
        println!(
            "{i:>6} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>6}",
            80.0 + quality[i],
            raw[i],
            fixed.pmm[i],
            random.pmm[i],
            random.rank[i].unwrap()
        );
    }

    let awarded = rank_posters(&random, 8);
    let hits = awarded.iter().filter(|p| truth_top.contains(p)).count();
    println!("\ntop 8 by the random-judge model: {awarded:?} ({hits} of the true top 8)");
}
