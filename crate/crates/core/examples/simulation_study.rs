//! Monte Carlo comparison of NB1, NB2 and the random baseline in the
//! 200-poster / 100-judge setting.
//!
//! ```text
//! cargo run --release --example simulation_study -- [iterations] [seed]
//! ```

use std::time::Instant;

use nbibd::simulation::{Metric, SimParams};
use nbibd::{run_study, GeneratorKind};

fn main() {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let params = SimParams {
        iterations,
        seed,
        ..SimParams::standard()
    };

    let started = Instant::now();
    let report = run_study(&params).expect("valid parameters");
    println!(
        "{} iterations in {:.1}s ({} dropped), {} disconnected random designs",
        report.iterations.len(),
        started.elapsed().as_secs_f64(),
        report.failures.len(),
        report.disconnected_random
    );

    println!("\n{:<8} {:<16} {:>8} {:>8} {:>8} {:>8} {:>8}", "design", "metric", "mean", "q2.5", "median", "q97.5", "max");
    for s in &report.summaries {
        let d = &s.distribution;
        println!(
            "{:<8} {:<16} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            s.kind.label(),
            s.metric.label(),
            d.mean,
            d.q025,
            d.q50,
            d.q975,
            d.max
        );
    }

    println!("\npaired differences (first - second), 95% CI of the mean");
    for d in &report.differences {
        println!(
            "{:>6}-{:<6} {:<16} {:>9.4} [{:>8.4}, {:>8.4}]{}",
            d.first.label(),
            d.second.label(),
            d.metric.label(),
            d.mean,
            d.ci_low,
            d.ci_high,
            if d.excludes_zero() { "  *" } else { "" }
        );
    }

    let nb1 = report.summary(GeneratorKind::Nb1, Metric::WinProp).unwrap();
    println!(
        "\nNB1 awards {:.1} of the 30 truly best posters at the median",
        nb1.q50 * 30.0
    );
}
