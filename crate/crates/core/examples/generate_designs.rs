//! Generate NB1, NB2 and random judge assignments for the same session and
//! compare how evenly they spread reviews.
//!
//! ```text
//! cargo run --example generate_designs -- [posters] [block_size] [judges] [seed]
//! ```

use nbibd::{generate, validate, DesignConfig, GeneratorKind};

fn main() {
    let mut args = std::env::args().skip(1);
    let mut next = |default: u64| args.next().map_or(default, |s| s.parse().expect("integer argument"));
    let t = next(200) as usize;
    let k = next(5) as usize;
    let b = next(100) as usize;
    let seed = next(7);

    let config = DesignConfig::new(t, k, b, seed).expect("valid configuration");
    println!("{t} posters, {b} judges, {k} posters per judge, seed {seed}");
    println!("faculty judges b_min = {}, reviews each from them r_f = {}\n", config.b_min(), config.r_f());

    for kind in GeneratorKind::ALL {
        let (design, trace) = generate(&config, kind).expect("generation succeeds");
        let report = validate(&design);
        let mut histogram = std::collections::BTreeMap::new();
        for &r in design.replication() {
            *histogram.entry(r).or_insert(0) += 1;
        }
        println!(
            "{kind:<7} spread={} max_concurrence={} connected={} prefixes_connected={} restarts={} rejected={}",
            report.replication_spread,
            report.max_concurrence,
            report.connected,
            report.all_prefixes_connected,
            trace.restarts,
            trace.rejected_blocks
        );
        let counts: Vec<String> = histogram.iter().map(|(r, n)| format!("{n} posters x{r}")).collect();
        println!("        {}", counts.join(", "));
    }

    let (design, _) = generate(&config, GeneratorKind::Nb1).unwrap();
    println!("\nfirst judges of the NB1 design:");
    for block in design.blocks().iter().take(5) {
        let role = if block.faculty { "faculty" } else { "other" };
        println!("  judge {:>3} ({role:<7}) posters {:?}", block.judge_index, block.poster_ids);
    }
}
