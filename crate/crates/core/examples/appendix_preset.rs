//! The equal-variance setting (poster, judge and error standard deviations
//! all 5), written out as metrics and report CSV files.
//!
//! ```text
//! cargo run --release --example appendix_preset -- [iterations] [out_dir]
//! ```

use std::path::PathBuf;

use nbibd::simulation::SimParams;
use nbibd::{io, run_study};

fn main() {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().map_or(50, |s| s.parse().expect("integer argument"));
    let out_dir = args.next().map_or_else(std::env::temp_dir, PathBuf::from);

    let params = SimParams {
        iterations,
        ..SimParams::appendix555()
    };
    let report = run_study(&params).expect("valid parameters");

    let metrics = out_dir.join("appendix555_metrics.csv");
    let summary = out_dir.join("appendix555_report.csv");
    io::write_atomic(&metrics, &io::metrics_to_csv(&report.iterations)).expect("writable output");
    io::write_atomic(&summary, &io::report_to_csv(&report)).expect("writable output");
    println!("wrote {} and {}", metrics.display(), summary.display());

    for d in report.differences.iter().filter(|d| d.metric.label() == "win_prop") {
        println!(
            "{}-{} win_prop difference {:.4} [{:.4}, {:.4}]",
            d.first, d.second, d.mean, d.ci_low, d.ci_high
        );
    }
}
