//! Check a design for replication balance, pair concurrence and
//! connectivity, including every prefix of the judge list.
//!
//! ```text
//! cargo run --example validate_design -- [design.csv]
//! ```
//!
//! Without an argument a small hand-written design is checked.

use std::path::Path;

use nbibd::design::prefix_connectivity;
use nbibd::{io, is_connected, validate};

const SAMPLE: &str = "\
judge_index,faculty,poster_1,poster_2,poster_3
0,true,0,1,2
1,true,3,4,5
2,true,2,3,6
3,false,0,4,6
4,false,1,5,6
";

fn main() {
    let design = match std::env::args().nth(1) {
        Some(path) => io::read_design(Path::new(&path), None).expect("readable design"),
        None => io::design_from_csv(SAMPLE.as_bytes(), None).expect("sample parses"),
    };
    let report = validate(&design);
    println!("{} posters, {} judges", design.config().t, design.num_blocks());
    println!("{report:#?}");

    let prefixes = prefix_connectivity(&design);
    for len in 1..=design.num_blocks() {
        assert_eq!(prefixes[len - 1], is_connected(&design, len).unwrap());
        println!("  first {len} judges connected: {}", prefixes[len - 1]);
    }

    let concurrence = design.concurrence();
    let t = design.config().t;
    let repeats: Vec<(usize, usize, u16)> = (0..t)
        .flat_map(|i| (i + 1..t).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, concurrence.get(i, j)))
        .filter(|&(_, _, n)| n > 1)
        .collect();
    println!("pairs seen together by more than one judge: {repeats:?}");
}
