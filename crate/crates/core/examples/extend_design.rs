//! Add late-arriving judges to an existing design without disturbing the
//! judges already assigned.
//!
//! ```text
//! cargo run --example extend_design -- [extra_judges]
//! ```

use nbibd::{extend, generate, validate, DesignConfig, GeneratorKind};

fn main() {
    let extra: usize = std::env::args().nth(1).map_or(20, |s| s.parse().expect("integer argument"));
    let config = DesignConfig::new(120, 5, 40, 3).expect("valid configuration");

    for kind in [GeneratorKind::Nb1, GeneratorKind::Nb2] {
        let (design, _) = generate(&config, kind).expect("generation succeeds");
        let before = validate(&design);
        let longer = extend(&design, extra, kind).expect("extension succeeds");
        let after = validate(&longer);
        assert_eq!(&longer.blocks()[..design.num_blocks()], design.blocks());
        println!(
            "{kind}: {} -> {} judges | spread {} -> {} | max concurrence {} -> {} | every prefix connected: {}",
            design.num_blocks(),
            longer.num_blocks(),
            before.replication_spread,
            after.replication_spread,
            before.max_concurrence,
            after.max_concurrence,
            after.all_prefixes_connected
        );
    }
}
