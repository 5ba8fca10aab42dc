//! Sequential generators for the two near-balanced designs and the random
//! baseline.
//!
//! Blocks are produced one at a time and never revised, so any prefix of a
//! generated design is itself a valid design of the same kind. The only
//! exception is an NB1 restart, which discards the partial design and begins
//! again from block one while continuing the same random stream.
//!
//! Block assembly:
//! - block 1 takes `k` posters uniformly at random;
//! - blocks 2..`b_min` (the faculty phase) anchor their first slot on a
//!   poster that was already reviewed, drawn with weight `r_f − r_i`;
//! - every other slot is filled from the least-reviewed stratum upward;
//! - NB1 discards any candidate block that would let a pair meet twice.

use std::fmt;
use std::str::FromStr;

use crate::design::{Block, Design, DesignConfig};
use crate::rng::{derive_seed, Stream};
use crate::{DesignError, GenerateError};

const EXTEND_LABEL: u64 = 0x6578_7465_6e64; // "extend"

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorKind {
    /// Replication spread ≤ 1 and every pair meets at most once.
    Nb1,
    /// Replication spread ≤ 1.
    Nb2,
    /// Covers every poster once, then samples blocks uniformly.
    Random,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 3] = [GeneratorKind::Nb1, GeneratorKind::Nb2, GeneratorKind::Random];

    pub fn label(self) -> &'static str {
        match self {
            GeneratorKind::Nb1 => "NB1",
            GeneratorKind::Nb2 => "NB2",
            GeneratorKind::Random => "RANDOM",
        }
    }

    pub(crate) fn stream_label(self) -> u64 {
        match self {
            GeneratorKind::Nb1 => 1,
            GeneratorKind::Nb2 => 2,
            GeneratorKind::Random => 3,
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for GeneratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nb1" => Ok(GeneratorKind::Nb1),
            "nb2" => Ok(GeneratorKind::Nb2),
            "random" => Ok(GeneratorKind::Random),
            other => Err(format!("unknown design kind `{other}` (expected nb1, nb2 or random)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenerationTrace {
    pub restarts: usize,
    pub rejected_blocks: usize,
    pub seed_used: u64,
}

/// Too many consecutive NB1 rejections for the current block.
struct Exhausted;

fn block_for(config: &DesignConfig, judge_index: usize, posters: Vec<usize>) -> Block {
    Block {
        judge_index,
        poster_ids: posters,
        faculty: judge_index < config.faculty_blocks(),
    }
}

/// Adds `need` posters to `block`, taking the least-reviewed eligible posters
/// first and sampling uniformly within each replication stratum.
fn fill_least_reviewed(replication: &[u32], block: &mut Vec<usize>, need: usize, rng: &mut Stream) {
    let target = block.len() + need;
    while block.len() < target {
        let level = replication
            .iter()
            .enumerate()
            .filter(|(p, _)| !block.contains(p))
            .map(|(_, &r)| r)
            .min()
            .expect("block size never exceeds poster count");
        let mut stratum: Vec<usize> = (0..replication.len())
            .filter(|p| replication[*p] == level && !block.contains(p))
            .collect();
        let take = (target - block.len()).min(stratum.len());
        block.extend(rng.sample_without_replacement(&mut stratum, take));
    }
}

/// First slot of a faculty-phase block: an already-reviewed poster, weighted
/// by its remaining faculty-phase capacity `r_f − r_i`.
fn anchor_poster(design: &Design, rng: &mut Stream) -> usize {
    let r_f = design.config().r_f() as u64;
    let reviewed: Vec<usize> = (0..design.config().t)
        .filter(|&p| design.replication()[p] > 0)
        .collect();
    let weights: Vec<u64> = reviewed
        .iter()
        .map(|&p| r_f.saturating_sub(design.replication()[p] as u64))
        .collect();
    match rng.weighted_index(&weights) {
        Some(i) => reviewed[i],
        // Every reviewed poster is at capacity; fall back to a uniform choice.
        None => reviewed[rng.below(reviewed.len())],
    }
}

fn near_balanced_candidate(design: &Design, rng: &mut Stream) -> Vec<usize> {
    let config = design.config();
    let position = design.num_blocks();
    let mut block = Vec::with_capacity(config.k);
    if position > 0 && position < config.b_min() {
        block.push(anchor_poster(design, rng));
    }
    let need = config.k - block.len();
    fill_least_reviewed(design.replication(), &mut block, need, rng);
    block
}

fn random_baseline_block(design: &Design, rng: &mut Stream) -> Vec<usize> {
    let config = design.config();
    let mut unreviewed: Vec<usize> = (0..config.t)
        .filter(|&p| design.replication()[p] == 0)
        .collect();
    if unreviewed.is_empty() {
        let mut all: Vec<usize> = (0..config.t).collect();
        return rng.sample_without_replacement(&mut all, config.k);
    }
    let fresh = config.k.min(unreviewed.len());
    let mut block = rng.sample_without_replacement(&mut unreviewed, fresh);
    if block.len() < config.k {
        let mut reviewed: Vec<usize> = (0..config.t)
            .filter(|&p| design.replication()[p] > 0)
            .collect();
        let shortfall = config.k - block.len();
        block.extend(rng.sample_without_replacement(&mut reviewed, shortfall));
    }
    block
}

/// Appends one block of the requested kind.
fn append_block(
    design: &mut Design,
    kind: GeneratorKind,
    rng: &mut Stream,
    rejected: &mut usize,
) -> Result<(), Exhausted> {
    let position = design.num_blocks();
    let posters = match kind {
        GeneratorKind::Random => random_baseline_block(design, rng),
        GeneratorKind::Nb2 => near_balanced_candidate(design, rng),
        GeneratorKind::Nb1 => {
            let mut attempts = 0;
            loop {
                let candidate = near_balanced_candidate(design, rng);
                if !design.concurrence().any_pair_met(&candidate) {
                    break candidate;
                }
                *rejected += 1;
                attempts += 1;
                if attempts >= design.config().max_attempts {
                    return Err(Exhausted);
                }
            }
        }
    };
    let block = block_for(design.config(), position, posters);
    design.push_unchecked(block);
    Ok(())
}

/// Generates `config.b` blocks of the requested kind from `config.seed`.
pub fn generate(config: &DesignConfig, kind: GeneratorKind) -> Result<(Design, GenerationTrace), GenerateError> {
    config.check()?;
    let mut rng = Stream::new(config.seed);
    let mut trace = GenerationTrace {
        seed_used: config.seed,
        ..GenerationTrace::default()
    };
    'restart: loop {
        let mut design = Design::empty(config.clone());
        while design.num_blocks() < config.b {
            if append_block(&mut design, kind, &mut rng, &mut trace.rejected_blocks).is_err() {
                if trace.restarts == config.restart_budget {
                    return Err(GenerateError::Nb1InfeasibleBudget {
                        t: config.t,
                        k: config.k,
                        b: config.b,
                        restarts: trace.restarts,
                        reached: design.num_blocks(),
                    });
                }
                trace.restarts += 1;
                continue 'restart;
            }
        }
        return Ok((design, trace));
    }
}

/// Generates the random baseline: blocks draw from the unreviewed pool until
/// every poster is covered, then uniformly from all posters.
pub fn generate_random_baseline(config: &DesignConfig) -> Result<Design, GenerateError> {
    generate(config, GeneratorKind::Random).map(|(design, _)| design)
}

/// Appends `additional_blocks` blocks using the same rules the design was
/// generated with. The existing blocks are kept verbatim, so NB1 cannot
/// restart here: exhausting `max_attempts` on any new block is an error.
///
/// The extension draws from a stream derived from the design's seed and its
/// current length.
pub fn extend(design: &Design, additional_blocks: usize, kind: GeneratorKind) -> Result<Design, GenerateError> {
    let mut out = design.clone();
    if additional_blocks == 0 {
        return Ok(out);
    }
    let seed = derive_seed(design.config().seed, &[EXTEND_LABEL, design.num_blocks() as u64]);
    let mut rng = Stream::new(seed);
    let target = design.num_blocks() + additional_blocks;
    out.set_target_blocks(target);
    let mut rejected = 0;
    while out.num_blocks() < target {
        if append_block(&mut out, kind, &mut rng, &mut rejected).is_err() {
            return Err(GenerateError::Nb1InfeasibleBudget {
                t: design.config().t,
                k: design.config().k,
                b: target,
                restarts: 0,
                reached: out.num_blocks(),
            });
        }
    }
    Ok(out)
}

impl From<DesignError> for GenerateError {
    fn from(err: DesignError) -> Self {
        GenerateError::Design(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{recount, validate};

    fn config(t: usize, k: usize, b: usize, seed: u64) -> DesignConfig {
        DesignConfig::new(t, k, b, seed).unwrap()
    }

    fn profile(design: &Design) -> (usize, usize) {
        let r = design.replication();
        (r.iter().filter(|&&x| x == 2).count(), r.iter().filter(|&&x| x == 3).count())
    }

    #[test]
    fn nb2_full_scale_splits_replication_evenly() {
        let (design, trace) = generate(&config(200, 5, 100, 11), GeneratorKind::Nb2).unwrap();
        assert_eq!(profile(&design), (100, 100));
        assert_eq!(trace.restarts, 0);
        let report = validate(&design);
        assert!(report.replication_spread <= 1 && report.all_prefixes_connected && report.connected);
    }

    #[test]
    fn nb1_full_scale_keeps_pairs_apart() {
        let (design, _) = generate(&config(200, 5, 100, 12), GeneratorKind::Nb1).unwrap();
        assert_eq!(profile(&design), (100, 100));
        let report = validate(&design);
        assert_eq!(report.max_concurrence, 1);
        assert!(report.all_prefixes_connected && report.faculty_coverage_ok);
    }

    #[test]
    fn six_posters_second_block_takes_unreviewed_poster() {
        // b_min = 2, so block 2 anchors on a reviewed poster and must then
        // consume the single unreviewed poster before reusing reviewed ones.
        for seed in 0..200 {
            let (design, _) = generate(&config(6, 5, 2, seed), GeneratorKind::Nb2).unwrap();
            let first = &design.blocks()[0].poster_ids;
            let second = &design.blocks()[1].poster_ids;
            let unreviewed = (0..6).find(|p| !first.contains(p)).unwrap();
            assert!(first.contains(&second[0]));
            assert_eq!(second[1], unreviewed);
            assert!(second.contains(&unreviewed));
        }
    }

    #[test]
    fn faculty_flags_cover_leading_blocks() {
        let cfg = config(40, 5, 20, 3);
        let (design, _) = generate(&cfg, GeneratorKind::Nb2).unwrap();
        for block in design.blocks() {
            assert_eq!(block.faculty, block.judge_index < cfg.b_min());
        }
        let cfg = cfg.with_faculty_count(3);
        let (design, _) = generate(&cfg, GeneratorKind::Nb2).unwrap();
        assert_eq!(design.blocks().iter().filter(|b| b.faculty).count(), 3);
    }

    #[test]
    fn random_baseline_covers_every_poster() {
        let design = generate_random_baseline(&config(200, 5, 100, 5)).unwrap();
        assert!(design.replication().iter().all(|&r| r >= 1));
        assert_eq!(design.num_blocks(), 100);
    }

    #[test]
    fn random_baseline_single_complete_block() {
        let design = generate_random_baseline(&config(5, 5, 1, 5)).unwrap();
        let mut posters = design.blocks()[0].poster_ids.clone();
        posters.sort_unstable();
        assert_eq!(posters, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn random_baseline_fills_shortfall_from_reviewed() {
        // 7 posters, k = 3: the third block has one unreviewed poster left.
        let design = generate_random_baseline(&config(7, 3, 3, 1)).unwrap();
        let third = &design.blocks()[2].poster_ids;
        let earlier: Vec<usize> = design.blocks()[..2].iter().flat_map(|b| b.poster_ids.clone()).collect();
        assert!(!earlier.contains(&third[0]));
        assert!(earlier.contains(&third[1]) && earlier.contains(&third[2]));
    }

    #[test]
    fn incremental_bookkeeping_matches_recount() {
        for kind in GeneratorKind::ALL {
            let (design, _) = generate(&config(60, 4, 40, 8), kind).unwrap();
            let (r, lambda) = recount(&design);
            assert_eq!(r, design.replication());
            assert_eq!(&lambda, design.concurrence());
        }
    }

    #[test]
    fn extend_keeps_prefix_and_balance() {
        let (design, _) = generate(&config(200, 5, 100, 21), GeneratorKind::Nb2).unwrap();
        let longer = extend(&design, 20, GeneratorKind::Nb2).unwrap();
        assert_eq!(&longer.blocks()[..100], design.blocks());
        assert_eq!(longer.num_blocks(), 120);
        assert!(validate(&longer).replication_spread <= 1);
        assert_eq!(extend(&design, 0, GeneratorKind::Nb2).unwrap(), design);
    }

    #[test]
    fn nb1_saturated_instance_fails() {
        // Any two 4-subsets of 5 posters share three posters, so NB1 admits
        // only one block.
        let cfg = config(5, 4, 1, 2).with_max_attempts(20);
        let (design, _) = generate(&cfg, GeneratorKind::Nb1).unwrap();
        assert!(matches!(
            extend(&design, 1, GeneratorKind::Nb1),
            Err(GenerateError::Nb1InfeasibleBudget { .. })
        ));
        let cfg = config(5, 4, 2, 2).with_max_attempts(20).with_restart_budget(3);
        match generate(&cfg, GeneratorKind::Nb1) {
            Err(GenerateError::Nb1InfeasibleBudget { restarts, .. }) => assert_eq!(restarts, 3),
            other => panic!("expected budget failure, got {other:?}"),
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("NB1".parse::<GeneratorKind>().unwrap(), GeneratorKind::Nb1);
        assert_eq!("random".parse::<GeneratorKind>().unwrap(), GeneratorKind::Random);
        assert!("nb3".parse::<GeneratorKind>().is_err());
    }
}
