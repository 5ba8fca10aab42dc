//! Design data model and structural validators.
//!
//! A [`Design`] is an ordered list of judge blocks. Replication counts `r_i`
//! and the pair-concurrence matrix `λ_ij` are kept up to date as blocks are
//! appended; [`recount`] rebuilds both from scratch and serves as the oracle
//! for that bookkeeping.

use crate::feasibility::min_connect_blocks;
use crate::union_find::UnionFind;
use crate::DesignError;

pub const DEFAULT_MAX_ATTEMPTS: usize = 500;
pub const DEFAULT_RESTART_BUDGET: usize = 50;

/// Problem dimensions and generator settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignConfig {
    /// Number of posters (treatments).
    pub t: usize,
    /// Reviews per judge (block size).
    pub k: usize,
    /// Number of judges (blocks) to generate.
    pub b: usize,
    pub seed: u64,
    /// Consecutive NB1 rejections tolerated for one block before a restart.
    pub max_attempts: usize,
    /// Full NB1 restarts tolerated before giving up.
    pub restart_budget: usize,
    /// Number of leading blocks flagged as faculty; `None` means `b_min`.
    pub faculty_count: Option<usize>,
}

impl DesignConfig {
    pub fn new(t: usize, k: usize, b: usize, seed: u64) -> Result<Self, DesignError> {
        let config = Self {
            t,
            k,
            b,
            seed,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            restart_budget: DEFAULT_RESTART_BUDGET,
            faculty_count: None,
        };
        config.check()?;
        Ok(config)
    }

    pub fn with_max_attempts(mut self, max_attempts: usize) -> Self {
        self.max_attempts = max_attempts;
        self
    }

    pub fn with_restart_budget(mut self, restart_budget: usize) -> Self {
        self.restart_budget = restart_budget;
        self
    }

    pub fn with_faculty_count(mut self, faculty_count: usize) -> Self {
        self.faculty_count = Some(faculty_count);
        self
    }

    pub fn check(&self) -> Result<(), DesignError> {
        let bad = |msg: String| Err(DesignError::InvalidConfig(msg));
        if self.t < 2 {
            return bad(format!("need at least 2 posters, got {}", self.t));
        }
        if self.k < 2 || self.k > self.t {
            return bad(format!("block size must lie in [2, {}], got {}", self.t, self.k));
        }
        if self.b == 0 {
            return bad("need at least one judge".into());
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive".into());
        }
        Ok(())
    }

    pub fn b_min(&self) -> usize {
        min_connect_blocks(self.t, self.k)
    }

    pub fn r_f(&self) -> usize {
        crate::feasibility::max_faculty_reviews(self.t, self.k)
    }

    pub fn faculty_blocks(&self) -> usize {
        self.faculty_count.unwrap_or_else(|| self.b_min())
    }
}

/// One judge's assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub judge_index: usize,
    pub poster_ids: Vec<usize>,
    pub faculty: bool,
}

/// Dense symmetric matrix of pair concurrences with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concurrence {
    t: usize,
    counts: Vec<u16>,
}

impl Concurrence {
    pub fn new(t: usize) -> Self {
        Self {
            t,
            counts: vec![0; t * t],
        }
    }

    pub fn size(&self) -> usize {
        self.t
    }

    pub fn get(&self, i: usize, j: usize) -> u16 {
        self.counts[i * self.t + j]
    }

    fn bump(&mut self, i: usize, j: usize) {
        self.counts[i * self.t + j] += 1;
        self.counts[j * self.t + i] += 1;
    }

    /// True if some pair within `posters` already shares a block.
    pub fn any_pair_met(&self, posters: &[usize]) -> bool {
        posters.iter().enumerate().any(|(a, &i)| {
            posters[a + 1..].iter().any(|&j| self.get(i, j) > 0)
        })
    }

    pub fn max_off_diagonal(&self) -> u16 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Sum over unordered pairs `i < j`.
    pub fn pair_total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum::<u64>() / 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    config: DesignConfig,
    blocks: Vec<Block>,
    replication: Vec<u32>,
    concurrence: Concurrence,
}

impl Design {
    pub(crate) fn empty(config: DesignConfig) -> Self {
        let t = config.t;
        Self {
            config,
            blocks: Vec::new(),
            replication: vec![0; t],
            concurrence: Concurrence::new(t),
        }
    }

    /// Builds a design from explicit blocks, checking each one.
    /// `config.b` is reset to the number of blocks supplied.
    pub fn from_blocks(mut config: DesignConfig, blocks: Vec<Block>) -> Result<Self, DesignError> {
        config.b = blocks.len().max(1);
        config.check()?;
        let mut design = Self::empty(config);
        for (position, block) in blocks.into_iter().enumerate() {
            if block.judge_index != position {
                return Err(DesignError::MalformedBlock {
                    judge: block.judge_index,
                    reason: format!("expected judge_index {position} (blocks must be in generation order)"),
                });
            }
            design.check_block(&block.poster_ids).map_err(|reason| DesignError::MalformedBlock {
                judge: block.judge_index,
                reason,
            })?;
            design.push_unchecked(block);
        }
        Ok(design)
    }

    fn check_block(&self, posters: &[usize]) -> Result<(), String> {
        if posters.len() != self.config.k {
            return Err(format!("expected {} posters, found {}", self.config.k, posters.len()));
        }
        for (a, &p) in posters.iter().enumerate() {
            if p >= self.config.t {
                return Err(format!("poster {p} outside [0, {})", self.config.t));
            }
            if posters[..a].contains(&p) {
                return Err(format!("poster {p} repeated within the block"));
            }
        }
        Ok(())
    }

    /// Appends a block, updating `r_i` and `λ_ij` in place.
    pub(crate) fn push_unchecked(&mut self, block: Block) {
        for (a, &i) in block.poster_ids.iter().enumerate() {
            self.replication[i] += 1;
            for &j in &block.poster_ids[a + 1..] {
                self.concurrence.bump(i, j);
            }
        }
        self.blocks.push(block);
    }

    pub(crate) fn set_target_blocks(&mut self, b: usize) {
        self.config.b = b;
    }

    pub fn config(&self) -> &DesignConfig {
        &self.config
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn replication(&self) -> &[u32] {
        &self.replication
    }

    pub fn concurrence(&self) -> &Concurrence {
        &self.concurrence
    }

    /// The first `len` blocks as a design of their own.
    pub fn prefix(&self, len: usize) -> Design {
        let mut config = self.config.clone();
        config.b = len.max(1);
        let mut out = Design::empty(config);
        for block in &self.blocks[..len.min(self.blocks.len())] {
            out.push_unchecked(block.clone());
        }
        out
    }
}

/// Rebuilds replication and concurrence by visiting every block and every
/// within-block pair.
pub fn recount(design: &Design) -> (Vec<u32>, Concurrence) {
    let t = design.config().t;
    let mut replication = vec![0u32; t];
    let mut concurrence = Concurrence::new(t);
    for block in design.blocks() {
        for &i in &block.poster_ids {
            replication[i] += 1;
            for &j in &block.poster_ids {
                if i < j {
                    concurrence.bump(i, j);
                }
            }
        }
    }
    (replication, concurrence)
}

/// For each prefix length `1..=b`, whether the posters reviewed so far form a
/// single component of the co-review graph.
pub fn prefix_connectivity(design: &Design) -> Vec<bool> {
    let t = design.config().t;
    let mut uf = UnionFind::new(t);
    let mut seen = vec![false; t];
    let mut components = 0usize;
    let mut out = Vec::with_capacity(design.num_blocks());
    for block in design.blocks() {
        for &p in &block.poster_ids {
            if !seen[p] {
                seen[p] = true;
                components += 1;
            }
        }
        let first = block.poster_ids[0];
        for &p in &block.poster_ids[1..] {
            if uf.union(first, p) {
                components -= 1;
            }
        }
        out.push(components == 1);
    }
    out
}

/// Whether the posters reviewed within the first `prefix_len` blocks form one
/// connected component. Unreviewed posters are not vertices.
pub fn is_connected(design: &Design, prefix_len: usize) -> Result<bool, DesignError> {
    if prefix_len == 0 || prefix_len > design.num_blocks() {
        return Err(DesignError::InvalidPrefix {
            prefix_len,
            blocks: design.num_blocks(),
        });
    }
    Ok(prefix_connectivity(&design.prefix(prefix_len))[prefix_len - 1])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub replication_spread: u32,
    pub max_concurrence: u16,
    /// Every poster reviewed and the co-review graph is a single component.
    pub connected: bool,
    pub all_prefixes_connected: bool,
    pub covered: bool,
    pub faculty_coverage_ok: bool,
}

pub fn validate(design: &Design) -> ValidationReport {
    let r = design.replication();
    let max_r = r.iter().copied().max().unwrap_or(0);
    let min_r = r.iter().copied().min().unwrap_or(0);
    let covered = min_r >= 1;
    let prefixes = prefix_connectivity(design);
    let full = prefixes.last().copied().unwrap_or(false);

    let faculty_coverage_ok = if design.num_blocks() < design.config().b_min() {
        true
    } else {
        let mut hit = vec![false; design.config().t];
        for block in design.blocks().iter().filter(|b| b.faculty) {
            for &p in &block.poster_ids {
                hit[p] = true;
            }
        }
        hit.iter().all(|&h| h)
    };

    ValidationReport {
        replication_spread: max_r - min_r,
        max_concurrence: design.concurrence().max_off_diagonal(),
        connected: covered && full,
        all_prefixes_connected: prefixes.iter().all(|&c| c),
        covered,
        faculty_coverage_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn design_of(t: usize, k: usize, blocks: &[&[usize]]) -> Design {
        let config = DesignConfig::new(t, k, blocks.len(), 0).unwrap();
        let b_min = config.b_min();
        let blocks = blocks
            .iter()
            .enumerate()
            .map(|(j, posters)| Block {
                judge_index: j,
                poster_ids: posters.to_vec(),
                faculty: j < b_min,
            })
            .collect();
        Design::from_blocks(config, blocks).unwrap()
    }

    #[test]
    fn recount_single_block() {
        let d = design_of(10, 5, &[&[0, 1, 2, 3, 4]]);
        let (r, lambda) = recount(&d);
        assert_eq!(r, vec![1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(lambda.get(i, j), u16::from(i != j));
            }
        }
        assert_eq!(lambda.get(0, 5), 0);
    }

    #[test]
    fn recount_overlapping_blocks() {
        let d = design_of(10, 5, &[&[0, 1, 2, 3, 4], &[0, 5, 6, 7, 8]]);
        let (r, lambda) = recount(&d);
        assert_eq!(r[0], 2);
        assert_eq!(lambda.get(0, 5), 1);
        assert_eq!(lambda.get(1, 5), 0);
        assert_eq!((r, lambda), (d.replication().to_vec(), d.concurrence().clone()));
    }

    #[test]
    fn disjoint_pairs_are_disconnected() {
        let d = design_of(4, 2, &[&[0, 1], &[2, 3]]);
        assert!(!is_connected(&d, 2).unwrap());
        assert!(is_connected(&d, 1).unwrap());
        assert!(!validate(&d).connected);
    }

    #[test]
    fn chained_pairs_are_connected() {
        let d = design_of(3, 2, &[&[0, 1], &[1, 2]]);
        assert!(is_connected(&d, 2).unwrap());
        let report = validate(&d);
        assert!(report.connected && report.all_prefixes_connected && report.covered);
    }

    #[test]
    fn zero_prefix_rejected() {
        let d = design_of(3, 2, &[&[0, 1]]);
        assert!(matches!(is_connected(&d, 0), Err(DesignError::InvalidPrefix { .. })));
        assert!(is_connected(&d, 2).is_err());
    }

    #[test]
    fn malformed_blocks_rejected() {
        let config = DesignConfig::new(5, 2, 1, 0).unwrap();
        let dup = vec![Block { judge_index: 0, poster_ids: vec![1, 1], faculty: true }];
        assert!(Design::from_blocks(config.clone(), dup).is_err());
        let out_of_range = vec![Block { judge_index: 0, poster_ids: vec![1, 5], faculty: true }];
        assert!(Design::from_blocks(config.clone(), out_of_range).is_err());
        let wrong_size = vec![Block { judge_index: 0, poster_ids: vec![1, 2, 3], faculty: true }];
        assert!(Design::from_blocks(config, wrong_size).is_err());
    }

    #[test]
    fn config_rejects_bad_dimensions() {
        assert!(DesignConfig::new(1, 1, 1, 0).is_err());
        assert!(DesignConfig::new(5, 6, 1, 0).is_err());
        assert!(DesignConfig::new(5, 1, 1, 0).is_err());
        assert!(DesignConfig::new(5, 2, 0, 0).is_err());
        assert!(DesignConfig::new(5, 2, 1, 0).unwrap().with_max_attempts(0).check().is_err());
    }

    #[test]
    fn prefix_connectivity_tracks_late_joins() {
        // {0,1} and {2,3} are separate until the third block bridges them.
        let d = design_of(5, 2, &[&[0, 1], &[2, 3], &[1, 2], &[3, 4]]);
        assert_eq!(prefix_connectivity(&d), vec![true, false, true, true]);
        assert!(!validate(&d).all_prefixes_connected);
        assert!(validate(&d).connected);
    }
}
