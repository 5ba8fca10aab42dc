//! Balanced-design arithmetic: the replication/block-count identity
//! `t·r = b·k`, the pair-concurrence value `λ = r(k−1)/(t−1)`, and the two
//! derived thresholds the sequential generators use (`b_min`, `r_f`).

use std::fmt;

use crate::DesignError;

/// Exact non-negative rational, always stored in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    numer: u64,
    denom: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    /// # Panics
    ///
    /// Panics on a zero denominator.
    pub fn new(numer: u64, denom: u64) -> Self {
        assert!(denom != 0, "zero denominator");
        let g = gcd(numer, denom).max(1);
        Self {
            numer: numer / g,
            denom: denom / g,
        }
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn is_integer(&self) -> bool {
        self.denom == 1
    }

    pub fn to_integer(&self) -> Option<u64> {
        self.is_integer().then_some(self.numer)
    }

    pub fn to_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom == 1 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/{}", self.numer, self.denom)
        }
    }
}

/// Number of blocks in which each pair must meet for a BIBD with `r`
/// replicates of `t` treatments in blocks of size `k`. The result is integral
/// exactly when the pair-balance divisibility condition holds.
pub fn lambda_of(r: u64, k: u64, t: u64) -> Result<Ratio, DesignError> {
    if t < 2 {
        return Err(DesignError::InvalidConfig(format!(
            "pair concurrence needs at least 2 treatments, got t={t}"
        )));
    }
    if k < 2 || r < 1 {
        return Err(DesignError::InvalidConfig(format!(
            "pair concurrence needs k >= 2 and r >= 1, got k={k}, r={r}"
        )));
    }
    Ok(Ratio::new(r * (k - 1), t - 1))
}

/// Blocks needed to replicate each of `t` treatments `r` times in blocks of
/// size `k`, i.e. `t·r/k`. Non-integral results mean no equireplicate design
/// exists with these parameters.
pub fn required_blocks(t: u64, r: u64, k: u64) -> Result<Ratio, DesignError> {
    if k == 0 {
        return Err(DesignError::InvalidConfig("block size must be positive".into()));
    }
    Ok(Ratio::new(t * r, k))
}

/// `b_min = ⌈t/(k−1)⌉`: the faculty-phase length. Anchoring every block after
/// the first on one already-reviewed poster leaves `k−1` fresh slots per
/// block, so this many blocks always reach full coverage.
pub fn min_connect_blocks(t: usize, k: usize) -> usize {
    debug_assert!(k >= 2 && k <= t);
    t.div_ceil(k - 1)
}

/// `r_f = ⌈b_min·k/t⌉`: the cap on how often a poster may be reviewed during
/// the faculty phase.
pub fn max_faculty_reviews(t: usize, k: usize) -> usize {
    (min_connect_blocks(t, k) * k).div_ceil(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_for_two_hundred_one_posters() {
        let lambda = lambda_of(50, 5, 201).unwrap();
        assert_eq!(lambda.to_integer(), Some(1));
    }

    #[test]
    fn lambda_single_complete_block() {
        for t in 2..12 {
            assert_eq!(lambda_of(1, t, t).unwrap().to_integer(), Some(1));
        }
    }

    #[test]
    fn lambda_simulation_scale_is_fractional() {
        let lambda = lambda_of(3, 5, 200).unwrap();
        assert_eq!((lambda.numer(), lambda.denom()), (12, 199));
        assert!(!lambda.is_integer());
    }

    #[test]
    fn lambda_rejects_single_treatment() {
        assert!(lambda_of(1, 2, 1).is_err());
        assert!(lambda_of(1, 2, 0).is_err());
    }

    #[test]
    fn required_block_counts() {
        assert_eq!(required_blocks(201, 50, 5).unwrap().to_integer(), Some(2010));
        assert_eq!(required_blocks(7, 1, 7).unwrap().to_integer(), Some(1));
        assert_eq!(required_blocks(200, 3, 5).unwrap().to_integer(), Some(120));
        let frac = required_blocks(201, 3, 5).unwrap();
        assert_eq!((frac.numer(), frac.denom()), (603, 5));
    }

    #[test]
    fn faculty_thresholds() {
        assert_eq!(min_connect_blocks(201, 5), 51);
        assert_eq!(min_connect_blocks(5, 5), 2);
        assert_eq!(min_connect_blocks(200, 5), 50);
        assert_eq!(max_faculty_reviews(201, 5), 2);
        assert_eq!(max_faculty_reviews(200, 5), 2);
        for k in 2..9 {
            assert_eq!(max_faculty_reviews(k, k), min_connect_blocks(k, k));
        }
    }

    #[test]
    fn joint_consistency_when_integral() {
        // b·k(k−1) = t·r(k−1) = λ·t(t−1) for every integral parameter set.
        for t in 2u64..30 {
            for k in 2..=t {
                for r in 1..20 {
                    let (Some(b), Some(lambda)) = (
                        required_blocks(t, r, k).unwrap().to_integer(),
                        lambda_of(r, k, t).unwrap().to_integer(),
                    ) else {
                        continue;
                    };
                    assert_eq!(b * k * (k - 1), t * r * (k - 1));
                    assert_eq!(t * r * (k - 1), lambda * t * (t - 1));
                }
            }
        }
    }
}
