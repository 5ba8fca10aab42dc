//! Test-only oracles for the mixed-model fits. Least squares uses
//! reference-level coding solved by QR. The REML criterion is built from an
//! explicit orthonormal basis of error contrasts.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nbibd::mixedmodel::Observation;
use nbibd::rng::Stream;
use nbibd::{generate, Design, DesignConfig, GeneratorKind, ScoreTable};

pub struct Dense {
    pub y: DVector<f64>,
    /// Poster indicators, one column per poster id.
    pub x: DMatrix<f64>,
    /// Judge indicators, one column per judge index.
    pub z: DMatrix<f64>,
}

pub fn dense(scores: &ScoreTable) -> Dense {
    let n = scores.observations().len();
    let mut x = DMatrix::zeros(n, scores.t());
    let mut z = DMatrix::zeros(n, scores.b());
    let mut y = DVector::zeros(n);
    for (row, o) in scores.observations().iter().enumerate() {
        x[(row, o.poster)] = 1.0;
        z[(row, o.judge)] = 1.0;
        y[row] = o.score;
    }
    Dense { y, x, z }
}

/// Fixed-judge marginal means `μ + P_i + mean_j J_j` from a corner-point
/// parameterisation (first poster and first judge as reference levels) solved
/// by Householder QR, plus their standard errors.
pub fn fixed_oracle(scores: &ScoreTable) -> (Vec<f64>, Vec<f64>) {
    let d = dense(scores);
    let (n, t, b) = (d.y.len(), d.x.ncols(), d.z.ncols());
    let cols = t + b - 1;
    let mut w = DMatrix::zeros(n, cols);
    for r in 0..n {
        w[(r, 0)] = 1.0;
        for c in 1..t {
            w[(r, c)] = d.x[(r, c)];
        }
        for c in 1..b {
            w[(r, t - 1 + c)] = d.z[(r, c)];
        }
    }
    let qr = w.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &d.y;
    let beta = r.solve_upper_triangular(&qty).unwrap();
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(cols, cols)).unwrap();
    let cov = &r_inv * r_inv.transpose();
    let residual = &d.y - &w * &beta;
    let sigma2 = residual.norm_squared() / (n - cols) as f64;
    let mut pmm = Vec::new();
    let mut se = Vec::new();
    for i in 0..t {
        let mut l = DVector::zeros(cols);
        l[0] = 1.0;
        if i > 0 {
            l[i] = 1.0;
        }
        for j in 1..b {
            l[t - 1 + j] = 1.0 / b as f64;
        }
        pmm.push(l.dot(&beta));
        se.push((sigma2 * (l.transpose() * &cov * &l)[(0, 0)]).sqrt());
    }
    (pmm, se)
}

/// Profiled REML criterion from error contrasts: `A` is an orthonormal basis
/// of the null space of `X'`, and `A'y ~ N(0, σ²(I + θ A'ZZ'A))`.
pub struct ContrastReml {
    eigenvalues: Vec<f64>,
    w2: Vec<f64>,
    nu: f64,
}

impl ContrastReml {
    pub fn new(scores: &ScoreTable) -> Self {
        let d = dense(scores);
        let n = d.y.len();
        // Drop empty poster columns, then project onto the orthogonal complement of X.
        let keep: Vec<usize> = (0..d.x.ncols()).filter(|&c| d.x.column(c).sum() > 0.0).collect();
        let x = DMatrix::from_fn(n, keep.len(), |r, c| d.x[(r, keep[c])]);
        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let m = DMatrix::identity(n, n) - &x * xtx_inv * x.transpose();
        let eig = SymmetricEigen::new(m);
        let basis: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        let a = DMatrix::from_fn(n, basis.len(), |r, c| eig.eigenvectors[(r, basis[c])]);
        let aza = a.transpose() * &d.z * d.z.transpose() * &a;
        let inner = SymmetricEigen::new(aza);
        let w = inner.eigenvectors.transpose() * (a.transpose() * &d.y);
        Self {
            eigenvalues: inner.eigenvalues.iter().map(|&v| v.max(0.0)).collect(),
            w2: w.iter().map(|v| v * v).collect(),
            nu: basis.len() as f64,
        }
    }

    pub fn at(&self, theta: f64) -> f64 {
        let mut quad = 0.0;
        let mut log_det = 0.0;
        for (d, w2) in self.eigenvalues.iter().zip(&self.w2) {
            let s = 1.0 + theta * d;
            quad += w2 / s;
            log_det += s.ln();
        }
        let nu = self.nu;
        -0.5 * (nu * (2.0 * std::f64::consts::PI * quad / nu).ln() + nu + log_det)
    }
}

/// Best `θ` on the grid `0, step, 2·step, …, upper` and its criterion.
pub fn grid_search(reml: &ContrastReml, upper: f64, step: f64) -> (f64, f64) {
    let points = (upper / step).round() as usize;
    let mut best = (0.0, reml.at(0.0));
    for i in 1..=points {
        let theta = i as f64 * step;
        let v = reml.at(theta);
        if v > best.1 {
            best = (theta, v);
        }
    }
    best
}

/// The same criterion written out with dense `n×n` matrices:
/// `−½[ν ln(2πσ̂²) + ln|H| + ln|X'H⁻¹X| − ln|X'X| + ν]`, `H = I + θZZ'`.
pub fn dense_reml(scores: &ScoreTable, theta: f64) -> f64 {
    let d = dense(scores);
    let n = d.y.len();
    let keep: Vec<usize> = (0..d.x.ncols()).filter(|&c| d.x.column(c).sum() > 0.0).collect();
    let x = DMatrix::from_fn(n, keep.len(), |r, c| d.x[(r, keep[c])]);
    let h = DMatrix::identity(n, n) + theta * &d.z * d.z.transpose();
    let h_inv = h.clone().try_inverse().unwrap();
    let xhx = x.transpose() * &h_inv * &x;
    let xhx_inv = xhx.clone().try_inverse().unwrap();
    let p = &h_inv - &h_inv * &x * xhx_inv * x.transpose() * &h_inv;
    let nu = (n - keep.len()) as f64;
    let sigma2 = (d.y.transpose() * p * &d.y)[(0, 0)] / nu;
    let xtx = x.transpose() * &x;
    -0.5 * (nu * (2.0 * std::f64::consts::PI * sigma2).ln() + h.determinant().ln() + xhx.determinant().ln()
        - xtx.determinant().ln()
        + nu)
}

/// GLS poster means at a given `θ` with dense `V = I + θZZ'`.
pub fn dense_gls(scores: &ScoreTable, theta: f64) -> Vec<f64> {
    let d = dense(scores);
    let n = d.y.len();
    let keep: Vec<usize> = (0..d.x.ncols()).filter(|&c| d.x.column(c).sum() > 0.0).collect();
    let x = DMatrix::from_fn(n, keep.len(), |r, c| d.x[(r, keep[c])]);
    let v_inv = (DMatrix::identity(n, n) + theta * &d.z * d.z.transpose()).try_inverse().unwrap();
    let beta = (x.transpose() * &v_inv * &x).try_inverse().unwrap() * x.transpose() * &v_inv * &d.y;
    let mut out = vec![f64::NAN; d.x.ncols()];
    for (c, &id) in keep.iter().enumerate() {
        out[id] = beta[c];
    }
    out
}

/// A small random instance: an NB2 layout with scores from the additive
/// model, `t ≤ 6`, `b ≤ 10`.
pub fn small_instance(seed: u64) -> (Design, ScoreTable) {
    let mut rng = Stream::new(seed);
    let t = 3 + rng.below(4);
    let k = 2 + rng.below((t - 1).min(3));
    let b = (t + 1 + rng.below(10 - t)).min(10);
    let config = DesignConfig::new(t, k, b, rng.next_u64()).unwrap();
    let (design, _) = generate(&config, GeneratorKind::Nb2).unwrap();
    let sd_judge = [0.0, 0.5, 2.0, 5.0][rng.below(4)];
    let poster: Vec<f64> = (0..t).map(|_| rng.normal(0.0, 3.0)).collect();
    let judge: Vec<f64> = (0..b).map(|_| rng.normal(0.0, sd_judge)).collect();
    let mut obs = Vec::new();
    for block in design.blocks() {
        for &p in &block.poster_ids {
            obs.push(Observation {
                judge: block.judge_index,
                poster: p,
                score: 50.0 + poster[p] + judge[block.judge_index] + rng.normal(0.0, 2.0),
            });
        }
    }
    let scores = ScoreTable::new(t, b, obs).unwrap();
    (design, scores)
}

pub fn design_of(t: usize, k: usize, blocks: &[&[usize]]) -> Design {
    let config = DesignConfig::new(t, k, blocks.len(), 0).unwrap();
    let blocks = blocks
        .iter()
        .enumerate()
        .map(|(j, posters)| nbibd::Block {
            judge_index: j,
            poster_ids: posters.to_vec(),
            faculty: false,
        })
        .collect();
    Design::from_blocks(config, blocks).unwrap()
}

pub fn scores_of(t: usize, b: usize, cells: &[(usize, usize, f64)]) -> ScoreTable {
    ScoreTable::new(
        t,
        b,
        cells
            .iter()
            .map(|&(judge, poster, score)| Observation { judge, poster, score })
            .collect(),
    )
    .unwrap()
}
