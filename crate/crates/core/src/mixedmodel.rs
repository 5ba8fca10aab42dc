//! Population marginal means for the additive model
//! `y = μ + P_poster + J_judge + ε`.
//!
//! Two analyses are offered:
//!
//! - [`fit_fixed`]: judges as a fixed factor (intrablock analysis), ordinary
//!   least squares under sum-to-zero coding of both factors. Requires a
//!   connected design.
//! - [`fit_random`]: judges random with variance `σ_J²`. The variance ratio
//!   `θ = σ_J²/σ_ε²` is chosen by restricted maximum likelihood with `σ_ε²`
//!   profiled out, then poster means come from generalized least squares.
//!   Works on disconnected designs.
//!
//! Posters without any observation are left out of the model; their `pmm`
//! and `se` are NaN and their rank is `None`.
//!
//! # Profiled REML
//!
//! With posters as cell means (`X`, one column per reviewed poster), judge
//! incidence `Z`, and `M = I − X(X'X)⁻¹X'`, the restricted log-likelihood
//! with `σ_ε²` profiled out is
//!
//! ```text
//! ℓ(θ) = −½ [ ν·ln(2π·Q(θ)/ν) + ν + ln det(I + θ·Z'MZ) ]
//! Q(θ) = y'My − θ·y'MZ (I + θ·Z'MZ)⁻¹ Z'My,      ν = n − p
//! ```
//!
//! `Z'MZ` is the judge information matrix (judge sizes minus the
//! poster-adjusted co-incidence), of order `b`. One symmetric
//! eigendecomposition makes every `ℓ(θ)` evaluation O(b), so the search over
//! `θ` is cheap. This `ℓ` equals the Gaussian likelihood of any orthonormal
//! set of error contrasts.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::design::Design;
use crate::union_find::UnionFind;
use crate::FitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub judge: usize,
    pub poster: usize,
    pub score: f64,
}

/// Sparse judge × poster scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    t: usize,
    b: usize,
    observations: Vec<Observation>,
}

impl ScoreTable {
    /// Rejects out-of-range indices, non-finite scores and repeated
    /// (judge, poster) cells.
    pub fn new(t: usize, b: usize, observations: Vec<Observation>) -> Result<Self, FitError> {
        let mut seen = std::collections::HashSet::with_capacity(observations.len());
        for (row, obs) in observations.iter().enumerate() {
            if obs.poster >= t || obs.judge >= b {
                return Err(FitError::InconsistentScores(format!(
                    "observation {row}: judge {} / poster {} outside {b} judges x {t} posters",
                    obs.judge, obs.poster
                )));
            }
            if !obs.score.is_finite() {
                return Err(FitError::InconsistentScores(format!("observation {row}: score is not finite")));
            }
            if !seen.insert((obs.judge, obs.poster)) {
                return Err(FitError::InconsistentScores(format!(
                    "observation {row}: judge {} scored poster {} twice",
                    obs.judge, obs.poster
                )));
            }
        }
        Ok(Self { t, b, observations })
    }

    /// Picks out the cells a design observes from a full poster × judge
    /// matrix, `matrix[poster][judge]`.
    pub fn from_matrix(design: &Design, matrix: &[Vec<f64>]) -> Self {
        let observations = design
            .blocks()
            .iter()
            .flat_map(|block| {
                block.poster_ids.iter().map(move |&poster| Observation {
                    judge: block.judge_index,
                    poster,
                    score: matrix[poster][block.judge_index],
                })
            })
            .collect();
        Self {
            t: design.config().t,
            b: design.num_blocks(),
            observations,
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Applies `f` to every score.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            observations: self
                .observations
                .iter()
                .map(|o| Observation { score: f(o.score), ..*o })
                .collect(),
            ..self.clone()
        }
    }

    fn check_against(&self, design: &Design) -> Result<(), FitError> {
        if self.t != design.config().t {
            return Err(FitError::InconsistentScores(format!(
                "score table has {} posters, design has {}",
                self.t,
                design.config().t
            )));
        }
        for obs in &self.observations {
            let in_design = design
                .blocks()
                .get(obs.judge)
                .is_some_and(|block| block.poster_ids.contains(&obs.poster));
            if !in_design {
                return Err(FitError::InconsistentScores(format!(
                    "judge {} was not assigned poster {}",
                    obs.judge, obs.poster
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Fixed,
    Random,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Fixed => "FIXED",
            ModelKind::Random => "RANDOM",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(ModelKind::Fixed),
            "random" => Ok(ModelKind::Random),
            other => Err(format!("unknown model `{other}` (expected fixed or random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model_kind: ModelKind,
    pub grand_mean: f64,
    /// Population marginal means `μ + P_i`; NaN for unreviewed posters.
    pub pmm: Vec<f64>,
    pub se: Vec<f64>,
    /// 1 = best; `None` for unreviewed posters.
    pub rank: Vec<Option<usize>>,
    /// `σ_J²`; only set by the random-judge fit.
    pub var_judge: Option<f64>,
    pub var_error: f64,
    pub converged: bool,
    /// Selected `θ = σ_J²/σ_ε²` (random-judge fit only).
    pub theta: Option<f64>,
    /// Profiled restricted log-likelihood at `theta`.
    pub reml_criterion: Option<f64>,
    /// Condition estimate of the final normal-equation matrix, from the
    /// spread of its Cholesky pivots.
    pub condition: f64,
}

impl FitResult {
    pub fn reviewed(&self) -> impl Iterator<Item = usize> + '_ {
        self.rank.iter().enumerate().filter(|(_, r)| r.is_some()).map(|(i, _)| i)
    }
}

/// Reviewed posters sorted by estimated mean, best first, ties to the lower id.
fn ordering(pmm: &[f64], reviewed: &[bool]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..pmm.len()).filter(|&i| reviewed[i]).collect();
    ids.sort_by(|&a, &b| pmm[b].total_cmp(&pmm[a]).then(a.cmp(&b)));
    ids
}

fn ranks_from(pmm: &[f64], reviewed: &[bool]) -> Vec<Option<usize>> {
    let mut rank = vec![None; pmm.len()];
    for (position, id) in ordering(pmm, reviewed).into_iter().enumerate() {
        rank[id] = Some(position + 1);
    }
    rank
}

/// The `top_m` best posters by estimated mean.
pub fn rank_posters(fit: &FitResult, top_m: usize) -> Vec<usize> {
    let reviewed: Vec<bool> = fit.rank.iter().map(Option::is_some).collect();
    let mut ids = ordering(&fit.pmm, &reviewed);
    ids.truncate(top_m);
    ids
}

/// Observations re-indexed onto reviewed posters and judges that scored something.
struct Layout {
    t: usize,
    /// poster id -> model column
    poster_col: Vec<Option<usize>>,
    posters: Vec<usize>,
    judges: usize,
    rows: Vec<(usize, usize, f64)>,
}

impl Layout {
    fn new(scores: &ScoreTable) -> Self {
        let mut poster_col = vec![None; scores.t];
        let mut judge_col = vec![None; scores.b];
        let (mut posters, mut judges) = (Vec::new(), 0);
        let mut rows = Vec::with_capacity(scores.observations.len());
        // Columns in ascending id order keep results independent of row order.
        let mut by_poster: Vec<bool> = vec![false; scores.t];
        let mut by_judge: Vec<bool> = vec![false; scores.b];
        for obs in &scores.observations {
            by_poster[obs.poster] = true;
            by_judge[obs.judge] = true;
        }
        for (id, _) in by_poster.iter().enumerate().filter(|(_, &s)| s) {
            poster_col[id] = Some(posters.len());
            posters.push(id);
        }
        for (id, _) in by_judge.iter().enumerate().filter(|(_, &s)| s) {
            judge_col[id] = Some(judges);
            judges += 1;
        }
        for obs in &scores.observations {
            rows.push((poster_col[obs.poster].unwrap(), judge_col[obs.judge].unwrap(), obs.score));
        }
        Self {
            t: scores.t,
            poster_col,
            posters,
            judges,
            rows,
        }
    }

    fn p(&self) -> usize {
        self.posters.len()
    }

    fn n(&self) -> usize {
        self.rows.len()
    }

    fn components(&self) -> usize {
        let p = self.p();
        let mut uf = UnionFind::new(p + self.judges);
        let mut components = p + self.judges;
        for &(i, j, _) in &self.rows {
            if uf.union(i, p + j) {
                components -= 1;
            }
        }
        components
    }

    /// Scatters per-column estimates back to poster ids (NaN where unreviewed).
    fn spread(&self, values: &DVector<f64>) -> Vec<f64> {
        (0..self.t)
            .map(|id| self.poster_col[id].map_or(f64::NAN, |c| values[c]))
            .collect()
    }

    fn reviewed_mask(&self) -> Vec<bool> {
        self.poster_col.iter().map(Option::is_some).collect()
    }
}

fn pivot_condition(chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let l = chol.l_dirty();
    let diag = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]);
    let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    hi / lo
}

/// Intrablock analysis: posters and judges both fixed.
pub fn fit_fixed(design: &Design, scores: &ScoreTable) -> Result<FitResult, FitError> {
    scores.check_against(design)?;
    let layout = Layout::new(scores);
    let (n, p, q) = (layout.n(), layout.p(), layout.judges);
    if p == 0 {
        return Err(FitError::SingularFit("no observations".into()));
    }
    if layout.components() > 1 {
        return Err(FitError::DisconnectedDesign);
    }
    let params = p + q - 1;
    if n <= params {
        return Err(FitError::SingularFit(format!(
            "{n} observations leave no residual degrees of freedom for {params} parameters"
        )));
    }

    // Columns: intercept, p−1 poster contrasts, q−1 judge contrasts (sum to zero).
    let mut x = DMatrix::<f64>::zeros(n, params);
    let mut y = DVector::<f64>::zeros(n);
    for (row, &(i, j, score)) in layout.rows.iter().enumerate() {
        x[(row, 0)] = 1.0;
        if i + 1 < p {
            x[(row, 1 + i)] = 1.0;
        } else {
            for c in 0..p - 1 {
                x[(row, 1 + c)] = -1.0;
            }
        }
        if j + 1 < q {
            x[(row, p + j)] = 1.0;
        } else {
            for c in 0..q - 1 {
                x[(row, p + c)] = -1.0;
            }
        }
        y[row] = score;
    }
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let chol = Cholesky::new(xtx).ok_or_else(|| FitError::SingularFit("normal equations not positive definite".into()))?;
    let condition = pivot_condition(&chol);
    let beta = chol.solve(&xty);
    let residual = &y - &x * &beta;
    let df = (n - params) as f64;
    let var_error = residual.norm_squared() / df;
    let cov = chol.inverse();

    // pmm_i = μ + P_i; the judge contrasts average to zero.
    let mut pmm = DVector::zeros(p);
    let mut se = DVector::zeros(p);
    for i in 0..p {
        let mut l = DVector::<f64>::zeros(params);
        l[0] = 1.0;
        if i + 1 < p {
            l[1 + i] = 1.0;
        } else {
            for c in 0..p - 1 {
                l[1 + c] = -1.0;
            }
        }
        pmm[i] = l.dot(&beta);
        se[i] = (var_error * (l.transpose() * &cov * &l)[(0, 0)]).max(0.0).sqrt();
    }
    let reviewed = layout.reviewed_mask();
    let pmm = layout.spread(&pmm);
    Ok(FitResult {
        model_kind: ModelKind::Fixed,
        grand_mean: beta[0],
        rank: ranks_from(&pmm, &reviewed),
        pmm,
        se: layout.spread(&se),
        var_judge: None,
        var_error,
        converged: true,
        theta: None,
        reml_criterion: None,
        condition,
    })
}

/// Search settings for the variance ratio `θ = σ_J²/σ_ε²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RemlOptions {
    /// Upper end of the search interval `[0, theta_max]`.
    pub theta_max: f64,
    /// Log-spaced starting grid size (plus `θ = 0`).
    pub grid_points: usize,
    /// Relative width at which the bracket refinement stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RemlOptions {
    fn default() -> Self {
        Self {
            theta_max: 1e4,
            grid_points: 121,
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

/// Everything the profiled criterion needs, computed once per fit.
struct RemlProfile {
    /// Eigenvalues of the judge information matrix `Z'MZ` (clamped at 0).
    eigenvalues: Vec<f64>,
    /// Squared projections of `Z'My` onto its eigenvectors.
    projected: Vec<f64>,
    /// `y'My`: residual sum of squares about the poster means.
    within: f64,
    dof: f64,
}

impl RemlProfile {
    fn new(layout: &Layout) -> Self {
        let (p, q) = (layout.p(), layout.judges);
        let mut count = vec![0.0; p];
        let mut total = vec![0.0; p];
        for &(i, _, score) in &layout.rows {
            count[i] += 1.0;
            total[i] += score;
        }
        let mean: Vec<f64> = total.iter().zip(&count).map(|(s, c)| s / c).collect();

        let mut by_poster: Vec<Vec<usize>> = vec![Vec::new(); p];
        let mut info = DMatrix::<f64>::zeros(q, q);
        let mut zmy = DVector::<f64>::zeros(q);
        let mut within = 0.0;
        for &(i, j, score) in &layout.rows {
            by_poster[i].push(j);
            info[(j, j)] += 1.0;
            let dev = score - mean[i];
            zmy[j] += dev;
            within += dev * dev;
        }
        for (i, judges) in by_poster.iter().enumerate() {
            let w = 1.0 / count[i];
            for &j in judges {
                for &l in judges {
                    info[(j, l)] -= w;
                }
            }
        }
        let eigen = SymmetricEigen::new(info);
        let proj = eigen.eigenvectors.transpose() * zmy;
        Self {
            eigenvalues: eigen.eigenvalues.iter().map(|&d| d.max(0.0)).collect(),
            projected: proj.iter().map(|g| g * g).collect(),
            within,
            dof: (layout.n() - p) as f64,
        }
    }

    /// `Q(θ)`, the weighted residual sum of squares.
    fn quadratic(&self, theta: f64) -> f64 {
        let absorbed: f64 = self
            .eigenvalues
            .iter()
            .zip(&self.projected)
            .map(|(d, g)| g / (1.0 + theta * d))
            .sum();
        (self.within - theta * absorbed).max(0.0)
    }

    fn log_likelihood(&self, theta: f64) -> f64 {
        let log_det: f64 = self.eigenvalues.iter().map(|d| (theta * d).ln_1p()).sum();
        let nu = self.dof;
        -0.5 * (nu * (2.0 * std::f64::consts::PI * self.quadratic(theta) / nu).ln() + nu + log_det)
    }
}

/// Maximises the profiled criterion on `[0, theta_max]`: a coarse log grid,
/// then golden-section refinement inside the bracket around the best point.
fn maximise(profile: &RemlProfile, options: &RemlOptions) -> (f64, f64, bool) {
    let f = |theta: f64| profile.log_likelihood(theta);
    let lo_exp = (1e-6f64.min(options.theta_max)).log10();
    let hi_exp = options.theta_max.log10();
    let steps = options.grid_points.max(2) - 1;
    let mut grid = vec![0.0];
    grid.extend((0..=steps).map(|s| 10f64.powf(lo_exp + (hi_exp - lo_exp) * s as f64 / steps as f64)));
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let best = (0..grid.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
        .unwrap();

    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut converged = false;
    for _ in 0..options.max_iterations {
        if hi - lo <= options.tolerance * (0.5 * (hi + lo)).max(1e-10) {
            converged = true;
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut candidates = vec![(grid[best], values[best]), (mid, f(mid)), (c, fc), (d, fd)];
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let (theta, value) = candidates[0];
    (theta, value, converged)
}

/// Judges random: REML variance components, GLS poster means.
pub fn fit_random(design: &Design, scores: &ScoreTable) -> Result<FitResult, FitError> {
    fit_random_with(design, scores, &RemlOptions::default())
}

pub fn fit_random_with(design: &Design, scores: &ScoreTable, options: &RemlOptions) -> Result<FitResult, FitError> {
    scores.check_against(design)?;
    let layout = Layout::new(scores);
    let (n, p) = (layout.n(), layout.p());
    if p == 0 || n <= p {
        return Err(FitError::SingularFit(format!(
            "{n} observations for {p} poster parameters leave no residual degrees of freedom"
        )));
    }
    let profile = RemlProfile::new(&layout);
    let sum_sq: f64 = layout.rows.iter().map(|r| r.2 * r.2).sum();
    let (theta, criterion, converged) = if profile.within <= f64::EPSILON * sum_sq.max(1.0) {
        // Scores are fully explained by poster means: nothing left to split.
        (0.0, f64::INFINITY, true)
    } else {
        maximise(&profile, options)
    };
    let var_error = profile.quadratic(theta) / profile.dof;
    gls_means(&layout, theta, var_error, converged, criterion)
}

/// Profiled restricted log-likelihood at a given `θ`, as maximised by
/// [`fit_random`].
pub fn reml_criterion(design: &Design, scores: &ScoreTable, theta: f64) -> Result<f64, FitError> {
    scores.check_against(design)?;
    let layout = Layout::new(scores);
    if layout.p() == 0 || layout.n() <= layout.p() {
        return Err(FitError::SingularFit("no residual degrees of freedom".into()));
    }
    Ok(RemlProfile::new(&layout).log_likelihood(theta))
}

fn gls_means(layout: &Layout, theta: f64, var_error: f64, converged: bool, criterion: f64) -> Result<FitResult, FitError> {
    let (p, q) = (layout.p(), layout.judges);
    let mut by_judge: Vec<Vec<(usize, f64)>> = vec![Vec::new(); q];
    for &(i, j, score) in &layout.rows {
        by_judge[j].push((i, score));
    }
    // X'H⁻¹X and X'H⁻¹y with H = I + θZZ' inverted judge by judge:
    // (I + θ11')⁻¹ = I − θ/(1 + θ·n_j) 11'.
    let mut lhs = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for cell in &by_judge {
        let shrink = theta / (1.0 + theta * cell.len() as f64);
        let total: f64 = cell.iter().map(|c| c.1).sum();
        for &(i, score) in cell {
            lhs[(i, i)] += 1.0;
            rhs[i] += score - shrink * total;
            for &(l, _) in cell {
                lhs[(i, l)] -= shrink;
            }
        }
    }
    let (means, inverse_diag, condition) = if theta == 0.0 {
        // No judge variance: GLS is plain poster means.
        let counts: Vec<f64> = (0..p).map(|i| lhs[(i, i)]).collect();
        let (lo, hi) = counts.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        (
            DVector::from_iterator(p, (0..p).map(|i| rhs[i] / counts[i])),
            counts.iter().map(|c| 1.0 / c).collect::<Vec<f64>>(),
            hi / lo,
        )
    } else {
        let chol = Cholesky::new(lhs).ok_or_else(|| FitError::SingularFit("GLS system not positive definite".into()))?;
        let condition = pivot_condition(&chol);
        if !condition.is_finite() || condition > 1e14 {
            return Err(FitError::SingularFit(format!("GLS system ill-conditioned (estimate {condition:.3e})")));
        }
        let inverse = chol.inverse();
        (chol.solve(&rhs), (0..p).map(|i| inverse[(i, i)]).collect(), condition)
    };
    let se = DVector::from_iterator(p, inverse_diag.iter().map(|v| (var_error * v).max(0.0).sqrt()));
    let reviewed = layout.reviewed_mask();
    let pmm = layout.spread(&means);
    Ok(FitResult {
        model_kind: ModelKind::Random,
        grand_mean: means.mean(),
        rank: ranks_from(&pmm, &reviewed),
        pmm,
        se: layout.spread(&se),
        var_judge: Some(theta * var_error),
        var_error,
        converged,
        theta: Some(theta),
        reml_criterion: Some(criterion),
        condition,
    })
}
