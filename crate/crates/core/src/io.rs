//! CSV formats.
//!
//! | file        | header                                                      |
//! |-------------|-------------------------------------------------------------|
//! | design      | `judge_index,faculty,poster_1,...,poster_k`                 |
//! | scores      | `judge_index,poster_id,score`                               |
//! | fit         | `poster_id,pmm,se,rank` (`NA` for unreviewed posters)       |
//! | fit summary | `model_kind,grand_mean,var_judge,var_error,converged`       |
//! | metrics     | `iteration,design,win_prop,median_rank_dev,mean_score_dev,mean_se,disconnected` |
//! | report      | `section,design,metric,n,mean,min,q025,q50,q975,max,ci_low,ci_high` |
//! | histogram   | `section,design,metric,bin_low,bin_high,count`              |
//!
//! Reals are written with Rust's shortest round-trip formatting, so a written
//! file reads back to identical values. Every file is written to a temporary
//! sibling and renamed into place.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::design::{Block, Design, DesignConfig};
use crate::generator::GeneratorKind;
use crate::mixedmodel::{FitResult, Observation, ScoreTable};
use crate::simulation::{histogram, DesignMetrics, IterationResult, Metric, SimStudyReport};
use crate::{DesignError, FitError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("header: {0}")]
    Header(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Scores(#[from] FitError),
}

fn malformed(row: usize, message: impl Into<String>) -> IoError {
    IoError::Malformed {
        row,
        message: message.into(),
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let wrap = |source: std::io::Error| IoError::File {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(contents).map_err(wrap)?;
    tmp.flush().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) if v.is_finite() => v.to_string(),
        _ => "NA".into(),
    }
}

fn parse_bool(field: &str) -> Option<bool> {
    match field.to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn design_to_csv(design: &Design) -> Vec<u8> {
    let mut out = String::from("judge_index,faculty");
    for slot in 1..=design.config().k {
        out.push_str(&format!(",poster_{slot}"));
    }
    out.push('\n');
    for block in design.blocks() {
        out.push_str(&format!("{},{}", block.judge_index, block.faculty));
        for p in &block.poster_ids {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses a design file. `t` defaults to one past the largest poster id.
pub fn design_from_csv<R: Read>(input: R, t: Option<usize>) -> Result<Design, IoError> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() < 4 || &headers[0] != "judge_index" || &headers[1] != "faculty" {
        return Err(IoError::Header("expected judge_index,faculty,poster_1,...,poster_k".into()));
    }
    for (slot, name) in headers.iter().skip(2).enumerate() {
        if name != format!("poster_{}", slot + 1) {
            return Err(IoError::Header(format!("column {} should be poster_{}, found `{name}`", slot + 3, slot + 1)));
        }
    }
    let k = headers.len() - 2;
    let mut blocks = Vec::new();
    let mut seen_judges = std::collections::HashSet::new();
    for (row, record) in rdr.records().enumerate() {
        let row = row + 1;
        let record = record?;
        let judge_index: usize = record[0]
            .parse()
            .map_err(|_| malformed(row, format!("judge_index `{}` is not a non-negative integer", &record[0])))?;
        if !seen_judges.insert(judge_index) {
            return Err(malformed(row, format!("duplicate judge_index {judge_index}")));
        }
        let faculty = parse_bool(&record[1]).ok_or_else(|| malformed(row, format!("faculty `{}` is not a boolean", &record[1])))?;
        let mut poster_ids = Vec::with_capacity(k);
        for field in record.iter().skip(2) {
            let id: usize = field
                .parse()
                .map_err(|_| malformed(row, format!("poster id `{field}` is not a non-negative integer")))?;
            if poster_ids.contains(&id) {
                return Err(malformed(row, format!("poster {id} appears twice")));
            }
            if let Some(t) = t {
                if id >= t {
                    return Err(malformed(row, format!("poster {id} outside [0, {t})")));
                }
            }
            poster_ids.push(id);
        }
        if judge_index != row - 1 {
            return Err(malformed(row, format!("judge_index {judge_index} out of generation order (expected {})", row - 1)));
        }
        blocks.push(Block {
            judge_index,
            poster_ids,
            faculty,
        });
    }
    if blocks.is_empty() {
        return Err(malformed(0, "design has no blocks"));
    }
    let max_id = blocks.iter().flat_map(|b| b.poster_ids.iter()).copied().max().unwrap_or(0);
    let t = t.unwrap_or(max_id + 1).max(k);
    let config = DesignConfig::new(t, k, blocks.len(), 0)?;
    Ok(Design::from_blocks(config, blocks)?)
}

pub fn read_design(path: &Path, t: Option<usize>) -> Result<Design, IoError> {
    design_from_csv(open(path)?, t)
}

pub fn write_design(path: &Path, design: &Design) -> Result<(), IoError> {
    write_atomic(path, &design_to_csv(design))
}

pub fn scores_from_csv<R: Read>(input: R, t: usize, b: usize) -> Result<ScoreTable, IoError> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["judge_index", "poster_id", "score"] {
        return Err(IoError::Header("expected judge_index,poster_id,score".into()));
    }
    let mut observations = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let row = row + 1;
        let record = record?;
        let judge = record[0].parse().map_err(|_| malformed(row, format!("judge_index `{}` invalid", &record[0])))?;
        let poster = record[1].parse().map_err(|_| malformed(row, format!("poster_id `{}` invalid", &record[1])))?;
        let score: f64 = record[2].parse().map_err(|_| malformed(row, format!("score `{}` invalid", &record[2])))?;
        observations.push(Observation { judge, poster, score });
    }
    ScoreTable::new(t, b, observations).map_err(IoError::from)
}

pub fn read_scores(path: &Path, t: usize, b: usize) -> Result<ScoreTable, IoError> {
    scores_from_csv(open(path)?, t, b)
}

pub fn scores_to_csv(scores: &ScoreTable) -> Vec<u8> {
    let mut out = String::from("judge_index,poster_id,score\n");
    for o in scores.observations() {
        out.push_str(&format!("{},{},{}\n", o.judge, o.poster, o.score));
    }
    out.into_bytes()
}

pub fn fit_to_csv(fit: &FitResult) -> Vec<u8> {
    let mut out = String::from("poster_id,pmm,se,rank\n");
    for i in 0..fit.pmm.len() {
        let rank = fit.rank[i].map_or("NA".to_string(), |r| r.to_string());
        out.push_str(&format!("{i},{},{},{rank}\n", fmt_opt(Some(fit.pmm[i])), fmt_opt(Some(fit.se[i]))));
    }
    out.into_bytes()
}

pub fn fit_summary_to_csv(fit: &FitResult) -> Vec<u8> {
    format!(
        "model_kind,grand_mean,var_judge,var_error,converged\n{},{},{},{},{}\n",
        fit.model_kind.label(),
        fit.grand_mean,
        fmt_opt(fit.var_judge),
        fit.var_error,
        fit.converged
    )
    .into_bytes()
}

pub const METRICS_HEADER: &str = "iteration,design,win_prop,median_rank_dev,mean_score_dev,mean_se,disconnected";

pub fn metrics_to_csv(iterations: &[IterationResult]) -> Vec<u8> {
    let mut out = format!("{METRICS_HEADER}\n");
    for it in iterations {
        for m in &it.designs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                it.iteration, m.kind, m.win_prop, m.median_rank_dev, m.mean_score_dev, m.mean_se, m.disconnected
            ));
        }
    }
    out.into_bytes()
}

/// Reads per-(iteration, design) rows back into iterations, in file order of
/// first appearance. Also returns the design kinds in order of first appearance.
pub fn metrics_from_csv<R: Read>(input: R) -> Result<(Vec<GeneratorKind>, Vec<IterationResult>), IoError> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != METRICS_HEADER {
        return Err(IoError::Header(format!("expected {METRICS_HEADER}")));
    }
    let mut kinds: Vec<GeneratorKind> = Vec::new();
    let mut iterations: Vec<IterationResult> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let row = row + 1;
        let record = record?;
        let num = |col: usize| -> Result<f64, IoError> {
            record[col]
                .parse::<f64>()
                .map_err(|_| malformed(row, format!("{} `{}` is not a number", &headers[col], &record[col])))
        };
        let iteration: usize = record[0].parse().map_err(|_| malformed(row, "iteration is not an integer"))?;
        let kind: GeneratorKind = record[1].parse().map_err(|e: String| malformed(row, e))?;
        let disconnected = parse_bool(&record[6]).ok_or_else(|| malformed(row, "disconnected is not a boolean"))?;
        let metrics = DesignMetrics {
            kind,
            win_prop: num(2)?,
            median_rank_dev: num(3)?,
            mean_score_dev: num(4)?,
            mean_se: num(5)?,
            disconnected,
        };
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
        match iterations.iter_mut().find(|it| it.iteration == iteration) {
            Some(it) => {
                if it.for_kind(kind).is_some() {
                    return Err(malformed(row, format!("iteration {iteration} lists {kind} twice")));
                }
                it.designs.push(metrics);
            }
            None => iterations.push(IterationResult {
                iteration,
                designs: vec![metrics],
            }),
        }
    }
    for it in &iterations {
        if it.designs.len() != kinds.len() {
            return Err(malformed(0, format!("iteration {} is missing designs", it.iteration)));
        }
    }
    Ok((kinds, iterations))
}

pub const REPORT_HEADER: &str = "section,design,metric,n,mean,min,q025,q50,q975,max,ci_low,ci_high";

/// Summary table: one `design` row per (design, metric), one `difference`
/// row per (pair, metric), then a `disconnected` count for RANDOM and a
/// `failed` count of dropped iterations.
pub fn report_to_csv(report: &SimStudyReport) -> Vec<u8> {
    let mut out = format!("{REPORT_HEADER}\n");
    for s in &report.summaries {
        let d = &s.distribution;
        out.push_str(&format!(
            "design,{},{},{},{},{},{},{},{},{},NA,NA\n",
            s.kind, s.metric, d.n, d.mean, d.min, d.q025, d.q50, d.q975, d.max
        ));
    }
    for s in &report.differences {
        let d = &s.distribution;
        out.push_str(&format!(
            "difference,{}-{},{},{},{},{},{},{},{},{},{},{}\n",
            s.first,
            s.second,
            s.metric,
            d.n,
            s.mean,
            d.min,
            d.q025,
            d.q50,
            d.q975,
            d.max,
            fmt_opt(Some(s.ci_low)),
            fmt_opt(Some(s.ci_high))
        ));
    }
    if report.designs.contains(&GeneratorKind::Random) {
        out.push_str(&format!(
            "disconnected,RANDOM,NA,{},NA,NA,NA,NA,NA,NA,NA,NA\n",
            report.disconnected_random
        ));
    }
    out.push_str(&format!("failed,NA,NA,{},NA,NA,NA,NA,NA,NA,NA,NA\n", report.failures.len()));
    out.into_bytes()
}

pub const HISTOGRAM_HEADER: &str = "section,design,metric,bin_low,bin_high,count";

pub fn histograms_to_csv(report: &SimStudyReport, bins: usize) -> Vec<u8> {
    let mut out = format!("{HISTOGRAM_HEADER}\n");
    for &kind in &report.designs {
        for metric in Metric::ALL {
            let values = report.values(kind, metric).unwrap_or_default();
            for (lo, hi, count) in histogram(&values, bins) {
                out.push_str(&format!("design,{kind},{metric},{lo},{hi},{count}\n"));
            }
        }
    }
    for diff in &report.differences {
        let a = report.values(diff.first, diff.metric).unwrap_or_default();
        let b = report.values(diff.second, diff.metric).unwrap_or_default();
        let values: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        for (lo, hi, count) in histogram(&values, bins) {
            out.push_str(&format!("difference,{}-{},{},{lo},{hi},{count}\n", diff.first, diff.second, diff.metric));
        }
    }
    out.into_bytes()
}

/// Counts data lines, for quick structural checks.
pub fn count_rows(path: &Path) -> Result<usize, IoError> {
    Ok(open(path)?.lines().count().saturating_sub(1))
}
