//! CSV emission and reloading. Every table is newline-terminated with a
//! mandatory header row, and numeric fields use Rust's shortest round-trip
//! decimal formatting, so equal data always produces equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use escapelab::sim::{Checkpoint, PathEnsemble, PathRecord, SimConfig};

#[derive(Debug)]
pub enum TableError {
    Io { path: String, source: std::io::Error },
    Parse { path: String, line: usize, reason: String },
}

impl std::fmt::Display for TableError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TableError::Io { path, source } => write!(f, "cannot read {path}: {source}"),
            TableError::Parse { path, line, reason } => write!(f, "{path}:{line}: {reason}"),
        }
    }
}

impl std::error::Error for TableError {}

/// Rows (path, n, tau_n), finite passages only.
pub fn render_passages(ens: &PathEnsemble) -> String {
    let mut out = String::from("path,n,tau_n\n");
    for rec in &ens.records {
        for (i, &(n, _)) in ens.levels.iter().enumerate() {
            let tau = rec.passage_times[i];
            if tau.is_finite() {
                let _ = writeln!(out, "{},{},{}", rec.path_index, n, tau);
            }
        }
    }
    out
}

/// Rows (path, t, sup_r), one per recorded checkpoint.
pub fn render_suprema(ens: &PathEnsemble) -> String {
    let mut out = String::from("path,t,sup_r\n");
    for rec in &ens.records {
        for cp in &rec.checkpoints {
            let _ = writeln!(out, "{},{},{}", rec.path_index, cp.t, cp.running_sup);
        }
    }
    out
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_rate_rows(
    rows: &[(f64, f64, f64)],
    model: &str,
    lower: f64,
    tolerance: f64,
) -> String {
    let mut out = String::from("t,psi,C_psi_Ct,model,lower,tolerance\n");
    let model = csv_quote(model);
    for &(t, psi, envelope) in rows {
        let _ = writeln!(out, "{t},{psi},{envelope},{model},{lower},{tolerance}");
    }
    out
}

pub fn render_schedule(s: &escapelab::schedule::CrossingSchedule, c: f64) -> String {
    let mut out = String::from("n,R_n,r_n,t_n,T_n,log_tail_bound\n");
    for e in s.entries() {
        let bound = escapelab::schedule::tail_bound(s, e.n, c)
            .map(|b| b.log_bound)
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.n, e.radius, e.gap, e.time_increment, e.accumulated_time, bound
        );
    }
    out
}

fn read_rows(path: &Path, header: &str) -> Result<Vec<Vec<String>>, TableError> {
    let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == header => {}
        Some((_, first)) => {
            return Err(TableError::Parse {
                path: path.display().to_string(),
                line: 1,
                reason: format!("expected header `{header}`, got `{first}`"),
            })
        }
        None => {
            return Err(TableError::Parse {
                path: path.display().to_string(),
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let columns = header.split(',').count();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
        if fields.len() != columns {
            return Err(TableError::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                reason: format!("expected {columns} fields, got {}", fields.len()),
            });
        }
        rows.push(fields);
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
) -> Result<T, TableError> {
    raw.parse().map_err(|_| TableError::Parse {
        path: path.display().to_string(),
        line,
        reason: format!("bad {name} value `{raw}`"),
    })
}

/// Rebuild an ensemble from persisted tables. The reloaded records carry the
/// passage times and (time, supremum) checkpoints the tables hold; per-step
/// diagnostics that were not persisted read as zero.
pub fn load_ensemble(
    passages: &Path,
    suprema: &Path,
    config: SimConfig,
    model_spec: String,
    levels: Vec<(u32, f64)>,
) -> Result<PathEnsemble, TableError> {
    let paths = config.paths;
    let mut passage_times = vec![vec![f64::INFINITY; levels.len()]; paths];
    for (idx, row) in read_rows(passages, "path,n,tau_n")?.into_iter().enumerate() {
        let line = idx + 2;
        let p: usize = field(passages, line, "path", &row[0])?;
        let n: u32 = field(passages, line, "n", &row[1])?;
        let tau: f64 = field(passages, line, "tau_n", &row[2])?;
        let slot = levels.iter().position(|&(ln, _)| ln == n);
        match (slot, p < paths) {
            (Some(i), true) => passage_times[p][i] = tau,
            _ => {
                return Err(TableError::Parse {
                    path: passages.display().to_string(),
                    line,
                    reason: format!("path {p} / level {n} outside the run's configuration"),
                })
            }
        }
    }
    let mut checkpoints = vec![Vec::new(); paths];
    for (idx, row) in read_rows(suprema, "path,t,sup_r")?.into_iter().enumerate() {
        let line = idx + 2;
        let p: usize = field(suprema, line, "path", &row[0])?;
        let t: f64 = field(suprema, line, "t", &row[1])?;
        let sup: f64 = field(suprema, line, "sup_r", &row[2])?;
        if p >= paths {
            return Err(TableError::Parse {
                path: suprema.display().to_string(),
                line,
                reason: format!("path {p} outside the run's configuration"),
            });
        }
        checkpoints[p].push(Checkpoint { t, radius: f64::NAN, running_sup: sup });
    }
    let first_level_n = levels.first().map_or(0, |&(n, _)| n);
    let records: Vec<PathRecord> = passage_times
        .into_iter()
        .zip(checkpoints)
        .enumerate()
        .map(|(p, (times, cps))| {
            let sup = cps.iter().map(|c| c.running_sup).fold(0.0, f64::max);
            let t = cps.iter().map(|c| c.t).fold(0.0, f64::max);
            PathRecord {
                path_index: p as u64,
                seed: config.seed,
                checkpoints: cps,
                first_level_n,
                passage_times: times,
                final_time: t,
                final_radius: f64::NAN,
                running_sup: sup,
                steps: 0,
                drift_caps: 0,
            }
        })
        .collect();
    Ok(PathEnsemble::from_records(config, model_spec, levels, records))
}
