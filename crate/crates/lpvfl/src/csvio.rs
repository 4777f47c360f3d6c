//! Trajectory CSV files: a `t` column followed by one column per channel.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lpvfl_core::Trajectory;

/// Channel names `{prefix}1 … {prefix}n`.
pub fn channel_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("t") {
        bail!("{}: first column must be `t`", path.display());
    }
    let dim = headers.len() - 1;
    let mut t_start = None;
    let mut data = Vec::new();
    let mut len = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), line + 1))?;
        if rec.len() != dim + 1 {
            bail!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                line + 1,
                rec.len(),
                dim + 1
            );
        }
        let t: i64 = rec[0]
            .trim()
            .parse()
            .with_context(|| format!("{}: bad time label `{}`", path.display(), &rec[0]))?;
        let start = *t_start.get_or_insert(t);
        if t != start + len as i64 {
            bail!(
                "{}: time labels must be consecutive, found {t} after {}",
                path.display(),
                start + len as i64 - 1
            );
        }
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("{}: bad value `{field}`", path.display()))?;
            data.push(v);
        }
        len += 1;
    }
    let Some(t_start) = t_start else {
        bail!("{}: no samples", path.display());
    };
    Ok(Trajectory::from_flat(dim, t_start, len, data)?)
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn trajectory_csv(traj: &Trajectory, names: &[String]) -> Result<Vec<u8>> {
    if names.len() != traj.dim() {
        bail!(
            "{} column names for a {}-channel trajectory",
            names.len(),
            traj.dim()
        );
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    wtr.write_record(&header)?;
    for (t, s) in traj.iter() {
        let mut row = vec![t.to_string()];
        row.extend(s.iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    Ok(wtr.into_inner().map_err(|e| e.into_error())?)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, names: &[String]) -> Result<()> {
    write_atomic(path, &trajectory_csv(traj, names)?)
}
