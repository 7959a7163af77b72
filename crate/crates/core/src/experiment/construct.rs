use std::fs;
use std::path::{Path, PathBuf};

use super::{ensure_dir, write_text};
use crate::graph::{build_circulant, build_periodic_tight, read_graph_file, write_graph_file, GraphSequence};
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.txt";

pub fn write_circulant(learners: usize, degree: usize, path: &Path) -> Result<()> {
    let g = build_circulant(learners, degree)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_graph_file(&g, path)
}

/// Writes `snapshot_<r>.txt` for every step of the period and a manifest
/// (`period <T>` followed by one file name per line) into `dir`. Returns the
/// manifest path.
pub fn write_periodic_tight(learners: usize, degree: usize, period: usize, dir: &Path) -> Result<PathBuf> {
    let GraphSequence::Periodic(snapshots) = build_periodic_tight(learners, degree, period)? else {
        unreachable!("periodic construction");
    };
    ensure_dir(dir)?;
    let mut manifest = format!("period {period}\n");
    for (r, g) in snapshots.iter().enumerate() {
        let name = format!("snapshot_{r}.txt");
        write_graph_file(g, &dir.join(&name))?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    let path = dir.join(MANIFEST_NAME);
    write_text(&path, &manifest)?;
    Ok(path)
}

pub fn read_periodic_manifest(path: &Path) -> Result<GraphSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let parse_err = |line: usize, msg: &str| Error::Parse {
        path: Some(path.to_path_buf()),
        line,
        msg: msg.into(),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let period: usize = match lines.next() {
        Some((_, l)) => match l.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["period", p] => p.parse().map_err(|_| parse_err(1, "bad period"))?,
            _ => return Err(parse_err(1, "expected \"period <T>\"")),
        },
        None => return Err(parse_err(1, "empty manifest")),
    };
    let snapshots = lines
        .map(|(_, name)| read_graph_file(&base.join(name.trim())))
        .collect::<Result<Vec<_>>>()?;
    if snapshots.len() != period {
        return Err(parse_err(
            1,
            &format!("period {period} but {} snapshot files", snapshots.len()),
        ));
    }
    GraphSequence::periodic(snapshots)
}
