//! Plain-text graph files.
//!
//! ```text
//! n 5
//! 1 0
//! 1 1
//! 2 0
//! ```
//!
//! The first non-blank line is `n <count>`; every following line is one
//! directed edge `src dst` with 0-based ids. Blank lines and lines starting
//! with `#` are ignored. Agents that never appear as a source have no
//! neighbours.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::GraphSnapshot;
use crate::{Error, Result};

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: None,
        line,
        msg: msg.into(),
    }
}

pub fn parse_graph(text: &str) -> Result<GraphSnapshot> {
    let mut n = None;
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(count) = n else {
            match fields.as_slice() {
                ["n", count] => {
                    let count: usize = count
                        .parse()
                        .map_err(|_| parse_error(lineno, format!("bad agent count {count:?}")))?;
                    n = Some(count);
                    sets = vec![Vec::new(); count];
                    continue;
                }
                _ => return Err(parse_error(lineno, "expected header \"n <count>\"")),
            }
        };
        let [src, dst] = fields.as_slice() else {
            return Err(parse_error(lineno, "expected \"src dst\""));
        };
        let parse_id = |s: &str| -> Result<usize> {
            let id: usize = s
                .parse()
                .map_err(|_| parse_error(lineno, format!("bad agent id {s:?}")))?;
            if id >= count {
                return Err(parse_error(lineno, format!("agent {id} outside [0, {count})")));
            }
            Ok(id)
        };
        let (src, dst) = (parse_id(src)?, parse_id(dst)?);
        if sets[src].contains(&dst) {
            return Err(parse_error(lineno, format!("duplicate edge {src} {dst}")));
        }
        sets[src].push(dst);
    }
    if n.is_none() {
        return Err(parse_error(1, "missing header \"n <count>\""));
    }
    GraphSnapshot::from_neighbor_sets(&sets)
}

pub fn read_graph_file(path: &Path) -> Result<GraphSnapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph(&text).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: Some(path.to_path_buf()),
            line,
            msg,
        },
        other => other,
    })
}

pub fn write_graph(snapshot: &GraphSnapshot) -> String {
    let mut out = format!("n {}\n", snapshot.n());
    for (src, dst) in snapshot.edges() {
        let _ = writeln!(out, "{src} {dst}");
    }
    out
}

pub fn write_graph_file(snapshot: &GraphSnapshot, path: &Path) -> Result<()> {
    fs::write(path, write_graph(snapshot)).map_err(|e| Error::io(path, e))
}
