//! Plain-text loaders and writers for the on-disk exchange formats.
//!
//! All formats are tab-separated with one record per line; lines beginning
//! with `#` and blank lines are ignored. Writers emit records in ascending
//! id order so that identical data always produces identical bytes.
//!
//! * edge list: `src<TAB>dst<TAB>weight`
//! * follower sets: `bot_id<TAB>follower_id`
//! * roles: `user_id<TAB>{bot|legit|seed}`

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::{ActionGraph, BotnetInstance, GraphError, UserId, UserRole};

#[derive(Error, Debug)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: {source}")]
    Graph {
        path: PathBuf,
        line: usize,
        #[source]
        source: GraphError,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Iterates the meaningful lines of a TSV file as `(line_number, fields)`.
fn for_each_record(
    path: &Path,
    expected_fields: usize,
    mut f: impl FnMut(usize, &[&str]) -> Result<(), IoError>,
) -> Result<(), IoError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != expected_fields {
            return Err(parse_err(
                path,
                line_no,
                format!(
                    "expected {expected_fields} tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        f(line_no, &fields)?;
    }
    Ok(())
}

fn parse_id(path: &Path, line: usize, field: &str) -> Result<UserId, IoError> {
    field
        .parse::<u64>()
        .map(UserId)
        .map_err(|_| parse_err(path, line, format!("invalid user id {field:?}")))
}

/// Loads a weighted edge list into an [`ActionGraph`].
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<ActionGraph, IoError> {
    let path = path.as_ref();
    let mut g = ActionGraph::new();
    for_each_record(path, 3, |line, fields| {
        let src = parse_id(path, line, fields[0])?;
        let dst = parse_id(path, line, fields[1])?;
        let weight = fields[2]
            .parse::<u64>()
            .map_err(|_| parse_err(path, line, format!("invalid weight {:?}", fields[2])))?;
        g.add_interaction(src, dst, weight).map_err(|source| IoError::Graph {
            path: path.to_path_buf(),
            line,
            source,
        })
    })?;
    Ok(g)
}

/// Writes the arcs of `g` as `src<TAB>dst<TAB>weight`, ascending by (src, dst).
pub fn write_edge_list(path: impl AsRef<Path>, g: &ActionGraph) -> Result<(), IoError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for (src, dst, weight) in g.arcs() {
        writeln!(w, "{src}\t{dst}\t{weight}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Loads per-bot follower sets (`bot_id<TAB>follower_id`, one edge per line).
pub fn load_follower_sets(path: impl AsRef<Path>) -> Result<BotnetInstance, IoError> {
    let path = path.as_ref();
    let mut followers: BTreeMap<UserId, BTreeSet<UserId>> = BTreeMap::new();
    for_each_record(path, 2, |line, fields| {
        let bot = parse_id(path, line, fields[0])?;
        let follower = parse_id(path, line, fields[1])?;
        followers.entry(bot).or_default().insert(follower);
        Ok(())
    })?;
    BotnetInstance::new(followers).map_err(|source| IoError::Graph {
        path: path.to_path_buf(),
        line: 0,
        source,
    })
}

/// Writes follower sets as `bot_id<TAB>follower_id`, ascending by both ids.
pub fn write_follower_sets(
    path: impl AsRef<Path>,
    botnet: &BotnetInstance,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for (bot, set) in botnet.iter() {
        for follower in set {
            writeln!(w, "{bot}\t{follower}").map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Loads a role table (`user_id<TAB>{bot|legit|seed}`).
pub fn load_roles(path: impl AsRef<Path>) -> Result<BTreeMap<UserId, UserRole>, IoError> {
    let path = path.as_ref();
    let mut roles = BTreeMap::new();
    for_each_record(path, 2, |line, fields| {
        let user = parse_id(path, line, fields[0])?;
        let role: UserRole = fields[1].parse().map_err(|source| IoError::Graph {
            path: path.to_path_buf(),
            line,
            source,
        })?;
        if let Some(previous) = roles.insert(user, role) {
            if previous != role {
                return Err(parse_err(
                    path,
                    line,
                    format!("user {user} listed with conflicting roles {previous} and {role}"),
                ));
            }
        }
        Ok(())
    })?;
    Ok(roles)
}

/// Writes a role table, ascending by user id.
pub fn write_roles(
    path: impl AsRef<Path>,
    roles: &BTreeMap<UserId, UserRole>,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for (user, role) in roles {
        writeln!(w, "{user}\t{role}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn edge_list_round_trip_with_comments() {
        let f = write_tmp("# interaction arcs\n1\t2\t3\n\n2\t3\t1\n1\t2\t2\n");
        let g = load_edge_list(f.path()).unwrap();
        assert_eq!(g.arc_weight(UserId(1), UserId(2)), Some(5));
        assert_eq!(g.arc_count(), 2);
        assert_eq!(g.total_weight(), 6);

        let out = tempfile::NamedTempFile::new().unwrap();
        write_edge_list(out.path(), &g).unwrap();
        let reloaded = load_edge_list(out.path()).unwrap();
        assert_eq!(reloaded, g);
    }

    #[test]
    fn edge_list_reports_offending_line() {
        let f = write_tmp("1\t2\t3\n4\t4\t1\n");
        let err = load_edge_list(f.path()).unwrap_err();
        match err {
            IoError::Graph { line, source, .. } => {
                assert_eq!(line, 2);
                assert!(matches!(source, GraphError::SelfLoop { .. }));
            }
            other => panic!("expected graph error, got {other}"),
        }
    }

    #[test]
    fn edge_list_rejects_malformed_rows() {
        let f = write_tmp("1\t2\n");
        assert!(matches!(
            load_edge_list(f.path()),
            Err(IoError::Parse { line: 1, .. })
        ));
        let f = write_tmp("1\t2\tmany\n");
        assert!(matches!(
            load_edge_list(f.path()),
            Err(IoError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn follower_sets_round_trip() {
        let f = write_tmp("1\t10\n1\t11\n2\t11\n");
        let b = load_follower_sets(f.path()).unwrap();
        assert_eq!(b.bot_count(), 2);
        assert_eq!(b.follower_count(UserId(1)).unwrap(), 2);

        let out = tempfile::NamedTempFile::new().unwrap();
        write_follower_sets(out.path(), &b).unwrap();
        assert_eq!(load_follower_sets(out.path()).unwrap(), b);
    }

    #[test]
    fn roles_round_trip_and_conflicts() {
        let f = write_tmp("1\tbot\n2\tlegit\n3\tseed\n");
        let roles = load_roles(f.path()).unwrap();
        assert_eq!(roles[&UserId(1)], UserRole::Bot);
        assert_eq!(roles[&UserId(3)], UserRole::Seed);

        let out = tempfile::NamedTempFile::new().unwrap();
        write_roles(out.path(), &roles).unwrap();
        assert_eq!(load_roles(out.path()).unwrap(), roles);

        let f = write_tmp("1\tbot\n1\tlegit\n");
        assert!(matches!(
            load_roles(f.path()),
            Err(IoError::Parse { line: 2, .. })
        ));
    }
}
