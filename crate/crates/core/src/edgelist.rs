//! Plain-text edge lists: one `u v c_uv c_vu` row per line, `#` comments.
//!
//! The writer emits a `# nodes: N` comment so isolated trailing nodes survive
//! a round trip; the reader honors it when present and otherwise infers the
//! node count from the largest id.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::{build_network, CreditNetwork, EdgeSpec, NetworkState};

const NODES_DIRECTIVE: &str = "nodes:";

/// Parses edge rows and the optional node-count directive.
pub fn parse_rows(text: &str) -> Result<(Option<usize>, Vec<EdgeSpec>)> {
    let mut nodes = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(count) = comment.trim().strip_prefix(NODES_DIRECTIVE) {
                let count = count.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("bad node count: {e}"),
                })?;
                nodes = Some(count);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 4 fields `u v c_uv c_vu`, found {}", fields.len()),
            });
        }
        let node = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad node id {s:?}: {e}"),
            })
        };
        let cap = |s: &str| {
            s.parse::<i64>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad capacity {s:?}: {e}"),
            })
        };
        rows.push((node(fields[0])?, node(fields[1])?, cap(fields[2])?, cap(fields[3])?));
    }
    Ok((nodes, rows))
}

pub fn parse(text: &str) -> Result<(CreditNetwork, NetworkState)> {
    let (nodes, rows) = parse_rows(text)?;
    build_network(nodes, &rows)
}

pub fn read(path: impl AsRef<Path>) -> Result<(CreditNetwork, NetworkState)> {
    parse(&std::fs::read_to_string(path)?)
}

/// Dumps a state in canonical edge order.
pub fn format(network: &CreditNetwork, state: &NetworkState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# u v c_uv c_vu");
    let _ = writeln!(out, "# {NODES_DIRECTIVE} {}", network.node_count());
    for (idx, e) in network.edges().iter().enumerate() {
        let (c_uv, c_vu) = state.split(idx);
        let _ = writeln!(out, "{} {} {} {}", e.u, e.v, c_uv, c_vu);
    }
    out
}

pub fn write(path: impl AsRef<Path>, network: &CreditNetwork, state: &NetworkState) -> Result<()> {
    std::fs::write(path, format(network, state))?;
    Ok(())
}
