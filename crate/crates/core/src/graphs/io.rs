//! Line-oriented text formats.
//!
//! Hypergraphs: header `H N d r`, then one hyperedge per line as
//! space-separated vertex indices. Graphs: header `G N`, then `u v w` triples.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use super::{Hypergraph, WeightedGraph};
use crate::error::{Error, Result};

/// Either kind of graph file.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphFile {
    Hyper(Hypergraph),
    Graph(WeightedGraph),
}

impl GraphFile {
    /// The weighted graph routed on: clique expansion for hypergraphs.
    pub fn to_graph(&self) -> WeightedGraph {
        match self {
            GraphFile::Hyper(h) => super::clique_expansion(h),
            GraphFile::Graph(g) => g.clone(),
        }
    }
}

pub fn write_hypergraph(h: &Hypergraph) -> String {
    let mut s = format!("H {} {} {}\n", h.num_vertices(), h.d(), h.r());
    for e in h.hyperedges() {
        let line: Vec<String> = e.iter().map(usize::to_string).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_graph(g: &WeightedGraph) -> String {
    let mut s = format!("G {}\n", g.num_vertices());
    for (u, v, w) in g.edges() {
        let _ = writeln!(s, "{u} {v} {w}");
    }
    s
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("expected a non-negative integer, found '{tok}'") })
}

/// Parse either format, dispatching on the header letter.
pub fn parse_graph_file(text: &str) -> Result<GraphFile> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty input".into() })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    match toks.first().copied() {
        Some("H") if toks.len() == 4 => {
            let n = parse_usize(toks[1], hline)?;
            let d = parse_usize(toks[2], hline)?;
            let r = parse_usize(toks[3], hline)?;
            let mut edges = Vec::new();
            for (ln, l) in lines {
                let e = l.split_whitespace().map(|t| parse_usize(t, ln)).collect::<Result<Vec<_>>>()?;
                edges.push(e);
            }
            let h = Hypergraph::new(n, r, edges).map_err(|e| Error::Parse { line: hline, msg: e.to_string() })?;
            if h.d() != d {
                return Err(Error::Parse { line: hline, msg: format!("header degree {d} but maximum vertex degree is {}", h.d()) });
            }
            Ok(GraphFile::Hyper(h))
        }
        Some("G") if toks.len() == 2 => {
            let n = parse_usize(toks[1], hline)?;
            let mut edges = Vec::new();
            for (ln, l) in lines {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(Error::Parse { line: ln, msg: "expected 'u v w'".into() });
                }
                let w = parse_usize(t[2], ln)?;
                let w = u32::try_from(w).map_err(|_| Error::Parse { line: ln, msg: "weight too large".into() })?;
                edges.push((parse_usize(t[0], ln)?, parse_usize(t[1], ln)?, w));
            }
            let g = WeightedGraph::from_edges(n, edges).map_err(|e| Error::Parse { line: hline, msg: e.to_string() })?;
            Ok(GraphFile::Graph(g))
        }
        _ => Err(Error::Parse { line: hline, msg: "header must be 'H N d r' or 'G N'".into() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_projective_plane, clique_expansion};

    #[test]
    fn hypergraph_round_trip() {
        let h = build_projective_plane(2).unwrap();
        let text = write_hypergraph(&h);
        assert!(text.starts_with("H 7 3 3\n0 1 3\n"));
        assert_eq!(parse_graph_file(&text).unwrap(), GraphFile::Hyper(h));
    }

    #[test]
    fn graph_round_trip() {
        let g = clique_expansion(&build_projective_plane(3).unwrap());
        let text = write_graph(&g);
        assert_eq!(parse_graph_file(&text).unwrap(), GraphFile::Graph(g));
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = parse_graph_file("G 3\n0 1 1\n0 x 1\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, msg: "expected a non-negative integer, found 'x'".into() });
        assert!(parse_graph_file("X 3").is_err());
        assert!(parse_graph_file("").is_err());
        assert!(parse_graph_file("H 3 2 3\n0 1 2\n").is_err());
    }
}
