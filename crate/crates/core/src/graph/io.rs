//! Graph files: a JSON document or a plain `u v` edge list.
//!
//! Writers are canonical (sorted vertices and edges, LF endings), so reading a
//! file we wrote and writing it again gives identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Graph, Vertex};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    vertices: Vec<JsonVertex>,
    edges: Vec<[u64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct JsonVertex {
    id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

pub fn read_json(text: &str) -> Result<Graph> {
    let doc: JsonGraph = serde_json::from_str(text)?;
    let mut index = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for v in &doc.vertices {
        if labels.insert(v.id, v.label.clone()).is_some() {
            return Err(Error::Parse(format!("vertex {} listed twice", v.id)));
        }
    }
    for &[u, v] in &doc.edges {
        for id in [u, v] {
            if !labels.contains_key(&id) {
                return Err(Error::Parse(format!("edge uses undeclared vertex {id}")));
            }
        }
    }
    for (i, &id) in labels.keys().enumerate() {
        index.insert(id, i);
    }
    let edges: Vec<(Vertex, Vertex)> = doc
        .edges
        .iter()
        .map(|&[u, v]| (index[&u], index[&v]))
        .collect();
    Graph::with_labels(labels.len(), &edges, labels.into_values().collect())
}

pub fn write_json(g: &Graph) -> String {
    let doc = JsonGraph {
        vertices: g
            .vertices()
            .map(|v| JsonVertex {
                id: v as u64,
                label: g.label(v).map(str::to_owned),
            })
            .collect(),
        edges: g
            .edges()
            .into_iter()
            .map(|e| {
                let (u, v) = e.endpoints();
                [u as u64, v as u64]
            })
            .collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("graph JSON is always serialisable");
    out.push('\n');
    out
}

/// Parses `u v` lines. Blank lines and `#` comments are skipped.
pub fn read_edge_list(text: &str) -> Result<Graph> {
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut next = || -> Result<u64> {
            parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: expected two ids", lineno + 1)))?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        let (u, v) = (next()?, next()?);
        if parts.next().is_some() {
            return Err(Error::Parse(format!("line {}: trailing data", lineno + 1)));
        }
        pairs.push((u, v));
    }
    super::build_graph(&pairs)
}

pub fn write_edge_list(g: &Graph) -> String {
    g.edges()
        .into_iter()
        .map(|e| {
            let (u, v) = e.endpoints();
            format!("{u} {v}\n")
        })
        .collect()
}

/// Reads JSON when the file name ends in `.json`, an edge list otherwise.
pub fn read_graph_file(path: &Path) -> Result<Graph> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext == "json") {
        read_json(&text)
    } else {
        read_edge_list(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_bit_exact() {
        let text = r#"{"vertices":[{"id":0,"label":"e"},{"id":1},{"id":2,"label":"a"}],"edges":[[0,1],[0,2]]}"#
            .to_string()
            + "\n";
        let g = read_json(&text).unwrap();
        assert_eq!(g.label(0), Some("e"));
        assert_eq!(g.label(1), None);
        assert_eq!(write_json(&g), text);
    }

    #[test]
    fn json_ids_compacted() {
        let g = read_json(r#"{"vertices":[{"id":7},{"id":3}],"edges":[[7,3]]}"#).unwrap();
        assert_eq!(
            write_json(&g),
            "{\"vertices\":[{\"id\":0},{\"id\":1}],\"edges\":[[0,1]]}\n"
        );
    }

    #[test]
    fn edge_list_round_trip() {
        let g = read_edge_list("2 1\n# comment\n\n0 1\n").unwrap();
        let out = write_edge_list(&g);
        assert_eq!(out, "0 1\n1 2\n");
        assert_eq!(write_edge_list(&read_edge_list(&out).unwrap()), out);
    }

    #[test]
    fn bad_input() {
        assert!(matches!(read_edge_list("0 x\n"), Err(Error::Parse(_))));
        assert!(matches!(read_edge_list("0 1 2\n"), Err(Error::Parse(_))));
        assert!(matches!(
            read_json(r#"{"vertices":[{"id":0}],"edges":[[0,1]]}"#),
            Err(Error::Parse(_))
        ));
    }
}
