//! JSON formats for graphs and vertex functions.
//!
//! ```text
//! {"vertices":[{"id":"a","mu":1.0},...],"edges":[{"u":"a","v":"b","w":2.0},...]}
//! {"a":0.5,"b":-1.0,...}
//! ```

use std::collections::{HashMap, HashSet};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{GraphError, VertexFunction, WeightedGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(String),
    /// `field` is a path such as `vertices[2].mu`.
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn field(path: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Field {
        field: path.into(),
        message: message.into(),
    }
}

fn get<'v>(obj: &'v Value, key: &str, path: &str) -> Result<&'v Value, IoError> {
    obj.as_object()
        .ok_or_else(|| field(path, "expected an object"))?
        .get(key)
        .ok_or_else(|| field(join(path, key), "missing"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_owned()
    } else {
        format!("{path}.{key}")
    }
}

fn string<'v>(obj: &'v Value, key: &str, path: &str) -> Result<&'v str, IoError> {
    get(obj, key, path)?
        .as_str()
        .ok_or_else(|| field(format!("{path}.{key}"), "expected a string"))
}

fn positive(obj: &Value, key: &str, path: &str) -> Result<f64, IoError> {
    let here = format!("{path}.{key}");
    let x = get(obj, key, path)?
        .as_f64()
        .ok_or_else(|| field(&here, "expected a number"))?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(field(&here, format!("must be positive, got {x}")));
    }
    Ok(x)
}

fn array<'v>(doc: &'v Value, key: &str) -> Result<&'v Vec<Value>, IoError> {
    get(doc, key, "")?
        .as_array()
        .ok_or_else(|| field(key, "expected an array"))
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph<f64>, IoError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    if !doc.is_object() {
        return Err(field("$", "expected an object with \"vertices\" and \"edges\""));
    }
    let vertices = array(&doc, "vertices")?;
    let edges = array(&doc, "edges")?;
    if vertices.is_empty() {
        return Err(field("vertices", "must not be empty"));
    }
    let mut ids = Vec::with_capacity(vertices.len());
    let mut mu = Vec::with_capacity(vertices.len());
    let mut index = HashMap::new();
    for (i, v) in vertices.iter().enumerate() {
        let path = format!("vertices[{i}]");
        let id = string(v, "id", &path)?;
        if index.insert(id.to_owned(), i).is_some() {
            return Err(field(format!("{path}.id"), format!("duplicate vertex id {id:?}")));
        }
        ids.push(id.to_owned());
        mu.push(positive(v, "mu", &path)?);
    }
    let mut seen = HashSet::new();
    let mut list = Vec::with_capacity(edges.len());
    for (j, e) in edges.iter().enumerate() {
        let path = format!("edges[{j}]");
        let end = |key: &str| -> Result<usize, IoError> {
            let id = string(e, key, &path)?;
            index
                .get(id)
                .copied()
                .ok_or_else(|| field(format!("{path}.{key}"), format!("unknown vertex {id:?}")))
        };
        let (u, v) = (end("u")?, end("v")?);
        let w = positive(e, "w", &path)?;
        if u == v {
            return Err(field(&path, format!("self-loop at {:?}", ids[u])));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(field(&path, format!("duplicate edge {:?}-{:?}", ids[u], ids[v])));
        }
        list.push((u, v, w));
    }
    Ok(WeightedGraph::new(ids, mu, list)?)
}

pub fn graph_to_json(g: &WeightedGraph<f64>) -> Value {
    let ids = g.vertex_ids();
    let vertices: Vec<Value> = ids
        .iter()
        .zip(g.mu())
        .map(|(id, &m)| serde_json::json!({ "id": id, "mu": m }))
        .collect();
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(|e| serde_json::json!({ "u": ids[e.u], "v": ids[e.v], "w": e.w }))
        .collect();
    serde_json::json!({ "vertices": vertices, "edges": edges })
}

/// Reads `{"id": value, ...}` covering every vertex of `g`.
pub fn vertex_function_from_json(value: &Value, g: &WeightedGraph<f64>) -> Result<VertexFunction<f64>, IoError> {
    let obj = value
        .as_object()
        .ok_or_else(|| field("$", "expected an object mapping vertex ids to numbers"))?;
    let mut out = vec![f64::NAN; g.num_vertices()];
    for (id, v) in obj {
        let i = g.index_of(id).ok_or_else(|| field(id, "unknown vertex"))?;
        let x = v.as_f64().ok_or_else(|| field(id, "expected a number"))?;
        if !x.is_finite() {
            return Err(field(id, "value must be finite"));
        }
        out[i] = x;
    }
    if let Some(i) = out.iter().position(|x| x.is_nan()) {
        return Err(field(&g.vertex_ids()[i], "missing value"));
    }
    Ok(VertexFunction::new(out))
}

pub fn parse_vertex_function(text: &str, g: &WeightedGraph<f64>) -> Result<VertexFunction<f64>, IoError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    vertex_function_from_json(&doc, g)
}

pub fn vertex_function_to_json(g: &WeightedGraph<f64>, f: &[f64]) -> Value {
    let map: Map<String, Value> = g
        .vertex_ids()
        .iter()
        .zip(f)
        .map(|(id, &x)| (id.clone(), Value::from(x)))
        .collect();
    Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{"vertices":[{"id":"a","mu":1.0},{"id":"b","mu":2},{"id":"c","mu":0.5}],
        "edges":[{"u":"a","v":"b","w":1.5},{"u":"b","v":"c","w":2.0}]}"#;

    fn err_field(text: &str) -> String {
        match parse_graph(text).unwrap_err() {
            IoError::Field { field, .. } => field,
            other => panic!("expected a field error, got {other}"),
        }
    }

    #[test]
    fn parses_and_round_trips() {
        let g = parse_graph(TRIANGLE).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.volume(), 3.5);
        let again = parse_graph(&graph_to_json(&g).to_string()).unwrap();
        assert_eq!(again.mu(), g.mu());
        assert_eq!(again.edges(), g.edges());
    }

    #[test]
    fn diagnostics_name_the_field() {
        assert_eq!(err_field(&TRIANGLE.replace("\"mu\":2", "\"mu\":-2")), "vertices[1].mu");
        assert_eq!(err_field(&TRIANGLE.replace("\"w\":2.0", "\"w\":0")), "edges[1].w");
        assert_eq!(err_field(&TRIANGLE.replace("\"v\":\"c\"", "\"v\":\"z\"")), "edges[1].v");
        assert_eq!(err_field(&TRIANGLE.replace("\"v\":\"c\"", "\"v\":\"b\"")), "edges[1]");
        assert_eq!(
            err_field(&TRIANGLE.replace("\"u\":\"b\",\"v\":\"c\"", "\"u\":\"b\",\"v\":\"a\"")),
            "edges[1]"
        );
        assert_eq!(
            err_field(&TRIANGLE.replace("\"mu\":0.5", "\"mu\":\"x\"")),
            "vertices[2].mu"
        );
        assert_eq!(err_field(r#"{"vertices":[]}"#), "edges");
    }

    #[test]
    fn disconnected_is_a_graph_error() {
        let text = r#"{"vertices":[{"id":"a","mu":1},{"id":"b","mu":1}],"edges":[]}"#;
        assert!(matches!(
            parse_graph(text),
            Err(IoError::Graph(GraphError::Disconnected(_)))
        ));
    }

    #[test]
    fn vertex_functions() {
        let g = parse_graph(TRIANGLE).unwrap();
        let f = parse_vertex_function(r#"{"c":3,"a":1,"b":-2.5}"#, &g).unwrap();
        assert_eq!(*f, [1.0, -2.5, 3.0]);
        let back = vertex_function_from_json(&vertex_function_to_json(&g, &f), &g).unwrap();
        assert_eq!(back, f);
        let missing = parse_vertex_function(r#"{"a":1,"b":2}"#, &g).unwrap_err();
        assert!(matches!(missing, IoError::Field { ref field, .. } if field == "c"));
        let unknown = parse_vertex_function(r#"{"a":1,"b":2,"c":3,"d":4}"#, &g).unwrap_err();
        assert!(matches!(unknown, IoError::Field { ref field, .. } if field == "d"));
    }
}
