//! Network data model: typed nodes and weighted, delayed adjacency layers.
//!
//! Files use 1-based node labels; everything in memory is 0-based.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Identifier of a registry model plus its parameter overrides.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSpec {
    pub id: String,
    pub params: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ModelSpecRepr {
    Id(String),
    Full {
        id: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.params.is_empty() {
            ModelSpecRepr::Id(self.id.clone()).serialize(s)
        } else {
            ModelSpecRepr::Full {
                id: self.id.clone(),
                params: self.params.clone(),
            }
            .serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match ModelSpecRepr::deserialize(d)? {
            ModelSpecRepr::Id(id) => ModelSpec::new(id),
            ModelSpecRepr::Full { id, params } => ModelSpec { id, params },
        })
    }
}

/// One interaction layer: `adjacency[(i, j)]` is the weight of the arrow j -> i.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub adjacency: DMatrix<f64>,
    pub sigma: f64,
    pub delay: f64,
    pub coupling: ModelSpec,
}

impl Layer {
    pub fn new(adjacency: DMatrix<f64>, sigma: f64, delay: f64, coupling: ModelSpec) -> Self {
        Self {
            adjacency,
            sigma,
            delay,
            coupling,
        }
    }

    /// Largest absolute weight in the layer.
    pub fn max_abs(&self) -> f64 {
        self.adjacency.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    /// 1-based node type per node.
    pub node_types: Vec<usize>,
    pub layers: Vec<Layer>,
    pub state_dim: usize,
    /// Vector field per node type (index `t - 1`); may be empty for purely structural use.
    pub node_models: Vec<ModelSpec>,
}

/// A single violation of the network invariants. Locations are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    NoLayers,
    ZeroStateDim,
    Empty,
    NodeTypeRange {
        node: usize,
        value: usize,
    },
    NodeTypeGap {
        missing: usize,
    },
    Shape {
        layer: usize,
        rows: usize,
        cols: usize,
        n: usize,
    },
    NonFiniteWeight {
        layer: usize,
        row: usize,
        col: usize,
    },
    NegativeDelay {
        layer: usize,
        delay: f64,
    },
    NonFiniteParameter {
        layer: usize,
        name: &'static str,
    },
    MissingNodeModel {
        node_type: usize,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoLayers => write!(f, "network has no layers"),
            Diagnostic::ZeroStateDim => write!(f, "state_dim must be at least 1"),
            Diagnostic::Empty => write!(f, "network has no nodes"),
            Diagnostic::NodeTypeRange { node, value } => {
                write!(f, "node {node}: node type {value} is not a positive identifier")
            }
            Diagnostic::NodeTypeGap { missing } => {
                write!(f, "node types are not contiguous: type {missing} is unused")
            }
            Diagnostic::Shape { layer, rows, cols, n } => {
                write!(f, "layer {layer}: adjacency is {rows}x{cols}, expected {n}x{n}")
            }
            Diagnostic::NonFiniteWeight { layer, row, col } => {
                write!(f, "layer {layer}: weight ({row}, {col}) is not finite")
            }
            Diagnostic::NegativeDelay { layer, delay } => {
                write!(f, "layer {layer}: negative delay {delay}")
            }
            Diagnostic::NonFiniteParameter { layer, name } => {
                write!(f, "layer {layer}: {name} is not finite")
            }
            Diagnostic::MissingNodeModel { node_type } => {
                write!(f, "no node model bound to node type {node_type}")
            }
        }
    }
}

impl Network {
    pub fn new(node_types: Vec<usize>, layers: Vec<Layer>, state_dim: usize) -> Self {
        Self {
            node_types,
            layers,
            state_dim,
            node_models: Vec::new(),
        }
    }

    pub fn with_node_models(mut self, models: Vec<ModelSpec>) -> Self {
        self.node_models = models;
        self
    }

    pub fn len(&self) -> usize {
        self.node_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_types.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_types(&self) -> usize {
        self.node_types.iter().copied().max().unwrap_or(0)
    }

    pub fn max_delay(&self) -> f64 {
        self.layers.iter().fold(0.0, |m, l| f64::max(m, l.delay))
    }

    /// Checks every invariant and reports one diagnostic per violation.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let n = self.len();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Diagnostic::Empty);
        }
        if self.layers.is_empty() {
            out.push(Diagnostic::NoLayers);
        }
        if self.state_dim == 0 {
            out.push(Diagnostic::ZeroStateDim);
        }
        let mut used = vec![false; self.num_types() + 1];
        for (i, &t) in self.node_types.iter().enumerate() {
            if t == 0 {
                out.push(Diagnostic::NodeTypeRange { node: i + 1, value: t });
            } else {
                used[t] = true;
            }
        }
        for (t, &u) in used.iter().enumerate().skip(1) {
            if !u {
                out.push(Diagnostic::NodeTypeGap { missing: t });
            }
        }
        for (k, layer) in self.layers.iter().enumerate() {
            let (rows, cols) = layer.adjacency.shape();
            if rows != n || cols != n {
                out.push(Diagnostic::Shape {
                    layer: k + 1,
                    rows,
                    cols,
                    n,
                });
            }
            for c in 0..cols {
                for r in 0..rows {
                    if !layer.adjacency[(r, c)].is_finite() {
                        out.push(Diagnostic::NonFiniteWeight {
                            layer: k + 1,
                            row: r + 1,
                            col: c + 1,
                        });
                    }
                }
            }
            if !layer.sigma.is_finite() {
                out.push(Diagnostic::NonFiniteParameter {
                    layer: k + 1,
                    name: "sigma",
                });
            }
            if !layer.delay.is_finite() {
                out.push(Diagnostic::NonFiniteParameter {
                    layer: k + 1,
                    name: "delay",
                });
            } else if layer.delay < 0.0 {
                out.push(Diagnostic::NegativeDelay {
                    layer: k + 1,
                    delay: layer.delay,
                });
            }
        }
        if !self.node_models.is_empty() {
            for t in self.node_models.len() + 1..=self.num_types() {
                out.push(Diagnostic::MissingNodeModel { node_type: t });
            }
        }
        out
    }

    pub fn validated(self) -> Result<Self> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(Error::Invalid(diags))
        }
    }

    /// Relabels nodes: old node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Network {
        let n = self.len();
        assert_eq!(perm.len(), n, "permutation length");
        let mut types = vec![0; n];
        for i in 0..n {
            types[perm[i]] = self.node_types[i];
        }
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let mut a = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        a[(perm[i], perm[j])] = l.adjacency[(i, j)];
                    }
                }
                Layer {
                    adjacency: a,
                    ..l.clone()
                }
            })
            .collect();
        Network {
            node_types: types,
            layers,
            state_dim: self.state_dim,
            node_models: self.node_models.clone(),
        }
    }

    pub fn to_json_value(&self) -> Value {
        let layers: Vec<Value> = self
            .layers
            .iter()
            .map(|l| {
                let mut entries = Vec::new();
                for i in 0..l.adjacency.nrows() {
                    for j in 0..l.adjacency.ncols() {
                        let w = l.adjacency[(i, j)];
                        if w != 0.0 {
                            entries.push(json!([i + 1, j + 1, weight_value(w)]));
                        }
                    }
                }
                json!({
                    "sigma": l.sigma,
                    "delay": l.delay,
                    "coupling": serde_json::to_value(&l.coupling).expect("model spec"),
                    "entries": entries,
                })
            })
            .collect();
        let mut doc = json!({
            "n": self.len(),
            "state_dim": self.state_dim,
            "node_types": self.node_types,
            "layers": layers,
        });
        if !self.node_models.is_empty() {
            doc["node_models"] = serde_json::to_value(&self.node_models).expect("model spec");
        }
        doc
    }

    /// Indented JSON with arrays of scalars kept on one line.
    pub fn to_json_string(&self) -> String {
        let mut out = String::new();
        write_json(&self.to_json_value(), 0, &mut out);
        out
    }
}

fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Array(items) if items.iter().any(|x| x.is_array() || x.is_object()) => {
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(x, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(key).expect("json"));
                out.push_str(": ");
                write_json(x, indent + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(|x| serde_json::to_string(x).expect("json")).collect();
            out.push('[');
            out.push_str(&parts.join(", "));
            out.push(']');
        }
        _ => out.push_str(&serde_json::to_string(v).expect("json")),
    }
}

fn weight_value(w: f64) -> Value {
    if w.fract() == 0.0 && w.abs() < 9.0e15 {
        Value::from(w as i64)
    } else {
        Value::from(w)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    n: usize,
    #[serde(default = "one")]
    state_dim: usize,
    node_types: Vec<i64>,
    layers: Vec<LayerFile>,
    #[serde(default)]
    node_models: Vec<ModelSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    #[serde(default = "unit")]
    sigma: f64,
    #[serde(default)]
    delay: f64,
    coupling: ModelSpec,
    #[serde(default)]
    entries: Vec<(i64, i64, f64)>,
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

/// Parses and validates a network document.
pub fn parse_network(text: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| Error::Format {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let n = file.n;
    if file.node_types.len() != n {
        return Err(Error::Format {
            location: "node_types".into(),
            message: format!("has {} entries, n = {n}", file.node_types.len()),
        });
    }
    let mut node_types = Vec::with_capacity(n);
    for (i, &t) in file.node_types.iter().enumerate() {
        if t < 1 {
            return Err(Error::Format {
                location: format!("node_types[{i}]"),
                message: format!("dangling node type {t}"),
            });
        }
        node_types.push(t as usize);
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (k, lf) in file.layers.into_iter().enumerate() {
        let adjacency = match lf.matrix {
            Some(rows) => {
                if !lf.entries.is_empty() {
                    return Err(Error::Format {
                        location: format!("layers[{k}]"),
                        message: "both `matrix` and `entries` given".into(),
                    });
                }
                let r = rows.len();
                let c = rows.first().map_or(0, |x| x.len());
                if let Some(bad) = rows.iter().position(|x| x.len() != c) {
                    return Err(Error::Format {
                        location: format!("layers[{k}].matrix[{bad}]"),
                        message: "ragged matrix".into(),
                    });
                }
                if r != n || c != n {
                    return Err(Error::Format {
                        location: format!("layers[{k}].matrix"),
                        message: format!("non-square or wrong size: {r}x{c}, expected {n}x{n}"),
                    });
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
            None => {
                let mut a = DMatrix::zeros(n, n);
                for (e, &(i, j, w)) in lf.entries.iter().enumerate() {
                    if i < 1 || j < 1 || i as usize > n || j as usize > n {
                        return Err(Error::Format {
                            location: format!("layers[{k}].entries[{e}]"),
                            message: format!("node label ({i}, {j}) outside 1..={n}"),
                        });
                    }
                    a[(i as usize - 1, j as usize - 1)] += w;
                }
                a
            }
        };
        layers.push(Layer::new(adjacency, lf.sigma, lf.delay, lf.coupling));
    }
    Network {
        node_types,
        layers,
        state_dim: file.state_dim,
        node_models: file.node_models,
    }
    .validated()
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_network(&text).map_err(|e| match e {
        Error::Format { location, message } => Error::Format {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, net.to_json_string() + "\n").map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
