//! JSON serialization of networks.
//!
//! Document shape (version "1.0"):
//!
//! ```json
//! {
//!   "version": "1.0",
//!   "root": 13,
//!   "nodes": [
//!     {"id": 0, "kind": "leaf", "family": "categorical",
//!      "scope": 0, "params": {"p": [0.2, 0.8]}},
//!     {"id": 12, "kind": "product", "children": [9, 10, 11]},
//!     {"id": 13, "kind": "sum", "children": [8, 12],
//!      "weights": [0.4, 0.6]}
//!   ]
//! }
//! ```
//!
//! Ids are contiguous in children-before-parent order and the root is the
//! largest id. Loading validates the schema, then runs the standard
//! finalization pass, so documents with unnormalized weights or forward
//! references are rejected with a message naming the offending field.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{FamilyRegistry, ParamMap, ParamValue};
use crate::graph::{Network, Node};

#[derive(Debug, Serialize, Deserialize)]
struct JsonNetwork {
    version: String,
    root: usize,
    nodes: Vec<JsonNode>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonNode {
    id: usize,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    children: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scope: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Map<String, serde_json::Value>>,
}

fn param_to_json(value: &ParamValue) -> serde_json::Value {
    match value {
        ParamValue::Scalar(v) => serde_json::json!(v),
        ParamValue::Vector(vs) => serde_json::json!(vs),
    }
}

fn param_from_json(path: &str, value: &serde_json::Value) -> Result<ParamValue> {
    match value {
        serde_json::Value::Number(n) => n
            .as_f64()
            .map(ParamValue::Scalar)
            .ok_or_else(|| Error::Schema(format!("{path}: number out of range"))),
        serde_json::Value::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let v = item
                    .as_f64()
                    .ok_or_else(|| Error::Schema(format!("{path}[{i}]: expected a number")))?;
                out.push(v);
            }
            Ok(ParamValue::Vector(out))
        }
        _ => Err(Error::Schema(format!(
            "{path}: expected a number or an array of numbers"
        ))),
    }
}

/// Serialize a finalized network (pretty-printed, deterministic).
pub fn to_json(network: &Network) -> String {
    let nodes: Vec<JsonNode> = network
        .nodes()
        .map(|(id, node)| match node {
            Node::Sum { children, weights } => JsonNode {
                id: id.index(),
                kind: "sum".into(),
                children: Some(children.iter().map(|c| c.index()).collect()),
                weights: Some(weights.clone()),
                family: None,
                scope: None,
                params: None,
            },
            Node::Product { children } => JsonNode {
                id: id.index(),
                kind: "product".into(),
                children: Some(children.iter().map(|c| c.index()).collect()),
                weights: None,
                family: None,
                scope: None,
                params: None,
            },
            Node::Leaf {
                family,
                params,
                scope_var,
            } => {
                let mut map = serde_json::Map::new();
                for (name, value) in params.iter() {
                    map.insert(name.to_string(), param_to_json(value));
                }
                JsonNode {
                    id: id.index(),
                    kind: "leaf".into(),
                    children: None,
                    weights: None,
                    family: Some(network.registry().get(*family).name().to_string()),
                    scope: Some(*scope_var),
                    params: Some(map),
                }
            }
        })
        .collect();
    let doc = JsonNetwork {
        version: "1.0".into(),
        root: network.root().index(),
        nodes,
    };
    serde_json::to_string_pretty(&doc).expect("network serializes")
}

/// Parse, validate and finalize a JSON document over `registry`.
pub fn from_json(text: &str, registry: Arc<FamilyRegistry>) -> Result<Network> {
    let doc: JsonNetwork =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if doc.version != "1.0" {
        return Err(Error::Schema(format!(
            "version: unsupported '{}', expected '1.0'",
            doc.version
        )));
    }
    if doc.nodes.is_empty() {
        return Err(Error::Schema("nodes: document has no nodes".into()));
    }
    if doc.root != doc.nodes.len() - 1 {
        return Err(Error::Schema(format!(
            "root: expected the maximum id {}, found {}",
            doc.nodes.len() - 1,
            doc.root
        )));
    }

    let mut arena: Vec<Node> = Vec::with_capacity(doc.nodes.len());
    for (index, jn) in doc.nodes.iter().enumerate() {
        let path = format!("nodes[{index}]");
        if jn.id != index {
            return Err(Error::Schema(format!(
                "{path}.id: ids must be contiguous; expected {index}, found {}",
                jn.id
            )));
        }
        let node = match jn.kind.as_str() {
            "sum" => {
                let children = required(&path, "children", &jn.children)?;
                let weights = required(&path, "weights", &jn.weights)?;
                forbid(&path, "family", jn.family.is_some())?;
                forbid(&path, "scope", jn.scope.is_some())?;
                forbid(&path, "params", jn.params.is_some())?;
                if weights.len() != children.len() {
                    return Err(Error::Schema(format!(
                        "{path}.weights: {} entries for {} children",
                        weights.len(),
                        children.len()
                    )));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::Schema(format!(
                        "{path}.weights: entries must be finite and nonnegative"
                    )));
                }
                Node::Sum {
                    children: check_children(&path, children, index)?,
                    weights: weights.clone(),
                }
            }
            "product" => {
                let children = required(&path, "children", &jn.children)?;
                forbid(&path, "weights", jn.weights.is_some())?;
                forbid(&path, "family", jn.family.is_some())?;
                forbid(&path, "scope", jn.scope.is_some())?;
                forbid(&path, "params", jn.params.is_some())?;
                Node::Product {
                    children: check_children(&path, children, index)?,
                }
            }
            "leaf" => {
                let family_name = required(&path, "family", &jn.family)?;
                let scope = *required(&path, "scope", &jn.scope)?;
                let params_map = required(&path, "params", &jn.params)?;
                forbid(&path, "children", jn.children.is_some())?;
                forbid(&path, "weights", jn.weights.is_some())?;
                let family = registry.lookup(family_name).ok_or_else(|| {
                    Error::Schema(format!("{path}.family: unknown family '{family_name}'"))
                })?;
                let mut params = ParamMap::new();
                for (name, value) in params_map {
                    params.set(
                        name,
                        param_from_json(&format!("{path}.params.{name}"), value)?,
                    );
                }
                let fam = registry.get(family);
                let params = params.canonicalize(fam.param_names()).map_err(|e| match e {
                    Error::Construction(msg) => Error::Schema(format!("{path}.params: {msg}")),
                    other => other,
                })?;
                let violations = fam.validate(&params);
                if !violations.is_empty() {
                    return Err(Error::Schema(format!(
                        "{path}.params: {}",
                        violations.join("; ")
                    )));
                }
                Node::Leaf {
                    family,
                    params,
                    scope_var: scope,
                }
            }
            other => {
                return Err(Error::Schema(format!(
                    "{path}.kind: unknown kind '{other}'"
                )))
            }
        };
        arena.push(node);
    }

    crate::graph::finalize_loaded(arena, doc.root, registry)
}

fn required<'a, T>(path: &str, field: &str, value: &'a Option<T>) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::Schema(format!("{path}.{field}: required field missing")))
}

fn forbid(path: &str, field: &str, present: bool) -> Result<()> {
    if present {
        Err(Error::Schema(format!(
            "{path}.{field}: field not allowed for this kind"
        )))
    } else {
        Ok(())
    }
}

fn check_children(
    path: &str,
    children: &[usize],
    parent: usize,
) -> Result<Vec<crate::graph::NodeId>> {
    let mut out = Vec::with_capacity(children.len());
    for &c in children {
        if c >= parent {
            return Err(Error::Schema(format!(
                "{path}.children: child id {c} must precede parent id {parent}"
            )));
        }
        out.push(crate::graph::NodeId(c));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataMatrix;
    use crate::fixtures::example_network;
    use crate::infer::log_likelihood;

    fn builtins() -> Arc<FamilyRegistry> {
        Arc::new(FamilyRegistry::with_builtins())
    }

    #[test]
    fn roundtrip_is_lossless() {
        let net = example_network();
        let text = to_json(&net);
        let loaded = from_json(&text, builtins()).unwrap();
        assert!(net.structurally_equal(&loaded));
        // identical inference on all 8 configurations
        for v0 in 0..2 {
            for v1 in 0..2 {
                for v2 in 0..2 {
                    let row = DataMatrix::from_row(&[v0 as f64, v1 as f64, v2 as f64]);
                    let a = log_likelihood(&net, &row).unwrap()[0];
                    let b = log_likelihood(&loaded, &row).unwrap()[0];
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }

    #[test]
    fn serialization_is_deterministic() {
        let net = example_network();
        assert_eq!(to_json(&net), to_json(&net));
    }

    #[test]
    fn unnormalized_weights_rejected() {
        let text = r#"{
            "version": "1.0",
            "root": 2,
            "nodes": [
                {"id": 0, "kind": "leaf", "family": "categorical", "scope": 0, "params": {"p": [0.2, 0.8]}},
                {"id": 1, "kind": "leaf", "family": "categorical", "scope": 0, "params": {"p": [0.5, 0.5]}},
                {"id": 2, "kind": "sum", "children": [0, 1], "weights": [0.4, 0.7]}
            ]
        }"#;
        let err = from_json(text, builtins()).unwrap_err();
        assert!(err.to_string().contains("sum to 1.1"), "{err}");
    }

    #[test]
    fn forward_reference_rejected() {
        let text = r#"{
            "version": "1.0",
            "root": 2,
            "nodes": [
                {"id": 0, "kind": "leaf", "family": "categorical", "scope": 0, "params": {"p": [0.2, 0.8]}},
                {"id": 1, "kind": "sum", "children": [0, 2], "weights": [0.5, 0.5]},
                {"id": 2, "kind": "leaf", "family": "categorical", "scope": 0, "params": {"p": [0.5, 0.5]}}
            ]
        }"#;
        let err = from_json(text, builtins()).unwrap_err();
        assert!(err.to_string().contains("must precede"), "{err}");
    }

    #[test]
    fn id_gaps_rejected() {
        let text = r#"{
            "version": "1.0",
            "root": 2,
            "nodes": [
                {"id": 0, "kind": "leaf", "family": "categorical", "scope": 0, "params": {"p": [0.2, 0.8]}},
                {"id": 2, "kind": "leaf", "family": "categorical", "scope": 0, "params": {"p": [0.5, 0.5]}},
                {"id": 3, "kind": "sum", "children": [0, 1], "weights": [0.5, 0.5]}
            ]
        }"#;
        let err = from_json(text, builtins()).unwrap_err();
        assert!(err.to_string().contains("contiguous"), "{err}");
    }

    #[test]
    fn unknown_family_named_with_path() {
        let text = r#"{
            "version": "1.0",
            "root": 0,
            "nodes": [
                {"id": 0, "kind": "leaf", "family": "beta", "scope": 0, "params": {"a": 1.0}}
            ]
        }"#;
        let err = from_json(text, builtins()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nodes[0].family"), "{msg}");
        assert!(msg.contains("beta"), "{msg}");
    }

    #[test]
    fn kind_specific_fields_enforced() {
        let text = r#"{
            "version": "1.0",
            "root": 1,
            "nodes": [
                {"id": 0, "kind": "leaf", "family": "categorical", "scope": 0, "params": {"p": [0.2, 0.8]}},
                {"id": 1, "kind": "product", "children": [0, 0], "weights": [0.5, 0.5]}
            ]
        }"#;
        let err = from_json(text, builtins()).unwrap_err();
        assert!(err.to_string().contains("not allowed"), "{err}");
    }

    #[test]
    fn bad_version_rejected() {
        let err = from_json(r#"{"version": "2.0", "root": 0, "nodes": []}"#, builtins())
            .unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }
}
