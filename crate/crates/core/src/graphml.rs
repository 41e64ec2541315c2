//! Minimal GraphML 1.0 reader and writer for attributed undirected graphs.

use std::io::{BufRead, Write};

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::{CactusError, Result};
use crate::ingest::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrType {
    Double,
    String,
}

impl AttrType {
    fn as_str(self) -> &'static str {
        match self {
            AttrType::Double => "double",
            AttrType::String => "string",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Double(f64),
    String(String),
}

impl AttrValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Double(v) => Some(*v),
            AttrValue::String(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::String(s) => Some(s),
            AttrValue::Double(_) => None,
        }
    }

    fn text(&self) -> String {
        match self {
            AttrValue::Double(v) => format_number(*v),
            AttrValue::String(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMlNode {
    pub id: String,
    pub attrs: Vec<AttrValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMlEdge {
    pub source: String,
    pub target: String,
    pub attrs: Vec<AttrValue>,
}

/// One undirected graph. Attribute values are positional, matching the
/// declared keys.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphMlDocument {
    pub graph_id: String,
    pub node_keys: Vec<(String, AttrType)>,
    pub edge_keys: Vec<(String, AttrType)>,
    pub nodes: Vec<GraphMlNode>,
    pub edges: Vec<GraphMlEdge>,
}

impl GraphMlDocument {
    pub fn node_attr<'a>(&self, node: &'a GraphMlNode, key: &str) -> Option<&'a AttrValue> {
        let i = self.node_keys.iter().position(|(k, _)| k == key)?;
        node.attrs.get(i)
    }

    pub fn edge_attr<'a>(&self, edge: &'a GraphMlEdge, key: &str) -> Option<&'a AttrValue> {
        let i = self.edge_keys.iter().position(|(k, _)| k == key)?;
        edge.attrs.get(i)
    }
}

pub fn write_graphml<W: Write>(doc: &GraphMlDocument, mut w: W) -> std::io::Result<()> {
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        w,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">"#
    )?;
    for (domain, keys) in [("node", &doc.node_keys), ("edge", &doc.edge_keys)] {
        for (name, ty) in keys {
            writeln!(
                w,
                r#"  <key id="{domain}_{id}" for="{domain}" attr.name="{id}" attr.type="{ty}"/>"#,
                id = escape(name.as_str()),
                ty = ty.as_str()
            )?;
        }
    }
    writeln!(w, r#"  <graph id="{}" edgedefault="undirected">"#, escape(doc.graph_id.as_str()))?;
    for node in &doc.nodes {
        writeln!(w, r#"    <node id="{}">"#, escape(node.id.as_str()))?;
        for ((name, _), value) in doc.node_keys.iter().zip(&node.attrs) {
            writeln!(
                w,
                r#"      <data key="node_{}">{}</data>"#,
                escape(name.as_str()),
                escape(value.text().as_str())
            )?;
        }
        writeln!(w, "    </node>")?;
    }
    for edge in &doc.edges {
        writeln!(
            w,
            r#"    <edge source="{}" target="{}">"#,
            escape(edge.source.as_str()),
            escape(edge.target.as_str())
        )?;
        for ((name, _), value) in doc.edge_keys.iter().zip(&edge.attrs) {
            writeln!(
                w,
                r#"      <data key="edge_{}">{}</data>"#,
                escape(name.as_str()),
                escape(value.text().as_str())
            )?;
        }
        writeln!(w, "    </edge>")?;
    }
    writeln!(w, "  </graph>")?;
    writeln!(w, "</graphml>")?;
    Ok(())
}

struct KeyDecl {
    id: String,
    domain: String,
    name: String,
    ty: AttrType,
}

fn attr(e: &BytesStart<'_>, name: &str) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| CactusError::GraphMl(err.to_string()))?;
        if a.key.as_ref() == name.as_bytes() {
            let v = a
                .unescape_value()
                .map_err(|err| CactusError::GraphMl(err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn required_attr(e: &BytesStart<'_>, name: &str) -> Result<String> {
    attr(e, name)?.ok_or_else(|| {
        CactusError::GraphMl(format!(
            "<{}> lacks `{name}`",
            String::from_utf8_lossy(e.name().as_ref())
        ))
    })
}

enum Owner {
    Node(usize),
    Edge(usize),
}

/// Parses documents produced by [`write_graphml`] (and any GraphML using
/// `double`/`string` keys with a single graph).
pub fn read_graphml<R: BufRead>(reader: R) -> Result<GraphMlDocument> {
    let mut xml = Reader::from_reader(reader);
    xml.config_mut().trim_text(true);
    let mut buf = Vec::new();
    let mut keys: Vec<KeyDecl> = Vec::new();
    let mut doc = GraphMlDocument::default();
    let mut owner: Option<Owner> = None;
    let mut data_key: Option<String> = None;
    let mut text = String::new();

    let err = |e: quick_xml::Error| CactusError::GraphMl(e.to_string());
    loop {
        let event = xml.read_event_into(&mut buf).map_err(err)?;
        match event {
            Event::Eof => break,
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"key" => {
                        let ty = match attr(e, "attr.type")?.as_deref() {
                            Some("double") | Some("float") => AttrType::Double,
                            _ => AttrType::String,
                        };
                        let decl = KeyDecl {
                            id: required_attr(e, "id")?,
                            domain: attr(e, "for")?.unwrap_or_else(|| "all".into()),
                            name: required_attr(e, "attr.name")?,
                            ty,
                        };
                        match decl.domain.as_str() {
                            "node" => doc.node_keys.push((decl.name.clone(), decl.ty)),
                            "edge" => doc.edge_keys.push((decl.name.clone(), decl.ty)),
                            _ => {}
                        }
                        keys.push(decl);
                    }
                    b"graph" => doc.graph_id = attr(e, "id")?.unwrap_or_default(),
                    b"node" => {
                        doc.nodes.push(GraphMlNode {
                            id: required_attr(e, "id")?,
                            attrs: default_attrs(&doc.node_keys),
                        });
                        owner = (!is_empty).then(|| Owner::Node(doc.nodes.len() - 1));
                    }
                    b"edge" => {
                        doc.edges.push(GraphMlEdge {
                            source: required_attr(e, "source")?,
                            target: required_attr(e, "target")?,
                            attrs: default_attrs(&doc.edge_keys),
                        });
                        owner = (!is_empty).then(|| Owner::Edge(doc.edges.len() - 1));
                    }
                    b"data" => {
                        data_key = Some(required_attr(e, "key")?);
                        text.clear();
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if data_key.is_some() {
                    text.push_str(&t.unescape().map_err(err)?);
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                b"data" => {
                    let key_id = data_key.take().unwrap_or_default();
                    let decl = keys
                        .iter()
                        .find(|k| k.id == key_id)
                        .ok_or_else(|| CactusError::GraphMl(format!("undeclared key `{key_id}`")))?;
                    let value = match decl.ty {
                        AttrType::Double => AttrValue::Double(text.trim().parse().map_err(|_| {
                            CactusError::GraphMl(format!("`{text}` is not a double"))
                        })?),
                        AttrType::String => AttrValue::String(text.clone()),
                    };
                    match owner {
                        Some(Owner::Node(i)) => {
                            if let Some(p) = doc.node_keys.iter().position(|(n, _)| *n == decl.name) {
                                doc.nodes[i].attrs[p] = value;
                            }
                        }
                        Some(Owner::Edge(i)) => {
                            if let Some(p) = doc.edge_keys.iter().position(|(n, _)| *n == decl.name) {
                                doc.edges[i].attrs[p] = value;
                            }
                        }
                        None => {}
                    }
                }
                b"node" | b"edge" => owner = None,
                _ => {}
            },
            _ => {}
        }
        buf.clear();
    }
    Ok(doc)
}

fn default_attrs(keys: &[(String, AttrType)]) -> Vec<AttrValue> {
    keys.iter()
        .map(|(_, ty)| match ty {
            AttrType::Double => AttrValue::Double(0.0),
            AttrType::String => AttrValue::String(String::new()),
        })
        .collect()
}
