//! GEXF 1.3 export and import with node attributes and viz positions.

use std::collections::BTreeMap;
use std::io::Cursor;

use capta_core::graph::{CoocGraph, Edge, GraphError, NodeInfo};
use capta_core::layout::Point;
use capta_core::{Digest, EntityId};
use quick_xml::events::attributes::Attribute;
use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::name::QName;
use quick_xml::{Reader, Writer};

const GEXF_NS: &str = "http://gexf.net/1.3";
const VIZ_NS: &str = "http://gexf.net/1.3/viz";
const PROVENANCE_PREFIX: &str = "provenance ";

const ATTR_DAYS: &str = "days_mentioned";
const ATTR_MENTIONS: &str = "total_mentions";
const ATTR_COMMUNITY: &str = "community";

#[derive(Debug, thiserror::Error)]
pub enum GexfError {
    #[error("{what} supplied but missing for node {node}")]
    Partial { what: &'static str, node: EntityId },
    #[error("{what} given for unknown node {node}")]
    Extra { what: &'static str, node: EntityId },
    #[error("position of node {0} is not finite")]
    NonFinite(EntityId),
    #[error("text not representable in XML 1.0: {0:?}")]
    InvalidText(String),
    #[error("malformed GEXF: {0}")]
    Malformed(String),
    #[error("invalid graph in GEXF: {0}")]
    Graph(#[from] GraphError),
    #[error("XML: {0}")]
    Xml(#[from] quick_xml::Error),
    #[error("XML write: {0}")]
    Write(#[from] std::io::Error),
}

/// A graph with optional per-node community labels and positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GexfDocument {
    pub graph: CoocGraph,
    pub communities: Option<BTreeMap<EntityId, usize>>,
    pub positions: Option<BTreeMap<EntityId, Point>>,
}

fn xml_char_ok(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..='\u{10FFFF}')
}

/// Attribute escaping that also protects whitespace from attribute-value normalization.
fn escape_attr(s: &str) -> Result<String, GexfError> {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if !xml_char_ok(c) {
            return Err(GexfError::InvalidText(s.to_owned()));
        }
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    Ok(out)
}

fn start<'a>(name: &'a str, attrs: &[(&'a str, &str)]) -> Result<BytesStart<'a>, GexfError> {
    let mut e = BytesStart::new(name);
    for (k, v) in attrs {
        e.push_attribute(Attribute {
            key: QName(k.as_bytes()),
            value: escape_attr(v)?.into_bytes().into(),
        });
    }
    Ok(e)
}

fn check_cover<T>(graph: &CoocGraph, what: &'static str, map: Option<&BTreeMap<EntityId, T>>) -> Result<(), GexfError> {
    let Some(map) = map else { return Ok(()) };
    if let Some(node) = graph.nodes.keys().find(|id| !map.contains_key(*id)) {
        return Err(GexfError::Partial {
            what,
            node: node.clone(),
        });
    }
    if let Some(node) = map.keys().find(|id| !graph.nodes.contains_key(*id)) {
        return Err(GexfError::Extra {
            what,
            node: node.clone(),
        });
    }
    Ok(())
}

pub fn write_gexf(doc: &GexfDocument) -> Result<String, GexfError> {
    let graph = &doc.graph;
    check_cover(graph, "community", doc.communities.as_ref())?;
    check_cover(graph, "position", doc.positions.as_ref())?;
    if let Some(ps) = &doc.positions {
        if let Some((id, _)) = ps.iter().find(|(_, p)| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(GexfError::NonFinite(id.clone()));
        }
    }

    let mut w = Writer::new_with_indent(Cursor::new(Vec::new()), b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;
    w.write_event(Event::Start(start(
        "gexf",
        &[("xmlns", GEXF_NS), ("xmlns:viz", VIZ_NS), ("version", "1.3")],
    )?))?;
    w.write_event(Event::Start(start("meta", &[])?))?;
    w.write_event(Event::Start(start("creator", &[])?))?;
    w.write_event(Event::Text(BytesText::new("capta")))?;
    w.write_event(Event::End(BytesEnd::new("creator")))?;
    if let Some(p) = graph.provenance_id {
        w.write_event(Event::Start(start("description", &[])?))?;
        w.write_event(Event::Text(BytesText::new(&format!("{PROVENANCE_PREFIX}{p}"))))?;
        w.write_event(Event::End(BytesEnd::new("description")))?;
    }
    w.write_event(Event::End(BytesEnd::new("meta")))?;

    w.write_event(Event::Start(start(
        "graph",
        &[("defaultedgetype", "undirected"), ("mode", "static")],
    )?))?;
    w.write_event(Event::Start(start("attributes", &[("class", "node")])?))?;
    let mut titles = vec![ATTR_DAYS, ATTR_MENTIONS];
    if doc.communities.is_some() {
        titles.push(ATTR_COMMUNITY);
    }
    for (i, t) in titles.iter().enumerate() {
        w.write_event(Event::Empty(start(
            "attribute",
            &[("id", &i.to_string()), ("title", t), ("type", "integer")],
        )?))?;
    }
    w.write_event(Event::End(BytesEnd::new("attributes")))?;

    w.write_event(Event::Start(start("nodes", &[])?))?;
    for (id, info) in &graph.nodes {
        w.write_event(Event::Start(start("node", &[("id", id.as_str()), ("label", &info.display_name)])?))?;
        w.write_event(Event::Start(start("attvalues", &[])?))?;
        let mut values = vec![info.days_mentioned.to_string(), info.total_mentions.to_string()];
        if let Some(c) = &doc.communities {
            values.push(c[id].to_string());
        }
        for (i, v) in values.iter().enumerate() {
            w.write_event(Event::Empty(start("attvalue", &[("for", &i.to_string()), ("value", v)])?))?;
        }
        w.write_event(Event::End(BytesEnd::new("attvalues")))?;
        if let Some(ps) = &doc.positions {
            let [x, y] = ps[id];
            w.write_event(Event::Empty(start(
                "viz:position",
                &[("x", &x.to_string()), ("y", &y.to_string()), ("z", "0")],
            )?))?;
        }
        w.write_event(Event::End(BytesEnd::new("node")))?;
    }
    w.write_event(Event::End(BytesEnd::new("nodes")))?;

    w.write_event(Event::Start(start("edges", &[])?))?;
    for (i, e) in graph.edges.iter().enumerate() {
        w.write_event(Event::Empty(start(
            "edge",
            &[
                ("id", &i.to_string()),
                ("source", e.source.as_str()),
                ("target", e.target.as_str()),
                ("weight", &e.weight.to_string()),
            ],
        )?))?;
    }
    w.write_event(Event::End(BytesEnd::new("edges")))?;
    w.write_event(Event::End(BytesEnd::new("graph")))?;
    w.write_event(Event::End(BytesEnd::new("gexf")))?;
    let mut bytes = w.into_inner().into_inner();
    bytes.push(b'\n');
    Ok(String::from_utf8(bytes).expect("writer emits UTF-8"))
}

fn attrs(e: &BytesStart<'_>) -> Result<BTreeMap<String, String>, GexfError> {
    let mut out = BTreeMap::new();
    for a in e.attributes() {
        let a = a.map_err(|err| GexfError::Malformed(err.to_string()))?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a.unescape_value()?.into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn required(map: &BTreeMap<String, String>, key: &str, element: &str) -> Result<String, GexfError> {
    map.get(key)
        .cloned()
        .ok_or_else(|| GexfError::Malformed(format!("<{element}> without {key}")))
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, GexfError> {
    s.parse()
        .map_err(|_| GexfError::Malformed(format!("bad {what} value {s:?}")))
}

/// Read a document produced by [`write_gexf`]. Other GEXF producers work if
/// they use the same attribute titles.
pub fn read_gexf(text: &str) -> Result<GexfDocument, GexfError> {
    let mut reader = Reader::from_str(text);
    let mut attr_titles: BTreeMap<String, String> = BTreeMap::new();
    let mut nodes = BTreeMap::new();
    let mut edges = Vec::new();
    let mut communities = BTreeMap::new();
    let mut positions = BTreeMap::new();
    let mut provenance = None;
    let mut current: Option<(EntityId, NodeInfo)> = None;
    let mut in_description = false;
    let mut in_node_attributes = false;

    loop {
        let event = reader.read_event()?;
        let (element, is_empty) = match &event {
            Event::Start(e) => (Some(e.clone()), false),
            Event::Empty(e) => (Some(e.clone()), true),
            _ => (None, false),
        };
        if let Some(e) = element {
            let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
            let a = attrs(&e)?;
            match name.as_str() {
                "description" => in_description = !is_empty,
                "attributes" => in_node_attributes = a.get("class").map(String::as_str) == Some("node"),
                "attribute" if in_node_attributes => {
                    attr_titles.insert(required(&a, "id", "attribute")?, required(&a, "title", "attribute")?);
                }
                "node" => {
                    let id = EntityId::new(required(&a, "id", "node")?);
                    let info = NodeInfo {
                        display_name: a.get("label").cloned().unwrap_or_else(|| id.to_string()),
                        days_mentioned: 0,
                        total_mentions: 0,
                    };
                    if is_empty {
                        nodes.insert(id, info);
                    } else {
                        current = Some((id, info));
                    }
                }
                "attvalue" => {
                    let (id, info) = current
                        .as_mut()
                        .ok_or_else(|| GexfError::Malformed("<attvalue> outside <node>".into()))?;
                    let key = required(&a, "for", "attvalue")?;
                    let value = required(&a, "value", "attvalue")?;
                    match attr_titles.get(&key).map(String::as_str) {
                        Some(ATTR_DAYS) => info.days_mentioned = number(&value, ATTR_DAYS)?,
                        Some(ATTR_MENTIONS) => info.total_mentions = number(&value, ATTR_MENTIONS)?,
                        Some(ATTR_COMMUNITY) => {
                            communities.insert(id.clone(), number(&value, ATTR_COMMUNITY)?);
                        }
                        _ => {}
                    }
                }
                "position" => {
                    let (id, _) = current
                        .as_ref()
                        .ok_or_else(|| GexfError::Malformed("<viz:position> outside <node>".into()))?;
                    let x: f64 = number(&required(&a, "x", "viz:position")?, "x")?;
                    let y: f64 = number(&required(&a, "y", "viz:position")?, "y")?;
                    positions.insert(id.clone(), [x, y]);
                }
                "edge" => {
                    let weight = match a.get("weight") {
                        Some(w) => {
                            let f: f64 = number(w, "weight")?;
                            if f.fract() != 0.0 || f < 0.0 || f > f64::from(u32::MAX) {
                                return Err(GexfError::Malformed(format!("non-integer edge weight {w}")));
                            }
                            f as u32
                        }
                        None => 1,
                    };
                    let (s, t) = (
                        EntityId::new(required(&a, "source", "edge")?),
                        EntityId::new(required(&a, "target", "edge")?),
                    );
                    let (source, target) = if s <= t { (s, t) } else { (t, s) };
                    edges.push(Edge { source, target, weight });
                }
                _ => {}
            }
            continue;
        }
        match event {
            Event::Text(t) if in_description => {
                let text = t.unescape()?;
                if let Some(hex) = text.trim().strip_prefix(PROVENANCE_PREFIX) {
                    provenance = Some(
                        hex.parse::<Digest>()
                            .map_err(|_| GexfError::Malformed(format!("bad provenance digest {hex:?}")))?,
                    );
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"description" => in_description = false,
                b"attributes" => in_node_attributes = false,
                b"node" => {
                    if let Some((id, info)) = current.take() {
                        nodes.insert(id, info);
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    let mut graph = CoocGraph::from_parts(nodes, edges)?;
    graph.provenance_id = provenance;
    let communities = (!communities.is_empty() || attr_titles.values().any(|t| t == ATTR_COMMUNITY)).then_some(communities);
    let positions = (!positions.is_empty()).then_some(positions);
    let doc = GexfDocument {
        graph,
        communities,
        positions,
    };
    check_cover(&doc.graph, "community", doc.communities.as_ref())?;
    check_cover(&doc.graph, "position", doc.positions.as_ref())?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GexfDocument {
        let mut nodes = BTreeMap::new();
        for (id, name, days) in [("a", "Ann <\"A\"> & co", 2), ("b", "Bé\nline", 3), ("c", "C", 1)] {
            nodes.insert(
                EntityId::from(id),
                NodeInfo {
                    display_name: name.into(),
                    days_mentioned: days,
                    total_mentions: days + 1,
                },
            );
        }
        let edges = vec![Edge {
            source: "a".into(),
            target: "b".into(),
            weight: 2,
        }];
        let mut graph = CoocGraph::from_parts(nodes, edges).unwrap();
        graph.provenance_id = Some(Digest::of(b"x"));
        GexfDocument {
            communities: Some(graph.nodes.keys().cloned().zip([0, 0, 1]).collect()),
            positions: Some(graph.nodes.keys().cloned().zip([[0.1, -2.5], [1e-7, 3.0], [-0.0, 1e300]]).collect()),
            graph,
        }
    }

    #[test]
    fn round_trip() {
        let doc = sample();
        let text = write_gexf(&doc).unwrap();
        assert_eq!(read_gexf(&text).unwrap(), doc);
    }

    #[test]
    fn empty_graph_is_minimal_document() {
        let text = write_gexf(&GexfDocument::default()).unwrap();
        assert!(text.contains("<nodes/>") || text.contains("<nodes>"));
        assert_eq!(read_gexf(&text).unwrap(), GexfDocument::default());
    }

    #[test]
    fn missing_position_names_node() {
        let mut doc = sample();
        doc.positions.as_mut().unwrap().remove(&EntityId::from("b"));
        match write_gexf(&doc) {
            Err(GexfError::Partial { what: "position", node }) => assert_eq!(node.as_str(), "b"),
            other => panic!("{other:?}"),
        }
    }
}
