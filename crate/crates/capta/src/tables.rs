//! CSV exports. Columns:
//!
//! - nodes: `id,display_name,days_mentioned,total_mentions`
//! - edges: `source,target,weight`
//! - histogram: `days_mentioned,persons`
//! - partition: `id,level0,top`, preceded by `# modularity` comment lines, one per level
//! - positions: `id,x,y`
//! - network nodes: `id,display_name,days_mentioned,total_mentions,community,x,y`

use std::collections::BTreeMap;

use capta_core::communities::Partition;
use capta_core::graph::{CoocGraph, FrequencyHistogram};
use capta_core::layout::Point;
use capta_core::EntityId;

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn row<I, T>(w: &mut csv::Writer<Vec<u8>>, fields: I)
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(fields).expect("in-memory writer");
}

pub fn nodes_csv(graph: &CoocGraph) -> Vec<u8> {
    let mut w = writer();
    row(&mut w, ["id", "display_name", "days_mentioned", "total_mentions"]);
    for (id, n) in &graph.nodes {
        row(
            &mut w,
            [
                id.as_str(),
                &n.display_name,
                &n.days_mentioned.to_string(),
                &n.total_mentions.to_string(),
            ],
        );
    }
    finish(w)
}

pub fn edges_csv(graph: &CoocGraph) -> Vec<u8> {
    let mut w = writer();
    row(&mut w, ["source", "target", "weight"]);
    for e in &graph.edges {
        row(&mut w, [e.source.as_str(), e.target.as_str(), &e.weight.to_string()]);
    }
    finish(w)
}

pub fn histogram_csv(h: &FrequencyHistogram) -> Vec<u8> {
    let mut w = writer();
    row(&mut w, ["days_mentioned", "persons"]);
    for (days, persons) in &h.bins {
        row(&mut w, [days.to_string(), persons.to_string()]);
    }
    finish(w)
}

pub fn partition_csv(p: &Partition) -> Vec<u8> {
    let mut out = Vec::new();
    for (level, q) in p.modularity.iter().enumerate() {
        out.extend_from_slice(format!("# modularity level{level} {q}\n").as_bytes());
    }
    let mut w = writer();
    row(&mut w, ["id", "level0", "top"]);
    for (i, id) in p.nodes.iter().enumerate() {
        row(&mut w, [id.as_str(), &p.finest()[i].to_string(), &p.top()[i].to_string()]);
    }
    out.extend(finish(w));
    out
}

pub fn positions_csv(positions: &BTreeMap<EntityId, Point>) -> Vec<u8> {
    let mut w = writer();
    row(&mut w, ["id", "x", "y"]);
    for (id, [x, y]) in positions {
        row(&mut w, [id.as_str(), &x.to_string(), &y.to_string()]);
    }
    finish(w)
}

pub fn network_nodes_csv(
    graph: &CoocGraph,
    communities: &BTreeMap<EntityId, usize>,
    positions: &BTreeMap<EntityId, Point>,
) -> Vec<u8> {
    let mut w = writer();
    row(
        &mut w,
        ["id", "display_name", "days_mentioned", "total_mentions", "community", "x", "y"],
    );
    for (id, n) in &graph.nodes {
        let c = communities.get(id).map(usize::to_string).unwrap_or_default();
        let (x, y) = positions
            .get(id)
            .map(|p| (p[0].to_string(), p[1].to_string()))
            .unwrap_or_default();
        row(
            &mut w,
            [
                id.as_str(),
                &n.display_name,
                &n.days_mentioned.to_string(),
                &n.total_mentions.to_string(),
                &c,
                &x,
                &y,
            ],
        );
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use capta_core::graph::mention_frequency;
    use capta_core::graph::{Edge, NodeInfo};

    #[test]
    fn histogram_has_one_row_per_bin() {
        let nodes: BTreeMap<_, _> = [("a", 1), ("b", 2), ("c", 2)]
            .into_iter()
            .map(|(id, d)| {
                (
                    EntityId::from(id),
                    NodeInfo {
                        display_name: id.to_uppercase(),
                        days_mentioned: d,
                        total_mentions: d,
                    },
                )
            })
            .collect();
        let g = CoocGraph::from_parts(nodes, Vec::<Edge>::new()).unwrap();
        let text = String::from_utf8(histogram_csv(&mention_frequency(&g))).unwrap();
        assert_eq!(text, "days_mentioned,persons\n1,1\n2,2\n");
        let nodes = String::from_utf8(nodes_csv(&g)).unwrap();
        assert_eq!(nodes.lines().count(), 4);
    }

    #[test]
    fn names_with_commas_are_quoted() {
        let nodes: BTreeMap<_, _> = [(
            EntityId::from("x"),
            NodeInfo {
                display_name: "Smith, John".into(),
                days_mentioned: 1,
                total_mentions: 1,
            },
        )]
        .into();
        let g = CoocGraph::from_parts(nodes, Vec::<Edge>::new()).unwrap();
        let text = String::from_utf8(nodes_csv(&g)).unwrap();
        assert!(text.contains("\"Smith, John\""));
    }
}
