//! JSON dataset files.
//!
//! ```json
//! { "x_card": 1, "e_card": 2,
//!   "graphs": [ { "n": 3, "nodes": [0, 0, 0], "edges": [[0, 1, 1], [1, 2, 1]], "label": null } ] }
//! ```
//!
//! Pairs absent from `edges` have state 0.

use super::{pairs, CategoricalGraph, GraphDataset};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphRecord {
    pub n: usize,
    pub nodes: Vec<usize>,
    pub edges: Vec<[usize; 3]>,
    #[serde(default)]
    pub label: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub x_card: usize,
    pub e_card: usize,
    pub graphs: Vec<GraphRecord>,
}

impl From<&GraphDataset> for DatasetFile {
    fn from(ds: &GraphDataset) -> Self {
        let graphs = ds
            .graphs()
            .iter()
            .enumerate()
            .map(|(k, g)| GraphRecord {
                n: g.n_nodes(),
                nodes: g.node_states().to_vec(),
                edges: pairs(g.n_nodes())
                    .zip(g.edge_states())
                    .filter(|(_, &s)| s != 0)
                    .map(|((i, j), &s)| [i, j, s])
                    .collect(),
                label: ds.label(k),
            })
            .collect();
        Self {
            x_card: ds.x_card(),
            e_card: ds.e_card(),
            graphs,
        }
    }
}

impl TryFrom<DatasetFile> for GraphDataset {
    type Error = Error;

    fn try_from(file: DatasetFile) -> Result<Self> {
        let any_label = file.graphs.iter().any(|r| r.label.is_some());
        let all_label = file.graphs.iter().all(|r| r.label.is_some());
        if any_label && !all_label {
            return Err(Error::InvalidGraph(
                "labels must be given for every graph or none".into(),
            ));
        }
        let mut labels = Vec::new();
        let mut graphs = Vec::with_capacity(file.graphs.len());
        for r in file.graphs {
            if r.nodes.len() != r.n {
                return Err(Error::InvalidGraph(format!(
                    "record declares n = {} but lists {} node states",
                    r.n,
                    r.nodes.len()
                )));
            }
            let edges: Vec<_> = r.edges.iter().map(|e| (e[0], e[1], e[2])).collect();
            graphs.push(CategoricalGraph::from_edges(
                r.nodes,
                &edges,
                file.x_card,
                file.e_card,
            )?);
            if let Some(l) = r.label {
                labels.push(l);
            }
        }
        GraphDataset::new(
            graphs,
            any_label.then_some(labels),
            file.x_card,
            file.e_card,
        )
    }
}

pub fn write_dataset(ds: &GraphDataset, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&DatasetFile::from(ds))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<GraphDataset> {
    let text = std::fs::read_to_string(path)?;
    let file: DatasetFile = serde_json::from_str(&text)?;
    file.try_into()
}
