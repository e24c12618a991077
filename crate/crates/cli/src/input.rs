use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use treeshift::shift::WeightsDocument;
use treeshift::{DirectedTree, TreeDocument, WeightAssignment};

use crate::CliError;

/// A tree document that may carry its weights inline.
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceDocument {
    #[serde(flatten)]
    pub tree: TreeDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, [f64; 2]>>,
}

pub fn read_text(path: &str) -> Result<String, CliError> {
    let io = |source| CliError::Io {
        path: path.to_string(),
        source,
    };
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(io)
    }
}

fn parse<T: for<'de> Deserialize<'de>>(path: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

/// Loads a tree and its weights from one combined document or a tree plus a weights document.
pub fn load_instance(input: &str, weights: Option<&str>) -> Result<(DirectedTree, WeightAssignment), CliError> {
    let doc: InstanceDocument = parse(input, &read_text(input)?)?;
    let tree = DirectedTree::from_document(&doc.tree)?;
    let w = match (weights, doc.weights) {
        (Some(path), _) => {
            let wd: WeightsDocument = parse(path, &read_text(path)?)?;
            WeightAssignment::from_document(&wd)
        }
        (None, Some(map)) => WeightAssignment::from_document(&WeightsDocument { weights: map }),
        (None, None) => {
            return Err(CliError::Input(format!(
                "{input}: missing field `weights` (or pass --weights FILE)"
            )))
        }
    };
    Ok((tree, w))
}

pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    s.trim()
        .parse::<Complex64>()
        .map_err(|_| CliError::Input(format!("cannot parse weight `{s}`")))
}

pub fn parse_weights(list: &[String]) -> Result<Vec<Complex64>, CliError> {
    list.iter().map(|s| parse_complex(s)).collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
