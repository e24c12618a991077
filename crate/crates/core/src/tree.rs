//! Finite rooted directed trees and the families the operator modules work with.
//!
//! Vertex labels are strings with a small canonical grammar: a single integer
//! (`"0"`, `"-3"`) or a comma-separated coordinate pair (`"1,2"`). Generators
//! use these forms so that labels read back as family coordinates:
//!
//! | family            | root      | other vertices                                   |
//! |-------------------|-----------|--------------------------------------------------|
//! | `path(n)`         | `"0"`     | `"1"`, …, `"n-1"` in a chain                     |
//! | `broom(N)`        | `"0"`     | leaves `"1"`, …, `"N"`                           |
//! | `two_level_broom` | `"0"`     | `"1,j"` children, `"2,j"` grandchildren          |
//! | `two_branch(κ,θ)` | `"-κ"`    | trunk `"-κ+1"`…`"0"`, branches `"i,j"`, i ∈ {1,2} |
//! | `binary(κ)`       | `"0,1"`   | `"k,l"` with children `"k+1,2l-1"`, `"k+1,2l"`    |
//!
//! Children are always kept sorted by label (numeric coordinates compared
//! numerically) so that basis indexing is deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(label: impl Into<String>) -> Self {
        VertexId(label.into())
    }

    pub fn int(k: i64) -> Self {
        VertexId(k.to_string())
    }

    pub fn pair(k: i64, l: i64) -> Self {
        VertexId(format!("{k},{l}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Integer coordinates when the label follows the canonical grammar.
    pub fn coords(&self) -> Option<Vec<i64>> {
        self.0
            .split(',')
            .map(|p| p.trim().parse::<i64>().ok())
            .collect()
    }
}

impl Ord for VertexId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.coords(), other.coords()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for VertexId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId::new(s)
    }
}

/// The JSON tree document: `{"vertices": [...], "root": "...", "edges": [[p, c], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub vertices: Vec<String>,
    pub root: String,
    pub edges: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateVertex { vertex: String },
    MissingRoot { root: String },
    UnknownEdgeVertex { edge: (String, String), vertex: String },
    SelfLoop { vertex: String },
    RootHasParent { root: String, parent: String },
    MultipleParents { vertex: String, parents: Vec<String> },
    Unreachable { vertex: String },
    Cycle { vertex: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVertex { vertex } => write!(f, "vertex {vertex} listed twice"),
            Violation::MissingRoot { root } => write!(f, "root {root} is not a vertex"),
            Violation::UnknownEdgeVertex { edge, vertex } => {
                write!(f, "edge ({}, {}) uses unknown vertex {vertex}", edge.0, edge.1)
            }
            Violation::SelfLoop { vertex } => write!(f, "self-loop at vertex {vertex}"),
            Violation::RootHasParent { root, parent } => {
                write!(f, "root {root} has parent {parent}")
            }
            Violation::MultipleParents { vertex, parents } => {
                let count = match parents.len() {
                    2 => "two".to_string(),
                    3 => "three".to_string(),
                    k => k.to_string(),
                };
                write!(f, "vertex {vertex} has {count} parents ({})", parents.join(", "))
            }
            Violation::Unreachable { vertex } => {
                write!(f, "vertex {vertex} is not reachable from the root")
            }
            Violation::Cycle { vertex } => write!(f, "vertex {vertex} lies on a cycle"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

/// Checks every tree invariant on a raw document and names each offender.
pub fn validate_tree(doc: &TreeDocument) -> ValidationReport {
    let mut violations = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, v) in doc.vertices.iter().enumerate() {
        if index.insert(v.as_str(), i).is_some() {
            violations.push(Violation::DuplicateVertex { vertex: v.clone() });
        }
    }
    let root = index.get(doc.root.as_str()).copied();
    if root.is_none() {
        violations.push(Violation::MissingRoot {
            root: doc.root.clone(),
        });
    }

    let n = doc.vertices.len();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (p, c) in &doc.edges {
        let mut known = true;
        for v in [p, c] {
            if !index.contains_key(v.as_str()) {
                violations.push(Violation::UnknownEdgeVertex {
                    edge: (p.clone(), c.clone()),
                    vertex: v.clone(),
                });
                known = false;
            }
        }
        if !known {
            continue;
        }
        if p == c {
            violations.push(Violation::SelfLoop { vertex: p.clone() });
            continue;
        }
        let (pi, ci) = (index[p.as_str()], index[c.as_str()]);
        if !parents[ci].contains(&pi) {
            parents[ci].push(pi);
            children[pi].push(ci);
        }
    }

    for (v, ps) in parents.iter().enumerate() {
        let label = &doc.vertices[v];
        if Some(v) == root {
            if let Some(&p) = ps.first() {
                violations.push(Violation::RootHasParent {
                    root: label.clone(),
                    parent: doc.vertices[p].clone(),
                });
            }
        } else if ps.len() > 1 {
            violations.push(Violation::MultipleParents {
                vertex: label.clone(),
                parents: ps.iter().map(|&p| doc.vertices[p].clone()).collect(),
            });
        }
    }

    if let Some(r) = root {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([r]);
        seen[r] = true;
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        for v in 0..n {
            if seen[v] {
                continue;
            }
            if on_parent_cycle(v, &parents) {
                violations.push(Violation::Cycle {
                    vertex: doc.vertices[v].clone(),
                });
            } else {
                violations.push(Violation::Unreachable {
                    vertex: doc.vertices[v].clone(),
                });
            }
        }
    }
    ValidationReport { violations }
}

fn on_parent_cycle(start: usize, parents: &[Vec<usize>]) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &p in &parents[u] {
            if p == start {
                return true;
            }
            if seen.insert(p) {
                stack.push(p);
            }
        }
    }
    false
}

/// A validated finite rooted directed tree. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedTree {
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

impl DirectedTree {
    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let report = validate_tree(doc);
        if !report.is_ok() {
            return Err(Error::InvalidTree(report.messages().join("; ")));
        }
        let vertices: Vec<VertexId> = doc.vertices.iter().map(VertexId::new).collect();
        let index: HashMap<VertexId, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let n = vertices.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (p, c) in &doc.edges {
            let (pi, ci) = (index[&VertexId::new(p)], index[&VertexId::new(c)]);
            if parent[ci].is_none() {
                parent[ci] = Some(pi);
                children[pi].push(ci);
            }
        }
        for ch in &mut children {
            ch.sort_by(|&a, &b| vertices[a].cmp(&vertices[b]));
        }
        let root = index[&VertexId::new(&doc.root)];
        let mut depth = vec![0; n];
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                depth[c] = depth[u] + 1;
                queue.push_back(c);
            }
        }
        Ok(DirectedTree {
            vertices,
            index,
            root,
            parent,
            children,
            depth,
        })
    }

    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            vertices: self.vertices.iter().map(|v| v.0.clone()).collect(),
            root: self.vertices[self.root].0.clone(),
            edges: self
                .edges()
                .map(|(p, c)| (self.vertices[p].0.clone(), self.vertices[c].0.clone()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices in basis order.
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &VertexId {
        &self.vertices[i]
    }

    pub fn index_of(&self, v: &VertexId) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn depth_of(&self, i: usize) -> usize {
        self.depth[i]
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Edges `(parent, child)` as basis indices, grouped by parent in basis order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |p| self.children[p].iter().map(move |&c| (p, c)))
    }

    pub fn non_root(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| i != self.root)
    }

    pub fn branching_vertices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.children[i].len() >= 2)
            .collect()
    }

    /// Descendants of `v` exactly `levels` generations below it, in basis order.
    pub fn descendants_at(&self, v: usize, levels: usize) -> Vec<usize> {
        let mut frontier = vec![v];
        for _ in 0..levels {
            frontier = frontier
                .iter()
                .flat_map(|&u| self.children[u].iter().copied())
                .collect();
        }
        frontier
    }

    /// Re-checks the internal invariants (parent/children consistency, reachability).
    pub fn validate(&self) -> ValidationReport {
        validate_tree(&self.to_document())
    }

    fn same_shape(&self, other: &DirectedTree) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mine: BTreeSet<(VertexId, VertexId)> = self
            .edges()
            .map(|(p, c)| (self.vertices[p].clone(), self.vertices[c].clone()))
            .collect();
        let theirs: BTreeSet<(VertexId, VertexId)> = other
            .edges()
            .map(|(p, c)| (other.vertices[p].clone(), other.vertices[c].clone()))
            .collect();
        let mine_v: BTreeSet<&VertexId> = self.vertices.iter().collect();
        let theirs_v: BTreeSet<&VertexId> = other.vertices.iter().collect();
        mine == theirs && mine_v == theirs_v && self.vertex(self.root) == other.vertex(other.root)
    }
}

/// Parameterised tree families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TreeFamily {
    Path { n: usize },
    TwoBranch { kappa: usize, theta: usize },
    Binary { kappa: usize },
    Broom { teeth: usize },
    TwoLevelBroom { teeth: usize },
}

impl TreeFamily {
    pub fn generate(&self) -> Result<DirectedTree> {
        match *self {
            TreeFamily::Path { n } => generate_path(n),
            TreeFamily::TwoBranch { kappa, theta } => generate_two_branch(kappa, theta),
            TreeFamily::Binary { kappa } => generate_binary(kappa),
            TreeFamily::Broom { teeth } => generate_broom(teeth),
            TreeFamily::TwoLevelBroom { teeth } => generate_two_level_broom(teeth),
        }
    }

    /// Identifies which family (if any) produced `t`, by regenerating candidates and
    /// comparing labelled vertex and edge sets. Vertex order is not compared.
    pub fn recognize(t: &DirectedTree) -> Option<TreeFamily> {
        let n = t.len();
        let negatives = t
            .vertices()
            .iter()
            .filter(|v| v.as_str().starts_with('-'))
            .count();
        let mut candidates = vec![
            TreeFamily::Path { n },
            TreeFamily::Broom {
                teeth: n.saturating_sub(1),
            },
            TreeFamily::TwoLevelBroom {
                teeth: n.saturating_sub(1) / 2,
            },
            TreeFamily::Binary { kappa: t.depth() },
        ];
        if n > negatives + 1 {
            candidates.push(TreeFamily::TwoBranch {
                kappa: negatives,
                theta: (n - negatives - 1) / 2,
            });
        }
        candidates
            .into_iter()
            .find(|fam| fam.generate().is_ok_and(|g| g.same_shape(t)))
    }
}

fn build(vertices: Vec<VertexId>, root: VertexId, edges: Vec<(VertexId, VertexId)>) -> DirectedTree {
    let doc = TreeDocument {
        vertices: vertices.into_iter().map(|v| v.0).collect(),
        root: root.0,
        edges: edges.into_iter().map(|(p, c)| (p.0, c.0)).collect(),
    };
    DirectedTree::from_document(&doc).expect("generator produced an invalid tree")
}

pub fn generate_path(n: usize) -> Result<DirectedTree> {
    if n < 1 {
        return Err(Error::ParameterOutOfRange("path needs n >= 1".into()));
    }
    let vertices: Vec<VertexId> = (0..n as i64).map(VertexId::int).collect();
    let edges = (1..n as i64)
        .map(|k| (VertexId::int(k - 1), VertexId::int(k)))
        .collect();
    Ok(build(vertices, VertexId::int(0), edges))
}

pub fn generate_broom(teeth: usize) -> Result<DirectedTree> {
    if teeth < 1 {
        return Err(Error::ParameterOutOfRange("broom needs N >= 1".into()));
    }
    let vertices: Vec<VertexId> = (0..=teeth as i64).map(VertexId::int).collect();
    let edges = (1..=teeth as i64)
        .map(|j| (VertexId::int(0), VertexId::int(j)))
        .collect();
    Ok(build(vertices, VertexId::int(0), edges))
}

pub fn generate_two_level_broom(teeth: usize) -> Result<DirectedTree> {
    if teeth < 1 {
        return Err(Error::ParameterOutOfRange(
            "two-level broom needs N >= 1".into(),
        ));
    }
    let n = teeth as i64;
    let mut vertices = vec![VertexId::int(0)];
    vertices.extend((1..=n).map(|j| VertexId::pair(1, j)));
    vertices.extend((1..=n).map(|j| VertexId::pair(2, j)));
    let mut edges: Vec<_> = (1..=n)
        .map(|j| (VertexId::int(0), VertexId::pair(1, j)))
        .collect();
    edges.extend((1..=n).map(|j| (VertexId::pair(1, j), VertexId::pair(2, j))));
    Ok(build(vertices, VertexId::int(0), edges))
}

/// Trunk `-κ → … → 0`, then two branches `(i,1) → … → (i,θ)` for `i ∈ {1, 2}`.
pub fn generate_two_branch(kappa: usize, theta: usize) -> Result<DirectedTree> {
    if theta < 1 {
        return Err(Error::ParameterOutOfRange(
            "two-branch tree needs theta >= 1".into(),
        ));
    }
    let (k, t) = (kappa as i64, theta as i64);
    let mut vertices: Vec<VertexId> = (-k..=0).map(VertexId::int).collect();
    for i in 1..=2 {
        vertices.extend((1..=t).map(|j| VertexId::pair(i, j)));
    }
    let mut edges: Vec<_> = (-k + 1..=0)
        .map(|j| (VertexId::int(j - 1), VertexId::int(j)))
        .collect();
    for i in 1..=2 {
        edges.push((VertexId::int(0), VertexId::pair(i, 1)));
        edges.extend((1..t).map(|j| (VertexId::pair(i, j), VertexId::pair(i, j + 1))));
    }
    Ok(build(vertices, VertexId::int(-k), edges))
}

/// Complete binary tree of depth `κ`; vertex `(k,l)` has children `(k+1, 2l-1)`, `(k+1, 2l)`.
pub fn generate_binary(kappa: usize) -> Result<DirectedTree> {
    if kappa < 2 {
        return Err(Error::ParameterOutOfRange(
            "binary tree needs kappa >= 2".into(),
        ));
    }
    if kappa > 20 {
        return Err(Error::ParameterOutOfRange(
            "binary tree depth above 20 is not supported".into(),
        ));
    }
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for k in 0..=kappa as i64 {
        for l in 1..=(1i64 << k) {
            vertices.push(VertexId::pair(k, l));
            if k < kappa as i64 {
                edges.push((VertexId::pair(k, l), VertexId::pair(k + 1, 2 * l - 1)));
                edges.push((VertexId::pair(k, l), VertexId::pair(k + 1, 2 * l)));
            }
        }
    }
    Ok(build(vertices, VertexId::pair(0, 1), edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(vertices: &[&str], root: &str, edges: &[(&str, &str)]) -> TreeDocument {
        TreeDocument {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            root: root.into(),
            edges: edges
                .iter()
                .map(|(p, c)| (p.to_string(), c.to_string()))
                .collect(),
        }
    }

    #[test]
    fn single_vertex_is_a_tree() {
        assert!(validate_tree(&doc(&["0"], "0", &[])).is_ok());
    }

    #[test]
    fn two_parents_are_reported() {
        let report = validate_tree(&doc(&["0", "1", "2"], "0", &[("0", "1"), ("2", "1")]));
        let msgs = report.messages();
        assert!(msgs.iter().any(|m| m.starts_with("vertex 1 has two parents")), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("vertex 2 is not reachable")));
    }

    #[test]
    fn uneven_fork_is_valid() {
        let d = doc(
            &["0", "1,1", "2,1", "2,2"],
            "0",
            &[("0", "1,1"), ("0", "2,1"), ("2,1", "2,2")],
        );
        assert!(validate_tree(&d).is_ok());
    }

    #[test]
    fn cycles_and_unknown_vertices_are_reported() {
        let report = validate_tree(&doc(
            &["0", "a", "b"],
            "0",
            &[("a", "b"), ("b", "a"), ("0", "zz")],
        ));
        let kinds: Vec<_> = report.violations.iter().collect();
        assert!(kinds.iter().any(|v| matches!(v, Violation::Cycle { .. })));
        assert!(kinds
            .iter()
            .any(|v| matches!(v, Violation::UnknownEdgeVertex { .. })));
        let report = validate_tree(&doc(&["0", "1"], "0", &[("1", "0"), ("0", "1")]));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RootHasParent { .. })));
    }

    #[test]
    fn two_branch_shapes() {
        let t = generate_two_branch(1, 2).unwrap();
        let labels: Vec<_> = t.vertices().iter().map(|v| v.as_str()).collect();
        assert_eq!(labels, ["-1", "0", "1,1", "1,2", "2,1", "2,2"]);
        let t = generate_two_branch(0, 1).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.children(t.root()).len(), 2);
        let t = generate_two_branch(2, 3).unwrap();
        assert_eq!(t.depth(), 5);
        assert_eq!(t.branching_vertices().len(), 1);
        assert!(generate_two_branch(2, 0).is_err());
    }

    #[test]
    fn binary_shapes() {
        assert_eq!(generate_binary(2).unwrap().len(), 7);
        let t = generate_binary(3).unwrap();
        assert_eq!(t.len(), 15);
        assert_eq!(t.depth(), 3);
        let t = generate_binary(2).unwrap();
        let v = t.index_of(&VertexId::pair(1, 2)).unwrap();
        let kids: Vec<_> = t.children(v).iter().map(|&c| t.vertex(c).as_str()).collect();
        assert_eq!(kids, ["2,3", "2,4"]);
        assert!(generate_binary(1).is_err());
    }

    #[test]
    fn small_families() {
        let p = generate_path(4).unwrap();
        assert_eq!((p.len(), p.depth()), (4, 3));
        let b = generate_broom(3).unwrap();
        assert_eq!((b.len(), b.depth()), (4, 1));
        let b2 = generate_two_level_broom(2).unwrap();
        assert_eq!((b2.len(), b2.depth()), (5, 2));
        assert!(generate_path(0).is_err());
        assert!(generate_broom(0).is_err());
    }

    #[test]
    fn children_sorted_numerically() {
        let d = doc(
            &["0", "10", "9", "2"],
            "0",
            &[("0", "10"), ("0", "9"), ("0", "2")],
        );
        let t = DirectedTree::from_document(&d).unwrap();
        let kids: Vec<_> = t.children(0).iter().map(|&c| t.vertex(c).as_str()).collect();
        assert_eq!(kids, ["2", "9", "10"]);
    }

    #[test]
    fn recognize_round_trips_generators() {
        for fam in [
            TreeFamily::Path { n: 5 },
            TreeFamily::Broom { teeth: 4 },
            TreeFamily::TwoLevelBroom { teeth: 3 },
            TreeFamily::TwoBranch { kappa: 2, theta: 3 },
            TreeFamily::TwoBranch { kappa: 0, theta: 2 },
            TreeFamily::Binary { kappa: 3 },
        ] {
            let t = fam.generate().unwrap();
            let round = DirectedTree::from_document(&t.to_document()).unwrap();
            assert_eq!(TreeFamily::recognize(&round), Some(fam));
        }
        let d = doc(
            &["0", "1,1", "2,1", "2,2"],
            "0",
            &[("0", "1,1"), ("0", "2,1"), ("2,1", "2,2")],
        );
        assert_eq!(TreeFamily::recognize(&DirectedTree::from_document(&d).unwrap()), None);
    }
}
