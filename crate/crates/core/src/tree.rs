//! Rooted weighted trees.
//!
//! One structure serves both hierarchies in the model: the domain tree whose
//! leaves are the target and source populations, and the cause tree whose
//! leaves are the causes. Nodes are stored in an arena indexed by dense
//! `usize` indices assigned in preorder (root first, children in document
//! order), so every subtree occupies a contiguous index range.
//!
//! Every node `u` carries the weight `w_u` of the edge to its parent; the
//! root carries the virtual weight 1.

use std::collections::HashMap;

use thiserror::Error;

/// Errors raised while building or querying a tree.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` lies on a parent cycle")]
    Cycle(String),
    #[error("node `{0}` is declared more than once (a node has exactly one parent)")]
    MultipleParents(String),
    #[error("node `{node}` is not connected to the root: parent `{parent}` is not declared")]
    Disconnected { node: String, parent: String },
    #[error("node `{node}` has non-positive or non-finite weight {weight}")]
    NonPositiveWeight { node: String, weight: f64 },
    #[error("node `{node}` has level {level}, outside 1..={max}")]
    LevelOutOfRange { node: String, level: usize, max: usize },
    #[error("leaf order does not match the leaves of the tree: {0}")]
    LeafOrderMismatch(String),
    #[error("no root row (a row with an empty parent)")]
    MissingRoot,
    #[error("more than one root: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("root `{node}` must have weight 1, found {weight}")]
    RootWeight { node: String, weight: f64 },
    #[error("a tree needs at least one edge")]
    TooSmall,
    #[error("node `{0}` is not a leaf")]
    NotALeaf(String),
    #[error("malformed tree document (record {record}): {message}")]
    Malformed { record: usize, message: String },
}

/// One row of a tree document.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRow {
    pub id: String,
    pub parent: Option<String>,
    /// Edge weight; defaults to 1.
    pub weight: Option<f64>,
    /// Level; defaults to 1 for the root and 2 for every other node.
    pub level: Option<usize>,
}

impl NodeRow {
    pub fn new(id: impl Into<String>, parent: Option<&str>) -> Self {
        Self {
            id: id.into(),
            parent: parent.map(str::to_owned),
            weight: None,
            level: None,
        }
    }

    pub fn weight(mut self, weight: f64) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn level(mut self, level: usize) -> Self {
        self.level = Some(level);
        self
    }
}

/// A validated rooted weighted tree. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedWeightedTree {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    weight: Vec<f64>,
    level: Vec<usize>,
    num_levels: usize,
    /// Leaf label -> node.
    leaves: Vec<usize>,
    leaf_label: Vec<Option<usize>>,
    /// Root-first ancestor chains, each ending at the node itself.
    ancestors: Vec<Vec<usize>>,
    /// Exclusive end of the preorder range covered by each subtree.
    subtree_end: Vec<usize>,
    /// Leaf labels under each node, ascending.
    leaf_labels_below: Vec<Vec<usize>>,
}

impl RootedWeightedTree {
    /// Builds a tree from its rows.
    ///
    /// `leaf_order` maps leaves to external labels (position = label); when
    /// absent the leaves are labelled in preorder. `num_levels` declares `L`;
    /// when absent it is the largest level present.
    pub fn from_rows(
        rows: &[NodeRow],
        leaf_order: Option<&[String]>,
        num_levels: Option<usize>,
    ) -> Result<Self, TreeError> {
        let mut doc_index: HashMap<&str, usize> = HashMap::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if doc_index.insert(row.id.as_str(), i).is_some() {
                return Err(TreeError::MultipleParents(row.id.clone()));
            }
        }

        let mut root = None;
        for row in rows {
            match &row.parent {
                None => {
                    if let Some(r) = root {
                        let first: &NodeRow = &rows[r];
                        return Err(TreeError::MultipleRoots(first.id.clone(), row.id.clone()));
                    }
                    root = Some(doc_index[row.id.as_str()]);
                }
                Some(p) if *p == row.id => return Err(TreeError::Cycle(row.id.clone())),
                Some(_) => {}
            }
        }
        let root = root.ok_or(TreeError::MissingRoot)?;
        if rows.len() < 2 {
            return Err(TreeError::TooSmall);
        }

        // Every parent chain must terminate at the root.
        let mut reaches_root = vec![false; rows.len()];
        reaches_root[root] = true;
        for start in 0..rows.len() {
            let mut path = Vec::new();
            let mut on_path = vec![false; rows.len()];
            let mut cur = start;
            while !reaches_root[cur] {
                if on_path[cur] {
                    return Err(TreeError::Cycle(rows[cur].id.clone()));
                }
                on_path[cur] = true;
                path.push(cur);
                let parent_id = rows[cur].parent.as_deref().expect("only the root lacks a parent");
                cur = *doc_index
                    .get(parent_id)
                    .ok_or_else(|| TreeError::Disconnected {
                        node: rows[cur].id.clone(),
                        parent: parent_id.to_owned(),
                    })?;
            }
            for p in path {
                reaches_root[p] = true;
            }
        }

        let mut doc_children: Vec<Vec<usize>> = vec![Vec::new(); rows.len()];
        for (i, row) in rows.iter().enumerate() {
            if let Some(p) = &row.parent {
                doc_children[doc_index[p.as_str()]].push(i);
            }
        }

        // Preorder over document indices, children in document order.
        let mut order = Vec::with_capacity(rows.len());
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            order.push(u);
            stack.extend(doc_children[u].iter().rev());
        }
        let mut dense = vec![0usize; rows.len()];
        for (ix, &doc) in order.iter().enumerate() {
            dense[doc] = ix;
        }

        let declared_max = rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.level.unwrap_or(if i == root { 1 } else { 2 }))
            .max()
            .unwrap_or(1);
        let num_levels = num_levels.unwrap_or(declared_max);

        let n = rows.len();
        let mut ids = Vec::with_capacity(n);
        let mut parent = Vec::with_capacity(n);
        let mut weight = Vec::with_capacity(n);
        let mut level = Vec::with_capacity(n);
        let mut children = vec![Vec::new(); n];
        for &doc in &order {
            let row = &rows[doc];
            let w = row.weight.unwrap_or(1.0);
            if !(w.is_finite() && w > 0.0) {
                return Err(TreeError::NonPositiveWeight { node: row.id.clone(), weight: w });
            }
            if doc == root && w != 1.0 {
                return Err(TreeError::RootWeight { node: row.id.clone(), weight: w });
            }
            let l = row.level.unwrap_or(if doc == root { 1 } else { 2 });
            if l == 0 || l > num_levels {
                return Err(TreeError::LevelOutOfRange {
                    node: row.id.clone(),
                    level: l,
                    max: num_levels,
                });
            }
            ids.push(row.id.clone());
            let p = row.parent.as_ref().map(|p| dense[doc_index[p.as_str()]]);
            if let Some(p) = p {
                children[p].push(dense[doc]);
            }
            parent.push(p);
            weight.push(w);
            level.push(l);
        }
        let index: HashMap<String, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();

        let preorder_leaves: Vec<usize> = (0..n).filter(|&u| children[u].is_empty()).collect();
        let leaves = match leaf_order {
            None => preorder_leaves.clone(),
            Some(order) => {
                if order.len() != preorder_leaves.len() {
                    return Err(TreeError::LeafOrderMismatch(format!(
                        "{} labels given for {} leaves",
                        order.len(),
                        preorder_leaves.len()
                    )));
                }
                let mut seen = vec![false; n];
                let mut out = Vec::with_capacity(order.len());
                for id in order {
                    let u = *index.get(id).ok_or_else(|| {
                        TreeError::LeafOrderMismatch(format!("`{id}` is not a node"))
                    })?;
                    if !children[u].is_empty() {
                        return Err(TreeError::LeafOrderMismatch(format!("`{id}` is not a leaf")));
                    }
                    if seen[u] {
                        return Err(TreeError::LeafOrderMismatch(format!("`{id}` listed twice")));
                    }
                    seen[u] = true;
                    out.push(u);
                }
                out
            }
        };
        let mut leaf_label = vec![None; n];
        for (label, &u) in leaves.iter().enumerate() {
            leaf_label[u] = Some(label);
        }

        let mut ancestors: Vec<Vec<usize>> = Vec::with_capacity(n);
        for u in 0..n {
            let chain = match parent[u] {
                None => vec![u],
                Some(p) => {
                    let mut c = ancestors[p].clone();
                    c.push(u);
                    c
                }
            };
            ancestors.push(chain);
        }

        let mut subtree_end = vec![0usize; n];
        for u in (0..n).rev() {
            subtree_end[u] = children[u].iter().map(|&c| subtree_end[c]).max().unwrap_or(u + 1);
        }
        let leaf_labels_below = (0..n)
            .map(|u| {
                let mut labels: Vec<usize> =
                    (u..subtree_end[u]).filter_map(|v| leaf_label[v]).collect();
                labels.sort_unstable();
                labels
            })
            .collect();

        Ok(Self {
            ids,
            index,
            parent,
            children,
            weight,
            level,
            num_levels,
            leaves,
            leaf_label,
            ancestors,
            subtree_end,
            leaf_labels_below,
        })
    }

    /// A two-level tree: one root with the given leaves as children, unit weights.
    pub fn star(root: &str, leaves: &[&str]) -> Result<Self, TreeError> {
        let mut rows = vec![NodeRow::new(root, None)];
        rows.extend(leaves.iter().map(|l| NodeRow::new(*l, Some(root))));
        Self::from_rows(&rows, None, None)
    }

    /// Parses the delimited edge-list format: header `id,parent,weight,level`,
    /// one row per node, root row with an empty parent. `weight` and `level`
    /// columns may be omitted or left empty to take their defaults.
    pub fn parse(
        doc: &str,
        leaf_order: Option<&[String]>,
        num_levels: Option<usize>,
    ) -> Result<Self, TreeError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(doc.as_bytes());
        let malformed = |record: usize, message: String| TreeError::Malformed { record, message };
        let headers = reader.headers().map_err(|e| malformed(0, e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let id_col = col("id").ok_or_else(|| malformed(0, "missing `id` column".into()))?;
        let parent_col =
            col("parent").ok_or_else(|| malformed(0, "missing `parent` column".into()))?;
        let weight_col = col("weight");
        let level_col = col("level");

        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let record = i + 1;
            let rec = rec.map_err(|e| malformed(record, e.to_string()))?;
            let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).filter(|s| !s.is_empty());
            let id = field(Some(id_col))
                .ok_or_else(|| malformed(record, "empty node id".into()))?
                .to_owned();
            let weight = field(weight_col)
                .map(|s| s.parse::<f64>())
                .transpose()
                .map_err(|e| malformed(record, format!("weight: {e}")))?;
            let level = field(level_col)
                .map(|s| s.parse::<usize>())
                .transpose()
                .map_err(|e| malformed(record, format!("level: {e}")))?;
            rows.push(NodeRow {
                id,
                parent: field(Some(parent_col)).map(str::to_owned),
                weight,
                level,
            });
        }
        Self::from_rows(&rows, leaf_order, num_levels)
    }

    /// Serializes to the edge-list format, rows in preorder.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,parent,weight,level\n");
        for u in 0..self.len() {
            let parent = self.parent[u].map(|p| self.ids[p].as_str()).unwrap_or("");
            out.push_str(&format!("{},{},{},{}\n", self.ids[u], parent, self.weight[u], self.level[u]));
        }
        out
    }

    /// Leaf ids in label order, suitable as `leaf_order` when re-parsing.
    pub fn leaf_ids(&self) -> Vec<String> {
        self.leaves.iter().map(|&u| self.ids[u].clone()).collect()
    }

    /// Rows describing this tree, in preorder.
    pub fn rows(&self) -> Vec<NodeRow> {
        (0..self.len())
            .map(|u| NodeRow {
                id: self.ids[u].clone(),
                parent: self.parent[u].map(|p| self.ids[p].clone()),
                weight: Some(self.weight[u]),
                level: Some(self.level[u]),
            })
            .collect()
    }

    /// Number of nodes `p`.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Declared number of levels `L`.
    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Looks up a node by id.
    pub fn node(&self, id: &str) -> Result<usize, TreeError> {
        self.index.get(id).copied().ok_or_else(|| TreeError::UnknownNode(id.to_owned()))
    }

    pub fn id(&self, u: usize) -> &str {
        &self.ids[u]
    }

    pub fn parent(&self, u: usize) -> Option<usize> {
        self.parent[u]
    }

    pub fn children(&self, u: usize) -> &[usize] {
        &self.children[u]
    }

    pub fn weight(&self, u: usize) -> f64 {
        self.weight[u]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Level in `1..=L`.
    pub fn level(&self, u: usize) -> usize {
        self.level[u]
    }

    pub fn is_leaf(&self, u: usize) -> bool {
        self.children[u].is_empty()
    }

    /// Leaf nodes in label order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    /// Node carrying leaf label `label`.
    pub fn leaf(&self, label: usize) -> usize {
        self.leaves[label]
    }

    pub fn leaf_label(&self, u: usize) -> Option<usize> {
        self.leaf_label[u]
    }

    /// Requires `u` to be a leaf and returns its label.
    pub fn require_leaf(&self, u: usize) -> Result<usize, TreeError> {
        self.leaf_label[u].ok_or_else(|| TreeError::NotALeaf(self.ids[u].clone()))
    }

    /// `a(u)`: ancestors of `u` including `u`, root first.
    pub fn ancestors(&self, u: usize) -> &[usize] {
        &self.ancestors[u]
    }

    /// `d(u)`: descendants of `u` including `u`, in preorder.
    pub fn descendants(&self, u: usize) -> Vec<usize> {
        (u..self.subtree_end[u]).collect()
    }

    pub fn is_ancestor(&self, a: usize, u: usize) -> bool {
        a <= u && u < self.subtree_end[a]
    }

    /// Labels of the leaves in `d(u)`, ascending.
    pub fn leaf_labels_below(&self, u: usize) -> &[usize] {
        &self.leaf_labels_below[u]
    }

    /// Nodes assigned to level `level`.
    pub fn nodes_at_level(&self, level: usize) -> Vec<usize> {
        (0..self.len()).filter(|&u| self.level[u] == level).collect()
    }

    /// Lowest common ancestor.
    pub fn lca(&self, u: usize, v: usize) -> usize {
        let (au, av) = (&self.ancestors[u], &self.ancestors[v]);
        au.iter().zip(av).take_while(|(x, y)| x == y).last().map(|(x, _)| *x).unwrap_or(0)
    }

    /// Length of the unique path between `u` and `v`, summing edge weights
    /// (`weights[x]` is the edge from `x` to its parent). `weight_override`
    /// replaces the tree's own weights, e.g. with slab-scaled weights.
    pub fn path_distance(&self, u: usize, v: usize, weight_override: Option<&[f64]>) -> f64 {
        let w = weight_override.unwrap_or(&self.weight);
        let top = self.lca(u, v);
        let climb = |from: usize| {
            let chain = &self.ancestors[from];
            let start = chain.iter().position(|&x| x == top).unwrap_or(0) + 1;
            chain[start..].iter().map(|&x| w[x]).sum::<f64>()
        };
        climb(u) + climb(v)
    }

    /// `dist(root, u)` without the root's own virtual weight.
    pub fn root_distance(&self, u: usize) -> f64 {
        self.path_distance(self.root(), u, None)
    }
}
