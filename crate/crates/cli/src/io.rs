//! File helpers shared by the subcommands.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nlcm_core::RootedWeightedTree;

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Loads a tree file. With `first_leaf` the named leaf gets label 0 and the
/// remaining leaves keep their file order.
pub fn load_tree(path: &Path, first_leaf: Option<&str>) -> Result<RootedWeightedTree> {
    let doc = read_file(path)?;
    let tree = RootedWeightedTree::parse(&doc, None, None).with_context(|| format!("parsing tree {}", path.display()))?;
    let Some(first) = first_leaf else {
        return Ok(tree);
    };
    let leaves = tree.leaf_ids();
    if !leaves.iter().any(|l| l == first) {
        bail!("`{first}` is not a leaf of {}", path.display());
    }
    let mut order = vec![first.to_owned()];
    order.extend(leaves.into_iter().filter(|l| l != first));
    Ok(RootedWeightedTree::parse(&doc, Some(&order), None)?)
}

/// Loads a tree with a given leaf order, as recorded in a fit report.
pub fn load_tree_ordered(path: &Path, leaf_order: &[String]) -> Result<RootedWeightedTree> {
    let doc = read_file(path)?;
    RootedWeightedTree::parse(&doc, Some(leaf_order), None).with_context(|| format!("parsing tree {}", path.display()))
}

/// Writes rows as CSV with a header.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
