//! Multi-domain binary response data with partially observed cause labels.
//!
//! Domains are identified by the leaf labels of the domain tree (label 0 is
//! the target) and causes by the leaf labels of the cause tree, so cause
//! index `c` in `0..C` is the `c`-th leaf of the cause tree's leaf order.
//!
//! Missing responses keep a stored placeholder byte next to an observed
//! mask. Every computation iterates the observed index sets, so the
//! placeholder is never read.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{RootedWeightedTree, TreeError};

/// Token marking a missing response in data files.
pub const MISSING_TOKEN: &str = "NA";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("row {row}: domain `{id}` is not a leaf of the domain tree")]
    UnknownDomain { row: usize, id: String },
    #[error("row {row}: cause `{id}` is not a leaf of the cause tree")]
    UnknownCause { row: usize, id: String },
    #[error("row {row}, column `{column}`: value `{value}` is not 0, 1 or NA")]
    BadItemValue { row: usize, column: String, value: String },
    #[error("duplicate subject id `{0}`")]
    DuplicateSubject(String),
    #[error("header must start with `id,domain,cause` followed by at least one item column")]
    BadHeader,
    #[error("row {row} has {found} fields, expected {expected}")]
    RowLength { row: usize, found: usize, expected: usize },
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("entry ({subject}, {item}) is observed")]
    EntryObserved { subject: usize, item: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Pattern of missing cause labels across domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// One domain has missing causes and none observed.
    #[serde(rename = "i-1")]
    SingleDomainAllMissing,
    /// One domain mixes observed and missing causes.
    #[serde(rename = "i-2")]
    SingleDomainPartlyMissing,
    /// Two or more domains have missing causes.
    #[serde(rename = "ii")]
    SeveralDomainsMissing,
    /// Every cause is observed.
    #[serde(rename = "iii")]
    NoneMissing,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::SingleDomainAllMissing => "i-1",
            Scenario::SingleDomainPartlyMissing => "i-2",
            Scenario::SeveralDomainsMissing => "ii",
            Scenario::NoneMissing => "iii",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingnessScenario {
    pub tag: Scenario,
    pub domains_with_missing: Vec<usize>,
}

/// Validated response data. Immutable apart from test hooks on placeholders.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<String>,
    item_names: Vec<String>,
    num_domains: usize,
    num_causes: usize,
    /// Row-major `N × J`; entries at unobserved positions are placeholders.
    responses: Vec<u8>,
    observed: Vec<bool>,
    domain: Vec<usize>,
    cause: Vec<Option<usize>>,
    item_sets: Vec<Vec<usize>>,
    subject_sets: Vec<Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset from in-memory parts. `responses[i][j] = None` marks a
    /// missing entry; domains index `0..num_domains`, causes `0..num_causes`.
    pub fn from_parts(
        ids: Vec<String>,
        responses: &[Vec<Option<u8>>],
        domain: Vec<usize>,
        cause: Vec<Option<usize>>,
        num_domains: usize,
        num_causes: usize,
    ) -> Result<Self, DatasetError> {
        let n = ids.len();
        if responses.len() != n || domain.len() != n || cause.len() != n {
            return Err(DatasetError::Dimension(format!(
                "{n} ids, {} response rows, {} domains, {} causes",
                responses.len(),
                domain.len(),
                cause.len()
            )));
        }
        let j = responses.first().map_or(0, Vec::len);
        let item_names = (1..=j).map(|k| format!("item_{k}")).collect();
        let mut flat = Vec::with_capacity(n * j);
        let mut observed = Vec::with_capacity(n * j);
        for (i, row) in responses.iter().enumerate() {
            if row.len() != j {
                return Err(DatasetError::RowLength { row: i + 1, found: row.len(), expected: j });
            }
            for (col, v) in row.iter().enumerate() {
                match v {
                    Some(x @ (0 | 1)) => {
                        flat.push(*x);
                        observed.push(true);
                    }
                    Some(x) => {
                        return Err(DatasetError::BadItemValue {
                            row: i + 1,
                            column: format!("item_{}", col + 1),
                            value: x.to_string(),
                        })
                    }
                    None => {
                        flat.push(0);
                        observed.push(false);
                    }
                }
            }
        }
        Self::assemble(ids, item_names, num_domains, num_causes, flat, observed, domain, cause)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        ids: Vec<String>,
        item_names: Vec<String>,
        num_domains: usize,
        num_causes: usize,
        responses: Vec<u8>,
        observed: Vec<bool>,
        domain: Vec<usize>,
        cause: Vec<Option<usize>>,
    ) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(DatasetError::DuplicateSubject(id.clone()));
            }
        }
        for (i, &d) in domain.iter().enumerate() {
            if d >= num_domains {
                return Err(DatasetError::UnknownDomain { row: i + 1, id: d.to_string() });
            }
        }
        for (i, c) in cause.iter().enumerate() {
            if let Some(c) = *c {
                if c >= num_causes {
                    return Err(DatasetError::UnknownCause { row: i + 1, id: c.to_string() });
                }
            }
        }
        let j = item_names.len();
        let n = ids.len();
        let item_sets: Vec<Vec<usize>> =
            (0..n).map(|i| (0..j).filter(|&k| observed[i * j + k]).collect()).collect();
        let mut subject_sets = vec![Vec::new(); j];
        for (i, set) in item_sets.iter().enumerate() {
            for &k in set {
                subject_sets[k].push(i);
            }
        }
        Ok(Self {
            ids,
            item_names,
            num_domains,
            num_causes,
            responses,
            observed,
            domain,
            cause,
            item_sets,
            subject_sets,
        })
    }

    /// Loads the `id,domain,cause,item_1,...,item_J` format. Domain and cause
    /// columns hold leaf ids of the respective trees; an empty cause marks an
    /// unobserved label and `NA` a missing response.
    pub fn load(
        doc: &str,
        domain_tree: &RootedWeightedTree,
        cause_tree: &RootedWeightedTree,
    ) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(doc.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.len() < 4 || &headers[0] != "id" || &headers[1] != "domain" || &headers[2] != "cause" {
            return Err(DatasetError::BadHeader);
        }
        let item_names: Vec<String> = headers.iter().skip(3).map(str::to_owned).collect();
        let j = item_names.len();

        let mut ids = Vec::new();
        let mut domain = Vec::new();
        let mut cause = Vec::new();
        let mut responses = Vec::new();
        let mut observed = Vec::new();
        for (r, rec) in reader.records().enumerate() {
            let row = r + 1;
            let rec = rec?;
            if rec.len() != j + 3 {
                return Err(DatasetError::RowLength { row, found: rec.len(), expected: j + 3 });
            }
            ids.push(rec[0].to_owned());
            let d = domain_tree
                .node(&rec[1])
                .ok()
                .and_then(|u| domain_tree.leaf_label(u))
                .ok_or_else(|| DatasetError::UnknownDomain { row, id: rec[1].to_owned() })?;
            domain.push(d);
            let c = match &rec[2] {
                "" => None,
                id => Some(
                    cause_tree
                        .node(id)
                        .ok()
                        .and_then(|u| cause_tree.leaf_label(u))
                        .ok_or_else(|| DatasetError::UnknownCause { row, id: id.to_owned() })?,
                ),
            };
            cause.push(c);
            for (k, value) in rec.iter().skip(3).enumerate() {
                match value {
                    "0" => {
                        responses.push(0);
                        observed.push(true);
                    }
                    "1" => {
                        responses.push(1);
                        observed.push(true);
                    }
                    MISSING_TOKEN => {
                        responses.push(0);
                        observed.push(false);
                    }
                    other => {
                        return Err(DatasetError::BadItemValue {
                            row,
                            column: item_names[k].clone(),
                            value: other.to_owned(),
                        })
                    }
                }
            }
        }
        Self::assemble(
            ids,
            item_names,
            domain_tree.num_leaves(),
            cause_tree.num_leaves(),
            responses,
            observed,
            domain,
            cause,
        )
    }

    /// Writes the format read by [`Dataset::load`].
    pub fn to_csv(
        &self,
        domain_tree: &RootedWeightedTree,
        cause_tree: &RootedWeightedTree,
    ) -> Result<String, DatasetError> {
        if domain_tree.num_leaves() != self.num_domains || cause_tree.num_leaves() != self.num_causes {
            return Err(DatasetError::Dimension("trees do not match the dataset labels".into()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_owned(), "domain".into(), "cause".into()];
        header.extend(self.item_names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = Vec::with_capacity(3 + self.num_items());
            rec.push(self.ids[i].clone());
            rec.push(domain_tree.id(domain_tree.leaf(self.domain[i])).to_owned());
            rec.push(self.cause[i].map_or(String::new(), |c| cause_tree.id(cause_tree.leaf(c)).to_owned()));
            for j in 0..self.num_items() {
                rec.push(match self.response(i, j) {
                    Some(x) => x.to_string(),
                    None => MISSING_TOKEN.to_owned(),
                });
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| DatasetError::Dimension(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Number of subjects `N`.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of items `J`.
    pub fn num_items(&self) -> usize {
        self.item_names.len()
    }

    /// Number of domains `G + 1`, target included.
    pub fn num_domains(&self) -> usize {
        self.num_domains
    }

    /// Number of causes `C`.
    pub fn num_causes(&self) -> usize {
        self.num_causes
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn item_names(&self) -> &[String] {
        &self.item_names
    }

    pub fn domain(&self, i: usize) -> usize {
        self.domain[i]
    }

    pub fn domains(&self) -> &[usize] {
        &self.domain
    }

    pub fn cause(&self, i: usize) -> Option<usize> {
        self.cause[i]
    }

    pub fn causes(&self) -> &[Option<usize>] {
        &self.cause
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.num_items() + j]
    }

    /// `X_ij`, or `None` when missing.
    pub fn response(&self, i: usize, j: usize) -> Option<u8> {
        let ix = i * self.num_items() + j;
        self.observed[ix].then(|| self.responses[ix])
    }

    /// `X*_ij = 2 X_ij − 1` for an entry known to be observed.
    pub fn signed(&self, i: usize, j: usize) -> f64 {
        debug_assert!(self.is_observed(i, j));
        2.0 * f64::from(self.responses[i * self.num_items() + j]) - 1.0
    }

    /// `𝒥_i`: items observed for subject `i`, ascending.
    pub fn items_observed(&self, i: usize) -> &[usize] {
        &self.item_sets[i]
    }

    /// `ℐ_j`: subjects with item `j` observed, ascending.
    pub fn subjects_observed(&self, j: usize) -> &[usize] {
        &self.subject_sets[j]
    }

    /// Subjects in domain `g`, ascending.
    pub fn subjects_in_domain(&self, g: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.domain[i] == g).collect()
    }

    /// Number of non-missing responses.
    pub fn num_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Overwrites the stored placeholder of a missing entry. Exists so tests
    /// can show that placeholders never influence a fit.
    pub fn set_missing_placeholder(&mut self, i: usize, j: usize, value: u8) -> Result<(), DatasetError> {
        let ix = i * self.num_items() + j;
        if self.observed[ix] {
            return Err(DatasetError::EntryObserved { subject: i, item: j });
        }
        self.responses[ix] = value;
        Ok(())
    }

    /// Copy with the cause labels replaced.
    pub fn with_causes(&self, cause: Vec<Option<usize>>) -> Result<Self, DatasetError> {
        if cause.len() != self.len() {
            return Err(DatasetError::Dimension("cause vector length".into()));
        }
        let mut out = self.clone();
        out.cause = cause;
        Ok(out)
    }

    /// Classifies the pattern of missing cause labels.
    pub fn detect_scenario(&self) -> MissingnessScenario {
        let mut missing = vec![0usize; self.num_domains];
        let mut present = vec![0usize; self.num_domains];
        for i in 0..self.len() {
            match self.cause[i] {
                None => missing[self.domain[i]] += 1,
                Some(_) => present[self.domain[i]] += 1,
            }
        }
        let domains_with_missing: Vec<usize> = (0..self.num_domains).filter(|&g| missing[g] > 0).collect();
        let tag = match domains_with_missing.as_slice() {
            [] => Scenario::NoneMissing,
            [g] if present[*g] == 0 => Scenario::SingleDomainAllMissing,
            [_] => Scenario::SingleDomainPartlyMissing,
            _ => Scenario::SeveralDomainsMissing,
        };
        MissingnessScenario { tag, domains_with_missing }
    }
}
