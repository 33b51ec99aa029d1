//! Tabular fitness benchmarks and their JSONL interchange format.
//!
//! One record per line:
//!
//! ```text
//! {"id": "m0", "adjacency": [[0,1],[0,0]], "ops": [],
//!  "runs": [{"split": "test", "epoch": 36, "metric": "overall_accuracy", "value": 0.93}]}
//! ```
//!
//! Repeating a `(split, epoch, metric)` triple within `runs` records another
//! independent run. Bitstring tables (e.g. exported NK landscapes) replace
//! `adjacency`/`ops` with a `"genotype": "0101..."` field.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::landscape::{bitstring_design, decode_bitstring_point, JointDesign, Landscape};
use crate::error::{Error, Result};
use crate::genotype::{encode_cell, CellJson, CellSpec, Genotype, OperatorLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validation" | "valid" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidParameter(format!("unknown split {other:?}"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

/// A `(split, epoch budget, metric)` triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Query {
    pub split: Split,
    pub epoch: u32,
    pub metric: String,
}

impl Query {
    pub fn new(split: Split, epoch: u32, metric: impl Into<String>) -> Self {
        Query {
            split,
            epoch,
            metric: metric.into(),
        }
    }

    pub fn at_epoch(&self, epoch: u32) -> Query {
        Query {
            epoch,
            ..self.clone()
        }
    }
}

/// Per-run measurements of one model, grouped by query.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessRecord {
    pub id: String,
    pub cell: Option<CellSpec>,
    pub runs: BTreeMap<Query, Vec<f64>>,
}

impl FitnessRecord {
    /// Mean over runs.
    pub fn aggregate(&self, query: &Query) -> Option<f64> {
        let values = self.runs.get(query)?;
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessTable {
    dataset_name: String,
    genotype_len: usize,
    records: BTreeMap<Genotype, FitnessRecord>,
    queries: BTreeSet<Query>,
    keys: Vec<Genotype>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunLine {
    split: Split,
    epoch: u32,
    metric: String,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adjacency: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ops: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    genotype: Option<Genotype>,
    runs: Vec<RunLine>,
}

/// Accumulates records, merging duplicate genotypes as extra runs.
#[derive(Debug, Default)]
pub struct TableBuilder {
    dataset_name: String,
    records: BTreeMap<Genotype, FitnessRecord>,
}

impl TableBuilder {
    pub fn new(dataset_name: impl Into<String>) -> Self {
        TableBuilder {
            dataset_name: dataset_name.into(),
            records: BTreeMap::new(),
        }
    }

    /// Adds measurements for a cell, keyed by its canonical encoding.
    pub fn add_cell(
        &mut self,
        id: impl Into<String>,
        cell: &CellSpec,
        measurements: impl IntoIterator<Item = (Query, f64)>,
    ) {
        let genotype = encode_cell(cell);
        self.add(id, genotype, Some(cell.canonical()), measurements);
    }

    pub fn add(
        &mut self,
        id: impl Into<String>,
        genotype: Genotype,
        cell: Option<CellSpec>,
        measurements: impl IntoIterator<Item = (Query, f64)>,
    ) {
        let record = self
            .records
            .entry(genotype)
            .or_insert_with(|| FitnessRecord {
                id: id.into(),
                cell,
                runs: BTreeMap::new(),
            });
        for (q, v) in measurements {
            record.runs.entry(q).or_default().push(v);
        }
    }

    pub fn build(self) -> Result<FitnessTable> {
        let Some((first_key, first)) = self.records.iter().next() else {
            return Err(Error::EmptyTable);
        };
        let genotype_len = first_key.len();
        let queries: BTreeSet<Query> = self
            .records
            .values()
            .flat_map(|r| r.runs.keys().cloned())
            .collect();
        let has_cells = first.cell.is_some();
        for (g, r) in &self.records {
            if g.len() != genotype_len {
                return Err(Error::InvalidRecord {
                    id: r.id.clone(),
                    message: format!("genotype length {} differs from {genotype_len}", g.len()),
                });
            }
            if r.cell.is_some() != has_cells {
                return Err(Error::InvalidRecord {
                    id: r.id.clone(),
                    message: "mixes cell and bitstring records".into(),
                });
            }
            for q in &queries {
                if !r.runs.contains_key(q) {
                    return Err(Error::InvalidRecord {
                        id: r.id.clone(),
                        message: format!(
                            "missing value for split={} epoch={} metric={}",
                            q.split, q.epoch, q.metric
                        ),
                    });
                }
            }
            for (q, values) in &r.runs {
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidRecord {
                        id: r.id.clone(),
                        message: format!("value {v} for {}/{}/{} outside [0, 1]", q.split, q.epoch, q.metric),
                    });
                }
            }
        }
        let keys = self.records.keys().cloned().collect();
        Ok(FitnessTable {
            dataset_name: self.dataset_name,
            genotype_len,
            records: self.records,
            queries,
            keys,
        })
    }
}

impl FitnessTable {
    pub fn dataset_name(&self) -> &str {
        &self.dataset_name
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn genotype_len(&self) -> usize {
        self.genotype_len
    }

    pub fn genotypes(&self) -> &[Genotype] {
        &self.keys
    }

    pub fn record(&self, x: &Genotype) -> Option<&FitnessRecord> {
        self.records.get(x)
    }

    pub fn records(&self) -> impl Iterator<Item = (&Genotype, &FitnessRecord)> {
        self.records.iter()
    }

    pub fn contains(&self, x: &Genotype) -> bool {
        self.records.contains_key(x)
    }

    pub fn queries(&self) -> &BTreeSet<Query> {
        &self.queries
    }

    /// Strictly increasing epoch budgets.
    pub fn epochs_available(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.queries.iter().map(|q| q.epoch).collect();
        set.into_iter().collect()
    }

    /// Epochs at which `(split, metric)` is available.
    pub fn epochs_for(&self, split: Split, metric: &str) -> Vec<u32> {
        self.queries
            .iter()
            .filter(|q| q.split == split && q.metric == metric)
            .map(|q| q.epoch)
            .collect()
    }

    pub fn splits(&self) -> BTreeSet<Split> {
        self.queries.iter().map(|q| q.split).collect()
    }

    pub fn metrics(&self) -> BTreeSet<String> {
        self.queries.iter().map(|q| q.metric.clone()).collect()
    }

    pub fn has_cells(&self) -> bool {
        self.records.values().next().is_some_and(|r| r.cell.is_some())
    }

    /// Mean fitness over runs.
    pub fn fitness(&self, x: &Genotype, query: &Query) -> Result<f64> {
        if !self.queries.contains(query) {
            return Err(Error::UnknownQuery {
                split: query.split.to_string(),
                epoch: query.epoch,
                metric: query.metric.clone(),
            });
        }
        let record = self
            .records
            .get(x)
            .ok_or_else(|| Error::UnknownGenotype(x.to_string()))?;
        record
            .aggregate(query)
            .ok_or_else(|| Error::UnknownGenotype(x.to_string()))
    }

    pub fn check_query(&self, query: &Query) -> Result<()> {
        if self.queries.contains(query) {
            Ok(())
        } else {
            Err(Error::UnknownQuery {
                split: query.split.to_string(),
                epoch: query.epoch,
                metric: query.metric.clone(),
            })
        }
    }

    /// The landscape induced by one query.
    pub fn landscape(&self, query: Query) -> Result<TabularLandscape<'_>> {
        self.check_query(&query)?;
        let max_nodes = self
            .records
            .values()
            .filter_map(|r| r.cell.as_ref().map(|c| c.node_count()))
            .max();
        Ok(TabularLandscape {
            table: self,
            query,
            max_nodes,
        })
    }

    pub fn read_jsonl<R: BufRead>(reader: R, dataset_name: &str) -> Result<FitnessTable> {
        let mut builder = TableBuilder::new(dataset_name);
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let measurements: Vec<(Query, f64)> = rec
                .runs
                .into_iter()
                .map(|r| (Query::new(r.split, r.epoch, r.metric), r.value))
                .collect();
            let bad = |message: String| Error::InvalidRecord {
                id: rec.id.clone(),
                message: format!("line {line_no}: {message}"),
            };
            match (rec.adjacency, rec.ops, rec.genotype) {
                (Some(adjacency), Some(ops), None) => {
                    let cell = CellSpec::from_json(&CellJson { adjacency, ops })
                        .map_err(|e| bad(e.to_string()))?;
                    builder.add_cell(rec.id.clone(), &cell, measurements);
                }
                (None, None, Some(g)) => builder.add(rec.id.clone(), g, None, measurements),
                _ => {
                    return Err(bad(
                        "record needs either adjacency+ops or genotype".into(),
                    ))
                }
            }
        }
        builder.build()
    }

    pub fn load(path: &Path) -> Result<FitnessTable> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::read_jsonl(std::io::BufReader::new(file), &name)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (g, r) in &self.records {
            let runs = r
                .runs
                .iter()
                .flat_map(|(q, vs)| {
                    vs.iter().map(move |&value| RunLine {
                        split: q.split,
                        epoch: q.epoch,
                        metric: q.metric.clone(),
                        value,
                    })
                })
                .collect();
            let (adjacency, ops, genotype) = match &r.cell {
                Some(c) => {
                    let j = c.to_json();
                    (Some(j.adjacency), Some(j.ops), None)
                }
                None => (None, None, Some(g.clone())),
            };
            let line = RecordLine {
                id: r.id.clone(),
                adjacency,
                ops,
                genotype,
                runs,
            };
            serde_json::to_writer(&mut w, &line).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Load a JSONL benchmark file.
pub fn load_table(path: &Path) -> Result<FitnessTable> {
    FitnessTable::load(path)
}

/// Landscape over the members of a table under one query. Neighbors are the
/// Hamming-1 flips that are themselves table members.
#[derive(Debug, Clone)]
pub struct TabularLandscape<'a> {
    table: &'a FitnessTable,
    query: Query,
    max_nodes: Option<usize>,
}

impl TabularLandscape<'_> {
    pub fn table(&self) -> &FitnessTable {
        self.table
    }

    pub fn query(&self) -> &Query {
        &self.query
    }
}

impl Landscape for TabularLandscape<'_> {
    fn genotype_len(&self) -> usize {
        self.table.genotype_len
    }

    fn size(&self) -> u128 {
        self.table.len() as u128
    }

    fn member(&self, index: u128) -> Option<Genotype> {
        usize::try_from(index)
            .ok()
            .and_then(|i| self.table.keys.get(i).cloned())
    }

    fn contains(&self, x: &Genotype) -> bool {
        self.table.contains(x)
    }

    fn fitness(&self, x: &Genotype) -> Result<f64> {
        self.table.fitness(x, &self.query)
    }

    /// Cell tables stratify over the upper-triangular adjacency entries and
    /// operator slots of the largest cell form; bitstring tables over bits.
    fn design(&self) -> JointDesign {
        match self.max_nodes {
            Some(m) => {
                let mut cardinalities = vec![2; m * (m - 1) / 2];
                cardinalities.extend(std::iter::repeat_n(OperatorLabel::ALL.len(), m - 2));
                JointDesign { cardinalities }
            }
            None => bitstring_design(self.table.genotype_len),
        }
    }

    fn decode_point(&self, point: &[usize]) -> Option<Genotype> {
        let g = match self.max_nodes {
            Some(m) => {
                let edges = m * (m - 1) / 2;
                if point.len() != edges + m - 2 {
                    return None;
                }
                let mut adjacency = vec![vec![false; m]; m];
                let mut d = 0;
                for u in 0..m {
                    for v in u + 1..m {
                        adjacency[u][v] = point[d] == 1;
                        d += 1;
                    }
                }
                let ops = point[edges..]
                    .iter()
                    .map(|&o| OperatorLabel::from_index(o))
                    .collect::<Option<Vec<_>>>()?;
                let cell = CellSpec::pruned(adjacency, ops).ok()?;
                encode_cell(&cell)
            }
            None => decode_bitstring_point(point, self.table.genotype_len)?,
        };
        self.table.contains(&g).then_some(g)
    }
}
