//! Architecture cells and their fixed-length binary encoding.
//!
//! A cell is a small DAG (at most 7 nodes, 9 edges) whose intermediate nodes
//! carry one of three operator labels. The binary genotype replaces every
//! intermediate slot by three unlabeled copies, one per operator, giving a
//! 17-node graph. Its flattened 17×17 adjacency matrix is the genotype.
//!
//! Expanded node layout: index 0 is IN, index `1 + 3(s-1) + o` is slot `s`
//! (1..=5) with operator `o` (0..=2), index 16 is OUT.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_NODES: usize = 7;
pub const MAX_EDGES: usize = 9;
pub const SLOTS: usize = MAX_NODES - 2;
pub const OPERATOR_COUNT: usize = 3;
pub const EXPANDED_NODES: usize = 1 + SLOTS * OPERATOR_COUNT + 1;
pub const GENOTYPE_BITS: usize = EXPANDED_NODES * EXPANDED_NODES;

const IN: usize = 0;
const OUT: usize = EXPANDED_NODES - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorLabel {
    Conv3x3,
    Conv1x1,
    MaxPool3x3,
}

impl OperatorLabel {
    pub const ALL: [OperatorLabel; OPERATOR_COUNT] = [
        OperatorLabel::Conv3x3,
        OperatorLabel::Conv1x1,
        OperatorLabel::MaxPool3x3,
    ];

    pub fn index(self) -> usize {
        match self {
            OperatorLabel::Conv3x3 => 0,
            OperatorLabel::Conv1x1 => 1,
            OperatorLabel::MaxPool3x3 => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorLabel::Conv3x3 => "conv3x3",
            OperatorLabel::Conv1x1 => "conv1x1",
            OperatorLabel::MaxPool3x3 => "maxpool3x3",
        }
    }
}

impl fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorLabel {
    type Err = Error;

    /// Accepts the short names as well as the `-bn-relu` suffixed names used
    /// by tabular benchmark dumps.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conv3x3" | "conv3x3-bn-relu" => Ok(OperatorLabel::Conv3x3),
            "conv1x1" | "conv1x1-bn-relu" => Ok(OperatorLabel::Conv1x1),
            "maxpool3x3" => Ok(OperatorLabel::MaxPool3x3),
            other => Err(Error::InvalidCell(format!("unknown operator {other:?}"))),
        }
    }
}

/// A fixed-length bit vector. Cell genotypes have [`GENOTYPE_BITS`] bits;
/// synthetic bitstring landscapes use other lengths.
///
/// Ordering is lexicographic on the bit sequence, bit 0 first, with `0 < 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    words: Vec<u64>,
    len: usize,
}

impl Genotype {
    pub fn zeros(len: usize) -> Self {
        Genotype {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut g = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                g.set(i, true);
            }
        }
        g
    }

    /// Low `len` bits of `value`, bit `i` of the genotype being bit `i` of
    /// the integer.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut g = Self::zeros(len);
        if len > 0 {
            let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            g.words[0] = value & mask;
        }
        g
    }

    /// Inverse of [`Genotype::from_u64`] for genotypes of at most 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        match self.len {
            0 => Some(0),
            1..=64 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flipped(&self, i: usize) -> Genotype {
        let mut g = self.clone();
        g.set(i, !self.get(i));
        g
    }

    /// Every genotype at Hamming distance one, in bit order.
    pub fn flips(&self) -> impl Iterator<Item = Genotype> + '_ {
        (0..self.len).map(move |i| self.flipped(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn hamming(&self, other: &Genotype) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }
}

/// Number of differing positions between two equal-length genotypes.
pub fn hamming(a: &Genotype, b: &Genotype) -> Result<usize> {
    a.hamming(b)
}

impl Ord for Genotype {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let bit = diff.trailing_zeros();
                // The genotype holding 0 at the first differing bit sorts first.
                return if a >> bit & 1 == 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for Genotype {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genotype({self})")
    }
}

impl FromStr for Genotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut g = Genotype::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => g.set(i, true),
                other => {
                    return Err(Error::Decode(format!(
                        "genotype strings contain only 0/1, found {other:?} at {i}"
                    )))
                }
            }
        }
        Ok(g)
    }
}

impl Serialize for Genotype {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Genotype {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An architecture cell in its original DAG form.
///
/// Node 0 is IN, the last node is OUT, and `ops[i]` labels node `i + 1`.
/// Construction validates the structure, so every value is a legal cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSpec {
    adjacency: Vec<Vec<bool>>,
    ops: Vec<OperatorLabel>,
}

impl CellSpec {
    pub fn new(adjacency: Vec<Vec<bool>>, ops: Vec<OperatorLabel>) -> Result<Self> {
        let n = adjacency.len();
        if !(2..=MAX_NODES).contains(&n) {
            return Err(Error::InvalidCell(format!(
                "node count {n} outside [2, {MAX_NODES}]"
            )));
        }
        if let Some(row) = adjacency.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidCell(format!(
                "adjacency row {row} has length {}, expected {n}",
                adjacency[row].len()
            )));
        }
        if ops.len() != n - 2 {
            return Err(Error::InvalidCell(format!(
                "ops length {} does not match {} intermediate nodes",
                ops.len(),
                n - 2
            )));
        }
        for (u, row) in adjacency.iter().enumerate() {
            for (v, &e) in row.iter().enumerate() {
                if e && v <= u {
                    return Err(Error::InvalidCell(format!(
                        "edge {u}->{v} is not upper-triangular (cycle or self-loop)"
                    )));
                }
            }
        }
        let cell = CellSpec { adjacency, ops };
        let edges = cell.edge_count();
        if edges > MAX_EDGES {
            return Err(Error::InvalidCell(format!(
                "edge count {edges} exceeds budget {MAX_EDGES}"
            )));
        }
        let from_in = cell.reachable_from_input();
        let to_out = cell.reaches_output();
        if !from_in[n - 1] {
            return Err(Error::InvalidCell("no path from IN to OUT".into()));
        }
        for v in 1..n - 1 {
            if cell.degree(v) > 0 && !(from_in[v] && to_out[v]) {
                return Err(Error::InvalidCell(format!(
                    "intermediate node {v} has edges but is not on an IN->OUT path"
                )));
            }
        }
        Ok(cell)
    }

    /// Builds a cell after dropping intermediate nodes that are not on any
    /// IN->OUT path, together with their edges.
    pub fn pruned(adjacency: Vec<Vec<bool>>, ops: Vec<OperatorLabel>) -> Result<Self> {
        let n = adjacency.len();
        if n < 2 || ops.len() + 2 != n || adjacency.iter().any(|r| r.len() != n) {
            return Self::new(adjacency, ops);
        }
        let probe = CellSpec {
            adjacency: adjacency.clone(),
            ops: ops.clone(),
        };
        let from_in = probe.reachable_from_input();
        let to_out = probe.reaches_output();
        let keep: Vec<usize> = (0..n)
            .filter(|&v| v == 0 || v == n - 1 || (from_in[v] && to_out[v]))
            .collect();
        let adjacency = keep
            .iter()
            .map(|&u| keep.iter().map(|&v| adjacency[u][v]).collect())
            .collect();
        let ops = keep[1..keep.len() - 1].iter().map(|&v| ops[v - 1]).collect();
        Self::new(adjacency, ops)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn ops(&self) -> &[OperatorLabel] {
        &self.ops
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u][v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().flatten().filter(|&&e| e).count()
    }

    fn degree(&self, v: usize) -> usize {
        let n = self.node_count();
        (0..n)
            .filter(|&u| self.adjacency[u][v] || self.adjacency[v][u])
            .count()
    }

    fn reachable_from_input(&self) -> Vec<bool> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        seen[0] = true;
        // Upper-triangular: a single forward pass in index order suffices.
        for u in 0..n {
            if seen[u] {
                for v in u + 1..n {
                    if self.adjacency[u][v] {
                        seen[v] = true;
                    }
                }
            }
        }
        seen
    }

    fn reaches_output(&self) -> Vec<bool> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        seen[n - 1] = true;
        for u in (0..n).rev() {
            if (u + 1..n).any(|v| self.adjacency[u][v] && seen[v]) {
                seen[u] = true;
            }
        }
        seen
    }

    /// Canonical representative of this cell.
    ///
    /// Isolated intermediate nodes are dropped. Among all relabelings of the
    /// remaining intermediates that keep the adjacency upper-triangular, the
    /// one with the lexicographically smallest genotype is chosen.
    pub fn canonical(&self) -> CellSpec {
        let n = self.node_count();
        let keep: Vec<usize> = (0..n)
            .filter(|&v| v == 0 || v == n - 1 || self.degree(v) > 0)
            .collect();
        let base = self.relabel(&keep);
        let m = base.node_count() - 2;
        let mut best: Option<(Genotype, CellSpec)> = None;
        for order in topological_orders(&base, m) {
            let mut perm = Vec::with_capacity(m + 2);
            perm.push(0);
            perm.extend(order.iter().map(|&i| i + 1));
            perm.push(m + 1);
            let candidate = base.relabel(&perm);
            let bits = encode_layout(&candidate);
            if best.as_ref().is_none_or(|(b, _)| bits < *b) {
                best = Some((bits, candidate));
            }
        }
        best.map(|(_, c)| c).unwrap_or(base)
    }

    /// New cell whose node `i` is this cell's node `keep[i]`.
    fn relabel(&self, keep: &[usize]) -> CellSpec {
        let adjacency = keep
            .iter()
            .map(|&u| keep.iter().map(|&v| self.adjacency[u][v]).collect())
            .collect();
        let ops = keep[1..keep.len() - 1]
            .iter()
            .map(|&v| self.ops[v - 1])
            .collect();
        CellSpec { adjacency, ops }
    }

    pub fn to_json(&self) -> CellJson {
        CellJson {
            adjacency: self
                .adjacency
                .iter()
                .map(|r| r.iter().map(|&e| e as u8).collect())
                .collect(),
            ops: self.ops.iter().map(|o| o.name().to_string()).collect(),
        }
    }

    pub fn from_json(json: &CellJson) -> Result<Self> {
        let n = json.adjacency.len();
        let mut adjacency = Vec::with_capacity(n);
        for row in &json.adjacency {
            let mut r = Vec::with_capacity(row.len());
            for &e in row {
                match e {
                    0 => r.push(false),
                    1 => r.push(true),
                    other => {
                        return Err(Error::InvalidCell(format!(
                            "adjacency entries must be 0 or 1, found {other}"
                        )))
                    }
                }
            }
            adjacency.push(r);
        }
        let mut names: &[String] = &json.ops;
        if n >= 2
            && names.len() == n
            && names[0].eq_ignore_ascii_case("input")
            && names[n - 1].eq_ignore_ascii_case("output")
        {
            names = &names[1..n - 1];
        }
        let ops = names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<_>>>()?;
        CellSpec::new(adjacency, ops)
    }
}

/// Textual cell form: `{"adjacency": [[0/1,...],...], "ops": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellJson {
    pub adjacency: Vec<Vec<u8>>,
    pub ops: Vec<String>,
}

/// All orderings of the `m` intermediates (0-based) compatible with the
/// cell's edges.
fn topological_orders(cell: &CellSpec, m: usize) -> Vec<Vec<usize>> {
    fn extend(
        cell: &CellSpec,
        m: usize,
        placed: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        if placed.len() == m {
            out.push(placed.clone());
            return;
        }
        for i in 0..m {
            if used[i] {
                continue;
            }
            let ready = (0..m).all(|j| used[j] || !cell.adjacency[j + 1][i + 1]);
            if ready {
                used[i] = true;
                placed.push(i);
                extend(cell, m, placed, used, out);
                placed.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(cell, m, &mut Vec::with_capacity(m), &mut vec![false; m], &mut out);
    out
}

fn expanded_index(cell: &CellSpec, node: usize) -> usize {
    let n = cell.node_count();
    if node == 0 {
        IN
    } else if node == n - 1 {
        OUT
    } else {
        1 + OPERATOR_COUNT * (node - 1) + cell.ops[node - 1].index()
    }
}

/// Encoding of the cell exactly as laid out (no canonicalization).
fn encode_layout(cell: &CellSpec) -> Genotype {
    let mut g = Genotype::zeros(GENOTYPE_BITS);
    let n = cell.node_count();
    for u in 0..n {
        for v in u + 1..n {
            if cell.adjacency[u][v] {
                let row = expanded_index(cell, u);
                let col = expanded_index(cell, v);
                g.set(row * EXPANDED_NODES + col, true);
            }
        }
    }
    g
}

/// Encodes the canonical form of `cell` as a 289-bit genotype. Each edge
/// becomes one set bit, so the popcount equals the edge count.
pub fn encode_cell(cell: &CellSpec) -> Genotype {
    encode_layout(&cell.canonical())
}

/// Inverse of [`encode_cell`]. Only canonical encodings decode; every other
/// bit pattern is rejected with the first violated rule.
pub fn decode_genotype(g: &Genotype) -> Result<CellSpec> {
    if g.len() != GENOTYPE_BITS {
        return Err(Error::LengthMismatch {
            left: g.len(),
            right: GENOTYPE_BITS,
        });
    }
    let edge = |u: usize, v: usize| g.get(u * EXPANDED_NODES + v);

    // Operator copy used by each slot, if any.
    let mut slot_op: [Option<usize>; SLOTS] = [None; SLOTS];
    for (s, chosen) in slot_op.iter_mut().enumerate() {
        for o in 0..OPERATOR_COUNT {
            let x = 1 + OPERATOR_COUNT * s + o;
            let touched = (0..EXPANDED_NODES).any(|y| edge(x, y) || edge(y, x));
            if touched {
                if chosen.is_some() {
                    return Err(Error::Decode(format!(
                        "ambiguous operator in slot {}",
                        s + 1
                    )));
                }
                *chosen = Some(o);
            }
        }
    }
    for x in 0..EXPANDED_NODES {
        if edge(x, x) {
            return Err(Error::Decode(format!("self-loop on expanded node {x}")));
        }
        if edge(x, IN) {
            return Err(Error::Decode(format!("edge into IN from node {x}")));
        }
        if edge(OUT, x) {
            return Err(Error::Decode(format!("edge out of OUT to node {x}")));
        }
    }
    let edges = g.count_ones();
    if edges > MAX_EDGES {
        return Err(Error::Decode(format!(
            "edge count {edges} exceeds budget {MAX_EDGES}"
        )));
    }

    let mut nodes = vec![IN];
    let mut ops = Vec::new();
    for (s, op) in slot_op.iter().enumerate() {
        if let Some(o) = *op {
            nodes.push(1 + OPERATOR_COUNT * s + o);
            ops.push(OperatorLabel::from_index(o).expect("operator index < 3"));
        }
    }
    nodes.push(OUT);
    let n = nodes.len();
    let mut adjacency = vec![vec![false; n]; n];
    for (a, &x) in nodes.iter().enumerate() {
        for (b, &y) in nodes.iter().enumerate() {
            if edge(x, y) {
                if b <= a {
                    return Err(Error::Decode(format!(
                        "edge {x}->{y} runs against slot order (cyclic or invalid structure)"
                    )));
                }
                adjacency[a][b] = true;
            }
        }
    }
    let cell = CellSpec::new(adjacency, ops).map_err(|e| match e {
        Error::InvalidCell(m) => Error::Decode(m),
        other => other,
    })?;
    if encode_layout(&cell) != *g || cell.canonical() != cell {
        return Err(Error::Decode(
            "slot layout is not the canonical one for this cell".into(),
        ));
    }
    Ok(cell)
}
