//! Binary linear codes as Tanner graphs.
//!
//! A [`TannerGraph`] stores the parity-check matrix H sparsely. Every edge
//! (a one in H) carries a global id in `0..E`; ids are assigned VN-major, so
//! the edges of variable node `v` form the contiguous range
//! [`TannerGraph::vn_edges`] ordered by check index. Check-node adjacency is
//! kept as a list of edge ids ordered by variable index. Per-edge vectors
//! (messages, weights) throughout the crate are indexed by these ids.

use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{check_len, Error, Result};

/// Largest code dimension for which codeword enumeration is allowed.
pub const MAX_ENUMERATION_DIMENSION: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    /// (vn, cn) per edge id.
    edges: Vec<(usize, usize)>,
    /// `vn_start[v]..vn_start[v + 1]` are the edge ids of VN `v`.
    vn_start: Vec<usize>,
    cn_start: Vec<usize>,
    cn_edge_ids: Vec<usize>,
}

impl TannerGraph {
    /// Builds a graph from, for every variable node, the list of check
    /// nodes it participates in.
    pub fn from_vn_checks(m: usize, vn_checks: &[Vec<usize>]) -> Result<Self> {
        let n = vn_checks.len();
        let mut edges = Vec::new();
        let mut vn_start = Vec::with_capacity(n + 1);
        vn_start.push(0);
        for (v, checks) in vn_checks.iter().enumerate() {
            let mut sorted = checks.clone();
            sorted.sort_unstable();
            for w in sorted.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate edge between VN {v} and CN {}",
                        w[0]
                    )));
                }
            }
            for &c in &sorted {
                if c >= m {
                    return Err(Error::InvalidParameter(format!(
                        "VN {v} references CN {c}, but m = {m}"
                    )));
                }
                edges.push((v, c));
            }
            vn_start.push(edges.len());
        }

        let mut per_cn: Vec<Vec<usize>> = vec![Vec::new(); m];
        // Edge ids grow with the VN index, so pushing in id order keeps each
        // check's list sorted by VN.
        for (e, &(_, c)) in edges.iter().enumerate() {
            per_cn[c].push(e);
        }
        let mut cn_start = Vec::with_capacity(m + 1);
        let mut cn_edge_ids = Vec::with_capacity(edges.len());
        cn_start.push(0);
        for list in per_cn {
            cn_edge_ids.extend(list);
            cn_start.push(cn_edge_ids.len());
        }

        Ok(Self {
            n,
            m,
            edges,
            vn_start,
            cn_start,
            cn_edge_ids,
        })
    }

    /// Builds a graph from a dense 0/1 parity-check matrix given row by row.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut vn_checks = vec![Vec::new(); n];
        for (c, row) in rows.iter().enumerate() {
            check_len("parity-check row", n, row.len())?;
            for (v, &bit) in row.iter().enumerate() {
                match bit {
                    0 => {}
                    1 => vn_checks[v].push(c),
                    value => return Err(Error::NonBinary { index: v, value }),
                }
            }
        }
        Self::from_vn_checks(m, &vn_checks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(vn, cn)` endpoints of edge `e`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge ids incident to variable node `v`, ascending by check index.
    pub fn vn_edges(&self, v: usize) -> Range<usize> {
        self.vn_start[v]..self.vn_start[v + 1]
    }

    /// Edge ids incident to check node `c`, ascending by variable index.
    pub fn cn_edges(&self, c: usize) -> &[usize] {
        &self.cn_edge_ids[self.cn_start[c]..self.cn_start[c + 1]]
    }

    pub fn vn_degree(&self, v: usize) -> usize {
        self.vn_start[v + 1] - self.vn_start[v]
    }

    pub fn cn_degree(&self, c: usize) -> usize {
        self.cn_start[c + 1] - self.cn_start[c]
    }

    pub fn max_vn_degree(&self) -> usize {
        (0..self.n).map(|v| self.vn_degree(v)).max().unwrap_or(0)
    }

    pub fn max_cn_degree(&self) -> usize {
        (0..self.m).map(|c| self.cn_degree(c)).max().unwrap_or(0)
    }

    pub fn avg_cn_degree(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            self.num_edges() as f64 / self.m as f64
        }
    }

    /// Check indices adjacent to VN `v`, ascending.
    pub fn vn_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.vn_edges(v).map(move |e| self.edges[e].1)
    }

    /// Variable indices adjacent to CN `c`, ascending.
    pub fn cn_neighbors(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.cn_edges(c).iter().map(move |&e| self.edges[e].0)
    }

    /// Histogram of variable-node degrees as `(degree, count)` pairs.
    pub fn vn_degree_profile(&self) -> Vec<(usize, usize)> {
        degree_profile((0..self.n).map(|v| self.vn_degree(v)))
    }

    pub fn cn_degree_profile(&self) -> Vec<(usize, usize)> {
        degree_profile((0..self.m).map(|c| self.cn_degree(c)))
    }

    /// Dense copy of H, `m` rows of length `n`.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut h = vec![vec![0u8; self.n]; self.m];
        for &(v, c) in &self.edges {
            h[c][v] = 1;
        }
        h
    }

    /// True iff `H · bitsᵀ = 0` over GF(2).
    pub fn syndrome_ok(&self, bits: &[u8]) -> Result<bool> {
        check_len("codeword", self.n, bits.len())?;
        Ok(self.syndrome_ok_unchecked(bits))
    }

    pub(crate) fn syndrome_ok_unchecked(&self, bits: &[u8]) -> bool {
        (0..self.m).all(|c| {
            self.cn_edges(c)
                .iter()
                .fold(0u8, |acc, &e| acc ^ (bits[self.edges[e].0] & 1))
                == 0
        })
    }

    /// Serializes to alist without zero padding.
    pub fn to_alist(&self) -> String {
        let mut out = String::new();
        // Degree-zero nodes get a lone padding entry so the line survives.
        let join = |it: &mut dyn Iterator<Item = usize>| {
            let s = it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            if s.is_empty() {
                "0".to_string()
            } else {
                s
            }
        };
        let _ = writeln!(out, "{} {}", self.n, self.m);
        let _ = writeln!(out, "{} {}", self.max_vn_degree(), self.max_cn_degree());
        let _ = writeln!(out, "{}", join(&mut (0..self.n).map(|v| self.vn_degree(v))));
        let _ = writeln!(out, "{}", join(&mut (0..self.m).map(|c| self.cn_degree(c))));
        for v in 0..self.n {
            let _ = writeln!(out, "{}", join(&mut self.vn_neighbors(v).map(|c| c + 1)));
        }
        for c in 0..self.m {
            let _ = writeln!(out, "{}", join(&mut self.cn_neighbors(c).map(|v| v + 1)));
        }
        out
    }
}

fn degree_profile(degrees: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut counts = std::collections::BTreeMap::new();
    for d in degrees {
        *counts.entry(d).or_insert(0usize) += 1;
    }
    counts.into_iter().collect()
}

/// Parses the alist sparse-matrix format (1-based indices, zero padding
/// entries ignored).
pub fn parse_alist(text: &str) -> Result<TannerGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut last_line = 0;

    let mut next_line = |what: &str| -> Result<(usize, Vec<usize>)> {
        let (line, content) = lines.next().ok_or_else(|| Error::Alist {
            line: last_line + 1,
            msg: format!("unexpected end of input, expected {what}"),
        })?;
        last_line = line;
        let values = content
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| Error::Alist {
                    line,
                    msg: format!("invalid integer {tok:?} in {what}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((line, values))
    };

    let (line, header) = next_line("header \"n m\"")?;
    let [n, m] = header[..] else {
        return Err(Error::Alist {
            line,
            msg: "header must contain exactly two integers \"n m\"".into(),
        });
    };
    let (line, maxes) = next_line("maximum degrees")?;
    let [max_vn, max_cn] = maxes[..] else {
        return Err(Error::Alist {
            line,
            msg: "expected two maximum degrees".into(),
        });
    };
    let (vn_line, vn_degrees) = next_line("VN degrees")?;
    if vn_degrees.len() != n {
        return Err(Error::Alist {
            line: vn_line,
            msg: format!("expected {n} VN degrees, found {}", vn_degrees.len()),
        });
    }
    let (cn_line, cn_degrees) = next_line("CN degrees")?;
    if cn_degrees.len() != m {
        return Err(Error::Alist {
            line: cn_line,
            msg: format!("expected {m} CN degrees, found {}", cn_degrees.len()),
        });
    }
    if let Some(&d) = vn_degrees.iter().find(|&&d| d > max_vn) {
        return Err(Error::Alist {
            line: vn_line,
            msg: format!("VN degree {d} exceeds declared maximum {max_vn}"),
        });
    }
    if let Some(&d) = cn_degrees.iter().find(|&&d| d > max_cn) {
        return Err(Error::Alist {
            line: cn_line,
            msg: format!("CN degree {d} exceeds declared maximum {max_cn}"),
        });
    }

    let mut vn_checks = Vec::with_capacity(n);
    for &deg in &vn_degrees {
        let (line, entries) = next_line("VN adjacency")?;
        let idx = nonzero_indices(line, &entries, m, deg, "CN")?;
        vn_checks.push(idx);
    }
    let mut cn_vns = Vec::with_capacity(m);
    for &deg in &cn_degrees {
        let (line, entries) = next_line("CN adjacency")?;
        cn_vns.push((line, nonzero_indices(line, &entries, n, deg, "VN")?));
    }

    // Cross-check the two blocks.
    let mut from_cn: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, (_, vns)) in cn_vns.iter().enumerate() {
        for &v in vns {
            from_cn[v].push(c);
        }
    }
    for (v, checks) in vn_checks.iter_mut().enumerate() {
        checks.sort_unstable();
        from_cn[v].sort_unstable();
        if *checks != from_cn[v] {
            // Report at the first CN line that disagrees with this VN.
            let line = cn_vns
                .iter()
                .enumerate()
                .find(|(c, (_, vns))| checks.contains(c) != vns.contains(&v))
                .map_or(last_line, |(_, (l, _))| *l);
            return Err(Error::Alist {
                line,
                msg: format!("VN block and CN block disagree on the neighbors of VN {}", v + 1),
            });
        }
    }

    TannerGraph::from_vn_checks(m, &vn_checks).map_err(|e| Error::Alist {
        line: vn_line,
        msg: e.to_string(),
    })
}

fn nonzero_indices(
    line: usize,
    entries: &[usize],
    bound: usize,
    declared: usize,
    kind: &str,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(declared);
    for &x in entries.iter().filter(|&&x| x != 0) {
        if x > bound {
            return Err(Error::Alist {
                line,
                msg: format!("{kind} index {x} out of range 1..={bound}"),
            });
        }
        if out.contains(&(x - 1)) {
            return Err(Error::Alist {
                line,
                msg: format!("duplicate {kind} index {x}"),
            });
        }
        out.push(x - 1);
    }
    if out.len() != declared {
        return Err(Error::Alist {
            line,
            msg: format!("declared degree {declared}, found {} entries", out.len()),
        });
    }
    Ok(out)
}

/// Parity-check matrix of the CCSDS (128,64) LDPC code: a 4×8 array of
/// 16×16 circulants, where `Φ^k` has ones at `(i, (i + k) mod 16)`.
pub fn ccsds_128_64() -> TannerGraph {
    const M: usize = 16;
    // Each block lists the shifts of the circulants summed into it.
    let blocks: [[&[usize]; 8]; 4] = [
        [&[0, 7], &[2], &[14], &[6], &[], &[0], &[13], &[0]],
        [&[6], &[0, 15], &[0], &[1], &[0], &[], &[0], &[7]],
        [&[4], &[1], &[0, 15], &[14], &[11], &[0], &[], &[3]],
        [&[0], &[1], &[9], &[0, 13], &[14], &[1], &[0], &[]],
    ];
    let mut h = vec![vec![0u8; 8 * M]; 4 * M];
    for (br, row) in blocks.iter().enumerate() {
        for (bc, shifts) in row.iter().enumerate() {
            for &s in shifts.iter() {
                for i in 0..M {
                    h[br * M + i][bc * M + (i + s) % M] ^= 1;
                }
            }
        }
    }
    TannerGraph::from_dense(&h).expect("static CCSDS matrix is well formed")
}

fn pack(bits: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

fn unpack(words: &[u64], n: usize) -> Vec<u8> {
    (0..n).map(|i| ((words[i / 64] >> (i % 64)) & 1) as u8).collect()
}

fn get_bit(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

/// Generator matrix of a binary linear code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    n: usize,
    rows: Vec<Vec<u8>>,
    /// Column order in which `rows` read as `[I_k | P]`.
    column_permutation: Vec<usize>,
    packed: Vec<Vec<u64>>,
}

impl GeneratorMatrix {
    /// Wraps explicit generator rows. The permutation defaults to identity.
    pub fn new(n: usize, rows: Vec<Vec<u8>>) -> Result<Self> {
        for row in &rows {
            check_len("generator row", n, row.len())?;
            if let Some((index, &value)) = row.iter().enumerate().find(|(_, &b)| b > 1) {
                return Err(Error::NonBinary { index, value });
            }
        }
        let packed = rows.iter().map(|r| pack(r)).collect();
        Ok(Self {
            n,
            rows,
            column_permutation: (0..n).collect(),
            packed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// `k / n`.
    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn column_permutation(&self) -> &[usize] {
        &self.column_permutation
    }

    /// Information positions: message bit `i` appears verbatim at
    /// `column_permutation[i]` of the codeword.
    pub fn systematic_positions(&self) -> &[usize] {
        &self.column_permutation[..self.k()]
    }

    /// Computes `msg · G` over GF(2).
    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        check_len("message", self.k(), msg.len())?;
        let mut acc = vec![0u64; self.n.div_ceil(64)];
        for (row, &bit) in self.packed.iter().zip(msg) {
            if bit & 1 == 1 {
                acc.iter_mut().zip(row).for_each(|(a, r)| *a ^= r);
            }
        }
        Ok(unpack(&acc, self.n))
    }

    /// All `2^k` codewords, in Gray-code order of the message.
    pub fn enumerate_codewords(&self) -> Result<Vec<Vec<u8>>> {
        let k = self.k();
        if k > MAX_ENUMERATION_DIMENSION {
            return Err(Error::DimensionTooLarge {
                k,
                limit: MAX_ENUMERATION_DIMENSION,
            });
        }
        let mut acc = vec![0u64; self.n.div_ceil(64)];
        let mut out = Vec::with_capacity(1 << k);
        out.push(unpack(&acc, self.n));
        for i in 1u64..(1u64 << k) {
            let flip = i.trailing_zeros() as usize;
            acc.iter_mut()
                .zip(&self.packed[flip])
                .for_each(|(a, r)| *a ^= r);
            out.push(unpack(&acc, self.n));
        }
        Ok(out)
    }
}

/// Derives a generator matrix from H by Gaussian elimination over GF(2).
pub fn derive_generator(graph: &TannerGraph) -> Result<GeneratorMatrix> {
    let n = graph.n();
    let mut rows: Vec<Vec<u64>> = graph.to_dense().iter().map(|r| pack(r)).collect();

    // Reduced row echelon form with column pivoting.
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let Some(found) = (rank..rows.len()).find(|&r| get_bit(&rows[r], col)) else {
            continue;
        };
        rows.swap(rank, found);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && get_bit(row, col) {
                row.iter_mut().zip(&pivot_row).for_each(|(a, p)| *a ^= p);
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }

    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    if free.is_empty() {
        return Err(Error::ZeroDimension);
    }

    // Each free column f spans one codeword: x_f = 1, x_{p_i} = R[i][f].
    let gen_rows: Vec<Vec<u8>> = free
        .iter()
        .map(|&f| {
            let mut word = vec![0u8; n];
            word[f] = 1;
            for (i, &p) in pivots.iter().enumerate() {
                if get_bit(&rows[i], f) {
                    word[p] = 1;
                }
            }
            word
        })
        .collect();

    let mut gen = GeneratorMatrix::new(n, gen_rows)?;
    gen.column_permutation = free.iter().chain(&pivots).copied().collect();
    Ok(gen)
}
