//! Sparse parity-check matrices and progressive-edge-growth construction.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ReconciliationError;

/// Sparse binary parity-check matrix stored as row and column adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityCheckMatrix {
    n: usize,
    m: usize,
    check_adj: Vec<Vec<u32>>,
    var_adj: Vec<Vec<u32>>,
    seed: u64,
}

impl ParityCheckMatrix {
    /// Builds a matrix from row adjacency. Duplicate entries are rejected.
    pub fn from_rows(
        n: usize,
        rows: Vec<Vec<u32>>,
        seed: u64,
    ) -> Result<Self, ReconciliationError> {
        let m = rows.len();
        let mut var_adj = vec![Vec::new(); n];
        for (c, row) in rows.iter().enumerate() {
            let mut seen = HashSet::with_capacity(row.len());
            for &v in row {
                if v as usize >= n {
                    return Err(ReconciliationError::InvalidMatrix(format!(
                        "column index {v} out of range for n = {n}"
                    )));
                }
                if !seen.insert(v) {
                    return Err(ReconciliationError::InvalidMatrix(format!(
                        "duplicate edge ({c}, {v})"
                    )));
                }
                var_adj[v as usize].push(c as u32);
            }
        }
        Ok(Self {
            n,
            m,
            check_adj: rows,
            var_adj,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Design rate `1 - m/n`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.m as f64 / self.n as f64
    }

    pub fn check_neighbors(&self, check: usize) -> &[u32] {
        &self.check_adj[check]
    }

    pub fn var_neighbors(&self, var: usize) -> &[u32] {
        &self.var_adj[var]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.check_adj
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.var_adj
    }

    pub fn num_edges(&self) -> usize {
        self.check_adj.iter().map(Vec::len).sum()
    }

    /// Column `var` of H as a dense 0/1 vector of length `m`.
    pub fn column(&self, var: usize) -> Vec<u8> {
        let mut col = vec![0u8; self.m];
        for &c in &self.var_adj[var] {
            col[c as usize] = 1;
        }
        col
    }

    /// True when no two checks share more than one variable (girth >= 6).
    pub fn is_four_cycle_free(&self) -> bool {
        let mut pairs = HashSet::new();
        for checks in &self.var_adj {
            for (i, &a) in checks.iter().enumerate() {
                for &b in &checks[i + 1..] {
                    let key = if a < b { (a, b) } else { (b, a) };
                    if !pairs.insert(key) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Number of variable nodes of each degree, indexed by degree.
    pub fn variable_degree_histogram(&self) -> Vec<usize> {
        let max = self.var_adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut hist = vec![0; max + 1];
        for adj in &self.var_adj {
            hist[adj.len()] += 1;
        }
        hist
    }
}

/// Variable-node degree distribution in the node perspective.
///
/// Check degrees are not specified: the construction always attaches a new
/// edge to the lowest-degree admissible check, which keeps check degrees
/// within one of each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfile {
    /// `(degree, fraction of variable nodes)` pairs; fractions sum to one.
    pub variable: Vec<(usize, f64)>,
}

impl DegreeProfile {
    /// Profile used for design rates of 0.4 and above.
    ///
    /// Node fractions 0.46 / 0.36 / 0.18 on degrees 2 / 3 / 8, derived from
    /// a standard rate-1/2 edge distribution with the degree-2 share capped
    /// below the check count.
    pub fn moderate_rate() -> Self {
        Self {
            variable: vec![(2, 0.46), (3, 0.36), (8, 0.18)],
        }
    }

    /// Profile used for design rates below 0.4: node fractions
    /// 0.62 / 0.25 / 0.13 on degrees 2 / 3 / 12, tuned empirically on the
    /// binary symmetric channel near crossover 0.17.
    pub fn low_rate() -> Self {
        Self {
            variable: vec![(2, 0.62), (3, 0.25), (12, 0.13)],
        }
    }

    /// Default profile for a design rate.
    pub fn for_rate(rate: f64) -> Self {
        if rate >= 0.4 {
            Self::moderate_rate()
        } else {
            Self::low_rate()
        }
    }

    /// Integer node counts per degree for `n` variables, largest remainder
    /// rounding. Degree-2 nodes are capped at `m - 1` so that they cannot
    /// close a cycle among themselves; the excess moves to degree 3.
    pub fn node_counts(
        &self,
        n: usize,
        m: usize,
    ) -> Result<Vec<(usize, usize)>, ReconciliationError> {
        let total: f64 = self.variable.iter().map(|(_, f)| f).sum();
        if self.variable.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(ReconciliationError::InfeasibleProfile(
                "variable fractions must sum to one".into(),
            ));
        }
        let mut counts: Vec<(usize, usize, f64)> = self
            .variable
            .iter()
            .map(|&(d, f)| {
                let exact = f * n as f64;
                (d, exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let assigned: usize = counts.iter().map(|c| c.1).sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| counts[b].2.total_cmp(&counts[a].2).then(a.cmp(&b)));
        for &i in order.iter().take(n - assigned) {
            counts[i].1 += 1;
        }
        let mut out: Vec<(usize, usize)> = counts.into_iter().map(|(d, c, _)| (d, c)).collect();
        if let Some(pos) = out.iter().position(|&(d, _)| d == 2) {
            let cap = m.saturating_sub(1);
            if out[pos].1 > cap {
                let excess = out[pos].1 - cap;
                out[pos].1 = cap;
                match out.iter().position(|&(d, _)| d == 3) {
                    Some(p3) => out[p3].1 += excess,
                    None => out.push((3, excess)),
                }
            }
        }
        for &(d, c) in &out {
            if c > 0 && (d == 0 || d > m) {
                return Err(ReconciliationError::InfeasibleProfile(format!(
                    "variable degree {d} impossible with {m} checks"
                )));
            }
        }
        out.retain(|&(_, c)| c > 0);
        out.sort_unstable();
        Ok(out)
    }
}

/// Check count for block length `n` and design rate `rate`.
pub fn checks_for_rate(n: usize, rate: f64) -> usize {
    ((1.0 - rate) * n as f64).round() as usize
}

/// Builds an irregular code of length `n` and design rate `rate` with the
/// default profile for that rate. Deterministic in `seed`.
pub fn build_code(
    n: usize,
    rate: f64,
    seed: u64,
) -> Result<ParityCheckMatrix, ReconciliationError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(ReconciliationError::InfeasibleProfile(format!(
            "design rate {rate} outside (0, 1)"
        )));
    }
    if n < super::MIN_BLOCK_LEN {
        return Err(ReconciliationError::BlockTooShort(n));
    }
    let m = checks_for_rate(n, rate);
    build_code_with_checks(n, m, &DegreeProfile::for_rate(rate), seed)
}

/// Progressive edge growth with an explicit check count and profile.
pub fn build_code_with_checks(
    n: usize,
    m: usize,
    profile: &DegreeProfile,
    seed: u64,
) -> Result<ParityCheckMatrix, ReconciliationError> {
    if m == 0 || m >= n {
        return Err(ReconciliationError::InfeasibleProfile(format!(
            "need 0 < m < n, got m = {m}, n = {n}"
        )));
    }
    let counts = profile.node_counts(n, m)?;
    let mut degrees = Vec::with_capacity(n);
    for &(d, c) in &counts {
        degrees.extend(std::iter::repeat_n(d, c));
    }
    let mut peg = Peg::new(n, m, seed);
    for (v, &d) in degrees.iter().enumerate() {
        for k in 0..d {
            let c = if k == 0 {
                peg.lowest_degree_unmarked(false)
            } else {
                peg.farthest_check(v)
            }
            .ok_or_else(|| {
                ReconciliationError::InfeasibleProfile(format!(
                    "no admissible check for variable {v} edge {k}"
                ))
            })?;
            peg.connect(v, c);
        }
    }
    let mut rows = peg.check_adj;
    for row in &mut rows {
        row.sort_unstable();
    }
    ParityCheckMatrix::from_rows(n, rows, seed)
}

/// Edge visits allowed per search before it stops and picks among the
/// checks not yet reached.
const BFS_WORK_BUDGET: usize = 1024;

struct Peg {
    m: usize,
    check_adj: Vec<Vec<u32>>,
    var_adj: Vec<Vec<u32>>,
    // checks grouped by current degree, with each check's index in its bucket
    buckets: Vec<Vec<u32>>,
    bucket_pos: Vec<usize>,
    degree: Vec<usize>,
    mark: Vec<u32>,
    epoch: u32,
    rng: ChaCha8Rng,
}

impl Peg {
    fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            m,
            check_adj: vec![Vec::new(); m],
            var_adj: vec![Vec::new(); n],
            buckets: vec![(0..m as u32).collect()],
            bucket_pos: (0..m).collect(),
            degree: vec![0; m],
            mark: vec![0; m],
            epoch: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn connect(&mut self, v: usize, c: usize) {
        self.check_adj[c].push(v as u32);
        self.var_adj[v].push(c as u32);
        let d = self.degree[c];
        let pos = self.bucket_pos[c];
        let bucket = &mut self.buckets[d];
        bucket.swap_remove(pos);
        if pos < bucket.len() {
            self.bucket_pos[bucket[pos] as usize] = pos;
        }
        if self.buckets.len() <= d + 1 {
            self.buckets.push(Vec::new());
        }
        self.bucket_pos[c] = self.buckets[d + 1].len();
        self.buckets[d + 1].push(c as u32);
        self.degree[c] = d + 1;
    }

    fn is_marked(&self, c: usize) -> bool {
        self.epoch > 0 && self.mark[c] == self.epoch
    }

    /// Lowest-degree check, random among ties; skips marked checks when
    /// `respect_marks`.
    fn lowest_degree_unmarked(&mut self, respect_marks: bool) -> Option<usize> {
        for b in 0..self.buckets.len() {
            let len = self.buckets[b].len();
            if len == 0 {
                continue;
            }
            let start = self.rng.gen_range(0..len);
            for k in 0..len {
                let c = self.buckets[b][(start + k) % len] as usize;
                if !respect_marks || !self.is_marked(c) {
                    return Some(c);
                }
            }
        }
        None
    }

    fn farthest_check(&mut self, v: usize) -> Option<usize> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.iter_mut().for_each(|x| *x = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let mut frontier: Vec<u32> = self.var_adj[v].clone();
        for &c in &frontier {
            self.mark[c as usize] = epoch;
        }
        let mut reached = frontier.len();
        let mut work = 0usize;
        loop {
            let cost: usize = frontier
                .iter()
                .map(|&c| self.check_adj[c as usize].len() * 4)
                .sum();
            // The first level is always explored so that no 4-cycle is created.
            if work > 0 && work + cost > BFS_WORK_BUDGET {
                break;
            }
            work += cost.max(1);
            let mut next = Vec::new();
            for &c in &frontier {
                for &u in &self.check_adj[c as usize] {
                    for &c2 in &self.var_adj[u as usize] {
                        if self.mark[c2 as usize] != epoch {
                            self.mark[c2 as usize] = epoch;
                            next.push(c2);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            if reached + next.len() == self.m {
                // Everything is reachable: the newest level is the farthest.
                return self.pick_lowest(&next);
            }
            reached += next.len();
            frontier = next;
        }
        self.lowest_degree_unmarked(true)
    }

    fn pick_lowest(&mut self, candidates: &[u32]) -> Option<usize> {
        let min = candidates.iter().map(|&c| self.degree[c as usize]).min()?;
        let ties: Vec<u32> = candidates
            .iter()
            .copied()
            .filter(|&c| self.degree[c as usize] == min)
            .collect();
        Some(ties[self.rng.gen_range(0..ties.len())] as usize)
    }
}
