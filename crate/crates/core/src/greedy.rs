//! Greedy maximization of the last file's demand.
//!
//! Step 1 serves each fixed file from its own systematic nodes, filling
//! `floor(lambda / mu)` nodes completely and spreading the remainder evenly
//! over the rest. Step 2 repeatedly routes traffic through mixed groups made
//! of one systematic node from every file that still has spare capacity plus
//! `K - K'` coded nodes. Each round is limited by the scarcest participating
//! file (`N_m mu_m`) or by the coded nodes (`mu_C C / (K - K')`). The
//! traffic goes to leftover demand first and the remainder is credited to the
//! last file. The last file's own systematic nodes are added at the end.

use std::fmt::Write as _;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{binomial, floor_count, ratio, JsonNumber, Rational};
use crate::routing::{DemandVector, SplittingStrategy};
use crate::storage::{FileIndex, NodeId, NodeKind, RepairGroupTable, StorageSystem};

fn count(n: usize) -> Rational {
    ratio(n as i64, 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Absorb,
    Waterfill,
    Tail,
}

/// Traffic of one file spread evenly over every repair group of one shape:
/// one node out of each listed systematic set, plus `coded` of the coded
/// nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub phase: Phase,
    pub file: FileIndex,
    pub systematic: Vec<(FileIndex, Vec<NodeId>)>,
    pub coded: usize,
    pub groups: u64,
    pub rate: Rational,
}

impl TraceRecord {
    fn new(
        phase: Phase,
        file: FileIndex,
        systematic: Vec<(FileIndex, Vec<NodeId>)>,
        coded: usize,
        coded_avail: usize,
        rate: Rational,
    ) -> Self {
        let sets: u64 = systematic.iter().map(|(_, nodes)| nodes.len() as u64).product();
        let groups = sets * binomial(coded_avail, coded).to_u64().unwrap_or(u64::MAX);
        Self { phase, file, systematic, coded, groups, rate }
    }

    pub fn rate_per_group(&self) -> Rational {
        if self.groups == 0 {
            Rational::zero()
        } else {
            &self.rate / ratio(self.groups as i64, 1)
        }
    }

    fn matches(&self, system: &StorageSystem, members: &[NodeId]) -> bool {
        let coded = members.iter().filter(|n| system.kind(**n) == NodeKind::Coded).count();
        coded == self.coded
            && members.len() == coded + self.systematic.len()
            && self.systematic.iter().all(|(_, nodes)| members.iter().filter(|n| nodes.contains(n)).count() == 1)
    }
}

#[derive(Serialize)]
struct RecordLine {
    phase: Phase,
    file: usize,
    systematic: Vec<(usize, Vec<usize>)>,
    coded: usize,
    groups: u64,
    rate: JsonNumber,
    rate_per_group: JsonNumber,
}

/// Every routing decision the greedy made, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GreedyTrace {
    pub records: Vec<TraceRecord>,
}

impl GreedyTrace {
    /// One JSON object per line; files and nodes are 1-based.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            let line = RecordLine {
                phase: record.phase,
                file: record.file + 1,
                systematic: record.systematic.iter().map(|(f, nodes)| (f + 1, nodes.iter().map(|n| n.0 + 1).collect())).collect(),
                coded: record.coded,
                groups: record.groups,
                rate: JsonNumber(record.rate.clone()),
                rate_per_group: JsonNumber(record.rate_per_group()),
            };
            let text = serde_json::to_string(&line).expect("trace record serializes");
            let _ = writeln!(out, "{text}");
        }
        out
    }

    /// Splitting strategy that realizes the trace for `demand`.
    pub fn to_strategy(&self, system: &StorageSystem, table: &RepairGroupTable, demand: &DemandVector) -> Result<SplittingStrategy> {
        if demand.len() != table.files() {
            return Err(Error::Dimension(format!("demand has {} entries for {} files", demand.len(), table.files())));
        }
        let mut strategy = SplittingStrategy::zeros(table);
        for record in &self.records {
            let lambda = demand.get(record.file);
            if record.rate.is_zero() || lambda.is_zero() {
                continue;
            }
            let share = record.rate_per_group() / lambda;
            let mut hits = 0u64;
            for (g, group) in table.groups(record.file).iter().enumerate() {
                if record.matches(system, &group.members) {
                    strategy.alpha[record.file][g] += &share;
                    hits += 1;
                }
            }
            if hits != record.groups {
                return Err(Error::Solver(format!(
                    "trace record for file {} expects {} groups, table has {hits}",
                    record.file + 1,
                    record.groups
                )));
            }
        }
        Ok(strategy)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyState {
    /// Demand of files `1..K-1` not yet served.
    pub residual: Vec<Rational>,
    /// Systematic nodes with spare capacity, per file.
    pub n_avail: Vec<usize>,
    /// Spare rate of each available systematic node, per file.
    pub mu_sys: Vec<Rational>,
    /// Spare rate of each coded node.
    pub mu_coded: Rational,
    pub coded_avail: usize,
    /// Files among `1..K-1` with spare systematic capacity.
    pub k_prime: usize,
    /// Demand credited to the last file so far.
    pub lambda_k_acc: Rational,
    pub trace: GreedyTrace,
}

impl GreedyState {
    fn last(&self) -> FileIndex {
        self.n_avail.len() - 1
    }

    /// Available systematic nodes of `file`: the last `n_avail` of its block.
    fn avail_nodes(&self, system: &StorageSystem, file: FileIndex) -> Vec<NodeId> {
        let nodes = system.systematic_nodes(file);
        nodes[nodes.len() - self.n_avail[file]..].to_vec()
    }

    fn product(&self, file: FileIndex) -> Rational {
        &self.mu_sys[file] * count(self.n_avail[file])
    }

    fn participating(&self) -> Vec<FileIndex> {
        (0..self.last()).filter(|&i| self.n_avail[i] > 0).collect()
    }

    /// Whether another water-filling round is possible.
    pub fn can_continue(&self) -> bool {
        let k = self.n_avail.len();
        self.coded_avail > 0 && self.coded_avail >= k - self.k_prime && self.mu_coded.is_positive()
    }

    /// One water-filling round. Returns `false` when no round was possible.
    pub fn waterfill_round(&mut self, system: &StorageSystem) -> bool {
        if !self.can_continue() {
            return false;
        }
        let k = self.n_avail.len();
        let files = self.participating();
        let coded = k - files.len();
        let coded_limit = &self.mu_coded * count(self.coded_avail) / count(coded);
        let sys_limit = files.iter().map(|&i| self.product(i)).min();
        let l = match sys_limit {
            Some(s) if s < coded_limit => s,
            _ => coded_limit,
        };

        let shape: Vec<(FileIndex, Vec<NodeId>)> = files.iter().map(|&i| (i, self.avail_nodes(system, i))).collect();
        let mut left = l.clone();
        for j in 0..self.last() {
            if left.is_zero() {
                break;
            }
            if self.residual[j].is_zero() {
                continue;
            }
            let served = if self.residual[j] < left { self.residual[j].clone() } else { left.clone() };
            self.residual[j] -= &served;
            left -= &served;
            self.trace.records.push(TraceRecord::new(Phase::Waterfill, j, shape.clone(), coded, self.coded_avail, served));
        }
        if left.is_positive() {
            self.lambda_k_acc += &left;
            self.trace.records.push(TraceRecord::new(Phase::Waterfill, self.last(), shape, coded, self.coded_avail, left));
        }

        for &i in &files {
            self.mu_sys[i] -= &l / count(self.n_avail[i]);
            if !self.mu_sys[i].is_positive() {
                self.mu_sys[i] = Rational::zero();
                self.n_avail[i] = 0;
                self.k_prime -= 1;
            }
        }
        self.mu_coded -= &l * count(coded) / count(self.coded_avail);
        if !self.mu_coded.is_positive() {
            self.mu_coded = Rational::zero();
            self.coded_avail = 0;
        }
        true
    }
}

fn check_demand(system: &StorageSystem, demand: &[Rational]) -> Result<()> {
    if demand.len() + 1 != system.files() {
        return Err(Error::Dimension(format!("demand has {} entries for {} files", demand.len(), system.files())));
    }
    if demand.iter().any(Signed::is_negative) {
        return Err(Error::InvalidParameter("negative demand".into()));
    }
    Ok(())
}

/// Serves every fixed file from its own systematic nodes.
pub fn step1_absorb(system: &StorageSystem, demand: &[Rational]) -> Result<GreedyState> {
    check_demand(system, demand)?;
    let k = system.files();
    let mu = system.mu();
    let mut state = GreedyState {
        residual: Vec::with_capacity(k - 1),
        n_avail: system.systematic_counts(),
        mu_sys: vec![mu.clone(); k],
        mu_coded: mu.clone(),
        coded_avail: system.coded_count(),
        k_prime: 0,
        lambda_k_acc: Rational::zero(),
        trace: GreedyTrace::default(),
    };
    for (i, lambda) in demand.iter().enumerate() {
        let n = system.systematic_count(i);
        let nodes = system.systematic_nodes(i);
        if n == 0 {
            state.mu_sys[i] = Rational::zero();
            state.residual.push(lambda.clone());
            continue;
        }
        let capacity = mu * count(n);
        if *lambda > capacity {
            state.trace.records.push(TraceRecord::new(Phase::Absorb, i, vec![(i, nodes)], 0, 0, capacity.clone()));
            state.residual.push(lambda - capacity);
            state.n_avail[i] = 0;
            state.mu_sys[i] = Rational::zero();
            continue;
        }
        let full = floor_count(&(lambda / mu)).min(n);
        let rest = lambda - mu * count(full);
        if full > 0 {
            let rate = mu * count(full);
            state.trace.records.push(TraceRecord::new(Phase::Absorb, i, vec![(i, nodes[..full].to_vec())], 0, 0, rate));
        }
        state.n_avail[i] = n - full;
        state.residual.push(Rational::zero());
        if state.n_avail[i] == 0 {
            state.mu_sys[i] = Rational::zero();
            continue;
        }
        state.mu_sys[i] = mu - &rest / count(state.n_avail[i]);
        if rest.is_positive() {
            state.trace.records.push(TraceRecord::new(Phase::Absorb, i, vec![(i, nodes[full..].to_vec())], 0, 0, rest));
        }
    }
    state.k_prime = state.participating().len();
    Ok(state)
}

/// Water-fills mixed groups until coded capacity or participating files run
/// out, then adds the last file's own systematic nodes.
pub fn step2_waterfill(system: &StorageSystem, mut state: GreedyState) -> GreedyState {
    while state.waterfill_round(system) {}
    let last = state.last();
    let n = system.systematic_count(last);
    if n > 0 {
        let rate = &state.mu_sys[last] * count(n);
        state.lambda_k_acc += &rate;
        state.trace.records.push(TraceRecord::new(Phase::Tail, last, vec![(last, system.systematic_nodes(last))], 0, 0, rate));
    }
    state
}

/// Greedy lower bound on `L(lambda_hat)` with the trace that achieves it.
pub fn maximize_lambda_k_greedy(system: &StorageSystem, demand: &[Rational]) -> Result<(Rational, GreedyTrace)> {
    check_demand(system, demand)?;
    let k = system.files();
    let mu = system.mu();
    let limit = mu * count((0..k - 1).map(|i| system.systematic_count(i)).sum()) + count(system.coded_count()) / count(k) * mu;
    let total: Rational = demand.iter().sum();
    if total > limit {
        return Err(Error::UnsupportedParameters(format!("greedy needs total fixed demand at most {limit}, got {total}")));
    }
    let state = step2_waterfill(system, step1_absorb(system, demand)?);
    if state.residual.iter().any(Signed::is_positive) {
        return Err(Error::NotInRegion);
    }
    Ok((state.lambda_k_acc, state.trace))
}
