//! Demand vectors, splitting strategies and the per-node load they induce.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ratio, JsonNumber, Rational};
use crate::storage::{FileIndex, NodeId, RepairGroupTable};

/// Per-file request rates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandVector(Vec<Rational>);

impl DemandVector {
    pub fn new(lambda: Vec<Rational>) -> Result<Self> {
        if let Some(bad) = lambda.iter().find(|x| x.is_negative()) {
            return Err(Error::InvalidParameter(format!("negative demand {bad}")));
        }
        Ok(Self(lambda))
    }

    pub fn zeros(files: usize) -> Self {
        Self(vec![Rational::zero(); files])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, file: FileIndex) -> &Rational {
        &self.0[file]
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Rational> {
        self.0
    }

    /// Demand with the last file dropped.
    pub fn hat(&self) -> &[Rational] {
        &self.0[..self.0.len().saturating_sub(1)]
    }

    /// `hat x {last}`.
    pub fn with_last(hat: &[Rational], last: Rational) -> Result<Self> {
        let mut values = hat.to_vec();
        values.push(last);
        Self::new(values)
    }

    pub fn total(&self) -> Rational {
        self.0.iter().sum()
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        Self(self.0.iter().map(|x| x * factor).collect())
    }
}

/// Fraction of each file's requests sent to each of its repair groups, in the
/// table's canonical group order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<JsonNumber>>", from = "Vec<Vec<JsonNumber>>")]
pub struct SplittingStrategy {
    pub alpha: Vec<Vec<Rational>>,
}

impl SplittingStrategy {
    pub fn new(alpha: Vec<Vec<Rational>>) -> Self {
        Self { alpha }
    }

    /// All-zero rows shaped like `table`.
    pub fn zeros(table: &RepairGroupTable) -> Self {
        Self { alpha: table.gammas().into_iter().map(|g| vec![Rational::zero(); g]).collect() }
    }

    /// Equal split over every group of every file.
    pub fn uniform(table: &RepairGroupTable) -> Self {
        Self { alpha: table.gammas().into_iter().map(|g| vec![if g == 0 { Rational::zero() } else { ratio(1, g as i64) }; g]).collect() }
    }

    fn check_shape(&self, table: &RepairGroupTable) -> Result<()> {
        if self.alpha.len() != table.files() {
            return Err(Error::Dimension(format!("strategy has {} rows for {} files", self.alpha.len(), table.files())));
        }
        for (file, row) in self.alpha.iter().enumerate() {
            if row.len() != table.gamma(file) {
                return Err(Error::Dimension(format!(
                    "strategy row {} has {} entries for {} groups",
                    file + 1,
                    row.len(),
                    table.gamma(file)
                )));
            }
        }
        Ok(())
    }

    /// Nonnegative row summing to one (within `eps`).
    pub fn row_is_normalized(&self, file: FileIndex, eps: &Rational) -> bool {
        let row = &self.alpha[file];
        row.iter().all(|a| !a.is_negative()) && (row.iter().sum::<Rational>() - Rational::one()).abs() <= *eps
    }
}

impl From<SplittingStrategy> for Vec<Vec<JsonNumber>> {
    fn from(s: SplittingStrategy) -> Self {
        s.alpha.into_iter().map(|row| row.into_iter().map(JsonNumber).collect()).collect()
    }
}

impl From<Vec<Vec<JsonNumber>>> for SplittingStrategy {
    fn from(rows: Vec<Vec<JsonNumber>>) -> Self {
        Self::new(rows.into_iter().map(|row| row.into_iter().map(|n| n.0).collect()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeLoadVector(pub Vec<Rational>);

impl NodeLoadVector {
    pub fn get(&self, node: NodeId) -> &Rational {
        &self.0[node.0]
    }

    pub fn max(&self) -> Rational {
        self.0.iter().max().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.0.iter().sum()
    }

    /// Nodes whose load is within `eps` of `mu`.
    pub fn binding(&self, mu: &Rational, eps: &Rational) -> Vec<NodeId> {
        self.0.iter().enumerate().filter(|(_, load)| (*load - mu).abs() <= *eps).map(|(j, _)| NodeId(j)).collect()
    }
}

/// Tolerances for strategy normalization and node capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tolerances {
    pub norm: Rational,
    pub feas: Rational,
}

impl Tolerances {
    pub fn exact() -> Self {
        Self { norm: Rational::zero(), feas: Rational::zero() }
    }
}

impl Default for Tolerances {
    /// 1e-12 for row sums, 1e-9 for node capacity.
    fn default() -> Self {
        Self { norm: ratio(1, 1_000_000_000_000), feas: ratio(1, 1_000_000_000) }
    }
}

/// Request rate arriving at every node: for each node the sum over files and
/// groups containing it of `alpha * lambda`.
pub fn node_loads(table: &RepairGroupTable, strategy: &SplittingStrategy, demand: &DemandVector) -> Result<NodeLoadVector> {
    strategy.check_shape(table)?;
    if demand.len() != table.files() {
        return Err(Error::Dimension(format!("demand has {} entries for {} files", demand.len(), table.files())));
    }
    let mut load = vec![Rational::zero(); table.node_count()];
    for (file, row) in strategy.alpha.iter().enumerate() {
        let lambda = demand.get(file);
        if lambda.is_zero() {
            continue;
        }
        for (group, alpha) in table.groups(file).iter().zip(row) {
            if alpha.is_zero() {
                continue;
            }
            let rate = alpha * lambda;
            for node in &group.members {
                load[node.0] += &rate;
            }
        }
    }
    Ok(NodeLoadVector(load))
}

/// Whether `strategy` is a valid splitting strategy for `demand` that keeps
/// every node at or below `mu`. Rows of files without demand are ignored.
pub fn is_feasible_with_strategy(
    table: &RepairGroupTable,
    strategy: &SplittingStrategy,
    demand: &DemandVector,
    mu: &Rational,
    tol: &Tolerances,
) -> Result<bool> {
    let loads = node_loads(table, strategy, demand)?;
    let normalized = (0..table.files()).filter(|&k| demand.get(k).is_positive()).all(|k| strategy.row_is_normalized(k, &tol.norm));
    let limit = mu + &tol.feas;
    Ok(normalized && loads.0.iter().all(|load| *load <= limit))
}
