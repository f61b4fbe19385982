//! Region membership and the boundary value `L` by linear programming.
//!
//! The program works in rate space: one variable per (file, repair group)
//! holding the request rate routed to that group. Each file's rates sum to
//! its demand and every node's total stays within `mu`. Splitting fractions
//! are recovered as `rate / demand`.

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::numeric::{from_f64, ratio, Rational};
use crate::routing::{node_loads, DemandVector, SplittingStrategy, Tolerances};
use crate::simplex::{self, IncidenceLp, Outcome};
use crate::storage::{FileIndex, NodeId, RepairGroupTable, StorageSystem};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum LpMode {
    #[default]
    ExactRational,
    Float {
        tolerance: f64,
    },
}

impl LpMode {
    pub const DEFAULT_FLOAT_TOLERANCE: f64 = 1e-9;

    pub fn float() -> Self {
        LpMode::Float { tolerance: Self::DEFAULT_FLOAT_TOLERANCE }
    }

    pub fn float_with(tolerance: f64) -> Result<Self> {
        if tolerance > 0.0 && tolerance.is_finite() {
            Ok(LpMode::Float { tolerance })
        } else {
            Err(Error::InvalidParameter(format!("tolerance must be positive, got {tolerance}")))
        }
    }

    /// Tolerances used to check strategies produced in this mode.
    pub fn tolerances(&self) -> Tolerances {
        match self {
            LpMode::ExactRational => Tolerances::exact(),
            LpMode::Float { tolerance } => Tolerances { norm: from_f64(*tolerance), feas: from_f64(*tolerance) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityWitness {
    pub feasible: bool,
    pub strategy: Option<SplittingStrategy>,
    /// Nodes loaded to `mu` under the witness strategy.
    pub binding_nodes: Vec<NodeId>,
}

impl FeasibilityWitness {
    fn infeasible() -> Self {
        Self { feasible: false, strategy: None, binding_nodes: Vec::new() }
    }
}

/// Largest demand for the last file given the others.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LastFileMax {
    pub value: Rational,
    pub witness: FeasibilityWitness,
}

/// Variable layout of one rate-space program.
struct Formulation {
    lp: IncidenceLp,
    /// (file, group index) per rate variable; slacks follow.
    vars: Vec<(FileIndex, usize)>,
}

fn check_consistent(system: &StorageSystem, table: &RepairGroupTable) -> Result<()> {
    if table.files() != system.files() || table.node_count() != system.node_count() {
        return Err(Error::Dimension(format!(
            "table for {} files on {} nodes does not match system with {} files on {} nodes",
            table.files(),
            table.node_count(),
            system.files(),
            system.node_count()
        )));
    }
    Ok(())
}

/// `fixed[k]` is the demand of file `k`; `free` is maximized. Files with zero
/// demand are left out entirely.
fn formulate(system: &StorageSystem, table: &RepairGroupTable, fixed: &[Rational], free: Option<FileIndex>) -> Formulation {
    let nodes = system.node_count();
    let active: Vec<FileIndex> = (0..fixed.len()).filter(|&k| fixed[k].is_positive()).collect();
    let rows = nodes + active.len();

    let mut columns = Vec::new();
    let mut objective = Vec::new();
    let mut vars = Vec::new();
    let mut push_file = |file: FileIndex, row: Option<usize>, maximize: bool| {
        for (i, group) in table.groups(file).iter().enumerate() {
            let mut col: Vec<usize> = group.members.iter().map(|n| n.0).collect();
            col.extend(row);
            columns.push(col);
            objective.push(maximize);
            vars.push((file, i));
        }
    };
    for (r, &file) in active.iter().enumerate() {
        push_file(file, Some(nodes + r), false);
    }
    if let Some(file) = free {
        push_file(file, None, true);
    }

    let mut unit_columns = vec![None; rows];
    for (j, unit) in unit_columns.iter_mut().enumerate().take(nodes) {
        *unit = Some(columns.len());
        columns.push(vec![j]);
        objective.push(false);
    }
    let mut rhs = vec![system.mu().clone(); nodes];
    rhs.extend(active.iter().map(|&k| fixed[k].clone()));

    Formulation { lp: IncidenceLp { rows, columns, rhs, objective, unit_columns }, vars }
}

fn solve(form: &Formulation, mode: LpMode) -> Result<Option<Vec<Rational>>> {
    match mode {
        LpMode::ExactRational => Ok(match simplex::solve_exact(&form.lp)? {
            Outcome::Optimal { x, .. } => Some(x),
            Outcome::Infeasible => None,
        }),
        LpMode::Float { tolerance } => Ok(match simplex::solve_float(&form.lp, tolerance)? {
            Outcome::Optimal { x, .. } => Some(x.into_iter().map(|v| from_f64(v.max(0.0))).collect()),
            Outcome::Infeasible => None,
        }),
    }
}

fn witness(
    system: &StorageSystem,
    table: &RepairGroupTable,
    form: &Formulation,
    x: &[Rational],
    demand: &DemandVector,
    mode: LpMode,
) -> Result<FeasibilityWitness> {
    let mut strategy = SplittingStrategy::zeros(table);
    for (&(file, group), rate) in form.vars.iter().zip(x) {
        let lambda = demand.get(file);
        if lambda.is_positive() {
            strategy.alpha[file][group] = rate / lambda;
        }
    }
    let loads = node_loads(table, &strategy, demand)?;
    let binding = loads.binding(system.mu(), &mode.tolerances().feas);
    Ok(FeasibilityWitness { feasible: true, strategy: Some(strategy), binding_nodes: binding })
}

/// Decides whether `demand` lies in the service rate region.
pub fn feasible(system: &StorageSystem, table: &RepairGroupTable, demand: &DemandVector, mode: LpMode) -> Result<FeasibilityWitness> {
    check_consistent(system, table)?;
    if demand.len() != system.files() {
        return Err(Error::Dimension(format!("demand has {} entries for {} files", demand.len(), system.files())));
    }
    if (0..system.files()).any(|k| demand.get(k).is_positive() && table.gamma(k) == 0) {
        return Ok(FeasibilityWitness::infeasible());
    }
    let form = formulate(system, table, demand.as_slice(), None);
    match solve(&form, mode)? {
        Some(x) => witness(system, table, &form, &x, demand, mode),
        None => Ok(FeasibilityWitness::infeasible()),
    }
}

/// `L(lambda_hat)`: the largest last-file demand such that
/// `lambda_hat x {L}` is in the region. `None` when `lambda_hat x {0}` is
/// already outside.
pub fn maximize_last(
    system: &StorageSystem,
    table: &RepairGroupTable,
    lambda_hat: &[Rational],
    mode: LpMode,
) -> Result<Option<LastFileMax>> {
    check_consistent(system, table)?;
    let k = system.files();
    if lambda_hat.len() + 1 != k {
        return Err(Error::Dimension(format!("lambda_hat has {} entries for {k} files", lambda_hat.len())));
    }
    DemandVector::new(lambda_hat.to_vec())?;
    if (0..k - 1).any(|f| lambda_hat[f].is_positive() && table.gamma(f) == 0) {
        return Ok(None);
    }
    let form = formulate(system, table, lambda_hat, Some(k - 1));
    let Some(x) = solve(&form, mode)? else {
        return Ok(None);
    };
    let value: Rational = form.vars.iter().zip(&x).filter(|((file, _), _)| *file == k - 1).map(|(_, v)| v).sum();
    let demand = DemandVector::with_last(lambda_hat, value.clone())?;
    let witness = witness(system, table, &form, &x, &demand, mode)?;
    Ok(Some(LastFileMax { value, witness }))
}

/// `N * mu`: no file's demand can exceed this.
pub fn total_capacity_bound(system: &StorageSystem) -> Rational {
    system.mu() * ratio(system.node_count() as i64, 1)
}

/// `L(lambda_hat)` without the witness.
pub fn boundary_value(system: &StorageSystem, table: &RepairGroupTable, lambda_hat: &[Rational], mode: LpMode) -> Result<Option<Rational>> {
    Ok(maximize_last(system, table, lambda_hat, mode)?.map(|m| m.value))
}
