//! Two-phase revised simplex for `max 1·x_J s.t. A x = b, x >= 0` where `A`
//! is a 0/1 incidence matrix and `b >= 0`.
//!
//! The solver is generic over [`Scalar`]. Exact solves first run in `f64`
//! with Dantzig pricing to find a candidate basis, then re-factor that basis
//! over rationals and finish with Bland's rule, so the answer is exact and
//! the floating-point run only saves pivots.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numeric::{Rational, Scalar};

/// Linear program over a 0/1 constraint matrix.
#[derive(Clone, Debug)]
pub(crate) struct IncidenceLp {
    pub rows: usize,
    /// Row indices holding a 1, per column.
    pub columns: Vec<Vec<usize>>,
    pub rhs: Vec<Rational>,
    /// Columns whose sum is maximized.
    pub objective: Vec<bool>,
    /// Per row, a column equal to that row's unit vector, if any.
    pub unit_columns: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Outcome<T> {
    Optimal { x: Vec<T>, objective: T },
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pricing {
    Dantzig,
    Bland,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

const FLOAT_EPS: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK: usize = 50;
const MAX_PIVOTS: usize = 200_000;

struct Revised<'a, T: Scalar> {
    lp: &'a IncidenceLp,
    /// Variables `>= n` are artificials, one per row.
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<Vec<T>>,
    xb: Vec<T>,
    eps: T,
    pricing: Pricing,
    pivots: usize,
}

impl<'a, T: Scalar> Revised<'a, T> {
    fn n(&self) -> usize {
        self.lp.columns.len()
    }

    fn column(&self, var: usize) -> std::borrow::Cow<'a, [usize]> {
        let n = self.lp.columns.len();
        if var < n {
            std::borrow::Cow::Borrowed(&self.lp.columns[var])
        } else {
            std::borrow::Cow::Owned(vec![var - n])
        }
    }

    fn cost(&self, var: usize, phase: Phase) -> i32 {
        let n = self.n();
        match phase {
            Phase::One => -((var >= n) as i32),
            Phase::Two => (var < n && self.lp.objective[var]) as i32,
        }
    }

    fn slack_basis(lp: &IncidenceLp) -> Vec<usize> {
        let n = lp.columns.len();
        (0..lp.rows).map(|r| lp.unit_columns[r].unwrap_or(n + r)).collect()
    }

    fn from_basis(lp: &'a IncidenceLp, basis: &[usize], eps: T, pricing: Pricing) -> Option<Self> {
        let n = lp.columns.len();
        let mut is_basic = vec![false; n + lp.rows];
        for &v in basis {
            if v >= is_basic.len() || is_basic[v] {
                return None;
            }
            is_basic[v] = true;
        }
        let mut solver = Self { lp, basis: basis.to_vec(), is_basic, binv: Vec::new(), xb: Vec::new(), eps, pricing, pivots: 0 };
        solver.refactor()?;
        if solver.xb.iter().any(|x| *x < -solver.eps.clone()) {
            return None;
        }
        solver.clamp();
        Some(solver)
    }

    /// Recomputes `B^-1` and `x_B` from the basis by Gauss-Jordan elimination.
    fn refactor(&mut self) -> Option<()> {
        let m = self.lp.rows;
        let mut aug: Vec<Vec<T>> = vec![vec![T::zero(); 2 * m]; m];
        for (i, &var) in self.basis.iter().enumerate() {
            for &r in self.column(var).iter() {
                aug[r][i] = T::one();
            }
        }
        for (r, row) in aug.iter_mut().enumerate() {
            row[m + r] = T::one();
        }
        for col in 0..m {
            let pivot_row = if T::EXACT {
                (col..m).find(|&r| !aug[r][col].is_zero())?
            } else {
                let best =
                    (col..m).max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
                if aug[best][col].abs() <= self.eps {
                    return None;
                }
                best
            };
            aug.swap(col, pivot_row);
            let inv = T::one() / aug[col][col].clone();
            for v in aug[col].iter_mut() {
                *v *= &inv;
            }
            let pivot = aug[col].clone();
            for (r, row) in aug.iter_mut().enumerate() {
                if r == col || row[col].is_zero() {
                    continue;
                }
                let factor = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pivot) {
                    if !p.is_zero() {
                        *v -= factor.clone() * p;
                    }
                }
            }
        }
        self.binv = aug.into_iter().map(|row| row[m..].to_vec()).collect();
        let rhs: Vec<T> = self.lp.rhs.iter().map(T::from_rational).collect();
        self.xb = self.binv.iter().map(|row| row.iter().zip(&rhs).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b)).collect();
        Some(())
    }

    fn clamp(&mut self) {
        if T::EXACT {
            return;
        }
        for x in &mut self.xb {
            if x.abs() <= self.eps {
                *x = T::zero();
            }
        }
    }

    fn artificial_mass(&self) -> T {
        let n = self.n();
        self.basis.iter().zip(&self.xb).filter(|(v, _)| **v >= n).fold(T::zero(), |acc, (_, x)| acc + x)
    }

    fn duals(&self, phase: Phase) -> Vec<T> {
        let m = self.lp.rows;
        let mut y = vec![T::zero(); m];
        for (i, &var) in self.basis.iter().enumerate() {
            match self.cost(var, phase) {
                0 => {}
                c => {
                    for (yr, b) in y.iter_mut().zip(&self.binv[i]) {
                        if c > 0 {
                            *yr += b;
                        } else {
                            *yr -= b;
                        }
                    }
                }
            }
        }
        y
    }

    fn reduced_cost(&self, var: usize, phase: Phase, y: &[T]) -> T {
        let mut d = match self.cost(var, phase) {
            0 => T::zero(),
            1 => T::one(),
            _ => -T::one(),
        };
        for &r in self.column(var).iter() {
            d -= &y[r];
        }
        d
    }

    fn entering(&self, phase: Phase, pricing: Pricing) -> Option<usize> {
        let y = self.duals(phase);
        let mut best: Option<(usize, T)> = None;
        // nonbasic artificials never re-enter
        for var in 0..self.n() {
            if self.is_basic[var] {
                continue;
            }
            let d = self.reduced_cost(var, phase, &y);
            if d > self.eps {
                match pricing {
                    Pricing::Bland => return Some(var),
                    Pricing::Dantzig => {
                        if best.as_ref().map_or(true, |(_, b)| d > *b) {
                            best = Some((var, d));
                        }
                    }
                }
            }
        }
        best.map(|(v, _)| v)
    }

    fn direction(&self, var: usize) -> Vec<T> {
        let col = self.column(var);
        self.binv.iter().map(|row| col.iter().fold(T::zero(), |acc, &r| acc + &row[r])).collect()
    }

    fn leaving(&self, u: &[T], pricing: Pricing) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, ui) in u.iter().enumerate() {
            if *ui <= self.eps {
                continue;
            }
            let theta = self.xb[i].clone() / ui;
            best = match best {
                None => Some((i, theta)),
                Some((j, t)) => {
                    let better = if T::EXACT {
                        theta < t || (theta == t && self.basis[i] < self.basis[j])
                    } else if theta < t.clone() - &self.eps {
                        true
                    } else if theta <= t.clone() + &self.eps {
                        match pricing {
                            Pricing::Bland => self.basis[i] < self.basis[j],
                            Pricing::Dantzig => *ui > u[j],
                        }
                    } else {
                        false
                    };
                    if better {
                        Some((i, theta))
                    } else {
                        Some((j, t))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, row: usize, var: usize, u: &[T]) {
        let inv = T::one() / u[row].clone();
        for v in self.binv[row].iter_mut() {
            *v *= &inv;
        }
        self.xb[row] *= &inv;
        let pivot_row = self.binv[row].clone();
        let pivot_x = self.xb[row].clone();
        for (i, ui) in u.iter().enumerate() {
            if i == row || ui.is_zero() {
                continue;
            }
            for (v, p) in self.binv[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= ui.clone() * p;
                }
            }
            self.xb[i] -= ui.clone() * &pivot_x;
        }
        self.is_basic[self.basis[row]] = false;
        self.is_basic[var] = true;
        self.basis[row] = var;
        self.pivots += 1;
        if !T::EXACT && self.pivots % REFACTOR_EVERY == 0 {
            // fall back to the updated inverse if re-factoring fails
            let saved = (self.binv.clone(), self.xb.clone());
            if self.refactor().is_none() {
                (self.binv, self.xb) = saved;
            }
        }
        self.clamp();
    }

    fn run(&mut self, phase: Phase) -> Result<()> {
        let mut pricing = self.pricing;
        let mut degenerate = 0usize;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Solver(format!("no convergence after {MAX_PIVOTS} pivots")));
            }
            let Some(var) = self.entering(phase, pricing) else {
                return Ok(());
            };
            let u = self.direction(var);
            let Some(row) = self.leaving(&u, pricing) else {
                return Err(Error::Solver("unbounded objective".into()));
            };
            if self.xb[row].is_zero() {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    pricing = Pricing::Bland;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(row, var, &u);
        }
    }

    /// Pivots basic artificials (all at zero) out in favour of structural
    /// columns. Artificials of redundant rows stay basic at zero.
    fn drive_out_artificials(&mut self) {
        let n = self.n();
        for row in 0..self.lp.rows {
            if self.basis[row] < n {
                continue;
            }
            let candidate = (0..n).find(|&var| {
                !self.is_basic[var] && {
                    let entry = self.lp.columns[var].iter().fold(T::zero(), |acc, &r| acc + &self.binv[row][r]);
                    entry.abs() > self.eps
                }
            });
            if let Some(var) = candidate {
                let u = self.direction(var);
                self.xb[row] = T::zero();
                self.pivot(row, var, &u);
            }
        }
    }

    /// Phase one if any artificial carries mass, then phase two.
    fn finish(&mut self) -> Result<bool> {
        if self.artificial_mass() > self.eps {
            self.run(Phase::One)?;
            if self.artificial_mass() > self.eps {
                return Ok(false);
            }
        }
        self.drive_out_artificials();
        self.run(Phase::Two)?;
        Ok(true)
    }

    fn solution(&self) -> Outcome<T> {
        let n = self.n();
        let mut x = vec![T::zero(); n];
        for (i, &var) in self.basis.iter().enumerate() {
            if var < n {
                x[var] = self.xb[i].clone();
            }
        }
        let objective = x.iter().zip(&self.lp.objective).filter(|(_, o)| **o).fold(T::zero(), |acc, (v, _)| acc + v);
        Outcome::Optimal { x, objective }
    }
}

/// Floating-point solve. Also returns the final basis for warm starts.
fn solve_f64(lp: &IncidenceLp, eps: f64) -> Result<(Outcome<f64>, Vec<usize>)> {
    let basis = Revised::<f64>::slack_basis(lp);
    let mut solver =
        Revised::<f64>::from_basis(lp, &basis, eps, Pricing::Dantzig).ok_or_else(|| Error::Solver("singular starting basis".into()))?;
    let outcome = if solver.finish()? { solver.solution() } else { Outcome::Infeasible };
    Ok((outcome, solver.basis.clone()))
}

pub(crate) fn solve_float(lp: &IncidenceLp, eps: f64) -> Result<Outcome<f64>> {
    solve_f64(lp, eps).map(|(outcome, _)| outcome)
}

/// Exact rational optimum.
pub(crate) fn solve_exact(lp: &IncidenceLp) -> Result<Outcome<Rational>> {
    if let Ok((_, basis)) = solve_f64(lp, FLOAT_EPS) {
        if let Some(mut solver) = Revised::<Rational>::from_basis(lp, &basis, Rational::zero(), Pricing::Bland) {
            return Ok(if solver.finish()? { solver.solution() } else { Outcome::Infeasible });
        }
    }
    let basis = Revised::<Rational>::slack_basis(lp);
    let mut solver = Revised::<Rational>::from_basis(lp, &basis, Rational::zero(), Pricing::Bland)
        .ok_or_else(|| Error::Solver("singular starting basis".into()))?;
    Ok(if solver.finish()? { solver.solution() } else { Outcome::Infeasible })
}

/// Exact solve that never consults floating point.
#[cfg(test)]
pub(crate) fn solve_exact_cold(lp: &IncidenceLp) -> Result<Outcome<Rational>> {
    let basis = Revised::<Rational>::slack_basis(lp);
    let mut solver = Revised::<Rational>::from_basis(lp, &basis, Rational::zero(), Pricing::Bland)
        .ok_or_else(|| Error::Solver("singular starting basis".into()))?;
    Ok(if solver.finish()? { solver.solution() } else { Outcome::Infeasible })
}

#[cfg(test)]
impl<T: Scalar> Outcome<T> {
    pub(crate) fn objective(&self) -> Option<&T> {
        match self {
            Outcome::Optimal { objective, .. } => Some(objective),
            Outcome::Infeasible => None,
        }
    }
}
