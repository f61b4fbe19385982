//! Explicit boundary formulas: the all-coded region `sum(lambda) <= C/K mu`,
//! the four-branch three-file boundary, and the load-counting upper bound
//! `D` on total served demand in three-file systems.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fmt_num, min_rational, ratio, Rational};
use crate::storage::StorageSystem;

fn count(n: usize) -> Rational {
    ratio(n as i64, 1)
}

/// Boundary value of an all-coded system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllCodedBoundary {
    pub value: Rational,
    /// `C <= K - 1`: no file is recoverable and the region is the origin.
    pub degenerate: bool,
}

/// `L = (C/K) mu - sum(lambda_hat)` for `K` files on `C` coded nodes.
pub fn all_coded_boundary(coded: usize, files: usize, mu: &Rational, lambda_hat: &[Rational]) -> Result<AllCodedBoundary> {
    if files == 0 || lambda_hat.len() + 1 != files {
        return Err(Error::Dimension(format!("lambda_hat has {} entries for {files} files", lambda_hat.len())));
    }
    if lambda_hat.iter().any(Signed::is_negative) {
        return Err(Error::InvalidParameter("negative demand".into()));
    }
    if coded < files {
        return if lambda_hat.iter().all(Zero::is_zero) {
            Ok(AllCodedBoundary { value: Rational::zero(), degenerate: true })
        } else {
            Err(Error::NotInRegion)
        };
    }
    let capacity = count(coded) / count(files) * mu;
    let used: Rational = lambda_hat.iter().sum();
    if used > capacity {
        return Err(Error::NotInRegion);
    }
    Ok(AllCodedBoundary { value: capacity - used, degenerate: false })
}

/// Membership in the all-coded region.
pub fn region_membership_all_coded(coded: usize, files: usize, mu: &Rational, lambda: &[Rational]) -> bool {
    if lambda.iter().all(Zero::is_zero) {
        return true;
    }
    coded >= files && lambda.iter().sum::<Rational>() <= count(coded) / count(files) * mu
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThreeFileCase {
    /// Both demands fit on their systematic nodes.
    Case1,
    /// File 1 overflows.
    Case2,
    /// File 2 overflows.
    Case3,
    /// Both overflow.
    Case4,
}

impl fmt::Display for ThreeFileCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            ThreeFileCase::Case1 => "case1",
            ThreeFileCase::Case2 => "case2",
            ThreeFileCase::Case3 => "case3",
            ThreeFileCase::Case4 => "case4",
        };
        f.write_str(label)
    }
}

/// A three-file system with an MDS core.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreeFileParams {
    pub systematic: [usize; 3],
    pub coded: usize,
    pub mu: Rational,
}

/// Load-counting bound on total demand served.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBound {
    pub d: Rational,
    /// Demand of files 1 and 2 served by their own systematic nodes.
    pub served_systematic: [Rational; 2],
    /// `max(D - lambda_1 - lambda_2, 0)`.
    pub cap: Rational,
}

impl ThreeFileParams {
    pub fn new(systematic: [usize; 3], coded: usize, mu: Rational) -> Result<Self> {
        if !mu.is_positive() {
            return Err(Error::InvalidParameter(format!("service rate must be positive, got {mu}")));
        }
        Ok(Self { systematic, coded, mu })
    }

    pub fn from_system(system: &StorageSystem) -> Result<Self> {
        if system.files() != 3 {
            return Err(Error::UnsupportedParameters(format!("three-file formulas need K = 3, got K = {}", system.files())));
        }
        let n = system.systematic_counts();
        Self::new([n[0], n[1], n[2]], system.coded_count(), system.mu().clone())
    }

    fn n(&self, i: usize) -> Rational {
        count(self.systematic[i])
    }

    fn c(&self) -> Rational {
        count(self.coded)
    }

    /// `(N_1 + N_2 + C/3) mu`: the largest combined demand of files 1 and 2.
    fn pair_capacity(&self) -> Rational {
        (self.n(0) + self.n(1) + self.c() / count(3)) * &self.mu
    }

    /// `lambda_1 + lambda_2 <= (N_1 + N_2 + C/3) mu` and
    /// `C >= max(3, N_1 - lambda_1/mu, N_2 - lambda_2/mu)`.
    pub fn preconditions(&self, l1: &Rational, l2: &Rational) -> bool {
        let c = self.c();
        l1 + l2 <= self.pair_capacity() && self.coded >= 3 && c >= self.n(0) - l1 / &self.mu && c >= self.n(1) - l2 / &self.mu
    }

    /// Selects the branch of the three-file boundary. Ties `lambda_i = N_i mu`
    /// take the non-overflow branch.
    pub fn classify(&self, l1: &Rational, l2: &Rational) -> Result<ThreeFileCase> {
        let upper = self.pair_capacity();
        for (i, l) in [l1, l2].into_iter().enumerate() {
            if l.is_negative() || *l > upper {
                return Err(Error::OutOfDomain(format!("lambda_{} = {} outside [0, {}]", i + 1, fmt_num(l), fmt_num(&upper))));
            }
        }
        let over1 = *l1 > self.n(0) * &self.mu;
        let over2 = *l2 > self.n(1) * &self.mu;
        Ok(match (over1, over2) {
            (false, false) => ThreeFileCase::Case1,
            (true, false) => ThreeFileCase::Case2,
            (false, true) => ThreeFileCase::Case3,
            (true, true) => ThreeFileCase::Case4,
        })
    }

    /// Closed-form `L(lambda_1, lambda_2)`. Refuses outside the formula's
    /// hypotheses.
    pub fn boundary(&self, l1: &Rational, l2: &Rational) -> Result<Rational> {
        if !self.preconditions(l1, l2) {
            return Err(Error::UnsupportedParameters(format!(
                "three-file formula needs lambda_1 + lambda_2 <= (N_1 + N_2 + C/3) mu and \
                 C >= max(3, N_1 - lambda_1/mu, N_2 - lambda_2/mu); got N = {:?}, C = {}, lambda = ({}, {})",
                self.systematic,
                self.coded,
                fmt_num(l1),
                fmt_num(l2)
            )));
        }
        let third = ratio(1, 3);
        let c3 = self.c() * &third;
        let (n1, n2, n3) = (self.n(0), self.n(1), self.n(2));
        let mu = &self.mu;
        let value = match self.classify(l1, l2)? {
            ThreeFileCase::Case1 => (c3 + &n1 * &third + &n2 * &third + n3) * mu - l1 * &third - l2 * &third,
            ThreeFileCase::Case2 => (c3 + n1 + &n2 * &third + n3) * mu - l1 - l2 * &third,
            ThreeFileCase::Case3 => (c3 + &n1 * &third + n2 + n3) * mu - l1 * &third - l2,
            ThreeFileCase::Case4 => (c3 + n1 + n2 + n3) * mu - l1 - l2,
        };
        Ok(value)
    }

    /// `D = r_1 + r_2 + ((N_1 mu - r_1) + (N_2 mu - r_2) + C mu)/3 + N_3 mu`
    /// with `r_i = min(lambda_i, N_i mu)`.
    pub fn upper_bound(&self, l1: &Rational, l2: &Rational) -> UpperBound {
        let mu = &self.mu;
        let cap1 = self.n(0) * mu;
        let cap2 = self.n(1) * mu;
        let r1 = min_rational(l1, &cap1).clone();
        let r2 = min_rational(l2, &cap2).clone();
        let d = &r1 + &r2 + ((&cap1 - &r1) + (&cap2 - &r2) + self.c() * mu) / count(3) + self.n(2) * mu;
        let slack = &d - l1 - l2;
        let cap = if slack.is_positive() { slack } else { Rational::zero() };
        UpperBound { d, served_systematic: [r1, r2], cap }
    }
}
