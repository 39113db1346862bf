//! Coordinate planes of `R^{2N}` addressed with 1-based indices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A coordinate plane. Indices are 1-based, as in `q_1..q_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PlaneSelector {
    /// `(q_j, p_j)`
    Conjugate(usize),
    /// `(q_i, q_j)`, `i != j`
    PositionPair(usize, usize),
    /// `(p_i, p_j)`, `i != j`
    MomentumPair(usize, usize),
    /// `(q_i, p_j)`, `i != j`
    Mixed(usize, usize),
}

impl PlaneSelector {
    pub fn is_conjugate(&self) -> bool {
        matches!(self, PlaneSelector::Conjugate(_))
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        let ok = |i: usize| (1..=dof).contains(&i);
        let valid = match *self {
            PlaneSelector::Conjugate(j) => ok(j),
            PlaneSelector::PositionPair(i, j)
            | PlaneSelector::MomentumPair(i, j)
            | PlaneSelector::Mixed(i, j) => ok(i) && ok(j) && i != j,
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("plane {self} is invalid for N = {dof}")))
        }
    }

    /// 0-based positions of the two coordinates inside a phase vector of `N` degrees of freedom.
    pub fn coordinates(&self, dof: usize) -> (usize, usize) {
        match *self {
            PlaneSelector::Conjugate(j) => (j - 1, dof + j - 1),
            PlaneSelector::PositionPair(i, j) => (i - 1, j - 1),
            PlaneSelector::MomentumPair(i, j) => (dof + i - 1, dof + j - 1),
            PlaneSelector::Mixed(i, j) => (i - 1, dof + j - 1),
        }
    }

    /// Every plane of `R^{2N}`: conjugate ones first, then the nonconjugate pairs.
    pub fn all(dof: usize) -> Vec<PlaneSelector> {
        let mut planes: Vec<_> = (1..=dof).map(PlaneSelector::Conjugate).collect();
        for i in 1..=dof {
            for j in i + 1..=dof {
                planes.push(PlaneSelector::PositionPair(i, j));
                planes.push(PlaneSelector::MomentumPair(i, j));
            }
        }
        for i in 1..=dof {
            for j in 1..=dof {
                if i != j {
                    planes.push(PlaneSelector::Mixed(i, j));
                }
            }
        }
        planes
    }
}

impl fmt::Display for PlaneSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaneSelector::Conjugate(j) => write!(f, "conjugate:{j}"),
            PlaneSelector::PositionPair(i, j) => write!(f, "q:{i},{j}"),
            PlaneSelector::MomentumPair(i, j) => write!(f, "p:{i},{j}"),
            PlaneSelector::Mixed(i, j) => write!(f, "mixed:{i},{j}"),
        }
    }
}

impl FromStr for PlaneSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse plane '{s}'"));
        let (kind, idx) = s.split_once(':').ok_or_else(bad)?;
        let idx: Vec<usize> = idx
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (kind.trim(), idx.as_slice()) {
            ("conjugate", [j]) => Ok(PlaneSelector::Conjugate(*j)),
            ("q", [i, j]) => Ok(PlaneSelector::PositionPair(*i, *j)),
            ("p", [i, j]) => Ok(PlaneSelector::MomentumPair(*i, *j)),
            ("mixed", [i, j]) => Ok(PlaneSelector::Mixed(*i, *j)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for PlaneSelector {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PlaneSelector> for String {
    fn from(p: PlaneSelector) -> Self {
        p.to_string()
    }
}
