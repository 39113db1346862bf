//! JSON region descriptors, `{"type": "ball" | "cylinder" | "ellipsoid" | "bottle", ...}`.

use serde::{Deserialize, Serialize};

use crate::capacity::{
    bordeaux_bottle_fixture, capacity_ball, capacity_cylinder, capacity_ellipsoid, CapacityValue, Cylinder,
    EnergyShellRegion,
};
use crate::error::{Error, Result};
use crate::plane::PlaneSelector;
use crate::symplectic::{MatrixDoc, QuadraticHamiltonian};

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RegionDescriptor {
    Ball {
        radius: f64,
        n: usize,
    },
    /// Conjugate cylinder `Z_axis(R)`, or a cylinder over an explicit `plane`.
    Cylinder {
        radius: f64,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        plane: Option<PlaneSelector>,
    },
    /// `{ z^T M z / 2 <= energy }`
    Ellipsoid {
        hamiltonian: MatrixDoc,
        energy: f64,
    },
    Bottle {
        radius: f64,
        neck: f64,
        #[serde(default = "two")]
        n: usize,
    },
}

impl RegionDescriptor {
    pub fn capacity(&self) -> Result<CapacityValue> {
        match self {
            RegionDescriptor::Ball { radius, n } => capacity_ball(*radius, *n),
            RegionDescriptor::Cylinder { radius, n, axis, plane } => {
                let plane = match (axis, plane) {
                    (Some(_), Some(_)) => {
                        return Err(Error::InvalidInput("give either 'axis' or 'plane', not both".into()))
                    }
                    (Some(j), None) => PlaneSelector::Conjugate(*j),
                    (None, Some(p)) => *p,
                    (None, None) => PlaneSelector::Conjugate(1),
                };
                capacity_cylinder(&Cylinder::new(plane, *radius, *n)?)
            }
            RegionDescriptor::Ellipsoid { hamiltonian, energy } => {
                let h = QuadraticHamiltonian::new(hamiltonian.to_matrix()?)?;
                capacity_ellipsoid(&EnergyShellRegion::new(h, *energy)?)
            }
            RegionDescriptor::Bottle { radius, neck, n } => Ok(bordeaux_bottle_fixture(*radius, *neck, *n)?.capacity),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn descriptors_parse_and_evaluate() {
        let cases = [
            (r#"{"type":"ball","radius":1,"n":3}"#, PI),
            (r#"{"type":"cylinder","radius":1,"n":3,"axis":2}"#, PI),
            (r#"{"type":"ellipsoid","hamiltonian":{"n":1,"matrix":[1,0,0,1]},"energy":0.5}"#, PI),
            (r#"{"type":"bottle","radius":1,"neck":0.5}"#, PI),
        ];
        for (json, expected) in cases {
            let d: RegionDescriptor = serde_json::from_str(json).unwrap();
            let c = d.capacity().unwrap().finite().unwrap();
            assert!((c - expected).abs() < 1e-12, "{json}: {c}");
        }
        let d: RegionDescriptor = serde_json::from_str(r#"{"type":"cylinder","radius":1,"n":2,"plane":"q:1,2"}"#).unwrap();
        assert_eq!(d.capacity().unwrap_err().kind(), "UnsupportedRegion");
    }
}
