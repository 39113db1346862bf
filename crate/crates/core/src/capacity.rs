//! Symplectic capacities (Gromov width, normalized so that `c(B(R)) = pi R^2`)
//! of balls, cylinders, ellipsoidal energy shells and sandwiched sets.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::ebk;
use crate::error::{Error, Result};
use crate::nonsqueezing::{SeparableHamiltonian, SeparableSystem};
use crate::plane::PlaneSelector;
use crate::sampling::{BallSampler, BoxSampler};
use crate::symplectic::{williamson, PhaseVector, QuadraticHamiltonian};

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: PhaseVector,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: PhaseVector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// `B(R)` centered at the origin of `R^{2N}`.
    pub fn centered(dof: usize, radius: f64) -> Result<Self> {
        if dof == 0 {
            return Err(Error::Dimension("N must be at least 1".into()));
        }
        Self::new(PhaseVector::zeros(dof), radius)
    }

    pub fn dof(&self) -> usize {
        self.center.dof()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        let r2: f64 = z
            .iter()
            .zip(self.center.as_slice())
            .map(|(x, c)| (x - c) * (x - c))
            .sum();
        r2 <= self.radius * self.radius
    }
}

/// `Z(R) = { z : z_a^2 + z_b^2 <= R^2 }` over the plane `(z_a, z_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub plane: PlaneSelector,
    pub radius: f64,
    pub dof: usize,
}

impl Cylinder {
    pub fn new(plane: PlaneSelector, radius: f64, dof: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("cylinder radius must be positive, got {radius}")));
        }
        plane.validate(dof)?;
        Ok(Self { plane, radius, dof })
    }

    /// `Z_j(R)` over the conjugate plane `(q_j, p_j)`, `j` 1-based.
    pub fn conjugate(j: usize, radius: f64, dof: usize) -> Result<Self> {
        Self::new(PlaneSelector::Conjugate(j), radius, dof)
    }

    /// Membership with the axis through `axis_point`.
    pub fn contains_around(&self, z: &[f64], axis_point: &[f64]) -> bool {
        let (a, b) = self.plane.coordinates(self.dof);
        let da = z[a] - axis_point[a];
        let db = z[b] - axis_point[b];
        da * da + db * db <= self.radius * self.radius
    }
}

/// Interior `Omega(E) = { H <= E }` of a quadratic energy shell.
#[derive(Debug, Clone)]
pub struct EnergyShellRegion {
    pub hamiltonian: QuadraticHamiltonian,
    pub energy: f64,
}

impl EnergyShellRegion {
    pub fn new(hamiltonian: QuadraticHamiltonian, energy: f64) -> Result<Self> {
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(Error::InvalidInput(format!("energy must be positive, got {energy}")));
        }
        hamiltonian.require_positive_definite()?;
        Ok(Self { hamiltonian, energy })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityAmount {
    Finite(f64),
    Infinite,
}

/// Serialized as `{"value": <float> | "inf", "exact": <bool>}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityValue {
    pub value: CapacityAmount,
    pub exact: bool,
}

impl CapacityValue {
    pub fn exact(value: f64) -> Self {
        Self { value: CapacityAmount::Finite(value), exact: true }
    }

    pub fn estimate(value: f64) -> Self {
        Self { value: CapacityAmount::Finite(value), exact: false }
    }

    pub fn infinite() -> Self {
        Self { value: CapacityAmount::Infinite, exact: true }
    }

    pub fn finite(&self) -> Option<f64> {
        match self.value {
            CapacityAmount::Finite(v) => Some(v),
            CapacityAmount::Infinite => None,
        }
    }
}

impl Serialize for CapacityAmount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CapacityAmount::Finite(v) => s.serialize_f64(*v),
            CapacityAmount::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for CapacityAmount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = CapacityAmount;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a nonnegative number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<CapacityAmount, E> {
                if v >= 0.0 && v.is_finite() {
                    Ok(CapacityAmount::Finite(v))
                } else {
                    Err(E::custom("capacity must be finite and nonnegative"))
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<CapacityAmount, E> {
                Ok(CapacityAmount::Finite(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<CapacityAmount, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<CapacityAmount, E> {
                if v == "inf" {
                    Ok(CapacityAmount::Infinite)
                } else {
                    Err(E::custom(format!("unexpected capacity string '{v}'")))
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn check_radius_dof(radius: f64, dof: usize) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if dof == 0 {
        return Err(Error::Dimension("N must be at least 1".into()));
    }
    Ok(())
}

/// `c(B(R)) = pi R^2`, whatever the dimension.
pub fn capacity_ball(radius: f64, dof: usize) -> Result<CapacityValue> {
    check_radius_dof(radius, dof)?;
    Ok(CapacityValue::exact(PI * radius * radius))
}

/// `Vol B(R) = pi^N R^{2N} / N!` in `R^{2N}`.
pub fn volume_ball(radius: f64, dof: usize) -> Result<f64> {
    check_radius_dof(radius, dof)?;
    let area = PI * radius * radius;
    Ok((1..=dof).fold(1.0, |acc, k| acc * area / k as f64))
}

pub fn capacity_cylinder(z: &Cylinder) -> Result<CapacityValue> {
    if !z.plane.is_conjugate() {
        return Err(Error::UnsupportedRegion(format!(
            "capacity of a cylinder over the nonconjugate plane {} is not pi R^2",
            z.plane
        )));
    }
    Ok(CapacityValue::exact(PI * z.radius * z.radius))
}

/// `2 pi E / w_max` for `{ z^T M z / 2 <= E }`.
pub fn capacity_ellipsoid(region: &EnergyShellRegion) -> Result<CapacityValue> {
    let w = williamson(&region.hamiltonian)?;
    Ok(CapacityValue::exact(2.0 * PI * region.energy / w.omega_max()))
}

/// Action and frequency of the shortest closed characteristic on a quadratic shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimalAction {
    pub action: f64,
    pub orbit_frequency: f64,
}

/// The normal-mode orbit of frequency `w` on `H = E` carries all energy in
/// that mode and encloses `oint p dq = 2 pi E / w`; the fastest mode is minimal.
pub fn minimal_action_quadratic(region: &EnergyShellRegion) -> Result<MinimalAction> {
    let w = williamson(&region.hamiltonian)?;
    let omega = w.omega_max();
    Ok(MinimalAction {
        action: 2.0 * PI * region.energy / omega,
        orbit_frequency: omega,
    })
}

pub type MembershipOracle = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Sample counts used by the sandwich check.
pub const SANDWICH_SAMPLES: usize = 10_000;
const MAX_BOX_DRAWS_PER_HIT: usize = 1_000;

/// Evidence for `B(R) subset Omega subset Z_j(R)`.
#[derive(Clone)]
pub struct SandwichCertificate {
    pub inner: Ball,
    pub outer: Cylinder,
    pub oracle: MembershipOracle,
    /// Axis-aligned box `[lo, hi]` enclosing `Omega`.
    pub bounding_box: (Vec<f64>, Vec<f64>),
    pub samples: usize,
}

impl fmt::Debug for SandwichCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SandwichCertificate")
            .field("inner", &self.inner)
            .field("outer", &self.outer)
            .field("bounding_box", &self.bounding_box)
            .field("samples", &self.samples)
            .finish_non_exhaustive()
    }
}

impl SandwichCertificate {
    pub fn new(
        inner: Ball,
        outer: Cylinder,
        oracle: MembershipOracle,
        bounding_box: (Vec<f64>, Vec<f64>),
    ) -> Self {
        Self { inner, outer, oracle, bounding_box, samples: SANDWICH_SAMPLES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub inner_samples: usize,
    pub box_draws: usize,
    pub oracle_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichOutcome {
    pub capacity: CapacityValue,
    pub report: CertificateReport,
}

pub fn capacity_sandwich(cert: &SandwichCertificate) -> Result<SandwichOutcome> {
    let dof = cert.inner.dof();
    let dim = 2 * dof;
    if cert.outer.dof != dof {
        return Err(Error::Dimension("ball and cylinder dimensions differ".into()));
    }
    if !cert.outer.plane.is_conjugate() {
        return Err(Error::UnsupportedRegion(format!(
            "sandwich needs a conjugate-plane cylinder, got {}",
            cert.outer.plane
        )));
    }
    if (cert.outer.radius - cert.inner.radius).abs() > 1e-12 * cert.inner.radius {
        return Err(Error::InvalidInput(format!(
            "inner radius {} differs from cylinder radius {}",
            cert.inner.radius, cert.outer.radius
        )));
    }
    let (lo, hi) = &cert.bounding_box;
    if lo.len() != dim || hi.len() != dim {
        return Err(Error::Dimension("bounding box has the wrong dimension".into()));
    }
    let center = cert.inner.center.as_slice();
    let r = cert.inner.radius;
    if (0..dim).any(|k| !(lo[k] <= center[k] - r && center[k] + r <= hi[k])) {
        return Err(Error::InvalidInput("bounding box does not enclose the inner ball".into()));
    }
    if cert.samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }

    // B(R) subset Omega
    let ball = BallSampler::new(center, r, None);
    let miss = (0..cert.samples as u64).into_par_iter().find_first(|&i| {
        let mut z = vec![0.0; dim];
        ball.point(i, &mut z);
        !(cert.oracle)(&z)
    });
    if let Some(i) = miss {
        let mut z = vec![0.0; dim];
        ball.point(i, &mut z);
        return Err(Error::CertificateInvalid {
            witness: z,
            reason: "inner ball point rejected by the membership oracle".into(),
        });
    }

    // Omega subset Z_j(R)
    let sampler = BoxSampler::new(lo, hi, None);
    let max_draws = cert.samples * MAX_BOX_DRAWS_PER_HIT;
    let batch = 8192usize;
    let mut hits = 0usize;
    let mut draws = 0usize;
    while hits < cert.samples && draws < max_draws {
        let start = draws;
        let end = (start + batch).min(max_draws);
        let outcome: Vec<(bool, bool)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut z = vec![0.0; dim];
                sampler.point(i as u64, &mut z);
                let hit = (cert.oracle)(&z);
                (hit, hit && !cert.outer.contains_around(&z, center))
            })
            .collect();
        for (k, (hit, outside)) in outcome.into_iter().enumerate() {
            if hits >= cert.samples {
                break;
            }
            draws = start + k + 1;
            if outside {
                let mut z = vec![0.0; dim];
                sampler.point((start + k) as u64, &mut z);
                return Err(Error::CertificateInvalid {
                    witness: z,
                    reason: "oracle point lies outside the cylinder".into(),
                });
            }
            if hit {
                hits += 1;
            }
        }
    }
    if hits < cert.samples {
        return Err(Error::InvalidInput(format!(
            "bounding box too loose: {hits} oracle hits in {draws} draws"
        )));
    }
    Ok(SandwichOutcome {
        capacity: CapacityValue::exact(PI * r * r),
        report: CertificateReport {
            inner_samples: cert.samples,
            box_draws: draws,
            oracle_hits: hits,
        },
    })
}

/// Ball `B(R)` at the origin joined to a thin neck along `q_2 in [R, 3R]`.
///
/// The neck cross-section is `q_1^2 + p_1^2 <= r^2` with every other
/// coordinate within `r` of zero, so the whole bottle sits inside `Z_1(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BordeauxBottle {
    pub radius: f64,
    pub neck: f64,
    pub dof: usize,
}

impl BordeauxBottle {
    pub fn new(radius: f64, neck: f64, dof: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        if !(neck > 0.0 && neck < radius) {
            return Err(Error::InvalidNeck { radius, neck });
        }
        if dof < 2 {
            return Err(Error::Dimension("the bottle needs N >= 2 for its transverse neck".into()));
        }
        Ok(Self { radius, neck, dof })
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        let n = self.dof;
        let (big, r) = (self.radius, self.neck);
        if z.iter().map(|x| x * x).sum::<f64>() <= big * big {
            return true;
        }
        let (q1, p1, q2) = (z[0], z[n], z[1]);
        if q1 * q1 + p1 * p1 > r * r || !(big..=3.0 * big).contains(&q2) {
            return false;
        }
        (0..2 * n)
            .filter(|&k| k != 0 && k != n && k != 1)
            .all(|k| z[k].abs() <= r)
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = 2 * self.dof;
        let mut lo = vec![-self.radius; d];
        let hi_q2 = 3.0 * self.radius;
        let mut hi = vec![self.radius; d];
        lo[1] = -self.radius;
        hi[1] = hi_q2;
        (lo, hi)
    }

    /// Action `oint p_1 dq_1 = pi r^2` of the loop around the neck.
    pub fn neck_loop_action(&self) -> f64 {
        PI * self.neck * self.neck
    }
}

#[derive(Clone)]
pub struct BottleFixture {
    pub bottle: BordeauxBottle,
    pub oracle: MembershipOracle,
    pub neck_loop_action: f64,
    pub capacity: CapacityValue,
    pub report: CertificateReport,
}

impl fmt::Debug for BottleFixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BottleFixture")
            .field("bottle", &self.bottle)
            .field("neck_loop_action", &self.neck_loop_action)
            .field("capacity", &self.capacity)
            .field("report", &self.report)
            .finish_non_exhaustive()
    }
}

pub fn bordeaux_bottle_fixture(radius: f64, neck: f64, dof: usize) -> Result<BottleFixture> {
    let bottle = BordeauxBottle::new(radius, neck, dof)?;
    let oracle: MembershipOracle = Arc::new(move |z: &[f64]| bottle.contains(z));
    let cert = SandwichCertificate::new(
        Ball::centered(dof, radius)?,
        Cylinder::conjugate(1, radius, dof)?,
        oracle.clone(),
        bottle.bounding_box(),
    );
    let outcome = capacity_sandwich(&cert)?;
    Ok(BottleFixture {
        bottle,
        oracle,
        neck_loop_action: bottle.neck_loop_action(),
        capacity: outcome.capacity,
        report: outcome.report,
    })
}

/// Upper estimate of the capacity of `{ T(p) + V(q) <= E }` for a separable system.
///
/// Each single-mode orbit (energy in one component, the others at rest at
/// their minima) is periodic. Its action is measured by shooting it with the
/// Stormer-Verlet integrator from a turning point until it closes; the
/// smallest action bounds the minimal closed characteristic from above.
pub fn capacity_separable_estimate(system: &SeparableSystem, energy: f64) -> Result<CapacityValue> {
    let minima: Vec<(f64, f64)> = system.components.iter().map(|c| c.minimum()).collect();
    let floor: f64 = minima.iter().map(|m| m.1).sum();
    if !(energy > floor) {
        return Err(Error::NoClassicalRegion { energy, minimum: floor });
    }
    let mut best = f64::INFINITY;
    for j in 0..system.components.len() {
        let mode_energy = energy - (floor - minima[j].1);
        best = best.min(shoot_mode_action(system, j, mode_energy, &minima)?);
    }
    Ok(CapacityValue::estimate(best))
}

fn shoot_mode_action(
    system: &SeparableSystem,
    j: usize,
    mode_energy: f64,
    minima: &[(f64, f64)],
) -> Result<f64> {
    let comp = &system.components[j];
    let (q_lo, q_hi) = ebk::turning_points(comp, mode_energy)?;
    let n = system.dof();
    let mut z = vec![0.0; 2 * n];
    for (k, m) in minima.iter().enumerate() {
        z[k] = m.0;
    }
    z[j] = q_hi;
    let vmax = (2.0 * (mode_energy - minima[j].1) / comp.m).sqrt();
    let dt = (q_hi - q_lo) / vmax / 4000.0;
    let mut grad = vec![0.0; n];
    let mut kin = vec![0.0; n];
    system.potential_gradient(&z[..n], &mut grad);
    let mut action = 0.0;
    let mut crossings = 0;
    for _ in 0..50_000_000u64 {
        let (q_old, p_old) = (z[j], z[n + j]);
        crate::nonsqueezing::verlet_advance(system, &mut z, dt, 1, &mut grad, &mut kin);
        let (q_new, p_new) = (z[j], z[n + j]);
        if !q_new.is_finite() || !p_new.is_finite() {
            return Err(Error::Flow("orbit shooting diverged".into()));
        }
        if p_old < 0.0 && p_new >= 0.0 {
            crossings += 1;
        }
        if p_old > 0.0 && p_new <= 0.0 && crossings >= 1 {
            // close the loop at the interpolated turning point
            let f = p_old / (p_old - p_new);
            let q_end = q_old + f * (q_new - q_old);
            action += 0.5 * p_old * (q_end - q_old);
            return Ok(action);
        }
        action += 0.5 * (p_old + p_new) * (q_new - q_old);
    }
    Err(Error::Flow("periodic orbit did not close".into()))
}
