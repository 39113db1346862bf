//! Quantum-blob and EBK quantization.
//!
//! A quantum blob is a region of capacity `(n + 1/2) h`. Requiring the energy
//! shell of a quadratic Hamiltonian (or each action-angle circle of an
//! integrable system) to bound one reproduces `E = sum_j (n_j + 1/2) hbar w_j`
//! and, for general one-dimensional potentials, the EBK rule
//! `oint p dq = (n + mu/4) h` with Maslov index `mu = 2` per librational loop.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{volume_ball, CapacityAmount, CapacityValue};
use crate::error::{Error, Result};
use crate::potential::Potential1D;
use crate::quadrature::{GaussLegendre, DEFAULT_NODES};
use crate::symplectic::{williamson, QuadraticHamiltonian, WilliamsonDecomposition};

/// Maslov index of one librational loop (two caustic touches).
pub const LIBRATION_MASLOV: i32 = 2;
/// Tolerance on the integer in the EBK condition.
pub const EBK_INTEGER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanckConfig {
    pub hbar: f64,
}

impl Default for PlanckConfig {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

impl PlanckConfig {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { hbar })
    }

    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumBlobIndex {
    pub n: u32,
}

impl QuantumBlobIndex {
    /// `(n + 1/2) h`
    pub fn target_area(&self, cfg: &PlanckConfig) -> f64 {
        (self.n as f64 + 0.5) * cfg.h()
    }
}

/// The unique `n >= 0` with `|cap - (n + 1/2) h| <= tol h`, if there is one.
pub fn blob_check(cap: &CapacityValue, cfg: &PlanckConfig, tol: f64) -> Result<Option<u32>> {
    let value = match cap.value {
        CapacityAmount::Finite(v) => v,
        CapacityAmount::Infinite => return Err(Error::NotABlob),
    };
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be >= 0, got {tol}")));
    }
    let x = value / cfg.h() - 0.5;
    let lo = (x - tol).floor().max(0.0) as u64;
    let hi = (x + tol).ceil().max(0.0) as u64;
    let mut hits = (lo..=hi).filter(|&n| (x - n as f64).abs() <= tol);
    match (hits.next(), hits.next()) {
        (Some(n), None) => Ok(Some(n as u32)),
        _ => Ok(None),
    }
}

/// `(1/h) action - mu/4` when it is a nonnegative integer within [`EBK_INTEGER_TOL`].
pub fn ebk_integer(action: f64, maslov: i64, cfg: &PlanckConfig) -> Option<i64> {
    let k = action / cfg.h() - 0.25 * maslov as f64;
    let r = k.round();
    ((k - r).abs() <= EBK_INTEGER_TOL && r >= 0.0).then_some(r as i64)
}

/// One quantized state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub quanta: Vec<u32>,
    pub energy: f64,
    /// `oint p dq` of each basis loop.
    pub actions: Vec<f64>,
    pub maslov: Vec<i32>,
}

impl SpectrumEntry {
    /// Checks `(1/h) action_j - mu_j/4 = n_j` for every basis loop.
    pub fn satisfies_ebk(&self, cfg: &PlanckConfig) -> bool {
        self.actions
            .iter()
            .zip(&self.maslov)
            .zip(&self.quanta)
            .all(|((a, m), n)| ebk_integer(*a, *m as i64, cfg) == Some(*n as i64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedLevel {
    pub quanta: Vec<u32>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub hbar: f64,
    pub entries: Vec<SpectrumEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedLevel>,
}

/// Normal-mode indices of `w` ordered so that mode `j` is the one living
/// mostly in the plane `(q_j, p_j)`; for uncoupled oscillators mode `j` is oscillator `j`.
pub fn modes_by_coordinate(w: &WilliamsonDecomposition) -> Vec<usize> {
    let n = w.omegas.len();
    let inv = w.s.inverse();
    let m = inv.matrix();
    let mut weights = Vec::with_capacity(n * n);
    for mode in 0..n {
        for coord in 0..n {
            let mut acc = 0.0;
            for col in [mode, n + mode] {
                for row in [coord, n + coord] {
                    acc += m[(row, col)] * m[(row, col)];
                }
            }
            weights.push((acc, mode, coord));
        }
    }
    weights.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut order = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, mode, coord) in weights {
        if order[coord] == usize::MAX && !used[mode] {
            order[coord] = mode;
            used[mode] = true;
        }
    }
    order
}

/// `E = sum_j (n_j + 1/2) hbar w_j`, with `n_j` attached to the mode of coordinate pair `j`.
pub fn quantize_quadratic(h: &QuadraticHamiltonian, quanta: &[u32], cfg: &PlanckConfig) -> Result<SpectrumEntry> {
    if quanta.len() != h.dof() {
        return Err(Error::Dimension(format!(
            "expected {} quantum numbers, got {}",
            h.dof(),
            quanta.len()
        )));
    }
    let w = williamson(h)?;
    let order = modes_by_coordinate(&w);
    let mut energy = 0.0;
    let mut actions = Vec::with_capacity(quanta.len());
    for (&n, &mode) in quanta.iter().zip(&order) {
        let omega = w.omegas[mode];
        let mode_energy = (n as f64 + 0.5) * cfg.hbar * omega;
        energy += mode_energy;
        // capacity of the mode's circle: pi w I = 2 pi E_j / w
        actions.push(2.0 * PI * mode_energy / omega);
    }
    Ok(SpectrumEntry {
        quanta: quanta.to_vec(),
        energy,
        actions,
        maslov: vec![LIBRATION_MASLOV; quanta.len()],
    })
}

fn default_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(DEFAULT_NODES))
}

const SCAN_POINTS: usize = 2048;

fn bisect_crossing(pot: &Potential1D, energy: f64, mut inside: f64, mut outside: f64) -> f64 {
    // V(inside) <= E < V(outside)
    for _ in 0..2000 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if pot.value(mid) <= energy {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    if (pot.value(inside) - energy).abs() <= (pot.value(outside) - energy).abs() {
        inside
    } else {
        outside
    }
}

fn search_side(pot: &Potential1D, energy: f64, q0: f64, dir: f64, limit: Option<f64>) -> Result<f64> {
    let mut step = 1e-6 * q0.abs().max(1.0);
    let mut inside = q0;
    loop {
        let mut q = q0 + dir * step;
        let mut at_limit = false;
        if let Some(l) = limit.filter(|l| l.is_finite()) {
            if (q - l) * dir >= 0.0 {
                q = l;
                at_limit = true;
            }
        }
        if pot.value(q) > energy {
            return Ok(bisect_crossing(pot, energy, inside, q));
        }
        if at_limit || step > 1e12 {
            return Err(Error::NotConfining { energy });
        }
        inside = q;
        step *= 2.0;
    }
}

/// Classical turning points `q_- < q_+` with `V(q_+-) = E`.
pub fn turning_points(pot: &Potential1D, energy: f64) -> Result<(f64, f64)> {
    pot.validate()?;
    if !energy.is_finite() {
        return Err(Error::InvalidInput(format!("energy must be finite, got {energy}")));
    }
    let (q0, vmin) = pot.minimum();
    if energy < vmin {
        return Err(Error::NoClassicalRegion { energy, minimum: vmin });
    }
    if energy == vmin {
        return Ok((q0, q0));
    }
    let [blo, bhi] = pot.bracket.unwrap_or([f64::NEG_INFINITY, f64::INFINITY]);
    let q_minus = search_side(pot, energy, q0, -1.0, Some(blo))?;
    let q_plus = search_side(pot, energy, q0, 1.0, Some(bhi))?;

    // a second allowed interval would have to sit among the critical points
    let w = pot.critical_window();
    let lo = q_minus.min(-w);
    let hi = q_plus.max(w);
    let slack = 1e-12 * energy.abs().max(1.0);
    for i in 0..=SCAN_POINTS {
        let q = lo + (hi - lo) * i as f64 / SCAN_POINTS as f64;
        let excess = pot.value(q) - energy;
        let inside = q > q_minus && q < q_plus;
        let outside = q < q_minus || q > q_plus;
        if (inside && excess > slack) || (outside && excess < -slack) {
            return Err(Error::MultiWell { energy });
        }
    }
    Ok((q_minus, q_plus))
}

/// `oint p dq = 2 int_{q-}^{q+} sqrt(2 m (E - V)) dq`.
pub fn action_integral(pot: &Potential1D, energy: f64) -> Result<f64> {
    action_integral_with(pot, energy, default_rule())
}

pub fn action_integral_with(pot: &Potential1D, energy: f64, rule: &GaussLegendre) -> Result<f64> {
    let (a, b) = turning_points(pot, energy)?;
    if a == b {
        return Ok(0.0);
    }
    let two_m = 2.0 * pot.m;
    Ok(2.0 * rule.integrate_sine_substituted(a, b, |q| (two_m * (energy - pot.value(q)).max(0.0)).sqrt()))
}

/// Largest confined energy in `[lo, hi]` when `lo` is confined and `hi` is not.
fn confinement_edge(pot: &Potential1D, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match turning_points(pot, mid) {
            Ok(_) => lo = mid,
            Err(_) => hi = mid,
        }
    }
    lo
}

/// Energy of level `n`: the root of `oint p dq = (n + 1/2) h`.
pub fn energy_level(pot: &Potential1D, n: u32, cfg: &PlanckConfig) -> Result<SpectrumEntry> {
    let target = (n as f64 + 0.5) * cfg.h();
    let (_, vmin) = pot.minimum();
    let omega0 = pot.curvature_frequency();
    let mut step = if omega0 > 0.0 {
        cfg.hbar * omega0
    } else {
        1e-2 * cfg.hbar * vmin.abs().max(1.0)
    };
    let mut lo = vmin;
    let mut hi;
    loop {
        hi = vmin + step;
        match action_integral(pot, hi) {
            Ok(a) if a >= target => break,
            Ok(_) => {
                lo = hi;
                step *= 2.0;
            }
            Err(Error::NotConfining { .. }) => {
                let edge = confinement_edge(pot, lo, hi);
                match action_integral(pot, edge) {
                    Ok(a) if a >= target => {
                        hi = edge;
                        break;
                    }
                    _ => return Err(Error::LevelNotBound { n }),
                }
            }
            Err(e) => return Err(e),
        }
        if step > 1e15 * cfg.hbar.max(1.0) {
            return Err(Error::LevelNotBound { n });
        }
    }

    let f = |e: f64| action_integral(pot, e).map(|a| a - target);
    let mut f_lo = -target;
    let mut f_hi = f(hi)?;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm < 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    // secant polish, kept inside the bracket
    let scale = hi.abs().max(lo.abs()).max(cfg.hbar * omega0).max(f64::MIN_POSITIVE);
    let (mut x0, mut f0, mut x1, mut f1) = (lo, f_lo, hi, f_hi);
    let mut energy = if f_hi.abs() < f_lo.abs() { hi } else { lo };
    for _ in 0..100 {
        if f1 == f0 {
            break;
        }
        let mut x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 > lo && x2 < hi) {
            x2 = 0.5 * (lo + hi);
        }
        let f2 = f(x2)?;
        if f2 < 0.0 {
            lo = x2;
        } else {
            hi = x2;
        }
        let dx = (x2 - x1).abs();
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        energy = x2;
        if dx <= 1e-14 * scale || f2 == 0.0 || hi - lo <= 1e-15 * scale {
            break;
        }
    }
    let action = action_integral(pot, energy)?;
    Ok(SpectrumEntry {
        quanta: vec![n],
        energy,
        actions: vec![action],
        maslov: vec![LIBRATION_MASLOV],
    })
}

const MONOTONE_SAMPLES: usize = 16;

fn check_monotone(pot: &Potential1D, top: f64) -> Result<()> {
    let (_, vmin) = pot.minimum();
    let mut prev = 0.0;
    for i in 1..=MONOTONE_SAMPLES {
        let e = vmin + (top - vmin) * i as f64 / MONOTONE_SAMPLES as f64;
        let a = action_integral(pot, e)?;
        if !(a > prev) {
            return Err(Error::NonMonotoneAction { energy: e });
        }
        prev = a;
    }
    Ok(())
}

/// Levels `n = 0..=n_max`; levels that are not bound are skipped with a notice.
pub fn spectrum_1d(pot: &Potential1D, n_max: u32, cfg: &PlanckConfig) -> Result<SpectrumResult> {
    pot.validate()?;
    let results: Vec<Result<SpectrumEntry>> = (0..=n_max).into_par_iter().map(|n| energy_level(pot, n, cfg)).collect();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (n, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => entries.push(e),
            Err(err @ Error::LevelNotBound { .. }) => skipped.push(SkippedLevel {
                quanta: vec![n as u32],
                reason: err.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if let Some(top) = entries.last() {
        check_monotone(pot, top.energy)?;
    }
    if entries.windows(2).any(|w| !(w[1].energy > w[0].energy)) {
        return Err(Error::NumericalDegeneracy("energies are not strictly increasing".into()));
    }
    Ok(SpectrumResult { hbar: cfg.hbar, entries, skipped })
}

/// `E = sum_j E^{(j)}_{n_j}` for independent components.
pub fn spectrum_separable(pots: &[Potential1D], quanta: &[u32], cfg: &PlanckConfig) -> Result<SpectrumEntry> {
    if pots.len() != quanta.len() || pots.is_empty() {
        return Err(Error::Dimension(format!(
            "{} components but {} quantum numbers",
            pots.len(),
            quanta.len()
        )));
    }
    let parts = pots
        .par_iter()
        .zip(quanta.par_iter())
        .map(|(p, &n)| energy_level(p, n, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumEntry {
        quanta: quanta.to_vec(),
        energy: parts.iter().map(|e| e.energy).sum(),
        actions: parts.iter().map(|e| e.actions[0]).collect(),
        maslov: vec![LIBRATION_MASLOV; quanta.len()],
    })
}

/// A loop `gamma = sum_j nu_j eps_j` on a quantized torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub nu: Vec<i64>,
    pub action: f64,
    pub maslov: i64,
    /// `(1/h) action - maslov/4` when it is a nonnegative integer and every `nu_j >= 0`.
    pub ebk_integer: Option<i64>,
}

pub fn loop_action(basis_actions: &[f64], nu: &[i64], cfg: &PlanckConfig) -> Result<LoopRecord> {
    if basis_actions.len() != nu.len() {
        return Err(Error::Dimension("winding numbers and basis actions differ in length".into()));
    }
    let action: f64 = basis_actions.iter().zip(nu).map(|(a, &v)| a * v as f64).sum();
    let maslov = 2 * nu.iter().sum::<i64>();
    let integer = if nu.iter().all(|&v| v >= 0) {
        ebk_integer(action, maslov, cfg)
    } else {
        None
    };
    Ok(LoopRecord {
        nu: nu.to_vec(),
        action,
        maslov,
        ebk_integer: integer,
    })
}

/// Relative spread under which a spectrum counts as isotropic.
const ISOTROPY_TOL: f64 = 1e-10;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `g(E) = (1/hbar w)^N E^{N-1} / (N-1)!` for `N` identical oscillators.
pub fn density_of_states(h: &QuadraticHamiltonian, energy: f64, cfg: &PlanckConfig) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::InvalidInput(format!("energy must be positive, got {energy}")));
    }
    let w = williamson(h)?;
    let (max, min) = (w.omegas[0], *w.omegas.last().expect("N >= 1"));
    if (max - min) > ISOTROPY_TOL * max {
        return Err(Error::UnsupportedForClosedForm(format!(
            "symplectic spectrum spans [{min}, {max}]; closed form needs equal frequencies"
        )));
    }
    let n = w.omegas.len();
    let omega = w.omegas.iter().sum::<f64>() / n as f64;
    Ok((1.0 / (cfg.hbar * omega)).powi(n as i32) * energy.powi(n as i32 - 1) / factorial(n - 1))
}

/// Number of states `Vol(Omega(E)) / h^N` below `E`.
pub fn state_count(h: &QuadraticHamiltonian, energy: f64, cfg: &PlanckConfig) -> Result<f64> {
    let w = williamson(h)?;
    state_count_from(&w, energy, cfg)
}

fn state_count_from(w: &WilliamsonDecomposition, energy: f64, cfg: &PlanckConfig) -> Result<f64> {
    let n = w.omegas.len();
    let (max, min) = (w.omegas[0], *w.omegas.last().expect("N >= 1"));
    let volume = if (max - min) <= ISOTROPY_TOL * max {
        // the shell is the ball B(sqrt(2E/w)) in rescaled coordinates
        volume_ball((2.0 * energy / max).sqrt(), n)?
    } else {
        (2.0 * PI * energy).powi(n as i32) / (factorial(n) * w.omegas.iter().product::<f64>())
    };
    Ok(volume / cfg.h().powi(n as i32))
}

/// Default relative step for [`density_of_states_numerical`].
pub const DOS_STEP: f64 = 1e-4;

/// Central difference of [`state_count`] in `E`.
pub fn density_of_states_numerical(
    h: &QuadraticHamiltonian,
    energy: f64,
    cfg: &PlanckConfig,
    rel_step: f64,
) -> Result<f64> {
    if !(energy > 0.0) || !(rel_step > 0.0 && rel_step < 1.0) {
        return Err(Error::InvalidInput("energy must be positive and the step in (0, 1)".into()));
    }
    let w = williamson(h)?;
    let d = rel_step * energy;
    let up = state_count_from(&w, energy + d, cfg)?;
    let down = state_count_from(&w, energy - d, cfg)?;
    Ok((up - down) / (2.0 * d))
}
