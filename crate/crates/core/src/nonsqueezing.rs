//! Shadows of symplectic images of balls.
//!
//! For a linear symplectic map the projection of `S B(R)` onto a plane is an
//! ellipse of area `pi R^2 sqrt(det (S S^T)_plane)`, and on every conjugate
//! plane that determinant is at least one. For nonlinear flows the ball is
//! sampled, advected with Stormer-Verlet, and its projection rasterized.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::Ball;
use crate::error::{Error, Result};
use crate::plane::PlaneSelector;
use crate::potential::Potential1D;
use crate::sampling::BallSampler;
use crate::symplectic::{random_symplectic, symplectic_defect, PhaseVector, SymplecticMatrix};

/// `H(q, p) = T(p) + V(q)`.
pub trait SeparableHamiltonian: Send + Sync {
    fn dof(&self) -> usize;
    fn kinetic(&self, p: &[f64]) -> f64;
    fn kinetic_gradient(&self, p: &[f64], out: &mut [f64]);
    fn potential(&self, q: &[f64]) -> f64;
    fn potential_gradient(&self, q: &[f64], out: &mut [f64]);

    fn energy(&self, z: &[f64]) -> f64 {
        let n = self.dof();
        self.kinetic(&z[n..]) + self.potential(&z[..n])
    }
}

/// Independent one-dimensional components, `H = sum_j p_j^2 / 2 m_j + V_j(q_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableSystem {
    pub components: Vec<Potential1D>,
}

impl SeparableSystem {
    pub fn new(components: Vec<Potential1D>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Dimension("a separable system needs at least one component".into()));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    /// The same component in every degree of freedom.
    pub fn uniform(dof: usize, component: Potential1D) -> Result<Self> {
        Self::new(vec![component; dof])
    }
}

impl SeparableHamiltonian for SeparableSystem {
    fn dof(&self) -> usize {
        self.components.len()
    }

    fn kinetic(&self, p: &[f64]) -> f64 {
        self.components.iter().zip(p).map(|(c, p)| 0.5 * p * p / c.m).sum()
    }

    fn kinetic_gradient(&self, p: &[f64], out: &mut [f64]) {
        for ((o, c), p) in out.iter_mut().zip(&self.components).zip(p) {
            *o = p / c.m;
        }
    }

    fn potential(&self, q: &[f64]) -> f64 {
        self.components.iter().zip(q).map(|(c, q)| c.value(*q)).sum()
    }

    fn potential_gradient(&self, q: &[f64], out: &mut [f64]) {
        for ((o, c), q) in out.iter_mut().zip(&self.components).zip(q) {
            *o = c.derivative(*q);
        }
    }
}

/// A separable Hamiltonian with a fixed Stormer-Verlet step.
#[derive(Clone)]
pub struct FlowSpec {
    pub hamiltonian: Arc<dyn SeparableHamiltonian>,
    pub dt: f64,
    pub steps: usize,
}

impl fmt::Debug for FlowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSpec")
            .field("dof", &self.hamiltonian.dof())
            .field("dt", &self.dt)
            .field("steps", &self.steps)
            .finish()
    }
}

const GRADIENT_CHECK_TOL: f64 = 1e-6;

impl FlowSpec {
    /// Validates `dt` and checks the supplied gradients against central differences.
    pub fn new(hamiltonian: Arc<dyn SeparableHamiltonian>, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        let n = hamiltonian.dof();
        if n == 0 {
            return Err(Error::Dimension("flow needs at least one degree of freedom".into()));
        }
        for spot in [-0.37, 0.11, 0.53] {
            let x: Vec<f64> = (0..n).map(|k| spot * (1.0 + 0.1 * k as f64)).collect();
            check_gradient(&x, |v| hamiltonian.potential(v), |v, o| hamiltonian.potential_gradient(v, o))?;
            check_gradient(&x, |v| hamiltonian.kinetic(v), |v, o| hamiltonian.kinetic_gradient(v, o))?;
        }
        Ok(Self { hamiltonian, dt, steps })
    }

    pub fn separable(system: SeparableSystem, dt: f64, steps: usize) -> Result<Self> {
        Self::new(Arc::new(system), dt, steps)
    }

    pub fn dof(&self) -> usize {
        self.hamiltonian.dof()
    }
}

fn check_gradient(
    x: &[f64],
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64], &mut [f64]),
) -> Result<()> {
    let mut g = vec![0.0; x.len()];
    grad(x, &mut g);
    let mut y = x.to_vec();
    for k in 0..x.len() {
        let h = 1e-5 * x[k].abs().max(1.0);
        y[k] = x[k] + h;
        let fp = f(&y);
        y[k] = x[k] - h;
        let fm = f(&y);
        y[k] = x[k];
        let fd = (fp - fm) / (2.0 * h);
        if !g[k].is_finite() || (g[k] - fd).abs() > GRADIENT_CHECK_TOL * g[k].abs().max(fd.abs()) + 1e-9 {
            return Err(Error::Flow(format!(
                "gradient component {k} = {} disagrees with finite difference {fd}",
                g[k]
            )));
        }
    }
    Ok(())
}

/// `steps` kick-drift-kick steps in place.
///
/// `grad` must hold `grad V(q)` on entry and holds it for the final `q` on exit.
pub(crate) fn verlet_advance<H: SeparableHamiltonian + ?Sized>(
    h: &H,
    z: &mut [f64],
    dt: f64,
    steps: usize,
    grad: &mut [f64],
    kin: &mut [f64],
) {
    let n = h.dof();
    let half = 0.5 * dt;
    for _ in 0..steps {
        let (q, p) = z.split_at_mut(n);
        for (p, g) in p.iter_mut().zip(grad.iter()) {
            *p -= half * g;
        }
        h.kinetic_gradient(p, kin);
        for (q, v) in q.iter_mut().zip(kin.iter()) {
            *q += dt * v;
        }
        h.potential_gradient(q, grad);
        for (p, g) in p.iter_mut().zip(grad.iter()) {
            *p -= half * g;
        }
    }
}

/// One Stormer-Verlet step.
pub fn verlet_step(state: &PhaseVector, flow: &FlowSpec) -> Result<PhaseVector> {
    let n = flow.dof();
    if state.dof() != n {
        return Err(Error::Dimension("state and flow dimensions differ".into()));
    }
    let mut z = state.as_slice().to_vec();
    let mut grad = vec![0.0; n];
    let mut kin = vec![0.0; n];
    flow.hamiltonian.potential_gradient(&z[..n], &mut grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Flow("non-finite potential gradient".into()));
    }
    verlet_advance(flow.hamiltonian.as_ref(), &mut z, flow.dt, 1, &mut grad, &mut kin);
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::Flow("non-finite state after step".into()));
    }
    PhaseVector::new(z)
}

/// `flow.steps` Stormer-Verlet steps.
pub fn evolve(state: &PhaseVector, flow: &FlowSpec) -> Result<PhaseVector> {
    let n = flow.dof();
    if state.dof() != n {
        return Err(Error::Dimension("state and flow dimensions differ".into()));
    }
    let mut z = state.as_slice().to_vec();
    let mut grad = vec![0.0; n];
    let mut kin = vec![0.0; n];
    flow.hamiltonian.potential_gradient(&z[..n], &mut grad);
    verlet_advance(flow.hamiltonian.as_ref(), &mut z, flow.dt, flow.steps, &mut grad, &mut kin);
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::FlowDiverged { time: flow.dt * flow.steps as f64 });
    }
    PhaseVector::new(z)
}

/// Determinant of the central-difference Jacobian of one step (Liouville check).
pub fn step_jacobian_determinant(state: &PhaseVector, flow: &FlowSpec, eps: f64) -> Result<f64> {
    let d = state.as_slice().len();
    let mut jac = DMatrix::zeros(d, d);
    for k in 0..d {
        let mut plus = state.clone();
        let mut minus = state.clone();
        plus.as_mut_slice()[k] += eps;
        minus.as_mut_slice()[k] -= eps;
        let fp = verlet_step(&plus, flow)?;
        let fm = verlet_step(&minus, flow)?;
        for r in 0..d {
            jac[(r, k)] = (fp.as_slice()[r] - fm.as_slice()[r]) / (2.0 * eps);
        }
    }
    Ok(jac.lu().determinant())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShadowMethod {
    ExactEllipse,
    GridEstimate,
}

impl fmt::Display for ShadowMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShadowMethod::ExactEllipse => "exact-ellipse",
            ShadowMethod::GridEstimate => "grid-estimate",
        })
    }
}

/// Projected area of a transformed ball against the bound `pi R^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    pub plane: PlaneSelector,
    pub area: f64,
    pub bound: f64,
    /// `true` when the plane is conjugate, i.e. the bound is a theorem there.
    pub bound_applies: bool,
    /// `area >= bound (1 - tolerance)` on conjugate planes; always `true` elsewhere.
    pub satisfied: bool,
    pub method: ShadowMethod,
    /// Relative tolerance used for `satisfied`.
    pub tolerance: f64,
}

impl ShadowReport {
    fn new(plane: PlaneSelector, area: f64, bound: f64, method: ShadowMethod, tolerance: f64) -> Self {
        let bound_applies = plane.is_conjugate();
        Self {
            plane,
            area,
            bound,
            bound_applies,
            satisfied: !bound_applies || area >= bound * (1.0 - tolerance),
            method,
            tolerance,
        }
    }
}

/// Tolerance on the exact-ellipse comparison.
pub const LINEAR_TOL: f64 = 1e-9;

/// `det (S S^T)` restricted to `plane`.
pub fn shadow_determinant(s: &SymplecticMatrix, plane: PlaneSelector) -> Result<f64> {
    let n = s.dof();
    plane.validate(n)?;
    let (a, b) = plane.coordinates(n);
    let m = s.matrix();
    let row_dot = |i: usize, k: usize| m.row(i).dot(&m.row(k));
    let (aa, bb, ab) = (row_dot(a, a), row_dot(b, b), row_dot(a, b));
    Ok(aa * bb - ab * ab)
}

/// Exact area of the projection of `S B(R)` onto `plane`.
pub fn linear_shadow_area(s: &SymplecticMatrix, radius: f64, plane: PlaneSelector) -> Result<ShadowReport> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let det = shadow_determinant(s, plane)?;
    let bound = PI * radius * radius;
    Ok(ShadowReport::new(
        plane,
        bound * det.max(0.0).sqrt(),
        bound,
        ShadowMethod::ExactEllipse,
        LINEAR_TOL,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneWitness {
    /// Index of the ensemble member.
    pub member: usize,
    pub plane: PlaneSelector,
    pub det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub count: usize,
    pub sigma: f64,
    pub seed: u64,
    pub min_conjugate_det: f64,
    pub min_conjugate_witness: PlaneWitness,
    /// `None` when `N = 1` (no nonconjugate planes exist).
    pub min_nonconjugate_det: Option<f64>,
    pub nonconjugate_witness: Option<PlaneWitness>,
    /// Every conjugate determinant is `>= 1 - 1e-9`.
    pub conjugate_bound_holds: bool,
    pub max_symplectic_defect: f64,
}

/// Seeds of the ensemble members, derived from the ensemble seed.
fn member_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random()).collect()
}

pub fn nonsqueeze_ensemble(dof: usize, count: usize, sigma: f64, seed: u64) -> Result<EnsembleSummary> {
    if count == 0 {
        return Err(Error::InvalidInput("ensemble count must be positive".into()));
    }
    let planes = PlaneSelector::all(dof);
    let seeds = member_seeds(seed, count);
    let per_member: Vec<(Vec<f64>, f64)> = seeds
        .par_iter()
        .map(|&s| {
            let m = random_symplectic(dof, sigma, s)?;
            let dets = planes
                .iter()
                .map(|&p| shadow_determinant(&m, p))
                .collect::<Result<Vec<_>>>()?;
            Ok((dets, symplectic_defect(m.matrix())?))
        })
        .collect::<Result<_>>()?;

    let mut conj: Option<PlaneWitness> = None;
    let mut nonconj: Option<PlaneWitness> = None;
    let mut max_defect: f64 = 0.0;
    for (member, (dets, defect)) in per_member.iter().enumerate() {
        max_defect = max_defect.max(*defect);
        for (&plane, &det) in planes.iter().zip(dets) {
            let slot = if plane.is_conjugate() { &mut conj } else { &mut nonconj };
            if slot.as_ref().is_none_or(|w| det < w.det) {
                *slot = Some(PlaneWitness { member, plane, det });
            }
        }
    }
    let conj = conj.expect("every N >= 1 has a conjugate plane");
    Ok(EnsembleSummary {
        n: dof,
        count,
        sigma,
        seed,
        min_conjugate_det: conj.det,
        conjugate_bound_holds: conj.det >= 1.0 - LINEAR_TOL,
        min_conjugate_witness: conj,
        min_nonconjugate_det: nonconj.as_ref().map(|w| w.det),
        nonconjugate_witness: nonconj,
        max_symplectic_defect: max_defect,
    })
}

/// Relative allowance for sampling and rasterization bias on the grid estimate.
pub const GRID_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub samples: usize,
    pub grid_cell: f64,
    /// Nondecreasing, nonnegative snapshot times.
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    /// Keep the projected point clouds for export.
    pub keep_points: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedShadowReport {
    pub time: f64,
    #[serde(flatten)]
    pub report: ShadowReport,
}

/// Projected samples of one plane at one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedCloud {
    pub time: f64,
    pub plane: PlaneSelector,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvolveOutput {
    pub reports: Vec<TimedShadowReport>,
    pub clouds: Vec<ProjectedCloud>,
}

/// Grid-occupancy area of a planar point cloud.
pub fn grid_area(points: &[[f64; 2]], cell: f64) -> f64 {
    let occupied = points
        .par_chunks(4096)
        .fold(HashSet::new, |mut set, chunk| {
            for p in chunk {
                set.insert(((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64));
            }
            set
        })
        .reduce(HashSet::new, |mut a, b| {
            if a.len() < b.len() {
                return b.into_iter().chain(a).collect();
            }
            a.extend(b);
            a
        });
    occupied.len() as f64 * cell * cell
}

/// Advects quasi-random samples of `ball` and estimates the shadow area on
/// every plane in `planes` at every snapshot time.
pub fn evolve_ball_shadows(
    ball: &Ball,
    flow: &FlowSpec,
    planes: &[PlaneSelector],
    opts: &EvolveOptions,
) -> Result<EvolveOutput> {
    let n = flow.dof();
    if ball.dof() != n {
        return Err(Error::Dimension("ball and flow dimensions differ".into()));
    }
    for p in planes {
        p.validate(n)?;
    }
    if opts.samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    if !(opts.grid_cell > 0.0) || !opts.grid_cell.is_finite() {
        return Err(Error::InvalidInput(format!("grid cell must be positive, got {}", opts.grid_cell)));
    }
    if opts.snapshot_times.iter().any(|t| !(*t >= 0.0) || !t.is_finite())
        || opts.snapshot_times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidInput("snapshot times must be finite, nonnegative and nondecreasing".into()));
    }
    let step_marks: Vec<usize> = opts
        .snapshot_times
        .iter()
        .map(|t| (t / flow.dt).round() as usize)
        .collect();
    let coords: Vec<(usize, usize)> = planes.iter().map(|p| p.coordinates(n)).collect();
    let snaps = step_marks.len();
    let sampler = BallSampler::new(ball.center.as_slice(), ball.radius, Some(opts.seed));
    let h = flow.hamiltonian.as_ref();
    let dt = flow.dt;

    const CHUNK: usize = 2048;
    // per chunk: projected points per (snapshot, plane), earliest divergent snapshot
    type Chunk = (Vec<Vec<[f64; 2]>>, Option<usize>);
    let chunks: Vec<Chunk> = (0..opts.samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(opts.samples);
            let mut proj = vec![Vec::with_capacity(end - start); snaps * planes.len()];
            let mut diverged: Option<usize> = None;
            let mut z = vec![0.0; 2 * n];
            let mut grad = vec![0.0; n];
            let mut kin = vec![0.0; n];
            for i in start..end {
                sampler.point(i as u64, &mut z);
                h.potential_gradient(&z[..n], &mut grad);
                let mut done = 0;
                for (s, &mark) in step_marks.iter().enumerate() {
                    verlet_advance(h, &mut z, dt, mark - done, &mut grad, &mut kin);
                    done = mark;
                    if z.iter().any(|x| !x.is_finite()) {
                        diverged = Some(diverged.map_or(s, |d| d.min(s)));
                        break;
                    }
                    for (k, &(a, b)) in coords.iter().enumerate() {
                        proj[s * planes.len() + k].push([z[a], z[b]]);
                    }
                }
            }
            (proj, diverged)
        })
        .collect();

    if let Some(s) = chunks.iter().filter_map(|c| c.1).min() {
        return Err(Error::FlowDiverged { time: opts.snapshot_times[s] });
    }

    let bound = PI * ball.radius * ball.radius;
    let tolerance = GRID_TOL + 2.0 * opts.grid_cell / ball.radius;
    let mut out = EvolveOutput::default();
    for (s, &time) in opts.snapshot_times.iter().enumerate() {
        for (k, &plane) in planes.iter().enumerate() {
            let idx = s * planes.len() + k;
            let points: Vec<[f64; 2]> = chunks.iter().flat_map(|c| c.0[idx].iter().copied()).collect();
            let area = grid_area(&points, opts.grid_cell);
            out.reports.push(TimedShadowReport {
                time,
                report: ShadowReport::new(plane, area, bound, ShadowMethod::GridEstimate, tolerance),
            });
            if opts.keep_points {
                out.clouds.push(ProjectedCloud { time, plane, points });
            }
        }
    }
    Ok(out)
}

/// Single-plane form of [`evolve_ball_shadows`] with seed 0.
pub fn evolve_ball_shadow(
    ball: &Ball,
    flow: &FlowSpec,
    plane: PlaneSelector,
    samples: usize,
    grid_cell: f64,
    snapshot_times: &[f64],
) -> Result<Vec<TimedShadowReport>> {
    let opts = EvolveOptions {
        samples,
        grid_cell,
        snapshot_times: snapshot_times.to_vec(),
        seed: 0,
        keep_points: false,
    };
    Ok(evolve_ball_shadows(ball, flow, &[plane], &opts)?.reports)
}
