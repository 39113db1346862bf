//! Linear symplectic algebra on `R^{2N}` with coordinates ordered `(q_1..q_N, p_1..p_N)`.
//!
//! The standard form is `J = [[0, I], [-I, 0]]`. A real `2N x 2N` matrix `S` is
//! symplectic when `S^T J S = J`. Quadratic Hamiltonians `H(z) = z^T M z / 2`
//! with `M` symmetric positive definite are brought to normal form
//! `M = S^T diag(w, w) S` by [`williamson`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on `max |S^T J S - J|`.
pub const DEFAULT_SYMPLECTIC_TOL: f64 = 1e-10;
/// Tolerance on `|det S - 1|` for certified matrices.
pub const DET_TOL: f64 = 1e-8;
/// Largest supported number of degrees of freedom.
pub const MAX_DOF: usize = 32;

/// A point of phase space, `(q_1..q_N, p_1..p_N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 || !coords.len().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "phase vector length must be even and >= 2, got {}",
                coords.len()
            )));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dof: usize) -> Self {
        Self(vec![0.0; 2 * dof.max(1)])
    }

    /// Number of degrees of freedom `N`.
    pub fn dof(&self) -> usize {
        self.0.len() / 2
    }

    pub fn q(&self) -> &[f64] {
        &self.0[..self.dof()]
    }

    pub fn p(&self) -> &[f64] {
        &self.0[self.dof()..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for PhaseVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PhaseVector> for Vec<f64> {
    fn from(v: PhaseVector) -> Self {
        v.0
    }
}

/// The standard symplectic form for `N` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardForm {
    dof: usize,
}

impl StandardForm {
    pub fn new(dof: usize) -> Result<Self> {
        if dof == 0 {
            return Err(Error::Dimension("N must be at least 1".into()));
        }
        Ok(Self { dof })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        standard_form(self.dof)
    }
}

/// `J = [[0, I], [-I, 0]]` of size `2N`.
pub fn standard_form(dof: usize) -> DMatrix<f64> {
    let d = 2 * dof;
    let mut j = DMatrix::zeros(d, d);
    for i in 0..dof {
        j[(i, dof + i)] = 1.0;
        j[(dof + i, i)] = -1.0;
    }
    j
}

fn half_dim(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "matrix dimension must be even and positive, got {}",
            m.nrows()
        )));
    }
    Ok(m.nrows() / 2)
}

/// `max |S^T J S - J|`.
pub fn symplectic_defect(s: &DMatrix<f64>) -> Result<f64> {
    let n = half_dim(s)?;
    let j = standard_form(n);
    let d = s.transpose() * &j * s - j;
    Ok(d.amax())
}

pub fn is_symplectic(s: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(symplectic_defect(s)? <= tol)
}

/// A matrix certified to be symplectic at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    entries: DMatrix<f64>,
    tol: f64,
}

impl SymplecticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(entries, DEFAULT_SYMPLECTIC_TOL)
    }

    pub fn with_tolerance(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be >= 0, got {tol}")));
        }
        let n = half_dim(&entries)?;
        if n > MAX_DOF {
            return Err(Error::Dimension(format!("N = {n} exceeds the supported maximum {MAX_DOF}")));
        }
        let defect = symplectic_defect(&entries)?;
        if !(defect <= tol) {
            return Err(Error::NotSymplectic { defect, tol });
        }
        let det = entries.clone().lu().determinant();
        if !((det - 1.0).abs() <= DET_TOL) {
            return Err(Error::NotSymplectic {
                defect: (det - 1.0).abs(),
                tol: DET_TOL,
            });
        }
        Ok(Self { entries, tol })
    }

    pub fn identity(dof: usize) -> Self {
        Self {
            entries: DMatrix::identity(2 * dof, 2 * dof),
            tol: DEFAULT_SYMPLECTIC_TOL,
        }
    }

    /// `diag(scales, 1/scales)`; every scale must be nonzero.
    pub fn diagonal_scaling(scales: &[f64]) -> Result<Self> {
        if scales.iter().any(|&s| s == 0.0 || !s.is_finite()) {
            return Err(Error::InvalidInput("scales must be finite and nonzero".into()));
        }
        let n = scales.len();
        let mut d = DMatrix::zeros(2 * n, 2 * n);
        for (i, &s) in scales.iter().enumerate() {
            d[(i, i)] = s;
            d[(n + i, n + i)] = 1.0 / s;
        }
        Self::new(d)
    }

    pub fn dof(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// `S^{-1} = -J S^T J`, exact for symplectic `S`.
    pub fn inverse(&self) -> Self {
        let j = standard_form(self.dof());
        Self {
            entries: -(&j * self.entries.transpose() * &j),
            tol: self.tol,
        }
    }

    pub fn apply(&self, z: &PhaseVector) -> Result<PhaseVector> {
        if z.as_slice().len() != self.entries.nrows() {
            return Err(Error::Dimension("phase vector and matrix sizes differ".into()));
        }
        let v = &self.entries * DVector::from_column_slice(z.as_slice());
        PhaseVector::new(v.as_slice().to_vec())
    }
}

/// `S1 S2`, re-certified at the looser of the two tolerances.
pub fn compose(a: &SymplecticMatrix, b: &SymplecticMatrix) -> Result<SymplecticMatrix> {
    if a.dof() != b.dof() {
        return Err(Error::Dimension(format!(
            "cannot compose {}x{} with {}x{}",
            a.entries.nrows(),
            a.entries.ncols(),
            b.entries.nrows(),
            b.entries.ncols()
        )));
    }
    SymplecticMatrix::with_tolerance(&a.entries * &b.entries, a.tol.max(b.tol))
}

/// Tolerance used to certify generated matrices.
pub const GENERATED_TOL: f64 = 1e-9;

/// `exp(J A)` with `A` symmetric, entries drawn from `N(0, sigma^2)`.
pub fn random_symplectic(dof: usize, sigma: f64, seed: u64) -> Result<SymplecticMatrix> {
    if dof == 0 || dof > MAX_DOF {
        return Err(Error::Dimension(format!("N must be in 1..={MAX_DOF}, got {dof}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    let d = 2 * dof;
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        for k in i..d {
            let x = normal.sample(&mut rng);
            a[(i, k)] = x;
            a[(k, i)] = x;
        }
    }
    let generator = standard_form(dof) * a;
    SymplecticMatrix::with_tolerance(generator.exp(), GENERATED_TOL)
}

/// Quadratic Hamiltonian `H(z) = z^T M z / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    m: DMatrix<f64>,
}

impl QuadraticHamiltonian {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = half_dim(&m)?;
        if n > MAX_DOF {
            return Err(Error::Dimension(format!("N = {n} exceeds the supported maximum {MAX_DOF}")));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = m.amax();
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric (asymmetry {asym:e})"
            )));
        }
        // store the exactly symmetric part
        let m = (&m + m.transpose()) * 0.5;
        Ok(Self { m })
    }

    /// `H = sum_j (p_j^2 + m^2 w^2 q_j^2) / 2m`.
    pub fn isotropic_oscillator(dof: usize, mass: f64, omega: f64) -> Result<Self> {
        Self::oscillator(mass, &vec![omega; dof])
    }

    /// Uncoupled oscillators of common mass and frequencies `omegas`.
    pub fn oscillator(mass: f64, omegas: &[f64]) -> Result<Self> {
        if !(mass > 0.0) || omegas.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidInput("mass and frequencies must be positive".into()));
        }
        let n = omegas.len();
        if n == 0 {
            return Err(Error::Dimension("N must be at least 1".into()));
        }
        let mut diag = Vec::with_capacity(2 * n);
        diag.extend(omegas.iter().map(|w| mass * w * w));
        diag.extend(std::iter::repeat_n(1.0 / mass, n));
        Self::new(DMatrix::from_diagonal(&DVector::from_vec(diag)))
    }

    pub fn dof(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn energy(&self, z: &[f64]) -> f64 {
        let v = DVector::from_column_slice(z);
        0.5 * v.dot(&(&self.m * &v))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.m.clone()).eigenvalues.min()
    }

    pub fn require_positive_definite(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min > 0.0 {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite { min_eigenvalue: min })
        }
    }

    /// `S^T M S`: the Hamiltonian expressed in coordinates `z = S z'`.
    pub fn conjugated(&self, s: &SymplecticMatrix) -> Result<Self> {
        if s.dof() != self.dof() {
            return Err(Error::Dimension("Hamiltonian and symplectic matrix sizes differ".into()));
        }
        Self::new(s.matrix().transpose() * &self.m * s.matrix())
    }
}

/// `M = S^T diag(w, w) S` with `w` sorted descending.
#[derive(Debug, Clone)]
pub struct WilliamsonDecomposition {
    pub omegas: Vec<f64>,
    pub s: SymplecticMatrix,
    /// `max |S^T D S - M| / max |M|`.
    pub residual: f64,
}

impl WilliamsonDecomposition {
    pub fn omega_max(&self) -> f64 {
        self.omegas[0]
    }

    pub fn diagonal(&self) -> DMatrix<f64> {
        let mut d = self.omegas.clone();
        d.extend_from_slice(&self.omegas);
        DMatrix::from_diagonal(&DVector::from_vec(d))
    }
}

/// Relative gap under which symplectic eigenvalues are treated as one cluster.
const CLUSTER_GAP: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-8;

fn sym_power(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    v * d * v.transpose()
}

pub fn williamson(h: &QuadraticHamiltonian) -> Result<WilliamsonDecomposition> {
    let n = h.dof();
    let m = h.matrix();
    let eig_m = SymmetricEigen::new(m.clone());
    let min = eig_m.eigenvalues.min();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let m_half = sym_power(&eig_m, f64::sqrt);
    let m_inv_half = sym_power(&eig_m, |x| 1.0 / x.sqrt());

    // A = M^{-1/2} J M^{-1/2} is antisymmetric with eigenvalues +-i/w_j.
    let a = &m_inv_half * standard_form(n) * &m_inv_half;
    let a = (&a - a.transpose()) * 0.5;
    let b = a.transpose() * &a;
    let b = (&b + b.transpose()) * 0.5;
    let eig_b = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &k| eig_b.eigenvalues[i].total_cmp(&eig_b.eigenvalues[k]));
    let lam_max = eig_b.eigenvalues.max();
    if !(lam_max > 0.0) {
        return Err(Error::NumericalDegeneracy("vanishing symplectic spectrum".into()));
    }

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let lam = eig_b.eigenvalues[i];
        match clusters.last_mut() {
            Some(c) if lam - eig_b.eigenvalues[*c.last().unwrap()] <= CLUSTER_GAP * lam_max => {
                c.push(i)
            }
            _ => clusters.push(vec![i]),
        }
    }

    // Columns: o_j = v_j (q-block), o_{N+j} = u_j (p-block), with A u = s v.
    let mut u_cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut v_cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut svals: Vec<f64> = Vec::with_capacity(n);
    for cluster in &clusters {
        if cluster.len() % 2 != 0 {
            return Err(Error::NumericalDegeneracy(format!(
                "symplectic eigenvalue cluster of odd size {}",
                cluster.len()
            )));
        }
        let lam: f64 = cluster.iter().map(|&i| eig_b.eigenvalues[i]).sum::<f64>() / cluster.len() as f64;
        if !(lam > 0.0) {
            return Err(Error::NumericalDegeneracy("nonpositive squared eigenvalue".into()));
        }
        let s = lam.sqrt();
        let candidates: Vec<DVector<f64>> = cluster
            .iter()
            .map(|&i| eig_b.eigenvectors.column(i).into_owned())
            .collect();
        let mut local: Vec<DVector<f64>> = Vec::with_capacity(cluster.len());
        for _ in 0..cluster.len() / 2 {
            let (best, norm) = candidates
                .iter()
                .map(|c| {
                    let r = project_out(c, &local);
                    let nr = r.norm();
                    (r, nr)
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("cluster is nonempty");
            if norm < 0.5 {
                return Err(Error::NumericalDegeneracy("eigenvector pairing collapsed".into()));
            }
            let u = best / norm;
            let au = &a * &u;
            let ratio = au.norm() / s;
            if (ratio - 1.0).abs() > 1e-6 {
                return Err(Error::NumericalDegeneracy(format!(
                    "pair residual {:e} in antisymmetric normal form",
                    (ratio - 1.0).abs()
                )));
            }
            let mut v = project_out(&(au / s), &local);
            v -= &u * u.dot(&v);
            let v = v.normalize();
            local.push(u.clone());
            local.push(v.clone());
            u_cols.push(u);
            v_cols.push(v);
            svals.push(s);
        }
    }

    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        o.set_column(j, &v_cols[j]);
        o.set_column(n + j, &u_cols[j]);
    }
    let omegas: Vec<f64> = svals.iter().map(|s| 1.0 / s).collect();
    let mut d_inv_half = Vec::with_capacity(2 * n);
    d_inv_half.extend(omegas.iter().map(|w| 1.0 / w.sqrt()));
    d_inv_half.extend(omegas.iter().map(|w| 1.0 / w.sqrt()));
    let d_inv_half = DMatrix::from_diagonal(&DVector::from_vec(d_inv_half));

    // W = M^{-1/2} O D^{1/2} is symplectic with W^T M W = D, so S = W^{-1}.
    let s = d_inv_half * o.transpose() * m_half;

    let decomposition_matrix = {
        let mut d = omegas.clone();
        d.extend_from_slice(&omegas);
        DMatrix::from_diagonal(&DVector::from_vec(d))
    };
    let recon = s.transpose() * decomposition_matrix * &s;
    let residual = (recon - m).amax() / m.amax();
    if !(residual <= RECONSTRUCTION_TOL) {
        return Err(Error::NumericalDegeneracy(format!(
            "reconstruction residual {residual:e}"
        )));
    }
    let defect = symplectic_defect(&s)?;
    let tol = DEFAULT_SYMPLECTIC_TOL.max(defect * 2.0).max(1e-10 * s.amax().powi(2));
    let s = SymplecticMatrix::with_tolerance(s, tol)?;
    Ok(WilliamsonDecomposition { omegas, s, residual })
}

fn project_out(x: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut r = x.clone();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r -= b * c;
        }
    }
    r
}

/// JSON document `{ "n": N, "matrix": [row-major 4N^2 reals] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub n: usize,
    pub matrix: Vec<f64>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let n = half_dim(m)?;
        let d = 2 * n;
        let mut flat = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                flat.push(m[(r, c)]);
            }
        }
        Ok(Self { n, matrix: flat })
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let d = 2 * self.n;
        if self.n == 0 || self.matrix.len() != d * d {
            return Err(Error::Dimension(format!(
                "expected {} entries for n = {}, got {}",
                d * d,
                self.n,
                self.matrix.len()
            )));
        }
        Ok(DMatrix::from_row_slice(d, d, &self.matrix))
    }
}
