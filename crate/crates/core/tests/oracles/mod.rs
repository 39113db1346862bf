//! Independent reference computations. Nothing in here calls into the
//! library; each routine is the textbook method for its quantity.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Symplectic eigenvalues of a positive-definite `m`, ascending, as the
/// moduli of the imaginary parts of the eigenvalues of `J M`.
pub fn symplectic_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let dim = m.nrows();
    let n = dim / 2;
    let mut j = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    let mut w: Vec<f64> = (&j * m)
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im > 0.0)
        .map(|z| z.im)
        .collect();
    w.sort_by(|a, b| a.total_cmp(b));
    assert_eq!(w.len(), n, "J M must have N eigenvalues with positive imaginary part");
    w
}

/// Energy levels of `p^2 / (2 m) + lambda q^4 / 4` from a truncated harmonic
/// oscillator basis of frequency `w0` (ascending).
pub fn quartic_levels_by_diagonalization(m: f64, lambda: f64, basis: usize, w0: f64) -> Vec<f64> {
    // work in a slightly larger space so q^4 and p^2 are exact on the kept block
    let big = basis + 4;
    let mut a = DMatrix::<f64>::zeros(big, big);
    for k in 1..big {
        a[(k - 1, k)] = (k as f64).sqrt();
    }
    let ad = a.transpose();
    let q = (&a + &ad) * (1.0 / (2.0 * m * w0)).sqrt();
    // p = i sqrt(m w0 / 2) (a^dag - a), so p^2 = -(m w0 / 2) (a^dag - a)^2
    let d = &ad - &a;
    let p2 = (&d * &d) * (-0.5 * m * w0);
    let q2 = &q * &q;
    let q4 = &q2 * &q2;
    let h = p2 * (0.5 / m) + q4 * (0.25 * lambda);
    let h = h.view((0, 0), (basis, basis)).into_owned();
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Closed-form Morse spectrum `w0 (n + 1/2) - [w0 (n + 1/2)]^2 / (4 D)` with
/// `w0 = a sqrt(2 D / m)`, for every bound `n`.
pub fn morse_levels(d: f64, a: f64, m: f64, hbar: f64) -> Vec<f64> {
    let w0 = a * (2.0 * d / m).sqrt();
    let mut out = Vec::new();
    let mut n = 0u32;
    loop {
        let x = hbar * w0 * (n as f64 + 0.5);
        // bound while dE/dn > 0
        if x >= 2.0 * d {
            break;
        }
        out.push(x - x * x / (4.0 * d));
        n += 1;
    }
    out
}

/// Classical turning points of the Morse well at energy `e < d`.
pub fn morse_turning_points(d: f64, a: f64, e: f64) -> (f64, f64) {
    let s = (e / d).sqrt();
    (-(1.0 + s).ln() / a, -(1.0 - s).ln() / a)
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Classical RK4 for `dz/dt = rhs(z)`; returns the trajectory including the start.
pub fn rk4(rhs: &dyn Fn(&[f64]) -> Vec<f64>, z0: &[f64], dt: f64, steps: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut z = z0.to_vec();
    out.push(z.clone());
    let axpy = |z: &[f64], k: &[f64], s: f64| z.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
    for _ in 0..steps {
        let k1 = rhs(&z);
        let k2 = rhs(&axpy(&z, &k1, 0.5 * dt));
        let k3 = rhs(&axpy(&z, &k2, 0.5 * dt));
        let k4 = rhs(&axpy(&z, &k3, dt));
        for i in 0..z.len() {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(z.clone());
    }
    out
}

/// `oint p dq` along a sampled closed trajectory of a quadratic Hamiltonian
/// `z^T M z / 2`, integrated as `int p . dq/dt dt` with Simpson's rule.
pub fn quadratic_orbit_action(m: &DMatrix<f64>, z0: &[f64], period: f64, steps: usize) -> f64 {
    assert!(steps.is_multiple_of(2));
    let dim = m.nrows();
    let n = dim / 2;
    let rhs = |z: &[f64]| {
        let g = m * nalgebra::DVector::from_column_slice(z);
        // dq/dt = dH/dp, dp/dt = -dH/dq
        let mut d = vec![0.0; dim];
        for i in 0..n {
            d[i] = g[n + i];
            d[n + i] = -g[i];
        }
        d
    };
    let dt = period / steps as f64;
    let traj = rk4(&rhs, z0, dt, steps);
    let integrand: Vec<f64> = traj
        .iter()
        .map(|z| {
            let d = rhs(z);
            (0..n).map(|i| z[n + i] * d[i]).sum()
        })
        .collect();
    let mut s = integrand[0] + integrand[steps];
    for (k, v) in integrand.iter().enumerate().take(steps).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * dt / 3.0
}
