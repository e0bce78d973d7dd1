//! Dense complex linear-algebra kernels.
//!
//! Every matrix is a column-major [`CMat`]; `vec` stacks columns. The
//! structural helpers here (Kronecker products, selection matrices, Hermitian
//! factors) are shared by the estimators and the training designers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub vectors: CMat,
    pub values: Vec<f64>,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Rebuilds `U f(Λ) Uᴴ` for a scalar map `f` applied to each eigenvalue.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let w = f(self.values[j]);
            scaled.column_mut(j).scale_mut(w);
        }
        hermitize(&(scaled * self.vectors.adjoint()))
    }

    pub fn reconstruct(&self) -> CMat {
        self.map_values(|v| v)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

pub fn hermitian_eig(a: &CMat) -> HermitianEig {
    let n = a.nrows();
    if n == 0 {
        return HermitianEig { vectors: CMat::zeros(0, 0), values: Vec::new() };
    }
    let eig = hermitize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their solver order
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
        values.push(eig.eigenvalues[src]);
    }
    HermitianEig { vectors, values }
}

/// `(A + Aᴴ)/2`.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

pub fn is_hermitian(a: &CMat, rel_tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = max_abs(a);
    max_abs(&(a - a.adjoint())) <= rel_tol * scale.max(f64::MIN_POSITIVE)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn trace_re(a: &CMat) -> f64 {
    a.trace().re
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra * rb, ca * cb);
    for j in 0..ca {
        for i in 0..ra {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for l in 0..cb {
                for k in 0..rb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-stacking vectorization.
pub fn vec(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

pub fn unvec(v: &CVec, rows: usize, cols: usize) -> Result<CMat> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape vector of length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMat::from_column_slice(rows, cols, v.as_slice()))
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(*b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Canonical factor `C = U Σ^{1/2}` with `C Cᴴ = Z` for a numerically PSD `Z`.
///
/// Eigenvalues above `-1e-10·tr(Z)/n` are clipped at zero; anything lower is
/// reported as [`Error::NotPsd`].
pub fn hermitian_factor(z: &CMat) -> Result<CMat> {
    let eig = checked_psd_eig(z)?;
    let mut f = eig.vectors.clone();
    for j in 0..eig.dim() {
        let w = eig.values[j].max(0.0).sqrt();
        f.column_mut(j).scale_mut(w);
    }
    Ok(f)
}

/// Hermitian PSD square root `U Σ^{1/2} Uᴴ`.
pub fn psd_sqrt(z: &CMat) -> Result<CMat> {
    let eig = checked_psd_eig(z)?;
    Ok(eig.map_values(|v| v.max(0.0).sqrt()))
}

/// Inverse Hermitian square root of a positive definite matrix.
pub fn pd_inv_sqrt(z: &CMat) -> Result<CMat> {
    let eig = checked_psd_eig(z)?;
    let floor = 1e-13 * eig.max_value().max(f64::MIN_POSITIVE);
    if eig.min_value() <= floor {
        return Err(Error::Singular("matrix is not positive definite".into()));
    }
    Ok(eig.map_values(|v| 1.0 / v.sqrt()))
}

fn checked_psd_eig(z: &CMat) -> Result<HermitianEig> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", z.nrows(), z.ncols())));
    }
    let n = z.nrows();
    let eig = hermitian_eig(z);
    if n > 0 {
        let floor = -1e-10 * trace_re(z).abs().max(f64::MIN_POSITIVE) / n as f64;
        if eig.min_value() < floor {
            return Err(Error::NotPsd { min_eigenvalue: eig.min_value(), floor });
        }
    }
    Ok(eig)
}

/// Euclidean projection of a Hermitian matrix onto the PSD cone.
pub fn project_psd(a: &CMat) -> CMat {
    hermitian_eig(a).map_values(|v| v.max(0.0))
}

/// Selection matrix `E` with `vec(S ⊗ I_m) = E·vec(S)` for `S` of shape
/// `n × l`.
///
/// Built from the block pattern `Blkdiag(Ẽ, …, Ẽ)` (one block per column of
/// `S`), where `Ẽ` stacks `m` copies of `Blkdiag(e_k, …, e_k)`.
pub fn selection_matrix_e(n: usize, m: usize, l: usize) -> DMatrix<f64> {
    let rows_per_col = m * n * m;
    let mut e = DMatrix::<f64>::zeros(l * rows_per_col, l * n);
    for (row, col) in selection_rows(n, m, l) {
        e[(row, col)] = 1.0;
    }
    e
}

/// Non-zero pattern of [`selection_matrix_e`] as `(row, column)` pairs.
pub fn selection_rows(n: usize, m: usize, l: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(l * n * m);
    let rows_per_col = m * n * m;
    for j in 0..l {
        for k in 0..m {
            // Ē_(k) = Blkdiag(e_k, …, e_k), n copies of an m-vector
            for i in 0..n {
                let row = j * rows_per_col + k * (n * m) + i * m + k;
                out.push((row, j * n + i));
            }
        }
    }
    out
}

/// Solves `A X = B` for a Hermitian positive definite `A` (Cholesky), falling
/// back to partial-pivot LU when the factorization breaks down.
pub fn hermitian_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    if let Some(ch) = hermitize(a).cholesky() {
        return Ok(ch.solve(b));
    }
    lu_solve(a, b)
}

pub fn lu_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let lu = a.clone().lu();
    lu.solve(b).ok_or_else(|| Error::Singular("LU solve failed".into()))
}

pub fn hermitian_inverse(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    hermitian_solve(a, &identity(n)).map(|x| hermitize(&x))
}

pub fn frob(a: &CMat) -> f64 {
    a.norm()
}

/// Returns `Some(s)` when `a ≈ s·I` (relative tolerance on the max entry).
pub fn scaled_identity(a: &CMat, rel_tol: f64) -> Option<f64> {
    if !a.is_square() || a.nrows() == 0 {
        return None;
    }
    let n = a.nrows();
    let s = trace_re(a) / n as f64;
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let dev = max_abs(&(a - identity(n) * c(s)));
    (dev <= rel_tol * scale).then_some(s)
}

/// Returns `Some(s)` when `a ≈ s·b` with `s > 0`.
pub fn proportional(a: &CMat, b: &CMat, rel_tol: f64) -> Option<f64> {
    if a.shape() != b.shape() {
        return None;
    }
    let num: C64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    if den == 0.0 {
        return None;
    }
    let s = num.re / den;
    let dev = max_abs(&(a - b * c(s)));
    (s > 0.0 && dev <= rel_tol * max_abs(a).max(f64::MIN_POSITIVE)).then_some(s)
}

pub fn real_to_complex(a: &DMatrix<f64>) -> CMat {
    a.map(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    fn rand_mat(r: usize, cols: usize, seed: &mut u64) -> CMat {
        CMat::from_fn(r, cols, |_, _| C64::new(lcg(seed), lcg(seed)))
    }

    #[test]
    fn kron_scalar_and_identity() {
        let a = CMat::from_element(1, 1, c(2.0));
        let b = CMat::from_element(1, 1, c(3.0));
        assert_eq!(kron(&a, &b)[(0, 0)], c(6.0));

        let mut seed = 7;
        let m = rand_mat(2, 3, &mut seed);
        let k = kron(&identity(2), &m);
        assert_eq!(k, block_diag(&[&m, &m]));
    }

    #[test]
    fn kron_matches_quadruple_loop() {
        let mut seed = 11;
        let a = rand_mat(2, 3, &mut seed);
        let b = rand_mat(2, 2, &mut seed);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 6));
        for i in 0..2 {
            for j in 0..3 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 2 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn vec_is_column_stacking() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0), c(3.0), c(2.0), c(4.0)]);
        let v = vec(&a);
        assert_eq!(v.as_slice(), &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let mut seed = 3;
        let b = rand_mat(3, 4, &mut seed);
        assert_eq!(unvec(&vec(&b), 3, 4).unwrap(), b);
        assert!(matches!(unvec(&vec(&b), 5, 2), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn vec_of_triple_product() {
        let mut seed = 5;
        let (a, b, cm) = (rand_mat(2, 2, &mut seed), rand_mat(2, 2, &mut seed), rand_mat(2, 2, &mut seed));
        let lhs = vec(&(&a * &b * &cm));
        let rhs = kron(&cm.transpose(), &a) * vec(&b);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn hermitian_factor_cases() {
        let i3 = identity(3);
        assert!((hermitian_factor(&i3).unwrap() * hermitian_factor(&i3).unwrap().adjoint() - &i3).norm() < 1e-12);

        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(4.0), c(1.0)]));
        let f = hermitian_factor(&d).unwrap();
        let expected = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0), c(1.0)]));
        assert!((f.map(|z| z.norm()) - expected.map(|z| z.norm())).norm() < 1e-12);

        let mut seed = 9;
        let m = rand_mat(3, 3, &mut seed);
        let z = &m * m.adjoint();
        let f = hermitian_factor(&z).unwrap();
        assert!((&f * f.adjoint() - &z).norm() <= 1e-9 * z.norm());
    }

    #[test]
    fn hermitian_factor_rejects_indefinite() {
        let z = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-0.5)]));
        assert!(matches!(hermitian_factor(&z), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn eig_reconstruction_and_unitarity() {
        let mut seed = 13;
        let m = rand_mat(5, 5, &mut seed);
        let a = &m * m.adjoint();
        let e = hermitian_eig(&a);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        assert!((e.reconstruct() - &a).norm() <= 1e-9 * a.norm());
        assert!((e.vectors.adjoint() * &e.vectors - identity(5)).norm() < 1e-10);
    }

    #[test]
    fn selection_matrix_cases() {
        let e = selection_matrix_e(1, 1, 1);
        assert_eq!(e, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(selection_matrix_e(3, 1, 2), DMatrix::<f64>::identity(6, 6));

        let mut seed = 17;
        for (n, m, l) in [(2, 2, 2), (3, 2, 4), (2, 3, 1)] {
            let s = rand_mat(n, l, &mut seed);
            let e = real_to_complex(&selection_matrix_e(n, m, l));
            let lhs = vec(&kron(&s, &identity(m)));
            assert_eq!(lhs, e * vec(&s));
        }
    }

    #[test]
    fn scaled_identity_and_proportional() {
        assert_eq!(scaled_identity(&(identity(3) * c(2.5)), 1e-12), Some(2.5));
        let mut seed = 2;
        let m = rand_mat(3, 3, &mut seed);
        assert!(scaled_identity(&m, 1e-6).is_none());
        let z = &m * m.adjoint();
        let s = proportional(&(&z * c(3.0)), &z, 1e-12).unwrap();
        assert!((s - 3.0).abs() < 1e-12);
    }
}
