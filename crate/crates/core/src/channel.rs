//! Kronecker-correlated channel statistics, colored disturbance models and
//! the two-phase relay scenario.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, block_diag, c, hermitian_eig, hermitian_factor, kron, max_abs, trace_re, CMat,
    HermitianEig,
};
use crate::rng::complex_normal_matrix;
use crate::special::j0;

/// Second-order statistics of one hop, `vec(H) ~ CN(0, Z_t ⊗ Z_r)`.
#[derive(Debug, Clone)]
pub struct KroneckerChannelModel {
    pub z_t: CMat,
    pub z_r: CMat,
    pub c_t: CMat,
    pub c_r: CMat,
    pub eig_t: HermitianEig,
    pub eig_r: HermitianEig,
}

impl KroneckerChannelModel {
    pub fn new(z_t: CMat, z_r: CMat) -> Result<Self> {
        check_hermitian(&z_t, "transmit covariance")?;
        check_hermitian(&z_r, "receive covariance")?;
        let c_t = hermitian_factor(&z_t)?;
        let c_r = hermitian_factor(&z_r)?;
        Ok(Self { eig_t: hermitian_eig(&z_t), eig_r: hermitian_eig(&z_r), z_t, z_r, c_t, c_r })
    }

    pub fn n_tx(&self) -> usize {
        self.z_t.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.z_r.nrows()
    }

    pub fn prior_trace(&self) -> f64 {
        trace_re(&self.z_t) * trace_re(&self.z_r)
    }
}

/// Colored disturbance with covariance `K = K_q ⊗ K_r` (temporal ⊗ spatial).
#[derive(Debug, Clone)]
pub struct DisturbanceModel {
    pub k_q: CMat,
    pub k_r: CMat,
    pub r_q: CMat,
    pub r_r: CMat,
    pub eig_q: HermitianEig,
    pub eig_r: HermitianEig,
}

impl DisturbanceModel {
    pub fn new(k_q: CMat, k_r: CMat) -> Result<Self> {
        check_hermitian(&k_q, "temporal disturbance covariance")?;
        check_hermitian(&k_r, "spatial disturbance covariance")?;
        let r_q = hermitian_factor(&k_q)?;
        let r_r = hermitian_factor(&k_r)?;
        Ok(Self { eig_q: hermitian_eig(&k_q), eig_r: hermitian_eig(&k_r), k_q, k_r, r_q, r_r })
    }

    pub fn full(&self) -> CMat {
        kron(&self.k_q, &self.k_r)
    }

    pub fn length(&self) -> usize {
        self.k_q.nrows()
    }
}

/// Spatial structure of the disturbance relative to the paired channel's
/// receive covariance `Z_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceKind {
    /// `K_r = μ I`
    NoiseLimited { mu: f64 },
    /// `K_r = Z_r`
    InterferenceLimited,
    /// `K_r = μ I + ν Z_r`
    NoisePlus { mu: f64, nu: f64 },
    /// `K_r = I`
    SpatiallyUncorrelated,
}

pub fn make_disturbance(kind: DisturbanceKind, z_r: &CMat, k_q: CMat) -> Result<DisturbanceModel> {
    let m = z_r.nrows();
    let eye = linalg::identity(m);
    let k_r = match kind {
        DisturbanceKind::NoiseLimited { mu } => {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidParameter(format!("noise level must be positive, got {mu}")));
            }
            eye * c(mu)
        }
        DisturbanceKind::InterferenceLimited => z_r.clone(),
        DisturbanceKind::NoisePlus { mu, nu } => {
            if !(mu >= 0.0 && nu >= 0.0 && mu + nu > 0.0 && (mu + nu).is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "noise/interference levels must be non-negative and not both zero, got ({mu}, {nu})"
                )));
            }
            eye * c(mu) + z_r * c(nu)
        }
        DisturbanceKind::SpatiallyUncorrelated => eye,
    };
    DisturbanceModel::new(k_q, k_r)
}

/// Uniform-linear-array covariance `[Z]_{n,m} = z·J₀(d|n−m|)` with `Tr Z` equal
/// to `target_trace`.
pub fn bessel_spatial_cov(n: usize, d: f64, target_trace: f64) -> CMat {
    let z = target_trace / n as f64;
    let m = CMat::from_fn(n, n, |i, j| c(z * j0(d * i.abs_diff(j) as f64)));
    let eig = hermitian_eig(&m);
    if eig.min_value() >= 0.0 {
        return m;
    }
    let clipped = eig.map_values(|v| v.max(0.0));
    let tr = trace_re(&clipped);
    clipped * c(target_trace / tr)
}

/// First-order autoregressive temporal covariance `strength·η^{|n−m|}`.
pub fn ar1_temporal_cov(l: usize, eta: f64, strength: f64) -> Result<CMat> {
    if !(eta.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("AR(1) coefficient must satisfy |eta| < 1, got {eta}")));
    }
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::InvalidParameter(format!("strength must be non-negative, got {strength}")));
    }
    Ok(CMat::from_fn(l, l, |i, j| c(strength * eta.powi(i.abs_diff(j) as i32))))
}

/// Draws `H = C_r W C_tᵀ` with i.i.d. unit-variance circular Gaussian `W`.
pub fn sample_channel<R: Rng + ?Sized>(model: &KroneckerChannelModel, rng: &mut R) -> CMat {
    let w = complex_normal_matrix(rng, model.n_rx(), model.n_tx());
    &model.c_r * w * model.c_t.transpose()
}

/// Draws `N = R_r Ω R_qᵀ`, so that `vec(N) ~ CN(0, K_q ⊗ K_r)`.
pub fn sample_disturbance<R: Rng + ?Sized>(model: &DisturbanceModel, rng: &mut R) -> CMat {
    let w = complex_normal_matrix(rng, model.k_r.nrows(), model.k_q.nrows());
    &model.r_r * w * model.r_q.transpose()
}

fn check_hermitian(a: &CMat, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("{what} is {}x{}", a.nrows(), a.ncols())));
    }
    if !linalg::is_hermitian(a, 1e-10) {
        return Err(Error::InvalidParameter(format!("{what} is not Hermitian")));
    }
    Ok(())
}

fn check_budget(tau: f64, what: &str) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be a finite non-negative power, got {tau}")))
    }
}

/// Requires `K_r` to share an eigenbasis with `Z_r` (the two commute).
fn check_shared_eigenvectors(k_r: &CMat, z_r: &CMat) -> Result<()> {
    if k_r.shape() != z_r.shape() {
        return Err(Error::DimensionMismatch(format!(
            "spatial disturbance covariance is {}x{}, receive covariance is {}x{}",
            k_r.nrows(),
            k_r.ncols(),
            z_r.nrows(),
            z_r.ncols()
        )));
    }
    let comm = max_abs(&(k_r * z_r - z_r * k_r));
    let scale = max_abs(k_r) * max_abs(z_r);
    if comm > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(
            "spatial disturbance covariance must share eigenvectors with the receive covariance".into(),
        ));
    }
    Ok(())
}

/// One estimation link `Y = H S + N` seen as a single Kronecker model.
///
/// For the multiple-access phase the two sources are stacked into one
/// transmitter with block-diagonal transmit covariance.
#[derive(Debug, Clone)]
pub struct LinkStats {
    pub c_t: CMat,
    pub c_r: CMat,
    pub z_t: CMat,
    pub z_r: CMat,
    pub k_q: CMat,
    pub k_r: CMat,
    pub r_q: CMat,
    pub r_r: CMat,
    /// `K_q ⊗ K_r`
    pub k: CMat,
    /// `C_tᴴC_t ⊗ C_rᴴC_r`
    pub c0: CMat,
    /// `C_t ⊗ C_r`, maps whitened coefficients to `vec(H)`
    pub lift: CMat,
    pub eig_t: HermitianEig,
    pub eig_r: HermitianEig,
    /// `K_r` in the eigenbasis of `Z_r` (diagonal by construction).
    pub delta_r: Vec<f64>,
    /// Row split of the transmit side, one entry per source.
    pub tx_blocks: Vec<usize>,
}

impl LinkStats {
    pub fn new(c_t: CMat, c_r: CMat, dist: &DisturbanceModel, tx_blocks: Vec<usize>) -> Self {
        let z_t = &c_t * c_t.adjoint();
        let z_r = &c_r * c_r.adjoint();
        let eig_t = hermitian_eig(&z_t);
        let eig_r = hermitian_eig(&z_r);
        let delta_r = (0..eig_r.dim())
            .map(|n| {
                let v = eig_r.vectors.column(n);
                (v.adjoint() * &dist.k_r * v)[(0, 0)].re
            })
            .collect();
        Self {
            c0: kron(&(c_t.adjoint() * &c_t), &(c_r.adjoint() * &c_r)),
            lift: kron(&c_t, &c_r),
            k: dist.full(),
            k_q: dist.k_q.clone(),
            k_r: dist.k_r.clone(),
            r_q: dist.r_q.clone(),
            r_r: dist.r_r.clone(),
            c_t,
            c_r,
            z_t,
            z_r,
            eig_t,
            eig_r,
            delta_r,
            tx_blocks,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.c_t.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.c_r.nrows()
    }

    pub fn length(&self) -> usize {
        self.k_q.nrows()
    }

    pub fn prior_trace(&self) -> f64 {
        trace_re(&self.z_t) * trace_re(&self.z_r)
    }
}

/// Multiple-access phase: both sources send to the relay simultaneously.
#[derive(Debug, Clone)]
pub struct MacScenario {
    pub h1: KroneckerChannelModel,
    pub h2: KroneckerChannelModel,
    pub disturbance: DisturbanceModel,
    pub tau1: f64,
    pub tau2: f64,
    pub l_s: usize,
    pub link: LinkStats,
}

impl MacScenario {
    pub fn new(
        z_t1: CMat,
        z_t2: CMat,
        z_r: CMat,
        disturbance: DisturbanceModel,
        tau1: f64,
        tau2: f64,
    ) -> Result<Self> {
        check_budget(tau1, "tau1")?;
        check_budget(tau2, "tau2")?;
        let l_s = disturbance.length();
        if l_s == 0 {
            return Err(Error::InvalidParameter("training length must be at least 1".into()));
        }
        check_shared_eigenvectors(&disturbance.k_r, &z_r)?;
        let h1 = KroneckerChannelModel::new(z_t1, z_r.clone())?;
        let h2 = KroneckerChannelModel::new(z_t2, z_r)?;
        let c_t = block_diag(&[&h1.c_t, &h2.c_t]);
        let link = LinkStats::new(c_t, h1.c_r.clone(), &disturbance, vec![h1.n_tx(), h2.n_tx()]);
        Ok(Self { h1, h2, disturbance, tau1, tau2, l_s, link })
    }

    pub fn n1(&self) -> usize {
        self.h1.n_tx()
    }

    pub fn n2(&self) -> usize {
        self.h2.n_tx()
    }

    pub fn m(&self) -> usize {
        self.h1.n_rx()
    }

    pub fn n_coefficients(&self) -> usize {
        self.m() * (self.n1() + self.n2())
    }

    pub fn prior_trace(&self) -> f64 {
        self.h1.prior_trace() + self.h2.prior_trace()
    }

    pub fn budgets(&self) -> [f64; 2] {
        [self.tau1, self.tau2]
    }

    /// Same statistics with different power budgets.
    pub fn with_budgets(&self, tau1: f64, tau2: f64) -> Result<Self> {
        check_budget(tau1, "tau1")?;
        check_budget(tau2, "tau2")?;
        Ok(Self { tau1, tau2, ..self.clone() })
    }
}

/// Broadcast phase: the relay sends one training matrix heard by both sources.
#[derive(Debug, Clone)]
pub struct BcScenario {
    pub g1: KroneckerChannelModel,
    pub g2: KroneckerChannelModel,
    pub d1: DisturbanceModel,
    pub d2: DisturbanceModel,
    pub tau_r: f64,
    pub l_r: usize,
    pub links: [LinkStats; 2],
}

impl BcScenario {
    pub fn new(
        z_t: CMat,
        z_r1: CMat,
        z_r2: CMat,
        d1: DisturbanceModel,
        d2: DisturbanceModel,
        tau_r: f64,
    ) -> Result<Self> {
        check_budget(tau_r, "tau_r")?;
        let l_r = d1.length();
        if l_r == 0 || d2.length() != l_r {
            return Err(Error::InvalidParameter(format!(
                "both disturbance models need the same positive length, got {} and {}",
                l_r,
                d2.length()
            )));
        }
        check_shared_eigenvectors(&d1.k_r, &z_r1)?;
        check_shared_eigenvectors(&d2.k_r, &z_r2)?;
        let g1 = KroneckerChannelModel::new(z_t.clone(), z_r1)?;
        let g2 = KroneckerChannelModel::new(z_t, z_r2)?;
        let m = g1.n_tx();
        let links = [
            LinkStats::new(g1.c_t.clone(), g1.c_r.clone(), &d1, vec![m]),
            LinkStats::new(g2.c_t.clone(), g2.c_r.clone(), &d2, vec![m]),
        ];
        Ok(Self { g1, g2, d1, d2, tau_r, l_r, links })
    }

    pub fn m(&self) -> usize {
        self.g1.n_tx()
    }

    pub fn n1(&self) -> usize {
        self.g1.n_rx()
    }

    pub fn n2(&self) -> usize {
        self.g2.n_rx()
    }

    pub fn n_coefficients(&self) -> usize {
        self.m() * (self.n1() + self.n2())
    }

    pub fn prior_trace(&self) -> f64 {
        self.g1.prior_trace() + self.g2.prior_trace()
    }

    pub fn side(&self, i: usize) -> (&KroneckerChannelModel, &DisturbanceModel) {
        match i {
            1 => (&self.g1, &self.d1),
            2 => (&self.g2, &self.d2),
            _ => panic!("side index must be 1 or 2, got {i}"),
        }
    }

    pub fn with_budget(&self, tau_r: f64) -> Result<Self> {
        check_budget(tau_r, "tau_r")?;
        Ok(Self { tau_r, ..self.clone() })
    }
}

/// Both phases of one two-way relay exchange.
#[derive(Debug, Clone)]
pub struct TwrScenario {
    pub mac: MacScenario,
    pub bc: BcScenario,
}

impl TwrScenario {
    pub fn new(mac: MacScenario, bc: BcScenario) -> Result<Self> {
        if mac.n1() != bc.n1() || mac.n2() != bc.n2() || mac.m() != bc.m() {
            return Err(Error::DimensionMismatch(format!(
                "MAC antennas ({}, {}, {}) differ from BC antennas ({}, {}, {})",
                mac.n1(),
                mac.n2(),
                mac.m(),
                bc.n1(),
                bc.n2(),
                bc.m()
            )));
        }
        Ok(Self { mac, bc })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::rng::stream;

    #[test]
    fn bessel_cases() {
        let z = bessel_spatial_cov(1, 0.7, 2.5);
        assert_eq!(z[(0, 0)], c(2.5));

        let z = bessel_spatial_cov(3, 0.0, 3.0);
        assert!((trace_re(&z) - 3.0).abs() < 1e-12);
        assert!((z - CMat::from_element(3, 3, c(1.0))).norm() < 1e-12);

        let z = bessel_spatial_cov(3, 1.5, 3.0);
        for i in 0..3 {
            assert!((z[(i, i)].re - 1.0).abs() < 1e-15);
        }
        assert!((z[(0, 1)].re - 0.5118276717).abs() < 1e-7);
        assert!((z[(0, 2)].re + 0.2600519549).abs() < 1e-7);
        assert!((z[(2, 1)].re - 0.5118276717).abs() < 1e-7);
    }

    #[test]
    fn ar1_cases() {
        assert_eq!(ar1_temporal_cov(1, 0.5, 2.0).unwrap()[(0, 0)], c(2.0));
        assert_eq!(ar1_temporal_cov(4, 0.0, 1.5).unwrap(), identity(4) * c(1.5));
        let k = ar1_temporal_cov(3, 0.9, 1.0).unwrap();
        let want = [[1.0, 0.9, 0.81], [0.9, 1.0, 0.9], [0.81, 0.9, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[(i, j)].re - want[i][j]).abs() < 1e-15);
            }
        }
        let k = ar1_temporal_cov(3, -0.9, 1.0).unwrap();
        assert!((k[(0, 1)].re + 0.9).abs() < 1e-15);
        assert!(ar1_temporal_cov(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn disturbance_kinds() {
        let z = bessel_spatial_cov(3, 1.3, 3.0);
        let kq = identity(2);
        let d = make_disturbance(DisturbanceKind::NoiseLimited { mu: 2.0 }, &z, kq.clone()).unwrap();
        assert_eq!(d.k_r, identity(3) * c(2.0));
        let d = make_disturbance(DisturbanceKind::InterferenceLimited, &z, kq.clone()).unwrap();
        assert_eq!(d.k_r, z);
        let d = make_disturbance(DisturbanceKind::NoisePlus { mu: 1.0, nu: 2.0 }, &z, kq.clone()).unwrap();
        let ez = hermitian_eig(&z);
        let rotated = ez.vectors.adjoint() * &d.k_r * &ez.vectors;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 + 2.0 * ez.values[i] } else { 0.0 };
                assert!((rotated[(i, j)] - c(want)).norm() < 1e-12);
            }
        }
        let d = make_disturbance(DisturbanceKind::SpatiallyUncorrelated, &z, kq.clone()).unwrap();
        assert_eq!(d.k_r, identity(3));
        assert!(make_disturbance(DisturbanceKind::NoiseLimited { mu: -1.0 }, &z, kq).is_err());
    }

    #[test]
    fn zero_covariance_gives_zero_samples() {
        let m = KroneckerChannelModel::new(CMat::zeros(2, 2), CMat::zeros(3, 3)).unwrap();
        let h = sample_channel(&m, &mut stream(1, 0));
        assert_eq!(h, CMat::zeros(3, 2));
        let d = DisturbanceModel::new(CMat::zeros(2, 2), CMat::zeros(3, 3)).unwrap();
        assert_eq!(sample_disturbance(&d, &mut stream(1, 0)), CMat::zeros(3, 2));
    }

    #[test]
    fn mac_scenario_rejects_unaligned_disturbance() {
        let z = bessel_spatial_cov(2, 1.0, 2.0);
        let k_r = CMat::from_row_slice(2, 2, &[c(2.0), c(0.0), c(0.0), c(1.0)]);
        let d = DisturbanceModel::new(identity(2), k_r).unwrap();
        assert!(MacScenario::new(identity(1), identity(1), z, d, 1.0, 1.0).is_err());
    }
}
