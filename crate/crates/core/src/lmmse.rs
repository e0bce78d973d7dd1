//! Linear MMSE channel estimators and their mean-square errors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{BcScenario, LinkStats, MacScenario};
use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_solve, hermitize, identity, kron, trace_re, vec, CMat, CVec, C64,
};
use crate::rng::complex_normal_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Mac,
    Bc,
}

/// Training matrix together with the power budget it must respect.
///
/// For the MAC phase `s` stacks `[S₁; S₂]` and `split` is `N₁`; for the BC
/// phase `s` is `S_R` and `split` equals its row count.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSequence {
    pub phase: Phase,
    pub s: CMat,
    pub budgets: Vec<f64>,
    pub split: usize,
}

impl TrainingSequence {
    pub fn mac(s: CMat, n1: usize, tau1: f64, tau2: f64) -> Result<Self> {
        if n1 > s.nrows() {
            return Err(Error::DimensionMismatch(format!("split {n1} exceeds {} rows", s.nrows())));
        }
        Ok(Self { phase: Phase::Mac, s, budgets: vec![tau1, tau2], split: n1 })
    }

    pub fn bc(s: CMat, tau_r: f64) -> Self {
        let split = s.nrows();
        Self { phase: Phase::Bc, s, budgets: vec![tau_r], split }
    }

    pub fn zeros_mac(sc: &MacScenario) -> Self {
        let s = CMat::zeros(sc.n1() + sc.n2(), sc.l_s);
        Self { phase: Phase::Mac, s, budgets: vec![sc.tau1, sc.tau2], split: sc.n1() }
    }

    pub fn zeros_bc(sc: &BcScenario) -> Self {
        Self::bc(CMat::zeros(sc.m(), sc.l_r), sc.tau_r)
    }

    pub fn s1(&self) -> CMat {
        self.s.rows(0, self.split).into_owned()
    }

    pub fn s2(&self) -> CMat {
        self.s.rows(self.split, self.s.nrows() - self.split).into_owned()
    }

    /// Energy `Tr(S_i S_iᴴ)` per constrained block.
    pub fn powers(&self) -> Vec<f64> {
        match self.phase {
            Phase::Mac => vec![self.s1().norm_squared(), self.s2().norm_squared()],
            Phase::Bc => vec![self.s.norm_squared()],
        }
    }

    pub fn is_feasible(&self, rel_tol: f64) -> bool {
        self.powers().iter().zip(&self.budgets).all(|(p, t)| *p <= t * (1.0 + rel_tol) + 1e-300)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { s: &self.s * c(alpha), ..self.clone() }
    }
}

/// Estimator `ŵ = T y` with the lift `ĥ = (C_t ⊗ C_r) ŵ`.
#[derive(Debug, Clone)]
pub struct LmmseEstimator {
    pub t: CMat,
    pub lift: CMat,
    pub n_rx: usize,
    pub tx_blocks: Vec<usize>,
}

impl LmmseEstimator {
    pub fn n_tx(&self) -> usize {
        self.tx_blocks.iter().sum()
    }
}

/// `X = Sᵀ C_t ⊗ C_r`, so that `vec(Y) = X w + vec(N)`.
pub fn link_operator(link: &LinkStats, s: &CMat) -> Result<CMat> {
    check_training(link, s)?;
    Ok(kron(&(s.transpose() * &link.c_t), &link.c_r))
}

fn check_training(link: &LinkStats, s: &CMat) -> Result<()> {
    if s.nrows() != link.n_tx() || s.ncols() != link.length() {
        return Err(Error::DimensionMismatch(format!(
            "training is {}x{}, link expects {}x{}",
            s.nrows(),
            s.ncols(),
            link.n_tx(),
            link.length()
        )));
    }
    Ok(())
}

/// Observation covariance `R_yy = X Xᴴ + K`.
pub fn observation_cov(link: &LinkStats, x: &CMat) -> CMat {
    hermitize(&(x * x.adjoint() + &link.k))
}

/// `T = Xᴴ R_yy⁻¹`.
pub fn link_estimator(link: &LinkStats, s: &CMat) -> Result<LmmseEstimator> {
    let x = link_operator(link, s)?;
    let ryy = observation_cov(link, &x);
    let sol = hermitian_solve(&ryy, &x).map_err(|_| Error::SingularGram)?;
    if sol.iter().any(|z| !z.is_finite()) {
        return Err(Error::SingularGram);
    }
    Ok(LmmseEstimator {
        t: sol.adjoint(),
        lift: link.lift.clone(),
        n_rx: link.n_rx(),
        tx_blocks: link.tx_blocks.clone(),
    })
}

/// `Tr[C₀ (I + Xᴴ K⁻¹ X)⁻¹]`, falling back to `Tr[C₀ (I − T X)]` when `K` is
/// singular.
pub fn link_mse(link: &LinkStats, s: &CMat) -> Result<f64> {
    let x = link_operator(link, s)?;
    let n = x.ncols();
    if let Some(ch) = link.k.clone().cholesky() {
        let kx = ch.solve(&x);
        let g = hermitize(&(identity(n) + x.adjoint() * kx));
        let sol = hermitian_solve(&g, &link.c0)?;
        return Ok(trace_re(&sol));
    }
    let est = link_estimator(link, s)?;
    Ok(trace_re(&(&link.c0 * (identity(n) - &est.t * &x))))
}

/// Error of an arbitrary linear estimator `T`:
/// `Tr[C₀ (I − T X − Xᴴ Tᴴ + T R_yy Tᴴ)]`.
pub fn link_mse_at(link: &LinkStats, s: &CMat, t: &CMat) -> Result<f64> {
    let x = link_operator(link, s)?;
    if t.nrows() != x.ncols() || t.ncols() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "estimator is {}x{}, expected {}x{}",
            t.nrows(),
            t.ncols(),
            x.ncols(),
            x.nrows()
        )));
    }
    let n = x.ncols();
    let tx = t * &x;
    let ryy = observation_cov(link, &x);
    let inner = identity(n) - &tx - tx.adjoint() + t * ryy * t.adjoint();
    Ok(trace_re(&(&link.c0 * inner)))
}

/// Eigen-domain form `Σₙ σ_{r,n} Tr[(Z_t⁻¹ + βₙ S* K_q⁻¹ Sᵀ)⁻¹]` with
/// `βₙ = σ_{r,n}/δₙ`.
///
/// Requires an invertible transmit covariance and a spatial disturbance that
/// shares the receive eigenbasis.
pub fn link_mse_eigen(link: &LinkStats, s: &CMat) -> Result<f64> {
    check_training(link, s)?;
    let n = link.n_tx();
    let floor = 1e-12 * link.eig_t.max_value().max(f64::MIN_POSITIVE);
    if link.eig_t.min_value() <= floor {
        return Err(Error::Singular("transmit covariance is singular".into()));
    }
    let z_inv = link.eig_t.map_values(|v| 1.0 / v);
    let kq_s = hermitian_solve(&link.k_q, &s.transpose()).map_err(|_| Error::SingularGram)?;
    let gram = hermitize(&(s.conjugate() * kq_s));
    let mut e = 0.0;
    for (sig, delta) in link.eig_r.values.iter().zip(&link.delta_r) {
        if *sig <= 0.0 {
            continue;
        }
        if *delta <= 0.0 {
            return Err(Error::Singular("spatial disturbance eigenvalue is not positive".into()));
        }
        let beta = sig / delta;
        let m = hermitize(&(&z_inv + &gram * c(beta)));
        let inv = hermitian_solve(&m, &identity(n))?;
        e += sig * trace_re(&inv);
    }
    Ok(e)
}

pub fn mac_estimator(sc: &MacScenario, seq: &TrainingSequence) -> Result<LmmseEstimator> {
    expect_phase(seq, Phase::Mac)?;
    link_estimator(&sc.link, &seq.s)
}

pub fn mac_mse(sc: &MacScenario, seq: &TrainingSequence) -> Result<f64> {
    expect_phase(seq, Phase::Mac)?;
    link_mse(&sc.link, &seq.s)
}

pub fn mac_mse_eigen(sc: &MacScenario, seq: &TrainingSequence) -> Result<f64> {
    expect_phase(seq, Phase::Mac)?;
    link_mse_eigen(&sc.link, &seq.s)
}

pub fn bc_estimator(sc: &BcScenario, seq: &TrainingSequence, side: usize) -> Result<LmmseEstimator> {
    expect_phase(seq, Phase::Bc)?;
    link_estimator(bc_link(sc, side)?, &seq.s)
}

pub fn bc_mse(sc: &BcScenario, seq: &TrainingSequence, side: usize) -> Result<f64> {
    expect_phase(seq, Phase::Bc)?;
    link_mse(bc_link(sc, side)?, &seq.s)
}

/// `(e₁, e₂)` for one relay training matrix.
pub fn bc_mse_pair(sc: &BcScenario, seq: &TrainingSequence) -> Result<(f64, f64)> {
    Ok((bc_mse(sc, seq, 1)?, bc_mse(sc, seq, 2)?))
}

pub fn bc_link(sc: &BcScenario, side: usize) -> Result<&LinkStats> {
    match side {
        1 | 2 => Ok(&sc.links[side - 1]),
        _ => Err(Error::InvalidParameter(format!("side must be 1 or 2, got {side}"))),
    }
}

fn expect_phase(seq: &TrainingSequence, phase: Phase) -> Result<()> {
    if seq.phase != phase {
        return Err(Error::InvalidParameter(format!("expected a {phase:?} training sequence")));
    }
    Ok(())
}

/// Applies the estimator and reshapes `ĥ` into one matrix per transmitter
/// block (`Ĥ₁, Ĥ₂` for the MAC phase, `Ĝ_i` for the BC phase).
pub fn estimate_channels(est: &LmmseEstimator, y: &CVec) -> Result<Vec<CMat>> {
    if y.len() != est.t.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, estimator expects {}",
            y.len(),
            est.t.ncols()
        )));
    }
    let h = &est.lift * (&est.t * y);
    let joint = CMat::from_column_slice(est.n_rx, est.n_tx(), h.as_slice());
    let mut out = Vec::with_capacity(est.tx_blocks.len());
    let mut col = 0;
    for &b in &est.tx_blocks {
        out.push(joint.columns(col, b).into_owned());
        col += b;
    }
    Ok(out)
}

/// One channel/disturbance draw: returns the joint channel `H` (receive ×
/// transmit) and the observation `vec(H S + N)`.
pub fn draw_observation<R: Rng + ?Sized>(link: &LinkStats, s: &CMat, rng: &mut R) -> (CMat, CVec) {
    let w = complex_normal_matrix(rng, link.n_rx(), link.n_tx());
    let h = &link.c_r * w * link.c_t.transpose();
    let omega = complex_normal_matrix(rng, link.n_rx(), link.length());
    let noise = &link.r_r * omega * link.r_q.transpose();
    let y = vec(&(&h * s + noise));
    (h, y)
}

/// Squared estimation error `‖H − Ĥ‖²_F` of one Monte-Carlo trial.
pub fn trial_error<R: Rng + ?Sized>(
    link: &LinkStats,
    s: &CMat,
    est: &LmmseEstimator,
    rng: &mut R,
) -> Result<f64> {
    let (h, y) = draw_observation(link, s, rng);
    let blocks = estimate_channels(est, &y)?;
    let mut err = 0.0;
    let mut col = 0;
    for b in blocks {
        err += (h.columns(col, b.ncols()) - &b).norm_squared();
        col += b.ncols();
    }
    Ok(err)
}

/// For a fixed estimator `T`, the error as a function of `s = vec(S)`:
/// `sᴴ A s − 2 Re(cᴴ s) + constant`.
#[derive(Debug, Clone)]
pub struct TrainingQuadratic {
    pub a: CMat,
    pub c: CVec,
    pub constant: f64,
    pub n_tx: usize,
    pub length: usize,
}

impl TrainingQuadratic {
    pub fn value(&self, s: &CVec) -> f64 {
        let q = (s.adjoint() * &self.a * s)[(0, 0)].re;
        let l = (self.c.adjoint() * s)[(0, 0)].re;
        q - 2.0 * l + self.constant
    }

    pub fn add_scaled(&mut self, other: &TrainingQuadratic, w: f64) {
        self.a += &other.a * c(w);
        self.c += &other.c * c(w);
        self.constant += w * other.constant;
    }

    pub fn zero(n_tx: usize, length: usize) -> Self {
        let d = n_tx * length;
        Self { a: CMat::zeros(d, d), c: CVec::zeros(d), constant: 0.0, n_tx, length }
    }
}

/// Builds `A = Eᴴ(TᴴC₀T ⊗ C_trᵀ)E` and `c = (Eᵀ vec(C_T))*` with
/// `C_tr = Z_t ⊗ Z_r` and `C_T = (C_t ⊗ C_r) C₀ T`, without forming the large
/// Kronecker product.
pub fn training_quadratic(link: &LinkStats, t: &CMat) -> Result<TrainingQuadratic> {
    let n = link.n_tx();
    let m = link.n_rx();
    let l = link.length();
    if t.nrows() != n * m || t.ncols() != l * m {
        return Err(Error::DimensionMismatch(format!(
            "estimator is {}x{}, expected {}x{}",
            t.nrows(),
            t.ncols(),
            n * m,
            l * m
        )));
    }
    let b = hermitize(&(t.adjoint() * &link.c0 * t));
    let ctr = kron(&link.z_t, &link.z_r);
    let ct = &link.lift * &link.c0 * t;
    let d = n * l;
    let mut a = CMat::zeros(d, d);
    // entry S[i, j] sits at index j·n + i of vec(S)
    for j2 in 0..l {
        for i2 in 0..n {
            for j1 in 0..l {
                for i1 in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for k1 in 0..m {
                        for k2 in 0..m {
                            acc += b[(j1 * m + k1, j2 * m + k2)] * ctr[(i2 * m + k2, i1 * m + k1)];
                        }
                    }
                    a[(j1 * n + i1, j2 * n + i2)] = acc;
                }
            }
        }
    }
    let mut cv = CVec::zeros(d);
    for j in 0..l {
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..m {
                acc += ct[(i * m + k, j * m + k)];
            }
            cv[j * n + i] = acc.conj();
        }
    }
    let constant = trace_re(&link.c0) + trace_re(&(&link.c0 * t * &link.k * t.adjoint()));
    Ok(TrainingQuadratic { a: hermitize(&a), c: cv, constant, n_tx: n, length: l })
}
