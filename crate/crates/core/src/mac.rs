//! Training design for the multiple-access phase, where both sources train
//! the relay simultaneously with `S = [S₁; S₂]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alternate::{alternating_minimization, default_inner, surrogate, Acceleration, WeightedLink};
use crate::channel::{LinkStats, MacScenario};
use crate::convex::{
    solve_psd_trace_inverse, BallQp, PsdConstraint, PsdTraceInverseProblem, QcqpProblem,
    QuadConstraint, TraceInverseTerm,
};
use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eig, hermitian_solve, hermitize, identity, kron, proportional, psd_sqrt,
    scaled_identity, unvec, vec, CMat, CVec,
};
use crate::lmmse::{mac_mse, training_quadratic, LmmseEstimator, TrainingSequence};
use crate::rng::complex_normal_matrix;
use crate::waterfill::{allocate, ModalTerm};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacMethod {
    Iterative,
    KktClosedForm,
    Waterfilling,
    ConvexPsd,
}

#[derive(Debug, Clone)]
pub struct MacDesignReport {
    pub seq: TrainingSequence,
    pub mse: f64,
    pub trace: Vec<f64>,
    pub multipliers: [f64; 2],
    pub kkt_residual: f64,
    pub method: MacMethod,
    pub iterations: usize,
}

/// Power constraints `sᴴ(I_L ⊗ Eᵢ)s = Tr(SᵢSᵢᴴ) ≤ τᵢ` on `s = vec(S)`.
pub fn mac_constraints(sc: &MacScenario) -> Vec<QuadConstraint> {
    let (n1, n) = (sc.n1(), sc.n1() + sc.n2());
    let sel = |lo: usize, hi: usize| {
        let e = CMat::from_fn(n, n, |i, j| if i == j && (lo..hi).contains(&i) { c(1.0) } else { c(0.0) });
        kron(&identity(sc.l_s), &e)
    };
    vec![
        QuadConstraint { d: sel(0, n1), bound: sc.tau1 },
        QuadConstraint { d: sel(n1, n), bound: sc.tau2 },
    ]
}

/// QCQP in `s = vec(S)` for a fixed estimator, plus the `s`-independent part
/// of the error.
#[derive(Debug, Clone)]
pub struct MacQcqp {
    pub problem: QcqpProblem,
    pub constant: f64,
}

pub fn build_qcqp(sc: &MacScenario, t_r: &LmmseEstimator) -> Result<MacQcqp> {
    let q = training_quadratic(&sc.link, &t_r.t)?;
    Ok(MacQcqp { constant: q.constant, problem: QcqpProblem { a: q.a, c: q.c, constraints: mac_constraints(sc) } })
}

/// Scaled "identity" training: row `i` carries a single non-zero entry in
/// column `i mod L_S`, with `Tr(SᵢSᵢᴴ) = τᵢ`.
pub fn identity_init(sc: &MacScenario) -> TrainingSequence {
    let (n1, n2, l) = (sc.n1(), sc.n2(), sc.l_s);
    let mut s = CMat::zeros(n1 + n2, l);
    for i in 0..n1 + n2 {
        let v = if i < n1 { (sc.tau1 / n1 as f64).sqrt() } else { (sc.tau2 / n2 as f64).sqrt() };
        s[(i, i % l)] = c(v);
    }
    TrainingSequence { phase: crate::lmmse::Phase::Mac, s, budgets: vec![sc.tau1, sc.tau2], split: n1 }
}

/// Gaussian training scaled so that both power constraints are tight.
pub fn random_init<R: Rng + ?Sized>(sc: &MacScenario, rng: &mut R) -> TrainingSequence {
    let (n1, n2, l) = (sc.n1(), sc.n2(), sc.l_s);
    let mut s = complex_normal_matrix(rng, n1 + n2, l);
    for (lo, n, tau) in [(0, n1, sc.tau1), (n1, n2, sc.tau2)] {
        let p = s.rows(lo, n).norm_squared();
        let scale = if p > 0.0 { (tau / p).sqrt() } else { 0.0 };
        s.rows_mut(lo, n).scale_mut(scale);
    }
    TrainingSequence { phase: crate::lmmse::Phase::Mac, s, budgets: vec![sc.tau1, sc.tau2], split: n1 }
}

fn check_init(sc: &MacScenario, init: &TrainingSequence) -> Result<()> {
    if init.s.shape() != (sc.n1() + sc.n2(), sc.l_s) || init.split != sc.n1() {
        return Err(Error::DimensionMismatch(format!(
            "initial training is {}x{}, expected {}x{}",
            init.s.nrows(),
            init.s.ncols(),
            sc.n1() + sc.n2(),
            sc.l_s
        )));
    }
    let check = TrainingSequence { budgets: vec![sc.tau1, sc.tau2], ..init.clone() };
    if !check.is_feasible(1e-8) {
        return Err(Error::InvalidParameter("initial training violates the power constraints".into()));
    }
    Ok(())
}

fn report(sc: &MacScenario, s: CMat, mse: f64, trace: Vec<f64>, multipliers: [f64; 2], kkt: f64, method: MacMethod, iterations: usize) -> MacDesignReport {
    let seq = TrainingSequence { phase: crate::lmmse::Phase::Mac, s, budgets: vec![sc.tau1, sc.tau2], split: sc.n1() };
    MacDesignReport { seq, mse, trace, multipliers, kkt_residual: kkt, method, iterations }
}

/// Alternates between the LMMSE estimator update and the convex QCQP in the
/// training matrix, with Anderson mixing of consecutive steps.
pub fn algorithm1(sc: &MacScenario, init: &TrainingSequence, tol: f64, max_iter: usize) -> Result<MacDesignReport> {
    algorithm1_with(sc, init, tol, max_iter, Acceleration::default())
}

pub fn algorithm1_with(
    sc: &MacScenario,
    init: &TrainingSequence,
    tol: f64,
    max_iter: usize,
    accel: Acceleration,
) -> Result<MacDesignReport> {
    check_init(sc, init)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let links = [WeightedLink { link: &sc.link, weight: 1.0 }];
    let out = alternating_minimization(&links, &mac_constraints(sc), &init.s, tol, max_iter, accel, default_inner)?;
    let m = [out.multipliers[0], out.multipliers[1]];
    Ok(report(sc, out.s, out.mse, out.trace, m, out.kkt_residual, MacMethod::Iterative, out.iterations))
}

/// KKT residual of the training QCQP at `s` with the given multipliers.
pub fn mac_kkt_residual(sc: &MacScenario, s: &CMat, multipliers: &[f64]) -> Result<f64> {
    let q = surrogate(&[WeightedLink { link: &sc.link, weight: 1.0 }], s)?;
    let p = QcqpProblem { a: q.a, c: q.c, constraints: mac_constraints(sc) };
    Ok(p.kkt_residual(&vec(s), multipliers))
}

/// Per-source inner problem of the interference-limited closed form:
/// `min sᴴ(X₁ ⊗ Zᵀ)s − 2Re(x₃ᴴs)` s.t. `‖s‖² ≤ τ`, solved by
/// `s(λ) = (X₁ ⊗ Zᵀ + λI)⁻¹x₃`.
#[derive(Debug, Clone)]
pub struct SourceSubproblem {
    pub x1: CMat,
    pub z: CMat,
    pub x3: CVec,
    qp: BallQp,
}

impl SourceSubproblem {
    pub fn new(x1: CMat, z: CMat, x3: CVec) -> Self {
        let qp = BallQp::new(&kron(&x1, &z.transpose()), &x3);
        Self { x1, z, x3, qp }
    }

    /// `‖s(λ)‖²`, strictly decreasing in `λ`.
    pub fn g(&self, lambda: f64) -> f64 {
        self.qp.g(lambda)
    }

    pub fn s_at(&self, lambda: f64) -> CVec {
        self.qp.s_at(lambda)
    }

    /// `√(‖x₃‖²/τ) − μ_min`, with `μ_min` the smallest eigenvalue of
    /// `X₁ ⊗ Zᵀ`; `g` at this point never exceeds `τ`.
    pub fn lambda_upper_bound(&self, tau: f64) -> f64 {
        self.qp.lambda_upper_bound(tau)
    }

    /// Optimal `(s, λ)` for budget `τ`.
    pub fn solve(&self, tau: f64) -> Result<(CVec, f64)> {
        self.qp.solve(tau)
    }
}

/// Interference-limited closed form (`K_r ∝ Z_r`): the estimator factors as
/// `T₁ ⊗ C_r⁻¹` and each source's update is a scalar-multiplier problem.
pub fn kkt_closed_form_design(sc: &MacScenario) -> Result<MacDesignReport> {
    kkt_closed_form_from(sc, &identity_init(sc), DEFAULT_TOL, DEFAULT_MAX_ITER)
}

pub fn kkt_closed_form_from(sc: &MacScenario, init: &TrainingSequence, tol: f64, max_iter: usize) -> Result<MacDesignReport> {
    check_init(sc, init)?;
    let link = &sc.link;
    let ratio = proportional(&link.k_r, &link.z_r, 1e-9)
        .ok_or_else(|| Error::WrongScenarioKind("spatial disturbance is not proportional to the relay receive covariance".into()))?;
    if link.eig_r.min_value() <= 1e-12 * link.eig_r.max_value() {
        return Err(Error::WrongScenarioKind("relay receive covariance is singular".into()));
    }
    let tr_zr = link.eig_r.values.iter().sum::<f64>();
    let (n1, n2, l) = (sc.n1(), sc.n2(), sc.l_s);

    let step = |s: &CMat| -> Result<(CMat, [f64; 2])> {
        let phi = hermitize(&(s.transpose() * &link.z_t * s.conjugate() + &link.k_q * c(ratio)));
        // T₁ = C_tᴴ S* Φ⁻¹, i.e. T₁ᴴ = Φ⁻¹ Sᵀ C_t
        let t1 = hermitian_solve(&phi, &(s.transpose() * &link.c_t))
            .map_err(|_| Error::SingularGram)?
            .adjoint();
        let x1 = hermitize(&(t1.adjoint() * link.c_t.adjoint() * &link.c_t * &t1));
        let mut s_new = CMat::zeros(n1 + n2, l);
        let mut lambdas = [0.0; 2];
        for (i, (lo, n, tau)) in [(0, n1, sc.tau1), (n1, n2, sc.tau2)].into_iter().enumerate() {
            if n == 0 {
                continue;
            }
            let ci = link.c_t.view((lo, lo), (n, n)).into_owned();
            let zi = link.z_t.view((lo, lo), (n, n)).into_owned();
            let t1i = t1.rows(lo, n).into_owned();
            let x3 = vec(&(&zi * &ci * &t1i)).conjugate();
            let sub = SourceSubproblem::new(x1.clone(), zi, x3);
            let (si, li) = sub.solve(tau)?;
            s_new.rows_mut(lo, n).copy_from(&unvec(&si, n, l)?);
            lambdas[i] = li * tr_zr;
        }
        Ok((s_new, lambdas))
    };

    let mut s = init.s.clone();
    let mut e = mac_mse(sc, init)?;
    let mut trace = vec![e];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (s_new, _) = step(&s)?;
        let e_new = crate::lmmse::link_mse(link, &s_new)?;
        if e_new > e * (1.0 + 1e-9) {
            return Err(Error::NonMonotoneStep { iteration: iterations, previous: e, current: e_new });
        }
        if e_new > e * (1.0 + 1e-12) {
            break;
        }
        let rel = (e - e_new).abs() / e.max(f64::MIN_POSITIVE);
        s = s_new;
        e = e_new;
        trace.push(e);
        if rel < tol {
            break;
        }
    }
    let (_, multipliers) = step(&s)?;
    let kkt = mac_kkt_residual(sc, &s, &multipliers)?;
    Ok(report(sc, s, e, trace, multipliers, kkt, MacMethod::KktClosedForm, iterations))
}

/// Temporal disturbance level `q` when `K_q = q·I`.
fn white_temporal(sc: &MacScenario) -> Result<f64> {
    scaled_identity(&sc.link.k_q, 1e-12)
        .filter(|q| *q > 0.0)
        .ok_or_else(|| Error::WrongScenarioKind("temporal disturbance covariance is not a multiple of the identity".into()))
}

/// `(σ_{r,n}, σ_{r,n}/(q δₙ))` for every receive mode with positive gain.
pub(crate) fn mode_gains(link: &LinkStats, q: f64) -> Vec<(f64, f64)> {
    link.eig_r
        .values
        .iter()
        .zip(&link.delta_r)
        .filter(|(s, d)| **s > 0.0 && **d > 0.0)
        .map(|(s, d)| (*s, s / (q * d)))
        .collect()
}

/// Per-source modal terms `σ_{r,n}σ_{t,m}/(1 + αₙσ_{t,m}p_m)`.
pub fn source_modal_terms(sigma_t: &[f64], gains: &[(f64, f64)]) -> Vec<ModalTerm> {
    let mut terms = Vec::new();
    for (m, &st) in sigma_t.iter().enumerate() {
        for &(sr, alpha) in gains {
            terms.push(ModalTerm { mode: m, c: sr * st.max(0.0), d: alpha * st.max(0.0) });
        }
    }
    terms
}

/// White temporal disturbance (`K_q = qI`): orthogonal source sequences
/// `Sᵢ = U*_{t,i} Σᵢ Vᵢᴴ` on disjoint time slots with water-filled stream
/// powers.
pub fn waterfilling_design(sc: &MacScenario) -> Result<MacDesignReport> {
    let q = white_temporal(sc)?;
    let (n1, n2, l) = (sc.n1(), sc.n2(), sc.l_s);
    if l < n1 + n2 {
        return Err(Error::LengthTooShort { got: l, required: n1 + n2 });
    }
    let gains = mode_gains(&sc.link, q);
    let mut s = CMat::zeros(n1 + n2, l);
    let mut lambdas = [0.0; 2];
    for (i, (h, lo, tau)) in [(&sc.h1, 0, sc.tau1), (&sc.h2, n1, sc.tau2)].into_iter().enumerate() {
        let n = h.n_tx();
        if n == 0 {
            continue;
        }
        let terms = source_modal_terms(&h.eig_t.values, &gains);
        let alloc = allocate(&terms, n, tau)?;
        lambdas[i] = alloc.lambda;
        let u = h.eig_t.vectors.conjugate();
        for m in 0..n {
            let col = u.column(m) * c(alloc.powers[m].sqrt());
            s.view_mut((lo, lo + m), (n, 1)).copy_from(&col);
        }
    }
    let seq = TrainingSequence { phase: crate::lmmse::Phase::Mac, s: s.clone(), budgets: vec![sc.tau1, sc.tau2], split: n1 };
    let mse = mac_mse(sc, &seq)?;
    let kkt = mac_kkt_residual(sc, &s, &lambdas)?;
    Ok(report(sc, s, mse, vec![mse], lambdas, kkt, MacMethod::Waterfilling, 0))
}

/// Trace-inverse program in `Q = S*Sᵀ` for `K_q = qI`:
/// `Σₙ σ_{r,n} Tr[Z_t (I + αₙ Z_t^{1/2} Q Z_t^{1/2})⁻¹]`, which equals
/// `Σₙ σ_{r,n} Tr[(Z_t⁻¹ + αₙQ)⁻¹]` when `Z_t` is invertible.
pub fn mac_psd_problem(sc: &MacScenario) -> Result<PsdTraceInverseProblem> {
    let q = white_temporal(sc)?;
    let link = &sc.link;
    let n = link.n_tx();
    let root = psd_sqrt(&link.z_t)?;
    let terms = mode_gains(&sc.link, q)
        .into_iter()
        .map(|(sr, alpha)| TraceInverseTerm {
            weight: sr,
            outer: link.z_t.clone(),
            base: identity(n),
            alpha,
            congruence: Some(root.clone()),
        })
        .collect();
    let sel = |lo: usize, hi: usize| CMat::from_fn(n, n, |i, j| if i == j && (lo..hi).contains(&i) { c(1.0) } else { c(0.0) });
    Ok(PsdTraceInverseProblem {
        dim: n,
        terms,
        constraints: vec![
            PsdConstraint { selector: sel(0, sc.n1()), bound: sc.tau1 },
            PsdConstraint { selector: sel(sc.n1(), n), bound: sc.tau2 },
        ],
    })
}

/// Factor `Q = S*Sᵀ` as `S = (UΛ^{1/2})*` padded with zero columns (the
/// strongest `cols` eigen-directions are kept if `Q` has higher rank).
pub fn factor_gram_conj(q: &CMat, cols: usize) -> CMat {
    let eig = hermitian_eig(q);
    let n = q.nrows();
    let mut s = CMat::zeros(n, cols);
    for k in 0..n.min(cols) {
        let col = eig.vectors.column(k).conjugate() * c(eig.values[k].max(0.0).sqrt());
        s.set_column(k, &col);
    }
    s
}

pub fn convex_psd_design(sc: &MacScenario) -> Result<MacDesignReport> {
    let problem = mac_psd_problem(sc)?;
    let sol = solve_psd_trace_inverse(&problem, 1e-11)?;
    let mut s = factor_gram_conj(&sol.q, sc.l_s);
    // guard against round-off in the factorization
    for (lo, n, tau) in [(0, sc.n1(), sc.tau1), (sc.n1(), sc.n2(), sc.tau2)] {
        let p = s.rows(lo, n).norm_squared();
        if p > tau && p > 0.0 {
            s.rows_mut(lo, n).scale_mut((tau / p).sqrt());
        }
    }
    let seq = TrainingSequence { phase: crate::lmmse::Phase::Mac, s: s.clone(), budgets: vec![sc.tau1, sc.tau2], split: sc.n1() };
    let mse = mac_mse(sc, &seq)?;
    let m = [sol.multipliers[0], sol.multipliers[1]];
    Ok(report(sc, s, mse, vec![mse], m, sol.kkt_residual, MacMethod::ConvexPsd, sol.iterations))
}

/// Error floor when `l_s` is shorter than `N₁ + N₂`:
/// `Σₙ σ_{r,n} · Σ_{m > l_s} σ_{t,m}` with the joint transmit eigenvalues
/// sorted descending.
pub fn mac_mse_floor(sc: &MacScenario, l_s: usize) -> f64 {
    let link = &sc.link;
    let sr: f64 = link.eig_r.values.iter().map(|v| v.max(0.0)).sum();
    let st: f64 = link.eig_t.values.iter().skip(l_s).map(|v| v.max(0.0)).sum();
    sr * st
}

pub fn min_training_length_mac(sc: &MacScenario) -> usize {
    sc.n1() + sc.n2()
}
