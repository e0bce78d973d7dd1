//! Training design for the broadcast phase, where the relay sends one
//! sequence `S_R` that both sources use to estimate their own channel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alternate::{alternating_minimization, surrogate, Acceleration, WeightedLink};
use crate::channel::BcScenario;
use crate::convex::{
    solve_ball_qcqp, solve_psd_trace_inverse, BallQp, PsdConstraint, PsdTraceInverseProblem, QcqpProblem,
    QuadConstraint, TraceInverseTerm,
};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eig, identity, pd_inv_sqrt, scaled_identity, vec, CMat};
use crate::lmmse::{bc_mse_pair, TrainingSequence};
use crate::mac::{mode_gains, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::rng::complex_normal_matrix;
use crate::waterfill::{allocate, ModalTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMethod {
    Iterative,
    SvdMixed,
    SvdWhite,
    ConvexQr,
}

#[derive(Debug, Clone)]
pub struct BcDesignReport {
    pub seq: TrainingSequence,
    pub mse_total: f64,
    pub per_side: (f64, f64),
    pub trace: Vec<f64>,
    pub multiplier: f64,
    pub kkt_residual: f64,
    pub method: BcMethod,
    pub iterations: usize,
}

/// The relay power constraint `‖s_R‖² ≤ τ_R`.
pub fn bc_constraints(sc: &BcScenario) -> Vec<QuadConstraint> {
    vec![QuadConstraint { d: identity(sc.m() * sc.l_r), bound: sc.tau_r }]
}

fn both_links(sc: &BcScenario) -> [WeightedLink<'_>; 2] {
    [WeightedLink { link: &sc.links[0], weight: 1.0 }, WeightedLink { link: &sc.links[1], weight: 1.0 }]
}

/// Scaled "identity" training: `S = a I` when `L_R = M`, padded with zero
/// columns when longer. Shorter training puts one column on each of the
/// `L_R` strongest transmit eigen-directions.
pub fn identity_init(sc: &BcScenario) -> TrainingSequence {
    let (m, l) = (sc.m(), sc.l_r);
    let mut s = CMat::zeros(m, l);
    if l >= m {
        s.fill_diagonal(c((sc.tau_r / m as f64).sqrt()));
    } else if l > 0 {
        let u = &sc.g1.eig_t.vectors;
        for j in 0..l {
            s.set_column(j, &(u.column(j) * c((sc.tau_r / l as f64).sqrt())));
        }
    }
    TrainingSequence::bc(s, sc.tau_r)
}

/// Gaussian training scaled onto the power budget.
pub fn random_init<R: Rng + ?Sized>(sc: &BcScenario, rng: &mut R) -> TrainingSequence {
    let mut s = complex_normal_matrix(rng, sc.m(), sc.l_r);
    let p = s.norm_squared();
    s *= c(if p > 0.0 { (sc.tau_r / p).sqrt() } else { 0.0 });
    TrainingSequence::bc(s, sc.tau_r)
}

fn check_init(sc: &BcScenario, init: &TrainingSequence) -> Result<()> {
    if init.s.shape() != (sc.m(), sc.l_r) {
        return Err(Error::DimensionMismatch(format!(
            "initial training is {}x{}, expected {}x{}",
            init.s.nrows(),
            init.s.ncols(),
            sc.m(),
            sc.l_r
        )));
    }
    if init.s.norm_squared() > sc.tau_r * (1.0 + 1e-8) {
        return Err(Error::InvalidParameter("initial training violates the relay power constraint".into()));
    }
    Ok(())
}

fn report(sc: &BcScenario, s: CMat, trace: Vec<f64>, multiplier: f64, kkt: f64, method: BcMethod, iterations: usize) -> Result<BcDesignReport> {
    let seq = TrainingSequence::bc(s, sc.tau_r);
    let per_side = bc_mse_pair(sc, &seq)?;
    let mse_total = per_side.0 + per_side.1;
    let trace = if trace.is_empty() { vec![mse_total] } else { trace };
    Ok(BcDesignReport { seq, mse_total, per_side, trace, multiplier, kkt_residual: kkt, method, iterations })
}

pub fn algorithm2(sc: &BcScenario, init: &TrainingSequence, tol: f64, max_iter: usize) -> Result<BcDesignReport> {
    algorithm2_with(sc, init, tol, max_iter, Acceleration::default())
}

/// Alternates between the two source estimators and the closed-form relay
/// update `s_R = (A_R + λI)⁻¹a_R`.
pub fn algorithm2_with(
    sc: &BcScenario,
    init: &TrainingSequence,
    tol: f64,
    max_iter: usize,
    accel: Acceleration,
) -> Result<BcDesignReport> {
    check_init(sc, init)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let out = alternating_minimization(&both_links(sc), &bc_constraints(sc), &init.s, tol, max_iter, accel, solve_ball_qcqp)?;
    report(sc, out.s, out.trace, out.multipliers[0], out.kkt_residual, BcMethod::Iterative, out.iterations)
}

/// Relay update problem with both estimators fixed at their optimum for `s`.
pub fn relay_subproblem(sc: &BcScenario, s: &CMat) -> Result<BallQp> {
    let q = surrogate(&both_links(sc), s)?;
    Ok(BallQp::new(&q.a, &q.c))
}

/// KKT residual of the relay QCQP at `s` with multiplier `λ`.
pub fn bc_kkt_residual(sc: &BcScenario, s: &CMat, lambda: f64) -> Result<f64> {
    let q = surrogate(&both_links(sc), s)?;
    let p = QcqpProblem { a: q.a, c: q.c, constraints: bc_constraints(sc) };
    Ok(p.kkt_residual(&vec(s), &[lambda]))
}

fn white_level(sc: &BcScenario, side: usize) -> Result<f64> {
    scaled_identity(&sc.links[side - 1].k_q, 1e-12)
        .filter(|q| *q > 0.0)
        .ok_or_else(|| Error::WrongScenarioKind(format!("temporal disturbance at source {side} is not a multiple of the identity")))
}

fn check_length(sc: &BcScenario) -> Result<()> {
    if sc.l_r < sc.m() {
        return Err(Error::LengthTooShort { got: sc.l_r, required: sc.m() });
    }
    Ok(())
}

/// Modal terms of one side: `σ_{r,n}σ_{t,m}/(1 + β_n σ_{t,m} p_m/δ_m)`,
/// with `δ_m` the temporal disturbance level seen by mode `m`.
fn side_terms(sigma_t: &[f64], gains: &[(f64, f64)], temporal: &[f64]) -> Vec<ModalTerm> {
    let mut terms = Vec::new();
    for (m, &st) in sigma_t.iter().enumerate() {
        let st = st.max(0.0);
        for &(sr, beta) in gains {
            terms.push(ModalTerm { mode: m, c: sr * st, d: beta * st / temporal[m] });
        }
    }
    terms
}

/// Builds `S_R = U*_t diag(√p) Vᵀ` from the first `M` columns of `v`.
fn modal_training(sc: &BcScenario, powers: &[f64], v: &CMat) -> CMat {
    let u = sc.g1.eig_t.vectors.conjugate();
    let m = sc.m();
    let mut s = CMat::zeros(m, sc.l_r);
    for k in 0..m {
        let col = u.column(k) * c(powers[k].max(0.0).sqrt());
        s += col * v.column(k).transpose();
    }
    s
}

/// `K_{q,1} = q₁I` with arbitrary `K_{q,2}`: `S_R = U*_t Σ U_{q,2}ᵀ`, pairing
/// the strongest transmit modes with the quietest temporal modes of source 2.
///
/// The structure is optimal only when the covariance eigenvalues are small;
/// otherwise it is a close approximation.
pub fn svd_design_mixed(sc: &BcScenario) -> Result<BcDesignReport> {
    let q1 = white_level(sc, 1)?;
    check_length(sc)?;
    let m = sc.m();
    let eig_q2 = hermitian_eig(&sc.links[1].k_q);
    let l = sc.l_r;
    // ascending temporal eigenvalues
    let order: Vec<usize> = (0..l).rev().collect();
    let v = CMat::from_fn(l, l, |i, k| eig_q2.vectors[(i, order[k])]);
    let delta_q2: Vec<f64> = order.iter().map(|&k| eig_q2.values[k]).collect();
    if delta_q2[..m].iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Singular("temporal disturbance at source 2 is singular".into()));
    }
    let sigma_t = &sc.g1.eig_t.values;
    let mut terms = side_terms(sigma_t, &mode_gains(&sc.links[0], q1), &vec![1.0; m]);
    terms.extend(side_terms(sigma_t, &mode_gains(&sc.links[1], 1.0), &delta_q2));
    let alloc = allocate(&terms, m, sc.tau_r)?;
    let s = modal_training(sc, &alloc.powers, &v);
    let kkt = bc_kkt_residual(sc, &s, alloc.lambda)?;
    report(sc, s, Vec::new(), alloc.lambda, kkt, BcMethod::SvdMixed, 0)
}

/// `K_{q,i} = q_iI` on both sides: `S_R = U*_t Σ` padded with zero columns.
pub fn svd_design_white(sc: &BcScenario) -> Result<BcDesignReport> {
    let q1 = white_level(sc, 1)?;
    let q2 = white_level(sc, 2)?;
    check_length(sc)?;
    let m = sc.m();
    let sigma_t = &sc.g1.eig_t.values;
    let ones = vec![1.0; m];
    let mut terms = side_terms(sigma_t, &mode_gains(&sc.links[0], q1), &ones);
    terms.extend(side_terms(sigma_t, &mode_gains(&sc.links[1], q2), &ones));
    let alloc = allocate(&terms, m, sc.tau_r)?;
    let s = modal_training(sc, &alloc.powers, &identity(sc.l_r));
    let kkt = bc_kkt_residual(sc, &s, alloc.lambda)?;
    report(sc, s, Vec::new(), alloc.lambda, kkt, BcMethod::SvdWhite, 0)
}

/// Trace-inverse program in `Q = S_RᵀS_R*` for `Z_{t,G} = aI` and `L_R = M`:
/// `Σᵢ Σₙ aσ_{r,i,n} Tr[(I + aβ_{i,n} K_{q,i}^{-1/2} Q K_{q,i}^{-1/2})⁻¹]`
/// subject to `Tr Q ≤ τ_R`.
pub fn bc_psd_problem(sc: &BcScenario) -> Result<PsdTraceInverseProblem> {
    let a = scaled_identity(&sc.g1.z_t, 1e-12)
        .filter(|a| *a > 0.0)
        .ok_or_else(|| Error::WrongScenarioKind("relay transmit covariance is not a multiple of the identity".into()))?;
    check_length(sc)?;
    if sc.l_r != sc.m() {
        return Err(Error::WrongScenarioKind(format!("the convex relay design needs L_R = M, got {} and {}", sc.l_r, sc.m())));
    }
    let l = sc.l_r;
    let mut terms = Vec::new();
    for link in &sc.links {
        let root = pd_inv_sqrt(&link.k_q)?;
        for (sr, beta) in mode_gains(link, 1.0) {
            terms.push(TraceInverseTerm {
                weight: a * sr,
                outer: identity(l),
                base: identity(l),
                alpha: a * beta,
                congruence: Some(root.clone()),
            });
        }
    }
    Ok(PsdTraceInverseProblem { dim: l, terms, constraints: vec![PsdConstraint { selector: identity(l), bound: sc.tau_r }] })
}

pub fn convex_qr_design(sc: &BcScenario) -> Result<BcDesignReport> {
    let problem = bc_psd_problem(sc)?;
    let sol = solve_psd_trace_inverse(&problem, 1e-11)?;
    // Q = SᵀS* with S = (UΛ^{1/2})ᵀ
    let eig = hermitian_eig(&sol.q);
    let l = sc.l_r;
    let mut f = CMat::zeros(l, l);
    for k in 0..l {
        f.set_column(k, &(eig.vectors.column(k) * c(eig.values[k].max(0.0).sqrt())));
    }
    let mut s = f.transpose();
    let p = s.norm_squared();
    if p > sc.tau_r && p > 0.0 {
        s *= c((sc.tau_r / p).sqrt());
    }
    report(sc, s, Vec::new(), sol.multipliers[0], sol.kkt_residual, BcMethod::ConvexQr, sol.iterations)
}

/// Iterative design from the identity start with the default stopping rule.
pub fn algorithm2_default(sc: &BcScenario) -> Result<BcDesignReport> {
    algorithm2(sc, &identity_init(sc), DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Error floor for `l_r < M`:
/// `Σ_{m > l_r} σ_{t,G,m} · (Σₙ σ_{r,G₁,n} + Σₙ σ_{r,G₂,n})`.
pub fn bc_mse_floor(sc: &BcScenario, l_r: usize) -> f64 {
    let st: f64 = sc.g1.eig_t.values.iter().skip(l_r).map(|v| v.max(0.0)).sum();
    let sr: f64 = [&sc.g1, &sc.g2].iter().flat_map(|g| g.eig_r.values.iter()).map(|v| v.max(0.0)).sum();
    st * sr
}

pub fn min_training_length_bc(sc: &BcScenario) -> usize {
    sc.m()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alternate::weighted_mse;
    use crate::channel::{ar1_temporal_cov, bessel_spatial_cov, make_disturbance, DisturbanceKind};
    use crate::linalg::CVec;
    use crate::rng::stream;

    const NP: DisturbanceKind = DisturbanceKind::NoisePlus { mu: 1.0, nu: 1.0 };

    fn scenario(z_t: CMat, n: (usize, usize), kq: (CMat, CMat), tau: f64) -> BcScenario {
        let z1 = bessel_spatial_cov(n.0, 1.9, n.0 as f64);
        let z2 = bessel_spatial_cov(n.1, 0.3, n.1 as f64);
        let d1 = make_disturbance(NP, &z1, kq.0).unwrap();
        let d2 = make_disturbance(NP, &z2, kq.1).unwrap();
        BcScenario::new(z_t, z1, z2, d1, d2, tau).unwrap()
    }

    fn colored(m: usize, tau: f64) -> BcScenario {
        let kq = (ar1_temporal_cov(m, 0.6, 1.0).unwrap(), ar1_temporal_cov(m, -0.8, 1.5).unwrap());
        scenario(bessel_spatial_cov(m, 1.2, m as f64), (2, 2), kq, tau)
    }

    fn golden(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (a, b);
        for _ in 0..200 {
            let x1 = b - r * (b - a);
            let x2 = a + r * (b - a);
            if f(x1) < f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn zero_budget_keeps_the_prior() {
        let sc = colored(2, 0.0);
        let r = algorithm2(&sc, &identity_init(&sc), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.seq.s.norm(), 0.0);
        assert!((r.mse_total - sc.prior_trace()).abs() < 1e-12);
    }

    #[test]
    fn algorithm2_is_monotone_and_stationary() {
        let sc = colored(3, 5.0);
        let r = algorithm2(&sc, &identity_init(&sc), 1e-13, 2000).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
        assert!(r.seq.is_feasible(1e-8));
        assert!(r.kkt_residual < 1e-6, "kkt {}", r.kkt_residual);
        let plain = algorithm2_with(&sc, &identity_init(&sc), 1e-6, 200, Acceleration::None).unwrap();
        assert!(plain.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
        assert!(r.mse_total <= plain.mse_total * (1.0 + 1e-9));
    }

    #[test]
    fn symmetric_sides_share_the_error() {
        let z = bessel_spatial_cov(2, 1.0, 2.0);
        let kq = ar1_temporal_cov(2, 0.5, 1.0).unwrap();
        let d = make_disturbance(NP, &z, kq).unwrap();
        let sc = BcScenario::new(bessel_spatial_cov(2, 1.4, 2.0), z.clone(), z, d.clone(), d, 3.0).unwrap();
        let r = algorithm2_default(&sc).unwrap();
        assert!((r.per_side.0 - r.per_side.1).abs() <= 1e-6 * r.per_side.0);
    }

    #[test]
    fn scalar_instance_matches_grid_search() {
        let one = |v: f64| CMat::from_element(1, 1, c(v));
        let sc = scenario(one(1.3), (1, 1), (one(0.7), one(2.0)), 2.5);
        let r = algorithm2_default(&sc).unwrap();
        let mse = |x: f64| bc_mse_pair(&sc, &TrainingSequence::bc(one(x), 2.5)).map(|(a, b)| a + b).unwrap();
        let best = (0..=2000).map(|k| mse(2.5f64.sqrt() * k as f64 / 2000.0)).fold(f64::INFINITY, f64::min);
        assert!((r.mse_total - best).abs() <= 0.01 * best);
    }

    #[test]
    fn relay_bound_keeps_power_below_budget() {
        for seed in 0..20 {
            let sc = colored(3, 0.5 + seed as f64);
            let s = random_init(&sc, &mut stream(seed, 0)).s;
            let qp = relay_subproblem(&sc, &s).unwrap();
            let tau = sc.tau_r;
            let hi = qp.lambda_upper_bound(tau);
            if hi > 0.0 {
                assert!(qp.g(hi) <= tau * (1.0 + 1e-12));
            }
            let (x, _) = qp.solve(tau).unwrap();
            assert!(x.norm_squared() <= tau * (1.0 + 1e-8));
        }
    }

    #[test]
    fn single_antenna_relay_uses_full_power() {
        let one = |v: f64| CMat::from_element(1, 1, c(v));
        let sc = scenario(one(1.0), (2, 2), (one(0.8), one(1.7)), 3.0);
        for r in [svd_design_mixed(&sc).unwrap(), svd_design_white(&sc).unwrap()] {
            assert!((r.seq.s.norm_squared() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_reduces_to_white() {
        let m = 3;
        let kq = (identity(m) * c(0.9), identity(m) * c(1.6));
        let sc = scenario(bessel_spatial_cov(m, 1.2, 3.0), (2, 2), kq, 4.0);
        let a = svd_design_mixed(&sc).unwrap();
        let b = svd_design_white(&sc).unwrap();
        assert!((a.mse_total - b.mse_total).abs() <= 1e-9 * b.mse_total);
    }

    #[test]
    fn white_powers_match_golden_section() {
        let kq = (identity(2) * c(0.9), identity(2) * c(1.6));
        let sc = scenario(bessel_spatial_cov(2, 1.2, 2.0), (2, 2), kq, 3.0);
        let r = svd_design_white(&sc).unwrap();
        let u = sc.g1.eig_t.vectors.conjugate();
        let p1 = (u.adjoint() * &r.seq.s).row(0).norm_squared();
        let f = |x: f64| {
            let s = modal_training(&sc, &[x, 3.0 - x], &identity(2));
            bc_mse_pair(&sc, &TrainingSequence::bc(s, 3.0)).map(|(a, b)| a + b).unwrap()
        };
        assert!((p1 - golden(f, 0.0, 3.0)).abs() < 1e-4);
    }

    #[test]
    fn equal_gains_give_classical_waterfilling() {
        // identical sides with white spatial statistics: every mode term has the same β
        let eye = |n: usize| identity(n);
        let z_t = CMat::from_diagonal(&CVec::from_vec(vec![c(1.6), c(1.0), c(0.4)]));
        let d = make_disturbance(DisturbanceKind::NoiseLimited { mu: 1.0 }, &eye(2), eye(3) * c(0.5)).unwrap();
        let sc = BcScenario::new(z_t, eye(2), eye(2), d.clone(), d, 2.0).unwrap();
        let r = svd_design_white(&sc).unwrap();
        let beta = 1.0 / 0.5;
        // Σ σ/(1 + βσp) on the simplex: p = (1/√(βν) − 1/(βσ))⁺
        let sig = [1.6, 1.0, 0.4];
        let level = |nu: f64| sig.iter().map(|s| ((1.0 / (beta * nu)).sqrt() - 1.0 / (beta * s)).max(0.0)).sum::<f64>();
        let (mut lo, mut hi): (f64, f64) = (1e-9, 1e3);
        for _ in 0..300 {
            let mid = (lo * hi).sqrt();
            if level(mid) > 2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let nu = (lo * hi).sqrt();
        let expect: Vec<f64> = sig.iter().map(|s| ((1.0 / (beta * nu)).sqrt() - 1.0 / (beta * s)).max(0.0)).collect();
        let u = sc.g1.eig_t.vectors.conjugate();
        let proj = u.adjoint() * &r.seq.s;
        for k in 0..3 {
            assert!((proj.row(k).norm_squared() - expect[k]).abs() < 1e-6, "mode {k}");
        }
    }

    #[test]
    fn white_design_is_unitarily_invariant() {
        let kq = (identity(3) * c(0.9), identity(3) * c(1.6));
        let sc = scenario(bessel_spatial_cov(3, 1.2, 3.0), (2, 2), kq, 4.0);
        let r = svd_design_white(&sc).unwrap();
        let v = hermitian_eig(&(complex_normal_matrix(&mut stream(8, 0), 3, 3) + complex_normal_matrix(&mut stream(8, 0), 3, 3).adjoint())).vectors;
        let rotated = TrainingSequence::bc(&r.seq.s * v, 4.0);
        let (a, b) = bc_mse_pair(&sc, &rotated).unwrap();
        assert!((a + b - r.mse_total).abs() <= 1e-10 * r.mse_total);
    }

    #[test]
    fn convex_qr_with_white_temporal_matches_svd() {
        let m = 3;
        let sc = scenario(identity(m) * c(1.2), (2, 2), (identity(m), identity(m)), 4.0);
        let a = convex_qr_design(&sc).unwrap();
        let b = svd_design_white(&sc).unwrap();
        assert!((a.mse_total - b.mse_total).abs() <= 0.005 * b.mse_total);
    }

    #[test]
    fn convex_qr_spends_the_budget() {
        let m = 3;
        let kq = (ar1_temporal_cov(m, 0.6, 1.0).unwrap(), ar1_temporal_cov(m, -0.8, 1.5).unwrap());
        let sc = scenario(identity(m) * c(1.2), (2, 2), kq, 4.0);
        let r = convex_qr_design(&sc).unwrap();
        assert!((r.seq.s.norm_squared() - 4.0).abs() <= 1e-8 * 4.0);
        let zero = convex_qr_design(&sc.with_budget(0.0).unwrap()).unwrap();
        assert_eq!(zero.seq.s.norm(), 0.0);
        let it = algorithm2(&sc, &identity_init(&sc), 1e-10, 1000).unwrap();
        assert!((r.mse_total - it.mse_total).abs() <= 0.005 * it.mse_total);
    }

    #[test]
    fn special_designs_reject_other_scenarios() {
        let sc = colored(3, 2.0);
        assert!(matches!(svd_design_mixed(&sc), Err(Error::WrongScenarioKind(_))));
        assert!(matches!(svd_design_white(&sc), Err(Error::WrongScenarioKind(_))));
        assert!(matches!(convex_qr_design(&sc), Err(Error::WrongScenarioKind(_))));
    }

    #[test]
    fn floor_formula() {
        let sc = scenario(identity(3), (3, 3), (identity(2), identity(2)), 1.0);
        let z1 = bessel_spatial_cov(3, 1.9, 3.0);
        assert!((sc.g1.eig_r.values.iter().sum::<f64>() - crate::linalg::trace_re(&z1)).abs() < 1e-12);
        assert!((bc_mse_floor(&sc, 2) - 6.0).abs() < 1e-12);
        assert_eq!(bc_mse_floor(&sc, 3), 0.0);
        assert_eq!(min_training_length_bc(&sc), 3);
        assert!(matches!(svd_design_white(&sc), Err(Error::LengthTooShort { got: 2, required: 3 })));
    }

    #[test]
    fn designs_beat_the_identity_start() {
        let sc = colored(3, 4.0);
        let e0 = weighted_mse(&both_links(&sc), &identity_init(&sc).s).unwrap();
        let r = algorithm2_default(&sc).unwrap();
        assert!(r.mse_total <= e0);
    }
}
