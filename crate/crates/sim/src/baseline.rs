//! Reference designs the proposed methods are compared against.

use twr_core::alternate::{alternating_minimization, Acceleration, WeightedLink};
use twr_core::bc::{bc_constraints, identity_init as bc_identity};
use twr_core::channel::{BcScenario, DisturbanceModel, LinkStats, MacScenario};
use twr_core::convex::{solve_ball_qcqp, QuadConstraint};
use twr_core::linalg::{c, identity, CMat};
use twr_core::lmmse::TrainingSequence;
use twr_core::{Error, Result};

/// Optimal point-to-point training for one link under `‖S‖² ≤ τ`, started
/// from the scaled identity.
fn single_link(link: &LinkStats, tau: f64, tol: f64, max_iter: usize) -> Result<(CMat, usize)> {
    let (n, l) = (link.n_tx(), link.length());
    let mut init = CMat::zeros(n, l);
    for i in 0..n {
        init[(i, i % l)] += c((tau / n as f64).sqrt());
    }
    let p = init.norm_squared();
    if p > 0.0 {
        init *= c((tau / p).sqrt());
    }
    let constraint = [QuadConstraint { d: identity(n * l), bound: tau }];
    let links = [WeightedLink { link, weight: 1.0 }];
    let out = alternating_minimization(&links, &constraint, &init, tol, max_iter, Acceleration::default(), solve_ball_qcqp)?;
    Ok((out.s, out.iterations))
}

/// The sources train in two disjoint time intervals: `S₁` occupies the first
/// `N₁` symbols and `S₂` the next `N₂`, each designed for its own channel and
/// the disturbance restricted to its interval. Remaining symbols stay silent.
pub fn p2p_orthogonal_mac(sc: &MacScenario, tol: f64, max_iter: usize) -> Result<(TrainingSequence, usize)> {
    let (n1, n2, l) = (sc.n1(), sc.n2(), sc.l_s);
    if l < n1 + n2 {
        return Err(Error::LengthTooShort { got: l, required: n1 + n2 });
    }
    let mut s = CMat::zeros(n1 + n2, l);
    let mut iterations = 0;
    for (h, lo, tau) in [(&sc.h1, 0, sc.tau1), (&sc.h2, n1, sc.tau2)] {
        let n = h.n_tx();
        let k_q = sc.disturbance.k_q.view((lo, lo), (n, n)).into_owned();
        let dist = DisturbanceModel::new(k_q, sc.disturbance.k_r.clone())?;
        let link = LinkStats::new(h.c_t.clone(), h.c_r.clone(), &dist, vec![n]);
        let (block, it) = single_link(&link, tau, tol, max_iter)?;
        s.view_mut((lo, lo), (n, n)).copy_from(&block);
        iterations += it;
    }
    Ok((TrainingSequence::mac(s, n1, sc.tau1, sc.tau2)?, iterations))
}

/// The relay designs `S_R` for its link to source 1 only.
pub fn p2p_orthogonal_bc(sc: &BcScenario, tol: f64, max_iter: usize) -> Result<(TrainingSequence, usize)> {
    let links = [WeightedLink { link: &sc.links[0], weight: 1.0 }];
    let init = bc_identity(sc);
    let out =
        alternating_minimization(&links, &bc_constraints(sc), &init.s, tol, max_iter, Acceleration::default(), solve_ball_qcqp)?;
    Ok((TrainingSequence::bc(out.s, sc.tau_r), out.iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::scenario::{bc_scenario, mac_scenario};

    #[test]
    fn mac_blocks_are_time_disjoint() {
        let sc = mac_scenario(&ScenarioConfig::default(), 10.0).unwrap();
        let (seq, _) = p2p_orthogonal_mac(&sc, 1e-8, 500).unwrap();
        assert!((seq.s1() * seq.s2().adjoint()).norm() == 0.0);
        assert!(seq.is_feasible(1e-9));
    }

    #[test]
    fn bc_baseline_is_feasible() {
        let sc = bc_scenario(&ScenarioConfig::default(), 10.0).unwrap();
        let (seq, _) = p2p_orthogonal_bc(&sc, 1e-8, 500).unwrap();
        assert!(seq.is_feasible(1e-9));
    }
}
