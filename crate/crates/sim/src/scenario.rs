//! Scenario construction at a given SNR.
//!
//! SNR(dB) = 10·log₁₀(P/μ) with μ the white-noise floor (`system.noise`).
//! The sources share `τ₁ + τ₂ = 2P`; the relay gets `τ_R = relay_power·P`.
//! Spatial covariances are uniform-linear-array Bessel models normalised to
//! `Tr Z = ` antenna count; the temporal disturbance is AR(1).

use twr_core::channel::{
    ar1_temporal_cov, bessel_spatial_cov, make_disturbance, BcScenario, DisturbanceKind, MacScenario,
};
use twr_core::linalg::identity;
use twr_core::Result;

use crate::config::{ScenarioConfig, Spatial};

pub fn power_at(snr_db: f64, noise: f64) -> f64 {
    noise * 10f64.powf(snr_db / 10.0)
}

fn kind(spatial: Spatial, noise: f64, i_q: f64) -> DisturbanceKind {
    match spatial {
        Spatial::NoisePlusInterference => DisturbanceKind::NoisePlus { mu: noise, nu: i_q },
        Spatial::InterferenceLimited => DisturbanceKind::NoisePlus { mu: 0.0, nu: i_q },
        Spatial::NoiseLimited => DisturbanceKind::NoiseLimited { mu: noise },
    }
}

pub fn mac_scenario(cfg: &ScenarioConfig, snr_db: f64) -> Result<MacScenario> {
    let (sys, mac) = (&cfg.system, &cfg.mac);
    let l_s = mac.l_s.unwrap_or(sys.n1 + sys.n2);
    let z_r = bessel_spatial_cov(sys.m, mac.d_r, sys.m as f64);
    let k_q = ar1_temporal_cov(l_s, mac.eta, 1.0)?;
    let d = make_disturbance(kind(mac.spatial, sys.noise, mac.i_q), &z_r, k_q)?;
    let p = power_at(snr_db, sys.noise);
    let [a, b] = mac.power_split;
    MacScenario::new(
        bessel_spatial_cov(sys.n1, mac.d_t1, sys.n1 as f64),
        bessel_spatial_cov(sys.n2, mac.d_t2, sys.n2 as f64),
        z_r,
        d,
        2.0 * p * a / (a + b),
        2.0 * p * b / (a + b),
    )
}

pub fn bc_scenario(cfg: &ScenarioConfig, snr_db: f64) -> Result<BcScenario> {
    let (sys, bc) = (&cfg.system, &cfg.bc);
    let l_r = bc.l_r.unwrap_or(sys.m);
    let z_t = if bc.white_transmit { identity(sys.m) } else { bessel_spatial_cov(sys.m, bc.d_t, sys.m as f64) };
    let z1 = bessel_spatial_cov(sys.n1, bc.d_r1, sys.n1 as f64);
    let z2 = bessel_spatial_cov(sys.n2, bc.d_r2, sys.n2 as f64);
    let d1 = make_disturbance(kind(bc.spatial, sys.noise, bc.i_q1), &z1, ar1_temporal_cov(l_r, bc.eta1, 1.0)?)?;
    let d2 = make_disturbance(kind(bc.spatial, sys.noise, bc.i_q2), &z2, ar1_temporal_cov(l_r, bc.eta2, 1.0)?)?;
    BcScenario::new(z_t, z1, z2, d1, d2, power_at(snr_db, sys.noise) * bc.relay_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use twr_core::linalg::trace_re;

    #[test]
    fn defaults_build_both_phases() {
        let cfg = ScenarioConfig::default();
        let mac = mac_scenario(&cfg, 10.0).unwrap();
        assert_eq!((mac.n1(), mac.n2(), mac.m(), mac.l_s), (3, 3, 3, 6));
        assert!((mac.tau1 + mac.tau2 - 20.0).abs() < 1e-9);
        assert!((trace_re(&mac.h1.z_t) - 3.0).abs() < 1e-12);
        let bc = bc_scenario(&cfg, 10.0).unwrap();
        assert_eq!((bc.m(), bc.l_r), (3, 3));
        assert!((bc.tau_r - 10.0).abs() < 1e-9);
    }

    #[test]
    fn power_split_is_normalised() {
        let mut cfg = ScenarioConfig::default();
        cfg.mac.power_split = [3.0, 1.0];
        let mac = mac_scenario(&cfg, 0.0).unwrap();
        assert!((mac.tau1 - 1.5).abs() < 1e-12 && (mac.tau2 - 0.5).abs() < 1e-12);
    }
}
