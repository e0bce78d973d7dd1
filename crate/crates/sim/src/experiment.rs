//! Designs training for every (method, SNR) cell and measures its NMSE both
//! analytically and by Monte-Carlo.

use std::time::Instant;

use rayon::prelude::*;
use twr_core::channel::{BcScenario, MacScenario};
use twr_core::lmmse::{bc_mse_pair, link_estimator, mac_mse, trial_error, Phase, TrainingSequence};
use twr_core::rng::{stream, StreamRng};
use twr_core::{bc, mac, Result};

use crate::baseline::{p2p_orthogonal_bc, p2p_orthogonal_mac};
use crate::config::{ExperimentConfig, Init, Method, ScenarioConfig};
use crate::error::SimError;
use crate::output::ResultRow;
use crate::scenario::{bc_scenario, mac_scenario};

/// Stream ids with this bit set seed random initial points; the rest drive
/// Monte-Carlo trials.
const INIT_STREAMS: u64 = 1 << 63;

#[derive(Debug, Clone)]
pub enum PhaseScenario {
    Mac(MacScenario),
    Bc(BcScenario),
}

impl PhaseScenario {
    pub fn build(cfg: &ScenarioConfig, phase: Phase, snr_db: f64) -> Result<Self> {
        Ok(match phase {
            Phase::Mac => PhaseScenario::Mac(mac_scenario(cfg, snr_db)?),
            Phase::Bc => PhaseScenario::Bc(bc_scenario(cfg, snr_db)?),
        })
    }

    /// `M(N₁ + N₂)`
    pub fn n_coefficients(&self) -> usize {
        match self {
            PhaseScenario::Mac(sc) => sc.n_coefficients(),
            PhaseScenario::Bc(sc) => sc.n_coefficients(),
        }
    }

    pub fn prior_trace(&self) -> f64 {
        match self {
            PhaseScenario::Mac(sc) => sc.prior_trace(),
            PhaseScenario::Bc(sc) => sc.prior_trace(),
        }
    }

    /// Total analytic error of the LMMSE estimators for `seq`.
    pub fn mse(&self, seq: &TrainingSequence) -> Result<f64> {
        match self {
            PhaseScenario::Mac(sc) => mac_mse(sc, seq),
            PhaseScenario::Bc(sc) => bc_mse_pair(sc, seq).map(|(a, b)| a + b),
        }
    }
}

/// A designed training sequence and how it was reached.
#[derive(Debug, Clone)]
pub struct Design {
    pub seq: TrainingSequence,
    pub mse: f64,
    /// Error per iteration; a single entry for the direct designs.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Settings shared by all cells of one experiment.
#[derive(Debug, Clone, Copy)]
pub struct DesignSettings {
    pub init: Init,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl DesignSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let e = &cfg.experiment;
        Self { init: e.init, tol: e.tol, max_iter: e.max_iter, seed: e.seed }
    }
}

fn from_mac(r: mac::MacDesignReport) -> Design {
    Design { mse: r.mse, trace: r.trace, iterations: r.iterations, seq: r.seq }
}

fn from_bc(r: bc::BcDesignReport) -> Design {
    Design { mse: r.mse_total, trace: r.trace, iterations: r.iterations, seq: r.seq }
}

fn direct(sc: &PhaseScenario, seq: TrainingSequence, iterations: usize) -> Result<Design> {
    let mse = sc.mse(&seq)?;
    Ok(Design { seq, mse, trace: vec![mse], iterations })
}

/// Runs the iterative design from each starting point the settings ask for
/// and keeps the best result.
fn best_start<S, F>(
    settings: &DesignSettings,
    cell: u64,
    identity: impl Fn() -> S,
    random: impl Fn(&mut StreamRng) -> S,
    run: F,
) -> Result<Design>
where
    F: Fn(&S) -> Result<Design>,
{
    match settings.init {
        Init::Identity => run(&identity()),
        Init::Random(n) => {
            let mut best: Option<Design> = None;
            for k in 0..n as u64 {
                let mut rng = stream(settings.seed, INIT_STREAMS | cell << 32 | k);
                let d = run(&random(&mut rng))?;
                if best.as_ref().is_none_or(|b| d.mse < b.mse) {
                    best = Some(d);
                }
            }
            Ok(best.expect("at least one random start"))
        }
    }
}

/// Designs the training for `method`; `cell` separates the random starts of
/// different SNR points.
pub fn design(method: Method, sc: &PhaseScenario, settings: &DesignSettings, cell: u64) -> Result<Design> {
    let (tol, max_iter) = (settings.tol, settings.max_iter);
    match (method, sc) {
        (Method::Algorithm1, PhaseScenario::Mac(sc)) => best_start(
            settings,
            cell,
            || mac::identity_init(sc),
            |rng| mac::random_init(sc, rng),
            |init| mac::algorithm1(sc, init, tol, max_iter).map(from_mac),
        ),
        (Method::KktClosedForm, PhaseScenario::Mac(sc)) => best_start(
            settings,
            cell,
            || mac::identity_init(sc),
            |rng| mac::random_init(sc, rng),
            |init| mac::kkt_closed_form_from(sc, init, tol, max_iter).map(from_mac),
        ),
        (Method::Waterfilling, PhaseScenario::Mac(sc)) => mac::waterfilling_design(sc).map(from_mac),
        (Method::ConvexPsd, PhaseScenario::Mac(sc)) => mac::convex_psd_design(sc).map(from_mac),
        (Method::Algorithm2, PhaseScenario::Bc(sc)) => best_start(
            settings,
            cell,
            || bc::identity_init(sc),
            |rng| bc::random_init(sc, rng),
            |init| bc::algorithm2(sc, init, tol, max_iter).map(from_bc),
        ),
        (Method::SvdMixed, PhaseScenario::Bc(sc)) => bc::svd_design_mixed(sc).map(from_bc),
        (Method::SvdWhite, PhaseScenario::Bc(sc)) => bc::svd_design_white(sc).map(from_bc),
        (Method::ConvexQr, PhaseScenario::Bc(sc)) => bc::convex_qr_design(sc).map(from_bc),
        (Method::IdentityBaseline, PhaseScenario::Mac(s)) => direct(sc, mac::identity_init(s), 0),
        (Method::IdentityBaseline, PhaseScenario::Bc(s)) => direct(sc, bc::identity_init(s), 0),
        (Method::P2pOrthogonalBaseline, PhaseScenario::Mac(s)) => {
            let (seq, it) = p2p_orthogonal_mac(s, tol, max_iter)?;
            direct(sc, seq, it)
        }
        (Method::P2pOrthogonalBaseline, PhaseScenario::Bc(s)) => {
            let (seq, it) = p2p_orthogonal_bc(s, tol, max_iter)?;
            direct(sc, seq, it)
        }
        (m, _) => Err(twr_core::Error::WrongScenarioKind(format!("`{m}` does not apply to this phase"))),
    }
}

/// Mean of `‖H − Ĥ‖²_F` over `trials` draws. Trial `t` of SNR point `cell`
/// always uses the same random stream, so every method sees the same channel
/// and disturbance realisations.
pub fn monte_carlo(sc: &PhaseScenario, seq: &TrainingSequence, trials: usize, seed: u64, cell: u64) -> Result<f64> {
    let links = match sc {
        PhaseScenario::Mac(sc) => vec![&sc.link],
        PhaseScenario::Bc(sc) => vec![&sc.links[0], &sc.links[1]],
    };
    let estimators = links.iter().map(|l| link_estimator(l, &seq.s)).collect::<Result<Vec<_>>>()?;
    let errors = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, cell << 32 | t);
            let mut e = 0.0;
            for (link, est) in links.iter().zip(&estimators) {
                e += trial_error(link, &seq.s, est, &mut rng)?;
            }
            Ok(e)
        })
        .collect::<Result<Vec<f64>>>()?;
    // summed in trial order so the result does not depend on the thread count
    Ok(errors.iter().sum::<f64>() / trials as f64)
}

/// Every (method, SNR) cell of the experiment, method-major.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::result::Result<Vec<ResultRow>, SimError> {
    cfg.validate()?;
    let e = &cfg.experiment;
    let settings = DesignSettings::from_config(cfg);
    let scenarios = e
        .snr_grid
        .iter()
        .map(|&snr| PhaseScenario::build(&cfg.scenario, e.phase, snr))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(e.methods.len() * e.snr_grid.len());
    for &method in &e.methods {
        for (idx, (sc, &snr_db)) in scenarios.iter().zip(&e.snr_grid).enumerate() {
            let wrap = |source| SimError::Design { method, snr_db, source };
            let start = Instant::now();
            let d = design(method, sc, &settings, idx as u64).map_err(wrap)?;
            let empirical = monte_carlo(sc, &d.seq, e.trials, e.seed, idx as u64).map_err(wrap)?;
            let norm = sc.n_coefficients() as f64;
            rows.push(ResultRow {
                method,
                snr_db,
                analytic_nmse: d.mse / norm,
                empirical_nmse: empirical / norm,
                iterations: d.iterations,
                wall_time: if e.timing { start.elapsed().as_secs_f64() } else { 0.0 },
                seed: e.seed,
            });
        }
    }
    Ok(rows)
}

/// Error trace of one design, for convergence plots.
pub fn convergence(cfg: &ExperimentConfig, method: Method, snr_db: f64) -> std::result::Result<Vec<f64>, SimError> {
    let sc = PhaseScenario::build(&cfg.scenario, cfg.experiment.phase, snr_db)?;
    let cell = cfg.experiment.snr_grid.iter().position(|&v| v == snr_db).unwrap_or(0) as u64;
    let d = design(method, &sc, &DesignSettings::from_config(cfg), cell)
        .map_err(|source| SimError::Design { method, snr_db, source })?;
    Ok(d.trace)
}
