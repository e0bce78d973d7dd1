//! Alternating minimization shared by the iterative designers: fix the
//! training, update every LMMSE estimator; fix the estimators, solve the
//! convex QCQP in the training.

use std::collections::VecDeque;

use crate::channel::LinkStats;
use crate::convex::{solve_qcqp, QcqpProblem, QcqpSolution, QuadConstraint};
use crate::error::{Error, Result};
use crate::linalg::{unvec, vec, CMat, CVec};
use num_complex::Complex64;
use crate::lmmse::{link_estimator, link_mse, training_quadratic, TrainingQuadratic};

/// Accept a step if it does not increase the error by more than this.
const ACCEPT_SLACK: f64 = 1e-12;
/// An increase beyond this is reported as a solver failure.
const MONOTONE_SLACK: f64 = 1e-9;
/// KKT target handed to the inner QCQP solver.
const QCQP_TOL: f64 = 1e-10;

/// A link whose error enters the objective with a positive weight.
#[derive(Debug, Clone, Copy)]
pub struct WeightedLink<'a> {
    pub link: &'a LinkStats,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct AlternatingOutcome {
    pub s: CMat,
    pub mse: f64,
    /// `trace[0]` is the error of the initial point, one entry per accepted step.
    pub trace: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Inner QCQP solves spent, counting the extrapolation steps.
    pub qcqp_solves: usize,
}

pub fn weighted_mse(links: &[WeightedLink], s: &CMat) -> Result<f64> {
    let mut e = 0.0;
    for l in links {
        e += l.weight * link_mse(l.link, s)?;
    }
    Ok(e)
}

/// Quadratic surrogate in `vec(S)` with each estimator fixed at its optimum
/// for `s`.
pub fn surrogate(links: &[WeightedLink], s: &CMat) -> Result<TrainingQuadratic> {
    let mut q = TrainingQuadratic::zero(s.nrows(), s.ncols());
    for l in links {
        let est = link_estimator(l.link, s)?;
        q.add_scaled(&training_quadratic(l.link, &est.t)?, l.weight);
    }
    Ok(q)
}

fn qcqp_from(q: TrainingQuadratic, constraints: &[QuadConstraint]) -> QcqpProblem {
    QcqpProblem { a: q.a, c: q.c, constraints: constraints.to_vec() }
}

/// How consecutive alternation steps are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Acceleration {
    /// One estimator update and one QCQP solve per iteration.
    None,
    /// Anderson mixing over the last few steps. The mixed point is kept only
    /// when it beats the plain step, so the trace stays non-increasing.
    Anderson,
    /// After each plain step, a limited-memory BFGS step on the error
    /// gradient, pulled back onto the budgets; taken only if it passes an
    /// Armijo test, so the trace stays non-increasing.
    #[default]
    QuasiNewton,
}

const ANDERSON_MEMORY: usize = 5;
const LBFGS_MEMORY: usize = 5;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 20;

struct Stepper<'a, 'b> {
    links: &'a [WeightedLink<'b>],
    constraints: &'a [QuadConstraint],
    rows: usize,
    cols: usize,
    solves: usize,
    inner: InnerSolver,
}

/// Solver for the training QCQP with the estimators fixed.
pub type InnerSolver = fn(&QcqpProblem) -> Result<QcqpSolution>;

/// General-purpose inner solver with the alternation's accuracy target.
pub fn default_inner(p: &QcqpProblem) -> Result<QcqpSolution> {
    solve_qcqp(p, QCQP_TOL)
}

impl Stepper<'_, '_> {
    /// One alternation step: estimator update followed by the QCQP.
    fn step(&mut self, s: &CMat) -> Result<(CMat, f64)> {
        let q = surrogate(self.links, s)?;
        self.solve(q)
    }

    fn solve(&mut self, q: TrainingQuadratic) -> Result<(CMat, f64)> {
        self.solves += 1;
        let sol = (self.inner)(&qcqp_from(q, self.constraints))?;
        let next = unvec(&sol.s, self.rows, self.cols)?;
        let e = weighted_mse(self.links, &next)?;
        Ok((next, e))
    }

    /// Drops the outward component of `g` on every block sitting at its
    /// budget.
    fn tangent(&self, v: &CVec, g: &CVec) -> CVec {
        let mut t = g.clone();
        for k in self.constraints {
            let sel = &k.d * v;
            let p = v.dotc(&sel).re;
            let out = sel.dotc(g).re;
            if p >= k.bound * (1.0 - 1e-9) && p > 0.0 && out < 0.0 {
                t -= sel * Complex64::from(out / p);
            }
        }
        t
    }

    /// Pulls every constrained block back onto its budget.
    fn project(&self, s: &CMat) -> Result<CMat> {
        let mut v = vec(s);
        for k in self.constraints {
            let sel = &k.d * &v;
            let p = v.dotc(&sel).re;
            if p > k.bound && p > 0.0 {
                v += sel * Complex64::from((k.bound / p).sqrt() - 1.0);
            }
        }
        unvec(&v, self.rows, self.cols)
    }
}

fn re_dot(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).re
}

/// Two-loop recursion: approximate inverse Hessian times `g`.
fn lbfgs_direction(mem: &VecDeque<(CVec, CVec)>, g: &CVec, first_scale: f64) -> CVec {
    let mut q = g.clone();
    let mut coef = Vec::with_capacity(mem.len());
    for (ds, dg) in mem.iter().rev() {
        let rho = 1.0 / re_dot(dg, ds);
        let a = rho * re_dot(ds, &q);
        q -= dg * Complex64::from(a);
        coef.push((a, rho));
    }
    let gamma = match mem.back() {
        Some((ds, dg)) => re_dot(ds, dg) / re_dot(dg, dg),
        None => first_scale,
    };
    q *= Complex64::from(gamma);
    for ((ds, dg), (a, rho)) in mem.iter().zip(coef.iter().rev()) {
        let b = rho * re_dot(dg, &q);
        q += ds * Complex64::from(a - b);
    }
    -q
}

fn check_monotone(iteration: usize, previous: f64, current: f64) -> Result<()> {
    if current > previous * (1.0 + MONOTONE_SLACK) {
        return Err(Error::NonMonotoneStep { iteration, previous, current });
    }
    Ok(())
}

/// Runs the alternation from `init` until the relative decrease falls below
/// `tol` or `max_iter` iterations have been taken.
///
/// The constraints must be disjoint diagonal selectors, as produced by the
/// phase designers.
pub fn alternating_minimization(
    links: &[WeightedLink],
    constraints: &[QuadConstraint],
    init: &CMat,
    tol: f64,
    max_iter: usize,
    accel: Acceleration,
    inner: InnerSolver,
) -> Result<AlternatingOutcome> {
    let (rows, cols) = init.shape();
    let mut st = Stepper { links, constraints, rows, cols, solves: 0, inner };
    let mut s = init.clone();
    let mut e = weighted_mse(links, &s)?;
    let mut trace = vec![e];
    let mut iterations = 0;
    let (mut dg, mut df): (Vec<CVec>, Vec<CVec>) = (Vec::new(), Vec::new());
    let mut last: Option<(CVec, CVec)> = None;
    let mut curvature: VecDeque<(CVec, CVec)> = VecDeque::new();
    while iterations < max_iter {
        iterations += 1;
        let (s_new, e_new) = match accel {
            Acceleration::QuasiNewton => {
                let (f, ef) = st.step(&s)?;
                check_monotone(iterations, e, ef)?;
                let v = vec(&f);
                let q = surrogate(links, &f)?;
                // gradient of the error in vec(S) with the estimators at their optimum
                let g = st.tangent(&v, &((&q.a * &v - &q.c) * Complex64::from(2.0)));
                if let Some((v_prev, g_prev)) = last.take() {
                    let (ds, dy) = (&v - v_prev, &g - g_prev);
                    if re_dot(&ds, &dy) > 1e-14 * ds.norm() * dy.norm() {
                        curvature.push_back((ds, dy));
                        if curvature.len() > LBFGS_MEMORY {
                            curvature.pop_front();
                        }
                    }
                }
                // first step as long as the plain one
                let scale = (&v - vec(&s)).norm() / g.norm().max(f64::MIN_POSITIVE);
                let d = lbfgs_direction(&curvature, &g, scale);
                let slope = re_dot(&d, &g);
                last = Some((v.clone(), g));
                let mut best = (f, ef);
                if slope < 0.0 {
                    let mut alpha = 1.0;
                    for _ in 0..MAX_BACKTRACK {
                        let cand = st.project(&unvec(&(&v + &d * Complex64::from(alpha)), rows, cols)?)?;
                        let ec = weighted_mse(links, &cand)?;
                        if ec <= ef + ARMIJO * alpha * slope {
                            best = (cand, ec);
                            break;
                        }
                        alpha *= 0.5;
                    }
                }
                best
            }
            Acceleration::Anderson => {
                let (f, ef) = st.step(&s)?;
                check_monotone(iterations, e, ef)?;
                let g = vec(&f) - vec(&s);
                let fv = vec(&f);
                let mut best = (f, ef);
                if let Some((g_prev, f_prev)) = &last {
                    dg.push(&g - g_prev);
                    df.push(&fv - f_prev);
                    if dg.len() > ANDERSON_MEMORY {
                        dg.remove(0);
                        df.remove(0);
                    }
                }
                if !dg.is_empty() {
                    let gm = CMat::from_columns(&dg);
                    let fm = CMat::from_columns(&df);
                    if let Ok(gamma) = gm.clone().svd(true, true).solve(&g, 1e-12 * gm.norm()) {
                        let mixed = &fv - &fm * gamma;
                        let cand = st.project(&unvec(&mixed, rows, cols)?)?;
                        let ec = weighted_mse(links, &cand)?;
                        if ec < best.1 {
                            best = (cand, ec);
                        } else {
                            dg.clear();
                            df.clear();
                        }
                    }
                }
                last = Some((g, fv));
                best
            }
            Acceleration::None => {
                let (s1, e1) = st.step(&s)?;
                check_monotone(iterations, e, e1)?;
                (s1, e1)
            }
        };
        if e_new > e * (1.0 + ACCEPT_SLACK) {
            break;
        }
        let rel = (e - e_new).abs() / e.abs().max(f64::MIN_POSITIVE);
        s = s_new;
        e = e_new;
        trace.push(e);
        if rel < tol {
            break;
        }
    }
    // certificate for the final point: its own surrogate problem
    let problem = qcqp_from(surrogate(links, &s)?, constraints);
    let sol = inner(&problem)?;
    let kkt_residual = problem.kkt_residual(&vec(&s), &sol.multipliers);
    Ok(AlternatingOutcome {
        s,
        mse: e,
        trace,
        multipliers: sol.multipliers,
        kkt_residual,
        iterations,
        qcqp_solves: st.solves,
    })
}
