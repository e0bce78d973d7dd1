//! Convex solvers shared by the training designers.
//!
//! * [`solve_qcqp`]: `min sᴴAs − 2Re(cᴴs)` subject to `sᴴDᵢs ≤ τᵢ`. Small
//!   constraint counts are tried by exact active-set enumeration first; the
//!   fallback is a log-barrier Newton method in the complex domain followed by
//!   the same active-set polish.
//! * [`BallQp`] / [`solve_ball_qcqp`]: the single constraint `‖s‖² ≤ τ`.
//! * [`bisect_monotone`]: root of a decreasing scalar function.
//! * [`solve_psd_trace_inverse`]: `min Σ wₖ Tr[Wₖ (Bₖ + αₖ MₖᴴQMₖ)⁻¹]` over
//!   PSD `Q` with linear trace constraints, by projected gradient.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eig, hermitize, identity, scaled_identity, trace_re, CMat, CVec, HermitianEig, C64};

/// Finds `λ` with `g(λ) ≈ target` for a non-increasing `g`.
///
/// The upper end of the bracket is doubled (relative to `lo`) up to 200 times
/// if `g(hi)` is still above the target. The returned point satisfies
/// `|g(λ) − target| ≤ tol·max(1, |target|)`, or `g(λ) ≤ target` when the
/// bracket collapses first (e.g. at a jump of `g`).
pub fn bisect_monotone(g: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::BracketFailure(format!("invalid bracket ({lo}, {hi})")));
    }
    let scale = target.abs().max(1.0);
    let g_lo = g(lo);
    if (g_lo - target).abs() <= tol * scale {
        return Ok(lo);
    }
    if g_lo < target {
        return Err(Error::BracketFailure(format!("g(lo) = {g_lo:e} is already below the target {target:e}")));
    }
    let mut hi = hi;
    let mut g_hi = g(hi);
    let mut expansions = 0;
    while g_hi > target {
        if expansions == 200 {
            return Err(Error::BracketFailure(format!("g stays above {target:e} up to {hi:e}")));
        }
        hi = lo + 2.0 * (hi - lo);
        g_hi = g(hi);
        expansions += 1;
    }
    if (g_hi - target).abs() <= tol * scale {
        return Ok(hi);
    }
    let mut lo = lo;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if (gm - target).abs() <= tol * scale {
            return Ok(mid);
        }
        if gm > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Quadratic constraint `sᴴ D s ≤ bound`.
#[derive(Debug, Clone)]
pub struct QuadConstraint {
    pub d: CMat,
    pub bound: f64,
}

/// `min sᴴAs − 2Re(cᴴs)` subject to the quadratic constraints.
#[derive(Debug, Clone)]
pub struct QcqpProblem {
    pub a: CMat,
    pub c: CVec,
    pub constraints: Vec<QuadConstraint>,
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub s: CVec,
    pub multipliers: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn quad(m: &CMat, s: &CVec) -> f64 {
    s.dotc(&(m * s)).re
}

impl QcqpProblem {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn objective(&self, s: &CVec) -> f64 {
        quad(&self.a, s) - 2.0 * self.c.dotc(s).re
    }

    pub fn constraint_values(&self, s: &CVec) -> Vec<f64> {
        self.constraints.iter().map(|k| quad(&k.d, s)).collect()
    }

    fn lagrangian_matrix(&self, lambda: &[f64]) -> CMat {
        let mut m = self.a.clone();
        for (k, l) in self.constraints.iter().zip(lambda) {
            m += &k.d * c(*l);
        }
        hermitize(&m)
    }

    /// Largest of the relative stationarity, complementarity and feasibility
    /// violations.
    pub fn kkt_residual(&self, s: &CVec, lambda: &[f64]) -> f64 {
        let m = self.lagrangian_matrix(lambda);
        let ms = &m * s;
        let scale_g = self.c.norm().max((&self.a * s).norm()).max(f64::MIN_POSITIVE);
        let mut r = (ms - &self.c).norm() / scale_g;
        let obj_scale = (quad(&self.a, s).abs() + self.c.dotc(s).norm()).max(f64::MIN_POSITIVE);
        for (k, l) in self.constraints.iter().zip(lambda) {
            let v = quad(&k.d, s);
            r = r.max(l.max(0.0) * (k.bound - v).abs() / obj_scale);
            r = r.max((v - k.bound).max(0.0) / k.bound.max(f64::MIN_POSITIVE));
            if *l < 0.0 {
                r = r.max(-l);
            }
        }
        r
    }

    /// Lagrange dual function `min_s L(s, λ) = −cᴴ(A + ΣλD)⁺c − Σλτ`; a lower
    /// bound on the optimum for every `λ ≥ 0`. `None` if unbounded below.
    pub fn dual_value(&self, lambda: &[f64]) -> Option<f64> {
        let m = self.lagrangian_matrix(lambda);
        let x = pinv_solve(&m, &self.c)?;
        let bound: f64 = self.constraints.iter().zip(lambda).map(|(k, l)| l * k.bound).sum();
        Some(-self.c.dotc(&x).re - bound)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.a.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("objective matrix is {:?}, vector has length {d}", self.a.shape())));
        }
        for k in &self.constraints {
            if k.d.shape() != (d, d) {
                return Err(Error::DimensionMismatch(format!("constraint matrix is {:?}, expected {d}x{d}", k.d.shape())));
            }
            if !(k.bound >= 0.0 && k.bound.is_finite()) {
                return Err(Error::InvalidParameter(format!("constraint bound must be non-negative, got {}", k.bound)));
            }
        }
        Ok(())
    }
}

/// Minimum-norm solution of `M x = b` for Hermitian PSD `M`; `None` when `b`
/// has a component outside the range of `M`.
fn pinv_solve(m: &CMat, b: &CVec) -> Option<CVec> {
    if let Some(ch) = m.clone().cholesky() {
        let x = ch.solve(b);
        if x.iter().all(|z| z.is_finite()) && (m * &x - b).norm() <= 1e-9 * b.norm().max(f64::MIN_POSITIVE) {
            return Some(x);
        }
    }
    let eig = hermitian_eig(m);
    let cut = 1e-12 * eig.max_value().abs().max(f64::MIN_POSITIVE);
    let coef = eig.vectors.adjoint() * b;
    let mut x = CVec::zeros(b.len());
    for k in 0..eig.dim() {
        if eig.values[k] > cut {
            x += eig.vectors.column(k) * (coef[k] / eig.values[k]);
        }
    }
    if (m * &x - b).norm() <= 1e-8 * b.norm().max(f64::MIN_POSITIVE) {
        Some(x)
    } else {
        None
    }
}

/// Orthonormal basis of the common null space of PSD matrices.
fn null_basis(ms: &[&CMat], d: usize) -> CMat {
    let mut sum = CMat::zeros(d, d);
    for m in ms {
        sum += *m;
    }
    let eig = hermitian_eig(&sum);
    let cut = 1e-12 * eig.max_value().max(f64::MIN_POSITIVE);
    let cols: Vec<usize> = (0..d).filter(|&k| eig.values[k] <= cut).collect();
    let mut n = CMat::zeros(d, cols.len());
    for (j, &k) in cols.iter().enumerate() {
        n.set_column(j, &eig.vectors.column(k));
    }
    n
}

/// Solves the QCQP to the requested KKT residual.
///
/// Constraints with a zero bound pin `s` to the null space of their matrix;
/// the problem is reduced to that subspace first and their multipliers are
/// reported as zero. If the residual target is not met the best iterate is
/// returned with `converged = false`.
pub fn solve_qcqp(p: &QcqpProblem, tol: f64) -> Result<QcqpSolution> {
    p.validate()?;
    let d = p.dim();
    let zero: Vec<usize> = (0..p.constraints.len()).filter(|&i| p.constraints[i].bound == 0.0).collect();
    if zero.is_empty() {
        return solve_reduced(p, tol);
    }
    let mats: Vec<&CMat> = zero.iter().map(|&i| &p.constraints[i].d).collect();
    let n = null_basis(&mats, d);
    let keep: Vec<usize> = (0..p.constraints.len()).filter(|i| !zero.contains(i)).collect();
    let nh = n.adjoint();
    let reduced = QcqpProblem {
        a: hermitize(&(&nh * &p.a * &n)),
        c: &nh * &p.c,
        constraints: keep
            .iter()
            .map(|&i| QuadConstraint { d: hermitize(&(&nh * &p.constraints[i].d * &n)), bound: p.constraints[i].bound })
            .collect(),
    };
    let sol = solve_reduced(&reduced, tol)?;
    let s = &n * &sol.s;
    let mut multipliers = vec![0.0; p.constraints.len()];
    for (j, &i) in keep.iter().enumerate() {
        multipliers[i] = sol.multipliers[j];
    }
    Ok(QcqpSolution { objective: p.objective(&s), s, multipliers, ..sol })
}

fn solve_reduced(p: &QcqpProblem, tol: f64) -> Result<QcqpSolution> {
    let d = p.dim();
    let m = p.constraints.len();
    let finish = |s: CVec, lambda: Vec<f64>, iterations: usize| {
        let kkt_residual = p.kkt_residual(&s, &lambda);
        QcqpSolution {
            objective: p.objective(&s),
            s,
            multipliers: lambda,
            kkt_residual,
            iterations,
            converged: kkt_residual <= tol,
        }
    };
    if d == 0 {
        return Ok(finish(CVec::zeros(0), vec![0.0; m], 0));
    }
    if let Some(s0) = pinv_solve(&hermitize(&p.a), &p.c) {
        let feasible = p
            .constraints
            .iter()
            .all(|k| quad(&k.d, &s0) <= k.bound * (1.0 + 1e-12));
        if feasible {
            return Ok(finish(s0, vec![0.0; m], 0));
        }
    }
    if m == 0 {
        return Err(Error::QcqpInfeasible("objective is unbounded below without constraints".into()));
    }

    // with few constraints an exact active-set solve usually settles it
    if m <= 3 {
        let mut singles = vec![0.0; m];
        let mut sets: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
        for size in 2..=m {
            for mask in 1..(1usize << m) {
                if mask.count_ones() as usize == size {
                    sets.push((0..m).filter(|i| mask & (1 << i) != 0).collect());
                }
            }
        }
        for set in sets {
            if let Some((s, lam, feasible)) = solve_active_set(p, &set, &singles) {
                if set.len() == 1 {
                    singles[set[0]] = lam[set[0]];
                }
                if feasible && p.kkt_residual(&s, &lam) <= tol {
                    return Ok(finish(s, lam, 0));
                }
            }
        }
    }

    let (s_b, lam_b, iters) = barrier(p)?;
    let mut best = (p.kkt_residual(&s_b, &lam_b), s_b, lam_b);

    // polish: exact multipliers on candidate active sets, most likely first
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let guess: Vec<usize> = (0..m).filter(|&i| best.2[i] > 1e-9 * best.2.iter().cloned().fold(0.0, f64::max)).collect();
    if !guess.is_empty() {
        sets.push(guess);
    }
    if m <= 3 {
        for mask in 1..(1usize << m) {
            let set: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            if !sets.contains(&set) {
                sets.push(set);
            }
        }
    }
    for set in sets {
        if best.0 <= 1e-13 {
            break;
        }
        if let Some((s, lam, true)) = solve_active_set(p, &set, &best.2) {
            let r = p.kkt_residual(&s, &lam);
            if r < best.0 {
                best = (r, s, lam);
            }
        }
    }
    Ok(finish(best.1, best.2, iters))
}

/// Multipliers with only `set` active: solves `sᵢ(λ)ᴴDᵢsᵢ(λ) = τᵢ` for
/// `i ∈ set` where `s(λ) = (A + ΣλD)⁻¹c`.
fn solve_active_set(p: &QcqpProblem, set: &[usize], start: &[f64]) -> Option<(CVec, Vec<f64>, bool)> {
    let m = p.constraints.len();
    let solve_at = |lam: &[f64]| -> Option<(CVec, nalgebra::Cholesky<C64, nalgebra::Dyn>)> {
        let ch = p.lagrangian_matrix(lam).cholesky()?;
        let s = ch.solve(&p.c);
        s.iter().all(|z| z.is_finite()).then_some((s, ch))
    };
    let mut lam = vec![0.0; m];
    if set.len() == 1 {
        let i = set[0];
        let g = |l: f64| {
            let mut v = vec![0.0; m];
            v[i] = l;
            solve_at(&v).map(|(s, _)| quad(&p.constraints[i].d, &s)).unwrap_or(f64::INFINITY)
        };
        let tau = p.constraints[i].bound;
        if g(0.0) <= tau {
            return None;
        }
        let hi = start[i].max(1e-12) * 2.0 + 1e-12;
        let li = bisect_monotone(g, tau, 0.0, hi, 1e-14).ok()?;
        lam[i] = li;
    } else {
        for &i in set {
            lam[i] = start[i].max(1e-12);
        }
        let mut converged = false;
        for _ in 0..200 {
            let (s, ch) = solve_at(&lam)?;
            let f: Vec<f64> = set.iter().map(|&i| quad(&p.constraints[i].d, &s) - p.constraints[i].bound).collect();
            let fnorm = f.iter().zip(set).map(|(v, &i)| (v / p.constraints[i].bound).abs()).fold(0.0, f64::max);
            if fnorm <= 1e-14 {
                converged = true;
                break;
            }
            let k = set.len();
            let mut jac = DMatrix::<f64>::zeros(k, k);
            let ds: Vec<CVec> = set.iter().map(|&j| &p.constraints[j].d * &s).collect();
            let solved: Vec<CVec> = ds.iter().map(|v| ch.solve(v)).collect();
            for (a, _) in set.iter().enumerate() {
                for (b, _) in set.iter().enumerate() {
                    jac[(a, b)] = -2.0 * ds[a].dotc(&solved[b]).re;
                }
            }
            let step = jac.lu().solve(&DVector::from_vec(f.clone()))?;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial = lam.clone();
                for (a, &i) in set.iter().enumerate() {
                    trial[i] = lam[i] - alpha * step[a];
                }
                if set.iter().all(|&i| trial[i] > 0.0) {
                    if let Some((s2, _)) = solve_at(&trial) {
                        let f2 = set
                            .iter()
                            .map(|&i| ((quad(&p.constraints[i].d, &s2) - p.constraints[i].bound) / p.constraints[i].bound).abs())
                            .fold(0.0, f64::max);
                        if f2 < fnorm {
                            lam = trial;
                            accepted = true;
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if !converged {
            let (s, _) = solve_at(&lam)?;
            let ok = set
                .iter()
                .all(|&i| ((quad(&p.constraints[i].d, &s) - p.constraints[i].bound) / p.constraints[i].bound).abs() < 1e-10);
            if !ok {
                return None;
            }
        }
    }
    let (s, _) = solve_at(&lam)?;
    let feasible = p.constraints.iter().all(|k| quad(&k.d, &s) <= k.bound * (1.0 + 1e-10));
    Some((s, lam, feasible))
}

/// Log-barrier path following from the strictly feasible point `s = 0`.
fn barrier(p: &QcqpProblem) -> Result<(CVec, Vec<f64>, usize)> {
    let d = p.dim();
    let m = p.constraints.len();
    let mut s = CVec::zeros(d);
    let mut t = 1.0;
    let mut iters = 0;
    for _outer in 0..50 {
        for _ in 0..200 {
            iters += 1;
            let Some((delta, g)) = newton_direction(p, &s, t) else { break };
            let slope = 2.0 * g.dotc(&delta).re;
            if -slope / 2.0 <= 1e-10 {
                break;
            }
            let ad = &p.a * &delta;
            let q_aa = delta.dotc(&ad).re;
            let q_as = delta.dotc(&(&p.a * &s)).re;
            let q_c = p.c.dotc(&delta).re;
            let cons: Vec<(f64, f64, f64)> = p
                .constraints
                .iter()
                .map(|k| {
                    let dd = &k.d * &delta;
                    (delta.dotc(&dd).re, s.dotc(&dd).re, k.bound - quad(&k.d, &s))
                })
                .collect();
            // φ(s + αΔ) − φ(s), computed from differences to avoid cancellation at large t
            let dphi = |alpha: f64| -> Option<f64> {
                let df = alpha * alpha * q_aa + 2.0 * alpha * q_as - 2.0 * alpha * q_c;
                let mut v = t * df;
                for &(dd, sd, r) in &cons {
                    let dr = -(alpha * alpha * dd + 2.0 * alpha * sd);
                    if r + dr <= 0.0 {
                        return None;
                    }
                    v -= (dr / r).ln_1p();
                }
                Some(v)
            };
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                if let Some(v) = dphi(alpha) {
                    if v <= 0.25 * alpha * slope {
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
            s += &delta * c(alpha);
        }
        if m as f64 / t <= 1e-13 * p.objective(&s).abs().max(1e-300) {
            break;
        }
        t *= 10.0;
    }
    let lambda = p
        .constraints
        .iter()
        .map(|k| 1.0 / (t * (k.bound - quad(&k.d, &s)).max(f64::MIN_POSITIVE)))
        .collect();
    Ok((s, lambda, iters))
}

/// Newton direction of `t·f(s) − Σ ln(τᵢ − sᴴDᵢs)`.
///
/// The Hessian has a conjugate-linear part `PΔ*` of rank ≤ m; the system
/// `HΔ + PΔ* = −g` is solved through a real `2m × 2m` correction.
fn newton_direction(p: &QcqpProblem, s: &CVec, t: f64) -> Option<(CVec, CVec)> {
    let d = p.dim();
    let m = p.constraints.len();
    let mut g = (&p.a * s - &p.c) * c(t);
    let mut h = &p.a * c(t);
    let mut u = CMat::zeros(d, m);
    for (i, k) in p.constraints.iter().enumerate() {
        let r = k.bound - quad(&k.d, s);
        if r <= 0.0 {
            return None;
        }
        let ui = &k.d * s;
        g += &ui * c(1.0 / r);
        h += &k.d * c(1.0 / r) + &ui * ui.adjoint() * c(1.0 / (r * r));
        u.set_column(i, &(ui * c(1.0 / r)));
    }
    let ch = hermitize(&h).cholesky()?;
    let hg = ch.solve(&g);
    let hu = ch.solve(&u);
    let gm = u.adjoint() * &hu;
    let rhs = -(u.adjoint() * &hg);
    // z* + G z = rhs, z = x + i y
    let mut sys = DMatrix::<f64>::zeros(2 * m, 2 * m);
    let mut b = DVector::<f64>::zeros(2 * m);
    for i in 0..m {
        for j in 0..m {
            let gij = gm[(i, j)];
            sys[(i, j)] = gij.re + if i == j { 1.0 } else { 0.0 };
            sys[(i, m + j)] = -gij.im;
            sys[(m + i, j)] = gij.im;
            sys[(m + i, m + j)] = gij.re - if i == j { 1.0 } else { 0.0 };
        }
        b[i] = rhs[i].re;
        b[m + i] = rhs[i].im;
    }
    let xy = sys.lu().solve(&b)?;
    let z = CVec::from_fn(m, |i, _| C64::new(xy[i], xy[m + i]));
    let delta = -hg - hu * z;
    delta.iter().all(|v| v.is_finite()).then_some((delta, g))
}

/// `min sᴴAs − 2Re(cᴴs)` s.t. `‖s‖² ≤ τ`, solved through the eigenvectors
/// of `A` as `s(λ) = (A + λI)⁻¹c`.
#[derive(Debug, Clone)]
pub struct BallQp {
    pub eig: HermitianEig,
    coef: CVec,
    c_norm2: f64,
}

impl BallQp {
    pub fn new(a: &CMat, c: &CVec) -> Self {
        let eig = hermitian_eig(&hermitize(a));
        let coef = eig.vectors.adjoint() * c;
        Self { eig, coef, c_norm2: c.norm_squared() }
    }

    fn cut(&self) -> f64 {
        1e-13 * self.eig.max_value().abs().max(f64::MIN_POSITIVE)
    }

    /// `‖s(λ)‖²`, strictly decreasing in `λ`; at `λ = 0` the minimum-norm
    /// solution is used (infinite if `c` leaves the range of `A`).
    pub fn g(&self, lambda: f64) -> f64 {
        let mut v = 0.0;
        for k in 0..self.eig.dim() {
            let mu = self.eig.values[k].max(0.0) + lambda;
            let w = self.coef[k].norm_sqr();
            if mu <= self.cut() && lambda == 0.0 {
                if w > 1e-24 * self.c_norm2 {
                    return f64::INFINITY;
                }
                continue;
            }
            v += w / (mu * mu);
        }
        v
    }

    pub fn s_at(&self, lambda: f64) -> CVec {
        let mut y = CVec::zeros(self.coef.len());
        for k in 0..self.eig.dim() {
            let mu = self.eig.values[k].max(0.0) + lambda;
            if mu > self.cut() || lambda > 0.0 {
                y[k] = self.coef[k] / c(mu);
            }
        }
        &self.eig.vectors * y
    }

    /// `√(‖c‖²/τ) − μ_min`; `g` at this point never exceeds `τ`.
    pub fn lambda_upper_bound(&self, tau: f64) -> f64 {
        (self.c_norm2 / tau).sqrt() - self.eig.min_value().max(0.0)
    }

    /// Optimal `(s, λ)` for budget `τ`.
    pub fn solve(&self, tau: f64) -> Result<(CVec, f64)> {
        if tau == 0.0 {
            return Ok((CVec::zeros(self.coef.len()), 0.0));
        }
        if self.g(0.0) <= tau {
            return Ok((self.s_at(0.0), 0.0));
        }
        let hi = self.lambda_upper_bound(tau).max(1e-300);
        let lambda = bisect_monotone(|l| self.g(l), tau, 0.0, hi, 1e-13)?;
        let mut s = self.s_at(lambda);
        let p = s.norm_squared();
        if p > tau {
            s *= c((tau / p).sqrt());
        }
        Ok((s, lambda))
    }
}

/// QCQP with the single constraint `‖s‖² ≤ τ` (`D = I`), solved exactly by
/// [`BallQp`].
pub fn solve_ball_qcqp(p: &QcqpProblem) -> Result<QcqpSolution> {
    p.validate()?;
    let [k] = p.constraints.as_slice() else {
        return Err(Error::InvalidParameter("ball solver needs exactly one constraint".into()));
    };
    if (&k.d - CMat::identity(p.dim(), p.dim())).norm() > 1e-12 * (p.dim() as f64).sqrt() {
        return Err(Error::InvalidParameter("ball solver needs an identity constraint matrix".into()));
    }
    let (s, lambda) = BallQp::new(&p.a, &p.c).solve(k.bound)?;
    let kkt_residual = p.kkt_residual(&s, &[lambda]);
    Ok(QcqpSolution { objective: p.objective(&s), s, multipliers: vec![lambda], kkt_residual, iterations: 0, converged: true })
}

/// One term `w·Tr[W (B + α MᴴQM)⁻¹]`; `congruence = None` means `M = I`.
#[derive(Debug, Clone)]
pub struct TraceInverseTerm {
    pub weight: f64,
    pub outer: CMat,
    pub base: CMat,
    pub alpha: f64,
    pub congruence: Option<CMat>,
}

/// Linear constraint `Tr(C Q) ≤ bound` with PSD selector `C`.
#[derive(Debug, Clone)]
pub struct PsdConstraint {
    pub selector: CMat,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct PsdTraceInverseProblem {
    pub dim: usize,
    pub terms: Vec<TraceInverseTerm>,
    pub constraints: Vec<PsdConstraint>,
}

#[derive(Debug, Clone)]
pub struct PsdSolution {
    pub q: CMat,
    pub multipliers: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl TraceInverseTerm {
    fn mapped(&self, q: &CMat) -> CMat {
        match &self.congruence {
            Some(m) => m.adjoint() * q * m,
            None => q.clone(),
        }
    }

    fn inner(&self, q: &CMat) -> CMat {
        hermitize(&(&self.base + self.mapped(q) * c(self.alpha)))
    }
}

impl PsdTraceInverseProblem {
    pub fn objective(&self, q: &CMat) -> f64 {
        let mut f = 0.0;
        for t in &self.terms {
            let Some(ch) = t.inner(q).cholesky() else { return f64::INFINITY };
            f += t.weight * trace_re(&ch.solve(&t.outer));
        }
        f
    }

    /// Hermitian gradient `−Σ wα M X⁻¹ W X⁻¹ Mᴴ` under `⟨G, D⟩ = Re Tr(G D)`.
    pub fn gradient(&self, q: &CMat) -> Option<CMat> {
        let mut g = CMat::zeros(self.dim, self.dim);
        for t in &self.terms {
            let xinv = hermitize(&t.inner(q).cholesky()?.inverse());
            let core = &xinv * &t.outer * &xinv;
            let mapped = match &t.congruence {
                Some(m) => m * core * m.adjoint(),
                None => core,
            };
            g -= mapped * c(t.weight * t.alpha);
        }
        Some(hermitize(&g))
    }

    fn validate(&self) -> Result<()> {
        for t in &self.terms {
            let p = t.base.nrows();
            let ok = t.base.shape() == (p, p)
                && t.outer.shape() == (p, p)
                && match &t.congruence {
                    Some(m) => m.shape() == (self.dim, p),
                    None => p == self.dim,
                };
            if !ok {
                return Err(Error::DimensionMismatch("trace-inverse term has inconsistent shapes".into()));
            }
            if !(t.weight >= 0.0 && t.alpha >= 0.0) {
                return Err(Error::InvalidParameter("weights and coefficients must be non-negative".into()));
            }
        }
        for k in &self.constraints {
            if k.selector.shape() != (self.dim, self.dim) {
                return Err(Error::DimensionMismatch("constraint selector has the wrong shape".into()));
            }
            if !(k.bound >= 0.0 && k.bound.is_finite()) {
                return Err(Error::InvalidParameter(format!("constraint bound must be non-negative, got {}", k.bound)));
            }
        }
        Ok(())
    }

    /// Scale-free projected-gradient residual `‖Q − Π(Q − κG)‖/‖Q‖` with
    /// `κ = ‖Q‖/‖G‖`.
    pub fn kkt_residual(&self, q: &CMat) -> f64 {
        let Some(g) = self.gradient(q) else { return f64::INFINITY };
        let (qn, gn) = (q.norm(), g.norm());
        if gn == 0.0 {
            return 0.0;
        }
        let kappa = if qn > 0.0 { qn / gn } else { 1.0 / gn };
        let (pq, _) = project_feasible(&(q - &g * c(kappa)), &self.constraints);
        let denom = if qn > 0.0 { qn } else { 1.0 };
        (q - pq).norm() / denom
    }
}

/// Euclidean projection onto `{Q ⪰ 0, Tr(Cⱼ Q) ≤ bⱼ}` and the dual shifts `μ`
/// with `Π(Y) = Π_PSD(Y − Σ μⱼ Cⱼ)`.
pub fn project_feasible(y: &CMat, constraints: &[PsdConstraint]) -> (CMat, Vec<f64>) {
    let y = hermitize(y);
    let m = constraints.len();
    if m == 0 {
        return (crate::linalg::project_psd(&y), vec![]);
    }
    if m == 1 {
        if let Some(sc) = scaled_identity(&constraints[0].selector, 1e-14) {
            if sc > 0.0 {
                let eig = hermitian_eig(&y);
                let budget = constraints[0].bound / sc;
                let nu = simplex_level(&eig.values, budget);
                let q = eig.map_values(|v| (v - nu).max(0.0));
                return (q, vec![nu / sc]);
            }
        }
    }
    let mut mu = vec![0.0; m];
    let proj = |mu: &[f64]| {
        let mut z = y.clone();
        for (k, v) in constraints.iter().zip(mu) {
            z -= &k.selector * c(*v);
        }
        crate::linalg::project_psd(&z)
    };
    for _cycle in 0..500 {
        let mut change: f64 = 0.0;
        for j in 0..m {
            let h = |v: f64| {
                let mut t = mu.clone();
                t[j] = v;
                trace_re(&(&constraints[j].selector * proj(&t))) - constraints[j].bound
            };
            let new = if h(0.0) <= 0.0 { 0.0 } else { root_decreasing(&h, constraints[j].bound) };
            change = change.max((new - mu[j]).abs() / (1.0 + mu[j].abs()));
            mu[j] = new;
        }
        if change <= 1e-14 {
            break;
        }
    }
    (proj(&mu), mu)
}

/// Water level `ν ≥ 0` with `Σ max(yₖ − ν, 0) = b` (0 if already below).
fn simplex_level(values: &[f64], b: f64) -> f64 {
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if total <= b {
        return 0.0;
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    for k in 0..v.len() {
        acc += v[k];
        let nu = (acc - b) / (k + 1) as f64;
        let next = if k + 1 < v.len() { v[k + 1] } else { f64::NEG_INFINITY };
        if nu >= next && nu < v[k] + 1e-300 {
            return nu.max(0.0);
        }
    }
    ((acc - b) / v.len() as f64).max(0.0)
}

/// Root of a continuous non-increasing `h` on `[0, ∞)` with `h(0) > 0`:
/// bracket by doubling, then Illinois false position with bisection fallback.
fn root_decreasing(h: &impl Fn(f64) -> f64, scale: f64) -> f64 {
    let tol = 1e-14 * scale.abs().max(1e-300);
    let (mut lo, mut flo) = (0.0, h(0.0));
    let mut hi = 1.0;
    let mut fhi = h(hi);
    let mut n = 0;
    while fhi > 0.0 && n < 2000 {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = h(hi);
        n += 1;
    }
    let mut side = 0;
    for _ in 0..300 {
        if fhi.abs() <= tol {
            return hi;
        }
        let mut x = hi - fhi * (hi - lo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = h(x);
        if fx.abs() <= tol || (hi - lo) <= 1e-16 * hi {
            return x;
        }
        if fx > 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    hi
}

/// Minimizes the trace-inverse objective over the feasible PSD set.
///
/// Monotone projected gradient: Barzilai–Borwein trial steps with Armijo
/// backtracking along the projection arc. Stops once the relative objective
/// change falls below `tol` and the scale-free KKT residual is below
/// `10·tol`, or after the iteration cap (then `converged = false`).
pub fn solve_psd_trace_inverse(p: &PsdTraceInverseProblem, tol: f64) -> Result<PsdSolution> {
    p.validate()?;
    let n = p.dim;
    let zero: Vec<usize> = (0..p.constraints.len()).filter(|&i| p.constraints[i].bound == 0.0).collect();
    if !zero.is_empty() {
        let mats: Vec<&CMat> = zero.iter().map(|&i| &p.constraints[i].selector).collect();
        let basis = null_basis(&mats, n);
        let bh = basis.adjoint();
        let keep: Vec<usize> = (0..p.constraints.len()).filter(|i| !zero.contains(i)).collect();
        let reduced = PsdTraceInverseProblem {
            dim: basis.ncols(),
            terms: p
                .terms
                .iter()
                .map(|t| TraceInverseTerm {
                    congruence: Some(match &t.congruence {
                        Some(m) => &bh * m,
                        None => bh.clone(),
                    }),
                    ..t.clone()
                })
                .collect(),
            constraints: keep
                .iter()
                .map(|&i| PsdConstraint {
                    selector: hermitize(&(&bh * &p.constraints[i].selector * &basis)),
                    bound: p.constraints[i].bound,
                })
                .collect(),
        };
        let sol = solve_psd_trace_inverse(&reduced, tol)?;
        let q = hermitize(&(&basis * &sol.q * &bh));
        let mut multipliers = vec![0.0; p.constraints.len()];
        for (j, &i) in keep.iter().enumerate() {
            multipliers[i] = sol.multipliers[j];
        }
        return Ok(PsdSolution { objective: p.objective(&q), q, multipliers, ..sol });
    }
    if n == 0 {
        return Ok(PsdSolution {
            q: CMat::zeros(0, 0),
            multipliers: vec![0.0; p.constraints.len()],
            objective: p.objective(&CMat::zeros(0, 0)),
            kkt_residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let start_scale = p
        .constraints
        .iter()
        .map(|k| k.bound / trace_re(&k.selector).max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    let start_scale = if start_scale.is_finite() { start_scale } else { 1.0 };
    let (mut q, _) = project_feasible(&(identity(n) * c(start_scale)), &p.constraints);
    let mut f = p.objective(&q);
    let mut g = p.gradient(&q).ok_or_else(|| Error::Singular("objective undefined at start".into()))?;
    let mut eta = q.norm().max(1e-12) / g.norm().max(1e-300);
    let max_iter = 50_000;
    let mut iterations = 0;
    let mut converged = false;
    let mut quiet = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut step = eta;
        let mut accepted = None;
        for _ in 0..100 {
            let (qn, _) = project_feasible(&(&q - &g * c(step)), &p.constraints);
            let diff = &qn - &q;
            let dec = inner(&g, &diff);
            if diff.norm() <= 1e-15 * q.norm().max(1e-300) {
                break;
            }
            let fnew = p.objective(&qn);
            if fnew <= f + 1e-4 * dec {
                accepted = Some((qn, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((qn, fnew)) = accepted else {
            converged = p.kkt_residual(&q) <= 10.0 * tol.max(1e-12);
            break;
        };
        let gn = p.gradient(&qn).ok_or_else(|| Error::Singular("objective undefined".into()))?;
        let sq = &qn - &q;
        let yg = &gn - &g;
        let sy = inner(&sq, &yg);
        eta = if sy > 0.0 { (inner(&sq, &sq) / sy).clamp(1e-30, 1e30) } else { step * 2.0 };
        let rel = (f - fnew).abs() / f.abs().max(f64::MIN_POSITIVE);
        q = qn;
        f = fnew;
        g = gn;
        if rel < tol {
            quiet += 1;
            if quiet >= 3 && p.kkt_residual(&q) < 10.0 * tol {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let (_, multipliers) = project_feasible(&(&q - &g), &p.constraints);
    Ok(PsdSolution { kkt_residual: p.kkt_residual(&q), objective: f, q, multipliers, iterations, converged })
}

fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal_matrix, stream};

    fn rand_psd(n: usize, seed: u64) -> CMat {
        let m = complex_normal_matrix(&mut stream(seed, 0), n, n);
        &m * m.adjoint()
    }

    fn selector(n: usize, rows: std::ops::Range<usize>) -> CMat {
        CMat::from_fn(n, n, |i, j| if i == j && rows.contains(&i) { c(1.0) } else { c(0.0) })
    }

    #[test]
    fn bisect_examples() {
        let l = bisect_monotone(|x| 1.0 / x, 2.0, 0.1, 10.0, 1e-12).unwrap();
        assert!((l - 0.5).abs() < 1e-10);
        let (cc, a, target) = (3.0, 0.7, 0.4);
        let l = bisect_monotone(|x| cc / (a + x).powi(2), target, 0.0, 1.0, 1e-13).unwrap();
        assert!((l - ((cc / target).sqrt() - a)).abs() < 1e-10);
        assert!(matches!(bisect_monotone(|x| -x, 1.0, 0.0, 1.0, 1e-9), Err(Error::BracketFailure(_))));
    }

    #[test]
    fn qcqp_inactive_constraints() {
        let a = rand_psd(4, 1) + identity(4);
        let cv = complex_normal_matrix(&mut stream(2, 0), 4, 1).column(0).into_owned();
        let p = QcqpProblem { a: a.clone(), c: cv.clone(), constraints: vec![QuadConstraint { d: identity(4), bound: 1e6 }] };
        let sol = solve_qcqp(&p, 1e-10).unwrap();
        let want = a.cholesky().unwrap().solve(&cv);
        assert!((sol.s - want).norm() < 1e-10);
        assert_eq!(sol.multipliers, vec![0.0]);
    }

    #[test]
    fn qcqp_single_constraint_closed_form() {
        let a = rand_psd(4, 3);
        let cv = complex_normal_matrix(&mut stream(4, 0), 4, 1).column(0).into_owned() * c(5.0);
        let tau = 0.3;
        let p = QcqpProblem { a: a.clone(), c: cv.clone(), constraints: vec![QuadConstraint { d: identity(4), bound: tau }] };
        let sol = solve_qcqp(&p, 1e-10).unwrap();
        let g = |l: f64| (&a + identity(4) * c(l)).cholesky().unwrap().solve(&cv).norm_squared();
        let lam = bisect_monotone(g, tau, 0.0, 1.0, 1e-14).unwrap();
        let want = (&a + identity(4) * c(lam)).cholesky().unwrap().solve(&cv);
        assert!((&sol.s - &want).norm() <= 1e-8 * want.norm());
        assert!((sol.multipliers[0] - lam).abs() <= 1e-8 * lam);
        assert!(sol.converged);
    }

    #[test]
    fn qcqp_zero_matrix_objective() {
        let p = QcqpProblem {
            a: CMat::zeros(3, 3),
            c: CVec::zeros(3),
            constraints: vec![QuadConstraint { d: identity(3), bound: 1.0 }],
        };
        let sol = solve_qcqp(&p, 1e-10).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.s.norm(), 0.0);
    }

    #[test]
    fn qcqp_zero_bound_pins_block() {
        let a = rand_psd(4, 9) + identity(4);
        let cv = complex_normal_matrix(&mut stream(10, 0), 4, 1).column(0).into_owned() * c(3.0);
        let p = QcqpProblem {
            a,
            c: cv,
            constraints: vec![
                QuadConstraint { d: selector(4, 0..2), bound: 0.0 },
                QuadConstraint { d: selector(4, 2..4), bound: 0.5 },
            ],
        };
        let sol = solve_qcqp(&p, 1e-9).unwrap();
        assert!(sol.s[0].norm() < 1e-14 && sol.s[1].norm() < 1e-14);
        assert!(quad(&p.constraints[1].d, &sol.s) <= 0.5 * (1.0 + 1e-9));
        assert!(sol.converged);
    }

    /// Real embedding `x = [Re s; Im s]` of a complex problem.
    fn embed(p: &QcqpProblem) -> QcqpProblem {
        let re = |m: &CMat| {
            let (r, i) = (m.map(|z| z.re), m.map(|z| z.im));
            let n = m.nrows();
            CMat::from_fn(2 * n, 2 * n, |a, b| {
                let v = match (a < n, b < n) {
                    (true, true) => r[(a, b)],
                    (true, false) => -i[(a, b - n)],
                    (false, true) => i[(a - n, b)],
                    (false, false) => r[(a - n, b - n)],
                };
                c(v)
            })
        };
        let n = p.dim();
        QcqpProblem {
            a: re(&p.a),
            c: CVec::from_fn(2 * n, |k, _| if k < n { c(p.c[k].re) } else { c(p.c[k - n].im) }),
            constraints: p.constraints.iter().map(|k| QuadConstraint { d: re(&k.d), bound: k.bound }).collect(),
        }
    }

    #[test]
    fn qcqp_real_embedding_agrees() {
        for seed in 0..5 {
            let a = rand_psd(3, 100 + seed);
            let cv = complex_normal_matrix(&mut stream(200 + seed, 0), 3, 1).column(0).into_owned() * c(4.0);
            let p = QcqpProblem {
                a,
                c: cv,
                constraints: vec![
                    QuadConstraint { d: selector(3, 0..1), bound: 0.2 },
                    QuadConstraint { d: selector(3, 1..3), bound: 0.4 },
                ],
            };
            let sc = solve_qcqp(&p, 1e-9).unwrap();
            let sr = solve_qcqp(&embed(&p), 1e-9).unwrap();
            assert!((sc.objective - sr.objective).abs() <= 1e-9 * sc.objective.abs());
            let gap = sc.objective - p.dual_value(&sc.multipliers).unwrap();
            assert!(gap.abs() <= 1e-7 * sc.objective.abs().max(1.0));
        }
    }

    #[test]
    fn projection_single_trace_constraint() {
        let y = rand_psd(4, 5) - identity(4) * c(0.5);
        let k = vec![PsdConstraint { selector: identity(4), bound: 1.0 }];
        let (q, mu) = project_feasible(&y, &k);
        assert!(trace_re(&q) <= 1.0 + 1e-12);
        assert!(hermitian_eig(&q).min_value() >= -1e-12);
        // the general cyclic path must agree with the sorted water level
        let k2 = vec![PsdConstraint { selector: identity(4) * c(1.0 + 1e-9), bound: 1.0 + 1e-9 }];
        let (q2, _) = project_feasible(&y, &[k2[0].clone(), PsdConstraint { selector: identity(4), bound: 10.0 }]);
        assert!((q - q2).norm() < 1e-8);
        assert!(mu[0] >= 0.0);
    }

    #[test]
    fn psd_scalar_full_budget() {
        let p = PsdTraceInverseProblem {
            dim: 1,
            terms: vec![TraceInverseTerm {
                weight: 2.0,
                outer: identity(1),
                base: identity(1) * c(1.0 / 0.8),
                alpha: 3.0,
                congruence: None,
            }],
            constraints: vec![PsdConstraint { selector: identity(1), bound: 1.7 }],
        };
        let sol = solve_psd_trace_inverse(&p, 1e-10).unwrap();
        assert!((sol.q[(0, 0)].re - 1.7).abs() < 1e-9);
        assert!((sol.objective - 2.0 / (1.25 + 3.0 * 1.7)).abs() < 1e-12);
    }

    #[test]
    fn psd_gradient_finite_difference() {
        for seed in 0..20 {
            let n = 3;
            let terms = (0..2)
                .map(|k| TraceInverseTerm {
                    weight: 0.5 + k as f64,
                    outer: rand_psd(n, 1000 + seed * 7 + k),
                    base: rand_psd(n, 2000 + seed * 7 + k) + identity(n),
                    alpha: 0.3 + k as f64,
                    congruence: Some(complex_normal_matrix(&mut stream(3000 + seed * 7, k), n, n)),
                })
                .collect();
            let p = PsdTraceInverseProblem { dim: n, terms, constraints: vec![] };
            let q = rand_psd(n, 4000 + seed);
            let dir = hermitize(&complex_normal_matrix(&mut stream(5000 + seed, 0), n, n));
            let h = 1e-5;
            let fd = (p.objective(&(&q + &dir * c(h))) - p.objective(&(&q - &dir * c(h)))) / (2.0 * h);
            let an = inner(&p.gradient(&q).unwrap(), &dir);
            assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-8), "seed {seed}: {fd} vs {an}");
        }
    }

    #[test]
    fn psd_solution_is_feasible_and_stationary() {
        let n = 4;
        let terms = (0..3)
            .map(|k| TraceInverseTerm {
                weight: 1.0 + k as f64,
                outer: identity(n),
                base: rand_psd(n, 60 + k) + identity(n) * c(0.2),
                alpha: 0.5 * (k + 1) as f64,
                congruence: None,
            })
            .collect();
        let p = PsdTraceInverseProblem {
            dim: n,
            terms,
            constraints: vec![
                PsdConstraint { selector: selector(n, 0..2), bound: 2.0 },
                PsdConstraint { selector: selector(n, 2..4), bound: 0.5 },
            ],
        };
        let sol = solve_psd_trace_inverse(&p, 1e-10).unwrap();
        assert!(hermitian_eig(&sol.q).min_value() >= -1e-9);
        for k in &p.constraints {
            assert!(trace_re(&(&k.selector * &sol.q)) <= k.bound * (1.0 + 1e-8));
        }
        assert!(sol.kkt_residual < 1e-6, "residual {}", sol.kkt_residual);
    }
}
