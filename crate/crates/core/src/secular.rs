//! Exact eigenvalues of the two-band ring and the single-impurity chain
//! from their secular equations.
//!
//! With `z = e^{iθ}` the two-band boundary problem reduces to
//!
//! ```text
//! F(θ) = sin((N+1)θ) + η₃ sin(Nθ) − η₂ sin((N−1)θ) − η₁ sin θ = 0
//! η₁ = 2δ/t₁,  η₂ = (δ² − γ²)/t₁²,  η₃ = (t₁² − δ² + γ²)/(t₁t₂)
//! ```
//!
//! and `E² = t₁² + t₂² + 2t₁t₂ cos θ`. `θ = 0, π` are spurious, and
//! `F/sin θ` is a degree-N polynomial in `c = cos θ` (second-kind
//! Chebyshev). Its N roots are found all at once by Aberth iteration, so the
//! root count is exact by construction rather than by search.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelSpec, TwoBandParams, C64};
use crate::poly::{aberth, cheb_t, cheb_u, cheb_v, cheb_w, newton_polish, PolyEval};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SecularError {
    #[error("root search incomplete: expected {expected} roots, {found} converged")]
    RootCountMismatch { expected: usize, found: usize, unconverged: Vec<C64> },
    #[error("scan grid of {points} points is too coarse (need at least {required})")]
    GridTooCoarse { points: usize, required: usize },
    #[error("no secular equation for this model: {0}")]
    NotSolvable(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootFamily {
    /// Real θ: plane-wave-like states.
    RealBulk,
    /// Complex θ with `|Im θ|` shrinking like 1/size.
    ComplexSfl,
    /// Complex θ whose imaginary part stays finite as the ring grows.
    BoundState,
    /// Impurity-chain roots `θ = 2lπ/L`, odd about the impurity site.
    OddParity,
}

/// One solution of a secular equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaRoot {
    /// Principal value, `Re θ ∈ [0, π]`.
    pub theta: C64,
    pub cos_theta: C64,
    pub family: RootFamily,
    /// `|F(θ)|` divided by the sum of the magnitudes of its terms.
    pub residual: f64,
    /// 2 when the root coincides with another one (exceptional point).
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative step size at which an iterate counts as converged.
    pub tolerance: f64,
    /// Real-axis scan resolution per cell (or per site).
    pub scan_points_per_unit: usize,
    /// A complex root is `BoundState` when `size · |Im θ|` exceeds this.
    pub bound_decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-14, scan_points_per_unit: 32, bound_decay: 8.0 }
    }
}

/// Coefficients of the two-band secular equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularParams {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub t1: f64,
    pub t2: f64,
    pub n_cells: usize,
}

impl SecularParams {
    pub fn new(t1: f64, t2: f64, delta: f64, gamma: f64, n_cells: usize) -> Result<Self, SecularError> {
        if t1 == 0.0 || t2 == 0.0 || !(t1.is_finite() && t2.is_finite() && delta.is_finite() && gamma.is_finite()) {
            return Err(SecularError::InvalidParameters("t1, t2 must be finite and nonzero".into()));
        }
        if n_cells < 2 {
            return Err(SecularError::InvalidParameters("need at least 2 cells".into()));
        }
        let d2g2 = delta * delta - gamma * gamma;
        Ok(Self {
            eta1: 2.0 * delta / t1,
            eta2: d2g2 / (t1 * t1),
            eta3: (t1 * t1 - d2g2) / (t1 * t2),
            t1,
            t2,
            n_cells,
        })
    }

    pub fn from_two_band(p: &TwoBandParams) -> Result<Self, SecularError> {
        Self::new(p.t1, p.t2, p.delta, p.gamma, p.n_cells)
    }

    /// `F/sin θ` as a polynomial in `c`.
    pub(crate) fn reduced(&self, c: C64) -> PolyEval {
        let n = self.n_cells;
        let u = cheb_u(n, c);
        let [u2, u1, u0] = u.val;
        let [d2, d1, d0] = u.der;
        let f = u.factor;
        PolyEval {
            p: u0 + u1 * self.eta3 - u2 * self.eta2 - self.eta1 * f,
            dp: d0 + d1 * self.eta3 - d2 * self.eta2,
            scale: u0.norm() + u1.norm() * self.eta3.abs() + u2.norm() * self.eta2.abs() + self.eta1.abs() * f,
        }
    }
}

/// `F(θ)` and `F'(θ)`.
pub fn secular_residual_dc(theta: C64, p: &SecularParams) -> (C64, C64) {
    let n = p.n_cells as f64;
    let f = (theta * (n + 1.0)).sin() + (theta * n).sin() * p.eta3
        - (theta * (n - 1.0)).sin() * p.eta2
        - theta.sin() * p.eta1;
    let df = (theta * (n + 1.0)).cos() * (n + 1.0) + (theta * n).cos() * (p.eta3 * n)
        - (theta * (n - 1.0)).cos() * (p.eta2 * (n - 1.0))
        - theta.cos() * p.eta1;
    (f, df)
}

fn relative_residual_dc(theta: C64, p: &SecularParams) -> f64 {
    let n = p.n_cells as f64;
    let terms = [
        (theta * (n + 1.0)).sin(),
        (theta * n).sin() * p.eta3,
        (theta * (n - 1.0)).sin() * p.eta2,
        theta.sin() * p.eta1,
    ];
    let scale: f64 = terms.iter().map(|z| z.norm()).sum();
    let (f, _) = secular_residual_dc(theta, p);
    if scale > 0.0 {
        f.norm() / scale
    } else {
        f.norm()
    }
}

/// Both energies `±E` belonging to a root. The sign convention follows
/// `E → (t₁ + t₂) cos(θ/2)` so that for `t₁ = t₂` the first entry is
/// exactly `2t cos(θ/2)`.
pub fn energies_from_theta(root: &ThetaRoot, t1: f64, t2: f64) -> [C64; 2] {
    let e2 = root.cos_theta * (2.0 * t1 * t2) + (t1 * t1 + t2 * t2);
    let mut s = e2.sqrt();
    let reference = (root.theta * 0.5).cos() * (t1 + t2);
    if (s * reference.conj()).re < 0.0 {
        s = -s;
    }
    [s, -s]
}

fn principal_theta(c: C64) -> C64 {
    let th = c.acos();
    // acos is principal already; guard the sign of a vanishing real part
    if th.re < 0.0 {
        -th
    } else {
        th
    }
}

fn is_real_theta(c: C64) -> bool {
    c.im.abs() <= 1e-12 * (1.0 + c.norm()) && c.re.abs() <= 1.0 + 1e-12
}

fn mark_multiplicities(cs: &[C64]) -> Vec<usize> {
    let mut mult = vec![1; cs.len()];
    for i in 0..cs.len() {
        for j in 0..i {
            if (cs[i] - cs[j]).norm() <= 1e-6 * (1.0 + cs[i].norm()) {
                mult[i] = 2;
                mult[j] = 2;
            }
        }
    }
    mult
}

/// Real roots `θ ∈ (0, π]` located by sign changes on a uniform grid and
/// refined by bisection. Nearly coincident real pairs (close to an
/// exceptional point) can hide between grid points; [`dc_all_roots`] does
/// not rely on this scan for completeness.
pub fn scan_real_roots_dc(p: &SecularParams, grid_points: usize) -> Result<Vec<ThetaRoot>, SecularError> {
    let required = 8 * p.n_cells;
    if grid_points < required {
        return Err(SecularError::GridTooCoarse { points: grid_points, required });
    }
    let g = |th: f64| p.reduced(C64::from(th.cos())).p.re;
    let mut out: Vec<f64> = Vec::new();
    let h = PI / grid_points as f64;
    let mut prev_x = h * 1e-6;
    let mut prev = g(prev_x);
    for k in 1..=grid_points {
        let x = k as f64 * h;
        let v = g(x);
        if v == 0.0 {
            out.push(x);
        } else if prev != 0.0 && (prev < 0.0) != (v < 0.0) {
            let (mut a, mut b, mut fa) = (prev_x, x, prev);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                let fm = g(mid);
                if (fm < 0.0) == (fa < 0.0) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev_x = x;
        prev = v;
    }
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    Ok(out
        .into_iter()
        .map(|x| {
            let theta = C64::from(x);
            ThetaRoot {
                theta,
                cos_theta: theta.cos(),
                family: RootFamily::RealBulk,
                residual: relative_residual_dc(theta, p),
                multiplicity: 1,
            }
        })
        .collect())
}

/// Seeds spread on a thin ellipse around `[-1, 1]`, alternating above and
/// below the axis.
fn fill_seeds(k: usize) -> Vec<C64> {
    (0..k)
        .map(|j| {
            let a = PI * (j as f64 + 0.5) / k as f64;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(1.05 * a.cos(), 0.2 * sign * a.sin())
        })
        .collect()
}

fn family_for(c: C64, size: usize, cfg: &SolverConfig) -> RootFamily {
    if is_real_theta(c) {
        return RootFamily::RealBulk;
    }
    let th = principal_theta(c);
    if th.im.abs() * size as f64 > cfg.bound_decay {
        RootFamily::BoundState
    } else {
        RootFamily::ComplexSfl
    }
}

fn finish_dc(p: &SecularParams, cs: Vec<C64>, cfg: &SolverConfig) -> Vec<ThetaRoot> {
    let f = |c: C64| p.reduced(c);
    let mult = mark_multiplicities(&cs);
    let polished: Vec<C64> = cs
        .iter()
        .zip(&mult)
        .map(|(&c, &m)| if m == 1 { newton_polish(f, c, 20, cfg.tolerance) } else { c })
        .collect();
    let mut roots: Vec<ThetaRoot> = polished
        .iter()
        .zip(&mult)
        .map(|(&c, &m)| {
            let c = if is_real_theta(c) { C64::from(c.re.clamp(-1.0, 1.0)) } else { c };
            let theta = principal_theta(c);
            ThetaRoot {
                theta,
                cos_theta: c,
                family: family_for(c, p.n_cells, cfg),
                residual: relative_residual_dc(theta, p),
                multiplicity: m,
            }
        })
        .collect();
    roots.sort_by(|a, b| a.theta.re.total_cmp(&b.theta.re).then(a.theta.im.total_cmp(&b.theta.im)));
    roots
}

fn solve_dc_from_seeds(p: &SecularParams, seeds: &[C64], cfg: &SolverConfig) -> Result<Vec<C64>, SecularError> {
    let out = aberth(|c| p.reduced(c), seeds, cfg.max_iterations, cfg.tolerance);
    let found = out.converged.iter().filter(|&&d| d).count();
    if found < seeds.len() {
        let unconverged = out.roots.iter().zip(&out.converged).filter(|(_, &d)| !d).map(|(z, _)| *z).collect();
        return Err(SecularError::RootCountMismatch { expected: seeds.len(), found, unconverged });
    }
    Ok(out.roots)
}

/// All N roots of the two-band secular equation.
pub fn dc_all_roots(p: &SecularParams, cfg: &SolverConfig) -> Result<Vec<ThetaRoot>, SecularError> {
    let n = p.n_cells;
    let grid = (cfg.scan_points_per_unit * n).max(8 * n);
    let mut seeds: Vec<C64> = scan_real_roots_dc(p, grid)?.iter().map(|r| r.cos_theta).collect();
    seeds.truncate(n);
    let missing = n - seeds.len();
    seeds.extend(fill_seeds(missing));
    let cs = solve_dc_from_seeds(p, &seeds, cfg)?;
    Ok(finish_dc(p, cs, cfg))
}

/// Follows the roots continuously along a path of parameter sets, seeding
/// each step with the previous step's roots. Output `k` lists the roots at
/// `path[k]` in the order they were tracked (not sorted).
pub fn track_dc_roots(path: &[SecularParams], cfg: &SolverConfig) -> Result<Vec<Vec<ThetaRoot>>, SecularError> {
    let mut out = Vec::with_capacity(path.len());
    let mut prev: Option<Vec<C64>> = None;
    for p in path {
        let cs = match &prev {
            Some(s) if s.len() == p.n_cells => solve_dc_from_seeds(p, s, cfg)?,
            _ => {
                let roots = dc_all_roots(p, cfg)?;
                roots.iter().map(|r| r.cos_theta).collect()
            }
        };
        let mult = mark_multiplicities(&cs);
        out.push(
            cs.iter()
                .zip(&mult)
                .map(|(&c, &m)| {
                    let theta = principal_theta(c);
                    ThetaRoot {
                        theta,
                        cos_theta: c,
                        family: family_for(c, p.n_cells, cfg),
                        residual: relative_residual_dc(theta, p),
                        multiplicity: m,
                    }
                })
                .collect(),
        );
        prev = Some(cs);
    }
    Ok(out)
}

/// Gain/loss at which every eigenstate becomes scale-free,
/// `γ = sqrt(δ² − t₁²)`; only defined for `|δ| ≥ |t₁|`.
pub fn gamma_a(t1: f64, delta: f64) -> Option<f64> {
    (delta.abs() >= t1.abs()).then(|| (delta * delta - t1 * t1).sqrt())
}

/// Closed-form roots at `γ = γ_a`: `z^N = μ` with `μ = (δ + γ_a)/t₁`, i.e.
/// `θ_l = (2lπ − i ln μ)/N`. Returns `(μ, roots)`.
pub fn gamma_a_closed_form(t1: f64, t2: f64, delta: f64, n_cells: usize) -> Option<(f64, Vec<ThetaRoot>)> {
    let ga = gamma_a(t1, delta)?;
    let mu = (delta + ga) / t1;
    let p = SecularParams::new(t1, t2, delta, ga, n_cells).ok()?;
    let decay = mu.abs().ln() / n_cells as f64;
    let phase = if mu < 0.0 { PI } else { 0.0 };
    let roots = (0..n_cells)
        .map(|l| {
            let theta = C64::new((2.0 * PI * l as f64 + phase) / n_cells as f64, -decay);
            ThetaRoot {
                theta,
                cos_theta: theta.cos(),
                family: RootFamily::ComplexSfl,
                residual: relative_residual_dc(theta, &p),
                multiplicity: 1,
            }
        })
        .collect();
    Some((mu, roots))
}

/// The two factors of the impurity-chain secular equation,
/// `sin(Lθ/2) · [2t sin θ sin(Lθ/2) + iγ cos(Lθ/2)] = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpurityResidual {
    pub odd_factor: C64,
    pub even_factor: C64,
}

pub fn impurity_secular_residual(theta: C64, t: f64, gamma: f64, length: usize) -> ImpurityResidual {
    let half = theta * (length as f64 / 2.0);
    ImpurityResidual {
        odd_factor: half.sin(),
        even_factor: theta.sin() * half.sin() * (2.0 * t) + C64::new(0.0, gamma) * half.cos(),
    }
}

fn relative_residual_impurity(theta: C64, t: f64, gamma: f64, length: usize) -> f64 {
    let half = theta * (length as f64 / 2.0);
    let a = theta.sin() * half.sin() * (2.0 * t);
    let b = C64::new(0.0, gamma) * half.cos();
    let scale = a.norm() + b.norm();
    let r = (a + b).norm();
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

/// The even-parity factor as a polynomial in `c`; for odd `L` the factor
/// `cos(θ/2)` (whose only zero, θ = π, is spurious) is removed.
fn impurity_poly(t: f64, gamma: f64, length: usize, c: C64) -> PolyEval {
    let ig = C64::new(0.0, gamma);
    if length.is_multiple_of(2) {
        let m = length / 2;
        let u = cheb_u(m - 1, c);
        let tt = cheb_t(m, c);
        // bring both tails to the same scale
        let r = u.factor / tt.factor;
        let (u0, du0) = (u.val[2], u.der[2]);
        let one_c2 = C64::from(1.0) - c * c;
        let a = one_c2 * u0 * (2.0 * t);
        let b = ig * tt.val[2] * r;
        // T_m' = m U_{m-1}
        let dp = (-c * 2.0 * u0 + one_c2 * du0) * (2.0 * t) + ig * u0 * m as f64;
        PolyEval { p: a + b, dp, scale: a.norm() + b.norm() }
    } else {
        let m = (length - 1) / 2;
        let w = cheb_w(m, c);
        let v = cheb_v(m, c);
        let r = w.factor / v.factor;
        let one_c = C64::from(1.0) - c;
        let a = one_c * w.val[2] * (2.0 * t);
        let b = ig * v.val[2] * r;
        let dp = (-w.val[2] + one_c * w.der[2]) * (2.0 * t) + ig * v.der[2] * r;
        PolyEval { p: a + b, dp, scale: a.norm() + b.norm() }
    }
}

/// Bound-state root predicted for `|γ| > 2t` on a long chain,
/// `θ = π/2 − i sgn(γ) arcosh(|γ|/2t)`, with energy `2i·sgn(γ)·sinh(arcosh(|γ|/2t))`.
pub fn impurity_bound_theta(t: f64, gamma: f64) -> Option<C64> {
    let x = gamma.abs() / (2.0 * t);
    (x > 1.0).then(|| C64::new(PI / 2.0, -gamma.signum() * x.acosh()))
}

/// Large-L estimates of the complex even-parity roots.
fn impurity_asymptotic_seeds(t: f64, gamma: f64, length: usize) -> Vec<C64> {
    let l = length as f64;
    let mut seeds = Vec::new();
    for k in 1..length {
        let s = (k as f64 * PI / l).sin();
        let arg = if k % 2 == 1 { 2.0 * t * s / gamma } else { gamma / (2.0 * t * s) };
        if arg.is_finite() && arg.abs() < 1.0 {
            seeds.push(C64::new(k as f64 * PI / l, (2.0 / l) * (-arg).atanh()));
        }
    }
    if let Some(b) = impurity_bound_theta(t, gamma) {
        seeds.push(b);
    }
    seeds
}

/// All L roots of the impurity chain: the odd-parity roots `θ = 2lπ/L`
/// followed by the roots of the even-parity factor.
pub fn impurity_all_roots(t: f64, gamma: f64, length: usize, cfg: &SolverConfig) -> Result<Vec<ThetaRoot>, SecularError> {
    if length < 4 || t.is_nan() || t <= 0.0 || !gamma.is_finite() {
        return Err(SecularError::InvalidParameters("need L >= 4, t > 0, finite gamma".into()));
    }
    let n_odd = if length.is_multiple_of(2) { length / 2 - 1 } else { (length - 1) / 2 };
    let degree = length - n_odd;
    let mut roots: Vec<ThetaRoot> = (1..=n_odd)
        .map(|l| {
            let theta = C64::from(2.0 * PI * l as f64 / length as f64);
            ThetaRoot {
                theta,
                cos_theta: theta.cos(),
                family: RootFamily::OddParity,
                residual: impurity_secular_residual(theta, t, gamma, length).odd_factor.norm(),
                multiplicity: 1,
            }
        })
        .collect();

    let mut seeds: Vec<C64> = impurity_asymptotic_seeds(t, gamma, length).iter().map(|th| th.cos()).collect();
    seeds.truncate(degree);
    let missing = degree - seeds.len();
    seeds.extend(fill_seeds(missing));
    let f = |c: C64| impurity_poly(t, gamma, length, c);
    let out = aberth(f, &seeds, cfg.max_iterations, cfg.tolerance);
    let found = out.converged.iter().filter(|&&d| d).count();
    if found < degree {
        let unconverged = out.roots.iter().zip(&out.converged).filter(|(_, &d)| !d).map(|(z, _)| *z).collect();
        return Err(SecularError::RootCountMismatch { expected: degree, found, unconverged });
    }
    let mult = mark_multiplicities(&out.roots);
    let mut even: Vec<ThetaRoot> = out
        .roots
        .iter()
        .zip(&mult)
        .map(|(&c, &m)| {
            let c = if m == 1 { newton_polish(f, c, 20, cfg.tolerance) } else { c };
            let c = if is_real_theta(c) { C64::from(c.re.clamp(-1.0, 1.0)) } else { c };
            let theta = principal_theta(c);
            ThetaRoot {
                theta,
                cos_theta: c,
                family: if is_real_theta(c) { RootFamily::RealBulk } else { RootFamily::ComplexSfl },
                residual: relative_residual_impurity(theta, t, gamma, length),
                multiplicity: m,
            }
        })
        .collect();
    if gamma.abs() > 2.0 * t {
        if let Some(b) = (0..even.len()).max_by(|&i, &j| even[i].theta.im.abs().total_cmp(&even[j].theta.im.abs())) {
            even[b].family = RootFamily::BoundState;
        }
    }
    even.sort_by(|a, b| a.theta.re.total_cmp(&b.theta.re).then(a.theta.im.total_cmp(&b.theta.im)));
    roots.extend(even);
    Ok(roots)
}

/// An energy produced by the secular route, with the root it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularLevel {
    pub energy: C64,
    pub root: ThetaRoot,
    /// `+1` or `-1`: which of the two energies of a two-band root.
    pub branch: i8,
}

/// Every eigenvalue of `spec` from the secular equation. Quasiperiodic
/// models have no closed secular form and return `NotSolvable`.
pub fn secular_levels(spec: &ModelSpec, cfg: &SolverConfig) -> Result<Vec<SecularLevel>, SecularError> {
    spec.validate().map_err(|e| SecularError::InvalidParameters(e.to_string()))?;
    match spec {
        ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => {
            let sp = SecularParams::from_two_band(p)?;
            let roots = dc_all_roots(&sp, cfg)?;
            let mut out = Vec::with_capacity(2 * roots.len());
            for r in roots {
                let [a, b] = energies_from_theta(&r, p.t1, p.t2);
                out.push(SecularLevel { energy: a, root: r, branch: 1 });
                out.push(SecularLevel { energy: b, root: r, branch: -1 });
            }
            Ok(out)
        }
        ModelSpec::ImpurityChain(p) => Ok(impurity_all_roots(p.t, p.gamma, p.length, cfg)?
            .into_iter()
            .map(|r| SecularLevel { energy: r.cos_theta * (2.0 * p.t), root: r, branch: 1 })
            .collect()),
        ModelSpec::AaNonreciprocal(_) | ModelSpec::AaImaginary(_) => {
            Err(SecularError::NotSolvable("quasiperiodic potential".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: f64, n: usize) -> SecularParams {
        SecularParams::new(1.0, 1.0, 4.0, gamma, n).unwrap()
    }

    #[test]
    fn coefficient_identity() {
        let p = SecularParams::new(1.3, 0.7, 2.5, 1.1, 10).unwrap();
        assert!((p.eta3 * p.t1 * p.t2 - (p.t1 * p.t1 - p.eta2 * p.t1 * p.t1)).abs() < 1e-14);
    }

    #[test]
    fn trivial_roots_of_full_equation() {
        let p = params(2.3, 17);
        assert!(secular_residual_dc(C64::from(0.0), &p).0.norm() < 1e-12);
        assert!(secular_residual_dc(C64::from(PI), &p).0.norm() < 1e-11);
    }

    #[test]
    fn reduced_polynomial_equals_quotient() {
        let p = SecularParams::new(1.0, 2.0, 4.0, 3.0, 12).unwrap();
        let th = C64::new(0.9, 0.05);
        let q = secular_residual_dc(th, &p).0 / th.sin();
        let e = p.reduced(th.cos());
        assert!((e.p - q).norm() < 1e-10 * q.norm());
    }

    #[test]
    fn factorization_at_equal_hopping() {
        // for t1 = t2 the equation carries a factor 2cos(θ/2)
        let p = params(3.3, 11);
        let n = 11.0;
        for th in [C64::new(0.4, 0.1), C64::new(2.2, -0.3)] {
            let rest = (th * (n + 0.5)).sin() - (th * 0.5).sin() * p.eta1 - (th * (n - 0.5)).sin() * p.eta2;
            let f = secular_residual_dc(th, &p).0;
            assert!((f - (th * 0.5).cos() * 2.0 * rest).norm() < 1e-9 * f.norm());
        }
    }

    #[test]
    fn gamma_a_roots_solve_the_equation() {
        let (mu, roots) = gamma_a_closed_form(1.0, 1.0, 4.0, 20).unwrap();
        assert!((mu - (4.0 + 15f64.sqrt())).abs() < 1e-14);
        assert_eq!(roots.len(), 20);
        assert!(roots.iter().all(|r| r.residual < 1e-12));
        // none of them lies on the real θ axis
        let real = scan_real_roots_dc(&params(15f64.sqrt(), 20), 640).unwrap();
        assert!(real.is_empty());
    }

    #[test]
    fn root_count_is_exact() {
        for gamma in [0.0, 1.0, 3.2, 15f64.sqrt(), 4.3, 6.5] {
            let p = params(gamma, 20);
            let roots = dc_all_roots(&p, &SolverConfig::default()).unwrap();
            assert_eq!(roots.len(), 20);
            assert!(roots.iter().all(|r| r.residual < 1e-10), "gamma={gamma}");
        }
    }

    #[test]
    fn gamma_a_solver_agrees_with_closed_form() {
        let ga = 15f64.sqrt();
        let roots = dc_all_roots(&params(ga, 20), &SolverConfig::default()).unwrap();
        let (_, exact) = gamma_a_closed_form(1.0, 1.0, 4.0, 20).unwrap();
        let a: Vec<C64> = roots.iter().map(|r| r.cos_theta).collect();
        let b: Vec<C64> = exact.iter().map(|r| r.cos_theta).collect();
        assert!(crate::eig::match_spectra(&a, &b).unwrap() < 1e-10);
    }

    #[test]
    fn starved_iteration_reports_mismatch() {
        let cfg = SolverConfig { max_iterations: 1, ..SolverConfig::default() };
        let err = dc_all_roots(&params(3.2, 40), &cfg).unwrap_err();
        assert!(matches!(err, SecularError::RootCountMismatch { .. }));
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            scan_real_roots_dc(&params(1.0, 20), 100),
            Err(SecularError::GridTooCoarse { required: 160, .. })
        ));
    }

    #[test]
    fn impurity_polynomial_matches_bracket() {
        for length in [12usize, 13] {
            let th = C64::new(1.1, -0.07);
            let r = impurity_secular_residual(th, 1.0, 1.5, length).even_factor;
            let e = impurity_poly(1.0, 1.5, length, th.cos());
            let expect = if length.is_multiple_of(2) { e.p } else { e.p * (th * 0.5).cos() };
            assert!((expect - r).norm() < 1e-12 * r.norm().max(1.0), "L={length}");
        }
    }

    #[test]
    fn impurity_root_counts() {
        for length in [20usize, 21, 40] {
            for gamma in [0.0, 1.0, 2.05] {
                let roots = impurity_all_roots(1.0, gamma, length, &SolverConfig::default()).unwrap();
                assert_eq!(roots.len(), length);
                let n_bound = roots.iter().filter(|r| r.family == RootFamily::BoundState).count();
                assert_eq!(n_bound, usize::from(gamma > 2.0));
            }
        }
    }

    #[test]
    fn impurity_bound_root_sign() {
        let roots = impurity_all_roots(1.0, 2.05, 40, &SolverConfig::default()).unwrap();
        let b = roots.iter().find(|r| r.family == RootFamily::BoundState).unwrap();
        assert!(b.theta.im < 0.0);
        let e = b.cos_theta * 2.0;
        assert!(e.im > 0.0 && e.re.abs() < 1e-12);
    }

    #[test]
    fn asymptotic_bound_root_converges_with_length() {
        // the large-L formula solves the exact equation up to terms that
        // decay exponentially with L
        let th = impurity_bound_theta(1.0, 2.05).unwrap();
        let r40 = relative_residual_impurity(th, 1.0, 2.05, 40);
        let r160 = relative_residual_impurity(th, 1.0, 2.05, 160);
        assert!(r160 < 1e-8, "{r160}");
        assert!(r160 < r40 * 1e-3);
    }

    #[test]
    fn aa_models_not_solvable() {
        let spec = ModelSpec::AaImaginary(crate::model::AaImaginaryParams {
            t: 1.0,
            lambda: 0.1,
            alpha: crate::model::default_alpha(),
            gamma: 1.0,
            length: 10,
            m: 5,
        });
        assert!(matches!(secular_levels(&spec, &SolverConfig::default()), Err(SecularError::NotSolvable(_))));
    }
}
