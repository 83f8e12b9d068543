//! Eigenstate construction from secular roots, and the quantities used to
//! tell extended, bound and scale-free states apart.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eig::{self, normalize_phase, reality_threshold, EigError, SolverMethod, Spectrum};
use crate::model::{BasisTag, ModelError, ModelSpec, TwoBandParams, C64};
use crate::secular::{secular_levels, SecularError, SecularLevel, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("root is not a solution: boundary matrix has relative singular value {ratio:e}")]
    NotInKernel { ratio: f64 },
    #[error("root is double (exceptional point); assembled state has residual {residual:e}")]
    DefectiveAtEp { residual: f64 },
    #[error("assembled state has residual {residual:e}")]
    NotAnEigenvector { residual: f64 },
    #[error("too few sites ({dim}) for a localization fit")]
    InsufficientSites { dim: usize },
    #[error("no analytic eigenstates for this model")]
    NotSolvable,
    #[error("need at least two profiles, got {0}")]
    TooFewProfiles(usize),
    #[error("selected state is absent at size {size}")]
    SizeMismatch { size: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Secular(#[from] SecularError),
    #[error(transparent)]
    Eig(#[from] EigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Extended,
    Bound,
    Sfl,
    Unclassified,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Extended => "extended",
            Classification::Bound => "bound",
            Classification::Sfl => "sfl",
            Classification::Unclassified => "unclassified",
        }
    }
}

/// Cut-offs used by [`classify`] and [`mobility_edges`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Relative reality threshold on `|Im E|`.
    pub tol_real: f64,
    /// `|χ − 1|` below which a real-energy state counts as extended.
    pub chi_window: f64,
    /// Relative tolerance when comparing ξ (or ξ/size) across two sizes.
    pub xi_rel: f64,
    /// Single-size fallback: `ξ < bound_fraction · dim` means bound.
    pub bound_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { tol_real: eig::DEFAULT_TOL_REAL, chi_window: 0.1, xi_rel: 0.1, bound_fraction: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenState {
    pub energy: C64,
    pub amplitudes: DVector<C64>,
    pub basis: BasisTag,
    pub classification: Classification,
    /// Left/right weight ratio around the defect; infinite if the right
    /// side carries no weight.
    pub chi: f64,
    /// Fitted localization length in sites; infinite for flat profiles.
    pub xi: f64,
    pub residual: f64,
    /// True when the classification came from the single-size fallback.
    pub heuristic: bool,
    pub method: SolverMethod,
}

/// The 2×2 boundary problem left over after the plane-wave ansatz solves
/// every bulk equation. Columns belong to `z` and `1/z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMatrix {
    pub entries: [[C64; 2]; 2],
    /// Magnitude of the terms that make up each entry, for rank decisions.
    pub term_scale: [[f64; 2]; 2],
    pub z: [C64; 2],
}

/// Per-root sublattice amplitudes `(φ_A, φ_B)` of the SSH-basis ansatz.
fn sublattice_weights(p: &TwoBandParams, z: C64, energy: C64) -> (C64, C64) {
    let d1 = energy * z;
    let d2 = z * p.t1 + p.t2;
    let phi_b = if d1.norm() >= d2.norm() { (z * p.t2 + p.t1) / d1 } else { energy / d2 };
    (C64::from(1.0), phi_b)
}

impl BoundaryMatrix {
    /// Two-band ring in the SSH basis. Cell `n` at distance
    /// `d = (n − m) mod N` from the defect gets `z^d φ_A` (or `z^N φ_A` in
    /// the defect cell itself) and `z^{d+1} φ_B`.
    pub fn two_band(p: &TwoBandParams, theta: C64, energy: C64) -> Self {
        let z1 = (C64::i() * theta).exp();
        let zs = [z1, z1.inv()];
        let n = p.n_cells as i32;
        let mut entries = [[C64::from(0.0); 2]; 2];
        let mut term_scale = [[0.0; 2]; 2];
        for (i, &z) in zs.iter().enumerate() {
            let (pa, pb) = sublattice_weights(p, z, energy);
            let zn = z.powi(n);
            let lo = p.delta - p.gamma;
            let hi = p.delta + p.gamma;
            entries[0][i] = (-zn * lo + p.t1) * pa;
            term_scale[0][i] = (zn.norm() * lo.abs() + p.t1.abs()) * pa.norm();
            entries[1][i] = z * (zn * p.t1 - hi) * pb;
            term_scale[1][i] = z.norm() * (zn.norm() * p.t1.abs() + hi.abs()) * pb.norm();
        }
        Self { entries, term_scale, z: zs }
    }

    /// Single-impurity chain; site `n` gets `z^{e(n)}` with
    /// `e(n) = ((n − m − 1) mod L) + 1`.
    pub fn impurity(t: f64, gamma: f64, length: usize, theta: C64) -> Self {
        let z1 = (C64::i() * theta).exp();
        let zs = [z1, z1.inv()];
        let mut entries = [[C64::from(0.0); 2]; 2];
        let mut term_scale = [[0.0; 2]; 2];
        for (i, &z) in zs.iter().enumerate() {
            let zl = z.powi(length as i32);
            entries[0][i] = -zl + 1.0;
            term_scale[0][i] = 1.0 + zl.norm();
            entries[1][i] = z * (-zl + 1.0) * t + C64::new(0.0, gamma) * zl;
            term_scale[1][i] = z.norm() * t.abs() * (1.0 + zl.norm()) + gamma.abs() * zl.norm();
        }
        Self { entries, term_scale, z: zs }
    }

    /// Coefficients `(c₁, c₂)` of the kernel. A vanishing matrix (both
    /// ansatz columns are solutions on their own) yields `(1, 0)`.
    pub fn kernel(&self, tol: f64) -> Result<[C64; 2], StateError> {
        let col_norm = |j: usize| (self.entries[0][j].norm_sqr() + self.entries[1][j].norm_sqr()).sqrt();
        let col_scale = |j: usize| self.term_scale[0][j].hypot(self.term_scale[1][j]);
        let null = |j: usize| col_norm(j) <= 1e-11 * col_scale(j).max(f64::MIN_POSITIVE);
        match (null(0), null(1)) {
            (true, _) => return Ok([C64::from(1.0), C64::from(0.0)]),
            (false, true) => return Ok([C64::from(0.0), C64::from(1.0)]),
            _ => {}
        }
        let (n0, n1) = (col_norm(0), col_norm(1));
        let m = [
            [self.entries[0][0] / n0, self.entries[0][1] / n1],
            [self.entries[1][0] / n0, self.entries[1][1] / n1],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        // unit columns: |det| is the product of the singular values and the
        // larger one lies in [1, sqrt 2]
        let ratio = det.norm();
        if ratio > tol {
            return Err(StateError::NotInKernel { ratio });
        }
        let r0 = m[0][0].norm_sqr() + m[0][1].norm_sqr();
        let r1 = m[1][0].norm_sqr() + m[1][1].norm_sqr();
        let row = if r0 >= r1 { m[0] } else { m[1] };
        let k = [row[1], -row[0]];
        Ok([k[0] / n0, k[1] / n1])
    }
}

/// Relative singular-value cut-off used to accept a root's boundary matrix.
pub const KERNEL_TOL: f64 = 1e-8;

fn two_band_exponents(p: &TwoBandParams, n: usize) -> (i32, i32) {
    let nc = p.n_cells;
    let d = (n + nc - p.m) % nc;
    let ea = if d == 0 { nc } else { d };
    (ea as i32, d as i32 + 1)
}

/// Largest relative residual accepted for an assembled eigenstate.
pub const CONSTRUCTED_RESIDUAL: f64 = 1e-8;

/// Builds the eigenstate belonging to one secular level and checks it
/// against the dense Hamiltonian.
pub fn construct_wavefunction(level: &SecularLevel, spec: &ModelSpec) -> Result<EigenState, StateError> {
    let h = spec.build()?;
    let energy = level.energy;
    let theta = level.root.theta;
    let mut amps = match spec {
        ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => {
            let bm = BoundaryMatrix::two_band(p, theta, energy);
            let c = bm.kernel(KERNEL_TOL)?;
            let mut v = DVector::<C64>::zeros(p.dim());
            for (i, &z) in bm.z.iter().enumerate() {
                if c[i] == C64::from(0.0) {
                    continue;
                }
                let (pa, pb) = sublattice_weights(p, z, energy);
                for n in 1..=p.n_cells {
                    let (ea, eb) = two_band_exponents(p, n);
                    v[p.a(n)] += c[i] * z.powi(ea) * pa;
                    v[p.b(n)] += c[i] * z.powi(eb) * pb;
                }
            }
            if matches!(spec, ModelSpec::DoubleChain(_)) {
                // back from the SSH basis: per cell (1/√2)[[1, −i], [−i, 1]]
                let r = std::f64::consts::FRAC_1_SQRT_2;
                for n in 1..=p.n_cells {
                    let (a, b) = (v[p.a(n)], v[p.b(n)]);
                    v[p.a(n)] = (a - C64::i() * b) * r;
                    v[p.b(n)] = (b - C64::i() * a) * r;
                }
            }
            v
        }
        ModelSpec::ImpurityChain(p) => {
            let bm = BoundaryMatrix::impurity(p.t, p.gamma, p.length, theta);
            let c = bm.kernel(KERNEL_TOL)?;
            let l = p.length;
            DVector::from_fn(l, |row, _| {
                let n = row + 1;
                let e = ((n + 2 * l - p.m - 1) % l + 1) as i32;
                c[0] * bm.z[0].powi(e) + c[1] * bm.z[1].powi(e)
            })
        }
        ModelSpec::AaNonreciprocal(_) | ModelSpec::AaImaginary(_) => return Err(StateError::NotSolvable),
    };
    normalize_phase(&mut amps);
    let residual = eig::residual(&h.entries, energy, &amps, h.norm_inf());
    if residual > CONSTRUCTED_RESIDUAL {
        return Err(if level.root.multiplicity > 1 {
            StateError::DefectiveAtEp { residual }
        } else {
            StateError::NotAnEigenvector { residual }
        });
    }
    Ok(finish_state(energy, amps, h.basis, residual, SolverMethod::Secular, spec))
}

fn finish_state(
    energy: C64,
    amplitudes: DVector<C64>,
    basis: BasisTag,
    residual: f64,
    method: SolverMethod,
    spec: &ModelSpec,
) -> EigenState {
    let chi = chi(amplitudes.as_slice(), spec);
    let xi = fit_localization_length(amplitudes.as_slice(), spec).unwrap_or(f64::NAN);
    EigenState {
        energy,
        amplitudes,
        basis,
        classification: Classification::Unclassified,
        chi,
        xi,
        residual,
        heuristic: false,
        method,
    }
}

/// Sites on each side of the defect used by [`chi`]: the defect sites are
/// removed and, if an odd number remains, the antipodal site as well.
fn sides(spec: &ModelSpec, dim: usize) -> (Vec<usize>, Vec<usize>) {
    let imp = spec.impurity_sites();
    let k = (dim - imp.len()) / 2;
    let first = imp[0];
    let last = *imp.last().unwrap();
    let left = (1..=k).map(|j| (first + dim - j % dim) % dim).collect();
    let right = (1..=k).map(|j| (last + j) % dim).collect();
    (left, right)
}

/// Ratio of squared weight just before the defect to that just after it.
pub fn chi(amplitudes: &[C64], spec: &ModelSpec) -> f64 {
    let (left, right) = sides(spec, amplitudes.len());
    let w = |s: &[usize]| s.iter().map(|&i| amplitudes[i].norm_sqr()).sum::<f64>();
    let (l, r) = (w(&left), w(&right));
    if r == 0.0 {
        if l == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        l / r
    }
}

/// Relative amplitude below which profile points are left out of fits.
const NOISE_FLOOR: f64 = 1e-12;

/// Localization length (in sites) from a least-squares fit of `ln|ψ|`
/// against distance from the defect, on the heavier side.
///
/// Two-band rings are fitted cell by cell using the norm of each cell's
/// two amplitudes; that norm is the same in the double-chain and SSH bases
/// and removes the sublattice staggering a site-by-site fit picks up. The
/// first two sites next to the defect and the last two before the antipode
/// are left out of the fit, as are points below `1e-12` of the peak.
pub fn fit_localization_length(amplitudes: &[C64], spec: &ModelSpec) -> Result<f64, StateError> {
    let dim = amplitudes.len();
    if dim < 12 {
        return Err(StateError::InsufficientSites { dim });
    }
    let u = spec.cell_size();
    let units = dim / u;
    let norms: Vec<f64> = (0..units)
        .map(|k| (0..u).map(|s| amplitudes[k * u + s].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let imp_units: Vec<usize> = {
        let mut v: Vec<usize> = spec.impurity_sites().iter().map(|s| s / u).collect();
        v.dedup();
        v
    };
    let k = (units - imp_units.len()) / 2;
    let first = imp_units[0];
    let last = *imp_units.last().unwrap();
    let left: Vec<f64> = (1..=k).map(|j| norms[(first + units - j) % units]).collect();
    let right: Vec<f64> = (1..=k).map(|j| norms[(last + j) % units]).collect();
    let weight = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>();
    let side = if weight(&left) >= weight(&right) { left } else { right };
    let skip = 2 / u;
    // points at the rounding floor carry no profile information
    let floor = (NOISE_FLOOR * norms.iter().cloned().fold(0.0, f64::max)).max(f64::MIN_POSITIVE);
    let window: Vec<(f64, f64)> = (skip + 1..=k.saturating_sub(skip))
        .map(|d| (d as f64, side[d - 1].max(1e-300).ln()))
        .collect();
    let mut pts: Vec<(f64, f64)> = window.iter().copied().filter(|p| p.1 > floor.ln()).collect();
    if pts.len() < 3 {
        // decays to the floor within a few units: report the bound that implies
        if let Some(d) = (1..=k).find(|&d| side[d - 1] <= floor) {
            return Ok((d * u) as f64 / (1.0 / NOISE_FLOOR).ln());
        }
        pts = window.iter().copied().take(3).collect();
    }
    if pts.len() < 3 {
        return Err(StateError::InsufficientSites { dim });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx / u as f64;
    if slope.abs() < 1.0 / (10.0 * dim as f64) {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / slope.abs())
    }
}

fn is_real(e: C64, norm: f64, th: &Thresholds) -> bool {
    e.im.abs() <= reality_threshold(norm, th.tol_real)
}

/// Assigns a class to `state`. With a companion (the matching state of the
/// same model at twice the size) the decision compares ξ across sizes:
/// unchanged means bound, doubled means scale-free. Without one it falls
/// back on `ξ < bound_fraction · dim` and marks the result heuristic.
pub fn classify(
    state: &EigenState,
    h_norm: f64,
    companion: Option<&EigenState>,
    th: &Thresholds,
) -> (Classification, bool) {
    if is_real(state.energy, h_norm, th) && (state.chi - 1.0).abs() <= th.chi_window {
        return (Classification::Extended, false);
    }
    let dim = state.amplitudes.len() as f64;
    let xi = state.xi;
    match companion {
        Some(c) => {
            if !xi.is_finite() || !c.xi.is_finite() {
                return (Classification::Unclassified, false);
            }
            let dim2 = c.amplitudes.len() as f64;
            if ((c.xi - xi) / xi).abs() <= th.xi_rel {
                (Classification::Bound, false)
            } else {
                let (a, b) = (xi / dim, c.xi / dim2);
                if ((b - a) / a).abs() <= th.xi_rel {
                    (Classification::Sfl, false)
                } else {
                    (Classification::Unclassified, false)
                }
            }
        }
        None => {
            if xi.is_finite() && xi < th.bound_fraction * dim {
                (Classification::Bound, true)
            } else {
                (Classification::Sfl, true)
            }
        }
    }
}

/// Eigenstates from a dense spectrum, before classification.
pub fn states_from_spectrum(spectrum: &Spectrum, spec: &ModelSpec) -> Vec<EigenState> {
    (0..spectrum.len())
        .map(|k| {
            finish_state(
                spectrum.eigenvalues[k],
                spectrum.eigenvectors[k].clone(),
                spectrum.basis,
                spectrum.residuals[k],
                SolverMethod::Dense,
                spec,
            )
        })
        .collect()
}

fn nearest(target: C64, pool: &[C64]) -> usize {
    (0..pool.len())
        .min_by(|&a, &b| (pool[a] - target).norm().total_cmp(&(pool[b] - target).norm()))
        .unwrap_or(0)
}

/// Classifies each state against the nearest-energy state of `companions`
/// (the doubled ring), or with the single-size fallback when absent.
pub fn classify_all(states: &mut [EigenState], h_norm: f64, companions: Option<&[EigenState]>, th: &Thresholds) {
    let energies: Vec<C64> = companions.map_or_else(Vec::new, |c| c.iter().map(|s| s.energy).collect());
    for st in states.iter_mut() {
        let comp = companions.map(|c| &c[nearest(st.energy, &energies)]);
        let (c, heur) = classify(st, h_norm, comp, th);
        st.classification = c;
        st.heuristic = heur;
    }
}

/// Dense diagonalization plus classification of every eigenstate, sorted
/// by `(Re E, Im E)`. With `use_companion` each state is compared with the
/// nearest-energy state of the doubled ring.
pub fn analyze(spec: &ModelSpec, th: &Thresholds, use_companion: bool) -> Result<Vec<EigenState>, StateError> {
    let spectrum = eig::eig(&spec.build()?)?;
    let mut states = states_from_spectrum(&spectrum, spec);
    let companions = if use_companion {
        let big = spec.doubled();
        Some(states_from_spectrum(&eig::eig(&big.build()?)?, &big))
    } else {
        None
    };
    classify_all(&mut states, spectrum.norm, companions.as_deref(), th);
    sort_states(&mut states);
    Ok(states)
}

fn constructed_states(spec: &ModelSpec, cfg: &SolverConfig) -> Result<Vec<EigenState>, StateError> {
    secular_levels(spec, cfg)?.iter().map(|l| construct_wavefunction(l, spec)).collect()
}

/// Same as [`analyze`] but with eigenstates assembled from secular roots.
pub fn analyze_secular(
    spec: &ModelSpec,
    cfg: &SolverConfig,
    th: &Thresholds,
    use_companion: bool,
) -> Result<Vec<EigenState>, StateError> {
    let norm = spec.build()?.norm_inf();
    let mut states = constructed_states(spec, cfg)?;
    let companions = if use_companion { Some(constructed_states(&spec.doubled(), cfg)?) } else { None };
    classify_all(&mut states, norm, companions.as_deref(), th);
    sort_states(&mut states);
    Ok(states)
}

pub fn sort_states(states: &mut [EigenState]) {
    states.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re).then(a.energy.im.total_cmp(&b.energy.im)));
}

/// Energies where the classification switches between extended and
/// non-extended along `Re E`; bound states are ignored. The reported edge
/// is the midpoint between the two neighbouring states.
pub fn mobility_edges(states: &[EigenState]) -> Vec<f64> {
    let mut pts: Vec<(f64, bool)> = states
        .iter()
        .filter(|s| s.classification != Classification::Bound)
        .map(|s| (s.energy.re, s.classification == Classification::Extended))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2).filter(|w| w[0].1 != w[1].1).map(|w| 0.5 * (w[0].0 + w[1].0)).collect()
}

/// One state's profile and the site it is measured from.
#[derive(Debug, Clone, Copy)]
pub struct Profile<'a> {
    pub amplitudes: &'a [C64],
    pub anchor: usize,
}

/// Site from which rescaled coordinates are measured: sublattice A of the
/// defect cell, or the defect site.
pub fn anchor_site(spec: &ModelSpec) -> usize {
    spec.impurity_sites()[0]
}

const COLLAPSE_GRID: usize = 64;

fn rescaled_log_profile(p: &Profile) -> Vec<f64> {
    let dim = p.amplitudes.len();
    let big = p.amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut pts: Vec<(f64, f64)> = (0..dim)
        .map(|x| {
            let off = ((x + dim - p.anchor) % dim) as f64;
            let off = if off >= dim as f64 / 2.0 { off - dim as f64 } else { off };
            (off / dim as f64, (p.amplitudes[x].norm() / big).max(1e-300).log10())
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // pad one period on each side so every grid point has two neighbours
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    pts.insert(0, (last.0 - 1.0, last.1));
    pts.push((first.0 + 1.0, first.1));
    (0..COLLAPSE_GRID)
        .map(|k| {
            let u = -0.5 + k as f64 / COLLAPSE_GRID as f64;
            let j = pts.partition_point(|q| q.0 <= u).clamp(1, pts.len() - 1);
            let (a, b) = (pts[j - 1], pts[j]);
            a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
        })
        .collect()
}

/// Largest pairwise gap between rescaled `log₁₀|ψ|` profiles on a common
/// grid in `u = (x − anchor)/dim`, ignoring `|u| < 0.05`.
pub fn collapse_error(profiles: &[Profile]) -> Result<f64, StateError> {
    if profiles.len() < 2 {
        return Err(StateError::TooFewProfiles(profiles.len()));
    }
    let curves: Vec<Vec<f64>> = profiles.iter().map(rescaled_log_profile).collect();
    let mut worst = 0.0f64;
    for i in 0..curves.len() {
        for j in 0..i {
            for (k, (a, b)) in curves[i].iter().zip(&curves[j]).enumerate() {
                let u = -0.5 + k as f64 / COLLAPSE_GRID as f64;
                if u.abs() < 0.05 {
                    continue;
                }
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

/// Which eigenstate a size-scaling study follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSelector {
    /// Largest `Im E`; ties within the reality threshold go to the state
    /// with the most weight on the defect, then to the lower `Re E`.
    LargestIm,
    /// Position in the `(Re E, Im E)` ordering.
    Index(usize),
    /// The state classified as bound (companion classification).
    Bound,
}

fn defect_weight(v: &[C64], spec: &ModelSpec) -> f64 {
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    spec.impurity_sites().iter().map(|&i| v[i].norm_sqr()).sum::<f64>() / total
}

/// Index into `spectrum` of the state picked by `sel`.
pub fn select_state(
    spectrum: &Spectrum,
    spec: &ModelSpec,
    sel: StateSelector,
    th: &Thresholds,
) -> Result<usize, StateError> {
    let size = spec.size_and_m().0;
    match sel {
        StateSelector::LargestIm => {
            let top = spectrum.largest_imag().ok_or(StateError::SizeMismatch { size })?;
            let thr = spectrum.reality_threshold(th.tol_real);
            let max_im = spectrum.eigenvalues[top].im;
            let mut cands: Vec<(usize, f64)> = (0..spectrum.len())
                .filter(|&k| spectrum.eigenvalues[k].im >= max_im - thr)
                .map(|k| (k, defect_weight(spectrum.eigenvectors[k].as_slice(), spec)))
                .collect();
            cands.sort_by(|a, b| {
                let wa = (a.1 * 1e9).round();
                let wb = (b.1 * 1e9).round();
                wb.total_cmp(&wa).then(spectrum.eigenvalues[a.0].re.total_cmp(&spectrum.eigenvalues[b.0].re))
            });
            Ok(cands[0].0)
        }
        StateSelector::Index(i) => {
            let mut order: Vec<usize> = (0..spectrum.len()).collect();
            order.sort_by(|&a, &b| {
                let (x, y) = (spectrum.eigenvalues[a], spectrum.eigenvalues[b]);
                x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
            });
            order.get(i).copied().ok_or(StateError::SizeMismatch { size })
        }
        StateSelector::Bound => {
            let states = analyze(spec, th, true)?;
            let b = states
                .iter()
                .filter(|s| s.classification == Classification::Bound)
                .max_by(|a, b| a.energy.im.abs().total_cmp(&b.energy.im.abs()))
                .ok_or(StateError::SizeMismatch { size })?;
            Ok(nearest(b.energy, &spectrum.eigenvalues))
        }
    }
}

/// One size of a scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    /// Number of sites.
    pub size: usize,
    pub energy: C64,
    pub xi: f64,
    pub xi_over_size: f64,
    pub chi: f64,
    /// Largest collapse error between the smallest size and any size up to
    /// this one; zero on the first row.
    pub collapse_error: f64,
    /// Normalized, phase-fixed amplitudes of the selected state.
    #[serde(skip)]
    pub amplitudes: Vec<C64>,
}

/// Follows the state picked by `sel` across `layouts`, each a
/// `(size, m)` pair in the units of [`ModelSpec::resized_at`].
pub fn scaling_study(
    spec: &ModelSpec,
    layouts: &[(usize, usize)],
    sel: StateSelector,
    th: &Thresholds,
) -> Result<Vec<ScalingRow>, StateError> {
    if layouts.len() < 2 {
        return Err(StateError::TooFewProfiles(layouts.len()));
    }
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(layouts.len());
    let mut anchors = Vec::with_capacity(layouts.len());
    for &(size, m) in layouts {
        let s = spec.resized_at(size, m);
        s.validate()?;
        let spectrum = eig::eig(&s.build()?)?;
        let k = select_state(&spectrum, &s, sel, th)?;
        let mut v = spectrum.eigenvectors[k].clone();
        normalize_phase(&mut v);
        let amps = v.as_slice().to_vec();
        let dim = amps.len();
        let xi = fit_localization_length(&amps, &s)?;
        let anchor = anchor_site(&s);
        let collapse = match (rows.first(), anchors.first()) {
            (Some(first), Some(&a0)) => {
                let e = collapse_error(&[
                    Profile { amplitudes: &first.amplitudes, anchor: a0 },
                    Profile { amplitudes: &amps, anchor },
                ])?;
                e.max(rows.last().map_or(0.0, |r| r.collapse_error))
            }
            _ => 0.0,
        };
        rows.push(ScalingRow {
            size: dim,
            energy: spectrum.eigenvalues[k],
            xi,
            xi_over_size: xi / dim as f64,
            chi: chi(&amps, &s),
            collapse_error: collapse,
            amplitudes: amps,
        });
        anchors.push(anchor);
    }
    Ok(rows)
}
