//! The acceptance suite: eleven end-to-end checks of the solvers against
//! known exact structure. Each check reports pass/fail and what it measured.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::eig::{eig, match_spectra, quartet_closure, Spectrum};
use crate::model::{
    AaImaginaryParams, AaNonreciprocalParams, ImpurityParams, ModelSpec, TwoBandParams, C64,
};
use crate::phase::{regime_boundaries, RegimeBoundaries};
use crate::secular::{secular_levels, SolverConfig};
use crate::states::{
    analyze, anchor_site, collapse_error, construct_wavefunction, mobility_edges, scaling_study, Classification,
    Profile, StateSelector, Thresholds,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.measured)
    }
}

pub type BoundaryFn = fn(f64, f64) -> RegimeBoundaries;

/// Knobs exposed so the suite can be pointed at deliberately broken
/// inputs and shown to fail.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub solver: SolverConfig,
    pub boundaries: BoundaryFn,
    pub thresholds: Thresholds,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), boundaries: regime_boundaries, thresholds: Thresholds::default() }
    }
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "similarity and quartet symmetry"),
    (2, "complex-eigenvalue counts across regimes"),
    (3, "secular roots match dense spectra"),
    (4, "regime boundaries from a gamma scan"),
    (5, "closed-form profile at gamma_a"),
    (6, "scale-free xi/size"),
    (7, "mobility edges"),
    (8, "single impurity exact structure"),
    (9, "quasiperiodic ring with nonreciprocal defect"),
    (10, "quasiperiodic ring with imaginary potential"),
    (11, "unequal hoppings at gamma_a"),
];

type Outcome = Result<(bool, String), String>;

pub fn run_criterion(id: u8, opts: &VerifyOptions) -> CriterionReport {
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    let out = match id {
        1 => symmetry_suite(opts),
        2 => regime_counts(opts),
        3 => oracle_equivalence(opts),
        4 => boundary_scan(opts),
        5 => closed_form_profile(opts),
        6 => scale_free_scaling(opts),
        7 => mobility(opts),
        8 => single_impurity(opts),
        9 => aa_nonreciprocal(opts),
        10 => aa_imaginary(opts),
        11 => unequal_hoppings(opts),
        _ => Err(format!("no criterion {id}")),
    };
    let (passed, measured) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionReport { id, name, passed, measured }
}

/// All criteria in order; independent criteria run in parallel.
pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionReport> {
    CRITERIA.par_iter().map(|&(id, _)| run_criterion(id, opts)).collect()
}

fn dense(spec: &ModelSpec) -> Result<Spectrum, String> {
    let h = spec.build().map_err(|e| e.to_string())?;
    eig(&h).map_err(|e| e.to_string())
}

fn two_band(t2: f64, delta: f64, gamma: f64, n_cells: usize) -> TwoBandParams {
    TwoBandParams { t1: 1.0, t2, delta, gamma, n_cells, m: n_cells / 2 + 1 }
}

fn fourfold(n: usize) -> ModelSpec {
    ModelSpec::DoubleChain(two_band(1.0, 4.0, 0.0, n))
}

const GAMMAS: [f64; 5] = [1.0, 3.2, 3.872983346207417, 4.3, 6.5];

/// Additive-recurrence sequence in `[0,1)^6` with irrational steps, used
/// in place of random sampling so the suite is reproducible.
fn low_discrepancy(k: usize) -> [f64; 6] {
    const STEPS: [f64; 6] = [
        0.414_213_562_373_095,
        0.732_050_807_568_877,
        0.236_067_977_499_790,
        0.645_751_311_064_591,
        0.316_624_790_355_400,
        0.605_551_275_463_989,
    ];
    STEPS.map(|a| (0.5 + k as f64 * a).fract())
}

fn symmetry_suite(_: &VerifyOptions) -> Outcome {
    let mut worst_match = 0.0f64;
    let mut worst_quartet = 0.0f64;
    for k in 1..=20 {
        let u = low_discrepancy(k);
        let n = 2 + (38.0 * u[4]) as usize;
        let p = TwoBandParams {
            t1: 0.5 + u[0],
            t2: 0.5 + 1.5 * u[1],
            delta: 5.0 * u[2],
            gamma: 6.0 * u[3],
            n_cells: n,
            m: 1 + ((n as f64 * u[5]) as usize).min(n - 1),
        };
        let dc = dense(&ModelSpec::DoubleChain(p))?;
        let ssh = dense(&ModelSpec::SshLocal(p))?;
        let d = match_spectra(&dc.eigenvalues, &ssh.eigenvalues).ok_or("spectra differ in length")?;
        worst_match = worst_match.max(d);
        worst_quartet = worst_quartet.max(quartet_closure(&dc.eigenvalues)).max(quartet_closure(&ssh.eigenvalues));
    }
    Ok((
        worst_match <= 1e-9 && worst_quartet <= 1e-9,
        format!("max basis mismatch {worst_match:.2e}, max quartet defect {worst_quartet:.2e} over 20 rings (tol 1e-9)"),
    ))
}

fn regime_counts(opts: &VerifyOptions) -> Outcome {
    let mut counts = Vec::new();
    let mut pair_re = f64::NAN;
    for g in GAMMAS {
        let s = dense(&fourfold(20).with_gamma(g))?;
        let n = s.count_complex(opts.thresholds.tol_real);
        counts.push(n);
        if g == 6.5 {
            let thr = s.reality_threshold(opts.thresholds.tol_real);
            pair_re = s.eigenvalues.iter().filter(|e| e.im.abs() > thr).map(|e| e.re.abs()).fold(0.0, f64::max);
        }
    }
    let ok = counts[0] == 0 && counts[1] > 0 && counts[2] == 38 && counts[3] > 0 && counts[4] == 2 && pair_re <= 1e-6;
    Ok((ok, format!("n_im {counts:?} (want [0,>0,38,>0,2]), bound pair max |Re E| {pair_re:.2e}")))
}

fn secular_vs_dense(spec: &ModelSpec, cfg: &SolverConfig) -> Result<f64, String> {
    let levels = secular_levels(spec, cfg).map_err(|e| e.to_string())?;
    let energies: Vec<C64> = levels.iter().map(|l| l.energy).collect();
    let s = dense(spec)?;
    match_spectra(&energies, &s.eigenvalues).ok_or_else(|| format!("{} secular vs {} dense levels", energies.len(), s.len()))
}

fn oracle_equivalence(opts: &VerifyOptions) -> Outcome {
    let mut specs: Vec<ModelSpec> = GAMMAS.iter().map(|&g| fourfold(20).with_gamma(g)).collect();
    for g in [1.0, 2.0, 2.05] {
        specs.push(ModelSpec::ImpurityChain(ImpurityParams { t: 1.0, gamma: g, length: 40, m: 20 }));
    }
    let mut worst = 0.0f64;
    for spec in &specs {
        worst = worst.max(secular_vs_dense(spec, &opts.solver)?);
    }
    Ok((worst <= 1e-7, format!("max distance {worst:.2e} over {} spectra (tol 1e-7)", specs.len())))
}

fn boundary_scan(opts: &VerifyOptions) -> Outcome {
    let steps: Vec<usize> = (0..=700).collect();
    let rows: Vec<Result<(usize, bool), String>> = steps
        .par_iter()
        .map(|&k| {
            let s = dense(&fourfold(20).with_gamma(k as f64 * 0.01))?;
            let thr = s.reality_threshold(opts.thresholds.tol_real);
            let n_im = s.count_complex(opts.thresholds.tol_real);
            let bulk = s.eigenvalues.iter().any(|e| e.im.abs() > thr && e.re.abs() > 1e-6);
            Ok((n_im, bulk))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    // windows are compared on the integer step index to avoid 301·0.01 > 3.01
    let (Some(k1), Some(k2)) = (rows.iter().position(|r| r.0 > 0), rows.iter().rposition(|r| r.1)) else {
        return Ok((false, "no complex eigenvalues found in the scan".into()));
    };
    let (first, last) = (k1 as f64 * 0.01, k2 as f64 * 0.01);
    let b = (opts.boundaries)(1.0, 4.0);
    let in_window = (299..=301).contains(&k1) && (499..=501).contains(&k2);
    let agrees = (first - b.gamma_c1).abs() <= 0.0101 && (last - b.gamma_c2).abs() <= 0.0101;
    Ok((
        in_window && agrees,
        format!(
            "first n_im>0 at {first:.2}, last bulk complex at {last:.2}; predicted {:.4} and {:.4}",
            b.gamma_c1, b.gamma_c2
        ),
    ))
}

fn closed_form_profile(opts: &VerifyOptions) -> Outcome {
    let ga = crate::secular::gamma_a(1.0, 4.0).ok_or("no gamma_a")?;
    let mu = 4.0 + ga;
    let p = two_band(1.0, 4.0, ga, 20);
    let spec = ModelSpec::SshLocal(p);
    let dim = p.dim();
    let xa = p.a(p.m);
    let profile: Vec<f64> = (0..dim)
        .map(|x| {
            let d = (x + dim - xa) % dim;
            let e = if d == 0 { 1.0 } else { d as f64 / dim as f64 };
            mu.powf(e - 1.0)
        })
        .collect();
    let levels = secular_levels(&spec, &opts.solver).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut xi_worst = 0.0f64;
    let expected = dim as f64 / mu.ln();
    for l in &levels {
        let st = construct_wavefunction(l, &spec).map_err(|e| e.to_string())?;
        let big = st.amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, p) in st.amplitudes.iter().zip(&profile) {
            worst = worst.max((a.norm() / big - p).abs() / p);
        }
        xi_worst = xi_worst.max(((st.xi - expected) / expected).abs());
    }
    Ok((
        levels.len() == dim && worst <= 1e-6 && xi_worst <= 0.02,
        format!(
            "{} states, max profile deviation {worst:.2e} (tol 1e-6), xi off {:.2}% from {expected:.3}",
            levels.len(),
            100.0 * xi_worst
        ),
    ))
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}

fn scale_free_scaling(opts: &VerifyOptions) -> Outcome {
    let layouts = [(20, 11), (40, 21), (80, 41)];
    let rows = scaling_study(&fourfold(20).with_gamma(3.4), &layouts, StateSelector::LargestIm, &opts.thresholds)
        .map_err(|e| e.to_string())?;
    let r: Vec<f64> = rows.iter().map(|r| r.xi_over_size).collect();
    let s = spread(&r);
    Ok((s <= 0.02, format!("xi/2N = {r:.4?}, spread {:.2}% (tol 2%)", 100.0 * s)))
}

fn mobility(opts: &VerifyOptions) -> Outcome {
    let spec = fourfold(40).with_gamma(3.2);
    let states = analyze(&spec, &opts.thresholds, true).map_err(|e| e.to_string())?;
    let thr = dense(&spec)?.reality_threshold(opts.thresholds.tol_real);
    let real_max = states
        .iter()
        .filter(|s| s.energy.im.abs() <= thr && s.classification != Classification::Bound)
        .map(|s| s.chi)
        .fold(f64::NEG_INFINITY, f64::max);
    let complex_min = states.iter().filter(|s| s.energy.im.abs() > thr).map(|s| s.chi).fold(f64::INFINITY, f64::min);
    let edges = mobility_edges(&states);
    let symmetric = edges.iter().all(|&e| edges.iter().any(|&f| (e + f).abs() <= 1e-6 * (1.0 + e.abs())));
    Ok((
        real_max < complex_min && !edges.is_empty() && symmetric,
        format!("max real chi {real_max:.5} < min complex chi {complex_min:.5}; edges {edges:.4?}"),
    ))
}

fn single_impurity(opts: &VerifyOptions) -> Outcome {
    let targets: Vec<f64> = (1..20).map(|l| 2.0 * (2.0 * PI * l as f64 / 40.0).cos()).collect();
    let mut lattice_worst = 0.0f64;
    let mut bounds = Vec::new();
    let mut bound_gap = f64::NAN;
    for g in [0.0, 1.0, 2.0, 2.05] {
        let spec = ModelSpec::ImpurityChain(ImpurityParams { t: 1.0, gamma: g, length: 40, m: 20 });
        let s = dense(&spec)?;
        let mut used = vec![false; s.len()];
        for &t in &targets {
            let (j, d) = (0..s.len())
                .filter(|&j| !used[j])
                .map(|j| (j, (s.eigenvalues[j] - t).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or("spectrum too small")?;
            used[j] = true;
            lattice_worst = lattice_worst.max(d);
        }
        let states = analyze(&spec, &opts.thresholds, true).map_err(|e| e.to_string())?;
        let b: Vec<C64> =
            states.iter().filter(|s| s.classification == Classification::Bound).map(|s| s.energy).collect();
        if g > 2.0 {
            let exact = 2.0 * (g / 2.0f64).acosh().sinh();
            bound_gap = b.iter().map(|e| C64::new(e.re, e.im.abs() - exact).norm()).fold(f64::NAN, f64::max);
        }
        bounds.push(b.len());
    }
    let ok = lattice_worst <= 1e-9 && bounds == [0, 0, 0, 1] && bound_gap <= 1e-6;
    Ok((
        ok,
        format!(
            "19 lattice levels within {lattice_worst:.2e} (tol 1e-9); bound counts {bounds:?} (want [0,0,0,1]); \
             bound |E| off 0.45i by {bound_gap:.2e} (tol 1e-6)"
        ),
    ))
}

/// Collapse error over all sizes at once plus the per-size ξ.
fn collapse_and_xi(spec: &ModelSpec, layouts: &[(usize, usize)], th: &Thresholds) -> Result<(f64, Vec<f64>), String> {
    let rows = scaling_study(spec, layouts, StateSelector::LargestIm, th).map_err(|e| e.to_string())?;
    let anchors: Vec<usize> = layouts.iter().map(|&(n, m)| anchor_site(&spec.resized_at(n, m))).collect();
    let profiles: Vec<Profile> =
        rows.iter().zip(&anchors).map(|(r, &a)| Profile { amplitudes: &r.amplitudes, anchor: a }).collect();
    let err = collapse_error(&profiles).map_err(|e| e.to_string())?;
    Ok((err, rows.iter().map(|r| r.xi).collect()))
}

fn aa_nonreciprocal(opts: &VerifyOptions) -> Outcome {
    let base = |lambda| {
        ModelSpec::AaNonreciprocal(AaNonreciprocalParams {
            t: 1.0,
            lambda,
            alpha: crate::model::default_alpha(),
            delta: 8.0,
            gamma: 63f64.sqrt(),
            length: 20,
            m: 11,
        })
    };
    let (weak, _) = collapse_and_xi(&base(0.1), &[(20, 11), (40, 21), (80, 41)], &opts.thresholds)?;
    let (strong, xi) = collapse_and_xi(&base(1.4), &[(40, 21), (80, 41)], &opts.thresholds)?;
    let s = spread(&xi);
    Ok((
        weak <= 0.05 && s <= 0.05 && strong > 0.3,
        format!(
            "lambda=0.1 collapse {weak:.4} (tol 0.05); lambda=1.4 xi {xi:.3?} spread {:.1}% (tol 5%), collapse {strong:.3} (want > 0.3)",
            100.0 * s
        ),
    ))
}

fn aa_imaginary(opts: &VerifyOptions) -> Outcome {
    let mut errs = Vec::new();
    for lambda in [0.0, 0.05, 0.1] {
        let spec = ModelSpec::AaImaginary(AaImaginaryParams {
            t: 1.0,
            lambda,
            alpha: crate::model::default_alpha(),
            gamma: 1.0,
            length: 60,
            m: 30,
        });
        errs.push(collapse_and_xi(&spec, &[(60, 30), (80, 40), (100, 50)], &opts.thresholds)?.0);
    }
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    Ok((worst <= 0.05, format!("collapse {errs:.3?} for lambda 0, 0.05, 0.1 (tol 0.05)")))
}

fn unequal_hoppings(opts: &VerifyOptions) -> Outcome {
    let ga = crate::secular::gamma_a(1.0, 4.0).ok_or("no gamma_a")?;
    let spec = ModelSpec::DoubleChain(two_band(2.0, 4.0, ga, 20));
    let states = analyze(&spec, &opts.thresholds, true).map_err(|e| e.to_string())?;
    let sfl = states.iter().filter(|s| s.classification == Classification::Sfl).count();
    let above = states.iter().filter(|s| s.chi > 1.0).count();
    let one_sided = above == 0 || above == states.len();
    let lo = states.iter().map(|s| s.chi).fold(f64::INFINITY, f64::min);
    Ok((
        sfl == states.len() && one_sided,
        format!("{sfl}/{} scale-free, {above} with chi > 1, min chi {lo:.3}", states.len()),
    ))
}
