//! PT regimes of the two-band ring: analytic boundaries, empirical
//! classification of a spectrum, and (δ, γ) sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eig::{eig, Spectrum};
use crate::model::{ModelSpec, TwoBandParams};
use crate::states::{chi, fit_localization_length, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeBoundaries {
    /// Onset of complex eigenvalues, `|δ − t₁|`.
    pub gamma_c1: f64,
    /// Full scale-free localization, `sqrt(δ² − t₁²)`; absent for `δ < t₁`.
    pub gamma_a: Option<f64>,
    /// Return to a real bulk spectrum, `δ + t₁`.
    pub gamma_c2: f64,
}

pub fn regime_boundaries(t1: f64, delta: f64) -> RegimeBoundaries {
    let (t1, delta) = (t1.abs(), delta.abs());
    RegimeBoundaries {
        gamma_c1: (delta - t1).abs(),
        gamma_a: crate::secular::gamma_a(t1, delta),
        gamma_c2: delta + t1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    PtUnbroken,
    PtBroken,
    PtRestoration,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::PtUnbroken => "pt_unbroken",
            Regime::PtBroken => "pt_broken",
            Regime::PtRestoration => "pt_restoration",
        }
    }

    /// Regime predicted by the boundaries alone.
    pub fn predicted(b: &RegimeBoundaries, gamma: f64) -> Regime {
        let g = gamma.abs();
        if g < b.gamma_c1 {
            Regime::PtUnbroken
        } else if g <= b.gamma_c2 {
            Regime::PtBroken
        } else {
            Regime::PtRestoration
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub delta: f64,
    pub gamma: f64,
    pub n_im: usize,
    pub n_bound: usize,
    /// Empirical regime; `None` if the node failed.
    pub regime: Option<Regime>,
    pub boundaries: RegimeBoundaries,
    /// True when the empirical regime differs from [`Regime::predicted`].
    pub mismatch: bool,
    pub error: Option<String>,
}

/// Counts complex eigenvalues and bound states and labels the regime.
///
/// A state is bound when its fitted localization length is below
/// `bound_fraction · dim` and it is not a real-energy state with balanced
/// weight. The restoration regime requires every complex eigenvalue to be
/// bound and `γ > γ_c2`.
pub fn classify_regime(spectrum: &Spectrum, spec: &ModelSpec, boundaries: &RegimeBoundaries, th: &Thresholds) -> PhasePoint {
    let thr = spectrum.reality_threshold(th.tol_real);
    let dim = spec.dim() as f64;
    let gamma = spec.gamma();
    let delta = spec.two_band().map_or(f64::NAN, |p| p.delta);
    let mut n_im = 0;
    let mut n_bound = 0;
    let mut complex_unbound = 0;
    for (e, v) in spectrum.eigenvalues.iter().zip(&spectrum.eigenvectors) {
        let complex = e.im.abs() > thr;
        let balanced = (chi(v.as_slice(), spec) - 1.0).abs() <= th.chi_window;
        let xi = fit_localization_length(v.as_slice(), spec).unwrap_or(f64::INFINITY);
        let bound = xi < th.bound_fraction * dim && (complex || !balanced);
        n_im += usize::from(complex);
        n_bound += usize::from(bound);
        complex_unbound += usize::from(complex && !bound);
    }
    let regime = if n_im == 0 {
        Regime::PtUnbroken
    } else if complex_unbound == 0 && gamma.abs() > boundaries.gamma_c2 {
        Regime::PtRestoration
    } else {
        Regime::PtBroken
    };
    PhasePoint {
        delta,
        gamma,
        n_im,
        n_bound,
        regime: Some(regime),
        boundaries: *boundaries,
        mismatch: regime != Regime::predicted(boundaries, gamma),
        error: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoBandForm {
    DoubleChain,
    SshLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub form: TwoBandForm,
    pub t1: f64,
    pub t2: f64,
    pub n_cells: usize,
    /// Defect cell; defaults to `n_cells/2 + 1`.
    pub m: Option<usize>,
    pub delta_range: (f64, f64),
    pub gamma_range: (f64, f64),
    /// Number of nodes along δ and along γ.
    pub grid: (usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("grid needs at least 2 nodes per axis, got {0}x{1}")]
    GridTooSmall(usize, usize),
}

fn axis(range: (f64, f64), n: usize, i: usize) -> f64 {
    range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
}

/// One [`PhasePoint`] per grid node, δ-major. Nodes are evaluated in
/// parallel; failures are recorded on the node.
pub fn sweep(s: &SweepSpec, th: &Thresholds) -> Result<Vec<PhasePoint>, PhaseError> {
    let (nd, ng) = s.grid;
    if nd < 2 || ng < 2 {
        return Err(PhaseError::GridTooSmall(nd, ng));
    }
    let m = s.m.unwrap_or(s.n_cells / 2 + 1);
    let points = (0..nd * ng)
        .into_par_iter()
        .map(|k| {
            let delta = axis(s.delta_range, nd, k / ng);
            let gamma = axis(s.gamma_range, ng, k % ng);
            let p = TwoBandParams { t1: s.t1, t2: s.t2, delta, gamma, n_cells: s.n_cells, m };
            let spec = match s.form {
                TwoBandForm::DoubleChain => ModelSpec::DoubleChain(p),
                TwoBandForm::SshLocal => ModelSpec::SshLocal(p),
            };
            let b = regime_boundaries(s.t1, delta);
            let result = spec.build().map_err(|e| e.to_string()).and_then(|h| eig(&h).map_err(|e| e.to_string()));
            match result {
                Ok(spectrum) => classify_regime(&spectrum, &spec, &b, th),
                Err(e) => PhasePoint {
                    delta,
                    gamma,
                    n_im: 0,
                    n_bound: 0,
                    regime: None,
                    boundaries: b,
                    mismatch: false,
                    error: Some(e),
                },
            }
        })
        .collect();
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        let b = regime_boundaries(1.0, 4.0);
        assert_eq!(b.gamma_c1, 3.0);
        assert!((b.gamma_a.unwrap() - 15f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.gamma_c2, 5.0);
        let b = regime_boundaries(1.0, 1.0);
        assert_eq!((b.gamma_c1, b.gamma_a, b.gamma_c2), (0.0, Some(0.0), 2.0));
        let b = regime_boundaries(1.0, 0.5);
        assert_eq!((b.gamma_c1, b.gamma_a, b.gamma_c2), (0.5, None, 1.5));
    }

    fn point(gamma: f64) -> PhasePoint {
        let p = TwoBandParams { t1: 1.0, t2: 1.0, delta: 4.0, gamma, n_cells: 20, m: 11 };
        let spec = ModelSpec::DoubleChain(p);
        let s = eig(&spec.build().unwrap()).unwrap();
        classify_regime(&s, &spec, &regime_boundaries(1.0, 4.0), &Thresholds::default())
    }

    #[test]
    fn three_regimes() {
        let a = point(1.0);
        assert_eq!((a.n_im, a.regime), (0, Some(Regime::PtUnbroken)));
        let c = point(15f64.sqrt());
        assert_eq!((c.n_im, c.regime), (38, Some(Regime::PtBroken)));
        let e = point(6.5);
        assert_eq!((e.n_im, e.regime), (2, Some(Regime::PtRestoration)));
        assert!(!a.mismatch && !c.mismatch && !e.mismatch);
    }

    #[test]
    fn rejects_degenerate_grid() {
        let s = SweepSpec {
            form: TwoBandForm::DoubleChain,
            t1: 1.0,
            t2: 1.0,
            n_cells: 4,
            m: None,
            delta_range: (0.0, 1.0),
            gamma_range: (0.0, 1.0),
            grid: (1, 5),
        };
        assert_eq!(sweep(&s, &Thresholds::default()), Err(PhaseError::GridTooSmall(1, 5)));
    }
}
