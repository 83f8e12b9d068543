//! The secular-equation route and dense diagonalization must produce the
//! same spectra.

use sfl_core::eig::match_spectra;
use sfl_core::secular::{secular_levels, SolverConfig};
use sfl_core::{eig, ImpurityParams, ModelSpec, TwoBandParams, C64};

fn compare(spec: ModelSpec) -> f64 {
    let dense = eig(&spec.build().unwrap()).unwrap().eigenvalues;
    let sec: Vec<C64> = secular_levels(&spec, &SolverConfig::default()).unwrap().iter().map(|l| l.energy).collect();
    match_spectra(&dense, &sec).unwrap()
}

#[test]
fn two_band_rings() {
    for n in [10usize, 20, 40] {
        for t2 in [1.0, 2.0, 0.6] {
            for gamma in [0.0, 1.0, 2.99, 3.2, 3.4, 15f64.sqrt(), 4.3, 4.99, 5.0, 6.5] {
                let p = TwoBandParams { t1: 1.0, t2, delta: 4.0, gamma, n_cells: n, m: n / 2 + 1 };
                for spec in [ModelSpec::DoubleChain(p), ModelSpec::SshLocal(p)] {
                    let d = compare(spec);
                    assert!(d < 1e-7, "n={n} t2={t2} gamma={gamma}: {d:e}");
                }
            }
        }
    }
}

#[test]
fn small_defect_strength() {
    for delta in [0.0, 0.5, 1.0, 1.5] {
        for gamma in [0.3, 1.2, 2.5] {
            let p = TwoBandParams { t1: 1.0, t2: 1.3, delta, gamma, n_cells: 16, m: 3 };
            let d = compare(ModelSpec::SshLocal(p));
            assert!(d < 1e-7, "delta={delta} gamma={gamma}: {d:e}");
        }
    }
}

#[test]
fn impurity_chains() {
    for length in [9usize, 20, 21, 40, 41, 80] {
        for gamma in [0.0, 0.5, 1.0, 2.0, 2.05, 3.0, -1.5] {
            let spec = ModelSpec::ImpurityChain(ImpurityParams { t: 1.0, gamma, length, m: length / 2 });
            let d = compare(spec);
            assert!(d < 1e-7, "L={length} gamma={gamma}: {d:e}");
        }
    }
}
