use std::path::Path;

use serde::Serialize;
use sfl_core::eig::normalize_phase;
use sfl_core::phase::{sweep, PhaseError, SweepSpec, TwoBandForm};
use sfl_core::secular::SolverConfig;
use sfl_core::states::{
    analyze, analyze_secular, anchor_site, collapse_error, scaling_study, select_state, states_from_spectrum,
    EigenState, Profile, StateError,
};
use sfl_core::verify::{run_all, VerifyOptions};
use sfl_core::{eig, match_spectra, ModelError, ModelSpec, Spectrum, C64};

use crate::config::{Method, Range, Selector, Settings};
use crate::output::{float, write_json, write_table, Row};
use crate::CliError;

fn solver(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(e.to_string())
}

fn state_err(e: StateError) -> CliError {
    match e {
        StateError::Model(m) => CliError::Config(m.to_string()),
        other => solver(other),
    }
}

fn model_err(e: ModelError) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    re_e: f64,
    im_e: f64,
    class: &'static str,
    chi: f64,
    xi: f64,
    residual: f64,
    method: &'static str,
}

impl Row for SpectrumRow {
    const HEADER: &'static [&'static str] = &["index", "re_e", "im_e", "class", "chi", "xi", "residual", "method"];

    fn record(&self) -> Vec<String> {
        vec![
            self.index.to_string(),
            float(self.re_e),
            float(self.im_e),
            self.class.into(),
            float(self.chi),
            float(self.xi),
            float(self.residual),
            self.method.into(),
        ]
    }
}

fn spectrum_rows(states: &[EigenState], method: &'static str) -> Vec<SpectrumRow> {
    states
        .iter()
        .enumerate()
        .map(|(index, s)| SpectrumRow {
            index,
            re_e: s.energy.re,
            im_e: s.energy.im,
            class: s.classification.label(),
            chi: s.chi,
            xi: s.xi,
            residual: s.residual,
            method,
        })
        .collect()
}

#[derive(Serialize)]
struct MatchReport {
    distance: f64,
    dense_levels: usize,
    secular_levels: usize,
}

pub fn spectrum(s: &Settings) -> Result<(), CliError> {
    let spec = s.model()?;
    let cfg = SolverConfig::default();
    let dense = matches!(s.method, Method::Dense | Method::Both)
        .then(|| analyze(&spec, &s.thresholds, true))
        .transpose()
        .map_err(state_err)?;
    let secular = matches!(s.method, Method::Secular | Method::Both)
        .then(|| analyze_secular(&spec, &cfg, &s.thresholds, true))
        .transpose()
        .map_err(state_err)?;
    let mut rows = Vec::new();
    if let Some(d) = &dense {
        rows.extend(spectrum_rows(d, "dense"));
    }
    if let Some(q) = &secular {
        rows.extend(spectrum_rows(q, "secular"));
    }
    let path = write_table(&s.out, "spectrum", s.format, &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    if let (Some(d), Some(q)) = (&dense, &secular) {
        let a: Vec<C64> = d.iter().map(|x| x.energy).collect();
        let b: Vec<C64> = q.iter().map(|x| x.energy).collect();
        let report = MatchReport {
            distance: match_spectra(&a, &b).unwrap_or(f64::INFINITY),
            dense_levels: a.len(),
            secular_levels: b.len(),
        };
        let mpath = s.out.join("match.json");
        write_json(&mpath, &report)?;
        println!("wrote {} (distance {:e})", mpath.display(), report.distance);
    }
    Ok(())
}

#[derive(Serialize)]
struct PhaseRow {
    delta: f64,
    gamma: f64,
    n_im: usize,
    n_bound: usize,
    regime: Option<&'static str>,
    gamma_c1: f64,
    gamma_a: Option<f64>,
    gamma_c2: f64,
    error: Option<String>,
}

impl Row for PhaseRow {
    const HEADER: &'static [&'static str] =
        &["delta", "gamma", "n_im", "n_bound", "regime", "gamma_c1", "gamma_a", "gamma_c2", "error"];

    fn record(&self) -> Vec<String> {
        vec![
            float(self.delta),
            float(self.gamma),
            self.n_im.to_string(),
            self.n_bound.to_string(),
            self.regime.unwrap_or("").into(),
            float(self.gamma_c1),
            self.gamma_a.map(float).unwrap_or_default(),
            float(self.gamma_c2),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

pub fn phase_diagram(s: &Settings, delta: Option<Range>, gamma: Option<Range>) -> Result<(), CliError> {
    let spec = s.model()?;
    let (form, p) = match spec {
        ModelSpec::DoubleChain(p) => (TwoBandForm::DoubleChain, p),
        ModelSpec::SshLocal(p) => (TwoBandForm::SshLocal, p),
        _ => return Err(CliError::Config("phase-diagram needs a double_chain or ssh_local model".into())),
    };
    let missing = || CliError::Config("phase-diagram needs --delta and --gamma ranges (or a \"sweep\" entry)".into());
    let delta = delta.or(s.sweep.map(|w| w.delta)).ok_or_else(missing)?;
    let gamma = gamma.or(s.sweep.map(|w| w.gamma)).ok_or_else(missing)?;
    let sw = SweepSpec {
        form,
        t1: p.t1,
        t2: p.t2,
        n_cells: p.n_cells,
        m: Some(p.m),
        delta_range: (delta.start, delta.stop),
        gamma_range: (gamma.start, gamma.stop),
        grid: (delta.count, gamma.count),
    };
    let points = sweep(&sw, &s.thresholds).map_err(|e: PhaseError| CliError::Config(e.to_string()))?;
    let rows: Vec<PhaseRow> = points
        .iter()
        .map(|q| PhaseRow {
            delta: q.delta,
            gamma: q.gamma,
            n_im: q.n_im,
            n_bound: q.n_bound,
            regime: q.regime.map(|r| r.label()),
            gamma_c1: q.boundaries.gamma_c1,
            gamma_a: q.boundaries.gamma_a,
            gamma_c2: q.boundaries.gamma_c2,
            error: q.error.clone(),
        })
        .collect();
    let path = write_table(&s.out, "phase", s.format, &rows)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("wrote {} ({} nodes, {failed} failed)", path.display(), rows.len());
    if failed * 100 > rows.len() {
        return Err(CliError::Solver(format!("{failed} of {} nodes failed", rows.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct ScalingOut {
    size: usize,
    xi: f64,
    xi_over_size: f64,
    chi: f64,
    collapse_error: f64,
}

impl Row for ScalingOut {
    const HEADER: &'static [&'static str] = &["size", "xi", "xi_over_size", "chi", "collapse_error"];

    fn record(&self) -> Vec<String> {
        vec![
            self.size.to_string(),
            float(self.xi),
            float(self.xi_over_size),
            float(self.chi),
            float(self.collapse_error),
        ]
    }
}

/// `(size, m)` in the units of `resized_at` for a size given in sites,
/// with the defect at the middle of the ring.
fn layout(spec: &ModelSpec, sites: usize) -> Result<(usize, usize), CliError> {
    let per = spec.cell_size();
    if !sites.is_multiple_of(per) {
        return Err(CliError::Config(format!("size {sites} is not a whole number of {per}-site cells")));
    }
    let n = sites / per;
    Ok((n, n / 2 + 1))
}

fn dense_at(spec: &ModelSpec) -> Result<Spectrum, CliError> {
    spec.validate().map_err(model_err)?;
    eig(&spec.build().map_err(model_err)?).map_err(solver)
}

/// Every state at every size; state `k` of a ring is compared with the
/// state at the same relative position in the sorted spectrum of the
/// smallest ring.
fn scaling_all(spec: &ModelSpec, layouts: &[(usize, usize)]) -> Result<Vec<ScalingOut>, CliError> {
    let mut per_size = Vec::new();
    for &(n, m) in layouts {
        let sp = spec.resized_at(n, m);
        let mut states = states_from_spectrum(&dense_at(&sp)?, &sp);
        sfl_core::states::sort_states(&mut states);
        per_size.push((anchor_site(&sp), states));
    }
    let (a0, base) = &per_size[0];
    let mut rows = Vec::new();
    for (anchor, states) in &per_size {
        let dim = states.len();
        for (k, st) in states.iter().enumerate() {
            let b = &base[k * base.len() / dim];
            let err = collapse_error(&[
                Profile { amplitudes: b.amplitudes.as_slice(), anchor: *a0 },
                Profile { amplitudes: st.amplitudes.as_slice(), anchor: *anchor },
            ])
            .map_err(solver)?;
            rows.push(ScalingOut { size: dim, xi: st.xi, xi_over_size: st.xi / dim as f64, chi: st.chi, collapse_error: err });
        }
    }
    Ok(rows)
}

pub fn scaling(s: &Settings, sizes: &[usize], select: Option<Selector>) -> Result<(), CliError> {
    let spec = s.model()?;
    let sizes = if sizes.is_empty() { s.sizes.as_slice() } else { sizes };
    if sizes.len() < 2 {
        return Err(CliError::Config("scaling needs at least two --sizes".into()));
    }
    let layouts = sizes.iter().map(|&n| layout(&spec, n)).collect::<Result<Vec<_>, _>>()?;
    for &(n, m) in &layouts {
        spec.resized_at(n, m).validate().map_err(model_err)?;
    }
    let rows = match select.or(s.selector).unwrap_or_default() {
        Selector::All => scaling_all(&spec, &layouts)?,
        Selector::One(sel) => scaling_study(&spec, &layouts, sel, &s.thresholds)
            .map_err(state_err)?
            .into_iter()
            .map(|r| ScalingOut {
                size: r.size,
                xi: r.xi,
                xi_over_size: r.xi_over_size,
                chi: r.chi,
                collapse_error: r.collapse_error,
            })
            .collect(),
    };
    let path = write_table(&s.out, "scaling", s.format, &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

#[derive(Serialize)]
struct AmplitudeRow {
    index: usize,
    x: usize,
    re_psi: f64,
    im_psi: f64,
    abs_psi: f64,
}

impl Row for AmplitudeRow {
    const HEADER: &'static [&'static str] = &["index", "x", "re_psi", "im_psi", "abs_psi"];

    fn record(&self) -> Vec<String> {
        vec![self.index.to_string(), self.x.to_string(), float(self.re_psi), float(self.im_psi), float(self.abs_psi)]
    }
}

fn amplitude_rows(index: usize, amps: &[C64], rows: &mut Vec<AmplitudeRow>) {
    rows.extend(amps.iter().enumerate().map(|(x, z)| AmplitudeRow {
        index,
        x: x + 1,
        re_psi: z.re,
        im_psi: z.im,
        abs_psi: z.norm(),
    }));
}

/// Amplitudes of the selected state(s), site by site. `index` is the
/// position in the `(Re E, Im E)` ordering.
pub fn states(s: &Settings, select: Option<Selector>) -> Result<(), CliError> {
    let spec = s.model()?;
    let states: Vec<EigenState> = match s.method {
        Method::Secular => analyze_secular(&spec, &SolverConfig::default(), &s.thresholds, false).map_err(state_err)?,
        Method::Dense | Method::Both => {
            let mut v = states_from_spectrum(&dense_at(&spec)?, &spec);
            sfl_core::states::sort_states(&mut v);
            v
        }
    };
    let picked: Vec<usize> = match select.or(s.selector).unwrap_or_default() {
        Selector::All => (0..states.len()).collect(),
        Selector::One(sel) => {
            let spectrum = dense_at(&spec)?;
            let k = select_state(&spectrum, &spec, sel, &s.thresholds).map_err(state_err)?;
            let target = spectrum.eigenvalues[k];
            let j = (0..states.len())
                .min_by(|&a, &b| (states[a].energy - target).norm().total_cmp(&(states[b].energy - target).norm()))
                .ok_or_else(|| solver("empty spectrum"))?;
            vec![j]
        }
    };
    let mut rows = Vec::new();
    for k in picked {
        let mut v = states[k].amplitudes.clone();
        normalize_phase(&mut v);
        amplitude_rows(k, v.as_slice(), &mut rows);
    }
    let path = write_table(&s.out, "states", s.format, &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

#[derive(Serialize)]
struct VerifyRow {
    id: u8,
    name: &'static str,
    passed: bool,
    measured: String,
}

impl Row for VerifyRow {
    const HEADER: &'static [&'static str] = &["id", "name", "passed", "measured"];

    fn record(&self) -> Vec<String> {
        vec![self.id.to_string(), self.name.into(), self.passed.to_string(), self.measured.clone()]
    }
}

pub fn verify(s: &Settings, out: Option<&Path>) -> Result<(), CliError> {
    let opts = VerifyOptions { thresholds: s.thresholds, ..VerifyOptions::default() };
    let reports = run_all(&opts);
    for r in &reports {
        println!("{r}");
    }
    if let Some(dir) = out {
        let rows: Vec<VerifyRow> = reports
            .iter()
            .map(|r| VerifyRow { id: r.id, name: r.name, passed: r.passed, measured: r.measured.clone() })
            .collect();
        write_table(dir, "verify", s.format, &rows)?;
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(failed))
    }
}
