//! Lattice models and their symmetry operators.
//!
//! Every model is a closed ring. Two-band models (`DoubleChain`, `SshLocal`)
//! order their basis as `1A, 1B, 2A, 2B, ...`, so cell `n` (1-based) owns the
//! 0-based rows `2(n-1)` and `2(n-1)+1`. Single-band chains index sites 1..L.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Golden-mean incommensurability used when `alpha` is omitted.
pub fn default_alpha() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("relation not defined for this operator/basis: {0}")]
    UnsupportedRelation(String),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter { name, reason: reason.into() }
}

/// Parameters shared by the double-chain and SSH forms of the two-band ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBandParams {
    pub t1: f64,
    pub t2: f64,
    pub delta: f64,
    pub gamma: f64,
    pub n_cells: usize,
    /// 1-based index of the defect cell.
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpurityParams {
    pub t: f64,
    pub gamma: f64,
    pub length: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AaNonreciprocalParams {
    pub t: f64,
    pub lambda: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub delta: f64,
    pub gamma: f64,
    pub length: usize,
    /// The defect bond joins sites `m` and `m+1` (wrapping).
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AaImaginaryParams {
    pub t: f64,
    pub lambda: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub gamma: f64,
    pub length: usize,
    pub m: usize,
}

/// A model family together with its parameters.
///
/// Serialized with an internal `"model"` tag, e.g.
/// `{"model":"impurity_chain","t":1,"gamma":2.05,"length":40,"m":20}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    DoubleChain(TwoBandParams),
    SshLocal(TwoBandParams),
    ImpurityChain(ImpurityParams),
    AaNonreciprocal(AaNonreciprocalParams),
    AaImaginary(AaImaginaryParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisTag {
    DoubleChainBasis,
    SshBasis,
    SiteBasis,
}

/// Dense Hamiltonian tagged with the basis its rows refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub entries: DMatrix<C64>,
    pub basis: BasisTag,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        row_sum_norm(&self.entries)
    }
}

pub(crate) fn row_sum_norm(a: &DMatrix<C64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_finite(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be finite"))
    }
}

impl TwoBandParams {
    pub fn dim(&self) -> usize {
        2 * self.n_cells
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [("t1", self.t1), ("t2", self.t2), ("delta", self.delta), ("gamma", self.gamma)] {
            check_finite(name, v)?;
        }
        if self.n_cells < 2 {
            return Err(invalid("n_cells", "need at least 2 cells"));
        }
        if self.m < 1 || self.m > self.n_cells {
            return Err(invalid("m", format!("must lie in 1..={}", self.n_cells)));
        }
        if self.t1 == 0.0 {
            return Err(invalid("t1", "must be nonzero"));
        }
        Ok(())
    }

    /// Row index of sublattice A in 1-based cell `n`.
    pub fn a(&self, n: usize) -> usize {
        2 * (n - 1)
    }

    pub fn b(&self, n: usize) -> usize {
        2 * (n - 1) + 1
    }

    fn next(&self, n: usize) -> usize {
        n % self.n_cells + 1
    }
}

fn check_chain(t: f64, length: usize, m: usize) -> Result<(), ModelError> {
    check_finite("t", t)?;
    if length < 3 {
        return Err(invalid("length", "need at least 3 sites"));
    }
    if m < 1 || m > length {
        return Err(invalid("m", format!("must lie in 1..={length}")));
    }
    if t == 0.0 {
        return Err(invalid("t", "must be nonzero"));
    }
    Ok(())
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => p.validate(),
            ModelSpec::ImpurityChain(p) => {
                check_finite("gamma", p.gamma)?;
                check_chain(p.t, p.length, p.m)
            }
            ModelSpec::AaNonreciprocal(p) => {
                for (name, v) in [("lambda", p.lambda), ("alpha", p.alpha), ("delta", p.delta), ("gamma", p.gamma)] {
                    check_finite(name, v)?;
                }
                check_chain(p.t, p.length, p.m)
            }
            ModelSpec::AaImaginary(p) => {
                for (name, v) in [("lambda", p.lambda), ("alpha", p.alpha), ("gamma", p.gamma)] {
                    check_finite(name, v)?;
                }
                check_chain(p.t, p.length, p.m)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => p.dim(),
            ModelSpec::ImpurityChain(p) => p.length,
            ModelSpec::AaNonreciprocal(p) => p.length,
            ModelSpec::AaImaginary(p) => p.length,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => p.gamma,
            ModelSpec::ImpurityChain(p) => p.gamma,
            ModelSpec::AaNonreciprocal(p) => p.gamma,
            ModelSpec::AaImaginary(p) => p.gamma,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        match &mut self {
            ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => p.gamma = gamma,
            ModelSpec::ImpurityChain(p) => p.gamma = gamma,
            ModelSpec::AaNonreciprocal(p) => p.gamma = gamma,
            ModelSpec::AaImaginary(p) => p.gamma = gamma,
        }
        self
    }

    pub fn two_band(&self) -> Option<&TwoBandParams> {
        match self {
            ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => Some(p),
            _ => None,
        }
    }

    /// Number of sites per unit cell (2 for two-band rings, 1 otherwise).
    pub fn cell_size(&self) -> usize {
        if self.two_band().is_some() {
            2
        } else {
            1
        }
    }

    /// 0-based sites carrying the defect, in ring order.
    pub fn impurity_sites(&self) -> Vec<usize> {
        match self {
            ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => vec![p.a(p.m), p.b(p.m)],
            ModelSpec::ImpurityChain(p) => vec![p.m - 1],
            ModelSpec::AaNonreciprocal(p) => vec![p.m - 1, p.m % p.length],
            ModelSpec::AaImaginary(p) => vec![p.m - 1],
        }
    }

    /// Same family at a different size. `size` counts cells for two-band
    /// rings and sites otherwise; the defect moves to `size/2 + 1`.
    pub fn resized(&self, size: usize) -> Self {
        self.resized_at(size, size / 2 + 1)
    }

    /// Same family with explicit size and defect position.
    pub fn resized_at(&self, size: usize, m: usize) -> Self {
        let mut s = *self;
        match &mut s {
            ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => {
                p.n_cells = size;
                p.m = m;
            }
            ModelSpec::ImpurityChain(p) => {
                p.length = size;
                p.m = m;
            }
            ModelSpec::AaNonreciprocal(p) => {
                p.length = size;
                p.m = m;
            }
            ModelSpec::AaImaginary(p) => {
                p.length = size;
                p.m = m;
            }
        }
        s
    }

    /// Cells (two-band) or sites, and defect position.
    pub fn size_and_m(&self) -> (usize, usize) {
        match self {
            ModelSpec::DoubleChain(p) | ModelSpec::SshLocal(p) => (p.n_cells, p.m),
            ModelSpec::ImpurityChain(p) => (p.length, p.m),
            ModelSpec::AaNonreciprocal(p) => (p.length, p.m),
            ModelSpec::AaImaginary(p) => (p.length, p.m),
        }
    }

    /// Companion at twice the size with the defect at `2m - 1`, used to
    /// tell size-independent from size-proportional localization.
    pub fn doubled(&self) -> Self {
        let (size, m) = self.size_and_m();
        self.resized_at(2 * size, 2 * m - 1)
    }

    pub fn build(&self) -> Result<HamiltonianMatrix, ModelError> {
        build_hamiltonian(self)
    }
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<HamiltonianMatrix, ModelError> {
    spec.validate()?;
    Ok(match spec {
        ModelSpec::DoubleChain(p) => HamiltonianMatrix {
            entries: double_chain(p),
            basis: BasisTag::DoubleChainBasis,
        },
        ModelSpec::SshLocal(p) => HamiltonianMatrix {
            entries: ssh_local(p),
            basis: BasisTag::SshBasis,
        },
        ModelSpec::ImpurityChain(p) => {
            let mut h = ring(p.length, p.t);
            h[(p.m - 1, p.m - 1)] += I * p.gamma;
            HamiltonianMatrix { entries: h, basis: BasisTag::SiteBasis }
        }
        ModelSpec::AaNonreciprocal(p) => {
            let mut h = ring(p.length, p.t);
            add_aa_potential(&mut h, p.lambda, p.alpha);
            let (a, b) = (p.m - 1, p.m % p.length);
            h[(a, b)] = C64::from(p.delta + p.gamma);
            h[(b, a)] = C64::from(p.delta - p.gamma);
            HamiltonianMatrix { entries: h, basis: BasisTag::SiteBasis }
        }
        ModelSpec::AaImaginary(p) => {
            let mut h = ring(p.length, p.t);
            add_aa_potential(&mut h, p.lambda, p.alpha);
            h[(p.m - 1, p.m - 1)] += I * p.gamma;
            HamiltonianMatrix { entries: h, basis: BasisTag::SiteBasis }
        }
    })
}

fn ring(len: usize, t: f64) -> DMatrix<C64> {
    let mut h = DMatrix::zeros(len, len);
    for n in 0..len {
        let k = (n + 1) % len;
        h[(n, k)] = C64::from(t);
        h[(k, n)] = C64::from(t);
    }
    h
}

fn add_aa_potential(h: &mut DMatrix<C64>, lambda: f64, alpha: f64) {
    let two_pi = 2.0 * std::f64::consts::PI;
    for n in 0..h.nrows() {
        let x = (n + 1) as f64;
        h[(n, n)] += C64::from(2.0 * lambda * (two_pi * alpha * x).cos());
    }
}

fn double_chain(p: &TwoBandParams) -> DMatrix<C64> {
    let dim = p.dim();
    let mut h = DMatrix::zeros(dim, dim);
    let half = 0.5 * p.t2;
    for n in 1..=p.n_cells {
        let (a, b) = (p.a(n), p.b(n));
        let rung = if n == p.m { p.delta } else { p.t1 };
        h[(a, b)] = C64::from(rung);
        h[(b, a)] = C64::from(rung);
        let k = p.next(n);
        let (a2, b2) = (p.a(k), p.b(k));
        // cross hoppings
        h[(b2, a)] += C64::from(half);
        h[(a, b2)] += C64::from(half);
        h[(a2, b)] += C64::from(half);
        h[(b, a2)] += C64::from(half);
        // leg hoppings carry opposite phases on the two legs
        h[(a2, a)] += I * half;
        h[(a, a2)] -= I * half;
        h[(b2, b)] -= I * half;
        h[(b, b2)] += I * half;
    }
    h[(p.a(p.m), p.a(p.m))] += I * p.gamma;
    h[(p.b(p.m), p.b(p.m))] -= I * p.gamma;
    h
}

fn ssh_local(p: &TwoBandParams) -> DMatrix<C64> {
    let dim = p.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for n in 1..=p.n_cells {
        let (a, b) = (p.a(n), p.b(n));
        if n == p.m {
            h[(a, b)] = C64::from(p.delta + p.gamma);
            h[(b, a)] = C64::from(p.delta - p.gamma);
        } else {
            h[(a, b)] = C64::from(p.t1);
            h[(b, a)] = C64::from(p.t1);
        }
        let a2 = p.a(p.next(n));
        h[(a2, b)] += C64::from(p.t2);
        h[(b, a2)] += C64::from(p.t2);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryKind {
    /// Cell-wise σx combined with complex conjugation.
    ParityP,
    /// Cell-wise σy; anticommutes with the double-chain Hamiltonian.
    SublatticeGamma,
    /// Cell-wise σz; anticommutes with the SSH Hamiltonian.
    SublatticeGammaBar,
    /// Reflection about the defect rung; maps H to its adjoint.
    PseudoHermEta,
    /// Unitary taking the double-chain basis to the SSH basis.
    SimilarityS,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOperator {
    pub kind: SymmetryKind,
    pub matrix: DMatrix<C64>,
}

fn cellwise(n_cells: usize, block: [[C64; 2]; 2]) -> DMatrix<C64> {
    let mut u = DMatrix::zeros(2 * n_cells, 2 * n_cells);
    for c in 0..n_cells {
        for r in 0..2 {
            for s in 0..2 {
                u[(2 * c + r, 2 * c + s)] = block[r][s];
            }
        }
    }
    u
}

impl SymmetryOperator {
    pub fn parity(n_cells: usize) -> Self {
        let (o, l) = (C64::from(0.0), C64::from(1.0));
        Self { kind: SymmetryKind::ParityP, matrix: cellwise(n_cells, [[o, l], [l, o]]) }
    }

    pub fn gamma(n_cells: usize) -> Self {
        let o = C64::from(0.0);
        Self { kind: SymmetryKind::SublatticeGamma, matrix: cellwise(n_cells, [[o, -I], [I, o]]) }
    }

    pub fn gamma_bar(n_cells: usize) -> Self {
        let (o, l) = (C64::from(0.0), C64::from(1.0));
        Self { kind: SymmetryKind::SublatticeGammaBar, matrix: cellwise(n_cells, [[l, o], [o, -l]]) }
    }

    /// Reflection of the 2N sites about the defect rung. As a matrix it is
    /// a block anti-diagonal reversal `J_{L1} ⊕ J_{L2}` after cyclically
    /// shifting the ring; equivalently `x -> 4m - 3 - x (mod 2N)` 0-based.
    pub fn eta(n_cells: usize, m: usize) -> Self {
        let dim = 2 * n_cells;
        let mut e = DMatrix::zeros(dim, dim);
        let shift = (4 * m) as isize - 3;
        for x in 0..dim {
            let y = (shift - x as isize).rem_euclid(dim as isize) as usize;
            e[(y, x)] = C64::from(1.0);
        }
        Self { kind: SymmetryKind::PseudoHermEta, matrix: e }
    }

    pub fn similarity(n_cells: usize) -> Self {
        let r = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let ri = I * std::f64::consts::FRAC_1_SQRT_2;
        Self { kind: SymmetryKind::SimilarityS, matrix: cellwise(n_cells, [[r, ri], [ri, r]]) }
    }

    /// Block lengths `(L1, L2)` of the reversal structure of `eta`.
    pub fn eta_blocks(n_cells: usize, m: usize) -> (usize, usize) {
        if 2 * m <= n_cells + 1 {
            (2 * (2 * m - 1), 2 * (n_cells + 1 - 2 * m))
        } else {
            (2 * (2 * m - n_cells - 1), 2 * (2 * (n_cells - m) + 1))
        }
    }
}

/// Maps between the double-chain and SSH bases.
///
/// A double-chain matrix becomes `S H S⁻¹` in the SSH basis; an SSH-basis
/// matrix is taken back with `S⁻¹ H S`.
pub fn similarity_conjugate(
    h: &HamiltonianMatrix,
    s: &SymmetryOperator,
) -> Result<HamiltonianMatrix, ModelError> {
    if s.kind != SymmetryKind::SimilarityS {
        return Err(ModelError::UnsupportedRelation(format!("{:?} is not the basis map", s.kind)));
    }
    if s.matrix.nrows() != h.dim() {
        return Err(ModelError::DimensionMismatch { expected: h.dim(), found: s.matrix.nrows() });
    }
    let s_inv = s.matrix.adjoint();
    match h.basis {
        BasisTag::DoubleChainBasis => Ok(HamiltonianMatrix {
            entries: &s.matrix * &h.entries * &s_inv,
            basis: BasisTag::SshBasis,
        }),
        BasisTag::SshBasis => Ok(HamiltonianMatrix {
            entries: &s_inv * &h.entries * &s.matrix,
            basis: BasisTag::DoubleChainBasis,
        }),
        BasisTag::SiteBasis => Err(ModelError::UnsupportedRelation("site basis has no two-band form".into())),
    }
}

fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry-wise violation of the relation the operator is meant to
/// satisfy: `P H* P = H`, `Γ H Γ⁻¹ = -H`, or `η H η⁻¹ = H†`.
pub fn symmetry_deviation(h: &HamiltonianMatrix, op: &SymmetryOperator) -> Result<f64, ModelError> {
    if op.matrix.nrows() != h.dim() {
        return Err(ModelError::DimensionMismatch { expected: h.dim(), found: op.matrix.nrows() });
    }
    // every operator here is unitary
    let u = &op.matrix;
    let u_inv = u.adjoint();
    let a = &h.entries;
    let d = match op.kind {
        SymmetryKind::ParityP => max_abs(&(u * a.conjugate() * &u_inv - a)),
        SymmetryKind::SublatticeGamma | SymmetryKind::SublatticeGammaBar => max_abs(&(u * a * &u_inv + a)),
        SymmetryKind::PseudoHermEta => max_abs(&(u * a * &u_inv - a.adjoint())),
        SymmetryKind::SimilarityS => {
            return Err(ModelError::UnsupportedRelation("use similarity_conjugate for S".into()))
        }
    };
    Ok(d)
}

/// Largest entry of the anti-Hermitian part `(H - H†)/2`.
pub fn hermiticity_defect(h: &HamiltonianMatrix) -> f64 {
    max_abs(&((&h.entries - h.entries.adjoint()) * C64::from(0.5)))
}
