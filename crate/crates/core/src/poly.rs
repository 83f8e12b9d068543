//! Three-term Chebyshev recurrences and simultaneous polynomial root
//! iteration (Aberth–Ehrlich).

use crate::model::C64;

/// Value, derivative and summed magnitude of the terms of a polynomial at
/// a point, all multiplied by a common positive factor. The factor keeps
/// high-degree evaluations finite; ratios between fields are exact.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PolyEval {
    pub p: C64,
    pub dp: C64,
    pub scale: f64,
}

impl PolyEval {
    /// `|p| / scale`: zero at an exact root, O(ε·degree) at a computed one.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.p.norm() / self.scale
        } else {
            self.p.norm()
        }
    }
}

const RESCALE_AT: f64 = 1e150;

/// Runs `P_{k+1} = 2c P_k − P_{k−1}` from `P_0 = 1`, `P_1 = a c + b` and
/// returns `[P_{n−2}, P_{n−1}, P_n]` with derivatives, plus the accumulated
/// scale factor.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tail {
    pub val: [C64; 3],
    pub der: [C64; 3],
    pub factor: f64,
}

pub(crate) fn three_term(n: usize, c: C64, a: f64, b: f64) -> Tail {
    let mut val = [C64::from(0.0), C64::from(0.0), C64::from(1.0)];
    let mut der = [C64::from(0.0); 3];
    let mut factor = 1.0;
    for k in 1..=n {
        let (v, d) = if k == 1 {
            (c * a + b, C64::from(a))
        } else {
            (c * 2.0 * val[2] - val[1], val[2] * 2.0 + c * 2.0 * der[2] - der[1])
        };
        val = [val[1], val[2], v];
        der = [der[1], der[2], d];
        if v.norm() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            for i in 0..3 {
                val[i] *= s;
                der[i] *= s;
            }
            factor *= s;
        }
    }
    Tail { val, der, factor }
}

/// Second-kind Chebyshev polynomials: `U_0 = 1`, `U_1 = 2c`.
pub(crate) fn cheb_u(n: usize, c: C64) -> Tail {
    three_term(n, c, 2.0, 0.0)
}

/// First kind: `T_1 = c`.
pub(crate) fn cheb_t(n: usize, c: C64) -> Tail {
    three_term(n, c, 1.0, 0.0)
}

/// Third kind: `V_1 = 2c − 1`.
pub(crate) fn cheb_v(n: usize, c: C64) -> Tail {
    three_term(n, c, 2.0, -1.0)
}

/// Fourth kind: `W_1 = 2c + 1`.
pub(crate) fn cheb_w(n: usize, c: C64) -> Tail {
    three_term(n, c, 2.0, 1.0)
}

#[derive(Debug, Clone)]
pub(crate) struct AberthOutcome {
    pub roots: Vec<C64>,
    pub converged: Vec<bool>,
}

/// Simultaneous Newton iteration with Aberth repulsion. A root is accepted
/// once its correction is below `tol` relative to its size or its value
/// sits at the rounding-noise floor of the evaluation. Iterates that end up
/// stalled just above `tol` (clustered roots near a coalescence, where
/// attainable accuracy is only about `sqrt(ε)`) are accepted at the end if
/// their last correction was below `1e-7`.
pub(crate) fn aberth<F: Fn(C64) -> PolyEval>(f: F, seeds: &[C64], max_iter: usize, tol: f64) -> AberthOutcome {
    let n = seeds.len();
    let noise = 4.0 * f64::EPSILON * (n as f64 + 1.0);
    let mut z = seeds.to_vec();
    let mut done = vec![false; n];
    let mut last_step = vec![f64::INFINITY; n];
    for _ in 0..max_iter {
        if done.iter().all(|&d| d) {
            break;
        }
        for i in 0..n {
            if done[i] {
                continue;
            }
            let e = f(z[i]);
            if e.relative() <= noise {
                done[i] = true;
                continue;
            }
            if e.dp.norm() == 0.0 {
                // stationary point: nudge off it
                let bump = C64::new(1e-3, 1e-3) * (1.0 + z[i].norm());
                z[i] += bump;
                continue;
            }
            let ratio = e.p / e.dp;
            let zi = z[i];
            let repel: C64 = (0..n).filter(|&j| j != i).map(|j| C64::from(1.0) / (zi - z[j])).sum();
            let denom = C64::from(1.0) - ratio * repel;
            let w = if denom.norm() > 0.0 { ratio / denom } else { ratio };
            if !(w.re.is_finite() && w.im.is_finite()) {
                continue;
            }
            z[i] -= w;
            last_step[i] = w.norm() / (1.0 + z[i].norm());
            if last_step[i] <= tol {
                done[i] = true;
            }
        }
    }
    for i in 0..n {
        if !done[i] && last_step[i] <= 1e-7 {
            done[i] = true;
        }
    }
    AberthOutcome { roots: z, converged: done }
}

/// Damped Newton refinement of a single simple root. Returns the
/// improved point, or the input if no step lowered the residual.
pub(crate) fn newton_polish<F: Fn(C64) -> PolyEval>(f: F, z0: C64, max_iter: usize, tol: f64) -> C64 {
    let mut z = z0;
    let mut cur = f(z);
    for _ in 0..max_iter {
        if cur.dp.norm() == 0.0 || cur.p.norm() == 0.0 {
            break;
        }
        let step = cur.p / cur.dp;
        let mut lam = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let trial = z - step * lam;
            let e = f(trial);
            if e.relative() < cur.relative() {
                z = trial;
                cur = e;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if !moved || (step * lam).norm() <= tol * (1.0 + z.norm()) {
            break;
        }
    }
    z
}
