//! Logarithmic negativity and Meyer–Wallach global entanglement of the
//! protected damped gGHZ family, in closed form and from dense matrices.

use std::f64::consts::LN_2;

use crate::dense::{leading_mask, partial_transpose, spin_flip, DenseState};
use crate::error::{domain, Error, Result};
use crate::linalg::{herm_eigen, herm_eigenvalues, singular_values, CMatrix, C64};
use crate::params::{GhzParams, ProtocolParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LnResult {
    pub epsilon_m: f64,
    pub negativity: f64,
    pub e_ln: f64,
    pub m: usize,
}

impl LnResult {
    fn from_epsilon(epsilon_m: f64, m: usize) -> Self {
        let negativity = (-epsilon_m).max(0.0);
        Self { epsilon_m, negativity, e_ln: (2.0 * negativity).ln_1p() / LN_2, m }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MwResult {
    pub c_n: f64,
    pub e_mw: f64,
    /// (λ₁, λ₂, λⱼ): the two corner eigenvalues and the common value of the
    /// remaining 2ⁿ − 2.
    pub lambda: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Ln,
    Mw,
}

/// ln x with ln 0 = −∞ folded into powers: returns e·ln x, and 0 for e = 0.
fn lpow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e * x.ln()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// ln T for T = α² r̄ⁿ + β² s̄ⁿ (1 − p r)ⁿ.
fn ln_transmissivity(alpha: f64, beta: f64, n: f64, pp: &ProtocolParams) -> f64 {
    log_add(
        lpow(alpha.abs(), 2.0) + lpow(pp.r_bar(), n),
        lpow(beta.abs(), 2.0) + lpow(pp.s_bar(), n) + lpow(1.0 - pp.p * pp.r, n),
    )
}

/// Smaller eigenvalue of the 2×2 partial-transpose block coupling
/// |0…0⟩_m|1…1⟩ and |1…1⟩_m|0…0⟩ of the normalized protected state.
pub fn ln_block_eigenvalue(gp: &GhzParams, pp: &ProtocolParams) -> Result<LnResult> {
    let n = gp.n();
    pp.check_bipartition(n)?;
    let (alpha, beta) = (gp.alpha().abs(), gp.beta().abs());
    let m = pp.m;
    if beta == 0.0 {
        return Ok(LnResult::from_epsilon(0.0, m));
    }
    let nf = n as f64;
    let (sb, pb, rb) = (pp.s_bar(), pp.p_bar(), pp.r_bar());
    let lt = ln_transmissivity(alpha, beta, nf, pp);

    let lb2 = 2.0 * beta.ln();
    let ln_a = lb2 + nf * sb.ln() + lpow(pp.p * rb, m as f64) + lpow(pb, (n - m) as f64) - lt;
    let ln_d = lb2 + nf * sb.ln() + lpow(pp.p * rb, (n - m) as f64) + lpow(pb, m as f64) - lt;
    let ln_c = alpha.ln() + beta.ln() + 0.5 * nf * (sb * rb * pb).ln() - lt;

    let top = ln_a.max(ln_d).max(ln_c);
    if top == f64::NEG_INFINITY {
        return Ok(LnResult::from_epsilon(0.0, m));
    }
    let (a, d, c) = ((ln_a - top).exp(), (ln_d - top).exp(), (ln_c - top).exp());
    let ln_lmax = top + ((a + d) / 2.0 + ((a - d) / 2.0).hypot(c)).ln();

    // det = β² s̄ⁿ (r̄p̄)ⁿ (β²(s̄p)ⁿ − α²) / T²
    let x = (lb2 + lpow(sb * pp.p, nf)).exp();
    let gap = x - alpha * alpha;
    if gap == 0.0 || pb == 0.0 {
        return Ok(LnResult::from_epsilon(0.0, m));
    }
    let ln_det = lb2 + nf * (sb.ln() + rb.ln() + pb.ln()) + gap.abs().ln() - 2.0 * lt;
    let eps = gap.signum() * (ln_det - ln_lmax).exp();
    Ok(LnResult::from_epsilon(eps, m))
}

/// Algebraic form of the block eigenvalue with integer powers and no range
/// checks, so it can be continued past p = 1 (valid there for even n and
/// even m).
pub fn protected_block_eigenvalue(alpha: f64, beta: f64, n: usize, m: usize, s: f64, p: f64, r: f64) -> f64 {
    let (ni, mi) = (n as i32, m as i32);
    let (sb, pb, rb) = (1.0 - s, 1.0 - p, 1.0 - r);
    let t = alpha * alpha * rb.powi(ni) + beta * beta * sb.powi(ni) * (1.0 - p * r).powi(ni);
    let a = beta * beta * sb.powi(ni) * (p * rb).powi(mi) * pb.powi(ni - mi) / t;
    let d = beta * beta * sb.powi(ni) * (p * rb).powi(ni - mi) * pb.powi(mi) / t;
    let c2 = alpha * alpha * beta * beta * (sb * rb * pb).powi(ni) / (t * t);
    let det =
        beta * beta * sb.powi(ni) * (rb * pb).powi(ni) * (beta * beta * (sb * p).powi(ni) - alpha * alpha) / (t * t);
    let lmax = (a + d) / 2.0 + (((a - d) / 2.0).powi(2) + c2).sqrt();
    if lmax == 0.0 {
        0.0
    } else {
        det / lmax
    }
}

/// Logarithmic negativity of a dense state across the first `m` qubits.
pub fn ln_dense(state: &DenseState, m: usize) -> Result<LnResult> {
    let n = state.n();
    if m == 0 || m >= n {
        return domain(format!("bipartition size {m} must lie in 1..{n}"));
    }
    let st = state.to_normalized()?;
    let pt = partial_transpose(&st, leading_mask(m))?;
    let eig = herm_eigenvalues(pt.matrix())?.eigenvalues;
    let negativity: f64 = eig.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    Ok(LnResult {
        epsilon_m: *eig.last().expect("nonempty spectrum"),
        negativity,
        e_ln: (2.0 * negativity).ln_1p() / LN_2,
        m,
    })
}

fn ln_mersenne(n: usize) -> f64 {
    // ln(2^(n−1) − 1)
    let k = (n - 1) as f64;
    k * LN_2 + (-(-k * LN_2).exp()).ln_1p()
}

/// n-concurrence of the normalized protected state (even n only).
pub fn mw_global_entanglement(gp: &GhzParams, pp: &ProtocolParams) -> Result<MwResult> {
    let n = gp.n();
    if n % 2 == 1 {
        return Err(Error::UnsupportedMeasure(format!("n-concurrence needs even n, got {n}")));
    }
    let (alpha, beta) = (gp.alpha().abs(), gp.beta().abs());
    if beta == 0.0 {
        return Ok(MwResult { c_n: 0.0, e_mw: 0.0, lambda: [0.0; 3] });
    }
    let nf = n as f64;
    let (sb, pb, rb) = (pp.s_bar(), pp.p_bar(), pp.r_bar());
    let lt = ln_transmissivity(alpha, beta, nf, pp);
    let lb = beta.ln();
    let ln_corner = lb + 0.5 * nf * (sb * rb * pb).ln();

    let leak = (ln_mersenne(n) + lb + lpow(sb * pp.p, 0.5 * nf)).exp();
    let bracket = alpha - leak;
    let c_n = if bracket > 0.0 { 2.0 * bracket * (ln_corner - lt).exp() } else { 0.0 };

    // x = β² s̄ⁿ pⁿ
    let x = (2.0 * lb + lpow(sb * pp.p, nf)).exp();
    let root = (alpha * alpha + x).sqrt();
    let scale = 2.0 * (ln_corner - lt);
    let l1 = (scale + 2.0 * (root + alpha).ln()).exp();
    let l2 = if x == 0.0 { 0.0 } else { (scale + 2.0 * (x.ln() - (root + alpha).ln())).exp() };
    let lj = (4.0 * lb + 2.0 * nf * sb.ln() + lpow(pp.p * pb * rb, nf) - 2.0 * lt).exp();
    Ok(MwResult { c_n, e_mw: c_n * c_n, lambda: [l1, l2, lj] })
}

fn psd_sqrt(rho: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eigen(rho)?;
    let v = eig.eigenvectors.expect("eigenvectors requested");
    let dim = rho.dim();
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| if l > 0.0 { l.sqrt() } else { 0.0 }).collect();
    let mut out = CMatrix::zeros(dim);
    for (k, &sq) in roots.iter().enumerate() {
        if sq == 0.0 {
            continue;
        }
        for i in 0..dim {
            let vik = v[(i, k)];
            if vik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..dim {
                out[(i, j)] += vik * v[(j, k)].conj() * sq;
            }
        }
    }
    Ok(out)
}

/// n-concurrence from a dense state: the square roots of the eigenvalues of
/// ρ·ρ̃ are obtained as singular values of √ρ·√ρ̃.
pub fn mw_dense(state: &DenseState) -> Result<MwResult> {
    let n = state.n();
    if n % 2 == 1 {
        return Err(Error::UnsupportedMeasure(format!("n-concurrence needs even n, got {n}")));
    }
    let st = state.to_normalized()?;
    let root = psd_sqrt(st.matrix())?;
    let root_flip = spin_flip(&root, n)?;
    let sv = singular_values(&root.matmul(&root_flip))?;
    let rest: f64 = sv[1..].iter().sum();
    let c_n = (sv[0] - rest).max(0.0);
    let lambda = [sv[0] * sv[0], sv.get(1).map_or(0.0, |x| x * x), sv.last().map_or(0.0, |x| x * x)];
    Ok(MwResult { c_n, e_mw: c_n * c_n, lambda })
}

/// Analytic damping strength at which the measure vanishes.
pub fn critical_p_closed_form(gp: &GhzParams, s: f64, kind: MeasureKind) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return domain(format!("weak strength must lie in [0, 1), got {s}"));
    }
    let n = gp.n();
    let (alpha, beta) = (gp.alpha().abs(), gp.beta().abs());
    if beta == 0.0 {
        return Ok(1.0);
    }
    let ln_ratio = match kind {
        MeasureKind::Ln => alpha.ln() - beta.ln(),
        MeasureKind::Mw => {
            if n % 2 == 1 {
                return Err(Error::UnsupportedMeasure(format!("n-concurrence needs even n, got {n}")));
            }
            alpha.ln() - beta.ln() - ln_mersenne(n)
        }
    };
    let pc = (2.0 / n as f64 * ln_ratio - (1.0 - s).ln()).exp();
    Ok(pc.min(1.0))
}
