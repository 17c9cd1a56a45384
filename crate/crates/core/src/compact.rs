//! O(n) representation of the GHZ-structured family
//!
//! ρ = a|0…0⟩⟨0…0| + Σ_x w[zeros(x)] |x⟩⟨x| + c(|0…0⟩⟨1…1| + h.c.)
//!
//! which is closed under local weak measurement, amplitude damping and
//! reversal. `diag_weight[k]` multiplies every basis projector with exactly
//! `k` zeros; the all-zeros pattern therefore appears twice (`a` and
//! `diag_weight[n]`) and the two are only summed when reading entries.

use crate::dense::{DenseState, MAX_DENSE_QUBITS};
use crate::error::{domain, Result};
use crate::linalg::{CMatrix, C64};
use crate::params::{GhzParams, ProtocolParams};

#[derive(Clone, Debug, PartialEq)]
pub struct CompactGhzState {
    pub n: usize,
    pub a: f64,
    pub diag_weight: Vec<f64>,
    pub c: f64,
    pub norm: f64,
}

/// ln k! for k = 0..=n.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// x^e with 0^0 = 1, computed as exp(e·ln x).
fn ln_pow(ln_x: f64, e: usize) -> f64 {
    if e == 0 {
        0.0
    } else {
        ln_x * e as f64
    }
}

impl CompactGhzState {
    pub fn from_gghz(params: &GhzParams) -> Self {
        let n = params.n();
        let (alpha, beta) = (params.alpha(), params.beta());
        let mut diag_weight = vec![0.0; n + 1];
        diag_weight[0] = beta * beta;
        Self { n, a: alpha * alpha, diag_weight, c: alpha * beta, norm: 1.0 }
    }

    /// a + Σ_k C(n,k) w[k].
    pub fn trace(&self) -> f64 {
        let lf = ln_factorials(self.n);
        let mut t = self.a;
        for (k, &w) in self.diag_weight.iter().enumerate() {
            if w != 0.0 {
                t += (lf[self.n] - lf[k] - lf[self.n - k] + w.ln()).exp();
            }
        }
        t
    }

    /// Diagonal entry of a basis state with `zeros` zero bits.
    pub fn diagonal_entry(&self, zeros: usize) -> f64 {
        let w = self.diag_weight[zeros];
        if zeros == self.n {
            w + self.a
        } else {
            w
        }
    }

    /// Null-result weak measurement on every qubit.
    pub fn apply_weak(&self, s: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&s) {
            return domain(format!("weak strength must lie in [0, 1), got {s}"));
        }
        if s == 0.0 {
            return Ok(self.clone());
        }
        let ln_sb = (1.0 - s).ln();
        let n = self.n;
        let diag_weight = self.diag_weight.iter().enumerate().map(|(k, &w)| w * ln_pow(ln_sb, n - k).exp()).collect();
        let mut out = Self { n, a: self.a, diag_weight, c: self.c * (0.5 * n as f64 * ln_sb).exp(), norm: 0.0 };
        out.norm = out.trace();
        Ok(out)
    }

    /// Amplitude damping on every qubit (trace preserving).
    pub fn apply_damping(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("damping p must lie in [0, 1], got {p}"));
        }
        let n = self.n;
        let lf = ln_factorials(n);
        let (ln_p, ln_pb) = (p.ln(), (1.0 - p).ln());
        let mut diag_weight = vec![0.0; n + 1];
        for (k, &w) in self.diag_weight.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            // a pattern with k zeros feeds every superset pattern of its zeros
            for (kk, slot) in diag_weight.iter_mut().enumerate().skip(k) {
                let ln_term = lf[kk] - lf[k] - lf[kk - k] + ln_pow(ln_p, kk - k) + ln_pow(ln_pb, n - kk);
                *slot += w * ln_term.exp();
            }
        }
        let c = if p == 1.0 { 0.0 } else { self.c * (0.5 * n as f64 * ln_pb).exp() };
        Ok(Self { n, a: self.a, diag_weight, c, norm: self.norm })
    }

    /// Null-result reversal measurement on every qubit.
    pub fn apply_reversal(&self, r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return domain(format!("reversal strength must lie in [0, 1), got {r}"));
        }
        if r == 0.0 {
            return Ok(self.clone());
        }
        let ln_rb = (1.0 - r).ln();
        let n = self.n;
        let diag_weight = self.diag_weight.iter().enumerate().map(|(k, &w)| w * ln_pow(ln_rb, k).exp()).collect();
        let mut out = Self {
            n,
            a: self.a * ln_pow(ln_rb, n).exp(),
            diag_weight,
            c: self.c * (0.5 * n as f64 * ln_rb).exp(),
            norm: 0.0,
        };
        out.norm = out.trace();
        Ok(out)
    }

    /// Weak → damping → reversal on a fresh gGHZ state.
    pub fn protocol(gp: &GhzParams, pp: &ProtocolParams) -> Result<Self> {
        Self::from_gghz(gp).apply_weak(pp.s)?.apply_damping(pp.p)?.apply_reversal(pp.r)
    }

    pub fn to_dense(&self) -> Result<DenseState> {
        let n = self.n;
        if n > MAX_DENSE_QUBITS {
            return domain(format!("cannot expand {n} qubits densely"));
        }
        let dim = 1usize << n;
        let mut m = CMatrix::zeros(dim);
        for x in 0..dim {
            let zeros = n - x.count_ones() as usize;
            m[(x, x)] = C64::new(self.diagonal_entry(zeros), 0.0);
        }
        m[(0, dim - 1)] += C64::new(self.c, 0.0);
        m[(dim - 1, 0)] += C64::new(self.c, 0.0);
        let normalized = (self.norm - 1.0).abs() <= 1e-10;
        DenseState::new(n, m, normalized)
    }

    /// Copy scaled to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > 0.0) {
            return domain("cannot normalize a state of zero trace");
        }
        Ok(Self {
            n: self.n,
            a: self.a / t,
            diag_weight: self.diag_weight.iter().map(|w| w / t).collect(),
            c: self.c / t,
            norm: 1.0,
        })
    }
}
