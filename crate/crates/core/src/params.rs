use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Initial state α|0…0⟩ + β|1…1⟩ with α = cos(θ/2), β = sin(θ/2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhzParams {
    theta: f64,
    n: usize,
}

impl GhzParams {
    pub fn new(theta: f64, n: usize) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return domain(format!("theta must lie in [0, π], got {theta}"));
        }
        if n < 2 {
            return domain(format!("GHZ state needs at least 2 qubits, got {n}"));
        }
        Ok(Self { theta, n })
    }

    /// The symmetric GHZ state (θ = π/2).
    pub fn symmetric(n: usize) -> Result<Self> {
        Self::new(PI / 2.0, n)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        if self.theta == PI {
            0.0
        } else {
            (self.theta / 2.0).cos()
        }
    }

    pub fn beta(&self) -> f64 {
        (self.theta / 2.0).sin()
    }
}

/// Weak strength `s`, damping `p`, reversal strength `r` and the size `m`
/// of the transposed block of the bipartition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub m: usize,
}

impl ProtocolParams {
    pub fn new(s: f64, p: f64, r: f64, m: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&s) {
            return domain(format!("weak strength s must lie in [0, 1), got {s}"));
        }
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("damping p must lie in [0, 1], got {p}"));
        }
        if !(0.0..1.0).contains(&r) {
            return domain(format!("reversal strength r must lie in [0, 1), got {r}"));
        }
        if m == 0 {
            return domain("bipartition size m must be at least 1");
        }
        Ok(Self { s, p, r, m })
    }

    /// No weak measurement and no reversal.
    pub fn unprotected(p: f64, m: usize) -> Result<Self> {
        Self::new(0.0, p, 0.0, m)
    }

    pub fn with_r(self, r: f64) -> Result<Self> {
        Self::new(self.s, self.p, r, self.m)
    }

    pub fn with_p(self, p: f64) -> Result<Self> {
        Self::new(self.s, p, self.r, self.m)
    }

    /// Checks `1 ≤ m ≤ n − 1`.
    pub fn check_bipartition(&self, n: usize) -> Result<()> {
        if self.m == 0 || self.m >= n {
            return domain(format!("bipartition size m = {} must lie in 1..={}", self.m, n - 1));
        }
        Ok(())
    }

    pub fn s_bar(&self) -> f64 {
        1.0 - self.s
    }

    pub fn p_bar(&self) -> f64 {
        1.0 - self.p
    }

    pub fn r_bar(&self) -> f64 {
        1.0 - self.r
    }
}

/// Overall success probability of weak measurement followed by reversal,
/// α² r̄ⁿ + β² s̄ⁿ (1 − p r)ⁿ.
pub fn transmissivity(gp: &GhzParams, pp: &ProtocolParams) -> f64 {
    let n = gp.n() as i32;
    let (a2, b2) = (gp.alpha().powi(2), gp.beta().powi(2));
    a2 * pp.r_bar().powi(n) + b2 * pp.s_bar().powi(n) * (1.0 - pp.p * pp.r).powi(n)
}
