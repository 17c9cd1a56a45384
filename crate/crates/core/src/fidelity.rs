//! Average fidelities of GHZ-assisted teleportation to n−1 receivers and of
//! quantum information splitting, as closed forms and dense simulations.
//!
//! Register layout of the dense simulations: qubit 0 is the unknown qubit,
//! qubit 1 is the sender's share of the resource and qubits 2..=n belong to
//! the receivers B₁..B_{n−1}. In the splitting protocol the last qubit is the
//! designated receiver.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::dense::{protocol_state, DenseState, MAX_DENSE_QUBITS};
use crate::error::{domain, Result};
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::optimize::{maximize_over_r, R_TOLERANCE};
use crate::params::{GhzParams, ProtocolParams};

/// Best average fidelity achievable without shared entanglement.
pub const CLASSICAL_FIDELITY: f64 = 2.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnknownQubit {
    pub a: C64,
    pub b: C64,
}

impl UnknownQubit {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return domain(format!("unknown qubit is not normalized (norm² = {norm})"));
        }
        Ok(Self { a, b })
    }

    /// The six Pauli eigenstates. Equal-weight averages over them reproduce
    /// Haar averages of polynomials of degree ≤ 3 in (a, b) and their conjugates.
    pub fn design() -> [Self; 6] {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let ih = C64::new(0.0, FRAC_1_SQRT_2);
        [
            Self { a: ONE, b: ZERO },
            Self { a: ZERO, b: ONE },
            Self { a: h, b: h },
            Self { a: h, b: -h },
            Self { a: h, b: ih },
            Self { a: h, b: -ih },
        ]
    }

    fn amplitudes(&self) -> [C64; 2] {
        [self.a, self.b]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [BellLabel::PhiPlus, BellLabel::PhiMinus, BellLabel::PsiPlus, BellLabel::PsiMinus];

    pub fn vector(self) -> [C64; 4] {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            BellLabel::PhiPlus => [h, ZERO, ZERO, h],
            BellLabel::PhiMinus => [h, ZERO, ZERO, -h],
            BellLabel::PsiPlus => [ZERO, h, h, ZERO],
            BellLabel::PsiMinus => [ZERO, h, -h, ZERO],
        }
    }

    fn projector(self) -> CMatrix {
        let v = self.vector();
        CMatrix::outer(&v, &v)
    }
}

/// Receivers' correction: X on every receiver and/or Z on the first one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Correction {
    pub flip_all: bool,
    pub phase: bool,
}

impl Correction {
    const ALL: [Correction; 4] = [
        Correction { flip_all: false, phase: false },
        Correction { flip_all: false, phase: true },
        Correction { flip_all: true, phase: false },
        Correction { flip_all: true, phase: true },
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchOutcome {
    pub label: BellLabel,
    pub probability: f64,
    /// Receivers' normalized state before correction.
    pub bobs_state: DenseState,
    pub correction: Correction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FidelityKind {
    Tel,
    Is,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityReport {
    pub kind: FidelityKind,
    pub f_avg: f64,
    pub r_used: f64,
    pub s_used: f64,
    pub p_used: f64,
    pub n: usize,
    pub above_classical: bool,
}

fn check_closed(n: usize, s: f64, p: f64, r: f64) -> Result<()> {
    if n < 3 {
        return domain(format!("fidelity needs at least 3 qubits, got {n}"));
    }
    ProtocolParams::new(s, p, r, 1).map(|_| ())
}

/// 2T for the symmetric resource: r̄ⁿ + s̄ⁿ(1 − pr)ⁿ.
fn twice_transmissivity(n: i32, s: f64, p: f64, r: f64) -> f64 {
    (1.0 - r).powi(n) + (1.0 - s).powi(n) * (1.0 - p * r).powi(n)
}

/// Average teleportation fidelity with the protected symmetric GHZ resource.
pub fn fidelity_tel_closed(n: usize, s: f64, p: f64, r: f64) -> Result<f64> {
    check_closed(n, s, p, r)?;
    let ni = n as i32;
    let (sb, pb, rb) = (1.0 - s, 1.0 - p, 1.0 - r);
    let sn = sb.powi(ni);
    let bracket = 2.0 * rb.powi(ni) * (1.0 + p.powi(ni) * sn)
        + 2.0 * pb.powi(ni) * sn
        + sn * (p * rb * pb.powi(ni - 1) + pb * (p * rb).powi(ni - 1))
        + 2.0 * (rb * pb * sb).sqrt().powi(ni);
    Ok(bracket / (3.0 * twice_transmissivity(ni, s, p, r)))
}

/// Average fidelity of quantum information splitting.
pub fn fidelity_is_closed(n: usize, s: f64, p: f64, r: f64) -> Result<f64> {
    check_closed(n, s, p, r)?;
    let ni = n as i32;
    let (sb, pb, rb) = (1.0 - s, 1.0 - p, 1.0 - r);
    let bracket = rb.powi(ni)
        + sb.powi(ni) * (pb + p * rb).powi(ni - 2) * (pb * pb + p * p * rb * rb + p * pb * rb)
        + (rb * pb * sb).sqrt().powi(ni);
    Ok(2.0 * bracket / (3.0 * twice_transmissivity(ni, s, p, r)))
}

pub fn fidelity_closed(kind: FidelityKind, n: usize, s: f64, p: f64, r: f64) -> Result<f64> {
    match kind {
        FidelityKind::Tel => fidelity_tel_closed(n, s, p, r),
        FidelityKind::Is => fidelity_is_closed(n, s, p, r),
    }
}

/// Bell-outcome probabilities in the order of [`BellLabel::ALL`].
pub fn branch_probabilities_closed(n: usize, pp: &ProtocolParams, psi0: &UnknownQubit) -> [f64; 4] {
    let ni = n as i32;
    let (sb, pb, rb, p) = (pp.s_bar(), pp.p_bar(), pp.r_bar(), pp.p);
    let (a2, b2) = (psi0.a.norm_sqr(), psi0.b.norm_sqr());
    let four_t = 2.0 * twice_transmissivity(ni, pp.s, p, pp.r);
    let tail = sb.powi(ni) * (p * rb + pb).powi(ni - 1);
    let p1 = (a2 * rb.powi(ni) + (a2 * p * rb + b2 * pb) * tail) / four_t;
    let p2 = (b2 * rb.powi(ni) + (b2 * p * rb + a2 * pb) * tail) / four_t;
    [p1, p1, p2, p2]
}

fn check_dense(gp: &GhzParams) -> Result<()> {
    let n = gp.n();
    if n < 3 {
        return domain(format!("protocol needs at least 3 qubits, got {n}"));
    }
    if n + 1 > MAX_DENSE_QUBITS.min(8) {
        return domain(format!("dense protocol simulation supports n ≤ 7, got {n}"));
    }
    Ok(())
}

/// Unnormalized receivers' state for each Bell outcome.
fn bell_branches(resource: &DenseState, psi0: &UnknownQubit) -> Result<Vec<DenseState>> {
    let joint = DenseState::pure(1, &psi0.amplitudes())?.tensor(resource)?;
    BellLabel::ALL
        .iter()
        .map(|label| joint.apply_operator(&label.projector(), &[0, 1])?.partial_trace(&[0, 1]))
        .collect()
}

/// ⟨w|σ|w⟩ for w supported on |0…0⟩ and |1…1⟩.
fn corner_overlap(sigma: &CMatrix, w0: C64, w1: C64) -> f64 {
    let last = sigma.dim() - 1;
    let v = w0.conj() * sigma[(0, 0)] * w0
        + w0.conj() * sigma[(0, last)] * w1
        + w1.conj() * sigma[(last, 0)] * w0
        + w1.conj() * sigma[(last, last)] * w1;
    v.re
}

/// Fidelity of the corrected branch with a|0…0⟩ + b|1…1⟩ (unnormalized).
fn corrected_overlap(sigma: &CMatrix, psi0: &UnknownQubit, u: Correction) -> f64 {
    // U†ψ_f with U = Z^phase X^flip
    let b = if u.phase { -psi0.b } else { psi0.b };
    if u.flip_all {
        corner_overlap(sigma, b, psi0.a)
    } else {
        corner_overlap(sigma, psi0.a, b)
    }
}

/// Teleportation of one qubit to the n−1 receivers acting jointly. Returns
/// the branches for `psi0` and the Haar-averaged fidelity.
pub fn simulate_teleportation_dense(
    gp: &GhzParams,
    pp: &ProtocolParams,
    psi0: &UnknownQubit,
) -> Result<(Vec<BranchOutcome>, f64)> {
    check_dense(gp)?;
    let resource = protocol_state(gp, pp)?.to_normalized()?;

    let mut value = [[0.0; 4]; 4];
    let design = UnknownQubit::design();
    for point in &design {
        for (j, sigma) in bell_branches(&resource, point)?.iter().enumerate() {
            for (u, slot) in Correction::ALL.iter().zip(value[j].iter_mut()) {
                *slot += corrected_overlap(sigma.matrix(), point, *u) / design.len() as f64;
            }
        }
    }
    let mut f_avg = 0.0;
    let mut chosen = [Correction::ALL[0]; 4];
    for j in 0..4 {
        let mut best = 0;
        for u in 1..4 {
            if value[j][u] > value[j][best] {
                best = u;
            }
        }
        chosen[j] = Correction::ALL[best];
        f_avg += value[j][best];
    }

    let branches = bell_branches(&resource, psi0)?
        .into_iter()
        .zip(BellLabel::ALL)
        .zip(chosen)
        .map(|((sigma, label), correction)| {
            let probability = sigma.trace();
            let bobs_state =
                if probability > crate::dense::ZERO_BRANCH_PROBABILITY { sigma.to_normalized()? } else { sigma };
            Ok(BranchOutcome { label, probability, bobs_state, correction })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((branches, f_avg))
}

fn pauli(k: usize) -> [[C64; 2]; 2] {
    match k {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ONE, ZERO], [ZERO, -ONE]],
        // XZ
        _ => [[ZERO, -ONE], [ONE, ZERO]],
    }
}

/// Receiver's unnormalized state after the assistants (all receivers but
/// the last) obtain σx outcomes `k` (bit set = minus eigenstate).
fn receiver_state(sigma: &CMatrix, assistants: usize, k: usize) -> [[C64; 2]; 2] {
    let amp = 0.5f64.powi(assistants as i32);
    let mut out = [[ZERO; 2]; 2];
    let count = 1usize << assistants;
    for x in 0..count {
        let sx = if (x & k).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        for y in 0..count {
            let sy = if (y & k).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            for (a, row) in out.iter_mut().enumerate() {
                for (b, slot) in row.iter_mut().enumerate() {
                    let v = sigma[((x << 1) | a, (y << 1) | b)];
                    if v != ZERO {
                        *slot += v * (sx * sy * amp);
                    }
                }
            }
        }
    }
    out
}

fn qubit_overlap(tau: &[[C64; 2]; 2], u: &[[C64; 2]; 2], psi0: &UnknownQubit) -> f64 {
    // w = U†ψ₀
    let psi = psi0.amplitudes();
    let w = [u[0][0].conj() * psi[0] + u[1][0].conj() * psi[1], u[0][1].conj() * psi[0] + u[1][1].conj() * psi[1]];
    let mut acc = ZERO;
    for a in 0..2 {
        for b in 0..2 {
            acc += w[a].conj() * tau[a][b] * w[b];
        }
    }
    acc.re
}

/// Quantum information splitting: the first n−2 receivers measure σx and the
/// last one applies the best Pauli correction per joint outcome. Returns the
/// Haar-averaged fidelity.
pub fn simulate_splitting_dense(gp: &GhzParams, pp: &ProtocolParams) -> Result<f64> {
    check_dense(gp)?;
    let resource = protocol_state(gp, pp)?.to_normalized()?;
    let assistants = gp.n() - 2;
    let outcomes = 1usize << assistants;
    let design = UnknownQubit::design();
    let weight = 1.0 / design.len() as f64;

    let mut value = vec![[0.0; 4]; 4 * outcomes];
    for point in &design {
        for (j, sigma) in bell_branches(&resource, point)?.iter().enumerate() {
            for k in 0..outcomes {
                let tau = receiver_state(sigma.matrix(), assistants, k);
                for (u, slot) in value[j * outcomes + k].iter_mut().enumerate() {
                    *slot += weight * qubit_overlap(&tau, &pauli(u), point);
                }
            }
        }
    }
    Ok(value.iter().map(|v| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).sum())
}

/// Fidelity maximized over the reversal strength.
pub fn optimized_fidelity(kind: FidelityKind, n: usize, s: f64, p: f64) -> Result<FidelityReport> {
    check_closed(n, s, p, 0.0)?;
    let opt = maximize_over_r(|r| fidelity_closed(kind, n, s, p, r), R_TOLERANCE)?;
    Ok(FidelityReport {
        kind,
        f_avg: opt.value,
        r_used: opt.r,
        s_used: s,
        p_used: p,
        n,
        above_classical: opt.value >= CLASSICAL_FIDELITY,
    })
}
