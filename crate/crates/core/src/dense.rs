//! Exact density-matrix engine.
//!
//! Basis convention: qubit 0 is the most significant bit of the
//! computational-basis index, so for n = 3 the index of |q0 q1 q2⟩ is
//! 4·q0 + 2·q1 + q2. Bipartition masks are indexed by qubit, not by bit:
//! bit `q` of a mask selects qubit `q`.

use crate::error::{domain, Error, Result};
use crate::linalg::{herm_eigenvalues, CMatrix, C64, ONE, ZERO};
use crate::params::{GhzParams, ProtocolParams};

/// Largest register the dense engine accepts.
pub const MAX_DENSE_QUBITS: usize = 10;

/// Below this a post-selected branch is treated as never occurring.
pub const ZERO_BRANCH_PROBABILITY: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    matrix: CMatrix,
    normalized: bool,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return domain(format!("dense engine supports 1..={MAX_DENSE_QUBITS} qubits, got {n}"));
    }
    Ok(())
}

/// Bit of the basis index that holds qubit `q`.
#[inline]
fn qubit_bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Maps sub-register indices `t` (first listed qubit most significant) to
/// the corresponding bits of the full basis index.
fn scatter_table(n: usize, qubits: &[usize]) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|t| {
            qubits
                .iter()
                .enumerate()
                .filter(|(pos, _)| t & (1 << (k - 1 - pos)) != 0)
                .map(|(_, &q)| qubit_bit(n, q))
                .fold(0, |acc, b| acc | b)
        })
        .collect()
}

fn gather(index: usize, scatter: &[usize]) -> usize {
    // inverse of the scatter table restricted to one index
    let k = scatter.len().trailing_zeros() as usize;
    let mut t = 0;
    for pos in 0..k {
        let bit = scatter[1 << (k - 1 - pos)];
        if index & bit != 0 {
            t |= 1 << (k - 1 - pos);
        }
    }
    t
}

impl DenseState {
    pub fn new(n: usize, matrix: CMatrix, normalized: bool) -> Result<Self> {
        check_size(n)?;
        if matrix.dim() != 1 << n {
            return domain(format!("matrix dimension {} does not match {n} qubits", matrix.dim()));
        }
        Ok(Self { n, matrix, normalized })
    }

    /// Projector onto a pure state vector (normalized by the caller).
    pub fn pure(n: usize, amplitudes: &[C64]) -> Result<Self> {
        check_size(n)?;
        if amplitudes.len() != 1 << n {
            return domain("amplitude vector length does not match qubit count");
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return domain(format!("pure state is not normalized (norm² = {norm})"));
        }
        Ok(Self { n, matrix: CMatrix::outer(amplitudes, amplitudes), normalized: true })
    }

    /// Computational-basis product state given as a bit string (qubit 0 first).
    pub fn basis(bits: &[u8]) -> Result<Self> {
        let n = bits.len();
        check_size(n)?;
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b != 0));
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Self::pure(n, &amps)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Unit-trace copy; fails for a (numerically) vanishing trace.
    pub fn to_normalized(&self) -> Result<Self> {
        if self.normalized {
            return Ok(self.clone());
        }
        let tr = self.trace();
        if tr <= ZERO_BRANCH_PROBABILITY {
            return domain(format!("cannot normalize a state of trace {tr:e}"));
        }
        Ok(Self { n: self.n, matrix: self.matrix.scale(1.0 / tr), normalized: true })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n + other.n;
        check_size(n)?;
        Ok(Self { n, matrix: self.matrix.kron(&other.matrix), normalized: self.normalized && other.normalized })
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n {
                return domain(format!("qubit index {q} out of range for {} qubits", self.n));
            }
            if qubits[..i].contains(&q) {
                return domain(format!("qubit {q} listed twice"));
            }
        }
        Ok(())
    }

    /// O ρ O† for an operator O acting on `qubits` (first listed qubit is
    /// the most significant index of O). The result is flagged unnormalized.
    pub fn apply_operator(&self, op: &CMatrix, qubits: &[usize]) -> Result<Self> {
        self.check_qubits(qubits)?;
        if op.dim() != 1 << qubits.len() {
            return domain("operator dimension does not match the number of target qubits");
        }
        let dim = 1 << self.n;
        let scatter = scatter_table(self.n, qubits);
        let mask: usize = scatter.iter().fold(0, |a, &b| a | b);
        let k = scatter.len();

        // left product: (Oρ)[i][j] = Σ_t O[sub(i)][t] ρ[base(i)|scatter(t)][j]
        let rho = &self.matrix;
        let mut left = CMatrix::zeros(dim);
        for i in 0..dim {
            let base = i & !mask;
            let si = gather(i, &scatter);
            for t in 0..k {
                let o = op[(si, t)];
                if o == ZERO {
                    continue;
                }
                let src = base | scatter[t];
                for j in 0..dim {
                    let v = rho[(src, j)];
                    if v != ZERO {
                        left[(i, j)] += o * v;
                    }
                }
            }
        }
        // right product with O†: out[i][j] = Σ_t left[i][base(j)|scatter(t)] conj(O[sub(j)][t])
        let mut out = CMatrix::zeros(dim);
        for j in 0..dim {
            let base = j & !mask;
            let sj = gather(j, &scatter);
            for t in 0..k {
                let o = op[(sj, t)].conj();
                if o == ZERO {
                    continue;
                }
                let src = base | scatter[t];
                for i in 0..dim {
                    let v = left[(i, src)];
                    if v != ZERO {
                        out[(i, j)] += v * o;
                    }
                }
            }
        }
        Ok(Self { n: self.n, matrix: out, normalized: false })
    }

    /// Traces out `traced` and keeps the remaining qubits in their order.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<Self> {
        self.check_qubits(traced)?;
        let kept: Vec<usize> = (0..self.n).filter(|q| !traced.contains(q)).collect();
        if kept.is_empty() {
            return domain("cannot trace out every qubit");
        }
        let keep_scatter = scatter_table(self.n, &kept);
        let trace_scatter = scatter_table(self.n, traced);
        let dk = keep_scatter.len();
        let mut out = CMatrix::zeros(dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = ZERO;
                for &e in &trace_scatter {
                    acc += self.matrix[(keep_scatter[a] | e, keep_scatter[b] | e)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(Self { n: kept.len(), matrix: out, normalized: self.normalized })
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn overlap_with_pure(&self, psi: &[C64]) -> f64 {
        self.matrix.expectation(psi)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = herm_eigenvalues(&self.matrix)?;
        Ok(*eig.eigenvalues.last().expect("nonempty spectrum"))
    }
}

/// Which family a Kraus pair belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    Damping,
    Weak,
    Reversal,
}

/// Restricts a map to a single Kraus operator (post-selection).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrausSelector {
    Op0,
    Op1,
}

/// Two single-qubit Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausPair {
    pub op0: CMatrix,
    pub op1: CMatrix,
    pub label: ChannelKind,
}

fn real2(a: f64, b: f64, c: f64, d: f64) -> CMatrix {
    CMatrix::from_rows(&[vec![C64::new(a, 0.0), C64::new(b, 0.0)], vec![C64::new(c, 0.0), C64::new(d, 0.0)]])
}

impl KrausPair {
    /// Amplitude damping: E0 = |0⟩⟨0| + √(1−p)|1⟩⟨1|, E1 = √p|0⟩⟨1|.
    pub fn damping(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("damping p must lie in [0, 1], got {p}"));
        }
        Ok(Self {
            op0: real2(1.0, 0.0, 0.0, (1.0 - p).sqrt()),
            op1: real2(0.0, p.sqrt(), 0.0, 0.0),
            label: ChannelKind::Damping,
        })
    }

    /// Weak measurement: op0 = √s|1⟩⟨1| (discarded), op1 = |0⟩⟨0| + √(1−s)|1⟩⟨1| (kept).
    pub fn weak(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return domain(format!("weak strength must lie in [0, 1], got {s}"));
        }
        Ok(Self {
            op0: real2(0.0, 0.0, 0.0, s.sqrt()),
            op1: real2(1.0, 0.0, 0.0, (1.0 - s).sqrt()),
            label: ChannelKind::Weak,
        })
    }

    /// Reversal: op0 = √(1−r)|0⟩⟨0| + |1⟩⟨1| (kept), op1 = √r|0⟩⟨0| (discarded).
    pub fn reversal(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return domain(format!("reversal strength must lie in [0, 1], got {r}"));
        }
        Ok(Self {
            op0: real2((1.0 - r).sqrt(), 0.0, 0.0, 1.0),
            op1: real2(r.sqrt(), 0.0, 0.0, 0.0),
            label: ChannelKind::Reversal,
        })
    }

    /// The post-selected (null-result) outcome of a weak or reversal measurement.
    pub fn kept_outcome(&self) -> Option<KrausSelector> {
        match self.label {
            ChannelKind::Damping => None,
            ChannelKind::Weak => Some(KrausSelector::Op1),
            ChannelKind::Reversal => Some(KrausSelector::Op0),
        }
    }

    /// max |op0†op0 + op1†op1 − 1|.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self.op0.adjoint().matmul(&self.op0).add(&self.op1.adjoint().matmul(&self.op1));
        sum.max_abs_diff(&CMatrix::identity(2))
    }

    fn selected(&self, selector: Option<KrausSelector>) -> Vec<&CMatrix> {
        match selector {
            None => vec![&self.op0, &self.op1],
            Some(KrausSelector::Op0) => vec![&self.op0],
            Some(KrausSelector::Op1) => vec![&self.op1],
        }
    }
}

/// Applies the single-qubit map to `qubit`; with a selector only that Kraus
/// operator is applied and the result is left unnormalized.
pub fn apply_single_qubit_map(
    state: &DenseState,
    qubit: usize,
    kraus: &KrausPair,
    selector: Option<KrausSelector>,
) -> Result<DenseState> {
    if qubit >= state.n {
        return domain(format!("qubit index {qubit} out of range for {} qubits", state.n));
    }
    let mut acc: Option<CMatrix> = None;
    for op in kraus.selected(selector) {
        let term = state.apply_operator(op, &[qubit])?.matrix;
        acc = Some(match acc {
            None => term,
            Some(m) => m.add(&term),
        });
    }
    Ok(DenseState {
        n: state.n,
        matrix: acc.expect("at least one Kraus operator"),
        normalized: state.normalized && selector.is_none(),
    })
}

/// The same local map on every qubit.
pub fn apply_channel_all_qubits(
    state: &DenseState,
    kraus: &KrausPair,
    selector: Option<KrausSelector>,
) -> Result<DenseState> {
    let mut out = state.clone();
    for q in 0..state.n {
        out = apply_single_qubit_map(&out, q, kraus, selector)?;
    }
    Ok(out)
}

/// |ψ⟩⟨ψ| for ψ = α|0…0⟩ + β|1…1⟩.
pub fn make_gghz(params: &GhzParams) -> Result<DenseState> {
    let n = params.n();
    check_size(n)?;
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = C64::new(params.alpha(), 0.0);
    amps[(1 << n) - 1] = C64::new(params.beta(), 0.0);
    DenseState::pure(n, &amps)
}

/// Weak measurement → damping → reversal on a fresh gGHZ state, kept
/// unnormalized so that the trace is the overall success probability.
pub fn protocol_state(gp: &GhzParams, pp: &ProtocolParams) -> Result<DenseState> {
    let weak = KrausPair::weak(pp.s)?;
    let damp = KrausPair::damping(pp.p)?;
    let rev = KrausPair::reversal(pp.r)?;
    let mut state = make_gghz(gp)?;
    state = apply_channel_all_qubits(&state, &weak, weak.kept_outcome())?;
    state = apply_channel_all_qubits(&state, &damp, None)?;
    apply_channel_all_qubits(&state, &rev, rev.kept_outcome())
}

/// Mask selecting the first `m` qubits.
pub fn leading_mask(m: usize) -> u64 {
    (1u64 << m) - 1
}

fn basis_mask(n: usize, mask: u64) -> Result<usize> {
    let full = (1u64 << n) - 1;
    if mask == 0 || mask & full == full || mask & !full != 0 {
        return domain(format!("partition mask {mask:#b} must select a nonempty proper subset of {n} qubits"));
    }
    Ok((0..n).filter(|q| mask & (1 << q) != 0).fold(0, |acc, q| acc | qubit_bit(n, q)))
}

/// Partial transpose on the qubits selected by `mask`.
pub fn partial_transpose(state: &DenseState, mask: u64) -> Result<DenseState> {
    let bits = basis_mask(state.n, mask)?;
    let dim = 1 << state.n;
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = state.matrix[(i, j)];
            if v == ZERO {
                continue;
            }
            let ti = (i & !bits) | (j & bits);
            let tj = (j & !bits) | (i & bits);
            out[(ti, tj)] = v;
        }
    }
    Ok(DenseState { n: state.n, matrix: out, normalized: state.normalized })
}

/// Sum of |negative eigenvalues| of the partial transpose.
pub fn negativity_dense(state: &DenseState, mask: u64) -> Result<f64> {
    if !state.normalized {
        return domain("negativity requires a normalized state");
    }
    let pt = partial_transpose(state, mask)?;
    let eig = herm_eigenvalues(&pt.matrix)?;
    Ok(eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum())
}

/// Projects `qubits` with `projector`; returns the renormalized state and
/// the branch probability. Branches below [`ZERO_BRANCH_PROBABILITY`] are
/// returned unnormalized with the flag cleared.
pub fn project_and_renormalize(state: &DenseState, projector: &CMatrix, qubits: &[usize]) -> Result<(DenseState, f64)> {
    let p2 = projector.matmul(projector);
    if projector.hermiticity_defect() > 1e-10 || p2.max_abs_diff(projector) > 1e-10 {
        return domain("operator is not an orthogonal projector");
    }
    let projected = state.apply_operator(projector, qubits)?;
    let base = if state.normalized { 1.0 } else { state.trace() };
    let tr = projected.trace();
    let probability = if base > 0.0 { tr / base } else { 0.0 };
    if probability > ZERO_BRANCH_PROBABILITY {
        let matrix = projected.matrix.scale(1.0 / tr);
        Ok((DenseState { n: state.n, matrix, normalized: true }, probability))
    } else {
        Ok((DenseState { normalized: false, ..projected }, probability))
    }
}

/// σ_y^⊗n ρ* σ_y^⊗n, computed elementwise:
/// ρ̃[x][y] = (−1)^{|x|+|y|} ρ*[x̄][ȳ].
pub fn spin_flip(matrix: &CMatrix, n: usize) -> Result<CMatrix> {
    let dim = 1usize << n;
    if matrix.dim() != dim {
        return Err(Error::Domain("spin flip: dimension mismatch".into()));
    }
    let full = dim - 1;
    let mut out = CMatrix::zeros(dim);
    for x in 0..dim {
        for y in 0..dim {
            let v = matrix[(full ^ x, full ^ y)];
            if v == ZERO {
                continue;
            }
            let sign = if (x.count_ones() + y.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            out[(x, y)] = v.conj() * sign;
        }
    }
    Ok(out)
}
