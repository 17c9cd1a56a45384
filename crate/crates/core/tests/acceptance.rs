//! End-to-end acceptance checks. Each test prints one PASS/FAIL line on
//! stdout (written directly so that it survives output capture).

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use wmr_core::dense::protocol_state;
use wmr_core::fidelity::{
    fidelity_closed, fidelity_is_closed, fidelity_tel_closed, optimized_fidelity, simulate_splitting_dense,
    simulate_teleportation_dense, FidelityKind, UnknownQubit, CLASSICAL_FIDELITY,
};
use wmr_core::measures::{
    critical_p_closed_form, ln_block_eigenvalue, ln_dense, mw_dense, mw_global_entanglement,
    protected_block_eigenvalue, MeasureKind,
};
use wmr_core::optimize::{find_critical_p, Objective, DEATH_THRESHOLD};
use wmr_core::{transmissivity, CompactGhzState, GhzParams, ProtocolParams};

struct Counting;

static LARGEST: AtomicUsize = AtomicUsize::new(0);
static COUNT: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static TRACK: Cell<bool> = const { Cell::new(false) };
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        if TRACK.with(|t| t.get()) {
            COUNT.fetch_add(1, Ordering::Relaxed);
            LARGEST.fetch_max(layout.size(), Ordering::Relaxed);
        }
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        if TRACK.with(|t| t.get()) {
            COUNT.fetch_add(1, Ordering::Relaxed);
            LARGEST.fetch_max(new_size, Ordering::Relaxed);
        }
        System.realloc(ptr, layout, new_size)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn report(id: u32, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance] {tag} criterion {id:>2}: {detail}");
    let _ = out.flush();
}

fn thetas() -> [f64; 4] {
    [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0]
}

fn p_grid() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

/// (n, θ, s, p, r) for the oracle grid.
fn oracle_grid(ns: &[usize]) -> Vec<(usize, f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for &n in ns {
        for theta in thetas() {
            for s in [0.0, 0.3, 0.6] {
                for &p in &p_grid() {
                    for r in [0.0, 0.2, 0.5] {
                        out.push((n, theta, s, p, r));
                    }
                }
            }
        }
    }
    out
}

#[test]
fn ln_oracle_equivalence() {
    let start = Instant::now();
    let grid = oracle_grid(&[3, 4, 5, 6, 7, 8]);
    let worst = grid
        .par_iter()
        .map(|&(n, theta, s, p, r)| {
            let gp = GhzParams::new(theta, n).unwrap();
            let state = protocol_state(&gp, &ProtocolParams::new(s, p, r, 1).unwrap()).unwrap();
            (1..n)
                .map(|m| {
                    let closed = ln_block_eigenvalue(&gp, &ProtocolParams::new(s, p, r, m).unwrap()).unwrap();
                    let dense = ln_dense(&state, m).unwrap();
                    (closed.e_ln - dense.e_ln).abs().max((closed.negativity - dense.negativity).abs())
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let elapsed = start.elapsed();
    let ok = worst <= 1e-9 && elapsed < Duration::from_secs(120);
    report(1, ok, &format!("max |closed − dense| = {worst:.3e} over {} states, {elapsed:.1?}", grid.len()));
    assert!(worst <= 1e-9, "max deviation {worst:e}");
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
}

#[test]
fn mw_oracle_equivalence() {
    let grid = oracle_grid(&[4, 6, 8]);
    let worst = grid
        .par_iter()
        .map(|&(n, theta, s, p, r)| {
            let gp = GhzParams::new(theta, n).unwrap();
            let pp = ProtocolParams::new(s, p, r, 1).unwrap();
            let closed = mw_global_entanglement(&gp, &pp).unwrap();
            let dense = mw_dense(&protocol_state(&gp, &pp).unwrap()).unwrap();
            (closed.c_n - dense.c_n).abs().max((closed.e_mw - dense.e_mw).abs())
        })
        .reduce(|| 0.0, f64::max);
    report(2, worst <= 1e-9, &format!("max |closed − dense| = {worst:.3e} over {} states", grid.len()));
    assert!(worst <= 1e-9, "max deviation {worst:e}");
}

#[test]
fn critical_values() {
    let sym = |n| GhzParams::symmetric(n).unwrap();
    let ln = critical_p_closed_form(&sym(4), 0.0, MeasureKind::Ln).unwrap();
    let mw4 = critical_p_closed_form(&sym(4), 0.0, MeasureKind::Mw).unwrap();
    let mw200 = critical_p_closed_form(&sym(200), 0.0, MeasureKind::Mw).unwrap();
    let mw200s = critical_p_closed_form(&sym(200), 0.2, MeasureKind::Mw).unwrap();
    let rel0 = (mw200 - 0.25).abs() / 0.25;
    let rel2 = (mw200s - 0.3125).abs() / 0.3125;
    let checks = [ln == 1.0, (mw4 - 1.0 / 7f64.sqrt()).abs() <= 1e-12, rel0 <= 1e-3, rel2 <= 1e-3];
    let ok = checks.iter().all(|&c| c);
    report(
        3,
        ok,
        &format!(
            "LN={ln}, MW(n=4)={mw4:.15}, MW(n=200,s=0)={mw200:.6} (rel {rel0:.2e}), MW(n=200,s=0.2)={mw200s:.6} (rel {rel2:.2e})"
        ),
    );
    assert_eq!(ln, 1.0);
    assert!((mw4 - 1.0 / 7f64.sqrt()).abs() <= 1e-12);
    assert!(rel0 <= 1e-3, "n = 200, s = 0: relative deviation {rel0:e} from 1/4");
    assert!(rel2 <= 1e-3, "n = 200, s = 0.2: relative deviation {rel2:e} from 1/(4s̄)");
}

/// Bisection for the sign change of the algebraic block eigenvalue.
fn sign_change(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[test]
fn protected_sudden_death_boundary() {
    let mut worst: f64 = 0.0;
    let mut all_found = true;
    let mut negative_inside = true;
    for n in [4usize, 8] {
        for s in [0.2, 0.5] {
            for theta in [PI / 3.0, 2.0 * PI / 3.0] {
                let gp = GhzParams::new(theta, n).unwrap();
                let (alpha, beta) = (gp.alpha(), gp.beta());
                let boundary = (alpha / beta).powf(2.0 / n as f64) / (1.0 - s);
                for r in [0.0, 0.3] {
                    let eps = |p: f64| protected_block_eigenvalue(alpha, beta, n, n / 2, s, p, r);
                    // p = 1 is a double zero of the continued form; bracket away from it
                    let (lo, hi) = if boundary > 1.0 { (1.0 + 1e-3, 3.0) } else { (0.0, 1.0 - 1e-3) };
                    match sign_change(eps, lo, hi) {
                        Some(root) => worst = worst.max((root - boundary).abs()),
                        None => all_found = false,
                    }
                    // inside the physical range the entanglement is alive below the boundary
                    for k in 0..100 {
                        let p = k as f64 / 100.0 * boundary.min(1.0);
                        let pp = ProtocolParams::new(s, p, r, n / 2).unwrap();
                        if ln_block_eigenvalue(&gp, &pp).unwrap().epsilon_m >= 0.0 && p < boundary.min(1.0) && p > 0.0 {
                            negative_inside = false;
                        }
                    }
                }
            }
        }
    }
    let ok = all_found && negative_inside && worst <= 1e-10;
    report(4, ok, &format!("max |root − boundary| = {worst:.3e}, all brackets found: {all_found}"));
    assert!(all_found && negative_inside);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn transmissivity_matches_compact_norm() {
    let grid = oracle_grid(&[3, 4, 5, 6, 7, 8]);
    let worst = grid
        .iter()
        .map(|&(n, theta, s, p, r)| {
            let gp = GhzParams::new(theta, n).unwrap();
            let pp = ProtocolParams::new(s, p, r, 1).unwrap();
            (CompactGhzState::protocol(&gp, &pp).unwrap().norm - transmissivity(&gp, &pp)).abs()
        })
        .fold(0.0, f64::max);
    let unit = grid
        .iter()
        .filter(|g| g.2 == 0.0 && g.4 == 0.0)
        .map(|&(n, theta, _, p, _)| {
            let gp = GhzParams::new(theta, n).unwrap();
            let pp = ProtocolParams::unprotected(p, 1).unwrap();
            let compact = CompactGhzState::protocol(&gp, &pp).unwrap().norm;
            (transmissivity(&gp, &pp) - 1.0).abs().max((compact - 1.0).abs())
        })
        .fold(0.0, f64::max);
    let ok = worst <= 1e-12 && unit <= 1e-15;
    report(5, ok, &format!("max |norm − T| = {worst:.3e}, max |T − 1| without post-selection = {unit:.3e}"));
    assert!(worst <= 1e-12 && unit <= 1e-15);
}

fn fidelity_grid() -> Vec<(usize, f64, f64, f64)> {
    let mut out = Vec::new();
    for n in 3..=6 {
        for s in [0.0, 0.3, 0.6] {
            for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
                for r in [0.0, 0.2, 0.5, 0.8] {
                    out.push((n, s, p, r));
                }
            }
        }
    }
    out
}

#[test]
fn teleportation_fidelity() {
    let psi = UnknownQubit::new((0.6).into(), wmr_core::linalg::C64::new(0.0, 0.8)).unwrap();
    let worst = fidelity_grid()
        .par_iter()
        .map(|&(n, s, p, r)| {
            let pp = ProtocolParams::new(s, p, r, 1).unwrap();
            let (_, sim) = simulate_teleportation_dense(&GhzParams::symmetric(n).unwrap(), &pp, &psi).unwrap();
            (sim - fidelity_tel_closed(n, s, p, r).unwrap()).abs()
        })
        .reduce(|| 0.0, f64::max);
    let full = fidelity_tel_closed(4, 0.0, 1.0, 0.0).unwrap();
    let perfect = (3..=24).map(|n| (fidelity_tel_closed(n, 0.0, 0.0, 0.0).unwrap() - 1.0).abs()).fold(0.0, f64::max);
    let ok = worst <= 1e-8 && full == 2.0 / 3.0 && perfect == 0.0;
    report(
        6,
        ok,
        &format!("max |closed − simulated| = {worst:.3e}, F(p=1) = {full:.17}, max |F(p=0) − 1| = {perfect:e}"),
    );
    assert!(worst <= 1e-8);
    assert_eq!(full, 2.0 / 3.0);
    assert_eq!(perfect, 0.0);
}

#[test]
fn splitting_fidelity() {
    let worst = fidelity_grid()
        .par_iter()
        .map(|&(n, s, p, r)| {
            let pp = ProtocolParams::new(s, p, r, 1).unwrap();
            let sim = simulate_splitting_dense(&GhzParams::symmetric(n).unwrap(), &pp).unwrap();
            (sim - fidelity_is_closed(n, s, p, r).unwrap()).abs()
        })
        .reduce(|| 0.0, f64::max);
    let mut reduction: f64 = 0.0;
    for n in [3usize, 4, 5, 6, 8, 12, 24] {
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            let pb: f64 = 1.0 - p;
            let want = (2.0 - p * pb + pb.powf(n as f64 / 2.0)) / 3.0;
            reduction = reduction.max((fidelity_is_closed(n, 0.0, p, 0.0).unwrap() - want).abs());
        }
    }
    let ok = worst <= 1e-8 && reduction <= 1e-14;
    report(7, ok, &format!("max |closed − simulated| = {worst:.3e}, max reduction error = {reduction:.3e}"));
    assert!(worst <= 1e-8 && reduction <= 1e-14);
}

#[test]
fn classical_bound() {
    let mut points = Vec::new();
    for kind in [FidelityKind::Tel, FidelityKind::Is] {
        for n in [4usize, 8, 12, 24] {
            for s in [0.0, 0.3, 0.5, 0.7] {
                for k in 0..=99 {
                    points.push((kind, n, s, k as f64 / 100.0));
                }
            }
        }
    }
    let (worst, at) = points
        .par_iter()
        .map(|&(kind, n, s, p)| {
            let rep = optimized_fidelity(kind, n, s, p).unwrap();
            (CLASSICAL_FIDELITY - rep.f_avg, (kind, n, s, p))
        })
        .reduce(|| (f64::NEG_INFINITY, (FidelityKind::Tel, 0, 0.0, 0.0)), |a, b| if b.0 > a.0 { b } else { a });
    let ok = worst <= 1e-9;
    report(8, ok, &format!("largest shortfall below 2/3 = {worst:.3e} at {at:?} over {} points", points.len()));
    assert!(ok, "optimized fidelity falls {worst:e} below 2/3 at {at:?}");
}

#[test]
fn measure_and_splitting_decouple() {
    let gp = GhzParams::symmetric(4).unwrap();
    let pp = ProtocolParams::unprotected(0.40, 2).unwrap();
    let e_mw = mw_global_entanglement(&gp, &pp).unwrap().e_mw;
    let f_is = optimized_fidelity(FidelityKind::Is, 4, 0.0, 0.40).unwrap().f_avg;
    let ok = e_mw == 0.0 && f_is > CLASSICAL_FIDELITY && 0.40 > 1.0 / 7f64.sqrt();
    report(9, ok, &format!("E_MW = {e_mw}, optimized splitting fidelity = {f_is:.6}"));
    assert!(ok);
}

fn critical_curves(out: &mut Vec<f64>) {
    for kind in [MeasureKind::Ln, MeasureKind::Mw] {
        for n in (4..=100).step_by(4) {
            let gp = GhzParams::symmetric(n).unwrap();
            for s in [0.0, 0.3, 0.5, 0.7] {
                out.push(critical_p_closed_form(&gp, s, kind).unwrap());
                let objective = match kind {
                    MeasureKind::Ln => Objective::Ln { gp, s, p: 0.0, m: n / 2 },
                    MeasureKind::Mw => Objective::Mw { gp, s, p: 0.0 },
                };
                let c = find_critical_p(|p| Ok(objective.with_p(p).optimize()?.value_opt), DEATH_THRESHOLD, 0.0, 1.0)
                    .unwrap();
                out.push(c.p_critical);
            }
        }
    }
}

#[test]
fn closed_form_performance() {
    LARGEST.store(0, Ordering::Relaxed);
    COUNT.store(0, Ordering::Relaxed);
    let mut curves = Vec::with_capacity(512);
    let start = Instant::now();
    TRACK.with(|t| t.set(true));
    critical_curves(&mut curves);
    TRACK.with(|t| t.set(false));
    let elapsed = start.elapsed();
    let largest = LARGEST.load(Ordering::Relaxed);
    // smallest register on the path is n = 4; a 2ⁿ-entry f64 buffer for n ≥ 12 would already exceed this
    let cap = 1 << 12;
    let ok = elapsed < Duration::from_secs(5) && largest < cap && curves.iter().all(|p| p.is_finite());
    report(
        10,
        ok,
        &format!(
            "{} critical values in {elapsed:.2?}, {} allocations, largest {largest} bytes",
            curves.len(),
            COUNT.load(Ordering::Relaxed)
        ),
    );
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    assert!(largest < cap, "allocation of {largest} bytes");
}

#[test]
fn protection_dominance() {
    let ps: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let mut cases = Vec::new();
    for n in [4usize, 8, 12, 24] {
        for s in [0.3, 0.5, 0.7] {
            for &p in &ps {
                cases.push((n, s, p));
            }
        }
    }
    // protected optimum against the unprotected curve (s = r = 0)
    let worst = cases
        .par_iter()
        .map(|&(n, s, p)| {
            let gp = GhzParams::symmetric(n).unwrap();
            let objectives = [
                (Objective::Ln { gp, s, p, m: n / 2 }, Objective::Ln { gp, s: 0.0, p, m: n / 2 }),
                (Objective::Mw { gp, s, p }, Objective::Mw { gp, s: 0.0, p }),
                (
                    Objective::Fidelity { kind: FidelityKind::Tel, n, s, p },
                    Objective::Fidelity { kind: FidelityKind::Tel, n, s: 0.0, p },
                ),
                (
                    Objective::Fidelity { kind: FidelityKind::Is, n, s, p },
                    Objective::Fidelity { kind: FidelityKind::Is, n, s: 0.0, p },
                ),
            ];
            objectives
                .iter()
                .map(|(prot, unprot)| unprot.eval(0.0).unwrap() - prot.optimize().unwrap().value_opt)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    // numeric death thresholds must not move down as s grows
    let mut ordering_ok = true;
    for kind in [MeasureKind::Ln, MeasureKind::Mw] {
        for n in [4usize, 8, 12, 24] {
            let gp = GhzParams::symmetric(n).unwrap();
            let crit: Vec<f64> = [0.0, 0.3, 0.5, 0.7]
                .iter()
                .map(|&s| {
                    let obj = match kind {
                        MeasureKind::Ln => Objective::Ln { gp, s, p: 0.0, m: n / 2 },
                        MeasureKind::Mw => Objective::Mw { gp, s, p: 0.0 },
                    };
                    find_critical_p(|p| Ok(obj.with_p(p).optimize()?.value_opt), DEATH_THRESHOLD, 0.0, 1.0)
                        .unwrap()
                        .p_critical
                })
                .collect();
            ordering_ok &= crit.windows(2).all(|w| w[1] >= w[0] - 1e-4);
        }
    }
    let ok = worst <= 1e-9 && ordering_ok;
    report(
        11,
        ok,
        &format!("max (unprotected − protected optimum) = {worst:.3e}, criticals nondecreasing in s: {ordering_ok}"),
    );
    assert!(worst <= 1e-9);
    assert!(ordering_ok);
}

#[test]
fn closed_form_fidelity_at_full_reversal_is_classical() {
    // the supremum over r is only reached at r = 1, outside the search range
    let f = |n, s, p, r| fidelity_closed(FidelityKind::Tel, n, s, p, r).unwrap();
    for n in [4usize, 8, 24] {
        for delta in [1e-3, 1e-6, 1e-9] {
            let gap = 2.0 / 3.0 - f(n, 0.3, 0.99, 1.0 - delta);
            assert!(gap > 0.0 && gap < 1e3 * delta * n as f64, "n={n} δ={delta}: {gap:e}");
        }
    }
}
