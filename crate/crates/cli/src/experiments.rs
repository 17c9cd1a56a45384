//! Grid evaluation for each experiment.

use rayon::prelude::*;
use wmr_core::fidelity::FidelityKind;
use wmr_core::measures::{critical_p_closed_form, MeasureKind};
use wmr_core::optimize::{find_critical_p, Objective, OptResult, DEATH_THRESHOLD};
use wmr_core::GhzParams;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::oracle;
use crate::output::{CsvRow, CsvSink};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub rows: usize,
    pub failed_rows: usize,
    pub oracle_failures: usize,
}

impl RunSummary {
    pub fn describe(&self) -> String {
        let mut out = format!("rows = {}\nfailed_rows = {}\n", self.rows, self.failed_rows);
        if self.oracle_failures > 0 {
            out += &format!("oracle_failures = {}\n", self.oracle_failures);
        }
        out
    }
}

/// Evaluates the configured grid and streams rows into `sink`, one block of
/// rows per qubit count. Rows come out ordered by (n, s, p).
pub fn run_experiment(cfg: &ExperimentConfig, sink: &mut CsvSink) -> anyhow::Result<RunSummary> {
    let mut summary = RunSummary::default();
    let (ns, ss) = cfg.sorted_axes();
    let ps = cfg.p_grid.points();
    for n in ns {
        let mut block: Vec<CsvRow> = match cfg.experiment {
            ExperimentKind::CriticalLn | ExperimentKind::CriticalMw => {
                ss.par_iter().flat_map_iter(|&s| critical_rows(cfg, n, s)).collect()
            }
            ExperimentKind::OracleSuite => {
                let checks = oracle::run_checks(n, &ss, &ps);
                summary.oracle_failures += checks.iter().filter(|c| !c.passed).count();
                checks.iter().map(|c| c.row(n)).collect()
            }
            _ => {
                let grid: Vec<(f64, f64)> = ss.iter().flat_map(|&s| ps.iter().map(move |&p| (s, p))).collect();
                grid.par_iter().map(|&(s, p)| sweep_row(cfg, n, s, p)).collect()
            }
        };
        block.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.p.total_cmp(&b.p)));
        for row in &block {
            summary.failed_rows += row.failed() as usize;
            sink.write(row)?;
        }
    }
    summary.rows = sink.rows();
    Ok(summary)
}

fn objective(cfg: &ExperimentConfig, n: usize, s: f64, p: f64) -> wmr_core::Result<Objective> {
    let gp = GhzParams::new(cfg.theta, n)?;
    Ok(match cfg.experiment {
        ExperimentKind::LnVsP | ExperimentKind::CriticalLn | ExperimentKind::TransmissivityVsS => {
            Objective::Ln { gp, s, p, m: cfg.bipartition(n) }
        }
        ExperimentKind::MwVsP | ExperimentKind::CriticalMw => Objective::Mw { gp, s, p },
        ExperimentKind::TelFidelityVsP => Objective::Fidelity { kind: FidelityKind::Tel, n, s, p },
        ExperimentKind::IsFidelityVsP => Objective::Fidelity { kind: FidelityKind::Is, n, s, p },
        ExperimentKind::OracleSuite => unreachable!("oracle suite has no objective"),
    })
}

/// Optimized over r when protected; s = 0 is the unprotected curve (r = 0).
fn best(obj: &Objective, s: f64) -> wmr_core::Result<OptResult> {
    if s == 0.0 {
        return Ok(OptResult {
            r_opt: 0.0,
            value_opt: obj.eval(0.0)?,
            transmissivity_at_opt: obj.transmissivity(0.0)?,
            evaluations: 1,
        });
    }
    obj.optimize()
}

fn label(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::LnVsP | ExperimentKind::CriticalLn => "ln",
        ExperimentKind::MwVsP | ExperimentKind::CriticalMw => "mw",
        ExperimentKind::TelFidelityVsP => "tel",
        ExperimentKind::IsFidelityVsP => "is",
        ExperimentKind::TransmissivityVsS => "transmissivity_at_ln_opt",
        ExperimentKind::OracleSuite => "oracle",
    }
}

fn base_row(cfg: &ExperimentConfig, n: usize, s: f64, p: f64) -> CsvRow {
    CsvRow {
        experiment: cfg.experiment.id(),
        n,
        theta: cfg.theta,
        s,
        p,
        r_opt: f64::NAN,
        value: f64::NAN,
        transmissivity: f64::NAN,
        extra: String::new(),
    }
}

fn sweep_row(cfg: &ExperimentConfig, n: usize, s: f64, p: f64) -> CsvRow {
    let mut row = base_row(cfg, n, s, p);
    let mut extra = label(cfg.experiment).to_string();
    if s == 0.0 {
        extra += ";unprotected";
    }
    match objective(cfg, n, s, p).and_then(|obj| best(&obj, s)) {
        Ok(opt) => {
            row.r_opt = opt.r_opt;
            row.transmissivity = opt.transmissivity_at_opt;
            row.value = match cfg.experiment {
                ExperimentKind::TransmissivityVsS => opt.transmissivity_at_opt,
                _ => opt.value_opt,
            };
        }
        Err(e) => extra += &format!(";failed: {e}"),
    }
    row.extra = extra;
    row
}

fn critical_rows(cfg: &ExperimentConfig, n: usize, s: f64) -> Vec<CsvRow> {
    let kind = match cfg.experiment {
        ExperimentKind::CriticalMw => MeasureKind::Mw,
        _ => MeasureKind::Ln,
    };
    let tag = label(cfg.experiment);

    let mut analytic = base_row(cfg, n, s, f64::NAN);
    analytic.extra = format!("{tag};analytic");
    let closed = GhzParams::new(cfg.theta, n).and_then(|gp| critical_p_closed_form(&gp, s, kind));
    match closed.and_then(|pc| {
        let obj = objective(cfg, n, s, pc)?;
        Ok((pc, obj.transmissivity(0.0)?))
    }) {
        Ok((pc, t)) => {
            analytic.p = pc;
            analytic.r_opt = 0.0;
            analytic.value = 0.0;
            analytic.transmissivity = t;
        }
        Err(e) => analytic.extra += &format!(";failed: {e}"),
    }

    let mut numeric = base_row(cfg, n, s, f64::NAN);
    numeric.extra = format!("{tag};threshold={DEATH_THRESHOLD}");
    let found = objective(cfg, n, s, 0.0).and_then(|obj| {
        let c = find_critical_p(|p| Ok(best(&obj.with_p(p), s)?.value_opt), DEATH_THRESHOLD, 0.0, 1.0)?;
        Ok((c.p_critical, best(&obj.with_p(c.p_critical), s)?))
    });
    match found {
        Ok((pc, opt)) => {
            numeric.p = pc;
            numeric.r_opt = opt.r_opt;
            numeric.value = opt.value_opt;
            numeric.transmissivity = opt.transmissivity_at_opt;
        }
        Err(e) => numeric.extra += &format!(";failed: {e}"),
    }
    vec![analytic, numeric]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FileConfig;
    use std::io::Write;
    use std::sync::{Arc, Mutex};
    use wmr_core::ProtocolParams;

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    fn run(given: FileConfig) -> (RunSummary, String) {
        let cfg = ExperimentConfig::resolve(given).unwrap();
        let buf = Shared::default();
        let mut sink = CsvSink::from_writer(Box::new(buf.clone()), None).unwrap();
        let summary = run_experiment(&cfg, &mut sink).unwrap();
        sink.finish().unwrap();
        let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
        (summary, text)
    }

    fn cfg(kind: ExperimentKind) -> FileConfig {
        FileConfig { experiment: Some(kind), ..Default::default() }
    }

    fn column(text: &str, idx: usize) -> Vec<f64> {
        text.lines().skip(1).map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
    }

    #[test]
    fn ln_sweep_is_ordered_and_complete() {
        let (summary, text) = run(FileConfig {
            n: Some(vec![8, 4]),
            s: Some(vec![0.5, 0.0]),
            p_step: Some(0.25),
            ..cfg(ExperimentKind::LnVsP)
        });
        assert_eq!(summary.rows, 2 * 2 * 5);
        assert_eq!(summary.failed_rows, 0);
        let ns = column(&text, 1);
        let ss = column(&text, 3);
        let ps = column(&text, 4);
        let keys: Vec<_> = (0..ns.len()).map(|i| (ns[i], ss[i], ps[i])).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(keys, sorted);
        assert!(text.lines().nth(1).unwrap().starts_with("ln_vs_p,4,1.57079632679,0,0,0,1,1,ln;unprotected"));
    }

    #[test]
    fn protected_curves_dominate() {
        let (_, text) = run(FileConfig { n: Some(vec![4]), p_step: Some(0.05), ..cfg(ExperimentKind::LnVsP) });
        let ss = column(&text, 3);
        let vs = column(&text, 6);
        let per_s = ss.iter().filter(|&&s| s == 0.0).count();
        let unprotected = &vs[..per_s];
        for (i, v) in vs.iter().enumerate().skip(per_s) {
            assert!(*v >= unprotected[i % per_s] - 1e-12);
        }
        // curves decrease in p
        for chunk in vs.chunks(per_s) {
            assert!(chunk.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn transmissivity_falls_with_s_and_n() {
        let (_, text) = run(FileConfig { n: Some(vec![4, 8, 12, 24]), ..cfg(ExperimentKind::TransmissivityVsS) });
        let ts = column(&text, 6);
        let per_n = ts.len() / 4;
        for chunk in ts.chunks(per_n) {
            assert_eq!(chunk[0], 1.0);
            assert!(chunk.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
        for i in 1..per_n {
            for k in 1..4 {
                assert!(ts[k * per_n + i] <= ts[(k - 1) * per_n + i] + 1e-12);
            }
        }
    }

    #[test]
    fn critical_rows_pair_up() {
        let (summary, text) =
            run(FileConfig { n: Some(vec![4, 8]), s: Some(vec![0.0, 0.3]), ..cfg(ExperimentKind::CriticalMw) });
        assert_eq!(summary.rows, 8);
        assert_eq!(summary.failed_rows, 0);
        let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first[8], "mw;threshold=0.001");
        let pc: f64 = text.lines().nth(2).unwrap().split(',').nth(4).unwrap().parse().unwrap();
        assert!((pc - 1.0 / 7f64.sqrt()).abs() < 1e-11);
        // numeric death precedes the analytic zero
        let p: f64 = first[4].parse().unwrap();
        assert!(p < pc);
    }

    #[test]
    fn odd_n_rejected_for_mw() {
        assert!(ExperimentConfig::resolve(FileConfig { n: Some(vec![5]), ..cfg(ExperimentKind::CriticalMw) }).is_err());
    }

    #[test]
    fn fidelity_rows() {
        let (summary, text) = run(FileConfig {
            n: Some(vec![4]),
            s: Some(vec![0.0]),
            p_start: Some(1.0),
            ..cfg(ExperimentKind::TelFidelityVsP)
        });
        assert_eq!(summary.rows, 1);
        assert!(text.contains("tel_fidelity_vs_p,4,1.57079632679,0,1,0,0.666666666667,"));
    }

    #[test]
    fn row_value_matches_direct_evaluation() {
        let row = sweep_row(
            &ExperimentConfig::resolve(FileConfig { n: Some(vec![4]), ..cfg(ExperimentKind::MwVsP) }).unwrap(),
            4,
            0.3,
            0.2,
        );
        let pp = ProtocolParams::new(row.s, row.p, row.r_opt, 2).unwrap();
        let gp = GhzParams::symmetric(4).unwrap();
        let direct = wmr_core::measures::mw_global_entanglement(&gp, &pp).unwrap().e_mw;
        assert_eq!(direct, row.value);
    }
}
