//! Experiment configuration: TOML file, command-line overrides, defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    LnVsP,
    MwVsP,
    CriticalLn,
    CriticalMw,
    TransmissivityVsS,
    TelFidelityVsP,
    IsFidelityVsP,
    OracleSuite,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::LnVsP,
        ExperimentKind::MwVsP,
        ExperimentKind::CriticalLn,
        ExperimentKind::CriticalMw,
        ExperimentKind::TransmissivityVsS,
        ExperimentKind::TelFidelityVsP,
        ExperimentKind::IsFidelityVsP,
        ExperimentKind::OracleSuite,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::LnVsP => "ln_vs_p",
            ExperimentKind::MwVsP => "mw_vs_p",
            ExperimentKind::CriticalLn => "critical_ln",
            ExperimentKind::CriticalMw => "critical_mw",
            ExperimentKind::TransmissivityVsS => "transmissivity_vs_s",
            ExperimentKind::TelFidelityVsP => "tel_fidelity_vs_p",
            ExperimentKind::IsFidelityVsP => "is_fidelity_vs_p",
            ExperimentKind::OracleSuite => "oracle_suite",
        }
    }

    fn uses_mw(self) -> bool {
        matches!(self, ExperimentKind::MwVsP | ExperimentKind::CriticalMw)
    }

    fn is_fidelity(self) -> bool {
        matches!(self, ExperimentKind::TelFidelityVsP | ExperimentKind::IsFidelityVsP)
    }

    fn default_n(self) -> Vec<usize> {
        match self {
            ExperimentKind::CriticalLn | ExperimentKind::CriticalMw => (4..=100).step_by(4).collect(),
            ExperimentKind::OracleSuite => (3..=8).collect(),
            _ => vec![4, 8, 12, 24],
        }
    }

    fn default_s(self) -> Vec<f64> {
        match self {
            ExperimentKind::TransmissivityVsS => (0..20).map(|i| i as f64 * 0.05).collect(),
            ExperimentKind::OracleSuite => vec![0.0, 0.3, 0.6],
            _ => vec![0.0, 0.3, 0.5, 0.7],
        }
    }

    fn default_p(self) -> PGrid {
        match self {
            ExperimentKind::TransmissivityVsS => PGrid { start: 0.2, stop: 0.2, step: 0.1 },
            ExperimentKind::OracleSuite => PGrid { start: 0.0, stop: 0.9, step: 0.1 },
            _ => PGrid { start: 0.0, stop: 1.0, step: 0.005 },
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ExperimentKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        ExperimentKind::ALL.into_iter().find(|k| k.id() == s).with_context(|| format!("unknown experiment `{s}`"))
    }
}

/// Inclusive damping grid.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct PGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PGrid {
    pub fn points(&self) -> Vec<f64> {
        // tolerate accumulated rounding in (stop − start)/step
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| (self.start + i as f64 * self.step).min(self.stop)).collect()
    }
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<ExperimentKind>,
    pub n: Option<Vec<usize>>,
    pub s: Option<Vec<f64>>,
    pub theta: Option<f64>,
    pub p_start: Option<f64>,
    pub p_stop: Option<f64>,
    pub p_step: Option<f64>,
    pub m: Option<usize>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Overlay `other` on top of `self`; set keys in `other` win.
    pub fn overlay(self, other: FileConfig) -> FileConfig {
        FileConfig {
            experiment: other.experiment.or(self.experiment),
            n: other.n.or(self.n),
            s: other.s.or(self.s),
            theta: other.theta.or(self.theta),
            p_start: other.p_start.or(self.p_start),
            p_stop: other.p_stop.or(self.p_stop),
            p_step: other.p_step.or(self.p_step),
            m: other.m.or(self.m),
            out: other.out.or(self.out),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_list: Vec<usize>,
    pub s_list: Vec<f64>,
    pub theta: f64,
    pub p_grid: PGrid,
    /// Bipartition size; `None` means n/2 for each n.
    pub m: Option<usize>,
    pub output_path: Option<PathBuf>,
    /// Names of the fields that fell back to built-in defaults.
    pub defaulted: Vec<&'static str>,
}

impl ExperimentConfig {
    pub fn resolve(given: FileConfig) -> anyhow::Result<Self> {
        let experiment = given.experiment.context("no experiment given")?;
        let mut defaulted = Vec::new();
        let d = &mut defaulted;
        let n_list = pick(d, "n", given.n, experiment.default_n());
        let s_list = pick(d, "s", given.s, experiment.default_s());
        let theta = pick(d, "theta", given.theta, std::f64::consts::FRAC_PI_2);
        let dp = experiment.default_p();
        let p_grid = PGrid {
            start: pick(d, "p_start", given.p_start, dp.start),
            stop: pick(d, "p_stop", given.p_stop, dp.stop),
            step: pick(d, "p_step", given.p_step, dp.step),
        };
        if given.m.is_none() {
            defaulted.push("m");
        }
        let cfg =
            ExperimentConfig { experiment, n_list, s_list, theta, p_grid, m: given.m, output_path: given.out, defaulted };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_list.is_empty() || self.s_list.is_empty() {
            bail!("n and s lists must be nonempty");
        }
        let g = self.p_grid;
        if !(g.step > 0.0 && g.step.is_finite()) {
            bail!("p step must be positive, got {}", g.step);
        }
        if !(0.0 <= g.start && g.start <= g.stop && g.stop <= 1.0) {
            bail!("p grid must satisfy 0 ≤ start ≤ stop ≤ 1, got {}..{}", g.start, g.stop);
        }
        if let Some(&s) = self.s_list.iter().find(|s| !(0.0..1.0).contains(*s)) {
            bail!("weak strength must lie in [0, 1), got {s}");
        }
        if !self.theta.is_finite() {
            bail!("theta must be finite");
        }
        for &n in &self.n_list {
            if n < 3 && self.experiment != ExperimentKind::OracleSuite {
                bail!("need at least 3 qubits, got {n}");
            }
            if self.experiment.uses_mw() && n % 2 == 1 {
                bail!("{} needs even n, got {n}", self.experiment);
            }
            if let Some(m) = self.m {
                if m == 0 || m >= n {
                    bail!("bipartition size {m} must lie in 1..{n}");
                }
            }
        }
        if self.experiment.is_fidelity() && (self.theta - std::f64::consts::FRAC_PI_2).abs() > 1e-12 {
            bail!("{} is defined for the symmetric resource only (theta = pi/2)", self.experiment);
        }
        if self.experiment == ExperimentKind::OracleSuite && self.n_list.iter().any(|&n| !(2..=8).contains(&n)) {
            bail!("oracle_suite builds dense states and accepts 2 ≤ n ≤ 8");
        }
        Ok(())
    }

    pub fn bipartition(&self, n: usize) -> usize {
        self.m.unwrap_or(n / 2)
    }

    /// Sorted, deduplicated sweep axes.
    pub fn sorted_axes(&self) -> (Vec<usize>, Vec<f64>) {
        let mut n = self.n_list.clone();
        n.sort_unstable();
        n.dedup();
        let mut s = self.s_list.clone();
        s.sort_by(f64::total_cmp);
        s.dedup();
        (n, s)
    }

    /// Human-readable summary; defaulted fields are tagged.
    pub fn describe(&self) -> String {
        let tag = |name: &str| if self.defaulted.contains(&name) { " (default)" } else { "" };
        let mut out = format!("experiment = {}\n", self.experiment);
        out += &format!("n = {:?}{}\n", self.n_list, tag("n"));
        out += &format!("s = {:?}{}\n", self.s_list, tag("s"));
        out += &format!("theta = {}{}\n", self.theta, tag("theta"));
        out += &format!("p_start = {}{}\n", self.p_grid.start, tag("p_start"));
        out += &format!("p_stop = {}{}\n", self.p_grid.stop, tag("p_stop"));
        out += &format!("p_step = {}{}\n", self.p_grid.step, tag("p_step"));
        match self.m {
            Some(m) => out += &format!("m = {m}\n"),
            None => out += "m = n/2 (default)\n",
        }
        out
    }
}

fn pick<T>(defaulted: &mut Vec<&'static str>, name: &'static str, value: Option<T>, fallback: T) -> T {
    value.unwrap_or_else(|| {
        defaulted.push(name);
        fallback
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(kind: ExperimentKind) -> FileConfig {
        FileConfig { experiment: Some(kind), ..Default::default() }
    }

    #[test]
    fn grid_is_inclusive() {
        let g = PGrid { start: 0.0, stop: 1.0, step: 0.005 };
        let pts = g.points();
        assert_eq!(pts.len(), 201);
        assert_eq!(*pts.last().unwrap(), 1.0);
        assert_eq!(PGrid { start: 0.2, stop: 0.2, step: 0.1 }.points(), vec![0.2]);
        assert_eq!(PGrid { start: 0.0, stop: 0.9, step: 0.1 }.points().len(), 10);
    }

    #[test]
    fn defaults_are_recorded() {
        let cfg = ExperimentConfig::resolve(base(ExperimentKind::LnVsP)).unwrap();
        assert_eq!(cfg.n_list, vec![4, 8, 12, 24]);
        assert!(cfg.defaulted.contains(&"theta"));
        assert!(cfg.describe().contains("theta = 1.5707963267948966 (default)"));

        let cfg = ExperimentConfig::resolve(FileConfig { n: Some(vec![6]), ..base(ExperimentKind::LnVsP) }).unwrap();
        assert!(!cfg.defaulted.contains(&"n"));
    }

    #[test]
    fn overlay_prefers_later() {
        let file = FileConfig { n: Some(vec![4]), theta: Some(1.0), ..Default::default() };
        let flags = FileConfig { n: Some(vec![8]), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.n, Some(vec![8]));
        assert_eq!(merged.theta, Some(1.0));
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            FileConfig { n: Some(vec![5]), ..base(ExperimentKind::MwVsP) },
            FileConfig { p_step: Some(0.0), ..base(ExperimentKind::LnVsP) },
            FileConfig { p_start: Some(0.5), p_stop: Some(0.4), ..base(ExperimentKind::LnVsP) },
            FileConfig { s: Some(vec![]), ..base(ExperimentKind::LnVsP) },
            FileConfig { s: Some(vec![1.0]), ..base(ExperimentKind::LnVsP) },
            FileConfig { n: Some(vec![4]), m: Some(4), ..base(ExperimentKind::LnVsP) },
            FileConfig { theta: Some(1.0), ..base(ExperimentKind::TelFidelityVsP) },
            FileConfig { n: Some(vec![12]), ..base(ExperimentKind::OracleSuite) },
            FileConfig::default(),
        ];
        for cfg in bad {
            assert!(ExperimentConfig::resolve(cfg.clone()).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn parses_toml() {
        let cfg: FileConfig =
            toml::from_str("experiment = \"critical_mw\"\nn = [4, 8]\ns = [0.0, 0.2]\np_step = 0.01\n").unwrap();
        assert_eq!(cfg.experiment, Some(ExperimentKind::CriticalMw));
        assert_eq!(cfg.n, Some(vec![4, 8]));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn ids_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.id().parse::<ExperimentKind>().unwrap(), k);
        }
    }
}
