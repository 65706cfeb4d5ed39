//! Scenario presets and the configuration keys that override them.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mixdyn::integrator::{default_dt, EvolveConfig, Method};
use mixdyn::{HpOrder, MixParams, ModeSpec, NumberTerm};

use crate::config::{ConfigError, Entry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Custom,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::Fig2,
        ScenarioName::Fig3,
        ScenarioName::Fig4,
        ScenarioName::Fig5,
        ScenarioName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Fig2 => "fig2",
            ScenarioName::Fig3 => "fig3",
            ScenarioName::Fig4 => "fig4",
            ScenarioName::Fig5 => "fig5",
            ScenarioName::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("expected one of fig2, fig3, fig4, fig5, custom; got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffSpec {
    Fixed(usize, usize),
    /// Searched with a pilot run before each series run.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Moments,
    Dicke,
}

impl Oracle {
    pub fn as_str(self) -> &'static str {
        match self {
            Oracle::Moments => "moments",
            Oracle::Dicke => "dicke",
        }
    }
}

impl FromStr for Oracle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "moments" => Ok(Oracle::Moments),
            "dicke" => Ok(Oracle::Dicke),
            _ => Err(format!("expected moments or dicke, got `{s}`")),
        }
    }
}

/// Laser frequency difference of all presets.
pub const PRESET_DELTA_OMEGA: f64 = 50.0;

/// Period of the long-time oscillation of the presets, `2 pi / delta_omega`.
pub fn preset_period() -> f64 {
    2.0 * PI / PRESET_DELTA_OMEGA
}

/// Everything needed to produce the output files of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: ScenarioName,
    /// Physical parameters; `eta` and the atom numbers are replaced per run
    /// by `etas` and `atom_numbers`.
    pub params: MixParams,
    pub etas: Vec<f64>,
    /// Symmetric atom numbers `N1 = N2` to loop over; empty means the atom
    /// numbers in `params`.
    pub atom_numbers: Vec<usize>,
    /// Non-empty switches to sweep mode: one run per value, reporting `Ne1`
    /// at the probe times.
    pub eta_grid: Vec<f64>,
    pub cutoff: CutoffSpec,
    pub t_end: f64,
    /// `None` uses [`default_dt`].
    pub dt: Option<f64>,
    pub sample_interval: f64,
    /// `None` means a quarter, a half, three quarters and all of `t_end`.
    pub probe_times: Option<Vec<f64>>,
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub cutoff_guard: f64,
    pub validity_guard: f64,
    pub distribution: bool,
    pub min_eigenvalue: bool,
    pub oracle: Option<Oracle>,
    /// Dicke ladder truncation for the spin oracle; `None` keeps all levels.
    pub dicke_levels: Option<usize>,
    pub output: PathBuf,
}

/// One series run of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// File-name suffix distinguishing runs; `None` for a lone run.
    pub label: Option<String>,
    pub params: MixParams,
}

fn fig2_params() -> MixParams {
    let mode = ModeSpec {
        cutoff: 10,
        atoms: 100,
        gamma: 1.0,
        beta: 10.0,
        delta: 0.0,
        omega_rabi: 30.0,
    };
    let mut p = MixParams::symmetric(mode, 0.5, PRESET_DELTA_OMEGA, HpOrder::First);
    p.number_term = NumberTerm::Exact;
    p
}

impl Scenario {
    pub fn preset(name: ScenarioName) -> Self {
        let mut s = Scenario {
            name,
            params: fig2_params(),
            etas: vec![0.0, 0.5],
            atom_numbers: Vec::new(),
            eta_grid: Vec::new(),
            cutoff: CutoffSpec::Fixed(10, 10),
            t_end: 10.0,
            dt: None,
            sample_interval: 0.002,
            probe_times: None,
            method: Method::FixedRk4,
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            cutoff_guard: 1e-6,
            validity_guard: 0.1,
            distribution: false,
            min_eigenvalue: false,
            oracle: None,
            dicke_levels: None,
            output: PathBuf::from(format!("{name}.csv")),
        };
        let large = |s: &mut Scenario| {
            s.params.mode1.atoms = 1000;
            s.params.mode2.atoms = 1000;
            s.params.hp_order = HpOrder::Zeroth;
        };
        match name {
            ScenarioName::Fig2 => {}
            ScenarioName::Fig3 => s.atom_numbers = vec![100, 200, 500],
            ScenarioName::Fig4 => {
                large(&mut s);
                s.eta_grid = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0];
                s.cutoff = CutoffSpec::Fixed(12, 12);
                s.t_end = preset_period();
                s.sample_interval = 5e-4;
            }
            ScenarioName::Fig5 => {
                large(&mut s);
                s.etas = vec![0.85, 0.95];
                s.cutoff = CutoffSpec::Fixed(14, 14);
                s.t_end = preset_period() / 4.0;
                s.sample_interval = 2.5e-4;
                s.probe_times = Some(vec![s.t_end]);
                s.distribution = true;
            }
            ScenarioName::Custom => s.etas = vec![0.5],
        }
        s.sync();
        s
    }

    /// Keeps `params` consistent with the run lists: its `eta` is the first
    /// listed value and its cutoffs are the fixed cutoffs.
    fn sync(&mut self) {
        if let Some(&eta) = self.etas.first() {
            self.params.eta = eta;
        }
        if let CutoffSpec::Fixed(c1, c2) = self.cutoff {
            self.params.mode1.cutoff = c1;
            self.params.mode2.cutoff = c2;
        }
    }

    pub fn probe_times(&self) -> Vec<f64> {
        match &self.probe_times {
            Some(p) => p.clone(),
            None => [0.25, 0.5, 0.75, 1.0]
                .iter()
                .map(|f| f * self.t_end)
                .collect(),
        }
    }

    pub fn is_sweep(&self) -> bool {
        !self.eta_grid.is_empty()
    }

    /// Parameters of one run, with the cutoff clamped to the atom number
    /// (the bosonized ladder of `N` atoms has `N + 1` levels).
    pub fn run_params(&self, eta: f64, atoms: Option<usize>) -> MixParams {
        let mut p = self.params;
        p.eta = eta;
        if let Some(n) = atoms {
            p.mode1.atoms = n;
            p.mode2.atoms = n;
        }
        let (c1, c2) = match self.cutoff {
            CutoffSpec::Fixed(c1, c2) => (c1, c2),
            CutoffSpec::Auto => (p.mode1.cutoff, p.mode2.cutoff),
        };
        p.mode1.cutoff = c1.min(p.mode1.atoms);
        p.mode2.cutoff = c2.min(p.mode2.atoms);
        p
    }

    /// Series runs in output order: atom numbers outermost, then `eta`.
    pub fn series_runs(&self) -> Vec<RunSpec> {
        let atoms: Vec<Option<usize>> = if self.atom_numbers.is_empty() {
            vec![None]
        } else {
            self.atom_numbers.iter().map(|&n| Some(n)).collect()
        };
        let lone = atoms.len() * self.etas.len() == 1;
        let mut runs = Vec::new();
        for &n in &atoms {
            for &eta in &self.etas {
                let params = self.run_params(eta, n);
                let label = (!lone).then(|| format!("eta{}_N{}", eta, params.mode1.atoms));
                runs.push(RunSpec { label, params });
            }
        }
        runs
    }

    /// The scenario restricted to one run, so that its echo reproduces
    /// exactly that run.
    pub fn for_run(&self, run: &RunSpec) -> Scenario {
        let mut s = self.clone();
        s.params = run.params;
        s.etas = vec![run.params.eta];
        s.atom_numbers.clear();
        s.eta_grid.clear();
        if let CutoffSpec::Fixed(..) = s.cutoff {
            s.cutoff = CutoffSpec::Fixed(run.params.mode1.cutoff, run.params.mode2.cutoff);
        }
        s
    }

    pub fn evolve_config(&self, params: &MixParams) -> EvolveConfig {
        let dt = self.dt.unwrap_or_else(|| default_dt(params));
        let mut c = EvolveConfig::new(self.t_end, dt, self.sample_interval.max(dt));
        c.method = self.method;
        c.rel_tol = self.rel_tol;
        c.abs_tol = self.abs_tol;
        c.cutoff_guard = self.cutoff_guard;
        c.validity_guard = self.validity_guard;
        c.track_min_eigenvalue = self.min_eigenvalue;
        if self.distribution || self.is_sweep() {
            c.snapshot_times = self.probe_times();
        }
        c
    }

    /// Applies one `key = value` override.
    pub fn apply(&mut self, entry: &Entry) -> Result<(), ConfigError> {
        let key = entry.key.as_str();
        let v = entry.value.trim();
        let bad = |reason: String| ConfigError::BadValue {
            line: entry.line,
            key: key.to_string(),
            value: v.to_string(),
            reason,
        };
        let num = || parse_f64(v).map_err(bad);
        let int = || v.parse::<usize>().map_err(|e| bad(e.to_string()));
        let list = || parse_list(v).map_err(bad);
        let flag = || parse_bool(v).map_err(bad);
        let p = &mut self.params;
        match key {
            "scenario" => {
                let name: ScenarioName = v.parse().map_err(bad)?;
                if name != self.name {
                    return Err(bad(format!("scenario is already {}", self.name)));
                }
            }
            "eta" => {
                self.etas = vec![num()?];
                self.eta_grid.clear();
            }
            "etas" => {
                self.etas = list()?;
                self.eta_grid.clear();
            }
            "eta_grid" => self.eta_grid = list()?,
            "order" => {
                p.hp_order = v
                    .parse::<u32>()
                    .ok()
                    .and_then(HpOrder::from_number)
                    .ok_or_else(|| bad("expected 0 or 1".into()))?
            }
            "number_term" => {
                p.number_term = match v {
                    "exact" => NumberTerm::Exact,
                    "expanded" => NumberTerm::Expanded,
                    _ => return Err(bad("expected exact or expanded".into())),
                }
            }
            "cutoff" => {
                self.cutoff = if v == "auto" {
                    CutoffSpec::Auto
                } else {
                    let m = int()?;
                    CutoffSpec::Fixed(m, m)
                }
            }
            "cutoff1" | "cutoff2" => {
                let m = int()?;
                let (mut c1, mut c2) = match self.cutoff {
                    CutoffSpec::Fixed(a, b) => (a, b),
                    CutoffSpec::Auto => return Err(bad("cutoff is auto".into())),
                };
                if key == "cutoff1" {
                    c1 = m
                } else {
                    c2 = m
                }
                self.cutoff = CutoffSpec::Fixed(c1, c2);
            }
            "atoms" => {
                let n = int()?;
                p.mode1.atoms = n;
                p.mode2.atoms = n;
                self.atom_numbers.clear();
            }
            "atoms1" => {
                p.mode1.atoms = int()?;
                self.atom_numbers.clear();
            }
            "atoms2" => {
                p.mode2.atoms = int()?;
                self.atom_numbers.clear();
            }
            "atom_numbers" => {
                self.atom_numbers = v
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| bad(e.to_string()))?
            }
            "gamma1" => {
                if num()? != 1.0 {
                    return Err(bad("gamma1 is the unit of all rates and stays 1".into()));
                }
            }
            "gamma2" => p.mode2.gamma = num()?,
            "beta" => {
                let x = num()?;
                p.mode1.beta = x;
                p.mode2.beta = x;
            }
            "beta1" => p.mode1.beta = num()?,
            "beta2" => p.mode2.beta = num()?,
            "delta" => {
                let x = num()?;
                p.mode1.delta = x;
                p.mode2.delta = x;
            }
            "delta1" => p.mode1.delta = num()?,
            "delta2" => p.mode2.delta = num()?,
            "omega" => {
                let x = num()?;
                p.mode1.omega_rabi = x;
                p.mode2.omega_rabi = x;
            }
            "omega1" => p.mode1.omega_rabi = num()?,
            "omega2" => p.mode2.omega_rabi = num()?,
            "delta_omega" => p.delta_omega = num()?,
            "phi0" => p.phi0 = num()?,
            "t_end" => self.t_end = num()?,
            "dt" => self.dt = if v == "auto" { None } else { Some(num()?) },
            "sample_interval" => self.sample_interval = num()?,
            "probe_times" => self.probe_times = if v == "auto" { None } else { Some(list()?) },
            "method" => {
                self.method = match v {
                    "rk4" => Method::FixedRk4,
                    "adaptive" => Method::AdaptiveEmbedded,
                    _ => return Err(bad("expected rk4 or adaptive".into())),
                }
            }
            "rel_tol" => self.rel_tol = num()?,
            "abs_tol" => self.abs_tol = num()?,
            "cutoff_guard" => self.cutoff_guard = num()?,
            "validity_guard" => self.validity_guard = num()?,
            "distribution" => self.distribution = flag()?,
            "min_eigenvalue" => self.min_eigenvalue = flag()?,
            "oracle" => {
                self.oracle = if v == "none" {
                    None
                } else {
                    Some(v.parse().map_err(bad)?)
                }
            }
            "dicke_levels" => self.dicke_levels = if v == "full" { None } else { Some(int()?) },
            "output" => self.output = PathBuf::from(v),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: entry.line,
                    key: key.to_string(),
                })
            }
        }
        self.sync();
        Ok(())
    }

    /// Checks ranges that do not depend on a particular run.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: String, reason: &str| ConfigError::BadValue {
            line: 0,
            key: key.into(),
            value,
            reason: reason.into(),
        };
        let etas = self.etas.iter().chain(&self.eta_grid);
        if let Some(e) = etas.clone().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(bad("eta", e.to_string(), "must lie in [0, 1]"));
        }
        if self.etas.is_empty() && !self.is_sweep() {
            return Err(bad("etas", String::new(), "at least one value needed"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(bad("t_end", self.t_end.to_string(), "must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(bad("dt", dt.to_string(), "must be positive"));
            }
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(bad(
                "sample_interval",
                self.sample_interval.to_string(),
                "must be positive",
            ));
        }
        if let Some(t) = self
            .probe_times()
            .into_iter()
            .find(|t| !(t.is_finite() && *t >= 0.0 && *t <= self.t_end))
        {
            return Err(bad("probe_times", t.to_string(), "must lie in [0, t_end]"));
        }
        if let CutoffSpec::Fixed(c1, c2) = self.cutoff {
            if c1 < 1 || c2 < 1 {
                return Err(bad("cutoff", format!("{c1},{c2}"), "must be at least 1"));
            }
        }
        if self.is_sweep() && self.oracle.is_some() {
            return Err(bad("oracle", String::new(), "not available in sweep mode"));
        }
        Ok(())
    }

    /// Full parameter echo as config entries, in a fixed order. Feeding these
    /// back through [`Scenario::apply`] on the same preset reproduces `self`.
    pub fn entries(&self) -> Vec<Entry> {
        let p = &self.params;
        let f = |x: f64| x.to_string();
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut e = vec![Entry::new("scenario", self.name.as_str())];
        e.push(Entry::new("etas", join(&self.etas)));
        if self.is_sweep() {
            e.push(Entry::new("eta_grid", join(&self.eta_grid)));
        }
        e.push(Entry::new("order", p.hp_order.number().to_string()));
        e.push(Entry::new(
            "number_term",
            match p.number_term {
                NumberTerm::Exact => "exact",
                NumberTerm::Expanded => "expanded",
            },
        ));
        match self.cutoff {
            CutoffSpec::Auto => e.push(Entry::new("cutoff", "auto")),
            CutoffSpec::Fixed(c1, c2) => {
                e.push(Entry::new("cutoff1", c1.to_string()));
                e.push(Entry::new("cutoff2", c2.to_string()));
            }
        }
        e.push(Entry::new("atoms1", p.mode1.atoms.to_string()));
        e.push(Entry::new("atoms2", p.mode2.atoms.to_string()));
        if !self.atom_numbers.is_empty() {
            let list: Vec<String> = self.atom_numbers.iter().map(|n| n.to_string()).collect();
            e.push(Entry::new("atom_numbers", list.join(",")));
        }
        e.push(Entry::new("gamma1", f(p.mode1.gamma)));
        e.push(Entry::new("gamma2", f(p.mode2.gamma)));
        e.push(Entry::new("beta1", f(p.mode1.beta)));
        e.push(Entry::new("beta2", f(p.mode2.beta)));
        e.push(Entry::new("delta1", f(p.mode1.delta)));
        e.push(Entry::new("delta2", f(p.mode2.delta)));
        e.push(Entry::new("omega1", f(p.mode1.omega_rabi)));
        e.push(Entry::new("omega2", f(p.mode2.omega_rabi)));
        e.push(Entry::new("delta_omega", f(p.delta_omega)));
        e.push(Entry::new("phi0", f(p.phi0)));
        e.push(Entry::new("t_end", f(self.t_end)));
        e.push(Entry::new("dt", self.dt.map_or("auto".into(), f)));
        e.push(Entry::new("sample_interval", f(self.sample_interval)));
        e.push(Entry::new(
            "probe_times",
            self.probe_times.as_deref().map_or("auto".into(), join),
        ));
        e.push(Entry::new(
            "method",
            match self.method {
                Method::FixedRk4 => "rk4",
                Method::AdaptiveEmbedded => "adaptive",
            },
        ));
        e.push(Entry::new("rel_tol", f(self.rel_tol)));
        e.push(Entry::new("abs_tol", f(self.abs_tol)));
        e.push(Entry::new("cutoff_guard", f(self.cutoff_guard)));
        e.push(Entry::new("validity_guard", f(self.validity_guard)));
        e.push(Entry::new("distribution", self.distribution.to_string()));
        e.push(Entry::new(
            "min_eigenvalue",
            self.min_eigenvalue.to_string(),
        ));
        e.push(Entry::new(
            "oracle",
            self.oracle.map_or("none", Oracle::as_str),
        ));
        e.push(Entry::new(
            "dicke_levels",
            self.dicke_levels.map_or("full".into(), |k| k.to_string()),
        ));
        e.push(Entry::new("output", self.output.display().to_string()));
        e
    }

    /// Builds a scenario from config entries and then command-line entries,
    /// the latter winning. The preset comes from `name`, else from a
    /// `scenario` entry, else `custom`.
    pub fn build(
        name: Option<ScenarioName>,
        file: &[Entry],
        flags: &[Entry],
    ) -> Result<Scenario, ConfigError> {
        let from_file = file.iter().find(|e| e.key == "scenario");
        let name = match (name, from_file) {
            (Some(n), _) => n,
            (None, Some(e)) => e.value.parse().map_err(|reason| ConfigError::BadValue {
                line: e.line,
                key: e.key.clone(),
                value: e.value.clone(),
                reason,
            })?,
            (None, None) => ScenarioName::Custom,
        };
        let mut s = Scenario::preset(name);
        for e in file.iter().chain(flags).filter(|e| e.key != "scenario") {
            s.apply(e)?;
        }
        s.validate()?;
        Ok(s)
    }
}

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v
        .parse()
        .map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("must be finite".into())
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| parse_f64(s.trim())).collect()
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}
