//! Runs a scenario and writes its CSV files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use mixdyn::fock::ground_state;
use mixdyn::integrator::{auto_cutoff, evolve_run, Run};
use mixdyn::model::build_generator;
use mixdyn::observables::{excitation_distribution, poisson_distance};
use mixdyn::oracles::{dicke_evolve, moment_evolve, SpinSpace};
use mixdyn::{Error, Mode};
use thiserror::Error as ThisError;

use crate::config::ConfigError;
use crate::csv_io::{
    format_float, write_distribution, write_series, write_sweep, DistributionRow, UNITS_LINE,
};
use crate::scenario::{CutoffSpec, Oracle, RunSpec, Scenario};
use crate::sweep::sweep_eta;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CUTOFF_EXCEEDED: i32 = 3;
    pub const VALIDITY_VIOLATED: i32 = 4;
    pub const NUMERICAL: i32 = 5;
}

#[derive(Debug, ThisError)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => exit::USAGE,
            AppError::Sim(e) => sim_exit_code(e),
            AppError::Io { .. } => exit::FAILURE,
        }
    }
}

pub fn sim_exit_code(e: &Error) -> i32 {
    match e {
        Error::CutoffExceeded { .. } | Error::CutoffSearchFailed { .. } => exit::CUTOFF_EXCEEDED,
        Error::ValidityViolated { .. } => exit::VALIDITY_VIOLATED,
        Error::NumericalBlowup { .. } => exit::NUMERICAL,
        Error::InvalidParameter(_) | Error::NotLinearModel | Error::AsymmetricParams => exit::USAGE,
        _ => exit::FAILURE,
    }
}

/// Files written and the runs that stopped early.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub stops: Vec<(String, Error)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.stops
            .first()
            .map_or(exit::OK, |(_, e)| sim_exit_code(e))
    }
}

/// `dir/stem[_label][.suffix].ext`.
pub fn derived_path(base: &Path, label: Option<&str>, suffix: Option<&str>) -> PathBuf {
    let stem = base
        .file_stem()
        .map_or("out".into(), |s| s.to_string_lossy().into_owned());
    let ext = base
        .extension()
        .map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    let mut name = stem;
    if let Some(l) = label {
        name.push('_');
        name.push_str(l);
    }
    if let Some(s) = suffix {
        name.push('.');
        name.push_str(s);
    }
    name.push('.');
    name.push_str(&ext);
    base.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| AppError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| AppError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> AppError + '_ {
    move |source| AppError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn echo(title: &str, scenario: &Scenario) -> Vec<String> {
    let mut c = vec![format!("mixdyn {title}"), UNITS_LINE.to_string()];
    c.extend(
        scenario
            .entries()
            .iter()
            .map(|e| format!("{} = {}", e.key, e.value)),
    );
    c
}

fn stop_line(stop: Option<&Error>) -> String {
    format!(
        "stop: {}",
        stop.map_or("none".to_string(), |e| e.to_string())
    )
}

/// Runs every series or the sweep of `scenario`, writing progress to `log`.
pub fn execute(scenario: &Scenario, log: &mut dyn Write) -> Result<Outcome, AppError> {
    scenario.validate()?;
    let mut outcome = Outcome::default();
    if scenario.is_sweep() {
        run_sweep(scenario, log, &mut outcome)?;
    } else {
        for spec in scenario.series_runs() {
            run_series(scenario, spec, log, &mut outcome)?;
        }
    }
    Ok(outcome)
}

fn run_sweep(
    scenario: &Scenario,
    log: &mut dyn Write,
    outcome: &mut Outcome,
) -> Result<(), AppError> {
    let params = scenario.run_params(scenario.eta_grid[0], None);
    params.validate()?;
    let config = scenario.evolve_config(&params);
    let _ = writeln!(
        log,
        "sweep over {} values of eta, dim {}, dt {}",
        scenario.eta_grid.len(),
        params.dim(),
        config.dt
    );
    let sweep = sweep_eta(
        &params,
        &scenario.eta_grid,
        &scenario.probe_times(),
        &config,
    )?;
    let mut comments = echo("eta sweep", scenario);
    comments.push(format!("dt_used: {}", config.dt));
    for (eta, e) in &sweep.stops {
        comments.push(format!("stop: eta = {eta}: {e}"));
    }
    if sweep.stops.is_empty() {
        comments.push(stop_line(None));
    }
    let path = scenario.output.clone();
    let mut w = create(&path)?;
    write_sweep(&mut w, &comments, &sweep.rows).map_err(io_at(&path))?;
    w.flush().map_err(io_at(&path))?;
    let _ = writeln!(log, "wrote {}", path.display());
    outcome.files.push(path);
    for (eta, e) in sweep.stops {
        let _ = writeln!(log, "eta = {eta}: {e}");
        outcome.stops.push((format!("eta{eta}"), e));
    }
    Ok(())
}

fn run_series(
    scenario: &Scenario,
    mut spec: RunSpec,
    log: &mut dyn Write,
    outcome: &mut Outcome,
) -> Result<(), AppError> {
    let label = spec.label.clone();
    let name = label.clone().unwrap_or_else(|| scenario.name.to_string());
    spec.params.validate()?;
    if scenario.cutoff == CutoffSpec::Auto {
        let pilot = scenario.evolve_config(&spec.params);
        let (c1, c2) = auto_cutoff(&spec.params, &pilot)?;
        spec.params = spec.params.with_cutoffs(c1, c2);
        let _ = writeln!(log, "{name}: cutoffs ({c1}, {c2})");
    }
    let mut run_scenario = scenario.for_run(&spec);
    if scenario.cutoff == CutoffSpec::Auto {
        run_scenario.cutoff = CutoffSpec::Fixed(spec.params.mode1.cutoff, spec.params.mode2.cutoff);
    }
    let p = spec.params;
    let config = scenario.evolve_config(&p);
    let _ = writeln!(
        log,
        "{name}: dim {}, dt {}, t_end {}",
        p.dim(),
        config.dt,
        config.t_end
    );
    let gen = build_generator(&p)?;
    let Run { series, stop } = evolve_run(&ground_state(&p), &config, &gen, &p)?;

    let mut comments = echo("time series", &run_scenario);
    comments.push(format!("dt_used: {}", config.dt));
    if let Some(m) = series.min_eigenvalue {
        comments.push(format!("min_eigenvalue_seen: {}", format_float(m)));
    }
    comments.push(stop_line(stop.as_ref()));
    let path = derived_path(&scenario.output, label.as_deref(), None);
    let mut w = create(&path)?;
    write_series(&mut w, &comments, &series.rows).map_err(io_at(&path))?;
    w.flush().map_err(io_at(&path))?;
    let _ = writeln!(log, "wrote {}", path.display());
    outcome.files.push(path);

    if scenario.distribution {
        let mut rows = Vec::new();
        let mut dist_comments = echo("excitation distribution of ensemble 1", &run_scenario);
        for (t, rho) in &series.snapshots {
            let d = excitation_distribution(rho, Mode::One, &p);
            dist_comments.push(format!(
                "probe t = {t}: mean {}, poisson_distance {}",
                format_float(d.mean()),
                format_float(poisson_distance(&d))
            ));
            rows.extend(
                d.probabilities
                    .iter()
                    .enumerate()
                    .map(|(i, &pr)| DistributionRow {
                        t_probe: *t,
                        i,
                        p: pr,
                    }),
            );
        }
        dist_comments.push(stop_line(stop.as_ref()));
        let path = derived_path(&scenario.output, label.as_deref(), Some("dist"));
        let mut w = create(&path)?;
        write_distribution(&mut w, &dist_comments, &rows).map_err(io_at(&path))?;
        w.flush().map_err(io_at(&path))?;
        let _ = writeln!(log, "wrote {}", path.display());
        outcome.files.push(path);
    }

    if let Some(oracle) = scenario.oracle {
        let path = derived_path(
            &scenario.output,
            label.as_deref(),
            Some(&format!("oracle-{}", oracle.as_str())),
        );
        let (ref1, ref2): (Vec<f64>, Vec<f64>) = match oracle {
            Oracle::Moments => moment_evolve(&p, config.t_end, config.dt, config.sample_interval)?
                .iter()
                .map(|s| (s.ne1, s.ne2))
                .unzip(),
            Oracle::Dicke => {
                let (n1, n2) = (p.mode1.atoms, p.mode2.atoms);
                let space = match scenario.dicke_levels {
                    Some(k) => SpinSpace::truncated(n1, n2, k.min(n1), k.min(n2))?,
                    None => SpinSpace::full(n1, n2)?,
                };
                dicke_evolve(&space, &p, config.t_end, config.dt, config.sample_interval)?
                    .iter()
                    .map(|r| (r.ne1, r.ne2))
                    .unzip()
            }
        };
        let mut max = [0.0f64; 2];
        let rows: Vec<[f64; 7]> = series
            .rows
            .iter()
            .zip(ref1.iter().zip(&ref2))
            .map(|(r, (&o1, &o2))| {
                let d = [(r.ne1 - o1).abs(), (r.ne2 - o2).abs()];
                max[0] = max[0].max(d[0]);
                max[1] = max[1].max(d[1]);
                [r.t, r.ne1, r.ne2, o1, o2, d[0], d[1]]
            })
            .collect();
        let mut c = echo(
            &format!("oracle comparison ({})", oracle.as_str()),
            &run_scenario,
        );
        c.push(format!("max_abs_diff_Ne1: {}", format_float(max[0])));
        c.push(format!("max_abs_diff_Ne2: {}", format_float(max[1])));
        let mut w = create(&path)?;
        crate::csv_io::write_matrix(
            &mut w,
            &c,
            &[
                "t",
                "Ne1",
                "Ne2",
                "Ne1_oracle",
                "Ne2_oracle",
                "abs_diff_Ne1",
                "abs_diff_Ne2",
            ],
            &rows,
        )
        .map_err(io_at(&path))?;
        w.flush().map_err(io_at(&path))?;
        let _ = writeln!(
            log,
            "{name}: {} oracle max |dNe1| = {:e}, max |dNe2| = {:e}; wrote {}",
            oracle.as_str(),
            max[0],
            max[1],
            path.display()
        );
        outcome.files.push(path);
    }

    if let Some(e) = stop {
        let _ = writeln!(log, "{name}: {e}");
        outcome.stops.push((name, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Entry;
    use crate::csv_io::{read_distribution, read_series};
    use crate::scenario::ScenarioName;

    fn tmpdir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("mixdyn-app-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    fn quick(name: ScenarioName, dir: &Path, extra: &[(&str, &str)]) -> Scenario {
        let mut flags = vec![
            Entry::new("atoms", "6"),
            Entry::new("cutoff", "3"),
            Entry::new("omega", "1"),
            Entry::new("beta", "1"),
            Entry::new("t_end", "0.2"),
            Entry::new("dt", "1e-3"),
            Entry::new("sample_interval", "0.02"),
            Entry::new("output", dir.join("out.csv").display().to_string()),
        ];
        flags.extend(extra.iter().map(|(k, v)| Entry::new(*k, *v)));
        Scenario::build(Some(name), &[], &flags).unwrap()
    }

    #[test]
    fn derived_paths() {
        let b = Path::new("res/fig2.csv");
        assert_eq!(derived_path(b, None, None), PathBuf::from("res/fig2.csv"));
        assert_eq!(
            derived_path(b, Some("eta0.5_N100"), Some("dist")),
            PathBuf::from("res/fig2_eta0.5_N100.dist.csv")
        );
        assert_eq!(
            derived_path(Path::new("x"), None, Some("oracle-dicke")),
            PathBuf::from("x.oracle-dicke.csv")
        );
    }

    #[test]
    fn undriven_run_stays_in_the_ground_state() {
        let dir = tmpdir("zero");
        let s = quick(
            ScenarioName::Custom,
            &dir,
            &[("omega1", "0"), ("omega2", "0"), ("eta", "0")],
        );
        let out = execute(&s, &mut io::sink()).unwrap();
        assert_eq!(out.exit_code(), exit::OK);
        let table = read_series(&std::fs::read_to_string(&out.files[0]).unwrap()).unwrap();
        assert_eq!(table.rows.len(), 11);
        assert!(table.rows.iter().all(|r| r.ne1 == 0.0 && r.ne2 == 0.0));
        assert_eq!(table.comment_value("scenario"), Some("custom"));
        assert!(table.comments.contains(&"stop: none".to_string()));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn identical_inputs_give_identical_bytes() {
        let dir = tmpdir("det");
        let s = quick(ScenarioName::Fig5, &dir, &[]);
        let first: Vec<Vec<u8>> = execute(&s, &mut io::sink())
            .unwrap()
            .files
            .iter()
            .map(|f| std::fs::read(f).unwrap())
            .collect();
        let second = execute(&s, &mut io::sink()).unwrap();
        assert_eq!(second.files.len(), 4);
        for (f, bytes) in second.files.iter().zip(&first) {
            assert_eq!(&std::fs::read(f).unwrap(), bytes, "{}", f.display());
        }
        let d = read_distribution(&std::fs::read_to_string(&second.files[1]).unwrap()).unwrap();
        let total: f64 = d.rows.iter().map(|r| r.p).sum();
        assert!((total - 1.0).abs() < 1e-10);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn guard_trip_sets_its_exit_code_and_keeps_the_partial_series() {
        let dir = tmpdir("guard");
        let s = quick(ScenarioName::Custom, &dir, &[("validity_guard", "1e-4")]);
        let out = execute(&s, &mut io::sink()).unwrap();
        assert_eq!(out.exit_code(), exit::VALIDITY_VIOLATED);
        let table = read_series(&std::fs::read_to_string(&out.files[0]).unwrap()).unwrap();
        assert!(table.rows.len() < 11 && !table.rows.is_empty());

        let s = quick(
            ScenarioName::Custom,
            &dir,
            &[("cutoff", "1"), ("omega", "5")],
        );
        let out = execute(&s, &mut io::sink()).unwrap();
        assert_eq!(out.exit_code(), exit::CUTOFF_EXCEEDED);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn oracle_reports_are_written() {
        let dir = tmpdir("oracle");
        let s = quick(
            ScenarioName::Custom,
            &dir,
            &[
                ("order", "0"),
                ("number_term", "expanded"),
                ("oracle", "moments"),
                ("cutoff", "6"),
            ],
        );
        let out = execute(&s, &mut io::sink()).unwrap();
        let report = std::fs::read_to_string(&out.files[1]).unwrap();
        assert!(report.contains("max_abs_diff_Ne1"));

        let s = quick(ScenarioName::Custom, &dir, &[("oracle", "dicke")]);
        let out = execute(&s, &mut io::sink()).unwrap();
        assert!(out.files[1]
            .to_string_lossy()
            .ends_with("out.oracle-dicke.csv"));

        let s = quick(ScenarioName::Custom, &dir, &[("oracle", "moments")]);
        let err = execute(&s, &mut io::sink()).unwrap_err();
        assert_eq!(err.exit_code(), exit::USAGE);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
