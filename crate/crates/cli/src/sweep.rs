//! Excitation of the first ensemble at fixed probe times across a grid of
//! cross-coupling strengths.

use mixdyn::fock::ground_state;
use mixdyn::integrator::{evolve_run, EvolveConfig};
use mixdyn::model::build_generator;
use mixdyn::observables::excitations;
use mixdyn::{Error, MixParams};
use rayon::prelude::*;

use crate::csv_io::SweepRow;

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Sorted by `(eta, t_probe)`; `ne1` is NaN at probe times a stopped run
    /// never reached.
    pub rows: Vec<SweepRow>,
    /// Guard trips or numerical failures, by `eta` in grid order.
    pub stops: Vec<(f64, Error)>,
}

/// Probe rows of one eta value and the guard stop that ended it, if any.
type EtaRun = (Vec<SweepRow>, Option<Error>);

/// One run per grid value, in parallel, from the ground state. The probe
/// times replace `config.snapshot_times`.
pub fn sweep_eta(
    base: &MixParams,
    grid: &[f64],
    probe_times: &[f64],
    config: &EvolveConfig,
) -> Result<SweepOutcome, Error> {
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut probes = probe_times.to_vec();
    probes.sort_by(f64::total_cmp);
    probes.dedup();
    let mut config = config.clone();
    config.snapshot_times = probes.clone();
    config.validate()?;
    if let Some(eta) = grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} outside [0, 1]"
        )));
    }

    let results: Vec<Result<EtaRun, Error>> = grid
        .par_iter()
        .map(|&eta| {
            let mut p = *base;
            p.eta = eta;
            let gen = build_generator(&p)?;
            let run = evolve_run(&ground_state(&p), &config, &gen, &p)?;
            let rows = probes
                .iter()
                .map(|&t| {
                    let tol = 1e-9 * config.sample_interval;
                    let ne1 = run
                        .series
                        .snapshots
                        .iter()
                        .find(|(ts, _)| (ts - t).abs() <= tol)
                        .map_or(f64::NAN, |(_, rho)| excitations(rho, &p).0);
                    SweepRow {
                        eta,
                        t_probe: t,
                        ne1,
                    }
                })
                .collect();
            Ok((rows, run.stop))
        })
        .collect();

    let mut out = SweepOutcome {
        rows: Vec::new(),
        stops: Vec::new(),
    };
    for (eta, r) in grid.iter().zip(results) {
        let (rows, stop) = r?;
        out.rows.extend(rows);
        if let Some(e) = stop {
            out.stops.push((*eta, e));
        }
    }
    Ok(out)
}
