//! Time stepping of the master equation with truncation and validity guards.

use num_complex::Complex64 as C64;

use crate::error::{Error, Mode, Result};
use crate::fock::ground_state;
use crate::fock::DensityMatrix;
use crate::model::{apply_rhs, build_generator, phase, GeneratorParts, Liouvillian};
use crate::observables::{excitations, intensity, top_level_populations};
use crate::params::MixParams;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Entries of a density matrix are bounded by one in modulus; anything well
/// beyond that means the explicit scheme has gone unstable.
const BLOWUP_BOUND: f64 = 2.0;

fn diverged(rho: &DensityMatrix) -> bool {
    !rho.as_slice()
        .iter()
        .all(|v| v.re.abs() <= BLOWUP_BOUND && v.im.abs() <= BLOWUP_BOUND)
}

/// Largest cutoff tried by [`auto_cutoff`].
pub const CUTOFF_CEILING: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FixedRk4,
    /// Dormand-Prince 5(4) with local error control.
    AdaptiveEmbedded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub t_end: f64,
    /// Step of the fixed method, initial trial step of the adaptive one.
    pub dt: f64,
    pub sample_interval: f64,
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed population of the top retained level of either mode.
    pub cutoff_guard: f64,
    /// Largest allowed `<n_a> / N_a`.
    pub validity_guard: f64,
    /// Times at which the full density matrix is kept.
    pub snapshot_times: Vec<f64>,
    /// Track the smallest eigenvalue over all samples (costs one dense
    /// eigendecomposition per sample).
    pub track_min_eigenvalue: bool,
}

impl EvolveConfig {
    pub fn new(t_end: f64, dt: f64, sample_interval: f64) -> Self {
        EvolveConfig {
            t_end,
            dt,
            sample_interval,
            method: Method::FixedRk4,
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            cutoff_guard: 1e-6,
            validity_guard: 0.1,
            snapshot_times: Vec::new(),
            track_min_eigenvalue: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!(
                "t_end = {} must be finite and non-negative",
                self.t_end
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval >= self.dt) {
            return bad(format!(
                "sample_interval = {} must be at least dt = {}",
                self.sample_interval, self.dt
            ));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.cutoff_guard > 0.0 && self.validity_guard > 0.0) {
            return bad("guards must be positive".into());
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(t.is_finite() && **t >= 0.0 && **t <= self.t_end))
        {
            return bad(format!("snapshot time {t} outside [0, t_end]"));
        }
        Ok(())
    }
}

/// Default step: a fortieth of the fastest collective time scale among the
/// phase rotation, the drive, the decay and the level shifts.
pub fn default_dt(params: &MixParams) -> f64 {
    let m = [&params.mode1, &params.mode2];
    let omega_bar = m
        .iter()
        .map(|s| s.collective_rabi().abs())
        .fold(0.0, f64::max);
    let decay = m.iter().map(|s| s.gamma * s.n()).fold(0.0, f64::max);
    let shift = m.iter().map(|s| s.effective_detuning().abs()).fold(
        params.beta12().abs() * (params.mode1.n() * params.mode2.n()).sqrt(),
        f64::max,
    );
    let rates = [
        params.delta_omega.abs() / (2.0 * std::f64::consts::PI),
        omega_bar,
        decay,
        shift,
    ];
    let fastest = rates.iter().copied().fold(0.0, f64::max);
    if fastest > 0.0 {
        1.0 / (40.0 * fastest)
    } else {
        1.0 / 40.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub ne1: f64,
    pub ne2: f64,
    /// `I_mix / (N gamma)`; NaN when the ensembles are not symmetric.
    pub intensity: f64,
    /// `|tr rho - 1|`.
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_diagonal: f64,
    pub top1: f64,
    pub top2: f64,
    pub phi: f64,
}

impl SeriesRow {
    pub fn measure(rho: &DensityMatrix, t: f64, params: &MixParams) -> Self {
        let (ne1, ne2) = excitations(rho, params);
        let (top1, top2) = top_level_populations(rho, params);
        SeriesRow {
            t,
            ne1,
            ne2,
            intensity: intensity(rho, t, params).unwrap_or(f64::NAN),
            trace_error: (rho.trace() - C64::new(1.0, 0.0)).norm(),
            hermiticity_error: rho.hermiticity_error(),
            min_diagonal: rho.min_diagonal(),
            top1,
            top2,
            phi: phase(t, params),
        }
    }

    pub fn get(&self, column: Column) -> f64 {
        match column {
            Column::T => self.t,
            Column::Ne1 => self.ne1,
            Column::Ne2 => self.ne2,
            Column::Intensity => self.intensity,
            Column::TraceError => self.trace_error,
            Column::HermiticityError => self.hermiticity_error,
            Column::MinDiagonal => self.min_diagonal,
            Column::Top1 => self.top1,
            Column::Top2 => self.top2,
            Column::Phi => self.phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    T,
    Ne1,
    Ne2,
    Intensity,
    TraceError,
    HermiticityError,
    MinDiagonal,
    Top1,
    Top2,
    Phi,
}

impl Column {
    pub const ALL: [Column; 10] = [
        Column::T,
        Column::Ne1,
        Column::Ne2,
        Column::Intensity,
        Column::TraceError,
        Column::HermiticityError,
        Column::MinDiagonal,
        Column::Top1,
        Column::Top2,
        Column::Phi,
    ];

    /// Header name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Column::T => "t",
            Column::Ne1 => "Ne1",
            Column::Ne2 => "Ne2",
            Column::Intensity => "Imix_over_Ngamma",
            Column::TraceError => "trace_err",
            Column::HermiticityError => "herm_err",
            Column::MinDiagonal => "min_diag",
            Column::Top1 => "top1",
            Column::Top2 => "top2",
            Column::Phi => "phi",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Column::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    pub rows: Vec<SeriesRow>,
    /// `(t, rho(t))` for each requested snapshot time reached.
    pub snapshots: Vec<(f64, DensityMatrix)>,
    /// Smallest eigenvalue seen over the samples, when tracked.
    pub min_eigenvalue: Option<f64>,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.column(Column::T)
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(column)).collect()
    }

    /// Snapshot closest to `t`.
    pub fn snapshot(&self, t: f64) -> Option<&DensityMatrix> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|(_, rho)| rho)
    }
}

/// Result of a run that may have been stopped by a guard; `series` holds
/// everything sampled up to the stop.
#[derive(Debug, Clone)]
pub struct Run {
    pub series: TimeSeries,
    pub stop: Option<Error>,
}

impl Run {
    pub fn into_result(self) -> Result<TimeSeries> {
        match self.stop {
            None => Ok(self.series),
            Some(e) => Err(e),
        }
    }
}

/// One classical RK4 step evaluated term by term with [`apply_rhs`],
/// followed by re-hermitization.
pub fn step(
    rho: &DensityMatrix,
    t: f64,
    dt: f64,
    gen: &GeneratorParts,
    params: &MixParams,
) -> Result<DensityMatrix> {
    let k1 = apply_rhs(rho, t, gen, params)?;
    let k2 = apply_rhs(&rho.combine(1.0, &k1, 0.5 * dt)?, t + 0.5 * dt, gen, params)?;
    let k3 = apply_rhs(&rho.combine(1.0, &k2, 0.5 * dt)?, t + 0.5 * dt, gen, params)?;
    let k4 = apply_rhs(&rho.combine(1.0, &k3, dt)?, t + dt, gen, params)?;
    let mut out = rho.clone();
    {
        let o = out.as_mut_slice();
        let (a, b, c, d) = (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
        for i in 0..o.len() {
            o[i] += dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
        }
    }
    out.rehermitize();
    if diverged(&out) {
        return Err(Error::NumericalBlowup { t: t + dt });
    }
    Ok(out)
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Stepper over the compiled generator with reusable work buffers.
pub struct Propagator {
    liouvillian: Liouvillian,
    params: MixParams,
    stages: Vec<Vec<C64>>,
    work: Vec<C64>,
}

impl Propagator {
    pub fn new(gen: &GeneratorParts, params: &MixParams) -> Self {
        let n2 = gen.dim() * gen.dim();
        Propagator {
            liouvillian: Liouvillian::compile(gen),
            params: *params,
            stages: vec![vec![ZERO; n2]; 7],
            work: vec![ZERO; n2],
        }
    }

    pub fn dim(&self) -> usize {
        self.liouvillian.dim()
    }

    fn rhs(&mut self, stage: usize, t: f64, from_work: bool, x: &[C64]) {
        let phi = phase(t, &self.params);
        let src = if from_work { &self.work[..] } else { x };
        self.liouvillian
            .apply_into(src, phi, &mut self.stages[stage]);
    }

    fn stage_input(&mut self, x: &[C64], coeffs: &[(usize, f64)]) {
        self.work.copy_from_slice(x);
        for &(s, c) in coeffs {
            if c == 0.0 {
                continue;
            }
            for (w, k) in self.work.iter_mut().zip(&self.stages[s]) {
                *w += c * k;
            }
        }
    }

    /// Classical RK4 step in place.
    pub fn rk4_step(&mut self, rho: &mut DensityMatrix, t: f64, dt: f64) -> Result<()> {
        let x = rho.as_slice().to_vec();
        self.rhs(0, t, false, &x);
        self.stage_input(&x, &[(0, 0.5 * dt)]);
        self.rhs(1, t + 0.5 * dt, true, &x);
        self.stage_input(&x, &[(1, 0.5 * dt)]);
        self.rhs(2, t + 0.5 * dt, true, &x);
        self.stage_input(&x, &[(2, dt)]);
        self.rhs(3, t + dt, true, &x);
        let o = rho.as_mut_slice();
        let [k1, k2, k3, k4] = [
            &self.stages[0],
            &self.stages[1],
            &self.stages[2],
            &self.stages[3],
        ];
        for i in 0..o.len() {
            o[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        rho.rehermitize();
        if diverged(rho) {
            return Err(Error::NumericalBlowup { t: t + dt });
        }
        Ok(())
    }

    /// One trial Dormand-Prince step. Returns the fifth-order solution and the
    /// scaled error norm (accept when `<= 1`).
    fn dp_trial(&mut self, x: &[C64], t: f64, h: f64, rel: f64, abs: f64) -> (Vec<C64>, f64) {
        self.rhs(0, t, false, x);
        for s in 1..7 {
            let coeffs: Vec<(usize, f64)> = (0..s).map(|j| (j, h * DP_A[s][j])).collect();
            self.stage_input(x, &coeffs);
            self.rhs(s, t + DP_C[s] * h, true, x);
        }
        let mut y = x.to_vec();
        let mut err: f64 = 0.0;
        for i in 0..x.len() {
            let mut d5 = ZERO;
            let mut d4 = ZERO;
            for s in 0..7 {
                d5 += DP_B5[s] * self.stages[s][i];
                d4 += DP_B4[s] * self.stages[s][i];
            }
            y[i] += h * d5;
            let scale = abs + rel * x[i].norm().max(y[i].norm());
            err = err.max((h * (d5 - d4)).norm() / scale);
        }
        (y, err)
    }

    /// Integrates from `t` to `t + span` with error control, starting from the
    /// trial step `h` (updated in place for the next call).
    pub fn adaptive_advance(
        &mut self,
        rho: &mut DensityMatrix,
        t: f64,
        span: f64,
        h: &mut f64,
        rel: f64,
        abs: f64,
    ) -> Result<()> {
        let end = t + span;
        let mut now = t;
        let min_step = 1e-14 * end.abs().max(span).max(1.0);
        while now < end {
            let remaining = end - now;
            let last = *h >= remaining;
            let trial = if last { remaining } else { *h };
            let x = rho.as_slice().to_vec();
            let (y, err) = self.dp_trial(&x, now, trial, rel, abs);
            if !err.is_finite() {
                return Err(Error::NumericalBlowup { t: now + trial });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                rho.as_mut_slice().copy_from_slice(&y);
                rho.rehermitize();
                if diverged(rho) {
                    return Err(Error::NumericalBlowup { t: now + trial });
                }
                now = if last { end } else { now + trial };
                if !last || factor < 1.0 {
                    *h = trial * factor;
                }
            } else {
                *h = trial * factor;
                if *h < min_step {
                    return Err(Error::NumericalBlowup { t: now });
                }
            }
        }
        Ok(())
    }
}

fn guard(row: &SeriesRow, config: &EvolveConfig, params: &MixParams) -> Option<Error> {
    let t = row.t;
    for (mode, top, ne) in [
        (Mode::One, row.top1, row.ne1),
        (Mode::Two, row.top2, row.ne2),
    ] {
        if !(top.is_finite() && ne.is_finite()) {
            return Some(Error::NumericalBlowup { t });
        }
        if top > config.cutoff_guard {
            return Some(Error::CutoffExceeded { mode, t });
        }
        if ne / params.mode(mode).n() > config.validity_guard {
            return Some(Error::ValidityViolated { mode, t });
        }
    }
    None
}

/// Stop times of a run: the sample grid `k * sample_interval`, the end time
/// and the snapshot times, sorted and deduplicated. The flag marks sample
/// times.
pub(crate) fn stop_times(config: &EvolveConfig) -> Vec<(f64, bool, bool)> {
    let mut stops: Vec<(f64, bool, bool)> = Vec::new();
    let n = (config.t_end / config.sample_interval * (1.0 + 1e-12)).floor() as usize;
    for k in 0..=n {
        stops.push((
            (k as f64 * config.sample_interval).min(config.t_end),
            true,
            false,
        ));
    }
    let tol = 1e-9 * config.sample_interval;
    if (stops.last().map_or(-1.0, |s| s.0) - config.t_end).abs() > tol {
        stops.push((config.t_end, true, false));
    }
    for &ts in &config.snapshot_times {
        match stops.iter_mut().find(|s| (s.0 - ts).abs() <= tol) {
            Some(s) => s.2 = true,
            None => stops.push((ts, false, true)),
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    stops
}

/// Number and length of equal fixed steps covering `span` with steps no
/// longer than `dt`.
pub(crate) fn substeps(span: f64, dt: f64) -> (usize, f64) {
    let steps = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, span / steps as f64)
}

/// Integrates `rho0` and samples the observables. Guard trips end the run
/// early and are reported in [`Run::stop`] together with the samples taken so
/// far, including the offending one.
pub fn evolve_run(
    rho0: &DensityMatrix,
    config: &EvolveConfig,
    gen: &GeneratorParts,
    params: &MixParams,
) -> Result<Run> {
    config.validate()?;
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: rho0.dim(),
        });
    }
    let mut prop = Propagator::new(gen, params);
    let mut rho = rho0.clone();
    let mut series = TimeSeries::default();
    let mut h = config.dt;
    let mut t = 0.0;

    for (ts, sample, snap) in stop_times(config) {
        let span = ts - t;
        if span > 0.0 {
            let advanced = match config.method {
                Method::FixedRk4 => {
                    let (steps, dt) = substeps(span, config.dt);
                    let mut res = Ok(());
                    for k in 0..steps {
                        res = prop.rk4_step(&mut rho, t + k as f64 * dt, dt);
                        if res.is_err() {
                            break;
                        }
                    }
                    res
                }
                Method::AdaptiveEmbedded => {
                    prop.adaptive_advance(&mut rho, t, span, &mut h, config.rel_tol, config.abs_tol)
                }
            };
            if let Err(e) = advanced {
                return Ok(Run {
                    series,
                    stop: Some(e),
                });
            }
            t = ts;
        }
        if snap {
            series.snapshots.push((ts, rho.clone()));
        }
        if sample {
            let row = SeriesRow::measure(&rho, ts, params);
            series.rows.push(row);
            if config.track_min_eigenvalue {
                let ev = rho.min_eigenvalue();
                series.min_eigenvalue = Some(series.min_eigenvalue.map_or(ev, |m: f64| m.min(ev)));
            }
            if let Some(e) = guard(&row, config, params) {
                return Ok(Run {
                    series,
                    stop: Some(e),
                });
            }
        }
    }
    Ok(Run { series, stop: None })
}

/// Integrates `rho0` to `config.t_end`, failing on the first guard trip.
pub fn evolve(
    rho0: &DensityMatrix,
    config: &EvolveConfig,
    gen: &GeneratorParts,
    params: &MixParams,
) -> Result<TimeSeries> {
    evolve_run(rho0, config, gen, params)?.into_result()
}

/// Smallest cutoffs `(M1, M2)` for which a pilot run of `config` from the
/// ground state keeps both top-level populations below the cutoff guard.
///
/// Starts at 4 (or `N` if smaller) and doubles the cutoff of whichever mode
/// trips the guard, up to [`CUTOFF_CEILING`].
pub fn auto_cutoff(params: &MixParams, config: &EvolveConfig) -> Result<(usize, usize)> {
    let start = |atoms: usize| 4.min(atoms);
    let mut cut = [start(params.mode1.atoms), start(params.mode2.atoms)];
    loop {
        let p = params.with_cutoffs(cut[0], cut[1]);
        let gen = build_generator(&p)?;
        match evolve(&ground_state(&p), config, &gen, &p) {
            Ok(_) => return Ok((cut[0], cut[1])),
            Err(Error::CutoffExceeded { mode, .. }) => {
                let i = mode.index();
                let atoms = p.mode(mode).atoms;
                if cut[i] >= CUTOFF_CEILING || cut[i] >= atoms {
                    return Err(Error::CutoffSearchFailed {
                        ceiling: CUTOFF_CEILING.min(atoms),
                    });
                }
                cut[i] = (2 * cut[i]).min(CUTOFF_CEILING).min(atoms);
            }
            Err(e) => return Err(e),
        }
    }
}
