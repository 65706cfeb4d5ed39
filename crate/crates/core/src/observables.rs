//! Quantities extracted from density matrices and sampled time series.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Mode, Result};
use crate::fock::{DensityMatrix, FockBasis};
use crate::model::phase;
use crate::params::MixParams;

/// Minimum number of samples for the signal-analysis routines.
pub const MIN_WINDOW_SAMPLES: usize = 32;

/// Mean excitation numbers `(<a1†a1>, <a2†a2>)`.
///
/// Panics if `rho` does not live on the space of `params`.
pub fn excitations(rho: &DensityMatrix, params: &MixParams) -> (f64, f64) {
    let basis = FockBasis::of(params);
    assert_eq!(rho.dim(), basis.dim(), "density matrix dimension");
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    for (k, (m1, m2)) in basis.levels().enumerate() {
        let p = rho.get(k, k).re;
        n1 += m1 as f64 * p;
        n2 += m2 as f64 * p;
    }
    (n1, n2)
}

/// Population of the highest retained Fock level of each mode.
pub fn top_level_populations(rho: &DensityMatrix, params: &MixParams) -> (f64, f64) {
    let basis = FockBasis::of(params);
    let mut top1 = 0.0;
    let mut top2 = 0.0;
    for (k, (m1, m2)) in basis.levels().enumerate() {
        let p = rho.get(k, k).re;
        if m1 == basis.cutoff1 {
            top1 += p;
        }
        if m2 == basis.cutoff2 {
            top2 += p;
        }
    }
    (top1, top2)
}

/// Scattered intensity `I_mix / (N gamma)` before discarding the imaginary
/// part, which vanishes for Hermitian `rho`.
pub fn intensity_complex(rho: &DensityMatrix, t: f64, params: &MixParams) -> Result<C64> {
    if params.mode1.atoms != params.mode2.atoms || params.mode1.gamma != params.mode2.gamma {
        return Err(Error::AsymmetricParams);
    }
    let basis = FockBasis::of(params);
    let (n1, n2) = excitations(rho, params);
    // sum sqrt(m1) sqrt(m2+1) <m1-1, m2+1| rho |m1, m2>
    let mut down_up = C64::new(0.0, 0.0);
    // sum sqrt(m1+1) sqrt(m2) <m1+1, m2-1| rho |m1, m2>
    let mut up_down = C64::new(0.0, 0.0);
    for (k, (m1, m2)) in basis.levels().enumerate() {
        if m1 >= 1 && m2 < basis.cutoff2 {
            let row = basis.index(m1 - 1, m2 + 1)?;
            down_up += ((m1 * (m2 + 1)) as f64).sqrt() * rho.get(row, k);
        }
        if m1 < basis.cutoff1 && m2 >= 1 {
            let row = basis.index(m1 + 1, m2 - 1)?;
            up_down += (((m1 + 1) * m2) as f64).sqrt() * rho.get(row, k);
        }
    }
    let e = C64::from_polar(1.0, phase(t, params));
    Ok(C64::new(n1 + n2, 0.0) + params.eta * (e.conj() * down_up + e * up_down))
}

/// Scattered intensity `I_mix / (N gamma)` for equal atom numbers and decay
/// rates.
pub fn intensity(rho: &DensityMatrix, t: f64, params: &MixParams) -> Result<f64> {
    let v = intensity_complex(rho, t, params)?;
    debug_assert!(
        v.im.abs() <= 1e-10 * v.re.abs().max(1.0) || rho.hermiticity_error() > 1e-12,
        "intensity has imaginary residue {}",
        v.im
    );
    Ok(v.re)
}

/// Marginal distribution of the excitation number of one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationDistribution {
    pub mode: Mode,
    /// `p[i]` is the probability of `i` excitations.
    pub probabilities: Vec<f64>,
}

impl ExcitationDistribution {
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

pub fn excitation_distribution(
    rho: &DensityMatrix,
    mode: Mode,
    params: &MixParams,
) -> ExcitationDistribution {
    let basis = FockBasis::of(params);
    assert_eq!(rho.dim(), basis.dim(), "density matrix dimension");
    let mut probabilities = vec![0.0; basis.cutoff(mode) + 1];
    for (k, (m1, m2)) in basis.levels().enumerate() {
        let i = match mode {
            Mode::One => m1,
            Mode::Two => m2,
        };
        probabilities[i] += rho.get(k, k).re;
    }
    ExcitationDistribution {
        mode,
        probabilities,
    }
}

/// Poisson law with the given mean on `0..levels`, renormalized.
pub fn truncated_poisson(mean: f64, levels: usize) -> Vec<f64> {
    let mut q = Vec::with_capacity(levels);
    let mut term = 1.0;
    for i in 0..levels {
        if i > 0 {
            term *= mean / i as f64;
        }
        q.push(term);
    }
    let total: f64 = q.iter().sum();
    q.iter().map(|v| v / total).collect()
}

fn truncated_mean(rate: f64, levels: usize) -> f64 {
    truncated_poisson(rate, levels)
        .iter()
        .enumerate()
        .map(|(i, q)| i as f64 * q)
        .sum()
}

/// Rate of the truncated Poisson law on `0..levels` whose mean is `mean`.
///
/// The truncated mean grows monotonically with the rate, so bisection
/// converges. Means at or beyond the top level saturate the search.
pub fn matched_poisson_rate(mean: f64, levels: usize) -> f64 {
    if mean <= 0.0 || levels < 2 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = mean.max(1.0);
    let mut grow = 0;
    while truncated_mean(hi, levels) < mean && grow < 200 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if truncated_mean(mid, levels) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Total-variation distance to the Poisson law truncated and renormalized to
/// the same levels, with its rate chosen so that the truncated law has the
/// same mean as `dist`.
pub fn poisson_distance(dist: &ExcitationDistribution) -> f64 {
    let levels = dist.probabilities.len();
    let rate = matched_poisson_rate(dist.mean().max(0.0), levels);
    let q = truncated_poisson(rate, levels);
    0.5 * dist
        .probabilities
        .iter()
        .zip(&q)
        .map(|(p, q)| (p - q).abs())
        .sum::<f64>()
}

/// Peak of the discrete spectrum of a sampled signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    /// Angular frequency of the peak bin; zero when the signal is constant.
    pub omega: f64,
    /// Half the peak-to-trough excursion in the window.
    pub amplitude: f64,
    /// Angular width of one frequency bin.
    pub resolution: f64,
}

fn window_slice<'a>(
    times: &[f64],
    values: &'a [f64],
    window: (f64, f64),
) -> Result<(&'a [f64], f64)> {
    let (ta, tb) = window;
    let slack = 1e-9 * (tb - ta).abs().max(1e-300);
    let lo = times.partition_point(|&t| t < ta - slack);
    let hi = times.partition_point(|&t| t <= tb + slack);
    let n = hi.saturating_sub(lo);
    if n < MIN_WINDOW_SAMPLES {
        return Err(Error::WindowTooShort {
            found: n,
            needed: MIN_WINDOW_SAMPLES,
        });
    }
    let spacing = (times[hi - 1] - times[lo]) / (n - 1) as f64;
    Ok((&values[lo..hi], spacing))
}

fn detrended(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// Half of `max - min` over the window.
pub fn oscillation_amplitude(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    let (x, _) = window_slice(times, values, window)?;
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(0.5 * (max - min))
}

/// Zero-padding factor of the spectral estimate.
const PAD: usize = 8;

/// Dominant angular frequency of a uniformly sampled signal over `window`,
/// from the strongest non-zero peak of the tapered, mean-subtracted DFT,
/// refined below the bin spacing.
pub fn dominant_frequency(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<SpectralPeak> {
    let (x, spacing) = window_slice(times, values, window)?;
    let n = x.len();
    let resolution = 2.0 * std::f64::consts::PI / (n as f64 * spacing);
    let amplitude = oscillation_amplitude(times, values, window)?;
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    if amplitude <= 1e-14 * scale {
        return Ok(SpectralPeak {
            omega: 0.0,
            amplitude: 0.0,
            resolution,
        });
    }

    // Hann taper plus zero padding, then a parabola through the log power
    // around the maximum: the estimate no longer hops between neighbouring
    // bins as the phase of the trace changes
    let padded = n * PAD;
    let mut buf = vec![C64::new(0.0, 0.0); padded];
    let taper =
        |i: usize| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
    for (i, v) in detrended(x).into_iter().enumerate() {
        buf[i] = C64::new(v * taper(i), 0.0);
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let power: Vec<f64> = buf[..=padded / 2].iter().map(|v| v.norm_sqr()).collect();
    // skip the main lobe of the zero-frequency residue left by detrending
    let first = 2 * PAD;
    let (k, _) = power[first..padded / 2]
        .iter()
        .enumerate()
        .map(|(i, &v)| (i + first, v))
        .fold((0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    let (l, c, r) = (power[k - 1].ln(), power[k].ln(), power[k + 1].ln());
    let curvature = l - 2.0 * c + r;
    let shift = if curvature < 0.0 {
        0.5 * (l - r) / curvature
    } else {
        0.0
    };
    Ok(SpectralPeak {
        omega: (k as f64 + shift.clamp(-0.5, 0.5)) * resolution / PAD as f64,
        amplitude,
        resolution,
    })
}

/// Lag maximizing the normalized cross-correlation of two traces over the
/// window. A positive lag means the second trace follows the first.
///
/// Lags up to a quarter of the window are searched; among equally good lags
/// the smallest in magnitude wins.
pub fn synchronization_lag(
    times: &[f64],
    first: &[f64],
    second: &[f64],
    window: (f64, f64),
) -> Result<f64> {
    let (x, spacing) = window_slice(times, first, window)?;
    let (y, _) = window_slice(times, second, window)?;
    let x = detrended(x);
    let y = detrended(y);
    let n = x.len();
    let max_lag = (n / 4) as isize;

    let corr = |lag: isize| -> f64 {
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for i in 0..n as isize {
            let j = i + lag;
            if j < 0 || j >= n as isize {
                continue;
            }
            let (a, b) = (x[i as usize], y[j as usize]);
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        if sxx == 0.0 || syy == 0.0 {
            0.0
        } else {
            sxy / (sxx * syy).sqrt()
        }
    };

    let mut best_lag = 0isize;
    let mut best = corr(0);
    for mag in 1..=max_lag {
        for lag in [-mag, mag] {
            let c = corr(lag);
            if c > best + 1e-12 {
                best = c;
                best_lag = lag;
            }
        }
    }
    Ok(best_lag as f64 * spacing)
}
