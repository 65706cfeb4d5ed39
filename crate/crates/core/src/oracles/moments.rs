//! Closed first- and second-moment equations of the linear model.
//!
//! With `a = (a1, a2)` the model is
//!
//! ```text
//! H = a† h a + f·(a + a†),   h = [[D1, G e^{i phi}], [G e^{-i phi}, D2]]
//! L = [[g1, C e^{i phi}], [C e^{-i phi}, g2]]     (collective rate matrix)
//! ```
//!
//! with `D = Delta + (N - 1) beta`, `f = Omega sqrt(N)`, `G = beta12 sqrt(N1 N2)`,
//! `g = gamma N` and `C = eta gamma12 sqrt(N1 N2)`. Writing `A = i h + L`,
//!
//! ```text
//! d<a>/dt      = -A <a> - i f
//! d<a_k† a_l>  = (-A* N - N A^T + i f* <a>^T - i <a>* f^T)_kl
//! d<a_k a_l>   = (-A M - M A^T - i f <a>^T - i <a> f^T)_kl
//! ```
//!
//! See `docs/moment_equations.md` for the derivation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::integrator::{stop_times, substeps, EvolveConfig};
use crate::model::phase;
use crate::params::{HpOrder, MixParams, NumberTerm};

type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// First and second moments of the two modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    /// `<a_k>`.
    pub a: [C64; 2],
    /// `<a_k† a_l>`, Hermitian.
    pub n: Mat2,
    /// `<a_k a_l>`, symmetric.
    pub m: Mat2,
}

impl MomentState {
    pub fn vacuum() -> Self {
        MomentState {
            a: [ZERO; 2],
            n: [[ZERO; 2]; 2],
            m: [[ZERO; 2]; 2],
        }
    }

    pub fn excitations(&self) -> (f64, f64) {
        (self.n[0][0].re, self.n[1][1].re)
    }

    /// `I_mix / (N gamma)` at phase `phi`.
    pub fn intensity(&self, phi: f64, eta: f64) -> f64 {
        let e = C64::from_polar(1.0, phi);
        (self.n[0][0] + self.n[1][1] + eta * (e.conj() * self.n[0][1] + e * self.n[1][0])).re
    }

    fn axpy(&self, h: f64, d: &MomentState) -> MomentState {
        let mut out = *self;
        for k in 0..2 {
            out.a[k] += h * d.a[k];
            for l in 0..2 {
                out.n[k][l] += h * d.n[k][l];
                out.m[k][l] += h * d.m[k][l];
            }
        }
        out
    }
}

/// Coefficients of the moment equations at one instant.
#[derive(Debug, Clone, Copy)]
pub struct MomentCoefficients {
    /// `A = i h + L`.
    pub a: Mat2,
    /// Collective drive amplitudes `Omega_k sqrt(N_k)`.
    pub f: [C64; 2],
}

fn check_linear(params: &MixParams) -> Result<()> {
    if params.hp_order != HpOrder::Zeroth || params.number_term != NumberTerm::Expanded {
        return Err(Error::NotLinearModel);
    }
    Ok(())
}

pub fn moment_coefficients(t: f64, params: &MixParams) -> Result<MomentCoefficients> {
    check_linear(params)?;
    params.validate()?;
    let (m1, m2) = (&params.mode1, &params.mode2);
    let e = C64::from_polar(1.0, phase(t, params));
    let root = (m1.n() * m2.n()).sqrt();
    let g = params.beta12() * root;
    let c = params.eta * params.gamma12() * root;
    let h = [
        [C64::new(m1.effective_detuning(), 0.0), g * e],
        [g * e.conj(), C64::new(m2.effective_detuning(), 0.0)],
    ];
    let l = [
        [C64::new(m1.gamma * m1.n(), 0.0), c * e],
        [c * e.conj(), C64::new(m2.gamma * m2.n(), 0.0)],
    ];
    let mut a = [[ZERO; 2]; 2];
    for k in 0..2 {
        for j in 0..2 {
            a[k][j] = I * h[k][j] + l[k][j];
        }
    }
    Ok(MomentCoefficients {
        a,
        f: [
            C64::new(m1.collective_rabi(), 0.0),
            C64::new(m2.collective_rabi(), 0.0),
        ],
    })
}

/// Time derivative of the moments. Only the linear model (zeroth order with
/// the expanded number term) closes.
#[allow(clippy::needless_range_loop)] // index form mirrors the matrix equations
pub fn moment_rhs(state: &MomentState, t: f64, params: &MixParams) -> Result<MomentState> {
    let MomentCoefficients { a, f } = moment_coefficients(t, params)?;
    let mut d = MomentState::vacuum();
    for k in 0..2 {
        d.a[k] = -I * f[k];
        for j in 0..2 {
            d.a[k] -= a[k][j] * state.a[j];
        }
    }
    for k in 0..2 {
        for l in 0..2 {
            let mut dn = I * f[k].conj() * state.a[l] - I * state.a[k].conj() * f[l];
            let mut dm = -I * f[k] * state.a[l] - I * state.a[k] * f[l];
            for j in 0..2 {
                dn -= a[k][j].conj() * state.n[j][l] + state.n[k][j] * a[l][j];
                dm -= a[k][j] * state.m[j][l] + state.m[k][j] * a[l][j];
            }
            d.n[k][l] = dn;
            d.m[k][l] = dm;
        }
    }
    Ok(d)
}

/// Classical RK4 step of the moment equations, phase staged at `t`,
/// `t + dt/2`, `t + dt`.
pub fn moment_step(
    state: &MomentState,
    t: f64,
    dt: f64,
    params: &MixParams,
) -> Result<MomentState> {
    let k1 = moment_rhs(state, t, params)?;
    let k2 = moment_rhs(&state.axpy(0.5 * dt, &k1), t + 0.5 * dt, params)?;
    let k3 = moment_rhs(&state.axpy(0.5 * dt, &k2), t + 0.5 * dt, params)?;
    let k4 = moment_rhs(&state.axpy(dt, &k3), t + dt, params)?;
    Ok(state
        .axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample {
    pub t: f64,
    pub ne1: f64,
    pub ne2: f64,
    pub intensity: f64,
    pub state: MomentState,
}

/// Integrates the moments from the vacuum on the same sample and step grid as
/// the density-matrix integrator uses for `(t_end, dt, sample_interval)`.
pub fn moment_evolve(
    params: &MixParams,
    t_end: f64,
    dt: f64,
    sample_interval: f64,
) -> Result<Vec<MomentSample>> {
    check_linear(params)?;
    let config = EvolveConfig::new(t_end, dt, sample_interval);
    config.validate()?;
    let mut state = MomentState::vacuum();
    let mut t = 0.0;
    let mut out = Vec::new();
    for (ts, sample, _) in stop_times(&config) {
        let span = ts - t;
        if span > 0.0 {
            let (steps, h) = substeps(span, dt);
            for k in 0..steps {
                state = moment_step(&state, t + k as f64 * h, h, params)?;
            }
            t = ts;
        }
        if !state.a.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NumericalBlowup { t });
        }
        if sample {
            let (ne1, ne2) = state.excitations();
            out.push(MomentSample {
                t: ts,
                ne1,
                ne2,
                intensity: state.intensity(phase(ts, params), params.eta),
                state,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModeSpec;
    use proptest::prelude::*;

    fn linear(eta: f64, omega: f64) -> MixParams {
        let mode = ModeSpec {
            cutoff: 8,
            atoms: 100,
            gamma: 1.0,
            beta: 10.0,
            delta: 0.0,
            omega_rabi: omega,
        };
        let mut p = MixParams::symmetric(mode, eta, 50.0, HpOrder::Zeroth);
        p.number_term = NumberTerm::Expanded;
        p
    }

    #[test]
    fn requires_the_linear_model() {
        let mut p = linear(0.5, 1.0);
        p.hp_order = HpOrder::First;
        assert_eq!(
            moment_rhs(&MomentState::vacuum(), 0.0, &p),
            Err(Error::NotLinearModel)
        );
        let mut p = linear(0.5, 1.0);
        p.number_term = NumberTerm::Exact;
        assert!(moment_evolve(&p, 1.0, 1e-3, 1e-2).is_err());
    }

    #[test]
    fn undriven_number_decays_at_collective_rate() {
        let mut p = linear(0.0, 0.0);
        p.mode1.beta = 0.0;
        p.mode2.beta = 0.0;
        let mut s = MomentState::vacuum();
        s.n[0][0] = C64::new(1.0, 0.0);
        let d = moment_rhs(&s, 0.0, &p).unwrap();
        assert!((d.n[0][0].re + 2.0 * 100.0).abs() < 1e-12);
        assert_eq!(d.n[1][1], ZERO);
    }

    #[test]
    fn drive_from_vacuum() {
        let mut p = linear(0.0, 3.0);
        p.mode2.omega_rabi = 0.0;
        let d = moment_rhs(&MomentState::vacuum(), 0.0, &p).unwrap();
        assert!((d.a[0] - C64::new(0.0, -30.0)).norm() < 1e-12);
        assert_eq!(d.a[1], ZERO);
    }

    #[test]
    fn uncoupled_coefficients_are_diagonal() {
        let p = linear(0.0, 3.0);
        for t in [0.0, 0.37, 2.0] {
            let c = moment_coefficients(t, &p).unwrap();
            assert_eq!(c.a[0][1], ZERO);
            assert_eq!(c.a[1][0], ZERO);
        }
        // mode-2 moments do not feel mode-1 moments
        let mut s = MomentState::vacuum();
        s.a[0] = C64::new(0.3, -0.2);
        s.n[0][0] = C64::new(0.5, 0.0);
        s.m[0][0] = C64::new(0.1, 0.1);
        let d = moment_rhs(&s, 0.1, &p).unwrap();
        let d0 = moment_rhs(&MomentState::vacuum(), 0.1, &p).unwrap();
        assert_eq!(
            (d.a[1], d.n[1][1], d.m[1][1]),
            (d0.a[1], d0.n[1][1], d0.m[1][1])
        );
    }

    #[test]
    fn uncoupled_mode_follows_the_damped_driven_oscillator() {
        // with eta = 0 each mode stays coherent: n(t) = |alpha(t)|^2 with
        // alpha(t) = alpha_ss (1 - e^{-A t}), A = i D + gamma N, alpha_ss = -i f / A
        let p = linear(0.0, 30.0);
        let a = C64::new(100.0, 990.0);
        let alpha_ss = -I * 300.0 / a;
        let series = moment_evolve(&p, 0.2, 1e-5, 0.01).unwrap();
        for s in &series {
            let alpha = alpha_ss * (1.0 - (-a * s.t).exp());
            assert!(
                (s.ne1 - alpha.norm_sqr()).abs() < 1e-9,
                "t={} {} {}",
                s.t,
                s.ne1,
                alpha.norm_sqr()
            );
            assert!((s.state.a[0] - alpha).norm() < 1e-9);
        }
    }

    #[test]
    fn fast_laser_beat_averages_out_the_coupling() {
        let amp = |dw: f64| {
            let mut p = linear(0.5, 30.0);
            p.delta_omega = dw;
            let s = moment_evolve(&p, 4.0, 5e-5, 1e-3).unwrap();
            let tail: Vec<f64> = s.iter().filter(|x| x.t >= 2.0).map(|x| x.ne1).collect();
            let max = tail.iter().copied().fold(f64::MIN, f64::max);
            let min = tail.iter().copied().fold(f64::MAX, f64::min);
            0.5 * (max - min)
        };
        // 100 x eta gamma12 sqrt(N1 N2) = 5000
        let slow = amp(50.0);
        let fast = amp(5000.0);
        assert!(slow > 10.0 * fast, "{slow} vs {fast}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn number_moments_stay_physical(eta in 0.0f64..1.0, omega in 0.0f64..40.0, phi0 in 0.0f64..6.3) {
            let mut p = linear(eta, omega);
            p.phi0 = phi0;
            p.mode2.omega_rabi = 0.5 * omega;
            for s in moment_evolve(&p, 0.3, 5e-5, 0.01).unwrap() {
                let n = s.state.n;
                prop_assert!(n[0][0].im.abs() < 1e-9 && n[1][1].im.abs() < 1e-9);
                prop_assert!(n[0][0].re > -1e-9 && n[1][1].re > -1e-9);
                prop_assert!((n[0][1] - n[1][0].conj()).norm() < 1e-9);
                // coherent states saturate this bound, so the slack is the
                // RK4 error, which is relative: about 2.5e-6 of the product at
                // this step, shrinking 16-fold when the step is halved
                let product = n[0][0].re * n[1][1].re;
                prop_assert!(product >= n[0][1].norm_sqr() - 1e-5 * product - 1e-12);
            }
        }
    }
}
