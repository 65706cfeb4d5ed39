//! Exact collective-spin master equation in the symmetric Dicke subspace.
//!
//! Each ensemble of `N` two-level atoms is a spin `j = N/2` with basis
//! `|j, m>`, labelled here by the excitation `k = m + j` in `0..=N`. The
//! collective operators act within this subspace, so starting from all atoms
//! in the ground state the dynamics never leaves it. No bosonization is
//! involved.
//!
//! For larger `N` the ladder may be cut at `k <= K`; the population of the
//! top kept level is reported so the cut can be checked.

use num_complex::Complex64 as C64;

use crate::error::{Error, Mode, Result};
use crate::fock::{DensityMatrix, SparseMatrix};
use crate::integrator::{stop_times, substeps, EvolveConfig};
use crate::model::phase;
use crate::params::MixParams;

/// Largest joint dimension the simulator accepts.
pub const MAX_SPIN_DIM: usize = 4096;

/// Collective spin operators of one ensemble on `k = 0..=levels-1`.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub atoms: usize,
    pub s_plus: SparseMatrix,
    pub s_minus: SparseMatrix,
    pub s_z: SparseMatrix,
}

impl SpinOps {
    /// Operators for `atoms` spins, keeping the lowest `levels` Dicke states.
    pub fn new(atoms: usize, levels: usize) -> Self {
        let j = atoms as f64 / 2.0;
        // <j, m+1| S+ |j, m> = sqrt(j(j+1) - m(m+1))
        let s_plus = SparseMatrix::from_triplets(
            levels,
            (0..levels.saturating_sub(1)).map(|k| {
                let m = k as f64 - j;
                (
                    k + 1,
                    k,
                    C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0),
                )
            }),
        );
        let s_z = SparseMatrix::diagonal(
            &(0..levels)
                .map(|k| C64::new(k as f64 - j, 0.0))
                .collect::<Vec<_>>(),
        );
        SpinOps {
            atoms,
            s_minus: s_plus.adjoint(),
            s_plus,
            s_z,
        }
    }
}

/// Joint space of the two ensembles, flattened with ensemble 2 fastest.
#[derive(Debug, Clone)]
pub struct SpinSpace {
    pub levels: [usize; 2],
    pub ops: [SpinOps; 2],
}

impl SpinSpace {
    /// The full symmetric subspace, `(N1 + 1)(N2 + 1)` states.
    pub fn full(atoms1: usize, atoms2: usize) -> Result<Self> {
        Self::truncated(atoms1, atoms2, atoms1, atoms2)
    }

    /// Keeps excitations `k_a <= max_a` of each ensemble.
    pub fn truncated(atoms1: usize, atoms2: usize, max1: usize, max2: usize) -> Result<Self> {
        if atoms1 == 0 || atoms2 == 0 {
            return Err(Error::InvalidParameter(
                "ensembles need at least one atom".into(),
            ));
        }
        let levels = [max1.min(atoms1) + 1, max2.min(atoms2) + 1];
        let dim = levels[0] * levels[1];
        if dim > MAX_SPIN_DIM {
            return Err(Error::ResourceGuard {
                dim,
                limit: MAX_SPIN_DIM,
            });
        }
        Ok(SpinSpace {
            levels,
            ops: [
                SpinOps::new(atoms1, levels[0]),
                SpinOps::new(atoms2, levels[1]),
            ],
        })
    }

    pub fn dim(&self) -> usize {
        self.levels[0] * self.levels[1]
    }

    pub fn index(&self, k1: usize, k2: usize) -> usize {
        k1 * self.levels[1] + k2
    }

    pub fn is_full(&self) -> bool {
        self.levels[0] == self.ops[0].atoms + 1 && self.levels[1] == self.ops[1].atoms + 1
    }

    /// Single-ensemble operator lifted to the joint space.
    pub fn lift(&self, op: &SparseMatrix, mode: Mode) -> SparseMatrix {
        match mode {
            Mode::One => op.kron(&SparseMatrix::identity(self.levels[1])),
            Mode::Two => SparseMatrix::identity(self.levels[0]).kron(op),
        }
    }

    /// All atoms of both ensembles in the ground state.
    pub fn ground_state(&self) -> DensityMatrix {
        DensityMatrix::basis_state(self.dim(), 0)
    }
}

/// The spin generator in terms of ladder coefficients. `S-` of ensemble `a`
/// maps `|k>` to `lower[a][k] |k - 1>`, so every operator in the master
/// equation is a diagonal or a one-step shift along one or both ladders.
struct SpinGenerator {
    levels: [usize; 2],
    lower: [Vec<f64>; 2],
    /// `k_a` of every flat index.
    k: [Vec<usize>; 2],
    /// Diagonal of the phase-independent Hamiltonian.
    diag: Vec<f64>,
    omega: [f64; 2],
    beta12: f64,
    gamma: [f64; 2],
    cross: f64,
}

impl SpinGenerator {
    fn new(space: &SpinSpace, params: &MixParams) -> Result<Self> {
        params.validate()?;
        let lower = [0, 1].map(|a| {
            let ops = &space.ops[a];
            (0..space.levels[a])
                .map(|k| {
                    if k == 0 {
                        0.0
                    } else {
                        ops.s_minus.get(k - 1, k).re
                    }
                })
                .collect::<Vec<f64>>()
        });
        let n = space.dim();
        let k = [
            (0..n).map(|r| r / space.levels[1]).collect::<Vec<_>>(),
            (0..n).map(|r| r % space.levels[1]).collect::<Vec<_>>(),
        ];
        let specs = [&params.mode1, &params.mode2];
        let diag = (0..n)
            .map(|r| {
                (0..2)
                    .map(|a| {
                        let s = specs[a];
                        let ka = k[a][r];
                        let s_z = ka as f64 - s.atoms as f64 / 2.0;
                        // S+ S- |k> = lower[k]^2 |k>
                        (s.delta - s.beta) * s_z + s.beta * lower[a][ka] * lower[a][ka]
                    })
                    .sum()
            })
            .collect();
        Ok(SpinGenerator {
            levels: space.levels,
            lower,
            k,
            diag,
            omega: [params.mode1.omega_rabi, params.mode2.omega_rabi],
            beta12: params.beta12(),
            gamma: [params.mode1.gamma, params.mode2.gamma],
            cross: params.eta * params.gamma12(),
        })
    }

    fn dim(&self) -> usize {
        self.levels[0] * self.levels[1]
    }

    fn stride(&self, a: usize) -> usize {
        if a == 0 {
            self.levels[1]
        } else {
            1
        }
    }

    /// `out += scale * S x`, with `S = S+` or `S-` of ensemble `a`.
    fn left(&self, x: &[C64], out: &mut [C64], a: usize, raise: bool, scale: C64) {
        let n = self.dim();
        let st = self.stride(a);
        let top = self.levels[a] - 1;
        for r in 0..n {
            let ka = self.k[a][r];
            let (src, c) = if raise {
                if ka == 0 {
                    continue;
                }
                (r - st, self.lower[a][ka])
            } else {
                if ka == top {
                    continue;
                }
                (r + st, self.lower[a][ka + 1])
            };
            let f = scale * c;
            let (dst, from) = (r * n, src * n);
            for j in 0..n {
                out[dst + j] += f * x[from + j];
            }
        }
    }

    /// `out += scale * x S`.
    fn right(&self, x: &[C64], out: &mut [C64], a: usize, raise: bool, scale: C64) {
        let n = self.dim();
        let st = self.stride(a);
        let top = self.levels[a] - 1;
        // (x S+)[r, c] = lower[k_c + 1] x[r, c + st]; (x S-)[r, c] = lower[k_c] x[r, c - st]
        let taps: Vec<(usize, usize, C64)> = (0..n)
            .filter_map(|c| {
                let ka = self.k[a][c];
                if raise && ka < top {
                    Some((c, c + st, scale * self.lower[a][ka + 1]))
                } else if !raise && ka > 0 {
                    Some((c, c - st, scale * self.lower[a][ka]))
                } else {
                    None
                }
            })
            .collect();
        for r in 0..n {
            let row = r * n;
            for &(c, src, f) in &taps {
                out[row + c] += f * x[row + src];
            }
        }
    }

    fn rhs(&self, x: &[C64], phi: f64) -> Vec<C64> {
        let n = self.dim();
        let e = C64::from_polar(1.0, phi);
        let mi = C64::new(0.0, -1.0);
        let one = C64::new(1.0, 0.0);
        let mut out = vec![C64::new(0.0, 0.0); n * n];

        // -i [H, rho]: diagonal part, drive, then the cross hopping
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = mi * (self.diag[r] - self.diag[c]) * x[r * n + c];
            }
        }
        for a in 0..2 {
            let w = mi * self.omega[a];
            for raise in [true, false] {
                self.left(x, &mut out, a, raise, w);
                self.right(x, &mut out, a, raise, -w);
            }
        }
        let mut tmp = vec![C64::new(0.0, 0.0); n * n];
        if self.beta12 != 0.0 {
            // beta12 (e S1+ S2- + e* S2+ S1-)
            for (first, second, ph) in [(0usize, 1usize, e), (1, 0, e.conj())] {
                let w = mi * self.beta12 * ph;
                tmp.fill(C64::new(0.0, 0.0));
                self.left(x, &mut tmp, second, false, one);
                self.left(&tmp, &mut out, first, true, w);
                tmp.fill(C64::new(0.0, 0.0));
                self.right(x, &mut tmp, first, true, one);
                self.right(&tmp, &mut out, second, false, -w);
            }
        }

        // gamma ([S+, S- rho] + [rho S+, S-])
        //   = gamma (S+ S- rho + rho S+ S- - 2 S- rho S+)
        for a in 0..2 {
            let g = self.gamma[a];
            if g == 0.0 {
                continue;
            }
            for r in 0..n {
                let pr = self.lower[a][self.k[a][r]].powi(2);
                for c in 0..n {
                    let pc = self.lower[a][self.k[a][c]].powi(2);
                    out[r * n + c] -= g * (pr + pc) * x[r * n + c];
                }
            }
            tmp.fill(C64::new(0.0, 0.0));
            self.left(x, &mut tmp, a, false, one);
            self.right(&tmp, &mut out, a, true, C64::new(2.0 * g, 0.0));
        }

        // eta gamma12 ([S1+, S2- rho] e + [S2+, S1- rho] e* + h.c.)
        if self.cross != 0.0 {
            let mut y = vec![C64::new(0.0, 0.0); n * n];
            for (p, m, ph) in [(0usize, 1usize, e), (1, 0, e.conj())] {
                // [Sp+, Sm- rho] = Sp+ Sm- rho - Sm- rho Sp+
                tmp.fill(C64::new(0.0, 0.0));
                self.left(x, &mut tmp, m, false, one);
                self.left(&tmp, &mut y, p, true, ph);
                self.right(&tmp, &mut y, p, true, -ph);
            }
            for r in 0..n {
                for c in 0..n {
                    out[r * n + c] -= self.cross * (y[r * n + c] + y[c * n + r].conj());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DickeRow {
    pub t: f64,
    /// `<S_z> + N/2` of each ensemble.
    pub ne1: f64,
    pub ne2: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// Population of the highest kept Dicke level; zero when the ladder is
    /// complete.
    pub top1: f64,
    pub top2: f64,
}

fn measure(space: &SpinSpace, rho: &DensityMatrix, t: f64) -> DickeRow {
    let mut ne = [0.0; 2];
    let mut top = [0.0; 2];
    for k1 in 0..space.levels[0] {
        for k2 in 0..space.levels[1] {
            let p = rho.get(space.index(k1, k2), space.index(k1, k2)).re;
            ne[0] += k1 as f64 * p;
            ne[1] += k2 as f64 * p;
            if k1 + 1 == space.levels[0] && k1 < space.ops[0].atoms {
                top[0] += p;
            }
            if k2 + 1 == space.levels[1] && k2 < space.ops[1].atoms {
                top[1] += p;
            }
        }
    }
    DickeRow {
        t,
        ne1: ne[0],
        ne2: ne[1],
        trace_error: (rho.trace() - C64::new(1.0, 0.0)).norm(),
        hermiticity_error: rho.hermiticity_error(),
        top1: top[0],
        top2: top[1],
    }
}

/// Integrates the spin master equation from `rho0` with classical RK4 on the
/// same sample grid as the main integrator. The atom numbers and all rates
/// come from `params`; the Fock cutoffs in `params` are ignored.
pub fn dicke_evolve_from(
    space: &SpinSpace,
    rho0: &DensityMatrix,
    params: &MixParams,
    t_end: f64,
    dt: f64,
    sample_interval: f64,
) -> Result<Vec<DickeRow>> {
    if rho0.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: rho0.dim(),
        });
    }
    if space.ops[0].atoms != params.mode1.atoms || space.ops[1].atoms != params.mode2.atoms {
        return Err(Error::InvalidParameter(
            "spin space and parameters disagree on the atom numbers".into(),
        ));
    }
    let config = EvolveConfig::new(t_end, dt, sample_interval);
    config.validate()?;
    let gen = SpinGenerator::new(space, params)?;
    let n = space.dim();
    let mut x = rho0.as_slice().to_vec();
    let mut t = 0.0;
    let mut rows = Vec::new();
    for (ts, sample, _) in stop_times(&config) {
        let span = ts - t;
        if span > 0.0 {
            let (steps, h) = substeps(span, dt);
            for s in 0..steps {
                let t0 = t + s as f64 * h;
                let stage = |x: &[C64], k: &[C64], c: f64| -> Vec<C64> {
                    x.iter().zip(k).map(|(a, b)| a + c * b).collect()
                };
                let k1 = gen.rhs(&x, phase(t0, params));
                let k2 = gen.rhs(&stage(&x, &k1, 0.5 * h), phase(t0 + 0.5 * h, params));
                let k3 = gen.rhs(&stage(&x, &k2, 0.5 * h), phase(t0 + 0.5 * h, params));
                let k4 = gen.rhs(&stage(&x, &k3, h), phase(t0 + h, params));
                for i in 0..x.len() {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                // Hermitian part
                for r in 0..n {
                    x[r * n + r].im = 0.0;
                    for c in (r + 1)..n {
                        let v = 0.5 * (x[r * n + c] + x[c * n + r].conj());
                        x[r * n + c] = v;
                        x[c * n + r] = v.conj();
                    }
                }
            }
            t = ts;
            if !x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NumericalBlowup { t });
            }
        }
        if sample {
            let rho = DensityMatrix::from_vec(n, x.clone())?;
            rows.push(measure(space, &rho, ts));
        }
    }
    Ok(rows)
}

/// Runs from the collective ground state of both ensembles.
pub fn dicke_evolve(
    space: &SpinSpace,
    params: &MixParams,
    t_end: f64,
    dt: f64,
    sample_interval: f64,
) -> Result<Vec<DickeRow>> {
    dicke_evolve_from(
        space,
        &space.ground_state(),
        params,
        t_end,
        dt,
        sample_interval,
    )
}

/// Commutator residuals `max |[S+, S-] - 2 S_z|` and
/// `max |[S_z, S+] - S+|` for one ensemble's full ladder.
pub fn su2_residuals(atoms: usize) -> (f64, f64) {
    let ops = SpinOps::new(atoms, atoms + 1);
    let pm = ops
        .s_plus
        .matmul(&ops.s_minus)
        .and_then(|a| a.sub(&ops.s_minus.matmul(&ops.s_plus)?))
        .and_then(|c| c.sub(&ops.s_z.scale(C64::new(2.0, 0.0))))
        .expect("same space");
    let zp = ops
        .s_z
        .matmul(&ops.s_plus)
        .and_then(|a| a.sub(&ops.s_plus.matmul(&ops.s_z)?))
        .and_then(|c| c.sub(&ops.s_plus))
        .expect("same space");
    (pm.max_abs(), zp.max_abs())
}
