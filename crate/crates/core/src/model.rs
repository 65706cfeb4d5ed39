//! Generator of the master equation
//!
//! ```text
//! drho/dt = -i [H(t), rho] - D(rho, t)
//! H(t)    = H_static + beta12 (S1+ S2- e^{i phi} + S2+ S1- e^{-i phi})
//! D       = sum_a gamma_a ([S_a+, S_a- rho] + [rho S_a+, S_a-])
//!         + eta gamma12 ([S1+, S2- rho] e^{i phi} + [S2+, S1- rho] e^{-i phi} + h.c.)
//! ```
//!
//! with the collective operators replaced by their bosonized (Holstein-Primakoff)
//! matrices on the truncated Fock space.

use num_complex::Complex64 as C64;

use crate::error::{Error, Mode, Result};
use crate::fock::{embed, number_op, DensityMatrix, SparseMatrix};
use crate::params::{HpOrder, MixParams, ModeSpec, NumberTerm};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Laser phase difference `phi(t) = -phi0 + delta_omega t`, unwrapped.
pub fn phase(t: f64, params: &MixParams) -> f64 {
    -params.phi0 + params.delta_omega * t
}

/// Single-mode matrix of the bosonized lowering operator.
///
/// The raising operator is its conjugate transpose.
pub fn hp_lowering(order: HpOrder, mode: &ModeSpec) -> SparseMatrix {
    let n = mode.n();
    SparseMatrix::from_triplets(
        mode.levels(),
        (1..=mode.cutoff).map(|m| {
            let mf = m as f64;
            let factor = match order {
                HpOrder::Zeroth => 1.0,
                // (1 - a†a / 2N) acts after a has lowered |m> to |m - 1>
                HpOrder::First => 1.0 - (mf - 1.0) / (2.0 * n),
            };
            (m - 1, m, C64::new(n.sqrt() * mf.sqrt() * factor, 0.0))
        }),
    )
}

/// Single-mode `S+ S- = N a†a - a†² a²`, diagonal with entries `N m - m (m - 1)`.
pub fn number_interaction(mode: &ModeSpec) -> SparseMatrix {
    let n = mode.n();
    SparseMatrix::diagonal(
        &(0..=mode.cutoff)
            .map(|m| {
                let mf = m as f64;
                C64::new(n * mf - mf * (mf - 1.0), 0.0)
            })
            .collect::<Vec<_>>(),
    )
}

/// Precomputed operator blocks of the generator, embedded on the joint space.
#[derive(Debug, Clone)]
pub struct GeneratorParts {
    /// All phase-independent Hamiltonian terms.
    pub h_static: SparseMatrix,
    /// `beta12 S1+ S2-`; enters as `h_cross e^{i phi} + h.c.`.
    pub h_cross: SparseMatrix,
    /// `S-` of each ensemble.
    pub lower: [SparseMatrix; 2],
    /// `S+` of each ensemble.
    pub raise: [SparseMatrix; 2],
    pub gamma: [f64; 2],
    /// `eta gamma12`.
    pub cross_rate: f64,
    /// The c-number `-sum_a (delta_a - beta_a) N_a / 2` removed from the
    /// Hamiltonian. It commutes with everything and only adds a global phase.
    pub dropped_energy: f64,
    raise_lower: [SparseMatrix; 2],
    raise1_lower2: SparseMatrix,
    raise2_lower1: SparseMatrix,
}

impl GeneratorParts {
    pub fn dim(&self) -> usize {
        self.h_static.dim()
    }

    /// `H(t)` for a given phase.
    pub fn hamiltonian(&self, phi: f64) -> SparseMatrix {
        let e = C64::from_polar(1.0, phi);
        let cross = self
            .h_cross
            .scale(e)
            .add(&self.h_cross.adjoint().scale(e.conj()))
            .expect("same space");
        self.h_static.add(&cross).expect("same space")
    }
}

/// Assembles the generator blocks for `params`.
pub fn build_generator(params: &MixParams) -> Result<GeneratorParts> {
    params.validate()?;
    let modes = [Mode::One, Mode::Two];

    let mut h_static = SparseMatrix::zeros(params.dim());
    let mut lower = Vec::with_capacity(2);
    let mut raise = Vec::with_capacity(2);
    let mut dropped_energy = 0.0;

    for &m in &modes {
        let spec = params.mode(m);
        let s_minus = hp_lowering(params.hp_order, spec);
        let s_plus = s_minus.adjoint();
        let pair = match params.number_term {
            NumberTerm::Exact => number_interaction(spec),
            NumberTerm::Expanded => s_plus.matmul(&s_minus)?,
        };
        let single = number_op(spec.cutoff)
            .scale(C64::new(spec.delta - spec.beta, 0.0))
            .add(&s_plus.add(&s_minus)?.scale(C64::new(spec.omega_rabi, 0.0)))?
            .add(&pair.scale(C64::new(spec.beta, 0.0)))?;
        h_static = h_static.add(&embed(&single, m, params)?)?;
        dropped_energy -= (spec.delta - spec.beta) * spec.n() / 2.0;

        lower.push(embed(&s_minus, m, params)?);
        raise.push(embed(&s_plus, m, params)?);
    }
    let lower: [SparseMatrix; 2] = lower.try_into().expect("two modes");
    let raise: [SparseMatrix; 2] = raise.try_into().expect("two modes");

    // truncate-then-multiply: products of the already truncated matrices
    let raise1_lower2 = raise[0].matmul(&lower[1])?;
    let raise2_lower1 = raise[1].matmul(&lower[0])?;
    let h_cross = raise1_lower2.scale(C64::new(params.beta12(), 0.0));
    let raise_lower = [raise[0].matmul(&lower[0])?, raise[1].matmul(&lower[1])?];

    Ok(GeneratorParts {
        h_static,
        h_cross,
        lower,
        raise,
        gamma: [params.mode1.gamma, params.mode2.gamma],
        cross_rate: params.eta * params.gamma12(),
        dropped_energy,
        raise_lower,
        raise1_lower2,
        raise2_lower1,
    })
}

fn axpy(dst: &mut [C64], a: C64, x: &[C64]) {
    for (d, s) in dst.iter_mut().zip(x) {
        *d += a * s;
    }
}

/// `[A, X] = A X - X A`.
fn commutator_left(a: &SparseMatrix, x: &[C64]) -> Vec<C64> {
    let mut out = a.mul_dense(x);
    axpy(&mut out, C64::new(-1.0, 0.0), &a.dense_mul(x));
    out
}

/// `[A, B X] = A B X - B X A`, with `B X` precomputed.
fn commutator_with_product(a: &SparseMatrix, bx: &[C64]) -> Vec<C64> {
    commutator_left(a, bx)
}

/// `[X A, B] = X A B - B X A`, with `X A` precomputed.
fn commutator_right(xa: &[C64], b: &SparseMatrix) -> Vec<C64> {
    let mut out = b.dense_mul(xa);
    axpy(&mut out, C64::new(-1.0, 0.0), &b.mul_dense(xa));
    out
}

fn adjoint_dense(x: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = x[i * n + j].conj();
        }
    }
    out
}

/// Time derivative of `rho`, assembled term by term from the commutator form
/// of the master equation.
///
/// This is the reference evaluation; [`Liouvillian`] is the compiled form used
/// by the integrator.
pub fn apply_rhs(
    rho: &DensityMatrix,
    t: f64,
    gen: &GeneratorParts,
    params: &MixParams,
) -> Result<DensityMatrix> {
    let n = gen.dim();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho.dim(),
        });
    }
    let x = rho.as_slice();
    let phi = phase(t, params);
    let e = C64::from_polar(1.0, phi);

    // -i [H, rho]
    let h = gen.hamiltonian(phi);
    let mut out = commutator_left(&h, x);
    for v in out.iter_mut() {
        *v *= C64::new(0.0, -1.0);
    }

    // - gamma_a ([S+, S- rho] + [rho S+, S-])
    for a in 0..2 {
        if gen.gamma[a] == 0.0 {
            continue;
        }
        let lx = gen.lower[a].mul_dense(x);
        let xr = gen.raise[a].dense_mul(x);
        let mut d = commutator_with_product(&gen.raise[a], &lx);
        axpy(
            &mut d,
            C64::new(1.0, 0.0),
            &commutator_right(&xr, &gen.lower[a]),
        );
        axpy(&mut out, C64::new(-gen.gamma[a], 0.0), &d);
    }

    // - eta gamma12 ([S1+, S2- rho] e^{i phi} + [S2+, S1- rho] e^{-i phi} + h.c.)
    if gen.cross_rate != 0.0 {
        let l2x = gen.lower[1].mul_dense(x);
        let l1x = gen.lower[0].mul_dense(x);
        let mut cross = commutator_with_product(&gen.raise[0], &l2x);
        for v in cross.iter_mut() {
            *v *= e;
        }
        axpy(
            &mut cross,
            e.conj(),
            &commutator_with_product(&gen.raise[1], &l1x),
        );
        let hc = adjoint_dense(&cross, n);
        axpy(&mut cross, C64::new(1.0, 0.0), &hc);
        axpy(&mut out, C64::new(-gen.cross_rate, 0.0), &cross);
    }

    DensityMatrix::from_vec(n, out)
}

/// Which phase factor multiplies a superoperator term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Static,
    Plus,
    Minus,
}

/// The generator compiled into sparse superoperators acting on the
/// row-major vectorized density matrix:
///
/// ```text
/// drho/dt = L0 rho + e^{i phi} L+ rho + e^{-i phi} L- rho
/// ```
///
/// Only the upper triangle of the output is computed; the lower triangle
/// follows from Hermiticity of the input.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    /// `(i, j)` of each computed output entry, `i <= j`.
    outputs: Vec<(usize, usize)>,
    channels: [SuperRows; 3],
}

#[derive(Debug, Clone, Default)]
struct SuperRows {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<C64>,
}

impl SuperRows {
    fn row_dot(&self, p: usize, x: &[C64]) -> C64 {
        let mut acc = ZERO;
        let lo = self.indptr[p];
        let hi = self.indptr[p + 1];
        for (idx, v) in self.indices[lo..hi].iter().zip(&self.values[lo..hi]) {
            acc += v * x[*idx as usize];
        }
        acc
    }

    fn nnz(&self) -> usize {
        self.values.len()
    }
}

struct Term<'a> {
    coef: C64,
    channel: Channel,
    left: Option<&'a SparseMatrix>,
    right: Option<&'a SparseMatrix>,
}

impl Liouvillian {
    pub fn compile(gen: &GeneratorParts) -> Self {
        let n = gen.dim();
        let i_unit = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let h_cross_dag = gen.h_cross.adjoint();

        let mut terms: Vec<Term> = vec![
            Term {
                coef: -i_unit,
                channel: Channel::Static,
                left: Some(&gen.h_static),
                right: None,
            },
            Term {
                coef: i_unit,
                channel: Channel::Static,
                left: None,
                right: Some(&gen.h_static),
            },
            Term {
                coef: -i_unit,
                channel: Channel::Plus,
                left: Some(&gen.h_cross),
                right: None,
            },
            Term {
                coef: i_unit,
                channel: Channel::Plus,
                left: None,
                right: Some(&gen.h_cross),
            },
            Term {
                coef: -i_unit,
                channel: Channel::Minus,
                left: Some(&h_cross_dag),
                right: None,
            },
            Term {
                coef: i_unit,
                channel: Channel::Minus,
                left: None,
                right: Some(&h_cross_dag),
            },
        ];
        for a in 0..2 {
            let g = gen.gamma[a];
            if g == 0.0 {
                continue;
            }
            terms.push(Term {
                coef: -g * one,
                channel: Channel::Static,
                left: Some(&gen.raise_lower[a]),
                right: None,
            });
            terms.push(Term {
                coef: -g * one,
                channel: Channel::Static,
                left: None,
                right: Some(&gen.raise_lower[a]),
            });
            terms.push(Term {
                coef: 2.0 * g * one,
                channel: Channel::Static,
                left: Some(&gen.lower[a]),
                right: Some(&gen.raise[a]),
            });
        }
        let c = gen.cross_rate;
        if c != 0.0 {
            // e^{i phi}: S1+ S2- rho + rho S1+ S2- - 2 S2- rho S1+
            terms.push(Term {
                coef: -c * one,
                channel: Channel::Plus,
                left: Some(&gen.raise1_lower2),
                right: None,
            });
            terms.push(Term {
                coef: -c * one,
                channel: Channel::Plus,
                left: None,
                right: Some(&gen.raise1_lower2),
            });
            terms.push(Term {
                coef: 2.0 * c * one,
                channel: Channel::Plus,
                left: Some(&gen.lower[1]),
                right: Some(&gen.raise[0]),
            });
            // e^{-i phi}: S2+ S1- rho + rho S2+ S1- - 2 S1- rho S2+
            terms.push(Term {
                coef: -c * one,
                channel: Channel::Minus,
                left: Some(&gen.raise2_lower1),
                right: None,
            });
            terms.push(Term {
                coef: -c * one,
                channel: Channel::Minus,
                left: None,
                right: Some(&gen.raise2_lower1),
            });
            terms.push(Term {
                coef: 2.0 * c * one,
                channel: Channel::Minus,
                left: Some(&gen.lower[0]),
                right: Some(&gen.raise[1]),
            });
        }

        // column access of right factors
        let transposed: Vec<Option<SparseMatrix>> = terms
            .iter()
            .map(|t| {
                t.right.map(|r| {
                    SparseMatrix::from_triplets(n, r.triplets().map(|(i, j, v)| (j, i, v)))
                })
            })
            .collect();

        let mut outputs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                outputs.push((i, j));
            }
        }

        let mut channels: [SuperRows; 3] = Default::default();
        for ch in channels.iter_mut() {
            ch.indptr.push(0);
        }
        let mut scratch: [Vec<(u32, C64)>; 3] = Default::default();
        for &(i, j) in &outputs {
            for s in scratch.iter_mut() {
                s.clear();
            }
            for (term, rt) in terms.iter().zip(&transposed) {
                let slot = &mut scratch[term.channel as usize];
                let lefts: Vec<(usize, C64)> = match term.left {
                    Some(l) => l.row(i).collect(),
                    None => vec![(i, C64::new(1.0, 0.0))],
                };
                let rights: Vec<(usize, C64)> = match rt {
                    Some(r) => r.row(j).collect(),
                    None => vec![(j, C64::new(1.0, 0.0))],
                };
                for &(k, a) in &lefts {
                    for &(l, b) in &rights {
                        slot.push(((k * n + l) as u32, term.coef * a * b));
                    }
                }
            }
            for (ch, s) in channels.iter_mut().zip(scratch.iter_mut()) {
                s.sort_by_key(|&(idx, _)| idx);
                let mut iter = s.iter().copied().peekable();
                while let Some((idx, mut v)) = iter.next() {
                    while let Some(&(idx2, v2)) = iter.peek() {
                        if idx2 != idx {
                            break;
                        }
                        v += v2;
                        iter.next();
                    }
                    if v != ZERO {
                        ch.indices.push(idx);
                        ch.values.push(v);
                    }
                }
                ch.indptr.push(ch.indices.len());
            }
        }

        Liouvillian {
            dim: n,
            outputs,
            channels,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored superoperator entries over all channels.
    pub fn nnz(&self) -> usize {
        self.channels.iter().map(SuperRows::nnz).sum()
    }

    /// Writes `d rho / dt` at phase `phi` into `out` (full matrix).
    pub fn apply_into(&self, x: &[C64], phi: f64, out: &mut [C64]) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n * n);
        debug_assert_eq!(out.len(), n * n);
        let e = C64::from_polar(1.0, phi);
        let ec = e.conj();
        let [st, plus, minus] = &self.channels;
        for (p, &(i, j)) in self.outputs.iter().enumerate() {
            let v = st.row_dot(p, x) + e * plus.row_dot(p, x) + ec * minus.row_dot(p, x);
            out[i * n + j] = v;
            if i != j {
                out[j * n + i] = v.conj();
            }
        }
    }

    pub fn apply(&self, rho: &DensityMatrix, phi: f64) -> DensityMatrix {
        let mut out = vec![ZERO; self.dim * self.dim];
        self.apply_into(rho.as_slice(), phi, &mut out);
        DensityMatrix::from_vec(self.dim, out).expect("dimension")
    }
}
