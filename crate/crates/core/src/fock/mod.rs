//! Truncated two-mode Fock space.
//!
//! Basis states `|m1, m2>` are flattened row-major with mode 2 fastest,
//! `k = m1 (M2 + 1) + m2`, so that the levels of mode 2 for fixed `m1` are
//! contiguous.

mod density;
mod sparse;

pub use density::DensityMatrix;
pub use sparse::SparseMatrix;

use num_complex::Complex64 as C64;

use crate::error::{Error, Mode, Result};
use crate::params::MixParams;

/// Index map of the joint space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    pub cutoff1: usize,
    pub cutoff2: usize,
}

impl FockBasis {
    pub fn new(cutoff1: usize, cutoff2: usize) -> Self {
        FockBasis { cutoff1, cutoff2 }
    }

    pub fn of(params: &MixParams) -> Self {
        FockBasis::new(params.mode1.cutoff, params.mode2.cutoff)
    }

    pub fn dim(&self) -> usize {
        (self.cutoff1 + 1) * (self.cutoff2 + 1)
    }

    pub fn cutoff(&self, mode: Mode) -> usize {
        match mode {
            Mode::One => self.cutoff1,
            Mode::Two => self.cutoff2,
        }
    }

    pub fn index(&self, m1: usize, m2: usize) -> Result<usize> {
        if m1 > self.cutoff1 || m2 > self.cutoff2 {
            return Err(Error::IndexOutOfRange {
                m1,
                m2,
                max1: self.cutoff1,
                max2: self.cutoff2,
            });
        }
        Ok(m1 * (self.cutoff2 + 1) + m2)
    }

    pub fn unflatten(&self, k: usize) -> Result<(usize, usize)> {
        if k >= self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: k,
            });
        }
        Ok((k / (self.cutoff2 + 1), k % (self.cutoff2 + 1)))
    }

    /// Fock levels of every flat index, in index order.
    pub fn levels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.cutoff1).flat_map(move |m1| (0..=self.cutoff2).map(move |m2| (m1, m2)))
    }
}

/// Flat index of `|m1, m2>` in the joint space of `params`.
pub fn flat_index(m1: usize, m2: usize, params: &MixParams) -> Result<usize> {
    FockBasis::of(params).index(m1, m2)
}

/// Single-mode annihilation and creation operators on levels `0..=cutoff`.
///
/// The creation operator has no matrix element out of the top level.
pub fn ladder_ops(cutoff: usize) -> (SparseMatrix, SparseMatrix) {
    let dim = cutoff + 1;
    let a = SparseMatrix::from_triplets(
        dim,
        (1..=cutoff).map(|m| (m - 1, m, C64::new((m as f64).sqrt(), 0.0))),
    );
    let a_dag = a.adjoint();
    (a, a_dag)
}

/// Single-mode number operator `a†a`.
pub fn number_op(cutoff: usize) -> SparseMatrix {
    SparseMatrix::diagonal(
        &(0..=cutoff)
            .map(|m| C64::new(m as f64, 0.0))
            .collect::<Vec<_>>(),
    )
}

/// Embeds a single-mode operator into the joint space: `op ⊗ 1` for mode 1
/// and `1 ⊗ op` for mode 2.
pub fn embed(op: &SparseMatrix, mode: Mode, params: &MixParams) -> Result<SparseMatrix> {
    embed_in(op, mode, FockBasis::of(params))
}

pub fn embed_in(op: &SparseMatrix, mode: Mode, basis: FockBasis) -> Result<SparseMatrix> {
    let levels = basis.cutoff(mode) + 1;
    if op.dim() != levels {
        return Err(Error::DimensionMismatch {
            expected: levels,
            found: op.dim(),
        });
    }
    Ok(match mode {
        Mode::One => op.kron(&SparseMatrix::identity(basis.cutoff2 + 1)),
        Mode::Two => SparseMatrix::identity(basis.cutoff1 + 1).kron(op),
    })
}

/// The collective ground state `|0, 0><0, 0|`.
pub fn ground_state(params: &MixParams) -> DensityMatrix {
    DensityMatrix::basis_state(params.dim(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{HpOrder, ModeSpec};

    fn params(m1: usize, m2: usize) -> MixParams {
        let mut p = MixParams::symmetric(ModeSpec::new(m1, 100), 0.0, 0.0, HpOrder::Zeroth);
        p.mode2.cutoff = m2;
        p
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn flat_index_examples() {
        let p = params(9, 9);
        assert_eq!(flat_index(0, 0, &p).unwrap(), 0);
        assert_eq!(flat_index(1, 0, &p).unwrap(), 10);
        assert_eq!(flat_index(2, 3, &p).unwrap(), 23);
        assert!(matches!(
            flat_index(10, 0, &p),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(flat_index(0, 10, &p).is_err());
    }

    #[test]
    fn flat_index_is_a_bijection() {
        for (m1max, m2max) in [(1, 1), (3, 7), (6, 2), (10, 10)] {
            let b = FockBasis::new(m1max, m2max);
            let mut seen = vec![false; b.dim()];
            for m1 in 0..=m1max {
                for m2 in 0..=m2max {
                    let k = b.index(m1, m2).unwrap();
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(b.unflatten(k).unwrap(), (m1, m2));
                }
            }
            assert!(seen.iter().all(|&s| s));
            let listed: Vec<_> = b.levels().collect();
            assert_eq!(listed.len(), b.dim());
            for (k, lv) in listed.into_iter().enumerate() {
                assert_eq!(b.unflatten(k).unwrap(), lv);
            }
        }
    }

    #[test]
    fn ladder_examples() {
        let (a, a_dag) = ladder_ops(2);
        // a|1> = |0>
        let ket1 = vec![c(0.0), c(1.0), c(0.0)];
        assert_eq!(a.apply(&ket1), vec![c(1.0), c(0.0), c(0.0)]);
        assert!((a_dag.get(2, 1) - c(2f64.sqrt())).norm() < 1e-15);
        // a†|2> = 0 under truncation
        let ket2 = vec![c(0.0), c(0.0), c(1.0)];
        assert!(a_dag.apply(&ket2).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn commutator_is_identity_below_the_top_level() {
        for m in 1..=12 {
            let (a, a_dag) = ladder_ops(m);
            let comm = a
                .matmul(&a_dag)
                .unwrap()
                .sub(&a_dag.matmul(&a).unwrap())
                .unwrap();
            for i in 0..=m {
                for j in 0..=m {
                    let expect = if i != j {
                        0.0
                    } else if i < m {
                        1.0
                    } else {
                        // top row: a a† vanishes there, leaving -M
                        -(m as f64)
                    };
                    assert!(
                        (comm.get(i, j) - c(expect)).norm() < 1e-12,
                        "M={m} ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn embed_examples() {
        let p = params(3, 2);
        let id1 = embed(&SparseMatrix::identity(4), Mode::One, &p).unwrap();
        let id2 = embed(&SparseMatrix::identity(3), Mode::Two, &p).unwrap();
        assert_eq!(id1, SparseMatrix::identity(12));
        assert_eq!(id2, SparseMatrix::identity(12));

        let (a1, _) = ladder_ops(3);
        let (a2, a2_dag) = ladder_ops(2);
        let a1j = embed(&a1, Mode::One, &p).unwrap();
        let a2j = embed(&a2, Mode::Two, &p).unwrap();
        let a2dj = embed(&a2_dag, Mode::Two, &p).unwrap();
        let comm = a1j
            .matmul(&a2dj)
            .unwrap()
            .sub(&a2dj.matmul(&a1j).unwrap())
            .unwrap();
        assert_eq!(comm.nnz(), 0);

        let b = FockBasis::of(&p);
        let mut ket = vec![c(0.0); 12];
        ket[b.index(1, 1).unwrap()] = c(1.0);
        let out = a1j.matmul(&a2j).unwrap().apply(&ket);
        let mut expect = vec![c(0.0); 12];
        expect[b.index(0, 0).unwrap()] = c(1.0);
        assert_eq!(out, expect);

        assert!(matches!(
            embed(&a1, Mode::Two, &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn embed_scales_sparsity_by_other_dimension() {
        let p = params(5, 3);
        let (a1, a1_dag) = ladder_ops(5);
        let (a2, _) = ladder_ops(3);
        assert_eq!(embed(&a1, Mode::One, &p).unwrap().nnz(), a1.nnz() * 4);
        assert_eq!(
            embed(&a1_dag, Mode::One, &p).unwrap().nnz(),
            a1_dag.nnz() * 4
        );
        assert_eq!(embed(&a2, Mode::Two, &p).unwrap().nnz(), a2.nnz() * 6);
    }
}
