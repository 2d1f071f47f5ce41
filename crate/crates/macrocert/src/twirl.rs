//! Averaging a joint system⊗frame state over a U(1)-type symmetry.
//!
//! The conserved label K = n_rf + n_sys splits the joint space into
//! superselection sectors; twirling erases every cross-sector coherence and
//! leaves a block-diagonal state. Trace distances are then additive over
//! blocks, which is what makes the exact computations here cheap.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::number_states::{MixtureEnsemble, NumberState};
use crate::numerics::{symmetric_eigenvalues, trace_norm_symmetric, NeumaierSum};

/// Blocks lighter than this are dropped and the rest renormalized.
pub const BLOCK_WEIGHT_FLOOR: f64 = 1e-15;

/// One superselection sector of a twirled joint state.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    /// Total conserved quantum number.
    pub label: i64,
    /// Ordered joint basis (rf_index, sys_index) with rf + sys = label.
    pub basis: Vec<(i64, i64)>,
    /// Probability carried by this sector.
    pub weight: f64,
    /// Sector density matrix, trace 1, real symmetric.
    pub matrix: DMatrix<f64>,
}

/// A twirled state: map from sector label to block.
#[derive(Debug, Clone, Default)]
pub struct BlockDiagonalState {
    blocks: BTreeMap<i64, SectorBlock>,
}

impl BlockDiagonalState {
    pub fn blocks(&self) -> impl Iterator<Item = &SectorBlock> {
        self.blocks.values()
    }

    pub fn labels(&self) -> impl Iterator<Item = i64> + '_ {
        self.blocks.keys().copied()
    }

    pub fn block(&self, label: i64) -> Option<&SectorBlock> {
        self.blocks.get(&label)
    }

    pub fn total_weight(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for b in self.blocks.values() {
            acc.add(b.weight);
        }
        acc.value()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Insert a block under its own label, replacing any previous one.
    pub fn insert(&mut self, block: SectorBlock) {
        self.blocks.insert(block.label, block);
    }
}

/// Twirl a pure product state |sys⟩⟨sys| ⊗ |rf⟩⟨rf|.
///
/// Every block of the result is rank one: the sector vector has entries
/// ψ_{K−n} r_n / √P_K over the joint pairs with rf index n.
pub fn twirl_pure_joint(sys: &NumberState, rf: &NumberState) -> BlockDiagonalState {
    twirl_joint_components(&[(1.0, sys, rf)])
}

/// Twirl an incoherent system ensemble against a pure reference frame.
pub fn twirl_mixture_joint(sys: &MixtureEnsemble, rf: &NumberState) -> BlockDiagonalState {
    let comps: Vec<(f64, &NumberState, &NumberState)> =
        sys.components().iter().map(|(w, s)| (*w, s, rf)).collect();
    twirl_joint_components(&comps)
}

/// Twirl a convex combination of product states Σ w_i |sys_i⟩⟨sys_i| ⊗ |rf_i⟩⟨rf_i|.
///
/// This is the general engine behind the pure and mixture entry points; it
/// also serves mixed reference frames and two-copy constructions. Blocks are
/// merged by label with a fixed deterministic ordering.
pub fn twirl_joint_components(components: &[(f64, &NumberState, &NumberState)]) -> BlockDiagonalState {
    // Pass 1: per-sector joint basis, as a sorted set of (rf, sys) pairs.
    let mut bases: BTreeMap<i64, BTreeMap<(i64, i64), usize>> = BTreeMap::new();
    for (_, sys, rf) in components {
        for (nr, ar) in rf.iter() {
            if ar == 0.0 {
                continue;
            }
            for (ns, as_) in sys.iter() {
                if as_ == 0.0 {
                    continue;
                }
                bases.entry(nr + ns).or_default().insert((nr, ns), 0);
            }
        }
    }
    for basis in bases.values_mut() {
        for (slot, idx) in basis.values_mut().zip(0..) {
            *slot = idx;
        }
    }

    // Pass 2: accumulate w · λ λᵀ per sector.
    let mut mats: BTreeMap<i64, DMatrix<f64>> = bases
        .iter()
        .map(|(&k, basis)| (k, DMatrix::zeros(basis.len(), basis.len())))
        .collect();
    for (w, sys, rf) in components {
        for (k, basis) in &bases {
            let mut lambda: Vec<(usize, f64)> = Vec::new();
            for (&(nr, ns), &idx) in basis {
                let v = rf.amplitude_at(nr) * sys.amplitude_at(ns);
                if v != 0.0 {
                    lambda.push((idx, v));
                }
            }
            if lambda.is_empty() {
                continue;
            }
            let mat = mats.get_mut(k).expect("basis and matrix maps share keys");
            for &(i, vi) in &lambda {
                for &(j, vj) in &lambda {
                    mat[(i, j)] += w * vi * vj;
                }
            }
        }
    }

    // Normalize, drop numerically empty blocks, renormalize total weight.
    let mut blocks = BTreeMap::new();
    let mut total = NeumaierSum::new();
    for mat in mats.values() {
        total.add(mat.trace());
    }
    let total = total.value();
    let mut kept = NeumaierSum::new();
    let mut raw: Vec<(i64, Vec<(i64, i64)>, f64, DMatrix<f64>)> = Vec::new();
    for (k, mat) in mats {
        let p = mat.trace() / total;
        if p < BLOCK_WEIGHT_FLOOR {
            continue;
        }
        let basis: Vec<(i64, i64)> = bases[&k].keys().copied().collect();
        let normalized = &mat / mat.trace();
        kept.add(p);
        raw.push((k, basis, p, normalized));
    }
    let kept = kept.value();
    for (k, basis, p, matrix) in raw {
        blocks.insert(
            k,
            SectorBlock { label: k, basis, weight: p / kept, matrix },
        );
    }
    BlockDiagonalState { blocks }
}

/// Trace distance ½ Σ_K ‖P_K^a M_K^a − P_K^b M_K^b‖₁ between two
/// block-diagonal states, computed per sector on the union basis.
pub fn trace_distance_blocks(a: &BlockDiagonalState, b: &BlockDiagonalState) -> f64 {
    let labels: std::collections::BTreeSet<i64> = a.labels().chain(b.labels()).collect();
    let mut acc = NeumaierSum::new();
    for k in labels {
        let block_a = a.block(k);
        let block_b = b.block(k);
        match (block_a, block_b) {
            (Some(ba), Some(bb)) => {
                if ba.basis == bb.basis {
                    let diff = ba.weight * &ba.matrix - bb.weight * &bb.matrix;
                    acc.add(trace_norm_symmetric(&diff));
                } else {
                    // Align the two blocks on the union of their bases.
                    let union: Vec<(i64, i64)> = {
                        let mut set: std::collections::BTreeSet<(i64, i64)> =
                            ba.basis.iter().copied().collect();
                        set.extend(bb.basis.iter().copied());
                        set.into_iter().collect()
                    };
                    let embed = |blk: &SectorBlock| {
                        let mut m = DMatrix::zeros(union.len(), union.len());
                        let pos: BTreeMap<(i64, i64), usize> =
                            union.iter().copied().zip(0..).collect();
                        for (i, pi) in blk.basis.iter().enumerate() {
                            for (j, pj) in blk.basis.iter().enumerate() {
                                m[(pos[pi], pos[pj])] = blk.matrix[(i, j)];
                            }
                        }
                        m
                    };
                    let diff = ba.weight * embed(ba) - bb.weight * embed(bb);
                    acc.add(trace_norm_symmetric(&diff));
                }
            }
            (Some(ba), None) => acc.add(ba.weight * trace_norm_symmetric(&ba.matrix)),
            (None, Some(bb)) => acc.add(bb.weight * trace_norm_symmetric(&bb.matrix)),
            (None, None) => unreachable!("label came from one of the two states"),
        }
    }
    0.5 * acc.value()
}

/// Eigenvalues of the sector matrix with label `k`, descending.
pub fn block_spectrum(state: &BlockDiagonalState, k: i64) -> Result<Vec<f64>> {
    let block = state.block(k).ok_or(Error::MissingSector(k))?;
    Ok(symmetric_eigenvalues(&block.matrix))
}

/// Sector vector of a rank-one block (checked), ordered like `basis`.
pub fn block_vector(block: &SectorBlock) -> Option<DVector<f64>> {
    let ev = symmetric_eigenvalues(&block.matrix);
    if ev.len() > 1 && ev[1].abs() > 1e-10 {
        return None;
    }
    let (_, vecs) = crate::numerics::symmetric_eigen_sorted(&block.matrix);
    Some(vecs.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number_states::{make_coherent_rf, make_two_branch};

    #[test]
    fn fock_frame_destroys_coherence() {
        // Frame with definite number: every block is one-dimensional and the
        // superposition twirls to the same state as the mixture.
        let (sup, mix) = make_two_branch(0, 2).unwrap();
        let rf = NumberState::basis(0);
        let a = twirl_pure_joint(&sup, &rf);
        let b = twirl_mixture_joint(&mix, &rf);
        for block in a.blocks() {
            assert_eq!(block.basis.len(), 1);
        }
        assert!(trace_distance_blocks(&a, &b) < 1e-15);
    }

    #[test]
    fn coherent_frame_block_matches_closed_form() {
        // Sector K >= N pairs q_K with q_{K-N}.
        let n = 3_i64;
        let mu = 6.0;
        let (sup, _) = make_two_branch(0, n).unwrap();
        let rf = make_coherent_rf(mu, 1e-12).unwrap();
        let tw = twirl_pure_joint(&sup, &rf);
        let k = 7_i64;
        let block = tw.block(k).unwrap();
        assert_eq!(block.basis, vec![(k - n, n), (k, 0)]);
        let qk = rf.amplitude_at(k).powi(2);
        let qkn = rf.amplitude_at(k - n).powi(2);
        let m = &block.matrix;
        // basis order is ascending rf index: (K-N, N) first
        assert!((m[(0, 0)] - qkn / (qk + qkn)).abs() < 1e-12);
        assert!((m[(1, 1)] - qk / (qk + qkn)).abs() < 1e-12);
        assert!((m[(0, 1)] - (qk * qkn).sqrt() / (qk + qkn)).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        let (sup, mix) = make_two_branch(0, 5).unwrap();
        let rf = make_coherent_rf(9.0, 1e-12).unwrap();
        assert!((twirl_pure_joint(&sup, &rf).total_weight() - 1.0).abs() < 1e-10);
        assert!((twirl_mixture_joint(&mix, &rf).total_weight() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn distance_to_self_is_zero() {
        let (sup, _) = make_two_branch(0, 4).unwrap();
        let rf = make_coherent_rf(7.0, 1e-12).unwrap();
        let tw = twirl_pure_joint(&sup, &rf);
        assert_eq!(trace_distance_blocks(&tw, &tw), 0.0);
    }

    #[test]
    fn fock_system_blocks_are_rank_one() {
        let sys = NumberState::basis(5);
        let rf = make_coherent_rf(4.0, 1e-12).unwrap();
        let tw = twirl_pure_joint(&sys, &rf);
        for block in tw.blocks() {
            let spec = block_spectrum(&tw, block.label).unwrap();
            assert!((spec[0] - 1.0).abs() < 1e-10);
        }
        assert!(trace_distance_blocks(&tw, &tw) < 1e-15);
    }

    #[test]
    fn single_component_mixture_equals_pure() {
        let (sup, _) = make_two_branch(1, 4).unwrap();
        let rf = make_coherent_rf(5.0, 1e-12).unwrap();
        let a = twirl_pure_joint(&sup, &rf);
        let b = twirl_mixture_joint(&MixtureEnsemble::pure(sup), &rf);
        assert!(trace_distance_blocks(&a, &b) < 1e-14);
    }

    #[test]
    fn mixture_of_identical_states_is_degenerate_convexity() {
        let (sup, _) = make_two_branch(0, 2).unwrap();
        let rf = make_coherent_rf(3.0, 1e-12).unwrap();
        let ens = MixtureEnsemble::new(vec![(0.5, sup.clone()), (0.5, sup.clone())]).unwrap();
        let a = twirl_mixture_joint(&ens, &rf);
        let b = twirl_pure_joint(&sup, &rf);
        assert!(trace_distance_blocks(&a, &b) < 1e-14);
    }

    #[test]
    fn mixture_block_is_diagonal() {
        let n = 2_i64;
        let (_, mix) = make_two_branch(0, n).unwrap();
        let rf = make_coherent_rf(4.0, 1e-12).unwrap();
        let tw = twirl_mixture_joint(&mix, &rf);
        let block = tw.block(4).unwrap();
        // eigenvalues q_4/(q_4+q_2), q_2/(q_4+q_2) with Poisson(4) weights
        let q4 = rf.amplitude_at(4).powi(2);
        let q2 = rf.amplitude_at(2).powi(2);
        let spec = block_spectrum(&tw, 4).unwrap();
        let want_hi = q4.max(q2) / (q4 + q2);
        assert!((spec[0] - want_hi).abs() < 1e-12);
        assert!(block.matrix[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn missing_sector_is_an_error() {
        let tw = twirl_pure_joint(&NumberState::basis(0), &NumberState::basis(0));
        assert!(matches!(block_spectrum(&tw, 99), Err(Error::MissingSector(99))));
    }
}
