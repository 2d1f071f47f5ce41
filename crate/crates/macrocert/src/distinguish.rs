//! Discrimination metrics: single-shot success, Chernoff error bounds, the
//! classical Chernoff exponent of an outcome distribution pair, the optimal
//! phase-invariant two-element measurement, and repetition economics.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number_states::NumberState;
use crate::numerics::{golden_section_min, NeumaierSum};
use crate::twirl::BlockDiagonalState;

/// A nonnegative quantity that may exceed any floating-point range.
///
/// Serialization never emits a raw IEEE infinity; unbounded values carry an
/// explicit flag instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extended {
    Finite { value: f64 },
    Unbounded,
}

impl Extended {
    pub fn finite(value: f64) -> Self {
        Extended::Finite { value }
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            Extended::Finite { value } => Some(*value),
            Extended::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Extended::Unbounded)
    }
}

impl std::fmt::Display for Extended {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite { value } => write!(f, "{value}"),
            Extended::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// Optimal single-shot success probability ½ + t for trace distance t.
pub fn helstrom_success(t: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&t) || !t.is_finite() {
        return Err(Error::domain(format!("trace distance {t} outside [0, 1/2]")));
    }
    Ok(0.5 + t)
}

/// Chernoff bracket on the n-repetition error probability:
/// lower (1−t)ⁿ from the quantum Chernoff bound, upper (1−t²)^(n/2).
pub fn chernoff_bounds(t: f64, n: u64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) || !t.is_finite() {
        return Err(Error::domain(format!("trace distance {t} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::domain("repetition count must be at least 1"));
    }
    let lower = (1.0 - t).powi(n as i32);
    let upper = (1.0 - t * t).powf(n as f64 / 2.0);
    Ok((lower, upper))
}

/// Probabilities of the outcomes of one measurement.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::domain("distribution needs at least one outcome"));
        }
        let mut total = NeumaierSum::new();
        for p in &probabilities {
            if !p.is_finite() || *p < -1e-14 {
                return Err(Error::domain(format!("probability {p} invalid")));
            }
            total.add(p.max(0.0));
        }
        if (total.value() - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "probabilities sum to {}, not 1",
                total.value()
            )));
        }
        let probabilities = probabilities.into_iter().map(|p| p.max(0.0)).collect();
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

/// Classical Chernoff exponent ξ = −log min_{0≤s≤1} Σ_i p_i^s q_i^(1−s).
///
/// Terms where both probabilities vanish are skipped; a term with exactly one
/// vanishing probability is zero for every s, via the continuous extension
/// exp(s ln p + (1−s) ln q). Disjoint supports give an unbounded exponent.
pub fn classical_chernoff_exponent(
    p: &OutcomeDistribution,
    q: &OutcomeDistribution,
) -> Result<Extended> {
    let (pp, qq) = (p.probabilities(), q.probabilities());
    if pp.len() != qq.len() {
        return Err(Error::LengthMismatch { left: pp.len(), right: qq.len() });
    }
    let shared: Vec<(f64, f64)> = pp
        .iter()
        .zip(qq)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if shared.is_empty() {
        return Ok(Extended::Unbounded);
    }
    let objective = |s: f64| -> f64 {
        let mut acc = NeumaierSum::new();
        for &(lp, lq) in &shared {
            acc.add((s * lp + (1.0 - s) * lq).exp());
        }
        acc.value()
    };
    let (_, min_val) = golden_section_min(objective, 0.0, 1.0, 1e-10);
    if min_val <= 0.0 {
        return Ok(Extended::Unbounded);
    }
    Ok(Extended::finite((-min_val.ln()).max(0.0)))
}

/// One sector of the two-element phase-invariant measurement.
#[derive(Debug, Clone)]
pub enum PovmSector {
    /// Two-dimensional sector carrying the projectors onto
    /// (|K⟩|0⟩ ± |K−N⟩|N⟩)/√2; the basis is stored ascending in rf index,
    /// so the projector data is the same (1, ±1)/√2 pattern in either order.
    Paired { basis: [(i64, i64); 2] },
    /// Sector reached by only one branch; both elements take half of it.
    Unpaired { basis: (i64, i64) },
}

impl PovmSector {
    /// Matrix of the "+" element on the sector basis.
    pub fn plus_matrix(&self) -> DMatrix<f64> {
        match self {
            PovmSector::Paired { .. } => DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]),
            PovmSector::Unpaired { .. } => DMatrix::from_element(1, 1, 0.5),
        }
    }

    /// Matrix of the "−" element on the sector basis.
    pub fn minus_matrix(&self) -> DMatrix<f64> {
        match self {
            PovmSector::Paired { .. } => DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]),
            PovmSector::Unpaired { .. } => DMatrix::from_element(1, 1, 0.5),
        }
    }

    pub fn basis(&self) -> Vec<(i64, i64)> {
        match self {
            PovmSector::Paired { basis } => basis.to_vec(),
            PovmSector::Unpaired { basis } => vec![*basis],
        }
    }
}

/// Phase-invariant two-element POVM {M₊, M₋}, block-diagonal over sectors.
#[derive(Debug, Clone)]
pub struct PhaseInvariantPovm {
    pub branch_shift: i64,
    sectors: BTreeMap<i64, PovmSector>,
}

impl PhaseInvariantPovm {
    pub fn sectors(&self) -> impl Iterator<Item = (&i64, &PovmSector)> {
        self.sectors.iter()
    }

    pub fn sector(&self, k: i64) -> Option<&PovmSector> {
        self.sectors.get(&k)
    }
}

/// The measurement that attains the twirled trace distance for a two-branch
/// system at 0 and N against a pure reference frame.
pub fn optimal_photon_povm(n_shift: i64, rf: &NumberState) -> Result<PhaseInvariantPovm> {
    if n_shift < 1 {
        return Err(Error::domain("branch separation must be at least 1"));
    }
    let mut sectors = BTreeMap::new();
    let lo = rf.offset();
    let hi = rf.last_index();
    for k in lo..=hi + n_shift {
        let has_low_branch = k >= lo && k <= hi; // pair (K, 0)
        let has_high_branch = k - n_shift >= lo && k - n_shift <= hi; // pair (K−N, N)
        let sector = match (has_low_branch, has_high_branch) {
            (true, true) => PovmSector::Paired { basis: [(k - n_shift, n_shift), (k, 0)] },
            (true, false) => PovmSector::Unpaired { basis: (k, 0) },
            (false, true) => PovmSector::Unpaired { basis: (k - n_shift, n_shift) },
            (false, false) => continue,
        };
        sectors.insert(k, sector);
    }
    Ok(PhaseInvariantPovm { branch_shift: n_shift, sectors })
}

/// Discrimination advantage of the POVM on a (superposition, mixture) pair:
/// returns ½ + tr[M₊ (ρ_sup − ρ_mix)], which equals the Helstrom value
/// ½ + t when the measurement is optimal. Sectors the POVM does not cover
/// contribute nothing to the advantage.
pub fn povm_success(
    povm: &PhaseInvariantPovm,
    sup: &BlockDiagonalState,
    mix: &BlockDiagonalState,
) -> f64 {
    let mut advantage = NeumaierSum::new();
    let labels: std::collections::BTreeSet<i64> = sup.labels().chain(mix.labels()).collect();
    for k in labels {
        let Some(sector) = povm.sector(k) else { continue };
        let basis = sector.basis();
        let mplus = sector.plus_matrix();
        let overlap = |state: &BlockDiagonalState| -> f64 {
            let Some(block) = state.block(k) else { return 0.0 };
            let mut tr = 0.0;
            for (i, pi) in basis.iter().enumerate() {
                for (j, pj) in basis.iter().enumerate() {
                    let bi = block.basis.iter().position(|p| p == pi);
                    let bj = block.basis.iter().position(|p| p == pj);
                    if let (Some(bi), Some(bj)) = (bi, bj) {
                        tr += mplus[(i, j)] * block.weight * block.matrix[(bi, bj)];
                    }
                }
            }
            tr
        };
        advantage.add(overlap(sup) - overlap(mix));
    }
    0.5 + advantage.value()
}

/// Outcome distribution (p₊, p₋) of the POVM on a twirled state.
pub fn povm_outcomes(
    povm: &PhaseInvariantPovm,
    state: &BlockDiagonalState,
) -> OutcomeDistribution {
    let mut plus = NeumaierSum::new();
    for block in state.blocks() {
        let Some(sector) = povm.sector(block.label) else {
            // uncovered weight splits evenly
            plus.add(0.5 * block.weight);
            continue;
        };
        let basis = sector.basis();
        let mplus = sector.plus_matrix();
        for (i, pi) in basis.iter().enumerate() {
            for (j, pj) in basis.iter().enumerate() {
                let bi = block.basis.iter().position(|p| p == pi);
                let bj = block.basis.iter().position(|p| p == pj);
                if let (Some(bi), Some(bj)) = (bi, bj) {
                    plus.add(mplus[(i, j)] * block.weight * block.matrix[(bi, bj)]);
                }
            }
        }
    }
    let p = plus.value().clamp(0.0, 1.0);
    OutcomeDistribution { probabilities: vec![p, 1.0 - p] }
}

/// Repetition count bound 2 ln(1/p) exp(N^ε / (8c)).
///
/// The natural logarithm is used throughout. Exponents beyond the f64 range
/// come back flagged as unbounded rather than as a raw infinity.
pub fn repetitions_required(p_err: f64, n_size: f64, epsilon: f64, c: f64) -> Result<Extended> {
    if !(p_err > 0.0 && p_err < 1.0) {
        return Err(Error::domain("p_err must lie strictly inside (0, 1)"));
    }
    if !(n_size > 0.0) || !(c > 0.0) || !(epsilon > 0.0) {
        return Err(Error::domain("N, c and epsilon must be positive"));
    }
    let ln_pow = epsilon * n_size.ln();
    if ln_pow > 709.0 {
        return Ok(Extended::Unbounded);
    }
    let exponent = ln_pow.exp() / (8.0 * c);
    if exponent > 700.0 {
        return Ok(Extended::Unbounded);
    }
    Ok(Extended::finite(2.0 * (1.0 / p_err).ln() * exponent.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number_states::{make_coherent_rf, make_two_branch};
    use crate::twirl::{trace_distance_blocks, twirl_mixture_joint, twirl_pure_joint};

    #[test]
    fn helstrom_values() {
        assert_eq!(helstrom_success(0.0).unwrap(), 0.5);
        assert_eq!(helstrom_success(0.5).unwrap(), 1.0);
        assert_eq!(helstrom_success(0.25).unwrap(), 0.75);
        assert!(helstrom_success(0.6).is_err());
        assert!(helstrom_success(-0.1).is_err());
    }

    #[test]
    fn chernoff_values_and_ordering() {
        let (lo, hi) = chernoff_bounds(0.25, 10).unwrap();
        assert!((lo - 0.75_f64.powi(10)).abs() < 1e-15);
        assert!(lo <= hi);
        assert_eq!(chernoff_bounds(0.0, 7).unwrap(), (1.0, 1.0));
        assert_eq!(chernoff_bounds(1.0, 7).unwrap(), (0.0, 0.0));
        assert!(chernoff_bounds(0.5, 0).is_err());
    }

    #[test]
    fn chernoff_exponent_cases() {
        let p = OutcomeDistribution::new(vec![0.9, 0.1]).unwrap();
        let q = OutcomeDistribution::new(vec![0.1, 0.9]).unwrap();
        let xi = classical_chernoff_exponent(&p, &q).unwrap();
        let want = -(2.0 * (0.9_f64 * 0.1).sqrt()).ln();
        assert!((xi.as_finite().unwrap() - want).abs() < 1e-9, "{xi:?} vs {want}");

        // identical hypotheses
        let xi = classical_chernoff_exponent(&p, &p).unwrap();
        assert!(xi.as_finite().unwrap().abs() < 1e-12);

        // disjoint supports
        let a = OutcomeDistribution::new(vec![1.0, 0.0]).unwrap();
        let b = OutcomeDistribution::new(vec![0.0, 1.0]).unwrap();
        assert!(classical_chernoff_exponent(&a, &b).unwrap().is_unbounded());

        let c = OutcomeDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(
            classical_chernoff_exponent(&a, &c),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn chernoff_exponent_symmetry() {
        let p = OutcomeDistribution::new(vec![0.7, 0.2, 0.1]).unwrap();
        let q = OutcomeDistribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let a = classical_chernoff_exponent(&p, &q).unwrap().as_finite().unwrap();
        let b = classical_chernoff_exponent(&q, &p).unwrap().as_finite().unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn povm_completeness_per_sector() {
        let rf = make_coherent_rf(9.0, 1e-12).unwrap();
        let povm = optimal_photon_povm(3, &rf).unwrap();
        for (_, sector) in povm.sectors() {
            let sum = sector.plus_matrix() + sector.minus_matrix();
            let dim = sum.nrows();
            assert_eq!(sum, DMatrix::identity(dim, dim));
        }
    }

    #[test]
    fn povm_attains_trace_distance() {
        let n = 4_i64;
        let mu = 25.0;
        let (sup, mix) = make_two_branch(0, n).unwrap();
        let rf = make_coherent_rf(mu, 1e-12).unwrap();
        let a = twirl_pure_joint(&sup, &rf);
        let b = twirl_mixture_joint(&mix, &rf);
        let t = trace_distance_blocks(&a, &b);
        let povm = optimal_photon_povm(n, &rf).unwrap();
        let success = povm_success(&povm, &a, &b);
        assert!((success - (0.5 + t)).abs() < 1e-10, "{success} vs {}", 0.5 + t);
    }

    #[test]
    fn fock_frame_gives_coin_toss() {
        let n = 2_i64;
        let (sup, mix) = make_two_branch(0, n).unwrap();
        let rf = NumberState::basis(7);
        let a = twirl_pure_joint(&sup, &rf);
        let b = twirl_mixture_joint(&mix, &rf);
        let povm = optimal_photon_povm(n, &rf).unwrap();
        assert!((povm_success(&povm, &a, &b) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shift_beyond_frame_window_gives_coin_toss() {
        let rf = make_coherent_rf(2.0, 1e-9).unwrap();
        let n = rf.last_index() + 5;
        let (sup, mix) = make_two_branch(0, n).unwrap();
        let a = twirl_pure_joint(&sup, &rf);
        let b = twirl_mixture_joint(&mix, &rf);
        let povm = optimal_photon_povm(n, &rf).unwrap();
        assert!((povm_success(&povm, &a, &b) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn repetition_bound_values() {
        let r = repetitions_required(0.05, 100.0, 1.0, 1.0).unwrap();
        let want = 2.0 * 20.0_f64.ln() * 12.5_f64.exp();
        assert!((r.as_finite().unwrap() - want).abs() / want < 1e-12);
        assert!((want - 1.60e6).abs() / 1.60e6 < 0.01);

        // epsilon -> 0 limit: N^0 = 1
        let r = repetitions_required(0.05, 1e6, 1e-300, 1.0).unwrap();
        let want = 2.0 * 20.0_f64.ln() * 0.125_f64.exp();
        assert!((r.as_finite().unwrap() - want).abs() / want < 1e-9);

        // overflow policy
        let r = repetitions_required(0.05, 1e4, 2.0, 1.0).unwrap();
        assert!(r.is_unbounded());
        assert!(repetitions_required(0.0, 10.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn extended_serializes_without_raw_infinity() {
        let json = serde_json::to_string(&Extended::Unbounded).unwrap();
        assert!(json.contains("unbounded"));
        let back: Extended = serde_json::from_str(&json).unwrap();
        assert!(back.is_unbounded());
    }
}
