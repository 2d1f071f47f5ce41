//! Beyond two branches: Gaussian-dephased counterparts of arbitrary
//! real-amplitude states, the exact twirled trace distance between a state
//! and its dephased twin, the frame-variance upper bound on that distance,
//! and the linear-size scaling demonstration for the sine frame.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number_states::{make_coherent_rf, make_sine_rf, NumberState, RfSpec, DEFAULT_TAIL_MASS};
use crate::numerics::NeumaierSum;
use crate::twirl::{twirl_joint_components, BlockDiagonalState, SectorBlock};

/// Suppression factor between components separated by `dn` under Gaussian
/// dephasing of width `sigma` (quantum-number units): exp(−dn²/(2σ²)).
pub fn dephase_factor(dn: i64, sigma: f64) -> f64 {
    if dn == 0 {
        return 1.0;
    }
    if sigma == 0.0 {
        return 0.0;
    }
    let d = dn as f64;
    (-d * d / (2.0 * sigma * sigma)).exp()
}

/// Density matrix of a pure state after the Gaussian dephasing channel:
/// entries ψ_n ψ_m exp(−(n−m)²/(2σ²)).
#[derive(Debug, Clone)]
pub struct DephasedState {
    pub base: NumberState,
    pub sigma: f64,
    pub matrix: DMatrix<f64>,
}

/// Apply the Gaussian dephasing channel of width `sigma` to a pure state.
///
/// The channel averages over random number-diagonal phases, so the result
/// is positive semidefinite by construction; σ → ∞ returns the projector,
/// small σ drives the off-diagonals to zero.
pub fn gaussian_dephase(state: &NumberState, sigma: f64) -> Result<DephasedState> {
    if !(sigma > 0.0) {
        return Err(Error::domain("dephasing width must be positive"));
    }
    let a = state.amplitudes();
    let dim = a.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            matrix[(i, j)] = a[i] * a[j] * dephase_factor(i as i64 - j as i64, sigma);
        }
    }
    Ok(DephasedState { base: state.clone(), sigma, matrix })
}

/// Exact twirled distance together with the per-component convexity bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeneralDistance {
    /// ½ Σ_K ‖block difference‖₁ on the merged (possibly mixed-frame) blocks.
    pub exact: f64,
    /// Σ_i q_i t^{(i)}: joint convexity upper bound from pure components.
    pub convexity_bound: f64,
}

/// Dephase the sector matrices of a twirled state in the system index:
/// within a sector the conserved label ties rf and system indices together,
/// so the suppression factor depends only on the system separation.
fn dephase_blocks(state: &BlockDiagonalState, sigma: f64) -> BlockDiagonalState {
    let mut out = BlockDiagonalState::default();
    for block in state.blocks() {
        let dim = block.basis.len();
        let mut matrix = block.matrix.clone();
        for i in 0..dim {
            for j in 0..dim {
                let dn = block.basis[i].1 - block.basis[j].1;
                matrix[(i, j)] *= dephase_factor(dn, sigma);
            }
        }
        out.insert(SectorBlock {
            label: block.label,
            basis: block.basis.clone(),
            weight: block.weight,
            matrix,
        });
    }
    out
}

/// Exact twirled trace distance between a pure state and its Gaussian-dephased
/// counterpart, measured with the reference frame described by `rf`.
///
/// For frame mixtures the blocks are merged before the trace norm (the exact
/// value); the convexity bound Σ q_i t^{(i)} is reported alongside.
pub fn twirled_trace_distance_general(
    state: &NumberState,
    rf: &RfSpec,
    sigma: f64,
) -> Result<GeneralDistance> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::domain("dephasing width must be nonnegative"));
    }
    let components = rf.realize()?;
    // exact: merge all frame components, then dephase and take block norms
    let comp_refs: Vec<(f64, &NumberState, &NumberState)> =
        components.iter().map(|(w, r)| (*w, state, r)).collect();
    let pure = twirl_joint_components(&comp_refs);
    let dephased = dephase_blocks(&pure, sigma);
    let exact = crate::twirl::trace_distance_blocks(&pure, &dephased);

    // convexity bound: per-component distances, weighted
    let mut bound = NeumaierSum::new();
    for (w, r) in &components {
        let tw = twirl_joint_components(&[(1.0, state, r)]);
        let deph = dephase_blocks(&tw, sigma);
        bound.add(w * crate::twirl::trace_distance_blocks(&tw, &deph));
    }
    Ok(GeneralDistance { exact, convexity_bound: bound.value() })
}

/// Bound report pairing the frame-variance bound with an exact distance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: f64,
    pub exact: f64,
    pub beta: f64,
    pub rf_variance_avg: f64,
}

/// Trace-distance bound √(Σ_i q_i Var((r^(i))²) / N^(2β)) from the average
/// frame variance; no state enters, only the frame and the coherence scale.
pub fn variance_bound_value(rf: &RfSpec, beta: f64, n: u64) -> Result<f64> {
    if !(beta > 0.0) || n < 1 {
        return Err(Error::domain("needs β > 0 and N ≥ 1"));
    }
    let var = rf.average_variance()?;
    Ok((var / (n as f64).powf(2.0 * beta)).sqrt())
}

/// Full report: the variance bound for dephasing width σ = N^β against the
/// exact twirled distance of `state` from its dephased counterpart, where N
/// is the width of the state's window.
pub fn variance_bound(state: &NumberState, rf: &RfSpec, beta: f64) -> Result<BoundReport> {
    let n = (state.dim() as u64).saturating_sub(1).max(1);
    let bound = variance_bound_value(rf, beta, n)?;
    let sigma = (n as f64).powf(beta);
    let exact = twirled_trace_distance_general(state, rf, sigma)?.exact;
    Ok(BoundReport {
        bound,
        exact,
        beta,
        rf_variance_avg: rf.average_variance()?,
    })
}

/// Which frame family a scaling curve runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRf {
    /// Sine state with parameter round(c·N).
    Sine,
    /// Coherent state with mean photon number c·N.
    Coherent,
}

/// Exact twirled trace distance between the two-branch state at (0, N) and
/// its 50/50 mixture, with a frame that grows linearly in N.
pub fn scaling_curve(kind: ScalingRf, c: f64, n_list: &[u64]) -> Result<Vec<(u64, f64)>> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::domain("scale factor c must be nonnegative"));
    }
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n < 1 {
            return Err(Error::domain("superposition size must be at least 1"));
        }
        let rf = match kind {
            ScalingRf::Sine => make_sine_rf((c * n as f64).round() as u64)?,
            ScalingRf::Coherent => {
                let mu = c * n as f64;
                if mu == 0.0 {
                    NumberState::basis(0)
                } else {
                    make_coherent_rf(mu, DEFAULT_TAIL_MASS)?
                }
            }
        };
        let (sup, _) = crate::number_states::make_two_branch(0, n as i64)?;
        // σ = 0 dephasing reproduces the two-branch incoherent mixture
        let custom = RfSpec::Custom { state: rf };
        let t = twirled_trace_distance_general(&sup, &custom, 0.0)?.exact;
        out.push((n, t));
    }
    Ok(out)
}

/// Sine-frame scaling curve: exact t for frames of size round(c·N).
pub fn sine_scaling_curve(c: f64, n_list: &[u64]) -> Result<Vec<(u64, f64)>> {
    scaling_curve(ScalingRf::Sine, c, n_list)
}

/// Seeded random state on a window of `dim` amplitudes: weights from a
/// symmetric Dirichlet draw, amplitudes their square roots.
pub fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> Result<NumberState> {
    if dim == 0 {
        return Err(Error::domain("state needs at least one amplitude"));
    }
    // symmetric Dirichlet(1) via normalized exponentials
    let mut weights = Vec::with_capacity(dim);
    let mut total = 0.0;
    for _ in 0..dim {
        let u: f64 = rng.gen_range(1e-12..1.0);
        let e = -u.ln();
        weights.push(e);
        total += e;
    }
    let amps: Vec<f64> = weights.into_iter().map(|w| (w / total).sqrt()).collect();
    NumberState::new(0, amps)
}

/// Convenience: a fresh seeded generator for reproducible instances.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number_states::make_two_branch;

    #[test]
    fn dephase_entries_match_formula() {
        // uniform five-component state, σ = 2: entry (0,4) is (1/5)·e^{−16/8}
        let amps = vec![1.0; 5];
        let state = NumberState::new(0, amps).unwrap();
        let d = gaussian_dephase(&state, 2.0).unwrap();
        let want = 0.2 * (-2.0_f64).exp();
        assert!((d.matrix[(0, 4)] - want).abs() < 1e-15);
        // diagonal equals the squared amplitudes exactly
        for i in 0..5 {
            assert_eq!(d.matrix[(i, i)], state.amplitudes()[i].powi(2));
        }
    }

    #[test]
    fn dephase_limits() {
        let (sup, _) = make_two_branch(0, 6).unwrap();
        // huge σ: projector recovered entrywise
        let d = gaussian_dephase(&sup, 1e9).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let want = sup.amplitudes()[i] * sup.amplitudes()[j];
                assert!((d.matrix[(i, j)] - want).abs() < 1e-12);
            }
        }
        // tiny σ: off-diagonals die, the two-branch mixture remains
        let d = gaussian_dephase(&sup, 1e-3).unwrap();
        assert!(d.matrix[(0, 6)].abs() < 1e-300);
        assert!(gaussian_dephase(&sup, 0.0).is_err());
    }

    #[test]
    fn dephased_state_is_psd_with_unit_trace() {
        let mut rng = seeded_rng(7);
        for _ in 0..5 {
            let state = random_state(12, &mut rng).unwrap();
            let d = gaussian_dephase(&state, 3.0).unwrap();
            let eigs = crate::numerics::symmetric_eigenvalues(&d.matrix);
            assert!(eigs.iter().all(|l| *l > -1e-10));
            assert!((d.matrix.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fock_frame_gives_zero_distance() {
        let (sup, _) = make_two_branch(0, 4).unwrap();
        let rf = RfSpec::Custom { state: NumberState::basis(0) };
        let g = twirled_trace_distance_general(&sup, &rf, 1.0).unwrap();
        assert!(g.exact < 1e-14);
    }

    #[test]
    fn sigma_zero_two_branch_reduces_to_photon_case() {
        let n = 8;
        let mu = 256.0;
        let (sup, _) = make_two_branch(0, n).unwrap();
        let rf = RfSpec::Coherent { mean_photon: mu };
        let g = twirled_trace_distance_general(&sup, &rf, 0.0).unwrap();
        let photon = crate::canonical::photon_trace_distance(n as u64, mu).unwrap();
        assert!(
            (g.exact - photon.exact).abs() < 1e-10,
            "{} vs {}",
            g.exact,
            photon.exact
        );
    }

    #[test]
    fn exact_never_exceeds_convexity_bound() {
        let mut rng = seeded_rng(21);
        let state = random_state(10, &mut rng).unwrap();
        let rf = RfSpec::Mixture {
            components: vec![
                (0.3, RfSpec::Sine { n: 24 }),
                (0.7, RfSpec::Coherent { mean_photon: 16.0 }),
            ],
        };
        let g = twirled_trace_distance_general(&state, &rf, 2.0).unwrap();
        assert!(g.exact <= g.convexity_bound + 1e-10);
        assert!(g.exact > 0.0);
    }

    #[test]
    fn variance_bound_closed_forms() {
        // coherent frame: average variance is μ, bound √(μ/N^{2β})
        let rf = RfSpec::Coherent { mean_photon: 36.0 };
        let b = variance_bound_value(&rf, 1.0, 12).unwrap();
        assert!((b - (36.0_f64 / 144.0).sqrt()).abs() < 1e-6);

        // single Fock component: zero variance, zero bound, zero distance
        let fock = RfSpec::Custom { state: NumberState::basis(3) };
        let b = variance_bound_value(&fock, 1.0, 8).unwrap();
        assert_eq!(b, 0.0);
        let (sup, _) = make_two_branch(0, 8).unwrap();
        let rep = variance_bound(&sup, &fock, 1.0).unwrap();
        assert!(rep.exact < 1e-14);
        assert!(rep.exact <= rep.bound + 1e-10);
    }

    #[test]
    fn bound_dominates_exact_on_random_instances() {
        let mut rng = seeded_rng(99);
        for i in 0..10 {
            let state = random_state(8 + (i % 5), &mut rng).unwrap();
            let rf = RfSpec::Sine { n: 20 + 3 * i as u64 };
            let beta = 0.6 + 0.05 * i as f64;
            let rep = variance_bound(&state, &rf, beta).unwrap();
            assert!(
                rep.exact <= rep.bound + 1e-10,
                "instance {i}: exact {} bound {}",
                rep.exact,
                rep.bound
            );
        }
    }

    #[test]
    fn scaling_curves_separate_sine_from_coherent() {
        let ns = [8u64, 16, 32];
        let sine = sine_scaling_curve(2.0, &ns).unwrap();
        let coh = scaling_curve(ScalingRf::Coherent, 2.0, &ns).unwrap();
        // sine stays on a constant floor; coherent decays exponentially
        for window in sine.windows(2) {
            assert!(window[1].1 <= window[0].1 + 1e-9);
        }
        assert!(sine.last().unwrap().1 > 0.15);
        assert!(coh.last().unwrap().1 < sine.last().unwrap().1);
        // degenerate frame: c = 0 kills the signal entirely
        let zero = sine_scaling_curve(0.0, &[4, 8]).unwrap();
        assert!(zero.iter().all(|(_, t)| *t < 1e-14));
    }

    #[test]
    fn sine_floor_values_match_closed_form() {
        // ½ Σ r_K r_{K−N} for the sine frame has the closed form
        // [(P−N+1)cos(Nθ) + sin((P−N+1)θ)/sin(θ)] / (2(P+2)), θ = π/(P+2).
        for (n, c) in [(8u64, 2.0), (16, 2.0), (8, 4.0)] {
            let p = (c * n as f64).round();
            let theta = std::f64::consts::PI / (p + 2.0);
            let want = ((p - n as f64 + 1.0) * (n as f64 * theta).cos()
                + ((p - n as f64 + 1.0) * theta).sin() / theta.sin())
                / (2.0 * (p + 2.0));
            let got = sine_scaling_curve(c, &[n]).unwrap()[0].1;
            assert!((got - want).abs() < 1e-12, "N={n} c={c}: {got} vs {want}");
        }
    }
}
