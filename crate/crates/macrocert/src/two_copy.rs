//! Two copies of a superposition acting as reference frames for each other,
//! and superpositions living in rotation-invariant relative degrees of
//! freedom. Covers the photon two-copy distance, the spin two-copy sector
//! combinatorics with a small brute-force oracle, and the four-qubit
//! singlet-pairing invariance checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number_states::{make_two_branch, MixtureEnsemble, NumberState};
use crate::numerics::{ln_factorial_table, symmetric_eigen_sorted, NeumaierSum};
use crate::twirl::{trace_distance_blocks, twirl_joint_components};

/// Probability shift of one total-spin sector between the coherent pair and
/// the product of mixtures.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SectorProbability {
    /// Total spin J, stored doubled so half-integers stay exact.
    pub j_doubled: i64,
    pub delta_p: f64,
}

/// Two photonic copies with no external frame: the twirled trace distance
/// between |Ψ⟩|Ψ⟩ and Ψ⊗Ψ is exactly 1/4 for every branch separation.
pub fn photon_two_copy_trace_distance(n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("branch separation must be at least 1"));
    }
    Ok(0.25)
}

/// Numerical cross-check of the photon two-copy value: one copy plays the
/// frame for the other and the joint state is twirled over the total number.
pub fn photon_two_copy_twirled(n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("branch separation must be at least 1"));
    }
    let (sup, mix) = make_two_branch(0, n as i64)?;
    let coherent_pair = twirl_joint_components(&[(1.0, &sup, &sup)]);
    let mixed_pair = product_mixture_twirl(&mix, &mix);
    Ok(trace_distance_blocks(&coherent_pair, &mixed_pair))
}

/// Twirl of a product of two incoherent ensembles.
fn product_mixture_twirl(
    a: &MixtureEnsemble,
    b: &MixtureEnsemble,
) -> crate::twirl::BlockDiagonalState {
    let mut comps: Vec<(f64, &NumberState, &NumberState)> = Vec::new();
    for (wa, sa) in a.components() {
        for (wb, sb) in b.components() {
            comps.push((wa * wb, sa, sb));
        }
    }
    twirl_joint_components(&comps)
}

/// Signed sector shift ΔP_J for two spin-N/2 GHZ copies under the full
/// rotation twirl, evaluated in log space:
/// ΔP_J = n_J β (−1)^(N−J) / (2^(N−J+1) C(2J, J)), with multiplicity
/// n_J = (2J+1)/(N+J+1) · C(2N, N+J) and pairing fraction
/// β = C(N, N−J)² (N−J)! / (C(2N, 2N−2J) (2N−2J−1)!!).
pub fn spin_two_copy_delta_pj(n: u64, j: u64) -> Result<f64> {
    if j > n {
        return Err(Error::domain(format!("sector J = {j} exceeds N = {n}")));
    }
    let nf = ln_factorial_table(2 * n as usize);
    let lnf = |k: u64| nf[k as usize];
    let ln_choose = |a: u64, b: u64| lnf(a) - lnf(b) - lnf(a - b);
    // ln (2k−1)!! = ln (2k)! − k ln 2 − ln k!, with (−1)!! = 1
    let ln_double_fact_odd = |k: u64| {
        if k == 0 {
            0.0
        } else {
            lnf(2 * k) - (k as f64) * std::f64::consts::LN_2 - lnf(k)
        }
    };
    let d = n - j; // number of cross singlets
    let ln_njd = ((2 * j + 1) as f64).ln() - ((n + j + 1) as f64).ln() + ln_choose(2 * n, n + j);
    let ln_beta = 2.0 * ln_choose(n, d) + lnf(d) - ln_choose(2 * n, 2 * d) - ln_double_fact_odd(d);
    let ln_mag = ln_njd + ln_beta
        - ((d + 1) as f64) * std::f64::consts::LN_2
        - ln_choose(2 * j, j);
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * ln_mag.exp())
}

/// Trace distance ½ Σ_J |ΔP_J| between two GHZ copies and two mixtures
/// under the orientation twirl; equals 1/4 for every N.
pub fn spin_two_copy_trace_distance(n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("copy size must be at least 1"));
    }
    let mut acc = NeumaierSum::new();
    for j in 0..=n {
        acc.add(spin_two_copy_delta_pj(n, j)?.abs());
    }
    Ok(0.5 * acc.value())
}

/// All sector shifts for a given N.
pub fn spin_two_copy_sectors(n: u64) -> Result<Vec<SectorProbability>> {
    (0..=n)
        .map(|j| {
            Ok(SectorProbability {
                j_doubled: 2 * j as i64,
                delta_p: spin_two_copy_delta_pj(n, j)?,
            })
        })
        .collect()
}

const BRUTE_FORCE_MAX_QUBITS: usize = 8;

/// Brute-force oracle for the spin two-copy sector shifts: builds the
/// 2^(2N)-dimensional Δ₁₂ explicitly, projects onto total-spin eigenspaces
/// obtained from the spectral decomposition of J², and traces.
pub fn brute_force_spin_two_copy(n: u64) -> Result<Vec<SectorProbability>> {
    let qubits = 2 * n as usize;
    if qubits == 0 || qubits > BRUTE_FORCE_MAX_QUBITS {
        return Err(Error::Sizing { needed: 1 << qubits, max: 1 << BRUTE_FORCE_MAX_QUBITS });
    }
    let dim = 1usize << qubits;
    let delta12 = build_delta12(n as usize);
    let projectors = total_spin_projectors(qubits);
    let mut out = Vec::new();
    for (j_doubled, proj) in projectors {
        let mut tr = 0.0;
        for i in 0..dim {
            for k in 0..dim {
                tr += proj[(i, k)] * delta12[(k, i)];
            }
        }
        out.push(SectorProbability { j_doubled, delta_p: tr });
    }
    out.sort_by_key(|s| s.j_doubled);
    Ok(out)
}

/// Δ₁₂ = ¼ [(|↑⟩⟨↓|)^{⊗N} ⊗ (|↓⟩⟨↑|)^{⊗N} + transpose] on 2N qubits.
fn build_delta12(n: usize) -> DMatrix<f64> {
    let qubits = 2 * n;
    let dim = 1usize << qubits;
    let mut m = DMatrix::zeros(dim, dim);
    // bit 0 = first qubit (most significant for readability)
    let up_n_down_n = |first_up: bool| -> usize {
        let mut idx = 0usize;
        for q in 0..qubits {
            let up = if q < n { first_up } else { !first_up };
            idx = (idx << 1) | usize::from(!up);
        }
        idx
    };
    let a = up_n_down_n(true); // |↑…↑ ↓…↓⟩
    let b = up_n_down_n(false); // |↓…↓ ↑…↑⟩
    m[(a, b)] = 0.25;
    m[(b, a)] = 0.25;
    m
}

/// Projectors onto the eigenspaces of the total J² of `qubits` spin-1/2
/// systems, keyed by doubled total spin. Eigenvalues cluster at J(J+1).
fn total_spin_projectors(qubits: usize) -> Vec<(i64, DMatrix<f64>)> {
    let dim = 1usize << qubits;
    // total J² = (ΣSx)² + (ΣSy)² + (ΣSz)², real because Sy enters squared:
    // Sy_i Sy_j = −(iSy)_i (iSy)_j entry-wise over real matrices
    let sx = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
    let isy = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0]);
    let sz = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]);
    let embed = |op: &DMatrix<f64>, q: usize| -> DMatrix<f64> {
        let mut full = DMatrix::identity(1, 1);
        for k in 0..qubits {
            let factor = if k == q { op.clone() } else { DMatrix::identity(2, 2) };
            full = full.kronecker(&factor);
        }
        full
    };
    let mut j2 = DMatrix::<f64>::zeros(dim, dim);
    let mut jx_tot = DMatrix::<f64>::zeros(dim, dim);
    let mut ijy_tot = DMatrix::<f64>::zeros(dim, dim);
    let mut jz_tot = DMatrix::<f64>::zeros(dim, dim);
    for q in 0..qubits {
        jx_tot += embed(&sx, q);
        ijy_tot += embed(&isy, q);
        jz_tot += embed(&sz, q);
    }
    j2 += &jx_tot * &jx_tot;
    j2 -= &ijy_tot * &ijy_tot; // (ΣSy)² = −(Σ iSy)²
    j2 += &jz_tot * &jz_tot;

    let (values, vectors) = symmetric_eigen_sorted(&j2);
    let mut out: Vec<(i64, DMatrix<f64>)> = Vec::new();
    for (idx, lambda) in values.iter().enumerate() {
        // integer spins only: 2N qubits
        let j = (0.5 * ((1.0 + 4.0 * lambda).sqrt() - 1.0)).round() as i64;
        let expected = (j * (j + 1)) as f64;
        assert!(
            (lambda - expected).abs() < 1e-8,
            "eigenvalue {lambda} does not cluster at J(J+1)"
        );
        let v = vectors.column(idx);
        let contribution = &v * v.transpose();
        match out.iter_mut().find(|(jd, _)| *jd == 2 * j) {
            Some((_, proj)) => *proj += contribution,
            None => out.push((2 * j, contribution)),
        }
    }
    out
}

/// Largest matrix element of Δ₁ surviving the projection onto fixed total
/// S_Z sectors. Δ₁ carries the coherence of the first copy only, so every
/// element straddles sectors N apart and the projection annihilates it.
pub fn delta1_projection_residual(n: u64) -> Result<f64> {
    let qubits = 2 * n as usize;
    if qubits == 0 || qubits > BRUTE_FORCE_MAX_QUBITS {
        return Err(Error::Sizing { needed: 1 << qubits, max: 1 << BRUTE_FORCE_MAX_QUBITS });
    }
    let nn = n as usize;
    let dim = 1usize << qubits;
    // bit = 1 means spin down; qubit 0 is the most significant bit
    let all_up: usize = 0;
    let all_down: usize = (1 << nn) - 1;
    let mut delta1 = DMatrix::<f64>::zeros(dim, dim);
    for second in [all_up, all_down] {
        let row = (all_up << nn) | second;
        let col = (all_down << nn) | second;
        delta1[(row, col)] += 0.25;
        delta1[(col, row)] += 0.25;
    }
    // project: keep only elements within one total-Sz (popcount) sector
    let mut residual: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            if i.count_ones() == j.count_ones() {
                residual = residual.max(delta1[(i, j)].abs());
            }
        }
    }
    Ok(residual)
}

/// Two orthonormal rotation-invariant states on four qubits built from
/// singlet pairings, plus the outcome of sampled global-rotation checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub heart_norm: f64,
    pub diamond_norm: f64,
    pub overlap: f64,
    /// max ‖U^{⊗4}|s⟩ − |s⟩‖ over sampled rotations and both states.
    pub max_deviation: f64,
    pub samples: u32,
}

/// |♥⟩ = |Ψ⁻₁₂⟩|Ψ⁻₃₄⟩ on four qubits.
pub fn heart_state() -> DVector<Complex64> {
    pairing_state(&[(0, 1), (2, 3)])
}

/// |♦⟩ ∝ |Ψ⁻₁₃⟩|Ψ⁻₂₄⟩ + |Ψ⁻₁₄⟩|Ψ⁻₂₃⟩, normalized.
pub fn diamond_state() -> DVector<Complex64> {
    let a = pairing_state(&[(0, 2), (1, 3)]);
    let b = pairing_state(&[(0, 3), (1, 2)]);
    let mut v = a + b;
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    v
}

/// Product of singlets over a full pairing of the four qubits.
fn pairing_state(pairs: &[(usize, usize)]) -> DVector<Complex64> {
    let dim = 16usize;
    let mut v = DVector::from_element(dim, Complex64::new(1.0, 0.0));
    // build amplitudes index by index: product over pairs of the singlet
    // amplitude for the bits of that pair
    for idx in 0..dim {
        let mut amp = Complex64::new(1.0, 0.0);
        for &(q1, q2) in pairs {
            let b1 = (idx >> (3 - q1)) & 1;
            let b2 = (idx >> (3 - q2)) & 1;
            let half = std::f64::consts::FRAC_1_SQRT_2;
            let s = match (b1, b2) {
                (0, 1) => Complex64::new(half, 0.0),
                (1, 0) => Complex64::new(-half, 0.0),
                _ => Complex64::new(0.0, 0.0),
            };
            amp *= s;
        }
        v[idx] = amp;
    }
    v
}

/// Haar-random SU(2) element from three uniform angles.
pub fn haar_su2(rng: &mut ChaCha8Rng) -> [[Complex64; 2]; 2] {
    let two_pi = 2.0 * std::f64::consts::PI;
    let phi1: f64 = rng.gen_range(0.0..two_pi);
    let phi2: f64 = rng.gen_range(0.0..two_pi);
    let u: f64 = rng.gen_range(0.0..1.0);
    let theta = u.sqrt().asin();
    let a = Complex64::from_polar(theta.cos(), phi1);
    let b = Complex64::from_polar(theta.sin(), phi2);
    [[a, b], [-b.conj(), a.conj()]]
}

fn apply_global_rotation(u: &[[Complex64; 2]; 2], v: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = DVector::from_element(16, Complex64::new(0.0, 0.0));
    for idx in 0..16usize {
        let amp = v[idx];
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        // expand U^{⊗4}|idx⟩
        let bits: [usize; 4] = [(idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
        for target in 0..16usize {
            let tbits: [usize; 4] =
                [(target >> 3) & 1, (target >> 2) & 1, (target >> 1) & 1, target & 1];
            let mut factor = Complex64::new(1.0, 0.0);
            for q in 0..4 {
                factor *= u[tbits[q]][bits[q]];
            }
            out[target] += factor * amp;
        }
    }
    out
}

/// Verify orthonormality of the singlet-pairing states and their invariance
/// under `samples` Haar-random identical single-qubit rotations.
pub fn relative_dof_invariance_check(samples: u32, seed: u64) -> Result<InvarianceReport> {
    if samples < 1 {
        return Err(Error::domain("at least one sample required"));
    }
    let heart = heart_state();
    let diamond = diamond_state();
    let overlap = heart
        .iter()
        .zip(diamond.iter())
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .norm();
    let mut rng = crate::general_macro::seeded_rng(seed);
    let mut max_dev: f64 = 0.0;
    for _ in 0..samples {
        let u = haar_su2(&mut rng);
        for state in [&heart, &diamond] {
            let rotated = apply_global_rotation(&u, state);
            let dev = (&rotated - state).norm();
            max_dev = max_dev.max(dev);
        }
    }
    Ok(InvarianceReport {
        heart_norm: heart.norm(),
        diamond_norm: diamond.norm(),
        overlap,
        max_deviation: max_dev,
        samples,
    })
}
