//! Noisy collective measurement induced by a Jaynes-Cummings interaction
//! with a coherent field: the exact truncated POVM, the second-order Kraus
//! pair, the banded perturbative correction, and the closed-form average
//! measurement fidelity.
//!
//! The interaction U = exp(γ(J₊a − J₋a†)) conserves the total excitation
//! number, so the exact POVM is assembled sector by sector from small
//! matrix exponentials instead of one joint exponential. Everything is real:
//! the generator is real antisymmetric and iJ_y = (J₊ − J₋)/2.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{expm, ln_factorial_table, symmetric_eigen_sorted};

/// Collective spin operators for a spin-N/2 system in the |m⟩, m = 0..=N
/// basis, where J_z|m⟩ = (2m−N)/2 |m⟩ and J₊|m⟩ = √((m+1)(N−m)) |m+1⟩.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub dim: usize,
    pub jp: DMatrix<f64>,
    pub jm: DMatrix<f64>,
    pub jz: DMatrix<f64>,
    pub jy: DMatrix<Complex64>,
}

impl SpinOps {
    pub fn new(n: usize) -> Self {
        let dim = n + 1;
        let mut jp = DMatrix::zeros(dim, dim);
        for m in 0..n {
            jp[(m + 1, m)] = raising_element(m, n);
        }
        let jm = jp.transpose();
        let jz = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            (0..dim).map(|m| z_eigenvalue(m, n)),
        ));
        // J_y = (J₊ − J₋)/(2i) = −i/2 (J₊ − J₋)
        let mut jy = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                jy[(i, j)] = Complex64::new(0.0, -0.5 * (jp[(i, j)] - jm[(i, j)]));
            }
        }
        Self { dim, jp, jm, jz, jy }
    }

    /// i·J_y as a real matrix, the generator of y-rotations.
    pub fn i_jy(&self) -> DMatrix<f64> {
        (&self.jp - &self.jm) * 0.5
    }
}

fn raising_element(m: usize, n: usize) -> f64 {
    (((m + 1) * (n - m)) as f64).sqrt()
}

fn z_eigenvalue(m: usize, n: usize) -> f64 {
    (2.0 * m as f64 - n as f64) / 2.0
}

/// Coefficient tables of the second-order expansion of the interaction
/// around the ideal rotation: K₀ = 1 − (2γ²/π²) Σᵢⱼ Aᵢⱼ Lᵢ†Lⱼ and
/// K₁ = −(2γ/π)(v₁J_z + v₂J₊ + v₃J₋) with L = (J_z, J₊, J₋).
///
/// Trace preservation at second order forces the diagonal identities
/// A₁₁ = v₁², A₂₂ = v₂² and A₃₃ = v₃²; every entry is an explicit rational
/// in π.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationTables {
    pub a: [[f64; 3]; 3],
    pub v: [f64; 3],
}

impl PerturbationTables {
    pub fn standard() -> Self {
        use std::f64::consts::PI;
        let a = [
            [1.0, 2.0 - 3.0 * PI / 4.0, PI / 4.0],
            [
                (PI - 4.0) / 4.0,
                (PI - 2.0) * (PI - 2.0) / 16.0,
                (20.0 - PI * (PI + 4.0)) / 16.0,
            ],
            [
                (PI + 4.0) / 4.0,
                (-12.0 - PI * (PI - 4.0)) / 16.0,
                (PI + 2.0) * (PI + 2.0) / 16.0,
            ],
        ];
        let v = [1.0, (2.0 - PI) / 4.0, (2.0 + PI) / 4.0];
        Self { a, v }
    }
}

/// Second-order Kraus pair with the interaction strength kept symbolic:
/// K₀(γ) = 1 − (2γ²/π²) Q and K₁(γ) = −(2γ/π) V.
#[derive(Debug, Clone)]
pub struct PerturbativeKraus {
    pub spin: SpinOps,
    /// Q = Σᵢⱼ Aᵢⱼ Lᵢ†Lⱼ.
    pub q_op: DMatrix<f64>,
    /// V = v₁J_z + v₂J₊ + v₃J₋.
    pub v_op: DMatrix<f64>,
}

impl PerturbativeKraus {
    pub fn evaluate(&self, gamma: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let dim = self.spin.dim;
        let k0 = DMatrix::identity(dim, dim) - (2.0 * gamma * gamma / pi2) * &self.q_op;
        let k1 = (-2.0 * gamma / std::f64::consts::PI) * &self.v_op;
        (k0, k1)
    }
}

/// Build the second-order Kraus pair for a spin-N/2 system.
pub fn kraus_perturbative(n: usize) -> PerturbativeKraus {
    let spin = SpinOps::new(n);
    let tables = PerturbationTables::standard();
    let l: [&DMatrix<f64>; 3] = [&spin.jz, &spin.jp, &spin.jm];
    let l_dag: [&DMatrix<f64>; 3] = [&spin.jz, &spin.jm, &spin.jp];
    let mut q_op = DMatrix::zeros(spin.dim, spin.dim);
    for i in 0..3 {
        for j in 0..3 {
            q_op += tables.a[i][j] * (l_dag[i] * l[j]);
        }
    }
    let v_op = tables.v[0] * &spin.jz + tables.v[1] * &spin.jp + tables.v[2] * &spin.jm;
    PerturbativeKraus { spin, q_op, v_op }
}

/// Truncated Jaynes-Cummings measurement model.
#[derive(Debug, Clone, Copy)]
pub struct JcModel {
    /// Spin size: the system is a spin-N/2 with N+1 levels.
    pub n: usize,
    /// Mean photon number |α|² of the coherent field.
    pub mean_photon: f64,
    /// Interaction strength.
    pub gamma: f64,
    /// Fock-space cutoff of the field.
    pub fock_cutoff: usize,
}

impl JcModel {
    /// Model at the operating point γ = π/(4α) with the default cutoff
    /// μ + 12√μ + N.
    pub fn new(n: usize, mean_photon: f64) -> Result<Self> {
        if !(mean_photon > 0.0) || !mean_photon.is_finite() {
            return Err(Error::domain("mean photon number must be positive"));
        }
        let gamma = std::f64::consts::PI / (4.0 * mean_photon.sqrt());
        let fock_cutoff = default_cutoff(n, mean_photon);
        Ok(Self { n, mean_photon, gamma, fock_cutoff })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_cutoff(mut self, fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < default_cutoff(self.n, self.mean_photon) {
            return Err(Error::domain(format!(
                "cutoff {fock_cutoff} below μ + 12√μ + N"
            )));
        }
        self.fock_cutoff = fock_cutoff;
        Ok(self)
    }

    /// Rotation angle of the ideal part of the interaction, 2αγ.
    pub fn ideal_angle(&self) -> f64 {
        2.0 * self.mean_photon.sqrt() * self.gamma
    }
}

fn default_cutoff(n: usize, mean_photon: f64) -> usize {
    (mean_photon + 12.0 * mean_photon.sqrt()).ceil() as usize + n
}

/// Completeness defect above which the cutoff is considered too small.
pub const COMPLETENESS_LIMIT: f64 = 1e-6;

/// Exact POVM elements of the noisy z-measurement, one (N+1)×(N+1) real
/// symmetric matrix per outcome m.
///
/// The elements are reported relative to the ideal rotation: the raw
/// effective POVM is conjugated back by R = exp(−θ(J₊−J₋)/2) with θ = 2αγ,
/// so that E_m → |m⟩⟨m| as γN/π → 0. The cutoff doubles up to two times if
/// the completeness defect exceeds [`COMPLETENESS_LIMIT`].
pub fn jc_povm_exact(model: &JcModel) -> Result<Vec<DMatrix<f64>>> {
    let mut cutoff = model.fock_cutoff;
    for _attempt in 0..3 {
        let povm = povm_with_cutoff(model, cutoff);
        let defect = completeness_defect(&povm, model.n);
        if defect <= COMPLETENESS_LIMIT {
            return Ok(povm);
        }
        cutoff *= 2;
    }
    let povm = povm_with_cutoff(model, cutoff);
    Err(Error::CutoffTooSmall {
        defect: completeness_defect(&povm, model.n),
        limit: COMPLETENESS_LIMIT,
    })
}

fn completeness_defect(povm: &[DMatrix<f64>], n: usize) -> f64 {
    let dim = n + 1;
    let mut sum = DMatrix::<f64>::zeros(dim, dim);
    for e in povm {
        sum += e;
    }
    sum -= DMatrix::identity(dim, dim);
    sum.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn povm_with_cutoff(model: &JcModel, cutoff: usize) -> Vec<DMatrix<f64>> {
    let n = model.n;
    let dim = n + 1;
    let mu = model.mean_photon;
    let gamma = model.gamma;

    // sqrt of the Poisson weights over the full Fock window; far tails
    // underflow to zero, which is exactly the truncation being controlled
    let lnfact = ln_factorial_table(cutoff);
    let amp: Vec<f64> = (0..=cutoff)
        .map(|k| (0.5 * (k as f64 * mu.ln() - mu - lnfact[k])).exp())
        .collect();

    let mut raw: Vec<DMatrix<f64>> = (0..dim).map(|_| DMatrix::zeros(dim, dim)).collect();
    // Sector q = m + n_photons; the restricted generator couples
    // |m, q−m⟩ ↔ |m+1, q−m−1⟩ with strength γ √((m+1)(N−m)) √(q−m).
    for q in 0..=(cutoff + n) {
        let mlo = q.saturating_sub(cutoff);
        let mhi = q.min(n);
        if mlo > mhi {
            continue;
        }
        let d = mhi - mlo + 1;
        let mut gen = DMatrix::<f64>::zeros(d, d);
        for (i, m) in (mlo..mhi).enumerate() {
            let nph = q - m;
            let g = gamma * raising_element(m, n) * (nph as f64).sqrt();
            gen[(i + 1, i)] = g;
            gen[(i, i + 1)] = -g;
        }
        let u = expm(&gen);
        // Column s of the joint input carries amplitude amp[q−s] in this
        // sector; E_m[s,s'] accumulates U[m,s] amp_s U[m,s'] amp_s'.
        let mut w = vec![0.0; d * dim];
        for s in mlo..=mhi {
            let a = amp[q - s];
            if a == 0.0 {
                continue;
            }
            for i in 0..d {
                w[i * dim + s] = u[(i, s - mlo)] * a;
            }
        }
        for (i, m) in (mlo..=mhi).enumerate() {
            let row = &w[i * dim..(i + 1) * dim];
            let e = &mut raw[m];
            for s in 0..dim {
                if row[s] == 0.0 {
                    continue;
                }
                for s2 in 0..dim {
                    e[(s, s2)] += row[s] * row[s2];
                }
            }
        }
    }

    // Undo the ideal rotation: Ẽ_m = Rᵀ E_m R with R = exp(−θ iJ_y).
    let spin = SpinOps::new(n);
    let r = expm(&(-model.ideal_angle() * spin.i_jy()));
    raw.into_iter().map(|e| r.transpose() * e * &r).collect()
}

/// Closed-form average measurement fidelity
/// 1 − ((4+π²)/192) · N(N+2)/μ at the operating point γ = π/(4α).
pub fn avg_fidelity(n: usize, mean_photon: f64) -> Result<f64> {
    if !(mean_photon > 0.0) {
        return Err(Error::domain("mean photon number must be positive"));
    }
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    Ok(1.0 - (4.0 + pi2) / 192.0 * (n as f64) * (n as f64 + 2.0) / mean_photon)
}

/// Numerically exact average fidelity (1/(N+1)) Σ_m ⟨m|Ẽ_m|m⟩ from the
/// exact POVM in the rotated frame.
pub fn avg_fidelity_exact(model: &JcModel) -> Result<f64> {
    let povm = jc_povm_exact(model)?;
    let mut acc = 0.0;
    for (m, e) in povm.iter().enumerate() {
        acc += e[(m, m)];
    }
    Ok(acc / (model.n as f64 + 1.0))
}

/// Half of the second-order correction to the noisy z-measurement:
/// E_m ≈ |m⟩⟨m| + Δ_m + Δ_mᵀ at the operating point γ = π/(4√μ).
///
/// The correction is banded: entries vanish outside rows and columns
/// m−2..=m+2.
pub fn delta_m(n: usize, m: usize, mean_photon: f64) -> Result<DMatrix<f64>> {
    if m > n {
        return Err(Error::domain(format!("outcome index {m} exceeds N = {n}")));
    }
    if !(mean_photon > 0.0) {
        return Err(Error::domain("mean photon number must be positive"));
    }
    let gamma = std::f64::consts::PI / (4.0 * mean_photon.sqrt());
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let kraus = kraus_perturbative(n);
    let dim = n + 1;
    let mut p = DMatrix::<f64>::zeros(dim, dim);
    p[(m, m)] = 1.0;
    let correction = -(2.0 * gamma * gamma / pi2)
        * (kraus.q_op.transpose() * &p + &p * &kraus.q_op)
        + (4.0 * gamma * gamma / pi2) * (kraus.v_op.transpose() * &p * &kraus.v_op);
    Ok(correction * 0.5)
}

/// Ideal measurement targets: eigenstates of J_x obtained by exact
/// diagonalization, ordered so that the m-th column pairs with outcome m.
pub fn x_basis_states(n: usize) -> DMatrix<f64> {
    let spin = SpinOps::new(n);
    let jx = 0.5 * (&spin.jp + &spin.jm);
    let (_, vecs) = symmetric_eigen_sorted(&jx);
    // symmetric_eigen_sorted returns descending eigenvalues; outcome m
    // should map to eigenvalue (2m−N)/2, i.e. ascending order.
    let dim = n + 1;
    let mut out = DMatrix::zeros(dim, dim);
    for m in 0..dim {
        out.set_column(m, &vecs.column(dim - 1 - m));
    }
    // fix each column's overall sign to the rotated-frame convention
    let r = expm(&(-std::f64::consts::FRAC_PI_2 * spin.i_jy()));
    for m in 0..dim {
        let dot: f64 = out.column(m).dot(&r.column(m));
        if dot < 0.0 {
            let col = -out.column(m);
            out.set_column(m, &col);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spin_ops_commutators() {
        for n in [1usize, 2, 5] {
            let s = SpinOps::new(n);
            // [Jz, J±] = ±J±
            let comm_p = &s.jz * &s.jp - &s.jp * &s.jz;
            let comm_m = &s.jz * &s.jm - &s.jm * &s.jz;
            assert!((&comm_p - &s.jp).iter().all(|x| x.abs() < 1e-12));
            assert!((&comm_m + &s.jm).iter().all(|x| x.abs() < 1e-12));
            assert_eq!(s.jp, s.jm.transpose());
        }
    }

    #[test]
    fn tables_match_closed_forms() {
        let t = PerturbationTables::standard();
        assert_eq!(t.a[0][0], 1.0);
        assert!((t.a[0][1] - (2.0 - 3.0 * PI / 4.0)).abs() < 1e-15);
        assert!((t.a[0][2] - PI / 4.0).abs() < 1e-15);
        assert!((t.a[1][0] - (PI - 4.0) / 4.0).abs() < 1e-15);
        assert!((t.a[1][1] - (PI - 2.0).powi(2) / 16.0).abs() < 1e-15);
        assert!((t.a[1][2] - (20.0 - PI * (PI + 4.0)) / 16.0).abs() < 1e-15);
        assert!((t.a[2][0] - (PI + 4.0) / 4.0).abs() < 1e-15);
        assert!((t.a[2][1] - (-12.0 - PI * (PI - 4.0)) / 16.0).abs() < 1e-15);
        assert!((t.a[2][2] - (PI + 2.0).powi(2) / 16.0).abs() < 1e-15);
        assert_eq!(t.v[0], 1.0);
        assert!((t.v[1] - (2.0 - PI) / 4.0).abs() < 1e-15);
        // second-order trace preservation pins v3² = A33
        assert!((t.v[2] * t.v[2] - t.a[2][2]).abs() < 1e-15);
    }

    #[test]
    fn kraus_trace_preservation_defect_is_third_order() {
        let n = 2;
        let kraus = kraus_perturbative(n);
        let gamma = 1e-3;
        let (k0, k1) = kraus.evaluate(gamma);
        let defect = DMatrix::identity(n + 1, n + 1)
            - k0.transpose() * &k0
            - k1.transpose() * &k1;
        let max = defect.iter().map(|x| x.abs()).fold(0.0, f64::max);
        // O(γ³ N³): a γ² defect would sit near 1e-6
        assert!(max < 1e-7, "defect {max}");
    }

    #[test]
    fn kraus_at_zero_coupling() {
        let kraus = kraus_perturbative(3);
        let (k0, k1) = kraus.evaluate(0.0);
        assert_eq!(k0, DMatrix::identity(4, 4));
        assert!(k1.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn qubit_noisy_measurement_closed_form() {
        // E0 for N = 1 at second order:
        // [[1 − (π−2)²/(64μ), −π/(32μ)], [−π/(32μ), (π+2)²/(64μ)]]
        let mu = 1.0e4;
        let d = delta_m(1, 0, mu).unwrap();
        let e0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]) + &d + d.transpose();
        assert!((e0[(0, 0)] - (1.0 - (PI - 2.0).powi(2) / (64.0 * mu))).abs() < 1e-15);
        assert!((e0[(1, 1)] - (PI + 2.0).powi(2) / (64.0 * mu)).abs() < 1e-15);
        assert!((e0[(0, 1)] + PI / (32.0 * mu)).abs() < 1e-15);
    }

    #[test]
    fn delta_is_banded_and_respects_edges() {
        let n = 6;
        let mu = 100.0;
        for m in 0..=n {
            let d = delta_m(n, m, mu).unwrap();
            for i in 0..=n {
                for j in 0..=n {
                    let in_band = (i as i64 - m as i64).abs() <= 2
                        && (j as i64 - m as i64).abs() <= 2;
                    if !in_band {
                        assert_eq!(d[(i, j)], 0.0, "entry ({i},{j}) for m={m}");
                    }
                }
            }
        }
        // m = 0 edge: no rows below zero exist and the matrix stays 5-banded
        let d = delta_m(n, 0, mu).unwrap();
        assert_eq!(d.nrows(), n + 1);
        assert!(delta_m(2, 3, mu).is_err());
    }

    #[test]
    fn exact_povm_identity_at_zero_coupling() {
        let model = JcModel::new(1, 25.0).unwrap().with_gamma(0.0);
        let povm = jc_povm_exact(&model).unwrap();
        for (m, e) in povm.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == m && j == m { 1.0 } else { 0.0 };
                    assert!((e[(i, j)] - want).abs() < 1e-9, "m={m} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn exact_povm_complete_and_psd() {
        let model = JcModel::new(2, 50.0).unwrap();
        let povm = jc_povm_exact(&model).unwrap();
        let mut sum = DMatrix::<f64>::zeros(3, 3);
        for e in &povm {
            let eigs = crate::numerics::symmetric_eigenvalues(e);
            assert!(eigs.iter().all(|l| *l > -1e-10), "eigs {eigs:?}");
            sum += e;
        }
        let defect = (&sum - DMatrix::identity(3, 3))
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        assert!(defect < 1e-8, "defect {defect}");
    }

    #[test]
    fn exact_povm_matches_banded_perturbation() {
        let n = 2;
        let mu = 1.0e4;
        let model = JcModel::new(n, mu).unwrap();
        let povm = jc_povm_exact(&model).unwrap();
        for m in 0..=n {
            let d = delta_m(n, m, mu).unwrap();
            let mut pert = &d + d.transpose();
            pert[(m, m)] += 1.0;
            let diff = (&povm[m] - pert).iter().map(|x| x.abs()).fold(0.0, f64::max);
            // residual is the third-order term, O(μ^{−3/2})
            assert!(diff < 20.0 * mu.powf(-1.5), "m={m}: {diff:.3e}");
        }
    }

    #[test]
    fn closed_form_fidelity_coefficients() {
        // (4+π²)/192 = 0.0722…, and the qubit case gives 1 − 0.2167/μ
        let coeff = (4.0 + PI * PI) / 192.0;
        assert!((coeff - 0.072).abs() / 0.072 < 0.005);
        let f = avg_fidelity(1, 100.0).unwrap();
        assert!((1.0 - f) * 100.0 - 0.2167 < 1e-3);
        assert!((avg_fidelity(1, 1e12).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn x_basis_columns_are_jx_eigenstates() {
        let n = 3;
        let x = x_basis_states(n);
        let spin = SpinOps::new(n);
        let jx = 0.5 * (&spin.jp + &spin.jm);
        for m in 0..=n {
            let col = x.column(m);
            let want = z_eigenvalue(m, n);
            let residual = (&jx * col) - want * col;
            assert!(residual.iter().all(|r| r.abs() < 1e-12));
        }
        // and they agree with the π/2-rotated z basis used by the POVM
        let r = expm(&(-std::f64::consts::FRAC_PI_2 * spin.i_jy()));
        for m in 0..=n {
            let overlap: f64 = x.column(m).dot(&r.column(m));
            assert!((overlap - 1.0).abs() < 1e-12);
        }
    }
}
