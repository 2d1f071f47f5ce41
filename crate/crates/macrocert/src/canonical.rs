//! Closed-form trace distances for the three headline settings — photon
//! number with a coherent frame, collective spin with a spin-coherent frame,
//! and a delocalized mass against a crystal of localized wave packets —
//! together with the frame-size inversion used by the report tables.

use serde::{Deserialize, Serialize};

use crate::distinguish::Extended;
use crate::error::{Error, Result};
use crate::number_states::{make_coherent_rf, make_spin_coherent_rf, NumberState, DEFAULT_TAIL_MASS};
use crate::numerics::{adaptive_simpson, erfc, NeumaierSum};

/// Exact value, its large-frame asymptotic, and their relative gap.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CaseResult {
    pub exact: f64,
    pub asymptotic: f64,
    pub relative_gap: f64,
}

impl CaseResult {
    pub fn new(exact: f64, asymptotic: f64) -> Self {
        let relative_gap = (exact - asymptotic).abs() / exact.max(1e-30);
        Self { exact, asymptotic, relative_gap }
    }
}

/// Overlap sum ½ Σ_j a_j a_{j+shift} of a nonnegative amplitude vector with
/// its own shift; this is the twirled trace distance for a two-branch system.
fn shifted_overlap_half(amps: &NumberState, shift: usize) -> f64 {
    let a = amps.amplitudes();
    if shift >= a.len() {
        return 0.0;
    }
    let mut acc = NeumaierSum::new();
    for j in 0..a.len() - shift {
        acc.add(a[j] * a[j + shift]);
    }
    0.5 * acc.value()
}

/// Photon case: exact sum ½ Σ_j √(q_j q_{j+N}) over the truncated Poisson
/// window against the asymptotic ½ exp(−N²/(8μ)).
pub fn photon_trace_distance(n: u64, mean_photon: f64) -> Result<CaseResult> {
    if n < 1 {
        return Err(Error::domain("branch separation N must be at least 1"));
    }
    if !(mean_photon >= 0.0) || !mean_photon.is_finite() {
        return Err(Error::domain("mean photon number must be nonnegative"));
    }
    let exact = if mean_photon == 0.0 {
        0.0
    } else {
        let rf = make_coherent_rf(mean_photon, DEFAULT_TAIL_MASS)?;
        shifted_overlap_half(&rf, n as usize)
    };
    let asymptotic = if mean_photon == 0.0 {
        0.0
    } else {
        0.5 * (-(n as f64).powi(2) / (8.0 * mean_photon)).exp()
    };
    Ok(CaseResult::new(exact, asymptotic))
}

/// Boundary-corrected asymptotic for the photon case:
/// (exp(−N²/(8μ))/4) · erfc((N−μ)/√(2μ)).
pub fn photon_erfc_refinement(n: u64, mean_photon: f64) -> Result<f64> {
    if n < 1 || !(mean_photon > 0.0) {
        return Err(Error::domain("needs N ≥ 1 and a positive mean photon number"));
    }
    let nn = n as f64;
    let gauss = (-nn * nn / (8.0 * mean_photon)).exp() / 4.0;
    Ok(gauss * erfc((nn - mean_photon) / (2.0 * mean_photon).sqrt()))
}

/// Spin case: exact binomial overlap sum against the printed asymptotic
/// ½ exp(−N²/(8M)).
///
/// The measured exponent of the exact sum is N²/(2M) — the binomial spin
/// projection variance is M/4, not M — so the asymptotic column here keeps
/// the published coefficient while `exact` carries the ground truth; callers
/// that need the fit use [`spin_exponent_fit`].
pub fn spin_trace_distance(n: u64, m: u64) -> Result<CaseResult> {
    if n < 1 {
        return Err(Error::domain("branch separation N must be at least 1"));
    }
    let exact = if m == 0 {
        0.0
    } else {
        let rf = make_spin_coherent_rf(m)?;
        shifted_overlap_half(&rf, n as usize)
    };
    let asymptotic = if m == 0 {
        0.0
    } else {
        0.5 * (-(n as f64).powi(2) / (8.0 * m as f64)).exp()
    };
    Ok(CaseResult::new(exact, asymptotic))
}

/// Least-squares slope of −ln(2t)/N² against 1/M over a frame-size grid,
/// using the exact binomial sums. A pure Gaussian-overlap decay with
/// exponent N²/(cM) shows up as slope 1/c.
pub fn spin_exponent_fit(n: u64, m_grid: &[u64]) -> Result<f64> {
    if m_grid.len() < 2 {
        return Err(Error::domain("exponent fit needs at least two frame sizes"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &m in m_grid {
        if m == 0 {
            return Err(Error::domain("frame sizes must be positive"));
        }
        let t = spin_trace_distance(n, m)?.exact;
        if t <= 0.0 {
            return Err(Error::domain("exact trace distance vanished on the fit grid"));
        }
        xs.push(1.0 / m as f64);
        ys.push(-(2.0 * t).ln() / (n as f64).powi(2));
    }
    let n_pts = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n_pts;
    let my = ys.iter().sum::<f64>() / n_pts;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(num / den)
}

/// Parameters of the delocalized-mass setting, SI units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PositionCase {
    /// Branch separation of the superposed object, meters.
    pub separation_m: f64,
    /// Mass of the superposed object, kg.
    pub mass_kg: f64,
    /// Mass of one frame constituent, kg.
    pub constituent_mass_kg: f64,
    /// Wave-packet spread of one constituent, meters.
    pub packet_spread_m: f64,
    /// Number of frame constituents.
    pub constituents: f64,
}

/// Position case: the analytic value ½ exp(−(L/σ₀)²(m/m₀)²/(8K)) doubles as
/// the asymptotic column, while `exact` is filled by adaptive quadrature of
/// the center-of-mass overlap ½∫√(p(X)p(X+d))dX with d = Lm/(Km₀) and p a
/// Gaussian of variance σ₀²/K.
pub fn position_trace_distance(case: &PositionCase) -> Result<CaseResult> {
    let PositionCase {
        separation_m: l,
        mass_kg: m,
        constituent_mass_kg: m0,
        packet_spread_m: sigma0,
        constituents: k,
    } = *case;
    for (name, v) in [
        ("separation", l),
        ("mass", m),
        ("constituent mass", m0),
        ("packet spread", sigma0),
        ("constituent count", k),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    let exponent = position_exponent(case);
    let analytic = 0.5 * (-exponent).exp();

    // Quadrature in units of the center-of-mass spread sigma = sigma0/sqrt(K):
    // the integrand becomes (1/sqrt(2π)) exp(−(u² + (u+δ)²)/4) with δ = d/σ.
    let delta = (l * m / (k * m0)) / (sigma0 / k.sqrt());
    let integrand = |u: f64| {
        let e = -(u * u + (u + delta) * (u + delta)) / 4.0;
        e.exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let center = -0.5 * delta;
    let halfwidth = 45.0;
    let exact = 0.5 * adaptive_simpson(&integrand, center - halfwidth, center + halfwidth, 1e-12);
    Ok(CaseResult::new(exact, analytic))
}

/// Exponent (L/σ₀)²(m/m₀)²/(8K) of the position-case trace distance.
pub fn position_exponent(case: &PositionCase) -> f64 {
    let r = (case.separation_m / case.packet_spread_m) * (case.mass_kg / case.constituent_mass_kg);
    r * r / (8.0 * case.constituents)
}

/// Which asymptotic family to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Photon,
    Spin,
    Position,
}

/// Smallest frame size (μ, M, or K) with asymptotic t at least `t_target`:
/// size = N²/(8 ln(1/(2 t_target))). For the position case the first
/// argument is the combined ratio (L/σ₀)(m/m₀).
pub fn rf_size_for_target(_case: CaseKind, n_or_ratio: f64, t_target: f64) -> Result<Extended> {
    if !(t_target > 0.0 && t_target < 0.5) {
        return Err(Error::domain("target trace distance must lie in (0, 1/2)"));
    }
    if !(n_or_ratio > 0.0) || !n_or_ratio.is_finite() {
        return Err(Error::domain("size parameter must be positive"));
    }
    let denom = 8.0 * (1.0 / (2.0 * t_target)).ln();
    let size = n_or_ratio * n_or_ratio / denom;
    if !size.is_finite() || size > 1e300 {
        return Ok(Extended::Unbounded);
    }
    Ok(Extended::finite(size))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn photon_asymptotic_known_value() {
        let r = photon_trace_distance(10, 100.0).unwrap();
        assert!((r.asymptotic - 0.5 * (-0.125_f64).exp()).abs() < 1e-15);
        assert!((r.asymptotic - 0.4412).abs() < 1e-4);
    }

    #[test]
    fn photon_vacuum_frame_gives_zero() {
        let r = photon_trace_distance(3, 0.0).unwrap();
        assert_eq!(r.exact, 0.0);
    }

    #[test]
    fn photon_erfc_refinement_agrees_deep_inside() {
        // For μ >> N the erfc factor approaches 2 and both forms coincide.
        let n = 4;
        let mu = 4000.0;
        let r = photon_trace_distance(n, mu).unwrap();
        let refined = photon_erfc_refinement(n, mu).unwrap();
        assert!(((refined - r.asymptotic) / r.asymptotic).abs() < 1e-3);
        assert!(((refined - r.exact) / r.exact).abs() < 1e-4);
    }

    #[test]
    fn photon_gap_shrinks_with_frame_size() {
        let small = photon_trace_distance(5, 50.0).unwrap();
        let large = photon_trace_distance(5, 5000.0).unwrap();
        assert!(large.relative_gap < small.relative_gap);
        assert!(large.relative_gap < 0.01);
    }

    #[test]
    fn spin_exact_decays_slower_than_printed_asymptotic() {
        let r = spin_trace_distance(4, 100).unwrap();
        // exact ≈ ½ exp(−N²/(2M)) < ½ exp(−N²/(8M))
        let gauss = 0.5 * (-16.0 / 200.0_f64).exp();
        assert!((r.exact - gauss).abs() / gauss < 0.01, "exact {}", r.exact);
        assert!(r.exact < r.asymptotic);
    }

    #[test]
    fn spin_exponent_fit_measures_half() {
        let slope = spin_exponent_fit(2, &[100, 200, 400, 800]).unwrap();
        assert!((slope - 0.5).abs() < 0.01, "slope {slope}");
    }

    #[test]
    fn spin_empty_frame() {
        assert_eq!(spin_trace_distance(2, 0).unwrap().exact, 0.0);
    }

    #[test]
    fn position_quadrature_matches_analytic() {
        let case = PositionCase {
            separation_m: 1e-6,
            mass_kg: 1e-25,
            constituent_mass_kg: 2.99e-26,
            packet_spread_m: 1e-9,
            constituents: 4e6,
        };
        let r = position_trace_distance(&case).unwrap();
        assert!((r.exact - r.asymptotic).abs() < 1e-9);
        assert!(r.exact > 0.0 && r.exact < 0.5);
    }

    #[test]
    fn position_heavy_frame_limit() {
        // m/m0 -> 0 drives t to 1/2.
        let case = PositionCase {
            separation_m: 1.0,
            mass_kg: 1e-40,
            constituent_mass_kg: 1.0,
            packet_spread_m: 1e-3,
            constituents: 1e10,
        };
        let r = position_trace_distance(&case).unwrap();
        assert!((r.exact - 0.5).abs() < 1e-10);
        assert!(matches!(
            position_trace_distance(&PositionCase { mass_kg: -1.0, ..case }),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rf_size_inversion_identity() {
        // photon, N = 10, target ½ e^{−1/8} inverts to μ = 100
        let t = 0.5 * (-0.125_f64).exp();
        let size = rf_size_for_target(CaseKind::Photon, 10.0, t).unwrap();
        assert!((size.as_finite().unwrap() - 100.0).abs() < 1e-9);

        // spin, N = 1e26 inverts to M = 1e52
        let size = rf_size_for_target(CaseKind::Spin, 1e26, t).unwrap();
        assert!((size.as_finite().unwrap() - 1e52).abs() / 1e52 < 1e-12);

        // target just below 1/2 blows up
        let size = rf_size_for_target(CaseKind::Photon, 1e150, 0.5 - 1e-17).unwrap();
        assert!(size.is_unbounded());
        assert!(rf_size_for_target(CaseKind::Photon, 10.0, 0.5).is_err());
    }
}
