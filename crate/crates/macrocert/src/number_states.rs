//! State representations over a contiguous window of an integer quantum
//! number (photon number, spin projection, grid position), together with
//! the constructors for every reference-frame state used in the library.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::max_state_dim;
use crate::numerics::{indexed_mean, indexed_variance, ln_factorial_table, NeumaierSum};

/// Tolerance on the squared norm of a freshly constructed state.
pub const NORM_TOL: f64 = 1e-12;

/// A pure state with real amplitudes on a contiguous integer window.
///
/// `offset` is the quantum number of the first amplitude; it may be negative
/// (spin projections, grid positions). Amplitudes outside the window are
/// exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumberState {
    offset: i64,
    amplitudes: Vec<f64>,
}

impl NumberState {
    /// Build a state from raw amplitudes, normalizing them.
    pub fn new(offset: i64, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::domain("state needs at least one amplitude"));
        }
        check_dim(amplitudes.len())?;
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("amplitudes must be finite"));
        }
        let mut norm2 = NeumaierSum::new();
        for a in &amplitudes {
            norm2.add(a * a);
        }
        let norm = norm2.value().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::domain("amplitudes have zero norm"));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { offset, amplitudes })
    }

    /// Basis state |n⟩.
    pub fn basis(n: i64) -> Self {
        Self { offset: n, amplitudes: vec![1.0] }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Quantum number of the last amplitude.
    pub fn last_index(&self) -> i64 {
        self.offset + self.amplitudes.len() as i64 - 1
    }

    /// Amplitude at quantum number `n` (zero outside the window).
    pub fn amplitude_at(&self, n: i64) -> f64 {
        if n < self.offset || n > self.last_index() {
            0.0
        } else {
            self.amplitudes[(n - self.offset) as usize]
        }
    }

    /// Iterator over (quantum number, amplitude).
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let offset = self.offset;
        self.amplitudes.iter().enumerate().map(move |(k, &a)| (offset + k as i64, a))
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for a in &self.amplitudes {
            s.add(a * a);
        }
        s.value()
    }

    /// Probability weights |a_n|².
    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }

    /// Mean of the quantum-number distribution given by squared amplitudes.
    pub fn index_mean(&self) -> f64 {
        indexed_mean(self.offset, &self.weights())
    }

    /// Variance of the quantum-number distribution.
    pub fn index_variance(&self) -> f64 {
        indexed_variance(self.offset, &self.weights())
    }
}

impl<'de> Deserialize<'de> for NumberState {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            offset: i64,
            amplitudes: Vec<f64>,
        }
        let raw = Raw::deserialize(de)?;
        NumberState::new(raw.offset, raw.amplitudes).map_err(serde::de::Error::custom)
    }
}

fn check_dim(needed: usize) -> Result<()> {
    let max = max_state_dim();
    if needed > max {
        Err(Error::Sizing { needed, max })
    } else {
        Ok(())
    }
}

/// A convex combination of pure states.
#[derive(Debug, Clone)]
pub struct MixtureEnsemble {
    components: Vec<(f64, NumberState)>,
}

impl MixtureEnsemble {
    pub fn new(components: Vec<(f64, NumberState)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("mixture needs at least one component"));
        }
        let mut total = NeumaierSum::new();
        for (w, _) in &components {
            if !w.is_finite() || *w < 0.0 || *w > 1.0 {
                return Err(Error::domain(format!("mixture weight {w} outside [0, 1]")));
            }
            total.add(*w);
        }
        if (total.value() - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!(
                "mixture weights sum to {}, not 1",
                total.value()
            )));
        }
        Ok(Self { components })
    }

    pub fn pure(state: NumberState) -> Self {
        Self { components: vec![(1.0, state)] }
    }

    pub fn components(&self) -> &[(f64, NumberState)] {
        &self.components
    }
}

/// Declarative description of a reference-frame state.
///
/// Serializes to the canonical JSON used by scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RfSpec {
    Coherent {
        mean_photon: f64,
    },
    SpinCoherent {
        #[serde(rename = "M")]
        m: u64,
    },
    Sine {
        #[serde(rename = "N")]
        n: u64,
    },
    GaussianGrid {
        sigma_over_step: f64,
        window_halfwidth: u64,
    },
    Custom {
        state: NumberState,
    },
    Mixture {
        components: Vec<(f64, RfSpec)>,
    },
}

impl RfSpec {
    /// Expand into a flat list of (weight, pure state), multiplying weights
    /// through nested mixtures. Pure kinds come back as a single component.
    pub fn realize(&self) -> Result<Vec<(f64, NumberState)>> {
        match self {
            RfSpec::Coherent { mean_photon } => {
                Ok(vec![(1.0, make_coherent_rf(*mean_photon, DEFAULT_TAIL_MASS)?)])
            }
            RfSpec::SpinCoherent { m } => Ok(vec![(1.0, make_spin_coherent_rf(*m)?)]),
            RfSpec::Sine { n } => Ok(vec![(1.0, make_sine_rf(*n)?)]),
            RfSpec::GaussianGrid { sigma_over_step, window_halfwidth } => Ok(vec![(
                1.0,
                make_gaussian_grid_rf(*sigma_over_step, *window_halfwidth as i64)?,
            )]),
            RfSpec::Custom { state } => Ok(vec![(1.0, state.clone())]),
            RfSpec::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::domain("mixture spec needs components"));
                }
                let mut total = NeumaierSum::new();
                for (w, _) in components {
                    if !w.is_finite() || *w < 0.0 {
                        return Err(Error::domain("mixture spec weights must be nonnegative"));
                    }
                    total.add(*w);
                }
                if (total.value() - 1.0).abs() > NORM_TOL {
                    return Err(Error::domain("mixture spec weights must sum to 1"));
                }
                let mut out = Vec::new();
                for (w, spec) in components {
                    for (wi, state) in spec.realize()? {
                        out.push((w * wi, state));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Weighted average of the component index variances (the "size" of the
    /// frame with respect to the conserved quantity).
    pub fn average_variance(&self) -> Result<f64> {
        let mut acc = NeumaierSum::new();
        for (w, state) in self.realize()? {
            acc.add(w * state.index_variance());
        }
        Ok(acc.value())
    }
}

/// Default discarded-tail mass for windowed constructors.
pub const DEFAULT_TAIL_MASS: f64 = 1e-12;

/// Coherent (Poisson) phase reference with `mean_photon` photons on average.
///
/// The window is chosen so the discarded Poisson mass stays below
/// `tail_mass_bound`; the surviving amplitudes are renormalized.
pub fn make_coherent_rf(mean_photon: f64, tail_mass_bound: f64) -> Result<NumberState> {
    if !mean_photon.is_finite() || mean_photon < 0.0 {
        return Err(Error::domain("mean_photon must be finite and nonnegative"));
    }
    if !(tail_mass_bound > 0.0 && tail_mass_bound <= 1e-6) {
        return Err(Error::domain("tail_mass_bound must lie in (0, 1e-6]"));
    }
    if mean_photon == 0.0 {
        return Ok(NumberState::basis(0));
    }
    let mu = mean_photon;
    // Generous candidate range; the greedy scan below trims it to the
    // requested tail mass. 14 sigma covers tails below 1e-40.
    let spread = 14.0 * mu.sqrt() + 40.0;
    let cand_lo = ((mu - spread).floor().max(0.0)) as usize;
    let cand_hi = (mu + spread).ceil() as usize;
    check_dim(cand_hi - cand_lo + 1)?;
    let lnfact = ln_factorial_table(cand_hi);
    let ln_pmf = |n: usize| (n as f64) * mu.ln() - mu - lnfact[n];

    // Expand greedily from the mode, always taking the heavier neighbor.
    let mode = (mu.floor() as usize).clamp(cand_lo, cand_hi);
    let mut lo = mode;
    let mut hi = mode;
    let mut mass = NeumaierSum::new();
    mass.add(ln_pmf(mode).exp());
    while 1.0 - mass.value() >= tail_mass_bound {
        let below = if lo > cand_lo { ln_pmf(lo - 1).exp() } else { -1.0 };
        let above = if hi < cand_hi { ln_pmf(hi + 1).exp() } else { -1.0 };
        if below < 0.0 && above < 0.0 {
            break; // candidate range exhausted; tails are negligible anyway
        }
        if below >= above {
            lo -= 1;
            mass.add(below);
        } else {
            hi += 1;
            mass.add(above);
        }
    }
    check_dim(hi - lo + 1)?;
    let amps: Vec<f64> = (lo..=hi).map(|n| (0.5 * ln_pmf(n)).exp()).collect();
    NumberState::new(lo as i64, amps)
}

/// Directional reference carried by `m_total` aligned spin-1/2 constituents.
///
/// Amplitude index j = 0..=M runs over the spin projection m = j − M/2 in
/// unit steps; the offset records the doubled projection −M of the lowest
/// component so the window stays integer for odd M.
pub fn make_spin_coherent_rf(m_total: u64) -> Result<NumberState> {
    if m_total < 1 {
        return Err(Error::domain("spin coherent state needs at least one spin"));
    }
    let m = m_total as usize;
    check_dim(m + 1)?;
    let lnfact = ln_factorial_table(m);
    let ln2 = std::f64::consts::LN_2;
    let amps: Vec<f64> = (0..=m)
        .map(|j| (0.5 * (lnfact[m] - lnfact[j] - lnfact[m - j] - m as f64 * ln2)).exp())
        .collect();
    NumberState::new(-(m_total as i64), amps)
}

/// The sine state on the window 0..=N.
pub fn make_sine_rf(n: u64) -> Result<NumberState> {
    let dim = n as usize + 1;
    check_dim(dim)?;
    let denom = (n + 2) as f64;
    let scale = (2.0 / denom).sqrt();
    let amps: Vec<f64> = (0..dim)
        .map(|k| scale * ((k as f64 + 1.0) * std::f64::consts::PI / denom).sin())
        .collect();
    NumberState::new(0, amps)
}

/// Discretized Gaussian wave packet: amplitudes ∝ exp(−n²/(4σ²)) on −W..=W,
/// so the squared amplitudes carry standard deviation σ in grid steps.
pub fn make_gaussian_grid_rf(sigma_over_step: f64, window_halfwidth: i64) -> Result<NumberState> {
    if !(sigma_over_step > 0.0) || !sigma_over_step.is_finite() {
        return Err(Error::domain("sigma_over_step must be positive"));
    }
    let needed = (8.0 * sigma_over_step).ceil() as i64;
    if window_halfwidth < needed {
        // A window narrower than 8 sigma truncates more than 1e-10 of mass.
        return Err(Error::Sizing {
            needed: (2 * needed + 1) as usize,
            max: (2 * window_halfwidth + 1).max(0) as usize,
        });
    }
    let dim = (2 * window_halfwidth + 1) as usize;
    check_dim(dim)?;
    let s4 = 4.0 * sigma_over_step * sigma_over_step;
    let amps: Vec<f64> = (-window_halfwidth..=window_halfwidth)
        .map(|k| (-((k * k) as f64) / s4).exp())
        .collect();
    NumberState::new(-window_halfwidth, amps)
}

/// Equal two-branch superposition (|n_low⟩ + |n_high⟩)/√2 and the matching
/// 50/50 incoherent mixture.
pub fn make_two_branch(n_low: i64, n_high: i64) -> Result<(NumberState, MixtureEnsemble)> {
    if n_low == n_high {
        return Err(Error::DegenerateBranches(n_low));
    }
    if n_low > n_high {
        return Err(Error::domain("n_low must be below n_high"));
    }
    let dim = (n_high - n_low + 1) as usize;
    check_dim(dim)?;
    let mut amps = vec![0.0; dim];
    let half = 0.5_f64.sqrt();
    amps[0] = half;
    amps[dim - 1] = half;
    let sup = NumberState::new(n_low, amps)?;
    let mix = MixtureEnsemble::new(vec![
        (0.5, NumberState::basis(n_low)),
        (0.5, NumberState::basis(n_high)),
    ])?;
    Ok((sup, mix))
}
