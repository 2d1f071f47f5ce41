//! Scenario configs, report rows, parameter sweeps, and the repetition
//! table: everything the command-line front end emits as JSON or CSV.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::canonical::{
    photon_erfc_refinement, photon_trace_distance, position_exponent, position_trace_distance,
    rf_size_for_target, spin_exponent_fit, spin_trace_distance, CaseKind, PositionCase,
};
use crate::constants::{EARTH_MASS_KG, WATER_MOLECULE_KG};
use crate::distinguish::Extended;
use crate::error::{Error, Result};
use crate::general_macro::{scaling_curve, variance_bound, ScalingRf};
use crate::jc::{avg_fidelity, avg_fidelity_exact, JcModel};
use crate::number_states::{make_two_branch, RfSpec};
use crate::two_copy::{
    photon_two_copy_trace_distance, photon_two_copy_twirled, relative_dof_invariance_check,
    spin_two_copy_sectors, spin_two_copy_trace_distance,
};

/// Config format version accepted by [`run_scenario`].
pub const CONFIG_VERSION: u32 = 1;

/// Which module a scenario dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioCase {
    Photon,
    Spin,
    Position,
    Jc,
    General,
    Twocopy,
}

/// A named expected quantity with a relative tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputTarget {
    pub quantity: String,
    pub expected: f64,
    pub tolerance: f64,
}

/// A runnable scenario. Unknown keys are rejected so that configs stay
/// reproducible across versions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub case: ScenarioCase,
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub output_targets: Vec<OutputTarget>,
}

/// One computed quantity of a scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub quantity: String,
    pub computed: Extended,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_deviation: Option<f64>,
    pub note: String,
}

impl ReportRow {
    fn new(scenario: &str, quantity: &str, computed: f64, note: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            quantity: quantity.to_string(),
            computed: Extended::finite(computed),
            expected: None,
            relative_deviation: None,
            note: note.to_string(),
        }
    }

    fn new_extended(scenario: &str, quantity: &str, computed: Extended, note: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            quantity: quantity.to_string(),
            computed,
            expected: None,
            relative_deviation: None,
            note: note.to_string(),
        }
    }
}

fn param(s: &Scenario, key: &str) -> Result<f64> {
    s.parameters
        .get(key)
        .copied()
        .ok_or_else(|| Error::domain(format!("parameters.{key}: missing for case {:?}", s.case)))
}

fn opt_param(s: &Scenario, key: &str) -> Option<f64> {
    s.parameters.get(key).copied()
}

fn positive(s: &Scenario, key: &str) -> Result<f64> {
    let v = param(s, key)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("parameters.{key}: must be positive, got {v}")));
    }
    Ok(v)
}

fn integer_param(s: &Scenario, key: &str) -> Result<u64> {
    let v = positive(s, key)?;
    if v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(Error::domain(format!("parameters.{key}: must be a positive integer")));
    }
    Ok(v as u64)
}

/// Run a scenario and return its report rows, with expected values and
/// relative deviations attached from the scenario's output targets.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<ReportRow>> {
    if scenario.version != CONFIG_VERSION {
        return Err(Error::domain(format!(
            "version: expected {CONFIG_VERSION}, got {}",
            scenario.version
        )));
    }
    let mut rows = match scenario.case {
        ScenarioCase::Photon => run_photon(scenario)?,
        ScenarioCase::Spin => run_spin(scenario)?,
        ScenarioCase::Position => run_position(scenario)?,
        ScenarioCase::Jc => run_jc(scenario)?,
        ScenarioCase::General => run_general(scenario)?,
        ScenarioCase::Twocopy => run_twocopy(scenario)?,
    };
    for target in &scenario.output_targets {
        if let Some(row) = rows.iter_mut().find(|r| r.quantity == target.quantity) {
            row.expected = Some(target.expected);
            let dev = match row.computed.as_finite() {
                Some(c) if target.expected != 0.0 => (c - target.expected).abs() / target.expected.abs(),
                Some(c) => c.abs(),
                None => f64::INFINITY,
            };
            row.relative_deviation = Some(dev);
        }
    }
    Ok(rows)
}

/// Quantities whose relative deviation exceeds the target tolerance.
pub fn failed_targets(scenario: &Scenario, rows: &[ReportRow]) -> Vec<String> {
    let mut failures = Vec::new();
    for target in &scenario.output_targets {
        match rows.iter().find(|r| r.quantity == target.quantity) {
            Some(row) => {
                if row.relative_deviation.map_or(true, |d| d > target.tolerance) {
                    failures.push(target.quantity.clone());
                }
            }
            None => failures.push(target.quantity.clone()),
        }
    }
    failures
}

fn run_photon(s: &Scenario) -> Result<Vec<ReportRow>> {
    let n = integer_param(s, "n")?;
    let mu = positive(s, "mean_photon")?;
    let case = photon_trace_distance(n, mu)?;
    let name = &s.name;
    let mut rows = vec![
        ReportRow::new(name, "exact", case.exact, "overlap sum over the truncated Poisson window"),
        ReportRow::new(name, "asymptotic", case.asymptotic, "(1/2) exp(-N^2/(8 mu))"),
        ReportRow::new(name, "relative_gap", case.relative_gap, "|exact - asymptotic| / exact"),
        ReportRow::new(
            name,
            "erfc_refinement",
            photon_erfc_refinement(n, mu)?,
            "boundary-corrected asymptotic",
        ),
    ];
    if opt_param(s, "oracle").unwrap_or(0.0) > 0.0 {
        let (sup, mix) = make_two_branch(0, n as i64)?;
        let rf = crate::number_states::make_coherent_rf(mu, 1e-12)?;
        let a = crate::twirl::twirl_pure_joint(&sup, &rf);
        let b = crate::twirl::twirl_mixture_joint(&mix, &rf);
        let t = crate::twirl::trace_distance_blocks(&a, &b);
        rows.push(ReportRow::new(name, "sector_oracle", t, "block trace distance of the twirled pair"));
        rows.push(ReportRow::new(
            name,
            "oracle_absolute_gap",
            (t - case.exact).abs(),
            "closed-form sum vs sector decomposition",
        ));
    }
    Ok(rows)
}

fn run_spin(s: &Scenario) -> Result<Vec<ReportRow>> {
    let name = &s.name;
    let n_real = positive(s, "n")?;
    let mut rows = Vec::new();
    if let Some(m) = opt_param(s, "m") {
        let n = integer_param(s, "n")?;
        if !(m > 0.0) || m.fract() != 0.0 {
            return Err(Error::domain("parameters.m: must be a positive integer"));
        }
        let case = spin_trace_distance(n, m as u64)?;
        rows.push(ReportRow::new(name, "exact", case.exact, "binomial overlap sum"));
        rows.push(ReportRow::new(
            name,
            "asymptotic",
            case.asymptotic,
            "(1/2) exp(-N^2/(8 M)) as published; exact decay fits exp(-N^2/(2 M))",
        ));
        rows.push(ReportRow::new(name, "relative_gap", case.relative_gap, ""));
        let grid = [m as u64, 2 * m as u64, 4 * m as u64, 8 * m as u64];
        if let Ok(slope) = spin_exponent_fit(n, &grid) {
            rows.push(ReportRow::new(
                name,
                "fitted_exponent_coefficient",
                slope,
                "slope of -ln(2t)/N^2 against 1/M; Gaussian overlap with variance M/4 gives 0.5",
            ));
        }
    }
    if let Some(m0) = opt_param(s, "constituent_mass_kg") {
        // frame size for a target distance of (1/2) e^{-1/8}: exactly N^2
        let t_target = 0.5 * (-0.125_f64).exp();
        let size = rf_size_for_target(CaseKind::Spin, n_real, t_target)?;
        rows.push(ReportRow::new_extended(
            name,
            "rf_size",
            size,
            "frame size with trace distance (1/2) e^{-1/8}: N^2 constituents",
        ));
        if let Some(size) = size.as_finite() {
            let mass = size * m0;
            rows.push(ReportRow::new(name, "rf_mass_kg", mass, "frame size times constituent mass"));
            rows.push(ReportRow::new(
                name,
                "rf_mass_earths",
                mass / EARTH_MASS_KG,
                "frame mass in Earth masses",
            ));
        }
    }
    if rows.is_empty() {
        return Err(Error::domain("parameters: spin case needs m or constituent_mass_kg"));
    }
    Ok(rows)
}

fn run_position(s: &Scenario) -> Result<Vec<ReportRow>> {
    let name = &s.name;
    let m0 = positive(s, "constituent_mass_kg")?;
    let sigma0 = positive(s, "packet_spread_m")?;
    let mut rows = Vec::new();
    let has_full_frame = opt_param(s, "constituents").is_some() && opt_param(s, "target_exponent").is_none();
    if has_full_frame {
        let case = PositionCase {
            separation_m: positive(s, "separation_m")?,
            mass_kg: positive(s, "mass_kg")?,
            constituent_mass_kg: m0,
            packet_spread_m: sigma0,
            constituents: positive(s, "constituents")?,
        };
        let r = position_trace_distance(&case)?;
        rows.push(ReportRow::new(name, "exact", r.exact, "center-of-mass overlap quadrature"));
        rows.push(ReportRow::new(name, "asymptotic", r.asymptotic, "(1/2) exp(-(L m / (sigma0 m0))^2 / (8K))"));
        rows.push(ReportRow::new(name, "exponent", position_exponent(&case), ""));
        rows.push(ReportRow::new(name, "rf_mass_kg", case.constituents * m0, ""));
    } else if let Some(target) = opt_param(s, "target_exponent") {
        if !(target > 0.0) {
            return Err(Error::domain("parameters.target_exponent: must be positive"));
        }
        match (opt_param(s, "separation_m"), opt_param(s, "frame_mass_kg")) {
            (Some(l), None) => {
                // solve for the frame size K at the requested exponent
                let m = positive(s, "mass_kg")?;
                let ratio = (l / sigma0) * (m / m0);
                let k = ratio * ratio / (8.0 * target);
                rows.push(ReportRow::new(name, "constituents_required", k, "K with exponent at target"));
                rows.push(ReportRow::new(name, "rf_mass_kg", k * m0, ""));
                rows.push(ReportRow::new(name, "rf_mass_micrograms", k * m0 * 1e9, ""));
            }
            (None, Some(frame_mass)) => {
                // frame fixed; solve for the largest certifiable separation
                let m = positive(s, "mass_kg")?;
                if !(frame_mass > 0.0) {
                    return Err(Error::domain("parameters.frame_mass_kg: must be positive"));
                }
                let k = frame_mass / m0;
                let l_max = sigma0 * (m0 / m) * (8.0 * k * target).sqrt();
                rows.push(ReportRow::new(name, "constituents", k, "frame mass over constituent mass"));
                rows.push(ReportRow::new(name, "max_separation_m", l_max, "largest separation with exponent at target"));
                rows.push(ReportRow::new(name, "max_separation_micrometers", l_max * 1e6, ""));
            }
            _ => {
                return Err(Error::domain(
                    "parameters: sizing mode needs exactly one of separation_m or frame_mass_kg",
                ));
            }
        }
    } else {
        return Err(Error::domain(
            "parameters: position case needs constituents or target_exponent",
        ));
    }
    Ok(rows)
}

fn run_jc(s: &Scenario) -> Result<Vec<ReportRow>> {
    let name = &s.name;
    let n = integer_param(s, "n")? as usize;
    let mu = positive(s, "mean_photon")?;
    let closed = avg_fidelity(n, mu)?;
    let model = JcModel::new(n, mu)?;
    let exact = avg_fidelity_exact(&model)?;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    Ok(vec![
        ReportRow::new(name, "closed_form_fidelity", closed, "1 - ((4+pi^2)/192) N(N+2)/mu"),
        ReportRow::new(name, "exact_fidelity", exact, "from the sector-exact POVM"),
        ReportRow::new(name, "infidelity_times_mu", (1.0 - exact) * mu, ""),
        ReportRow::new(name, "coefficient", (4.0 + pi2) / 192.0, "(4+pi^2)/192"),
    ])
}

fn run_general(s: &Scenario) -> Result<Vec<ReportRow>> {
    let name = &s.name;
    let n = integer_param(s, "n")?;
    let beta = positive(s, "beta")?;
    let rf = match (opt_param(s, "sine_n"), opt_param(s, "mean_photon")) {
        (Some(p), None) => RfSpec::Sine { n: p as u64 },
        (None, Some(mu)) => RfSpec::Coherent { mean_photon: mu },
        _ => {
            return Err(Error::domain(
                "parameters: general case needs exactly one of sine_n or mean_photon",
            ))
        }
    };
    let (sup, _) = make_two_branch(0, n as i64)?;
    let report = variance_bound(&sup, &rf, beta)?;
    Ok(vec![
        ReportRow::new(name, "bound", report.bound, "sqrt(avg frame variance / N^(2 beta))"),
        ReportRow::new(name, "exact", report.exact, "twirled distance to the dephased twin"),
        ReportRow::new(name, "margin", report.bound - report.exact, "bound minus exact"),
        ReportRow::new(name, "rf_variance_avg", report.rf_variance_avg, ""),
    ])
}

fn run_twocopy(s: &Scenario) -> Result<Vec<ReportRow>> {
    let name = &s.name;
    let n = integer_param(s, "n")?;
    let mut rows = vec![
        ReportRow::new(name, "photon_two_copy", photon_two_copy_trace_distance(n)?, "exactly 1/4"),
        ReportRow::new(name, "spin_two_copy", spin_two_copy_trace_distance(n)?, "(1/2) sum |dP_J|"),
    ];
    if n <= 12 {
        rows.push(ReportRow::new(
            name,
            "photon_two_copy_twirled",
            photon_two_copy_twirled(n)?,
            "numeric sector decomposition",
        ));
    }
    let sectors = spin_two_copy_sectors(n)?;
    let max_shift = sectors.iter().map(|p| p.delta_p.abs()).fold(0.0, f64::max);
    rows.push(ReportRow::new(name, "max_sector_shift", max_shift, "largest |dP_J|"));
    if let Some(samples) = opt_param(s, "samples") {
        let seed = opt_param(s, "seed").unwrap_or(0.0) as u64;
        let report = relative_dof_invariance_check(samples as u32, seed)?;
        rows.push(ReportRow::new(name, "pairing_overlap", report.overlap, "<heart|diamond>"));
        rows.push(ReportRow::new(
            name,
            "rotation_invariance_deviation",
            report.max_deviation,
            "max ||U x4 state - state|| over samples",
        ));
    }
    Ok(rows)
}

/// Built-in scenarios reproducing the headline estimates.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let mut cat_params = BTreeMap::new();
    cat_params.insert("n".to_string(), 1e26);
    cat_params.insert("constituent_mass_kg".to_string(), WATER_MOLECULE_KG);

    let mut molecule_params = BTreeMap::new();
    molecule_params.insert("separation_m".to_string(), 1.0);
    molecule_params.insert("mass_kg".to_string(), WATER_MOLECULE_KG);
    molecule_params.insert("constituent_mass_kg".to_string(), WATER_MOLECULE_KG);
    molecule_params.insert("packet_spread_m".to_string(), 1e-9);
    molecule_params.insert("target_exponent".to_string(), 1.0);

    let mut gram_params = BTreeMap::new();
    gram_params.insert("mass_kg".to_string(), 1e-3);
    gram_params.insert("constituent_mass_kg".to_string(), WATER_MOLECULE_KG);
    gram_params.insert("packet_spread_m".to_string(), 1e-9);
    gram_params.insert("target_exponent".to_string(), 1.0);
    gram_params.insert("frame_mass_kg".to_string(), EARTH_MASS_KG);

    vec![
        Scenario {
            version: CONFIG_VERSION,
            name: "cat".to_string(),
            case: ScenarioCase::Spin,
            parameters: cat_params,
            output_targets: vec![OutputTarget {
                quantity: "rf_mass_earths".to_string(),
                expected: 50.0,
                tolerance: 0.2,
            }],
        },
        Scenario {
            version: CONFIG_VERSION,
            name: "molecule-1m".to_string(),
            case: ScenarioCase::Position,
            parameters: molecule_params,
            output_targets: vec![OutputTarget {
                quantity: "rf_mass_micrograms".to_string(),
                expected: 3.0,
                tolerance: 0.5,
            }],
        },
        Scenario {
            version: CONFIG_VERSION,
            name: "gram-earth".to_string(),
            case: ScenarioCase::Position,
            parameters: gram_params,
            output_targets: vec![OutputTarget {
                quantity: "max_separation_micrometers".to_string(),
                expected: 1.0,
                tolerance: 0.5,
            }],
        },
    ]
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

/// Repetition counts for a list of trace distances: the count with
/// (1−t)ⁿ ≤ p_err next to the frame-size bound ln(1/p)/t.
pub fn emit_repetition_table(t_values: &[f64], p_err: f64) -> Result<Vec<ReportRow>> {
    if !(p_err > 0.0 && p_err < 1.0) {
        return Err(Error::domain("p_err must lie in (0, 1)"));
    }
    let mut rows = Vec::new();
    for &t in t_values {
        if !(0.0..=0.5).contains(&t) {
            return Err(Error::domain(format!("trace distance {t} outside [0, 1/2]")));
        }
        let chernoff = if t == 0.0 {
            Extended::Unbounded
        } else {
            Extended::finite((p_err.ln() / (1.0 - t).ln()).ceil())
        };
        let scaling = if t == 0.0 {
            Extended::Unbounded
        } else {
            Extended::finite((1.0 / p_err).ln() / t)
        };
        rows.push(ReportRow::new_extended(
            "repetitions",
            &format!("chernoff_repetitions(t={t})"),
            chernoff,
            "smallest n with (1-t)^n <= p_err",
        ));
        rows.push(ReportRow::new_extended(
            "repetitions",
            &format!("size_bound_repetitions(t={t})"),
            scaling,
            "ln(1/p)/t, the frame-size form of the bound",
        ));
    }
    Ok(rows)
}

/// Sweep families available to the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum SweepSpec {
    Photon { n_list: Vec<u64>, size_list: Vec<f64> },
    Spin { n_list: Vec<u64>, size_list: Vec<u64> },
    SineScaling { c: f64, n_list: Vec<u64> },
}

/// Largest number of grid points a sweep may request.
pub const MAX_SWEEP_POINTS: usize = 1_000_000;

/// Run a sweep and return CSV text, one row per grid point in lexicographic
/// order of the grid coordinates.
pub fn run_sweep(spec: &SweepSpec) -> Result<String> {
    let mut out = String::new();
    match spec {
        SweepSpec::Photon { n_list, size_list } => {
            check_grid(n_list.len() * size_list.len())?;
            out.push_str("case,n,mean_photon,exact,asymptotic,relative_gap,erfc_refinement\r\n");
            for &n in n_list {
                for &mu in size_list {
                    let r = photon_trace_distance(n, mu)?;
                    let erfc = photon_erfc_refinement(n, mu)?;
                    out.push_str(&format!(
                        "photon,{n},{},{},{},{},{}\r\n",
                        fmt17(mu),
                        fmt17(r.exact),
                        fmt17(r.asymptotic),
                        fmt17(r.relative_gap),
                        fmt17(erfc)
                    ));
                }
            }
        }
        SweepSpec::Spin { n_list, size_list } => {
            check_grid(n_list.len() * size_list.len())?;
            out.push_str("case,n,m,exact,asymptotic,relative_gap\r\n");
            for &n in n_list {
                for &m in size_list {
                    let r = spin_trace_distance(n, m)?;
                    out.push_str(&format!(
                        "spin,{n},{m},{},{},{}\r\n",
                        fmt17(r.exact),
                        fmt17(r.asymptotic),
                        fmt17(r.relative_gap)
                    ));
                }
            }
        }
        SweepSpec::SineScaling { c, n_list } => {
            check_grid(2 * n_list.len())?;
            out.push_str("series,c,n,t\r\n");
            let sine = scaling_curve(ScalingRf::Sine, *c, n_list)?;
            let coherent = scaling_curve(ScalingRf::Coherent, *c, n_list)?;
            for (n, t) in sine {
                out.push_str(&format!("sine,{},{n},{}\r\n", fmt17(*c), fmt17(t)));
            }
            for (n, t) in coherent {
                out.push_str(&format!("coherent,{},{n},{}\r\n", fmt17(*c), fmt17(t)));
            }
        }
    }
    Ok(out)
}

fn check_grid(points: usize) -> Result<()> {
    if points > MAX_SWEEP_POINTS {
        return Err(Error::Sizing { needed: points, max: MAX_SWEEP_POINTS });
    }
    Ok(())
}

/// 17 significant digits, enough to reproduce any f64 bit-exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render report rows as RFC-4180 CSV.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("scenario,quantity,computed,expected,relative_deviation,note\r\n");
    for row in rows {
        let computed = match row.computed {
            Extended::Finite { value } => fmt17(value),
            Extended::Unbounded => "unbounded".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\r\n",
            csv_field(&row.scenario),
            csv_field(&row.quantity),
            computed,
            row.expected.map(fmt17).unwrap_or_default(),
            row.relative_deviation.map(fmt17).unwrap_or_default(),
            csv_field(&row.note)
        ));
    }
    out
}

/// Render report rows as pretty JSON.
pub fn rows_to_json(rows: &[ReportRow]) -> String {
    serde_json::to_string_pretty(rows).expect("report rows always serialize")
}
