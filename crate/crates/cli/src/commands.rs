//! The subcommands. Each returns the worst status it observed; hard errors
//! propagate as [`CliError`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use heckesign::cheb_minorant::{certify, minorant_coeffs, CertifyOptions, CertificationReport};
use heckesign::detector::{
    expansion_identity_check, in_set_a, sign_propagation_check, weighted_average_report, Detector,
    DetectorParams, ExpansionCheck, SignPropagation, WeightedReport, DETECTOR_SLACK,
    EXPANSION_BUDGET,
};
use heckesign::modforms::dim_cusp_forms;
use heckesign::modforms::eigen::{class_spectra, residue_classes, DELIGNE_SLACK};
use heckesign::modforms::{EigenOptions, Eigenform, SignStatistics};
use heckesign::petersson::{
    decay_scan, required_truncation, two_route, weights_by_linear_solve,
    DecayRow, NormOptions, TwoRoute,
};
use heckesign::sato_tate::{expansion_dump, ExpansionDump};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult, ExitStatus};
use crate::output::{write_csv, write_json, write_table};

/// Tolerances applied to the expansion dump.
pub const TWO_ROUTE_TOLERANCE: f64 = 1e-9;
pub const TAIL_TOLERANCE: f64 = 1e-10;
pub const GRAM_TOLERANCE: f64 = 1e-9;
/// `λ_f(p^m)` from the angle against the direct value.
pub const PRIME_POWER_TOLERANCE: f64 = 1e-8;
pub const EXPANSION_TOLERANCE: f64 = 1e-8;
/// Rows `m = d+1, …, d+HELD_OUT` beyond the solving rows.
pub const HELD_OUT: u64 = 20;

fn pool(cfg: &RunConfig) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.parallelism)))
}

fn matrix(cfg: &RunConfig) -> Vec<(u32, f64)> {
    cfg.degrees
        .iter()
        .flat_map(|&l| cfg.deltas.iter().map(move |&d| (l, d)))
        .collect()
}

/// Eigenforms of every weight in range with a nonzero cusp space, sorted by
/// weight; residue classes mod 12 run in parallel.
pub fn forms_in_range(cfg: &RunConfig, n_max: usize) -> CliResult<Vec<(u32, Vec<Eigenform>)>> {
    let opts = EigenOptions::with_n_max(n_max);
    let classes = residue_classes(cfg.k_min, cfg.k_max);
    let per_class = pool(cfg)?.install(|| {
        classes
            .par_iter()
            .map(|&kp| class_spectra(kp, cfg.k_min, cfg.k_max, &opts))
            .collect::<heckesign::Result<Vec<_>>>()
    })?;
    let mut out: Vec<(u32, Vec<Eigenform>)> = per_class
        .into_iter()
        .flatten()
        .map(|s| (s.weight, s.forms))
        .collect();
    out.sort_by_key(|(k, _)| *k);
    Ok(out)
}

fn largest_dimension(cfg: &RunConfig) -> CliResult<usize> {
    let mut d = 0;
    for k in cfg.weights() {
        d = d.max(dim_cusp_forms(k)?);
    }
    Ok(d)
}

fn status_of(ok: bool) -> ExitStatus {
    if ok {
        ExitStatus::Pass
    } else {
        ExitStatus::PropertyFailure
    }
}

pub fn certify_matrix(cfg: &RunConfig) -> CliResult<ExitStatus> {
    let cells = matrix(cfg);
    if cells.is_empty() {
        eprintln!("warning: empty (L, delta) matrix, nothing to certify");
    }
    let opts = CertifyOptions {
        quad_nodes: cfg.quad_nodes,
        bound_scale: cfg.bound_scale,
        ..CertifyOptions::default()
    };
    let reports = pool(cfg)?.install(|| {
        cells
            .par_iter()
            .map(|&(l, d)| certify(l, d, opts))
            .collect::<heckesign::Result<Vec<CertificationReport>>>()
    })?;
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!(
            "FAIL L={} delta={}: tail max {:.3e} vs bound {:.3e}, parseval {:.1e}",
            r.degree, r.delta, r.max_on_tail, r.bound, r.parseval_defect
        );
    }
    let path = write_table(&cfg.output_dir, "certification", cfg.format, &reports)?;
    println!(
        "verify-lemma21: {} of {} cells pass -> {}",
        reports.len() - failed.len(),
        reports.len(),
        path.display()
    );
    Ok(status_of(failed.is_empty()))
}

/// One coefficient index of an expansion dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    #[serde(rename = "L")]
    pub degree: u32,
    pub delta: f64,
    pub ell: u32,
    pub b: Option<f64>,
    pub a: Option<f64>,
    pub a_quadrature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSummary {
    #[serde(rename = "L")]
    pub degree: u32,
    pub delta: f64,
    pub a0: f64,
    pub two_route_defect: f64,
    pub tail_max: f64,
    pub max_abs_a: f64,
    pub gram_defect: f64,
    pub reconstruction_defect: f64,
    pub pass: bool,
}

fn summarise(d: &ExpansionDump) -> ExpansionSummary {
    let max_abs_a = d.a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    ExpansionSummary {
        degree: d.degree,
        delta: d.delta,
        a0: d.a0,
        two_route_defect: d.checks.two_route_defect,
        tail_max: d.checks.tail_max,
        max_abs_a,
        gram_defect: d.checks.gram_defect,
        reconstruction_defect: d.checks.reconstruction_defect,
        pass: d.checks.two_route_defect <= TWO_ROUTE_TOLERANCE
            && d.checks.tail_max <= TAIL_TOLERANCE
            && max_abs_a <= 1.0 + 1e-12
            && d.checks.gram_defect <= GRAM_TOLERANCE,
    }
}

pub fn expand(cfg: &RunConfig) -> CliResult<ExitStatus> {
    let cells = matrix(cfg);
    if cells.is_empty() {
        eprintln!("warning: empty (L, delta) matrix, nothing to expand");
    }
    let dumps = pool(cfg)?.install(|| {
        cells
            .par_iter()
            .map(|&(l, d)| expansion_dump(&minorant_coeffs(l, d)?))
            .collect::<heckesign::Result<Vec<_>>>()
    })?;
    let summaries: Vec<ExpansionSummary> = dumps.iter().map(summarise).collect();
    let path = match cfg.format {
        Format::Json => write_json(&cfg.output_dir, "expansion", &dumps)?,
        Format::Csv => {
            let rows: Vec<CoefficientRow> = dumps
                .iter()
                .flat_map(|d| {
                    d.a_quadrature.iter().enumerate().map(move |(ell, &aq)| CoefficientRow {
                        degree: d.degree,
                        delta: d.delta,
                        ell: ell as u32,
                        b: d.b.get(ell).copied(),
                        a: d.a.get(ell).copied(),
                        a_quadrature: aq,
                    })
                })
                .collect();
            write_csv(&cfg.output_dir, "expansion", &rows)?
        }
    };
    write_table(&cfg.output_dir, "expansion_checks", cfg.format, &summaries)?;
    let ok = summaries.iter().all(|s| s.pass);
    println!(
        "expand: {} of {} expansions pass -> {}",
        summaries.iter().filter(|s| s.pass).count(),
        summaries.len(),
        path.display()
    );
    Ok(status_of(ok))
}

/// Eigenvalues of one form at the primes up to its `n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenformDump {
    pub k: u32,
    pub index: usize,
    pub lambda_p: BTreeMap<u64, f64>,
    pub residual: f64,
    pub hecke_prime: u64,
    pub precision_bits: u32,
    pub prime_power_defect: f64,
}

impl EigenformDump {
    pub fn from_form(f: &Eigenform) -> Self {
        Self {
            k: f.weight_k,
            index: f.index,
            lambda_p: f.primes().collect(),
            residual: f.eigen_residual,
            hecke_prime: f.hecke_prime,
            precision_bits: f.precision_bits,
            prime_power_defect: f.prime_power_defect(),
        }
    }

    pub fn within_deligne(&self) -> bool {
        self.lambda_p.values().all(|l| l.abs() <= 2.0 + DELIGNE_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRow {
    pub k: u32,
    pub index: usize,
    pub p: u64,
    pub lambda_p: f64,
    pub residual: f64,
}

pub fn eigen(cfg: &RunConfig) -> CliResult<ExitStatus> {
    let dumps: Vec<EigenformDump> = forms_in_range(cfg, cfg.n_max)?
        .iter()
        .flat_map(|(_, forms)| forms.iter().map(EigenformDump::from_form))
        .collect();
    let mut ok = true;
    for d in &dumps {
        if !d.within_deligne() || d.prime_power_defect > PRIME_POWER_TOLERANCE {
            eprintln!(
                "FAIL k={} form {}: prime-power defect {:.2e}",
                d.k, d.index, d.prime_power_defect
            );
            ok = false;
        }
    }
    let path = match cfg.format {
        Format::Json => write_json(&cfg.output_dir, "eigenforms", &dumps)?,
        Format::Csv => {
            let rows: Vec<EigenvalueRow> = dumps
                .iter()
                .flat_map(|d| {
                    d.lambda_p.iter().map(move |(&p, &l)| EigenvalueRow {
                        k: d.k,
                        index: d.index,
                        p,
                        lambda_p: l,
                        residual: d.residual,
                    })
                })
                .collect();
            write_csv(&cfg.output_dir, "eigenforms", &rows)?
        }
    };
    println!("eigen: {} forms -> {}", dumps.len(), path.display());
    Ok(status_of(ok))
}

/// `log k / (log log k)²`, the growth rate `n_f` is compared against.
pub fn growth_scale(k: u32) -> f64 {
    let l = (k as f64).ln();
    l / l.ln().powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfRow {
    pub k: u32,
    pub form_index: usize,
    pub n_f: Option<u64>,
    pub p_f: Option<u64>,
    pub ambiguous: bool,
    pub log_k_over_loglog_k_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfSummary {
    pub k: u32,
    pub forms: usize,
    /// Largest `n_f`, empty when some form has no negative value up to `n_max`.
    pub max_n_f: Option<u64>,
    pub max_p_f: Option<u64>,
    pub log_k_over_loglog_k_sq: f64,
}

pub fn nf_table(cfg: &RunConfig) -> CliResult<ExitStatus> {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut ok = true;
    for (k, forms) in forms_in_range(cfg, cfg.n_max)? {
        let stats = match SignStatistics::from_forms(k, &forms, cfg.n_max as u64) {
            Ok(s) => s,
            Err(e @ heckesign::Error::Arithmetic(_)) => {
                eprintln!("FAIL k={k}: {e}");
                ok = false;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if !stats.ordered() {
            eprintln!("FAIL k={k}: some n_f exceeds p_f");
            ok = false;
        }
        let scale = growth_scale(k);
        summary.push(NfSummary {
            k,
            forms: stats.records.len(),
            max_n_f: stats.max_n_f(),
            max_p_f: stats
                .records
                .iter()
                .map(|r| r.signs.p_f)
                .collect::<Option<Vec<_>>>()
                .and_then(|v| v.into_iter().max()),
            log_k_over_loglog_k_sq: scale,
        });
        rows.extend(stats.records.iter().map(|r| NfRow {
            k,
            form_index: r.form_index,
            n_f: r.signs.n_f,
            p_f: r.signs.p_f,
            ambiguous: r.signs.ambiguous,
            log_k_over_loglog_k_sq: scale,
        }));
    }
    let path = write_table(&cfg.output_dir, "nf_table", cfg.format, &rows)?;
    write_table(&cfg.output_dir, "nf_summary", cfg.format, &summary)?;
    println!(
        "nf-table: {} forms over {} weights -> {}",
        rows.len(),
        summary.len(),
        path.display()
    );
    Ok(status_of(ok))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub k: u32,
    pub form_index: usize,
    pub weight: f64,
    pub condition_number: f64,
    pub solve_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoRouteRow {
    pub k: u32,
    pub linear_solve: f64,
    pub quadrature: f64,
    pub norm: f64,
    pub relative_gap: f64,
    pub within_band: bool,
}

impl From<&TwoRoute> for TwoRouteRow {
    fn from(t: &TwoRoute) -> Self {
        Self {
            k: t.k,
            linear_solve: t.linear_solve,
            quadrature: t.quadrature,
            norm: t.norm.value,
            relative_gap: t.relative_gap,
            within_band: t.within_band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeterssonSummary {
    pub beta: Option<f64>,
    pub beta_of_max: Option<f64>,
    pub max_by_weight: Vec<(u32, f64)>,
    pub nonpositive_weights: Vec<u32>,
    pub outside_band: Vec<u32>,
}

pub fn petersson_check(cfg: &RunConfig) -> CliResult<ExitStatus> {
    let norm_opts = NormOptions {
        start_nodes: cfg.quad_nodes,
        ..NormOptions::default()
    };
    let mut n_max = cfg.n_max.max(largest_dimension(cfg)? + HELD_OUT as usize);
    for k in cfg.weights() {
        if dim_cusp_forms(k)? == 1 {
            n_max = n_max.max(required_truncation(k, norm_opts.truncation_tolerance));
        }
    }
    let spaces = forms_in_range(cfg, n_max)?;

    let mut weight_rows = Vec::new();
    let mut nonpositive = Vec::new();
    let mut solvable = Vec::new();
    for (k, forms) in &spaces {
        match weights_by_linear_solve(forms) {
            Ok(w) => {
                weight_rows.extend(w.weights.iter().map(|(&i, &x)| WeightRow {
                    k: *k,
                    form_index: i,
                    weight: x,
                    condition_number: w.condition_number,
                    solve_residual: w.solve_residual,
                }));
                solvable.push((forms.as_slice(), (1..=forms.len() as u64 + HELD_OUT).collect()));
            }
            Err(e @ heckesign::Error::NonPositiveWeight { .. }) => {
                eprintln!("FAIL k={k}: {e}");
                nonpositive.push(*k);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let scan = decay_scan(&solvable)?;
    let decay: Vec<DecayRow> = scan.rows.clone();

    let one_dim: Vec<&[Eigenform]> = spaces
        .iter()
        .filter(|(_, f)| f.len() == 1)
        .map(|(_, f)| f.as_slice())
        .collect();
    let routes = pool(cfg)?.install(|| {
        one_dim
            .par_iter()
            .map(|f| two_route(f, norm_opts))
            .collect::<heckesign::Result<Vec<_>>>()
    })?;
    let route_rows: Vec<TwoRouteRow> = routes.iter().map(TwoRouteRow::from).collect();
    let outside_band: Vec<u32> = routes.iter().filter(|r| !r.within_band).map(|r| r.k).collect();
    for r in routes.iter().filter(|r| !r.within_band) {
        eprintln!(
            "FAIL k={}: two routes to the harmonic weight differ by {:.1}%",
            r.k,
            100.0 * r.relative_gap
        );
    }

    let path = write_table(&cfg.output_dir, "petersson_weights", cfg.format, &weight_rows)?;
    write_table(&cfg.output_dir, "petersson_decay", cfg.format, &decay)?;
    write_table(&cfg.output_dir, "petersson_two_route", cfg.format, &route_rows)?;
    let summary = PeterssonSummary {
        beta: scan.beta,
        beta_of_max: scan.beta_of_max,
        max_by_weight: scan.max_by_weight,
        nonpositive_weights: nonpositive,
        outside_band,
    };
    write_json(&cfg.output_dir, "petersson_summary", &summary)?;
    println!(
        "petersson-check: {} weights, fitted decay exponent {} -> {}",
        spaces.len(),
        summary.beta.map_or("n/a".into(), |b| format!("{b:.3}")),
        path.display()
    );
    Ok(status_of(
        summary.nonpositive_weights.is_empty() && summary.outside_band.is_empty(),
    ))
}

/// Detector parameters for weight `k`: the coupled values, with any
/// overrides substituted (and `ε` recoupled to the resulting `L, δ`).
pub fn detector_params(cfg: &RunConfig, k: u32) -> CliResult<DetectorParams> {
    let coupled = if k >= 16 {
        Some(DetectorParams::coupled(k as f64)?)
    } else {
        None
    };
    if !cfg.manual_detector() {
        return coupled.ok_or_else(|| {
            CliError::Usage(format!("weight {k} is below 16; pass --L, --delta or --z"))
        });
    }
    let delta = cfg.delta_override.or(coupled.as_ref().map(|p| p.delta)).unwrap_or(0.1);
    let degree = cfg.degree_override.or(coupled.as_ref().map(|p| p.degree)).unwrap_or(4);
    let z = cfg.z_override.or(coupled.as_ref().map(|p| p.z)).unwrap_or(2.0);
    Ok(DetectorParams::manual_coupled_epsilon(delta, degree, z)?)
}

/// Largest `p^L` over the detector primes.
fn expansion_reach(params: &DetectorParams) -> Option<u64> {
    params
        .primes
        .iter()
        .map(|&p| p.checked_pow(params.degree))
        .try_fold(1u64, |acc, q| q.map(|q| acc.max(q)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRun {
    pub k: u32,
    pub report: WeightedReport,
    pub max_g: f64,
    /// Forms outside `A` whose `G` exceeds the slack.
    pub outside_a_positive: usize,
    /// Largest expansion-identity defect over the forms.
    pub expansion: Option<ExpansionCheck>,
    pub expansion_note: Option<String>,
    pub sign_propagation: SignPropagation,
    pub pass: bool,
}

fn detector_for_weight(
    k: u32,
    forms: &[Eigenform],
    params: DetectorParams,
    n_max: usize,
) -> CliResult<DetectorRun> {
    let det = Detector::new(params)?;
    let weights = weights_by_linear_solve(forms)?;
    let report = weighted_average_report(k, forms, &weights, &det)?;
    let max_g = report.g_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut outside_a_positive = 0;
    for (f, g) in forms.iter().zip(&report.g_values) {
        if !in_set_a(f, &det.params)? && *g > DETECTOR_SLACK {
            outside_a_positive += 1;
        }
    }
    let tuples = (det.params.degree as u128 + 1).checked_pow(det.params.j as u32);
    let reach = expansion_reach(&det.params);
    let (expansion, expansion_note) = match (tuples, reach) {
        (Some(t), Some(r)) if t <= EXPANSION_BUDGET && r <= n_max as u64 => {
            let mut worst: Option<ExpansionCheck> = None;
            for f in forms {
                let c = expansion_identity_check(f, &det.params, det.a_coeffs())?;
                if worst.map_or(true, |w| c.defect > w.defect) {
                    worst = Some(c);
                }
            }
            (worst, None)
        }
        (Some(t), _) if t > EXPANSION_BUDGET => (
            None,
            Some(format!("{t} index tuples exceed the budget of {EXPANSION_BUDGET}")),
        ),
        _ => (None, Some("prime powers p^L exceed the eigenvalue table".into())),
    };
    let sign_propagation = sign_propagation_check(det.params.delta, det.params.z);
    let coupled = matches!(
        det.params.source,
        heckesign::detector::ParamSource::Coupled { .. }
    );
    let pass = max_g <= 1.0 + DETECTOR_SLACK
        && outside_a_positive == 0
        && report.indicator_dominates
        && expansion.map_or(true, |c| c.defect <= EXPANSION_TOLERANCE)
        && (!coupled || sign_propagation.holds);
    Ok(DetectorRun {
        k,
        report,
        max_g,
        outside_a_positive,
        expansion,
        expansion_note,
        sign_propagation,
        pass,
    })
}

pub fn detector_run(cfg: &RunConfig) -> CliResult<ExitStatus> {
    let mut plan = Vec::new();
    let mut n_max = cfg.n_max;
    for k in cfg.weights() {
        if dim_cusp_forms(k)? == 0 {
            continue;
        }
        if k < 16 && !cfg.manual_detector() {
            eprintln!("warning: skipping weight {k}, the coupled parameters need k >= 16");
            continue;
        }
        let params = detector_params(cfg, k)?;
        if let Some(r) = expansion_reach(&params) {
            if r <= 1_000_000 {
                n_max = n_max.max(r as usize);
            }
        }
        plan.push((k, params));
    }
    let spaces: BTreeMap<u32, Vec<Eigenform>> = forms_in_range(cfg, n_max)?.into_iter().collect();
    let runs = pool(cfg)?.install(|| {
        plan.par_iter()
            .map(|(k, params)| detector_for_weight(*k, &spaces[k], params.clone(), n_max))
            .collect::<CliResult<Vec<_>>>()
    })?;
    for r in runs.iter().filter(|r| !r.pass) {
        eprintln!("FAIL k={}: detector property violated (max G {:.3e})", r.k, r.max_g);
    }
    let path = write_json(&cfg.output_dir, "detector", &runs)?;
    println!(
        "detector-run: {} of {} weights pass -> {}",
        runs.iter().filter(|r| r.pass).count(),
        runs.len(),
        path.display()
    );
    Ok(status_of(runs.iter().all(|r| r.pass)))
}
