//! The three batch commands. Each returns the report plus the artifacts to
//! write, or an input error; nothing is written on error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;

use crate::error::Error;
use crate::fibers::{uniqueness_compare, DecompositionOptions, DirectIntegralDecomposition};
use crate::growth::{subexponential_check, WeightSequence};
use crate::operator::{laplacian_from_graph, GraphSpec, Kernel};
use crate::rng::{fiber_rotations, random_function, stream};
use crate::sierpinski::{
    ball_profile, decimation_analysis, edge_count, hop_metric, theorem5_check, truncation_stability,
    vertex_count, DecimationAnalysis, DecimationOptions, QuadraticFit,
};
use crate::space::{CompactFunction, DiscreteMeasureSpace, VertexFunction};

use super::config::{OmegaMode, RunConfig};
use super::num;
use super::dump::{fibers_csv, DecompositionDump};
use super::report::{spectrum_of, spectrum_of_values, CheckResult, Report};
use super::suite::{decomposition_checks, growth_checks};

/// A failure that aborts the run before any output is written.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Input { path: String, source: Error },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Invalid(#[from] Error),
}

impl RunError {
    pub const EXIT_CODE: i32 = 2;

    fn input(path: &Path, source: Error) -> Self {
        RunError::Input { path: path.display().to_string(), source }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    fn new(report: Report) -> Self {
        Self { report, artifacts: Vec::new() }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.artifacts.push(Artifact { name: name.into(), contents });
    }

    /// `0` when every check passes, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            0
        } else {
            1
        }
    }

    /// Writes `report.json` and every artifact into `dir`.
    pub fn write_to(&self, dir: &Path) -> RunResult<()> {
        let io = |p: &Path, e: std::io::Error| RunError::Io { path: p.display().to_string(), message: e.to_string() };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let report = dir.join("report.json");
        fs::write(&report, self.report.to_json()).map_err(|e| io(&report, e))?;
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            fs::write(&path, &a.contents).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

fn read(path: &Path) -> RunResult<String> {
    fs::read_to_string(path).map_err(|e| RunError::Io { path: path.display().to_string(), message: e.to_string() })
}

#[derive(Debug, Clone, Default)]
pub struct DecomposeInputs {
    pub space: PathBuf,
    pub kernel: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub omega: Option<PathBuf>,
}

impl DecomposeInputs {
    fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("space".into(), self.space.display().to_string());
        for (k, v) in [("kernel", &self.kernel), ("graph", &self.graph), ("omega", &self.omega)] {
            if let Some(p) = v {
                m.insert(k.into(), p.display().to_string());
            }
        }
        m
    }
}

/// Loads the space and the kernel (directly or as a graph Laplacian).
pub fn load_kernel(inputs: &DecomposeInputs) -> RunResult<Kernel<f64>> {
    let space = Arc::new(DiscreteMeasureSpace::parse(&read(&inputs.space)?).map_err(|e| RunError::input(&inputs.space, e))?);
    match (&inputs.kernel, &inputs.graph) {
        (Some(k), None) => Kernel::parse(space, &read(k)?).map_err(|e| RunError::input(k, e)),
        (None, Some(g)) => {
            let graph = GraphSpec::parse(space, &read(g)?).map_err(|e| RunError::input(g, e))?;
            laplacian_from_graph(&graph).map_err(|e| RunError::input(g, e))
        }
        _ => Err(Error::InvalidArgument("exactly one of kernel or graph must be given".into()).into()),
    }
}

/// Point masses on the first `max_deltas` vertices, then seeded random functions.
pub fn test_functions(space: &Arc<DiscreteMeasureSpace<f64>>, config: &RunConfig) -> RunResult<Vec<VertexFunction<f64>>> {
    let mut out = (0..space.len().min(config.max_deltas))
        .map(|x| VertexFunction::delta(space.clone(), x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rng = stream(config.seed, "decompose.functions");
    out.extend((0..config.random_functions).map(|_| random_function(space, &mut rng)));
    Ok(out)
}

fn load_omega(inputs: &DecomposeInputs, space: &DiscreteMeasureSpace<f64>, config: &RunConfig) -> RunResult<WeightSequence<f64>> {
    match (&inputs.omega, config.omega_mode) {
        (Some(p), _) => WeightSequence::parse(space, &read(p)?).map_err(|e| RunError::input(p, e)),
        (None, OmegaMode::File) => Err(Error::InvalidArgument("omega.mode = file requires an omega file".into()).into()),
        (None, OmegaMode::Geometric) => Ok(WeightSequence::geometric(space.len(), config.omega_ratio)?),
    }
}

/// Builds the decomposition and runs every fiber and growth check.
pub fn cmd_decompose(inputs: &DecomposeInputs, config: &RunConfig) -> RunResult<RunOutput> {
    config.validate()?;
    let kernel = load_kernel(inputs)?;
    let space = kernel.space().clone();
    let omega = load_omega(inputs, &space, config)?;
    let options = DecompositionOptions { tol_group: config.tol_group, ..Default::default() };
    let mut dec = DirectIntegralDecomposition::build_with(&kernel, &options)?;
    if config.rotate {
        let mut rng = stream(config.seed, "decompose.rotation");
        dec = dec.with_rotated_bases(&fiber_rotations(&dec, &mut rng))?;
    }
    let functions = test_functions(&space, config)?;

    let mut report = Report::new("decompose", config.echo(), inputs.echo());
    report.spectrum = spectrum_of(&dec);
    report.extend(decomposition_checks(&dec, &functions, config)?);
    report.extend(growth_checks(&dec, &omega, config)?);
    if space.len() > super::suite::SPECTRAL_KERNEL_MAX_DIM {
        report.notes.push(format!(
            "spectral_kernel check skipped above {} vertices",
            super::suite::SPECTRAL_KERNEL_MAX_DIM
        ));
    }
    if space.measure().iter().any(|&m| m != 1.0) {
        report.notes.push("spectral kernel pairing evaluated in measure-weighted form".into());
    }

    let mut out = RunOutput::new(report);
    out.add("decomposition.json", DecompositionDump::from_decomposition(&dec).to_json());
    if config.fiber_csv {
        out.add("fibers.csv", fibers_csv(&dec));
    }
    Ok(out)
}

/// Compares two decomposition dumps over the point masses of `C_c(V)`.
pub fn cmd_verify(a: &Path, b: &Path, config: &RunConfig) -> RunResult<RunOutput> {
    config.validate()?;
    let load = |p: &Path| -> RunResult<DirectIntegralDecomposition<f64>> {
        DecompositionDump::parse(&read(p)?)
            .and_then(DecompositionDump::into_decomposition)
            .map_err(|e| RunError::input(p, e))
    };
    let (da, db) = (load(a)?, load(b)?);
    let n = da.space().len();
    let basis = (0..n)
        .map(|x| CompactFunction::delta(da.space().clone(), x))
        .collect::<Result<Vec<_>, _>>()?;
    let u = uniqueness_compare(&da, &db, &basis)?;

    let mut inputs = BTreeMap::new();
    inputs.insert("a".to_string(), a.display().to_string());
    inputs.insert("b".to_string(), b.display().to_string());
    let mut report = Report::new("verify", config.echo(), inputs);
    report.spectrum = spectrum_of(&da);
    report.extend([
        CheckResult::new("uniqueness_atoms", u.atom_gap, config.tol_verify, da.fibers().len()),
        CheckResult::new("uniqueness_principal_angle", u.max_sin_angle, config.tol_angle, da.fibers().len()),
        CheckResult::new("uniqueness_gram", u.gram_gap, config.tol_gram, n * n),
    ]);
    Ok(RunOutput::new(report))
}

fn fit_json(fit: &Option<QuadraticFit<f64>>) -> serde_json::Value {
    match fit {
        None => serde_json::Value::Null,
        Some(f) => json!({
            "coefficients": f.coefficients,
            "max_residual": f.max_residual,
            "hypothesis_gap": f.hypothesis_gap,
            "points": f.points,
            "confirmed": f.confirmed,
        }),
    }
}

/// Plot-ready decimation records: one row per eigenpair of `Δ_{n+1}` and transition.
pub fn gasket_csv(analysis: &DecimationAnalysis<f64>) -> String {
    let mut out = String::from("level,eigen_index,lambda,persistent,lambda_coarse,s_m,increment_ratio\n");
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for transition in &analysis.records {
        for r in transition {
            let s_m = 5f64.powi(r.level as i32) * r.lambda;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.level,
                r.eigen_index,
                num(r.lambda),
                r.persistent,
                opt(r.lambda_coarse),
                num(s_m),
                opt(r.increment_ratio)
            );
        }
    }
    out
}

/// Decimation analysis, renormalized limits and growth checks on the gasket.
pub fn cmd_gasket(level: Option<usize>, config: &RunConfig) -> RunResult<RunOutput> {
    let mut config = config.clone();
    if let Some(l) = level {
        config.level = l;
    }
    config.validate()?;
    let n = config.level;
    let options = DecimationOptions {
        tol_decimate: config.tol_decimate,
        tol_match: config.tol_match,
        tol_fit: config.tol_fit,
        cap: config.level_cap,
        ..Default::default()
    };
    let analysis = decimation_analysis::<f64>(n, &options)?;
    let top = &analysis.levels[n];

    let mut inputs = BTreeMap::new();
    inputs.insert("level".to_string(), n.to_string());
    let mut report = Report::new("gasket", config.echo(), inputs);
    report.spectrum = spectrum_of_values(top.eigen.values(), config.tol_group);

    let count_gap: usize = analysis
        .levels
        .iter()
        .enumerate()
        .map(|(m, l)| l.graph.len().abs_diff(vertex_count(m)) + l.graph.edges().len().abs_diff(edge_count(m)))
        .sum();
    report.push(CheckResult::new("vertex_edge_counts", count_gap as f64, 0.0, n + 1));

    // Zero mode: simple at every level and persistent down to level 0.
    let mut zero_violations = 0usize;
    for l in &analysis.levels {
        let vals = l.eigen.values();
        let scale = 1.0 + vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if vals.iter().filter(|v| v.abs() <= 1e-9 * scale).count() != 1 {
            zero_violations += 1;
        }
    }
    if n >= 1 {
        let constant = analysis.series.iter().find(|s| s.is_constant_mode());
        if constant.is_none_or(|s| s.levels.len() != n + 1) {
            zero_violations += 1;
        }
    }
    report.push(CheckResult::new("zero_mode", zero_violations as f64, 0.0, n + 1));

    let persistent: Vec<f64> =
        analysis.records.iter().flatten().filter(|r| r.persistent).filter_map(|r| r.residual).collect();
    let worst_residual = persistent.iter().fold(0.0f64, |a, &r| a.max(r));
    report.push(
        CheckResult::new("restriction_residual", worst_residual, config.tol_decimate, persistent.len())
            .with_value("persistent_records", persistent.len() as f64),
    );

    // Pointwise renormalized identity at every vertex of the coarsest persistent level.
    let mut pointwise = 0.0f64;
    let mut cases = 0;
    let mut series_json = Vec::new();
    for s in &analysis.series {
        let m0 = s.lowest_level();
        let mut report5 = None;
        for x in 0..analysis.levels[m0].graph.len() {
            let r = theorem5_check(&analysis, s.eigen_index, x, m0)?;
            pointwise = pointwise.max(r.max_pointwise_gap());
            cases += r.pointwise.len();
            report5.get_or_insert(r);
        }
        let r = report5.expect("coarse level is nonempty");
        series_json.push(json!({
            "eigen_index": s.eigen_index,
            "levels": s.levels,
            "lambdas": s.lambdas,
            "s": s.s,
            "s_negative_convention": r.s_negative_convention,
            "increments": s.increments(),
            "ratio": s.ratio,
            "lower_branch": s.lower_branch,
            "constant_mode": s.is_constant_mode(),
        }));
    }
    if !analysis.series.is_empty() {
        report.push(CheckResult::new("pointwise_identity", pointwise, config.tol_decimate, cases));
    }

    let nonconstant = analysis.series.iter().filter(|s| !s.is_constant_mode()).count();
    if n >= 4 {
        report.push(
            CheckResult::new("nonconstant_series", 3usize.saturating_sub(nonconstant) as f64, 0.0, nonconstant)
                .with_value("count", nonconstant as f64),
        );
    }
    let ratios: Vec<f64> = analysis
        .series
        .iter()
        .filter(|s| !s.is_constant_mode() && s.lower_branch)
        .filter_map(|s| s.ratio)
        .collect();
    if !ratios.is_empty() {
        report.push(CheckResult::new(
            "increment_decay",
            ratios.iter().fold(0.0f64, |a, &r| a.max(r)),
            config.ratio_max,
            ratios.len(),
        ));
    }

    // Growth on the gasket: weighted norms of the top eigenfunctions, ball
    // volumes and truncation stability across levels.
    let metric = hop_metric(&top.graph)?;
    let mut alphas = config.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    let mut subexp_violation = 0.0f64;
    for k in 0..top.graph.len() {
        let phi = VertexFunction::new(top.graph.space().clone(), top.eigen.vector(k))?;
        let norms = subexponential_check(&phi, top.graph.space(), &metric, 0, &alphas)?;
        let bound = phi.norm_sq();
        let mut prev = bound;
        for &(_, v) in &norms.norms {
            subexp_violation = subexp_violation.max(v - prev).max(0.0);
            prev = v;
        }
    }
    report.push(CheckResult::new("subexponential_norms", subexp_violation, 1e-12, top.graph.len() * alphas.len()));

    let profile = ball_profile(&top.graph, 0, alphas[0], 2)?;
    let mut ball_violation = 0.0f64;
    for w in profile.windows(2) {
        ball_violation = ball_violation.max(w[0].1 - w[1].1);
    }
    let total = top.graph.space().total_mass();
    ball_violation = ball_violation.max((profile.last().expect("nonempty").1 - total).abs());
    report.push(CheckResult::new("ball_volume", ball_violation, 0.0, profile.len()));

    let levels: Vec<usize> = (0..=n).collect();
    let rows = truncation_stability::<f64>(&levels, &alphas, config.level_cap)?;
    let mut trunc_violation = 0.0f64;
    for pair in rows.windows(2).filter(|w| w[0].alpha == w[1].alpha) {
        trunc_violation = trunc_violation.max(pair[0].norm - pair[1].norm);
    }
    for r in &rows {
        trunc_violation = trunc_violation.max(r.norm - r.bound);
    }
    report.push(CheckResult::new("truncation_stability", trunc_violation.max(0.0), 1e-12, rows.len()));

    let fits_confirmed = analysis.overall_fit.as_ref().is_some_and(|f| f.confirmed);
    if n >= 1 && !fits_confirmed {
        report.notes.push("quadratic decimation hypothesis R(z) = z(5 - z) is unconfirmed over all transitions".into());
    }
    report.gasket = Some(json!({
        "level": n,
        "vertex_counts": analysis.levels.iter().map(|l| l.graph.len()).collect::<Vec<_>>(),
        "edge_counts": analysis.levels.iter().map(|l| l.graph.edges().len()).collect::<Vec<_>>(),
        "hypothesis": "z(5-z)",
        "overall_fit": fit_json(&analysis.overall_fit),
        "transition_fits": analysis.transition_fits.iter().map(fit_json).collect::<Vec<_>>(),
        "series": series_json,
        "truncation": rows.iter().map(|r| json!({"level": r.level, "alpha": r.alpha, "norm": r.norm, "bound": r.bound})).collect::<Vec<_>>(),
        "ball_profile": profile.iter().map(|&(r, v, w)| json!({"radius": r, "volume": v, "weighted": w})).collect::<Vec<_>>(),
    }));

    let mut out = RunOutput::new(report);
    out.add("gasket.csv", gasket_csv(&analysis));
    Ok(out)
}
