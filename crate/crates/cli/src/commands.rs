use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wiretap_core::channel::to_aligned;
use wiretap_core::enhancement::{
    check_extremal_inequality, check_objective_rewrite, enhance_certificate, gaussian_test_set, CertifiedEnhancement,
    EnhancementCase, ExtremalReport, RewriteReport,
};
use wiretap_core::kkt::{build_certificate, check_certificate, describe, KktCertificate};
use wiretap_core::membership::{region_contains, Membership, MembershipConfig};
use wiretap_core::oracle::{grid_search, GridSpec, OracleObjective};
use wiretap_core::solver::{cells, sort_points, BoundaryProblem, Cell};
use wiretap_core::tol::REWRITE_TOL;
use wiretap_core::{BoundaryPoint, InputConstraint, PsdMatrix, SolverConfig, WiretapChannel};

use crate::args::*;
use crate::exit::{CliError, CliResult, InputContext, InternalContext};
use crate::formats::{self, PointFile, TripleFile, Units};
use crate::manifest::{resolve_seed, RunManifest};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Trace(a) => cmd_trace(&a),
        Command::PowerRegion(a) => cmd_power_region(&a),
        Command::SecrecyCapacity(a) => cmd_secrecy_capacity(&a),
        Command::VerifyKkt(a) => cmd_verify_kkt(&a),
        Command::Enhance(a) => cmd_enhance(&a),
        Command::OracleCompare(a) => cmd_oracle_compare(&a),
        Command::Map(a) => cmd_map(&a),
        Command::Membership(a) => cmd_membership(&a),
    }
}

/// Writes `bytes` to `out` with its manifest, or to stdout.
fn emit(out: Option<&Path>, bytes: &[u8], manifest: &RunManifest) -> CliResult<()> {
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display())).input()?;
            manifest.write_next_to(path).input()?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).context("cannot write to stdout").input()?;
        }
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).internal()?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// `"mu_p:mu_s,..."`.
pub fn parse_weights(text: &str) -> anyhow::Result<Vec<(f64, f64)>> {
    let pairs = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (a, b) = pair.split_once(':').ok_or_else(|| anyhow!("weight pair {pair:?} is not mu_p:mu_s"))?;
            let mu_p: f64 = a.trim().parse().with_context(|| format!("bad mu_p in {pair:?}"))?;
            let mu_s: f64 = b.trim().parse().with_context(|| format!("bad mu_s in {pair:?}"))?;
            if !(mu_p >= 0.0 && mu_s >= 0.0 && mu_p.is_finite() && mu_s.is_finite()) {
                bail!("weights in {pair:?} must be finite and >= 0");
            }
            Ok((mu_p, mu_s))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if pairs.is_empty() {
        bail!("no weight pairs given");
    }
    Ok(pairs)
}

fn check_fractions(fractions: &[f64]) -> anyhow::Result<()> {
    if fractions.is_empty() {
        bail!("empty common-rate grid");
    }
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        bail!("relative common rate {f} is outside [0, 1]");
    }
    Ok(())
}

fn covariance(constraint: Option<InputConstraint>, path: &Path) -> CliResult<PsdMatrix> {
    match constraint {
        Some(InputConstraint::Covariance(s)) => Ok(s),
        Some(InputConstraint::Power(_)) => {
            Err(CliError::Input(anyhow!("{} has a power constraint; this command needs a covariance", path.display())))
        }
        None => Err(CliError::Input(anyhow!("{} has no input constraint", path.display()))),
    }
}

fn solver_config(seed: u64, refined: bool) -> SolverConfig {
    let base = if refined { SolverConfig::refined() } else { SolverConfig::default() };
    base.with_seed(seed)
}

fn sweep(
    command: &str,
    a: &SweepArgs,
    ch: &WiretapChannel,
    constraint: InputConstraint,
    manifest_extra: &[(&str, String)],
) -> CliResult<()> {
    let seed = resolve_seed(a.seed).input()?;
    let weights = parse_weights(&a.weights).input()?;
    let cfg = solver_config(seed, a.refined);
    let problem = BoundaryProblem::new(ch, constraint, a.alpha)?;
    let r0s: Vec<f64> = match &a.r0_grid {
        Some(grid) => {
            if grid.is_empty() || grid.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                return Err(CliError::Input(anyhow!("--r0-grid needs finite values >= 0")));
            }
            grid.clone()
        }
        None => {
            check_fractions(&a.r0_relative).input()?;
            let top = problem.r0_max(&cfg)?;
            a.r0_relative.iter().map(|f| f * top).collect()
        }
    };
    let grid = cells(&r0s, &weights);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build().internal()?;
    let solved: Vec<_> = pool.install(|| grid.par_iter().map(|c| problem.solve(c, &cfg)).collect());
    let mut points = solved.into_iter().collect::<Result<Vec<BoundaryPoint>, _>>()?;
    sort_points(&mut points);

    let units = Units::from_bits_flag(a.bits);
    let mut bytes = Vec::new();
    if a.json {
        formats::write_boundary_json(&points, units, &mut bytes).internal()?;
    } else {
        formats::write_boundary_csv(&points, units, &mut bytes).internal()?;
    }
    let mut m = RunManifest::new(command, Some(&a.channel), seed);
    match &a.r0_grid {
        Some(g) => m.param("r0_grid", join(g)),
        None => m.param("r0_relative", join(&a.r0_relative)),
    };
    m.param("weights", &a.weights)
        .param("alpha", a.alpha)
        .param("jobs", a.jobs)
        .param("refined", a.refined)
        .param("format", if a.json { "json" } else { "csv" })
        .param("units", units.label());
    for (k, v) in manifest_extra {
        m.param(k, v);
    }
    emit(a.out.as_deref(), &bytes, &m)?;

    let bad = points.iter().filter(|p| !p.converged).count();
    if bad > 0 {
        return Err(CliError::Quality(format!("{bad} of {} cells did not converge", points.len())));
    }
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub fn cmd_trace(a: &TraceArgs) -> CliResult<()> {
    let (ch, constraint) = formats::load_channel(&a.sweep.channel).input()?;
    let constraint = constraint
        .ok_or_else(|| anyhow!("{} has no input constraint", a.sweep.channel.display()))
        .input()?;
    sweep("trace", &a.sweep, &ch, constraint, &[])
}

pub fn cmd_power_region(a: &PowerArgs) -> CliResult<()> {
    let (ch, _) = formats::load_channel(&a.sweep.channel).input()?;
    let constraint = InputConstraint::power(a.power)?;
    sweep("power-region", &a.sweep, &ch, constraint, &[("power", a.power.to_string())])
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SecrecyReport {
    pub secrecy_capacity: f64,
    pub units: Units,
    pub k_star: formats::Rows,
    pub s: formats::Rows,
    pub gap: f64,
    pub converged: bool,
}

pub fn cmd_secrecy_capacity(a: &SecrecyArgs) -> CliResult<()> {
    let (ch, constraint) = formats::load_channel(&a.channel).input()?;
    let constraint = constraint.ok_or_else(|| anyhow!("{} has no input constraint", a.channel.display())).input()?;
    let seed = resolve_seed(a.seed).input()?;
    let problem = BoundaryProblem::new(&ch, constraint, a.alpha)?;
    let p = problem.solve(&Cell { r0_star: 0.0, mu_p: 0.0, mu_s: 1.0 }, &solver_config(seed, true))?;
    let units = Units::from_bits_flag(a.bits);
    let report = SecrecyReport {
        secrecy_capacity: p.rs * units.factor(),
        units,
        k_star: p.k_opt().to_rows(),
        s: p.s.to_rows(),
        gap: p.gap * units.factor(),
        converged: p.converged,
    };
    println!("C_S = {:.9} {}", report.secrecy_capacity, units.label());
    println!("K* = {}", serde_json::to_string(&report.k_star).internal()?);
    if let Some(out) = &a.out {
        let mut m = RunManifest::new("secrecy-capacity", Some(&a.channel), seed);
        m.param("alpha", a.alpha).param("units", units.label());
        emit(Some(out), &json_bytes(&report)?, &m)?;
    }
    if !p.converged {
        return Err(CliError::Quality("the solver did not converge".into()));
    }
    Ok(())
}

pub fn cmd_verify_kkt(a: &VerifyArgs) -> CliResult<()> {
    let (ch, constraint) = formats::load_channel(&a.channel).input()?;
    let records = formats::read_json::<PointFile>(&a.point).input()?.into_vec();
    if records.is_empty() {
        return Err(CliError::Input(anyhow!("{} holds no points", a.point.display())));
    }
    let aligned = to_aligned(&ch, a.alpha)?;
    let solved = aligned.as_channel();
    let mut certs = Vec::with_capacity(records.len());
    let mut failed = 0;
    for (i, r) in records.iter().enumerate() {
        let k = r.k_opt.as_ref().ok_or_else(|| anyhow!("point {i} has no k_opt")).input()?;
        let k = formats::psd(k, "k_opt").input()?;
        let s = match (&r.s, &constraint) {
            (Some(s), _) => formats::psd(s, "s").input()?,
            (None, Some(InputConstraint::Covariance(s))) => s.clone(),
            _ => return Err(CliError::Input(anyhow!("point {i} has no s and the channel has no covariance"))),
        };
        let cert = build_certificate(&k, solved, &s, r.mu_p, r.mu_s, r.r0_nats())?;
        let ok = check_certificate(&cert, a.tol);
        failed += usize::from(!ok);
        eprintln!("point {i}: {} {}", describe(&cert), if ok { "PASS" } else { "FAIL" });
        certs.push(cert);
    }
    let bytes = if certs.len() == 1 { json_bytes(&certs[0])? } else { json_bytes(&certs)? };
    let mut m = RunManifest::new("verify-kkt", Some(&a.channel), 0);
    m.param("point", a.point.display()).param("alpha", a.alpha).param("tol", a.tol);
    emit(a.out.as_deref(), &bytes, &m)?;
    if failed > 0 {
        return Err(CliError::Quality(format!("{failed} of {} certificates fail at tol {:e}", certs.len(), a.tol)));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CertFile {
    One(Box<KktCertificate>),
    Many(Vec<KktCertificate>),
}

#[derive(Debug, Serialize)]
pub struct EnhanceReport {
    /// `None` when `mu_s <= mu_p`: nothing to enhance.
    pub enhancement: Option<CertifiedEnhancement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extremal: Option<ExtremalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extremal_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rewrite: Option<RewriteReport>,
    pub passed: bool,
}

pub fn enhance_one(
    cert: &KktCertificate,
    ch: &WiretapChannel,
    a: &EnhanceArgs,
    seed: u64,
) -> CliResult<EnhanceReport> {
    let Some(e) = enhance_certificate(cert, ch, a.tol)? else {
        return Ok(EnhanceReport { enhancement: None, extremal: None, extremal_error: None, rewrite: None, passed: true });
    };
    let mut tests = gaussian_test_set(&cert.s, a.samples, seed);
    tests.push(cert.k_star.clone());
    let mut passed = e.report.passed;
    let (mut extremal, mut extremal_error) = (None, None);
    if e.case == EnhancementCase::CommonRateZ {
        match check_extremal_inequality(
            &cert.k_star,
            &e.enhanced.sigma_tilde,
            &ch.sigma_z,
            cert.mu_s,
            cert.mu_s + cert.beta_z,
            &cert.m_s,
            &cert.s,
            &tests,
            a.extremal_tol,
        ) {
            Ok(x) => {
                passed &= x.holds;
                extremal = Some(x);
            }
            Err(err) => {
                passed = false;
                extremal_error = Some(err.to_string());
            }
        }
    }
    let rewrite = check_objective_rewrite(ch, &cert.s, cert.mu_p, cert.mu_s, cert.beta_z, &tests, REWRITE_TOL)?;
    passed &= rewrite.holds;
    Ok(EnhanceReport { enhancement: Some(e), extremal, extremal_error, rewrite: Some(rewrite), passed })
}

pub fn cmd_enhance(a: &EnhanceArgs) -> CliResult<()> {
    let (ch, _) = formats::load_channel(&a.channel).input()?;
    let certs = match formats::read_json::<CertFile>(&a.cert).input()? {
        CertFile::One(c) => vec![*c],
        CertFile::Many(v) => v,
    };
    let seed = resolve_seed(a.seed).input()?;
    let aligned = to_aligned(&ch, a.alpha)?;
    let solved = aligned.as_channel();
    let mut reports = Vec::with_capacity(certs.len());
    for (i, cert) in certs.iter().enumerate() {
        let r = enhance_one(cert, solved, a, seed)?;
        let what = match &r.enhancement {
            None => "no enhancement (mu_s <= mu_p)".to_string(),
            Some(e) => format!("{:?}, max residual {:.3e}", e.case, e.report.max_residual()),
        };
        eprintln!("certificate {i}: {what} {}", if r.passed { "PASS" } else { "FAIL" });
        reports.push(r);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let bytes = if reports.len() == 1 { json_bytes(&reports[0])? } else { json_bytes(&reports)? };
    let mut m = RunManifest::new("enhance", Some(&a.channel), seed);
    m.param("cert", a.cert.display())
        .param("alpha", a.alpha)
        .param("tol", a.tol)
        .param("extremal_tol", a.extremal_tol)
        .param("samples", a.samples);
    emit(a.out.as_deref(), &bytes, &m)?;
    if failed > 0 {
        return Err(CliError::Quality(format!("{failed} of {} enhancement checks failed", reports.len())));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub r0: f64,
    pub mu_p: f64,
    pub mu_s: f64,
    pub solver: f64,
    pub oracle: f64,
    pub abs_diff: f64,
}

/// Solver (refined) against the default grid oracle on every cell.
pub fn compare_cells(ch: &WiretapChannel, s: &PsdMatrix, grid: &[Cell], cfg: &SolverConfig) -> CliResult<Vec<CompareRow>> {
    let problem = BoundaryProblem::new(ch, InputConstraint::Covariance(s.clone()), 0.0)?;
    grid.iter()
        .map(|c| {
            let p = problem.solve(c, cfg)?;
            let objective = OracleObjective::Weighted { r0_star: c.r0_star, mu_p: c.mu_p, mu_s: c.mu_s };
            let o = grid_search(ch, s, objective, &GridSpec::default())?;
            Ok(CompareRow {
                r0: c.r0_star,
                mu_p: c.mu_p,
                mu_s: c.mu_s,
                solver: p.objective,
                oracle: o.value,
                abs_diff: (p.objective - o.value).abs(),
            })
        })
        .collect()
}

pub fn cmd_oracle_compare(a: &CompareArgs) -> CliResult<()> {
    let (ch, constraint) = formats::load_channel(&a.channel).input()?;
    let s = covariance(constraint, &a.channel)?;
    let seed = resolve_seed(a.seed).input()?;
    let weights = parse_weights(&a.weights).input()?;
    check_fractions(&a.r0_relative).input()?;
    let cfg = solver_config(seed, true);
    let problem = BoundaryProblem::new(&ch, InputConstraint::Covariance(s.clone()), a.alpha)?;
    let solved = problem.solved_channel().clone();
    let top = problem.r0_max(&cfg)?;
    let r0s: Vec<f64> = a.r0_relative.iter().map(|f| f * top).collect();
    let rows = compare_cells(&solved, &s, &cells(&r0s, &weights), &cfg)?;

    let f = Units::from_bits_flag(a.bits).factor();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(CompareRow {
            r0: r.r0 * f,
            solver: r.solver * f,
            oracle: r.oracle * f,
            abs_diff: r.abs_diff * f,
            ..*r
        })
        .internal()?;
    }
    let bytes = w.into_inner().internal()?;
    let mut m = RunManifest::new("oracle-compare", Some(&a.channel), seed);
    m.param("r0_relative", join(&a.r0_relative))
        .param("weights", &a.weights)
        .param("alpha", a.alpha)
        .param("tol", a.tol)
        .param("units", Units::from_bits_flag(a.bits).label());
    emit(a.out.as_deref(), &bytes, &m)?;
    let worst = rows.iter().fold(0.0_f64, |m, r| m.max(r.abs_diff));
    if worst > a.tol {
        return Err(CliError::Quality(format!("largest |solver - oracle| is {worst:.3e} nats > {:e}", a.tol)));
    }
    Ok(())
}

pub fn map_triple(t: TripleFile, direction: Direction) -> anyhow::Result<TripleFile> {
    match (t.validate()?, direction) {
        (TripleFile::Public(p), Direction::PublicToEquivocation) => Ok(TripleFile::Equivocation(p.to_equivocation())),
        (TripleFile::Equivocation(e), Direction::EquivocationToPublic) => Ok(TripleFile::Public(e.to_public()?)),
        (_, d) => bail!("triple does not match --direction {}", d.as_str()),
    }
}

pub fn cmd_map(a: &MapArgs) -> CliResult<()> {
    let t = formats::read_json::<TripleFile>(&a.triple).input()?;
    let mapped = map_triple(t, a.direction).input()?;
    let mut m = RunManifest::new("map", None, 0);
    m.param("triple", a.triple.display()).param("direction", a.direction.as_str());
    emit(a.out.as_deref(), &json_bytes(&mapped)?, &m)
}

pub fn cmd_membership(a: &MembershipArgs) -> CliResult<()> {
    let (ch, constraint) = formats::load_channel(&a.channel).input()?;
    let s = covariance(constraint, &a.channel)?;
    let t = formats::read_json::<TripleFile>(&a.triple).input()?.validate().input()?;
    let seed = resolve_seed(a.seed).input()?;
    let aligned = to_aligned(&ch, a.alpha)?;
    let solved = aligned.as_channel();
    let mut cfg = MembershipConfig::default();
    cfg.solver = cfg.solver.with_seed(seed);
    let result = match t {
        TripleFile::Public(p) => region_contains(&p, solved, &s, &cfg)?,
        TripleFile::Equivocation(e) => region_contains(&e, solved, &s, &cfg)?,
    };
    let mut m = RunManifest::new("membership", Some(&a.channel), seed);
    m.param("triple", a.triple.display()).param("alpha", a.alpha);
    emit(a.out.as_deref(), &json_bytes(&result)?, &m)?;
    if let Membership::Outside { search_complete: false, .. } = result {
        return Err(CliError::Quality("a solver call failed; the answer may be wrong".into()));
    }
    Ok(())
}
