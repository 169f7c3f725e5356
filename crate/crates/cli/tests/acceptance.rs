//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Built with `harness = false`.

use std::fmt::Write as _;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wiretap_core::channel::equivocation_gap;
use wiretap_core::enhancement::{check_extremal_inequality, enhance_certificate, gaussian_test_set, EnhancementCase};
use wiretap_core::kkt::{build_certificate, certify_point, check_certificate, KktCertificate};
use wiretap_core::membership::{region_contains, Membership, MembershipConfig};
use wiretap_core::oracle::{grid_search, GridSpec, OracleObjective};
use wiretap_core::rates::{self, RateEvaluator, RatePoint};
use wiretap_core::solver::{maximize_weighted, secrecy_capacity, BoundaryProblem, Cell};
use wiretap_core::tol::ALPHA_GRID;
use wiretap_core::{linalg, DMatrix, InputConstraint, PsdMatrix, PublicRateTriple, RateTriple, SolverConfig, WiretapChannel};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random::<f64>() * 2.0 - 1.0)
}

fn rand_pd(r: &mut ChaCha8Rng, t: usize, floor: f64) -> PsdMatrix {
    let a = rand_matrix(r, t, t);
    PsdMatrix::new(&a * a.transpose() + DMatrix::identity(t, t) * floor).unwrap()
}

fn rand_aligned(r: &mut ChaCha8Rng, t: usize) -> WiretapChannel {
    WiretapChannel::aligned(rand_pd(r, t, 0.1), rand_pd(r, t, 0.1))
}

fn rand_general(r: &mut ChaCha8Rng, t: usize) -> WiretapChannel {
    let hy = rand_matrix(r, t, t) + DMatrix::identity(t, t) * 1.5;
    let hz = rand_matrix(r, t, t) + DMatrix::identity(t, t) * 1.5;
    WiretapChannel::new(hy, hz, rand_pd(r, t, 0.2), rand_pd(r, t, 0.2))
}

/// `S^{1/2} R diag(u) R^T S^{1/2}`, `u` uniform in `[lo, hi]`.
fn rand_in_interval(r: &mut ChaCha8Rng, s: &PsdMatrix, lo: f64, hi: f64) -> PsdMatrix {
    let t = s.dim();
    let root = linalg::psd_sqrt(s.as_matrix());
    let q = rand_matrix(r, t, t).qr().q();
    let u: Vec<f64> = (0..t).map(|_| lo + (hi - lo) * r.random::<f64>()).collect();
    let d = DMatrix::from_fn(t, t, |i, j| if i == j { u[i] } else { 0.0 });
    PsdMatrix::new(linalg::symmetrize(&(&root * &q * d * q.transpose() * &root))).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// `(r0 fraction of min{C_Y(S), C_Z(S)}, mu_p, mu_s)`.
const CELLS: [(f64, f64, f64); 5] = [(0.0, 0.0, 1.0), (0.3, 1.0, 2.0), (0.6, 1.0, 0.5), (0.9, 1.0, 3.0), (0.5, 2.0, 1.0)];

struct Instance {
    ch: WiretapChannel,
    s: PsdMatrix,
    solver_cert: KktCertificate,
    solver_pg: f64,
    solver_converged: bool,
    solver_value: f64,
    oracle_cert: KktCertificate,
    oracle_value: f64,
}

/// The 20 x 5 oracle-equivalence instances shared by criteria 2, 4, 5, 6.
fn oracle_instances() -> (Vec<Instance>, Duration) {
    let start = Instant::now();
    let mut r = rng(2025);
    let mut out = Vec::new();
    for _ in 0..20 {
        let ch = rand_aligned(&mut r, 2);
        let s = rand_pd(&mut r, 2, 0.2);
        let (c_y, c_z) = rates::single_user_capacities(&ch, &s);
        for (f, mu_p, mu_s) in CELLS {
            let cell = Cell { r0_star: f * c_y.min(c_z), mu_p, mu_s };
            let p = maximize_weighted(&ch, &s, cell.r0_star, mu_p, mu_s, &SolverConfig::refined()).unwrap();
            let objective = OracleObjective::Weighted { r0_star: cell.r0_star, mu_p, mu_s };
            let o = grid_search(&ch, &s, objective, &GridSpec::default()).unwrap();
            let solver_cert = certify_point(&ch, &p).unwrap();
            let oracle_cert = build_certificate(&o.k_hat, &ch, &s, mu_p, mu_s, cell.r0_star).unwrap();
            out.push(Instance {
                ch: ch.clone(),
                s: s.clone(),

                solver_cert,
                solver_pg: p.proj_grad_norm,
                solver_converged: p.converged,
                solver_value: p.objective,
                oracle_cert,
                oracle_value: o.value,
            });
        }
    }
    (out, start.elapsed())
}

fn c1_scalar() -> Outcome {
    let start = Instant::now();
    let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
    let s = PsdMatrix::scalar(1.0).unwrap();
    let (cs, k) = secrecy_capacity(&ch, &s, &SolverConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let truth = 0.5 * (4.0_f64 / 3.0).ln();
    let err = (cs - truth).abs();
    let k_err = (k[(0, 0)] - 1.0).abs();
    outcome(
        err <= 1e-6 && k_err <= 1e-6 && elapsed < Duration::from_secs(1),
        format!("C_S = {cs:.9} (error {err:.1e}), K* = {:.9}, {:.3} s", k[(0, 0)], elapsed.as_secs_f64()),
    )
}

fn c2_oracle(inst: &[Instance], elapsed: Duration) -> Outcome {
    let worst = inst.iter().map(|i| (i.solver_value - i.oracle_value).abs()).fold(0.0, f64::max);
    let over = inst.iter().filter(|i| (i.solver_value - i.oracle_value).abs() > 1e-4).count();
    outcome(
        over == 0 && elapsed < Duration::from_secs(600),
        format!(
            "{} cells, max |solver - oracle| = {worst:.2e}, {over} over 1e-4, {:.1} s",
            inst.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_telescoping() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        let t = 1 + i % 4;
        let ch = rand_aligned(&mut r, t);
        let s = rand_pd(&mut r, t, 0.05);
        let k = rand_in_interval(&mut r, &s, 0.0, 1.0);
        let (c_y, c_z) = rates::single_user_capacities(&ch, &s);
        let b = rates::gaussian_region_rates(&k, &s, &ch).unwrap();
        worst = worst.max((b.rs + b.rp + b.r0y - c_y).abs()).max((b.rp + b.r0z - c_z).abs());
    }
    outcome(worst <= 1e-10, format!("1000 samples, max identity error {worst:.2e}"))
}

fn c4_kkt(inst: &[Instance]) -> Outcome {
    let oracle_fail = inst.iter().filter(|i| !check_certificate(&i.oracle_cert, 1e-4)).count();
    let solver_fail = inst
        .iter()
        .filter(|i| !(i.solver_converged && i.solver_pg <= 1e-10 && check_certificate(&i.solver_cert, 1e-6)))
        .count();
    let worst_oracle = inst.iter().map(|i| i.oracle_cert.max_residual()).fold(0.0, f64::max);
    let worst_solver = inst.iter().map(|i| i.solver_cert.max_residual()).fold(0.0, f64::max);
    let worst_pg = inst.iter().map(|i| i.solver_pg).fold(0.0, f64::max);
    outcome(
        oracle_fail == 0 && solver_fail == 0,
        format!(
            "oracle: {oracle_fail} fail at 1e-4 (max residual {worst_oracle:.1e}); solver: {solver_fail} fail at 1e-6 \
             (max residual {worst_solver:.1e}, max pg {worst_pg:.1e})"
        ),
    )
}

fn c5_c6_enhancement(inst: &[Instance]) -> (Outcome, Outcome) {
    let mut counts = [0usize; 3];
    let mut enh_fail = 0;
    let mut worst = 0.0_f64;
    let mut dominance_fail = 0;
    let mut ext = (0usize, 0usize, 0.0_f64, 0.0_f64);
    for i in inst {
        let cert = &i.solver_cert;
        let Some(e) = enhance_certificate(cert, &i.ch, 1e-7).unwrap() else {
            continue;
        };
        worst = worst.max(e.report.max_residual());
        enh_fail += usize::from(!e.report.passed);
        match e.case {
            EnhancementCase::Unconstrained => {
                counts[0] += 1;
                dominance_fail += usize::from(cert.r0z < cert.r0y - 1e-7);
            }
            EnhancementCase::CommonRateY => counts[1] += 1,
            EnhancementCase::CommonRateZ => {
                counts[2] += 1;
                let mut tests = gaussian_test_set(&i.s, 100, 6);
                tests.push(cert.k_star.clone());
                let x = check_extremal_inequality(
                    &cert.k_star,
                    &e.enhanced.sigma_tilde,
                    &i.ch.sigma_z,
                    cert.mu_s,
                    cert.mu_s + cert.beta_z,
                    &cert.m_s,
                    &i.s,
                    &tests,
                    1e-9,
                );
                ext.0 += 1;
                match x {
                    Ok(x) => {
                        ext.2 = ext.2.max(x.max_excess);
                        ext.3 = ext.3.max(x.gap_at_k_star.abs());
                        if !(x.holds && x.gap_at_k_star.abs() <= 1e-9) {
                            ext.1 += 1;
                        }
                    }
                    Err(_) => ext.1 += 1,
                }
            }
        }
    }
    let c5 = outcome(
        enh_fail == 0 && dominance_fail == 0 && counts.iter().sum::<usize>() > 0,
        format!(
            "cases (no common-rate constraint / R0Y active / R0Z active) = {counts:?}, max residual {worst:.1e}, \
             {enh_fail} fail at 1e-7, {dominance_fail} with R0Z < R0Y - 1e-7"
        ),
    );
    let c6 = outcome(
        ext.0 > 0 && ext.1 == 0,
        format!(
            "{} instances x 101 covariances, max LHS - RHS = {:.1e}, max |LHS - RHS| at K* = {:.1e}, {} fail",
            ext.0, ext.2, ext.3, ext.1
        ),
    );
    (c5, c6)
}

fn c7_gradients() -> Outcome {
    let mut r = rng(7);
    let h = 1e-5;
    type Pick = fn(&RatePoint) -> f64;
    let functionals: [(&str, Pick); 6] = [
        ("C_Y", |p| p.c_y_k),
        ("C_Z", |p| p.c_z_k),
        ("R_s", |p| p.rate_s()),
        ("R_p", |p| p.rate_p()),
        ("R_0Y", |p| p.rate_0y()),
        ("R_0Z", |p| p.rate_0z()),
    ];
    let mut worst = 0.0_f64;
    let mut worst_name = "";
    for i in 0..20 {
        let t = 2 + i % 2;
        let ch = if i % 4 < 2 { rand_aligned(&mut r, t) } else { rand_general(&mut r, t) };
        let s = rand_pd(&mut r, t, 0.2);
        let k = rand_in_interval(&mut r, &s, 0.2, 0.8);
        let ev = RateEvaluator::new(&ch, s.as_matrix()).unwrap();
        let (_, g) = ev.eval_with_grad(k.as_matrix()).unwrap();
        let analytic: [DMatrix<f64>; 6] = [g.c_y.clone(), g.c_z.clone(), &g.c_y - &g.c_z, g.c_z.clone(), -&g.c_y, -&g.c_z];
        for (j, (name, pick)) in functionals.iter().enumerate() {
            // Gradient from central differences along the symmetric basis.
            let mut fd = DMatrix::zeros(t, t);
            for a in 0..t {
                for b in a..t {
                    let mut e = DMatrix::zeros(t, t);
                    e[(a, b)] = 1.0;
                    e[(b, a)] = 1.0;
                    let plus = ev.eval(&(k.as_matrix() + &e * h)).unwrap();
                    let minus = ev.eval(&(k.as_matrix() - &e * h)).unwrap();
                    let d = (pick(&plus) - pick(&minus)) / (2.0 * h);
                    // Off-diagonal directions carry 2 G_ab.
                    let v = if a == b { d } else { d / 2.0 };
                    fd[(a, b)] = v;
                    fd[(b, a)] = v;
                }
            }
            let rel = linalg::frobenius(&(&fd - &analytic[j])) / linalg::frobenius(&analytic[j]);
            if rel > worst {
                worst = rel;
                worst_name = name;
            }
        }
    }
    outcome(
        worst <= 1e-5,
        format!("20 points x 6 functionals, max relative error {worst:.1e} ({worst_name})"),
    )
}

fn c8_general_limit() -> Outcome {
    let mut r = rng(10);
    let ch = rand_general(&mut r, 2);
    let s = rand_pd(&mut r, 2, 0.2);
    let mut gaps = Vec::new();
    let mut objectives = Vec::new();
    let mut converged = true;
    for alpha in ALPHA_GRID {
        let problem = BoundaryProblem::new(&ch, InputConstraint::Covariance(s.clone()), alpha).unwrap();
        let top = problem.r0_max(&SolverConfig::default()).unwrap();
        for (f, mu_p, mu_s) in [(0.0, 0.0, 1.0), (0.4, 1.0, 2.0)] {
            let p = problem.solve(&Cell { r0_star: f * top, mu_p, mu_s }, &SolverConfig::default()).unwrap();
            converged &= p.converged;
            if mu_p == 0.0 {
                objectives.push(p.objective);
            }
        }
        gaps.push(equivocation_gap(&ch, &s, alpha).unwrap());
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = *gaps.last().unwrap();
    let mut detail = String::from("gaps");
    for (a, g) in ALPHA_GRID.iter().zip(&gaps) {
        let _ = write!(detail, " {a:.0e}:{g:.2e}");
    }
    let _ = write!(detail, "; secrecy values");
    for v in &objectives {
        let _ = write!(detail, " {v:.6}");
    }
    outcome(decreasing && last < 1e-3 && converged, detail)
}

fn c9_mapping_and_membership() -> Outcome {
    let mut r = rng(9);
    let mut roundtrip_fail = 0;
    for _ in 0..1000 {
        let (a, b, c) = (r.random::<f64>() * 5.0, r.random::<f64>() * 5.0, r.random::<f64>() * 5.0);
        let p = PublicRateTriple::new(a, b, c).unwrap();
        let back = rates::map_equivocation_to_public(&rates::map_public_to_equivocation(&p)).unwrap();
        let ulp = 4.0 * f64::EPSILON * (b + c).max(1.0);
        if back.r0 != p.r0 || back.rs != p.rs || (back.rp - p.rp).abs() > ulp {
            roundtrip_fail += 1;
        }
        let e = RateTriple::new(a, b + c, c.min(b + c)).unwrap();
        let e_back = rates::map_public_to_equivocation(&rates::map_equivocation_to_public(&e).unwrap());
        if e_back.r0 != e.r0 || e_back.re != e.re || (e_back.r1 - e.r1).abs() > ulp {
            roundtrip_fail += 1;
        }
    }

    let cfg = MembershipConfig::default();
    let mut disagree = 0;
    let mut kinds = [0usize; 3];
    for _ in 0..3 {
        let ch = rand_aligned(&mut r, 2);
        let s = rand_pd(&mut r, 2, 0.1);
        for _ in 0..50 {
            // Corners of the K-slice of the region, scaled in or out.
            let k = rand_in_interval(&mut r, &s, 0.0, 1.0);
            let b = rates::gaussian_region_rates(&k, &s, &ch).unwrap();
            let common = b.r0y.min(b.r0z);
            let r0 = r.random::<f64>() * common;
            let rs = b.rs.max(0.0);
            let rp = (b.rs + b.rp + common - r0 - rs).max(0.0);
            let scale = 0.5 + r.random::<f64>();
            let p = PublicRateTriple::new(r0 * scale, rp * scale, rs * scale).unwrap();
            let a = region_contains(&p, &ch, &s, &cfg).unwrap();
            let e = region_contains(&p.to_equivocation(), &ch, &s, &cfg).unwrap();
            if std::mem::discriminant(&a) != std::mem::discriminant(&e) {
                disagree += 1;
            }
            kinds[match a {
                Membership::Inside { .. } => 0,
                Membership::Boundary { .. } => 1,
                Membership::Outside { .. } => 2,
            }] += 1;
        }
    }
    outcome(
        roundtrip_fail == 0 && disagree == 0,
        format!(
            "2000 roundtrips, {roundtrip_fail} off by more than 4 ulp; 150 triples (inside/boundary/outside = \
             {kinds:?}), {disagree} disagree between forms"
        ),
    )
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let ch = dir.path().join("channel.json");
    std::fs::write(
        &ch,
        r#"{"sigma_y": [[1.0, 0.2], [0.2, 0.5]], "sigma_z": [[2.0, 0.1], [0.1, 0.8]],
            "constraint": {"covariance": [[1.0, 0.3], [0.3, 2.0]]}}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_wiretap-region"))
            .arg("trace")
            .arg(&ch)
            .args(["--seed", "1234", "--out"])
            .arg(&out)
            .env_remove("WIRETAP_REGION_SEED")
            .status()
            .unwrap();
        (status.code(), std::fs::read(&out).unwrap_or_default())
    };
    let (code_a, a) = run("a.csv");
    let (code_b, b) = run("b.csv");
    outcome(
        code_a == Some(0) && code_b == Some(0) && !a.is_empty() && a == b,
        format!("exit codes {code_a:?}/{code_b:?}, {} bytes, identical: {}", a.len(), a == b),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut clock = Instant::now();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        let pass = if o.pass { "PASS" } else { "FAIL" };
        println!("{pass} C{n} {name}: {} [{:.1} s]", o.detail, clock.elapsed().as_secs_f64());
        clock = Instant::now();
        results.push((n, name, o));
    };
    report(1, "scalar ground truth", c1_scalar());
    let (inst, elapsed) = oracle_instances();
    report(2, "oracle equivalence", c2_oracle(&inst, elapsed));
    report(3, "telescoping identities", c3_telescoping());
    report(4, "KKT certification", c4_kkt(&inst));
    let (c5, c6) = c5_c6_enhancement(&inst);
    report(5, "enhancement", c5);
    report(6, "extremal inequality", c6);
    report(7, "gradient correctness", c7_gradients());
    report(8, "general-case limit", c8_general_limit());
    report(9, "triple mapping and membership", c9_mapping_and_membership());
    report(10, "determinism", c10_determinism());
    let failed: Vec<usize> = results.iter().filter(|(_, _, o)| !o.pass).map(|(n, _, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
