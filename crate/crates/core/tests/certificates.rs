mod common;

use common::*;
use proptest::prelude::*;
use wiretap_core::enhancement::{
    check_extremal_inequality, check_objective_rewrite, enhance_certificate, gaussian_test_set, EnhancementCase,
};
use wiretap_core::kkt::{build_certificate, certify_point, check_certificate, stationarity_residual, BetaCase};
use wiretap_core::oracle::{grid_search, GridSpec, OracleObjective};
use wiretap_core::solver::maximize_weighted;
use wiretap_core::tol::{EXT_TOL, REWRITE_TOL};
use wiretap_core::{linalg, rates, PsdMatrix, SolverConfig, WiretapChannel};

const CELLS: [(f64, f64, f64); 6] =
    [(0.0, 0.0, 1.0), (0.3, 1.0, 2.0), (0.6, 1.0, 0.5), (0.9, 1.0, 3.0), (0.5, 2.0, 1.0), (0.2, 1.0, 4.0)];

fn instances() -> Vec<(WiretapChannel, PsdMatrix)> {
    let mut r = rng(7);
    (0..6)
        .map(|_| {
            let ch = rand_aligned(&mut r, 2);
            let s = rand_pd(&mut r, 2, 0.2);
            (ch, s)
        })
        .collect()
}

/// Refined solver maximizers are certified at 1e-6 and their enhancements
/// satisfy the order relations and identities they are built for.
#[test]
fn solver_certificates_and_enhancements() {
    let mut seen = [false; 3];
    for (ch, s) in instances() {
        let (c_y, c_z) = rates::single_user_capacities(&ch, &s);
        for (f, mu_p, mu_s) in CELLS {
            let r0 = f * c_y.min(c_z);
            let p = maximize_weighted(&ch, &s, r0, mu_p, mu_s, &SolverConfig::refined()).unwrap();
            assert!(p.converged && p.proj_grad_norm <= 1e-10, "cell {:?} pg {:e} feas {:e} conv {}", (f, mu_p, mu_s), p.proj_grad_norm, p.feasibility_residual, p.converged);
            let cert = certify_point(&ch, &p).unwrap();
            assert!(check_certificate(&cert, 1e-6), "{cert:?}");
            let recomputed = stationarity_residual(&cert, &ch).unwrap();
            assert!((recomputed - cert.residual_stationarity).abs() <= 1e-12);

            if mu_s > mu_p && cert.beta_y == 0.0 && cert.beta_z == 0.0 {
                assert!(cert.r0z >= cert.r0y - 1e-7, "{cert:?}");
            }
            let Some(e) = enhance_certificate(&cert, &ch, 1e-7).unwrap() else {
                assert!(mu_s <= mu_p);
                continue;
            };
            assert!(e.report.passed, "{:?}", e.report);
            if let Some(after) = e.report.get("stationarity_after") {
                assert!(after.value <= 1e-8, "{after:?}");
            }
            match e.case {
                EnhancementCase::Unconstrained => seen[0] = true,
                EnhancementCase::CommonRateY => seen[1] = true,
                EnhancementCase::CommonRateZ => {
                    seen[2] = true;
                    let mut tests = gaussian_test_set(&s, 100, 1);
                    tests.push(cert.k_star.clone());
                    let x = check_extremal_inequality(
                        &cert.k_star,
                        &e.enhanced.sigma_tilde,
                        &ch.sigma_z,
                        cert.mu_s,
                        cert.mu_s + cert.beta_z,
                        &cert.m_s,
                        &s,
                        &tests,
                        EXT_TOL,
                    )
                    .unwrap();
                    assert!(x.holds, "{x:?}");
                    // K* itself sits in the test set, so the largest excess is ~0.
                    assert!(x.max_excess.abs() <= EXT_TOL, "{x:?}");
                }
            }
        }
    }
    assert_eq!(seen, [true; 3], "every enhancement case should occur");
}

#[test]
fn oracle_maximizers_certify_loosely() {
    let inst = instances();
    for (ch, s) in inst.iter().take(2) {
        let (c_y, c_z) = rates::single_user_capacities(ch, s);
        for (f, mu_p, mu_s) in [CELLS[1], CELLS[3]] {
            let r0 = f * c_y.min(c_z);
            let o = grid_search(ch, s, OracleObjective::Weighted { r0_star: r0, mu_p, mu_s }, &GridSpec::default())
                .unwrap();
            let cert = build_certificate(&o.k_hat, ch, s, mu_p, mu_s, r0).unwrap();
            assert!(check_certificate(&cert, 1e-4), "{cert:?}");
        }
    }
}

/// Moving away from a secrecy-capacity maximizer along a feasible direction
/// of length 1e-2 breaks stationarity visibly.
#[test]
fn certificates_detect_perturbed_points() {
    let mut hit = 0;
    for (ch, s) in instances() {
        let p = maximize_weighted(&ch, &s, 0.0, 0.0, 1.0, &SolverConfig::refined()).unwrap();
        let k = p.k_opt().as_matrix();
        let mid = s.as_matrix() * 0.5;
        let dir = &mid - k;
        let norm = linalg::frobenius(&dir);
        if norm < 0.05 {
            continue;
        }
        let moved = PsdMatrix::new(linalg::symmetrize(&(k + dir * (1e-2 / norm)))).unwrap();
        let base = build_certificate(p.k_opt(), &ch, &s, 0.0, 1.0, 0.0).unwrap();
        let off = build_certificate(&moved, &ch, &s, 0.0, 1.0, 0.0).unwrap();
        assert!(base.residual_stationarity <= 1e-6);
        assert!(off.residual_stationarity > 1e-4, "{}", off.residual_stationarity);
        hit += 1;
    }
    assert!(hit >= 3);
}

#[test]
fn case_tags_follow_rates() {
    for (ch, s) in instances().into_iter().take(3) {
        let (c_y, c_z) = rates::single_user_capacities(&ch, &s);
        let r0 = 0.95 * c_y.min(c_z);
        let p = maximize_weighted(&ch, &s, r0, 1.0, 3.0, &SolverConfig::refined()).unwrap();
        let cert = certify_point(&ch, &p).unwrap();
        // A common rate this high binds one of the two constraints.
        assert_ne!(cert.case_tag.beta, BetaCase::Inactive, "{cert:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_rewrite_holds(seed in any::<u64>(), mu_p in 0.0..2.0_f64, extra in 0.01..2.0_f64, beta_z in 0.0..3.0_f64) {
        let mut r = rng(seed);
        let ch = rand_aligned(&mut r, 2);
        let s = rand_pd(&mut r, 2, 0.05);
        let ks: Vec<PsdMatrix> = (0..10).map(|_| rand_in_interval(&mut r, &s, 0.0, 1.0)).collect();
        let rep = check_objective_rewrite(&ch, &s, mu_p, mu_p + extra, beta_z, &ks, REWRITE_TOL).unwrap();
        prop_assert!(rep.holds, "{rep:?}");
    }
}
