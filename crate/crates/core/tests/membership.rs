mod common;

use common::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wiretap_core::membership::{region_contains, Membership, MembershipConfig};
use wiretap_core::{rates, PsdMatrix, PublicRateTriple, WiretapChannel};

/// A triple dominated by the rates of a random `K`, hence inside.
fn inside_triple(r: &mut ChaCha8Rng, ch: &WiretapChannel, s: &PsdMatrix) -> PublicRateTriple {
    let k = rand_in_interval(r, s, 0.0, 1.0);
    let b = rates::gaussian_region_rates(&k, s, ch).unwrap();
    let common = b.r0y.min(b.r0z);
    let r0 = r.random::<f64>() * common;
    let rs = r.random::<f64>() * b.rs.max(0.0);
    let rp = r.random::<f64>() * (b.rs + b.rp + common - r0 - rs).max(0.0);
    PublicRateTriple::new(r0, rp, rs).unwrap()
}

fn same_kind(a: &Membership, b: &Membership) -> bool {
    core::mem::discriminant(a) == core::mem::discriminant(b)
}

#[test]
fn dominated_triples_are_inside_in_both_forms() {
    let mut r = rng(31);
    let cfg = MembershipConfig::default();
    for _ in 0..2 {
        let ch = rand_aligned(&mut r, 2);
        let s = rand_pd(&mut r, 2, 0.1);
        for _ in 0..6 {
            let p = inside_triple(&mut r, &ch, &s);
            let a = region_contains(&p, &ch, &s, &cfg).unwrap();
            let b = region_contains(&p.to_equivocation(), &ch, &s, &cfg).unwrap();
            assert!(a.is_inside(), "{p:?} {a:?}");
            assert!(same_kind(&a, &b));
        }
    }
}

#[test]
fn triples_beyond_capacity_are_outside() {
    let mut r = rng(32);
    let ch = rand_aligned(&mut r, 2);
    let s = rand_pd(&mut r, 2, 0.1);
    let (c_y, _) = rates::single_user_capacities(&ch, &s);
    let cfg = MembershipConfig::default();
    // R_0 + R_p + R_s <= C_Y(K) + R_0Y(K) = C_Y(S) for every K.
    let p = PublicRateTriple::new(0.0, c_y + 0.1, 0.0).unwrap();
    match region_contains(&p, &ch, &s, &cfg).unwrap() {
        Membership::Outside { margin, .. } => assert!(margin >= 0.1 - 1e-9, "{margin}"),
        other => panic!("{other:?}"),
    }
}

/// Scaling a boundary point outward leaves the region; both forms agree.
#[test]
fn inflated_boundary_points_are_outside() {
    let mut r = rng(33);
    let ch = rand_aligned(&mut r, 2);
    let s = rand_pd(&mut r, 2, 0.1);
    let cfg = MembershipConfig::default();
    let (c_s, _) = wiretap_core::solver::secrecy_capacity(&ch, &s, &cfg.solver).unwrap();
    assert!(c_s > 0.0);
    let p = PublicRateTriple::new(0.0, 0.0, c_s * 1.01).unwrap();
    let a = region_contains(&p, &ch, &s, &cfg).unwrap();
    let b = region_contains(&p.to_equivocation(), &ch, &s, &cfg).unwrap();
    assert!(matches!(a, Membership::Outside { .. }), "{a:?}");
    assert!(same_kind(&a, &b));
    let q = PublicRateTriple::new(0.0, 0.0, c_s).unwrap();
    assert!(region_contains(&q, &ch, &s, &cfg).unwrap().is_inside());
}

#[test]
fn region_grows_with_s() {
    let mut r = rng(34);
    let cfg = MembershipConfig::default();
    for _ in 0..2 {
        let ch = rand_aligned(&mut r, 2);
        let s1 = rand_pd(&mut r, 2, 0.1);
        let extra = rand_pd(&mut r, 2, 0.0);
        let s2 = PsdMatrix::new(s1.as_matrix() + extra.as_matrix()).unwrap();
        for _ in 0..5 {
            let p = inside_triple(&mut r, &ch, &s1);
            assert!(region_contains(&p, &ch, &s1, &cfg).unwrap().is_inside());
            assert!(region_contains(&p, &ch, &s2, &cfg).unwrap().is_inside(), "{p:?}");
        }
    }
}
