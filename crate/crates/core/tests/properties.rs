use arakelov_core::curve::{adeg, coker_log, coker_log_smith, sup_norm, NormedInvertibleModule};
use arakelov_core::gs::log_factorial;
use arakelov_core::interval::ExpScale;
use arakelov_core::lattice::{brute_force_oracle, enumerate_ball, h0_with, h1_polar, h1_with, EnumOptions};
use arakelov_core::module::{NormedZModule, TorsionData};
use arakelov_core::norm::{LogWeight, NormSpec};
use arakelov_core::p1::{p1_l2_norm, p1_pointwise_norm, p1_sup_norm, BinaryForm, FSNormContext};
use arakelov_core::rational::{q, QMatrix, Q};
use arakelov_core::ring::{EmbeddingKind, RingRegistry};
use arakelov_core::sample::{self, EntryRange, NormFamily};
use arakelov_core::volume::{ball_volume, chi};
use arakelov_core::Error;
use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;

fn family(k: u8) -> NormFamily {
    if k % 2 == 0 {
        NormFamily::Ellipsoid
    } else {
        NormFamily::MaxAbs
    }
}

fn qv(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| q(x)).collect()
}

fn oracle(m: &NormedZModule) -> u64 {
    let mut r = 1;
    loop {
        match brute_force_oracle(m, r) {
            Ok(c) => return c,
            Err(Error::BoxTooSmall { needed, .. }) => r = needed,
            Err(e) => panic!("{e}"),
        }
    }
}

fn norms_of_every_kind(seed: u64, n: usize) -> Vec<NormSpec> {
    let mut rng = sample::rng(seed);
    let e = EntryRange::INTEGERS;
    let ell = sample::random_norm(&mut rng, n, NormFamily::Ellipsoid, e);
    let max = sample::random_norm(&mut rng, n, NormFamily::MaxAbs, e);
    let hull = max.dual().unwrap();
    let scaled = ell.scale(&LogWeight::real(0.7));
    let mut out = vec![ell, max, hull, scaled];
    if n == 2 {
        let mut rings = RingRegistry::new();
        let ring = rings.resolve("QQ_i").unwrap();
        let sup = NormSpec::EmbeddingSup { ring, weights: vec![LogWeight::real(0.3), LogWeight::real(0.3)] };
        out.push(sup.dual().unwrap());
        out.push(sup);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norms_are_homogeneous_and_subadditive(
        seed in any::<u64>(),
        n in 1usize..=3,
        u in prop::collection::vec(-6i64..=6, 3),
        v in prop::collection::vec(-6i64..=6, 3),
        alpha in -5i64..=5,
    ) {
        for norm in norms_of_every_kind(seed, if n == 1 { 2 } else { n }) {
            let d = norm.dim();
            let (u, v) = (qv(&u[..d]), qv(&v[..d]));
            let nu = norm.eval(&u).unwrap();
            let nv = norm.eval(&v).unwrap();
            let au: Vec<Q> = u.iter().map(|x| x * q(alpha)).collect();
            let sum: Vec<Q> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            prop_assert!((norm.eval(&au).unwrap() - alpha.abs() as f64 * nu).abs() <= 1e-10 * (1.0 + nu * alpha.abs() as f64));
            prop_assert!(norm.eval(&sum).unwrap() <= nu + nv + 1e-10 * (1.0 + nu + nv));
        }
    }

    #[test]
    fn ellipsoid_double_dual_is_exact(seed in any::<u64>(), n in 1usize..=5) {
        let norm = sample::random_norm(&mut sample::rng(seed), n, NormFamily::Ellipsoid, EntryRange { bound: 3, max_den: 4 });
        prop_assert_eq!(norm.dual().unwrap().dual().unwrap(), norm);
    }

    #[test]
    fn chained_quotients_agree(seed in any::<u64>(), fam in 0u8..2, u in prop::collection::vec(-4i64..=4, 2)) {
        let mut rng = sample::rng(seed);
        let norm = sample::random_norm(&mut rng, 4, family(fam), EntryRange::INTEGERS);
        let t = sample::random_unimodular(&mut rng, 4, 6);
        let g1 = QMatrix::from_i64(&[vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0]]).unwrap().mul(&t).unwrap();
        let g2 = QMatrix::from_i64(&[vec![1, 0, 1], vec![0, 1, -1]]).unwrap();
        let two_step = norm.quotient(&g1).unwrap().quotient(&g2).unwrap();
        let direct = norm.quotient(&g2.mul(&g1).unwrap()).unwrap();
        let u = qv(&u);
        let (a, b) = (two_step.eval(&u).unwrap(), direct.eval(&u).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b), "{a} vs {b}");
    }

    #[test]
    fn sub_then_quotient_dominates_quotient_then_sub(
        seed in any::<u64>(),
        fam in 0u8..2,
        c in -2i64..=2,
        alpha in 1i64..=2,
        p in -4i64..=4,
    ) {
        let mut rng = sample::rng(seed);
        let norm = sample::random_norm(&mut rng, 4, family(fam), EntryRange::INTEGERS);
        let v: Vec<i64> = (0..4).map(|_| rand::Rng::random_range(&mut rng, -3..=3)).collect();
        prop_assume!(v[0] != 0 || v[1] != 0);
        let g = QMatrix::from_i64(&[vec![1, 0, 0, 0], vec![0, 1, 0, 0]]).unwrap();
        let into_q = QMatrix::from_i64(&[vec![v[0]], vec![v[1]]]).unwrap();
        let rhs = norm.quotient(&g).unwrap().subnorm(&into_q).unwrap();

        // W = <v, c v + alpha e3>: the kernel of g is only partly inside W.
        let w = QMatrix::from_i64(&[
            vec![v[0], c * v[0]],
            vec![v[1], c * v[1]],
            vec![v[2], c * v[2] + alpha],
            vec![v[3], c * v[3]],
        ]).unwrap();
        let onto_p = QMatrix::from_i64(&[vec![1, c]]).unwrap();
        let lhs = norm.subnorm(&w).unwrap().quotient(&onto_p).unwrap();
        let pp = [q(p)];
        prop_assert!(lhs.eval(&pp).unwrap() >= rhs.eval(&pp).unwrap() - 1e-9);

        // W = <v, e3, e4> contains the kernel: equality.
        let w = QMatrix::from_i64(&[vec![v[0], 0, 0], vec![v[1], 0, 0], vec![v[2], 1, 0], vec![v[3], 0, 1]]).unwrap();
        let onto_p = QMatrix::from_i64(&[vec![1, 0, 0]]).unwrap();
        let lhs = norm.subnorm(&w).unwrap().quotient(&onto_p).unwrap();
        let (a, b) = (lhs.eval(&pp).unwrap(), rhs.eval(&pp).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b), "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn enumeration_matches_brute_force(seed in any::<u64>(), n in 1usize..=3, fam in 0u8..2) {
        let m = sample::random_module(&mut sample::rng(seed), n, family(fam), EntryRange::INTEGERS, false);
        let r = enumerate_ball(&m, &ExpScale::one(), &EnumOptions::default()).unwrap();
        prop_assert_eq!(r.count, oracle(&m));
    }

    #[test]
    fn points_are_closed_under_negation(seed in any::<u64>(), n in 1usize..=4, fam in 0u8..2) {
        let m = sample::random_module(&mut sample::rng(seed), n, family(fam), EntryRange::INTEGERS, false);
        let opts = EnumOptions { collect_points: true, ..EnumOptions::default() };
        let r = enumerate_ball(&m, &ExpScale::one(), &opts).unwrap();
        prop_assert_eq!(r.count % 2, 1);
        let mut pts = r.points.unwrap();
        pts.sort();
        let mut neg: Vec<Vec<i64>> = pts.iter().map(|p| p.iter().map(|x| -x).collect()).collect();
        neg.sort();
        prop_assert_eq!(pts, neg);
    }

    #[test]
    fn dual_and_polar_counts_agree(seed in any::<u64>(), n in 1usize..=3, fam in 0u8..2) {
        let m = sample::random_module(&mut sample::rng(seed), n, family(fam), EntryRange::INTEGERS, false);
        let opts = EnumOptions::default();
        prop_assert_eq!(h1_with(&m, &opts).unwrap(), h1_polar(&m, &opts).unwrap());
    }

    #[test]
    fn larger_norms_count_fewer_points(seed in any::<u64>(), n in 1usize..=3, w in prop::collection::vec(-2i64..=2, 3)) {
        let mut rng = sample::rng(seed);
        let gram = sample::random_gram(&mut rng, n, EntryRange::INTEGERS);
        let bigger = QMatrix::from_rows(
            (0..n).map(|i| (0..n).map(|j| &gram[(i, j)] + q(w[i] * w[j])).collect()).collect(),
        ).unwrap();
        let small = NormedZModule::free(NormSpec::Ellipsoid { gram }).unwrap();
        let large = NormedZModule::free(NormSpec::Ellipsoid { gram: bigger }).unwrap();
        let opts = EnumOptions::default();
        prop_assert!(h0_with(&small, &opts).unwrap() >= h0_with(&large, &opts).unwrap());
        prop_assert!(h1_with(&small, &opts).unwrap() <= h1_with(&large, &opts).unwrap());
    }

    #[test]
    fn scaling_growth_is_bounded(seed in any::<u64>(), n in 1usize..=3, fam in 0u8..2, lambda in 0.0f64..1.5) {
        let m = sample::random_module(&mut sample::rng(seed), n, family(fam), EntryRange::INTEGERS, true);
        let scaled = NormedZModule::new(n, m.torsion.clone(), m.norm.scale(&LogWeight::real(lambda))).unwrap();
        let opts = EnumOptions::default();
        let gain = h0_with(&scaled, &opts).unwrap() - h0_with(&m, &opts).unwrap();
        let rk = n as f64;
        prop_assert!(gain >= 0.0);
        prop_assert!(gain <= lambda * rk + 9f64.ln() * rk + 2.0 * log_factorial(n) + 1e-12);
    }

    #[test]
    fn chi_is_invariant_under_unimodular_change(seed in any::<u64>(), n in 1usize..=4, fam in 0u8..2) {
        let mut rng = sample::rng(seed);
        let m = sample::random_module(&mut rng, n, family(fam), EntryRange::INTEGERS, true);
        let u = sample::random_unimodular(&mut rng, n, 3 * n);
        let moved = NormedZModule::new(n, m.torsion.clone(), m.norm.subnorm(&u).unwrap()).unwrap();
        let (a, b) = (chi(&m).unwrap(), chi(&moved).unwrap());
        prop_assert!(a.volume.is_exact() && b.volume.is_exact());
        prop_assert!((a.value - b.value).abs() <= 1e-9 * (1.0 + a.value.abs()));
    }

    #[test]
    fn mahler_lower_bound(seed in any::<u64>(), n in 1usize..=4, fam in 0u8..2) {
        let norm = sample::random_norm(&mut sample::rng(seed), n, family(fam), EntryRange::INTEGERS);
        let v = ball_volume(&norm).unwrap();
        let w = ball_volume(&norm.dual().unwrap()).unwrap();
        prop_assert!(v.is_exact() && w.is_exact());
        let f = (n as f64 * 4f64.ln() - 2.0 * log_factorial(n)).exp();
        prop_assert!(v.value * w.value >= f * (1.0 - 1e-12));
    }
}

fn curve_ring(k: u8) -> &'static str {
    ["QQ_i", "QQ_sqrt2", "poly:-2,0,0,1", "poly:1,1,1"][k as usize % 4]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_embeddings_have_equal_absolute_values(k in 0u8..4, x in prop::collection::vec(-20i64..=20, 3)) {
        let ring = RingRegistry::new().resolve(curve_ring(k)).unwrap();
        let x = &x[..ring.degree()];
        for i in 0..ring.degree() {
            if let EmbeddingKind::Complex { conjugate } = ring.kinds()[i] {
                let (a, b) = (ring.eval_i64(i, x).abs2(), ring.eval_i64(conjugate, x).abs2());
                prop_assert!(a.lo <= b.hi && b.lo <= a.hi, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn cokernel_size_is_multiplicative(k in 0u8..4, s in prop::collection::vec(-9i64..=9, 3), t in prop::collection::vec(-9i64..=9, 3)) {
        let ring = RingRegistry::new().resolve(curve_ring(k)).unwrap();
        let d = ring.degree();
        let (s, t) = (&s[..d], &t[..d]);
        prop_assume!(s.iter().any(|&c| c != 0) && t.iter().any(|&c| c != 0));
        let big = |v: &[i64]| v.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>();
        let (bs, bt) = (big(s), big(t));
        let st = ring.mul(&bs, &bt);
        prop_assert_eq!(ring.norm(&st), ring.norm(&bs) * ring.norm(&bt));
        let st: Vec<i64> = st.iter().map(|c| i64::try_from(c).unwrap()).collect();
        let sum = coker_log(&ring, s).unwrap() + coker_log(&ring, t).unwrap();
        prop_assert!((coker_log(&ring, &st).unwrap() - sum).abs() <= 1e-9 * (1.0 + sum));
        prop_assert!((coker_log_smith(&ring, &st).unwrap() - coker_log(&ring, &st).unwrap()).abs() <= 1e-9 * (1.0 + sum));
    }

    #[test]
    fn twisting_shifts_the_degree(k in 0u8..4, w in prop::collection::vec(-1.0f64..1.0, 3), lambda in -2.0f64..2.0) {
        let ring = RingRegistry::new().resolve(curve_ring(k)).unwrap();
        let d = ring.degree();
        let mut weights: Vec<LogWeight> = w[..d].iter().map(|&x| LogWeight::real(x)).collect();
        for i in 0..d {
            if let EmbeddingKind::Complex { conjugate } = ring.kinds()[i] {
                if conjugate < i {
                    weights[i] = weights[conjugate].clone();
                }
            }
        }
        let l = NormedInvertibleModule::new(ring, weights).unwrap();
        let twisted = l.twist(&LogWeight::real(lambda));
        prop_assert!((adeg(&twisted) - adeg(&l) - lambda * d as f64).abs() <= 1e-12 * (1.0 + lambda.abs() * d as f64));
        let x: Vec<i64> = (0..d as i64).map(|i| i + 1).collect();
        let ratio = sup_norm(&twisted, &x).unwrap().mid() / sup_norm(&l, &x).unwrap().mid();
        prop_assert!((ratio - (-lambda).exp()).abs() <= 1e-9);
    }
}

fn form(coeffs: &[i64], m: usize) -> Option<BinaryForm> {
    let c = coeffs[..=m].to_vec();
    c.iter().any(|&x| x != 0).then(|| BinaryForm::new(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pointwise_norm_is_scale_invariant(
        m in 0usize..=6,
        coeffs in prop::collection::vec(-3i64..=3, 7),
        z in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
        alpha in (0.1f64..3.0, 0.0f64..std::f64::consts::TAU),
    ) {
        let Some(s) = form(&coeffs, m) else { return Ok(()) };
        let (z0, z1) = (Complex64::new(z.0, z.1), Complex64::new(z.2, z.3));
        prop_assume!(z0.norm() + z1.norm() > 1e-3);
        let a = Complex64::from_polar(alpha.0, alpha.1);
        let base = p1_pointwise_norm(&s, z0, z1).unwrap();
        let moved = p1_pointwise_norm(&s, a * z0, a * z1).unwrap();
        prop_assert!((base - moved).abs() <= 1e-10 * (1.0 + base));
    }

    #[test]
    fn sup_dominates_l2_and_reversal_preserves_both(m in 0usize..=6, coeffs in prop::collection::vec(-3i64..=3, 7)) {
        let Some(s) = form(&coeffs, m) else { return Ok(()) };
        let ctx = FSNormContext::new(m);
        let sup = p1_sup_norm(&s, &ctx).unwrap();
        let l2 = p1_l2_norm(&s);
        prop_assert!(sup.upper >= l2 * (1.0 - 1e-9));
        let r = s.reversed();
        prop_assert!((p1_l2_norm(&r) - l2).abs() <= 1e-12 * (1.0 + l2));
        let rs = p1_sup_norm(&r, &ctx).unwrap();
        prop_assert!((rs.value - sup.value).abs() <= 1e-8 * (1.0 + sup.value), "{} vs {}", rs.value, sup.value);
    }
}

#[test]
fn torsion_only_modules_have_zero_rank_invariants() {
    let m = NormedZModule::new(0, TorsionData::new(vec![2, 6]).unwrap(), NormSpec::euclidean(0)).unwrap();
    let opts = EnumOptions::default();
    assert!((h0_with(&m, &opts).unwrap() - 12f64.ln()).abs() < 1e-12);
    assert!((chi(&m).unwrap().value - 12f64.ln()).abs() < 1e-12);
}

#[test]
fn sampled_volumes_cover_exact_values() {
    use arakelov_core::volume::{monte_carlo_volume, VolumeOptions};
    let cases = [
        (NormSpec::MaxAbs { functionals: QMatrix::from_i64(&[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap() }, 3.0),
        (NormSpec::Hull { points: QMatrix::from_i64(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap() }, 4.0 / 3.0),
    ];
    for (norm, exact) in cases {
        let covered = (0..100u64)
            .filter(|&seed| {
                let opts = VolumeOptions { seed, max_samples: 4000, target_rel: 1e-6, allow_partial: true, ..VolumeOptions::default() };
                let v = monte_carlo_volume(&norm, &opts).unwrap();
                (v.value - exact).abs() <= v.half_width
            })
            .count();
        assert!(covered >= 90, "{covered}/100");
    }
}
