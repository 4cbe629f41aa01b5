use std::sync::Arc;

use ncgx::crossed::{build_crossed, Representation};
use ncgx::groups::{self, classify_weight, GroupModel, Weight};
use ncgx::hochschild::*;
use ncgx::opalg::{relation_residual, tensor_all, ComplexOperator, Tolerance, C64, ONE};
use ncgx::report::{CheckRecord, Report};
use ncgx::triples::{group_triple, ko_dimensions, Sign, SpectralTripleData, Unitaries, KO_TABLE};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn group(kind: u8) -> GroupModel {
    match kind % 5 {
        0 => GroupModel::cyclic(2).unwrap(),
        1 => GroupModel::cyclic(3).unwrap(),
        2 => GroupModel::cyclic(4).unwrap(),
        3 => GroupModel::symmetric3(),
        _ => GroupModel::windowed_z(3).unwrap(),
    }
}

fn diag(n: usize) -> Arc<BasedAlgebra> {
    let basis = (0..n)
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            ComplexOperator::real_diagonal(&v).unwrap()
        })
        .collect();
    BasedAlgebra::from_basis(basis, (0..n).map(|i| format!("p{i}")).collect(), 1e-10).unwrap()
}

fn m2() -> Arc<BasedAlgebra> {
    let unit = |i, j| ComplexOperator::from_triplets(2, [(i, j, ONE)], false).unwrap();
    BasedAlgebra::from_basis(
        vec![unit(0, 0), unit(0, 1), unit(1, 0), unit(1, 1)],
        ["e11", "e12", "e21", "e22"].map(String::from).to_vec(),
        1e-10,
    )
    .unwrap()
}

fn algebra(kind: u8) -> Arc<BasedAlgebra> {
    match kind % 4 {
        0 => m2(),
        1 => diag(3),
        2 => BasedAlgebra::group_algebra(&GroupModel::symmetric3()),
        _ => BasedAlgebra::group_algebra(&GroupModel::cyclic(4).unwrap()),
    }
}

/// Functions on a finite group, acted on by left translation.
fn translation_action(g: &GroupModel) -> (Arc<BasedAlgebra>, AlgebraAction) {
    let a = diag(g.order());
    let u = Unitaries::new(g, (0..g.order()).map(|h| groups::left_translation(g, h).unwrap()).collect()).unwrap();
    let action = AlgebraAction::from_unitaries(&a, &u, 1e-10).unwrap();
    (a, action)
}

fn module(op: bool) -> Module {
    if op {
        Module::OpPair
    } else {
        Module::Plain
    }
}

fn hermitian(n: usize, entries: &[(f64, f64)]) -> ComplexOperator {
    let mut rows = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut it = entries.iter().cycle();
    for i in 0..n {
        for j in i..n {
            let &(re, im) = it.next().unwrap();
            if i == j {
                rows[i][i] = C64::new(re, 0.0);
            } else {
                rows[i][j] = C64::new(re, im);
                rows[j][i] = C64::new(re, -im);
            }
        }
    }
    ComplexOperator::from_rows(&rows, false).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn boundary_squares_to_zero(kind in 0u8..4, op in any::<bool>(), degree in 0usize..5, seed in any::<u64>()) {
        let a = algebra(kind);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_chain(&a, module(op), degree, 5, 3, &mut rng).unwrap();
        prop_assert_eq!(boundary(&boundary(&c).unwrap()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn shuffle_raises_degree_by_one(kind in 0u8..4, degree in 0usize..4, seed in any::<u64>()) {
        let g = group(kind);
        let (a, action) = if g.is_finite() {
            translation_action(&g)
        } else {
            let a = diag(2);
            let action = AlgebraAction::trivial(&a, &g);
            (a, action)
        };
        let q = BasedAlgebra::group_algebra(&g);
        let crossed = BasedAlgebra::crossed(&a, action).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_chain(&a, Module::OpPair, degree, 3, 2, &mut rng).unwrap();
        let pool = g.ball(1);
        let d = random_balanced_delta(&q, &pool, 2, &mut rng).unwrap();
        let s = twisted_shuffle(&c, &d, &crossed).unwrap();
        prop_assert_eq!(s.degree(), degree + 1);
    }

    #[test]
    fn delta_g_is_a_cycle(kind in 0u8..5, pick in any::<usize>()) {
        let g = group(kind);
        let q = BasedAlgebra::group_algebra(&g);
        let x = pick % g.order();
        prop_assert_eq!(boundary(&delta_g(&q, x).unwrap()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn graded_leibniz_holds_on_invariant_chains(kind in 0u8..4, degree in 0usize..4, seed in any::<u64>()) {
        let g = group(kind);
        let (a, action) = translation_action(&g);
        let q = BasedAlgebra::group_algebra(&g);
        let crossed = BasedAlgebra::crossed(&a, action.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = reynolds(&random_chain(&a, Module::OpPair, degree, 4, 3, &mut rng).unwrap(), &action).unwrap();
        prop_assert!(invariance_defect(&c, &action, 1e-12).unwrap().1.is_none());
        let pool: Vec<usize> = (0..g.order()).collect();
        let d = random_balanced_delta(&q, &pool, 3, &mut rng).unwrap();
        prop_assert!(graded_leibniz_defect(&c, &d, &crossed).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn pi_d_is_linear(seed in any::<u64>(), re in -3i32..=3, im in -3i32..=3) {
        let a = m2();
        let d = hermitian(2, &[(1.0, 0.0), (0.5, -0.25), (-2.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c1 = random_chain(&a, Module::Plain, 2, 3, 2, &mut rng).unwrap();
        let c2 = random_chain(&a, Module::Plain, 2, 3, 2, &mut rng).unwrap();
        let s = C64::new(re as f64, im as f64);
        let mut ev = Evaluator::for_algebra(&a, None, &d, None);
        let lhs = ev.pi_d(&c1.scale(s).try_add(&c2).unwrap()).unwrap();
        let rhs = ev.pi_d(&c1).unwrap().scale(s).try_add(&ev.pi_d(&c2).unwrap()).unwrap();
        prop_assert!(relation_residual(&lhs, &rhs, None).unwrap() < 1e-10);
    }

    #[test]
    fn ko_dimensions_follow_the_table(e in 0u8..3, ep in 0u8..3, edp in 0u8..4) {
        let sign = |k: u8| match k { 0 => Sign::Plus, 1 => Sign::Minus, _ => Sign::Undetermined };
        let dprime = if edp == 3 { None } else { Some(sign(edp)) };
        let dims = ko_dimensions(sign(e), sign(ep), dprime);
        for &n in &dims {
            let (te, tep, tedp) = KO_TABLE[n as usize];
            prop_assert!(sign(e).value().is_none_or(|v| v == te));
            prop_assert!(sign(ep).value().is_none_or(|v| v == tep));
            prop_assert_eq!(dprime.is_some(), tedp.is_some());
        }
        // Determined signs that appear in the table give exactly one row.
        let determined = e < 2 && ep < 2 && edp != 2;
        let in_table = KO_TABLE.iter().any(|&(te, tep, tedp)| {
            sign(e).value() == Some(te) && sign(ep).value() == Some(tep) && dprime.map(|s| s.value().unwrap_or(0)) == tedp
        });
        if determined && in_table {
            prop_assert_eq!(dims.len(), 1);
        }
    }

    #[test]
    fn weight_flags_respect_the_implications(kind in 0u8..5, values in prop::collection::vec(-3i32..=3, 7), slope in -2i32..=2, offset in -2i32..=2) {
        let g = group(kind);
        let raw: Vec<f64> = (0..g.order()).map(|i| values[i % values.len()] as f64).collect();
        for w in [Weight::from_values(&g, raw).unwrap(), affine(&g, slope, offset)] {
            let c = classify_weight(&w).unwrap();
            if c.homomorphism.holds {
                prop_assert!(c.first_order.holds);
            }
            if c.first_order.holds {
                prop_assert!(c.dirac.holds);
            }
            if c.length_function.holds {
                prop_assert!(c.dirac.holds);
            }
        }
        if !g.is_finite() {
            prop_assert!(classify_weight(&affine(&g, slope, offset)).unwrap().first_order.holds);
        }
    }

    #[test]
    fn crossed_dirac_squares_to_a_sum(entries in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3), weights in prop::collection::vec(-3.0f64..3.0, 3)) {
        let g = GroupModel::cyclic(3).unwrap();
        let w = Weight::from_values(&g, weights).unwrap();
        let d = hermitian(2, &entries);
        let base = SpectralTripleData::new(d.clone(), vec![ComplexOperator::identity(2).unwrap()], Tolerance::default()).unwrap();
        let c = build_crossed(&base, &g, &w, Representation::Pi1Lambda).unwrap();
        let id2 = ComplexOperator::identity(2).unwrap();
        let id3 = ComplexOperator::identity(3).unwrap();
        let m = groups::multiplication(&w).unwrap();
        let want = tensor_all(&[&(&d * &d), &id3, &id2]).unwrap().try_add(&tensor_all(&[&id2, &(&m * &m), &id2]).unwrap()).unwrap();
        let got = c.dirac() * c.dirac();
        prop_assert!(relation_residual(&got, &want.with_space(c.space().clone()).unwrap(), None).unwrap() < 1e-10);
        let chi = c.grading().unwrap();
        let anti = (chi * c.dirac()).try_add(&(c.dirac() * chi)).unwrap();
        prop_assert_eq!(anti.max_abs(), 0.0);
    }

    #[test]
    fn exit_code_tracks_enforced_failures(flags in prop::collection::vec((any::<bool>(), any::<bool>()), 0..12)) {
        let mut r = Report::new("p", "all", 0);
        for (i, &(pass, report_only)) in flags.iter().enumerate() {
            let mut rec = CheckRecord::flag(format!("c{i}"), "anchor", pass);
            if report_only {
                rec = rec.report_only();
            }
            r.push(rec);
        }
        let enforced_failure = flags.iter().any(|&(pass, ro)| !pass && !ro);
        prop_assert_eq!(r.exit_code(), if enforced_failure { 1 } else { 0 });
        prop_assert_eq!(r.summary.total, flags.len());
        prop_assert_eq!(r.summary.passed + r.summary.failed + r.summary.report_only, flags.len());
    }

    #[test]
    fn group_triple_orders_pass_for_affine_weights(slope in -2i32..=2, offset in -2i32..=2) {
        let z = GroupModel::windowed_z(5).unwrap();
        let t = group_triple(&z, &affine(&z, slope, offset), Some(1), Tolerance::default()).unwrap();
        let window = t.interior(2).unwrap();
        for k in 0..=2u8 {
            prop_assert!(ncgx::triples::order_condition(&t, k, &window).unwrap().passed());
        }
    }
}

/// `l(k) = slope·k + offset` on a windowed group, `offset` alone on a finite one.
fn affine(g: &GroupModel, slope: i32, offset: i32) -> Weight {
    let v = (0..g.order()).map(|x| g.integer(x).map_or(0.0, |k| (slope as i64 * k) as f64) + offset as f64).collect();
    Weight::from_values(g, v).unwrap()
}

