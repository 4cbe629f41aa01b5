use std::sync::Arc;

use ncgx::crossed::{build_crossed, CrossedConfig, Representation};
use ncgx::groups::{Character, GroupModel, Weight};
use ncgx::hochschild::*;
use ncgx::opalg::{ComplexOperator, Tolerance, C64, ONE};
use ncgx::realcx::{assemble_real_structure, Variant};
use ncgx::triples::{group_triple, SpectralTripleData, Unitaries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

/// Cyclic shift on ℂ³ generating a ℤ₃ action by permuting the diagonal.
fn z3_shift() -> (GroupModel, Unitaries) {
    let z3 = GroupModel::cyclic(3).unwrap();
    let shift = |k: usize| ComplexOperator::partial_permutation(3, move |x| Some((x + k) % 3), false).unwrap();
    let u = Unitaries::new(&z3, (0..3).map(shift).collect()).unwrap();
    (z3, u)
}

/// Permutations of `0..n` with their inversion counts.
fn permutations(n: usize) -> Vec<(Vec<usize>, usize)> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out.into_iter()
        .map(|p| {
            let inv = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            (p, inv)
        })
        .collect()
}

/// Shuffle product of `c` (degree n) with a degree-one `δ` over `A⊗ℂG` by
/// enumerating all (n,1)-shuffles, with the sign of each permutation.
fn loday_shuffle(c: &HochschildChain, delta: &HochschildChain, crossed: &Arc<BasedAlgebra>) -> HochschildChain {
    let n = c.degree();
    let group = delta.algebra().group().unwrap();
    let e = group.identity();
    let mut out = HochschildChain::zero(crossed, Module::OpPair, n + 1);
    for (perm, inv) in permutations(n + 1) {
        // Slot k of the output holds input letter perm[k]; letters 0..n are the a's, n is δ_f.
        let a_pos: Vec<usize> = (0..=n).filter(|&k| perm[k] < n).collect();
        if a_pos.windows(2).any(|w| perm[w[0]] > perm[w[1]]) {
            continue;
        }
        let sign = if inv % 2 == 0 { ONE } else { -ONE };
        for (ck, &cc) in c.terms() {
            for (dk, &dc) in delta.terms() {
                let mut key = vec![crossed.join(ck[0], dk[0]).unwrap(), crossed.join(ck[1], dk[1]).unwrap()];
                for &letter in &perm {
                    if letter < n {
                        key.push(crossed.join(ck[2 + letter], e).unwrap());
                    } else {
                        // δ_f = 1·δ_f; the unit of a matrix-unit basis is e11 + e22.
                        key.push(usize::MAX);
                    }
                }
                let unit = c.algebra().unit();
                let slot = key.iter().position(|&k| k == usize::MAX).unwrap();
                for &(i, u) in &unit {
                    let mut k = key.clone();
                    k[slot] = crossed.join(i, dk[2]).unwrap();
                    out.add_term(k, cc * dc * u * sign).unwrap();
                }
            }
        }
    }
    out
}

#[test]
fn trivial_action_shuffle_matches_loday_up_to_sign() {
    let a = m2();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for group in [GroupModel::symmetric3(), GroupModel::cyclic(4).unwrap()] {
        let q = BasedAlgebra::group_algebra(&group);
        let crossed = BasedAlgebra::crossed(&a, AlgebraAction::trivial(&a, &group)).unwrap();
        for n in 0..=3 {
            let c = random_chain(&a, Module::OpPair, n, 4, 2, &mut rng).unwrap();
            let d = random_chain(&q, Module::OpPair, 1, 3, 2, &mut rng).unwrap();
            let twisted = twisted_shuffle(&c, &d, &crossed).unwrap();
            let sign = if n % 2 == 0 { ONE } else { -ONE };
            let oracle = loday_shuffle(&c, &d, &crossed).scale(sign);
            assert!(twisted.distance(&oracle).unwrap() < 1e-12, "n = {n}");
            assert!(!twisted.is_empty());
        }
    }
}

#[test]
fn graded_leibniz_rule_holds_for_invariant_chains() {
    let a = diag(3);
    let (z3, u) = z3_shift();
    let action = AlgebraAction::from_unitaries(&a, &u, 1e-10).unwrap();
    let q = BasedAlgebra::group_algebra(&z3);
    let crossed = BasedAlgebra::crossed(&a, action.clone()).unwrap();
    let pool: Vec<usize> = (0..3).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 0..=3 {
        let raw = random_chain(&a, Module::OpPair, n, 5, 3, &mut rng).unwrap();
        let c = reynolds(&raw, &action).unwrap();
        assert!(invariance_defect(&c, &action, 1e-12).unwrap().0 < 1e-12);
        let d = random_balanced_delta(&q, &pool, 3, &mut rng).unwrap();
        assert!(graded_leibniz_defect(&c, &d, &crossed).unwrap().max_abs() < 1e-12, "n = {n}");
    }
}

#[test]
fn graded_leibniz_rule_holds_for_any_delta_without_action() {
    let a = m2();
    let g = GroupModel::symmetric3();
    let q = BasedAlgebra::group_algebra(&g);
    let crossed = BasedAlgebra::crossed(&a, AlgebraAction::trivial(&a, &g)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 0..=3 {
        let c = random_chain(&a, Module::OpPair, n, 5, 3, &mut rng).unwrap();
        let d = random_chain(&q, Module::OpPair, 1, 4, 2, &mut rng).unwrap();
        assert!(graded_leibniz_defect(&c, &d, &crossed).unwrap().max_abs() < 1e-12, "n = {n}");
    }
}

// Regression witness: with the ungraded sign the rule breaks as soon as bc ≠ 0,
// even for the trivial action.
#[test]
fn ungraded_sign_fails_when_boundary_is_nonzero() {
    let a = m2();
    let g = GroupModel::cyclic(2).unwrap();
    let q = BasedAlgebra::group_algebra(&g);
    let crossed = BasedAlgebra::crossed(&a, AlgebraAction::trivial(&a, &g)).unwrap();
    let mut c = HochschildChain::zero(&a, Module::OpPair, 1);
    c.add_term(vec![1, 0, 2], ONE).unwrap();
    assert!(boundary(&c).unwrap().max_abs() > 0.5);
    let d = delta_g(&q, 1).unwrap();
    assert!(leibniz_defect(&c, &d, &crossed).unwrap().max_abs() > 0.5);
    assert_eq!(graded_leibniz_defect(&c, &d, &crossed).unwrap().max_abs(), 0.0);
}

#[test]
fn leibniz_rule_needs_invariance() {
    let a = diag(3);
    let (z3, u) = z3_shift();
    let action = AlgebraAction::from_unitaries(&a, &u, 1e-10).unwrap();
    let q = BasedAlgebra::group_algebra(&z3);
    let crossed = BasedAlgebra::crossed(&a, action.clone()).unwrap();
    let mut c = HochschildChain::zero(&a, Module::OpPair, 1);
    c.add_term(vec![0, 0, 1], ONE).unwrap();
    assert!(invariance_defect(&c, &action, 1e-12).unwrap().1.is_some());
    let d = delta_g(&q, 1).unwrap();
    assert!(graded_leibniz_defect(&c, &d, &crossed).unwrap().max_abs() > 0.5);
    assert!(leibniz_defect(&c, &d, &crossed).unwrap().max_abs() > 0.5);
}

fn torus_base(n: usize, theta: f64) -> (GroupModel, Weight, SpectralTripleData) {
    let z = GroupModel::windowed_z(n).unwrap();
    let w = Weight::inclusion(&z).unwrap();
    let base = group_triple(&z, &w, Some(1), Tolerance::default())
        .unwrap()
        .with_unitaries(Unitaries::rotation(&z, &z, theta).unwrap())
        .unwrap();
    (z, w, base)
}

/// `max_g` interior residual of `π_D(c_g) − Ad u_g ∘ π_D(α_{g^s}(c))` with `s = ±1`.
fn twist_residual(c: &HochschildChain, inverse: bool) -> f64 {
    let (z, _, base) = torus_base(8, 1.3);
    let alg = c.algebra().clone();
    let u = base.unitaries().unwrap().clone();
    let action = AlgebraAction::from_unitaries(&alg, &u, 1e-10).unwrap();
    let window = base.interior(5).unwrap();
    let mut ev = Evaluator::for_algebra(&alg, None, base.dirac(), base.real_structure());
    let mut worst = 0.0f64;
    for g in z.ball(2) {
        let h = if inverse { z.inverse(g) } else { g };
        let lhs = ev.pi_d(&twist_op_slot(c, g, &action).unwrap()).unwrap();
        let inner = ev.pi_d(&alpha_on_chain(c, h, &action).unwrap()).unwrap();
        let rhs = ev.rebase(&u.alpha(g, &inner)).unwrap();
        worst = worst.max(ncgx::opalg::relation_residual(&lhs, &rhs, Some(&ev.rebase(&window).unwrap())).unwrap());
    }
    worst
}

#[test]
fn op_slot_twist_is_conjugation_on_invariant_chains() {
    let z = GroupModel::windowed_z(8).unwrap();
    let alg = BasedAlgebra::group_algebra(&z);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = zero_charge_chain(&alg, Module::OpPair, 2, 6, 1, &mut rng).unwrap();
    assert!(twist_residual(&c, false) < 1e-10);
}

// Off invariant chains the twist matches conjugation of α_{g⁻¹}(c), not α_g(c).
#[test]
fn op_slot_twist_on_general_chains_uses_the_inverse() {
    let z = GroupModel::windowed_z(8).unwrap();
    let alg = BasedAlgebra::group_algebra(&z);
    let ball = z.ball(1);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = random_chain_from(&alg, Module::OpPair, 2, 6, 3, &mut rng, |r| ball[r.gen_range(0..ball.len())]).unwrap();
    assert!(twist_residual(&c, true) < 1e-10);
    assert!(twist_residual(&c, false) > 1e-3);
}

#[test]
fn torus_orientation_cycle_lifts() {
    let (z, w, base) = torus_base(12, 2.0 * std::f64::consts::PI * 0.3);
    let cfg = CrossedConfig::default();
    let ct = build_crossed(&base, &z, &w, Representation::Pi2Gamma).unwrap();
    let real = assemble_real_structure(&ct, Variant::Hat, cfg).unwrap();
    let alg = BasedAlgebra::group_algebra(&z);
    let action = AlgebraAction::from_unitaries(&alg, base.unitaries().unwrap(), 1e-10).unwrap();
    let crossed = BasedAlgebra::crossed(&alg, action).unwrap();
    let q = BasedAlgebra::group_algebra(&z);

    let at = |k: i64| z.from_integer(k).unwrap();
    let mut c = HochschildChain::zero(&alg, Module::Plain, 1);
    c.add_term(vec![at(-1), at(1)], ONE).unwrap();

    let id = ComplexOperator::identity(base.dim()).unwrap();
    let window = base.interior(cfg.margin).unwrap();
    let mut base_ev = Evaluator::for_algebra(&alg, None, base.dirac(), base.real_structure());
    let bo = BaseOrientation { evaluator: &mut base_ev, chi: &id, even: false, window: &window, tolerance: 1e-9 };
    let chat = build_orientation(&c, &crossed, &q, &w, at(1), bo).unwrap();
    assert_eq!(chat.degree(), 2);

    let rc = real.crossed();
    let mut ev = Evaluator::for_algebra(&crossed, Some(rc), rc.dirac(), Some(real.j_out()));
    let chars = [Character::windowed_phase(&z, 0.7).unwrap()];
    let recs = check_orientation(&chat, &mut ev, rc.grading().unwrap(), &rc.interior(cfg.margin).unwrap(), &chars, 1e-8).unwrap();
    for r in &recs {
        assert!(r.pass, "{r:?}");
    }
    assert!(recs.iter().any(|r| r.id == "orientation.strong" && r.pass));
}

#[test]
fn orientation_rejects_bad_inputs() {
    let (z, w, base) = torus_base(6, 0.4);
    let alg = BasedAlgebra::group_algebra(&z);
    let action = AlgebraAction::from_unitaries(&alg, base.unitaries().unwrap(), 1e-10).unwrap();
    let crossed = BasedAlgebra::crossed(&alg, action).unwrap();
    let q = BasedAlgebra::group_algebra(&z);
    let at = |k: i64| z.from_integer(k).unwrap();
    let id = ComplexOperator::identity(base.dim()).unwrap();
    let window = base.interior(3).unwrap();
    let mut ev = Evaluator::for_algebra(&alg, None, base.dirac(), base.real_structure());

    let mut good = HochschildChain::zero(&alg, Module::Plain, 1);
    good.add_term(vec![at(-1), at(1)], ONE).unwrap();
    let mut run = |c: &HochschildChain, g: usize| {
        let bo = BaseOrientation { evaluator: &mut ev, chi: &id, even: false, window: &window, tolerance: 1e-9 };
        build_orientation(c, &crossed, &q, &w, g, bo)
    };
    assert!(matches!(run(&good, at(0)), Err(ncgx::Error::ZeroWeightElement(_))));

    let mut moved = HochschildChain::zero(&alg, Module::Plain, 1);
    moved.add_term(vec![at(0), at(1)], ONE).unwrap();
    assert!(matches!(run(&moved, at(1)), Err(ncgx::Error::NotGInvariant { .. })));

    let mut wrong = HochschildChain::zero(&alg, Module::Plain, 1);
    wrong.add_term(vec![at(-1), at(1)], C64::new(2.0, 0.0)).unwrap();
    assert!(matches!(run(&wrong, at(1)), Err(ncgx::Error::NotOrientation(_))));
}

#[test]
fn even_base_orientation_lifts_to_identity() {
    let p0 = ComplexOperator::real_diagonal(&[1.0, 0.0]).unwrap();
    let p1 = ComplexOperator::real_diagonal(&[0.0, 1.0]).unwrap();
    let base = SpectralTripleData::new(ComplexOperator::sigma1(), vec![p0.clone(), p1.clone()], Tolerance::default())
        .unwrap()
        .with_grading(ComplexOperator::sigma3())
        .unwrap()
        .with_real_structure(ComplexOperator::conjugation(2).unwrap())
        .unwrap();
    let z = GroupModel::windowed_z(4).unwrap();
    let w = Weight::inclusion(&z).unwrap();
    let base = base.with_unitaries(Unitaries::trivial(&z, 2).unwrap()).unwrap();
    let cfg = CrossedConfig { g_max: 1, margin: 2 };
    let ct = build_crossed(&base, &z, &w, Representation::Pi2Gamma).unwrap();
    let real = assemble_real_structure(&ct, Variant::Hat, cfg).unwrap();

    let alg = BasedAlgebra::from_basis(vec![p0, p1], vec!["p0".into(), "p1".into()], 1e-10).unwrap();
    let action = AlgebraAction::trivial(&alg, &z);
    let crossed = BasedAlgebra::crossed(&alg, action).unwrap();
    let q = BasedAlgebra::group_algebra(&z);
    let mut c = HochschildChain::zero(&alg, Module::Plain, 0);
    c.add_term(vec![0], ONE).unwrap();
    c.add_term(vec![1], -ONE).unwrap();

    let window = ComplexOperator::identity(2).unwrap();
    let mut base_ev = Evaluator::for_algebra(&alg, None, base.dirac(), base.real_structure());
    for k in [1i64, -1, 2] {
        let g = z.from_integer(k).unwrap();
        let bo = BaseOrientation { evaluator: &mut base_ev, chi: base.grading().unwrap(), even: true, window: &window, tolerance: 1e-9 };
        let chat = build_orientation(&c, &crossed, &q, &w, g, bo).unwrap();
        let rc = real.crossed();
        let mut ev = Evaluator::for_algebra(&crossed, Some(rc), rc.dirac(), Some(real.j_out()));
        let id = ComplexOperator::identity(rc.dim()).unwrap();
        for r in check_orientation(&chat, &mut ev, &id, &rc.interior(cfg.margin).unwrap(), &[], 1e-9).unwrap() {
            assert!(r.pass, "k = {k}: {r:?}");
        }
    }
}

#[test]
fn zero_charge_chains_are_coaction_invariant_after_lifting() {
    let z = GroupModel::windowed_z(6).unwrap();
    let q = BasedAlgebra::group_algebra(&z);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = zero_charge_chain(&q, Module::OpPair, 2, 6, 2, &mut rng).unwrap();
    for (k, _) in c.terms() {
        let s: i64 = [k[0], k[2], k[3]].iter().map(|&i| z.integer(i).unwrap()).sum();
        assert_eq!(s, 0);
    }
}
