//! End-to-end runs through the public API: profile, social utility, social
//! belief, evaluation, projection and policy choice.

mod common;

use std::collections::BTreeMap;

use common::*;
use rand::Rng;
use robagg_core::aggregation::{optimal_policy_weighted, ActFamily};
use robagg_core::applications::{treatment_foc_root, treatment_solve, BASELINE_WELFARE};
use robagg_core::{
    entropic_minimizer, intersection_contains, kl_project_to_intersection, meu_value, multiplier_value,
    social_belief_for_act, social_utility, worst_case_belief, worst_case_tilt, Agent, Dist, Lambda, Planner, Profile,
    StateVector, StructuredSet,
};

fn d(v: &[f64]) -> Dist {
    Dist::new(v.to_vec()).unwrap()
}

fn profile() -> Profile {
    let u = |pairs: [(&str, f64); 3]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>();
    let agents = vec![
        Agent::new("hawk", u([("loss", 0.0), ("flat", 1.0), ("gain", 2.0)]), d(&[0.5, 0.3, 0.2]), 0.1).unwrap(),
        Agent::new("owl", u([("loss", 0.0), ("flat", 0.5), ("gain", 3.0)]), d(&[0.3, 0.4, 0.3]), 0.1).unwrap(),
        Agent::new("dove", u([("loss", 0.0), ("flat", 1.5), ("gain", 2.0)]), d(&[0.2, 0.3, 0.5]), 0.1).unwrap(),
    ];
    let act = |v: [&str; 3]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let acts = BTreeMap::from([
        ("stocks".to_string(), act(["loss", "flat", "gain"])),
        ("hedge".to_string(), act(["gain", "flat", "loss"])),
        ("split".to_string(), act(["flat", "gain", "flat"])),
    ]);
    Profile::new(agents, acts, vec![0.4, 0.3, 0.3], 0.0).unwrap()
}

#[test]
fn social_belief_attains_the_planner_value() {
    let p = profile();
    let planner = Planner::entropic(Lambda::Finite(0.8), StructuredSet::BallIntersection(p.balls())).unwrap();
    for act in p.acts().keys() {
        let u0 = social_utility(&p, act).unwrap();
        let levels = p.act_levels(act).unwrap();
        let social = social_belief_for_act(&u0, &levels, &p.balls(), p.beta(), 0.8).unwrap();
        let (value, structured) = entropic_minimizer(&u0, &planner).unwrap();
        assert!(intersection_contains(&p.balls(), &social.belief).unwrap());
        assert!((multiplier_value(&u0, &social.belief, 0.8).unwrap() - value).abs() < 1e-8, "{act}");
        assert!(social.belief.sup_distance(&structured) < 1e-6, "{act}");
        assert!(social.reconstruction_residual < 1e-8, "{act}: {}", social.reconstruction_residual);
        let worst = worst_case_belief(&u0, &planner).unwrap();
        assert!(worst.sup_distance(&worst_case_tilt(&u0, &social.belief, 0.8).unwrap()) < 1e-6);
    }
}

#[test]
fn structured_set_evaluation_is_bracketed_by_the_generators() {
    let p = profile();
    let mut rng = rng(21);
    for _ in 0..20 {
        let u0 = random_utility(&mut rng, 3, 2.0);
        let lambda = rng.random_range(0.2..5.0);
        let finite = Planner::entropic(Lambda::Finite(lambda), StructuredSet::FiniteSet(p.references())).unwrap();
        let balls = Planner::entropic(Lambda::Finite(lambda), StructuredSet::BallIntersection(p.balls())).unwrap();
        let (v_finite, _) = entropic_minimizer(&u0, &finite).unwrap();
        let (v_balls, q) = entropic_minimizer(&u0, &balls).unwrap();
        let best_generator =
            p.references().iter().map(|r| multiplier_value(&u0, r, lambda).unwrap()).fold(f64::INFINITY, f64::min);
        assert!((v_finite - best_generator).abs() < 1e-12);
        assert!(v_balls <= multiplier_value(&u0, &q, lambda).unwrap() + 1e-9);
        assert!(v_balls >= u0.min() - 1e-12 && v_balls <= u0.max() + 1e-12);
        let meu = meu_value(&u0, balls.structured()).unwrap();
        assert!(v_balls <= meu + 1e-8, "penalised value {v_balls} above maxmin {meu}");
    }
}

#[test]
fn truth_projection_respects_every_ball() {
    let p = profile();
    let mut rng = rng(22);
    let truths: Vec<Dist> = (0..20).map(|_| random_dist(&mut rng, 3, 0.02)).collect();
    let projections: Vec<Dist> =
        truths.iter().map(|t| kl_project_to_intersection(t, &p.balls(), p.beta()).unwrap().projected).collect();
    for (p_star, projected) in truths.iter().zip(&projections) {
        assert!(intersection_contains(&p.balls(), projected).unwrap());
        let obj = kl(p_star.as_slice(), projected.as_slice());
        for other in &projections {
            let mid: Vec<f64> = other.iter().zip(projected.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
            assert!(kl(p_star.as_slice(), &mid) >= obj - 1e-10, "a feasible midpoint beats the projection");
        }
    }
}

#[test]
fn treatment_policy_through_the_general_solver() {
    let family = ActFamily {
        lo: 0.0,
        hi: 1.0,
        utilities: Box::new(|t| vec![BASELINE_WELFARE.utilities(t)]),
        derivatives: Some(Box::new(|_| {
            vec![StateVector::new(vec![
                BASELINE_WELFARE.new[0] - BASELINE_WELFARE.known[0],
                BASELINE_WELFARE.new[1] - BASELINE_WELFARE.known[1],
            ])
            .unwrap()]
        })),
    };
    for (lambda, mu) in [(0.5, 0.2), (0.8, 0.25), (1.0, 0.2)] {
        let q0 = d(&[mu, 1.0 - mu]);
        let r = optimal_policy_weighted(&[1.0], 0.0, &family, &q0, Lambda::Finite(lambda)).unwrap();
        let direct = treatment_solve(&BASELINE_WELFARE, Lambda::Finite(lambda), mu).unwrap();
        assert!((r.t_opt - treatment_foc_root(lambda, mu)).abs() < 1e-6, "({lambda}, {mu}): {}", r.t_opt);
        assert!((r.t_opt - direct.beta_hat).abs() < 1e-6);
        assert!(r.interior && r.foc_residual.unwrap() < 1e-8);
    }
}
