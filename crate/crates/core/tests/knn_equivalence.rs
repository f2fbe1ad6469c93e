use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_wm::executive::{MentalAction, StateActionNet, ELABORATION};
use sparse_wm::knn_oracle::{
    check_equivalence, distance, distance_by_overlap, perturb, random_state, Exact, LabeledState, Oracle,
};
use sparse_wm::state::{ComponentState, InternalState};

fn template() -> InternalState {
    let comps = [("comparison", 20, 10, 5000), ("word", 12, 1, 1000), ("group", 24, 4, 1000), ("index", 8, 2, 2500)];
    InternalState {
        components: comps
            .iter()
            .map(|&(name, size, active, w)| ComponentState {
                name: name.into(),
                size,
                active: (0..active).collect(),
                w_max: w,
            })
            .collect(),
    }
}

fn trained(seed: u64, n: usize) -> (StateActionNet, Oracle) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = template();
    let mut net = StateActionNet::new(n);
    let mut train = Vec::new();
    for i in 0..n {
        let state = if i > 0 && rng.gen_bool(0.3) {
            let base: &LabeledState = &train[rng.gen_range(0..train.len())];
            perturb(&base.state, rng.gen_range(0..3), &mut rng)
        } else {
            random_state(&t, &mut rng)
        };
        let action = ELABORATION[rng.gen_range(0..ELABORATION.len())];
        net.train(&state, action).unwrap();
        train.push(LabeledState { state, action });
    }
    (net, Oracle::new(train).unwrap())
}

#[test]
fn single_pair_always_agrees() {
    let (net, oracle) = trained(1, 1);
    let r = check_equivalence(&net, &oracle, 50, 2, &[1]).unwrap();
    assert!(r.passed(), "{r}");
}

#[test]
fn twenty_networks_agree_for_every_k() {
    for seed in 0..20u64 {
        let n = 10 + (seed as usize * 37) % 191;
        let (net, oracle) = trained(seed, n);
        let r = check_equivalence(&net, &oracle, 1000, seed + 100, &[1, 3, 5, 10, 20]).unwrap();
        assert!(r.passed(), "net {seed} with {n} pairs:\n{r}");
        assert_eq!(r.checks, 5000);
    }
}

#[test]
fn input_signal_equals_norm_minus_distance() {
    let (net, oracle) = trained(7, 60);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u = oracle.norm();
    for _ in 0..200 {
        let q = random_state(&template(), &mut rng);
        let y = net.input_signals(&q).unwrap();
        for (i, l) in oracle.train().iter().enumerate() {
            let d = distance(&l.state, &q).unwrap();
            let expected = u * 2 - u - d;
            assert_eq!(Exact::new(y[i] as i128, 1000), expected);
        }
    }
}

#[test]
fn corrupted_weight_is_detected() {
    let t = template();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_state(&t, &mut rng);
    let b = perturb(&a, 1, &mut rng);
    let train = vec![
        LabeledState { state: a.clone(), action: MentalAction::GetW },
        LabeledState { state: b, action: MentalAction::Done },
    ];
    let mut net = StateActionNet::new(2);
    for l in &train {
        net.train(&l.state, l.action).unwrap();
    }
    let oracle = Oracle::new(train).unwrap();
    assert!(check_equivalence(&net, &oracle, 200, 4, &[1]).unwrap().passed());
    for &j in &a.components[0].active.clone()[..2] {
        net.corrupt(0, 0, j as u32);
    }
    let r = check_equivalence(&net, &oracle, 200, 4, &[1]).unwrap();
    assert!(!r.passed());
    assert!(r.first.is_some());
    assert!(r.to_string().contains("first divergence"));
}

proptest! {
    #[test]
    fn both_distance_forms_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(&template(), &mut rng);
        let b = random_state(&template(), &mut rng);
        prop_assert_eq!(distance(&a, &b).unwrap(), distance_by_overlap(&a, &b).unwrap());
        prop_assert_eq!(distance(&a, &b).unwrap(), distance(&b, &a).unwrap());
    }

    #[test]
    fn engine_matches_oracle_on_small_sets(seed in any::<u64>(), n in 1usize..30, k in 1usize..8) {
        let (net, oracle) = trained(seed, n);
        let r = check_equivalence(&net, &oracle, 20, seed ^ 1, &[k]).unwrap();
        prop_assert!(r.passed(), "{}", r);
    }
}
