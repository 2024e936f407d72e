mod common;

use common::{bits, MindOracle};
use proptest::prelude::*;
use recruiter_core::affect::Polarity;
use recruiter_core::scenario::{Scenario, TopicId, TopicSet};
use recruiter_core::tom::{
    desire_delta, select_goal, update_beliefs, update_desires, BeliefStore, DesireScope,
    DesireStore, MindModel, TopicValues,
};

const TOPICS: usize = 5;

fn topic_set() -> TopicSet {
    TopicSet::new((0..TOPICS).map(|i| format!("t{i}"))).unwrap()
}

fn polarity() -> impl Strategy<Value = Polarity> {
    prop_oneof![Just(Polarity::Positive), Just(Polarity::Negative)]
}

fn topic_subset() -> impl Strategy<Value = Vec<TopicId>> {
    prop::sample::subsequence((0..TOPICS).collect::<Vec<_>>(), 0..=TOPICS)
        .prop_map(|v| v.into_iter().map(TopicId).collect())
}

fn values(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..=hi, TOPICS)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn belief_change_follows_the_sign_of_performance(
        start in values(-0.99, 0.99),
        topics in topic_subset(),
        p_d in -1.0..=1.0f64,
        alpha in 0.001..=1.0f64,
    ) {
        let mut b = BeliefStore(TopicValues::from_vec(start.clone()));
        update_beliefs(&mut b, &topics, p_d, alpha).unwrap();
        for &t in &topics {
            let delta = b.get(t).unwrap() - start[t.0];
            if p_d > 0.0 {
                prop_assert!(delta >= 0.0);
            } else if p_d < 0.0 {
                prop_assert!(delta <= 0.0);
            } else {
                prop_assert_eq!(delta, 0.0);
            }
            // Strict unless the clamp was reached.
            let clamped = b.get(t).unwrap().abs() == 1.0;
            if p_d != 0.0 && !clamped && alpha * p_d.abs() > 1e-12 {
                prop_assert_eq!(delta.signum(), p_d.signum());
            }
        }
    }

    #[test]
    fn the_two_desire_branches_are_mirror_images(p_d in -1.0..=1.0f64, alpha in 0.0..=1.0f64) {
        prop_assert_eq!(
            desire_delta(Polarity::Positive, p_d, alpha),
            -desire_delta(Polarity::Negative, p_d, alpha)
        );
    }

    #[test]
    fn updates_leave_other_topics_untouched(
        start_b in values(-1.0, 1.0),
        start_d in values(0.0, 1.0),
        topics in topic_subset(),
        pol in polarity(),
        p_d in -1.0..=1.0f64,
        alpha in 0.0..=1.0f64,
    ) {
        let mut b = BeliefStore(TopicValues::from_vec(start_b.clone()));
        let mut d = DesireStore(TopicValues::from_vec(start_d.clone()));
        update_beliefs(&mut b, &topics, p_d, alpha).unwrap();
        update_desires(&mut d, pol, &topics, p_d, alpha).unwrap();
        for i in (0..TOPICS).filter(|i| !topics.contains(&TopicId(*i))) {
            prop_assert_eq!(b.get(TopicId(i)).unwrap().to_bits(), start_b[i].to_bits());
            prop_assert_eq!(d.get(TopicId(i)).unwrap().to_bits(), start_d[i].to_bits());
        }
        for t in &topics {
            prop_assert!((-1.0..=1.0).contains(&b.get(*t).unwrap()));
            prop_assert!((0.0..=1.0).contains(&d.get(*t).unwrap()));
        }
    }

    #[test]
    fn goal_choice_ignores_desire_scale(desires in values(0.0, 1.0), k in 0.01..100.0f64) {
        let scenario = branching_scenario();
        let feasible: Vec<_> = scenario.feasible_next("root").unwrap();
        let d = DesireStore(TopicValues::from_vec(desires));
        let a = select_goal(&d, &feasible).map(|n| n.id.clone());
        let b = select_goal(&d.scaled(k), &feasible).map(|n| n.id.clone());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mind_model_matches_the_oracle(
        script in prop::collection::vec((topic_subset(), any::<bool>(), -1.0..=1.0f64), 50),
        alpha in 0.0..=1.0f64,
        all_topics in any::<bool>(),
    ) {
        let scope = if all_topics { DesireScope::AllTopics } else { DesireScope::CurrentTopics };
        let mut model = MindModel::new(&topic_set(), scope);
        let mut oracle = MindOracle::new(TOPICS);
        for (topics, negative, p_d) in script {
            let pol = if negative { Polarity::Negative } else { Polarity::Positive };
            model.update(&topics, pol, p_d, alpha).unwrap();
            let idx: Vec<usize> = topics.iter().map(|t| t.0).collect();
            oracle.turn(&idx, negative, p_d, alpha, all_topics);
            prop_assert_eq!(bits(model.beliefs.0.as_slice()), bits(&oracle.beliefs));
            prop_assert_eq!(bits(model.desires.0.as_slice()), bits(&oracle.desires));
        }
    }
}

/// A root question followed by one question per topic.
fn branching_scenario() -> Scenario {
    let topics: Vec<String> = (0..TOPICS).map(|i| format!("\"t{i}\"")).collect();
    let leaves: Vec<String> = (0..TOPICS)
        .map(|i| {
            format!(r#"{{"id": "q{i}", "text": "Q{i}", "topics": ["t{i}"], "difficulty": 0.5, "stage": "core", "next": []}}"#)
        })
        .collect();
    let next: Vec<String> = (0..TOPICS).map(|i| format!("\"q{i}\"")).collect();
    Scenario::parse(&format!(
        r#"{{"topics": [{}], "entry": "root", "nodes": [
            {{"id": "root", "text": "Hello", "topics": [], "difficulty": 0.1, "stage": "opening", "next": [{}]}},
            {}]}}"#,
        topics.join(","),
        next.join(","),
        leaves.join(",\n")
    ))
    .unwrap()
}

#[test]
fn ties_go_to_the_first_declared_question() {
    let scenario = branching_scenario();
    let feasible = scenario.feasible_next("root").unwrap();
    let d = DesireStore::new(&topic_set());
    assert_eq!(select_goal(&d, &feasible).unwrap().id, "q0");
    let d = DesireStore(TopicValues::from_vec(vec![0.1, 0.4, 0.9, 0.9, 0.2]));
    assert_eq!(select_goal(&d, &feasible).unwrap().id, "q2");
    assert!(select_goal(&d, &[]).is_none());
}

#[test]
fn unknown_topics_are_rejected_without_side_effects() {
    let mut b = BeliefStore::new(&topic_set());
    let before = b.clone();
    assert!(update_beliefs(&mut b, &[TopicId(0), TopicId(TOPICS)], 0.5, 0.5).is_err());
    assert_eq!(b, before);
}
