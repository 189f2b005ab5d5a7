use gsce_core::corpus::{
    derive_ground_truth, execute_program, generate_corpus, oracle_program, Frame, ManeuverSpec, Plane,
};
use gsce_core::prompt::{compose, default_library, MethodConfig, PromptAssets};
use gsce_core::skillscript::strip_comments;
use proptest::prelude::*;

fn signed() -> impl Strategy<Value = i8> {
    prop_oneof![Just(1i8), Just(-1i8)]
}

fn maneuver() -> impl Strategy<Value = ManeuverSpec> {
    let meters = (-40i32..=40).prop_map(|v| f64::from(v) / 4.0);
    prop_oneof![
        (prop_oneof![Just(Frame::World), Just(Frame::Body)], meters.clone(), meters.clone(), meters)
            .prop_map(|(frame, dx, dy, dz)| ManeuverSpec::RelativeMove { frame, dx, dy, dz }),
        (-180.0f64..=180.0).prop_map(|degrees| ManeuverSpec::Turn { degrees }),
        (
            prop_oneof![Just(Plane::XY), Just(Plane::XZ), Just(Plane::YZ)],
            0.0f64..=90.0,
            0.1f64..20.0,
            signed(),
            signed()
        )
            .prop_map(|(plane, angle_deg, distance, primary_sign, secondary_sign)| {
                ManeuverSpec::PlaneAngleMove { plane, angle_deg, distance, primary_sign, secondary_sign }
            }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn oracle_execution_matches_closed_form(ms in proptest::collection::vec(maneuver(), 0..=6)) {
        let expected = derive_ground_truth(&ms);
        let log = execute_program(&oracle_program(&ms)).unwrap();
        prop_assert_eq!(log.len(), expected.len());
        for (a, e) in log.iter().zip(&expected) {
            for (p, q) in a.as_array().iter().zip(e.as_array()) {
                prop_assert!((p - q).abs() <= 1e-6, "{:?} vs {:?}", a, e);
            }
        }
    }

    #[test]
    fn body_frame_at_zero_yaw_is_world_frame(dx in -10.0f64..10.0, dy in -10.0f64..10.0, dz in -10.0f64..10.0) {
        prop_assert_eq!(
            derive_ground_truth(&[ManeuverSpec::body(dx, dy, dz)]),
            derive_ground_truth(&[ManeuverSpec::world(dx, dy, dz)])
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), a in 0usize..6, b in 0usize..6, c in 0usize..6) {
        let first = generate_corpus(seed, [a, b, c]).to_json();
        prop_assert_eq!(&first, &generate_corpus(seed, [a, b, c]).to_json());
    }

    #[test]
    fn compose_is_pure_and_keeps_the_query(
        constraints in any::<bool>(),
        examples in any::<bool>(),
        k in 0usize..=8,
        cot in any::<bool>(),
        constraint_impl in any::<bool>(),
        query in "[ -~]{0,80}",
    ) {
        let library = default_library();
        let assets = PromptAssets::default();
        let config = MethodConfig {
            include_constraints: constraints,
            include_examples: examples,
            k: if examples { k } else { 0 },
            cot,
            constraint_impl,
        };
        let a = compose(&config, &library, &assets, &query).unwrap();
        let b = compose(&config, &library, &assets, &query).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a.user_text, &query);

        let flipped = compose(&MethodConfig { cot: !cot, ..config }, &library, &assets, &query).unwrap();
        prop_assert_eq!(strip_comments(&a.system_text), strip_comments(&flipped.system_text));
    }
}
