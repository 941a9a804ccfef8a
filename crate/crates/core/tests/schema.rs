use lfic_core::quantum::behavior_from_realization;
use lfic_core::schema::{self, Document};
use lfic_core::{presets, Behavior, Error, Scenario};

#[test]
fn documents_round_trip() {
    let exact = presets::n0();
    let text = schema::serialize_behavior(&exact);
    assert_eq!(schema::deserialize_behavior(&text).unwrap(), exact);

    let float = behavior_from_realization(&presets::q1_realization());
    let back = schema::deserialize_behavior(&schema::serialize_behavior(&float)).unwrap();
    assert_eq!(back.to_f64_vec(), float.to_f64_vec());

    for f in [presets::z1(), presets::z2(), presets::facet_class(3).unwrap()] {
        assert_eq!(schema::deserialize_functional(&schema::serialize_functional(&f)).unwrap(), f);
    }
    let s = Scenario::main();
    assert_eq!(schema::deserialize_scenario(&schema::serialize_scenario(&s)).unwrap(), s);
    assert!(matches!(schema::from_str(&schema::serialize_scenario(&s)).unwrap(), Document::Scenario(_)));
}

#[test]
fn omitted_entries_are_zero() {
    let s = Scenario::new(1, 1, 1, 1, 1).unwrap();
    let text = r#"{"version":"lfic/1","kind":"behavior",
        "scenario":{"alice_inputs":1,"alice_outputs":1,"bob_inputs":1,"bob_outputs":1,"charlie_outputs":1},
        "backing":"exact","entries":[{"a":0,"b":0,"x":0,"y":0,"p":"1"}]}"#;
    assert_eq!(schema::deserialize_behavior(text).unwrap(), Behavior::uniform(s));
}

#[test]
fn malformed_json_reports_its_location() {
    let err = schema::from_str("{\n  \"version\": \"lfic/1\",\n  \"kind\" \"behavior\"\n}").unwrap_err();
    let Error::Parse { line, column, .. } = err else { panic!("{err}") };
    assert_eq!(line, 3);
    assert!(column > 0);
}

#[test]
fn schema_violations_are_rejected() {
    let good = schema::serialize_behavior(&presets::n0());
    let cases = [
        good.replace("lfic/1", "lfic/2"),
        good.replace("\"behavior\"", "\"tensor\""),
        good.replace("\"exact\"", "\"decimal\""),
        good.replacen("\"1/", "\"-1/", 1),
        good.replacen("\"a\": 0", "\"a\": 7", 1),
    ];
    for text in &cases {
        assert!(matches!(schema::deserialize_behavior(text), Err(Error::Schema(_))), "{text}");
    }
    let f = schema::serialize_functional(&presets::z1());
    assert!(matches!(schema::deserialize_behavior(&f), Err(Error::Schema(_))));
}
