use std::path::PathBuf;

use mgame::catalog::{game_file_json, load_game_file, parse_game_file, save_game_file, LoadedGame};
use mgame::error::Error;
use mgame::experiments::frpd::{candidate_pool, frpd_game};
use mgame::experiments::revelation::{candidates, revelation_game};
use mgame::experiments::roshambo::{constants, mixers, roshambo_game};
use mgame::game::ExactEvaluator;
use mgame::machine::Budgets;
use mgame::mediated::{expected_utility_mediated, InteractiveMachine};
use mgame::rational::{q, qi};

fn bundled() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("games/roshambo.game.json")
}

#[test]
fn bundled_roshambo_matches_the_programmatic_game() {
    let loaded = load_game_file(bundled()).unwrap();
    let LoadedGame::Plain { game, machines } = &loaded else { panic!("plain game expected") };
    let expected = roshambo_game(&qi(1), &qi(2), Budgets::default()).unwrap();
    assert_eq!(*game, expected);
    let mut pool = constants();
    pool.extend(mixers(3));
    assert_eq!(*machines, pool);
}

#[test]
fn bundled_file_is_canonical() {
    let text = std::fs::read_to_string(bundled()).unwrap();
    let loaded = parse_game_file(&text).unwrap();
    assert_eq!(game_file_json(&loaded).unwrap(), text);
}

#[test]
fn saved_files_reload_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("roshambo.game.json");
    let loaded = load_game_file(bundled()).unwrap();
    save_game_file(&loaded, &path).unwrap();
    let again = load_game_file(&path).unwrap();
    assert_eq!(again, loaded);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), std::fs::read_to_string(bundled()).unwrap());
}

#[test]
fn loaded_game_evaluates_like_the_original() {
    let LoadedGame::Plain { game, machines } = load_game_file(bundled()).unwrap() else { panic!() };
    let original = roshambo_game(&qi(1), &qi(2), Budgets::default()).unwrap();
    let (a, b) = (ExactEvaluator::new(&game), ExactEvaluator::new(&original));
    for x in machines.iter().step_by(7) {
        for y in machines.iter().step_by(5) {
            assert_eq!(a.expected_utility(&[x, y]).unwrap(), b.expected_utility(&[x, y]).unwrap());
        }
    }
}

#[test]
fn mediated_games_round_trip() {
    let game = frpd_game(3, &q(9, 10), &q(1, 4)).unwrap();
    let machines: Vec<InteractiveMachine> = candidate_pool(3, 1).into_iter().map(InteractiveMachine::Transducer).collect();
    let loaded = LoadedGame::Mediated { game, machines };
    let text = game_file_json(&loaded).unwrap();
    let back = parse_game_file(&text).unwrap();
    assert_eq!(game_file_json(&back).unwrap(), text);
    let (LoadedGame::Mediated { game: g1, machines: m1 }, LoadedGame::Mediated { game: g2, machines: m2 }) = (&loaded, &back)
    else {
        panic!("mediated")
    };
    assert_eq!(m1, m2);
    let (x, y) = (&m1[0], &m1[m1.len() - 1]);
    assert_eq!(expected_utility_mediated(g1, &[x, y]).unwrap(), expected_utility_mediated(g2, &[x, y]).unwrap());

    let loaded = LoadedGame::Mediated { game: revelation_game(4, 1).unwrap(), machines: candidates(4) };
    let back = parse_game_file(&game_file_json(&loaded).unwrap()).unwrap();
    assert_eq!(back.machine_ids(), loaded.machine_ids());
    assert_eq!(back.players(), 2);
}

fn error_path(text: &str) -> String {
    match parse_game_file(text) {
        Err(Error::Validation { path, .. }) => path,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn probabilities_must_sum_to_one() {
    let text = std::fs::read_to_string(bundled()).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["players"] = 1.into();
    doc["complexity"] = serde_json::json!(["0"]);
    doc["utility"] = serde_json::json!(["0"]);
    doc["types"] = serde_json::json!([
        {"types": ["0"], "nature": "", "prob": "1/3"},
        {"types": ["1"], "nature": "", "prob": "1/3"},
    ]);
    assert_eq!(error_path(&doc.to_string()), "types");
}

#[test]
fn errors_name_the_offending_field() {
    let text = std::fs::read_to_string(bundled()).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let edit = |f: &dyn Fn(&mut serde_json::Value)| {
        let mut d = doc.clone();
        f(&mut d);
        error_path(&d.to_string())
    };
    assert_eq!(edit(&|d| d["machines"][3]["kind"] = "abacus".into()), "machines[3].kind");
    assert_eq!(edit(&|d| d["machines"][1]["id"] = "const-0".into()), "machines[1].id");
    assert_eq!(edit(&|d| d["utility"][1] = "a1 ==".into()), "utility[1]");
    assert_eq!(edit(&|d| d["types"][0]["prob"] = "one".into()), "types[0].prob");
    assert_eq!(edit(&|d| d["stages"] = 3.into()), "stages");
    assert_eq!(edit(&|d| d["colour"] = "red".into()), "colour");
}

#[test]
fn catalog_ids_are_listed_in_order() {
    let loaded = load_game_file(bundled()).unwrap();
    let ids = loaded.machine_ids();
    assert_eq!(&ids[..3], ["const-0", "const-1", "const-2"]);
    assert_eq!(ids.len(), 45);
    let LoadedGame::Plain { machines, .. } = &loaded else { panic!() };
    assert!(machines.iter().zip(&ids).all(|(m, id)| m.id() == *id));
}
