//! Game files: a JSON document holding a game definition and a catalog of
//! machines.
//!
//! ```json
//! {
//!   "players": 2,
//!   "types": [{"types": ["", ""], "prob": "1"}],
//!   "machines": [{"kind": "declared", "id": "const-0", ...}],
//!   "complexity": ["if randomized then 2 else 1", "..."],
//!   "utility": ["...", "..."],
//!   "budgets": {"steps": 10000, "coins": 64},
//!   "utilityRange": ["-3", "1"],
//!   "mediator": {"kind": "relay"},
//!   "stages": 10,
//!   "stream": {"delta": "9/10", "payoffs": ["...", "..."]}
//! }
//! ```
//!
//! `budgets` and `utilityRange` are optional. A file with a `mediator` is a
//! mediated game, and its machines are interactive machines. Rationals are
//! always strings.

use std::collections::BTreeSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::equilibrium::Identified;
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Scope};
use crate::game::{validate_prior, GameDef, TypeProfile};
use crate::machine::{Budgets, Machine};
use crate::mediated::{InteractiveMachine, MediatedGameDef, Mediator};
use crate::rational::{serde_q, Q};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Range(#[serde(with = "serde_q")] Q, #[serde(with = "serde_q")] Q);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StreamFile {
    #[serde(with = "serde_q")]
    delta: Q,
    payoffs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct GameFile {
    players: usize,
    types: Vec<TypeProfile>,
    machines: Vec<Value>,
    complexity: Vec<String>,
    utility: Vec<String>,
    #[serde(default)]
    budgets: Budgets,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utility_range: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mediator: Option<Mediator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stages: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stream: Option<StreamFile>,
}

/// A loaded definition with its machine catalog.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadedGame {
    Plain { game: GameDef, machines: Vec<Machine> },
    Mediated { game: MediatedGameDef, machines: Vec<InteractiveMachine> },
}

impl LoadedGame {
    pub fn players(&self) -> usize {
        match self {
            LoadedGame::Plain { game, .. } => game.players,
            LoadedGame::Mediated { game, .. } => game.game.players,
        }
    }

    pub fn machine_ids(&self) -> Vec<&str> {
        match self {
            LoadedGame::Plain { machines, .. } => machines.iter().map(|m| m.id()).collect(),
            LoadedGame::Mediated { machines, .. } => machines.iter().map(|m| m.id()).collect(),
        }
    }

    fn base(&self) -> &GameDef {
        match self {
            LoadedGame::Plain { game, .. } => game,
            LoadedGame::Mediated { game, .. } => &game.game,
        }
    }
}

fn from_value<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, _) => inner.clone(),
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        Error::validation(path, e.into_inner().to_string())
    })
}

fn parse_all(texts: &[String], scope: Scope, field: &str) -> Result<()> {
    for (i, t) in texts.iter().enumerate() {
        parse_expression(t, scope).map_err(|e| Error::validation(format!("{field}[{i}]"), e.to_string()))?;
    }
    Ok(())
}

fn catalog<T: DeserializeOwned>(values: Vec<Value>, id: impl Fn(&T) -> &str) -> Result<Vec<T>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(values.len());
    for (i, v) in values.into_iter().enumerate() {
        let m: T = from_value(v, &format!("machines[{i}]"))?;
        if !seen.insert(id(&m).to_string()) {
            return Err(Error::validation(format!("machines[{i}].id"), format!("duplicate id `{}`", id(&m))));
        }
        out.push(m);
    }
    Ok(out)
}

/// Parses and validates a game file. Errors name the offending JSON path.
pub fn parse_game_file(text: &str) -> Result<LoadedGame> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::validation(".", e.to_string()))?;
    let file: GameFile = from_value(value, "")?;
    let n = file.players;
    if n == 0 {
        return Err(Error::validation("players", "need at least one player"));
    }
    for (field, len) in [("complexity", file.complexity.len()), ("utility", file.utility.len())] {
        if len != n {
            return Err(Error::validation(field, format!("{len} expressions for {n} players")));
        }
    }
    validate_prior(n, &file.types)?;
    let mediated = file.mediator.is_some();
    if !mediated && (file.stages.is_some() || file.stream.is_some()) {
        return Err(Error::validation("stages", "stages and stream need a mediator"));
    }
    parse_all(&file.complexity, Scope::Complexity, "complexity")?;
    let scope = Scope::Utility { players: n, mediated };
    parse_all(&file.utility, scope, "utility")?;
    if let Some(s) = &file.stream {
        parse_all(&s.payoffs, scope, "stream.payoffs")?;
    }
    let complexity: Vec<&str> = file.complexity.iter().map(String::as_str).collect();
    let utility: Vec<&str> = file.utility.iter().map(String::as_str).collect();
    let range = |g: GameDef| match &file.utility_range {
        Some(Range(lo, hi)) => g.with_utility_range(lo.clone(), hi.clone()),
        None => g,
    };
    if let Some(mediator) = file.mediator.clone() {
        let stages = file.stages.unwrap_or(1);
        let mut game = MediatedGameDef::new(n, file.types.clone(), &complexity, &utility, file.budgets, mediator, stages)
            .map_err(|e| Error::validation("stages", e.to_string()))?;
        if let Some(s) = &file.stream {
            let payoffs: Vec<&str> = s.payoffs.iter().map(String::as_str).collect();
            game = game
                .with_stream(s.delta.clone(), &payoffs)
                .map_err(|e| Error::validation("stream", e.to_string()))?;
        }
        game.game = range(game.game);
        let machines = catalog(file.machines, |m: &InteractiveMachine| m.id())?;
        Ok(LoadedGame::Mediated { game, machines })
    } else {
        let game = range(GameDef::new(n, file.types.clone(), &complexity, &utility, file.budgets)?);
        let machines = catalog(file.machines, |m: &Machine| m.id())?;
        Ok(LoadedGame::Plain { game, machines })
    }
}

pub fn load_game_file(path: impl AsRef<Path>) -> Result<LoadedGame> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_game_file(&text)
}

fn to_values<T: Serialize>(items: &[T]) -> Result<Vec<Value>> {
    items.iter().map(|m| Ok(serde_json::to_value(m)?)).collect()
}

/// Canonical JSON: keys sorted, expressions printed fully parenthesized,
/// trailing newline. Saving what was loaded from a saved file reproduces it
/// byte for byte.
pub fn game_file_json(loaded: &LoadedGame) -> Result<String> {
    let g = loaded.base();
    let print = |es: &[crate::expr::Expr]| es.iter().map(|e| e.to_string()).collect::<Vec<_>>();
    let (machines, mediator, stages, stream) = match loaded {
        LoadedGame::Plain { machines, .. } => (to_values(machines)?, None, None, None),
        LoadedGame::Mediated { game, machines } => (
            to_values(machines)?,
            Some(game.mediator.clone()),
            Some(game.stages),
            game.stream.as_ref().map(|s| StreamFile {
                delta: s.delta.clone(),
                payoffs: print(&s.payoffs),
            }),
        ),
    };
    let file = GameFile {
        players: g.players,
        types: g.profiles.clone(),
        machines,
        complexity: print(&g.complexity),
        utility: print(&g.utility),
        budgets: g.budgets,
        utility_range: g.utility_range.clone().map(|(lo, hi)| Range(lo, hi)),
        mediator,
        stages,
        stream,
    };
    // serde_json's default map is ordered, so a round trip through Value sorts keys.
    let value = serde_json::to_value(&file)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

pub fn save_game_file(loaded: &LoadedGame, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, game_file_json(loaded)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ExactEvaluator;
    use crate::rational::q;

    const MINIMAL: &str = r#"{
        "players": 1,
        "types": [{"types": [""], "prob": "1"}],
        "machines": [{"kind": "declared", "id": "yes", "behavior": {"*": [["1", "1"]]}, "metrics": {"*": {"steps": 1, "states_used": 1, "randomized": false}}}],
        "complexity": ["0"],
        "utility": ["if a1 == \"1\" then 1 else 0"]
    }"#;

    fn expect_path(text: &str, path: &str) {
        match parse_game_file(text) {
            Err(Error::Validation { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected validation error at {path}, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_loads() {
        let loaded = parse_game_file(MINIMAL).unwrap();
        let LoadedGame::Plain { game, machines } = &loaded else { panic!("plain") };
        let u = ExactEvaluator::new(game).expected_utility(&[&machines[0]]).unwrap();
        assert_eq!(u, vec![q(1, 1)]);
    }

    #[test]
    fn thirds_that_do_not_sum_are_rejected() {
        let text = MINIMAL.replace(
            r#"[{"types": [""], "prob": "1"}]"#,
            r#"[{"types": ["0"], "prob": "1/3"}, {"types": ["1"], "prob": "1/3"}]"#,
        );
        expect_path(&text, "types");
    }

    #[test]
    fn errors_cite_paths() {
        expect_path(&MINIMAL.replace(r#""prob": "1""#, r#""prob": "x""#), "types[0].prob");
        expect_path(&MINIMAL.replace(r#"["0"]"#, r#"["steps +"]"#), "complexity[0]");
        expect_path(&MINIMAL.replace(r#""kind": "declared""#, r#""kind": "abacus""#), "machines[0].kind");
        expect_path(&MINIMAL.replace(r#""players": 1"#, r#""players": 2"#), "complexity");
    }

    #[test]
    fn resave_is_byte_stable() {
        let first = game_file_json(&parse_game_file(MINIMAL).unwrap()).unwrap();
        let second = game_file_json(&parse_game_file(&first).unwrap()).unwrap();
        assert_eq!(first, second);
        assert_eq!(parse_game_file(&first).unwrap(), parse_game_file(MINIMAL).unwrap());
    }
}
