//! Command-line driver.
//!
//! Exit codes: 0 on success, 2 on usage or validation errors, 3 when a
//! certification verdict is negative or a search comes back empty, 1 on any
//! other failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::catalog::{load_game_file, LoadedGame};
use crate::equilibrium::{
    certify_epsilon_nash, induced_normal_form, mixed_gaps, search_pure_nash, solve_2p_support_enumeration,
    CandidateSet, EquilibriumCertificate, Identified, StrategicGame, DEFAULT_PROFILE_CAP,
};
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, EXPERIMENTS};
use crate::game::{expected_utility_mc, ExactEvaluator};
use crate::mediated::expected_utility_mediated;
use crate::rational::{parse_q, Q};
use crate::report::{Format, Report, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mgame", version, about = "Exact evaluation and equilibrium certification for Bayesian machine games")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Expected-utility engine; `mc` is supported by `eval` on plain games.
    #[arg(long, global = true, value_enum, default_value = "exact")]
    engine: EngineArg,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 1000)]
    samples: u64,
    /// Monte Carlo seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Overrides the game's step budget.
    #[arg(long, global = true)]
    step_budget: Option<u64>,
    /// Overrides the game's coin budget.
    #[arg(long, global = true)]
    coin_budget: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "md")]
    format: FormatArg,
    /// Write the report to `DIR/<scenario>.<format>` instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Md => Format::Md,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List experiments and their parameters.
    List,
    /// Run a named experiment.
    Run {
        experiment: String,
        /// Parameter override `key=value`; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Certify a profile as an epsilon-Nash equilibrium over candidate sets.
    Certify {
        #[arg(long)]
        game: PathBuf,
        /// Comma-separated machine ids, one per player.
        #[arg(long)]
        profile: String,
        /// Comma-separated ids used as every player's candidate set; the
        /// whole catalog by default.
        #[arg(long)]
        candidates: Option<String>,
        #[arg(long, default_value = "0")]
        epsilon: String,
    },
    /// Enumerate every pure epsilon-Nash equilibrium over the candidate sets.
    Search {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        candidates: Option<String>,
        #[arg(long, default_value = "0")]
        epsilon: String,
    },
    /// Solve the normal form induced by deterministic machines of a
    /// two-player game.
    Solve {
        #[arg(long)]
        game: PathBuf,
        /// Defaults to every deterministic machine in the catalog.
        #[arg(long)]
        candidates: Option<String>,
    },
    /// Expected utility of a profile.
    Eval {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        profile: String,
    },
}

/// Runs the command line with `argv[0]` being the program name.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Validation { .. }
                | Error::Parse { .. }
                | Error::UnknownVariable { .. }
                | Error::Definition(_)
                | Error::Domain(_)
                | Error::ZeroProbability(_)
                | Error::MissingRange
                | Error::TooLarge { .. }
                | Error::Json(_) => EXIT_INVALID,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let g = &cli.global;
    let (report, ok) = match &cli.command {
        Command::List => {
            for e in EXPERIMENTS {
                writeln!(out, "{}: {}", e.name, e.summary)?;
                for p in e.params {
                    writeln!(out, "    {} (default {}): {}", p.name, p.default, p.help)?;
                }
            }
            return Ok(EXIT_OK);
        }
        Command::Run { experiment, params } => {
            let overrides = params.iter().map(|p| split_param(p)).collect::<Result<Vec<_>>>()?;
            let report = run_experiment(experiment, &overrides)?;
            let ok = report.headline_ok();
            (report, ok)
        }
        Command::Certify {
            game,
            profile,
            candidates,
            epsilon,
        } => {
            let loaded = load(game, g)?;
            let epsilon = parse_rational("epsilon", epsilon)?;
            let ids = split_ids(profile);
            let cert = with_game(&loaded, |sg, catalog| {
                let sets = candidate_sets(catalog, candidates.as_deref(), sg.player_count())?;
                let profile = resolve(catalog, &ids, "profile", sg.player_count())?;
                let refs: Vec<&AnyMachine> = profile.iter().collect();
                certify_epsilon_nash(sg, &refs, &sets, &epsilon)
            })?;
            let mut report = game_report("certify", game, g);
            report.param("profile", ids.join(","));
            let ok = cert.verdict;
            report.certificate("certificate", true, cert);
            (report, ok)
        }
        Command::Search {
            game,
            candidates,
            epsilon,
        } => {
            let loaded = load(game, g)?;
            let epsilon = parse_rational("epsilon", epsilon)?;
            let found = with_game(&loaded, |sg, catalog| {
                let sets = candidate_sets(catalog, candidates.as_deref(), sg.player_count())?;
                search_pure_nash(sg, &sets, &epsilon, DEFAULT_PROFILE_CAP)
            })?;
            let mut report = game_report("search", game, g);
            report.param("epsilon", &epsilon);
            report.table(found_table(&found));
            let ok = !found.is_empty();
            if !ok {
                report.note("no profile in the candidate product is an epsilon-Nash equilibrium");
            }
            (report, ok)
        }
        Command::Solve { game, candidates } => {
            let loaded = load(game, g)?;
            let report = solve(&loaded, game, candidates.as_deref(), g)?;
            let ok = report.tables.iter().any(|t| t.name == "equilibria" && !t.rows.is_empty());
            (report, ok)
        }
        Command::Eval { game, profile } => {
            let loaded = load(game, g)?;
            (eval(&loaded, game, profile, g)?, true)
        }
    };
    emit(&report, g, out)?;
    Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
}

fn split_param(p: &str) -> Result<(String, String)> {
    p.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::validation("--param", format!("`{p}` is not key=value")))
}

fn split_ids(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn parse_rational(flag: &str, text: &str) -> Result<Q> {
    parse_q(text).map_err(|e| Error::validation(format!("--{flag}"), e.to_string()))
}

fn load(path: &Path, g: &Global) -> Result<LoadedGame> {
    let mut loaded = load_game_file(path).map_err(|e| match e {
        Error::Io(io) => Error::validation("--game", format!("{}: {io}", path.display())),
        other => other,
    })?;
    let budgets = match &mut loaded {
        LoadedGame::Plain { game, .. } => &mut game.budgets,
        LoadedGame::Mediated { game, .. } => &mut game.game.budgets,
    };
    if let Some(s) = g.step_budget {
        budgets.steps = s;
    }
    if let Some(c) = g.coin_budget {
        budgets.coins = c;
    }
    Ok(loaded)
}

fn game_report(scenario: &str, path: &Path, g: &Global) -> Report {
    let mut r = Report::new(scenario);
    r.param("game", path.display());
    if let Some(s) = g.step_budget {
        r.param("stepBudget", s);
    }
    if let Some(c) = g.coin_budget {
        r.param("coinBudget", c);
    }
    r
}

/// Runs `f` with the game as a strategic game over its own catalog.
fn with_game<R>(loaded: &LoadedGame, f: impl FnOnce(&DynGame<'_>, &Catalog<'_>) -> Result<R>) -> Result<R> {
    match loaded {
        LoadedGame::Plain { game, machines } => {
            let ev = ExactEvaluator::new(game);
            f(&DynGame(&Wrapped(&ev)), &Catalog::Plain(machines))
        }
        LoadedGame::Mediated { game, machines } => f(&DynGame(&Wrapped(game)), &Catalog::Mediated(machines)),
    }
}

enum Catalog<'a> {
    Plain(&'a [crate::machine::Machine]),
    Mediated(&'a [crate::mediated::InteractiveMachine]),
}

/// Strategies of either catalog kind.
#[derive(Clone, Debug)]
enum AnyMachine {
    Plain(crate::machine::Machine),
    Mediated(crate::mediated::InteractiveMachine),
}

impl Identified for AnyMachine {
    fn id(&self) -> &str {
        match self {
            AnyMachine::Plain(m) => m.id(),
            AnyMachine::Mediated(m) => m.id(),
        }
    }
}

struct Wrapped<'a, G>(&'a G);

impl StrategicGame for Wrapped<'_, ExactEvaluator<'_>> {
    type Strategy = AnyMachine;

    fn player_count(&self) -> usize {
        self.0.player_count()
    }

    fn utilities(&self, profile: &[&AnyMachine]) -> Result<Vec<Q>> {
        let ms = profile
            .iter()
            .map(|m| match m {
                AnyMachine::Plain(m) => Ok(m),
                AnyMachine::Mediated(_) => Err(Error::Definition("interactive machine in a plain game".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        self.0.utilities(&ms)
    }
}

impl StrategicGame for Wrapped<'_, crate::mediated::MediatedGameDef> {
    type Strategy = AnyMachine;

    fn player_count(&self) -> usize {
        self.0.game.players
    }

    fn utilities(&self, profile: &[&AnyMachine]) -> Result<Vec<Q>> {
        let ms = profile
            .iter()
            .map(|m| match m {
                AnyMachine::Mediated(m) => Ok(m),
                AnyMachine::Plain(_) => Err(Error::Definition("plain machine in a mediated game".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        expected_utility_mediated(self.0, &ms)
    }
}

impl Catalog<'_> {
    fn all(&self) -> Vec<AnyMachine> {
        match self {
            Catalog::Plain(ms) => ms.iter().cloned().map(AnyMachine::Plain).collect(),
            Catalog::Mediated(ms) => ms.iter().cloned().map(AnyMachine::Mediated).collect(),
        }
    }
}

fn pick(catalog: &Catalog<'_>, ids: &[String], flag: &str) -> Result<Vec<AnyMachine>> {
    let all = catalog.all();
    ids.iter()
        .enumerate()
        .map(|(i, id)| {
            all.iter()
                .find(|m| m.id() == id)
                .cloned()
                .ok_or_else(|| Error::validation(format!("{flag}[{i}]"), format!("no machine `{id}` in the catalog")))
        })
        .collect()
}

fn resolve(catalog: &Catalog<'_>, ids: &[String], flag: &str, players: usize) -> Result<Vec<AnyMachine>> {
    if ids.len() != players {
        return Err(Error::validation(flag, format!("{} ids for {players} players", ids.len())));
    }
    pick(catalog, ids, flag)
}

fn candidate_sets(catalog: &Catalog<'_>, ids: Option<&str>, players: usize) -> Result<Vec<CandidateSet<AnyMachine>>> {
    let (items, provenance) = match ids {
        Some(list) => (pick(catalog, &split_ids(list), "candidates")?, format!("listed machines: {list}")),
        None => (catalog.all(), "the game file's machine catalog".to_string()),
    };
    let set = CandidateSet::new(items, provenance).map_err(|e| Error::validation("candidates", e.to_string()))?;
    Ok(vec![set; players])
}

struct DynGame<'a>(&'a dyn StrategicGame<Strategy = AnyMachine>);

impl StrategicGame for DynGame<'_> {
    type Strategy = AnyMachine;

    fn player_count(&self) -> usize {
        self.0.player_count()
    }

    fn utilities(&self, profile: &[&AnyMachine]) -> Result<Vec<Q>> {
        self.0.utilities(profile)
    }
}

fn found_table(found: &[EquilibriumCertificate]) -> Table {
    let players = found.first().map_or(0, |c| c.profile.len());
    let mut cols = vec!["profile".to_string()];
    cols.extend((1..=players).map(|i| format!("u{i}")));
    cols.push("maxGap".into());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("pureNash", &cols);
    for c in found {
        let mut row = vec![c.profile.join(",").into()];
        row.extend(c.utilities.iter().map(Into::into));
        row.push(c.max_gap().into());
        t.push(row);
    }
    t
}

fn solve(loaded: &LoadedGame, path: &Path, candidates: Option<&str>, g: &Global) -> Result<Report> {
    let LoadedGame::Plain { game, machines } = loaded else {
        return Err(Error::validation("--game", "solve needs a game without a mediator"));
    };
    if game.players != 2 {
        return Err(Error::validation("players", "solve needs a two-player game"));
    }
    let pool: Vec<crate::machine::Machine> = match candidates {
        Some(list) => {
            let ids = split_ids(list);
            ids.iter()
                .enumerate()
                .map(|(i, id)| {
                    machines
                        .iter()
                        .find(|m| m.id() == id)
                        .cloned()
                        .ok_or_else(|| Error::validation(format!("candidates[{i}]"), format!("no machine `{id}`")))
                })
                .collect::<Result<_>>()?
        }
        None => machines.iter().filter(|m| m.is_deterministic()).cloned().collect(),
    };
    if pool.is_empty() {
        return Err(Error::validation("candidates", "no deterministic machines to solve over"));
    }
    let ev = ExactEvaluator::new(game);
    let mg = induced_normal_form(&ev, &[pool.clone(), pool])?.matrix()?;
    let mut report = game_report("solve", path, g);

    let mut cols = vec!["row".to_string()];
    cols.extend(mg.cols.iter().cloned());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut payoffs = Table::new("payoffs", &cols);
    for (i, r) in mg.rows.iter().enumerate() {
        let mut row = vec![r.as_str().into()];
        row.extend((0..mg.cols.len()).map(|j| format!("{}, {}", mg.a[i][j], mg.b[i][j]).into()));
        payoffs.push(row);
    }
    report.table(payoffs);

    let sol = solve_2p_support_enumeration(&mg);
    let mut eq = Table::new("equilibria", &["index", "row", "col", "rowValue", "colValue", "rowGap", "colGap"]);
    let mix = |labels: &[String], w: &[Q]| {
        labels
            .iter()
            .zip(w)
            .filter(|(_, p)| **p != Q::from_integer(0.into()))
            .map(|(l, p)| format!("{l}:{p}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (k, p) in sol.equilibria.iter().enumerate() {
        let rv = mg.row_values(&p.col).iter().zip(&p.row).fold(Q::from_integer(0.into()), |a, (v, x)| a + v * x);
        let cv = mg.col_values(&p.row).iter().zip(&p.col).fold(Q::from_integer(0.into()), |a, (v, y)| a + v * y);
        let (gr, gc) = mixed_gaps(&mg, p);
        eq.push(vec![
            k.into(),
            mix(&mg.rows, &p.row).into(),
            mix(&mg.cols, &p.col).into(),
            rv.into(),
            cv.into(),
            gr.into(),
            gc.into(),
        ]);
    }
    report.table(eq);
    if sol.singular_supports > 0 {
        report.note(format!(
            "{} support pairs were degenerate; equilibria on them may be missing",
            sol.singular_supports
        ));
    }
    Ok(report)
}

fn eval(loaded: &LoadedGame, path: &Path, profile: &str, g: &Global) -> Result<Report> {
    let ids = split_ids(profile);
    let mut report = game_report("eval", path, g);
    report.param("profile", ids.join(","));
    let mut t = Table::new("utilities", &["player", "machine", "utility"]);
    let utilities = match (loaded, g.engine) {
        (LoadedGame::Plain { game, machines }, EngineArg::Mc) => {
            let ms = resolve(&Catalog::Plain(machines), &ids, "profile", game.players)?;
            let ms: Vec<&crate::machine::Machine> = ms
                .iter()
                .map(|m| match m {
                    AnyMachine::Plain(m) => m,
                    AnyMachine::Mediated(_) => unreachable!("plain catalog"),
                })
                .collect();
            report.param("engine", "mc");
            report.param("samples", g.samples);
            report.param("seed", g.seed);
            let est = expected_utility_mc(game, &ms, g.samples, g.seed)?;
            if let Ok(h) = est.half_width(0.95) {
                report.param("halfWidth95", format!("{h:.6}"));
            }
            est.mean
        }
        (LoadedGame::Mediated { .. }, EngineArg::Mc) => {
            return Err(Error::validation("--engine", "the mc engine evaluates games without a mediator only"));
        }
        (_, EngineArg::Exact) => {
            report.param("engine", "exact");
            with_game(loaded, |sg, catalog| {
                let ms = resolve(catalog, &ids, "profile", sg.player_count())?;
                let refs: Vec<&AnyMachine> = ms.iter().collect();
                sg.utilities(&refs)
            })?
        }
    };
    for (i, (id, u)) in ids.iter().zip(utilities).enumerate() {
        t.push(vec![(i + 1).into(), id.as_str().into(), u.into()]);
    }
    report.table(t);
    Ok(report)
}

fn emit(report: &Report, g: &Global, out: &mut dyn Write) -> Result<()> {
    let format: Format = g.format.into();
    let text = report.render(format)?;
    match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.{}", report.scenario, format.extension()));
            std::fs::write(&path, text)?;
            writeln!(out, "{}", path.display())?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}
