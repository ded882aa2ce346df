//! Command-line front end: JSON instance files in, JSON solution files out.
//!
//! Exit codes: 0 success, 1 I/O or parse or parameter errors, 2 assumption
//! violation, 3 max refinement rounds exceeded, 4 verification failure.
//! Rationals cross the JSON boundary as strings (canonically `p/q`; decimal
//! strings and plain numbers are accepted on input), so the exact `sum = R`
//! invariant survives serialization.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::domain::{AgentSpec, Allocation, Instance, Mode, RoomSpec};
use crate::engine::{
    self, EngineError, Scenario, Solution, SolutionPayload, SolverConfig,
};
use crate::mesh::{cells, grid_vertices, PriceMap};
use crate::preferences::{validate_assumption, AssumptionKind, Curve, DemandOracle};
use crate::quasilinear::solve_quasilinear_exact;
use crate::rational::{format_rat, parse_rat, rat_to_f64, Rat};

#[derive(Parser)]
#[command(
    name = "harmony",
    about = "Envy-free rent division: rooms, roommates, secretive and extra agents",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write a solution file
    Solve(SolveArgs),
    /// Check a solution file against its instance
    Verify(VerifyArgs),
    /// Sample-test an assumption (miserly, weak-miserly, archimedean, compensable) per agent
    Validate(ValidateArgs),
    /// Dump a triangulation (vertices, cells, mapped prices) as JSON
    Mesh(MeshArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (JSON)
    #[arg(short = 'i', long)]
    input: PathBuf,
    /// Output solution file; stdout if omitted
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Envy tolerance (rational, e.g. "1/1000" or "0.001")
    #[arg(long)]
    epsilon: Option<String>,
    /// Initial grid resolution
    #[arg(long)]
    k0: Option<u64>,
    /// Refinement round limit
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Scan workers (falls back to HARMONY_WORKERS)
    #[arg(long)]
    workers: Option<usize>,
    /// Use the mesh engine even when the exact quasilinear solver applies
    #[arg(long)]
    force_mesh: bool,
    /// Accepted for interface stability; the solver is deterministic
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance file (JSON)
    #[arg(short = 'i', long)]
    input: PathBuf,
    /// Solution file (JSON)
    #[arg(short = 's', long)]
    solution: PathBuf,
    /// Envy tolerance override
    #[arg(long)]
    epsilon: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Instance file (JSON)
    #[arg(short = 'i', long)]
    input: PathBuf,
    /// Assumption to test: miserly, weak-miserly, archimedean, compensable
    #[arg(long)]
    kind: String,
    /// Pseudorandom price vectors per agent
    #[arg(long, default_value_t = 1000)]
    samples: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct MeshArgs {
    /// Number of rooms (simplex dimension + 1)
    #[arg(long)]
    m: usize,
    /// Grid resolution
    #[arg(long)]
    k: u64,
    /// Price map: compensable, reciprocal, or su
    #[arg(long, default_value = "compensable")]
    map: String,
    /// Compensation bound T (compensable map)
    #[arg(long)]
    t: Option<String>,
    /// Total rent R (compensable and su maps)
    #[arg(long)]
    r: Option<String>,
    /// Emit full vertex/cell data (counts only otherwise)
    #[arg(long)]
    dump: bool,
    /// Output file; stdout if omitted
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

/// An error carrying its process exit code.
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parse arguments from the process environment and run; returns the exit
/// code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Mesh(args) => cmd_mesh(args),
    }
}

// ---------------------------------------------------------------------------
// instance files

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(1, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::new(1, format!("{}: {e}", path.display())))
}

fn field<'a>(obj: &'a Value, key: &str, ctx: &str) -> CliResult<&'a Value> {
    obj.get(key)
        .ok_or_else(|| CliError::new(1, format!("{ctx}: missing field \"{key}\"")))
}

fn as_rat(v: &Value, ctx: &str) -> CliResult<Rat> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => {
            return Err(CliError::new(
                1,
                format!("{ctx}: expected a rational (string or number), got {other}"),
            ))
        }
    };
    parse_rat(&text).map_err(|e| CliError::new(1, format!("{ctx}: {e}")))
}

fn as_rat_array(v: &Value, ctx: &str) -> CliResult<Vec<Rat>> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::new(1, format!("{ctx}: expected an array")))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| as_rat(x, &format!("{ctx}[{i}]")))
        .collect()
}

fn parse_oracle(v: &Value, ctx: &str) -> CliResult<DemandOracle> {
    let kind = field(v, "type", ctx)?
        .as_str()
        .ok_or_else(|| CliError::new(1, format!("{ctx}.type: expected a string")))?;
    match kind {
        "quasilinear" => Ok(DemandOracle::quasilinear(as_rat_array(
            field(v, "values", ctx)?,
            &format!("{ctx}.values"),
        )?)),
        "archimedean-curve" => {
            let curves_val = field(v, "curves", ctx)?
                .as_array()
                .ok_or_else(|| CliError::new(1, format!("{ctx}.curves: expected an array")))?;
            let mut curves = Vec::with_capacity(curves_val.len());
            for (j, c) in curves_val.iter().enumerate() {
                let cctx = format!("{ctx}.curves[{j}]");
                let pts = c
                    .as_array()
                    .ok_or_else(|| CliError::new(1, format!("{cctx}: expected an array")))?;
                let mut breakpoints = Vec::with_capacity(pts.len());
                for (b, pt) in pts.iter().enumerate() {
                    let pair = pt.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                        CliError::new(1, format!("{cctx}[{b}]: expected a [price, utility] pair"))
                    })?;
                    breakpoints.push((
                        as_rat(&pair[0], &format!("{cctx}[{b}][0]"))?,
                        as_rat(&pair[1], &format!("{cctx}[{b}][1]"))?,
                    ));
                }
                curves.push(
                    Curve::new(breakpoints).map_err(|e| CliError::new(1, format!("{cctx}: {e}")))?,
                );
            }
            Ok(DemandOracle::ArchimedeanCurve { curves })
        }
        "affine-externality" => Ok(DemandOracle::AffineExternality {
            values: as_rat_array(field(v, "values", ctx)?, &format!("{ctx}.values"))?,
            betas: as_rat_array(field(v, "betas", ctx)?, &format!("{ctx}.betas"))?,
        }),
        other => Err(CliError::new(
            1,
            format!("{ctx}.type: unknown oracle type \"{other}\""),
        )),
    }
}

fn parse_instance(root: &Value, path: &Path) -> CliResult<(Instance, SolverConfig)> {
    let ctx = path.display().to_string();
    let mode_str = field(root, "mode", &ctx)?
        .as_str()
        .ok_or_else(|| CliError::new(1, format!("{ctx}: \"mode\" must be a string")))?;
    let mode = match mode_str {
        "classic" => Mode::Classic,
        "roommates" => Mode::Roommates,
        "secretive" => Mode::Secretive,
        "extra" => Mode::Extra,
        other => return Err(CliError::new(1, format!("{ctx}: unknown mode \"{other}\""))),
    };
    let total_rent = as_rat(field(root, "totalRent", &ctx)?, &format!("{ctx}.totalRent"))?;
    let compensation_bound = match root.get("compensationBound") {
        Some(v) => Some(as_rat(v, &format!("{ctx}.compensationBound"))?),
        None => None,
    };
    let rooms_val = field(root, "rooms", &ctx)?
        .as_array()
        .ok_or_else(|| CliError::new(1, format!("{ctx}.rooms: expected an array")))?;
    let mut rooms = Vec::with_capacity(rooms_val.len());
    for (j, r) in rooms_val.iter().enumerate() {
        let rctx = format!("{ctx}.rooms[{j}]");
        let name = field(r, "name", &rctx)?
            .as_str()
            .ok_or_else(|| CliError::new(1, format!("{rctx}.name: expected a string")))?
            .to_string();
        let capacity = match r.get("capacity") {
            Some(c) => c
                .as_u64()
                .and_then(|c| u32::try_from(c).ok())
                .filter(|&c| c >= 1)
                .ok_or_else(|| {
                    CliError::new(1, format!("{rctx}.capacity: expected a positive integer"))
                })?,
            None => 1,
        };
        rooms.push(RoomSpec { name, capacity });
    }
    let agents_val = field(root, "agents", &ctx)?
        .as_array()
        .ok_or_else(|| CliError::new(1, format!("{ctx}.agents: expected an array")))?;
    let mut agents = Vec::with_capacity(agents_val.len());
    for (i, a) in agents_val.iter().enumerate() {
        let actx = format!("{ctx}.agents[{i}]");
        let name = field(a, "name", &actx)?
            .as_str()
            .ok_or_else(|| CliError::new(1, format!("{actx}.name: expected a string")))?
            .to_string();
        let oracle = parse_oracle(field(a, "oracle", &actx)?, &format!("{actx}.oracle"))?;
        agents.push(AgentSpec { name, oracle });
    }
    let instance = Instance::new(mode, agents, rooms, total_rent, compensation_bound)
        .map_err(|e| CliError::new(1, format!("{ctx}: {e}")))?;

    let mut config = SolverConfig::default();
    if let Some(s) = root.get("solver") {
        let sctx = format!("{ctx}.solver");
        if let Some(v) = s.get("k0") {
            config.k0 = v
                .as_u64()
                .filter(|&k| k >= 1)
                .ok_or_else(|| CliError::new(1, format!("{sctx}.k0: expected a positive integer")))?;
        }
        if let Some(v) = s.get("growth") {
            config.growth = v.as_u64().filter(|&g| g >= 2).ok_or_else(|| {
                CliError::new(1, format!("{sctx}.growth: expected an integer >= 2"))
            })?;
        }
        if let Some(v) = s.get("tolP") {
            config.tol_p = Some(as_rat(v, &format!("{sctx}.tolP"))?);
        }
        if let Some(v) = s.get("epsilon") {
            config.epsilon = Some(as_rat(v, &format!("{sctx}.epsilon"))?);
        }
        if let Some(v) = s.get("maxRounds") {
            config.max_rounds = v
                .as_u64()
                .and_then(|r| u32::try_from(r).ok())
                .filter(|&r| r >= 1)
                .ok_or_else(|| {
                    CliError::new(1, format!("{sctx}.maxRounds: expected a positive integer"))
                })?;
        }
        if let Some(v) = s.get("workers") {
            config.workers = v
                .as_u64()
                .and_then(|w| usize::try_from(w).ok())
                .filter(|&w| w >= 1)
                .ok_or_else(|| {
                    CliError::new(1, format!("{sctx}.workers: expected a positive integer"))
                })?;
        }
    }
    Ok((instance, config))
}

// ---------------------------------------------------------------------------
// solution files

fn rat_value(r: &Rat) -> Value {
    Value::String(format!("{}", rat_to_f64(r)))
}

fn rat_exact_value(r: &Rat) -> Value {
    Value::String(format_rat(r))
}

fn allocation_value(instance: &Instance, alloc: &Allocation) -> Value {
    let mut map = Map::new();
    for (j, occupants) in alloc.assignment.iter().enumerate() {
        let names: Vec<Value> = occupants
            .iter()
            .map(|&i| Value::String(instance.agents[i].name.clone()))
            .collect();
        map.insert(instance.rooms[j].name.clone(), Value::Array(names));
    }
    Value::Object(map)
}

fn scenarios_value(instance: &Instance, scenarios: &[Scenario], excluded_is_room: bool) -> Value {
    let items: Vec<Value> = scenarios
        .iter()
        .map(|s| {
            let mut assignment = Map::new();
            for &(i, j) in &s.assignment {
                assignment.insert(
                    instance.rooms[j].name.clone(),
                    Value::String(instance.agents[i].name.clone()),
                );
            }
            let (key, name) = if excluded_is_room {
                ("excludedRoom", instance.rooms[s.excluded].name.clone())
            } else {
                ("excludedAgent", instance.agents[s.excluded].name.clone())
            };
            json!({ key: name, "assignment": assignment })
        })
        .collect();
    Value::Array(items)
}

fn solution_to_json(instance: &Instance, solution: &Solution, method: &str) -> Value {
    let mut root = Map::new();
    root.insert("mode".into(), json!(instance.mode.as_str()));
    root.insert("method".into(), json!(method));
    root.insert(
        "prices".into(),
        Value::Array(solution.prices.iter().map(rat_value).collect()),
    );
    root.insert(
        "pricesExact".into(),
        Value::Array(solution.prices.iter().map(rat_exact_value).collect()),
    );
    match &solution.payload {
        SolutionPayload::Allocation(alloc) => {
            root.insert("assignment".into(), allocation_value(instance, alloc));
        }
        SolutionPayload::SecretiveScenarios(s) => {
            root.insert("scenarios".into(), scenarios_value(instance, s, true));
        }
        SolutionPayload::ExtraScenarios(s) => {
            root.insert("scenarios".into(), scenarios_value(instance, s, false));
        }
    }
    let envy_free = solution.certificates.iter().all(|c| c.envy_free);
    let max_regret = solution
        .certificates
        .iter()
        .filter_map(|c| c.max_regret.clone())
        .max();
    let epsilon = solution
        .certificates
        .first()
        .map(|c| c.epsilon.clone())
        .unwrap_or_default();
    root.insert(
        "certificate".into(),
        json!({
            "envyFree": envy_free,
            "maxRegret": max_regret.as_ref().map(rat_exact_value),
            "epsilon": rat_exact_value(&epsilon),
        }),
    );
    let d = &solution.diagnostics;
    root.insert(
        "diagnostics".into(),
        json!({
            "rounds": d.rounds,
            "finalK": d.final_k,
            "cellsScanned": d.cells_scanned,
            "oracleCalls": d.oracle_calls,
            "wallTimeMs": d.wall_time_ms,
        }),
    );
    Value::Object(root)
}

fn write_output(out: &Option<PathBuf>, value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::new(1, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn room_index(instance: &Instance, name: &str, ctx: &str) -> CliResult<usize> {
    instance
        .rooms
        .iter()
        .position(|r| r.name == name)
        .ok_or_else(|| CliError::new(1, format!("{ctx}: unknown room \"{name}\"")))
}

fn agent_index(instance: &Instance, name: &str, ctx: &str) -> CliResult<usize> {
    instance
        .agents
        .iter()
        .position(|a| a.name == name)
        .ok_or_else(|| CliError::new(1, format!("{ctx}: unknown agent \"{name}\"")))
}

/// Rebuild an engine `Solution` from a solution file (prices come from the
/// exact field).
fn parse_solution(instance: &Instance, root: &Value, path: &Path) -> CliResult<Solution> {
    let ctx = path.display().to_string();
    let prices = as_rat_array(field(root, "pricesExact", &ctx)?, &format!("{ctx}.pricesExact"))?;
    if prices.len() != instance.room_count() {
        return Err(CliError::new(
            1,
            format!(
                "{ctx}: {} prices for {} rooms",
                prices.len(),
                instance.room_count()
            ),
        ));
    }
    let payload = if let Some(a) = root.get("assignment") {
        let obj = a
            .as_object()
            .ok_or_else(|| CliError::new(1, format!("{ctx}.assignment: expected an object")))?;
        let mut assignment = vec![Vec::new(); instance.room_count()];
        for (room_name, occupants) in obj {
            let j = room_index(instance, room_name, &format!("{ctx}.assignment"))?;
            let names = occupants.as_array().ok_or_else(|| {
                CliError::new(1, format!("{ctx}.assignment.{room_name}: expected an array"))
            })?;
            for n in names {
                let name = n.as_str().ok_or_else(|| {
                    CliError::new(1, format!("{ctx}.assignment.{room_name}: expected strings"))
                })?;
                assignment[j].push(agent_index(instance, name, &format!("{ctx}.assignment"))?);
            }
        }
        SolutionPayload::Allocation(Allocation {
            assignment,
            prices: prices.clone(),
        })
    } else {
        let arr = field(root, "scenarios", &ctx)?
            .as_array()
            .ok_or_else(|| CliError::new(1, format!("{ctx}.scenarios: expected an array")))?;
        let mut scenarios = Vec::with_capacity(arr.len());
        let mut is_room = instance.mode == Mode::Secretive;
        for (s_idx, s) in arr.iter().enumerate() {
            let sctx = format!("{ctx}.scenarios[{s_idx}]");
            let excluded = if let Some(r) = s.get("excludedRoom") {
                is_room = true;
                room_index(
                    instance,
                    r.as_str().unwrap_or_default(),
                    &format!("{sctx}.excludedRoom"),
                )?
            } else if let Some(a) = s.get("excludedAgent") {
                is_room = false;
                agent_index(
                    instance,
                    a.as_str().unwrap_or_default(),
                    &format!("{sctx}.excludedAgent"),
                )?
            } else {
                return Err(CliError::new(
                    1,
                    format!("{sctx}: missing excludedRoom/excludedAgent"),
                ));
            };
            let obj = field(s, "assignment", &sctx)?
                .as_object()
                .ok_or_else(|| CliError::new(1, format!("{sctx}.assignment: expected an object")))?;
            let mut pairs = Vec::with_capacity(obj.len());
            for (room_name, agent_name) in obj {
                let j = room_index(instance, room_name, &format!("{sctx}.assignment"))?;
                let name = agent_name.as_str().ok_or_else(|| {
                    CliError::new(1, format!("{sctx}.assignment.{room_name}: expected a string"))
                })?;
                pairs.push((agent_index(instance, name, &format!("{sctx}.assignment"))?, j));
            }
            pairs.sort();
            scenarios.push(Scenario {
                excluded,
                assignment: pairs,
            });
        }
        if is_room {
            SolutionPayload::SecretiveScenarios(scenarios)
        } else {
            SolutionPayload::ExtraScenarios(scenarios)
        }
    };
    Ok(Solution {
        prices,
        payload,
        certificates: Vec::new(),
        diagnostics: Default::default(),
    })
}

// ---------------------------------------------------------------------------
// reusable string-level entry points (used by language bindings)

/// Parse an instance file from a JSON string.
pub fn parse_instance_str(text: &str) -> Result<(Instance, SolverConfig), String> {
    let label = PathBuf::from("instance");
    let root: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    parse_instance(&root, &label).map_err(|e| e.message)
}

/// Parse a solution file from a JSON string against its instance.
pub fn parse_solution_str(instance: &Instance, text: &str) -> Result<Solution, String> {
    let label = PathBuf::from("solution");
    let root: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    parse_solution(instance, &root, &label).map_err(|e| e.message)
}

/// Serialize a solution to the solution-file JSON format.
pub fn solution_json_string(instance: &Instance, solution: &Solution, method: &str) -> String {
    serde_json::to_string_pretty(&solution_to_json(instance, solution, method))
        .expect("serializable")
}

// ---------------------------------------------------------------------------
// subcommands

fn cmd_solve(args: SolveArgs) -> CliResult<()> {
    let root = read_json(&args.input)?;
    let (instance, mut config) = parse_instance(&root, &args.input)?;
    if let Some(e) = &args.epsilon {
        config.epsilon =
            Some(parse_rat(e).map_err(|e| CliError::new(1, format!("--epsilon: {e}")))?);
    }
    if let Some(k0) = args.k0 {
        config.k0 = k0.max(1);
    }
    if let Some(r) = args.max_rounds {
        config.max_rounds = r.max(1);
    }
    config.workers = args
        .workers
        .or_else(|| {
            std::env::var("HARMONY_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(config.workers)
        .max(1);

    let all_quasilinear = instance
        .agents
        .iter()
        .all(|a| matches!(a.oracle, DemandOracle::Quasilinear { .. }));
    let exact_applies = all_quasilinear
        && instance.mode == Mode::Classic
        && instance.agent_count() == instance.room_count();

    let (solution, method) = if exact_applies && !args.force_mesh {
        let values: Vec<Vec<Rat>> = instance
            .agents
            .iter()
            .map(|a| match &a.oracle {
                DemandOracle::Quasilinear { values } => values.clone(),
                _ => unreachable!("guarded by all_quasilinear"),
            })
            .collect();
        let (alloc, certificate) = solve_quasilinear_exact(&values, &instance.total_rent)
            .map_err(|e| CliError::new(1, format!("exact solver: {e}")))?;
        let solution = Solution {
            prices: alloc.prices.clone(),
            payload: SolutionPayload::Allocation(alloc),
            certificates: vec![certificate],
            diagnostics: Default::default(),
        };
        (solution, "quasilinear-exact")
    } else {
        let solution = engine::solve(&instance, &config).map_err(|e| match e {
            EngineError::AssumptionViolation { .. } | EngineError::NoFeasibleCell { .. } => {
                CliError::new(2, e.to_string())
            }
            EngineError::MaxRoundsExceeded { .. } => CliError::new(3, e.to_string()),
            EngineError::Oracle(o) => CliError::new(1, o.to_string()),
        })?;
        (solution, "mesh-engine")
    };
    write_output(&args.output, &solution_to_json(&instance, &solution, method))
}

fn cmd_verify(args: VerifyArgs) -> CliResult<()> {
    let instance_json = read_json(&args.input)?;
    let (instance, config) = parse_instance(&instance_json, &args.input)?;
    let solution_json = read_json(&args.solution)?;
    let solution = parse_solution(&instance, &solution_json, &args.solution)?;
    let epsilon = match &args.epsilon {
        Some(e) => parse_rat(e).map_err(|e| CliError::new(1, format!("--epsilon: {e}")))?,
        None => match solution_json
            .get("certificate")
            .and_then(|c| c.get("epsilon"))
        {
            Some(v) => as_rat(v, "certificate.epsilon")?,
            None => config.resolved_epsilon(&instance),
        },
    };
    let certificates = engine::verify(&instance, &solution, &epsilon)
        .map_err(|e| CliError::new(1, e.to_string()))?;
    let mut all_pass = true;
    for (idx, cert) in certificates.iter().enumerate() {
        let label = if certificates.len() == 1 {
            String::new()
        } else {
            format!("scenario {idx}: ")
        };
        let regret = cert
            .max_regret
            .as_ref()
            .map(format_rat)
            .unwrap_or_else(|| "n/a (ordinal)".into());
        println!(
            "{label}{} maxRegret={regret} epsilon={}",
            if cert.envy_free { "PASS" } else { "FAIL" },
            format_rat(&cert.epsilon)
        );
        for f in &cert.failures {
            println!("{label}  {f}");
        }
        all_pass &= cert.envy_free;
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::new(4, "verification failed"))
    }
}

fn cmd_validate(args: ValidateArgs) -> CliResult<()> {
    let root = read_json(&args.input)?;
    let (instance, _) = parse_instance(&root, &args.input)?;
    let kind = AssumptionKind::parse(&args.kind)
        .ok_or_else(|| CliError::new(1, format!("unknown assumption kind \"{}\"", args.kind)))?;
    if args.samples == 0 {
        return Err(CliError::new(1, "--samples must be >= 1"));
    }
    let mut all_pass = true;
    for (i, agent) in instance.agents.iter().enumerate() {
        let report = validate_assumption(
            &agent.oracle,
            kind,
            instance.room_count(),
            &instance.compensation_bound,
            &instance.total_rent,
            args.samples as usize,
            args.seed.wrapping_add(i as u64),
        );
        if report.passed {
            println!(
                "{}: PASS ({} over {} samples)",
                agent.name,
                kind.as_str(),
                report.samples
            );
        } else {
            let cx = report
                .counterexample
                .as_ref()
                .map(|p| {
                    let parts: Vec<String> = p
                        .0
                        .iter()
                        .map(|e| match e.as_finite() {
                            Some(r) => format_rat(r),
                            None => "inf".to_string(),
                        })
                        .collect();
                    format!("({})", parts.join(", "))
                })
                .unwrap_or_default();
            println!(
                "{}: FAIL ({} counterexample at p = {cx})",
                agent.name,
                kind.as_str()
            );
        }
        all_pass &= report.passed;
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::new(4, "assumption check failed"))
    }
}

fn cmd_mesh(args: MeshArgs) -> CliResult<()> {
    let parse_opt = |v: &Option<String>, name: &str| -> CliResult<Option<Rat>> {
        match v {
            Some(s) => parse_rat(s)
                .map(Some)
                .map_err(|e| CliError::new(1, format!("--{name}: {e}"))),
            None => Ok(None),
        }
    };
    let t = parse_opt(&args.t, "t")?;
    let r = parse_opt(&args.r, "r")?;
    let map = match args.map.as_str() {
        "compensable" => {
            let t = t.ok_or_else(|| CliError::new(1, "compensable map requires --t"))?;
            let r = r.ok_or_else(|| CliError::new(1, "compensable map requires --r"))?;
            PriceMap::compensable(t, r).map_err(|e| CliError::new(1, e))?
        }
        "reciprocal" => PriceMap::Reciprocal,
        "su" => PriceMap::Su {
            r: r.ok_or_else(|| CliError::new(1, "su map requires --r"))?,
        },
        other => return Err(CliError::new(1, format!("unknown map \"{other}\""))),
    };
    let vertices =
        grid_vertices(args.m, args.k).map_err(|e| CliError::new(1, e.to_string()))?;
    let cell_list: Vec<_> = cells(args.m, args.k)
        .map_err(|e| CliError::new(1, e.to_string()))?
        .collect();
    let mut root = Map::new();
    root.insert("m".into(), json!(args.m));
    root.insert("k".into(), json!(args.k));
    root.insert("map".into(), json!(args.map));
    root.insert("vertexCount".into(), json!(vertices.len()));
    root.insert("cellCount".into(), json!(cell_list.len()));
    if args.dump {
        let vs: Vec<Value> = vertices
            .iter()
            .map(|v| {
                let prices = map.price(&v.barycentric());
                let price_vals: Vec<Value> = prices
                    .0
                    .iter()
                    .map(|p| match p.as_finite() {
                        Some(r) => rat_exact_value(r),
                        None => Value::String("inf".into()),
                    })
                    .collect();
                json!({
                    "y": v.y,
                    "x": v.barycentric().iter().map(rat_exact_value).collect::<Vec<_>>(),
                    "prices": price_vals,
                })
            })
            .collect();
        root.insert("vertices".into(), Value::Array(vs));
        let cs: Vec<Value> = cell_list
            .iter()
            .map(|c| {
                json!({
                    "base": c.base,
                    "perm": c.perm,
                    "vertices": c.vertices().iter().map(|v| v.y.clone()).collect::<Vec<_>>(),
                })
            })
            .collect();
        root.insert("cells".into(), Value::Array(cs));
    }
    write_output(&args.output, &Value::Object(root))
}
