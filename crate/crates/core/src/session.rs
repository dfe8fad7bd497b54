//! One seeded, budgeted testing session: explorer, input generation,
//! execution, intensification and metrics wired into a single loop.

use crate::explorer::{BudgetExhausted, EpisodeEnd, Environment, Explorer, ExplorerKind, OutcomeClass};
use crate::input::llm::{load_dictionary_file, CompletionClient};
use crate::input::{random_value, InputGenerator, DEFAULT_EPSILON};
use crate::intensifier::{Intensifier, DEFAULT_MUTANT_CAP};
use crate::interaction::{
    build_request_lenient, execute, harvest, Backend, ConcreteRequest, HttpBackend, DEFAULT_TIMEOUT, Interaction, InteractionLog,
    RequestOrigin,
};
use crate::metrics::{summarize, FaultRegistry, MetricsTimeline, Summary, TimelineSample};
use crate::oas::{parse_spec, ApiModel, Arguments, FormatHint};
use crate::rl::{Checkpoint, LossStats, PpoConfig, RlError};
use crate::sim::{sim_openapi_yaml, SimBackend, SimKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

pub const INTERACTIONS_FILE: &str = "interactions.jsonl";
pub const TIMELINE_FILE: &str = "timeline.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SPEC_FILE: &str = "spec.yaml";
pub const EXPERIENCE_FILE: &str = "experience.json";
pub const TRAINING_FILE: &str = "training.json";
pub const POLICY_FILE: &str = "policy.json";
pub const RUN_FILE: &str = "run.json";

const EXPLORER_STREAM: u64 = 1;
const INPUT_STREAM: u64 = 2;
const MUTANT_STREAM: u64 = 3;
const POLICY_INIT_STREAM: u64 = 4;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("target unreachable: {0}")]
    TargetUnreachable(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Rl(#[from] RlError),
}

fn default_budget() -> u64 {
    1500
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_mutant_cap() -> usize {
    DEFAULT_MUTANT_CAP
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT.as_secs_f64()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    /// OpenAPI document of a real target.
    #[serde(default)]
    pub spec: Option<PathBuf>,
    /// Overrides the first server URL of the document.
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub sim: Option<SimKind>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub time_budget_s: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default = "default_mutant_cap")]
    pub mutant_cap: usize,
    /// Header values may reference environment variables as `${NAME}`.
    #[serde(default)]
    pub auth_headers: BTreeMap<String, String>,
    #[serde(default)]
    pub llm_dictionary: Option<PathBuf>,
    #[serde(default)]
    pub llm_endpoint: Option<String>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub explorer: ExplorerKind,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    /// Stop once every operation succeeded and one more full episode ran.
    #[serde(default = "default_true")]
    pub stop_when_covered: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            spec: None,
            base_url: None,
            sim: None,
            budget: default_budget(),
            time_budget_s: None,
            seed: 0,
            epsilon: DEFAULT_EPSILON,
            ppo: PpoConfig::default(),
            mutant_cap: DEFAULT_MUTANT_CAP,
            auth_headers: BTreeMap::new(),
            llm_dictionary: None,
            llm_endpoint: None,
            out_dir: None,
            explorer: ExplorerKind::Ppo,
            timeout_s: default_timeout(),
            stop_when_covered: true,
        }
    }
}

impl SessionConfig {
    pub fn for_sim(sim: SimKind, budget: u64, seed: u64) -> Self {
        Self {
            sim: Some(sim),
            budget,
            seed,
            ..Self::default()
        }
    }

    /// Reads a JSON or YAML file whose keys mirror the field names.
    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_yaml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| SessionError::ConfigInvalid(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: &str| Err(SessionError::ConfigInvalid(m.to_string()));
        if self.budget < 1 {
            return bad("request budget must be at least 1");
        }
        match (&self.sim, &self.spec) {
            (Some(_), Some(_)) => return bad("choose either a simulation or a spec, not both"),
            (None, None) => return bad("no target: give a simulation or a spec"),
            (Some(_), None) if self.base_url.is_some() => return bad("a base URL only applies to a spec target"),
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return bad("timeout must be positive");
        }
        if self.time_budget_s.is_some_and(|t| t.is_nan() || t <= 0.0) {
            return bad("time budget must be positive");
        }
        if self.llm_dictionary.is_some() && self.llm_endpoint.is_some() {
            return bad("choose either an LLM dictionary file or an endpoint");
        }
        self.ppo.validate()?;
        Ok(())
    }

    /// Auth headers with `${NAME}` references replaced from the environment.
    pub fn resolved_headers(&self) -> Result<Vec<(String, String)>, SessionError> {
        let re = regex::Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("static pattern");
        let mut out = Vec::new();
        for (name, value) in &self.auth_headers {
            let mut missing = None;
            let resolved = re.replace_all(value, |c: &regex::Captures| match std::env::var(&c[1]) {
                Ok(v) => v,
                Err(_) => {
                    missing = Some(c[1].to_string());
                    String::new()
                }
            });
            if let Some(var) = missing {
                return Err(SessionError::ConfigInvalid(format!("header {name} references unset variable {var}")));
            }
            out.push((name.clone(), resolved.into_owned()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    TimeBudget,
    Covered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: usize,
    pub steps: usize,
    pub end: EpisodeEnd,
    pub total_reward: f64,
    pub loss: Option<LossStats>,
}

#[derive(Debug, Clone)]
pub struct SessionReport {
    pub api: ApiModel,
    pub summary: Summary,
    pub timeline: MetricsTimeline,
    pub faults: FaultRegistry,
    pub interactions: Vec<Interaction>,
    pub log_path: Option<PathBuf>,
    pub episodes: Vec<EpisodeRecord>,
    pub experience: BTreeMap<String, BTreeMap<String, u64>>,
    pub stop_reason: StopReason,
    pub elapsed_s: f64,
}

impl SessionReport {
    pub fn final_loss(&self) -> Option<LossStats> {
        self.episodes.iter().rev().find_map(|e| e.loss)
    }
}

/// Resolves the target: the API model, the backend and, for simulations,
/// the emitted document.
fn open_target(config: &SessionConfig) -> Result<(ApiModel, Box<dyn Backend>, Option<String>), SessionError> {
    if let Some(kind) = config.sim {
        let api = kind.build(config.seed);
        let yaml = sim_openapi_yaml(api.as_ref());
        let model = parse_spec(yaml.as_bytes(), FormatHint::Yaml)
            .map_err(|e| SessionError::ConfigInvalid(format!("simulation document: {e}")))?;
        return Ok((model, Box::new(SimBackend::new(api)), Some(yaml)));
    }
    let path = config.spec.as_ref().expect("validated");
    let bytes = std::fs::read(path).map_err(|e| SessionError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    let model = parse_spec(&bytes, FormatHint::Auto).map_err(|e| SessionError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    let base = config.base_url.clone().unwrap_or_else(|| model.base_url.clone());
    if !(base.starts_with("http://") || base.starts_with("https://")) {
        return Err(SessionError::ConfigInvalid(format!("base URL {base:?} is not an absolute http(s) URL")));
    }
    let timeout = Duration::from_secs_f64(config.timeout_s);
    probe(&base, timeout)?;
    Ok((model, Box::new(HttpBackend::new(&base, timeout)), None))
}

/// Any HTTP answer at all counts as reachable.
fn probe(base: &str, timeout: Duration) -> Result<(), SessionError> {
    let agent = ureq::AgentBuilder::new().timeout(timeout).redirects(0).build();
    match agent.get(base).call() {
        Ok(_) | Err(ureq::Error::Status(..)) => Ok(()),
        Err(e) => Err(SessionError::TargetUnreachable(format!("{base}: {e}"))),
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The explorer's view of the target. Also hosts everything that happens
/// around one explorer request: logging, metrics, rewards, intensification.
struct Run<'a> {
    api: &'a ApiModel,
    backend: Box<dyn Backend>,
    auth: Vec<(String, String)>,
    generator: InputGenerator,
    intensifier: Intensifier,
    input_rng: ChaCha8Rng,
    mutant_rng: ChaCha8Rng,
    budget: u64,
    deadline: Option<Instant>,
    started: Instant,
    log: Option<InteractionLog>,
    interactions: Vec<Interaction>,
    timeline: MetricsTimeline,
    faults: FaultRegistry,
    covered: Vec<bool>,
    time_exhausted: bool,
    io_error: Option<String>,
}

impl Run<'_> {
    fn exhausted(&mut self) -> bool {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.time_exhausted = true;
        }
        self.time_exhausted || self.interactions.len() as u64 >= self.budget || self.io_error.is_some()
    }

    fn all_covered(&self) -> bool {
        self.covered.iter().all(|c| *c)
    }

    /// Sends one request, records it everywhere and feeds the dictionaries.
    fn send(&mut self, request: ConcreteRequest) -> Option<Interaction> {
        if self.exhausted() {
            return None;
        }
        let elapsed = self.started.elapsed().as_secs_f64();
        self.timeline.heartbeat(elapsed);
        let op = &self.api.operations[request.operation];
        let seq = self.interactions.len() as u64 + 1;
        let interaction = execute(self.backend.as_mut(), request, &op.operation_id, seq);
        if let Some(log) = &mut self.log {
            if let Err(e) = log.append(&interaction) {
                self.io_error = Some(e.to_string());
            }
        }
        if interaction.is_success() && interaction.request.method == op.method {
            self.covered[op.index] = true;
        }
        self.faults.observe(&interaction);
        self.timeline.record(TimelineSample {
            elapsed_s: self.started.elapsed().as_secs_f64(),
            requests: seq,
            ops_covered: self.covered.iter().filter(|c| **c).count(),
            unique_faults: self.faults.len(),
        });
        let record_request = match &interaction.request.origin {
            RequestOrigin::Explorer => true,
            RequestOrigin::Mutant { nominal, .. } => *nominal,
        };
        harvest(&interaction, op, &mut self.generator.dictionaries, record_request);
        self.interactions.push(interaction.clone());
        Some(interaction)
    }

    /// Required parameters only, drawn without bandit involvement.
    fn fallback_arguments(&mut self, op: usize) -> Arguments {
        let op = &self.api.operations[op];
        op.parameters
            .iter()
            .enumerate()
            .filter(|(_, p)| p.required)
            .map(|(i, p)| (i, random_value(&p.schema, &mut self.input_rng)))
            .collect()
    }
}

impl Environment for Run<'_> {
    fn num_operations(&self) -> usize {
        self.api.len()
    }

    fn begin_episode(&mut self) {
        self.backend.reset();
    }

    fn step(&mut self, op_index: usize) -> Result<OutcomeClass, BudgetExhausted> {
        if self.exhausted() {
            return Err(BudgetExhausted);
        }
        let api = self.api;
        let op = &api.operations[op_index];
        let (arguments, provenance, trace) = match self.generator.generate_request(op, &mut self.input_rng) {
            Ok(g) => (g.arguments, g.provenance, g.trace),
            Err(e) => {
                ::log::warn!("{}: {e}; falling back to required parameters", op.operation_id);
                (self.fallback_arguments(op_index), BTreeMap::new(), Vec::new())
            }
        };
        let mut request = build_request_lenient(op, &arguments, &self.auth);
        request.provenance = provenance;
        request.trace = trace;
        let interaction = self.send(request).ok_or(BudgetExhausted)?;
        let success = interaction.is_success();
        self.generator.reward_decisions(&interaction.request.trace, success);
        if success && !self.intensifier.has_triggered(op_index) {
            let auth = self.auth.clone();
            let mut rng = self.mutant_rng.clone();
            let mut intensifier = std::mem::take(&mut self.intensifier);
            intensifier.intensify(&interaction, op, &auth, &mut rng, |r| self.send(r));
            self.intensifier = intensifier;
            self.mutant_rng = rng;
        }
        Ok(interaction.outcome)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), SessionError> {
    std::fs::write(dir.join(name), contents).map_err(|e| SessionError::Io(format!("{}: {e}", dir.join(name).display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text
}

/// Canonical rendering of a summary, shared by sessions and log replays.
pub fn summary_json(summary: &Summary) -> String {
    to_json(summary)
}

pub fn run_session(config: &SessionConfig) -> Result<SessionReport, SessionError> {
    config.validate()?;
    let auth = config.resolved_headers()?;
    let (api, backend, emitted_spec) = open_target(config)?;

    let mut generator = InputGenerator::new(config.epsilon);
    if let Some(path) = &config.llm_dictionary {
        let dict = load_dictionary_file(path).map_err(|e| SessionError::ConfigInvalid(e.to_string()))?;
        generator.dictionaries.set_llm(dict);
    } else if let Some(url) = &config.llm_endpoint {
        let client = CompletionClient::new(url.clone(), Duration::from_secs_f64(config.timeout_s));
        generator.dictionaries.set_llm(client.fetch_dictionary(&api.operations));
    }

    let log_path = config.out_dir.as_ref().map(|d| d.join(INTERACTIONS_FILE));
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| SessionError::Io(format!("{}: {e}", dir.display())))?;
    }
    let log = match &log_path {
        Some(p) => Some(InteractionLog::create(p).map_err(|e| SessionError::Io(e.to_string()))?),
        None => None,
    };

    let mut ppo = config.ppo.clone();
    ppo.seed = config.seed;
    let mut explorer = Explorer::new(api.len(), ppo, config.explorer, &mut stream(config.seed, POLICY_INIT_STREAM))?;
    let mut explorer_rng = stream(config.seed, EXPLORER_STREAM);
    let started = Instant::now();
    let mut run = Run {
        api: &api,
        backend,
        auth,
        generator,
        intensifier: Intensifier::new(config.mutant_cap),
        input_rng: stream(config.seed, INPUT_STREAM),
        mutant_rng: stream(config.seed, MUTANT_STREAM),
        budget: config.budget,
        deadline: config.time_budget_s.map(|t| started + Duration::from_secs_f64(t)),
        started,
        log,
        interactions: Vec::new(),
        timeline: MetricsTimeline::default(),
        faults: FaultRegistry::new(),
        covered: vec![false; api.len()],
        time_exhausted: false,
        io_error: None,
    };
    run.timeline.record(TimelineSample {
        elapsed_s: 0.0,
        requests: 0,
        ops_covered: 0,
        unique_faults: 0,
    });

    let mut episodes = Vec::new();
    let stop_reason = loop {
        let covered_at_start = run.all_covered();
        let mut episode = explorer.run_episode(&mut run, &mut explorer_rng);
        let loss = explorer.learn(&mut episode)?;
        episodes.push(EpisodeRecord {
            index: episodes.len(),
            steps: episode.buffer.len(),
            end: episode.end,
            total_reward: episode.rewards.iter().sum(),
            loss,
        });
        if let Some(e) = run.io_error.take() {
            return Err(SessionError::Io(e));
        }
        if episode.end == EpisodeEnd::BudgetExhausted {
            break if run.time_exhausted { StopReason::TimeBudget } else { StopReason::Budget };
        }
        if config.stop_when_covered && covered_at_start {
            break StopReason::Covered;
        }
    };

    let elapsed_s = started.elapsed().as_secs_f64();
    if let Some(log) = &mut run.log {
        log.flush().map_err(|e| SessionError::Io(e.to_string()))?;
    }
    let summary = summarize(&run.interactions, &api);
    let experience = run.generator.store.snapshot();
    if let Some(dir) = &config.out_dir {
        write_file(dir, SUMMARY_FILE, &summary_json(&summary))?;
        write_file(dir, TIMELINE_FILE, &run.timeline.to_csv())?;
        write_file(dir, EXPERIENCE_FILE, &to_json(&experience))?;
        write_file(dir, TRAINING_FILE, &to_json(&episodes))?;
        if let Some(yaml) = &emitted_spec {
            write_file(dir, SPEC_FILE, yaml)?;
        }
        if config.explorer == ExplorerKind::Ppo {
            Checkpoint::capture(explorer.params(), explorer.config())
                .save(&dir.join(POLICY_FILE))
                .map_err(SessionError::Rl)?;
        }
        let run_info = serde_json::json!({
            "elapsed_s": elapsed_s,
            "episodes": episodes.len(),
            "stop_reason": stop_reason,
            "config": config,
        });
        write_file(dir, RUN_FILE, &to_json(&run_info))?;
    }
    Ok(SessionReport {
        api: api.clone(),
        summary,
        timeline: run.timeline,
        faults: run.faults,
        interactions: run.interactions,
        log_path,
        episodes,
        experience,
        stop_reason,
        elapsed_s,
    })
}

/// Tally of `option` for one agent in an experience snapshot.
pub fn experience_tally(experience: &BTreeMap<String, BTreeMap<String, u64>>, agent: &str, option: &str) -> u64 {
    experience
        .get(agent)
        .and_then(|t| t.get(option))
        .copied()
        .unwrap_or(0)
}

/// Rebuilds the summary of a finished session from its log and document.
pub fn replay_summary(log_path: &Path, spec_path: &Path) -> Result<Summary, SessionError> {
    let bytes = std::fs::read(spec_path).map_err(|e| SessionError::ConfigInvalid(format!("{}: {e}", spec_path.display())))?;
    let api = parse_spec(&bytes, FormatHint::Auto).map_err(|e| SessionError::ConfigInvalid(format!("{}: {e}", spec_path.display())))?;
    let log = crate::interaction::read_log(log_path).map_err(|e| SessionError::ConfigInvalid(e.to_string()))?;
    Ok(summarize(&log, &api))
}
