//! Command-line front end: configuration merge, run manifests, and one runner per stage.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagrid::io::{
    grid_paths, read_areas, read_bathymetry, read_grid, read_json, read_records, write_grid, write_json, write_records,
};
use crate::datagrid::{filter_records, grid_records, AreaTable, Bathymetry, GridConfig, GridSummary, QcConfig, Variable};
use crate::error::{OxyError, Result};
use crate::evalzone::{evaluate_external_field, kmeans, omz_stats, IdwConfig, OMZ_THRESHOLD};
use crate::oceangraph::export::{write_adjacency, write_edges_csv};
use crate::oceangraph::{build_snapshot, GraphConfig, GraphGrids, NodeKey};
use crate::oxynet::{ModelConfig, ModelParams, Normalization, Preset};
use crate::synthlab::{generate, SynthConfig};
use crate::training::trainer::{write_history, write_lines};
use crate::training::{crossfold, fold_split, prepare, reconstruct, train, zone_embeddings, Dataset, Split, TrainConfig};

pub const CONFIG_ENV: &str = "OXYRECON_CONFIG";
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const DEFAULT_SPLIT_SEED: u64 = 3;

/// Every stage's settings in one JSON document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Master seed; when set it overrides the per-stage seeds below.
    pub seed: Option<u64>,
    pub split_seed: Option<u64>,
    pub qc: QcConfig,
    pub grid: GridConfig,
    pub graph: GraphConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub idw: IdwConfig,
    pub paths: PathsConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub data: Option<PathBuf>,
    pub run: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub bathymetry: Option<PathBuf>,
    pub areas: Option<PathBuf>,
}

/// Seeds actually used by a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: Option<u64>,
    pub synth: u64,
    pub model: u64,
    pub train: u64,
    pub split: u64,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.synth.validate()?;
        let g = &self.grid;
        if g.lon_cells == 0 || g.lat_cells == 0 || g.depth_levels.is_empty() || g.year_end < g.year_start {
            return Err(OxyError::Config("grid needs positive extents and year_end >= year_start".into()));
        }
        if self.qc.year_end < self.qc.year_start {
            return Err(OxyError::Config("qc year_end precedes year_start".into()));
        }
        if !(self.idw.power > 0.0) || !(self.idw.radius_km > 0.0) {
            return Err(OxyError::Config("idw power and radius must be positive".into()));
        }
        Ok(())
    }

    /// Spreads a master seed over the stochastic stages.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.synth.seed = seed;
        self.model.seed = seed.wrapping_add(1);
        self.train.seed = seed.wrapping_add(2);
        self.split_seed = Some(seed.wrapping_add(3));
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed.unwrap_or(DEFAULT_SPLIT_SEED)
    }

    pub fn seeds(&self) -> SeedRecord {
        SeedRecord {
            master: self.seed,
            synth: self.synth.seed,
            model: self.model.seed,
            train: self.train.seed,
            split: self.split_seed(),
        }
    }

    /// SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Loads the config from `path`, else from `$OXYRECON_CONFIG`, else defaults.
pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let path = path.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = fs::read_to_string(&path).map_err(|e| OxyError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| OxyError::Config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one invocation, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seeds: SeedRecord,
    pub workers: usize,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path)?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

#[derive(Parser, Debug)]
#[command(name = "oxyrecon", version, about = "Sparse 4D dissolved-oxygen reconstruction")]
pub struct Cli {
    /// Pipeline config JSON; falls back to $OXYRECON_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every stochastic stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Quality-control raw records into an accepted set and a report.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid accepted records into a dataset directory.
    Grid {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export yearly graph snapshots of a dataset.
    Graph {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Year index; all years when omitted.
        #[arg(long)]
        year: Option<usize>,
    },
    /// Generate a synthetic Redfield-consistent dataset.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on one fold and write a checkpoint, history, and reconstruction.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        fold: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Architecture preset, e.g. full, vanilla_gnn, mlp_all.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Rebuild the complete field from a trained run.
    Reconstruct {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a field against observations.
    Evaluate {
        /// Grid stem of the field.
        #[arg(long)]
        field: PathBuf,
        /// Grid stem of the observations.
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster the learned zone embeddings of one year.
    Zones {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Year index; the last year when omitted.
        #[arg(long)]
        year: Option<usize>,
    },
    /// Per-year oxygen-minimum-zone share of a complete field.
    Omz {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = OMZ_THRESHOLD)]
        threshold: f64,
    },
    /// Four-fold cross-testing against the classical baselines.
    Crossfold {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Grid { .. } => "grid",
            Command::Graph { .. } => "graph",
            Command::Synth { .. } => "synth",
            Command::Train { .. } => "train",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Evaluate { .. } => "evaluate",
            Command::Zones { .. } => "zones",
            Command::Omz { .. } => "omz",
            Command::Crossfold { .. } => "crossfold",
        }
    }
}

/// Process exit status for an error: 1 configuration, 2 data, 3 numeric divergence.
pub fn exit_code(err: &OxyError) -> i32 {
    match err {
        OxyError::Config(_) | OxyError::InvalidWindow => 1,
        OxyError::Diverged { .. } | OxyError::InvalidLoss { .. } => 3,
        _ => 2,
    }
}

fn error_kind(code: i32) -> &'static str {
    match code {
        1 => "config",
        3 => "divergence",
        _ => "data",
    }
}

/// Parses `args`, runs the command, and returns the process exit status.
/// Failures print one JSON object to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => return report_error(1, &e.to_string()),
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => report_error(exit_code(&e), &e.to_string()),
    }
}

fn report_error(code: i32, message: &str) -> i32 {
    let body = serde_json::json!({ "error": error_kind(code), "code": code, "message": message.trim() });
    eprintln!("{body}");
    code
}

/// Runs one parsed invocation inside a pool of `--workers` threads.
pub fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed.or(config.seed) {
        config.apply_seed(seed);
    }
    let workers = cli.workers.unwrap_or_else(rayon::current_num_threads);
    if workers == 0 {
        return Err(OxyError::Config("--workers must be positive".into()));
    }
    apply_overrides(&mut config, &cli.command)?;
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| OxyError::Config(e.to_string()))?;
    let mut ctx = Context {
        config,
        workers,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    let command = cli.command;
    let out = pool.install(|| dispatch(&mut ctx, &command))?;
    ctx.write_manifest(command.name(), &out)
}

fn apply_overrides(config: &mut PipelineConfig, command: &Command) -> Result<()> {
    match command {
        Command::Train {
            fold,
            epochs,
            lambda,
            preset,
            ..
        } => {
            if let Some(f) = fold {
                config.train.fold = *f;
            }
            if let Some(e) = epochs {
                config.train.epochs = *e;
            }
            if let Some(l) = lambda {
                config.train.lambda = *l;
            }
            if let Some(p) = preset {
                let preset: Preset = p.parse()?;
                config.model = config.model.clone().with_preset(preset);
            }
        }
        Command::Crossfold { epochs, lambda, .. } => {
            if let Some(e) = epochs {
                config.train.epochs = *e;
            }
            if let Some(l) = lambda {
                config.train.lambda = *l;
            }
        }
        _ => {}
    }
    Ok(())
}

struct Context {
    config: PipelineConfig,
    workers: usize,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
}

impl Context {
    fn input(&mut self, path: &Path) -> Result<()> {
        let d = digest_file(path).map_err(|e| OxyError::Data(format!("{}: {e}", path.display())))?;
        self.inputs.push(d);
        Ok(())
    }

    fn input_grid(&mut self, stem: &Path) -> Result<()> {
        let (json, bin) = grid_paths(stem);
        self.input(&json)?;
        self.input(&bin)
    }

    fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    fn write_manifest(&self, command: &str, out: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.config.hash(),
            seeds: self.config.seeds(),
            workers: self.workers,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        };
        write_json(&out.join(MANIFEST_FILE), &manifest)
    }

    fn areas(&mut self) -> Result<AreaTable> {
        match self.config.paths.areas.clone() {
            Some(p) => {
                self.input(&p)?;
                read_areas(&p)
            }
            None => Ok(AreaTable::default()),
        }
    }
}

fn required(path: Option<&PathBuf>, fallback: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    path.or(fallback)
        .cloned()
        .ok_or_else(|| OxyError::Config(format!("missing --{what} (or paths.{what} in the config)")))
}

fn out_dir(ctx: &Context, out: Option<&PathBuf>) -> Result<PathBuf> {
    let dir = required(out, ctx.config.paths.out.as_ref(), "out")?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn data_dir(ctx: &Context, data: Option<&PathBuf>) -> Result<PathBuf> {
    required(data, ctx.config.paths.data.as_ref(), "data")
}

fn run_dir(ctx: &Context, run: Option<&PathBuf>) -> Result<PathBuf> {
    required(run, ctx.config.paths.run.as_ref(), "run")
}

/// Runs the command and returns the directory that receives the manifest.
fn dispatch(ctx: &mut Context, command: &Command) -> Result<PathBuf> {
    match command {
        Command::Ingest { input, out } => {
            let out = out_dir(ctx, out.as_ref())?;
            cmd_ingest(ctx, input, &out)?;
            Ok(out)
        }
        Command::Grid { input, out } => {
            let out = out_dir(ctx, out.as_ref())?;
            cmd_grid(ctx, input, &out)?;
            Ok(out)
        }
        Command::Graph { data, out, year } => {
            let data = data_dir(ctx, data.as_ref())?;
            let out = out_dir(ctx, out.as_ref())?;
            cmd_graph(ctx, &data, &out, *year)?;
            Ok(out)
        }
        Command::Synth { out } => {
            let out = out_dir(ctx, out.as_ref())?;
            cmd_synth(ctx, &out)?;
            Ok(out)
        }
        Command::Train { data, out, .. } => {
            let data = data_dir(ctx, data.as_ref())?;
            let out = out_dir(ctx, out.as_ref())?;
            cmd_train(ctx, &data, &out)?;
            Ok(out)
        }
        Command::Reconstruct { data, run, out } => {
            let data = data_dir(ctx, data.as_ref())?;
            let run = run_dir(ctx, run.as_ref())?;
            let out = out_dir(ctx, out.as_ref())?;
            cmd_reconstruct(ctx, &data, &run, &out)?;
            Ok(out)
        }
        Command::Evaluate { field, obs, out } => {
            let out = out_dir(ctx, out.as_ref())?;
            cmd_evaluate(ctx, field, obs, &out)?;
            Ok(out)
        }
        Command::Zones {
            data,
            run,
            out,
            k,
            year,
        } => {
            let data = data_dir(ctx, data.as_ref())?;
            let run = run_dir(ctx, run.as_ref())?;
            let out = out_dir(ctx, out.as_ref())?;
            cmd_zones(ctx, &data, &run, &out, *k, *year)?;
            Ok(out)
        }
        Command::Omz { field, out, threshold } => {
            let out = out_dir(ctx, out.as_ref())?;
            cmd_omz(ctx, field, &out, *threshold)?;
            Ok(out)
        }
        Command::Crossfold { data, out, .. } => {
            let data = data_dir(ctx, data.as_ref())?;
            let out = out_dir(ctx, out.as_ref())?;
            cmd_crossfold(ctx, &data, &out)?;
            Ok(out)
        }
    }
}

pub const BATHYMETRY_FILE: &str = "bathymetry.json";
pub const AREAS_FILE: &str = "areas.json";
pub const TRUTH_STEM: &str = "do_truth";

/// Writes a dataset directory: one grid per variable plus geography.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let stem = dir.join(Variable::Oxygen.file_stem());
    write_grid(&stem, &dataset.observed)?;
    written.push(stem);
    for g in dataset.factors.iter().flatten() {
        let stem = dir.join(g.variable.file_stem());
        write_grid(&stem, g)?;
        written.push(stem);
    }
    write_json(&dir.join(BATHYMETRY_FILE), &dataset.bathymetry)?;
    write_json(&dir.join(AREAS_FILE), &dataset.areas)?;
    written.push(dir.join(BATHYMETRY_FILE));
    written.push(dir.join(AREAS_FILE));
    Ok(written)
}

/// Reads a dataset directory; factor grids are optional.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let observed = read_grid(&dir.join(Variable::Oxygen.file_stem()))?;
    let mut factors = Vec::with_capacity(Variable::FACTORS.len());
    for v in Variable::FACTORS {
        let stem = dir.join(v.file_stem());
        factors.push(if grid_paths(&stem).0.exists() { Some(read_grid(&stem)?) } else { None });
    }
    let bathymetry = read_bathymetry(&dir.join(BATHYMETRY_FILE))?;
    let areas_path = dir.join(AREAS_FILE);
    let areas = if areas_path.exists() { read_areas(&areas_path)? } else { AreaTable::default() };
    let dataset = Dataset {
        observed,
        factors,
        bathymetry,
        areas,
    };
    dataset.check()?;
    Ok(dataset)
}

fn load_dataset(ctx: &mut Context, dir: &Path) -> Result<Dataset> {
    ctx.input_grid(&dir.join(Variable::Oxygen.file_stem()))?;
    for v in Variable::FACTORS {
        let stem = dir.join(v.file_stem());
        if grid_paths(&stem).0.exists() {
            ctx.input_grid(&stem)?;
        }
    }
    ctx.input(&dir.join(BATHYMETRY_FILE))?;
    read_dataset(dir)
}

fn cmd_ingest(ctx: &mut Context, input: &Path, out: &Path) -> Result<()> {
    ctx.input(input)?;
    let areas = ctx.areas()?;
    let records = read_records(input)?;
    let (kept, report) = filter_records(records, &ctx.config.qc, &areas);
    let accepted = out.join("accepted.csv");
    write_records(&accepted, &kept)?;
    let report_path = out.join("qc_report.json");
    write_json(&report_path, &report)?;
    ctx.output(&accepted);
    ctx.output(&report_path);
    Ok(())
}

fn cmd_grid(ctx: &mut Context, input: &Path, out: &Path) -> Result<()> {
    ctx.input(input)?;
    let records = read_records(input)?;
    let cfg = ctx.config.grid.clone();
    let bathymetry = match ctx.config.paths.bathymetry.clone() {
        Some(p) => {
            ctx.input(&p)?;
            read_bathymetry(&p)?
        }
        None => Bathymetry::flat(cfg.lon_cells, cfg.lat_cells, -1.0e4),
    };
    let areas = ctx.areas()?;
    let (observed, oxygen_summary) = grid_records(&records, Variable::Oxygen, &cfg, &bathymetry)?;
    let mut summaries: Vec<(Variable, GridSummary)> = vec![(Variable::Oxygen, oxygen_summary)];
    let mut factors = Vec::with_capacity(Variable::FACTORS.len());
    for v in Variable::FACTORS {
        let (g, s) = grid_records(&records, v, &cfg, &bathymetry)?;
        factors.push((s.cells_observed > 0).then_some(g));
        summaries.push((v, s));
    }
    let dataset = Dataset {
        observed,
        factors,
        bathymetry,
        areas,
    };
    for p in write_dataset(out, &dataset)? {
        ctx.output(&p);
    }
    let summary: serde_json::Map<String, serde_json::Value> = summaries
        .into_iter()
        .map(|(v, s)| Ok((v.file_stem().to_string(), serde_json::to_value(s)?)))
        .collect::<Result<_>>()?;
    let path = out.join("grid_summary.json");
    write_json(&path, &summary)?;
    ctx.output(&path);
    Ok(())
}

#[derive(Serialize)]
struct SnapshotSummary {
    year_index: usize,
    year: i32,
    nodes: usize,
    edges: usize,
}

fn cmd_graph(ctx: &mut Context, data: &Path, out: &Path, year: Option<usize>) -> Result<()> {
    let dataset = load_dataset(ctx, data)?;
    let dims = dataset.observed.dims;
    let years: Vec<usize> = match year {
        Some(t) if t >= dims.time => return Err(OxyError::Config(format!("year index {t} outside 0..{}", dims.time))),
        Some(t) => vec![t],
        None => (0..dims.time).collect(),
    };
    let mut grids = GraphGrids::new(&dataset.observed, &dataset.bathymetry);
    if let (Some(Some(t)), Some(Some(s))) = (dataset.factors.first(), dataset.factors.get(1)) {
        grids = grids.with_physics(t, s);
    }
    let mut summary = Vec::new();
    for t in years {
        let snap = build_snapshot(&grids, &ctx.config.graph, t)?;
        let edges = out.join(format!("edges_t{t}.csv"));
        write_edges_csv(&edges, &snap)?;
        let stem = out.join(format!("adjacency_t{t}"));
        write_adjacency(&stem, &snap)?;
        ctx.output(&edges);
        ctx.output(&stem);
        summary.push(SnapshotSummary {
            year_index: t,
            year: dataset.observed.year(t),
            nodes: snap.node_count(),
            edges: snap.edges.len(),
        });
    }
    let path = out.join("graph_summary.json");
    write_json(&path, &summary)?;
    ctx.output(&path);
    Ok(())
}

fn cmd_synth(ctx: &mut Context, out: &Path) -> Result<()> {
    let fixture = generate(&ctx.config.synth)?;
    let dataset = Dataset::from_fixture(&fixture);
    for p in write_dataset(out, &dataset)? {
        ctx.output(&p);
    }
    let truth = out.join(TRUTH_STEM);
    write_grid(&truth, &fixture.do_truth)?;
    ctx.output(&truth);
    Ok(())
}

/// Checkpoint metadata needed to rebuild a trained model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub norm: Normalization,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub diverged: Option<usize>,
}

pub const CHECKPOINT_STEM: &str = "checkpoint";
pub const SPLIT_FILE: &str = "split.json";
pub const FIELD_STEM: &str = "field";
pub const TEST_OBS_STEM: &str = "test_obs";

fn cmd_train(ctx: &mut Context, data: &Path, out: &Path) -> Result<()> {
    let dataset = load_dataset(ctx, data)?;
    let cfg = ctx.config.clone();
    let split = fold_split(&dataset, cfg.train.fold, cfg.split_seed(), cfg.train.val_fraction)?;
    let prepared = prepare(&dataset, &split.train, &cfg.graph, None)?;
    let result = train(&dataset, &prepared, &split.train, &split.val, &cfg.model, &cfg.train)?;

    let meta = CheckpointMeta {
        model: result.model.clone(),
        graph: cfg.graph.clone(),
        train: cfg.train.clone(),
        norm: result.norm.clone(),
        best_epoch: result.best_epoch,
        epochs_run: result.epochs_run,
        diverged: result.diverged,
    };
    let stem = out.join(CHECKPOINT_STEM);
    tensorad::checkpoint::save(&stem, &result.params.named(), serde_json::to_value(&meta)?)?;
    ctx.output(&stem);

    let history = out.join("history.csv");
    write_history(&history, &result.history)?;
    let split_path = out.join(SPLIT_FILE);
    write_json(&split_path, &split)?;
    let mut keep = vec![false; dataset.observed.dims.len()];
    for &c in &split.test {
        keep[c] = true;
    }
    let test_obs = out.join(TEST_OBS_STEM);
    write_grid(&test_obs, &dataset.observed.masked_by(&keep))?;
    for p in [&history, &split_path, &test_obs] {
        ctx.output(p);
    }
    if let Some(epoch) = result.diverged {
        return Err(OxyError::Diverged { epoch });
    }
    let field = reconstruct(&prepared, &result.params, &result.model, &result.norm)?;
    let field_stem = out.join(FIELD_STEM);
    write_grid(&field_stem, &field)?;
    ctx.output(&field_stem);
    Ok(())
}

/// Loads a trained run: parameters, metadata, and the split it was trained on.
pub fn load_run(run: &Path) -> Result<(ModelParams, CheckpointMeta, Split)> {
    let (manifest, named) = tensorad::checkpoint::load(&run.join(CHECKPOINT_STEM))?;
    let meta: CheckpointMeta = serde_json::from_value(manifest.meta)?;
    let params = ModelParams::from_named(named);
    params.check_layout(&meta.model)?;
    let split: Split = read_json(&run.join(SPLIT_FILE))?;
    Ok((params, meta, split))
}

fn load_run_inputs(ctx: &mut Context, run: &Path) -> Result<(ModelParams, CheckpointMeta, Split)> {
    ctx.input(&tensorad::checkpoint::manifest_path(&run.join(CHECKPOINT_STEM)))?;
    ctx.input(&tensorad::checkpoint::blob_path(&run.join(CHECKPOINT_STEM)))?;
    ctx.input(&run.join(SPLIT_FILE))?;
    load_run(run)
}

fn cmd_reconstruct(ctx: &mut Context, data: &Path, run: &Path, out: &Path) -> Result<()> {
    let dataset = load_dataset(ctx, data)?;
    let (params, meta, split) = load_run_inputs(ctx, run)?;
    let prepared = prepare(&dataset, &split.train, &meta.graph, Some(meta.norm.clone()))?;
    let field = reconstruct(&prepared, &params, &meta.model, &meta.norm)?;
    let stem = out.join(FIELD_STEM);
    write_grid(&stem, &field)?;
    ctx.output(&stem);
    Ok(())
}

fn cmd_evaluate(ctx: &mut Context, field: &Path, obs: &Path, out: &Path) -> Result<()> {
    ctx.input_grid(field)?;
    ctx.input_grid(obs)?;
    let areas = ctx.areas()?;
    let field = read_grid(field)?;
    let obs = read_grid(obs)?;
    let report = evaluate_external_field(&field, &obs, &areas)?;
    let metrics = out.join("metrics.json");
    write_json(&metrics, &report.pooled)?;
    let full = out.join("report.json");
    write_json(&full, &report)?;
    let groups = out.join("report_groups.csv");
    write_lines(&groups, &report.grouped_csv())?;
    for p in [&metrics, &full, &groups] {
        ctx.output(p);
    }
    Ok(())
}

fn cmd_zones(ctx: &mut Context, data: &Path, run: &Path, out: &Path, k: usize, year: Option<usize>) -> Result<()> {
    let dataset = load_dataset(ctx, data)?;
    let (params, meta, split) = load_run_inputs(ctx, run)?;
    let prepared = prepare(&dataset, &split.train, &meta.graph, Some(meta.norm.clone()))?;
    let dims = prepared.input.dims;
    let t = year.unwrap_or(dims.time - 1);
    let snap = prepared
        .snapshots
        .get(t)
        .ok_or_else(|| OxyError::Config(format!("year index {t} outside 0..{}", dims.time)))?;
    let keys: Vec<NodeKey> = snap.nodes.clone();
    let cells: Vec<usize> = keys.iter().map(|k| k.flat(dims)).collect();
    let points = zone_embeddings(&prepared, &params, &meta.model, &cells)?;
    let zones = kmeans(&keys, &points, k, meta.model.seed)?;
    let path = out.join("zones.csv");
    zones.write_csv(&path)?;
    ctx.output(&path);
    Ok(())
}

fn cmd_omz(ctx: &mut Context, field: &Path, out: &Path, threshold: f64) -> Result<()> {
    ctx.input_grid(field)?;
    let bathymetry = match ctx.config.paths.bathymetry.clone() {
        Some(p) => {
            ctx.input(&p)?;
            Some(read_bathymetry(&p)?)
        }
        None => None,
    };
    let field = read_grid(field)?;
    let report = omz_stats(&field, bathymetry.as_ref(), threshold)?;
    let mut lines = vec!["year,rho,omz_columns,ocean_columns".to_string()];
    lines.extend(
        report
            .years
            .iter()
            .map(|y| format!("{},{:.6},{},{}", y.year, y.rho, y.omz_columns, y.ocean_columns)),
    );
    let csv = out.join("omz.csv");
    write_lines(&csv, &lines)?;
    let mask = out.join("omz_mask");
    write_grid(&mask, &report.mask)?;
    ctx.output(&csv);
    ctx.output(&mask);
    Ok(())
}

fn cmd_crossfold(ctx: &mut Context, data: &Path, out: &Path) -> Result<()> {
    let dataset = load_dataset(ctx, data)?;
    let cfg = ctx.config.clone();
    let (report, _) = crossfold(&dataset, &cfg.graph, &cfg.model, &cfg.train, cfg.split_seed())?;
    let folds = out.join("crossfold.csv");
    write_lines(&folds, &report.folds_csv())?;
    let table = out.join("table1.csv");
    write_lines(&table, &report.table1_csv())?;
    let json = out.join("folds.json");
    write_json(&json, &report)?;
    for p in [&folds, &table, &json] {
        ctx.output(p);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = serde_json::from_str::<PipelineConfig>(r#"{"graph": {"delta": 1}, "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let nested = serde_json::from_str::<PipelineConfig>(r#"{"train": {"lamda": 0.1}}"#);
        assert!(nested.is_err());
    }

    #[test]
    fn master_seed_reaches_every_stage() {
        let mut c = PipelineConfig::default();
        c.apply_seed(40);
        let s = c.seeds();
        assert_eq!((s.master, s.synth, s.model, s.train, s.split), (Some(40), 40, 41, 42, 43));
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_code(&OxyError::Config("x".into())), 1);
        assert_eq!(exit_code(&OxyError::Dims([1; 4], [2; 4])), 2);
        assert_eq!(exit_code(&OxyError::Diverged { epoch: 3 }), 3);
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.train.lambda = 0.5;
        assert_ne!(a.hash(), b.hash());
    }
}
