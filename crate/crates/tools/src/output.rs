//! Writing command results: one CSV per table plus a JSON summary, all
//! stamped with the configuration hash, seed and tool version.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::ToolError;
use crate::table::ResultTable;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RSC_OUT_DIR";

/// Everything a command needs besides its own flags.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Upper bound on worker threads for sweeps.
    pub jobs: usize,
}

impl Context {
    /// `--out` wins over the environment, which wins over the config.
    pub fn new(config: RunConfig, seed: Option<u64>, out: Option<PathBuf>, jobs: Option<usize>) -> Self {
        let out_dir = out
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| config.output.directory.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let jobs = jobs
            .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
            .unwrap_or(1)
            .max(1);
        Context {
            seed: seed.unwrap_or(config.simulation.seed),
            config,
            out_dir,
            jobs,
        }
    }

    /// Runs `f` on a pool of at most `self.jobs` threads.
    pub fn pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, ToolError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| ToolError::Usage(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Tables and headline numbers produced by one command.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub command: String,
    /// Command-line choices that shaped the run beyond the config file.
    pub parameters: BTreeMap<String, String>,
    pub tables: Vec<(String, ResultTable)>,
    pub results: serde_json::Value,
}

impl Artifact {
    pub fn new(command: &str) -> Self {
        Artifact {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            tables: Vec::new(),
            results: serde_json::Value::Null,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }
}

/// The JSON file written next to the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, String>,
    pub tables: Vec<String>,
    pub results: serde_json::Value,
}

impl Summary {
    pub fn read(path: &Path) -> Result<Self, ToolError> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| ToolError::Format(format!("{}: {e}", path.display())))
    }
}

/// Writes the artifact's files and returns their paths.
pub fn write_artifact(ctx: &Context, art: Artifact) -> Result<Vec<PathBuf>, ToolError> {
    let dir = &ctx.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| ToolError::io(dir, e))?;
    let formats = &ctx.config.output.formats;
    let hash = ctx.config.hash();
    let mut written = Vec::new();
    let mut names = Vec::new();
    for (stem, mut table) in art.tables {
        table.set_meta("command", &art.command);
        table.set_meta("config_hash", &hash);
        table.set_meta("seed", ctx.seed);
        table.set_meta("version", VERSION);
        for (k, v) in &art.parameters {
            table.set_meta(k, v);
        }
        let name = format!("{stem}.csv");
        if formats.iter().any(|f| f == "csv") {
            let path = dir.join(&name);
            table.write_csv(&path)?;
            written.push(path);
            names.push(name);
        }
    }
    if formats.iter().any(|f| f == "json") {
        let summary = Summary {
            command: art.command.clone(),
            version: VERSION.to_string(),
            config_hash: hash,
            seed: ctx.seed,
            parameters: art.parameters,
            tables: names,
            results: art.results,
        };
        let path = dir.join(format!("{}.json", art.command));
        let mut text = serde_json::to_string_pretty(&summary).map_err(|e| ToolError::Format(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| ToolError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
