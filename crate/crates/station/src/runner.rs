//! Batch runs: load a scenario, apply overrides, simulate to the end and
//! write the output directory.

use std::path::{Path, PathBuf};

use asv_core::env::EnvironmentField;

use crate::envgrid;
use crate::metrics::{self, RunMetrics};
use crate::scenario::Scenario;
use crate::world::{build_depth_grid, Sinks, World, WorldError, DEPTH_GRID_FILE, METRICS_FILE};

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub duration: Option<f64>,
    pub seed: Option<u64>,
    pub time_scale: Option<f64>,
    /// Cell size for the exported depth grid.
    pub grid_cell: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("depth grid: {0}")]
    Grid(String),
    #[error("{path}: {message}")]
    Log { path: PathBuf, message: String },
}

pub fn load(path: &Path, o: &Overrides) -> Result<(Scenario, EnvironmentField), RunError> {
    let (mut s, base) = Scenario::load(path).map_err(WorldError::from)?;
    if let Some(d) = o.duration {
        s.duration = d;
    }
    if let Some(seed) = o.seed {
        s.seed = seed;
    }
    if let Some(ts) = o.time_scale {
        s.time_scale = ts;
    }
    if let Some(c) = o.grid_cell {
        s.output.depth_grid_cell = Some(c);
    }
    s.validate().map_err(WorldError::from)?;
    let env = s.environment(&base).map_err(WorldError::from)?;
    Ok((s, env))
}

/// Output of a finished batch run.
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub world: World,
}

/// Simulates to the end. With `out_dir`, writes the event, sample and
/// track logs, `metrics.json` and (when configured) the depth grid.
pub fn run(
    scenario: Scenario,
    env: EnvironmentField,
    out_dir: Option<&Path>,
) -> Result<RunOutcome, RunError> {
    let sinks = match out_dir {
        Some(d) => Sinks::files(d)?,
        None => Sinks::none(),
    };
    let grid_cell = scenario.output.depth_grid_cell;
    let mut world = World::new(scenario, env, sinks)?;
    world.run_to_end()?;
    let metrics = world.finish()?;
    if let Some(dir) = out_dir {
        write_products(&world, &metrics, dir, grid_cell)?;
    }
    Ok(RunOutcome { metrics, world })
}

pub fn write_products(
    world: &World,
    metrics: &RunMetrics,
    dir: &Path,
    grid_cell: Option<f64>,
) -> Result<(), RunError> {
    std::fs::write(dir.join(METRICS_FILE), metrics.to_json() + "\n")?;
    if let Some(cell) = grid_cell {
        let grid =
            build_depth_grid(world.samples(), cell).map_err(|e| RunError::Grid(e.to_string()))?;
        if !grid.is_empty() {
            let env = grid
                .to_env_grid()
                .map_err(|e| RunError::Grid(e.to_string()))?;
            envgrid::write_file(&dir.join(DEPTH_GRID_FILE), &env)
                .map_err(|e| RunError::Grid(e.to_string()))?;
        }
    }
    Ok(())
}

fn read_log(path: &Path) -> Result<crate::eventlog::ReadLog, RunError> {
    let bytes = std::fs::read(path)?;
    crate::eventlog::read_log(&bytes).map_err(|e| RunError::Log {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Metrics recomputed from an event log, plus any truncation warning.
pub fn replay(path: &Path) -> Result<(RunMetrics, Option<String>), RunError> {
    let log = read_log(path)?;
    Ok((metrics::from_records(&log.records), log.warning))
}

/// The telemetry stream of a logged session, framed as on `/stream`.
pub fn replay_stream(path: &Path) -> Result<(Vec<u8>, Option<String>), RunError> {
    let log = read_log(path)?;
    let mut out = Vec::new();
    for r in &log.records {
        if let crate::eventlog::Body::Downlink(f) = &r.body {
            out.extend_from_slice(&crate::server::stream_chunk(f));
        }
    }
    Ok((out, log.warning))
}
