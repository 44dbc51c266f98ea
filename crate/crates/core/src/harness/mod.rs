//! Experiment runner: configuration, the experiments themselves, CSV and
//! SVG outputs, and threshold extraction.

pub mod config;
mod experiments;
pub mod output;
pub mod plot;
pub mod threshold;

use std::path::{Path, PathBuf};

pub use config::{ConfigOverrides, EstimatorKind, ExperimentConfig, ExperimentKind, NoiseConfig};
pub use experiments::INTERLEAVE_DEPTH;
pub use output::{canonical_order, read_csv, write_csv, ResultRow};
pub use plot::{emit_plot, render_svg, PlotStyle};
pub use threshold::{extract_crossing, extract_threshold, log_interpolate};

use crate::detect::SymbolAlphabet;
use crate::error::Result;

/// Runs the configured experiment and returns its rows in canonical order.
pub fn run(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let ctx = experiments::Context {
        config,
        hash: config.hash(),
        alphabet: SymbolAlphabet::qpsk(),
        noise: config.noise_spec()?,
    };
    let mut rows = experiments::run_experiment(&ctx)?;
    canonical_order(&mut rows);
    Ok(rows)
}

/// Plot style of an experiment's main metric.
pub fn plot_style(kind: ExperimentKind) -> PlotStyle {
    match kind {
        ExperimentKind::UplinkRate | ExperimentKind::DownlinkRate | ExperimentKind::MismatchedRate => {
            PlotStyle::Linear
        }
        _ => PlotStyle::LogY,
    }
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    /// `None` when there were no rows to plot.
    pub svg: Option<PathBuf>,
    pub config: PathBuf,
}

/// Writes `<experiment>.csv`, `<experiment>.svg` and the resolved
/// configuration as `<experiment>.config.json` into `dir`.
pub fn write_outputs(config: &ExperimentConfig, rows: &[ResultRow], dir: &Path) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir)?;
    let name = config.experiment.name();
    let csv = dir.join(format!("{name}.csv"));
    write_csv(rows, std::fs::File::create(&csv)?)?;
    let svg_path = dir.join(format!("{name}.svg"));
    let title = format!("{name} (M={}, K={}, seed {})", config.m, config.k, config.seed);
    let svg = emit_plot(rows, &title, plot_style(config.experiment), &svg_path)?.then_some(svg_path);
    let config_path = dir.join(format!("{name}.config.json"));
    let json = serde_json::to_string_pretty(config).map_err(|e| crate::error::Error::Io(e.to_string()))?;
    std::fs::write(&config_path, json + "\n")?;
    Ok(OutputPaths {
        csv,
        svg,
        config: config_path,
    })
}
