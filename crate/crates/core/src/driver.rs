//! Glue for the whole pipeline: read, parse, link, validate, transform,
//! verify.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::explore::{explore, ExploreConfig, ExploreError, Verdict};
use crate::ir::{link_with, parse_module, validate, Diagnostic, LinkError, Module, ParseError, Program};
use crate::passes::{run_pipeline, PassConfig, PassError, PassReport};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("{} validation error(s):\n{}", .0.len(), render(.0))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Pass(#[from] PassError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

fn render(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Module name used in source locations: the file name without directories.
pub fn module_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn read_modules<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Module>, DriverError> {
    paths
        .iter()
        .map(|p| {
            let p = p.as_ref();
            let text = std::fs::read_to_string(p).map_err(|source| DriverError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(parse_module(&module_name(p), &text)?)
        })
        .collect()
}

pub fn parse_sources(sources: &[(&str, &str)]) -> Result<Vec<Module>, DriverError> {
    sources
        .iter()
        .map(|(name, text)| Ok(parse_module(name, text)?))
        .collect()
}

/// Links and validates modules, returning the untransformed program.
pub fn link_checked(modules: &[Module], config: &PassConfig) -> Result<Program, DriverError> {
    let program = link_with(modules, &config.intercept_table)?;
    let diags = validate(&program);
    if !diags.is_empty() {
        return Err(DriverError::Invalid(diags));
    }
    Ok(program)
}

/// Links, validates and transforms.
pub fn build(modules: &[Module], config: &PassConfig) -> Result<(Program, PassReport), DriverError> {
    let program = link_checked(modules, config)?;
    Ok(run_pipeline(&program, config)?)
}

/// Runs everything on in-memory sources given as `(file name, text)`.
pub fn verify_sources(
    sources: &[(&str, &str)],
    passes: &PassConfig,
    explore_config: &ExploreConfig,
) -> Result<(Verdict, PassReport), DriverError> {
    let (program, report) = build(&parse_sources(sources)?, passes)?;
    Ok((explore(&program, explore_config)?, report))
}

/// Runs everything on files.
pub fn verify_files<P: AsRef<Path>>(
    paths: &[P],
    passes: &PassConfig,
    explore_config: &ExploreConfig,
) -> Result<(Verdict, PassReport), DriverError> {
    let (program, report) = build(&read_modules(paths)?, passes)?;
    Ok((explore(&program, explore_config)?, report))
}
