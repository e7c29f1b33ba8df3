#![allow(dead_code)]

use std::fs;
use std::path::Path;

use cim_cli::workspace::{Manifest, Workspace};
use cim_cli::Cli;
use cim_core::fixtures::olympic;
use clap::Parser;
use tempfile::TempDir;

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cim<I: AsRef<str>>(args: impl IntoIterator<Item = I>) -> Output {
    let argv: Vec<String> = std::iter::once("cim".to_owned())
        .chain(args.into_iter().map(|a| a.as_ref().to_owned()))
        .collect();
    let cli = Cli::try_parse_from(argv).expect("valid arguments");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cim_cli::run(cli, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn in_workspace<I: AsRef<str>>(dir: &Path, args: impl IntoIterator<Item = I>) -> Output {
    let mut all = vec!["--workspace".to_owned(), dir.display().to_string()];
    all.extend(args.into_iter().map(|a| a.as_ref().to_owned()));
    cim(all)
}

/// A temporary copy of the Olympic workspace with `scale` generated facts.
pub fn olympic_workspace(scale: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let documents = [
        olympic::CDL_XML.as_bytes(),
        olympic::SDL_XML.as_bytes(),
        olympic::MDL_XML.as_bytes(),
    ];
    let data = olympic::generate_data(olympic::DEFAULT_SEED, scale);
    Workspace::write(dir.path(), documents, &data, &Manifest::default()).unwrap();
    dir
}

pub fn edit(dir: &Path, file: &str, from: &str, to: &str) {
    let path = dir.join(file);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains(from), "{file} has no {from}");
    fs::write(&path, text.replacen(from, to, 1)).unwrap();
}

/// The committed Olympic fixture workspace.
pub fn fixture_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/olympic")
}
