//! Workspaces: a directory holding a `cim.toml` manifest, the three model
//! documents and a directory of CSV files, one per table.

use std::fs;
use std::path::{Path, PathBuf};

use cim_core::fixtures::Dataset;
use cim_core::model::{CdlModel, MdlModel, SdlModel};
use cim_core::storage::Store;
use cim_core::xml::{parse_cdl, parse_mdl, parse_sdl, ParseMode};
use cim_core::{Warehouse, WarehouseOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MANIFEST_FILE: &str = "cim.toml";

/// The manifest. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub cdl: PathBuf,
    pub sdl: PathBuf,
    pub mdl: PathBuf,
    #[serde(default = "default_data")]
    pub data: PathBuf,
    /// Snapshot every view at load time.
    #[serde(default)]
    pub materialize: bool,
}

fn default_data() -> PathBuf {
    PathBuf::from("data")
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            cdl: "cdl.xml".into(),
            sdl: "sdl.xml".into(),
            mdl: "mdl.xml".into(),
            data: default_data(),
            materialize: false,
        }
    }
}

/// Failures reading a workspace. All of them are environment failures
/// (exit code 2) rather than model diagnostics.
#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        source: cim_core::storage::StorageError,
    },
}

#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
    pub manifest: Manifest,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io {
        path: path.to_owned(),
        source,
    }
}

impl Workspace {
    /// Opens a workspace from its directory or its manifest file.
    pub fn open(path: &Path) -> Result<Self, WorkspaceError> {
        let file = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_owned()
        };
        let text = fs::read_to_string(&file).map_err(io(&file))?;
        let manifest: Manifest = toml::from_str(&text).map_err(|e| WorkspaceError::Manifest {
            path: file.clone(),
            message: e.to_string(),
        })?;
        let root = file.parent().map(Path::to_owned).unwrap_or_default();
        Ok(Workspace { root, manifest })
    }

    pub fn path(&self, relative: &Path) -> PathBuf {
        self.root.join(relative)
    }

    fn read(&self, relative: &Path) -> Result<(PathBuf, Vec<u8>), WorkspaceError> {
        let path = self.path(relative);
        let bytes = fs::read(&path).map_err(io(&path))?;
        Ok((path, bytes))
    }

    pub fn load_models(&self) -> Result<(CdlModel, SdlModel, MdlModel), WorkspaceError> {
        let parse_err = |path: PathBuf| {
            move |e: cim_core::xml::ParseError| WorkspaceError::Parse {
                path,
                message: e.to_string(),
            }
        };
        let (p, b) = self.read(&self.manifest.cdl)?;
        let cdl = parse_cdl(&b, ParseMode::Strict).map_err(parse_err(p))?;
        let (p, b) = self.read(&self.manifest.sdl)?;
        let sdl = parse_sdl(&b, ParseMode::Strict).map_err(parse_err(p))?;
        let (p, b) = self.read(&self.manifest.mdl)?;
        let mdl = parse_mdl(&b, ParseMode::Strict).map_err(parse_err(p))?;
        Ok((cdl, sdl, mdl))
    }

    /// Loads `<data>/<table>.csv` for every table; a missing file is an
    /// empty table.
    pub fn load_store(&self, sdl: &SdlModel) -> Result<Store, WorkspaceError> {
        let dir = self.path(&self.manifest.data);
        let mut store = Store::new();
        for table in sdl.tables() {
            let path = dir.join(format!("{}.csv", table.name));
            let result = match fs::File::open(&path) {
                Ok(f) => store.load_table(table, std::io::BufReader::new(f)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => store.load_rows(table, Vec::new()),
                Err(e) => return Err(io(&path)(e)),
            };
            result.map_err(|source| WorkspaceError::Data {
                path: path.clone(),
                source,
            })?;
        }
        Ok(store)
    }

    /// Writes the CDL, SDL and MDL documents, the data and the manifest as a
    /// new workspace in `dir`.
    pub fn write(
        dir: &Path,
        documents: [&[u8]; 3],
        data: &Dataset,
        manifest: &Manifest,
    ) -> Result<Workspace, WorkspaceError> {
        let data_dir = dir.join(&manifest.data);
        fs::create_dir_all(&data_dir).map_err(io(&data_dir))?;
        let targets = [&manifest.cdl, &manifest.sdl, &manifest.mdl];
        for (bytes, target) in documents.iter().zip(targets) {
            let path = dir.join(target);
            fs::write(&path, bytes).map_err(io(&path))?;
        }
        for (file, text) in data.csv_files() {
            let path = data_dir.join(file);
            fs::write(&path, text).map_err(io(&path))?;
        }
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(io(&path))?;
        Workspace::open(dir)
    }
}

/// Failures building a warehouse from a workspace.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error("{0}")]
    Invalid(cim_core::warehouse::WarehouseError),
}

impl Workspace {
    pub fn load_warehouse(&self) -> Result<Warehouse, LoadError> {
        let (cdl, sdl, mdl) = self.load_models()?;
        let store = self.load_store(&sdl)?;
        let options = WarehouseOptions {
            materialize: self.manifest.materialize,
        };
        Warehouse::new(cdl, sdl, mdl, store, options).map_err(|e| match e {
            cim_core::warehouse::WarehouseError::Storage(source) => LoadError::Workspace(WorkspaceError::Data {
                path: self.path(&self.manifest.data),
                source,
            }),
            e => LoadError::Invalid(e),
        })
    }
}
