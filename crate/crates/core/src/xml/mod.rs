//! XML serialization of CDL, SDL and MDL documents.
//!
//! Element and attribute spellings are fixed by `schema/cdm.xsd` at the
//! repository root. Key/keyref style constraints are not checked here; run
//! the validators in [`crate::model::validate`] on the parsed models.

mod dom;
mod read;
mod write;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{CdlModel, MdlModel, SdlModel};

pub use dom::Position;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DocumentKind {
    Cdl,
    Sdl,
    Mdl,
}

impl DocumentKind {
    pub fn root_element(self) -> &'static str {
        match self {
            DocumentKind::Cdl => "cdl",
            DocumentKind::Sdl => "sdl",
            DocumentKind::Mdl => "mdl",
        }
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocumentKind::Cdl => "CDL",
            DocumentKind::Sdl => "SDL",
            DocumentKind::Mdl => "MDL",
        })
    }
}

impl FromStr for DocumentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cdl" => Ok(DocumentKind::Cdl),
            "sdl" => Ok(DocumentKind::Sdl),
            "mdl" => Ok(DocumentKind::Mdl),
            _ => Err(format!("unknown document kind `{s}`")),
        }
    }
}

/// Whether unknown elements and attributes are rejected or skipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("XML syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("document is not valid UTF-8")]
    Encoding,
    #[error("expected root element <{expected}>, found <{found}> at {position}")]
    WrongRoot {
        expected: &'static str,
        found: String,
        position: Position,
    },
    #[error("unknown element <{name}> inside <{parent}> at {position}")]
    UnknownElement {
        parent: String,
        name: String,
        position: Position,
    },
    #[error("unknown attribute `{name}` on <{element}> at {position}")]
    UnknownAttribute {
        element: String,
        name: String,
        position: Position,
    },
    #[error("<{element}> at {position} is missing required attribute `{name}`")]
    MissingAttribute {
        element: String,
        name: String,
        position: Position,
    },
    #[error("<{parent}> at {position} is missing required element <{name}>")]
    MissingElement {
        parent: String,
        name: String,
        position: Position,
    },
    #[error("invalid value for `{attribute}` on <{element}> at {position}: {message}")]
    InvalidValue {
        element: String,
        attribute: String,
        message: String,
        position: Position,
    },
}

impl ParseError {
    pub fn position(&self) -> Option<Position> {
        match self {
            ParseError::Syntax { line, column, .. } => Some(Position {
                line: *line,
                column: *column,
            }),
            ParseError::Encoding => None,
            ParseError::WrongRoot { position, .. }
            | ParseError::UnknownElement { position, .. }
            | ParseError::UnknownAttribute { position, .. }
            | ParseError::MissingAttribute { position, .. }
            | ParseError::MissingElement { position, .. }
            | ParseError::InvalidValue { position, .. } => Some(*position),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Cdl(CdlModel),
    Sdl(SdlModel),
    Mdl(MdlModel),
}

impl Model {
    pub fn kind(&self) -> DocumentKind {
        match self {
            Model::Cdl(_) => DocumentKind::Cdl,
            Model::Sdl(_) => DocumentKind::Sdl,
            Model::Mdl(_) => DocumentKind::Mdl,
        }
    }
}

pub fn parse(kind: DocumentKind, document: &[u8], mode: ParseMode) -> Result<Model, ParseError> {
    let text = std::str::from_utf8(document).map_err(|_| ParseError::Encoding)?;
    let root = dom::parse_document(text)?;
    let reader = read::ModelReader { mode };
    if root.name != kind.root_element() {
        return Err(ParseError::WrongRoot {
            expected: kind.root_element(),
            found: root.name,
            position: root.position,
        });
    }
    Ok(match kind {
        DocumentKind::Cdl => Model::Cdl(reader.cdl(&root)?),
        DocumentKind::Sdl => Model::Sdl(reader.sdl(&root)?),
        DocumentKind::Mdl => Model::Mdl(reader.mdl(&root)?),
    })
}

pub fn parse_cdl(document: &[u8], mode: ParseMode) -> Result<CdlModel, ParseError> {
    match parse(DocumentKind::Cdl, document, mode)? {
        Model::Cdl(m) => Ok(m),
        _ => unreachable!(),
    }
}

pub fn parse_sdl(document: &[u8], mode: ParseMode) -> Result<SdlModel, ParseError> {
    match parse(DocumentKind::Sdl, document, mode)? {
        Model::Sdl(m) => Ok(m),
        _ => unreachable!(),
    }
}

pub fn parse_mdl(document: &[u8], mode: ParseMode) -> Result<MdlModel, ParseError> {
    match parse(DocumentKind::Mdl, document, mode)? {
        Model::Mdl(m) => Ok(m),
        _ => unreachable!(),
    }
}

pub fn serialize(model: &Model) -> Vec<u8> {
    match model {
        Model::Cdl(m) => write::cdl(m),
        Model::Sdl(m) => write::sdl(m),
        Model::Mdl(m) => write::mdl(m),
    }
    .into_bytes()
}

pub fn serialize_cdl(model: &CdlModel) -> Vec<u8> {
    write::cdl(model).into_bytes()
}

pub fn serialize_sdl(model: &SdlModel) -> Vec<u8> {
    write::sdl(model).into_bytes()
}

pub fn serialize_mdl(model: &MdlModel) -> Vec<u8> {
    write::mdl(model).into_bytes()
}
