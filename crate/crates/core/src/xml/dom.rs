//! A minimal element tree built on top of quick-xml events, keeping source
//! positions so that model-level errors can point into the document.

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug)]
pub struct Element {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<Element>,
    pub text: String,
    pub position: Position,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        Self { starts }
    }

    fn position(&self, offset: usize) -> Position {
        let line = self.starts.partition_point(|&s| s <= offset);
        Position {
            line,
            column: offset - self.starts[line - 1] + 1,
        }
    }
}

fn syntax(index: &LineIndex, offset: usize, message: impl Into<String>) -> ParseError {
    let p = index.position(offset);
    ParseError::Syntax {
        line: p.line,
        column: p.column,
        message: message.into(),
    }
}

fn open(start: &BytesStart<'_>, position: Position, index: &LineIndex, offset: usize) -> Result<Element, ParseError> {
    let name = String::from_utf8_lossy(start.name().as_ref()).into_owned();
    let mut attributes = Vec::new();
    for attr in start.attributes() {
        let attr = attr.map_err(|e| syntax(index, offset, e.to_string()))?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|e| syntax(index, offset, e.to_string()))?
            .into_owned();
        attributes.push((key, value));
    }
    Ok(Element {
        name,
        attributes,
        children: Vec::new(),
        text: String::new(),
        position,
    })
}

/// Parses a whole document and returns its root element.
pub fn parse_document(text: &str) -> Result<Element, ParseError> {
    let index = LineIndex::new(text);
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(false);

    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;
    loop {
        let before = reader.buffer_position() as usize;
        // point at the `<` of the event rather than at leading whitespace
        let offset = before + text[before..].find(|c: char| !c.is_whitespace()).unwrap_or(0);
        let position = index.position(offset);
        let event = reader
            .read_event()
            .map_err(|e| syntax(&index, reader.error_position() as usize, e.to_string()))?;
        match event {
            Event::Start(start) => {
                if root.is_some() {
                    return Err(syntax(&index, offset, "content after the root element"));
                }
                stack.push(open(&start, position, &index, offset)?);
            }
            Event::Empty(start) => {
                if root.is_some() {
                    return Err(syntax(&index, offset, "content after the root element"));
                }
                let el = open(&start, position, &index, offset)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::End(_) => {
                let el = stack.pop().expect("reader checks end names");
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(|e| syntax(&index, offset, e.to_string()))?;
                match stack.last_mut() {
                    Some(el) => el.text.push_str(&s),
                    None if s.trim().is_empty() => {}
                    None => return Err(syntax(&index, offset, "text outside the root element")),
                }
            }
            Event::CData(c) => {
                let s = String::from_utf8_lossy(&c).into_owned();
                match stack.last_mut() {
                    Some(el) => el.text.push_str(&s),
                    None => return Err(syntax(&index, offset, "CDATA outside the root element")),
                }
            }
            Event::Eof => break,
            Event::Comment(_) | Event::Decl(_) | Event::PI(_) | Event::DocType(_) => {}
        }
    }
    if let Some(open) = stack.last() {
        return Err(ParseError::Syntax {
            line: open.position.line,
            column: open.position.column,
            message: format!("element <{}> is never closed", open.name),
        });
    }
    root.ok_or_else(|| syntax(&index, text.len(), "document has no root element"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_tree_with_positions() {
        let root = parse_document("<a x=\"1\">\n  <b/>\n  <c>hi &amp; bye</c>\n</a>").unwrap();
        assert_eq!(root.name, "a");
        assert_eq!(root.attr("x"), Some("1"));
        assert_eq!(root.children.len(), 2);
        assert_eq!(root.children[0].position, Position { line: 2, column: 3 });
        assert_eq!(root.children[1].text, "hi & bye");
    }

    #[test]
    fn text_keeps_surrounding_whitespace() {
        let root = parse_document("<?xml version=\"1.0\"?>\n<a><v>  x </v></a>\n").unwrap();
        assert_eq!(root.children[0].text, "  x ");
    }

    #[test]
    fn mismatched_tag_reports_position() {
        let err = parse_document("<a>\n<b></c>\n</a>").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unclosed_root() {
        assert!(matches!(parse_document("<a><b/>"), Err(ParseError::Syntax { .. })));
    }
}
