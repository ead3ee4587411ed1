//! Reader and writer for the SteinLib STP text format.
//!
//! Supported subset (keywords are case-insensitive):
//!
//! ```text
//! 33D32945 STP File, STP Format Version 1.0     (optional)
//! SECTION Comment                               (optional, `Name "..."` is kept)
//! END
//! SECTION Graph
//! Nodes <n>
//! Edges <m>
//! E <u> <v> <w>                                 (m lines)
//! END
//! SECTION Terminals
//! Terminals <t>
//! T <v>                                         (t lines)
//! END
//! EOF
//! ```
//!
//! Any other section (Coordinates, Presolve, MaximumDegrees, ...) is skipped.

use std::fmt::{self, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::{Edge, SteinerInstance};
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    NodeOutOfRange { node: i64, node_count: usize },
    DuplicateEdge { u: usize, v: usize },
    SelfLoop { node: usize },
    MissingTerminals,
    MissingGraph,
    CountMismatch { what: &'static str, declared: usize, found: usize },
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::NodeOutOfRange { node, node_count } => {
                write!(f, "node {node} outside 1..={node_count}")
            }
            ParseErrorKind::DuplicateEdge { u, v } => write!(f, "duplicate edge {{{u}, {v}}}"),
            ParseErrorKind::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            ParseErrorKind::MissingTerminals => write!(f, "missing Terminals section"),
            ParseErrorKind::MissingGraph => write!(f, "missing Graph section"),
            ParseErrorKind::CountMismatch {
                what,
                declared,
                found,
            } => write!(f, "{what} declared {declared} but found {found}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Comment,
    Graph,
    Terminals,
    Skipped,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    tokens
}

struct Parser {
    line: usize,
    node_count: Option<usize>,
    declared_edges: Option<(usize, usize)>,
    declared_terminals: Option<(usize, usize)>,
    edges: Vec<Edge>,
    seen_edges: std::collections::HashSet<(usize, usize)>,
    terminal_lines: usize,
    terminals: Vec<usize>,
    name: Option<String>,
    saw_graph: bool,
    saw_terminals: bool,
}

impl Parser {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn syntax(&self, column: usize, msg: impl Into<String>) -> ParseError {
        self.err(column, ParseErrorKind::Syntax(msg.into()))
    }

    fn expect_args(&self, tokens: &[Token<'_>], count: usize) -> Result<(), ParseError> {
        if tokens.len() != count + 1 {
            let col = tokens.get(count + 1).map_or(tokens[0].column, |t| t.column);
            return Err(self.syntax(
                col,
                format!(
                    "`{}` takes {count} argument(s), got {}",
                    tokens[0].text,
                    tokens.len() - 1
                ),
            ));
        }
        Ok(())
    }

    fn count(&self, tok: &Token<'_>) -> Result<usize, ParseError> {
        tok.text
            .parse::<usize>()
            .map_err(|_| self.syntax(tok.column, format!("expected a count, got {:?}", tok.text)))
    }

    fn node(&self, tok: &Token<'_>) -> Result<usize, ParseError> {
        let n = self
            .node_count
            .ok_or_else(|| self.syntax(tok.column, "node referenced before `Nodes`"))?;
        let id: i64 = tok
            .text
            .parse()
            .map_err(|_| self.syntax(tok.column, format!("expected a node id, got {:?}", tok.text)))?;
        if id < 1 || id as u64 > n as u64 {
            return Err(self.err(
                tok.column,
                ParseErrorKind::NodeOutOfRange {
                    node: id,
                    node_count: n,
                },
            ));
        }
        Ok(id as usize - 1)
    }

    fn graph_line(&mut self, tokens: &[Token<'_>]) -> Result<(), ParseError> {
        let key = tokens[0].text.to_ascii_lowercase();
        match key.as_str() {
            "nodes" => {
                self.expect_args(tokens, 1)?;
                let n = self.count(&tokens[1])?;
                if n == 0 {
                    return Err(self.syntax(tokens[1].column, "node count must be positive"));
                }
                self.node_count = Some(n);
            }
            "edges" => {
                self.expect_args(tokens, 1)?;
                self.declared_edges = Some((self.count(&tokens[1])?, self.line));
            }
            "e" => {
                self.expect_args(tokens, 3)?;
                let u = self.node(&tokens[1])?;
                let v = self.node(&tokens[2])?;
                if u == v {
                    return Err(self.err(tokens[2].column, ParseErrorKind::SelfLoop { node: u + 1 }));
                }
                let weight: Weight = tokens[3]
                    .text
                    .parse()
                    .map_err(|e| self.syntax(tokens[3].column, format!("bad weight: {e}")))?;
                if weight.is_negative() {
                    return Err(self.syntax(tokens[3].column, "negative weight"));
                }
                if !self.seen_edges.insert((u.min(v), u.max(v))) {
                    return Err(self.err(
                        tokens[0].column,
                        ParseErrorKind::DuplicateEdge { u: u + 1, v: v + 1 },
                    ));
                }
                self.edges.push(Edge::new(u, v, weight));
            }
            _ => {
                return Err(self.syntax(
                    tokens[0].column,
                    format!("unexpected `{}` in Graph section", tokens[0].text),
                ))
            }
        }
        Ok(())
    }

    fn terminal_line(&mut self, tokens: &[Token<'_>]) -> Result<(), ParseError> {
        let key = tokens[0].text.to_ascii_lowercase();
        match key.as_str() {
            "terminals" => {
                self.expect_args(tokens, 1)?;
                self.declared_terminals = Some((self.count(&tokens[1])?, self.line));
            }
            "t" => {
                self.expect_args(tokens, 1)?;
                let v = self.node(&tokens[1])?;
                self.terminal_lines += 1;
                self.terminals.push(v);
            }
            // Rooted variants name their root; the undirected problem ignores it.
            "root" => {
                self.expect_args(tokens, 1)?;
                self.node(&tokens[1])?;
            }
            _ => {
                return Err(self.syntax(
                    tokens[0].column,
                    format!("unexpected `{}` in Terminals section", tokens[0].text),
                ))
            }
        }
        Ok(())
    }
}

/// Parses STP text. The instance name comes from the Comment section's
/// `Name` entry, or is empty when absent.
pub fn parse_instance(text: &str) -> Result<SteinerInstance, ParseError> {
    let mut p = Parser {
        line: 0,
        node_count: None,
        declared_edges: None,
        declared_terminals: None,
        edges: Vec::new(),
        seen_edges: Default::default(),
        terminal_lines: 0,
        terminals: Vec::new(),
        name: None,
        saw_graph: false,
        saw_terminals: false,
    };
    let mut section = Section::Top;

    for (idx, raw) in text.lines().enumerate() {
        p.line = idx + 1;
        let tokens = tokenize(raw);
        let Some(first) = tokens.first() else {
            continue;
        };
        if first.text.starts_with('#') {
            continue;
        }
        let key = first.text.to_ascii_lowercase();
        match section {
            Section::Top => match key.as_str() {
                "section" => {
                    let Some(which) = tokens.get(1) else {
                        return Err(p.syntax(first.column, "SECTION without a name"));
                    };
                    section = match which.text.to_ascii_lowercase().as_str() {
                        "graph" => {
                            p.saw_graph = true;
                            Section::Graph
                        }
                        "terminals" => {
                            p.saw_terminals = true;
                            Section::Terminals
                        }
                        "comment" => Section::Comment,
                        _ => Section::Skipped,
                    };
                }
                "eof" => {
                    break;
                }
                _ if p.line == 1 || raw.contains("STP File") => {}
                _ => {
                    return Err(p.syntax(
                        first.column,
                        format!("expected SECTION or EOF, got {:?}", first.text),
                    ))
                }
            },
            _ if key == "end" => section = Section::Top,
            Section::Comment => {
                if key == "name" {
                    let rest = raw[first.column - 1 + first.text.len()..].trim();
                    p.name = Some(rest.trim_matches('"').to_string());
                }
            }
            Section::Skipped => {}
            Section::Graph => p.graph_line(&tokens)?,
            Section::Terminals => p.terminal_line(&tokens)?,
        }
    }
    p.line += 1;
    if section != Section::Top {
        return Err(p.syntax(1, "unterminated SECTION (missing END)"));
    }
    if !p.saw_graph {
        return Err(p.err(1, ParseErrorKind::MissingGraph));
    }
    let node_count = p
        .node_count
        .ok_or_else(|| p.syntax(1, "Graph section lacks `Nodes`"))?;
    if let Some((declared, line)) = p.declared_edges {
        if declared != p.edges.len() {
            return Err(ParseError {
                line,
                column: 1,
                kind: ParseErrorKind::CountMismatch {
                    what: "Edges",
                    declared,
                    found: p.edges.len(),
                },
            });
        }
    }
    if !p.saw_terminals {
        return Err(p.err(1, ParseErrorKind::MissingTerminals));
    }
    if let Some((declared, line)) = p.declared_terminals {
        if declared != p.terminal_lines {
            return Err(ParseError {
                line,
                column: 1,
                kind: ParseErrorKind::CountMismatch {
                    what: "Terminals",
                    declared,
                    found: p.terminal_lines,
                },
            });
        }
    }
    if p.terminals.is_empty() {
        return Err(p.err(1, ParseErrorKind::MissingTerminals));
    }
    let name = p.name.unwrap_or_default();
    // Every invariant was checked above, so construction cannot fail.
    Ok(SteinerInstance::new(name, node_count, p.edges, p.terminals)
        .expect("parser validated all instance invariants"))
}

/// Writes the instance as STP text that [`parse_instance`] reads back unchanged.
pub fn serialize_instance(inst: &SteinerInstance) -> String {
    let mut out = String::with_capacity(32 + inst.edge_count() * 16);
    out.push_str("33D32945 STP File, STP Format Version 1.0\n\n");
    out.push_str("SECTION Comment\n");
    let _ = writeln!(out, "Name    \"{}\"", inst.name());
    out.push_str("END\n\n");
    out.push_str("SECTION Graph\n");
    let _ = writeln!(out, "Nodes {}", inst.node_count());
    let _ = writeln!(out, "Edges {}", inst.edge_count());
    for e in inst.edges() {
        let _ = writeln!(out, "E {} {} {}", e.u + 1, e.v + 1, e.weight);
    }
    out.push_str("END\n\n");
    out.push_str("SECTION Terminals\n");
    let _ = writeln!(out, "Terminals {}", inst.terminals().len());
    for t in inst.terminals() {
        let _ = writeln!(out, "T {}", t + 1);
    }
    out.push_str("END\n\nEOF\n");
    out
}

/// Reads an STP file. Without a `Name` comment the file stem names the instance.
pub fn read_instance(path: impl AsRef<Path>) -> Result<SteinerInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let inst = parse_instance(&text)?;
    if inst.name().is_empty() {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(inst.with_name(stem));
    }
    Ok(inst)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &SteinerInstance) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_instance(inst)).map_err(|e| Error::io(path, e))
}
