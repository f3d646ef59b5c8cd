//! Reader and writer for the place/transition subset of PNML.
//!
//! Recognised elements are `place` (optional `initialMarking/text`),
//! `transition` (optional `name/text`, missing means silent) and `arc`
//! (`source`/`target`). Graphics and tool-specific blocks are skipped
//! silently; any other element is skipped with a warning.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{NetBuilder, NetError, NetSystem};

#[derive(Debug, thiserror::Error)]
pub enum PnmlError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("malformed PNML: {0}")]
    Structure(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A parsed net plus the warnings produced while reading it.
#[derive(Debug, Clone)]
pub struct PnmlDocument {
    pub net: NetSystem,
    pub warnings: Vec<String>,
}

const KNOWN: &[&str] = &[
    "pnml",
    "net",
    "page",
    "place",
    "transition",
    "arc",
    "name",
    "text",
    "initialMarking",
    "inscription",
];
const DECORATION: &[&str] = &[
    "graphics",
    "toolspecific",
    "position",
    "offset",
    "dimension",
    "fill",
    "line",
    "font",
    "type",
];

pub fn read_pnml(text: &str) -> Result<PnmlDocument, PnmlError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| PnmlError::Xml(e.to_string()))?;
    let nets: Vec<_> = doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "net")
        .collect();
    let net = match nets.as_slice() {
        [] => return Err(PnmlError::Structure("no <net> element".into())),
        [n] => *n,
        _ => {
            return Err(PnmlError::Structure(format!(
                "{} nets in one file; expected one",
                nets.len()
            )))
        }
    };

    let mut builder = NetBuilder::new();
    let mut arcs = Vec::new();
    let mut unknown = BTreeSet::new();
    let mut stack = vec![net];
    while let Some(node) = stack.pop() {
        for child in node.children().filter(|c| c.is_element()) {
            let tag = child.tag_name().name();
            match tag {
                "page" => stack.push(child),
                "place" => {
                    let id = required_id(&child, "place")?;
                    let tokens = match child_text(&child, "initialMarking") {
                        Some(t) if !t.is_empty() => t.parse::<u32>().map_err(|_| {
                            PnmlError::Structure(format!(
                                "place `{id}`: initial marking `{t}` is not a count"
                            ))
                        })?,
                        _ => 0,
                    };
                    if builder.has_node(&id) {
                        return Err(NetError::DuplicateNode(id).into());
                    }
                    builder.place(id, tokens);
                }
                "transition" => {
                    let id = required_id(&child, "transition")?;
                    let label = child_text(&child, "name").unwrap_or_default();
                    if builder.has_node(&id) {
                        return Err(NetError::DuplicateNode(id).into());
                    }
                    builder.transition(id, label);
                }
                "arc" => {
                    let source = child.attribute("source");
                    let target = child.attribute("target");
                    match (source, target) {
                        (Some(s), Some(t)) => arcs.push((s.to_string(), t.to_string())),
                        _ => {
                            return Err(PnmlError::Structure("arc without source or target".into()))
                        }
                    }
                }
                _ if KNOWN.contains(&tag) || DECORATION.contains(&tag) => {}
                _ => {
                    unknown.insert(tag.to_string());
                }
            }
        }
    }
    for (s, t) in arcs {
        builder.arc(s, t);
    }
    let warnings: Vec<String> = unknown
        .into_iter()
        .map(|t| format!("ignored unknown PNML element <{t}>"))
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(PnmlDocument {
        net: builder.build()?,
        warnings,
    })
}

fn required_id(node: &roxmltree::Node, what: &str) -> Result<String, PnmlError> {
    node.attribute("id")
        .map(str::to_string)
        .ok_or_else(|| PnmlError::Structure(format!("{what} without id")))
}

fn child_text(node: &roxmltree::Node, tag: &str) -> Option<String> {
    let holder = node
        .children()
        .find(|c| c.is_element() && c.tag_name().name() == tag)?;
    let text = holder
        .children()
        .find(|c| c.is_element() && c.tag_name().name() == "text")?;
    Some(text.text().unwrap_or("").trim().to_string())
}

pub fn write_pnml(net: &NetSystem) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<pnml>\n");
    out.push_str("  <net id=\"net\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n");
    out.push_str("    <page id=\"page\">\n");
    let m = net.initial_marking();
    for (p, id) in net.places().iter().enumerate() {
        if m.get(p) > 0 {
            let _ = writeln!(
                out,
                "      <place id=\"{}\"><initialMarking><text>{}</text></initialMarking></place>",
                escape(id),
                m.get(p)
            );
        } else {
            let _ = writeln!(out, "      <place id=\"{}\"/>", escape(id));
        }
    }
    for t in net.transitions() {
        if t.is_silent() {
            let _ = writeln!(out, "      <transition id=\"{}\"/>", escape(&t.id));
        } else {
            let _ = writeln!(
                out,
                "      <transition id=\"{}\"><name><text>{}</text></name></transition>",
                escape(&t.id),
                escape(&t.label)
            );
        }
    }
    let mut k = 0;
    for t in net.transitions() {
        for &p in &t.preset {
            let _ = writeln!(
                out,
                "      <arc id=\"a{k}\" source=\"{}\" target=\"{}\"/>",
                escape(net.place_id(p)),
                escape(&t.id)
            );
            k += 1;
        }
        for &p in &t.postset {
            let _ = writeln!(
                out,
                "      <arc id=\"a{k}\" source=\"{}\" target=\"{}\"/>",
                escape(&t.id),
                escape(net.place_id(p))
            );
            k += 1;
        }
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}
