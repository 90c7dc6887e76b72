//! Text format for finite structures.
//!
//! ```text
//! # comments start with '#'
//! signature: E/2 f/1 c/0
//! size: 3
//! rel E: 0,1 1,0
//! fun f: 1 2 0
//! const c: 2
//! ```
//!
//! The header lists `name/arity` for every symbol. Each symbol's kind is taken
//! from the section line that defines it: `rel` (tuples, comma-joined entries,
//! whitespace-separated; the empty tuple of a nullary relation is `()`), `fun`
//! (the full table in lexicographic order of argument tuples) or `const`.
//! Every symbol is defined exactly once; partial function tables are rejected.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::structures::{index_tuple, FinStructure, Signature, StructureError, Symbol, SymbolKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error("symbol `{0}` declared in the header but never defined")]
    Undefined(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_num(line: usize, tok: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>()
        .map_err(|_| syntax(line, format!("expected a natural number, found `{tok}`")))
}

/// Meaningful lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Parse one structure. If `expected` is given, the parsed signature must match it
/// and the returned structure shares that `Arc`.
pub fn parse_structure(
    text: &str,
    expected: Option<&Arc<Signature>>,
) -> Result<FinStructure, ParseError> {
    let mut header: Option<(usize, Vec<(String, usize)>)> = None;
    let mut size: Option<usize> = None;
    let mut sections: Vec<(usize, SymbolKind, String, String)> = Vec::new();
    for (ln, line) in content_lines(text) {
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| syntax(ln, "expected `key: value`"))?;
        let key = key.trim();
        let rest = rest.trim();
        match key {
            "signature" => {
                if header.is_some() {
                    return Err(syntax(ln, "duplicate signature line"));
                }
                let mut decls = Vec::new();
                for tok in rest.split_whitespace() {
                    let (name, ar) = tok
                        .split_once('/')
                        .ok_or_else(|| syntax(ln, format!("expected name/arity, found `{tok}`")))?;
                    decls.push((name.to_string(), parse_num(ln, ar)?));
                }
                header = Some((ln, decls));
            }
            "size" => {
                if size.is_some() {
                    return Err(syntax(ln, "duplicate size line"));
                }
                size = Some(parse_num(ln, rest)?);
            }
            _ => {
                let (kind, name) = key
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| syntax(ln, format!("unknown line `{key}`")))?;
                let kind = match kind {
                    "rel" => SymbolKind::Relation,
                    "fun" => SymbolKind::Function,
                    "const" => SymbolKind::Constant,
                    other => return Err(syntax(ln, format!("unknown section `{other}`"))),
                };
                sections.push((ln, kind, name.trim().to_string(), rest.to_string()));
            }
        }
    }
    let (hl, decls) = header.ok_or(ParseError::Missing("signature"))?;
    let n = size.ok_or(ParseError::Missing("size"))?;

    let mut symbols = Vec::with_capacity(decls.len());
    for (name, arity) in &decls {
        let defs: Vec<_> = sections.iter().filter(|s| &s.2 == name).collect();
        match defs.len() {
            0 => return Err(ParseError::Undefined(name.clone())),
            1 => {}
            _ => return Err(syntax(defs[1].0, format!("symbol `{name}` defined twice"))),
        }
        symbols.push(Symbol {
            name: name.clone(),
            kind: defs[0].1,
            arity: *arity,
        });
    }
    if let Some(s) = sections.iter().find(|s| !decls.iter().any(|d| d.0 == s.2)) {
        return Err(syntax(
            s.0,
            format!("symbol `{}` not declared in the signature", s.2),
        ));
    }
    let sig = Signature::new(symbols).map_err(|e| match e {
        StructureError::ConstantArity(s) => syntax(hl, format!("constant `{s}` must have arity 0")),
        other => ParseError::Structure(other),
    })?;
    let sig = match expected {
        Some(e) if **e == sig => e.clone(),
        Some(_) => return Err(ParseError::Structure(StructureError::SignatureMismatch)),
        None => Arc::new(sig),
    };

    let mut st = FinStructure::builder(sig.clone(), n)?;
    for (ln, kind, name, body) in &sections {
        let idx = sig.index_of(name).expect("declared");
        let arity = sig.symbols()[idx].arity;
        match kind {
            SymbolKind::Relation => {
                for tok in body.split_whitespace() {
                    let tuple: Vec<usize> = if tok == "()" {
                        Vec::new()
                    } else {
                        tok.split(',')
                            .map(|t| parse_num(*ln, t))
                            .collect::<Result<_, _>>()?
                    };
                    if tuple.len() != arity {
                        return Err(syntax(
                            *ln,
                            format!("tuple `{tok}` has wrong arity for `{name}`"),
                        ));
                    }
                    st.set_relation_at(idx, &tuple, true)?;
                }
            }
            SymbolKind::Function => {
                let table: Vec<usize> = body
                    .split_whitespace()
                    .map(|t| parse_num(*ln, t))
                    .collect::<Result<_, _>>()?;
                st.set_function_at(idx, table)?;
            }
            SymbolKind::Constant => {
                let v = parse_num(*ln, body)?;
                st.set_constant(name, v)?;
            }
        }
    }
    Ok(st)
}

/// Render a structure; `parse_structure(&write_structure(s))` reproduces `s`.
pub fn write_structure(s: &FinStructure) -> String {
    let sig = s.signature();
    let mut out = String::new();
    let _ = writeln!(out, "signature: {}", sig);
    let _ = writeln!(out, "size: {}", s.size());
    for (i, sym) in sig.symbols().iter().enumerate() {
        match sym.kind {
            SymbolKind::Relation => {
                let tuples: Vec<String> = s
                    .relation_tuples(i)
                    .into_iter()
                    .map(|t| {
                        if t.is_empty() {
                            "()".to_string()
                        } else {
                            t.iter()
                                .map(|x| x.to_string())
                                .collect::<Vec<_>>()
                                .join(",")
                        }
                    })
                    .collect();
                let _ = writeln!(out, "rel {}: {}", sym.name, tuples.join(" ")).map(|_| ());
            }
            SymbolKind::Function => {
                let table = s.function_table(i).expect("function");
                let vals: Vec<String> = table.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "fun {}: {}", sym.name, vals.join(" "));
            }
            SymbolKind::Constant => {
                let _ = writeln!(
                    out,
                    "const {}: {}",
                    sym.name,
                    s.constant(i).expect("constant")
                );
            }
        }
    }
    // trailing spaces from empty relations would make diffs noisy
    out.lines()
        .map(|l| l.trim_end())
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

/// Pretty tuple listing used in reports.
pub fn describe_tuple(arity: usize, n: usize, idx: usize) -> String {
    let mut buf = vec![0; arity];
    index_tuple(n, arity, idx, &mut buf);
    format!("{buf:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::build;
    use proptest::prelude::*;

    #[test]
    fn parses_the_documented_example() {
        let text =
            "# demo\nsignature: E/2 f/1 c/0\nsize: 3\nrel E: 0,1 1,0\nfun f: 1 2 0\nconst c: 2\n";
        let s = parse_structure(text, None).unwrap();
        assert_eq!(s.size(), 3);
        assert!(s.relation_holds(0, &[0, 1]));
        assert!(!s.relation_holds(0, &[1, 2]));
        assert_eq!(s.apply(1, &[1]), 2);
        assert_eq!(s.constant(2), Some(2));
        assert_eq!(parse_structure(&write_structure(&s), None).unwrap(), s);
    }

    #[test]
    fn rejects_partial_function_table() {
        let text = "signature: f/1\nsize: 3\nfun f: 1 2\n";
        assert!(matches!(
            parse_structure(text, None),
            Err(ParseError::Structure(StructureError::PartialTable { .. }))
        ));
    }

    #[test]
    fn rejects_undefined_and_undeclared_symbols() {
        assert!(matches!(
            parse_structure("signature: E/2\nsize: 2\n", None),
            Err(ParseError::Undefined(_))
        ));
        assert!(parse_structure("signature: E/2\nsize: 2\nrel E:\nrel F: 0,1\n", None).is_err());
        assert!(parse_structure("signature: E/2\nsize: 2\nrel E: 0,1,1\n", None).is_err());
        assert!(parse_structure("signature: E/2\nsize: 2\nrel E: 0,2\n", None).is_err());
        assert!(parse_structure("signature: c/1\nsize: 2\nconst c: 0\n", None).is_err());
    }

    #[test]
    fn nullary_relation_round_trip() {
        let text = "signature: P/0 Q/0\nsize: 1\nrel P: ()\nrel Q:\n";
        let s = parse_structure(text, None).unwrap();
        assert!(s.relation_holds(0, &[]));
        assert!(!s.relation_holds(1, &[]));
        assert_eq!(parse_structure(&write_structure(&s), None).unwrap(), s);
    }

    #[test]
    fn boolean_algebra_round_trip() {
        let b = build::powerset_algebra(2);
        let text = write_structure(&b);
        assert_eq!(parse_structure(&text, Some(b.signature())).unwrap(), b);
    }

    proptest! {
        #[test]
        fn graph_round_trip(n in 0usize..6, bits in proptest::collection::vec(any::<bool>(), 36)) {
            let mut edges = Vec::new();
            for x in 0..n { for y in x + 1..n { if bits[x * 6 + y] { edges.push((x, y)); } } }
            let g = build::graph(n, &edges);
            prop_assert_eq!(parse_structure(&write_structure(&g), None).unwrap(), g);
        }
    }
}
