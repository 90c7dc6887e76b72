//! Finite one-sorted structures, their embeddings, isomorphisms and automorphisms.
//!
//! Universes are always `0..n`. Relations are stored as dense truth tables and
//! functions as total tables indexed by the argument tuple read in base `n`
//! (first argument most significant). Embeddings preserve *and* reflect every
//! relation and commute with every function and constant.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest number of symbols a signature may carry.
pub const MAX_SYMBOLS: usize = 32;

/// Largest dense table (relation or function) a structure may allocate.
pub const MAX_TABLE_CELLS: usize = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("duplicate symbol `{0}` in signature")]
    DuplicateSymbol(String),
    #[error("signature has {0} symbols, at most {MAX_SYMBOLS} allowed")]
    TooManySymbols(usize),
    #[error("constant `{0}` must have arity 0")]
    ConstantArity(String),
    #[error("signature mismatch")]
    SignatureMismatch,
    #[error("structures over a signature with constants cannot be empty")]
    EmptyWithConstants,
    #[error("symbol `{0}` is not a {1}")]
    WrongKind(String, &'static str),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("tuple {tuple:?} for `{symbol}` is malformed for universe size {size}")]
    BadTuple {
        symbol: String,
        tuple: Vec<usize>,
        size: usize,
    },
    #[error("table for `{symbol}` has {got} entries, expected {expected}")]
    PartialTable {
        symbol: String,
        got: usize,
        expected: usize,
    },
    #[error("value {value} out of range for `{symbol}` (universe size {size})")]
    ValueOutOfRange {
        symbol: String,
        value: usize,
        size: usize,
    },
    #[error("table for `{0}` would exceed the size cap")]
    TableTooLarge(String),
    #[error("map is not an embedding: {0}")]
    NotAnEmbedding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Relation,
    Function,
    Constant,
}

impl SymbolKind {
    fn label(self) -> &'static str {
        match self {
            SymbolKind::Relation => "relation",
            SymbolKind::Function => "function",
            SymbolKind::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub arity: usize,
}

/// A one-sorted signature. Symbol order is significant: interpretations are
/// stored positionally.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    symbols: Vec<Symbol>,
}

impl Signature {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self, StructureError> {
        if symbols.len() > MAX_SYMBOLS {
            return Err(StructureError::TooManySymbols(symbols.len()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].iter().any(|t| t.name == s.name) {
                return Err(StructureError::DuplicateSymbol(s.name.clone()));
            }
            if s.kind == SymbolKind::Constant && s.arity != 0 {
                return Err(StructureError::ConstantArity(s.name.clone()));
            }
        }
        Ok(Signature { symbols })
    }

    pub fn empty() -> Self {
        Signature {
            symbols: Vec::new(),
        }
    }

    /// Convenience constructor from `(name, kind, arity)` triples.
    pub fn from_triples(triples: &[(&str, SymbolKind, usize)]) -> Result<Self, StructureError> {
        Signature::new(
            triples
                .iter()
                .map(|&(name, kind, arity)| Symbol {
                    name: name.to_string(),
                    kind,
                    arity,
                })
                .collect(),
        )
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn has_constants(&self) -> bool {
        self.symbols.iter().any(|s| {
            s.kind == SymbolKind::Constant || (s.kind == SymbolKind::Function && s.arity == 0)
        })
    }

    pub fn is_relational(&self) -> bool {
        self.symbols.iter().all(|s| s.kind == SymbolKind::Relation)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .symbols
            .iter()
            .map(|s| format!("{}/{}", s.name, s.arity))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Interp {
    Rel(Vec<bool>),
    Func(Vec<usize>),
    Const(usize),
}

fn table_len(n: usize, arity: usize, name: &str) -> Result<usize, StructureError> {
    let mut len: usize = 1;
    for _ in 0..arity {
        len = len
            .checked_mul(n)
            .filter(|&l| l <= MAX_TABLE_CELLS)
            .ok_or_else(|| StructureError::TableTooLarge(name.to_string()))?;
    }
    Ok(len)
}

/// Index of a tuple inside a dense table over a universe of size `n`.
#[inline]
pub fn tuple_index(n: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &x| acc * n + x)
}

/// Decode a dense-table index back into a tuple.
pub fn index_tuple(n: usize, arity: usize, mut idx: usize, out: &mut [usize]) {
    for slot in out[..arity].iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
}

/// A finite structure over a signature, with universe `0..size`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FinStructure {
    sig: Arc<Signature>,
    size: usize,
    interps: Vec<Interp>,
}

impl fmt::Debug for FinStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinStructure(size={}, sig=[{}])", self.size, self.sig)
    }
}

impl FinStructure {
    /// The structure of the given size where every relation is empty, every
    /// function is constantly 0 and every constant is 0. Mostly useful as a
    /// starting point for the builder methods.
    fn blank(sig: Arc<Signature>, size: usize) -> Result<Self, StructureError> {
        if size == 0 && sig.has_constants() {
            return Err(StructureError::EmptyWithConstants);
        }
        let mut interps = Vec::with_capacity(sig.symbols.len());
        for s in &sig.symbols {
            let len = table_len(size, s.arity, &s.name)?;
            interps.push(match s.kind {
                SymbolKind::Relation => Interp::Rel(vec![false; len]),
                SymbolKind::Function => Interp::Func(vec![0; len]),
                SymbolKind::Constant => Interp::Const(0),
            });
        }
        Ok(FinStructure { sig, size, interps })
    }

    /// A structure over a purely relational signature with no tuples.
    pub fn empty_relations(sig: Arc<Signature>, size: usize) -> Result<Self, StructureError> {
        if !sig.is_relational() {
            return Err(StructureError::WrongKind(
                "<signature>".into(),
                "relational signature",
            ));
        }
        Self::blank(sig, size)
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn symbol_checked(&self, name: &str, kind: SymbolKind) -> Result<usize, StructureError> {
        let i = self
            .sig
            .index_of(name)
            .ok_or_else(|| StructureError::UnknownSymbol(name.to_string()))?;
        if self.sig.symbols[i].kind != kind {
            return Err(StructureError::WrongKind(name.to_string(), kind.label()));
        }
        Ok(i)
    }

    pub fn relation_holds(&self, sym: usize, tuple: &[usize]) -> bool {
        match &self.interps[sym] {
            Interp::Rel(t) => t[tuple_index(self.size, tuple)],
            _ => false,
        }
    }

    /// Dense truth table of relation `sym`.
    pub fn relation_table(&self, sym: usize) -> Option<&[bool]> {
        match &self.interps[sym] {
            Interp::Rel(t) => Some(t),
            _ => None,
        }
    }

    pub fn function_table(&self, sym: usize) -> Option<&[usize]> {
        match &self.interps[sym] {
            Interp::Func(t) => Some(t),
            _ => None,
        }
    }

    pub fn apply(&self, sym: usize, args: &[usize]) -> usize {
        match &self.interps[sym] {
            Interp::Func(t) => t[tuple_index(self.size, args)],
            Interp::Const(c) => *c,
            Interp::Rel(_) => panic!("apply on relation symbol"),
        }
    }

    pub fn constant(&self, sym: usize) -> Option<usize> {
        match &self.interps[sym] {
            Interp::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// All tuples of relation `sym`, in lexicographic order.
    pub fn relation_tuples(&self, sym: usize) -> Vec<Vec<usize>> {
        let arity = self.sig.symbols[sym].arity;
        let mut out = Vec::new();
        if let Interp::Rel(t) = &self.interps[sym] {
            let mut buf = vec![0; arity];
            for (i, &b) in t.iter().enumerate() {
                if b {
                    index_tuple(self.size, arity, i, &mut buf);
                    out.push(buf.clone());
                }
            }
        }
        out
    }

    pub fn set_relation(
        &mut self,
        name: &str,
        tuple: &[usize],
        value: bool,
    ) -> Result<(), StructureError> {
        let i = self.symbol_checked(name, SymbolKind::Relation)?;
        self.set_relation_at(i, tuple, value)
    }

    pub fn set_relation_at(
        &mut self,
        sym: usize,
        tuple: &[usize],
        value: bool,
    ) -> Result<(), StructureError> {
        let s = &self.sig.symbols[sym];
        if tuple.len() != s.arity || tuple.iter().any(|&x| x >= self.size) {
            return Err(StructureError::BadTuple {
                symbol: s.name.clone(),
                tuple: tuple.to_vec(),
                size: self.size,
            });
        }
        let idx = tuple_index(self.size, tuple);
        match &mut self.interps[sym] {
            Interp::Rel(t) => t[idx] = value,
            _ => return Err(StructureError::WrongKind(s.name.clone(), "relation")),
        }
        Ok(())
    }

    pub fn set_function(&mut self, name: &str, table: Vec<usize>) -> Result<(), StructureError> {
        let i = self.symbol_checked(name, SymbolKind::Function)?;
        self.set_function_at(i, table)
    }

    pub fn set_function_at(&mut self, sym: usize, table: Vec<usize>) -> Result<(), StructureError> {
        let s = &self.sig.symbols[sym];
        let expected = table_len(self.size, s.arity, &s.name)?;
        if table.len() != expected {
            return Err(StructureError::PartialTable {
                symbol: s.name.clone(),
                got: table.len(),
                expected,
            });
        }
        if let Some(&v) = table.iter().find(|&&v| v >= self.size) {
            return Err(StructureError::ValueOutOfRange {
                symbol: s.name.clone(),
                value: v,
                size: self.size,
            });
        }
        self.interps[sym] = Interp::Func(table);
        Ok(())
    }

    pub fn set_constant(&mut self, name: &str, value: usize) -> Result<(), StructureError> {
        let i = self.symbol_checked(name, SymbolKind::Constant)?;
        if value >= self.size {
            return Err(StructureError::ValueOutOfRange {
                symbol: name.to_string(),
                value,
                size: self.size,
            });
        }
        self.interps[i] = Interp::Const(value);
        Ok(())
    }

    /// Start a structure whose interpretations will be filled by the caller.
    /// Functions default to the constant-0 table until set.
    pub fn builder(sig: Arc<Signature>, size: usize) -> Result<Self, StructureError> {
        Self::blank(sig, size)
    }

    /// The structure with elements renamed along the bijection `perm`
    /// (element `x` becomes `perm[x]`).
    pub fn relabel(&self, perm: &[usize]) -> FinStructure {
        assert_eq!(perm.len(), self.size);
        let n = self.size;
        let mut out = FinStructure::blank(self.sig.clone(), n).expect("same shape");
        let mut buf = vec![0; 8];
        let mut img = vec![0; 8];
        for (sym, interp) in self.interps.iter().enumerate() {
            let arity = self.sig.symbols[sym].arity;
            if buf.len() < arity {
                buf.resize(arity, 0);
                img.resize(arity, 0);
            }
            match interp {
                Interp::Rel(t) => {
                    if let Interp::Rel(o) = &mut out.interps[sym] {
                        for (i, &b) in t.iter().enumerate() {
                            if b {
                                index_tuple(n, arity, i, &mut buf);
                                for k in 0..arity {
                                    img[k] = perm[buf[k]];
                                }
                                o[tuple_index(n, &img[..arity])] = true;
                            }
                        }
                    }
                }
                Interp::Func(t) => {
                    let mut o = vec![0; t.len()];
                    for (i, &v) in t.iter().enumerate() {
                        index_tuple(n, arity, i, &mut buf);
                        for k in 0..arity {
                            img[k] = perm[buf[k]];
                        }
                        o[tuple_index(n, &img[..arity])] = perm[v];
                    }
                    out.interps[sym] = Interp::Func(o);
                }
                Interp::Const(c) => out.interps[sym] = Interp::Const(perm[*c]),
            }
        }
        out
    }

    /// Whether `subset` (sorted, duplicate-free) is closed under all functions
    /// and contains all constants.
    pub fn is_closed_subset(&self, subset: &[usize]) -> bool {
        let mut member = vec![false; self.size];
        for &x in subset {
            member[x] = true;
        }
        let mut buf = vec![0; 8];
        for (sym, interp) in self.interps.iter().enumerate() {
            let arity = self.sig.symbols[sym].arity;
            if buf.len() < arity {
                buf.resize(arity, 0);
            }
            match interp {
                Interp::Const(c) => {
                    if !member[*c] {
                        return false;
                    }
                }
                Interp::Func(t) => {
                    for (i, &v) in t.iter().enumerate() {
                        index_tuple(self.size, arity, i, &mut buf);
                        if buf[..arity].iter().all(|&x| member[x]) && !member[v] {
                            return false;
                        }
                    }
                }
                Interp::Rel(_) => {}
            }
        }
        true
    }

    /// The substructure induced on `subset` (must be closed), with element
    /// `subset[k]` renamed to `k`. Returns the structure and the inclusion.
    pub fn induced(&self, subset: &[usize]) -> Result<(FinStructure, Embedding), StructureError> {
        if !self.is_closed_subset(subset) {
            return Err(StructureError::NotAnEmbedding(
                "subset is not closed under functions and constants".into(),
            ));
        }
        let m = subset.len();
        let mut back = vec![usize::MAX; self.size];
        for (k, &x) in subset.iter().enumerate() {
            back[x] = k;
        }
        let mut out = FinStructure::blank(self.sig.clone(), m)?;
        let mut buf = vec![0; 8];
        let mut img = vec![0; 8];
        for (sym, interp) in self.interps.iter().enumerate() {
            let arity = self.sig.symbols[sym].arity;
            if buf.len() < arity {
                buf.resize(arity, 0);
                img.resize(arity, 0);
            }
            let len = table_len(m, arity, &self.sig.symbols[sym].name)?;
            match interp {
                Interp::Rel(t) => {
                    let mut o = vec![false; len];
                    for (i, slot) in o.iter_mut().enumerate() {
                        index_tuple(m, arity, i, &mut buf);
                        for k in 0..arity {
                            img[k] = subset[buf[k]];
                        }
                        *slot = t[tuple_index(self.size, &img[..arity])];
                    }
                    out.interps[sym] = Interp::Rel(o);
                }
                Interp::Func(t) => {
                    let mut o = vec![0; len];
                    for (i, slot) in o.iter_mut().enumerate() {
                        index_tuple(m, arity, i, &mut buf);
                        for k in 0..arity {
                            img[k] = subset[buf[k]];
                        }
                        *slot = back[t[tuple_index(self.size, &img[..arity])]];
                    }
                    out.interps[sym] = Interp::Func(o);
                }
                Interp::Const(c) => out.interps[sym] = Interp::Const(back[*c]),
            }
        }
        let emb = Embedding::new(subset.to_vec(), self.size);
        Ok((out, emb))
    }

    /// Closure of a set of elements under functions and constants, sorted.
    pub fn generated_by(&self, seeds: &[usize]) -> Vec<usize> {
        let mut member = vec![false; self.size];
        for &x in seeds {
            member[x] = true;
        }
        for (sym, interp) in self.interps.iter().enumerate() {
            if let Interp::Const(c) = interp {
                let _ = sym;
                member[*c] = true;
            }
        }
        let mut buf = vec![0; 8];
        loop {
            let mut changed = false;
            for (sym, interp) in self.interps.iter().enumerate() {
                if let Interp::Func(t) = interp {
                    let arity = self.sig.symbols[sym].arity;
                    if buf.len() < arity {
                        buf.resize(arity, 0);
                    }
                    for (i, &v) in t.iter().enumerate() {
                        if member[v] {
                            continue;
                        }
                        index_tuple(self.size, arity, i, &mut buf);
                        if buf[..arity].iter().all(|&x| member[x]) {
                            member[v] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (0..self.size).filter(|&x| member[x]).collect()
    }

    /// A flat encoding used for ordering isomorphic copies.
    pub fn encode(&self) -> Vec<usize> {
        let mut out = vec![self.size];
        for interp in &self.interps {
            match interp {
                Interp::Rel(t) => out.extend(t.iter().map(|&b| b as usize)),
                Interp::Func(t) => out.extend_from_slice(t),
                Interp::Const(c) => out.push(*c),
            }
        }
        out
    }

    /// Whether `map` (indexed by elements of `self`) is an embedding into `target`.
    pub fn is_embedding(&self, target: &FinStructure, map: &[usize]) -> bool {
        check_embedding(self, target, map).is_ok()
    }
}

/// Full check that `map` is an embedding `src -> dst`; the error names the first
/// violated condition.
pub fn check_embedding(
    src: &FinStructure,
    dst: &FinStructure,
    map: &[usize],
) -> Result<(), StructureError> {
    if src.sig != dst.sig {
        return Err(StructureError::SignatureMismatch);
    }
    if map.len() != src.size {
        return Err(StructureError::NotAnEmbedding(format!(
            "map has length {}, source has {} elements",
            map.len(),
            src.size
        )));
    }
    let mut used = vec![false; dst.size];
    for &y in map {
        if y >= dst.size || used[y] {
            return Err(StructureError::NotAnEmbedding("not injective".into()));
        }
        used[y] = true;
    }
    let mut buf = vec![0; 8];
    let mut img = vec![0; 8];
    for (sym, interp) in src.interps.iter().enumerate() {
        let s = &src.sig.symbols[sym];
        if buf.len() < s.arity {
            buf.resize(s.arity, 0);
            img.resize(s.arity, 0);
        }
        match interp {
            Interp::Rel(t) => {
                for (i, &b) in t.iter().enumerate() {
                    index_tuple(src.size, s.arity, i, &mut buf);
                    for k in 0..s.arity {
                        img[k] = map[buf[k]];
                    }
                    if dst.relation_holds(sym, &img[..s.arity]) != b {
                        return Err(StructureError::NotAnEmbedding(format!(
                            "relation `{}` not preserved/reflected at {:?}",
                            s.name,
                            &buf[..s.arity]
                        )));
                    }
                }
            }
            Interp::Func(t) => {
                for (i, &v) in t.iter().enumerate() {
                    index_tuple(src.size, s.arity, i, &mut buf);
                    for k in 0..s.arity {
                        img[k] = map[buf[k]];
                    }
                    if dst.apply(sym, &img[..s.arity]) != map[v] {
                        return Err(StructureError::NotAnEmbedding(format!(
                            "function `{}` does not commute at {:?}",
                            s.name,
                            &buf[..s.arity]
                        )));
                    }
                }
            }
            Interp::Const(c) => {
                if dst.constant(sym) != Some(map[*c]) {
                    return Err(StructureError::NotAnEmbedding(format!(
                        "constant `{}` not preserved",
                        s.name
                    )));
                }
            }
        }
    }
    Ok(())
}

/// An injective structure map, stored as its element map together with the
/// size of the target universe.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding {
    map: Vec<usize>,
    target_size: usize,
}

impl Embedding {
    pub fn new(map: Vec<usize>, target_size: usize) -> Self {
        debug_assert!(map.iter().all(|&y| y < target_size));
        Embedding { map, target_size }
    }

    pub fn identity(n: usize) -> Self {
        Embedding {
            map: (0..n).collect(),
            target_size: n,
        }
    }

    /// The inclusion of `0..n` as the first `n` elements of `0..m`.
    pub fn prefix(n: usize, m: usize) -> Self {
        assert!(n <= m);
        Embedding {
            map: (0..n).collect(),
            target_size: m,
        }
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn source_size(&self) -> usize {
        self.map.len()
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn is_identity(&self) -> bool {
        self.map.len() == self.target_size && self.map.iter().enumerate().all(|(i, &y)| i == y)
    }

    pub fn is_bijective(&self) -> bool {
        self.map.len() == self.target_size
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn after(&self, inner: &Embedding) -> Embedding {
        assert_eq!(
            inner.target_size,
            self.map.len(),
            "composing embeddings with mismatched middle object"
        );
        Embedding {
            map: inner.map.iter().map(|&x| self.map[x]).collect(),
            target_size: self.target_size,
        }
    }

    /// Inverse of a bijective embedding.
    pub fn inverse(&self) -> Option<Embedding> {
        if !self.is_bijective() {
            return None;
        }
        let mut inv = vec![0; self.map.len()];
        for (x, &y) in self.map.iter().enumerate() {
            inv[y] = x;
        }
        Some(Embedding {
            map: inv,
            target_size: self.map.len(),
        })
    }

    /// The image of the map, sorted.
    pub fn image(&self) -> Vec<usize> {
        let mut v = self.map.clone();
        v.sort_unstable();
        v
    }
}

impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.map.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]->{}", parts.join(" "), self.target_size)
    }
}

/// Precomputed constraint tables for repeated embedding searches out of one source.
struct SearchPlan {
    /// For element `x` of the source, relation tuples whose largest entry is `x`.
    rel_checks: Vec<Vec<(usize, Vec<usize>, bool)>>,
    /// Function facts `f(args) = out` bucketed by `max(args ∪ {out})`.
    func_checks: Vec<Vec<(usize, Vec<usize>, usize)>>,
    /// If the image of `x` is forced by a function fact whose arguments all precede `x`.
    definers: Vec<Option<(usize, Vec<usize>)>>,
}

impl SearchPlan {
    fn new(src: &FinStructure) -> Self {
        let n = src.size;
        let mut rel_checks = vec![Vec::new(); n];
        let mut func_checks = vec![Vec::new(); n];
        let mut definers: Vec<Option<(usize, Vec<usize>)>> = vec![None; n];
        let mut buf = vec![0; 8];
        for (sym, interp) in src.interps.iter().enumerate() {
            let arity = src.sig.symbols[sym].arity;
            if buf.len() < arity {
                buf.resize(arity, 0);
            }
            match interp {
                Interp::Rel(t) => {
                    if arity == 0 {
                        continue;
                    }
                    for (i, &b) in t.iter().enumerate() {
                        index_tuple(n, arity, i, &mut buf);
                        let top = *buf[..arity].iter().max().unwrap();
                        rel_checks[top].push((sym, buf[..arity].to_vec(), b));
                    }
                }
                Interp::Func(t) => {
                    for (i, &v) in t.iter().enumerate() {
                        index_tuple(n, arity, i, &mut buf);
                        let args = buf[..arity].to_vec();
                        let amax = args.iter().copied().max();
                        let top = amax.map_or(v, |m| m.max(v));
                        if amax.map_or(true, |m| m < v) && definers[v].is_none() {
                            definers[v] = Some((sym, args.clone()));
                        }
                        func_checks[top].push((sym, args, v));
                    }
                }
                Interp::Const(c) => {
                    if definers[*c].is_none() {
                        definers[*c] = Some((sym, Vec::new()));
                    }
                    func_checks[*c].push((sym, Vec::new(), *c));
                }
            }
        }
        SearchPlan {
            rel_checks,
            func_checks,
            definers,
        }
    }
}

/// Backtracking enumerator of embeddings, optionally constrained by a partial
/// assignment. Visits maps in lexicographic order.
pub struct EmbeddingSearch<'a> {
    src: &'a FinStructure,
    dst: &'a FinStructure,
    plan: SearchPlan,
}

impl<'a> EmbeddingSearch<'a> {
    pub fn new(src: &'a FinStructure, dst: &'a FinStructure) -> Result<Self, StructureError> {
        if src.sig != dst.sig {
            return Err(StructureError::SignatureMismatch);
        }
        Ok(EmbeddingSearch {
            src,
            dst,
            plan: SearchPlan::new(src),
        })
    }

    /// Calls `visit` on every embedding extending `partial` (entries `Some(y)`
    /// fix the image of that element). Stops early when `visit` returns `false`.
    pub fn for_each(&self, partial: &[Option<usize>], mut visit: impl FnMut(&[usize]) -> bool) {
        let n = self.src.size;
        assert_eq!(partial.len(), n);
        if n > self.dst.size {
            return;
        }
        // 0-ary relations and 0-ary functions live outside the per-element buckets
        for (sym, interp) in self.src.interps.iter().enumerate() {
            if self.src.sig.symbols[sym].arity == 0 {
                if let Interp::Rel(t) = interp {
                    if t[0] != self.dst.relation_holds(sym, &[]) {
                        return;
                    }
                }
            }
        }
        if n == 0 {
            // nullary functions/constants force a nonempty universe, so only relations matter
            visit(&[]);
            return;
        }
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; self.dst.size];
        let mut img = vec![0usize; 8];
        self.recurse(0, partial, &mut map, &mut used, &mut img, &mut visit);
    }

    fn candidate_forced(
        &self,
        x: usize,
        partial: &[Option<usize>],
        map: &[usize],
        img: &mut Vec<usize>,
    ) -> Option<usize> {
        if let Some(y) = partial[x] {
            return Some(y);
        }
        if let Some((sym, args)) = &self.plan.definers[x] {
            if img.len() < args.len() {
                img.resize(args.len(), 0);
            }
            for (k, &a) in args.iter().enumerate() {
                img[k] = map[a];
            }
            return Some(self.dst.apply(*sym, &img[..args.len()]));
        }
        None
    }

    fn consistent(&self, x: usize, map: &[usize], img: &mut Vec<usize>) -> bool {
        for (sym, tuple, b) in &self.plan.rel_checks[x] {
            if img.len() < tuple.len() {
                img.resize(tuple.len(), 0);
            }
            for (k, &a) in tuple.iter().enumerate() {
                img[k] = map[a];
            }
            if self.dst.relation_holds(*sym, &img[..tuple.len()]) != *b {
                return false;
            }
        }
        for (sym, args, v) in &self.plan.func_checks[x] {
            if img.len() < args.len() {
                img.resize(args.len(), 0);
            }
            for (k, &a) in args.iter().enumerate() {
                img[k] = map[a];
            }
            if self.dst.apply(*sym, &img[..args.len()]) != map[*v] {
                return false;
            }
        }
        true
    }

    fn recurse(
        &self,
        x: usize,
        partial: &[Option<usize>],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        img: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        let n = self.src.size;
        if x == n {
            return visit(map);
        }
        let forced = self.candidate_forced(x, partial, map, img);
        let range: Box<dyn Iterator<Item = usize>> = match forced {
            Some(y) => Box::new(std::iter::once(y)),
            None => Box::new(0..self.dst.size),
        };
        for y in range {
            if y >= self.dst.size || used[y] {
                continue;
            }
            if let Some(p) = partial[x] {
                if p != y {
                    continue;
                }
            }
            map[x] = y;
            used[y] = true;
            let ok = self.consistent(x, map, img);
            if ok && !self.recurse(x + 1, partial, map, used, img, visit) {
                used[y] = false;
                map[x] = usize::MAX;
                return false;
            }
            used[y] = false;
            map[x] = usize::MAX;
        }
        true
    }

    pub fn all(&self, partial: &[Option<usize>]) -> Vec<Embedding> {
        let mut out = Vec::new();
        let m = self.dst.size;
        self.for_each(partial, |map| {
            out.push(Embedding::new(map.to_vec(), m));
            true
        });
        out
    }

    pub fn first(&self, partial: &[Option<usize>]) -> Option<Embedding> {
        let mut out = None;
        let m = self.dst.size;
        self.for_each(partial, |map| {
            out = Some(Embedding::new(map.to_vec(), m));
            false
        });
        out
    }

    pub fn count(&self, partial: &[Option<usize>]) -> usize {
        let mut c = 0;
        self.for_each(partial, |_| {
            c += 1;
            true
        });
        c
    }
}

/// All embeddings `a -> b`, lexicographic on the element map.
pub fn enumerate_embeddings(
    a: &FinStructure,
    b: &FinStructure,
) -> Result<Vec<Embedding>, StructureError> {
    let s = EmbeddingSearch::new(a, b)?;
    Ok(s.all(&vec![None; a.size]))
}

/// First embedding `a -> b` in canonical order, if any.
pub fn first_embedding(
    a: &FinStructure,
    b: &FinStructure,
) -> Result<Option<Embedding>, StructureError> {
    let s = EmbeddingSearch::new(a, b)?;
    Ok(s.first(&vec![None; a.size]))
}

/// First embedding `a -> b` whose values agree with `partial` where it is `Some`.
pub fn first_embedding_extending(
    a: &FinStructure,
    b: &FinStructure,
    partial: &[Option<usize>],
) -> Result<Option<Embedding>, StructureError> {
    let s = EmbeddingSearch::new(a, b)?;
    Ok(s.first(partial))
}

/// A witnessing isomorphism, first in canonical order.
pub fn are_isomorphic(
    a: &FinStructure,
    b: &FinStructure,
) -> Result<Option<Embedding>, StructureError> {
    if a.sig != b.sig {
        return Err(StructureError::SignatureMismatch);
    }
    if a.size != b.size {
        return Ok(None);
    }
    first_embedding(a, b)
}

/// The automorphism group, identity first, in lexicographic order.
pub fn automorphisms(a: &FinStructure) -> Vec<Embedding> {
    enumerate_embeddings(a, a).expect("same signature")
}

/// Canonical representative of the isomorphism class: the relabelling with the
/// lexicographically least encoding. Permutations are restricted to those
/// respecting an isomorphism-invariant colouring of elements, which keeps the
/// search small on typical inputs.
pub fn canonical_form(a: &FinStructure) -> FinStructure {
    let n = a.size;
    if n <= 1 {
        return a.clone();
    }
    let colour = element_invariants(a);
    // elements grouped into cells by invariant; cells ordered by invariant
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| colour[x].cmp(&colour[y]).then(x.cmp(&y)));
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for &x in &order {
        match cells.last_mut() {
            Some(c) if colour[c[0]] == colour[x] => c.push(x),
            _ => cells.push(vec![x]),
        }
    }
    // positions: cell k occupies a contiguous block of new labels
    let mut best: Option<(Vec<usize>, FinStructure)> = None;
    let mut perm = vec![0usize; n];
    let mut block_start = Vec::with_capacity(cells.len());
    let mut acc = 0;
    for c in &cells {
        block_start.push(acc);
        acc += c.len();
    }
    fn permute_cells(
        cells: &[Vec<usize>],
        block_start: &[usize],
        k: usize,
        perm: &mut Vec<usize>,
        a: &FinStructure,
        best: &mut Option<(Vec<usize>, FinStructure)>,
    ) {
        if k == cells.len() {
            let s = a.relabel(perm);
            let e = s.encode();
            if best.as_ref().map_or(true, |(b, _)| e < *b) {
                *best = Some((e, s));
            }
            return;
        }
        let cell = &cells[k];
        let mut idx: Vec<usize> = (0..cell.len()).collect();
        loop {
            for (slot, &i) in idx.iter().enumerate() {
                perm[cell[i]] = block_start[k] + slot;
            }
            permute_cells(cells, block_start, k + 1, perm, a, best);
            if !next_permutation(&mut idx) {
                break;
            }
        }
    }
    permute_cells(&cells, &block_start, 0, &mut perm, a, &mut best);
    best.expect("at least one permutation").1
}

/// Lexicographic successor; returns `false` after the last permutation.
pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Per-element invariant: for every symbol and argument position, how many
/// facts mention the element there; refined once by neighbour colours.
fn element_invariants(a: &FinStructure) -> Vec<Vec<usize>> {
    let n = a.size;
    let mut inv: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut buf = vec![0; 8];
    for (sym, interp) in a.interps.iter().enumerate() {
        let arity = a.sig.symbols[sym].arity;
        if buf.len() < arity {
            buf.resize(arity, 0);
        }
        let width = arity + 1;
        let mut counts = vec![vec![0usize; width]; n];
        match interp {
            Interp::Rel(t) => {
                for (i, &b) in t.iter().enumerate() {
                    if b {
                        index_tuple(n, arity, i, &mut buf);
                        for (pos, &x) in buf[..arity].iter().enumerate() {
                            counts[x][pos] += 1;
                        }
                        // diagonal facts (repeated entries) are invariant too
                        if arity > 1 && buf[..arity].windows(2).all(|w| w[0] == w[1]) {
                            counts[buf[0]][arity] += 1;
                        }
                    }
                }
            }
            Interp::Func(t) => {
                for (i, &v) in t.iter().enumerate() {
                    index_tuple(n, arity, i, &mut buf);
                    if buf[..arity].iter().all(|&x| x == v) {
                        counts[v][arity] += 1;
                    }
                }
                for &v in t.iter() {
                    counts[v][0] += 1;
                }
            }
            Interp::Const(c) => counts[*c][0] += 1,
        }
        for x in 0..n {
            inv[x].extend_from_slice(&counts[x]);
        }
    }
    // one refinement round over binary relations
    let base = inv.clone();
    for (sym, interp) in a.interps.iter().enumerate() {
        if a.sig.symbols[sym].arity != 2 {
            continue;
        }
        if let Interp::Rel(t) = interp {
            for x in 0..n {
                let mut out_nb: Vec<&Vec<usize>> =
                    (0..n).filter(|&y| t[x * n + y]).map(|y| &base[y]).collect();
                out_nb.sort();
                let mut in_nb: Vec<&Vec<usize>> =
                    (0..n).filter(|&y| t[y * n + x]).map(|y| &base[y]).collect();
                in_nb.sort();
                let mut extra = Vec::new();
                for v in out_nb {
                    extra.extend_from_slice(v);
                    extra.push(usize::MAX);
                }
                extra.push(usize::MAX - 1);
                for v in in_nb {
                    extra.extend_from_slice(v);
                    extra.push(usize::MAX);
                }
                inv[x].extend(extra);
            }
        }
    }
    inv
}

/// All closed subsets of the universe, as sorted lists, in order of size then
/// lexicographically. Exponential; intended for tiny structures.
pub fn closed_subsets(a: &FinStructure) -> Vec<Vec<usize>> {
    let n = a.size;
    assert!(n <= 20, "closed_subsets is exponential; universe too large");
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let subset: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if a.is_closed_subset(&subset) {
            out.push(subset);
        }
    }
    out.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    out
}

/// Common signatures used by the built-in classes and tests.
pub mod sigs {
    use super::*;

    pub fn graph() -> Arc<Signature> {
        Arc::new(Signature::from_triples(&[("E", SymbolKind::Relation, 2)]).unwrap())
    }

    pub fn order() -> Arc<Signature> {
        Arc::new(Signature::from_triples(&[("L", SymbolKind::Relation, 2)]).unwrap())
    }

    pub fn pure() -> Arc<Signature> {
        Arc::new(Signature::empty())
    }

    pub fn boolean() -> Arc<Signature> {
        Arc::new(
            Signature::from_triples(&[
                ("meet", SymbolKind::Function, 2),
                ("join", SymbolKind::Function, 2),
                ("not", SymbolKind::Function, 1),
                ("zero", SymbolKind::Constant, 0),
                ("one", SymbolKind::Constant, 0),
            ])
            .unwrap(),
        )
    }
}

/// Small structure constructors shared by the built-in classes and tests.
pub mod build {
    use super::*;

    /// Undirected simple graph from an edge list.
    pub fn graph(n: usize, edges: &[(usize, usize)]) -> FinStructure {
        let mut g = FinStructure::empty_relations(sigs::graph(), n).unwrap();
        for &(x, y) in edges {
            g.set_relation_at(0, &[x, y], true).unwrap();
            g.set_relation_at(0, &[y, x], true).unwrap();
        }
        g
    }

    pub fn cycle(n: usize) -> FinStructure {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        graph(n, &edges)
    }

    /// Directed graph over the same signature (no symmetrisation).
    pub fn digraph(n: usize, arcs: &[(usize, usize)]) -> FinStructure {
        let mut g = FinStructure::empty_relations(sigs::graph(), n).unwrap();
        for &(x, y) in arcs {
            g.set_relation_at(0, &[x, y], true).unwrap();
        }
        g
    }

    /// The strict linear order `0 < 1 < ... < n-1`.
    pub fn chain_order(n: usize) -> FinStructure {
        let mut o = FinStructure::empty_relations(sigs::order(), n).unwrap();
        for x in 0..n {
            for y in x + 1..n {
                o.set_relation_at(0, &[x, y], true).unwrap();
            }
        }
        o
    }

    /// Strict linear order in which element `rank_of[x]`-th smallest is `x`.
    pub fn order_from_ranks(ranks: &[usize]) -> FinStructure {
        let n = ranks.len();
        let mut o = FinStructure::empty_relations(sigs::order(), n).unwrap();
        for x in 0..n {
            for y in 0..n {
                if ranks[x] < ranks[y] {
                    o.set_relation_at(0, &[x, y], true).unwrap();
                }
            }
        }
        o
    }

    pub fn pure_set(n: usize) -> FinStructure {
        FinStructure::empty_relations(sigs::pure(), n).unwrap()
    }

    /// The powerset algebra on `k` atoms; element `m` is the subset with bitmask `m`.
    pub fn powerset_algebra(k: usize) -> FinStructure {
        let n = 1usize << k;
        let full = n - 1;
        let mut b = FinStructure::builder(sigs::boolean(), n).unwrap();
        let mut meet = vec![0; n * n];
        let mut join = vec![0; n * n];
        for x in 0..n {
            for y in 0..n {
                meet[x * n + y] = x & y;
                join[x * n + y] = x | y;
            }
        }
        let not: Vec<usize> = (0..n).map(|x| full & !x).collect();
        b.set_function("meet", meet).unwrap();
        b.set_function("join", join).unwrap();
        b.set_function("not", not).unwrap();
        b.set_constant("zero", 0).unwrap();
        b.set_constant("one", full).unwrap();
        b
    }
}

#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;

    fn brute_force_embeddings(a: &FinStructure, b: &FinStructure) -> usize {
        // enumerate every injection independently of the search
        fn rec(a: &FinStructure, b: &FinStructure, map: &mut Vec<usize>, count: &mut usize) {
            if map.len() == a.size() {
                if check_embedding(a, b, map).is_ok() {
                    *count += 1;
                }
                return;
            }
            for y in 0..b.size() {
                if !map.contains(&y) {
                    map.push(y);
                    rec(a, b, map, count);
                    map.pop();
                }
            }
        }
        let mut c = 0;
        rec(a, b, &mut Vec::new(), &mut c);
        c
    }

    #[test]
    fn vertex_into_two_vertices() {
        let a = graph(1, &[]);
        let b = graph(2, &[]);
        assert_eq!(enumerate_embeddings(&a, &b).unwrap().len(), 2);
    }

    #[test]
    fn directed_edge_into_three_cycle() {
        let a = digraph(2, &[(0, 1)]);
        let b = digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        let embs = enumerate_embeddings(&a, &b).unwrap();
        assert_eq!(embs.len(), brute_force_embeddings(&a, &b));
        assert_eq!(embs.len(), 3);
    }

    #[test]
    fn two_chain_into_three_chain() {
        let a = chain_order(2);
        let b = chain_order(3);
        assert_eq!(brute_force_embeddings(&a, &b), 3);
        assert_eq!(enumerate_embeddings(&a, &b).unwrap().len(), 3);
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let a = graph(2, &[]);
        let b = graph(4, &[(0, 1)]);
        let embs = enumerate_embeddings(&a, &b).unwrap();
        let mut sorted = embs.clone();
        sorted.sort();
        assert_eq!(embs, sorted);
    }

    #[test]
    fn isomorphism_examples() {
        let c3 = cycle(3);
        let w = are_isomorphic(&c3, &c3).unwrap().unwrap();
        assert!(w.is_identity());
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert!(are_isomorphic(&path, &c3).unwrap().is_none());
    }

    #[test]
    fn relabelled_graph_is_isomorphic() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (0, 3), (3, 4)]);
        let perm = vec![3, 0, 4, 1, 2];
        let h = g.relabel(&perm);
        let w = are_isomorphic(&g, &h).unwrap().expect("isomorphic");
        assert!(check_embedding(&g, &h, w.map()).is_ok());
        let back = w.inverse().unwrap();
        assert!(check_embedding(&h, &g, back.map()).is_ok());
    }

    #[test]
    fn automorphism_counts() {
        assert_eq!(automorphisms(&pure_set(3)).len(), 6);
        assert_eq!(automorphisms(&chain_order(3)).len(), 1);
        let c4 = cycle(4);
        let auts = automorphisms(&c4);
        assert_eq!(auts.len(), brute_force_embeddings(&c4, &c4));
        assert_eq!(auts.len(), 8);
        assert!(auts[0].is_identity());
    }

    #[test]
    fn automorphisms_form_a_group() {
        let c4 = cycle(4);
        let auts = automorphisms(&c4);
        for f in &auts {
            assert!(auts.contains(&f.inverse().unwrap()));
            for g in &auts {
                assert!(auts.contains(&f.after(g)));
            }
        }
    }

    #[test]
    fn boolean_algebra_embeddings() {
        let two = powerset_algebra(1);
        let four = powerset_algebra(2);
        let eight = powerset_algebra(3);
        assert_eq!(enumerate_embeddings(&two, &eight).unwrap().len(), 1);
        // 4-element subalgebras of the 8-element one: choose an element a with a, ¬a both nonzero (6 ordered choices)
        assert_eq!(enumerate_embeddings(&four, &eight).unwrap().len(), 6);
        assert_eq!(automorphisms(&eight).len(), 6);
    }

    #[test]
    fn signature_validation() {
        assert!(matches!(
            Signature::from_triples(&[
                ("a", SymbolKind::Relation, 1),
                ("a", SymbolKind::Function, 1)
            ]),
            Err(StructureError::DuplicateSymbol(_))
        ));
        assert!(Signature::from_triples(&[("c", SymbolKind::Constant, 1)]).is_err());
        let many: Vec<Symbol> = (0..33)
            .map(|i| Symbol {
                name: format!("R{i}"),
                kind: SymbolKind::Relation,
                arity: 1,
            })
            .collect();
        assert!(matches!(
            Signature::new(many),
            Err(StructureError::TooManySymbols(33))
        ));
        assert_eq!(
            FinStructure::builder(sigs::boolean(), 0).unwrap_err(),
            StructureError::EmptyWithConstants
        );
    }

    #[test]
    fn partial_table_rejected() {
        let mut b = FinStructure::builder(sigs::boolean(), 2).unwrap();
        assert!(matches!(
            b.set_function("not", vec![1]),
            Err(StructureError::PartialTable { .. })
        ));
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        assert_eq!(
            enumerate_embeddings(&graph(1, &[]), &chain_order(1)).unwrap_err(),
            StructureError::SignatureMismatch
        );
    }

    #[test]
    fn canonical_form_is_invariant() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let h = g.relabel(&[4, 2, 0, 1, 3]);
        assert_eq!(canonical_form(&g), canonical_form(&h));
        let k = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_ne!(canonical_form(&g), canonical_form(&k));
    }

    #[test]
    fn induced_substructure_and_closure() {
        let b = powerset_algebra(2);
        // {0, 1, 2, 3} is everything; {0, 3} is the two-element subalgebra
        assert!(b.is_closed_subset(&[0, 3]));
        assert!(!b.is_closed_subset(&[0, 1, 3]));
        let (sub, inc) = b.induced(&[0, 3]).unwrap();
        assert!(are_isomorphic(&sub, &powerset_algebra(1))
            .unwrap()
            .is_some());
        assert!(check_embedding(&sub, &b, inc.map()).is_ok());
        assert_eq!(b.generated_by(&[1]), vec![0, 1, 2, 3]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph(max: usize) -> impl Strategy<Value = FinStructure> {
            (0..=max).prop_flat_map(|n| {
                proptest::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
                    let mut edges = Vec::new();
                    for x in 0..n {
                        for y in x + 1..n {
                            if bits[x * n + y] {
                                edges.push((x, y));
                            }
                        }
                    }
                    graph(n, &edges)
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn embeddings_compose(a in arb_graph(3), b in arb_graph(4), c in arb_graph(5)) {
                let ab = enumerate_embeddings(&a, &b).unwrap();
                let bc = enumerate_embeddings(&b, &c).unwrap();
                for f in ab.iter().take(3) {
                    for g in bc.iter().take(3) {
                        prop_assert!(check_embedding(&a, &c, g.after(f).map()).is_ok());
                    }
                }
                prop_assert!(check_embedding(&a, &a, Embedding::identity(a.size()).map()).is_ok());
            }

            #[test]
            fn embedding_count_matches_brute_force(a in arb_graph(3), b in arb_graph(5)) {
                prop_assert_eq!(enumerate_embeddings(&a, &b).unwrap().len(), brute_force_embeddings(&a, &b));
            }

            #[test]
            fn image_is_isomorphic_to_source(a in arb_graph(4), b in arb_graph(5)) {
                for e in enumerate_embeddings(&a, &b).unwrap() {
                    let img = e.image();
                    let (sub, _) = b.induced(&img).unwrap();
                    prop_assert!(are_isomorphic(&a, &sub).unwrap().is_some());
                }
            }

            #[test]
            fn bijective_self_embeddings_are_automorphisms(a in arb_graph(5)) {
                let selfs: Vec<_> = enumerate_embeddings(&a, &a).unwrap().into_iter().filter(|e| e.is_bijective()).collect();
                prop_assert_eq!(selfs, automorphisms(&a));
            }

            #[test]
            fn canonical_form_respects_isomorphism(a in arb_graph(6), seed in any::<u64>()) {
                let n = a.size();
                let mut perm: Vec<usize> = (0..n).collect();
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    perm.swap(i, (s >> 33) as usize % (i + 1));
                }
                let b = a.relabel(&perm);
                prop_assert_eq!(canonical_form(&a), canonical_form(&b));
            }
        }
    }
}
