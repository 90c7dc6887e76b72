//! Ages: isomorphism-closed classes of finite structures, with bounded
//! searches for amalgamation, joint embedding, weakly initial members and
//! dominating families.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::format::{parse_structure, write_structure, ParseError};
use crate::structures::{
    are_isomorphic, build, canonical_form, check_embedding, closed_subsets, enumerate_embeddings,
    first_embedding, sigs, Embedding, EmbeddingSearch, FinStructure, Signature, StructureError,
};
use crate::verdict::{Outcome, Verdict};

#[derive(Debug, Error)]
pub enum AgeError {
    #[error("enumerator for `{class}` cannot produce members of size {size} (cap {cap})")]
    EnumeratorExhausted {
        class: String,
        size: usize,
        cap: usize,
    },
    #[error("bad bounds: {0}")]
    BadBounds(String),
    #[error("unknown age `{0}` (expected graphs, linords, boolean, pure)")]
    UnknownAge(String),
    #[error("class is not closed under substructures: {0}")]
    NotClosed(String),
    #[error("class has no members")]
    Empty,
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// Add every substructure of every listed member.
    AutoClose,
    /// Fail if some substructure of a member is missing.
    Reject,
}

#[derive(Debug, Clone)]
pub enum AgeKind {
    Graphs,
    LinearOrders,
    BooleanAlgebras,
    PureSets,
    /// A finite class given by canonical representatives, sorted by size then encoding.
    Explicit(Vec<FinStructure>),
}

/// A class of finite structures closed under isomorphism and substructures.
#[derive(Debug)]
pub struct AgeClass {
    name: String,
    sig: Arc<Signature>,
    kind: AgeKind,
    cache: Mutex<BTreeMap<usize, Arc<Vec<FinStructure>>>>,
}

const GRAPH_CAP: usize = 8;
const ORDER_CAP: usize = 32;
const BOOLEAN_CAP: usize = 16;

impl AgeClass {
    fn with(name: &str, sig: Arc<Signature>, kind: AgeKind) -> Arc<Self> {
        Arc::new(AgeClass {
            name: name.to_string(),
            sig,
            kind,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn graphs() -> Arc<Self> {
        Self::with("graphs", sigs::graph(), AgeKind::Graphs)
    }

    pub fn linear_orders() -> Arc<Self> {
        Self::with("linords", sigs::order(), AgeKind::LinearOrders)
    }

    pub fn boolean_algebras() -> Arc<Self> {
        Self::with("boolean", sigs::boolean(), AgeKind::BooleanAlgebras)
    }

    pub fn pure_sets() -> Arc<Self> {
        Self::with("pure", sigs::pure(), AgeKind::PureSets)
    }

    pub fn by_name(name: &str) -> Result<Arc<Self>, AgeError> {
        match name {
            "graphs" | "simple-graphs" => Ok(Self::graphs()),
            "linords" | "linear-orders" | "orders" => Ok(Self::linear_orders()),
            "boolean" | "ba" | "boolean-algebras" => Ok(Self::boolean_algebras()),
            "pure" | "sets" | "pure-sets" => Ok(Self::pure_sets()),
            other => Err(AgeError::UnknownAge(other.to_string())),
        }
    }

    /// A finite class from explicit members.
    pub fn explicit(
        name: &str,
        members: Vec<FinStructure>,
        closure: Closure,
    ) -> Result<Arc<Self>, AgeError> {
        let first = members.first().ok_or(AgeError::Empty)?;
        let sig = first.signature().clone();
        let mut seen: BTreeMap<(usize, Vec<usize>), FinStructure> = BTreeMap::new();
        for m in &members {
            if **m.signature() != *sig {
                return Err(StructureError::SignatureMismatch.into());
            }
            let c = canonical_form(m);
            seen.insert((c.size(), c.encode()), c);
        }
        let listed: Vec<FinStructure> = seen.values().cloned().collect();
        for m in &listed {
            for sub in closed_subsets(m) {
                let (s, _) = m.induced(&sub)?;
                let c = canonical_form(&s);
                let key = (c.size(), c.encode());
                if !seen.contains_key(&key) {
                    match closure {
                        Closure::AutoClose => {
                            seen.insert(key, c);
                        }
                        Closure::Reject => {
                            return Err(AgeError::NotClosed(format!(
                                "substructure on {:?} of a size-{} member is not listed",
                                sub,
                                m.size()
                            )))
                        }
                    }
                }
            }
        }
        Ok(Self::with(
            name,
            sig,
            AgeKind::Explicit(seen.into_values().collect()),
        ))
    }

    /// A finite class from a directory of structure files (read in name order).
    pub fn from_dir(dir: &Path, closure: Closure) -> Result<Arc<Self>, AgeError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        let mut members = Vec::new();
        let mut sig: Option<Arc<Signature>> = None;
        for p in paths {
            let text = std::fs::read_to_string(&p)?;
            let s = parse_structure(&text, sig.as_ref()).map_err(|source| AgeError::Parse {
                path: p.display().to_string(),
                source,
            })?;
            sig.get_or_insert_with(|| s.signature().clone());
            members.push(s);
        }
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        Self::explicit(&name, members, closure)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn kind(&self) -> &AgeKind {
        &self.kind
    }

    /// Largest size the enumerator can produce; `None` for finite classes,
    /// which can produce every size.
    pub fn cap(&self) -> Option<usize> {
        match self.kind {
            AgeKind::Graphs => Some(GRAPH_CAP),
            AgeKind::LinearOrders | AgeKind::PureSets => Some(ORDER_CAP),
            AgeKind::BooleanAlgebras => Some(BOOLEAN_CAP),
            AgeKind::Explicit(_) => None,
        }
    }

    /// Size of the largest member, for finite classes.
    pub fn max_member_size(&self) -> Option<usize> {
        match &self.kind {
            AgeKind::Explicit(ms) => ms.iter().map(|m| m.size()).max(),
            _ => None,
        }
    }

    /// Whether a search up to `bound` sees the whole class, so that a failed
    /// search is a certificate.
    pub fn exhausted_by(&self, bound: usize) -> bool {
        self.max_member_size().is_some_and(|m| m <= bound)
    }

    pub fn contains(&self, s: &FinStructure) -> bool {
        if **s.signature() != *self.sig {
            return false;
        }
        match &self.kind {
            AgeKind::Graphs => {
                let n = s.size();
                (0..n).all(|x| {
                    !s.relation_holds(0, &[x, x])
                        && (0..n)
                            .all(|y| s.relation_holds(0, &[x, y]) == s.relation_holds(0, &[y, x]))
                })
            }
            AgeKind::LinearOrders => is_strict_total_order(s),
            AgeKind::PureSets => true,
            AgeKind::BooleanAlgebras => boolean_atoms(s).is_some(),
            AgeKind::Explicit(ms) => ms
                .iter()
                .filter(|m| m.size() == s.size())
                .any(|m| matches!(are_isomorphic(m, s), Ok(Some(_)))),
        }
    }

    /// One representative per isomorphism class of size `n`, canonical and sorted.
    pub fn members_of_size(&self, n: usize) -> Result<Arc<Vec<FinStructure>>, AgeError> {
        if let Some(cap) = self.cap() {
            if n > cap {
                return Err(AgeError::EnumeratorExhausted {
                    class: self.name.clone(),
                    size: n,
                    cap,
                });
            }
        }
        if let Some(v) = self.cache.lock().expect("cache").get(&n) {
            return Ok(v.clone());
        }
        let v = Arc::new(self.generate(n)?);
        self.cache.lock().expect("cache").insert(n, v.clone());
        Ok(v)
    }

    /// All representatives of size at most `bound`, by size then encoding.
    pub fn members_up_to(&self, bound: usize) -> Result<Vec<FinStructure>, AgeError> {
        let mut out = Vec::new();
        for n in 0..=bound {
            out.extend(self.members_of_size(n)?.iter().cloned());
        }
        Ok(out)
    }

    fn generate(&self, n: usize) -> Result<Vec<FinStructure>, AgeError> {
        Ok(match &self.kind {
            AgeKind::PureSets => vec![build::pure_set(n)],
            AgeKind::LinearOrders => vec![build::chain_order(n)],
            AgeKind::BooleanAlgebras => {
                if n >= 2 && n.is_power_of_two() {
                    vec![build::powerset_algebra(n.trailing_zeros() as usize)]
                } else {
                    Vec::new()
                }
            }
            AgeKind::Explicit(ms) => ms.iter().filter(|m| m.size() == n).cloned().collect(),
            AgeKind::Graphs => {
                if n == 0 {
                    vec![build::graph(0, &[])]
                } else {
                    let smaller = self.members_of_size(n - 1)?;
                    let mut seen: BTreeMap<Vec<usize>, FinStructure> = BTreeMap::new();
                    for g in smaller.iter() {
                        for mask in 0u32..(1u32 << (n - 1)) {
                            let mut edges = Vec::new();
                            for x in 0..n - 1 {
                                for y in x + 1..n - 1 {
                                    if g.relation_holds(0, &[x, y]) {
                                        edges.push((x, y));
                                    }
                                }
                                if mask & (1 << x) != 0 {
                                    edges.push((x, n - 1));
                                }
                            }
                            let c = canonical_form(&build::graph(n, &edges));
                            seen.entry(c.encode()).or_insert(c);
                        }
                    }
                    seen.into_values().collect()
                }
            }
        })
    }
}

fn is_strict_total_order(s: &FinStructure) -> bool {
    let n = s.size();
    let l = |x: usize, y: usize| s.relation_holds(0, &[x, y]);
    for x in 0..n {
        if l(x, x) {
            return false;
        }
        for y in 0..n {
            if x != y && l(x, y) == l(y, x) {
                return false;
            }
            if l(x, y) && (0..n).any(|z| l(y, z) && !l(x, z)) {
                return false;
            }
        }
    }
    true
}

/// Atoms of a Boolean algebra in the built-in signature, if `s` is one with at
/// least two elements; the algebra is verified against the powerset algebra on
/// its atoms, element by element.
pub fn boolean_atoms(s: &FinStructure) -> Option<Vec<usize>> {
    let n = s.size();
    let (meet, join, not, zero, one) = (0, 1, 2, 3, 4);
    let z = s.constant(zero)?;
    let o = s.constant(one)?;
    if n < 2 || !n.is_power_of_two() || z == o {
        return None;
    }
    let atoms: Vec<usize> = (0..n)
        .filter(|&x| {
            x != z
                && (0..n).all(|y| {
                    let m = s.apply(meet, &[x, y]);
                    m == z || m == x
                })
        })
        .collect();
    let k = atoms.len();
    if 1usize.checked_shl(k as u32) != Some(n) {
        return None;
    }
    // phi(mask) = join of the atoms in mask
    let mut phi = vec![z; n];
    for mask in 1..n {
        let low = mask.trailing_zeros() as usize;
        phi[mask] = s.apply(join, &[phi[mask & (mask - 1)], atoms[low]]);
    }
    let mut hit = vec![false; n];
    for &v in &phi {
        if hit[v] {
            return None;
        }
        hit[v] = true;
    }
    if phi[n - 1] != o {
        return None;
    }
    for a in 0..n {
        if s.apply(not, &[phi[a]]) != phi[(n - 1) & !a] {
            return None;
        }
        for b in 0..n {
            if s.apply(meet, &[phi[a], phi[b]]) != phi[a & b]
                || s.apply(join, &[phi[a], phi[b]]) != phi[a | b]
            {
                return None;
            }
        }
    }
    Some(atoms)
}

/// An arrow of the age: an embedding with its endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arrow {
    pub dom: FinStructure,
    pub cod: FinStructure,
    pub map: Embedding,
}

impl Arrow {
    pub fn new(
        dom: FinStructure,
        cod: FinStructure,
        map: Embedding,
    ) -> Result<Self, StructureError> {
        check_embedding(&dom, &cod, map.map())?;
        Ok(Arrow { dom, cod, map })
    }
}

/// A span `b <-f- a -g-> c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub a: FinStructure,
    pub b: FinStructure,
    pub c: FinStructure,
    pub f: Embedding,
    pub g: Embedding,
}

/// A failure certificate for AP or JEP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Counterexample {
    Span(Span),
    Pair(FinStructure, FinStructure),
}

impl Counterexample {
    pub fn describe(&self) -> String {
        match self {
            Counterexample::Span(s) => format!(
                "span |a|={} f={} g={} (|b|={}, |c|={})",
                s.a.size(),
                s.f,
                s.g,
                s.b.size(),
                s.c.size()
            ),
            Counterexample::Pair(a, b) => format!("pair |a|={} |b|={}", a.size(), b.size()),
        }
    }

    /// Replayable text form: `[a]`, `[b]`, `[c]` structure sections and, for
    /// spans, a `[maps]` section with `f:` and `g:` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Counterexample::Span(s) => {
                let _ = write!(
                    out,
                    "[a]\n{}[b]\n{}[c]\n{}",
                    write_structure(&s.a),
                    write_structure(&s.b),
                    write_structure(&s.c)
                );
                let m = |e: &Embedding| {
                    e.map()
                        .iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                let _ = write!(out, "[maps]\nf: {}\ng: {}\n", m(&s.f), m(&s.g));
            }
            Counterexample::Pair(a, b) => {
                let _ = write!(
                    out,
                    "[a]\n{}[b]\n{}",
                    write_structure(a),
                    write_structure(b)
                );
            }
        }
        out
    }

    pub fn from_text(text: &str, sig: Option<&Arc<Signature>>) -> Result<Self, ParseError> {
        let mut sections: BTreeMap<String, String> = BTreeMap::new();
        let mut current: Option<String> = None;
        for line in text.lines() {
            let t = line.trim();
            if t.starts_with('[') && t.ends_with(']') {
                current = Some(t[1..t.len() - 1].to_string());
                sections.insert(current.clone().unwrap(), String::new());
            } else if let Some(c) = &current {
                let s = sections.get_mut(c).expect("section");
                s.push_str(line);
                s.push('\n');
            } else if !t.is_empty() && !t.starts_with('#') {
                return Err(ParseError::Syntax {
                    line: 0,
                    msg: "content before the first section".into(),
                });
            }
        }
        let get = |k: &'static str| sections.get(k).ok_or(ParseError::Missing(k));
        let a = parse_structure(get("a")?, sig)?;
        let b = parse_structure(get("b")?, Some(a.signature()))?;
        if !sections.contains_key("c") {
            return Ok(Counterexample::Pair(a, b));
        }
        let c = parse_structure(get("c")?, Some(a.signature()))?;
        let mut f = None;
        let mut g = None;
        for (ln, l) in crate::format::content_lines(get("maps")?) {
            let (k, v) = l.split_once(':').ok_or(ParseError::Syntax {
                line: ln,
                msg: "expected `f: ...` or `g: ...`".into(),
            })?;
            let vals: Vec<usize> = v
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|_| ParseError::Syntax {
                        line: ln,
                        msg: format!("bad element `{t}`"),
                    })
                })
                .collect::<Result<_, _>>()?;
            match k.trim() {
                "f" => f = Some(vals),
                "g" => g = Some(vals),
                other => {
                    return Err(ParseError::Syntax {
                        line: ln,
                        msg: format!("unknown map `{other}`"),
                    })
                }
            }
        }
        let f = f.ok_or(ParseError::Missing("f"))?;
        let g = g.ok_or(ParseError::Missing("g"))?;
        check_embedding(&a, &b, &f)?;
        check_embedding(&a, &c, &g)?;
        Ok(Counterexample::Span(Span {
            f: Embedding::new(f, b.size()),
            g: Embedding::new(g, c.size()),
            a,
            b,
            c,
        }))
    }
}

/// Result of a bounded AP or JEP search.
#[derive(Debug, Clone)]
pub struct SearchVerdict {
    pub property: &'static str,
    pub outcome: Outcome,
    pub instance_bound: usize,
    pub witness_bound: usize,
    pub instances: usize,
    pub unmet: usize,
    /// Number of instances whose first witness had the given size.
    pub witness_sizes: BTreeMap<usize, usize>,
    pub counterexample: Option<Counterexample>,
}

impl SearchVerdict {
    pub fn outcome_label(&self) -> &'static str {
        match self.outcome {
            Outcome::Holds => "holds-within-bound",
            Outcome::Violated => "fails-with-counterexample",
            Outcome::Pending => "inconclusive",
        }
    }

    pub fn report(&self) -> String {
        let mut s = format!(
            "property: {}\noutcome: {}\ninstance-bound: {}\nwitness-bound: {}\ninstances: {}\nunmet: {}\n",
            self.property,
            self.outcome_label(),
            self.instance_bound,
            self.witness_bound,
            self.instances,
            self.unmet
        );
        for (size, count) in &self.witness_sizes {
            let _ = writeln!(s, "witness-size {size}: {count}");
        }
        if let Some(c) = &self.counterexample {
            let _ = writeln!(s, "counterexample: {}", c.describe());
        }
        s
    }
}

/// Witness for a span: `(d, f', g')` with `f'∘f = g'∘g`.
pub type Amalgam = (FinStructure, Embedding, Embedding);

/// Smallest amalgam of a span among members of size at most `bound`, first in
/// canonical order.
pub fn find_amalgam(
    class: &AgeClass,
    span: &Span,
    bound: usize,
) -> Result<Option<Amalgam>, AgeError> {
    let lo = span.b.size().max(span.c.size());
    for size in lo..=bound {
        for d in class.members_of_size(size)?.iter() {
            let search_c = EmbeddingSearch::new(&span.c, d)?;
            let mut found = None;
            EmbeddingSearch::new(&span.b, d)?.for_each(&vec![None; span.b.size()], |fp| {
                let mut partial = vec![None; span.c.size()];
                for x in 0..span.a.size() {
                    partial[span.g.apply(x)] = Some(fp[span.f.apply(x)]);
                }
                if let Some(gp) = search_c.first(&partial) {
                    found = Some((Embedding::new(fp.to_vec(), d.size()), gp));
                    false
                } else {
                    true
                }
            });
            if let Some((fp, gp)) = found {
                return Ok(Some((d.clone(), fp, gp)));
            }
        }
    }
    Ok(None)
}

/// Smallest common extension of a pair.
pub fn find_joint_embedding(
    class: &AgeClass,
    a: &FinStructure,
    b: &FinStructure,
    bound: usize,
) -> Result<Option<Amalgam>, AgeError> {
    for size in a.size().max(b.size())..=bound {
        for c in class.members_of_size(size)?.iter() {
            if let Some(f) = first_embedding(a, c)? {
                if let Some(g) = first_embedding(b, c)? {
                    return Ok(Some((c.clone(), f, g)));
                }
            }
        }
    }
    Ok(None)
}

/// Every span `b <- a -> c` with `|b|, |c| <= bound` over representatives, in
/// canonical order.
pub fn spans_up_to(class: &AgeClass, bound: usize) -> Result<Vec<Span>, AgeError> {
    let reps = class.members_up_to(bound)?;
    let mut out = Vec::new();
    for a in &reps {
        for b in reps.iter().filter(|b| b.size() >= a.size()) {
            let fs = enumerate_embeddings(a, b)?;
            if fs.is_empty() {
                continue;
            }
            for c in reps.iter().filter(|c| c.size() >= a.size()) {
                let gs = enumerate_embeddings(a, c)?;
                for f in &fs {
                    for g in &gs {
                        out.push(Span {
                            a: a.clone(),
                            b: b.clone(),
                            c: c.clone(),
                            f: f.clone(),
                            g: g.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_bounds(instance: usize, witness: usize) -> Result<(), AgeError> {
    if instance == 0 || witness == 0 {
        return Err(AgeError::BadBounds("bounds must be at least 1".into()));
    }
    if witness < instance {
        return Err(AgeError::BadBounds(format!(
            "witness bound {witness} is below instance bound {instance}"
        )));
    }
    Ok(())
}

pub fn check_amalgamation(
    class: &AgeClass,
    span_bound: usize,
    amalgam_bound: usize,
) -> Result<SearchVerdict, AgeError> {
    check_bounds(span_bound, amalgam_bound)?;
    let mut v = SearchVerdict {
        property: "amalgamation",
        outcome: Outcome::Holds,
        instance_bound: span_bound,
        witness_bound: amalgam_bound,
        instances: 0,
        unmet: 0,
        witness_sizes: BTreeMap::new(),
        counterexample: None,
    };
    for span in spans_up_to(class, span_bound)? {
        v.instances += 1;
        match find_amalgam(class, &span, amalgam_bound)? {
            Some((d, _, _)) => *v.witness_sizes.entry(d.size()).or_default() += 1,
            None => {
                v.unmet += 1;
                v.counterexample.get_or_insert(Counterexample::Span(span));
            }
        }
    }
    v.outcome = settle(class, v.unmet, amalgam_bound);
    Ok(v)
}

pub fn check_jep(
    class: &AgeClass,
    pair_bound: usize,
    target_bound: usize,
) -> Result<SearchVerdict, AgeError> {
    check_bounds(pair_bound, target_bound)?;
    let reps = class.members_up_to(pair_bound)?;
    let mut v = SearchVerdict {
        property: "joint-embedding",
        outcome: Outcome::Holds,
        instance_bound: pair_bound,
        witness_bound: target_bound,
        instances: 0,
        unmet: 0,
        witness_sizes: BTreeMap::new(),
        counterexample: None,
    };
    for (i, a) in reps.iter().enumerate() {
        for b in &reps[i..] {
            v.instances += 1;
            match find_joint_embedding(class, a, b, target_bound)? {
                Some((c, _, _)) => *v.witness_sizes.entry(c.size()).or_default() += 1,
                None => {
                    v.unmet += 1;
                    v.counterexample
                        .get_or_insert_with(|| Counterexample::Pair(a.clone(), b.clone()));
                }
            }
        }
    }
    v.outcome = settle(class, v.unmet, target_bound);
    Ok(v)
}

fn settle(class: &AgeClass, unmet: usize, bound: usize) -> Outcome {
    if unmet == 0 {
        Outcome::Holds
    } else if class.exhausted_by(bound) {
        Outcome::Violated
    } else {
        Outcome::Pending
    }
}

/// Re-run the search on a recorded counterexample; `None` means it still fails.
pub fn replay(
    class: &AgeClass,
    cx: &Counterexample,
    bound: usize,
) -> Result<Option<Amalgam>, AgeError> {
    match cx {
        Counterexample::Span(s) => find_amalgam(class, s, bound),
        Counterexample::Pair(a, b) => find_joint_embedding(class, a, b, bound),
    }
}

/// A member embedding into every member of size at most `bound`, if any.
pub fn has_weakly_initial(
    class: &AgeClass,
    bound: usize,
) -> Result<Option<FinStructure>, AgeError> {
    let reps = class.members_up_to(bound)?;
    for cand in &reps {
        let mut ok = true;
        for m in &reps {
            if first_embedding(cand, m)?.is_none() {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(cand.clone()));
        }
    }
    Ok(None)
}

/// Separate verdicts for the two halves of domination.
#[derive(Debug, Clone)]
pub struct DominationReport {
    /// Every member up to the bound maps into some domain of the family.
    pub cofinal: Verdict,
    /// Every arrow out of a domain can be post-composed into the family.
    pub absorbing: Verdict,
}

impl DominationReport {
    pub fn outcome(&self) -> Outcome {
        self.cofinal.outcome().and(self.absorbing.outcome())
    }
}

pub fn check_dominating(
    class: &AgeClass,
    family: &[Arrow],
    bound: usize,
) -> Result<DominationReport, AgeError> {
    let reps = class.members_up_to(bound)?;
    let certified = true;
    let mut cofinal = Verdict::new("dominating/cofinal");
    let mut doms: Vec<&FinStructure> = Vec::new();
    for a in family {
        if !doms.contains(&&a.dom) {
            doms.push(&a.dom);
        }
    }
    for m in &reps {
        let mut hit = false;
        for d in &doms {
            if first_embedding(m, d)?.is_some() {
                hit = true;
                break;
            }
        }
        if hit {
            cofinal.met();
        } else {
            cofinal.unmet(certified, || {
                format!("member of size {} maps into no domain", m.size())
            });
        }
    }
    let in_family: HashSet<(&FinStructure, &FinStructure, &[usize])> = family
        .iter()
        .map(|a| (&a.dom, &a.cod, a.map.map()))
        .collect();
    let mut absorbing = Verdict::new("dominating/absorbing");
    for a in &doms {
        for x in reps.iter().filter(|x| x.size() >= a.size()) {
            for f in enumerate_embeddings(a, x)? {
                let mut hit = false;
                'outer: for y in reps.iter().filter(|y| y.size() >= x.size()) {
                    for g in enumerate_embeddings(x, y)? {
                        let gf = g.after(&f);
                        if in_family.contains(&(*a, y, gf.map())) {
                            hit = true;
                            break 'outer;
                        }
                    }
                }
                if hit {
                    absorbing.met();
                } else {
                    absorbing.unmet(certified, || {
                        format!("f={} from a size-{} domain into a size-{} member has no g with g.f in the family", f, a.size(), x.size())
                    });
                }
            }
        }
    }
    cofinal.note(format!("bound {bound}"));
    absorbing.note(format!("bound {bound}"));
    Ok(DominationReport { cofinal, absorbing })
}

/// All arrows between representatives of size at most `bound`.
pub fn skeleton_arrows(class: &AgeClass, bound: usize) -> Result<Vec<Arrow>, AgeError> {
    let reps = class.members_up_to(bound)?;
    let mut out = Vec::new();
    for a in &reps {
        for b in &reps {
            for e in enumerate_embeddings(a, b)? {
                out.push(Arrow {
                    dom: a.clone(),
                    cod: b.clone(),
                    map: e,
                });
            }
        }
    }
    Ok(out)
}

/// Canonical keys of a list of structures, for set comparisons in tests and reports.
pub fn canonical_keys(ms: &[FinStructure]) -> BTreeSet<Vec<usize>> {
    ms.iter().map(|m| canonical_form(m).encode()).collect()
}
