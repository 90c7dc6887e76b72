//! Back-and-forth between two Fraïssé chains: the zig-zag weave of reindexings
//! `k, l` with arrows `F(i): u_k(i) -> v_l(i)` and `G(i): v_l(i) -> u_k(i+1)`,
//! the partial isomorphism it induces between truncated limits, and the
//! ultrahomogeneity and uniqueness audits built on it.
//!
//! Only successor steps occur at ω; there is no limit-stage case.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::chain::ChainSeq;
use crate::structures::{
    check_embedding, enumerate_embeddings, first_embedding, Embedding, EmbeddingSearch,
    FinStructure, StructureError,
};
use crate::verdict::{Outcome, Verdict};

#[derive(Debug, Error)]
pub enum WeaveError {
    #[error("truncation exhausted at depth {reached} (chains too short; not a refutation)")]
    TruncationExhausted { reached: usize },
    #[error("no discharge for {side} at depth {depth}: the chain is stable and the arrow does not extend")]
    NoDischarge { side: &'static str, depth: usize },
    #[error("seed is not an embedding between the named stages: {0}")]
    BadSeed(String),
    #[error("chains are over different ages (`{0}` vs `{1}`)")]
    AgesDiffer(String, String),
    #[error("induced map is inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// The weave data up to `depth`: `k`, `l` and `F` have `depth + 1` entries, `G` has `depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZigZagWeave {
    pub k: Vec<usize>,
    pub l: Vec<usize>,
    pub f: Vec<Embedding>,
    pub g: Vec<Embedding>,
}

impl ZigZagWeave {
    pub fn depth(&self) -> usize {
        self.g.len()
    }

    /// Per-depth records `k(i) l(i) F(i) G(i)`.
    pub fn report(&self) -> String {
        let mut s = String::new();
        for i in 0..self.f.len() {
            let _ = write!(
                s,
                "depth {i}: k={} l={} F={}",
                self.k[i], self.l[i], self.f[i]
            );
            if let Some(g) = self.g.get(i) {
                let _ = write!(s, " G={g}");
            }
            s.push('\n');
        }
        s
    }
}

/// First `j` in `from..=chain.top_index()` with an embedding `h: src -> stage j`
/// satisfying `h∘along = u_base^j` (`along: stage base -> src`).
fn discharge(
    chain: &ChainSeq,
    base: usize,
    from: usize,
    src: &FinStructure,
    along: &Embedding,
) -> Result<Option<(usize, Embedding)>, StructureError> {
    let mut comp = chain.composite(base, from.min(chain.top_index()));
    for j in from..=chain.top_index() {
        if j > from {
            comp = chain.step(j - 1).after(&comp);
        }
        let mut partial = vec![None; src.size()];
        for x in 0..along.source_size() {
            partial[along.apply(x)] = Some(comp.apply(x));
        }
        if let Some(h) = EmbeddingSearch::new(src, chain.stage(j))?.first(&partial) {
            return Ok(Some((j, h)));
        }
    }
    Ok(None)
}

/// Whether the arrow could be discharged in a stable chain by mapping into its top.
fn stuck_for_good(
    chain: &ChainSeq,
    base: usize,
    src: &FinStructure,
    along: &Embedding,
) -> Result<bool, StructureError> {
    if !chain.is_stable() {
        return Ok(false);
    }
    let top = chain.top_index();
    Ok(discharge(chain, base, top.max(base), src, along)?.is_none())
}

/// All arrows `h: src -> stage j` with `h∘along = u_base^j`, at the first `j`
/// in `from..=top` where one exists, up to `cap` of them in canonical order.
fn discharges(
    chain: &ChainSeq,
    base: usize,
    from: usize,
    src: &FinStructure,
    along: &Embedding,
    cap: usize,
) -> Result<Option<(usize, Vec<Embedding>)>, StructureError> {
    let Some((j, _)) = discharge(chain, base, from, src, along)? else {
        return Ok(None);
    };
    let comp = chain.composite(base, j);
    let mut partial = vec![None; src.size()];
    for x in 0..along.source_size() {
        partial[along.apply(x)] = Some(comp.apply(x));
    }
    let m = chain.stage(j).size();
    let mut out = Vec::new();
    EmbeddingSearch::new(src, chain.stage(j))?.for_each(&partial, |map| {
        out.push(Embedding::new(map.to_vec(), m));
        out.len() < cap
    });
    Ok(Some((j, out)))
}

/// Arrows tried per step when the first choice leads to a dead end.
pub const WEAVE_BRANCH: usize = 16;
/// Total search nodes per weave.
pub const WEAVE_BUDGET: usize = 50_000;

struct WeaveSearch<'a> {
    u: &'a ChainSeq,
    v: &'a ChainSeq,
    depth: usize,
    nodes: usize,
    reached: usize,
    w: ZigZagWeave,
}

impl WeaveSearch<'_> {
    /// Extend `self.w` from depth `i`; `Ok(true)` once the target depth is reached.
    fn go(&mut self, i: usize) -> Result<bool, WeaveError> {
        self.reached = self.reached.max(i);
        if i == self.depth {
            return Ok(true);
        }
        let (ki, li) = (self.w.k[i], self.w.l[i]);
        let fi = self.w.f[i].clone();
        // back: G(i): v_l(i) -> u_j with G(i)∘F(i) = u_k(i)^j, j > k(i)
        let Some((kn, gs)) = discharges(self.u, ki, ki + 1, self.v.stage(li), &fi, WEAVE_BRANCH)?
        else {
            if stuck_for_good(self.u, ki, self.v.stage(li), &fi)? {
                return Err(WeaveError::NoDischarge {
                    side: "u",
                    depth: i,
                });
            }
            return Ok(false);
        };
        for gi in gs {
            // forth: F(i+1): u_k(i+1) -> v_j with F(i+1)∘G(i) = v_l(i)^j, j > l(i)
            let Some((ln, fs)) =
                discharges(self.v, li, li + 1, self.u.stage(kn), &gi, WEAVE_BRANCH)?
            else {
                if stuck_for_good(self.v, li, self.u.stage(kn), &gi)? {
                    return Err(WeaveError::NoDischarge {
                        side: "v",
                        depth: i,
                    });
                }
                continue;
            };
            for fnext in fs {
                self.nodes += 1;
                if self.nodes > WEAVE_BUDGET {
                    return Ok(false);
                }
                self.w.g.push(gi.clone());
                self.w.k.push(kn);
                self.w.l.push(ln);
                self.w.f.push(fnext);
                if self.go(i + 1)? {
                    return Ok(true);
                }
                self.w.g.pop();
                self.w.k.pop();
                self.w.l.pop();
                self.w.f.pop();
            }
        }
        Ok(false)
    }
}

/// Build a weave of the requested depth from `f: u_k0 -> v_l0`. Each step uses
/// the smallest admissible stage; arrows within it are tried in canonical order,
/// backtracking when a choice cannot be continued inside the truncation.
pub fn weave(
    u: &ChainSeq,
    v: &ChainSeq,
    f: Embedding,
    k0: usize,
    l0: usize,
    depth: usize,
) -> Result<ZigZagWeave, WeaveError> {
    if k0 > u.top_index()
        || l0 > v.top_index()
        || f.source_size() != u.stage(k0).size()
        || f.target_size() != v.stage(l0).size()
    {
        return Err(WeaveError::BadSeed("stage sizes do not match".into()));
    }
    check_embedding(u.stage(k0), v.stage(l0), f.map())
        .map_err(|e| WeaveError::BadSeed(e.to_string()))?;
    let mut search = WeaveSearch {
        u,
        v,
        depth,
        nodes: 0,
        reached: 0,
        w: ZigZagWeave {
            k: vec![k0],
            l: vec![l0],
            f: vec![f],
            g: Vec::new(),
        },
    };
    if search.go(0)? {
        Ok(search.w)
    } else {
        Err(WeaveError::TruncationExhausted {
            reached: search.reached,
        })
    }
}

/// Verify the weave equations and monotonicity exactly.
pub fn check_weave(u: &ChainSeq, v: &ChainSeq, w: &ZigZagWeave) -> Result<(), String> {
    for i in 0..w.depth() {
        if w.k[i + 1] <= w.k[i] || w.l[i + 1] <= w.l[i] {
            return Err(format!("index maps not strictly increasing at {i}"));
        }
        if w.g[i].after(&w.f[i]) != u.composite(w.k[i], w.k[i + 1]) {
            return Err(format!("G({i})∘F({i}) != u_k({i})^k({})", i + 1));
        }
        if w.f[i + 1].after(&w.g[i]) != v.composite(w.l[i], w.l[i + 1]) {
            return Err(format!("F({})∘G({i}) != v_l({i})^l({})", i + 1, i + 1));
        }
    }
    for (i, f) in w.f.iter().enumerate() {
        check_embedding(u.stage(w.k[i]), v.stage(w.l[i]), f.map())
            .map_err(|e| format!("F({i}): {e}"))?;
    }
    for (i, g) in w.g.iter().enumerate() {
        check_embedding(v.stage(w.l[i]), u.stage(w.k[i + 1]), g.map())
            .map_err(|e| format!("G({i}): {e}"))?;
    }
    Ok(())
}

/// A partial map between the universes of two truncated limits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartialMap {
    pub pairs: BTreeMap<usize, usize>,
}

impl PartialMap {
    pub fn get(&self, x: usize) -> Option<usize> {
        self.pairs.get(&x).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn insert(&mut self, x: usize, y: usize) -> Result<(), WeaveError> {
        match self.pairs.insert(x, y) {
            Some(old) if old != y => Err(WeaveError::Inconsistent(format!(
                "{x} sent to both {old} and {y}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.iter().all(|(x, y)| x == y)
    }

    /// Whether the map is a partial isomorphism `a ⇀ b`: injective, and the
    /// substructure generated by its domain maps as an embedding.
    pub fn is_partial_isomorphism(&self, a: &FinStructure, b: &FinStructure) -> bool {
        let dom: Vec<usize> = self.pairs.keys().copied().collect();
        if a.generated_by(&dom) != dom {
            return false;
        }
        let Ok((sub, inc)) = a.induced(&dom) else {
            return false;
        };
        let map: Vec<usize> = inc.map().iter().map(|x| self.pairs[x]).collect();
        sub.is_embedding(b, &map)
    }
}

/// `f̃` on the truncation: the union over `i` of `j'_l(i) ∘ F(i)` along `j_k(i)`.
pub fn limit_isomorphism(
    u: &ChainSeq,
    v: &ChainSeq,
    w: &ZigZagWeave,
) -> Result<PartialMap, WeaveError> {
    let mut m = PartialMap::default();
    for i in 0..w.f.len() {
        let ju = u.to_top(w.k[i]);
        let jv = v.to_top(w.l[i]);
        for y in 0..w.f[i].source_size() {
            m.insert(ju.apply(y), jv.apply(w.f[i].apply(y)))?;
        }
    }
    if !m.is_partial_isomorphism(u.top(), v.top()) {
        return Err(WeaveError::Inconsistent(
            "union of F(i) is not a partial isomorphism".into(),
        ));
    }
    Ok(m)
}

/// The inverse direction `g̃`, assembled from the `G(i)`.
pub fn limit_inverse(
    u: &ChainSeq,
    v: &ChainSeq,
    w: &ZigZagWeave,
) -> Result<PartialMap, WeaveError> {
    let mut m = PartialMap::default();
    for i in 0..w.g.len() {
        let jv = v.to_top(w.l[i]);
        let ju = u.to_top(w.k[i + 1]);
        for z in 0..w.g[i].source_size() {
            m.insert(jv.apply(z), ju.apply(w.g[i].apply(z)))?;
        }
    }
    if !m.is_partial_isomorphism(v.top(), u.top()) {
        return Err(WeaveError::Inconsistent(
            "union of G(i) is not a partial isomorphism".into(),
        ));
    }
    Ok(m)
}

/// Checks `g̃∘f̃ = 1` and `f̃∘g̃ = 1` wherever both sides are defined.
pub fn round_trip_ok(fwd: &PartialMap, back: &PartialMap) -> bool {
    fwd.pairs
        .iter()
        .all(|(&x, &y)| back.get(y).map_or(true, |z| z == x))
        && back
            .pairs
            .iter()
            .all(|(&y, &x)| fwd.get(x).map_or(true, |z| z == y))
}

/// A weave of a chain with itself, read as a fragment of an automorphism of the limit.
#[derive(Debug, Clone)]
pub struct LazyAutomorphism {
    pub weave: ZigZagWeave,
    pub forward: PartialMap,
    pub backward: PartialMap,
}

pub fn lazy_automorphism(
    s: &ChainSeq,
    f: Embedding,
    k0: usize,
    l0: usize,
    depth: usize,
) -> Result<LazyAutomorphism, WeaveError> {
    let w = weave(s, s, f, k0, l0, depth)?;
    let forward = limit_isomorphism(s, s, &w)?;
    let backward = limit_inverse(s, s, &w)?;
    if !round_trip_ok(&forward, &backward) {
        return Err(WeaveError::Inconsistent(
            "forward and backward maps disagree".into(),
        ));
    }
    Ok(LazyAutomorphism {
        weave: w,
        forward,
        backward,
    })
}

/// Stage-wise factorisation of `chi: a -> u_N` through its birth stage.
fn factor(s: &ChainSeq, birth: &[usize], chi: &Embedding) -> (usize, Embedding) {
    let j = chi.map().iter().map(|&y| birth[y]).max().unwrap_or(0);
    let inc = s.to_top(j);
    let mut back = vec![usize::MAX; s.top().size()];
    for (x, &y) in inc.map().iter().enumerate() {
        back[y] = x;
    }
    (
        j,
        Embedding::new(
            chi.map().iter().map(|&y| back[y]).collect(),
            s.stage(j).size(),
        ),
    )
}

/// Connect `chi1` to `chi2` by a lazy automorphism fragment `α` with `α∘chi1 = chi2`.
pub fn connect(
    s: &ChainSeq,
    chi1: &Embedding,
    chi2: &Embedding,
    depth: usize,
) -> Result<Result<LazyAutomorphism, WeaveError>, StructureError> {
    let birth = s.provenance();
    let (k, c1) = factor(s, &birth, chi1);
    let (l, c2) = factor(s, &birth, chi2);
    // seed: h: u_k -> u_j with h∘c1 = u_l^j∘c2
    let mut comp = Embedding::identity(s.stage(l).size());
    for j in l..=s.top_index() {
        if j > l {
            comp = s.step(j - 1).after(&comp);
        }
        let mut partial = vec![None; s.stage(k).size()];
        for x in 0..c1.source_size() {
            partial[c1.apply(x)] = Some(comp.apply(c2.apply(x)));
        }
        if let Some(h) = EmbeddingSearch::new(s.stage(k), s.stage(j))?.first(&partial) {
            return Ok(lazy_automorphism(s, h, k, j, depth));
        }
    }
    if s.is_stable() {
        Ok(Err(WeaveError::NoDischarge {
            side: "seed",
            depth: 0,
        }))
    } else {
        Ok(Err(WeaveError::TruncationExhausted { reached: 0 }))
    }
}

/// Ultrahomogeneity within the truncation: for each member `a` up to the bound,
/// every embedding `chi: a -> u_N` born by stage `N - margin` is connected to the
/// first such embedding by a weave of the given depth. Comparing against one
/// base embedding per `a` suffices because the fragments compose in the limit.
pub fn check_ultrahomogeneous(
    s: &ChainSeq,
    size_bound: usize,
    depth: usize,
    margin: usize,
) -> Result<Verdict, WeaveError> {
    let mut v = Verdict::new("ultrahomogeneous");
    let birth = s.provenance();
    let last = s.top_index().saturating_sub(margin);
    let reps = s
        .age()
        .members_up_to(size_bound)
        .map_err(|e| WeaveError::Inconsistent(e.to_string()))?;
    for a in &reps {
        let embs: Vec<Embedding> = enumerate_embeddings(a, s.top())?
            .into_iter()
            .filter(|e| e.map().iter().all(|&y| birth[y] <= last))
            .collect();
        let Some(base) = embs.first() else { continue };
        for chi in &embs {
            match connect(s, base, chi, depth)? {
                Ok(frag) => {
                    let ok = (0..a.size())
                        .all(|x| frag.forward.get(base.apply(x)) == Some(chi.apply(x)));
                    if ok {
                        v.met();
                    } else {
                        return Err(WeaveError::Inconsistent(format!(
                            "fragment does not send {base} to {chi}"
                        )));
                    }
                }
                Err(WeaveError::TruncationExhausted { .. }) => {
                    v.unmet(false, || format!("{base} vs {chi}: truncation exhausted"));
                }
                Err(WeaveError::NoDischarge { .. }) => {
                    v.unmet(true, || {
                        format!(
                            "{base} vs {chi} (|a|={}): no automorphism fragment",
                            a.size()
                        )
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    v.note(format!(
        "size bound {size_bound}, depth {depth}, margin {margin}"
    ));
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub outcome: Outcome,
    pub weave: Option<ZigZagWeave>,
    pub map: Option<PartialMap>,
    pub message: String,
}

/// Weave two chains over the same age from their bottom stages (joined by the
/// first stage of `V` that `u_0` embeds into) and certify the induced partial
/// isomorphism.
pub fn uniqueness_audit(
    u: &ChainSeq,
    v: &ChainSeq,
    depth: usize,
) -> Result<UniquenessReport, WeaveError> {
    if u.age().name() != v.age().name() || u.age().signature() != v.age().signature() {
        return Err(WeaveError::AgesDiffer(
            u.age().name().into(),
            v.age().name().into(),
        ));
    }
    let mut seed = None;
    for l in 0..=v.top_index() {
        if let Some(f) = first_embedding(u.stage(0), v.stage(l))? {
            seed = Some((l, f));
            break;
        }
    }
    let Some((l0, f)) = seed else {
        return Ok(UniquenessReport {
            outcome: if v.is_stable() {
                Outcome::Violated
            } else {
                Outcome::Pending
            },
            weave: None,
            map: None,
            message: "u_0 embeds into no stage of V".into(),
        });
    };
    match weave(u, v, f, 0, l0, depth) {
        Ok(w) => {
            check_weave(u, v, &w).map_err(WeaveError::Inconsistent)?;
            let fwd = limit_isomorphism(u, v, &w)?;
            let back = limit_inverse(u, v, &w)?;
            if !round_trip_ok(&fwd, &back) {
                return Err(WeaveError::Inconsistent("round trip fails".into()));
            }
            Ok(UniquenessReport {
                outcome: Outcome::Holds,
                message: format!(
                    "depth {depth} weave; partial isomorphism on {} elements",
                    fwd.len()
                ),
                weave: Some(w),
                map: Some(fwd),
            })
        }
        Err(WeaveError::TruncationExhausted { reached }) => Ok(UniquenessReport {
            outcome: Outcome::Pending,
            weave: None,
            map: None,
            message: format!("truncation exhausted at depth {reached}"),
        }),
        Err(WeaveError::NoDischarge { side, depth }) => Ok(UniquenessReport {
            outcome: Outcome::Violated,
            weave: None,
            map: None,
            message: format!("no discharge on side {side} at depth {depth}"),
        }),
        Err(e) => Err(e),
    }
}
