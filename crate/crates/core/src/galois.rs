//! Stabilizer subgroups of a finite ambient structure, the coset category
//! they generate, and the functor back to the opposite of the source category.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::fincat::{from_structures, CategoryError, FinCategory, Morphism};
use crate::structures::{
    automorphisms, enumerate_embeddings, first_embedding, Embedding, FinStructure, StructureError,
};
use crate::verdict::{Outcome, Verdict};

/// Largest automorphism group tabulated.
pub const MAX_GROUP: usize = 5040;

#[derive(Debug, Error)]
pub enum GaloisError {
    #[error("anchor {0} is not an embedding into u")]
    AnchorNotEmbedding(usize),
    #[error("object {0} of C does not embed into u")]
    NoAnchor(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("functor ill-defined: {0}")]
    IllDefined(String),
    #[error("Aut(u) has {0} elements; limit {MAX_GROUP}")]
    TooLarge(usize),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Aut(u) with its multiplication table; element 0 is the identity.
#[derive(Debug, Clone)]
pub struct Group {
    pub elements: Vec<Embedding>,
    /// `mul[a * n + b] = a∘b`.
    mul: Vec<usize>,
    inv: Vec<usize>,
}

impl Group {
    fn of(u: &FinStructure) -> Result<Group, GaloisError> {
        let elements = automorphisms(u);
        let n = elements.len();
        if n > MAX_GROUP {
            return Err(GaloisError::TooLarge(n));
        }
        let index: HashMap<&[usize], usize> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.map(), i))
            .collect();
        let mut mul = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                mul[a * n + b] = index[elements[a].after(&elements[b]).map()];
            }
        }
        let inv = (0..n)
            .map(|a| index[elements[a].inverse().expect("automorphism").map()])
            .collect();
        Ok(Group { elements, mul, inv })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.elements.len() + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }
}

/// An object `f = α∘f_c: c -> u` of C̃.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchored {
    pub c: usize,
    pub f: Embedding,
}

#[derive(Debug, Clone)]
pub struct StabilizerAssignment {
    pub u: FinStructure,
    pub cs: Vec<FinStructure>,
    pub anchors: Vec<Embedding>,
    pub group: Group,
    /// Objects of C̃, ordered by source object then by map.
    pub objects: Vec<Anchored>,
    /// `chi[i]`: sorted element indices of `Aut_f(u)` for `objects[i]`.
    pub chi: Vec<Vec<usize>>,
}

/// First embedding of each object into `u`.
pub fn default_anchors(
    cs: &[FinStructure],
    u: &FinStructure,
) -> Result<Vec<Embedding>, GaloisError> {
    cs.iter()
        .enumerate()
        .map(|(i, c)| first_embedding(c, u)?.ok_or(GaloisError::NoAnchor(i)))
        .collect()
}

pub fn build_stabilizers(
    cs: &[FinStructure],
    u: &FinStructure,
    anchors: &[Embedding],
) -> Result<StabilizerAssignment, GaloisError> {
    if anchors.len() != cs.len() {
        return Err(GaloisError::Precondition(
            "one anchor per object of C".into(),
        ));
    }
    for (i, (c, f)) in cs.iter().zip(anchors).enumerate() {
        if f.source_size() != c.size() || f.target_size() != u.size() || !c.is_embedding(u, f.map())
        {
            return Err(GaloisError::AnchorNotEmbedding(i));
        }
    }
    let group = Group::of(u)?;
    let mut objects = Vec::new();
    let mut chi = Vec::new();
    for (c, fc) in anchors.iter().enumerate() {
        let orbit: BTreeSet<Vec<usize>> = group
            .elements
            .iter()
            .map(|a| a.after(fc).map().to_vec())
            .collect();
        for map in orbit {
            let f = Embedding::new(map, u.size());
            let stab: Vec<usize> = (0..group.order())
                .filter(|&a| group.elements[a].after(&f) == f)
                .collect();
            objects.push(Anchored { c, f });
            chi.push(stab);
        }
    }
    Ok(StabilizerAssignment {
        u: u.clone(),
        cs: cs.to_vec(),
        anchors: anchors.to_vec(),
        group,
        objects,
        chi,
    })
}

fn subset(a: &[usize], b: &[usize]) -> bool {
    // both sorted
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

impl StabilizerAssignment {
    /// The arrow `h: f -> g` of C̃ (`g∘h = f`), unique when it exists.
    pub fn arrow(&self, f: usize, g: usize) -> Option<Embedding> {
        let (fo, go) = (&self.objects[f], &self.objects[g]);
        let mut back = vec![usize::MAX; self.u.size()];
        for (x, &y) in go.f.map().iter().enumerate() {
            back[y] = x;
        }
        let map: Option<Vec<usize>> =
            fo.f.map()
                .iter()
                .map(|&y| (back[y] != usize::MAX).then_some(back[y]))
                .collect();
        let map = map?;
        self.cs[fo.c]
            .is_embedding(&self.cs[go.c], &map)
            .then(|| Embedding::new(map, self.cs[go.c].size()))
    }

    /// Subgroup axioms and monotonicity along arrows of C̃.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, h) in self.chi.iter().enumerate() {
            if h.first() != Some(&0) {
                return Err(format!("chi({i}) lacks the identity"));
            }
            for &a in h {
                if h.binary_search(&self.group.inv(a)).is_err() {
                    return Err(format!("chi({i}) not closed under inverse"));
                }
                for &b in h {
                    if h.binary_search(&self.group.mul(a, b)).is_err() {
                        return Err(format!("chi({i}) not closed under products"));
                    }
                }
            }
        }
        for f in 0..self.objects.len() {
            for g in 0..self.objects.len() {
                if self.arrow(f, g).is_some() && !subset(&self.chi[g], &self.chi[f]) {
                    return Err(format!(
                        "arrow {f} -> {g} but chi({g}) is not inside chi({f})"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Orbit–stabilizer: `|Aut(u)/χ(f)|` against the number of objects of C̃ over `dom f`.
    pub fn index_identity(&self) -> Verdict {
        let mut v = Verdict::new("index-identity");
        for (i, o) in self.objects.iter().enumerate() {
            let index = self.group.order() / self.chi[i].len();
            let same = self.objects.iter().filter(|p| p.c == o.c).count();
            if index * self.chi[i].len() == self.group.order() && index == same {
                v.met();
            } else {
                v.unmet(true, || {
                    format!("{}: index {index}, {same} arrows over its domain", o.f)
                });
            }
        }
        v
    }

    /// Intersections of two base subgroups contain a base subgroup; a missing one
    /// is left pending, since C̃ need not have the corresponding product.
    pub fn filter_base(&self) -> Verdict {
        let mut v = Verdict::new("filter-base");
        let distinct: BTreeSet<&Vec<usize>> = self.chi.iter().collect();
        let distinct: Vec<&Vec<usize>> = distinct.into_iter().collect();
        for (i, a) in distinct.iter().enumerate() {
            for b in &distinct[i..] {
                let meet: Vec<usize> = a
                    .iter()
                    .copied()
                    .filter(|x| b.binary_search(x).is_ok())
                    .collect();
                if distinct.iter().any(|h| subset(h, &meet)) {
                    v.met();
                } else {
                    v.unmet(false, || format!("no base subgroup inside {a:?} ∩ {b:?}"));
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct GaloisVerdict {
    pub faithful: Verdict,
    pub full: Verdict,
    /// `χ(f) = χ(g)` forces `dom f = dom g`.
    pub reflects_identities: Verdict,
    /// Literal form: an arrow `h` with `χ(h)` an identity is itself an identity.
    /// Fails whenever C̃ is not skeletal; reported, not part of the outcome.
    pub strict_reflection: Verdict,
}

impl GaloisVerdict {
    pub fn outcome(&self) -> Outcome {
        self.faithful
            .outcome()
            .and(self.full.outcome())
            .and(self.reflects_identities.outcome())
    }

    pub fn report(&self) -> String {
        let mut s = format!("galois-property: {}\n", self.outcome());
        for v in [
            &self.faithful,
            &self.full,
            &self.reflects_identities,
            &self.strict_reflection,
        ] {
            let _ = write!(
                s,
                "{}: {} ({} of {} met)",
                v.check,
                v.outcome(),
                v.met,
                v.checked
            );
            if let Some(w) = &v.witness {
                let _ = write!(s, "; witness {w}");
            }
            s.push('\n');
        }
        s
    }
}

pub fn galois_property_check(s: &StabilizerAssignment) -> GaloisVerdict {
    let n = s.objects.len();
    let mut faithful = Verdict::new("faithful");
    let mut full = Verdict::new("full");
    let mut reflects = Verdict::new("reflects-identities");
    let mut strict = Verdict::new("strict-identity-reflection");
    let name = |i: usize| format!("{}", s.objects[i].f);
    for f in 0..n {
        for g in 0..n {
            let arrows: Vec<Embedding> =
                enumerate_embeddings(&s.cs[s.objects[f].c], &s.cs[s.objects[g].c])
                    .unwrap_or_default()
                    .into_iter()
                    .filter(|h| s.objects[g].f.after(h) == s.objects[f].f)
                    .collect();
            // every arrow f -> g induces the one inclusion χ(g) ⊆ χ(f)
            if arrows.len() <= 1 {
                faithful.met();
            } else {
                faithful.unmet(true, || {
                    format!(
                        "{} and {} : {} -> {}",
                        arrows[0],
                        arrows[1],
                        name(f),
                        name(g)
                    )
                });
            }
            if subset(&s.chi[g], &s.chi[f]) {
                if arrows.is_empty() {
                    full.unmet(true, || {
                        format!(
                            "χ({}) ⊆ χ({}) but no arrow {} -> {}",
                            name(g),
                            name(f),
                            name(f),
                            name(g)
                        )
                    });
                } else {
                    full.met();
                }
            }
            if s.chi[f] == s.chi[g] {
                if s.objects[f].c == s.objects[g].c {
                    reflects.met();
                } else {
                    reflects.unmet(true, || {
                        format!("χ({}) = χ({}) with different domains", name(f), name(g))
                    });
                }
                for h in &arrows {
                    if f == g && h.is_identity() {
                        strict.met();
                    } else {
                        strict.unmet(true, || {
                            format!("{h} : {} -> {} has χ(h) an identity", name(f), name(g))
                        });
                    }
                }
            }
        }
    }
    GaloisVerdict {
        faithful,
        full,
        reflects_identities: reflects,
        strict_reflection: strict,
    }
}

#[derive(Debug, Clone)]
pub struct CosetObject {
    pub subgroup: Vec<usize>,
    /// Representative object of C̃: the first with this stabilizer.
    pub rep: usize,
    /// Right cosets `χ(f)α`, each sorted, ordered by least element.
    pub cosets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct CosetArrow {
    pub src: usize,
    pub dst: usize,
    /// The coset `χ(g)α` as a sorted element list.
    pub coset: Vec<usize>,
    /// Least element of the coset.
    pub alpha: usize,
}

#[derive(Debug, Clone)]
pub struct CosetCategory {
    pub objects: Vec<CosetObject>,
    pub arrows: Vec<CosetArrow>,
    pub category: FinCategory,
}

fn right_coset(g: &Group, h: &[usize], a: usize) -> Vec<usize> {
    let mut c: Vec<usize> = h.iter().map(|&x| g.mul(x, a)).collect();
    c.sort_unstable();
    c
}

fn conjugate(g: &Group, h: &[usize], a: usize) -> Vec<usize> {
    // α⁻¹ H α
    let ai = g.inv(a);
    let mut c: Vec<usize> = h.iter().map(|&x| g.mul(ai, g.mul(x, a))).collect();
    c.sort_unstable();
    c
}

pub fn build_coset_category(s: &StabilizerAssignment) -> Result<CosetCategory, GaloisError> {
    let gv = galois_property_check(s);
    if gv.outcome() != Outcome::Holds {
        return Err(GaloisError::Precondition(format!(
            "Galois property fails\n{}",
            gv.report()
        )));
    }
    let g = &s.group;
    let mut objects: Vec<CosetObject> = Vec::new();
    for (i, h) in s.chi.iter().enumerate() {
        if objects.iter().any(|o| &o.subgroup == h) {
            continue;
        }
        let cosets: BTreeSet<Vec<usize>> = (0..g.order()).map(|a| right_coset(g, h, a)).collect();
        let mut cosets: Vec<Vec<usize>> = cosets.into_iter().collect();
        cosets.sort_by_key(|c| c[0]);
        objects.push(CosetObject {
            subgroup: h.clone(),
            rep: i,
            cosets,
        });
    }
    let mut arrows = Vec::new();
    for (x, ox) in objects.iter().enumerate() {
        for (y, oy) in objects.iter().enumerate() {
            for coset in &oy.cosets {
                let alpha = coset[0];
                if subset(&ox.subgroup, &conjugate(g, &oy.subgroup, alpha)) {
                    arrows.push(CosetArrow {
                        src: x,
                        dst: y,
                        coset: coset.clone(),
                        alpha,
                    });
                }
            }
        }
    }
    // composition: (χ(h)γ)∘(χ(g)α) = χ(h)γα
    let m = arrows.len();
    let index: HashMap<(usize, usize, &[usize]), usize> = arrows
        .iter()
        .enumerate()
        .map(|(i, a)| ((a.src, a.dst, a.coset.as_slice()), i))
        .collect();
    let mut comp = vec![None; m * m];
    for (q, aq) in arrows.iter().enumerate() {
        for (p, ap) in arrows.iter().enumerate() {
            if ap.dst != aq.src {
                continue;
            }
            let target = &objects[aq.dst].subgroup;
            let mut seen: Option<usize> = None;
            for &gamma in &aq.coset {
                for &alpha in &ap.coset {
                    let c = right_coset(g, target, g.mul(gamma, alpha));
                    let k = *index.get(&(ap.src, aq.dst, c.as_slice())).ok_or_else(|| {
                        GaloisError::IllDefined(
                            "composite coset violates the morphism condition".into(),
                        )
                    })?;
                    match seen {
                        None => seen = Some(k),
                        Some(s0) if s0 != k => {
                            return Err(GaloisError::IllDefined(
                                "composition depends on coset representatives".into(),
                            ))
                        }
                        _ => {}
                    }
                    // one representative pair per source coset suffices after the first row
                    if gamma != aq.coset[0] {
                        break;
                    }
                }
            }
            comp[q * m + p] = seen;
        }
    }
    let identity: Vec<usize> = (0..objects.len())
        .map(|x| index[&(x, x, objects[x].subgroup.as_slice())])
        .collect();
    let names: Vec<String> = (0..objects.len()).map(|x| format!("G/H{x}")).collect();
    let morphisms: Vec<Morphism> = arrows
        .iter()
        .enumerate()
        .map(|(i, a)| Morphism {
            name: if identity[a.src] == i {
                format!("1_{}", names[a.src])
            } else {
                format!("c{i}")
            },
            dom: a.src,
            cod: a.dst,
        })
        .collect();
    let category =
        FinCategory::new(names, morphisms, identity, comp)?.with_provenance("coset category");
    Ok(CosetCategory {
        objects,
        arrows,
        category,
    })
}

#[derive(Debug, Clone)]
pub struct EquivalenceAudit {
    pub ultrahomogeneous: Verdict,
    pub functorial: Verdict,
    pub faithful: Verdict,
    pub full: Verdict,
    pub essentially_surjective: Verdict,
    /// Coset arrow index to morphism index of C.
    pub functor: Vec<usize>,
}

impl EquivalenceAudit {
    pub fn outcome(&self) -> Outcome {
        [
            &self.functorial,
            &self.faithful,
            &self.full,
            &self.essentially_surjective,
        ]
        .into_iter()
        .fold(Outcome::Holds, |o, v| o.and(v.outcome()))
    }
}

/// Every two embeddings of an object of C into `u` differ by an automorphism.
pub fn check_c_ultrahomogeneous(s: &StabilizerAssignment) -> Result<Verdict, GaloisError> {
    let mut v = Verdict::new("c-ultrahomogeneous");
    for (c, obj) in s.cs.iter().enumerate() {
        let orbit = s.objects.iter().filter(|o| o.c == c).count();
        let all = enumerate_embeddings(obj, &s.u)?;
        for e in &all {
            if s.objects.iter().any(|o| o.c == c && &o.f == e) {
                v.met();
            } else {
                v.unmet(true, || {
                    format!(
                        "{e} is not α∘f_c for any automorphism α ({orbit} of {} reached)",
                        all.len()
                    )
                });
            }
        }
    }
    Ok(v)
}

/// `F`: objects go to the domain of the representative, `χ(g)α` to the unique
/// `z` with `f∘z = α⁻¹∘g`; then functoriality, fidelity, fullness and
/// essential surjectivity are checked against `c` (the objects of C in order).
pub fn equivalence_audit(
    s: &StabilizerAssignment,
    cc: &CosetCategory,
    c: &FinCategory,
) -> Result<EquivalenceAudit, GaloisError> {
    let gv = galois_property_check(s);
    if gv.outcome() != Outcome::Holds {
        return Err(GaloisError::Precondition(format!(
            "Galois property fails\n{}",
            gv.report()
        )));
    }
    let uh = check_c_ultrahomogeneous(s)?;
    if uh.outcome() != Outcome::Holds {
        return Err(GaloisError::Precondition(format!(
            "u is not C-ultrahomogeneous: {}",
            uh.witness.clone().unwrap_or_default()
        )));
    }
    if c.object_count() != s.cs.len() {
        return Err(GaloisError::Precondition(
            "C does not match the stabilizer data".into(),
        ));
    }
    let g = &s.group;
    // morphisms of C by (dom, cod, map)
    let mut by_map: HashMap<(usize, usize, Vec<usize>), usize> = HashMap::new();
    for a in 0..c.object_count() {
        for b in 0..c.object_count() {
            let embs = enumerate_embeddings(&s.cs[a], &s.cs[b])?;
            if embs.len() != c.hom(a, b).len() {
                return Err(GaloisError::Precondition(
                    "C is not the full category of embeddings".into(),
                ));
            }
            for (e, &m) in embs.iter().zip(c.hom(a, b)) {
                by_map.insert((a, b, e.map().to_vec()), m);
            }
        }
    }
    let dom = |x: usize| s.objects[cc.objects[x].rep].c;
    let anchor = |x: usize| &s.objects[cc.objects[x].rep].f;
    let mut functor = Vec::with_capacity(cc.arrows.len());
    for ar in &cc.arrows {
        // z: dom g -> dom f with f∘z = α⁻¹∘g, for every representative α
        let (f, gg) = (anchor(ar.src), anchor(ar.dst));
        let mut image: Option<usize> = None;
        for &alpha in &ar.coset {
            let target = g.elements[g.inv(alpha)].after(gg);
            let mut back = vec![usize::MAX; s.u.size()];
            for (x, &y) in f.map().iter().enumerate() {
                back[y] = x;
            }
            let z: Option<Vec<usize>> = target
                .map()
                .iter()
                .map(|&y| (back[y] != usize::MAX).then_some(back[y]))
                .collect();
            let z = z.ok_or_else(|| {
                GaloisError::IllDefined(format!("no z for coset at α = {}", g.elements[alpha]))
            })?;
            let m = *by_map
                .get(&(dom(ar.dst), dom(ar.src), z))
                .ok_or_else(|| GaloisError::IllDefined("z is not an arrow of C".into()))?;
            match image {
                None => image = Some(m),
                Some(m0) if m0 != m => {
                    return Err(GaloisError::IllDefined(
                        "F depends on the coset representative".into(),
                    ))
                }
                _ => {}
            }
        }
        functor.push(image.expect("nonempty coset"));
    }
    let k = &cc.category;
    let mut functorial = Verdict::new("functorial");
    for x in 0..k.object_count() {
        if functor[k.identity(x)] == c.identity(dom(x)) {
            functorial.met();
        } else {
            functorial.unmet(true, || format!("F(1_{x}) is not an identity"));
        }
    }
    for q in 0..k.morphism_count() {
        for p in 0..k.morphism_count() {
            if let Some(qp) = k.try_compose(q, p) {
                // contravariant: F(q∘p) = F(p)∘F(q)
                if c.try_compose(functor[p], functor[q]) == Some(functor[qp]) {
                    functorial.met();
                } else {
                    functorial.unmet(true, || {
                        format!(
                            "F({}∘{}) != F({})∘F({})",
                            k.name(q),
                            k.name(p),
                            k.name(p),
                            k.name(q)
                        )
                    });
                }
            }
        }
    }
    let mut faithful = Verdict::new("faithful");
    let mut full = Verdict::new("full");
    for x in 0..k.object_count() {
        for y in 0..k.object_count() {
            let imgs: Vec<usize> = k.hom(x, y).iter().map(|&a| functor[a]).collect();
            let distinct: BTreeSet<usize> = imgs.iter().copied().collect();
            if distinct.len() == imgs.len() {
                faithful.met();
            } else {
                faithful.unmet(true, || {
                    format!("two arrows G/H{x} -> G/H{y} with the same image")
                });
            }
            let target = c.hom(dom(y), dom(x));
            if target.iter().all(|m| distinct.contains(m)) {
                full.met();
            } else {
                full.unmet(true, || {
                    format!("an arrow {} -> {} of C is not hit", dom(y), dom(x))
                });
            }
        }
    }
    let mut surj = Verdict::new("essentially-surjective");
    for a in 0..c.object_count() {
        if (0..k.object_count()).any(|x| dom(x) == a) {
            surj.met();
        } else {
            surj.unmet(true, || {
                format!("object {} of C is not in the image", c.objects()[a])
            });
        }
    }
    Ok(EquivalenceAudit {
        ultrahomogeneous: uh,
        functorial,
        faithful,
        full,
        essentially_surjective: surj,
        functor,
    })
}

/// Stabilizer, coset and functor tables with the audit verdicts.
pub fn galois_report(s: &StabilizerAssignment) -> (String, Outcome) {
    let mut r = String::new();
    let _ = writeln!(
        r,
        "u-size: {}\naut-order: {}\nobjects-of-c: {}",
        s.u.size(),
        s.group.order(),
        s.cs.len()
    );
    let _ = writeln!(r, "[stabilizers]");
    for (i, o) in s.objects.iter().enumerate() {
        let _ = writeln!(
            r,
            "f{i}: c={} f={} |chi|={} index={}",
            o.c,
            o.f,
            s.chi[i].len(),
            s.group.order() / s.chi[i].len()
        );
    }
    let gv = galois_property_check(s);
    let idx = s.index_identity();
    let base = s.filter_base();
    let _ = writeln!(r, "[verdicts]");
    r.push_str(&gv.report());
    let _ = writeln!(
        r,
        "index-identity: {} ({} objects)",
        idx.outcome(),
        idx.checked
    );
    let _ = writeln!(
        r,
        "filter-base: {} ({} pending)",
        base.outcome(),
        base.pending
    );
    let mut outcome = gv.outcome().and(idx.outcome());
    let cc = match build_coset_category(s) {
        Ok(cc) => cc,
        Err(e) => {
            let _ = writeln!(r, "coset-category: not built ({e})");
            return (r, outcome);
        }
    };
    let _ = writeln!(r, "[cosets]");
    for (x, o) in cc.objects.iter().enumerate() {
        let _ = writeln!(
            r,
            "G/H{x}: rep f{} |H|={} cosets={}",
            o.rep,
            o.subgroup.len(),
            o.cosets.len()
        );
    }
    let c = match from_structures(&s.cs, "C") {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(r, "equivalence: not audited ({e})");
            return (r, Outcome::Violated);
        }
    };
    match equivalence_audit(s, &cc, &c) {
        Ok(a) => {
            let _ = writeln!(r, "[functor]");
            for (i, ar) in cc.arrows.iter().enumerate() {
                let _ = writeln!(
                    r,
                    "{}: G/H{} -> G/H{} alpha={} F={}",
                    cc.category.name(i),
                    ar.src,
                    ar.dst,
                    s.group.elements[ar.alpha],
                    c.name(a.functor[i])
                );
            }
            let _ = writeln!(r, "[equivalence]");
            for v in [
                &a.ultrahomogeneous,
                &a.functorial,
                &a.faithful,
                &a.full,
                &a.essentially_surjective,
            ] {
                let _ = writeln!(r, "{}: {}", v.check, v.outcome());
            }
            outcome = outcome.and(a.outcome());
        }
        Err(e) => {
            let _ = writeln!(r, "equivalence: precondition or definition failure ({e})");
            outcome = Outcome::Violated;
        }
    }
    (r, outcome)
}
