//! Acceptance run: one PASS/FAIL line per criterion. Values marked as derived
//! are recomputed here by brute force, independently of the library searches.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use forge_core::age::{check_amalgamation, check_jep, replay, AgeClass, Closure, Counterexample};
use forge_core::backforth::{check_ultrahomogeneous, check_weave, uniqueness_audit, PartialMap};
use forge_core::chain::{
    build_fraisse_sequence, check_dense_without_endpoints, check_homogeneous, check_universal,
    verify_extension_property, verify_fraisse_conditions, ChainSeq,
};
use forge_core::fincat::{
    check_amalgamation as cat_amalgamation, check_right_ore, from_structures, gen,
    jat_ideals_unchecked, jep_by_search, jep_from_connectedness, opposite, validate_cocone,
    zigzag_connected, FinCategory, JepOutcome,
};
use forge_core::galois::{
    build_coset_category, build_stabilizers, default_anchors, equivalence_audit,
    galois_property_check,
};
use forge_core::structures::{build, FinStructure, SymbolKind};
use forge_core::verdict::{Outcome, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Tally {
    unexpected: Vec<String>,
}

impl Tally {
    /// `expected` is false only for a criterion recorded as unattainable as stated.
    fn line(&mut self, id: &str, pass: bool, expected: bool, detail: impl AsRef<str>) {
        println!(
            "{} criterion {id}: {}",
            if pass { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
        if pass != expected {
            self.unexpected.push(id.to_string());
        }
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn all_tuples(n: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |x| {
                    let mut t = t.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

/// Injective, preserves and reflects relations, commutes with functions and constants.
fn brute_is_embedding(a: &FinStructure, b: &FinStructure, map: &[usize]) -> bool {
    if map.len() != a.size() || map.iter().any(|&y| y >= b.size()) {
        return false;
    }
    let distinct: BTreeSet<usize> = map.iter().copied().collect();
    if distinct.len() != map.len() {
        return false;
    }
    for (s, sym) in a.signature().symbols().iter().enumerate() {
        for t in all_tuples(a.size(), sym.arity) {
            let img: Vec<usize> = t.iter().map(|&x| map[x]).collect();
            let ok = match sym.kind {
                SymbolKind::Relation => a.relation_holds(s, &t) == b.relation_holds(s, &img),
                _ => map[a.apply(s, &t)] == b.apply(s, &img),
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Every function `0..n -> 0..m`.
fn all_maps(n: usize, m: usize) -> Vec<Vec<usize>> {
    all_tuples(m, n)
}

fn brute_amalgam_exists(members: &[FinStructure], s: &forge_core::age::Span) -> bool {
    for d in members {
        for fp in all_maps(s.b.size(), d.size()) {
            if !brute_is_embedding(&s.b, d, &fp) {
                continue;
            }
            for gp in all_maps(s.c.size(), d.size()) {
                if brute_is_embedding(&s.c, d, &gp)
                    && (0..s.a.size()).all(|x| fp[s.f.apply(x)] == gp[s.g.apply(x)])
                {
                    return true;
                }
            }
        }
    }
    false
}

/// Free amalgam of graphs: `c` glued onto `b` along `a`, no new edges.
fn free_graph_amalgam(s: &forge_core::age::Span) -> bool {
    let nb = s.b.size();
    let mut gp = vec![usize::MAX; s.c.size()];
    for x in 0..s.a.size() {
        gp[s.g.apply(x)] = s.f.apply(x);
    }
    let mut next = nb;
    for y in gp.iter_mut() {
        if *y == usize::MAX {
            *y = next;
            next += 1;
        }
    }
    let mut edges = Vec::new();
    for (x, y) in s.b.relation_tuples(0).into_iter().map(|t| (t[0], t[1])) {
        edges.push((x, y));
    }
    for (x, y) in s.c.relation_tuples(0).into_iter().map(|t| (t[0], t[1])) {
        edges.push((gp[x], gp[y]));
    }
    let undirected: Vec<(usize, usize)> = edges.iter().filter(|(x, y)| x < y).copied().collect();
    let d = build::graph(next, &undirected);
    let fp: Vec<usize> = (0..nb).collect();
    brute_is_embedding(&s.b, &d, &fp) && brute_is_embedding(&s.c, &d, &gp)
}

/// Merge of two chains over a common suborder: ranks interleaved with `b` first on ties.
fn merged_order_amalgam(s: &forge_core::age::Span) -> bool {
    let rank = |st: &FinStructure, x: usize| {
        (0..st.size())
            .filter(|&y| st.relation_holds(0, &[y, x]))
            .count()
    };
    // position of each element of b and c among the images of a
    let below_a = |st: &FinStructure, emb: &dyn Fn(usize) -> usize, x: usize| {
        (0..s.a.size())
            .filter(|&z| st.relation_holds(0, &[emb(z), x]) || emb(z) == x)
            .count()
    };
    let fb = |z: usize| s.f.apply(z);
    let gc = |z: usize| s.g.apply(z);
    let a_img_c: BTreeSet<usize> = (0..s.a.size()).map(gc).collect();
    let mut keys: Vec<((usize, usize, usize), char, usize)> = Vec::new();
    for x in 0..s.b.size() {
        keys.push(((below_a(&s.b, &fb, x), 0, rank(&s.b, x)), 'b', x));
    }
    for x in (0..s.c.size()).filter(|x| !a_img_c.contains(x)) {
        keys.push(((below_a(&s.c, &gc, x), 1, rank(&s.c, x)), 'c', x));
    }
    keys.sort();
    let n = keys.len();
    let d = build::chain_order(n);
    let mut fp = vec![0; s.b.size()];
    let mut gp = vec![usize::MAX; s.c.size()];
    for (pos, (_, side, x)) in keys.iter().enumerate() {
        if *side == 'b' {
            fp[*x] = pos;
        } else {
            gp[*x] = pos;
        }
    }
    for z in 0..s.a.size() {
        gp[gc(z)] = fp[fb(z)];
    }
    brute_is_embedding(&s.b, &d, &fp) && brute_is_embedding(&s.c, &d, &gp)
}

fn criterion_1(t: &mut Tally) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["graphs", "linords", "pure", "boolean"] {
        let class = AgeClass::by_name(name).unwrap();
        let start = Instant::now();
        let ap = check_amalgamation(&class, 3, 8).unwrap();
        let jep = check_jep(&class, 3, 8).unwrap();
        let took = start.elapsed();
        let spans = forge_core::age::spans_up_to(&class, 3).unwrap();
        let oracle = match name {
            "graphs" => spans.iter().all(free_graph_amalgam),
            "linords" => spans.iter().all(merged_order_amalgam),
            _ => {
                let members = class.members_up_to(8).unwrap();
                spans.iter().all(|s| brute_amalgam_exists(&members, s))
            }
        };
        let good = ap.outcome == Outcome::Holds
            && jep.outcome == Outcome::Holds
            && oracle
            && took < Duration::from_secs(60);
        ok &= good;
        parts.push(format!(
            "{name} ap={} jep={} spans={} oracle={oracle} {:.2?}",
            ap.outcome, jep.outcome, ap.instances, took
        ));
    }
    // AP failure: {K2, co-K2} closed under substructures
    let apf = AgeClass::from_dir(&fixtures().join("ap-failure"), Closure::AutoClose).unwrap();
    let v = check_amalgamation(&apf, 3, 8).unwrap();
    let members = apf.members_up_to(3).unwrap();
    let ap_replays = match &v.counterexample {
        Some(cx @ Counterexample::Span(s)) => {
            let text = cx.to_text();
            let back = Counterexample::from_text(&text, Some(apf.signature())).unwrap();
            replay(&apf, &back, 8).unwrap().is_none() && !brute_amalgam_exists(&members, s)
        }
        _ => false,
    };
    // JEP failure: GF(2) and GF(3) with relational addition and multiplication
    let fields = AgeClass::from_dir(&fixtures().join("fields"), Closure::AutoClose).unwrap();
    let j = check_jep(&fields, 3, 8).unwrap();
    let fmembers = fields.members_up_to(3).unwrap();
    let jep_replays = match &j.counterexample {
        Some(cx @ Counterexample::Pair(a, b)) => {
            let back = Counterexample::from_text(&cx.to_text(), Some(fields.signature())).unwrap();
            let brute = fmembers.iter().any(|c| {
                all_maps(a.size(), c.size())
                    .iter()
                    .any(|m| brute_is_embedding(a, c, m))
                    && all_maps(b.size(), c.size())
                        .iter()
                        .any(|m| brute_is_embedding(b, c, m))
            });
            replay(&fields, &back, 8).unwrap().is_none() && !brute
        }
        _ => false,
    };
    ok &= v.outcome == Outcome::Violated
        && ap_replays
        && j.outcome == Outcome::Violated
        && jep_replays;
    parts.push(format!(
        "ap-failure fixture {} (replays {ap_replays}), fields fixture {} (replays {jep_replays})",
        v.outcome, j.outcome
    ));
    t.line("1", ok, true, parts.join("; "));
}

fn naive_ap(c: &FinCategory) -> bool {
    for f in 0..c.morphism_count() {
        for g in 0..c.morphism_count() {
            if c.dom(f) != c.dom(g) {
                continue;
            }
            let mut found = false;
            'd: for d in 0..c.object_count() {
                for &h in c.hom(c.cod(f), d) {
                    for &k in c.hom(c.cod(g), d) {
                        if c.compose(h, f) == c.compose(k, g) {
                            found = true;
                            break 'd;
                        }
                    }
                }
            }
            if !found {
                return false;
            }
        }
    }
    true
}

fn naive_components(c: &FinCategory) -> usize {
    let n = c.object_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for f in 0..c.morphism_count() {
        let (a, b) = (root(&mut parent, c.dom(f)), root(&mut parent, c.cod(f)));
        parent[a] = b;
    }
    (0..n).filter(|&x| root(&mut parent, x) == x).count()
}

fn naive_jat_count(c: &FinCategory) -> usize {
    let n = c.object_count();
    (0u64..1 << n)
        .filter(|&mask| {
            (0..c.morphism_count()).all(|f| {
                let (a, b) = (c.dom(f), c.cod(f));
                (mask >> a & 1) == (mask >> b & 1)
            })
        })
        .count()
}

fn age_categories() -> Vec<(String, FinCategory)> {
    [("graphs", 3), ("linords", 3), ("pure", 3), ("boolean", 8)]
        .into_iter()
        .map(|(name, b)| {
            let class = AgeClass::by_name(name).unwrap();
            let reps = class.members_up_to(b).unwrap();
            (name.to_string(), from_structures(&reps, name).unwrap())
        })
        .collect()
}

fn criterion_2(t: &mut Tally, sample: &[FinCategory]) {
    let mut total = 0;
    let mut agree = 0;
    for c in sample.iter().chain(age_categories().iter().map(|(_, c)| c)) {
        total += 1;
        let dual = check_right_ore(&opposite(c)).holds;
        let direct = cat_amalgamation(c).holds;
        if dual == direct && direct == naive_ap(c) {
            agree += 1;
        }
    }
    t.line(
        "2",
        total >= 54 && agree == total,
        true,
        format!("{agree}/{total} categories agree (ore on opposite, direct search, naive oracle)"),
    );
}

fn criterion_3(t: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ap = Vec::new();
    while ap.len() < 60 {
        for c in gen::sample(&mut rng, 20) {
            if naive_ap(&c) && c.object_count() > 0 {
                ap.push(c);
            }
        }
    }
    let mut mismatches = 0;
    let mut cocones = 0;
    let mut bad_cocones = 0;
    let mut connected = 0;
    for c in &ap {
        let search = jep_by_search(c).holds;
        let (zz, _) = zigzag_connected(c);
        let oracle = naive_components(c) == 1;
        if search != zz || zz != oracle {
            mismatches += 1;
        }
        match jep_from_connectedness(c).unwrap() {
            JepOutcome::Connected(ks) => {
                connected += 1;
                let pairs: BTreeSet<(usize, usize)> = ks.iter().map(|k| (k.a, k.b)).collect();
                if pairs.len() != c.object_count() * c.object_count() {
                    bad_cocones += 1;
                }
                for k in &ks {
                    cocones += 1;
                    if !validate_cocone(c, k) {
                        bad_cocones += 1;
                    }
                }
                if !zz {
                    mismatches += 1;
                }
            }
            JepOutcome::Disconnected(..) => {
                if zz {
                    mismatches += 1;
                }
            }
        }
    }
    t.line(
        "3",
        ap.len() >= 50 && mismatches == 0 && bad_cocones == 0,
        true,
        format!("{} AP categories ({connected} connected), {mismatches} mismatches, {cocones} cocones, {bad_cocones} invalid", ap.len()),
    );
}

fn criterion_4(t: &mut Tally, sample: &[FinCategory]) {
    let mut total = 0;
    let mut exact = 0;
    let mut ore_checked = 0;
    for c in sample.iter().chain(age_categories().iter().map(|(_, c)| c)) {
        total += 1;
        let ideals = jat_ideals_unchecked(c).unwrap().len();
        let comps = naive_components(c);
        let mut ok = ideals == 1 << comps && ideals == naive_jat_count(c);
        if check_right_ore(c).holds {
            ore_checked += 1;
            ok &= forge_core::fincat::enumerate_jat_ideals(c).unwrap().len() == ideals;
        }
        if ok {
            exact += 1;
        }
    }
    t.line("4", exact == total, true, format!("{exact}/{total} categories with ideal count = 2^components ({ore_checked} through the Ore-checked path)"));
}

fn bad(v: &Verdict) -> bool {
    v.violated > 0
}

/// Atoms of a Boolean algebra, from the meet table and zero alone.
fn brute_atoms(s: &FinStructure) -> Vec<usize> {
    let sig = s.signature();
    let meet = sig.index_of("meet").unwrap();
    let zero = s.constant(sig.index_of("zero").unwrap()).unwrap();
    (0..s.size())
        .filter(|&x| {
            x != zero
                && (0..s.size()).all(|y| {
                    let m = s.apply(meet, &[x, y]);
                    m == zero || m == x
                })
        })
        .collect()
}

fn criterion_5(t: &mut Tally) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["graphs", "linords"] {
        let start = Instant::now();
        let s = build_fraisse_sequence(&AgeClass::by_name(name).unwrap(), 30, 0).unwrap();
        let fr = verify_fraisse_conditions(&s, 3, 15).unwrap();
        let u = check_universal(&s, 3).unwrap();
        let h = check_homogeneous(&s, 3, 15).unwrap();
        let mut good = !bad(&fr.universality) && !bad(&fr.discharge) && !bad(&u) && !bad(&h);
        let mut extra = String::new();
        if name == "linords" {
            // every stage with room for its gaps by the top
            let dense: Vec<Outcome> = (0..=14)
                .map(|i| check_dense_without_endpoints(&s, i).outcome())
                .collect();
            let at15 = check_dense_without_endpoints(&s, 15);
            good &= dense.iter().all(|&o| o == Outcome::Holds) && !bad(&at15);
            extra = format!(
                ", dense without endpoints at stages 0..=14, stage 15 {}",
                at15.outcome()
            );
        }
        ok &= good;
        parts.push(format!(
            "{name}: fraisse {} universal {} homogeneous {} ({} pending, {} violated){extra} {:.2?}",
            fr.outcome(), u.outcome(), h.outcome(), h.pending, h.violated, start.elapsed()
        ));
    }
    let start = Instant::now();
    let b = build_fraisse_sequence(&AgeClass::boolean_algebras(), 30, 0).unwrap();
    let fr = verify_fraisse_conditions(&b, 3, 15).unwrap();
    let u = check_universal(&b, 3).unwrap();
    let h = check_homogeneous(&b, 3, 15).unwrap();
    let into = b.composite(5, 25);
    let atoms25: BTreeSet<usize> = brute_atoms(b.stage(25)).into_iter().collect();
    let atoms5 = brute_atoms(b.stage(5));
    let split = atoms5.iter().all(|&x| !atoms25.contains(&into.apply(x)));
    ok &= split && !bad(&fr.universality) && !bad(&fr.discharge) && !bad(&u) && !bad(&h);
    parts.push(format!(
        "boolean: fraisse {} universal {} homogeneous {}, {} stage-5 atoms all split by stage 25: {split} {:.2?}",
        fr.outcome(), u.outcome(), h.outcome(), atoms5.len(), start.elapsed()
    ));
    t.line("5", ok, true, parts.join("; "));
}

/// Extension steps of a partial isomorphism between two relational structures
/// with symbols of arity at most 2.
fn admissible(
    a: &FinStructure,
    b: &FinStructure,
    phi: &BTreeMap<usize, usize>,
    x: usize,
    y: usize,
) -> bool {
    if phi.values().any(|&z| z == y) {
        return false;
    }
    for (s, sym) in a.signature().symbols().iter().enumerate() {
        assert!(sym.kind == SymbolKind::Relation && sym.arity <= 2);
        match sym.arity {
            1 => {
                if a.relation_holds(s, &[x]) != b.relation_holds(s, &[y]) {
                    return false;
                }
            }
            2 => {
                if a.relation_holds(s, &[x, x]) != b.relation_holds(s, &[y, y]) {
                    return false;
                }
                for (&p, &q) in phi {
                    if a.relation_holds(s, &[x, p]) != b.relation_holds(s, &[y, q])
                        || a.relation_holds(s, &[p, x]) != b.relation_holds(s, &[q, y])
                    {
                        return false;
                    }
                }
            }
            _ => {}
        }
    }
    true
}

/// Replays the map in provenance order as Cantor extension steps, then runs the
/// greedy back-and-forth from the same seed; returns (all steps admissible,
/// greedy domain size, agreements on the common domain).
fn cantor_oracle(
    u: &ChainSeq,
    v: &ChainSeq,
    map: &PartialMap,
    seed: &BTreeMap<usize, usize>,
) -> (bool, usize, usize) {
    let (a, b) = (u.top(), v.top());
    let birth_u = u.provenance();
    let birth_v = v.provenance();
    let mut order: Vec<usize> = map.pairs.keys().copied().collect();
    order.sort_by_key(|&x| (birth_u[x], x));
    let mut phi = BTreeMap::new();
    let mut all_ok = true;
    for x in order {
        let y = map.get(x).unwrap();
        all_ok &= admissible(a, b, &phi, x, y);
        phi.insert(x, y);
    }
    let mut g: BTreeMap<usize, usize> = seed.clone();
    let mut u_order: Vec<usize> = (0..a.size()).collect();
    u_order.sort_by_key(|&x| (birth_u[x], x));
    let mut v_order: Vec<usize> = (0..b.size()).collect();
    v_order.sort_by_key(|&x| (birth_v[x], x));
    loop {
        let mut moved = false;
        if let Some(&x) = u_order.iter().find(|x| !g.contains_key(x)) {
            if let Some(&y) = v_order.iter().find(|&&y| admissible(a, b, &g, x, y)) {
                g.insert(x, y);
                moved = true;
            }
        }
        let inv: BTreeMap<usize, usize> = g.iter().map(|(&x, &y)| (y, x)).collect();
        if let Some(&y) = v_order.iter().find(|y| !inv.contains_key(y)) {
            if let Some(&x) = u_order
                .iter()
                .find(|&&x| !g.contains_key(&x) && admissible(b, a, &inv, y, x))
            {
                g.insert(x, y);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let agree = map
        .pairs
        .iter()
        .filter(|(x, y)| g.get(x) == Some(y))
        .count();
    (all_ok, g.len(), agree)
}

fn criterion_6(t: &mut Tally) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["graphs", "linords"] {
        let class = AgeClass::by_name(name).unwrap();
        let u = build_fraisse_sequence(&class, 30, 0).unwrap();
        let v = build_fraisse_sequence(&class, 30, 1).unwrap();
        let r = uniqueness_audit(&u, &v, 6).unwrap();
        let (Some(w), Some(map)) = (r.weave, r.map) else {
            ok = false;
            parts.push(format!("{name}: {} ({})", r.outcome, r.message));
            continue;
        };
        // equations by explicit composition
        let mut eq = check_weave(&u, &v, &w).is_ok();
        for i in 0..w.depth() {
            eq &= w.g[i].after(&w.f[i]) == u.composite(w.k[i], w.k[i + 1]);
            eq &= w.f[i + 1].after(&w.g[i]) == v.composite(w.l[i], w.l[i + 1]);
            eq &= w.k[i + 1] > w.k[i] && w.l[i + 1] > w.l[i];
        }
        let ju = u.to_top(w.k[0]);
        let jv = v.to_top(w.l[0]);
        let seed: BTreeMap<usize, usize> = (0..w.f[0].source_size())
            .map(|x| (ju.apply(x), jv.apply(w.f[0].apply(x))))
            .collect();
        let (steps_ok, greedy, agree) = cantor_oracle(&u, &v, &map, &seed);
        let good = r.outcome == Outcome::Holds && w.depth() >= 6 && eq && steps_ok;
        ok &= good;
        parts.push(format!(
            "{name}: depth {} equations {eq}, map on {} elements, every step an admissible Cantor extension: {steps_ok}; greedy oracle reached {greedy}, agrees on {agree}",
            w.depth(),
            map.len()
        ));
    }
    t.line("6", ok, true, parts.join("; "));
}

fn criterion_7(t: &mut Tally) {
    let mut chains: Vec<(String, ChainSeq)> = Vec::new();
    for name in ["graphs", "linords", "pure", "boolean"] {
        let class = AgeClass::by_name(name).unwrap();
        for seed in [0, 1] {
            chains.push((
                format!("{name}/{seed}"),
                build_fraisse_sequence(&class, 30, seed).unwrap(),
            ));
        }
    }
    let graphs = AgeClass::graphs();
    let rigid = ChainSeq::load(&fixtures().join("rigid"), graphs.clone()).unwrap();
    chains.push(("rigid".into(), rigid));
    chains.push((
        "constant-pure-3".into(),
        ChainSeq::constant(AgeClass::pure_sets(), build::pure_set(3), 6).unwrap(),
    ));
    chains.push((
        "constant-path".into(),
        ChainSeq::constant(graphs, build::graph(3, &[(0, 1), (1, 2)]), 6).unwrap(),
    ));
    let mut counter = Vec::new();
    let mut live = (0, 0);
    for (name, s) in &chains {
        let top = s.top_index();
        let uh_margin = top.saturating_sub(3);
        let margin = top / 2;
        let u = check_universal(s, 3).unwrap().outcome();
        let uh = check_ultrahomogeneous(s, 3, 2, uh_margin)
            .unwrap()
            .outcome();
        let h_uh = check_homogeneous(s, 3, uh_margin).unwrap().outcome();
        let h = check_homogeneous(s, 3, margin).unwrap().outcome();
        let ep = verify_extension_property(s, 3, margin).unwrap().outcome();
        if uh == Outcome::Holds && u == Outcome::Holds {
            live.0 += 1;
            if h_uh == Outcome::Violated {
                counter.push(format!(
                    "{name}: ultrahomogeneous+universal but not homogeneous"
                ));
            }
        }
        if h == Outcome::Holds && u == Outcome::Holds {
            live.1 += 1;
            if ep == Outcome::Violated {
                counter.push(format!(
                    "{name}: homogeneous+universal but no extension property"
                ));
            }
        }
    }
    t.line(
        "7",
        counter.is_empty(),
        true,
        format!(
            "{} chains, premises met {} and {} times, counterexamples: {}",
            chains.len(),
            live.0,
            live.1,
            if counter.is_empty() {
                "none".into()
            } else {
                counter.join(", ")
            }
        ),
    );
}

fn galois_case(u_size: usize, c_max: usize) -> (bool, String) {
    let start = Instant::now();
    let u = build::pure_set(u_size);
    let cs: Vec<FinStructure> = (0..=c_max).map(build::pure_set).collect();
    let s = build_stabilizers(&cs, &u, &default_anchors(&cs, &u).unwrap()).unwrap();
    let gv = galois_property_check(&s);
    let idx = s.index_identity();
    // orbit-stabilizer by hand: injections c -> u number u!/(u-c)!, |χ| = (u-c)!
    let fact = |n: usize| (1..=n).product::<usize>();
    let index_by_hand = s.objects.iter().zip(&s.chi).all(|(o, chi)| {
        let c = cs[o.c].size();
        chi.len() == fact(u_size - c)
            && s.group.order() / chi.len() == fact(u_size) / fact(u_size - c)
    });
    let mut detail = format!(
        "u={u_size} C<={c_max}: galois {} (faithful {}, full {}, reflects {}), index identity {} (by hand {index_by_hand})",
        gv.outcome(),
        gv.faithful.outcome(),
        gv.full.outcome(),
        gv.reflects_identities.outcome(),
        idx.outcome()
    );
    let mut ok = gv.outcome() == Outcome::Holds && idx.outcome() == Outcome::Holds && index_by_hand;
    if let Some(w) = &gv.full.witness {
        detail.push_str(&format!("; fullness witness: {w}"));
    }
    if gv.outcome() == Outcome::Holds {
        let cc = build_coset_category(&s).unwrap();
        let c = from_structures(&cs, "C").unwrap();
        let a = equivalence_audit(&s, &cc, &c).unwrap();
        ok &= a.outcome() == Outcome::Holds;
        detail.push_str(&format!(
            "; equivalence: functorial {} faithful {} full {} essentially surjective {}",
            a.functorial.outcome(),
            a.faithful.outcome(),
            a.full.outcome(),
            a.essentially_surjective.outcome()
        ));
    }
    let took = start.elapsed();
    ok &= took < Duration::from_secs(10);
    (ok, format!("{detail} {took:.2?}"))
}

fn criterion_8(t: &mut Tally) {
    let (ok, detail) = galois_case(4, 3);
    t.line(
        "8",
        ok,
        false,
        format!("as stated, {detail}; three-point stabilizers in S4 are trivial, so fullness cannot hold"),
    );
    let (ok2, d2) = galois_case(4, 2);
    let (ok5, d5) = galois_case(5, 3);
    // 2-element anchor into a 3-element u: 6 cosets
    let u3 = build::pure_set(3);
    let two = build::pure_set(2);
    let s = build_stabilizers(&[two.clone()], &u3, &default_anchors(&[two], &u3).unwrap()).unwrap();
    let six = s.group.order() / s.chi[0].len() == 6 && s.objects.len() == 6;
    t.line(
        "8 (variants)",
        ok2 && ok5 && six,
        true,
        format!("{d2}; {d5}; 2-element anchor into 3-element u has 6 cosets: {six}"),
    );
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["forge"];
    full.extend_from_slice(args);
    let code = forge_core::cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        m.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&p).unwrap(),
        );
    }
    m
}

fn criterion_9(t: &mut Tally) {
    let tmp = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for age in ["graphs", "linords", "pure", "boolean"] {
        let a = tmp.path().join(format!("{age}-a"));
        let b = tmp.path().join(format!("{age}-b"));
        let (ca, ra) = run_cli(&[
            "build",
            "--age",
            age,
            "--steps",
            "30",
            "--seed",
            "7",
            "--out",
            a.to_str().unwrap(),
        ]);
        let (cb, _) = run_cli(&[
            "build",
            "--age",
            age,
            "--steps",
            "30",
            "--seed",
            "7",
            "--out",
            b.to_str().unwrap(),
        ]);
        // the report names the output directory, so compare everything else
        let (mut da, mut db) = (dir_bytes(&a), dir_bytes(&b));
        let (rpa, rpb) = (
            da.remove("report.txt").unwrap(),
            db.remove("report.txt").unwrap(),
        );
        let strip = |r: &[u8]| {
            String::from_utf8_lossy(r)
                .lines()
                .filter(|l| !l.starts_with("out:"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let same =
            ca == 0 && cb == 0 && da == db && strip(&rpa) == strip(&rpb) && ra.contains("seed: 7");
        ok &= same;
        parts.push(format!("build {age}: {} files identical {same}", da.len()));
    }
    let run = tmp.path().join("pure-a");
    let runs: Vec<(i32, String)> = (0..2)
        .map(|_| {
            run_cli(&[
                "audit",
                run.to_str().unwrap(),
                "--galois-stage",
                "4",
                "--galois-c",
                "2",
            ])
        })
        .collect();
    let checks: Vec<(i32, String)> = (0..2)
        .map(|_| {
            run_cli(&[
                "check",
                "--cat",
                fixtures().join("diamond.cat").to_str().unwrap(),
            ])
        })
        .collect();
    let same = runs[0] == runs[1] && checks[0] == checks[1] && runs[0].0 == 0;
    ok &= same;
    parts.push(format!("audit and check reports identical {same}"));
    t.line("9", ok, true, parts.join("; "));
}

fn main() {
    let mut t = Tally {
        unexpected: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sample: Vec<FinCategory> = gen::sample(&mut rng, 60);
    criterion_1(&mut t);
    criterion_2(&mut t, &sample);
    criterion_3(&mut t);
    criterion_4(&mut t, &sample);
    criterion_5(&mut t);
    criterion_6(&mut t);
    criterion_7(&mut t);
    criterion_8(&mut t);
    criterion_9(&mut t);
    if !t.unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {:?}", t.unexpected);
        std::process::exit(1);
    }
}
