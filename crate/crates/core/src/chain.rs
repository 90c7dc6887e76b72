//! ω-chains of finite structures: construction of Fraïssé sequences by a fair
//! dovetail over extension obligations, and truncation-aware verification.
//!
//! A chain is truncated at its last stage `u_N`, which serves as the working
//! colimit. An unmet instance is *violated* only when the chain is declared
//! stable (eventually constant, so `u_N` is the genuine colimit); otherwise it is
//! *pending*.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::age::{find_amalgam, has_weakly_initial, AgeClass, AgeError, AgeKind, Span};
use crate::format::{parse_structure, write_structure, ParseError};
use crate::structures::{
    build, check_embedding, enumerate_embeddings, first_embedding, Embedding, EmbeddingSearch,
    FinStructure, StructureError,
};
use crate::verdict::{Outcome, Verdict};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("steps must be at least 1")]
    NoSteps,
    #[error("amalgamation failed during construction: {0}")]
    Stuck(String, Box<Span>),
    #[error("class `{0}` has no weakly initial member; cannot seed the chain")]
    NoSeed(String),
    #[error("malformed chain: {0}")]
    Malformed(String),
    #[error("stage {0} does not belong to the age")]
    NotInAge(usize),
    #[error("chain directory: {0}")]
    Parse(String),
    #[error(transparent)]
    Age(#[from] AgeError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ParseError> for ChainError {
    fn from(e: ParseError) -> Self {
        ChainError::Parse(e.to_string())
    }
}

/// One line of the construction log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    /// Index of the stage produced by this step.
    pub step: usize,
    /// Position of the (stage, obligation) slot in the schedule.
    pub position: usize,
    pub stage: usize,
    pub obligation: usize,
    pub action: String,
}

#[derive(Debug, Clone)]
pub struct ChainSeq {
    age: Arc<AgeClass>,
    seed: u64,
    stages: Vec<FinStructure>,
    steps: Vec<Embedding>,
    to_top: Vec<Embedding>,
    log: Vec<LogEntry>,
    realized: Vec<(usize, usize, Option<usize>)>,
    stable: bool,
}

impl PartialEq for ChainSeq {
    fn eq(&self, o: &Self) -> bool {
        self.age.name() == o.age.name()
            && self.seed == o.seed
            && self.stages == o.stages
            && self.steps == o.steps
            && self.log == o.log
            && self.stable == o.stable
    }
}

impl ChainSeq {
    /// A chain from explicit stages and steps. `stable` declares that the chain
    /// is constant from its last stage on.
    pub fn from_parts(
        age: Arc<AgeClass>,
        stages: Vec<FinStructure>,
        steps: Vec<Embedding>,
        stable: bool,
    ) -> Result<Self, ChainError> {
        if stages.is_empty() || steps.len() + 1 != stages.len() {
            return Err(ChainError::Malformed(format!(
                "{} stages need {} steps, got {}",
                stages.len(),
                stages.len().saturating_sub(1),
                steps.len()
            )));
        }
        for (i, s) in stages.iter().enumerate() {
            if !age.contains(s) {
                return Err(ChainError::NotInAge(i));
            }
        }
        for (i, e) in steps.iter().enumerate() {
            if e.target_size() != stages[i + 1].size() {
                return Err(ChainError::Malformed(format!(
                    "step {i} has the wrong target size"
                )));
            }
            check_embedding(&stages[i], &stages[i + 1], e.map())?;
        }
        let mut c = ChainSeq {
            age,
            seed: 0,
            stages,
            steps,
            to_top: Vec::new(),
            log: Vec::new(),
            realized: Vec::new(),
            stable,
        };
        c.finish();
        Ok(c)
    }

    /// The stable chain repeating one structure `len + 1` times.
    pub fn constant(age: Arc<AgeClass>, s: FinStructure, len: usize) -> Result<Self, ChainError> {
        let n = s.size();
        Self::from_parts(
            age,
            vec![s; len + 1],
            vec![Embedding::identity(n); len],
            true,
        )
    }

    fn finish(&mut self) {
        let n = self.stages.len();
        let top = self.stages[n - 1].size();
        let mut to_top = vec![Embedding::identity(top); n];
        for i in (0..n - 1).rev() {
            to_top[i] = to_top[i + 1].after(&self.steps[i]);
        }
        self.to_top = to_top;
    }

    pub fn age(&self) -> &Arc<AgeClass> {
        &self.age
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_stable(&self) -> bool {
        self.stable
    }

    /// Index `N` of the top stage.
    pub fn top_index(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn stage(&self, i: usize) -> &FinStructure {
        &self.stages[i]
    }

    pub fn stages(&self) -> &[FinStructure] {
        &self.stages
    }

    pub fn top(&self) -> &FinStructure {
        self.stages.last().expect("nonempty")
    }

    pub fn step(&self, i: usize) -> &Embedding {
        &self.steps[i]
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// `(member index, member size, first stage it embeds into)` for the members
    /// tracked during construction.
    pub fn realized(&self) -> &[(usize, usize, Option<usize>)] {
        &self.realized
    }

    /// `u_i^N`, the colimit arrow of stage `i` into the truncation.
    pub fn to_top(&self, i: usize) -> &Embedding {
        &self.to_top[i]
    }

    /// `u_i^j` for `i <= j`.
    pub fn composite(&self, i: usize, j: usize) -> Embedding {
        assert!(i <= j && j < self.stages.len());
        let mut e = Embedding::identity(self.stages[i].size());
        for s in &self.steps[i..j] {
            e = s.after(&e);
        }
        e
    }

    /// Checks `u_i^k = u_j^k ∘ u_i^j` for all `i <= j <= k` and `u_i^i = 1`.
    pub fn check_functoriality(&self) -> Result<(), String> {
        let n = self.stages.len();
        let comps: Vec<Vec<Embedding>> = (0..n)
            .map(|i| {
                let mut row = Vec::with_capacity(n - i);
                let mut e = Embedding::identity(self.stages[i].size());
                row.push(e.clone());
                for s in &self.steps[i..] {
                    e = s.after(&e);
                    row.push(e.clone());
                }
                row
            })
            .collect();
        for i in 0..n {
            if !comps[i][0].is_identity() {
                return Err(format!("u_{i}^{i} is not the identity"));
            }
            for j in i..n {
                for k in j..n {
                    if comps[i][k - i] != comps[j][k - j].after(&comps[i][j - i]) {
                        return Err(format!("u_{i}^{k} != u_{j}^{k} . u_{i}^{j}"));
                    }
                }
            }
            if comps[i][n - 1 - i] != self.to_top[i] {
                return Err(format!("cached colimit arrow of stage {i} is stale"));
            }
        }
        Ok(())
    }

    /// For each element of the top stage, the first stage it comes from.
    pub fn provenance(&self) -> Vec<usize> {
        let top = self.top().size();
        let mut birth = vec![usize::MAX; top];
        for (i, e) in self.to_top.iter().enumerate() {
            for &y in e.map() {
                if birth[y] == usize::MAX {
                    birth[y] = i;
                }
            }
        }
        birth
    }

    pub fn save(&self, dir: &Path) -> Result<(), ChainError> {
        std::fs::create_dir_all(dir)?;
        let width = 3;
        std::fs::write(
            dir.join("chain.txt"),
            format!(
                "age: {}\nseed: {}\nstages: {}\nstable: {}\n",
                self.age.name(),
                self.seed,
                self.stages.len(),
                self.stable
            ),
        )?;
        for (i, s) in self.stages.iter().enumerate() {
            std::fs::write(
                dir.join(format!("stage-{i:0width$}.txt")),
                write_structure(s),
            )?;
        }
        let mut steps = String::new();
        for (i, e) in self.steps.iter().enumerate() {
            let m: Vec<String> = e.map().iter().map(|x| x.to_string()).collect();
            let _ = writeln!(steps, "{} -> {}: {}", i, i + 1, m.join(" "));
        }
        std::fs::write(dir.join("steps.txt"), steps)?;
        let mut log = String::new();
        for l in &self.log {
            let _ = writeln!(
                log,
                "step {} pos {} slot ({},{}): {}",
                l.step, l.position, l.stage, l.obligation, l.action
            );
        }
        for (m, size, at) in &self.realized {
            match at {
                Some(s) => {
                    let _ = writeln!(log, "member {m} (size {size}) first embeds at stage {s}");
                }
                None => {
                    let _ = writeln!(log, "member {m} (size {size}) not yet realized");
                }
            }
        }
        std::fs::write(dir.join("log.txt"), log)?;
        Ok(())
    }

    /// Load a saved chain; `age` must be the class it was built over.
    pub fn load(dir: &Path, age: Arc<AgeClass>) -> Result<Self, ChainError> {
        let meta = std::fs::read_to_string(dir.join("chain.txt"))?;
        let mut kv: HashMap<String, String> = HashMap::new();
        for (_, l) in crate::format::content_lines(&meta) {
            if let Some((k, v)) = l.split_once(':') {
                kv.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| {
            kv.get(k)
                .cloned()
                .ok_or_else(|| ChainError::Parse(format!("chain.txt lacks `{k}`")))
        };
        let name = get("age")?;
        if name != age.name() {
            return Err(ChainError::Parse(format!(
                "run was built over `{name}`, not `{}`",
                age.name()
            )));
        }
        let seed: u64 = get("seed")?
            .parse()
            .map_err(|_| ChainError::Parse("bad seed".into()))?;
        let count: usize = get("stages")?
            .parse()
            .map_err(|_| ChainError::Parse("bad stage count".into()))?;
        let stable = get("stable")? == "true";
        let mut stages = Vec::with_capacity(count);
        for i in 0..count {
            let text = std::fs::read_to_string(dir.join(format!("stage-{i:03}.txt")))?;
            stages.push(parse_structure(&text, Some(age.signature()))?);
        }
        let steps_text = std::fs::read_to_string(dir.join("steps.txt"))?;
        let mut steps = Vec::new();
        for (ln, l) in crate::format::content_lines(&steps_text) {
            let (_, body) = l
                .split_once(':')
                .ok_or_else(|| ChainError::Parse(format!("steps.txt line {ln}")))?;
            let map: Vec<usize> = body
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| ChainError::Parse(format!("steps.txt line {ln}")))
                })
                .collect::<Result<_, _>>()?;
            let i = steps.len();
            let target = stages
                .get(i + 1)
                .ok_or_else(|| ChainError::Parse("more steps than stages".into()))?
                .size();
            if map.iter().any(|&y| y >= target) {
                return Err(ChainError::Parse(format!(
                    "steps.txt line {ln}: value out of range"
                )));
            }
            steps.push(Embedding::new(map, target));
        }
        let mut c = Self::from_parts(age, stages, steps, stable)?;
        c.seed = seed;
        if let Ok(log) = std::fs::read_to_string(dir.join("log.txt")) {
            for l in log.lines() {
                if let Some(e) = parse_log_line(l) {
                    c.log.push(e);
                }
            }
        }
        Ok(c)
    }
}

fn parse_log_line(l: &str) -> Option<LogEntry> {
    let rest = l.strip_prefix("step ")?;
    let (step, rest) = rest.split_once(" pos ")?;
    let (pos, rest) = rest.split_once(" slot (")?;
    let (slot, action) = rest.split_once("): ")?;
    let (stage, ob) = slot.split_once(',')?;
    Some(LogEntry {
        step: step.parse().ok()?,
        position: pos.parse().ok()?,
        stage: stage.parse().ok()?,
        obligation: ob.parse().ok()?,
        action: action.to_string(),
    })
}

const SHAPE_SEED: u64 = 0x5eed;

/// Class-specific bookkeeping for minimal extension obligations.
struct Builder<'a> {
    age: &'a Arc<AgeClass>,
    /// Label permutations of new stages.
    rng: ChaCha8Rng,
    /// Seed-independent tie-breaks, so chains for different seeds are isomorphic.
    shape: ChaCha8Rng,
    stages: Vec<FinStructure>,
    steps: Vec<Embedding>,
    /// `u_i^t` for the current top `t`.
    to_cur: Vec<Embedding>,
    /// Extension arrows out of each stage (finite classes only).
    explicit_obligations: Vec<Option<Vec<(FinStructure, Embedding)>>>,
    amalgam_bound: usize,
}

impl<'a> Builder<'a> {
    fn obligation_count(&mut self, i: usize) -> Result<usize, ChainError> {
        let s = &self.stages[i];
        Ok(match self.age.kind() {
            AgeKind::Graphs => {
                if s.size() >= usize::BITS as usize - 1 {
                    usize::MAX
                } else {
                    1usize << s.size()
                }
            }
            AgeKind::LinearOrders => s.size() + 1,
            AgeKind::PureSets => 1,
            AgeKind::BooleanAlgebras => s.size().trailing_zeros() as usize,
            AgeKind::Explicit(_) => self.explicit_obligations(i)?.len(),
        })
    }

    fn explicit_obligations(
        &mut self,
        i: usize,
    ) -> Result<&Vec<(FinStructure, Embedding)>, ChainError> {
        if self.explicit_obligations[i].is_none() {
            let s = &self.stages[i];
            let mut v = Vec::new();
            for x in self.age.members_of_size(s.size() + 1)?.iter() {
                for e in enumerate_embeddings(s, x)? {
                    v.push((x.clone(), e));
                }
            }
            self.explicit_obligations[i] = Some(v);
        }
        Ok(self.explicit_obligations[i].as_ref().expect("filled"))
    }

    /// Elements of stage `i` in increasing order (linear orders only).
    fn sorted(s: &FinStructure) -> Vec<usize> {
        let mut v: Vec<usize> = (0..s.size()).collect();
        v.sort_by_key(|&x| {
            (0..s.size())
                .filter(|&y| s.relation_holds(0, &[y, x]))
                .count()
        });
        v
    }

    fn gap_bounds(&self, i: usize, k: usize) -> (Option<usize>, Option<usize>) {
        let order = Self::sorted(&self.stages[i]);
        let lo = if k == 0 { None } else { Some(order[k - 1]) };
        let hi = order.get(k).copied();
        (lo, hi)
    }

    fn discharged(&mut self, i: usize, k: usize) -> Result<bool, ChainError> {
        let c = self.to_cur[i].clone();
        let top = self.stages.last().expect("stage");
        let mut in_image = vec![false; top.size()];
        for &y in c.map() {
            in_image[y] = true;
        }
        Ok(match self.age.kind() {
            AgeKind::Graphs => {
                let order = self.birth_order(i);
                (0..top.size()).any(|v| {
                    !in_image[v]
                        && order
                            .iter()
                            .enumerate()
                            .all(|(j, &x)| top.relation_holds(0, &[v, x]) == (k >> j & 1 == 1))
                })
            }
            AgeKind::LinearOrders => {
                let (lo, hi) = self.gap_bounds(i, k);
                (0..top.size()).any(|v| {
                    !in_image[v]
                        && lo.map_or(true, |l| top.relation_holds(0, &[c.apply(l), v]))
                        && hi.map_or(true, |h| top.relation_holds(0, &[v, c.apply(h)]))
                })
            }
            AgeKind::PureSets => top.size() > self.stages[i].size(),
            AgeKind::BooleanAlgebras => c.apply(1 << k).count_ones() > 1,
            AgeKind::Explicit(_) => {
                let (x, e) = self.explicit_obligations(i)?[k].clone();
                let top = self.stages.last().expect("stage");
                let mut partial = vec![None; x.size()];
                for y in 0..e.source_size() {
                    partial[e.apply(y)] = Some(c.apply(y));
                }
                EmbeddingSearch::new(&x, top)?.first(&partial).is_some()
            }
        })
    }

    /// Images in the top stage of the elements of stage `i`, ordered by the
    /// stage where they first appear, so obligation indices do not depend on labels.
    fn birth_order(&self, i: usize) -> Vec<usize> {
        let m = self.stages.last().expect("stage").size();
        let mut birth = vec![usize::MAX; m];
        for (j, e) in self.to_cur.iter().enumerate().take(i + 1).rev() {
            for &y in e.map() {
                birth[y] = j;
            }
        }
        let mut order = self.to_cur[i].map().to_vec();
        order.sort_by_key(|&y| (birth[y], y));
        order
    }

    /// Discharge obligation `k` of stage `i` by growing the top stage.
    fn extend(
        &mut self,
        i: usize,
        k: usize,
    ) -> Result<(FinStructure, Embedding, String), ChainError> {
        let c = self.to_cur[i].clone();
        let top = self.stages.last().expect("stage").clone();
        let m = top.size();
        let mut in_image = vec![false; m];
        for &y in c.map() {
            in_image[y] = true;
        }
        Ok(match self.age.kind() {
            AgeKind::Graphs => {
                let mut edges = Vec::new();
                for x in 0..m {
                    for y in x + 1..m {
                        if top.relation_holds(0, &[x, y]) {
                            edges.push((x, y));
                        }
                    }
                }
                let nbrs: Vec<usize> = self
                    .birth_order(i)
                    .into_iter()
                    .enumerate()
                    .filter(|&(j, _)| k >> j & 1 == 1)
                    .map(|(_, x)| x)
                    .collect();
                // vertices outside stage i, by birth; each bit prefers keeping the
                // type over the birth stage unrealized, so later obligations are
                // discharged on the way
                let mut birth = vec![usize::MAX; m];
                for (j, e) in self.to_cur.iter().enumerate().rev() {
                    for &y in e.map() {
                        birth[y] = j;
                    }
                }
                let mut outside: Vec<usize> = (0..m).filter(|&v| !in_image[v]).collect();
                outside.sort_by_key(|&v| (birth[v], v));
                let mut member = vec![false; m];
                for &v in &nbrs {
                    member[v] = true;
                }
                for &v in &outside {
                    let stage = &self.to_cur[birth[v]];
                    let mut in_stage = vec![false; m];
                    for &y in stage.map() {
                        in_stage[y] = true;
                    }
                    let novel = |bit: bool, member: &[bool]| {
                        !(0..m).any(|w| {
                            !in_stage[w]
                                && stage.map().iter().all(|&y| {
                                    let want = if y == v { bit } else { member[y] };
                                    top.relation_holds(0, &[w, y]) == want
                                })
                        })
                    };
                    let bit = match (novel(false, &member), novel(true, &member)) {
                        (true, false) => false,
                        (false, true) => true,
                        _ => self.shape.gen_bool(0.5),
                    };
                    member[v] = bit;
                }
                let nbrs: Vec<usize> = (0..m).filter(|&v| member[v]).collect();
                for &v in &nbrs {
                    edges.push((v, m));
                }
                let desc = format!("new vertex {m} adjacent to {nbrs:?}");
                (
                    build::graph(m + 1, &edges),
                    Embedding::prefix(m, m + 1),
                    desc,
                )
            }
            AgeKind::LinearOrders => {
                let (lo, hi) = self.gap_bounds(i, k);
                let lo = lo.map(|l| c.apply(l));
                let hi = hi.map(|h| c.apply(h));
                let rank: Vec<usize> = {
                    let order = Self::sorted(&top);
                    let mut r = vec![0; m];
                    for (pos, &x) in order.iter().enumerate() {
                        r[x] = pos;
                    }
                    r
                };
                // the new element sits just above `lo` (or at the bottom)
                let new_rank = lo.map_or(0, |l| rank[l] + 1);
                debug_assert!(hi.map_or(true, |h| rank[h] >= new_rank));
                let mut ranks: Vec<usize> = rank
                    .iter()
                    .map(|&r| if r >= new_rank { r + 1 } else { r })
                    .collect();
                ranks.push(new_rank);
                let desc = format!("new element {m} between {lo:?} and {hi:?}");
                (
                    build::order_from_ranks(&ranks),
                    Embedding::prefix(m, m + 1),
                    desc,
                )
            }
            AgeKind::PureSets => (
                build::pure_set(m + 1),
                Embedding::prefix(m, m + 1),
                format!("new point {m}"),
            ),
            AgeKind::BooleanAlgebras => {
                let atoms = m.trailing_zeros() as usize;
                let j = c.apply(1 << k).trailing_zeros() as usize;
                // atoms above j shift down; the two halves of j become the last two atoms
                let map: Vec<usize> = (0..m)
                    .map(|s| {
                        let low = s & ((1 << j) - 1);
                        let high = (s >> (j + 1)) << j;
                        let halves = if s >> j & 1 == 1 {
                            0b11 << (atoms - 1)
                        } else {
                            0
                        };
                        low | high | halves
                    })
                    .collect();
                let desc = format!("split atom {j} into atoms {} and {atoms}", atoms - 1);
                (
                    build::powerset_algebra(atoms + 1),
                    Embedding::new(map, 2 * m),
                    desc,
                )
            }
            AgeKind::Explicit(_) => {
                let (x, e) = self.explicit_obligations(i)?[k].clone();
                let span = Span {
                    a: self.stages[i].clone(),
                    b: top.clone(),
                    c: x,
                    f: c,
                    g: e,
                };
                match find_amalgam(self.age, &span, self.amalgam_bound)? {
                    Some((d, fp, _)) => {
                        let desc = format!("amalgam of size {}", d.size());
                        (d, fp, desc)
                    }
                    None => {
                        return Err(ChainError::Stuck(
                            format!(
                                "obligation ({i},{k}) has no amalgam up to size {}",
                                self.amalgam_bound
                            ),
                            Box::new(span),
                        ))
                    }
                }
            }
        })
    }

    fn push(&mut self, next: FinStructure, step: Embedding) {
        for e in self.to_cur.iter_mut() {
            *e = step.after(e);
        }
        self.to_cur.push(Embedding::identity(next.size()));
        self.steps.push(step);
        self.stages.push(next);
        self.explicit_obligations.push(None);
    }
}

/// Members tracked for condition (1) in the construction log.
fn tracked_members(age: &AgeClass) -> Result<Vec<FinStructure>, AgeError> {
    let bound = match age.kind() {
        AgeKind::Graphs => 4,
        AgeKind::LinearOrders | AgeKind::PureSets => 6,
        AgeKind::BooleanAlgebras => 16,
        AgeKind::Explicit(_) => age.max_member_size().unwrap_or(0),
    };
    age.members_up_to(bound)
}

/// Build `steps` steps of a Fraïssé sequence. Stage 0 is the least weakly
/// initial member. Obligations are visited stage by stage, each stage's finite
/// list in order; a pending obligation is discharged by a one-point extension
/// (one atom split for Boolean algebras). Already-discharged slots are skipped,
/// except for Boolean algebras where they yield identity steps. The seed only
/// permutes the labels of each new stage, so chains built with different seeds
/// are isomorphic.
pub fn build_fraisse_sequence(
    age: &Arc<AgeClass>,
    steps: usize,
    seed: u64,
) -> Result<ChainSeq, ChainError> {
    if steps == 0 {
        return Err(ChainError::NoSteps);
    }
    let u0 = match age.kind() {
        AgeKind::BooleanAlgebras => build::powerset_algebra(1),
        AgeKind::Explicit(_) => {
            let bound = age.max_member_size().unwrap_or(0);
            has_weakly_initial(age, bound)?
                .ok_or_else(|| ChainError::NoSeed(age.name().to_string()))?
        }
        _ => age.members_of_size(0)?[0].clone(),
    };
    let mut b = Builder {
        age,
        rng: ChaCha8Rng::seed_from_u64(seed),
        shape: ChaCha8Rng::seed_from_u64(SHAPE_SEED),
        to_cur: vec![Embedding::identity(u0.size())],
        stages: vec![u0],
        steps: Vec::new(),
        explicit_obligations: vec![None],
        amalgam_bound: age.max_member_size().unwrap_or(0),
    };
    let mut log = Vec::new();
    let mut next_k = vec![0usize];
    let mut offset = vec![0usize];
    let mut first_open = 0;
    let shuffle = matches!(
        age.kind(),
        AgeKind::Graphs | AgeKind::LinearOrders | AgeKind::PureSets
    );
    let skip = !matches!(age.kind(), AgeKind::BooleanAlgebras);
    for step in 1..=steps {
        let t = b.stages.len() - 1;
        loop {
            // slots in lexicographic order; each stage has finitely many
            while first_open < next_k.len()
                && next_k[first_open] >= b.obligation_count(first_open)?
            {
                first_open += 1;
            }
            let chosen = (first_open < next_k.len()).then(|| {
                let (i, k) = (first_open, next_k[first_open]);
                (offset[i] + k, i, k)
            });
            let Some((pos, i, k)) = chosen else {
                let top = b.stages[t].clone();
                b.push(top.clone(), Embedding::identity(top.size()));
                log.push(LogEntry {
                    step,
                    position: usize::MAX,
                    stage: t,
                    obligation: 0,
                    action: "idle: no open obligations".into(),
                });
                break;
            };
            next_k[i] += 1;
            if b.discharged(i, k)? && skip {
                log.push(LogEntry {
                    step,
                    position: pos,
                    stage: i,
                    obligation: k,
                    action: "skipped: already discharged".into(),
                });
                continue;
            }
            if b.discharged(i, k)? {
                let top = b.stages[t].clone();
                b.push(top.clone(), Embedding::identity(top.size()));
                log.push(LogEntry {
                    step,
                    position: pos,
                    stage: i,
                    obligation: k,
                    action: "already discharged".into(),
                });
            } else {
                let (mut next, mut e, mut desc) = b.extend(i, k)?;
                if shuffle {
                    let mut perm: Vec<usize> = (0..next.size()).collect();
                    perm.shuffle(&mut b.rng);
                    next = next.relabel(&perm);
                    e = Embedding::new(e.map().iter().map(|&x| perm[x]).collect(), perm.len());
                    desc.push_str(&format!("; labels {perm:?}"));
                }
                b.push(next, e);
                debug_assert!(b.discharged(i, k)?);
                log.push(LogEntry {
                    step,
                    position: pos,
                    stage: i,
                    obligation: k,
                    action: desc,
                });
            }
            break;
        }
        let last = offset[t] + b.obligation_count(t)?;
        offset.push(last);
        next_k.push(0);
    }
    let mut chain = ChainSeq {
        age: age.clone(),
        seed,
        stages: b.stages,
        steps: b.steps,
        to_top: Vec::new(),
        log,
        realized: Vec::new(),
        stable: false,
    };
    chain.finish();
    for (idx, m) in tracked_members(age)?.iter().enumerate() {
        let at = if first_embedding(m, chain.top())?.is_some() {
            let mut lo = 0;
            let mut hi = chain.top_index();
            // embeddability is monotone along the chain
            while lo < hi {
                let mid = (lo + hi) / 2;
                if first_embedding(m, chain.stage(mid))?.is_some() {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Some(lo)
        } else {
            None
        };
        chain.realized.push((idx, m.size(), at));
    }
    Ok(chain)
}

/// Conditions (1) and (2) of a Fraïssé sequence, checked on a truncation.
#[derive(Debug, Clone)]
pub struct FraisseReport {
    pub universality: Verdict,
    pub discharge: Verdict,
}

impl FraisseReport {
    pub fn outcome(&self) -> Outcome {
        self.universality.outcome().and(self.discharge.outcome())
    }
}

/// Search `h: b -> u_N` with `h(f(x)) = chi(x)`.
fn extend_into_top(
    top: &FinStructure,
    b: &FinStructure,
    f: &Embedding,
    chi: &[usize],
) -> Result<Option<Embedding>, StructureError> {
    let mut partial = vec![None; b.size()];
    for (x, &y) in chi.iter().enumerate() {
        partial[f.apply(x)] = Some(y);
    }
    Ok(EmbeddingSearch::new(b, top)?.first(&partial))
}

pub fn verify_fraisse_conditions(
    s: &ChainSeq,
    size_bound: usize,
    arrow_bound: usize,
) -> Result<FraisseReport, ChainError> {
    let universality = check_universal(s, size_bound)?;
    let mut discharge = Verdict::new("fraisse/discharge");
    let top = s.top();
    for i in 0..=arrow_bound.min(s.top_index()) {
        let ui = s.stage(i);
        if ui.size() > size_bound {
            continue;
        }
        for n in ui.size()..=size_bound {
            for x in s.age().members_of_size(n)?.iter() {
                for f in enumerate_embeddings(ui, x)? {
                    if extend_into_top(top, x, &f, s.to_top(i).map())?.is_some() {
                        discharge.met();
                    } else {
                        discharge.unmet(s.is_stable(), || {
                            format!("arrow {f} out of stage {i} into a size-{n} member")
                        });
                    }
                }
            }
        }
    }
    discharge.note(format!(
        "size bound {size_bound}, arrow bound {arrow_bound}"
    ));
    Ok(FraisseReport {
        universality,
        discharge,
    })
}

/// Every member up to `size_bound` embeds into the truncation.
pub fn check_universal(s: &ChainSeq, size_bound: usize) -> Result<Verdict, ChainError> {
    let mut v = Verdict::new("universal");
    for m in s.age().members_up_to(size_bound)? {
        if first_embedding(&m, s.top())?.is_some() {
            v.met();
        } else {
            v.unmet(s.is_stable(), || {
                format!("member of size {} does not embed", m.size())
            });
        }
    }
    v.note(format!("size bound {size_bound}"));
    Ok(v)
}

/// Default truncation margin.
pub fn default_margin(s: &ChainSeq) -> usize {
    s.top_index() / 2
}

/// The extension property: for `f: a -> b` and `g: a -> u_i` with `i <= N - margin`,
/// some `h: b -> u_N` has `h∘f = u_i^N∘g`.
pub fn verify_extension_property(
    s: &ChainSeq,
    size_bound: usize,
    margin: usize,
) -> Result<Verdict, ChainError> {
    let mut v = Verdict::new("extension-property");
    let reps = s.age().members_up_to(size_bound)?;
    let last = s.top_index().saturating_sub(margin);
    let mut memo: HashMap<(usize, usize, Vec<usize>, Vec<usize>), bool> = HashMap::new();
    for i in 0..=last {
        for (ai, a) in reps.iter().enumerate() {
            for g in enumerate_embeddings(a, s.stage(i))? {
                let chi = s.to_top(i).after(&g);
                for (bi, b) in reps
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.size() >= a.size())
                {
                    for f in enumerate_embeddings(a, b)? {
                        let key = (ai, bi, f.map().to_vec(), chi.map().to_vec());
                        let ok = match memo.get(&key) {
                            Some(&ok) => ok,
                            None => {
                                let ok = extend_into_top(s.top(), b, &f, chi.map())?.is_some();
                                memo.insert(key, ok);
                                ok
                            }
                        };
                        if ok {
                            v.met();
                        } else {
                            v.unmet(s.is_stable(), || {
                                format!(
                                    "g={g} into stage {i}, f={f} (|a|={}, |b|={})",
                                    a.size(),
                                    b.size()
                                )
                            });
                        }
                    }
                }
            }
        }
    }
    v.note(format!("size bound {size_bound}, margin {margin}"));
    Ok(v)
}

/// Homogeneity of the truncation: embeddings `chi: a -> u_N` born by stage
/// `N - margin` extend along every `j: a -> b`.
pub fn check_homogeneous(
    s: &ChainSeq,
    size_bound: usize,
    margin: usize,
) -> Result<Verdict, ChainError> {
    let mut v = Verdict::new("homogeneous");
    let reps = s.age().members_up_to(size_bound)?;
    let birth = s.provenance();
    let last = s.top_index().saturating_sub(margin);
    for a in &reps {
        for chi in enumerate_embeddings(a, s.top())? {
            if chi.map().iter().any(|&y| birth[y] > last) {
                continue;
            }
            for b in reps.iter().filter(|b| b.size() >= a.size()) {
                for j in enumerate_embeddings(a, b)? {
                    if extend_into_top(s.top(), b, &j, chi.map())?.is_some() {
                        v.met();
                    } else {
                        v.unmet(s.is_stable(), || {
                            format!("chi={chi}, j={j} (|a|={}, |b|={})", a.size(), b.size())
                        });
                    }
                }
            }
        }
    }
    v.note(format!("size bound {size_bound}, margin {margin}"));
    Ok(v)
}

/// Least stage through which `h: b -> u_N` factors, with the factored map.
pub fn factor_through_stage(s: &ChainSeq, h: &Embedding) -> (usize, Embedding) {
    let birth = s.provenance();
    let j = h.map().iter().map(|&y| birth[y]).max().unwrap_or(0);
    let inc = s.to_top(j);
    let mut back = vec![usize::MAX; s.top().size()];
    for (x, &y) in inc.map().iter().enumerate() {
        back[y] = x;
    }
    let map: Vec<usize> = h.map().iter().map(|&y| back[y]).collect();
    (j, Embedding::new(map, s.stage(j).size()))
}

/// Size of the truncation and the bound certified for the ω-colimit of finite stages.
pub fn cardinality_bound(s: &ChainSeq) -> (usize, &'static str) {
    (s.top().size(), "<= aleph_0")
}

/// For a chain of linear orders: between any two consecutive elements of stage
/// `i` the top has an element, and there are elements below and above stage `i`.
pub fn check_dense_without_endpoints(s: &ChainSeq, i: usize) -> Verdict {
    let mut v = Verdict::new(format!("dense-without-endpoints(stage {i})"));
    let top = s.top();
    let less = |a: usize, b: usize| a != b && top.relation_holds(0, &[a, b]);
    let mut img: Vec<usize> = s.to_top(i).map().to_vec();
    img.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if less(a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let n = top.size();
    let mut gaps: Vec<(Option<usize>, Option<usize>)> =
        img.windows(2).map(|w| (Some(w[0]), Some(w[1]))).collect();
    gaps.push((None, img.first().copied()));
    gaps.push((img.last().copied(), None));
    for (lo, hi) in gaps {
        let filled =
            (0..n).any(|z| lo.map_or(true, |l| less(l, z)) && hi.map_or(true, |h| less(z, h)));
        if filled {
            v.met();
        } else {
            v.unmet(s.is_stable(), || format!("empty gap {lo:?}..{hi:?}"));
        }
    }
    v
}
