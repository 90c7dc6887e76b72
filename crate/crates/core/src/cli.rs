//! The `forge` command line: `check`, `build`, `audit` and `galois`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::age::{
    check_amalgamation, check_dominating, check_jep, has_weakly_initial, skeleton_arrows, AgeClass,
    AgeError, AgeKind, Closure,
};
use crate::backforth::{check_ultrahomogeneous, uniqueness_audit, WeaveError};
use crate::chain::{
    build_fraisse_sequence, cardinality_bound, check_dense_without_endpoints, check_homogeneous,
    default_margin, verify_extension_property, verify_fraisse_conditions, ChainError, ChainSeq,
};
use crate::fincat::{
    check_amalgamation as cat_amalgamation, check_right_ore, emit_homogeneous_axioms,
    enumerate_jat_ideals, jep_by_search, jep_from_connectedness, opposite, parse_category,
    triviality_verdict, zigzag_connected, CategoryError, JepOutcome,
};
use crate::format::parse_structure;
use crate::galois::{build_stabilizers, default_anchors, galois_report, GaloisError};
use crate::verdict::{Outcome, Verdict};

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;
/// Environment variable naming the default root for run directories.
pub const OUT_ENV: &str = "FORGE_OUT";
/// Latest stage at which the audit seeds ultrahomogeneity fragments by default.
pub const UH_SEED_STAGE: usize = 3;

#[derive(Debug, Parser)]
#[command(
    name = "forge",
    version,
    about = "Fraisse limits and finite-category diagnostics at desk scale"
)]
pub struct Cli {
    /// Report layout: full text, or only the key: value lines.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Kv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// AP/JEP/domination on an age, or Ore/zig-zag/ideal checks on a category file.
    Check(CheckArgs),
    /// Build a Fraisse sequence and write it as a run directory.
    Build(BuildArgs),
    /// Run the verifier suite against a run directory.
    Audit(AuditArgs),
    /// Stabilizer assignment, coset category and equivalence audit.
    Galois(GaloisArgs),
}

#[derive(Debug, Args)]
pub struct ClassArgs {
    /// Built-in age: graphs, linords, boolean, pure.
    #[arg(long)]
    pub age: Option<String>,
    /// Directory of structure files forming a finite class.
    #[arg(long, conflicts_with = "age")]
    pub class_dir: Option<PathBuf>,
    /// Reject a class directory that is not closed under substructures instead of closing it.
    #[arg(long, requires = "class_dir")]
    pub reject: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Category file.
    #[arg(long, conflicts_with_all = ["age", "class_dir"])]
    pub cat: Option<PathBuf>,
    /// Largest span (or pair) member size.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub span: u64,
    /// Largest amalgam (or joint embedding) size.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub amalgam: u64,
    /// Age: also check that the arrows out of the least member dominate.
    #[arg(long)]
    pub dominate: bool,
    /// Category: right Ore condition on C.
    #[arg(long)]
    pub ore: bool,
    /// Category: amalgamation, checked directly and as Ore on the opposite.
    #[arg(long)]
    pub ap: bool,
    /// Category: zig-zag components and joint embedding.
    #[arg(long)]
    pub zigzag: bool,
    /// Category: J_at-ideals and their count.
    #[arg(long)]
    pub ideals: bool,
    /// Category: print the homogeneity axioms.
    #[arg(long)]
    pub axioms: bool,
    /// Directory for report.txt and counterexample.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run directory; defaults to `<root>/<age>-seed<seed>-steps<steps>` with
    /// the root taken from the environment, else `runs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = OUT_ENV, hide_env_values = true)]
    pub out_root: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Run directory written by `build`.
    pub run: PathBuf,
    /// Second run for the uniqueness weave; defaults to the run itself.
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Class directory when the run was built over a custom class.
    #[arg(long)]
    pub class_dir: Option<PathBuf>,
    /// Reject a class directory that is not closed under substructures.
    #[arg(long, requires = "class_dir")]
    pub reject: bool,
    /// Size bound for members and embeddings.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub bound: u64,
    /// Stages kept back from the top; defaults to half the run.
    #[arg(long)]
    pub margin: Option<usize>,
    /// Weave depth for ultrahomogeneity and uniqueness.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
    /// Stages kept back from the top for ultrahomogeneity; defaults to all but
    /// the first three.
    #[arg(long)]
    pub uh_margin: Option<usize>,
    /// Weave depth of the ultrahomogeneity fragments.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub uh_depth: u64,
    /// Also run the Galois audit with u = this stage.
    #[arg(long)]
    pub galois_stage: Option<usize>,
    /// Largest member of C in the Galois audit.
    #[arg(long, default_value_t = 2)]
    pub galois_c: usize,
    /// Directory for report.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GaloisArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Structure file for u.
    #[arg(long)]
    pub u: Option<PathBuf>,
    /// Take u to be the first member of this size.
    #[arg(long, conflicts_with = "u")]
    pub u_size: Option<usize>,
    /// C is every member of size at most this.
    #[arg(long)]
    pub c_max: usize,
    /// Directory for report.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Io(String),
    /// A construction stopped with a certificate.
    Stuck(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Stuck(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Parse(m) | CliError::Io(m) | CliError::Stuck(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<AgeError> for CliError {
    fn from(e: AgeError) -> Self {
        match e {
            AgeError::Io(e) => CliError::Io(e.to_string()),
            AgeError::Parse { .. } | AgeError::NotClosed(_) | AgeError::Empty => {
                CliError::Parse(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<CategoryError> for CliError {
    fn from(e: CategoryError) -> Self {
        match e {
            CategoryError::Parse { .. } | CategoryError::Law(_) => CliError::Parse(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::Io(e) => CliError::Io(e.to_string()),
            ChainError::Age(a) => a.into(),
            ChainError::Stuck(..) | ChainError::NoSeed(_) => CliError::Stuck(e.to_string()),
            ChainError::NoSteps => CliError::Usage(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<WeaveError> for CliError {
    fn from(e: WeaveError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<GaloisError> for CliError {
    fn from(e: GaloisError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// A report under construction: config lines, body text and the overall outcome.
struct Report {
    config: Vec<(String, String)>,
    summary: Vec<(String, String)>,
    body: String,
    outcome: Outcome,
}

impl Report {
    fn new(command: &str) -> Self {
        Report {
            config: vec![("command".into(), command.into())],
            summary: Vec::new(),
            body: String::new(),
            outcome: Outcome::Holds,
        }
    }

    fn config(&mut self, k: &str, v: impl ToString) {
        self.config.push((k.into(), v.to_string()));
    }

    fn key(&mut self, k: &str, v: impl ToString) {
        self.summary.push((k.into(), v.to_string()));
    }

    fn verdict(&mut self, v: &Verdict) {
        self.key(&v.check, v.outcome());
        self.body.push_str(&v.report());
        self.outcome = self.outcome.and(v.outcome());
    }

    fn render(&self, format: Format) -> String {
        let mut s = String::from("[config]\n");
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k}: {v}");
        }
        s.push_str("[summary]\n");
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k}: {v}");
        }
        let _ = writeln!(s, "outcome: {}", self.outcome);
        if format == Format::Text && !self.body.is_empty() {
            s.push_str("[details]\n");
            s.push_str(&self.body);
            if !s.ends_with('\n') {
                s.push('\n');
            }
        }
        s
    }
}

fn load_class(c: &ClassArgs) -> Result<Arc<AgeClass>, CliError> {
    match (&c.age, &c.class_dir) {
        (Some(name), None) => Ok(AgeClass::by_name(name)?),
        (None, Some(dir)) => {
            if !dir.is_dir() {
                return Err(CliError::Io(format!("{}: not a directory", dir.display())));
            }
            let closure = if c.reject {
                Closure::Reject
            } else {
                Closure::AutoClose
            };
            Ok(AgeClass::from_dir(dir, closure)?)
        }
        _ => Err(CliError::Usage("give --age or --class-dir".into())),
    }
}

fn class_config(r: &mut Report, c: &ClassArgs) {
    if let Some(a) = &c.age {
        r.config("age", a);
    }
    if let Some(d) = &c.class_dir {
        r.config("class-dir", d.display());
        r.config("closure", if c.reject { "reject" } else { "auto-close" });
    }
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

/// Parse `args` (including the program name), run, write the report to `out`
/// and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let text = report.render(cli.format);
            let _ = out.write_all(text.as_bytes());
            report.outcome.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "forge: {}", e.message());
            e.code()
        }
    }
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Check(a) => cmd_check(a, cli.format),
        Command::Build(a) => cmd_build(a, cli.format),
        Command::Audit(a) => cmd_audit(a, cli.format),
        Command::Galois(a) => cmd_galois(a, cli.format),
    }
}

fn finish(r: Report, out: &Option<PathBuf>, format: Format) -> Result<Report, CliError> {
    if let Some(dir) = out {
        write_out(dir, "report.txt", &r.render(format))?;
    }
    Ok(r)
}

fn cmd_check(a: &CheckArgs, format: Format) -> Result<Report, CliError> {
    if let Some(path) = &a.cat {
        return check_category(a, path, format);
    }
    let class = load_class(&a.class)?;
    let mut r = Report::new("check");
    class_config(&mut r, &a.class);
    r.config("span", a.span);
    r.config("amalgam", a.amalgam);
    r.config("dominate", a.dominate);
    let (span, amalgam) = (a.span as usize, a.amalgam as usize);
    let mut cx = String::new();
    for v in [
        check_amalgamation(&class, span, amalgam)?,
        check_jep(&class, span, amalgam)?,
    ] {
        r.key(v.property, v.outcome_label());
        r.body.push_str(&v.report());
        r.outcome = r.outcome.and(v.outcome);
        if let Some(c) = &v.counterexample {
            let _ = write!(cx, "# {}\n{}", v.property, c.to_text());
        }
    }
    match has_weakly_initial(&class, span)? {
        Some(m) => r.key("weakly-initial", format!("size {}", m.size())),
        None => {
            r.key("weakly-initial", "none");
            r.outcome = r.outcome.and(if class.exhausted_by(span) {
                Outcome::Violated
            } else {
                Outcome::Pending
            });
        }
    }
    if a.dominate {
        if let Some(w) = has_weakly_initial(&class, span)? {
            let family: Vec<_> = skeleton_arrows(&class, span)?
                .into_iter()
                .filter(|x| x.dom == w)
                .collect();
            let d = check_dominating(&class, &family, span)?;
            r.verdict(&d.cofinal);
            r.verdict(&d.absorbing);
        }
    }
    if let Some(dir) = &a.out {
        if !cx.is_empty() {
            write_out(dir, "counterexample.txt", &cx)?;
        }
    }
    finish(r, &a.out, format)
}

fn check_category(a: &CheckArgs, path: &Path, format: Format) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let c = parse_category(&text)?;
    let mut r = Report::new("check");
    r.config("cat", path.display());
    let all = !(a.ore || a.ap || a.zigzag || a.ideals || a.axioms);
    for (k, v) in [
        ("ore", a.ore),
        ("ap", a.ap),
        ("zigzag", a.zigzag),
        ("ideals", a.ideals),
        ("axioms", a.axioms),
    ] {
        r.config(k, v || all);
    }
    r.key("objects", c.object_count());
    r.key("morphisms", c.morphism_count());
    if triviality_verdict(&c) {
        r.key(
            "note",
            "empty category: trivial topos, every check holds vacuously",
        );
        return finish(r, &a.out, format);
    }
    let square = |r: &mut Report, v: crate::fincat::SquareVerdict| {
        r.key(v.property, if v.holds { "holds" } else { "violated" });
        r.body.push_str(&v.report());
        if !v.holds {
            r.outcome = Outcome::Violated;
        }
        v.holds
    };
    if a.ore || all {
        square(&mut r, check_right_ore(&c));
    }
    let mut ap = None;
    if a.ap || a.zigzag || all {
        let direct = cat_amalgamation(&c);
        let dual = check_right_ore(&opposite(&c));
        r.key(
            "ore-on-opposite",
            if dual.holds { "holds" } else { "violated" },
        );
        r.key("duality-agrees", direct.holds == dual.holds);
        ap = Some(direct.holds);
        if a.ap || all {
            square(&mut r, direct);
        }
    }
    if a.zigzag || all {
        let (connected, parts) = zigzag_connected(&c);
        r.key("components", parts.len());
        r.key("zigzag-connected", connected);
        let jep = jep_by_search(&c);
        square(&mut r, jep);
        if ap == Some(true) {
            match jep_from_connectedness(&c)? {
                JepOutcome::Connected(cocones) => r.key("cocones-constructed", cocones.len()),
                JepOutcome::Disconnected(x, y) => r.key(
                    "disconnected-pair",
                    format!("{} {}", c.objects()[x], c.objects()[y]),
                ),
            }
        }
    }
    if a.ideals || all {
        match enumerate_jat_ideals(&c) {
            Ok(ideals) => {
                let (_, parts) = zigzag_connected(&c);
                r.key("jat-ideals", ideals.len());
                r.key("two-to-components", 1usize << parts.len().min(63));
            }
            Err(CategoryError::Precondition(m)) => {
                r.key("jat-ideals", format!("not a topology ({m})"))
            }
            Err(e) => return Err(e.into()),
        }
    }
    if a.axioms || all {
        let ax = emit_homogeneous_axioms(&c);
        r.key("axioms", ax.len());
        for line in ax {
            let _ = writeln!(r.body, "{line}");
        }
    }
    finish(r, &a.out, format)
}

pub fn run_dir_name(age: &str, seed: u64, steps: u64) -> String {
    format!("{age}-seed{seed}-steps{steps}")
}

fn cmd_build(a: &BuildArgs, format: Format) -> Result<Report, CliError> {
    let class = load_class(&a.class)?;
    let dir = match (&a.out, &a.out_root) {
        (Some(d), _) => d.clone(),
        (None, root) => root
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(run_dir_name(class.name(), a.seed, a.steps)),
    };
    let mut r = Report::new("build");
    class_config(&mut r, &a.class);
    r.config("steps", a.steps);
    r.config("seed", a.seed);
    r.config("out", dir.display());
    let chain = match build_fraisse_sequence(&class, a.steps as usize, a.seed) {
        Ok(c) => c,
        Err(ChainError::Stuck(msg, span)) => {
            r.key("stuck", &msg);
            let _ = writeln!(
                r.body,
                "stuck span: {}",
                crate::age::Counterexample::Span(*span).describe()
            );
            r.outcome = Outcome::Violated;
            return Ok(r);
        }
        Err(e) => return Err(e.into()),
    };
    chain.save(&dir)?;
    let sizes: Vec<String> = chain
        .stages()
        .iter()
        .map(|s| s.size().to_string())
        .collect();
    let discharged = chain
        .log()
        .iter()
        .filter(|l| {
            !(l.action.starts_with("skipped")
                || l.action.starts_with("idle")
                || l.action.starts_with("already"))
        })
        .count();
    let (card, bound) = cardinality_bound(&chain);
    r.key("stages", chain.top_index() + 1);
    r.key("top-size", card);
    r.key("cardinality-bound", bound);
    r.key("obligations-discharged", discharged);
    r.key("stage-sizes", sizes.join(" "));
    let rendered = r.render(format);
    write_out(&dir, "report.txt", &rendered)?;
    Ok(r)
}

fn load_run(dir: &Path, class_dir: &Option<PathBuf>, reject: bool) -> Result<ChainSeq, CliError> {
    let meta = std::fs::read_to_string(dir.join("chain.txt"))
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.join("chain.txt").display())))?;
    let name = meta
        .lines()
        .find_map(|l| l.strip_prefix("age:"))
        .map(|s| s.trim().to_string())
        .ok_or_else(|| CliError::Parse("chain.txt lacks `age`".into()))?;
    let class = match class_dir {
        Some(d) => AgeClass::from_dir(
            d,
            if reject {
                Closure::Reject
            } else {
                Closure::AutoClose
            },
        )?,
        None => AgeClass::by_name(&name)?,
    };
    Ok(ChainSeq::load(dir, class)?)
}

fn cmd_audit(a: &AuditArgs, format: Format) -> Result<Report, CliError> {
    let s = load_run(&a.run, &a.class_dir, a.reject)?;
    let bound = a.bound as usize;
    let depth = a.depth as usize;
    let margin = a.margin.unwrap_or_else(|| default_margin(&s));
    let uh_margin = a
        .uh_margin
        .unwrap_or_else(|| s.top_index().saturating_sub(UH_SEED_STAGE));
    let uh_depth = a.uh_depth as usize;
    let mut r = Report::new("audit");
    r.config("run", a.run.display());
    if let Some(o) = &a.against {
        r.config("against", o.display());
    }
    r.config("age", s.age().name());
    r.config("seed", s.seed());
    r.config("bound", bound);
    r.config("margin", margin);
    r.config("depth", depth);
    r.config("uh-margin", uh_margin);
    r.config("uh-depth", uh_depth);
    r.key("stages", s.top_index() + 1);
    let arrow_bound = s.top_index().saturating_sub(margin);
    let fr = verify_fraisse_conditions(&s, bound, arrow_bound)?;
    r.verdict(&fr.universality);
    r.verdict(&fr.discharge);
    r.verdict(&verify_extension_property(&s, bound, margin)?);
    r.verdict(&check_homogeneous(&s, bound, margin)?);
    r.verdict(&check_ultrahomogeneous(&s, bound, uh_depth, uh_margin)?);
    if matches!(s.age().kind(), AgeKind::LinearOrders) {
        r.verdict(&check_dense_without_endpoints(&s, arrow_bound));
    }
    let other = match &a.against {
        Some(d) => load_run(d, &a.class_dir, a.reject)?,
        None => s.clone(),
    };
    let u = uniqueness_audit(&s, &other, depth)?;
    r.key("uniqueness", u.outcome);
    let _ = writeln!(r.body, "uniqueness: {} ({})", u.outcome, u.message);
    if let Some(w) = &u.weave {
        r.body.push_str(&w.report());
    }
    if let Some(m) = &u.map {
        r.key("uniqueness-identity", m.is_identity());
    }
    r.outcome = r.outcome.and(u.outcome);
    if let Some(i) = a.galois_stage {
        if i > s.top_index() {
            return Err(CliError::Usage(format!("no stage {i}")));
        }
        r.config("galois-stage", i);
        r.config("galois-c", a.galois_c);
        let cs = s.age().members_up_to(a.galois_c).map_err(CliError::from)?;
        galois_into(&mut r, &cs, s.stage(i))?;
    }
    finish(r, &a.out, format)
}

fn galois_into(
    r: &mut Report,
    cs: &[crate::structures::FinStructure],
    u: &crate::structures::FinStructure,
) -> Result<(), CliError> {
    let anchors = default_anchors(cs, u)?;
    let st = build_stabilizers(cs, u, &anchors)?;
    let (text, outcome) = galois_report(&st);
    r.key("galois", outcome);
    r.body.push_str(&text);
    r.outcome = r.outcome.and(outcome);
    Ok(())
}

fn cmd_galois(a: &GaloisArgs, format: Format) -> Result<Report, CliError> {
    let class = load_class(&a.class)?;
    let mut r = Report::new("galois");
    class_config(&mut r, &a.class);
    let u = match (&a.u, a.u_size) {
        (Some(p), None) => {
            r.config("u", p.display());
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            parse_structure(&text, Some(class.signature()))
                .map_err(|e| CliError::Parse(e.to_string()))?
        }
        (None, Some(n)) => {
            r.config("u-size", n);
            class
                .members_of_size(n)?
                .first()
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("no member of size {n}")))?
        }
        _ => return Err(CliError::Usage("give --u or --u-size".into())),
    };
    r.config("c-max", a.c_max);
    let cs = class.members_up_to(a.c_max)?;
    galois_into(&mut r, &cs, &u)?;
    finish(r, &a.out, format)
}
