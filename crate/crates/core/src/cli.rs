//! Command-line front end. Every command prints `key=value` lines on stdout
//! and returns a stable exit status.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::cayley_oracle::{self, iso_search, materialize, table_invariants, CayleyTable};
use crate::classification::{
    self, build_canonical, build_row, normalize, normalize_relaxed, verify_iso_map, CanonicalType,
    Classification, ClassificationError, ClassifyConfig, Outcome, Params, RowSpec,
};
use crate::document::{PresentationDoc, SpecDoc, SpecKind};
use crate::loop_ring::{check_modulus, ra_verdict};
use crate::ra_loop::RaLoop;
use crate::sampling::SampleConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Fail = 1,
    Constraint = 2,
    Parse = 3,
    Falsified = 4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub command: String,
    pub lines: Vec<String>,
    pub elapsed_ms: u128,
    pub status: Status,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "raloop", version, about = "Build, verify and classify RA loops")]
pub struct Cli {
    /// Seed for sampled checks on infinite presentations.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Exponent window for sampled checks.
    #[arg(long, global = true, default_value_t = 3)]
    pub sample_bound: i64,
    /// Odd modulus of the coefficient ring.
    #[arg(long, global = true, default_value_t = 3)]
    pub modulus: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a presentation (and optionally its Cayley table).
    Build(BuildArgs),
    /// Check loop, Moufang and RA properties of a table or presentation.
    Verify { path: PathBuf },
    /// Name the canonical type of a finite table.
    Classify { path: PathBuf },
    /// Search for an isomorphism between two tables.
    Iso { a: PathBuf, b: PathBuf },
    /// Carry a row onto its canonical type.
    Normalize(NormalizeArgs),
    /// Check alternativity and associativity of the loop ring.
    RingCheck { path: PathBuf },
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// `row` or `type`.
    pub kind: Option<String>,
    pub id: Option<u32>,
    /// Parameters such as `m1=2 k=1`.
    pub params: Vec<String>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also emit the Cayley table (finite centers only).
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    pub row: Option<u32>,
    pub params: Vec<String>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Let starred rows take any m1.
    #[arg(long)]
    pub relaxed: bool,
}

struct Failure(Status, String);

type Outcomes = Result<(Vec<String>, Status), Failure>;

fn parse_err(e: impl fmt::Display) -> Failure {
    Failure(Status::Parse, format!("error={e}"))
}

fn constraint(e: impl fmt::Display) -> Failure {
    Failure(Status::Constraint, format!("error={e}"))
}

fn class_err(e: ClassificationError) -> Failure {
    match e {
        ClassificationError::Constraint(_)
        | ClassificationError::UnknownRow(_)
        | ClassificationError::UnknownType(_)
        | ClassificationError::Presentation(_) => constraint(e),
        other => Failure(Status::Fail, format!("error={other}")),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))
}

fn read_table(path: &Path) -> Result<CayleyTable, Failure> {
    CayleyTable::parse(&read(path)?).map_err(parse_err)
}

fn parse_params(items: &[String]) -> Result<Params, Failure> {
    let mut p = Params::default();
    for item in items {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected name=value, got `{item}`")))?;
        let value: u32 = value
            .parse()
            .map_err(|_| parse_err(format!("`{value}` is not a non-negative integer")))?;
        p.set(name, value).map_err(constraint)?;
    }
    Ok(p)
}

fn verdict(name: &str, ok: bool, witness: Option<String>) -> String {
    match (ok, witness) {
        (true, _) => format!("{name}=pass"),
        (false, Some(w)) => format!("{name}=fail witness={w}"),
        (false, None) => format!("{name}=fail"),
    }
}

fn triple(t: &CayleyTable, w: [usize; 3]) -> String {
    format!("{},{},{}", t.name(w[0]), t.name(w[1]), t.name(w[2]))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> RunReport
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let command = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let start = Instant::now();
    let (lines, status) = match Cli::try_parse_from(&args) {
        Ok(cli) => match dispatch(&cli) {
            Ok(ok) => ok,
            Err(Failure(status, line)) => (vec![line], status),
        },
        Err(e) => {
            use clap::error::ErrorKind;
            let status = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Status::Pass,
                _ => Status::Parse,
            };
            (vec![e.render().to_string().trim_end().to_string()], status)
        }
    };
    RunReport {
        command,
        lines,
        elapsed_ms: start.elapsed().as_millis(),
        status,
    }
}

fn dispatch(cli: &Cli) -> Outcomes {
    let cfg = SampleConfig {
        bound: cli.sample_bound,
        seed: cli.seed,
        ..SampleConfig::default()
    };
    match &cli.command {
        Command::Build(args) => build(args),
        Command::Verify { path } => {
            check_modulus(cli.modulus).map_err(constraint)?;
            verify(path, cli.modulus, &cfg)
        }
        Command::Classify { path } => {
            check_modulus(cli.modulus).map_err(constraint)?;
            classify(path, cli.modulus)
        }
        Command::Iso { a, b } => iso(a, b),
        Command::Normalize(args) => normalize_cmd(args, &cfg),
        Command::RingCheck { path } => {
            check_modulus(cli.modulus).map_err(constraint)?;
            ring_check(path, cli.modulus)
        }
    }
}

fn resolve_spec(
    spec: &Option<PathBuf>,
    kind: Option<&str>,
    id: Option<u32>,
    params: &[String],
) -> Result<(SpecKind, u32, Params), Failure> {
    if let Some(path) = spec {
        let doc = SpecDoc::parse(&read(path)?).map_err(parse_err)?;
        let mut p = doc.params().map_err(class_err)?;
        for item in params {
            let one = parse_params(std::slice::from_ref(item))?;
            let name = item.split_once('=').map(|(n, _)| n).unwrap_or_default();
            p.set(name, one.get(name)).map_err(constraint)?;
        }
        return Ok((doc.kind, doc.id, p));
    }
    let kind = match kind {
        Some("row") => SpecKind::Row,
        Some("type") => SpecKind::Type,
        Some(other) => return Err(parse_err(format!("kind must be `row` or `type`, got `{other}`"))),
        None => return Err(parse_err("missing kind (row or type) or --spec")),
    };
    let id = id.ok_or_else(|| parse_err("missing id"))?;
    Ok((kind, id, parse_params(params)?))
}

fn build(args: &BuildArgs) -> Outcomes {
    let (kind, id, params) = resolve_spec(&args.spec, args.kind.as_deref(), args.id, &args.params)?;
    let l = match kind {
        SpecKind::Row => build_row(&RowSpec::new(id).map_err(class_err)?, &params),
        SpecKind::Type => build_canonical(&CanonicalType::new(id).map_err(class_err)?, &params),
    }
    .map_err(class_err)?;
    let doc = PresentationDoc::from_loop(&l).map_err(constraint)?;
    let table = if args.table {
        if !l.center().is_finite() {
            return Err(constraint("the center is infinite; no Cayley table exists"));
        }
        Some(materialize(&l).map_err(constraint)?.0)
    } else {
        None
    };
    let mut lines = Vec::new();
    match &args.out {
        Some(out) => {
            let io = |e: std::io::Error| Failure(Status::Fail, format!("error={e}"));
            std::fs::write(out, doc.to_text()).map_err(io)?;
            lines.push(format!("presentation={}", out.display()));
            if let Some(t) = table {
                let path = out.with_extension("cayley");
                std::fs::write(&path, t.to_text()).map_err(io)?;
                lines.push(format!("table={}", path.display()));
                lines.push(format!("order={}", t.n()));
            }
        }
        None => match table {
            Some(t) => lines.push(t.to_text().trim_end().to_string()),
            None => lines.push(doc.to_text().trim_end().to_string()),
        },
    }
    Ok((lines, Status::Pass))
}

fn structure_lines(t: &CayleyTable, modulus: u64, lines: &mut Vec<String>) -> Result<bool, Failure> {
    let mut ok = true;
    let moufang = t.moufang_check();
    let w = moufang
        .failure
        .as_ref()
        .map(|(law, idx, _)| format!("{law}@{}", triple(t, *idx)));
    ok &= moufang.passed();
    lines.push(verdict("moufang", moufang.passed(), w));

    let ra = ra_verdict(t, modulus).map_err(constraint)?;
    let alt_w = ra.alternative.witness.map(|w| triple(t, w));
    lines.push(verdict("alternative", ra.alternative.holds, alt_w));
    let assoc_ok = !ra.associative;
    lines.push(verdict("nonassociative", assoc_ok, None));
    ok &= ra.is_ra();
    lines.push(verdict("ra", ra.is_ra(), None));

    let inv = table_invariants(t);
    let derived_ok = inv.derived.len() == 2;
    lines.push(verdict(
        "derived",
        derived_ok,
        (!derived_ok).then(|| format!("order {}", inv.derived.len())),
    ));
    ok &= derived_ok;
    let central: std::collections::HashSet<usize> = inv.center.iter().copied().collect();
    let n = t.n();
    let quotient_ok = n == 8 * inv.center.len();
    let bad_square = (0..n).find(|&g| !central.contains(&t.mul(g, g)));
    let center_ok = quotient_ok && bad_square.is_none();
    let w = if !quotient_ok {
        Some(format!("|L/Z|={}", n / inv.center.len().max(1)))
    } else {
        bad_square.map(|g| format!("{}^2", t.name(g)))
    };
    lines.push(verdict("center", center_ok, w));
    ok &= center_ok;
    Ok(ok)
}

fn verify(path: &Path, modulus: u64, cfg: &SampleConfig) -> Outcomes {
    let text = read(path)?;
    let mut lines = Vec::new();
    let is_table = text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.trim_start().starts_with("cayley"));
    let ok = if is_table {
        let t = CayleyTable::parse_unchecked(&text).map_err(parse_err)?;
        lines.push(format!("order={}", t.n()));
        match t.validate() {
            Err(defect) => {
                lines.push(verdict("loop", false, Some(defect.to_string())));
                false
            }
            Ok(()) => {
                lines.push(verdict("loop", true, None));
                structure_lines(&t, modulus, &mut lines)?
            }
        }
    } else {
        let doc = PresentationDoc::parse(&text).map_err(parse_err)?;
        let group = doc.to_group().map_err(parse_err)?;
        let report = group.verify(cfg);
        let mut ok = report.passed();
        lines.push(verdict("presentation", report.passed(), report.violations.first().map(|v| v.to_string())));
        if doc.g0.is_some() {
            let l = doc.to_loop().map_err(parse_err)?;
            lines.push(format!("order={}", l.order()));
            ok &= presentation_lines(&l, modulus, cfg, &mut lines)?;
        } else {
            lines.push(format!("order={}", group.order()));
        }
        ok
    };
    Ok((lines, if ok { Status::Pass } else { Status::Fail }))
}

fn presentation_lines(l: &RaLoop, modulus: u64, cfg: &SampleConfig, lines: &mut Vec<String>) -> Result<bool, Failure> {
    if l.center().is_finite() {
        let (t, _) = materialize(l).map_err(constraint)?;
        return structure_lines(&t, modulus, lines);
    }
    let moufang = l.moufang_check(cfg);
    let w = moufang.failure.as_ref().map(|(law, _, words)| format!("{law}@{}", words.join(",")));
    lines.push(verdict("moufang", moufang.passed(), w));
    let mut rng = cfg.rng();
    let s = l.s().clone();
    let id = l.center().identity();
    let bad = (0..cfg.trials).find_map(|_| {
        let p = l.random_element(cfg.bound, &mut rng);
        let q = l.random_element(cfg.bound, &mut rng);
        let r = l.random_element(cfg.bound, &mut rng);
        let a = l.associator(&p, &q, &r);
        let c = l.commutator(&p, &q);
        ((a != s && a != id) || (c != s && c != id)).then(|| format!("{},{},{}", l.word(&p), l.word(&q), l.word(&r)))
    });
    lines.push(verdict("derived", bad.is_none(), bad.clone()));
    let noncentral_square = l
        .coset_representatives()
        .iter()
        .find(|v| !l.is_central(&l.embed(crate::group_presentation::GroupElement {
            a: false,
            b: false,
            z: l.square(v),
        })))
        .map(|v| l.word(v));
    lines.push(verdict("center", noncentral_square.is_none(), noncentral_square.clone()));
    lines.push(format!("involutions={}", l.solve_involutions().count));
    Ok(moufang.passed() && bad.is_none() && noncentral_square.is_none())
}

fn classify(path: &Path, modulus: u64) -> Outcomes {
    let t = read_table(path)?;
    let cfg = ClassifyConfig {
        modulus,
        ..ClassifyConfig::default()
    };
    let result = classification::classify_finite(&t, &cfg).map_err(constraint)?;
    Ok(match result {
        Classification::Type {
            type_id,
            params,
            generators,
            ..
        } => {
            let c = CanonicalType::new(type_id as u32).expect("classified types exist");
            let [x, y, u] = generators.map(|g| t.name(g));
            (
                vec![format!("type={type_id} {}", params.render(&c.param_names())), format!("x={x} y={y} u={u}")],
                Status::Pass,
            )
        }
        Classification::NotRa { reason } => (vec![format!("verdict=NOT_RA reason={reason}")], Status::Fail),
        Classification::NotIndecomposable { a, b } => (
            vec![format!("verdict=NOT_INDECOMPOSABLE factors={}x{}", a.len(), b.len())],
            Status::Fail,
        ),
        Classification::Undecided { reason } => (vec![format!("verdict=UNDECIDED reason={reason}")], Status::Fail),
        Classification::NoMatch { fingerprint } => (
            vec!["verdict=NO_MATCH".to_string(), format!("fingerprint {fingerprint}")],
            Status::Falsified,
        ),
    })
}

fn iso(a: &Path, b: &Path) -> Outcomes {
    let (ta, tb) = (read_table(a)?, read_table(b)?);
    Ok(match iso_search(&ta, &tb) {
        Some(map) => {
            debug_assert!(cayley_oracle::is_isomorphism(&ta, &tb, &map));
            let pairs: Vec<String> = map.iter().enumerate().map(|(i, j)| format!("{i}:{j}")).collect();
            (vec!["iso=found".to_string(), format!("map={}", pairs.join(","))], Status::Pass)
        }
        None => (vec!["iso=none".to_string()], Status::Fail),
    })
}

fn normalize_cmd(args: &NormalizeArgs, cfg: &SampleConfig) -> Outcomes {
    let (kind, id, params) = resolve_spec(&args.spec, Some("row"), args.row, &args.params)?;
    if kind != SpecKind::Row {
        return Err(constraint("normalize takes a row specification"));
    }
    let spec = RowSpec::new(id).map_err(class_err)?;
    let trace = if args.relaxed {
        normalize_relaxed(id, &params)
    } else {
        normalize(id, &params)
    }
    .map_err(class_err)?;
    let mut lines = vec![format!("row={id} {}", params.render(&spec.param_names()))];
    lines.extend(trace.steps().iter().map(|s| format!("step={s}")));
    lines.push(trace.outcome.to_string());
    let report = verify_iso_map(trace.frame.src(), &trace.dst, &trace, cfg);
    lines.push(verdict("iso_map", report.failures.is_empty(), report.failures.first().cloned()));
    if let Some(found) = report.oracle {
        lines.push(verdict("oracle", found, None));
    }
    let ok = report.passed() && trace.outcome != Outcome::Unrecognized;
    Ok((lines, if ok { Status::Pass } else { Status::Fail }))
}

fn ring_check(path: &Path, modulus: u64) -> Outcomes {
    let t = read_table(path)?;
    let ra = ra_verdict(&t, modulus).map_err(constraint)?;
    let mut alt = format!("alternative={}", ra.alternative.holds);
    if let (Some(w), Some(law)) = (ra.alternative.witness, ra.alternative.law) {
        alt.push_str(&format!(" witness={} law={law}", triple(&t, w)));
    }
    let mut assoc = format!("associative={}", ra.associative);
    if let Some(w) = ra.associativity_witness {
        assoc.push_str(&format!(" witness={}", triple(&t, w)));
    }
    let lines = vec![alt, assoc, format!("ra={}", ra.is_ra())];
    Ok((lines, if ra.is_ra() { Status::Pass } else { Status::Fail }))
}
