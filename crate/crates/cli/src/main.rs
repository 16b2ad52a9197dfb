//! `fracmem` command-line front end.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 when a solver fails.

mod input;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracmem::inequalities::DEFAULT_WINDOW;
use fracmem::refine::refinement_study;
use fracmem::report::{csv_string, CsvRows, Envelope};
use fracmem::*;
use serde::Serialize;

use input::{load_domain, load_field};

#[derive(Debug)]
pub enum CliError {
    Param { field: String, reason: String },
    Solver(String),
}

impl CliError {
    pub fn param(field: &str, reason: impl Into<String>) -> Self {
        CliError::Param {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn from_core(context: &str, e: Error) -> Self {
        match e {
            Error::Parameter { field, reason } => CliError::param(field, reason),
            Error::Solver { .. } => CliError::Solver(e.to_string()),
            other => CliError::param(context, other.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Param { .. } => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Param { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            CliError::Solver(msg) => write!(f, "solver failure: {msg}"),
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "fracmem", version, about = "Fractional composite membrane laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutputArgs {
    /// Output file; with `--format both` the extension is replaced by
    /// `.json` and `.csv`. Standard output when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smallest eigenpair of (-Δ)^s + α χ_D on a domain.
    Eig(EigArgs),
    /// Minimize λ over supports D of measure c.
    Optimize(OptimizeArgs),
    /// Compare the optimum on a domain with the one on its quasi-ball.
    FaberKrahn(FaberKrahnArgs),
    /// Composite problem on intersections of two shifted domains.
    Lieb(LiebArgs),
    /// Shift-summed seminorm of a product of two fields.
    Identity(IdentityArgs),
    /// Rearrangements of a field.
    Rearrange(RearrangeArgs),
    /// Tables over (α, c) or over cell sizes.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct FormArgs {
    /// Fractional order in (0, 1).
    #[arg(long)]
    s: f64,
    /// Rescale the domain file to this cell size.
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct MeasureArgs {
    /// Measure of D.
    #[arg(long, conflicts_with = "c_frac")]
    c: Option<f64>,
    /// Measure of D as a fraction of |Ω|.
    #[arg(long)]
    c_frac: Option<f64>,
}

impl MeasureArgs {
    fn resolve(&self, omega: &Mask64) -> Res<f64> {
        match (self.c, self.c_frac) {
            (Some(c), None) => Ok(c),
            (None, Some(f)) if f > 0.0 && f < 1.0 => Ok(f * omega.measure()),
            (None, Some(f)) => Err(CliError::param("c-frac", format!("must lie in (0, 1), got {f}"))),
            _ => Err(CliError::param("c", "give one of --c and --c-frac")),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct SearchArgs {
    #[arg(long, default_value_t = 16)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Eigen-solve residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl SearchArgs {
    fn config(&self, alpha: f64, c: f64) -> MembraneConfig64 {
        let mut cfg = MembraneConfig::new(alpha, c).with_starts(self.starts).with_seed(self.seed);
        if let Some(t) = self.tol {
            cfg.eig_tol = t;
        }
        cfg
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct EigArgs {
    #[arg(long)]
    domain: PathBuf,
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Shape file (a `ShapeSpec`) selecting D on the domain grid; D = Ω when
    /// absent.
    #[arg(long)]
    support: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    domain: PathBuf,
    #[command(flatten)]
    form: FormArgs,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    measure: MeasureArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FaberKrahnArgs {
    #[arg(long)]
    domain: PathBuf,
    #[command(flatten)]
    form: FormArgs,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    measure: MeasureArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Allowed excess of Λ on the quasi-ball, as a fraction of Λ_Ω.
    #[arg(long, default_value_t = 0.02)]
    slack: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct LiebArgs {
    #[arg(long)]
    domain1: PathBuf,
    #[arg(long)]
    domain2: PathBuf,
    #[command(flatten)]
    form: FormArgs,
    #[arg(long)]
    alpha1: f64,
    #[arg(long)]
    alpha2: f64,
    /// Measure of D₁ as a fraction of |Ω₁|.
    #[arg(long)]
    c1_frac: f64,
    /// Measure of D₂ as a fraction of |Ω₂|.
    #[arg(long)]
    c2_frac: f64,
    /// Potential on the intersections; (α₁+α₂)/2 when absent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Only shifts whose components are multiples of this stride.
    #[arg(long, conflicts_with = "shift")]
    stride: Option<usize>,
    /// Explicit lattice shift `i,j`; repeatable.
    #[arg(long, value_parser = parse_shift)]
    shift: Vec<[i64; 2]>,
    #[arg(long, default_value_t = 4)]
    shift_starts: usize,
    #[command(flatten)]
    search: SearchArgs,
}

fn parse_shift(s: &str) -> std::result::Result<[i64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [a] => Ok([num(a)?, 0]),
        [a, b] => Ok([num(a)?, num(b)?]),
        _ => Err("expected `i` or `i,j`".into()),
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct IdentityArgs {
    #[arg(long)]
    u1: PathBuf,
    #[arg(long)]
    u2: PathBuf,
    #[arg(long)]
    s: f64,
    /// Pair offsets |d|∞ up to this radius enter the seminorms.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RearrangeArgs {
    #[arg(long)]
    field: PathBuf,
    /// Second field on the same mask for the Hardy–Littlewood check.
    #[arg(long)]
    with: Option<PathBuf>,
    /// Fractional order for the Pólya–Szegő comparison.
    #[arg(long)]
    s: Option<f64>,
    /// Rearrange in increasing order instead.
    #[arg(long)]
    increasing: bool,
    /// Also write the symmetrized field as (cell, radial_rank, value) rows.
    #[arg(long)]
    field_csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SweepArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    s: f64,
    /// Comma-separated α values (with --cs or --c-fracs).
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', conflicts_with = "c_fracs")]
    cs: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    c_fracs: Vec<f64>,
    /// Comma-separated cell sizes for a refinement study of λ₁ instead.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["alphas", "cs", "c_fracs"])]
    hs: Vec<f64>,
    #[command(flatten)]
    search: SearchArgs,
}

/// Rendered report: JSON document plus CSV text.
struct Rendered {
    json: String,
    csv: String,
}

fn render<C: Serialize, R: Serialize, T: CsvRows>(
    command: &str,
    seed: Option<u64>,
    config: &C,
    result: &R,
    rows: &[T],
) -> Res<Rendered> {
    let env = Envelope::new(command, seed, config, result);
    let json = env.to_json().map_err(|e| CliError::from_core("output", e))?;
    let line = env.provenance_line().map_err(|e| CliError::from_core("output", e))?;
    let csv = csv_string(rows, Some(&line)).map_err(|e| CliError::from_core("output", e))?;
    Ok(Rendered { json, csv })
}

fn core<T>(context: &str, r: Result<T>) -> Res<T> {
    r.map_err(|e| CliError::from_core(context, e))
}

fn spec_for(dim: usize, s: f64) -> Res<FormSpec64> {
    core("s", FormSpec::new(dim, s))
}

#[derive(Serialize)]
struct Resolved<'a, A: Serialize> {
    args: &'a A,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<&'a DomainSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cells: Option<usize>,
}

#[derive(Serialize)]
struct EigOut {
    lambda: f64,
    residual: f64,
    iterations: usize,
    degenerate: bool,
    cells: Vec<usize>,
    support: Vec<usize>,
    vector: Vec<f64>,
}

fn eig(a: &EigArgs) -> Res<Rendered> {
    let (dspec, omega) = load_domain(&a.domain, "domain", a.form.h)?;
    let spec = spec_for(dspec.dim, a.form.s)?;
    let d = match &a.support {
        None => omega.clone(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::param("support", format!("cannot read {}: {e}", p.display())))?;
            let shape: ShapeSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::param("support", format!("cannot parse {}: {e}", p.display())))?;
            let m = core("support", mask_from_shape(omega.grid(), &shape))?;
            core("support", m.intersection(&omega))?
        }
    };
    let form = core("domain", assemble_form(&omega, &spec))?;
    let pair = core("eig", smallest_eigenpair(&form, &d, a.alpha, a.tol))?;
    let out = EigOut {
        lambda: pair.lambda,
        residual: pair.residual,
        iterations: pair.iterations,
        degenerate: pair.degenerate,
        cells: omega.cells().to_vec(),
        support: d.cells().to_vec(),
        vector: pair.vector.values().to_vec(),
    };
    let cfg = Resolved {
        args: a,
        domain: Some(&dspec),
        c: None,
        cells: Some(omega.len()),
    };
    render("eig", None, &cfg, &out, std::slice::from_ref(&pair))
}

#[derive(Serialize)]
struct OptimizeOut<'a> {
    lambda: f64,
    c_snapped: f64,
    alpha: f64,
    k: usize,
    d_cells: &'a [usize],
    trace: &'a [f64],
    start_id: usize,
    converged: bool,
    starts: usize,
    seed: u64,
    start_lambdas: &'a [f64],
    degenerate_flags: &'a [bool],
}

fn optimize_cmd(a: &OptimizeArgs) -> Res<Rendered> {
    let (dspec, omega) = load_domain(&a.domain, "domain", a.form.h)?;
    let spec = spec_for(dspec.dim, a.form.s)?;
    let c = a.measure.resolve(&omega)?;
    let form = core("domain", assemble_form(&omega, &spec))?;
    let cfg = a.search.config(a.alpha, c);
    let r = core("optimize", optimize(&form, &cfg))?;
    let out = OptimizeOut {
        lambda: r.lambda,
        c_snapped: r.c_snapped,
        alpha: a.alpha,
        k: r.k,
        d_cells: r.d.cells(),
        trace: &r.trace,
        start_id: r.start_id,
        converged: r.converged,
        starts: cfg.starts,
        seed: cfg.seed,
        start_lambdas: &r.start_lambdas,
        degenerate_flags: &r.degenerate_flags,
    };
    let resolved = Resolved {
        args: a,
        domain: Some(&dspec),
        c: Some(c),
        cells: Some(omega.len()),
    };
    render("optimize", Some(cfg.seed), &resolved, &out, std::slice::from_ref(&r))
}

fn faber_krahn(a: &FaberKrahnArgs) -> Res<Rendered> {
    let (dspec, omega) = load_domain(&a.domain, "domain", a.form.h)?;
    let spec = spec_for(dspec.dim, a.form.s)?;
    let c = a.measure.resolve(&omega)?;
    if !(a.slack >= 0.0) {
        return Err(CliError::param("slack", "must be nonnegative"));
    }
    let cfg = a.search.config(a.alpha, c);
    let r = core("faber-krahn", faber_krahn_experiment(&omega, &spec, &cfg, a.slack))?;
    let resolved = Resolved {
        args: a,
        domain: Some(&dspec),
        c: Some(c),
        cells: Some(omega.len()),
    };
    render("faber-krahn", Some(cfg.seed), &resolved, &r, std::slice::from_ref(&r))
}

fn lieb(a: &LiebArgs) -> Res<Rendered> {
    let (d1, omega1) = load_domain(&a.domain1, "domain1", a.form.h)?;
    let (d2, omega2) = load_domain(&a.domain2, "domain2", a.form.h)?;
    if d1.dim != d2.dim {
        return Err(CliError::param("domain2", "dimension differs from domain1"));
    }
    let spec = spec_for(d1.dim, a.form.s)?;
    for (name, f) in [("c1-frac", a.c1_frac), ("c2-frac", a.c2_frac)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::param(name, format!("must lie in (0, 1), got {f}")));
        }
    }
    let mut cfg = LiebConfig::new(
        a.alpha1,
        a.alpha2,
        a.c1_frac * omega1.measure(),
        a.c2_frac * omega2.measure(),
    );
    cfg.alpha = a.alpha;
    cfg.shift_set = match (a.stride, a.shift.is_empty()) {
        (Some(s), _) => ShiftSet::Stride(s),
        (None, false) => ShiftSet::Explicit(a.shift.clone()),
        (None, true) => ShiftSet::All,
    };
    cfg.starts = a.search.starts;
    cfg.shift_starts = a.shift_starts;
    cfg.seed = a.search.seed;
    if let Some(t) = a.search.tol {
        cfg.eig_tol = t;
    }
    let r = core("lieb", lieb_experiment(&omega1, &omega2, &spec, &cfg))?;
    #[derive(Serialize)]
    struct LiebResolved<'a> {
        args: &'a LiebArgs,
        domain1: &'a DomainSpec,
        domain2: &'a DomainSpec,
    }
    let resolved = LiebResolved {
        args: a,
        domain1: &d1,
        domain2: &d2,
    };
    render("lieb", Some(cfg.seed), &resolved, &r, std::slice::from_ref(&r))
}

fn identity(a: &IdentityArgs) -> Res<Rendered> {
    let (s1, u1) = load_field(&a.u1, "u1")?;
    let (s2, u2) = load_field(&a.u2, "u2")?;
    if s1.domain.dim != s2.domain.dim {
        return Err(CliError::param("u2", "dimension differs from u1"));
    }
    let spec = spec_for(s1.domain.dim, a.s)?;
    let r = core("identity", product_identity_check(&u1, &u2, &spec, a.window))?;
    #[derive(Serialize)]
    struct IdResolved<'a> {
        args: &'a IdentityArgs,
        u1: &'a input::FieldSpec,
        u2: &'a input::FieldSpec,
    }
    let resolved = IdResolved {
        args: a,
        u1: &s1,
        u2: &s2,
    };
    render("identity", None, &resolved, &r, std::slice::from_ref(&r))
}

#[derive(Serialize)]
struct RearrangeOut {
    decreasing: bool,
    xi: Vec<f64>,
    values: Vec<f64>,
    symmetrized_cells: Vec<usize>,
    symmetrized_values: Vec<f64>,
    radial_order: Vec<usize>,
    /// `(∫ f_* g*, ∫ f g)`.
    hardy_littlewood: Option<(f64, f64)>,
    /// `([f*]², [f]²)`.
    polya_szego: Option<(f64, f64)>,
}

struct ProfileRows<'a>(&'a RearrangementProfile<f64>);

impl CsvRows for ProfileRows<'_> {
    fn header() -> Vec<&'static str> {
        vec!["xi", "value"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .xi
            .iter()
            .zip(&self.0.values)
            .map(|(x, v)| vec![format!("{x}"), format!("{v}")])
            .collect()
    }
}

fn rearrange(a: &RearrangeArgs) -> Res<Rendered> {
    let (fspec, f) = load_field(&a.field, "field")?;
    let (profile, sym) = if a.increasing {
        (increasing_rearrangement(&f), schwarz_increasing(&f))
    } else {
        (decreasing_rearrangement(&f), schwarz_decreasing(&f))
    };
    let hardy_littlewood = match &a.with {
        Some(p) => {
            let (_, g) = load_field(p, "with")?;
            Some(core("with", hardy_littlewood_check(&f, &g))?)
        }
        None => None,
    };
    let polya_szego = match a.s {
        Some(s) => Some(core("s", polya_szego_check(&f, &spec_for(fspec.domain.dim, s)?))?),
        None => None,
    };
    let out = RearrangeOut {
        decreasing: !a.increasing,
        xi: profile.xi.clone(),
        values: profile.values.clone(),
        symmetrized_cells: sym.field.mask().cells().to_vec(),
        symmetrized_values: sym.field.values().to_vec(),
        radial_order: sym.ordering.clone(),
        hardy_littlewood,
        polya_szego,
    };
    #[derive(Serialize)]
    struct RResolved<'a> {
        args: &'a RearrangeArgs,
        field: &'a input::FieldSpec,
    }
    let resolved = RResolved { args: a, field: &fspec };
    let rendered = render("rearrange", None, &resolved, &out, &[ProfileRows(&profile)])?;
    if let Some(p) = &a.field_csv {
        let env = Envelope::new("rearrange", None, &resolved, &out);
        let mut buf = Vec::new();
        writeln!(buf, "{}", core("output", env.provenance_line())?).expect("write to memory");
        core("output", sym.write_csv(&mut buf))?;
        write_file(p, &buf)?;
    }
    Ok(rendered)
}

fn sweep(a: &SweepArgs) -> Res<Rendered> {
    if !a.hs.is_empty() {
        let text = std::fs::read_to_string(&a.domain)
            .map_err(|e| CliError::param("domain", format!("cannot read {}: {e}", a.domain.display())))?;
        let dspec: DomainSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::param("domain", format!("cannot parse {}: {e}", a.domain.display())))?;
        let tol = a.search.tol.unwrap_or(1e-11);
        let study = core("hs", refinement_study(&dspec, a.s, &a.hs, tol))?;
        let resolved = Resolved {
            args: a,
            domain: Some(&dspec),
            c: None,
            cells: None,
        };
        return render("sweep", None, &resolved, &study, std::slice::from_ref(&study));
    }
    if a.alphas.is_empty() {
        return Err(CliError::param("alphas", "parameter grid is empty"));
    }
    let (dspec, omega) = load_domain(&a.domain, "domain", None)?;
    let cs: Vec<f64> = if !a.c_fracs.is_empty() {
        a.c_fracs.iter().map(|f| f * omega.measure()).collect()
    } else {
        a.cs.clone()
    };
    if cs.is_empty() {
        return Err(CliError::param("cs", "parameter grid is empty"));
    }
    let spec = spec_for(dspec.dim, a.s)?;
    let form = core("domain", assemble_form(&omega, &spec))?;
    let base = a.search.config(1.0, cs[0]);
    let table = core("sweep", monotonicity_sweep(&form, &a.alphas, &cs, &base))?;
    let resolved = Resolved {
        args: a,
        domain: Some(&dspec),
        c: None,
        cells: Some(omega.len()),
    };
    render("sweep", Some(base.seed), &resolved, &table, std::slice::from_ref(&table))
}

fn write_file(path: &Path, bytes: &[u8]) -> Res<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::param("output", format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &OutputArgs, r: &Rendered) -> Res<()> {
    let json = format!("{}\n", r.json);
    match (&out.output, out.format) {
        (Some(p), Format::Json) => write_file(p, json.as_bytes()),
        (Some(p), Format::Csv) => write_file(p, r.csv.as_bytes()),
        (Some(p), Format::Both) => {
            write_file(&p.with_extension("json"), json.as_bytes())?;
            write_file(&p.with_extension("csv"), r.csv.as_bytes())
        }
        (None, fmt) => {
            let mut stdout = std::io::stdout().lock();
            let text = match fmt {
                Format::Json => json,
                Format::Csv => r.csv.clone(),
                Format::Both => format!("{json}{}", r.csv),
            };
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::param("output", e.to_string()))
        }
    }
}

fn configure_threads() -> Res<()> {
    let Ok(v) = std::env::var("FRACMEM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::param("FRACMEM_THREADS", format!("not a thread count: `{v}`")))?;
    if n == 0 {
        return Err(CliError::param("FRACMEM_THREADS", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::param("FRACMEM_THREADS", e.to_string()))
}

fn run(cli: &Cli) -> Res<()> {
    configure_threads()?;
    let rendered = match &cli.command {
        Command::Eig(a) => eig(a)?,
        Command::Optimize(a) => optimize_cmd(a)?,
        Command::FaberKrahn(a) => faber_krahn(a)?,
        Command::Lieb(a) => lieb(a)?,
        Command::Identity(a) => identity(a)?,
        Command::Rearrange(a) => rearrange(a)?,
        Command::Sweep(a) => sweep(a)?,
    };
    emit(&cli.out, &rendered)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracmem: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
