//! `mmlp` command-line front end.
//!
//! Inputs are inline text, a path to a file, or `@key` for a corpus entry.
//! Exit status is 0 on success, 1 for domain errors (printed as
//! `error: <reason>: <detail>`) and 2 for parse or usage errors.

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mmlp::ansatz::{binomial_ansatz, minkowski_ansatz, quantum_period_toric, vertex_ansatz, WeightMatrix};
use mmlp::corpus;
use mmlp::graph::{explore, ExploreOptions, MutationGraph};
use mmlp::lattice::IntVector;
use mmlp::laurent::{classical_period, regularize, LaurentPolynomial, PeriodSequence};
use mmlp::mutation::{is_mutable, mutate, mutate_polytope, MutationData, PolytopeMutationData};
use mmlp::polygon2d::{mmlp_family, singularity_content};
use mmlp::polytope::LatticePolytope;
use mmlp::rigidity::{certify_rigid, Certificate, MutationSearchBudget};
use mmlp::Error;

#[derive(Parser)]
#[command(
    name = "mmlp",
    version,
    about = "Mutations, periods and rigidity of Laurent polynomials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnsatzKind {
    Vertex,
    Binomial,
    Minkowski,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Print an entry's payload.
    Get { key: String },
    /// List keys, optionally restricted to a prefix.
    List { prefix: Option<String> },
    /// Recompute stored expectations for one entry or all of them.
    Verify { key: Option<String> },
}

#[derive(Subcommand)]
enum Command {
    /// Classical period coefficients up to t^K.
    Period {
        #[arg(long)]
        order: usize,
        /// Multiply the k-th coefficient by k!.
        #[arg(long)]
        regularize: bool,
        poly: String,
    },
    /// Newton polytope in text form.
    Newton { poly: String },
    /// Check mutability with respect to (w, factor).
    Mutable {
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, allow_hyphen_values = true)]
        factor: String,
        poly: String,
    },
    /// Apply the mutation (w, factor).
    Mutate {
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, allow_hyphen_values = true)]
        factor: String,
        poly: String,
    },
    /// Combinatorial mutation of a polytope; the factor file lists the
    /// factor polytope's points.
    PolytopeMutate {
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long)]
        factor_file: String,
        polytope: String,
    },
    /// Singularity content of a Fano polygon.
    Sc { polygon: String },
    /// Maximally mutable family of a Fano polygon.
    Mmlp {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        polygon: String,
    },
    /// Rigidity certificate.
    Rigid {
        /// File of `w= ... ; a= ...` lines; defaults to the bounded search.
        #[arg(long)]
        mutations: Option<String>,
        /// Search bound applied to normal combinations, factor powers and
        /// triangle sizes.
        #[arg(long, default_value_t = 3)]
        budget: u32,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        poly: String,
    },
    /// Laurent polynomials built from a polytope.
    Ansatz {
        #[arg(value_enum)]
        kind: AnsatzKind,
        polytope: String,
    },
    /// Regularised quantum period of a toric variety from its weights.
    Qperiod {
        #[arg(long)]
        weights: String,
        #[arg(long)]
        order: usize,
    },
    /// Bounded mutation graph.
    Graph {
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 200)]
        max_nodes: usize,
        #[arg(long, default_value_t = 3)]
        budget: u32,
        /// Shuffle candidate mutations with this seed (output is unchanged).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dot: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        poly: String,
    },
    /// GL(n,Z) normal form key and digest.
    NormalForm { polytope: String },
    /// Whether two polytopes are GL(n,Z)-equivalent.
    Equiv { first: String, second: String },
    /// Embedded examples.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

enum Failure {
    Domain(Error),
    Usage(String),
    /// Report already printed; exit with status 1.
    Silent,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_parse() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Domain(e)
        }
    }
}

type Outcome = std::result::Result<String, Failure>;

fn read_source(arg: &str) -> std::result::Result<String, Failure> {
    let p = Path::new(arg);
    if !arg.contains('\n') && p.is_file() {
        std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{arg}: {e}")))
    } else {
        Ok(arg.to_string())
    }
}

fn polynomial(arg: &str, dim: Option<usize>) -> std::result::Result<LaurentPolynomial, Failure> {
    if let Some(key) = arg.strip_prefix('@') {
        return Ok(corpus::get(key)?.polynomial()?);
    }
    let text = read_source(arg)?;
    let text = text.trim();
    Ok(match dim {
        Some(d) => LaurentPolynomial::parse_in_dim(text, d)?,
        None => LaurentPolynomial::parse(text)?,
    })
}

fn polytope(arg: &str) -> std::result::Result<LatticePolytope, Failure> {
    if let Some(key) = arg.strip_prefix('@') {
        return Ok(corpus::get(key)?.polytope()?);
    }
    let text = read_source(arg)?;
    if text.trim_start().starts_with("dim") {
        Ok(LatticePolytope::from_text(&text)?)
    } else {
        Ok(LatticePolytope::from_inline(text.trim())?)
    }
}

fn vector(arg: &str) -> std::result::Result<IntVector, Failure> {
    Ok(IntVector::parse(arg)?)
}

fn mutation_datum(w: &str, factor: &str) -> std::result::Result<MutationData, Failure> {
    let w = vector(w)?;
    let a = polynomial(factor, Some(w.dim()))?;
    Ok(MutationData::new(w, a)?)
}

fn period_line(p: &PeriodSequence) -> String {
    p.to_string()
}

fn budget(b: u32) -> MutationSearchBudget {
    MutationSearchBudget {
        max_w: b as i64,
        max_power: b,
        max_triangle: b,
    }
}

fn graph_text(g: &MutationGraph) -> String {
    let mut out = format!(
        "nodes {} edges {} classes {}\n",
        g.nodes.len(),
        g.edges.len(),
        g.class_count()
    );
    for (i, n) in g.nodes.iter().enumerate() {
        let state = if n.expanded { "expanded" } else { "frontier" };
        let _ = writeln!(
            out,
            "n{i} depth={} {state} {} {}",
            n.depth,
            n.key.digest(),
            n.polynomial
        );
    }
    for e in &g.edges {
        let _ = writeln!(out, "n{} -> n{} {}", e.source, e.target, e.label);
    }
    out
}

fn graph_json(g: &MutationGraph) -> Value {
    json!({
        "nodes": g.nodes.iter().enumerate().map(|(i, n)| json!({
            "id": i,
            "key": n.key.as_str(),
            "digest": n.key.digest(),
            "depth": n.depth,
            "expanded": n.expanded,
            "polynomial": n.polynomial.to_string(),
            "vertices": n.polytope.vertices().iter().map(|v| v.to_vec()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "edges": g.edges.iter().map(|e| json!({
            "source": e.source,
            "target": e.target,
            "w": e.label.w().to_vec(),
            "factor": e.label.factor.to_string(),
            "label": e.label.to_string(),
        })).collect::<Vec<_>>(),
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn run(cmd: Command) -> Outcome {
    Ok(match cmd {
        Command::Period {
            order,
            regularize: reg,
            poly,
        } => {
            let f = polynomial(&poly, None)?;
            let mut p = classical_period(&f, order)?;
            if reg {
                p = regularize(&p)?;
            }
            format!("{}\n", period_line(&p))
        }
        Command::Newton { poly } => polynomial(&poly, None)?.newton_polytope()?.to_text(),
        Command::Mutable { w, factor, poly } => {
            let md = mutation_datum(&w, &factor)?;
            let f = polynomial(&poly, Some(md.dim()))?;
            let wit = is_mutable(&f, &md)?;
            let mut out = String::from("mutable\n");
            for (h, r) in &wit.quotients {
                let _ = writeln!(out, "h={h} quotient={r}");
            }
            out
        }
        Command::Mutate { w, factor, poly } => {
            let md = mutation_datum(&w, &factor)?;
            let f = polynomial(&poly, Some(md.dim()))?;
            format!("{}\n", mutate(&f, &md)?)
        }
        Command::PolytopeMutate {
            w,
            factor_file,
            polytope: p,
        } => {
            let w = vector(&w)?;
            let text = read_source(&factor_file)?;
            let pts: Vec<IntVector> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("dim"))
                .flat_map(|l| l.split(';').map(str::to_string).collect::<Vec<_>>())
                .filter(|s| !s.trim().is_empty())
                .map(|s| vector(s.trim()))
                .collect::<std::result::Result<_, _>>()?;
            let pmd = PolytopeMutationData::new(w, &pts)?;
            mutate_polytope(&polytope(&p)?, &pmd)?.to_text()
        }
        Command::Sc { polygon } => format!("{}\n", singularity_content(&polytope(&polygon)?)?),
        Command::Mmlp { format, polygon } => {
            let fam = mmlp_family(&polytope(&polygon)?)?;
            match format {
                Format::Text => format!(
                    "{}\nparameters: {}\n",
                    fam.polynomial,
                    if fam.parameters.is_empty() {
                        "none".to_string()
                    } else {
                        fam.parameters.join(" ")
                    }
                ),
                Format::Json => pretty(&json!({
                    "polynomial": fam.polynomial.to_string(),
                    "parameters": fam.parameters,
                    "residual_points": fam.residual.points.iter().map(|p| p.to_vec()).collect::<Vec<_>>(),
                })),
            }
        }
        Command::Rigid {
            mutations,
            budget: b,
            format,
            poly,
        } => {
            let f = polynomial(&poly, None)?;
            let supplied = match mutations {
                Some(path) => Some(MutationData::parse_list(&read_source(&path)?, Some(f.dim()))?),
                None => None,
            };
            let report = certify_rigid(&f, supplied.as_deref(), &budget(b))?;
            match format {
                Format::Text => {
                    let mut out = format!("{}\n", report.certificate.tag());
                    let _ = writeln!(out, "mutations {}", report.mutations.len());
                    match &report.certificate {
                        Certificate::Rigid => {}
                        Certificate::NotRigid { witness, parameters } => {
                            let _ = writeln!(out, "parameters {parameters}");
                            let _ = writeln!(out, "witness {witness}");
                        }
                        Certificate::Inconclusive { parameters } => {
                            let _ = writeln!(out, "parameters {parameters}");
                        }
                    }
                    out
                }
                Format::Json => {
                    let (parameters, witness) = match &report.certificate {
                        Certificate::Rigid => (0, None),
                        Certificate::NotRigid { witness, parameters } => (*parameters, Some(witness.to_string())),
                        Certificate::Inconclusive { parameters } => (*parameters, None),
                    };
                    pretty(&json!({
                        "verdict": report.certificate.tag(),
                        "parameters": parameters,
                        "witness": witness,
                        "mutations": report.mutations.iter().map(|m| m.label().to_string()).collect::<Vec<_>>(),
                        "family": report.space.polynomial.as_ref().map(|p| p.to_string()),
                    }))
                }
            }
        }
        Command::Ansatz { kind, polytope: p } => {
            let p = polytope(&p)?;
            match kind {
                AnsatzKind::Vertex => format!("{}\n", vertex_ansatz(&p)?),
                AnsatzKind::Binomial => format!("{}\n", binomial_ansatz(&p)?),
                AnsatzKind::Minkowski => minkowski_ansatz(&p)?.iter().map(|f| format!("{f}\n")).collect(),
            }
        }
        Command::Qperiod { weights, order } => {
            let b = WeightMatrix::parse(&weights)?;
            format!("{}\n", period_line(&quantum_period_toric(&b, order)?))
        }
        Command::Graph {
            depth,
            max_nodes,
            budget: b,
            seed,
            dot,
            format,
            poly,
        } => {
            let f = polynomial(&poly, None)?;
            let g = explore(
                &f,
                &ExploreOptions {
                    depth,
                    max_nodes,
                    budget: budget(b),
                    shuffle_seed: seed,
                    ..Default::default()
                },
            )?;
            if dot {
                g.to_dot()
            } else {
                match format {
                    Format::Text => graph_text(&g),
                    Format::Json => pretty(&graph_json(&g)),
                }
            }
        }
        Command::NormalForm { polytope: p } => {
            let key = polytope(&p)?.normal_form()?;
            format!("{}\ndigest {}\n", key.as_str(), key.digest())
        }
        Command::Equiv { first, second } => {
            let p = polytope(&first)?;
            let q = polytope(&second)?;
            match p.equivalence_to(&q)? {
                Some(u) => format!("equivalent\n{u}\n"),
                None => "inequivalent\n".to_string(),
            }
        }
        Command::Corpus { command } => match command {
            CorpusCommand::Get { key } => {
                let mut s = corpus::get(&key)?.payload.clone();
                s.push('\n');
                s
            }
            CorpusCommand::List { prefix } => corpus::list(prefix.as_deref().unwrap_or(""))
                .iter()
                .map(|k| format!("{k}\n"))
                .collect(),
            CorpusCommand::Verify { key } => {
                let keys: Vec<String> = match key {
                    Some(k) => vec![k],
                    None => corpus::list("").iter().map(|k| k.to_string()).collect(),
                };
                let mut out = String::new();
                let mut ok = true;
                for k in keys {
                    let r = corpus::verify_entry(&k)?;
                    ok &= r.passed();
                    out.push_str(&r.to_string());
                }
                if !ok {
                    print!("{out}");
                    return Err(Failure::Silent);
                }
                out
            }
        },
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {}: {}", e.reason(), e);
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: parse: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Silent) => ExitCode::from(1),
    }
}
