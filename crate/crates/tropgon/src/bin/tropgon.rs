//! Thin command-line front end over the library. Reads and writes the JSON
//! formats from `tropgon::json`; every subcommand prints human-readable
//! tables by default and machine-readable JSON with `--json`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tropgon::datum::{GluingDatum, Labelling};
use tropgon::deform::{realize, WalkOptions};
use tropgon::dot;
use tropgon::elmap;
use tropgon::enumerate::{enumerate_datums, EnumerateOptions};
use tropgon::json::*;
use tropgon::limits::limit_at;
use tropgon::props;
use tropgon::regrow::{regrow, verify_balancing};
use tropgon::util::format_q;

#[derive(Parser)]
#[command(name = "tropgon", version, about = "tropical morphisms to trees via gluing datums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the gluing-datum axioms and report per-axiom outcomes
    Validate {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the induced discrete tropical morphism of a datum
    Quotient {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the condition table (change-minimal, dangling-no-glue, ...)
    Check {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the edge-length matrix under the datum's labelling
    Matrix {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the determinant of the edge-length matrix
    Det {
        #[arg(long)]
        datum: PathBuf,
    },
    /// Contract a tree edge and print the limit datum
    Limit {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        edge: String,
    },
    /// Regrow a limit: all candidates with multiplicities, case tags and determinants
    Regrow {
        #[arg(long)]
        limit: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Realize a metric graph by a tropical morphism of degree ceil(g/2)+1
    Realize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        max_steps: usize,
    },
    /// Enumerate valid datums over a tree, one per isomorphism class
    Enumerate {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        override_guard: bool,
    },
    /// Render a datum (stacked copies) as DOT
    Render {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        dot: bool,
    },
}

fn load_datum(path: &PathBuf) -> tropgon::Result<(GluingDatum, Option<Labelling>)> {
    let text = std::fs::read_to_string(path)?;
    let j: DatumJson = serde_json::from_str(&text)?;
    j.to_datum()
}

fn labelling_or_default(
    datum: &GluingDatum,
    lab: Option<Labelling>,
) -> tropgon::Result<Labelling> {
    match lab {
        Some(l) => Ok(l),
        None => {
            let qt = datum.quotient()?;
            datum.canonical_labelling(&qt)
        }
    }
}

fn run() -> tropgon::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { datum, json } => {
            let (d, _) = load_datum(&datum)?;
            let report = d.validate()?;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "valid": report.is_valid(),
                        "malformed": report.malformed,
                        "refinement_failures": report.refinement_failures,
                        "connected": report.connected,
                        "rh_failures": report.rh_failures,
                    })
                );
            } else {
                println!("malformed:    {:?}", report.malformed);
                println!("refinement:   {:?}", report.refinement_failures);
                println!("connected:    {}", report.connected);
                println!("rh condition: {:?}", report.rh_failures);
                println!("valid:        {}", report.is_valid());
            }
            Ok(report.is_valid())
        }
        Command::Quotient { datum, json } => {
            let (d, _) = load_datum(&datum)?;
            let phi = d.to_dtm()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&DtmJson::from_dtm(&phi))?);
            } else {
                println!(
                    "source: {} vertices, {} edges, genus {}",
                    phi.source.n_vertices(),
                    phi.source.n_edges(),
                    phi.source.genus()?
                );
                println!("degree: {}", phi.degree()?);
            }
            Ok(true)
        }
        Command::Check { datum, json } => {
            let (d, _) = load_datum(&datum)?;
            let qt = d.quotient()?;
            let cm = props::change_minimal(&d, &qt)?;
            let dng = props::dangling_no_glue(&qt)?;
            let nr = props::no_return(&d, &qt)?;
            let po = props::pass_once(&d, &qt)?;
            let pfd = props::possibly_full_dimensional(&d)?;
            let fd = elmap::is_full_dimensional(&d)?;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "change_minimal": cm.ok(),
                        "dangling_no_glue": dng.ok(),
                        "no_return": nr.ok(),
                        "pass_once": po.ok(),
                        "possibly_full_dimensional": pfd,
                        "full_dimensional": fd,
                        "witnesses": {
                            "change_minimal": cm.witnesses,
                            "dangling_no_glue": dng.witnesses,
                            "no_return": nr.witnesses,
                            "pass_once": po.witnesses,
                        }
                    })
                );
            } else {
                println!("change-minimal:            {}", cm.ok());
                println!("dangling-no-glue:          {}", dng.ok());
                println!("no-return:                 {}", nr.ok());
                println!("pass-once:                 {}", po.ok());
                println!("possibly-full-dimensional: {pfd}");
                println!("full-dimensional:          {fd}");
            }
            Ok(true)
        }
        Command::Matrix { datum, json } => {
            let (d, lab) = load_datum(&datum)?;
            let lab = labelling_or_default(&d, lab)?;
            let m = elmap::edge_length_matrix(&d, &lab)?;
            let mj = MatrixJson::from_matrix(&m);
            if json {
                println!("{}", serde_json::to_string_pretty(&mj)?);
            } else {
                println!("rows: {:?}", mj.rows);
                println!("cols: {:?}", mj.cols);
                for row in &mj.entries {
                    println!("  [{}]", row.join(", "));
                }
            }
            Ok(true)
        }
        Command::Det { datum } => {
            let (d, lab) = load_datum(&datum)?;
            let lab = labelling_or_default(&d, lab)?;
            let m = elmap::edge_length_matrix(&d, &lab)?;
            println!("{}", format_q(&m.determinant()?));
            Ok(true)
        }
        Command::Limit { datum, edge } => {
            let (d, lab) = load_datum(&datum)?;
            let lab = labelling_or_default(&d, lab)?;
            let l = limit_at(&d, &lab, &edge)?;
            println!("{}", serde_json::to_string_pretty(&LimitJson::from_limit(&l)?)?);
            Ok(true)
        }
        Command::Regrow { limit, json } => {
            let text = std::fs::read_to_string(&limit)?;
            let lj: LimitJson = serde_json::from_str(&text)?;
            let l = lj.to_limit()?;
            let cands = regrow(&l)?;
            let sum = verify_balancing(&l, &cands)?;
            if json {
                let arr: Vec<CandidateJson> = cands
                    .iter()
                    .map(CandidateJson::from_candidate)
                    .collect::<tropgon::Result<_>>()?;
                println!("{}", serde_json::to_string_pretty(&arr)?);
            } else {
                for c in &cands {
                    println!(
                        "K = {:>3}  det = {:>8}  case {}",
                        c.multiplicity,
                        format_q(&c.det),
                        c.case_tag
                    );
                }
                println!("balancing sum: {}", format_q(&sum));
            }
            Ok(true)
        }
        Command::Realize { input, out, trace, seed, max_steps } => {
            let text = std::fs::read_to_string(&input)?;
            let mj: MetricGraphJson = serde_json::from_str(&text)?;
            let m = mj.to_metric()?;
            let opts = WalkOptions { seed, max_steps, ..Default::default() };
            let outcome = realize(&m, &opts)?;
            let ok =
                tropgon::deform::verify_realization(&outcome.realization, &outcome.target)?;
            let rj = RealizationJson::from_realization(&outcome.realization);
            match out {
                Some(path) => std::fs::write(path, serde_json::to_string_pretty(&rj)?)?,
                None => println!("{}", serde_json::to_string_pretty(&rj)?),
            }
            if let Some(path) = trace {
                let tj = TraceJson::from_trace(&outcome.trace)?;
                std::fs::write(path, serde_json::to_string_pretty(&tj)?)?;
            }
            eprintln!(
                "degree {} morphism over a {}-edge tree; verification {}",
                outcome.realization.model.degree()?,
                outcome.realization.model.target.n_edges(),
                if ok { "passed" } else { "FAILED" }
            );
            Ok(ok)
        }
        Command::Enumerate { tree, degree, override_guard } => {
            let text = std::fs::read_to_string(&tree)?;
            let gj: GraphJson = serde_json::from_str(&text)?;
            let t = gj.to_graph()?;
            let opts = EnumerateOptions { override_guard, ..Default::default() };
            let out = enumerate_datums(&t, degree, &opts, |_, _| true)?;
            let arr: Vec<DatumJson> = out
                .iter()
                .map(|d| DatumJson::from_datum(d, None))
                .collect::<tropgon::Result<_>>()?;
            println!("{}", serde_json::to_string_pretty(&arr)?);
            eprintln!("{} isomorphism classes", arr.len());
            Ok(true)
        }
        Command::Render { datum, dot: _ } => {
            let (d, _) = load_datum(&datum)?;
            print!("{}", dot::datum_to_dot(&d, "datum")?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
