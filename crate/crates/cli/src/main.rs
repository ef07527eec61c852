use std::fmt::Display;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use diagalg::basisgen::{pairing_from, x_family, y_family, EvaluatedX};
use diagalg::evalfun::evaluate;
use diagalg::exactnum::FieldSpec;
use diagalg::skein::{NormalizeOptions, SkeinError, SkeinRules};
use diagalg::suites::{run_suite, value_table, SUITES};
use diagalg::tangle::{from_circuit, DiagramFile, Gate};
use diagalg::unirep::{fusion_decompose, hom_basis, BasisVectorIndex, Matrix};
use diagalg::wordlang::{enumerate, mountain_to_plateau, plateau_to_mountain, Automaton, Word};

#[derive(Parser)]
#[command(name = "diagalg", about = "Diagram bases, evaluation and skein normalization for the 2-dimensional unipotent representation")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for random corpora.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Print the gate signature table and exit.
    #[arg(long)]
    gate_help: bool,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum AutomatonArg {
    M0,
    N0,
    Mp,
    Np,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    M2n,
    N2m,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    X,
    Y,
}

#[derive(Subcommand)]
enum Cmd {
    /// List accepted words in canonical order.
    Enumerate {
        #[arg(long, value_enum)]
        automaton: AutomatonArg,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        length: usize,
    },
    /// Map a word across the mountain/plateau bijection.
    Bijection {
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        word: String,
    },
    /// Dimension and basis of Hom(V_n, V_m).
    Homdim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "0")]
        field: String,
    },
    /// Jordan type of V tensor V_i.
    Fusion {
        #[arg(long)]
        i: usize,
        #[arg(long, default_value = "0")]
        field: String,
    },
    /// Evaluate a diagram file to its row vector.
    Eval {
        #[arg(long)]
        input: String,
    },
    /// Rewrite a diagram file into the jellyfish basis.
    Normalize {
        #[arg(long)]
        input: String,
        #[arg(long)]
        trace: bool,
    },
    /// Dump a basis family, optionally with its pairing certificate.
    Basis {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "0")]
        field: String,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        with_certificate: bool,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value = "0")]
        field: String,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 6)]
        max_n: usize,
    },
    /// Print the small value tables.
    Tables {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "0")]
        field: String,
    },
}

enum Failure {
    Malformed(String),
    Verification(String),
}

fn malformed(e: impl Display) -> Failure {
    Failure::Malformed(e.to_string())
}

fn parse_field(s: &str) -> Result<FieldSpec, Failure> {
    s.parse::<FieldSpec>().map_err(malformed)
}

/// p defaults to the characteristic; an explicit p must agree with it.
fn resolve_p(field: &FieldSpec, p: Option<usize>) -> Result<Option<usize>, Failure> {
    let c = field.characteristic() as usize;
    match (p, c) {
        (None, 0) => Ok(None),
        (None, c) => Ok(Some(c)),
        (Some(p), c) if p == c => Ok(Some(p)),
        (Some(p), c) => Err(Failure::Malformed(format!("p = {p} does not match the field characteristic {c}"))),
    }
}

fn out(lines: &mut Vec<String>, s: impl Into<String>) {
    lines.push(s.into());
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<String>> {
    (0..m.rows).map(|r| m.row(r).iter().map(|e| m.field.format_elem(e)).collect()).collect()
}

fn read_file(path: &str) -> Result<(DiagramFile, FieldSpec), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Malformed(format!("{path}: {e}")))?;
    let file = DiagramFile::parse(&text).map_err(malformed)?;
    let field = file.field_spec().map_err(malformed)?;
    Ok((file, field))
}

fn run(cli: Cli) -> Result<Vec<String>, Failure> {
    let machine = cli.format == Format::Machine;
    let mut lines = vec![];
    if cli.gate_help {
        out(&mut lines, Gate::help_table());
        return Ok(lines);
    }
    let Some(cmd) = cli.cmd else {
        return Err(Failure::Malformed("no command given (try --help)".into()));
    };
    match cmd {
        Cmd::Enumerate { automaton, p, length } => {
            let a = match (automaton, p) {
                (AutomatonArg::M0, _) => Automaton::M0,
                (AutomatonArg::N0, _) => Automaton::N0,
                (AutomatonArg::Mp, Some(p)) if p >= 2 => Automaton::Mp(p),
                (AutomatonArg::Np, Some(p)) if p >= 2 => Automaton::Np(p),
                _ => return Err(Failure::Malformed("mp and np need --p at least 2".into())),
            };
            let words: Vec<String> = enumerate(a, length).iter().map(|w| w.to_string()).collect();
            if machine {
                out(&mut lines, json!({"automaton": a.to_string(), "length": length, "count": words.len(), "words": words}).to_string());
            } else {
                lines.extend(words);
            }
        }
        Cmd::Bijection { direction, p, word } => {
            let a = match (direction, p) {
                (Direction::M2n, None) => Automaton::M0,
                (Direction::N2m, None) => Automaton::N0,
                (Direction::M2n, Some(p)) => Automaton::Mp(p),
                (Direction::N2m, Some(p)) => Automaton::Np(p),
            };
            let w = Word::accepted(a, &word).map_err(malformed)?;
            let image = match direction {
                Direction::M2n => mountain_to_plateau(&w),
                Direction::N2m => plateau_to_mountain(&w),
            }
            .map_err(malformed)?;
            if machine {
                out(&mut lines, json!({"input": word, "image": image.to_string()}).to_string());
            } else {
                out(&mut lines, image.to_string());
            }
        }
        Cmd::Homdim { n, m, field } => {
            let f = parse_field(&field)?;
            let basis = hom_basis(n, m, &f).map_err(malformed)?;
            if machine {
                let ms: Vec<_> = basis.iter().map(matrix_rows).collect();
                out(&mut lines, json!({"n": n, "m": m, "field": f.to_string(), "dim": basis.len(), "basis": ms}).to_string());
            } else {
                out(&mut lines, format!("dim Hom(V{n},V{m}) = {}", basis.len()));
                for (i, t) in basis.iter().enumerate() {
                    out(&mut lines, format!("T{i}:"));
                    for r in matrix_rows(t) {
                        out(&mut lines, format!("  {}", r.join(" ")));
                    }
                }
            }
        }
        Cmd::Fusion { i, field } => {
            let f = parse_field(&field)?;
            let parts = fusion_decompose(i, &f).map_err(malformed)?;
            if machine {
                out(&mut lines, json!({"i": i, "field": f.to_string(), "parts": parts}).to_string());
            } else {
                let s: Vec<String> = parts.iter().map(|k| format!("V{k}")).collect();
                out(&mut lines, format!("V x V{i} = {}", s.join(" + ")));
            }
        }
        Cmd::Eval { input } => {
            let (file, f) = read_file(&input)?;
            let d = from_circuit(&file.circuit().map_err(malformed)?).map_err(malformed)?;
            let v = evaluate(&d, &f).map_err(malformed)?;
            let rows = matrix_rows(&v);
            if machine {
                out(&mut lines, json!({"field": f.to_string(), "rows": v.rows, "cols": v.cols, "values": rows}).to_string());
            } else {
                for r in rows {
                    out(&mut lines, r.join(" "));
                }
            }
        }
        Cmd::Normalize { input, trace } => {
            let (file, f) = read_file(&input)?;
            let p = resolve_p(&f, file.p)?;
            let d = from_circuit(&file.circuit().map_err(malformed)?).map_err(malformed)?;
            let rules = SkeinRules::new(&f, p).map_err(malformed)?;
            let opts = NormalizeOptions { trace, ..Default::default() };
            let res = rules.normalize(&d, &opts).map_err(|e| match e {
                SkeinError::OracleMismatch | SkeinError::RuleVerificationFailed(_) => Failure::Verification(e.to_string()),
                SkeinError::StepLimitExceeded(_) => Failure::Verification(e.to_string()),
                e => malformed(e),
            })?;
            if machine {
                let terms: Vec<_> = res.terms.iter().map(|(w, c)| json!({"word": w.to_string(), "coefficient": f.format_elem(c)})).collect();
                let mut obj = json!({"n": res.n, "field": f.to_string(), "steps": res.steps, "terms": terms});
                if trace {
                    obj["trace"] = json!(res.trace);
                }
                out(&mut lines, obj.to_string());
            } else {
                if trace {
                    lines.extend(res.trace.iter().cloned());
                    out(&mut lines, format!("# {} steps, {} non-decreasing", res.steps, res.non_decreasing));
                }
                for (w, c) in &res.terms {
                    let word = if w.is_empty() { "(empty)".to_string() } else { w.to_string() };
                    out(&mut lines, format!("{}\t{word}", f.format_elem(c)));
                }
            }
        }
        Cmd::Basis { family, n, field, p, with_certificate } => {
            let f = parse_field(&field)?;
            let p = resolve_p(&f, p)?;
            let fam = match family {
                Family::X => x_family(n, p),
                Family::Y => y_family(n, p),
            }
            .map_err(malformed)?;
            let mut entries = vec![];
            for (w, d) in &fam.elements {
                let v = evaluate(d, &f).map_err(malformed)?;
                entries.push((w.to_string(), matrix_rows(&v).remove(0)));
            }
            let mut verdict = None;
            let mut cert_lines = vec![];
            let mut cert_json = serde_json::Value::Null;
            if with_certificate {
                let ev = EvaluatedX::new(n, &f, p).map_err(malformed)?;
                let cert = pairing_from(&ev).map_err(|e| Failure::Verification(e.to_string()))?;
                let bad = cert.diagonal_mismatches();
                let vecs: Vec<String> = ev.pairing.iter().map(|&i| BasisVectorIndex::from_index(n, i).to_string()).collect();
                cert_lines.push(format!("pairing matrix (rows: pairing vectors, columns: light leaves), expected diagonal {}", f.format_elem(&cert.expected_diagonal)));
                for (r, row) in matrix_rows(&cert.matrix).into_iter().enumerate() {
                    cert_lines.push(format!("{:>width$} {:>width2$} | {}", cert.words[r].to_string(), vecs[r], row.join(" "), width = n.max(1), width2 = n.max(1)));
                }
                cert_lines.push(format!("upper triangular: {}", cert.is_upper_triangular()));
                cert_lines.push(format!("diagonal mismatches: {}", bad.len()));
                for (w, e) in &bad {
                    cert_lines.push(format!("  {w}: {}", f.format_elem(e)));
                }
                cert_json = json!({
                    "words": cert.words.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                    "pairing_vectors": vecs,
                    "matrix": matrix_rows(&cert.matrix),
                    "expected_diagonal": f.format_elem(&cert.expected_diagonal),
                    "upper_triangular": cert.is_upper_triangular(),
                    "diagonal_mismatches": bad.iter().map(|(w, e)| json!([w.to_string(), f.format_elem(e)])).collect::<Vec<_>>(),
                });
                if !bad.is_empty() {
                    verdict = Some(format!("{} diagonal entries differ from {}", bad.len(), f.format_elem(&cert.expected_diagonal)));
                }
            }
            if machine {
                let elems: Vec<_> = entries.iter().map(|(w, v)| json!({"word": w, "values": v})).collect();
                out(&mut lines, json!({"family": format!("{:?}", fam.family), "n": n, "field": f.to_string(), "elements": elems, "certificate": cert_json}).to_string());
            } else {
                for (w, v) in &entries {
                    let w = if w.is_empty() { "(empty)" } else { w };
                    out(&mut lines, format!("{w}\t{}", v.join(" ")));
                }
                lines.extend(cert_lines);
            }
            if let Some(v) = verdict {
                print_lines(&lines);
                return Err(Failure::Verification(v));
            }
        }
        Cmd::Verify { suite, field, p, max_n } => {
            let f = parse_field(&field)?;
            let p = resolve_p(&f, p)?;
            let rep = run_suite(&suite, &f, p, max_n, cli.seed).ok_or_else(|| Failure::Malformed(format!("unknown suite `{suite}`; one of {}", SUITES.join(", "))))?;
            if machine {
                let items: Vec<_> = rep.items.iter().map(|i| json!({"name": i.name, "pass": i.pass, "detail": i.detail})).collect();
                out(&mut lines, json!({"suite": suite, "field": f.to_string(), "pass": rep.all_pass(), "items": items}).to_string());
            } else {
                for i in &rep.items {
                    let tag = if i.pass { "PASS" } else { "FAIL" };
                    let detail = if i.detail.is_empty() || i.pass { String::new() } else { format!("  ({})", i.detail) };
                    out(&mut lines, format!("{tag} {}{detail}", i.name));
                }
                let failed = rep.items.iter().filter(|i| !i.pass).count();
                out(&mut lines, format!("{} checks, {failed} failed", rep.items.len()));
            }
            if !rep.all_pass() {
                print_lines(&lines);
                return Err(Failure::Verification(format!("suite `{suite}` has failing checks")));
            }
        }
        Cmd::Tables { n, field } => {
            let f = parse_field(&field)?;
            let t = value_table(n, &f).ok_or_else(|| Failure::Malformed(format!("tables exist for n = 2 and 3, not {n}")))?;
            let rows: Vec<(String, Vec<String>)> = t.rows.iter().map(|(r, v)| (r.clone(), v.iter().map(|e| f.format_elem(e)).collect())).collect();
            if machine {
                out(&mut lines, json!({"n": n, "columns": t.columns, "rows": rows}).to_string());
            } else {
                let w = t.columns.iter().map(|c| c.len()).max().unwrap_or(1).max(2);
                let head: Vec<String> = t.columns.iter().map(|c| format!("{c:>w$}")).collect();
                out(&mut lines, format!("{:n$} {}", "", head.join(" ")));
                for (r, v) in rows {
                    let cells: Vec<String> = v.iter().map(|c| format!("{c:>w$}")).collect();
                    out(&mut lines, format!("{r} {}", cells.join(" ")));
                }
            }
        }
    }
    Ok(lines)
}

fn print_lines(lines: &[String]) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    for l in lines {
        if writeln!(stdout, "{l}").is_err() {
            return;
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(lines) => {
            print_lines(&lines);
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Malformed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
