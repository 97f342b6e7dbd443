//! Subcommand implementations shared by the `geq` and `lenfun` binaries.
//! Each command returns the text for stdout; files named by options are
//! written as a side effect.

pub mod svg;

use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use lambda_geq::diagram::{build, PresentationInput};
use lambda_geq::elimination::{run, Config, RunError};
use lambda_geq::lenfun::{check_axioms, parse_words_file, Axiom, AxiomStatus, GroupSample, LengthTable};
use lambda_geq::{sample, transform, Error, GenEq, Solution};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

pub use svg::RenderOptions;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Settings common to a single invocation.
#[derive(Clone, Debug)]
pub struct SessionConfig {
    /// Rank used where the input does not fix one.
    pub rank: Option<usize>,
    pub format: Format,
    pub seed: u64,
    pub max_steps: usize,
    pub f1: Option<usize>,
    pub trace: bool,
    pub render: RenderOptions,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            rank: None,
            format: Format::Text,
            seed: 0,
            max_steps: Config::default().max_steps,
            f1: None,
            trace: false,
            render: RenderOptions::default(),
        }
    }
}

/// A domain failure: exit code 1, a message for stderr, and whatever
/// partial output belongs on stdout.
#[derive(Debug)]
pub struct Failure {
    pub message: String,
    pub stdout: String,
}

impl Failure {
    fn new(message: impl Into<String>) -> Self {
        Failure { message: message.into(), stdout: String::new() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(e.to_string())
    }
}

pub type Outcome = Result<String, Failure>;

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("value serializes")
}

fn solution_json(u: &Solution) -> Value {
    Value::Object(u.items.iter().enumerate().map(|(i, w)| (format!("h{}", i + 1), Value::String(w.to_string()))).collect())
}

pub fn load_geq(path: &Path) -> Result<GenEq, Failure> {
    let g = GenEq::parse_any(&read(path)?)?;
    g.validate()?;
    Ok(g)
}

pub fn load_solution(path: &Path, rank: usize) -> Result<Solution, Failure> {
    Ok(Solution::parse(&read(path)?, rank)?)
}

fn load_optional_solution(path: Option<&PathBuf>, g: &GenEq) -> Result<Option<Solution>, Failure> {
    path.map(|p| load_solution(p, g.rank)).transpose()
}

pub fn cmd_build(cfg: &SessionConfig, input: &Path, out: Option<&Path>, solution_out: Option<&Path>) -> Outcome {
    let p = PresentationInput::parse(&read(input)?, cfg.rank)?;
    let (_, _, asm) = build(&p)?;
    let g = asm.omega;
    if let Some(path) = out {
        write(path, &g.to_text())?;
    }
    if let Some(path) = solution_out {
        write(path, &asm.solution.to_string())?;
    }
    let words: Vec<String> = asm.generator_words.iter().map(|w| lambda_geq::geq::format_item_word(w)).collect();
    Ok(match cfg.format {
        Format::Json => pretty(&json!({
            "omega": serde_json::from_str::<Value>(&g.to_json()).expect("GenEq json"),
            "solution": solution_json(&asm.solution),
            "generator_words": p.generators.iter().zip(&words).map(|(x, w)| json!({"generator": x, "word": w})).collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut s = String::new();
            if out.is_none() {
                s += &g.to_text();
            } else {
                let _ = writeln!(s, "{} items, {} bases, {} sections", g.rho, g.bases.len(), g.sections.len());
            }
            for (x, w) in p.generators.iter().zip(&words) {
                let _ = writeln!(s, "# {x} = {w}");
            }
            s
        }
    })
}

pub fn cmd_validate(cfg: &SessionConfig, file: &Path) -> Outcome {
    let g = GenEq::parse_any(&read(file)?)?;
    g.validate()?;
    Ok(match cfg.format {
        Format::Json => pretty(&json!({"valid": true, "rank": g.rank, "items": g.rho, "bases": g.bases.len(), "sections": g.sections.len()})),
        Format::Text => format!("valid: rank {}, {} items, {} bases, {} sections\n", g.rank, g.rho, g.bases.len(), g.sections.len()),
    })
}

pub fn cmd_derive(cfg: &SessionConfig, file: &Path) -> Outcome {
    let g = load_geq(file)?;
    let eqs = g.derive();
    Ok(match cfg.format {
        Format::Json => pretty(&to_value(&eqs)),
        Format::Text => eqs.iter().map(|e| format!("{e}\n")).collect(),
    })
}

pub fn cmd_present(cfg: &SessionConfig, file: &Path) -> Outcome {
    let g = load_geq(file)?;
    let p = g.presentation();
    let (free, torsion) = p.abelianization();
    Ok(match cfg.format {
        Format::Json => pretty(&json!({
            "generators": p.generators,
            "relators": p.relators.iter().map(|r| lambda_geq::geq::format_item_word(r)).collect::<Vec<_>>(),
            "abelianization": {"free_rank": free, "torsion": torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>()},
        })),
        Format::Text => {
            let mut parts: Vec<String> = Vec::new();
            if free > 0 {
                parts.push(if free == 1 { "Z".into() } else { format!("Z^{free}") });
            }
            parts.extend(torsion.iter().map(|t| format!("Z/{t}")));
            let ab = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
            format!("{p}\nabelianization: {ab}\n")
        }
    })
}

pub fn cmd_verify(cfg: &SessionConfig, file: &Path, solution: &Path) -> Outcome {
    let g = load_geq(file)?;
    let u = load_solution(solution, g.rank)?;
    let res = g.verify_solution(&u);
    let text = match (&res, cfg.format) {
        (Ok(()), Format::Text) => "solution verified\n".to_string(),
        (Err(e), Format::Text) => format!("solution rejected: {e}\n"),
        (r, Format::Json) => pretty(&json!({"verified": r.is_ok(), "error": r.as_ref().err().map(|e| e.to_string())})),
    };
    match res {
        Ok(()) => Ok(text),
        Err(e) => Err(Failure { message: e.to_string(), stdout: text }),
    }
}

pub fn cmd_tau(cfg: &SessionConfig, file: &Path) -> Outcome {
    let g = load_geq(file)?;
    let c = g.complexity();
    let sections: Vec<(usize, usize, bool, usize)> = g
        .sections
        .iter()
        .map(|s| (s.start, s.end, s.active, g.bases.iter().filter(|b| s.start <= b.left() && b.right() <= s.end).count()))
        .collect();
    Ok(match cfg.format {
        Format::Json => pretty(&json!({
            "tau": c.tau,
            "rho_active": c.rho_active,
            "n_active": c.n_active,
            "sections": sections.iter().map(|&(a, b, act, n)| json!({
                "start": a, "end": b, "active": act, "bases": n,
                "contribution": if act { n.saturating_sub(2) } else { 0 },
            })).collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut s = format!("tau {}\n", c.tau);
            for (a, b, act, n) in sections {
                let contrib = if act { n.saturating_sub(2) } else { 0 };
                let flag = if act { "active" } else { "nonactive" };
                let _ = writeln!(s, "section [{a},{b}] {flag}: {n} bases, contributes {contrib}");
            }
            s
        }
    })
}

pub fn cmd_xform(
    cfg: &SessionConfig,
    name: &str,
    params: &[String],
    file: &Path,
    solution: Option<&PathBuf>,
    out: Option<&Path>,
    solution_out: Option<&Path>,
) -> Outcome {
    let g = load_geq(file)?;
    let u = load_optional_solution(solution, &g)?;
    let r = transform::apply_named(&g, &name.to_ascii_lowercase(), params, u.as_ref())?;
    r.target.validate()?;
    if let Some(path) = out {
        write(path, &r.target.to_text())?;
    }
    if let (Some(path), Some(v)) = (solution_out, &r.solution) {
        write(path, &v.to_string())?;
    }
    Ok(match cfg.format {
        Format::Json => pretty(&json!({
            "note": r.note,
            "tau_before": g.tau(),
            "tau_after": r.target.tau(),
            "morphism_kind": to_value(&r.morphism.kind),
            "morphism": if cfg.trace { r.morphism.trace_lines() } else { Vec::new() },
            "target": serde_json::from_str::<Value>(&r.target.to_json()).expect("GenEq json"),
            "solution": r.solution.as_ref().map(solution_json),
        })),
        Format::Text => {
            let mut s = format!("# {}\n# tau {} -> {}\n", r.note, g.tau(), r.target.tau());
            if cfg.trace {
                for line in r.morphism.trace_lines() {
                    let _ = writeln!(s, "# {line}");
                }
            }
            if out.is_none() {
                s += &r.target.to_text();
            }
            s
        }
    })
}

pub fn cmd_eliminate(cfg: &SessionConfig, file: &Path, solution: Option<&PathBuf>, report: Option<&Path>) -> Outcome {
    let g = load_geq(file)?;
    let u = load_optional_solution(solution, &g)?;
    let config = Config { max_steps: cfg.max_steps, f1: cfg.f1, trace: cfg.trace, ..Config::default() };
    let render = |r: &lambda_geq::elimination::DecompositionReport| match cfg.format {
        Format::Json => format!("{}\n", r.to_json()),
        Format::Text => {
            let mut s = r.to_string();
            if cfg.trace {
                for t in &r.trace {
                    let _ = writeln!(s, "trace {} {}: {} (tau {} -> {})", t.step, t.case, t.note, t.tau_before, t.tau_after);
                    for m in &t.morphism {
                        let _ = writeln!(s, "  {m}");
                    }
                }
            }
            s
        }
    };
    match run(&g, u.as_ref(), &config) {
        Ok(r) => {
            if let Some(path) = report {
                write(path, &r.to_json())?;
            }
            Ok(render(&r))
        }
        Err(RunError::BudgetExhausted(r)) => {
            if let Some(path) = report {
                write(path, &r.to_json())?;
            }
            Err(Failure { message: format!("budget exhausted after {} steps", r.steps), stdout: render(&r) })
        }
        Err(RunError::Failed(e)) => Err(e.into()),
    }
}

pub fn cmd_render(cfg: &SessionConfig, file: &Path, out: Option<&Path>) -> Outcome {
    let g = load_geq(file)?;
    let svg = svg::render(&g, &cfg.render);
    match out {
        Some(path) => {
            write(path, &svg)?;
            Ok(match cfg.format {
                Format::Json => pretty(&json!({"written": path.display().to_string(), "bytes": svg.len()})),
                Format::Text => String::new(),
            })
        }
        None => Ok(svg),
    }
}

/// A seeded random instance with a planted solution.
pub fn cmd_sample(cfg: &SessionConfig, items: usize, bases: usize, out: Option<&Path>, solution_out: Option<&Path>) -> Outcome {
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let (g, u) = (0..1000)
        .find_map(|_| sample::planted_instance(&mut rng, items, bases))
        .ok_or_else(|| Failure::new("no instance found within 1000 draws"))?;
    if let Some(path) = out {
        write(path, &g.to_text())?;
    }
    if let Some(path) = solution_out {
        write(path, &u.to_string())?;
    }
    Ok(match cfg.format {
        Format::Json => pretty(&json!({
            "omega": serde_json::from_str::<Value>(&g.to_json()).expect("GenEq json"),
            "solution": solution_json(&u),
        })),
        Format::Text if out.is_none() => format!("{}# solution\n{}", g.to_text(), u.to_string().lines().map(|l| format!("# {l}\n")).collect::<String>()),
        Format::Text => String::new(),
    })
}

pub fn cmd_lenfun_check(cfg: &SessionConfig, axioms: &str, depth: usize, file: &Path) -> Outcome {
    let rank = cfg.rank.unwrap_or(1);
    let axioms = Axiom::parse_set(axioms)?;
    let words = parse_words_file(&read(file)?, rank)?;
    let sample = GroupSample::new(rank, words, depth)?;
    let report = check_axioms(&sample, &axioms, &LengthTable::word_length())?;
    let text = match cfg.format {
        Format::Json => pretty(&json!({"elements": sample.elements().len(), "report": to_value(&report)})),
        Format::Text => format!("{} elements at closure depth {depth}\n{report}", sample.elements().len()),
    };
    let failed = report.results.iter().any(|r| matches!(r.status, AxiomStatus::Fail { .. })) || !report.undefined_products.is_empty();
    if failed {
        Err(Failure { message: "axiom violations found".into(), stdout: text })
    } else {
        Ok(text)
    }
}

pub fn cmd_lenfun_gromov(cfg: &SessionConfig, g: &str, f: &str) -> Outcome {
    let rank = cfg.rank.unwrap_or(1);
    let g = lambda_geq::LambdaWord::parse(g, rank)?;
    let f = lambda_geq::LambdaWord::parse(f, rank)?;
    let c = lambda_geq::lenfun::gromov(&g, &f)?;
    Ok(match cfg.format {
        Format::Json => pretty(&json!({"g": g.to_string(), "f": f.to_string(), "c": c.to_string()})),
        Format::Text => format!("{c}\n"),
    })
}
