use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use overture::datalog::{facts, lhm_eval, to_datalog, to_text, unmangle, DatalogProgram};
use overture::dist::{Functionality, Preprocessing};
use overture::field::Modulus;
use overture::lang::{
    parse_protocol, run, validate_with_preprocessing, ClientId, EvalError, Federation, Memory,
    Partition, Protocol, Value, Var,
};
use overture::prelude::expand;
use overture::stdlib::{package, packages, PreprocKind};
use overture::verifier::{verify, Model, Options, Property, Reading, Verdict};

/// Define, run and verify two-party and multi-party MPC protocols.
#[derive(Parser)]
#[command(name = "overture", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Expand a Prelude program into the Overture protocol it emits.
    Expand {
        #[command(flatten)]
        src: Source,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a protocol on one initial memory.
    Run {
        #[command(flatten)]
        src: Source,
        /// Assignments such as "s[x]@1=1 r[y]@1=0".
        #[arg(long, default_value = "")]
        input: String,
        #[arg(long, default_value_t = 2)]
        field: u64,
    },
    /// Print the distribution over runs, optionally projected and
    /// conditioned.
    Pmf {
        #[command(flatten)]
        src: Source,
        /// Variables to keep, e.g. "m[z]@2 <m[w]>".
        #[arg(long)]
        marginal: Option<String>,
        /// Assignments to condition on.
        #[arg(long)]
        given: Option<String>,
        #[arg(long)]
        preproc: Option<String>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Decide a security property.
    Verify(VerifyArgs),
    /// Write the Datalog program whose least model reproduces each run.
    ExportDatalog {
        #[command(flatten)]
        src: Source,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a Datalog program on a fact base.
    Lhm {
        file: PathBuf,
        /// Assignments ("s[x]@1=1") or true atoms ("s_x_c1").
        #[arg(long, default_value = "")]
        facts: String,
    },
    /// List the bundled protocols and their expected verdicts.
    List,
}

#[derive(Args)]
struct Source {
    /// An Overture (.ovt) or Prelude (.pre) file.
    #[arg(required_unless_present = "package")]
    file: Option<PathBuf>,
    /// Prelude libraries loaded before the file.
    #[arg(long)]
    lib: Vec<PathBuf>,
    /// A bundled protocol instead of a file.
    #[arg(long, conflicts_with = "file")]
    package: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadingArg {
    SecretsOnly,
    WithPreprocessing,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long)]
    property: Property,
    /// Corrupt clients, e.g. "2" or "1,3".
    #[arg(long, conflicts_with = "all_partitions")]
    corrupt: Option<String>,
    /// Check every split into nonempty honest and corrupt sets.
    #[arg(long)]
    all_partitions: bool,
    /// 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 2)]
    field: u64,
    /// Decision points up to which view-dependent adversaries are added.
    #[arg(long, default_value_t = 0)]
    budget: usize,
    #[arg(long, value_enum, default_value = "secrets-only")]
    reading: ReadingArg,
    /// default, uniform-inputs, bdoz or bdoz-trimmed.
    #[arg(long)]
    preproc: Option<String>,
    /// Functionality table; defaults to a sibling .fn file.
    #[arg(long)]
    func: Option<PathBuf>,
    /// AND gate wires "x,y,z" for and-tactic.
    #[arg(long)]
    gate: Option<String>,
    /// Output wire for gmw-invariant.
    #[arg(long)]
    wire: Option<String>,
}

struct Loaded {
    pi: Protocol,
    federation: Federation,
    preproc: PreprocKind,
    functionality: Option<Functionality>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

impl Source {
    fn text(&self) -> Result<String> {
        let file = self.file.as_ref().expect("clap requires a file");
        let mut text = String::new();
        for lib in &self.lib {
            text += &read(lib)?;
            text.push('\n');
        }
        text += &read(file)?;
        Ok(text)
    }

    fn protocol(&self) -> Result<Protocol> {
        if let Some(name) = &self.package {
            return Ok(package(name)?.protocol()?);
        }
        let file = self.file.as_ref().expect("clap requires a file");
        let text = self.text()?;
        if file.extension().is_some_and(|e| e == "pre") {
            Ok(expand(&text)?)
        } else {
            Ok(parse_protocol(&text)?)
        }
    }

    fn load(&self) -> Result<Loaded> {
        if let Some(name) = &self.package {
            let pkg = package(name)?;
            return Ok(Loaded {
                pi: pkg.protocol()?,
                federation: pkg.federation.clone(),
                preproc: pkg.preproc,
                functionality: pkg.functionality.clone(),
            });
        }
        let pi = self.protocol()?;
        let sibling = self.file.as_ref().unwrap().with_extension("fn");
        let functionality = if sibling.exists() {
            Some(Functionality::parse(&read(&sibling)?)?)
        } else {
            None
        };
        Ok(Loaded {
            federation: pi.clients(),
            pi,
            preproc: PreprocKind::Default,
            functionality,
        })
    }
}

fn preprocessing(l: &Loaded, selector: Option<&str>) -> Result<Preprocessing> {
    let kind = match selector {
        Some(s) => PreprocKind::parse(s).ok_or_else(|| anyhow!("unknown preprocessing `{s}`"))?,
        None => l.preproc,
    };
    let pre = kind.build(&l.pi);
    let initial = pre.vars().iter().cloned().collect();
    let violations = validate_with_preprocessing(&l.pi, &l.federation, &initial);
    if let Some(v) = violations.first() {
        bail!("protocol is not well formed: {v}");
    }
    Ok(pre)
}

fn parse_vars(text: &str) -> Result<Vec<Var>> {
    text.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Var>().map_err(|e| anyhow!("{e}")))
        .collect()
}

fn parse_clients(text: &str) -> Result<Federation> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .ok()
                .and_then(ClientId::new)
                .ok_or_else(|| anyhow!("bad client `{s}`"))
        })
        .collect()
}

fn show_set(f: &Federation) -> String {
    let ids: Vec<String> = f.iter().map(|c| c.to_string()).collect();
    format!("{{{}}}", ids.join(","))
}

fn dump(m: &Memory) -> String {
    let mut out = m.sorted_pairs().join("\n");
    out.push('\n');
    out
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_pmf(
    src: &Source,
    marginal: Option<&str>,
    given: Option<&str>,
    preproc: Option<&str>,
    workers: usize,
) -> Result<()> {
    let l = src.load()?;
    let pre = preprocessing(&l, preproc)?;
    let model = Model::new(&l.pi, &pre, workers)?;
    let cols = match marginal {
        Some(m) => parse_vars(m)?,
        None => model.vars().to_vec(),
    };
    let Some(given) = given else {
        print!("{}", model.pmf(&cols)?.dump());
        return Ok(());
    };
    let cond = Memory::parse_assignments(given, Modulus::F2)?;
    let mut all = cols.clone();
    all.extend(cond.dom().into_iter().filter(|x| !cols.contains(x)));
    let joint = model.pmf(&all)?;
    let mut lines = Vec::new();
    for (m, _) in joint.marginal(&cols)?.support() {
        let p = joint.prob_given(&m, &cond)?;
        if *p.numer() != 0 {
            let mut parts = m.sorted_pairs();
            parts.push(format!("weight={}/{}", p.numer(), p.denom()));
            lines.push(parts.join(" "));
        }
    }
    if lines.is_empty() {
        bail!("the conditioning event has probability 0");
    }
    lines.sort();
    println!("{}", lines.join("\n"));
    Ok(())
}

fn report(label: Option<String>, v: &Verdict) {
    match label {
        Some(l) => {
            let text = v.to_string();
            let mut lines = text.lines();
            println!("{l}: {}", lines.next().unwrap_or(""));
            for line in lines {
                println!("  {line}");
            }
        }
        None => print!("{v}"),
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    if a.field != 2 {
        bail!(
            "verification is exhaustive over F2 only; got --field {}",
            a.field
        );
    }
    let l = a.src.load()?;
    let pre = preprocessing(&l, a.preproc.as_deref())?;
    let functionality = match &a.func {
        Some(p) => Some(Functionality::parse(&read(p)?)?),
        None => l.functionality.clone(),
    };
    let gate = match &a.gate {
        Some(g) => match g.split(',').map(str::trim).collect::<Vec<_>>()[..] {
            [x, y, z] => Some((x.to_string(), y.to_string(), z.to_string())),
            _ => bail!("--gate takes three wire names x,y,z"),
        },
        None => None,
    };
    let opts = Options {
        functionality,
        gate,
        wire: a.wire.clone(),
        budget: a.budget,
        reading: match a.reading {
            ReadingArg::SecretsOnly => Reading::SecretsOnly,
            ReadingArg::WithPreprocessing => Reading::WithPreprocessing,
        },
    };
    let parts: Vec<Option<Partition>> = if a.all_partitions {
        Partition::all_proper(&l.federation)
            .into_iter()
            .map(Some)
            .collect()
    } else if let Some(c) = &a.corrupt {
        let corrupt = parse_clients(c)?;
        let part = Partition::new(&l.federation, &corrupt).ok_or_else(|| {
            anyhow!(
                "corrupt set {} is not a subset of the federation {}",
                show_set(&corrupt),
                show_set(&l.federation)
            )
        })?;
        vec![Some(part)]
    } else if a.property.needs_partition() {
        bail!("{} needs --corrupt or --all-partitions", a.property);
    } else {
        vec![None]
    };
    let mut all = true;
    for part in &parts {
        let v = verify(&l.pi, &pre, a.property, part.as_ref(), &opts, a.workers)?;
        let label = a
            .all_partitions
            .then(|| format!("C={}", show_set(&part.as_ref().unwrap().corrupt)));
        report(label, &v);
        all &= v.holds;
    }
    Ok(all)
}

fn cmd_lhm(file: &Path, facts_text: &str) -> Result<()> {
    let prog = DatalogProgram::parse(&read(file)?)?;
    let mut m = Memory::new();
    for tok in facts_text.split([',', ' ']).filter(|t| !t.is_empty()) {
        if tok.contains('=') {
            for (x, v) in Memory::parse_assignments(tok, Modulus::F2)?.iter() {
                m.extend(x.clone(), *v)?;
            }
        } else {
            m.extend(unmangle(tok)?, Value::bit(true))?;
        }
    }
    print!("{}", dump(&lhm_eval(&facts(&m)?, &prog)?));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Expand { src, output } => {
            let mut text = src.protocol()?.to_string();
            if !text.ends_with('\n') {
                text.push('\n');
            }
            emit(&text, &output)?;
        }
        Cmd::Run { src, input, field } => {
            let pi = src.protocol()?;
            let modulus = Modulus::new(field)?;
            let m0 = Memory::parse_assignments(&input, modulus)?;
            match run(&m0, &pi, modulus) {
                Ok(m) => print!("{}", dump(&m)),
                Err(e @ EvalError::AssertionFailed { .. }) => {
                    println!("abort: {e}");
                    return Ok(false);
                }
                Err(e) => return Err(e.into()),
            }
        }
        Cmd::Pmf {
            src,
            marginal,
            given,
            preproc,
            workers,
        } => {
            cmd_pmf(
                &src,
                marginal.as_deref(),
                given.as_deref(),
                preproc.as_deref(),
                workers,
            )?;
        }
        Cmd::Verify(a) => return cmd_verify(&a),
        Cmd::ExportDatalog { src, output } => {
            let pi = src.protocol()?;
            let name = match (&src.package, &src.file) {
                (Some(p), _) => p.clone(),
                (None, Some(f)) => f.display().to_string(),
                _ => unreachable!("clap requires a source"),
            };
            emit(&to_text(&to_datalog(&pi)?, &name), &output)?;
        }
        Cmd::Lhm { file, facts } => cmd_lhm(&file, &facts)?,
        Cmd::List => {
            for pkg in packages()? {
                println!(
                    "{} ({}, clients {})",
                    pkg.name,
                    pkg.source,
                    show_set(&pkg.federation)
                );
                for e in &pkg.expected {
                    let c = e.corrupt.as_ref().map(|c| format!(" C={}", show_set(c)));
                    let verdict = if e.holds { "pass" } else { "fail" };
                    println!("  {}{} {verdict}", e.property, c.unwrap_or_default());
                }
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
