//! Exhaustive verification of security hyperproperties in F2.

mod adversary;
mod checks;
mod solve;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use adversary::{
    abort_profile, adversarial_inputs, anchor, check_cheating_detection, check_integrity,
    decision_points, enumerate_adversaries, MAX_STRATEGIES,
};
pub use checks::{
    check_and_gate_tactic, check_gmw_invariant, check_gradual_release, check_nimo,
    check_passive_correct, corrupt_messages,
};
pub use solve::{initial_memories, ot4_solve, runs_tt, solve, tt_step, MemSet, RunsError};

use crate::dist::{DistError, Pmf, Preprocessing, Prob};
use crate::engine::{Engine, EngineError};
use crate::lang::{EvalError, Memory, Protocol, Var, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("a passive run fails the assertion at command {0}")]
    PassiveAbort(usize),
    #[error("{count} strategies exceed the budget of {limit}")]
    Budget { count: u128, limit: u128 },
    #[error("{0}")]
    Shape(String),
}

/// Which honest initial state an adversarial run is anchored to when it
/// is compared with passive runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reading {
    /// Honest secrets only.
    SecretsOnly,
    /// Honest secrets, honest preprocessing draws and honest flips.
    WithPreprocessing,
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reading::SecretsOnly => "secrets-only",
            Reading::WithPreprocessing => "with-preprocessing",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// `P(target | given) ≠ P(target | given ⊎ extra)`.
    Conditional {
        target: Memory,
        given: Memory,
        extra: Memory,
        without: Prob,
        with: Prob,
    },
    /// `P(left ⊎ right) ≠ P(left) · P(right)`.
    Dependence {
        left: Memory,
        right: Memory,
        joint: Prob,
        product: Prob,
    },
    /// The functionality's output has conditional probability below 1.
    Output {
        secrets: Memory,
        expected: Memory,
        prob: Prob,
    },
    /// Named conditions that do not hold.
    Conditions(Vec<String>),
    /// An adversarial run that no passive run matches.
    Run { strategy: String, run: Memory },
    /// Honest responses whose adversarial and passive conditionals differ.
    Response {
        strategy: String,
        key: Memory,
        response: Memory,
        adversarial: Prob,
        passive: Prob,
    },
}

fn line(m: &Memory) -> String {
    let pairs = m.sorted_pairs();
    if pairs.is_empty() {
        "(empty)".into()
    } else {
        pairs.join(" ")
    }
}

fn weight(p: &Prob) -> String {
    format!("weight={}/{}", p.numer(), p.denom())
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Conditional {
                target,
                given,
                extra,
                without,
                with,
            } => {
                writeln!(f, "given {}", line(given))?;
                writeln!(f, "{} {}", line(target), weight(without))?;
                writeln!(f, "given {} {}", line(given), line(extra))?;
                writeln!(f, "{} {}", line(target), weight(with))
            }
            Witness::Dependence {
                left,
                right,
                joint,
                product,
            } => {
                writeln!(f, "{} {} {}", line(left), line(right), weight(joint))?;
                writeln!(f, "product of marginals {}", weight(product))
            }
            Witness::Output {
                secrets,
                expected,
                prob,
            } => {
                writeln!(f, "given {}", line(secrets))?;
                writeln!(f, "{} {}", line(expected), weight(prob))
            }
            Witness::Conditions(names) => {
                for n in names {
                    writeln!(f, "violated: {n}")?;
                }
                Ok(())
            }
            Witness::Run { strategy, run } => {
                writeln!(f, "strategy: {strategy}")?;
                writeln!(f, "{}", line(run))
            }
            Witness::Response {
                strategy,
                key,
                response,
                adversarial,
                passive,
            } => {
                writeln!(f, "strategy: {strategy}")?;
                writeln!(f, "given {}", line(key))?;
                writeln!(f, "adversarial {} {}", line(response), weight(adversarial))?;
                writeln!(f, "passive {} {}", line(response), weight(passive))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn pass() -> Verdict {
        Verdict {
            holds: true,
            witness: None,
        }
    }

    pub fn fail(witness: Witness) -> Verdict {
        Verdict {
            holds: false,
            witness: Some(witness),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            None if self.holds => writeln!(f, "PASS"),
            None => writeln!(f, "FAIL"),
            Some(w) => {
                writeln!(f, "{}", if self.holds { "PASS" } else { "FAIL" })?;
                write!(f, "{w}")
            }
        }
    }
}

/// The passive runs of a protocol, ready for projected queries.
#[derive(Debug, Clone)]
pub struct Model {
    engine: Engine,
    workers: usize,
}

impl Model {
    pub fn new(
        pi: &Protocol,
        preproc: &Preprocessing,
        workers: usize,
    ) -> Result<Model, VerifyError> {
        Ok(Model {
            engine: Engine::passive(pi, preproc)?,
            workers,
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Every variable of the runs.
    pub fn vars(&self) -> &[Var] {
        self.engine.vars()
    }

    /// Secrets of the runs, including those dealt by preprocessing.
    pub fn secrets(&self) -> Vec<Var> {
        self.vars()
            .iter()
            .filter(|x| x.kind() == VarKind::Secret)
            .cloned()
            .collect()
    }

    /// The passive distribution projected onto `cols`, which may include
    /// global views `<m[w]>`.
    pub fn pmf(&self, cols: &[Var]) -> Result<Pmf, VerifyError> {
        project(&self.engine, cols, self.workers, true)
    }
}

/// Projects the runs of `engine` onto `cols`, synthesizing global-view
/// columns from their shares.
pub(crate) fn project(
    engine: &Engine,
    cols: &[Var],
    workers: usize,
    passive: bool,
) -> Result<Pmf, VerifyError> {
    let mut real: Vec<Var> = Vec::new();
    let mut views: Vec<String> = Vec::new();
    for x in cols {
        if x.kind() == VarKind::GlobalView {
            views.push(x.name().to_string());
            for c in [1, 2] {
                let share = Var::mesg(x.name(), crate::lang::client(c));
                if !real.contains(&share) {
                    real.push(share);
                }
            }
        } else if !real.contains(x) {
            real.push(x.clone());
        }
    }
    let (mut pmf, aborts) = engine.pmf_with_aborts(&real, workers)?;
    if passive && aborts.total > 0 {
        let first = aborts.at.keys().next().copied().unwrap_or(0);
        return Err(VerifyError::PassiveAbort(first));
    }
    for w in &views {
        pmf = pmf.with_global_view(w)?;
    }
    Ok(pmf.marginal(cols)?)
}

fn sorted(set: impl IntoIterator<Item = Var>) -> Vec<Var> {
    let s: BTreeSet<Var> = set.into_iter().collect();
    s.into_iter().collect()
}

/// The properties the verifier decides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    Correct,
    Nimo,
    GradualRelease,
    AndTactic,
    GmwInvariant,
    CheatingDetection,
    Integrity,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Correct,
        Property::Nimo,
        Property::GradualRelease,
        Property::AndTactic,
        Property::GmwInvariant,
        Property::CheatingDetection,
        Property::Integrity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Correct => "correct",
            Property::Nimo => "nimo",
            Property::GradualRelease => "gradual-release",
            Property::AndTactic => "and-tactic",
            Property::GmwInvariant => "gmw-invariant",
            Property::CheatingDetection => "cheating-detection",
            Property::Integrity => "integrity",
        }
    }

    /// Whether the property is stated for an honest/corrupt split.
    pub fn needs_partition(self) -> bool {
        !matches!(self, Property::Correct | Property::AndTactic)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Property {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Property, VerifyError> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| VerifyError::Shape(format!("unknown property `{s}`")))
    }
}

/// Property-specific inputs for [`verify`].
#[derive(Debug, Clone)]
pub struct Options {
    pub functionality: Option<crate::dist::Functionality>,
    /// AND gate `(x, y, z)`; inferred from the first 1-of-4 transfer when
    /// absent.
    pub gate: Option<(String, String, String)>,
    /// Circuit output wire; inferred as the last message written before
    /// the first reveal when absent.
    pub wire: Option<String>,
    pub budget: usize,
    pub reading: Reading,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            functionality: None,
            gate: None,
            wire: None,
            budget: 0,
            reading: Reading::SecretsOnly,
        }
    }
}

/// The commands before the first reveal or output.
pub fn circuit_prefix(pi: &Protocol) -> Protocol {
    Protocol::new(
        pi.commands
            .iter()
            .take_while(|c| {
                !matches!(
                    c,
                    crate::lang::Command::Reveal { .. } | crate::lang::Command::Output { .. }
                )
            })
            .cloned()
            .collect(),
    )
}

fn infer_gate(pi: &Protocol) -> Option<(String, String, String)> {
    pi.commands.iter().find_map(|c| match (c.target(), c.expr()) {
        (Some(t), Some(crate::lang::Expr::Ot4(ot))) => match &ot.choice {
            [crate::lang::Expr::Ref(VarKind::Mesg, x), crate::lang::Expr::Ref(VarKind::Mesg, y)] => {
                Some((x.clone(), y.clone(), t.name().to_string()))
            }
            _ => None,
        },
        _ => None,
    })
}

fn infer_wire(prefix: &Protocol) -> Option<String> {
    prefix
        .commands
        .iter()
        .rev()
        .find_map(|c| c.target().filter(|t| t.kind() == VarKind::Mesg))
        .map(|t| t.name().to_string())
}

/// Decides `property` for `pi` under `preproc`.
pub fn verify(
    pi: &Protocol,
    preproc: &Preprocessing,
    property: Property,
    part: Option<&crate::lang::Partition>,
    opts: &Options,
    workers: usize,
) -> Result<Verdict, VerifyError> {
    let need_part =
        || part.ok_or_else(|| VerifyError::Shape(format!("{property} needs a corrupt set")));
    let passive = || -> Protocol {
        Protocol::new(
            pi.commands
                .iter()
                .filter(|c| !c.is_assert())
                .cloned()
                .collect(),
        )
    };
    match property {
        Property::Correct => {
            let f = opts
                .functionality
                .as_ref()
                .ok_or_else(|| VerifyError::Shape("correctness needs a functionality".into()))?;
            check_passive_correct(&Model::new(pi, preproc, workers)?, f)
        }
        Property::Nimo => {
            let model = Model::new(pi, preproc, workers)?;
            check_nimo(&model, pi, need_part()?)
        }
        Property::GradualRelease => {
            let model = Model::new(pi, preproc, workers)?;
            check_gradual_release(&model, pi, need_part()?)
        }
        Property::AndTactic => {
            let (x, y, z) = opts
                .gate
                .clone()
                .or_else(|| infer_gate(pi))
                .ok_or_else(|| VerifyError::Shape("no 1-of-4 transfer over two messages".into()))?;
            check_and_gate_tactic(&Model::new(pi, preproc, workers)?, &x, &y, &z)
        }
        Property::GmwInvariant => {
            let prefix = circuit_prefix(pi);
            let z = opts
                .wire
                .clone()
                .or_else(|| infer_wire(&prefix))
                .ok_or_else(|| VerifyError::Shape("no circuit wire before the decode".into()))?;
            let model = Model::new(&prefix, preproc, workers)?;
            check_gmw_invariant(&model, &prefix, &z, need_part()?)
        }
        Property::CheatingDetection | Property::Integrity => {
            let part = need_part()?;
            let passive = passive();
            let model = Model::new(&passive, preproc, workers)?;
            let family = enumerate_adversaries(pi, part, opts.budget)?;
            if property == Property::CheatingDetection {
                check_cheating_detection(&model, pi, preproc, part, &family, opts.reading)
            } else {
                check_integrity(&model, pi, preproc, part, &family, opts.reading)
            }
        }
    }
}
