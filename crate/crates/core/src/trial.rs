//! Soundness and subject-reduction trials for well-typed programs.
//!
//! Every allocated location is typed by the variable its `new` site received
//! during checking, so runtime and static constraints share one namespace.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::{entails, entails_type, entails_up_to_merge};
use crate::eval::{step, Config, Outcome, Rule};
use crate::generator::generate_program;
use crate::model::{extract_store_typing, Model};
use crate::parser::{parse_program, pretty_print};
use crate::syntax::*;
use crate::typeck::{Checker, Recording, TypeError, TypeResult, TypeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Verdict {
    Pass,
    ProgressViolation,
    SoundnessViolation,
    SubjectReductionViolation,
    Diverged,
}

impl Verdict {
    pub fn is_violation(self) -> bool {
        !matches!(self, Verdict::Pass | Verdict::Diverged)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialReport {
    pub program: String,
    pub seed: Option<u64>,
    pub verdict: Verdict,
    pub steps: usize,
    pub details: String,
    /// Replayed steps whose residual needed merge-weakening of constraint
    /// premises or of the final comparison.
    pub weakened_replays: usize,
    /// Replayed steps in total.
    pub replays: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TrialOptions {
    pub max_steps: usize,
    pub subject_reduction: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions { max_steps: 100_000, subject_reduction: false }
    }
}

/// Checks the program, then runs it step by step. Fails only when the
/// program does not typecheck; every runtime finding is a verdict.
pub fn soundness_trial(e: &Expr, options: TrialOptions) -> Result<TrialReport, TypeError> {
    let mut checker = Checker::recording();
    let typing = checker.synthesize(&TypeState::empty(), e)?;
    let recording = checker.into_recording().expect("recording checker");
    let model = Model::new();
    let mut report = TrialReport {
        program: pretty_print(e),
        seed: None,
        verdict: Verdict::Pass,
        steps: 0,
        details: String::new(),
        weakened_replays: 0,
        replays: 0,
    };
    let mut locs = LocEnv::new();
    let mut config = Config::initial(e);
    loop {
        if report.steps >= options.max_steps && !is_final(&config) {
            report.verdict = Verdict::Diverged;
            report.details = format!("no value after {} steps", report.steps);
            return Ok(report);
        }
        let redex_span = config.redex.span;
        match step(&config) {
            Outcome::Done { store, value } => {
                let value_ok = model.satisfies_value(&store, &locs, &value, &typing.ty);
                let post_ok = model.satisfies_constraints(&store, &locs, &typing.post);
                if !(value_ok && post_ok) {
                    report.verdict = Verdict::SoundnessViolation;
                    report.details = format!(
                        "value {value} : {} {}; post {} {}",
                        typing.ty,
                        if value_ok { "holds" } else { "fails" },
                        typing.post,
                        if post_ok { "holds" } else { "fails" }
                    );
                }
                return Ok(report);
            }
            Outcome::Stuck { reason, config } => {
                report.verdict = Verdict::ProgressViolation;
                report.details = format!("stuck ({reason}) at {}", config.redex);
                return Ok(report);
            }
            Outcome::StepLimit(_) => unreachable!("step never reports the limit"),
            Outcome::Stepped { config: next, rule } => {
                report.steps += 1;
                if rule == Rule::New {
                    let l = *next.store.objects.keys().next_back().expect("allocation");
                    let var = recording
                        .new_sites
                        .get(&redex_span.key())
                        .cloned()
                        .unwrap_or_else(|| TypeVar(format!("R{}", l.0)));
                    locs.insert(l, TypeExpr::Var(var));
                }
                if options.subject_reduction {
                    report.replays += 1;
                    match replay(&recording, &typing, &next, &locs) {
                        Replay::Strict => {}
                        Replay::Weakened => report.weakened_replays += 1,
                        Replay::Failed(why) => {
                            report.verdict = Verdict::SubjectReductionViolation;
                            report.details = format!("after step {} ({}): {why}", report.steps, rule.name());
                            return Ok(report);
                        }
                    }
                }
                config = next;
            }
        }
    }
}

fn is_final(c: &Config) -> bool {
    c.context.is_empty() && c.redex.is_closed_value()
}

enum Replay {
    Strict,
    Weakened,
    Failed(String),
}

/// Re-types the residual program from the exact typing of the current store.
/// The strict reading uses the checker as is and compares with `entails`;
/// the weakened reading closes both under merging with further constraints.
fn replay(recording: &Recording, typing: &TypeResult, config: &Config, locs: &LocEnv) -> Replay {
    let residual = config.recompose();
    let state = TypeState::new(extract_store_typing(&config.store, locs), TypeEnv::new(), locs.clone());
    let strict = Checker::replaying(recording, false).synthesize(&state, &residual);
    if let Ok(r) = &strict {
        if entails_type(&r.ty, &typing.ty) && entails(&r.post, &typing.post) {
            return Replay::Strict;
        }
    }
    match Checker::replaying(recording, true).synthesize(&state, &residual) {
        Ok(r) if entails_type(&r.ty, &typing.ty) && entails_up_to_merge(&r.post, &typing.post) => Replay::Weakened,
        Ok(r) => Replay::Failed(format!(
            "residual types as {} with {}, expected {} with {}",
            r.ty, r.post, typing.ty, typing.post
        )),
        Err(err) => Replay::Failed(format!("residual does not typecheck: {err}")),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FuzzOptions {
    pub seed: u64,
    pub count: usize,
    pub depth: usize,
    pub subject_reduction: bool,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub count: usize,
    pub depth: usize,
    pub subject_reduction: bool,
    pub verdicts: BTreeMap<Verdict, usize>,
    /// Generated programs the checker rejected; the generator should never
    /// produce one.
    pub rejected: usize,
    pub replays: usize,
    pub weakened_replays: usize,
    /// Reports of every trial whose verdict is a violation.
    pub violations: Vec<TrialReport>,
}

impl FuzzReport {
    pub fn violation_count(&self) -> usize {
        self.verdicts.iter().filter(|(v, _)| v.is_violation()).map(|(_, n)| n).sum()
    }

    /// Stable text rendering; equal runs give byte-identical output.
    pub fn render(&self) -> String {
        let mut out = format!(
            "fuzz seed={} count={} depth={} subject_reduction={}\n",
            self.seed, self.count, self.depth, self.subject_reduction
        );
        for v in [
            Verdict::Pass,
            Verdict::Diverged,
            Verdict::ProgressViolation,
            Verdict::SoundnessViolation,
            Verdict::SubjectReductionViolation,
        ] {
            out += &format!("{v}: {}\n", self.verdicts.get(&v).copied().unwrap_or(0));
        }
        out += &format!("rejected: {}\n", self.rejected);
        if self.subject_reduction {
            out += &format!("replays: {} weakened: {}\n", self.replays, self.weakened_replays);
        }
        for r in &self.violations {
            out += &format!(
                "violation seed={} verdict={} steps={}: {}\n  program: {}\n",
                r.seed.unwrap_or_default(),
                r.verdict,
                r.steps,
                r.details,
                r.program
            );
        }
        out
    }
}

/// Seeds of the individual trials of a fuzz run.
pub fn trial_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen()).collect()
}

/// Generates `count` programs and trials each one. Programs are printed and
/// re-parsed first so that their nodes carry source spans.
pub fn fuzz(options: FuzzOptions) -> FuzzReport {
    let mut report = FuzzReport {
        seed: options.seed,
        count: options.count,
        depth: options.depth,
        subject_reduction: options.subject_reduction,
        verdicts: BTreeMap::new(),
        rejected: 0,
        replays: 0,
        weakened_replays: 0,
        violations: Vec::new(),
    };
    let trial_options = TrialOptions { max_steps: options.max_steps, subject_reduction: options.subject_reduction };
    for seed in trial_seeds(options.seed, options.count) {
        let generated = generate_program(seed, options.depth);
        let Ok(e) = parse_program(&pretty_print(&generated)) else {
            report.rejected += 1;
            continue;
        };
        match soundness_trial(&e, trial_options) {
            Ok(mut r) => {
                r.seed = Some(seed);
                *report.verdicts.entry(r.verdict).or_default() += 1;
                report.replays += r.replays;
                report.weakened_replays += r.weakened_replays;
                if r.verdict.is_violation() {
                    report.violations.push(r);
                }
            }
            Err(_) => report.rejected += 1,
        }
    }
    report
}
