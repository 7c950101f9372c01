//! Small-step interpreter over configurations `(store, context, redex)`.
//!
//! Focusing moves (entering a subterm, propagating a value back into its
//! frame) are not counted as steps; `step` returns configurations that are
//! already focused on their next redex.

use std::fmt;

use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// `let name = [] in body`
    LetBound { name: Ident, body: Expr, span: Span },
    /// `[](args)`
    Callee { args: Vec<Expr>, span: Span },
    /// `callee(done, [], rest)`
    Arg { callee: Expr, done: Vec<Expr>, rest: Vec<Expr>, span: Span },
    /// `op(done, [], rest)`
    PrimArg { op: PrimOp, done: Vec<Expr>, rest: Vec<Expr>, span: Span },
    /// `if [] then .. else ..`
    IfCond { then_branch: Expr, else_branch: Expr, span: Span },
    /// `break label []`
    BreakArg { label: Ident, span: Span },
    /// `label name : t { [] }`
    LabelBody { label: Ident, annotation: ArrowType, span: Span },
    /// `target.field := []`
    SetValue { target: Subject, field: Ident, span: Span },
}

impl Frame {
    pub fn plug(&self, e: Expr) -> Expr {
        let (kind, span) = match self.clone() {
            Frame::LetBound { name, body, span } => {
                (ExprKind::Let { name, bound: Box::new(e), body: Box::new(body) }, span)
            }
            Frame::Callee { args, span } => (ExprKind::Apply { callee: Box::new(e), args }, span),
            Frame::Arg { callee, mut done, rest, span } => {
                done.push(e);
                done.extend(rest);
                (ExprKind::Apply { callee: Box::new(callee), args: done }, span)
            }
            Frame::PrimArg { op, mut done, rest, span } => {
                done.push(e);
                done.extend(rest);
                (ExprKind::Prim { op, args: done }, span)
            }
            Frame::IfCond { then_branch, else_branch, span } => (
                ExprKind::If {
                    cond: Box::new(e),
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                },
                span,
            ),
            Frame::BreakArg { label, span } => (ExprKind::Break { label, arg: Box::new(e) }, span),
            Frame::LabelBody { label, annotation, span } => {
                (ExprKind::Label { label, annotation, body: Box::new(e) }, span)
            }
            Frame::SetValue { target, field, span } => (ExprKind::SetField { target, field, value: Box::new(e) }, span),
        };
        Expr::new(kind, span)
    }
}

/// Splits off the frame around the next subterm to evaluate, if the
/// expression has one that is not yet a value.
fn split(e: &Expr) -> Option<(Frame, Expr)> {
    let span = e.span;
    match &e.kind {
        ExprKind::Let { name, bound, body } if !is_value(bound) => {
            Some((Frame::LetBound { name: name.clone(), body: (**body).clone(), span }, (**bound).clone()))
        }
        ExprKind::Apply { callee, args } => {
            if !is_value(callee) {
                return Some((Frame::Callee { args: args.clone(), span }, (**callee).clone()));
            }
            let i = args.iter().position(|a| !is_value(a))?;
            let frame =
                Frame::Arg { callee: (**callee).clone(), done: args[..i].to_vec(), rest: args[i + 1..].to_vec(), span };
            Some((frame, args[i].clone()))
        }
        ExprKind::Prim { op, args } => {
            let i = args.iter().position(|a| !is_value(a))?;
            let frame = Frame::PrimArg { op: *op, done: args[..i].to_vec(), rest: args[i + 1..].to_vec(), span };
            Some((frame, args[i].clone()))
        }
        ExprKind::If { cond, then_branch, else_branch } if !is_value(cond) => Some((
            Frame::IfCond { then_branch: (**then_branch).clone(), else_branch: (**else_branch).clone(), span },
            (**cond).clone(),
        )),
        ExprKind::Break { label, arg } if !is_value(arg) => {
            Some((Frame::BreakArg { label: label.clone(), span }, (**arg).clone()))
        }
        ExprKind::Label { label, annotation, body } if !is_value(body) => {
            Some((Frame::LabelBody { label: label.clone(), annotation: annotation.clone(), span }, (**body).clone()))
        }
        ExprKind::SetField { target, field, value } if !is_value(value) => {
            Some((Frame::SetValue { target: target.clone(), field: field.clone(), span }, (**value).clone()))
        }
        _ => None,
    }
}

/// Runtime values are closed: a variable never counts as one.
fn is_value(e: &Expr) -> bool {
    e.is_closed_value()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub store: Store,
    /// Innermost frame last.
    pub context: Vec<Frame>,
    pub redex: Expr,
}

impl Config {
    /// Initial configuration for a program, focused on its first redex.
    pub fn initial(e: &Expr) -> Config {
        decompose(Store::new(), e)
    }

    /// The whole program this configuration represents.
    pub fn recompose(&self) -> Expr {
        self.context.iter().rev().fold(self.redex.clone(), |acc, f| f.plug(acc))
    }

    fn focus(mut self) -> Config {
        loop {
            if is_value(&self.redex) {
                match self.context.pop() {
                    Some(frame) => self.redex = frame.plug(self.redex),
                    None => return self,
                }
            }
            while let Some((frame, inner)) = split(&self.redex) {
                self.context.push(frame);
                self.redex = inner;
            }
            if !is_value(&self.redex) || self.context.is_empty() {
                return self;
            }
        }
    }

    fn next_location(&self) -> LocId {
        self.store.objects.keys().next_back().map_or(LocId(0), |l| LocId(l.0 + 1))
    }
}

/// Leftmost-innermost decomposition of `e` into a focused configuration.
pub fn decompose(store: Store, e: &Expr) -> Config {
    Config { store, context: Vec::new(), redex: e.clone() }.focus()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Let,
    BetaV,
    OpEval,
    IfTrue,
    IfFalse,
    IfhtrTrue,
    IfhtrFalse,
    BrkP,
    LblPop,
    New,
    SetRef,
    Deref,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Let => "Let",
            Rule::BetaV => "Beta-v",
            Rule::OpEval => "Op-Eval",
            Rule::IfTrue => "If-True",
            Rule::IfFalse => "If-False",
            Rule::IfhtrTrue => "Ifhtr-True",
            Rule::IfhtrFalse => "Ifhtr-False",
            Rule::BrkP => "Brk-P",
            Rule::LblPop => "Lbl-Pop",
            Rule::New => "New",
            Rule::SetRef => "SetRef",
            Rule::Deref => "Deref",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StuckReason {
    MissingFieldAtRuntime,
    DeltaTypeTrap,
    ArityTrap,
    NotAFunction,
    NotABoolean,
    UnboundLocation,
    DanglingBreak,
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for StuckReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use StuckReason::*;
        [MissingFieldAtRuntime, DeltaTypeTrap, ArityTrap, NotAFunction, NotABoolean, UnboundLocation, DanglingBreak]
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| format!("unknown stuck reason `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Done { store: Store, value: Expr },
    Stepped { config: Config, rule: Rule },
    Stuck { reason: StuckReason, config: Config },
    StepLimit(Config),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaTypeTrap;

/// Primitive operations. Integers wrap at 64 bits.
pub fn delta(op: PrimOp, args: &[Expr]) -> Result<Expr, DeltaTypeTrap> {
    let consts: Vec<&Const> = args
        .iter()
        .map(|a| match &a.kind {
            ExprKind::Const(c) => Ok(c),
            _ => Err(DeltaTypeTrap),
        })
        .collect::<Result<_, _>>()?;
    let c = match (op, consts.as_slice()) {
        (PrimOp::Add, [Const::Int(a), Const::Int(b)]) => Const::Int(a.wrapping_add(*b)),
        (PrimOp::Sub, [Const::Int(a), Const::Int(b)]) => Const::Int(a.wrapping_sub(*b)),
        (PrimOp::Mul, [Const::Int(a), Const::Int(b)]) => Const::Int(a.wrapping_mul(*b)),
        (PrimOp::Eq, [Const::Int(a), Const::Int(b)]) => Const::Bool(a == b),
        (PrimOp::Lt, [Const::Int(a), Const::Int(b)]) => Const::Bool(a < b),
        (PrimOp::Not, [Const::Bool(a)]) => Const::Bool(!a),
        _ => return Err(DeltaTypeTrap),
    };
    Ok(Expr::bare(ExprKind::Const(c)))
}

fn location(s: &Subject, store: &Store) -> Result<LocId, StuckReason> {
    match s {
        Subject::Loc(l) if store.contains(*l) => Ok(*l),
        _ => Err(StuckReason::UnboundLocation),
    }
}

/// One reduction step on a focused configuration.
pub fn step(c: &Config) -> Outcome {
    let c = c.clone().focus();
    if c.context.is_empty() && is_value(&c.redex) {
        return Outcome::Done { store: c.store, value: c.redex };
    }
    match reduce(&c) {
        Ok((config, rule)) => Outcome::Stepped { config: config.focus(), rule },
        Err(reason) => Outcome::Stuck { reason, config: c },
    }
}

fn reduce(c: &Config) -> Result<(Config, Rule), StuckReason> {
    let mut store = c.store.clone();
    let mut context = c.context.clone();
    let span = c.redex.span;
    let (redex, rule) = match &c.redex.kind {
        ExprKind::Let { name, bound, body } => (substitute(body, name, bound), Rule::Let),
        ExprKind::Apply { callee, args } => {
            let ExprKind::Func { params, body, .. } = &callee.kind else {
                return Err(StuckReason::NotAFunction);
            };
            if params.len() != args.len() {
                return Err(StuckReason::ArityTrap);
            }
            let bindings: Vec<(Ident, Expr)> = params.iter().cloned().zip(args.iter().cloned()).collect();
            // Arguments are closed, so sequential substitution is simultaneous.
            (substitute_all(body, &bindings), Rule::BetaV)
        }
        ExprKind::Prim { op, args } => {
            if op.signature().0.len() != args.len() {
                return Err(StuckReason::ArityTrap);
            }
            let v = delta(*op, args).map_err(|_| StuckReason::DeltaTypeTrap)?;
            (Expr::new(v.kind, span), Rule::OpEval)
        }
        ExprKind::If { cond, then_branch, else_branch } => match cond.kind {
            ExprKind::Const(Const::Bool(true)) => ((**then_branch).clone(), Rule::IfTrue),
            ExprKind::Const(Const::Bool(false)) => ((**else_branch).clone(), Rule::IfFalse),
            _ => return Err(StuckReason::NotABoolean),
        },
        ExprKind::IfHasAttr { subject, attr, then_branch, else_branch } => {
            let l = location(subject, &store)?;
            if store.get(l).is_some_and(|o| o.contains_key(attr)) {
                ((**then_branch).clone(), Rule::IfhtrTrue)
            } else {
                ((**else_branch).clone(), Rule::IfhtrFalse)
            }
        }
        ExprKind::Break { label, arg } => {
            let target = context
                .iter()
                .rposition(|f| matches!(f, Frame::LabelBody { label: n, .. } if n == label))
                .ok_or(StuckReason::DanglingBreak)?;
            context.truncate(target);
            ((**arg).clone(), Rule::BrkP)
        }
        ExprKind::Label { body, .. } => ((**body).clone(), Rule::LblPop),
        ExprKind::New => {
            let l = c.next_location();
            store.insert(l, Object::new());
            (Expr::new(ExprKind::Loc(l), span), Rule::New)
        }
        ExprKind::SetField { target, field, value } => {
            let l = location(target, &store)?;
            store.set_field(l, field, (**value).clone());
            ((**value).clone(), Rule::SetRef)
        }
        ExprKind::GetField { target, field } => {
            let l = location(target, &store)?;
            let v = store.get(l).and_then(|o| o.get(field)).ok_or(StuckReason::MissingFieldAtRuntime)?;
            (v.clone(), Rule::Deref)
        }
        ExprKind::Var(_) | ExprKind::Loc(_) => return Err(StuckReason::UnboundLocation),
        ExprKind::Const(_) | ExprKind::Func { .. } => unreachable!("values are never reduced"),
    };
    Ok((Config { store, context, redex }, rule))
}

/// What the observer of a run sees after each counted step.
pub struct StepEvent<'a> {
    /// 1-based step number.
    pub index: usize,
    pub rule: Rule,
    /// The reduced redex, as it was before the step.
    pub redex: &'a Expr,
    pub config: &'a Config,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    /// Terminal outcome: `Done`, `Stuck` or `StepLimit`.
    pub outcome: Outcome,
    pub steps: usize,
    pub store: Store,
}

pub fn run(e: &Expr, max_steps: usize) -> RunResult {
    run_observed(e, max_steps, &mut |_| {})
}

pub fn run_observed(e: &Expr, max_steps: usize, observe: &mut dyn FnMut(&StepEvent)) -> RunResult {
    let mut config = Config::initial(e);
    let mut steps = 0;
    loop {
        if steps >= max_steps && !(config.context.is_empty() && is_value(&config.redex)) {
            let store = config.store.clone();
            return RunResult { outcome: Outcome::StepLimit(config), steps, store };
        }
        let redex = config.redex.clone();
        match step(&config) {
            Outcome::Stepped { config: next, rule } => {
                steps += 1;
                observe(&StepEvent { index: steps, rule, redex: &redex, config: &next });
                config = next;
            }
            outcome => {
                let store = match &outcome {
                    Outcome::Done { store, .. } => store.clone(),
                    _ => config.store.clone(),
                };
                return RunResult { outcome, steps, store };
            }
        }
    }
}

/// Store rendering used by traces: `{l0:{a=1,b=@loc1},l1:{}}`.
pub fn format_store(store: &Store) -> String {
    let objects: Vec<String> = store
        .objects
        .iter()
        .map(|(l, o)| {
            let fields: Vec<String> = o.iter().map(|(f, v)| format!("{f}={v}")).collect();
            format!("{l}:{{{}}}", fields.join(","))
        })
        .collect();
    format!("{{{}}}", objects.join(","))
}

pub fn trace_line(event: &StepEvent) -> String {
    format!(
        "step={} rule={} redex={} store={}",
        event.index,
        event.rule.name(),
        event.redex,
        format_store(&event.config.store)
    )
}
