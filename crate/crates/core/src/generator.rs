//! Type-directed generator of closed, well-typed programs.
//!
//! Programs are built left to right. Every subterm is checked against the
//! state in force at its position, so the generator always knows the exact
//! constraint set and can pick productions that keep the program typable.
//! Fresh type variables are handed out in textual order of `new` sites,
//! which is also the order the checker visits them in.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{entails, entails_type, filter_attr, is_definite};
use crate::syntax::*;
use crate::typeck::{typecheck_program, Checker, TypeResult, TypeState};

const FIELDS: &[&str] = &["a", "b", "c"];
const STRINGS: &[&str] = &["", "s", "ab", "hello"];
const ATTEMPTS: usize = 3;

pub fn generate_program(seed: u64, depth: usize) -> Expr {
    Generator::new(seed).program(depth)
}

struct LabelCtx {
    name: Ident,
    result: TypeExpr,
    /// Constraint sets in force at each `break` to this label.
    break_states: Vec<ConstraintSet>,
}

pub struct Generator {
    rng: ChaCha8Rng,
    /// `new` sites emitted so far; the next one is typed `X<news>`.
    news: u32,
    names: u32,
    labels: Vec<LabelCtx>,
    /// Nesting depth of function bodies being generated. Bodies never
    /// allocate, so every `new` site runs at most once.
    in_function: usize,
    /// Top-level generations that fell back to a constant.
    pub fallbacks: usize,
}

struct Snapshot {
    news: u32,
    names: u32,
    breaks: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
enum Production {
    Leaf,
    Let,
    If,
    IfHasAttr,
    Set,
    Prim,
    Label,
    Break,
    Call,
    Func,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            news: 0,
            names: 0,
            labels: Vec::new(),
            in_function: 0,
            fallbacks: 0,
        }
    }

    pub fn program(&mut self, depth: usize) -> Expr {
        if depth == 0 {
            return self.constant(None);
        }
        let want = match self.rng.gen_range(0..4) {
            0 => Some(self.base_type()),
            _ => None,
        };
        match self.gen(depth, &TypeState::empty(), want.as_ref()) {
            Some((e, _)) if typecheck_program(&e).is_ok() => e,
            _ => {
                self.fallbacks += 1;
                self.constant(None)
            }
        }
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            news: self.news,
            names: self.names,
            breaks: self.labels.iter().map(|l| l.break_states.len()).collect(),
        }
    }

    fn restore(&mut self, s: Snapshot) {
        self.news = s.news;
        self.names = s.names;
        for (l, n) in self.labels.iter_mut().zip(s.breaks) {
            l.break_states.truncate(n);
        }
    }

    fn check(&self, state: &TypeState, e: &Expr, start: u32) -> Option<TypeResult> {
        Checker::starting_at(start).synthesize(state, e).ok()
    }

    /// A subterm whose type entails `want`, with its typing result.
    fn gen(&mut self, depth: usize, state: &TypeState, want: Option<&TypeExpr>) -> Option<(Expr, TypeResult)> {
        for attempt in 0..=ATTEMPTS {
            let snap = self.snapshot();
            let start = self.news;
            let proposal =
                if attempt == ATTEMPTS { self.fallback(state, want) } else { self.propose(depth, state, want) };
            if let Some(e) = proposal {
                if let Some(r) = self.check(state, &e, start) {
                    if want.is_none_or(|t| entails_type(&r.ty, t)) {
                        self.news = start + count_news(&e);
                        return Some((e, r));
                    }
                }
            }
            self.restore(snap);
        }
        None
    }

    fn propose(&mut self, depth: usize, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        if depth == 0 {
            return self.leaf(state, want);
        }
        let objects = bound_objects(state);
        let base_or_any = want.is_none_or(|t| t.disjuncts().iter().any(|d| matches!(d, TypeExpr::Base(_))));
        let mut options: Vec<(Production, u32)> =
            vec![(Production::Leaf, 2), (Production::Let, 5), (Production::If, 2)];
        if !objects.is_empty() {
            options.push((Production::IfHasAttr, 2));
            options.push((Production::Set, 3));
        }
        if base_or_any {
            options.push((Production::Prim, 2));
            options.push((Production::Label, 1));
        }
        if !self.labels.is_empty() {
            options.push((Production::Break, 1));
        }
        if !self.callees(state, want).is_empty() {
            options.push((Production::Call, 8));
        }
        if want.is_none() {
            options.push((Production::Func, 1));
        }
        let production = options.choose_weighted(&mut self.rng, |o| o.1).ok()?.0;
        let d = depth - 1;
        match production {
            Production::Leaf => self.leaf(state, want),
            Production::Let => self.propose_let(d, state, want),
            Production::If => self.propose_if(d, state, want),
            Production::IfHasAttr => self.propose_ifhasattr(d, state, want, &objects),
            Production::Set => self.propose_set(d, state, want, &objects),
            Production::Prim => self.propose_prim(d, state, want),
            Production::Label => self.propose_label(d, state, want),
            Production::Break => self.propose_break(d, state),
            Production::Call => self.propose_call(d, state, want),
            Production::Func => self.propose_func(d, state, None),
        }
    }

    fn fresh_name(&mut self, prefix: &str) -> Ident {
        let n = self.names;
        self.names += 1;
        format!("{prefix}{n}")
    }

    fn base_type(&mut self) -> TypeExpr {
        TypeExpr::Base(*BaseType::ALL.choose(&mut self.rng).unwrap())
    }

    fn constant(&mut self, b: Option<BaseType>) -> Expr {
        let b = b.unwrap_or_else(|| *BaseType::ALL.choose(&mut self.rng).unwrap());
        match b {
            BaseType::Int => Expr::int(self.rng.gen_range(-3..10)),
            BaseType::Bool => Expr::bool(self.rng.gen()),
            BaseType::Str => Expr::str(STRINGS.choose(&mut self.rng).unwrap()),
        }
    }

    fn leaf(&mut self, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        let mut candidates: Vec<Expr> = Vec::new();
        let fits = |t: &TypeExpr| !matches!(t, TypeExpr::Never) && want.is_none_or(|w| entails_type(t, w));
        for (x, t) in &state.env {
            if fits(t) {
                candidates.push(Expr::var(x));
            }
        }
        for (x, var) in bound_objects(state) {
            for (field, t) in &state.pre.get(&var).unwrap().fields {
                if is_definite(t) && fits(t) {
                    candidates.push(Expr::get_field(Subject::Var(x.clone()), field));
                }
            }
        }
        let bases: Vec<BaseType> = match want {
            None => BaseType::ALL.to_vec(),
            Some(t) => t
                .disjuncts()
                .iter()
                .filter_map(|d| match d {
                    TypeExpr::Base(b) => Some(*b),
                    _ => None,
                })
                .collect(),
        };
        if !bases.is_empty() && (candidates.is_empty() || self.rng.gen_bool(0.35)) {
            let b = *bases.choose(&mut self.rng).unwrap();
            return Some(self.constant(Some(b)));
        }
        candidates.choose(&mut self.rng).cloned()
    }

    fn fallback(&mut self, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        self.leaf(state, want)
    }

    fn emit_new(&mut self) -> Expr {
        self.news += 1;
        Expr::new_object()
    }

    fn propose_let(&mut self, d: usize, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        let reuse = !state.env.is_empty() && self.rng.gen_bool(0.1);
        let name = if reuse {
            state.env.keys().cloned().collect::<Vec<_>>().choose(&mut self.rng).cloned().unwrap()
        } else {
            self.fresh_name("x")
        };
        let (bound, r1) = match self.rng.gen_range(0..10) {
            0..=3 if self.in_function == 0 => {
                let start = self.news;
                let e = self.emit_new();
                let r = self.check(state, &e, start)?;
                (e, r)
            }
            4 | 5 => {
                let start = self.news;
                let e = self.propose_func(d, state, None)?;
                let r = self.check(state, &e, start)?;
                (e, r)
            }
            _ => self.gen(d, state, None)?,
        };
        let inner = state.bind(r1.post, &name, r1.ty);
        let (body, _) = self.gen(d, &inner, want)?;
        Some(Expr::let_in(&name, bound, body))
    }

    fn propose_if(&mut self, d: usize, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        let (cond, rc) = self.gen(d, state, Some(&TypeExpr::bool()))?;
        let inner = state.with_pre(rc.post);
        let (then_branch, _) = self.gen(d, &inner, want)?;
        let (else_branch, _) = self.gen(d, &inner, want)?;
        Some(Expr::if_then_else(cond, then_branch, else_branch))
    }

    fn propose_ifhasattr(
        &mut self,
        d: usize,
        state: &TypeState,
        want: Option<&TypeExpr>,
        objects: &[(Ident, TypeVar)],
    ) -> Option<Expr> {
        let (x, var) = objects.choose(&mut self.rng)?.clone();
        let attr = *FIELDS.choose(&mut self.rng).unwrap();
        let filtered = filter_attr(&state.pre, &var, attr).ok()?;
        let (then_branch, _) = self.gen(d, &state.with_pre(filtered), want)?;
        let (else_branch, _) = self.gen(d, state, want)?;
        Some(Expr::if_has_attr(Subject::Var(x), attr, then_branch, else_branch))
    }

    fn propose_set(
        &mut self,
        d: usize,
        state: &TypeState,
        want: Option<&TypeExpr>,
        objects: &[(Ident, TypeVar)],
    ) -> Option<Expr> {
        let (x, _) = objects.choose(&mut self.rng)?.clone();
        let field = *FIELDS.choose(&mut self.rng).unwrap();
        let value = match (want, self.rng.gen_range(0..8)) {
            (None, 0) if self.in_function == 0 => self.emit_new(),
            (None, 1) => self.propose_func(d, state, None)?,
            _ => self.gen(d, state, want)?.0,
        };
        Some(Expr::set_field(Subject::Var(x), field, value))
    }

    fn propose_prim(&mut self, d: usize, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        let ops: Vec<PrimOp> = [PrimOp::Add, PrimOp::Sub, PrimOp::Mul, PrimOp::Eq, PrimOp::Lt, PrimOp::Not]
            .into_iter()
            .filter(|op| want.is_none_or(|t| entails_type(&TypeExpr::Base(op.signature().1), t)))
            .collect();
        let op = *ops.choose(&mut self.rng)?;
        let mut current = state.clone();
        let mut args = Vec::new();
        for param in op.signature().0 {
            let (a, r) = self.gen(d, &current, Some(&TypeExpr::Base(*param)))?;
            current = current.with_pre(r.post);
            args.push(a);
        }
        Some(Expr::prim(op, args))
    }

    fn propose_label(&mut self, d: usize, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        let result = match want {
            Some(t) => t.clone(),
            None => self.base_type(),
        };
        let name = self.fresh_name("n");
        let provisional = ArrowType::label(result.clone(), ConstraintSet::new());
        let inner = state.bind_label(&name, provisional);
        self.labels.push(LabelCtx { name: name.clone(), result: result.clone(), break_states: Vec::new() });
        let body = self.gen(d, &inner, Some(&result));
        let ctx = self.labels.pop().unwrap();
        let (body, rb) = body?;
        let mut states = ctx.break_states;
        states.push(rb.post);
        let annotation = ArrowType::label(result, common_weakening(&states)).normalized();
        Some(Expr::label(&name, annotation, body))
    }

    fn propose_break(&mut self, d: usize, state: &TypeState) -> Option<Expr> {
        let i = self.rng.gen_range(0..self.labels.len());
        let (name, result) = (self.labels[i].name.clone(), self.labels[i].result.clone());
        let (arg, r) = self.gen(d, state, Some(&result))?;
        self.labels[i].break_states.push(r.post);
        Some(Expr::break_to(&name, arg))
    }

    /// Callable expressions whose result fits `want`: function variables and
    /// definite function-typed fields.
    fn callees(&self, state: &TypeState, want: Option<&TypeExpr>) -> Vec<(Expr, ArrowType)> {
        let fits = |a: &ArrowType| want.is_none_or(|w| entails_type(&a.result, w)) && entails(&state.pre, &a.pre);
        let mut out = Vec::new();
        for (x, t) in &state.env {
            if let TypeExpr::Arrow(a) = t {
                if fits(a) {
                    out.push((Expr::var(x), (**a).clone()));
                }
            }
        }
        for (x, var) in bound_objects(state) {
            for (field, t) in &state.pre.get(&var).unwrap().fields {
                if let TypeExpr::Arrow(a) = t {
                    if fits(a) {
                        out.push((Expr::get_field(Subject::Var(x.clone()), field), (**a).clone()));
                    }
                }
            }
        }
        out
    }

    fn propose_call(&mut self, d: usize, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        let (callee, arrow) = self.callees(state, want).choose(&mut self.rng)?.clone();
        let mut current = state.clone();
        let mut args = Vec::new();
        for param in &arrow.params {
            let (a, r) = self.gen(d, &current, Some(param))?;
            current = current.with_pre(r.post);
            args.push(a);
        }
        entails(&current.pre, &arrow.pre).then(|| Expr::apply(callee, args))
    }

    /// A function literal closing over the current scope. Its precondition is
    /// a weakening of the current constraints; its postcondition constrains
    /// exactly the variables of the precondition, as the body leaves them.
    fn propose_func(&mut self, d: usize, state: &TypeState, want: Option<&TypeExpr>) -> Option<Expr> {
        let mut pre = ConstraintSet::new();
        for (var, record) in state.pre.iter() {
            if self.rng.gen_bool(0.6) {
                let kept: RecordType = record
                    .fields
                    .iter()
                    .filter(|_| self.rng.gen_bool(0.7))
                    .map(|(f, t)| (f.clone(), t.clone()))
                    .collect();
                pre.insert(var.clone(), kept);
            }
        }
        let object_types: Vec<TypeExpr> = state
            .env
            .values()
            .filter(|t| matches!(t, TypeExpr::Var(_)))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let arity = self.rng.gen_range(0..=2);
        let mut params = Vec::new();
        let mut param_types = Vec::new();
        let mut env = state.env.clone();
        for _ in 0..arity {
            let t = if !object_types.is_empty() && self.rng.gen_bool(0.25) {
                object_types.choose(&mut self.rng).unwrap().clone()
            } else {
                self.base_type()
            };
            let p = self.fresh_name("p");
            env.insert(p.clone(), t.clone());
            params.push(p);
            param_types.push(t);
        }
        let inner = TypeState { pre: pre.clone(), env, locs: state.locs.clone(), labels: Default::default() };
        let outer_labels = std::mem::take(&mut self.labels);
        self.in_function += 1;
        let body = self.gen(d, &inner, want);
        self.in_function -= 1;
        self.labels = outer_labels;
        let (body, rb) = body?;
        if matches!(rb.ty, TypeExpr::Never) {
            return None;
        }
        let mut post = ConstraintSet::new();
        for (var, _) in pre.iter() {
            post.insert(var.clone(), rb.post.get(var)?.clone());
        }
        let annotation = ArrowType::new(pre, param_types, normalize_type(&rb.ty), post).normalized();
        let names: Vec<&str> = params.iter().map(String::as_str).collect();
        Some(Expr::func(&names, annotation, body))
    }
}

/// Term variables of object type whose variable is constrained.
fn bound_objects(state: &TypeState) -> Vec<(Ident, TypeVar)> {
    state
        .env
        .iter()
        .filter_map(|(x, t)| match t {
            TypeExpr::Var(v) if state.pre.contains(v) => Some((x.clone(), v.clone())),
            _ => None,
        })
        .collect()
}

/// The strongest constraint set entailed by each of `states` that keeps the
/// shared shape: common variables, common fields, joined field types.
pub fn common_weakening(states: &[ConstraintSet]) -> ConstraintSet {
    let Some((first, rest)) = states.split_first() else {
        return ConstraintSet::new();
    };
    let mut out = ConstraintSet::new();
    for (var, record) in first.iter() {
        let others: Option<Vec<&RecordType>> = rest.iter().map(|c| c.get(var)).collect();
        let Some(others) = others else { continue };
        let mut joined = RecordType::new();
        for (field, t) in &record.fields {
            let ts: Option<Vec<TypeExpr>> = others.iter().map(|r| r.get(field).cloned()).collect();
            if let Some(mut ts) = ts {
                ts.push(t.clone());
                joined.fields.insert(field.clone(), TypeExpr::or(ts));
            }
        }
        out.insert(var.clone(), joined);
    }
    out
}

fn count_news(e: &Expr) -> u32 {
    let mut n = 0;
    e.walk(&mut |x| {
        if matches!(x.kind, ExprKind::New) {
            n += 1;
        }
    });
    n
}
