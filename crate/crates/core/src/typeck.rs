//! Algorithmic typing judgment `pre; env; locs ⊢ e : t ; post`, synthesized left to right.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::constraints::{entails, entails_type, entails_up_to_merge, filter_attr, is_definite, merge, update};
use crate::syntax::*;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeState {
    pub pre: ConstraintSet,
    pub env: TypeEnv,
    pub locs: LocEnv,
    /// Label names in scope, kept apart from term variables.
    pub labels: BTreeMap<Ident, ArrowType>,
}

impl TypeState {
    pub fn new(pre: ConstraintSet, env: TypeEnv, locs: LocEnv) -> Self {
        TypeState { pre, env, locs, labels: BTreeMap::new() }
    }

    pub fn empty() -> Self {
        TypeState::default()
    }

    pub fn with_pre(&self, pre: ConstraintSet) -> TypeState {
        TypeState { pre, ..self.clone() }
    }

    pub fn bind(&self, pre: ConstraintSet, name: &str, t: TypeExpr) -> TypeState {
        let mut env = self.env.clone();
        env.insert(name.to_string(), t);
        TypeState { pre, env, ..self.clone() }
    }

    pub fn bind_label(&self, name: &str, t: ArrowType) -> TypeState {
        let mut labels = self.labels.clone();
        labels.insert(name.to_string(), t);
        TypeState { labels, ..self.clone() }
    }

    fn vars_in_use(&self) -> BTreeSet<TypeVar> {
        let mut out = BTreeSet::new();
        self.pre.vars(&mut out);
        self.env.values().for_each(|t| t.vars(&mut out));
        self.locs.values().for_each(|t| t.vars(&mut out));
        for a in self.labels.values() {
            TypeExpr::arrow(a.clone()).vars(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeResult {
    pub ty: TypeExpr,
    pub post: ConstraintSet,
}

impl TypeResult {
    pub fn new(ty: TypeExpr, post: ConstraintSet) -> Self {
        TypeResult { ty, post }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TypeErrorKind {
    UnboundVariable,
    UnboundLocation,
    NotAnObjectVariable,
    NotAFunction,
    MissingField,
    IndefiniteFieldType,
    ConditionNotBool,
    BranchJoinFailure,
    CallPreconditionFailure,
    ArityMismatch,
    AnnotationMismatch,
    BreakPostconditionFailure,
    LabelPostconditionFailure,
    FilterEmptiesField,
    PrimopSignatureMismatch,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} [{rule}]: {detail}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    /// Name of the typing rule whose premise failed.
    pub rule: &'static str,
    pub span: Span,
    pub detail: String,
}

impl TypeError {
    fn new(kind: TypeErrorKind, rule: &'static str, span: Span, detail: impl Into<String>) -> Self {
        TypeError { kind, rule, span, detail: detail.into() }
    }
}

/// Side tables filled in while checking a program, keyed by node span.
#[derive(Debug, Clone, Default)]
pub struct Recording {
    /// Constraint set in force when each node was first synthesized.
    pub pre_states: HashMap<(usize, usize), ConstraintSet>,
    /// Type variable assigned to each `new` site.
    pub new_sites: BTreeMap<(usize, usize), TypeVar>,
    /// Fresh-variable counter after checking.
    pub final_counter: u32,
}

/// Typechecker with a deterministic fresh-variable supply.
#[derive(Debug, Default)]
pub struct Checker {
    next_fresh: u32,
    recording: Option<Recording>,
    site_vars: Option<BTreeMap<(usize, usize), TypeVar>>,
    weaken_premises: bool,
    /// Recorded pre-states, consulted by `ifhasattr` when weakening.
    static_states: Option<HashMap<(usize, usize), ConstraintSet>>,
}

type TResult = Result<TypeResult, TypeError>;

impl Checker {
    pub fn new() -> Self {
        Checker::default()
    }

    /// A checker whose next fresh variable is `X<n>`.
    pub fn starting_at(n: u32) -> Self {
        Checker { next_fresh: n, ..Checker::default() }
    }

    /// A checker that records per-node constraint sets and `new`-site variables.
    pub fn recording() -> Self {
        Checker { recording: Some(Recording::default()), ..Checker::default() }
    }

    /// A checker that gives each recorded `new` site the variable it had in
    /// the recording, so residual programs are typed in the original namespace.
    ///
    /// With `weaken_premises`, constraint-set premises (call preconditions,
    /// label, break and function postconditions) may be met after merging the
    /// current constraints with further ones. An `ifhasattr` whose field is
    /// unconstrained then merges in the field type its then-branch was
    /// originally checked with, so a branch that cannot run still types.
    pub fn replaying(recording: &Recording, weaken_premises: bool) -> Self {
        Checker {
            next_fresh: recording.final_counter,
            recording: None,
            site_vars: Some(recording.new_sites.clone()),
            weaken_premises,
            static_states: weaken_premises.then(|| recording.pre_states.clone()),
        }
    }

    /// `pre` merged with `var.attr : t` where `t` is the recorded type of the
    /// field at `branch`, when `pre` does not constrain the field.
    fn weaken_for_branch(&self, pre: &ConstraintSet, var: &TypeVar, attr: &str, branch: Span) -> ConstraintSet {
        let recorded = self
            .static_states
            .as_ref()
            .and_then(|m| m.get(&branch.key()))
            .and_then(|c| c.get(var))
            .and_then(|r| r.get(attr));
        match (recorded, pre.get(var)) {
            (Some(t), Some(record)) if record.get(attr).is_none() => {
                let mut extended = record.clone();
                extended.fields.insert(attr.to_string(), t.clone());
                merge(pre, &pre.clone().with(var.0.as_str(), extended))
            }
            _ => pre.clone(),
        }
    }

    fn premise_holds(&self, c1: &ConstraintSet, c2: &ConstraintSet) -> bool {
        if self.weaken_premises {
            entails_up_to_merge(c1, c2)
        } else {
            entails(c1, c2)
        }
    }

    /// Types a label without the constraints on variables its declared post
    /// does not mention, then carries those constraints across unchanged.
    /// A label that types without them cannot touch their objects.
    fn frame_label(&mut self, state: &TypeState, e: &Expr, post: &ConstraintSet) -> Option<TypeResult> {
        let mut mentioned = BTreeSet::new();
        post.vars(&mut mentioned);
        let (mut kept, mut frame) = (ConstraintSet::new(), Vec::new());
        for (var, record) in state.pre.iter() {
            if mentioned.contains(var) {
                kept.insert(var.clone(), record.clone());
            } else {
                frame.push((var.clone(), record.clone()));
            }
        }
        if frame.is_empty() {
            return None;
        }
        let mut r = self.synthesize(&state.with_pre(kept), e).ok()?;
        for (var, record) in frame {
            r.post.insert(var, record);
        }
        Some(r)
    }

    /// When weakening, a `never`-typed subterm ends checking of its
    /// continuation: the derivation may pick any type and constraints after
    /// a break, so code that cannot run needs no re-typing.
    fn unreachable_after(&self, r: &TypeResult) -> bool {
        self.weaken_premises && r.ty == TypeExpr::Never
    }

    /// Branch join. When weakening, a branch that cannot complete
    /// contributes nothing to the joined constraints.
    fn join(&self, r1: TypeResult, r2: TypeResult) -> TypeResult {
        match (self.unreachable_after(&r1), self.unreachable_after(&r2)) {
            (true, _) => r2,
            (_, true) => r1,
            _ => join_branches(r1, r2),
        }
    }

    pub fn into_recording(self) -> Option<Recording> {
        self.recording.map(|mut r| {
            r.final_counter = self.next_fresh;
            r
        })
    }

    /// Next `X<n>` not mentioned by the state, or the recorded variable of
    /// the site when replaying.
    pub fn fresh_var(&mut self, state: &TypeState, site: Span) -> TypeVar {
        if let Some(v) = self.site_vars.as_ref().and_then(|m| m.get(&site.key())) {
            return v.clone();
        }
        let in_use = state.vars_in_use();
        loop {
            let cand = TypeVar(format!("X{}", self.next_fresh));
            self.next_fresh += 1;
            if !in_use.contains(&cand) {
                return cand;
            }
        }
    }

    pub fn synthesize(&mut self, state: &TypeState, e: &Expr) -> TResult {
        if let Some(rec) = self.recording.as_mut() {
            rec.pre_states.entry(e.span.key()).or_insert_with(|| state.pre.clone());
        }
        let span = e.span;
        let pre = &state.pre;
        match &e.kind {
            ExprKind::Var(x) => match state.env.get(x) {
                Some(t) => Ok(TypeResult::new(t.clone(), pre.clone())),
                None => {
                    Err(TypeError::new(TypeErrorKind::UnboundVariable, "v-access", span, format!("`{x}` is not bound")))
                }
            },
            ExprKind::Loc(l) => match state.locs.get(l) {
                Some(t) => Ok(TypeResult::new(t.clone(), pre.clone())),
                None => {
                    Err(TypeError::new(TypeErrorKind::UnboundLocation, "l-access", span, format!("{l} has no type")))
                }
            },
            ExprKind::Const(c) => Ok(TypeResult::new(TypeExpr::Base(c.base_type()), pre.clone())),
            ExprKind::New => {
                let var = self.fresh_var(state, span);
                if let Some(rec) = self.recording.as_mut() {
                    rec.new_sites.entry(span.key()).or_insert_with(|| var.clone());
                }
                let mut post = pre.clone();
                post.insert(var.clone(), RecordType::new());
                Ok(TypeResult::new(TypeExpr::Var(var), post))
            }
            ExprKind::GetField { target, field } => {
                let Some(var) = subject_var(state, target, "access", span)? else {
                    return Ok(TypeResult::new(TypeExpr::Never, pre.clone()));
                };
                let record = pre.get(&var).ok_or_else(|| {
                    TypeError::new(TypeErrorKind::MissingField, "access", span, format!("nothing is known about {var}"))
                })?;
                let t = record.get(field).ok_or_else(|| {
                    TypeError::new(
                        TypeErrorKind::MissingField,
                        "access",
                        span,
                        format!("{var} <| {record} has no field `{field}`"),
                    )
                })?;
                if !is_definite(t) {
                    return Err(TypeError::new(
                        TypeErrorKind::IndefiniteFieldType,
                        "access",
                        span,
                        format!("field `{field}` of {var} has type {t}, which may be absent"),
                    ));
                }
                Ok(TypeResult::new(t.clone(), pre.clone()))
            }
            ExprKind::SetField { target, field, value } => {
                let var = subject_var(state, target, "update", span)?;
                let TypeResult { ty, post } = self.synthesize(state, value)?;
                let Some(var) = var.filter(|_| !(self.weaken_premises && ty == TypeExpr::Never)) else {
                    return Ok(TypeResult::new(TypeExpr::Never, post));
                };
                let mut record = post.get(&var).cloned().ok_or_else(|| {
                    TypeError::new(
                        TypeErrorKind::MissingField,
                        "update-fresh",
                        span,
                        format!("nothing is known about {var}"),
                    )
                })?;
                record.fields.insert(field.clone(), normalize_type(&ty));
                let mut post = post;
                post.insert(var, record);
                Ok(TypeResult::new(ty, post))
            }
            ExprKind::Let { name, bound, body } => {
                let first = self.synthesize(state, bound)?;
                if self.unreachable_after(&first) {
                    return Ok(first);
                }
                self.synthesize(&state.bind(first.post, name, first.ty), body)
            }
            ExprKind::If { cond, then_branch, else_branch } => {
                let c = self.synthesize(state, cond)?;
                if !entails_type(&c.ty, &TypeExpr::bool()) {
                    return Err(TypeError::new(
                        TypeErrorKind::ConditionNotBool,
                        "if",
                        cond.span,
                        format!("condition has type {}", c.ty),
                    ));
                }
                if self.unreachable_after(&c) {
                    return Ok(c);
                }
                let inner = state.with_pre(c.post);
                let r1 = self.synthesize(&inner, then_branch)?;
                let r2 = self.synthesize(&inner, else_branch)?;
                Ok(self.join(r1, r2))
            }
            ExprKind::IfHasAttr { subject, attr, then_branch, else_branch } => {
                let Some(var) = subject_var(state, subject, "ifhasattr", span)? else {
                    let r1 = self.synthesize(state, then_branch)?;
                    let r2 = self.synthesize(state, else_branch)?;
                    return Ok(self.join(r1, r2));
                };
                let pre = &self.weaken_for_branch(pre, &var, attr, then_branch.span);
                let filtered = filter_attr(pre, &var, attr).map_err(|err| {
                    TypeError::new(TypeErrorKind::FilterEmptiesField, "ifhasattr", span, err.to_string())
                })?;
                let r1 = self.synthesize(&state.with_pre(filtered), then_branch)?;
                let r2 = self.synthesize(state, else_branch)?;
                Ok(self.join(r1, r2))
            }
            ExprKind::Func { params, annotation, body } => {
                self.check_function(state, params, annotation, body, span)?;
                Ok(TypeResult::new(TypeExpr::arrow(annotation.clone()), pre.clone()))
            }
            ExprKind::Apply { callee, args } => {
                let f = self.synthesize(state, callee)?;
                if self.unreachable_after(&f) {
                    return Ok(f);
                }
                let arrow = match &f.ty {
                    TypeExpr::Arrow(a) => (**a).clone(),
                    TypeExpr::Never => {
                        let mut current = f.post;
                        for arg in args {
                            current = self.synthesize(&state.with_pre(current), arg)?.post;
                        }
                        return Ok(TypeResult::new(TypeExpr::Never, current));
                    }
                    other => {
                        return Err(TypeError::new(
                            TypeErrorKind::NotAFunction,
                            "fapp",
                            callee.span,
                            format!("callee has type {other}"),
                        ))
                    }
                };
                if arrow.params.len() != args.len() {
                    return Err(TypeError::new(
                        TypeErrorKind::ArityMismatch,
                        "fapp",
                        span,
                        format!("function expects {} argument(s), got {}", arrow.params.len(), args.len()),
                    ));
                }
                let mut current = f.post;
                for (arg, expected) in args.iter().zip(&arrow.params) {
                    let r = self.synthesize(&state.with_pre(current), arg)?;
                    if self.unreachable_after(&r) {
                        return Ok(r);
                    }
                    if !entails_type(&r.ty, expected) {
                        return Err(TypeError::new(
                            TypeErrorKind::AnnotationMismatch,
                            "fapp",
                            arg.span,
                            format!("argument has type {}, parameter expects {expected}", r.ty),
                        ));
                    }
                    current = r.post;
                }
                if !self.premise_holds(&current, &arrow.pre) {
                    return Err(TypeError::new(
                        TypeErrorKind::CallPreconditionFailure,
                        "fapp",
                        span,
                        format!("constraints {current} do not entail precondition {}", arrow.pre),
                    ));
                }
                Ok(TypeResult::new(arrow.result.clone(), update(&current, &arrow.post)))
            }
            ExprKind::Prim { op, args } => {
                let (params, result) = op.signature();
                if params.len() != args.len() {
                    return Err(TypeError::new(
                        TypeErrorKind::PrimopSignatureMismatch,
                        "op",
                        span,
                        format!("`{}` takes {} argument(s), got {}", op.name(), params.len(), args.len()),
                    ));
                }
                let mut current = pre.clone();
                for (arg, expected) in args.iter().zip(params) {
                    let r = self.synthesize(&state.with_pre(current), arg)?;
                    if self.unreachable_after(&r) {
                        return Ok(r);
                    }
                    if !entails_type(&r.ty, &TypeExpr::Base(*expected)) {
                        return Err(TypeError::new(
                            TypeErrorKind::PrimopSignatureMismatch,
                            "op",
                            arg.span,
                            format!("`{}` expects {}, got {}", op.name(), expected.name(), r.ty),
                        ));
                    }
                    current = r.post;
                }
                Ok(TypeResult::new(TypeExpr::Base(result), current))
            }
            ExprKind::Label { label, annotation, body } => {
                if !annotation.params.is_empty() || !annotation.pre.is_empty() {
                    return Err(TypeError::new(
                        TypeErrorKind::AnnotationMismatch,
                        "label",
                        span,
                        "label annotations take no parameters and an empty precondition",
                    ));
                }
                if self.weaken_premises {
                    if let Some(framed) = self.frame_label(state, e, &annotation.post) {
                        return Ok(framed);
                    }
                }
                let inner = state.bind_label(label, annotation.clone());
                let r = self.synthesize(&inner, body)?;
                let exits_by_break = self.unreachable_after(&r);
                if !exits_by_break
                    && (!entails_type(&r.ty, &annotation.result) || !self.premise_holds(&r.post, &annotation.post))
                {
                    return Err(TypeError::new(
                        TypeErrorKind::LabelPostconditionFailure,
                        "label",
                        span,
                        format!(
                            "body yields {} with {}, label declares {} with {}",
                            r.ty, r.post, annotation.result, annotation.post
                        ),
                    ));
                }
                Ok(TypeResult::new(annotation.result.clone(), annotation.post.clone()))
            }
            ExprKind::Break { label, arg } => {
                let target = match state.labels.get(label) {
                    Some(a) => a.clone(),
                    None => {
                        return Err(TypeError::new(
                            TypeErrorKind::UnboundVariable,
                            "break",
                            span,
                            format!("no label `{label}` in scope"),
                        ))
                    }
                };
                let r = self.synthesize(state, arg)?;
                if self.unreachable_after(&r) {
                    return Ok(r);
                }
                if !entails_type(&r.ty, &target.result) || !self.premise_holds(&r.post, &target.post) {
                    return Err(TypeError::new(
                        TypeErrorKind::BreakPostconditionFailure,
                        "break",
                        span,
                        format!(
                            "break yields {} with {}, label `{label}` expects {} with {}",
                            r.ty, r.post, target.result, target.post
                        ),
                    ));
                }
                Ok(TypeResult::new(TypeExpr::Never, pre.clone()))
            }
        }
    }

    fn check_function(
        &mut self,
        state: &TypeState,
        params: &[Ident],
        annotation: &ArrowType,
        body: &Expr,
        span: Span,
    ) -> Result<(), TypeError> {
        if params.len() != annotation.params.len() {
            return Err(TypeError::new(
                TypeErrorKind::ArityMismatch,
                "fdecl",
                span,
                format!("{} parameter(s) but the annotation declares {}", params.len(), annotation.params.len()),
            ));
        }
        let mut env = state.env.clone();
        for (p, t) in params.iter().zip(&annotation.params) {
            env.insert(p.clone(), t.clone());
        }
        // Labels do not reach into function bodies: the function may outlive them.
        let inner = TypeState { pre: annotation.pre.clone(), env, locs: state.locs.clone(), labels: BTreeMap::new() };
        let r = self.synthesize(&inner, body)?;
        if !entails_type(&r.ty, &annotation.result) {
            return Err(TypeError::new(
                TypeErrorKind::AnnotationMismatch,
                "fdecl",
                body.span,
                format!("body has type {}, annotation declares {}", r.ty, annotation.result),
            ));
        }
        if !self.premise_holds(&r.post, &annotation.post) {
            return Err(TypeError::new(
                TypeErrorKind::AnnotationMismatch,
                "fdecl",
                body.span,
                format!("body ends with {}, which does not entail postcondition {}", r.post, annotation.post),
            ));
        }
        Ok(())
    }
}

/// The object variable of a subject, or `None` when the subject has type
/// `never` and the surrounding code cannot run.
fn subject_var(
    state: &TypeState,
    subject: &Subject,
    rule: &'static str,
    span: Span,
) -> Result<Option<TypeVar>, TypeError> {
    let t =
        match subject {
            Subject::Var(x) => state.env.get(x).ok_or_else(|| {
                TypeError::new(TypeErrorKind::UnboundVariable, rule, span, format!("`{x}` is not bound"))
            })?,
            Subject::Loc(l) => state.locs.get(l).ok_or_else(|| {
                TypeError::new(TypeErrorKind::UnboundLocation, rule, span, format!("{l} has no type"))
            })?,
        };
    match t {
        TypeExpr::Var(v) => Ok(Some(v.clone())),
        TypeExpr::Never => Ok(None),
        other => Err(TypeError::new(
            TypeErrorKind::NotAnObjectVariable,
            rule,
            span,
            format!("`{subject}` has type {other}, not an object type variable"),
        )),
    }
}

/// Joins two branch results by weakening: types become their disjunction
/// (identical types stay as they are, `never` is absorbed) and constraint
/// sets are merged.
pub fn join_branches(r1: TypeResult, r2: TypeResult) -> TypeResult {
    let ty = match (&r1.ty, &r2.ty) {
        (TypeExpr::Never, t) | (t, TypeExpr::Never) => t.clone(),
        (a, b) if type_equal(a, b) => normalize_type(a),
        (a, b) => TypeExpr::or([a.clone(), b.clone()]),
    };
    TypeResult::new(ty, merge(&r1.post, &r2.post))
}

pub fn synthesize(state: &TypeState, e: &Expr) -> TResult {
    Checker::new().synthesize(state, e)
}

pub fn typecheck_program(e: &Expr) -> TResult {
    Checker::new().synthesize(&TypeState::empty(), e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn check(src: &str) -> TResult {
        typecheck_program(&parse_program(src).unwrap())
    }

    #[test]
    fn new_gets_fresh_variable() {
        let r = check("new").unwrap();
        assert_eq!(r.ty, TypeExpr::var("X0"));
        assert_eq!(r.post, ConstraintSet::new().with("X0", RecordType::new()));
    }

    #[test]
    fn update_fresh_extends_record() {
        let r = check("let x = new in x.a := 1").unwrap();
        assert_eq!(r.ty, TypeExpr::int());
        assert_eq!(r.post, ConstraintSet::new().with("X0", RecordType::new().with("a", TypeExpr::int())));
    }

    #[test]
    fn update_old_forgets_previous_type() {
        let r = check("let x = new in let _u = x.a := 1 in x.a := \"s\"").unwrap();
        assert_eq!(r.post, ConstraintSet::new().with("X0", RecordType::new().with("a", TypeExpr::str())));
    }

    #[test]
    fn indefinite_access_is_rejected() {
        let pre = ConstraintSet::new()
            .with("X", RecordType::new().with("a", TypeExpr::or([TypeExpr::int(), TypeExpr::Bottom])));
        let mut env = TypeEnv::new();
        env.insert("x".into(), TypeExpr::var("X"));
        let err = synthesize(&TypeState::new(pre, env, LocEnv::new()), &parse_program("x.a").unwrap()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::IndefiniteFieldType);
        assert_eq!(err.rule, "access");
    }

    #[test]
    fn join_examples() {
        let psi = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::int()));
        let j =
            join_branches(TypeResult::new(TypeExpr::int(), psi.clone()), TypeResult::new(TypeExpr::int(), psi.clone()));
        assert_eq!(j, TypeResult::new(TypeExpr::int(), psi.clone()));

        let j = join_branches(
            TypeResult::new(TypeExpr::int(), psi.clone()),
            TypeResult::new(TypeExpr::str(), ConstraintSet::new().with("X", RecordType::new())),
        );
        assert_eq!(j.ty, TypeExpr::or([TypeExpr::int(), TypeExpr::str()]));
        assert_eq!(
            j.post,
            ConstraintSet::new()
                .with("X", RecordType::new().with("a", TypeExpr::or([TypeExpr::int(), TypeExpr::Bottom])))
        );

        let other = ConstraintSet::new().with("Y", RecordType::new());
        let j = join_branches(
            TypeResult::new(TypeExpr::Never, psi.clone()),
            TypeResult::new(TypeExpr::int(), other.clone()),
        );
        assert_eq!(j, TypeResult::new(TypeExpr::int(), merge(&psi, &other)));
    }

    #[test]
    fn program_examples() {
        assert_eq!(check("5").unwrap(), TypeResult::new(TypeExpr::int(), ConstraintSet::new()));
        let err = check("let x = new in ifhasattr(x,a) then x.a else 0").unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::MissingField);
        assert_eq!(
            check("label n : [ ]( ) -> int [ ] { break n 7 }").unwrap(),
            TypeResult::new(TypeExpr::int(), ConstraintSet::new())
        );
    }

    #[test]
    fn ifhasattr_filters_true_branch() {
        let src = "let x = new in let _u = (if true then x.a := 1 else 0) in \
                   ifhasattr(x, a) then add(x.a, 1) else 0";
        let r = check(src).unwrap();
        assert_eq!(r.ty, TypeExpr::int());
        let bad = "let x = new in let _u = (if true then x.a := 1 else 0) in add(x.a, 1)";
        assert_eq!(check(bad).unwrap_err().kind, TypeErrorKind::IndefiniteFieldType);
    }

    #[test]
    fn function_annotations_are_checked() {
        assert!(check("func(x): [ ](int) -> int [ ] { add(x, 1) }(2)").is_ok());
        assert_eq!(check("func(x): [ ](int) -> bool [ ] { x }").unwrap_err().kind, TypeErrorKind::AnnotationMismatch);
        assert_eq!(check("func(x): [ ](int) -> int [ ] { x }(1, 2)").unwrap_err().kind, TypeErrorKind::ArityMismatch);
        assert_eq!(
            check("func(x): [ ](int) -> int [ ] { x }(true)").unwrap_err().kind,
            TypeErrorKind::AnnotationMismatch
        );
        assert_eq!(check("5(1)").unwrap_err().kind, TypeErrorKind::NotAFunction);
    }

    #[test]
    fn call_checks_precondition_and_applies_postcondition() {
        let ok = "let o = new in let _u = o.a := 1 in \
                  let f = func(): [X0 <| {a: int}]() -> str [X0 <| {a: str}] { o.a := \"s\" } in \
                  let _v = f() in o.a";
        let r = check(ok).unwrap();
        assert_eq!(r.ty, TypeExpr::str());
        let bad = "let o = new in let f = func(): [X0 <| {a: int}]() -> int [X0 <| {a: int}] { o.a } in f()";
        assert_eq!(check(bad).unwrap_err().kind, TypeErrorKind::CallPreconditionFailure);
    }

    #[test]
    fn break_result_must_match_label() {
        assert_eq!(
            check("label n : [ ]( ) -> int [ ] { break n true }").unwrap_err().kind,
            TypeErrorKind::BreakPostconditionFailure
        );
        assert_eq!(
            check("label n : [ ]( ) -> int [ ] { true }").unwrap_err().kind,
            TypeErrorKind::LabelPostconditionFailure
        );
        assert_eq!(check("break n 1").unwrap_err().kind, TypeErrorKind::UnboundVariable);
        assert_eq!(
            check("label n : [ ]( ) -> int [ ] { let u = n in 1 }").unwrap_err().kind,
            TypeErrorKind::UnboundVariable
        );
        let escaping = "label n : [ ]( ) -> int [ ] { func(): [ ]() -> int [ ] { break n 1 }() }";
        assert_eq!(check(escaping).unwrap_err().kind, TypeErrorKind::UnboundVariable);
    }

    #[test]
    fn never_subjects_are_dead_code() {
        let r = check("label n : [ ]( ) -> int [ ] { let y = break n 1 in y.a := y.b }").unwrap();
        assert_eq!(r.ty, TypeExpr::int());
        let r = check("label n : [ ]( ) -> int [ ] { let f = break n 1 in f(true) }").unwrap();
        assert_eq!(r.ty, TypeExpr::int());
        let r = check("label n : [ ]( ) -> int [ ] { let y = break n 1 in ifhasattr(y, a) then 1 else 2 }").unwrap();
        assert_eq!(r.ty, TypeExpr::int());
    }

    #[test]
    fn fresh_variables_skip_names_in_use() {
        let mut env = TypeEnv::new();
        env.insert("y".into(), TypeExpr::var("X0"));
        let r = synthesize(&TypeState::new(ConstraintSet::new(), env, LocEnv::new()), &Expr::new_object()).unwrap();
        assert_eq!(r.ty, TypeExpr::var("X1"));
    }

    #[test]
    fn primop_signatures() {
        assert_eq!(check("add(1, 2)").unwrap().ty, TypeExpr::int());
        assert_eq!(check("lt(1, 2)").unwrap().ty, TypeExpr::bool());
        assert_eq!(check("add(1, \"s\")").unwrap_err().kind, TypeErrorKind::PrimopSignatureMismatch);
        assert_eq!(check("not(1, 2)").unwrap_err().kind, TypeErrorKind::PrimopSignatureMismatch);
        assert_eq!(check("if 1 then 2 else 3").unwrap_err().kind, TypeErrorKind::ConditionNotBool);
    }
}
