//! Abstract syntax: expressions, values, types, constraint sets and stores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Ident = String;

/// Byte range plus the 1-based line/column of its start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span { start, end, line, col }
    }

    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end.max(self.end), line: self.line, col: self.col }
    }

    pub fn key(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocId(pub u32);

impl fmt::Display for LocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Const {
    Int(i64),
    Bool(bool),
    Str(String),
}

impl Const {
    pub fn base_type(&self) -> BaseType {
        match self {
            Const::Int(_) => BaseType::Int,
            Const::Bool(_) => BaseType::Bool,
            Const::Str(_) => BaseType::Str,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseType {
    Int,
    Bool,
    Str,
}

impl BaseType {
    pub const ALL: [BaseType; 3] = [BaseType::Int, BaseType::Bool, BaseType::Str];

    pub fn name(self) -> &'static str {
        match self {
            BaseType::Int => "int",
            BaseType::Bool => "bool",
            BaseType::Str => "str",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimOp {
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
    Not,
}

impl PrimOp {
    pub const ALL: [PrimOp; 6] = [PrimOp::Add, PrimOp::Sub, PrimOp::Mul, PrimOp::Eq, PrimOp::Lt, PrimOp::Not];

    pub fn name(self) -> &'static str {
        match self {
            PrimOp::Add => "add",
            PrimOp::Sub => "sub",
            PrimOp::Mul => "mul",
            PrimOp::Eq => "eq",
            PrimOp::Lt => "lt",
            PrimOp::Not => "not",
        }
    }

    pub fn from_name(name: &str) -> Option<PrimOp> {
        PrimOp::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Parameter and result base types of the builtin.
    pub fn signature(self) -> (&'static [BaseType], BaseType) {
        use BaseType::*;
        match self {
            PrimOp::Add | PrimOp::Sub | PrimOp::Mul => (&[Int, Int], Int),
            PrimOp::Eq | PrimOp::Lt => (&[Int, Int], Bool),
            PrimOp::Not => (&[Bool], Bool),
        }
    }
}

/// Subject of a field access, field update or attribute test.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Subject {
    Var(Ident),
    Loc(LocId),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

/// Structural equality; spans are ignored.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Var(Ident),
    Const(Const),
    Func { params: Vec<Ident>, annotation: ArrowType, body: Box<Expr> },
    Loc(LocId),
    Let { name: Ident, bound: Box<Expr>, body: Box<Expr> },
    Apply { callee: Box<Expr>, args: Vec<Expr> },
    Prim { op: PrimOp, args: Vec<Expr> },
    If { cond: Box<Expr>, then_branch: Box<Expr>, else_branch: Box<Expr> },
    IfHasAttr { subject: Subject, attr: Ident, then_branch: Box<Expr>, else_branch: Box<Expr> },
    Break { label: Ident, arg: Box<Expr> },
    Label { label: Ident, annotation: ArrowType, body: Box<Expr> },
    New,
    SetField { target: Subject, field: Ident, value: Box<Expr> },
    GetField { target: Subject, field: Ident },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Node with a default span, for programmatic construction.
    pub fn bare(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default() }
    }

    pub fn var(name: &str) -> Self {
        Expr::bare(ExprKind::Var(name.to_string()))
    }

    pub fn int(n: i64) -> Self {
        Expr::bare(ExprKind::Const(Const::Int(n)))
    }

    pub fn bool(b: bool) -> Self {
        Expr::bare(ExprKind::Const(Const::Bool(b)))
    }

    pub fn str(s: &str) -> Self {
        Expr::bare(ExprKind::Const(Const::Str(s.to_string())))
    }

    pub fn loc(l: u32) -> Self {
        Expr::bare(ExprKind::Loc(LocId(l)))
    }

    pub fn new_object() -> Self {
        Expr::bare(ExprKind::New)
    }

    pub fn let_in(name: &str, bound: Expr, body: Expr) -> Self {
        Expr::bare(ExprKind::Let { name: name.to_string(), bound: Box::new(bound), body: Box::new(body) })
    }

    pub fn func(params: &[&str], annotation: ArrowType, body: Expr) -> Self {
        Expr::bare(ExprKind::Func {
            params: params.iter().map(|p| p.to_string()).collect(),
            annotation,
            body: Box::new(body),
        })
    }

    pub fn apply(callee: Expr, args: Vec<Expr>) -> Self {
        Expr::bare(ExprKind::Apply { callee: Box::new(callee), args })
    }

    pub fn prim(op: PrimOp, args: Vec<Expr>) -> Self {
        Expr::bare(ExprKind::Prim { op, args })
    }

    pub fn if_then_else(cond: Expr, then_branch: Expr, else_branch: Expr) -> Self {
        Expr::bare(ExprKind::If {
            cond: Box::new(cond),
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        })
    }

    pub fn if_has_attr(subject: Subject, attr: &str, then_branch: Expr, else_branch: Expr) -> Self {
        Expr::bare(ExprKind::IfHasAttr {
            subject,
            attr: attr.to_string(),
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        })
    }

    pub fn break_to(label: &str, arg: Expr) -> Self {
        Expr::bare(ExprKind::Break { label: label.to_string(), arg: Box::new(arg) })
    }

    pub fn label(label: &str, annotation: ArrowType, body: Expr) -> Self {
        Expr::bare(ExprKind::Label { label: label.to_string(), annotation, body: Box::new(body) })
    }

    pub fn set_field(target: Subject, field: &str, value: Expr) -> Self {
        Expr::bare(ExprKind::SetField { target, field: field.to_string(), value: Box::new(value) })
    }

    pub fn get_field(target: Subject, field: &str) -> Self {
        Expr::bare(ExprKind::GetField { target, field: field.to_string() })
    }

    /// Value forms: variables, constants, function values and locations.
    pub fn is_value(&self) -> bool {
        matches!(self.kind, ExprKind::Var(_) | ExprKind::Const(_) | ExprKind::Func { .. } | ExprKind::Loc(_))
    }

    /// Closed value forms, i.e. what evaluation may finish with.
    pub fn is_closed_value(&self) -> bool {
        matches!(self.kind, ExprKind::Const(_) | ExprKind::Func { .. } | ExprKind::Loc(_))
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn contains_location(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e.kind, ExprKind::Loc(_))
                || matches!(&e.kind, ExprKind::SetField { target: Subject::Loc(_), .. })
                || matches!(&e.kind, ExprKind::GetField { target: Subject::Loc(_), .. })
                || matches!(&e.kind, ExprKind::IfHasAttr { subject: Subject::Loc(_), .. })
            {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Var(_) | ExprKind::Const(_) | ExprKind::Loc(_) | ExprKind::New | ExprKind::GetField { .. } => {
                vec![]
            }
            ExprKind::Func { body, .. } | ExprKind::Label { body, .. } => vec![body],
            ExprKind::Let { bound, body, .. } => vec![bound, body],
            ExprKind::Apply { callee, args } => std::iter::once(&**callee).chain(args.iter()).collect(),
            ExprKind::Prim { args, .. } => args.iter().collect(),
            ExprKind::If { cond, then_branch, else_branch } => vec![cond, then_branch, else_branch],
            ExprKind::IfHasAttr { then_branch, else_branch, .. } => vec![then_branch, else_branch],
            ExprKind::Break { arg, .. } => vec![arg],
            ExprKind::SetField { value, .. } => vec![value],
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

fn collect_free(e: &Expr, bound: &mut Vec<Ident>, out: &mut BTreeSet<Ident>) {
    let subject = |s: &Subject, bound: &Vec<Ident>, out: &mut BTreeSet<Ident>| {
        if let Subject::Var(x) = s {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
    };
    match &e.kind {
        ExprKind::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        ExprKind::Const(_) | ExprKind::Loc(_) | ExprKind::New => {}
        ExprKind::Func { params, body, .. } => {
            let n = bound.len();
            bound.extend(params.iter().cloned());
            collect_free(body, bound, out);
            bound.truncate(n);
        }
        ExprKind::Let { name, bound: b, body } => {
            collect_free(b, bound, out);
            bound.push(name.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        ExprKind::Label { body, .. } => collect_free(body, bound, out),
        ExprKind::Apply { callee, args } => {
            collect_free(callee, bound, out);
            for a in args {
                collect_free(a, bound, out);
            }
        }
        ExprKind::Prim { args, .. } => {
            for a in args {
                collect_free(a, bound, out);
            }
        }
        ExprKind::If { cond, then_branch, else_branch } => {
            collect_free(cond, bound, out);
            collect_free(then_branch, bound, out);
            collect_free(else_branch, bound, out);
        }
        ExprKind::IfHasAttr { subject: s, then_branch, else_branch, .. } => {
            subject(s, bound, out);
            collect_free(then_branch, bound, out);
            collect_free(else_branch, bound, out);
        }
        ExprKind::Break { arg, .. } => collect_free(arg, bound, out),
        ExprKind::SetField { target, value, .. } => {
            subject(target, bound, out);
            collect_free(value, bound, out);
        }
        ExprKind::GetField { target, .. } => subject(target, bound, out),
    }
}

/// Capture-avoiding substitution of the value `v` for free occurrences of `x`.
///
/// Let binders and function parameters shadow `x`; label names live in their
/// own namespace. When a binder would capture a free variable of `v`, the
/// binder is renamed first.
pub fn substitute(e: &Expr, x: &str, v: &Expr) -> Expr {
    let fv = v.free_vars();
    subst(e, x, v, &fv)
}

/// Simultaneous substitution for several distinct variables.
pub fn substitute_all(e: &Expr, bindings: &[(Ident, Expr)]) -> Expr {
    bindings.iter().fold(e.clone(), |acc, (x, v)| substitute(&acc, x, v))
}

fn subst_subject(s: &Subject, x: &str, v: &Expr) -> Subject {
    match s {
        Subject::Var(y) if y == x => match &v.kind {
            ExprKind::Loc(l) => Subject::Loc(*l),
            ExprKind::Var(z) => Subject::Var(z.clone()),
            // A non-object value in subject position: keep the name, evaluation gets stuck on it.
            _ => s.clone(),
        },
        _ => s.clone(),
    }
}

fn fresh_name(base: &str, avoid: &BTreeSet<Ident>) -> Ident {
    (0..).map(|i| format!("{base}_{i}")).find(|cand| !avoid.contains(cand)).expect("unbounded supply")
}

/// Renames binder `name` within `body` if it would capture something free in the value.
fn rebind(name: &Ident, body: &Expr, fv: &BTreeSet<Ident>) -> (Ident, Expr) {
    if !fv.contains(name) {
        return (name.clone(), body.clone());
    }
    let mut avoid = fv.clone();
    avoid.extend(body.free_vars());
    avoid.insert(name.clone());
    let renamed = fresh_name(name, &avoid);
    let body = substitute(body, name, &Expr::new(ExprKind::Var(renamed.clone()), body.span));
    (renamed, body)
}

fn subst(e: &Expr, x: &str, v: &Expr, fv: &BTreeSet<Ident>) -> Expr {
    let span = e.span;
    let go = |c: &Expr| Box::new(subst(c, x, v, fv));
    let kind = match &e.kind {
        ExprKind::Var(y) if y == x => return Expr::new(v.kind.clone(), span),
        ExprKind::Var(_) | ExprKind::Const(_) | ExprKind::Loc(_) | ExprKind::New => e.kind.clone(),
        ExprKind::Func { params, annotation, body } => {
            if params.iter().any(|p| p == x) || !body.free_vars().contains(x) {
                e.kind.clone()
            } else {
                let mut params = params.clone();
                let mut body = (**body).clone();
                for p in params.iter_mut() {
                    let (np, nb) = rebind(p, &body, fv);
                    *p = np;
                    body = nb;
                }
                ExprKind::Func { params, annotation: annotation.clone(), body: Box::new(subst(&body, x, v, fv)) }
            }
        }
        ExprKind::Let { name, bound, body } => {
            let bound = go(bound);
            if name == x || !body.free_vars().contains(x) {
                ExprKind::Let { name: name.clone(), bound, body: body.clone() }
            } else {
                let (name, body) = rebind(name, body, fv);
                ExprKind::Let { name, bound, body: Box::new(subst(&body, x, v, fv)) }
            }
        }
        ExprKind::Label { label, annotation, body } => {
            ExprKind::Label { label: label.clone(), annotation: annotation.clone(), body: go(body) }
        }
        ExprKind::Apply { callee, args } => {
            ExprKind::Apply { callee: go(callee), args: args.iter().map(|a| subst(a, x, v, fv)).collect() }
        }
        ExprKind::Prim { op, args } => {
            ExprKind::Prim { op: *op, args: args.iter().map(|a| subst(a, x, v, fv)).collect() }
        }
        ExprKind::If { cond, then_branch, else_branch } => {
            ExprKind::If { cond: go(cond), then_branch: go(then_branch), else_branch: go(else_branch) }
        }
        ExprKind::IfHasAttr { subject, attr, then_branch, else_branch } => ExprKind::IfHasAttr {
            subject: subst_subject(subject, x, v),
            attr: attr.clone(),
            then_branch: go(then_branch),
            else_branch: go(else_branch),
        },
        ExprKind::Break { label, arg } => ExprKind::Break { label: label.clone(), arg: go(arg) },
        ExprKind::SetField { target, field, value } => {
            ExprKind::SetField { target: subst_subject(target, x, v), field: field.clone(), value: go(value) }
        }
        ExprKind::GetField { target, field } => {
            ExprKind::GetField { target: subst_subject(target, x, v), field: field.clone() }
        }
    };
    Expr::new(kind, span)
}

// ---------------------------------------------------------------------------
// Types

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVar(pub String);

impl TypeVar {
    pub fn new(name: impl Into<String>) -> Self {
        TypeVar(name.into())
    }
}

impl fmt::Display for TypeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `[pre](params) -> result [post]`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrowType {
    pub pre: ConstraintSet,
    pub params: Vec<TypeExpr>,
    pub result: TypeExpr,
    pub post: ConstraintSet,
}

impl ArrowType {
    pub fn new(pre: ConstraintSet, params: Vec<TypeExpr>, result: TypeExpr, post: ConstraintSet) -> Self {
        ArrowType { pre, params, result, post }
    }

    /// The zero-parameter, empty-precondition shape used by labels.
    pub fn label(result: TypeExpr, post: ConstraintSet) -> Self {
        ArrowType { pre: ConstraintSet::new(), params: vec![], result, post }
    }

    pub fn normalized(&self) -> ArrowType {
        ArrowType {
            pre: self.pre.normalized(),
            params: self.params.iter().map(normalize_type).collect(),
            result: normalize_type(&self.result),
            post: self.post.normalized(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Base(BaseType),
    Var(TypeVar),
    Arrow(Box<ArrowType>),
    Or(Vec<TypeExpr>),
    Bottom,
    /// Result of `break`; absorbed by joins. Never produced by the parser.
    Never,
}

impl TypeExpr {
    pub fn int() -> Self {
        TypeExpr::Base(BaseType::Int)
    }

    pub fn bool() -> Self {
        TypeExpr::Base(BaseType::Bool)
    }

    pub fn str() -> Self {
        TypeExpr::Base(BaseType::Str)
    }

    pub fn var(name: &str) -> Self {
        TypeExpr::Var(TypeVar::new(name))
    }

    pub fn arrow(a: ArrowType) -> Self {
        TypeExpr::Arrow(Box::new(a))
    }

    /// Normalized disjunction of the given alternatives.
    pub fn or(parts: impl IntoIterator<Item = TypeExpr>) -> Self {
        normalize_type(&TypeExpr::Or(parts.into_iter().collect()))
    }

    /// Top-level alternatives (a non-disjunction is its own single alternative).
    pub fn disjuncts(&self) -> &[TypeExpr] {
        match self {
            TypeExpr::Or(parts) => parts,
            other => std::slice::from_ref(other),
        }
    }

    pub fn contains_bottom(&self) -> bool {
        self.disjuncts().iter().any(|t| matches!(t, TypeExpr::Bottom))
    }

    /// Type variables occurring anywhere, including inside arrow constraint sets.
    pub fn vars(&self, out: &mut BTreeSet<TypeVar>) {
        match self {
            TypeExpr::Var(v) => {
                out.insert(v.clone());
            }
            TypeExpr::Arrow(a) => {
                a.pre.vars(out);
                a.post.vars(out);
                for p in &a.params {
                    p.vars(out);
                }
                a.result.vars(out);
            }
            TypeExpr::Or(parts) => parts.iter().for_each(|p| p.vars(out)),
            TypeExpr::Base(_) | TypeExpr::Bottom | TypeExpr::Never => {}
        }
    }

    pub fn size(&self) -> usize {
        match self {
            TypeExpr::Arrow(a) => {
                1 + a.pre.size() + a.post.size() + a.result.size() + a.params.iter().map(|p| p.size()).sum::<usize>()
            }
            TypeExpr::Or(parts) => 1 + parts.iter().map(|p| p.size()).sum::<usize>(),
            _ => 1,
        }
    }
}

fn flatten_into(t: &TypeExpr, out: &mut Vec<TypeExpr>) {
    match t {
        TypeExpr::Or(parts) => parts.iter().for_each(|p| flatten_into(p, out)),
        other => out.push(normalize_type(other)),
    }
}

/// Canonical form: disjunctions flattened, deduplicated and sorted; `Never`
/// dropped from disjunctions with other members; singleton disjunctions unwrapped.
pub fn normalize_type(t: &TypeExpr) -> TypeExpr {
    match t {
        TypeExpr::Or(_) => {
            let mut leaves = Vec::new();
            flatten_into(t, &mut leaves);
            leaves.sort();
            leaves.dedup();
            if leaves.len() > 1 {
                leaves.retain(|l| !matches!(l, TypeExpr::Never));
            }
            match leaves.len() {
                0 => TypeExpr::Never,
                1 => leaves.pop().unwrap(),
                _ => TypeExpr::Or(leaves),
            }
        }
        TypeExpr::Arrow(a) => TypeExpr::Arrow(Box::new(a.normalized())),
        other => other.clone(),
    }
}

pub fn type_equal(t1: &TypeExpr, t2: &TypeExpr) -> bool {
    normalize_type(t1) == normalize_type(t2)
}

/// `{a: t, ...}`, kept sorted by field name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordType {
    pub fields: BTreeMap<Ident, TypeExpr>,
}

impl RecordType {
    pub fn new() -> Self {
        RecordType::default()
    }

    pub fn with(mut self, field: &str, t: TypeExpr) -> Self {
        self.fields.insert(field.to_string(), normalize_type(&t));
        self
    }

    pub fn get(&self, field: &str) -> Option<&TypeExpr> {
        self.fields.get(field)
    }

    pub fn normalized(&self) -> RecordType {
        RecordType { fields: self.fields.iter().map(|(k, v)| (k.clone(), normalize_type(v))).collect() }
    }
}

impl FromIterator<(Ident, TypeExpr)> for RecordType {
    fn from_iter<I: IntoIterator<Item = (Ident, TypeExpr)>>(iter: I) -> Self {
        RecordType { fields: iter.into_iter().map(|(k, v)| (k, normalize_type(&v))).collect() }
    }
}

/// `X <| {..}, Y <| {..}` with at most one record per variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintSet {
    pub bindings: BTreeMap<TypeVar, RecordType>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        ConstraintSet::default()
    }

    pub fn with(mut self, var: &str, record: RecordType) -> Self {
        self.bindings.insert(TypeVar::new(var), record);
        self
    }

    pub fn get(&self, var: &TypeVar) -> Option<&RecordType> {
        self.bindings.get(var)
    }

    pub fn insert(&mut self, var: TypeVar, record: RecordType) {
        self.bindings.insert(var, record);
    }

    pub fn contains(&self, var: &TypeVar) -> bool {
        self.bindings.contains_key(var)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypeVar, &RecordType)> {
        self.bindings.iter()
    }

    pub fn normalized(&self) -> ConstraintSet {
        ConstraintSet { bindings: self.bindings.iter().map(|(k, v)| (k.clone(), v.normalized())).collect() }
    }

    pub fn vars(&self, out: &mut BTreeSet<TypeVar>) {
        for (k, r) in &self.bindings {
            out.insert(k.clone());
            for t in r.fields.values() {
                t.vars(out);
            }
        }
    }

    pub fn size(&self) -> usize {
        self.bindings.values().map(|r| 1 + r.fields.values().map(|t| 1 + t.size()).sum::<usize>()).sum()
    }
}

impl FromIterator<(TypeVar, RecordType)> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = (TypeVar, RecordType)>>(iter: I) -> Self {
        ConstraintSet { bindings: iter.into_iter().collect() }
    }
}

pub type TypeEnv = BTreeMap<Ident, TypeExpr>;
pub type LocEnv = BTreeMap<LocId, TypeExpr>;

/// A runtime object: field name to value.
pub type Object = BTreeMap<Ident, Expr>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Store {
    pub objects: BTreeMap<LocId, Object>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn get(&self, l: LocId) -> Option<&Object> {
        self.objects.get(&l)
    }

    pub fn contains(&self, l: LocId) -> bool {
        self.objects.contains_key(&l)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn insert(&mut self, l: LocId, o: Object) {
        self.objects.insert(l, o);
    }

    pub fn set_field(&mut self, l: LocId, field: &str, v: Expr) {
        if let Some(o) = self.objects.get_mut(&l) {
            o.insert(field.to_string(), v);
        }
    }

    /// True when every location mentioned by a stored value is allocated.
    pub fn is_closed(&self) -> bool {
        self.objects.values().flat_map(|o| o.values()).all(|v| {
            let mut ok = true;
            v.walk(&mut |e| {
                if let ExprKind::Loc(l) = e.kind {
                    ok &= self.contains(l);
                }
            });
            ok
        })
    }
}
