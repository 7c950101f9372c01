#![allow(dead_code)]

use proptest::prelude::*;

use luc::*;

pub const NAMES: [&str; 4] = ["x", "y", "z", "x_0"];
pub const FIELDS: [&str; 3] = ["a", "b", "c"];
pub const VARS: [&str; 3] = ["X0", "X1", "X2"];

pub fn name() -> impl Strategy<Value = String> {
    prop::sample::select(&NAMES[..]).prop_map(String::from)
}

pub fn field() -> impl Strategy<Value = String> {
    prop::sample::select(&FIELDS[..]).prop_map(String::from)
}

pub fn base() -> impl Strategy<Value = TypeExpr> {
    prop_oneof![Just(TypeExpr::int()), Just(TypeExpr::bool()), Just(TypeExpr::str())]
}

/// Types as written, before normalization: nested and repeated disjunctions allowed.
pub fn raw_type() -> impl Strategy<Value = TypeExpr> {
    let leaf = prop_oneof![
        4 => base(),
        2 => prop::sample::select(&VARS[..]).prop_map(TypeExpr::var),
        2 => Just(TypeExpr::Bottom),
        1 => Just(TypeExpr::Never),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            3 => prop::collection::vec(inner.clone(), 1..4).prop_map(TypeExpr::Or),
            1 => (prop::collection::vec(inner.clone(), 0..2), inner.clone(), small_set(inner))
                .prop_map(|(params, result, post)| TypeExpr::arrow(ArrowType::new(ConstraintSet::new(), params, result, post))),
        ]
    })
}

fn small_set(t: impl Strategy<Value = TypeExpr> + Clone) -> impl Strategy<Value = ConstraintSet> {
    prop::collection::btree_map(prop::sample::select(&VARS[..]), prop::collection::btree_map(field(), t, 0..2), 0..2)
        .prop_map(|m| m.into_iter().map(|(v, fields)| (TypeVar::new(v), RecordType { fields })).collect())
}

pub fn label_annotation() -> ArrowType {
    ArrowType::label(TypeExpr::int(), ConstraintSet::new())
}

pub fn func_annotation(arity: usize) -> ArrowType {
    ArrowType::new(ConstraintSet::new(), vec![TypeExpr::int(); arity], TypeExpr::int(), ConstraintSet::new())
}

pub fn subject(locations: bool) -> impl Strategy<Value = Subject> {
    let loc_weight = u32::from(locations);
    prop_oneof![3 => name().prop_map(Subject::Var), loc_weight => (0u32..3).prop_map(|l| Subject::Loc(LocId(l)))]
}

/// Arbitrary, usually ill-typed, expressions over a small name pool so that
/// shadowing and capture are common.
pub fn expr() -> impl Strategy<Value = Expr> {
    expr_with(true)
}

/// Expressions a user can write: no location literals.
pub fn surface_expr() -> impl Strategy<Value = Expr> {
    expr_with(false)
}

fn expr_with(locations: bool) -> impl Strategy<Value = Expr> {
    let loc_weight = u32::from(locations);
    let leaf = prop_oneof![
        4 => name().prop_map(|x| Expr::var(&x)),
        2 => (-5i64..50).prop_map(Expr::int),
        1 => any::<bool>().prop_map(Expr::bool),
        1 => "[a-z ]{0,4}".prop_map(|s| Expr::str(&s)),
        loc_weight => (0u32..3).prop_map(Expr::loc),
        1 => Just(Expr::new_object()),
    ];
    leaf.prop_recursive(5, 48, 3, move |inner| {
        let op = prop::sample::select(&PrimOp::ALL[..]);
        prop_oneof![
            (name(), inner.clone(), inner.clone()).prop_map(|(x, b, e)| Expr::let_in(&x, b, e)),
            (prop::sample::subsequence(&NAMES[..], 0..3), inner.clone()).prop_map(|(ps, body)| Expr::func(
                &ps,
                func_annotation(ps.len()),
                body
            )),
            (inner.clone(), prop::collection::vec(inner.clone(), 0..3)).prop_map(|(f, args)| Expr::apply(f, args)),
            (op, prop::collection::vec(inner.clone(), 1..3)).prop_map(|(op, args)| Expr::prim(op, args)),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| Expr::if_then_else(c, t, e)),
            (subject(locations), field(), inner.clone(), inner.clone())
                .prop_map(|(s, a, t, e)| Expr::if_has_attr(s, &a, t, e)),
            inner.clone().prop_map(|e| Expr::break_to("n", e)),
            inner.clone().prop_map(|e| Expr::label("n", label_annotation(), e)),
            (subject(locations), field(), inner.clone()).prop_map(|(s, a, v)| Expr::set_field(s, &a, v)),
            (subject(locations), field()).prop_map(|(s, a)| Expr::get_field(s, &a)),
        ]
    })
}

/// Values that may be substituted: names (open values), locations, constants
/// and functions whose bodies mention free names.
pub fn value() -> impl Strategy<Value = Expr> {
    prop_oneof![
        name().prop_map(|x| Expr::var(&x)),
        (0u32..3).prop_map(Expr::loc),
        (-5i64..5).prop_map(Expr::int),
        (prop::sample::subsequence(&NAMES[..], 0..2), expr()).prop_map(|(ps, body)| Expr::func(
            &ps,
            func_annotation(ps.len()),
            body
        )),
    ]
}

pub fn corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// `.luc` files directly inside `dir`, sorted.
pub fn programs_in(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| entry.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "luc"))
        .collect();
    files.sort();
    files
}

/// Value of a `# key: value` header line.
pub fn header(text: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}: ");
    text.lines().find_map(|l| l.strip_prefix(&prefix)).map(|v| v.trim().to_string())
}

pub struct CorpusProgram {
    pub path: std::path::PathBuf,
    pub text: String,
}

impl CorpusProgram {
    pub fn name(&self) -> String {
        self.path.file_name().unwrap().to_string_lossy().into_owned()
    }

    pub fn expected_error(&self) -> Option<String> {
        header(&self.text, "expect-error")
    }
}

pub fn corpus() -> Vec<CorpusProgram> {
    programs_in(&corpus_dir())
        .into_iter()
        .map(|path| CorpusProgram { text: std::fs::read_to_string(&path).unwrap(), path })
        .collect()
}
