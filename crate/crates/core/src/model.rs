//! Runtime satisfaction `σ;Σ ⊨ v : t` and `σ;Σ ⊨ Ψ`, and the exact store
//! typing of a store.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::constraints::merge_records;
use crate::syntax::*;
use crate::typeck::{Checker, TypeState};

/// Satisfaction checker. Function values are re-typechecked at most once per
/// (annotation, body) pair and location environment.
#[derive(Debug, Default)]
pub struct Model {
    functions: RefCell<HashMap<String, bool>>,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn satisfies_value(&self, store: &Store, locs: &LocEnv, v: &Expr, t: &TypeExpr) -> bool {
        let t = normalize_type(t);
        if let TypeExpr::Or(parts) = &t {
            return parts.iter().any(|d| self.satisfies_value(store, locs, v, d));
        }
        match (&v.kind, &t) {
            (ExprKind::Const(c), TypeExpr::Base(b)) => c.base_type() == *b,
            (ExprKind::Loc(l), TypeExpr::Var(_)) => store.contains(*l) && locs.get(l).is_some_and(|s| *s == t),
            (ExprKind::Func { annotation, .. }, TypeExpr::Arrow(a)) => {
                type_equal(&TypeExpr::arrow(annotation.clone()), &TypeExpr::Arrow(a.clone()))
                    && self.function_typechecks(locs, v, annotation)
            }
            _ => false,
        }
    }

    fn function_typechecks(&self, locs: &LocEnv, f: &Expr, annotation: &ArrowType) -> bool {
        let key = format!("{f}|{locs:?}");
        if let Some(&known) = self.functions.borrow().get(&key) {
            return known;
        }
        let state = TypeState::new(annotation.pre.clone(), TypeEnv::new(), locs.clone());
        let ok = Checker::new().synthesize(&state, f).is_ok();
        self.functions.borrow_mut().insert(key, ok);
        ok
    }

    /// Every object denoted by a constrained variable meets its record: a
    /// present field satisfies the non-`bot` part of its type, and an absent
    /// field is allowed only when the type admits `bot`. Extra fields are fine.
    pub fn satisfies_constraints(&self, store: &Store, locs: &LocEnv, c: &ConstraintSet) -> bool {
        c.iter().all(|(var, record)| {
            let target = TypeExpr::Var(var.clone());
            locs.iter().filter(|(_, t)| **t == target).all(|(l, _)| {
                let Some(object) = store.get(*l) else {
                    return false;
                };
                record.fields.iter().all(|(field, t)| {
                    let t = normalize_type(t);
                    let present: Vec<TypeExpr> =
                        t.disjuncts().iter().filter(|d| !matches!(d, TypeExpr::Bottom)).cloned().collect();
                    match object.get(field) {
                        Some(v) => !present.is_empty() && self.satisfies_value(store, locs, v, &TypeExpr::or(present)),
                        None => t.contains_bottom(),
                    }
                })
            })
        })
    }
}

pub fn satisfies_value(store: &Store, locs: &LocEnv, v: &Expr, t: &TypeExpr) -> bool {
    Model::new().satisfies_value(store, locs, v, t)
}

pub fn satisfies_constraints(store: &Store, locs: &LocEnv, c: &ConstraintSet) -> bool {
    Model::new().satisfies_constraints(store, locs, c)
}

/// Exact type of a stored value: its base type, its annotation, or the
/// variable of the location it points to.
pub fn value_type(locs: &LocEnv, v: &Expr) -> Option<TypeExpr> {
    match &v.kind {
        ExprKind::Const(c) => Some(TypeExpr::Base(c.base_type())),
        ExprKind::Func { annotation, .. } => Some(TypeExpr::arrow(annotation.clone())),
        ExprKind::Loc(l) => locs.get(l).cloned(),
        _ => None,
    }
}

/// The constraint set that describes `store` exactly under `locs`. Locations
/// sharing a variable have their records merged.
pub fn extract_store_typing(store: &Store, locs: &LocEnv) -> ConstraintSet {
    let mut out = ConstraintSet::new();
    for (l, object) in &store.objects {
        let Some(TypeExpr::Var(var)) = locs.get(l) else {
            continue;
        };
        let record: RecordType =
            object.iter().map(|(f, v)| (f.clone(), value_type(locs, v).unwrap_or(TypeExpr::Bottom))).collect();
        let record = match out.get(var) {
            Some(existing) => merge_records(existing, &record),
            None => record,
        };
        out.insert(var.clone(), record);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_constraints, parse_program, parse_type};

    fn one_object(fields: &[(&str, Expr)]) -> (Store, LocEnv) {
        let mut store = Store::new();
        store.insert(LocId(0), fields.iter().map(|(f, v)| (f.to_string(), v.clone())).collect());
        let mut locs = LocEnv::new();
        locs.insert(LocId(0), TypeExpr::var("X"));
        (store, locs)
    }

    #[test]
    fn constants_and_disjunctions() {
        let (s, l) = (Store::new(), LocEnv::new());
        assert!(satisfies_value(&s, &l, &Expr::int(5), &TypeExpr::int()));
        assert!(satisfies_value(&s, &l, &Expr::int(5), &parse_type("str \\/ int").unwrap()));
        assert!(!satisfies_value(&s, &l, &Expr::int(5), &TypeExpr::str()));
        assert!(!satisfies_value(&s, &l, &Expr::int(5), &TypeExpr::Bottom));
    }

    #[test]
    fn locations_match_their_variable() {
        let (s, l) = one_object(&[]);
        assert!(satisfies_value(&s, &l, &Expr::loc(0), &TypeExpr::var("X")));
        assert!(!satisfies_value(&s, &l, &Expr::loc(0), &TypeExpr::var("Y")));
        assert!(satisfies_value(&s, &l, &Expr::loc(0), &parse_type("Y \\/ X").unwrap()));
    }

    #[test]
    fn functions_need_equal_annotation_and_a_welltyped_body() {
        let (s, l) = (Store::new(), LocEnv::new());
        let f = parse_program("func(x): [ ](int) -> int [ ] { add(x, 1) }").unwrap();
        assert!(satisfies_value(&s, &l, &f, &parse_type("[ ](int) -> int [ ]").unwrap()));
        assert!(!satisfies_value(&s, &l, &f, &parse_type("[ ](str) -> int [ ]").unwrap()));
        let bad = parse_program("func(x): [ ](int) -> int [ ] { true }").unwrap();
        assert!(!satisfies_value(&s, &l, &bad, &parse_type("[ ](int) -> int [ ]").unwrap()));
    }

    #[test]
    fn constraint_examples() {
        let (s, l) = (Store::new(), LocEnv::new());
        assert!(satisfies_constraints(&s, &l, &ConstraintSet::new()));

        let (s, l) = one_object(&[("a", Expr::int(1)), ("b", Expr::int(2))]);
        assert!(satisfies_constraints(&s, &l, &parse_constraints("[X <| {a: int}]").unwrap()));

        let (s, l) = one_object(&[]);
        assert!(satisfies_constraints(&s, &l, &parse_constraints("[X <| {a: int \\/ bot}]").unwrap()));
        assert!(!satisfies_constraints(&s, &l, &parse_constraints("[X <| {a: int}]").unwrap()));
    }

    #[test]
    fn present_field_must_not_be_typed_bot_only() {
        let (s, l) = one_object(&[("a", Expr::int(1))]);
        assert!(!satisfies_constraints(&s, &l, &parse_constraints("[X <| {a: bot}]").unwrap()));
        assert!(satisfies_constraints(&s, &l, &parse_constraints("[X <| {a: int \\/ bot}]").unwrap()));
    }

    #[test]
    fn extraction_examples() {
        assert_eq!(extract_store_typing(&Store::new(), &LocEnv::new()), ConstraintSet::new());

        let (s, l) = one_object(&[("a", Expr::int(1))]);
        let c = extract_store_typing(&s, &l);
        assert_eq!(c, parse_constraints("[X <| {a: int}]").unwrap());
        assert!(satisfies_constraints(&s, &l, &c));

        let mut store = Store::new();
        store.insert(LocId(0), [("f".to_string(), Expr::loc(1))].into_iter().collect());
        store.insert(LocId(1), Object::new());
        let locs: LocEnv = [(LocId(0), TypeExpr::var("X")), (LocId(1), TypeExpr::var("Y"))].into_iter().collect();
        let c = extract_store_typing(&store, &locs);
        assert_eq!(c, parse_constraints("[X <| {f: Y}, Y <| {}]").unwrap());
        assert!(satisfies_constraints(&store, &locs, &c));
    }

    #[test]
    fn self_referential_store_terminates() {
        let mut store = Store::new();
        store.insert(LocId(0), [("me".to_string(), Expr::loc(0))].into_iter().collect());
        let locs: LocEnv = [(LocId(0), TypeExpr::var("X"))].into_iter().collect();
        let c = extract_store_typing(&store, &locs);
        assert!(satisfies_constraints(&store, &locs, &c));
    }
}
