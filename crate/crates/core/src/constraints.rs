//! Constraint-set algebra: definiteness, branch merge, post-call update,
//! attribute filtering and the entailment relation.

use thiserror::Error;

use crate::syntax::*;

/// A type is definite when no alternative is `bot`.
pub fn is_definite(t: &TypeExpr) -> bool {
    match t {
        TypeExpr::Base(_) | TypeExpr::Var(_) | TypeExpr::Arrow(_) => true,
        TypeExpr::Or(parts) => parts.iter().all(is_definite),
        TypeExpr::Bottom => false,
        // Unreachable code may read anything.
        TypeExpr::Never => true,
    }
}

/// Branch merge of two records. Shared fields join their types; a field known
/// on one side only becomes possibly absent (`t \/ bot`).
pub fn merge_records(r1: &RecordType, r2: &RecordType) -> RecordType {
    let mut out = RecordType::new();
    for (field, t1) in &r1.fields {
        let t = match r2.fields.get(field) {
            Some(t2) => TypeExpr::or([t1.clone(), t2.clone()]),
            None => TypeExpr::or([t1.clone(), TypeExpr::Bottom]),
        };
        out.fields.insert(field.clone(), t);
    }
    for (field, t2) in &r2.fields {
        if !r1.fields.contains_key(field) {
            out.fields.insert(field.clone(), TypeExpr::or([t2.clone(), TypeExpr::Bottom]));
        }
    }
    out
}

/// Branch merge of constraint sets; variables constrained on one side only keep their record.
pub fn merge(c1: &ConstraintSet, c2: &ConstraintSet) -> ConstraintSet {
    let mut out = c1.clone();
    for (var, r2) in c2.iter() {
        let merged = match c1.get(var) {
            Some(r1) => merge_records(r1, r2),
            None => r2.clone(),
        };
        out.insert(var.clone(), merged);
    }
    out
}

/// `c1` updated with `c2`: right-biased override per variable.
pub fn update(c1: &ConstraintSet, c2: &ConstraintSet) -> ConstraintSet {
    let mut out = c1.clone();
    for (var, r) in c2.iter() {
        out.insert(var.clone(), r.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("every alternative of field `{field}` of {var} is bot")]
pub struct FilterEmptiesField {
    pub var: TypeVar,
    pub field: Ident,
}

/// Strengthening for the true branch of `ifhasattr(x, a)`: drops `bot` from
/// the type of `a` in the record of `var`. No-op when the field is not constrained.
pub fn filter_attr(c: &ConstraintSet, var: &TypeVar, attr: &str) -> Result<ConstraintSet, FilterEmptiesField> {
    let Some(t) = c.get(var).and_then(|r| r.get(attr)) else {
        return Ok(c.clone());
    };
    let kept: Vec<TypeExpr> = t.disjuncts().iter().filter(|d| !matches!(d, TypeExpr::Bottom)).cloned().collect();
    if kept.is_empty() {
        return Err(FilterEmptiesField { var: var.clone(), field: attr.to_string() });
    }
    let mut out = c.clone();
    let mut record = c.get(var).unwrap().clone();
    record.fields.insert(attr.to_string(), TypeExpr::or(kept));
    out.insert(var.clone(), record);
    Ok(out)
}

/// Type-level entailment: `t1` is at least as strong as `t2`.
///
/// On normalized types the rules (reflexivity, `u ⊩ u \/ u'`, congruence over
/// disjunction, transitivity) collapse to: each alternative of `t1` occurs as an
/// alternative of `t2`. `never` entails everything.
pub fn entails_type(t1: &TypeExpr, t2: &TypeExpr) -> bool {
    let t1 = normalize_type(t1);
    let t2 = normalize_type(t2);
    if matches!(t1, TypeExpr::Never) || t1 == t2 {
        return true;
    }
    let rhs = t2.disjuncts();
    t1.disjuncts().iter().all(|d| matches!(d, TypeExpr::Never) || rhs.contains(d))
}

/// Record-level entailment: drop fields, deepen a field along type entailment,
/// and the disjunctive widening `{a:u, ..} ⊩ {a:u \/ u', ..}`.
pub fn entails_record(r1: &RecordType, r2: &RecordType) -> bool {
    r2.fields.iter().all(|(field, t2)| r1.fields.get(field).is_some_and(|t1| entails_type(t1, t2)))
}

/// Constraint-set entailment: every constraint on the right is matched by a
/// stronger one on the left. Everything entails the empty set.
pub fn entails(c1: &ConstraintSet, c2: &ConstraintSet) -> bool {
    c2.iter().all(|(var, r2)| c1.get(var).is_some_and(|r1| entails_record(r1, r2)))
}

/// Entailment closed under branch-merge weakening: `c1` relates to `c2` when
/// `c2` can be reached from `c1` by entailment steps and merges with further
/// constraints. Variables unconstrained in `c1` are unconstrained in `c2` as
/// far as `c1` is concerned, and a field absent on the left is matched by a
/// possibly-absent field on the right.
pub fn entails_up_to_merge(c1: &ConstraintSet, c2: &ConstraintSet) -> bool {
    c2.iter().all(|(var, r2)| match c1.get(var) {
        None => true,
        Some(r1) => r2.fields.iter().all(|(field, t2)| match r1.fields.get(field) {
            Some(t1) => entails_type(t1, t2),
            None => t2.contains_bottom(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> TypeVar {
        TypeVar::new("X")
    }

    fn arrow() -> TypeExpr {
        TypeExpr::arrow(ArrowType::new(ConstraintSet::new(), vec![], TypeExpr::int(), ConstraintSet::new()))
    }

    #[test]
    fn definiteness() {
        assert!(is_definite(&TypeExpr::int()));
        assert!(is_definite(&arrow()));
        assert!(is_definite(&TypeExpr::var("X")));
        assert!(is_definite(&TypeExpr::or([TypeExpr::int(), TypeExpr::var("X")])));
        assert!(!is_definite(&TypeExpr::or([TypeExpr::int(), TypeExpr::Bottom])));
        assert!(!is_definite(&TypeExpr::Bottom));
    }

    #[test]
    fn record_merge_cases() {
        let a_int = RecordType::new().with("a", TypeExpr::int());
        let a_str = RecordType::new().with("a", TypeExpr::str());
        assert_eq!(
            merge_records(&a_int, &a_str),
            RecordType::new().with("a", TypeExpr::or([TypeExpr::int(), TypeExpr::str()]))
        );
        assert_eq!(
            merge_records(&RecordType::new(), &a_int),
            RecordType::new().with("a", TypeExpr::or([TypeExpr::int(), TypeExpr::Bottom]))
        );
        assert_eq!(merge_records(&RecordType::new(), &RecordType::new()), RecordType::new());
    }

    #[test]
    fn set_merge_cases() {
        let xa_int = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::int()));
        let xa_str = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::str()));
        assert_eq!(
            merge(&xa_int, &xa_str),
            ConstraintSet::new()
                .with("X", RecordType::new().with("a", TypeExpr::or([TypeExpr::int(), TypeExpr::str()])))
        );
        assert_eq!(merge(&xa_int, &ConstraintSet::new()), xa_int);
        assert_eq!(merge(&ConstraintSet::new(), &xa_int), xa_int);
        let y = ConstraintSet::new().with("Y", RecordType::new());
        let both = merge(&xa_int, &y);
        assert_eq!(both, xa_int.clone().with("Y", RecordType::new()));
    }

    #[test]
    fn update_cases() {
        let xa_int = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::int()));
        let xa_str = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::str()));
        assert_eq!(update(&xa_int, &xa_str), xa_str);
        assert_eq!(update(&xa_int, &ConstraintSet::new()), xa_int);
        let x_empty = ConstraintSet::new().with("X", RecordType::new());
        assert_eq!(update(&ConstraintSet::new(), &x_empty), x_empty);
    }

    #[test]
    fn filter_cases() {
        let c = ConstraintSet::new().with(
            "X",
            RecordType::new().with("a", TypeExpr::or([TypeExpr::int(), TypeExpr::Bottom])).with("b", TypeExpr::str()),
        );
        let expected =
            ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::int()).with("b", TypeExpr::str()));
        assert_eq!(filter_attr(&c, &x(), "a").unwrap(), expected);

        let definite = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::int()));
        assert_eq!(filter_attr(&definite, &x(), "a").unwrap(), definite);

        let other = ConstraintSet::new().with("X", RecordType::new().with("b", TypeExpr::int()));
        assert_eq!(filter_attr(&other, &x(), "a").unwrap(), other);
        assert_eq!(filter_attr(&other, &TypeVar::new("Y"), "a").unwrap(), other);

        let only_bot = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::Bottom));
        assert_eq!(filter_attr(&only_bot, &x(), "a"), Err(FilterEmptiesField { var: x(), field: "a".into() }));
    }

    #[test]
    fn type_entailment_cases() {
        let int_or_str = TypeExpr::or([TypeExpr::int(), TypeExpr::str()]);
        assert!(entails_type(&TypeExpr::int(), &TypeExpr::int()));
        assert!(entails_type(&TypeExpr::int(), &int_or_str));
        assert!(entails_type(&TypeExpr::str(), &int_or_str));
        assert!(!entails_type(&int_or_str, &TypeExpr::int()));
        assert!(entails_type(&TypeExpr::Never, &TypeExpr::int()));
        assert!(!entails_type(&TypeExpr::var("X"), &TypeExpr::var("Y")));
        assert!(!entails_type(&TypeExpr::Bottom, &TypeExpr::int()));
    }

    #[test]
    fn set_entailment_cases() {
        let c = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::int()).with("b", TypeExpr::str()));
        assert!(entails(&c, &ConstraintSet::new()));
        assert!(entails(&c, &ConstraintSet::new().with("X", RecordType::new().with("b", TypeExpr::str()))));
        let a_int = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::int()));
        let widened = ConstraintSet::new()
            .with("X", RecordType::new().with("a", TypeExpr::or([TypeExpr::int(), TypeExpr::str()])));
        assert!(entails(&a_int, &widened));
        assert!(!entails(&widened, &a_int));
        assert!(!entails(&ConstraintSet::new(), &a_int));
    }

    #[test]
    fn merge_weakening_accepts_absent_fields_only_when_bot() {
        let empty = ConstraintSet::new().with("X", RecordType::new());
        let maybe = ConstraintSet::new()
            .with("X", RecordType::new().with("a", TypeExpr::or([TypeExpr::int(), TypeExpr::Bottom])));
        let sure = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::int()));
        assert!(entails_up_to_merge(&empty, &maybe));
        assert!(!entails_up_to_merge(&empty, &sure));
        assert!(entails_up_to_merge(&ConstraintSet::new(), &sure));
        assert!(!entails(&empty, &maybe));
    }
}
