//! Entailment and runtime satisfaction against goal-directed derivation
//! search over the unnormalized syntax.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use luc::constraints::{entails, entails_record, entails_type};
use luc::model::{satisfies_constraints, satisfies_value};
use luc::*;

/// Searches for a derivation of `t1 ⊩ t2`. Rules: `never` on the left;
/// a left disjunction needs every alternative; a right disjunction needs one;
/// atoms must be equivalent.
fn derives(t1: &TypeExpr, t2: &TypeExpr) -> bool {
    match (t1, t2) {
        (TypeExpr::Never, _) => true,
        (TypeExpr::Or(parts), _) => parts.iter().all(|p| derives(p, t2)),
        (_, TypeExpr::Or(parts)) => parts.iter().any(|p| derives(t1, p)),
        _ => same_atom(t1, t2),
    }
}

fn equivalent(t1: &TypeExpr, t2: &TypeExpr) -> bool {
    derives(t1, t2) && derives(t2, t1)
}

fn same_atom(t1: &TypeExpr, t2: &TypeExpr) -> bool {
    match (t1, t2) {
        (TypeExpr::Arrow(a), TypeExpr::Arrow(b)) => {
            a.params.len() == b.params.len()
                && a.params.iter().zip(&b.params).all(|(p, q)| equivalent(p, q))
                && equivalent(&a.result, &b.result)
                && same_set(&a.pre, &b.pre)
                && same_set(&a.post, &b.post)
        }
        (TypeExpr::Arrow(_), _) | (_, TypeExpr::Arrow(_)) => false,
        _ => t1 == t2,
    }
}

fn same_set(c1: &ConstraintSet, c2: &ConstraintSet) -> bool {
    c1.len() == c2.len()
        && c1.iter().all(|(v, r1)| {
            c2.get(v).is_some_and(|r2| {
                r1.fields.len() == r2.fields.len()
                    && r1.fields.iter().all(|(f, t)| r2.get(f).is_some_and(|u| equivalent(t, u)))
            })
        })
}

fn derives_record(r1: &RecordType, r2: &RecordType) -> bool {
    r2.fields.iter().all(|(f, t2)| r1.fields.get(f).is_some_and(|t1| derives(t1, t2)))
}

fn derives_set(c1: &ConstraintSet, c2: &ConstraintSet) -> bool {
    c2.iter().all(|(v, r2)| c1.get(v).is_some_and(|r1| derives_record(r1, r2)))
}

fn type_pair() -> impl Strategy<Value = (TypeExpr, TypeExpr)> {
    let t = common::raw_type;
    prop_oneof![
        (t(), t()),
        (t(), t()).prop_map(|(a, b)| (a.clone(), TypeExpr::Or(vec![b, a]))),
        (t(), t()).prop_map(|(a, b)| (TypeExpr::Or(vec![a.clone(), b]), a)),
        t().prop_map(|a| (a.clone(), TypeExpr::Or(vec![a.clone(), a]))),
    ]
}

fn raw_record() -> impl Strategy<Value = RecordType> {
    prop::collection::btree_map(common::field(), common::raw_type(), 0..3).prop_map(|fields| RecordType { fields })
}

fn raw_set() -> impl Strategy<Value = ConstraintSet> {
    prop::collection::btree_map(prop::sample::select(&common::VARS[..]), raw_record(), 0..3)
        .prop_map(|m| m.into_iter().map(|(v, r)| (TypeVar::new(v), r)).collect())
}

/// Drops fields and widens field types, which the rules always allow.
fn weaker_set(c: ConstraintSet) -> impl Strategy<Value = (ConstraintSet, ConstraintSet)> {
    let n = c.len();
    (prop::collection::vec(any::<(bool, bool, bool)>(), n * 3), common::raw_type()).prop_map(move |(coins, extra)| {
        let mut coins = coins.into_iter();
        let mut out = ConstraintSet::new();
        for (v, r) in c.iter() {
            if coins.next().is_some_and(|c| c.0) {
                continue;
            }
            let fields = r
                .fields
                .iter()
                .filter_map(|(f, t)| match coins.next().unwrap_or_default() {
                    (true, _, _) => None,
                    (_, true, _) => Some((f.clone(), TypeExpr::Or(vec![extra.clone(), t.clone()]))),
                    _ => Some((f.clone(), t.clone())),
                })
                .collect();
            out.insert(v.clone(), RecordType { fields });
        }
        (c.clone(), out)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn type_entailment_matches_search((t1, t2) in type_pair()) {
        prop_assert_eq!(entails_type(&t1, &t2), derives(&t1, &t2), "{} |- {}", t1, t2);
    }

    #[test]
    fn record_entailment_matches_search(r1 in raw_record(), r2 in raw_record()) {
        prop_assert_eq!(entails_record(&r1, &r2), derives_record(&r1, &r2));
    }

    #[test]
    fn set_entailment_matches_search((c1, c2) in raw_set().prop_flat_map(weaker_set)) {
        prop_assert!(derives_set(&c1, &c2));
        prop_assert!(entails(&c1, &c2), "{} |- {}", c1, c2);
    }

    #[test]
    fn unrelated_sets_match_search(c1 in raw_set(), c2 in raw_set()) {
        prop_assert_eq!(entails(&c1, &c2), derives_set(&c1, &c2));
    }
}

// Satisfaction.

const GOOD: &str = "func(x): [ ](int) -> int [ ] { x }";
const BAD: &str = "func(x): [ ](int) -> int [ ] { true }";

#[derive(Debug, Clone)]
enum Val {
    Int(i64),
    Bool(bool),
    Str,
    Loc(u32),
    Good,
    Bad,
}

impl Val {
    fn expr(&self) -> Expr {
        match self {
            Val::Int(n) => Expr::int(*n),
            Val::Bool(b) => Expr::bool(*b),
            Val::Str => Expr::str("s"),
            Val::Loc(l) => Expr::loc(*l),
            Val::Good => parse_program(GOOD).unwrap(),
            Val::Bad => parse_program(BAD).unwrap(),
        }
    }
}

fn val() -> impl Strategy<Value = Val> {
    prop_oneof![
        any::<i64>().prop_map(Val::Int),
        any::<bool>().prop_map(Val::Bool),
        Just(Val::Str),
        (0u32..4).prop_map(Val::Loc),
        Just(Val::Good),
        Just(Val::Bad),
    ]
}

fn int_to_int() -> TypeExpr {
    parse_type("[ ](int) -> int [ ]").unwrap()
}

fn sat_type() -> impl Strategy<Value = TypeExpr> {
    let leaf = prop_oneof![
        3 => common::base(),
        3 => prop::sample::select(&common::VARS[..]).prop_map(TypeExpr::var),
        2 => Just(TypeExpr::Bottom),
        2 => Just(int_to_int()),
        1 => Just(parse_type("[ ](int) -> bool [ ]").unwrap()),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| prop::collection::vec(inner, 1..4).prop_map(TypeExpr::Or))
}

/// Objects at l0..l2 (some unallocated), each field holding a `Val`; the
/// location typing also names l3, which is never allocated.
#[derive(Debug, Clone)]
struct World {
    objects: BTreeMap<u32, BTreeMap<String, Val>>,
    typing: BTreeMap<u32, &'static str>,
}

impl World {
    fn store(&self) -> Store {
        let mut s = Store::new();
        for (l, o) in &self.objects {
            s.insert(LocId(*l), o.iter().map(|(f, v)| (f.clone(), v.expr())).collect());
        }
        s
    }

    fn locs(&self) -> LocEnv {
        self.typing.iter().map(|(l, v)| (LocId(*l), TypeExpr::var(v))).collect()
    }
}

fn world() -> impl Strategy<Value = World> {
    let object = prop::collection::btree_map(common::field(), val(), 0..3);
    let var = prop::sample::select(&common::VARS[..]);
    (prop::collection::btree_map(0u32..3, object, 0..4), prop::collection::vec(var, 4), any::<bool>()).prop_map(
        |(objects, vars, dangling)| {
            let mut typing: BTreeMap<u32, &'static str> = objects.keys().map(|l| (*l, vars[*l as usize])).collect();
            if dangling {
                typing.insert(3, vars[3]);
            }
            World { objects, typing }
        },
    )
}

fn sat(w: &World, v: &Val, t: &TypeExpr) -> bool {
    match (v, t) {
        (_, TypeExpr::Or(parts)) => parts.iter().any(|p| sat(w, v, p)),
        (Val::Int(_), TypeExpr::Base(BaseType::Int)) => true,
        (Val::Bool(_), TypeExpr::Base(BaseType::Bool)) => true,
        (Val::Str, TypeExpr::Base(BaseType::Str)) => true,
        (Val::Loc(l), TypeExpr::Var(x)) => w.objects.contains_key(l) && w.typing.get(l).is_some_and(|y| *y == x.0),
        (Val::Good, TypeExpr::Arrow(_)) => same_atom(t, &int_to_int()),
        _ => false,
    }
}

fn admits_absence(t: &TypeExpr) -> bool {
    match t {
        TypeExpr::Bottom => true,
        TypeExpr::Or(parts) => parts.iter().any(admits_absence),
        _ => false,
    }
}

/// A present field must satisfy some alternative other than `bot`.
fn sat_present(w: &World, v: &Val, t: &TypeExpr) -> bool {
    match t {
        TypeExpr::Bottom => false,
        TypeExpr::Or(parts) => parts.iter().any(|p| sat_present(w, v, p)),
        _ => sat(w, v, t),
    }
}

fn sat_set(w: &World, c: &ConstraintSet) -> bool {
    c.iter().all(|(x, r)| {
        w.typing.iter().filter(|(_, y)| **y == x.0).all(|(l, _)| {
            let Some(o) = w.objects.get(l) else {
                return false;
            };
            r.fields.iter().all(|(f, t)| match o.get(f) {
                Some(v) => sat_present(w, v, t),
                None => admits_absence(t),
            })
        })
    })
}

fn sat_set_strategy() -> impl Strategy<Value = ConstraintSet> {
    let record =
        prop::collection::btree_map(common::field(), sat_type(), 0..3).prop_map(|fields| RecordType { fields });
    prop::collection::btree_map(prop::sample::select(&common::VARS[..]), record, 0..3)
        .prop_map(|m| m.into_iter().map(|(v, r)| (TypeVar::new(v), r)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3000))]

    #[test]
    fn value_satisfaction_matches_search(w in world(), v in val(), t in sat_type()) {
        prop_assert_eq!(satisfies_value(&w.store(), &w.locs(), &v.expr(), &t), sat(&w, &v, &t), "{:?} : {}", v, t);
    }

    #[test]
    fn constraint_satisfaction_matches_search(w in world(), c in sat_set_strategy()) {
        prop_assert_eq!(satisfies_constraints(&w.store(), &w.locs(), &c), sat_set(&w, &c), "{:?} |= {}", w, c);
    }
}

#[test]
fn bad_function_never_satisfies_its_annotation() {
    let w = World { objects: BTreeMap::new(), typing: BTreeMap::new() };
    assert!(!satisfies_value(&w.store(), &w.locs(), &Val::Bad.expr(), &int_to_int()));
    assert!(satisfies_value(&w.store(), &w.locs(), &Val::Good.expr(), &int_to_int()));
}
