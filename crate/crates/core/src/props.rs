//! Randomized law checks for the constraint algebra and for runtime
//! satisfaction. Each suite returns a [`LawReport`] with the first
//! counterexample it met.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::{entails, entails_type, entails_up_to_merge, is_definite, merge, merge_records, update};
use crate::model::{extract_store_typing, value_type, Model};
use crate::syntax::*;
use crate::typeck::{Checker, TypeState};

pub const FIELDS: &[&str] = &["a", "b", "c", "d", "e", "f"];
pub const MAX_VARS: usize = 6;
pub const MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LawReport {
    pub name: &'static str,
    pub instances: usize,
    /// Instances whose premises did not hold.
    pub vacuous: usize,
    pub failures: usize,
    pub counterexample: Option<String>,
}

impl LawReport {
    fn new(name: &'static str) -> Self {
        LawReport { name, instances: 0, vacuous: 0, failures: 0, counterexample: None }
    }

    pub fn holds(&self) -> bool {
        self.failures == 0
    }

    pub fn checked(&self) -> usize {
        self.instances - self.vacuous
    }

    fn record(&mut self, outcome: Option<bool>, witness: impl FnOnce() -> String) {
        self.instances += 1;
        match outcome {
            None => self.vacuous += 1,
            Some(true) => {}
            Some(false) => {
                self.failures += 1;
                if self.counterexample.is_none() {
                    self.counterexample = Some(witness());
                }
            }
        }
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}/{} hold ({} vacuous)",
            self.name,
            self.checked() - self.failures,
            self.checked(),
            self.vacuous
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, "; counterexample {c}")?;
        }
        Ok(())
    }
}

/// Random types, constraint sets, stores and entailment derivations.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn var_name(&mut self) -> TypeVar {
        TypeVar(format!("X{}", self.rng.gen_range(0..MAX_VARS)))
    }

    /// A `bot`-free type of at most `depth` constructor levels.
    pub fn type_expr(&mut self, depth: usize) -> TypeExpr {
        let leaf = depth <= 1 || self.rng.gen_bool(0.55);
        if leaf {
            return match self.rng.gen_range(0..4) {
                0..=2 => TypeExpr::Base(*BaseType::ALL.choose(&mut self.rng).unwrap()),
                _ => TypeExpr::Var(self.var_name()),
            };
        }
        if self.rng.gen_bool(0.7) {
            let n = self.rng.gen_range(2..=3);
            TypeExpr::or((0..n).map(|_| self.type_expr(depth - 1)).collect::<Vec<_>>())
        } else {
            let pre = self.small_set(depth - 1);
            let post = self.small_set(depth - 1);
            let params = (0..self.rng.gen_range(0..=2)).map(|_| self.type_expr(depth - 1)).collect();
            let result = self.type_expr(depth - 1);
            TypeExpr::arrow(ArrowType::new(pre, params, result, post))
        }
    }

    /// A field type: a type, possibly joined with `bot`.
    pub fn field_type(&mut self, depth: usize) -> TypeExpr {
        let t = self.type_expr(depth);
        if self.rng.gen_bool(0.25) {
            TypeExpr::or([t, TypeExpr::Bottom])
        } else {
            t
        }
    }

    pub fn record(&mut self, depth: usize, max_fields: usize) -> RecordType {
        let n = self.rng.gen_range(0..=max_fields);
        let mut fields: Vec<&str> = FIELDS.to_vec();
        fields.shuffle(&mut self.rng);
        fields.into_iter().take(n).map(|f| (f.to_string(), self.field_type(depth))).collect()
    }

    fn small_set(&mut self, depth: usize) -> ConstraintSet {
        self.set_of(depth, 2, 2)
    }

    fn set_of(&mut self, depth: usize, max_vars: usize, max_fields: usize) -> ConstraintSet {
        let mut out = ConstraintSet::new();
        for _ in 0..self.rng.gen_range(0..=max_vars) {
            let v = self.var_name();
            let r = self.record(depth.saturating_sub(1).max(1), max_fields);
            out.insert(v, r);
        }
        out
    }

    /// A constraint set within the suite bounds.
    pub fn constraint_set(&mut self) -> ConstraintSet {
        self.set_of(MAX_DEPTH, MAX_VARS, FIELDS.len())
    }

    /// One entailment step on a type: `u ⊩ u \/ u'`.
    pub fn weaken_type(&mut self, t: &TypeExpr) -> TypeExpr {
        let extra = if self.rng.gen_bool(0.3) { TypeExpr::Bottom } else { self.type_expr(2) };
        TypeExpr::or([t.clone(), extra])
    }

    /// One entailment step on a record: drop a field or weaken its type.
    pub fn weaken_record(&mut self, r: &RecordType) -> RecordType {
        let mut out = r.clone();
        let fields: Vec<Ident> = r.fields.keys().cloned().collect();
        let Some(field) = fields.choose(&mut self.rng) else {
            return out;
        };
        if self.rng.gen_bool(0.4) {
            out.fields.remove(field);
        } else {
            let t = self.weaken_type(&r.fields[field]);
            out.fields.insert(field.clone(), t);
        }
        out
    }

    /// A random derivation of `c ⊩ c'` by up to `steps` rule applications:
    /// dropping a binding, or a record step inside one.
    pub fn weaken_set(&mut self, c: &ConstraintSet, steps: usize) -> ConstraintSet {
        let mut out = c.clone();
        for _ in 0..self.rng.gen_range(0..=steps) {
            let vars: Vec<TypeVar> = out.iter().map(|(v, _)| v.clone()).collect();
            let Some(var) = vars.choose(&mut self.rng).cloned() else {
                break;
            };
            if self.rng.gen_bool(0.15) {
                out.bindings.remove(&var);
            } else {
                let r = self.weaken_record(out.get(&var).unwrap());
                out.insert(var, r);
            }
        }
        out
    }

    /// A store of up to four objects, each typed by its own variable. Stored
    /// functions typecheck, so the exact typing of the store is satisfied.
    pub fn store(&mut self) -> (Store, LocEnv) {
        let n = self.rng.gen_range(1..=4u32);
        let mut store = Store::new();
        let mut locs = LocEnv::new();
        for i in 0..n {
            locs.insert(LocId(i), TypeExpr::var(&format!("X{i}")));
            let mut object = Object::new();
            for field in FIELDS.iter().take(4) {
                if self.rng.gen_bool(0.5) {
                    let v = match self.rng.gen_range(0..5) {
                        0 => Expr::int(self.rng.gen_range(-5..5)),
                        1 => Expr::bool(self.rng.gen()),
                        2 => Expr::str(["", "s"].choose(&mut self.rng).unwrap()),
                        3 => Expr::loc(self.rng.gen_range(0..n)),
                        _ => closed_function(self.rng.gen()),
                    };
                    object.insert(field.to_string(), v);
                }
            }
            store.insert(LocId(i), object);
        }
        // Functions reading an int field of some object.
        let int_fields: Vec<(LocId, Ident)> = store
            .objects
            .iter()
            .flat_map(|(l, o)| {
                o.iter().filter(|(_, v)| matches!(v.kind, ExprKind::Const(Const::Int(_)))).map(|(f, _)| (*l, f.clone()))
            })
            .collect();
        if let Some((l, f)) = int_fields.choose(&mut self.rng).cloned() {
            let target = LocId(self.rng.gen_range(0..n));
            let g = reader_function(l, &f, &locs[&l]);
            store.set_field(target, "f", g);
        }
        (store, locs)
    }

    /// A value for the value-completeness suite: a constant, a location or a
    /// function literal found in the store.
    pub fn value(&mut self, store: &Store) -> Expr {
        let stored: Vec<Expr> = store.objects.values().flat_map(|o| o.values().cloned()).collect();
        match self.rng.gen_range(0..4) {
            0 => Expr::int(self.rng.gen_range(-5..5)),
            1 => Expr::str("s"),
            2 => Expr::loc(self.rng.gen_range(0..store.len().max(1) as u32)),
            _ => stored.choose(&mut self.rng).cloned().unwrap_or_else(|| Expr::bool(true)),
        }
    }

    pub fn gen_bool(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }
}

fn closed_function(unit: bool) -> Expr {
    if unit {
        Expr::func(
            &[],
            ArrowType::new(ConstraintSet::new(), vec![], TypeExpr::str(), ConstraintSet::new()),
            Expr::str("s"),
        )
    } else {
        Expr::func(
            &["k"],
            ArrowType::new(ConstraintSet::new(), vec![TypeExpr::int()], TypeExpr::int(), ConstraintSet::new()),
            Expr::prim(PrimOp::Add, vec![Expr::var("k"), Expr::int(1)]),
        )
    }
}

fn reader_function(l: LocId, field: &str, var: &TypeExpr) -> Expr {
    let TypeExpr::Var(v) = var else { unreachable!("locations are typed by variables") };
    let c = ConstraintSet::new().with(&v.0, RecordType::new().with(field, TypeExpr::int()));
    Expr::func(
        &["k"],
        ArrowType::new(c.clone(), vec![TypeExpr::int()], TypeExpr::int(), c),
        Expr::prim(PrimOp::Add, vec![Expr::var("k"), Expr::get_field(Subject::Loc(l), field)]),
    )
}

/// The constraint-algebra laws as stated: reflexivity and transitivity of
/// entailment, `Ψ1 ⊩ Ψ1 ⊎ Ψ2` and `Ψ2 ⊩ Ψ1 ◁ Ψ2`.
pub fn constraint_laws(seed: u64, iters: usize) -> Vec<LawReport> {
    let mut s = Sampler::new(seed);
    let mut refl = LawReport::new("entails reflexive");
    let mut trans = LawReport::new("entails transitive");
    let mut trans_random = LawReport::new("entails transitive (independent triples)");
    let mut merge_law = LawReport::new("entails(P1, merge(P1, P2))");
    let mut update_law = LawReport::new("entails(P2, update(P1, P2))");
    for _ in 0..iters {
        let c1 = s.constraint_set();
        let c2 = s.constraint_set();
        refl.record(Some(entails(&c1, &c1)), || c1.to_string());

        let w1 = s.weaken_set(&c1, 6);
        let w2 = s.weaken_set(&w1, 6);
        let premises = entails(&c1, &w1) && entails(&w1, &w2);
        trans.record(premises.then(|| entails(&c1, &w2)), || format!("{c1} ⊩ {w1} ⊩ {w2}"));

        let c3 = s.constraint_set();
        let premises = entails(&c1, &c2) && entails(&c2, &c3);
        trans_random.record(premises.then(|| entails(&c1, &c3)), || format!("{c1} ⊩ {c2} ⊩ {c3}"));

        let m = merge(&c1, &c2);
        merge_law.record(Some(entails(&c1, &m)), || format!("P1 = {c1}, P2 = {c2}, merge = {m}"));
        let u = update(&c1, &c2);
        update_law.record(Some(entails(&c2, &u)), || format!("P1 = {c1}, P2 = {c2}, update = {u}"));
    }
    vec![refl, trans, trans_random, merge_law, update_law]
}

/// The merge and update laws read with merge-closed entailment.
pub fn merge_closed_laws(seed: u64, iters: usize) -> Vec<LawReport> {
    let mut s = Sampler::new(seed);
    let mut merge_law = LawReport::new("entails_up_to_merge(P1, merge(P1, P2))");
    let mut update_law = LawReport::new("entails_up_to_merge(P2, update(P1, P2))");
    for _ in 0..iters {
        let c1 = s.constraint_set();
        let c2 = s.constraint_set();
        let m = merge(&c1, &c2);
        merge_law.record(Some(entails_up_to_merge(&c1, &m)), || format!("P1 = {c1}, P2 = {c2}"));
        let u = update(&c1, &c2);
        update_law.record(Some(entails_up_to_merge(&c2, &u)), || format!("P1 = {c1}, P2 = {c2}"));
    }
    vec![merge_law, update_law]
}

/// Entailment is sound for satisfaction: a store meeting its exact typing
/// meets every constraint set derived from it.
pub fn entailment_soundness(seed: u64, iters: usize) -> Vec<LawReport> {
    let mut s = Sampler::new(seed);
    let mut exact = LawReport::new("store satisfies its exact typing");
    let mut derived = LawReport::new("satisfaction preserved by entailment derivations");
    for _ in 0..iters {
        let (store, locs) = s.store();
        let model = Model::new();
        let c1 = extract_store_typing(&store, &locs);
        let ok = model.satisfies_constraints(&store, &locs, &c1);
        exact.record(Some(ok), || format!("{} with {c1}", crate::eval::format_store(&store)));
        let c2 = s.weaken_set(&c1, 8);
        let premises = ok && entails(&c1, &c2);
        derived.record(premises.then(|| model.satisfies_constraints(&store, &locs, &c2)), || {
            format!("{} with {c1} ⊩ {c2}", crate::eval::format_store(&store))
        });
    }
    vec![exact, derived]
}

/// A satisfied constraint set for `store`: its exact typing weakened, then
/// merged with random records on some variables.
fn satisfied_set(s: &mut Sampler, store: &Store, locs: &LocEnv) -> ConstraintSet {
    let mut c = s.weaken_set(&extract_store_typing(store, locs), 6);
    let vars: Vec<TypeVar> = c.iter().map(|(v, _)| v.clone()).collect();
    for var in vars {
        if s.gen_bool(0.3) {
            let other = s.record(2, 3);
            let merged = merge_records(c.get(&var).unwrap(), &other);
            c.insert(var, merged);
        }
    }
    c
}

/// hasfield: a satisfied binding with a definite field type means the
/// object has the field, its value meets the type, and the other bindings
/// stay satisfied.
pub fn hasfield(seed: u64, iters: usize) -> LawReport {
    let mut s = Sampler::new(seed);
    let mut report = LawReport::new("hasfield");
    for _ in 0..iters {
        let (store, locs) = s.store();
        let model = Model::new();
        let c = satisfied_set(&mut s, &store, &locs);
        if !model.satisfies_constraints(&store, &locs, &c) {
            report.record(None, String::new);
            continue;
        }
        let mut checked = false;
        let mut ok = true;
        let mut witness = String::new();
        for (l, t) in &locs {
            let TypeExpr::Var(var) = t else { continue };
            let Some(record) = c.get(var) else { continue };
            let mut rest = c.clone();
            rest.bindings.remove(var);
            for (field, ft) in record.fields.iter().filter(|(_, ft)| is_definite(ft)) {
                checked = true;
                let v = store.get(*l).and_then(|o| o.get(field));
                let holds = v.is_some_and(|v| model.satisfies_value(&store, &locs, v, ft))
                    && model.satisfies_constraints(&store, &locs, &rest);
                if !holds && ok {
                    ok = false;
                    witness = format!("{} with {c}, field {l}.{field}", crate::eval::format_store(&store));
                }
            }
        }
        report.record(checked.then_some(ok), || witness);
    }
    report
}

/// Value completeness: a value meeting `t` in a satisfying store
/// synthesizes a type entailing `t` and leaves the constraints unchanged.
pub fn value_completeness(seed: u64, iters: usize) -> LawReport {
    let mut s = Sampler::new(seed);
    let mut report = LawReport::new("value completeness");
    for _ in 0..iters {
        let (store, locs) = s.store();
        let model = Model::new();
        let c = satisfied_set(&mut s, &store, &locs);
        let v = s.value(&store);
        let t = match value_type(&locs, &v) {
            Some(exact) if s.gen_bool(0.8) => {
                if s.gen_bool(0.5) {
                    s.weaken_type(&exact)
                } else {
                    exact
                }
            }
            _ => s.type_expr(2),
        };
        if !(model.satisfies_constraints(&store, &locs, &c) && model.satisfies_value(&store, &locs, &v, &t)) {
            report.record(None, String::new);
            continue;
        }
        let state = TypeState::new(c.clone(), TypeEnv::new(), locs.clone());
        let outcome = Checker::new().synthesize(&state, &v);
        let ok = outcome.as_ref().is_ok_and(|r| entails_type(&r.ty, &t) && r.post == c);
        report.record(Some(ok), || format!("{v} : {t} under {c} gives {outcome:?}"));
    }
    report
}

/// Satisfaction and merge: the closure rule `σ⊨Ψ ⇒ σ⊨Ψ⊎Ψ'` and the form
/// that also assumes `σ⊨Ψ'`.
pub fn merge_satisfaction(seed: u64, iters: usize) -> Vec<LawReport> {
    let mut s = Sampler::new(seed);
    let mut closure = LawReport::new("sat(P) implies sat(merge(P, Q))");
    let mut both = LawReport::new("sat(P) and sat(Q) imply sat(merge(P, Q))");
    for _ in 0..iters {
        let (store, locs) = s.store();
        let model = Model::new();
        let p = satisfied_set(&mut s, &store, &locs);
        let q = if s.gen_bool(0.5) { satisfied_set(&mut s, &store, &locs) } else { s.constraint_set() };
        let m = merge(&p, &q);
        let sat_p = model.satisfies_constraints(&store, &locs, &p);
        let sat_q = model.satisfies_constraints(&store, &locs, &q);
        let sat_m = model.satisfies_constraints(&store, &locs, &m);
        let shown = || format!("{} with P = {p}, Q = {q}", crate::eval::format_store(&store));
        closure.record(sat_p.then_some(sat_m), shown);
        both.record((sat_p && sat_q).then_some(sat_m), shown);
    }
    vec![closure, both]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_respects_bounds() {
        let mut s = Sampler::new(1);
        for _ in 0..200 {
            let c = s.constraint_set();
            assert!(c.len() <= MAX_VARS);
            assert!(c.iter().all(|(_, r)| r.fields.len() <= FIELDS.len()));
        }
    }

    #[test]
    fn derivations_are_entailed() {
        let mut s = Sampler::new(2);
        for _ in 0..500 {
            let c = s.constraint_set();
            let w = s.weaken_set(&c, 8);
            assert!(entails(&c, &w), "{c} vs {w}");
        }
    }

    #[test]
    fn small_suites_run() {
        assert!(entailment_soundness(3, 200).iter().all(LawReport::holds));
        assert!(hasfield(4, 200).holds());
        assert!(value_completeness(5, 200).holds());
        assert!(merge_closed_laws(6, 200).iter().all(LawReport::holds));
    }

    #[test]
    fn merge_law_as_stated_has_a_counterexample() {
        let laws = constraint_laws(7, 200);
        assert!(laws.iter().find(|l| l.name.starts_with("entails(P1, merge")).is_some_and(|l| !l.holds()));
    }

    #[test]
    fn merge_can_break_satisfaction() {
        // The object has `a`, and merging with a record claiming a string for it
        // says the field is a string or absent.
        let mut store = Store::new();
        store.insert(LocId(0), [("a".to_string(), Expr::int(1))].into_iter().collect());
        let locs: LocEnv = [(LocId(0), TypeExpr::var("X"))].into_iter().collect();
        let p = ConstraintSet::new().with("X", RecordType::new());
        let q = ConstraintSet::new().with("X", RecordType::new().with("a", TypeExpr::str()));
        let model = Model::new();
        assert!(model.satisfies_constraints(&store, &locs, &p));
        assert!(!model.satisfies_constraints(&store, &locs, &merge(&p, &q)));
    }
}
