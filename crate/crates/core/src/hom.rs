//! Homomorphism search from sets of atoms into instances.
//!
//! Backtracking over atoms, choosing at each level the atom with the fewest matching
//! tuples under the current partial binding. Lookups go through per-call hash indexes
//! keyed by the set of bound positions.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::ControlFlow;
use std::rc::Rc;

use crate::model::{Atom, Homomorphism, Instance, Name, Term, Tuple, Value};

#[derive(Clone, Debug)]
enum Slot {
    Var(usize),
    Val(Value),
}

#[derive(Clone, Debug)]
struct CAtom {
    rel: Name,
    slots: Vec<Slot>,
}

/// Atoms compiled against a fixed variable numbering.
#[derive(Clone, Debug)]
pub struct Pattern {
    vars: Vec<Name>,
    atoms: Vec<CAtom>,
}

impl Pattern {
    /// Variables are numbered in order of first occurrence.
    pub fn new(atoms: &[Atom]) -> Pattern {
        Pattern::with_vars(atoms, &[])
    }

    /// Variables in `leading` get the first indexes, in that order.
    pub fn with_vars(atoms: &[Atom], leading: &[Name]) -> Pattern {
        let mut vars: Vec<Name> = leading.to_vec();
        let mut catoms = Vec::with_capacity(atoms.len());
        for a in atoms {
            let slots = a
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => {
                        let i = match vars.iter().position(|w| w == v) {
                            Some(i) => i,
                            None => {
                                vars.push(v.clone());
                                vars.len() - 1
                            }
                        };
                        Slot::Var(i)
                    }
                    Term::Const(c) => Slot::Val(Value::Const(c.clone())),
                })
                .collect();
            catoms.push(CAtom {
                rel: a.relation.clone(),
                slots,
            });
        }
        Pattern {
            vars,
            atoms: catoms,
        }
    }

    pub fn vars(&self) -> &[Name] {
        &self.vars
    }

    pub fn var_index(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|w| &**w == v)
    }

    pub fn binding_from(&self, h: &Homomorphism) -> Vec<Option<Value>> {
        self.vars.iter().map(|v| h.get(v).cloned()).collect()
    }

    pub fn to_hom(&self, b: &[Option<Value>]) -> Homomorphism {
        self.vars
            .iter()
            .zip(b)
            .filter_map(|(v, x)| x.clone().map(|x| (v.clone(), x)))
            .collect()
    }

    /// Calls `f` on every total extension of `init`; stops when `f` breaks.
    /// Returns `true` if stopped early.
    pub fn search(
        &self,
        target: &Index<'_>,
        init: Vec<Option<Value>>,
        f: &mut dyn FnMut(&[Option<Value>]) -> ControlFlow<()>,
    ) -> bool {
        let mut binding = init;
        binding.resize(self.vars.len(), None);
        let mut done = vec![false; self.atoms.len()];
        self.rec(target, &mut binding, &mut done, self.atoms.len(), f)
            .is_break()
    }

    pub fn exists(&self, target: &Index<'_>, init: Vec<Option<Value>>) -> bool {
        self.search(target, init, &mut |_| ControlFlow::Break(()))
    }

    fn rec(
        &self,
        target: &Index<'_>,
        binding: &mut Vec<Option<Value>>,
        done: &mut [bool],
        remaining: usize,
        f: &mut dyn FnMut(&[Option<Value>]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if remaining == 0 {
            return f(binding);
        }
        let mut best: Option<(usize, Rc<Vec<u32>>, usize)> = None;
        for (i, a) in self.atoms.iter().enumerate() {
            if done[i] {
                continue;
            }
            let cands = target.candidates(a, binding);
            let n = cands.len();
            if n == 0 {
                return ControlFlow::Continue(());
            }
            if best.as_ref().is_none_or(|b| n < b.2) {
                best = Some((i, cands, n));
            }
        }
        let (ai, cands, _) = best.expect("an undone atom exists");
        let atom = &self.atoms[ai];
        let tuples = target.tuples(&atom.rel);
        done[ai] = true;
        let mut newly: Vec<usize> = Vec::new();
        for &ti in cands.iter() {
            let t = tuples[ti as usize];
            newly.clear();
            let mut ok = true;
            for (slot, v) in atom.slots.iter().zip(t.iter()) {
                match slot {
                    Slot::Val(c) => {
                        if c != v {
                            ok = false;
                            break;
                        }
                    }
                    Slot::Var(x) => match &binding[*x] {
                        Some(b) => {
                            if b != v {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            binding[*x] = Some(v.clone());
                            newly.push(*x);
                        }
                    },
                }
            }
            if ok {
                let r = self.rec(target, binding, done, remaining - 1, f);
                if r.is_break() {
                    for &x in &newly {
                        binding[x] = None;
                    }
                    done[ai] = false;
                    return r;
                }
            }
            for &x in &newly {
                binding[x] = None;
            }
        }
        done[ai] = false;
        ControlFlow::Continue(())
    }
}

type IndexKey = (Name, Vec<bool>);

/// Read-only view of an instance with lazily built position indexes.
pub struct Index<'a> {
    inst: &'a Instance,
    rels: HashMap<Name, Vec<&'a Tuple>>,
    cache: RefCell<HashMap<IndexKey, Rc<HashMap<Vec<Value>, Rc<Vec<u32>>>>>>,
    all: RefCell<HashMap<Name, Rc<Vec<u32>>>>,
}

impl<'a> Index<'a> {
    pub fn new(inst: &'a Instance) -> Index<'a> {
        let rels = inst
            .relations()
            .map(|(r, ts)| (r.clone(), ts.iter().collect()))
            .collect();
        Index {
            inst,
            rels,
            cache: RefCell::new(HashMap::new()),
            all: RefCell::new(HashMap::new()),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    fn tuples(&self, rel: &str) -> &[&'a Tuple] {
        self.rels.get(rel).map(Vec::as_slice).unwrap_or(&[])
    }

    fn candidates(&self, atom: &CAtom, binding: &[Option<Value>]) -> Rc<Vec<u32>> {
        let tuples = self.tuples(&atom.rel);
        if tuples.is_empty() {
            return Rc::new(Vec::new());
        }
        let mut mask = Vec::with_capacity(atom.slots.len());
        let mut key = Vec::new();
        for s in &atom.slots {
            match s {
                Slot::Val(v) => {
                    mask.push(true);
                    key.push(v.clone());
                }
                Slot::Var(x) => match &binding[*x] {
                    Some(v) => {
                        mask.push(true);
                        key.push(v.clone());
                    }
                    None => mask.push(false),
                },
            }
        }
        if key.is_empty() {
            let mut all = self.all.borrow_mut();
            return all
                .entry(atom.rel.clone())
                .or_insert_with(|| Rc::new((0..tuples.len() as u32).collect()))
                .clone();
        }
        let idx = {
            let mut cache = self.cache.borrow_mut();
            cache
                .entry((atom.rel.clone(), mask.clone()))
                .or_insert_with(|| {
                    let mut m: HashMap<Vec<Value>, Vec<u32>> = HashMap::new();
                    for (i, t) in tuples.iter().enumerate() {
                        let k: Vec<Value> = t
                            .iter()
                            .zip(&mask)
                            .filter(|(_, b)| **b)
                            .map(|(v, _)| v.clone())
                            .collect();
                        m.entry(k).or_default().push(i as u32);
                    }
                    Rc::new(m.into_iter().map(|(k, v)| (k, Rc::new(v))).collect())
                })
                .clone()
        };
        idx.get(&key).cloned().unwrap_or_default()
    }
}

/// Every extension of `seed` mapping all `atoms` into `target`, in lexicographic order of
/// the images of the variables (numbered by first occurrence).
pub fn find_homomorphisms(
    atoms: &[Atom],
    target: &Instance,
    seed: &Homomorphism,
) -> Vec<Homomorphism> {
    let leading: Vec<Name> = seed.keys().cloned().collect();
    let p = Pattern::with_vars(atoms, &leading);
    let idx = Index::new(target);
    let mut out: Vec<Vec<Option<Value>>> = Vec::new();
    p.search(&idx, p.binding_from(seed), &mut |b| {
        out.push(b.to_vec());
        ControlFlow::Continue(())
    });
    let order = Pattern::new(atoms);
    let perm: Vec<Option<usize>> = order
        .vars()
        .iter()
        .map(|v| p.var_index(v))
        .collect();
    out.sort_by(|a, b| {
        let ka = perm.iter().map(|i| i.and_then(|i| a[i].clone()));
        let kb = perm.iter().map(|i| i.and_then(|i| b[i].clone()));
        ka.cmp(kb)
    });
    out.dedup();
    out.into_iter().map(|b| p.to_hom(&b)).collect()
}

/// Whether some extension of `seed` maps `atoms` into `target`.
pub fn has_homomorphism(atoms: &[Atom], target: &Instance, seed: &Homomorphism) -> bool {
    let leading: Vec<Name> = seed.keys().cloned().collect();
    let p = Pattern::with_vars(atoms, &leading);
    let idx = Index::new(target);
    p.exists(&idx, p.binding_from(seed))
}

/// Whether there is a homomorphism from instance `from` to instance `to` that fixes
/// constants (nulls are mapped freely).
pub fn instance_maps_into(from: &Instance, to: &Instance) -> bool {
    let atoms = instance_atoms(from);
    has_homomorphism(&atoms, to, &Homomorphism::new())
}

/// Reads the facts of an instance as atoms, with nulls as variables named `@id`.
pub fn instance_atoms(inst: &Instance) -> Vec<Atom> {
    inst.facts()
        .map(|f| Atom {
            relation: f.relation.clone(),
            args: f
                .args
                .iter()
                .map(|v| match v {
                    Value::Const(c) => Term::Const(c.clone()),
                    Value::Null(n) => Term::Var(crate::model::name(&format!("@{n}"))),
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Fact, Value};

    fn inst(facts: &[(&str, &[&str])]) -> Instance {
        Instance::from_facts(facts.iter().map(|(r, a)| Fact::consts(r, a)))
    }

    #[test]
    fn loop_matches_loop_only() {
        let q = vec![Atom::parse_args("U", &["x", "x"])];
        let h = find_homomorphisms(&q, &inst(&[("U", &["a", "a"])]), &Homomorphism::new());
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].get("x"), Some(&Value::constant("a")));
        let h = find_homomorphisms(&q, &inst(&[("U", &["a", "b"])]), &Homomorphism::new());
        assert!(h.is_empty());
    }

    #[test]
    fn join_on_shared_variable() {
        let q = vec![Atom::parse_args("F1", &["x"]), Atom::parse_args("F2", &["x"])];
        let t = inst(&[("F1", &["a"]), ("F2", &["a"]), ("F2", &["b"])]);
        let h = find_homomorphisms(&q, &t, &Homomorphism::new());
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].get("x"), Some(&Value::constant("a")));
    }

    #[test]
    fn results_are_lexicographic() {
        let q = vec![Atom::parse_args("E", &["x", "y"])];
        let t = inst(&[("E", &["b", "a"]), ("E", &["a", "b"]), ("E", &["a", "a"])]);
        let h = find_homomorphisms(&q, &t, &Homomorphism::new());
        let pairs: Vec<(String, String)> = h
            .iter()
            .map(|m| (m["x"].to_string(), m["y"].to_string()))
            .collect();
        assert_eq!(
            pairs,
            vec![
                ("a".into(), "a".into()),
                ("a".into(), "b".into()),
                ("b".into(), "a".into())
            ]
        );
    }

    #[test]
    fn seed_restricts_search() {
        let q = vec![Atom::parse_args("E", &["x", "y"])];
        let t = inst(&[("E", &["a", "b"]), ("E", &["c", "d"])]);
        let mut seed = Homomorphism::new();
        seed.insert(crate::model::name("x"), Value::constant("c"));
        let h = find_homomorphisms(&q, &t, &seed);
        assert_eq!(h.len(), 1);
        assert_eq!(h[0]["y"], Value::constant("d"));
    }

    #[test]
    fn constants_must_match() {
        let q = vec![Atom::parse_args("App", &["Smith", "a", "Jones"])];
        let t = inst(&[("App", &["Smith", "1", "Jones"])]);
        assert!(has_homomorphism(&q, &t, &Homomorphism::new()));
        let t = inst(&[("App", &["Smith", "1", "Doe"])]);
        assert!(!has_homomorphism(&q, &t, &Homomorphism::new()));
    }

    #[test]
    fn zero_ary_atoms() {
        let q = vec![Atom::new("T", vec![])];
        let mut t = Instance::new();
        assert!(!has_homomorphism(&q, &t, &Homomorphism::new()));
        t.insert(Fact::new("T", vec![]));
        assert!(has_homomorphism(&q, &t, &Homomorphism::new()));
    }

    #[test]
    fn empty_atom_set_has_one_hom() {
        let h = find_homomorphisms(&[], &Instance::new(), &Homomorphism::new());
        assert_eq!(h.len(), 1);
    }
}
