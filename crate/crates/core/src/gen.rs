//! Seeded random problem generators.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    Atom, ConjunctiveQuery, ConstraintSet, Dependency, Egd, Fact, HeadDisjunct, Instance, Schema,
    Term, Tgd, UnionQuery, Value, Visibility,
};
use crate::textio::ProblemFile;
use crate::model::name;

/// Shape of the generated constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Inclusion dependencies.
    Id,
    /// Linear TGDs, possibly with repeated variables and several head atoms.
    Linear,
    /// TGDs with one or two body atoms sharing a variable.
    Connected,
    /// Arbitrary TGDs with up to two body atoms.
    General,
}

/// Generator parameters.
#[derive(Clone, Debug)]
pub struct GenConfig {
    pub shape: Shape,
    pub max_relations: usize,
    pub max_arity: usize,
    pub max_constraints: usize,
    /// Size of the constant pool for the visible instance.
    pub max_adom: usize,
    pub max_facts: usize,
    pub query_disjuncts: usize,
    pub max_query_atoms: usize,
    /// Probability that a query argument is a constant.
    pub query_constants: f64,
    pub egds: bool,
    pub disjunctive: bool,
    /// Force a connected query body.
    pub connected_query: bool,
    /// Allow nullary relations.
    pub nullary: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            shape: Shape::Id,
            max_relations: 3,
            max_arity: 2,
            max_constraints: 3,
            max_adom: 3,
            max_facts: 4,
            query_disjuncts: 1,
            max_query_atoms: 2,
            query_constants: 0.0,
            egds: false,
            disjunctive: false,
            connected_query: false,
            nullary: false,
        }
    }
}

/// A generated problem: schema, constraints, a Boolean query and a visible instance.
#[derive(Clone, Debug)]
pub struct Problem {
    pub schema: Schema,
    pub constraints: ConstraintSet,
    pub query: UnionQuery,
    pub instance: Instance,
}

impl Problem {
    pub fn to_file(&self) -> ProblemFile {
        let mut p = ProblemFile {
            schema: self.schema.clone(),
            constraints: self.constraints.clone(),
            ..ProblemFile::default()
        };
        p.queries.insert(name("Q"), self.query.clone());
        p.instances.insert(name("V"), self.instance.clone());
        p
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Constant pool `c0, c1, ...`.
pub fn constant_pool(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn random_schema<R: Rng>(r: &mut R, cfg: &GenConfig) -> Schema {
    let n = r.random_range(1..=cfg.max_relations.max(1));
    let lo = if cfg.nullary { 0 } else { 1 };
    let mut s = Schema::new();
    let hidden_at = r.random_range(0..n);
    for i in 0..n {
        let arity = r.random_range(lo..=cfg.max_arity.max(lo));
        let vis = if i == hidden_at {
            Visibility::Hidden
        } else if r.random_bool(0.5) {
            Visibility::Visible
        } else {
            Visibility::Hidden
        };
        s = s.with(&format!("R{i}"), arity, vis);
    }
    s
}

fn var(i: usize) -> Term {
    Term::var(&format!("x{i}"))
}

/// Atom over `rel` whose arguments are drawn from `pool` (distinct when `distinct`).
fn atom_from<R: Rng>(r: &mut R, rel: &str, arity: usize, pool: &[usize], distinct: bool) -> Atom {
    let mut args = Vec::with_capacity(arity);
    let mut avail: Vec<usize> = pool.to_vec();
    for _ in 0..arity {
        let i = if distinct && !avail.is_empty() {
            let k = r.random_range(0..avail.len());
            avail.swap_remove(k)
        } else {
            *pool.choose(r).expect("nonempty pool")
        };
        args.push(var(i));
    }
    Atom::new(rel, args)
}

fn fresh_atom(rel: &str, arity: usize, next: &mut usize) -> Atom {
    let args = (0..arity)
        .map(|_| {
            *next += 1;
            var(*next - 1)
        })
        .collect();
    Atom::new(rel, args)
}

fn body_vars(body: &[Atom]) -> Vec<usize> {
    let set: BTreeSet<usize> = body
        .iter()
        .flat_map(|a| a.vars())
        .map(|v| v[1..].parse::<usize>().expect("generated variable"))
        .collect();
    set.into_iter().collect()
}

fn random_body<R: Rng>(r: &mut R, s: &Schema, cfg: &GenConfig) -> Vec<Atom> {
    let rels: Vec<_> = s.relations().cloned().collect();
    let d = rels.choose(r).expect("schema is nonempty");
    match cfg.shape {
        Shape::Id => {
            let mut next = 0;
            vec![fresh_atom(&d.name, d.arity, &mut next)]
        }
        Shape::Linear => {
            let width = d.arity.max(1);
            let pool: Vec<usize> = (0..r.random_range(1..=width)).collect();
            vec![atom_from(r, &d.name, d.arity, &pool, false)]
        }
        Shape::Connected | Shape::General => {
            let mut next = 0;
            let first = fresh_atom(&d.name, d.arity, &mut next);
            if r.random_bool(0.5) {
                return vec![first];
            }
            let e = rels.choose(r).expect("schema is nonempty");
            let mut pool: Vec<usize> = (0..next).collect();
            let shared = cfg.shape == Shape::Connected;
            if shared && (pool.is_empty() || e.arity == 0) {
                return vec![first];
            }
            for _ in 0..e.arity {
                pool.push(next);
                next += 1;
            }
            let mut second = atom_from(r, &e.name, e.arity, &pool, false);
            if shared && next > 0 && d.arity > 0 {
                let pos = r.random_range(0..e.arity);
                second.args[pos] = var(r.random_range(0..d.arity));
            }
            vec![first, second]
        }
    }
}

fn random_head<R: Rng>(r: &mut R, s: &Schema, cfg: &GenConfig, bvars: &[usize]) -> HeadDisjunct {
    let rels: Vec<_> = s.relations().cloned().collect();
    let atoms = if cfg.shape == Shape::Id { 1 } else { r.random_range(1..=2) };
    let mut next = bvars.iter().max().map_or(0, |m| m + 1);
    let first_ex = next;
    let mut out = Vec::new();
    for _ in 0..atoms {
        let d = rels.choose(r).expect("schema is nonempty");
        let mut args = Vec::with_capacity(d.arity);
        let mut used = BTreeSet::new();
        for _ in 0..d.arity {
            let pick_frontier = !bvars.is_empty() && r.random_bool(0.6);
            let t = if pick_frontier {
                let cand: Vec<usize> = if cfg.shape == Shape::Id {
                    bvars.iter().copied().filter(|v| !used.contains(v)).collect()
                } else {
                    bvars.to_vec()
                };
                match cand.choose(r) {
                    Some(&v) => v,
                    None => {
                        next += 1;
                        next - 1
                    }
                }
            } else if cfg.shape != Shape::Id && next > first_ex && r.random_bool(0.3) {
                r.random_range(first_ex..next)
            } else {
                next += 1;
                next - 1
            };
            used.insert(t);
            args.push(var(t));
        }
        out.push(Atom::new(&d.name, args));
    }
    let exists: Vec<String> = (first_ex..next).map(|i| format!("x{i}")).collect();
    let ex: Vec<&str> = exists.iter().map(String::as_str).collect();
    let used: BTreeSet<String> = out
        .iter()
        .flat_map(|a| a.vars().map(|v| v.to_string()))
        .collect();
    let ex: Vec<&str> = ex.into_iter().filter(|v| used.contains(*v)).collect();
    HeadDisjunct::new(&ex, out)
}

fn random_constraints<R: Rng>(r: &mut R, s: &Schema, cfg: &GenConfig) -> ConstraintSet {
    let n = r.random_range(0..=cfg.max_constraints);
    let mut c = ConstraintSet::default();
    for _ in 0..n {
        let body = random_body(r, s, cfg);
        let bvars = body_vars(&body);
        if cfg.egds && bvars.len() >= 2 && r.random_bool(0.2) {
            let i = r.random_range(0..bvars.len());
            let mut j = r.random_range(0..bvars.len());
            if i == j {
                j = (j + 1) % bvars.len();
            }
            c.push(Egd {
                body,
                lhs: name(&format!("x{}", bvars[i])),
                rhs: var(bvars[j]),
            });
            continue;
        }
        let mut heads = vec![random_head(r, s, cfg, &bvars)];
        if cfg.disjunctive && r.random_bool(0.3) {
            heads.push(random_head(r, s, cfg, &bvars));
        }
        c.push(Tgd::new(body, heads));
    }
    c
}

fn random_cq<R: Rng>(r: &mut R, s: &Schema, cfg: &GenConfig, consts: &[String]) -> ConjunctiveQuery {
    let rels: Vec<_> = s.relations().cloned().collect();
    let n = r.random_range(1..=cfg.max_query_atoms.max(1));
    let mut atoms: Vec<Atom> = Vec::new();
    let mut nvars = 0usize;
    for k in 0..n {
        let d = rels.choose(r).expect("schema is nonempty");
        let mut args = Vec::with_capacity(d.arity);
        for p in 0..d.arity {
            let t = if !consts.is_empty() && r.random_bool(cfg.query_constants) {
                Term::constant(consts.choose(r).expect("nonempty"))
            } else if nvars > 0 && (r.random_bool(0.4) || (cfg.connected_query && k > 0 && p == 0)) {
                var(r.random_range(0..nvars))
            } else {
                nvars += 1;
                var(nvars - 1)
            };
            args.push(t);
        }
        atoms.push(Atom::new(&d.name, args));
    }
    if cfg.connected_query && !crate::classify::body_connected(&atoms) {
        atoms.truncate(1);
    }
    ConjunctiveQuery::boolean(atoms)
}

fn random_instance<R: Rng>(r: &mut R, s: &Schema, cfg: &GenConfig, consts: &[String]) -> Instance {
    let vis: Vec<_> = s.visible_relations().cloned().collect();
    let mut inst = Instance::new();
    if vis.is_empty() || consts.is_empty() {
        return inst;
    }
    let n = r.random_range(0..=cfg.max_facts);
    for _ in 0..n {
        let d = vis.choose(r).expect("nonempty");
        let args = (0..d.arity)
            .map(|_| Value::constant(consts.choose(r).expect("nonempty")))
            .collect();
        inst.insert(Fact::new(&d.name, args));
    }
    inst
}

/// A random problem drawn according to `cfg`.
pub fn random_problem<R: Rng>(r: &mut R, cfg: &GenConfig) -> Problem {
    let schema = random_schema(r, cfg);
    let constraints = random_constraints(r, &schema, cfg);
    let consts = constant_pool(r.random_range(1..=cfg.max_adom.max(1)));
    let query = UnionQuery::new(
        (0..cfg.query_disjuncts.max(1))
            .map(|_| random_cq(r, &schema, cfg, &consts))
            .collect(),
    );
    let instance = random_instance(r, &schema, cfg, &consts);
    Problem {
        schema,
        constraints,
        query,
        instance,
    }
}

/// Directed graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    pub nodes: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl Digraph {
    pub fn random<R: Rng>(r: &mut R, max_nodes: usize, density: f64) -> Digraph {
        let nodes = r.random_range(1..=max_nodes.max(1));
        let mut edges = BTreeSet::new();
        for a in 0..nodes {
            for b in 0..nodes {
                if a != b && r.random_bool(density) {
                    edges.insert((a, b));
                }
            }
        }
        Digraph { nodes, edges }
    }
}

fn node(i: usize) -> Value {
    Value::constant(&format!("n{i}"))
}

fn length(i: usize) -> Value {
    Value::constant(&i.to_string())
}

/// Reachability problem: visible `N`, `E`, `Src`, `Tgt` and proof steps `P`; hidden `T`
/// with `T(x,z,j) -> exists y, i. T(x,y,i) & P(x,y,i,z,j)` and query
/// `exists x, z, j. Src(x) & Tgt(z) & T(x,z,j)`. Negative implication holds iff the
/// target is unreachable from the source.
pub fn reachability_problem(g: &Digraph, src: usize, tgt: usize) -> Problem {
    let schema = Schema::new()
        .visible("N", 1)
        .visible("E", 2)
        .visible("Src", 1)
        .visible("Tgt", 1)
        .visible("P", 5)
        .hidden("T", 3);
    let tgd = Tgd::simple(
        vec![Atom::parse_args("T", &["x", "z", "j"])],
        vec![
            Atom::parse_args("T", &["x", "y", "i"]),
            Atom::parse_args("P", &["x", "y", "i", "z", "j"]),
        ],
    );
    let constraints = ConstraintSet::new(vec![Dependency::Tgd(tgd)]);
    let query = UnionQuery::boolean(vec![
        Atom::parse_args("Src", &["x"]),
        Atom::parse_args("Tgt", &["z"]),
        Atom::parse_args("T", &["x", "z", "j"]),
    ]);
    let mut v = Instance::new();
    for x in 0..g.nodes {
        v.insert(Fact::new("N", vec![node(x)]));
        v.insert(Fact::new("P", vec![node(x), node(x), length(0), node(x), length(0)]));
        for &(y, z) in &g.edges {
            for i in 0..g.nodes {
                v.insert(Fact::new(
                    "P",
                    vec![node(x), node(y), length(i), node(z), length(i + 1)],
                ));
            }
        }
    }
    for &(a, b) in &g.edges {
        v.insert(Fact::new("E", vec![node(a), node(b)]));
    }
    v.insert(Fact::new("Src", vec![node(src)]));
    v.insert(Fact::new("Tgt", vec![node(tgt)]));
    Problem {
        schema,
        constraints,
        query,
        instance: v,
    }
}
