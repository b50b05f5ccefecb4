//! The classical chase and the visible chase tree.
//!
//! Every chase step creates nodes: a TGD step creates one child per head disjunct and per
//! grounding of the new visible facts into the visible part of the initial instance; an
//! EGD step creates one child holding the identified instance. Failures become `Dummy`
//! nodes. Steps follow a per-branch FIFO over active triggers: when the queue of a node
//! is empty, all active triggers are recomputed in dependency order and appended.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::eval::critical_instance;
use crate::hom::{Index, Pattern};
use crate::model::{
    name, Atom, ConstraintSet, Dependency, Fact, Homomorphism, Instance, Name, Schema, Term,
    Value,
};

/// Resource limits for one chase run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChaseBudget {
    pub max_nodes: usize,
    pub max_facts: usize,
    pub max_depth: usize,
}

impl Default for ChaseBudget {
    fn default() -> Self {
        ChaseBudget {
            max_nodes: 10_000,
            max_facts: 2_000,
            max_depth: 200,
        }
    }
}

impl ChaseBudget {
    /// Scales node and depth limits by `k`.
    pub fn scaled(self, k: usize) -> Self {
        ChaseBudget {
            max_nodes: self.max_nodes.saturating_mul(k),
            max_facts: self.max_facts.saturating_mul(k),
            max_depth: self.max_depth.saturating_mul(k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeStatus {
    /// Not yet expanded.
    Open,
    /// Expanded into children.
    Internal,
    /// No active trigger: the instance satisfies every dependency.
    Leaf,
    /// Failed grounding or identification.
    Dummy,
    /// Expansion stopped by the budget.
    BudgetCut,
    /// Closed by the caller's predicate.
    Closed,
}

/// The step that produced a node from its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppliedStep {
    pub dependency: usize,
    /// Head disjunct for TGD steps.
    pub disjunct: Option<usize>,
    pub trigger: Homomorphism,
    /// Null replacements made by grounding or identification.
    pub grounding: BTreeMap<u64, Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaseNode {
    pub id: usize,
    pub instance: Instance,
    pub status: NodeStatus,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
    pub step: Option<AppliedStep>,
    /// Reason for `Dummy` and `BudgetCut` nodes.
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChaseStats {
    pub nodes: usize,
    pub open: usize,
    pub internal: usize,
    pub leaves: usize,
    pub dummies: usize,
    pub budget_cut: usize,
    pub closed: usize,
    pub max_depth: usize,
}

/// Nodes indexed by id; the root has id 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaseTree {
    pub nodes: Vec<ChaseNode>,
    pub root: usize,
    /// Open nodes in processing order.
    pub frontier: VecDeque<usize>,
    /// Set when the stop predicate ended the run early.
    pub stopped: bool,
}

impl ChaseTree {
    pub fn node(&self, id: usize) -> &ChaseNode {
        &self.nodes[id]
    }

    pub fn with_status(&self, st: NodeStatus) -> impl Iterator<Item = &ChaseNode> {
        self.nodes.iter().filter(move |n| n.status == st)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ChaseNode> {
        self.with_status(NodeStatus::Leaf)
    }

    pub fn stats(&self) -> ChaseStats {
        let mut s = ChaseStats {
            nodes: self.nodes.len(),
            ..ChaseStats::default()
        };
        for n in &self.nodes {
            s.max_depth = s.max_depth.max(n.depth);
            match n.status {
                NodeStatus::Open => s.open += 1,
                NodeStatus::Internal => s.internal += 1,
                NodeStatus::Leaf => s.leaves += 1,
                NodeStatus::Dummy => s.dummies += 1,
                NodeStatus::BudgetCut => s.budget_cut += 1,
                NodeStatus::Closed => s.closed += 1,
            }
        }
        s
    }

    /// Every branch ended in a Leaf, Dummy or Closed node.
    pub fn is_complete(&self) -> bool {
        !self.stopped
            && self
                .nodes
                .iter()
                .all(|n| !matches!(n.status, NodeStatus::Open | NodeStatus::BudgetCut))
    }

    /// Complete and every branch failed.
    pub fn all_dummy(&self) -> bool {
        self.is_complete()
            && self
                .nodes
                .iter()
                .all(|n| matches!(n.status, NodeStatus::Internal | NodeStatus::Dummy))
    }

    /// Branch terminals: nodes that were not expanded.
    pub fn terminals(&self) -> impl Iterator<Item = &ChaseNode> {
        self.nodes.iter().filter(|n| n.status != NodeStatus::Internal)
    }
}

/// Hooks and switches for [`visible_chase_with`].
#[derive(Clone, Copy)]
pub struct ChaseOptions<'a> {
    /// Nodes whose instance satisfies the predicate are `Closed` and not expanded.
    pub close_when: Option<&'a dyn Fn(&Instance) -> bool>,
    /// Ends the run after a node for which the predicate holds reaches its final status.
    pub stop_when: Option<&'a dyn Fn(&ChaseNode) -> bool>,
    /// Keep instances of expanded nodes (otherwise they are emptied).
    pub keep_internal: bool,
}

impl Default for ChaseOptions<'_> {
    fn default() -> Self {
        ChaseOptions {
            close_when: None,
            stop_when: None,
            keep_internal: true,
        }
    }
}

enum Kind {
    Tgd(Vec<Pattern>),
    Egd {
        lhs: usize,
        rhs: std::result::Result<Value, usize>,
    },
}

struct Compiled {
    body: Pattern,
    kind: Kind,
}

fn compile(c: &ConstraintSet) -> Vec<Compiled> {
    c.deps
        .iter()
        .map(|d| {
            let body = Pattern::new(d.body());
            let kind = match d {
                Dependency::Tgd(t) => Kind::Tgd(
                    t.heads
                        .iter()
                        .map(|h| Pattern::with_vars(&h.atoms, body.vars()))
                        .collect(),
                ),
                Dependency::Egd(e) => Kind::Egd {
                    lhs: body.var_index(&e.lhs).expect("lhs occurs in body"),
                    rhs: match &e.rhs {
                        Term::Var(v) => Err(body.var_index(v).expect("rhs occurs in body")),
                        Term::Const(k) => Ok(Value::Const(k.clone())),
                    },
                },
            };
            Compiled { body, kind }
        })
        .collect()
}

type Trigger = (usize, Vec<Value>);

fn egd_values(lhs: usize, rhs: &std::result::Result<Value, usize>, b: &[Value]) -> (Value, Value) {
    let l = b[lhs].clone();
    let r = match rhs {
        Ok(v) => v.clone(),
        Err(i) => b[*i].clone(),
    };
    (l, r)
}

fn is_active(cd: &Compiled, b: &[Value], idx: &Index<'_>) -> bool {
    match &cd.kind {
        Kind::Tgd(heads) => {
            let init: Vec<Option<Value>> = b.iter().cloned().map(Some).collect();
            !heads.iter().any(|h| h.exists(idx, init.clone()))
        }
        Kind::Egd { lhs, rhs } => {
            let (l, r) = egd_values(*lhs, rhs, b);
            l != r
        }
    }
}

fn active_triggers(compiled: &[Compiled], inst: &Instance) -> VecDeque<Trigger> {
    let idx = Index::new(inst);
    let mut out = VecDeque::new();
    for (di, cd) in compiled.iter().enumerate() {
        let mut found: Vec<Vec<Value>> = Vec::new();
        cd.body.search(&idx, Vec::new(), &mut |b| {
            let vals: Vec<Value> = b.iter().map(|v| v.clone().expect("bound")).collect();
            if is_active(cd, &vals, &idx) {
                found.push(vals);
            }
            ControlFlow::Continue(())
        });
        found.sort();
        found.dedup();
        out.extend(found.into_iter().map(|b| (di, b)));
    }
    out
}

fn subst(v: &Value, g: &BTreeMap<u64, Value>) -> Value {
    match v {
        Value::Null(n) => g.get(n).cloned().unwrap_or_else(|| v.clone()),
        _ => v.clone(),
    }
}

fn rename_queue(q: &VecDeque<Trigger>, g: &BTreeMap<u64, Value>) -> VecDeque<Trigger> {
    if g.is_empty() {
        return q.clone();
    }
    let mut seen = BTreeSet::new();
    let mut out = VecDeque::new();
    for (d, b) in q {
        let nb: Vec<Value> = b.iter().map(|v| subst(v, g)).collect();
        if seen.insert((*d, nb.clone())) {
            out.push_back((*d, nb));
        }
    }
    out
}

/// A child produced by one step.
struct Child {
    instance: Option<Instance>,
    disjunct: Option<usize>,
    grounding: BTreeMap<u64, Value>,
    note: Option<String>,
}

struct Runner<'c> {
    c: &'c ConstraintSet,
    s: &'c Schema,
    compiled: Vec<Compiled>,
    vis0: Instance,
    next_null: u64,
}

impl Runner<'_> {
    fn fresh(&mut self) -> Value {
        let n = self.next_null;
        self.next_null += 1;
        Value::Null(n)
    }

    fn tgd_children(&mut self, di: usize, b: &[Value], inst: &Instance) -> Vec<Child> {
        let Dependency::Tgd(t) = &self.c.deps[di] else {
            unreachable!()
        };
        let body_vars = self.compiled[di].body.vars().to_vec();
        let mut out = Vec::new();
        let mut seen: BTreeSet<Instance> = BTreeSet::new();
        if t.heads.is_empty() {
            out.push(Child {
                instance: None,
                disjunct: None,
                grounding: BTreeMap::new(),
                note: Some("denial constraint triggered".into()),
            });
        }
        for (j, head) in t.heads.iter().enumerate() {
            let mut h: Homomorphism = body_vars.iter().cloned().zip(b.iter().cloned()).collect();
            for y in &head.exists {
                let v = self.fresh();
                h.insert(y.clone(), v);
            }
            let mut new_facts: Vec<Fact> = head
                .atoms
                .iter()
                .map(|a| a.ground(&h).expect("head variables are bound"))
                .filter(|f| !inst.contains(f))
                .collect();
            new_facts.sort();
            new_facts.dedup();
            let mut next = inst.clone();
            for f in &new_facts {
                next.insert(f.clone());
            }
            let new_vis: Vec<&Fact> = new_facts
                .iter()
                .filter(|f| self.s.is_visible(&f.relation))
                .collect();
            if new_vis.is_empty() {
                if seen.insert(next.clone()) {
                    out.push(Child {
                        instance: Some(next),
                        disjunct: Some(j),
                        grounding: BTreeMap::new(),
                        note: None,
                    });
                }
                continue;
            }
            let atoms: Vec<Atom> = new_vis
                .iter()
                .map(|f| Atom {
                    relation: f.relation.clone(),
                    args: f
                        .args
                        .iter()
                        .map(|v| match v {
                            Value::Const(k) => Term::Const(k.clone()),
                            Value::Null(n) => Term::Var(name(&format!("@{n}"))),
                        })
                        .collect(),
                })
                .collect();
            let p = Pattern::new(&atoms);
            let idx = Index::new(&self.vis0);
            let mut gs: Vec<Vec<Value>> = Vec::new();
            p.search(&idx, Vec::new(), &mut |g| {
                gs.push(g.iter().map(|v| v.clone().expect("bound")).collect());
                ControlFlow::Continue(())
            });
            gs.sort();
            gs.dedup();
            let nulls: Vec<u64> = p
                .vars()
                .iter()
                .map(|v| v[1..].parse().expect("null variable"))
                .collect();
            let mut any = false;
            for g in gs {
                let gmap: BTreeMap<u64, Value> = nulls.iter().copied().zip(g).collect();
                let grounded = next.map_values(|v| subst(v, &gmap));
                if grounded.visible_part(self.s) != self.vis0 {
                    continue;
                }
                any = true;
                if seen.insert(grounded.clone()) {
                    out.push(Child {
                        instance: Some(grounded),
                        disjunct: Some(j),
                        grounding: gmap,
                        note: None,
                    });
                }
            }
            if !any {
                out.push(Child {
                    instance: None,
                    disjunct: Some(j),
                    grounding: BTreeMap::new(),
                    note: Some(format!(
                        "no grounding of {} into the visible domain",
                        new_vis
                            .iter()
                            .map(|f| f.to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    )),
                });
            }
        }
        out
    }

    fn egd_child(&self, di: usize, b: &[Value], inst: &Instance) -> Child {
        let Kind::Egd { lhs, rhs } = &self.compiled[di].kind else {
            unreachable!()
        };
        let (l, r) = egd_values(*lhs, rhs, b);
        let (from, to) = match (&l, &r) {
            (Value::Const(_), Value::Const(_)) => {
                return Child {
                    instance: None,
                    disjunct: None,
                    grounding: BTreeMap::new(),
                    note: Some(format!("distinct constants {l} and {r} identified")),
                }
            }
            (Value::Null(n), Value::Const(_)) => (*n, r.clone()),
            (Value::Const(_), Value::Null(n)) => (*n, l.clone()),
            (Value::Null(x), Value::Null(y)) => {
                if x > y {
                    (*x, r.clone())
                } else {
                    (*y, l.clone())
                }
            }
        };
        let g: BTreeMap<u64, Value> = [(from, to)].into_iter().collect();
        let next = inst.map_values(|v| subst(v, &g));
        if next.visible_part(self.s) != self.vis0 {
            return Child {
                instance: None,
                disjunct: None,
                grounding: g,
                note: Some(format!("identifying {l} and {r} changes the visible part")),
            };
        }
        Child {
            instance: Some(next),
            disjunct: None,
            grounding: g,
            note: None,
        }
    }
}

/// The visible chase tree of `f0` under `c` with default options.
pub fn visible_chase(c: &ConstraintSet, s: &Schema, f0: &Instance, b: ChaseBudget) -> ChaseTree {
    visible_chase_with(c, s, f0, b, ChaseOptions::default())
}

/// The visible chase tree of `f0` under `c`.
///
/// New visible facts of a TGD step are grounded by every homomorphism that maps their
/// nulls into the values of `Visible(f0)` and keeps the visible part equal to
/// `Visible(f0)`; without such a homomorphism the child is `Dummy`. EGD steps that equate
/// distinct constants or change the visible part produce `Dummy`.
pub fn visible_chase_with(
    c: &ConstraintSet,
    s: &Schema,
    f0: &Instance,
    b: ChaseBudget,
    opts: ChaseOptions<'_>,
) -> ChaseTree {
    let mut run = Runner {
        c,
        s,
        compiled: compile(c),
        vis0: f0.visible_part(s),
        next_null: f0.max_null().map_or(1, |n| n + 1),
    };
    let root_status = if opts.close_when.is_some_and(|p| p(f0)) {
        NodeStatus::Closed
    } else {
        NodeStatus::Open
    };
    let mut tree = ChaseTree {
        nodes: vec![ChaseNode {
            id: 0,
            instance: f0.clone(),
            status: root_status,
            parent: None,
            children: Vec::new(),
            depth: 0,
            step: None,
            note: None,
        }],
        root: 0,
        frontier: VecDeque::new(),
        stopped: false,
    };
    let mut queues: HashMap<usize, VecDeque<Trigger>> = HashMap::new();
    if root_status == NodeStatus::Open {
        tree.frontier.push_back(0);
        queues.insert(0, VecDeque::new());
    } else if opts.stop_when.is_some_and(|p| p(&tree.nodes[0])) {
        tree.stopped = true;
    }
    while let Some(id) = tree.frontier.pop_front() {
        let mut queue = queues.remove(&id).unwrap_or_default();
        let node = &tree.nodes[id];
        if node.depth >= b.max_depth || node.instance.len() > b.max_facts {
            let note = if node.depth >= b.max_depth {
                "depth limit"
            } else {
                "fact limit"
            };
            tree.nodes[id].status = NodeStatus::BudgetCut;
            tree.nodes[id].note = Some(note.into());
            if opts.stop_when.is_some_and(|p| p(&tree.nodes[id])) {
                tree.stopped = true;
                break;
            }
            continue;
        }
        let mut step: Option<(Trigger, Vec<Child>)> = None;
        let mut recomputed = false;
        loop {
            let Some((di, bind)) = queue.pop_front() else {
                if recomputed {
                    break;
                }
                queue = active_triggers(&run.compiled, &tree.nodes[id].instance);
                recomputed = true;
                continue;
            };
            let inst = &tree.nodes[id].instance;
            let idx = Index::new(inst);
            if !is_active(&run.compiled[di], &bind, &idx) {
                continue;
            }
            let children = match &run.compiled[di].kind {
                Kind::Tgd(_) => run.tgd_children(di, &bind, inst),
                Kind::Egd { .. } => vec![run.egd_child(di, &bind, inst)],
            };
            step = Some(((di, bind), children));
            break;
        }
        let Some(((di, bind), children)) = step else {
            tree.nodes[id].status = NodeStatus::Leaf;
            if opts.stop_when.is_some_and(|p| p(&tree.nodes[id])) {
                tree.stopped = true;
                break;
            }
            continue;
        };
        if tree.nodes.len() + children.len() > b.max_nodes {
            tree.nodes[id].status = NodeStatus::BudgetCut;
            tree.nodes[id].note = Some("node limit".into());
            if opts.stop_when.is_some_and(|p| p(&tree.nodes[id])) {
                tree.stopped = true;
                break;
            }
            continue;
        }
        let trigger = run.compiled[di].body.to_hom(
            &bind.iter().cloned().map(Some).collect::<Vec<_>>(),
        );
        tree.nodes[id].status = NodeStatus::Internal;
        if !opts.keep_internal {
            tree.nodes[id].instance = Instance::new();
        }
        let depth = tree.nodes[id].depth + 1;
        for ch in children {
            let cid = tree.nodes.len();
            let (instance, status) = match ch.instance {
                None => (Instance::new(), NodeStatus::Dummy),
                Some(i) if opts.close_when.is_some_and(|p| p(&i)) => (i, NodeStatus::Closed),
                Some(i) => (i, NodeStatus::Open),
            };
            if status == NodeStatus::Open {
                queues.insert(cid, rename_queue(&queue, &ch.grounding));
                tree.frontier.push_back(cid);
            }
            tree.nodes.push(ChaseNode {
                id: cid,
                instance,
                status,
                parent: Some(id),
                children: Vec::new(),
                depth,
                step: Some(AppliedStep {
                    dependency: di,
                    disjunct: ch.disjunct,
                    trigger: trigger.clone(),
                    grounding: ch.grounding,
                }),
                note: ch.note,
            });
            tree.nodes[id].children.push(cid);
            if status != NodeStatus::Open && opts.stop_when.is_some_and(|p| p(&tree.nodes[cid])) {
                tree.stopped = true;
            }
        }
        if tree.stopped {
            break;
        }
    }
    tree
}

/// Outcome of [`classical_chase`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassicalOutcome {
    Saturated(Instance),
    BudgetExceeded(Instance),
    EgdFailure,
}

/// Restricted chase of `i` under non-disjunctive TGDs and EGDs, with FIFO fairness.
pub fn classical_chase(i: &Instance, c: &ConstraintSet, b: ChaseBudget) -> Result<ClassicalOutcome> {
    Ok(classical_chase_tree(i, c, b)?.0)
}

/// [`classical_chase`] together with the single-branch step tree.
pub fn classical_chase_tree(
    i: &Instance,
    c: &ConstraintSet,
    b: ChaseBudget,
) -> Result<(ClassicalOutcome, ChaseTree)> {
    if c.tgds().any(|t| t.is_disjunctive()) {
        return Err(Error::Class(
            "the classical chase needs non-disjunctive TGDs".into(),
        ));
    }
    let tree = visible_chase_with(
        c,
        &Schema::new(),
        i,
        b,
        ChaseOptions {
            keep_internal: false,
            ..ChaseOptions::default()
        },
    );
    let last = tree.terminals().next().expect("one branch");
    let out = match last.status {
        NodeStatus::Leaf => ClassicalOutcome::Saturated(last.instance.clone()),
        NodeStatus::Dummy => ClassicalOutcome::EgdFailure,
        _ => ClassicalOutcome::BudgetExceeded(last.instance.clone()),
    };
    Ok((out, tree))
}

/// Outcome of [`chase_vis_critical`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CriticalOutcome {
    Saturated(Instance),
    BudgetExceeded(Instance),
    /// A denial constraint or EGD fired; holds the instance where it did.
    Failed(Instance),
}

impl CriticalOutcome {
    pub fn instance(&self) -> &Instance {
        match self {
            CriticalOutcome::Saturated(i)
            | CriticalOutcome::BudgetExceeded(i)
            | CriticalOutcome::Failed(i) => i,
        }
    }
}

/// The single branch of the visible chase from the critical instance over `a`.
pub fn chase_vis_critical(
    c: &ConstraintSet,
    s: &Schema,
    a: &Value,
    b: ChaseBudget,
) -> Result<CriticalOutcome> {
    Ok(chase_vis_critical_tree(c, s, a, b)?.0)
}

/// [`chase_vis_critical`] together with its tree.
pub fn chase_vis_critical_tree(
    c: &ConstraintSet,
    s: &Schema,
    a: &Value,
    b: ChaseBudget,
) -> Result<(CriticalOutcome, ChaseTree)> {
    if !c.constants().is_empty() {
        return Err(Error::Class(
            "the critical-instance chase needs constraints without constants".into(),
        ));
    }
    if c.tgds().any(|t| t.is_disjunctive()) {
        return Err(Error::Class(
            "the critical-instance chase needs non-disjunctive TGDs".into(),
        ));
    }
    let f0 = critical_instance(s, a);
    let tree = visible_chase_with(
        c,
        s,
        &f0,
        b,
        ChaseOptions {
            keep_internal: false,
            ..ChaseOptions::default()
        },
    );
    let last = tree.terminals().next().expect("one branch");
    let out = match last.status {
        NodeStatus::Leaf => CriticalOutcome::Saturated(last.instance.clone()),
        NodeStatus::Dummy => CriticalOutcome::Failed(last.instance.clone()),
        _ => CriticalOutcome::BudgetExceeded(last.instance.clone()),
    };
    Ok((out, tree))
}

fn fmt_hom(h: &Homomorphism) -> String {
    if h.is_empty() {
        return "-".into();
    }
    h.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn fmt_grounding(g: &BTreeMap<u64, Value>) -> String {
    if g.is_empty() {
        return "-".into();
    }
    g.iter()
        .map(|(k, v)| format!("@{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Header of the trace format.
pub const TRACE_HEADER: &str = "#node\tparent\tdepth\tdependency\tdisjunct\ttrigger\tgrounding\tstatus\tnote";

/// One tab-separated line per step, in node order. Columns: node id, parent id, depth,
/// dependency index, head disjunct (`-` for EGDs), trigger `var=value` pairs, null
/// replacements `@n=value`, final node status and note.
pub fn trace_tsv(tree: &ChaseTree) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for n in &tree.nodes {
        let (Some(p), Some(st)) = (n.parent, &n.step) else {
            continue;
        };
        let dj = st.disjunct.map_or("-".to_string(), |d| d.to_string());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:?}\t{}",
            n.id,
            p,
            n.depth,
            st.dependency,
            dj,
            fmt_hom(&st.trigger),
            fmt_grounding(&st.grounding),
            n.status,
            n.note.as_deref().unwrap_or("-")
        );
    }
    out
}

/// Relation names used by `c` and `i` (for schema-free contexts).
pub fn relations_of(c: &ConstraintSet, i: &Instance) -> BTreeSet<Name> {
    let mut out: BTreeSet<Name> = i.relations().map(|(r, _)| r.clone()).collect();
    for d in &c.deps {
        for a in d.atoms() {
            out.insert(a.relation.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::satisfies;
    use crate::model::{Egd, Tgd};

    fn a(r: &str, args: &[&str]) -> Atom {
        Atom::parse_args(r, args)
    }

    fn psb() -> (ConstraintSet, Schema) {
        (
            ConstraintSet::new(vec![
                Tgd::simple(vec![a("F1", &["x"])], vec![a("U", &["x", "y"])]).into(),
                Tgd::simple(vec![a("U", &["x", "y"])], vec![a("F2", &["y"])]).into(),
            ]),
            Schema::new().visible("F1", 1).visible("F2", 1).hidden("U", 2),
        )
    }

    #[test]
    fn classical_example() {
        let (c, _) = psb();
        let i = Instance::from_facts([Fact::consts("F1", &["a"])]);
        let out = classical_chase(&i, &c, ChaseBudget::default()).unwrap();
        let mut want = i.clone();
        want.insert(Fact::new("U", vec![Value::constant("a"), Value::Null(1)]));
        want.insert(Fact::new("F2", vec![Value::Null(1)]));
        assert_eq!(out, ClassicalOutcome::Saturated(want));
    }

    #[test]
    fn classical_egd_failure_and_empty() {
        let c = ConstraintSet::new(vec![Egd {
            body: vec![a("R", &["x", "y"])],
            lhs: name("x"),
            rhs: Term::var("y"),
        }
        .into()]);
        let i = Instance::from_facts([Fact::consts("R", &["a", "b"])]);
        assert_eq!(
            classical_chase(&i, &c, ChaseBudget::default()).unwrap(),
            ClassicalOutcome::EgdFailure
        );
        let (c, _) = psb();
        assert_eq!(
            classical_chase(&Instance::new(), &c, ChaseBudget::default()).unwrap(),
            ClassicalOutcome::Saturated(Instance::new())
        );
    }

    #[test]
    fn visible_chase_grounds_nulls() {
        let (c, s) = psb();
        let v = Instance::from_facts([Fact::consts("F1", &["a"]), Fact::consts("F2", &["a"])]);
        let t = visible_chase(&c, &s, &v, ChaseBudget::default());
        assert!(t.is_complete());
        let leaves: Vec<_> = t.leaves().collect();
        assert_eq!(leaves.len(), 1);
        assert!(leaves[0].instance.contains(&Fact::consts("U", &["a", "a"])));
        assert!(satisfies(&c, &leaves[0].instance));
    }

    #[test]
    fn visible_fact_without_target_is_dummy() {
        let c = ConstraintSet::new(vec![Tgd::simple(vec![a("H", &["x"])], vec![a("V", &["x"])]).into()]);
        let s = Schema::new().hidden("H", 1).visible("V", 1);
        let f0 = Instance::from_facts([Fact::new("H", vec![Value::Null(1)])]);
        let t = visible_chase(&c, &s, &f0, ChaseBudget::default());
        assert!(t.all_dummy());
    }

    #[test]
    fn untriggered_is_leaf() {
        let c = ConstraintSet::new(vec![
            Tgd::simple(vec![a("R", &["x", "y"])], vec![a("S", &["x"])]).into(),
        ]);
        let s = Schema::new().visible("S", 1).hidden("R", 2);
        let f0 = Instance::from_facts([Fact::consts("S", &["a"])]);
        let t = visible_chase(&c, &s, &f0, ChaseBudget::default());
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].status, NodeStatus::Leaf);
    }

    #[test]
    fn critical_chase() {
        let (c, s) = psb();
        let out = chase_vis_critical(&c, &s, &Value::constant("a"), ChaseBudget::default()).unwrap();
        assert!(matches!(out, CriticalOutcome::Saturated(_)));
        assert!(out.instance().contains(&Fact::consts("U", &["a", "a"])));
        let out = chase_vis_critical(&ConstraintSet::default(), &s, &Value::constant("a"), ChaseBudget::default())
            .unwrap();
        assert_eq!(out.instance(), &critical_instance(&s, &Value::constant("a")));
    }

    #[test]
    fn disjunction_branches_and_budget() {
        let c = ConstraintSet::new(vec![Tgd::new(
            vec![a("A", &["x"])],
            vec![
                crate::model::HeadDisjunct::new(&[], vec![a("B", &["x"])]),
                crate::model::HeadDisjunct::new(&[], vec![a("C", &["x"])]),
            ],
        )
        .into()]);
        let s = Schema::new().hidden("A", 1).hidden("B", 1).hidden("C", 1);
        let f0 = Instance::from_facts([Fact::consts("A", &["a"])]);
        let t = visible_chase(&c, &s, &f0, ChaseBudget::default());
        assert_eq!(t.leaves().count(), 2);
        let inf = ConstraintSet::new(vec![Tgd::new(
            vec![a("R", &["x", "y"])],
            vec![crate::model::HeadDisjunct::new(&["z"], vec![a("R", &["y", "z"])])],
        )
        .into()]);
        let s = Schema::new().hidden("R", 2);
        let f0 = Instance::from_facts([Fact::consts("R", &["a", "b"])]);
        let t = visible_chase(&inf, &s, &f0, ChaseBudget { max_depth: 5, ..ChaseBudget::default() });
        assert!(!t.is_complete());
        assert_eq!(t.stats().budget_cut, 1);
        let tsv = trace_tsv(&t);
        assert_eq!(tsv.lines().count(), t.nodes.len());
    }
}
