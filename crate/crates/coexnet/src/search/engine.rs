//! Forward stepwise search over decomposable graphs.
//!
//! The engine keeps the clique set of the evolving graph and a pool of
//! scored candidate edges. A candidate is generated by a clique-graph edge
//! `{C_a, C_b}` (the pair's intersection separates the cliques), which
//! witnesses that adding the edge preserves decomposability; its score
//! `n ln(1 − r²_{xy·S}) + ln n` with `S = C_a ∩ C_b` is the exact BIC change
//! and does not depend on which witness produced it.
//!
//! Witnesses can only break as the graph grows (adding edges adds paths and
//! never restores a separation between fixed cliques), and brand-new
//! clique-graph edges always involve the newly created clique. So the pool
//! stays a superset of the true eligible set, new candidates are enumerated
//! only around the clique created by each accepted edge, and every popped
//! candidate is re-verified against the current graph before acceptance:
//! the candidate scored after an addition changes only in the altered
//! region, everything else stays valid as scored.

use super::{SearchConfig, SearchError, SearchTrace, TraceRecord, UnionFind};
use crate::data::DataMatrix;
use crate::graph::{perfect_sequence, GraphBuilder, UndirectedGraph};
use crate::model::DecomposableModel;
use crate::stats;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Sentinel generator id for candidates joining two components (`S = ∅`).
const CROSS: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Candidate {
    delta: f64,
    x: u32,
    y: u32,
    gen_a: u32,
    gen_b: u32,
    forced: bool,
}

impl Candidate {
    fn pair(&self) -> (u32, u32) {
        (self.x.min(self.y), self.x.max(self.y))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    /// Ascending improvement, ties by smallest vertex pair, then generator.
    /// Reversed so the std max-heap pops the minimum.
    fn cmp(&self, other: &Self) -> Ordering {
        let fwd = self
            .delta
            .total_cmp(&other.delta)
            .then_with(|| self.pair().cmp(&other.pair()))
            .then_with(|| (self.gen_a, self.gen_b).cmp(&(other.gen_a, other.gen_b)));
        fwd.reverse()
    }
}

struct Engine<'a> {
    data: &'a DataMatrix,
    n: usize,
    adj: Vec<Vec<u32>>,
    edge_count: usize,
    cliques: Vec<Option<Vec<u32>>>,
    vert_cliques: Vec<Vec<u32>>,
    components: UnionFind,
    heap: BinaryHeap<Candidate>,
    max_clique_size: usize,
    trace: SearchTrace,
    bic_running: f64,
    // Scratch for separation searches.
    blocked_stamp: Vec<u32>,
    seen_stamp: Vec<u32>,
    stamp: u32,
    stack: Vec<u32>,
}

impl<'a> Engine<'a> {
    fn new(
        data: &'a DataMatrix,
        start: &DecomposableModel,
        cfg: &SearchConfig,
    ) -> Result<Self, SearchError> {
        let p = start.graph().vertex_count();
        let max_clique_size = cfg.resolve_clique_cap(data.n())?;

        let adj: Vec<Vec<u32>> = (0..p)
            .map(|v| start.graph().neighbors(v).to_vec())
            .collect();
        let mut components = UnionFind::new(p);
        for (i, j) in start.graph().edges() {
            components.union(i as u32, j as u32);
        }

        let mut cliques = Vec::new();
        let mut vert_cliques = vec![Vec::new(); p];
        for c in start.sequence().cliques() {
            let id = cliques.len() as u32;
            for &v in c {
                vert_cliques[v as usize].push(id);
            }
            cliques.push(Some(c.clone()));
        }

        let mut engine = Engine {
            data,
            n: data.n(),
            adj,
            edge_count: start.graph().edge_count(),
            cliques,
            vert_cliques,
            components,
            heap: BinaryHeap::new(),
            max_clique_size,
            trace: SearchTrace::default(),
            bic_running: start.bic(),
            blocked_stamp: vec![0; p],
            seen_stamp: vec![0; p],
            stamp: 0,
            stack: Vec::new(),
        };
        engine.seed_same_component_candidates();
        engine.seed_cross_component_candidates();
        Ok(engine)
    }

    /// Clique pairs sharing at least one vertex are the only same-component
    /// pairs whose intersection can separate them; score the survivors.
    fn seed_same_component_candidates(&mut self) {
        let mut pairs = std::collections::BTreeSet::new();
        for ids in &self.vert_cliques {
            for (k, &a) in ids.iter().enumerate() {
                for &b in &ids[k + 1..] {
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
        }
        for (a, b) in pairs {
            let ca = self.cliques[a as usize].clone().expect("alive");
            let cb = self.cliques[b as usize].clone().expect("alive");
            let sep = crate::graph::sorted_intersection(&ca, &cb);
            debug_assert!(!sep.is_empty());
            if self.separates_now(&sep, &ca, &cb) {
                self.push_candidates(a, b, &ca, &cb, &sep);
            }
        }
    }

    /// Every vertex pair across two components is eligible with `S = ∅` and
    /// scores by its plain correlation, which never changes while the pair
    /// stays cross-component. After a completed forest stage this pool is
    /// empty: any negatively scored cross pair would have been accepted
    /// there.
    fn seed_cross_component_candidates(&mut self) {
        if self.components.component_count() <= 1 {
            return;
        }
        let p = self.adj.len();
        let comp_of: Vec<u32> = {
            let mut ids = vec![0u32; p];
            for v in 0..p as u32 {
                ids[v as usize] = self.components.find(v);
            }
            ids
        };
        let normalized = super::normalized_columns(self.data);
        let cands = super::negative_pair_candidates(&normalized, self.n, p, |i, j| {
            comp_of[i as usize] != comp_of[j as usize]
        });
        for c in cands {
            self.heap.push(Candidate {
                delta: c.delta,
                x: c.i,
                y: c.j,
                gen_a: CROSS,
                gen_b: CROSS,
                forced: c.forced,
            });
        }
    }

    fn has_edge(&self, x: u32, y: u32) -> bool {
        self.adj[x as usize].binary_search(&y).is_ok()
    }

    fn insert_edge(&mut self, x: u32, y: u32) {
        let pos = self.adj[x as usize].binary_search(&y).unwrap_err();
        self.adj[x as usize].insert(pos, y);
        let pos = self.adj[y as usize].binary_search(&x).unwrap_err();
        self.adj[y as usize].insert(pos, x);
        self.edge_count += 1;
    }

    /// Does `sep` separate `a \ sep` from `b \ sep` in the current graph?
    fn separates_now(&mut self, sep: &[u32], a: &[u32], b: &[u32]) -> bool {
        self.stamp += 1;
        let stamp = self.stamp;
        for &s in sep {
            self.blocked_stamp[s as usize] = stamp;
        }
        let mut targets = 0usize;
        for &v in b {
            if self.blocked_stamp[v as usize] != stamp {
                self.seen_stamp[v as usize] = stamp; // mark targets with seen
                targets += 1;
            }
        }
        if targets == 0 {
            return true;
        }
        // Separate target marking from visited marking: bump again.
        self.stamp += 1;
        let visit = self.stamp;
        self.stack.clear();
        for &v in a {
            if self.blocked_stamp[v as usize] == stamp {
                continue;
            }
            if self.seen_stamp[v as usize] == stamp {
                return false; // a and b overlap outside sep
            }
            if self.seen_stamp[v as usize] != visit {
                self.seen_stamp[v as usize] = visit;
                self.stack.push(v);
            }
        }
        while let Some(v) = self.stack.pop() {
            for &w in &self.adj[v as usize] {
                if self.blocked_stamp[w as usize] == stamp {
                    continue;
                }
                if self.seen_stamp[w as usize] == stamp {
                    return false;
                }
                if self.seen_stamp[w as usize] != visit {
                    self.seen_stamp[w as usize] = visit;
                    self.stack.push(w);
                }
            }
        }
        true
    }

    /// Scores and queues every non-adjacent pair across a clique-graph edge.
    fn push_candidates(&mut self, a: u32, b: u32, ca: &[u32], cb: &[u32], sep: &[u32]) {
        let oversize = sep.len() + 2 > self.max_clique_size;
        for &x in ca {
            if sep.binary_search(&x).is_ok() {
                continue;
            }
            for &y in cb {
                if sep.binary_search(&y).is_ok() || x == y || self.has_edge(x, y) {
                    continue;
                }
                if oversize {
                    self.trace.skipped_oversize += 1;
                    continue;
                }
                match self.data.partial_correlation(x, y, sep) {
                    Some(r) => {
                        let imp = stats::improvement_from_partial(self.n, r);
                        if imp.delta_bic < 0.0 {
                            self.heap.push(Candidate {
                                delta: imp.delta_bic,
                                x,
                                y,
                                gen_a: a,
                                gen_b: b,
                                forced: imp.forced,
                            });
                        }
                    }
                    None => self.trace.skipped_singular += 1,
                }
            }
        }
    }

    /// Pops until a candidate survives re-verification; `None` means the
    /// eligible set holds nothing that improves the BIC.
    fn next_valid(&mut self) -> Option<Candidate> {
        while let Some(cand) = self.heap.pop() {
            debug_assert!(cand.delta < 0.0);
            if self.has_edge(cand.x, cand.y) {
                continue;
            }
            if cand.gen_a == CROSS {
                if self.components.find(cand.x) != self.components.find(cand.y) {
                    return Some(cand);
                }
                continue;
            }
            let (Some(ca), Some(cb)) = (
                self.cliques[cand.gen_a as usize].clone(),
                self.cliques[cand.gen_b as usize].clone(),
            ) else {
                continue;
            };
            let sep = crate::graph::sorted_intersection(&ca, &cb);
            if self.separates_now(&sep, &ca, &cb) {
                return Some(cand);
            }
        }
        None
    }

    fn separator_of(&self, cand: &Candidate) -> Vec<u32> {
        if cand.gen_a == CROSS {
            return Vec::new();
        }
        let ca = self.cliques[cand.gen_a as usize].as_ref().expect("alive");
        let cb = self.cliques[cand.gen_b as usize].as_ref().expect("alive");
        crate::graph::sorted_intersection(ca, cb)
    }

    fn retire_clique_if_absorbed(
        &mut self,
        member: u32,
        cstar: &[u32],
        absorbed: &mut Vec<Vec<u32>>,
    ) {
        let candidate_id = self.vert_cliques[member as usize]
            .iter()
            .copied()
            .find(|&id| {
                let c = self.cliques[id as usize]
                    .as_ref()
                    .expect("listed cliques alive");
                c.len() < cstar.len() && crate::graph::sorted_is_subset(c, cstar)
            });
        if let Some(id) = candidate_id {
            let verts = self.cliques[id as usize].take().expect("alive");
            for &v in &verts {
                self.vert_cliques[v as usize].retain(|&c| c != id);
            }
            absorbed.push(verts);
        }
    }

    fn accept(&mut self, cand: &Candidate) {
        let sep = self.separator_of(cand);
        self.insert_edge(cand.x, cand.y);
        self.components.union(cand.x, cand.y);

        let mut cstar: Vec<u32> = Vec::with_capacity(sep.len() + 2);
        cstar.extend_from_slice(&sep);
        cstar.push(cand.x);
        cstar.push(cand.y);
        cstar.sort_unstable();

        // Only `sep ∪ {x}` and `sep ∪ {y}` can stop being maximal.
        let mut absorbed = Vec::new();
        self.retire_clique_if_absorbed(cand.x, &cstar, &mut absorbed);
        self.retire_clique_if_absorbed(cand.y, &cstar, &mut absorbed);

        let cstar_id = self.cliques.len() as u32;
        for &v in &cstar {
            self.vert_cliques[v as usize].push(cstar_id);
        }
        self.cliques.push(Some(cstar.clone()));

        // New clique-graph edges always involve the new clique; candidates
        // elsewhere keep their scores (their witness separators are fixed).
        let mut partners = std::collections::BTreeSet::new();
        for &v in &cstar {
            for &id in &self.vert_cliques[v as usize] {
                if id != cstar_id {
                    partners.insert(id);
                }
            }
        }
        for id in partners {
            let other = self.cliques[id as usize].clone().expect("alive");
            let sep2 = crate::graph::sorted_intersection(&cstar, &other);
            debug_assert!(!sep2.is_empty());
            if self.separates_now(&sep2, &cstar, &other) {
                self.push_candidates(cstar_id, id, &cstar, &other, &sep2);
            }
        }

        self.bic_running += cand.delta;
        self.trace.records.push(TraceRecord {
            step: self.trace.records.len() + 1,
            edge: cand.pair(),
            improvement: cand.delta,
            bic_after: self.bic_running,
            forced: cand.forced,
            new_clique: cstar,
            absorbed_cliques: absorbed,
        });
    }

    fn current_graph(&self) -> UndirectedGraph {
        let mut b = GraphBuilder::new(self.adj.len());
        for (v, nbrs) in self.adj.iter().enumerate() {
            for &w in nbrs {
                if (w as usize) > v {
                    b.add_edge(v, w as usize).expect("valid working adjacency");
                }
            }
        }
        b.into_graph()
    }

    #[cfg(debug_assertions)]
    fn assert_still_chordal(&self) {
        let g = self.current_graph();
        assert!(
            crate::graph::mcs_order(&g).is_chordal,
            "edge addition broke chordality"
        );
    }
}

/// Second search stage: starting from a decomposable model (typically the
/// minimum-BIC forest), repeatedly add the eligible edge with the most
/// negative improvement until no candidate improves the BIC, the eligible
/// set empties, or a cap is reached. Candidates whose merged clique would
/// exceed the size cap are skipped and counted in the trace.
pub fn decomposable_search(
    data: &DataMatrix,
    start: &DecomposableModel,
    cfg: &SearchConfig,
) -> Result<(DecomposableModel, SearchTrace), SearchError> {
    assert_eq!(
        start.graph().vertex_count(),
        data.p(),
        "start model and data disagree on the number of variables"
    );
    let mut engine = Engine::new(data, start, cfg)?;
    let budget = cfg.edge_budget();

    while engine.edge_count < budget {
        let Some(cand) = engine.next_valid() else {
            break;
        };
        engine.accept(&cand);
        #[cfg(debug_assertions)]
        engine.assert_still_chordal();
    }

    let graph = engine.current_graph();
    let sequence = perfect_sequence(&graph).expect("search preserves chordality");
    #[cfg(debug_assertions)]
    {
        let mut maintained: Vec<Vec<u32>> = engine.cliques.iter().flatten().cloned().collect();
        maintained.sort();
        let mut enumerated = sequence.cliques().to_vec();
        enumerated.sort();
        assert_eq!(
            maintained, enumerated,
            "incremental clique bookkeeping diverged from enumeration"
        );
    }
    let bic = stats::bic(data, &sequence).unwrap_or(engine.bic_running);
    let model =
        DecomposableModel::from_parts(graph, sequence, data.column_means().to_vec(), bic, data.n());
    Ok((model, engine.trace))
}
