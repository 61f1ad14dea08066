//! Per-subtask offloading decisions and the simulation loop.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

use crate::metagraph::{
    assign_weights, build_scheme, edge_plan, EdgeKind, EdgePlan, Endpoint, MetaNode,
    MetagraphError, Scheme, WeightContext, WeightedMetagraph,
};
use crate::orbital::{
    build_snapshot, visible_nodes, ConstellationSpec, Lattice, Observer, OrbitalError, Snapshot,
    ZoneId,
};
use crate::resources::{propagation_delay, Owner, Reservation, ResourceError, ResourceLedger};
use crate::scenario::{ConfigError, DestMode, ScenarioConfig};
use crate::traffic::{arrival_rates, generate_tasks, DestSampler, Subtask, Task, TrafficError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error(transparent)]
    Metagraph(#[from] MetagraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no path")]
    NoPath,
    #[error("node {0} is not in the graph")]
    UnknownNode(usize),
}

/// Directed graph with nodes `0..node_count()` and non-negative weights.
pub trait WeightedGraph {
    fn node_count(&self) -> usize;
    fn for_each_out(&self, node: usize, f: &mut dyn FnMut(usize, f64));
}

/// Plain adjacency-list graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdjacencyGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl AdjacencyGraph {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, weight: f64) {
        self.adj[from].push((to, weight));
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(from, out)| out.iter().map(move |&(to, w)| (from, to, w)))
    }
}

impl WeightedGraph for AdjacencyGraph {
    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn for_each_out(&self, node: usize, f: &mut dyn FnMut(usize, f64)) {
        for &(to, w) in &self.adj[node] {
            f(to, w);
        }
    }
}

impl WeightedGraph for WeightedMetagraph {
    fn node_count(&self) -> usize {
        self.graph.nodes().len()
    }

    fn for_each_out(&self, node: usize, f: &mut dyn FnMut(usize, f64)) {
        for &e in self.graph.outgoing(node) {
            f(self.graph.edge_target(e), self.weight(e));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    /// Node sequence from source to target; empty when they coincide.
    pub nodes: Vec<usize>,
    pub length: f64,
}

#[derive(Debug, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the smallest distance.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-weight path by label setting. Among equally short paths the
/// lexicographically smallest node sequence wins.
///
/// Weights must be positive for the tie rule to be exact: each node then
/// keeps the smallest of its equally short prefixes, and extending two simple
/// prefixes by the same node preserves their order.
pub fn shortest_path<G: WeightedGraph + ?Sized>(
    g: &G,
    from: usize,
    to: usize,
) -> Result<ShortestPath, PathError> {
    let n = g.node_count();
    for node in [from, to] {
        if node >= n {
            return Err(PathError::UnknownNode(node));
        }
    }
    if from == to {
        return Ok(ShortestPath {
            nodes: Vec::new(),
            length: 0.0,
        });
    }
    let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    best[from] = Some((0.0, vec![from]));
    heap.push(Entry {
        dist: 0.0,
        node: from,
    });
    while let Some(Entry { node, .. }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        let (dist, path) = best[node].clone().expect("queued nodes are labelled");
        if node == to {
            return Ok(ShortestPath {
                nodes: path,
                length: dist,
            });
        }
        g.for_each_out(node, &mut |next, w| {
            if done[next] {
                return;
            }
            let cand = dist + w;
            let better = match &best[next] {
                None => true,
                Some((d, p)) => {
                    cand < *d
                        || (cand == *d
                            && path.iter().chain([&next]).cmp(p.iter()) == Ordering::Less)
                }
            };
            if better {
                let mut p = path.clone();
                p.push(next);
                best[next] = Some((cand, p));
                heap.push(Entry {
                    dist: cand,
                    node: next,
                });
            }
        });
    }
    Err(PathError::NoPath)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classification {
    Ground,
    VisibleSatellite,
    InvisibleSatellite,
}

impl Classification {
    pub const ALL: [Classification; 3] = [
        Classification::Ground,
        Classification::VisibleSatellite,
        Classification::InvisibleSatellite,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Classification::Ground => "ground",
            Classification::VisibleSatellite => "visible_satellite",
            Classification::InvisibleSatellite => "invisible_satellite",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Zone of the first virtual edge on a path, if any.
pub fn compute_zone(path: &[MetaNode]) -> Option<ZoneId> {
    path.windows(2).find_map(|w| match (w[0], w[1]) {
        (MetaNode::Vn { zone: a, tier: t0 }, MetaNode::Vn { zone: b, tier: t1 })
            if a == b && t0 != t1 =>
        {
            Some(a)
        }
        _ => None,
    })
}

pub fn classify_path(path: &[MetaNode], u_visible: &BTreeSet<ZoneId>) -> Classification {
    match compute_zone(path) {
        None => Classification::Ground,
        Some(z) if u_visible.contains(&z) => Classification::VisibleSatellite,
        Some(_) => Classification::InvisibleSatellite,
    }
}

/// Where a subtask's delay went. Waiting is kept apart from service time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DelayComponents {
    pub sgl_transmission: f64,
    /// ISL and source uplink service time.
    pub isl_transmission: f64,
    pub propagation: f64,
    pub computation: f64,
    pub waiting: f64,
}

impl DelayComponents {
    pub fn transmission(&self) -> f64 {
        self.sgl_transmission + self.isl_transmission
    }

    pub fn total(&self) -> f64 {
        self.sgl_transmission
            + self.isl_transmission
            + self.propagation
            + self.computation
            + self.waiting
    }

    pub fn add(&mut self, other: &DelayComponents) {
        self.sgl_transmission += other.sgl_transmission;
        self.isl_transmission += other.isl_transmission;
        self.propagation += other.propagation;
        self.computation += other.computation;
        self.waiting += other.waiting;
    }

    pub fn scale(&self, k: f64) -> DelayComponents {
        DelayComponents {
            sgl_transmission: self.sgl_transmission * k,
            isl_transmission: self.isl_transmission * k,
            propagation: self.propagation * k,
            computation: self.computation * k,
            waiting: self.waiting * k,
        }
    }
}

/// One subtask's decision and what executing it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct OffloadDecision {
    pub subtask: usize,
    pub path: Vec<MetaNode>,
    /// Path length under the static weights used for the decision.
    pub length_s: f64,
    pub classification: Classification,
    /// Virtual-edge zone, or the destination zone when computed on the ground.
    pub target_zone: ZoneId,
    pub components: DelayComponents,
    pub completion_s: f64,
    pub reservations: Vec<Reservation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// The source or destination sees no VN.
    Unreachable,
    NoPath {
        subtask: usize,
    },
    OverThreshold {
        subtask: usize,
    },
    /// Decided within the threshold but finished after it.
    LateCompletion {
        subtask: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task: Task,
    pub scheme: Scheme,
    pub success: bool,
    /// Overall delay, or the threshold for failed tasks.
    pub delay_s: f64,
    /// Decisions in subtask order. After a failure these were rolled back and
    /// only describe what had been decided.
    pub decisions: Vec<OffloadDecision>,
    pub failure: Option<Failure>,
}

impl TaskRecord {
    /// The subtask that finished last.
    pub fn critical(&self) -> Option<&OffloadDecision> {
        if !self.success {
            return None;
        }
        self.decisions.iter().max_by(|a, b| {
            a.completion_s
                .total_cmp(&b.completion_s)
                .then(b.subtask.cmp(&a.subtask))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadParams {
    pub result_volume_bits: f64,
    pub literal_step16: bool,
    pub source_altitude_m: f64,
}

impl Default for OffloadParams {
    fn default() -> Self {
        Self {
            result_volume_bits: 1e6,
            literal_step16: false,
            source_altitude_m: 600e3,
        }
    }
}

/// Source and destination endpoints of a task plus the VNs they see.
#[derive(Debug, Clone)]
pub struct TaskView {
    pub source: Endpoint,
    pub dest: Endpoint,
    pub u_visible: BTreeSet<ZoneId>,
    pub v_visible: BTreeSet<ZoneId>,
}

impl TaskView {
    pub fn new(
        task: &Task,
        snapshot: &Snapshot,
        spec: &ConstellationSpec,
        params: &OffloadParams,
    ) -> Self {
        let source = Endpoint {
            zone: task.source_zone,
            point: snapshot
                .grid
                .center(task.source_zone, params.source_altitude_m),
        };
        let dest = Endpoint {
            zone: task.dest_zone,
            point: snapshot.grid.center(task.dest_zone, 0.0),
        };
        Self {
            u_visible: visible_nodes(&Observer::Space(source.point), snapshot, spec),
            v_visible: visible_nodes(&Observer::Ground(dest.point), snapshot, spec),
            source,
            dest,
        }
    }

    pub fn context<'a>(
        &self,
        snapshot: &'a Snapshot,
        ledger: &'a ResourceLedger,
        time_s: f64,
        spec: &ConstellationSpec,
        params: &OffloadParams,
    ) -> WeightContext<'a> {
        WeightContext {
            snapshot,
            ledger,
            source: self.source,
            dest: self.dest,
            time_s,
            result_volume_bits: params.result_volume_bits,
            literal_step16: params.literal_step16,
            light_speed_m_s: spec.light_speed_m_s,
        }
    }
}

/// Builds and weights the scheme metagraph for one subtask, then searches it.
pub fn decide(
    scheme: Scheme,
    subtask: &Subtask,
    view: &TaskView,
    ctx: &WeightContext,
) -> Result<(WeightedMetagraph, Option<ShortestPath>), MetagraphError> {
    let g = build_scheme(scheme, ctx.snapshot, &view.u_visible, &view.v_visible)?;
    let wg = assign_weights(g, subtask, ctx)?;
    let from = wg.graph.node_index(&MetaNode::Source).expect("source node");
    let to = wg
        .graph
        .node_index(&MetaNode::Dest)
        .expect("destination node");
    let path = shortest_path(&wg, from, to).ok();
    Ok((wg, path))
}

/// Offloads every subtask of `task` in index order against the live ledger.
///
/// A subtask is routed on the static weights at the task's generation time;
/// its reservations are then made hop by hop from the time the data actually
/// reaches each resource. If any subtask is unreachable, exceeds the
/// threshold on its decision length, or finishes past the threshold, all of
/// the task's reservations are released and the task counts as failed.
pub fn offload_task(
    task: &Task,
    scheme: Scheme,
    snapshot: &Snapshot,
    ledger: &mut ResourceLedger,
    spec: &ConstellationSpec,
    params: &OffloadParams,
) -> Result<TaskRecord, EngineError> {
    let view = TaskView::new(task, snapshot, spec, params);
    let t0 = task.gen_time_s;
    let mut decisions = Vec::with_capacity(task.subtasks.len());
    let mut failure = None;
    if view.u_visible.is_empty() || view.v_visible.is_empty() {
        failure = Some(Failure::Unreachable);
    }
    for (index, subtask) in task.subtasks.iter().enumerate() {
        if failure.is_some() {
            break;
        }
        let ctx = view.context(snapshot, ledger, t0, spec, params);
        let (wg, path) = decide(scheme, subtask, &view, &ctx)?;
        let Some(path) = path else {
            failure = Some(Failure::NoPath { subtask: index });
            break;
        };
        let nodes: Vec<MetaNode> = path.nodes.iter().map(|&i| wg.graph.nodes()[i]).collect();
        if path.length > task.threshold_s {
            failure = Some(Failure::OverThreshold { subtask: index });
            break;
        }
        let plans = nodes
            .windows(2)
            .map(|w| {
                let e = wg.graph.edge_index(&w[0], &w[1]).expect("path edge");
                let edge = wg.graph.edges()[e];
                Ok((edge.kind, edge_plan(&edge, subtask, &ctx)?))
            })
            .collect::<Result<Vec<(EdgeKind, EdgePlan)>, MetagraphError>>()?;
        let owner = Owner {
            task: task.id,
            subtask: index,
        };
        let (components, completion_s, reservations) =
            realise(&plans, ledger, owner, t0, spec.light_speed_m_s)?;
        let classification = classify_path(&nodes, &view.u_visible);
        decisions.push(OffloadDecision {
            subtask: index,
            target_zone: compute_zone(&nodes).unwrap_or(task.dest_zone),
            path: nodes,
            length_s: path.length,
            classification,
            components,
            completion_s,
            reservations,
        });
        if completion_s - t0 > task.threshold_s {
            failure = Some(Failure::LateCompletion { subtask: index });
        }
    }
    if failure.is_some() {
        for d in &decisions {
            for r in &d.reservations {
                ledger.release(r)?;
            }
        }
    }
    let success = failure.is_none();
    let delay_s = if success {
        decisions
            .iter()
            .map(|d| d.completion_s - t0)
            .fold(0.0, f64::max)
    } else {
        task.threshold_s
    };
    Ok(TaskRecord {
        task: task.clone(),
        scheme,
        success,
        delay_s,
        decisions,
        failure,
    })
}

type Realised = (DelayComponents, f64, Vec<Reservation>);

fn realise(
    plans: &[(EdgeKind, EdgePlan)],
    ledger: &mut ResourceLedger,
    owner: Owner,
    start_s: f64,
    light_speed: f64,
) -> Result<Realised, ResourceError> {
    let mut c = DelayComponents::default();
    let mut t = start_s;
    let mut reservations = Vec::with_capacity(plans.len());
    for (kind, plan) in plans {
        let r = ledger.propose(plan.resource, plan.demand, t, owner)?;
        ledger.commit(&r)?;
        c.waiting += r.start_s - t;
        let service = r.end_s - r.start_s;
        match kind {
            EdgeKind::Virtual => c.computation += service,
            EdgeKind::DestDownlink => c.sgl_transmission += service,
            EdgeKind::IntraTier | EdgeKind::SourceUplink => c.isl_transmission += service,
        }
        let prop = propagation_delay(plan.distance_m, light_speed);
        c.propagation += prop;
        t = r.end_s + prop;
        reservations.push(r);
    }
    Ok((c, t, reservations))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub scheme: Scheme,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub records: Vec<TaskRecord>,
}

/// A ledger that knows every ISL any snapshot of `spec` can contain.
pub fn empty_ledger(config: &ScenarioConfig) -> Result<ResourceLedger, EngineError> {
    let spec = config.constellation();
    let grid = config.grid();
    let lattice = Lattice::new(&spec, &grid)?;
    let pairs = lattice
        .links(false)
        .into_iter()
        .map(|l| (lattice.zone_of_sat(l.a), lattice.zone_of_sat(l.b)));
    Ok(ResourceLedger::new(grid, config.capacities(), pairs)?)
}

pub fn offload_params(config: &ScenarioConfig) -> OffloadParams {
    OffloadParams {
        result_volume_bits: config.result_volume_bits,
        literal_step16: config.literal_step16,
        source_altitude_m: config.source_altitude_km * 1e3,
    }
}

/// Tasks of one scenario. They depend on the seed and the traffic keys only,
/// so every scheme sees the same workload.
pub fn scenario_tasks(config: &ScenarioConfig, seed: u64) -> Result<Vec<Task>, EngineError> {
    let eta = config.connection_index(seed)?;
    let rates = arrival_rates(config.load, &eta)?;
    let dest = match config.dest_sampler {
        DestMode::Eta => DestSampler::Eta(eta),
        DestMode::SameZone => DestSampler::SameZone,
    };
    Ok(generate_tasks(
        &rates,
        config.duration_s,
        seed,
        &config.template(),
        &dest,
    )?)
}

/// Runs one scenario: tasks in (generation time, id) order against one shared
/// ledger, with a fresh snapshot at each generation time.
pub fn run_simulation(config: &ScenarioConfig, seed: u64) -> Result<SimulationResult, EngineError> {
    config.validate()?;
    let spec = config.constellation();
    let grid = config.grid();
    let params = offload_params(config);
    let mut tasks = scenario_tasks(config, seed)?;
    tasks.sort_by(|a, b| a.gen_time_s.total_cmp(&b.gen_time_s).then(a.id.cmp(&b.id)));
    let mut ledger = empty_ledger(config)?;
    let mut records = Vec::with_capacity(tasks.len());
    for task in &tasks {
        let snapshot = build_snapshot(&spec, &grid, task.gen_time_s)?;
        records.push(offload_task(
            task,
            config.scheme,
            &snapshot,
            &mut ledger,
            &spec,
            &params,
        )?);
    }
    let mut echo = config.clone();
    echo.seed = seed;
    Ok(SimulationResult {
        scheme: config.scheme,
        seed,
        config: echo,
        records,
    })
}
