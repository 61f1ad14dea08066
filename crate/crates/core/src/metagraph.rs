//! Computation and transmission fusion metagraphs.
//!
//! A metagraph stacks copies of the VN mesh as tiers. The `Uncomputed` tier
//! carries raw subtask data and the `Computed` tier carries results; a
//! virtual edge from a VN's uncomputed copy to its computed copy stands for
//! running the subtask on that VN's satellite. Inter-tier edges only point
//! "forward", so every source-to-destination path computes at most once.
//!
//! The three offloading schemes differ only in which edges they keep:
//!
//! | scheme  | uncomputed ISLs | computed ISLs | virtual edges | downlinks from |
//! |---------|-----------------|---------------|---------------|----------------|
//! | fusion  | yes             | yes           | every VN      | both tiers     |
//! | ground  | yes             | no tier       | none          | uncomputed     |
//! | visible | no              | yes           | source-visible| computed       |

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::orbital::{distance_m, GeoPoint, Snapshot, ZoneId};
use crate::resources::{propagation_delay, ResourceError, ResourceId, ResourceLedger};
use crate::traffic::Subtask;

#[derive(Debug, Error, PartialEq)]
pub enum MetagraphError {
    #[error("unreachable endpoint: the {0} sees no VN")]
    UnreachableEndpoint(&'static str),
    #[error("zone {0} is not a VN of the snapshot")]
    UnknownZone(ZoneId),
    #[error("edge weight {weight} on {edge} is negative or not finite")]
    BadWeight { edge: String, weight: f64 },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error(transparent)]
    Resource(#[from] ResourceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Uncomputed,
    Computed,
}

/// Metagraph vertex. The derived order (source, uncomputed VNs, computed VNs,
/// destination) is the node-id order used for path tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetaNode {
    Source,
    Vn { tier: Tier, zone: ZoneId },
    Dest,
}

impl MetaNode {
    pub fn uncomputed(zone: ZoneId) -> Self {
        MetaNode::Vn {
            tier: Tier::Uncomputed,
            zone,
        }
    }

    pub fn computed(zone: ZoneId) -> Self {
        MetaNode::Vn {
            tier: Tier::Computed,
            zone,
        }
    }

    pub fn zone(&self) -> Option<ZoneId> {
        match self {
            MetaNode::Vn { zone, .. } => Some(*zone),
            _ => None,
        }
    }

    pub fn tier(&self) -> Option<Tier> {
        match self {
            MetaNode::Vn { tier, .. } => Some(*tier),
            _ => None,
        }
    }
}

impl fmt::Display for MetaNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaNode::Source => f.write_str("u"),
            MetaNode::Dest => f.write_str("v"),
            MetaNode::Vn {
                tier: Tier::Uncomputed,
                zone,
            } => write!(f, "U{}:{}", zone.row, zone.col),
            MetaNode::Vn {
                tier: Tier::Computed,
                zone,
            } => write!(f, "C{}:{}", zone.row, zone.col),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    IntraTier,
    Virtual,
    SourceUplink,
    DestDownlink,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::IntraTier => "intra",
            EdgeKind::Virtual => "virtual",
            EdgeKind::SourceUplink => "uplink",
            EdgeKind::DestDownlink => "downlink",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetaEdge {
    pub from: MetaNode,
    pub to: MetaNode,
    pub kind: EdgeKind,
}

impl fmt::Display for MetaEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{} ({})", self.from, self.to, self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Fusion,
    Ground,
    Visible,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Fusion, Scheme::Ground, Scheme::Visible];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Fusion => "fusion",
            Scheme::Ground => "ground",
            Scheme::Visible => "visible",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fusion" => Ok(Scheme::Fusion),
            "ground" => Ok(Scheme::Ground),
            "visible" => Ok(Scheme::Visible),
            other => Err(format!(
                "unknown scheme '{other}' (expected fusion, ground or visible)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Metagraph {
    pub scheme: Scheme,
    nodes: Vec<MetaNode>,
    edges: Vec<MetaEdge>,
    outgoing: Vec<Vec<usize>>,
    targets: Vec<usize>,
    pub u_visible: BTreeSet<ZoneId>,
    pub v_visible: BTreeSet<ZoneId>,
}

impl Metagraph {
    fn assemble(
        scheme: Scheme,
        mut nodes: Vec<MetaNode>,
        edges: Vec<MetaEdge>,
        u_visible: &BTreeSet<ZoneId>,
        v_visible: &BTreeSet<ZoneId>,
    ) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut targets = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let from = nodes
                .binary_search(&e.from)
                .expect("edge endpoint is a node");
            outgoing[from].push(i);
            targets.push(nodes.binary_search(&e.to).expect("edge endpoint is a node"));
        }
        Self {
            scheme,
            nodes,
            edges,
            outgoing,
            targets,
            u_visible: u_visible.clone(),
            v_visible: v_visible.clone(),
        }
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> &[MetaNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[MetaEdge] {
        &self.edges
    }

    pub fn node_index(&self, node: &MetaNode) -> Option<usize> {
        self.nodes.binary_search(node).ok()
    }

    /// Indices of the edges leaving node `index`.
    pub fn outgoing(&self, index: usize) -> &[usize] {
        &self.outgoing[index]
    }

    /// Node index an edge points to.
    pub fn edge_target(&self, edge_index: usize) -> usize {
        self.targets[edge_index]
    }

    pub fn edge_index(&self, from: &MetaNode, to: &MetaNode) -> Option<usize> {
        let i = self.node_index(from)?;
        self.outgoing[i]
            .iter()
            .copied()
            .find(|&e| self.edges[e].to == *to)
    }

    pub fn count_kind(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}

fn check_endpoints(
    snapshot: &Snapshot,
    u_visible: &BTreeSet<ZoneId>,
    v_visible: &BTreeSet<ZoneId>,
) -> Result<(), MetagraphError> {
    if u_visible.is_empty() {
        return Err(MetagraphError::UnreachableEndpoint("source"));
    }
    if v_visible.is_empty() {
        return Err(MetagraphError::UnreachableEndpoint("destination"));
    }
    match u_visible
        .iter()
        .chain(v_visible)
        .find(|z| !snapshot.contains(**z))
    {
        Some(z) => Err(MetagraphError::UnknownZone(*z)),
        None => Ok(()),
    }
}

fn tier_nodes(snapshot: &Snapshot, tier: Tier) -> impl Iterator<Item = MetaNode> + '_ {
    snapshot
        .vn_nodes
        .iter()
        .map(move |&zone| MetaNode::Vn { tier, zone })
}

fn tier_edges(snapshot: &Snapshot, tier: Tier, edges: &mut Vec<MetaEdge>) {
    for &(a, b) in &snapshot.isl_edges {
        let (na, nb) = (
            MetaNode::Vn { tier, zone: a },
            MetaNode::Vn { tier, zone: b },
        );
        edges.push(MetaEdge {
            from: na,
            to: nb,
            kind: EdgeKind::IntraTier,
        });
        edges.push(MetaEdge {
            from: nb,
            to: na,
            kind: EdgeKind::IntraTier,
        });
    }
}

fn virtual_edges<'a>(zones: impl Iterator<Item = &'a ZoneId>, edges: &mut Vec<MetaEdge>) {
    for &z in zones {
        edges.push(MetaEdge {
            from: MetaNode::uncomputed(z),
            to: MetaNode::computed(z),
            kind: EdgeKind::Virtual,
        });
    }
}

fn uplinks(u_visible: &BTreeSet<ZoneId>, edges: &mut Vec<MetaEdge>) {
    for &z in u_visible {
        edges.push(MetaEdge {
            from: MetaNode::Source,
            to: MetaNode::uncomputed(z),
            kind: EdgeKind::SourceUplink,
        });
    }
}

fn downlinks(v_visible: &BTreeSet<ZoneId>, tier: Tier, edges: &mut Vec<MetaEdge>) {
    for &zone in v_visible {
        edges.push(MetaEdge {
            from: MetaNode::Vn { tier, zone },
            to: MetaNode::Dest,
            kind: EdgeKind::DestDownlink,
        });
    }
}

/// Fusion scheme: two full tiers, a virtual edge at every VN, uplinks into the
/// uncomputed tier and downlinks from both tiers.
pub fn build_fusion(
    snapshot: &Snapshot,
    u_visible: &BTreeSet<ZoneId>,
    v_visible: &BTreeSet<ZoneId>,
) -> Result<Metagraph, MetagraphError> {
    check_endpoints(snapshot, u_visible, v_visible)?;
    let mut nodes = vec![MetaNode::Source, MetaNode::Dest];
    nodes.extend(tier_nodes(snapshot, Tier::Uncomputed));
    nodes.extend(tier_nodes(snapshot, Tier::Computed));
    let mut edges = Vec::with_capacity(4 * snapshot.isl_edges.len() + snapshot.vn_nodes.len() + 64);
    tier_edges(snapshot, Tier::Uncomputed, &mut edges);
    tier_edges(snapshot, Tier::Computed, &mut edges);
    virtual_edges(snapshot.vn_nodes.iter(), &mut edges);
    uplinks(u_visible, &mut edges);
    downlinks(v_visible, Tier::Uncomputed, &mut edges);
    downlinks(v_visible, Tier::Computed, &mut edges);
    Ok(Metagraph::assemble(
        Scheme::Fusion,
        nodes,
        edges,
        u_visible,
        v_visible,
    ))
}

/// Ground scheme: raw data crosses the mesh and is computed on the ground.
pub fn build_ground(
    snapshot: &Snapshot,
    u_visible: &BTreeSet<ZoneId>,
    v_visible: &BTreeSet<ZoneId>,
) -> Result<Metagraph, MetagraphError> {
    check_endpoints(snapshot, u_visible, v_visible)?;
    let mut nodes = vec![MetaNode::Source, MetaNode::Dest];
    nodes.extend(tier_nodes(snapshot, Tier::Uncomputed));
    let mut edges = Vec::new();
    tier_edges(snapshot, Tier::Uncomputed, &mut edges);
    uplinks(u_visible, &mut edges);
    downlinks(v_visible, Tier::Uncomputed, &mut edges);
    Ok(Metagraph::assemble(
        Scheme::Ground,
        nodes,
        edges,
        u_visible,
        v_visible,
    ))
}

/// Visible scheme: raw data may only reach a VN the source sees directly and
/// is computed there; results then cross the mesh.
///
/// The edgeless pre-compute copy is labelled `Uncomputed` and the meshed copy
/// `Computed`, so the edge set is literally a subset of the fusion one.
pub fn build_visible(
    snapshot: &Snapshot,
    u_visible: &BTreeSet<ZoneId>,
    v_visible: &BTreeSet<ZoneId>,
) -> Result<Metagraph, MetagraphError> {
    check_endpoints(snapshot, u_visible, v_visible)?;
    let mut nodes = vec![MetaNode::Source, MetaNode::Dest];
    nodes.extend(tier_nodes(snapshot, Tier::Uncomputed));
    nodes.extend(tier_nodes(snapshot, Tier::Computed));
    let mut edges = Vec::new();
    tier_edges(snapshot, Tier::Computed, &mut edges);
    virtual_edges(u_visible.iter(), &mut edges);
    uplinks(u_visible, &mut edges);
    downlinks(v_visible, Tier::Computed, &mut edges);
    Ok(Metagraph::assemble(
        Scheme::Visible,
        nodes,
        edges,
        u_visible,
        v_visible,
    ))
}

pub fn build_scheme(
    scheme: Scheme,
    snapshot: &Snapshot,
    u_visible: &BTreeSet<ZoneId>,
    v_visible: &BTreeSet<ZoneId>,
) -> Result<Metagraph, MetagraphError> {
    match scheme {
        Scheme::Fusion => build_fusion(snapshot, u_visible, v_visible),
        Scheme::Ground => build_ground(snapshot, u_visible, v_visible),
        Scheme::Visible => build_visible(snapshot, u_visible, v_visible),
    }
}

/// Whether every node and edge of `a` also belongs to `b`.
pub fn is_subgraph(a: &Metagraph, b: &Metagraph) -> bool {
    let b_edges: BTreeSet<&MetaEdge> = b.edges.iter().collect();
    a.nodes.iter().all(|n| b.node_index(n).is_some()) && a.edges.iter().all(|e| b_edges.contains(e))
}

/// A task endpoint: the zone it belongs to and where it physically sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub zone: ZoneId,
    pub point: GeoPoint,
}

/// Everything needed to price an edge for one subtask.
#[derive(Debug, Clone, Copy)]
pub struct WeightContext<'a> {
    pub snapshot: &'a Snapshot,
    pub ledger: &'a ResourceLedger,
    pub source: Endpoint,
    pub dest: Endpoint,
    pub time_s: f64,
    pub result_volume_bits: f64,
    /// Price every transmission edge with the raw data volume.
    pub literal_step16: bool,
    pub light_speed_m_s: f64,
}

/// What traversing an edge consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePlan {
    pub resource: ResourceId,
    /// GFLO for compute, bits for links.
    pub demand: f64,
    pub distance_m: f64,
}

impl EdgePlan {
    pub fn is_compute(&self) -> bool {
        matches!(self.resource, ResourceId::Compute(_))
    }
}

fn vn_zone(node: &MetaNode) -> ZoneId {
    node.zone().expect("VN endpoint")
}

/// Resource, demand and distance for traversing `edge` with `subtask`.
pub fn edge_plan(
    edge: &MetaEdge,
    subtask: &Subtask,
    ctx: &WeightContext,
) -> Result<EdgePlan, MetagraphError> {
    let raw = subtask.volume_bits();
    let carried = |tier: Option<Tier>| match tier {
        Some(Tier::Computed) if !ctx.literal_step16 => ctx.result_volume_bits,
        _ => raw,
    };
    let position = |z: ZoneId| {
        ctx.snapshot
            .vn_position(z)
            .ok_or(MetagraphError::UnknownZone(z))
    };
    let r_e = ctx.snapshot.earth_radius_m();
    let plan = match edge.kind {
        EdgeKind::Virtual => EdgePlan {
            resource: ResourceId::Compute(vn_zone(&edge.from)),
            demand: subtask.flop_g,
            distance_m: 0.0,
        },
        EdgeKind::IntraTier => {
            let (a, b) = (vn_zone(&edge.from), vn_zone(&edge.to));
            EdgePlan {
                resource: ResourceId::isl(a, b),
                demand: carried(edge.from.tier()),
                distance_m: distance_m(position(a)?, position(b)?, r_e),
            }
        }
        EdgeKind::SourceUplink => {
            let z = vn_zone(&edge.to);
            EdgePlan {
                resource: ResourceId::Uplink {
                    source: ctx.source.zone,
                    vn: z,
                },
                demand: raw,
                distance_m: distance_m(&ctx.source.point, position(z)?, r_e),
            }
        }
        EdgeKind::DestDownlink => {
            let z = vn_zone(&edge.from);
            EdgePlan {
                resource: ResourceId::Sgl {
                    vn: z,
                    ground: ctx.dest.zone,
                },
                demand: carried(edge.from.tier()),
                distance_m: distance_m(position(z)?, &ctx.dest.point, r_e),
            }
        }
    };
    Ok(plan)
}

/// Static edge weight: backlog wait plus service time if the subtask reached
/// the resource at `ctx.time_s`, plus propagation.
pub fn edge_weight(
    edge: &MetaEdge,
    subtask: &Subtask,
    ctx: &WeightContext,
) -> Result<f64, MetagraphError> {
    let plan = edge_plan(edge, subtask, ctx)?;
    let (_, finish) = ctx.ledger.solve(&plan.resource, plan.demand, ctx.time_s)?;
    Ok(finish - ctx.time_s + propagation_delay(plan.distance_m, ctx.light_speed_m_s))
}

#[derive(Debug, Clone)]
pub struct WeightedMetagraph {
    pub graph: Metagraph,
    weights: Vec<f64>,
}

impl WeightedMetagraph {
    pub fn new(graph: Metagraph, weights: Vec<f64>) -> Result<Self, MetagraphError> {
        if weights.len() != graph.edges.len() {
            return Err(MetagraphError::WeightCount {
                expected: graph.edges.len(),
                got: weights.len(),
            });
        }
        if let Some((e, w)) = graph
            .edges
            .iter()
            .zip(&weights)
            .find(|(_, w)| !(**w >= 0.0 && w.is_finite()))
        {
            return Err(MetagraphError::BadWeight {
                edge: e.to_string(),
                weight: *w,
            });
        }
        Ok(Self { graph, weights })
    }

    pub fn weight(&self, edge_index: usize) -> f64 {
        self.weights[edge_index]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of(&self, from: &MetaNode, to: &MetaNode) -> Option<f64> {
        self.graph.edge_index(from, to).map(|i| self.weights[i])
    }

    /// Sum of edge weights along a node sequence, `None` if an edge is missing.
    pub fn path_length(&self, path: &[MetaNode]) -> Option<f64> {
        path.windows(2)
            .try_fold(0.0, |acc, w| Some(acc + self.weight_of(&w[0], &w[1])?))
    }

    /// Writes `from,to,kind,weight` lines with a header.
    pub fn write_edge_list(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "from,to,kind,weight")?;
        for (e, w) in self.graph.edges.iter().zip(&self.weights) {
            writeln!(out, "{},{},{},{}", e.from, e.to, e.kind, w)?;
        }
        Ok(())
    }
}

/// Prices every edge of `g` for one subtask against a frozen ledger view.
pub fn assign_weights(
    g: Metagraph,
    subtask: &Subtask,
    ctx: &WeightContext,
) -> Result<WeightedMetagraph, MetagraphError> {
    let weights = g
        .edges
        .iter()
        .map(|e| edge_weight(e, subtask, ctx))
        .collect::<Result<Vec<f64>, _>>()?;
    WeightedMetagraph::new(g, weights)
}
