//! Brute-force cross-checks for the path search and for scheme dominance.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{empty_ledger, shortest_path, AdjacencyGraph, ShortestPath, WeightedGraph};
use crate::metagraph::{
    assign_weights, build_scheme, Endpoint, MetaNode, MetagraphError, Scheme, WeightContext,
    WeightedMetagraph,
};
use crate::orbital::{
    build_snapshot, orbital_period, GeoPoint, OrbitalError, SatelliteId, Snapshot, ZoneGrid, ZoneId,
};
use crate::resources::{Owner, ResourceId, ResourceLedger};
use crate::scenario::ScenarioConfig;
use crate::traffic::Subtask;

/// Largest graph the exhaustive search accepts.
pub const MAX_BRUTE_FORCE_NODES: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("graph has {0} nodes, more than the {MAX_BRUTE_FORCE_NODES} the enumeration allows")]
    TooLarge(usize),
    #[error("node {0} is not in the graph")]
    UnknownNode(usize),
    #[error("no path")]
    NoPath,
}

/// Visits every simple directed path from `from` to `to`.
pub fn for_each_simple_path<G: WeightedGraph + ?Sized>(
    g: &G,
    from: usize,
    to: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    fn dfs<G: WeightedGraph + ?Sized>(
        g: &G,
        to: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        let last = *path.last().expect("non-empty path");
        if last == to {
            visit(path);
            return;
        }
        let mut next = Vec::new();
        g.for_each_out(last, &mut |n, _| next.push(n));
        for n in next {
            if !on_path[n] {
                on_path[n] = true;
                path.push(n);
                dfs(g, to, path, on_path, visit);
                path.pop();
                on_path[n] = false;
            }
        }
    }
    let mut on_path = vec![false; g.node_count()];
    on_path[from] = true;
    dfs(g, to, &mut vec![from], &mut on_path, visit);
}

fn edge_weight<G: WeightedGraph + ?Sized>(g: &G, a: usize, b: usize) -> f64 {
    let mut w = f64::INFINITY;
    g.for_each_out(a, &mut |n, x| {
        if n == b {
            w = w.min(x);
        }
    });
    w
}

/// Exhaustive shortest path with the engine's tie rule.
pub fn brute_force_shortest_path<G: WeightedGraph + ?Sized>(
    g: &G,
    from: usize,
    to: usize,
) -> Result<ShortestPath, OracleError> {
    let n = g.node_count();
    if n > MAX_BRUTE_FORCE_NODES {
        return Err(OracleError::TooLarge(n));
    }
    for node in [from, to] {
        if node >= n {
            return Err(OracleError::UnknownNode(node));
        }
    }
    if from == to {
        return Ok(ShortestPath {
            nodes: Vec::new(),
            length: 0.0,
        });
    }
    let mut best: Option<ShortestPath> = None;
    for_each_simple_path(g, from, to, &mut |path| {
        let length = path
            .windows(2)
            .fold(0.0, |acc, w| acc + edge_weight(g, w[0], w[1]));
        let better = match &best {
            None => true,
            Some(b) => match length.total_cmp(&b.length) {
                Ordering::Less => true,
                Ordering::Equal => path < b.nodes.as_slice(),
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some(ShortestPath {
                nodes: path.to_vec(),
                length,
            });
        }
    });
    best.ok_or(OracleError::NoPath)
}

/// A simple digraph on `nodes` nodes with weights in quarter steps, so that
/// path sums are exact.
pub fn random_graph(rng: &mut impl Rng, nodes: usize, edge_prob: f64) -> AdjacencyGraph {
    let mut g = AdjacencyGraph::new(nodes);
    for a in 0..nodes {
        for b in 0..nodes {
            if a != b && rng.random_bool(edge_prob) {
                g.add_edge(a, b, rng.random_range(1..=12) as f64 / 4.0);
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub instance_id: String,
    /// Brute-force length, or the best benchmark length for dominance checks.
    pub oracle: Option<f64>,
    /// Engine length, or the fusion length for dominance checks.
    pub engine: Option<f64>,
    pub ok: bool,
    /// Unreachable instances are reported but do not fail.
    pub skipped: bool,
}

pub fn write_report_lines(reports: &[OracleReport], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "instance_id,ok")?;
    for r in reports {
        writeln!(out, "{},{}", r.instance_id, r.ok)?;
    }
    Ok(())
}

/// A random scheme metagraph with at most `max_nodes` nodes over a small
/// random mesh, weighted in quarter steps.
pub fn random_metagraph(rng: &mut impl Rng, max_nodes: usize) -> WeightedMetagraph {
    let scheme = *Scheme::ALL.choose(rng).expect("schemes");
    let max_zones = match scheme {
        Scheme::Ground => max_nodes - 2,
        _ => (max_nodes - 2) / 2,
    };
    let n = rng.random_range(1..=max_zones.max(1));
    let grid = ZoneGrid { rows: 1, cols: n };
    let zones: Vec<ZoneId> = grid.zones().collect();
    let mut vn_to_sat = BTreeMap::new();
    let mut positions = BTreeMap::new();
    for (i, &zone) in zones.iter().enumerate() {
        let sat = SatelliteId { plane: 0, slot: i };
        vn_to_sat.insert(zone, sat);
        positions.insert(
            sat,
            GeoPoint::new(0.0, 10.0 * i as f64, 500e3).expect("valid point"),
        );
    }
    let mut degree = vec![0; n];
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if degree[a] < 4 && degree[b] < 4 && rng.random_bool(0.5) {
                degree[a] += 1;
                degree[b] += 1;
                edges.push((zones[a], zones[b]));
            }
        }
    }
    let snapshot = Snapshot::from_parts(0.0, grid, vn_to_sat, edges, positions, 6_371_393.0)
        .expect("valid mesh");
    let u_visible = random_subset(rng, &zones, 0.4);
    let v_visible = random_subset(rng, &zones, 0.4);
    let g = build_scheme(scheme, &snapshot, &u_visible, &v_visible).expect("endpoints are visible");
    let weights = (0..g.edges().len())
        .map(|_| rng.random_range(1..=12) as f64 / 4.0)
        .collect();
    WeightedMetagraph::new(g, weights).expect("positive weights")
}

/// Engine against enumeration on `count` random metagraphs of at most
/// `max_nodes` nodes.
pub fn shortest_path_suite(seed: u64, count: usize, max_nodes: usize) -> Vec<OracleReport> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let wg = random_metagraph(&mut rng, max_nodes);
            let from = wg.graph.node_index(&MetaNode::Source).expect("source");
            let to = wg.graph.node_index(&MetaNode::Dest).expect("destination");
            let engine = shortest_path(&wg, from, to).ok();
            let oracle = brute_force_shortest_path(&wg, from, to).ok();
            let ok = match (&engine, &oracle) {
                (None, None) => true,
                (Some(e), Some(o)) => (e.length - o.length).abs() <= 1e-9 && e.nodes == o.nodes,
                _ => false,
            };
            OracleReport {
                instance_id: format!("sp-{i}"),
                oracle: oracle.map(|p| p.length),
                engine: engine.map(|p| p.length),
                ok,
                skipped: false,
            }
        })
        .collect()
}

/// One frozen decision problem: a snapshot, a ledger view and a subtask.
#[derive(Debug, Clone)]
pub struct Theorem1Instance {
    pub snapshot: Snapshot,
    pub ledger: ResourceLedger,
    pub source: Endpoint,
    pub dest: Endpoint,
    pub u_visible: BTreeSet<ZoneId>,
    pub v_visible: BTreeSet<ZoneId>,
    pub subtask: Subtask,
    pub time_s: f64,
    pub result_volume_bits: f64,
    pub literal_step16: bool,
    pub light_speed_m_s: f64,
}

impl Theorem1Instance {
    pub fn context(&self) -> WeightContext<'_> {
        WeightContext {
            snapshot: &self.snapshot,
            ledger: &self.ledger,
            source: self.source,
            dest: self.dest,
            time_s: self.time_s,
            result_volume_bits: self.result_volume_bits,
            literal_step16: self.literal_step16,
            light_speed_m_s: self.light_speed_m_s,
        }
    }

    /// Shortest `u -> v` length under `scheme`; `None` when unreachable.
    pub fn length(&self, scheme: Scheme) -> Result<Option<f64>, MetagraphError> {
        let g = match build_scheme(scheme, &self.snapshot, &self.u_visible, &self.v_visible) {
            Ok(g) => g,
            Err(MetagraphError::UnreachableEndpoint(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let wg = assign_weights(g, &self.subtask, &self.context())?;
        let from = wg.graph.node_index(&MetaNode::Source).expect("source");
        let to = wg.graph.node_index(&MetaNode::Dest).expect("destination");
        Ok(shortest_path(&wg, from, to).ok().map(|p| p.length))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Check {
    pub fusion: f64,
    pub ground: Option<f64>,
    pub visible: Option<f64>,
    pub holds: bool,
}

/// Fusion must be no longer than either benchmark on the same weights.
/// `None` when the fusion metagraph has no `u -> v` path.
pub fn check_theorem1(
    instance: &Theorem1Instance,
) -> Result<Option<Theorem1Check>, MetagraphError> {
    let Some(fusion) = instance.length(Scheme::Fusion)? else {
        return Ok(None);
    };
    let ground = instance.length(Scheme::Ground)?;
    let visible = instance.length(Scheme::Visible)?;
    let holds = ground.is_none_or(|g| fusion <= g) && visible.is_none_or(|v| fusion <= v);
    Ok(Some(Theorem1Check {
        fusion,
        ground,
        visible,
        holds,
    }))
}

fn random_subset(rng: &mut impl Rng, zones: &[ZoneId], p: f64) -> BTreeSet<ZoneId> {
    let mut s: BTreeSet<ZoneId> = zones
        .iter()
        .copied()
        .filter(|_| rng.random_bool(p))
        .collect();
    if s.is_empty() {
        s.insert(*zones.choose(rng).expect("zones"));
    }
    s
}

/// Small constellation used for the dominance instances: 4 planes of 4
/// satellites, a 2×8 zone grid.
pub fn small_config() -> ScenarioConfig {
    ScenarioConfig {
        num_orbits: 4,
        sats_per_orbit: 4,
        ..ScenarioConfig::default()
    }
}

/// Random instance: random epoch, random busy intervals on every kind of
/// resource and random endpoint visibility.
pub fn random_theorem1_instance(seed: u64, index: u64) -> Result<Theorem1Instance, OrbitalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut config = small_config();
    config.sat_gflops = [50.0, 100.0, 200.0][rng.random_range(0..3)];
    config.sgl_gbps = [0.2, 1.0, 5.0][rng.random_range(0..3)];
    let spec = config.constellation();
    let grid = config.grid();
    let t = rng.random_range(0.0..orbital_period(&spec));
    let snapshot = build_snapshot(&spec, &grid, t)?;
    let zones: Vec<ZoneId> = grid.zones().collect();
    let source_zone = *zones.choose(&mut rng).expect("zones");
    let dest_zone = *zones.choose(&mut rng).expect("zones");
    let source = Endpoint {
        zone: source_zone,
        point: grid.center(source_zone, config.source_altitude_km * 1e3),
    };
    let dest = Endpoint {
        zone: dest_zone,
        point: grid.center(dest_zone, 0.0),
    };
    let mut ledger = empty_ledger(&config).expect("small config is valid");
    let isls: Vec<(ZoneId, ZoneId)> = snapshot.isl_edges.iter().copied().collect();
    for k in 0..rng.random_range(0..40) {
        let zone = *zones.choose(&mut rng).expect("zones");
        let resource = match rng.random_range(0..4) {
            0 => ResourceId::Compute(zone),
            1 => match isls.choose(&mut rng) {
                Some(&(a, b)) => ResourceId::isl(a, b),
                None => ResourceId::Compute(zone),
            },
            2 => ResourceId::Sgl {
                vn: zone,
                ground: dest_zone,
            },
            _ => ResourceId::Uplink {
                source: source_zone,
                vn: zone,
            },
        };
        let rate = ledger.capacities().rate(&resource);
        let demand = rate * rng.random_range(0.05..20.0);
        let start = t + rng.random_range(-5.0..30.0);
        let owner = Owner {
            task: k,
            subtask: 0,
        };
        let r = ledger
            .propose(resource, demand, start, owner)
            .expect("known resource");
        ledger.commit(&r).expect("proposed slot is free");
    }
    Ok(Theorem1Instance {
        u_visible: random_subset(&mut rng, &zones, 0.25),
        v_visible: random_subset(&mut rng, &zones, 0.2),
        subtask: Subtask {
            flop_g: rng.random_range(1.0..400.0),
            volume_gb: rng.random_range(0.001..0.5),
        },
        literal_step16: rng.random_bool(0.2),
        result_volume_bits: config.result_volume_bits,
        light_speed_m_s: spec.light_speed_m_s,
        time_s: t,
        snapshot,
        ledger,
        source,
        dest,
    })
}

pub fn theorem1_suite(seed: u64, count: usize) -> Result<Vec<OracleReport>, MetagraphError> {
    (0..count)
        .map(|i| {
            let instance =
                random_theorem1_instance(seed, i as u64).expect("valid small constellation");
            let check = check_theorem1(&instance)?;
            Ok(match check {
                None => OracleReport {
                    instance_id: format!("thm1-{i}"),
                    oracle: None,
                    engine: None,
                    ok: true,
                    skipped: true,
                },
                Some(c) => OracleReport {
                    instance_id: format!("thm1-{i}"),
                    oracle: [c.ground, c.visible].into_iter().flatten().reduce(f64::min),
                    engine: Some(c.fusion),
                    ok: c.holds,
                    skipped: false,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::Capacities;

    #[test]
    fn single_edge_and_triangle() {
        let mut g = AdjacencyGraph::new(2);
        g.add_edge(0, 1, 5.0);
        assert_eq!(brute_force_shortest_path(&g, 0, 1).unwrap().length, 5.0);
        let mut t = AdjacencyGraph::new(3);
        t.add_edge(0, 1, 1.0);
        t.add_edge(1, 2, 1.0);
        t.add_edge(0, 2, 3.0);
        let p = brute_force_shortest_path(&t, 0, 2).unwrap();
        assert_eq!((p.nodes, p.length), (vec![0, 1, 2], 2.0));
    }

    #[test]
    fn size_bound_and_errors() {
        let g = AdjacencyGraph::new(13);
        assert_eq!(
            brute_force_shortest_path(&g, 0, 1),
            Err(OracleError::TooLarge(13))
        );
        let g = AdjacencyGraph::new(3);
        assert_eq!(
            brute_force_shortest_path(&g, 0, 2),
            Err(OracleError::NoPath)
        );
        assert_eq!(
            brute_force_shortest_path(&g, 0, 3),
            Err(OracleError::UnknownNode(3))
        );
    }

    #[test]
    fn engine_matches_enumeration_on_eight_nodes() {
        for i in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            rng.set_stream(i);
            let g = random_graph(&mut rng, 8, 0.35);
            let e = shortest_path(&g, 0, 7);
            let o = brute_force_shortest_path(&g, 0, 7);
            match (e, o) {
                (Ok(e), Ok(o)) => {
                    assert_eq!(e, o);
                    let sum: f64 = o
                        .nodes
                        .windows(2)
                        .map(|w| edge_weight(&g, w[0], w[1]))
                        .sum();
                    assert_eq!(sum, o.length);
                }
                (Err(_), Err(OracleError::NoPath)) => {}
                other => panic!("instance {i}: {other:?}"),
            }
        }
    }

    #[test]
    fn dominance_on_a_single_zone() {
        let grid = ZoneGrid { rows: 1, cols: 1 };
        let zone = ZoneId { row: 0, col: 0 };
        let sat = SatelliteId { plane: 0, slot: 0 };
        let snapshot = Snapshot::from_parts(
            0.0,
            grid,
            [(zone, sat)].into_iter().collect(),
            [],
            [(sat, GeoPoint::new(0.0, 0.0, 500e3).unwrap())]
                .into_iter()
                .collect(),
            6_371_393.0,
        )
        .unwrap();
        let ledger = ResourceLedger::new(grid, Capacities::default(), []).unwrap();
        let only: BTreeSet<ZoneId> = [zone].into_iter().collect();
        let instance = Theorem1Instance {
            snapshot,
            ledger,
            source: Endpoint {
                zone,
                point: GeoPoint::new(0.0, 0.0, 600e3).unwrap(),
            },
            dest: Endpoint {
                zone,
                point: GeoPoint::new(0.0, 0.0, 0.0).unwrap(),
            },
            u_visible: only.clone(),
            v_visible: only,
            subtask: Subtask {
                flop_g: 100.0,
                volume_gb: 0.1,
            },
            time_s: 0.0,
            result_volume_bits: 1e6,
            literal_step16: false,
            light_speed_m_s: 299_792_458.0,
        };
        let c = check_theorem1(&instance).unwrap().unwrap();
        assert!(c.holds);
        // Computing aboard (1 s) beats a 4 s raw downlink.
        assert_eq!(Some(c.fusion), c.visible);
        assert!(c.fusion < c.ground.unwrap());
    }

    #[test]
    fn random_dominance_instances_hold() {
        let reports = theorem1_suite(5, 20).unwrap();
        assert!(reports.iter().all(|r| r.ok));
        assert!(reports.iter().any(|r| !r.skipped));
    }

    #[test]
    fn random_metagraphs_respect_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let wg = random_metagraph(&mut rng, 10);
            assert!(wg.graph.nodes().len() <= 10);
        }
        assert!(shortest_path_suite(9, 100, 10).iter().all(|r| r.ok));
    }

    #[test]
    fn report_lines() {
        let reports = shortest_path_suite(1, 3, 6);
        let mut buf = Vec::new();
        write_report_lines(&reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "instance_id,ok\nsp-0,true\nsp-1,true\nsp-2,true\n");
    }
}
