use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use leo_fusion::metagraph::{
    build_fusion, build_ground, build_scheme, build_visible, is_subgraph, MetaNode, Scheme,
    WeightedMetagraph,
};
use leo_fusion::oracle::for_each_simple_path;
use leo_fusion::orbital::{
    build_snapshot, orbital_period, ConstellationSpec, GeoPoint, SatelliteId, Snapshot, ZoneGrid,
    ZoneId,
};

fn subset(rng: &mut ChaCha8Rng, zones: &[ZoneId], p: f64) -> BTreeSet<ZoneId> {
    let mut s: BTreeSet<ZoneId> = zones
        .iter()
        .copied()
        .filter(|_| rng.random_bool(p))
        .collect();
    if s.is_empty() {
        s.insert(*zones.choose(rng).unwrap());
    }
    s
}

fn random_mesh(rng: &mut ChaCha8Rng, zones: usize) -> Snapshot {
    let grid = ZoneGrid {
        rows: 1,
        cols: zones,
    };
    let ids: Vec<ZoneId> = grid.zones().collect();
    let mut vn_to_sat = BTreeMap::new();
    let mut positions = BTreeMap::new();
    for (i, &z) in ids.iter().enumerate() {
        let sat = SatelliteId { plane: 0, slot: i };
        vn_to_sat.insert(z, sat);
        positions.insert(sat, GeoPoint::new(0.0, 12.0 * i as f64, 500e3).unwrap());
    }
    let mut degree = vec![0; zones];
    let mut edges = Vec::new();
    for a in 0..zones {
        for b in a + 1..zones {
            if degree[a] < 4 && degree[b] < 4 && rng.random_bool(0.3) {
                degree[a] += 1;
                degree[b] += 1;
                edges.push((ids[a], ids[b]));
            }
        }
    }
    Snapshot::from_parts(0.0, grid, vn_to_sat, edges, positions, 6_371_393.0).unwrap()
}

#[test]
fn every_path_computes_at_most_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut paths = 0;
    for _ in 0..40 {
        let zones = rng.random_range(1..=10);
        let snapshot = random_mesh(&mut rng, zones);
        let ids = snapshot.vn_nodes.clone();
        let u = subset(&mut rng, &ids, 0.3);
        let v = subset(&mut rng, &ids, 0.3);
        for scheme in Scheme::ALL {
            let g = build_scheme(scheme, &snapshot, &u, &v).unwrap();
            let n = g.edges().len();
            let wg = WeightedMetagraph::new(g, vec![1.0; n]).unwrap();
            let nodes = wg.graph.nodes().to_vec();
            let from = wg.graph.node_index(&MetaNode::Source).unwrap();
            let to = wg.graph.node_index(&MetaNode::Dest).unwrap();
            for_each_simple_path(&wg, from, to, &mut |p| {
                paths += 1;
                let virtuals = p
                    .windows(2)
                    .filter(|w| {
                        nodes[w[0]].tier() != nodes[w[1]].tier()
                            && nodes[w[0]].zone() == nodes[w[1]].zone()
                    })
                    .count();
                assert!(virtuals <= 1, "{scheme}: path computes {virtuals} times");
                if scheme == Scheme::Ground {
                    assert_eq!(virtuals, 0);
                }
            });
        }
    }
    assert!(paths > 1000, "only {paths} paths enumerated");
}

#[test]
fn counts_follow_closed_forms_on_full_snapshots() {
    let spec = ConstellationSpec::default();
    let grid = ZoneGrid::default();
    let period = orbital_period(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..10 {
        let s = build_snapshot(&spec, &grid, period * k as f64 / 10.0).unwrap();
        let ids = s.vn_nodes.clone();
        let (u, v) = (subset(&mut rng, &ids, 0.2), subset(&mut rng, &ids, 0.05));
        let (z, isl) = (ids.len(), s.isl_edges.len());
        let f = build_fusion(&s, &u, &v).unwrap();
        assert_eq!(f.nodes().len(), 258);
        assert_eq!(f.edges().len(), 4 * isl + z + u.len() + 2 * v.len());
        let g = build_ground(&s, &u, &v).unwrap();
        assert_eq!(
            (g.nodes().len(), g.edges().len()),
            (z + 2, 2 * isl + u.len() + v.len())
        );
        let vis = build_visible(&s, &u, &v).unwrap();
        assert_eq!(
            (vis.nodes().len(), vis.edges().len()),
            (2 * z + 2, 2 * isl + 2 * u.len() + v.len())
        );
        assert!(is_subgraph(&g, &f) && is_subgraph(&vis, &f));
        assert!(!is_subgraph(&f, &g) && !is_subgraph(&f, &vis));
        // No edges into the source or out of the destination.
        assert!(f
            .edges()
            .iter()
            .all(|e| e.to != MetaNode::Source && e.from != MetaNode::Dest));
    }
}
