//! Orbital results checked against independent hand-rolled geometry.

use leo_fusion::orbital::{
    build_snapshot, distance_m, elevation_deg, orbital_period, visible_nodes, vn_association,
    ConstellationSpec, GeoPoint, Lattice, LinkKind, Observer, SatelliteId, Snapshot, ZoneGrid,
    ZoneId,
};
use leo_fusion::resources::propagation_delay;

/// Polar orbit position at t = 0: slot `s` of plane `p` sits at argument of
/// latitude `360·s/N_s` on the meridian `180·p/N_o`.
fn epoch_position(spec: &ConstellationSpec, plane: usize, slot: usize) -> (f64, f64) {
    let u = (360.0 * slot as f64 / spec.sats_per_orbit as f64).to_radians();
    let lat = u.sin().asin();
    let mut lon = (180.0 * plane as f64 / spec.num_orbits as f64).to_radians();
    if u.cos() < 0.0 {
        lon += std::f64::consts::PI;
    }
    (lat, lon)
}

fn central_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let h = ((b.0 - a.0) / 2.0).sin().powi(2)
        + a.0.cos() * b.0.cos() * ((b.1 - a.1) / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

fn oracle_association(
    spec: &ConstellationSpec,
    grid: &ZoneGrid,
) -> Vec<(ZoneId, SatelliteId, f64)> {
    let sats: Vec<(SatelliteId, (f64, f64))> = (0..spec.num_orbits)
        .flat_map(|p| (0..spec.sats_per_orbit).map(move |s| (p, s)))
        .map(|(p, s)| {
            (
                SatelliteId { plane: p, slot: s },
                epoch_position(spec, p, s),
            )
        })
        .collect();
    let mut out = Vec::new();
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            let centre = (
                (-90.0 + (row as f64 + 0.5) * 180.0 / grid.rows as f64).to_radians(),
                (-180.0 + (col as f64 + 0.5) * 360.0 / grid.cols as f64).to_radians(),
            );
            let mut best: Option<(SatelliteId, f64, f64)> = None;
            for &(id, pos) in &sats {
                let angle = central_angle(centre, pos);
                if best.is_none_or(|(_, a, _)| angle < a - 1e-9) {
                    best = Some((id, angle, pos.0));
                }
            }
            let (id, _, lat) = best.unwrap();
            out.push((ZoneId { row, col }, id, lat.to_degrees()));
        }
    }
    out
}

#[test]
fn epoch_association_matches_argmin() {
    let spec = ConstellationSpec::default();
    let grid = ZoneGrid::default();
    let lib = vn_association(&spec, &grid, 0.0);
    let oracle = oracle_association(&spec, &grid);
    assert_eq!(lib.len(), 128);
    assert_eq!(oracle.len(), 128);
    for (zone, sat, _) in oracle {
        assert_eq!(lib[&zone], sat, "zone {zone}");
    }
}

#[test]
fn epoch_edge_count_under_polar_mask() {
    let spec = ConstellationSpec::default();
    let grid = ZoneGrid::default();
    let lattice = Lattice::new(&spec, &grid).unwrap();
    let carrier_lat: std::collections::BTreeMap<ZoneId, f64> = oracle_association(&spec, &grid)
        .into_iter()
        .map(|(z, _, lat)| (z, lat))
        .collect();
    let mut expected = 0;
    for plane in 0..spec.num_orbits {
        for slot in 0..spec.sats_per_orbit {
            // Ring link to the next slot is never masked.
            expected += 1;
            if plane + 1 < spec.num_orbits {
                let a = lattice.zone_of_sat(SatelliteId { plane, slot });
                let b = lattice.zone_of_sat(SatelliteId {
                    plane: plane + 1,
                    slot,
                });
                if carrier_lat[&a].abs() <= 75.0 && carrier_lat[&b].abs() <= 75.0 {
                    expected += 1;
                }
            }
        }
    }
    let snapshot = build_snapshot(&spec, &grid, 0.0).unwrap();
    assert_eq!(snapshot.isl_edges.len(), expected);
    assert!(expected < 240);
    let masked = lattice
        .links(false)
        .iter()
        .filter(|l| l.kind == LinkKind::InterPlane)
        .count();
    assert_eq!(masked, 112);
}

#[test]
fn period_from_first_principles() {
    let spec = ConstellationSpec::default();
    let a: f64 = 6_371_393.0 + 500_000.0;
    let expected = 2.0 * std::f64::consts::PI * (a * a * a / 3.9860e14).sqrt();
    assert!((orbital_period(&spec) - expected).abs() < 1e-9);
    assert!((expected - 5668.9).abs() < 0.5);
}

#[test]
fn quarter_orbit_chord_and_its_propagation() {
    let r_e = 6_371_393.0;
    let a = GeoPoint::new(0.0, 0.0, 500e3).unwrap();
    let b = GeoPoint::new(0.0, 90.0, 500e3).unwrap();
    let chord = 2.0 * (r_e + 500e3) * (std::f64::consts::FRAC_PI_4).sin();
    let d = distance_m(&a, &b, r_e);
    assert!((d - chord).abs() < 1e-6);
    assert!((d - 9.7177e6).abs() < 100.0);
    assert!((propagation_delay(d, 299_792_458.0) - 0.032415).abs() < 1e-6);
}

#[test]
fn elevation_mask_is_inclusive() {
    let r_e = 6_371_393.0;
    let r = r_e + 500e3;
    // Satellite 12° of arc east of an equatorial ground point.
    let gamma = 12f64.to_radians();
    let ground = GeoPoint::new(0.0, 0.0, 0.0).unwrap();
    let sat = GeoPoint::new(0.0, 12.0, 500e3).unwrap();
    let slant = (r_e * r_e + r * r - 2.0 * r_e * r * gamma.cos()).sqrt();
    let independent = (r * gamma.sin() / slant).acos().to_degrees();
    let lib = elevation_deg(&ground, &sat, r_e);
    assert!((lib - independent).abs() < 1e-9);

    let zone = ZoneId { row: 0, col: 0 };
    let id = SatelliteId { plane: 0, slot: 0 };
    let snapshot = Snapshot::from_parts(
        0.0,
        ZoneGrid { rows: 1, cols: 1 },
        [(zone, id)].into_iter().collect(),
        [],
        [(id, sat)].into_iter().collect(),
        r_e,
    )
    .unwrap();
    let spec = ConstellationSpec {
        elevation_min_deg: lib,
        ..ConstellationSpec::default()
    };
    assert!(visible_nodes(&Observer::Ground(ground), &snapshot, &spec).contains(&zone));
    let spec = ConstellationSpec {
        elevation_min_deg: lib + 1e-9,
        ..ConstellationSpec::default()
    };
    assert!(visible_nodes(&Observer::Ground(ground), &snapshot, &spec).is_empty());
}

#[test]
fn every_zone_has_a_carrier_over_a_period() {
    let spec = ConstellationSpec::default();
    let grid = ZoneGrid::default();
    let period = orbital_period(&spec);
    for k in 0..24 {
        let s = build_snapshot(&spec, &grid, period * k as f64 / 24.0).unwrap();
        assert_eq!(s.vn_nodes.len(), 128);
        assert!(s.vn_nodes.iter().all(|z| s.degree(*z) <= 4));
    }
}
