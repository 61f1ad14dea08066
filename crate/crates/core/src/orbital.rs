//! Walker-star constellation geometry and the virtual-node network.
//!
//! The Earth surface is cut into a fixed grid of zones. Every zone is a
//! virtual node (VN) carried by whichever satellite is nearest to the zone
//! centre at a given instant. The VN mesh itself follows the satellite
//! lattice: each zone owns one lattice position `(plane, slot)`, namely the
//! satellite that sweeps through it at the reference epoch, and ISLs connect
//! VNs whose lattice positions are ring neighbours in a plane or share a slot
//! in adjacent planes.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OrbitalError {
    #[error("invalid constellation: {0}")]
    InvalidSpec(String),
    #[error("invalid geographic point: {0}")]
    InvalidPoint(String),
    #[error("zone grid {rows}x{cols} does not match a {planes}x{slots} constellation lattice")]
    GridMismatch {
        rows: usize,
        cols: usize,
        planes: usize,
        slots: usize,
    },
    #[error("satellite ({plane}, {slot}) is outside the constellation")]
    UnknownSatellite { plane: usize, slot: usize },
    #[error("zone ({row}, {col}) is outside the grid")]
    UnknownZone { row: usize, col: usize },
    #[error("inconsistent snapshot: {0}")]
    InvalidSnapshot(String),
}

/// Walker-star constellation parameters plus the link and visibility rules
/// that depend on geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    pub num_orbits: usize,
    pub sats_per_orbit: usize,
    pub altitude_m: f64,
    pub inclination_deg: f64,
    pub earth_radius_m: f64,
    pub earth_mass_kg: f64,
    pub grav_const: f64,
    /// Standard gravitational parameter; used for every orbital computation.
    pub kepler_const: f64,
    pub earth_rotation_rad_s: f64,
    /// Inter-plane ISLs are off when either end is above this latitude.
    pub polar_mask_deg: f64,
    /// Minimum elevation for a ground point to see a satellite.
    pub elevation_min_deg: f64,
    pub light_speed_m_s: f64,
    /// Longest space-to-space link a source satellite can close.
    pub max_slant_range_m: f64,
}

impl Default for ConstellationSpec {
    fn default() -> Self {
        Self {
            num_orbits: 8,
            sats_per_orbit: 16,
            altitude_m: 500e3,
            inclination_deg: 90.0,
            earth_radius_m: 6_371_393.0,
            earth_mass_kg: 5.965e24,
            grav_const: 6.67428e-11,
            kepler_const: 3.9860e14,
            earth_rotation_rad_s: 7.29211510e-5,
            polar_mask_deg: 75.0,
            elevation_min_deg: 5.0,
            light_speed_m_s: 299_792_458.0,
            max_slant_range_m: 7_800e3,
        }
    }
}

impl ConstellationSpec {
    pub fn validate(&self) -> Result<(), OrbitalError> {
        let bad = |msg: &str| Err(OrbitalError::InvalidSpec(msg.to_string()));
        if self.num_orbits == 0 {
            return bad("num_orbits must be at least 1");
        }
        if self.sats_per_orbit == 0 {
            return bad("sats_per_orbit must be at least 1");
        }
        if self.altitude_m.is_nan() || self.altitude_m <= 0.0 {
            return bad("altitude_m must be positive");
        }
        if !(0.0..=90.0).contains(&self.polar_mask_deg) {
            return bad("polar_mask_deg must lie in [0, 90]");
        }
        if !(-90.0..=90.0).contains(&self.elevation_min_deg) {
            return bad("elevation_min_deg must lie in [-90, 90]");
        }
        let constants = [
            ("earth_radius_m", self.earth_radius_m),
            ("earth_mass_kg", self.earth_mass_kg),
            ("grav_const", self.grav_const),
            ("kepler_const", self.kepler_const),
            ("earth_rotation_rad_s", self.earth_rotation_rad_s),
            ("light_speed_m_s", self.light_speed_m_s),
            ("max_slant_range_m", self.max_slant_range_m),
        ];
        for (name, value) in constants {
            if !(value > 0.0 && value.is_finite()) {
                return Err(OrbitalError::InvalidSpec(format!(
                    "{name} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn num_satellites(&self) -> usize {
        self.num_orbits * self.sats_per_orbit
    }

    pub fn orbit_radius_m(&self) -> f64 {
        self.earth_radius_m + self.altitude_m
    }

    pub fn satellites(&self) -> impl Iterator<Item = SatelliteId> + '_ {
        (0..self.num_orbits).flat_map(move |plane| {
            (0..self.sats_per_orbit).map(move |slot| SatelliteId { plane, slot })
        })
    }

    pub fn satellite(&self, plane: usize, slot: usize) -> Result<SatelliteId, OrbitalError> {
        if plane < self.num_orbits && slot < self.sats_per_orbit {
            Ok(SatelliteId { plane, slot })
        } else {
            Err(OrbitalError::UnknownSatellite { plane, slot })
        }
    }

    fn sat_index(&self, sat: SatelliteId) -> usize {
        sat.plane * self.sats_per_orbit + sat.slot
    }

    fn sat_at(&self, index: usize) -> SatelliteId {
        SatelliteId {
            plane: index / self.sats_per_orbit,
            slot: index % self.sats_per_orbit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SatelliteId {
    pub plane: usize,
    pub slot: usize,
}

impl fmt::Display for SatelliteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sat({},{})", self.plane, self.slot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl GeoPoint {
    /// Builds a point, wrapping the longitude into `[-180, 180)`.
    pub fn new(
        latitude_deg: f64,
        longitude_deg: f64,
        altitude_m: f64,
    ) -> Result<Self, OrbitalError> {
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(OrbitalError::InvalidPoint(format!(
                "latitude {latitude_deg} outside [-90, 90]"
            )));
        }
        if !longitude_deg.is_finite() {
            return Err(OrbitalError::InvalidPoint("longitude is not finite".into()));
        }
        if altitude_m.is_nan() || altitude_m < 0.0 {
            return Err(OrbitalError::InvalidPoint(format!(
                "altitude {altitude_m} is negative"
            )));
        }
        Ok(Self {
            latitude_deg,
            longitude_deg: wrap_longitude(longitude_deg),
            altitude_m,
        })
    }

    /// Earth-centred Cartesian position in metres.
    pub fn to_cartesian(&self, earth_radius_m: f64) -> [f64; 3] {
        let r = earth_radius_m + self.altitude_m;
        let (lat, lon) = (
            self.latitude_deg.to_radians(),
            self.longitude_deg.to_radians(),
        );
        [
            r * lat.cos() * lon.cos(),
            r * lat.cos() * lon.sin(),
            r * lat.sin(),
        ]
    }

    fn unit(&self) -> [f64; 3] {
        let (lat, lon) = (
            self.latitude_deg.to_radians(),
            self.longitude_deg.to_radians(),
        );
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }
}

fn wrap_longitude(lon: f64) -> f64 {
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360.
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Straight-line distance between two points.
pub fn distance_m(a: &GeoPoint, b: &GeoPoint, earth_radius_m: f64) -> f64 {
    norm(sub(
        a.to_cartesian(earth_radius_m),
        b.to_cartesian(earth_radius_m),
    ))
}

/// Elevation of `target` above the local horizon of `observer`, in degrees.
pub fn elevation_deg(observer: &GeoPoint, target: &GeoPoint, earth_radius_m: f64) -> f64 {
    let los = sub(
        target.to_cartesian(earth_radius_m),
        observer.to_cartesian(earth_radius_m),
    );
    let range = norm(los);
    if range == 0.0 {
        return 90.0;
    }
    (dot(los, observer.unit()) / range)
        .clamp(-1.0, 1.0)
        .asin()
        .to_degrees()
}

/// Whether the straight segment between two points clears the Earth sphere.
pub fn line_of_sight(a: &GeoPoint, b: &GeoPoint, earth_radius_m: f64) -> bool {
    let pa = a.to_cartesian(earth_radius_m);
    let pb = b.to_cartesian(earth_radius_m);
    let d = sub(pb, pa);
    let len2 = dot(d, d);
    let closest = if len2 == 0.0 {
        pa
    } else {
        let s = (-dot(pa, d) / len2).clamp(0.0, 1.0);
        [pa[0] + s * d[0], pa[1] + s * d[1], pa[2] + s * d[2]]
    };
    norm(closest) >= earth_radius_m
}

/// Orbital period `2π·sqrt((R_e + h)³ / K)` in seconds.
pub fn orbital_period(spec: &ConstellationSpec) -> f64 {
    2.0 * PI * (spec.orbit_radius_m().powi(3) / spec.kepler_const).sqrt()
}

/// Position of a satellite at `t` seconds after the reference epoch.
///
/// Plane `p` has its ascending node at `180·p/N_o` degrees (Earth-fixed,
/// drifting west with Earth rotation) and slot `s` starts at argument of
/// latitude `360·s/N_s`. There is no inter-plane phase offset.
pub fn satellite_position(spec: &ConstellationSpec, sat: SatelliteId, t: f64) -> GeoPoint {
    let period = orbital_period(spec);
    let arg_lat =
        (360.0 * sat.slot as f64 / spec.sats_per_orbit as f64 + 360.0 * t / period).to_radians();
    let raan = 180.0 * sat.plane as f64 / spec.num_orbits as f64
        - (spec.earth_rotation_rad_s * t).to_degrees();
    let incl = spec.inclination_deg.to_radians();
    let lat = (incl.sin() * arg_lat.sin())
        .clamp(-1.0, 1.0)
        .asin()
        .to_degrees();
    let dlon = (incl.cos() * arg_lat.sin())
        .atan2(arg_lat.cos())
        .to_degrees();
    GeoPoint {
        latitude_deg: lat,
        longitude_deg: wrap_longitude(raan + dlon),
        altitude_m: spec.altitude_m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZoneId {
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z({},{})", self.row, self.col)
    }
}

/// Latitude/longitude grid of zones. Row 0 starts at the south pole and
/// column 0 at longitude -180.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZoneGrid {
    pub rows: usize,
    pub cols: usize,
}

impl Default for ZoneGrid {
    /// 22.5° × 22.5° cells: 8 rows by 16 columns.
    fn default() -> Self {
        Self { rows: 8, cols: 16 }
    }
}

impl ZoneGrid {
    /// The grid whose columns are the plane sides and whose rows are the
    /// latitude bands swept by consecutive slots: `N_s/2` rows by `2·N_o`
    /// columns. An 8×16 constellation gives the default 22.5° grid.
    pub fn for_constellation(spec: &ConstellationSpec) -> Result<Self, OrbitalError> {
        if !spec.sats_per_orbit.is_multiple_of(2)
            || spec.sats_per_orbit == 0
            || spec.num_orbits == 0
        {
            return Err(OrbitalError::GridMismatch {
                rows: spec.sats_per_orbit / 2,
                cols: 2 * spec.num_orbits,
                planes: spec.num_orbits,
                slots: spec.sats_per_orbit,
            });
        }
        Ok(Self {
            rows: spec.sats_per_orbit / 2,
            cols: 2 * spec.num_orbits,
        })
    }

    pub fn cell_lat_deg(&self) -> f64 {
        180.0 / self.rows as f64
    }

    pub fn cell_lon_deg(&self) -> f64 {
        360.0 / self.cols as f64
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, zone: ZoneId) -> bool {
        zone.row < self.rows && zone.col < self.cols
    }

    pub fn index(&self, zone: ZoneId) -> usize {
        zone.row * self.cols + zone.col
    }

    pub fn zone_at(&self, index: usize) -> ZoneId {
        ZoneId {
            row: index / self.cols,
            col: index % self.cols,
        }
    }

    /// All zones in row-major order.
    pub fn zones(&self) -> impl Iterator<Item = ZoneId> + '_ {
        (0..self.len()).map(|i| self.zone_at(i))
    }

    pub fn center(&self, zone: ZoneId, altitude_m: f64) -> GeoPoint {
        GeoPoint {
            latitude_deg: -90.0 + (zone.row as f64 + 0.5) * self.cell_lat_deg(),
            longitude_deg: -180.0 + (zone.col as f64 + 0.5) * self.cell_lon_deg(),
            altitude_m,
        }
    }

    pub fn zone_of(&self, point: &GeoPoint) -> ZoneId {
        let row = ((point.latitude_deg + 90.0) / self.cell_lat_deg())
            .floor()
            .max(0.0) as usize;
        let col = ((point.longitude_deg + 180.0) / self.cell_lon_deg()).floor() as i64;
        ZoneId {
            row: row.min(self.rows - 1),
            col: col.rem_euclid(self.cols as i64) as usize,
        }
    }
}

pub fn zone_of(point: &GeoPoint, grid: &ZoneGrid) -> ZoneId {
    grid.zone_of(point)
}

/// Fixed bijection between zones and satellite lattice positions.
#[derive(Debug, Clone)]
pub struct Lattice {
    planes: usize,
    slots: usize,
    zone_of_sat: Vec<ZoneId>,
    sat_of_zone: Vec<SatelliteId>,
}

impl Lattice {
    pub fn new(spec: &ConstellationSpec, grid: &ZoneGrid) -> Result<Self, OrbitalError> {
        let expected = ZoneGrid::for_constellation(spec)?;
        if expected != *grid {
            return Err(OrbitalError::GridMismatch {
                rows: grid.rows,
                cols: grid.cols,
                planes: spec.num_orbits,
                slots: spec.sats_per_orbit,
            });
        }
        let (planes, slots) = (spec.num_orbits, spec.sats_per_orbit);
        let mut zone_of_sat = Vec::with_capacity(planes * slots);
        let mut sat_of_zone = vec![SatelliteId { plane: 0, slot: 0 }; grid.len()];
        for sat in spec.satellites() {
            // Argument of latitude plus 90°, in quarter slot spacings.
            let x = (4 * sat.slot + slots) % (4 * slots);
            let zone = if x < 2 * slots {
                // Ascending half: eastern copy of the plane, northbound.
                ZoneId {
                    row: x / 4,
                    col: sat.plane + planes,
                }
            } else {
                let quarters = 4 * slots - x;
                ZoneId {
                    row: quarters.div_ceil(4) - 1,
                    col: sat.plane,
                }
            };
            sat_of_zone[grid.index(zone)] = sat;
            zone_of_sat.push(zone);
        }
        Ok(Self {
            planes,
            slots,
            zone_of_sat,
            sat_of_zone,
        })
    }

    pub fn zone_of_sat(&self, sat: SatelliteId) -> ZoneId {
        self.zone_of_sat[sat.plane * self.slots + sat.slot]
    }

    pub fn sat_of_zone(&self, grid: &ZoneGrid, zone: ZoneId) -> SatelliteId {
        self.sat_of_zone[grid.index(zone)]
    }

    /// Lattice links as satellite pairs. Seam links join plane `N_o - 1` back
    /// to plane 0 and only exist for three or more planes.
    pub fn links(&self, include_seam: bool) -> Vec<LatticeLink> {
        let mut links = Vec::new();
        for plane in 0..self.planes {
            if self.slots >= 2 {
                let ring = if self.slots == 2 { 1 } else { self.slots };
                for slot in 0..ring {
                    links.push(LatticeLink {
                        a: SatelliteId { plane, slot },
                        b: SatelliteId {
                            plane,
                            slot: (slot + 1) % self.slots,
                        },
                        kind: LinkKind::IntraPlane,
                    });
                }
            }
            let next = plane + 1;
            let seam = next == self.planes;
            if self.planes < 2 || (seam && (self.planes < 3 || !include_seam)) {
                continue;
            }
            for slot in 0..self.slots {
                links.push(LatticeLink {
                    a: SatelliteId { plane, slot },
                    b: SatelliteId {
                        plane: next % self.planes,
                        slot,
                    },
                    kind: if seam {
                        LinkKind::Seam
                    } else {
                        LinkKind::InterPlane
                    },
                });
            }
        }
        links
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    IntraPlane,
    InterPlane,
    Seam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeLink {
    pub a: SatelliteId,
    pub b: SatelliteId,
    pub kind: LinkKind,
}

// Dot products closer than this count as equidistant.
const TIE_EPS: f64 = 1e-12;

/// Maps every zone to the satellite nearest its centre at time `t`.
/// Ties go to the lowest `(plane, slot)`.
pub fn vn_association(
    spec: &ConstellationSpec,
    grid: &ZoneGrid,
    t: f64,
) -> BTreeMap<ZoneId, SatelliteId> {
    let positions: Vec<GeoPoint> = spec
        .satellites()
        .map(|s| satellite_position(spec, s, t))
        .collect();
    associate(spec, grid, &positions)
}

fn associate(
    spec: &ConstellationSpec,
    grid: &ZoneGrid,
    positions: &[GeoPoint],
) -> BTreeMap<ZoneId, SatelliteId> {
    let units: Vec<[f64; 3]> = positions.iter().map(GeoPoint::unit).collect();
    grid.zones()
        .map(|zone| {
            let centre = grid.center(zone, 0.0).unit();
            let mut best = 0;
            let mut best_dot = f64::NEG_INFINITY;
            for (i, u) in units.iter().enumerate() {
                let d = dot(centre, *u);
                if d > best_dot + TIE_EPS {
                    best = i;
                    best_dot = d;
                }
            }
            (zone, spec.sat_at(best))
        })
        .collect()
}

/// The quasi-static VN mesh at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time_s: f64,
    pub grid: ZoneGrid,
    pub vn_nodes: Vec<ZoneId>,
    pub vn_to_sat: BTreeMap<ZoneId, SatelliteId>,
    /// Undirected VN pairs, stored with the smaller zone first.
    pub isl_edges: BTreeSet<(ZoneId, ZoneId)>,
    pub sat_positions: BTreeMap<SatelliteId, GeoPoint>,
    earth_radius_m: f64,
    vn_positions: Vec<GeoPoint>,
}

impl Snapshot {
    /// Assembles a snapshot from explicit parts, checking the mesh invariants.
    pub fn from_parts(
        time_s: f64,
        grid: ZoneGrid,
        vn_to_sat: BTreeMap<ZoneId, SatelliteId>,
        edges: impl IntoIterator<Item = (ZoneId, ZoneId)>,
        sat_positions: BTreeMap<SatelliteId, GeoPoint>,
        earth_radius_m: f64,
    ) -> Result<Self, OrbitalError> {
        let mut isl_edges = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(OrbitalError::InvalidSnapshot(format!("self loop at {a}")));
            }
            for z in [a, b] {
                if !vn_to_sat.contains_key(&z) {
                    return Err(OrbitalError::InvalidSnapshot(format!(
                        "edge endpoint {z} is not a VN"
                    )));
                }
            }
            isl_edges.insert(if a < b { (a, b) } else { (b, a) });
        }
        let mut vn_positions = Vec::with_capacity(grid.len());
        let mut vn_nodes = Vec::with_capacity(vn_to_sat.len());
        for (&zone, sat) in &vn_to_sat {
            if !grid.contains(zone) {
                return Err(OrbitalError::UnknownZone {
                    row: zone.row,
                    col: zone.col,
                });
            }
            vn_nodes.push(zone);
            let pos = sat_positions
                .get(sat)
                .ok_or_else(|| OrbitalError::InvalidSnapshot(format!("no position for {sat}")))?;
            vn_positions.push(*pos);
        }
        let snapshot = Self {
            time_s,
            grid,
            vn_nodes,
            vn_to_sat,
            isl_edges,
            sat_positions,
            earth_radius_m,
            vn_positions,
        };
        if let Some(&z) = snapshot.vn_nodes.iter().find(|&&z| snapshot.degree(z) > 4) {
            return Err(OrbitalError::InvalidSnapshot(format!(
                "{z} has more than four ISLs"
            )));
        }
        Ok(snapshot)
    }

    pub fn earth_radius_m(&self) -> f64 {
        self.earth_radius_m
    }

    pub fn contains(&self, zone: ZoneId) -> bool {
        self.vn_to_sat.contains_key(&zone)
    }

    /// Position of the satellite carrying a VN.
    pub fn vn_position(&self, zone: ZoneId) -> Option<&GeoPoint> {
        self.vn_nodes
            .binary_search(&zone)
            .ok()
            .map(|i| &self.vn_positions[i])
    }

    pub fn vn_distance_m(&self, a: ZoneId, b: ZoneId) -> Option<f64> {
        Some(distance_m(
            self.vn_position(a)?,
            self.vn_position(b)?,
            self.earth_radius_m,
        ))
    }

    pub fn has_edge(&self, a: ZoneId, b: ZoneId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.isl_edges.contains(&key)
    }

    pub fn degree(&self, zone: ZoneId) -> usize {
        self.isl_edges
            .iter()
            .filter(|(a, b)| *a == zone || *b == zone)
            .count()
    }
}

/// Builds the VN mesh at time `t`.
///
/// Links follow the satellite lattice mapped onto zones; the seam between
/// plane 0 and plane `N_o - 1` is always off, and inter-plane links are off
/// when the satellite carrying either VN is beyond the polar mask.
pub fn build_snapshot(
    spec: &ConstellationSpec,
    grid: &ZoneGrid,
    t: f64,
) -> Result<Snapshot, OrbitalError> {
    spec.validate()?;
    let lattice = Lattice::new(spec, grid)?;
    let positions: Vec<GeoPoint> = spec
        .satellites()
        .map(|s| satellite_position(spec, s, t))
        .collect();
    let vn_to_sat = associate(spec, grid, &positions);
    let carrier_lat = |zone: ZoneId| {
        positions[spec.sat_index(vn_to_sat[&zone])]
            .latitude_deg
            .abs()
    };
    let edges: Vec<(ZoneId, ZoneId)> = lattice
        .links(false)
        .into_iter()
        .filter_map(|link| {
            let (za, zb) = (lattice.zone_of_sat(link.a), lattice.zone_of_sat(link.b));
            let polar = link.kind != LinkKind::IntraPlane
                && (carrier_lat(za) > spec.polar_mask_deg || carrier_lat(zb) > spec.polar_mask_deg);
            (!polar).then_some((za, zb))
        })
        .collect();
    let sat_positions = spec.satellites().zip(positions.iter().copied()).collect();
    Snapshot::from_parts(
        t,
        *grid,
        vn_to_sat,
        edges,
        sat_positions,
        spec.earth_radius_m,
    )
}

/// Where a task endpoint sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observer {
    /// A ground station; sees satellites above the elevation mask.
    Ground(GeoPoint),
    /// A satellite outside the constellation; reaches any unobstructed
    /// satellite within the maximum slant range.
    Space(GeoPoint),
}

impl Observer {
    pub fn point(&self) -> &GeoPoint {
        match self {
            Observer::Ground(p) | Observer::Space(p) => p,
        }
    }
}

/// VNs whose carrying satellite is visible from `observer`.
pub fn visible_nodes(
    observer: &Observer,
    snapshot: &Snapshot,
    spec: &ConstellationSpec,
) -> BTreeSet<ZoneId> {
    let r_e = snapshot.earth_radius_m;
    snapshot
        .vn_nodes
        .iter()
        .zip(&snapshot.vn_positions)
        .filter(|(_, sat)| match observer {
            Observer::Ground(p) => elevation_deg(p, sat, r_e) >= spec.elevation_min_deg,
            Observer::Space(p) => {
                distance_m(p, sat, r_e) <= spec.max_slant_range_m && line_of_sight(p, sat, r_e)
            }
        })
        .map(|(z, _)| *z)
        .collect()
}
