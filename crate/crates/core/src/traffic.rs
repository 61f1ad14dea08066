//! Zone connection indices, Poisson task arrivals and task instantiation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::Deserialize;
use thiserror::Error;

use crate::orbital::{ZoneGrid, ZoneId};

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("cannot read connection index: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed connection index: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing zone {0} in connection index")]
    MissingZone(ZoneId),
    #[error("duplicate zone {0} in connection index")]
    DuplicateZone(ZoneId),
    #[error("zone ({row}, {col}) is outside the {rows}x{cols} grid")]
    ZoneOutOfGrid {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("connection index of {zone} must be a non-negative number, got {eta}")]
    NegativeIndex { zone: ZoneId, eta: f64 },
    #[error("connection indices sum to zero")]
    ZeroMass,
    #[error("invalid hotspot parameters: {0}")]
    InvalidHotspots(String),
    #[error("invalid traffic parameter: {0}")]
    InvalidParameter(String),
}

/// Connection index η per zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneIndexMap {
    grid: ZoneGrid,
    eta: Vec<f64>,
}

impl ZoneIndexMap {
    pub fn from_map(grid: ZoneGrid, map: &BTreeMap<ZoneId, f64>) -> Result<Self, TrafficError> {
        let mut eta = vec![0.0; grid.len()];
        for zone in grid.zones() {
            let value = *map.get(&zone).ok_or(TrafficError::MissingZone(zone))?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(TrafficError::NegativeIndex { zone, eta: value });
            }
            eta[grid.index(zone)] = value;
        }
        if let Some(zone) = map.keys().find(|z| !grid.contains(**z)) {
            return Err(TrafficError::ZoneOutOfGrid {
                row: zone.row,
                col: zone.col,
                rows: grid.rows,
                cols: grid.cols,
            });
        }
        Ok(Self { grid, eta })
    }

    pub fn grid(&self) -> &ZoneGrid {
        &self.grid
    }

    pub fn get(&self, zone: ZoneId) -> f64 {
        self.eta[self.grid.index(zone)]
    }

    pub fn total(&self) -> f64 {
        self.eta.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ZoneId, f64)> + '_ {
        self.grid.zones().map(|z| (z, self.get(z)))
    }
}

#[derive(Debug, Deserialize)]
struct IndexRow {
    row: usize,
    col: usize,
    eta: f64,
}

/// Reads a `row,col,eta` CSV with one row per zone.
pub fn load_connection_index(
    path: impl AsRef<Path>,
    grid: &ZoneGrid,
) -> Result<ZoneIndexMap, TrafficError> {
    let file = std::fs::File::open(path)?;
    read_connection_index(file, grid)
}

pub fn read_connection_index(
    reader: impl std::io::Read,
    grid: &ZoneGrid,
) -> Result<ZoneIndexMap, TrafficError> {
    let mut map = BTreeMap::new();
    for record in csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
        .deserialize()
    {
        let IndexRow { row, col, eta } = record?;
        let zone = ZoneId { row, col };
        if !grid.contains(zone) {
            return Err(TrafficError::ZoneOutOfGrid {
                row,
                col,
                rows: grid.rows,
                cols: grid.cols,
            });
        }
        if eta < 0.0 || !eta.is_finite() {
            return Err(TrafficError::NegativeIndex { zone, eta });
        }
        if map.insert(zone, eta).is_some() {
            return Err(TrafficError::DuplicateZone(zone));
        }
    }
    ZoneIndexMap::from_map(*grid, &map)
}

pub fn write_connection_index(
    eta: &ZoneIndexMap,
    writer: impl std::io::Write,
) -> Result<(), TrafficError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["row", "col", "eta"])?;
    for (zone, value) in eta.iter() {
        out.write_record([
            zone.row.to_string(),
            zone.col.to_string(),
            value.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Synthetic stand-ins for measured connection data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticIndex {
    Uniform,
    /// `count` randomly chosen zones share `fraction` of the total mass
    /// equally; the rest is spread evenly over the other zones.
    Hotspots {
        count: usize,
        fraction: f64,
    },
}

pub fn synth_connection_index(
    kind: SyntheticIndex,
    grid: &ZoneGrid,
    seed: u64,
) -> Result<ZoneIndexMap, TrafficError> {
    let eta = match kind {
        SyntheticIndex::Uniform => vec![1.0; grid.len()],
        SyntheticIndex::Hotspots { count, fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(TrafficError::InvalidHotspots(format!(
                    "fraction {fraction} not in (0, 1)"
                )));
            }
            if count == 0 || count >= grid.len() {
                return Err(TrafficError::InvalidHotspots(format!(
                    "hotspot count {count} must be in [1, {})",
                    grid.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(HOTSPOT_STREAM);
            let hot: BTreeSet<usize> = sample(&mut rng, grid.len(), count).into_iter().collect();
            let cold = (1.0 - fraction) / (grid.len() - count) as f64;
            let warm = fraction / count as f64;
            (0..grid.len())
                .map(|i| if hot.contains(&i) { warm } else { cold })
                .collect()
        }
    };
    Ok(ZoneIndexMap { grid: *grid, eta })
}

/// Zones holding the largest connection index, in zone order.
pub fn hottest_zones(eta: &ZoneIndexMap) -> Vec<ZoneId> {
    let max = eta.eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    eta.iter()
        .filter(|(_, v)| *v == max)
        .map(|(z, _)| z)
        .collect()
}

/// Per-zone arrival rate `λ_i = load · η_i / Σ η`.
pub fn arrival_rates(load: f64, eta: &ZoneIndexMap) -> Result<BTreeMap<ZoneId, f64>, TrafficError> {
    if !(load >= 0.0 && load.is_finite()) {
        return Err(TrafficError::InvalidParameter(format!(
            "load {load} must be non-negative"
        )));
    }
    let total = eta.total();
    if total.is_nan() || total <= 0.0 {
        return Err(TrafficError::ZeroMass);
    }
    Ok(eta.iter().map(|(z, v)| (z, load * v / total)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subtask {
    /// Computational requirement in GFLO.
    pub flop_g: f64,
    /// Raw data volume in GB.
    pub volume_gb: f64,
}

impl Subtask {
    pub fn volume_bits(&self) -> f64 {
        self.volume_gb * 8e9
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: u64,
    pub source_zone: ZoneId,
    pub dest_zone: ZoneId,
    pub num_subtasks: usize,
    pub gen_time_s: f64,
    pub threshold_s: f64,
    pub subtasks: Vec<Subtask>,
}

/// Values shared by every generated task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskTemplate {
    pub subtasks: usize,
    pub flop_g: f64,
    pub volume_gb: f64,
    pub threshold_s: f64,
}

impl Default for TaskTemplate {
    fn default() -> Self {
        Self {
            subtasks: 2,
            flop_g: 100.0,
            volume_gb: 0.1,
            threshold_s: 300.0,
        }
    }
}

impl TaskTemplate {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if self.subtasks == 0 {
            return Err(TrafficError::InvalidParameter(
                "subtasks per task must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("subtask_gflo", self.flop_g),
            ("subtask_gb", self.volume_gb),
            ("threshold_s", self.threshold_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TrafficError::InvalidParameter(format!(
                    "{name} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// How a task's destination zone is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum DestSampler {
    /// Draw from η, independent of the source, never the source zone.
    Eta(ZoneIndexMap),
    /// Destination is the source zone.
    SameZone,
}

// Stream 0 carries hotspot placement; zone streams start after it.
const HOTSPOT_STREAM: u64 = 0;
const ZONE_STREAM_BASE: u64 = 1;

/// Poisson arrivals per zone over `[0, duration_s)`, merged in time order.
///
/// Each zone draws from its own ChaCha stream of `seed`, so a zone's
/// arrivals do not depend on the other zones' rates.
pub fn generate_tasks(
    rates: &BTreeMap<ZoneId, f64>,
    duration_s: f64,
    seed: u64,
    template: &TaskTemplate,
    dest: &DestSampler,
) -> Result<Vec<Task>, TrafficError> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(TrafficError::InvalidParameter(format!(
            "duration {duration_s} must be positive"
        )));
    }
    template.validate()?;
    let mut arrivals: Vec<(f64, usize, ZoneId, ZoneId)> = Vec::new();
    for (order, (&zone, &rate)) in rates.iter().enumerate() {
        if rate <= 0.0 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ZONE_STREAM_BASE + order as u64);
        let gaps = Exp::new(rate).map_err(|e| TrafficError::InvalidParameter(e.to_string()))?;
        let picker = DestPicker::new(dest, zone)?;
        let mut t = gaps.sample(&mut rng);
        while t < duration_s {
            let to = picker.pick(&mut rng);
            arrivals.push((t, order, zone, to));
            t += gaps.sample(&mut rng);
        }
    }
    arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(arrivals
        .into_iter()
        .enumerate()
        .map(|(id, (t, _, from, to))| Task {
            id: id as u64,
            source_zone: from,
            dest_zone: to,
            num_subtasks: template.subtasks,
            gen_time_s: t,
            threshold_s: template.threshold_s,
            subtasks: vec![
                Subtask {
                    flop_g: template.flop_g,
                    volume_gb: template.volume_gb,
                };
                template.subtasks
            ],
        })
        .collect())
}

enum DestPicker {
    Fixed(ZoneId),
    Weighted(Vec<ZoneId>, WeightedIndex<f64>),
    Uniform(Vec<ZoneId>),
}

impl DestPicker {
    fn new(sampler: &DestSampler, source: ZoneId) -> Result<Self, TrafficError> {
        let eta = match sampler {
            DestSampler::SameZone => return Ok(Self::Fixed(source)),
            DestSampler::Eta(eta) => eta,
        };
        let (zones, weights): (Vec<ZoneId>, Vec<f64>) =
            eta.iter().filter(|(z, _)| *z != source).unzip();
        if zones.is_empty() {
            return Ok(Self::Fixed(source));
        }
        match WeightedIndex::new(&weights) {
            Ok(index) => Ok(Self::Weighted(zones, index)),
            // Every other zone has zero mass.
            Err(_) => Ok(Self::Uniform(zones)),
        }
    }

    fn pick(&self, rng: &mut impl Rng) -> ZoneId {
        match self {
            Self::Fixed(z) => *z,
            Self::Weighted(zones, index) => zones[index.sample(rng)],
            Self::Uniform(zones) => zones[rng.random_range(0..zones.len())],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> ZoneIndexMap {
        synth_connection_index(SyntheticIndex::Uniform, &ZoneGrid::default(), 0).unwrap()
    }

    fn csv_for(grid: &ZoneGrid, skip: usize, eta_of: impl Fn(usize) -> f64) -> String {
        let mut s = String::from("row,col,eta\n");
        for (i, z) in grid.zones().enumerate().skip(skip) {
            s.push_str(&format!("{},{},{}\n", z.row, z.col, eta_of(i)));
        }
        s
    }

    #[test]
    fn load_uniform_file() {
        let grid = ZoneGrid::default();
        let map = read_connection_index(csv_for(&grid, 0, |_| 1.0).as_bytes(), &grid).unwrap();
        assert!(map.iter().all(|(_, v)| v == 1.0));
        assert_eq!(map, uniform());
    }

    #[test]
    fn load_rejects_missing_duplicate_and_negative() {
        let grid = ZoneGrid::default();
        let missing = read_connection_index(csv_for(&grid, 1, |_| 1.0).as_bytes(), &grid);
        assert!(matches!(missing, Err(TrafficError::MissingZone(_))));
        let negative = read_connection_index(
            csv_for(&grid, 0, |i| if i == 7 { -1.0 } else { 1.0 }).as_bytes(),
            &grid,
        );
        assert!(matches!(negative, Err(TrafficError::NegativeIndex { .. })));
        let mut dup = csv_for(&grid, 0, |_| 1.0);
        dup.push_str("0,0,1\n");
        assert!(matches!(
            read_connection_index(dup.as_bytes(), &grid),
            Err(TrafficError::DuplicateZone(_))
        ));
        let outside = format!("{}9,0,1\n", csv_for(&grid, 0, |_| 1.0));
        assert!(matches!(
            read_connection_index(outside.as_bytes(), &grid),
            Err(TrafficError::ZoneOutOfGrid { .. })
        ));
    }

    #[test]
    fn write_then_read() {
        let grid = ZoneGrid::default();
        let eta = synth_connection_index(
            SyntheticIndex::Hotspots {
                count: 3,
                fraction: 0.5,
            },
            &grid,
            9,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_connection_index(&eta, &mut buf).unwrap();
        assert_eq!(read_connection_index(buf.as_slice(), &grid).unwrap(), eta);
    }

    #[test]
    fn hotspot_mass() {
        let grid = ZoneGrid::default();
        let eta = synth_connection_index(
            SyntheticIndex::Hotspots {
                count: 4,
                fraction: 0.8,
            },
            &grid,
            3,
        )
        .unwrap();
        let hot: Vec<f64> = eta.iter().map(|(_, v)| v).filter(|v| *v > 0.1).collect();
        assert_eq!(hot, vec![0.2; 4]);
        let cold = eta.iter().filter(|(_, v)| *v < 0.1).count();
        assert_eq!(cold, 124);
        assert!(eta
            .iter()
            .filter(|(_, v)| *v < 0.1)
            .all(|(_, v)| (v - 0.2 / 124.0).abs() < 1e-15));
        assert!((eta.total() - 1.0).abs() < 1e-12);
        assert_eq!(hottest_zones(&eta).len(), 4);
        let again = synth_connection_index(
            SyntheticIndex::Hotspots {
                count: 4,
                fraction: 0.8,
            },
            &grid,
            3,
        )
        .unwrap();
        assert_eq!(eta, again);
    }

    #[test]
    fn hotspot_fraction_must_be_open_unit() {
        let grid = ZoneGrid::default();
        for f in [0.0, 1.0, 1.5] {
            let r = synth_connection_index(
                SyntheticIndex::Hotspots {
                    count: 4,
                    fraction: f,
                },
                &grid,
                0,
            );
            assert!(matches!(r, Err(TrafficError::InvalidHotspots(_))));
        }
    }

    #[test]
    fn rates_follow_eta() {
        let rates = arrival_rates(200.0, &uniform()).unwrap();
        assert!(rates.values().all(|r| *r == 1.5625));
        let grid = ZoneGrid { rows: 1, cols: 2 };
        let mut m = BTreeMap::new();
        m.insert(ZoneId { row: 0, col: 0 }, 3.0);
        m.insert(ZoneId { row: 0, col: 1 }, 1.0);
        let two = ZoneIndexMap::from_map(grid, &m).unwrap();
        let rates: Vec<f64> = arrival_rates(200.0, &two).unwrap().into_values().collect();
        assert_eq!(rates, vec![150.0, 50.0]);
        assert!(arrival_rates(0.0, &uniform())
            .unwrap()
            .values()
            .all(|r| *r == 0.0));
        let zero = ZoneIndexMap::from_map(grid, &m.keys().map(|z| (*z, 0.0)).collect()).unwrap();
        assert!(matches!(
            arrival_rates(1.0, &zero),
            Err(TrafficError::ZeroMass)
        ));
    }

    #[test]
    fn zero_rates_give_no_tasks() {
        let rates = arrival_rates(0.0, &uniform()).unwrap();
        let tasks = generate_tasks(
            &rates,
            10.0,
            1,
            &TaskTemplate::default(),
            &DestSampler::SameZone,
        )
        .unwrap();
        assert!(tasks.is_empty());
    }

    #[test]
    fn tasks_carry_template_and_are_ordered() {
        let eta = uniform();
        let rates = arrival_rates(200.0, &eta).unwrap();
        let template = TaskTemplate::default();
        let tasks = generate_tasks(&rates, 10.0, 5, &template, &DestSampler::Eta(eta)).unwrap();
        assert!(!tasks.is_empty());
        for (i, task) in tasks.iter().enumerate() {
            assert_eq!(task.id, i as u64);
            assert_eq!(task.num_subtasks, 2);
            assert_eq!(task.threshold_s, 300.0);
            assert_eq!(
                task.subtasks,
                vec![
                    Subtask {
                        flop_g: 100.0,
                        volume_gb: 0.1
                    };
                    2
                ]
            );
            assert_ne!(task.source_zone, task.dest_zone);
            assert!((0.0..10.0).contains(&task.gen_time_s));
        }
        assert!(tasks.windows(2).all(|w| w[0].gen_time_s <= w[1].gen_time_s));
    }

    #[test]
    fn same_zone_sampler() {
        let rates = arrival_rates(50.0, &uniform()).unwrap();
        let tasks = generate_tasks(
            &rates,
            1.0,
            2,
            &TaskTemplate::default(),
            &DestSampler::SameZone,
        )
        .unwrap();
        assert!(tasks.iter().all(|t| t.source_zone == t.dest_zone));
    }

    #[test]
    fn generation_is_deterministic() {
        let eta = uniform();
        let rates = arrival_rates(100.0, &eta).unwrap();
        let a = generate_tasks(
            &rates,
            5.0,
            77,
            &TaskTemplate::default(),
            &DestSampler::Eta(eta.clone()),
        )
        .unwrap();
        let b = generate_tasks(
            &rates,
            5.0,
            77,
            &TaskTemplate::default(),
            &DestSampler::Eta(eta),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_duration_is_rejected() {
        let rates = arrival_rates(1.0, &uniform()).unwrap();
        assert!(generate_tasks(
            &rates,
            0.0,
            0,
            &TaskTemplate::default(),
            &DestSampler::SameZone
        )
        .is_err());
    }

    #[test]
    fn volume_in_bits() {
        let s = Subtask {
            flop_g: 100.0,
            volume_gb: 0.1,
        };
        assert_eq!(s.volume_bits(), 0.8e9);
    }
}
