//! Time-indexed capacity ledgers and the delay model.
//!
//! Every resource serves one subtask at a time at its full rate. A request
//! takes the earliest idle gap at or after its ready time that is long
//! enough for the whole job, so waiting, transmission and computation delays
//! all come out of the same gap search.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::orbital::{ZoneGrid, ZoneId};

#[derive(Debug, Error, PartialEq)]
pub enum ResourceError {
    #[error("unknown resource {0}")]
    UnknownResource(ResourceId),
    #[error("demand must be positive, got {0}")]
    InvalidDemand(f64),
    #[error("capacity must be positive, got {0}")]
    InvalidCapacity(f64),
    #[error("reservation [{start}, {end}) on {resource} overlaps an existing one")]
    Overlap {
        resource: ResourceId,
        start: f64,
        end: f64,
    },
    #[error("no matching reservation [{start}, {end}) on {resource}")]
    NotReserved {
        resource: ResourceId,
        start: f64,
        end: f64,
    },
}

/// A physical resource. ISL endpoints are stored in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourceId {
    Compute(ZoneId),
    Isl(ZoneId, ZoneId),
    /// Satellite-to-ground link from a VN to a ground station zone.
    Sgl {
        vn: ZoneId,
        ground: ZoneId,
    },
    /// Link from a source satellite over `source` up to a VN.
    Uplink {
        source: ZoneId,
        vn: ZoneId,
    },
}

impl ResourceId {
    pub fn isl(a: ZoneId, b: ZoneId) -> Self {
        if a <= b {
            ResourceId::Isl(a, b)
        } else {
            ResourceId::Isl(b, a)
        }
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceId::Compute(z) => write!(f, "compute@{z}"),
            ResourceId::Isl(a, b) => write!(f, "isl {a}-{b}"),
            ResourceId::Sgl { vn, ground } => write!(f, "sgl {vn}->{ground}"),
            ResourceId::Uplink { source, vn } => write!(f, "uplink {source}->{vn}"),
        }
    }
}

/// Identifies the subtask holding a reservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Owner {
    pub task: u64,
    pub subtask: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservation {
    pub resource: ResourceId,
    pub start_s: f64,
    pub end_s: f64,
    pub owner: Owner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Busy {
    start: f64,
    end: f64,
    owner: Owner,
}

/// Reserved half-open intervals on a single-channel resource.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySchedule {
    capacity: f64,
    busy: Vec<Busy>,
}

impl CapacitySchedule {
    pub fn new(capacity: f64) -> Result<Self, ResourceError> {
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(ResourceError::InvalidCapacity(capacity));
        }
        Ok(Self {
            capacity,
            busy: Vec::new(),
        })
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.busy.iter().map(|b| (b.start, b.end))
    }

    pub fn len(&self) -> usize {
        self.busy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.busy.is_empty()
    }

    /// Earliest `(start, finish)` serving `demand` no sooner than `earliest_s`.
    pub fn solve(&self, demand: f64, earliest_s: f64) -> Result<(f64, f64), ResourceError> {
        if !(demand > 0.0 && demand.is_finite()) {
            return Err(ResourceError::InvalidDemand(demand));
        }
        let duration = demand / self.capacity;
        let mut start = earliest_s;
        let first = self.busy.partition_point(|b| b.end <= earliest_s);
        for b in &self.busy[first..] {
            if start + duration <= b.start {
                break;
            }
            start = start.max(b.end);
        }
        Ok((start, start + duration))
    }

    fn insert(
        &mut self,
        resource: ResourceId,
        start: f64,
        end: f64,
        owner: Owner,
    ) -> Result<(), ResourceError> {
        let at = self.busy.partition_point(|b| b.start < start);
        let clash_prev = at > 0 && self.busy[at - 1].end > start;
        let clash_next = at < self.busy.len() && self.busy[at].start < end;
        if end.partial_cmp(&start) != Some(std::cmp::Ordering::Greater) || clash_prev || clash_next
        {
            return Err(ResourceError::Overlap {
                resource,
                start,
                end,
            });
        }
        self.busy.insert(at, Busy { start, end, owner });
        Ok(())
    }

    fn remove(
        &mut self,
        resource: ResourceId,
        start: f64,
        end: f64,
        owner: Owner,
    ) -> Result<(), ResourceError> {
        let at = self.busy.partition_point(|b| b.start < start);
        match self.busy.get(at) {
            Some(b) if b.start == start && b.end == end && b.owner == owner => {
                self.busy.remove(at);
                Ok(())
            }
            _ => Err(ResourceError::NotReserved {
                resource,
                start,
                end,
            }),
        }
    }
}

pub fn solve_duration(
    schedule: &CapacitySchedule,
    demand: f64,
    earliest_s: f64,
) -> Result<(f64, f64), ResourceError> {
    schedule.solve(demand, earliest_s)
}

/// Service rates: GFLOPS for compute, Gbps for links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacities {
    pub sat_gflops: f64,
    pub isl_gbps: f64,
    pub sgl_gbps: f64,
    pub uplink_gbps: f64,
}

impl Default for Capacities {
    fn default() -> Self {
        Self {
            sat_gflops: 100.0,
            isl_gbps: 5.0,
            sgl_gbps: 0.2,
            uplink_gbps: 5.0,
        }
    }
}

impl Capacities {
    /// Service rate of a resource in demand units per second
    /// (GFLO/s for compute, bit/s for links).
    pub fn rate(&self, resource: &ResourceId) -> f64 {
        match resource {
            ResourceId::Compute(_) => self.sat_gflops,
            ResourceId::Isl(..) => self.isl_gbps * 1e9,
            ResourceId::Sgl { .. } => self.sgl_gbps * 1e9,
            ResourceId::Uplink { .. } => self.uplink_gbps * 1e9,
        }
    }
}

/// Availability of every compute node and link in the network.
///
/// Schedules are created on first use; a resource counts as known when its
/// zones are on the grid and, for ISLs, the pair was registered.
#[derive(Debug, Clone)]
pub struct ResourceLedger {
    grid: ZoneGrid,
    capacities: Capacities,
    isl_pairs: HashSet<(ZoneId, ZoneId)>,
    schedules: HashMap<ResourceId, CapacitySchedule>,
}

impl ResourceLedger {
    pub fn new(
        grid: ZoneGrid,
        capacities: Capacities,
        isl_pairs: impl IntoIterator<Item = (ZoneId, ZoneId)>,
    ) -> Result<Self, ResourceError> {
        for c in [
            capacities.sat_gflops,
            capacities.isl_gbps,
            capacities.sgl_gbps,
            capacities.uplink_gbps,
        ] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(ResourceError::InvalidCapacity(c));
            }
        }
        let isl_pairs = isl_pairs
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        Ok(Self {
            grid,
            capacities,
            isl_pairs,
            schedules: HashMap::new(),
        })
    }

    pub fn capacities(&self) -> &Capacities {
        &self.capacities
    }

    pub fn is_known(&self, resource: &ResourceId) -> bool {
        let on_grid = |z: &ZoneId| self.grid.contains(*z);
        match resource {
            ResourceId::Compute(z) => on_grid(z),
            ResourceId::Isl(a, b) => self.isl_pairs.contains(&(*a, *b)),
            ResourceId::Sgl { vn, ground } => on_grid(vn) && on_grid(ground),
            ResourceId::Uplink { source, vn } => on_grid(source) && on_grid(vn),
        }
    }

    fn check(&self, resource: &ResourceId) -> Result<(), ResourceError> {
        if self.is_known(resource) {
            Ok(())
        } else {
            Err(ResourceError::UnknownResource(*resource))
        }
    }

    /// The schedule of a resource; `None` while nothing was ever reserved.
    pub fn schedule(&self, resource: &ResourceId) -> Option<&CapacitySchedule> {
        self.schedules.get(resource)
    }

    /// Earliest `(start, finish)` for `demand` on a resource.
    pub fn solve(
        &self,
        resource: &ResourceId,
        demand: f64,
        earliest_s: f64,
    ) -> Result<(f64, f64), ResourceError> {
        self.check(resource)?;
        match self.schedules.get(resource) {
            Some(s) => s.solve(demand, earliest_s),
            None => {
                if !(demand > 0.0 && demand.is_finite()) {
                    return Err(ResourceError::InvalidDemand(demand));
                }
                Ok((
                    earliest_s,
                    earliest_s + demand / self.capacities.rate(resource),
                ))
            }
        }
    }

    /// A tentative reservation for `demand`; nothing is committed.
    pub fn propose(
        &self,
        resource: ResourceId,
        demand: f64,
        earliest_s: f64,
        owner: Owner,
    ) -> Result<Reservation, ResourceError> {
        let (start_s, end_s) = self.solve(&resource, demand, earliest_s)?;
        Ok(Reservation {
            resource,
            start_s,
            end_s,
            owner,
        })
    }

    pub fn commit(&mut self, r: &Reservation) -> Result<(), ResourceError> {
        self.check(&r.resource)?;
        let rate = self.capacities.rate(&r.resource);
        let schedule = self
            .schedules
            .entry(r.resource)
            .or_insert(CapacitySchedule::new(rate)?);
        let result = schedule.insert(r.resource, r.start_s, r.end_s, r.owner);
        if schedule.is_empty() {
            self.schedules.remove(&r.resource);
        }
        result
    }

    pub fn release(&mut self, r: &Reservation) -> Result<(), ResourceError> {
        let missing = ResourceError::NotReserved {
            resource: r.resource,
            start: r.start_s,
            end: r.end_s,
        };
        let schedule = self.schedules.get_mut(&r.resource).ok_or(missing)?;
        schedule.remove(r.resource, r.start_s, r.end_s, r.owner)?;
        if schedule.is_empty() {
            self.schedules.remove(&r.resource);
        }
        Ok(())
    }

    /// Total number of committed reservations.
    pub fn reservation_count(&self) -> usize {
        self.schedules.values().map(CapacitySchedule::len).sum()
    }

    /// Whether two ledgers hold exactly the same reservations.
    pub fn same_reservations(&self, other: &Self) -> bool {
        self.schedules == other.schedules
    }
}

/// Transmission delay (waiting included) of `volume_bits` over a link.
pub fn transmission_delay(
    ledger: &ResourceLedger,
    link: ResourceId,
    volume_bits: f64,
    earliest_s: f64,
    owner: Owner,
) -> Result<(f64, Reservation), ResourceError> {
    if matches!(link, ResourceId::Compute(_)) {
        return Err(ResourceError::UnknownResource(link));
    }
    let r = ledger.propose(link, volume_bits, earliest_s, owner)?;
    Ok((r.end_s - earliest_s, r))
}

/// Where a subtask gets computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComputeNode {
    Satellite(ZoneId),
    /// Ground servers are fast enough that computation time is negligible.
    Ground,
}

/// Computation delay (waiting included). Ground computation is free and
/// reserves nothing.
pub fn computation_delay(
    ledger: &ResourceLedger,
    node: ComputeNode,
    flop_g: f64,
    earliest_s: f64,
    owner: Owner,
) -> Result<(f64, Option<Reservation>), ResourceError> {
    match node {
        ComputeNode::Ground => Ok((0.0, None)),
        ComputeNode::Satellite(zone) => {
            let r = ledger.propose(ResourceId::Compute(zone), flop_g, earliest_s, owner)?;
            Ok((r.end_s - earliest_s, Some(r)))
        }
    }
}

pub fn propagation_delay(distance_m: f64, light_speed_m_s: f64) -> f64 {
    distance_m / light_speed_m_s
}
