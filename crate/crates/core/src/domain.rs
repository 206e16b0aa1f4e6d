//! Geometry oracles for bounded open domains.
//!
//! A [`DomainSpec`] answers open-set membership and the clearance
//! `dist(Q, ∂D)` of closed lattice cubes. Built-in regions compute the
//! clearance exactly; [`ImplicitRegion`] takes a user-supplied 1-Lipschitz
//! lower bound on the distance to the boundary and is conservative.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Segment, Vec2};
use crate::grid::CubeIndex;

pub type Point = Vec<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("point has dimension {got}, domain has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain parameter: {0}")]
    InvalidParameter(String),
    #[error("channels {first} and {second} overlap: {upper} >= {next_lower}")]
    OverlappingChannels {
        first: usize,
        second: usize,
        upper: f64,
        next_lower: f64,
    },
    #[error("base point {0:?} is not inside the domain")]
    BasePointOutside(Point),
}

/// Geometry of an open bounded set.
pub trait Region: Send + Sync {
    fn dimension(&self) -> usize;

    /// Open-set membership.
    fn contains(&self, p: &[f64]) -> bool;

    /// `dist(Q, ∂D)` for the closed box `Q = [lo, hi]`, or 0 when `Q ⊄ D`.
    fn box_clearance(&self, lo: &[f64], hi: &[f64]) -> f64;

    /// Whether the closed segment `[a, b]` lies in the open set.
    fn segment_inside(&self, a: &[f64], b: &[f64]) -> bool;

    fn bounding_box(&self) -> (Point, Point);

    /// Marked thin-channel region, used by crevice diagnostics.
    fn in_crevice(&self, _p: &[f64]) -> bool {
        false
    }

    /// Whether clearances are exact rather than lower bounds.
    fn exact_clearance(&self) -> bool {
        true
    }
}

/// A region together with its base point `x0`.
#[derive(Clone)]
pub struct DomainSpec {
    name: String,
    region: Arc<dyn Region>,
    base_point: Point,
}

impl fmt::Debug for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainSpec")
            .field("name", &self.name)
            .field("dimension", &self.region.dimension())
            .field("base_point", &self.base_point)
            .finish()
    }
}

impl DomainSpec {
    pub fn new(
        name: impl Into<String>,
        region: Arc<dyn Region>,
        base_point: Point,
    ) -> Result<Self, DomainError> {
        let d = region.dimension();
        if base_point.len() != d {
            return Err(DomainError::DimensionMismatch {
                expected: d,
                got: base_point.len(),
            });
        }
        if !region.contains(&base_point) {
            return Err(DomainError::BasePointOutside(base_point));
        }
        Ok(Self {
            name: name.into(),
            region,
            base_point,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.region.dimension()
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        self.region.bounding_box()
    }

    pub fn region(&self) -> &dyn Region {
        self.region.as_ref()
    }

    pub fn contains_point(&self, p: &[f64]) -> Result<bool, DomainError> {
        self.check_dim(p)?;
        Ok(self.region.contains(p))
    }

    /// Clearance of the level-`k` lattice cube; 0 disqualifies the cube.
    pub fn cube_clearance(&self, cube: &CubeIndex, k: u32) -> f64 {
        let (lo, hi) = cube.bounds(k);
        self.region.box_clearance(&lo, &hi)
    }

    pub fn segment_inside(&self, a: &[f64], b: &[f64]) -> bool {
        self.region.segment_inside(a, b)
    }

    pub fn in_crevice(&self, p: &[f64]) -> bool {
        self.region.in_crevice(p)
    }

    fn check_dim(&self, p: &[f64]) -> Result<(), DomainError> {
        let d = self.dimension();
        if p.len() != d {
            return Err(DomainError::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        Ok(())
    }
}

/// Open axis-aligned box `Π (lo_i, hi_i)`; an interval when `d = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    lower: Point,
    upper: Point,
}

impl Rectangle {
    pub fn new(lower: Point, upper: Point) -> Result<Self, DomainError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(DomainError::InvalidParameter(
                "rectangle bounds must be nonempty and of equal length".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !a.is_finite() || !b.is_finite() || a >= b)
        {
            return Err(DomainError::InvalidParameter(
                "rectangle needs finite lower < upper on every axis".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(d: usize) -> Self {
        Self {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Point {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

impl Region for Rectangle {
    fn dimension(&self) -> usize {
        self.lower.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (a, b))| x > a && x < b)
    }

    fn box_clearance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.lower.len() {
            best = best.min(lo[i] - self.lower[i]).min(self.upper[i] - hi[i]);
        }
        best.max(0.0)
    }

    fn segment_inside(&self, a: &[f64], b: &[f64]) -> bool {
        self.contains(a) && self.contains(b)
    }

    fn bounding_box(&self) -> (Point, Point) {
        (self.lower.clone(), self.upper.clone())
    }
}

/// Open Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self, DomainError> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(DomainError::InvalidParameter(
                "ball center must be a finite nonempty point".into(),
            ));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(DomainError::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    fn norm_from_center(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.center)
            .map(|(x, c)| (x - c) * (x - c))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest distance from the center to a point of the box (attained at a corner).
    fn farthest(&self, lo: &[f64], hi: &[f64]) -> f64 {
        lo.iter()
            .zip(hi)
            .zip(&self.center)
            .map(|((a, b), c)| {
                let m = (a - c).abs().max((b - c).abs());
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl Region for Ball {
    fn dimension(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.norm_from_center(p) < self.radius
    }

    fn box_clearance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        (self.radius - self.farthest(lo, hi)).max(0.0)
    }

    fn segment_inside(&self, a: &[f64], b: &[f64]) -> bool {
        self.contains(a) && self.contains(b)
    }

    fn bounding_box(&self) -> (Point, Point) {
        (
            self.center.iter().map(|c| c - self.radius).collect(),
            self.center.iter().map(|c| c + self.radius).collect(),
        )
    }
}

/// Unit disk with the slit `[-1, 0] × {0}` removed.
///
/// The slit is taken closed so that the set is open; its tip at the origin is
/// a boundary point.
#[derive(Debug, Clone, Copy, Default)]
pub struct SlitDisk;

impl SlitDisk {
    const SLIT: Segment = Segment::new([-1.0, 0.0], [0.0, 0.0]);

    fn disk() -> Ball {
        Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        }
    }
}

impl Region for SlitDisk {
    fn dimension(&self) -> usize {
        2
    }

    fn contains(&self, p: &[f64]) -> bool {
        Self::disk().contains(p) && !geometry::on_segment([p[0], p[1]], &Self::SLIT)
    }

    fn box_clearance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let radial = Self::disk().box_clearance(lo, hi);
        if radial == 0.0 {
            return 0.0;
        }
        radial.min(geometry::box_segment_distance(
            [lo[0], lo[1]],
            [hi[0], hi[1]],
            &Self::SLIT,
        ))
    }

    fn segment_inside(&self, a: &[f64], b: &[f64]) -> bool {
        self.contains(a)
            && self.contains(b)
            && !geometry::segments_intersect(&Segment::new([a[0], a[1]], [b[0], b[1]]), &Self::SLIT)
    }

    fn bounding_box(&self) -> (Point, Point) {
        (vec![-1.0, -1.0], vec![1.0, 1.0])
    }
}

/// Planar polygon with holes. The outer loop is counterclockwise, holes clockwise.
#[derive(Debug, Clone)]
pub struct Polygon {
    loops: Vec<Vec<Vec2>>,
    edges: Vec<Segment>,
    lower: Vec2,
    upper: Vec2,
}

impl Polygon {
    pub fn new(loops: Vec<Vec<Vec2>>) -> Result<Self, DomainError> {
        if loops.is_empty() {
            return Err(DomainError::InvalidParameter("polygon needs an outer loop".into()));
        }
        for (i, ring) in loops.iter().enumerate() {
            if ring.len() < 3 {
                return Err(DomainError::InvalidParameter(format!(
                    "loop {i} has fewer than 3 vertices"
                )));
            }
            if ring.iter().flatten().any(|c| !c.is_finite()) {
                return Err(DomainError::InvalidParameter(format!(
                    "loop {i} has a non-finite coordinate"
                )));
            }
            let area = geometry::signed_area(ring);
            if i == 0 && area <= 0.0 {
                return Err(DomainError::InvalidParameter(
                    "outer loop must be counterclockwise".into(),
                ));
            }
            if i > 0 && area >= 0.0 {
                return Err(DomainError::InvalidParameter(format!(
                    "hole {i} must be clockwise"
                )));
            }
        }
        let mut lower = [f64::INFINITY; 2];
        let mut upper = [f64::NEG_INFINITY; 2];
        for p in &loops[0] {
            for j in 0..2 {
                lower[j] = lower[j].min(p[j]);
                upper[j] = upper[j].max(p[j]);
            }
        }
        let edges = geometry::loop_segments(&loops);
        Ok(Self {
            loops,
            edges,
            lower,
            upper,
        })
    }

    pub fn loops(&self) -> &[Vec<Vec2>] {
        &self.loops
    }

    /// Vertex average of the outer loop.
    pub fn centroid(&self) -> Point {
        let ring = &self.loops[0];
        let n = ring.len() as f64;
        vec![
            ring.iter().map(|p| p[0]).sum::<f64>() / n,
            ring.iter().map(|p| p[1]).sum::<f64>() / n,
        ]
    }
}

impl Region for Polygon {
    fn dimension(&self) -> usize {
        2
    }

    fn contains(&self, p: &[f64]) -> bool {
        geometry::point_in_loops([p[0], p[1]], &self.loops)
    }

    fn box_clearance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        boundary_clearance(self, &self.edges, lo, hi)
    }

    fn segment_inside(&self, a: &[f64], b: &[f64]) -> bool {
        segment_clear_of(self, &self.edges, a, b)
    }

    fn bounding_box(&self) -> (Point, Point) {
        (self.lower.to_vec(), self.upper.to_vec())
    }
}

/// A closed box whose center is inside and which misses the boundary lies in `D`.
fn boundary_clearance(region: &dyn Region, boundary: &[Segment], lo: &[f64], hi: &[f64]) -> f64 {
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    if !region.contains(&center) {
        return 0.0;
    }
    let (lo, hi) = ([lo[0], lo[1]], [hi[0], hi[1]]);
    let mut best = f64::INFINITY;
    for s in boundary {
        best = best.min(geometry::box_segment_distance(lo, hi, s));
        if best == 0.0 {
            break;
        }
    }
    best
}

fn segment_clear_of(region: &dyn Region, boundary: &[Segment], a: &[f64], b: &[f64]) -> bool {
    if !region.contains(a) || !region.contains(b) {
        return false;
    }
    let seg = Segment::new([a[0], a[1]], [b[0], b[1]]);
    !boundary.iter().any(|s| geometry::segments_intersect(&seg, s))
}

/// Counterclockwise vertices of the level-`level` Koch snowflake prefractal,
/// centered at `(1/2, 1/2)` with circumradius `0.45`.
pub fn koch_prefractal_vertices(level: u32) -> Vec<Vec2> {
    let (cx, cy, r) = (0.5, 0.5, 0.45);
    let mut ring: Vec<Vec2> = [90.0f64, 210.0, 330.0]
        .iter()
        .map(|deg| {
            let a = deg.to_radians();
            [cx + r * a.cos(), cy + r * a.sin()]
        })
        .collect();
    let (s, c) = (-PI / 3.0).sin_cos();
    for _ in 0..level {
        let n = ring.len();
        let mut next = Vec::with_capacity(4 * n);
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            let third = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
            let p1 = [a[0] + third[0], a[1] + third[1]];
            let p3 = [a[0] + 2.0 * third[0], a[1] + 2.0 * third[1]];
            // Clockwise turn points outward for a counterclockwise loop.
            let apex = [
                p1[0] + c * third[0] - s * third[1],
                p1[1] + s * third[0] + c * third[1],
            ];
            next.extend_from_slice(&[a, p1, apex, p3]);
        }
        ring = next;
    }
    ring
}

/// Channel widths `δ_n`, `n = 2, 3, …`, for the comb domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CombDomainParams {
    pub channel_widths: Vec<f64>,
}

impl CombDomainParams {
    /// `δ_n = base^{-n}` for `n = 2..=count+1`.
    pub fn geometric(base: f64, count: usize) -> Self {
        Self {
            channel_widths: (2..count as i32 + 2).map(|n| base.powi(-n)).collect(),
        }
    }

    /// Same width for every channel.
    pub fn uniform(width: f64, count: usize) -> Self {
        Self {
            channel_widths: vec![width; count],
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channel_widths.len()
    }

    /// `(n, δ_n)` pairs.
    pub fn channels(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.channel_widths.iter().enumerate().map(|(i, &w)| (i + 2, w))
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.channel_widths.is_empty() {
            return Err(DomainError::InvalidParameter("comb needs at least one channel".into()));
        }
        for (n, w) in self.channels() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(DomainError::InvalidParameter(format!(
                    "channel width δ_{n} must be positive, got {w}"
                )));
            }
        }
        let (_, w2) = self.channels().next().unwrap_or((2, 0.0));
        if 0.5 + w2 >= 1.0 {
            return Err(DomainError::InvalidParameter(
                "channel 2 must end below the top edge".into(),
            ));
        }
        // Channel n occupies heights [1/n, 1/n + δ_n]; it must end below channel n-1.
        for (n, w) in self.channels().skip(1) {
            let upper = 1.0 / n as f64 + w;
            let next_lower = 1.0 / (n - 1) as f64;
            if upper >= next_lower {
                return Err(DomainError::OverlappingChannels {
                    first: n,
                    second: n - 1,
                    upper,
                    next_lower,
                });
            }
        }
        Ok(())
    }
}

/// Two unit squares `(-1,0)×(0,1)` and `(0,1)×(0,1)` separated by the wall
/// `{0}×(0,1)`, joined through channels `(-1/n, 1/n) × (1/n, 1/n + δ_n)` whose
/// top and bottom faces are removed.
#[derive(Debug, Clone)]
pub struct CombRegion {
    params: CombDomainParams,
    boundary: Vec<Segment>,
}

impl CombRegion {
    pub fn new(params: CombDomainParams) -> Result<Self, DomainError> {
        params.validate()?;
        let mut boundary = vec![
            Segment::new([-1.0, 0.0], [1.0, 0.0]),
            Segment::new([1.0, 0.0], [1.0, 1.0]),
            Segment::new([1.0, 1.0], [-1.0, 1.0]),
            Segment::new([-1.0, 1.0], [-1.0, 0.0]),
        ];
        // Wall pieces between openings, walked from the top down.
        let mut top = 1.0;
        for (n, w) in params.channels() {
            let lower = 1.0 / n as f64;
            boundary.push(Segment::new([0.0, lower + w], [0.0, top]));
            top = lower;
            let half = 1.0 / n as f64;
            boundary.push(Segment::new([-half, lower], [half, lower]));
            boundary.push(Segment::new([-half, lower + w], [half, lower + w]));
        }
        boundary.push(Segment::new([0.0, 0.0], [0.0, top]));
        Ok(Self { params, boundary })
    }

    pub fn params(&self) -> &CombDomainParams {
        &self.params
    }

    /// Index `n` of the channel whose open rectangle contains `p`.
    pub fn channel_of(&self, p: &[f64]) -> Option<usize> {
        self.params.channels().find_map(|(n, w)| {
            let lower = 1.0 / n as f64;
            (p[0].abs() < lower && p[1] > lower && p[1] < lower + w).then_some(n)
        })
    }
}

impl Region for CombRegion {
    fn dimension(&self) -> usize {
        2
    }

    fn contains(&self, p: &[f64]) -> bool {
        let (x, y) = (p[0], p[1]);
        if !(x > -1.0 && x < 1.0 && y > 0.0 && y < 1.0) {
            return false;
        }
        if x == 0.0 && self.channel_of(p).is_none() {
            return false;
        }
        !self.params.channels().any(|(n, w)| {
            let lower = 1.0 / n as f64;
            x.abs() < lower && (y == lower || y == lower + w)
        })
    }

    fn box_clearance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        boundary_clearance(self, &self.boundary, lo, hi)
    }

    fn segment_inside(&self, a: &[f64], b: &[f64]) -> bool {
        segment_clear_of(self, &self.boundary, a, b)
    }

    fn bounding_box(&self) -> (Point, Point) {
        (vec![-1.0, 0.0], vec![1.0, 1.0])
    }

    fn in_crevice(&self, p: &[f64]) -> bool {
        self.channel_of(p).is_some()
    }
}

type Membership = dyn Fn(&[f64]) -> bool + Send + Sync;
type DistanceBound = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// User-supplied domain given by a membership test and a 1-Lipschitz lower
/// bound on `dist(x, ∂D)` for `x ∈ D`. Cube clearances are certified lower bounds.
#[derive(Clone)]
pub struct ImplicitRegion {
    dimension: usize,
    contains: Arc<Membership>,
    distance_bound: Arc<DistanceBound>,
    lower: Point,
    upper: Point,
}

impl ImplicitRegion {
    pub fn new(
        lower: Point,
        upper: Point,
        contains: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        distance_bound: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, DomainError> {
        Rectangle::new(lower.clone(), upper.clone())?;
        Ok(Self {
            dimension: lower.len(),
            contains: Arc::new(contains),
            distance_bound: Arc::new(distance_bound),
            lower,
            upper,
        })
    }
}

impl Region for ImplicitRegion {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn contains(&self, p: &[f64]) -> bool {
        (self.contains)(p)
    }

    fn box_clearance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let center: Point = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        if !(self.contains)(&center) {
            return 0.0;
        }
        let half_diag = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| 0.25 * (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        ((self.distance_bound)(&center) - half_diag).max(0.0)
    }

    fn segment_inside(&self, a: &[f64], b: &[f64]) -> bool {
        let mid: Point = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let half = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
            / 2.0;
        (self.contains)(&mid) && (self.distance_bound)(&mid) > half
    }

    fn bounding_box(&self) -> (Point, Point) {
        (self.lower.clone(), self.upper.clone())
    }

    fn exact_clearance(&self) -> bool {
        false
    }
}

/// Catalog of named domains, as read from experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "camelCase", deny_unknown_fields)]
pub enum BuiltinDomain {
    #[serde(rename_all = "camelCase")]
    Rectangle {
        #[serde(default = "unit_lower")]
        lower: Point,
        #[serde(default = "unit_upper")]
        upper: Point,
    },
    #[serde(rename_all = "camelCase")]
    Disk {
        #[serde(default = "origin2")]
        center: Point,
        #[serde(default = "one")]
        radius: f64,
    },
    SlitDisk,
    #[serde(rename_all = "camelCase")]
    KochPrefractal { level: u32 },
    #[serde(rename_all = "camelCase")]
    Comb {
        #[serde(default)]
        channel_widths: Option<Vec<f64>>,
        #[serde(default)]
        width_base: Option<f64>,
        #[serde(default)]
        channel_count: Option<usize>,
    },
    #[serde(rename_all = "camelCase")]
    Polygon { loops: Vec<Vec<Vec2>> },
}

fn unit_lower() -> Point {
    vec![0.0, 0.0]
}
fn unit_upper() -> Point {
    vec![1.0, 1.0]
}
fn origin2() -> Point {
    vec![0.0, 0.0]
}
fn one() -> f64 {
    1.0
}

impl BuiltinDomain {
    pub fn comb(params: CombDomainParams) -> Self {
        BuiltinDomain::Comb {
            channel_widths: Some(params.channel_widths),
            width_base: None,
            channel_count: None,
        }
    }

    pub fn unit_square() -> Self {
        BuiltinDomain::Rectangle {
            lower: unit_lower(),
            upper: unit_upper(),
        }
    }

    pub fn unit_interval() -> Self {
        BuiltinDomain::Rectangle {
            lower: vec![0.0],
            upper: vec![1.0],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BuiltinDomain::Rectangle { .. } => "rectangle",
            BuiltinDomain::Disk { .. } => "disk",
            BuiltinDomain::SlitDisk => "slitDisk",
            BuiltinDomain::KochPrefractal { .. } => "kochPrefractal",
            BuiltinDomain::Comb { .. } => "comb",
            BuiltinDomain::Polygon { .. } => "polygon",
        }
    }

    pub fn comb_params(&self) -> Option<Result<CombDomainParams, DomainError>> {
        let BuiltinDomain::Comb {
            channel_widths,
            width_base,
            channel_count,
        } = self
        else {
            return None;
        };
        Some(match (channel_widths, width_base) {
            (Some(w), None) => Ok(CombDomainParams {
                channel_widths: w.clone(),
            }),
            (None, Some(base)) => {
                if !(*base > 1.0) {
                    Err(DomainError::InvalidParameter(format!(
                        "widthBase must exceed 1, got {base}"
                    )))
                } else {
                    Ok(CombDomainParams::geometric(*base, channel_count.unwrap_or(3)))
                }
            }
            _ => Err(DomainError::InvalidParameter(
                "comb needs exactly one of channelWidths or widthBase".into(),
            )),
        })
    }

    /// Oracle box `(lower, upper)` when the domain is a rectangle.
    pub fn as_box(&self) -> Option<(Point, Point)> {
        match self {
            BuiltinDomain::Rectangle { lower, upper } => Some((lower.clone(), upper.clone())),
            _ => None,
        }
    }
}

/// Build a domain from the catalog, with an optional base point override.
pub fn make_builtin_domain(
    builtin: &BuiltinDomain,
    base_point: Option<Point>,
) -> Result<DomainSpec, DomainError> {
    let (region, default_base): (Arc<dyn Region>, Point) = match builtin {
        BuiltinDomain::Rectangle { lower, upper } => {
            let r = Rectangle::new(lower.clone(), upper.clone())?;
            let c = r.center();
            (Arc::new(r), c)
        }
        BuiltinDomain::Disk { center, radius } => {
            let b = Ball::new(center.clone(), *radius)?;
            (Arc::new(b), center.clone())
        }
        BuiltinDomain::SlitDisk => (Arc::new(SlitDisk), vec![0.5, 0.0]),
        BuiltinDomain::KochPrefractal { level } => {
            if *level > 7 {
                return Err(DomainError::InvalidParameter(format!(
                    "Koch prefractal level {level} exceeds 7"
                )));
            }
            let p = Polygon::new(vec![koch_prefractal_vertices(*level)])?;
            (Arc::new(p), vec![0.5, 0.5])
        }
        BuiltinDomain::Comb { .. } => {
            let params = builtin.comb_params().expect("comb variant")?;
            (Arc::new(CombRegion::new(params)?), vec![0.75, 0.25])
        }
        BuiltinDomain::Polygon { loops } => {
            let p = Polygon::new(loops.clone())?;
            let c = p.centroid();
            (Arc::new(p), c)
        }
    };
    DomainSpec::new(builtin.kind(), region, base_point.unwrap_or(default_base))
}
