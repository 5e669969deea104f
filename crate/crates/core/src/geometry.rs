//! Planar obstacle geometry: buildings as simple polygons, line-of-sight
//! tests between points, visibility-graph construction and corner-derived
//! candidate positions.
//!
//! Visibility rule: the open segment between two points is blocked when it
//! passes through the interior of any building. Touching a corner, or running
//! along a wall, does not block.

use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;
use thiserror::Error;

/// Tolerance for orientation tests, expressed as a perpendicular distance in meters.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinates must be finite, got ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("bounds are empty or inverted")]
    EmptyBounds,
    #[error("building {0} extends outside the map bounds")]
    BuildingOutOfBounds(usize),
    #[error("segment endpoints coincide at ({0}, {1})")]
    DegenerateSegment(f64, f64),
    #[error("point ({x}, {y}) lies inside building {building}")]
    PointInsideBuilding { x: f64, y: f64, building: usize },
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("candidate offset must be positive, got {0}")]
    NonPositiveOffset(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2D) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2D) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2D) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Point2D> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| Point2D::new(self.x / n, self.y / n))
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2D {
    type Output = Point2D;
    fn mul(self, rhs: f64) -> Point2D {
        Point2D::new(self.x * rhs, self.y * rhs)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2D,
    pub max: Point2D,
}

impl Rect {
    pub fn new(min: Point2D, max: Point2D) -> Result<Self, GeometryError> {
        for p in [min, max] {
            if !p.is_finite() {
                return Err(GeometryError::NonFinite(p.x, p.y));
            }
        }
        if max.x <= min.x || max.y <= min.y {
            return Err(GeometryError::EmptyBounds);
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2D {
        Point2D::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    /// Closed containment.
    pub fn contains(&self, p: Point2D) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    fn overlaps_segment_box(&self, a: Point2D, b: Point2D) -> bool {
        a.x.max(b.x) >= self.min.x - GEOM_EPS
            && a.x.min(b.x) <= self.max.x + GEOM_EPS
            && a.y.max(b.y) >= self.min.y - GEOM_EPS
            && a.y.min(b.y) <= self.max.y + GEOM_EPS
    }

    fn bounding(points: &[Point2D]) -> Rect {
        let mut min = points[0];
        let mut max = points[0];
        for p in &points[1..] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Rect { min, max }
    }
}

/// Signed perpendicular distance of `p` from the directed line `a -> b`
/// (positive on the left).
fn side(a: Point2D, b: Point2D, p: Point2D) -> f64 {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return (p - a).norm();
    }
    d.cross(p - a) / len
}

fn sign(v: f64) -> i8 {
    if v > GEOM_EPS {
        1
    } else if v < -GEOM_EPS {
        -1
    } else {
        0
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
fn distance_to_segment(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance(a + d * t)
}

/// Closed segments `[p1,p2]` and `[q1,q2]` share at least one point.
fn segments_touch(p1: Point2D, p2: Point2D, q1: Point2D, q2: Point2D) -> bool {
    let d1 = sign(side(p1, p2, q1));
    let d2 = sign(side(p1, p2, q2));
    let d3 = sign(side(q1, q2, p1));
    let d4 = sign(side(q1, q2, p2));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    distance_to_segment(q1, p1, p2) <= GEOM_EPS
        || distance_to_segment(q2, p1, p2) <= GEOM_EPS
        || distance_to_segment(p1, q1, q2) <= GEOM_EPS
        || distance_to_segment(p2, q1, q2) <= GEOM_EPS
}

/// A building footprint: a simple polygon stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    vertices: Vec<Point2D>,
    bbox: Rect,
}

impl Building {
    /// Validates the polygon and normalizes it to counter-clockwise order,
    /// keeping the first vertex in place.
    pub fn new(vertices: Vec<Point2D>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(p.x, p.y));
        }
        let area = signed_area(&vertices);
        if area.abs() <= GEOM_EPS {
            return Err(GeometryError::ZeroArea);
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if a.distance(b) <= GEOM_EPS {
                return Err(GeometryError::SelfIntersecting(i, (i + 1) % n));
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if adjacent {
                    // Adjacent edges may only share their common vertex.
                    let (shared, far_i, far_j) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    let ui = far_i - shared;
                    let uj = far_j - shared;
                    if sign(side(shared, far_i, far_j)) == 0 && ui.dot(uj) > 0.0 {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                } else if segments_touch(a, b, c, d) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        let vertices = if area < 0.0 {
            let mut v = Vec::with_capacity(n);
            v.push(vertices[0]);
            v.extend(vertices[1..].iter().rev().copied());
            v
        } else {
            vertices
        };
        let bbox = Rect::bounding(&vertices);
        Ok(Self { vertices, bbox })
    }

    /// Axis-aligned rectangle building.
    pub fn rectangle(min: Point2D, max: Point2D) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Point2D::new(max.x, min.y),
            max,
            Point2D::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Point2D] {
        &self.vertices
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Edges as `(start, end)` in counter-clockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point2D, Point2D)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn distance_to_boundary(&self, p: Point2D) -> f64 {
        self.edges()
            .map(|(a, b)| distance_to_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn on_boundary(&self, p: Point2D, tol: f64) -> bool {
        self.distance_to_boundary(p) <= tol
    }

    /// Strictly inside: inside the polygon and farther than the geometric
    /// tolerance from its boundary.
    pub fn strictly_contains(&self, p: Point2D) -> bool {
        if p.x < self.bbox.min.x || p.x > self.bbox.max.x || p.y < self.bbox.min.y || p.y > self.bbox.max.y {
            return false;
        }
        crossing_parity(&self.vertices, p) && !self.on_boundary(p, GEOM_EPS)
    }

    /// Whether the open segment `(a, b)` passes through the interior.
    pub fn blocks(&self, a: Point2D, b: Point2D) -> bool {
        if !self.bbox.overlaps_segment_box(a, b) {
            return false;
        }
        let dir = b - a;
        let len2 = dir.dot(dir);
        let mut contacts = vec![0.0, 1.0];
        for (p, q) in self.edges() {
            let sp = side(a, b, p);
            let sq = side(a, b, q);
            let (gp, gq) = (sign(sp), sign(sq));
            if gp * gq < 0 {
                let sa = sign(side(p, q, a));
                let sb = sign(side(p, q, b));
                if sa * sb < 0 {
                    return true;
                }
            }
            for (v, g) in [(p, gp), (q, gq)] {
                if g == 0 {
                    let t = (v - a).dot(dir) / len2;
                    if t > 0.0 && t < 1.0 {
                        contacts.push(t);
                    }
                }
            }
        }
        contacts.sort_by(f64::total_cmp);
        contacts.dedup();
        contacts.windows(2).any(|w| {
            let mid = a + dir * (0.5 * (w[0] + w[1]));
            self.strictly_contains(mid)
        })
    }
}

fn signed_area(v: &[Point2D]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

/// Even-odd ray casting; boundary points may land on either side.
fn crossing_parity(v: &[Point2D], p: Point2D) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (v[i], v[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x = pj.x + (p.y - pj.y) * (pi.x - pj.x) / (pi.y - pj.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMap {
    bounds: Rect,
    buildings: Vec<Building>,
}

impl ObstacleMap {
    pub fn new(bounds: Rect, buildings: Vec<Building>) -> Result<Self, GeometryError> {
        for (i, b) in buildings.iter().enumerate() {
            if !b.vertices().iter().all(|&v| bounds.contains(v)) {
                return Err(GeometryError::BuildingOutOfBounds(i));
            }
        }
        Ok(Self { bounds, buildings })
    }

    pub fn empty(bounds: Rect) -> Self {
        Self {
            bounds,
            buildings: Vec::new(),
        }
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    /// Index of the first building strictly containing `p`.
    pub fn building_containing(&self, p: Point2D) -> Option<usize> {
        self.buildings.iter().position(|b| b.strictly_contains(p))
    }

    /// Inside some building or on its boundary.
    pub fn is_obstructed(&self, p: Point2D) -> bool {
        self.buildings
            .iter()
            .any(|b| b.strictly_contains(p) || b.on_boundary(p, GEOM_EPS))
    }

    /// Copy of the map with one building removed.
    pub fn without_building(&self, index: usize) -> ObstacleMap {
        let mut buildings = self.buildings.clone();
        buildings.remove(index);
        ObstacleMap {
            bounds: self.bounds,
            buildings,
        }
    }

    fn check_outside(&self, p: Point2D) -> Result<(), GeometryError> {
        if !p.is_finite() {
            return Err(GeometryError::NonFinite(p.x, p.y));
        }
        match self.building_containing(p) {
            Some(building) => Err(GeometryError::PointInsideBuilding {
                x: p.x,
                y: p.y,
                building,
            }),
            None => Ok(()),
        }
    }
}

/// True when the open segment `(a, b)` properly crosses a building edge or
/// runs through a building interior.
pub fn segment_blocked(a: Point2D, b: Point2D, map: &ObstacleMap) -> Result<bool, GeometryError> {
    if a.distance(b) <= GEOM_EPS {
        return Err(GeometryError::DegenerateSegment(a.x, a.y));
    }
    Ok(blocked_unchecked(a, b, map))
}

fn blocked_unchecked(a: Point2D, b: Point2D, map: &ObstacleMap) -> bool {
    map.buildings.iter().any(|bld| bld.blocks(a, b))
}

/// Line-of-sight test. Both points must lie outside every building interior.
pub fn visible(a: Point2D, b: Point2D, map: &ObstacleMap) -> Result<bool, GeometryError> {
    map.check_outside(a)?;
    map.check_outside(b)?;
    segment_blocked(a, b, map).map(|blocked| !blocked)
}

/// Visibility for points already known to be valid and distinct.
pub(crate) fn visible_unchecked(a: Point2D, b: Point2D, map: &ObstacleMap) -> bool {
    !blocked_unchecked(a, b, map)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisEdge {
    pub a: usize,
    pub b: usize,
    pub length_m: f64,
}

/// Undirected visibility graph; `edges` are sorted by `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityGraph {
    pub nodes: Vec<Point2D>,
    pub edges: Vec<VisEdge>,
}

impl VisibilityGraph {
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.a, e.b)).collect()
    }
}

/// Connects every mutually visible pair of `points`. Node order follows the
/// input. Pairs are tested in parallel.
pub fn build_visibility_graph(
    points: &[Point2D],
    map: &ObstacleMap,
) -> Result<VisibilityGraph, GeometryError> {
    for p in points {
        map.check_outside(*p)?;
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (points[i].x - points[j].x).abs() <= GEOM_EPS
                && points[i].distance(points[j]) <= GEOM_EPS
            {
                return Err(GeometryError::DuplicatePoint(i, j));
            }
        }
    }

    let edges: Vec<VisEdge> = (0..points.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            ((i + 1)..points.len()).filter_map(move |j| {
                visible_unchecked(points[i], points[j], map).then(|| VisEdge {
                    a: i,
                    b: j,
                    length_m: points[i].distance(points[j]),
                })
            })
        })
        .collect();
    Ok(VisibilityGraph {
        nodes: points.to_vec(),
        edges,
    })
}

/// Drone positions derived from building corners: each corner pushed outward
/// along its exterior bisector by `offset`, optionally with every edge midpoint
/// pushed out along the edge normal. Points that end up inside a building,
/// on a wall, or outside the bounds are dropped, as are exact repeats.
pub fn candidate_points(
    map: &ObstacleMap,
    offset: f64,
    include_edge_midpoints: bool,
) -> Result<Vec<Point2D>, GeometryError> {
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(GeometryError::NonPositiveOffset(offset));
    }
    let mut out: Vec<Point2D> = Vec::new();
    let push = |p: Point2D, out: &mut Vec<Point2D>| {
        if map.bounds.contains(p)
            && !map.is_obstructed(p)
            && !out.iter().any(|q| q.distance(p) <= GEOM_EPS)
        {
            out.push(p);
        }
    };
    for building in &map.buildings {
        let v = building.vertices();
        let n = v.len();
        for i in 0..n {
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            let n_in = outward_normal(prev, cur);
            let n_out = outward_normal(cur, next);
            if let Some(bisector) = (n_in + n_out).normalized() {
                push(cur + bisector * offset, &mut out);
            }
            if include_edge_midpoints {
                let mid = (cur + next) * 0.5;
                push(mid + n_out * offset, &mut out);
            }
        }
    }
    Ok(out)
}

/// Outward unit normal of a counter-clockwise edge.
pub fn outward_normal(a: Point2D, b: Point2D) -> Point2D {
    let d = b - a;
    Point2D::new(d.y, -d.x)
        .normalized()
        .unwrap_or_default()
}
