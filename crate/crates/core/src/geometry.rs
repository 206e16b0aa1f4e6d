//! Planar segment and axis-aligned box primitives shared by the polygonal domains.

pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }
}

fn sub(p: Vec2, q: Vec2) -> Vec2 {
    [p[0] - q[0], p[1] - q[1]]
}

fn dot(p: Vec2, q: Vec2) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

fn cross(p: Vec2, q: Vec2) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

pub fn point_segment_distance(p: Vec2, s: &Segment) -> f64 {
    let ab = sub(s.b, s.a);
    let ap = sub(p, s.a);
    let len2 = dot(ab, ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (dot(ap, ab) / len2).clamp(0.0, 1.0)
    };
    let proj = [s.a[0] + t * ab[0], s.a[1] + t * ab[1]];
    let d = sub(p, proj);
    dot(d, d).sqrt()
}

/// Whether `p` lies on the closed segment.
pub fn on_segment(p: Vec2, s: &Segment) -> bool {
    let ab = sub(s.b, s.a);
    let ap = sub(p, s.a);
    if cross(ab, ap) != 0.0 {
        return false;
    }
    let t = dot(ap, ab);
    t >= 0.0 && t <= dot(ab, ab)
}

fn orientation(p: Vec2, q: Vec2, r: Vec2) -> i8 {
    let v = cross(sub(q, p), sub(r, p));
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Closed-segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let o1 = orientation(s.a, s.b, t.a);
    let o2 = orientation(s.a, s.b, t.b);
    let o3 = orientation(t.a, t.b, s.a);
    let o4 = orientation(t.a, t.b, s.b);
    if o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0 {
        return true;
    }
    (o1 == 0 && on_segment(t.a, s))
        || (o2 == 0 && on_segment(t.b, s))
        || (o3 == 0 && on_segment(s.a, t))
        || (o4 == 0 && on_segment(s.b, t))
}

pub fn point_box_distance(p: Vec2, lo: Vec2, hi: Vec2) -> f64 {
    let dx = (lo[0] - p[0]).max(0.0).max(p[0] - hi[0]);
    let dy = (lo[1] - p[1]).max(0.0).max(p[1] - hi[1]);
    (dx * dx + dy * dy).sqrt()
}

fn point_in_closed_box(p: Vec2, lo: Vec2, hi: Vec2) -> bool {
    p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]
}

fn box_corners(lo: Vec2, hi: Vec2) -> [Vec2; 4] {
    [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]]
}

/// Euclidean distance between a closed box and a closed segment (0 when they meet).
pub fn box_segment_distance(lo: Vec2, hi: Vec2, s: &Segment) -> f64 {
    if point_in_closed_box(s.a, lo, hi) || point_in_closed_box(s.b, lo, hi) {
        return 0.0;
    }
    let c = box_corners(lo, hi);
    for i in 0..4 {
        if segments_intersect(s, &Segment::new(c[i], c[(i + 1) % 4])) {
            return 0.0;
        }
    }
    // Disjoint convex sets: the gap is realized at a vertex of one of them.
    let from_corners = c
        .iter()
        .map(|&p| point_segment_distance(p, s))
        .fold(f64::INFINITY, f64::min);
    let from_ends = point_box_distance(s.a, lo, hi).min(point_box_distance(s.b, lo, hi));
    from_corners.min(from_ends)
}

/// Even-odd crossing test against a set of closed loops. Points on an edge count as outside.
pub fn point_in_loops(p: Vec2, loops: &[Vec<Vec2>]) -> bool {
    let mut inside = false;
    for ring in loops {
        let n = ring.len();
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            if on_segment(p, &Segment::new(a, b)) {
                return false;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

pub fn signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| cross(ring[i], ring[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

pub fn loop_segments(loops: &[Vec<Vec2>]) -> Vec<Segment> {
    loops
        .iter()
        .flat_map(|ring| {
            let n = ring.len();
            (0..n).map(move |i| Segment::new(ring[i], ring[(i + 1) % n]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_segment_gap_and_touch() {
        let s = Segment::new([2.0, 0.0], [2.0, 1.0]);
        assert_eq!(box_segment_distance([0.0, 0.0], [1.0, 1.0], &s), 1.0);
        let touching = Segment::new([1.0, 0.5], [3.0, 0.5]);
        assert_eq!(box_segment_distance([0.0, 0.0], [1.0, 1.0], &touching), 0.0);
        let crossing = Segment::new([-1.0, 0.5], [3.0, 0.5]);
        assert_eq!(box_segment_distance([0.0, 0.0], [1.0, 1.0], &crossing), 0.0);
        let diagonal = Segment::new([2.0, 3.0], [3.0, 2.0]);
        let d = box_segment_distance([0.0, 0.0], [1.0, 1.0], &diagonal);
        assert!((d - (1.5f64 * 1.5 * 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn crossing_rule_with_hole() {
        let outer = vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]];
        let hole = vec![[1.0, 1.0], [1.0, 3.0], [3.0, 3.0], [3.0, 1.0]];
        let loops = vec![outer, hole];
        assert!(point_in_loops([0.5, 0.5], &loops));
        assert!(!point_in_loops([2.0, 2.0], &loops));
        assert!(!point_in_loops([0.0, 2.0], &loops));
        assert!(!point_in_loops([1.0, 2.0], &loops));
        assert!(signed_area(&loops[0]) > 0.0);
        assert!(signed_area(&loops[1]) < 0.0);
    }

    #[test]
    fn collinear_overlap_counts_as_intersection() {
        let s = Segment::new([0.0, 0.0], [2.0, 0.0]);
        let t = Segment::new([1.0, 0.0], [3.0, 0.0]);
        assert!(segments_intersect(&s, &t));
        let u = Segment::new([2.5, 0.0], [3.0, 0.0]);
        assert!(!segments_intersect(&s, &u));
    }
}
