//! Structures built from transversally intersecting segments and discs
//! in `R^3`, their junctions, and the coupling classes induced by the
//! junction pattern.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::{self, Vec3};

/// Angle threshold below which two directions count as parallel.
pub const ANGLE_TOL: f64 = 1e-8;
/// Distance tolerance for incidence checks (locus on component, node merge).
pub const LOCUS_TOL: f64 = 1e-10;
/// Orthonormality tolerance for disc frames.
pub const FRAME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind {
    Segment {
        p0: Vec3,
        p1: Vec3,
    },
    Disc {
        center: Vec3,
        radius: f64,
        /// Two orthonormal vectors spanning the disc plane.
        frame: [Vec3; 2],
    },
}

/// One component manifold: a straight segment or a flat round disc.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentShape {
    pub id: usize,
    pub kind: ShapeKind,
}

impl ComponentShape {
    pub fn segment(id: usize, p0: Vec3, p1: Vec3) -> Self {
        ComponentShape {
            id,
            kind: ShapeKind::Segment { p0, p1 },
        }
    }

    pub fn disc(id: usize, center: Vec3, radius: f64, frame: [Vec3; 2]) -> Self {
        ComponentShape {
            id,
            kind: ShapeKind::Disc { center, radius, frame },
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ShapeKind::Segment { .. } => 1,
            ShapeKind::Disc { .. } => 2,
        }
    }

    /// Length (dim 1) or area (dim 2).
    pub fn measure(&self) -> f64 {
        match &self.kind {
            ShapeKind::Segment { p0, p1 } => vec3::dist(*p0, *p1),
            ShapeKind::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            ShapeKind::Segment { p0, p1 } => vec3::dist(*p0, *p1),
            ShapeKind::Disc { radius, .. } => 2.0 * radius,
        }
    }

    /// Unit normal of a disc plane. Panics on segments.
    pub fn disc_normal(&self) -> Vec3 {
        match &self.kind {
            ShapeKind::Disc { frame, .. } => vec3::normalize(vec3::cross(frame[0], frame[1])),
            ShapeKind::Segment { .. } => panic!("disc_normal on a segment"),
        }
    }

    /// Distance from an ambient point to the component (as a closed set).
    pub fn dist_point(&self, p: Vec3) -> f64 {
        match &self.kind {
            ShapeKind::Segment { p0, p1 } => vec3::dist_point_segment(p, *p0, *p1),
            ShapeKind::Disc { center, radius, frame } => {
                let d = vec3::sub(p, *center);
                let u = vec3::dot(d, frame[0]);
                let v = vec3::dot(d, frame[1]);
                let rho = (u * u + v * v).sqrt();
                let clamped = rho.min(*radius);
                let (cu, cv) = if rho > 0.0 {
                    (u / rho * clamped, v / rho * clamped)
                } else {
                    (0.0, 0.0)
                };
                let foot = vec3::add(
                    *center,
                    vec3::add(vec3::scale(frame[0], cu), vec3::scale(frame[1], cv)),
                );
                vec3::dist(p, foot)
            }
        }
    }

    /// Distance from a segment `[a, b]` to the component. The component is
    /// convex, so the point-to-component distance is convex along the
    /// segment and a ternary search is exact in the limit.
    pub fn dist_segment(&self, a: Vec3, b: Vec3) -> f64 {
        match &self.kind {
            ShapeKind::Segment { p0, p1 } => vec3::dist_segment_segment(a, b, *p0, *p1),
            ShapeKind::Disc { .. } => {
                let eval = |t: f64| self.dist_point(vec3::add(a, vec3::scale(vec3::sub(b, a), t)));
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..200 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if eval(m1) <= eval(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                eval(0.5 * (lo + hi)).min(eval(0.0)).min(eval(1.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JunctionLocus {
    Point(Vec3),
    /// A straight curve junction, stored by its endpoints.
    Curve { a: Vec3, b: Vec3 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub comp_a: usize,
    pub comp_b: usize,
    pub locus: JunctionLocus,
    /// Whether the junction identifies degrees of freedom across the two
    /// components: 1D-1D point junctions and 2D-2D curve junctions couple,
    /// a point junction into a 2D interior never does.
    pub coupled: bool,
}

#[derive(Debug, Clone)]
pub struct ValidatedStructure {
    pub components: Vec<ComponentShape>,
    pub junctions: Vec<Junction>,
    /// Total length plus area of the structure.
    pub total_measure: f64,
}

/// Partition of component ids into maximal sets whose joint indicator is
/// gradient-free; these are the connected components of the coupled
/// junction graph.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelClasses {
    pub classes: Vec<Vec<usize>>,
}

impl KernelClasses {
    pub fn d(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, component: usize) -> usize {
        self.classes
            .iter()
            .position(|c| c.contains(&component))
            .expect("component not in any class")
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("component {component}: malformed shape: {reason}")]
    MalformedShape { component: usize, reason: String },
    #[error("components {comp_a} and {comp_b}: non-transversal intersection: {reason}")]
    NonTransversal {
        comp_a: usize,
        comp_b: usize,
        reason: String,
    },
    #[error("components {0}, {1} and {2} share a point near ({3:?})", .comps.0, .comps.1, .comps.2, .point)]
    TripleIntersection { comps: (usize, usize, usize), point: Vec3 },
}

fn check_shape(c: &ComponentShape) -> Result<(), GeometryError> {
    match &c.kind {
        ShapeKind::Segment { p0, p1 } => {
            if vec3::dist(*p0, *p1) <= 0.0 {
                return Err(GeometryError::MalformedShape {
                    component: c.id,
                    reason: "segment endpoints coincide".into(),
                });
            }
        }
        ShapeKind::Disc { radius, frame, .. } => {
            if !(*radius > 0.0) {
                return Err(GeometryError::MalformedShape {
                    component: c.id,
                    reason: "disc radius must be positive".into(),
                });
            }
            let [e1, e2] = frame;
            if (vec3::norm(*e1) - 1.0).abs() > FRAME_TOL
                || (vec3::norm(*e2) - 1.0).abs() > FRAME_TOL
                || vec3::dot(*e1, *e2).abs() > FRAME_TOL
            {
                return Err(GeometryError::MalformedShape {
                    component: c.id,
                    reason: "disc frame is not orthonormal".into(),
                });
            }
        }
    }
    Ok(())
}

fn pair_junction(
    a: &ComponentShape,
    b: &ComponentShape,
) -> Result<Option<Junction>, GeometryError> {
    let non_transversal = |reason: &str| GeometryError::NonTransversal {
        comp_a: a.id,
        comp_b: b.id,
        reason: reason.into(),
    };
    match (&a.kind, &b.kind) {
        (ShapeKind::Segment { p0: a0, p1: a1 }, ShapeKind::Segment { p0: b0, p1: b1 }) => {
            let da = vec3::sub(*a1, *a0);
            let db = vec3::sub(*b1, *b0);
            let (la, lb) = (vec3::norm(da), vec3::norm(db));
            let sin_angle = vec3::norm(vec3::cross(da, db)) / (la * lb);
            if sin_angle < ANGLE_TOL {
                if vec3::dist_segment_segment(*a0, *a1, *b0, *b1) <= LOCUS_TOL {
                    return Err(non_transversal("parallel overlapping segments"));
                }
                return Ok(None);
            }
            // Closest points of the two lines.
            let r = vec3::sub(*a0, *b0);
            let (aa, bb, ab) = (vec3::dot(da, da), vec3::dot(db, db), vec3::dot(da, db));
            let (ar, br) = (vec3::dot(da, r), vec3::dot(db, r));
            let denom = aa * bb - ab * ab;
            let s = (ab * br - bb * ar) / denom;
            let t = (aa * br - ab * ar) / denom;
            let pa = vec3::add(*a0, vec3::scale(da, s));
            let pb = vec3::add(*b0, vec3::scale(db, t));
            if vec3::dist(pa, pb) > LOCUS_TOL {
                return Ok(None); // skew lines
            }
            let inside =
                |u: f64, len: f64| u * len > -LOCUS_TOL && (u - 1.0) * len < LOCUS_TOL;
            if !inside(s, la) || !inside(t, lb) {
                return Ok(None); // lines cross outside the segments
            }
            let at_end = |u: f64, len: f64| (u * len).abs() <= LOCUS_TOL
                || ((u - 1.0) * len).abs() <= LOCUS_TOL;
            if at_end(s, la) || at_end(t, lb) {
                return Err(non_transversal("junction at a segment endpoint"));
            }
            Ok(Some(Junction {
                comp_a: a.id,
                comp_b: b.id,
                locus: JunctionLocus::Point(pa),
                coupled: true,
            }))
        }
        (ShapeKind::Disc { .. }, ShapeKind::Disc { .. }) => {
            let (c1, r1, n1) = disc_data(a);
            let (c2, r2, n2) = disc_data(b);
            let d_raw = vec3::cross(n1, n2);
            if vec3::norm(d_raw) < ANGLE_TOL {
                let offset = vec3::dot(vec3::sub(*c2, *c1), n1).abs();
                if offset <= LOCUS_TOL && vec3::dist(*c1, *c2) < r1 + r2 {
                    return Err(non_transversal("coplanar overlapping discs"));
                }
                return Ok(None);
            }
            // A point on the intersection line of the two planes.
            let d = vec3::normalize(d_raw);
            let h1 = vec3::dot(*c1, n1);
            let h2 = vec3::dot(*c2, n2);
            let dd = vec3::dot(d_raw, d_raw);
            let p = vec3::scale(
                vec3::add(
                    vec3::scale(vec3::cross(n2, d_raw), h1),
                    vec3::scale(vec3::cross(d_raw, n1), h2),
                ),
                1.0 / dd,
            );
            // Parameter interval of the line inside each disc.
            let interval = |c: Vec3, r: f64| -> Option<(f64, f64)> {
                let w = vec3::sub(p, c);
                let b_half = vec3::dot(w, d);
                let c0 = vec3::dot(w, w) - r * r;
                let disc = b_half * b_half - c0;
                if disc <= 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                Some((-b_half - sq, -b_half + sq))
            };
            let (i1, i2) = match (interval(*c1, r1), interval(*c2, r2)) {
                (Some(i1), Some(i2)) => (i1, i2),
                _ => return Ok(None),
            };
            let lo = i1.0.max(i2.0);
            let hi = i1.1.min(i2.1);
            if hi <= lo + LOCUS_TOL {
                if hi >= lo - LOCUS_TOL {
                    return Err(non_transversal("discs touch in a single point"));
                }
                return Ok(None);
            }
            // Each chord endpoint must sit on both rims; otherwise one rim
            // crosses the other disc's interior.
            if (i1.0 - i2.0).abs() > LOCUS_TOL || (i1.1 - i2.1).abs() > LOCUS_TOL {
                return Err(non_transversal(
                    "disc boundary meets the interior of the other disc",
                ));
            }
            Ok(Some(Junction {
                comp_a: a.id,
                comp_b: b.id,
                locus: JunctionLocus::Curve {
                    a: vec3::add(p, vec3::scale(d, lo)),
                    b: vec3::add(p, vec3::scale(d, hi)),
                },
                coupled: true,
            }))
        }
        (ShapeKind::Disc { .. }, ShapeKind::Segment { .. }) => {
            disc_segment_junction(a, b).map_err(|r| non_transversal(&r))
        }
        (ShapeKind::Segment { .. }, ShapeKind::Disc { .. }) => {
            match disc_segment_junction(b, a) {
                Ok(Some(j)) => Ok(Some(Junction {
                    comp_a: a.id,
                    comp_b: b.id,
                    locus: j.locus,
                    coupled: j.coupled,
                })),
                Ok(None) => Ok(None),
                Err(r) => Err(non_transversal(&r)),
            }
        }
    }
}

fn disc_data(c: &ComponentShape) -> (&Vec3, f64, Vec3) {
    match &c.kind {
        ShapeKind::Disc { center, radius, .. } => (center, *radius, c.disc_normal()),
        _ => unreachable!(),
    }
}

fn disc_segment_junction(
    disc: &ComponentShape,
    seg: &ComponentShape,
) -> Result<Option<Junction>, String> {
    let (c, r, n) = disc_data(disc);
    let (q0, q1) = match &seg.kind {
        ShapeKind::Segment { p0, p1 } => (*p0, *p1),
        _ => unreachable!(),
    };
    let dir = vec3::sub(q1, q0);
    let len = vec3::norm(dir);
    let cos_to_plane = vec3::dot(dir, n) / len; // sine of the angle to the plane
    if cos_to_plane.abs() < ANGLE_TOL {
        let offset = vec3::dot(vec3::sub(q0, *c), n).abs();
        if offset <= LOCUS_TOL && disc.dist_segment(q0, q1) <= LOCUS_TOL {
            return Err("segment tangent to (or contained in) the disc plane".into());
        }
        return Ok(None);
    }
    let t = vec3::dot(vec3::sub(*c, q0), n) / vec3::dot(dir, n);
    if t * len < -LOCUS_TOL || (t - 1.0) * len > LOCUS_TOL {
        return Ok(None);
    }
    let p = vec3::add(q0, vec3::scale(dir, t));
    let rho = vec3::dist(p, *c);
    if rho > r + LOCUS_TOL {
        return Ok(None);
    }
    if (rho - r).abs() <= LOCUS_TOL {
        return Err("segment crosses the disc rim".into());
    }
    if (t * len).abs() <= LOCUS_TOL || ((t - 1.0) * len).abs() <= LOCUS_TOL {
        return Err("segment endpoint lies in the disc interior".into());
    }
    Ok(Some(Junction {
        comp_a: disc.id,
        comp_b: seg.id,
        locus: JunctionLocus::Point(p),
        coupled: false,
    }))
}

/// Exact junction loci for all component pairs.
pub fn compute_junctions(
    components: &[ComponentShape],
) -> Result<Vec<Junction>, GeometryError> {
    let mut junctions = Vec::new();
    for i in 0..components.len() {
        for j in (i + 1)..components.len() {
            if let Some(junction) = pair_junction(&components[i], &components[j])? {
                junctions.push(junction);
            }
        }
    }
    Ok(junctions)
}

/// Validate a raw component list: well-formed shapes, transversal pairwise
/// intersections, no triple intersections, boundaries disjoint from other
/// components' interiors.
pub fn validate_structure(
    components: Vec<ComponentShape>,
) -> Result<ValidatedStructure, GeometryError> {
    if components.is_empty() {
        return Err(GeometryError::MalformedShape {
            component: 0,
            reason: "structure needs at least one component".into(),
        });
    }
    for (idx, c) in components.iter().enumerate() {
        if c.id != idx {
            return Err(GeometryError::MalformedShape {
                component: c.id,
                reason: format!("component id {} does not match its position {}", c.id, idx),
            });
        }
        check_shape(c)?;
    }
    let junctions = compute_junctions(&components)?;
    // Condition against triple intersections: no junction locus may touch a
    // third component.
    for j in &junctions {
        for third in &components {
            if third.id == j.comp_a || third.id == j.comp_b {
                continue;
            }
            let (d, probe) = match &j.locus {
                JunctionLocus::Point(p) => (third.dist_point(*p), *p),
                JunctionLocus::Curve { a, b } => (third.dist_segment(*a, *b), *a),
            };
            if d <= LOCUS_TOL {
                return Err(GeometryError::TripleIntersection {
                    comps: (j.comp_a, j.comp_b, third.id),
                    point: probe,
                });
            }
        }
    }
    let total_measure = components.iter().map(|c| c.measure()).sum();
    Ok(ValidatedStructure {
        components,
        junctions,
        total_measure,
    })
}

/// Connected components of the coupled-junction graph, ordered by smallest
/// member id; members sorted ascending.
pub fn coupling_classes(structure: &ValidatedStructure) -> KernelClasses {
    let n = structure.components.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for j in &structure.junctions {
        if j.coupled {
            let (ra, rb) = (find(&mut parent, j.comp_a), find(&mut parent, j.comp_b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut root_to_class: std::collections::BTreeMap<usize, usize> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        let entry = root_to_class.entry(root).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[*entry].push(i);
    }
    classes.sort_by_key(|c| c[0]);
    KernelClasses { classes }
}

impl ValidatedStructure {
    pub fn component(&self, id: usize) -> &ComponentShape {
        &self.components[id]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn crossing_segments() -> Vec<ComponentShape> {
        vec![
            ComponentShape::segment(0, [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ComponentShape::segment(1, [0.0, -1.0, 0.0], [0.0, 1.0, 0.0]),
        ]
    }

    pub(crate) fn crossing_discs() -> Vec<ComponentShape> {
        vec![
            ComponentShape::disc(0, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            ComponentShape::disc(1, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
        ]
    }

    #[test]
    fn crossing_segments_couple_at_origin() {
        let s = validate_structure(crossing_segments()).unwrap();
        assert_eq!(s.junctions.len(), 1);
        let j = &s.junctions[0];
        assert!(j.coupled);
        match j.locus {
            JunctionLocus::Point(p) => assert!(vec3::norm(p) < 1e-12),
            _ => panic!("expected a point junction"),
        }
        assert!((s.total_measure - 4.0).abs() < 1e-12);
        assert_eq!(coupling_classes(&s).classes, vec![vec![0, 1]]);
    }

    #[test]
    fn single_disc_is_valid() {
        let s = validate_structure(vec![ComponentShape::disc(
            0,
            [0.0; 3],
            1.0,
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        )])
        .unwrap();
        assert!(s.junctions.is_empty());
        assert_eq!(coupling_classes(&s).d(), 1);
        assert!((s.total_measure - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn crossing_discs_share_the_x_axis_chord() {
        let s = validate_structure(crossing_discs()).unwrap();
        assert_eq!(s.junctions.len(), 1);
        let j = &s.junctions[0];
        assert!(j.coupled);
        match &j.locus {
            JunctionLocus::Curve { a, b } => {
                let (mut lo, mut hi) = (a[0], b[0]);
                if lo > hi {
                    std::mem::swap(&mut lo, &mut hi);
                }
                assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
                assert!(a[1].abs() < 1e-12 && a[2].abs() < 1e-12);
            }
            _ => panic!("expected a curve junction"),
        }
        assert_eq!(coupling_classes(&s).d(), 1);
    }

    #[test]
    fn three_discs_sharing_a_chord_is_a_triple_intersection() {
        let inv_sqrt2 = 0.5f64.sqrt();
        let comps = vec![
            ComponentShape::disc(0, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            ComponentShape::disc(1, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
            ComponentShape::disc(
                2,
                [0.0; 3],
                1.0,
                [[1.0, 0.0, 0.0], [0.0, inv_sqrt2, inv_sqrt2]],
            ),
        ];
        match validate_structure(comps) {
            Err(GeometryError::TripleIntersection { .. }) => {}
            other => panic!("expected TripleIntersection, got {:?}", other),
        }
    }

    #[test]
    fn disc_with_transversal_segment_is_uncoupled() {
        let comps = vec![
            ComponentShape::disc(0, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            ComponentShape::segment(1, [0.0, 0.0, -1.0], [0.0, 0.0, 1.0]),
        ];
        let s = validate_structure(comps).unwrap();
        assert_eq!(s.junctions.len(), 1);
        let j = &s.junctions[0];
        assert!(!j.coupled);
        match j.locus {
            JunctionLocus::Point(p) => assert!(vec3::norm(p) < 1e-12),
            _ => panic!("expected point junction"),
        }
        assert_eq!(coupling_classes(&s).d(), 2);
    }

    #[test]
    fn parallel_disjoint_segments_have_no_junction() {
        let comps = vec![
            ComponentShape::segment(0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ComponentShape::segment(1, [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]),
        ];
        let s = validate_structure(comps).unwrap();
        assert!(s.junctions.is_empty());
        assert_eq!(coupling_classes(&s).d(), 2);
    }

    #[test]
    fn parallel_overlapping_segments_are_rejected() {
        let comps = vec![
            ComponentShape::segment(0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ComponentShape::segment(1, [0.5, 0.0, 0.0], [1.5, 0.0, 0.0]),
        ];
        assert!(matches!(
            validate_structure(comps),
            Err(GeometryError::NonTransversal { .. })
        ));
    }

    #[test]
    fn rim_crossing_and_offset_discs_are_rejected() {
        // Smaller disc whose rim pokes into the bigger one.
        let comps = vec![
            ComponentShape::disc(0, [0.0; 3], 2.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            ComponentShape::disc(1, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
        ];
        assert!(matches!(
            validate_structure(comps),
            Err(GeometryError::NonTransversal { .. })
        ));
        // Segment crossing the rim of a disc.
        let comps = vec![
            ComponentShape::disc(0, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            ComponentShape::segment(1, [1.0, 0.0, -1.0], [1.0, 0.0, 1.0]),
        ];
        assert!(matches!(
            validate_structure(comps),
            Err(GeometryError::NonTransversal { .. })
        ));
    }

    #[test]
    fn malformed_shapes_are_rejected() {
        assert!(matches!(
            validate_structure(vec![ComponentShape::segment(0, [0.0; 3], [0.0; 3])]),
            Err(GeometryError::MalformedShape { .. })
        ));
        assert!(matches!(
            validate_structure(vec![ComponentShape::disc(
                0,
                [0.0; 3],
                1.0,
                [[1.0, 0.0, 0.0], [0.1, 1.0, 0.0]],
            )]),
            Err(GeometryError::MalformedShape { .. })
        ));
        assert!(validate_structure(vec![]).is_err());
    }

    #[test]
    fn relabeling_preserves_partition() {
        // disc + segment + a second disc crossing the first: classes {disc0, disc2}, {seg1}
        let comps = vec![
            ComponentShape::disc(0, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            ComponentShape::segment(1, [0.3, 0.2, -1.0], [0.3, 0.2, 1.0]),
            ComponentShape::disc(2, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
        ];
        let s = validate_structure(comps).unwrap();
        let classes = coupling_classes(&s);
        assert_eq!(classes.classes, vec![vec![0, 2], vec![1]]);

        // Swap ids 0 <-> 2: same partition up to renaming.
        let comps = vec![
            ComponentShape::disc(0, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
            ComponentShape::segment(1, [0.3, 0.2, -1.0], [0.3, 0.2, 1.0]),
            ComponentShape::disc(2, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        ];
        let s = validate_structure(comps).unwrap();
        let classes = coupling_classes(&s);
        assert_eq!(classes.classes, vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn junction_loci_lie_on_both_components() {
        for comps in [crossing_segments(), crossing_discs()] {
            let s = validate_structure(comps).unwrap();
            for j in &s.junctions {
                for id in [j.comp_a, j.comp_b] {
                    let c = s.component(id);
                    let d = match &j.locus {
                        JunctionLocus::Point(p) => c.dist_point(*p),
                        JunctionLocus::Curve { a, b } => {
                            c.dist_point(*a).max(c.dist_point(*b))
                        }
                    };
                    assert!(d <= LOCUS_TOL, "locus off component: {}", d);
                }
            }
        }
    }
}
