//! Junction-conforming simplicial meshes over validated structures, with a
//! global DOF map realizing the coupling pattern: nodes of two components
//! share a degree of freedom exactly when they coincide on a coupled
//! junction.

mod delaunay;

use thiserror::Error;

use crate::geometry::{
    coupling_classes, ComponentShape, JunctionLocus, KernelClasses, ShapeKind, ValidatedStructure,
    LOCUS_TOL,
};
use crate::vec3::{self, Vec3};

/// Nodal coefficient vector over the global DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField(pub Vec<f64>);

impl DiscreteField {
    pub fn zeros(n: usize) -> Self {
        DiscreteField(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Line([usize; 2]),
    Tri([usize; 3]),
}

#[derive(Debug, Clone)]
pub struct ComponentMesh {
    pub component_id: usize,
    /// Ambient positions; junction nodes carry the canonical shared
    /// coordinates bit-for-bit.
    pub nodes_r3: Vec<Vec3>,
    /// Component-local coordinates: segments use [centered arclength, 0],
    /// discs their frame coordinates.
    pub local: Vec<[f64; 2]>,
    pub elements: Vec<Element>,
    pub boundary_nodes: Vec<usize>,
    /// (local node, junction index) incidences recorded by construction.
    pub junction_tags: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub structure: ValidatedStructure,
    pub classes: KernelClasses,
    pub components: Vec<ComponentMesh>,
    /// dof[c][local] is the global DOF of a component-local node.
    pub dof: Vec<Vec<usize>>,
    pub n_dofs: usize,
    pub h: f64,
}

#[derive(Debug, Clone, Error)]
pub enum MeshError {
    #[error("h = {h} violates 0 < h <= min component diameter / 4 = {max_h}")]
    InvalidH { h: f64, max_h: f64 },
    #[error("component {component}: triangulation quality below the 20 degree floor (got {min_angle_deg:.2})")]
    MeshQualityFailure { component: usize, min_angle_deg: f64 },
    #[error("junction {junction}: chord could not be resolved by element edges")]
    JunctionResolutionFailure { junction: usize },
    #[error("interpolated function jumps across coupled junction at dof {dof}: {a} vs {b}")]
    JunctionMismatch { dof: usize, a: f64, b: f64 },
    #[error("sampled function not finite on component {component}")]
    NonFiniteSample { component: usize },
}

// ---------------------------------------------------------------------------
// segments

fn mesh_segment(
    comp: &ComponentShape,
    junction_points: &[(usize, Vec3)],
    h: f64,
) -> ComponentMesh {
    let (p0, p1) = match comp.kind {
        ShapeKind::Segment { p0, p1 } => (p0, p1),
        _ => unreachable!(),
    };
    let length = vec3::dist(p0, p1);
    let span = vec3::sub(p1, p0);
    let len2 = vec3::dot(span, span);

    // breakpoints in parameter space, endpoints plus exact junction points
    let mut breaks: Vec<(f64, Option<(usize, Vec3)>)> = vec![(0.0, None), (1.0, None)];
    for (jidx, p) in junction_points {
        let t = vec3::dot(vec3::sub(*p, p0), span) / len2;
        breaks.push((t, Some((*jidx, *p))));
    }
    breaks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut params: Vec<(f64, Option<(usize, Vec3)>)> = Vec::new();
    for w in 0..breaks.len() {
        let (t, tag) = breaks[w];
        params.push((t, tag));
        if w + 1 < breaks.len() {
            let t_next = breaks[w + 1].0;
            let gap = (t_next - t) * length;
            let subs = (gap / h).ceil().max(1.0) as usize;
            for k in 1..subs {
                params.push((t + (t_next - t) * k as f64 / subs as f64, None));
            }
        }
    }

    let mut nodes_r3 = Vec::with_capacity(params.len());
    let mut local = Vec::with_capacity(params.len());
    let mut junction_tags = Vec::new();
    for (i, (t, tag)) in params.iter().enumerate() {
        let pos = match tag {
            Some((jidx, p)) => {
                junction_tags.push((i, *jidx));
                *p
            }
            None => {
                if *t == 0.0 {
                    p0
                } else if *t == 1.0 {
                    p1
                } else {
                    vec3::add(p0, vec3::scale(span, *t))
                }
            }
        };
        nodes_r3.push(pos);
        local.push([(t - 0.5) * length, 0.0]);
    }
    let elements = (0..params.len() - 1)
        .map(|i| Element::Line([i, i + 1]))
        .collect();
    ComponentMesh {
        component_id: comp.id,
        nodes_r3,
        local,
        elements,
        boundary_nodes: vec![0, params.len() - 1],
        junction_tags,
    }
}

// ---------------------------------------------------------------------------
// discs

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn jitter_unit(seed: u64) -> f64 {
    ((splitmix64(seed) >> 11) as f64 / (1u64 << 53) as f64) - 0.5
}

fn dist2d_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn tri_area2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn tri_min_angle_deg(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let e = [
        ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt(),
        ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt(),
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt(),
    ];
    let mut min_angle = f64::MAX;
    for i in 0..3 {
        let (opp, s1, s2) = (e[i], e[(i + 1) % 3], e[(i + 2) % 3]);
        let cosv = ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0);
        min_angle = min_angle.min(cosv.acos());
    }
    min_angle.to_degrees()
}

struct DiscNode {
    frame: [f64; 2],
    /// canonical ambient position for constrained junction nodes
    canonical: Option<Vec3>,
    junction: Option<usize>,
    fixed: bool,
}

fn mesh_disc(
    comp: &ComponentShape,
    chords: &[(usize, Vec<Vec3>)],
    h: f64,
) -> Result<ComponentMesh, MeshError> {
    let (center, radius, frame) = match &comp.kind {
        ShapeKind::Disc { center, radius, frame } => (*center, *radius, *frame),
        _ => unreachable!(),
    };
    let to_frame = |p: Vec3| -> [f64; 2] {
        let d = vec3::sub(p, center);
        [vec3::dot(d, frame[0]), vec3::dot(d, frame[1])]
    };

    // In-plane chord polylines (straight segments).
    let chord_frames: Vec<([f64; 2], [f64; 2])> = chords
        .iter()
        .map(|(_, pts)| (to_frame(pts[0]), to_frame(*pts.last().unwrap())))
        .collect();

    for margin_factor in [0.55, 0.75, 0.95] {
        match try_mesh_disc(comp, chords, &chord_frames, h, margin_factor, center, radius, frame) {
            Ok(mesh) => return Ok(mesh),
            Err(_) if margin_factor < 0.95 => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

#[allow(clippy::too_many_arguments)]
fn try_mesh_disc(
    comp: &ComponentShape,
    chords: &[(usize, Vec<Vec3>)],
    chord_frames: &[([f64; 2], [f64; 2])],
    h: f64,
    margin_factor: f64,
    center: Vec3,
    radius: f64,
    frame: [Vec3; 2],
) -> Result<ComponentMesh, MeshError> {
    let margin = margin_factor * h;
    let to_frame = |p: Vec3| -> [f64; 2] {
        let d = vec3::sub(p, center);
        [vec3::dot(d, frame[0]), vec3::dot(d, frame[1])]
    };

    let mut nodes: Vec<DiscNode> = Vec::new();

    // Interior lattice: equilateral rows, tiny deterministic jitter, kept
    // clear of the rim and all chords.
    let dy = h * 3f64.sqrt() / 2.0;
    let j_max = (radius / dy).ceil() as i64 + 1;
    let i_max = (radius / h).ceil() as i64 + 1;
    for j in -j_max..=j_max {
        let v = j as f64 * dy;
        let offset = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -i_max..=i_max {
            let u = i as f64 * h + offset;
            let seed = (comp.id as u64) << 40 ^ ((j + j_max) as u64) << 20 ^ (i + i_max) as u64;
            let p = [
                u + 2e-6 * h * jitter_unit(seed),
                v + 2e-6 * h * jitter_unit(seed ^ 0xabcdef),
            ];
            let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if rho > radius - margin {
                continue;
            }
            if chord_frames
                .iter()
                .any(|(a, b)| dist2d_point_segment(p, *a, *b) < margin)
            {
                continue;
            }
            nodes.push(DiscNode {
                frame: p,
                canonical: None,
                junction: None,
                fixed: false,
            });
        }
    }

    // Rim nodes: chord endpoints exactly, arcs filled uniformly.
    let mut rim_marks: Vec<(f64, Option<(usize, Vec3)>)> = Vec::new();
    for ((jidx, pts), _) in chords.iter().zip(chord_frames) {
        for endpoint in [pts[0], *pts.last().unwrap()] {
            let f = to_frame(endpoint);
            rim_marks.push((f[1].atan2(f[0]), Some((*jidx, endpoint))));
        }
    }
    rim_marks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let two_pi = 2.0 * std::f64::consts::PI;
    let rim_start = nodes.len();
    if rim_marks.is_empty() {
        let n = ((two_pi * radius / h).ceil() as usize).max(8);
        for k in 0..n {
            let ang = two_pi * k as f64 / n as f64;
            nodes.push(DiscNode {
                frame: [radius * ang.cos(), radius * ang.sin()],
                canonical: None,
                junction: None,
                fixed: true,
            });
        }
    } else {
        for m in 0..rim_marks.len() {
            let (ang, tag) = rim_marks[m];
            let (jidx, pos) = tag.unwrap();
            nodes.push(DiscNode {
                frame: to_frame(pos),
                canonical: Some(pos),
                junction: Some(jidx),
                fixed: true,
            });
            let ang_next = if m + 1 < rim_marks.len() {
                rim_marks[m + 1].0
            } else {
                rim_marks[0].0 + two_pi
            };
            let arc = (ang_next - ang) * radius;
            let subs = (arc / h).ceil().max(1.0) as usize;
            for k in 1..subs {
                let a = ang + (ang_next - ang) * k as f64 / subs as f64;
                nodes.push(DiscNode {
                    frame: [radius * a.cos(), radius * a.sin()],
                    canonical: None,
                    junction: None,
                    fixed: true,
                });
            }
        }
    }
    let rim_end = nodes.len();

    // Interior chord nodes (endpoints already on the rim).
    fn find_rim(nodes: &[DiscNode], range: (usize, usize), target: Vec3) -> usize {
        (range.0..range.1)
            .find(|&i| nodes[i].canonical == Some(target))
            .expect("chord endpoint missing from rim")
    }
    let mut chord_sequences: Vec<(usize, Vec<usize>)> = Vec::new();
    for ((jidx, pts), _) in chords.iter().zip(chord_frames) {
        let start_idx = find_rim(&nodes, (rim_start, rim_end), pts[0]);
        let end_idx = find_rim(&nodes, (rim_start, rim_end), *pts.last().unwrap());
        let mut seq = Vec::with_capacity(pts.len());
        seq.push(start_idx);
        for p in &pts[1..pts.len() - 1] {
            seq.push(nodes.len());
            nodes.push(DiscNode {
                frame: to_frame(*p),
                canonical: Some(*p),
                junction: Some(*jidx),
                fixed: true,
            });
        }
        seq.push(end_idx);
        chord_sequences.push((*jidx, seq));
    }

    // Triangulate.
    let pad = 0.1 * radius;
    let mut tri = delaunay::Delaunay::new(
        [-radius - pad, -radius - pad],
        [radius + pad, radius + pad],
    );
    for node in &nodes {
        tri.insert(node.frame);
    }
    let edges = tri.edges();
    for (jidx, seq) in &chord_sequences {
        for w in seq.windows(2) {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            if !edges.contains(&key) {
                return Err(MeshError::JunctionResolutionFailure { junction: *jidx });
            }
        }
    }
    let triangles = tri.triangles();

    // Laplacian smoothing of the free interior nodes, fixed topology.
    let mut coords: Vec<[f64; 2]> = nodes.iter().map(|n| n.frame).collect();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (a, b) in &edges {
        neighbors[*a].push(*b);
        neighbors[*b].push(*a);
    }
    for _ in 0..8 {
        let snapshot = coords.clone();
        for (i, node) in nodes.iter().enumerate() {
            if node.fixed || neighbors[i].is_empty() {
                continue;
            }
            let mut avg = [0.0, 0.0];
            for &nb in &neighbors[i] {
                avg[0] += snapshot[nb][0];
                avg[1] += snapshot[nb][1];
            }
            let inv = 1.0 / neighbors[i].len() as f64;
            coords[i][0] += 0.7 * (avg[0] * inv - coords[i][0]);
            coords[i][1] += 0.7 * (avg[1] * inv - coords[i][1]);
        }
    }

    // Area compensation: scale the unconstrained rim nodes radially so the
    // triangulated area integrates to the exact disc area. Chord endpoints
    // stay pinned to keep cross-component node matching exact.
    let target = std::f64::consts::PI * radius * radius;
    let mut is_free_rim = vec![false; nodes.len()];
    for i in rim_start..rim_end {
        if nodes[i].junction.is_none() {
            is_free_rim[i] = true;
        }
    }
    let total_area = |coords: &[[f64; 2]], scale: f64| -> f64 {
        let pos = |i: usize| -> [f64; 2] {
            if is_free_rim[i] {
                [coords[i][0] * scale, coords[i][1] * scale]
            } else {
                coords[i]
            }
        };
        triangles
            .iter()
            .map(|t| 0.5 * tri_area2(pos(t[0]), pos(t[1]), pos(t[2])))
            .sum()
    };
    if is_free_rim.iter().any(|&f| f) {
        let (mut lo, mut hi) = (1.0f64, 1.5f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if total_area(&coords, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        for (i, free) in is_free_rim.iter().enumerate() {
            if *free {
                coords[i][0] *= s;
                coords[i][1] *= s;
            }
        }
    }

    // Quality gate.
    let mut min_angle = f64::MAX;
    for t in &triangles {
        if tri_area2(coords[t[0]], coords[t[1]], coords[t[2]]) <= 0.0 {
            return Err(MeshError::MeshQualityFailure {
                component: comp.id,
                min_angle_deg: 0.0,
            });
        }
        min_angle = min_angle.min(tri_min_angle_deg(coords[t[0]], coords[t[1]], coords[t[2]]));
    }
    if min_angle < 20.0 {
        return Err(MeshError::MeshQualityFailure {
            component: comp.id,
            min_angle_deg: min_angle,
        });
    }

    // Emit.
    let mut nodes_r3 = Vec::with_capacity(nodes.len());
    let mut local = Vec::with_capacity(nodes.len());
    let mut junction_tags = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        let r3 = match node.canonical {
            Some(p) => p,
            None => vec3::add(
                center,
                vec3::add(
                    vec3::scale(frame[0], coords[i][0]),
                    vec3::scale(frame[1], coords[i][1]),
                ),
            ),
        };
        nodes_r3.push(r3);
        local.push(coords[i]);
        if let Some(j) = node.junction {
            junction_tags.push((i, j));
        }
    }
    let elements = triangles.into_iter().map(Element::Tri).collect();
    let boundary_nodes = (rim_start..rim_end).collect();
    Ok(ComponentMesh {
        component_id: comp.id,
        nodes_r3,
        local,
        elements,
        boundary_nodes,
        junction_tags,
    })
}

// ---------------------------------------------------------------------------
// build + dof map

/// Build junction-conforming meshes for every component and merge DOFs on
/// coupled junctions. Deterministic for fixed inputs.
pub fn build_mesh(structure: &ValidatedStructure, h: f64) -> Result<Mesh, MeshError> {
    let min_diam = structure
        .components
        .iter()
        .map(|c| c.diameter())
        .fold(f64::MAX, f64::min);
    if !(h > 0.0) || h > min_diam / 4.0 {
        return Err(MeshError::InvalidH {
            h,
            max_h: min_diam / 4.0,
        });
    }
    let classes = coupling_classes(structure);

    // Canonical junction discretizations, built once and shared.
    let mut chord_nodes: Vec<Option<Vec<Vec3>>> = Vec::new();
    for j in &structure.junctions {
        match &j.locus {
            JunctionLocus::Curve { a, b } => {
                let len = vec3::dist(*a, *b);
                let subs = (len / h).ceil().max(1.0) as usize;
                let pts = (0..=subs)
                    .map(|k| {
                        if k == 0 {
                            *a
                        } else if k == subs {
                            *b
                        } else {
                            vec3::add(*a, vec3::scale(vec3::sub(*b, *a), k as f64 / subs as f64))
                        }
                    })
                    .collect();
                chord_nodes.push(Some(pts));
            }
            JunctionLocus::Point(_) => chord_nodes.push(None),
        }
    }

    let mut components = Vec::with_capacity(structure.components.len());
    for comp in &structure.components {
        match comp.kind {
            ShapeKind::Segment { .. } => {
                let mut points = Vec::new();
                for (jidx, j) in structure.junctions.iter().enumerate() {
                    if j.comp_a != comp.id && j.comp_b != comp.id {
                        continue;
                    }
                    if let JunctionLocus::Point(p) = j.locus {
                        points.push((jidx, p));
                    }
                }
                components.push(mesh_segment(comp, &points, h));
            }
            ShapeKind::Disc { .. } => {
                let mut chords = Vec::new();
                for (jidx, j) in structure.junctions.iter().enumerate() {
                    if j.comp_a != comp.id && j.comp_b != comp.id {
                        continue;
                    }
                    if let Some(pts) = &chord_nodes[jidx] {
                        chords.push((jidx, pts.clone()));
                    }
                }
                components.push(mesh_disc(comp, &chords, h)?);
            }
        }
    }

    // Merge nodes on coupled junctions by coordinate grouping (tolerance
    // LOCUS_TOL; constrained nodes carry bit-identical coordinates).
    let n_comps = components.len();
    let mut dof: Vec<Vec<usize>> = components
        .iter()
        .map(|c| vec![usize::MAX; c.nodes_r3.len()])
        .collect();
    // candidate nodes per coupled junction
    let mut merged_with: std::collections::BTreeMap<(usize, usize), (usize, usize)> =
        Default::default();
    for (jidx, j) in structure.junctions.iter().enumerate() {
        if !j.coupled {
            continue;
        }
        let mut tagged: Vec<(usize, usize, Vec3)> = Vec::new();
        for comp_mesh in &components {
            if comp_mesh.component_id != j.comp_a && comp_mesh.component_id != j.comp_b {
                continue;
            }
            for &(local, tag_j) in &comp_mesh.junction_tags {
                if tag_j == jidx {
                    tagged.push((comp_mesh.component_id, local, comp_mesh.nodes_r3[local]));
                }
            }
        }
        tagged.sort_by(|a, b| {
            (a.2[0], a.2[1], a.2[2], a.0, a.1)
                .partial_cmp(&(b.2[0], b.2[1], b.2[2], b.0, b.1))
                .unwrap()
        });
        let mut used = vec![false; tagged.len()];
        for i in 0..tagged.len() {
            if used[i] {
                continue;
            }
            let mut cluster = vec![i];
            for k in (i + 1)..tagged.len() {
                if used[k] {
                    continue;
                }
                if vec3::dist(tagged[i].2, tagged[k].2) <= LOCUS_TOL {
                    cluster.push(k);
                    used[k] = true;
                }
            }
            let owner = (tagged[cluster[0]].0, tagged[cluster[0]].1);
            for &k in &cluster[1..] {
                merged_with.insert((tagged[k].0, tagged[k].1), owner);
            }
        }
    }
    // Resolve chains (a node merged into a node that is itself merged).
    let resolve = |mut key: (usize, usize),
                   map: &std::collections::BTreeMap<(usize, usize), (usize, usize)>|
     -> (usize, usize) {
        while let Some(&next) = map.get(&key) {
            key = next;
        }
        key
    };
    let mut n_dofs = 0usize;
    for c in 0..n_comps {
        for local in 0..components[c].nodes_r3.len() {
            let owner = resolve((components[c].component_id, local), &merged_with);
            if owner == (components[c].component_id, local) {
                dof[c][local] = n_dofs;
                n_dofs += 1;
            }
        }
    }
    for c in 0..n_comps {
        for local in 0..components[c].nodes_r3.len() {
            if dof[c][local] == usize::MAX {
                let owner = resolve((components[c].component_id, local), &merged_with);
                let owner_comp = components
                    .iter()
                    .position(|m| m.component_id == owner.0)
                    .unwrap();
                dof[c][local] = dof[owner_comp][owner.1];
            }
        }
    }

    Ok(Mesh {
        structure: structure.clone(),
        classes,
        components,
        dof,
        n_dofs,
        h,
    })
}

impl Mesh {
    /// Canonical ambient position per DOF (first owning node).
    pub fn dof_positions(&self) -> Vec<Vec3> {
        let mut pos = vec![[f64::NAN; 3]; self.n_dofs];
        for (c, mesh) in self.components.iter().enumerate() {
            for (local, &p) in mesh.nodes_r3.iter().enumerate() {
                let d = self.dof[c][local];
                if pos[d][0].is_nan() {
                    pos[d] = p;
                }
            }
        }
        pos
    }

    /// Kernel class index of each DOF. Shared DOFs only occur inside one
    /// class, so the assignment is well defined.
    pub fn dof_classes(&self) -> Vec<usize> {
        let mut cls = vec![usize::MAX; self.n_dofs];
        for (c, mesh) in self.components.iter().enumerate() {
            let class = self.classes.class_of(mesh.component_id);
            for local in 0..mesh.nodes_r3.len() {
                cls[self.dof[c][local]] = class;
            }
        }
        cls
    }

    /// Indicator field of one kernel class.
    pub fn class_indicator(&self, class: usize) -> DiscreteField {
        let cls = self.dof_classes();
        DiscreteField(
            (0..self.n_dofs)
                .map(|d| if cls[d] == class { 1.0 } else { 0.0 })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// Minimum triangle angle in degrees; absent for purely 1D meshes.
    pub min_angle_deg: Option<f64>,
    /// Worst longest/shortest edge ratio over all triangles (1.0 when none).
    pub max_aspect: f64,
    pub h_max: f64,
    pub n_dofs: usize,
}

pub fn mesh_quality(mesh: &Mesh) -> QualityReport {
    let mut min_angle: Option<f64> = None;
    let mut max_aspect: f64 = 1.0;
    let mut h_max: f64 = 0.0;
    for comp in &mesh.components {
        for el in &comp.elements {
            match el {
                Element::Line([a, b]) => {
                    h_max = h_max.max(vec3::dist(comp.nodes_r3[*a], comp.nodes_r3[*b]));
                }
                Element::Tri([a, b, c]) => {
                    let (pa, pb, pc) = (comp.local[*a], comp.local[*b], comp.local[*c]);
                    let angle = tri_min_angle_deg(pa, pb, pc);
                    min_angle = Some(min_angle.map_or(angle, |m: f64| m.min(angle)));
                    let e = [
                        ((pb[0] - pc[0]).powi(2) + (pb[1] - pc[1]).powi(2)).sqrt(),
                        ((pa[0] - pc[0]).powi(2) + (pa[1] - pc[1]).powi(2)).sqrt(),
                        ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt(),
                    ];
                    let longest = e.iter().cloned().fold(0.0f64, f64::max);
                    let shortest = e.iter().cloned().fold(f64::MAX, f64::min);
                    max_aspect = max_aspect.max(longest / shortest);
                    h_max = h_max.max(longest);
                }
            }
        }
    }
    QualityReport {
        min_angle_deg: min_angle,
        max_aspect,
        h_max,
        n_dofs: mesh.n_dofs,
    }
}

/// Nodal interpolation of a function given in component-local coordinates
/// (`component id, local [x, y], ambient position`). Values on coupled
/// junction nodes must agree across components to 1e-9.
pub fn interpolate(
    mesh: &Mesh,
    f: &dyn Fn(usize, [f64; 2], Vec3) -> f64,
) -> Result<DiscreteField, MeshError> {
    let mut values = vec![f64::NAN; mesh.n_dofs];
    for (c, comp) in mesh.components.iter().enumerate() {
        for (local, &pos) in comp.nodes_r3.iter().enumerate() {
            let v = f(comp.component_id, comp.local[local], pos);
            if !v.is_finite() {
                return Err(MeshError::NonFiniteSample {
                    component: comp.component_id,
                });
            }
            let d = mesh.dof[c][local];
            if values[d].is_nan() {
                values[d] = v;
            } else {
                let tol = 1e-9 * values[d].abs().max(v.abs()).max(1.0);
                if (values[d] - v).abs() > tol {
                    return Err(MeshError::JunctionMismatch {
                        dof: d,
                        a: values[d],
                        b: v,
                    });
                }
            }
        }
    }
    Ok(DiscreteField(values))
}
