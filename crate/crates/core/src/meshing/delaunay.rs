//! Incremental Bowyer-Watson Delaunay triangulation in the plane, with
//! point location by walking. Used by the disc mesher; the insertion order
//! is the caller's, so results are deterministic.

#[derive(Debug, Clone)]
struct Tri {
    v: [usize; 3],
    /// adj[i] is the triangle across the edge opposite vertex i.
    adj: [Option<usize>; 3],
    alive: bool,
}

pub struct Delaunay {
    points: Vec<[f64; 2]>,
    tris: Vec<Tri>,
    last_alive: usize,
    scale: f64,
}

fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    // positive when d lies inside the circumcircle of ccw triangle (a, b, c)
    let (ax, ay) = (a[0] - d[0], a[1] - d[1]);
    let (bx, by) = (b[0] - d[0], b[1] - d[1]);
    let (cx, cy) = (c[0] - d[0], c[1] - d[1]);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
}

impl Delaunay {
    /// Start with a super-triangle comfortably containing the given
    /// bounding box.
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        let cx = 0.5 * (min[0] + max[0]);
        let cy = 0.5 * (min[1] + max[1]);
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-12);
        let r = 20.0 * span;
        let points = vec![
            [cx - 2.0 * r, cy - r],
            [cx + 2.0 * r, cy - r],
            [cx, cy + 2.0 * r],
        ];
        let tris = vec![Tri {
            v: [0, 1, 2],
            adj: [None, None, None],
            alive: true,
        }];
        Delaunay {
            points,
            tris,
            last_alive: 0,
            scale: span,
        }
    }

    fn locate(&self, p: [f64; 2]) -> usize {
        let mut current = self.last_alive;
        if !self.tris[current].alive {
            current = self
                .tris
                .iter()
                .position(|t| t.alive)
                .expect("no alive triangle");
        }
        let cap = 4 * self.tris.len() + 16;
        for _ in 0..cap {
            let t = &self.tris[current];
            let [a, b, c] = t.v;
            let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
            // Opposite vertex 0 is edge (b, c), etc.
            let tests = [
                orient2d(pb, pc, p),
                orient2d(pc, pa, p),
                orient2d(pa, pb, p),
            ];
            let mut moved = false;
            for (i, &o) in tests.iter().enumerate() {
                if o < 0.0 {
                    if let Some(next) = t.adj[i] {
                        current = next;
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                return current;
            }
        }
        // Walking failed (should not happen for interior points); take the
        // first alive triangle that contains p, with a little slack for
        // points sitting on edges.
        let tol = -1e-12 * self.scale * self.scale;
        for (i, t) in self.tris.iter().enumerate() {
            if !t.alive {
                continue;
            }
            let [a, b, c] = t.v;
            let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
            if orient2d(pb, pc, p) >= tol && orient2d(pc, pa, p) >= tol && orient2d(pa, pb, p) >= tol {
                return i;
            }
        }
        panic!("point outside triangulation");
    }

    /// Insert a point, returning its index.
    pub fn insert(&mut self, p: [f64; 2]) -> usize {
        let pi = self.points.len();
        self.points.push(p);

        let seed = self.locate(p);
        // Seed the cavity; when p is (numerically) on an edge, include the
        // triangle across it so the retriangulation stays non-degenerate.
        let mut cavity: Vec<usize> = vec![seed];
        let edge_tol = 1e-12 * self.scale * self.scale;
        {
            let t = self.tris[seed].clone();
            let [a, b, c] = t.v;
            let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
            let tests = [
                orient2d(pb, pc, p),
                orient2d(pc, pa, p),
                orient2d(pa, pb, p),
            ];
            for (i, &o) in tests.iter().enumerate() {
                if o.abs() <= edge_tol {
                    if let Some(n) = t.adj[i] {
                        if !cavity.contains(&n) {
                            cavity.push(n);
                        }
                    }
                }
            }
        }
        // Grow the cavity over in-circumcircle neighbors.
        let mut stack = cavity.clone();
        while let Some(ti) = stack.pop() {
            let adj = self.tris[ti].adj;
            for n in adj.into_iter().flatten() {
                if cavity.contains(&n) {
                    continue;
                }
                let [a, b, c] = self.tris[n].v;
                if incircle(self.points[a], self.points[b], self.points[c], p) > 0.0 {
                    cavity.push(n);
                    stack.push(n);
                }
            }
        }

        // Oriented boundary edges of the cavity (ccw), with their outside
        // neighbors.
        let mut boundary: Vec<(usize, usize, Option<usize>)> = Vec::new();
        for &ti in &cavity {
            let t = &self.tris[ti];
            for i in 0..3 {
                let (e0, e1) = (t.v[(i + 1) % 3], t.v[(i + 2) % 3]);
                match t.adj[i] {
                    Some(n) if cavity.contains(&n) => {}
                    outside => boundary.push((e0, e1, outside)),
                }
            }
        }
        for &ti in &cavity {
            self.tris[ti].alive = false;
        }

        // Fan of new triangles around p.
        let base = self.tris.len();
        let mut start_of: std::collections::BTreeMap<usize, usize> = Default::default();
        for (offset, &(e0, _e1, _)) in boundary.iter().enumerate() {
            start_of.insert(e0, base + offset);
        }
        for &(e0, e1, outside) in &boundary {
            // vertices ordered (p, e0, e1): ccw because the boundary is ccw
            // around the star-shaped cavity
            let adj_outside = outside;
            let next = *start_of.get(&e1).expect("open cavity boundary");
            self.tris.push(Tri {
                v: [pi, e0, e1],
                // edge opposite p = (e0, e1) -> outside neighbor
                // edge opposite e0 = (e1, p) -> triangle starting at e1
                // edge opposite e1 = (p, e0) -> triangle ending at e0
                adj: [adj_outside, Some(next), None],
                alive: true,
            });
        }
        // Fill the "previous" adjacency and patch outside triangles.
        for (offset, &(e0, _e1, outside)) in boundary.iter().enumerate() {
            let idx = base + offset;
            // triangle whose e1 equals this e0 is the previous one
            let prev = boundary
                .iter()
                .position(|&(_, b1, _)| b1 == e0)
                .map(|o| base + o)
                .expect("open cavity boundary");
            self.tris[idx].adj[2] = Some(prev);
            if let Some(out) = outside {
                for i in 0..3 {
                    let shares_dead_edge = match self.tris[out].adj[i] {
                        Some(n) => !self.tris[n].alive,
                        None => false,
                    };
                    if shares_dead_edge {
                        // edge shared with a removed cavity triangle; confirm
                        // it's the (e0, e1) edge before rewiring
                        let (a, b) = (self.tris[out].v[(i + 1) % 3], self.tris[out].v[(i + 2) % 3]);
                        if (a == _e1 && b == e0) || (a == e0 && b == _e1) {
                            self.tris[out].adj[i] = Some(idx);
                        }
                    }
                }
            }
        }
        self.last_alive = base;
        pi
    }

    #[cfg(test)]
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Final triangles over the real points (super-triangle corners 0..3
    /// stripped, indices shifted down by 3).
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for t in &self.tris {
            if !t.alive {
                continue;
            }
            if t.v.iter().any(|&v| v < 3) {
                continue;
            }
            out.push([t.v[0] - 3, t.v[1] - 3, t.v[2] - 3]);
        }
        out
    }

    /// Undirected edge set over real points (shifted like `triangles`).
    pub fn edges(&self) -> std::collections::BTreeSet<(usize, usize)> {
        let mut set = std::collections::BTreeSet::new();
        for t in self.triangles() {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(points: &[[f64; 2]]) -> Delaunay {
        let mut d = Delaunay::new([-2.0, -2.0], [2.0, 2.0]);
        for &p in points {
            d.insert(p);
        }
        d
    }

    #[test]
    fn square_with_center_gives_four_triangles() {
        let d = build(&[
            [0.0, 0.0],
            [1.0, 0.01],
            [1.01, 1.0],
            [0.0, 1.02],
            [0.5, 0.5],
        ]);
        let tris = d.triangles();
        assert_eq!(tris.len(), 4);
        // total area equals the quad area
        let pts = d.points();
        let area: f64 = tris
            .iter()
            .map(|t| {
                0.5 * orient2d(pts[t[0] + 3], pts[t[1] + 3], pts[t[2] + 3]).abs()
            })
            .sum();
        let quad = 0.5
            * ((orient2d([0.0, 0.0], [1.0, 0.01], [1.01, 1.0])).abs()
                + (orient2d([0.0, 0.0], [1.01, 1.0], [0.0, 1.02])).abs());
        assert!((area - quad).abs() < 1e-12);
    }

    #[test]
    fn delaunay_property_on_a_jittered_grid() {
        let mut points = Vec::new();
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for i in 0..12 {
            for j in 0..12 {
                points.push([
                    i as f64 / 11.0 + 1e-5 * next(),
                    j as f64 / 11.0 + 1e-5 * next(),
                ]);
            }
        }
        let d = build(&points);
        let tris = d.triangles();
        let pts: Vec<[f64; 2]> = d.points()[3..].to_vec();
        // Empty-circumcircle check on a sample of triangles x points.
        for t in tris.iter().step_by(7) {
            for (pi, &p) in pts.iter().enumerate() {
                if t.contains(&pi) {
                    continue;
                }
                let v = incircle(pts[t[0]], pts[t[1]], pts[t[2]], p);
                assert!(
                    v <= 1e-9,
                    "point {} strictly inside circumcircle of {:?}: {}",
                    pi,
                    t,
                    v
                );
            }
        }
        // Euler sanity: every interior edge shared by exactly two triangles.
        let mut edge_count: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
        for t in &tris {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        assert!(edge_count.values().all(|&c| c <= 2));
    }

    #[test]
    fn collinear_insertion_on_existing_edge_survives() {
        // Insert three collinear points in left-to-right order plus off-line
        // points; then one directly on an existing edge.
        let d = build(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [0.5, 0.8],
            [0.5, -0.8],
            [0.5, 0.0], // exactly on edge (0, 1)
        ]);
        let tris = d.triangles();
        let pts = d.points();
        for t in &tris {
            let area = 0.5 * orient2d(pts[t[0] + 3], pts[t[1] + 3], pts[t[2] + 3]);
            assert!(area > 1e-12, "degenerate triangle {:?} area {}", t, area);
        }
        // five points, four on the hull: 2n - h - 2 = 4 triangles
        assert_eq!(tris.len(), 4);
    }
}
