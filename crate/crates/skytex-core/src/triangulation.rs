//! Planar Delaunay triangulation (Bowyer–Watson with ghost triangles).
//!
//! Hull edges are closed by "ghost" triangles sharing a vertex at infinity,
//! so no bounding super-triangle is needed and points on the hull are never
//! joined by slivers. Orientation uses raw coordinates with a relative
//! collinearity tolerance. Only the in-circle predicate is perturbed: exact
//! ties (cocircular quadruples, abundant on a perfect lattice) are resolved
//! by displacing every point by `1e-6·scale` in a direction keyed to its
//! index and a salt.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const GHOST: usize = usize::MAX;
const NONE: usize = usize::MAX;
const ORIENT_EPS: f64 = 1e-11;
const INCIRCLE_EPS: f64 = 1e-11;

/// A triangulation of a planar point set.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Number of points on the convex hull boundary, collinear ones included.
    pub hull_count: usize,
}

impl Triangulation {
    /// `T = 2N − 2 − H`, the triangle count of a triangulated point set
    /// whose every point is a vertex.
    pub fn euler_triangle_count(n_points: usize, hull_count: usize) -> usize {
        2 * n_points - 2 - hull_count
    }
}

#[derive(Clone, Copy)]
struct Tri {
    v: [usize; 3],
    n: [usize; 3],
    alive: bool,
}

impl Tri {
    fn ghost_slot(&self) -> Option<usize> {
        self.v.iter().position(|&x| x == GHOST)
    }

    /// For a ghost triangle, its hull edge in cyclic order.
    fn hull_edge(&self, slot: usize) -> (usize, usize) {
        (self.v[(slot + 1) % 3], self.v[(slot + 2) % 3])
    }
}

struct Mesh<'a> {
    p: &'a [(f64, f64)],
    tris: Vec<Tri>,
    perturb: Vec<(f64, f64)>,
}

fn orient_raw(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> (f64, f64) {
    let l = (b.0 - a.0) * (c.1 - a.1);
    let r = (b.1 - a.1) * (c.0 - a.0);
    (l - r, l.abs() + r.abs())
}

/// +1 counterclockwise, −1 clockwise, 0 collinear within tolerance.
fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> i32 {
    let (d, mag) = orient_raw(a, b, c);
    if d.abs() <= ORIENT_EPS * mag || d == 0.0 {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

fn incircle_raw(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> (f64, f64) {
    let (adx, ady) = (a.0 - d.0, a.1 - d.1);
    let (bdx, bdy) = (b.0 - d.0, b.1 - d.1);
    let (cdx, cdy) = (c.0 - d.0, c.1 - d.1);
    let (al, bl, cl) = (adx * adx + ady * ady, bdx * bdx + bdy * bdy, cdx * cdx + cdy * cdy);
    let t1 = al * (bdx * cdy - bdy * cdx);
    let t2 = bl * (cdx * ady - cdy * adx);
    let t3 = cl * (adx * bdy - ady * bdx);
    let mag = al * ((bdx * cdy).abs() + (bdy * cdx).abs())
        + bl * ((cdx * ady).abs() + (cdy * adx).abs())
        + cl * ((adx * bdy).abs() + (ady * bdx).abs());
    (t1 + t2 + t3, mag)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl<'a> Mesh<'a> {
    fn pt(&self, i: usize) -> (f64, f64) {
        self.p[i]
    }

    fn pert(&self, i: usize) -> (f64, f64) {
        (self.p[i].0 + self.perturb[i].0, self.p[i].1 + self.perturb[i].1)
    }

    /// Strictly inside the circumcircle of ccw `(a, b, c)`, ties resolved by
    /// the perturbed coordinates.
    fn in_circle(&self, a: usize, b: usize, c: usize, d: usize) -> bool {
        let (det, mag) = incircle_raw(self.pt(a), self.pt(b), self.pt(c), self.pt(d));
        if det.abs() > INCIRCLE_EPS * mag {
            return det > 0.0;
        }
        let (det, _) = incircle_raw(self.pert(a), self.pert(b), self.pert(c), self.pert(d));
        det > 0.0
    }

    fn strictly_between(&self, a: usize, b: usize, p: usize) -> bool {
        let (pa, pb, pp) = (self.pt(a), self.pt(b), self.pt(p));
        let (dx, dy) = (pb.0 - pa.0, pb.1 - pa.1);
        let s = (pp.0 - pa.0) * dx + (pp.1 - pa.1) * dy;
        s > 0.0 && s < dx * dx + dy * dy
    }

    fn conflicts(&self, t: usize, p: usize, strict_ties: bool) -> bool {
        let tri = &self.tris[t];
        match tri.ghost_slot() {
            Some(slot) => {
                let (a, b) = tri.hull_edge(slot);
                match orient(self.pt(a), self.pt(b), self.pt(p)) {
                    1 => true,
                    0 => self.strictly_between(a, b, p),
                    _ => false,
                }
            }
            None => {
                let [a, b, c] = tri.v;
                if strict_ties {
                    let (det, mag) = incircle_raw(self.pt(a), self.pt(b), self.pt(c), self.pt(p));
                    det > INCIRCLE_EPS * mag
                } else {
                    self.in_circle(a, b, c, p)
                }
            }
        }
    }

    fn contains(&self, t: usize, p: usize) -> bool {
        let tri = &self.tris[t];
        if tri.ghost_slot().is_some() {
            return false;
        }
        let [a, b, c] = tri.v;
        let pp = self.pt(p);
        orient(self.pt(a), self.pt(b), pp) >= 0
            && orient(self.pt(b), self.pt(c), pp) >= 0
            && orient(self.pt(c), self.pt(a), pp) >= 0
    }

    fn seed(&self, p: usize) -> Option<usize> {
        let alive = || (0..self.tris.len()).filter(|&t| self.tris[t].alive);
        alive()
            .find(|&t| self.contains(t, p))
            .or_else(|| alive().find(|&t| self.tris[t].ghost_slot().is_some() && self.conflicts(t, p, false)))
    }

    fn cavity(&self, seed: usize, p: usize, strict: bool) -> Vec<usize> {
        let mut visited = alloc::vec![false; self.tris.len()];
        let mut stack = alloc::vec![seed];
        let mut out = Vec::new();
        visited[seed] = true;
        while let Some(t) = stack.pop() {
            out.push(t);
            for &nb in &self.tris[t].n {
                if nb == NONE || visited[nb] {
                    continue;
                }
                visited[nb] = true;
                if self.conflicts(nb, p, strict) {
                    stack.push(nb);
                }
            }
        }
        out
    }

    /// Boundary edges `(a, b, outside neighbour)` of a cavity, or `None`
    /// when the cavity is not star-shaped from `p`.
    fn boundary(&self, cav: &[usize], p: usize) -> Option<Vec<(usize, usize, usize)>> {
        let mut mark = alloc::vec![false; self.tris.len()];
        for &t in cav {
            mark[t] = true;
        }
        let mut edges = Vec::new();
        for &t in cav {
            let tri = &self.tris[t];
            for i in 0..3 {
                let nb = tri.n[i];
                if nb != NONE && mark[nb] {
                    continue;
                }
                let (a, b) = (tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]);
                if a != GHOST && b != GHOST && orient(self.pt(a), self.pt(b), self.pt(p)) <= 0 {
                    return None;
                }
                edges.push((a, b, nb));
            }
        }
        Some(edges)
    }

    fn insert(&mut self, p: usize) -> Result<()> {
        let seed = self.seed(p).ok_or_else(|| Error::Triangulation(String::from("point location failed")))?;
        let mut cav = self.cavity(seed, p, false);
        let edges = match self.boundary(&cav, p) {
            Some(e) => e,
            None => {
                cav = self.cavity(seed, p, true);
                self.boundary(&cav, p)
                    .ok_or_else(|| Error::Triangulation(alloc::format!("degenerate insertion of point {p}")))?
            }
        };
        for &t in &cav {
            self.tris[t].alive = false;
        }
        let first = self.tris.len();
        for &(a, b, outside) in &edges {
            let id = self.tris.len();
            self.tris.push(Tri { v: [a, b, p], n: [NONE, NONE, outside], alive: true });
            if outside != NONE {
                let o = &mut self.tris[outside];
                for k in 0..3 {
                    if o.v[(k + 1) % 3] == b && o.v[(k + 2) % 3] == a {
                        o.n[k] = id;
                    }
                }
            }
        }
        // Fan neighbours: (a, b, p) meets (b, c, p) across (b, p) and
        // (z, a, p) across (p, a).
        for t in first..self.tris.len() {
            let [a, b, _] = self.tris[t].v;
            for u in first..self.tris.len() {
                if u == t {
                    continue;
                }
                let [c, d, _] = self.tris[u].v;
                if c == b {
                    self.tris[t].n[0] = u;
                }
                if d == a {
                    self.tris[t].n[1] = u;
                }
            }
        }
        Ok(())
    }
}

/// Delaunay triangulation of `points` with the default tie-break salt.
pub fn delaunay(points: &[(f64, f64)]) -> Result<Triangulation> {
    delaunay_with_salt(points, 0)
}

/// Delaunay triangulation; `salt` selects the tie-break perturbation.
///
/// Fails for fewer than three points, duplicate points, non-finite
/// coordinates, or an all-collinear set.
pub fn delaunay_with_salt(points: &[(f64, f64)], salt: u64) -> Result<Triangulation> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Triangulation(alloc::format!("need at least 3 points, got {n}")));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Triangulation(String::from("non-finite coordinate")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(points[a].1.total_cmp(&points[b].1)));
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            return Err(Error::Triangulation(alloc::format!("duplicate points {} and {}", w[0], w[1])));
        }
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        xmin = xmin.min(p.0);
        xmax = xmax.max(p.0);
        ymin = ymin.min(p.1);
        ymax = ymax.max(p.1);
    }
    let scale = (xmax - xmin).max(ymax - ymin);
    let nearest = min_spacing_estimate(points, scale);
    let amp = 1e-6 * nearest;
    let perturb = (0..n)
        .map(|i| {
            let h = splitmix(splitmix(i as u64) ^ salt.wrapping_mul(0xD6E8_FEB8_6659_FD93));
            let ang = (h >> 11) as f64 * (core::f64::consts::TAU / (1u64 << 53) as f64);
            (amp * ang.cos(), amp * ang.sin())
        })
        .collect();

    let (i0, i1) = (0, 1);
    let k = (2..n)
        .find(|&k| orient(points[i0], points[i1], points[k]) != 0)
        .ok_or_else(|| Error::Triangulation(String::from("all points are collinear")))?;
    let (a, b, c) = if orient(points[i0], points[i1], points[k]) > 0 { (i0, i1, k) } else { (i1, i0, k) };

    let mut mesh = Mesh { p: points, tris: Vec::new(), perturb };
    let proto = [[a, b, c], [b, a, GHOST], [c, b, GHOST], [a, c, GHOST]];
    for v in proto {
        mesh.tris.push(Tri { v, n: [NONE; 3], alive: true });
    }
    for t in 0..4 {
        for i in 0..3 {
            let (x, y) = (mesh.tris[t].v[(i + 1) % 3], mesh.tris[t].v[(i + 2) % 3]);
            for u in 0..4 {
                for kk in 0..3 {
                    if mesh.tris[u].v[(kk + 1) % 3] == y && mesh.tris[u].v[(kk + 2) % 3] == x {
                        mesh.tris[t].n[i] = u;
                    }
                }
            }
        }
    }
    for p in 0..n {
        if p == a || p == b || p == c {
            continue;
        }
        mesh.insert(p)?;
        if mesh.tris.len() > 64 && mesh.tris.len() > 4 * live_count(&mesh.tris) {
            compact(&mut mesh.tris);
        }
    }
    let mut triangles = Vec::new();
    let mut hull_count = 0;
    for t in mesh.tris.iter().filter(|t| t.alive) {
        if t.ghost_slot().is_some() {
            hull_count += 1;
        } else {
            triangles.push(t.v);
        }
    }
    triangles.sort_unstable();
    Ok(Triangulation { triangles, hull_count })
}

fn live_count(tris: &[Tri]) -> usize {
    tris.iter().filter(|t| t.alive).count()
}

fn compact(tris: &mut Vec<Tri>) {
    let mut remap = alloc::vec![NONE; tris.len()];
    let mut next = 0;
    for (i, t) in tris.iter().enumerate() {
        if t.alive {
            remap[i] = next;
            next += 1;
        }
    }
    tris.retain(|t| t.alive);
    for t in tris.iter_mut() {
        for nb in t.n.iter_mut() {
            if *nb != NONE {
                *nb = remap[*nb];
            }
        }
    }
}

/// Rough nearest-neighbour distance: the bounding box side over √N, capped
/// below by a tiny fraction of the box.
fn min_spacing_estimate(points: &[(f64, f64)], scale: f64) -> f64 {
    let n = points.len() as f64;
    (scale / n.sqrt()).max(scale * 1e-9).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_crystal;
    use proptest::prelude::*;

    fn check(points: &[(f64, f64)], t: &Triangulation) {
        assert_eq!(t.triangles.len(), Triangulation::euler_triangle_count(points.len(), t.hull_count));
        for tri in &t.triangles {
            assert_eq!(orient(points[tri[0]], points[tri[1]], points[tri[2]]), 1);
        }
        // Empty circumcircle (up to ties).
        for tri in &t.triangles {
            for (q, &pt) in points.iter().enumerate() {
                if tri.contains(&q) {
                    continue;
                }
                let (det, mag) = incircle_raw(points[tri[0]], points[tri[1]], points[tri[2]], pt);
                assert!(det <= 1e-9 * mag, "point {q} inside circumcircle of {tri:?}");
            }
        }
    }

    #[test]
    fn square_has_two_triangles() {
        let p = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let t = delaunay(&p).unwrap();
        assert_eq!(t.triangles.len(), 2);
        assert_eq!(t.hull_count, 4);
        check(&p, &t);
    }

    #[test]
    fn rejects_degenerate_sets() {
        assert!(delaunay(&[(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(delaunay(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).is_err());
        assert!(delaunay(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn lattice_triangulation_has_no_slivers() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let p = c.positions();
        let t = delaunay(&p).unwrap();
        check(&p, &t);
        for tri in &t.triangles {
            let (d, _) = orient_raw(p[tri[0]], p[tri[1]], p[tri[2]]);
            // every lattice triangle has area √3/4·a²
            assert!((0.5 * d - 3.0f64.sqrt() / 4.0 * 24.0 * 24.0).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_hull_points_are_kept_on_the_hull() {
        let mut p = alloc::vec![];
        for i in 0..5 {
            for j in 0..4 {
                p.push((i as f64, j as f64));
            }
        }
        let t = delaunay(&p).unwrap();
        assert_eq!(t.hull_count, 14);
        check(&p, &t);
    }

    #[test]
    fn salts_give_valid_triangulations() {
        let mut p = alloc::vec![];
        for i in 0..6 {
            for j in 0..6 {
                p.push((i as f64, j as f64));
            }
        }
        for salt in 0..4 {
            check(&p, &delaunay_with_salt(&p, salt).unwrap());
        }
    }

    proptest! {
        #[test]
        fn random_points_satisfy_euler_and_delaunay(
            pts in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..60)
        ) {
            check(&pts, &delaunay(&pts).unwrap());
        }
    }
}
