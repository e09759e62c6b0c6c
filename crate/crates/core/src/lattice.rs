//! Link-lattice geometry: ladders and square lattices with oriented links,
//! vertex stars, plaquettes, Wilson-loop paths, and 't Hooft string paths.
//!
//! Global orientation convention: every link points toward +x or +y. The
//! Gauss sign at a vertex is +1 for links entering it and −1 for links
//! leaving it, so the vertex charge reads (flux in) − (flux out).

use serde::Serialize;
use std::collections::HashMap;

use crate::error::{CoreError, Result};

/// Boundary condition for square lattices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Direction tag of a link under the +x/+y convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkDir {
    X,
    Y,
}

/// One oriented link (from → to).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub dir: LinkDir,
}

/// Which lattice this geometry describes.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum LatticeKind {
    Ladder { l: usize },
    Square { nx: usize, ny: usize, boundary: Boundary },
}

/// A pair of links sharing a vertex.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NnPair {
    pub a: usize,
    pub b: usize,
    /// True when the two links have different direction tags.
    pub perpendicular: bool,
}

/// Restriction mode for the capacitively-coupled pair set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    All,
    PerpendicularOnly,
}

/// Immutable link-lattice geometry.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeGeometry {
    pub kind: LatticeKind,
    pub links: Vec<Link>,
    pub n_vertices: usize,
    /// Per-vertex list of (link index, orientation sign): +1 incoming,
    /// −1 outgoing.
    pub vertex_star: Vec<Vec<(usize, i8)>>,
    /// Ordered plaquette tuples of (link index, traversal sign), signs
    /// (+, +, −, −) for the counterclockwise walk bottom, right, top, left.
    pub plaquettes: Vec<[(usize, i8); 4]>,
    /// All unordered link pairs sharing a vertex.
    pub nn_pairs: Vec<NnPair>,
}

/// Kind tag of an operator path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathKind {
    WilsonLoop,
    ThooftString,
}

/// Ordered list of (link index, exponent sign).
///
/// For Wilson loops the sign is the traversal sign relative to the link
/// orientation. For 't Hooft strings it is the alternating phase sign of the
/// measurable string convention, (−, +, −, +, …) along the path.
#[derive(Debug, Clone, Serialize)]
pub struct Path {
    pub steps: Vec<(usize, i8)>,
    pub kind: PathKind,
}

impl LatticeGeometry {
    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_plaquettes(&self) -> usize {
        self.plaquettes.len()
    }

    /// Pairs under the requested restriction.
    pub fn pairs(&self, mode: PairMode) -> Vec<(usize, usize)> {
        self.nn_pairs
            .iter()
            .filter(|p| mode == PairMode::All || p.perpendicular)
            .map(|p| (p.a, p.b))
            .collect()
    }

    /// Geometry as a JSON document (links, stars, plaquettes, pairs).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry serializes")
    }

    fn link_index(&self) -> HashMap<(usize, usize), usize> {
        self.links
            .iter()
            .enumerate()
            .map(|(i, l)| ((l.from, l.to), i))
            .collect()
    }
}

fn finish(
    kind: LatticeKind,
    links: Vec<Link>,
    n_vertices: usize,
    plaquettes: Vec<[(usize, i8); 4]>,
) -> LatticeGeometry {
    let mut vertex_star: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n_vertices];
    for (i, l) in links.iter().enumerate() {
        vertex_star[l.to].push((i, 1));
        vertex_star[l.from].push((i, -1));
    }
    let mut nn_pairs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for star in &vertex_star {
        for (ai, &(a, _)) in star.iter().enumerate() {
            for &(b, _) in star.iter().skip(ai + 1) {
                let key = (a.min(b), a.max(b));
                if seen.insert(key) {
                    nn_pairs.push(NnPair {
                        a: key.0,
                        b: key.1,
                        perpendicular: links[key.0].dir != links[key.1].dir,
                    });
                }
            }
        }
    }
    nn_pairs.sort_by_key(|p| (p.a, p.b));
    LatticeGeometry { kind, links, n_vertices, vertex_star, plaquettes, nn_pairs }
}

/// Two rails of l−1 x-links each plus l rungs: 3l−2 links, 2l vertices,
/// l−1 plaquettes. Vertex (x, y) has index y·l + x; bottom-rail links come
/// first, then top-rail links, then rungs ordered by x.
pub fn build_ladder(l: usize) -> Result<LatticeGeometry> {
    if l < 2 {
        return Err(CoreError::Argument(format!("ladder length must be >= 2, got {l}")));
    }
    let v = |x: usize, y: usize| y * l + x;
    let mut links = Vec::with_capacity(3 * l - 2);
    for x in 0..l - 1 {
        links.push(Link { from: v(x, 0), to: v(x + 1, 0), dir: LinkDir::X });
    }
    for x in 0..l - 1 {
        links.push(Link { from: v(x, 1), to: v(x + 1, 1), dir: LinkDir::X });
    }
    for x in 0..l {
        links.push(Link { from: v(x, 0), to: v(x, 1), dir: LinkDir::Y });
    }
    let bottom = |x: usize| x;
    let top = |x: usize| (l - 1) + x;
    let rung = |x: usize| 2 * (l - 1) + x;
    let plaquettes = (0..l - 1)
        .map(|p| [(bottom(p), 1i8), (rung(p + 1), 1), (top(p), -1), (rung(p), -1)])
        .collect();
    Ok(finish(LatticeKind::Ladder { l }, links, 2 * l, plaquettes))
}

/// Standard square-lattice link structure; periodic wraps both directions.
/// X-links first (row-major), then Y-links.
pub fn build_square(nx: usize, ny: usize, boundary: Boundary) -> Result<LatticeGeometry> {
    if nx < 2 || ny < 2 {
        return Err(CoreError::Argument(format!("square lattice needs nx, ny >= 2, got {nx}x{ny}")));
    }
    let v = |x: usize, y: usize| y * nx + x;
    let mut links = Vec::new();
    let mut x_link = HashMap::new();
    let mut y_link = HashMap::new();
    let x_count = if boundary == Boundary::Periodic { nx } else { nx - 1 };
    let y_count = if boundary == Boundary::Periodic { ny } else { ny - 1 };
    for y in 0..ny {
        for x in 0..x_count {
            x_link.insert((x, y), links.len());
            links.push(Link { from: v(x, y), to: v((x + 1) % nx, y), dir: LinkDir::X });
        }
    }
    for y in 0..y_count {
        for x in 0..nx {
            y_link.insert((x, y), links.len());
            links.push(Link { from: v(x, y), to: v(x, (y + 1) % ny), dir: LinkDir::Y });
        }
    }
    let px = if boundary == Boundary::Periodic { nx } else { nx - 1 };
    let py = if boundary == Boundary::Periodic { ny } else { ny - 1 };
    let mut plaquettes = Vec::with_capacity(px * py);
    for y in 0..py {
        for x in 0..px {
            plaquettes.push([
                (x_link[&(x, y)], 1i8),
                (y_link[&((x + 1) % nx, y)], 1),
                (x_link[&(x, (y + 1) % ny)], -1),
                (y_link[&(x, y)], -1),
            ]);
        }
    }
    Ok(finish(LatticeKind::Square { nx, ny, boundary }, links, nx * ny, plaquettes))
}

/// String of y-links from the left boundary up to (and excluding the far
/// side of) the target plaquette, with alternating exponent signs.
///
/// On a ladder the string walks the dual line through the rungs; on a square
/// lattice it walks the row of y-links at the target plaquette's height.
pub fn thooft_path(g: &LatticeGeometry, target_plaquette: usize) -> Result<Path> {
    if target_plaquette >= g.n_plaquettes() {
        return Err(CoreError::Argument(format!(
            "plaquette {target_plaquette} out of range ({} plaquettes)",
            g.n_plaquettes()
        )));
    }
    let rungs: Vec<usize> = match g.kind {
        LatticeKind::Ladder { l } => {
            (0..=target_plaquette).map(|x| 2 * (l - 1) + x).collect()
        }
        LatticeKind::Square { nx, boundary, .. } => {
            let px = if boundary == Boundary::Periodic { nx } else { nx - 1 };
            let (tx, ty) = (target_plaquette % px, target_plaquette / px);
            // y-links cross the dual line at row ty.
            (0..=tx)
                .map(|x| {
                    g.links
                        .iter()
                        .position(|lk| {
                            lk.dir == LinkDir::Y && lk.from == ty * nx + x
                        })
                        .expect("y-link exists")
                })
                .collect()
        }
    };
    let steps = rungs
        .into_iter()
        .enumerate()
        .map(|(j, link)| (link, if j % 2 == 0 { -1i8 } else { 1 }))
        .collect();
    Ok(Path { steps, kind: PathKind::ThooftString })
}

/// Target plaquette index of the middle of a ladder.
pub fn middle_plaquette(g: &LatticeGeometry) -> usize {
    g.n_plaquettes() / 2
}

/// Closed rectangular loop with corner at the given vertex, traversed
/// counterclockwise; exponent signs are traversal signs (+ along the link
/// orientation, − against it).
pub fn wilson_path(
    g: &LatticeGeometry,
    corner: usize,
    width: usize,
    height: usize,
) -> Result<Path> {
    if width == 0 || height == 0 {
        return Err(CoreError::Argument("rectangle must have nonzero width and height".into()));
    }
    let (nx, ny, wrap) = match g.kind {
        LatticeKind::Ladder { l } => (l, 2, false),
        LatticeKind::Square { nx, ny, boundary } => (nx, ny, boundary == Boundary::Periodic),
    };
    let (cx, cy) = (corner % nx, corner / nx);
    if corner >= g.n_vertices || (!wrap && (cx + width > nx - 1 || cy + height > ny - 1)) {
        return Err(CoreError::Argument(format!(
            "rectangle {width}x{height} at vertex {corner} does not fit the lattice"
        )));
    }
    let index = g.link_index();
    let v = |x: usize, y: usize| (y % ny) * nx + (x % nx);
    let get = |a: usize, b: usize| -> Result<usize> {
        index
            .get(&(a, b))
            .copied()
            .ok_or_else(|| CoreError::Argument(format!("no link between vertices {a} and {b}")))
    };
    let mut steps = Vec::with_capacity(2 * (width + height));
    for x in 0..width {
        steps.push((get(v(cx + x, cy), v(cx + x + 1, cy))?, 1i8));
    }
    for y in 0..height {
        steps.push((get(v(cx + width, cy + y), v(cx + width, cy + y + 1))?, 1));
    }
    for x in (0..width).rev() {
        steps.push((get(v(cx + x, cy + height), v(cx + x + 1, cy + height))?, -1));
    }
    for y in (0..height).rev() {
        steps.push((get(v(cx, cy + y), v(cx, cy + y + 1))?, -1));
    }
    Ok(Path { steps, kind: PathKind::WilsonLoop })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_counts() {
        let g = build_ladder(29).unwrap();
        assert_eq!(g.n_links(), 85);
        assert_eq!(g.n_vertices, 58);
        assert_eq!(g.n_plaquettes(), 28);
        let g2 = build_ladder(2).unwrap();
        assert_eq!(g2.n_links(), 4);
        assert_eq!(g2.n_plaquettes(), 1);
        // l = 5 by direct combinatorics: 2 rails of 4 + 5 rungs, 2·5
        // vertices, 4 unit squares.
        let g5 = build_ladder(5).unwrap();
        assert_eq!(g5.n_links(), 2 * 4 + 5);
        assert_eq!(g5.n_vertices, 10);
        assert_eq!(g5.n_plaquettes(), 4);
        assert!(build_ladder(1).is_err());
    }

    #[test]
    fn square_counts() {
        let g = build_square(2, 2, Boundary::Open).unwrap();
        assert_eq!((g.n_vertices, g.n_links(), g.n_plaquettes()), (4, 4, 1));
        let g = build_square(3, 3, Boundary::Periodic).unwrap();
        assert_eq!((g.n_vertices, g.n_links(), g.n_plaquettes()), (9, 18, 9));
        let g = build_square(3, 2, Boundary::Open).unwrap();
        assert_eq!((g.n_links(), g.n_plaquettes()), (7, 2));
    }

    #[test]
    fn star_sizes_sum_to_twice_links() {
        for g in [
            build_ladder(7).unwrap(),
            build_square(4, 3, Boundary::Open).unwrap(),
            build_square(3, 3, Boundary::Periodic).unwrap(),
        ] {
            let total: usize = g.vertex_star.iter().map(Vec::len).sum();
            assert_eq!(total, 2 * g.n_links());
        }
    }

    #[test]
    fn plaquette_links_are_nn_pairs_when_sharing_a_vertex() {
        for g in [build_ladder(5).unwrap(), build_square(4, 4, Boundary::Open).unwrap()] {
            let pairset: std::collections::HashSet<(usize, usize)> =
                g.pairs(PairMode::All).into_iter().collect();
            for plq in &g.plaquettes {
                for i in 0..4 {
                    for j in i + 1..4 {
                        let (a, b) = (plq[i].0, plq[j].0);
                        let share = g.links[a].from == g.links[b].from
                            || g.links[a].from == g.links[b].to
                            || g.links[a].to == g.links[b].from
                            || g.links[a].to == g.links[b].to;
                        if share {
                            assert!(pairset.contains(&(a.min(b), a.max(b))));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn plaquette_sign_pattern() {
        let g = build_square(4, 4, Boundary::Open).unwrap();
        for plq in &g.plaquettes {
            let signs: Vec<i8> = plq.iter().map(|&(_, s)| s).collect();
            assert_eq!(signs, vec![1, 1, -1, -1]);
        }
    }

    #[test]
    fn gauss_signs_cancel_around_plaquettes() {
        // Each plaquette traversal raises/lowers so that every corner vertex
        // sees one +1 and one −1 (star sign × traversal sign).
        let g = build_ladder(4).unwrap();
        for plq in &g.plaquettes {
            for (v, star) in g.vertex_star.iter().enumerate() {
                let mut change = 0i32;
                for &(link, trav) in plq.iter() {
                    if let Some(&(_, orient)) = star.iter().find(|&&(l, _)| l == link) {
                        // Traversal + applies a lowering on the link (flux
                        // −1), traversal − a raising.
                        change += i32::from(orient) * (-i32::from(trav));
                    }
                }
                assert_eq!(change, 0, "vertex {v} charge changed by ring exchange");
            }
        }
    }

    #[test]
    fn thooft_paths() {
        let g = build_ladder(29).unwrap();
        let p = thooft_path(&g, middle_plaquette(&g)).unwrap();
        assert_eq!(p.steps.len(), 15);
        assert!(p.steps.iter().all(|&(l, _)| matches!(g.links[l].dir, LinkDir::Y)));
        // Alternating signs starting with −.
        for (j, &(_, s)) in p.steps.iter().enumerate() {
            assert_eq!(s, if j % 2 == 0 { -1 } else { 1 });
        }
        let g2 = build_ladder(2).unwrap();
        assert_eq!(thooft_path(&g2, 0).unwrap().steps.len(), 1);
        let g5 = build_ladder(5).unwrap();
        assert_eq!(thooft_path(&g5, 0).unwrap().steps.len(), 1);
        assert!(thooft_path(&g5, 10).is_err());
    }

    #[test]
    fn wilson_paths() {
        let g = build_ladder(5).unwrap();
        // 1×1 rectangle reproduces the plaquette tuple.
        let p = wilson_path(&g, 0, 1, 1).unwrap();
        let plq = &g.plaquettes[0];
        assert_eq!(p.steps.len(), 4);
        for (step, expect) in p.steps.iter().zip(plq.iter()) {
            assert_eq!(step, expect);
        }
        // 2×1 rectangle: 6 links.
        let p2 = wilson_path(&g, 1, 2, 1).unwrap();
        assert_eq!(p2.steps.len(), 6);
        assert!(wilson_path(&g, 0, 0, 1).is_err());
        assert!(wilson_path(&g, 0, 1, 2).is_err());
        assert!(wilson_path(&g, 0, 5, 1).is_err());
    }

    #[test]
    fn geometry_serializes() {
        let g = build_ladder(3).unwrap();
        let json = g.to_json();
        assert!(json.contains("\"links\""));
        assert!(json.contains("\"plaquettes\""));
    }

    #[test]
    fn perpendicular_pair_restriction() {
        let g = build_ladder(3).unwrap();
        let all = g.pairs(PairMode::All);
        let perp = g.pairs(PairMode::PerpendicularOnly);
        assert!(perp.len() < all.len());
        for (a, b) in perp {
            assert!(g.links[a].dir != g.links[b].dir);
        }
    }
}
