//! Linear tetrahedral meshes: generation, validation, text I/O, per-element
//! geometry and greedy element coloring.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Elements whose volume is at or below this are rejected as degenerate.
pub const VOLUME_EPSILON: f64 = 1e-300;

/// Node indices of one tetrahedron.
pub type Tet = [u32; 4];

/// Tetrahedral mesh with positively oriented elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    coords: Vec<Vec3>,
    connectivity: Vec<Tet>,
    colors: Option<Vec<u32>>,
}

/// Constant shape-function gradients and volume of one tet4 element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub grad_n: [Vec3; 4],
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub n_nodes: usize,
    pub n_elems: usize,
    pub total_volume: f64,
    pub min_volume: f64,
    pub max_volume: f64,
    pub n_colors: usize,
}

// Corner c of a hex cell sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
// Each tet walks from corner 0 to corner 7 along the axes in one order, so
// all six share the main diagonal 0-7 and neighbouring cells conform.
const AXIS_ORDERS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Six times the signed volume of the tetrahedron `p`.
pub fn signed_volume6(p: &[Vec3; 4]) -> f64 {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let e3 = sub(p[3], p[0]);
    dot(e1, cross(e2, e3))
}

/// Geometry of a tetrahedron given by its four vertex positions.
///
/// The gradients are the rows of the inverse edge matrix; node 0 takes the
/// negated sum of the other three.
pub fn tet_geometry(p: &[Vec3; 4]) -> Option<ElementGeometry> {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let e3 = sub(p[3], p[0]);
    let c23 = cross(e2, e3);
    let det = dot(e1, c23);
    let volume = det.abs() / 6.0;
    if !(volume > VOLUME_EPSILON) {
        return None;
    }
    let inv = 1.0 / det;
    let g1 = c23.map(|v| v * inv);
    let g2 = cross(e3, e1).map(|v| v * inv);
    let g3 = cross(e1, e2).map(|v| v * inv);
    let g0 = [
        -(g1[0] + g2[0] + g3[0]),
        -(g1[1] + g2[1] + g3[1]),
        -(g1[2] + g2[2] + g3[2]),
    ];
    Some(ElementGeometry {
        grad_n: [g0, g1, g2, g3],
        volume,
    })
}

impl Mesh {
    /// Builds a mesh, checking index bounds and positive orientation.
    pub fn new(coords: Vec<Vec3>, connectivity: Vec<Tet>) -> Result<Self> {
        let n = coords.len();
        if n > u32::MAX as usize {
            return Err(Error::Validation(format!("{n} nodes exceed u32 indexing")));
        }
        if let Some(i) = coords.iter().position(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(Error::Validation(format!("node {i} has non-finite coordinates")));
        }
        for (e, tet) in connectivity.iter().enumerate() {
            if let Some(&bad) = tet.iter().find(|&&i| i as usize >= n) {
                return Err(Error::Validation(format!(
                    "element {e} references node {bad}, mesh has {n} nodes"
                )));
            }
            let vol = signed_volume6(&tet.map(|i| coords[i as usize])) / 6.0;
            if !(vol > VOLUME_EPSILON) {
                return Err(Error::DegenerateElement { elem: e, volume: vol });
            }
        }
        Ok(Self {
            coords,
            connectivity,
            colors: None,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elems(&self) -> usize {
        self.connectivity.len()
    }

    pub fn coords(&self) -> &[Vec3] {
        &self.coords
    }

    pub fn connectivity(&self) -> &[Tet] {
        &self.connectivity
    }

    pub fn colors(&self) -> Option<&[u32]> {
        self.colors.as_deref()
    }

    pub fn n_colors(&self) -> usize {
        self.colors
            .as_ref()
            .map_or(0, |c| c.iter().max().map_or(0, |&m| m as usize + 1))
    }

    /// Vertex positions of element `elem`.
    #[inline]
    pub fn element_nodes(&self, elem: usize) -> [Vec3; 4] {
        self.connectivity[elem].map(|i| self.coords[i as usize])
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for x in &self.coords {
            for d in 0..3 {
                lo[d] = lo[d].min(x[d]);
                hi[d] = hi[d].max(x[d]);
            }
        }
        (lo, hi)
    }

    /// Returns a copy with every node moved by `offset`.
    pub fn translated(&self, offset: Vec3) -> Self {
        let mut out = self.clone();
        for x in &mut out.coords {
            for d in 0..3 {
                x[d] += offset[d];
            }
        }
        out
    }

    /// Element ids grouped by color, ascending within each class.
    pub fn color_classes(&self) -> Option<Vec<Vec<u32>>> {
        let colors = self.colors.as_ref()?;
        let mut classes = vec![Vec::new(); self.n_colors()];
        for (e, &c) in colors.iter().enumerate() {
            classes[c as usize].push(e as u32);
        }
        Some(classes)
    }

    pub fn stats(&self) -> Result<MeshStats> {
        let mut total = 0.0;
        let mut min_volume = f64::INFINITY;
        let mut max_volume = 0.0f64;
        for e in 0..self.n_elems() {
            let v = element_geometry(self, e)?.volume;
            total += v;
            min_volume = min_volume.min(v);
            max_volume = max_volume.max(v);
        }
        if self.n_elems() == 0 {
            min_volume = 0.0;
        }
        Ok(MeshStats {
            n_nodes: self.n_nodes(),
            n_elems: self.n_elems(),
            total_volume: total,
            min_volume,
            max_volume,
            n_colors: self.n_colors(),
        })
    }
}

/// Structured `nx × ny × nz` grid over `[0, extents]`, each hex cell split
/// into six tetrahedra around its `(0,0,0)-(1,1,1)` diagonal.
///
/// Nodes are numbered x-fastest; cell `(i, j, k)` owns elements
/// `6 * (i + nx * (j + ny * k)) ..` in [`AXIS_ORDERS`] order.
pub fn generate_box_mesh(nx: usize, ny: usize, nz: usize, extents: Vec3) -> Result<Mesh> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidArgument(format!(
            "box dimensions must be >= 1, got ({nx}, {ny}, {nz})"
        )));
    }
    if extents.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "extents must be positive and finite, got {extents:?}"
        )));
    }
    let (px, py) = (nx + 1, ny + 1);
    let n_nodes = px * py * (nz + 1);
    if n_nodes > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!("{n_nodes} nodes exceed u32 indexing")));
    }
    let h = [
        extents[0] / nx as f64,
        extents[1] / ny as f64,
        extents[2] / nz as f64,
    ];
    let mut coords = Vec::with_capacity(n_nodes);
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                coords.push([i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]]);
            }
        }
    }
    let node = |i: usize, j: usize, k: usize| (i + px * (j + py * k)) as u32;

    let mut connectivity = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corner = |c: usize| node(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                for order in AXIS_ORDERS {
                    let c1 = 1 << order[0];
                    let c2 = c1 | (1 << order[1]);
                    let mut tet = [corner(0), corner(c1), corner(c2), corner(7)];
                    if signed_volume6(&tet.map(|n| coords[n as usize])) < 0.0 {
                        tet.swap(1, 2);
                    }
                    connectivity.push(tet);
                }
            }
        }
    }
    Mesh::new(coords, connectivity)
}

/// Shape-function gradients and volume of element `elem`.
pub fn element_geometry(mesh: &Mesh, elem: usize) -> Result<ElementGeometry> {
    if elem >= mesh.n_elems() {
        return Err(Error::InvalidArgument(format!(
            "element {elem} out of range (mesh has {})",
            mesh.n_elems()
        )));
    }
    let p = mesh.element_nodes(elem);
    tet_geometry(&p).ok_or(Error::DegenerateElement {
        elem,
        volume: signed_volume6(&p) / 6.0,
    })
}

/// Greedy coloring in element-index order: each element takes the smallest
/// color not already used by an element sharing one of its nodes.
pub fn color_elements(mesh: &Mesh) -> Mesh {
    // Colors already present around each node, as a bitset of u64 words.
    let mut node_colors: Vec<Vec<u64>> = vec![Vec::new(); mesh.n_nodes()];
    let mut colors = Vec::with_capacity(mesh.n_elems());
    let mut used: Vec<u64> = Vec::new();
    for tet in mesh.connectivity() {
        used.clear();
        for &n in tet {
            let words = &node_colors[n as usize];
            if used.len() < words.len() {
                used.resize(words.len(), 0);
            }
            for (u, w) in used.iter_mut().zip(words) {
                *u |= w;
            }
        }
        let color = used
            .iter()
            .enumerate()
            .find(|(_, &w)| w != u64::MAX)
            .map_or(used.len() * 64, |(i, &w)| i * 64 + (!w).trailing_zeros() as usize);
        let (word, bit) = (color / 64, color % 64);
        for &n in tet {
            let words = &mut node_colors[n as usize];
            if words.len() <= word {
                words.resize(word + 1, 0);
            }
            words[word] |= 1 << bit;
        }
        colors.push(color as u32);
    }
    let mut out = mesh.clone();
    out.colors = Some(colors);
    out
}

/// Writes the mesh in the `nodes`/`elems` text format.
pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", mesh.n_nodes());
    for x in mesh.coords() {
        // `{}` prints the shortest representation that parses back exactly.
        let _ = writeln!(s, "{} {} {}", x[0], x[1], x[2]);
    }
    let _ = writeln!(s, "elems {}", mesh.n_elems());
    for t in mesh.connectivity() {
        let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    s
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_mesh(&fs::read_to_string(path)?)
}

/// Parses the text mesh format. Inverted elements are re-oriented with a
/// warning; out-of-range node indices are a validation error.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, key: &str| -> Result<usize> {
        let (no, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("missing `{key}` header"),
        })?;
        let mut tok = l.split_whitespace();
        match (tok.next(), tok.next(), tok.next()) {
            (Some(k), Some(n), None) if k == key => n.parse().map_err(|_| Error::Parse {
                line: no,
                msg: format!("bad count `{n}`"),
            }),
            _ => Err(Error::Parse {
                line: no,
                msg: format!("expected `{key} <count>`, got `{l}`"),
            }),
        }
    };

    let n_nodes = header(&mut lines, "nodes")?;
    let mut coords = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (no, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("expected {n_nodes} node lines"),
        })?;
        coords.push(parse_fields::<f64, 3>(no, l)?);
    }
    let n_elems = header(&mut lines, "elems")?;
    let mut conn = Vec::with_capacity(n_elems);
    for _ in 0..n_elems {
        let (no, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("expected {n_elems} element lines"),
        })?;
        conn.push(parse_fields::<u32, 4>(no, l)?);
    }
    if let Some((no, l)) = lines.next() {
        return Err(Error::Parse {
            line: no,
            msg: format!("unexpected trailing content `{l}`"),
        });
    }

    for (e, tet) in conn.iter_mut().enumerate() {
        if tet.iter().any(|&i| i as usize >= coords.len()) {
            continue; // reported by Mesh::new
        }
        if signed_volume6(&tet.map(|i| coords[i as usize])) < 0.0 {
            warn!("element {e} is inverted, re-orienting");
            tet.swap(1, 2);
        }
    }
    Mesh::new(coords, conn)
}

fn parse_fields<T: std::str::FromStr, const N: usize>(line: usize, l: &str) -> Result<[T; N]> {
    let vals: Vec<T> = l
        .split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad value `{t}`"),
            })
        })
        .collect::<Result<_>>()?;
    vals.try_into().map_err(|v: Vec<T>| Error::Parse {
        line,
        msg: format!("expected {N} values, got {}", v.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_tet() -> [Vec3; 4] {
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    fn single_tet_mesh() -> Mesh {
        Mesh::new(reference_tet().to_vec(), vec![[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn unit_cube_split() {
        let m = generate_box_mesh(1, 1, 1, [1.0; 3]).unwrap();
        assert_eq!(m.n_nodes(), 8);
        assert_eq!(m.n_elems(), 6);
        assert!((m.stats().unwrap().total_volume - 1.0).abs() < 1e-15);
        // every tet contains the main diagonal
        for t in m.connectivity() {
            assert!(t.contains(&0) && t.contains(&7));
        }
    }

    #[test]
    fn two_cells() {
        let m = generate_box_mesh(2, 1, 1, [2.0, 1.0, 1.0]).unwrap();
        assert_eq!((m.n_nodes(), m.n_elems()), (12, 12));
        assert!((m.stats().unwrap().total_volume - 2.0).abs() < 1e-14);
    }

    #[test]
    fn box_argument_errors() {
        assert!(matches!(
            generate_box_mesh(0, 1, 1, [1.0; 3]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            generate_box_mesh(1, 1, 1, [1.0, -1.0, 1.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(generate_box_mesh(1, 1, 1, [1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn reference_geometry() {
        let g = tet_geometry(&reference_tet()).unwrap();
        assert_eq!(
            g.grad_n,
            [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        );
        assert_eq!(g.volume, 1.0 / 6.0);

        let scaled = reference_tet().map(|p| p.map(|v| 2.0 * v));
        let g2 = tet_geometry(&scaled).unwrap();
        for a in 0..4 {
            for d in 0..3 {
                assert_eq!(g2.grad_n[a][d], 0.5 * g.grad_n[a][d]);
            }
        }
        assert!((g2.volume - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let flat = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(tet_geometry(&flat).is_none());
        assert!(matches!(
            Mesh::new(flat.to_vec(), vec![[0, 1, 2, 3]]),
            Err(Error::DegenerateElement { elem: 0, .. })
        ));
    }

    #[test]
    fn element_index_out_of_range() {
        let m = single_tet_mesh();
        assert!(element_geometry(&m, 1).is_err());
    }

    #[test]
    fn single_element_one_color() {
        let m = color_elements(&single_tet_mesh());
        assert_eq!(m.n_colors(), 1);
    }

    #[test]
    fn unit_cube_needs_six_colors() {
        let m = color_elements(&generate_box_mesh(1, 1, 1, [1.0; 3]).unwrap());
        assert_eq!(m.colors().unwrap(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn roundtrip_text() {
        let m = generate_box_mesh(2, 3, 1, [0.3, 1.7, 2.9]).unwrap();
        let back = parse_mesh(&mesh_to_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn index_equal_to_node_count_fails() {
        let text = "nodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelems 1\n0 1 2 4\n";
        assert!(matches!(parse_mesh(text), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_element_section() {
        let m = parse_mesh("# vacuous\nnodes 1\n0 0 0  # origin\nelems 0\n").unwrap();
        assert_eq!((m.n_nodes(), m.n_elems()), (1, 0));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "nodes 2\n0 0 0\n1 x 0\nelems 0\n";
        match parse_mesh(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_mesh("nodes 1\n0 0\nelems 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverted_elements_are_reoriented() {
        let text = "nodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelems 1\n0 2 1 3\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.connectivity()[0], [0, 1, 2, 3]);
    }
}
