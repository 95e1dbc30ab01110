//! Conforming triangle meshes with labeled boundary loops, Triangle-format I/O
//! and a structured polar mesher for annuli.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Boundary edge oriented with the domain on its left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub label: usize,
}

/// Closed boundary loop, positively oriented (domain on the left).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    pub label: usize,
    pub nodes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    loops: Vec<BoundaryLoop>,
    node_normals: Vec<Option<Point>>,
    node_loop_position: Vec<Option<(usize, usize)>>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TriMesh {
    /// Builds and validates a mesh. `labeled_edges` carries the component label
    /// of every boundary edge (any orientation); zero labels mark interior edges.
    pub fn from_parts(
        nodes: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        labeled_edges: &[(usize, usize, usize)],
    ) -> Result<Self> {
        let n = nodes.len();
        let scale = nodes
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::NonConformingMesh(format!("triangle {t} references a missing node")));
            }
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if area.abs() <= 1e-14 * scale * scale {
                return Err(Error::InconsistentOrientation(format!("triangle {t} has zero area")));
            }
            if area < 0.0 {
                log::warn!("triangle {t} listed clockwise; flipping");
                tri.swap(1, 2);
            }
        }

        let mut edge_use: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_use.entry(edge_key(a, b)).or_default().push((a, b));
            }
        }
        let mut labels: HashMap<(usize, usize), usize> = HashMap::new();
        for &(a, b, label) in labeled_edges {
            if label == 0 {
                continue;
            }
            match edge_use.get(&edge_key(a, b)) {
                Some(uses) if uses.len() == 1 => {
                    labels.insert(edge_key(a, b), label);
                }
                Some(_) => {
                    return Err(Error::NonConformingMesh(format!(
                        "interior edge {a}-{b} carries boundary label {label}"
                    )))
                }
                None => {
                    return Err(Error::NonConformingMesh(format!("labeled edge {a}-{b} is not a mesh edge")))
                }
            }
        }

        let mut by_label: BTreeMap<usize, HashMap<usize, usize>> = BTreeMap::new();
        let mut keys: Vec<_> = edge_use.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let uses = &edge_use[&key];
            match uses.len() {
                1 => {
                    let (a, b) = uses[0];
                    let label = *labels.get(&key).ok_or(Error::UnlabeledBoundary { a, b })?;
                    let next = by_label.entry(label).or_default();
                    if next.insert(a, b).is_some() {
                        return Err(Error::NonConformingMesh(format!("boundary pinches at node {a}")));
                    }
                }
                2 => {
                    if uses[0].0 != uses[1].1 || uses[0].1 != uses[1].0 {
                        return Err(Error::InconsistentOrientation(format!(
                            "edge {}-{} traversed twice in the same direction",
                            key.0, key.1
                        )));
                    }
                }
                k => {
                    return Err(Error::NonConformingMesh(format!(
                        "edge {}-{} shared by {k} triangles",
                        key.0, key.1
                    )))
                }
            }
        }

        let m = by_label.len();
        if by_label.keys().copied().ne(1..=m) {
            return Err(Error::MeshInvariantViolation(format!(
                "component labels must be 1..={m}, got {:?}",
                by_label.keys().collect::<Vec<_>>()
            )));
        }
        let mut loops = Vec::with_capacity(m);
        for (&label, next) in &by_label {
            let start = *next.keys().min().unwrap();
            let mut loop_nodes = vec![start];
            let mut cur = next[&start];
            while cur != start {
                if loop_nodes.len() > next.len() {
                    break;
                }
                loop_nodes.push(cur);
                cur = *next.get(&cur).ok_or_else(|| {
                    Error::MeshInvariantViolation(format!("component {label} is not closed"))
                })?;
            }
            if loop_nodes.len() != next.len() {
                return Err(Error::MeshInvariantViolation(format!(
                    "component {label} is not a single closed loop"
                )));
            }
            loops.push(BoundaryLoop { label, nodes: loop_nodes });
        }

        let mut node_normals = vec![None; n];
        let mut node_loop_position = vec![None; n];
        for (li, lp) in loops.iter().enumerate() {
            let len = lp.nodes.len();
            for (k, &v) in lp.nodes.iter().enumerate() {
                if node_loop_position[v].is_some() {
                    return Err(Error::NonConformingMesh(format!("node {v} lies on two boundary components")));
                }
                node_loop_position[v] = Some((li, k));
                let prev = nodes[lp.nodes[(k + len - 1) % len]];
                let next = nodes[lp.nodes[(k + 1) % len]];
                let here = nodes[v];
                let n1 = edge_outward_normal(prev, here);
                let n2 = edge_outward_normal(here, next);
                let s = [n1[0] + n2[0], n1[1] + n2[1]];
                let norm = s[0].hypot(s[1]);
                if norm < 1e-12 {
                    return Err(Error::MeshInvariantViolation(format!("cusp at boundary node {v}")));
                }
                node_normals[v] = Some([s[0] / norm, s[1] / norm]);
            }
        }
        Ok(Self { nodes, triangles, loops, node_normals, node_loop_position })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn loops(&self) -> &[BoundaryLoop] {
        &self.loops
    }

    pub fn num_components(&self) -> usize {
        self.loops.len()
    }

    pub fn boundary_loop(&self, label: usize) -> Result<&BoundaryLoop> {
        self.loops
            .iter()
            .find(|l| l.label == label)
            .ok_or(Error::UnknownComponent(label))
    }

    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        self.loops
            .iter()
            .flat_map(|lp| {
                let len = lp.nodes.len();
                (0..len).map(move |k| BoundaryEdge { a: lp.nodes[k], b: lp.nodes[(k + 1) % len], label: lp.label })
            })
            .collect()
    }

    pub fn node_normal(&self, node: usize) -> Option<Point> {
        self.node_normals[node]
    }

    /// Component label of a boundary node together with its arclength
    /// fraction `τ ∈ [0, 1)` along the loop.
    pub fn boundary_position(&self, node: usize) -> Option<(usize, f64)> {
        let (li, k) = self.node_loop_position[node]?;
        let lp = &self.loops[li];
        let lengths = self.loop_prefix_lengths(li);
        Some((lp.label, lengths[k] / lengths[lp.nodes.len()]))
    }

    fn loop_prefix_lengths(&self, li: usize) -> Vec<f64> {
        let lp = &self.loops[li];
        let len = lp.nodes.len();
        let mut acc = vec![0.0; len + 1];
        for k in 0..len {
            let a = self.nodes[lp.nodes[k]];
            let b = self.nodes[lp.nodes[(k + 1) % len]];
            acc[k + 1] = acc[k] + (b[0] - a[0]).hypot(b[1] - a[1]);
        }
        acc
    }

    pub fn loop_length(&self, label: usize) -> Result<f64> {
        let li = self.loops.iter().position(|l| l.label == label).ok_or(Error::UnknownComponent(label))?;
        Ok(*self.loop_prefix_lengths(li).last().unwrap())
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Triangle containing `x`, if any.
    pub fn locate(&self, x: Point) -> Option<usize> {
        self.triangles.iter().position(|&[a, b, c]| {
            let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
            let tol = -1e-12 * signed_area(pa, pb, pc);
            signed_area(pa, pb, x) >= tol && signed_area(pb, pc, x) >= tol && signed_area(pc, pa, x) >= tol
        })
    }

    /// Interior angles of every triangle, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut best = 180.0f64;
        for &[a, b, c] in &self.triangles {
            let p = [self.nodes[a], self.nodes[b], self.nodes[c]];
            for k in 0..3 {
                let (o, u, v) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (du, dv) = ([u[0] - o[0], u[1] - o[1]], [v[0] - o[0], v[1] - o[1]]);
                let cos = (du[0] * dv[0] + du[1] * dv[1]) / (du[0].hypot(du[1]) * dv[0].hypot(dv[1]));
                best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    /// Disjoint union; labels of `other` are shifted past ours.
    pub fn disjoint_union(&self, other: &TriMesh) -> Result<TriMesh> {
        let off = self.nodes.len();
        let loff = self.num_components();
        let nodes: Vec<_> = self.nodes.iter().chain(other.nodes.iter()).copied().collect();
        let triangles: Vec<_> = self
            .triangles
            .iter()
            .copied()
            .chain(other.triangles.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]))
            .collect();
        let edges: Vec<_> = self
            .boundary_edges()
            .into_iter()
            .map(|e| (e.a, e.b, e.label))
            .chain(other.boundary_edges().into_iter().map(|e| (e.a + off, e.b + off, e.label + loff)))
            .collect();
        TriMesh::from_parts(nodes, triangles, &edges)
    }

    /// Uniform red refinement: every triangle split into four.
    pub fn refine(&self) -> Result<TriMesh> {
        let mut nodes = self.nodes.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>| -> usize {
            *mid.entry(edge_key(a, b)).or_insert_with(|| {
                let (pa, pb) = (nodes[a], nodes[b]);
                nodes.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut edges = Vec::new();
        for e in self.boundary_edges() {
            let m = midpoint(e.a, e.b, &mut nodes);
            edges.push((e.a, m, e.label));
            edges.push((m, e.b, e.label));
        }
        TriMesh::from_parts(nodes, triangles, &edges)
    }
}

fn edge_outward_normal(a: Point, b: Point) -> Point {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = d[0].hypot(d[1]);
    [d[1] / len, -d[0] / len]
}

/// Structured polar mesh of the annulus `r_in <= |x - center| <= r_out` with
/// `n_r` radial intervals and `n_phi` angular intervals. Inner boundary gets
/// `labels.0`, outer `labels.1`.
pub fn polar_annulus_mesh(
    r_in: f64,
    r_out: f64,
    center: Point,
    n_r: usize,
    n_phi: usize,
    labels: (usize, usize),
) -> Result<TriMesh> {
    if n_r < 1 || n_phi < 3 {
        return Err(Error::TooCoarse { n_r, n_phi });
    }
    let node = |i: usize, j: usize| i * n_phi + (j % n_phi);
    let mut nodes = Vec::with_capacity((n_r + 1) * n_phi);
    for i in 0..=n_r {
        let r = r_in + (r_out - r_in) * i as f64 / n_r as f64;
        for j in 0..n_phi {
            let phi = std::f64::consts::TAU * j as f64 / n_phi as f64;
            nodes.push([center[0] + r * phi.cos(), center[1] + r * phi.sin()]);
        }
    }
    let dist = |a: usize, b: usize| {
        let (pa, pb): (Point, Point) = (nodes[a], nodes[b]);
        (pa[0] - pb[0]).hypot(pa[1] - pb[1])
    };
    let mut triangles = Vec::with_capacity(2 * n_r * n_phi);
    for i in 0..n_r {
        for j in 0..n_phi {
            let (v00, v10, v11, v01) = (node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1));
            if dist(v00, v11) <= dist(v10, v01) {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let mut edges = Vec::with_capacity(2 * n_phi);
    for j in 0..n_phi {
        edges.push((node(0, j), node(0, j + 1), labels.0));
        edges.push((node(n_r, j), node(n_r, j + 1), labels.1));
    }
    TriMesh::from_parts(nodes, triangles, &edges)
}

fn base_path(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("node" | "ele" | "edge") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

/// The `.node`, `.ele` and `.edge` files read by [`load_mesh`].
pub fn mesh_files(path: &Path) -> [PathBuf; 3] {
    let base = base_path(path);
    ["node", "ele", "edge"].map(|e| with_ext(&base, e))
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

struct Records {
    file: PathBuf,
    rows: Vec<(usize, Vec<String>)>,
}

impl Records {
    fn read(file: PathBuf) -> Result<Self> {
        let text = fs::read_to_string(&file).map_err(|source| Error::Io { path: file.clone(), source })?;
        let rows = text
            .lines()
            .enumerate()
            .filter_map(|(i, line)| {
                let body = line.split('#').next().unwrap_or("").trim();
                (!body.is_empty()).then(|| (i + 1, body.split_whitespace().map(str::to_owned).collect()))
            })
            .collect();
        Ok(Self { file, rows })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::ParseError { file: self.file.clone(), line, message: message.into() }
    }

    fn field<T: std::str::FromStr>(&self, row: usize, col: usize, what: &str) -> Result<T> {
        let (line, fields) = &self.rows[row];
        fields
            .get(col)
            .ok_or_else(|| self.err(*line, format!("missing {what}")))?
            .parse()
            .map_err(|_| self.err(*line, format!("malformed {what} '{}'", fields[col])))
    }

    fn header(&self) -> Result<(usize, &[String])> {
        let (line, fields) = self.rows.first().ok_or_else(|| self.err(1, "empty file"))?;
        let count = fields[0].parse().map_err(|_| self.err(*line, "malformed record count"))?;
        if self.rows.len() < count + 1 {
            return Err(self.err(*line, format!("expected {count} records, found {}", self.rows.len() - 1)));
        }
        Ok((count, &fields[1..]))
    }
}

/// Reads `<base>.node`, `<base>.ele` and `<base>.edge` in Triangle format.
/// Indices may start at 0 or 1, following the first node record.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let base = base_path(path);
    let node_file = Records::read(with_ext(&base, "node"))?;
    let (n_nodes, rest) = node_file.header()?;
    let n_attr: usize = match rest.get(1) {
        Some(s) => s.parse().map_err(|_| node_file.err(node_file.rows[0].0, "malformed attribute count"))?,
        None => 0,
    };
    let first: usize = if n_nodes > 0 { node_file.field(1, 0, "node index")? } else { 1 };
    if first > 1 {
        return Err(node_file.err(node_file.rows[1].0, "node indices must start at 0 or 1"));
    }
    let mut nodes = Vec::with_capacity(n_nodes);
    for r in 1..=n_nodes {
        let idx: usize = node_file.field(r, 0, "node index")?;
        if idx != first + r - 1 {
            return Err(node_file.err(node_file.rows[r].0, "node indices must be consecutive"));
        }
        let x: f64 = node_file.field(r, 1, "x coordinate")?;
        let y: f64 = node_file.field(r, 2, "y coordinate")?;
        let _ = n_attr;
        nodes.push([x, y]);
    }
    let to_index = |rec: &Records, r: usize, c: usize| -> Result<usize> {
        let v: usize = rec.field(r, c, "node reference")?;
        if v < first || v - first >= n_nodes {
            return Err(rec.err(rec.rows[r].0, format!("node reference {v} out of range")));
        }
        Ok(v - first)
    };
    let ele_file = Records::read(with_ext(&base, "ele"))?;
    let (n_ele, _) = ele_file.header()?;
    let mut triangles = Vec::with_capacity(n_ele);
    for r in 1..=n_ele {
        triangles.push([to_index(&ele_file, r, 1)?, to_index(&ele_file, r, 2)?, to_index(&ele_file, r, 3)?]);
    }
    let edge_file = Records::read(with_ext(&base, "edge"))?;
    let (n_edge, rest) = edge_file.header()?;
    let has_markers = rest.first().map(|s| s != "0").unwrap_or(false);
    let mut edges = Vec::with_capacity(n_edge);
    for r in 1..=n_edge {
        let a = to_index(&edge_file, r, 1)?;
        let b = to_index(&edge_file, r, 2)?;
        let label: i64 = if has_markers { edge_file.field(r, 3, "edge marker")? } else { 0 };
        if label < 0 {
            return Err(edge_file.err(edge_file.rows[r].0, "negative edge marker"));
        }
        edges.push((a, b, label as usize));
    }
    TriMesh::from_parts(nodes, triangles, &edges)
}

/// Writes the mesh in canonical 1-based Triangle format. Only boundary edges
/// are written to the `.edge` file, in loop order.
pub fn save_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    let base = base_path(path);
    let mut node = String::new();
    let _ = writeln!(node, "{} 2 0 1", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let marker = mesh.node_loop_position[i].map(|(li, _)| mesh.loops[li].label).unwrap_or(0);
        let _ = writeln!(node, "{} {} {} {}", i + 1, p[0], p[1], marker);
    }
    let mut ele = String::new();
    let _ = writeln!(ele, "{} 3 0", mesh.triangles.len());
    for (i, t) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(ele, "{} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1);
    }
    let edges = mesh.boundary_edges();
    let mut edge = String::new();
    let _ = writeln!(edge, "{} 1", edges.len());
    for (i, e) in edges.iter().enumerate() {
        let _ = writeln!(edge, "{} {} {} {}", i + 1, e.a + 1, e.b + 1, e.label);
    }
    for (ext, body) in [("node", node), ("ele", ele), ("edge", edge)] {
        let file = with_ext(&base, ext);
        fs::write(&file, body).map_err(|source| Error::Io { path: file.clone(), source })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_mesh_counts() {
        let m = polar_annulus_mesh(1.0, 2.0, [0.0, 0.0], 2, 8, (1, 2)).unwrap();
        assert_eq!(m.nodes().len(), 24);
        assert_eq!(m.triangles().len(), 32);
        assert_eq!(m.loops().len(), 2);
        for lp in m.loops() {
            assert_eq!(lp.nodes.len(), 8);
        }
    }

    #[test]
    fn inner_loop_clockwise_with_inward_normals() {
        let m = polar_annulus_mesh(1.0, 2.0, [0.0, 0.0], 3, 12, (1, 2)).unwrap();
        let ring_area = |lp: &BoundaryLoop| {
            let len = lp.nodes.len();
            (0..len)
                .map(|k| {
                    let (a, b) = (m.nodes()[lp.nodes[k]], m.nodes()[lp.nodes[(k + 1) % len]]);
                    0.5 * (a[0] * b[1] - b[0] * a[1])
                })
                .sum::<f64>()
        };
        assert!(ring_area(m.boundary_loop(1).unwrap()) < 0.0);
        assert!(ring_area(m.boundary_loop(2).unwrap()) > 0.0);
        for &v in &m.boundary_loop(1).unwrap().nodes {
            let (p, n) = (m.nodes()[v], m.node_normal(v).unwrap());
            assert!(((p[0] * n[0] + p[1] * n[1]) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_coarse() {
        assert!(matches!(polar_annulus_mesh(1.0, 2.0, [0.0, 0.0], 0, 8, (1, 2)), Err(Error::TooCoarse { .. })));
        assert!(matches!(polar_annulus_mesh(1.0, 2.0, [0.0, 0.0], 2, 2, (1, 2)), Err(Error::TooCoarse { .. })));
    }

    #[test]
    fn clockwise_triangle_is_flipped() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = TriMesh::from_parts(nodes, vec![[0, 2, 1]], &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        assert!(m.triangle_area(0) > 0.0);
    }

    #[test]
    fn missing_label_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = TriMesh::from_parts(nodes, vec![[0, 1, 2]], &[(0, 1, 1), (1, 2, 1)]);
        assert!(matches!(r, Err(Error::UnlabeledBoundary { .. })));
    }

    #[test]
    fn triple_edge_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 2.0]];
        let r = TriMesh::from_parts(nodes, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]], &[]);
        assert!(matches!(r, Err(Error::NonConformingMesh(_)) | Err(Error::InconsistentOrientation(_))));
    }

    #[test]
    fn refine_quadruples() {
        let m = polar_annulus_mesh(1.0, 2.0, [0.0, 0.0], 2, 8, (1, 2)).unwrap();
        let r = m.refine().unwrap();
        assert_eq!(r.triangles().len(), 128);
        assert_eq!(r.boundary_loop(2).unwrap().nodes.len(), 16);
        assert!((r.total_area() - m.total_area()).abs() < 1e-12);
    }
}
