//! Planar domains with labeled boundary components.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{polar_annulus_mesh, Point, TriMesh};

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    /// `r_in <= |x - center| <= r_out`; inner boundary is component 1, outer 2.
    Annulus { r_in: f64, r_out: f64, center: Point },
    /// Components of later parts are numbered after those of earlier parts.
    DisjointUnion(Vec<DomainSpec>),
    Meshed(Arc<TriMesh>),
}

pub fn make_annulus(r_in: f64, r_out: f64) -> Result<DomainSpec> {
    make_annulus_at(r_in, r_out, [0.0, 0.0])
}

pub fn make_annulus_at(r_in: f64, r_out: f64, center: Point) -> Result<DomainSpec> {
    if !(r_in > 0.0) {
        return Err(Error::NonPositiveRadius(r_in));
    }
    if !(r_out > 0.0) {
        return Err(Error::NonPositiveRadius(r_out));
    }
    if r_in >= r_out {
        return Err(Error::RadiiOutOfOrder { r_in, r_out });
    }
    Ok(DomainSpec::Annulus { r_in, r_out, center })
}

/// Structured mesh of any non-meshed domain; meshed domains are returned as is.
pub fn mesh_annulus(domain: &DomainSpec, n_r: usize, n_phi: usize) -> Result<TriMesh> {
    match domain {
        DomainSpec::Annulus { r_in, r_out, center } => polar_annulus_mesh(*r_in, *r_out, *center, n_r, n_phi, (1, 2)),
        DomainSpec::DisjointUnion(parts) => {
            let mut iter = parts.iter();
            let first = iter.next().ok_or_else(|| Error::InvalidInput("empty disjoint union".into()))?;
            let mut mesh = mesh_annulus(first, n_r, n_phi)?;
            for p in iter {
                mesh = mesh.disjoint_union(&mesh_annulus(p, n_r, n_phi)?)?;
            }
            Ok(mesh)
        }
        DomainSpec::Meshed(m) => Ok((**m).clone()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub component: usize,
    /// Arclength from the loop start.
    pub s: f64,
    /// Fraction of the loop length, in `[0, 1)`.
    pub tau: f64,
    pub position: Point,
    /// Euclidean outward unit normal.
    pub normal: Point,
    /// +1 counterclockwise, -1 clockwise.
    pub orientation: i8,
}

impl DomainSpec {
    pub fn num_components(&self) -> usize {
        match self {
            DomainSpec::Annulus { .. } => 2,
            DomainSpec::DisjointUnion(parts) => parts.iter().map(DomainSpec::num_components).sum(),
            DomainSpec::Meshed(m) => m.num_components(),
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        match self {
            DomainSpec::Annulus { r_in, r_out, center } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                *r_in <= r && r <= *r_out
            }
            DomainSpec::DisjointUnion(parts) => parts.iter().any(|p| p.contains(x)),
            DomainSpec::Meshed(m) => m.locate(x).is_some(),
        }
    }

    /// Sub-domain holding `component` and the component's local index there.
    fn resolve(&self, component: usize) -> Result<(&DomainSpec, usize)> {
        if component == 0 || component > self.num_components() {
            return Err(Error::UnknownComponent(component));
        }
        match self {
            DomainSpec::DisjointUnion(parts) => {
                let mut c = component;
                for p in parts {
                    let k = p.num_components();
                    if c <= k {
                        return p.resolve(c);
                    }
                    c -= k;
                }
                Err(Error::UnknownComponent(component))
            }
            _ => Ok((self, component)),
        }
    }

    pub fn component_length(&self, component: usize) -> Result<f64> {
        match self.resolve(component)? {
            (DomainSpec::Annulus { r_in, r_out, .. }, c) => Ok(TAU * if c == 1 { *r_in } else { *r_out }),
            (DomainSpec::Meshed(m), c) => m.loop_length(c),
            _ => unreachable!(),
        }
    }
}

/// Samples a boundary component in positive orientation (domain on the left).
/// For meshed domains the loop nodes are returned, with each edge subdivided
/// evenly once `n_samples` exceeds the node count.
pub fn boundary_trace(domain: &DomainSpec, component: usize, n_samples: usize) -> Result<Vec<BoundaryPoint>> {
    let (part, local) = domain.resolve(component)?;
    match part {
        DomainSpec::Annulus { r_in, r_out, center } => {
            let n = n_samples.max(3);
            let (r, sign) = if local == 1 { (*r_in, -1.0) } else { (*r_out, 1.0) };
            Ok((0..n)
                .map(|i| {
                    let tau = i as f64 / n as f64;
                    let theta = sign * TAU * tau;
                    let radial = [theta.cos(), theta.sin()];
                    BoundaryPoint {
                        component,
                        s: TAU * r * tau,
                        tau,
                        position: [center[0] + r * radial[0], center[1] + r * radial[1]],
                        normal: [sign * radial[0], sign * radial[1]],
                        orientation: sign as i8,
                    }
                })
                .collect())
        }
        DomainSpec::Meshed(mesh) => {
            let lp = mesh.boundary_loop(local)?;
            let nodes = mesh.nodes();
            let len = lp.nodes.len();
            let per_edge = n_samples.div_ceil(len).max(1);
            let mut area = 0.0;
            for k in 0..len {
                let (a, b) = (nodes[lp.nodes[k]], nodes[lp.nodes[(k + 1) % len]]);
                area += 0.5 * (a[0] * b[1] - b[0] * a[1]);
            }
            let orientation = if area > 0.0 { 1 } else { -1 };
            let total = mesh.loop_length(local)?;
            let mut out = Vec::with_capacity(len * per_edge);
            let mut s = 0.0;
            for k in 0..len {
                let (va, vb) = (lp.nodes[k], lp.nodes[(k + 1) % len]);
                let (a, b) = (nodes[va], nodes[vb]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let el = d[0].hypot(d[1]);
                let edge_normal = [d[1] / el, -d[0] / el];
                for q in 0..per_edge {
                    let f = q as f64 / per_edge as f64;
                    let normal = if q == 0 { mesh.node_normal(va).unwrap() } else { edge_normal };
                    out.push(BoundaryPoint {
                        component,
                        s: s + f * el,
                        tau: (s + f * el) / total,
                        position: [a[0] + f * d[0], a[1] + f * d[1]],
                        normal,
                        orientation,
                    });
                }
                s += el;
            }
            Ok(out)
        }
        DomainSpec::DisjointUnion(_) => unreachable!(),
    }
}
