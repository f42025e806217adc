//! Affine meshes of lines, triangles and parallelogram quadrilaterals with
//! face adjacency, orientation and boundary classification.
//!
//! Local vertex and face numbering (counterclockwise in 2D):
//!
//! * line: vertices `[a, b]`, face 0 at `a`, face 1 at `b`;
//! * triangle: reference vertices `(0,0), (1,0), (0,1)`, face `k` runs from
//!   vertex `k` to vertex `k + 1 (mod 3)`;
//! * quadrilateral: reference vertices `(0,0), (1,0), (1,1), (0,1)`, face `k`
//!   runs from vertex `k` to vertex `k + 1 (mod 4)`.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Line,
    Triangle,
    Quadrilateral,
}

impl ElementKind {
    pub fn dim(self) -> usize {
        match self {
            ElementKind::Line => 1,
            _ => 2,
        }
    }

    pub fn num_vertices(self) -> usize {
        match self {
            ElementKind::Line => 2,
            ElementKind::Triangle => 3,
            ElementKind::Quadrilateral => 4,
        }
    }

    pub fn num_faces(self) -> usize {
        self.num_vertices()
    }

    /// Measure of the reference element.
    pub fn reference_measure(self) -> f64 {
        match self {
            ElementKind::Triangle => 0.5,
            _ => 1.0,
        }
    }

    /// Local vertex indices of face `k`, in face parameter order.
    pub fn face_vertices(self, k: usize) -> (usize, Option<usize>) {
        match self {
            ElementKind::Line => (k, None),
            ElementKind::Triangle => (k, Some((k + 1) % 3)),
            ElementKind::Quadrilateral => (k, Some((k + 1) % 4)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    Periodic,
    Inflow,
    Outflow,
    Wall,
}

impl std::str::FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inflow" => Ok(BoundaryTag::Inflow),
            "outflow" => Ok(BoundaryTag::Outflow),
            "wall" => Ok(BoundaryTag::Wall),
            other => Err(Error::Mesh(format!("unknown boundary tag '{other}'"))),
        }
    }
}

/// Constant affine map `x = origin + J x_hat` of one element.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub origin: [f64; 2],
    pub jacobian: [[f64; 2]; 2],
    pub adjugate: [[f64; 2]; 2],
    pub det: f64,
    pub measure: f64,
}

impl ElementGeometry {
    fn new(kind: ElementKind, origin: [f64; 2], jacobian: [[f64; 2]; 2]) -> Self {
        let (adjugate, det) = match kind {
            // adjugate of a 1x1 matrix is the identity
            ElementKind::Line => ([[1.0, 0.0], [0.0, 0.0]], jacobian[0][0]),
            _ => {
                let [[a, b], [c, d]] = jacobian;
                ([[d, -b], [-c, a]], a * d - b * c)
            }
        };
        Self {
            origin,
            jacobian,
            adjugate,
            det,
            measure: det * kind.reference_measure(),
        }
    }

    pub fn map(&self, xr: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xr[0] + j[0][1] * xr[1],
            self.origin[1] + j[1][0] * xr[0] + j[1][1] * xr[1],
        ]
    }
}

/// One side of a face: an element and its local face number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceSide {
    pub element: usize,
    pub local_face: usize,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub first: FaceSide,
    pub second: Option<FaceSide>,
    /// The second side traverses the face in the opposite parameter direction.
    pub reversed: bool,
    pub tag: BoundaryTag,
    /// Unit normal pointing out of the first side's element.
    pub normal: [f64; 2],
    pub measure: f64,
    /// Periodic translation taking the first side onto the second.
    pub offset: Option<[f64; 2]>,
}

/// Element-centric view of one local face.
#[derive(Debug, Clone, Copy)]
pub struct FaceLink {
    pub face: usize,
    pub neighbor: Option<FaceSide>,
    pub reversed: bool,
    pub normal: [f64; 2],
    pub measure: f64,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    kind: ElementKind,
    vertices: Vec<[f64; 2]>,
    elements: Vec<Vec<usize>>,
    geometry: Vec<ElementGeometry>,
    faces: Vec<Face>,
    links: Vec<Vec<FaceLink>>,
}

impl Mesh {
    /// Build a mesh from vertex coordinates and element connectivity. Every
    /// unmatched face becomes a boundary face tagged by `tagger`, which is
    /// given the face vertices and returns `None` for faces that will be
    /// paired periodically later.
    pub fn from_connectivity(
        kind: ElementKind,
        vertices: Vec<[f64; 2]>,
        elements: Vec<Vec<usize>>,
        mut tagger: impl FnMut(&[usize]) -> Option<BoundaryTag>,
    ) -> Result<Self> {
        let nv = kind.num_vertices();
        let mut geometry = Vec::with_capacity(elements.len());
        for (e, verts) in elements.iter().enumerate() {
            if verts.len() != nv {
                return Err(Error::Mesh(format!("element {e} has {} vertices, expected {nv}", verts.len())));
            }
            if let Some(&v) = verts.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("element {e} references missing vertex {v}")));
            }
            let g = element_geometry_from_vertices(kind, verts.iter().map(|&v| vertices[v]).collect::<Vec<_>>().as_slice())
                .map_err(|msg| Error::Mesh(format!("element {e}: {msg}")))?;
            geometry.push(g);
        }

        let mut pending: HashMap<Vec<usize>, FaceSide> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        for (e, verts) in elements.iter().enumerate() {
            for k in 0..kind.num_faces() {
                let fv = face_global_vertices(kind, verts, k);
                let mut key = fv.clone();
                key.sort_unstable();
                let side = FaceSide { element: e, local_face: k };
                match pending.remove(&key) {
                    None => {
                        pending.insert(key, side);
                    }
                    Some(first) => {
                        let first_fv = face_global_vertices(kind, &elements[first.element], first.local_face);
                        let reversed = kind.dim() == 2 && first_fv[0] == fv[1];
                        if kind.dim() == 2 && !reversed {
                            return Err(Error::Mesh(format!(
                                "elements {} and {e} traverse a shared face in the same direction",
                                first.element
                            )));
                        }
                        let (normal, measure) = face_normal(kind, &vertices, &first_fv);
                        faces.push(Face {
                            first,
                            second: Some(side),
                            reversed,
                            tag: BoundaryTag::Interior,
                            normal,
                            measure,
                            offset: None,
                        });
                    }
                }
            }
        }
        // boundary faces in deterministic order
        let mut boundary: Vec<(Vec<usize>, FaceSide)> = pending.into_iter().collect();
        boundary.sort_by_key(|(_, s)| (s.element, s.local_face));
        for (_, side) in boundary {
            let fv = face_global_vertices(kind, &elements[side.element], side.local_face);
            let tag = tagger(&fv).unwrap_or(BoundaryTag::Periodic);
            let (normal, measure) = face_normal(kind, &vertices, &fv);
            faces.push(Face {
                first: side,
                second: None,
                reversed: false,
                tag,
                normal,
                measure,
                offset: None,
            });
        }

        let mut mesh = Mesh {
            kind,
            vertices,
            elements,
            geometry,
            faces,
            links: Vec::new(),
        };
        mesh.rebuild_links();
        Ok(mesh)
    }

    fn rebuild_links(&mut self) {
        if self.kind == ElementKind::Line {
            // outward normal of the first side: -1 on local face 0, +1 on local face 1
            for f in &mut self.faces {
                f.normal = [if f.first.local_face == 0 { -1.0 } else { 1.0 }, 0.0];
            }
        }
        let nf = self.kind.num_faces();
        let dummy = FaceLink {
            face: usize::MAX,
            neighbor: None,
            reversed: false,
            normal: [0.0; 2],
            measure: 0.0,
            tag: BoundaryTag::Interior,
        };
        let mut links = vec![vec![dummy; nf]; self.elements.len()];
        for (id, f) in self.faces.iter().enumerate() {
            links[f.first.element][f.first.local_face] = FaceLink {
                face: id,
                neighbor: f.second,
                reversed: f.reversed,
                normal: f.normal,
                measure: f.measure,
                tag: f.tag,
            };
            if let Some(s) = f.second {
                links[s.element][s.local_face] = FaceLink {
                    face: id,
                    neighbor: Some(f.first),
                    reversed: f.reversed,
                    normal: [-f.normal[0], -f.normal[1]],
                    measure: f.measure,
                    tag: f.tag,
                };
            }
        }
        self.links = links;
    }

    /// Pair two boundary faces periodically. Both must be unpaired boundary
    /// faces of equal measure.
    fn pair_periodic(&mut self, a: usize, b: usize) -> Result<()> {
        let (fa, fb) = (&self.faces[a], &self.faces[b]);
        if fa.second.is_some() || fb.second.is_some() {
            return Err(Error::Mesh("periodic pairing of an interior face".into()));
        }
        if (fa.measure - fb.measure).abs() > 1e-12 * fa.measure.max(1e-300) {
            return Err(Error::Mesh(format!(
                "periodic faces {a} and {b} differ in length ({} vs {})",
                fa.measure, fb.measure
            )));
        }
        let va = face_global_vertices(self.kind, &self.elements[fa.first.element], fa.first.local_face);
        let vb = face_global_vertices(self.kind, &self.elements[fb.first.element], fb.first.local_face);
        let offset = [
            self.vertices[vb[0]][0] - self.vertices[va[0]][0],
            self.vertices[vb[0]][1] - self.vertices[va[0]][1],
        ];
        let reversed = if self.kind.dim() == 2 {
            // translated start of `a` coincides with the end of `b`
            let mid = |v: &[usize]| {
                let p = self.vertices[v[0]];
                let q = self.vertices[v[1]];
                [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
            };
            let (ma, mb) = (mid(&va), mid(&vb));
            let off = [mb[0] - ma[0], mb[1] - ma[1]];
            let start_a = [self.vertices[va[0]][0] + off[0], self.vertices[va[0]][1] + off[1]];
            let end_b = self.vertices[vb[1]];
            let d = ((start_a[0] - end_b[0]).powi(2) + (start_a[1] - end_b[1]).powi(2)).sqrt();
            d < 1e-9 * fa.measure
        } else {
            false
        };
        let second = fb.first;
        let fa = &mut self.faces[a];
        fa.second = Some(second);
        fa.reversed = reversed;
        fa.tag = BoundaryTag::Periodic;
        fa.offset = Some(offset);
        self.faces.remove(b);
        Ok(())
    }

    /// `n` equal elements on `[a, b]`; with `periodic` the end points are
    /// paired.
    pub fn structured_line(n: usize, interval: [f64; 2], periodic: bool) -> Result<Self> {
        Self::structured_line_tagged(n, interval, periodic, BoundaryTag::Outflow, BoundaryTag::Outflow)
    }

    /// Like [`Mesh::structured_line`] with explicit tags for the left and right
    /// end points.
    pub fn structured_line_tagged(
        n: usize,
        interval: [f64; 2],
        periodic: bool,
        left: BoundaryTag,
        right: BoundaryTag,
    ) -> Result<Self> {
        let [a, b] = interval;
        if n == 0 {
            return Err(Error::InvalidInput("line mesh needs at least one element".into()));
        }
        if !(a < b) {
            return Err(Error::InvalidInput(format!("degenerate interval [{a}, {b}]")));
        }
        let h = (b - a) / n as f64;
        let vertices: Vec<[f64; 2]> = (0..=n)
            .map(|i| [if i == n { b } else { a + i as f64 * h }, 0.0])
            .collect();
        let elements = (0..n).map(|i| vec![i, i + 1]).collect();
        let mut mesh = Self::from_connectivity(ElementKind::Line, vertices, elements, |fv| {
            if periodic {
                None
            } else if fv[0] == 0 {
                Some(left)
            } else {
                Some(right)
            }
        })?;
        if periodic {
            let find = |mesh: &Mesh, v: usize| {
                mesh.faces
                    .iter()
                    .position(|f| f.second.is_none() && face_global_vertices(ElementKind::Line, &mesh.elements[f.first.element], f.first.local_face)[0] == v)
                    .expect("end point face")
            };
            let fa = find(&mesh, 0);
            let fb = find(&mesh, n);
            mesh.pair_periodic(fa, fb)?;
            mesh.rebuild_links();
        }
        Ok(mesh)
    }

    /// Axis-aligned uniform quadrilateral mesh of `bbox = [[x0, x1], [y0, y1]]`.
    pub fn structured_quad(nx: usize, ny: usize, bbox: [[f64; 2]; 2], spec: &QuadBoundarySpec) -> Result<Self> {
        let [[x0, x1], [y0, y1]] = bbox;
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidInput("quad mesh needs nx, ny >= 1".into()));
        }
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::InvalidInput(format!("degenerate bounding box {bbox:?}")));
        }
        let x_periodic = matches!(spec.left, SideRule::Periodic) || matches!(spec.right, SideRule::Periodic);
        let y_periodic = matches!(spec.bottom, SideRule::Periodic) || matches!(spec.top, SideRule::Periodic);
        if x_periodic != (matches!(spec.left, SideRule::Periodic) && matches!(spec.right, SideRule::Periodic))
            || y_periodic != (matches!(spec.bottom, SideRule::Periodic) && matches!(spec.top, SideRule::Periodic))
        {
            return Err(Error::InvalidInput("periodic sides must come in opposite pairs".into()));
        }
        let coord = |i: usize, n: usize, a: f64, b: f64| if i == n { b } else { a + (b - a) * i as f64 / n as f64 };
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([coord(i, nx, x0, x1), coord(j, ny, y0, y1)]);
            }
        }
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
        let verts = vertices.clone();
        let eps = 1e-12 * (x1 - x0).max(y1 - y0);
        let mut mesh = Self::from_connectivity(ElementKind::Quadrilateral, vertices, elements, |fv| {
            let p = verts[fv[0]];
            let q = verts[fv[1]];
            let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
            let (rule, along) = if (p[0] - x0).abs() < eps && (q[0] - x0).abs() < eps {
                (&spec.left, mid[1])
            } else if (p[0] - x1).abs() < eps && (q[0] - x1).abs() < eps {
                (&spec.right, mid[1])
            } else if (p[1] - y0).abs() < eps && (q[1] - y0).abs() < eps {
                (&spec.bottom, mid[0])
            } else {
                (&spec.top, mid[0])
            };
            rule.tag_at(along)
        })?;
        // periodic pairing by structured index
        let face_of = |mesh: &Mesh, e: usize, k: usize| {
            mesh.faces
                .iter()
                .position(|f| f.second.is_none() && f.first == FaceSide { element: e, local_face: k })
        };
        if x_periodic {
            for j in 0..ny {
                let a = face_of(&mesh, j * nx, 3).expect("left face");
                let b = face_of(&mesh, j * nx + nx - 1, 1).expect("right face");
                mesh.pair_periodic(a, b)?;
            }
        }
        if y_periodic {
            for i in 0..nx {
                let a = face_of(&mesh, i, 0).expect("bottom face");
                let b = face_of(&mesh, (ny - 1) * nx + i, 2).expect("top face");
                mesh.pair_periodic(a, b)?;
            }
        }
        mesh.rebuild_links();
        Ok(mesh)
    }

    /// Parse the whitespace-separated triangle mesh format
    /// (`NV NE NB`, vertex lines, triangle lines, tagged boundary edges).
    /// Vertex indices are zero based.
    pub fn read_tri_text(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let mut next = |what: &str| tokens.next().ok_or_else(|| Error::Mesh(format!("unexpected end of input reading {what}")));
        fn parse<T: std::str::FromStr>(tok: &str, what: &str) -> Result<T> {
            tok.parse().map_err(|_| Error::Mesh(format!("malformed {what} '{tok}'")))
        }
        let nv: usize = parse(next("header")?, "vertex count")?;
        let ne: usize = parse(next("header")?, "element count")?;
        let nb: usize = parse(next("header")?, "boundary count")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let x: f64 = parse(next("vertex")?, "coordinate")?;
            let y: f64 = parse(next("vertex")?, "coordinate")?;
            vertices.push([x, y]);
        }
        let mut elements = Vec::with_capacity(ne);
        for _ in 0..ne {
            let mut t = Vec::with_capacity(3);
            for _ in 0..3 {
                t.push(parse::<usize>(next("triangle")?, "vertex index")?);
            }
            elements.push(t);
        }
        let mut tags: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for _ in 0..nb {
            let a: usize = parse(next("boundary edge")?, "vertex index")?;
            let b: usize = parse(next("boundary edge")?, "vertex index")?;
            let tag: BoundaryTag = next("boundary tag")?.parse()?;
            tags.insert((a.min(b), a.max(b)), tag);
        }
        // an interior edge appearing three times or more is non-conforming
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &elements {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if let Some((e, _)) = edge_count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Mesh(format!("edge {e:?} shared by more than two triangles")));
        }
        if let Some((e, _)) = tags.iter().find(|(e, _)| edge_count.get(e).copied() != Some(1)) {
            return Err(Error::Mesh(format!("tagged edge {e:?} is not a boundary edge")));
        }
        let mut missing = None;
        let mesh = Self::from_connectivity(ElementKind::Triangle, vertices, elements, |fv| {
            let key = (fv[0].min(fv[1]), fv[0].max(fv[1]));
            match tags.get(&key) {
                Some(&t) => Some(t),
                None => {
                    missing.get_or_insert(key);
                    Some(BoundaryTag::Wall)
                }
            }
        })?;
        if let Some(edge) = missing {
            return Err(Error::Mesh(format!("boundary edge {edge:?} has no tag")));
        }
        Ok(mesh)
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn element_vertices(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.geometry[e]
    }

    /// Jacobian, adjugate and measure of element `e`.
    pub fn element_geometry(&self, e: usize) -> ([[f64; 2]; 2], [[f64; 2]; 2], f64) {
        let g = &self.geometry[e];
        (g.jacobian, g.adjugate, g.measure)
    }

    pub fn links(&self, e: usize) -> &[FaceLink] {
        &self.links[e]
    }

    pub fn total_measure(&self) -> f64 {
        self.geometry.iter().map(|g| g.measure).sum()
    }
}

/// Boundary rule for one side of a rectangle.
#[derive(Debug, Clone, Copy)]
pub enum SideRule {
    Periodic,
    Tag(BoundaryTag),
    /// `below` for faces whose midpoint coordinate along the side is less
    /// than `at`, `above` otherwise.
    Split { at: f64, below: BoundaryTag, above: BoundaryTag },
}

impl SideRule {
    fn tag_at(&self, along: f64) -> Option<BoundaryTag> {
        match *self {
            SideRule::Periodic => None,
            SideRule::Tag(t) => Some(t),
            SideRule::Split { at, below, above } => Some(if along < at { below } else { above }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadBoundarySpec {
    pub left: SideRule,
    pub right: SideRule,
    pub bottom: SideRule,
    pub top: SideRule,
}

impl QuadBoundarySpec {
    pub fn uniform(tag: BoundaryTag) -> Self {
        let r = SideRule::Tag(tag);
        Self { left: r, right: r, bottom: r, top: r }
    }

    pub fn periodic() -> Self {
        let r = SideRule::Periodic;
        Self { left: r, right: r, bottom: r, top: r }
    }
}

fn face_global_vertices(kind: ElementKind, verts: &[usize], k: usize) -> Vec<usize> {
    match kind.face_vertices(k) {
        (a, None) => vec![verts[a]],
        (a, Some(b)) => vec![verts[a], verts[b]],
    }
}

fn face_normal(kind: ElementKind, vertices: &[[f64; 2]], fv: &[usize]) -> ([f64; 2], f64) {
    match kind {
        // fixed up per side in `rebuild_links`
        ElementKind::Line => ([0.0, 0.0], 1.0),
        _ => {
            let p = vertices[fv[0]];
            let q = vertices[fv[1]];
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = (dx * dx + dy * dy).sqrt();
            ([dy / len, -dx / len], len)
        }
    }
}

fn element_geometry_from_vertices(kind: ElementKind, v: &[[f64; 2]]) -> std::result::Result<ElementGeometry, String> {
    let sub = |a: [f64; 2], b: [f64; 2]| [a[0] - b[0], a[1] - b[1]];
    let jac = match kind {
        ElementKind::Line => {
            let d = v[1][0] - v[0][0];
            [[d, 0.0], [0.0, 0.0]]
        }
        ElementKind::Triangle => {
            let (a, b) = (sub(v[1], v[0]), sub(v[2], v[0]));
            [[a[0], b[0]], [a[1], b[1]]]
        }
        ElementKind::Quadrilateral => {
            let (a, b) = (sub(v[1], v[0]), sub(v[3], v[0]));
            let c = sub(v[2], v[0]);
            let scale = (a[0].abs() + a[1].abs() + b[0].abs() + b[1].abs()).max(1e-300);
            if (c[0] - a[0] - b[0]).abs() + (c[1] - a[1] - b[1]).abs() > 1e-10 * scale {
                return Err("quadrilateral is not a parallelogram (non-affine mapping)".into());
            }
            [[a[0], b[0]], [a[1], b[1]]]
        }
    };
    let g = ElementGeometry::new(kind, v[0], jac);
    if !(g.det > 0.0) {
        return Err(format!("non-positive Jacobian determinant {} (negative area or clockwise ordering)", g.det));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TRIANGLES: &str = "# unit square\n4 2 4\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0 1 wall\n1 2 outflow\n2 3 wall\n3 0 inflow\n";

    #[test]
    fn periodic_line_pairs_end_points() {
        let m = Mesh::structured_line(2, [0.0, 1.0], true).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.faces().len(), 2);
        assert!(m.faces().iter().all(|f| f.second.is_some()));
        let periodic = m.faces().iter().find(|f| f.tag == BoundaryTag::Periodic).unwrap();
        assert_eq!(periodic.offset, Some([1.0, 0.0]));
        // face at 0 belongs to element 0, partner at 1 to element 1
        assert_eq!(periodic.first.element, 0);
        assert_eq!(periodic.second.unwrap().element, 1);
    }

    #[test]
    fn single_line_element_has_two_boundary_faces() {
        let m = Mesh::structured_line(1, [0.0, 1.0], false).unwrap();
        assert_eq!(m.faces().len(), 2);
        assert!(m.faces().iter().all(|f| f.second.is_none()));
        assert_eq!(m.links(0)[0].normal[0], -1.0);
        assert_eq!(m.links(0)[1].normal[0], 1.0);
    }

    #[test]
    fn line_mesh_rejects_bad_input() {
        assert!(Mesh::structured_line(0, [0.0, 1.0], false).is_err());
        assert!(Mesh::structured_line(3, [1.0, 1.0], false).is_err());
    }

    #[test]
    fn fine_line_mesh_element_size() {
        let m = Mesh::structured_line(192, [0.0, 1.0], true).unwrap();
        assert!((m.geometry(5).measure - 1.0 / 192.0).abs() < 1e-15);
    }

    #[test]
    fn unit_quad_has_four_boundary_faces() {
        let m = Mesh::structured_quad(1, 1, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::uniform(BoundaryTag::Wall)).unwrap();
        assert_eq!(m.faces().len(), 4);
        let (j, adj, area) = m.element_geometry(0);
        assert_eq!(j, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(adj, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(area, 1.0);
    }

    #[test]
    fn quad_of_side_h_scales_adjugate() {
        let h = 0.25;
        let m = Mesh::structured_quad(4, 4, [[0.0, 1.0], [0.0, 1.0]], &QuadBoundarySpec::periodic()).unwrap();
        let (_, adj, area) = m.element_geometry(7);
        assert!((adj[0][0] - h).abs() < 1e-15 && (adj[1][1] - h).abs() < 1e-15);
        assert_eq!(adj[0][1], 0.0);
        assert!((area - h * h).abs() < 1e-15);
        assert!(m.faces().iter().all(|f| f.second.is_some()));
        assert_eq!(m.faces().len(), 2 * 16);
    }

    #[test]
    fn double_mach_coarse_mesh_size() {
        let spec = QuadBoundarySpec {
            left: SideRule::Tag(BoundaryTag::Inflow),
            right: SideRule::Tag(BoundaryTag::Outflow),
            bottom: SideRule::Split { at: 1.0 / 6.0, below: BoundaryTag::Inflow, above: BoundaryTag::Wall },
            top: SideRule::Tag(BoundaryTag::Inflow),
        };
        let m = Mesh::structured_quad(4 * 48, 48, [[0.0, 4.0], [0.0, 1.0]], &spec).unwrap();
        assert_eq!(m.num_elements(), 4 * 48 * 48);
        let walls = m.faces().iter().filter(|f| f.tag == BoundaryTag::Wall).count();
        // bottom faces with midpoint beyond 1/6: x-centers (i + 1/2)/48 >= 1/6 -> i >= 8
        assert_eq!(walls, 4 * 48 - 8);
    }

    #[test]
    fn reads_two_triangle_square() {
        let m = Mesh::read_tri_text(TWO_TRIANGLES).unwrap();
        assert_eq!(m.num_elements(), 2);
        let interior = m.faces().iter().filter(|f| f.second.is_some()).count();
        assert_eq!(interior, 1);
        assert_eq!(m.faces().len(), 5);
        let (_, _, area) = m.element_geometry(0);
        assert!((area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let text = "3 1 3\n0 0\n1 0\n0 1\n0 2 1\n0 1 wall\n1 2 wall\n2 0 wall\n";
        let err = Mesh::read_tri_text(text).unwrap_err();
        assert!(err.to_string().contains("negative area"), "{err}");
    }

    #[test]
    fn rejects_unknown_tag_and_untagged_edges() {
        let bad_tag = TWO_TRIANGLES.replace("inflow", "sideways");
        assert!(Mesh::read_tri_text(&bad_tag).is_err());
        let missing = "4 2 3\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0 1 wall\n1 2 outflow\n2 3 wall\n";
        assert!(Mesh::read_tri_text(missing).is_err());
    }

    #[test]
    fn reference_triangle_measure() {
        let text = "3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 wall\n1 2 wall\n2 0 wall\n";
        let m = Mesh::read_tri_text(text).unwrap();
        assert!((m.element_geometry(0).2 - 0.5).abs() < 1e-15);
    }

    fn check_closed_and_antisymmetric(m: &Mesh) {
        for e in 0..m.num_elements() {
            let mut s = [0.0; 2];
            for l in m.links(e) {
                s[0] += l.measure * l.normal[0];
                s[1] += l.measure * l.normal[1];
            }
            assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12, "element {e} not closed: {s:?}");
            for (k, l) in m.links(e).iter().enumerate() {
                if let Some(nb) = l.neighbor {
                    let back = m.links(nb.element)[nb.local_face];
                    assert_eq!(back.neighbor, Some(FaceSide { element: e, local_face: k }));
                    assert!((back.normal[0] + l.normal[0]).abs() < 1e-12);
                    assert!((back.normal[1] + l.normal[1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn faces_are_closed_and_pairing_is_an_involution() {
        check_closed_and_antisymmetric(&Mesh::structured_line(5, [0.0, 2.0], true).unwrap());
        check_closed_and_antisymmetric(&Mesh::structured_quad(3, 2, [[0.0, 3.0], [-1.0, 1.0]], &QuadBoundarySpec::periodic()).unwrap());
        check_closed_and_antisymmetric(&Mesh::read_tri_text(TWO_TRIANGLES).unwrap());
    }
}
