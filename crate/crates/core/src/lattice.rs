//! Square-lattice geometry for the code state: oriented edges and faces,
//! string loops on the lattice and dual lattice, wedge partitions, and
//! rerouting around lost modes.
//!
//! Code modes live on edges. A lattice is either toroidal or an open
//! rectangular patch with smooth top/bottom and rough left/right boundaries.
//! Every lattice also carries its parent cluster graph (one node per code
//! vertex, face, and edge) so the state-preparation measurement pattern can
//! be expressed as index-parity predicates on cluster nodes.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

/// Boundary condition of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Periodic in both directions.
    Toroidal,
    /// Rectangular patch, smooth top/bottom and rough left/right.
    Open,
}

/// Edge type. Horizontal edges point +x, vertical edges point +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

/// Classification of a cluster-graph node.
///
/// Vertices are measured in `p` and faces in `q` during state preparation;
/// edge nodes survive as code modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Code vertex at (row, col).
    Vertex(usize, usize),
    /// Face node at (row, col); on open patches the extremal columns are the
    /// rough-boundary nodes rather than four-sided faces.
    FaceNode(usize, usize),
    /// Horizontal code edge (row, col).
    HEdge(usize, usize),
    /// Vertical code edge (row, col).
    VEdge(usize, usize),
}

/// Primal or dual string path with per-edge signs.
///
/// For primal paths the sign is o(e); for dual paths it is the framing f(e).
/// Both follow the checkerboard convention `(-1)^(row+col)` induced by the
/// measurement-based construction of the code state, under which
/// `o(e) * f(e) = +1` on every edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientedPath {
    pub kind: PathKind,
    pub edges: Vec<usize>,
    pub signs: Vec<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Primal,
    Dual,
}

/// Contiguous arcs of the broadcast loop, one per player.
#[derive(Debug, Clone, Serialize)]
pub struct WedgePartition {
    pub n: usize,
    pub w: usize,
    pub arcs: Vec<Arc>,
}

/// One player's arc: `w` consecutive edges of the broadcast loop.
#[derive(Debug, Clone, Serialize)]
pub struct Arc {
    /// 1-based player index.
    pub player: usize,
    pub edges: Vec<usize>,
    pub signs: Vec<i8>,
}

/// A player's slice of the lattice, identified by its vertex columns
/// `[start_col, start_col + width]`.
#[derive(Debug, Clone, Copy)]
pub struct Wedge {
    pub start_col: usize,
    pub width: usize,
}

/// Result of rerouting a wedge arc around lost modes.
#[derive(Debug, Clone)]
pub enum Reroute {
    /// A crossing arc with the pre-agreed endpoints exists.
    Path(OrientedPath),
    /// The lost modes disconnect the agreed endpoints: abort condition.
    Percolated,
}

/// Lattice geometry. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeSpec {
    rows: usize,
    cols: usize,
    boundary: Boundary,
}

impl LatticeSpec {
    /// Build a lattice, validating dimension and parity constraints.
    ///
    /// Toroidal lattices need `rows >= 2`, `cols >= 2`, and `rows * cols`
    /// even and at least 4. Open patches need `rows >= 1` horizontal lines
    /// and `cols >= 2` edges per line.
    pub fn build(rows: usize, cols: usize, boundary: Boundary) -> Result<Self> {
        match boundary {
            Boundary::Toroidal => {
                if rows < 2 || cols < 2 {
                    return Err(Error::Validation(format!(
                        "toroidal lattice requires rows >= 2 and cols >= 2, got {rows}x{cols}"
                    )));
                }
                if rows * cols % 2 != 0 || rows * cols < 4 {
                    return Err(Error::Validation(format!(
                        "toroidal lattice requires rows*cols even and >= 4, got {rows}*{cols}={}",
                        rows * cols
                    )));
                }
            }
            Boundary::Open => {
                if rows < 1 || cols < 2 {
                    return Err(Error::Validation(format!(
                        "open patch requires rows >= 1 and cols >= 2, got {rows}x{cols}"
                    )));
                }
            }
        }
        Ok(Self { rows, cols, boundary })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_h_edges(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_v_edges(&self) -> usize {
        match self.boundary {
            Boundary::Toroidal => self.rows * self.cols,
            Boundary::Open => self.rows.saturating_sub(1) * (self.cols - 1),
        }
    }

    pub fn num_edges(&self) -> usize {
        self.num_h_edges() + self.num_v_edges()
    }

    pub fn num_vertices(&self) -> usize {
        match self.boundary {
            Boundary::Toroidal => self.rows * self.cols,
            Boundary::Open => self.rows * (self.cols - 1),
        }
    }

    pub fn num_faces(&self) -> usize {
        match self.boundary {
            Boundary::Toroidal => self.rows * self.cols,
            Boundary::Open => self.rows.saturating_sub(1) * self.cols.saturating_sub(2),
        }
    }

    /// Edge id of horizontal edge (row, col).
    pub fn h_edge(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    /// Edge id of vertical edge. On the torus, `col` is a vertex column in
    /// `0..cols`; on open patches it is in `1..cols`.
    pub fn v_edge(&self, row: usize, col: usize) -> usize {
        match self.boundary {
            Boundary::Toroidal => {
                debug_assert!(row < self.rows && col < self.cols);
                self.num_h_edges() + row * self.cols + col
            }
            Boundary::Open => {
                debug_assert!(row + 1 < self.rows && col >= 1 && col < self.cols);
                self.num_h_edges() + row * (self.cols - 1) + (col - 1)
            }
        }
    }

    /// Kind and (row, col) of an edge id.
    pub fn edge_info(&self, edge: usize) -> Result<(EdgeKind, usize, usize)> {
        let nh = self.num_h_edges();
        if edge < nh {
            Ok((EdgeKind::Horizontal, edge / self.cols, edge % self.cols))
        } else if edge < self.num_edges() {
            let v = edge - nh;
            match self.boundary {
                Boundary::Toroidal => Ok((EdgeKind::Vertical, v / self.cols, v % self.cols)),
                Boundary::Open => Ok((
                    EdgeKind::Vertical,
                    v / (self.cols - 1),
                    v % (self.cols - 1) + 1,
                )),
            }
        } else {
            Err(Error::Index(format!(
                "edge {edge} out of range (num_edges = {})",
                self.num_edges()
            )))
        }
    }

    /// Sign `(-1)^(row+col)` shared by the primal orientation o(e) and the
    /// dual framing f(e).
    pub fn edge_sign(&self, edge: usize) -> Result<i8> {
        let (_, row, col) = self.edge_info(edge)?;
        Ok(if (row + col) % 2 == 0 { 1 } else { -1 })
    }

    /// Orientation sign o(e, f) of an edge on the boundary of a face:
    /// +1 for horizontal edges, -1 for vertical ones. `None` if not incident.
    pub fn orientation_sign(&self, edge: usize, face: usize) -> Option<i8> {
        let bnd = self.face_boundary(face).ok()?;
        bnd.iter().find(|(e, _)| *e == edge).map(|(_, s)| *s)
    }

    /// Boundary edges of a face with their o(e, f) signs, in
    /// bottom/top/left/right order.
    pub fn face_boundary(&self, face: usize) -> Result<[(usize, i8); 4]> {
        if face >= self.num_faces() {
            return Err(Error::Index(format!(
                "face {face} out of range (num_faces = {})",
                self.num_faces()
            )));
        }
        match self.boundary {
            Boundary::Toroidal => {
                let (r, c) = (face / self.cols, face % self.cols);
                Ok([
                    (self.h_edge(r, c), 1),
                    (self.h_edge((r + 1) % self.rows, c), 1),
                    (self.v_edge(r, c), -1),
                    (self.v_edge(r, (c + 1) % self.cols), -1),
                ])
            }
            Boundary::Open => {
                let per_row = self.cols - 2;
                let (r, k) = (face / per_row, face % per_row + 1);
                Ok([
                    (self.h_edge(r, k), 1),
                    (self.h_edge(r + 1, k), 1),
                    (self.v_edge(r, k), -1),
                    (self.v_edge(r, k + 1), -1),
                ])
            }
        }
    }

    /// Row used for the broadcast loop: the middle horizontal line.
    pub fn p2_row(&self) -> usize {
        self.rows / 2
    }

    /// Length of the broadcast loop.
    pub fn p2_len(&self) -> usize {
        self.cols
    }

    /// The primal string path along horizontal line `row`. Closed on the
    /// torus; rough-to-rough on open patches.
    pub fn primal_loop(&self, row: usize) -> Result<OrientedPath> {
        if row >= self.rows {
            return Err(Error::Index(format!("row {row} out of range")));
        }
        let edges: Vec<usize> = (0..self.cols).map(|c| self.h_edge(row, c)).collect();
        let signs = edges.iter().map(|&e| self.edge_sign(e).unwrap()).collect();
        Ok(OrientedPath { kind: PathKind::Primal, edges, signs })
    }

    /// The primal string path winding the short direction (toroidal only).
    pub fn primal_loop_vertical(&self, col: usize) -> Result<OrientedPath> {
        if self.boundary != Boundary::Toroidal {
            return Err(Error::Validation(
                "vertical string loop only exists on the torus".into(),
            ));
        }
        if col >= self.cols {
            return Err(Error::Index(format!("col {col} out of range")));
        }
        let edges: Vec<usize> = (0..self.rows).map(|r| self.v_edge(r, col)).collect();
        let signs = edges.iter().map(|&e| self.edge_sign(e).unwrap()).collect();
        Ok(OrientedPath { kind: PathKind::Primal, edges, signs })
    }

    /// The dual loop winding the short direction at edge column `col`. Its
    /// edges are the horizontal code edges it crosses, with framing signs.
    pub fn dual_loop(&self, col: usize) -> Result<OrientedPath> {
        if col >= self.cols {
            return Err(Error::Index(format!("col {col} out of range")));
        }
        let edges: Vec<usize> = (0..self.rows).map(|r| self.h_edge(r, col)).collect();
        let signs = edges.iter().map(|&e| self.edge_sign(e).unwrap()).collect();
        Ok(OrientedPath { kind: PathKind::Dual, edges, signs })
    }

    // ------------------------------------------------------------------
    // Cluster graph
    // ------------------------------------------------------------------

    /// Shape (rows, cols) of the parent cluster grid.
    pub fn cluster_shape(&self) -> (usize, usize) {
        match self.boundary {
            Boundary::Toroidal => (2 * self.rows, 2 * self.cols),
            Boundary::Open => (2 * self.rows - 1, 2 * self.cols - 1),
        }
    }

    pub fn num_cluster_nodes(&self) -> usize {
        let (r, c) = self.cluster_shape();
        r * c
    }

    /// Row-major cluster node id at (row, col).
    pub fn cluster_node(&self, row: usize, col: usize) -> usize {
        let (_, w) = self.cluster_shape();
        row * w + col
    }

    /// Classify a cluster node.
    pub fn cluster_node_kind(&self, node: usize) -> Result<NodeKind> {
        let (h, w) = self.cluster_shape();
        if node >= h * w {
            return Err(Error::Index(format!("cluster node {node} out of range")));
        }
        let (i, j) = (node / w, node % w);
        Ok(match self.boundary {
            Boundary::Toroidal => match (i % 2, j % 2) {
                (0, 0) => NodeKind::Vertex(i / 2, j / 2),
                (0, 1) => NodeKind::HEdge(i / 2, (j - 1) / 2),
                (1, 0) => NodeKind::VEdge((i - 1) / 2, j / 2),
                _ => NodeKind::FaceNode((i - 1) / 2, (j - 1) / 2),
            },
            Boundary::Open => match (i % 2, j % 2) {
                (0, 0) => NodeKind::HEdge(i / 2, j / 2),
                (0, 1) => NodeKind::Vertex(i / 2, (j + 1) / 2),
                (1, 0) => NodeKind::FaceNode((i - 1) / 2, j / 2),
                _ => NodeKind::VEdge((i - 1) / 2, (j + 1) / 2),
            },
        })
    }

    /// Cluster node carrying a given code edge.
    pub fn edge_cluster_node(&self, edge: usize) -> Result<usize> {
        let (kind, row, col) = self.edge_info(edge)?;
        Ok(match (self.boundary, kind) {
            (Boundary::Toroidal, EdgeKind::Horizontal) => self.cluster_node(2 * row, 2 * col + 1),
            (Boundary::Toroidal, EdgeKind::Vertical) => self.cluster_node(2 * row + 1, 2 * col),
            (Boundary::Open, EdgeKind::Horizontal) => self.cluster_node(2 * row, 2 * col),
            (Boundary::Open, EdgeKind::Vertical) => self.cluster_node(2 * row + 1, 2 * col - 1),
        })
    }

    /// Undirected cluster-grid adjacency (each pair listed once).
    pub fn cluster_edges(&self) -> Vec<(usize, usize)> {
        let (h, w) = self.cluster_shape();
        let mut out = Vec::with_capacity(2 * h * w);
        for i in 0..h {
            for j in 0..w {
                let a = self.cluster_node(i, j);
                match self.boundary {
                    Boundary::Toroidal => {
                        out.push((a, self.cluster_node(i, (j + 1) % w)));
                        out.push((a, self.cluster_node((i + 1) % h, j)));
                    }
                    Boundary::Open => {
                        if j + 1 < w {
                            out.push((a, self.cluster_node(i, j + 1)));
                        }
                        if i + 1 < h {
                            out.push((a, self.cluster_node(i + 1, j)));
                        }
                    }
                }
            }
        }
        out
    }

    /// Face nodes flanking a horizontal code edge (below, above), used to
    /// accumulate the preparation shift along the broadcast loop.
    pub fn h_edge_face_nodes(&self, row: usize, col: usize) -> (Option<usize>, Option<usize>) {
        match self.boundary {
            Boundary::Toroidal => {
                let (h, _) = self.cluster_shape();
                let below = self.cluster_node((2 * row + h - 1) % h, 2 * col + 1);
                let above = self.cluster_node((2 * row + 1) % h, 2 * col + 1);
                (Some(below), Some(above))
            }
            Boundary::Open => {
                let below = if row > 0 {
                    Some(self.cluster_node(2 * row - 1, 2 * col))
                } else {
                    None
                };
                let above = if 2 * row + 1 < 2 * self.rows - 1 {
                    Some(self.cluster_node(2 * row + 1, 2 * col))
                } else {
                    None
                };
                (below, above)
            }
        }
    }

    /// Face nodes flanking a vertical code edge (left, right), toroidal only.
    pub fn v_edge_face_nodes(&self, row: usize, col: usize) -> (Option<usize>, Option<usize>) {
        match self.boundary {
            Boundary::Toroidal => {
                let (_, w) = self.cluster_shape();
                let left = self.cluster_node(2 * row + 1, (2 * col + w - 1) % w);
                let right = self.cluster_node(2 * row + 1, (2 * col + 1) % w);
                (Some(left), Some(right))
            }
            Boundary::Open => (None, None),
        }
    }

    /// JSON-ready document with nodes, oriented edges, and faces.
    pub fn to_document(&self) -> LatticeDocument {
        let vertices = match self.boundary {
            Boundary::Toroidal => (0..self.num_vertices())
                .map(|id| VertexDocument { id, row: id / self.cols, col: id % self.cols })
                .collect(),
            Boundary::Open => (0..self.num_vertices())
                .map(|id| VertexDocument {
                    id,
                    row: id / (self.cols - 1),
                    col: id % (self.cols - 1) + 1,
                })
                .collect(),
        };
        let edges = (0..self.num_edges())
            .map(|id| {
                let (kind, row, col) = self.edge_info(id).unwrap();
                EdgeDocument {
                    id,
                    kind,
                    row,
                    col,
                    direction: match kind {
                        EdgeKind::Horizontal => "+x",
                        EdgeKind::Vertical => "+y",
                    },
                    sign: self.edge_sign(id).unwrap(),
                }
            })
            .collect();
        let faces = (0..self.num_faces())
            .map(|id| {
                let boundary = self.face_boundary(id).unwrap();
                FaceDocument {
                    id,
                    edges: boundary.iter().map(|&(e, s)| OrientedEdgeRef { edge: e, sign: s }).collect(),
                }
            })
            .collect();
        LatticeDocument {
            rows: self.rows,
            cols: self.cols,
            boundary: self.boundary,
            vertices,
            edges,
            faces,
        }
    }
}

/// Serializable lattice description for golden-file fixtures.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeDocument {
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
    pub vertices: Vec<VertexDocument>,
    pub edges: Vec<EdgeDocument>,
    pub faces: Vec<FaceDocument>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexDocument {
    pub id: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeDocument {
    pub id: usize,
    pub kind: EdgeKind,
    pub row: usize,
    pub col: usize,
    pub direction: &'static str,
    pub sign: i8,
}

#[derive(Debug, Clone, Serialize)]
pub struct FaceDocument {
    pub id: usize,
    pub edges: Vec<OrientedEdgeRef>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrientedEdgeRef {
    pub edge: usize,
    pub sign: i8,
}

/// Split the broadcast loop into `n` contiguous arcs of width `w`.
pub fn partition_wedges(spec: &LatticeSpec, n: usize, w: usize) -> Result<WedgePartition> {
    let p2 = spec.primal_loop(spec.p2_row())?;
    if n < 2 {
        return Err(Error::Partition(format!("need at least 2 players, got {n}")));
    }
    if n * w != p2.edges.len() {
        return Err(Error::Partition(format!(
            "n*w = {}*{} = {} does not tile the loop of length {}",
            n,
            w,
            n * w,
            p2.edges.len()
        )));
    }
    if n * w < 4 || n * w % 2 != 0 {
        return Err(Error::Partition(format!(
            "loop length n*w = {} must be even and >= 4",
            n * w
        )));
    }
    let arcs = (0..n)
        .map(|j| Arc {
            player: j + 1,
            edges: p2.edges[j * w..(j + 1) * w].to_vec(),
            signs: p2.signs[j * w..(j + 1) * w].to_vec(),
        })
        .collect();
    Ok(WedgePartition { n, w, arcs })
}

/// Find a crossing arc through `wedge` that avoids `lost` code modes.
///
/// The search prefers the straight arc on the broadcast row but accepts a
/// crossing between any pair of boundary-column vertices: a detour may end
/// off the originally agreed endpoint, and renegotiating endpoints with the
/// neighbors is left to the caller (the path carries its endpoints).
/// Breadth-first with ascending-index tie-breaking, so results are
/// deterministic. Returns `Reroute::Percolated` when the losses disconnect
/// the boundary columns.
pub fn reroute_path(
    spec: &LatticeSpec,
    lost: &BTreeSet<usize>,
    wedge: &Wedge,
) -> Result<Reroute> {
    if spec.boundary != Boundary::Toroidal {
        return Err(Error::Validation(
            "rerouting is defined on toroidal lattices".into(),
        ));
    }
    let w = wedge.width;
    if w == 0 || w > spec.cols {
        return Err(Error::Validation(format!(
            "wedge width {w} invalid for {} columns",
            spec.cols
        )));
    }
    for &e in lost {
        let (kind, _, col) = spec.edge_info(e)?;
        let local = (col + spec.cols - wedge.start_col % spec.cols) % spec.cols;
        let inside = match kind {
            EdgeKind::Horizontal => local < w,
            // Vertical edges on the boundary columns belong to the wedge.
            EdgeKind::Vertical => local <= w,
        };
        if !inside {
            return Err(Error::Validation(format!(
                "lost mode {e} lies outside the wedge"
            )));
        }
    }

    let rows = spec.rows;
    let cols = spec.cols;
    let start = wedge.start_col % cols;
    let p2_row = spec.p2_row();
    // Local vertex grid: rows x (w+1) columns, column k maps to (start+k) mod cols.
    let idx = |r: usize, k: usize| r * (w + 1) + k;
    let nverts = rows * (w + 1);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nverts]; // (node, edge id)
    let mut seen = vec![false; nverts];
    let mut queue = VecDeque::new();
    // Sources: every left-boundary vertex, broadcast row first so a clear
    // wedge yields the straight arc.
    let mut source_rows = vec![p2_row];
    source_rows.extend((0..rows).filter(|&r| r != p2_row));
    for r in source_rows {
        let s = idx(r, 0);
        seen[s] = true;
        queue.push_back(s);
    }
    let mut found = None;
    while let Some(v) = queue.pop_front() {
        if v % (w + 1) == w {
            found = Some(v);
            break;
        }
        let (r, k) = (v / (w + 1), v % (w + 1));
        // Candidate moves, ordered by destination index for determinism.
        let mut moves: Vec<(usize, usize)> = Vec::with_capacity(4);
        let gcol = (start + k) % cols;
        if k > 0 {
            let e = spec.h_edge(r, (start + k - 1) % cols);
            if !lost.contains(&e) {
                moves.push((idx(r, k - 1), e));
            }
        }
        if k < w {
            let e = spec.h_edge(r, gcol);
            if !lost.contains(&e) {
                moves.push((idx(r, k + 1), e));
            }
        }
        let up = spec.v_edge(r, gcol);
        if !lost.contains(&up) {
            moves.push((idx((r + 1) % rows, k), up));
        }
        let down = spec.v_edge((r + rows - 1) % rows, gcol);
        if !lost.contains(&down) {
            moves.push((idx((r + rows - 1) % rows, k), down));
        }
        moves.sort_unstable();
        for (to, e) in moves {
            if !seen[to] {
                seen[to] = true;
                parent[to] = Some((v, e));
                queue.push_back(to);
            }
        }
    }
    let Some(target) = found else {
        return Ok(Reroute::Percolated);
    };
    let mut edges = Vec::new();
    let mut at = target;
    while let Some((prev, e)) = parent[at] {
        edges.push(e);
        at = prev;
    }
    edges.reverse();
    let signs = edges
        .iter()
        .map(|&e| spec.edge_sign(e).unwrap())
        .collect();
    Ok(Reroute::Path(OrientedPath { kind: PathKind::Primal, edges, signs }))
}
