//! Compressed quadtrees over canonical cubes: construction from points or cube
//! sets, point location, overlay, and the lowest-colored-ancestor index used for
//! simultaneous point location in many trees.

use std::collections::HashMap;
use std::fmt::Write as _;

use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::geom::{self, point_key, CanonicalCube, Lattice, PointSet, DEFAULT_MIN_LEVEL, MAX_DEPTH};

pub type NodeId = usize;

/// Axis-parallel bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    pub fn from_point(p: &[f64]) -> Self {
        BBox { lo: p.to_vec(), hi: p.to_vec() }
    }

    pub fn extend(&mut self, p: &[f64]) {
        for i in 0..p.len() {
            self.lo[i] = self.lo[i].min(p[i]);
            self.hi[i] = self.hi[i].max(p[i]);
        }
    }

    pub fn union(&mut self, other: &BBox) {
        for i in 0..self.lo.len() {
            self.lo[i] = self.lo[i].min(other.lo[i]);
            self.hi[i] = self.hi[i].max(other.hi[i]);
        }
    }

    pub fn contains(&self, other: &BBox) -> bool {
        (0..self.lo.len()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        (0..self.lo.len()).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    /// Distance from `q` to the closest point of the box.
    pub fn min_dist(&self, q: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..q.len() {
            let d = if q[i] < self.lo[i] {
                self.lo[i] - q[i]
            } else if q[i] > self.hi[i] {
                q[i] - self.hi[i]
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Distance from `q` to the furthest corner of the box.
    pub fn max_dist(&self, q: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..q.len() {
            let d = (q[i] - self.lo[i]).abs().max((self.hi[i] - q[i]).abs());
            s += d * d;
        }
        s.sqrt()
    }

    pub fn diameter(&self) -> f64 {
        geom::dist(&self.lo, &self.hi)
    }
}

/// Similarity map from input coordinates into the tree's unit cube:
/// `t = (x - offset) * scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub offset: Vec<f64>,
    pub scale: f64,
    /// Random shift `b` in `[0, 1/2]^d` when the frame is a shifted one.
    pub shift: Option<Vec<f64>>,
}

impl Frame {
    pub fn identity(dim: usize) -> Self {
        Frame { offset: vec![0.0; dim], scale: 1.0, shift: None }
    }

    /// `t = ((x - lo) / span + b) / 2`, which maps the box `lo + [0, span]^d` into `[0,1]^d`.
    pub fn shifted(lo: &[f64], span: f64, b: &[f64]) -> Self {
        Frame {
            offset: lo.iter().zip(b).map(|(l, s)| l - s * span).collect(),
            scale: 0.5 / span,
            shift: Some(b.to_vec()),
        }
    }

    pub fn to_tree(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.offset).map(|(x, o)| (x - o) * self.scale).collect()
    }

    pub fn key(&self, x: &[f64]) -> Result<Lattice> {
        point_key(&self.to_tree(x))
    }
}

/// One tree node.
#[derive(Debug, Clone)]
pub struct Node {
    pub cube: CanonicalCube,
    pub parent: Option<NodeId>,
    /// Children in increasing orthant order; each is strictly smaller than `cube`.
    pub children: SmallVec<[NodeId; 4]>,
    pub count: usize,
    pub weight: f64,
    /// Bounding box of the stored points, in input coordinates.
    pub bbox: Option<BBox>,
    pub rep: Option<usize>,
    /// Point indices stored at a leaf.
    pub points: Vec<usize>,
    pub colors: SmallVec<[u32; 2]>,
    pub payload: Option<u64>,
    /// Set when distinct points could not be separated above the minimum level.
    pub merged: bool,
}

impl Node {
    fn new(cube: CanonicalCube, parent: Option<NodeId>) -> Self {
        Node {
            cube,
            parent,
            children: SmallVec::new(),
            count: 0,
            weight: 0.0,
            bbox: None,
            rep: None,
            points: Vec::new(),
            colors: SmallVec::new(),
            payload: None,
            merged: false,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct CompressedQuadtree {
    dim: usize,
    nodes: Vec<Node>,
    frame: Frame,
    min_level: i32,
    index: HashMap<CanonicalCube, NodeId>,
}

const ROOT: NodeId = 0;

impl CompressedQuadtree {
    /// A tree holding only the root cube.
    pub fn empty(dim: usize, frame: Frame) -> Self {
        let root = CanonicalCube::root(dim);
        let mut index = HashMap::new();
        index.insert(root.clone(), ROOT);
        CompressedQuadtree { dim, nodes: vec![Node::new(root, None)], frame, min_level: DEFAULT_MIN_LEVEL, index }
    }

    /// Tree over the non-synthetic points of a normalized set, optionally shifted by
    /// `b in [0, 1/2]^d` (`t = (x + b) / 2`).
    pub fn from_points(ps: &PointSet, shift: Option<&[f64]>) -> Result<Self> {
        let frame = match shift {
            Some(b) => {
                if b.len() != ps.dim() || b.iter().any(|x| !(0.0..=0.5).contains(x)) {
                    return invalid("shift must lie in [0, 1/2]^d");
                }
                Frame::shifted(&vec![0.0; ps.dim()], 1.0, b)
            }
            None => Frame::identity(ps.dim()),
        };
        Self::from_points_in(ps, &ps.real_indices(), frame, DEFAULT_MIN_LEVEL)
    }

    /// Tree over the listed points, mapped into the unit cube by `frame`.
    pub fn from_points_in(ps: &PointSet, indices: &[usize], frame: Frame, min_level: i32) -> Result<Self> {
        if !(-MAX_DEPTH..=0).contains(&min_level) {
            return invalid("minimum level outside the lattice depth");
        }
        let mut t = CompressedQuadtree::empty(ps.dim(), frame);
        t.min_level = min_level;
        let mut items: Vec<(Lattice, usize)> = Vec::with_capacity(indices.len());
        for &i in indices {
            let key = t
                .frame
                .key(ps.point(i))
                .map_err(|_| Error::OutOfDomain(format!("point {i} lies outside the tree domain")))?;
            items.push((key, i));
        }
        items.sort_by_key(|it| it.1);
        t.attach_points(ROOT, items);
        t.aggregate(ps);
        Ok(t)
    }

    fn push_node(&mut self, cube: CanonicalCube, parent: NodeId) -> NodeId {
        let id = self.nodes.len();
        self.index.insert(cube.clone(), id);
        self.nodes.push(Node::new(cube, Some(parent)));
        self.nodes[parent].children.push(id);
        id
    }

    fn attach_points(&mut self, parent: NodeId, mut items: Vec<(Lattice, usize)>) {
        let pc = self.nodes[parent].cube.clone();
        items.sort_by_key(|it| pc.orthant_of_key(&it.0));
        let mut start = 0;
        while start < items.len() {
            let o = pc.orthant_of_key(&items[start].0);
            let mut end = start + 1;
            while end < items.len() && pc.orthant_of_key(&items[end].0) == o {
                end += 1;
            }
            let group: Vec<(Lattice, usize)> = items[start..end].to_vec();
            start = end;

            let orthant = pc.child(o);
            let lca_level = key_lca_level(&group);
            match lca_level {
                None => {
                    let id = self.push_node(orthant, parent);
                    self.nodes[id].points = group.iter().map(|g| g.1).collect();
                }
                Some(l) if l - 1 < self.min_level => {
                    let level = l.max(self.min_level).min(orthant.level());
                    let id = self.push_node(CanonicalCube::containing_key(&group[0].0, level), parent);
                    self.nodes[id].points = group.iter().map(|g| g.1).collect();
                    self.nodes[id].merged = true;
                }
                Some(l) => {
                    let cube = if l >= orthant.level() { orthant } else { CanonicalCube::containing_key(&group[0].0, l) };
                    let id = self.push_node(cube, parent);
                    self.attach_points(id, group);
                }
            }
        }
    }

    /// Bottom-up pass filling counts, weights, boxes and representatives.
    fn aggregate(&mut self, ps: &PointSet) {
        for v in (0..self.nodes.len()).rev() {
            let mut count = 0;
            let mut weight = 0.0;
            let mut bbox: Option<BBox> = None;
            let mut rep = None;
            for &p in &self.nodes[v].points {
                count += 1;
                weight += ps.weight(p);
                match &mut bbox {
                    Some(b) => b.extend(ps.point(p)),
                    None => bbox = Some(BBox::from_point(ps.point(p))),
                }
                rep = rep.or(Some(p));
            }
            let children = self.nodes[v].children.clone();
            for c in children {
                let ch = &self.nodes[c];
                count += ch.count;
                weight += ch.weight;
                if let Some(cb) = &ch.bbox {
                    match &mut bbox {
                        Some(b) => b.union(cb),
                        None => bbox = Some(cb.clone()),
                    }
                }
                rep = rep.or(ch.rep);
            }
            let n = &mut self.nodes[v];
            n.count = count;
            n.weight = weight;
            n.bbox = bbox;
            n.rep = rep;
        }
    }

    /// Minimal tree holding every listed cube as a node, with payloads attached.
    pub fn from_cubes(dim: usize, cubes: &[(CanonicalCube, Option<u64>)], frame: Frame) -> Result<Self> {
        let mut t = CompressedQuadtree::empty(dim, frame);
        let root = CanonicalCube::root(dim);
        let mut payload: HashMap<CanonicalCube, Option<u64>> = HashMap::with_capacity(cubes.len());
        for (c, p) in cubes {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.dim(), line: None });
            }
            let e = payload.entry(c.clone()).or_insert(None);
            if p.is_some() {
                *e = *p;
            }
        }
        if let Some(p) = payload.remove(&root) {
            t.nodes[ROOT].payload = p;
        }
        let mut items: Vec<(CanonicalCube, Option<u64>)> = payload.into_iter().collect();
        items.sort_by(|a, b| a.0.cmp(&b.0));
        t.attach_cubes(ROOT, items);
        Ok(t)
    }

    fn attach_cubes(&mut self, parent: NodeId, mut items: Vec<(CanonicalCube, Option<u64>)>) {
        if items.is_empty() {
            return;
        }
        let pc = self.nodes[parent].cube.clone();
        items.sort_by_key(|it| pc.orthant_of(&it.0));
        let mut start = 0;
        while start < items.len() {
            let o = pc.orthant_of(&items[start].0);
            let mut end = start + 1;
            while end < items.len() && pc.orthant_of(&items[end].0) == o {
                end += 1;
            }
            let mut group: Vec<(CanonicalCube, Option<u64>)> = items[start..end].to_vec();
            start = end;

            let mut lca = group[0].0.clone();
            for g in &group[1..] {
                lca = lca.common_ancestor(&g.0);
            }
            let mut node_payload = None;
            if let Some(pos) = group.iter().position(|g| g.0 == lca) {
                node_payload = group.swap_remove(pos).1;
            }
            let id = self.push_node(lca, parent);
            self.nodes[id].payload = node_payload;
            self.attach_cubes(id, group);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> NodeId {
        ROOT
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn min_level(&self) -> i32 {
        self.min_level
    }

    pub fn set_min_level(&mut self, l: i32) {
        self.min_level = l;
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v]
    }

    pub fn node_mut(&mut self, v: NodeId) -> &mut Node {
        &mut self.nodes[v]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Node whose cube equals `cube`, if any.
    pub fn find(&self, cube: &CanonicalCube) -> Option<NodeId> {
        self.index.get(cube).copied()
    }

    /// Lowest node whose region (cube minus child cubes) contains `q`.
    pub fn locate(&self, q: &[f64]) -> Result<NodeId> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: q.len(), line: None });
        }
        let key = self.frame.key(q)?;
        Ok(self.locate_key(&key))
    }

    pub fn locate_key(&self, key: &[u64]) -> NodeId {
        let mut v = ROOT;
        'down: loop {
            for &c in &self.nodes[v].children {
                if self.nodes[c].cube.contains_key(key) {
                    v = c;
                    continue 'down;
                }
            }
            return v;
        }
    }

    /// Root-to-node path of [`Self::locate`].
    pub fn locate_path(&self, q: &[f64]) -> Result<Vec<NodeId>> {
        let v = self.locate(q)?;
        let mut path = vec![v];
        let mut u = v;
        while let Some(p) = self.nodes[u].parent {
            path.push(p);
            u = p;
        }
        path.reverse();
        Ok(path)
    }

    /// True if `q` lies in the region of `v`.
    pub fn region_contains(&self, v: NodeId, q: &[f64]) -> Result<bool> {
        let key = self.frame.key(q)?;
        let n = &self.nodes[v];
        Ok(n.cube.contains_key(&key) && n.children.iter().all(|&c| !self.nodes[c].cube.contains_key(&key)))
    }

    /// True if the children of `v` tile its cube.
    pub fn region_is_empty(&self, v: NodeId) -> bool {
        let n = &self.nodes[v];
        n.children.len() == 1 << self.dim
            && n.children.iter().all(|&c| self.nodes[c].cube.level() == n.cube.level() - 1)
    }

    /// Materializes every orthant of `v` as a node so that its region becomes empty.
    /// Returns the new nodes.
    pub fn split(&mut self, v: NodeId) -> Vec<NodeId> {
        let cube = self.nodes[v].cube.clone();
        let mut created = Vec::new();
        for o in 0..1usize << self.dim {
            let oc = cube.child(o);
            let inside: Option<usize> =
                self.nodes[v].children.iter().position(|&c| oc.contains(&self.nodes[c].cube));
            match inside {
                Some(pos) => {
                    let c = self.nodes[v].children[pos];
                    if self.nodes[c].cube == oc {
                        continue;
                    }
                    let id = self.nodes.len();
                    self.index.insert(oc.clone(), id);
                    let mut n = Node::new(oc, Some(v));
                    n.children.push(c);
                    self.nodes.push(n);
                    self.nodes[c].parent = Some(id);
                    self.nodes[v].children[pos] = id;
                    created.push(id);
                }
                None => {
                    let id = self.push_node(oc, v);
                    created.push(id);
                }
            }
        }
        let mut ch = std::mem::take(&mut self.nodes[v].children);
        ch.sort_by_key(|&c| cube.orthant_of(&self.nodes[c].cube));
        self.nodes[v].children = ch;
        created
    }

    /// Node ids in depth-first preorder, children by orthant.
    pub fn dfs_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in self.nodes[v].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn cubes(&self) -> Vec<CanonicalCube> {
        self.dfs_order().into_iter().map(|v| self.nodes[v].cube.clone()).collect()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.dfs_order().into_iter().filter(|&v| self.nodes[v].is_leaf()).collect()
    }

    /// Debug dump: one node per line `level corner... count [colors] payload`, DFS order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for v in self.dfs_order() {
            let n = &self.nodes[v];
            let _ = write!(s, "{}", n.cube.level());
            for c in n.cube.corner() {
                let _ = write!(s, " {c}");
            }
            let colors: Vec<String> = n.colors.iter().map(|c| c.to_string()).collect();
            let payload = n.payload.map_or_else(|| "-".to_string(), |p| p.to_string());
            let _ = writeln!(s, " {} [{}] {}", n.count, colors.join(","), payload);
        }
        s
    }

    /// Structural audit: nesting, parent links, orthant uniqueness, counts, weights and boxes.
    pub fn audit(&self) -> std::result::Result<(), String> {
        if self.nodes[ROOT].cube != CanonicalCube::root(self.dim) || self.nodes[ROOT].parent.is_some() {
            return Err("bad root".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        for v in self.dfs_order() {
            if seen[v] {
                return Err(format!("node {v} reached twice"));
            }
            seen[v] = true;
            let n = &self.nodes[v];
            if self.index.get(&n.cube) != Some(&v) {
                return Err(format!("node {v} missing from the cube index"));
            }
            let mut orthants = Vec::new();
            let mut count = n.points.len();
            let mut weight_children = 0.0;
            for &c in &n.children {
                let ch = &self.nodes[c];
                if ch.parent != Some(v) {
                    return Err(format!("child {c} of {v} has a wrong parent link"));
                }
                if ch.cube.level() >= n.cube.level() || !n.cube.contains(&ch.cube) {
                    return Err(format!("child {c} not strictly inside {v}"));
                }
                let o = n.cube.orthant_of(&ch.cube);
                if orthants.contains(&o) {
                    return Err(format!("two children of {v} share orthant {o}"));
                }
                orthants.push(o);
                count += ch.count;
                weight_children += ch.weight;
                if let (Some(b), Some(cb)) = (&n.bbox, &ch.bbox) {
                    if !b.contains(cb) {
                        return Err(format!("bbox of {v} misses child {c}"));
                    }
                }
            }
            if n.count != count {
                return Err(format!("count of {v} is {} but children and points give {count}", n.count));
            }
            if n.points.is_empty() && !n.children.is_empty() {
                let tol = 1e-9 * weight_children.abs().max(1.0);
                if (n.weight - weight_children).abs() > tol {
                    return Err(format!("weight of {v} differs from its children"));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("unreachable nodes".into());
        }
        Ok(())
    }

    pub fn same_domain(&self, other: &CompressedQuadtree) -> bool {
        self.dim == other.dim && self.frame == other.frame
    }
}

/// Level of the smallest canonical cube holding every key, or `None` when all keys coincide.
fn key_lca_level(items: &[(Lattice, usize)]) -> Option<i32> {
    let d = items[0].0.len();
    let mut high = -1i32;
    for i in 0..d {
        let mut lo = u64::MAX;
        let mut hi = 0u64;
        for it in items {
            lo = lo.min(it.0[i]);
            hi = hi.max(it.0[i]);
        }
        let x = lo ^ hi;
        if x != 0 {
            high = high.max(63 - x.leading_zeros() as i32);
        }
    }
    if high < 0 {
        None
    } else {
        Some(high + 1 - MAX_DEPTH)
    }
}

/// Overlay of two trees with provenance pointers.
#[derive(Debug, Clone)]
pub struct Overlay {
    pub tree: CompressedQuadtree,
    /// Smallest node of `a` whose cube contains the overlay node's cube.
    pub from_a: Vec<Option<NodeId>>,
    pub from_b: Vec<Option<NodeId>>,
}

/// Tree whose cube set is the union of both inputs.
pub fn overlay(a: &CompressedQuadtree, b: &CompressedQuadtree) -> Result<Overlay> {
    if !a.same_domain(b) {
        return invalid("overlay needs trees with the same root cube and shift");
    }
    let mut cubes: Vec<(CanonicalCube, Option<u64>)> = Vec::with_capacity(a.len() + b.len());
    cubes.extend(a.nodes.iter().map(|n| (n.cube.clone(), None)));
    cubes.extend(b.nodes.iter().map(|n| (n.cube.clone(), None)));
    let tree = CompressedQuadtree::from_cubes(a.dim, &cubes, a.frame.clone())?;
    let from_a = provenance(&tree, a);
    let from_b = provenance(&tree, b);
    Ok(Overlay { tree, from_a, from_b })
}

/// For every node of `t`, the smallest node of `src` whose cube contains it.
fn provenance(t: &CompressedQuadtree, src: &CompressedQuadtree) -> Vec<Option<NodeId>> {
    let mut out = vec![None; t.len()];
    let mut stack: Vec<(NodeId, Option<NodeId>)> = vec![(ROOT, None)];
    while let Some((v, inherited)) = stack.pop() {
        let here = src.find(&t.nodes[v].cube).or(inherited);
        out[v] = here;
        for &c in &t.nodes[v].children {
            stack.push((c, here));
        }
    }
    out
}

/// Euler-tour index answering lowest-colored-ancestor queries in `O(I)`.
#[derive(Debug, Clone)]
pub struct ColorSnapshotIndex {
    colors: usize,
    /// `(color, new lowest node)` updates along the Euler traversal.
    updates: Vec<(u32, u32)>,
    /// Full color arrays after every `colors` updates.
    snapshots: Vec<Vec<u32>>,
    /// Position in `updates` right after entering each node.
    anchor: Vec<usize>,
}

const NONE32: u32 = u32::MAX;

pub fn build_color_index(t: &CompressedQuadtree, colors: usize) -> Result<ColorSnapshotIndex> {
    let mut anchor = vec![0usize; t.len()];
    if colors == 0 {
        return Ok(ColorSnapshotIndex { colors, updates: Vec::new(), snapshots: Vec::new(), anchor });
    }
    for (v, n) in t.nodes.iter().enumerate() {
        if let Some(&c) = n.colors.iter().find(|&&c| c as usize >= colors) {
            return invalid(format!("node {v} has color {c} but only {colors} colors exist"));
        }
    }
    let mut updates = Vec::new();
    let mut state = vec![NONE32; colors];
    // Undo records per open node: (color, previous value).
    enum Step {
        Enter(NodeId),
        Exit(Vec<(u32, u32)>),
    }
    let mut stack = vec![Step::Enter(ROOT)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(v) => {
                let mut undo = Vec::new();
                for &c in &t.nodes[v].colors {
                    undo.push((c, state[c as usize]));
                    state[c as usize] = v as u32;
                    updates.push((c, v as u32));
                }
                anchor[v] = updates.len();
                stack.push(Step::Exit(undo));
                for &c in t.nodes[v].children.iter().rev() {
                    stack.push(Step::Enter(c));
                }
            }
            Step::Exit(undo) => {
                for (c, prev) in undo.into_iter().rev() {
                    state[c as usize] = prev;
                    updates.push((c, prev));
                }
            }
        }
    }
    let mut snapshots = Vec::with_capacity(updates.len() / colors + 1);
    let mut cur = vec![NONE32; colors];
    snapshots.push(cur.clone());
    for (i, &(c, v)) in updates.iter().enumerate() {
        cur[c as usize] = v;
        if (i + 1) % colors == 0 {
            snapshots.push(cur.clone());
        }
    }
    Ok(ColorSnapshotIndex { colors, updates, snapshots, anchor })
}

impl ColorSnapshotIndex {
    pub fn colors(&self) -> usize {
        self.colors
    }

    /// Stored integers: updates, snapshot entries and anchors.
    pub fn entry_count(&self) -> usize {
        self.updates.len() + self.snapshots.len() * self.colors + self.anchor.len()
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshots.len()
    }

    pub fn update_count(&self) -> usize {
        self.updates.len()
    }

    /// Entry `i` is the lowest node colored `i` on the root-to-`node` path.
    pub fn lowest_colored_ancestors(&self, node: NodeId) -> Result<Vec<Option<NodeId>>> {
        if node >= self.anchor.len() {
            return invalid(format!("unknown node {node}"));
        }
        if self.colors == 0 {
            return Ok(Vec::new());
        }
        let pos = self.anchor[node];
        let t = pos / self.colors;
        let mut state = self.snapshots[t].clone();
        for &(c, v) in &self.updates[t * self.colors..pos] {
            state[c as usize] = v;
        }
        Ok(state.into_iter().map(|v| if v == NONE32 { None } else { Some(v as NodeId) }).collect())
    }
}

/// Point location in several trees at once through their overlay.
#[derive(Debug, Clone)]
pub struct SimultaneousLocator {
    tree: CompressedQuadtree,
    index: ColorSnapshotIndex,
    /// For every overlay node, `(source tree, node id in that tree)` for each tree sharing its cube.
    sources: Vec<SmallVec<[(u32, NodeId); 2]>>,
    trees: usize,
}

pub fn locate_all(trees: &[&CompressedQuadtree]) -> Result<SimultaneousLocator> {
    let first = trees.first().ok_or_else(|| Error::InvalidArgument("no trees to overlay".into()))?;
    if trees.iter().any(|t| !t.same_domain(first)) {
        return invalid("trees must share the root cube and shift");
    }
    let total: usize = trees.iter().map(|t| t.len()).sum();
    let mut cubes: Vec<(CanonicalCube, Option<u64>)> = Vec::with_capacity(total);
    for t in trees {
        cubes.extend(t.nodes.iter().map(|n| (n.cube.clone(), None)));
    }
    let mut tree = CompressedQuadtree::from_cubes(first.dim, &cubes, first.frame.clone())?;
    let mut sources: Vec<SmallVec<[(u32, NodeId); 2]>> = vec![SmallVec::new(); tree.len()];
    for (i, t) in trees.iter().enumerate() {
        for (u, n) in t.nodes.iter().enumerate() {
            let w = tree.find(&n.cube).expect("overlay holds every source cube");
            tree.nodes[w].colors.push(i as u32);
            sources[w].push((i as u32, u));
        }
    }
    let index = build_color_index(&tree, trees.len())?;
    Ok(SimultaneousLocator { tree, index, sources, trees: trees.len() })
}

impl SimultaneousLocator {
    /// Entry `i` is the node of tree `i` whose region contains `q`.
    pub fn locate(&self, q: &[f64]) -> Result<Vec<NodeId>> {
        let w = self.tree.locate(q)?;
        let anc = self.index.lowest_colored_ancestors(w)?;
        let mut out = Vec::with_capacity(self.trees);
        for (i, a) in anc.into_iter().enumerate() {
            let a = a.ok_or_else(|| Error::ContractViolation(format!("tree {i} has no cube containing the query")))?;
            let (_, u) = self.sources[a]
                .iter()
                .find(|s| s.0 as usize == i)
                .copied()
                .ok_or_else(|| Error::ContractViolation("color without a source node".into()))?;
            out.push(u);
        }
        Ok(out)
    }

    pub fn tree(&self) -> &CompressedQuadtree {
        &self.tree
    }

    pub fn index(&self) -> &ColorSnapshotIndex {
        &self.index
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pts: &[[f64; 2]]) -> PointSet {
        PointSet::from_coords(2, pts.iter().flatten().copied().collect(), None).unwrap()
    }

    #[test]
    fn single_point_tree() {
        let t = CompressedQuadtree::from_points(&set(&[[0.6, 0.7]]), None).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.node(0).count, 1);
        assert_eq!(t.locate(&[0.6, 0.7]).unwrap(), 1);
        t.audit().unwrap();
    }

    #[test]
    fn opposite_corners() {
        let t = CompressedQuadtree::from_points(&set(&[[0.5, 0.5], [1.0, 1.0]]), None).unwrap();
        assert!(t.len() <= 7);
        assert_eq!(t.leaves().len(), 2);
        t.audit().unwrap();
    }

    #[test]
    fn coincident_points_share_a_leaf() {
        let t = CompressedQuadtree::from_points(&set(&[[0.3, 0.3], [0.3, 0.3], [0.9, 0.1]]), None).unwrap();
        let leaf = t.locate(&[0.3, 0.3]).unwrap();
        assert_eq!(t.node(leaf).points, vec![0, 1]);
        assert_eq!(t.node(leaf).count, 2);
        t.audit().unwrap();
    }

    #[test]
    fn compressed_annulus_locates_to_the_compressed_node() {
        // Two points very close together far from a third: the pair sits under a small cube.
        let t = CompressedQuadtree::from_points(&set(&[[0.1, 0.1], [0.7001, 0.7001], [0.7002, 0.7002]]), None)
            .unwrap();
        let q = [0.55, 0.55];
        let v = t.locate(&q).unwrap();
        assert!(t.region_contains(v, &q).unwrap());
        assert!(!t.node(v).children.is_empty());
    }

    #[test]
    fn cubes_tree_and_split() {
        let root = CanonicalCube::root(2);
        let deep = root.child(3).child(3).child(0);
        let mut t = CompressedQuadtree::from_cubes(2, &[(deep.clone(), Some(9))], Frame::identity(2)).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.node(t.find(&deep).unwrap()).payload, Some(9));
        let created = t.split(0);
        assert_eq!(created.len(), 4);
        assert!(t.region_is_empty(0));
        t.audit().unwrap();
        let mid = t.find(&root.child(3)).unwrap();
        assert_eq!(t.node(mid).children.len(), 1);
    }

    #[test]
    fn color_index_star() {
        let root = CanonicalCube::root(2);
        let cubes: Vec<_> = (0..4).map(|o| (root.child(o), None)).collect();
        let mut t = CompressedQuadtree::from_cubes(2, &cubes, Frame::identity(2)).unwrap();
        for o in 0..4 {
            let v = t.find(&root.child(o)).unwrap();
            t.node_mut(v).colors.push(o as u32);
        }
        let idx = build_color_index(&t, 4).unwrap();
        for o in 0..4 {
            let v = t.find(&root.child(o)).unwrap();
            let anc = idx.lowest_colored_ancestors(v).unwrap();
            for (c, a) in anc.iter().enumerate() {
                assert_eq!(*a, if c == o { Some(v) } else { None });
            }
        }
        assert!(idx.lowest_colored_ancestors(99).is_err());
        t.node_mut(1).colors.push(7);
        assert!(build_color_index(&t, 4).is_err());
        assert_eq!(build_color_index(&t, 0).unwrap().entry_count(), t.len());
    }
}
