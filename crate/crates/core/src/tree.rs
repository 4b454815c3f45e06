//! Lazily grown Galton-Watson trees.
//!
//! Vertices are materialized on demand. A vertex's child count is a
//! deterministic function of the master seed and the vertex's *path label*
//! (a hash of its ancestors' child indices), so the same abstract tree
//! appears regardless of the order in which it is explored. Dense
//! [`VertexId`]s are handed out in exploration order and stay stable once
//! assigned.

use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::dist::OffspringDistribution;
use crate::rng::{combine, mix64, unit_f64};

const NONE: u32 = u32::MAX;
const UNEXPLORED: u32 = u32::MAX;
const ROOT_TAG: u64 = 0x726f_6f74;
const COUNT_TAG: u64 = 0x636f_756e_7473;

/// Dense vertex handle. `VertexId::ROOT` is the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId(pub u32);

impl VertexId {
    pub const ROOT: VertexId = VertexId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMode {
    /// Plain GW tree: the root has `X` children.
    Gw,
    /// Augmented GW tree: the root has `X + 1` children, the extra child
    /// carrying an independent copy of the GW tree.
    Agw,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeError {
    #[error("tree laws must put no mass at 0 offspring")]
    ZeroMass,
    #[error("unknown vertex {0}")]
    UnknownVertex(u32),
    #[error("tree exceeds {0} vertices")]
    Overflow(usize),
}

#[derive(Debug, Clone, Copy)]
struct Record {
    key: u64,
    parent: u32,
    depth: u32,
    first_child: u32,
    child_count: u32,
}

/// Contiguous block of child ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChildIds {
    start: u32,
    len: u32,
}

impl ChildIds {
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> Option<VertexId> {
        (i < self.len as usize).then(|| VertexId(self.start + i as u32))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        (self.start..self.start + self.len).map(VertexId)
    }

    pub fn to_vec(&self) -> Vec<VertexId> {
        self.iter().collect()
    }
}

/// A rooted GW or AGW tree, grown on demand.
#[derive(Debug, Clone)]
pub struct TreeStore {
    law: Arc<OffspringDistribution>,
    mode: TreeMode,
    seed: u64,
    records: Vec<Record>,
    explored: usize,
}

impl TreeStore {
    /// A store holding only the unexplored root.
    pub fn new(law: impl Into<Arc<OffspringDistribution>>, mode: TreeMode, seed: u64) -> Result<Self, TreeError> {
        let law = law.into();
        if law.h_min() == 0 {
            return Err(TreeError::ZeroMass);
        }
        let root =
            Record { key: combine(seed, ROOT_TAG), parent: NONE, depth: 0, first_child: 0, child_count: UNEXPLORED };
        Ok(Self { law, mode, seed, records: vec![root], explored: 0 })
    }

    pub fn law(&self) -> &OffspringDistribution {
        &self.law
    }

    pub fn mode(&self) -> TreeMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of materialized vertices (explored or not).
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of vertices whose children have been drawn.
    pub fn explored(&self) -> usize {
        self.explored
    }

    #[inline]
    fn record(&self, v: VertexId) -> Result<&Record, TreeError> {
        self.records.get(v.index()).ok_or(TreeError::UnknownVertex(v.0))
    }

    fn draw_count(&self, key: u64, is_root: bool) -> u32 {
        let x = self.law.quantile(unit_f64(mix64(key ^ COUNT_TAG)));
        if is_root && self.mode == TreeMode::Agw {
            x + 1
        } else {
            x
        }
    }

    fn explore(&mut self, v: VertexId) -> Result<ChildIds, TreeError> {
        let rec = *self.record(v)?;
        if rec.child_count != UNEXPLORED {
            return Ok(ChildIds { start: rec.first_child, len: rec.child_count });
        }
        let count = self.draw_count(rec.key, v == VertexId::ROOT);
        let start = self.records.len();
        if start + count as usize >= NONE as usize {
            return Err(TreeError::Overflow(start));
        }
        self.records.extend((0..count).map(|i| Record {
            key: combine(rec.key, i as u64),
            parent: v.0,
            depth: rec.depth + 1,
            first_child: 0,
            child_count: UNEXPLORED,
        }));
        let r = &mut self.records[v.index()];
        r.first_child = start as u32;
        r.child_count = count;
        self.explored += 1;
        Ok(ChildIds { start: start as u32, len: count })
    }

    /// Children of `v`, drawing them on first access.
    pub fn children(&mut self, v: VertexId) -> Result<ChildIds, TreeError> {
        self.explore(v)
    }

    /// Children of `v` if already explored.
    pub fn children_if_explored(&self, v: VertexId) -> Result<Option<ChildIds>, TreeError> {
        let rec = self.record(v)?;
        Ok((rec.child_count != UNEXPLORED).then_some(ChildIds { start: rec.first_child, len: rec.child_count }))
    }

    pub fn child_count(&mut self, v: VertexId) -> Result<u32, TreeError> {
        Ok(self.explore(v)?.len)
    }

    /// Number of neighbors: children plus the parent, if any.
    pub fn degree(&mut self, v: VertexId) -> Result<u32, TreeError> {
        let kids = self.explore(v)?.len;
        Ok(kids + u32::from(v != VertexId::ROOT))
    }

    pub fn parent(&self, v: VertexId) -> Result<Option<VertexId>, TreeError> {
        let p = self.record(v)?.parent;
        Ok((p != NONE).then_some(VertexId(p)))
    }

    /// Graph distance to the root.
    pub fn depth(&self, v: VertexId) -> Result<u32, TreeError> {
        Ok(self.record(v)?.depth)
    }

    /// The `j`-th neighbor of `v`: children first (in order), the parent last.
    pub fn neighbor(&mut self, v: VertexId, j: u32) -> Result<VertexId, TreeError> {
        let kids = self.explore(v)?;
        if j < kids.len {
            Ok(VertexId(kids.start + j))
        } else {
            let p = self.record(v)?.parent;
            if p == NONE || j > kids.len {
                Err(TreeError::UnknownVertex(j))
            } else {
                Ok(VertexId(p))
            }
        }
    }

    /// In AGW mode, the root's extra child (the top of the augmenting copy).
    pub fn augmentation_child(&mut self) -> Option<VertexId> {
        match self.mode {
            TreeMode::Gw => None,
            TreeMode::Agw => {
                let kids = self.explore(VertexId::ROOT).ok()?;
                kids.get(kids.len() - 1)
            }
        }
    }

    /// Position-independent label of `v`, a hash of the seed and of the child
    /// indices along the path from the root.
    pub fn path_label(&self, v: VertexId) -> Result<u64, TreeError> {
        Ok(self.record(v)?.key)
    }

    /// Writes `vertex_id,parent_id,depth,child_count` for every explored vertex.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "vertex_id,parent_id,depth,child_count")?;
        for (id, r) in self.records.iter().enumerate() {
            if r.child_count == UNEXPLORED {
                continue;
            }
            let parent = if r.parent == NONE { String::new() } else { r.parent.to_string() };
            writeln!(w, "{id},{parent},{},{}", r.depth, r.child_count)?;
        }
        Ok(())
    }
}
