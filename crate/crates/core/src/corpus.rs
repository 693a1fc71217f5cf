//! Container hierarchy, resolved corpus and relation graphs.
//!
//! Containers nest as environment > platform > account > message > block.
//! Each container splits into contents and metadata constituents, each of
//! which holds data and sense components that are either explicit or
//! implicit. Payloads are opaque bytes: nothing here looks at message text.
//!
//! [`Corpus`] is the analysis view: posts and comments indexed by author, with
//! every comment resolved through its parent chain to a root post.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use rustc_hash::FxHashMap as HashMap;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::{CommentRecord, PostRecord};

pub const DEFAULT_DEPTH_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ContainerKind {
    Environment,
    Platform,
    Account,
    Message,
    /// Never instantiated from ingested data; message content is not analyzed.
    Block,
}

impl ContainerKind {
    /// 0 for the environment, increasing downwards.
    pub fn level(self) -> u8 {
        self as u8
    }

    /// The kind a node of this kind must hang under.
    pub fn parent_kind(self) -> Option<ContainerKind> {
        use ContainerKind::*;
        match self {
            Environment => None,
            Platform => Some(Environment),
            Account => Some(Platform),
            Message => Some(Account),
            Block => Some(Message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Constituent {
    Contents,
    Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Component {
    Data,
    Sense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Explicitness {
    Explicit,
    Implicit,
}

/// Which part of a container a relation attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Facet {
    pub constituent: Constituent,
    pub component: Component,
    pub explicitness: Explicitness,
}

impl Facet {
    /// Explicit metadata: authorship and timestamps live here.
    pub const METADATA: Facet = Facet {
        constituent: Constituent::Metadata,
        component: Component::Data,
        explicitness: Explicitness::Explicit,
    };
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Payload(pub Vec<u8>);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decomposition {
    pub contents_explicit: Payload,
    pub contents_implicit: Payload,
    pub metadata_explicit: Payload,
    pub metadata_implicit: Payload,
}

/// Index of a node inside its [`Hierarchy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeHandle(usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerNode {
    pub kind: ContainerKind,
    pub id: u64,
    pub parent: Option<NodeHandle>,
    pub parts: Decomposition,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("{child:?} cannot be placed under {parent:?}")]
    BadNesting { child: ContainerKind, parent: Option<ContainerKind> },
    #[error("unknown node handle")]
    UnknownNode,
}

/// Arena of container nodes with parent links.
#[derive(Debug, Clone, Default)]
pub struct Hierarchy {
    nodes: Vec<ContainerNode>,
}

impl Hierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        kind: ContainerKind,
        id: u64,
        parent: Option<NodeHandle>,
    ) -> Result<NodeHandle, HierarchyError> {
        let parent_kind = match parent {
            Some(h) => Some(self.nodes.get(h.0).ok_or(HierarchyError::UnknownNode)?.kind),
            None => None,
        };
        if kind.parent_kind() != parent_kind {
            return Err(HierarchyError::BadNesting { child: kind, parent: parent_kind });
        }
        self.nodes.push(ContainerNode { kind, id, parent, parts: Decomposition::default() });
        Ok(NodeHandle(self.nodes.len() - 1))
    }

    pub fn get(&self, h: NodeHandle) -> Option<&ContainerNode> {
        self.nodes.get(h.0)
    }

    pub fn get_mut(&mut self, h: NodeHandle) -> Option<&mut ContainerNode> {
        self.nodes.get_mut(h.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeHandle, &ContainerNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeHandle(i), n))
    }

    pub fn children(&self, h: NodeHandle) -> impl Iterator<Item = NodeHandle> + '_ {
        self.iter().filter(move |(_, n)| n.parent == Some(h)).map(|(c, _)| c)
    }
}

/// A container addressed by kind and id, plus the facet a relation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeRef {
    pub kind: ContainerKind,
    pub id: u64,
    pub facet: Facet,
}

impl NodeRef {
    pub fn account(id: u64) -> Self {
        Self { kind: ContainerKind::Account, id, facet: Facet::METADATA }
    }

    pub fn message(id: u64) -> Self {
        Self { kind: ContainerKind::Message, id, facet: Facet::METADATA }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum RelationError {
    #[error("not_horizontal")]
    NotHorizontal,
    #[error("not_homogeneous")]
    NotHomogeneous,
    #[error("mixed_directionality")]
    MixedDirectionality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationEdge {
    pub a: NodeRef,
    pub b: NodeRef,
    /// Aggregate (summed) weight of all merged edges.
    pub weight: f64,
    pub multiplicity: u64,
    /// The individual weights that were merged, in insertion order.
    pub weights: Vec<f64>,
}

/// Graph of one relation type. All edges share the graph's directedness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationGraph {
    pub target_identity: String,
    pub directed: bool,
    pub edges: Vec<RelationEdge>,
}

impl RelationGraph {
    pub fn new(target_identity: impl Into<String>, directed: bool) -> Self {
        Self { target_identity: target_identity.into(), directed, edges: Vec::new() }
    }

    /// Records one two-point edge. Parallel edges are kept until
    /// [`collapse_multi_edges`](Self::collapse_multi_edges).
    pub fn add_relation(&mut self, a: NodeRef, b: NodeRef, weight: f64, directed: bool) -> Result<(), RelationError> {
        if directed != self.directed {
            return Err(RelationError::MixedDirectionality);
        }
        if a.kind != b.kind {
            return Err(RelationError::NotHorizontal);
        }
        if a.facet != b.facet {
            return Err(RelationError::NotHomogeneous);
        }
        self.edges.push(RelationEdge { a, b, weight, multiplicity: 1, weights: vec![weight] });
        Ok(())
    }

    fn key(&self, e: &RelationEdge) -> (NodeRef, NodeRef) {
        if self.directed || e.a <= e.b {
            (e.a, e.b)
        } else {
            (e.b, e.a)
        }
    }

    /// Merges parallel edges into one per pair, ordered by endpoint.
    /// Undirected edges are keyed by their unordered pair.
    pub fn collapse_multi_edges(&mut self) {
        let mut merged: BTreeMap<(NodeRef, NodeRef), RelationEdge> = BTreeMap::new();
        for e in std::mem::take(&mut self.edges) {
            let (a, b) = self.key(&e);
            merged
                .entry((a, b))
                .and_modify(|m| {
                    m.weight += e.weight;
                    m.multiplicity += e.multiplicity;
                    m.weights.extend_from_slice(&e.weights);
                })
                .or_insert(RelationEdge { a, b, ..e });
        }
        self.edges = merged.into_values().collect();
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.edges.iter().map(|e| e.multiplicity).sum()
    }

    /// `a, b, multiplicity, aggregate_weight` per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W, delimiter: char) -> io::Result<()> {
        let d = delimiter;
        writeln!(w, "a{d}b{d}multiplicity{d}aggregate_weight")?;
        for e in &self.edges {
            writeln!(w, "{}{d}{}{d}{}{d}{}", e.a.id, e.b.id, e.multiplicity, e.weight)?;
        }
        Ok(())
    }

    /// `a:b=multiplicity:aggregate_weight` per line.
    pub fn write_key_value<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.edges {
            writeln!(w, "{}:{}={}:{}", e.a.id, e.b.id, e.multiplicity, e.weight)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionFailure {
    Orphan,
    Cycle,
    DepthExceeded,
    /// The comment's id collides with a post id or an earlier comment.
    DuplicateId,
}

impl ResolutionFailure {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Orphan => "orphan",
            Self::Cycle => "cycle",
            Self::DepthExceeded => "depth_exceeded",
            Self::DuplicateId => "duplicate_id",
        }
    }
}

impl fmt::Display for ResolutionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedComment {
    pub comment: CommentRecord,
    pub root_post_id: u64,
    /// Parent hops to the root post; 1 for a direct reply.
    pub depth: usize,
}

/// Immutable, indexed view over one platform's posts and comments.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    posts: Vec<PostRecord>,
    comments: Vec<CommentRecord>,
    resolved: Vec<ResolvedComment>,
    quarantined: Vec<(CommentRecord, ResolutionFailure)>,
    post_index: HashMap<u64, usize>,
    comment_index: HashMap<u64, usize>,
    posts_by_author: HashMap<u64, Vec<usize>>,
    comments_by_author: HashMap<u64, Vec<usize>>,
    resolved_by_post: HashMap<u64, Vec<usize>>,
    depth_limit: usize,
}

impl Corpus {
    pub fn build(posts: Vec<PostRecord>, comments: Vec<CommentRecord>) -> Self {
        Self::build_with_limit(posts, comments, DEFAULT_DEPTH_LIMIT)
    }

    /// Indexes the records and resolves every comment. Comments that cannot
    /// be resolved are kept aside with their failure reason.
    pub fn build_with_limit(posts: Vec<PostRecord>, comments: Vec<CommentRecord>, depth_limit: usize) -> Self {
        let mut corpus = Corpus { depth_limit, ..Default::default() };

        corpus.post_index.reserve(posts.len());
        for p in posts {
            if corpus.post_index.contains_key(&p.message_id) {
                continue;
            }
            let i = corpus.posts.len();
            corpus.post_index.insert(p.message_id, i);
            corpus.posts_by_author.entry(p.author_id).or_default().push(i);
            corpus.posts.push(p);
        }

        let mut rejected = Vec::new();
        corpus.comment_index.reserve(comments.len());
        for c in comments {
            if corpus.post_index.contains_key(&c.message_id) || corpus.comment_index.contains_key(&c.message_id) {
                rejected.push((c, ResolutionFailure::DuplicateId));
                continue;
            }
            let i = corpus.comments.len();
            corpus.comment_index.insert(c.message_id, i);
            corpus.comments_by_author.entry(c.author_id).or_default().push(i);
            corpus.comments.push(c);
        }

        for c in &corpus.comments {
            match corpus.resolve_record(c) {
                Ok(r) => {
                    let i = corpus.resolved.len();
                    corpus.resolved_by_post.entry(r.root_post_id).or_default().push(i);
                    corpus.resolved.push(r);
                }
                Err(f) => rejected.push((*c, f)),
            }
        }
        corpus.quarantined = rejected;
        corpus
    }

    fn resolve_record(&self, c: &CommentRecord) -> Result<ResolvedComment, ResolutionFailure> {
        let mut visited = vec![c.message_id];
        let mut parent = c.parent_id;
        let mut depth = 1;
        loop {
            if self.post_index.contains_key(&parent) {
                return Ok(ResolvedComment { comment: *c, root_post_id: parent, depth });
            }
            let Some(&i) = self.comment_index.get(&parent) else {
                return Err(ResolutionFailure::Orphan);
            };
            if visited.contains(&parent) {
                return Err(ResolutionFailure::Cycle);
            }
            if depth >= self.depth_limit {
                return Err(ResolutionFailure::DepthExceeded);
            }
            visited.push(parent);
            parent = self.comments[i].parent_id;
            depth += 1;
        }
    }

    /// Follows `parent_id` links from the given comment to its root post.
    pub fn resolve_parent_chain(&self, comment_id: u64) -> Result<ResolvedComment, ResolutionFailure> {
        let i = *self.comment_index.get(&comment_id).ok_or(ResolutionFailure::Orphan)?;
        self.resolve_record(&self.comments[i])
    }

    pub fn posts(&self) -> &[PostRecord] {
        &self.posts
    }

    /// All indexed comments, resolved or not.
    pub fn comments(&self) -> &[CommentRecord] {
        &self.comments
    }

    pub fn resolved(&self) -> &[ResolvedComment] {
        &self.resolved
    }

    pub fn quarantined(&self) -> &[(CommentRecord, ResolutionFailure)] {
        &self.quarantined
    }

    pub fn quarantine_counts(&self) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for (_, f) in &self.quarantined {
            *out.entry(f.as_str().to_owned()).or_default() += 1;
        }
        out
    }

    pub fn post(&self, id: u64) -> Option<&PostRecord> {
        self.post_index.get(&id).map(|&i| &self.posts[i])
    }

    pub fn posts_by_author(&self) -> impl Iterator<Item = (u64, impl Iterator<Item = &PostRecord> + '_)> + '_ {
        self.posts_by_author.iter().map(move |(&a, ix)| (a, ix.iter().map(move |&i| &self.posts[i])))
    }

    pub fn comments_by_author(&self) -> impl Iterator<Item = (u64, impl Iterator<Item = &CommentRecord> + '_)> + '_ {
        self.comments_by_author
            .iter()
            .map(move |(&a, ix)| (a, ix.iter().map(move |&i| &self.comments[i])))
    }

    /// Resolved comments grouped under their root post (commented posts only).
    pub fn comments_by_root_post(
        &self,
    ) -> impl Iterator<Item = (&PostRecord, impl Iterator<Item = &ResolvedComment> + '_)> + '_ {
        self.resolved_by_post
            .iter()
            .map(move |(pid, ix)| (&self.posts[self.post_index[pid]], ix.iter().map(move |&i| &self.resolved[i])))
    }

    pub fn post_author_count(&self) -> usize {
        self.posts_by_author.len()
    }

    pub fn commenter_count(&self) -> usize {
        self.comments_by_author.len()
    }

    pub fn commented_post_count(&self) -> usize {
        self.resolved_by_post.len()
    }

    pub fn depth_limit(&self) -> usize {
        self.depth_limit
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty() && self.comments.is_empty()
    }

    /// Directed commentator → post-author graph, one unit-weight edge per
    /// resolved comment, collapsed. Self-comments stay as self-loops.
    pub fn commentator_author_graph(&self) -> RelationGraph {
        let mut g = RelationGraph::new("commented_on", true);
        for r in &self.resolved {
            let author = self.posts[self.post_index[&r.root_post_id]].author_id;
            g.add_relation(NodeRef::account(r.comment.author_id), NodeRef::account(author), 1.0, true)
                .expect("account pairs are horizontal and homogeneous");
        }
        g.collapse_multi_edges();
        g
    }

    /// Materializes environment → platform → account → message containers.
    /// Comments hang under their author's account, like posts.
    pub fn hierarchy(&self, platform_id: u64) -> Hierarchy {
        let mut h = Hierarchy::new();
        let env = h.add(ContainerKind::Environment, 0, None).expect("root");
        let platform = h.add(ContainerKind::Platform, platform_id, Some(env)).expect("platform");
        let mut accounts: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for p in &self.posts {
            accounts.entry(p.author_id).or_default().push(p.message_id);
        }
        for c in &self.comments {
            accounts.entry(c.author_id).or_default().push(c.message_id);
        }
        for (account, messages) in accounts {
            let a = h.add(ContainerKind::Account, account, Some(platform)).expect("account");
            for m in messages {
                h.add(ContainerKind::Message, m, Some(a)).expect("message");
            }
        }
        h
    }
}
