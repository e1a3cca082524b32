//! Rooted trees carrying a channel on every edge, and leaf patterns.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};

/// Edge channels must agree on π to within this, componentwise.
pub const SHARED_PI_TOL: f64 = 1e-9;
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeLimits {
    pub node_cap: u64,
    pub enumeration_cap: u64,
}

impl Default for TreeLimits {
    fn default() -> Self {
        Self {
            node_cap: DEFAULT_NODE_CAP,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub child: usize,
    /// Index into [`TreeSpec::channels`].
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub label: String,
    pub parent: Option<usize>,
    pub children: Vec<Edge>,
}

/// A rooted tree with one channel per edge. Leaves are ordered depth-first,
/// left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    nodes: Vec<Node>,
    channels: Vec<Channel>,
    channel_names: Vec<String>,
    root: usize,
    leaves: Vec<usize>,
    leaf_slot: Vec<Option<usize>>,
    postorder: Vec<usize>,
    levels: usize,
    max_arity: usize,
    alphabet: usize,
    pi: Vec<f64>,
    limits: TreeLimits,
}

/// Node identifier in a tree document: either a number or a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeId {
    Number(u64),
    Name(String),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Number(n) => write!(f, "{n}"),
            NodeId::Name(s) => f.write_str(s),
        }
    }
}

/// On-disk tree document.
///
/// ```json
/// {"channels": {"p": [[0.9, 0.1], [0.1, 0.9]]},
///  "root": "r",
///  "edges": [["r", "a", "p"], ["r", "b", "p"]]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDocument {
    pub channels: BTreeMap<String, Vec<Vec<f64>>>,
    pub root: NodeId,
    #[serde(default)]
    pub edges: Vec<(NodeId, NodeId, String)>,
}

impl TreeSpec {
    pub fn complete_dary(d: usize, g: usize, channel: Channel) -> Result<Self> {
        Self::complete_dary_with_limits(d, g, channel, TreeLimits::default())
    }

    pub fn complete_dary_with_limits(
        d: usize,
        g: usize,
        channel: Channel,
        limits: TreeLimits,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("arity must be at least 1".into()));
        }
        let mut total: u128 = 0;
        let mut level: u128 = 1;
        let rounds = if d == 1 { 0 } else { g + 1 };
        if d == 1 {
            total = g as u128 + 1;
        }
        for _ in 0..rounds {
            total = total.saturating_add(level);
            level = level.saturating_mul(d as u128);
            if total == u128::MAX {
                break;
            }
        }
        if total > limits.node_cap as u128 {
            return Err(Error::SizeOverflow {
                nodes: total,
                cap: limits.node_cap,
            });
        }

        let mut nodes = vec![Node {
            label: "0".into(),
            parent: None,
            children: Vec::new(),
        }];
        let mut frontier = vec![0usize];
        for _ in 0..g {
            let mut next = Vec::with_capacity(frontier.len() * d);
            for &parent in &frontier {
                for _ in 0..d {
                    let id = nodes.len();
                    nodes.push(Node {
                        label: id.to_string(),
                        parent: Some(parent),
                        children: Vec::new(),
                    });
                    nodes[parent].children.push(Edge {
                        child: id,
                        channel: 0,
                    });
                    next.push(id);
                }
            }
            frontier = next;
        }
        let alphabet = channel.size();
        let pi = channel.pi().to_vec();
        Ok(Self::finish(
            nodes,
            vec![channel],
            vec!["p".into()],
            0,
            alphabet,
            pi,
            limits,
        ))
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        Self::from_document_with_limits(doc, TreeLimits::default())
    }

    pub fn from_document_with_limits(doc: &TreeDocument, limits: TreeLimits) -> Result<Self> {
        if doc.channels.is_empty() {
            return Err(Error::MalformedSpec("no channels defined".into()));
        }
        let mut channels = Vec::with_capacity(doc.channels.len());
        let mut channel_names = Vec::with_capacity(doc.channels.len());
        let mut channel_index = HashMap::new();
        for (name, matrix) in &doc.channels {
            let ch = Channel::new(matrix)?;
            channel_index.insert(name.as_str(), channels.len());
            channels.push(ch);
            channel_names.push(name.clone());
        }
        let alphabet = channels[0].size();
        if let Some(i) = channels.iter().position(|c| c.size() != alphabet) {
            return Err(Error::DimensionMismatch(format!(
                "channel `{}` has {} states, expected {alphabet}",
                channel_names[i],
                channels[i].size()
            )));
        }

        let mut ids: HashMap<NodeId, usize> = HashMap::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut intern = |id: &NodeId, nodes: &mut Vec<Node>| -> usize {
            *ids.entry(id.clone()).or_insert_with(|| {
                nodes.push(Node {
                    label: id.to_string(),
                    parent: None,
                    children: Vec::new(),
                });
                nodes.len() - 1
            })
        };
        let root = intern(&doc.root, &mut nodes);
        let mut used = Vec::new();
        for (parent, child, name) in &doc.edges {
            let &channel = channel_index
                .get(name.as_str())
                .ok_or_else(|| Error::UnknownChannel(name.clone()))?;
            let p = intern(parent, &mut nodes);
            let c = intern(child, &mut nodes);
            if c == root {
                return Err(Error::MalformedSpec(format!(
                    "root `{child}` appears as a child"
                )));
            }
            if p == c {
                return Err(Error::MalformedSpec(format!("self-loop at `{child}`")));
            }
            if nodes[c].parent.is_some() {
                return Err(Error::MalformedSpec(format!(
                    "node `{child}` has two parents"
                )));
            }
            nodes[c].parent = Some(p);
            nodes[p].children.push(Edge { child: c, channel });
            used.push(channel);
        }

        // every node has at most one parent; reachability from the root then
        // rules out cycles and disconnected pieces
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            seen[n] = true;
            stack.extend(nodes[n].children.iter().map(|e| e.child));
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::MalformedSpec(format!(
                "node `{}` is not reachable from the root",
                nodes[i].label
            )));
        }

        let reference = used.first().copied().unwrap_or(0);
        let pi = channels[reference].pi().to_vec();
        for &k in &used {
            let other = channels[k].pi();
            if let Some(i) = (0..alphabet).find(|&i| (other[i] - pi[i]).abs() > SHARED_PI_TOL) {
                return Err(Error::MixedEquilibria(format!(
                    "channel `{}` has pi[{i}] = {}, channel `{}` has {}",
                    channel_names[k], other[i], channel_names[reference], pi[i]
                )));
            }
        }
        let count = nodes.len() as u64;
        if count > limits.node_cap {
            return Err(Error::SizeOverflow {
                nodes: count as u128,
                cap: limits.node_cap,
            });
        }
        Ok(Self::finish(
            nodes,
            channels,
            channel_names,
            root,
            alphabet,
            pi,
            limits,
        ))
    }

    /// Builds a tree with one channel per edge listed as
    /// `(parent, child, channel)` over node indices `0..node_count`, root 0.
    pub fn from_edges(
        node_count: usize,
        edges: &[(usize, usize, usize)],
        channels: Vec<Channel>,
    ) -> Result<Self> {
        let mut named = BTreeMap::new();
        for (i, c) in channels.iter().enumerate() {
            named.insert(format!("c{i:04}"), c.rows());
        }
        let doc = TreeDocument {
            channels: named,
            root: NodeId::Number(0),
            edges: edges
                .iter()
                .map(|&(p, c, k)| {
                    (
                        NodeId::Number(p as u64),
                        NodeId::Number(c as u64),
                        format!("c{k:04}"),
                    )
                })
                .collect(),
        };
        let tree = Self::from_document(&doc)?;
        if tree.node_count() != node_count {
            return Err(Error::MalformedSpec(format!(
                "expected {node_count} nodes, edges mention {}",
                tree.node_count()
            )));
        }
        Ok(tree)
    }

    fn finish(
        nodes: Vec<Node>,
        channels: Vec<Channel>,
        channel_names: Vec<String>,
        root: usize,
        alphabet: usize,
        pi: Vec<f64>,
        limits: TreeLimits,
    ) -> Self {
        let mut leaves = Vec::new();
        let mut postorder = Vec::with_capacity(nodes.len());
        let mut levels = 0;
        let mut max_arity = 0;
        // (node, depth, expanded)
        let mut stack = vec![(root, 0usize, false)];
        while let Some((n, depth, expanded)) = stack.pop() {
            if expanded {
                postorder.push(n);
                continue;
            }
            let children = &nodes[n].children;
            max_arity = max_arity.max(children.len());
            levels = levels.max(depth);
            if children.is_empty() {
                leaves.push(n);
            }
            stack.push((n, depth, true));
            for e in children.iter().rev() {
                stack.push((e.child, depth + 1, false));
            }
        }
        let mut leaf_slot = vec![None; nodes.len()];
        for (slot, &leaf) in leaves.iter().enumerate() {
            leaf_slot[leaf] = Some(slot);
        }
        Self {
            nodes,
            channels,
            channel_names,
            root,
            leaves,
            leaf_slot,
            postorder,
            levels,
            max_arity,
            alphabet,
            pi,
            limits,
        }
    }

    /// The subtree hanging from `node`, with the same channels.
    pub fn subtree(&self, node: usize) -> TreeSpec {
        let mut map = HashMap::new();
        let mut nodes = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            map.insert(n, nodes.len());
            nodes.push(Node {
                label: self.nodes[n].label.clone(),
                parent: None,
                children: Vec::new(),
            });
            stack.extend(self.nodes[n].children.iter().rev().map(|e| e.child));
        }
        for (&old, &new) in &map {
            let children: Vec<Edge> = self.nodes[old]
                .children
                .iter()
                .map(|e| Edge {
                    child: map[&e.child],
                    channel: e.channel,
                })
                .collect();
            for e in &children {
                nodes[e.child].parent = Some(new);
            }
            nodes[new].children = children;
        }
        Self::finish(
            nodes,
            self.channels.clone(),
            self.channel_names.clone(),
            0,
            self.alphabet,
            self.pi.clone(),
            self.limits,
        )
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn children(&self, node: usize) -> &[Edge] {
        &self.nodes[node].children
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channel(&self, edge: &Edge) -> &Channel {
        &self.channels[edge.channel]
    }

    /// Leaf node indices in depth-first, left-to-right order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Position of `node` in the leaf order, if it is a leaf.
    pub fn leaf_slot(&self, node: usize) -> Option<usize> {
        self.leaf_slot[node]
    }

    /// Children before parents.
    pub fn postorder(&self) -> &[usize] {
        &self.postorder
    }

    /// Maximum root-to-leaf edge count.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    /// Alphabet cardinality `K + 1`.
    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn min_pi(&self) -> f64 {
        self.pi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn limits(&self) -> TreeLimits {
        self.limits
    }

    pub fn with_limits(mut self, limits: TreeLimits) -> Self {
        self.limits = limits;
        self
    }

    /// `(K+1)^{leaves}`, or `EnumerationTooLarge` above the enumeration cap.
    pub fn pattern_count(&self) -> Result<u64> {
        let mut count: u128 = 1;
        for _ in 0..self.leaf_count() {
            count = count.saturating_mul(self.alphabet as u128);
            if count > self.limits.enumeration_cap as u128 {
                return Err(Error::EnumerationTooLarge {
                    count,
                    cap: self.limits.enumeration_cap,
                });
            }
        }
        Ok(count as u64)
    }

    /// The `index`-th pattern in lexicographic order, first leaf most
    /// significant.
    pub fn pattern_at(&self, mut index: u64) -> Pattern {
        let base = self.alphabet as u64;
        let mut states = vec![0; self.leaf_count()];
        for s in states.iter_mut().rev() {
            *s = (index % base) as usize;
            index /= base;
        }
        Pattern { states }
    }

    pub fn check_pattern(&self, pattern: &Pattern) -> Result<()> {
        if pattern.len() != self.leaf_count() {
            return Err(Error::DimensionMismatch(format!(
                "pattern has {} states, tree has {} leaves",
                pattern.len(),
                self.leaf_count()
            )));
        }
        if let Some(&s) = pattern.states.iter().find(|&&s| s >= self.alphabet) {
            return Err(Error::StateOutOfRange {
                state: s,
                max: self.alphabet - 1,
            });
        }
        Ok(())
    }
}

pub fn build_complete_dary(d: usize, g: usize, channel: Channel) -> Result<TreeSpec> {
    TreeSpec::complete_dary(d, g, channel)
}

pub fn build_from_spec(doc: &TreeDocument) -> Result<TreeSpec> {
    TreeSpec::from_document(doc)
}

/// Ordered leaf states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern {
    states: Vec<usize>,
}

impl Pattern {
    pub fn new(states: Vec<usize>) -> Self {
        Self { states }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn into_states(self) -> Vec<usize> {
        self.states
    }
}

impl fmt::Display for Pattern {
    /// Digits when every state is below 10, comma-separated otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.states.iter().all(|&s| s < 10) {
            for s in &self.states {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.states.iter().map(|s| s.to_string()).collect();
            f.write_str(&parts.join(","))
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;

    /// Accepts `"01302002"` or, for larger alphabets, `"0,12,3"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let states = if s.contains(',') {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidArgument(format!("bad state `{t}` in pattern")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10).map(|d| d as usize).ok_or_else(|| {
                        Error::InvalidArgument(format!("bad state `{c}` in pattern"))
                    })
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self { states })
    }
}

/// Lexicographic iterator over every pattern of a tree.
#[derive(Debug, Clone)]
pub struct PatternIter {
    base: usize,
    current: Option<Vec<usize>>,
    remaining: u64,
}

impl Iterator for PatternIter {
    type Item = Pattern;

    fn next(&mut self) -> Option<Pattern> {
        let current = self.current.as_mut()?;
        let out = Pattern {
            states: current.clone(),
        };
        self.remaining -= 1;
        if self.remaining == 0 {
            self.current = None;
        } else {
            for s in current.iter_mut().rev() {
                *s += 1;
                if *s < self.base {
                    break;
                }
                *s = 0;
            }
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for PatternIter {}

pub fn enumerate_patterns(tree: &TreeSpec) -> Result<PatternIter> {
    let count = tree.pattern_count()?;
    Ok(PatternIter {
        base: tree.alphabet_size(),
        current: Some(vec![0; tree.leaf_count()]),
        remaining: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(p: f64) -> Channel {
        Channel::bsc(p).unwrap()
    }

    #[test]
    fn complete_tree_counts() {
        let t = TreeSpec::complete_dary(2, 1, bsc(0.25)).unwrap();
        assert_eq!((t.node_count(), t.leaf_count()), (3, 2));
        let t = TreeSpec::complete_dary(4, 2, Channel::symmetric(4, 0.3).unwrap()).unwrap();
        assert_eq!((t.node_count(), t.leaf_count()), (21, 16));
        assert_eq!((t.levels(), t.max_arity()), (2, 4));
        let t = TreeSpec::complete_dary(1, 5, bsc(0.1)).unwrap();
        assert_eq!((t.node_count(), t.leaf_count(), t.levels()), (6, 1, 5));
    }

    #[test]
    fn node_cap_is_enforced() {
        let limits = TreeLimits {
            node_cap: 100,
            ..TreeLimits::default()
        };
        let err = TreeSpec::complete_dary_with_limits(2, 7, bsc(0.1), limits).unwrap_err();
        assert!(matches!(
            err,
            Error::SizeOverflow {
                nodes: 255,
                cap: 100
            }
        ));
        assert!(matches!(
            TreeSpec::complete_dary(10, 30, bsc(0.1)),
            Err(Error::SizeOverflow { .. })
        ));
    }

    #[test]
    fn leaves_are_depth_first() {
        let t = TreeSpec::complete_dary(2, 2, bsc(0.25)).unwrap();
        // BFS ids: root 0, level 1 = 1,2; level 2 = 3,4 (under 1), 5,6 (under 2)
        assert_eq!(t.leaves(), &[3, 4, 5, 6]);
        let post = t.postorder();
        assert_eq!(*post.last().unwrap(), 0);
        let pos = |n| post.iter().position(|&x| x == n).unwrap();
        assert!(pos(3) < pos(1) && pos(1) < pos(0));
    }

    fn figure_one() -> TreeDocument {
        let m = Channel::symmetric(4, 0.3).unwrap().rows();
        let mut channels = BTreeMap::new();
        channels.insert("jc".to_string(), m);
        let mut edges = Vec::new();
        let name = |s: &str| NodeId::Name(s.into());
        let mut leaf = 0;
        for (a, k) in [("A1", 2), ("A2", 2), ("A3", 3), ("A4", 1)] {
            edges.push((name("R"), name(a), "jc".to_string()));
            for _ in 0..k {
                edges.push((name(a), NodeId::Number(leaf), "jc".to_string()));
                leaf += 1;
            }
        }
        TreeDocument {
            channels,
            root: name("R"),
            edges,
        }
    }

    #[test]
    fn figure_one_topology() {
        let t = TreeSpec::from_document(&figure_one()).unwrap();
        assert_eq!(t.leaf_count(), 8);
        assert_eq!(t.max_arity(), 4);
        assert_eq!(t.levels(), 2);
        let labels: Vec<&str> = t
            .leaves()
            .iter()
            .map(|&n| t.nodes()[n].label.as_str())
            .collect();
        assert_eq!(labels, ["0", "1", "2", "3", "4", "5", "6", "7"]);
        let p: Pattern = "01302002".parse().unwrap();
        t.check_pattern(&p).unwrap();
    }

    #[test]
    fn single_node_tree() {
        let mut channels = BTreeMap::new();
        channels.insert("p".into(), bsc(0.2).rows());
        let doc = TreeDocument {
            channels,
            root: NodeId::Name("r".into()),
            edges: vec![],
        };
        let t = TreeSpec::from_document(&doc).unwrap();
        assert_eq!(t.leaves(), &[t.root()]);
        assert_eq!(t.levels(), 0);
    }

    #[test]
    fn malformed_documents() {
        let mut channels = BTreeMap::new();
        channels.insert("a".into(), bsc(0.2).rows());
        channels.insert("b".into(), vec![vec![0.9, 0.1], vec![0.3, 0.7]]);
        let n = |s: &str| NodeId::Name(s.into());
        let doc = |edges: Vec<(NodeId, NodeId, String)>| TreeDocument {
            channels: channels.clone(),
            root: n("r"),
            edges,
        };

        let mixed = doc(vec![
            (n("r"), n("x"), "a".into()),
            (n("r"), n("y"), "b".into()),
        ]);
        assert!(matches!(
            TreeSpec::from_document(&mixed),
            Err(Error::MixedEquilibria(_))
        ));

        let unknown = doc(vec![(n("r"), n("x"), "zz".into())]);
        assert_eq!(
            TreeSpec::from_document(&unknown),
            Err(Error::UnknownChannel("zz".into()))
        );

        let two_parents = doc(vec![
            (n("r"), n("x"), "a".into()),
            (n("r"), n("x"), "a".into()),
        ]);
        assert!(matches!(
            TreeSpec::from_document(&two_parents),
            Err(Error::MalformedSpec(_))
        ));

        let detached = doc(vec![
            (n("r"), n("x"), "a".into()),
            (n("u"), n("v"), "a".into()),
        ]);
        assert!(matches!(
            TreeSpec::from_document(&detached),
            Err(Error::MalformedSpec(_))
        ));

        let cycle = doc(vec![
            (n("r"), n("x"), "a".into()),
            (n("u"), n("v"), "a".into()),
            (n("v"), n("u"), "a".into()),
        ]);
        assert!(matches!(
            TreeSpec::from_document(&cycle),
            Err(Error::MalformedSpec(_))
        ));

        let into_root = doc(vec![(n("x"), n("r"), "a".into())]);
        assert!(matches!(
            TreeSpec::from_document(&into_root),
            Err(Error::MalformedSpec(_))
        ));
    }

    #[test]
    fn document_parses_from_json() {
        let json = r#"{"channels": {"p": [[0.75, 0.25], [0.25, 0.75]]},
                       "root": 0, "edges": [[0, 1, "p"], [0, "leaf", "p"]]}"#;
        let doc: TreeDocument = serde_json::from_str(json).unwrap();
        let t = TreeSpec::from_document(&doc).unwrap();
        assert_eq!(t.leaf_count(), 2);
    }

    #[test]
    fn enumeration_order_and_counts() {
        let t = TreeSpec::complete_dary(2, 1, bsc(0.25)).unwrap();
        let all: Vec<String> = enumerate_patterns(&t)
            .unwrap()
            .map(|p| p.to_string())
            .collect();
        assert_eq!(all, ["00", "01", "10", "11"]);

        let t = TreeSpec::complete_dary(2, 4, bsc(0.25)).unwrap();
        assert_eq!(enumerate_patterns(&t).unwrap().count(), 65536);

        let t = TreeSpec::complete_dary(3, 1, Channel::symmetric(4, 0.2).unwrap()).unwrap();
        let all: Vec<Pattern> = enumerate_patterns(&t).unwrap().collect();
        assert_eq!(all.len(), 64);
        for (i, p) in all.iter().enumerate() {
            assert_eq!(&t.pattern_at(i as u64), p);
        }
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumeration_cap() {
        let t = TreeSpec::complete_dary(2, 5, bsc(0.25)).unwrap();
        assert!(matches!(
            enumerate_patterns(&t),
            Err(Error::EnumerationTooLarge { .. })
        ));
        let t = t.with_limits(TreeLimits {
            enumeration_cap: 1 << 32,
            ..TreeLimits::default()
        });
        assert_eq!(t.pattern_count().unwrap(), 1 << 32);
    }

    #[test]
    fn pattern_literals() {
        let p: Pattern = "01302002".parse().unwrap();
        assert_eq!(p.states(), &[0, 1, 3, 0, 2, 0, 0, 2]);
        assert_eq!(p.to_string(), "01302002");
        let q: Pattern = "0,12,3".parse().unwrap();
        assert_eq!(q.to_string(), "0,12,3");
        assert!("01x".parse::<Pattern>().is_err());
    }

    #[test]
    fn subtree_keeps_order() {
        let t = TreeSpec::from_document(&figure_one()).unwrap();
        let a3 = t.children(t.root())[2].child;
        let s = t.subtree(a3);
        assert_eq!(s.leaf_count(), 3);
        let labels: Vec<&str> = s
            .leaves()
            .iter()
            .map(|&n| s.nodes()[n].label.as_str())
            .collect();
        assert_eq!(labels, ["4", "5", "6"]);
    }
}
