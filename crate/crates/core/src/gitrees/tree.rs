use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::behavior::{StepTag, Weight};

/// Finite observable image of a state: reducts verbatim, function summands
/// as tables indexed by probe position, cut at a depth bound.
#[derive(Clone)]
pub struct Tree(Arc<Inner>);

struct Inner {
    hash: u64,
    node: TreeNode,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum TreeNode {
    Terminal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subst: Option<Vec<Entry>>,
    },
    /// Depth bound reached: only the variant survives (and, for sets,
    /// whether the set is empty).
    Cut {
        step: StepTag,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nonempty: Option<bool>,
    },
    Reduct {
        bag: TreeBag,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subst: Option<Vec<Entry>>,
    },
    Function {
        table: Vec<Entry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subst: Option<Vec<Entry>>,
    },
    /// The single element of the terminal object.
    Unit,
}

/// One row of a function or substitution table: the probe (or environment)
/// index and the observed result.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entry {
    pub probe: usize,
    pub tree: Tree,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "lowercase")]
pub enum TreeBag {
    Det { next: Tree },
    /// Weights are reduced fractions `"p/q"`; branches are merged by tree
    /// and sorted.
    Dist { branches: Vec<WeightedTree> },
    /// Deduplicated and sorted.
    Set { branches: Vec<Tree> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeightedTree {
    pub weight: String,
    pub tree: Tree,
}

impl TreeBag {
    pub fn dist(items: Vec<(Tree, Weight)>) -> TreeBag {
        let mut merged: Vec<(Tree, Weight)> = Vec::new();
        for (t, w) in items {
            match merged.iter_mut().find(|(u, _)| *u == t) {
                Some((_, acc)) => *acc += w,
                None => merged.push((t, w)),
            }
        }
        merged.sort_by(|a, b| a.0.cmp(&b.0));
        TreeBag::Dist {
            branches: merged
                .into_iter()
                .map(|(tree, w)| WeightedTree {
                    weight: w.to_string(),
                    tree,
                })
                .collect(),
        }
    }

    pub fn set(mut items: Vec<Tree>) -> TreeBag {
        items.sort();
        items.dedup();
        TreeBag::Set { branches: items }
    }

    pub fn trees(&self) -> Vec<&Tree> {
        match self {
            TreeBag::Det { next } => vec![next],
            TreeBag::Dist { branches } => branches.iter().map(|b| &b.tree).collect(),
            TreeBag::Set { branches } => branches.iter().collect(),
        }
    }
}

impl Tree {
    pub fn new(node: TreeNode) -> Tree {
        let mut h = DefaultHasher::new();
        node.hash(&mut h);
        Tree(Arc::new(Inner { hash: h.finish(), node }))
    }

    pub fn terminal() -> Tree {
        Tree::new(TreeNode::Terminal { subst: None })
    }

    pub fn node(&self) -> &TreeNode {
        &self.0.node
    }

    /// Variant at the root; `None` for the terminal object's element.
    pub fn tag(&self) -> Option<StepTag> {
        match self.node() {
            TreeNode::Terminal { .. } => Some(StepTag::Terminal),
            TreeNode::Cut { step, .. } => Some(*step),
            TreeNode::Reduct { .. } => Some(StepTag::Reduct),
            TreeNode::Function { .. } => Some(StepTag::Function),
            TreeNode::Unit => None,
        }
    }

    pub fn children(&self) -> Vec<&Tree> {
        let (main, subst): (Vec<&Tree>, &Option<Vec<Entry>>) = match self.node() {
            TreeNode::Terminal { subst } => (Vec::new(), subst),
            TreeNode::Cut { .. } | TreeNode::Unit => return Vec::new(),
            TreeNode::Reduct { bag, subst } => (bag.trees(), subst),
            TreeNode::Function { table, subst } => (table.iter().map(|e| &e.tree).collect(), subst),
        };
        let mut out = main;
        out.extend(subst.iter().flatten().map(|e| &e.tree));
        out
    }

    /// Longest root-to-leaf path, in edges.
    pub fn height(&self) -> usize {
        self.children().iter().map(|c| c.height() + 1).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trees serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("trees serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Tree> {
        serde_json::from_str(text)
    }

    /// Graphviz rendering: reduct edges unlabelled (weights shown for
    /// distributions), function edges labelled by probe index, substitution
    /// edges by environment index, terminal leaves as double circles.
    /// Shared subtrees are drawn once.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n  node [fontname=\"monospace\"];\n");
        let mut ids: Vec<(Tree, usize)> = Vec::new();
        self.dot_node(&mut out, &mut ids);
        out.push_str("}\n");
        out
    }

    fn dot_node(&self, out: &mut String, ids: &mut Vec<(Tree, usize)>) -> usize {
        if let Some((_, id)) = ids.iter().find(|(t, _)| t.ptr_eq(self)) {
            return *id;
        }
        let id = ids.len();
        ids.push((self.clone(), id));
        let (label, shape) = match self.node() {
            TreeNode::Terminal { .. } => ("✓".to_string(), "doublecircle"),
            TreeNode::Cut { step, nonempty } => (
                match nonempty {
                    Some(false) => format!("{step} ∅ …"),
                    _ => format!("{step} …"),
                },
                "plaintext",
            ),
            TreeNode::Reduct { .. } => ("→".to_string(), "circle"),
            TreeNode::Function { .. } => ("λ".to_string(), "box"),
            TreeNode::Unit => ("*".to_string(), "point"),
        };
        let _ = writeln!(out, "  n{id} [label=\"{label}\", shape={shape}];");
        let mut edges: Vec<(usize, Option<String>, &str)> = Vec::new();
        match self.node() {
            TreeNode::Reduct { bag, .. } => match bag {
                TreeBag::Det { next } => edges.push((next.dot_node(out, ids), None, "solid")),
                TreeBag::Dist { branches } => {
                    for b in branches {
                        edges.push((b.tree.dot_node(out, ids), Some(b.weight.clone()), "solid"));
                    }
                }
                TreeBag::Set { branches } => {
                    for b in branches {
                        edges.push((b.dot_node(out, ids), None, "solid"));
                    }
                }
            },
            TreeNode::Function { table, .. } => {
                for e in table {
                    edges.push((e.tree.dot_node(out, ids), Some(format!("p{}", e.probe)), "solid"));
                }
            }
            _ => {}
        }
        let subst = match self.node() {
            TreeNode::Terminal { subst } | TreeNode::Reduct { subst, .. } | TreeNode::Function { subst, .. } => {
                subst.as_ref()
            }
            _ => None,
        };
        for e in subst.into_iter().flatten() {
            edges.push((e.tree.dot_node(out, ids), Some(format!("u{}", e.probe)), "dashed"));
        }
        for (to, label, style) in edges {
            match label {
                Some(l) => {
                    let _ = writeln!(out, "  n{id} -> n{to} [label=\"{l}\", style={style}];");
                }
                None => {
                    let _ = writeln!(out, "  n{id} -> n{to} [style={style}];");
                }
            }
        }
        id
    }

    pub fn ptr_eq(&self, other: &Tree) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.ptr_eq(other) || (self.0.hash == other.0.hash && self.0.node == other.0.node)
    }
}

impl Eq for Tree {}

impl Hash for Tree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        self.0.node.cmp(&other.0.node)
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Compact one-line rendering, e.g. `→(→(✓))` or `λ[0:✓, 1:→…]`.
impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let subst = |f: &mut fmt::Formatter<'_>, s: &Option<Vec<Entry>>| -> fmt::Result {
            if let Some(s) = s {
                write!(f, " ⟨")?;
                for (i, e) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}:{}", e.probe, e.tree)?;
                }
                write!(f, "⟩")?;
            }
            Ok(())
        };
        match self.node() {
            TreeNode::Terminal { subst: s } => {
                write!(f, "✓")?;
                subst(f, s)
            }
            TreeNode::Cut { step, nonempty } => match nonempty {
                Some(false) => write!(f, "{step}∅"),
                _ => write!(f, "{step}…"),
            },
            TreeNode::Unit => write!(f, "*"),
            TreeNode::Reduct { bag, subst: s } => {
                match bag {
                    TreeBag::Det { next } => write!(f, "→({next})")?,
                    TreeBag::Dist { branches } => {
                        write!(f, "→[")?;
                        for (i, b) in branches.iter().enumerate() {
                            if i > 0 {
                                write!(f, ", ")?;
                            }
                            write!(f, "{}: {}", b.weight, b.tree)?;
                        }
                        write!(f, "]")?;
                    }
                    TreeBag::Set { branches } => {
                        write!(f, "→{{")?;
                        for (i, b) in branches.iter().enumerate() {
                            if i > 0 {
                                write!(f, ", ")?;
                            }
                            write!(f, "{b}")?;
                        }
                        write!(f, "}}")?;
                    }
                }
                subst(f, s)
            }
            TreeNode::Function { table, subst: s } => {
                write!(f, "λ[")?;
                for (i, e) in table.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}:{}", e.probe, e.tree)?;
                }
                write!(f, "]")?;
                subst(f, s)
            }
        }
    }
}

impl Serialize for Tree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.node.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Tree, D::Error> {
        TreeNode::deserialize(d).map(Tree::new)
    }
}

/// Version tag of the documented JSON document format.
pub const TREE_SCHEMA_VERSION: u32 = 1;

/// The versioned envelope written by the command-line tool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub version: u32,
    pub language: String,
    pub term: String,
    pub depth: usize,
    pub probes: Vec<String>,
    pub tree: Tree,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::weight;

    fn cut(step: StepTag) -> Tree {
        Tree::new(TreeNode::Cut { step, nonempty: None })
    }

    fn reduct(next: Tree) -> Tree {
        Tree::new(TreeNode::Reduct {
            bag: TreeBag::Det { next },
            subst: None,
        })
    }

    #[test]
    fn terminal_json_is_minimal() {
        assert_eq!(Tree::terminal().to_json(), r#"{"tag":"terminal"}"#);
    }

    #[test]
    fn json_round_trip() {
        let t = Tree::new(TreeNode::Function {
            table: vec![
                Entry {
                    probe: 0,
                    tree: reduct(Tree::terminal()),
                },
                Entry {
                    probe: 2,
                    tree: Tree::new(TreeNode::Reduct {
                        bag: TreeBag::dist(vec![(Tree::terminal(), weight(1, 3)), (cut(StepTag::Reduct), weight(2, 3))]),
                        subst: None,
                    }),
                },
            ],
            subst: None,
        });
        let back = Tree::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_json(), t.to_json());
    }

    #[test]
    fn distributions_merge_equal_trees() {
        let bag = TreeBag::dist(vec![(Tree::terminal(), weight(1, 2)), (Tree::terminal(), weight(1, 2))]);
        match bag {
            TreeBag::Dist { branches } => {
                assert_eq!(branches.len(), 1);
                assert_eq!(branches[0].weight, "1");
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn sets_are_canonical() {
        let a = TreeBag::set(vec![cut(StepTag::Function), Tree::terminal(), cut(StepTag::Function)]);
        let b = TreeBag::set(vec![Tree::terminal(), cut(StepTag::Function)]);
        assert_eq!(a, b);
    }

    #[test]
    fn dot_marks_terminals_and_probe_edges() {
        let t = Tree::new(TreeNode::Function {
            table: vec![Entry {
                probe: 3,
                tree: Tree::terminal(),
            }],
            subst: None,
        });
        let dot = t.to_dot();
        assert!(dot.starts_with("digraph tree {"));
        assert!(dot.contains("doublecircle"));
        assert!(dot.contains("label=\"p3\""));
    }

    #[test]
    fn height_counts_edges() {
        assert_eq!(reduct(reduct(Tree::terminal())).height(), 2);
        assert_eq!(Tree::terminal().height(), 0);
    }
}
