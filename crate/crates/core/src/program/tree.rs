use std::sync::Arc;

use thiserror::Error;

use super::primitives::{Category, NodeKind, PrimitiveSet, Sort};

/// One node of a program tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub kind: Arc<NodeKind>,
    /// Frozen ephemeral constant; `Some` exactly for constant kinds.
    pub value: Option<f64>,
    pub children: Vec<Node>,
}

impl Node {
    pub fn leaf(kind: Arc<NodeKind>) -> Self {
        Self {
            kind,
            value: None,
            children: Vec::new(),
        }
    }

    pub fn constant(kind: Arc<NodeKind>, value: f64) -> Self {
        Self {
            kind,
            value: Some(value),
            children: Vec::new(),
        }
    }

    pub fn apply(kind: Arc<NodeKind>, children: Vec<Node>) -> Self {
        Self {
            kind,
            value: None,
            children,
        }
    }

    pub fn sort(&self) -> Sort {
        self.kind.result
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Node::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Node::size).sum::<usize>()
    }

    /// Visits nodes in preorder with their level (root = 1).
    pub fn walk<'a>(&'a self, level: usize, visit: &mut impl FnMut(&'a Node, usize)) {
        visit(self, level);
        for child in &self.children {
            child.walk(level + 1, visit);
        }
    }

    fn nth_mut(&mut self, index: &mut usize) -> Option<&mut Node> {
        if *index == 0 {
            return Some(self);
        }
        *index -= 1;
        for child in &mut self.children {
            if let Some(found) = child.nth_mut(index) {
                return Some(found);
            }
        }
        None
    }

    fn validate(&self, prims: &PrimitiveSet) -> Result<(), ValidationError> {
        let known = prims
            .kind(&self.kind.name)
            .ok_or_else(|| ValidationError::UnknownKind(self.kind.name.clone()))?;
        if **known != *self.kind {
            return Err(ValidationError::SignatureMismatch(self.kind.name.clone()));
        }
        if self.children.len() != self.kind.arity() {
            return Err(ValidationError::Arity {
                kind: self.kind.name.clone(),
                expected: self.kind.arity(),
                found: self.children.len(),
            });
        }
        match (self.kind.category, self.value) {
            (Category::Constant, None) => {
                return Err(ValidationError::MissingPayload(self.kind.name.clone()))
            }
            (Category::Constant, Some(v)) if !v.is_finite() => {
                return Err(ValidationError::NonFinitePayload(self.kind.name.clone()))
            }
            (Category::Function | Category::Terminal, Some(_)) => {
                return Err(ValidationError::UnexpectedPayload(self.kind.name.clone()))
            }
            _ => {}
        }
        for (position, (child, &expected)) in
            self.children.iter().zip(&self.kind.arg_sorts).enumerate()
        {
            if child.sort() != expected {
                return Err(ValidationError::SortMismatch {
                    kind: self.kind.name.clone(),
                    position,
                    expected,
                    found: child.sort(),
                });
            }
            child.validate(prims)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("unknown node kind `{0}`")]
    UnknownKind(String),
    #[error("node kind `{0}` does not match the primitive set's signature")]
    SignatureMismatch(String),
    #[error("`{kind}` expects {expected} children, found {found}")]
    Arity {
        kind: String,
        expected: usize,
        found: usize,
    },
    #[error("`{kind}` argument {position} expects {expected}, found {found}")]
    SortMismatch {
        kind: String,
        position: usize,
        expected: Sort,
        found: Sort,
    },
    #[error("root has sort {found}, expected {expected}")]
    RootSort { expected: Sort, found: Sort },
    #[error("depth {depth} exceeds the maximum {max}")]
    TooDeep { depth: usize, max: usize },
    #[error("constant `{0}` has no value")]
    MissingPayload(String),
    #[error("constant `{0}` has a non-finite value")]
    NonFinitePayload(String),
    #[error("non-constant `{0}` carries a value")]
    UnexpectedPayload(String),
}

/// A GP genome. Immutable by convention: operators return new trees.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgramTree {
    root: Node,
}

impl ProgramTree {
    pub fn new(root: Node) -> Self {
        Self { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn sort(&self) -> Sort {
        self.root.sort()
    }

    /// Preorder list of `(node, level)` pairs; index `i` here is the node
    /// index used by [`ProgramTree::replace`].
    pub fn nodes(&self) -> Vec<(&Node, usize)> {
        let mut out = Vec::with_capacity(self.size());
        self.root.walk(1, &mut |node, level| out.push((node, level)));
        out
    }

    /// Returns a copy with the subtree at preorder `index` replaced.
    ///
    /// Panics if `index >= size()`.
    pub fn replace(&self, index: usize, subtree: Node) -> ProgramTree {
        let mut copy = self.clone();
        let mut cursor = index;
        let slot = copy
            .root
            .nth_mut(&mut cursor)
            .unwrap_or_else(|| panic!("node index {index} out of range"));
        *slot = subtree;
        copy
    }

    pub fn contains_kind(&self, name: &str) -> bool {
        let mut found = false;
        self.root.walk(1, &mut |node, _| found |= node.kind.name == name);
        found
    }

    /// Full structural check against `prims`: known kinds, arity, sorts,
    /// constant payloads, root sort and (optionally) the depth bound.
    pub fn validate(
        &self,
        prims: &PrimitiveSet,
        max_depth: Option<usize>,
    ) -> Result<(), ValidationError> {
        if self.sort() != prims.root() {
            return Err(ValidationError::RootSort {
                expected: prims.root(),
                found: self.sort(),
            });
        }
        if let Some(max) = max_depth {
            let depth = self.depth();
            if depth > max {
                return Err(ValidationError::TooDeep { depth, max });
            }
        }
        self.root.validate(prims)
    }
}
