use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Semantic sort of a value flowing along a tree edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sort {
    Number,
    Boolean,
    Action,
    FeedScore,
    Position,
}

impl Sort {
    pub const ALL: [Sort; 5] = [
        Sort::Number,
        Sort::Boolean,
        Sort::Action,
        Sort::FeedScore,
        Sort::Position,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Sort::Number => "Number",
            Sort::Boolean => "Boolean",
            Sort::Action => "Action",
            Sort::FeedScore => "FeedScore",
            Sort::Position => "Position",
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sort {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sort::ALL
            .into_iter()
            .find(|sort| sort.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownSort(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    Function,
    Terminal,
    /// Ephemeral constant; the value is drawn once at construction time and
    /// frozen in the node.
    Constant,
}

/// One primitive: a name plus its typed signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NodeKind {
    pub name: String,
    pub arg_sorts: Vec<Sort>,
    pub result: Sort,
    pub category: Category,
}

impl NodeKind {
    pub fn function(name: impl Into<String>, arg_sorts: &[Sort], result: Sort) -> Self {
        Self {
            name: name.into(),
            arg_sorts: arg_sorts.to_vec(),
            result,
            category: Category::Function,
        }
    }

    pub fn terminal(name: impl Into<String>, result: Sort) -> Self {
        Self {
            name: name.into(),
            arg_sorts: Vec::new(),
            result,
            category: Category::Terminal,
        }
    }

    /// The constant kind for `sort`, named `const:<Sort>`.
    pub fn constant(sort: Sort) -> Self {
        Self {
            name: constant_name(sort),
            arg_sorts: Vec::new(),
            result: sort,
            category: Category::Constant,
        }
    }

    pub fn arity(&self) -> usize {
        self.arg_sorts.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.arg_sorts.is_empty()
    }
}

pub(crate) fn constant_name(sort: Sort) -> String {
    format!("const:{sort}")
}

/// Where ephemeral constants of one sort come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    /// Uniform on the closed interval `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Uniform choice from a fixed list.
    Choice(Vec<f64>),
}

impl ConstantSource {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ConstantSource::Uniform { lo, hi } => {
                if lo == hi {
                    *lo
                } else {
                    rng.gen_range(*lo..=*hi)
                }
            }
            ConstantSource::Choice(values) => values[rng.gen_range(0..values.len())],
        }
    }

    fn check(&self) -> bool {
        match self {
            ConstantSource::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            ConstantSource::Choice(values) => {
                !values.is_empty() && values.iter().all(|v| v.is_finite())
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("duplicate node kind `{0}`")]
    DuplicateKind(String),
    #[error("node kind `{0}` is a terminal or constant but declares arguments")]
    LeafWithArguments(String),
    #[error("function `{0}` declares no arguments")]
    FunctionWithoutArguments(String),
    #[error("constant kind `{name}` must be named `{expected}`")]
    BadConstantName { name: String, expected: String },
    #[error("constant kind of sort {0} has no (valid) constant source")]
    MissingConstantSource(Sort),
    #[error("no terminal produces sort {0}, which is reachable from the root")]
    NoTerminal(Sort),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("max depth must be at least 1")]
    ZeroDepth,
}

/// The node kinds available to programs of one application.
#[derive(Clone, Debug)]
pub struct PrimitiveSet {
    kinds: Vec<Arc<NodeKind>>,
    by_name: HashMap<String, usize>,
    leaves: BTreeMap<Sort, Vec<usize>>,
    functions: BTreeMap<Sort, Vec<usize>>,
    root: Sort,
    constants: BTreeMap<Sort, ConstantSource>,
}

impl PrimitiveSet {
    /// Builds a primitive set, checking name uniqueness, leaf/function arity,
    /// constant sources and that every sort reachable from `root` has a leaf.
    pub fn new(
        kinds: Vec<NodeKind>,
        root: Sort,
        constants: BTreeMap<Sort, ConstantSource>,
    ) -> Result<Self, ConfigError> {
        let mut by_name = HashMap::new();
        let mut leaves: BTreeMap<Sort, Vec<usize>> = BTreeMap::new();
        let mut functions: BTreeMap<Sort, Vec<usize>> = BTreeMap::new();
        for (idx, kind) in kinds.iter().enumerate() {
            if by_name.insert(kind.name.clone(), idx).is_some() {
                return Err(ConfigError::DuplicateKind(kind.name.clone()));
            }
            match kind.category {
                Category::Function => {
                    if kind.arg_sorts.is_empty() {
                        return Err(ConfigError::FunctionWithoutArguments(kind.name.clone()));
                    }
                    functions.entry(kind.result).or_default().push(idx);
                }
                Category::Terminal | Category::Constant => {
                    if !kind.arg_sorts.is_empty() {
                        return Err(ConfigError::LeafWithArguments(kind.name.clone()));
                    }
                    if kind.category == Category::Constant {
                        let expected = constant_name(kind.result);
                        if kind.name != expected {
                            return Err(ConfigError::BadConstantName {
                                name: kind.name.clone(),
                                expected,
                            });
                        }
                        if !constants.get(&kind.result).is_some_and(ConstantSource::check) {
                            return Err(ConfigError::MissingConstantSource(kind.result));
                        }
                    }
                    leaves.entry(kind.result).or_default().push(idx);
                }
            }
        }

        let mut reachable = BTreeSet::from([root]);
        let mut frontier = vec![root];
        while let Some(sort) = frontier.pop() {
            for &idx in functions.get(&sort).map(Vec::as_slice).unwrap_or_default() {
                for &arg in &kinds[idx].arg_sorts {
                    if reachable.insert(arg) {
                        frontier.push(arg);
                    }
                }
            }
        }
        if let Some(&missing) = reachable.iter().find(|s| !leaves.contains_key(s)) {
            return Err(ConfigError::NoTerminal(missing));
        }

        Ok(Self {
            kinds: kinds.into_iter().map(Arc::new).collect(),
            by_name,
            leaves,
            functions,
            root,
            constants,
        })
    }

    pub fn root(&self) -> Sort {
        self.root
    }

    pub fn kinds(&self) -> impl Iterator<Item = &Arc<NodeKind>> {
        self.kinds.iter()
    }

    pub fn kind(&self, name: &str) -> Option<&Arc<NodeKind>> {
        self.by_name.get(name).map(|&idx| &self.kinds[idx])
    }

    pub fn constant_source(&self, sort: Sort) -> Option<&ConstantSource> {
        self.constants.get(&sort)
    }

    pub(crate) fn leaves_of(&self, sort: Sort) -> impl Iterator<Item = &Arc<NodeKind>> {
        self.indices(&self.leaves, sort)
    }

    pub(crate) fn functions_of(&self, sort: Sort) -> impl Iterator<Item = &Arc<NodeKind>> {
        self.indices(&self.functions, sort)
    }

    fn indices<'a>(
        &'a self,
        table: &'a BTreeMap<Sort, Vec<usize>>,
        sort: Sort,
    ) -> impl Iterator<Item = &'a Arc<NodeKind>> {
        table
            .get(&sort)
            .into_iter()
            .flatten()
            .map(|&idx| &self.kinds[idx])
    }
}
