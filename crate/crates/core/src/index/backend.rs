use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::trie::Trie;
use super::tst::TernaryTree;

/// Storage structure behind the string-keyed index maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexBackendKind {
    #[default]
    Hashing,
    BalancedTree,
    Trie,
    TernarySearchTree,
}

impl IndexBackendKind {
    pub const ALL: [IndexBackendKind; 4] = [
        IndexBackendKind::Hashing,
        IndexBackendKind::BalancedTree,
        IndexBackendKind::Trie,
        IndexBackendKind::TernarySearchTree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexBackendKind::Hashing => "hashing",
            IndexBackendKind::BalancedTree => "balanced-tree",
            IndexBackendKind::Trie => "trie",
            IndexBackendKind::TernarySearchTree => "ternary-search-tree",
        }
    }
}

impl fmt::Display for IndexBackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexBackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hashing" | "hash" => Ok(IndexBackendKind::Hashing),
            "balanced-tree" | "btree" => Ok(IndexBackendKind::BalancedTree),
            "trie" => Ok(IndexBackendKind::Trie),
            "ternary-search-tree" | "tst" => Ok(IndexBackendKind::TernarySearchTree),
            other => Err(format!(
                "unknown backend '{other}' (expected hashing, balanced-tree, trie or ternary-search-tree)"
            )),
        }
    }
}

/// String-keyed map with a selectable storage structure. All variants have
/// identical lookup semantics; only prefix-walk order differs for hashing.
#[derive(Debug, Clone)]
pub enum NameMap<V> {
    Hashing(HashMap<Box<str>, V>),
    BalancedTree(BTreeMap<Box<str>, V>),
    Trie(Trie<V>),
    TernarySearchTree(TernaryTree<V>),
}

impl<V> NameMap<V> {
    /// Builds a map from entries with unique keys.
    pub fn build(kind: IndexBackendKind, mut entries: Vec<(String, V)>) -> Self {
        match kind {
            IndexBackendKind::Hashing => {
                NameMap::Hashing(entries.into_iter().map(|(k, v)| (k.into_boxed_str(), v)).collect())
            }
            IndexBackendKind::BalancedTree => NameMap::BalancedTree(
                entries.into_iter().map(|(k, v)| (k.into_boxed_str(), v)).collect(),
            ),
            IndexBackendKind::Trie => {
                let mut trie = Trie::default();
                for (k, v) in entries {
                    trie.insert(&k, v);
                }
                NameMap::Trie(trie)
            }
            IndexBackendKind::TernarySearchTree => {
                entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
                NameMap::TernarySearchTree(TernaryTree::from_sorted(entries))
            }
        }
    }

    pub fn kind(&self) -> IndexBackendKind {
        match self {
            NameMap::Hashing(_) => IndexBackendKind::Hashing,
            NameMap::BalancedTree(_) => IndexBackendKind::BalancedTree,
            NameMap::Trie(_) => IndexBackendKind::Trie,
            NameMap::TernarySearchTree(_) => IndexBackendKind::TernarySearchTree,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NameMap::Hashing(m) => m.len(),
            NameMap::BalancedTree(m) => m.len(),
            NameMap::Trie(m) => m.len(),
            NameMap::TernarySearchTree(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<&V> {
        match self {
            NameMap::Hashing(m) => m.get(key),
            NameMap::BalancedTree(m) => m.get(key),
            NameMap::Trie(m) => m.get(key),
            NameMap::TernarySearchTree(m) => m.get(key),
        }
    }

    /// Visits every entry whose key starts with `prefix`.
    pub fn for_each_prefixed<'s>(&'s self, prefix: &str, mut f: impl FnMut(&str, &'s V)) {
        match self {
            NameMap::Hashing(m) => m
                .iter()
                .filter(|(k, _)| k.starts_with(prefix))
                .for_each(|(k, v)| f(k, v)),
            NameMap::BalancedTree(m) => m
                .range::<str, _>((std::ops::Bound::Included(prefix), std::ops::Bound::Unbounded))
                .take_while(|(k, _)| k.starts_with(prefix))
                .for_each(|(k, v)| f(k, v)),
            NameMap::Trie(m) => m.for_each_prefixed(prefix, f),
            NameMap::TernarySearchTree(m) => m.for_each_prefixed(prefix, f),
        }
    }
}
