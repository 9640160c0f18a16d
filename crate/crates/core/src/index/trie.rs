/// Byte-wise prefix tree. Children are kept sorted so traversal yields keys
/// in lexicographic order.
#[derive(Debug, Clone)]
pub struct Trie<V> {
    nodes: Vec<TrieNode>,
    values: Vec<V>,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: Vec<(u8, u32)>,
    value: Option<u32>,
}

impl<V> Default for Trie<V> {
    fn default() -> Self {
        Trie {
            nodes: vec![TrieNode::default()],
            values: Vec::new(),
        }
    }
}

impl<V> Trie<V> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn child(&self, node: u32, byte: u8) -> Option<u32> {
        let children = &self.nodes[node as usize].children;
        children
            .binary_search_by_key(&byte, |(b, _)| *b)
            .ok()
            .map(|at| children[at].1)
    }

    fn locate(&self, key: &[u8]) -> Option<u32> {
        key.iter().try_fold(0u32, |node, &b| self.child(node, b))
    }

    pub fn insert(&mut self, key: &str, value: V) -> Option<V> {
        let mut node = 0u32;
        for &b in key.as_bytes() {
            node = match self.child(node, b) {
                Some(next) => next,
                None => {
                    let next = self.nodes.len() as u32;
                    self.nodes.push(TrieNode::default());
                    let children = &mut self.nodes[node as usize].children;
                    let at = children.partition_point(|(c, _)| *c < b);
                    children.insert(at, (b, next));
                    next
                }
            };
        }
        let slot = &mut self.nodes[node as usize].value;
        match slot {
            Some(existing) => Some(std::mem::replace(&mut self.values[*existing as usize], value)),
            None => {
                *slot = Some(self.values.len() as u32);
                self.values.push(value);
                None
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&V> {
        let node = self.locate(key.as_bytes())?;
        self.nodes[node as usize].value.map(|v| &self.values[v as usize])
    }

    /// Visits every key starting with `prefix`, in lexicographic order.
    pub fn for_each_prefixed<'s>(&'s self, prefix: &str, mut f: impl FnMut(&str, &'s V)) {
        let Some(start) = self.locate(prefix.as_bytes()) else {
            return;
        };
        let mut key = prefix.as_bytes().to_vec();
        self.walk(start, &mut key, &mut f);
    }

    fn walk<'s>(&'s self, node: u32, key: &mut Vec<u8>, f: &mut impl FnMut(&str, &'s V)) {
        let n = &self.nodes[node as usize];
        if let Some(v) = n.value {
            // Keys are only ever inserted from &str, so every terminal path is UTF-8.
            f(std::str::from_utf8(key).expect("trie keys are UTF-8"), &self.values[v as usize]);
        }
        for &(b, child) in &n.children {
            key.push(b);
            self.walk(child, key, f);
            key.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_get_and_prefix_order() {
        let mut t = Trie::default();
        for (i, k) in ["shares border with", "share", "sha", "country", ""].iter().enumerate() {
            assert!(t.insert(k, i).is_none());
        }
        assert_eq!(t.insert("share", 9), Some(1));
        assert_eq!(t.get("share"), Some(&9));
        assert_eq!(t.get(""), Some(&4));
        assert_eq!(t.get("shar"), None);
        let mut seen = Vec::new();
        t.for_each_prefixed("sha", |k, _| seen.push(k.to_string()));
        assert_eq!(seen, ["sha", "share", "shares border with"]);
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn multibyte_keys() {
        let mut t = Trie::default();
        t.insert("km²", 1);
        t.insert("kmh", 2);
        let mut seen = Vec::new();
        t.for_each_prefixed("km", |k, v| seen.push((k.to_string(), *v)));
        assert_eq!(seen, [("kmh".to_string(), 2), ("km²".to_string(), 1)]);
    }
}
