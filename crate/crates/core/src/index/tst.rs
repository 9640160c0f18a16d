const NIL: u32 = u32::MAX;

/// Ternary search tree over the bytes of string keys.
#[derive(Debug, Clone)]
pub struct TernaryTree<V> {
    nodes: Vec<TstNode>,
    root: u32,
    empty_key: Option<V>,
    values: Vec<V>,
}

#[derive(Debug, Clone)]
struct TstNode {
    byte: u8,
    lo: u32,
    eq: u32,
    hi: u32,
    value: u32,
}

impl<V> Default for TernaryTree<V> {
    fn default() -> Self {
        TernaryTree {
            nodes: Vec::new(),
            root: NIL,
            empty_key: None,
            values: Vec::new(),
        }
    }
}

impl<V> TernaryTree<V> {
    /// Builds from entries sorted by key, inserting medians first so the
    /// lo/hi links stay balanced.
    pub fn from_sorted(entries: Vec<(String, V)>) -> Self {
        let mut tree = TernaryTree::default();
        let mut slots: Vec<Option<(String, V)>> = entries.into_iter().map(Some).collect();
        let mut ranges = vec![(0usize, slots.len())];
        while let Some((lo, hi)) = ranges.pop() {
            if lo >= hi {
                continue;
            }
            let mid = lo + (hi - lo) / 2;
            if let Some((k, v)) = slots[mid].take() {
                tree.insert(&k, v);
            }
            ranges.push((mid + 1, hi));
            ranges.push((lo, mid));
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.values.len() + usize::from(self.empty_key.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn new_node(&mut self, byte: u8) -> u32 {
        self.nodes.push(TstNode {
            byte,
            lo: NIL,
            eq: NIL,
            hi: NIL,
            value: NIL,
        });
        (self.nodes.len() - 1) as u32
    }

    pub fn insert(&mut self, key: &str, value: V) -> Option<V> {
        let bytes = key.as_bytes();
        if bytes.is_empty() {
            return self.empty_key.replace(value);
        }
        if self.root == NIL {
            self.root = self.new_node(bytes[0]);
        }
        let mut node = self.root;
        let mut i = 0;
        loop {
            let b = bytes[i];
            let n = &self.nodes[node as usize];
            let (link, next) = if b < n.byte {
                (Link::Lo, n.lo)
            } else if b > n.byte {
                (Link::Hi, n.hi)
            } else if i + 1 == bytes.len() {
                let slot = n.value;
                if slot != NIL {
                    return Some(std::mem::replace(&mut self.values[slot as usize], value));
                }
                self.nodes[node as usize].value = self.values.len() as u32;
                self.values.push(value);
                return None;
            } else {
                i += 1;
                (Link::Eq, n.eq)
            };
            node = if next != NIL {
                next
            } else {
                let fresh = self.new_node(bytes[i]);
                let parent = &mut self.nodes[node as usize];
                match link {
                    Link::Lo => parent.lo = fresh,
                    Link::Eq => parent.eq = fresh,
                    Link::Hi => parent.hi = fresh,
                }
                fresh
            };
        }
    }

    /// Node holding the last byte of `key`, if the path exists.
    fn locate(&self, key: &[u8]) -> Option<u32> {
        let mut node = self.root;
        let mut i = 0;
        while node != NIL {
            let n = &self.nodes[node as usize];
            let b = key[i];
            if b < n.byte {
                node = n.lo;
            } else if b > n.byte {
                node = n.hi;
            } else if i + 1 == key.len() {
                return Some(node);
            } else {
                i += 1;
                node = n.eq;
            }
        }
        None
    }

    pub fn get(&self, key: &str) -> Option<&V> {
        if key.is_empty() {
            return self.empty_key.as_ref();
        }
        let node = self.locate(key.as_bytes())?;
        let slot = self.nodes[node as usize].value;
        (slot != NIL).then(|| &self.values[slot as usize])
    }

    /// Visits every key starting with `prefix`, in lexicographic order.
    pub fn for_each_prefixed<'s>(&'s self, prefix: &str, mut f: impl FnMut(&str, &'s V)) {
        let mut key = prefix.as_bytes().to_vec();
        if prefix.is_empty() {
            if let Some(v) = &self.empty_key {
                f("", v);
            }
            self.walk(self.root, &mut key, &mut f);
            return;
        }
        let Some(node) = self.locate(prefix.as_bytes()) else {
            return;
        };
        let slot = self.nodes[node as usize].value;
        if slot != NIL {
            f(prefix, &self.values[slot as usize]);
        }
        self.walk(self.nodes[node as usize].eq, &mut key, &mut f);
    }

    /// In-order traversal of the subtree at `node`; `key` holds the bytes
    /// consumed above it.
    fn walk<'s>(&'s self, node: u32, key: &mut Vec<u8>, f: &mut impl FnMut(&str, &'s V)) {
        if node == NIL {
            return;
        }
        let n = &self.nodes[node as usize];
        self.walk(n.lo, key, f);
        key.push(n.byte);
        if n.value != NIL {
            f(std::str::from_utf8(key).expect("tst keys are UTF-8"), &self.values[n.value as usize]);
        }
        self.walk(n.eq, key, f);
        key.pop();
        self.walk(n.hi, key, f);
    }
}

#[derive(Clone, Copy)]
enum Link {
    Lo,
    Eq,
    Hi,
}
