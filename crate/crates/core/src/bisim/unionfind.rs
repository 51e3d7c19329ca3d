use std::collections::BTreeMap;
use std::hash::Hash;

/// Union-find over arbitrary keys, with path halving and union by size.
#[derive(Clone, Debug, Default)]
pub struct UnionFind<K: Ord + Clone> {
    index: BTreeMap<K, usize>,
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl<K: Ord + Clone + Hash> UnionFind<K> {
    pub fn new() -> Self {
        UnionFind { index: BTreeMap::new(), parent: Vec::new(), size: Vec::new() }
    }

    pub fn insert(&mut self, k: K) -> usize {
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        let i = self.parent.len();
        self.index.insert(k, i);
        self.parent.push(i);
        self.size.push(1);
        i
    }

    fn root(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub fn union(&mut self, a: K, b: K) {
        let (ia, ib) = (self.insert(a), self.insert(b));
        let (ra, rb) = (self.root(ia), self.root(ib));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }

    pub fn same(&mut self, a: &K, b: &K) -> bool {
        match (self.index.get(a).copied(), self.index.get(b).copied()) {
            (Some(ia), Some(ib)) => self.root(ia) == self.root(ib),
            _ => a == b,
        }
    }

    /// Blocks of the partition, each sorted, in order of their least element.
    pub fn classes(&mut self) -> Vec<Vec<K>> {
        let keys: Vec<(K, usize)> = self.index.iter().map(|(k, &i)| (k.clone(), i)).collect();
        let mut by_root: BTreeMap<usize, Vec<K>> = BTreeMap::new();
        for (k, i) in keys {
            let r = self.root(i);
            by_root.entry(r).or_default().push(k);
        }
        let mut out: Vec<Vec<K>> = by_root.into_values().collect();
        out.sort();
        out
    }
}

/// Partition of `elems` under the equivalence closure of `pairs`.
pub fn equivalence_closure<K, I, P>(elems: I, pairs: P) -> Vec<Vec<K>>
where
    K: Ord + Clone + Hash,
    I: IntoIterator<Item = K>,
    P: IntoIterator<Item = (K, K)>,
{
    let mut uf = UnionFind::new();
    for e in elems {
        uf.insert(e);
    }
    for (a, b) in pairs {
        uf.union(a, b);
    }
    uf.classes()
}
