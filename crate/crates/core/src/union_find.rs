//! Disjoint sets over `u32` indices with union by size and path halving.
//! Tracks the size of the largest set as unions happen.

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    largest: u32,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n < u32::MAX as usize, "union-find supports fewer than 2^32 - 1 elements");
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            largest: u32::from(n > 0),
        }
    }

    /// Back to singletons, keeping the allocation.
    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.fill(1);
        self.largest = u32::from(!self.parent.is_empty());
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn find(&mut self, mut x: u32) -> u32 {
        loop {
            let p = self.parent[x as usize];
            if p == x {
                return x;
            }
            let gp = self.parent[p as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
    }

    /// Merge the sets holding `a` and `b`; returns whether they were
    /// distinct.
    #[inline]
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        let s = self.size[ra as usize] + self.size[rb as usize];
        self.size[ra as usize] = s;
        self.largest = self.largest.max(s);
        true
    }

    pub fn set_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }

    pub fn largest(&self) -> u32 {
        self.largest
    }

    /// Sizes of all sets, descending.
    pub fn set_sizes(&mut self) -> Vec<u32> {
        let roots: Vec<u32> = (0..self.len() as u32).filter(|&x| self.find(x) == x).collect();
        let mut sizes: Vec<u32> = roots.iter().map(|&r| self.size[r as usize]).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons() {
        let mut uf = UnionFind::new(5);
        assert_eq!(uf.largest(), 1);
        assert_eq!(uf.set_sizes(), vec![1; 5]);
        assert_eq!(UnionFind::new(0).largest(), 0);
    }

    #[test]
    fn unions_track_largest() {
        let mut uf = UnionFind::new(6);
        assert!(uf.union(0, 1));
        assert!(uf.union(2, 3));
        assert!(uf.union(3, 4));
        assert!(!uf.union(2, 4));
        assert_eq!(uf.largest(), 3);
        assert!(uf.union(1, 4));
        assert_eq!(uf.largest(), 5);
        assert_eq!(uf.set_size(0), 5);
        assert_eq!(uf.set_sizes(), vec![5, 1]);
        uf.reset();
        assert_eq!(uf.largest(), 1);
        assert_eq!(uf.set_size(4), 1);
    }
}
