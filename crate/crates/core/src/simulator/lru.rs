use std::collections::{BTreeMap, HashMap};

/// Prefix sums over access times, for counting distinct lines touched in a
/// time window.
struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![0; n + 1] }
    }

    fn add(&mut self, i: usize, v: i64) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `[0, i)`.
    fn prefix(&self, i: usize) -> i64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Mattson stack distances of a sequence of line identifiers: the number of
/// distinct lines accessed since the previous access of the same line,
/// including that line; `None` for first touches.
pub fn stack_distances(lines: &[usize]) -> Vec<Option<u64>> {
    let mut bit = Fenwick::new(lines.len());
    let mut last: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(lines.len());
    for (t, &l) in lines.iter().enumerate() {
        match last.insert(l, t) {
            Some(prev) => {
                let between = bit.prefix(t) - bit.prefix(prev + 1);
                out.push(Some(between as u64 + 1));
                bit.add(prev, -1);
            }
            None => out.push(None),
        }
        bit.add(t, 1);
    }
    out
}

/// One fully associative LRU level.
#[derive(Clone, Debug)]
struct Level {
    capacity: usize,
    stamp_of: HashMap<usize, u64>,
    by_stamp: BTreeMap<u64, usize>,
}

/// Recency state of an inclusive multi-level LRU hierarchy, smallest level
/// first.
#[derive(Clone, Debug)]
pub struct LruState {
    levels: Vec<Level>,
    clock: u64,
}

impl LruState {
    pub fn new(capacity_lines: &[u64]) -> Self {
        let levels = capacity_lines
            .iter()
            .map(|&c| Level { capacity: c as usize, stamp_of: HashMap::new(), by_stamp: BTreeMap::new() })
            .collect();
        LruState { levels, clock: 0 }
    }

    /// Accesses `line`; returns per level whether it hit.
    pub fn access(&mut self, line: usize) -> Vec<bool> {
        self.clock += 1;
        let now = self.clock;
        let mut hits = Vec::with_capacity(self.levels.len());
        for lv in &mut self.levels {
            let hit = match lv.stamp_of.insert(line, now) {
                Some(old) => {
                    lv.by_stamp.remove(&old);
                    true
                }
                None => false,
            };
            lv.by_stamp.insert(now, line);
            if lv.by_stamp.len() > lv.capacity {
                let (_, victim) = lv.by_stamp.pop_first().expect("non-empty level");
                lv.stamp_of.remove(&victim);
            }
            hits.push(hit);
        }
        hits
    }

    pub fn contains(&self, level: usize, line: usize) -> bool {
        self.levels[level].stamp_of.contains_key(&line)
    }

    pub fn len(&self, level: usize) -> usize {
        self.levels[level].by_stamp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(|l| l.by_stamp.is_empty())
    }

    /// Every line of a level is present in all larger levels.
    pub fn inclusion_holds(&self) -> bool {
        self.levels.windows(2).all(|w| w[0].stamp_of.keys().all(|l| w[1].stamp_of.contains_key(l)))
    }

    /// Cheap inclusion check for the most recent access: the least recently
    /// used line of each level is still held by the next larger level.
    pub fn inclusion_holds_at_boundary(&self) -> bool {
        self.levels.windows(2).all(|w| match w[0].by_stamp.first_key_value() {
            Some((_, l)) => w[1].stamp_of.contains_key(l),
            None => true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_of_running_example() {
        let lines = [0, 1, 2, 3, 3, 2, 1, 0];
        let d = stack_distances(&lines);
        assert_eq!(d, vec![None, None, None, None, Some(1), Some(2), Some(3), Some(4)]);
    }

    #[test]
    fn thrash_with_one_line() {
        let mut s = LruState::new(&[1]);
        let hits: Vec<bool> = [0, 1, 0, 1].iter().map(|&l| s.access(l)[0]).collect();
        assert_eq!(hits, vec![false; 4]);
    }

    #[test]
    fn lru_agrees_with_distances() {
        let lines: Vec<usize> = (0..500).map(|i| (i * 7 + i / 3) % 23).collect();
        let d = stack_distances(&lines);
        let caps = [2u64, 5, 16];
        let mut s = LruState::new(&caps);
        for (t, &l) in lines.iter().enumerate() {
            let hits = s.access(l);
            for (k, &c) in caps.iter().enumerate() {
                assert_eq!(hits[k], d[t].is_some_and(|x| x <= c));
            }
            assert!(s.inclusion_holds());
        }
    }
}
