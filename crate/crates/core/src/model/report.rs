use serde::{Deserialize, Serialize};

/// Miss classification at one cache level.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub capacity_bytes: u64,
    pub compulsory: u64,
    pub capacity: u64,
    pub hits: u64,
}

impl LevelCounts {
    pub fn misses(&self) -> u64 {
        self.compulsory + self.capacity
    }
}

/// Per-level counts of one statement (or of the whole program).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementCounts {
    pub statement: String,
    pub accesses: u64,
    pub levels: Vec<LevelCounts>,
}

impl StatementCounts {
    pub fn new(statement: &str, accesses: u64, capacities: &[u64]) -> Self {
        StatementCounts {
            statement: statement.to_string(),
            accesses,
            levels: capacities.iter().map(|&c| LevelCounts { capacity_bytes: c, ..Default::default() }).collect(),
        }
    }
}

/// Miss counts per statement and level, shared by the model and the
/// simulator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissCounts {
    pub line_size: u64,
    /// Level capacities in bytes.
    pub capacities: Vec<u64>,
    pub statements: Vec<StatementCounts>,
    pub total: StatementCounts,
}

impl MissCounts {
    pub fn new(line_size: u64, capacities: &[u64]) -> Self {
        MissCounts {
            line_size,
            capacities: capacities.to_vec(),
            statements: Vec::new(),
            total: StatementCounts::new("total", 0, capacities),
        }
    }

    /// Fills `hits` from accesses and misses and recomputes the totals.
    pub fn finish(&mut self) {
        let mut total = StatementCounts::new("total", 0, &self.capacities);
        for s in &mut self.statements {
            total.accesses += s.accesses;
            for (k, l) in s.levels.iter_mut().enumerate() {
                l.hits = s.accesses.saturating_sub(l.compulsory + l.capacity);
                let t = &mut total.levels[k];
                t.compulsory += l.compulsory;
                t.capacity += l.capacity;
                t.hits += l.hits;
            }
        }
        self.total = total;
    }

    pub fn statement(&self, name: &str) -> Option<&StatementCounts> {
        self.statements.iter().find(|s| s.statement == name)
    }
}
