use crate::frontend::Program;
use crate::polyhedra::PolyError;

/// One memory access of the trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    /// Statement index in declaration order.
    pub stmt: usize,
    pub instance: Vec<i64>,
    pub access: usize,
    /// Array index in declaration order.
    pub array: usize,
    pub line: Vec<i64>,
}

/// All accesses of a program in schedule order.
#[derive(Clone, Debug, Default)]
pub struct MemoryTrace {
    pub statements: Vec<String>,
    pub arrays: Vec<String>,
    pub records: Vec<TraceRecord>,
}

impl MemoryTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Enumerates every statement instance, applies the access map and orders
/// the records by schedule value.
pub fn generate_trace(p: &Program) -> Result<MemoryTrace, PolyError> {
    let arrays: Vec<String> = p.arrays.iter().map(|a| a.name.clone()).collect();
    let mut keyed: Vec<(Vec<i64>, TraceRecord)> = Vec::new();
    for (s, st) in p.statements.iter().enumerate() {
        if st.accesses.is_empty() {
            continue;
        }
        let sched: Vec<_> = (0..st.accesses.len()).map(|k| st.access_schedule(k)).collect();
        let array_ids: Vec<usize> =
            st.accesses.iter().map(|a| arrays.iter().position(|n| *n == a.array).expect("declared array")).collect();
        for (_, pt) in st.domain.enumerate()? {
            for (k, acc) in st.accesses.iter().enumerate() {
                let key: Vec<i64> = sched[k].iter().map(|e| e.eval(&pt)).collect();
                let rec = TraceRecord { stmt: s, instance: pt.clone(), access: k, array: array_ids[k], line: acc.line_at(&pt) };
                keyed.push((key, rec));
            }
        }
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    debug_assert!(keyed.windows(2).all(|w| w[0].0 != w[1].0), "schedule is not injective");
    Ok(MemoryTrace {
        statements: p.statement_order(),
        arrays,
        records: keyed.into_iter().map(|(_, r)| r).collect(),
    })
}
