use std::fmt;

use super::error::PolyError;

/// A named (or anonymous) integer tuple space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Space {
    pub name: Option<String>,
    pub dims: Vec<String>,
}

/// Identity of a tuple for set algebra: name and arity. Dimension labels are
/// cosmetic.
pub type TupleKey = (Option<String>, usize);

impl Space {
    pub fn new(name: Option<&str>, dims: &[&str]) -> Self {
        Space { name: name.map(str::to_string), dims: dims.iter().map(|d| d.to_string()).collect() }
    }

    pub fn named(name: &str, dims: Vec<String>) -> Self {
        Space { name: Some(name.to_string()), dims }
    }

    pub fn anonymous(dims: Vec<String>) -> Self {
        Space { name: None, dims }
    }

    /// Anonymous space with generated dimension names `prefix0, prefix1, ..`.
    pub fn anonymous_n(prefix: &str, n: usize) -> Self {
        Space { name: None, dims: (0..n).map(|i| format!("{prefix}{i}")).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn key(&self) -> TupleKey {
        (self.name.clone(), self.dims.len())
    }

    pub fn index_of(&self, dim: &str) -> Result<usize, PolyError> {
        self.dims
            .iter()
            .position(|d| d == dim)
            .ok_or_else(|| PolyError::UnknownDimension(dim.to_string()))
    }

    /// Same tuple identity.
    pub fn matches(&self, o: &Space) -> bool {
        self.name == o.name && self.dims.len() == o.dims.len()
    }

    /// Fails when the two spaces share a name but not an arity, which would
    /// make membership ambiguous.
    pub fn check_compatible(&self, o: &Space) -> Result<(), PolyError> {
        if self.name == o.name && self.dims.len() != o.dims.len() {
            return Err(PolyError::IncompatibleSpace(format!("{self} vs {o}")));
        }
        Ok(())
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("")
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.display_name(), self.dims.join(", "))
    }
}
