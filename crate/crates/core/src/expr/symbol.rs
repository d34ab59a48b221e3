use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::jet::{Direction, MultiIndex};

/// What role a symbol plays. Derived from the name alone, so two symbols
/// with the same name always agree on their kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolKind {
    /// `y`, `u`, or the independent variable `x` used by the determining system.
    Base,
    /// A jet fiber coordinate `z_σ`.
    Fiber(MultiIndex),
    /// Member `index` of a formal-derivative tower of a function of `u`
    /// (`H_2` is the second derivative of `H(u)`).
    Tower { family: String, index: usize },
    /// Anything else: a free constant.
    Constant,
}

/// An interned-by-value identifier. Equality, ordering and hashing go through
/// the name only.
#[derive(Clone)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn y() -> Self {
        Symbol::new("y")
    }

    pub fn u() -> Self {
        Symbol::new("u")
    }

    pub fn x() -> Self {
        Symbol::new("x")
    }

    pub fn base(dir: Direction) -> Self {
        match dir {
            Direction::Y => Symbol::y(),
            Direction::U => Symbol::u(),
        }
    }

    /// `z` for the empty multi-index, otherwise `z_` followed by `i` y's and `j` u's.
    pub fn fiber(sigma: MultiIndex) -> Self {
        Symbol::new(&sigma.coordinate_name())
    }

    pub fn tower(family: &str, index: usize) -> Self {
        Symbol::new(&format!("{family}_{index}"))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn kind(&self) -> SymbolKind {
        let name = self.name();
        if matches!(name, "x" | "y" | "u") {
            return SymbolKind::Base;
        }
        if let Some(sigma) = MultiIndex::parse_coordinate(name) {
            return SymbolKind::Fiber(sigma);
        }
        if let Some((family, idx)) = name.rsplit_once('_') {
            if !family.is_empty()
                && family != "z"
                && !idx.is_empty()
                && idx.bytes().all(|b| b.is_ascii_digit())
                && (idx == "0" || !idx.starts_with('0'))
            {
                if let Ok(index) = idx.parse() {
                    return SymbolKind::Tower {
                        family: family.to_string(),
                        index,
                    };
                }
            }
        }
        SymbolKind::Constant
    }

    pub fn as_fiber(&self) -> Option<MultiIndex> {
        match self.kind() {
            SymbolKind::Fiber(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_tower(&self) -> Option<(String, usize)> {
        match self.kind() {
            SymbolKind::Tower { family, index } => Some((family, index)),
            _ => None,
        }
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}
