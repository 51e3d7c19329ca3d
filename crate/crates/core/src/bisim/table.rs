use std::collections::BTreeMap;

use crate::boolean::BoolCtx;
use crate::error::Result;
use crate::semantics::SnapId;
use crate::syntax::BExp;

/// Map from visited snapshot pairs to booleans. Snapshots are interned, so
/// ids are equality-compatible keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    entries: BTreeMap<(SnapId, SnapId), BExp>,
}

impl Table {
    pub fn new() -> Self {
        Table::default()
    }

    pub fn get(&self, t: SnapId, u: SnapId) -> Option<&BExp> {
        self.entries.get(&(t, u))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(SnapId, SnapId), &BExp)> {
        self.entries.iter()
    }

    /// Adds an entry; a pair already present keeps the disjunction of both
    /// booleans.
    pub fn insert(&mut self, pair: (SnapId, SnapId), b: BExp, ctx: &BoolCtx) -> Result<()> {
        match self.entries.get_mut(&pair) {
            None => {
                self.entries.insert(pair, b);
            }
            Some(old) if *old == b => {}
            Some(old) => {
                let joined = ctx.simplify(&BExp::or([old.clone(), b]))?;
                *old = joined;
            }
        }
        Ok(())
    }

    pub fn join(&mut self, other: Table, ctx: &BoolCtx) -> Result<()> {
        for (k, v) in other.entries {
            self.insert(k, v, ctx)?;
        }
        Ok(())
    }
}
