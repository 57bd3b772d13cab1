use std::collections::{BTreeMap, BTreeSet};

use super::{DataError, LabeledInstance};
use crate::opf::{DemandVector, LabelOracle, NetworkCase};

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledInstance {
    pub index: usize,
    pub regime: String,
    pub x: DemandVector,
}

/// Result of one [`InstancePool::label_on_demand`] call.
#[derive(Debug, Clone, Default)]
pub struct LabelOutcome {
    pub labeled: Vec<LabeledInstance>,
    /// Indices the oracle could not label, with the reason. They leave the pool.
    pub skipped: Vec<(usize, String)>,
}

/// Labeled and unlabeled instances sharing one index space.
///
/// An index lives in exactly one of: the unlabeled map, the labeled list, or the
/// skipped list.
#[derive(Debug, Clone, Default)]
pub struct InstancePool {
    labeled: Vec<LabeledInstance>,
    unlabeled: BTreeMap<usize, UnlabeledInstance>,
    skipped: Vec<(usize, String)>,
    retired: BTreeSet<usize>,
}

impl InstancePool {
    pub fn from_unlabeled(entries: Vec<UnlabeledInstance>) -> Self {
        let mut unlabeled = BTreeMap::new();
        for e in entries {
            let index = e.index;
            assert!(unlabeled.insert(index, e).is_none(), "duplicate pool index {index}");
        }
        Self {
            unlabeled,
            ..Self::default()
        }
    }

    pub fn labeled(&self) -> &[LabeledInstance] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> impl ExactSizeIterator<Item = &UnlabeledInstance> {
        self.unlabeled.values()
    }

    pub fn unlabeled_len(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn get_unlabeled(&self, index: usize) -> Option<&UnlabeledInstance> {
        self.unlabeled.get(&index)
    }

    pub fn skipped(&self) -> &[(usize, String)] {
        &self.skipped
    }

    pub fn is_empty(&self) -> bool {
        self.labeled.is_empty() && self.unlabeled.is_empty()
    }

    /// `|labeled| + |unlabeled| + |skipped|`; constant across labeling calls.
    pub fn total(&self) -> usize {
        self.labeled.len() + self.unlabeled.len() + self.skipped.len()
    }

    /// Label the given unlabeled indices through `oracle` and move them to the
    /// labeled side. Infeasible instances are reported in `skipped`.
    ///
    /// The whole request is validated first; on error nothing moves.
    pub fn label_on_demand(
        &mut self,
        case: &NetworkCase,
        indices: &[usize],
        oracle: &mut dyn LabelOracle,
    ) -> Result<LabelOutcome, DataError> {
        let mut seen = BTreeSet::new();
        for &i in indices {
            if self.retired.contains(&i) || !seen.insert(i) {
                return Err(DataError::AlreadyLabeled(i));
            }
            if !self.unlabeled.contains_key(&i) {
                return Err(DataError::UnknownIndex(i));
            }
        }
        if indices.is_empty() {
            return Ok(LabelOutcome::default());
        }
        let demands: Vec<DemandVector> = indices.iter().map(|i| self.unlabeled[i].x.clone()).collect();
        let results = oracle.label_batch(case, &demands)?;

        let mut outcome = LabelOutcome::default();
        for (&i, result) in indices.iter().zip(results) {
            let entry = self.unlabeled.remove(&i).expect("validated above");
            self.retired.insert(i);
            match result {
                Ok((y, a)) => {
                    let inst = LabeledInstance {
                        index: i,
                        regime: entry.regime,
                        x: entry.x,
                        y,
                        a,
                    };
                    outcome.labeled.push(inst.clone());
                    self.labeled.push(inst);
                }
                Err(e) => {
                    let reason = e.to_string();
                    outcome.skipped.push((i, reason.clone()));
                    self.skipped.push((i, reason));
                }
            }
        }
        Ok(outcome)
    }
}
