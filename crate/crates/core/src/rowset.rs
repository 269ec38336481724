use serde::{Deserialize, Serialize};

/// Sorted, duplicate-free set of row ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowSet(Vec<u32>);

impl RowSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn full(len: usize) -> Self {
        Self((0..len as u32).collect())
    }

    pub fn from_unsorted(mut rows: Vec<u32>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        Self(rows)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, row: u32) -> bool {
        self.0.binary_search(&row).is_ok()
    }

    pub fn filter(&self, mut keep: impl FnMut(u32) -> bool) -> Self {
        Self(self.0.iter().copied().filter(|&r| keep(r)).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.filter(|r| !other.contains(r))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.filter(|r| other.contains(r))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().all(|&r| other.contains(r))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.0.iter().all(|&r| !large.contains(r))
    }
}

impl FromIterator<u32> for RowSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}
