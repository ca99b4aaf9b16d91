use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "cluster-sim";

/// Which party made a contribution. The service-initializing point belongs to
/// neither side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Initial,
    One,
    Two,
}

impl Side {
    pub fn label(&self) -> &'static str {
        match self {
            Side::Initial => "initial",
            Side::One => "1",
            Side::Two => "2",
        }
    }
}

/// One realized cluster in chronological order.
///
/// `parents[i]` is the index of the point that point `i` replies to; the
/// initial point has none. Unmarked clusters carry unit marks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub epochs: Vec<f64>,
    pub sides: Vec<Side>,
    pub parents: Vec<Option<usize>>,
    pub marks: Vec<f64>,
}

impl ClusterRecord {
    pub fn singleton(mark: f64) -> Self {
        Self {
            epochs: vec![0.0],
            sides: vec![Side::Initial],
            parents: vec![None],
            marks: vec![mark],
        }
    }

    /// Number of points `N`, including the initial one.
    pub fn size(&self) -> usize {
        self.epochs.len()
    }

    /// Time of the last contribution.
    pub fn duration(&self) -> f64 {
        self.epochs.last().copied().unwrap_or(0.0)
    }

    /// `(N¹, N²)`; the initial point counts toward neither.
    pub fn side_counts(&self) -> (usize, usize) {
        self.sides.iter().fold((0, 0), |(a, b), s| match s {
            Side::One => (a + 1, b),
            Side::Two => (a, b + 1),
            Side::Initial => (a, b),
        })
    }

    /// Direct-reply counts per point in chronological order.
    pub fn offspring_counts(&self) -> Vec<u32> {
        let mut k = vec![0u32; self.size()];
        for p in self.parents.iter().flatten() {
            k[*p] += 1;
        }
        k
    }

    /// Parent indices shifted to 1-based and sorted: a Dyck path whose
    /// histogram is the chronological offspring-count vector.
    pub fn parent_dyck_steps(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.parents.iter().flatten().map(|&p| p as u32 + 1).collect();
        d.sort_unstable();
        d
    }

    /// Reply offsets `epoch - parent epoch` for every non-initial point.
    pub fn offsets(&self) -> Vec<f64> {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| self.epochs[i] - self.epochs[p]))
            .collect()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n = self.epochs.len();
        let fail = |msg: String| Err(Error::invariant(MODULE, msg));
        if n == 0 {
            return fail("cluster record is empty".into());
        }
        if self.sides.len() != n || self.parents.len() != n || self.marks.len() != n {
            return fail("cluster record columns have different lengths".into());
        }
        if self.epochs[0] != 0.0 || self.sides[0] != Side::Initial || self.parents[0].is_some() {
            return fail("first point must be the initial contribution at time 0".into());
        }
        for i in 1..n {
            if !(self.epochs[i] > self.epochs[i - 1]) {
                return fail(format!("epochs not strictly increasing at index {i}"));
            }
            match self.parents[i] {
                Some(p) if p < i => {}
                _ => return fail(format!("point {i} has no earlier parent")),
            }
            if self.sides[i] == Side::Initial {
                return fail(format!("point {i} is labelled initial"));
            }
        }
        if self.marks.iter().any(|m| !(*m > 0.0)) {
            return fail("marks must be positive".into());
        }
        let (a, b) = self.side_counts();
        if a + b + 1 != n {
            return fail("N != N1 + N2 + 1".into());
        }
        Ok(())
    }

    /// Reorder points built in tree order into chronological order, remapping
    /// parent links.
    pub(crate) fn from_unsorted(times: Vec<f64>, sides: Vec<Side>, parents: Vec<Option<usize>>, marks: Vec<f64>) -> Self {
        let n = times.len();
        let mut order: Vec<usize> = (0..n).collect();
        // stable: the initial point (time 0) stays first
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut rank = vec![0usize; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let rec = Self {
            epochs: order.iter().map(|&i| times[i]).collect(),
            sides: order.iter().map(|&i| sides[i]).collect(),
            parents: order.iter().map(|&i| parents[i].map(|p| rank[p])).collect(),
            marks: order.iter().map(|&i| marks[i]).collect(),
        };
        debug_assert!(rec.check_invariants().is_ok(), "{:?}", rec.check_invariants());
        rec
    }
}
