use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::seed::rng_for;

/// Index lists of a 50/25/25 partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subset {
    Train,
    Val,
    Test,
}

impl Subset {
    pub fn name(self) -> &'static str {
        match self {
            Subset::Train => "train",
            Subset::Val => "val",
            Subset::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Subset::Train),
            "val" => Some(Subset::Val),
            "test" => Some(Subset::Test),
            _ => None,
        }
    }
}

impl DatasetSplit {
    pub fn indices(&self, s: Subset) -> &[usize] {
        match s {
            Subset::Train => &self.train,
            Subset::Val => &self.val,
            Subset::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Subset of every index, or `None` for an index outside the split.
    pub fn assignment(&self) -> Vec<Option<Subset>> {
        let mut out = vec![None; self.len()];
        for s in [Subset::Train, Subset::Val, Subset::Test] {
            for &i in self.indices(s) {
                if i < out.len() {
                    out[i] = Some(s);
                }
            }
        }
        out
    }
}

/// Seeded 50/25/25 split. Validation and test each receive ⌊n/4⌋ samples
/// and training the remainder. With labels, every class is split on its own
/// and the per-class quotas are reconciled with the totals by largest
/// remainder, so class ratios hold within one sample.
pub fn split(n: usize, seed: u64, labels: Option<&[usize]>) -> Result<DatasetSplit> {
    if n < 4 {
        return invalid(format!("need at least 4 samples to split, got {n}"));
    }
    let quarter = n / 4;
    let mut rng = rng_for(seed, "split");
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    match labels {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            val.extend_from_slice(&idx[..quarter]);
            test.extend_from_slice(&idx[quarter..2 * quarter]);
            train.extend_from_slice(&idx[2 * quarter..]);
        }
        Some(labels) => {
            if labels.len() != n {
                return invalid(format!("{} labels for {n} samples", labels.len()));
            }
            let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;
            let mut groups = vec![Vec::new(); n_classes];
            for (i, &l) in labels.iter().enumerate() {
                groups[l].push(i);
            }
            let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
            let val_q = quotas(&sizes, &vec![0; n_classes], quarter, 0.75);
            let test_q = quotas(&sizes, &val_q, quarter, 0.5);
            for (c, g) in groups.iter_mut().enumerate() {
                g.shuffle(&mut rng);
                val.extend_from_slice(&g[..val_q[c]]);
                test.extend_from_slice(&g[val_q[c]..val_q[c] + test_q[c]]);
                train.extend_from_slice(&g[val_q[c] + test_q[c]..]);
            }
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(DatasetSplit { train, val, test, seed })
}

/// Quarter-share quotas per class summing to `total`, never exceeding the
/// capacity left after `taken`. `keep` is the share of each class that
/// should remain after this assignment; extra slots go one at a time to the
/// class furthest above that share.
fn quotas(sizes: &[usize], taken: &[usize], total: usize, keep: f64) -> Vec<usize> {
    let mut q: Vec<usize> = sizes.iter().zip(taken).map(|(&s, &t)| (s / 4).min(s - t)).collect();
    let mut assigned: usize = q.iter().sum();
    while assigned < total {
        let best = (0..sizes.len())
            .filter(|&c| q[c] + taken[c] < sizes[c])
            .map(|c| (c, (sizes[c] - taken[c] - q[c]) as f64 - keep * sizes[c] as f64))
            .fold(None, |acc: Option<(usize, f64)>, (c, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((c, v)),
            });
        let Some((c, _)) = best else { break };
        q[c] += 1;
        assigned += 1;
    }
    q
}
