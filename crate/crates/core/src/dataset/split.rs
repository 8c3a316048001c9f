use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CatalogEntry, DatasetError, Source, SourceCatalog};
use crate::rng;

/// Largest-remainder (Hamilton) apportionment of `n` seats over `weights`.
/// Remainder ties go to the earlier entry.
fn apportion(weights: &[usize], n: usize) -> Vec<usize> {
    let total: u128 = weights.iter().map(|&w| w as u128).sum();
    if total == 0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<u128> = weights.iter().map(|&w| w as u128 * n as u128).collect();
    let mut seats: Vec<usize> = exact.iter().map(|&e| (e / total) as usize).collect();
    let left = n - seats.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] % total).cmp(&(exact[a] % total)).then(a.cmp(&b)));
    for &i in order.iter().take(left) {
        seats[i] += 1;
    }
    seats
}

/// Ids of one source in sorted order, then shuffled by a keyed stream.
fn shuffled_ids(entries: &[&CatalogEntry], domain: &str, seed: u64, source: Source) -> Vec<String> {
    let mut ids: Vec<String> = entries.iter().map(|e| e.image_id.clone()).collect();
    ids.sort();
    ids.shuffle(&mut rng::stream(domain, seed, source.as_str()));
    ids
}

fn by_source<'a>(entries: impl IntoIterator<Item = &'a CatalogEntry>) -> BTreeMap<Source, Vec<&'a CatalogEntry>> {
    let mut m: BTreeMap<Source, Vec<&CatalogEntry>> = BTreeMap::new();
    for e in entries {
        m.entry(e.source).or_default().push(e);
    }
    m
}

/// A catalog cut into an isolated test set and the remaining training pool,
/// both sorted by id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestPartition {
    pub train_pool: Vec<CatalogEntry>,
    pub test: Vec<CatalogEntry>,
}

impl TestPartition {
    /// Everything in the pool, nothing held out.
    pub fn all_train(catalog: &SourceCatalog) -> Self {
        TestPartition {
            train_pool: catalog.entries().to_vec(),
            test: Vec::new(),
        }
    }

    pub fn test_counts(&self) -> BTreeMap<Source, usize> {
        by_source(&self.test).into_iter().map(|(s, v)| (s, v.len())).collect()
    }

    pub fn pool_counts(&self) -> BTreeMap<Source, usize> {
        by_source(&self.train_pool).into_iter().map(|(s, v)| (s, v.len())).collect()
    }
}

/// Holds out `n_test` images from the non-excluded sources, apportioned by
/// their catalog counts. Images of excluded sources all stay in the pool.
pub fn partition_test(
    catalog: &SourceCatalog,
    n_test: usize,
    excluded: &BTreeSet<Source>,
    seed: u64,
) -> Result<TestPartition, DatasetError> {
    let groups = by_source(catalog.entries());
    let eligible: Vec<(Source, &Vec<&CatalogEntry>)> =
        groups.iter().filter(|(s, _)| !excluded.contains(s)).map(|(s, v)| (*s, v)).collect();
    let available: usize = eligible.iter().map(|(_, v)| v.len()).sum();
    if n_test > available {
        return Err(DatasetError::Argument(format!(
            "test size {n_test} exceeds the {available} images of non-excluded sources"
        )));
    }
    let quotas = apportion(&eligible.iter().map(|(_, v)| v.len()).collect::<Vec<_>>(), n_test);
    let mut test_ids = BTreeSet::new();
    for ((source, entries), quota) in eligible.iter().zip(quotas) {
        test_ids.extend(shuffled_ids(entries, "test-partition", seed, *source).into_iter().take(quota));
    }
    let (test, train_pool) = catalog.entries().iter().cloned().partition(|e| test_ids.contains(&e.image_id));
    Ok(TestPartition { train_pool, test })
}

/// Test ids plus a chain of nested training subsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub master_seed: u64,
    pub test_ids: BTreeSet<String>,
    /// `(size label, ids)`, smallest first.
    pub train_subsets: Vec<(String, BTreeSet<String>)>,
}

impl SplitPlan {
    /// Smallest subset containing `image_id`, if any.
    pub fn first_subset_of(&self, image_id: &str) -> Option<&str> {
        self.train_subsets
            .iter()
            .find(|(_, ids)| ids.contains(image_id))
            .map(|(label, _)| label.as_str())
    }
}

/// "10k", "2M", or the plain number when not a round multiple.
pub fn size_label(n: usize) -> String {
    if n > 0 && n % 1_000_000 == 0 {
        format!("{}M", n / 1_000_000)
    } else if n > 0 && n % 1_000 == 0 {
        format!("{}k", n / 1_000)
    } else {
        n.to_string()
    }
}

/// Builds nested training subsets of the given (strictly ascending) sizes
/// from the partition's pool.
///
/// Each source's pool images are shuffled once; a subset takes a prefix of
/// every source's order whose length is the largest-remainder quota of the
/// subset size. If quotas of consecutive sizes are not monotone (the
/// Alabama paradox), the smaller size's quota is capped at the larger one
/// and the shortfall re-seated by largest remaining deficit, so prefixes —
/// and therefore subsets — stay nested.
pub fn nested_subsets(partition: &TestPartition, sizes: &[usize], seed: u64) -> Result<SplitPlan, DatasetError> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DatasetError::Argument(format!("sizes {sizes:?} are not strictly ascending")));
    }
    let pool = by_source(&partition.train_pool);
    let total = partition.train_pool.len();
    if let Some(&max) = sizes.last() {
        if max > total {
            return Err(DatasetError::Argument(format!("subset size {max} exceeds the pool of {total}")));
        }
    }
    let counts: Vec<usize> = pool.values().map(Vec::len).collect();
    let mut quotas: Vec<Vec<usize>> = sizes.iter().map(|&n| apportion(&counts, n)).collect();
    for i in (0..quotas.len().saturating_sub(1)).rev() {
        let upper = quotas[i + 1].clone();
        let q = &mut quotas[i];
        for (a, &b) in q.iter_mut().zip(&upper) {
            *a = (*a).min(b);
        }
        let n = sizes[i];
        while q.iter().sum::<usize>() < n {
            // deficit of source s, scaled by the pool size: n*c_s - q_s*total
            let s = (0..q.len())
                .filter(|&s| q[s] < upper[s])
                .max_by(|&a, &b| {
                    let da = n as i128 * counts[a] as i128 - q[a] as i128 * total as i128;
                    let db = n as i128 * counts[b] as i128 - q[b] as i128 * total as i128;
                    da.cmp(&db).then(b.cmp(&a))
                })
                .expect("larger subset leaves slack");
            q[s] += 1;
        }
    }
    let orders: Vec<Vec<String>> = pool
        .iter()
        .map(|(source, entries)| shuffled_ids(entries, "nested-subsets", seed, *source))
        .collect();
    let train_subsets = sizes
        .iter()
        .zip(&quotas)
        .map(|(&n, q)| {
            let ids = orders
                .iter()
                .zip(q)
                .flat_map(|(order, &k)| order[..k].iter().cloned())
                .collect();
            (size_label(n), ids)
        })
        .collect();
    Ok(SplitPlan {
        master_seed: seed,
        test_ids: partition.test.iter().map(|e| e.image_id.clone()).collect(),
        train_subsets,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub source: Source,
    /// Share of the training pool, percent.
    pub pool_share: f64,
    /// Subset share minus pool share, percentage points, one per subset.
    pub deviations: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub subset_labels: Vec<String>,
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    pub fn max_abs_deviation(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.deviations.iter())
            .fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Deviation cell: "=" below half a hundredth of a point, else signed.
    pub fn format_deviation(d: f64) -> String {
        if d.abs() < 0.005 {
            "=".to_string()
        } else {
            format!("{d:+.2}%")
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<12}{:>9}", "Base name", "RAW");
        for l in &self.subset_labels {
            let _ = write!(out, "{l:>9}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<12}{:>9}", r.source.as_str(), format!("{:.2}%", r.pool_share));
            for &d in &r.deviations {
                let _ = write!(out, "{:>9}", Self::format_deviation(d));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-source shares of every subset against the training pool (the catalog
/// minus the plan's test ids).
pub fn ratio_report(plan: &SplitPlan, catalog: &SourceCatalog) -> RatioReport {
    let pool: Vec<&CatalogEntry> = catalog
        .entries()
        .iter()
        .filter(|e| !plan.test_ids.contains(&e.image_id))
        .collect();
    let pool_counts = by_source(pool.iter().copied());
    let subset_counts: Vec<BTreeMap<Source, usize>> = plan
        .train_subsets
        .iter()
        .map(|(_, ids)| {
            let mut m = BTreeMap::new();
            for id in ids {
                if let Some(e) = catalog.get(id) {
                    *m.entry(e.source).or_insert(0) += 1;
                }
            }
            m
        })
        .collect();
    let share = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
    let rows = pool_counts
        .iter()
        .map(|(&source, entries)| {
            let pool_share = share(entries.len(), pool.len());
            let deviations = plan
                .train_subsets
                .iter()
                .zip(&subset_counts)
                .map(|((_, ids), c)| share(c.get(&source).copied().unwrap_or(0), ids.len()) - pool_share)
                .collect();
            RatioRow {
                source,
                pool_share,
                deviations,
            }
        })
        .collect();
    RatioReport {
        subset_labels: plan.train_subsets.iter().map(|(l, _)| l.clone()).collect(),
        rows,
    }
}
