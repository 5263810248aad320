use super::{LabeledDataset, Split};
use crate::error::{Error, Result};

/// 10/14, 2/14, 2/14: 10000/2000/2000 out of 14000.
pub const DEFAULT_FRACTIONS: [f64; 3] = [10.0 / 14.0, 2.0 / 14.0, 2.0 / 14.0];

/// Stratified split into train, val and test, returned in that order.
///
/// Split sizes are round(N·f_train), round(N·f_val) and the remainder. Rows
/// are visited bin by bin (stable, so the dataset's seeded shuffle decides
/// who goes where inside a bin) and each is assigned to the split that is
/// furthest behind its pro-rata share. Each split therefore tracks the
/// global bin proportions to within a row or two. Rows keep their dataset
/// order inside each split.
pub fn split_dataset(ds: &LabeledDataset, fractions: [f64; 3]) -> Result<[LabeledDataset; 3]> {
    if fractions.iter().any(|f| !(*f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!(
            "split fractions {fractions:?} must be positive and sum to 1"
        )));
    }
    let n = ds.rows.len();
    let n_train = ((n as f64 * fractions[0]).round() as usize).min(n);
    let n_val = ((n as f64 * fractions[1]).round() as usize).min(n - n_train);
    let targets = [n_train, n_val, n - n_train - n_val];

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| ds.rows[i].bin);

    let mut assigned = vec![Split::Train; n];
    let mut counts = [0usize; 3];
    for (step, &i) in order.iter().enumerate() {
        let seen = (step + 1) as f64;
        let mut best = None;
        let mut best_deficit = f64::NEG_INFINITY;
        for k in 0..3 {
            if counts[k] >= targets[k] {
                continue;
            }
            let deficit = targets[k] as f64 * seen / n as f64 - counts[k] as f64;
            if deficit > best_deficit {
                best_deficit = deficit;
                best = Some(k);
            }
        }
        let k = best.expect("targets sum to n");
        counts[k] += 1;
        assigned[i] = Split::ALL[k];
    }

    Ok(Split::ALL.map(|s| {
        let rows = ds
            .rows
            .iter()
            .zip(&assigned)
            .filter(|(_, a)| **a == s)
            .map(|(r, _)| {
                let mut r = r.clone();
                r.split = Some(s);
                r
            })
            .collect();
        LabeledDataset {
            layout: ds.layout.clone(),
            spec: ds.spec.clone(),
            rows,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{LabeledRow, Provenance};
    use crate::features::layout_for;

    fn toy(n: usize, bins: usize) -> LabeledDataset {
        let rows = (0..n)
            .map(|i| LabeledRow {
                features: vec![i as f64],
                label: (i % bins) as f64 / bins as f64,
                bin: (i * 7 + 3) % bins,
                provenance: Provenance::RandomPure,
                split: None,
            })
            .collect();
        LabeledDataset {
            layout: layout_for(1).unwrap(),
            spec: None,
            rows,
        }
    }

    #[test]
    fn default_sizes() {
        let [tr, va, te] = split_dataset(&toy(14000, 10), DEFAULT_FRACTIONS).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (10000, 2000, 2000));
        let [tr, va, te] = split_dataset(&toy(1400, 10), DEFAULT_FRACTIONS).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (1000, 200, 200));
    }

    #[test]
    fn union_is_original() {
        let ds = toy(517, 10);
        let parts = split_dataset(&ds, [0.6, 0.25, 0.15]).unwrap();
        let mut ids: Vec<usize> = parts
            .iter()
            .flat_map(|p| p.rows.iter().map(|r| r.features[0] as usize))
            .collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..517).collect::<Vec<_>>());
    }

    #[test]
    fn stratified_within_two_rows() {
        let ds = toy(1400, 10);
        let global = ds.bin_counts(10);
        let fr = DEFAULT_FRACTIONS;
        for (part, f) in split_dataset(&ds, fr).unwrap().iter().zip(fr) {
            for (c, g) in part.bin_counts(10).iter().zip(&global) {
                assert!(
                    (*c as f64 - *g as f64 * f).abs() <= 2.0,
                    "{c} vs {}",
                    *g as f64 * f
                );
            }
        }
    }

    #[test]
    fn bad_fractions() {
        let ds = toy(10, 2);
        assert!(split_dataset(&ds, [0.5, 0.5, 0.0]).is_err());
        assert!(split_dataset(&ds, [0.5, 0.3, 0.3]).is_err());
    }
}
