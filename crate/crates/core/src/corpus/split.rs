use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSizes {
    Counts { train: usize, val: usize, test: usize },
    Fractions { train: f64, val: f64, test: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub sizes: SplitSizes,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    /// The 1509 / 377 / 472 partition of the 2397-bill collection.
    pub fn published_counts(seed: u64) -> Self {
        SplitSpec {
            sizes: SplitSizes::Counts {
                train: 1509,
                val: 377,
                test: 472,
            },
            seed,
            stratified: true,
        }
    }

    /// Part sizes plus the number of documents left unassigned.
    fn resolve(&self, n: usize) -> Result<[usize; 4]> {
        match self.sizes {
            SplitSizes::Counts { train, val, test } => {
                let used = train + val + test;
                if used > n {
                    return Err(Error::InvalidSplit(format!(
                        "counts {train}+{val}+{test} exceed corpus size {n}"
                    )));
                }
                Ok([train, val, test, n - used])
            }
            SplitSizes::Fractions { train, val, test } => {
                let fr = [train, val, test];
                if fr.iter().any(|f| !(0.0..=1.0).contains(f)) {
                    return Err(Error::InvalidSplit("fractions must lie in [0, 1]".into()));
                }
                if (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSplit("fractions must sum to 1".into()));
                }
                let tr = ((train * n as f64).round() as usize).min(n);
                let va = ((val * n as f64).round() as usize).min(n - tr);
                Ok([tr, va, n - tr - va, 0])
            }
        }
    }
}

/// Partition into (train, val, test). Counts may sum to less than the corpus
/// size; the remaining documents are left out (stratified like the parts).
/// Documents keep their original relative order inside each part; which
/// documents land where is decided by the seed.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus, Corpus)> {
    let n = corpus.len();
    let sizes = spec.resolve(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 4] = Default::default();

    if spec.stratified {
        let labels = corpus.label_indices()?;
        let k = corpus.label_set().len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        let class_sizes: Vec<usize> = members.iter().map(Vec::len).collect();
        let alloc = controlled_rounding(&class_sizes, &sizes);
        for (class, idx) in members.iter_mut().enumerate() {
            idx.shuffle(&mut rng);
            let mut start = 0;
            for (part, want) in parts.iter_mut().zip(&alloc[class]) {
                part.extend_from_slice(&idx[start..start + want]);
                start += want;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut start = 0;
        for (part, want) in parts.iter_mut().zip(sizes) {
            part.extend_from_slice(&idx[start..start + want]);
            start += want;
        }
    }

    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [a, b, c, _unassigned] = parts;
    Ok((corpus.subset(&a), corpus.subset(&b), corpus.subset(&c)))
}

/// Integer allocation `alloc[c][s]` with row sums `rows[c]`, column sums
/// `cols[s]`, and every cell equal to floor or ceil of `rows[c]*cols[s]/N`.
/// Such a rounding always exists for integer margins; the fractional cells
/// are assigned by a small bipartite max-flow.
fn controlled_rounding(rows: &[usize], cols: &[usize; 4]) -> Vec<[usize; 4]> {
    let n: usize = rows.iter().sum();
    let mut alloc = vec![[0usize; 4]; rows.len()];
    if n == 0 {
        return alloc;
    }
    let mut rem = vec![[0usize; 4]; rows.len()];
    for (c, &r) in rows.iter().enumerate() {
        for s in 0..4 {
            alloc[c][s] = r * cols[s] / n;
            rem[c][s] = r * cols[s] % n;
        }
    }
    let mut row_need: Vec<usize> = rows
        .iter()
        .zip(&alloc)
        .map(|(&r, a)| r - a.iter().sum::<usize>())
        .collect();
    let mut col_need = [0usize; 4];
    for s in 0..4 {
        col_need[s] = cols[s] - alloc.iter().map(|a| a[s]).sum::<usize>();
    }

    // `bumped[c][s]`: the cell was rounded up. Augmenting paths alternate
    // between un-bumped (forward) and bumped (backward) fractional cells.
    let mut bumped = vec![[false; 4]; rows.len()];
    while let Some(start) = (0..rows.len()).find(|&c| row_need[c] > 0) {
        let mut seen_cols = [false; 4];
        let mut seen_rows = vec![false; rows.len()];
        let found = augment(
            start,
            &rem,
            &mut bumped,
            &mut col_need,
            &mut seen_rows,
            &mut seen_cols,
        );
        assert!(found, "controlled rounding must exist for integer margins");
        row_need[start] -= 1;
    }
    for (a, b) in alloc.iter_mut().zip(&bumped) {
        for s in 0..4 {
            a[s] += usize::from(b[s]);
        }
    }
    alloc
}

fn augment(
    c: usize,
    rem: &[[usize; 4]],
    bumped: &mut [[bool; 4]],
    col_need: &mut [usize; 4],
    seen_rows: &mut [bool],
    seen_cols: &mut [bool; 4],
) -> bool {
    seen_rows[c] = true;
    // Prefer the columns with the largest fractional part.
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| rem[c][b].cmp(&rem[c][a]).then(a.cmp(&b)));
    for s in order {
        if rem[c][s] == 0 || bumped[c][s] || seen_cols[s] {
            continue;
        }
        seen_cols[s] = true;
        if col_need[s] > 0 {
            col_need[s] -= 1;
            bumped[c][s] = true;
            return true;
        }
        // Column full: try to move one of its bumps to another row's cell.
        for other in 0..rem.len() {
            if bumped[other][s] && !seen_rows[other] {
                bumped[other][s] = false;
                if augment(other, rem, bumped, col_need, seen_rows, seen_cols) {
                    bumped[c][s] = true;
                    return true;
                }
                bumped[other][s] = true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, LabelSet};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn corpus_with_classes(class_of: &[usize]) -> Corpus {
        let set = LabelSet::nass();
        let docs = class_of
            .iter()
            .enumerate()
            .map(|(i, &c)| Document::new(format!("d{i:05}"), "t", Some(set.id(c))))
            .collect();
        Corpus::new(docs, set).unwrap()
    }

    fn ids(c: &Corpus) -> HashSet<String> {
        c.ids().into_iter().map(str::to_string).collect()
    }

    #[test]
    fn published_sizes_on_2397_documents() {
        let class_of: Vec<usize> = (0..2397).map(|i| (i * 7 + i / 13) % 8).collect();
        let corpus = corpus_with_classes(&class_of);
        let (tr, va, te) = split_corpus(&corpus, &SplitSpec::published_counts(42)).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (1509, 377, 472));
        let mut seen = ids(&tr);
        seen.extend(ids(&va));
        seen.extend(ids(&te));
        assert_eq!(seen.len(), 2358);
        for part in [&tr, &va, &te] {
            let labels = part.label_indices().unwrap();
            for c in 0..8 {
                let have = labels.iter().filter(|&&l| l == c).count() as f64;
                let total = class_of.iter().filter(|&&l| l == c).count() as f64;
                let exact = total * part.len() as f64 / 2397.0;
                assert!((have - exact).abs() < 1.0, "class {c}: {have} vs {exact}");
            }
        }
    }

    #[test]
    fn all_train_fractions() {
        let corpus = corpus_with_classes(&[0, 1, 2, 3, 4]);
        let spec = SplitSpec {
            sizes: SplitSizes::Fractions {
                train: 1.0,
                val: 0.0,
                test: 0.0,
            },
            seed: 1,
            stratified: false,
        };
        let (tr, va, te) = split_corpus(&corpus, &spec).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (5, 0, 0));
    }

    #[test]
    fn rejects_bad_counts_and_unlabeled_stratified() {
        let corpus = corpus_with_classes(&[0, 1, 2]);
        let spec = SplitSpec {
            sizes: SplitSizes::Counts {
                train: 1,
                val: 1,
                test: 2,
            },
            seed: 0,
            stratified: false,
        };
        assert!(matches!(split_corpus(&corpus, &spec), Err(Error::InvalidSplit(_))));

        let c = Corpus::new(
            vec![Document::new("a", "t", None), Document::new("b", "t", Some("NASS-1"))],
            LabelSet::nass(),
        )
        .unwrap();
        let spec = SplitSpec {
            sizes: SplitSizes::Counts {
                train: 1,
                val: 0,
                test: 1,
            },
            seed: 0,
            stratified: true,
        };
        assert!(matches!(split_corpus(&c, &spec), Err(Error::UnlabeledDocument(_))));
        let spec = SplitSpec {
            stratified: false,
            ..spec
        };
        assert!(split_corpus(&c, &spec).is_ok());
    }

    proptest! {
        #[test]
        fn partition_is_exhaustive_disjoint_deterministic_and_proportional(
            class_of in prop::collection::vec(0usize..8, 1..300),
            cut_a in 0.0f64..1.0,
            cut_b in 0.0f64..1.0,
            seed in any::<u64>(),
            stratified in any::<bool>(),
        ) {
            let n = class_of.len();
            let (lo, hi) = if cut_a < cut_b { (cut_a, cut_b) } else { (cut_b, cut_a) };
            let train = (lo * n as f64) as usize;
            let val = (hi * n as f64) as usize - train;
            let test = n - train - val;
            let corpus = corpus_with_classes(&class_of);
            let spec = SplitSpec { sizes: SplitSizes::Counts { train, val, test }, seed, stratified };
            let (a, b, c) = split_corpus(&corpus, &spec).unwrap();
            prop_assert_eq!((a.len(), b.len(), c.len()), (train, val, test));
            let (ia, ib, ic) = (ids(&a), ids(&b), ids(&c));
            prop_assert!(ia.is_disjoint(&ib) && ia.is_disjoint(&ic) && ib.is_disjoint(&ic));
            prop_assert_eq!(ia.len() + ib.len() + ic.len(), n);

            let again = split_corpus(&corpus, &spec).unwrap();
            prop_assert_eq!(a.ids(), again.0.ids());
            prop_assert_eq!(c.ids(), again.2.ids());

            if stratified {
                let mut per_class = [0usize; 8];
                for &k in &class_of { per_class[k] += 1; }
                for (part, size) in [(&a, train), (&b, val), (&c, test)] {
                    let mut got = [0usize; 8];
                    for l in part.label_indices().unwrap() { got[l] += 1; }
                    for k in 0..8 {
                        let exact = per_class[k] as f64 * size as f64 / n as f64;
                        prop_assert!((got[k] as f64 - exact).abs() < 1.0 + 1e-9,
                            "class {} got {} exact {}", k, got[k], exact);
                    }
                }
            }
        }
    }
}
