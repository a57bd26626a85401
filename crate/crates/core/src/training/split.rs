use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{ClamError, Result};
use crate::numerics::SeededRng;

/// One patient case and the slides it contributed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseRecord {
    pub case_id: String,
    pub class: usize,
    pub slide_ids: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitSet {
    Train,
    Val,
    Test,
}

impl SplitSet {
    /// Letter used in split files.
    pub fn code(self) -> char {
        match self {
            SplitSet::Train => 'R',
            SplitSet::Val => 'V',
            SplitSet::Test => 'T',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'R' => Some(SplitSet::Train),
            'V' => Some(SplitSet::Val),
            'T' => Some(SplitSet::Test),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

/// Case ids of one fold.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Case-level assignments to train/val/test for each fold.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPlan {
    pub cases: Vec<CaseRecord>,
    /// `assignments[fold][case]`
    pub assignments: Vec<Vec<SplitSet>>,
}

/// Independent class-stratified random partitions of the cases, one per fold.
///
/// Within each class, `round(f·n)` cases (at least one when `f > 0`) go to
/// test and to validation and the rest to training. All slides of a case
/// share its set.
pub fn monte_carlo_split(
    cases: &[CaseRecord],
    n_folds: usize,
    fractions: SplitFractions,
    rng: &mut SeededRng,
) -> Result<SplitPlan> {
    let SplitFractions { train, val, test } = fractions;
    if [train, val, test].iter().any(|f| !(0.0..=1.0).contains(f)) || (train + val + test - 1.0).abs() > 1e-9 {
        return Err(ClamError::Split(format!(
            "fractions {train}/{val}/{test} must be in [0,1] and sum to 1"
        )));
    }
    if n_folds == 0 {
        return Err(ClamError::Split("need at least one fold".into()));
    }
    let mut seen = BTreeSet::new();
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, c) in cases.iter().enumerate() {
        if !seen.insert(c.case_id.as_str()) {
            return Err(ClamError::Split(format!("case {} listed twice", c.case_id)));
        }
        by_class.entry(c.class).or_default().push(i);
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < 3) {
        return Err(ClamError::Split(format!(
            "class {class} has {} cases, at least 3 are needed",
            members.len()
        )));
    }

    let count = |f: f64, n: usize| {
        if f > 0.0 {
            ((f * n as f64).round() as usize).max(1)
        } else {
            0
        }
    };
    let mut assignments = Vec::with_capacity(n_folds);
    for _ in 0..n_folds {
        let mut fold = vec![SplitSet::Train; cases.len()];
        for members in by_class.values() {
            let mut order = members.clone();
            rng.shuffle(&mut order);
            let n = order.len();
            let n_test = count(test, n);
            let n_val = count(val, n).min(n - n_test.min(n));
            if n_test + n_val >= n && train > 0.0 {
                return Err(ClamError::Split(format!(
                    "class {} leaves no training cases",
                    cases[members[0]].class
                )));
            }
            for &i in &order[..n_test] {
                fold[i] = SplitSet::Test;
            }
            for &i in &order[n_test..n_test + n_val] {
                fold[i] = SplitSet::Val;
            }
        }
        assignments.push(fold);
    }
    Ok(SplitPlan {
        cases: cases.to_vec(),
        assignments,
    })
}

impl SplitPlan {
    pub fn n_folds(&self) -> usize {
        self.assignments.len()
    }

    /// Case ids per set, in input order.
    pub fn fold(&self, fold: usize) -> Fold {
        let mut out = Fold::default();
        for (case, set) in self.cases.iter().zip(&self.assignments[fold]) {
            let target = match set {
                SplitSet::Train => &mut out.train,
                SplitSet::Val => &mut out.val,
                SplitSet::Test => &mut out.test,
            };
            target.push(case.case_id.clone());
        }
        out
    }

    /// Slide ids of one set, in input order.
    pub fn slides(&self, fold: usize, set: SplitSet) -> Vec<String> {
        self.cases
            .iter()
            .zip(&self.assignments[fold])
            .filter(|(_, &s)| s == set)
            .flat_map(|(c, _)| c.slide_ids.iter().cloned())
            .collect()
    }

    /// One line per case: `case_id,class,<one of R/V/T per fold>`.
    pub fn to_split_file(&self) -> String {
        let mut out = String::from("# case_id,class,folds (R=train V=val T=test)\n");
        for (i, case) in self.cases.iter().enumerate() {
            let codes: String = self.assignments.iter().map(|f| f[i].code()).collect();
            let _ = writeln!(out, "{},{},{codes}", case.case_id, case.class);
        }
        out
    }

    /// Reads a split file written by [`SplitPlan::to_split_file`], matching
    /// its lines to `cases` by id. Every case must appear exactly once with
    /// the same class.
    pub fn from_split_file(text: &str, cases: &[CaseRecord]) -> Result<Self> {
        let index: BTreeMap<&str, usize> = cases.iter().enumerate().map(|(i, c)| (c.case_id.as_str(), i)).collect();
        let mut per_case: Vec<Option<Vec<SplitSet>>> = vec![None; cases.len()];
        let mut n_folds = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| ClamError::Split(format!("line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split(',').collect();
            let [case_id, class, codes] = fields[..] else {
                return Err(bad(format!("expected 3 fields, got {}", fields.len())));
            };
            let &i = index
                .get(case_id)
                .ok_or_else(|| bad(format!("unknown case {case_id}")))?;
            let class: usize = class
                .parse()
                .map_err(|_| bad(format!("class {class:?} is not a number")))?;
            if class != cases[i].class {
                return Err(bad(format!(
                    "case {case_id} has class {} but the file says {class}",
                    cases[i].class
                )));
            }
            let sets = codes
                .chars()
                .map(|c| SplitSet::from_code(c).ok_or_else(|| bad(format!("bad fold code {c:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if sets.is_empty() || *n_folds.get_or_insert(sets.len()) != sets.len() {
                return Err(bad("inconsistent number of folds".into()));
            }
            if per_case[i].replace(sets).is_some() {
                return Err(bad(format!("case {case_id} listed twice")));
            }
        }
        let n_folds = n_folds.ok_or_else(|| ClamError::Split("split file lists no cases".into()))?;
        let mut assignments = vec![Vec::with_capacity(cases.len()); n_folds];
        for (case, sets) in cases.iter().zip(per_case) {
            let sets =
                sets.ok_or_else(|| ClamError::Split(format!("case {} missing from split file", case.case_id)))?;
            for (f, s) in sets.into_iter().enumerate() {
                assignments[f].push(s);
            }
        }
        Ok(Self {
            cases: cases.to_vec(),
            assignments,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cases(per_class: &[usize]) -> Vec<CaseRecord> {
        let mut out = Vec::new();
        for (class, &n) in per_class.iter().enumerate() {
            for i in 0..n {
                let id = format!("c{class}_{i}");
                out.push(CaseRecord {
                    slide_ids: vec![format!("{id}_a")],
                    case_id: id,
                    class,
                });
            }
        }
        out
    }

    #[test]
    fn ten_per_class_gives_8_1_1() {
        let c = cases(&[10, 10]);
        let plan = monte_carlo_split(&c, 10, SplitFractions::default(), &mut SeededRng::new(1)).unwrap();
        for f in 0..10 {
            for class in 0..2 {
                let tally = |set| {
                    c.iter()
                        .zip(&plan.assignments[f])
                        .filter(|(k, &s)| k.class == class && s == set)
                        .count()
                };
                assert_eq!(
                    (tally(SplitSet::Train), tally(SplitSet::Val), tally(SplitSet::Test)),
                    (8, 1, 1)
                );
            }
        }
    }

    #[test]
    fn sets_partition_cases_and_keep_slides_together() {
        let mut c = cases(&[7, 12, 5]);
        c[3].slide_ids = vec!["x1".into(), "x2".into(), "x3".into()];
        let plan = monte_carlo_split(&c, 5, SplitFractions::default(), &mut SeededRng::new(2)).unwrap();
        for f in 0..5 {
            let fold = plan.fold(f);
            let all: BTreeSet<&String> = fold.train.iter().chain(&fold.val).chain(&fold.test).collect();
            assert_eq!(all.len(), c.len());
            assert_eq!(fold.train.len() + fold.val.len() + fold.test.len(), c.len());
            let sets = [SplitSet::Train, SplitSet::Val, SplitSet::Test];
            let holders: Vec<_> = sets
                .iter()
                .filter(|&&s| plan.slides(f, s).contains(&"x1".to_string()))
                .collect();
            assert_eq!(holders.len(), 1);
            let slides = plan.slides(f, *holders[0]);
            assert!(slides.contains(&"x2".to_string()) && slides.contains(&"x3".to_string()));
        }
    }

    #[test]
    fn deterministic_and_errors() {
        let c = cases(&[6, 6]);
        let a = monte_carlo_split(&c, 3, SplitFractions::default(), &mut SeededRng::new(3)).unwrap();
        let b = monte_carlo_split(&c, 3, SplitFractions::default(), &mut SeededRng::new(3)).unwrap();
        assert_eq!(a, b);
        let few = cases(&[6, 2]);
        assert!(matches!(
            monte_carlo_split(&few, 1, SplitFractions::default(), &mut SeededRng::new(3)),
            Err(ClamError::Split(m)) if m.contains("class 1")
        ));
    }

    #[test]
    fn split_file_round_trip() {
        let c = cases(&[5, 4]);
        let plan = monte_carlo_split(&c, 4, SplitFractions::default(), &mut SeededRng::new(4)).unwrap();
        let text = plan.to_split_file();
        assert_eq!(SplitPlan::from_split_file(&text, &c).unwrap(), plan);
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(SplitPlan::from_split_file(&truncated, &c).is_err());
    }
}
