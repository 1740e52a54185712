//! Parity obstruction to square roots, and its exhaustive check on
//! permutation groups.
//!
//! If φ = ψ² and the set of l-periodic classes of φ is finite for even l,
//! then ψ acts on that set without fixed points, so the count is even. An odd
//! count therefore rules out a square root.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::orbits::{Isolation, OrbitClass};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilnorError {
    #[error("images {0:?} are not a bijection of 0..{1}")]
    NotABijection(Vec<usize>, usize),
    #[error("period {0} is odd; the parity argument needs an even period")]
    OddPeriod(usize),
    #[error("period must be positive")]
    ZeroPeriod,
    #[error("class {index} has period {found}, expected {expected}")]
    PeriodMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("degree {n} exceeds the brute-force budget of {max}")]
    Budget { n: usize, max: usize },
}

/// Largest degree for which square roots are enumerated by brute force.
pub const MAX_ROOT_DEGREE: usize = 8;
/// Largest degree for the exhaustive scan over the symmetric group.
pub const MAX_SCAN_DEGREE: usize = 7;

/// A bijection of {0, …, n−1}, stored as its list of images.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, MilnorError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(MilnorError::NotABijection(images, n));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    /// Builds a permutation of degree `n` from disjoint cycles; points not
    /// mentioned are fixed.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self, MilnorError> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut touched = vec![false; n];
        for cycle in cycles {
            for (j, &from) in cycle.iter().enumerate() {
                let to = cycle[(j + 1) % cycle.len()];
                if from >= n || to >= n || touched[from] {
                    let mut bad = images.clone();
                    if from < n {
                        bad[from] = to;
                    }
                    return Err(MilnorError::NotABijection(bad, n));
                }
                touched[from] = true;
                images[from] = to;
            }
        }
        Self::new(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.degree(), other.degree(), "degree mismatch");
        Permutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn square(&self) -> Permutation {
        self.compose(self)
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Disjoint cycles including fixed points, each starting at its smallest
    /// element, ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut i = self.images[start];
            while i != start {
                seen[i] = true;
                cycle.push(i);
                i = self.images[i];
            }
            out.push(cycle);
        }
        out
    }

    /// Multiplicity of each cycle length, indexed by length.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut counts = vec![0; self.degree() + 1];
        for c in self.cycles() {
            counts[c.len()] += 1;
        }
        counts
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let moved: Vec<Vec<usize>> = self.cycles().into_iter().filter(|c| c.len() > 1).collect();
        if moved.is_empty() {
            return write!(f, "()");
        }
        for c in moved {
            let body: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.images.serialize(s)
    }
}

/// Number of l-periodic classes of σ: cyclic tuples of l distinct points
/// with x_{j+1} = σ(x_j), which are exactly the cycles of length l.
pub fn perm_periodic_classes(sigma: &Permutation, l: usize) -> usize {
    sigma.cycles().iter().filter(|c| c.len() == l).count()
}

/// Advances `v` to the next permutation in lexicographic order.
fn next_lexicographic(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// All permutations of degree `n` in lexicographic order of their images.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut v: Vec<usize> = (0..n).collect();
    let mut out = vec![Permutation { images: v.clone() }];
    while next_lexicographic(&mut v) {
        out.push(Permutation { images: v.clone() });
    }
    out
}

/// Every ψ with ψ∘ψ = σ, by exhaustive search, in lexicographic order.
pub fn perm_square_roots(sigma: &Permutation) -> Result<Vec<Permutation>, MilnorError> {
    let n = sigma.degree();
    if n > MAX_ROOT_DEGREE {
        return Err(MilnorError::Budget {
            n,
            max: MAX_ROOT_DEGREE,
        });
    }
    Ok(all_permutations(n)
        .into_par_iter()
        .filter(|psi| psi.square() == *sigma)
        .collect())
}

/// Classical criterion: a square root exists iff every even cycle length
/// occurs an even number of times.
pub fn has_square_root_by_cycle_type(sigma: &Permutation) -> bool {
    sigma
        .cycle_type()
        .iter()
        .enumerate()
        .all(|(len, &count)| len % 2 == 1 || count % 2 == 0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Check every σ, not only those with a square root. Used to show that
    /// the check can fail.
    pub skip_root_filter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub sigma: Permutation,
    pub cycles: String,
    pub l: usize,
    pub class_count: usize,
    pub square_root: Option<Permutation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionMismatch {
    pub sigma: Permutation,
    pub brute_force_roots: usize,
    pub cycle_type_predicts_root: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilnorValidation {
    pub n: usize,
    pub periods: Vec<usize>,
    pub root_filter_skipped: bool,
    pub permutations_checked: usize,
    pub with_square_root: usize,
    pub criterion_mismatches: Vec<CriterionMismatch>,
    pub violations: Vec<Counterexample>,
}

impl MilnorValidation {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.criterion_mismatches.is_empty()
    }
}

/// Exhaustive check over S_n: every σ with a square root has an even number
/// of l-periodic classes for each even l in `periods`. Square roots are
/// found by squaring every element of S_n once.
pub fn validate_milnor_on_sn(
    n: usize,
    periods: &[usize],
    opts: ValidationOptions,
) -> Result<MilnorValidation, MilnorError> {
    if n > MAX_SCAN_DEGREE {
        return Err(MilnorError::Budget {
            n,
            max: MAX_SCAN_DEGREE,
        });
    }
    for &l in periods {
        if l == 0 {
            return Err(MilnorError::ZeroPeriod);
        }
        if l % 2 == 1 {
            return Err(MilnorError::OddPeriod(l));
        }
    }
    let group = all_permutations(n);
    let mut roots: HashMap<Permutation, (usize, Permutation)> = HashMap::new();
    for psi in &group {
        roots
            .entry(psi.square())
            .and_modify(|e| e.0 += 1)
            .or_insert((1, psi.clone()));
    }
    let per_sigma: Vec<(bool, Option<CriterionMismatch>, Vec<Counterexample>)> = group
        .par_iter()
        .map(|sigma| {
            let found = roots.get(sigma);
            let count = found.map_or(0, |e| e.0);
            let predicted = has_square_root_by_cycle_type(sigma);
            let mismatch = ((count > 0) != predicted).then(|| CriterionMismatch {
                sigma: sigma.clone(),
                brute_force_roots: count,
                cycle_type_predicts_root: predicted,
            });
            let mut bad = Vec::new();
            if count > 0 || opts.skip_root_filter {
                for &l in periods {
                    let classes = perm_periodic_classes(sigma, l);
                    if classes % 2 == 1 {
                        bad.push(Counterexample {
                            sigma: sigma.clone(),
                            cycles: sigma.to_string(),
                            l,
                            class_count: classes,
                            square_root: found.map(|e| e.1.clone()),
                        });
                    }
                }
            }
            (count > 0, mismatch, bad)
        })
        .collect();
    let mut report = MilnorValidation {
        n,
        periods: periods.to_vec(),
        root_filter_skipped: opts.skip_root_filter,
        permutations_checked: group.len(),
        with_square_root: 0,
        criterion_mismatches: Vec::new(),
        violations: Vec::new(),
    };
    for (has_root, mismatch, bad) in per_sigma {
        report.with_square_root += usize::from(has_root);
        report.criterion_mismatches.extend(mismatch);
        report.violations.extend(bad);
    }
    Ok(report)
}

/// Number of l-periodic classes, or a marker that some class lies in a
/// continuum so the count is not finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassCount {
    Finite(usize),
    Family,
}

impl Serialize for ClassCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ClassCount::Finite(c) => s.serialize_u64(*c as u64),
            ClassCount::Family => s.serialize_str("family"),
        }
    }
}

impl fmt::Display for ClassCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassCount::Finite(c) => write!(f, "{c}"),
            ClassCount::Family => write!(f, "family"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    NoSquareRootCertified,
    Inconclusive,
}

pub const RESOLUTION_CAVEAT: &str = "orbit classes are counted numerically inside the seed region \
at the solver tolerance; the conclusion holds at that resolution and is not a proof";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityReport {
    pub l: usize,
    pub class_count: ClassCount,
    pub parity: Parity,
    pub conclusion: Conclusion,
    pub caveats: Vec<String>,
}

impl ParityReport {
    pub fn certified(&self) -> bool {
        self.conclusion == Conclusion::NoSquareRootCertified
    }
}

/// Parity decision for the l-periodic classes found by a search. A class
/// whose isolation could not be decided is treated like a family.
pub fn parity_conclude<T>(
    l: usize,
    classes: &[OrbitClass<T>],
) -> Result<ParityReport, MilnorError> {
    if l == 0 {
        return Err(MilnorError::ZeroPeriod);
    }
    if l % 2 == 1 {
        return Err(MilnorError::OddPeriod(l));
    }
    if let Some((index, c)) = classes.iter().enumerate().find(|(_, c)| c.period != l) {
        return Err(MilnorError::PeriodMismatch {
            index,
            found: c.period,
            expected: l,
        });
    }
    let mut caveats = vec![RESOLUTION_CAVEAT.to_string()];
    let families = classes
        .iter()
        .filter(|c| c.isolation == Isolation::Family)
        .count();
    let undetermined = classes
        .iter()
        .filter(|c| c.isolation == Isolation::Undetermined)
        .count();
    if families + undetermined > 0 {
        if families > 0 {
            caveats.push(format!(
                "{families} class(es) lie in a continuum of periodic points"
            ));
        }
        if undetermined > 0 {
            caveats.push(format!(
                "{undetermined} class(es) could not be classified as isolated"
            ));
        }
        return Ok(ParityReport {
            l,
            class_count: ClassCount::Family,
            parity: Parity::NotApplicable,
            conclusion: Conclusion::Inconclusive,
            caveats,
        });
    }
    let count = classes.len();
    let odd = count % 2 == 1;
    Ok(ParityReport {
        l,
        class_count: ClassCount::Finite(count),
        parity: if odd { Parity::Odd } else { Parity::Even },
        conclusion: if odd {
            Conclusion::NoSquareRootCertified
        } else {
            Conclusion::Inconclusive
        },
        caveats,
    })
}
