//! Spark, complement property, cross-product recoverability and the weak
//! phase retrieval verdict.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{complement, Combinations};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{dot, norm, orthogonal_complement};
use crate::oracle;
use crate::reconstruction::{lifted_pairs, pair_column, LiftedSystem};

/// Default cap on `n` for the exponential enumerations.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// A partition `I | I^c` on which neither side spans.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionWitness {
    /// Sorted 0-based indices of `I`; always contains 0.
    pub subset: Vec<usize>,
    pub complement: Vec<usize>,
    pub rank_subset: usize,
    pub rank_complement: usize,
}

/// Size of the smallest linearly dependent subset; `n + 1` when the whole
/// family is independent.
pub fn spark(f: &Frame) -> usize {
    let n = f.len();
    let m = f.dim();
    for k in 1..=n.min(m + 1) {
        let dependent = Combinations::new(n, k)
            .par_bridge()
            .any(|s| f.rank_of(&s) < k);
        if dependent {
            return k;
        }
    }
    n + 1
}

/// Lexicographically first dependent `k`-subset.
pub fn first_dependent_subset(f: &Frame, k: usize) -> Option<Vec<usize>> {
    Combinations::new(f.len(), k).find(|s| f.rank_of(s) < k)
}

/// Every `m`-subset is a basis.
pub fn is_full_spark(f: &Frame) -> Result<bool> {
    let (n, m) = (f.len(), f.dim());
    if n < m {
        return Err(Error::InsufficientVectors { needed: m, found: n });
    }
    Ok(Combinations::new(n, m).par_bridge().all(|s| f.rank_of(&s) == m))
}

/// Depth of the preorder prefix at which enumeration work is split across
/// threads.
const SPLIT_DEPTH: usize = 4;

fn check_partition(f: &Frame, subset: &[usize]) -> Option<PartitionWitness> {
    let (n, m) = (f.len(), f.dim());
    let comp = complement(subset, n);
    // cheap side first: fewer than m vectors never span
    let rank_complement = if comp.len() < m { comp.len().min(f.rank_of(&comp)) } else { f.rank_of(&comp) };
    if rank_complement == m {
        return None;
    }
    let rank_subset = f.rank_of(subset);
    (rank_subset < m).then(|| PartitionWitness {
        subset: subset.to_vec(),
        complement: comp,
        rank_subset,
        rank_complement,
    })
}

/// Visits `node` and its whole subtree in preorder; stops at the first hit.
fn dfs_first(f: &Frame, node: &mut Vec<usize>) -> Option<PartitionWitness> {
    if let Some(w) = check_partition(f, node) {
        return Some(w);
    }
    let last = *node.last().expect("node contains 0");
    for k in last + 1..f.len() {
        node.push(k);
        let hit = dfs_first(f, node);
        node.pop();
        if hit.is_some() {
            return hit;
        }
    }
    None
}

fn preorder_prefixes(n: usize, depth: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, depth: usize, node: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(node.clone());
        if node.len() == depth {
            return;
        }
        let last = *node.last().unwrap();
        for k in last + 1..n {
            node.push(k);
            go(n, depth, node, out);
            node.pop();
        }
    }
    let mut out = Vec::new();
    go(n, depth, &mut vec![0], &mut out);
    out
}

/// Checks the complement property over all `2^(n-1)` unordered partitions
/// (index 0 is always placed in `I`).
///
/// Partitions are visited in lexicographic order of the sorted index list
/// of `I`; the returned witness is the first violation in that order,
/// independent of how the work is scheduled.
pub fn complement_property(f: &Frame) -> (bool, Option<PartitionWitness>) {
    let depth = SPLIT_DEPTH.min(f.len());
    let tasks = preorder_prefixes(f.len(), depth);
    let witness = tasks.par_iter().find_map_first(|prefix| {
        if prefix.len() < depth {
            check_partition(f, prefix)
        } else {
            dfs_first(f, &mut prefix.clone())
        }
    });
    (witness.is_none(), witness)
}

/// All violating partitions in lexicographic order, at most `limit`.
pub fn violating_partitions(f: &Frame, limit: usize) -> Vec<PartitionWitness> {
    fn go(f: &Frame, node: &mut Vec<usize>, limit: usize, out: &mut Vec<PartitionWitness>) {
        if out.len() >= limit {
            return;
        }
        if let Some(w) = check_partition(f, node) {
            out.push(w);
        }
        let last = *node.last().unwrap();
        for k in last + 1..f.len() {
            node.push(k);
            go(f, node, limit, out);
            node.pop();
        }
    }
    let mut out = Vec::new();
    go(f, &mut vec![0], limit, &mut out);
    out
}

/// In `R^m` the complement property is equivalent to phase retrieval.
pub fn does_phase_retrieval(f: &Frame) -> bool {
    complement_property(f).0
}

/// Weak phaseless reconstruction coincides with phaseless reconstruction
/// over the reals, hence with the complement property.
pub fn does_weak_phaseless(f: &Frame) -> bool {
    does_phase_retrieval(f)
}

/// Row-combination weights that read each off-diagonal product `a_j a_k`
/// off the measurements: `sum_i weights[p][i] * y_i = a_j a_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMap {
    pub pairs: Vec<(usize, usize)>,
    pub weights: Vec<Vec<f64>>,
}

impl RecoveryMap {
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| dot(w, y)).collect()
    }
}

/// Whether every off-diagonal product lies in the row space of the lift.
pub fn cross_product_recoverable(f: &Frame) -> (bool, Option<RecoveryMap>) {
    cross_product_recoverable_with(&LiftedSystem::build(f))
}

pub fn cross_product_recoverable_with(ls: &LiftedSystem) -> (bool, Option<RecoveryMap>) {
    let m = ls.dim();
    let pairs: Vec<(usize, usize)> = lifted_pairs(m).into_iter().filter(|(j, k)| j < k).collect();
    if !pairs.iter().all(|&(j, k)| ls.is_determined(j, k)) {
        return (false, None);
    }
    let weights = pairs
        .iter()
        .map(|&(j, k)| ls.recovery_weights(pair_column(m, j, k)))
        .collect();
    (true, Some(RecoveryMap { pairs, weights }))
}

/// Knobs for the counterexample searches inside [`weak_pr_verdict`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub seed: u64,
    /// Sphere points scanned when the lift kernel has dimension >= 2.
    pub grid: usize,
    /// Random directions drawn per complement space in the partition search.
    pub samples: usize,
    /// Violating partitions examined by the partition search.
    pub max_partitions: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            seed: 0,
            grid: 10_000,
            samples: 8,
            max_partitions: 4096,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Proven,
    Disproven,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Evidence {
    /// Fewer than `2m - 2` vectors.
    CardinalityBound { n: usize, required: usize },
    /// Exactly `2m - 2` vectors and `dependent` is an `m`-subset that is not a basis.
    NotFullSparkAtMinimal { dependent: Vec<usize> },
    /// Every `a_j a_k` (j != k) is a linear function of the measurements.
    CrossProductRecovery,
    /// Cross products are recoverable and the frame contains the standard
    /// basis, so magnitudes are read off directly.
    StandardBasisShortcut,
    /// The frame has the complement property, which implies phase retrieval.
    ComplementProperty,
    /// Equal measurements, not weakly the same phase.
    CounterexamplePair { x: Vec<f64>, y: Vec<f64> },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub evidence: Evidence,
}

impl Verdict {
    fn new(status: Status, evidence: Evidence) -> Self {
        Verdict { status, evidence }
    }
}

/// Decides weak phase retrieval where it can.
///
/// The cascade, first hit wins:
/// 1. `n < 2m - 2`: disproven by cardinality.
/// 2. `n = 2m - 2` and not full spark: disproven.
/// 3. An explicit equal-measurement pair that is not weakly same-phase:
///    disproven. Searched exhaustively on a one-dimensional lift kernel,
///    then over violating partitions, then on a kernel sphere grid.
/// 4. Cross products recoverable: proven.
/// 5. Complement property: proven.
/// 6. Unknown.
pub fn weak_pr_verdict(f: &Frame, budget: &SearchBudget) -> Verdict {
    let (n, m) = (f.len(), f.dim());
    let required = (2 * m).saturating_sub(2);
    if n < required {
        return Verdict::new(Status::Disproven, Evidence::CardinalityBound { n, required });
    }
    if n == required && m >= 2 {
        if let Some(dependent) = first_dependent_subset(f, m) {
            return Verdict::new(Status::Disproven, Evidence::NotFullSparkAtMinimal { dependent });
        }
    }
    let ls = LiftedSystem::build(f);
    let counterexample = (ls.kernel_dim() == 1)
        .then(|| oracle::kernel_pair_search_with(&ls, f, budget.grid, budget.seed).counterexample)
        .flatten()
        .or_else(|| oracle::partition_pair_search(f, budget))
        .or_else(|| {
            (ls.kernel_dim() >= 2)
                .then(|| oracle::kernel_pair_search_with(&ls, f, budget.grid, budget.seed).counterexample)
                .flatten()
        });
    if let Some(pair) = counterexample {
        let p = pair.normalized();
        return Verdict::new(Status::Disproven, Evidence::CounterexamplePair { x: p.x, y: p.y });
    }
    if cross_product_recoverable_with(&ls).0 {
        let evidence = if f.contains_standard_basis() {
            Evidence::StandardBasisShortcut
        } else {
            Evidence::CrossProductRecovery
        };
        return Verdict::new(Status::Proven, evidence);
    }
    if does_phase_retrieval(f) {
        return Verdict::new(Status::Proven, Evidence::ComplementProperty);
    }
    Verdict::new(Status::Unknown, Evidence::None)
}

/// Draws a unit vector off every hyperplane spanned by `m - 1` frame
/// vectors, so the extended family is full spark with `2m - 1` vectors.
pub fn extend_to_full_spark(f: &Frame, seed: u64) -> Result<Vec<f64>> {
    const MAX_DRAWS: usize = 10_000;
    let (n, m) = (f.len(), f.dim());
    if m < 2 || n != 2 * m - 2 {
        return Err(Error::Precondition(format!(
            "extension needs exactly 2m - 2 = {} vectors, frame has {n}",
            (2 * m).saturating_sub(2)
        )));
    }
    if !is_full_spark(f)? {
        return Err(Error::Precondition("frame is not full spark".into()));
    }
    let eps = f.tol();
    let normals: Vec<Vec<f64>> = Combinations::new(n, m - 1)
        .map(|s| {
            let basis = orthogonal_complement(&f.subset(&s), m, eps.eps_rank);
            basis.into_iter().next().expect("m - 1 independent vectors leave a normal")
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let len = norm(&g);
        if len == 0.0 {
            continue;
        }
        let psi: Vec<f64> = g.iter().map(|v| v / len).collect();
        if normals.iter().all(|nv| dot(nv, &psi).abs() > eps.eps_val) {
            return Ok(psi);
        }
    }
    Err(Error::BudgetExhausted(MAX_DRAWS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn frame(v: &[&[f64]]) -> Frame {
        Frame::new(v.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn spark_examples() {
        assert_eq!(spark(&fixtures::canonical_r2()), 3);
        assert_eq!(spark(&fixtures::r3_example()), 4);
        assert_eq!(spark(&frame(&[&[1.0, 0.0], &[2.0, 0.0], &[0.0, 1.0]])), 2);
        assert_eq!(spark(&frame(&[&[0.0, 0.0], &[0.0, 1.0]])), 1);
    }

    #[test]
    fn full_spark_examples() {
        assert!(is_full_spark(&fixtures::canonical_r2()).unwrap());
        assert!(is_full_spark(&fixtures::r3_example()).unwrap());
        assert!(!is_full_spark(&frame(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])).unwrap());
        assert_eq!(
            is_full_spark(&frame(&[&[1.0, 0.0]])),
            Err(Error::InsufficientVectors { needed: 2, found: 1 })
        );
    }

    #[test]
    fn r4_example_is_not_full_spark() {
        let f = fixtures::r4_example();
        assert!(!is_full_spark(&f).unwrap());
        assert_eq!(first_dependent_subset(&f, 4), Some(vec![0, 1, 3, 4]));
    }

    #[test]
    fn complement_property_examples() {
        let (ok, w) = complement_property(&fixtures::r2_weak());
        assert!(!ok);
        assert_eq!(w.unwrap().subset, vec![0]);
        let (ok, w) = complement_property(&fixtures::r4_example());
        assert!(!ok);
        let w = w.unwrap();
        assert_eq!(w.subset, vec![0, 1, 2]);
        assert_eq!(w.complement, vec![3, 4, 5]);
        assert!(w.rank_subset < 4 && w.rank_complement < 4);
    }

    #[test]
    fn r3_fails_at_first_pair() {
        let (ok, w) = complement_property(&fixtures::r3_example());
        assert!(!ok);
        assert_eq!(w.unwrap().subset, vec![0, 1]);
        assert!(!does_phase_retrieval(&fixtures::r3_example()));
        assert!(!does_weak_phaseless(&fixtures::r3_example()));
        assert!(!does_phase_retrieval(&fixtures::canonical_r2()));
    }

    #[test]
    fn witness_matches_sequential_scan() {
        // the parallel scan must agree with a plain preorder walk
        let f = fixtures::r4_example();
        let first = violating_partitions(&f, 1);
        assert_eq!(complement_property(&f).1.as_ref(), first.first());
        let big = Frame::new((0..9).map(|i| vec![1.0, i as f64, (i * i) as f64 % 5.0]).collect()).unwrap();
        assert_eq!(complement_property(&big).1.as_ref(), violating_partitions(&big, 1).first());
    }

    #[test]
    fn full_spark_2m_minus_1_has_cp() {
        let f = frame(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 1.0, 1.0], &[1.0, 2.0, 4.0]]);
        assert!(is_full_spark(&f).unwrap());
        assert_eq!(complement_property(&f), (true, None));
    }

    #[test]
    fn cross_product_examples() {
        let (ok, map) = cross_product_recoverable(&fixtures::r2_weak());
        assert!(ok);
        let map = map.unwrap();
        assert_eq!(map.pairs, vec![(0, 1)]);
        let y = fixtures::r2_weak().measure(&[3.0, 5.0]).unwrap();
        assert!((map.apply(y.values())[0] - 15.0).abs() < 1e-12);
        assert_eq!(cross_product_recoverable(&fixtures::canonical_r2()), (false, None));
        assert!(cross_product_recoverable(&fixtures::r3_example()).0);
        // only a1a3, a2a3, a3a4 are pinned for the six-vector frame
        assert!(!cross_product_recoverable(&fixtures::r4_example()).0);
    }

    #[test]
    fn verdict_examples() {
        let b = SearchBudget::default();
        assert_eq!(
            weak_pr_verdict(&fixtures::r2_weak(), &b),
            Verdict::new(Status::Proven, Evidence::CrossProductRecovery)
        );
        assert_eq!(
            weak_pr_verdict(&fixtures::canonical_r2(), &b),
            Verdict::new(
                Status::Disproven,
                Evidence::CounterexamplePair {
                    x: vec![1.0, 1.0],
                    y: vec![1.0, -1.0]
                }
            )
        );
        let three = frame(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 1.0, 1.0]]);
        assert_eq!(
            weak_pr_verdict(&three, &b),
            Verdict::new(Status::Disproven, Evidence::CardinalityBound { n: 3, required: 4 })
        );
        assert_eq!(weak_pr_verdict(&fixtures::r3_example(), &b).status, Status::Proven);
        assert!(matches!(
            weak_pr_verdict(&fixtures::r4_example(), &b).evidence,
            Evidence::NotFullSparkAtMinimal { .. }
        ));
    }

    #[test]
    fn verdict_json_shape() {
        let v = Verdict::new(
            Status::Disproven,
            Evidence::CounterexamplePair {
                x: vec![1.0, 1.0],
                y: vec![1.0, -1.0],
            },
        );
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(
            s,
            r#"{"status":"Disproven","evidence":{"kind":"CounterexamplePair","x":[1.0,1.0],"y":[1.0,-1.0]}}"#
        );
        assert_eq!(serde_json::from_str::<Verdict>(&s).unwrap(), v);
    }

    #[test]
    fn extension_examples() {
        let f = fixtures::r2_weak();
        let psi = extend_to_full_spark(&f, 7).unwrap();
        assert!(dot(&psi, &[1.0, -1.0]).abs() > 1e-9 && dot(&psi, &[1.0, 1.0]).abs() > 1e-9);
        assert_eq!(psi, extend_to_full_spark(&f, 7).unwrap());

        let g = fixtures::r3_example();
        let psi = extend_to_full_spark(&g, 1).unwrap();
        let mut v = g.vectors().to_vec();
        v.push(psi);
        assert!(does_phase_retrieval(&Frame::new(v).unwrap()));

        assert!(matches!(
            extend_to_full_spark(&fixtures::r4_example(), 1),
            Err(Error::Precondition(_))
        ));
        assert!(extend_to_full_spark(&fixtures::canonical_r2().retolerance(Default::default()).unwrap(), 1).is_ok());
    }
}
