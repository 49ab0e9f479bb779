//! Brute-force ground truth: equal-measurement pairs found through the
//! lift kernel or built from complement-property failures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, Tolerance};
use crate::linalg::{canonical_sign, norm, orthogonal_complement, symmetric_eigen};
use crate::properties::{violating_partitions, weak_pr_verdict, PartitionWitness, SearchBudget, Status};
use crate::reconstruction::{lifted_pairs, unvech, vech, weakly_equal_up_to_sign, weakly_same_phase, LiftedSystem};

/// Agreement threshold for the pair invariants.
pub const PAIR_TOLERANCE: f64 = 1e-8;

/// Relative support threshold for counterexamples found numerically.
pub const ROBUST_SUPPORT: f64 = 1e-6;

/// Two signals with the same measurements and the witness
/// `certificate = vech(x x^T - y y^T)` in the lift kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualMeasurementPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub certificate: Vec<f64>,
}

impl EqualMeasurementPair {
    /// Returns the pair when both invariants hold, `None` otherwise.
    pub fn new(f: &Frame, x: Vec<f64>, y: Vec<f64>) -> Option<Self> {
        let mx = f.measure(&x).ok()?;
        let my = f.measure(&y).ok()?;
        let scale = 1.0 + mx.values().iter().chain(my.values()).fold(0.0_f64, |a, v| a.max(*v));
        if mx.max_diff(&my) > PAIR_TOLERANCE * scale {
            return None;
        }
        let certificate: Vec<f64> = vech(&x).iter().zip(vech(&y)).map(|(a, b)| a - b).collect();
        let pairs = lifted_pairs(f.dim());
        let image = f.vectors().iter().map(|phi| {
            pairs
                .iter()
                .zip(&certificate)
                .map(|(&(j, k), c)| if j == k { phi[j] * phi[j] * c } else { 2.0 * phi[j] * phi[k] * c })
                .sum::<f64>()
        });
        if image.map(f64::abs).any(|v| v > PAIR_TOLERANCE * scale) {
            return None;
        }
        Some(EqualMeasurementPair { x, y, certificate })
    }

    /// Rescaled so the largest entry has magnitude one, each vector with its
    /// first significant entry positive.
    pub fn normalized(&self) -> Self {
        let scale = self.x.iter().chain(&self.y).fold(0.0_f64, |a, v| a.max(v.abs()));
        let mut x: Vec<f64> = self.x.iter().map(|v| v / scale).collect();
        let mut y: Vec<f64> = self.y.iter().map(|v| v / scale).collect();
        canonical_sign(&mut x);
        canonical_sign(&mut y);
        for v in x.iter_mut().chain(y.iter_mut()) {
            if v.abs() < 1e-12 {
                *v = 0.0;
            }
            let r = v.round();
            if (*v - r).abs() < 1e-12 {
                *v = r;
            }
        }
        let certificate = vech(&x).iter().zip(vech(&y)).map(|(a, b)| a - b).collect();
        EqualMeasurementPair { x, y, certificate }
    }

    /// Not weakly the same phase: a weak phase retrieval counterexample.
    pub fn is_counterexample(&self, tol: Tolerance) -> bool {
        !weakly_same_phase(&self.x, &self.y, tol)
    }

    /// As [`Self::is_counterexample`], with entries below [`ROBUST_SUPPORT`]
    /// of the largest entry treated as zero, so that round-off in a
    /// numerically found pair cannot fake a sign disagreement.
    pub fn is_robust_counterexample(&self, tol: Tolerance) -> bool {
        let p = self.normalized();
        let coarse = Tolerance {
            eps_val: tol.eps_val.max(ROBUST_SUPPORT),
            ..tol
        };
        !weakly_same_phase(&p.x, &p.y, coarse)
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

fn gaussian_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if norm(&g) > 1e-12 {
            return unit(g);
        }
    }
}

fn combine(basis: &[Vec<f64>], coef: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (b, c) in basis.iter().zip(coef) {
        for (o, v) in out.iter_mut().zip(b) {
            *o += c * v;
        }
    }
    out
}

/// Unit vectors orthogonal to the `I` side and to the `I^c` side.
fn complement_spaces(f: &Frame, w: &PartitionWitness) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let eps = f.tol().eps_rank;
    let x_space = orthogonal_complement(&f.subset(&w.subset), f.dim(), eps);
    let y_space = orthogonal_complement(&f.subset(&w.complement), f.dim(), eps);
    (x_space, y_space)
}

fn sample_space(basis: &[Vec<f64>], samples: usize, rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = basis.to_vec();
    for _ in 0..samples {
        let c = gaussian_unit(rng, basis.len());
        out.push(unit(combine(basis, &c, dim)));
    }
    out
}

/// Pairs `(x + y, x - y)` with unit `x` orthogonal to the `I` vectors and
/// unit `y` orthogonal to the `I^c` vectors.
///
/// The orthonormal basis vectors of both complements come first, then
/// `samples` seeded random directions from each; every emitted pair is
/// verified.
pub fn cp_failure_pairs(f: &Frame, witness: &PartitionWitness, samples: usize, seed: u64) -> Vec<EqualMeasurementPair> {
    let m = f.dim();
    let (xs, ys) = complement_spaces(f, witness);
    if xs.is_empty() || ys.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = sample_space(&xs, samples, &mut rng, m);
    let ys = sample_space(&ys, samples, &mut rng, m);
    let mut out = Vec::new();
    for x in &xs {
        for y in &ys {
            let sum = x.iter().zip(y).map(|(a, b)| a + b).collect();
            let diff = x.iter().zip(y).map(|(a, b)| a - b).collect();
            if let Some(p) = EqualMeasurementPair::new(f, sum, diff) {
                out.push(p);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSearchReport {
    pub kernel_dim: usize,
    pub pairs_found: usize,
    pub counterexample: Option<EqualMeasurementPair>,
    pub seed: u64,
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= c).all(|p| !c.is_multiple_of(*p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let step = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = step;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= step;
    }
    out
}

/// Deterministic, low-discrepancy directions on the unit sphere of `R^d`:
/// a shifted Halton sequence mapped through Box-Muller.
pub fn sphere_grid(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let dims = 2 * d.div_ceil(2);
    let bases = first_primes(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dims).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let u: Vec<f64> = bases
            .iter()
            .zip(&shift)
            .map(|(&b, s)| (radical_inverse(i, b) + s).fract())
            .collect();
        i += 1;
        let mut g = Vec::with_capacity(dims);
        for pair in u.chunks(2) {
            let r = (-2.0 * pair[0].max(1e-300).ln()).sqrt();
            let t = std::f64::consts::TAU * pair[1];
            g.push(r * t.cos());
            g.push(r * t.sin());
        }
        g.truncate(d);
        if norm(&g) > 1e-12 {
            out.push(unit(g));
        }
    }
    out
}

/// Splits a kernel element into `x x^T - y y^T` when its eigenvalue
/// signature is one positive, one negative, rest zero.
fn split_rank_two(q_lifted: &[f64], m: usize, tol: Tolerance) -> Option<(Vec<f64>, Vec<f64>)> {
    let e = symmetric_eigen(&unvech(q_lifted, m));
    let scale = e.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let zero = tol.eps_val * scale;
    let positive = e.values.iter().filter(|&&v| v > zero).count();
    let negative = e.values.iter().filter(|&&v| v < -zero).count();
    if positive != 1 || negative != 1 {
        return None;
    }
    let top = e.values[m - 1].sqrt();
    let bottom = (-e.values[0]).sqrt();
    Some((
        e.vectors[m - 1].iter().map(|v| top * v).collect(),
        e.vectors[0].iter().map(|v| bottom * v).collect(),
    ))
}

/// Grid points of a kernel with dimension >= 2 that seed a refinement.
pub const REFINE_STARTS: usize = 64;

/// Alternating projections between the kernel and the matrices with one
/// positive and one negative eigenvalue. Returns the limit when the other
/// eigenvalues have vanished.
fn refine(mut q: Vec<f64>, basis: &[Vec<f64>], m: usize) -> Option<Vec<f64>> {
    const ITERATIONS: usize = 300;
    let pairs = crate::reconstruction::lifted_pairs(m);
    for _ in 0..ITERATIONS {
        let e = symmetric_eigen(&unvech(&q, m));
        let (low, high) = (e.values[0], e.values[m - 1]);
        if low >= 0.0 || high <= 0.0 {
            return None;
        }
        let total: f64 = e.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rest: f64 = e.values[1..m - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
        if rest <= 1e-14 * total {
            return Some(q);
        }
        let (u, v) = (&e.vectors[m - 1], &e.vectors[0]);
        let target: Vec<f64> = pairs.iter().map(|&(j, k)| high * u[j] * u[k] + low * v[j] * v[k]).collect();
        let coef: Vec<f64> = basis.iter().map(|b| crate::linalg::dot(b, &target)).collect();
        let next = combine(basis, &coef, target.len());
        let len = norm(&next);
        if len <= 1e-300 {
            return None;
        }
        q = next.into_iter().map(|x| x / len).collect();
    }
    None
}

/// Scans the lift kernel for `x x^T - y y^T` with `x`, `y` not weakly the
/// same phase.
///
/// A one-dimensional kernel is searched exhaustively (both signs of its
/// basis vector). Higher-dimensional kernels are probed at `grid` points
/// of [`sphere_grid`], the first [`REFINE_STARTS`] of which are also
/// refined towards the nearest rank-two kernel element; that scan can miss
/// pairs.
pub fn kernel_pair_search(f: &Frame, grid: usize, seed: u64) -> KernelSearchReport {
    kernel_pair_search_with(&LiftedSystem::build(f), f, grid, seed)
}

pub fn kernel_pair_search_with(ls: &LiftedSystem, f: &Frame, grid: usize, seed: u64) -> KernelSearchReport {
    let m = f.dim();
    let tol = f.tol();
    let d = ls.kernel_dim();
    let mut report = KernelSearchReport {
        kernel_dim: d,
        pairs_found: 0,
        counterexample: None,
        seed,
    };
    if d == 0 {
        return report;
    }
    let basis: Vec<Vec<f64>> = ls
        .kernel_basis()
        .iter()
        .map(|b| {
            let mut b = b.clone();
            canonical_sign(&mut b);
            b
        })
        .collect();
    let coefficients: Vec<Vec<f64>> = if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        sphere_grid(d, grid, seed)
    };
    let p = basis[0].len();
    for (i, c) in coefficients.into_iter().enumerate() {
        let q = combine(&basis, &c, p);
        let split = split_rank_two(&q, m, tol).or_else(|| {
            (d >= 2 && i < REFINE_STARTS)
                .then(|| refine(q, &basis, m))
                .flatten()
                .and_then(|r| split_rank_two(&r, m, tol))
        });
        let Some((x, y)) = split else {
            continue;
        };
        report.pairs_found += 1;
        if weakly_same_phase(&x, &y, tol) {
            continue;
        }
        if let Some(pair) = EqualMeasurementPair::new(f, x, y).filter(|p| p.is_robust_counterexample(tol)) {
            report.counterexample = Some(pair.normalized());
            break;
        }
    }
    report
}

/// Picks `t > 0` so that `x + t y` and `x - t y` agree in sign on one
/// coordinate and disagree on another, if the coordinate ratios allow it.
fn separating_scale(x: &[f64], y: &[f64], eps: f64) -> Option<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    let mut seen = 0;
    for (a, b) in x.iter().zip(y) {
        if a.abs() <= eps && b.abs() <= eps {
            continue;
        }
        seen += 1;
        let ratio = if b.abs() <= eps { f64::INFINITY } else { a.abs() / b.abs() };
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    if seen < 2 || hi <= lo * (1.0 + 1e-6) {
        return None;
    }
    Some(match (lo == 0.0 || lo <= eps, hi.is_infinite()) {
        (true, true) => 1.0,
        (true, false) => hi / 2.0,
        (false, true) => 2.0 * lo,
        (false, false) => (lo * hi).sqrt(),
    })
}

/// Looks for a counterexample `(x + t y, x - t y)` over the violating
/// partitions of `f`, in enumeration order.
pub fn partition_pair_search(f: &Frame, budget: &SearchBudget) -> Option<EqualMeasurementPair> {
    let m = f.dim();
    let tol = f.tol();
    let eps = tol.eps_val.max(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for w in violating_partitions(f, budget.max_partitions) {
        let (xs, ys) = complement_spaces(f, &w);
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let xs = sample_space(&xs, budget.samples, &mut rng, m);
        let ys = sample_space(&ys, budget.samples, &mut rng, m);
        for x in &xs {
            for y in &ys {
                let Some(t) = separating_scale(x, y, eps) else {
                    continue;
                };
                let u = x.iter().zip(y).map(|(a, b)| a + t * b).collect();
                let v = x.iter().zip(y).map(|(a, b)| a - t * b).collect();
                if let Some(pair) = EqualMeasurementPair::new(f, u, v) {
                    if pair.is_robust_counterexample(tol) {
                        return Some(pair.normalized());
                    }
                }
            }
        }
    }
    None
}

/// Equal-measurement pair that is not weakly equal up to sign, built from
/// a complement-property violation.
pub fn phaseless_violation(f: &Frame, witness: &PartitionWitness) -> Option<EqualMeasurementPair> {
    let (xs, ys) = complement_spaces(f, witness);
    let (x, y) = (xs.first()?, ys.first()?);
    let eps = f.tol().eps_val.max(1e-12);
    let shared = (0..f.dim())
        .filter(|&i| x[i].abs() > eps && y[i].abs() > eps)
        .max_by(|&i, &j| x[i].abs().min(y[i].abs()).total_cmp(&x[j].abs().min(y[j].abs())));
    let c = shared.map_or(1.0, |i| 0.5 * (x[i] / y[i]).abs());
    let u = x.iter().zip(y).map(|(a, b)| a + c * b).collect();
    let v = x.iter().zip(y).map(|(a, b)| a - c * b).collect();
    let pair = EqualMeasurementPair::new(f, u, v)?;
    (!weakly_equal_up_to_sign(&pair.x, &pair.y, f.tol())).then_some(pair)
}

/// Frame of `n` vectors in `R^m` with independent standard normal entries.
pub fn random_frame(m: usize, n: usize, rng: &mut impl Rng) -> Frame {
    let vectors = (0..n)
        .map(|_| (0..m).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    Frame::new(vectors).expect("gaussian entries are finite")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Trials with verdict `Disproven`.
    pub disproven: usize,
    /// Trials where the kernel scan produced a counterexample.
    pub kernel_counterexamples: usize,
    /// Trials where a counterexample was built from a partition.
    pub partition_counterexamples: usize,
    /// Trial indices with neither a `Disproven` verdict nor a kernel counterexample.
    pub survivors: Vec<usize>,
}

/// Grid size used by [`minimality_scan`] for the kernel scan.
pub const SCAN_GRID: usize = 1000;

/// Random frames with `n = 2m - 3` vectors; each must be disproven or
/// broken by an explicit kernel pair.
pub fn minimality_scan(m: usize, trials: usize, seed: u64) -> Result<MinimalityReport> {
    if !(2..=4).contains(&m) {
        return Err(Error::Precondition(format!("minimality scan needs 2 <= m <= 4, got {m}")));
    }
    let n = 2 * m - 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = SearchBudget {
        seed,
        grid: SCAN_GRID,
        ..SearchBudget::default()
    };
    let mut report = MinimalityReport {
        m,
        n,
        trials,
        seed,
        disproven: 0,
        kernel_counterexamples: 0,
        partition_counterexamples: 0,
        survivors: Vec::new(),
    };
    for trial in 0..trials {
        let f = random_frame(m, n, &mut rng);
        let disproven = weak_pr_verdict(&f, &budget).status == Status::Disproven;
        let kernel = kernel_pair_search(&f, SCAN_GRID, seed.wrapping_add(trial as u64))
            .counterexample
            .is_some();
        let partition = partition_pair_search(&f, &budget).is_some();
        report.disproven += disproven as usize;
        report.kernel_counterexamples += kernel as usize;
        report.partition_counterexamples += partition as usize;
        if !disproven && !kernel {
            report.survivors.push(trial);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::properties::complement_property;

    fn witness(f: &Frame, subset: Vec<usize>) -> PartitionWitness {
        let complement = crate::combinatorics::complement(&subset, f.len());
        PartitionWitness {
            rank_subset: f.rank_of(&subset),
            rank_complement: f.rank_of(&complement),
            subset,
            complement,
        }
    }

    fn parallel(a: &[f64], b: &[f64]) -> bool {
        let c = crate::linalg::dot(a, b);
        (c.abs() - norm(a) * norm(b)).abs() < 1e-9
    }

    #[test]
    fn r4_remark_direction_is_sampled() {
        let f = fixtures::r4_example();
        let w = complement_property(&f).1.unwrap();
        assert_eq!(w.subset, vec![0, 1, 2]);
        let pairs = cp_failure_pairs(&f, &w, 4, 3);
        assert!(!pairs.is_empty());
        let sum = [2.0, 2.0, 0.0, 2.0];
        let diff = [0.0, 0.0, -2.0, 0.0];
        assert!(pairs.iter().any(|p| parallel(&p.x, &sum) && parallel(&p.y, &diff)));
        assert!(pairs.iter().all(|p| !p.is_counterexample(f.tol())));
    }

    #[test]
    fn cp_pairs_for_r2_frames() {
        let f = fixtures::r2_weak();
        let pairs = cp_failure_pairs(&f, &witness(&f, vec![0]), 0, 1);
        assert_eq!(pairs.len(), 1);
        let p = pairs[0].normalized();
        assert_eq!((p.x.clone(), p.y.clone()), (vec![1.0, 0.0], vec![0.0, 1.0]));

        let g = fixtures::canonical_r2();
        let pairs = cp_failure_pairs(&g, &witness(&g, vec![0]), 0, 1);
        let p = &pairs[0];
        assert!(parallel(&p.x, &[1.0, 1.0]) && parallel(&p.y, &[-1.0, 1.0]));
        assert!(p.is_counterexample(g.tol()));
    }

    #[test]
    fn kernel_search_examples() {
        let r = kernel_pair_search(&fixtures::canonical_r2(), 100, 0);
        assert_eq!(r.kernel_dim, 1);
        let c = r.counterexample.unwrap();
        assert_eq!((c.x, c.y), (vec![1.0, 1.0], vec![1.0, -1.0]));

        let r = kernel_pair_search(&fixtures::r2_weak(), 100, 0);
        assert_eq!(r.kernel_dim, 1);
        assert!(r.counterexample.is_none());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_frame(3, 5, &mut rng);
        let r = kernel_pair_search(&f, 500, 0);
        assert_eq!(r.kernel_dim, 1);
        assert!(r.counterexample.is_none());
    }

    #[test]
    fn report_json_shape() {
        let r = kernel_pair_search(&fixtures::r2_weak(), 10, 9);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.starts_with(r#"{"kernel_dim":1,"pairs_found":"#));
        assert!(s.ends_with(r#""counterexample":null,"seed":9}"#));
    }

    #[test]
    fn sphere_grid_is_deterministic_and_unit() {
        let a = sphere_grid(5, 50, 1);
        assert_eq!(a, sphere_grid(5, 50, 1));
        assert_ne!(a, sphere_grid(5, 50, 2));
        assert!(a.iter().all(|v| v.len() == 5 && (norm(v) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn partition_search_breaks_r4() {
        let f = fixtures::r4_example();
        let pair = partition_pair_search(&f, &SearchBudget::default()).unwrap();
        assert!(pair.is_counterexample(f.tol()));
        assert!(f.measure(&pair.x).unwrap().max_diff(&f.measure(&pair.y).unwrap()) < 1e-9);
    }

    #[test]
    fn phaseless_violation_for_r3() {
        let f = fixtures::r3_example();
        let w = complement_property(&f).1.unwrap();
        let p = phaseless_violation(&f, &w).unwrap();
        assert!(!weakly_equal_up_to_sign(&p.x, &p.y, f.tol()));
    }

    #[test]
    fn small_minimality_scans() {
        let r = minimality_scan(2, 20, 4).unwrap();
        assert_eq!((r.n, r.disproven), (1, 20));
        assert!(r.survivors.is_empty());
        let r = minimality_scan(3, 20, 4).unwrap();
        assert!(r.survivors.is_empty());
        assert!(matches!(minimality_scan(5, 1, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn invalid_pairs_rejected() {
        let f = fixtures::r2_weak();
        assert!(EqualMeasurementPair::new(&f, vec![1.0, 0.0], vec![1.0, 1.0]).is_none());
        assert!(EqualMeasurementPair::new(&f, vec![3.0, 5.0], vec![-3.0, -5.0]).is_some());
    }
}
