//! Lifted reconstruction.
//!
//! The squared measurement `<x, phi>^2` is linear in the entries of the
//! symmetric matrix `x x^T`. Stacking the upper triangle of `x x^T` as
//! `vech(x)` (pairs `(j, k)`, `j <= k`, lexicographic) gives
//! `measure(f, x) = M vech(x)` where row `i` of `M` holds `phi_ij phi_ik`,
//! doubled off the diagonal. Products `a_j a_k` whose selector lies in the
//! row space of `M` are pinned by the data; the rest are free along the
//! kernel. Signs and magnitudes are then assembled from the pinned
//! products.

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, MeasurementVector, Tolerance};
use crate::linalg::{dot, norm, Matrix, Svd};

/// Column index of the pair `(j, k)`, `j <= k`, in an `m`-dimensional lift.
pub fn pair_column(m: usize, j: usize, k: usize) -> usize {
    let (j, k) = if j <= k { (j, k) } else { (k, j) };
    j * m - j * j.saturating_sub(1) / 2 + (k - j)
}

/// Number of lifted coordinates, `m(m+1)/2`.
pub fn lifted_len(m: usize) -> usize {
    m * (m + 1) / 2
}

/// `(j, k)` pairs in column order.
pub fn lifted_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|j| (j..m).map(move |k| (j, k))).collect()
}

/// Upper triangle of `x x^T` in column order.
pub fn vech(x: &[f64]) -> Vec<f64> {
    lifted_pairs(x.len()).into_iter().map(|(j, k)| x[j] * x[k]).collect()
}

/// Symmetric matrix from its upper triangle.
pub fn unvech(v: &[f64], m: usize) -> Matrix {
    let mut q = Matrix::zeros(m, m);
    for (c, (j, k)) in lifted_pairs(m).into_iter().enumerate() {
        q[(j, k)] = v[c];
        q[(k, j)] = v[c];
    }
    q
}

/// The coefficient matrix of the lift together with its singular value
/// decomposition and the row-space membership of every coordinate.
#[derive(Clone, Debug)]
pub struct LiftedSystem {
    dim: usize,
    coeff: Matrix,
    svd: Svd,
    rank: usize,
    determined: Vec<bool>,
    tol: Tolerance,
}

impl LiftedSystem {
    pub fn build(f: &Frame) -> LiftedSystem {
        let m = f.dim();
        let pairs = lifted_pairs(m);
        let rows: Vec<Vec<f64>> = f
            .vectors()
            .iter()
            .map(|phi| {
                pairs
                    .iter()
                    .map(|&(j, k)| if j == k { phi[j] * phi[j] } else { 2.0 * phi[j] * phi[k] })
                    .collect()
            })
            .collect();
        let coeff = Matrix::from_rows(&rows);
        let tol = f.tol();
        let svd = Svd::new(&coeff);
        let rank = svd.rank(tol.eps_rank);
        let threshold = tol.eps_rank * coeff.inf_norm().max(1.0);
        let kernel = &svd.v[rank..];
        let determined = (0..pairs.len())
            .map(|c| kernel.iter().map(|v| v[c] * v[c]).sum::<f64>().sqrt() <= threshold)
            .collect();
        let ls = LiftedSystem {
            dim: m,
            coeff,
            svd,
            rank,
            determined,
            tol,
        };
        ls.self_check(f);
        ls
    }

    fn self_check(&self, f: &Frame) {
        let mut rng = ChaCha8Rng::seed_from_u64(0x11f7);
        for _ in 0..5 {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let direct = f.measure(&x).expect("dimension checked");
            let lifted = self.coeff.mul_vec(&vech(&x));
            for (a, b) in direct.values().iter().zip(&lifted) {
                let scale = direct.values().iter().fold(1.0_f64, |s, v| s.max(v.abs()));
                assert!((a - b).abs() <= 1e-10 * scale, "lifted map disagrees with measure");
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff_matrix(&self) -> &Matrix {
        &self.coeff
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        lifted_pairs(self.dim)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kernel_dim(&self) -> usize {
        self.coeff.cols() - self.rank
    }

    /// Orthonormal basis of the kernel, in lifted coordinates.
    pub fn kernel_basis(&self) -> &[Vec<f64>] {
        &self.svd.v[self.rank..]
    }

    /// Whether the coordinate `x_j x_k` is a linear function of the measurements.
    pub fn is_determined(&self, j: usize, k: usize) -> bool {
        self.determined[pair_column(self.dim, j, k)]
    }

    /// Applies the lifted map to lifted coordinates.
    pub fn apply(&self, lifted: &[f64]) -> Vec<f64> {
        self.coeff.mul_vec(lifted)
    }

    /// Least-squares weights `w` with `w^T M` closest to the selector of
    /// column `c`; exact when the column is determined.
    pub fn recovery_weights(&self, c: usize) -> Vec<f64> {
        let n = self.coeff.rows();
        let mut w = vec![0.0; n];
        for t in 0..self.rank {
            let coef = self.svd.v[t][c] / self.svd.sigma[t];
            for (wi, ui) in w.iter_mut().zip(&self.svd.u[t]) {
                *wi += coef * ui;
            }
        }
        w
    }

    /// Minimum-norm least-squares solution of `M v = y`.
    pub fn min_norm_solution(&self, y: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.coeff.cols()];
        for t in 0..self.rank {
            let coef = dot(&self.svd.u[t], y) / self.svd.sigma[t];
            for (vi, ri) in v.iter_mut().zip(&self.svd.v[t]) {
                *vi += coef * ri;
            }
        }
        v
    }

    pub fn recover_products(&self, y: &MeasurementVector) -> Result<ProductEstimate> {
        if y.len() != self.coeff.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.coeff.rows(),
                found: y.len(),
            });
        }
        let v = self.min_norm_solution(y.values());
        let fitted = self.apply(&v);
        let residual = norm(
            &fitted
                .iter()
                .zip(y.values())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        let threshold = self.tol.eps_residual * (1.0 + y.norm());
        if residual > threshold {
            return Err(Error::InconsistentMeasurements { residual, threshold });
        }
        let m = self.dim;
        let values = unvech(&v, m);
        let mut determined = vec![vec![false; m]; m];
        for (c, (j, k)) in lifted_pairs(m).into_iter().enumerate() {
            determined[j][k] = self.determined[c];
            determined[k][j] = self.determined[c];
        }
        Ok(ProductEstimate {
            values,
            determined,
            residual,
        })
    }
}

pub fn build_lifted(f: &Frame) -> LiftedSystem {
    LiftedSystem::build(f)
}

pub fn recover_products(ls: &LiftedSystem, y: &MeasurementVector) -> Result<ProductEstimate> {
    ls.recover_products(y)
}

/// Recovered products `p_jk ~ a_j a_k` and which of them the data pins down.
#[derive(Clone, Debug)]
pub struct ProductEstimate {
    pub values: Matrix,
    pub determined: Vec<Vec<bool>>,
    pub residual: f64,
}

impl ProductEstimate {
    pub fn dim(&self) -> usize {
        self.values.rows()
    }

    pub fn product(&self, j: usize, k: usize) -> f64 {
        self.values[(j, k)]
    }

    pub fn is_determined(&self, j: usize, k: usize) -> bool {
        self.determined[j][k]
    }

    /// All entries zero, all entries determined.
    pub fn zero(m: usize) -> ProductEstimate {
        ProductEstimate {
            values: Matrix::zeros(m, m),
            determined: vec![vec![true; m]; m],
            residual: 0.0,
        }
    }

    /// Exact products of `x`, with the given determinacy mask.
    pub fn from_signal(x: &[f64], determined: Vec<Vec<bool>>) -> ProductEstimate {
        let m = x.len();
        let mut values = Matrix::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                values[(j, k)] = x[j] * x[k];
            }
        }
        ProductEstimate {
            values,
            determined,
            residual: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionKind {
    /// Signal recovered up to one global sign.
    Full,
    /// Sign pattern recovered per component; some magnitudes or relative
    /// signs are not pinned by the data.
    WeakSigns,
    /// No nonzero product could be pinned.
    Underdetermined,
}

/// Reconstruction output. The solution set is `representative` with the
/// sign of every component flipped independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakSolution {
    pub kind: SolutionKind,
    pub representative: Vec<f64>,
    /// Sign-connected components of the recovered support, 0-based.
    pub components: Vec<Vec<usize>>,
    #[serde(rename = "free_parameters")]
    pub note: String,
}

impl WeakSolution {
    /// Whether `candidate` has the recovered sign pattern, up to one sign per
    /// component, on the coordinates where both are nonzero.
    pub fn sign_compatible(&self, candidate: &[f64], tol: Tolerance) -> bool {
        self.components.iter().all(|comp| {
            let a: Vec<f64> = comp.iter().map(|&i| self.representative[i]).collect();
            let b: Vec<f64> = comp.iter().map(|&i| candidate[i]).collect();
            weakly_same_phase(&a, &b, tol)
        })
    }

    /// `candidate` reproduces `y` and is sign compatible with this solution.
    pub fn admits(&self, f: &Frame, y: &MeasurementVector, candidate: &[f64]) -> bool {
        let tol = f.tol();
        let Ok(got) = f.measure(candidate) else {
            return false;
        };
        got.max_diff(y) <= tol.eps_residual * (1.0 + y.norm()) && self.sign_compatible(candidate, tol)
    }
}

/// Internal assembly state, kept so the free magnitudes can be fitted to
/// the measurements afterwards.
#[derive(Clone, Debug)]
struct Assembly {
    m: usize,
    components: Vec<Vec<usize>>,
    sign: Vec<f64>,
    magnitude: Vec<f64>,
    /// +1/-1 exponent of the free scale along each free component.
    parity: Vec<i32>,
    free: Vec<usize>,
    unresolved: Vec<usize>,
}

impl Assembly {
    fn representative(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.sign[i] * self.magnitude[i]).collect()
    }

    fn kind(&self) -> SolutionKind {
        if self.components.is_empty() {
            SolutionKind::Underdetermined
        } else if self.components.len() == 1 && self.free.is_empty() && self.unresolved.is_empty() {
            SolutionKind::Full
        } else {
            SolutionKind::WeakSigns
        }
    }

    fn note(&self, extra: &[String]) -> String {
        let mut parts = Vec::new();
        match self.kind() {
            SolutionKind::Full => parts.push("unique up to a global sign".to_string()),
            SolutionKind::Underdetermined => {
                parts.push("no nonzero product is pinned by the measurements".to_string())
            }
            SolutionKind::WeakSigns => {
                if self.components.len() > 1 {
                    parts.push(format!(
                        "{} sign components {}, each determined only up to its own sign",
                        self.components.len(),
                        fmt_components(&self.components)
                    ));
                }
                for &c in &self.free {
                    parts.push(format!(
                        "magnitudes of component {} free along a one-parameter family (pinned products only)",
                        fmt_indices(&self.components[c])
                    ));
                }
                if !self.unresolved.is_empty() {
                    parts.push(format!(
                        "coordinates {} not determined",
                        fmt_indices(&self.unresolved)
                    ));
                }
            }
        }
        parts.extend(extra.iter().cloned());
        parts.join("; ")
    }
}

fn fmt_indices(ix: &[usize]) -> String {
    format!(
        "{{{}}}",
        ix.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
    )
}

fn fmt_components(comps: &[Vec<usize>]) -> String {
    comps.iter().map(|c| fmt_indices(c)).collect::<Vec<_>>().join(" ")
}

/// Formats a vector with at most six decimals, trailing zeros trimmed.
pub fn fmt_vector(x: &[f64]) -> String {
    let parts: Vec<String> = x
        .iter()
        .map(|v| {
            let s = format!("{:.6}", v);
            let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
            if s == "-0" {
                "0".to_string()
            } else {
                s
            }
        })
        .collect();
    format!("({})", parts.join(", "))
}

fn assemble_inner(pe: &ProductEstimate, tol: Tolerance) -> Result<Assembly> {
    let m = pe.dim();
    let scale = (0..m)
        .flat_map(|j| (0..m).map(move |k| (j, k)))
        .filter(|&(j, k)| pe.is_determined(j, k))
        .fold(1.0_f64, |s, (j, k)| s.max(pe.product(j, k).abs()));
    let thr = tol.eps_val * scale;
    let edge = |i: usize, j: usize| i != j && pe.is_determined(i, j) && pe.product(i, j).abs() > thr;
    let diag = |i: usize| pe.is_determined(i, i) && pe.product(i, i) > thr;
    let in_support: Vec<bool> = (0..m).map(|i| diag(i) || (0..m).any(|j| edge(i, j))).collect();

    let mut sign = vec![0.0; m];
    let mut parity = vec![0i32; m];
    let mut seen = vec![false; m];
    let mut components = Vec::new();
    let mut bfs_order = Vec::new();
    for root in 0..m {
        if !in_support[root] || seen[root] {
            continue;
        }
        let mut comp = Vec::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        sign[root] = 1.0;
        parity[root] = 1;
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            order.push(i);
            for j in 0..m {
                if edge(i, j) && !seen[j] {
                    seen[j] = true;
                    sign[j] = sign[i] * pe.product(i, j).signum();
                    parity[j] = -parity[i];
                    queue.push_back(j);
                }
            }
        }
        for &i in &comp {
            for &j in &comp {
                if i < j && edge(i, j) && pe.product(i, j).signum() != sign[i] * sign[j] {
                    return Err(Error::InconsistentSigns(i, j));
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
        bfs_order.push(order);
    }

    let mut magnitude: Vec<Option<f64>> = (0..m)
        .map(|i| if diag(i) { Some(pe.product(i, i).sqrt()) } else { None })
        .collect();
    // |a_i|^2 = p_ij p_ik / p_jk on a triangle of pinned products
    for i in 0..m {
        if !in_support[i] || magnitude[i].is_some() {
            continue;
        }
        let mut best: Option<(f64, f64)> = None;
        for j in 0..m {
            for k in j + 1..m {
                if j == i || k == i || !(edge(i, j) && edge(i, k) && edge(j, k)) {
                    continue;
                }
                let pjk = pe.product(j, k);
                if best.is_none_or(|(b, _)| pjk.abs() > b) {
                    let sq = (pe.product(i, j) * pe.product(i, k) / pjk).abs();
                    best = Some((pjk.abs(), sq.sqrt()));
                }
            }
        }
        magnitude[i] = best.map(|(_, v)| v);
    }
    // |a_j| = |p_ij| / |a_i| along pinned edges
    for order in &bfs_order {
        let mut changed = true;
        while changed {
            changed = false;
            for &i in order {
                if let Some(mi) = magnitude[i] {
                    for &j in order {
                        if magnitude[j].is_none() && edge(i, j) {
                            magnitude[j] = Some(pe.product(i, j).abs() / mi);
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    let mut free = Vec::new();
    for (c, order) in bfs_order.iter().enumerate() {
        let root = order[0];
        if magnitude[root].is_some() {
            continue;
        }
        free.push(c);
        // balanced starting point on the free family
        let first = order.iter().copied().find(|&j| edge(root, j));
        let start = first.map_or(1.0, |j| pe.product(root, j).abs().sqrt());
        magnitude[root] = Some(start);
        let mut changed = true;
        while changed {
            changed = false;
            for &i in order {
                if let Some(mi) = magnitude[i] {
                    for &j in order {
                        if magnitude[j].is_none() && edge(i, j) {
                            magnitude[j] = Some(pe.product(i, j).abs() / mi);
                            changed = true;
                        }
                    }
                }
            }
        }
    }

    let supported: Vec<usize> = (0..m).filter(|&i| in_support[i]).collect();
    let unresolved = (0..m)
        .filter(|&i| !in_support[i])
        .filter(|&i| !(pe.is_determined(i, i) || supported.iter().any(|&j| pe.is_determined(i, j))))
        .collect();
    Ok(Assembly {
        m,
        components,
        sign,
        magnitude: magnitude.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
        parity,
        free,
        unresolved,
    })
}

/// Assembles signs and magnitudes from recovered products.
pub fn assemble(pe: &ProductEstimate, tol: Tolerance) -> Result<WeakSolution> {
    let asm = assemble_inner(pe, tol)?;
    Ok(WeakSolution {
        kind: asm.kind(),
        representative: asm.representative(),
        components: asm.components.clone(),
        note: asm.note(&[]),
    })
}

/// End-to-end reconstruction up to (per-component) sign.
///
/// Products pinned by the lift are assembled into sign components. When
/// that leaves the signal open but the frame has the complement property
/// (checked for up to [`DIRECT_FIT_MAX_N`] vectors), the measurements fix
/// the signal up to sign and it is fitted directly.
pub fn reconstruct(f: &Frame, y: &MeasurementVector) -> Result<WeakSolution> {
    reconstruct_with(&LiftedSystem::build(f), f, y)
}

/// As [`reconstruct`], reusing a prebuilt lift of `f`.
pub fn reconstruct_with(ls: &LiftedSystem, f: &Frame, y: &MeasurementVector) -> Result<WeakSolution> {
    let tol = f.tol();
    let pe = ls.recover_products(y)?;
    let mut asm = assemble_inner(&pe, tol)?;
    let mut extra = Vec::new();
    if !asm.free.is_empty() {
        let alternatives = fit_free_scales(&mut asm, f, y);
        if alternatives.len() > 1 {
            extra.push(format!(
                "measurement-consistent representatives: {}",
                alternatives.iter().map(|x| fmt_vector(x)).collect::<Vec<_>>().join(", ")
            ));
        }
    }
    let representative = asm.representative();
    let mut kind = asm.kind();
    if kind == SolutionKind::Full {
        let got = f.measure(&representative)?;
        let mismatch = got.max_diff(y);
        if mismatch > 1e-6 * (1.0 + y.values().iter().fold(0.0_f64, |a, v| a.max(*v))) {
            kind = SolutionKind::WeakSigns;
            extra.push(format!("representative misfits measurements by {mismatch:.3e}"));
        }
    }
    if kind != SolutionKind::Full && f.len() <= DIRECT_FIT_MAX_N && crate::properties::complement_property(f).0 {
        if let Some(mut x) = fit_direct(f, y, &representative) {
            crate::linalg::canonical_sign(&mut x);
            let eps = tol.eps_val * x.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
            let support: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() > eps).collect();
            return Ok(WeakSolution {
                kind: SolutionKind::Full,
                representative: x,
                components: if support.is_empty() { Vec::new() } else { vec![support] },
                note: "unique up to a global sign (complement property); fitted directly to the measurements".into(),
            });
        }
    }
    let note = if kind == asm.kind() { asm.note(&extra) } else { extra.join("; ") };
    Ok(WeakSolution {
        kind,
        representative,
        components: asm.components.clone(),
        note,
    })
}

/// Largest frame for which [`reconstruct`] checks the complement property
/// and falls back to a direct fit.
pub const DIRECT_FIT_MAX_N: usize = 16;

/// Levenberg-Marquardt on `<phi_i, x>^2 = y_i` from a spectral start, the
/// lifted representative and seeded random starts. Returns a signal whose
/// misfit is within the residual tolerance.
fn fit_direct(f: &Frame, y: &MeasurementVector, lifted: &[f64]) -> Option<Vec<f64>> {
    const STARTS: usize = 24;
    let m = f.dim();
    let accept = f.tol().eps_residual * (1.0 + y.norm());
    let total: f64 = y.values().iter().sum();
    if total == 0.0 {
        return Some(vec![0.0; m]);
    }
    let rescale = |v: Vec<f64>| -> Option<Vec<f64>> {
        let energy: f64 = f.vectors().iter().map(|phi| dot(phi, &v).powi(2)).sum();
        (energy > 0.0).then(|| v.iter().map(|x| x * (total / energy).sqrt()).collect())
    };
    let mut spectral = Matrix::zeros(m, m);
    for (phi, yi) in f.vectors().iter().zip(y.values()) {
        for j in 0..m {
            for k in 0..m {
                spectral[(j, k)] += yi * phi[j] * phi[k];
            }
        }
    }
    let e = crate::linalg::symmetric_eigen(&spectral);
    let mut starts = vec![e.vectors[m - 1].clone()];
    if lifted.iter().any(|v| *v != 0.0) {
        starts.push(lifted.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ec7);
    for _ in 0..STARTS {
        starts.push((0..m).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    starts
        .into_iter()
        .filter_map(rescale)
        .map(|x0| levenberg_marquardt(f, y, x0))
        .find(|x| misfit(f, y, x).sqrt() <= accept)
}

fn levenberg_marquardt(f: &Frame, y: &MeasurementVector, mut x: Vec<f64>) -> Vec<f64> {
    let m = x.len();
    let mut value = misfit(f, y, &x);
    let mut mu = 1e-3;
    for _ in 0..200 {
        let mut jtj = Matrix::zeros(m, m);
        let mut jtr = vec![0.0; m];
        for (phi, yi) in f.vectors().iter().zip(y.values()) {
            let ip = dot(phi, &x);
            let r = ip * ip - yi;
            for j in 0..m {
                let gj = 2.0 * ip * phi[j];
                jtr[j] += gj * r;
                for k in 0..m {
                    jtj[(j, k)] += gj * 2.0 * ip * phi[k];
                }
            }
        }
        let scale = (0..m).map(|j| jtj[(j, j)]).fold(0.0_f64, f64::max).max(1e-300);
        let mut improved = false;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for j in 0..m {
                a[(j, j)] += mu * scale;
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            if let Some(step) = crate::linalg::solve(&a, &rhs, 1e-300) {
                let next: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
                let v = misfit(f, y, &next);
                if v < value {
                    x = next;
                    value = v;
                    mu = (mu / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !improved || value <= 1e-30 * (1.0 + y.norm()).powi(2) {
            break;
        }
    }
    x
}

fn scaled(asm: &Assembly, comp: &[usize], base: &[f64], log_scale: f64) -> Vec<f64> {
    let mut x = base.to_vec();
    for &i in comp {
        x[i] = base[i] * (asm.parity[i] as f64 * log_scale).exp();
    }
    x
}

fn misfit(f: &Frame, y: &MeasurementVector, x: &[f64]) -> f64 {
    f.vectors()
        .iter()
        .zip(y.values())
        .map(|(phi, yi)| (dot(phi, x).powi(2) - yi).powi(2))
        .sum()
}

/// Fits the free scale of each free component to the measurements by a
/// log-grid scan followed by Gauss-Newton polishing. Returns the distinct
/// zero-misfit representatives when there is exactly one free component.
fn fit_free_scales(asm: &mut Assembly, f: &Frame, y: &MeasurementVector) -> Vec<Vec<f64>> {
    const GRID: usize = 801;
    const SPAN: f64 = 9.210340371976184; // ln(1e4)
    let accept = (f.tol().eps_residual * (1.0 + y.norm())).powi(2);
    let mut alternatives = Vec::new();
    let passes = if asm.free.len() == 1 { 1 } else { 3 };
    for _ in 0..passes {
        for c in asm.free.clone() {
            let comp = asm.components[c].clone();
            let base = asm.representative();
            let grid: Vec<f64> = (0..GRID)
                .map(|t| -SPAN + 2.0 * SPAN * t as f64 / (GRID - 1) as f64)
                .collect();
            let vals: Vec<f64> = grid.iter().map(|&u| misfit(f, y, &scaled(asm, &comp, &base, u))).collect();
            let mut candidates: Vec<(f64, f64)> = Vec::new();
            for t in 0..GRID {
                let left = if t == 0 { f64::INFINITY } else { vals[t - 1] };
                let right = if t + 1 == GRID { f64::INFINITY } else { vals[t + 1] };
                if vals[t] <= left && vals[t] <= right {
                    let lo = grid[t.saturating_sub(1)];
                    let hi = grid[(t + 1).min(GRID - 1)];
                    let u = polish(asm, &comp, &base, f, y, grid[t], lo, hi);
                    let v = misfit(f, y, &scaled(asm, &comp, &base, u));
                    if !candidates.iter().any(|&(w, _)| (w - u).abs() < 1e-6) {
                        candidates.push((u, v));
                    }
                }
            }
            let best = candidates
                .iter()
                .copied()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(u, _)| u)
                .unwrap_or(0.0);
            if asm.free.len() == 1 {
                alternatives = candidates
                    .iter()
                    .filter(|&&(_, v)| v <= accept)
                    .map(|&(u, _)| scaled(asm, &comp, &base, u))
                    .collect();
            }
            for &i in &comp {
                asm.magnitude[i] *= (asm.parity[i] as f64 * best).exp();
            }
        }
    }
    alternatives
}

#[allow(clippy::too_many_arguments)]
fn polish(
    asm: &Assembly,
    comp: &[usize],
    base: &[f64],
    f: &Frame,
    y: &MeasurementVector,
    start: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let mut u = start;
    let mut best = (u, misfit(f, y, &scaled(asm, comp, base, u)));
    for _ in 0..30 {
        let x = scaled(asm, comp, base, u);
        let dx: Vec<f64> = (0..x.len())
            .map(|i| if comp.contains(&i) { asm.parity[i] as f64 * x[i] } else { 0.0 })
            .collect();
        let (mut jg, mut jj) = (0.0, 0.0);
        for (phi, yi) in f.vectors().iter().zip(y.values()) {
            let ip = dot(phi, &x);
            let g = ip * ip - yi;
            let jac = 2.0 * ip * dot(phi, &dx);
            jg += jac * g;
            jj += jac * jac;
        }
        if jj == 0.0 {
            break;
        }
        let next = (u - jg / jj).clamp(lo, hi);
        let val = misfit(f, y, &scaled(asm, comp, base, next));
        if val < best.1 {
            best = (next, val);
        }
        if (next - u).abs() < 1e-15 {
            break;
        }
        u = next;
    }
    best.0
}

/// Real weakly-same-phase test: on the common support `K`, the signs of
/// `x` and `y` agree everywhere or disagree everywhere. Decided by the
/// product-sign criterion `sgn(a_i a_j) = sgn(b_i b_j)` over `K`.
pub fn weakly_same_phase(x: &[f64], y: &[f64], tol: Tolerance) -> bool {
    assert_eq!(x.len(), y.len(), "vectors must have equal length");
    let eps = tol.eps_val;
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() > eps && y[i].abs() > eps).collect();
    support.iter().enumerate().all(|(a, &i)| {
        support[a + 1..]
            .iter()
            .all(|&j| (x[i] * x[j]).signum() == (y[i] * y[j]).signum())
    })
}

/// Complex weakly-same-phase test: there is a unimodular `theta` with
/// `phase(a_i) = theta phase(b_i)` on the common support. Decided by
/// fixing `theta` on the first common coordinate and checking
/// `phase(a_i a_j) = theta^2 phase(b_i b_j)`.
pub fn weakly_same_phase_complex(x: &[Complex64], y: &[Complex64], tol: Tolerance) -> bool {
    assert_eq!(x.len(), y.len(), "vectors must have equal length");
    let eps = tol.eps_val;
    let phase = |z: Complex64| z / z.norm();
    let support: Vec<usize> = (0..x.len())
        .filter(|&i| x[i].norm() > eps && y[i].norm() > eps)
        .collect();
    let Some(&i0) = support.first() else {
        return true;
    };
    let theta = phase(x[i0]) / phase(y[i0]);
    support[1..].iter().all(|&j| {
        let lhs = phase(x[i0] * x[j]);
        let rhs = theta * theta * phase(y[i0] * y[j]);
        (lhs - rhs).norm() <= eps.max(1e-12)
    })
}

/// Weak phaseless agreement: `x_i = theta y_i` for one `theta = +-1` on the
/// common support.
pub fn weakly_equal_up_to_sign(x: &[f64], y: &[f64], tol: Tolerance) -> bool {
    assert_eq!(x.len(), y.len(), "vectors must have equal length");
    let eps = tol.eps_val;
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() > eps && y[i].abs() > eps).collect();
    [1.0, -1.0].iter().any(|theta| {
        support
            .iter()
            .all(|&i| (x[i] - theta * y[i]).abs() <= 1e-9_f64.max(eps) * (1.0 + x[i].abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    #[test]
    fn pair_column_matches_pair_order() {
        for m in 1..7 {
            for (c, (j, k)) in lifted_pairs(m).into_iter().enumerate() {
                assert_eq!(pair_column(m, j, k), c);
                assert_eq!(pair_column(m, k, j), c);
            }
            assert_eq!(lifted_pairs(m).len(), lifted_len(m));
        }
    }

    #[test]
    fn lift_rows_for_r2() {
        let ls = build_lifted(&fixtures::r2_weak());
        assert_eq!(ls.coeff_matrix().to_rows(), vec![vec![1.0, 2.0, 1.0], vec![1.0, -2.0, 1.0]]);
        assert!(ls.is_determined(0, 1));
        assert!(!ls.is_determined(0, 0));
        assert_eq!(ls.kernel_dim(), 1);
        // 4 a1 a2 = E1 - E2
        let w = ls.recovery_weights(pair_column(2, 0, 1));
        assert_relative_eq!(w[0], 0.25, epsilon = 1e-14);
        assert_relative_eq!(w[1], -0.25, epsilon = 1e-14);
    }

    #[test]
    fn lift_for_r3_cancels_diagonal() {
        let ls = build_lifted(&fixtures::r3_example());
        let m = ls.coeff_matrix();
        // E1 - E2 has no diagonal contribution
        for (c, (j, k)) in lifted_pairs(3).into_iter().enumerate() {
            if j == k {
                assert_eq!(m[(0, c)] - m[(1, c)], 0.0);
            }
        }
        for j in 0..3 {
            for k in j + 1..3 {
                assert!(ls.is_determined(j, k));
            }
            assert!(!ls.is_determined(j, j));
        }
    }

    #[test]
    fn zero_vector_gives_zero_row() {
        let f = Frame::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let ls = build_lifted(&f);
        assert!(ls.coeff_matrix().row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn recover_zero_and_r3() {
        let f = fixtures::r3_example();
        let ls = build_lifted(&f);
        let pe = ls.recover_products(&MeasurementVector::new(vec![0.0; 4]).unwrap()).unwrap();
        assert_eq!(pe.residual, 0.0);
        assert!((0..3).all(|j| (0..3).all(|k| pe.product(j, k) == 0.0)));

        let pe = ls.recover_products(&f.measure(&[1.0, 2.0, 0.0]).unwrap()).unwrap();
        assert_relative_eq!(pe.product(0, 1), 2.0, epsilon = 1e-12);
        assert_relative_eq!(pe.product(0, 2), 0.0, epsilon = 1e-12);
        assert!(pe.is_determined(0, 1) && !pe.is_determined(0, 0));
    }

    #[test]
    fn inconsistent_measurements_rejected() {
        let f = fixtures::r3_example();
        let ls = build_lifted(&f);
        // rows sum to 4 * ||x||^2 in the diagonal and cancel off the diagonal,
        // so E1 + E2 + E3 + E4 constrains nothing; use a 5-row frame instead
        let g = Frame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let lg = build_lifted(&g);
        let err = lg
            .recover_products(&MeasurementVector::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::InconsistentMeasurements { .. }));
        assert!(ls.recover_products(&MeasurementVector::new(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn assemble_zero_is_underdetermined() {
        let sol = assemble(&ProductEstimate::zero(3), Tolerance::default()).unwrap();
        assert_eq!(sol.kind, SolutionKind::Underdetermined);
        assert_eq!(sol.representative, vec![0.0; 3]);
        assert!(sol.components.is_empty());
    }

    #[test]
    fn assemble_uses_triangle_rule() {
        let mut det = vec![vec![true; 4]; 4];
        for (i, row) in det.iter_mut().enumerate() {
            row[i] = false;
        }
        let pe = ProductEstimate::from_signal(&[1.0, 2.0, 3.0, 4.0], det);
        let sol = assemble(&pe, Tolerance::default()).unwrap();
        assert_eq!(sol.kind, SolutionKind::Full);
        for (got, want) in sol.representative.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn assemble_detects_contradictory_signs() {
        let mut pe = ProductEstimate::from_signal(&[1.0, 1.0, 1.0], vec![vec![true; 3]; 3]);
        pe.values[(1, 2)] = -1.0;
        pe.values[(2, 1)] = -1.0;
        assert_eq!(assemble(&pe, Tolerance::default()), Err(Error::InconsistentSigns(1, 2)));
    }

    #[test]
    fn r3_reconstruction_is_weak() {
        let f = fixtures::r3_example();
        let y = f.measure(&[1.0, 2.0, 0.0]).unwrap();
        let sol = reconstruct(&f, &y).unwrap();
        assert_eq!(sol.kind, SolutionKind::WeakSigns);
        assert_eq!(sol.components, vec![vec![0, 1]]);
        assert!(sol.admits(&f, &y, &[1.0, 2.0, 0.0]));
        assert!(sol.admits(&f, &y, &[2.0, 1.0, 0.0]));
        assert!(sol.admits(&f, &y, &[-2.0, -1.0, 0.0]));
        assert!(!sol.admits(&f, &y, &[1.0, -2.0, 0.0]));
        assert!(sol.note.contains("(1, 2, 0)") && sol.note.contains("(2, 1, 0)"), "{}", sol.note);
    }

    #[test]
    fn r2_reconstruction_examples() {
        let f = fixtures::r2_weak();
        let y = f.measure(&[3.0, 5.0]).unwrap();
        let sol = reconstruct(&f, &y).unwrap();
        assert_eq!(sol.kind, SolutionKind::WeakSigns);
        assert!(sol.representative[0] > 0.0 && sol.representative[1] > 0.0);
        assert_relative_eq!(sol.representative[0] * sol.representative[1], 15.0, epsilon = 1e-9);

        let g = fixtures::canonical_r2();
        let y = MeasurementVector::new(vec![1.0, 1.0]).unwrap();
        let sol = reconstruct(&g, &y).unwrap();
        assert_eq!(sol.kind, SolutionKind::WeakSigns);
        assert_eq!(sol.components, vec![vec![0], vec![1]]);
        assert_eq!(sol.representative, vec![1.0, 1.0]);
    }

    #[test]
    fn weakly_same_phase_examples() {
        let tol = Tolerance::default();
        assert!(weakly_same_phase(&[1.0, 2.0, 0.0], &[2.0, 1.0, 0.0], tol));
        assert!(!weakly_same_phase(&[1.0, 1.0], &[1.0, -1.0], tol));
        assert!(weakly_same_phase(&[1.0, -1.0], &[-3.0, 3.0], tol));
        assert!(weakly_same_phase(&[1.0, 0.0], &[0.0, 1.0], tol));
        let i = Complex64::i();
        let x = [i, 2.0 * i, Complex64::new(0.0, 0.0)];
        let y = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(5.0, 0.0)];
        assert!(weakly_same_phase_complex(&x, &y, tol));
        let z = [i, Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(!weakly_same_phase_complex(&z, &y, tol));
    }

    #[test]
    fn weak_equality_examples() {
        let tol = Tolerance::default();
        assert!(weakly_equal_up_to_sign(&[1.0, 2.0, 0.0], &[-1.0, -2.0, 5.0], tol));
        assert!(!weakly_equal_up_to_sign(&[1.0, 2.0, 0.0], &[2.0, 1.0, 0.0], tol));
    }
}
