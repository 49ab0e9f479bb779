//! Golden assertions over the built-in fixtures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::frame::{Frame, Tolerance};
use crate::linalg::dot;
use crate::oracle::{self, EqualMeasurementPair};
use crate::properties::{
    complement_property, cross_product_recoverable, does_phase_retrieval, does_weak_phaseless, first_dependent_subset,
    is_full_spark, weak_pr_verdict, Evidence, SearchBudget, Status,
};
use crate::reconstruction::{fmt_vector, reconstruct, weakly_same_phase, LiftedSystem, SolutionKind};

pub const SUITE_NAMES: [&str; 5] = [
    "r2-weak",
    "canonical-r2",
    "r3-example",
    "r4-example",
    "norm-retrieval-remark",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyRow {
    pub fixture: String,
    pub check: String,
    pub expected: String,
    pub got: String,
    pub pass: bool,
}

struct Rows<'a> {
    fixture: &'a str,
    rows: Vec<CertifyRow>,
}

impl Rows<'_> {
    fn push(&mut self, check: &str, expected: impl ToString, got: impl ToString, pass: bool) {
        self.rows.push(CertifyRow {
            fixture: self.fixture.to_string(),
            check: check.to_string(),
            expected: expected.to_string(),
            got: got.to_string(),
            pass,
        });
    }

    fn eq<T: ToString + PartialEq>(&mut self, check: &str, expected: T, got: T) {
        let pass = expected == got;
        self.push(check, expected, got, pass);
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Proven => "Proven",
        Status::Disproven => "Disproven",
        Status::Unknown => "Unknown",
    }
}

fn set(ix: &[usize]) -> String {
    let inner: Vec<String> = ix.iter().map(usize::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

fn equal_measurements(f: &Frame, x: &[f64], y: &[f64]) -> (bool, f64) {
    let d = f.measure(x).and_then(|a| Ok(a.max_diff(&f.measure(y)?))).unwrap_or(f64::INFINITY);
    (d <= 1e-10, d)
}

fn r2_weak(tol: Tolerance, r: &mut Rows) {
    let f = fixtures::r2_weak_with(tol);
    let (ok, map) = cross_product_recoverable(&f);
    let got = map
        .map(|m| m.apply(f.measure(&[3.0, 5.0]).expect("dimension 2").values())[0])
        .unwrap_or(f64::NAN);
    r.push("a1a2 read off measure(3, 5)", "15", format!("{got:.12}"), ok && (got - 15.0).abs() <= 1e-10);
    r.eq("complement property", false, complement_property(&f).0);
    r.eq(
        "weak phase retrieval",
        "Proven",
        status_name(weak_pr_verdict(&f, &SearchBudget::default()).status),
    );
}

fn canonical_r2(tol: Tolerance, r: &mut Rows) {
    let f = fixtures::canonical_r2_with(tol);
    r.eq("full spark", true, is_full_spark(&f).unwrap_or(false));
    let v = weak_pr_verdict(&f, &SearchBudget::default());
    let got = match &v.evidence {
        Evidence::CounterexamplePair { x, y } => format!("{} {}", status_name(v.status), pair_text(x, y)),
        _ => status_name(v.status).to_string(),
    };
    r.eq("weak phase retrieval", "Disproven (1, 1) | (1, -1)".to_string(), got);
    let (x, y) = ([1.0, 0.05], [1.0, -0.05]);
    let (same, _) = equal_measurements(&f, &x, &y);
    r.push(
        "small pair (1, 0.05) | (1, -0.05) is a counterexample",
        "equal, not same phase",
        format!(
            "{}, {}",
            if same { "equal" } else { "unequal" },
            if weakly_same_phase(&x, &y, tol) { "same phase" } else { "not same phase" }
        ),
        same && !weakly_same_phase(&x, &y, tol),
    );
}

fn pair_text(x: &[f64], y: &[f64]) -> String {
    format!("{} | {}", fmt_vector(x), fmt_vector(y))
}

fn r3_example(tol: Tolerance, r: &mut Rows) {
    let f = fixtures::r3_example_with(tol);
    let rep = f.classify();
    r.push(
        "equal-norm tight, bounds (4, 4)",
        "true (4, 4)",
        format!(
            "{} ({:.10}, {:.10})",
            rep.is_equal_norm && rep.is_tight,
            rep.lower_bound,
            rep.upper_bound
        ),
        rep.is_equal_norm && rep.is_tight && (rep.lower_bound - 4.0).abs() <= 1e-10 && (rep.upper_bound - 4.0).abs() <= 1e-10,
    );
    let mut scaled = fixtures::R3_EXAMPLE.map(|r| r.to_vec()).to_vec();
    scaled[3].iter_mut().for_each(|v| *v *= 1.05);
    let perturbed = Frame::with_tolerance(scaled, tol).expect("finite");
    r.eq("phi_4 scaled by 1.05 is not equal-norm", false, perturbed.classify().is_equal_norm);
    let ls = LiftedSystem::build(&f);
    let determined = [(0, 1), (0, 2), (1, 2)].iter().filter(|&&(j, k)| ls.is_determined(j, k)).count();
    r.eq("off-diagonal products determined", 3, determined);
    r.eq(
        "weak phase retrieval",
        "Proven",
        status_name(weak_pr_verdict(&f, &SearchBudget::default()).status),
    );
    let (x, y) = ([1.0, 2.0, 0.0], [2.0, 1.0, 0.0]);
    let (same, diff) = equal_measurements(&f, &x, &y);
    r.push("(1, 2, 0) and (2, 1, 0) measure alike", "0", format!("{diff:e}"), same);
    let kind = f.measure(&x).and_then(|y| reconstruct(&f, &y)).map(|s| s.kind);
    r.push(
        "reconstruct measure(1, 2, 0)",
        "WeakSigns",
        format!("{kind:?}"),
        kind == Ok(SolutionKind::WeakSigns),
    );
    r.eq("weak phaseless reconstruction", false, does_weak_phaseless(&f));
}

fn r4_example(tol: Tolerance, r: &mut Rows) {
    let f = fixtures::r4_example_with(tol);
    r.eq("full spark", false, is_full_spark(&f).unwrap_or(true));
    r.eq(
        "first dependent 4-subset",
        "{0,1,3,4}".to_string(),
        first_dependent_subset(&f, 4).map_or("none".into(), |s| set(&s)),
    );
    r.eq(
        "first complement property violation",
        "{0,1,2}".to_string(),
        complement_property(&f).1.map_or("none".into(), |w| set(&w.subset)),
    );
    let ls = LiftedSystem::build(&f);
    let determined: Vec<String> = ls
        .pairs()
        .into_iter()
        .filter(|&(j, k)| j < k && ls.is_determined(j, k))
        .map(|(j, k)| format!("a{}a{}", j + 1, k + 1))
        .collect();
    r.eq(
        "determined off-diagonal products",
        "a1a3 a2a3 a3a4".to_string(),
        determined.join(" "),
    );
    r.eq("phase retrieval", false, does_phase_retrieval(&f));
    let v = weak_pr_verdict(&f, &SearchBudget::default());
    r.eq("weak phase retrieval", "Disproven", status_name(v.status));
    let witness = oracle::partition_pair_search(&f, &SearchBudget::default());
    r.push(
        "explicit counterexample",
        "pair, not same phase",
        witness.as_ref().map_or("none".into(), |p| pair_text(&p.x, &p.y)),
        witness.is_some_and(|p| p.is_counterexample(tol)),
    );
}

fn norm_retrieval_remark(tol: Tolerance, r: &mut Rows) {
    let f = fixtures::r4_example_with(tol);
    let x = [1.0, 1.0, -1.0, 1.0];
    let y = [1.0, 1.0, 1.0, 1.0];
    let ortho = |v: &[f64], ix: &[usize]| ix.iter().all(|&i| dot(v, f.vector(i)) == 0.0);
    r.eq("x orthogonal to phi_1..phi_3", true, ortho(&x, &[0, 1, 2]));
    r.eq("y orthogonal to phi_4..phi_6", true, ortho(&y, &[3, 4, 5]));
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    let (same, d) = equal_measurements(&f, &sum, &diff);
    r.push("measure(x + y) = measure(x - y)", "0", format!("{d:e}"), same && d == 0.0);
    let (ns, nd) = (dot(&sum, &sum), dot(&diff, &diff));
    r.push(
        "norms squared differ",
        "12 vs 4",
        format!("{ns} vs {nd}"),
        ns == 12.0 && nd == 4.0,
    );
    let pair = EqualMeasurementPair::new(&f, sum, diff);
    r.push(
        "pair certificate in lift kernel",
        "valid",
        if pair.is_some() { "valid" } else { "invalid" },
        pair.is_some(),
    );
}

/// Runs the golden suite, optionally only the fixture called `only`.
pub fn certify(tol: Tolerance, only: Option<&str>) -> Result<Vec<CertifyRow>> {
    if let Some(name) = only {
        if !SUITE_NAMES.contains(&name) {
            return Err(Error::Precondition(format!(
                "unknown fixture {name:?}; known: {}",
                SUITE_NAMES.join(", ")
            )));
        }
    }
    let tol = tol.validated()?;
    let mut out = Vec::new();
    for name in SUITE_NAMES {
        if only.is_some_and(|o| o != name) {
            continue;
        }
        let mut rows = Rows {
            fixture: name,
            rows: Vec::new(),
        };
        match name {
            "r2-weak" => r2_weak(tol, &mut rows),
            "canonical-r2" => canonical_r2(tol, &mut rows),
            "r3-example" => r3_example(tol, &mut rows),
            "r4-example" => r4_example(tol, &mut rows),
            _ => norm_retrieval_remark(tol, &mut rows),
        }
        out.extend(rows.rows);
    }
    Ok(out)
}
