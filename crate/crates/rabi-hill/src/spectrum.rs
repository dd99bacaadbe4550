//! Root finding on the normalized Hill determinant and classification of
//! exceptional (integer-x) eigenvalues.
//!
//! Integer x = n is special: the determinant factorizes through
//! -delta^2 * det[W_0^{n-1}] * F_n, so an exceptional level exists iff
//! (i) delta = 0, (ii) the Judd determinant det[W_0^{n-1}] vanishes (doubly
//! degenerate level), or (iii) the tail limit F_n vanishes while the Judd
//! determinant does not (non-degenerate level). The regular scan therefore
//! never certifies roots at integer x; those are delegated to
//! [`classify_exceptional`].

use crate::recurrence::{
    coefficients, finite_determinant, hill_determinant, minimal_solution, tail_limit_scaled,
    HillEvaluation, ModelParams, RecurrenceError, SolverOptions, SpectralVariable,
    NEGATIVE_INTEGER_GUARD,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

const BRACKET_WIDTH: f64 = 1e-10;
const VECTOR_RESIDUAL_BOUND: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
    #[error("no null vector found: |J_n| = {judd:.3e} is not small at this point")]
    NullSpaceNotFound { judd: f64 },
    #[error("eigenvector residual {residual:.3e} exceeds {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error("eigenvectors are defined only for Judd or tail cases, not {0:?}")]
    NotAnEigenvectorCase(CaseLabel),
    #[error("invalid scan range: {0}")]
    InvalidRange(&'static str),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RootFlags {
    pub near_integer_x: bool,
    pub near_negative_integer_x: bool,
    pub unvalidated: bool,
}

/// One regular-spectrum root of the normalized Hill determinant.
#[derive(Debug, Clone, Serialize)]
pub struct RootRecord {
    pub x: f64,
    pub energy: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub oracle_gap: Option<f64>,
    pub flags: RootFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    AdiabaticDeltaZero,
    JuddDegenerate,
    TailNondegenerate,
    NotExceptional,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::AdiabaticDeltaZero => "AdiabaticDeltaZero",
            CaseLabel::JuddDegenerate => "JuddDegenerate",
            CaseLabel::TailNondegenerate => "TailNondegenerate",
            CaseLabel::NotExceptional => "NotExceptional",
        }
    }
}

/// Exceptional-level report at x = n.
#[derive(Debug, Clone, Serialize)]
pub struct ExceptionalReport {
    pub n: usize,
    pub judd_value: f64,
    pub tail_value: f64,
    pub case_label: CaseLabel,
    pub degenerate: bool,
    pub converged: bool,
}

fn near_negative_integer(x: f64) -> bool {
    x < -0.5 && (x - x.round()).abs() < NEGATIVE_INTEGER_GUARD && x.round() <= -1.0
}

/// Scans D(x) on a uniform grid over [x_lo, x_hi], brackets every sign change
/// and refines each by bisection. Records are returned in ascending x.
pub fn scan_regular(
    params: &ModelParams,
    x_lo: f64,
    x_hi: f64,
    step: f64,
    opts: &SolverOptions,
) -> Result<Vec<RootRecord>, SpectrumError> {
    if !(x_lo < x_hi) {
        return Err(SpectrumError::InvalidRange("x_lo must be < x_hi"));
    }
    if !(step > 0.0) {
        return Err(SpectrumError::InvalidRange("step must be > 0"));
    }
    let n_nodes = ((x_hi - x_lo) / step).ceil() as usize + 1;
    let nodes: Vec<f64> = (0..n_nodes).map(|i| (x_lo + i as f64 * step).min(x_hi)).collect();
    let values: Vec<Option<HillEvaluation>> = nodes
        .par_iter()
        .map(|&x| hill_determinant(SpectralVariable::new(x), params, opts).ok())
        .collect();

    let g2 = params.g * params.g;
    let mut roots = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        // A zero landing exactly on a grid node never produces a sign change
        // in either adjacent interval; record it here and skip it below.
        let Some(ev) = &values[i] else { continue };
        if ev.value != 0.0 {
            continue;
        }
        let mut flags = RootFlags::default();
        flags.unvalidated = !ev.converged;
        flags.near_integer_x = (node - node.round()).abs() < BRACKET_WIDTH;
        if near_negative_integer(*node) {
            flags.near_negative_integer_x = true;
            flags.unvalidated = true;
        }
        roots.push(RootRecord {
            x: *node,
            energy: node - g2,
            bracket: (*node, *node),
            residual: 0.0,
            oracle_gap: None,
            flags,
        });
    }
    for i in 0..n_nodes - 1 {
        let (Some(lo_ev), Some(hi_ev)) = (&values[i], &values[i + 1]) else {
            // A guard-band node sits between these brackets; any sign change
            // across it is dominated by the artificial zero of the
            // normalization and is resolved only via the oracle.
            continue;
        };
        if lo_ev.value == 0.0
            || hi_ev.value == 0.0
            || lo_ev.value.signum() == hi_ev.value.signum()
        {
            continue;
        }
        let mut flags = RootFlags::default();
        if !lo_ev.converged || !hi_ev.converged {
            flags.unvalidated = true;
        }
        let (mut a, mut b) = (nodes[i], nodes[i + 1]);
        if a.ceil() <= b.floor() {
            flags.near_integer_x = true;
        }
        let mut fa = lo_ev.value;
        let mut residual = fa.abs().min(hi_ev.value.abs());
        let mut guarded = false;
        while b - a > BRACKET_WIDTH {
            let mid = 0.5 * (a + b);
            if near_negative_integer(mid) {
                // Bisection is converging onto an artificial zero of the
                // normalization; stop and flag instead of refining into it.
                guarded = true;
                break;
            }
            match hill_determinant(SpectralVariable::new(mid), params, opts) {
                Ok(ev) => {
                    if !ev.converged {
                        flags.unvalidated = true;
                    }
                    residual = ev.value.abs();
                    if ev.value == 0.0 {
                        a = mid;
                        b = mid;
                    } else if ev.value.signum() == fa.signum() {
                        a = mid;
                        fa = ev.value;
                    } else {
                        b = mid;
                    }
                }
                Err(_) => {
                    guarded = true;
                    break;
                }
            }
        }
        let x = 0.5 * (a + b);
        if guarded || near_negative_integer(x) {
            flags.near_negative_integer_x = true;
            flags.unvalidated = true;
        }
        roots.push(RootRecord {
            x,
            energy: x - g2,
            bracket: (nodes[i], nodes[i + 1]),
            residual,
            oracle_gap: None,
            flags,
        });
    }
    // A zero sitting within bisection width of a grid node can be bracketed
    // from both sides; keep the refinement with the smaller residual.
    roots.sort_by(|a, b| a.x.total_cmp(&b.x));
    roots.dedup_by(|b, a| {
        if (b.x - a.x).abs() >= 0.5 * step {
            return false;
        }
        if b.residual < a.residual {
            std::mem::swap(a, b);
        }
        true
    });
    Ok(roots)
}

/// Default zero-tolerances for the exceptional-case decision.
pub const DEFAULT_TOL_JUDD: f64 = 1e-8;
pub const DEFAULT_TOL_TAIL: f64 = 1e-6;

/// Evaluates the Judd determinant J_n = det[W_0^{n-1}] at x = n and the tail
/// limit F_n, then resolves the case in the order (i) delta = 0,
/// (ii) |J_n| small, (iii) |F_n| small.
pub fn classify_exceptional(
    n: usize,
    params: &ModelParams,
    tol_j: f64,
    tol_f: f64,
    opts: &SolverOptions,
) -> Result<ExceptionalReport, SpectrumError> {
    let xn = SpectralVariable::new(n as f64);
    let judd_value = finite_determinant(0, n as i64 - 1, xn, params)?;
    let (tail_eval, tail_scale) = tail_limit_scaled(n, params, opts)?;
    let tail_value = tail_eval.value;

    // J_n is a degree-2n polynomial in delta; scale the zero threshold with it.
    let judd_scale = params.delta.abs().powi(2 * n as i32).max(1.0);
    let (case_label, degenerate) = if params.delta == 0.0 {
        // Adiabatic limit: two displaced oscillators with identical spectra.
        (CaseLabel::AdiabaticDeltaZero, true)
    } else if judd_value.abs() <= tol_j * judd_scale {
        (CaseLabel::JuddDegenerate, true)
    } else if tail_value.abs() <= tol_f * tail_scale.max(f64::MIN_POSITIVE) {
        (CaseLabel::TailNondegenerate, false)
    } else {
        (CaseLabel::NotExceptional, false)
    };
    Ok(ExceptionalReport {
        n,
        judd_value,
        tail_value,
        case_label,
        degenerate,
        converged: tail_eval.converged,
    })
}

/// Structurally-zero eigenvectors at an exceptional point.
///
/// Judd case: returns the null vector of the finite block (zero from index n
/// on) and its degenerate tail partner. Tail case: returns only the tail
/// vector (zero through index n). All vectors are normalized to max |q| = 1.
pub fn exceptional_eigenvectors(
    n: usize,
    params: &ModelParams,
    report: &ExceptionalReport,
    length: usize,
    opts: &SolverOptions,
) -> Result<Vec<Vec<f64>>, SpectrumError> {
    assert!(length > n + 2, "length must extend past index n + 1");
    match report.case_label {
        CaseLabel::JuddDegenerate => {
            let judd = judd_null_vector(n, params, report, length)?;
            let tail = tail_vector(n, params, length, opts)?;
            Ok(vec![judd, tail])
        }
        CaseLabel::TailNondegenerate => Ok(vec![tail_vector(n, params, length, opts)?]),
        other => Err(SpectrumError::NotAnEigenvectorCase(other)),
    }
}

/// Null vector of the n x n block W_0^{n-1} at x = n, padded with zeros.
/// Forward substitution from q_0 = 1 through rows 0..n-2, then the last row
/// is the consistency check (it vanishes iff J_n = 0).
fn judd_null_vector(
    n: usize,
    params: &ModelParams,
    report: &ExceptionalReport,
    length: usize,
) -> Result<Vec<f64>, SpectrumError> {
    assert!(n >= 1, "Judd case requires n >= 1");
    let xn = SpectralVariable::new(n as f64);
    let mut q = vec![0.0_f64; length];

    if params.g == 0.0 {
        // Diagonal block: the null direction is the basis vector at the
        // vanishing diagonal entry.
        let (k_min, a_min) = (0..n)
            .map(|k| (k, coefficients(k, xn, params).a.abs()))
            .min_by(|p, r| p.1.total_cmp(&r.1))
            .expect("n >= 1");
        if a_min > VECTOR_RESIDUAL_BOUND {
            return Err(SpectrumError::NullSpaceNotFound { judd: report.judd_value });
        }
        q[k_min] = 1.0;
        return Ok(q);
    }

    q[0] = 1.0;
    for k in 0..n.saturating_sub(1) {
        let ck = coefficients(k, xn, params);
        // Row k: -c_k q_{k-1} + a_k q_k - b_k q_{k+1} = 0.
        let prev = if k == 0 { 0.0 } else { q[k - 1] };
        q[k + 1] = (ck.a * q[k] - ck.c * prev) / ck.b;
    }
    let mut scratch = q[..n].to_vec();
    crate::spectrum::normalize(&mut scratch);
    q[..n].copy_from_slice(&scratch);

    let last = coefficients(n - 1, xn, params);
    let prev = if n >= 2 { q[n - 2] } else { 0.0 };
    let residual = (last.a * q[n - 1] - last.c * prev).abs();
    if residual > VECTOR_RESIDUAL_BOUND {
        return Err(SpectrumError::NullSpaceNotFound { judd: report.judd_value });
    }
    Ok(q)
}

/// Tail vector: zeros through index n, minimal solution of the tail block
/// from index n + 1 onward.
fn tail_vector(
    n: usize,
    params: &ModelParams,
    length: usize,
    opts: &SolverOptions,
) -> Result<Vec<f64>, SpectrumError> {
    let xn = SpectralVariable::new(n as f64);
    let tail_len = length - (n + 1);
    let sol = minimal_solution(xn, params, n + 1, tail_len, opts).map_err(|e| match e {
        RecurrenceError::ResidualTooLarge { residual, bound } => {
            SpectrumError::ResidualTooLarge { residual, bound }
        }
        other => SpectrumError::Recurrence(other),
    })?;
    let mut q = vec![0.0_f64; length];
    q[n + 1..].copy_from_slice(&sol.coefficients);
    Ok(q)
}

pub(crate) fn normalize(q: &mut [f64]) {
    let max = q.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    if max > 0.0 {
        for v in q.iter_mut() {
            *v /= max;
        }
    }
}

/// Max absolute value of every recurrence row over the retained window,
/// treating entries outside the window as zero. Test and validation helper.
pub fn recurrence_row_residual(q: &[f64], x: SpectralVariable, params: &ModelParams) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..q.len() {
        let ck = coefficients(k, x, params);
        let prev = if k == 0 { 0.0 } else { q[k - 1] };
        let next = if k + 1 < q.len() { q[k + 1] } else { 0.0 };
        // Skip the top row: it involves q_{len} which was truncated away.
        if k + 1 == q.len() {
            break;
        }
        let row = -ck.c * prev + ck.a * q[k] - ck.b * next;
        worst = worst.max(row.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, delta: f64) -> ModelParams {
        ModelParams::new(g, delta).unwrap()
    }

    #[test]
    fn decoupled_scan_finds_shifted_levels() {
        let p = params(0.0, 0.3);
        let roots = scan_regular(&p, -0.5, 3.5, 0.01, &SolverOptions::default()).unwrap();
        let expected = [-0.3, 0.3, 0.7, 1.3, 1.7, 2.3, 2.7, 3.3];
        assert_eq!(roots.len(), expected.len(), "roots: {roots:?}");
        for (r, e) in roots.iter().zip(expected) {
            assert!((r.x - e).abs() < 1e-8, "got {} want {e}", r.x);
            assert!((r.energy - r.x).abs() < 1e-15);
        }
    }

    #[test]
    fn judd_root_is_flagged_near_integer() {
        let p = params(0.25, 0.75f64.sqrt());
        let roots = scan_regular(&p, 0.5, 1.5, 0.01, &SolverOptions::default()).unwrap();
        let at_one: Vec<_> = roots.iter().filter(|r| (r.x - 1.0).abs() < 1e-6).collect();
        assert_eq!(at_one.len(), 1, "roots: {roots:?}");
        assert!(at_one[0].flags.near_integer_x);
    }

    #[test]
    fn energy_shift_is_exact() {
        let p = params(0.7, 0.4);
        let roots = scan_regular(&p, -1.0, 3.0, 0.02, &SolverOptions::default()).unwrap();
        assert!(!roots.is_empty());
        for r in &roots {
            assert_eq!(r.energy, r.x - p.g * p.g);
        }
    }

    #[test]
    fn classify_judd_point() {
        let p = params(0.25, 0.75f64.sqrt());
        let rep = classify_exceptional(
            1,
            &p,
            DEFAULT_TOL_JUDD,
            DEFAULT_TOL_TAIL,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(rep.judd_value.abs() < 1e-12, "J_1 = {}", rep.judd_value);
        assert_eq!(rep.case_label, CaseLabel::JuddDegenerate);
        assert!(rep.degenerate);
    }

    #[test]
    fn classify_n0_on_judd_ellipse_point() {
        // J_0 = det[W_0^{-1}] = 1 never vanishes, so n = 0 cannot be Judd.
        let p = params(0.25, 0.75f64.sqrt());
        let rep = classify_exceptional(
            0,
            &p,
            DEFAULT_TOL_JUDD,
            DEFAULT_TOL_TAIL,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.judd_value, 1.0);
        assert_ne!(rep.case_label, CaseLabel::JuddDegenerate);
    }

    #[test]
    fn classify_tail_line_intercept() {
        let p = params(0.0, 3.0);
        let rep = classify_exceptional(
            2,
            &p,
            DEFAULT_TOL_JUDD,
            DEFAULT_TOL_TAIL,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((rep.judd_value - 40.0).abs() < 1e-10, "J_2 = {}", rep.judd_value);
        assert_eq!(rep.case_label, CaseLabel::TailNondegenerate);
        assert!(!rep.degenerate);
    }

    #[test]
    fn classify_adiabatic() {
        let rep = classify_exceptional(
            0,
            &params(0.5, 0.0),
            DEFAULT_TOL_JUDD,
            DEFAULT_TOL_TAIL,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.case_label, CaseLabel::AdiabaticDeltaZero);
    }

    #[test]
    fn judd_eigenvector_n1_is_e0() {
        let p = params(0.25, 0.75f64.sqrt());
        let opts = SolverOptions::default();
        let rep = classify_exceptional(1, &p, DEFAULT_TOL_JUDD, DEFAULT_TOL_TAIL, &opts).unwrap();
        let vecs = exceptional_eigenvectors(1, &p, &rep, 24, &opts).unwrap();
        assert_eq!(vecs.len(), 2);
        let judd = &vecs[0];
        assert_eq!(judd[0], 1.0);
        for v in &judd[1..] {
            assert_eq!(*v, 0.0);
        }
        // Both vectors satisfy the recurrence rows.
        for v in &vecs {
            let r = recurrence_row_residual(v, SpectralVariable::new(1.0), &p);
            assert!(r <= 1e-8, "residual {r}");
        }
    }

    #[test]
    fn tail_eigenvector_decoupled_n2() {
        // x = 2 = m - delta with delta = 3 picks out m = 5.
        let p = params(0.0, 3.0);
        let opts = SolverOptions::default();
        let rep = classify_exceptional(2, &p, DEFAULT_TOL_JUDD, DEFAULT_TOL_TAIL, &opts).unwrap();
        let vecs = exceptional_eigenvectors(2, &p, &rep, 12, &opts).unwrap();
        assert_eq!(vecs.len(), 1);
        let q = &vecs[0];
        for k in 0..=2 {
            assert_eq!(q[k], 0.0);
        }
        assert_eq!(q[5], 1.0);
        for (k, v) in q.iter().enumerate() {
            if k != 5 {
                assert!(v.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenvectors_rejected_outside_exceptional_cases() {
        let p = params(0.3, 0.4);
        let opts = SolverOptions::default();
        let rep = classify_exceptional(1, &p, DEFAULT_TOL_JUDD, DEFAULT_TOL_TAIL, &opts).unwrap();
        assert_eq!(rep.case_label, CaseLabel::NotExceptional);
        let err = exceptional_eigenvectors(1, &p, &rep, 16, &opts);
        assert!(matches!(err, Err(SpectrumError::NotAnEigenvectorCase(_))));
    }

    #[test]
    fn scan_rejects_bad_range() {
        let p = params(0.1, 0.1);
        assert!(scan_regular(&p, 2.0, 1.0, 0.01, &SolverOptions::default()).is_err());
        assert!(scan_regular(&p, 0.0, 1.0, 0.0, &SolverOptions::default()).is_err());
    }
}
