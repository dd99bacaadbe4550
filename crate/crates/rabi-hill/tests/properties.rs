//! Property-based checks of the recurrence layer.

use proptest::prelude::*;
use rabi_hill::*;

fn dense_determinant(lo: usize, hi: i64, x: SpectralVariable, p: &ModelParams) -> f64 {
    if hi < lo as i64 {
        return 1.0;
    }
    let n = (hi - lo as i64 + 1) as usize;
    let mut mat = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        let k = lo + i;
        let ck = coefficients(k, x, p);
        mat[i][i] = ck.a;
        if i + 1 < n {
            mat[i][i + 1] = -ck.b;
            mat[i + 1][i] = -coefficients(k + 1, x, p).c;
        }
    }
    // LU with partial pivoting; independent of the three-term recurrence.
    let mut det = 1.0_f64;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| mat[a][col].abs().total_cmp(&mat[b][col].abs()))
            .unwrap();
        if mat[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            mat.swap(piv, col);
            det = -det;
        }
        det *= mat[col][col];
        for row in col + 1..n {
            let f = mat[row][col] / mat[col][col];
            for k in col..n {
                mat[row][k] -= f * mat[col][k];
            }
        }
    }
    det
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The recurrence evaluates the same block determinant as dense LU.
    #[test]
    fn recurrence_matches_lu(
        lo in 0usize..4,
        len in 0i64..12,
        x in -3.0f64..8.0,
        g in -2.0f64..2.0,
        delta in -3.0f64..3.0,
    ) {
        let p = ModelParams::new(g, delta).unwrap();
        let xv = SpectralVariable::new(x);
        let hi = lo as i64 + len - 1;
        let fast = finite_determinant(lo, hi, xv, &p).unwrap();
        let dense = dense_determinant(lo, hi, xv, &p);
        let scale = fast.abs().max(dense.abs()).max(1.0);
        prop_assert!((fast - dense).abs() <= 1e-9 * scale);
    }

    /// Every coefficient, hence every determinant, depends on g and delta
    /// only through their squares.
    #[test]
    fn block_determinant_is_even(
        n in 1i64..8,
        x in -3.0f64..8.0,
        g in 0.0f64..2.0,
        delta in 0.0f64..3.0,
    ) {
        let xv = SpectralVariable::new(x);
        let base = finite_determinant(0, n - 1, xv, &ModelParams::new(g, delta).unwrap()).unwrap();
        for (sg, sd) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            let p = ModelParams::new(sg * g, sd * delta).unwrap();
            let flipped = finite_determinant(0, n - 1, xv, &p).unwrap();
            prop_assert_eq!(flipped, base);
        }
    }

    /// x = E + g^2 round-trips exactly through both conversions.
    #[test]
    fn spectral_variable_round_trip(
        e in -10.0f64..10.0,
        g in -2.0f64..2.0,
        delta in -3.0f64..3.0,
    ) {
        let p = ModelParams::new(g, delta).unwrap();
        let xv = SpectralVariable::from_energy(e, &p);
        prop_assert!((xv.energy(&p) - e).abs() <= 1e-12 * e.abs().max(1.0));
    }

    /// At a located eigenvalue, the minimal solution satisfies every
    /// retained interior row of W q = 0.
    #[test]
    fn minimal_solution_rows_hold(
        g in 0.1f64..1.0,
        delta in 0.1f64..1.5,
    ) {
        let p = ModelParams::new(g, delta).unwrap();
        let opts = SolverOptions::default();
        let roots = scan_regular(&p, 0.1, 2.5, 0.01, &opts).unwrap();
        prop_assume!(!roots.is_empty());
        let xv = SpectralVariable::new(roots[0].x);
        let sol = minimal_solution(xv, &p, 0, 20, &opts).unwrap();
        let q = &sol.coefficients;
        prop_assert!(q.iter().any(|v| v.abs() > 0.5));
        for m in 1..q.len() - 1 {
            let c = coefficients(m, xv, &p);
            let row = -c.c * q[m - 1] + c.a * q[m] - c.b * q[m + 1];
            prop_assert!(row.abs() <= 1e-7, "row {} residual {}", m, row);
        }
    }
}
