//! Fixtures shared by the benchmarks.

use sensornet::{
    sample_coefficients, CoefficientMatrix, DesignProblem, GeneratingFunctionSet, SensorArray,
};

/// Five-site Taylor problem with budgets `(n, 2n, 0, 2n, n)`.
pub fn taylor(n: u32, integer_mode: bool) -> DesignProblem {
    let array = SensorArray::on_line(&[-2.0, -1.0, 0.0, 1.0, 2.0], vec![n, 2 * n, 0, 2 * n, n])
        .expect("valid array");
    let f = sample_coefficients(
        &GeneratingFunctionSet::Taylor {
            length_scale: 1.0,
            count: 5,
        },
        &array,
    )
    .expect("line array");
    DesignProblem::for_array(f, &array, 3, [0, 1, 2, 4], integer_mode).expect("valid problem")
}

/// `j` sites on a line, signal row plus `k - 1` noise rows from a fixed
/// pseudo-random pattern.
pub fn dense(j: usize, k: usize, bound: f64) -> DesignProblem {
    let rows = (0..k)
        .map(|r| {
            (0..j)
                .map(|c| (((r * 31 + c * 17 + 7) % 13) as f64 - 6.0) / 3.0)
                .collect()
        })
        .collect();
    DesignProblem::new(
        CoefficientMatrix::from_rows(rows).expect("rectangular"),
        0,
        1..k,
        vec![bound; j],
        false,
    )
    .expect("valid problem")
}
