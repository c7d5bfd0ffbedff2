//! Table-driven restatement of the composite regressions, kept apart from
//! the library implementation.

/// Rows as (intercept, pesq, llr, wss, ssnr).
pub const COMPOSITE_TABLE: [[f64; 5]; 3] = [[3.093, 0.603, -1.029, -0.009, 0.0], [1.634, 0.478, 0.0, -0.007, 0.063], [1.594, 0.805, -0.512, -0.007, 0.0]];

/// `[csig, cbak, covl]`, each clamped to the MOS range.
pub fn composite_oracle(pesq: f64, llr: f64, wss: f64, ssnr: f64) -> [f64; 3] {
    let x = [1.0, pesq, llr, wss, ssnr];
    COMPOSITE_TABLE.map(|row| row.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>().clamp(1.0, 5.0))
}
