//! Published reference values, copied verbatim (including their rounding).
#![allow(dead_code)]

/// Logical worst-case counts: `(n, space, H, CX, C^L X, C^{L+2} X)`.
pub const LOGICAL_COUNTS: [(u64, u64, u64, u64, u64, u64); 5] = [
    (4, 4, 10, 28, 4, 8),
    (8, 5, 20, 75, 8, 16),
    (16, 6, 36, 186, 16, 32),
    (32, 7, 69, 441, 32, 64),
    (64, 8, 134, 1016, 64, 128),
];

/// Decomposed worst-case counts: `(n, T, H, CX)`.
pub const PHYSICAL_COUNTS: [(u64, u64, u64, u64); 5] = [
    (4, 212, 98, 196),
    (8, 616, 291, 555),
    (16, 1616, 772, 1434),
    (32, 4000, 1925, 3513),
    (64, 9536, 4614, 8312),
];

pub struct ResourceRow {
    pub n: u64,
    pub logical: u64,
    pub toffoli: f64,
    pub infidelity: f64,
    pub d_1e3: u32,
    pub surface_1e3: f64,
    pub d_1e4: u32,
    pub surface_1e4: f64,
    pub bivariate_bicycle: f64,
    pub best_known: f64,
    pub lower_bound: f64,
}

const fn row(
    e: u32,
    logical: u64,
    toffoli: f64,
    infidelity: f64,
    d_1e3: u32,
    surface_1e3: f64,
    d_1e4: u32,
    surface_1e4: f64,
    bivariate_bicycle: f64,
    best_known: f64,
    lower_bound: f64,
) -> ResourceRow {
    ResourceRow {
        n: 10u64.pow(e),
        logical,
        toffoli,
        infidelity,
        d_1e3,
        surface_1e3,
        d_1e4,
        surface_1e4,
        bivariate_bicycle,
        best_known,
        lower_bound,
    }
}

/// Fault-tolerant estimates at 7 copies and sketch fidelity 0.9975.
pub const RESOURCES: [ResourceRow; 12] = [
    row(4, 217, 3.22e6, 5.43e-9, 17, 1.42e5, 9, 4.76e4, 2.78e4, 2.09e2, 1.20e1),
    row(5, 259, 3.85e7, 4.55e-10, 19, 2.03e5, 10, 6.42e4, 3.09e4, 6.62e2, 1.20e1),
    row(6, 301, 4.48e8, 3.91e-11, 21, 2.82e5, 11, 8.52e4, 3.39e4, 2.10e3, 1.25e2),
    row(7, 357, 5.32e9, 3.29e-12, 23, 3.94e5, 12, 1.15e5, 3.78e4, 6.63e3, 3.95e2),
    row(8, 399, 5.95e10, 2.94e-13, 26, 5.56e5, 13, 1.47e5, 4.08e4, 2.10e4, 1.25e3),
    row(9, 441, 6.58e11, 2.66e-14, 28, 7.08e5, 14, 1.85e5, 4.39e4, 6.63e4, 3.96e3),
    row(10, 497, 7.42e12, 2.36e-15, 30, 9.11e5, 15, 2.36e5, 4.78e4, 2.10e5, 1.25e4),
    row(11, 539, 8.05e13, 2.17e-16, 32, 1.12e6, 16, 2.88e5, 5.01e4, 6.63e5, 3.96e4),
    row(12, 581, 8.68e14, 2.02e-17, 34, 1.36e6, 17, 3.48e5, 5.31e4, 2.10e6, 1.25e5),
    row(13, 637, 9.52e15, 1.84e-18, 36, 1.67e6, 18, 4.25e5, 5.70e4, 6.63e6, 3.96e5),
    row(14, 679, 1.02e17, 1.72e-19, 38, 1.98e6, 19, 5.03e5, 7.97e4, 2.10e7, 1.25e6),
    row(15, 721, 1.08e18, 1.62e-20, 40, 2.32e6, 20, 5.89e5, 8.41e4, 6.63e7, 3.96e6),
];

/// Agreement to three significant figures, the precision the values were
/// printed with.
pub fn same_3sf(got: f64, printed: f64) -> bool {
    let scale = 10f64.powf(printed.abs().log10().floor() - 2.0);
    (got - printed).abs() <= 0.5 * scale * (1.0 + 1e-9)
}

pub fn rel_err(got: f64, printed: f64) -> f64 {
    (got / printed - 1.0).abs()
}
