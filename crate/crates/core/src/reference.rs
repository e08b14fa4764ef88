//! Published results for the five-firm test market with costs of change:
//! demand `π(T) = 5000/T`, cost-of-change weights `β = (0.5, 1, 2, 0, 0)`,
//! three periods of linear cost coefficients, two-decimal values.

/// One published period of a results table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedPeriod {
    pub x: [f64; 5],
    pub profits: [f64; 5],
    /// Parenthesized costs of change; zero where the table prints none.
    pub change_costs: [f64; 5],
}

pub const BETAS: [f64; 5] = [0.5, 1.0, 2.0, 0.0, 0.0];

/// Productions at `t = 0`.
pub const INITIAL_ANCHORS: [f64; 5] = [47.81, 51.14, 51.32, 48.55, 43.48];

/// Linear cost coefficients for `t = 1, 2, 3`.
pub const B_SCHEDULE: [[f64; 5]; 3] = [
    [9.0, 7.0, 3.0, 4.0, 2.0],
    [10.0, 8.0, 5.0, 4.0, 2.0],
    [11.0, 9.0, 8.0, 4.0, 2.0],
];

pub const COURNOT: [PublishedPeriod; 3] = [
    PublishedPeriod {
        x: [49.41, 51.14, 54.24, 48.05, 43.09],
        profits: [377.23, 459.95, 639.95, 503.44, 507.09],
        change_costs: [0.80, 0.0, 5.83, 0.0, 0.0],
    },
    PublishedPeriod {
        x: [49.41, 51.14, 54.24, 48.05, 43.09],
        profits: [328.62, 408.81, 537.30, 503.44, 507.09],
        change_costs: [0.0; 5],
    },
    PublishedPeriod {
        x: [45.71, 51.14, 51.58, 48.76, 43.64],
        profits: [286.75, 379.76, 386.92, 527.22, 527.81],
        change_costs: [1.85, 0.0, 5.31, 0.0, 0.0],
    },
];

/// Firm 1 leads.
pub const STACKELBERG: [PublishedPeriod; 3] = [
    PublishedPeriod {
        x: [54.95, 51.14, 53.59, 47.52, 42.68],
        profits: [380.49, 443.52, 619.80, 486.00, 491.88],
        change_costs: [3.57, 0.0, 4.54, 0.0, 0.0],
    },
    PublishedPeriod {
        x: [53.09, 51.14, 53.59, 47.72, 42.84],
        profits: [329.49, 398.58, 523.65, 492.55, 497.60],
        change_costs: [0.93, 0.0, 0.0, 0.0, 0.0],
    },
    PublishedPeriod {
        x: [53.05, 50.46, 50.77, 48.11, 43.14],
        profits: [289.65, 356.57, 364.33, 505.29, 508.71],
        change_costs: [0.02, 0.68, 5.64, 0.0, 0.0],
    },
];
