//! Operation-count model of divide-and-conquer, used to pick the number of
//! subproblems.

/// Estimated cost of splitting `m` tasks (with `n` workers and `deg` valid
/// workers per task on average) into `g` subproblems. The four terms cover
/// decomposition, leaf solving, merging and the final budget adjustment.
pub fn cost_dnc(g: f64, m: f64, n: f64, deg: f64) -> f64 {
    assert!(g >= 2.0 && m >= 1.0, "cost model needs g >= 2 and m >= 1");
    let lm = m.ln();
    let lg = g.ln();
    let decompose = m * n + (m * g + m) * lm / lg;
    let leaves = 2.0 * (m - 1.0) * deg * deg / (g - 1.0);
    let merge = 2.0 * deg * deg * (m * lm / lg - g * (m - 1.0) / (g - 1.0));
    let budget = 2.0 * g * g * (m * m - 1.0) / (g * g - 1.0);
    decompose + leaves + merge + budget
}

/// Derivative of [`cost_dnc`] with respect to `g`. The leaf and merge terms
/// partially cancel, leaving a single `deg^2` contribution.
pub fn cost_dnc_derivative(g: f64, m: f64, deg: f64) -> f64 {
    let lm = m.ln();
    let lg = g.ln();
    m * lm * (g * lg - g - 1.0 - 2.0 * deg * deg) / (g * lg * lg) - 4.0 * g * (m * m - 1.0) / (g * g - 1.0).powi(2)
}

/// Smallest integer `g >= 2` where the cost stops decreasing, capped at `m`,
/// then the cheaper of it and its left neighbour.
pub fn best_g(m: usize, n: usize, deg: f64) -> usize {
    if m <= 2 {
        return 2;
    }
    let (mf, nf) = (m as f64, n as f64);
    let mut g = m;
    for cand in 2..=m {
        if cost_dnc_derivative(cand as f64, mf, deg) >= 0.0 {
            g = cand;
            break;
        }
    }
    if g > 2 && cost_dnc((g - 1) as f64, mf, nf, deg) <= cost_dnc(g as f64, mf, nf, deg) {
        g - 1
    } else {
        g
    }
}
