//! Exhaustive search over integer allocations.

/// Minimises `Σ w_l n_l^{−p}` over integer vectors with `1 ≤ n_l ≤ cap` and
/// `Σ C_l n_l ≤ budget`. Returns the optimum and its objective, or `None` if
/// no vector is feasible.
pub fn best_allocation(weights: &[f64], power: f64, costs: &[f64], budget: f64, cap: usize) -> Option<(Vec<usize>, f64)> {
    fn rec(
        l: usize,
        w: &[f64],
        p: f64,
        c: &[f64],
        left: f64,
        cap: usize,
        cur: &mut Vec<usize>,
        acc: f64,
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if l == w.len() {
            if best.as_ref().is_none_or(|(_, b)| acc < *b) {
                *best = Some((cur.clone(), acc));
            }
            return;
        }
        let rest: f64 = c[l + 1..].iter().sum();
        for n in 1..=cap {
            let spend = c[l] * n as f64;
            if spend + rest > left * (1.0 + 1e-12) {
                break;
            }
            cur.push(n);
            rec(l + 1, w, p, c, left - spend, cap, cur, acc + w[l] * (n as f64).powf(-p), best);
            cur.pop();
        }
    }
    let mut best = None;
    rec(0, weights, power, costs, budget, cap, &mut Vec::new(), 0.0, &mut best);
    best
}
