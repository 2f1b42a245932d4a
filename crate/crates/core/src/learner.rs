//! Numeric update rules: confidence functions, empirical kernels, local Q
//! estimates, pooled variance, the Bernstein bonus and weighted aggregation.
//!
//! All logarithms are natural.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::protocol::ClientState;

/// Run dimensions and confidence level feeding the `beta` family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceParams {
    pub delta: f64,
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub n_agents: usize,
    pub episodes: u64,
}

impl ConfidenceParams {
    pub fn new(
        delta: f64,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        n_agents: usize,
        episodes: u64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::input("delta", "must lie in (0, 1)"));
        }
        for (field, v) in [("S", n_states), ("A", n_actions), ("H", horizon), ("M", n_agents)] {
            if v == 0 {
                return Err(Error::input(field, "must be positive"));
            }
        }
        if episodes == 0 {
            return Err(Error::input("T", "must be positive"));
        }
        Ok(ConfidenceParams {
            delta,
            n_states,
            n_actions,
            horizon,
            n_agents,
            episodes,
        })
    }

    fn sah(&self) -> f64 {
        (self.n_states * self.n_actions * self.horizon) as f64
    }

    /// `log(6SAH/delta) + log(e(1+n))`.
    pub fn beta_kl(&self, n: u64) -> f64 {
        libm::log(6.0 * self.sah() / self.delta) + libm::log(core::f64::consts::E * (1.0 + n as f64))
    }

    /// `log(6SAH/delta) + log(6e(2n+1))`.
    pub fn beta_c(&self, n: u64) -> f64 {
        libm::log(6.0 * self.sah() / self.delta)
            + libm::log(6.0 * core::f64::consts::E * (2.0 * n as f64 + 1.0))
    }

    /// `log(12SAH/delta)`.
    pub fn beta_star(&self) -> f64 {
        libm::log(12.0 * self.sah() / self.delta)
    }

    /// `log(24e(2Mt+1)/delta)`.
    pub fn beta_var(&self, t: u64) -> f64 {
        libm::log(
            24.0 * core::f64::consts::E * (2.0 * self.n_agents as f64 * t as f64 + 1.0) / self.delta,
        )
    }

    /// `log(48H/delta)`.
    pub fn beta_plain(&self) -> f64 {
        libm::log(48.0 * self.horizon as f64 / self.delta)
    }
}

/// Normalized transition counts, or the uniform row when `n = 0`.
pub fn empirical_kernel_row(counts: &[u64], n: u64) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total != n {
        return Err(Error::Invariant(alloc::format!(
            "transition counts sum to {total}, visit count is {n}"
        )));
    }
    let mut row = vec![0.0; counts.len()];
    fill_kernel_row(counts, n, &mut row);
    Ok(row)
}

#[inline]
fn fill_kernel_row(counts: &[u64], n: u64, row: &mut [f64]) {
    if n == 0 {
        let u = 1.0 / counts.len() as f64;
        row.iter_mut().for_each(|p| *p = u);
    } else {
        let n = n as f64;
        for (p, &c) in row.iter_mut().zip(counts) {
            *p = c as f64 / n;
        }
    }
}

/// One agent's contribution at a single step, indexed by `s * A + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalQReport {
    pub n: Vec<u64>,
    /// Local Q estimate `r_hat + P_hat V`.
    pub q: Vec<f64>,
    /// `P_hat V`.
    pub pv: Vec<f64>,
    /// `P_hat V^2`.
    pub pv2: Vec<f64>,
}

impl LocalQReport {
    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }
}

/// Local Q estimate of one client at step `h` against the broadcast
/// next-step values.
pub fn client_local_q(cs: &ClientState, h: usize, v_next: &[f64]) -> LocalQReport {
    let (ns, na) = (cs.n_states(), cs.n_actions());
    let cells = ns * na;
    let mut report = LocalQReport {
        n: Vec::with_capacity(cells),
        q: Vec::with_capacity(cells),
        pv: Vec::with_capacity(cells),
        pv2: Vec::with_capacity(cells),
    };
    let mut row = vec![0.0; ns];
    for s in 0..ns {
        for a in 0..na {
            let n = cs.visits(h, s, a);
            fill_kernel_row(cs.transitions(h, s, a), n, &mut row);
            let mut pv = 0.0;
            let mut pv2 = 0.0;
            for (p, v) in row.iter().zip(v_next) {
                pv += p * v;
                pv2 += p * (v * v);
            }
            report.n.push(n);
            report.q.push(cs.reward_estimate(h, s, a) + pv);
            report.pv.push(pv);
            report.pv2.push(pv2);
        }
    }
    report
}

fn pooled_weights(reports: &[LocalQReport], cell: usize) -> Option<Vec<f64>> {
    let total: u64 = reports.iter().map(|r| r.n[cell]).sum();
    if total == 0 {
        return None;
    }
    let total = total as f64;
    Some(reports.iter().map(|r| r.n[cell] as f64 / total).collect())
}

/// Pooled second moment minus squared pooled mean, before clamping.
pub fn combined_variance_raw(reports: &[LocalQReport], cell: usize) -> Result<f64> {
    let w = pooled_weights(reports, cell)
        .ok_or_else(|| Error::input("N", "combined variance needs at least one visit"))?;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (wi, r) in w.iter().zip(reports) {
        m1 += wi * r.pv[cell];
        m2 += wi * r.pv2[cell];
    }
    Ok(m2 - m1 * m1)
}

/// [`combined_variance_raw`] clamped below at zero.
pub fn combined_variance(reports: &[LocalQReport], cell: usize) -> Result<f64> {
    combined_variance_raw(reports, cell).map(|v| v.max(0.0))
}

/// Bernstein bonus for a cell with `n` pooled visits and pooled variance `var`.
pub fn bonus(n: u64, var: f64, cp: &ConfidenceParams) -> Result<f64> {
    if !(var >= 0.0) {
        return Err(Error::input("V", "variance must be nonnegative"));
    }
    let h = cp.horizon as f64;
    if n <= 1 {
        return Ok(h);
    }
    let nf = n as f64;
    let b_star = cp.beta_star();
    Ok((28.0 * b_star * h + 11.0 * cp.beta_c(n)) / nf + libm::sqrt(8.0 * b_star / nf * var))
}

/// Result of aggregating one cell, with the intermediate terms kept for
/// diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedCell {
    pub q: f64,
    pub n: u64,
    pub variance_clamped: bool,
}

/// Count-weighted mean of the local estimates plus the bonus, capped at `H`.
/// Cells nobody visited stay at `H`.
pub fn aggregate_cell(reports: &[LocalQReport], cp: &ConfidenceParams, cell: usize) -> Result<AggregatedCell> {
    let h = cp.horizon as f64;
    let n: u64 = reports.iter().map(|r| r.n[cell]).sum();
    let Some(w) = pooled_weights(reports, cell) else {
        return Ok(AggregatedCell {
            q: h,
            n,
            variance_clamped: false,
        });
    };
    let mut mean_q = 0.0;
    for (wi, r) in w.iter().zip(reports) {
        mean_q += wi * r.q[cell];
    }
    let raw = combined_variance_raw(reports, cell)?;
    let b = bonus(n, raw.max(0.0), cp)?;
    Ok(AggregatedCell {
        q: (mean_q + b).min(h),
        n,
        variance_clamped: raw < 0.0,
    })
}

/// Aggregated Q at `(s, a)` from every agent's report for one step.
pub fn aggregate_q(reports: &[LocalQReport], cp: &ConfidenceParams, s: usize, a: usize) -> Result<f64> {
    aggregate_cell(reports, cp, s * cp.n_actions + a).map(|c| c.q)
}

/// Max of a non-empty row and the lowest index attaining it.
pub fn greedy(row: &[f64]) -> (f64, usize) {
    let mut best = row[0];
    let mut arg = 0;
    for (a, &q) in row.iter().enumerate().skip(1) {
        if q > best {
            best = q;
            arg = a;
        }
    }
    (best, arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cp(s: usize, a: usize, h: usize) -> ConfidenceParams {
        ConfidenceParams::new(0.1, s, a, h, 2, 100).unwrap()
    }

    fn report(n: &[u64], pv: &[f64], pv2: &[f64], q: &[f64]) -> LocalQReport {
        LocalQReport {
            n: n.to_vec(),
            q: q.to_vec(),
            pv: pv.to_vec(),
            pv2: pv2.to_vec(),
        }
    }

    #[test]
    fn beta_star_value() {
        // log(12 * 8 * 4 * 10 / 0.1) = log(38400)
        let b = cp(8, 4, 10).beta_star();
        assert!((b - 38400f64.ln()).abs() < 1e-12);
        assert!((b - 10.555_81).abs() < 1e-4);
    }

    #[test]
    fn beta_c_at_zero() {
        let c = cp(3, 2, 4);
        let expected = (6.0 * 24.0 / 0.1f64).ln() + (6.0 * core::f64::consts::E).ln();
        assert!((c.beta_c(0) - expected).abs() < 1e-12);
    }

    #[test]
    fn betas_are_monotone() {
        let tight = ConfidenceParams::new(0.01, 3, 3, 3, 4, 10).unwrap();
        let loose = ConfidenceParams::new(0.2, 3, 3, 3, 4, 10).unwrap();
        for n in 0..50 {
            assert!(loose.beta_c(n + 1) >= loose.beta_c(n));
            assert!(loose.beta_kl(n + 1) >= loose.beta_kl(n));
            assert!(loose.beta_var(n + 1) >= loose.beta_var(n));
            assert!(tight.beta_c(n) >= loose.beta_c(n));
            assert!(tight.beta_kl(n) >= loose.beta_kl(n));
            assert!(tight.beta_var(n) >= loose.beta_var(n));
        }
        assert!(tight.beta_star() >= loose.beta_star());
        assert!(tight.beta_plain() >= loose.beta_plain());
    }

    #[test]
    fn delta_out_of_range_is_rejected() {
        assert!(ConfidenceParams::new(1.5, 1, 1, 1, 1, 1).is_err());
        assert!(ConfidenceParams::new(0.0, 1, 1, 1, 1, 1).is_err());
    }

    #[test]
    fn empirical_rows() {
        assert_eq!(empirical_kernel_row(&[0, 0, 0, 0], 0).unwrap(), vec![0.25; 4]);
        assert_eq!(empirical_kernel_row(&[2, 0, 2], 4).unwrap(), vec![0.5, 0.0, 0.5]);
        assert!(empirical_kernel_row(&[2, 0, 2], 5).is_err());
    }

    #[test]
    fn pooled_variance_hand_example() {
        let reports = [
            report(&[1], &[1.0], &[1.0], &[0.0]),
            report(&[3], &[2.0], &[4.0], &[0.0]),
        ];
        let v = combined_variance(&reports, 0).unwrap();
        assert!((v - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn pooled_variance_single_bernoulli() {
        let h = 5.0;
        // P_hat = (0.5, 0.5) over values {0, H}
        let r = report(&[2], &[0.5 * h], &[0.5 * h * h], &[0.0]);
        assert_eq!(combined_variance(&[r], 0).unwrap(), h * h / 4.0);
    }

    #[test]
    fn pooled_variance_of_identical_agents() {
        let r = report(&[4], &[1.5], &[3.0], &[0.0]);
        let r2 = report(&[7], &[1.5], &[3.0], &[0.0]);
        let v = combined_variance(&[r, r2], 0).unwrap();
        assert!((v - (3.0 - 2.25)).abs() < 1e-12);
    }

    #[test]
    fn pooled_variance_needs_visits() {
        let r = report(&[0], &[1.0], &[1.0], &[0.0]);
        assert!(combined_variance(&[r], 0).is_err());
    }

    #[test]
    fn bonus_small_counts_give_horizon() {
        let c = cp(2, 2, 7);
        assert_eq!(bonus(0, 0.0, &c).unwrap(), 7.0);
        assert_eq!(bonus(1, 3.0, &c).unwrap(), 7.0);
        assert!(bonus(5, -1.0, &c).is_err());
    }

    #[test]
    fn bonus_without_variance() {
        let c = cp(2, 2, 7);
        let expected = (28.0 * c.beta_star() * 7.0 + 11.0 * c.beta_c(2)) / 2.0;
        assert!((bonus(2, 0.0, &c).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn bonus_nonincreasing_in_count() {
        let c = cp(5, 5, 5);
        for var in [0.0, 1.0, 6.25] {
            let mut prev = bonus(2, var, &c).unwrap();
            for n in 3..=10_000 {
                let b = bonus(n, var, &c).unwrap();
                assert!(b <= prev, "n={n} var={var}");
                prev = b;
            }
        }
    }

    #[test]
    fn unvisited_cell_aggregates_to_horizon() {
        let c = cp(1, 1, 4);
        let r = report(&[0], &[0.0], &[0.0], &[0.3]);
        assert_eq!(aggregate_q(&[r.clone(), r], &c, 0, 0).unwrap(), 4.0);
    }

    #[test]
    fn aggregate_is_capped() {
        let c = cp(1, 1, 4);
        let r = report(&[3], &[1.0], &[1.0], &[3.9]);
        assert!(aggregate_q(&[r], &c, 0, 0).unwrap() <= 4.0);
    }

    #[test]
    fn greedy_picks_first_max() {
        assert_eq!(greedy(&[1.0, 3.0, 2.0]), (3.0, 1));
        assert_eq!(greedy(&[2.0, 2.0]), (2.0, 0));
    }

    proptest! {
        #[test]
        fn pooled_variance_is_bounded(
            cells in proptest::collection::vec((1u64..50, 0.0f64..=1.0, 0.0f64..=1.0), 1..6),
            h in 1.0f64..10.0,
        ) {
            // each agent's V_next is two-point {0, h * x} with weight y
            let reports: Vec<_> = cells.iter().map(|&(n, x, y)| {
                let v = h * x;
                report(&[n], &[y * v], &[y * v * v], &[0.0])
            }).collect();
            let var = combined_variance(&reports, 0).unwrap();
            prop_assert!(var >= 0.0);
            prop_assert!(var <= h * h / 4.0 + 1e-9);
        }

        #[test]
        fn aggregation_is_permutation_invariant_and_scale_free(
            cells in proptest::collection::vec((1u64..20, 0.0f64..5.0), 2..6),
            k in 2u64..5,
        ) {
            let c = ConfidenceParams::new(0.1, 1, 1, 5, cells.len(), 100).unwrap();
            let reports: Vec<_> = cells.iter().map(|&(n, q)| report(&[n], &[q * 0.5], &[q], &[q])).collect();
            let mut rev = reports.clone();
            rev.reverse();
            let fwd = aggregate_q(&reports, &c, 0, 0).unwrap();
            let bwd = aggregate_q(&rev, &c, 0, 0).unwrap();
            prop_assert!((fwd - bwd).abs() <= 1e-12);

            let scaled: Vec<_> = reports.iter().map(|r| report(&[r.n[0] * k], &r.pv, &r.pv2, &r.q)).collect();
            let w = pooled_weights(&reports, 0).unwrap();
            let ws = pooled_weights(&scaled, 0).unwrap();
            for (a, b) in w.iter().zip(&ws) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
            prop_assert!(fwd <= 5.0);
        }
    }
}
