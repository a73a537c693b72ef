//! Step observer that re-derives every exact identity of the walk from an independent
//! record of the positions.

use barywalk_core::engine::{StepObserver, WalkState};
use barywalk_core::vector::VectorD;

pub struct IdentityChecker {
    bound: f64,
    x1: VectorD<f64>,
    positions: Vec<VectorD<f64>>,
    /// `sum_{j=2}^{n} Y_j / (j-1)`
    y_sum: VectorD<f64>,
    pub steps: u64,
    pub failures: Vec<String>,
}

impl IdentityChecker {
    pub fn new(x1: VectorD<f64>, bound: f64) -> Self {
        Self {
            bound,
            x1,
            positions: vec![x1],
            y_sum: VectorD::zeros(x1.dim()),
            steps: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }
}

impl StepObserver<f64> for IdentityChecker {
    fn observe(&mut self, before: &WalkState<f64>, delta: &VectorD<f64>, after: &WalkState<f64>) {
        self.steps += 1;
        let n = before.n();
        let m = after.n();
        let nf = n as f64;
        let b = self.bound;
        let x1n = self.x1.norm();

        let dn = delta.norm();
        self.check(dn <= b * (1.0 + 1e-12), || format!("n={n}: |delta| = {dn} > B = {b}"));

        let predicted = (before.y() + *delta).scale(nf / (nf + 1.0));
        let err = after.y().distance(&predicted);
        self.check(err < 1e-10, || format!("n={n}: Y recursion off by {err}"));

        let yn = after.y().norm();
        let cap = 2.0 * x1n + 1.5 * b * m as f64;
        self.check(yn <= cap, || format!("n={m}: |Y| = {yn} above {cap}"));

        let jump = (yn - before.y().norm()).abs();
        let c = 2.5 * b + 2.0 * x1n;
        self.check(jump <= c, || format!("n={n}: |Y| moved {jump} > {c}"));

        self.positions.push(*after.x());
        let k = self.positions.len() as f64;
        let scale = self.positions.iter().map(|p| p.norm()).fold(1.0, f64::max);

        let mut mean = VectorD::zeros(self.x1.dim());
        for p in &self.positions {
            mean += *p;
        }
        let mean = mean.scale(1.0 / k);
        let err = after.g().distance(&mean);
        self.check(err <= 1e-9 * scale, || format!("n={m}: G differs from direct mean by {err}"));

        self.y_sum += after.y().scale(1.0 / nf);
        let rep = self.x1 + self.y_sum;
        let err = after.g().distance(&rep);
        self.check(err <= 1e-9 * scale, || format!("n={m}: G differs from X1 + sum Y_j/(j-1) by {err}"));

        let r2_direct = self.positions.iter().map(|p| (*p - mean).norm_sq()).sum::<f64>() / k;
        let r2 = after.sum_sq() / k - after.g().norm_sq();
        let err = (r2 - r2_direct).abs();
        self.check(r2_direct >= 0.0 && err <= 1e-9 * scale * scale, || {
            format!("n={m}: R^2 identity off by {err}")
        });
    }
}
