//! Feasible sets, Euclidean projection and the closed-form FTRL steps.
//!
//! Both FTRL objectives used by the algorithms have an isotropic quadratic
//! regularizer, so their constrained minimizer is the Euclidean projection
//! of the unconstrained minimizer. Everything here is a pure function.

use crate::error::{Error, Result};
use crate::vector::DecisionVector;

/// Slack used when checking set membership.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Stall tolerance of the black-box comparator search.
pub const APPROX_COMPARATOR_TOL: f64 = 1e-6;

/// Convex feasible region containing the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// Axis-aligned box `lo <= x <= hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Origin-centered Euclidean ball.
    Ball { dim: usize, radius: f64 },
}

impl FeasibleSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::config(
                "set",
                "box bounds must be non-empty and equally long",
            ));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite()) {
                return Err(Error::config("set", "box bounds must be finite"));
            }
            if !(*l <= 0.0 && 0.0 <= *h) {
                return Err(Error::config("set", "box must contain the origin"));
            }
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    /// Centered cube `[-D/(2 sqrt d), D/(2 sqrt d)]^d` whose diameter is `D`.
    pub fn centered_cube_with_diameter(dim: usize, diameter: f64) -> Result<Self> {
        let half = diameter / (2.0 * (dim as f64).sqrt());
        Self::cube(dim, -half, half)
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("d", "dimension must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::config("set", "ball radius must be positive"));
        }
        Ok(FeasibleSet::Ball { dim, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lo, .. } => lo.len(),
            FeasibleSet::Ball { dim, .. } => *dim,
        }
    }

    /// `sup ||x - y||` over the set.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (h - l) * (h - l))
                .sum::<f64>()
                .sqrt(),
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            FeasibleSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            FeasibleSet::Ball { radius, .. } => {
                x.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius + tol
            }
        }
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual,
            });
        }
        Ok(())
    }

    /// Euclidean projection in place.
    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            FeasibleSet::Box { lo, hi } => {
                for (v, (l, h)) in x.iter_mut().zip(lo.iter().zip(hi)) {
                    *v = v.clamp(*l, *h);
                }
            }
            FeasibleSet::Ball { radius, .. } => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > *radius {
                    let s = radius / norm;
                    x.iter_mut().for_each(|v| *v *= s);
                }
            }
        }
    }
}

/// Euclidean-closest point of `set` to `x`.
pub fn project(set: &FeasibleSet, x: &[f64]) -> Result<DecisionVector> {
    set.check_dim(x.len())?;
    let mut out = DecisionVector::from(x);
    set.project_in_place(&mut out);
    Ok(out)
}

/// `argmin_{w in W} <u, w> + ||w||^2 / eta`, computed as `project(-(eta/2) u)`.
pub fn ftrl_linear_step(set: &FeasibleSet, u_cum: &[f64], eta: f64) -> Result<DecisionVector> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::config("eta", "learning rate must be positive"));
    }
    set.check_dim(u_cum.len())?;
    let mut out: DecisionVector = u_cum.iter().map(|u| -0.5 * eta * u).collect();
    set.project_in_place(&mut out);
    Ok(out)
}

/// `argmin_{w in W} <s, w> + (mu/2) sum_k a_k ||w - anchor_k||^2`.
///
/// Takes the anchors in aggregated form: `weighted_anchor_sum = sum_k a_k anchor_k`
/// and `weight_total = sum_k a_k`.
pub fn ftrl_strongly_convex_step(
    set: &FeasibleSet,
    s_cum: &[f64],
    weighted_anchor_sum: &[f64],
    mu: f64,
    weight_total: f64,
) -> Result<DecisionVector> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::config("mu", "strong convexity must be positive"));
    }
    if !(weight_total > 0.0 && weight_total.is_finite()) {
        return Err(Error::config(
            "weight_total",
            "anchor weights must sum to a positive value",
        ));
    }
    set.check_dim(s_cum.len())?;
    set.check_dim(weighted_anchor_sum.len())?;
    let denom = mu * weight_total;
    let mut out: DecisionVector = s_cum
        .iter()
        .zip(weighted_anchor_sum)
        .map(|(s, a)| (mu * a - s) / denom)
        .collect();
    set.project_in_place(&mut out);
    Ok(out)
}

/// Running sum of linear and isotropic quadratic losses,
/// `sum_k <u_k, w> + (mu_k / 2) ||w - b_k||^2`, stored as
/// `(M/2)||w||^2 + <c, w> + const`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAccumulator {
    curvature: f64,
    linear: DecisionVector,
    constant: f64,
}

impl LossAccumulator {
    pub fn new(dim: usize) -> Self {
        LossAccumulator {
            curvature: 0.0,
            linear: DecisionVector::zeros(dim),
            constant: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    pub fn add_linear(&mut self, weight: f64, coef: &[f64]) {
        self.linear.axpy(weight, coef);
    }

    /// Adds `weight * (mu/2) ||w - center||^2`.
    pub fn add_quadratic(&mut self, weight: f64, mu: f64, center: &[f64]) {
        let m = weight * mu;
        self.curvature += m;
        self.linear.axpy(-m, center);
        self.constant += 0.5 * m * center.iter().map(|c| c * c).sum::<f64>();
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn linear_part(&self) -> &DecisionVector {
        &self.linear
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let sq: f64 = w.iter().map(|v| v * v).sum();
        0.5 * self.curvature * sq + self.linear.dot(w) + self.constant
    }
}

/// Convex objective accessed through value and subgradient oracles.
pub trait ConvexObjective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    fn subgradient(&self, w: &[f64], out: &mut [f64]);
}

/// What the comparator minimizes.
pub enum LossDescription<'a> {
    /// Summed linear coefficients, `<u, w>`.
    Linear(&'a [f64]),
    /// Summed linear plus isotropic quadratic terms.
    Accumulated(&'a LossAccumulator),
    /// Any convex function with a subgradient oracle.
    BlackBox(&'a dyn ConvexObjective),
}

/// Best fixed decision in hindsight and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparator {
    pub point: DecisionVector,
    pub value: f64,
    /// Set when the value came from the iterative black-box search.
    pub approximate: bool,
}

pub fn best_in_hindsight(set: &FeasibleSet, loss: LossDescription<'_>) -> Result<Comparator> {
    match loss {
        LossDescription::Linear(u) => {
            set.check_dim(u.len())?;
            let point = linear_minimizer(set, u);
            let value = point.dot(u);
            Ok(Comparator {
                point,
                value,
                approximate: false,
            })
        }
        LossDescription::Accumulated(acc) => {
            set.check_dim(acc.dim())?;
            let point = if acc.curvature > 0.0 {
                let mut p = acc.linear.scaled(-1.0 / acc.curvature);
                set.project_in_place(&mut p);
                p
            } else {
                linear_minimizer(set, &acc.linear)
            };
            let value = acc.value(&point);
            Ok(Comparator {
                point,
                value,
                approximate: false,
            })
        }
        LossDescription::BlackBox(obj) => {
            set.check_dim(obj.dim())?;
            Ok(projected_subgradient_search(
                set,
                obj,
                APPROX_COMPARATOR_TOL,
            ))
        }
    }
}

fn linear_minimizer(set: &FeasibleSet, u: &[f64]) -> DecisionVector {
    match set {
        FeasibleSet::Box { lo, hi } => u
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(c, (l, h))| {
                if *c > 0.0 {
                    *l
                } else if *c < 0.0 {
                    *h
                } else {
                    *l
                }
            })
            .collect(),
        FeasibleSet::Ball { dim, radius } => {
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                DecisionVector::zeros(*dim)
            } else {
                u.iter().map(|v| -radius * v / norm).collect()
            }
        }
    }
}

const SEARCH_EPOCH: usize = 2_000;
const SEARCH_MAX_EPOCHS: usize = 80;

/// Restarted projected subgradient descent with best-iterate tracking.
///
/// Epoch `e` restarts from the best point so far with normalized steps
/// `h_e / sqrt(k)`, where `h_0` is the diameter and `h` halves every epoch.
/// Stops once `h_e * max||g||` drops below `tol / 10`.
pub fn projected_subgradient_search(
    set: &FeasibleSet,
    obj: &dyn ConvexObjective,
    tol: f64,
) -> Comparator {
    let dim = set.dim();
    let mut x = DecisionVector::zeros(dim);
    let mut g = vec![0.0; dim];
    let mut best = x.clone();
    let mut best_value = obj.value(&x);
    let mut h = set.diameter().max(f64::MIN_POSITIVE);
    let mut g_max: f64 = 0.0;
    'epochs: for _ in 0..SEARCH_MAX_EPOCHS {
        x.copy_from(&best);
        for k in 1..=SEARCH_EPOCH {
            obj.subgradient(&x, &mut g);
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm == 0.0 {
                if obj.value(&x) <= best_value {
                    best_value = obj.value(&x);
                    best.copy_from(&x);
                }
                break 'epochs;
            }
            g_max = g_max.max(gnorm);
            x.axpy(-h / (gnorm * (k as f64).sqrt()), &g);
            set.project_in_place(&mut x);
            let v = obj.value(&x);
            if v < best_value {
                best_value = v;
                best.copy_from(&x);
            }
        }
        h *= 0.5;
        if h * g_max < 0.1 * tol {
            break;
        }
    }
    Comparator {
        point: best,
        value: best_value,
        approximate: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn box_projection_clips() {
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        assert_close(&project(&set, &[2.0, -1.0]).unwrap(), &[1.0, 0.0], 0.0);
        assert_close(&project(&set, &[0.3, 0.7]).unwrap(), &[0.3, 0.7], 0.0);
    }

    #[test]
    fn ball_projection_scales() {
        let set = FeasibleSet::ball(2, 1.0).unwrap();
        assert_close(&project(&set, &[3.0, 4.0]).unwrap(), &[0.6, 0.8], 1e-15);
    }

    #[test]
    fn projection_rejects_dimension_mismatch() {
        let set = FeasibleSet::ball(3, 1.0).unwrap();
        assert!(matches!(
            project(&set, &[1.0]),
            Err(Error::Dimension {
                expected: 3,
                actual: 1
            })
        ));
    }

    #[test]
    fn sets_must_contain_origin() {
        assert!(FeasibleSet::cube(2, 0.1, 1.0).is_err());
        assert!(FeasibleSet::ball(2, 0.0).is_err());
    }

    #[test]
    fn diameters() {
        assert!((FeasibleSet::cube(4, -0.5, 0.5).unwrap().diameter() - 2.0).abs() < 1e-15);
        assert_eq!(FeasibleSet::ball(3, 1.5).unwrap().diameter(), 3.0);
        let c = FeasibleSet::centered_cube_with_diameter(16, 2.0).unwrap();
        assert!((c.diameter() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ftrl_linear_examples() {
        let b = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        assert_close(
            &ftrl_linear_step(&b, &[4.0, -1.0], 1.0).unwrap(),
            &[-1.0, 0.5],
            1e-15,
        );
        let ball = FeasibleSet::ball(2, 10.0).unwrap();
        assert_close(
            &ftrl_linear_step(&ball, &[4.0, -1.0], 1.0).unwrap(),
            &[-2.0, 0.5],
            1e-15,
        );
        assert_close(
            &ftrl_linear_step(&ball, &[0.0, 0.0], 3.0).unwrap(),
            &[0.0, 0.0],
            0.0,
        );
        assert!(ftrl_linear_step(&b, &[1.0, 1.0], 0.0).is_err());
        assert!(ftrl_linear_step(&b, &[1.0, 1.0], -1.0).is_err());
    }

    #[test]
    fn ftrl_strongly_convex_examples() {
        let unit = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        let w = ftrl_strongly_convex_step(&unit, &[0.5], &[0.0], 1.0, 1.0).unwrap();
        assert_close(&w, &[0.0], 0.0);
        let w = ftrl_strongly_convex_step(&unit, &[0.0], &[1.0], 2.0, 2.0).unwrap();
        assert_close(&w, &[0.5], 1e-15);
        // s = mu * anchor sum cancels to the projected weighted mean: (mu a - mu a)/..=0
        let w = ftrl_strongly_convex_step(&unit, &[0.6], &[0.6], 1.0, 2.0).unwrap();
        assert_close(&w, &[0.0], 1e-15);
        assert!(ftrl_strongly_convex_step(&unit, &[0.0], &[0.0], 0.0, 1.0).is_err());
        assert!(ftrl_strongly_convex_step(&unit, &[0.0], &[0.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn comparator_linear_examples() {
        let b = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let c = best_in_hindsight(&b, LossDescription::Linear(&[2.0, -3.0])).unwrap();
        assert_close(&c.point, &[-1.0, 1.0], 0.0);
        assert_eq!(c.value, -5.0);
        assert!(!c.approximate);

        let zero = best_in_hindsight(&b, LossDescription::Linear(&[0.0, 0.0])).unwrap();
        assert_close(&zero.point, &[-1.0, -1.0], 0.0);
        assert_eq!(zero.value, 0.0);

        let ball = FeasibleSet::ball(2, 2.0).unwrap();
        let c = best_in_hindsight(&ball, LossDescription::Linear(&[3.0, 4.0])).unwrap();
        assert_close(&c.point, &[-1.2, -1.6], 1e-15);
        assert!((c.value + 10.0).abs() < 1e-12);
        let c = best_in_hindsight(&ball, LossDescription::Linear(&[0.0, 0.0])).unwrap();
        assert_close(&c.point, &[0.0, 0.0], 0.0);
    }

    #[test]
    fn accumulator_matches_direct_sum() {
        let mut acc = LossAccumulator::new(2);
        acc.add_linear(1.0, &[1.0, -2.0]);
        acc.add_quadratic(0.5, 2.0, &[0.3, 0.1]);
        acc.add_quadratic(1.0, 1.0, &[-0.4, 0.2]);
        let w = [0.25, -0.75];
        let direct = (1.0 * 0.25 - 2.0 * -0.75)
            + 0.5 * 2.0 / 2.0 * ((0.25f64 - 0.3).powi(2) + (-0.75f64 - 0.1).powi(2))
            + 1.0 / 2.0 * ((0.25f64 + 0.4).powi(2) + (-0.75f64 - 0.2).powi(2));
        assert!((acc.value(&w) - direct).abs() < 1e-13);
    }

    #[test]
    fn accumulated_quadratic_minimizer_is_projected_mean() {
        let set = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        let mut acc = LossAccumulator::new(1);
        for b in [0.2, 0.9, 1.6] {
            acc.add_quadratic(1.0, 1.0, &[b]);
        }
        let c = best_in_hindsight(&set, LossDescription::Accumulated(&acc)).unwrap();
        assert!((c.point[0] - 0.9).abs() < 1e-15);
        let mut acc = LossAccumulator::new(1);
        acc.add_quadratic(1.0, 1.0, &[1.5]);
        acc.add_quadratic(1.0, 1.0, &[2.5]);
        let c = best_in_hindsight(&set, LossDescription::Accumulated(&acc)).unwrap();
        assert_eq!(c.point[0], 1.0);
    }

    struct Quad {
        center: Vec<f64>,
    }

    impl ConvexObjective for Quad {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn value(&self, w: &[f64]) -> f64 {
            0.5 * w
                .iter()
                .zip(&self.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        }
        fn subgradient(&self, w: &[f64], out: &mut [f64]) {
            for ((o, a), b) in out.iter_mut().zip(w).zip(&self.center) {
                *o = a - b;
            }
        }
    }

    struct Abs {
        center: Vec<f64>,
    }

    impl ConvexObjective for Abs {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn value(&self, w: &[f64]) -> f64 {
            w.iter().zip(&self.center).map(|(a, b)| (a - b).abs()).sum()
        }
        fn subgradient(&self, w: &[f64], out: &mut [f64]) {
            for ((o, a), b) in out.iter_mut().zip(w).zip(&self.center) {
                *o = (a - b).signum() * ((a - b) != 0.0) as i32 as f64;
            }
        }
    }

    #[test]
    fn black_box_comparator_is_flagged_and_accurate() {
        let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let q = Quad {
            center: vec![0.4, 2.0],
        };
        let c = best_in_hindsight(&set, LossDescription::BlackBox(&q)).unwrap();
        assert!(c.approximate);
        // exact minimizer (0.4, 1.0), value 0.5
        assert!((c.value - 0.5).abs() < APPROX_COMPARATOR_TOL);

        let a = Abs {
            center: vec![0.3, -0.2],
        };
        let c = best_in_hindsight(&set, LossDescription::BlackBox(&a)).unwrap();
        assert!(c.approximate);
        assert!(c.value < 1e-3, "{}", c.value);
    }
}
