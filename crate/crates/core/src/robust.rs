//! Problem variants for offering under price uncertainty: the nominal
//! problem, its budget-robust counterpart in the dualized Bertsimas–Sim
//! form, and the full-protection shortcut that replaces dualization with a
//! plain price shift.
//!
//! The uncertainty model is objective-side only: each hourly price may
//! drop from its nominal value by at most its deviation, and at most
//! `budget` hours may deviate simultaneously.

use thiserror::Error;

use crate::prices::PriceStats;
use crate::units::{profit, Schedule, UnitSpec};

/// Nominal prices, worst downward deviations and the protection budget.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyModel {
    /// Nominal price per hour (EUR/MWh), non-negative.
    pub nominal: Vec<f64>,
    /// Worst downward deviation per hour (EUR/MWh), non-negative.
    pub deviation: Vec<f64>,
    /// Number of hours protected against deviation, 0..=horizon.
    pub budget: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum RobustModelError {
    #[error("price and deviation vectors have different lengths ({nominal} vs {deviation})")]
    HorizonMismatch { nominal: usize, deviation: usize },
    #[error("budget {budget} outside 0..={horizon}")]
    BudgetOutOfRange { budget: u32, horizon: usize },
    #[error("negative deviation at hour {hour}")]
    NegativeDeviation { hour: usize },
    #[error("negative nominal price at hour {hour}")]
    NegativePrice { hour: usize },
    #[error("negative power at hour {hour}")]
    NegativePower { hour: usize },
    #[error("full protection requires budget = horizon (got {budget} for {horizon} hours)")]
    NotFullProtection { budget: u32, horizon: usize },
}

impl UncertaintyModel {
    pub fn new(
        nominal: Vec<f64>,
        deviation: Vec<f64>,
        budget: u32,
    ) -> Result<Self, RobustModelError> {
        if nominal.len() != deviation.len() {
            return Err(RobustModelError::HorizonMismatch {
                nominal: nominal.len(),
                deviation: deviation.len(),
            });
        }
        if budget as usize > nominal.len() {
            return Err(RobustModelError::BudgetOutOfRange {
                budget,
                horizon: nominal.len(),
            });
        }
        if let Some(hour) = nominal.iter().position(|&l| l < 0.0) {
            return Err(RobustModelError::NegativePrice { hour: hour + 1 });
        }
        if let Some(hour) = deviation.iter().position(|&d| d < 0.0) {
            return Err(RobustModelError::NegativeDeviation { hour: hour + 1 });
        }
        Ok(UncertaintyModel {
            nominal,
            deviation,
            budget,
        })
    }

    /// Model with the nominal prices and deviations of trimmed statistics.
    pub fn from_stats(stats: &PriceStats, budget: u32) -> Result<Self, RobustModelError> {
        UncertaintyModel::new(stats.nominal.clone(), stats.deviation.clone(), budget)
    }

    /// Model with no uncertainty at the given prices.
    pub fn certain(prices: Vec<f64>) -> Result<Self, RobustModelError> {
        let zeros = vec![0.0; prices.len()];
        UncertaintyModel::new(prices, zeros, 0)
    }

    pub fn horizon(&self) -> usize {
        self.nominal.len()
    }

    /// Prices with every deviation applied: the full-protection worst case.
    pub fn worst_prices(&self) -> Vec<f64> {
        self.nominal
            .iter()
            .zip(&self.deviation)
            .map(|(l, d)| l - d)
            .collect()
    }
}

/// Which counterpart a [`RobustProblem`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// Certain prices; no protection term.
    Nominal,
    /// Compact dualized counterpart with auxiliary variables `z`, `q_t`
    /// and constraints `z + q_t >= d_t p_t` (no output-cap auxiliaries).
    DualizedRobust,
    /// Full protection solved as the nominal problem at the worst prices;
    /// only valid when the budget covers every hour.
    WorstCaseEquivalent,
}

/// One solvable offering problem: a unit, an uncertainty model and the
/// counterpart flavor to solve it under.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustProblem {
    pub unit: UnitSpec,
    pub model: UncertaintyModel,
    pub flavor: Flavor,
}

impl RobustProblem {
    /// Deterministic problem at known prices.
    pub fn nominal(unit: UnitSpec, prices: Vec<f64>) -> Result<Self, RobustModelError> {
        Ok(RobustProblem {
            unit,
            model: UncertaintyModel::certain(prices)?,
            flavor: Flavor::Nominal,
        })
    }

    /// Budget-robust counterpart in dualized form.
    ///
    /// A zero budget or all-zero deviations disable the protection term
    /// exactly, so those cases normalize to the nominal flavor.
    pub fn robust(unit: UnitSpec, model: UncertaintyModel) -> Result<Self, RobustModelError> {
        let flavor = if model.budget == 0 || model.deviation.iter().all(|&d| d == 0.0) {
            Flavor::Nominal
        } else {
            Flavor::DualizedRobust
        };
        Ok(RobustProblem {
            unit,
            model,
            flavor,
        })
    }

    /// Full-protection counterpart as a price-shifted nominal problem.
    ///
    /// Requires `budget = horizon`; no dual variables are introduced.
    pub fn worst_case(unit: UnitSpec, model: UncertaintyModel) -> Result<Self, RobustModelError> {
        if model.budget as usize != model.horizon() {
            return Err(RobustModelError::NotFullProtection {
                budget: model.budget,
                horizon: model.horizon(),
            });
        }
        Ok(RobustProblem {
            unit,
            model,
            flavor: Flavor::WorstCaseEquivalent,
        })
    }

    pub fn horizon(&self) -> usize {
        self.model.horizon()
    }

    /// Prices that enter the objective's revenue term.
    pub fn objective_prices(&self) -> Vec<f64> {
        match self.flavor {
            Flavor::Nominal | Flavor::DualizedRobust => self.model.nominal.clone(),
            Flavor::WorstCaseEquivalent => self.model.worst_prices(),
        }
    }

    /// Objective value of a fixed schedule under this counterpart:
    /// revenue at the objective prices minus generation cost, minus the
    /// worst-case shortfall for the dualized flavor.
    pub fn evaluate(&self, schedule: &Schedule) -> Result<f64, RobustModelError> {
        let prices = self.objective_prices();
        let base = profit(&self.unit, &prices, schedule).map_err(|_| {
            RobustModelError::HorizonMismatch {
                nominal: prices.len(),
                deviation: schedule.horizon(),
            }
        })?;
        match self.flavor {
            Flavor::Nominal | Flavor::WorstCaseEquivalent => Ok(base),
            Flavor::DualizedRobust => {
                let shortfall = worst_case_shortfall(
                    &self.model.deviation,
                    &schedule.power,
                    self.model.budget,
                )?;
                Ok(base - shortfall)
            }
        }
    }
}

fn check_shortfall_inputs(
    deviation: &[f64],
    power: &[f64],
    budget: u32,
) -> Result<(), RobustModelError> {
    if deviation.len() != power.len() {
        return Err(RobustModelError::HorizonMismatch {
            nominal: deviation.len(),
            deviation: power.len(),
        });
    }
    if budget as usize > deviation.len() {
        return Err(RobustModelError::BudgetOutOfRange {
            budget,
            horizon: deviation.len(),
        });
    }
    if let Some(hour) = deviation.iter().position(|&d| d < 0.0) {
        return Err(RobustModelError::NegativeDeviation { hour: hour + 1 });
    }
    if let Some(hour) = power.iter().position(|&p| p < 0.0) {
        return Err(RobustModelError::NegativePower { hour: hour + 1 });
    }
    Ok(())
}

/// Worst-case revenue shortfall: the sum of the `budget` largest values of
/// `deviation[t] * power[t]`.
///
/// Ties are broken toward the lowest hour index; the value itself is
/// tie-independent.
pub fn worst_case_shortfall(
    deviation: &[f64],
    power: &[f64],
    budget: u32,
) -> Result<f64, RobustModelError> {
    check_shortfall_inputs(deviation, power, budget)?;
    let mut losses: Vec<(f64, usize)> = deviation
        .iter()
        .zip(power)
        .map(|(d, p)| d * p)
        .enumerate()
        .map(|(t, loss)| (loss, t))
        .collect();
    losses.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(losses
        .iter()
        .take(budget as usize)
        .map(|(loss, _)| loss)
        .sum())
}

/// Optimal dual variables of the worst-case shortfall problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualShortfall {
    /// Optimal value `budget * z + sum(q)`, equal to the primal shortfall.
    pub value: f64,
    pub z: f64,
    pub q: Vec<f64>,
}

/// Dual of the worst-case shortfall: minimize `budget * z + sum(q_t)`
/// subject to `z + q_t >= d_t p_t`, `z, q >= 0`.
///
/// Solved exactly by scanning `z` over the breakpoints `{0} U {d_t p_t}`:
/// the minimizers form the interval between the (budget+1)-th and the
/// budget-th largest loss, and the canonical choice is the budget-th
/// largest loss (the full-protection case takes `z = 0`, where every
/// `q_t = d_t p_t` is optimal). Strong duality makes the value equal the
/// primal shortfall.
pub fn worst_case_shortfall_dual(
    deviation: &[f64],
    power: &[f64],
    budget: u32,
) -> Result<DualShortfall, RobustModelError> {
    check_shortfall_inputs(deviation, power, budget)?;
    let losses: Vec<f64> = deviation.iter().zip(power).map(|(d, p)| d * p).collect();
    let n = losses.len();
    let z = if budget == 0 {
        losses.iter().cloned().fold(0.0, f64::max)
    } else if (budget as usize) == n {
        0.0
    } else {
        let mut sorted = losses.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sorted[budget as usize - 1]
    };
    let q: Vec<f64> = losses.iter().map(|&l| (l - z).max(0.0)).collect();
    let value = f64::from(budget) * z + q.iter().sum::<f64>();
    Ok(DualShortfall { value, z, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::demo_unit;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Independent oracle: enumerate every subset of at most `budget`
    /// hours and take the most damaging one.
    fn shortfall_by_enumeration(deviation: &[f64], power: &[f64], budget: u32) -> f64 {
        let n = deviation.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() > budget {
                continue;
            }
            let total: f64 = (0..n)
                .filter(|t| mask & (1 << t) != 0)
                .map(|t| deviation[t] * power[t])
                .sum();
            best = best.max(total);
        }
        best
    }

    #[test]
    fn shortfall_matches_subset_enumeration() {
        let d = [2.0, 5.0, 3.0];
        let p = [100.0, 100.0, 100.0];
        assert_eq!(shortfall_by_enumeration(&d, &p, 2), 800.0);
        assert_eq!(worst_case_shortfall(&d, &p, 2).unwrap(), 800.0);

        let p = [0.0, 100.0, 0.0];
        assert_eq!(shortfall_by_enumeration(&d, &p, 3), 500.0);
        assert_eq!(worst_case_shortfall(&d, &p, 3).unwrap(), 500.0);
    }

    #[test]
    fn zero_budget_means_zero_shortfall() {
        let d = [2.0, 5.0, 3.0];
        let p = [10.0, 20.0, 30.0];
        assert_eq!(worst_case_shortfall(&d, &p, 0).unwrap(), 0.0);
        let dual = worst_case_shortfall_dual(&d, &p, 0).unwrap();
        assert_eq!(dual.value, 0.0);
    }

    #[test]
    fn dual_examples() {
        let d = [2.0, 5.0, 3.0];
        let p = [100.0, 100.0, 100.0];
        let dual = worst_case_shortfall_dual(&d, &p, 2).unwrap();
        assert_eq!(dual.value, 800.0);
        assert_eq!(dual.z, 300.0); // second-largest loss
        assert_eq!(dual.q, vec![0.0, 200.0, 0.0]);

        let full = worst_case_shortfall_dual(&d, &p, 3).unwrap();
        assert_eq!(full.z, 0.0);
        assert_eq!(full.value, 200.0 + 500.0 + 300.0);
        assert_eq!(full.q, vec![200.0, 500.0, 300.0]);
    }

    #[test]
    fn shortfall_rejects_bad_inputs() {
        assert!(matches!(
            worst_case_shortfall(&[1.0], &[1.0], 2),
            Err(RobustModelError::BudgetOutOfRange { .. })
        ));
        assert!(matches!(
            worst_case_shortfall(&[-1.0], &[1.0], 1),
            Err(RobustModelError::NegativeDeviation { hour: 1 })
        ));
        assert!(matches!(
            worst_case_shortfall(&[1.0, 2.0], &[1.0], 1),
            Err(RobustModelError::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn strong_duality_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=24);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..30.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..400.0)).collect();
            let budget = rng.gen_range(0..=n) as u32;
            let primal = worst_case_shortfall(&d, &p, budget).unwrap();
            let dual = worst_case_shortfall_dual(&d, &p, budget).unwrap();
            let scale = primal.abs().max(1.0);
            assert!(
                (primal - dual.value).abs() <= 1e-9 * scale,
                "primal {primal} vs dual {} (n={n}, budget={budget})",
                dual.value
            );
            // Dual feasibility: z + q_t >= d_t p_t.
            for t in 0..n {
                assert!(dual.z + dual.q[t] >= d[t] * p[t] - 1e-9 * scale);
            }
        }
    }

    #[test]
    fn shortfall_against_enumeration_on_small_random_instances() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
            let budget = rng.gen_range(0..=n) as u32;
            let fast = worst_case_shortfall(&d, &p, budget).unwrap();
            let slow = shortfall_by_enumeration(&d, &p, budget);
            assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn shortfall_is_monotone_in_budget(
            d in proptest::collection::vec(0.0..20.0f64, 6),
            p in proptest::collection::vec(0.0..300.0f64, 6),
        ) {
            let mut last = 0.0;
            for budget in 0..=6u32 {
                let v = worst_case_shortfall(&d, &p, budget).unwrap();
                prop_assert!(v + 1e-12 >= last);
                last = v;
            }
            let total: f64 = d.iter().zip(&p).map(|(d, p)| d * p).sum();
            prop_assert!((last - total).abs() <= 1e-9 * total.abs().max(1.0));
        }

        #[test]
        fn shortfall_is_positively_homogeneous_in_power(
            d in proptest::collection::vec(0.0..20.0f64, 6),
            p in proptest::collection::vec(0.0..300.0f64, 6),
            alpha in 0.0..5.0f64,
            budget in 0..=6u32,
        ) {
            let scaled: Vec<f64> = p.iter().map(|x| alpha * x).collect();
            let lhs = worst_case_shortfall(&d, &scaled, budget).unwrap();
            let rhs = alpha * worst_case_shortfall(&d, &p, budget).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn builders_normalize_flavors() {
        let unit = demo_unit();
        let prices = vec![50.0; 24];
        let nominal = RobustProblem::nominal(unit.clone(), prices.clone()).unwrap();
        assert_eq!(nominal.flavor, Flavor::Nominal);

        // Zero budget and zero deviations both disable protection exactly.
        let m = UncertaintyModel::new(prices.clone(), vec![5.0; 24], 0).unwrap();
        assert_eq!(
            RobustProblem::robust(unit.clone(), m).unwrap().flavor,
            Flavor::Nominal
        );
        let m = UncertaintyModel::new(prices.clone(), vec![0.0; 24], 7).unwrap();
        assert_eq!(
            RobustProblem::robust(unit.clone(), m).unwrap().flavor,
            Flavor::Nominal
        );
        let m = UncertaintyModel::new(prices.clone(), vec![5.0; 24], 7).unwrap();
        assert_eq!(
            RobustProblem::robust(unit.clone(), m).unwrap().flavor,
            Flavor::DualizedRobust
        );

        let m = UncertaintyModel::new(prices.clone(), vec![5.0; 24], 24).unwrap();
        let wc = RobustProblem::worst_case(unit.clone(), m).unwrap();
        assert_eq!(wc.flavor, Flavor::WorstCaseEquivalent);
        assert_eq!(wc.objective_prices(), vec![45.0; 24]);

        let m = UncertaintyModel::new(prices, vec![5.0; 24], 7).unwrap();
        assert!(matches!(
            RobustProblem::worst_case(unit, m),
            Err(RobustModelError::NotFullProtection { .. })
        ));
    }

    #[test]
    fn worst_case_with_zero_deviation_is_nominal_pricing() {
        let unit = demo_unit();
        let prices = vec![54.0, 55.0, 61.0];
        let m = UncertaintyModel::new(prices.clone(), vec![0.0; 3], 3).unwrap();
        let wc = RobustProblem::worst_case(unit, m).unwrap();
        assert_eq!(wc.objective_prices(), prices);
    }

    #[test]
    fn evaluate_subtracts_the_dual_optimal_protection_cost() {
        let unit = demo_unit();
        let schedule = Schedule::from_commitment(
            &unit,
            &[true, true, true],
            vec![160.0, 215.0, 270.0],
        )
        .unwrap();
        let nominal = vec![54.0, 55.0, 61.0];
        let deviation = vec![1.0, 2.0, 1.5];
        for budget in 0..=3u32 {
            let m = UncertaintyModel::new(nominal.clone(), deviation.clone(), budget).unwrap();
            let problem = RobustProblem::robust(unit.clone(), m).unwrap();
            let value = problem.evaluate(&schedule).unwrap();
            let base = profit(&unit, &nominal, &schedule).unwrap();
            let dual = worst_case_shortfall_dual(&deviation, &schedule.power, budget).unwrap();
            let by_dual = base - (f64::from(budget) * dual.z + dual.q.iter().sum::<f64>());
            assert!(
                (value - by_dual).abs() <= 1e-9 * by_dual.abs().max(1.0),
                "budget {budget}: {value} vs {by_dual}"
            );
        }
    }
}
