//! Assembles the convex QP node relaxation of an offering problem: the
//! commitment binaries relaxed to [0,1] (or fixed by branching), the
//! dispatch variables, and for the dualized robust flavor the protection
//! variables z and q.

use crate::robust::{Flavor, RobustProblem};
use crate::units::UnitSpec;

use super::qp::QpProblem;

/// Index layout of the relaxation variables.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub horizon: usize,
    pub robust: bool,
    pub output_caps: bool,
}

impl Layout {
    pub fn for_problem(problem: &RobustProblem, output_caps: bool) -> Layout {
        Layout {
            horizon: problem.horizon(),
            robust: matches!(problem.flavor, Flavor::DualizedRobust),
            output_caps,
        }
    }

    pub fn p(&self, t: usize) -> usize {
        t
    }
    pub fn suc(&self, t: usize) -> usize {
        self.horizon + t
    }
    pub fn u(&self, t: usize) -> usize {
        2 * self.horizon + t
    }
    pub fn v(&self, t: usize) -> usize {
        3 * self.horizon + t
    }
    pub fn w(&self, t: usize) -> usize {
        4 * self.horizon + t
    }
    pub fn z(&self) -> usize {
        debug_assert!(self.robust);
        5 * self.horizon
    }
    pub fn q(&self, t: usize) -> usize {
        debug_assert!(self.robust);
        5 * self.horizon + 1 + t
    }
    pub fn y(&self, t: usize) -> usize {
        debug_assert!(self.output_caps);
        let base = if self.robust {
            6 * self.horizon + 1
        } else {
            5 * self.horizon
        };
        base + t
    }
    pub fn n_vars(&self) -> usize {
        let mut n = 5 * self.horizon;
        if self.robust {
            n += 1 + self.horizon;
        }
        if self.output_caps {
            n += self.horizon;
        }
        n
    }
}

/// Lower/upper bounds on the relaxed binaries, tightened by branching.
#[derive(Debug, Clone)]
pub(crate) struct BinaryBounds {
    pub u: Vec<(f64, f64)>,
    pub v: Vec<(f64, f64)>,
    pub w: Vec<(f64, f64)>,
}

impl BinaryBounds {
    pub fn free(horizon: usize) -> BinaryBounds {
        BinaryBounds {
            u: vec![(0.0, 1.0); horizon],
            v: vec![(0.0, 1.0); horizon],
            w: vec![(0.0, 1.0); horizon],
        }
    }
}

/// 1 if the unit's pre-horizon startup falls inside the minimum-up window
/// `[t - width + 1, 0]` of 1-based hour `t`, else 0.
fn pre_horizon_startups_in_window(unit: &UnitSpec, t: i64, width: i64) -> f64 {
    match unit.initial_state.startup_hour() {
        Some(h) if t - width + 1 <= h => 1.0,
        _ => 0.0,
    }
}

fn pre_horizon_shutdowns_in_window(unit: &UnitSpec, t: i64, width: i64) -> f64 {
    match unit.initial_state.shutdown_hour() {
        Some(h) if t - width + 1 <= h => 1.0,
        _ => 0.0,
    }
}

/// Builds the QP relaxation (minimization form: negated profit).
pub(crate) fn build_relaxation(
    problem: &RobustProblem,
    bounds: &BinaryBounds,
    layout: Layout,
) -> QpProblem {
    let unit = &problem.unit;
    let horizon = layout.horizon;
    let init = &unit.initial_state;
    let u0 = if init.on { 1.0 } else { 0.0 };
    let p0 = init.power;
    let prices = problem.objective_prices();
    let deviation = &problem.model.deviation;
    let budget = f64::from(problem.model.budget);

    let mut qp = QpProblem {
        n: layout.n_vars(),
        p_diag: vec![0.0; layout.n_vars()],
        q: vec![0.0; layout.n_vars()],
        ..Default::default()
    };

    // Objective: minimize sum_t [a p^2 + (b - lambda) p + cF u + suc]
    //            (+ budget * z + sum q for the dualized robust flavor).
    for t in 0..horizon {
        qp.p_diag[layout.p(t)] = 2.0 * unit.cost_a;
        qp.q[layout.p(t)] = unit.cost_b - prices[t];
        qp.q[layout.suc(t)] = 1.0;
        qp.q[layout.u(t)] = unit.cost_fixed;
    }
    if layout.robust {
        qp.q[layout.z()] = budget;
        for t in 0..horizon {
            qp.q[layout.q(t)] = 1.0;
        }
    }

    for t in 0..horizon {
        let ti = (t + 1) as i64;

        // Logical link: v_t - w_t - u_t + u_{t-1} = -u0 at t = 1, else 0.
        let mut row = vec![
            (layout.v(t), 1.0),
            (layout.w(t), -1.0),
            (layout.u(t), -1.0),
        ];
        let rhs = if t == 0 {
            -u0
        } else {
            row.push((layout.u(t - 1), 1.0));
            0.0
        };
        qp.eq.push((row, rhs));

        // Power bounds: P^min u - p <= 0 and p - P^max u <= 0.
        qp.ineq.push((
            vec![(layout.u(t), unit.p_min), (layout.p(t), -1.0)],
            0.0,
        ));
        qp.ineq.push((
            vec![(layout.p(t), 1.0), (layout.u(t), -unit.p_max)],
            0.0,
        ));
        // p >= 0 explicitly (P^min may be zero).
        qp.ineq.push((vec![(layout.p(t), -1.0)], 0.0));
        // suc >= 0.
        qp.ineq.push((vec![(layout.suc(t), -1.0)], 0.0));

        // Startup cost linking, one row per lookback depth tau:
        // c_tau (u_t - sum_{k=1..tau} u_{t-k}) - suc_t <= 0, with
        // pre-horizon u values folded into the right-hand side. Rows whose
        // pre-horizon window already contains an on-hour are vacuous.
        for (tau_idx, &c_tau) in unit.suc_schedule.iter().enumerate() {
            if c_tau == 0.0 {
                continue;
            }
            let tau = (tau_idx + 1) as i64;
            let mut pre_on = 0.0;
            let mut row = vec![(layout.suc(t), -1.0), (layout.u(t), c_tau)];
            for k in 1..=tau {
                let j = ti - k;
                if j >= 1 {
                    row.push((layout.u((j - 1) as usize), -c_tau));
                } else if init.status_at(j) {
                    pre_on += 1.0;
                }
            }
            if pre_on > 0.0 {
                continue;
            }
            qp.ineq.push((row, 0.0));
        }

        // Ramp up: p_t - p_{t-1} - R_up u_t - (R_su - R_up) v_t <= [t=1] p0.
        let mut row = vec![
            (layout.p(t), 1.0),
            (layout.u(t), -unit.ramp_up),
            (layout.v(t), -(unit.ramp_startup - unit.ramp_up)),
        ];
        let rhs = if t == 0 {
            p0
        } else {
            row.push((layout.p(t - 1), -1.0));
            0.0
        };
        qp.ineq.push((row, rhs));

        // Ramp down: p_{t-1} - p_t - R_down u_{t-1}
        //            + (R_down - R_sd) w_t <= 0, constants at t = 1.
        let mut row = vec![
            (layout.p(t), -1.0),
            (layout.w(t), unit.ramp_down - unit.ramp_shutdown),
        ];
        let rhs = if t == 0 {
            -p0 + unit.ramp_down * u0
        } else {
            row.push((layout.p(t - 1), 1.0));
            row.push((layout.u(t - 1), -unit.ramp_down));
            0.0
        };
        qp.ineq.push((row, rhs));

        // Minimum up: sum of startups in the trailing window <= u_t.
        let width = i64::from(unit.min_up);
        let mut row = vec![(layout.u(t), -1.0)];
        for tau in (ti - width + 1)..=ti {
            if tau >= 1 {
                row.push((layout.v((tau - 1) as usize), 1.0));
            }
        }
        qp.ineq
            .push((row, -pre_horizon_startups_in_window(unit, ti, width)));

        // Minimum down: sum of shutdowns in the trailing window <= 1 - u_t.
        let width = i64::from(unit.min_down);
        let mut row = vec![(layout.u(t), 1.0)];
        for tau in (ti - width + 1)..=ti {
            if tau >= 1 {
                row.push((layout.w((tau - 1) as usize), 1.0));
            }
        }
        qp.ineq
            .push((row, 1.0 - pre_horizon_shutdowns_in_window(unit, ti, width)));

        // Binary boxes (branching tightens u).
        for (idx, (lo, hi)) in [
            (layout.u(t), bounds.u[t]),
            (layout.v(t), bounds.v[t]),
            (layout.w(t), bounds.w[t]),
        ] {
            qp.ineq.push((vec![(idx, 1.0)], hi));
            qp.ineq.push((vec![(idx, -1.0)], -lo));
        }

        if layout.robust {
            // Deviation coupling: d_t p_t - z - q_t <= 0 (through the
            // output-cap auxiliary when enabled).
            let coupled = if layout.output_caps {
                layout.y(t)
            } else {
                layout.p(t)
            };
            qp.ineq.push((
                vec![
                    (coupled, deviation[t]),
                    (layout.z(), -1.0),
                    (layout.q(t), -1.0),
                ],
                0.0,
            ));
            qp.ineq.push((vec![(layout.q(t), -1.0)], 0.0));
        }

        if layout.output_caps {
            // p_t <= y_t, 0 <= y_t <= P^max.
            qp.ineq
                .push((vec![(layout.p(t), 1.0), (layout.y(t), -1.0)], 0.0));
            qp.ineq.push((vec![(layout.y(t), 1.0)], unit.p_max));
            qp.ineq.push((vec![(layout.y(t), -1.0)], 0.0));
        }
    }
    if layout.robust {
        qp.ineq.push((vec![(layout.z(), -1.0)], 0.0));
    }
    qp
}
