//! Thin wrapper around the interior-point conic solver used for the
//! convex QP node relaxations. Problems are assembled as sparse rows in
//! minimization form.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT,
};

/// A convex QP in minimization form:
/// minimize 1/2 x' diag(p_diag) x + q' x
/// subject to eq rows a.x = b and ineq rows a.x <= b.
#[derive(Debug, Clone, Default)]
pub(crate) struct QpProblem {
    pub n: usize,
    pub p_diag: Vec<f64>,
    pub q: Vec<f64>,
    pub eq: Vec<(Vec<(usize, f64)>, f64)>,
    pub ineq: Vec<(Vec<(usize, f64)>, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct QpSolution {
    pub x: Vec<f64>,
    /// Minimization objective value.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum QpOutcome {
    Optimal(QpSolution),
    Infeasible,
}

#[derive(Debug, thiserror::Error)]
#[error("QP solver failed: {status:?}")]
pub struct QpFailure {
    pub status: String,
}

fn rows_to_csc(n: usize, rows: &[&(Vec<(usize, f64)>, f64)]) -> (CscMatrix<f64>, Vec<f64>) {
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b = Vec::with_capacity(rows.len());
    for (i, (coeffs, rhs)) in rows.iter().enumerate() {
        for &(col, val) in coeffs {
            triplets.push((col, i, val));
        }
        b.push(*rhs);
    }
    triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(triplets.len());
    let mut nzval = Vec::with_capacity(triplets.len());
    for &(col, row, val) in &triplets {
        colptr[col + 1] += 1;
        rowval.push(row);
        nzval.push(val);
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    (
        CscMatrix::new(rows.len(), n, colptr, rowval, nzval),
        b,
    )
}

pub(crate) fn solve_qp(problem: &QpProblem) -> Result<QpOutcome, QpFailure> {
    let n = problem.n;
    debug_assert_eq!(problem.p_diag.len(), n);
    debug_assert_eq!(problem.q.len(), n);

    let mut p_colptr = vec![0usize; n + 1];
    let mut p_rowval = Vec::new();
    let mut p_nzval = Vec::new();
    for (i, &d) in problem.p_diag.iter().enumerate() {
        if d != 0.0 {
            p_rowval.push(i);
            p_nzval.push(d);
            p_colptr[i + 1] = 1;
        }
    }
    for c in 0..n {
        p_colptr[c + 1] += p_colptr[c];
    }
    let p = CscMatrix::new(n, n, p_colptr, p_rowval, p_nzval);

    let all_rows: Vec<&(Vec<(usize, f64)>, f64)> =
        problem.eq.iter().chain(problem.ineq.iter()).collect();
    let (a, b) = rows_to_csc(n, &all_rows);
    let cones: Vec<SupportedConeT<f64>> = vec![
        clarabel::solver::ZeroConeT(problem.eq.len()),
        NonnegativeConeT(problem.ineq.len()),
    ];

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .tol_gap_abs(1e-9)
        .tol_gap_rel(1e-9)
        .tol_feas(1e-9)
        .build()
        .expect("static settings are valid");
    let mut solver = DefaultSolver::new(&p, &problem.q, &a, &b, &cones, settings);
    solver.solve();

    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(QpOutcome::Optimal(QpSolution {
            x: solver.solution.x.clone(),
            objective: solver.solution.obj_val,
        })),
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            Ok(QpOutcome::Infeasible)
        }
        status => Err(QpFailure {
            status: format!("{status:?}"),
        }),
    }
}
