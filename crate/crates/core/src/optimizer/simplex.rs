//! Dense two-phase primal simplex.
//!
//! Solves `maximize c·x` subject to linear rows (`=`, `<=`, `>=`) and
//! `x >= 0`. Rows are brought to standard form with slack and surplus
//! columns, rows with a negative right-hand side are negated, and an
//! artificial column is added wherever no slack can start the basis.
//! Phase 1 drives the artificials to zero; leftover zero-level artificials
//! are pivoted out or their rows dropped as redundant before phase 2.
//!
//! Once the optimal basis is known, the basic solution is recomputed from
//! the original data with an LU solve so that drift accumulated in the
//! tableau does not leak into the returned point.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Sparse coefficients `(variable, value)`.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub n_vars: usize,
    /// Maximized.
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables; never cycles.
    Bland,
    /// Most negative reduced cost, smallest index on ties. Falls back to
    /// Bland's rule after a run of degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Phase-1 objective (sum of artificials) accepted as zero.
    pub feasibility_tol: f64,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    /// Smallest pivot element magnitude considered in the ratio test.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    pub rule: PivotRule,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 100_000,
            rule: PivotRule::Dantzig,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexError {
    Infeasible { residual: f64 },
    Unbounded,
    IterationLimit(usize),
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Consecutive degenerate pivots tolerated under Dantzig's rule before
/// switching to Bland's rule for the rest of the phase.
const DEGENERATE_RUN_LIMIT: usize = 64;

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m x width`; the last column is the right-hand side.
    cells: Vec<f64>,
    /// `z_j - c_j` rows for phase 1 and phase 2 (rhs column holds the objective value).
    obj: [Vec<f64>; 2],
    basis: Vec<usize>,
    active: Vec<bool>,
    /// Columns at or beyond this index are artificial.
    n_real: usize,
    scratch: Vec<f64>,
    nonzeros: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.cells[i * self.width + self.width - 1]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let inv = 1.0 / self.cells[r * w + col];
        {
            let row = &mut self.cells[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[col] = 1.0;
            self.scratch.copy_from_slice(row);
        }
        self.nonzeros.clear();
        self.nonzeros.extend((0..w).filter(|&j| self.scratch[j] != 0.0));
        let sparse = self.nonzeros.len() * 3 < w;

        let pr = &self.scratch;
        let nz = &self.nonzeros;
        let update = |row: &mut [f64]| {
            let f = row[col];
            if f == 0.0 {
                return;
            }
            if sparse {
                for &j in nz {
                    row[j] -= f * pr[j];
                }
            } else {
                for (v, &p) in row.iter_mut().zip(pr) {
                    *v -= f * p;
                }
            }
            row[col] = 0.0;
        };
        for (i, row) in self.cells.chunks_mut(w).enumerate() {
            if i != r {
                update(row);
            }
        }
        for row in &mut self.obj {
            update(row);
        }
        self.basis[r] = col;
    }

    /// Restores a nonnegative basic solution after crash pivots. Rows held by
    /// an artificial at a negative level switch to their surplus column when
    /// they have one and are otherwise negated. Returns `false` when a real
    /// basic variable is negative.
    fn repair_after_crash(&mut self, slack_col: &[Option<usize>], opts: &SimplexOptions) -> bool {
        let w = self.width;
        let tiny = opts.feasibility_tol * 1e-3;
        for i in 0..self.m {
            let v = self.rhs(i);
            if v >= 0.0 {
                continue;
            }
            if v >= -tiny {
                self.cells[i * w + w - 1] = 0.0;
                continue;
            }
            if self.basis[i] < self.n_real {
                return false;
            }
            match slack_col[i] {
                Some(s) if !self.basis.contains(&s) && self.at(i, s) < -opts.pivot_tol => self.pivot(i, s),
                _ => {
                    let art = self.basis[i];
                    self.cells[i * w..(i + 1) * w].iter_mut().for_each(|x| *x = -*x);
                    self.cells[i * w + art] = 1.0;
                }
            }
        }
        true
    }

    /// Rebuilds both objective rows from the current basis.
    fn recompute_objectives(&mut self, objective: &[f64]) {
        let w = self.width;
        let [obj1, obj2] = &mut self.obj;
        obj1.iter_mut().for_each(|v| *v = 0.0);
        obj2.iter_mut().for_each(|v| *v = 0.0);
        for (j, &c) in objective.iter().enumerate() {
            obj2[j] = -c;
        }
        for i in 0..self.m {
            let row = &self.cells[i * w..(i + 1) * w];
            let b = self.basis[i];
            if b >= self.n_real {
                for (o, &x) in obj1.iter_mut().zip(row) {
                    *o -= x;
                }
            } else if let Some(&c) = objective.get(b) {
                if c != 0.0 {
                    for (o, &x) in obj2.iter_mut().zip(row) {
                        *o += c * x;
                    }
                }
            }
        }
        for i in 0..self.m {
            let b = self.basis[i];
            obj1[b] = 0.0;
            obj2[b] = 0.0;
        }
    }

    /// Entering column for objective row `phase`, or `None` at optimality.
    fn entering(&self, phase: usize, limit: usize, bland: bool, tol: f64) -> Option<usize> {
        let obj = &self.obj[phase];
        if bland {
            (0..limit).find(|&j| obj[j] < -tol)
        } else {
            let mut best = None;
            let mut best_val = -tol;
            for (j, &v) in obj[..limit].iter().enumerate() {
                if v < best_val {
                    best_val = v;
                    best = Some(j);
                }
            }
            best
        }
    }

    /// Minimum-ratio leaving row; ties go to the smallest basic variable.
    fn leaving(&self, col: usize, pivot_tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            if !self.active[i] {
                continue;
            }
            let a = self.at(i, col);
            if a <= pivot_tol {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            match best {
                None => best = Some((i, ratio)),
                Some((b, r)) => {
                    let tie = (ratio - r).abs() <= 1e-12 * (1.0 + r.abs());
                    if ratio < r && !tie || tie && self.basis[i] < self.basis[b] {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn run_phase(
        &mut self,
        phase: usize,
        limit: usize,
        opts: &SimplexOptions,
        iterations: &mut usize,
    ) -> Result<(), SimplexError> {
        let mut bland = opts.rule == PivotRule::Bland;
        let mut degenerate_run = 0;
        loop {
            let Some(col) = self.entering(phase, limit, bland, opts.optimality_tol) else {
                return Ok(());
            };
            let Some(r) = self.leaving(col, opts.pivot_tol) else {
                return Err(SimplexError::Unbounded);
            };
            if self.rhs(r).abs() <= opts.feasibility_tol * 1e-3 {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_RUN_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, col);
            *iterations += 1;
            if *iterations >= opts.max_iterations {
                return Err(SimplexError::IterationLimit(*iterations));
            }
        }
    }
}

pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> Result<SimplexSolution, SimplexError> {
    solve_with_basis(lp, opts, &[])
}

/// Like [`solve`], but first pivots the given `(row, variable)` pairs into
/// the basis in order. A good starting basis keeps degenerate problems away
/// from long stalls in phase 1. Pairs whose pivot element has vanished are
/// skipped; if the resulting basic solution is not feasible the hint is
/// dropped and the solve starts from scratch.
pub fn solve_with_basis(
    lp: &LinearProgram,
    opts: &SimplexOptions,
    crash: &[(usize, usize)],
) -> Result<SimplexSolution, SimplexError> {
    let m = lp.rows.len();
    let n = lp.n_vars;

    // Standard form: one extra column per inequality row.
    let mut slack_col = vec![None; m];
    let mut n_real = n;
    for (i, row) in lp.rows.iter().enumerate() {
        if row.sense != Sense::Eq {
            slack_col[i] = Some(n_real);
            n_real += 1;
        }
    }

    // Dense standard-form matrix and rhs with rhs >= 0.
    let mut a = vec![vec![0.0; n_real]; m];
    let mut b = vec![0.0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            a[i][j] += v;
        }
        if let Some(s) = slack_col[i] {
            a[i][s] = if row.sense == Sense::Le { 1.0 } else { -1.0 };
        }
        b[i] = row.rhs;
        if b[i] < 0.0 {
            a[i].iter_mut().for_each(|v| *v = -*v);
            b[i] = -b[i];
        }
    }

    // Initial basis: a slack with +1 coefficient where possible, else an artificial.
    let mut basis = vec![0; m];
    let mut n_art = 0;
    for i in 0..m {
        match slack_col[i] {
            Some(s) if a[i][s] == 1.0 => basis[i] = s,
            _ => {
                basis[i] = n_real + n_art;
                n_art += 1;
            }
        }
    }

    let width = n_real + n_art + 1;
    let mut cells = vec![0.0; m * width];
    let mut obj1 = vec![0.0; width];
    let mut obj2 = vec![0.0; width];
    for i in 0..m {
        let row = &mut cells[i * width..(i + 1) * width];
        row[..n_real].copy_from_slice(&a[i]);
        row[width - 1] = b[i];
        if basis[i] >= n_real {
            row[basis[i]] = 1.0;
            // Phase 1 maximizes -Σ artificials.
            for j in 0..n_real {
                obj1[j] -= a[i][j];
            }
            obj1[width - 1] -= b[i];
        }
    }
    for j in 0..n {
        obj2[j] = -lp.objective[j];
    }

    let mut t = Tableau {
        m,
        width,
        cells,
        obj: [obj1, obj2],
        basis,
        active: vec![true; m],
        n_real,
        scratch: vec![0.0; width],
        nonzeros: Vec::with_capacity(width),
    };

    let mut iterations = 0;
    if !crash.is_empty() {
        for &(i, j) in crash {
            assert!(i < m && j < n, "crash pair ({i}, {j}) out of range");
            if t.at(i, j).abs() > opts.pivot_tol {
                t.pivot(i, j);
                iterations += 1;
            }
        }
        if !t.repair_after_crash(&slack_col, opts) {
            return solve_with_basis(lp, opts, &[]);
        }
        t.recompute_objectives(&lp.objective);
    }
    if t.basis.iter().any(|&j| j >= n_real) {
        t.run_phase(0, n_real, opts, &mut iterations)?;
        let residual = -t.obj[0][width - 1];
        if residual > opts.feasibility_tol {
            return Err(SimplexError::Infeasible { residual });
        }
        for i in 0..m {
            if t.basis[i] < t.n_real {
                continue;
            }
            let pick = (0..t.n_real)
                .map(|j| (j, t.at(i, j).abs()))
                .filter(|&(_, v)| v > opts.pivot_tol)
                .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)));
            match pick {
                Some((j, _)) => {
                    t.pivot(i, j);
                    iterations += 1;
                }
                None => t.active[i] = false,
            }
        }
    }
    t.run_phase(1, n_real, opts, &mut iterations)?;

    let mut x_full = vec![0.0; n_real];
    let rows: Vec<usize> = (0..m).filter(|&i| t.active[i]).collect();
    let refined = refine_basic_solution(&a, &b, &rows, &t.basis);
    for (k, &i) in rows.iter().enumerate() {
        let value = match &refined {
            Some(v) => v[k],
            None => t.rhs(i),
        };
        x_full[t.basis[i]] = value.max(0.0);
    }
    let x: Vec<f64> = x_full[..n].to_vec();
    let objective = x.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
    Ok(SimplexSolution { x, objective, iterations })
}

/// Solves `B x_B = b` on the active rows with the final basis.
fn refine_basic_solution(a: &[Vec<f64>], b: &[f64], rows: &[usize], basis: &[usize]) -> Option<Vec<f64>> {
    let k = rows.len();
    let mut bm = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for (r, &i) in rows.iter().enumerate() {
        rhs[r] = b[i];
        for (c, &bi) in rows.iter().enumerate() {
            bm[(r, c)] = a[i][basis[bi]];
        }
    }
    let x = bm.lu().solve(&rhs)?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}
