//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are stated as
//!
//! ```text
//! minimize cᵀx  subject to  a_iᵀx {≤, ≥, =} b_i,  l ≤ x ≤ u
//! ```
//!
//! with possibly infinite bounds. Constraint duals follow the shadow-price
//! convention `y_i = ∂(optimal value)/∂b_i`, so at an optimum
//! `cᵀx = bᵀy + dᵀx` with reduced costs `d = c − Aᵀy`.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub sense: Sense,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    /// One multiplier per constraint (shadow prices).
    pub duals: Vec<T>,
    /// `c − Aᵀy`; the multipliers of the variable bounds.
    pub reduced_costs: Vec<T>,
    pub objective: T,
    pub pivots: usize,
    /// Optimal basis, reusable as a warm start; empty unless optimal.
    pub basis: Vec<BasisEntry>,
}

/// A basic variable, named independently of the internal column layout.
///
/// Rows are numbered with the constraints first, followed by one row per
/// variable that has two finite bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisEntry {
    /// A structural variable; `negative` selects the negative part of a free variable.
    Var { index: usize, negative: bool },
    Slack(usize),
    Artificial(usize),
}

impl<T: Real> LinearProgram<T> {
    /// `x ≥ 0` on every variable, no constraints yet.
    pub fn new(objective: Vec<T>) -> Self {
        let n = objective.len();
        Self { objective, constraints: Vec::new(), lower: vec![T::zero(); n], upper: vec![T::infinity(); n] }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, sense: Sense, rhs: T) -> &mut Self {
        self.constraints.push(Constraint { coeffs, sense, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: T, upper: T) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    fn check(&self) {
        let n = self.n_vars();
        assert_eq!(self.lower.len(), n, "lower bounds length");
        assert_eq!(self.upper.len(), n, "upper bounds length");
        for (i, c) in self.constraints.iter().enumerate() {
            assert_eq!(c.coeffs.len(), n, "constraint {i} has wrong width");
        }
        for j in 0..n {
            assert!(self.lower[j] <= self.upper[j], "variable {j} has lower > upper");
        }
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for c in &self.constraints {
            let lhs: T = c.coeffs.iter().zip(x).map(|(&a, &v)| a * v).sum();
            let v = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

/// How one original variable maps onto non-negative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = shift + x'`.
    Shifted { col: usize, shift_idx: usize },
    /// `x = upper − x'`.
    Mirrored { col: usize },
    /// `x = x⁺ − x⁻`.
    Split { pos: usize, neg: usize },
}

/// Pivots between refactorizations of the tableau from the original data.
const REINVERT_EVERY: usize = 64;

struct Tableau<T> {
    rows: usize,
    cols: usize,
    /// Row-major `rows × cols` constraint block.
    a: Vec<T>,
    b: Vec<T>,
    a0: Vec<T>,
    b0: Vec<T>,
    basis: Vec<usize>,
    tol: T,
    pivots: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl<T: Real> Tableau<T> {
    fn new(rows: usize, cols: usize, a: Vec<T>, b: Vec<T>, basis: Vec<usize>, tol: T) -> Self {
        Self { rows, cols, a0: a.clone(), b0: b.clone(), a, b, basis, tol, pivots: 0 }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.a[i * self.cols + j]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let inv = T::one() / self.at(r, c);
        for j in 0..cols {
            self.a[r * cols + j] *= inv;
        }
        self.b[r] *= inv;
        self.a[r * cols + c] = T::one();
        let (pivot_row, br) = (self.a[r * cols..(r + 1) * cols].to_vec(), self.b[r]);
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + c];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.a[i * cols..(i + 1) * cols];
            for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            row[c] = T::zero();
            self.b[i] -= f * br;
        }
        for x in &mut self.b {
            if *x < T::zero() && *x > -self.tol {
                *x = T::zero();
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Recomputes `B⁻¹A` and `B⁻¹b` from the original data for the current
    /// basis. Leaves the tableau untouched and returns false if the basis
    /// looks singular.
    fn reinvert(&mut self) -> bool {
        let (m, cols) = (self.rows, self.cols);
        let width = m + cols + 1;
        let mut w = vec![T::zero(); m * width];
        for i in 0..m {
            for (k, &bv) in self.basis.iter().enumerate() {
                w[i * width + k] = self.a0[i * cols + bv];
            }
            w[i * width + m..i * width + m + cols].copy_from_slice(&self.a0[i * cols..(i + 1) * cols]);
            w[i * width + m + cols] = self.b0[i];
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| w[x * width + c].abs().partial_cmp(&w[y * width + c].abs()).unwrap())
                .expect("non-empty range");
            if w[p * width + c].abs() <= self.tol {
                return false;
            }
            if p != c {
                for j in 0..width {
                    w.swap(p * width + j, c * width + j);
                }
            }
            let inv = T::one() / w[c * width + c];
            for j in 0..width {
                w[c * width + j] *= inv;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = w[i * width + c];
                if f == T::zero() {
                    continue;
                }
                for j in 0..width {
                    let v = w[c * width + j];
                    w[i * width + j] -= f * v;
                }
            }
        }
        for i in 0..m {
            self.a[i * cols..(i + 1) * cols].copy_from_slice(&w[i * width + m..i * width + m + cols]);
            let bi = w[i * width + m + cols];
            self.b[i] = if bi < T::zero() && bi > -self.tol { T::zero() } else { bi };
        }
        for (i, &bv) in self.basis.iter().enumerate() {
            for k in 0..m {
                self.a[k * cols + bv] = if k == i { T::one() } else { T::zero() };
            }
        }
        true
    }

    /// Reduced-cost row for costs `c` under the current basis, and `−c_Bᵀb`.
    fn reduced_costs(&self, c: &[T]) -> (Vec<T>, T) {
        let mut row = c.to_vec();
        let mut rhs = T::zero();
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = c[bv];
            if cb == T::zero() {
                continue;
            }
            for j in 0..self.cols {
                row[j] -= cb * self.at(i, j);
            }
            rhs -= cb * self.b[i];
        }
        (row, rhs)
    }

    /// Primal simplex minimizing `cost`; columns with `allowed[j] == false`
    /// never enter. Prices by most negative reduced cost and falls back to
    /// Bland's rule (lowest index enters, lowest basic index leaves on ties)
    /// while pivots are degenerate, which rules out cycling.
    fn run(&mut self, cost: &[T], allowed: &[bool]) -> (PhaseOutcome, Vec<T>, T) {
        let mut bland = false;
        let (mut row, mut rhs) = self.reduced_costs(cost);
        let mut since_reinvert = 0;
        loop {
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                (row, rhs) = self.reduced_costs(cost);
                since_reinvert = 0;
            }
            let candidates = (0..self.cols).filter(|&j| allowed[j] && row[j] < -self.tol);
            let enter = if bland {
                candidates.min()
            } else {
                candidates.min_by(|&x, &y| row[x].partial_cmp(&row[y]).unwrap())
            };
            let Some(enter) = enter else {
                return (PhaseOutcome::Optimal, row, rhs);
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows {
                let aij = self.at(i, enter);
                if aij <= self.tol {
                    continue;
                }
                let ratio = self.b[i] / aij;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let better = if ratio != best {
                            ratio < best
                        } else if bland {
                            self.basis[i] < self.basis[r]
                        } else {
                            aij > self.at(r, enter)
                        };
                        if better {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((r, step)) = leave else {
                return (PhaseOutcome::Unbounded, row, rhs);
            };
            bland = step <= self.tol;
            let f = row[enter];
            self.pivot(r, enter);
            let cols = self.cols;
            for (x, &pr) in row.iter_mut().zip(&self.a[r * cols..(r + 1) * cols]) {
                *x -= f * pr;
            }
            row[enter] = T::zero();
            rhs -= f * self.b[r];
            since_reinvert += 1;
        }
    }
}

/// Solves a linear program with the two-phase simplex method.
///
/// # Panics
///
/// Panics on inconsistent dimensions or a variable with `lower > upper`.
pub fn solve_lp<T: Real>(lp: &LinearProgram<T>) -> LpSolution<T> {
    solve_lp_warm(lp, None)
}

/// [`solve_lp`] starting phase 2 from `warm` when that basis is
/// nonsingular and primal feasible for `lp`; otherwise solves from scratch.
/// A basis returned for a problem stays feasible after adding columns or
/// changing costs.
pub fn solve_lp_warm<T: Real>(lp: &LinearProgram<T>, warm: Option<&[BasisEntry]>) -> LpSolution<T> {
    lp.check();
    let n = lp.n_vars();
    let tol = T::tol(1e-9);

    // Standard-form columns for the structural variables.
    let mut maps = Vec::with_capacity(n);
    let mut shifts: Vec<T> = Vec::new();
    let mut col_cost: Vec<T> = Vec::new();
    let mut col_src: Vec<(usize, T)> = Vec::new(); // (original var, sign)
    let mut bound_rows: Vec<(usize, T)> = Vec::new(); // (column, width)
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let c = lp.objective[j];
        if lo.is_finite() {
            let col = col_cost.len();
            col_cost.push(c);
            col_src.push((j, T::one()));
            maps.push(VarMap::Shifted { col, shift_idx: shifts.len() });
            shifts.push(lo);
            if hi.is_finite() {
                bound_rows.push((col, hi - lo));
            }
        } else if hi.is_finite() {
            let col = col_cost.len();
            col_cost.push(-c);
            col_src.push((j, -T::one()));
            maps.push(VarMap::Mirrored { col });
        } else {
            let pos = col_cost.len();
            col_cost.push(c);
            col_src.push((j, T::one()));
            col_cost.push(-c);
            col_src.push((j, -T::one()));
            maps.push(VarMap::Split { pos, neg: pos + 1 });
        }
    }
    let n_struct = col_cost.len();
    let offset_of = |j: usize| -> T {
        match maps[j] {
            VarMap::Shifted { shift_idx, .. } => shifts[shift_idx],
            VarMap::Mirrored { .. } => lp.upper[j],
            VarMap::Split { .. } => T::zero(),
        }
    };

    // Rows: original constraints then finite-width bound rows, normalized to rhs ≥ 0.
    struct Row<T> {
        coeffs: Vec<T>,
        sense: Sense,
        rhs: T,
        flipped: bool,
    }
    let mut rows: Vec<Row<T>> = Vec::with_capacity(lp.constraints.len() + bound_rows.len());
    for con in &lp.constraints {
        let mut coeffs = vec![T::zero(); n_struct];
        let mut rhs = con.rhs;
        for (col, &(j, sign)) in col_src.iter().enumerate() {
            coeffs[col] = con.coeffs[j] * sign;
        }
        for j in 0..n {
            rhs -= con.coeffs[j] * offset_of(j);
        }
        rows.push(Row { coeffs, sense: con.sense, rhs, flipped: false });
    }
    for &(col, width) in &bound_rows {
        let mut coeffs = vec![T::zero(); n_struct];
        coeffs[col] = T::one();
        rows.push(Row { coeffs, sense: Sense::Le, rhs: width, flipped: false });
    }
    for row in &mut rows {
        let flip = row.rhs < T::zero() || (row.rhs == T::zero() && row.sense == Sense::Ge);
        if flip {
            row.coeffs.iter_mut().for_each(|a| *a = -*a);
            row.rhs = -row.rhs;
            row.sense = match row.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
            row.flipped = true;
        }
    }

    // Column layout: structural | slack/surplus | artificial.
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.sense != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.sense != Sense::Le).count();
    let cols = n_struct + n_slack + n_art;
    let mut a = vec![T::zero(); m * cols];
    let mut b = vec![T::zero(); m];
    let mut basis = vec![0; m];
    let mut unit_col = vec![0; m];
    let mut is_art = vec![false; cols];
    let mut roles: Vec<BasisEntry> = Vec::with_capacity(cols);
    for j in 0..n {
        match maps[j] {
            VarMap::Shifted { .. } | VarMap::Mirrored { .. } => roles.push(BasisEntry::Var { index: j, negative: false }),
            VarMap::Split { .. } => {
                roles.push(BasisEntry::Var { index: j, negative: false });
                roles.push(BasisEntry::Var { index: j, negative: true });
            }
        }
    }
    roles.resize(cols, BasisEntry::Slack(0));
    let (mut next_slack, mut next_art) = (n_struct, n_struct + n_slack);
    for (i, row) in rows.iter().enumerate() {
        a[i * cols..i * cols + n_struct].copy_from_slice(&row.coeffs);
        b[i] = row.rhs;
        match row.sense {
            Sense::Le => {
                a[i * cols + next_slack] = T::one();
                roles[next_slack] = BasisEntry::Slack(i);
                basis[i] = next_slack;
                unit_col[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                a[i * cols + next_slack] = -T::one();
                roles[next_slack] = BasisEntry::Slack(i);
                next_slack += 1;
                a[i * cols + next_art] = T::one();
                roles[next_art] = BasisEntry::Artificial(i);
                is_art[next_art] = true;
                basis[i] = next_art;
                unit_col[i] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                a[i * cols + next_art] = T::one();
                roles[next_art] = BasisEntry::Artificial(i);
                is_art[next_art] = true;
                basis[i] = next_art;
                unit_col[i] = next_art;
                next_art += 1;
            }
        }
    }
    let mut tab = Tableau::new(m, cols, a, b, basis, tol);

    let infeasible = |tab: &Tableau<T>| LpSolution {
        status: LpStatus::Infeasible,
        x: vec![T::nan(); n],
        duals: vec![T::nan(); lp.constraints.len()],
        reduced_costs: vec![T::nan(); n],
        objective: T::nan(),
        pivots: tab.pivots,
        basis: Vec::new(),
    };

    let warm_ok = warm.is_some_and(|entries| {
        if entries.len() != m {
            return false;
        }
        let lookup: std::collections::HashMap<BasisEntry, usize> =
            roles.iter().enumerate().map(|(c, &r)| (r, c)).collect();
        let Some(cols_in) = entries.iter().map(|e| lookup.get(e).copied()).collect::<Option<Vec<_>>>() else {
            return false;
        };
        let mut seen = vec![false; cols];
        if cols_in.iter().any(|&c| std::mem::replace(&mut seen[c], true)) {
            return false;
        }
        let cold_basis = std::mem::replace(&mut tab.basis, cols_in);
        let scale = T::one() + tab.b0.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        let feasible = tab.reinvert()
            && tab.b.iter().all(|&x| x >= -tol * scale)
            && tab.basis.iter().zip(&tab.b).all(|(&bv, &x)| !is_art[bv] || x.abs() <= tol * scale);
        if !feasible {
            tab.basis = cold_basis;
            tab.a.copy_from_slice(&tab.a0);
            tab.b.copy_from_slice(&tab.b0);
        }
        feasible
    });

    // Phase 1.
    if n_art > 0 && !warm_ok {
        let phase1_cost: Vec<T> = (0..cols).map(|j| if is_art[j] { T::one() } else { T::zero() }).collect();
        tab.run(&phase1_cost, &vec![true; cols]);
        tab.reinvert();
        let residual = tab
            .basis
            .iter()
            .zip(&tab.b)
            .filter(|(&bv, _)| is_art[bv])
            .fold(T::zero(), |acc, (_, &x)| acc + x.abs());
        let scale = T::one() + tab.b0.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        if residual > tol * scale {
            return infeasible(&tab);
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if !is_art[tab.basis[i]] {
                continue;
            }
            let best = (0..cols)
                .filter(|&j| !is_art[j])
                .max_by(|&x, &y| tab.at(i, x).abs().partial_cmp(&tab.at(i, y).abs()).unwrap());
            if let Some(j) = best.filter(|&j| tab.at(i, j).abs() > tol) {
                tab.pivot(i, j);
            }
        }
    }

    // Phase 2.
    let mut cost = vec![T::zero(); cols];
    cost[..n_struct].copy_from_slice(&col_cost);
    let allowed: Vec<bool> = (0..cols).map(|j| !is_art[j]).collect();
    if let (PhaseOutcome::Unbounded, _, _) = tab.run(&cost, &allowed) {
        return LpSolution {
            status: LpStatus::Unbounded,
            x: vec![T::nan(); n],
            duals: vec![T::nan(); lp.constraints.len()],
            reduced_costs: vec![T::nan(); n],
            objective: T::neg_infinity(),
            pivots: tab.pivots,
            basis: Vec::new(),
        };
    }
    tab.reinvert();
    let (row, _) = tab.reduced_costs(&cost);

    let mut xs = vec![T::zero(); cols];
    for (i, &bv) in tab.basis.iter().enumerate() {
        xs[bv] = tab.b[i];
    }
    let x: Vec<T> = (0..n)
        .map(|j| match maps[j] {
            VarMap::Shifted { col, shift_idx } => shifts[shift_idx] + xs[col],
            VarMap::Mirrored { col } => lp.upper[j] - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();

    // Shadow prices: the reduced cost of row i's initial unit column is −y_i.
    let duals: Vec<T> = (0..lp.constraints.len())
        .map(|i| {
            let y = -row[unit_col[i]];
            if rows[i].flipped {
                -y
            } else {
                y
            }
        })
        .collect();
    let reduced_costs: Vec<T> = (0..n)
        .map(|j| {
            lp.objective[j]
                - lp.constraints.iter().zip(&duals).map(|(c, &y)| c.coeffs[j] * y).sum::<T>()
        })
        .collect();
    let objective = lp.objective.iter().zip(&x).map(|(&c, &v)| c * v).sum();
    let basis = tab.basis.iter().map(|&c| roles[c]).collect();
    LpSolution { status: LpStatus::Optimal, x, duals, reduced_costs, objective, pivots: tab.pivots, basis }
}
