//! Dense two-phase simplex for the small linear programs in this crate.
//!
//! Bland's rule is used throughout, which rules out cycling at the cost of
//! speed; problem sizes here are a few dozen variables at most.

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `maximize c·x  s.t.  rows, x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn constraint(mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> Self {
        assert_eq!(coeffs.len(), self.objective.len(), "constraint width");
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn solve(&self) -> LpOutcome {
        let n = self.objective.len();
        let m = self.rows.len();
        let slacks = self.rows.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        // Columns: originals, slacks, artificials (one per row), rhs.
        let width = n + slacks + m;
        let mut t = vec![vec![0.0; width + 1]; m + 1];
        let mut basis = vec![0usize; m];
        let mut slack_col = n;
        for (i, (coeffs, rel, rhs)) in self.rows.iter().enumerate() {
            let row = &mut t[i];
            row[..n].copy_from_slice(coeffs);
            match rel {
                Relation::Le => {
                    row[slack_col] = 1.0;
                    slack_col += 1;
                }
                Relation::Ge => {
                    row[slack_col] = -1.0;
                    slack_col += 1;
                }
                Relation::Eq => {}
            }
            row[width] = *rhs;
            if *rhs < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            row[n + slacks + i] = 1.0;
            basis[i] = n + slacks + i;
        }
        let art_start = n + slacks;

        // Phase 1: maximize -Σ artificials.
        for j in 0..=width {
            if (art_start..width).contains(&j) {
                continue;
            }
            t[m][j] = -(0..m).map(|i| t[i][j]).sum::<f64>();
        }
        if !run_simplex(&mut t, &mut basis, width) {
            unreachable!("phase one is bounded");
        }
        let scale = 1.0 + self.rows.iter().map(|(_, _, b)| b.abs()).fold(0.0, f64::max);
        if t[m][width] < -1e-9 * scale {
            return LpOutcome::Infeasible;
        }

        // Drive remaining artificials out of the basis; rows that cannot be are redundant.
        let mut dead = vec![false; m];
        for i in 0..m {
            if basis[i] >= art_start {
                match (0..art_start).find(|&j| t[i][j].abs() > EPS) {
                    Some(j) => pivot(&mut t, &mut basis, i, j),
                    None => dead[i] = true,
                }
            }
        }
        for row in t.iter_mut() {
            for v in &mut row[art_start..width] {
                *v = 0.0;
            }
        }
        for (i, d) in dead.iter().enumerate() {
            if *d {
                t[i].iter_mut().for_each(|v| *v = 0.0);
                basis[i] = usize::MAX;
            }
        }

        // Phase 2 objective row: r_j = Σ c_B t_ij - c_j.
        let cost = |j: usize| if j < n { self.objective[j] } else { 0.0 };
        for j in 0..=width {
            let mut r = if j < width { -cost(j) } else { 0.0 };
            for i in 0..m {
                if basis[i] != usize::MAX {
                    r += cost(basis[i]) * t[i][j];
                }
            }
            t[m][j] = r;
        }
        if !run_simplex_limited(&mut t, &mut basis, art_start, width) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; n];
        for i in 0..m {
            if basis[i] < n {
                x[basis[i]] = t[i][width];
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}

fn run_simplex(t: &mut [Vec<f64>], basis: &mut [usize], width: usize) -> bool {
    run_simplex_limited(t, basis, width, width)
}

/// Pivots until optimal; only columns `< enter_limit` may enter. Returns false if unbounded.
fn run_simplex_limited(t: &mut [Vec<f64>], basis: &mut [usize], enter_limit: usize, width: usize) -> bool {
    let m = basis.len();
    loop {
        let Some(j) = (0..enter_limit).find(|&j| t[m][j] < -EPS) else {
            return true;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if basis[i] == usize::MAX || t[i][j] <= EPS {
                continue;
            }
            let ratio = t[i][width] / t[i][j];
            let better = match leave {
                None => true,
                Some(l) => ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[l]),
            };
            if better {
                best = ratio;
                leave = Some(i);
            }
        }
        match leave {
            Some(i) => pivot(t, basis, i, j),
            None => return false,
        }
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    t[r].iter_mut().for_each(|v| *v /= p);
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[c];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    basis[r] = c;
}
