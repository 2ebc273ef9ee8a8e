//! Bounded-variable primal simplex on a dense tableau.
//!
//! Every row gets a slack (`a x + s = b`) whose bounds encode the sense, so the
//! working problem is all equalities over boxed columns. Rows whose slack cannot
//! absorb the initial residual receive an artificial column; phase 1 drives those
//! to zero, phase 2 optimizes the real costs with artificials fixed at zero.
//! Pricing is Dantzig's rule until a run of degenerate pivots is seen, after which
//! the phase finishes under Bland's rule.

use crate::config::SolverConfig;
use crate::model::{LinearModel, Sense};
use crate::result::Status;

const PIVOT_TOL: f64 = 1e-9;
const PRICE_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Place {
    Basic,
    Lower,
    Upper,
    Free,
}

pub(crate) struct LpOutcome {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Option<Vec<f64>>,
    pub iterations: usize,
}

struct Tableau {
    m: usize,
    nc: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    place: Vec<Place>,
    value: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    b: Vec<f64>,
    /// Original (unscaled) columns for slack and artificial entries: (row, coef).
    extra_cols: Vec<(usize, f64)>,
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    iterations: usize,
}

enum StepResult {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.nc..(i + 1) * self.nc]
    }

    fn price_all(&mut self) {
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.nc..(i + 1) * self.nc];
                for (dj, &tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.d = d;
    }

    /// Recomputes basic values from the nonbasic ones using the slack block of the tableau (= B^-1).
    fn refresh_beta(&mut self) {
        let mut r = self.b.clone();
        for j in 0..self.n {
            if self.place[j] != Place::Basic && self.value[j] != 0.0 {
                for &(i, a) in &self.rows[j] {
                    r[i] -= a * self.value[j];
                }
            }
        }
        for j in self.n..self.nc {
            if self.place[j] != Place::Basic && self.value[j] != 0.0 {
                let (i, a) = self.extra_cols[j - self.n];
                r[i] -= a * self.value[j];
            }
        }
        for i in 0..self.m {
            let row = self.row(i);
            let binv = &row[self.n..self.n + self.m];
            self.beta[i] = binv.iter().zip(&r).map(|(p, q)| p * q).sum();
        }
    }

    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.nc {
            let dir = match self.place[j] {
                Place::Basic => continue,
                Place::Lower if self.d[j] < -PRICE_TOL => 1.0,
                Place::Upper if self.d[j] > PRICE_TOL => -1.0,
                Place::Free if self.d[j] < -PRICE_TOL => 1.0,
                Place::Free if self.d[j] > PRICE_TOL => -1.0,
                _ => continue,
            };
            if self.lb[j] == self.ub[j] {
                continue;
            }
            if bland {
                return Some((j, dir));
            }
            let score = self.d[j].abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(&mut self, cfg: &SolverConfig) -> StepResult {
        let mut bland = cfg.bland;
        let mut streak = 0usize;
        loop {
            if self.iterations >= cfg.iter_limit {
                return StepResult::IterationLimit;
            }
            let Some((j, dir)) = self.entering(bland) else {
                return StepResult::Optimal;
            };
            self.iterations += 1;

            let mut theta = f64::INFINITY;
            let mut leave: Option<usize> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.t[i * self.nc + j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let bv = self.basis[i];
                let rate = -dir * alpha;
                let limit = if rate < 0.0 {
                    if self.lb[bv].is_finite() {
                        ((self.beta[i] - self.lb[bv]) / -rate).max(0.0)
                    } else {
                        continue;
                    }
                } else if self.ub[bv].is_finite() {
                    ((self.ub[bv] - self.beta[i]) / rate).max(0.0)
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some(li) => {
                        if limit < theta - 1e-12 {
                            true
                        } else if limit <= theta + 1e-12 {
                            if bland {
                                bv < self.basis[li]
                            } else {
                                alpha.abs() > leave_alpha
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = limit;
                    leave = Some(i);
                    leave_alpha = alpha.abs();
                }
            }
            let flip = self.ub[j] - self.lb[j];
            if flip.is_finite() && flip <= theta {
                for i in 0..self.m {
                    let alpha = self.t[i * self.nc + j];
                    if alpha != 0.0 {
                        self.beta[i] -= dir * alpha * flip;
                    }
                }
                if dir > 0.0 {
                    self.place[j] = Place::Upper;
                    self.value[j] = self.ub[j];
                } else {
                    self.place[j] = Place::Lower;
                    self.value[j] = self.lb[j];
                }
                streak = 0;
                continue;
            }
            let Some(r) = leave else {
                return StepResult::Unbounded;
            };
            if theta < 1e-12 {
                streak += 1;
                if streak > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }

            for i in 0..self.m {
                let alpha = self.t[i * self.nc + j];
                if alpha != 0.0 {
                    self.beta[i] -= dir * alpha * theta;
                }
            }
            let entering_value = self.value[j] + dir * theta;
            let alpha_r = self.t[r * self.nc + j];
            let leaving = self.basis[r];
            let rate = -dir * alpha_r;
            if rate < 0.0 {
                self.place[leaving] = Place::Lower;
                self.value[leaving] = self.lb[leaving];
            } else {
                self.place[leaving] = Place::Upper;
                self.value[leaving] = self.ub[leaving];
            }
            self.pivot(r, j);
            self.basis[r] = j;
            self.place[j] = Place::Basic;
            self.beta[r] = entering_value;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.nc;
        let inv = 1.0 / self.t[r * nc + j];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[j] = 1.0;
        }
        let pivot_row: Vec<f64> = self.t[r * nc..(r + 1) * nc].to_vec();
        let nz: Vec<usize> = (0..nc).filter(|&k| pivot_row[k] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &k in &nz {
                row[k] -= f * pivot_row[k];
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &k in &nz {
                self.d[k] -= f * pivot_row[k];
            }
            self.d[j] = 0.0;
        }
    }
}

/// Solves the LP relaxation of `model` with column bounds `lower`/`upper`.
pub(crate) fn solve(model: &LinearModel, lower: &[f64], upper: &[f64], cfg: &SolverConfig) -> LpOutcome {
    let n = model.num_vars();
    let m = model.num_constraints();

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            cols[v.0].push((i, a));
        }
    }

    let mut value = vec![0.0; n];
    let mut place = vec![Place::Lower; n];
    for j in 0..n {
        if lower[j].is_finite() {
            value[j] = lower[j];
            place[j] = Place::Lower;
        } else if upper[j].is_finite() {
            value[j] = upper[j];
            place[j] = Place::Upper;
        } else {
            value[j] = 0.0;
            place[j] = Place::Free;
        }
    }
    let b: Vec<f64> = model.constraints.iter().map(|c| c.rhs).collect();
    let mut resid = b.clone();
    for j in 0..n {
        if value[j] != 0.0 {
            for &(i, a) in &cols[j] {
                resid[i] -= a * value[j];
            }
        }
    }

    let mut slack_lb = vec![0.0; m];
    let mut slack_ub = vec![0.0; m];
    for (i, c) in model.constraints.iter().enumerate() {
        let (l, u) = match c.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        slack_lb[i] = l;
        slack_ub[i] = u;
    }
    let mut artificial_rows: Vec<(usize, f64)> = Vec::new();
    for i in 0..m {
        let r = resid[i];
        if r < slack_lb[i] - 1e-12 || r > slack_ub[i] + 1e-12 {
            let s = r.clamp(slack_lb[i], slack_ub[i]);
            let sigma = if r - s > 0.0 { 1.0 } else { -1.0 };
            artificial_rows.push((i, sigma));
        }
    }
    let k = artificial_rows.len();
    let nc = n + m + k;

    let mut tab = Tableau {
        m,
        nc,
        t: vec![0.0; m * nc],
        beta: vec![0.0; m],
        basis: vec![0; m],
        place: Vec::with_capacity(nc),
        value: Vec::with_capacity(nc),
        lb: Vec::with_capacity(nc),
        ub: Vec::with_capacity(nc),
        cost: vec![0.0; nc],
        d: vec![0.0; nc],
        b,
        extra_cols: Vec::with_capacity(m + k),
        n,
        rows: cols,
        iterations: 0,
    };
    tab.place.extend(place);
    tab.value.extend(value);
    tab.lb.extend_from_slice(lower);
    tab.ub.extend_from_slice(upper);
    for i in 0..m {
        tab.lb.push(slack_lb[i]);
        tab.ub.push(slack_ub[i]);
        tab.extra_cols.push((i, 1.0));
    }
    let mut row_scale = vec![1.0; m];
    let mut art_of_row = vec![usize::MAX; m];
    for (a, &(i, sigma)) in artificial_rows.iter().enumerate() {
        tab.lb.push(0.0);
        tab.ub.push(f64::INFINITY);
        tab.extra_cols.push((i, sigma));
        row_scale[i] = sigma;
        art_of_row[i] = n + m + a;
    }
    for (i, c) in model.constraints.iter().enumerate() {
        let s = row_scale[i];
        let row = &mut tab.t[i * nc..(i + 1) * nc];
        for &(v, a) in &c.terms {
            row[v.0] = s * a;
        }
        row[n + i] = s;
        if art_of_row[i] != usize::MAX {
            row[art_of_row[i]] = 1.0;
        }
    }
    for i in 0..m {
        let r = resid[i];
        if art_of_row[i] != usize::MAX {
            let s = r.clamp(slack_lb[i], slack_ub[i]);
            let slack_place = if s == slack_lb[i] { Place::Lower } else { Place::Upper };
            tab.place.push(slack_place);
            tab.value.push(s);
            tab.basis[i] = art_of_row[i];
            tab.beta[i] = (r - s).abs();
        } else {
            tab.place.push(Place::Basic);
            tab.value.push(0.0);
            tab.basis[i] = n + i;
            tab.beta[i] = r;
        }
    }
    for _ in 0..k {
        tab.place.push(Place::Basic);
        tab.value.push(0.0);
    }

    if k > 0 {
        for a in 0..k {
            tab.cost[n + m + a] = 1.0;
        }
        tab.price_all();
        match tab.run(cfg) {
            StepResult::IterationLimit => return limit_outcome(tab.iterations),
            StepResult::Unbounded | StepResult::Optimal => {}
        }
        tab.refresh_beta();
        let infeas: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= n + m)
            .map(|i| tab.beta[i].max(0.0))
            .sum();
        if infeas > cfg.eps {
            return LpOutcome {
                status: Status::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                duals: None,
                iterations: tab.iterations,
            };
        }
        for a in 0..k {
            let j = n + m + a;
            tab.cost[j] = 0.0;
            tab.ub[j] = 0.0;
            if tab.place[j] != Place::Basic {
                tab.place[j] = Place::Lower;
                tab.value[j] = 0.0;
            }
        }
    }

    for (j, v) in model.variables.iter().enumerate() {
        tab.cost[j] = v.cost;
    }
    tab.price_all();
    let status = match tab.run(cfg) {
        StepResult::Optimal => Status::Optimal,
        StepResult::Unbounded => Status::Unbounded,
        StepResult::IterationLimit => return limit_outcome(tab.iterations),
    };
    if status == Status::Unbounded {
        return LpOutcome {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            duals: None,
            iterations: tab.iterations,
        };
    }
    tab.refresh_beta();
    let mut x = tab.value[..n].to_vec();
    for i in 0..m {
        let bv = tab.basis[i];
        if bv < n {
            x[bv] = tab.beta[i];
        }
    }
    for j in 0..n {
        if x[j] < lower[j] && x[j] > lower[j] - 1e-9 {
            x[j] = lower[j];
        }
        if x[j] > upper[j] && x[j] < upper[j] + 1e-9 {
            x[j] = upper[j];
        }
    }
    tab.price_all();
    let duals: Vec<f64> = (0..m).map(|i| -tab.d[n + i]).collect();
    LpOutcome {
        status,
        objective: model.objective_value(&x),
        x,
        duals: Some(duals),
        iterations: tab.iterations,
    }
}

fn limit_outcome(iterations: usize) -> LpOutcome {
    LpOutcome {
        status: Status::IterationLimit,
        x: Vec::new(),
        objective: f64::NAN,
        duals: None,
        iterations,
    }
}
