//! One-vs-rest L2-regularized logistic regression.

pub const L2_PENALTY: f64 = 1e-3;
pub const MAX_ITER: usize = 400;
const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub objective: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the gradient vanished;
    /// the best iterate is returned regardless.
    pub converged: bool,
}

fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 { -(-z).exp().ln_1p() } else { z - z.exp().ln_1p() }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    lambda: f64,
}

impl Problem<'_> {
    /// Mean log-likelihood minus the L2 penalty on the weights.
    fn objective(&self, w: &[f64], b: f64) -> f64 {
        let n = self.x.len() as f64;
        let ll: f64 = self
            .x
            .iter()
            .zip(self.y)
            .map(|(x, &y)| {
                let z = b + dot(w, x);
                if y { log_sigmoid(z) } else { log_sigmoid(-z) }
            })
            .sum();
        ll / n - 0.5 * self.lambda * dot(w, w)
    }

    fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.x.len() as f64;
        let mut gw = vec![0.0; w.len()];
        let mut gb = 0.0;
        for (x, &y) in self.x.iter().zip(self.y) {
            let r = (y as u8 as f64) - sigmoid(b + dot(w, x));
            gb += r;
            for (g, v) in gw.iter_mut().zip(x) {
                *g += r * v;
            }
        }
        for (g, wi) in gw.iter_mut().zip(w) {
            *g = *g / n - self.lambda * wi;
        }
        (gw, gb / n)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Curvature pairs kept by the quasi-Newton direction.
const HISTORY: usize = 10;

/// Fits `P(y = 1 | x) = sigmoid(b + w . x)` by ascent along limited-memory
/// quasi-Newton directions with backtracking; the intercept is the last
/// coordinate and is not penalized.
pub fn fit(x: &[Vec<f64>], y: &[bool], lambda: f64, max_iter: usize) -> LogisticFit {
    let dim = x.first().map_or(0, |r| r.len());
    let p = Problem { x, y, lambda };
    let pos = y.iter().filter(|v| **v).count() as f64;
    let n = y.len() as f64;
    // start at the base-rate intercept
    let mut theta = vec![0.0; dim + 1];
    theta[dim] = if pos > 0.0 && pos < n { (pos / (n - pos)).ln() } else { 0.0 };
    let eval = |t: &[f64]| p.objective(&t[..dim], t[dim]);
    let grad = |t: &[f64]| {
        let (mut g, gb) = p.gradient(&t[..dim], t[dim]);
        g.push(gb);
        g
    };
    let mut f = eval(&theta);
    let mut g = grad(&theta);
    let mut hist: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = std::collections::VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < GRAD_TOL {
            converged = true;
            break;
        }
        // two-loop recursion on the negated objective, returned as an
        // ascent direction
        let mut d = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, yv, rho) in hist.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(yv) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = hist.back().map_or(1.0 / g.iter().fold(1.0f64, |m, v| m.max(v.abs())), |(s, yv, _)| {
            dot(s, yv) / dot(yv, yv)
        });
        for v in d.iter_mut() {
            *v *= gamma;
        }
        for ((s, yv, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let bcoef = rho * dot(yv, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - bcoef) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if slope <= 0.0 {
            hist.clear();
            d = g.clone();
            slope = dot(&g, &g);
        }
        let mut step = 1.0;
        let accepted = loop {
            let t2: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di).collect();
            let f2 = eval(&t2);
            if f2 >= f + 1e-4 * step * slope {
                break Some((t2, f2));
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        iterations += 1;
        let Some((t2, f2)) = accepted else {
            converged = true;
            break;
        };
        let g2 = grad(&t2);
        // curvature pair of the negated objective
        let s: Vec<f64> = t2.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g.iter().zip(&g2).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if hist.len() == HISTORY {
                hist.pop_front();
            }
            hist.push_back((s, yv, 1.0 / sy));
        }
        theta = t2;
        f = f2;
        g = g2;
    }
    let b = theta.pop().unwrap_or(0.0);
    LogisticFit { weights: theta, intercept: b, objective: f, iterations, converged }
}
