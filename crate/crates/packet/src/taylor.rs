//! Taylor-mode differentiation of `|xi|^p` about `(k, 0)`.
//!
//! Writing `xi = (k + a, b)`, the homogeneous degree-`j` part `S_j(a, b)` of
//! the expansion is produced by the power-rule recurrence on
//! `u = k^2 + 2 k a + (a^2 + b^2)`, one polynomial per degree.

/// Homogeneous polynomial: `c[e]` multiplies `a^{deg - e} b^e`.
#[derive(Clone, Debug, PartialEq)]
pub struct Homog {
    pub c: Vec<f64>,
}

impl Homog {
    pub fn zero(deg: usize) -> Self {
        Self { c: vec![0.0; deg + 1] }
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn mul(&self, o: &Homog) -> Homog {
        let mut out = Homog::zero(self.degree() + o.degree());
        for (i, x) in self.c.iter().enumerate() {
            for (j, y) in o.c.iter().enumerate() {
                out.c[i + j] += x * y;
            }
        }
        out
    }

    fn axpy(&mut self, s: f64, o: &Homog) {
        for (x, y) in self.c.iter_mut().zip(&o.c) {
            *x += s * y;
        }
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let d = self.degree() as i32;
        self.c.iter().enumerate().fold(0.0, |acc, (e, &c)| acc + c * a.powi(d - e as i32) * b.powi(e as i32))
    }
}

/// `S_0 .. S_degree` of `|(k + a, b)|^p`.
#[derive(Clone, Debug)]
pub struct SymbolTaylor {
    pub k: f64,
    pub p: f64,
    pub parts: Vec<Homog>,
}

impl SymbolTaylor {
    pub fn new(k: f64, p: f64, degree: usize) -> Self {
        let alpha = p / 2.0;
        let u0 = k * k;
        let u1 = Homog { c: vec![2.0 * k, 0.0] };
        let u2 = Homog { c: vec![1.0, 0.0, 1.0] };
        let mut g: Vec<Homog> = vec![Homog { c: vec![u0.powf(alpha)] }];
        for j in 1..=degree {
            // j u0 G_j = sum_{i=1,2} (alpha i - (j - i)) U_i G_{j-i}
            let mut acc = Homog::zero(j);
            let w1 = alpha - (j as f64 - 1.0);
            acc.axpy(w1, &u1.mul(&g[j - 1]));
            if j >= 2 {
                let w2 = 2.0 * alpha - (j as f64 - 2.0);
                acc.axpy(w2, &u2.mul(&g[j - 2]));
            }
            for c in acc.c.iter_mut() {
                *c /= j as f64 * u0;
            }
            g.push(acc);
        }
        Self { k, p, parts: g }
    }

    pub fn degree(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn part(&self, j: usize, a: f64, b: f64) -> f64 {
        self.parts[j].eval(a, b)
    }

    /// Truncated sum `sum_{j <= degree} eps^j S_j(eta)`.
    pub fn truncated(&self, eps: f64, a: f64, b: f64) -> f64 {
        self.parts.iter().enumerate().rev().fold(0.0, |acc, (_, h)| acc * eps + h.eval(a, b))
    }
}
