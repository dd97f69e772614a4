#![allow(dead_code)]

use ecomal::ModelData;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn white_noise(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    let d = Normal::new(0.0, sigma).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

pub fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(n);
    let mut prev = 0.0;
    for _ in 0..n {
        let e: f64 = rng.sample(StandardNormal);
        prev = phi * prev + e;
        x.push(prev);
    }
    x
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Known ARDL data-generating process; regressors are AR(1) with coefficient 0.5.
pub struct Process {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub sigma: f64,
}

impl Process {
    pub fn simulate(&self, seed: u64, n: usize) -> ModelData {
        let burn = 200;
        let mut r = rng(seed);
        let total = n + burn;
        let eco = ar1(&mut r, total, 0.5);
        let adv = ar1(&mut r, total, 0.5);
        let art = ar1(&mut r, total, 0.5);
        let noise = white_noise(&mut r, total, self.sigma);
        let mut y = vec![0.0; total];
        let lagged = |x: &[f64], c: &[f64], t: usize| -> f64 {
            c.iter()
                .enumerate()
                .filter(|(j, _)| *j <= t)
                .map(|(j, c)| c * x[t - j])
                .sum()
        };
        for t in 0..total {
            let ar: f64 = self
                .beta
                .iter()
                .enumerate()
                .filter(|(j, _)| *j < t)
                .map(|(j, b)| b * y[t - j - 1])
                .sum();
            y[t] = self.alpha
                + ar
                + lagged(&eco, &self.gamma, t)
                + lagged(&adv, &self.phi, t)
                + lagged(&art, &self.rho, t)
                + noise[t];
        }
        ModelData::new(
            y[burn..].to_vec(),
            eco[burn..].to_vec(),
            adv[burn..].to_vec(),
            art[burn..].to_vec(),
        )
        .unwrap()
    }
}

/// Brute-force double-loop autocorrelation, biased estimator.
pub fn brute_acf(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mut mean = 0.0;
    for v in x {
        mean += v;
    }
    mean /= n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 0..n {
        den += (x[t] - mean) * (x[t] - mean);
        if t + lag < n {
            num += (x[t] - mean) * (x[t + lag] - mean);
        }
    }
    num / den
}

/// OLS by normal equations and Gauss-Jordan elimination. Returns
/// (coefficients, classical standard errors).
pub fn normal_equations(y: &[f64], x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let k = x[0].len();
    let mut a = vec![vec![0.0; 2 * k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = (0..n).map(|t| x[t][i] * x[t][j]).sum();
        }
        a[i][k + i] = 1.0;
        a[i][2 * k] = (0..n).map(|t| x[t][i] * y[t]).sum();
    }
    for c in 0..k {
        let p = (c..k)
            .max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs()))
            .unwrap();
        a.swap(c, p);
        let piv = a[c][c];
        for v in a[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..k {
            if r != c {
                let f = a[r][c];
                let row = a[c].clone();
                for (v, w) in a[r].iter_mut().zip(row) {
                    *v -= f * w;
                }
            }
        }
    }
    let b: Vec<f64> = (0..k).map(|i| a[i][2 * k]).collect();
    let rss: f64 = (0..n)
        .map(|t| {
            let fit: f64 = (0..k).map(|i| x[t][i] * b[i]).sum();
            (y[t] - fit).powi(2)
        })
        .sum();
    let s2 = rss / (n - k) as f64;
    let se = (0..k).map(|i| (s2 * a[i][k + i]).sqrt()).collect();
    (b, se)
}
