#![allow(dead_code)]

pub mod oracles;

use disco::scoring::SampleDistributionStack;
use disco::store::Population;
use disco::synth::{generate_population, SynthConfig};
use rand::Rng;

/// Random probability vector; some entries are exactly zero.
pub fn random_simplex<R: Rng>(rng: &mut R, c: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..c)
        .map(|_| {
            if rng.random_bool(0.15) {
                0.0
            } else {
                -rng.random::<f64>().max(1e-300).ln()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.random_range(0..c)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

pub fn random_stack<R: Rng>(rng: &mut R, m: usize, c: usize) -> SampleDistributionStack {
    let rows: Vec<Vec<f64>> = (0..m).map(|_| random_simplex(rng, c)).collect();
    SampleDistributionStack::new(&rows).unwrap()
}

pub fn small_config(seed: u64, models: usize, samples: usize, classes: usize) -> SynthConfig {
    SynthConfig {
        models,
        samples,
        classes,
        seed,
        ..SynthConfig::default()
    }
}

pub fn small_population(seed: u64, models: usize, samples: usize, classes: usize) -> Population {
    generate_population(&small_config(seed, models, samples, classes)).unwrap()
}

/// Entropy in bits, written out without library helpers.
pub fn naive_entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &x in p {
        if x > 0.0 {
            h -= x * x.log2();
        }
    }
    h
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
