#![allow(dead_code)]

use dgrod::assembly::Coefficients;
use dgrod::scalar::Point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Constant b and c with a user-supplied source and boundary data.
pub struct Fields<F, G> {
    pub b: [f64; 2],
    pub c: f64,
    pub f: F,
    pub g: G,
}

impl<F: Fn(Point<f64>) -> f64, G: Fn(Point<f64>) -> f64> Coefficients<f64> for Fields<F, G> {
    fn advection(&self, _: Point<f64>) -> [f64; 2] {
        self.b
    }
    fn reaction(&self, _: Point<f64>) -> f64 {
        self.c
    }
    fn source(&self, p: Point<f64>) -> f64 {
        (self.f)(p)
    }
    fn dirichlet(&self, p: Point<f64>) -> f64 {
        (self.g)(p)
    }
}

pub fn zero(_: Point<f64>) -> f64 {
    0.0
}

pub fn fields(b: [f64; 2], c: f64) -> Fields<fn(Point<f64>) -> f64, fn(Point<f64>) -> f64> {
    Fields { b, c, f: zero, g: zero }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
