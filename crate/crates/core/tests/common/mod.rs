#![allow(dead_code)]

use std::collections::BTreeMap;

use epsaccel::sequences::{rng, take, Sequence};
use epsaccel::{Element, Form, Functional, Shape, TeaTable, TeaVariant, TopoConfig, TopoEpsTable, Variant};
use rand::Rng;

pub type Triangle = BTreeMap<(usize, usize), Element<f64>>;

/// Runs a STEA table over `terms` and collects every valid even-column element.
pub fn stea(variant: Variant, form: Form, max_k: usize, y: &Functional<f64>, terms: &[Element<f64>]) -> (Triangle, TopoEpsTable<f64>) {
    let mut t = TopoEpsTable::new(TopoConfig::new(variant, form, max_k), y.clone());
    let mut out = Triangle::new();
    for s in terms {
        for o in t.append(s.clone()).unwrap() {
            if o.valid {
                out.insert((o.k, o.n), o.element);
            }
        }
    }
    (out, t)
}

pub fn tea(variant: TeaVariant, max_k: usize, y: &Functional<f64>, terms: &[Element<f64>]) -> (Triangle, TeaTable<f64>) {
    let mut t = TeaTable::new(variant, max_k, y.clone());
    let mut out = Triangle::new();
    for s in terms {
        for o in t.append(s.clone()).unwrap() {
            if o.valid {
                out.insert((o.k, o.n), o.element);
            }
        }
    }
    (out, t)
}

pub fn rel_err(a: &Element<f64>, b: &Element<f64>) -> f64 {
    a.sub(b).unwrap().norm_inf() / b.norm_inf().max(1.0)
}

/// `S + Σ aᵢ λᵢⁿ uᵢ` with `modes` random ratios in `±[0.1, 0.95]`.
pub fn random_mixture(shape: Shape, modes: usize, seed: u64) -> Vec<Element<f64>> {
    let mut g = rng(seed, 100);
    let u = |g: &mut rand_chacha::ChaCha8Rng| Element::from_fn(shape, |_| g.gen_range(-1.0..1.0));
    let limit = u(&mut g);
    let m: Vec<(f64, f64, Element<f64>)> = (0..modes)
        .map(|_| {
            let l: f64 = g.gen_range(0.1..0.95) * if g.gen_bool(0.5) { 1.0 } else { -1.0 };
            (g.gen_range(0.5..1.5), l, u(&mut g))
        })
        .collect();
    let mut src = epsaccel::sequences::GeometricModes::new(limit, m, false).unwrap();
    take(&mut src, 12)
}

pub fn ones(shape: Shape) -> Functional<f64> {
    Functional::dot(vec![1.0; shape.len()])
}

pub fn collect(src: &mut dyn Sequence<f64>, n: usize) -> Vec<Element<f64>> {
    take(src, n)
}

/// Counts violated TM/TO inequalities on `a = 1`, `b = 0`.
pub fn tm_to_violations(tri: &Triangle, oscillating: bool, slack: f64) -> (usize, usize) {
    let mut total = 0;
    let mut bad = 0;
    let mut le = |x: &Element<f64>, z: &Element<f64>| {
        for (p, q) in x.data().iter().zip(z.data()) {
            total += 1;
            if *p > *q + slack {
                bad += 1;
            }
        }
    };
    let zero = |x: &Element<f64>| Element::zeros(x.shape());
    let e = |k: usize, n: usize| tri.get(&(k, n));
    for k in 0..=2 {
        if !oscillating {
            for n in 0..=6 {
                let (Some(a), Some(b), Some(c), Some(d)) = (e(k + 1, n), e(k, n), e(k, n + 1), e(k, n + 2)) else {
                    continue;
                };
                le(&zero(a), a);
                le(a, b);
                le(&zero(c), c);
                le(c, b);
                le(a, c);
                le(a, d);
            }
        } else {
            for n in 0..=3 {
                let (m0, m1, m2, m3) = (2 * n, 2 * n + 1, 2 * n + 2, 2 * n + 3);
                let g = |kk, nn| e(kk, nn).cloned();
                let (Some(a0), Some(b0), Some(a1), Some(b1), Some(a2), Some(b2), Some(b3)) =
                    (g(k + 1, m0), g(k, m0), g(k + 1, m1), g(k, m1), g(k + 1, m2), g(k, m2), g(k, m3))
                else {
                    continue;
                };
                let d = |x: &Element<f64>, z: &Element<f64>| x.sub(z).unwrap();
                le(&zero(&a0), &a0);
                le(&a0, &b0);
                le(&d(&b1, &b0), &d(&a1, &a0));
                le(&d(&a1, &a0), &zero(&a0));
                le(&b1, &a1);
                le(&a1, &zero(&a1));
                le(&zero(&a2), &d(&a2, &a1));
                le(&d(&a2, &a1), &d(&b2, &b1));
                le(&a0, &b2);
                le(&b3, &a1);
            }
        }
    }
    (bad, total)
}
