//! Acceptance criteria 1–11. Runs without the libtest harness and prints one
//! line per criterion; exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::*;
use epsaccel::harness::{self, Experiment, ReproduceOptions, RunReport};
use epsaccel::oracle::{shanks_scalar, shanks_topo, Transform};
use epsaccel::sequences::{rng, take, ExponentialMixture, GeometricModes, LogarithmicModes};
use epsaccel::{
    Element, Form, Functional, ScalarEpsConfig, ScalarEpsTable, Shape, TeaTable, TeaVariant, TopoConfig, TopoEpsTable,
    Variant,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

const VARIANTS: [Variant; 2] = [Variant::Stea1, Variant::Stea2];

fn kernel_exactness() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let ratios = [0.8, -0.6, 0.4, -0.2];
    for (si, shape) in [Shape::Scalar, Shape::Vector(20), Shape::Matrix(10, 10)].into_iter().enumerate() {
        for k in 1..=4 {
            let mut g = rng(si as u64 * 10 + k as u64, 7);
            let mut u = || Element::from_fn(shape, |_| g.gen_range(-1.0..1.0));
            let limit = u();
            let modes = ratios[..k].iter().map(|&l| (1.0, l, u())).collect();
            let mut src = GeometricModes::new(limit.clone(), modes, false).unwrap();
            let terms = take(&mut src, 2 * k + 4);
            let y = match shape {
                Shape::Matrix(..) => Functional::Trace,
                _ => ones(shape),
            };
            let mut check = |tri: &Triangle| {
                for n in 0..4 {
                    let e = tri.get(&(k, n)).map_or(f64::INFINITY, |x| x.sub(&limit).unwrap().norm_inf());
                    worst = worst.max(e);
                }
            };
            for v in VARIANTS {
                for f in Form::ALL {
                    check(&stea(v, f, k, &y, &terms).0);
                }
            }
            check(&tea(TeaVariant::Tea1, k, &y, &terms).0);
            check(&tea(TeaVariant::Tea2, k, &y, &terms).0);
            if shape == Shape::Scalar {
                let mut t = ScalarEpsTable::new(ScalarEpsConfig::new(2 * k));
                for s in &terms {
                    t.append(s.as_scalar().unwrap());
                }
                for n in 0..4 {
                    worst = worst.max((t.get(2 * k, n).unwrap() - limit.as_scalar().unwrap()).abs());
                }
            }
        }
    }
    let dt = secs(t0);
    outcome(worst <= 1e-8 && dt < 1.0, format!("worst column-2k error {worst:.2e} over scalar/vector 20/matrix 10x10, k=1..4 ({dt:.2} s)"))
}

fn oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let shape = Shape::Vector(4);
    let y = ones(shape);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_tol: f64 = 0.0;
    let mut compared = 0;
    for seed in 0..100 {
        let terms = random_mixture(shape, 6, seed);
        let mut tris: Vec<(Transform, Triangle)> = Vec::new();
        for v in VARIANTS {
            let tr = if v == Variant::Stea1 { Transform::First } else { Transform::Second };
            for f in Form::ALL {
                tris.push((tr, stea(v, f, 3, &y, &terms).0));
            }
        }
        tris.push((Transform::First, tea(TeaVariant::Tea1, 3, &y, &terms).0));
        tris.push((Transform::Second, tea(TeaVariant::Tea2, 3, &y, &terms).0));
        for k in 0..=3 {
            for n in 0..=3 {
                for (tr, tri) in &tris {
                    let (o, c) = shanks_topo(&terms, &y, n, k, *tr).unwrap();
                    let tol = c.tolerance().max(1e-14);
                    let e = tri.get(&(k, n)).map_or(f64::INFINITY, |x| rel_err(x, &o));
                    worst_ratio = worst_ratio.max(e / tol);
                    worst_tol = worst_tol.max(tol);
                    compared += 1;
                }
            }
        }
    }
    let dt = secs(t0);
    outcome(
        worst_ratio <= 1.0 && dt < 10.0,
        format!("{compared} comparisons, worst error/tolerance {worst_ratio:.2e}, largest tolerance {worst_tol:.1e} ({dt:.2} s)"),
    )
}

fn identity_suites() -> Outcome {
    let t0 = Instant::now();
    let (mut p2, mut p3, mut p6): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    for seed in 0..50 {
        // scalar
        let s: Vec<f64> = random_mixture(Shape::Scalar, 6, 1000 + seed).iter().map(|e| e.as_scalar().unwrap()).collect();
        let mut t = ScalarEpsTable::new(ScalarEpsConfig::new(7));
        for &x in &s {
            t.append(x);
        }
        let ds: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        for k in 0..=3 {
            for n in 0..=2 {
                let (ek, _) = shanks_scalar(&s, n, k).unwrap();
                p2 = p2.max(rel(t.get(2 * k, n).unwrap(), ek));
                if n + 2 * k < ds.len() {
                    let (edk, _) = shanks_scalar(&ds, n, k).unwrap();
                    p2 = p2.max(rel(t.get(2 * k + 1, n).unwrap(), 1.0 / edk));
                }
                if 2 * k + 1 <= 7 && n + 2 * k + 2 <= s.len() {
                    let (even, odd) = t.diagonal_sum_identities(k, n).unwrap();
                    p3 = p3.max(rel(even, t.get(2 * k, n).unwrap()));
                    p3 = p3.max(rel(odd, t.get(2 * k + 1, n).unwrap()));
                }
            }
        }
        // vector
        let shape = Shape::Vector(5);
        let terms = random_mixture(shape, 6, 2000 + seed);
        let y = Functional::dot((0..5).map(|i| 1.0 + i as f64 * 0.25).collect());
        let sv: Vec<f64> = terms.iter().map(|x| y.apply(x).unwrap()).collect();
        let mut tris: Vec<Triangle> = VARIANTS.iter().flat_map(|&v| Form::ALL.map(|f| stea(v, f, 3, &y, &terms).0)).collect();
        tris.push(tea(TeaVariant::Tea1, 3, &y, &terms).0);
        tris.push(tea(TeaVariant::Tea2, 3, &y, &terms).0);
        for k in 0..=3 {
            for n in 0..=3 {
                let (ek, _) = shanks_scalar(&sv, n, k).unwrap();
                for tri in &tris {
                    let v = tri.get(&(k, n)).map_or(f64::INFINITY, |x| y.apply(x).unwrap());
                    p6 = p6.max(rel(v, ek));
                }
            }
        }
    }
    let dt = secs(t0);
    let pass = p2 <= 1e-10 && p3 <= 1e-10 && p6 <= 1e-10;
    outcome(pass, format!("worst relative deviation: shanks {p2:.1e}, diagonal sums {p3:.1e}, projection {p6:.1e} ({dt:.2} s)"))
}

fn reports(exp: Experiment, opts: ReproduceOptions) -> Vec<RunReport> {
    harness::run_all(&harness::experiment_specs(exp, opts), None).into_iter().map(|r| r.unwrap()).collect()
}

fn find<'a>(rs: &'a [RunReport], name: &str) -> &'a RunReport {
    rs.iter().find(|r| r.name == name).unwrap()
}

fn final_norm(r: &RunReport) -> f64 {
    r.entry(5, 0).and_then(|e| e.norm_inf).unwrap_or(f64::INFINITY)
}

fn table4(p: i32) -> (Outcome, f64) {
    let t0 = Instant::now();
    let rs = reports(Experiment::Table4, ReproduceOptions { dim: Some(50), p: Some(p), seed: 0 });
    let dt = secs(t0);
    let on = find(&rs, "table4/stea2-3/rules");
    let off = find(&rs, "table4/stea2-3/norules");
    let (a, b) = (final_norm(on), final_norm(off));
    let pass = on.sigma == 2 && a <= 1e-8 && a <= 1e-6 * b && dt < 5.0;
    (outcome(pass, format!("p={p}: sigma={}, ||eps_10^(0)|| = {a:.2e} with rules vs {b:.2e} without ({dt:.2} s)", on.sigma)), dt)
}

fn table5() -> Outcome {
    let t0 = Instant::now();
    let rs = reports(Experiment::Table5, ReproduceOptions { dim: Some(50), p: Some(7), seed: 0 });
    let dt = secs(t0);
    let mut pass = dt < 20.0;
    let mut parts = Vec::new();
    for v in ["stea1-3", "stea2-3"] {
        let on = find(&rs, &format!("table5/{v}/rules"));
        let off = find(&rs, &format!("table5/{v}/norules"));
        let (a, b) = (final_norm(on), final_norm(off));
        pass &= on.sigma == 2 && a <= 1e-7 && off.sigma <= 1 && b > 1e-1;
        parts.push(format!("{v} sigma={} {a:.2e} vs {b:.2e}", on.sigma));
    }
    outcome(pass, format!("p=7: {} ({dt:.2} s)", parts.join(", ")))
}

fn truncate_at_floor(errors: &[f64], floor: f64) -> Vec<f64> {
    let end = errors.iter().position(|&e| !(e > floor)).unwrap_or(errors.len());
    errors[..end].to_vec()
}

fn geometric_rates() -> Outcome {
    let t0 = Instant::now();
    let shape = Shape::Vector(10);
    let mut g = rng(8, 8);
    let mut u = || Element::from_fn(shape, |_| g.gen_range(-1.0..1.0));
    let limit = u();
    let modes = vec![(1.0, 0.9, u()), (1.0, 0.5, u())];
    let mut src = GeometricModes::new(limit.clone(), modes, false).unwrap();
    let terms = take(&mut src, 45);
    let y = ones(shape);
    let mut pass = true;
    let mut parts = Vec::new();
    for v in VARIANTS {
        let (tri, _) = stea(v, Form::Three, 1, &y, &terms);
        let err = |k: usize| -> Vec<f64> {
            (0..).map_while(|n| tri.get(&(k, n))).map(|x| x.sub(&limit).unwrap().norm_inf()).collect()
        };
        let (e0, e1) = (err(0), err(1));
        let e1 = truncate_at_floor(&e1, 1e-11);
        let ratio: Vec<f64> = e1.iter().zip(&e0).map(|(a, b)| a / b).collect();
        let rate = harness::fit_geometric_rate(&e1).unwrap_or(f64::NAN);
        let rr = harness::fit_geometric_rate(&ratio).unwrap_or(f64::NAN);
        pass &= (rate - 0.5).abs() <= 0.05 && (rr - 0.5 / 0.9).abs() <= 0.15 * (0.5 / 0.9);
        parts.push(format!("{v:?} rate {rate:.4} (0.5), ratio rate {rr:.4} (0.5556)"));
    }
    let dt = secs(t0);
    outcome(pass && dt < 1.0, format!("{} ({dt:.2} s)", parts.join("; ")))
}

fn fit_tail(errors: &[f64], b: f64, from: usize) -> Option<harness::Fit> {
    // shift so that index 0 of the slice is n = from; the fit drops three more
    harness::fit_algebraic(&errors[from..], b + from as f64)
}

fn logarithmic_rates() -> Outcome {
    let t0 = Instant::now();
    let shape = Shape::Vector(5);
    let b = 1.0;
    let a = [1.0, 0.5, 0.25];
    let mut pass = true;
    let mut parts = Vec::new();
    for alternating in [false, true] {
        let src = LogarithmicModes::<f64>::random(shape, &a, b, alternating, 9).unwrap();
        let u1 = src.modes[0].1.norm_inf();
        let limit = src.limit.clone();
        let mut s2 = src.clone();
        let terms = take(&mut s2, 206);
        let y = ones(shape);
        let (tri, _) = stea(Variant::Stea1, Form::Three, 2, &y, &terms);
        for k in 0..=2usize {
            let errs: Vec<f64> = (0..=200).map(|n| tri.get(&(k, n)).map_or(f64::NAN, |x| x.sub(&limit).unwrap().norm_inf())).collect();
            let fit = fit_tail(&errs, b, 0);
            let alpha = fit.map_or(f64::NAN, |f| f.value);
            if alternating {
                let want = (2 * k + 1) as f64;
                let kf: f64 = (1..=k).map(|i| i as f64).product();
                let c_want = a[0] * kf * kf / 4f64.powi(k as i32) * u1;
                let tail: Vec<f64> =
                    (100..=200).filter(|&n| errs[n].is_finite()).map(|n| errs[n] * (n as f64 + b).powf(want)).collect();
                let c = if tail.is_empty() { f64::NAN } else { tail.iter().sum::<f64>() / tail.len() as f64 };
                let ok = (alpha - want).abs() <= 0.1 * want && (c - c_want).abs() <= 0.2 * c_want;
                pass &= ok;
                parts.push(format!("alt k={k}: exponent {alpha:.3} ({want}), constant {c:.3e} ({c_want:.3e})"));
            } else {
                let ok = (alpha - 1.0).abs() <= 0.1;
                pass &= ok;
                parts.push(format!("mono k={k}: exponent {alpha:.3}"));
            }
        }
    }
    let dt = secs(t0);
    outcome(pass, format!("{} ({dt:.2} s)", parts.join("; ")))
}

fn tm_to() -> Outcome {
    let shape = Shape::Vector(4);
    let y = ones(shape);
    let (mut bad, mut total, mut scalar_bad) = (0, 0, 0);
    for seed in 0..20 {
        for osc in [false, true] {
            let mut src = ExponentialMixture::<f64>::random(shape, 4, osc, 300 + seed).unwrap();
            let terms = take(&mut src, 20);
            let scalars: Vec<Element<f64>> = terms.iter().map(|x| Element::scalar(y.apply(x).unwrap())).collect();
            for v in VARIANTS {
                let (tri, _) = stea(v, Form::Three, 3, &y, &terms);
                let (b, t) = tm_to_violations(&tri, osc, 1e-12);
                bad += b;
                total += t;
            }
            let (stri, _) = stea(Variant::Stea1, Form::Three, 3, &Functional::dot(vec![1.0]), &scalars);
            scalar_bad += tm_to_violations(&stri, osc, 1e-12).0;
        }
    }
    outcome(
        bad == 0,
        format!("{bad} of {total} componentwise inequalities violated on generic TM/TO mixtures ({scalar_bad} for the projected scalars)"),
    )
}

fn kaczmarz() -> Outcome {
    let rs = reports(Experiment::Kaczmarz, ReproduceOptions { dim: Some(100), p: None, seed: 0 });
    let r = find(&rs, "kaczmarz/k3");
    let plain = r.plain_error(40).unwrap_or(f64::NAN);
    let acc = r.entry(3, 40 - 6).and_then(|e| e.error).unwrap_or(f64::INFINITY);
    let gain = (plain / acc).log10();
    let it_p = harness::plain_iterations_to_tolerance(r, 1e-10);
    let it_a = harness::iterations_to_tolerance(r, 3, 1e-10);
    outcome(gain >= 4.0, format!("after 40 sweeps: plain {plain:.2e}, STEA2 k=3 {acc:.2e} ({gain:.1} digits); iterations to 1e-10: {it_a:?} vs {it_p:?}"))
}

fn stein_gain(seed: u64) -> f64 {
    let rs = reports(Experiment::Stein, ReproduceOptions { dim: Some(40), p: None, seed });
    let r = &rs[0];
    let n = 50;
    let plain = r.plain_residual(n).unwrap_or(f64::NAN);
    let acc = r.entry(2, n - 4).and_then(|e| e.residual).unwrap_or(f64::INFINITY);
    (plain / acc).log10()
}

fn stein() -> Outcome {
    let gain = stein_gain(0);
    let others: Vec<f64> = (1..8).map(stein_gain).collect();
    let lo = others.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = others.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    outcome(gain >= 2.0, format!("N=50, seed 0: residual gain {gain:.2} digits (seeds 1-7 range {lo:.2} to {hi:.2})"))
}

fn storage() -> Outcome {
    let shape = Shape::Vector(3);
    let y = ones(shape);
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 1..=5 {
        let terms = random_mixture(shape, 6, 500 + k as u64);
        let mut line = format!("k={k}:");
        for v in VARIANTS {
            let mut t = TopoEpsTable::new(TopoConfig::new(v, Form::Three, k), y.clone());
            for s in &terms {
                t.append(s.clone()).unwrap();
            }
            pass &= t.peak_storage() == t.storage_budget();
            line += &format!(" {v:?} {}/{}", t.peak_storage(), t.storage_budget());
        }
        for v in [TeaVariant::Tea1, TeaVariant::Tea2] {
            let mut t = TeaTable::new(v, k, y.clone());
            for s in &terms {
                t.append(s.clone()).unwrap();
            }
            pass &= t.peak_storage() <= t.storage_budget();
            line += &format!(" {v:?} {}/{}", t.peak_storage(), t.storage_budget());
        }
        parts.push(line);
    }
    outcome(pass, format!("peak/budget {}", parts.join("; ")))
}

fn main() {
    let (c4, _) = table4(12);
    let (c4_info, _) = table4(10);
    let results: Vec<(&str, Outcome)> = vec![
        ("1 kernel exactness", kernel_exactness()),
        ("2 oracle equivalence", oracle_equivalence()),
        ("3 table identities", identity_suites()),
        ("4 table4 protocol", c4),
        ("5 table5 protocol", table5()),
        ("6 geometric rates", geometric_rates()),
        ("7 logarithmic exponents", logarithmic_rates()),
        ("8 TM/TO inequalities", tm_to()),
        ("9 Kaczmarz acceleration", kaczmarz()),
        ("10 Stein equation", stein()),
        ("11 storage budget", storage()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        if !o.pass {
            failed += 1;
        }
        println!("criterion {name:<26} {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("info      4 at p=10                  {}  {}", if c4_info.pass { "pass" } else { "fail" }, c4_info.detail);
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
