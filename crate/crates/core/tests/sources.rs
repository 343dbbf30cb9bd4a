use epsaccel::dense::{matmul, transpose};
use epsaccel::sequences::{
    parter, rng, take, verify_tm, verify_to, ExponentialMixture, Kaczmarz, KernelRecurrence, NsIteration, QpowIteration,
    Sequence, SmithStein, SourceSpec,
};
use epsaccel::{Element, Shape};
use rand::Rng;

fn dist(a: &Element<f64>, b: &Element<f64>) -> f64 {
    a.sub(b).unwrap().norm_fro()
}

#[test]
fn kaczmarz_error_never_grows() {
    let mut g = rng(3, 0);
    let a = Element::from_fn(Shape::Matrix(12, 12), |_| g.gen_range(-1.0..1.0));
    let mut src = Kaczmarz::new(a, Some(1)).unwrap();
    let limit = src.limit().unwrap();
    let terms = take(&mut src, 400);
    let errs: Vec<f64> = terms.iter().map(|x| dist(x, &limit)).collect();
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} > {}", w[1], w[0]);
    }
    assert!(errs[399] < errs[0]);
}

#[test]
fn kaczmarz_parter_sweeps_converge() {
    let mut src = Kaczmarz::new(parter::<f64>(20), None).unwrap();
    let limit = src.limit().unwrap();
    let terms = take(&mut src, 60);
    assert!(dist(&terms[59], &limit) < dist(&terms[1], &limit));
    assert!(src.residual(&limit).unwrap() < 1e-12);
}

#[test]
fn smith_error_contracts_by_a() {
    let mut src = SmithStein::<f64>::tridiagonal_instance(8, 0.45, 0.225, 2, 1).unwrap();
    let x = src.limit().unwrap();
    let a = Element::from_fn(Shape::Matrix(8, 8), |idx| {
        let (i, j) = (idx / 8, idx % 8);
        match i.abs_diff(j) {
            0 => 0.45,
            1 => 0.225,
            _ => 0.0,
        }
    });
    let terms = take(&mut src, 12);
    for w in terms.windows(2) {
        let e0 = w[0].sub(&x).unwrap();
        let want = matmul(&matmul(&a, &e0).unwrap(), &transpose(&a)).unwrap();
        let got = w[1].sub(&x).unwrap();
        assert!(dist(&got, &want) < 1e-12);
    }
}

#[test]
fn stein_limit_solves_equation() {
    let src = SmithStein::<f64>::tridiagonal_instance(40, 0.45, 0.225, 2, 0).unwrap();
    let x = src.limit().unwrap();
    assert!(src.residual(&x).unwrap() <= 1e-12);
    assert!(SmithStein::<f64>::tridiagonal_instance(10, 0.9, 0.45, 2, 0).is_err());
}

#[test]
fn ns_iteration_converges() {
    let mut src = NsIteration::<f64>::symmetric_instance(6, 0.3, 0.49, 2).unwrap();
    let x = src.limit().unwrap();
    let terms = take(&mut src, 400);
    assert!(dist(&terms[399], &x) < 1e-3 * dist(&terms[0], &x));
    assert!(src.residual(&x).unwrap() < 1e-10);
}

#[test]
fn qpow_iteration_converges() {
    let mut src = QpowIteration::<f64>::symmetric_instance(6, 0.2, 0.45, 0.7, 1.0, 2).unwrap();
    let x = src.limit().unwrap();
    let terms = take(&mut src, 200);
    assert!(dist(&terms[199], &x) < 1e-8, "{}", dist(&terms[199], &x));
    assert!(src.residual(&x).unwrap() < 1e-10);
}

#[test]
fn mixtures_are_tm_and_to() {
    for seed in 0..10 {
        let mut tm = ExponentialMixture::<f64>::random(Shape::Vector(3), 4, false, seed).unwrap();
        assert!(verify_tm(&take(&mut tm, 13), 6, 6));
        let mut to = ExponentialMixture::<f64>::random(Shape::Vector(3), 4, true, seed).unwrap();
        assert!(verify_to(&take(&mut to, 13), 6, 6));
    }
}

#[test]
fn boxed_clone_replays() {
    let mut a: Box<dyn Sequence<f64>> = Box::new(KernelRecurrence::new(Shape::Vector(5), 9));
    a.next_term();
    let mut b = a.clone();
    assert_eq!(take(a.as_mut(), 6), take(b.as_mut(), 6));
}

#[test]
fn specs_build_seeded_sources() {
    let spec = SourceSpec::ExponentialMixture { dim: 4, modes: 3, oscillating: false };
    let x = take(spec.build(5).unwrap().as_mut(), 5);
    let y = take(spec.build(5).unwrap().as_mut(), 5);
    let z = take(spec.build(6).unwrap().as_mut(), 5);
    assert_eq!(x, y);
    assert_ne!(x, z);
    let bad = SourceSpec::Ns { dim: 4, lo: 0.3, hi: 0.6 };
    assert!(bad.build(0).is_err());
}
