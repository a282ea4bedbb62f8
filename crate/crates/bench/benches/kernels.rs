use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hitchin_core::combinatorics::{trace_psi, TraceOptions};
use hitchin_core::degeneration::{entropy_upper_bound, fuchsian_invariants};
use hitchin_core::flags::{veronese_flag, ProjectivePoint};
use hitchin_core::hyperbolic::{FuchsianSpec, FuchsianSurface};
use hitchin_core::invariants::{cross_ratio_vectors, triple_ratio, TripleRatioIndex};
use hitchin_core::linalg::wedge_det;
use hitchin_core::params::{xi_inverse, HitchinParams, InternalParams, PantsDecomposition};
use hitchin_core::scalar::rational;
use hitchin_core::{Scalar, WeylChamberPoint};
use num_rational::BigRational;

type Q = BigRational;

/// Deterministic small integer vectors in general position.
fn vectors<S: Scalar>(n: usize, count: usize) -> Vec<Vec<S>> {
    (0..count)
        .map(|i| (0..n).map(|j| S::from_int(((i + 2) * (j + 3) * (i + j + 1) % 11) as i64 - 5)).collect())
        .collect()
}

fn linear_algebra(c: &mut Criterion) {
    let m: Vec<Vec<Q>> = vectors(5, 5);
    c.bench_function("wedge_det exact n=5", |b| b.iter(|| wedge_det(black_box(&m))));
    let lines: Vec<Vec<Q>> = vectors(4, 4);
    let base: Vec<Vec<Q>> = vectors::<Q>(4, 6)[4..].to_vec();
    c.bench_function("cross ratio exact n=4", |b| {
        b.iter(|| cross_ratio_vectors([&lines[0], &lines[1], &lines[2], &lines[3]], black_box(&base)))
    });
    let lines: Vec<Vec<f64>> = vectors(4, 4);
    let base: Vec<Vec<f64>> = vectors::<f64>(4, 6)[4..].to_vec();
    c.bench_function("cross ratio float n=4", |b| {
        b.iter(|| cross_ratio_vectors([&lines[0], &lines[1], &lines[2], &lines[3]], black_box(&base)))
    });
}

fn flags(c: &mut Criterion) {
    let point = |p: i64| ProjectivePoint::new(Q::from_int(p), Q::from_int(1)).unwrap();
    let f: Vec<_> = [-1, 0, 2].iter().map(|p| veronese_flag(&point(*p), 4).unwrap()).collect();
    let idx = TripleRatioIndex::new(1, 2, 1, 4).unwrap();
    c.bench_function("triple ratio exact n=4", |b| b.iter(|| triple_ratio(&f[0], &f[1], &f[2], black_box(idx))));
}

fn reparameterization(c: &mut Criterion) {
    let n = 4;
    let d = PantsDecomposition::standard(2).unwrap();
    let p = HitchinParams {
        n,
        boundary: (0..3)
            .map(|i| WeylChamberPoint::from_gaps(&[rational(1 + i, 2), rational(2, 3), rational(3 + i, 4)]).unwrap())
            .collect(),
        internal: (0..2)
            .map(|j| {
                let v: Vec<Q> = (0..InternalParams::<Q>::count(n)).map(|k| rational((j + k) as i64 % 5 - 2, 3)).collect();
                InternalParams::from_vec(n, &v).unwrap()
            })
            .collect(),
        gluing: vec![vec![Q::from_int(0); n - 1]; 3],
        decomposition: d,
    };
    c.bench_function("xi_inverse exact n=4", |b| b.iter(|| xi_inverse(black_box(&p))));
}

fn surfaces(c: &mut Criterion) {
    let s = FuchsianSurface::genus_two(FuchsianSpec {
        lengths: [2.0, 2.4, 2.9],
        twists: [0.3, -0.4, 0.1],
    })
    .unwrap();
    c.bench_function("fuchsian invariants n=3", |b| b.iter(|| fuchsian_invariants(black_box(&s), 3)));
    c.bench_function("trace sTab", |b| b.iter(|| trace_psi(&s, black_box("sTab"), 2, TraceOptions::default())));
    c.bench_function("entropy bound", |b| b.iter(|| entropy_upper_bound(black_box(3.0), 1.0, 2)));
}

criterion_group!(benches, linear_algebra, flags, reparameterization, surfaces);
criterion_main!(benches);
