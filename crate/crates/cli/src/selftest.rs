//! A quick property bank over every module, seeded for reproducibility.

use hitchin_core::combinatorics::{r_and_s, trace_psi, TraceOptions};
use hitchin_core::degeneration::{compute_k, compute_l, fuchsian_boundary, fuchsian_invariants, length_lower_bound};
use hitchin_core::flags::{veronese_flag, ProjectivePoint};
use hitchin_core::hyperbolic::{invert_word, FuchsianSpec, FuchsianSurface};
use hitchin_core::invariants::{cross_ratio_vectors, eigen_gap_check, triple_ratio, TripleRatioIndex};
use hitchin_core::linalg::wedge_det;
use hitchin_core::params::{check_closed_leaf, xi_forward, xi_inverse, HitchinParams, InternalParams, PantsDecomposition};
use hitchin_core::scalar::rational;
use hitchin_core::{Extended, Flag, Matrix, Scalar, Vector, WeylChamberPoint};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;
type Check = Result<String, String>;

/// Deliberate faults, for checking that the bank notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// negate every cross ratio
    SignFlip,
    /// scale float cross ratios by 1 + 1e-7
    BackendDrift,
}

fn cross_ratio<S: Scalar>(fault: Option<Fault>, l: [&Vector<S>; 4], base: &[Vector<S>]) -> Extended<S> {
    let v = cross_ratio_vectors(l, base).expect("generic configuration");
    match (fault, v) {
        (Some(Fault::SignFlip), Extended::Finite(x)) => Extended::Finite(-x),
        (Some(Fault::BackendDrift), Extended::Finite(x)) if matches!(S::BACKEND, hitchin_core::Backend::Float64) => {
            Extended::Finite(x.clone() + x * S::from_f64(1e-7))
        }
        (_, v) => v,
    }
}

fn small(rng: &mut ChaCha8Rng) -> Q {
    rational(rng.gen_range(-9..=9), rng.gen_range(1..=3))
}

fn vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    (0..n).map(|_| Q::from_int(rng.gen_range(-9..=9))).collect()
}

fn generic(lines: &[Vec<Q>], base: &[Vec<Q>]) -> bool {
    (0..lines.len()).all(|i| {
        (i + 1..lines.len()).all(|j| {
            let mut v = base.to_vec();
            v.push(lines[i].clone());
            v.push(lines[j].clone());
            wedge_det(&v).unwrap() != Q::from_int(0)
        })
    })
}

fn unimodular(rng: &mut ChaCha8Rng, n: usize) -> Matrix<Q> {
    let mut g = Matrix::<Q>::identity(n);
    for _ in 0..2 * n {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let mut e = Matrix::<Q>::identity(n);
        e.set(i, j, Q::from_int(rng.gen_range(-2..=2)));
        g = g.mul(&e).unwrap();
    }
    g
}

/// (name, lhs, rhs) for every identity on one configuration.
fn identities<S: Scalar>(
    fault: Option<Fault>,
    lines: &[Vec<S>],
    base: &[Vec<S>],
    moved: (&[Vec<S>], &[Vec<S>]),
) -> Vec<(&'static str, Extended<S>, Extended<S>)> {
    let cr = |a: &Vec<S>, b: &Vec<S>, c: &Vec<S>, d: &Vec<S>, m: &[Vec<S>]| cross_ratio(fault, [a, b, c, d], m);
    let [l1, l2, l3, l4, l5] = [&lines[0], &lines[1], &lines[2], &lines[3], &lines[4]];
    let one = S::from_int(1);
    let fin = |e: Extended<S>| e.finite().cloned().unwrap_or_else(S::zero);
    let x = cr(l1, l2, l3, l4, base);
    vec![
        ("unimodular invariance", cr(&moved.0[0], &moved.0[1], &moved.0[2], &moved.0[3], moved.1), x.clone()),
        ("repeated first line", cr(l1, l1, l2, l3, base), Extended::Infinity),
        ("repeated last line", cr(l1, l2, l3, l3, base), Extended::Infinity),
        ("repeated middle line", cr(l1, l2, l2, l3, base), Extended::Finite(one.clone())),
        ("first equals last", cr(l1, l2, l3, l1, base), Extended::Finite(one.clone())),
        ("reversal", cr(l4, l3, l2, l1, base), x.clone()),
        ("swap identity", x, Extended::Finite(one - fin(cr(l2, l1, l3, l4, base)))),
        (
            "cocycle",
            Extended::Finite(fin(cr(l1, l2, l3, l5, base)) * fin(cr(l1, l3, l4, l5, base))),
            cr(l1, l2, l4, l5, base),
        ),
    ]
}

fn close(a: &Extended<f64>, b: &Extended<f64>, tol: f64) -> bool {
    match (a, b) {
        (Extended::Infinity, Extended::Infinity) => true,
        (Extended::Finite(x), Extended::Finite(y)) => (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0),
        _ => false,
    }
}

fn as_float(e: &Extended<Q>) -> Extended<f64> {
    match e {
        Extended::Finite(x) => Extended::Finite(x.to_f64()),
        Extended::Infinity => Extended::Infinity,
    }
}

fn identity_bank(rng: &mut ChaCha8Rng, fault: Option<Fault>) -> Check {
    // (label, failing configurations, first n)
    let mut failures: Vec<(String, usize, usize)> = Vec::new();
    let mut fail = |label: String, n: usize| match failures.iter_mut().find(|f| f.0 == label) {
        Some(f) => f.1 += 1,
        None => failures.push((label, 1, n)),
    };
    let mut configs = 0;
    for n in 2..=5 {
        let mut done = 0;
        while done < 40 {
            let lines: Vec<Vec<Q>> = (0..5).map(|_| vector(rng, n)).collect();
            let base: Vec<Vec<Q>> = (0..n - 2).map(|_| vector(rng, n)).collect();
            if !generic(&lines, &base) {
                continue;
            }
            let g = unimodular(rng, n);
            let ml: Vec<Vec<Q>> = lines.iter().map(|l| g.apply(l)).collect();
            let mb: Vec<Vec<Q>> = base.iter().map(|l| g.apply(l)).collect();
            let exact = identities(fault, &lines, &base, (&ml, &mb));
            let f = |vs: &[Vec<Q>]| vs.iter().map(|v| v.iter().map(|x| x.to_f64()).collect()).collect::<Vec<Vec<f64>>>();
            let float = identities(fault, &f(&lines), &f(&base), (&f(&ml), &f(&mb)));
            for ((name, lhs, rhs), (_, flhs, frhs)) in exact.iter().zip(&float) {
                if lhs != rhs {
                    fail(format!("{name} (exact)"), n);
                }
                if !close(flhs, frhs, 1e-9) {
                    fail(format!("{name} (float)"), n);
                }
                if !close(flhs, &as_float(lhs), 1e-8) {
                    fail(format!("exact and float backends disagree on {name}"), n);
                }
            }
            done += 1;
            configs += 1;
        }
    }
    if failures.is_empty() {
        Ok(format!("{configs} configurations"))
    } else {
        let lines: Vec<String> = failures
            .iter()
            .map(|(label, count, n)| format!("{label} in {count} of {configs} configurations, first at n={n}"))
            .collect();
        Err(lines.join("; "))
    }
}

fn eigenvalue_recovery(rng: &mut ChaCha8Rng) -> Check {
    for n in 3..=4 {
        for _ in 0..20 {
            let (g, logs) = split_matrix(rng, n);
            let witness: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = eigen_gap_check(&g, 1, n, &witness).map_err(|e| e.to_string())?;
            let want = (logs[0] - logs[n - 1]).exp();
            if (got - want).abs() > 1e-8 * want {
                return Err(format!("n={n}: {got} vs {want}"));
            }
        }
    }
    Ok("40 conjugated diagonal matrices".into())
}

/// g = P·D·P⁻¹ with P unimodular, built exactly and rounded once.
fn split_matrix(rng: &mut ChaCha8Rng, n: usize) -> (Matrix<f64>, Vec<f64>) {
    let logs: Vec<f64> = (0..n).map(|i| 1.5 - i as f64 * 0.7 + rng.gen_range(0.0..0.2)).collect();
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let p = unimodular(rng, n);
    let d = Matrix::diagonal(&logs.iter().map(|l| Q::from_f64(sign * l.exp())).collect::<Vec<_>>());
    let g = p.mul(&d).unwrap().mul(&p.inverse().unwrap()).unwrap();
    (g.to_f64(), logs)
}

fn veronese(rng: &mut ChaCha8Rng) -> Check {
    for n in 3..=5 {
        let mut xs: Vec<Q> = Vec::new();
        while xs.len() < 3 {
            let v = small(rng);
            if !xs.contains(&v) {
                xs.push(v);
            }
        }
        let flags: Vec<Flag<Q>> = xs
            .iter()
            .map(|x| veronese_flag(&ProjectivePoint::new(x.clone(), Q::from_int(1)).unwrap(), n).unwrap())
            .collect();
        for idx in TripleRatioIndex::all(n) {
            let t = triple_ratio(&flags[0], &flags[1], &flags[2], idx).map_err(|e| e.to_string())?;
            if t != Q::from_int(1) {
                return Err(format!("n={n}: triple ratio at {idx:?} is {t}"));
            }
        }
    }
    Ok("n = 3..5".into())
}

fn reparameterization(rng: &mut ChaCha8Rng) -> Check {
    for n in 2..=5 {
        let d = PantsDecomposition::standard(2).unwrap();
        let boundary = (0..d.num_curves())
            .map(|_| {
                let gaps: Vec<Q> = (0..n - 1).map(|_| rational(rng.gen_range(1..=9), rng.gen_range(1..=4))).collect();
                WeylChamberPoint::from_gaps(&gaps).unwrap()
            })
            .collect();
        let internal = (0..d.num_pants())
            .map(|_| {
                let v: Vec<Q> = (0..InternalParams::<Q>::count(n)).map(|_| small(rng)).collect();
                InternalParams::from_vec(n, &v).unwrap()
            })
            .collect();
        let gluing = (0..d.num_curves()).map(|_| (0..n - 1).map(|_| small(rng)).collect()).collect();
        let p = HitchinParams { n, decomposition: d, boundary, internal, gluing };
        let (inv, glue) = xi_inverse(&p).map_err(|e| format!("n={n}: {e}"))?;
        let rep = check_closed_leaf(&p.decomposition, &inv, Some(&p.boundary)).map_err(|e| e.to_string())?;
        if rep.max_residual() != 0.0 {
            return Err(format!("n={n}: residual {}", rep.max_residual()));
        }
        if xi_forward(&p.decomposition, &inv, glue).map_err(|e| e.to_string())? != p {
            return Err(format!("n={n}: round trip differs"));
        }
    }
    Ok("exact round trips for n = 2..5".into())
}

fn tracing() -> Check {
    let s = FuchsianSurface::genus_two(FuchsianSpec {
        lengths: [2.0, 2.4, 2.9],
        twists: [0.3, -0.4, 0.1],
    })
    .map_err(|e| e.to_string())?;
    let (k, _) = compute_k(&s.decomposition(), &fuchsian_invariants(&s, 2).unwrap()).map_err(|e| e.to_string())?;
    let l = compute_l(&fuchsian_boundary(&s, 2).unwrap()).map_err(|e| e.to_string())?;
    for w in ["aB", "as", "abst", "aaaB"] {
        let tr = trace_psi(&s, w, 2, TraceOptions::default()).map_err(|e| format!("{w}: {e}"))?;
        let tr = tr.trace().ok_or_else(|| format!("{w} traced as a closed leaf"))?;
        let turned = format!("{}{}", &w[1..], &w[..1]);
        let conj = format!("s{w}{}", invert_word("s"));
        for other in [turned, conj] {
            let o = trace_psi(&s, &other, 2, TraceOptions::default()).map_err(|e| format!("{other}: {e}"))?;
            let o = o.trace().ok_or_else(|| format!("{other} traced as a closed leaf"))?;
            if !tr.psi.same_cycle(&o.psi) {
                return Err(format!("{w} and {other} have different encodings"));
            }
        }
        let c = r_and_s(&tr.psi).map_err(|e| e.to_string())?;
        let bound = length_lower_bound(c.r, c.s, k, l).map_err(|e| e.to_string())?;
        if tr.length < bound {
            return Err(format!("{w}: length {} below the bound {bound}", tr.length));
        }
    }
    Ok("4 words with rotations and conjugates".into())
}

/// Run every check and print one line each; true when all pass.
pub fn run(seed: u64, fault: Option<Fault>) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    let checks: Vec<(&str, Check)> = vec![
        ("cross-ratio identities", identity_bank(&mut rng, fault)),
        ("eigenvalue recovery", eigenvalue_recovery(&mut rng)),
        ("Veronese triple ratios", veronese(&mut rng)),
        ("reparameterization round trip", reparameterization(&mut rng)),
        ("curve encodings", tracing()),
    ];
    for (name, outcome) in checks {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                ok = false;
                println!("FAIL {name}: {why}");
            }
        }
    }
    ok
}
