use admittance::era::{EventRecord, HankelPair, StepHandling};
use admittance::frames::{rotate_admittance, FrameTag};
use admittance::network::{kron_reduce, AdmittanceBlock, SignConvention};
use admittance::{Polynomial, RationalFunction, TFMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn match_roots(a: &[C], b: &[C]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, r)| (j, (r - x).norm() / (1.0 + x.norm())))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

fn coeffs(max_deg: usize) -> impl Strategy<Value = Vec<f64>> {
    (1..=max_deg).prop_flat_map(|d| {
        (prop::collection::vec(-3.0..3.0f64, d), 0.5..3.0f64).prop_map(|(mut c, lead)| {
            c.push(lead);
            c
        })
    })
}

/// Real rational function with a stable denominator of degree 1 or 2.
fn block_den() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        (-0.3..1.7f64).prop_map(|e| vec![10f64.powf(e), 1.0]),
        (0.0..1.7f64, 0.05..0.8f64).prop_map(|(e, z)| {
            let w = 10f64.powf(e);
            vec![w * w, 2.0 * z * w, 1.0]
        }),
    ]
}

/// Square matrix whose rows each share one denominator, as block
/// admittances do.
fn block_matrix(n: usize) -> impl Strategy<Value = TFMatrix> {
    prop::collection::vec((block_den(), prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2), n)), n)
        .prop_map(move |rows| {
            let mut m = TFMatrix::zeros(n, n);
            for (i, (den, nums)) in rows.into_iter().enumerate() {
                for (j, num) in nums.into_iter().enumerate() {
                    let num = &num[..den.len() - 1];
                    m.set(i, j, RationalFunction::from_real(num, &den).unwrap());
                }
            }
            m
        })
}

fn orthogonal(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v).qr().q())
}

fn test_point() -> impl Strategy<Value = C> {
    (-3.0..3.0f64, -10.0..10.0f64).prop_map(|(a, b)| C::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_roots_are_the_union(a in coeffs(8), b in coeffs(8)) {
        let (p, q) = (Polynomial::from_real(&a), Polynomial::from_real(&b));
        let union: Vec<C> = p.roots().unwrap().into_iter().chain(q.roots().unwrap()).collect();
        let prod = (&p * &q).roots().unwrap();
        let err = match_roots(&union, &prod).unwrap();
        prop_assert!(err <= 1e-6, "root mismatch {err:e}");
    }

    #[test]
    fn eval_of_sum_is_sum_of_evals(
        na in coeffs(3), da in coeffs(3), nb in coeffs(3), db in coeffs(3), s in test_point()
    ) {
        let a = RationalFunction::from_real(&na, &da).unwrap();
        let b = RationalFunction::from_real(&nb, &db).unwrap();
        if let (Ok(x), Ok(y), Ok(z)) = (a.eval(s), b.eval(s), a.add(&b).unwrap().eval(s)) {
            prop_assert!((z - (x + y)).norm() <= 1e-9 * (1.0 + x.norm() + y.norm()));
        }
    }

    #[test]
    fn similarity_keeps_the_determinant(
        (m, q) in (2usize..5).prop_flat_map(|n| (block_matrix(n), orthogonal(n))),
        points in prop::collection::vec(test_point(), 32)
    ) {
        let rotated = TFMatrix::from_real_constant(&q.transpose())
            .mul(&m).unwrap()
            .mul(&TFMatrix::from_real_constant(&q)).unwrap();
        let (d0, d1) = (m.det().unwrap(), rotated.det().unwrap());
        for s in points {
            if let (Ok(a), Ok(b)) = (d0.eval(s), d1.eval(s)) {
                prop_assert!((a - b).norm() <= 1e-9 * a.norm(), "at {s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rotating_there_and_back_is_identity(m in block_matrix(2), angle in -3.2..3.2f64, s in test_point()) {
        let block = AdmittanceBlock {
            y: m,
            bus: 1,
            frame: FrameTag::local(angle),
            convention: SignConvention::InjectionPositive,
            calibration: None,
        };
        let there = rotate_admittance(&block, FrameTag::system()).unwrap();
        let back = rotate_admittance(&there, FrameTag::local(angle)).unwrap();
        if let (Ok(a), Ok(b)) = (block.y.eval(s), back.y.eval(s)) {
            prop_assert!((&a - &b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn kron_reduction_matches_injection_at_kept_buses(
        n in 3usize..10,
        seed in prop::collection::vec(0.0..1.0f64, 200),
        keep_mask in prop::collection::vec(any::<bool>(), 10)
    ) {
        let mut it = seed.into_iter().cycle();
        let mut next = move || it.next().unwrap();
        let mut y = DMatrix::<C>::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                if next() < 0.6 || j == i + 1 {
                    let ys = C::new(0.1 + 1.9 * next(), -1.0 - 19.0 * next());
                    y[(i, i)] += ys;
                    y[(j, j)] += ys;
                    y[(i, j)] -= ys;
                    y[(j, i)] -= ys;
                }
            }
            y[(i, i)] += C::new(0.01 + 0.5 * next(), next() - 0.5);
        }
        let mut keep: Vec<usize> = (0..n).filter(|&i| keep_mask[i]).collect();
        if keep.is_empty() || keep.len() == n {
            keep = vec![0];
        }
        let yr = kron_reduce(&y, &keep).unwrap();
        let ik = DVector::from_fn(keep.len(), |_, _| C::new(next() - 0.5, next() - 0.5));
        let mut inj = DVector::<C>::zeros(n);
        for (p, &i) in keep.iter().enumerate() {
            inj[i] = ik[p];
        }
        let v = y.clone().lu().solve(&inj).unwrap();
        let vk = DVector::from_fn(keep.len(), |p, _| v[keep[p]]);
        prop_assert!((&yr * &vk - &ik).norm() <= 1e-10 * ik.norm().max(1e-300));
    }

    #[test]
    fn hankel_shift_structure_holds_and_breaks(
        k in 1usize..4,
        n in 8usize..30,
        vals in prop::collection::vec(-1.0..1.0f64, 90),
        frac in 0.0..1.0f64
    ) {
        let data = DMatrix::from_fn(k, n, |i, j| vals[(i * n + j) % vals.len()] + 1e-3 * (i + j) as f64);
        let names = (0..k).map(|c| format!("y{c}")).collect();
        let mut ev = EventRecord::new(0, 1.0, 1.0, names, data, 0).unwrap();
        ev.processed = Some(StepHandling::Difference);
        let l = 1 + ((n - 3) as f64 * frac) as usize;
        let mut pair = HankelPair::build(&[ev.clone(), ev], l).unwrap();
        prop_assert!(pair.check_shift().is_ok());
        if pair.r > 1 {
            pair.h2[(0, 0)] += 1.0;
            prop_assert!(pair.check_shift().is_err());
        }
    }
}
