use pairpot::{Model, Point, PointPattern, Window};
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = Model> {
    prop_oneof![
        (0.1f64..3.0, 0.3f64..1.5).prop_map(|(b, r)| Model::poisson(b, r).unwrap()),
        (0.1f64..3.0, 0.3f64..1.5, 0.0f64..=1.0).prop_map(|(b, r, p)| Model::strauss(b, r, p).unwrap()),
        (0.1f64..3.0, 0.3f64..1.5, 0.05f64..1.0).prop_map(|(b, r, p)| Model::triplets(b, r, p).unwrap()),
        (0.1f64..3.0, 0.3f64..1.0, 0.0f64..=1.0, 0.0f64..=1.0)
            .prop_map(|(b, r, p1, p2)| Model::piecewise_strauss(b, vec![0.0, r / 2.0, r], vec![p1, p2]).unwrap()),
        (0.1f64..3.0, 0.5f64..1.5, 0.2f64..0.5).prop_map(|(b, r, t)| Model::lennard_jones(b, r, t).unwrap()),
    ]
}

fn coords(side: f64, max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..side, 0.0..side), 0..max)
}

fn pattern(side: f64, c: &[(f64, f64)], reach: f64) -> Option<PointPattern> {
    let pts = c.iter().map(|&(x, y)| Point::new(&[x, y])).collect();
    PointPattern::new(Window::new(2, side).unwrap(), pts, reach).ok()
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adding_two_points_in_either_order_agrees(
        model in model_strategy(),
        base in coords(4.0, 25),
        u in (0.0f64..4.0, 0.0f64..4.0),
        v in (0.0f64..4.0, 0.0f64..4.0),
    ) {
        let x = pattern(4.0, &base, model.range());
        prop_assume!(x.is_some());
        let x = x.unwrap();
        let (pu, pv) = (Point::new(&[u.0, u.1]), Point::new(&[v.0, v.1]));
        let with = |extra: &[(f64, f64)]| pattern(4.0, &[base.as_slice(), extra].concat(), model.range());
        let (xu, xv) = (with(&[u]), with(&[v]));
        prop_assume!(xu.is_some() && xv.is_some() && with(&[u, v]).is_some());
        let a = model.log_papangelou(&pu, &x) + model.log_papangelou(&pv, &xu.unwrap());
        let b = model.log_papangelou(&pv, &x) + model.log_papangelou(&pu, &xv.unwrap());
        prop_assert!(close(a, b), "{} vs {}", a, b);
        let joint = model.log_papangelou_multi(&[pu, pv], &x).unwrap();
        prop_assert!(close(a, joint), "{} vs {}", a, joint);
    }

    #[test]
    fn intensity_ignores_points_beyond_range(
        model in model_strategy(),
        base in coords(6.0, 30),
    ) {
        let u = Point::new(&[3.0, 3.0]);
        let near: Vec<_> = base.iter().copied().filter(|&(x, y)| Point::new(&[x, y]).dist(&u) <= model.range()).collect();
        let full = pattern(6.0, &base, model.range());
        let local = pattern(6.0, &near, model.range());
        prop_assume!(full.is_some());
        let (a, b) = (model.log_papangelou(&u, &full.unwrap()), model.log_papangelou(&u, &local.unwrap()));
        // triplets also need neighbor pairs, which lie within range of u
        prop_assert!(close(a, b), "{} vs {}", a, b);
    }

    #[test]
    fn strauss_intensity_never_increases_with_more_points(
        beta in 0.1f64..3.0,
        range in 0.3f64..1.5,
        phi in 0.0f64..=1.0,
        base in coords(4.0, 20),
        extra in (0.0f64..4.0, 0.0f64..4.0),
    ) {
        let model = Model::strauss(beta, range, phi).unwrap();
        let u = Point::new(&[2.0, 2.0]);
        let x = pattern(4.0, &base, range);
        let y = pattern(4.0, &[base.as_slice(), &[extra]].concat(), range);
        prop_assume!(x.is_some() && y.is_some());
        prop_assert!(model.log_papangelou(&u, &y.unwrap()) <= model.log_papangelou(&u, &x.unwrap()));
    }

    #[test]
    fn piecewise_potential_is_a_step_function(
        p1 in 0.01f64..=1.0, p2 in 0.01f64..=1.0, r in 0.01f64..2.0,
    ) {
        let m = Model::piecewise_strauss(1.0, vec![0.0, 0.5, 1.0], vec![p1, p2]).unwrap();
        let expected = if r <= 0.5 { -p1.ln() } else if r <= 1.0 { -p2.ln() } else { 0.0 };
        prop_assert!(close(m.pair_potential(r).unwrap(), expected));
    }
}

#[test]
fn triplets_has_no_pair_potential() {
    let m = Model::triplets(1.0, 1.0, 0.5).unwrap();
    assert!(!m.is_pairwise());
    assert!(m.pair_potential(0.5).is_err());
}
