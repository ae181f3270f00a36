use std::sync::OnceLock;

use proptest::prelude::*;

use splinetool::io;
use splinetool::potential::{potential_from_derivative, potential_from_prox};
use splinetool::pwl::{Grid, NodalSpline};
use splinetool::recon::{Boundary, FilterBank, Image};
use splinetool::slope::{project_slopes, SlopeBounds};

fn spline_strategy() -> impl Strategy<Value = NodalSpline> {
    (2usize..10).prop_flat_map(|n| {
        (
            -5.0f64..5.0,
            prop::collection::vec(0.05f64..2.0, n - 1),
            prop::collection::vec(-5.0f64..5.0, n),
        )
            .prop_map(|(t0, gaps, f)| {
                let mut t = vec![t0];
                for g in gaps {
                    t.push(t.last().unwrap() + g);
                }
                NodalSpline::new(Grid::new(t).unwrap(), f).unwrap()
            })
    })
}

fn bounds_strategy() -> impl Strategy<Value = SlopeBounds> {
    prop_oneof![
        Just(SlopeBounds::unbounded()),
        Just(SlopeBounds::monotone()),
        Just(SlopeBounds::firmly_nonexpansive()),
        (-3.0f64..1.0, 0.01f64..3.0).prop_map(|(a, w)| SlopeBounds::new(a, a + w).unwrap()),
    ]
}

fn image_strategy() -> impl Strategy<Value = Image> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
        prop::collection::vec(-2.0f64..2.0, r * c).prop_map(move |d| Image::new(r, c, d).unwrap())
    })
}

fn dct_banks() -> &'static [FilterBank; 2] {
    static BANKS: OnceLock<[FilterBank; 2]> = OnceLock::new();
    BANKS.get_or_init(|| {
        let b = FilterBank::dct3x3();
        [b.clone(), b.with_boundary(Boundary::Reflective).unwrap()]
    })
}

fn mean(sp: &NodalSpline) -> f64 {
    sp.values().iter().sum::<f64>() / sp.len() as f64
}

proptest! {
    #[test]
    fn projection_is_feasible_and_mean_preserving(sp in spline_strategy(), b in bounds_strategy()) {
        let p = project_slopes(&sp, &b);
        prop_assert!(b.violation(&p.segment_slopes()) <= 1e-12);
        prop_assert!((mean(&p) - mean(&sp)).abs() <= 1e-12);
        let pp = project_slopes(&p, &b);
        for (a, c) in p.values().iter().zip(pp.values()) {
            prop_assert!((a - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn feasible_splines_are_returned_unchanged(sp in spline_strategy()) {
        let (lo, hi) = sp.slope_range();
        let b = SlopeBounds::new(lo, hi.max(lo + 1e-9)).unwrap();
        prop_assert_eq!(project_slopes(&sp, &b), sp);
    }

    #[test]
    fn tv2_is_relu_l1_and_relu_form_reproduces(sp in spline_strategy()) {
        let r = sp.to_relu_form();
        prop_assert!((sp.tv2() - r.l1_norm()).abs() <= 1e-12 * (1.0 + sp.tv2()));
        for &x in sp.grid().nodes() {
            prop_assert!((r.eval(x) - sp.eval(x)).abs() <= 1e-9 * (1.0 + sp.eval(x).abs()));
        }
    }

    #[test]
    fn lipschitz_bounded_by_tv2_plus_smallest_slope(sp in spline_strategy()) {
        let l_inf = sp.segment_slopes().iter().fold(f64::INFINITY, |m, s| m.min(s.abs()));
        prop_assert!(sp.lipschitz() <= sp.tv2() + l_inf + 1e-12);
    }

    #[test]
    fn derivative_potential_differentiates_back(sp in spline_strategy(), x in -8.0f64..8.0) {
        let pot = potential_from_derivative(&sp);
        let h = 1e-6;
        let fd = (pot.eval(x + h) - pot.eval(x - h)) / (2.0 * h);
        let near_node = sp.grid().nodes().iter().any(|t| (t - x).abs() < 2.0 * h);
        if !near_node {
            prop_assert!((fd - sp.eval(x)).abs() <= 1e-5 * (1.0 + sp.eval(x).abs()));
        }
    }

    #[test]
    fn filter_adjoint_identity(x in image_strategy(), seed in 0u64..1000, reflective in any::<bool>()) {
        let bank = &dct_banks()[usize::from(reflective)];
        let u: Vec<Image> = (0..bank.len())
            .map(|i| {
                Image::from_fn(x.rows(), x.cols(), |r, c| {
                    (((r * 31 + c * 17 + i * 7) as u64 + seed) % 13) as f64 - 6.0
                })
            })
            .collect();
        let wx = bank.apply(&x);
        let lhs: f64 = wx.iter().zip(&u).map(|(a, b)| a.dot(b)).sum();
        let rhs = x.dot(&bank.adjoint(&u));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn spline_json_round_trip(sp in spline_strategy()) {
        let text = serde_json::to_string(&io::spline_to_json(&sp)).unwrap();
        let back = io::spline_from_json(&io::parse_json(&text).unwrap()).unwrap();
        prop_assert_eq!(back, sp);
    }

    #[test]
    fn potential_json_round_trip(sp in spline_strategy()) {
        let pot = potential_from_derivative(&sp);
        let text = serde_json::to_string(&io::potential_to_json(&pot)).unwrap();
        let back = io::potential_from_json(&io::parse_json(&text).unwrap()).unwrap();
        prop_assert_eq!(back.breakpoints(), pot.breakpoints());
        prop_assert_eq!(back.pieces(), pot.pieces());
    }

    #[test]
    fn signal_formats_round_trip(x in image_strategy()) {
        prop_assert_eq!(io::signal_from_csv(&io::signal_to_csv(&x)).unwrap(), x.clone());
        prop_assert_eq!(io::signal_from_bytes(&io::signal_to_bytes(&x)).unwrap(), x);
    }

    #[test]
    fn prox_potential_needs_nondecreasing(sp in spline_strategy()) {
        let res = potential_from_prox(&sp);
        if sp.slope_range().0 < 0.0 {
            prop_assert!(res.is_err());
        }
    }
}
