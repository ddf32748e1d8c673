use std::cell::Cell;

use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::groups::ops;
use crate::runtime::{run, simulate, RunConfig};

#[test]
fn rank_of_examples() {
    let s = GridShape::new(&[3, 4]).unwrap();
    assert_eq!(s.rank_of(&[0, 0]).unwrap(), 0);
    assert_eq!(s.rank_of(&[1, 3]).unwrap(), 1 * 4 + 3);
    assert_eq!(GridShape::new(&[2, 3, 4]).unwrap().rank_of(&[1, 2, 3]).unwrap(), 1 * 12 + 2 * 4 + 3);
    assert!(matches!(
        s.rank_of(&[3, 0]),
        Err(Error::CoordinateOutOfRange { axis: 0, coord: 3, extent: 3 })
    ));
    assert!(matches!(s.rank_of(&[1]), Err(Error::DimensionMismatch(_))));
    assert!(s.coords_of(12).is_err());
}

#[test]
fn transposed_order_is_column_major() {
    let s = GridShape::with_axis_order(&[3, 4], &[1, 0]).unwrap();
    // Axis 1 most significant: rank = c1·3 + c0.
    assert_eq!(s.rank_of(&[2, 1]).unwrap(), 1 * 3 + 2);
    assert_eq!(s.coords_of(5).unwrap(), vec![2, 1]);
}

#[test]
fn invalid_shapes() {
    assert!(GridShape::new(&[]).is_err());
    assert!(GridShape::new(&[2, 0]).is_err());
    assert!(GridShape::with_axis_order(&[2, 2], &[0, 0]).is_err());
    assert!(GridShape::with_axis_order(&[2, 2], &[0]).is_err());
}

fn shape_strategy() -> impl Strategy<Value = GridShape> {
    proptest::collection::vec(1usize..=8, 1..=4)
        .prop_filter("at most 4096 cells", |d| d.iter().product::<usize>() <= 4096)
        .prop_flat_map(|dims| {
            let k = dims.len();
            (Just(dims), Just((0..k).collect::<Vec<_>>()).prop_shuffle())
        })
        .prop_map(|(dims, order)| GridShape::with_axis_order(&dims, &order).unwrap())
}

proptest! {
    #[test]
    fn grid_mapping_is_a_bijection(shape in shape_strategy()) {
        let mut seen = vec![false; shape.size()];
        for r in 0..shape.size() {
            let c = shape.coords_of(r).unwrap();
            for (axis, (&x, &d)) in c.iter().zip(shape.dims()).enumerate() {
                prop_assert!(x < d, "axis {}", axis);
            }
            let back = shape.rank_of(&c).unwrap();
            prop_assert_eq!(back, r);
            prop_assert!(!std::mem::replace(&mut seen[back], true));
        }
    }
}

#[test]
fn ranged_sequences() {
    let out = simulate(4, 0, |w| DistSeq::ranged(w, 1, 4).unwrap().into_local()).unwrap();
    assert_eq!(out, vec![Some(1), Some(2), Some(3), Some(4)]);

    let out = simulate(4, 0, |w| DistSeq::ranged(w, 1, 3).unwrap().into_local()).unwrap();
    assert_eq!(out[3], None);

    let out = simulate(2, 0, |w| DistSeq::ranged(w, 1, 5).err()).unwrap();
    assert!(out.iter().all(|e| matches!(
        e,
        Some(Error::InsufficientProcessingElements { needed: 5, available: 2 })
    )));
}

#[test]
fn map_is_local_and_skips_absent_elements() {
    let run = run(&RunConfig::sim(4, 3), |w| {
        let calls = Cell::new(0);
        let s = DistSeq::ranged(w, 1, 3).unwrap();
        let doubled = s.map(|x| {
            calls.set(calls.get() + 1);
            x * 2
        });
        (doubled.into_local(), calls.get())
    })
    .unwrap();
    let results: Vec<_> = run.ranks.iter().map(|r| r.result).collect();
    assert_eq!(results, vec![(Some(2), 1), (Some(4), 1), (Some(6), 1), (None, 0)]);
    assert_eq!(run.ledger().messages_sent, 0);
}

#[test]
fn map_composition() {
    let f = |x: f64| x * x + 1.0;
    let ff = |x: i64| x as f64 / 3.0;
    let out = simulate(6, 1, |w| {
        let s = DistSeq::ranged(w, 1, 6).unwrap();
        (s.map(|&x| f(ff(x))).into_local(), s.map(|&x| ff(x)).map(|&y| f(y)).into_local())
    })
    .unwrap();
    assert!(out.iter().all(|(a, b)| a == b));
    let serial: Vec<_> = (1..=6).map(|x| Some(f(ff(x)))).collect();
    assert_eq!(out.iter().map(|p| p.0).collect::<Vec<_>>(), serial);
}

#[test]
fn apply_broadcasts_from_the_owner() {
    let out = simulate(5, 2, |w| {
        let s = DistSeq::from_vec(w, vec![10i64, 20, 30]).unwrap();
        (s.apply(1).unwrap(), s.apply(3).is_err())
    })
    .unwrap();
    assert!(out.iter().all(|&(v, err)| v == Some(20) && err));

    let out = simulate(3, 0, |w| DistSeq::from_vec(w, vec![7i64]).unwrap().apply(0).unwrap()).unwrap();
    assert_eq!(out, vec![Some(7); 3]);
}

#[test]
fn reduce_examples() {
    let out = simulate(4, 4, |w| {
        let s = DistSeq::ranged(w, 1, 3).unwrap().map(|x| x.to_string());
        s.reduce(&ops::concat()).unwrap()
    })
    .unwrap();
    assert_eq!(out[0].as_deref(), Some("123"));
    assert!(out[1..].iter().all(Option::is_none));

    let out = simulate(2, 0, |w| DistSeq::from_vec(w, vec![42i64]).unwrap().reduce(&ops::max()).unwrap()).unwrap();
    assert_eq!(out, vec![Some(42), None]);

    let out = simulate(3, 0, |w| DistSeq::<i64>::from_vec(w, vec![]).unwrap().reduce(&ops::sum()).err()).unwrap();
    assert!(out.iter().all(|e| matches!(e, Some(Error::EmptySequence))));
}

#[test]
fn reduce_lands_on_the_owner_of_index_zero() {
    let out = simulate(5, 5, |w| {
        let s = DistSeq::with_mapping(w, &[3, 0, 4], |i| ["x", "y", "z"][i].to_owned()).unwrap();
        (s.reduce(&ops::concat()).unwrap(), s.scan(&ops::concat()).unwrap().into_local())
    })
    .unwrap();
    assert_eq!(out[3].0.as_deref(), Some("xyz"));
    assert!([0, 1, 2, 4].iter().all(|&r| out[r].0.is_none()));
    assert_eq!(out[0].1.as_deref(), Some("xy"));
    assert_eq!(out[4].1.as_deref(), Some("xyz"));
    assert_eq!(out[1].1, None);
}

#[test]
fn invalid_mappings() {
    let out = simulate(3, 0, |w| {
        (
            DistSeq::with_mapping(w, &[0, 0], |i| i).is_err(),
            DistSeq::with_mapping(w, &[3], |i| i).is_err(),
        )
    })
    .unwrap();
    assert!(out.iter().all(|&(a, b)| a && b));
}

#[test]
fn scan_and_shift_examples() {
    let out = simulate(3, 6, |w| {
        let s = DistSeq::from_vec(w, vec!["a".to_owned(), "b".into(), "c".into()]).unwrap();
        s.scan(&ops::concat()).unwrap().into_local()
    })
    .unwrap();
    assert_eq!(out, vec![Some("a".into()), Some("ab".into()), Some("abc".into())]);

    let out = simulate(8, 7, |w| DistSeq::ranged(w, 1, 8).unwrap().scan(&ops::sum()).unwrap().into_local()).unwrap();
    let oracle: Vec<_> = (1..=8).map(|k| Some(k * (k + 1) / 2)).collect();
    assert_eq!(out, oracle);

    let shifted = |d: i64| {
        simulate(4, 8, move |w| DistSeq::ranged(w, 1, 3).unwrap().shift(d).unwrap().into_local()).unwrap()
    };
    assert_eq!(shifted(0), vec![Some(1), Some(2), Some(3), None]);
    assert_eq!(shifted(1), vec![Some(3), Some(1), Some(2), None]);
    assert_eq!(shifted(3), shifted(0));
}

#[test]
fn operations_leave_their_input_unchanged() {
    let out = simulate(4, 9, |w| {
        let s = DistSeq::ranged(w, 1, 4).unwrap();
        let _ = s.scan(&ops::sum()).unwrap();
        let _ = s.shift(1).unwrap();
        let _ = s.map(|x| x * 10);
        s.into_local()
    })
    .unwrap();
    assert_eq!(out, vec![Some(1), Some(2), Some(3), Some(4)]);
}

#[test]
fn numeric_family() {
    let xs = [4i64, -7, 19, 3, 3, 11];
    let out = simulate(8, 10, |w| {
        let s = DistSeq::from_vec(w, xs.to_vec()).unwrap();
        (
            s.max().unwrap(),
            s.min().unwrap(),
            s.sum().unwrap(),
            s.product().unwrap(),
            s.all_max().unwrap(),
            s.all_avg().unwrap(),
        )
    })
    .unwrap();
    assert_eq!(out[0].0, xs.iter().copied().max());
    assert_eq!(out[0].1, xs.iter().copied().min());
    assert_eq!(out[0].2, Some(xs.iter().sum()));
    assert_eq!(out[0].3, Some(xs.iter().product()));
    assert!(out.iter().all(|o| o.4 == Some(19)));
    assert!(out.iter().all(|o| o.5 == Some(33.0 / 6.0)));
    assert!(out[1..].iter().all(|o| o.0.is_none() && o.2.is_none()));

    let out = simulate(9, 11, |w| DistSeq::ranged(w, 1, 9).unwrap().avg().unwrap()).unwrap();
    assert_eq!(out[0], Some(5.0));
}

#[test]
fn all_variants_reach_members_without_elements() {
    let run = run(&RunConfig::sim(6, 12), |w| DistSeq::ranged(w, 1, 4).unwrap().all_sum().unwrap()).unwrap();
    assert!(run.ranks.iter().all(|r| r.result == Some(10)));
}

#[test]
fn dist_val_reductions() {
    let stamps = [5i64, 3, 9];
    let out = simulate(3, 13, |w| {
        let v = DistVal::new(w, || stamps[w.comm().rank()]);
        (v.all_min().unwrap(), v.sum().unwrap(), v.avg().unwrap())
    })
    .unwrap();
    assert!(out.iter().all(|o| o.0 == Some(3)));
    assert_eq!(out[0].1, Some(17));
    assert_eq!(out[2].1, None);
    assert_eq!(out[0].2, Some(17.0 / 3.0));

    let out = simulate(2, 0, |w| DistVal::new(w, || "s".to_owned()).all_reduce(&ops::concat()).err()).unwrap();
    assert!(out.iter().all(|e| matches!(e, Some(Error::NonCommutative(n)) if n == "concat")));
}

#[test]
fn dist_val_on_a_subgroup() {
    let out = simulate(4, 14, |w| {
        let g = w.subgroup(&[1, 3]).unwrap();
        DistVal::new(&g, || w.comm().rank() as i64).all_max().unwrap()
    })
    .unwrap();
    assert_eq!(out, vec![None, Some(3), None, Some(3)]);
}

#[test]
fn lazy_elements_are_not_forced_by_construction() {
    let out = simulate(3, 0, |w| {
        let s = DistSeq::tabulate(w, 3, |i| Lazy::new(move || i * 100)).unwrap();
        let before = s.local().unwrap().is_forced();
        let forced = s.map(|l| *l.force());
        (before, s.local().unwrap().is_forced(), forced.into_local())
    })
    .unwrap();
    assert_eq!(out[2], (false, true, Some(200)));
}

#[test]
fn one_by_one_grid() {
    let out = simulate(1, 0, |w| {
        let g = DistGrid::new(w, GridShape::square(1).unwrap(), |_| 5i64).unwrap();
        let row = g.row_seq().unwrap().map(|&&v| v);
        let col = g.col_seq().unwrap().map(|&&v| v);
        (row.len(), row.apply(0).unwrap(), col.len(), col.apply(0).unwrap())
    })
    .unwrap();
    assert_eq!(out, vec![(1, Some(5), 1, Some(5))]);
}

#[test]
fn grid_rows_and_columns() {
    let shape = GridShape::square(3).unwrap();
    let out = simulate(10, 15, |w| {
        let g = DistGrid::new(w, shape.clone(), |c| c[0] as i64 * 10 + c[1] as i64).unwrap();
        let row_members = g.row_seq().unwrap().group().members().to_vec();
        // Broadcast cell (k, j) down column j.
        let down = g.col_seq().unwrap().map(|&&v| v).apply(2).unwrap();
        let across = g.row_seq().unwrap().map(|&&v| v).apply(0).unwrap();
        (g.coords().map(<[usize]>::to_vec), row_members, down, across)
    })
    .unwrap();
    assert_eq!(out[5].0, Some(vec![1, 2]));
    let oracle: Vec<usize> = (0..3).map(|j| shape.rank_of(&[1, j]).unwrap()).collect();
    assert_eq!(out[5].1, oracle);
    assert_eq!(out[5].1, vec![3, 4, 5]);
    for (r, o) in out.iter().take(9).enumerate() {
        let (i, j) = (r / 3, r % 3);
        assert_eq!(o.2, Some(20 + j as i64));
        assert_eq!(o.3, Some(i as i64 * 10));
    }
    assert_eq!(out[9], (None, vec![], None, None));
}

#[test]
fn transposed_grid_rows() {
    let shape = GridShape::with_axis_order(&[2, 3], &[1, 0]).unwrap();
    let out = simulate(6, 16, |w| {
        let g = DistGrid::new(w, shape.clone(), |c| c.to_vec()).unwrap();
        g.row_seq().unwrap().group().members().to_vec()
    })
    .unwrap();
    // Cell (1, x) sits at rank x·2 + 1.
    assert_eq!(out[shape.rank_of(&[1, 0]).unwrap()], vec![1, 3, 5]);
}

#[test]
fn grid_map_and_dimension_checks() {
    let out = simulate(4, 17, |w| {
        let g = DistGrid::new(w, GridShape::square(2).unwrap(), |_| ()).unwrap();
        let labels = g.map(|c, _| format!("{},{}", c[0], c[1]));
        let line = DistGrid::new(w, GridShape::new(&[4]).unwrap(), |c| c[0]).unwrap();
        (labels.into_local(), line.row_seq().is_err(), line.local().copied())
    })
    .unwrap();
    let labels: Vec<_> = out.iter().map(|o| o.0.clone().unwrap()).collect();
    assert_eq!(labels, ["0,0", "0,1", "1,0", "1,1"]);
    assert!(out.iter().all(|o| o.1));
    assert_eq!(out[3].2, Some(3));

    let out = simulate(3, 0, |w| DistGrid::new(w, GridShape::square(2).unwrap(), |_| ()).is_err()).unwrap();
    assert!(out.iter().all(|&e| e));
}

#[test]
fn non_owners_send_nothing_during_map() {
    let run = run(&RunConfig::sim(6, 18), |w| {
        let s = DistSeq::ranged(w, 1, 4).unwrap();
        let m = s.map(|x| x + 1);
        let all = m.all_max().unwrap();
        (m.into_local(), all)
    })
    .unwrap();
    for r in &run.ranks {
        assert_eq!(r.result.1, Some(5));
    }
    assert_eq!(run.ranks[5].result.0, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sequence_operations_match_serial_counterparts(
        xs in proptest::collection::vec(-1000i64..1000, 1..=64),
        extra in 0usize..4,
        d in -100i64..100,
        seed in any::<u64>(),
    ) {
        let n = xs.len();
        let words: Vec<String> = xs.iter().map(|x| format!("<{x}>")).collect();
        let out = simulate(n + extra, seed, |w| {
            let s = DistSeq::from_vec(w, words.clone()).unwrap();
            let ints = DistSeq::from_vec(w, xs.clone()).unwrap();
            (
                s.reduce(&ops::concat()).unwrap(),
                s.scan(&ops::concat()).unwrap().gather().unwrap(),
                ints.shift(d).unwrap().gather().unwrap(),
                ints.all_sum().unwrap(),
                s.apply(n / 2).unwrap(),
            )
        })
        .unwrap();
        prop_assert_eq!(out[0].0.clone(), Some(words.concat()));
        let running: Vec<String> = (1..=n).map(|k| words[..k].concat()).collect();
        prop_assert_eq!(out[0].1.clone(), Some(running));
        let shifted: Vec<i64> = (0..n).map(|i| xs[(i as i64 - d).rem_euclid(n as i64) as usize]).collect();
        prop_assert_eq!(out[0].2.clone(), Some(shifted));
        for o in &out {
            prop_assert_eq!(o.3, Some(xs.iter().sum()));
            prop_assert_eq!(o.4.as_ref(), Some(&words[n / 2]));
        }
    }

    #[test]
    fn float_sums_stay_within_rounding(xs in proptest::collection::vec(-1e3f64..1e3, 1..=64)) {
        let out = simulate(xs.len(), 0, |w| DistSeq::from_vec(w, xs.clone()).unwrap().sum().unwrap()).unwrap();
        let serial: f64 = xs.iter().sum();
        let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((out[0].unwrap() - serial).abs() <= 1e-12 * scale);
    }
}

#[test]
fn should_equal_table() {
    assert!(Some(5).should_equal(&5));
    assert!(None::<i32>.should_equal(&5));
    assert!(!Some(5).should_equal(&6));
    assert!(Some("abc".to_owned()).should_equal("abc"));
}
