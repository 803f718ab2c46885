use bcglpm::config::{Mode, Settings};
use bcglpm::formats::{fmt_f64, read_edges, read_latent, read_panel, read_truth, write_latent, write_panel, write_truth};
use bcglpm::pipeline::{emit_outputs, WindowPlan};
use bcglpm::prices::{parse_prices, realized_volatility};
use bcglpm_core::dgp::{generate, DgpSpec};
use bcglpm_core::nalgebra::DMatrix;
use bcglpm_core::{fit, Graph, LagMode};
use proptest::prelude::*;
use std::path::Path;

fn quick_run(mode: Mode) -> bcglpm::config::RunConfig {
    Settings { n_iter: Some(200), burn_in: Some(50), ..Settings::default() }.resolve(mode).unwrap()
}

#[test]
fn edges_file_round_trips_probabilities() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = generate(&DgpSpec::new(3, 30, LagMode::Lag0, 1)).unwrap();
    let run = quick_run(Mode::Bcglpm0);
    let res = fit(&inst.to_panel().unwrap(), &run.fit).unwrap();
    emit_outputs(tmp.path(), &res, &run, &["a".into(), "b".into(), "c".into()]).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("edges.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3);
    let back = read_edges(&tmp.path().join("edges.csv")).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert_eq!(back[(i, j)], res.summary.edge_prob[(i, j)]);
            }
        }
    }
    let u = read_latent(&tmp.path().join("latent.csv")).unwrap();
    assert_eq!(&u, res.summary.u_hat.as_ref().unwrap());
    assert!(tmp.path().join("trace_chain1.csv").is_file());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    for key in ["theta_mean", "lambda_mean", "psrf", "density", "gcc", "seed", "config", "version"] {
        assert!(summary.get(key).is_some(), "summary.json lacks {key}");
    }
}

#[test]
fn prices_to_panel_round_trip() {
    let csv = "date,A,B\n2021-03-01,100,50\n2021-03-02,101,NA\n2021-03-03,99,51\n2021-03-04,100.5,50.5\n";
    let prices = parse_prices(csv.as_bytes(), Path::new("inline.csv")).unwrap();
    assert_eq!(prices.dropped, 1);
    let rv = realized_volatility(&prices, true).unwrap();
    let panel = rv.into_panel(&[]).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("panel.csv");
    write_panel(&path, &panel).unwrap();
    let back = read_panel(&path).unwrap();
    assert_eq!(back.y(), panel.y());
    assert_eq!(back.dates(), panel.dates());
    assert_eq!(back.labels(), panel.labels());
    assert_eq!(back.dates()[0], "2021-03-03");
}

#[test]
fn realized_volatility_hand_value() {
    let prices = parse_prices("date,X\n2020-01-01,100\n2020-01-02,101\n".as_bytes(), Path::new("x")).unwrap();
    let rv = realized_volatility(&prices, false).unwrap();
    assert!((rv.values[(0, 0)] - (100.0 * 1.01f64.ln()).powi(2)).abs() < 1e-12);
    let flat = parse_prices("date,X\n2020-01-01,7\n2020-01-02,7\n".as_bytes(), Path::new("x")).unwrap();
    assert_eq!(realized_volatility(&flat, true).unwrap().values[(0, 0)], 1e-12f64.ln());
}

proptest! {
    #[test]
    fn window_count_matches_closed_form(t in 1usize..3000, len in 1usize..3000, step in 1usize..400) {
        let plan = WindowPlan::new(t, len, step);
        if len > t {
            prop_assert!(plan.is_err());
        } else {
            let plan = plan.unwrap();
            prop_assert_eq!(plan.len(), (t - len) / step + 1);
            prop_assert!(plan.ranges.iter().all(|&(a, b)| b - a == len && b <= t));
        }
    }

    #[test]
    fn floats_round_trip_through_text(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn truth_and_latent_round_trip(
        n in 2usize..12, bits in prop::collection::vec(any::<bool>(), 66), coords in prop::collection::vec(-1e3f64..1e3, 24)
    ) {
        let tmp = tempfile::tempdir().unwrap();
        let mut g = Graph::empty(n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                g.set_edge(i, j, bits[k]);
                k += 1;
            }
        }
        write_truth(&tmp.path().join("t.csv"), &g).unwrap();
        prop_assert_eq!(read_truth(&tmp.path().join("t.csv")).unwrap(), g);
        let u = DMatrix::from_fn(n, 2, |i, c| coords[2 * i + c]);
        write_latent(&tmp.path().join("u.csv"), &u, &[]).unwrap();
        prop_assert_eq!(read_latent(&tmp.path().join("u.csv")).unwrap(), u);
    }
}
