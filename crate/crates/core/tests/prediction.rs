use lpvfl_core::ddpred::{predict, DataRecord, PredictMethod, PredictOptions, Query, Verdict};
use lpvfl_core::random::{stream, uniform_trajectory};
use lpvfl_core::simulation::simulate_io;
use lpvfl_core::{example_verhoek, Trajectory};

fn draw(seed: u64, id: u64, dim: usize, t0: i64, len: usize) -> Trajectory {
    uniform_trajectory(&mut stream(seed, id), &vec![(-1.0, 1.0); dim], t0, len).unwrap()
}

fn simulate(u: &Trajectory, p: &Trajectory) -> Trajectory {
    let y0 = Trajectory::zeros(1, u.t_start(), 2).unwrap();
    simulate_io(&example_verhoek(), u, p, &y0).unwrap()
}

fn data(seed: u64, t: usize) -> DataRecord {
    let u = draw(seed, 0, 1, -1, t + 2);
    let p = draw(seed, 1, 2, -1, t + 2);
    let y = simulate(&u, &p);
    let w = |s: &Trajectory| s.window(1, t as i64).unwrap();
    DataRecord::new(w(&u), w(&p), w(&y)).unwrap()
}

fn query_with(u: &Trajectory, p: &Trajectory, y: &Trajectory, t_ini: i64, t_r: i64) -> Query {
    Query {
        u_ini: u.window(1, t_ini).unwrap(),
        p_ini: p.window(1, t_ini).unwrap(),
        y_ini: y.window(1, t_ini).unwrap(),
        u_r: u.window(t_ini + 1, t_ini + t_r).unwrap(),
        p_r: p.window(t_ini + 1, t_ini + t_r).unwrap(),
    }
}

#[test]
fn consistency_closure_over_routes_and_seeds() {
    for seed in 0..10 {
        let d = data(seed, 100);
        let u = draw(seed, 7, 1, -9, 22);
        let p = draw(seed, 8, 2, -9, 22);
        let y = simulate(&u, &p);
        let q = query_with(&u, &p, &y, 3, 7);
        let truth = y.window(4, 10).unwrap().vec();
        for method in [PredictMethod::HankelSpan, PredictMethod::Annihilator] {
            let r = predict(
                &d,
                &q,
                &PredictOptions {
                    method,
                    n_x: Some(2),
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(r.verdict, Verdict::Ok);
            assert!(
                (r.y_r.vec() - &truth).amax() < 1e-8,
                "seed {seed} {method:?}"
            );
            assert!(r.warnings.is_empty());
        }
    }
}

#[test]
fn prediction_is_affine_in_the_known_data() {
    // for fixed scheduling, a combination of two consistent queries is
    // consistent and must predict the same combination
    let d = data(21, 40);
    let p = draw(21, 2, 2, -9, 22);
    let mk = |id| {
        let u = draw(21, id, 1, -9, 22);
        let y = simulate(&u, &p);
        (u, y)
    };
    let (u1, y1) = mk(10);
    let (u2, y2) = mk(11);
    let comb = |a: &Trajectory, b: &Trajectory| {
        Trajectory::from_fn(1, a.t_start(), a.len(), |t, o| {
            o[0] = 2.0 * a.at(t).unwrap()[0] - 3.0 * b.at(t).unwrap()[0]
        })
        .unwrap()
    };
    let opts = PredictOptions::default();
    let r1 = predict(&d, &query_with(&u1, &p, &y1, 3, 7), &opts).unwrap();
    let r2 = predict(&d, &query_with(&u2, &p, &y2, 3, 7), &opts).unwrap();
    let r12 = predict(
        &d,
        &query_with(&comb(&u1, &u2), &p, &comb(&y1, &y2), 3, 7),
        &opts,
    )
    .unwrap();
    let mixed = r1.y_r.vec() * 2.0 - r2.y_r.vec() * 3.0;
    assert!((r12.y_r.vec() - mixed).amax() < 1e-8);
}

#[test]
fn extra_data_does_not_change_prediction() {
    let u = draw(31, 7, 1, -9, 22);
    let p = draw(31, 8, 2, -9, 22);
    let y = simulate(&u, &p);
    let q = query_with(&u, &p, &y, 3, 7);
    let short = predict(&data(31, 60), &q, &PredictOptions::default()).unwrap();
    let long = predict(&data(31, 120), &q, &PredictOptions::default()).unwrap();
    assert!((short.y_r.vec() - long.y_r.vec()).amax() < 1e-8);
}
