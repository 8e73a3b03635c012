use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sprk::experiments::kepler::{rollout, KeplerObjective};
use sprk::experiments::{gen_classification, gen_kepler, run_convergence, run_verify, KeplerDataset};
use sprk::hamiltonian::kepler_field;
use sprk::network::{NetParams, NetSpec};
use sprk::tableau::builtin_tableau;
use sprk::training::Objective;
use sprk::{Activation, SeparableHamiltonian, TableauKind};

fn miniature() -> KeplerDataset {
    let mut data = gen_kepler(0).unwrap();
    for t in &mut data.trajectories {
        t.times.truncate(5);
        t.states.truncate(5);
    }
    data
}

fn worst_gradient_error(net: &NetParams, data: &KeplerDataset) -> f64 {
    let obj = KeplerObjective { data };
    let mut grads = vec![0.0; net.param_count()];
    obj.sample_loss_grad(net, 0, &mut grads).unwrap();
    let floor = 1e-3 * grads.iter().fold(1e-8_f64, |a, g| a.max(g.abs()));
    let u = net.to_flat();
    let eps = 1e-6;
    let mut scratch = vec![0.0; u.len()];
    let mut worst: f64 = 0.0;
    for i in 0..u.len() {
        let mut plus = net.clone();
        let mut minus = net.clone();
        let mut v = u.clone();
        v[i] += eps;
        plus.set_flat(&v).unwrap();
        v[i] -= 2.0 * eps;
        minus.set_flat(&v).unwrap();
        let fd = (obj.sample_loss_grad(&plus, 0, &mut scratch).unwrap()
            - obj.sample_loss_grad(&minus, 0, &mut scratch).unwrap())
            / (2.0 * eps);
        worst = worst.max((fd - grads[i]).abs() / fd.abs().max(grads[i].abs()).max(floor));
    }
    worst
}

#[test]
fn composed_kepler_gradient_matches_finite_differences() {
    let data = miniature();
    for kind in TableauKind::ALL {
        for (n, share) in [(2, false), (4, true)] {
            let spec = NetSpec {
                tableau: kind,
                layers: 2,
                n,
                m: 2,
                h: 0.5,
                activation: Activation::Tanh,
                share_stages: share,
            };
            let net = NetParams::random(spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            let worst = worst_gradient_error(&net, &data);
            assert!(worst <= 1e-4, "{kind} n = {n}: {worst:e}");
        }
    }
}

#[test]
fn kepler_reference_data_conserves_energy() {
    let data = gen_kepler(1).unwrap();
    assert_eq!(data.trajectories.len(), 27);
    assert_eq!(data.point_count(), 2000);
    let h = kepler_field();
    for traj in data.trajectories.iter().chain([&data.test]) {
        let e0 = h.energy(&traj.states[0].q, &traj.states[0].p, 0.0).unwrap();
        for z in &traj.states {
            assert!((h.energy(&z.q, &z.p, 0.0).unwrap() - e0).abs() <= 1e-6);
        }
    }
    assert_eq!(data.test.states[0], data.trajectories[0].states[0]);
}

#[test]
fn rollout_with_true_force_matches_data_shape() {
    let data = gen_kepler(0).unwrap();
    let obs = &data.trajectories[3];
    let spec = NetSpec {
        tableau: TableauKind::Sprk2,
        layers: 1,
        n: 2,
        m: 2,
        h: 0.5,
        activation: Activation::Tanh,
        share_stages: true,
    };
    let net = NetParams::zeros(spec).unwrap();
    let dt = obs.times[1] - obs.times[0];
    let roll = rollout(&net, &obs.states[0], dt, obs.len()).unwrap();
    assert_eq!(roll.trajectory.len(), obs.len());
    assert_eq!(roll.trajectory.times, obs.times);
}

#[test]
fn classification_data_is_balanced_and_seeded() {
    let a = gen_classification(4);
    let b = gen_classification(4);
    assert_eq!(a.features, b.features);
    assert_eq!((a.train.len(), a.test.len()), (400, 200));
    for (x, y) in a.features.iter().zip(&a.labels) {
        let r = x[0].hypot(x[1]);
        let centre = if *y == 0 { 1.0 } else { 2.0 };
        assert!((r - centre).abs() < 0.6);
    }
    for split in [&a.train, &a.test] {
        let ones = split.iter().filter(|&&i| a.labels[i] == 1).count();
        assert!(ones.abs_diff(split.len() - ones) <= 1);
    }
    assert_ne!(gen_classification(5).features, a.features);

    // A radius threshold separates the circles almost perfectly.
    let correct = a
        .test
        .iter()
        .filter(|&&i| u8::from(a.features[i][0].hypot(a.features[i][1]) > 1.5) == a.labels[i])
        .count();
    assert!(correct as f64 / a.test.len() as f64 >= 0.95);
}

#[test]
fn convergence_slopes_near_nominal_order() {
    for row in run_convergence().unwrap() {
        let slope = row.slope.unwrap();
        let nominal = row.tableau.nominal_order() as f64;
        assert!((slope - nominal).abs() <= 0.3, "{}: {slope}", row.tableau);
    }
}

#[test]
fn builtin_certificates_pass() {
    for kind in TableauKind::ALL {
        let cert = run_verify(&builtin_tableau(kind), Some(kind)).unwrap();
        assert!(cert.passed, "{cert}");
    }
}
