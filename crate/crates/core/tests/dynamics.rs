mod common;

use clustersync::casestudies;
use clustersync::dynsim::dde::DelaySystem;
use clustersync::dynsim::models::{BurstingNeuron, Chemical, Diffusive, Kuramoto, PhaseOscillator, Rossler};
use clustersync::dynsim::phase::{fit_lags, phase_lag_curve, PhaseLagOptions};
use clustersync::dynsim::simulate::{integrate_full, integrate_quotient, lift, FullSystem};
use clustersync::dynsim::sweep::{linspace, sweep_problem};
use clustersync::dynsim::{
    assemble_variational, CouplingFunction, MleOptions, Models, NodeModel, Param, StabilityProblem, SweepConfig,
};
use clustersync::irrtransform::build_transform_from;
use clustersync::{enumerate_balanced_partitions, minimal_balanced_coloring, quotient, Execution, Network, Partition};
use common::{fd_jacobian, max_rel_err, rk4, two_trajectory_mle, RosslerNet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-6;

fn random_point(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

#[test]
fn node_jacobians_match_finite_differences() {
    let models: Vec<Box<dyn NodeModel>> = vec![
        Box::new(PhaseOscillator { omega: 0.25 }),
        Box::new(BurstingNeuron::layer1()),
        Box::new(BurstingNeuron::layer2()),
        Box::new(Rossler::default()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in &models {
        let n = m.dim();
        for _ in 0..50 {
            let x = random_point(&mut rng, n, 3.0);
            let mut jac = vec![0.0; n * n];
            m.df(&x, &mut jac);
            let fd = fd_jacobian(|a, o| m.f(a, o), &x, n, FD_STEP);
            assert!(max_rel_err(&jac, &fd) <= 1e-6, "{m:?} at {x:?}");
        }
    }
}

#[test]
fn coupling_jacobians_match_finite_differences() {
    let cases: Vec<(Box<dyn CouplingFunction>, usize)> = vec![
        (Box::new(Kuramoto), 1),
        (Box::new(Diffusive { first_only: true }), 3),
        (Box::new(Diffusive { first_only: false }), 3),
        (Box::new(Chemical::default()), 3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (c, n) in &cases {
        let n = *n;
        for _ in 0..50 {
            let xi = random_point(&mut rng, n, 2.0);
            let xj = random_point(&mut rng, n, 1.0);
            let mut jr = vec![0.0; n * n];
            let mut js = vec![0.0; n * n];
            c.d_receiver(&xi, &xj, &mut jr);
            c.d_sender(&xi, &xj, &mut js);
            let fr = fd_jacobian(|a, o| c.h(a, &xj, o), &xi, n, FD_STEP);
            let fs = fd_jacobian(|a, o| c.h(&xi, a, o), &xj, n, FD_STEP);
            assert!(max_rel_err(&jr, &fr) <= 1e-6, "{c:?} receiver");
            assert!(max_rel_err(&js, &fs) <= 1e-6, "{c:?} sender");
        }
    }
}

/// `T (x) I_n` as a dense matrix.
fn kron_identity(t: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let m = t.nrows();
    DMatrix::from_fn(
        m * n,
        m * n,
        |r, c| if r % n == c % n { t[(r / n, c / n)] } else { 0.0 },
    )
}

/// Linearizes the full network about lifted cluster states by central
/// differences, rotates with `T`, and compares the transverse corner with
/// the analytic `Psi1`, `Psi2^k`; also checks the variational right-hand side.
fn check_psi(net: &Network, base: &Partition, s: &[f64], s_lag: &[Vec<f64>]) {
    let lat = enumerate_balanced_partitions(net).unwrap();
    let tr = build_transform_from(net, &lat, base).unwrap();
    let qnet = quotient(net, base).unwrap();
    let qmodels = Models::for_quotient(&qnet).unwrap();
    let fmodels = Models::for_network(net).unwrap();
    let full = FullSystem::new(net, &fmodels);
    let n = net.state_dim;
    let big = net.len() * n;
    let x = lift(base, s, n);
    let x_lag: Vec<Vec<f64>> = s_lag.iter().map(|l| lift(base, l, n)).collect();

    let eval = |x: &[f64], lagged: &[Vec<f64>], out: &mut [f64]| {
        let refs: Vec<&[f64]> = lagged.iter().map(|v| v.as_slice()).collect();
        full.rhs(x, &refs, out);
    };
    let j0 = fd_jacobian(|a, o| eval(a, &x_lag, o), &x, big, FD_STEP);
    let tn = kron_identity(&tr.t, n);
    let rot = |j: &[f64]| &tn * DMatrix::from_row_slice(big, big, j) * tn.transpose();
    let j0 = rot(&j0);
    let jk: Vec<DMatrix<f64>> = (0..net.layers.len())
        .map(|k| {
            let j = fd_jacobian(
                |a, o| {
                    let mut l = x_lag.clone();
                    l[k] = a.to_vec();
                    eval(&x, &l, o)
                },
                &x_lag[k],
                big,
                FD_STEP,
            );
            rot(&j)
        })
        .collect();

    let rows: Vec<usize> = (tr.num_parallel()..tr.t.nrows()).collect();
    let v = assemble_variational(&tr, &qnet, &qmodels, &rows).unwrap();
    let sl: Vec<&[f64]> = s_lag.iter().map(|l| l.as_slice()).collect();
    let (psi1, psi2) = v.psi_matrices(s, &sl);
    let q = tr.num_parallel();
    let corner = |m: &DMatrix<f64>| m.view((q * n, q * n), (rows.len() * n, rows.len() * n)).into_owned();
    let c0 = corner(&j0);
    assert!(
        max_rel_err(psi1.as_slice(), c0.as_slice()) <= 1e-5,
        "Psi1\n{psi1}\nvs\n{c0}"
    );
    for k in 0..jk.len() {
        let ck = corner(&jk[k]);
        assert!(
            max_rel_err(psi2[k].as_slice(), ck.as_slice()) <= 1e-5,
            "Psi2[{k}]\n{}\nvs\n{ck}",
            psi2[k]
        );
    }

    // the variational vector field applies the same matrices
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = rows.len() * n;
    let eta = random_point(&mut rng, m, 1.0);
    let eta_lag: Vec<Vec<f64>> = s_lag.iter().map(|_| random_point(&mut rng, m, 1.0)).collect();
    let mut state = s.to_vec();
    state.extend(&eta);
    let lagged: Vec<Vec<f64>> = s_lag
        .iter()
        .zip(&eta_lag)
        .map(|(a, b)| a.iter().chain(b).copied().collect())
        .collect();
    let lrefs: Vec<&[f64]> = lagged.iter().map(|v| v.as_slice()).collect();
    let mut out = vec![0.0; state.len()];
    v.rhs(&state, &lrefs, &mut out);
    let mut expect = &psi1 * nalgebra::DVector::from_column_slice(&eta);
    for k in 0..psi2.len() {
        expect += &psi2[k] * nalgebra::DVector::from_column_slice(&eta_lag[k]);
    }
    assert!(max_rel_err(&out[s.len()..], expect.as_slice()) <= 1e-12);
}

/// Cluster states and their lagged copies sampled from a quotient trajectory.
fn sampled_states(
    net: &Network,
    base: &Partition,
    init: &[f64],
    dt: f64,
    times: &[f64],
) -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
    let qnet = quotient(net, base).unwrap();
    let models = Models::for_quotient(&qnet).unwrap();
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let traj = integrate_quotient(&qnet, &models, init, t_end, dt, 1).unwrap();
    times
        .iter()
        .map(|&t| (traj.at(t), qnet.delay.iter().map(|d| traj.at(t - d)).collect()))
        .collect()
}

#[test]
fn psi_matches_projected_linearization_example5() {
    let cfg = casestudies::fixture("example5").unwrap();
    let base = minimal_balanced_coloring(&cfg.network);
    let init = cfg.spread_cluster_init(&base, 0.5, 0);
    for (s, l) in sampled_states(&cfg.network, &base, &init, 0.01, &[5.0, 17.3, 40.0]) {
        check_psi(&cfg.network, &base, &s, &l);
    }
}

#[test]
fn psi_matches_projected_linearization_fig1net() {
    let cfg = casestudies::fixture("fig1net").unwrap();
    let base = minimal_balanced_coloring(&cfg.network);
    let init = cfg.spread_cluster_init(&base, 0.5, 0);
    for (s, l) in sampled_states(&cfg.network, &base, &init, 0.01, &[3.0, 21.0]) {
        check_psi(&cfg.network, &base, &s, &l);
    }
}

#[test]
fn psi_matches_projected_linearization_violin_with_delay() {
    let net = casestudies::violin_arrowhead();
    let base = minimal_balanced_coloring(&net);
    let init: Vec<f64> = (0..base.num_clusters()).map(|q| 0.7 * q as f64).collect();
    for (s, l) in sampled_states(&net, &base, &init, 0.01, &[3.0, 9.5]) {
        check_psi(&net, &base, &s, &l);
    }
    let ring = casestudies::violin_undirected();
    let two = casestudies::violin_two_clusters();
    for (s, l) in sampled_states(&ring, &two, &[0.0, 2.0], 0.01, &[4.0]) {
        check_psi(&ring, &two, &s, &l);
    }
}

#[test]
fn psi_matches_projected_linearization_neuron() {
    let cfg = casestudies::fixture("neuron_full").unwrap();
    for base in [
        minimal_balanced_coloring(&cfg.network),
        casestudies::neuron_mirror_partition(),
    ] {
        let init = cfg.spread_cluster_init(&base, 0.3, 1);
        for (s, l) in sampled_states(&cfg.network, &base, &init, 0.05, &[10.0, 55.0]) {
            check_psi(&cfg.network, &base, &s, &l);
        }
    }
}

/// Largest difference between a lifted quotient trajectory and the full
/// trajectory, and the largest within-cluster spread of the latter.
fn flow_invariance(net: &Network, base: &Partition, init: &[f64], horizon: f64, dt: f64) -> (f64, f64) {
    let qnet = quotient(net, base).unwrap();
    let n = net.state_dim;
    let qt = integrate_quotient(&qnet, &Models::for_quotient(&qnet).unwrap(), init, horizon, dt, 10).unwrap();
    let ft = integrate_full(
        net,
        &Models::for_network(net).unwrap(),
        &lift(base, init, n),
        horizon,
        dt,
        10,
    )
    .unwrap();
    assert_eq!(qt.times, ft.times);
    let mut mismatch: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for (sq, sf) in qt.states.iter().zip(&ft.states) {
        let lifted = lift(base, sq, n);
        mismatch = mismatch.max(lifted.iter().zip(sf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        for c in base.clusters() {
            for &i in &c[1..] {
                for a in 0..n {
                    spread = spread.max((sf[i * n + a] - sf[c[0] * n + a]).abs());
                }
            }
        }
    }
    (mismatch, spread)
}

#[test]
fn synchronous_starts_stay_synchronous() {
    let cfg = casestudies::fixture("example5").unwrap();
    let base = minimal_balanced_coloring(&cfg.network);
    let (m, s) = flow_invariance(
        &cfg.network,
        &base,
        &cfg.spread_cluster_init(&base, 0.5, 0),
        100.0,
        0.01,
    );
    assert!(m <= 1e-6 && s <= 1e-6, "example5: {m} {s}");

    let ring = casestudies::violin_undirected();
    let (m, s) = flow_invariance(&ring, &casestudies::violin_two_clusters(), &[0.0, 2.5], 50.0, 0.01);
    assert!(m <= 1e-6 && s <= 1e-6, "violin: {m} {s}");

    let cfg = casestudies::fixture("neuron_full").unwrap();
    let q12 = casestudies::neuron_mirror_partition();
    let (m, s) = flow_invariance(&cfg.network, &q12, &cfg.spread_cluster_init(&q12, 0.3, 0), 200.0, 0.05);
    assert!(m <= 1e-6 && s <= 1e-6, "neuron: {m} {s}");
}

/// Benettin estimate for a single Rossler node, tangent system written out.
fn isolated_rossler_mle(dt: f64, horizon: f64) -> f64 {
    let (a, b, c) = (0.2, 0.2, 5.7);
    let rhs = |s: &[f64], o: &mut [f64]| {
        let (x, y, z, u, v, w) = (s[0], s[1], s[2], s[3], s[4], s[5]);
        o[0] = -y - z;
        o[1] = x + a * y;
        o[2] = b + z * (x - c);
        o[3] = -v - w;
        o[4] = u + a * v;
        o[5] = z * u + (x - c) * w;
    };
    let mut s = vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0];
    let steps = (horizon / dt).round() as usize;
    let (mut sum, mut t) = (0.0, 0.0);
    for k in 1..=steps {
        rk4(&rhs, &mut s, dt);
        if k % 10 == 0 {
            let g = (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]).sqrt();
            s[3..].iter_mut().for_each(|v| *v /= g);
            if k > steps / 2 {
                sum += g.ln();
                t += 10.0 * dt;
            }
        }
    }
    sum / t
}

#[test]
fn zero_coupling_reduces_to_the_isolated_node() {
    let cfg = casestudies::fixture("example5").unwrap();
    let lat = enumerate_balanced_partitions(&cfg.network).unwrap();
    let base = lat.minimal().clone();
    let problem = StabilityProblem::new(&cfg.network, &lat, &base).unwrap();
    let opts = MleOptions {
        dt: 0.01,
        horizon: 2000.0,
        ..MleOptions::default()
    };
    let init = cfg.spread_cluster_init(&base, 0.5, 0);
    let got = problem.piece_mles(Param::Sigma(0), 0.0, &init, &opts).unwrap();
    let oracle = isolated_rossler_mle(0.01, 2000.0);
    assert!((oracle - 0.071).abs() < 0.01, "oracle {oracle}");
    for e in got {
        assert!((e.value - oracle).abs() <= 0.02, "{} vs {oracle}", e.value);
    }
}

#[test]
fn block_mle_agrees_with_two_trajectory_estimate() {
    let cfg = casestudies::fixture("example5").unwrap();
    let lat = enumerate_balanced_partitions(&cfg.network).unwrap();
    let base = lat.minimal().clone();
    let problem = StabilityProblem::new(&cfg.network, &lat, &base).unwrap();
    let opts = MleOptions {
        dt: 0.01,
        horizon: 2000.0,
        ..MleOptions::default()
    };
    let init = cfg.spread_cluster_init(&base, 0.5, 0);
    for sigma in [0.05, 0.3, 1.0] {
        let lib = problem
            .piece_mles(Param::Sigma(0), sigma, &init, &opts)
            .unwrap()
            .iter()
            .map(|e| e.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let net = RosslerNet {
            a: cfg.network.layers[0].adjacency.clone(),
            sigma,
            params: (0.2, 0.2, 5.7),
        };
        let two = two_trajectory_mle(&net, &base, &init, 0.01, 2000.0, 10);
        assert!((lib - two).abs() <= 0.02, "sigma {sigma}: {lib} vs {two}");
    }
}

#[test]
fn undirected_ring_at_zero_delay_matches_laplacian_spectrum() {
    let net = casestudies::violin_undirected();
    let lat = enumerate_balanced_partitions(&net).unwrap();
    let base = lat.minimal().clone();
    let problem = StabilityProblem::new(&net, &lat, &base).unwrap();
    let opts = MleOptions {
        dt: 0.01,
        horizon: 200.0,
        ..MleOptions::default()
    };
    let got = problem.piece_mles(Param::Delay, 0.0, &[0.0], &opts).unwrap();
    let kappa = net.layers[0].sigma;
    let spectrum: Vec<f64> = (1..=4)
        .map(|k| -kappa * (2.0 - 2.0 * (std::f64::consts::TAU * k as f64 / 8.0).cos()))
        .collect();
    // each piece decays at one Laplacian rate; the slowest one is the overall MLE
    for e in &got {
        let nearest = spectrum
            .iter()
            .map(|l| (e.value - l).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= 2e-3, "{} not in {spectrum:?}", e.value);
    }
    let top = got.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    assert!((top - spectrum[0]).abs() <= 2e-3, "{top}");
}

#[test]
fn undirected_ring_has_block_diagonal_b_and_order_free_mles() {
    let net = Param::Delay
        .apply_network(&casestudies::violin_undirected(), 1.0)
        .unwrap();
    let lat = enumerate_balanced_partitions(&net).unwrap();
    let base = lat.minimal().clone();
    let tr = build_transform_from(&net, &lat, &base).unwrap();
    let q = tr.num_parallel();
    let pieces = tr.pieces();
    let b = &tr.b[0];
    for (i, p) in pieces.iter().enumerate() {
        for (j, pp) in pieces.iter().enumerate() {
            if i != j {
                for &r in p {
                    for &c in pp {
                        assert!(b[(r, c)].abs() <= 1e-12);
                    }
                }
            }
        }
    }
    assert!(pieces.iter().flatten().all(|&r| r >= q));
    let qnet = quotient(&net, &base).unwrap();
    let models = Models::for_quotient(&qnet).unwrap();
    let opts = MleOptions {
        dt: 0.01,
        horizon: 100.0,
        ..MleOptions::default()
    };
    for p in &pieces {
        let fwd = assemble_variational(&tr, &qnet, &models, p).unwrap();
        let rev: Vec<usize> = p.iter().rev().copied().collect();
        let back = assemble_variational(&tr, &qnet, &models, &rev).unwrap();
        let a = clustersync::dynsim::mle(&fwd, &[0.0], &opts).unwrap().value;
        let b = clustersync::dynsim::mle(&back, &[0.0], &opts).unwrap().value;
        assert!((a - b).abs() <= 1e-3, "{a} vs {b}");
    }
}

/// Locked states of the arrowhead: a chain of identical links leaving node 1
/// in both directions. With `d` the lag per link and `u = (Omega - omega) / kappa`:
/// every downstream node gives `u = sin(d - Omega delta)` and node 1, hearing
/// its two neighbours, gives `u = 2 sin(-d - Omega delta)`. Returns the
/// per-link lags `d` of all linearly stable solutions.
fn arrowhead_locked_lags(omega: f64, kappa: f64, delay: f64) -> Vec<f64> {
    let residual = |big: f64| {
        let u = ((big - omega) / kappa).clamp(-1.0, 1.0);
        let d = big * delay + u.asin();
        (2.0 * (-d - big * delay).sin() - u, d)
    };
    let grid = 20_000;
    let lo = omega - kappa;
    let width = 2.0 * kappa;
    let mut out = Vec::new();
    for k in 0..grid {
        let (mut a, mut b) = (
            lo + width * k as f64 / grid as f64,
            lo + width * (k + 1) as f64 / grid as f64,
        );
        let (fa, fb) = (residual(a).0, residual(b).0);
        if fa == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if residual(m).0.signum() == fa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        let big = 0.5 * (a + b);
        let d = residual(big).1;
        if (-d - big * delay).cos() > 0.0 {
            out.push(d);
        }
    }
    out
}

#[test]
fn arrowhead_lags_match_locked_state_algebra() {
    let net = casestudies::violin_arrowhead();
    let (omega, kappa) = (0.25, net.layers[0].sigma);
    // graph distance from node 1 along the two chains
    let distance = [0.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0];
    let delays = [1.2, 1.6, 2.0, 2.4, 2.8];
    let opts = PhaseLagOptions {
        dt: 0.01,
        horizon: 400.0,
        execution: Execution::Sequential,
        ..PhaseLagOptions::default()
    };
    let curve = phase_lag_curve(&net, &delays, &opts).unwrap();
    for p in &curve {
        assert!(p.locked, "delay {}", p.delay);
        let candidates = arrowhead_locked_lags(omega, kappa, p.delay);
        assert!(!candidates.is_empty());
        let err = |d: f64| {
            (0..8)
                .map(|i| clustersync::dynsim::phase::angle_distance(p.lags[i], -distance[i] * d))
                .fold(0.0, f64::max)
        };
        let best = candidates.iter().map(|&d| err(d)).fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-2, "delay {}: lags {:?} vs {candidates:?}", p.delay, p.lags);
    }
    let fits = fit_lags(&curve);
    for (i, fit) in fits.iter().enumerate().skip(1) {
        assert!(fit.r2 >= 0.99, "node {}: {fit:?}", i + 1);
    }
    // slopes scale with distance from node 1
    for (i, j) in [(1, 2), (2, 3), (3, 4), (7, 6), (6, 5)] {
        assert!(fits[j].slope.abs() > fits[i].slope.abs(), "{} vs {}", i + 1, j + 1);
    }
    assert!((fits[1].slope - fits[7].slope).abs() <= 1e-6);
}

#[test]
fn sweeps_are_identical_sequential_and_parallel() {
    let net = casestudies::violin_arrowhead();
    let lat = enumerate_balanced_partitions(&net).unwrap();
    let base = lat.minimal().clone();
    let problem = StabilityProblem::new(&net, &lat, &base).unwrap();
    let mut cfg = SweepConfig {
        network: net,
        base: base.clone(),
        param: Param::Delay,
        grid: linspace(0.5, 2.5, 3),
        mle: MleOptions {
            dt: 0.01,
            horizon: 60.0,
            ..MleOptions::default()
        },
        sync_init: vec![0.0; base.num_clusters()],
        bisection_steps: 0,
        execution: Execution::Sequential,
    };
    let seq = sweep_problem(&problem, &cfg).unwrap();
    cfg.execution = Execution::Parallel;
    let par = sweep_problem(&problem, &cfg).unwrap();
    assert_eq!(seq.mle, par.mle);
    assert_eq!(seq.overall, par.overall);
}
