use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use clustersync::breaking::breaking_vectors;
use clustersync::casestudies::{self, CaseConfig, Expected, FIXTURE_NAMES};
use clustersync::dynsim::phase::BasinOptions;
use clustersync::dynsim::sweep::{linspace, sweep_problem};
use clustersync::dynsim::{
    basin_map, integrate_full, integrate_quotient, lift, MleOptions, Models, Param, StabilityProblem, StabilityReport,
    SweepConfig, Trajectory,
};
use clustersync::irrtransform::{build_transform_from, classify as classify_transform, BlockShape, TransformResult};
use clustersync::{
    enumerate_balanced_partitions, is_balanced, load_network, minimal_balanced_coloring, quotient as quotient_network,
    Execution, Network, Partition, PartitionLattice,
};

use crate::output::{num, Run};
use crate::{Common, Dynamics, Grid};

/// Largest lattice for which the covering relation is written out.
const EDGE_LIMIT: usize = 2000;

struct Source {
    label: String,
    cfg: CaseConfig,
    from_case: bool,
}

fn load(common: &Common) -> Result<Source> {
    if let Some(name) = &common.case {
        let cfg = casestudies::fixture(name).with_context(|| format!("loading case `{name}`"))?;
        return Ok(Source {
            label: format!("case:{name}"),
            cfg,
            from_case: true,
        });
    }
    let path = common
        .input
        .as_ref()
        .or(common.input_pos.as_ref())
        .ok_or_else(|| anyhow!("no network given: pass a file or --case NAME"))?;
    let network = load_network(path).with_context(|| format!("loading {}", path.display()))?;
    let cfg = CaseConfig {
        name: path.display().to_string(),
        type_init: vec![vec![0.0; network.state_dim]; network.num_types()],
        network,
        sweep: None,
        dt: 0.01,
        horizon: 200.0,
        expected: Expected {
            min_clusters: 0,
            trivial_clusters: 0,
        },
    };
    Ok(Source {
        label: path.display().to_string(),
        cfg,
        from_case: false,
    })
}

fn one_based(xs: &[usize]) -> Vec<usize> {
    xs.iter().map(|x| x + 1).collect()
}

fn one_based_clusters(p: &Partition) -> Vec<Vec<usize>> {
    p.clusters().iter().map(|c| one_based(c)).collect()
}

fn cluster_name(c: usize) -> String {
    format!("C{}", c + 1)
}

fn partition_json(index: usize, p: &Partition) -> Value {
    json!({
        "index": index + 1,
        "num_clusters": p.num_clusters(),
        "labels": p.to_one_based(),
        "clusters": one_based_clusters(p),
    })
}

/// Comma-separated cluster labels, one per node; any labels work.
fn parse_partition(text: &str, net: &Network) -> Result<Partition> {
    let labels: Vec<&str> = text.split(',').map(str::trim).collect();
    if labels.len() != net.len() {
        bail!(
            "--partition has {} labels, the network has {} nodes",
            labels.len(),
            net.len()
        );
    }
    let p = Partition::from_labels(&labels);
    if !is_balanced(net, &p) {
        bail!("partition {text} is not balanced");
    }
    Ok(p)
}

fn chosen_partition(text: Option<&str>, net: &Network) -> Result<Partition> {
    match text {
        Some(t) => parse_partition(t, net),
        None => Ok(minimal_balanced_coloring(net)),
    }
}

fn lattice(net: &Network) -> Result<PartitionLattice> {
    enumerate_balanced_partitions(net).context("enumerating balanced partitions")
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<String>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| num(m[(i, j)])).collect())
        .collect()
}

fn matrix_csv(run: &mut Run, name: &str, m: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = (1..=m.ncols()).map(|j| format!("c{j}")).collect();
    run.csv(name, &header, &matrix_rows(m))
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn color(common: &Common) -> Result<()> {
    let src = load(common)?;
    let mut run = Run::new(&common.out_dir, "color", src.label, common.seed)?;
    write_coloring(&mut run, &src.cfg.network)?;
    run.finish()
}

fn write_coloring(run: &mut Run, net: &Network) -> Result<Partition> {
    let p = minimal_balanced_coloring(net);
    let rows: Vec<Vec<String>> = p
        .to_one_based()
        .iter()
        .enumerate()
        .map(|(i, c)| vec![(i + 1).to_string(), c.to_string()])
        .collect();
    run.csv("coloring.csv", &header(&["node", "cluster"]), &rows)?;
    run.json("coloring.json", &partition_json(0, &p))?;
    println!("{} clusters: {:?}", p.num_clusters(), one_based_clusters(&p));
    Ok(p)
}

pub fn partitions(common: &Common) -> Result<()> {
    let src = load(common)?;
    let mut run = Run::new(&common.out_dir, "partitions", src.label, common.seed)?;
    write_partitions(&mut run, &src.cfg.network)?;
    run.finish()
}

fn write_partitions(run: &mut Run, net: &Network) -> Result<PartitionLattice> {
    let lat = lattice(net)?;
    let edges = lat
        .refinement_edges_limited(EDGE_LIMIT)
        .map(|e| e.iter().map(|&(i, j)| [i + 1, j + 1]).collect::<Vec<_>>());
    let doc = json!({
        "nodes": net.len(),
        "partitions": lat.partitions().iter().enumerate().map(|(i, p)| partition_json(i, p)).collect::<Vec<_>>(),
        "refinements": edges,
    });
    run.json("partitions.json", &doc)?;
    let rows: Vec<Vec<String>> = lat
        .partitions()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let labels: Vec<String> = p.to_one_based().iter().map(|l| l.to_string()).collect();
            vec![(i + 1).to_string(), p.num_clusters().to_string(), labels.join(" ")]
        })
        .collect();
    run.csv("partitions.csv", &header(&["index", "num_clusters", "labels"]), &rows)?;
    println!("{} balanced partitions", lat.len());
    Ok(lat)
}

/// Lattice written by `partitions`.
fn read_partitions(path: &Path, net: &Network) -> Result<PartitionLattice> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let list = doc["partitions"]
        .as_array()
        .ok_or_else(|| anyhow!("{}: no `partitions` array", path.display()))?;
    let mut parts = Vec::with_capacity(list.len());
    for entry in list {
        let labels: Vec<u64> = serde_json::from_value(entry["labels"].clone())
            .with_context(|| format!("{}: partition without `labels`", path.display()))?;
        if labels.len() != net.len() {
            bail!(
                "{}: partition has {} labels, the network has {} nodes",
                path.display(),
                labels.len(),
                net.len()
            );
        }
        let p = Partition::from_labels(&labels);
        if !is_balanced(net, &p) {
            bail!(
                "{}: partition {:?} is not balanced for this network",
                path.display(),
                labels
            );
        }
        parts.push(p);
    }
    if parts.is_empty() {
        bail!("{}: empty lattice", path.display());
    }
    Ok(PartitionLattice::from_partitions(parts))
}

pub fn breakings(common: &Common) -> Result<()> {
    let src = load(common)?;
    let mut run = Run::new(&common.out_dir, "breakings", src.label, common.seed)?;
    let lat = lattice(&src.cfg.network)?;
    write_breakings(&mut run, &lat)?;
    run.finish()
}

fn write_breakings(run: &mut Run, lat: &PartitionLattice) -> Result<()> {
    let vectors = breaking_vectors(lat);
    let rows: Vec<Vec<String>> = vectors
        .iter()
        .map(|b| {
            let also: Vec<String> = b.also_broken.iter().map(|&c| cluster_name(c)).collect();
            vec![
                cluster_name(b.cluster),
                (b.partition + 1).to_string(),
                b.pattern.to_string(),
                b.index.to_string(),
                also.join(" "),
            ]
        })
        .collect();
    run.csv(
        "breakings.csv",
        &header(&["cluster", "partition", "pattern", "index", "also_broken"]),
        &rows,
    )?;
    println!("{} breaking vectors", vectors.len());
    Ok(())
}

pub fn transform(common: &Common, partitions: Option<&Path>, base: usize) -> Result<()> {
    let src = load(common)?;
    let net = &src.cfg.network;
    let mut run = Run::new(&common.out_dir, "transform", src.label, common.seed)?;
    run.param("base", base);
    let lat = match partitions {
        Some(path) => {
            run.param("partitions", path.display());
            read_partitions(path, net)?
        }
        None => lattice(net)?,
    };
    let p = lat
        .get(base.checked_sub(1).ok_or_else(|| anyhow!("--base is 1-based"))?)
        .ok_or_else(|| {
            anyhow!(
                "--base {base} is out of range: the lattice has {} partitions",
                lat.len()
            )
        })?
        .clone();
    let tr = build_transform_from(net, &lat, &p).context("building the transform")?;
    write_transform(&mut run, &tr)?;
    run.finish()
}

fn block_json(tr: &TransformResult) -> Value {
    let blocks: Vec<Value> = tr
        .blocks
        .iter()
        .map(|b| {
            json!({
                "rows": one_based(&b.rows),
                "pieces": b.pieces.iter().map(|p| one_based(p)).collect::<Vec<_>>(),
                "shape": match b.shape {
                    BlockShape::Irreducible => "irreducible",
                    BlockShape::UpperTriangular => "upper-triangular",
                },
                "clusters": b.clusters.iter().map(|&c| cluster_name(c)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "base": partition_json(0, &tr.base)["clusters"],
        "parallel_rows": tr.num_parallel(),
        "transverse_rows": tr.num_transverse(),
        "row_cluster": tr.row_cluster.iter().map(|&c| cluster_name(c)).collect::<Vec<_>>(),
        "blocks": blocks,
        "orthonormality_error": tr.orthonormality_error(),
        "warnings": tr.warnings,
    })
}

fn write_transform(run: &mut Run, tr: &TransformResult) -> Result<()> {
    matrix_csv(run, "T.csv", &tr.t)?;
    for (k, b) in tr.b.iter().enumerate() {
        matrix_csv(run, &format!("B{}.csv", k + 1), b)?;
    }
    run.json("blocks.json", &block_json(tr))?;
    for w in &tr.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "T is {}x{}; {} transverse blocks, pieces {:?}",
        tr.t.nrows(),
        tr.t.ncols(),
        tr.blocks.len(),
        tr.pieces().iter().map(|p| one_based(p)).collect::<Vec<_>>()
    );
    Ok(())
}

pub fn classify(common: &Common, partition: Option<&str>) -> Result<()> {
    let src = load(common)?;
    let net = &src.cfg.network;
    let mut run = Run::new(&common.out_dir, "classify", src.label, common.seed)?;
    if let Some(p) = partition {
        run.param("partition", p);
    }
    let p = chosen_partition(partition, net)?;
    let lat = lattice(net)?;
    let tr = build_transform_from(net, &lat, &p).context("building the transform")?;
    write_classification(&mut run, &tr)?;
    run.finish()
}

fn verdict(tr: &TransformResult) -> Value {
    let c = classify_transform(tr);
    let mut clusters = serde_json::Map::new();
    for v in &c.clusters {
        let text = if v.trivial {
            "trivial".to_string()
        } else if v.is_independent() {
            "independent".to_string()
        } else {
            let mut parts = Vec::new();
            if !v.depends_on.is_empty() {
                let on: Vec<String> = v.depends_on.iter().map(|&q| cluster_name(q)).collect();
                parts.push(format!("one-way on {}", on.join(" ")));
            }
            if !v.intertwined_with.is_empty() {
                let with: Vec<String> = v.intertwined_with.iter().map(|&q| cluster_name(q)).collect();
                parts.push(format!("intertwined with {}", with.join(" ")));
            }
            parts.join("; ")
        };
        clusters.insert(cluster_name(v.cluster), Value::String(text));
    }
    Value::Object(clusters)
}

fn write_classification(run: &mut Run, tr: &TransformResult) -> Result<()> {
    let v = verdict(tr);
    let doc = json!({
        "clusters": partition_json(0, &tr.base)["clusters"],
        "verdict": v,
    });
    run.json("classification.json", &doc)?;
    println!("{v}");
    Ok(())
}

pub fn quotient(common: &Common, partition: Option<&str>) -> Result<()> {
    let src = load(common)?;
    let net = &src.cfg.network;
    let mut run = Run::new(&common.out_dir, "quotient", src.label, common.seed)?;
    if let Some(p) = partition {
        run.param("partition", p);
    }
    let p = chosen_partition(partition, net)?;
    let q = quotient_network(net, &p)?;
    let layers: Vec<Value> = (0..q.r.len())
        .map(|k| {
            let r = &q.r[k];
            json!({
                "r": (0..r.nrows()).map(|i| (0..r.ncols()).map(|j| r[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "sigma": q.sigma[k],
                "delay": q.delay[k],
                "coupling": q.coupling[k].id,
            })
        })
        .collect();
    let doc = json!({
        "clusters": one_based_clusters(&p),
        "cluster_type": q.cluster_type,
        "state_dim": q.state_dim,
        "layers": layers,
    });
    run.json("quotient.json", &doc)?;
    println!("{} clusters, {} layers", q.num_clusters(), q.r.len());
    run.finish()
}

/// Initial synchronous state: the case's per-type state, plus a seeded
/// offset of `spread`. Plain network files start from a seeded state in [-1, 1].
fn sync_init(src: &Source, p: &Partition, spread: f64, seed: u64) -> Vec<f64> {
    if src.from_case {
        if spread > 0.0 {
            src.cfg.spread_cluster_init(p, spread, seed)
        } else {
            src.cfg.cluster_init(p)
        }
    } else {
        src.cfg
            .spread_cluster_init(p, if spread > 0.0 { spread } else { 1.0 }, seed)
    }
}

fn trajectory_csv(run: &mut Run, name: &str, tr: &Trajectory, units: &str) -> Result<()> {
    let mut head = vec!["t".to_string()];
    for i in 0..tr.nodes {
        for d in 0..tr.dim {
            head.push(format!("{units}{}_{}", i + 1, d + 1));
        }
    }
    let rows: Vec<Vec<String>> = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(t, s)| std::iter::once(num(*t)).chain(s.iter().map(|v| num(*v))).collect())
        .collect();
    run.csv(name, &head, &rows)
}

fn dynamics_params(run: &mut Run, d: &Dynamics, dt: f64, horizon: f64) {
    run.param("dt", dt);
    run.param("horizon", horizon);
    run.param("spread", d.spread);
    if let Some(p) = &d.partition {
        run.param("partition", p);
    }
}

pub fn simulate(common: &Common, d: &Dynamics, on_quotient: bool, perturb: f64, every: usize) -> Result<()> {
    let src = load(common)?;
    let net = &src.cfg.network;
    let dt = d.dt.unwrap_or(src.cfg.dt);
    let horizon = d.horizon.unwrap_or(src.cfg.horizon);
    let mut run = Run::new(&common.out_dir, "simulate", src.label.clone(), common.seed)?;
    dynamics_params(&mut run, d, dt, horizon);
    run.param("quotient", on_quotient);
    run.param("perturb", perturb);
    run.param("every", every);
    let p = chosen_partition(d.partition.as_deref(), net)?;
    let init = sync_init(&src, &p, d.spread, common.seed);
    if on_quotient {
        let q = quotient_network(net, &p)?;
        let models = Models::for_quotient(&q)?;
        let tr = integrate_quotient(&q, &models, &init, horizon, dt, every.max(1))?;
        trajectory_csv(&mut run, "trajectory.csv", &tr, "c")?;
        println!("{} samples of {} clusters", tr.times.len(), tr.nodes);
    } else {
        let models = Models::for_network(net)?;
        let mut x = lift(&p, &init, net.state_dim);
        if perturb > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed.wrapping_add(1));
            x.iter_mut().for_each(|v| *v += perturb * rng.gen_range(-1.0..=1.0));
        }
        let tr = integrate_full(net, &models, &x, horizon, dt, every.max(1))?;
        trajectory_csv(&mut run, "trajectory.csv", &tr, "x")?;
        println!("{} samples of {} nodes", tr.times.len(), tr.nodes);
    }
    run.finish()
}

struct StabilitySetup {
    src: Source,
    base: Partition,
    problem: StabilityProblem,
    init: Vec<f64>,
    opts: MleOptions,
}

fn stability_setup(common: &Common, d: &Dynamics, tol: f64) -> Result<StabilitySetup> {
    let src = load(common)?;
    let net = &src.cfg.network;
    let base = chosen_partition(d.partition.as_deref(), net)?;
    let lat = lattice(net)?;
    let problem = StabilityProblem::new(net, &lat, &base).context("setting up the variational problem")?;
    let init = sync_init(&src, &base, d.spread, common.seed);
    let opts = MleOptions {
        dt: d.dt.unwrap_or(src.cfg.dt),
        horizon: d.horizon.unwrap_or(src.cfg.horizon),
        tol,
        seed: common.seed,
        ..MleOptions::default()
    };
    Ok(StabilitySetup {
        src,
        base,
        problem,
        init,
        opts,
    })
}

fn piece_label(problem: &StabilityProblem, k: usize) -> String {
    let clusters: Vec<String> = problem.pieces[k].clusters.iter().map(|&c| cluster_name(c)).collect();
    format!("piece{}({})", k + 1, clusters.join("+"))
}

pub fn mle(common: &Common, d: &Dynamics, tol: f64) -> Result<()> {
    let s = stability_setup(common, d, tol)?;
    let net = &s.src.cfg.network;
    let mut run = Run::new(&common.out_dir, "mle", s.src.label.clone(), common.seed)?;
    dynamics_params(&mut run, d, s.opts.dt, s.opts.horizon);
    run.param("tol", tol);
    let sigma = net.layers[0].sigma;
    let est = s.problem.piece_mles(Param::Sigma(0), sigma, &s.init, &s.opts)?;
    let rows: Vec<Vec<String>> = est
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let rows: Vec<String> = s.problem.pieces[k].rows.iter().map(|r| (r + 1).to_string()).collect();
            let clusters: Vec<String> = s.problem.pieces[k].clusters.iter().map(|&c| cluster_name(c)).collect();
            vec![
                (k + 1).to_string(),
                rows.join(" "),
                clusters.join(" "),
                num(e.value),
                e.converged.to_string(),
                num(e.drift),
            ]
        })
        .collect();
    run.csv(
        "mle.csv",
        &header(&["piece", "rows", "clusters", "mle", "converged", "drift"]),
        &rows,
    )?;
    let per_cluster = s.problem.cluster_mles(&est);
    let clusters: serde_json::Map<String, Value> = per_cluster
        .iter()
        .enumerate()
        .map(|(c, v)| (cluster_name(c), json!(v)))
        .collect();
    let overall = est.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    run.json(
        "mle.json",
        &json!({ "base": one_based_clusters(&s.base), "clusters": clusters, "max": overall }),
    )?;
    for (k, e) in est.iter().enumerate() {
        let flag = if e.converged { "" } else { " (not converged)" };
        println!("{}: {:.6}{flag}", piece_label(&s.problem, k), e.value);
    }
    run.finish()
}

fn grid_values(grid: &Grid, default: Option<(f64, f64, usize)>) -> Result<(f64, f64, usize)> {
    let (f, t, n) = default.unwrap_or((0.0, 1.0, 11));
    let out = (grid.from.unwrap_or(f), grid.to.unwrap_or(t), grid.points.unwrap_or(n));
    if out.2 == 0 {
        bail!("--points must be positive");
    }
    Ok(out)
}

pub fn sweep(common: &Common, d: &Dynamics, grid: &Grid, tol: f64, bisect: usize) -> Result<()> {
    let s = stability_setup(common, d, tol)?;
    let spec = s.src.cfg.sweep.clone();
    let param: Param = match (&grid.param, &spec) {
        (Some(text), _) => text.parse()?,
        (None, Some(spec)) => spec.param,
        (None, None) => bail!("--param is required for a network file"),
    };
    let (from, to, points) = grid_values(grid, spec.map(|sp| (sp.from, sp.to, sp.points)))?;
    let mut run = Run::new(&common.out_dir, "sweep", s.src.label.clone(), common.seed)?;
    dynamics_params(&mut run, d, s.opts.dt, s.opts.horizon);
    run.param("param", param);
    run.param("from", from);
    run.param("to", to);
    run.param("points", points);
    run.param("tol", tol);
    run.param("bisect", bisect);
    let report = run_sweep(&s, param, linspace(from, to, points), bisect)?;
    write_sweep(&mut run, &s.problem, &report)?;
    run.finish()
}

fn run_sweep(s: &StabilitySetup, param: Param, grid: Vec<f64>, bisect: usize) -> Result<StabilityReport> {
    let cfg = SweepConfig {
        network: s.src.cfg.network.clone(),
        base: s.base.clone(),
        param,
        grid,
        mle: s.opts,
        sync_init: s.init.clone(),
        bisection_steps: bisect,
        execution: Execution::Auto,
    };
    Ok(sweep_problem(&s.problem, &cfg)?)
}

fn write_sweep(run: &mut Run, problem: &StabilityProblem, r: &StabilityReport) -> Result<()> {
    let mut head = vec![r.param.to_string(), "max".to_string()];
    head.extend((0..r.pieces.len()).map(|k| piece_label(problem, k)));
    head.push("converged".to_string());
    let rows: Vec<Vec<String>> = r
        .grid
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut row = vec![num(*g), num(r.overall[i])];
            row.extend(r.mle[i].iter().map(|e| num(e.value)));
            row.push(r.mle[i].iter().all(|e| e.converged).to_string());
            row
        })
        .collect();
    run.csv("sweep.csv", &head, &rows)?;
    let ncl = r.cluster_mle.first().map_or(0, Vec::len);
    let mut chead = vec![r.param.to_string()];
    chead.extend((0..ncl).map(cluster_name));
    let crows: Vec<Vec<String>> = r
        .grid
        .iter()
        .zip(&r.cluster_mle)
        .map(|(g, c)| {
            std::iter::once(num(*g))
                .chain(c.iter().map(|v| v.map(num).unwrap_or_default()))
                .collect()
        })
        .collect();
    run.csv("cluster_mle.csv", &chead, &crows)?;
    run.json(
        "sweep.json",
        &json!({
            "param": r.param.to_string(),
            "threshold": r.threshold,
            "all_converged": r.all_converged(),
        }),
    )?;
    match r.threshold {
        Some(t) => println!("first stabilization at {} = {t:.6}", r.param),
        None => println!("no sign change of the largest transverse MLE on the grid"),
    }
    Ok(())
}

pub fn basin(common: &Common, d: &Dynamics, grid: &Grid, lags: usize, tol: f64) -> Result<()> {
    let src = load(common)?;
    let net = &src.cfg.network;
    let p = match d.partition.as_deref() {
        Some(t) => parse_partition(t, net)?,
        None if src.from_case && src.cfg.name.starts_with("violin") => casestudies::violin_two_clusters(),
        None => minimal_balanced_coloring(net),
    };
    if p.num_clusters() != 2 {
        bail!(
            "basin needs a two-cluster partition; this one has {} clusters",
            p.num_clusters()
        );
    }
    if let Some(param) = &grid.param {
        if param.parse::<Param>()? != Param::Delay {
            bail!("basin sweeps the delay only");
        }
    }
    if lags == 0 {
        bail!("--lags must be positive");
    }
    let (from, to, points) = grid_values(grid, Some((0.0, 4.0, 9)))?;
    let defaults = BasinOptions::default();
    let opts = BasinOptions {
        dt: d.dt.unwrap_or(defaults.dt),
        horizon: d.horizon.unwrap_or(defaults.horizon),
        tol,
        execution: Execution::Auto,
    };
    let mut run = Run::new(&common.out_dir, "basin", src.label, common.seed)?;
    dynamics_params(&mut run, d, opts.dt, opts.horizon);
    run.param("from", from);
    run.param("to", to);
    run.param("points", points);
    run.param("lags", lags);
    run.param("tol", tol);
    let q = quotient_network(net, &p)?;
    let delays = linspace(from, to, points);
    let initial: Vec<f64> = (0..lags).map(|k| TAU * k as f64 / lags as f64).collect();
    let map = basin_map(&q, &delays, &initial, &opts)?;
    let rows: Vec<Vec<String>> = map
        .iter()
        .map(|b| {
            vec![
                num(b.delay),
                num(b.initial_lag),
                num(b.final_lag),
                b.label.as_str().to_string(),
            ]
        })
        .collect();
    run.csv(
        "basin.csv",
        &header(&["delay", "initial_lag", "final_lag", "label"]),
        &rows,
    )?;
    for &delay in &delays {
        let here: Vec<_> = map.iter().filter(|b| b.delay == delay).collect();
        let anti = here.iter().filter(|b| b.label.as_str() == "anti-phase").count();
        println!("delay {delay:.3}: {anti}/{} anti-phase", here.len());
    }
    run.finish()
}

#[allow(clippy::too_many_arguments)]
pub fn case(
    name: Option<&str>,
    list: bool,
    out_dir: &Path,
    seed: u64,
    dt: Option<f64>,
    horizon: Option<f64>,
    points: Option<usize>,
    no_sweep: bool,
) -> Result<()> {
    if list {
        for n in FIXTURE_NAMES {
            println!("{n}");
        }
        return Ok(());
    }
    let name = name.ok_or_else(|| anyhow!("a case name is required (see --list)"))?;
    let common = Common {
        input_pos: None,
        input: None,
        case: Some(name.to_string()),
        out_dir: out_dir.to_path_buf(),
        seed,
    };
    let src = load(&common)?;
    let net = src.cfg.network.clone();
    let mut run = Run::new(out_dir, "case", src.label.clone(), seed)?;
    run.text("network.json", &net.to_json_string())?;
    let p = write_coloring(&mut run, &net)?;
    let lat = write_partitions(&mut run, &net)?;
    write_breakings(&mut run, &lat)?;
    let tr = build_transform_from(&net, &lat, &p).context("building the transform")?;
    write_transform(&mut run, &tr)?;
    write_classification(&mut run, &tr)?;
    if !no_sweep {
        if let Some(spec) = src.cfg.sweep.clone() {
            let d = Dynamics {
                dt,
                horizon,
                partition: None,
                spread: 0.0,
            };
            let s = stability_setup(&common, &d, MleOptions::default().tol)?;
            let points = points.unwrap_or(spec.points);
            dynamics_params(&mut run, &d, s.opts.dt, s.opts.horizon);
            run.param("param", spec.param);
            run.param("from", spec.from);
            run.param("to", spec.to);
            run.param("points", points);
            let report = run_sweep(&s, spec.param, linspace(spec.from, spec.to, points), 6)?;
            write_sweep(&mut run, &s.problem, &report)?;
        }
    }
    run.finish()
}
