//! Ready-made networks: the 5-node and 12-node structural examples, the
//! ring of eight violin players and the two-layer neuron network.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coloring::Partition;
use crate::dynsim::sweep::Param;
use crate::error::{Error, Result};
use crate::netmodel::{load_network, Layer, ModelSpec, Network};

pub const FIXTURE_NAMES: [&str; 8] = [
    "example5",
    "fig1net",
    "violin_undirected",
    "violin_arrowhead",
    "violin_unidir",
    "neuron_full",
    "neuron_cut_up",
    "neuron_cut_down",
];

/// Environment variable naming a directory of `<name>.json` fixture overrides.
pub const FIXTURE_DIR_ENV: &str = "CLUSTERSYNC_FIXTURES";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: Param,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub min_clusters: usize,
    pub trivial_clusters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub name: String,
    pub network: Network,
    /// Initial state per node type (index `t - 1`).
    pub type_init: Vec<Vec<f64>>,
    pub sweep: Option<SweepSpec>,
    pub dt: f64,
    pub horizon: f64,
    pub expected: Expected,
}

impl CaseConfig {
    /// Initial synchronous state of every cluster of `p`, concatenated.
    pub fn cluster_init(&self, p: &Partition) -> Vec<f64> {
        p.clusters()
            .iter()
            .flat_map(|c| self.type_init[self.network.node_types[c[0]] - 1].clone())
            .collect()
    }

    /// `cluster_init` with a seeded uniform offset in `[-amplitude, amplitude]`
    /// on every component, so distinct clusters start apart.
    pub fn spread_cluster_init(&self, p: &Partition, amplitude: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.cluster_init(p)
            .into_iter()
            .map(|v| v + amplitude * rng.gen_range(-1.0..=1.0))
            .collect()
    }

    /// Initial state of every node, concatenated.
    pub fn node_init(&self) -> Vec<f64> {
        self.network
            .node_types
            .iter()
            .flat_map(|&t| self.type_init[t - 1].clone())
            .collect()
    }
}

fn layer_from(n: usize, entries: &[(usize, usize, f64)], sigma: f64, delay: f64, coupling: ModelSpec) -> Layer {
    let mut a = DMatrix::zeros(n, n);
    for &(i, j, w) in entries {
        a[(i - 1, j - 1)] = w;
    }
    Layer::new(a, sigma, delay, coupling)
}

/// Five nodes, one layer; node 1 and 2 each hear one node of {1, 2} and both
/// of {3, 4}; nodes 3 and 5 hear node 1 and node 4 hears node 2.
pub fn example5() -> Network {
    let entries = [
        (1, 2, 1.0),
        (2, 1, 1.0),
        (1, 3, 1.0),
        (1, 4, 1.0),
        (2, 3, 1.0),
        (2, 4, 1.0),
        (3, 1, 1.0),
        (4, 2, 1.0),
        (5, 1, 1.0),
    ];
    Network::new(
        vec![1; 5],
        vec![layer_from(5, &entries, 0.3, 0.0, ModelSpec::new("diffusive_x"))],
        3,
    )
    .with_node_models(vec![ModelSpec::new("rossler")])
}

/// Twelve nodes of three types over two layers.
pub fn fig1net() -> Network {
    let solid = [
        (3, 1, 1.0),
        (2, 3, 1.0),
        (1, 2, 1.0),
        (4, 1, 1.0),
        (4, 2, 1.0),
        (5, 2, 2.0),
        (6, 2, 2.0),
        (5, 4, 1.0),
        (6, 5, 1.0),
        (4, 6, 1.0),
        (4, 8, 1.0),
        (5, 8, 1.0),
        (6, 8, 1.0),
        (7, 5, 1.0),
        (8, 5, 1.0),
        (12, 11, 2.0),
        (11, 12, 2.0),
    ];
    let dashed = [
        (8, 7, 1.0),
        (7, 8, 1.0),
        (10, 7, 1.0),
        (7, 10, 1.0),
        (9, 8, 1.0),
        (8, 9, 1.0),
        (10, 9, 1.0),
        (9, 10, 1.0),
    ];
    let types = vec![1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3, 3];
    Network::new(
        types,
        vec![
            layer_from(12, &solid, 0.1, 0.0, ModelSpec::new("diffusive_x")),
            layer_from(12, &dashed, 0.1, 0.0, ModelSpec::new("diffusive_x")),
        ],
        3,
    )
    .with_node_models(vec![
        ModelSpec::new("rossler").with("a", 0.2),
        ModelSpec::new("rossler").with("a", 0.25),
        ModelSpec::new("rossler").with("a", 0.3),
    ])
}

const VIOLIN_OMEGA: f64 = 0.25;
const VIOLIN_KAPPA: f64 = 0.2;

fn violin(entries: &[(usize, usize, f64)], delay: f64) -> Network {
    Network::new(
        vec![1; 8],
        vec![layer_from(8, entries, VIOLIN_KAPPA, delay, ModelSpec::new("kuramoto"))],
        1,
    )
    .with_node_models(vec![ModelSpec::new("phase").with("omega", VIOLIN_OMEGA)])
}

fn prev(i: usize) -> usize {
    (i + 6) % 8 + 1
}

fn next(i: usize) -> usize {
    i % 8 + 1
}

/// Every player hears both neighbours.
pub fn violin_undirected() -> Network {
    let e: Vec<_> = (1..=8).flat_map(|i| [(i, prev(i), 1.0), (i, next(i), 1.0)]).collect();
    violin(&e, 0.5)
}

/// Player 1 hears both neighbours; players 2-5 hear only their predecessor
/// and players 6-8 only their successor.
pub fn violin_arrowhead() -> Network {
    let mut e = vec![(1, 8, 1.0), (1, 2, 1.0)];
    e.extend((2..=5).map(|i| (i, prev(i), 1.0)));
    e.extend((6..=8).map(|i| (i, next(i), 1.0)));
    violin(&e, 2.0)
}

/// Every player hears only its predecessor.
pub fn violin_unidir() -> Network {
    let e: Vec<_> = (1..=8).map(|i| (i, prev(i), 1.0)).collect();
    violin(&e, 2.0)
}

/// Alternating two-cluster partition of the violin ring.
pub fn violin_two_clusters() -> Partition {
    Partition::from_labels(&[0, 1, 0, 1, 0, 1, 0, 1])
}

/// Which interlayer direction is dropped: `Down` drops I -> II, `Up` drops II -> I.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cut {
    None,
    Down,
    Up,
}

/// Layer I (nodes 1-10, uncoupled) above layer II (nodes 11-20, a ring with
/// gap junctions to the three nearest neighbours on each side). Node `i` of
/// layer I and node `i + 10` of layer II share a chemical synapse of weight
/// 1 from II to I and 1/4 from I to II.
fn neuron(cut: Cut) -> Network {
    let half = 10;
    let mut ring = Vec::new();
    for i in 0..half {
        for d in 1..=3 {
            ring.push((half + i + 1, half + (i + d) % half + 1, 1.0));
            ring.push((half + i + 1, half + (i + half - d) % half + 1, 1.0));
        }
    }
    let mut chem = Vec::new();
    for i in 1..=half {
        if cut != Cut::Down {
            chem.push((i + half, i, 0.25));
        }
        if cut != Cut::Up {
            chem.push((i, i + half, 1.0));
        }
    }
    let mut types = vec![1; half];
    types.extend(vec![2; half]);
    Network::new(
        types,
        vec![
            layer_from(20, &ring, 0.005, 0.0, ModelSpec::new("diffusive_x")),
            layer_from(20, &chem, 2.3, 0.0, ModelSpec::new("chemical")),
        ],
        3,
    )
    .with_node_models(vec![ModelSpec::new("hr_layer1"), ModelSpec::new("hr_layer2")])
}

pub fn neuron_full() -> Network {
    neuron(Cut::None)
}

/// Links from the upper layer (I) to the lower layer (II) removed.
pub fn neuron_cut_up() -> Network {
    neuron(Cut::Down)
}

/// Links from the lower layer (II) to the upper layer (I) removed.
pub fn neuron_cut_down() -> Network {
    neuron(Cut::Up)
}

/// Twelve-cluster partition of the neuron network (mirror pairs about nodes 1 and 6).
pub fn neuron_mirror_partition() -> Partition {
    let clusters: Vec<Vec<usize>> = vec![
        vec![1],
        vec![2, 10],
        vec![3, 9],
        vec![4, 8],
        vec![5, 7],
        vec![6],
        vec![11],
        vec![12, 20],
        vec![13, 19],
        vec![14, 18],
        vec![15, 17],
        vec![16],
    ];
    Partition::from_one_based_clusters(20, &clusters).expect("valid partition")
}

fn builtin(name: &str) -> Result<Network> {
    Ok(match name {
        "example5" => example5(),
        "fig1net" => fig1net(),
        "violin_undirected" => violin_undirected(),
        "violin_arrowhead" => violin_arrowhead(),
        "violin_unidir" => violin_unidir(),
        "neuron_full" => neuron_full(),
        "neuron_cut_up" => neuron_cut_up(),
        "neuron_cut_down" => neuron_cut_down(),
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}

/// The built-in network of a fixture.
pub fn fixture_network(name: &str) -> Result<Network> {
    builtin(name)
}

/// Fixture with its network read from `$CLUSTERSYNC_FIXTURES/<name>.json`
/// when that variable is set, otherwise the built-in network.
pub fn fixture(name: &str) -> Result<CaseConfig> {
    let dir = std::env::var_os(FIXTURE_DIR_ENV);
    fixture_in(name, dir.as_deref().map(Path::new))
}

pub fn fixture_in(name: &str, dir: Option<&Path>) -> Result<CaseConfig> {
    let builtin_net = builtin(name)?;
    let network = match dir {
        Some(d) => load_network(d.join(format!("{name}.json")))?,
        None => builtin_net,
    };
    let neuron_init = vec![vec![-1.0, -5.0, 3.0], vec![-1.2, -5.5, 3.1]];
    let rossler_init = vec![vec![1.0, 1.0, 0.0], vec![1.1, 0.9, 0.0], vec![0.9, 1.2, 0.0]];
    let cfg = match name {
        "example5" => CaseConfig {
            name: name.into(),
            network,
            type_init: rossler_init[..1].to_vec(),
            sweep: Some(SweepSpec {
                param: Param::Sigma(0),
                from: 0.0,
                to: 1.0,
                points: 11,
            }),
            dt: 0.01,
            horizon: 2000.0,
            expected: Expected {
                min_clusters: 2,
                trivial_clusters: 0,
            },
        },
        "fig1net" => CaseConfig {
            name: name.into(),
            network,
            type_init: rossler_init,
            sweep: Some(SweepSpec {
                param: Param::Sigma(0),
                from: 0.0,
                to: 1.0,
                points: 11,
            }),
            dt: 0.01,
            horizon: 2000.0,
            expected: Expected {
                min_clusters: 5,
                trivial_clusters: 0,
            },
        },
        "violin_undirected" | "violin_arrowhead" | "violin_unidir" => CaseConfig {
            name: name.into(),
            network,
            type_init: vec![vec![0.0]],
            sweep: Some(SweepSpec {
                param: Param::Delay,
                from: 0.0,
                to: 4.0,
                points: 9,
            }),
            dt: 1e-3,
            horizon: 200.0,
            expected: Expected {
                min_clusters: if name == "violin_arrowhead" { 5 } else { 1 },
                trivial_clusters: if name == "violin_arrowhead" { 2 } else { 0 },
            },
        },
        _ => CaseConfig {
            name: name.into(),
            network,
            type_init: neuron_init,
            sweep: Some(SweepSpec {
                param: Param::Sigma(1),
                from: 0.0,
                to: 4.0,
                points: 41,
            }),
            dt: 0.05,
            horizon: 10_000.0,
            expected: Expected {
                min_clusters: 2,
                trivial_clusters: 0,
            },
        },
    };
    Ok(cfg)
}

/// Writes every built-in fixture network as `<dir>/<name>.json`.
pub fn write_fixtures(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for name in FIXTURE_NAMES {
        crate::netmodel::save_network(&builtin(name)?, dir.join(format!("{name}.json")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::minimal_balanced_coloring;

    #[test]
    fn every_fixture_is_valid_and_has_its_cluster_count() {
        for name in FIXTURE_NAMES {
            let cfg = fixture_in(name, None).unwrap();
            assert!(cfg.network.validate().is_empty(), "{name}");
            let p = minimal_balanced_coloring(&cfg.network);
            assert_eq!(p.num_clusters(), cfg.expected.min_clusters, "{name}");
            let trivial = p.cluster_sizes().iter().filter(|&&s| s == 1).count();
            assert_eq!(trivial, cfg.expected.trivial_clusters, "{name}");
            assert_eq!(cfg.type_init.len(), cfg.network.num_types(), "{name}");
        }
    }

    #[test]
    fn unknown_fixture() {
        assert!(matches!(fixture_in("nope", None), Err(Error::UnknownFixture(_))));
    }
}
