//! Node vector fields and pairwise coupling functions, with analytic Jacobians.
//!
//! Jacobians are written row-major into `n * n` slices.

use std::fmt::Debug;

use crate::coloring::QuotientNetwork;
use crate::error::{Error, Result};
use crate::netmodel::{ModelSpec, Network};

pub trait NodeModel: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn f(&self, x: &[f64], out: &mut [f64]);
    fn df(&self, x: &[f64], jac: &mut [f64]);
}

/// `h(x_i, x_j)` where `x_j` is the (delayed) sender state.
pub trait CouplingFunction: Debug + Send + Sync {
    fn h(&self, xi: &[f64], xj: &[f64], out: &mut [f64]);
    fn d_receiver(&self, xi: &[f64], xj: &[f64], jac: &mut [f64]);
    fn d_sender(&self, xi: &[f64], xj: &[f64], jac: &mut [f64]);
}

/// Identical phase oscillator, `phi' = omega`.
#[derive(Debug, Clone)]
pub struct PhaseOscillator {
    pub omega: f64,
}

impl NodeModel for PhaseOscillator {
    fn dim(&self) -> usize {
        1
    }
    fn f(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = self.omega;
    }
    fn df(&self, _x: &[f64], jac: &mut [f64]) {
        jac[0] = 0.0;
    }
}

/// Three-variable bursting neuron:
/// `x' = a x^2 - x^3 - y - z`, `y' = (a + alpha) x^2 - y`, `z' = c (b x - z + e)`.
#[derive(Debug, Clone)]
pub struct BurstingNeuron {
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

impl BurstingNeuron {
    pub fn layer1() -> Self {
        Self {
            a: 2.8,
            alpha: 1.6,
            b: 9.0,
            c: 0.001,
            e: 5.0,
        }
    }

    pub fn layer2() -> Self {
        Self {
            alpha: 1.7,
            ..Self::layer1()
        }
    }
}

impl NodeModel for BurstingNeuron {
    fn dim(&self) -> usize {
        3
    }
    fn f(&self, s: &[f64], out: &mut [f64]) {
        let (x, y, z) = (s[0], s[1], s[2]);
        out[0] = self.a * x * x - x * x * x - y - z;
        out[1] = (self.a + self.alpha) * x * x - y;
        out[2] = self.c * (self.b * x - z + self.e);
    }
    fn df(&self, s: &[f64], j: &mut [f64]) {
        let x = s[0];
        j.copy_from_slice(&[
            2.0 * self.a * x - 3.0 * x * x,
            -1.0,
            -1.0,
            2.0 * (self.a + self.alpha) * x,
            -1.0,
            0.0,
            self.c * self.b,
            0.0,
            -self.c,
        ]);
    }
}

#[derive(Debug, Clone)]
pub struct Rossler {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for Rossler {
    fn default() -> Self {
        Self { a: 0.2, b: 0.2, c: 5.7 }
    }
}

impl NodeModel for Rossler {
    fn dim(&self) -> usize {
        3
    }
    fn f(&self, s: &[f64], out: &mut [f64]) {
        let (x, y, z) = (s[0], s[1], s[2]);
        out[0] = -y - z;
        out[1] = x + self.a * y;
        out[2] = self.b + z * (x - self.c);
    }
    fn df(&self, s: &[f64], j: &mut [f64]) {
        j.copy_from_slice(&[0.0, -1.0, -1.0, 1.0, self.a, 0.0, s[2], 0.0, s[0] - self.c]);
    }
}

/// `sin(x_j - x_i)` on a scalar phase.
#[derive(Debug, Clone)]
pub struct Kuramoto;

impl CouplingFunction for Kuramoto {
    fn h(&self, xi: &[f64], xj: &[f64], out: &mut [f64]) {
        out[0] = (xj[0] - xi[0]).sin();
    }
    fn d_receiver(&self, xi: &[f64], xj: &[f64], jac: &mut [f64]) {
        jac[0] = -(xj[0] - xi[0]).cos();
    }
    fn d_sender(&self, xi: &[f64], xj: &[f64], jac: &mut [f64]) {
        jac[0] = (xj[0] - xi[0]).cos();
    }
}

/// `x_j - x_i` on every component, or only on the first one.
#[derive(Debug, Clone)]
pub struct Diffusive {
    pub first_only: bool,
}

impl CouplingFunction for Diffusive {
    fn h(&self, xi: &[f64], xj: &[f64], out: &mut [f64]) {
        for k in 0..out.len() {
            out[k] = if k == 0 || !self.first_only { xj[k] - xi[k] } else { 0.0 };
        }
    }
    fn d_receiver(&self, xi: &[f64], _xj: &[f64], jac: &mut [f64]) {
        diagonal(jac, xi.len(), self.first_only, -1.0);
    }
    fn d_sender(&self, xi: &[f64], _xj: &[f64], jac: &mut [f64]) {
        diagonal(jac, xi.len(), self.first_only, 1.0);
    }
}

fn diagonal(jac: &mut [f64], n: usize, first_only: bool, v: f64) {
    jac.fill(0.0);
    let m = if first_only { 1 } else { n };
    for k in 0..m {
        jac[k * n + k] = v;
    }
}

/// Excitatory chemical synapse on the first component:
/// `(d - x_i) / (1 + exp(-lambda (x_j - theta)))`.
#[derive(Debug, Clone)]
pub struct Chemical {
    pub d: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl Default for Chemical {
    fn default() -> Self {
        Self {
            d: 2.0,
            lambda: 10.0,
            theta: -0.25,
        }
    }
}

impl Chemical {
    fn gate(&self, v: f64) -> f64 {
        1.0 / (1.0 + (-self.lambda * (v - self.theta)).exp())
    }
}

impl CouplingFunction for Chemical {
    fn h(&self, xi: &[f64], xj: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = (self.d - xi[0]) * self.gate(xj[0]);
    }
    fn d_receiver(&self, _xi: &[f64], xj: &[f64], jac: &mut [f64]) {
        jac.fill(0.0);
        jac[0] = -self.gate(xj[0]);
    }
    fn d_sender(&self, xi: &[f64], xj: &[f64], jac: &mut [f64]) {
        jac.fill(0.0);
        let g = self.gate(xj[0]);
        jac[0] = (self.d - xi[0]) * self.lambda * g * (1.0 - g);
    }
}

fn check_params(spec: &ModelSpec, allowed: &[&str]) -> Result<()> {
    for key in spec.params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::ModelParams {
                id: spec.id.clone(),
                message: format!("unknown parameter `{key}`"),
            });
        }
    }
    Ok(())
}

/// Node model ids: `phase`, `hr_layer1`, `hr_layer2`, `rossler`.
pub fn node_model(spec: &ModelSpec) -> Result<Box<dyn NodeModel>> {
    let p = |k: &str, d: f64| spec.param(k).unwrap_or(d);
    Ok(match spec.id.as_str() {
        "phase" => {
            check_params(spec, &["omega"])?;
            Box::new(PhaseOscillator {
                omega: p("omega", 0.25),
            })
        }
        "hr_layer1" | "hr_layer2" => {
            check_params(spec, &["a", "alpha", "b", "c", "e"])?;
            let d = if spec.id == "hr_layer1" {
                BurstingNeuron::layer1()
            } else {
                BurstingNeuron::layer2()
            };
            Box::new(BurstingNeuron {
                a: p("a", d.a),
                alpha: p("alpha", d.alpha),
                b: p("b", d.b),
                c: p("c", d.c),
                e: p("e", d.e),
            })
        }
        "rossler" => {
            check_params(spec, &["a", "b", "c"])?;
            let d = Rossler::default();
            Box::new(Rossler {
                a: p("a", d.a),
                b: p("b", d.b),
                c: p("c", d.c),
            })
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

/// Coupling ids: `kuramoto`, `diffusive`, `diffusive_x`, `chemical`.
pub fn coupling_function(spec: &ModelSpec) -> Result<Box<dyn CouplingFunction>> {
    Ok(match spec.id.as_str() {
        "kuramoto" => {
            check_params(spec, &[])?;
            Box::new(Kuramoto)
        }
        "diffusive" | "diffusive_x" => {
            check_params(spec, &[])?;
            Box::new(Diffusive {
                first_only: spec.id == "diffusive_x",
            })
        }
        "chemical" => {
            check_params(spec, &["d", "lambda", "theta"])?;
            let d = Chemical::default();
            Box::new(Chemical {
                d: spec.param("d").unwrap_or(d.d),
                lambda: spec.param("lambda").unwrap_or(d.lambda),
                theta: spec.param("theta").unwrap_or(d.theta),
            })
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

/// Instantiated vector fields (per node type) and couplings (per layer).
#[derive(Debug)]
pub struct Models {
    pub state_dim: usize,
    pub nodes: Vec<Box<dyn NodeModel>>,
    pub couplings: Vec<Box<dyn CouplingFunction>>,
}

impl Models {
    pub fn new(state_dim: usize, node_specs: &[ModelSpec], coupling_specs: &[ModelSpec]) -> Result<Self> {
        let nodes = node_specs.iter().map(node_model).collect::<Result<Vec<_>>>()?;
        if let Some(bad) = nodes.iter().find(|m| m.dim() != state_dim) {
            return Err(Error::Dimension(format!(
                "node model of dimension {} in a state_dim {state_dim} network",
                bad.dim()
            )));
        }
        if state_dim != 1 && coupling_specs.iter().any(|c| c.id == "kuramoto") {
            return Err(Error::Dimension("kuramoto coupling needs state_dim 1".into()));
        }
        let couplings = coupling_specs
            .iter()
            .map(coupling_function)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            state_dim,
            nodes,
            couplings,
        })
    }

    pub fn for_network(net: &Network) -> Result<Self> {
        if net.node_models.len() < net.num_types() {
            return Err(Error::Config(format!(
                "network binds {} node models for {} node types",
                net.node_models.len(),
                net.num_types()
            )));
        }
        let couplings: Vec<ModelSpec> = net.layers.iter().map(|l| l.coupling.clone()).collect();
        Self::new(net.state_dim, &net.node_models, &couplings)
    }

    pub fn for_quotient(q: &QuotientNetwork) -> Result<Self> {
        let types = q.cluster_type.iter().copied().max().unwrap_or(0);
        if q.node_models.len() < types {
            return Err(Error::Config("quotient lacks node models".into()));
        }
        Self::new(q.state_dim, &q.node_models, &q.coupling)
    }

    /// Model of a 1-based node type.
    pub fn node(&self, node_type: usize) -> &dyn NodeModel {
        self.nodes[node_type - 1].as_ref()
    }
}
