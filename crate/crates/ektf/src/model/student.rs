//! Student networks behind one interface: forward to a logit, backward to
//! named parameter gradients plus the input gradient.

use super::crossnet::{CrossNet, CrossTrace};
use super::mlp::{MlpNet, MlpTrace};
use super::ParamMap;
use crate::error::Result;
use crate::numkit::matrix::{sigmoid, Matrix};
use crate::numkit::rng::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudentKind {
    Mlp,
    Crossnet,
}

#[derive(Clone, Debug)]
pub enum StudentNet {
    Mlp(MlpNet),
    Cross(CrossNet),
}

pub enum StudentTrace {
    Mlp(MlpTrace),
    Cross(CrossTrace),
}

/// Architecture knobs shared by all students of a kind.
#[derive(Clone, Debug)]
pub struct StudentArch {
    pub hidden: Vec<usize>,
    pub cross_layers: usize,
    pub init_std: f64,
}

impl Default for StudentArch {
    fn default() -> Self {
        StudentArch {
            hidden: vec![64, 64],
            cross_layers: 2,
            init_std: 0.01,
        }
    }
}

impl StudentNet {
    pub fn init(kind: StudentKind, input_dim: usize, arch: &StudentArch, rng: &mut Rng) -> Result<Self> {
        Ok(match kind {
            StudentKind::Mlp => {
                StudentNet::Mlp(MlpNet::init(input_dim, &arch.hidden, arch.init_std, rng)?)
            }
            StudentKind::Crossnet => StudentNet::Cross(CrossNet::init(
                input_dim,
                arch.cross_layers,
                arch.init_std,
                rng,
            )?),
        })
    }

    pub fn kind(&self) -> StudentKind {
        match self {
            StudentNet::Mlp(_) => StudentKind::Mlp,
            StudentNet::Cross(_) => StudentKind::Crossnet,
        }
    }

    /// Forward to (logits, probs, trace). probs = sigmoid(logits).
    pub fn forward(&self, h: &Matrix) -> (Vec<f64>, Vec<f64>, StudentTrace) {
        match self {
            StudentNet::Mlp(net) => {
                let (logits, trace) = net.forward(h);
                let probs = logits.iter().map(|&z| sigmoid(z)).collect();
                (logits, probs, StudentTrace::Mlp(trace))
            }
            StudentNet::Cross(net) => {
                let (logits, trace) = net.forward(h);
                let probs = logits.iter().map(|&z| sigmoid(z)).collect();
                (logits, probs, StudentTrace::Cross(trace))
            }
        }
    }

    /// Backward from dL/dlogit. Parameter gradients land in `grads` under
    /// `prefix`; returns dL/dh. The trace is consumed, so a stale or reused
    /// trace is a compile-time impossibility rather than a runtime check.
    pub fn backward(
        &self,
        h: &Matrix,
        trace: StudentTrace,
        dlogit: &[f64],
        prefix: &str,
        grads: &mut ParamMap,
    ) -> Matrix {
        match (self, trace) {
            (StudentNet::Mlp(net), StudentTrace::Mlp(trace)) => {
                let (layer_grads, dh) = net.backward(h, trace, dlogit);
                for (j, (dw, db)) in layer_grads.into_iter().enumerate() {
                    grads.insert(format!("{prefix}.layer{j}.w"), dw);
                    grads.insert(format!("{prefix}.layer{j}.b"), db);
                }
                dh
            }
            (StudentNet::Cross(net), StudentTrace::Cross(trace)) => {
                let (cross_grads, dh, (dhw, dhb)) = net.backward(h, trace, dlogit);
                for (j, (dw, db)) in cross_grads.into_iter().enumerate() {
                    grads.insert(format!("{prefix}.cross{j}.w"), dw);
                    grads.insert(format!("{prefix}.cross{j}.b"), db);
                }
                grads.insert(format!("{prefix}.head.w"), dhw);
                grads.insert(format!("{prefix}.head.b"), dhb);
                dh
            }
            _ => unreachable!("trace kind always matches the student that made it"),
        }
    }

    /// Visit parameters as (name, matrix) in a fixed deterministic order.
    pub fn visit_params<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Matrix)) {
        match self {
            StudentNet::Mlp(net) => {
                for j in 0..net.num_layers() {
                    f(format!("{prefix}.layer{j}.w"), &net.weights[j]);
                    f(format!("{prefix}.layer{j}.b"), &net.biases[j]);
                }
            }
            StudentNet::Cross(net) => {
                for j in 0..net.num_layers() {
                    f(format!("{prefix}.cross{j}.w"), &net.cross_weights[j]);
                    f(format!("{prefix}.cross{j}.b"), &net.cross_biases[j]);
                }
                f(format!("{prefix}.head.w"), &net.head_w);
                f(format!("{prefix}.head.b"), &net.head_b);
            }
        }
    }

    pub fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Matrix)) {
        match self {
            StudentNet::Mlp(net) => {
                for j in 0..net.weights.len() {
                    f(format!("{prefix}.layer{j}.w"), &mut net.weights[j]);
                    f(format!("{prefix}.layer{j}.b"), &mut net.biases[j]);
                }
            }
            StudentNet::Cross(net) => {
                for j in 0..net.cross_weights.len() {
                    f(format!("{prefix}.cross{j}.w"), &mut net.cross_weights[j]);
                    f(format!("{prefix}.cross{j}.b"), &mut net.cross_biases[j]);
                }
                f(format!("{prefix}.head.w"), &mut net.head_w);
                f(format!("{prefix}.head.b"), &mut net.head_b);
            }
        }
    }
}
