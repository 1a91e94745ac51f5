//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every operation eagerly: the forward value is computed
//! immediately and a backward rule is stored alongside it. [`Var`] is a cheap
//! handle into the tape. Calling [`Tape::backward`] on a scalar walks the
//! nodes in reverse creation order, so each node is visited exactly once and
//! only after every consumer has contributed to its gradient.
//!
//! Tapes are single-threaded but `Send`; independent tapes may run on
//! separate threads.

mod activation;
mod conv;
mod elementwise;
mod linear;
mod loss;
mod norm;
mod pool;
mod reduce;
mod shape;

pub use activation::{sigmoid, Activation};
pub use conv::ConvOptions;
pub use norm::{BatchNormConfig, RunningStats};
pub use pool::{PoolKind, PoolScope};
pub use reduce::ReduceKind;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// What a backward rule sees when it runs.
pub struct BackwardCtx<'a> {
    pub inputs: Vec<&'a Tensor>,
    pub output: &'a Tensor,
    /// Gradient of the loss with respect to `output`, same length as its data.
    pub grad: &'a [f64],
    /// `needs[i]` is false when input `i` does not require a gradient.
    pub needs: &'a [bool],
}

/// Backward rule: one optional gradient per input, each matching that
/// input's element count.
pub type BackwardFn = Box<dyn Fn(&BackwardCtx<'_>) -> Vec<Option<Vec<f64>>> + Send + Sync>;

/// Train/eval switch shared by batch normalization and dropout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

struct Node {
    value: Tensor,
    inputs: Vec<Var>,
    backward: Option<BackwardFn>,
    requires_grad: bool,
    is_leaf: bool,
    grad: Option<Vec<f64>>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an input value. Leaves with `requires_grad` receive a gradient
    /// on every [`Tape::backward`] call, zero if the loss does not reach them.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            inputs: Vec::new(),
            backward: None,
            requires_grad,
            is_leaf: true,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient from the most recent backward pass, if any reached `v`.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    /// Records a custom differentiable operation.
    ///
    /// `value` must already hold the forward result. The backward rule is
    /// dropped when no input requires a gradient.
    pub fn custom(&mut self, inputs: &[Var], value: Tensor, backward: BackwardFn) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        if cfg!(debug_assertions)
            && inputs.iter().all(|v| self.nodes[v.0].value.all_finite())
        {
            debug_assert!(value.all_finite(), "non-finite output from finite inputs");
        }
        self.nodes.push(Node {
            value,
            inputs: inputs.to_vec(),
            backward: requires_grad.then_some(backward),
            requires_grad,
            is_leaf: false,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.nodes[loss.0].value.is_scalar() {
            return Err(Error::protocol(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        if self.nodes[loss.0].requires_grad {
            self.nodes[loss.0].grad = Some(vec![1.0]);
        }
        for i in (0..=loss.0).rev() {
            let Some(grad) = self.nodes[i].grad.take() else {
                continue;
            };
            let contributions = {
                let node = &self.nodes[i];
                match &node.backward {
                    None => None,
                    Some(rule) => {
                        let needs: Vec<bool> = node
                            .inputs
                            .iter()
                            .map(|v| self.nodes[v.0].requires_grad)
                            .collect();
                        let ctx = BackwardCtx {
                            inputs: node.inputs.iter().map(|v| &self.nodes[v.0].value).collect(),
                            output: &node.value,
                            grad: &grad,
                            needs: &needs,
                        };
                        Some((node.inputs.clone(), rule(&ctx)))
                    }
                }
            };
            self.nodes[i].grad = Some(grad);
            if let Some((inputs, grads)) = contributions {
                debug_assert_eq!(inputs.len(), grads.len());
                for (input, g) in inputs.into_iter().zip(grads) {
                    let Some(g) = g else { continue };
                    let target = &mut self.nodes[input.0];
                    if !target.requires_grad {
                        continue;
                    }
                    debug_assert_eq!(g.len(), target.value.numel());
                    match &mut target.grad {
                        Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                        None => target.grad = Some(g),
                    }
                }
            }
        }
        for node in &mut self.nodes {
            if node.is_leaf && node.requires_grad && node.grad.is_none() {
                node.grad = Some(vec![0.0; node.value.numel()]);
            }
        }
        Ok(())
    }
}
