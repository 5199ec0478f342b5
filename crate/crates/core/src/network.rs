//! Labelled tensor networks with a greedy pairwise contraction planner.
//!
//! Every leg carries an integer label. A label shared by two nodes is summed
//! over; a label owned by a single node is an open leg of the result. The
//! planner repeatedly merges the connected pair whose result is smallest,
//! breaking ties by the smallest shared label, and the whole plan is priced
//! before any arithmetic happens.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tensor::{contract, tensor_product, DenseTensor};

pub type Label = usize;

/// Largest intermediate, in complex entries, that contractions may allocate.
pub const DEFAULT_BUDGET: usize = 1 << 26;

#[derive(Clone, Debug)]
struct Node {
    tensor: DenseTensor,
    labels: Vec<Label>,
}

#[derive(Clone, Debug, Default)]
pub struct Network {
    nodes: Vec<Node>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    /// Pairs of node slots merged at each step; the merged node takes the
    /// next fresh slot.
    pub steps: Vec<(usize, usize)>,
    /// Largest tensor (in entries) alive during the contraction.
    pub peak: usize,
}

fn merged_labels(a: &[(Label, usize)], b: &[(Label, usize)]) -> Vec<(Label, usize)> {
    let mut out: Vec<(Label, usize)> = a.iter().filter(|(l, _)| !b.iter().any(|(m, _)| m == l)).copied().collect();
    out.extend(b.iter().filter(|(l, _)| !a.iter().any(|(m, _)| m == l)).copied());
    out
}

fn size_of(legs: &[(Label, usize)]) -> usize {
    legs.iter().fold(1usize, |acc, &(_, d)| acc.saturating_mul(d))
}

impl Network {
    pub fn new() -> Self {
        Network::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add(&mut self, tensor: DenseTensor, labels: Vec<Label>) -> Result<()> {
        if tensor.rank() != labels.len() {
            return Err(Error::Shape(format!(
                "{} labels for a tensor of rank {}",
                labels.len(),
                tensor.rank()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Argument(format!("label {l} repeated on one node")));
            }
        }
        self.nodes.push(Node { tensor, labels });
        Ok(())
    }

    fn legs(&self) -> Result<Vec<Vec<(Label, usize)>>> {
        let mut owners: HashMap<Label, (usize, usize)> = HashMap::new();
        for (n, node) in self.nodes.iter().enumerate() {
            for (&l, &d) in node.labels.iter().zip(node.tensor.shape()) {
                match owners.get_mut(&l) {
                    None => {
                        owners.insert(l, (1, d));
                    }
                    Some((count, dim)) => {
                        if *dim != d {
                            return Err(Error::Model(format!(
                                "label {l} has extents {dim} and {d} (node {n})"
                            )));
                        }
                        *count += 1;
                        if *count > 2 {
                            return Err(Error::Model(format!("label {l} appears on more than two nodes")));
                        }
                    }
                }
            }
        }
        Ok(self
            .nodes
            .iter()
            .map(|n| n.labels.iter().copied().zip(n.tensor.shape().iter().copied()).collect())
            .collect())
    }

    /// Greedy plan: among connected pairs pick the smallest merged result,
    /// ties broken by the smallest shared label. Disconnected components are
    /// joined by outer products of the two smallest remaining nodes.
    pub fn plan(&self) -> Result<Plan> {
        let mut slots: Vec<Option<Vec<(Label, usize)>>> = self.legs()?.into_iter().map(Some).collect();
        let mut peak = slots.iter().flatten().map(|l| size_of(l)).max().unwrap_or(1);
        let mut steps = Vec::new();
        let mut alive = slots.len();
        while alive > 1 {
            let mut owners: HashMap<Label, Vec<usize>> = HashMap::new();
            for (s, legs) in slots.iter().enumerate() {
                if let Some(legs) = legs {
                    for &(l, _) in legs {
                        owners.entry(l).or_default().push(s);
                    }
                }
            }
            let mut best: Option<(usize, Label, usize, usize)> = None;
            for (&label, who) in &owners {
                if who.len() != 2 {
                    continue;
                }
                let (a, b) = (who[0].min(who[1]), who[0].max(who[1]));
                let size = size_of(&merged_labels(
                    slots[a].as_ref().unwrap(),
                    slots[b].as_ref().unwrap(),
                ));
                let key = (size, label, a, b);
                if best.is_none_or(|cur| key < cur) {
                    best = Some(key);
                }
            }
            let (a, b, size) = match best {
                Some((size, _, a, b)) => (a, b, size),
                None => {
                    let mut live: Vec<(usize, usize)> = slots
                        .iter()
                        .enumerate()
                        .filter_map(|(s, l)| l.as_ref().map(|l| (size_of(l), s)))
                        .collect();
                    live.sort();
                    let (a, b) = (live[0].1.min(live[1].1), live[0].1.max(live[1].1));
                    (a, b, live[0].0.saturating_mul(live[1].0))
                }
            };
            let merged = merged_labels(slots[a].as_ref().unwrap(), slots[b].as_ref().unwrap());
            slots[a] = None;
            slots[b] = None;
            slots.push(Some(merged));
            steps.push((a, b));
            peak = peak.max(size);
            alive -= 1;
        }
        Ok(Plan { steps, peak })
    }

    /// Contract everything; the open legs of the result are ordered as in
    /// `output`. Fails before any arithmetic if the plan exceeds `budget`.
    pub fn contract_all(self, output: &[Label], budget: usize) -> Result<DenseTensor> {
        let plan = self.plan()?;
        if plan.peak > budget {
            return Err(Error::Budget { predicted: plan.peak, budget });
        }
        self.execute(&plan, output)
    }

    pub fn execute(self, plan: &Plan, output: &[Label]) -> Result<DenseTensor> {
        if self.nodes.is_empty() {
            return Err(Error::Argument("empty network".into()));
        }
        let mut slots: Vec<Option<Node>> = self.nodes.into_iter().map(Some).collect();
        for &(a, b) in &plan.steps {
            let na = slots[a].take().ok_or_else(|| Error::Argument("plan reuses a node".into()))?;
            let nb = slots[b].take().ok_or_else(|| Error::Argument("plan reuses a node".into()))?;
            let pairs: Vec<(usize, usize)> = na
                .labels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| nb.labels.iter().position(|m| m == l).map(|j| (i, j)))
                .collect();
            let tensor = if pairs.is_empty() {
                tensor_product(&na.tensor, &nb.tensor)
            } else {
                contract(&na.tensor, &nb.tensor, &pairs)?
            };
            let mut labels: Vec<Label> = na.labels.iter().filter(|l| !nb.labels.contains(l)).copied().collect();
            labels.extend(nb.labels.iter().filter(|l| !na.labels.contains(l)).copied());
            slots.push(Some(Node { tensor, labels }));
        }
        let mut rest = slots.into_iter().flatten();
        let last = rest.next().ok_or_else(|| Error::Argument("plan consumed every node".into()))?;
        if rest.next().is_some() {
            return Err(Error::Argument("plan left more than one node".into()));
        }
        if last.labels.len() != output.len() {
            return Err(Error::Argument(format!(
                "result has open labels {:?}, requested {output:?}",
                last.labels
            )));
        }
        let perm: Vec<usize> = output
            .iter()
            .map(|l| {
                last.labels
                    .iter()
                    .position(|m| m == l)
                    .ok_or_else(|| Error::Argument(format!("label {l} is not an open leg")))
            })
            .collect::<Result<_>>()?;
        last.tensor.permute(&perm)
    }
}
