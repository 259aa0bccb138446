use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ClusterAssignment;

/// Which clusters contribute global nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRule {
    /// Clusters of size `2..=ceil(N/2)`; the largest clusters if none qualify.
    #[default]
    SizeWindow,
    AllClusters,
    /// Every cluster except those of maximal size.
    LargestExcluded,
}

/// Sorted superpixel indices taking part in the long-range graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GlobalNodeSet {
    pub nodes: Vec<usize>,
}

impl GlobalNodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.nodes.binary_search(&i).is_ok()
    }
}

fn is_largest(sizes: &[usize]) -> Vec<bool> {
    let max = sizes.iter().copied().max().unwrap_or(0);
    sizes.iter().map(|&s| s == max).collect()
}

pub fn select_global_nodes(assign: &ClusterAssignment, rule: NodeRule) -> GlobalNodeSet {
    let n = assign.labels.len();
    let sizes = assign.sizes();
    let keep: Vec<bool> = match rule {
        NodeRule::AllClusters => alloc::vec![true; assign.k],
        NodeRule::SizeWindow => {
            let cap = n.div_ceil(2);
            let mut k: Vec<bool> = sizes.iter().map(|&s| s >= 2 && s <= cap).collect();
            if !k.iter().any(|&b| b) {
                k = is_largest(&sizes);
            }
            k
        }
        NodeRule::LargestExcluded => is_largest(&sizes).iter().map(|&b| !b).collect(),
    };
    GlobalNodeSet {
        nodes: (0..n).filter(|&i| keep[assign.labels[i]]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assignment(sizes: &[usize]) -> ClusterAssignment {
        let raw: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| core::iter::repeat_n(c, s)).collect();
        ClusterAssignment::from_labels(&raw)
    }

    #[test]
    fn window_examples() {
        let a = assignment(&[3, 3]);
        assert_eq!(select_global_nodes(&a, NodeRule::SizeWindow).len(), 6);
        let a = assignment(&[1, 1, 8]);
        assert_eq!(select_global_nodes(&a, NodeRule::SizeWindow).nodes, (2..10).collect::<Vec<_>>());
        let a = assignment(&[2, 5, 13]);
        assert_eq!(select_global_nodes(&a, NodeRule::SizeWindow).nodes, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn other_rules() {
        let a = assignment(&[2, 5, 13]);
        assert_eq!(select_global_nodes(&a, NodeRule::AllClusters).len(), 20);
        assert_eq!(select_global_nodes(&a, NodeRule::LargestExcluded).nodes, (0..7).collect::<Vec<_>>());
        let single = assignment(&[4]);
        assert!(select_global_nodes(&single, NodeRule::LargestExcluded).is_empty());
    }

    proptest! {
        #[test]
        fn depends_only_on_cluster_sizes(raw in proptest::collection::vec(0usize..5, 1..30), shift in 0usize..30) {
            let a = ClusterAssignment::from_labels(&raw);
            let n = raw.len();
            let rot: Vec<usize> = (0..n).map(|i| raw[(i + shift) % n]).collect();
            let b = ClusterAssignment::from_labels(&rot);
            for rule in [NodeRule::SizeWindow, NodeRule::AllClusters, NodeRule::LargestExcluded] {
                let ga = select_global_nodes(&a, rule);
                let gb = select_global_nodes(&b, rule);
                prop_assert_eq!(ga.len(), gb.len());
                let mapped: Vec<usize> = {
                    let mut v: Vec<usize> = gb.nodes.iter().map(|&i| (i + shift) % n).collect();
                    v.sort();
                    v
                };
                prop_assert_eq!(&mapped, &ga.nodes);
            }
        }
    }
}
