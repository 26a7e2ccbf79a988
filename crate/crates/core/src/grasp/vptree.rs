use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dq::{dq_distance, Pose};
use crate::error::{invalid, Result};

/// Slack added to the pruning bound so rounding never discards a subtree
/// that could hold a tie.
const PRUNE_SLACK: f64 = 1e-9;

/// Default seed for vantage-point selection.
pub const DEFAULT_SEED: u64 = 0x5eed;

/// A query result: the stored element's id and its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub distance: f64,
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    /// Distance first, id second.
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.id.cmp(&other.id))
    }
}

#[derive(Debug, Clone)]
struct Node {
    item: usize,
    /// Elements in `inside` are at most this far from the vantage point,
    /// elements in `outside` at least this far.
    radius: f64,
    inside: Option<usize>,
    outside: Option<usize>,
}

/// Vantage-point tree over poses under [`dq_distance`].
#[derive(Debug, Clone)]
pub struct VpTree {
    items: Vec<(u32, Pose)>,
    nodes: Vec<Node>,
    root: usize,
}

impl VpTree {
    /// Builds the tree; vantage points are drawn from a generator seeded with
    /// `seed`, so the layout is reproducible.
    pub fn build(items: Vec<(u32, Pose)>, seed: u64) -> Result<Self> {
        if items.is_empty() {
            return Err(invalid("cannot build a vp-tree over an empty set"));
        }
        let mut tree = Self {
            nodes: Vec::with_capacity(items.len()),
            items,
            root: 0,
        };
        let mut idx: Vec<usize> = (0..tree.items.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        tree.root = tree.build_node(&mut idx, &mut rng).expect("nonempty");
        Ok(tree)
    }

    /// Tree over `poses` with ids equal to their positions.
    pub fn from_poses(poses: &[Pose], seed: u64) -> Result<Self> {
        Self::build(
            poses.iter().enumerate().map(|(i, p)| (i as u32, *p)).collect(),
            seed,
        )
    }

    fn build_node(&mut self, idx: &mut [usize], rng: &mut ChaCha8Rng) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let pick = rng.random_range(0..idx.len());
        idx.swap(0, pick);
        let vp = idx[0];
        let vp_pose = self.items[vp].1;
        let rest = &mut idx[1..];
        let mut keyed: Vec<(f64, usize)> = rest
            .iter()
            .map(|&i| (dq_distance(&vp_pose, &self.items[i].1), i))
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (slot, (_, i)) in rest.iter_mut().zip(&keyed) {
            *slot = *i;
        }
        let mid = rest.len() / 2;
        let radius = keyed.get(mid).map_or(0.0, |k| k.0);

        let node = self.nodes.len();
        self.nodes.push(Node {
            item: vp,
            radius,
            inside: None,
            outside: None,
        });
        let (inner, outer) = rest.split_at_mut(mid);
        let inside = self.build_node(inner, rng);
        let outside = self.build_node(outer, rng);
        self.nodes[node].inside = inside;
        self.nodes[node].outside = outside;
        Some(node)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(u32, Pose)] {
        &self.items
    }

    /// The `k` stored elements closest to `query`, ascending by distance
    /// with ties broken by id.
    pub fn k_nearest(&self, query: &Pose, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 || k > self.len() {
            return Err(invalid(format!(
                "k must be in 1..={}, got {k}",
                self.len()
            )));
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, query, k, &mut heap);
        Ok(heap.into_sorted_vec())
    }

    fn search(&self, node: usize, query: &Pose, k: usize, heap: &mut BinaryHeap<Neighbor>) {
        let n = &self.nodes[node];
        let (id, pose) = &self.items[n.item];
        let d = dq_distance(query, pose);
        let cand = Neighbor { id: *id, distance: d };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().expect("heap holds k elements") {
            heap.pop();
            heap.push(cand);
        }
        let tau = |heap: &BinaryHeap<Neighbor>| {
            if heap.len() < k {
                f64::INFINITY
            } else {
                heap.peek().expect("nonempty").distance
            }
        };
        // triangle inequality: inside elements are >= d - radius away,
        // outside elements >= radius - d
        if d < n.radius {
            if let Some(c) = n.inside {
                self.search(c, query, k, heap);
            }
            if let Some(c) = n.outside {
                if n.radius - d <= tau(heap) + PRUNE_SLACK {
                    self.search(c, query, k, heap);
                }
            }
        } else {
            if let Some(c) = n.outside {
                self.search(c, query, k, heap);
            }
            if let Some(c) = n.inside {
                if d - n.radius <= tau(heap) + PRUNE_SLACK {
                    self.search(c, query, k, heap);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn empty_set_rejected() {
        assert!(VpTree::from_poses(&[], 1).is_err());
    }

    #[test]
    fn single_element() {
        let p = Pose::from_translation(&Vector3::new(0.1, 0.2, 0.3));
        let tree = VpTree::from_poses(&[p], 1).unwrap();
        let r = tree.k_nearest(&p, 1).unwrap();
        assert_eq!(r, vec![Neighbor { id: 0, distance: 0.0 }]);
    }

    #[test]
    fn duplicates_are_both_returned() {
        let p = Pose::from_translation(&Vector3::new(0.1, 0.2, 0.3));
        let q = Pose::from_translation(&Vector3::new(1.0, 0.0, 0.0));
        let tree = VpTree::from_poses(&[q, p, p], 3).unwrap();
        let r = tree.k_nearest(&p, 2).unwrap();
        assert_eq!(
            r,
            vec![
                Neighbor { id: 1, distance: 0.0 },
                Neighbor { id: 2, distance: 0.0 }
            ]
        );
    }

    #[test]
    fn k_out_of_range() {
        let tree = VpTree::from_poses(&[Pose::identity(); 3], 1).unwrap();
        assert!(tree.k_nearest(&Pose::identity(), 0).is_err());
        assert!(tree.k_nearest(&Pose::identity(), 4).is_err());
        assert_eq!(tree.k_nearest(&Pose::identity(), 3).unwrap().len(), 3);
    }
}
