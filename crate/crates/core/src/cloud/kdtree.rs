use nalgebra::Point3;

use super::PointCloud;
use crate::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Balanced kd-tree over a snapshot of a cloud. Queries are exact; equal
/// distances resolve to the lowest point id.
#[derive(Clone, Debug)]
pub struct KdIndex {
    points: Vec<Point3<f64>>,
    /// Point ids in leaf order.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::invalid("cannot index an empty cloud"));
        }
        let mut index = KdIndex {
            points: cloud.points().to_vec(),
            order: (0..cloud.len()).collect(),
            nodes: Vec::with_capacity(2 * cloud.len() / LEAF_SIZE + 1),
        };
        index.build_node(0, cloud.len());
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for k in 0..3 {
                lo[k] = lo[k].min(self.points[i][k]);
                hi[k] = hi[k].max(self.points[i][k]);
            }
        }
        (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> &Point3<f64> {
        &self.points[id]
    }

    /// Nearest indexed point to `q` as `(id, distance)`.
    pub fn nearest(&self, q: &Point3<f64>) -> (usize, f64) {
        let (id, d2) = self.nearest_sq(q);
        (id, d2.sqrt())
    }

    /// Like [`nearest`](Self::nearest) but returns the squared distance.
    pub fn nearest_sq(&self, q: &Point3<f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        best
    }

    /// Whether some indexed point lies within `radius` of `q`.
    pub fn has_neighbor_within(&self, q: &Point3<f64>, radius: f64) -> bool {
        self.nearest_sq(q).1 <= radius * radius
    }

    fn search(&self, node: usize, q: &Point3<f64>, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, best);
                // `<=` keeps equidistant candidates reachable for the id tie rule.
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}
