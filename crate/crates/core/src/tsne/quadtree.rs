//! Quadtree over the 2-D embedding for Barnes-Hut force evaluation.
//!
//! Cells are squares; each node tracks its cumulative point mass and center
//! of mass. During traversal a cell is summarized as a single body when its
//! diameter (the diagonal) divided by the distance to its center of mass is
//! below theta, so theta = 0 degenerates to an exact pairwise evaluation.
//! Coincident points accumulate multiplicity in one leaf instead of
//! splitting forever.

const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone)]
struct Node {
    center: [f64; 2],
    half: f64,
    com: [f64; 2],
    mass: f64,
    /// Index of the first of four contiguous children, -1 for a leaf.
    children: i64,
    /// Location shared by every point in a leaf.
    leaf_loc: [f64; 2],
}

impl Node {
    fn new(center: [f64; 2], half: f64) -> Self {
        Node {
            center,
            half,
            com: [0.0, 0.0],
            mass: 0.0,
            children: -1,
            leaf_loc: [0.0, 0.0],
        }
    }

    fn add_mass(&mut self, p: [f64; 2], count: f64) {
        let new_mass = self.mass + count;
        let keep = self.mass / new_mass;
        let add = count / new_mass;
        self.com[0] = self.com[0] * keep + p[0] * add;
        self.com[1] = self.com[1] * keep + p[1] * add;
        self.mass = new_mass;
    }
}

#[derive(Debug)]
pub struct QuadTree {
    nodes: Vec<Node>,
}

impl QuadTree {
    /// Builds the tree over `n` points stored row-major in `y` (n x 2).
    pub fn build(y: &[f64], n: usize) -> QuadTree {
        assert_eq!(y.len(), n * 2);
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            min_x = min_x.min(y[2 * i]);
            max_x = max_x.max(y[2 * i]);
            min_y = min_y.min(y[2 * i + 1]);
            max_y = max_y.max(y[2 * i + 1]);
        }
        let center = [(min_x + max_x) / 2.0, (min_y + max_y) / 2.0];
        let half = ((max_x - min_x).max(max_y - min_y) / 2.0).max(f64::MIN_POSITIVE) * (1.0 + 1e-12)
            + 1e-300;

        let mut tree = QuadTree {
            nodes: vec![Node::new(center, half)],
        };
        for i in 0..n {
            tree.insert([y[2 * i], y[2 * i + 1]]);
        }
        tree
    }

    fn child_slot(node: &Node, p: [f64; 2]) -> usize {
        (p[0] >= node.center[0]) as usize + 2 * ((p[1] >= node.center[1]) as usize)
    }

    fn subdivide(&mut self, idx: usize) {
        let first = self.nodes.len() as i64;
        let (center, half) = (self.nodes[idx].center, self.nodes[idx].half);
        let q = half / 2.0;
        for slot in 0..4 {
            let dx = if slot & 1 == 1 { q } else { -q };
            let dy = if slot & 2 == 2 { q } else { -q };
            self.nodes
                .push(Node::new([center[0] + dx, center[1] + dy], q));
        }
        self.nodes[idx].children = first;
    }

    fn insert(&mut self, p: [f64; 2]) {
        let mut idx = 0usize;
        let mut depth = 0usize;
        loop {
            let mass_before = self.nodes[idx].mass;
            self.nodes[idx].add_mass(p, 1.0);
            if self.nodes[idx].children >= 0 {
                let slot = Self::child_slot(&self.nodes[idx], p);
                idx = self.nodes[idx].children as usize + slot;
                depth += 1;
                continue;
            }
            if mass_before == 0.0 {
                self.nodes[idx].leaf_loc = p;
                return;
            }
            let occupant = self.nodes[idx].leaf_loc;
            if occupant == p || depth >= MAX_DEPTH {
                // Coincident points (or points too close to separate) share
                // the leaf; mass carries the multiplicity.
                return;
            }
            self.subdivide(idx);
            // Move the previous occupants wholesale into their quadrant.
            let occ_slot = Self::child_slot(&self.nodes[idx], occupant);
            let occ_child = self.nodes[idx].children as usize + occ_slot;
            self.nodes[occ_child].add_mass(occupant, mass_before);
            self.nodes[occ_child].leaf_loc = occupant;
            let slot = Self::child_slot(&self.nodes[idx], p);
            idx = self.nodes[idx].children as usize + slot;
            depth += 1;
        }
    }

    /// Total point mass in the tree (every inserted point counted once).
    pub fn total_mass(&self) -> f64 {
        self.nodes[0].mass
    }

    /// Accumulates the repulsive force numerator and the normalization mass
    /// for the query point `p`:
    ///
    ///   force += mass * w^2 * (p - com),  z += mass * w,  w = 1/(1 + d^2)
    ///
    /// The query point's own contribution (w = 1 at distance zero) is
    /// included in `z`; callers subtract one.
    pub fn accumulate(&self, p: [f64; 2], theta: f64, force: &mut [f64; 2], z: &mut f64) {
        self.accumulate_node(0, p, theta, force, z);
    }

    fn accumulate_node(&self, idx: usize, p: [f64; 2], theta: f64, force: &mut [f64; 2], z: &mut f64) {
        let node = &self.nodes[idx];
        if node.mass == 0.0 {
            return;
        }
        let dx = p[0] - node.com[0];
        let dy = p[1] - node.com[1];
        let dist2 = dx * dx + dy * dy;
        let diameter = 2.0 * node.half * std::f64::consts::SQRT_2;
        if node.children < 0 || diameter < theta * dist2.sqrt() {
            let w = 1.0 / (1.0 + dist2);
            *z += node.mass * w;
            let mw = node.mass * w * w;
            force[0] += mw * dx;
            force[1] += mw * dy;
        } else {
            let first = node.children as usize;
            for slot in 0..4 {
                self.accumulate_node(first + slot, p, theta, force, z);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_points(seed: u64, n: usize, spread: f64) -> Vec<f64> {
        let mut rng = SplitMix64::new(seed);
        (0..2 * n).map(|_| rng.next_gaussian() * spread).collect()
    }

    #[test]
    fn total_mass_counts_every_point() {
        let y = random_points(5, 137, 3.0);
        let tree = QuadTree::build(&y, 137);
        assert_eq!(tree.total_mass(), 137.0);
    }

    #[test]
    fn duplicates_share_a_leaf() {
        let mut y = random_points(7, 10, 1.0);
        // Three exact copies of point 0.
        for copy in 1..=3 {
            y[2 * copy] = y[0];
            y[2 * copy + 1] = y[1];
        }
        let tree = QuadTree::build(&y, 10);
        assert_eq!(tree.total_mass(), 10.0);
    }

    #[test]
    fn theta_zero_matches_pairwise_sums() {
        let n = 50;
        let y = random_points(11, n, 4.0);
        let tree = QuadTree::build(&y, n);
        for i in 0..n {
            let p = [y[2 * i], y[2 * i + 1]];
            let mut force = [0.0, 0.0];
            let mut z = 0.0;
            tree.accumulate(p, 0.0, &mut force, &mut z);
            z -= 1.0; // self term

            let mut force_ref = [0.0, 0.0];
            let mut z_ref = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dx = p[0] - y[2 * j];
                let dy = p[1] - y[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                z_ref += w;
                force_ref[0] += w * w * dx;
                force_ref[1] += w * w * dy;
            }
            assert!((z - z_ref).abs() < 1e-10, "z {z} vs {z_ref}");
            assert!((force[0] - force_ref[0]).abs() < 1e-10);
            assert!((force[1] - force_ref[1]).abs() < 1e-10);
        }
    }
}
