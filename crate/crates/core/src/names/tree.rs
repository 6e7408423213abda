//! CART decision tree over letter counts, split rule `count[letter] <= threshold`.

use serde::{Deserialize, Serialize};

use super::ALPHABET;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: usize,
        /// Fraction of training samples in this leaf carrying `label`.
        score: f64,
    },
    Split {
        letter: usize,
        threshold: u32,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, counts: &[u32; ALPHABET]) -> (usize, f64) {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { label, score } => return (*label, *score),
                Node::Split {
                    letter,
                    threshold,
                    left,
                    right,
                } => {
                    node = if counts[*letter] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

pub(crate) struct TreeBuilder<'a> {
    pub features: &'a [[u32; ALPHABET]],
    pub labels: &'a [usize],
    pub n_labels: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

struct SplitChoice {
    letter: usize,
    threshold: u32,
    impurity: f64,
}

impl TreeBuilder<'_> {
    pub fn build(&self, idx: Vec<usize>) -> Node {
        self.grow(idx, 0)
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> Node {
        let counts = self.label_counts(&idx);
        let parent = gini(&counts, idx.len());
        if depth >= self.max_depth || parent == 0.0 || idx.len() < 2 * self.min_leaf.max(1) {
            return self.leaf(&counts, idx.len());
        }
        let Some(best) = self.best_split(&idx) else {
            return self.leaf(&counts, idx.len());
        };
        if best.impurity >= parent - 1e-12 {
            return self.leaf(&counts, idx.len());
        }
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.features[i][best.letter] <= best.threshold);
        Node::Split {
            letter: best.letter,
            threshold: best.threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }

    fn label_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_labels];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn leaf(&self, counts: &[usize], n: usize) -> Node {
        // ties resolve to the smallest label index
        let (label, &best) =
            counts.iter().enumerate().fold(
                (0, &0),
                |acc, (i, c)| if *c > *acc.1 { (i, c) } else { acc },
            );
        let score = if n == 0 { 1.0 } else { best as f64 / n as f64 };
        Node::Leaf { label, score }
    }

    fn best_split(&self, idx: &[usize]) -> Option<SplitChoice> {
        let n = idx.len();
        let min_leaf = self.min_leaf.max(1);
        let mut best: Option<SplitChoice> = None;
        let mut order = idx.to_vec();
        for letter in 0..ALPHABET {
            order.sort_by_key(|&i| (self.features[i][letter], i));
            let mut left = vec![0usize; self.n_labels];
            let mut right = self.label_counts(&order);
            for pos in 0..n - 1 {
                let i = order[pos];
                left[self.labels[i]] += 1;
                right[self.labels[i]] -= 1;
                let v = self.features[i][letter];
                if v == self.features[order[pos + 1]][letter] {
                    continue;
                }
                let n_left = pos + 1;
                let n_right = n - n_left;
                if n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let impurity = (n_left as f64 * gini(&left, n_left)
                    + n_right as f64 * gini(&right, n_right))
                    / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity - 1e-15) {
                    best = Some(SplitChoice {
                        letter,
                        threshold: v,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}
