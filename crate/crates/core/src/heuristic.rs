//! Left-to-right, top-to-bottom baseline order.
//!
//! Tokens are grouped into visual lines first: two tokens share a line when
//! their vertical overlap is at least half the height of the shorter one, and
//! lines are the connected components of that relation. Lines are read by
//! ascending top edge, tokens within a line by ascending `x0`. Remaining ties
//! fall back to input position.

use crate::{BBox, Token};

fn same_line(a: &BBox, b: &BBox) -> bool {
    let min_h = a.height().min(b.height());
    if min_h == 0 {
        return a.y0.max(b.y0) <= a.y1.min(b.y1);
    }
    2 * a.vertical_overlap(b) >= min_h
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so component ids stay deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Groups boxes into visual lines. Each line lists input indices in reading
/// order; lines are returned top to bottom.
pub fn visual_lines(boxes: &[BBox]) -> Vec<Vec<usize>> {
    let n = boxes.len();
    let mut by_top: Vec<usize> = (0..n).collect();
    by_top.sort_by_key(|&i| (boxes[i].y0, i));

    let mut sets = DisjointSet::new(n);
    let mut active: Vec<usize> = Vec::new();
    for &i in &by_top {
        let b = &boxes[i];
        active.retain(|&j| boxes[j].y1 >= b.y0);
        for &j in &active {
            if same_line(b, &boxes[j]) {
                sets.union(i, j);
            }
        }
        active.push(i);
    }

    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..n {
        let root = sets.find(i);
        groups.entry(root).or_default().push(i);
    }
    let mut lines: Vec<(u32, usize, Vec<usize>)> = groups
        .into_values()
        .map(|mut members| {
            members.sort_by_key(|&i| (boxes[i].x0, i));
            let top = members.iter().map(|&i| boxes[i].y0).min().unwrap_or(0);
            let first = members.iter().copied().min().unwrap_or(0);
            (top, first, members)
        })
        .collect();
    lines.sort_by_key(|(top, first, _)| (*top, *first));
    lines.into_iter().map(|(_, _, m)| m).collect()
}

/// Heuristic reading order as indices into `tokens`.
pub fn heuristic_order(tokens: &[Token]) -> Vec<usize> {
    let boxes: Vec<BBox> = tokens.iter().map(|t| t.bbox).collect();
    heuristic_order_boxes(&boxes)
}

pub fn heuristic_order_boxes(boxes: &[BBox]) -> Vec<usize> {
    visual_lines(boxes).into_iter().flatten().collect()
}
