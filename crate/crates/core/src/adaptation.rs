//! Lifting a token-level reading order onto OCR text lines.
//!
//! Each token joins the line box it overlaps most; lines are then ranked by
//! the earliest position any of their tokens takes in the token order.

use serde::{Deserialize, Serialize};

use crate::{BBox, Error, Result, Token};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineBox {
    #[serde(rename = "id")]
    pub line_id: String,
    #[serde(default)]
    pub page_id: String,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Ordered line ids for one page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineOrder {
    pub page_id: String,
    pub line_ids: Vec<String>,
}

/// Token-to-line assignment, indexed like the input line list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineAssignment {
    /// Line index of every token.
    pub line_of: Vec<usize>,
    /// Token indices of every line, ascending.
    pub members: Vec<Vec<usize>>,
}

fn squared_center_distance(a: &BBox, b: &BBox) -> i128 {
    let (ax, ay) = a.center2();
    let (bx, by) = b.center2();
    let (dx, dy) = (i128::from(ax - bx), i128::from(ay - by));
    dx * dx + dy * dy
}

/// Line index for one token box: largest intersection area, or the nearest
/// center when nothing overlaps. Ties go to the earlier line.
pub fn best_line(token: &BBox, lines: &[LineBox]) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for (i, line) in lines.iter().enumerate() {
        let area = token.intersection_area(&line.bbox);
        if area > 0 && best.is_none_or(|(_, a)| area > a) {
            best = Some((i, area));
        }
    }
    if let Some((i, _)) = best {
        return Some(i);
    }
    lines
        .iter()
        .enumerate()
        .min_by_key(|(i, l)| (squared_center_distance(token, &l.bbox), *i))
        .map(|(i, _)| i)
}

pub fn assign_tokens(tokens: &[Token], lines: &[LineBox]) -> Result<LineAssignment> {
    if lines.is_empty() {
        return Err(Error::Adaptation("no text lines to assign tokens to".into()));
    }
    let mut members = vec![Vec::new(); lines.len()];
    let line_of: Vec<usize> = tokens
        .iter()
        .enumerate()
        .map(|(t, tok)| {
            let l = best_line(&tok.bbox, lines).expect("lines is non-empty");
            members[l].push(t);
            l
        })
        .collect();
    Ok(LineAssignment { line_of, members })
}

/// Orders lines by the earliest position of their tokens in `token_order`.
/// Lines none of whose tokens appear in `token_order` come last, in input
/// order. Returns line indices.
pub fn order_lines(assignment: &LineAssignment, token_order: &[usize]) -> Vec<usize> {
    let n_tokens = assignment.line_of.len();
    let mut position = vec![usize::MAX; n_tokens];
    for (p, &t) in token_order.iter().enumerate() {
        if t < n_tokens && position[t] == usize::MAX {
            position[t] = p;
        }
    }
    let mut ranked: Vec<(usize, usize)> = assignment
        .members
        .iter()
        .enumerate()
        .map(|(l, toks)| (toks.iter().map(|&t| position[t]).min().unwrap_or(usize::MAX), l))
        .collect();
    // usize::MAX ranks sort last and keep input order via the line index
    ranked.sort_unstable();
    ranked.into_iter().map(|(_, l)| l).collect()
}

/// Assigns, ranks, and returns ordered line ids for one page.
pub fn adapt_page(page_id: &str, tokens: &[Token], lines: &[LineBox], token_order: &[usize]) -> Result<LineOrder> {
    let assignment = assign_tokens(tokens, lines)?;
    let order = order_lines(&assignment, token_order);
    Ok(LineOrder {
        page_id: page_id.to_string(),
        line_ids: order.into_iter().map(|l| lines[l].line_id.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x0: u32, y0: u32, x1: u32, y1: u32) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn line(id: &str, b: BBox) -> LineBox {
        LineBox {
            line_id: id.into(),
            page_id: "p".into(),
            bbox: b,
            text: None,
        }
    }

    fn tok(b: BBox) -> Token {
        Token {
            word: "w".into(),
            bbox: b,
            appearance_index: 0,
        }
    }

    #[test]
    fn token_inside_one_line() {
        let lines = [line("a", bb(0, 0, 100, 10)), line("b", bb(0, 20, 100, 30))];
        assert_eq!(best_line(&bb(10, 22, 20, 28), &lines), Some(1));
    }

    #[test]
    fn larger_overlap_wins() {
        // token 10x10 at (0,0); line1 covers 60 units of it, line2 40
        let lines = [line("1", bb(0, 0, 6, 10)), line("2", bb(6, 0, 10, 10))];
        let t = bb(0, 0, 10, 10);
        assert_eq!(t.intersection_area(&lines[0].bbox), 60);
        assert_eq!(t.intersection_area(&lines[1].bbox), 40);
        assert_eq!(best_line(&t, &lines), Some(0));
    }

    #[test]
    fn stray_token_goes_to_nearest_center() {
        let lines = [line("top", bb(0, 0, 100, 10)), line("bottom", bb(0, 100, 100, 110))];
        // center (50, 80): 75 from top's center, 25 from bottom's
        assert_eq!(best_line(&bb(40, 75, 60, 85), &lines), Some(1));
        // equidistant -> first line
        assert_eq!(best_line(&bb(40, 50, 60, 60), &lines), Some(0));
    }

    #[test]
    fn overlap_ties_prefer_earlier_line() {
        let lines = [line("a", bb(0, 0, 5, 10)), line("b", bb(5, 0, 10, 10))];
        assert_eq!(best_line(&bb(0, 0, 10, 10), &lines), Some(0));
    }

    #[test]
    fn empty_line_list_is_an_error() {
        assert!(assign_tokens(&[tok(bb(0, 0, 1, 1))], &[]).is_err());
    }

    #[test]
    fn min_rule_orders_lines() {
        let assignment = LineAssignment {
            line_of: vec![0, 0, 1, 1],
            members: vec![vec![0, 1], vec![2, 3]],
        };
        assert_eq!(order_lines(&assignment, &[0, 1, 2, 3]), vec![0, 1]);
        // line 1's earliest token precedes all of line 0's
        assert_eq!(order_lines(&assignment, &[2, 0, 1, 3]), vec![1, 0]);
        assert_eq!(order_lines(&assignment, &[3, 0, 1, 2]), vec![1, 0]);
    }

    #[test]
    fn single_line_and_empty_lines() {
        let lines = [
            line("empty1", bb(0, 100, 10, 110)),
            line("all", bb(0, 0, 100, 10)),
            line("empty2", bb(0, 200, 10, 210)),
        ];
        let toks: Vec<Token> = (0..3).map(|i| tok(bb(i * 20, 0, i * 20 + 10, 10))).collect();
        let order = adapt_page("p", &toks, &lines, &[2, 1, 0]).unwrap();
        assert_eq!(order.line_ids, vec!["all", "empty1", "empty2"]);
    }

    #[test]
    fn partial_orders_rank_only_listed_tokens() {
        let assignment = LineAssignment {
            line_of: vec![0, 1, 2],
            members: vec![vec![0], vec![1], vec![2]],
        };
        assert_eq!(order_lines(&assignment, &[2, 0]), vec![2, 0, 1]);
    }

    proptest! {
        #[test]
        fn every_token_gets_one_line(
            tokens in prop::collection::vec((0u32..200, 0u32..200, 1u32..30, 1u32..30), 1..30),
            lines in prop::collection::vec((0u32..200, 0u32..200, 1u32..80, 1u32..20), 1..8),
        ) {
            let toks: Vec<Token> = tokens.iter().map(|&(x, y, w, h)| tok(bb(x, y, x + w, y + h))).collect();
            let ls: Vec<LineBox> = lines.iter().enumerate().map(|(i, &(x, y, w, h))| line(&i.to_string(), bb(x, y, x + w, y + h))).collect();
            let a = assign_tokens(&toks, &ls).unwrap();
            prop_assert_eq!(a.members.iter().map(Vec::len).sum::<usize>(), toks.len());
            for (t, &l) in a.line_of.iter().enumerate() {
                prop_assert!(a.members[l].contains(&t));
            }
            let order: Vec<usize> = (0..toks.len()).rev().collect();
            let ranked = order_lines(&a, &order);
            let mut sorted = ranked.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..ls.len()).collect::<Vec<_>>());
            // non-empty lines first
            let first_empty = ranked.iter().position(|&l| a.members[l].is_empty()).unwrap_or(ranked.len());
            prop_assert!(ranked[first_empty..].iter().all(|&l| a.members[l].is_empty()));
        }

        #[test]
        fn swapping_tokens_of_one_line_keeps_line_order(
            line_of in prop::collection::vec(0usize..5, 2..30),
            i in any::<prop::sample::Index>(),
            j in any::<prop::sample::Index>(),
        ) {
            let mut members = vec![Vec::new(); 5];
            for (t, &l) in line_of.iter().enumerate() { members[l].push(t); }
            let a = LineAssignment { line_of: line_of.clone(), members };
            let order: Vec<usize> = (0..line_of.len()).collect();
            let (pi, pj) = (i.index(order.len()), j.index(order.len()));
            prop_assume!(line_of[order[pi]] == line_of[order[pj]]);
            let mut swapped = order.clone();
            swapped.swap(pi, pj);
            prop_assert_eq!(order_lines(&a, &order), order_lines(&a, &swapped));
        }
    }
}
