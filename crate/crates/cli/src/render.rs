//! SVG rendering of a page and a predicted order.

use std::fmt::Write;

use readorder_core::{Error, OrderPrediction, Page, Result};

pub const CORRECT_FILL: &str = "green";
pub const WRONG_FILL: &str = "red";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(page: &Page, out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = page.width,
        h = page.height
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(&page.id));
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, page.width, page.height);
}

fn label(out: &mut String, x: u32, y: u32, font: u32, text: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{x}" y="{y}" font-size="{font}" font-family="monospace" fill="black">{}</text>"#,
        escape(text)
    );
}

/// Token boxes numbered by predicted position; a box is green when the
/// token sits at its gold position in the prediction and red otherwise.
/// Tokens the prediction omits are red and labelled `-`.
pub fn render_prediction(page: &Page, pred: &OrderPrediction) -> Result<String> {
    if pred.page_id != page.id {
        return Err(Error::Metric(format!(
            "prediction for {:?} cannot be drawn on page {:?}",
            pred.page_id, page.id
        )));
    }
    pred.validate(page.len())?;
    let mut rank = vec![None; page.len()];
    for (p, t) in pred.deduplicated().into_iter().enumerate() {
        rank[t] = Some(p);
    }
    let mut out = String::new();
    header(page, &mut out);
    for (t, tok) in page.tokens.iter().enumerate() {
        let b = tok.bbox;
        let correct = rank[t] == Some(t);
        let (fill, class) = if correct { (CORRECT_FILL, "correct") } else { (WRONG_FILL, "wrong") };
        let _ = writeln!(
            out,
            r#"<rect class="{class}" data-token="{t}" x="{}" y="{}" width="{}" height="{}" fill="{fill}" fill-opacity="0.35" stroke="{fill}"/>"#,
            b.x0,
            b.y0,
            b.width(),
            b.height()
        );
        let text = rank[t].map_or_else(|| "-".to_string(), |r| r.to_string());
        label(&mut out, b.x0 + 2, b.y1.saturating_sub(b.height() / 4), (b.height() * 3 / 5).max(1), &text);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Token boxes numbered by gold position, with arrows following the gold
/// reading order.
pub fn render_gold(page: &Page) -> String {
    let mut out = String::new();
    header(page, &mut out);
    out.push_str(concat!(
        r#"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto">"#,
        r#"<path d="M0,0 L10,5 L0,10 z" fill="blue"/></marker></defs>"#,
        "\n"
    ));
    for (t, tok) in page.tokens.iter().enumerate() {
        let b = tok.bbox;
        let _ = writeln!(
            out,
            r#"<rect class="token" data-token="{t}" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            b.x0,
            b.y0,
            b.width(),
            b.height()
        );
        label(&mut out, b.x0 + 2, b.y1.saturating_sub(b.height() / 4), (b.height() * 3 / 5).max(1), &t.to_string());
    }
    for pair in page.tokens.windows(2) {
        let (ax, ay) = pair[0].bbox.center2();
        let (bx, by) = pair[1].bbox.center2();
        let _ = writeln!(
            out,
            r#"<line class="order" x1="{}" y1="{}" x2="{}" y2="{}" stroke="blue" stroke-width="1.5" marker-end="url(#arrow)"/>"#,
            ax as f64 / 2.0,
            ay as f64 / 2.0,
            bx as f64 / 2.0,
            by as f64 / 2.0
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use readorder_core::BBox;

    fn page(n: u32) -> Page {
        Page::from_words(
            "p<1>",
            200,
            50,
            (0..n).map(|i| format!("w{i}")).collect(),
            (0..n).map(|i| BBox::new(20 * i, 10, 20 * i + 15, 30).unwrap()).collect(),
        )
        .unwrap()
    }

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    #[test]
    fn gold_prediction_is_all_green() {
        let p = page(5);
        let svg = render_prediction(&p, &OrderPrediction::new("p<1>", (0..5).collect())).unwrap();
        assert_eq!(count(&svg, r#"fill="green""#), 5);
        assert_eq!(count(&svg, r#"fill="red""#), 0);
        assert!(svg.contains("p&lt;1&gt;"));
    }

    #[test]
    fn reversal_keeps_only_the_fixed_point_green() {
        // reversing 5 tokens fixes the middle one
        let p = page(5);
        let svg = render_prediction(&p, &OrderPrediction::new("p<1>", (0..5).rev().collect())).unwrap();
        assert_eq!(count(&svg, r#"class="correct""#), 1);
        assert_eq!(count(&svg, r#"class="wrong""#), 4);
        assert!(svg.contains(r#"class="correct" data-token="2""#));
        let even = page(4);
        let svg = render_prediction(&even, &OrderPrediction::new("p<1>", (0..4).rev().collect())).unwrap();
        assert_eq!(count(&svg, r#"class="correct""#), 0);
    }

    #[test]
    fn id_mismatch_is_an_error() {
        assert!(render_prediction(&page(2), &OrderPrediction::new("other", vec![0, 1])).is_err());
    }

    #[test]
    fn gold_view_draws_arrows() {
        let svg = render_gold(&page(4));
        assert_eq!(count(&svg, r#"class="order""#), 3);
        assert_eq!(count(&svg, r#"class="token""#), 4);
    }
}
