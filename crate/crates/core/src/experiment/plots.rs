use glam::DVec2;

use super::svg::{color, Chart, Series, Svg};
use crate::assign::{AssignmentResult, SummaryRow};
use crate::routes::RouteSet;

/// Obstacles, origin, destination, route polylines, intermediate-destination
/// borders and route ids.
pub fn route_overlay(set: &RouteSet) -> String {
    let g = &set.geometry;
    let lo = DVec2::from(g.bounds.min);
    let hi = DVec2::from(g.bounds.max);
    let margin = 20.0;
    let scale = (900.0 / (hi.x - lo.x)).min(600.0 / (hi.y - lo.y));
    let (w, h) = ((hi.x - lo.x) * scale + 2.0 * margin, (hi.y - lo.y) * scale + 2.0 * margin + 24.0);
    let map = |p: DVec2| (margin + (p.x - lo.x) * scale, margin + (hi.y - p.y) * scale);
    let pts = |v: &[DVec2]| v.iter().map(|&p| map(p)).collect::<Vec<_>>();
    let mut svg = Svg::new(w, h);
    let (a, b) = (map(DVec2::new(lo.x, hi.y)), map(DVec2::new(hi.x, lo.y)));
    svg.rect(a.0, a.1, b.0 - a.0, b.1 - a.1, r#"fill="none" stroke="black" stroke-width="2""#);
    svg.polygon(&pts(g.origin.vertices()), r##"fill="#c8e6c9" stroke="#2e7d32""##);
    svg.polygon(&pts(g.destination.vertices()), r##"fill="#ffcdd2" stroke="#c62828""##);
    for o in &g.obstacles {
        svg.polygon(&pts(o.vertices()), r##"fill="#616161" stroke="#212121""##);
    }
    for (k, r) in set.routes.iter().enumerate() {
        let style = format!(r#"stroke="{}" stroke-width="2""#, color(k));
        svg.polyline(&pts(&r.representative), &style);
        for id in &r.intermediate_destinations {
            svg.polyline(&pts(&id.border), r##"stroke="#1565c0" stroke-width="2.5""##);
        }
        if let Some(&mid) = r.representative.get(r.representative.len() / 2) {
            let (x, y) = map(mid);
            svg.circle((x, y), 9.0, &format!(r#"fill="white" stroke="{}""#, color(k)));
            svg.text((x, y + 4.0), &r.id.to_string(), r#"text-anchor="middle" font-weight="bold""#);
        }
    }
    svg.text(
        (margin, h - 10.0),
        &format!("{}: {} route(s)", g.name, set.routes.len()),
        "",
    );
    svg.finish()
}

fn route_label(k: usize) -> String {
    format!("route {}", k + 1)
}

/// Route-choice ratios (top) and travel times (bottom) over iterations.
pub fn iteration_plot(title: &str, result: &AssignmentResult) -> String {
    let n = result.history.first().map_or(0, |h| h.probabilities.len());
    let per_route = |f: &dyn Fn(usize, usize) -> Option<f64>| -> Vec<Series> {
        (0..n)
            .map(|k| Series {
                label: route_label(k),
                color: color(k),
                points: result.history.iter().enumerate().map(|(i, h)| (h.iteration as f64, f(i, k))).collect(),
                line: true,
                markers: result.history.len() == 1,
            })
            .collect()
    };
    let ratios = Chart {
        title,
        x_label: "iteration",
        y_label: "route choice ratio (%)",
        series: per_route(&|i, k| Some(100.0 * result.history[i].probabilities[k])),
        y_range: Some((0.0, 100.0)),
    };
    let times = Chart {
        title: "",
        x_label: "iteration",
        y_label: "mean travel time (s)",
        series: per_route(&|i, k| result.history[i].stats[k].mean),
        y_range: None,
    };
    let mut svg = Svg::new(760.0, 664.0);
    ratios.draw(&mut svg, 0.0, 0.0, 760.0, 320.0);
    times.draw(&mut svg, 0.0, 320.0, 760.0, 320.0);
    let sel = result.selected_iteration().iteration;
    svg.text(
        (60.0, 656.0),
        &format!("selected iteration {sel}, terminated {}", result.terminated),
        r#"font-size="11""#,
    );
    svg.finish()
}

/// Per-route value against demand: seed markers plus a line through the seed means.
fn demand_chart(title: &'static str, y_label: &'static str, rows: &[SummaryRow], value: impl Fn(&SummaryRow, usize) -> Option<f64>, y_range: Option<(f64, f64)>) -> String {
    let n = rows.first().map_or(0, |r| r.p.len());
    let mut demands: Vec<f64> = rows.iter().map(|r| r.demand).collect();
    demands.sort_by(f64::total_cmp);
    demands.dedup();
    let mut series = Vec::new();
    for k in 0..n {
        let means = demands
            .iter()
            .map(|&d| {
                let v: Vec<f64> = rows.iter().filter(|r| r.demand == d).filter_map(|r| value(r, k)).collect();
                (d, (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
            })
            .collect();
        series.push(Series {
            label: route_label(k),
            color: color(k),
            points: means,
            line: true,
            markers: false,
        });
        series.push(Series {
            label: String::new(),
            color: color(k),
            points: rows.iter().map(|r| (r.demand, value(r, k))).collect(),
            line: false,
            markers: true,
        });
    }
    let chart = Chart {
        title,
        x_label: "demand (ped/s)",
        y_label,
        series,
        y_range,
    };
    let mut svg = Svg::new(760.0, 360.0);
    chart.draw(&mut svg, 0.0, 0.0, 760.0, 360.0);
    svg.finish()
}

/// Ratio and travel-time charts against demand.
pub fn summary_plots(rows: &[SummaryRow]) -> (String, String) {
    (
        demand_chart(
            "route choice ratio at the selected iteration",
            "route choice ratio (%)",
            rows,
            |r, k| Some(100.0 * r.p[k]),
            Some((0.0, 100.0)),
        ),
        demand_chart(
            "mean travel time at the selected iteration",
            "mean travel time (s)",
            rows,
            |r, k| r.tt[k],
            None,
        ),
    )
}
