//! CSV tables of assignment runs.
//!
//! Per run: `iter,p_1..p_N,tt_1..tt_N,n_1..n_N,delta,dp,spread,terminated`.
//! Per sweep: `demand,seed,selected_iter,p_1..p_N,tt_1..tt_N,spread`.
//! Files start with `# ` comment lines; an undefined mean is an empty field and an
//! undefined spread is `inf`.

use std::io::{self, Read, Write};

use csv::StringRecord;

use super::AssignmentResult;
use crate::simulate::write_header;

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iter: usize,
    pub p: Vec<f64>,
    pub tt: Vec<Option<f64>>,
    pub n: Vec<usize>,
    pub delta: f64,
    pub dp: f64,
    pub spread: f64,
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub demand: f64,
    pub seed: u64,
    pub selected_iter: usize,
    pub p: Vec<f64>,
    pub tt: Vec<Option<f64>>,
    pub spread: f64,
}

impl SummaryRow {
    pub fn from_result(demand: f64, seed: u64, result: &AssignmentResult) -> Self {
        let it = result.selected_iteration();
        Self {
            demand,
            seed,
            selected_iter: it.iteration,
            p: it.probabilities.clone(),
            tt: it.stats.iter().map(|s| s.mean).collect(),
            spread: it.spread(),
        }
    }
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}_{k}"))
}

fn time(t: Option<f64>) -> String {
    t.map(|t| format!("{t:.3}")).unwrap_or_default()
}

fn spread(s: f64) -> String {
    if s.is_finite() {
        format!("{s:.3}")
    } else {
        "inf".to_string()
    }
}

pub fn write_history_csv(w: &mut impl Write, header: &str, result: &AssignmentResult) -> io::Result<()> {
    write_header(w, header)?;
    let n = result.history.first().map_or(0, |h| h.probabilities.len());
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["iter".to_string()];
    head.extend(numbered("p", n));
    head.extend(numbered("tt", n));
    head.extend(numbered("n", n));
    head.extend(["delta", "dp", "spread", "terminated"].map(String::from));
    out.write_record(&head)?;
    let last = result.history.len().saturating_sub(1);
    for (k, it) in result.history.iter().enumerate() {
        let mut row = vec![it.iteration.to_string()];
        row.extend(it.probabilities.iter().map(|p| format!("{p:.6}")));
        row.extend(it.stats.iter().map(|s| time(s.mean)));
        row.extend(it.stats.iter().map(|s| s.count.to_string()));
        row.push(format!("{:.6}", it.delta));
        row.push(format!("{:.6}", it.dp));
        row.push(spread(it.spread()));
        row.push((result.terminated && k == last).to_string());
        out.write_record(&row)?;
    }
    out.flush()
}

pub fn write_summary_csv(w: &mut impl Write, header: &str, rows: &[SummaryRow]) -> io::Result<()> {
    write_header(w, header)?;
    let n = rows.first().map_or(0, |r| r.p.len());
    let mut out = csv::Writer::from_writer(w);
    let mut head = ["demand", "seed", "selected_iter"].map(String::from).to_vec();
    head.extend(numbered("p", n));
    head.extend(numbered("tt", n));
    head.push("spread".into());
    out.write_record(&head)?;
    for r in rows {
        let mut row = vec![format!("{}", r.demand), r.seed.to_string(), r.selected_iter.to_string()];
        row.extend(r.p.iter().map(|p| format!("{p:.6}")));
        row.extend(r.tt.iter().map(|&t| time(t)));
        row.push(spread(r.spread));
        out.write_record(&row)?;
    }
    out.flush()
}

fn bad(msg: impl Into<String>) -> csv::Error {
    csv::Error::from(io::Error::new(io::ErrorKind::InvalidData, msg.into()))
}

/// Column positions of `prefix_1..prefix_n`, which must be contiguous.
fn block(headers: &StringRecord, prefix: &str) -> Result<(usize, usize), csv::Error> {
    let cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.strip_prefix(prefix).and_then(|r| r.strip_prefix('_')).is_some_and(|k| k.parse::<usize>().is_ok()))
        .map(|(i, _)| i)
        .collect();
    match (cols.first(), cols.last()) {
        (Some(&a), Some(&b)) if b - a + 1 == cols.len() => Ok((a, cols.len())),
        _ => Err(bad(format!("missing or split {prefix}_k columns"))),
    }
}

fn column(headers: &StringRecord, name: &str) -> Result<usize, csv::Error> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| bad(format!("missing column {name}")))
}

fn field<T: std::str::FromStr>(rec: &StringRecord, i: usize) -> Result<T, csv::Error> {
    let s = rec.get(i).unwrap_or("");
    s.parse().map_err(|_| bad(format!("cannot parse {s:?} in column {}", i + 1)))
}

fn opt_field(rec: &StringRecord, i: usize) -> Result<Option<f64>, csv::Error> {
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => field(rec, i).map(Some),
    }
}

pub fn read_history_csv(r: impl Read) -> Result<Vec<HistoryRow>, csv::Error> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = reader.headers()?.clone();
    let (p0, n) = block(&headers, "p")?;
    let (t0, _) = block(&headers, "tt")?;
    let (n0, _) = block(&headers, "n")?;
    let cols = ["iter", "delta", "dp", "spread", "terminated"].map(|c| column(&headers, c));
    let [iter, delta, dp, spread, terminated] = cols;
    let (iter, delta, dp, spread, terminated) = (iter?, delta?, dp?, spread?, terminated?);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push(HistoryRow {
            iter: field(&rec, iter)?,
            p: (0..n).map(|k| field(&rec, p0 + k)).collect::<Result<_, _>>()?,
            tt: (0..n).map(|k| opt_field(&rec, t0 + k)).collect::<Result<_, _>>()?,
            n: (0..n).map(|k| field(&rec, n0 + k)).collect::<Result<_, _>>()?,
            delta: field(&rec, delta)?,
            dp: field(&rec, dp)?,
            spread: field(&rec, spread)?,
            terminated: field(&rec, terminated)?,
        });
    }
    Ok(rows)
}

pub fn read_summary_csv(r: impl Read) -> Result<Vec<SummaryRow>, csv::Error> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = reader.headers()?.clone();
    let (p0, n) = block(&headers, "p")?;
    let (t0, _) = block(&headers, "tt")?;
    let [demand, seed, sel, spread] = ["demand", "seed", "selected_iter", "spread"].map(|c| column(&headers, c));
    let (demand, seed, sel, spread) = (demand?, seed?, sel?, spread?);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push(SummaryRow {
            demand: field(&rec, demand)?,
            seed: field(&rec, seed)?,
            selected_iter: field(&rec, sel)?,
            p: (0..n).map(|k| field(&rec, p0 + k)).collect::<Result<_, _>>()?,
            tt: (0..n).map(|k| opt_field(&rec, t0 + k)).collect::<Result<_, _>>()?,
            spread: field(&rec, spread)?,
        });
    }
    Ok(rows)
}
