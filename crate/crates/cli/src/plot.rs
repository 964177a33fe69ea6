//! Quick-look PNGs: norm trajectories from `series.csv`, a heat matrix from
//! `sweep.csv`. Purely presentational.

use std::path::Path;

use image::{Rgb, RgbImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("malformed CSV: {0}")]
    Malformed(String),
    #[error("cannot write image: {0}")]
    Image(String),
}

impl From<csv::Error> for PlotError {
    fn from(e: csv::Error) -> Self {
        PlotError::Malformed(e.to_string())
    }
}

const WIDTH: u32 = 640;
const HEIGHT: u32 = 400;
const MARGIN: u32 = 30;
const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const GREY: Rgb<u8> = Rgb([170, 170, 170]);
const PALETTE: [Rgb<u8>; 6] = [
    Rgb([200, 30, 30]),
    Rgb([30, 90, 200]),
    Rgb([20, 150, 60]),
    Rgb([220, 140, 0]),
    Rgb([130, 40, 170]),
    Rgb([0, 160, 170]),
];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, PlotError> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()?;
        if rows.is_empty() {
            return Err(PlotError::Malformed("no data rows".into()));
        }
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn numbers(&self, col: usize) -> Result<Vec<f64>, PlotError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[col].parse::<f64>().map_err(|_| {
                    PlotError::Malformed(format!(
                        "row {}: `{}` in column `{}` is not a number",
                        i + 2,
                        row[col],
                        self.header[col]
                    ))
                })
            })
            .collect()
    }
}

/// Renders `input` (a series or sweep CSV) to a PNG at `output`.
pub fn plot_csv(input: &Path, output: &Path) -> Result<(), PlotError> {
    let table = Table::read(input)?;
    let img = if table.header.first().map(String::as_str) == Some("t")
        && table.column("linf_u").is_some()
    {
        plot_series(&table)?
    } else if table.column("status").is_some() && table.column("sup_linf_u").is_some() {
        plot_sweep(&table)?
    } else {
        return Err(PlotError::Malformed(
            "header matches neither series.csv nor sweep.csv".into(),
        ));
    };
    img.save_with_format(output, image::ImageFormat::Png)
        .map_err(|e| PlotError::Image(e.to_string()))
}

fn frame(img: &mut RgbImage) {
    for x in MARGIN..WIDTH - MARGIN {
        img.put_pixel(x, HEIGHT - MARGIN, BLACK);
        img.put_pixel(x, MARGIN, BLACK);
    }
    for y in MARGIN..=HEIGHT - MARGIN {
        img.put_pixel(MARGIN, y, BLACK);
        img.put_pixel(WIDTH - MARGIN, y, BLACK);
    }
}

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// `log10` trajectories of `linf_u`, `mass` and every `lp_u_*` column.
fn plot_series(table: &Table) -> Result<RgbImage, PlotError> {
    let t = table.numbers(0)?;
    let mut curves = Vec::new();
    for (i, name) in table.header.iter().enumerate() {
        if name == "linf_u" || name == "mass" || name.starts_with("lp_u_") {
            curves.push(table.numbers(i)?);
        }
    }
    let logs: Vec<Vec<Option<f64>>> = curves
        .iter()
        .map(|c| c.iter().map(|&x| (x > 0.0 && x.is_finite()).then(|| x.log10())).collect())
        .collect();
    let flat = logs.iter().flatten().flatten().copied();
    let (lo, hi) = flat.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (t0, t1) = (t[0], *t.last().expect("non-empty"));
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, WHITE);
    frame(&mut img);
    if !lo.is_finite() {
        return Ok(img);
    }
    let span_y = if hi > lo { hi - lo } else { 1.0 };
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let inner_w = (WIDTH - 2 * MARGIN) as f64;
    let inner_h = (HEIGHT - 2 * MARGIN) as f64;
    let to_px = |ti: f64, y: f64| {
        let px = MARGIN as f64 + (ti - t0) / span_t * inner_w;
        let py = (HEIGHT - MARGIN) as f64 - (y - lo) / span_y * inner_h;
        (px.round() as i64, py.round() as i64)
    };
    for (k, curve) in logs.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut prev = None;
        for (i, y) in curve.iter().enumerate() {
            match y {
                Some(y) => {
                    let p = to_px(t[i], *y);
                    line(&mut img, prev.unwrap_or(p), p, color);
                    prev = Some(p);
                }
                None => prev = None,
            }
        }
    }
    Ok(img)
}

/// Heat matrix of `log sup ‖u‖∞` over the first two axes (γ rows and c
/// columns when both are swept). Rows that did not complete are grey.
fn plot_sweep(table: &Table) -> Result<RgbImage, PlotError> {
    let status_col = table.column("status").expect("checked");
    let sup = table.numbers(table.column("sup_linf_u").expect("checked"))?;
    let axis_names = &table.header[..status_col];
    let (row_axis, col_axis) = match (
        axis_names.iter().position(|a| a == "source.gamma"),
        axis_names.iter().position(|a| a == "source.c"),
    ) {
        (Some(g), Some(c)) => (Some(g), Some(c)),
        _ => match axis_names.len() {
            0 => (None, None),
            1 => (None, Some(0)),
            _ => (Some(0), Some(1)),
        },
    };
    let distinct = |axis: Option<usize>| -> Result<Vec<f64>, PlotError> {
        let Some(a) = axis else { return Ok(vec![0.0]) };
        let mut v = table.numbers(a)?;
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(v)
    };
    let row_vals = distinct(row_axis)?;
    let col_vals = distinct(col_axis)?;
    let coord = |axis: Option<usize>, vals: &[f64], i: usize| -> usize {
        axis.map_or(0, |a| {
            let x: f64 = table.rows[i][a].parse().unwrap_or(f64::NAN);
            vals.iter().position(|&v| v == x).unwrap_or(0)
        })
    };
    let logs: Vec<f64> = sup.iter().map(|&x| x.max(1e-300).ln()).collect();
    let finite = logs.iter().copied().filter(|x| x.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, WHITE);
    let cw = (WIDTH - 2 * MARGIN) / col_vals.len().max(1) as u32;
    let ch = (HEIGHT - 2 * MARGIN) / row_vals.len().max(1) as u32;
    for i in 0..table.rows.len() {
        let (r, c) = (coord(row_axis, &row_vals, i), coord(col_axis, &col_vals, i));
        let color = if table.rows[i][status_col] != "Completed" || !logs[i].is_finite() {
            GREY
        } else {
            let s = if hi > lo { (logs[i] - lo) / (hi - lo) } else { 0.5 };
            Rgb([(255.0 * s) as u8, 40, (255.0 * (1.0 - s)) as u8])
        };
        let (x0, y0) = (MARGIN + c as u32 * cw, MARGIN + r as u32 * ch);
        for y in y0..y0 + ch.saturating_sub(1) {
            for x in x0..x0 + cw.saturating_sub(1) {
                img.put_pixel(x, y, color);
            }
        }
    }
    Ok(img)
}
