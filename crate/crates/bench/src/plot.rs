//! Minimal SVG output for environments, trajectories and prior fans.

use std::fmt::Write as _;

use anyhow::Result;
use hetgp_core::environment::OccupancyGrid;
use hetgp_core::interpolation::Interpolator;
use hetgp_core::sampler::{factorize, sample_indexed};
use hetgp_core::{build_prior, Anchors, NoiseProfile, TimeGrid};

const CANVAS: f64 = 640.0;

/// Maps world meters to SVG pixels with y pointing up.
struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
    height: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        (x - self.x0) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        self.height - (y - self.y0) * self.scale
    }
}

pub struct EnvironmentPlot<'a> {
    pub occupancy: &'a OccupancyGrid,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub robot_radius: f64,
    pub trajectory: Option<&'a [[f64; 2]]>,
    pub elites: &'a [Vec<[f64; 2]>],
}

fn polyline(out: &mut String, f: &Frame, pts: &[[f64; 2]], style: &str) {
    let mut d = String::new();
    for p in pts {
        let _ = write!(d, "{:.2},{:.2} ", f.x(p[0]), f.y(p[1]));
    }
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" {style}/>"#, d.trim_end());
}

impl EnvironmentPlot<'_> {
    pub fn to_svg(&self) -> String {
        let g = self.occupancy;
        let res = g.resolution();
        let [ox, oy] = g.origin();
        let (w_m, h_m) = (g.width() as f64 * res, g.height() as f64 * res);
        let scale = CANVAS / w_m.max(h_m);
        let f = Frame {
            x0: ox - 0.5 * res,
            y0: oy - 0.5 * res,
            scale,
            height: h_m * scale,
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
            w_m * scale,
            h_m * scale,
            w_m * scale,
            h_m * scale
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        // Occupied cells as horizontal runs.
        let _ = writeln!(s, r#"<g fill="black">"#);
        for j in 0..g.height() {
            let mut i = 0;
            while i < g.width() {
                if !g.is_occupied(i, j) {
                    i += 1;
                    continue;
                }
                let i0 = i;
                while i < g.width() && g.is_occupied(i, j) {
                    i += 1;
                }
                let c = g.cell_center(i0, j);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                    f.x(c[0] - 0.5 * res),
                    f.y(c[1] + 0.5 * res),
                    (i - i0) as f64 * res * scale,
                    res * scale
                );
            }
        }
        let _ = writeln!(s, "</g>");
        for e in self.elites {
            polyline(
                &mut s,
                &f,
                e,
                r#"stroke="orange" stroke-width="1" stroke-opacity="0.7""#,
            );
        }
        if let Some(t) = self.trajectory {
            polyline(&mut s, &f, t, r#"stroke="royalblue" stroke-width="2""#);
        }
        for (p, color) in [(self.start, "green"), (self.goal, "red")] {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{color}" fill-opacity="0.6"/>"#,
                f.x(p[0]),
                f.y(p[1]),
                self.robot_radius * scale
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Parameters of the prior comparison figure.
#[derive(Debug, Clone)]
pub struct PriorPlot {
    pub t_total: f64,
    pub n_support: usize,
    pub steps_per_interval: usize,
    pub samples: usize,
    pub seed: u64,
    pub start: f64,
    pub goal: f64,
}

impl Default for PriorPlot {
    fn default() -> Self {
        Self {
            t_total: 20.0,
            n_support: 11,
            steps_per_interval: 10,
            samples: 30,
            seed: 0,
            start: 0.0,
            goal: 0.0,
        }
    }
}

/// Densified 1-D position samples of one profile, `(t, x)` per curve.
pub fn prior_fan(p: &PriorPlot, noise: &NoiseProfile) -> Result<Vec<Vec<[f64; 2]>>> {
    let grid = TimeGrid::new(p.t_total, p.n_support)?;
    let prior = build_prior(&[p.start], &[p.goal], grid, noise.clone(), Anchors::default())?;
    let factor = factorize(&prior)?;
    let interp = Interpolator::new(&prior, p.steps_per_interval)?;
    let dt = grid.dt() / p.steps_per_interval as f64;
    (0..p.samples)
        .map(|k| {
            let traj = sample_indexed(&factor, prior.mean.support(), p.seed, k as u64)?;
            let dense = interp.densify_flat(&traj, &prior.mean)?;
            Ok(dense
                .chunks_exact(2)
                .enumerate()
                .map(|(i, s)| [i as f64 * dt, s[0]])
                .collect())
        })
        .collect()
}

/// Two fan panels (parabolic, matched constant) over a panel of `q_c(t)`.
pub fn prior_svg(p: &PriorPlot) -> Result<String> {
    let hetero = NoiseProfile::Parabolic { t_total: p.t_total };
    let homo = NoiseProfile::matched_constant(p.t_total);
    let fans = [
        ("heteroscedastic", prior_fan(p, &hetero)?),
        ("homoscedastic", prior_fan(p, &homo)?),
    ];
    let (pw, ph, pad) = (CANVAS, 220.0, 30.0);
    let total_h = 3.0 * (ph + pad) + pad;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{total_h:.0}" viewBox="0 0 {:.0} {total_h:.0}">"#,
        pw + 2.0 * pad,
        pw + 2.0 * pad
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let amp = fans
        .iter()
        .flat_map(|(_, f)| f.iter().flatten())
        .map(|q| (q[1] - p.start).abs().max((q[1] - p.goal).abs()))
        .fold(1e-9, f64::max);
    let (lo, hi) = (p.start.min(p.goal) - amp, p.start.max(p.goal) + amp);
    for (k, (name, fan)) in fans.iter().enumerate() {
        let top = pad + k as f64 * (ph + pad);
        let _ = writeln!(s, r#"<g transform="translate({pad},{top})">"#);
        let _ = writeln!(s, r#"<text x="4" y="14" font-size="12">{name}</text>"#);
        let _ = writeln!(s, r#"<rect width="{pw}" height="{ph}" fill="none" stroke="gray"/>"#);
        for curve in fan {
            let pts: Vec<[f64; 2]> = curve
                .iter()
                .map(|q| [q[0] / p.t_total * pw, ph - (q[1] - lo) / (hi - lo) * ph])
                .collect();
            let mut d = String::new();
            for q in &pts {
                let _ = write!(d, "{:.2},{:.2} ", q[0], q[1]);
            }
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-opacity="0.5"/>"#,
                d.trim_end()
            );
        }
        let _ = writeln!(s, "</g>");
    }

    let top = pad + 2.0 * (ph + pad);
    let q_max = hetero.power_at(0.0).max(homo.power_at(0.0));
    let _ = writeln!(s, r#"<g transform="translate({pad},{top})">"#);
    let _ = writeln!(s, r#"<text x="4" y="14" font-size="12">q_c(t)</text>"#);
    let _ = writeln!(s, r#"<rect width="{pw}" height="{ph}" fill="none" stroke="gray"/>"#);
    for (noise, color) in [(&hetero, "firebrick"), (&homo, "gray")] {
        let mut d = String::new();
        for i in 0..=200 {
            let t = p.t_total * i as f64 / 200.0;
            let y = ph - noise.power_at(t) / q_max * ph;
            let _ = write!(d, "{:.2},{:.2} ", t / p.t_total * pw, y);
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            d.trim_end()
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
