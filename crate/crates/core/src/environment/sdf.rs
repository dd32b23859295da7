use super::{OccupancyGrid, SignedDistanceField};

/// Exact signed Euclidean distance transform.
///
/// Free cells get `(√d² − ½)·res`, where `d²` is the squared center distance
/// (in cells) to the nearest occupied cell; occupied cells get the negated
/// distance to the nearest free cell, offset the same way. The zero level set
/// therefore lies on the cell faces between free and occupied cells. Cells
/// with no feature of the opposite kind report `±diagonal`.
pub fn build_sdf(grid: &OccupancyGrid) -> SignedDistanceField {
    let (w, h) = (grid.width(), grid.height());
    let to_obstacle = squared_edt(w, h, |k| grid.cells()[k]);
    let to_free = squared_edt(w, h, |k| !grid.cells()[k]);
    let res = grid.resolution();
    let cap = grid.diagonal();
    let values = grid
        .cells()
        .iter()
        .enumerate()
        .map(|(k, &occupied)| {
            let (d2, sign) = if occupied {
                (to_free[k], -1.0)
            } else {
                (to_obstacle[k], 1.0)
            };
            if d2.is_finite() {
                sign * ((d2.sqrt() - 0.5) * res).min(cap)
            } else {
                sign * cap
            }
        })
        .collect();
    SignedDistanceField::from_values(w, h, res, grid.origin(), values).expect("raster shape comes from a valid grid")
}

/// Squared distance (in cells) from every cell to the nearest feature cell,
/// separably over columns then rows.
fn squared_edt(w: usize, h: usize, is_feature: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut d: Vec<f64> = (0..w * h)
        .map(|k| if is_feature(k) { 0.0 } else { f64::INFINITY })
        .collect();
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut scratch = Envelope::with_capacity(n);

    for i in 0..w {
        for j in 0..h {
            f[j] = d[j * w + i];
        }
        scratch.transform(&f[..h], &mut out[..h]);
        for j in 0..h {
            d[j * w + i] = out[j];
        }
    }
    for j in 0..h {
        let row = &mut d[j * w..(j + 1) * w];
        f[..w].copy_from_slice(row);
        scratch.transform(&f[..w], &mut out[..w]);
        row.copy_from_slice(&out[..w]);
    }
    d
}

/// Lower envelope of the parabolas `(q − p)² + f(p)` over finite samples.
struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        self.sites.clear();
        self.bounds.clear();
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            loop {
                let Some(&p) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let s = intersection(f, p, q);
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.sites.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let p = self.sites[k];
            let dq = q as f64 - p as f64;
            *o = dq * dq + f[p];
        }
    }
}

fn intersection(f: &[f64], p: usize, q: usize) -> f64 {
    let (pf, qf) = (p as f64, q as f64);
    ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
}
