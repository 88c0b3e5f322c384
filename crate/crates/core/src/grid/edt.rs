//! Exact squared Euclidean distance transform on a grid, in cell units.
//!
//! Separable lower-envelope-of-parabolas algorithm (Felzenszwalb and
//! Huttenlocher): one pass along x, one along y. Input values are 0 on target
//! cells and `INF` elsewhere; output values are exact integers.

pub(crate) const INF: f64 = 1e20;

fn envelope_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    v.resize(n, 0);
    z.clear();
    z.resize(n + 1, 0.0);
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // z[0] is -inf, so k never underflows
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = if f[p] >= INF { INF } else { d * d + f[p] };
    }
}

/// Squared distance (in cells) from every cell to the nearest target cell.
pub(crate) fn squared_edt(target: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    let mut g: Vec<f64> = target.iter().map(|&t| if t { 0.0 } else { INF }).collect();
    let mut v = Vec::new();
    let mut z = Vec::new();
    // along x
    let mut row_out = vec![0.0; nx];
    for j in 0..ny {
        let row = &g[j * nx..(j + 1) * nx];
        envelope_1d(row, &mut row_out, &mut v, &mut z);
        g[j * nx..(j + 1) * nx].copy_from_slice(&row_out);
    }
    if ny > 1 {
        let mut col = vec![0.0; ny];
        let mut col_out = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = g[i + j * nx];
            }
            envelope_1d(&col, &mut col_out, &mut v, &mut z);
            for j in 0..ny {
                g[i + j * nx] = col_out[j];
            }
        }
    }
    g
}
