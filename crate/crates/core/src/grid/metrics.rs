use serde::{Deserialize, Serialize};

use super::edt::squared_edt;
use super::{ScalarGridField, ShapeMask};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureStats {
    pub volume: f64,
    /// Face-count perimeter: number of inside/outside faces times `h^(d-1)`.
    pub perimeter: f64,
}

pub fn measure_stats(mask: &ShapeMask) -> MeasureStats {
    let d = mask.domain();
    let mut faces = 0usize;
    for k in mask.iter_inside() {
        // inside cells are never in the ring, so every neighbor exists
        for n in d.neighbors(k).iter().take(d.directions()).flatten() {
            if !mask.contains(*n) {
                faces += 1;
            }
        }
    }
    MeasureStats {
        volume: mask.volume(),
        perimeter: faces as f64 * d.face_area(),
    }
}

/// Lebesgue measure of the symmetric difference.
pub fn sym_diff(a: &ShapeMask, b: &ShapeMask) -> Result<f64> {
    a.domain().check_same(b.domain())?;
    let n = a.cells().iter().zip(b.cells()).filter(|(x, y)| x != y).count();
    Ok(n as f64 * a.domain().cell_volume())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceTarget {
    /// Distance to the cells of the mask.
    Set,
    /// Distance to every cell outside the mask, boundary ring included.
    Complement,
}

fn target_cells(mask: &ShapeMask, to: DistanceTarget) -> Vec<bool> {
    match to {
        DistanceTarget::Set => mask.cells().to_vec(),
        DistanceTarget::Complement => mask.cells().iter().map(|&b| !b).collect(),
    }
}

/// Exact Euclidean distance from each cell center to the nearest cell center
/// of the target set.
pub fn distance_transform(mask: &ShapeMask, to: DistanceTarget) -> Result<ScalarGridField> {
    let d = mask.domain();
    let target = target_cells(mask, to);
    if !target.iter().any(|&b| b) {
        return Err(Error::EmptyTarget);
    }
    let [nx, ny] = d.cells();
    let sq = squared_edt(&target, nx, ny);
    let h = d.h();
    ScalarGridField::new(*d, sq.into_iter().map(|s| s.sqrt() * h).collect())
}

/// Oriented distance `b_K`: minus the distance to the complement inside the
/// mask, the distance to the mask outside.
pub fn oriented_distance(mask: &ShapeMask) -> Result<ScalarGridField> {
    let to_set = distance_transform(mask, DistanceTarget::Set)?;
    let to_comp = distance_transform(mask, DistanceTarget::Complement)?;
    let vals = (0..mask.domain().len())
        .map(|k| {
            if mask.contains(k) {
                -to_comp.get(k)
            } else {
                to_set.get(k)
            }
        })
        .collect();
    ScalarGridField::new(*mask.domain(), vals)
}

/// Cells whose distance to the complement exceeds `r`, i.e. the grid version
/// of `D \ (Ωᶜ + B̄_r)`.
pub fn erode_complement(mask: &ShapeMask, r: f64) -> Result<ShapeMask> {
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("erosion radius {r} must be nonnegative")));
    }
    // the ring is always in the complement, so the target is never empty
    let dist = distance_transform(mask, DistanceTarget::Complement)?;
    Ok(ShapeMask::from_fn(*mask.domain(), |k| {
        mask.contains(k) && dist.get(k) > r
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetDistances {
    /// Hausdorff distance between the sets (sup-norm of distance functions).
    pub hausdorff: f64,
    /// Hausdorff distance between the complements.
    pub hausdorff_complement: f64,
    /// L²(D) distance of oriented distance functions.
    pub oriented_l2: f64,
    /// Measure of the symmetric difference.
    pub characteristic: f64,
    /// Fraenkel relative asymmetry; `None` if either mask is empty.
    pub fraenkel: Option<f64>,
}

fn sup_diff(a: &ScalarGridField, b: &ScalarGridField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// All set metrics at once. Distances involving exactly one empty set are
/// reported as infinite.
pub fn set_distances(a: &ShapeMask, b: &ShapeMask) -> Result<SetDistances> {
    a.domain().check_same(b.domain())?;
    let characteristic = sym_diff(a, b)?;
    let comp_a = distance_transform(a, DistanceTarget::Complement)?;
    let comp_b = distance_transform(b, DistanceTarget::Complement)?;
    let hausdorff_complement = sup_diff(&comp_a, &comp_b);

    let (hausdorff, oriented_l2) = match (a.is_empty(), b.is_empty()) {
        (true, true) => (0.0, 0.0),
        (true, false) | (false, true) => (f64::INFINITY, f64::INFINITY),
        (false, false) => {
            let set_a = distance_transform(a, DistanceTarget::Set)?;
            let set_b = distance_transform(b, DistanceTarget::Set)?;
            let ba = oriented_distance(a)?;
            let bb = oriented_distance(b)?;
            (sup_diff(&set_a, &set_b), ba.l2_distance(&bb)?)
        }
    };
    let fraenkel = if a.is_empty() || b.is_empty() {
        None
    } else {
        Some(fraenkel_asymmetry(a, b)?)
    };
    Ok(SetDistances {
        hausdorff,
        hausdorff_complement,
        oriented_l2,
        characteristic,
        fraenkel,
    })
}

fn centroid(mask: &ShapeMask) -> [f64; 2] {
    let d = mask.domain();
    let mut c = [0.0; 2];
    let mut n = 0.0;
    for k in mask.iter_inside() {
        let p = d.center(k);
        c[0] += p[0];
        c[1] += p[1];
        n += 1.0;
    }
    [c[0] / n, c[1] / n]
}

/// `min_x |A Δ (x + λB)| / |A|` with `λ = (|A|/|B|)^(1/d)`, minimized over
/// whole-cell translations.
///
/// `λB` is resampled about its centroid and placed on the centroid of `A`;
/// the translation search then scans a small exhaustive window around that
/// placement and continues by steepest descent on the integer lattice.
pub fn fraenkel_asymmetry(a: &ShapeMask, b: &ShapeMask) -> Result<f64> {
    a.domain().check_same(b.domain())?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask("Fraenkel asymmetry needs two nonempty sets"));
    }
    let d = *a.domain();
    let dim = d.dim();
    let h = d.h();
    let lambda = (a.count() as f64 / b.count() as f64).powf(1.0 / dim as f64);
    let ca = centroid(a);
    let cb = centroid(b);
    let anchor = d.locate(ca).expect("centroid of a nonempty mask lies in the grid");
    let (ai, aj) = d.coords(anchor);
    let anchor_center = d.center(anchor);

    // integer offsets (relative to the anchor cell) of the rescaled copy of b
    let (blo, bhi) = {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for k in b.iter_inside() {
            let p = d.center(k);
            for ax in 0..dim {
                lo[ax] = lo[ax].min(p[ax] - cb[ax]);
                hi[ax] = hi[ax].max(p[ax] - cb[ax]);
            }
        }
        (lo, hi)
    };
    let reach = |ax: usize| -> (isize, isize) {
        if ax >= dim {
            return (0, 0);
        }
        let lo = ((blo[ax] - h) * lambda / h).floor() as isize - 2;
        let hi = ((bhi[ax] + h) * lambda / h).ceil() as isize + 2;
        (lo, hi)
    };
    let (xlo, xhi) = reach(0);
    let (ylo, yhi) = reach(1);
    let mut scaled: Vec<(isize, isize)> = Vec::new();
    for oj in ylo..=yhi {
        for oi in xlo..=xhi {
            let p = [anchor_center[0] + oi as f64 * h, anchor_center[1] + oj as f64 * h];
            let src = [
                cb[0] + (p[0] - ca[0]) / lambda,
                if dim == 2 { cb[1] + (p[1] - ca[1]) / lambda } else { 0.0 },
            ];
            if let Some(k) = d.locate(src) {
                if b.contains(k) {
                    scaled.push((oi, oj));
                }
            }
        }
    }
    let [nx, ny] = d.cells();
    let overlap = |si: isize, sj: isize| -> usize {
        scaled
            .iter()
            .filter(|&&(oi, oj)| {
                let i = ai as isize + oi + si;
                let j = aj as isize + oj + sj;
                i >= 0
                    && j >= 0
                    && (i as usize) < nx
                    && (j as usize) < ny
                    && a.contains(d.index(i as usize, j as usize))
            })
            .count()
    };
    let sym = |s: (isize, isize)| -> usize { a.count() + scaled.len() - 2 * overlap(s.0, s.1) };
    let window: isize = 3;
    let yw = if dim == 2 { window } else { 0 };
    let mut best = (0isize, 0isize);
    let mut best_val = sym(best);
    for sj in -yw..=yw {
        for si in -window..=window {
            let v = sym((si, sj));
            if v < best_val {
                best_val = v;
                best = (si, sj);
            }
        }
    }
    loop {
        let mut improved = false;
        let steps: &[(isize, isize)] = if dim == 2 {
            &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
        } else {
            &[(1, 0), (-1, 0)]
        };
        for &(di, dj) in steps {
            let cand = (best.0 + di, best.1 + dj);
            let v = sym(cand);
            if v < best_val {
                best_val = v;
                best = cand;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best_val as f64 / a.count() as f64)
}

/// Number of face-connected components of the mask.
pub fn component_count(mask: &ShapeMask) -> usize {
    let d = mask.domain();
    let mut seen = vec![false; d.len()];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in mask.iter_inside() {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            for n in d.neighbors(k).into_iter().flatten() {
                if mask.contains(n) && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, GridDomain, Primitive};
    use std::f64::consts::PI;

    fn disk(d: &GridDomain, c: [f64; 2], r: f64) -> ShapeMask {
        rasterize(&Primitive::ball(&c, r), d).unwrap()
    }

    #[test]
    fn single_cell_stats() {
        let d = GridDomain::square(0.0, 1.0, 10).unwrap();
        let m = ShapeMask::from_fn(d, |k| k == d.index(4, 4));
        let s = measure_stats(&m);
        assert!((s.volume - 0.01).abs() < 1e-15);
        assert!((s.perimeter - 0.4).abs() < 1e-15);
        let d1 = GridDomain::interval(0.0, 1.0, 10).unwrap();
        let m1 = ShapeMask::from_fn(d1, |k| k == 4);
        let s1 = measure_stats(&m1);
        assert!((s1.volume - 0.1).abs() < 1e-15);
        assert!((s1.perimeter - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unit_square_volume() {
        let h = 0.01;
        let d = GridDomain::square(-0.5, 1.5, 200).unwrap();
        let m = rasterize(&Primitive::rect(&[0.0, 0.0], &[1.0, 1.0]), &d).unwrap();
        assert!((m.volume() - 1.0).abs() <= h);
    }

    #[test]
    fn disk_stats() {
        let d = GridDomain::square(-1.25, 1.25, 320).unwrap();
        let s = measure_stats(&disk(&d, [0.0, 0.0], 1.0));
        assert!((s.volume - PI).abs() < 0.02 * PI);
        assert!(s.perimeter > 2.0 * PI && s.perimeter <= 8.0 + 1e-12, "{}", s.perimeter);
    }

    #[test]
    fn sym_diff_cases() {
        let d = GridDomain::square(-2.0, 2.0, 128).unwrap();
        let a = disk(&d, [-1.0, 0.0], 0.5);
        let b = disk(&d, [1.0, 0.0], 0.5);
        assert_eq!(sym_diff(&a, &a).unwrap(), 0.0);
        assert!((sym_diff(&a, &b).unwrap() - a.volume() - b.volume()).abs() < 1e-12);
        let c = disk(&d, [0.0, 0.0], 1.0);
        let e = disk(&d, [0.0, 0.0], 1.1);
        let exact = PI * (1.21 - 1.0);
        assert!((sym_diff(&c, &e).unwrap() - exact).abs() < 2.0 * PI * 2.1 * d.h());
    }

    #[test]
    fn distance_to_complement_of_disk() {
        let d = GridDomain::square(-1.25, 1.25, 80).unwrap();
        let m = disk(&d, [0.0, 0.0], 1.0);
        let dist = distance_transform(&m, DistanceTarget::Complement).unwrap();
        let center = d.locate([1e-9, 1e-9]).unwrap();
        assert!((dist.get(center) - 1.0).abs() <= d.h());
        let to_set = distance_transform(&m, DistanceTarget::Set).unwrap();
        assert_eq!(to_set.get(center), 0.0);
        assert!(matches!(
            distance_transform(&ShapeMask::empty(d), DistanceTarget::Set),
            Err(Error::EmptyTarget)
        ));
    }

    #[test]
    fn full_mask_interior_distance_reaches_ring() {
        let d = GridDomain::square(0.0, 1.0, 21).unwrap();
        let m = ShapeMask::full(d);
        let dist = distance_transform(&m, DistanceTarget::Complement).unwrap();
        // the middle cell is 10 cells from the ring
        assert!((dist.get(d.index(10, 10)) - 10.0 * d.h()).abs() < 1e-12);
    }

    #[test]
    fn erosion_cases() {
        let d = GridDomain::square(-1.25, 1.25, 100).unwrap();
        let m = disk(&d, [0.0, 0.0], 1.0);
        assert_eq!(erode_complement(&m, 0.0).unwrap(), m);
        let e = erode_complement(&m, 0.5).unwrap();
        assert!(e.is_subset_of(&m).unwrap());
        let expect = disk(&d, [0.0, 0.0], 0.5);
        // every disagreement lies within one cell of the radius-0.5 circle
        for k in 0..d.len() {
            if e.contains(k) != expect.contains(k) {
                let c = d.center(k);
                let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
                assert!((r - 0.5).abs() <= d.h(), "r = {r}");
            }
        }
        assert!(erode_complement(&m, 1.1).unwrap().is_empty());
        assert!(erode_complement(&m, -0.1).is_err());
    }

    #[test]
    fn identical_masks_have_zero_distances() {
        let d = GridDomain::square(-2.0, 2.0, 64).unwrap();
        let m = disk(&d, [0.2, -0.1], 0.8);
        let s = set_distances(&m, &m).unwrap();
        assert_eq!(s.hausdorff, 0.0);
        assert_eq!(s.hausdorff_complement, 0.0);
        assert_eq!(s.oriented_l2, 0.0);
        assert_eq!(s.characteristic, 0.0);
        assert_eq!(s.fraenkel, Some(0.0));
    }

    #[test]
    fn fraenkel_is_scale_and_translation_invariant() {
        let d = GridDomain::square(-2.0, 2.0, 128).unwrap();
        let a = disk(&d, [0.0, 0.0], 1.0);
        let b = disk(&d, [0.3, -0.2], 0.5);
        let f = fraenkel_asymmetry(&a, &b).unwrap();
        // boundary resampling error ~ perimeter·h / area
        assert!(f < 4.0 * d.h(), "{f}");
        let sq = rasterize(&Primitive::rect(&[-0.8, -0.8], &[0.8, 0.8]), &d).unwrap();
        assert!(fraenkel_asymmetry(&a, &sq).unwrap() > 0.05);
        assert!(fraenkel_asymmetry(&a, &ShapeMask::empty(d)).is_err());
    }

    #[test]
    fn complement_hausdorff_of_concentric_disks() {
        let d = GridDomain::square(-1.25, 1.25, 80).unwrap();
        let a = disk(&d, [0.0, 0.0], 1.0);
        let b = disk(&d, [0.0, 0.0], 0.5);
        let s = set_distances(&a, &b).unwrap();
        assert!(
            (s.hausdorff_complement - 0.5).abs() <= d.h(),
            "{}",
            s.hausdorff_complement
        );
    }

    #[test]
    fn components() {
        let d = GridDomain::square(-2.0, 2.0, 64).unwrap();
        let u = rasterize(
            &Primitive::union(vec![
                Primitive::ball(&[0.0, 0.0], 0.7),
                Primitive::annulus(&[0.0, 0.0], 1.1, 1.6),
            ]),
            &d,
        )
        .unwrap();
        assert_eq!(component_count(&u), 2);
        assert_eq!(component_count(&ShapeMask::empty(d)), 0);
    }
}
