//! Reference implementations used to cross-check the library. They share no
//! code with it and favour obviousness over speed.
#![allow(dead_code)]

use tableware::{Mask, Vec3};

/// Population covariance, two-pass, in input order.
pub fn covariance(points: &[Vec3]) -> [[f64; 3]; 3] {
    let n = points.len() as f64;
    let mut mean = [0.0; 3];
    for p in points {
        for k in 0..3 {
            mean[k] += p[k];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut c = [[0.0; 3]; 3];
    for p in points {
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]);
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    c
}

/// Eigenvalues of a symmetric 3x3 matrix, descending: one Givens rotation to
/// tridiagonal form, then Sturm-sequence bisection for each eigenvalue.
pub fn eigenvalues(a: [[f64; 3]; 3]) -> [f64; 3] {
    let r = a[0][1].hypot(a[0][2]);
    let (c, s) = if r > 0.0 { (a[0][1] / r, a[0][2] / r) } else { (1.0, 0.0) };
    let g = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    t[i][j] += g[k][i] * a[k][l] * g[l][j];
                }
            }
        }
    }
    let d = [t[0][0], t[1][1], t[2][2]];
    let e = [t[0][1], t[1][2]];

    // Number of eigenvalues strictly below x.
    let below = |x: f64| {
        let tiny = f64::MIN_POSITIVE;
        let mut count = 0;
        let mut q = d[0] - x;
        if q.abs() < tiny {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
        for k in 1..3 {
            q = d[k] - x - e[k - 1] * e[k - 1] / q;
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };

    let radius = (0..3)
        .map(|i| d[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 } + if i < 2 { e[i].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    let mut out = [0.0; 3];
    for (slot, k) in [(2usize, 0usize), (1, 1), (0, 2)] {
        // k-th smallest eigenvalue: smallest x with below(x) > k.
        let (mut lo, mut hi) = (-radius - 1e-300, radius + 1e-300);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out[slot] = 0.5 * (lo + hi);
    }
    out
}

fn disk(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut v = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                v.push((dx, dy));
            }
        }
    }
    v
}

fn at(m: &Mask, x: i64, y: i64) -> Option<bool> {
    if x < 0 || y < 0 || x >= m.width() as i64 || y >= m.height() as i64 {
        None
    } else {
        Some(m.get(x as usize, y as usize))
    }
}

/// Per-pixel dilation; outside pixels are unset.
pub fn dilate(m: &Mask, radius: usize) -> Mask {
    let k = disk(radius);
    Mask::from_fn(m.width(), m.height(), |x, y| {
        k.iter().any(|&(dx, dy)| at(m, x as i64 + dx, y as i64 + dy) == Some(true))
    })
}

/// Per-pixel erosion; outside pixels are set.
pub fn erode(m: &Mask, radius: usize) -> Mask {
    let k = disk(radius);
    Mask::from_fn(m.width(), m.height(), |x, y| {
        k.iter().all(|&(dx, dy)| at(m, x as i64 + dx, y as i64 + dy) != Some(false))
    })
}

pub fn close(m: &Mask, radius: usize) -> Mask {
    erode(&dilate(m, radius), radius)
}

pub fn refine(m: &Mask, close_radius: usize, dilate_radius: usize) -> Mask {
    dilate(&close(m, close_radius), dilate_radius)
}

/// Labels of 8-connected components (0 = background), flood fill.
pub fn components(m: &Mask) -> (Vec<usize>, usize) {
    let (w, h) = (m.width(), m.height());
    let mut label = vec![0usize; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if !m.data()[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if at(m, x + dx, y + dy) == Some(true) {
                        let q = (y + dy) as usize * w + (x + dx) as usize;
                        if label[q] == 0 {
                            label[q] = next;
                            stack.push(q);
                        }
                    }
                }
            }
        }
    }
    (label, next)
}

/// Every lattice midpoint of two pixels of the same component is set.
pub fn components_are_convex(m: &Mask) -> bool {
    let (label, n) = components(m);
    let w = m.width();
    for c in 1..=n {
        let px: Vec<(usize, usize)> = (0..label.len()).filter(|&i| label[i] == c).map(|i| (i % w, i / w)).collect();
        for (i, a) in px.iter().enumerate() {
            for b in &px[i + 1..] {
                if (a.0 + b.0) % 2 == 0 && (a.1 + b.1) % 2 == 0 && !m.get((a.0 + b.0) / 2, (a.1 + b.1) / 2) {
                    return false;
                }
            }
        }
    }
    true
}
