use super::components::connected_components;
use super::mask::Mask;

type P = (i64, i64);

fn cross(o: P, a: P, b: P) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain; counter-clockwise, without collinear vertices.
fn hull(mut pts: Vec<P>) -> Vec<P> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<P> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn inside(poly: &[P], p: P) -> bool {
    match poly.len() {
        0 => false,
        1 => poly[0] == p,
        2 => {
            let (a, b) = (poly[0], poly[1]);
            cross(a, b, p) == 0
                && p.0 >= a.0.min(b.0)
                && p.0 <= a.0.max(b.0)
                && p.1 >= a.1.min(b.1)
                && p.1 <= a.1.max(b.1)
        }
        n => (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], p) >= 0),
    }
}

fn fill_hulls(mask: &Mask) -> Mask {
    let w = mask.width();
    let mut out = mask.clone();
    for comp in connected_components(mask) {
        let poly = hull(
            comp.pixels
                .iter()
                .map(|&i| ((i % w) as i64, (i / w) as i64))
                .collect(),
        );
        let b = comp.bbox;
        for y in b.v..b.v + b.height {
            for x in b.u..b.u + b.width {
                if !out.get(x, y) && inside(&poly, (x as i64, y as i64)) {
                    out.set(x, y, true);
                }
            }
        }
    }
    out
}

/// Fills the convex hull of every 8-connected component.
///
/// Hulls that grow into each other merge into one component, which is hulled
/// again, so the result is a fixed point: applying it twice changes nothing.
pub fn convex_hull_mask(mask: &Mask) -> Mask {
    let mut current = mask.clone();
    loop {
        let next = fill_hulls(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}
