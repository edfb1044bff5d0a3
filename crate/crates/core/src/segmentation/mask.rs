use std::ops::{BitAnd, BitOr};

/// Row-major binary image.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

/// Offsets `(dx, dy)` of a disk structuring element (`dx² + dy² ≤ r²`).
pub fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Half-width of the disk row at vertical offset `dy`.
fn disk_half_width(radius: usize, dy: isize) -> isize {
    let r2 = (radius * radius) as isize;
    let mut w = 0isize;
    while (w + 1) * (w + 1) + dy * dy <= r2 {
        w += 1;
    }
    w
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height, "mask buffer size mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as unset.
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn set_index(&mut self, idx: usize, value: bool) {
        self.data[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    fn row_prefix(&self) -> Vec<u32> {
        // prefix[y * (w + 1) + x] = set pixels in row y before column x
        let w = self.width;
        let mut prefix = vec![0u32; (w + 1) * self.height];
        for y in 0..self.height {
            let row = &self.data[y * w..(y + 1) * w];
            let out = &mut prefix[y * (w + 1)..(y + 1) * (w + 1)];
            for x in 0..w {
                out[x + 1] = out[x] + row[x] as u32;
            }
        }
        prefix
    }

    /// Dilation by a disk; pixels outside the image count as unset.
    pub fn dilate(&self, radius: usize) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as isize, self.height as isize);
        let prefix = self.row_prefix();
        let stride = self.width + 1;
        let halves: Vec<(isize, isize)> = (-(radius as isize)..=radius as isize)
            .map(|dy| (dy, disk_half_width(radius, dy)))
            .collect();
        Mask::from_fn(self.width, self.height, |x, y| {
            let (x, y) = (x as isize, y as isize);
            halves.iter().any(|&(dy, hw)| {
                let yy = y + dy;
                if yy < 0 || yy >= h {
                    return false;
                }
                let lo = (x - hw).max(0) as usize;
                let hi = (x + hw + 1).min(w) as usize;
                let row = yy as usize * stride;
                prefix[row + hi] > prefix[row + lo]
            })
        })
    }

    /// Erosion by a disk; pixels outside the image count as set.
    pub fn erode(&self, radius: usize) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as isize, self.height as isize);
        let prefix = self.row_prefix();
        let stride = self.width + 1;
        let halves: Vec<(isize, isize)> = (-(radius as isize)..=radius as isize)
            .map(|dy| (dy, disk_half_width(radius, dy)))
            .collect();
        Mask::from_fn(self.width, self.height, |x, y| {
            let (x, y) = (x as isize, y as isize);
            halves.iter().all(|&(dy, hw)| {
                let yy = y + dy;
                if yy < 0 || yy >= h {
                    return true;
                }
                let lo = (x - hw).max(0) as usize;
                let hi = (x + hw + 1).min(w) as usize;
                let row = yy as usize * stride;
                (prefix[row + hi] - prefix[row + lo]) as usize == hi - lo
            })
        })
    }

    pub fn close(&self, radius: usize) -> Mask {
        self.dilate(radius).erode(radius)
    }

    pub fn open(&self, radius: usize) -> Mask {
        self.erode(radius).dilate(radius)
    }
}

impl BitOr for &Mask {
    type Output = Mask;

    fn bitor(self, rhs: &Mask) -> Mask {
        assert_eq!((self.width, self.height), (rhs.width, rhs.height));
        Mask::from_vec(
            self.width,
            self.height,
            self.data.iter().zip(&rhs.data).map(|(&a, &b)| a | b).collect(),
        )
    }
}

impl BitAnd for &Mask {
    type Output = Mask;

    fn bitand(self, rhs: &Mask) -> Mask {
        assert_eq!((self.width, self.height), (rhs.width, rhs.height));
        Mask::from_vec(
            self.width,
            self.height,
            self.data.iter().zip(&rhs.data).map(|(&a, &b)| a & b).collect(),
        )
    }
}
