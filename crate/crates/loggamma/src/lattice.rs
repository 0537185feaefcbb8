//! Lattice points, unit steps and rectangular grids.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A unit step of an up-right lattice path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    E1,
    E2,
}

impl Step {
    pub fn other(self) -> Step {
        match self {
            Step::E1 => Step::E2,
            Step::E2 => Step::E1,
        }
    }

    pub fn as_vec(self) -> (i64, i64) {
        match self {
            Step::E1 => (1, 0),
            Step::E2 => (0, 1),
        }
    }
}

/// A point of `Z_+^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub i: usize,
    pub j: usize,
}

impl Point {
    pub const ORIGIN: Point = Point { i: 0, j: 0 };

    pub const fn new(i: usize, j: usize) -> Point {
        Point { i, j }
    }

    pub fn l1(self) -> usize {
        self.i + self.j
    }

    pub fn plus(self, s: Step) -> Point {
        match s {
            Step::E1 => Point::new(self.i + 1, self.j),
            Step::E2 => Point::new(self.i, self.j + 1),
        }
    }

    /// `self - s`, or `None` when that leaves the quadrant.
    pub fn minus(self, s: Step) -> Option<Point> {
        match s {
            Step::E1 => self.i.checked_sub(1).map(|i| Point::new(i, self.j)),
            Step::E2 => self.j.checked_sub(1).map(|j| Point::new(self.i, j)),
        }
    }

    /// Coordinatewise `self <= other`.
    pub fn le(self, other: Point) -> bool {
        self.i <= other.i && self.j <= other.j
    }
}

impl From<(usize, usize)> for Point {
    fn from((i, j): (usize, usize)) -> Self {
        Point::new(i, j)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Values on the rectangle `{i0..=i1} x {j0..=j1}`, stored row by row
/// (a row is a fixed second coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    i0: usize,
    j0: usize,
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    /// Grid over `[lo.i, hi.i] x [lo.j, hi.j]` filled with `fill`.
    pub fn new(lo: Point, hi: Point, fill: T) -> Grid<T> {
        assert!(lo.le(hi), "empty grid {lo}..{hi}");
        let width = hi.i - lo.i + 1;
        let height = hi.j - lo.j + 1;
        Grid { i0: lo.i, j0: lo.j, width, height, data: vec![fill; width * height] }
    }

    pub fn from_vec(lo: Point, hi: Point, data: Vec<T>) -> Option<Grid<T>> {
        if !lo.le(hi) {
            return None;
        }
        let width = hi.i - lo.i + 1;
        let height = hi.j - lo.j + 1;
        (data.len() == width * height).then_some(Grid { i0: lo.i, j0: lo.j, width, height, data })
    }

    pub fn lo(&self) -> Point {
        Point::new(self.i0, self.j0)
    }

    pub fn hi(&self) -> Point {
        Point::new(self.i0 + self.width - 1, self.j0 + self.height - 1)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.i >= self.i0 && p.j >= self.j0 && p.i < self.i0 + self.width && p.j < self.j0 + self.height
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.contains(Point::new(i, j)), "({i},{j}) outside {}..{}", self.lo(), self.hi());
        (j - self.j0) * self.width + (i - self.i0)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn get(&self, p: Point) -> T {
        self.at(p.i, p.j)
    }

    pub fn try_get(&self, p: Point) -> Option<T> {
        self.contains(p).then(|| self.get(p))
    }

    #[inline]
    pub fn set(&mut self, p: Point, v: T) {
        let k = self.index(p.i, p.j);
        self.data[k] = v;
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let k = self.index(i, j);
        &mut self.data[k]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// All points in storage order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let (i0, j0, w) = (self.i0, self.j0, self.width);
        (0..self.data.len()).map(move |k| Point::new(i0 + k % w, j0 + k / w))
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            i0: self.i0,
            j0: self.j0,
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
