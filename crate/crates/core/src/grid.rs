//! Quantization of detections onto the R x C pin grid.
//!
//! A box is associated with every cell it substantially covers, measured as
//! `area(box ∩ cell) / min(area(box), area(cell))`: a small box lands in the
//! cell holding most of its surface, a large one in every cell it mostly
//! fills. The cell containing the box center is always included so no
//! detection is left without a pin.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scene::{lit, BoundingBox, Cell, Frame, Scalar};

pub const DEFAULT_ROWS: usize = 4;
pub const DEFAULT_COLS: usize = 4;
pub const DEFAULT_TAU: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub rows: usize,
    pub cols: usize,
    /// Minimum overlap ratio for a cell to receive a box.
    pub tau: T,
}

impl<T: Scalar> Default for GridSpec<T> {
    fn default() -> Self {
        Self {
            rows: DEFAULT_ROWS,
            cols: DEFAULT_COLS,
            tau: lit(DEFAULT_TAU),
        }
    }
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(rows: usize, cols: usize, tau: T) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!(
                "grid must have at least one row and column, got {rows}x{cols}"
            )));
        }
        if !(tau > T::zero() && tau <= T::one()) {
            return Err(Error::Config(format!("tau {tau} outside (0, 1]")));
        }
        Ok(Self { rows, cols, tau })
    }

    /// Parses `"RxC"`, e.g. `"4x4"`.
    pub fn parse_dims(text: &str) -> Result<(usize, usize)> {
        let bad = || Error::Config(format!("grid size {text:?} is not of the form RxC"));
        let (r, c) = text.split_once(['x', 'X']).ok_or_else(bad)?;
        let rows = r.trim().parse().map_err(|_| bad())?;
        let cols = c.trim().parse().map_err(|_| bad())?;
        Ok((rows, cols))
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn index_of(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.cols, index % self.cols)
    }

    /// Region of the image covered by `cell`.
    pub fn cell_rect(&self, cell: Cell) -> BoundingBox<T> {
        let (rows, cols) = (lit::<T>(self.rows as f64), lit::<T>(self.cols as f64));
        let x0 = lit::<T>(cell.col as f64) / cols;
        let x1 = lit::<T>((cell.col + 1) as f64) / cols;
        let y0 = lit::<T>(cell.row as f64) / rows;
        let y1 = lit::<T>((cell.row + 1) as f64) / rows;
        BoundingBox {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }

    fn col_of(&self, x: T) -> usize {
        axis_index(x, self.cols)
    }

    fn row_of(&self, y: T) -> usize {
        axis_index(y, self.rows)
    }
}

// Coordinates exactly on a boundary go to the higher-index cell.
fn axis_index<T: Scalar>(v: T, n: usize) -> usize {
    let i = (v * lit::<T>(n as f64)).floor().to_f64().unwrap_or(0.0);
    if i <= 0.0 {
        0
    } else {
        (i as usize).min(n - 1)
    }
}

/// `area(b ∩ cell) / min(area(b), area(cell))`, in `[0, 1]`.
pub fn cell_overlap<T: Scalar>(b: &BoundingBox<T>, cell: Cell, spec: &GridSpec<T>) -> T {
    let rect = spec.cell_rect(cell);
    let inter = b.intersection_area(&rect);
    if inter.is_zero() {
        return T::zero();
    }
    (inter / b.area().min(rect.area())).min(T::one())
}

/// Cells receiving `b`: every cell with overlap `>= tau`, plus the cell
/// containing the box center. Returned in row-major order.
pub fn assign_cells<T: Scalar>(b: &BoundingBox<T>, spec: &GridSpec<T>) -> Vec<(Cell, T)> {
    let (cx, cy) = b.center();
    let center = Cell::new(spec.row_of(cy), spec.col_of(cx));

    let (r0, r1) = (spec.row_of(b.y), spec.row_of(b.bottom()));
    let (c0, c1) = (spec.col_of(b.x), spec.col_of(b.right()));
    let mut out = Vec::new();
    for row in r0..=r1 {
        for col in c0..=c1 {
            let cell = Cell::new(row, col);
            let overlap = cell_overlap(b, cell, spec);
            if overlap > T::zero() && (overlap >= spec.tau || cell == center) {
                out.push((cell, overlap));
            }
        }
    }
    if !out.iter().any(|(c, _)| *c == center) {
        // Only reachable for boxes so thin the center cell's overlap
        // underflows; keep the detection reachable anyway.
        let overlap = cell_overlap(b, center, spec);
        out.push((center, overlap));
        out.sort_by_key(|(c, _)| *c);
    }
    out
}

/// A detection as listed in one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellItem<T> {
    /// Index of the detection within its frame.
    pub detection: usize,
    pub class_id: usize,
    pub confidence: T,
    pub overlap: T,
}

/// Ordering of items within a cell: overlap descending, then confidence
/// descending, then class id, then detection index.
pub fn cell_item_order<T: Scalar>(a: &CellItem<T>, b: &CellItem<T>) -> Ordering {
    let desc = |x: T, y: T| y.partial_cmp(&x).unwrap_or(Ordering::Equal);
    desc(a.overlap, b.overlap)
        .then_with(|| desc(a.confidence, b.confidence))
        .then_with(|| a.class_id.cmp(&b.class_id))
        .then_with(|| a.detection.cmp(&b.detection))
}

pub fn order_cell_objects<T: Scalar>(mut items: Vec<CellItem<T>>) -> Vec<CellItem<T>> {
    items.sort_by(cell_item_order);
    items
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellContents<T> {
    pub cell: Cell,
    pub items: Vec<CellItem<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridState<T> {
    pub spec: GridSpec<T>,
    pub frame_id: u64,
    /// Row-major, `rows * cols` entries.
    pub cells: Vec<CellContents<T>>,
}

impl<T: Scalar> GridState<T> {
    pub fn empty(spec: GridSpec<T>, frame_id: u64) -> Self {
        let cells = (0..spec.cell_count())
            .map(|i| CellContents {
                cell: spec.cell_at(i),
                items: Vec::new(),
            })
            .collect();
        Self {
            spec,
            frame_id,
            cells,
        }
    }

    pub fn cell(&self, cell: Cell) -> Option<&CellContents<T>> {
        if self.spec.contains(cell) {
            self.cells.get(self.spec.index_of(cell))
        } else {
            None
        }
    }
}

/// Maps every detection of an already gated frame onto the grid.
pub fn map_frame<T: Scalar>(frame: &Frame<T>, spec: &GridSpec<T>) -> GridState<T> {
    let mut grid = GridState::empty(*spec, frame.frame_id);
    for (index, det) in frame.detections.iter().enumerate() {
        for (cell, overlap) in assign_cells(&det.bbox, spec) {
            grid.cells[spec.index_of(cell)].items.push(CellItem {
                detection: index,
                class_id: det.class_id,
                confidence: det.confidence,
                overlap,
            });
        }
    }
    for contents in &mut grid.cells {
        contents.items.sort_by(cell_item_order);
    }
    grid
}
