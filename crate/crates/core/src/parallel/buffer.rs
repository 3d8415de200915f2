//! Circular level buffer shared by the workers of a round.

use std::cell::UnsafeCell;

/// `rows x cols` cells; tree levels map onto rows modulo `rows`.
pub struct LevelBuffer<T> {
    rows: usize,
    cols: usize,
    cells: Vec<UnsafeCell<T>>,
}

// Workers write disjoint cells, and every read is ordered after the write it
// observes by a signal or a barrier.
unsafe impl<T: Send + Sync> Sync for LevelBuffer<T> {}

impl<T: Default> LevelBuffer<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        LevelBuffer {
            rows,
            cols,
            cells: (0..rows * cols).map(|_| UnsafeCell::new(T::default())).collect(),
        }
    }
}

impl<T> LevelBuffer<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn index(&self, row: usize, col: usize) -> usize {
        assert!(row < self.rows && col < self.cols, "cell ({row}, {col}) out of range");
        row * self.cols + col
    }

    /// # Safety
    /// No other thread may write this cell while the reference lives.
    pub unsafe fn get(&self, row: usize, col: usize) -> &T {
        &*self.cells[self.index(row, col)].get()
    }

    /// # Safety
    /// No other thread may read or write this cell concurrently.
    pub unsafe fn set(&self, row: usize, col: usize, value: T) {
        *self.cells[self.index(row, col)].get() = value;
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        let i = self.index(row, col);
        self.cells[i].get_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_trip() {
        let mut buf: LevelBuffer<f64> = LevelBuffer::new(3, 4);
        unsafe {
            buf.set(2, 3, 1.5);
            assert_eq!(*buf.get(2, 3), 1.5);
            assert_eq!(*buf.get(0, 0), 0.0);
        }
        *buf.get_mut(1, 1) = 2.0;
        assert_eq!(unsafe { *buf.get(1, 1) }, 2.0);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn rejects_out_of_range_cells() {
        let buf: LevelBuffer<f64> = LevelBuffer::new(2, 2);
        unsafe {
            buf.get(2, 0);
        }
    }
}
