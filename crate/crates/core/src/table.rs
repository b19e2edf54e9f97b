use std::ops::{Index, IndexMut};

/// Dense table indexed by `(ap, ue)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable<T> {
    aps: usize,
    ues: usize,
    data: Vec<T>,
}

impl<T> LinkTable<T> {
    pub fn from_fn(aps: usize, ues: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(aps * ues);
        for m in 0..aps {
            for k in 0..ues {
                data.push(f(m, k));
            }
        }
        Self { aps, ues, data }
    }

    pub fn try_from_fn<E>(
        aps: usize,
        ues: usize,
        mut f: impl FnMut(usize, usize) -> Result<T, E>,
    ) -> Result<Self, E> {
        let mut data = Vec::with_capacity(aps * ues);
        for m in 0..aps {
            for k in 0..ues {
                data.push(f(m, k)?);
            }
        }
        Ok(Self { aps, ues, data })
    }

    pub fn aps(&self) -> usize {
        self.aps
    }

    pub fn ues(&self) -> usize {
        self.ues
    }

    /// Entries of AP `m`, ordered by UE.
    pub fn ap(&self, m: usize) -> &[T] {
        &self.data[m * self.ues..(m + 1) * self.ues]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let ues = self.ues;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i / ues, i % ues), v))
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> LinkTable<U> {
        LinkTable {
            aps: self.aps,
            ues: self.ues,
            data: self.data.iter().map(&mut f).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for LinkTable<T> {
    type Output = T;

    fn index(&self, (m, k): (usize, usize)) -> &T {
        assert!(m < self.aps && k < self.ues, "link ({m}, {k}) out of range");
        &self.data[m * self.ues + k]
    }
}

impl<T> IndexMut<(usize, usize)> for LinkTable<T> {
    fn index_mut(&mut self, (m, k): (usize, usize)) -> &mut T {
        assert!(m < self.aps && k < self.ues, "link ({m}, {k}) out of range");
        &mut self.data[m * self.ues + k]
    }
}
