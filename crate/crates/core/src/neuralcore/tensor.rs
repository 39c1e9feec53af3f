use crate::{Error, Result};

/// Dense rank-3 array indexed `(sample, channel, position)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch3 {
    data: Vec<f64>,
    batch: usize,
    channels: usize,
    len: usize,
}

impl Batch3 {
    /// Wraps `data` after checking its length against the dimensions and that
    /// every value is finite.
    pub fn new(batch: usize, channels: usize, len: usize, data: Vec<f64>) -> Result<Self> {
        if batch == 0 || channels == 0 || len == 0 {
            return Err(Error::shape(
                "Batch3::new",
                "positive dimensions",
                format!("({batch}, {channels}, {len})"),
            ));
        }
        if data.len() != batch * channels * len {
            return Err(Error::shape(
                "Batch3::new",
                batch * channels * len,
                data.len(),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value {} at flat index {pos}",
                data[pos]
            )));
        }
        Ok(Self::from_raw(batch, channels, len, data))
    }

    pub(crate) fn from_raw(batch: usize, channels: usize, len: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), batch * channels * len);
        Self {
            data,
            batch,
            channels,
            len,
        }
    }

    pub fn zeros(batch: usize, channels: usize, len: usize) -> Self {
        Self::from_raw(batch, channels, len, vec![0.0; batch * channels * len])
    }

    pub fn from_fn(
        batch: usize,
        channels: usize,
        len: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(batch * channels * len);
        for b in 0..batch {
            for c in 0..channels {
                for l in 0..len {
                    data.push(f(b, c, l));
                }
            }
        }
        Self::from_raw(batch, channels, len, data)
    }

    /// Stacks equal-length single-channel scans into a `(B, 1, N)` batch.
    pub fn from_scans<S: AsRef<[f64]>>(scans: &[S]) -> Result<Self> {
        let Some(first) = scans.first() else {
            return Err(Error::shape("Batch3::from_scans", "at least one scan", 0));
        };
        let n = first.as_ref().len();
        let mut data = Vec::with_capacity(scans.len() * n);
        for scan in scans {
            let scan = scan.as_ref();
            if scan.len() != n {
                return Err(Error::shape("Batch3::from_scans", n, scan.len()));
            }
            data.extend_from_slice(scan);
        }
        Self::new(scans.len(), 1, n, data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.batch, self.channels, self.len)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, l: usize) -> usize {
        (b * self.channels + c) * self.len + l
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, l: usize) -> f64 {
        self.data[self.index(b, c, l)]
    }

    /// All channels of sample `b`, laid out channel-major.
    pub fn sample(&self, b: usize) -> &[f64] {
        let stride = self.channels * self.len;
        &self.data[b * stride..(b + 1) * stride]
    }

    pub fn row(&self, b: usize, c: usize) -> &[f64] {
        let start = self.index(b, c, 0);
        &self.data[start..start + self.len]
    }

    pub fn same_dims(&self, other: &Batch3) -> bool {
        self.dims() == other.dims()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Batch3 {
        Self::from_raw(
            self.batch,
            self.channels,
            self.len,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn expect_dims(&self, op: &'static str, dims: (usize, usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::shape(op, fmt_dims(dims), fmt_dims(self.dims())));
        }
        Ok(())
    }

    /// Rearranges `(B, C, L)` into a `C × (B·L)` row-major matrix.
    pub(crate) fn to_channel_major(&self) -> Vec<f64> {
        let (b_n, c_n, l_n) = self.dims();
        let cols = b_n * l_n;
        let mut out = vec![0.0; c_n * cols];
        for b in 0..b_n {
            for c in 0..c_n {
                let src = self.row(b, c);
                out[c * cols + b * l_n..c * cols + (b + 1) * l_n].copy_from_slice(src);
            }
        }
        out
    }

    /// Inverse of [`Batch3::to_channel_major`].
    pub(crate) fn from_channel_major(b_n: usize, c_n: usize, l_n: usize, cm: &[f64]) -> Batch3 {
        let cols = b_n * l_n;
        let mut data = vec![0.0; b_n * c_n * l_n];
        for b in 0..b_n {
            for c in 0..c_n {
                let dst = (b * c_n + c) * l_n;
                data[dst..dst + l_n]
                    .copy_from_slice(&cm[c * cols + b * l_n..c * cols + (b + 1) * l_n]);
            }
        }
        Batch3::from_raw(b_n, c_n, l_n, data)
    }
}

pub(crate) fn fmt_dims(d: (usize, usize, usize)) -> String {
    format!("({}, {}, {})", d.0, d.1, d.2)
}
