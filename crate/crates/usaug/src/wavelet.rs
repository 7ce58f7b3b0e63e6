//! Separable 2D discrete wavelet transform (Daubechies db2/db5) with
//! symmetric boundary extension, plus sparsity-driven level-dependent
//! soft thresholding.
//!
//! The analysis step extends each signal symmetrically by `L - 1` samples,
//! correlates with the filter, and keeps every second position. The
//! transform is slightly expansive (each band holds `floor((n + L) / 2)`
//! coefficients), which is what makes reconstruction exact for arbitrary
//! lengths: the synthesis step is the adjoint, and the quadrature-mirror
//! identities cancel the boundary effects on the interior.

use crate::error::{Error, Result};

/// Mother wavelet for denoising.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotherWavelet {
    Db2,
    Db5,
}

impl MotherWavelet {
    /// Orthonormal scaling (low-pass) filter taps.
    pub fn scaling_filter(&self) -> &'static [f64] {
        match self {
            // Closed-form db2 coefficients: (1 +/- sqrt(3)) / (4 sqrt(2)).
            MotherWavelet::Db2 => &[
                0.482962913144690,
                0.836516303737469,
                0.224143868041857,
                -0.129409522550921,
            ],
            MotherWavelet::Db5 => &[
                0.160102397974125,
                0.603829269797473,
                0.724308528438574,
                0.138428145901103,
                -0.242294887066190,
                -0.032244869585030,
                0.077571493840065,
                -0.006241490213012,
                -0.012580751999016,
                0.003335725285002,
            ],
        }
    }

    /// Quadrature-mirror high-pass filter: `g[k] = (-1)^k h[L-1-k]`.
    pub fn wavelet_filter(&self) -> Vec<f64> {
        let h = self.scaling_filter();
        let len = h.len();
        (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * h[len - 1 - k]
            })
            .collect()
    }
}

impl std::str::FromStr for MotherWavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "db2" => Ok(MotherWavelet::Db2),
            "db5" => Ok(MotherWavelet::Db5),
            other => Err(Error::Lookup(format!("unknown wavelet '{other}'"))),
        }
    }
}

impl std::fmt::Display for MotherWavelet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MotherWavelet::Db2 => write!(f, "db2"),
            MotherWavelet::Db5 => write!(f, "db5"),
        }
    }
}

/// Row-major 2D plane of `f64` coefficients.
#[derive(Debug, Clone)]
pub struct Plane {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }
}

/// One decomposition level: the three detail subbands.
#[derive(Debug, Clone)]
pub struct DetailLevel {
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

impl DetailLevel {
    fn subbands_mut(&mut self) -> [&mut Plane; 3] {
        [&mut self.lh, &mut self.hl, &mut self.hh]
    }

    pub fn coefficient_count(&self) -> usize {
        self.lh.data.len() + self.hl.data.len() + self.hh.data.len()
    }
}

/// Multi-level 2D decomposition. `details[0]` is the finest level.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub approx: Plane,
    pub details: Vec<DetailLevel>,
}

fn symmetric_index(i: i64, n: i64) -> usize {
    // Half-point symmetry: ... x1 x0 | x0 x1 ... xn-1 | xn-1 xn-2 ...
    let period = 2 * n;
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - 1 - j;
    }
    j as usize
}

fn analysis_1d(signal: &[f64], filter: &[f64]) -> Vec<f64> {
    let n = signal.len() as i64;
    let len = filter.len() as i64;
    let out_len = ((n + len) / 2) as usize;
    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len as i64 {
        let start = 2 * i - (len - 1);
        let mut acc = 0.0;
        for (k, &f) in filter.iter().enumerate() {
            acc += f * signal[symmetric_index(start + k as i64, n)];
        }
        out.push(acc);
    }
    out
}

fn synthesis_1d(low: &[f64], high: &[f64], h: &[f64], g: &[f64], out_len: usize) -> Vec<f64> {
    let len = h.len() as i64;
    let m = low.len() as i64;
    debug_assert_eq!(low.len(), high.len());
    // Adjoint of the analysis correlation: scatter-add each coefficient
    // through its filter window, then crop the extension margin.
    let acc_len = (2 * m + len - 1) as usize;
    let mut acc = vec![0.0; acc_len];
    for i in 0..m as usize {
        let base = 2 * i;
        for k in 0..len as usize {
            acc[base + k] += h[k] * low[i] + g[k] * high[i];
        }
    }
    let offset = (len - 1) as usize;
    acc[offset..offset + out_len].to_vec()
}

fn analyze_rows(plane: &Plane, h: &[f64], g: &[f64]) -> (Plane, Plane) {
    let out_cols = (plane.cols + h.len()) / 2;
    let mut low = Plane::new(plane.rows, out_cols);
    let mut high = Plane::new(plane.rows, out_cols);
    for r in 0..plane.rows {
        let row = &plane.data[r * plane.cols..(r + 1) * plane.cols];
        low.data[r * out_cols..(r + 1) * out_cols].copy_from_slice(&analysis_1d(row, h));
        high.data[r * out_cols..(r + 1) * out_cols].copy_from_slice(&analysis_1d(row, g));
    }
    (low, high)
}

fn analyze_cols(plane: &Plane, h: &[f64], g: &[f64]) -> (Plane, Plane) {
    let out_rows = (plane.rows + h.len()) / 2;
    let mut low = Plane::new(out_rows, plane.cols);
    let mut high = Plane::new(out_rows, plane.cols);
    let mut column = vec![0.0; plane.rows];
    for c in 0..plane.cols {
        for (r, slot) in column.iter_mut().enumerate() {
            *slot = plane.data[r * plane.cols + c];
        }
        for (r, v) in analysis_1d(&column, h).into_iter().enumerate() {
            low.data[r * plane.cols + c] = v;
        }
        for (r, v) in analysis_1d(&column, g).into_iter().enumerate() {
            high.data[r * plane.cols + c] = v;
        }
    }
    (low, high)
}

fn synthesize_cols(low: &Plane, high: &Plane, h: &[f64], g: &[f64], out_rows: usize) -> Plane {
    let mut out = Plane::new(out_rows, low.cols);
    let mut lcol = vec![0.0; low.rows];
    let mut hcol = vec![0.0; high.rows];
    for c in 0..low.cols {
        for r in 0..low.rows {
            lcol[r] = low.data[r * low.cols + c];
            hcol[r] = high.data[r * high.cols + c];
        }
        for (r, v) in synthesis_1d(&lcol, &hcol, h, g, out_rows).into_iter().enumerate() {
            out.data[r * out.cols + c] = v;
        }
    }
    out
}

fn synthesize_rows(low: &Plane, high: &Plane, h: &[f64], g: &[f64], out_cols: usize) -> Plane {
    let mut out = Plane::new(low.rows, out_cols);
    for r in 0..low.rows {
        let lrow = &low.data[r * low.cols..(r + 1) * low.cols];
        let hrow = &high.data[r * high.cols..(r + 1) * high.cols];
        out.data[r * out_cols..(r + 1) * out_cols]
            .copy_from_slice(&synthesis_1d(lrow, hrow, h, g, out_cols));
    }
    out
}

/// Forward 2D transform to `levels` decomposition levels.
pub fn dwt2(plane: &Plane, wavelet: MotherWavelet, levels: usize) -> Result<Decomposition> {
    if levels == 0 {
        return Err(Error::Parameter("at least one decomposition level required".into()));
    }
    let min_dim = 1usize << levels;
    if plane.rows < min_dim || plane.cols < min_dim {
        return Err(Error::Shape(format!(
            "plane {}x{} too small for {levels} levels (needs {min_dim})",
            plane.rows, plane.cols
        )));
    }
    let h = wavelet.scaling_filter();
    let g = wavelet.wavelet_filter();
    let mut approx = plane.clone();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (low, high) = analyze_rows(&approx, h, &g);
        let (ll, lh) = analyze_cols(&low, h, &g);
        let (hl, hh) = analyze_cols(&high, h, &g);
        details.push(DetailLevel { lh, hl, hh });
        approx = ll;
    }
    Ok(Decomposition { approx, details })
}

/// Inverse of [`dwt2`] back to `rows x cols`.
pub fn idwt2(decomp: &Decomposition, wavelet: MotherWavelet, rows: usize, cols: usize) -> Plane {
    let h = wavelet.scaling_filter();
    let g = wavelet.wavelet_filter();
    // Input dimensions of each level, finest first.
    let mut dims = Vec::with_capacity(decomp.details.len());
    let (mut r, mut c) = (rows, cols);
    for _ in 0..decomp.details.len() {
        dims.push((r, c));
        r = (r + h.len()) / 2;
        c = (c + h.len()) / 2;
    }
    let mut current = decomp.approx.clone();
    for (level, &(out_r, out_c)) in decomp.details.iter().zip(dims.iter()).rev() {
        let low = synthesize_cols(&current, &level.lh, h, &g, out_r);
        let high = synthesize_cols(&level.hl, &level.hh, h, &g, out_r);
        current = synthesize_rows(&low, &high, h, &g, out_c);
    }
    current
}

/// Keep the largest coefficients per detail level and soft-threshold the rest.
///
/// Level `j` (1 = finest) keeps `m0 / (j0 + 1 - j)^alpha` coefficients, where
/// `m0` is the coefficient count at level `j0`; levels coarser than `j0` and
/// the approximation pass through. The threshold for a level is the magnitude
/// of its first excluded coefficient, applied as soft shrinkage to the whole
/// level.
pub fn birge_massart_threshold(decomp: &mut Decomposition, j0: usize, alpha: f64) -> Result<()> {
    if alpha <= 1.0 {
        return Err(Error::Parameter(format!("alpha must exceed 1, got {alpha}")));
    }
    let levels = decomp.details.len();
    if j0 < 1 || j0 > levels {
        return Err(Error::Parameter(format!(
            "j0 must be in [1, {levels}], got {j0}"
        )));
    }
    // details[0] is the finest level (level index 1).
    let m0 = decomp.details[j0 - 1].coefficient_count() as f64;
    for j in 1..=j0 {
        let keep = (m0 / ((j0 + 1 - j) as f64).powf(alpha)).floor() as usize;
        let level = &mut decomp.details[j - 1];
        let total = level.coefficient_count();
        let threshold = if keep >= total {
            0.0
        } else {
            let mut magnitudes: Vec<f64> = level
                .subbands_mut()
                .iter()
                .flat_map(|p| p.data.iter().map(|v| v.abs()))
                .collect();
            // The (keep+1)-th largest magnitude separates kept from shrunk.
            let idx = total - 1 - keep;
            *magnitudes
                .select_nth_unstable_by(idx, |a, b| a.partial_cmp(b).unwrap())
                .1
        };
        if threshold > 0.0 {
            for band in level.subbands_mut() {
                for v in band.data.iter_mut() {
                    let mag = v.abs() - threshold;
                    *v = if mag > 0.0 { v.signum() * mag } else { 0.0 };
                }
            }
        }
    }
    Ok(())
}
