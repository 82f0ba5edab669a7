//! Block-encodings `⟨0|U|0⟩ = Ā/α` for five access models, assembled densely and verified
//! against the target in operator norm.
//!
//! Every model is expressed through the same data: nonnegative coefficients `χ_{kij}`,
//! `φ_{kji}` together with the squared weight each column state (resp. row state) places on
//! indices outside the `N × N` block. That weight is where out-of-range circulant shifts and
//! ziggurat padding live; it enters the normalizations `N_{χ_j}`, `N_{φ_i}` but never the block.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ceil_log2, next_pow2_at_least, quantize, Real};

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DenseMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            Complex::new(if i == j { T::one() } else { T::zero() }, T::zero())
        })
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| c * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Shape(format!(
                "{}×{} vs {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Aᴴ y`.
    pub fn adjoint_mul_vec(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for (row, yi) in self.data.chunks(self.cols).zip(y) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * yi;
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|c| c.norm()).fold(T::zero(), |a, b| a.max(b))
    }

    /// Row-major little-endian `(re, im)` pairs of `f64`.
    pub fn write_le_bytes<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in &self.data {
            w.write_all(&c.re.to_f64_lossy().to_le_bytes())?;
            w.write_all(&c.im.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }
}

/// Dense nonnegative matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RealMatrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> RealMatrix<T> {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.data[i * self.n..(i + 1) * self.n].iter().copied().sum()
    }

    pub fn col_sum(&self, j: usize) -> T {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    /// `‖G‖₁ = max_i Σ_j G_ij`.
    pub fn norm1(&self) -> T {
        (0..self.n).map(|i| self.row_sum(i)).fold(T::zero(), |a, b| a.max(b))
    }

    /// `‖G‖_∞ = max_j Σ_i G_ij`.
    pub fn norm_inf(&self) -> T {
        (0..self.n).map(|j| self.col_sum(j)).fold(T::zero(), |a, b| a.max(b))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|v| *v * *v).sum::<T>().sqrt()
    }

    pub fn col_norm(&self, j: usize) -> T {
        (0..self.n).map(|i| self.get(i, j).powi(2)).sum::<T>().sqrt()
    }
}

/// Index grid `[0, side-1]^dim` with the first coordinate slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeGrid {
    pub dim: u32,
    pub side: usize,
}

impl CubeGrid {
    pub fn new(dim: u32, side: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) || side < 1 {
            return Err(Error::Precondition(format!("grid dim {dim}, side {side}")));
        }
        Ok(Self { dim, side })
    }

    pub fn size(&self) -> usize {
        self.side.pow(self.dim)
    }

    pub fn coords(&self, i: usize) -> [i64; 3] {
        let mut c = [0i64; 3];
        let mut r = i;
        for d in (0..self.dim as usize).rev() {
            c[d] = (r % self.side) as i64;
            r /= self.side;
        }
        c
    }

    /// `coords(j) − coords(i)`.
    pub fn delta(&self, i: usize, j: usize) -> [i64; 3] {
        let (a, b) = (self.coords(i), self.coords(j));
        [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
    }

    /// Number of shift vectors in the box `[-(side-1), side-1]^dim`.
    pub fn delta_count(&self) -> usize {
        (2 * self.side - 1).pow(self.dim)
    }

    pub fn delta_index(&self, d: [i64; 3]) -> usize {
        let w = 2 * self.side as i64 - 1;
        let off = self.side as i64 - 1;
        let mut idx = 0i64;
        for c in d.iter().take(self.dim as usize) {
            idx = idx * w + (c + off);
        }
        idx as usize
    }

    pub fn delta_at(&self, idx: usize) -> [i64; 3] {
        let w = 2 * self.side - 1;
        let off = self.side as i64 - 1;
        let mut d = [0i64; 3];
        let mut r = idx;
        for k in (0..self.dim as usize).rev() {
            d[k] = (r % w) as i64 - off;
            r /= w;
        }
        d
    }
}

/// Values `f(δ)` on the full shift box of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ToeplitzSymbol<T> {
    pub grid: CubeGrid,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> ToeplitzSymbol<T> {
    pub fn from_fn(grid: CubeGrid, f: impl Fn([i64; 3]) -> Complex<T>) -> Self {
        let values = (0..grid.delta_count()).map(|k| f(grid.delta_at(k))).collect();
        Self { grid, values }
    }

    pub fn at(&self, d: [i64; 3]) -> Complex<T> {
        self.values[self.grid.delta_index(d)]
    }
}

/// Matrix to be block-encoded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "camelCase", bound = "T: Real")]
pub enum MatrixSpec<T> {
    Dense { matrix: DenseMatrix<T> },
    /// `A_ij = f(j − i)` on a grid.
    Toeplitz { symbol: ToeplitzSymbol<T> },
}

fn real<T: Real>(v: T) -> Complex<T> {
    Complex::new(v, T::zero())
}

/// Max-norm dyadic shell index: `0` at the origin, `k` for `2^{k-1} ≤ max|δ_i| < 2^k`.
pub fn shell_index(d: [i64; 3]) -> u32 {
    let m = d.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    64 - m.leading_zeros()
}

/// Shell reference `1` at the origin and `2^{-2(k-1)}` on shell `k`, dominating `1/‖δ‖²`.
pub fn coulomb_reference_value<T: Real>(d: [i64; 3]) -> T {
    match shell_index(d) {
        0 => T::one(),
        k => T::lit(2.0).powi(-2 * (k as i32 - 1)),
    }
}

impl<T: Real> MatrixSpec<T> {
    pub fn dense(matrix: DenseMatrix<T>) -> Result<Self> {
        if matrix.rows != matrix.cols {
            return Err(Error::Shape("block-encoded matrices must be square".into()));
        }
        Ok(MatrixSpec::Dense { matrix })
    }

    /// One-dimensional Toeplitz matrix `A_ij = f(j − i)` of size `n`.
    pub fn toeplitz1d(n: usize, f: impl Fn(i64) -> Complex<T>) -> Result<Self> {
        let grid = CubeGrid::new(1, n)?;
        Ok(MatrixSpec::Toeplitz {
            symbol: ToeplitzSymbol::from_fn(grid, |d| f(d[0])),
        })
    }

    /// `1` on the diagonal and `1/‖i − j‖²` elsewhere on the grid `[-2^{ν-1}, 2^{ν-1}]³`.
    pub fn coulomb3d(nu: u32) -> Result<Self> {
        if nu < 1 {
            return Err(Error::Precondition("ν must be ≥ 1".into()));
        }
        let grid = CubeGrid::new(3, (1usize << nu) + 1)?;
        Ok(MatrixSpec::Toeplitz {
            symbol: ToeplitzSymbol::from_fn(grid, |d| {
                let s = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64;
                real(if s == 0.0 { T::one() } else { T::lit(1.0 / s) })
            }),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixSpec::Dense { matrix } => matrix.rows,
            MatrixSpec::Toeplitz { symbol } => symbol.grid.size(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        match self {
            MatrixSpec::Dense { matrix } => matrix.get(i, j),
            MatrixSpec::Toeplitz { symbol } => symbol.at(symbol.grid.delta(i, j)),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn abs(&self) -> RealMatrix<T> {
        RealMatrix::from_fn(self.dim(), |i, j| self.entry(i, j).norm())
    }
}

/// Submatrix partition `{S_k}` with levels `g_k`. `labels[i·N + j]` is the submatrix of
/// entry `(i, j)`, `None` where the entry is outside every submatrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ZigguratPartition<T> {
    pub n: usize,
    pub labels: Vec<Option<usize>>,
    pub levels: Vec<T>,
}

impl<T: Real> ZigguratPartition<T> {
    pub fn from_fn(n: usize, levels: Vec<T>, f: impl Fn(usize, usize) -> Option<usize>) -> Result<Self> {
        let mut labels = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let l = f(i, j);
                if let Some(k) = l {
                    if k >= levels.len() {
                        return Err(Error::Model(format!("label {k} without a level")));
                    }
                }
                labels.push(l);
            }
        }
        Ok(Self { n, labels, levels })
    }

    /// One submatrix holding the support of `a`, bounded by `max|A_ij|`.
    pub fn single(a: &MatrixSpec<T>) -> Result<Self> {
        let abs = a.abs();
        let g = abs.data.iter().copied().fold(T::zero(), |x, y| x.max(y));
        Self::from_fn(a.dim(), vec![g], |i, j| (abs.get(i, j) > T::zero()).then_some(0))
    }

    /// Max-norm dyadic shells of `j − i`, levels from [`coulomb_reference_value`].
    pub fn shells(grid: &CubeGrid) -> Result<Self> {
        let kmax = shell_index([grid.side as i64 - 1; 3]) as usize;
        let levels = (0..=kmax as i32)
            .map(|k| coulomb_reference_value::<T>([if k == 0 { 0 } else { 1i64 << (k - 1) }, 0, 0]))
            .collect();
        Self::from_fn(grid.size(), levels, |i, j| Some(shell_index(grid.delta(i, j)) as usize))
    }

    /// Hierarchical partition: label `0` holds near pairs (`max|δ_i| ≤ 1`) with level 1; label
    /// `ℓ ≥ 1` holds pairs whose blocks of side `s = 2^{h-ℓ}` are non-adjacent while their
    /// parent blocks are adjacent, with level `1/s²`. Here `2^h ≥ side − 1`.
    pub fn hierarchical(grid: &CubeGrid) -> Result<Self> {
        let h = ceil_log2((grid.side.max(3) - 1) as f64) as u32;
        let mut levels = vec![T::one()];
        for l in 1..=h {
            let s = T::lit((1u64 << (h - l)) as f64);
            levels.push(T::one() / (s * s));
        }
        let adjacent = |a: [i64; 3], b: [i64; 3], shift: u32| {
            (0..3).all(|d| ((a[d] >> shift) - (b[d] >> shift)).abs() <= 1)
        };
        Self::from_fn(grid.size(), levels, |i, j| {
            let (a, b) = (grid.coords(i), grid.coords(j));
            if adjacent(a, b, 0) {
                return Some(0);
            }
            (1..=h).find(|&l| !adjacent(a, b, h - l) && (l == 1 || adjacent(a, b, h - l + 1)))
                .map(|l| l as usize)
        })
    }

    pub fn label(&self, i: usize, j: usize) -> Option<usize> {
        self.labels[i * self.n + j]
    }

    /// Reference matrix `G_ij = g_{k(i,j)}`.
    pub fn reference(&self) -> RealMatrix<T> {
        RealMatrix::from_fn(self.n, |i, j| self.label(i, j).map_or(T::zero(), |k| self.levels[k]))
    }

    /// Padded sparsities `(d_k, d′_k)`: the largest column and row counts of each submatrix.
    pub fn sparsities(&self) -> Vec<(usize, usize)> {
        let k = self.levels.len();
        let mut col = vec![vec![0usize; self.n]; k];
        let mut row = vec![vec![0usize; self.n]; k];
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(l) = self.label(i, j) {
                    col[l][j] += 1;
                    row[l][i] += 1;
                }
            }
        }
        (0..k)
            .map(|l| {
                (
                    col[l].iter().copied().max().unwrap_or(0),
                    row[l].iter().copied().max().unwrap_or(0),
                )
            })
            .collect()
    }
}

/// Access model for the block-encoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", bound = "T: Real")]
pub enum BlockModel<T> {
    /// PREP over `√|f(δ)|`, no sampling; Toeplitz only.
    LcuImplicit,
    /// PREP over `√g(δ)` with explicit sampling of `|f|/g`; Toeplitz only.
    LcuExplicit { reference: ToeplitzSymbol<T> },
    Ziggurat { partition: ZigguratPartition<T> },
    RowColumn { g: RealMatrix<T> },
    Column { g: RealMatrix<T> },
}

impl<T: Real> BlockModel<T> {
    pub fn name(&self) -> &'static str {
        match self {
            BlockModel::LcuImplicit => "lcuImplicit",
            BlockModel::LcuExplicit { .. } => "lcuExplicit",
            BlockModel::Ziggurat { .. } => "ziggurat",
            BlockModel::RowColumn { .. } => "rowColumn",
            BlockModel::Column { .. } => "column",
        }
    }

    /// Reference matrix `G` this model samples against (for implicit LCU, `|A|`).
    pub fn reference(&self, a: &MatrixSpec<T>) -> Result<RealMatrix<T>> {
        let n = a.dim();
        let g = match self {
            BlockModel::LcuImplicit => {
                toeplitz_symbol(a, self)?;
                a.abs()
            }
            BlockModel::LcuExplicit { reference } => {
                let sym = toeplitz_symbol(a, self)?;
                if reference.grid != sym.grid {
                    return Err(Error::Model("reference symbol is on a different grid".into()));
                }
                RealMatrix::from_fn(n, |i, j| reference.at(sym.grid.delta(i, j)).re)
            }
            BlockModel::Ziggurat { partition } => partition.reference(),
            BlockModel::RowColumn { g } | BlockModel::Column { g } => g.clone(),
        };
        if g.n != n {
            return Err(Error::Shape(format!("reference is {}×{0}, matrix {n}×{n}", g.n)));
        }
        Ok(g)
    }
}

fn toeplitz_symbol<'a, T: Real>(a: &'a MatrixSpec<T>, model: &BlockModel<T>) -> Result<&'a ToeplitzSymbol<T>> {
    match a {
        MatrixSpec::Toeplitz { symbol } => Ok(symbol),
        MatrixSpec::Dense { .. } => Err(Error::Model(format!(
            "{} needs a Toeplitz matrix",
            model.name()
        ))),
    }
}

/// Closed-form rescaling factor of `model` for `a`.
pub fn rescale_factor<T: Real>(model: &BlockModel<T>, a: &MatrixSpec<T>) -> Result<T> {
    Ok(match model {
        BlockModel::LcuImplicit => toeplitz_symbol(a, model)?.values.iter().map(|v| v.norm()).sum(),
        BlockModel::LcuExplicit { reference } => {
            toeplitz_symbol(a, model)?;
            reference.values.iter().map(|v| v.re).sum()
        }
        BlockModel::Ziggurat { partition } => partition
            .sparsities()
            .iter()
            .zip(&partition.levels)
            .map(|((d, dp), g)| T::lit((*d as f64 * *dp as f64).sqrt()) * *g)
            .sum(),
        BlockModel::RowColumn { g } => (g.norm1() * g.norm_inf()).sqrt(),
        BlockModel::Column { g } => g.frobenius(),
    })
}

/// Coefficients `χ_{kij}` (stored `[k][i][j]`), `φ_{kji}` (stored `[k][j][i]`) and the squared
/// weight of each state outside the block.
#[derive(Clone, Debug)]
pub struct Decomposition<T> {
    pub n: usize,
    pub labels: usize,
    pub chi: Vec<T>,
    pub phi: Vec<T>,
    pub chi_pad: Vec<T>,
    pub phi_pad: Vec<T>,
}

impl<T: Real> Decomposition<T> {
    fn new(n: usize, labels: usize) -> Self {
        Self {
            n,
            labels,
            chi: vec![T::zero(); labels * n * n],
            phi: vec![T::zero(); labels * n * n],
            chi_pad: vec![T::zero(); n],
            phi_pad: vec![T::zero(); n],
        }
    }

    fn at(&self, k: usize, a: usize, b: usize) -> usize {
        (k * self.n + a) * self.n + b
    }

    pub fn chi(&self, k: usize, i: usize, j: usize) -> T {
        self.chi[self.at(k, i, j)]
    }

    pub fn phi(&self, k: usize, j: usize, i: usize) -> T {
        self.phi[self.at(k, j, i)]
    }

    /// `N_{χ_j}` for every column.
    pub fn chi_norms(&self) -> Vec<T> {
        (0..self.n)
            .map(|j| {
                let mut s = self.chi_pad[j];
                for k in 0..self.labels {
                    for i in 0..self.n {
                        s += self.chi(k, i, j).powi(2);
                    }
                }
                s.sqrt()
            })
            .collect()
    }

    /// `N_{φ_i}` for every row.
    pub fn phi_norms(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let mut s = self.phi_pad[i];
                for k in 0..self.labels {
                    for j in 0..self.n {
                        s += self.phi(k, j, i).powi(2);
                    }
                }
                s.sqrt()
            })
            .collect()
    }

    /// `Σ_k χ_{kij}φ_{kji}/(N_{χ_j}N_{φ_i})`, which the constructions make equal to `G_ij/α`.
    pub fn hadamard(&self) -> RealMatrix<T> {
        let (nc, np) = (self.chi_norms(), self.phi_norms());
        RealMatrix::from_fn(self.n, |i, j| {
            let s: T = (0..self.labels).map(|k| self.chi(k, i, j) * self.phi(k, j, i)).sum();
            if s == T::zero() {
                T::zero()
            } else {
                s / (nc[j] * np[i])
            }
        })
    }
}

/// `χ`/`φ` coefficients of `model`. For implicit LCU the PREP amplitudes are floored to `bits`.
pub fn decompose<T: Real>(model: &BlockModel<T>, a: &MatrixSpec<T>, bits: Option<u32>) -> Result<Decomposition<T>> {
    let n = a.dim();
    match model {
        BlockModel::LcuImplicit | BlockModel::LcuExplicit { .. } => {
            let sym = toeplitz_symbol(a, model)?;
            // Weight per shift: |f(δ)| amplitudes (possibly quantized) or g(δ).
            let weights: Vec<T> = match model {
                BlockModel::LcuImplicit => {
                    let alpha: T = sym.values.iter().map(|v| v.norm()).sum();
                    sym.values
                        .iter()
                        .map(|v| {
                            let amp = (v.norm() / alpha).sqrt();
                            let q = match bits {
                                Some(b) => quantize(amp, b).map(|q| q.value),
                                None => Ok(amp),
                            };
                            q.map(|q| q * q)
                        })
                        .collect::<Result<_>>()?
                }
                BlockModel::LcuExplicit { reference } => reference.values.iter().map(|v| v.re).collect(),
                _ => unreachable!(),
            };
            let total: T = weights.iter().copied().sum();
            let mut dec = Decomposition::new(n, 1);
            for j in 0..n {
                let mut inside = T::zero();
                for i in 0..n {
                    let w = weights[sym.grid.delta_index(sym.grid.delta(i, j))];
                    let idx = dec.at(0, i, j);
                    dec.chi[idx] = w.sqrt();
                    inside += w;
                }
                dec.chi_pad[j] = (total - inside).max(T::zero());
            }
            // φ_{1ji} = √w(j − i); row states carry the same out-of-range weight.
            for i in 0..n {
                let mut inside = T::zero();
                for j in 0..n {
                    let w = weights[sym.grid.delta_index(sym.grid.delta(i, j))];
                    let idx = dec.at(0, j, i);
                    dec.phi[idx] = w.sqrt();
                    inside += w;
                }
                dec.phi_pad[i] = (total - inside).max(T::zero());
            }
            Ok(dec)
        }
        BlockModel::Ziggurat { partition } => {
            let sp = partition.sparsities();
            let k = partition.levels.len();
            let mut dec = Decomposition::new(n, k);
            let mut col_count = vec![vec![0usize; n]; k];
            let mut row_count = vec![vec![0usize; n]; k];
            for i in 0..n {
                for j in 0..n {
                    if let Some(l) = partition.label(i, j) {
                        let (d, dp) = (sp[l].0 as f64, sp[l].1 as f64);
                        let g = partition.levels[l];
                        let ci = dec.at(l, i, j);
                        dec.chi[ci] = T::lit((dp / d).powf(0.25)) * g.sqrt();
                        let pi = dec.at(l, j, i);
                        dec.phi[pi] = T::lit((d / dp).powf(0.25)) * g.sqrt();
                        col_count[l][j] += 1;
                        row_count[l][i] += 1;
                    }
                }
            }
            for l in 0..k {
                let (d, dp) = (sp[l].0 as f64, sp[l].1 as f64);
                if d == 0.0 {
                    continue;
                }
                let g = partition.levels[l];
                let wc = T::lit((dp / d).sqrt()) * g;
                let wr = T::lit((d / dp).sqrt()) * g;
                for idx in 0..n {
                    dec.chi_pad[idx] += wc * T::lit((sp[l].0 - col_count[l][idx]) as f64);
                    dec.phi_pad[idx] += wr * T::lit((sp[l].1 - row_count[l][idx]) as f64);
                }
            }
            Ok(dec)
        }
        BlockModel::RowColumn { g } => {
            // Labels k = 2a + b over the two flag qubits (a on the χ side, b on the φ side).
            let (g1, ginf) = (g.norm1(), g.norm_inf());
            let mut dec = Decomposition::new(n, 4);
            for j in 0..n {
                let c = g.col_sum(j);
                if c == T::zero() {
                    dec.chi_pad[j] = T::one();
                    continue;
                }
                let flip = (T::one() - c / ginf).max(T::zero()).sqrt();
                for i in 0..n {
                    let base = (g.get(i, j) / c).sqrt();
                    let i0 = dec.at(0, i, j);
                    dec.chi[i0] = (c / ginf).sqrt() * base;
                    let i2 = dec.at(2, i, j);
                    dec.chi[i2] = flip * base;
                }
            }
            for i in 0..n {
                let r = g.row_sum(i);
                if r == T::zero() {
                    dec.phi_pad[i] = T::one();
                    continue;
                }
                let flip = (T::one() - r / g1).max(T::zero()).sqrt();
                for j in 0..n {
                    let base = (g.get(i, j) / r).sqrt();
                    let i0 = dec.at(0, j, i);
                    dec.phi[i0] = (r / g1).sqrt() * base;
                    let i1 = dec.at(1, j, i);
                    dec.phi[i1] = flip * base;
                }
            }
            Ok(dec)
        }
        BlockModel::Column { g } => {
            let fro = g.frobenius();
            let mut dec = Decomposition::new(n, 1);
            for j in 0..n {
                let cn = g.col_norm(j);
                if cn == T::zero() {
                    dec.chi_pad[j] = T::one();
                } else {
                    for i in 0..n {
                        let idx = dec.at(0, i, j);
                        dec.chi[idx] = g.get(i, j) / cn;
                    }
                }
                for i in 0..n {
                    let idx = dec.at(0, j, i);
                    dec.phi[idx] = cn / fro;
                }
            }
            Ok(dec)
        }
    }
}

/// Dense block `⟨0|U|0⟩ = Ā/α` and its distance to `A/α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct BlockEncodingResult<T> {
    pub alpha: T,
    pub effective: DenseMatrix<T>,
    /// `‖(Ā − A)/α‖` in operator norm.
    pub op_error: T,
    /// `max_ij |Σ_k χφ/(N_χ N_φ) − G_ij/α|`.
    pub identity_error: T,
    pub model: String,
    /// Sampling dimension (explicit-sampling models).
    pub m: Option<u64>,
    /// Bits of the ratio (explicit) or of the PREP amplitudes (implicit).
    pub bits: Option<u32>,
    pub epsilon: T,
}

/// JSON sidecar of an exported effective matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatrixSidecar {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub model: String,
}

impl<T: Real> BlockEncodingResult<T> {
    pub fn sidecar(&self) -> MatrixSidecar {
        MatrixSidecar {
            n: self.effective.rows,
            alpha: self.alpha.to_f64_lossy(),
            model: self.model.clone(),
        }
    }
}

/// Sampling parameters `(M, ε̃, b)` for explicit models: `M` is the smallest power of two
/// with `M ≥ max{2S/ε, max 2G/|A|}`, `ε̃ = min{ε/(2S), min |A|/(2G)}`, `S = √(‖G‖₁‖G‖_∞)`.
pub fn explicit_sampling<T: Real>(g: &RealMatrix<T>, abs_a: &RealMatrix<T>, epsilon: T, s: T) -> Result<(u64, T, u32)> {
    let two = T::lit(2.0);
    let mut min_ratio = T::infinity();
    for (gv, av) in g.data.iter().zip(&abs_a.data) {
        if *av > T::zero() {
            min_ratio = min_ratio.min(*av / *gv);
        }
    }
    if !min_ratio.is_finite() {
        return Err(Error::DegenerateInput("matrix is zero".into()));
    }
    let m = next_pow2_at_least((two * s / epsilon).max(two / min_ratio).to_f64_lossy())?;
    let et = (epsilon / (two * s)).min(min_ratio / two);
    let bits = ceil_log2(1.0 / et.to_f64_lossy()).max(1) as u32;
    Ok((m, et, bits))
}

/// Builds the effective block of `model` for `a` at accuracy `ε`.
pub fn build<T: Real>(model: &BlockModel<T>, a: &MatrixSpec<T>, epsilon: T) -> Result<BlockEncodingResult<T>> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::Domain(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    let n = a.dim();
    let g = model.reference(a)?;
    let abs_a = a.abs();
    for i in 0..n {
        for j in 0..n {
            if abs_a.get(i, j) > g.get(i, j) {
                return Err(Error::Precondition(format!(
                    "G_{i}{j} = {} < |A_{i}{j}| = {}",
                    g.get(i, j),
                    abs_a.get(i, j)
                )));
            }
        }
    }
    if let BlockModel::Ziggurat { partition } = model {
        if partition.n != n {
            return Err(Error::Shape("partition size differs from the matrix".into()));
        }
    }
    let alpha = rescale_factor(model, a)?;
    let (m, bits) = match model {
        BlockModel::LcuImplicit => {
            let nd = toeplitz_symbol(a, model)?.values.len() as f64;
            let b = ceil_log2(4.0 * nd.sqrt() * alpha.to_f64_lossy() / epsilon.to_f64_lossy()).max(1);
            (None, Some(b as u32))
        }
        _ => {
            let s = match model {
                BlockModel::LcuExplicit { .. } => alpha,
                _ => (g.norm1() * g.norm_inf()).sqrt(),
            };
            let (m, _, b) = explicit_sampling(&g, &abs_a, epsilon, s)?;
            (Some(m), Some(b))
        }
    };
    let dec = decompose(model, a, if m.is_none() { bits } else { None })?;
    let had = dec.hadamard();
    let identity_error = if m.is_none() {
        let exact = decompose(model, a, None)?.hadamard();
        max_abs_diff(&exact, &g, alpha)
    } else {
        max_abs_diff(&had, &g, alpha)
    };
    let rows: Vec<Vec<Complex<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let aij = a.entry(i, j);
                    let gij = g.get(i, j);
                    let factor = match m {
                        None => T::one(),
                        Some(mm) if gij > T::zero() && aij.norm() > T::zero() => {
                            let r = quantize((aij.norm() / gij).min(T::one()), bits.unwrap_or(1))
                                .map(|q| q.value)
                                .unwrap_or(T::zero());
                            let big = T::lit(mm as f64);
                            (big * r).floor() / big
                        }
                        Some(_) => T::zero(),
                    };
                    let phase = if aij.norm() > T::zero() { aij / aij.norm() } else { real(T::zero()) };
                    phase * had.get(i, j) * factor
                })
                .collect()
        })
        .collect();
    let effective = DenseMatrix {
        rows: n,
        cols: n,
        data: rows.into_iter().flatten().collect(),
    };
    let mut res = BlockEncodingResult {
        alpha,
        effective,
        op_error: T::zero(),
        identity_error,
        model: model.name().to_string(),
        m,
        bits,
        epsilon,
    };
    res.op_error = verify(&res, a)?;
    Ok(res)
}

fn max_abs_diff<T: Real>(had: &RealMatrix<T>, g: &RealMatrix<T>, alpha: T) -> T {
    had.data
        .iter()
        .zip(&g.data)
        .map(|(h, gv)| (*h - *gv / alpha).abs())
        .fold(T::zero(), |a, b| a.max(b))
}

/// Convergence threshold of the power iteration (relative change of `σ²`).
pub const POWER_TOL: f64 = 1e-10;
/// Iteration cap of the power iteration.
pub const POWER_MAX_ITER: usize = 10_000;

/// Largest singular value by power iteration on `DᴴD`.
pub fn spectral_norm<T: Real>(d: &DenseMatrix<T>) -> Result<T> {
    if d.max_abs() == T::zero() {
        return Ok(T::zero());
    }
    let n = d.cols;
    if n <= DENSE_SVD_MAX_DIM {
        return svd_spectral_norm(d);
    }
    let mut x: Vec<Complex<T>> = (0..n)
        .map(|i| real(T::one() + T::lit(1e-3 * ((i * 7919) % 101) as f64 / 101.0)))
        .collect();
    let norm = |v: &[Complex<T>]| v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|c| *c = *c / nx);
    let mut lambda = T::zero();
    for _ in 0..POWER_MAX_ITER {
        let y = d.adjoint_mul_vec(&d.mul_vec(&x));
        let next = norm(&y);
        if next == T::zero() {
            return Ok(T::zero());
        }
        x = y.into_iter().map(|c| c / next).collect();
        if (next - lambda).abs() <= T::lit(POWER_TOL) * next {
            return Ok(next.sqrt());
        }
        lambda = next;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge in {POWER_MAX_ITER} iterations"
    )))
}

/// Largest dimension handled by the dense SVD; power iteration above it.
pub const DENSE_SVD_MAX_DIM: usize = 256;

fn svd_spectral_norm<T: Real>(d: &DenseMatrix<T>) -> Result<T> {
    let m = nalgebra::DMatrix::from_fn(d.rows, d.cols, |i, j| {
        let z = d.get(i, j);
        nalgebra::Complex::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
    });
    let s = m
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    Ok(T::lit(s.singular_values.max()))
}

/// `‖Ā/α − A/α‖` for a built encoding.
pub fn verify<T: Real>(res: &BlockEncodingResult<T>, a: &MatrixSpec<T>) -> Result<T> {
    if res.effective.rows != a.dim() {
        return Err(Error::Shape(format!(
            "effective block is {}×{}, matrix is {}",
            res.effective.rows,
            res.effective.cols,
            a.dim()
        )));
    }
    let target = a.to_dense().scale(T::one() / res.alpha);
    spectral_norm(&res.effective.sub(&target)?)
}

/// Closed-form Coulomb rescaling factors at `N^{1/3} = 2^ν`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoulombAlphas {
    pub nu: u32,
    pub alpha_f: f64,
    pub alpha_zig: f64,
    pub alpha_rc: f64,
    pub alpha_c: f64,
    /// `‖G‖₁` of the shell reference.
    pub g_norm1: f64,
}

/// Shell size `|D_k| = 7·2^{3k}` used by the closed forms.
pub fn coulomb_shell_size(k: u32) -> f64 {
    7.0 * 2f64.powi(3 * k as i32)
}

pub fn coulomb_alphas(nu: u32) -> Result<CoulombAlphas> {
    if nu < 2 {
        return Err(Error::Precondition("ν must be ≥ 2".into()));
    }
    let shell_sum = |kmax: u32| -> f64 {
        1.0 + (1..=kmax)
            .map(|k| 2f64.powi(-2 * (k as i32 - 1)) * coulomb_shell_size(k))
            .sum::<f64>()
    };
    let alpha_f = shell_sum(nu + 1);
    let g_norm1 = shell_sum(nu);
    let alpha_zig = 27.0 + 189.0 * (2..=nu).map(|k| 2f64.powi((nu - k) as i32)).sum::<f64>();
    let n = 2f64.powi(3 * nu as i32);
    Ok(CoulombAlphas {
        nu,
        alpha_f,
        alpha_zig,
        alpha_rc: g_norm1,
        alpha_c: (n * g_norm1).sqrt(),
        g_norm1,
    })
}

/// Shell reference symbol over the shift box of `grid`.
pub fn coulomb_reference_symbol<T: Real>(grid: CubeGrid) -> ToeplitzSymbol<T> {
    ToeplitzSymbol::from_fn(grid, |d| real(coulomb_reference_value(d)))
}

/// Shell reference as a dense matrix `G_ij = g(j − i)`.
pub fn coulomb_reference_matrix<T: Real>(grid: &CubeGrid) -> RealMatrix<T> {
    RealMatrix::from_fn(grid.size(), |i, j| coulomb_reference_value(grid.delta(i, j)))
}

/// The five models for a Coulomb instance.
pub fn coulomb_models<T: Real>(a: &MatrixSpec<T>) -> Result<Vec<BlockModel<T>>> {
    let grid = match a {
        MatrixSpec::Toeplitz { symbol } => symbol.grid,
        _ => return Err(Error::Model("Coulomb models need the Toeplitz form".into())),
    };
    let g = coulomb_reference_matrix(&grid);
    Ok(vec![
        BlockModel::LcuImplicit,
        BlockModel::LcuExplicit {
            reference: coulomb_reference_symbol(grid),
        },
        BlockModel::Ziggurat {
            partition: ZigguratPartition::hierarchical(&grid)?,
        },
        BlockModel::RowColumn { g: g.clone() },
        BlockModel::Column { g },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn column_model_of_identity() {
        let a = MatrixSpec::dense(DenseMatrix::<f64>::identity(9)).unwrap();
        let g = a.abs();
        let m = BlockModel::Column { g };
        assert_relative_eq!(rescale_factor(&m, &a).unwrap(), 3.0, epsilon = 1e-15);
        let r = build(&m, &a, 1e-6).unwrap();
        assert!(r.op_error < 1e-15);
    }

    #[test]
    fn dyadic_two_by_two_is_exact() {
        let a = MatrixSpec::dense(DenseMatrix::from_fn(2, 2, |i, j| c([[0.5, 0.25], [0.75, 1.0]][i][j]))).unwrap();
        let m = BlockModel::Column { g: a.abs() };
        let r = build(&m, &a, 1e-3).unwrap();
        assert!(r.op_error < 1e-15, "{}", r.op_error);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(r.effective.get(i, j).re * r.alpha, a.entry(i, j).re, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn toeplitz_explicit_with_ziggurat_reference() {
        let a = MatrixSpec::toeplitz1d(8, |d| c(1.0 / (1.0 + d.abs() as f64))).unwrap();
        let grid = CubeGrid::new(1, 8).unwrap();
        let g = ToeplitzSymbol::from_fn(grid, |d| c(2f64.powi(-(shell_index([d[0].abs() + 1, 0, 0]) as i32 - 1))));
        let m = BlockModel::LcuExplicit { reference: g };
        let eps = 1e-4;
        let r = build(&m, &a, eps).unwrap();
        assert!(r.op_error <= eps / r.alpha, "{} vs {}", r.op_error, eps / r.alpha);
        assert!(r.identity_error < 1e-12);
    }

    #[test]
    fn verify_rank_one_perturbation() {
        let n = 6;
        let a = MatrixSpec::dense(DenseMatrix::<f64>::identity(n)).unwrap();
        let alpha = 2.0;
        let s = 3e-3;
        // u = e_0 + e_1 over √2 and v = all-ones over √n, so ‖s·uvᴴ‖ = s.
        let eff = DenseMatrix::from_fn(n, n, |i, j| {
            let u = if i < 2 { 1.0 / 2f64.sqrt() } else { 0.0 };
            let v = 1.0 / (n as f64).sqrt();
            c(if i == j { 1.0 / alpha } else { 0.0 } + s / alpha * u * v)
        });
        let res = BlockEncodingResult {
            alpha,
            effective: eff,
            op_error: 0.0,
            identity_error: 0.0,
            model: "test".into(),
            m: None,
            bits: None,
            epsilon: 0.1,
        };
        assert_relative_eq!(verify(&res, &a).unwrap(), s / alpha, epsilon = 1e-8);
    }

    #[test]
    fn zero_difference_has_zero_norm() {
        assert_eq!(spectral_norm(&DenseMatrix::<f64>::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn lcu_rejects_dense_matrices() {
        let a = MatrixSpec::dense(DenseMatrix::<f64>::identity(4)).unwrap();
        assert!(matches!(rescale_factor(&BlockModel::LcuImplicit, &a), Err(Error::Model(_))));
    }

    #[test]
    fn dominance_violation_is_rejected() {
        let a = MatrixSpec::dense(DenseMatrix::<f64>::identity(3)).unwrap();
        let g = RealMatrix::from_fn(3, |_, _| 0.5);
        assert!(matches!(build(&BlockModel::RowColumn { g }, &a, 1e-3), Err(Error::Precondition(_))));
    }

    #[test]
    fn coulomb_closed_forms_at_nu_5() {
        let al = coulomb_alphas(5).unwrap();
        assert_eq!(al.alpha_f, 1.0 + 28.0 * 126.0);
        assert_eq!(al.alpha_zig, 27.0 + 189.0 * 15.0);
        assert_eq!(al.g_norm1, 1.0 + 28.0 * 62.0);
        assert!(al.alpha_rc < al.alpha_zig && al.alpha_zig < al.alpha_f);
    }

    #[test]
    fn coulomb_grid_size() {
        let a = MatrixSpec::<f64>::coulomb3d(2).unwrap();
        assert_eq!(a.dim(), 125);
        assert_eq!(a.entry(0, 0).re, 1.0);
        assert_relative_eq!(a.entry(0, 1).re, 1.0);
        assert_relative_eq!(a.entry(0, 2).re, 0.25);
    }

    #[test]
    fn hierarchical_partition_covers_everything() {
        let grid = CubeGrid::new(3, 5).unwrap();
        let p = ZigguratPartition::<f64>::hierarchical(&grid).unwrap();
        assert!(p.labels.iter().all(|l| l.is_some()));
        assert_eq!(p.sparsities()[0].0, 27);
        let abs = MatrixSpec::<f64>::coulomb3d(2).unwrap().abs();
        let g = p.reference();
        for (a, b) in abs.data.iter().zip(&g.data) {
            assert!(a <= b);
        }
    }

    #[test]
    fn grid_delta_round_trip() {
        let grid = CubeGrid::new(3, 4).unwrap();
        for k in 0..grid.delta_count() {
            assert_eq!(grid.delta_index(grid.delta_at(k)), k);
        }
        assert_eq!(grid.coords(grid.size() - 1), [3, 3, 3]);
    }

    #[test]
    fn export_layout() {
        let m = DenseMatrix::from_fn(1, 2, |_, j| Complex::new(j as f64, 0.5));
        let mut buf = Vec::new();
        m.write_le_bytes(&mut buf).unwrap();
        assert_eq!(buf.len(), 32);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), 0.5);
    }
}
