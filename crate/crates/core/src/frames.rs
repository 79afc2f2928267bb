//! Frames, Gram matrices, coherence and ETF constructions.
//!
//! A frame is stored as an `m x n` matrix whose columns are the frame
//! vectors. Coherence is only defined here for unit-norm columns; call
//! [`normalize_columns`] first when in doubt.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf::Field;
use crate::linalg;
use crate::rng::{self, Purpose};

/// Column norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-14;
/// Allowed deviation of a Gram diagonal entry from 1 for a "unit-norm" frame.
pub const UNIT_DIAGONAL_TOL: f64 = 1e-8;

/// A real `m x n` frame. Columns are the frame vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    data: DMatrix<f64>,
}

impl Frame {
    /// Wraps a matrix. Any shape with at least one row is accepted so that
    /// submatrices with fewer columns than rows remain representable; the
    /// constructors in this module always return `n >= m` frames of rank `m`.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::BadDims("a frame needs at least one row".into()));
        }
        Ok(Frame { data })
    }

    pub fn from_row_slice(m: usize, n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != m * n {
            return Err(Error::DimMismatch(format!("{} values for a {m}x{n} frame", values.len())));
        }
        Frame::new(DMatrix::from_row_slice(m, n, values))
    }

    pub fn identity(m: usize) -> Self {
        Frame { data: DMatrix::identity(m.max(1), m.max(1)) }
    }

    pub fn m(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Coherence after normalizing a copy of the columns. Used for encoders
    /// whose column norms drift during training.
    pub fn normalized_coherence(&self) -> Result<f64> {
        coherence(&normalize_columns(self)?)
    }

    /// Row-major CSV: a `m,n` line followed by `m` rows of `n` values.
    /// Values use the shortest representation that round-trips exactly.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.m(), self.n());
        for r in 0..self.m() {
            for c in 0..self.n() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.data[(r, c)]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty frame file".into()))?;
        let dims = parse_row(header)?;
        if dims.len() != 2 || dims.iter().any(|d| d.fract() != 0.0 || *d < 0.0) {
            return Err(Error::Parse(format!("bad header line {header:?}, expected `m,n`")));
        }
        let (m, n) = (dims[0] as usize, dims[1] as usize);
        let mut values = Vec::with_capacity(m * n);
        for (r, line) in lines.enumerate() {
            let row = parse_row(line)?;
            if row.len() != n {
                return Err(Error::Parse(format!("row {r} has {} values, expected {n}", row.len())));
            }
            values.extend(row);
        }
        if values.len() != m * n {
            return Err(Error::Parse(format!("expected {m} rows, found {}", values.len() / n.max(1))));
        }
        Frame::from_row_slice(m, n, &values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Frame::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
        .collect()
}

/// Symmetric `n x n` Gram matrix `F^T F`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    data: DMatrix<f64>,
}

impl GramMatrix {
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.n();
        let mut best = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    best = best.max(self.data[(i, j)].abs());
                }
            }
        }
        best
    }

    /// `max - min` over the absolute off-diagonal entries; 0 for an
    /// equiangular frame.
    pub fn equiangularity_spread(&self) -> f64 {
        let n = self.n();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    let v = self.data[(i, j)].abs();
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        if n < 2 {
            0.0
        } else {
            hi - lo
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues_sorted(self.data.clone())
    }
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(f: &Frame) -> Result<Frame> {
    let mut data = f.data.clone();
    for (j, mut col) in data.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm < ZERO_NORM {
            return Err(Error::ZeroColumn(j));
        }
        col /= norm;
    }
    Ok(Frame { data })
}

pub fn gram(f: &Frame) -> GramMatrix {
    GramMatrix { data: f.data.transpose() * &f.data }
}

/// Mutual coherence: the largest absolute off-diagonal Gram entry of a
/// unit-norm frame. Zero for frames with a single column.
pub fn coherence(f: &Frame) -> Result<f64> {
    let g = gram(f);
    for i in 0..g.n() {
        let d = g.data[(i, i)];
        if (d - 1.0).abs() > UNIT_DIAGONAL_TOL {
            return Err(Error::NotNormalized { index: i, value: d });
        }
    }
    Ok(g.max_off_diagonal())
}

/// Welch lower bound `sqrt((n - m) / ((n - 1) m))` on the coherence of `n`
/// unit vectors in `R^m`.
pub fn welch_bound(m: usize, n: usize) -> Result<f64> {
    if m == 0 || n < m {
        return Err(Error::BadDims(format!("welch bound needs n >= m >= 1, got m={m}, n={n}")));
    }
    if n == m {
        return Ok(0.0);
    }
    Ok((((n - m) as f64) / (((n - 1) * m) as f64)).sqrt())
}

/// Off-diagonal magnitude of the ETF target Gram: the Welch value for
/// overcomplete shapes, 0 when `n <= m` (the target is then the identity).
pub(crate) fn etf_target_value(m: usize, n: usize) -> f64 {
    if n <= m {
        0.0
    } else {
        welch_bound(m, n).expect("n > m")
    }
}

/// Elementwise-absolute ETF Gram target: 1 on the diagonal and the Welch
/// value `sqrt((n-m)/((n-1)m))` elsewhere.
pub fn etf_target_gram(m: usize, n: usize) -> Result<GramMatrix> {
    let off = welch_bound(m, n)?;
    Ok(GramMatrix { data: DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { off }) })
}

/// Returns the tightness constant `c` when `F F^T = c I` holds to `tol` in
/// max-norm. `c` is taken as `trace(F F^T) / m`, which is `n / m` for a
/// unit-norm frame.
pub fn is_tight(f: &Frame, tol: f64) -> Option<f64> {
    let s = &f.data * f.data.transpose();
    let c = s.trace() / f.m() as f64;
    let dev = s - DMatrix::identity(f.m(), f.m()) * c;
    (linalg::max_abs(&dev) <= tol).then_some(c)
}

/// The `m x (m+1)` simplex ETF: the centred standard basis of `R^(m+1)`
/// expressed in a Helmert basis of the sum-zero hyperplane, column
/// normalized. Off-diagonal Gram entries are all `-1/m`.
pub fn make_simplex_etf(m: usize) -> Result<Frame> {
    if m == 0 {
        return Err(Error::BadParameter("simplex ETF needs m >= 1".into()));
    }
    let n = m + 1;
    let scale = (n as f64 / m as f64).sqrt();
    let data = DMatrix::from_fn(m, n, |r, c| {
        // Helmert row r: r+1 ones, then -(r+1), normalized.
        let k = (r + 1) as f64;
        let norm = (k * (k + 1.0)).sqrt();
        let v = if c <= r {
            1.0
        } else if c == r + 1 {
            -k
        } else {
            0.0
        };
        scale * v / norm
    });
    Ok(Frame { data })
}

/// Real `m x 2m` ETF with `m = (q+1)/2` from the Paley conference matrix of
/// order `q + 1`, for a prime power `q = 1 (mod 4)`.
///
/// With `C` the symmetric conference matrix (`C^2 = q I`), `I + C/sqrt(q)`
/// has eigenvalues 0 and 2, each with multiplicity `m`; it is the Gram
/// matrix of the ETF obtained from its eigenvalue-2 eigenvectors.
pub fn make_conference_etf(q: u64) -> Result<Frame> {
    let field = Field::new(q)
        .filter(|f| f.order() % 4 == 1)
        .ok_or_else(|| Error::BadParameter(format!("q = {q} is not a prime power congruent to 1 mod 4")))?;
    let size = (q + 1) as usize;
    let m = size / 2;
    let sq = (q as f64).sqrt();
    let gram = DMatrix::from_fn(size, size, |i, j| {
        if i == j {
            return 1.0;
        }
        let c = if i == 0 || j == 0 {
            1.0
        } else {
            f64::from(field.chi(field.sub((i - 1) as u64, (j - 1) as u64)))
        };
        c / sq
    });
    let (_, vectors) = linalg::sym_eigen_sorted(gram);
    let data = DMatrix::from_fn(m, size, |r, c| 2f64.sqrt() * vectors[(c, size - m + r)]);
    normalize_columns(&Frame { data })
}

/// Knobs for [`approximate_etf_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingProjection {
    pub iters: usize,
    pub seed: u64,
    /// Stop early once the coherence is within this distance of the Welch
    /// bound.
    pub tol: f64,
}

/// Approximate ETF by alternating projections, started from a Gaussian frame.
///
/// Each sweep clips the off-diagonal Gram magnitudes to the Welch value,
/// projects onto tight rank-`m` Gram matrices (top `m` eigenvectors with the
/// eigenvalues set to `n/m`) and restores a unit diagonal by normalizing the
/// factor's columns. The lowest-coherence iterate is returned, so the
/// result is never worse than the starting frame.
pub fn approximate_etf(m: usize, n: usize, iters: usize, seed: u64) -> Result<Frame> {
    approximate_etf_with(m, n, AlternatingProjection { iters, seed, tol: 1e-12 })
}

pub fn approximate_etf_with(m: usize, n: usize, opts: AlternatingProjection) -> Result<Frame> {
    let welch = welch_bound(m, n)?;
    if opts.iters == 0 {
        return Err(Error::BadParameter("approximate_etf needs iters >= 1".into()));
    }
    let start = make_gaussian_frame(m, n, opts.seed)?;
    let mut best_coh = coherence(&start)?;
    let mut best = start.clone();
    let mut frame = start;
    let tight = (n as f64 / m as f64).sqrt();
    for _ in 0..opts.iters {
        if best_coh - welch <= opts.tol {
            break;
        }
        let mut g = gram(&frame).data;
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    g[(i, j)] = 1.0;
                } else {
                    g[(i, j)] = g[(i, j)].clamp(-welch, welch);
                }
            }
        }
        let (_, vectors) = linalg::sym_eigen_sorted(g);
        let data = DMatrix::from_fn(m, n, |r, c| tight * vectors[(c, n - m + r)]);
        let Ok(next) = normalize_columns(&Frame { data }) else {
            break;
        };
        let coh = coherence(&next)?;
        if coh < best_coh {
            best_coh = coh;
            best = next.clone();
        }
        frame = next;
    }
    Ok(best)
}

/// I.i.d. standard normal entries, column normalized. Entries are drawn
/// column by column from the `(seed, Frame)` stream.
pub fn make_gaussian_frame(m: usize, n: usize, seed: u64) -> Result<Frame> {
    if m == 0 || n == 0 {
        return Err(Error::BadDims(format!("gaussian frame needs m, n >= 1, got {m}x{n}")));
    }
    let mut rng = rng::stream(seed, Purpose::Frame, 0);
    let data = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
    normalize_columns(&Frame { data })
}

/// Low-pass harmonic frame: `m` low-frequency rows of the orthonormal real
/// DFT basis of `R^n`, column normalized.
///
/// For odd `m` the rows are the constant row plus cosine/sine pairs at
/// frequencies `1..=(m-1)/2`; for even `m < n` they are the cosine/sine
/// pairs at frequencies `1..=m/2`. Either way every column has the same
/// norm, so normalization keeps the frame tight with `c = n/m`. For `m = n`
/// the full orthonormal basis is returned.
pub fn make_lowpass_frame(m: usize, n: usize) -> Result<Frame> {
    if m == 0 || n < m {
        return Err(Error::BadDims(format!("low-pass frame needs n >= m >= 1, got m={m}, n={n}")));
    }
    let nf = n as f64;
    let constant = |_: usize| 1.0 / nf.sqrt();
    let cosine = |k: usize, j: usize| (2.0 / nf).sqrt() * (2.0 * PI * (k * j) as f64 / nf).cos();
    let sine = |k: usize, j: usize| (2.0 / nf).sqrt() * (2.0 * PI * (k * j) as f64 / nf).sin();
    let nyquist = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 } / nf.sqrt();

    type Row<'a> = Box<dyn Fn(usize) -> f64 + 'a>;
    let mut rows: Vec<Row> = Vec::with_capacity(m);
    if m == n {
        rows.push(Box::new(constant));
        for k in 1..=(n - 1) / 2 {
            rows.push(Box::new(move |j| cosine(k, j)));
            rows.push(Box::new(move |j| sine(k, j)));
        }
        if n % 2 == 0 {
            rows.push(Box::new(nyquist));
        }
    } else {
        if m % 2 == 1 {
            rows.push(Box::new(constant));
        }
        for k in 1..=m / 2 {
            rows.push(Box::new(move |j| cosine(k, j)));
            rows.push(Box::new(move |j| sine(k, j)));
        }
    }
    debug_assert_eq!(rows.len(), m);
    let data = DMatrix::from_fn(m, n, |r, c| rows[r](c));
    normalize_columns(&Frame { data })
}

/// Summary of a frame, serialized as the frame analysis JSON.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FrameAnalysis {
    pub m: usize,
    pub n: usize,
    pub coherence: f64,
    pub welch_bound: f64,
    pub tight_c: Option<f64>,
    pub equiangularity_spread: f64,
}

/// Analysis of a unit-norm frame; tightness is tested at `tight_tol`.
pub fn analyze(f: &Frame, tight_tol: f64) -> Result<FrameAnalysis> {
    let g = gram(f);
    Ok(FrameAnalysis {
        m: f.m(),
        n: f.n(),
        coherence: coherence(f)?,
        welch_bound: welch_bound(f.m(), f.n())?,
        tight_c: is_tight(f, tight_tol),
        equiangularity_spread: g.equiangularity_spread(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex2() -> Frame {
        make_simplex_etf(2).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let id = Frame::identity(2);
        assert_eq!(normalize_columns(&id).unwrap(), id);

        let f = Frame::from_row_slice(2, 1, &[3.0, 4.0]).unwrap();
        let g = normalize_columns(&f).unwrap();
        assert!((g.data()[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((g.data()[(1, 0)] - 0.8).abs() < 1e-15);

        let raw = Frame::new(DMatrix::from_fn(4, 6, |r, c| ((r * 7 + c * 3) % 5) as f64 - 1.7)).unwrap();
        let unit = normalize_columns(&raw).unwrap();
        for norm in linalg::column_norms(unit.data()) {
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_zero_column() {
        let f = Frame::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(normalize_columns(&f), Err(Error::ZeroColumn(1))));
    }

    #[test]
    fn gram_examples() {
        assert_eq!(gram(&Frame::identity(3)).data(), &DMatrix::identity(3, 3));
        let g = gram(&simplex2());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.5 };
                assert!((g.data()[(i, j)].abs() - want).abs() < 1e-12);
            }
        }
        let pair = Frame::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0]).unwrap();
        assert_eq!(gram(&pair).data()[(0, 1)], 0.0);
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(coherence(&Frame::identity(4)).unwrap(), 0.0);
        assert!((coherence(&simplex2()).unwrap() - 0.5).abs() < 1e-12);
        let raw = Frame::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(coherence(&raw), Err(Error::NotNormalized { index: 0, .. })));
    }

    #[test]
    fn welch_examples() {
        assert_eq!(welch_bound(2, 3).unwrap(), 0.5);
        assert_eq!(welch_bound(3, 3).unwrap(), 0.0);
        let w = welch_bound(75, 150).unwrap();
        assert!((w - (1.0f64 / 149.0).sqrt()).abs() < 1e-15);
        assert!((w - 0.08192).abs() < 1e-5);
        assert!(matches!(welch_bound(3, 2), Err(Error::BadDims(_))));
    }

    #[test]
    fn etf_target_examples() {
        let t = etf_target_gram(2, 3).unwrap();
        assert_eq!(t.data()[(0, 0)], 1.0);
        assert_eq!(t.data()[(0, 1)], 0.5);
        assert_eq!(etf_target_gram(4, 4).unwrap().data(), &DMatrix::identity(4, 4));
        assert!((etf_target_gram(75, 150).unwrap().data()[(3, 9)] - 0.08192).abs() < 1e-5);
        assert!(etf_target_gram(3, 2).is_err());
    }

    #[test]
    fn tightness_examples() {
        assert_eq!(is_tight(&Frame::identity(3), 1e-12), Some(1.0));
        assert!((is_tight(&simplex2(), 1e-12).unwrap() - 1.5).abs() < 1e-12);
        let g = make_gaussian_frame(4, 8, 3).unwrap();
        assert_eq!(is_tight(&g, 1e-6), None);
    }

    #[test]
    fn simplex_family() {
        for m in 1..=12 {
            let f = make_simplex_etf(m).unwrap();
            assert_eq!((f.m(), f.n()), (m, m + 1));
            let c = coherence(&f).unwrap();
            assert!((c - 1.0 / m as f64).abs() < 1e-10, "m={m}");
            assert!((c - welch_bound(m, m + 1).unwrap()).abs() < 1e-10);
            let tight = is_tight(&f, 1e-10).unwrap();
            assert!((tight - (m + 1) as f64 / m as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn conference_family() {
        for (q, m) in [(5u64, 3usize), (9, 5), (13, 7), (17, 9), (25, 13)] {
            let f = make_conference_etf(q).unwrap();
            assert_eq!((f.m(), f.n()), (m, 2 * m));
            let c = coherence(&f).unwrap();
            assert!((c - (1.0 / q as f64).sqrt()).abs() < 1e-10, "q={q}");
            assert!((c - welch_bound(m, 2 * m).unwrap()).abs() < 1e-10);
            assert!((is_tight(&f, 1e-10).unwrap() - 2.0).abs() < 1e-10);
            assert!(gram(&f).equiangularity_spread() < 1e-10);
        }
    }

    #[test]
    fn conference_rejects_bad_q() {
        for q in [3u64, 7, 15, 21, 1, 0] {
            assert!(matches!(make_conference_etf(q), Err(Error::BadParameter(_))), "q={q}");
        }
    }

    #[test]
    fn approximate_etf_recovers_simplex_shapes() {
        let f = approximate_etf(2, 3, 100, 11).unwrap();
        assert!((coherence(&f).unwrap() - 0.5).abs() < 1e-6);
        let f = approximate_etf(4, 5, 500, 11).unwrap();
        assert!((coherence(&f).unwrap() - 0.25).abs() < 1e-4);
    }

    #[test]
    fn approximate_etf_improves_on_its_start() {
        let start = coherence(&make_gaussian_frame(12, 24, 5).unwrap()).unwrap();
        let f = approximate_etf(12, 24, 200, 5).unwrap();
        let c = coherence(&f).unwrap();
        assert!(c < start);
        assert!(c >= welch_bound(12, 24).unwrap() - 1e-12);
    }

    #[test]
    fn gaussian_frame_properties() {
        let a = make_gaussian_frame(6, 10, 42).unwrap();
        let b = make_gaussian_frame(6, 10, 42).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_ne!(a, make_gaussian_frame(6, 10, 43).unwrap());
        for norm in linalg::column_norms(a.data()) {
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert!(coherence(&a).unwrap() > welch_bound(6, 10).unwrap());
    }

    #[test]
    fn lowpass_frames() {
        let sq = make_lowpass_frame(6, 6).unwrap();
        assert!(coherence(&sq).unwrap() < 1e-12);

        let f = make_lowpass_frame(2, 4).unwrap();
        let s = f.data() * f.data().transpose();
        assert!((s - DMatrix::identity(2, 2) * 2.0).abs().max() < 1e-12);
        assert_eq!(is_tight(&f, 1e-12), Some(2.0));

        for (m, n) in [(1, 5), (3, 8), (4, 9), (5, 16), (8, 16), (7, 7)] {
            let f = make_lowpass_frame(m, n).unwrap();
            let c = is_tight(&f, 1e-10).unwrap_or_else(|| panic!("({m},{n}) not tight"));
            assert!((c - n as f64 / m as f64).abs() < 1e-10);
        }
        assert!(make_lowpass_frame(5, 4).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = make_gaussian_frame(3, 5, 9).unwrap();
        let text = f.to_csv();
        assert!(text.starts_with("3,5\n"));
        assert_eq!(Frame::from_csv(&text).unwrap(), f);
        assert!(Frame::from_csv("2,2\n1,2\n3\n").is_err());
        assert!(Frame::from_csv("").is_err());
    }
}
