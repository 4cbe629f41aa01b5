//! Linear and antilinear operators on explicit finite-dimensional Hilbert spaces.
//!
//! An operator is a square sparse matrix `M` plus a conjugation flag. A linear
//! operator acts as `v -> M v`; an antilinear one acts as `v -> M conj(v)`.
//! Every formula elsewhere in the crate is translated into this single
//! representation, so composition rules live here and nowhere else:
//!
//! * `A ∘ B` has matrix `M_A · (conj(M_B) if A is antilinear else M_B)` and is
//!   antilinear iff exactly one factor is.
//! * The adjoint of an antilinear `M cc` is `M^T cc`; for an antiunitary this is
//!   also its inverse.
//!
//! Storage is CSR (`sprs`). Dense `nalgebra` copies are made only for
//! eigenproblems, norms and nullspaces.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct HilbertSpace {
    dim: usize,
    labels: Option<Arc<Vec<String>>>,
}

impl HilbertSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        Ok(Self { dim, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidSpace("label list is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate basis label {l:?}")));
            }
        }
        Ok(Self { dim: labels.len(), labels: Some(Arc::new(labels)) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref().map(|v| v.as_slice())
    }

    /// Tensor product space; labels combine as `a|b` when both factors are labelled.
    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let labels = match (self.labels(), other.labels()) {
            (Some(a), Some(b)) => {
                let mut out = Vec::with_capacity(a.len() * b.len());
                for x in a {
                    for y in b {
                        out.push(format!("{x}|{y}"));
                    }
                }
                Some(Arc::new(out))
            }
            _ => None,
        };
        HilbertSpace { dim: self.dim * other.dim, labels }
    }
}

/// Spaces compare by dimension; labels are descriptive only.
impl PartialEq for HilbertSpace {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs_eps: f64,
    pub rel_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs_eps: 1e-9, rel_eps: 0.0 }
    }
}

impl Tolerance {
    pub fn new(abs_eps: f64, rel_eps: f64) -> Result<Self> {
        if !(abs_eps >= 0.0 && rel_eps >= 0.0) || !abs_eps.is_finite() || !rel_eps.is_finite() {
            return Err(Error::InvalidTolerance(format!("abs {abs_eps}, rel {rel_eps}")));
        }
        if abs_eps == 0.0 && rel_eps == 0.0 {
            return Err(Error::InvalidTolerance(
                "both thresholds are zero; use Tolerance::exact for exact comparison".into(),
            ));
        }
        Ok(Self { abs_eps, rel_eps })
    }

    pub fn absolute(abs_eps: f64) -> Result<Self> {
        Self::new(abs_eps, 0.0)
    }

    pub fn exact() -> Self {
        Self { abs_eps: 0.0, rel_eps: 0.0 }
    }

    /// Threshold for a comparison whose operands have magnitude `scale`.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.abs_eps + self.rel_eps * scale
    }

    pub fn accepts(&self, residual: f64, scale: f64) -> bool {
        residual <= self.threshold(scale)
    }
}

fn to_csr(m: CsMat<C64>) -> CsMat<C64> {
    if m.is_csr() {
        m
    } else {
        m.to_csr()
    }
}

/// Drops stored entries that are exactly zero.
fn prune(m: &CsMat<C64>) -> CsMat<C64> {
    let (r, c) = m.shape();
    let mut tri = TriMat::new((r, c));
    for (v, (i, j)) in m.iter() {
        if *v != ZERO {
            tri.add_triplet(i, j, *v);
        }
    }
    tri.to_csr()
}

#[derive(Clone)]
pub struct ComplexOperator {
    space: HilbertSpace,
    matrix: CsMat<C64>,
    antilinear: bool,
}

impl fmt::Debug for ComplexOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ComplexOperator(dim={}, antilinear={}, nnz={})",
            self.dim(),
            self.antilinear,
            self.matrix.nnz()
        )
    }
}

impl ComplexOperator {
    pub fn from_csr(space: HilbertSpace, matrix: CsMat<C64>, antilinear: bool) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != space.dim() || c != space.dim() {
            return Err(Error::BadMatrixShape { rows: r, cols: c, expected: space.dim() });
        }
        Ok(Self { space, matrix: to_csr(matrix), antilinear })
    }

    pub fn from_triplets<I>(dim: usize, entries: I, antilinear: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let space = HilbertSpace::new(dim)?;
        let mut tri = TriMat::new((dim, dim));
        for (i, j, v) in entries {
            if i >= dim || j >= dim {
                return Err(Error::BadMatrixShape { rows: i + 1, cols: j + 1, expected: dim });
            }
            if v != ZERO {
                tri.add_triplet(i, j, v);
            }
        }
        Ok(Self { space, matrix: tri.to_csr(), antilinear })
    }

    /// Row-major nested rows, as in fixture files.
    pub fn from_rows(rows: &[Vec<C64>], antilinear: bool) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::BadMatrixShape { rows: n, cols: row.len(), expected: n });
            }
            for (j, v) in row.iter().enumerate() {
                entries.push((i, j, *v));
            }
        }
        Self::from_triplets(n, entries, antilinear)
    }

    pub fn from_dense(m: &DMatrix<C64>, antilinear: bool) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::BadMatrixShape { rows: m.nrows(), cols: m.ncols(), expected: m.nrows() });
        }
        let n = m.nrows();
        let entries = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, m[(i, j)]));
        Self::from_triplets(n, entries.collect::<Vec<_>>(), antilinear)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, ONE)), false)
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::from_triplets(dim, std::iter::empty(), false)
    }

    /// Complex conjugation in the standard basis.
    pub fn conjugation(dim: usize) -> Result<Self> {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, ONE)), true)
    }

    pub fn diagonal(values: &[C64]) -> Result<Self> {
        Self::from_triplets(values.len(), values.iter().enumerate().map(|(i, v)| (i, i, *v)), false)
    }

    pub fn real_diagonal(values: &[f64]) -> Result<Self> {
        let v: Vec<C64> = values.iter().map(|x| C64::new(*x, 0.0)).collect();
        Self::diagonal(&v)
    }

    /// Partial permutation: basis vector `j` goes to `map(j)`, or to zero when `None`.
    pub fn partial_permutation<F>(dim: usize, map: F, antilinear: bool) -> Result<Self>
    where
        F: Fn(usize) -> Option<usize>,
    {
        let entries: Vec<_> = (0..dim).filter_map(|j| map(j).map(|i| (i, j, ONE))).collect();
        Self::from_triplets(dim, entries, antilinear)
    }

    pub fn sigma1() -> Self {
        Self::from_triplets(2, [(0, 1, ONE), (1, 0, ONE)], false).expect("static")
    }

    pub fn sigma2() -> Self {
        Self::from_triplets(2, [(0, 1, -I), (1, 0, I)], false).expect("static")
    }

    pub fn sigma3() -> Self {
        Self::from_triplets(2, [(0, 0, ONE), (1, 1, -ONE)], false).expect("static")
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &CsMat<C64> {
        &self.matrix
    }

    pub fn is_antilinear(&self) -> bool {
        self.antilinear
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    /// Same matrix, conjugation flag replaced.
    pub fn with_antilinear(&self, antilinear: bool) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.clone(), antilinear }
    }

    pub fn with_space(mut self, space: HilbertSpace) -> Result<Self> {
        if space.dim() != self.dim() {
            return Err(Error::SpaceMismatch { left: space.dim(), right: self.dim() });
        }
        self.space = space;
        Ok(self)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix.get(i, j).copied().unwrap_or(ZERO)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut out = DMatrix::from_element(n, n, ZERO);
        for (v, (i, j)) in self.matrix.iter() {
            out[(i, j)] += *v;
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::SpaceMismatch { left: self.dim(), right: v.len() });
        }
        let mut out = vec![ZERO; self.dim()];
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            let mut acc = ZERO;
            for (col, m) in vec.iter() {
                let x = if self.antilinear { v[col].conj() } else { v[col] };
                acc += m * x;
            }
            out[row] = acc;
        }
        Ok(out)
    }

    fn conj_matrix(&self) -> CsMat<C64> {
        self.matrix.map(|x| x.conj())
    }

    pub fn compose(&self, other: &ComplexOperator) -> Result<Self> {
        self.check_space(other)?;
        let rhs = if self.antilinear { other.conj_matrix() } else { other.matrix.clone() };
        let matrix = to_csr(&self.matrix * &rhs);
        Ok(Self { space: self.space.clone(), matrix, antilinear: self.antilinear ^ other.antilinear })
    }

    /// Hermitian adjoint for linear operators, transpose for antilinear ones.
    pub fn adjoint(&self) -> Self {
        let t = self.matrix.transpose_view().to_csr();
        let matrix = if self.antilinear { t } else { t.map(|x| x.conj()) };
        Self { space: self.space.clone(), matrix, antilinear: self.antilinear }
    }

    /// Multiplies by a scalar on the left (`c · A`).
    pub fn scale(&self, c: C64) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.map(|x| x * c), antilinear: self.antilinear }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn try_add(&self, other: &ComplexOperator) -> Result<Self> {
        self.check_space(other)?;
        self.check_parity(other)?;
        let matrix = prune(&(&self.matrix + &other.matrix));
        Ok(Self { space: self.space.clone(), matrix, antilinear: self.antilinear })
    }

    pub fn try_sub(&self, other: &ComplexOperator) -> Result<Self> {
        self.try_add(&other.scale_real(-1.0))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value of the matrix part (dense SVD).
    pub fn operator_norm(&self) -> f64 {
        if self.matrix.nnz() == 0 {
            return 0.0;
        }
        let d = self.to_dense();
        d.singular_values().iter().copied().fold(0.0, f64::max)
    }

    /// Compression `P A P`.
    pub fn compress(&self, window: &ComplexOperator) -> Result<Self> {
        window.compose(self)?.compose(window)
    }

    /// Max-entry distance of the matrix parts from unitarity: `‖M M* − 1‖`.
    pub fn unitarity_residual(&self) -> f64 {
        let lin = self.with_antilinear(false);
        let prod = lin.compose(&lin.adjoint()).expect("same space");
        let id = ComplexOperator::identity(self.dim()).expect("dim >= 1");
        prod.try_sub(&id).expect("same space").max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        !self.antilinear && relation_residual(self, &self.adjoint(), None).map(|r| r <= tol).unwrap_or(false)
    }

    fn check_space(&self, other: &ComplexOperator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    fn check_parity(&self, other: &ComplexOperator) -> Result<()> {
        if self.antilinear != other.antilinear {
            return Err(Error::ParityMismatch(format!(
                "antilinear flags {} and {}",
                self.antilinear, other.antilinear
            )));
        }
        Ok(())
    }
}

/// Panics on dimension mismatch; internal code builds operators whose
/// dimensions agree by construction. Public checks use [`ComplexOperator::compose`].
impl Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: &ComplexOperator) -> ComplexOperator {
        self.compose(rhs).expect("operator dimensions agree")
    }
}

impl Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: &ComplexOperator) -> ComplexOperator {
        self.try_add(rhs).expect("operators share space and parity")
    }
}

impl Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: &ComplexOperator) -> ComplexOperator {
        self.try_sub(rhs).expect("operators share space and parity")
    }
}

impl Neg for &ComplexOperator {
    type Output = ComplexOperator;
    fn neg(self) -> ComplexOperator {
        self.scale_real(-1.0)
    }
}

/// Kronecker product. Basis index of `e_i ⊗ f_k` is `i * dim(b) + k`.
pub fn tensor(a: &ComplexOperator, b: &ComplexOperator) -> Result<ComplexOperator> {
    if a.antilinear != b.antilinear {
        return Err(Error::MixedParity);
    }
    let matrix = to_csr(sprs::kronecker_product(a.matrix.view(), b.matrix.view()));
    Ok(ComplexOperator { space: a.space.tensor(&b.space), matrix, antilinear: a.antilinear })
}

/// Tensor product of several operators, left to right.
pub fn tensor_all(ops: &[&ComplexOperator]) -> Result<ComplexOperator> {
    let (first, rest) = ops.split_first().ok_or_else(|| Error::InvalidSpace("empty tensor product".into()))?;
    rest.iter().try_fold((*first).clone(), |acc, op| tensor(&acc, op))
}

pub fn direct_sum(a: &ComplexOperator, b: &ComplexOperator) -> Result<ComplexOperator> {
    a.check_parity(b)?;
    let n = a.dim();
    let entries = a
        .matrix
        .iter()
        .map(|(v, (i, j))| (i, j, *v))
        .chain(b.matrix.iter().map(|(v, (i, j))| (i + n, j + n, *v)))
        .collect::<Vec<_>>();
    ComplexOperator::from_triplets(n + b.dim(), entries, a.antilinear)
}

/// `Σ B ⊗ |r⟩⟨c|` over the given `(r, c, B)` blocks, with the block factor second.
pub fn assemble_blocks<'a, I>(inner_dim: usize, outer_dim: usize, blocks: I, antilinear: bool) -> Result<ComplexOperator>
where
    I: IntoIterator<Item = (usize, usize, &'a ComplexOperator)>,
{
    let mut entries = Vec::new();
    for (r, c, b) in blocks {
        if b.dim() != inner_dim {
            return Err(Error::SpaceMismatch { left: inner_dim, right: b.dim() });
        }
        if b.antilinear != antilinear {
            return Err(Error::ParityMismatch("block parity differs from requested parity".into()));
        }
        for (v, (i, j)) in b.matrix.iter() {
            entries.push((i * outer_dim + r, j * outer_dim + c, *v));
        }
    }
    ComplexOperator::from_triplets(inner_dim * outer_dim, entries, antilinear)
}

/// `ab − ba`, or `ab + ba` when `anti` is set. Both operands must be linear.
pub fn commutator(a: &ComplexOperator, b: &ComplexOperator, anti: bool) -> Result<ComplexOperator> {
    if a.antilinear || b.antilinear {
        return Err(Error::AntilinearOperand);
    }
    let ab = a.compose(b)?;
    let ba = b.compose(a)?;
    if anti {
        ab.try_add(&ba)
    } else {
        ab.try_sub(&ba)
    }
}

/// Max entry of `P (lhs − rhs) P` on the matrix parts.
pub fn relation_residual(lhs: &ComplexOperator, rhs: &ComplexOperator, window: Option<&ComplexOperator>) -> Result<f64> {
    let diff = lhs.try_sub(rhs)?;
    match window {
        None => Ok(diff.max_abs()),
        Some(p) => {
            if p.dim() != diff.dim() {
                return Err(Error::SpaceMismatch { left: p.dim(), right: diff.dim() });
            }
            if p.antilinear {
                return Err(Error::ParityMismatch("window must be linear".into()));
            }
            Ok(diff.compress(p)?.max_abs())
        }
    }
}

fn sort_complex(values: &mut [C64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues with multiplicity, sorted by real then imaginary part.
pub fn spectrum(a: &ComplexOperator) -> Result<Vec<C64>> {
    if a.antilinear {
        return Err(Error::AntilinearOperand);
    }
    let scale = a.max_abs().max(1.0);
    let mut values: Vec<C64> = if a.is_hermitian(1e-12 * scale) {
        hermitian_eigenvalues(a)?.into_iter().map(|x| C64::new(x, 0.0)).collect()
    } else {
        let schur = nalgebra::Schur::try_new(a.to_dense(), 1e-14, 10_000).ok_or(Error::NonConvergence)?;
        let (_, t) = schur.unpack();
        (0..t.nrows()).map(|i| t[(i, i)]).collect()
    };
    sort_complex(&mut values);
    Ok(values)
}

/// Real eigenvalues of a Hermitian operator, ascending.
pub fn hermitian_eigenvalues(a: &ComplexOperator) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(a)?.0)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors as matrix columns.
pub fn hermitian_eigen(a: &ComplexOperator) -> Result<(Vec<f64>, DMatrix<C64>)> {
    if a.antilinear {
        return Err(Error::AntilinearOperand);
    }
    let eig = nalgebra::SymmetricEigen::try_new(a.to_dense(), 1e-14, 10_000).ok_or(Error::NonConvergence)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.dim(), a.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Orthonormal basis of the nullspace of a dense matrix (columns), via SVD.
pub fn nullspace(m: &DMatrix<C64>, tol: f64) -> Result<DMatrix<C64>> {
    let ncols = m.ncols();
    // Pad with zero rows so the thin SVD exposes all right singular vectors.
    let rows = m.nrows().max(ncols);
    let mut padded = DMatrix::from_element(rows, ncols, ZERO);
    padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
    let svd = nalgebra::SVD::try_new(padded, false, true, 1e-15, 10_000).ok_or(Error::NonConvergence)?;
    let v_t = svd.v_t.ok_or(Error::NonConvergence)?;
    let cols: Vec<_> = (0..ncols)
        .filter(|&k| svd.singular_values[k] <= tol)
        .map(|k| v_t.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        return Ok(DMatrix::from_element(ncols, 0, ZERO));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Frobenius inner product `tr(a* b)` of two CSR matrices.
fn frobenius(a: &CsMat<C64>, b: &CsMat<C64>) -> C64 {
    let mut acc = ZERO;
    for (row, va) in a.outer_iterator().enumerate() {
        if let Some(vb) = b.outer_view(row) {
            for (j, x) in va.iter() {
                if let Some(y) = vb.get(j) {
                    acc += x.conj() * y;
                }
            }
        }
    }
    acc
}

/// Least-squares coordinates of `target` in `span(basis)` on the window, with
/// the max-entry residual of the fit.
pub fn span_coordinates(
    basis: &[ComplexOperator],
    target: &ComplexOperator,
    window: Option<&ComplexOperator>,
) -> Result<(Vec<C64>, f64)> {
    let compress = |op: &ComplexOperator| -> Result<ComplexOperator> {
        match window {
            Some(p) => op.compress(p),
            None => Ok(op.clone()),
        }
    };
    let b: Vec<ComplexOperator> = basis.iter().map(&compress).collect::<Result<_>>()?;
    let t = compress(target)?;
    let k = b.len();
    if k == 0 {
        return Ok((Vec::new(), t.max_abs()));
    }
    let gram = DMatrix::from_fn(k, k, |i, j| frobenius(&b[i].matrix, &b[j].matrix));
    let rhs = nalgebra::DVector::from_fn(k, |i, _| frobenius(&b[i].matrix, &t.matrix));
    let svd = nalgebra::SVD::try_new(gram, true, true, 1e-15, 10_000).ok_or(Error::NonConvergence)?;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let coords = svd.solve(&rhs, 1e-12 * smax.max(1e-300)).map_err(|_| Error::NonConvergence)?;
    let coords: Vec<C64> = coords.iter().copied().collect();
    let mut fit = ComplexOperator::zero(t.dim())?.with_antilinear(t.antilinear);
    for (c, op) in coords.iter().zip(&b) {
        if *c != ZERO {
            fit = fit.try_add(&op.scale(*c))?;
        }
    }
    let residual = t.try_sub(&fit)?.max_abs();
    Ok((coords, residual))
}
