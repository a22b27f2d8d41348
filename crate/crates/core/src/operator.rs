//! Finite-section operator model: coefficient space, operator family,
//! projections, splits and Schmidt (SVD) machinery.
//!
//! Everything lives on an N-dimensional section of the ambient space; the
//! run's configuration declares that family action outside the section is
//! negligible at the run's tolerances.

use crate::error::{Error, Result};
use crate::wavelet::C64;
use nalgebra::{DMatrix, DVector};

/// Relative cutoff below which singular values are truncated to rank.
pub const SINGULAR_CUTOFF: f64 = 1e-12;

/// A bounded operator on the section with a declared norm bound.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    label: String,
    matrix: DMatrix<C64>,
    norm_bound: f64,
    spectral_norm: f64,
}

impl OperatorSpec {
    /// Wrap a matrix with a declared norm bound; the computed spectral norm
    /// must not exceed it beyond roundoff.
    pub fn new(label: impl Into<String>, matrix: DMatrix<C64>, norm_bound: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(matrix.nrows(), matrix.ncols()));
        }
        let spectral_norm = spectral_norm(&matrix);
        if spectral_norm > norm_bound * (1.0 + 1e-8) {
            return Err(Error::NormBoundExceeded {
                computed: spectral_norm,
                declared: norm_bound,
            });
        }
        Ok(OperatorSpec {
            label: label.into(),
            matrix,
            norm_bound,
            spectral_norm,
        })
    }

    /// Wrap a matrix, declaring its computed spectral norm as the bound.
    pub fn from_matrix(label: impl Into<String>, matrix: DMatrix<C64>) -> Self {
        let spectral_norm = spectral_norm(&matrix);
        OperatorSpec {
            label: label.into(),
            matrix,
            norm_bound: spectral_norm,
            spectral_norm,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    /// Matrix–vector product.
    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(v.len(), self.dim()));
        }
        Ok(&self.matrix * v)
    }

    /// Conjugate-transpose product.
    pub fn adjoint_apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(v.len(), self.dim()));
        }
        Ok(self.matrix.adjoint() * v)
    }

    pub fn adjoint(&self) -> OperatorSpec {
        OperatorSpec {
            label: format!("{}*", self.label),
            matrix: self.matrix.adjoint(),
            norm_bound: self.norm_bound,
            spectral_norm: self.spectral_norm,
        }
    }
}

pub fn spectral_norm(matrix: &DMatrix<C64>) -> f64 {
    if matrix.is_empty() {
        return 0.0;
    }
    matrix.clone().singular_values().max()
}

/// Family of operators sharing the section, with the orthonormal sequence
/// along which the action decays.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    members: Vec<OperatorSpec>,
    e_seq: Vec<DVector<C64>>,
    decay: Vec<f64>,
}

impl OperatorFamily {
    pub fn new(members: Vec<OperatorSpec>, e_seq: Vec<DVector<C64>>) -> Result<Self> {
        let dim = members
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::Config("operator family is empty".into()))?;
        for m in &members {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch(m.dim(), dim));
            }
        }
        for e in &e_seq {
            if e.len() != dim {
                return Err(Error::DimensionMismatch(e.len(), dim));
            }
        }
        let dev = orthonormality_deviation(&e_seq);
        if dev > 1e-10 {
            return Err(Error::NotOrthonormal(dev));
        }
        let decay = family_decay(&members, &e_seq)?;
        Ok(OperatorFamily {
            members,
            e_seq,
            decay,
        })
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn members(&self) -> &[OperatorSpec] {
        &self.members
    }

    pub fn member(&self, label: &str) -> Option<&OperatorSpec> {
        self.members.iter().find(|m| m.label() == label)
    }

    pub fn e_seq(&self) -> &[DVector<C64>] {
        &self.e_seq
    }

    /// d(e_n) = max(sup_α ‖S_α e_n‖, sup_α ‖S_α* e_n‖), computed at
    /// construction.
    pub fn decay(&self) -> &[f64] {
        &self.decay
    }
}

/// Per-n decay of the family action along the sequence; reported as-is,
/// monotonicity is not enforced.
pub fn family_decay(members: &[OperatorSpec], e_seq: &[DVector<C64>]) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::Config("operator family is empty".into()));
    }
    e_seq
        .iter()
        .map(|e| {
            let mut worst = 0.0f64;
            for m in members {
                worst = worst.max(m.apply(e)?.norm());
                worst = worst.max(m.adjoint_apply(e)?.norm());
            }
            Ok(worst)
        })
        .collect()
}

/// 2(sup_α ‖S_α v‖^{1/4} + sup_α ‖S_α* v‖^{1/4}), the pairing weight of a
/// candidate vector.
pub fn pairing_weight(members: &[OperatorSpec], v: &DVector<C64>) -> Result<f64> {
    let mut fwd = 0.0f64;
    let mut adj = 0.0f64;
    for m in members {
        fwd = fwd.max(m.apply(v)?.norm());
        adj = adj.max(m.adjoint_apply(v)?.norm());
    }
    Ok(2.0 * (fwd.powf(0.25) + adj.powf(0.25)))
}

pub fn orthonormality_deviation(vectors: &[DVector<C64>]) -> f64 {
    let mut dev = 0.0f64;
    for (a, va) in vectors.iter().enumerate() {
        for (b, vb) in vectors.iter().enumerate() {
            let g = va.dotc(vb);
            let expect = if a == b { 1.0 } else { 0.0 };
            dev = dev.max((g - C64::new(expect, 0.0)).norm());
        }
    }
    dev
}

/// Orthogonal projection E = Σ ⟨·, x_k⟩ x_k onto the span of `vectors`.
pub fn project_onto(vectors: &[DVector<C64>], dim: usize) -> Result<OperatorSpec> {
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch(v.len(), dim));
        }
    }
    let dev = orthonormality_deviation(vectors);
    if dev > 1e-10 {
        return Err(Error::NotOrthonormal(dev));
    }
    let mut e = DMatrix::<C64>::zeros(dim, dim);
    for v in vectors {
        e += v * v.adjoint();
    }
    OperatorSpec::new("E", e, 1.0)
}

/// The four pieces of the split S = (1−E)S + ES and S* = (1−E)S* + ES*.
#[derive(Debug, Clone)]
pub struct SplitParts {
    /// Q̃ = (1−E)S.
    pub q_tilde: OperatorSpec,
    /// J̃ = S*E.
    pub j_tilde: OperatorSpec,
    /// Q = (1−E)S*.
    pub q: OperatorSpec,
    /// J = SE.
    pub j: OperatorSpec,
}

pub fn split(op: &OperatorSpec, projection: &OperatorSpec) -> Result<SplitParts> {
    if op.dim() != projection.dim() {
        return Err(Error::DimensionMismatch(op.dim(), projection.dim()));
    }
    let s = op.matrix();
    let e = projection.matrix();
    let id = DMatrix::<C64>::identity(op.dim(), op.dim());
    let one_minus_e = &id - e;
    let adj = s.adjoint();
    Ok(SplitParts {
        q_tilde: OperatorSpec::from_matrix(format!("(1-E){}", op.label()), &one_minus_e * s),
        j_tilde: OperatorSpec::from_matrix(format!("{}*E", op.label()), &adj * e),
        q: OperatorSpec::from_matrix(format!("(1-E){}*", op.label()), &one_minus_e * &adj),
        j: OperatorSpec::from_matrix(format!("{}E", op.label()), s * e),
    })
}

/// Schmidt decomposition Σ s_n ⟨·, p_n⟩ q_n with descending singular values
/// truncated at `SINGULAR_CUTOFF` relative to the top one.
#[derive(Debug, Clone)]
pub struct SchmidtSystem {
    values: Vec<f64>,
    right: Vec<DVector<C64>>,
    left: Vec<DVector<C64>>,
    dim: usize,
}

impl SchmidtSystem {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right singular vectors p_n.
    pub fn right(&self) -> &[DVector<C64>] {
        &self.right
    }

    /// Left singular vectors q_n.
    pub fn left(&self) -> &[DVector<C64>] {
        &self.left
    }

    /// Σ s_n q_n p_n^H as a dense matrix.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::zeros(self.dim, self.dim);
        for n in 0..self.rank() {
            m += (&self.left[n] * self.right[n].adjoint()) * C64::new(self.values[n], 0.0);
        }
        m
    }

    /// Apply with the singular values raised to `power`.
    pub fn apply_power(&self, v: &DVector<C64>, power: f64) -> Result<DVector<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(v.len(), self.dim));
        }
        let mut out = DVector::<C64>::zeros(self.dim);
        for n in 0..self.rank() {
            let coef = self.right[n].dotc(v) * C64::new(self.values[n].powf(power), 0.0);
            out += &self.left[n] * coef;
        }
        Ok(out)
    }
}

pub fn schmidt(op: &OperatorSpec) -> SchmidtSystem {
    let dim = op.dim();
    if dim == 0 {
        return SchmidtSystem {
            values: vec![],
            right: vec![],
            left: vec![],
            dim,
        };
    }
    let svd = op.matrix().clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let s1 = svd.singular_values.max();
    let mut values = Vec::new();
    let mut right = Vec::new();
    let mut left = Vec::new();
    for n in 0..svd.singular_values.len() {
        let s = svd.singular_values[n];
        if s <= SINGULAR_CUTOFF * s1 || s == 0.0 {
            continue;
        }
        values.push(s);
        right.push(v_t.row(n).transpose().map(|z| z.conj()));
        left.push(u.column(n).into_owned());
    }
    SchmidtSystem {
        values,
        right,
        left,
        dim,
    }
}

/// Auxiliary operator B = Σ s_n^{1/4} ⟨·, p_n⟩ q_n.
pub fn quarter_power(ss: &SchmidtSystem, label: impl Into<String>) -> OperatorSpec {
    let mut m = DMatrix::<C64>::zeros(ss.dim(), ss.dim());
    for n in 0..ss.rank() {
        m += (&ss.left()[n] * ss.right()[n].adjoint()) * C64::new(ss.values()[n].powf(0.25), 0.0);
    }
    OperatorSpec::from_matrix(label, m)
}

/// One row of the Schwarz-inequality chain at a selected vector.
#[derive(Debug, Clone)]
pub struct SchwarzRow {
    pub pair: usize,
    /// ‖B*x_k‖ + ‖Bx_k‖ + ‖B̃*x_k‖ + ‖B̃x_k‖.
    pub b_side: f64,
    /// ‖J*x_k‖^{1/4} + ‖Jx_k‖^{1/4} + ‖J̃*x_k‖^{1/4} + ‖J̃x_k‖^{1/4}.
    pub quarter_side: f64,
    pub d_k: f64,
}

#[derive(Debug, Clone)]
pub struct SchwarzReport {
    pub rows: Vec<SchwarzRow>,
    /// Inequality slack tolerated before reporting a violation.
    pub slack: f64,
}

/// Verify the two-stage inequality chain for every selected x_k.
///
/// A violation signals a selection bug upstream, not a numerical accident,
/// so it is an error rather than a failed record.
pub fn schwarz_chain(
    j: &OperatorSpec,
    j_tilde: &OperatorSpec,
    xs: &[DVector<C64>],
    d: &[f64],
) -> Result<SchwarzReport> {
    if xs.len() != d.len() {
        return Err(Error::DimensionMismatch(xs.len(), d.len()));
    }
    let slack = 1e-10;
    let b = quarter_power(&schmidt(j), "B");
    let b_tilde = quarter_power(&schmidt(j_tilde), "B~");
    let mut rows = Vec::with_capacity(xs.len());
    for (k, (x, &d_k)) in xs.iter().zip(d).enumerate() {
        let b_side = b.adjoint_apply(x)?.norm()
            + b.apply(x)?.norm()
            + b_tilde.adjoint_apply(x)?.norm()
            + b_tilde.apply(x)?.norm();
        let quarter_side = j.adjoint_apply(x)?.norm().powf(0.25)
            + j.apply(x)?.norm().powf(0.25)
            + j_tilde.adjoint_apply(x)?.norm().powf(0.25)
            + j_tilde.apply(x)?.norm().powf(0.25);
        if b_side > quarter_side + slack {
            return Err(Error::InequalityViolated {
                pair: k,
                lhs: b_side,
                rhs: quarter_side,
            });
        }
        if quarter_side > d_k + slack {
            return Err(Error::InequalityViolated {
                pair: k,
                lhs: quarter_side,
                rhs: d_k,
            });
        }
        rows.push(SchwarzRow {
            pair: k,
            b_side,
            quarter_side,
            d_k,
        });
    }
    Ok(SchwarzReport { rows, slack })
}

/// The two half-power sums (Σ s_n^{1/2}, Σ s̃_n^{1/2}) used as tail weights.
pub fn nuclear_budget(ss: &SchmidtSystem, ss_tilde: &SchmidtSystem) -> (f64, f64) {
    let sum = |s: &SchmidtSystem| s.values().iter().map(|v| v.sqrt()).sum();
    (sum(ss), sum(ss_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coord(dim: usize, n: usize) -> DVector<C64> {
        let mut v = DVector::<C64>::zeros(dim);
        v[n] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn apply_zero_identity_rank_one() {
        let dim = 4;
        let zero = OperatorSpec::from_matrix("0", DMatrix::zeros(dim, dim));
        let id = OperatorSpec::from_matrix("I", DMatrix::identity(dim, dim));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = synth::random_vector(&mut rng, dim);
        assert_eq!(zero.apply(&v).unwrap().norm(), 0.0);
        assert!((id.apply(&v).unwrap() - &v).norm() < 1e-15);

        // ⟨·, a⟩ b applied to a/‖a‖² gives b.
        let a = synth::random_vector(&mut rng, dim);
        let b = synth::random_vector(&mut rng, dim);
        let rank_one = OperatorSpec::from_matrix("ab", &b * a.adjoint());
        let image = rank_one
            .apply(&(&a / C64::new(a.norm() * a.norm(), 0.0)))
            .unwrap();
        assert!((image - &b).norm() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let op = OperatorSpec::from_matrix("I", DMatrix::identity(3, 3));
        let v = DVector::<C64>::zeros(4);
        assert!(matches!(op.apply(&v), Err(Error::DimensionMismatch(4, 3))));
    }

    #[test]
    fn norm_bound_is_validated() {
        let m = DMatrix::<C64>::identity(3, 3) * C64::new(2.0, 0.0);
        assert!(OperatorSpec::new("S", m.clone(), 2.0).is_ok());
        assert!(matches!(
            OperatorSpec::new("S", m, 1.0),
            Err(Error::NormBoundExceeded { .. })
        ));
    }

    #[test]
    fn decay_of_zero_family_is_zero() {
        let dim = 5;
        let zero = OperatorSpec::from_matrix("0", DMatrix::zeros(dim, dim));
        let e_seq: Vec<_> = (0..dim).map(|n| coord(dim, n)).collect();
        let fam = OperatorFamily::new(vec![zero], e_seq).unwrap();
        assert!(fam.decay().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn decay_of_diagonal_is_reciprocal() {
        let dim = 6;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for n in 0..dim {
            m[(n, n)] = C64::new(1.0 / (n as f64 + 1.0), 0.0);
        }
        let fam = OperatorFamily::new(
            vec![OperatorSpec::from_matrix("diag", m)],
            (0..dim).map(|n| coord(dim, n)).collect(),
        )
        .unwrap();
        for n in 0..dim {
            assert!((fam.decay()[n] - 1.0 / (n as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn doubled_member_dominates_decay() {
        let dim = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = synth::random_matrix(&mut rng, dim);
        let double = &s * C64::new(2.0, 0.0);
        let e_seq: Vec<_> = (0..dim).map(|n| coord(dim, n)).collect();
        let single =
            family_decay(&[OperatorSpec::from_matrix("2S", double.clone())], &e_seq).unwrap();
        let both = family_decay(
            &[
                OperatorSpec::from_matrix("S", s),
                OperatorSpec::from_matrix("2S", double),
            ],
            &e_seq,
        )
        .unwrap();
        for n in 0..dim {
            assert!((single[n] - both[n]).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_projection_and_full_projection() {
        let dim = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = OperatorSpec::from_matrix("S", synth::random_matrix(&mut rng, dim));
        let e_empty = project_onto(&[], dim).unwrap();
        let parts = split(&s, &e_empty).unwrap();
        assert_eq!(parts.j.spectral_norm(), 0.0);
        assert!((parts.q_tilde.matrix() - s.matrix()).norm() < 1e-15);

        let full: Vec<_> = (0..dim).map(|n| coord(dim, n)).collect();
        let e_full = project_onto(&full, dim).unwrap();
        let parts = split(&s, &e_full).unwrap();
        assert!(parts.q_tilde.spectral_norm() < 1e-12);
        assert!((parts.j.matrix() - s.matrix()).norm() < 1e-12);
    }

    #[test]
    fn rank_one_split_with_selected_source() {
        let dim = 5;
        let x1 = coord(dim, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y = synth::random_vector(&mut rng, dim);
        // S = ⟨·, x₁⟩ y has J = SE = S when x₁ is in the selected set.
        let s = OperatorSpec::from_matrix("S", &y * x1.adjoint());
        let e = project_onto(std::slice::from_ref(&x1), dim).unwrap();
        let parts = split(&s, &e).unwrap();
        assert!((parts.j.matrix() - s.matrix()).norm() < 1e-14);
        let id = DMatrix::<C64>::identity(dim, dim);
        let expected_qt = (&id - e.matrix()) * s.matrix();
        assert!((parts.q_tilde.matrix() - expected_qt).norm() < 1e-14);
    }

    #[test]
    fn split_recomposes() {
        let dim = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = OperatorSpec::from_matrix("S", synth::random_matrix(&mut rng, dim));
        let xs: Vec<_> = synth::random_orthonormal(&mut rng, dim, 4);
        let e = project_onto(&xs, dim).unwrap();
        let parts = split(&s, &e).unwrap();
        // S = Q̃ + J̃* and S* = Q + J*.
        let recomposed = parts.q_tilde.matrix() + parts.j_tilde.matrix().adjoint();
        let err = (recomposed - s.matrix()).norm();
        assert!(err <= 1e-12 * s.spectral_norm().max(1.0), "err = {err:e}");
        let recomposed_adj = parts.q.matrix() + parts.j.matrix().adjoint();
        assert!(
            (recomposed_adj - s.matrix().adjoint()).norm()
                <= 1e-12 * s.spectral_norm().max(1.0)
        );
    }

    #[test]
    fn schmidt_zero_and_diagonal() {
        let zero = OperatorSpec::from_matrix("0", DMatrix::zeros(3, 3));
        assert_eq!(schmidt(&zero).rank(), 0);

        let mut m = DMatrix::<C64>::zeros(3, 3);
        m[(0, 0)] = C64::new(3.0, 0.0);
        m[(1, 1)] = C64::new(1.0, 0.0);
        m[(2, 2)] = C64::new(2.0, 0.0);
        let ss = schmidt(&OperatorSpec::from_matrix("diag", m));
        assert_eq!(ss.values(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn schmidt_rank_one_value() {
        let dim = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = synth::random_vector(&mut rng, dim);
        let b = synth::random_vector(&mut rng, dim);
        let ss = schmidt(&OperatorSpec::from_matrix("ab", &b * a.adjoint()));
        assert_eq!(ss.rank(), 1);
        assert!((ss.values()[0] - a.norm() * b.norm()).abs() < 1e-12);
    }

    #[test]
    fn schmidt_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &dim in &[2usize, 7, 16, 33] {
            let m = synth::random_matrix(&mut rng, dim);
            let op = OperatorSpec::from_matrix("S", m.clone());
            let ss = schmidt(&op);
            let err = (ss.reconstruct() - &m).norm();
            assert!(err <= 1e-8 * op.spectral_norm(), "dim {dim}: err {err:e}");
            let dev_p = orthonormality_deviation(ss.right());
            let dev_q = orthonormality_deviation(ss.left());
            assert!(dev_p < 1e-10 && dev_q < 1e-10);
        }
    }

    #[test]
    fn quarter_power_values() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::new(16.0, 0.0);
        let ss = schmidt(&OperatorSpec::from_matrix("d", m));
        let b = quarter_power(&ss, "B");
        assert!((b.spectral_norm() - 2.0).abs() < 1e-12);

        let zero = schmidt(&OperatorSpec::from_matrix("0", DMatrix::zeros(2, 2)));
        assert_eq!(quarter_power(&zero, "B").spectral_norm(), 0.0);
    }

    #[test]
    fn quarter_power_twice_is_sixteenth_root() {
        let dim = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let op = OperatorSpec::from_matrix("S", synth::random_matrix(&mut rng, dim));
        let ss = schmidt(&op);
        let b = quarter_power(&ss, "B");
        let bb = quarter_power(&schmidt(&b), "BB");
        let ss_bb = schmidt(&bb);
        // Singular values must be s_n^{1/16}; compare as sorted sets.
        let mut expect: Vec<f64> = ss.values().iter().map(|s| s.powf(1.0 / 16.0)).collect();
        let mut got: Vec<f64> = ss_bb.values().to_vec();
        expect.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        assert_eq!(expect.len(), got.len());
        for (e, g) in expect.iter().zip(&got) {
            assert!((e - g).abs() < 1e-10, "{e} vs {g}");
        }
    }

    #[test]
    fn schwarz_chain_zero_operator() {
        let dim = 4;
        let zero = OperatorSpec::from_matrix("0", DMatrix::zeros(dim, dim));
        let xs = vec![coord(dim, 0), coord(dim, 1)];
        let report = schwarz_chain(&zero, &zero, &xs, &[0.5, 0.5]).unwrap();
        for row in &report.rows {
            assert_eq!(row.b_side, 0.0);
            assert_eq!(row.quarter_side, 0.0);
        }
    }

    #[test]
    fn schwarz_chain_rank_one_equality() {
        // J rank one with s₁ = 1 and x₁ = p₁ = q₁: both sides equal 2 when
        // J̃ vanishes.
        let dim = 3;
        let x1 = coord(dim, 0);
        let j = OperatorSpec::from_matrix("J", &x1 * x1.adjoint());
        let zero = OperatorSpec::from_matrix("0", DMatrix::zeros(dim, dim));
        let report = schwarz_chain(&j, &zero, std::slice::from_ref(&x1), &[2.0]).unwrap();
        assert!((report.rows[0].b_side - 2.0).abs() < 1e-12);
        assert!((report.rows[0].quarter_side - 2.0).abs() < 1e-12);
    }

    #[test]
    fn schwarz_chain_detects_violation() {
        let dim = 3;
        let x1 = coord(dim, 0);
        let j = OperatorSpec::from_matrix("J", &x1 * x1.adjoint());
        let zero = OperatorSpec::from_matrix("0", DMatrix::zeros(dim, dim));
        // d_k declared too small: the chain must flag the selection.
        assert!(matches!(
            schwarz_chain(&j, &zero, std::slice::from_ref(&x1), &[1.0]),
            Err(Error::InequalityViolated { pair: 0, .. })
        ));
    }

    #[test]
    fn b_side_matches_eighth_power_route() {
        // ‖Bx‖ = ‖(J*J)^{1/8} x‖ and ‖B*x‖ = ‖(JJ*)^{1/8} x‖: two
        // independent formulas for the same quantity.
        let dim = 9;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let m = synth::random_rank_matrix(&mut rng, dim, 5);
        let j = OperatorSpec::from_matrix("J", m.clone());
        let ss = schmidt(&j);
        let b = quarter_power(&ss, "B");
        let jj = OperatorSpec::from_matrix("J*J", m.adjoint() * &m);
        let jj_ss = schmidt(&jj);
        let jjs = OperatorSpec::from_matrix("JJ*", &m * m.adjoint());
        let jjs_ss = schmidt(&jjs);
        for seed in 0..5 {
            let x = synth::random_unit_vector(&mut ChaCha8Rng::seed_from_u64(seed), dim);
            let via_b = b.apply(&x).unwrap().norm();
            let via_power = jj_ss.apply_power(&x, 0.125).unwrap().norm();
            assert!((via_b - via_power).abs() < 1e-10, "{via_b} vs {via_power}");
            let via_b_adj = b.adjoint_apply(&x).unwrap().norm();
            let via_power_adj = jjs_ss.apply_power(&x, 0.125).unwrap().norm();
            assert!((via_b_adj - via_power_adj).abs() < 1e-10);
        }
    }

    #[test]
    fn nuclear_budget_values() {
        let empty = schmidt(&OperatorSpec::from_matrix("0", DMatrix::zeros(2, 2)));
        assert_eq!(nuclear_budget(&empty, &empty), (0.0, 0.0));

        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::new(4.0, 0.0);
        m[(1, 1)] = C64::new(1.0, 0.0);
        let ss = schmidt(&OperatorSpec::from_matrix("d", m));
        let (sum, _) = nuclear_budget(&ss, &empty);
        assert!((sum - 3.0).abs() < 1e-14);

        // Brute-force over the retained triples.
        let brute: f64 = ss.values().iter().map(|s| s.sqrt()).sum();
        assert_eq!(sum, brute);
    }

    #[test]
    fn adjoint_consistency() {
        let dim = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let op = OperatorSpec::from_matrix("S", synth::random_matrix(&mut rng, dim));
        let v = synth::random_vector(&mut rng, dim);
        let a = op.adjoint().apply(&v).unwrap();
        let b = op.adjoint_apply(&v).unwrap();
        assert!((a - b).norm() < 1e-13);
    }
}
