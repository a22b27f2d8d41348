//! The smoothing unitary and the separable kernel series it induces.
//!
//! The unitary sends the selected vectors onto the gentle atoms and the
//! completion onto the decaying atoms; conjugating a family member and
//! expanding the two split pieces yields the kernel as a finite list of
//! separable terms over the used atoms, with tail bounds for everything
//! that was not materialized.

use crate::basis::{atom_value, BasisEnumeration};
use crate::error::{Error, Result};
use crate::operator::{project_onto, quarter_power, schmidt, split, OperatorSpec, SchmidtSystem};
use crate::pairing::PairingPlan;
use crate::wavelet::{C64, MotherWavelet};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Change of basis from ambient coordinates to atom coefficients.
///
/// Row r of the matrix is f_r^H, so applying it to an ambient vector yields
/// its coefficients over the used atoms: the first `pair_count` slots carry
/// the g atoms, the rest the h atoms.
#[derive(Debug, Clone)]
pub struct UnitaryMap {
    used_atoms: Vec<usize>,
    used_pairs: Vec<(i32, i32)>,
    pair_count: usize,
    matrix: DMatrix<C64>,
}

impl UnitaryMap {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn pair_count(&self) -> usize {
        self.pair_count
    }

    /// Enumeration indices of the atoms backing each slot.
    pub fn used_atoms(&self) -> &[usize] {
        &self.used_atoms
    }

    /// (j, k) of the atom backing each slot.
    pub fn used_pairs(&self) -> &[(i32, i32)] {
        &self.used_pairs
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Atom coefficients of an ambient vector.
    pub fn forward(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(v.len(), self.dim()));
        }
        Ok(&self.matrix * v)
    }

    /// Ambient vector from atom coefficients.
    pub fn backward(&self, coefficients: &DVector<C64>) -> Result<DVector<C64>> {
        if coefficients.len() != self.dim() {
            return Err(Error::DimensionMismatch(coefficients.len(), self.dim()));
        }
        Ok(self.matrix.adjoint() * coefficients)
    }
}

/// Build the unitary from a pairing plan: x_k ↦ g_k, y_k ↦ h_k.
pub fn build_unitary(plan: &PairingPlan, e: &BasisEnumeration) -> Result<UnitaryMap> {
    let dim = plan.dim();
    let pairs = plan.pair_count();
    if plan.h_count() != dim - pairs {
        return Err(Error::RankDeficientPlan(format!(
            "{} completion slots against {} decaying atoms",
            dim - pairs,
            plan.h_count()
        )));
    }
    if plan.g_idx.len() < pairs {
        return Err(Error::RankDeficientPlan(format!(
            "{} gentle atoms for {} pairs",
            plan.g_idx.len(),
            pairs
        )));
    }
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    for (slot, x) in plan.x_vecs.iter().enumerate() {
        matrix.set_row(slot, &x.adjoint());
    }
    for (offset, y) in plan.y_vecs.iter().enumerate() {
        matrix.set_row(pairs + offset, &y.adjoint());
    }
    let identity = DMatrix::<C64>::identity(dim, dim);
    let defect = (&matrix * matrix.adjoint() - &identity).camax();
    if defect > 1e-10 {
        return Err(Error::RankDeficientPlan(format!(
            "selected vectors and completion miss unitarity by {defect:e}"
        )));
    }
    let used_atoms: Vec<usize> = plan.g_idx[..pairs]
        .iter()
        .chain(plan.h_idx.iter())
        .copied()
        .collect();
    let used_pairs = used_atoms
        .iter()
        .map(|&n| e.pair(n))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnitaryMap {
        used_atoms,
        used_pairs,
        pair_count: pairs,
        matrix,
    })
}

/// T = U S U⁻¹ in atom coordinates.
pub fn conjugate(op: &OperatorSpec, u: &UnitaryMap) -> Result<OperatorSpec> {
    if op.dim() != u.dim() {
        return Err(Error::DimensionMismatch(op.dim(), u.dim()));
    }
    let conjugated = &u.matrix * op.matrix() * u.matrix.adjoint();
    OperatorSpec::new(
        format!("T[{}]", op.label()),
        conjugated,
        op.norm_bound() * (1.0 + 1e-9),
    )
}

/// Atom coefficients of the image of an ambient vector (Fourier expansion
/// of U v over the used atoms).
pub fn expand_image(u: &UnitaryMap, v: &DVector<C64>) -> Result<DVector<C64>> {
    u.forward(v)
}

/// Which half of the kernel a separable term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermPart {
    /// Projection series over the decaying atoms.
    Projection,
    /// Schmidt series of the nuclear piece.
    Schmidt,
}

/// One separable term c · φ(s) · conj(ψ(t)), both factors finite atom
/// expansions over the kernel's slot list.
#[derive(Debug, Clone)]
pub struct KernelTerm {
    pub coeff: C64,
    pub left: DVector<C64>,
    pub right: DVector<C64>,
    pub part: TermPart,
}

/// Kernel as a fixed-order list of separable terms.
#[derive(Debug, Clone)]
pub struct SmoothKernel {
    used_pairs: Vec<(i32, i32)>,
    terms: Vec<KernelTerm>,
    m_max: usize,
}

impl SmoothKernel {
    pub fn empty(m_max: usize) -> Self {
        SmoothKernel {
            used_pairs: Vec::new(),
            terms: Vec::new(),
            m_max,
        }
    }

    pub fn used_pairs(&self) -> &[(i32, i32)] {
        &self.used_pairs
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn slot_count(&self) -> usize {
        self.used_pairs.len()
    }

    /// Values of every slot atom at one point.
    pub fn atom_values(&self, mother: &MotherWavelet, s: f64, order: usize) -> Result<DVector<C64>> {
        let values = self
            .used_pairs
            .iter()
            .map(|&(j, k)| atom_value(mother, j, k, s, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(values))
    }

    /// ∂^{(i,j)} K(s, t) as the termwise sum in fixed order.
    pub fn eval(
        &self,
        mother: &MotherWavelet,
        s: f64,
        t: f64,
        orders: (usize, usize),
    ) -> Result<C64> {
        self.check_orders(orders)?;
        if self.terms.is_empty() {
            return Ok(C64::new(0.0, 0.0));
        }
        let a_s = self.atom_values(mother, s, orders.0)?;
        let a_t = self.atom_values(mother, t, orders.1)?;
        Ok(self.eval_with_atom_values(&a_s, &a_t))
    }

    /// Same sum with precomputed atom value vectors.
    pub fn eval_with_atom_values(&self, a_s: &DVector<C64>, a_t: &DVector<C64>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for term in &self.terms {
            let phi = term.left.dot(a_s);
            let psi = term.right.dot(a_t);
            acc += term.coeff * phi * psi.conj();
        }
        acc
    }

    /// Kernel values on a grid, derivative orders (i, j); rows follow
    /// `s_grid`, columns `t_grid`.
    pub fn eval_grid(
        &self,
        mother: &MotherWavelet,
        s_grid: &[f64],
        t_grid: &[f64],
        orders: (usize, usize),
    ) -> Result<DMatrix<C64>> {
        self.check_orders(orders)?;
        if self.terms.is_empty() || self.used_pairs.is_empty() {
            return Ok(DMatrix::zeros(s_grid.len(), t_grid.len()));
        }
        let a_s = self.atom_matrix(mother, s_grid, orders.0)?;
        let a_t = self.atom_matrix(mother, t_grid, orders.1)?;
        let rows = self.terms.len();
        let slots = self.slot_count();
        let mut left = DMatrix::<C64>::zeros(rows, slots);
        let mut right = DMatrix::<C64>::zeros(rows, slots);
        for (r, term) in self.terms.iter().enumerate() {
            left.set_row(r, &term.left.transpose());
            right.set_row(r, &term.right.transpose());
        }
        // K = Φᵀ diag(c) conj(Ψ) with Φ = L·A_s, Ψ = R·A_t.
        let mut phi = left * &a_s;
        let psi = right * &a_t;
        for (r, term) in self.terms.iter().enumerate() {
            let mut row = phi.row_mut(r);
            row *= term.coeff;
        }
        Ok(phi.transpose() * psi.map(|z| z.conj()))
    }

    /// Slot-value matrix (slots × points).
    pub fn atom_matrix(
        &self,
        mother: &MotherWavelet,
        points: &[f64],
        order: usize,
    ) -> Result<DMatrix<C64>> {
        let columns: Vec<Vec<C64>> = points
            .par_iter()
            .map(|&p| {
                self.used_pairs
                    .iter()
                    .map(|&(j, k)| atom_value(mother, j, k, p, order))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut m = DMatrix::<C64>::zeros(self.slot_count(), points.len());
        for (c, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        Ok(m)
    }

    /// Coefficient vector of the Carleman section k^(i)(s) = conj of the
    /// s-section: Σ_r conj(c_r) conj(φ_r^(i)(s)) ψ_r. Its ℓ² norm equals
    /// the L² norm of the section by Parseval over the atom basis.
    pub fn carleman_section(
        &self,
        mother: &MotherWavelet,
        s: f64,
        order: usize,
    ) -> Result<DVector<C64>> {
        self.check_orders((order, 0))?;
        let mut out = DVector::<C64>::zeros(self.slot_count());
        if self.terms.is_empty() {
            return Ok(out);
        }
        let a_s = self.atom_values(mother, s, order)?;
        for term in &self.terms {
            let phi = term.left.dot(&a_s);
            out += &term.right * (term.coeff * phi).conj();
        }
        Ok(out)
    }

    /// Apply the term list to atom coefficients by Parseval inner products:
    /// (K f)_coefficients = Σ_r c_r ⟨f, ψ_r⟩ φ_r.
    pub fn apply_coefficients(&self, f: &DVector<C64>) -> Result<DVector<C64>> {
        if f.len() != self.slot_count() {
            return Err(Error::DimensionMismatch(f.len(), self.slot_count()));
        }
        let mut out = DVector::<C64>::zeros(self.slot_count());
        for term in &self.terms {
            // ⟨f, ψ_r⟩ = Σ_m f_m conj(ψ_{r,m}) = ψ_r^H f.
            let inner = term.right.dotc(f);
            out += &term.left * (term.coeff * inner);
        }
        Ok(out)
    }

    fn check_orders(&self, orders: (usize, usize)) -> Result<()> {
        for order in [orders.0, orders.1] {
            if order > self.m_max {
                return Err(Error::OrderExceeded {
                    order,
                    m_max: self.m_max,
                });
            }
        }
        Ok(())
    }
}

/// Everything dropped or left beyond the section, as certified upper
/// bounds: geometric envelopes for the pair and scale tails, exact sums for
/// the dropped Schmidt terms.
#[derive(Debug, Clone)]
pub struct TruncationReport {
    pub pair_count: usize,
    pub h_count: usize,
    pub svd_rank_full: usize,
    pub svd_rank_kept: usize,
    pub adj_rank_full: usize,
    pub adj_rank_kept: usize,
    /// Σ_{k>K} d_k G_{k,i} envelope, per order.
    pub tail_dg: Vec<f64>,
    /// Σ_{k>K_h} 2‖S‖ H_{k,i} envelope, per order.
    pub tail_sh: Vec<f64>,
    /// Σ over dropped n of s̃_n^{1/2}.
    pub svd_tail_half: f64,
    pub svd_tail_half_adj: f64,
    /// Σ over dropped n of s̃_n; bounds the coefficient-space action
    /// residual of the kernel.
    pub dropped_sum: f64,
    pub dropped_sum_adj: f64,
    /// Uniform bound on the kernel error and its derivatives through each
    /// order; non-decreasing in the order.
    pub uniform_bound: Vec<f64>,
    /// Worst termwise gap between the direct Schmidt form and the
    /// quarter-power form, both sides.
    pub two_form_max: f64,
}

impl TruncationReport {
    /// Bound on ‖T f − K f‖ in coefficient space.
    pub fn action_bound(&self) -> f64 {
        self.dropped_sum
    }

    pub fn action_bound_adjoint(&self) -> f64 {
        self.dropped_sum_adj
    }
}

/// Assemble K = P̃ + F̃ and K̃ = P + F for one operator under the unitary.
///
/// The Schmidt halves are built in the direct SVD form; the quarter-power
/// form is computed independently and compared termwise as a consistency
/// check on the auxiliary-operator algebra.
pub fn synthesize_kernel(
    op: &OperatorSpec,
    u: &UnitaryMap,
    plan: &PairingPlan,
    e: &BasisEnumeration,
    mother: &MotherWavelet,
    rank_cap: usize,
) -> Result<(SmoothKernel, SmoothKernel, TruncationReport)> {
    let dim = op.dim();
    if dim != u.dim() || dim != plan.dim() {
        return Err(Error::DimensionMismatch(dim, u.dim()));
    }
    if u.pair_count() != plan.pair_count() || plan.h_count() != dim - plan.pair_count() {
        return Err(Error::InconsistentPlan(
            "unitary and plan disagree on the pairing".into(),
        ));
    }
    let m_max = mother.m_max();
    let pairs = plan.pair_count();

    let projector = project_onto(&plan.x_vecs, dim)?;
    let parts = split(op, &projector)?;
    let ss_tilde = schmidt(&parts.j_tilde);
    let ss = schmidt(&parts.j);

    // Dominance of the expansion coefficients: |⟨y_k, S f_n⟩| ≤ ‖S f_n‖.
    let mut f_norms_fwd = Vec::with_capacity(dim);
    let mut f_norms_adj = Vec::with_capacity(dim);
    for slot in 0..dim {
        let f_vec = u.matrix().row(slot).transpose().map(|z| z.conj());
        f_norms_fwd.push(op.apply(&f_vec)?.norm());
        f_norms_adj.push(op.adjoint_apply(&f_vec)?.norm());
    }

    let mut k_terms = Vec::with_capacity(plan.h_count() + rank_cap);
    let mut k_adj_terms = Vec::with_capacity(plan.h_count() + rank_cap);
    for (offset, y) in plan.y_vecs.iter().enumerate() {
        let slot = pairs + offset;
        let mut left = DVector::<C64>::zeros(dim);
        left[slot] = C64::new(1.0, 0.0);
        let right_k = u.forward(&op.adjoint_apply(y)?)?;
        let right_k_adj = u.forward(&op.apply(y)?)?;
        for n in 0..dim {
            if right_k_adj[n].norm() > f_norms_adj[n] + 1e-12
                || right_k[n].norm() > f_norms_fwd[n] + 1e-12
            {
                return Err(Error::BoundViolated {
                    what: format!("expansion coefficient dominance at slot {n}"),
                    measured: right_k[n].norm().max(right_k_adj[n].norm()),
                    bound: f_norms_fwd[n].max(f_norms_adj[n]),
                });
            }
        }
        k_terms.push(KernelTerm {
            coeff: C64::new(1.0, 0.0),
            left: left.clone(),
            right: right_k,
            part: TermPart::Projection,
        });
        k_adj_terms.push(KernelTerm {
            coeff: C64::new(1.0, 0.0),
            left,
            right: right_k_adj,
            part: TermPart::Projection,
        });
    }

    let kept_tilde = ss_tilde.rank().min(rank_cap);
    let kept = ss.rank().min(rank_cap);
    let b_tilde = quarter_power(&ss_tilde, "B~");
    let b = quarter_power(&ss, "B");
    let mut two_form_max = 0.0f64;
    for n in 0..kept_tilde {
        let term = schmidt_term(u, &ss_tilde, n)?;
        two_form_max = two_form_max.max(two_form_gap(u, &ss_tilde, &b_tilde, n, &term)?);
        k_terms.push(term);
    }
    for n in 0..kept {
        let term = schmidt_term(u, &ss, n)?;
        two_form_max = two_form_max.max(two_form_gap(u, &ss, &b, n, &term)?);
        k_adj_terms.push(term);
    }
    if two_form_max > 1e-10 {
        return Err(Error::BoundViolated {
            what: "direct and quarter-power Schmidt forms disagree".into(),
            measured: two_form_max,
            bound: 1e-10,
        });
    }

    let (d_bounds, a_bounds) = e.bound_tables(mother, m_max)?;
    let slot_da: Vec<f64> = u.used_atoms().iter().map(|&n| d_bounds[n]).collect();
    let dropped_uniform = |ss: &SchmidtSystem, kept: usize, order: usize| -> Result<f64> {
        let mut total = 0.0;
        for n in kept..ss.rank() {
            let lc = u.forward(&ss.right()[n])?;
            let rc = u.forward(&ss.left()[n])?;
            let sup = |v: &DVector<C64>| -> f64 {
                v.iter()
                    .zip(&slot_da)
                    .map(|(c, da)| c.norm() * da * a_bounds[order])
                    .sum()
            };
            total += ss.values()[n] * sup(&lc) * sup(&rc);
        }
        Ok(total)
    };

    let mut tail_dg = Vec::with_capacity(m_max + 1);
    let mut tail_sh = Vec::with_capacity(m_max + 1);
    let mut uniform = Vec::with_capacity(m_max + 1);
    let norm = op.spectral_norm();
    for i in 0..=m_max {
        // Greedy envelope: d_k (G_{k,i}+1) ≤ 2^{−k} beyond the selected K.
        tail_dg.push(plan.budgets.dg_tail);
        tail_sh.push(2.0 * norm * plan.budgets.h_tail[i]);
        let dropped =
            dropped_uniform(&ss_tilde, kept_tilde, i)?.max(dropped_uniform(&ss, kept, i)?);
        uniform.push(tail_dg[i] + tail_sh[i] + dropped);
    }
    for i in 1..=m_max {
        uniform[i] = uniform[i].max(uniform[i - 1]);
    }

    let dropped_half = |ss: &SchmidtSystem, kept: usize| {
        ss.values()[kept..].iter().map(|s| s.sqrt()).sum::<f64>()
    };
    let dropped_sum = |ss: &SchmidtSystem, kept: usize| ss.values()[kept..].iter().sum::<f64>();

    let report = TruncationReport {
        pair_count: pairs,
        h_count: plan.h_count(),
        svd_rank_full: ss_tilde.rank(),
        svd_rank_kept: kept_tilde,
        adj_rank_full: ss.rank(),
        adj_rank_kept: kept,
        tail_dg,
        tail_sh,
        svd_tail_half: dropped_half(&ss_tilde, kept_tilde),
        svd_tail_half_adj: dropped_half(&ss, kept),
        dropped_sum: dropped_sum(&ss_tilde, kept_tilde),
        dropped_sum_adj: dropped_sum(&ss, kept),
        uniform_bound: uniform,
        two_form_max,
    };

    let kernel = SmoothKernel {
        used_pairs: u.used_pairs().to_vec(),
        terms: k_terms,
        m_max,
    };
    let kernel_adj = SmoothKernel {
        used_pairs: u.used_pairs().to_vec(),
        terms: k_adj_terms,
        m_max,
    };
    Ok((kernel, kernel_adj, report))
}

/// Direct-form Schmidt term s_n · [U p_n](s) · conj([U q_n](t)).
fn schmidt_term(u: &UnitaryMap, ss: &SchmidtSystem, n: usize) -> Result<KernelTerm> {
    Ok(KernelTerm {
        coeff: C64::new(ss.values()[n], 0.0),
        left: u.forward(&ss.right()[n])?,
        right: u.forward(&ss.left()[n])?,
        part: TermPart::Schmidt,
    })
}

/// Max slot-pair difference between the direct term and the quarter-power
/// form s_n^{1/2} [U B* q_n](s) conj([U B p_n](t)).
fn two_form_gap(
    u: &UnitaryMap,
    ss: &SchmidtSystem,
    b: &OperatorSpec,
    n: usize,
    direct: &KernelTerm,
) -> Result<f64> {
    let half = C64::new(ss.values()[n].sqrt(), 0.0);
    let left = u.forward(&b.adjoint_apply(&ss.left()[n])?)?;
    let right = u.forward(&b.apply(&ss.right()[n])?)?;
    let dim = left.len();
    let mut worst = 0.0f64;
    for a in 0..dim {
        for c in 0..dim {
            let direct_entry = direct.coeff * direct.left[a] * direct.right[c].conj();
            let form_entry = half * left[a] * right[c].conj();
            worst = worst.max((direct_entry - form_entry).norm());
        }
    }
    Ok(worst)
}
