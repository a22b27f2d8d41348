//! Pairing of the two bases: decaying atoms h, remaining atoms g, selected
//! sequence members x, orthonormal completion y, and the summability
//! budgets that certify the construction.

use crate::basis::BasisEnumeration;
use crate::error::{Error, Result};
use crate::operator::{orthonormality_deviation, pairing_weight, OperatorFamily};
use crate::wavelet::{C64, MotherWavelet};
use nalgebra::DVector;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Summability budgets with their geometric tail estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanBudgets {
    /// Σ_k d_k (G_{k,i} + 1) over the selected pairs, per derivative order.
    pub dg_sums: Vec<f64>,
    /// Σ_k H_{k,i} over the h atoms, per derivative order.
    pub h_sums: Vec<f64>,
    /// Tail of the d·G budget beyond the selected pairs (greedy envelope).
    pub dg_tail: f64,
    /// Tail of the H budget beyond the materialized scales, per order.
    pub h_tail: Vec<f64>,
    /// Declared cap on every dg sum.
    pub declared_dg: f64,
    /// Declared caps on the H sums, per order.
    pub declared_h: Vec<f64>,
}

/// The full Step-1 outcome: index split, selected vectors, completion,
/// sup-norm tables and certified budgets.
#[derive(Debug, Clone)]
pub struct PairingPlan {
    /// Atom indices assigned to h, pair order (scales marching down).
    pub h_idx: Vec<usize>,
    /// Remaining window indices in enumeration order.
    pub g_idx: Vec<usize>,
    /// Positions in the e-sequence of the selected x vectors.
    pub x_src: Vec<usize>,
    pub x_vecs: Vec<DVector<C64>>,
    /// d_k = 2(sup_α ‖S_α x_k‖^{1/4} + sup_α ‖S_α* x_k‖^{1/4}).
    pub d: Vec<f64>,
    pub y_vecs: Vec<DVector<C64>>,
    /// G_{k,i} = ‖[g_k]^(i)‖_∞ over the whole g list.
    pub g_table: Vec<Vec<f64>>,
    /// H_{k,i} = ‖[h_k]^(i)‖_∞.
    pub h_table: Vec<Vec<f64>>,
    pub m_max: usize,
    pub budgets: PlanBudgets,
}

impl PairingPlan {
    pub fn pair_count(&self) -> usize {
        self.x_vecs.len()
    }

    pub fn h_count(&self) -> usize {
        self.h_idx.len()
    }

    pub fn dim(&self) -> usize {
        self.x_vecs.first().map(|v| v.len()).unwrap_or(0)
    }

    /// Machine-check of every plan invariant.
    pub fn check_invariants(&self) -> Result<()> {
        for n in &self.h_idx {
            if self.g_idx.contains(n) {
                return Err(Error::InconsistentPlan(format!(
                    "atom {n} appears in both g and h"
                )));
            }
        }
        for (k, &dk) in self.d.iter().enumerate() {
            if dk > 1.0 {
                return Err(Error::InequalityViolated {
                    pair: k,
                    lhs: dk,
                    rhs: 1.0,
                });
            }
        }
        for i in 0..=self.m_max {
            if self.budgets.dg_sums[i] > self.budgets.declared_dg {
                return Err(Error::BoundViolated {
                    what: format!("d(G+1) budget at order {i}"),
                    measured: self.budgets.dg_sums[i],
                    bound: self.budgets.declared_dg,
                });
            }
            if self.budgets.h_sums[i] > self.budgets.declared_h[i] {
                return Err(Error::BoundViolated {
                    what: format!("H budget at order {i}"),
                    measured: self.budgets.h_sums[i],
                    bound: self.budgets.declared_h[i],
                });
            }
        }
        let mut all = self.x_vecs.clone();
        all.extend(self.y_vecs.iter().cloned());
        let dev = orthonormality_deviation(&all);
        if dev > 1e-10 {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(())
    }
}

/// Pick one atom per scale j₀, j₀−1, …, translate 0, so that Σ D_{n_k} is a
/// geometric series with ratio 1/√2.
pub fn select_h(e: &BasisEnumeration, count: usize, start_scale: i32) -> Result<Vec<usize>> {
    let (j_min, _) = e.j_range();
    let mut picked = Vec::with_capacity(count);
    for step in 0..count {
        let j = start_scale - step as i32;
        let n = e.index_of(j, 0).ok_or(Error::WindowExhausted {
            needed: j,
            j_min,
        })?;
        picked.push(n);
    }
    if picked.len() >= e.len() {
        return Err(Error::WindowExhausted {
            needed: start_scale - count as i32,
            j_min,
        });
    }
    Ok(picked)
}

/// Geometric tail Σ D over the scales below `next_scale` (inclusive),
/// translate 0.
pub fn d_tail_from(next_scale: i32) -> f64 {
    assert!(next_scale <= 0, "h scales march downward from the base");
    SQRT_HALF.powi(next_scale.abs()) / (1.0 - SQRT_HALF)
}

/// Sup-norm table ‖[u_n]^(i)‖_∞ for the listed atoms, one row per atom,
/// columns i = 0..=m_max.
///
/// The sup over the whole line equals the dilation factor times the cached
/// mother sup (the dilation is a bijection); each entry is cross-checked
/// against the closed bound D_n·A_i.
pub fn norm_tables(
    e: &BasisEnumeration,
    mother: &MotherWavelet,
    indices: &[usize],
    m_max: usize,
) -> Result<Vec<Vec<f64>>> {
    let (d, a) = e.bound_tables(mother, m_max)?;
    indices
        .iter()
        .map(|&n| {
            (0..=m_max)
                .map(|i| {
                    let sup = e.atom_sup(mother, n, i)?;
                    let cap = d[n] * a[i];
                    if sup > cap * (1.0 + 1e-8) {
                        return Err(Error::BoundViolated {
                            what: format!("sup-norm of atom {n} at order {i}"),
                            measured: sup,
                            bound: cap,
                        });
                    }
                    Ok(sup)
                })
                .collect()
        })
        .collect()
}

/// Greedy scan over the e-sequence: accept e_n as x_k once
/// d·(max_i G_{k,i} + 1) ≤ 2^{−k} and d ≤ 1; accepted vectors leave the
/// pool.
pub fn select_x(
    family: &OperatorFamily,
    g_table: &[Vec<f64>],
    m_max: usize,
    pairs: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut taken = vec![false; family.e_seq().len()];
    let mut src = Vec::with_capacity(pairs);
    let mut d = Vec::with_capacity(pairs);
    for k in 1..=pairs {
        let g_max = g_table
            .get(k - 1)
            .map(|row| row[..=m_max].iter().cloned().fold(0.0, f64::max))
            .ok_or_else(|| {
                Error::InconsistentPlan(format!("g table has no row for pair {k}"))
            })?;
        let threshold = (-(k as f64)).exp2() / (g_max + 1.0);
        let mut found = None;
        for (n, e_n) in family.e_seq().iter().enumerate() {
            if taken[n] {
                continue;
            }
            let weight = pairing_weight(family.members(), e_n)?;
            if weight <= 1.0 && weight <= threshold {
                found = Some((n, weight));
                break;
            }
        }
        match found {
            Some((n, weight)) => {
                taken[n] = true;
                src.push(n);
                d.push(weight);
            }
            None => {
                return Err(Error::InsufficientDecay {
                    pair: k,
                    threshold,
                });
            }
        }
    }
    Ok((src, d))
}

/// Pivoted orthonormalization of the coordinate vectors against `x_vecs`,
/// dropping candidates whose residual falls below 1e-6.
pub fn complete_y(x_vecs: &[DVector<C64>], dim: usize) -> Vec<DVector<C64>> {
    let mut candidates: Vec<DVector<C64>> = (0..dim)
        .map(|n| {
            let mut v = DVector::<C64>::zeros(dim);
            v[n] = C64::new(1.0, 0.0);
            v
        })
        .collect();
    for x in x_vecs {
        for c in candidates.iter_mut() {
            let proj = x.dotc(c);
            *c -= x * proj;
        }
    }
    let mut ys: Vec<DVector<C64>> = Vec::with_capacity(dim.saturating_sub(x_vecs.len()));
    let mut alive: Vec<usize> = (0..dim).collect();
    while !alive.is_empty() {
        // Pivot on the largest residual; ties go to the earliest
        // coordinate so the most significant directions take the earliest
        // completion slots.
        let mut pos = 0;
        for (idx, &cand) in alive.iter().enumerate() {
            if candidates[cand].norm() > candidates[alive[pos]].norm() {
                pos = idx;
            }
        }
        let best = alive[pos];
        let norm = candidates[best].norm();
        if norm < 1e-6 {
            break;
        }
        let y = &candidates[best] / C64::new(norm, 0.0);
        for &idx in &alive {
            if idx == best {
                continue;
            }
            let proj = y.dotc(&candidates[idx]);
            candidates[idx] -= &y * proj;
        }
        ys.push(y);
        alive.remove(pos);
    }
    ys
}

/// Assemble and certify the whole pairing plan.
///
/// `h_count` is the number of decaying atoms (the unitary pairs them with
/// the completion, so callers pass section dim − pairs), `declared_dg` and
/// `declared_h_factor` are the budget caps from the configuration.
#[allow(clippy::too_many_arguments)]
pub fn build_plan(
    family: &OperatorFamily,
    e: &BasisEnumeration,
    mother: &MotherWavelet,
    pairs: usize,
    h_count: usize,
    start_scale: i32,
    declared_dg: f64,
    declared_h_factor: f64,
) -> Result<PairingPlan> {
    let m_max = mother.m_max();
    let h_idx = select_h(e, h_count, start_scale)?;
    let h_set: std::collections::HashSet<usize> = h_idx.iter().copied().collect();
    let g_idx: Vec<usize> = (0..e.len()).filter(|n| !h_set.contains(n)).collect();
    if g_idx.len() < pairs {
        return Err(Error::WindowExhausted {
            needed: start_scale,
            j_min: e.j_range().0,
        });
    }
    let g_table = norm_tables(e, mother, &g_idx, m_max)?;
    let h_table = norm_tables(e, mother, &h_idx, m_max)?;
    let (x_src, d) = select_x(family, &g_table, m_max, pairs)?;
    let x_vecs: Vec<DVector<C64>> = x_src.iter().map(|&n| family.e_seq()[n].clone()).collect();
    let y_vecs = complete_y(&x_vecs, family.dim());

    let (_, a) = e.bound_tables(mother, m_max)?;
    let mut dg_sums = vec![0.0; m_max + 1];
    let mut h_sums = vec![0.0; m_max + 1];
    for i in 0..=m_max {
        for (k, &dk) in d.iter().enumerate() {
            dg_sums[i] += dk * (g_table[k][i] + 1.0);
        }
        for row in &h_table {
            h_sums[i] += row[i];
        }
    }
    let next_scale = start_scale - h_count as i32;
    let budgets = PlanBudgets {
        dg_sums,
        h_sums,
        dg_tail: (-(pairs as f64)).exp2(),
        h_tail: a.iter().map(|&ai| ai * d_tail_from(next_scale)).collect(),
        declared_dg,
        declared_h: a.iter().map(|&ai| ai * declared_h_factor).collect(),
    };
    let plan = PairingPlan {
        h_idx,
        g_idx,
        x_src,
        x_vecs,
        d,
        y_vecs,
        g_table,
        h_table,
        m_max,
        budgets,
    };
    plan.check_invariants()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{d_weight, grid_sup};
    use crate::bell::{make_bell, TransitionKind};
    use crate::operator::OperatorSpec;
    use crate::synth;
    use crate::wavelet::QuadratureSpec;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn mother() -> &'static MotherWavelet {
        static MOTHER: OnceLock<MotherWavelet> = OnceLock::new();
        MOTHER.get_or_init(|| {
            MotherWavelet::new(
                make_bell(TransitionKind::SmoothExponential),
                QuadratureSpec::default(),
                3,
                40.0,
                45.0,
            )
        })
    }

    fn diag_family(dim: usize, decay: impl Fn(usize) -> f64) -> OperatorFamily {
        let m = DMatrix::<C64>::from_fn(dim, dim, |r, c| {
            if r == c {
                C64::new(decay(r), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        OperatorFamily::new(
            vec![OperatorSpec::from_matrix("diag", m)],
            synth::coordinate_sequence(dim),
        )
        .unwrap()
    }

    #[test]
    fn select_h_geometric_sums() {
        let e = BasisEnumeration::new((-6, 2), (-2, 2)).unwrap();
        let picked = select_h(&e, 3, 0).unwrap();
        let d_sum: f64 = picked.iter().map(|&n| d_weight(e.pair(n).unwrap().0)).sum();
        let expect = 1.0 + SQRT_HALF + 0.5;
        assert!((d_sum - expect).abs() < 1e-14);

        let single = select_h(&e, 1, 0).unwrap();
        assert_eq!(d_weight(e.pair(single[0]).unwrap().0), 1.0);
    }

    #[test]
    fn select_h_tail_bound_is_geometric() {
        // After K terms starting at j₀ ≤ 0 the tail is (1/√2)^{|j₀|+K}/(1−1/√2).
        let j0 = 0i32;
        let k = 3usize;
        let tail = d_tail_from(j0 - k as i32);
        let expect = SQRT_HALF.powi(j0.abs() + k as i32) / (1.0 - SQRT_HALF);
        assert!((tail - expect).abs() < 1e-14);
        // The tail really bounds the continued sum.
        let brute: f64 = (0..200)
            .map(|m| SQRT_HALF.powi(j0.abs() + k as i32 + m))
            .sum();
        assert!(brute <= tail + 1e-12);
    }

    #[test]
    fn select_h_exhausts_window() {
        let e = BasisEnumeration::new((-2, 1), (0, 1)).unwrap();
        assert!(matches!(
            select_h(&e, 5, 0),
            Err(Error::WindowExhausted { .. })
        ));
    }

    #[test]
    fn norm_tables_respect_bounds() {
        let e = BasisEnumeration::new((-4, 2), (-2, 2)).unwrap();
        let all: Vec<usize> = (0..e.len()).collect();
        let table = norm_tables(&e, mother(), &all, 3).unwrap();
        let (d, a) = e.bound_tables(mother(), 3).unwrap();
        for (row, &n) in table.iter().zip(&all) {
            for i in 0..=3usize {
                assert!(row[i] <= d[n] * a[i] * (1.0 + 1e-8));
            }
        }
        // h atom at scale −4, order 0: bounded by (1/4)·A_0.
        let n4 = e.index_of(-4, 0).unwrap();
        let h_row = norm_tables(&e, mother(), &[n4], 0).unwrap();
        assert!(h_row[0][0] <= 0.25 * a[0] * (1.0 + 1e-8));
    }

    #[test]
    fn grid_sup_of_zero_function_is_zero() {
        assert_eq!(grid_sup(|_| 0.0, -5.0, 5.0, 0.1), 0.0);
    }

    #[test]
    fn select_x_zero_family_takes_first_candidates() {
        let fam = diag_family(8, |_| 0.0);
        let g = vec![vec![1.0; 4]; 4];
        let (src, d) = select_x(&fam, &g, 3, 4).unwrap();
        assert_eq!(src, vec![0, 1, 2, 3]);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn select_x_geometric_decay_is_accepted() {
        // d(e_n) = 4^{−(n+1)} and G ≤ 2: the greedy threshold is met for
        // every pair within the section.
        let dim = 64;
        let fam = diag_family(dim, |n| 4.0f64.powi(-(n as i32 + 1)));
        let g = vec![vec![2.0; 4]; 12];
        let (src, d) = select_x(&fam, &g, 3, 12).unwrap();
        assert_eq!(src.len(), 12);
        for (k, &dk) in d.iter().enumerate() {
            assert!(dk <= 1.0);
            assert!(dk * 3.0 <= (-(k as f64 + 1.0)).exp2() + 1e-12);
        }
        // Budget stays below Σ 2^{−k}.
        let total: f64 = d
            .iter()
            .enumerate()
            .map(|(k, &dk)| dk * (g[k][3] + 1.0))
            .sum();
        let cap: f64 = (1..=12).map(|k| (-(k as f64)).exp2()).sum();
        assert!(total <= cap + 1e-12);
    }

    #[test]
    fn select_x_constant_decay_fails() {
        let fam = diag_family(16, |_| 0.5);
        let g = vec![vec![1.0; 4]; 4];
        let err = select_x(&fam, &g, 3, 4).unwrap_err();
        match err {
            Error::InsufficientDecay { pair, .. } => assert_eq!(pair, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn complete_y_coordinates() {
        let dim = 3;
        let x: Vec<DVector<C64>> = vec![synth::coordinate_sequence(dim)[0].clone()];
        let y = complete_y(&x, dim);
        assert_eq!(y.len(), 2);
        let mut all = x.clone();
        all.extend(y.iter().cloned());
        assert!(orthonormality_deviation(&all) < 1e-12);

        let y_full = complete_y(&[], dim);
        assert_eq!(y_full.len(), dim);
        assert!(orthonormality_deviation(&y_full) < 1e-12);
    }

    #[test]
    fn complete_y_random_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = synth::random_orthonormal(&mut rng, 8, 2);
        let y = complete_y(&x, 8);
        assert_eq!(y.len(), 6);
        let mut all = x;
        all.extend(y);
        assert!(orthonormality_deviation(&all) <= 1e-10);
    }

    #[test]
    fn build_plan_small_section() {
        let dim = 24;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let fam = synth::decaying_family(&mut rng, dim, 4, 2, 16.0);
        let e = BasisEnumeration::new((-22, 2), (-2, 2)).unwrap();
        let pairs = 3;
        let plan = build_plan(&fam, &e, mother(), pairs, dim - pairs, 0, 1.0, 3.5).unwrap();
        assert_eq!(plan.pair_count(), pairs);
        assert_eq!(plan.h_count(), dim - pairs);
        assert_eq!(plan.y_vecs.len(), dim - pairs);
        plan.check_invariants().unwrap();
        // Monotone budget: partial sums increase with k and stay under the
        // greedy envelope.
        for i in 0..=plan.m_max {
            let mut partial = 0.0;
            let mut envelope = 0.0;
            for (k, &dk) in plan.d.iter().enumerate() {
                let prev = partial;
                partial += dk * (plan.g_table[k][i] + 1.0);
                envelope += (-(k as f64 + 1.0)).exp2();
                assert!(partial >= prev);
                assert!(partial <= envelope + 1e-10);
            }
        }
    }
}
