//! Dyadic atom enumeration, bound tables and the orthonormality witness.
//!
//! Atoms are dilated translates 2^{j/2} u(2^j s − k) of the mother wavelet
//! over a finite (j, k) window, rearranged into a single deterministic
//! sequence: diagonals of |j| + |k| first, ties broken by |j|, then sign
//! (negative before positive), j before k.

use crate::error::{Error, Result};
use crate::wavelet::{C64, MotherWavelet};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::HashMap;

/// Bijection n ↔ (j_n, k_n) over the admitted window.
#[derive(Debug, Clone)]
pub struct BasisEnumeration {
    j_range: (i32, i32),
    k_range: (i32, i32),
    order: Vec<(i32, i32)>,
    index: HashMap<(i32, i32), usize>,
}

impl BasisEnumeration {
    pub fn new(j_range: (i32, i32), k_range: (i32, i32)) -> Result<Self> {
        if j_range.0 > j_range.1 || k_range.0 > k_range.1 {
            return Err(Error::Config(format!(
                "empty atom window: j {:?}, k {:?}",
                j_range, k_range
            )));
        }
        let mut order = Vec::new();
        for j in j_range.0..=j_range.1 {
            for k in k_range.0..=k_range.1 {
                order.push((j, k));
            }
        }
        order.sort_by_key(|&(j, k)| (j.abs() + k.abs(), j.abs(), j, k));
        let index = order
            .iter()
            .enumerate()
            .map(|(n, &jk)| (jk, n))
            .collect();
        Ok(BasisEnumeration {
            j_range,
            k_range,
            order,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn j_range(&self) -> (i32, i32) {
        self.j_range
    }

    pub fn k_range(&self) -> (i32, i32) {
        self.k_range
    }

    /// Scale and translate of atom `n` (0-based).
    pub fn pair(&self, n: usize) -> Result<(i32, i32)> {
        self.order
            .get(n)
            .copied()
            .ok_or(Error::IndexOutOfWindow(n))
    }

    /// Enumeration index of (j, k) if the window admits it.
    pub fn index_of(&self, j: i32, k: i32) -> Option<usize> {
        self.index.get(&(j, k)).copied()
    }

    pub fn pairs(&self) -> &[(i32, i32)] {
        &self.order
    }

    /// s-interval outside which the atom magnitude is below the mother's
    /// decay level.
    pub fn atom_support(&self, mother: &MotherWavelet, n: usize) -> Result<(f64, f64)> {
        let (j, k) = self.pair(n)?;
        let r = mother.decay_radius();
        let scale = (-j as f64).exp2();
        Ok(((k as f64 - r) * scale, (k as f64 + r) * scale))
    }

    /// Atom value u_n^(i)(s) = 2^{j(i+1/2)} u^(i)(2^j s − k).
    pub fn eval_atom(&self, mother: &MotherWavelet, n: usize, s: f64, order: usize) -> Result<C64> {
        let (j, k) = self.pair(n)?;
        atom_value(mother, j, k, s, order)
    }

    /// Per-n decay weights D_n and per-i amplification factors A_i such that
    /// ‖u_n^(i)‖_∞ ≤ D_n · A_i.
    pub fn bound_tables(&self, mother: &MotherWavelet, m_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.order.iter().map(|&(j, _)| d_weight(j)).collect();
        let a = (0..=m_max)
            .map(|i| Ok(amplification(i) * mother.sup_norm(i)?))
            .collect::<Result<Vec<_>>>()?;
        Ok((d, a))
    }

    /// Exact sup-norm of atom `n` at derivative order `i`: the dilation is a
    /// bijection of the line, so the sup equals 2^{j(i+1/2)} ‖u^(i)‖_∞.
    pub fn atom_sup(&self, mother: &MotherWavelet, n: usize, order: usize) -> Result<f64> {
        let (j, _) = self.pair(n)?;
        Ok(((order as f64 + 0.5) * j as f64).exp2() * mother.sup_norm(order)?)
    }

    /// Independent grid measurement of sup |u_n^(i)| over the atom support,
    /// with golden-section refinement around the grid leaders.
    pub fn measure_atom_sup(
        &self,
        mother: &MotherWavelet,
        n: usize,
        order: usize,
        step_mother_units: f64,
    ) -> Result<f64> {
        let (j, k) = self.pair(n)?;
        let scale = (-j as f64).exp2();
        let step = step_mother_units * scale;
        let (lo, hi) = self.atom_support(mother, n)?;
        let value = |s: f64| {
            self.eval_atom(mother, n, s, order)
                .map(|v| v.norm())
                .unwrap_or(0.0)
        };
        let _ = k;
        Ok(grid_sup(value, lo, hi, step))
    }

    /// Gram matrix of the first `count` atoms by quadrature over the joint
    /// decay radius of each pair.
    ///
    /// Entries reduce under the dilation substitution to integrals that
    /// depend only on the scale gap and a combined translate, so distinct
    /// integrals are computed once and reused.
    pub fn gram_matrix(
        &self,
        mother: &MotherWavelet,
        count: usize,
        quad: &GramQuad,
    ) -> Result<DMatrix<C64>> {
        if count > self.len() {
            return Err(Error::IndexOutOfWindow(count));
        }
        let mut keys: Vec<(i32, i64)> = Vec::new();
        let mut seen = HashMap::new();
        for m in 0..count {
            for n in m..count {
                let key = reduce_pair(self.order[m], self.order[n]).0;
                seen.entry(key).or_insert_with(|| keys.push(key));
            }
        }
        let computed: Vec<((i32, i64), Result<C64>)> = keys
            .par_iter()
            .map(|&key| (key, reduced_inner_product(mother, key, quad)))
            .collect();
        let mut table = HashMap::new();
        for (key, value) in computed {
            table.insert(key, value?);
        }
        let mut gram = DMatrix::<C64>::zeros(count, count);
        for m in 0..count {
            for n in m..count {
                let (key, swapped) = reduce_pair(self.order[m], self.order[n]);
                let scale = 0.5 * key.0 as f64;
                let base = table[&key] * scale.exp2();
                let value = if swapped { base.conj() } else { base };
                gram[(m, n)] = value;
                gram[(n, m)] = value.conj();
            }
        }
        Ok(gram)
    }
}

/// Quadrature settings for the Gram witness.
#[derive(Debug, Clone)]
pub struct GramQuad {
    pub points_per_panel: usize,
    pub cycles_per_panel: f64,
    /// Per-entry certification tolerance; exceeded estimates are an error.
    pub certify_tol: f64,
}

impl Default for GramQuad {
    fn default() -> Self {
        GramQuad {
            points_per_panel: 16,
            cycles_per_panel: 1.5,
            certify_tol: 2.5e-7,
        }
    }
}

/// 2^{j(i+1/2)} u^(i)(2^j s − k): the one code path for atom evaluation,
/// shared so dilation covariance is exact.
pub fn atom_value(mother: &MotherWavelet, j: i32, k: i32, s: f64, order: usize) -> Result<C64> {
    let factor = ((order as f64 + 0.5) * j as f64).exp2();
    let arg = (j as f64).exp2() * s - k as f64;
    Ok(mother.eval(arg, order)? * factor)
}

/// D_n from the closed formulas: 2^{j²} above the base scale, (1/√2)^{|j|}
/// at and below it.
pub fn d_weight(j: i32) -> f64 {
    if j > 0 {
        ((j as f64) * (j as f64)).exp2()
    } else {
        (-0.5 * j.abs() as f64).exp2()
    }
}

/// 2^{(i+1/2)²}, the dilation amplification absorbed into A_i.
pub fn amplification(i: usize) -> f64 {
    let h = i as f64 + 0.5;
    (h * h).exp2()
}

/// Map an ordered atom pair to the key (Δ, μ) of the reduced integral
/// ∫ u(τ) conj(u(2^Δ τ + μ)) dτ with Δ ≥ 0; the flag says the orientation
/// was swapped (conjugate the result).
fn reduce_pair(left: (i32, i32), right: (i32, i32)) -> ((i32, i64), bool) {
    let (j1, k1) = left;
    let (j2, k2) = right;
    if j2 >= j1 {
        let delta = j2 - j1;
        ((delta, (k1 as i64) * (1i64 << delta) - k2 as i64), false)
    } else {
        let delta = j1 - j2;
        ((delta, (k2 as i64) * (1i64 << delta) - k1 as i64), true)
    }
}

fn reduced_inner_product(mother: &MotherWavelet, key: (i32, i64), quad: &GramQuad) -> Result<C64> {
    let (delta, mu) = key;
    let r = mother.decay_radius();
    let pow = (delta as f64).exp2();
    let lo = (-r).max((-r - mu as f64) / pow);
    let hi = r.min((r - mu as f64) / pow);
    if lo >= hi {
        return Ok(C64::new(0.0, 0.0));
    }
    let peak_freq = crate::bell::SUPPORT_HI * (1.0 + pow);
    let cycles = (hi - lo) * peak_freq / (2.0 * std::f64::consts::PI);
    let base_panels = (cycles / quad.cycles_per_panel).ceil().max(4.0) as usize;

    let integral = |panels: usize| -> Result<C64> {
        let rule = crate::quad::GaussLegendre::new(quad.points_per_panel);
        let width = (hi - lo) / panels as f64;
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * width;
            let half = 0.5 * width;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let tau = mid + half * t;
                let a = mother.eval(tau, 0)?;
                let b = mother.eval(pow * tau + mu as f64, 0)?;
                acc += a * b.conj() * (w * half);
            }
        }
        Ok(acc)
    };

    let coarse = integral(base_panels)?;
    let fine_panels = (base_panels as f64 * 1.6).ceil() as usize;
    let fine = integral(fine_panels)?;
    let est = (fine - coarse).norm();
    if est > quad.certify_tol {
        return Err(Error::ToleranceNotMet {
            requested: quad.certify_tol,
            achieved: est,
            panels: fine_panels,
        });
    }
    Ok(fine)
}

/// Sup of `f` on [lo, hi]: dense grid scan, then golden-section refinement
/// around the leading local maxima. Returns 0 for an empty scan.
pub fn grid_sup<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> f64 {
    if hi <= lo || step <= 0.0 {
        return 0.0;
    }
    let count = ((hi - lo) / step).ceil() as usize;
    let mut samples = Vec::with_capacity(count + 1);
    for q in 0..=count {
        samples.push((lo + q as f64 * step, f(lo + q as f64 * step)));
    }
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for q in 1..samples.len().saturating_sub(1) {
        if samples[q].1 >= samples[q - 1].1 && samples[q].1 >= samples[q + 1].1 {
            peaks.push(samples[q]);
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut best: f64 = samples
        .iter()
        .map(|p| p.1)
        .fold(0.0, f64::max);
    for &(s, _) in peaks.iter().take(8) {
        best = best.max(golden_max(s - step, s + step, &f));
    }
    best
}

fn golden_max<F: Fn(f64) -> f64>(a: f64, b: f64, f: &F) -> f64 {
    let inv_phi = 0.618_033_988_749_894_8;
    let mut lo = a;
    let mut hi = b;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}
