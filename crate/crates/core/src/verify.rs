//! Numerical verification of the asserted kernel properties: smoothness
//! and decay, Carleman-section behavior, kernel action, closure of the
//! multiplicative neighborhood, and linear combinations.
//!
//! Failures never abort a suite; every check runs and the report
//! aggregates the outcomes.

use crate::basis::BasisEnumeration;
use crate::bell::SUPPORT_HI;
use crate::error::{Error, Result};
use crate::operator::{schwarz_chain, spectral_norm, OperatorFamily, OperatorSpec};
use crate::pairing::PairingPlan;
use crate::quad::GaussLegendre;
use crate::transform::{
    build_unitary, conjugate, synthesize_kernel, SmoothKernel, TruncationReport, UnitaryMap,
};
use crate::wavelet::{C64, MotherWavelet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// One named measurement against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub runtime_ms: u64,
}

impl CheckRecord {
    fn within(name: impl Into<String>, measured: f64, bound: f64, started: Instant) -> Self {
        CheckRecord {
            name: name.into(),
            measured,
            bound,
            pass: measured <= bound,
            runtime_ms: started.elapsed().as_millis() as u64,
        }
    }
}

/// Aggregated outcome; the verdict is the conjunction of the pass flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn verdict(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, records: Vec<CheckRecord>) {
        self.records.extend(records);
    }
}

/// Knobs for the verification suite.
#[derive(Debug, Clone)]
pub struct CheckConfig {
    /// Smallness threshold for everything that must vanish at infinity.
    pub eps_decay: f64,
    /// Nested boxes for the outside-sup decay scan.
    pub boxes: Vec<f64>,
    /// Check derivatives with i + j up to this order.
    pub vanish_orders: usize,
    /// Quadrature slack for the action check.
    pub action_tol: f64,
    /// Symmetric grid half-width and point count for grid comparisons.
    pub grid_half_width: f64,
    pub grid_points: usize,
    /// Step of the outside-box sampling grid.
    pub annulus_step: f64,
    /// How far beyond the largest box to sample.
    pub annulus_margin: f64,
    /// Section samples for the Carleman modulus estimate.
    pub section_samples: usize,
    /// Random test functions for the action check.
    pub action_functions: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            eps_decay: 1e-4,
            boxes: vec![10.0, 20.0, 40.0],
            vanish_orders: 2,
            action_tol: 1e-6,
            grid_half_width: 8.0,
            grid_points: 41,
            annulus_step: 0.5,
            annulus_margin: 8.0,
            section_samples: 16,
            action_functions: 20,
            seed: 7,
        }
    }
}

fn symmetric_grid(half_width: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    let step = 2.0 * half_width / (points - 1) as f64;
    (0..points).map(|q| -half_width + q as f64 * step).collect()
}

/// Sup of |∂^{(i,j)} K| outside each nested box: non-increasing across the
/// boxes and below the decay threshold at the largest one.
pub fn check_vanish_at_infinity(
    kernel: &SmoothKernel,
    mother: &MotherWavelet,
    cfg: &CheckConfig,
    prefix: &str,
) -> Result<Vec<CheckRecord>> {
    let started = Instant::now();
    let r_max = cfg.boxes.last().copied().unwrap_or(10.0);
    let r_out = r_max + cfg.annulus_margin;
    let points = ((2.0 * r_out / cfg.annulus_step).round() as usize) + 1;
    let axis = symmetric_grid(r_out, points);
    let mut records = Vec::new();
    for i in 0..=cfg.vanish_orders {
        for j in 0..=(cfg.vanish_orders - i) {
            let grid = kernel.eval_grid(mother, &axis, &axis, (i, j))?;
            let mut sups = vec![0.0f64; cfg.boxes.len()];
            for (si, &s) in axis.iter().enumerate() {
                for (ti, &t) in axis.iter().enumerate() {
                    let radius = s.abs().max(t.abs());
                    let v = grid[(si, ti)].norm();
                    for (b, &box_r) in cfg.boxes.iter().enumerate() {
                        if radius > box_r {
                            sups[b] = sups[b].max(v);
                        }
                    }
                }
            }
            let worst_increase = sups
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max);
            records.push(CheckRecord::within(
                format!("{prefix}vanish-monotone-d{i}{j}"),
                worst_increase.max(0.0),
                1e-12,
                started,
            ));
            records.push(CheckRecord::within(
                format!("{prefix}vanish-final-d{i}{j}"),
                *sups.last().unwrap(),
                cfg.eps_decay,
                started,
            ));
        }
    }
    Ok(records)
}

/// Carleman sections: Lipschitz-type modulus between sampled points and
/// vanishing of ‖k^(i)(s)‖ beyond the largest box; run on both the kernel
/// and its conjugate transpose.
pub fn check_carleman(
    kernel: &SmoothKernel,
    kernel_adj: &SmoothKernel,
    mother: &MotherWavelet,
    cfg: &CheckConfig,
    prefix: &str,
) -> Result<Vec<CheckRecord>> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6361726c);
    let mut records = Vec::new();
    let r_max = cfg.boxes.last().copied().unwrap_or(10.0);
    let m = kernel.m_max();
    for (tag, k) in [("", kernel), ("adj-", kernel_adj)] {
        for order in 0..=m {
            let mut modulus: f64 = 0.0;
            for _ in 0..cfg.section_samples {
                let s: f64 = rng.random_range(-cfg.grid_half_width..cfg.grid_half_width);
                let ds: f64 = rng.random_range(0.01..0.5);
                let a = k.carleman_section(mother, s, order)?;
                let b = k.carleman_section(mother, s + ds, order)?;
                modulus = modulus.max((a - b).norm() / ds);
            }
            records.push(CheckRecord {
                name: format!("{prefix}carleman-{tag}modulus-d{order}"),
                measured: modulus,
                bound: f64::INFINITY,
                pass: modulus.is_finite(),
                runtime_ms: started.elapsed().as_millis() as u64,
            });
            let mut far: f64 = 0.0;
            let mut probe = r_max;
            while probe <= r_max + cfg.annulus_margin {
                far = far.max(k.carleman_section(mother, probe, order)?.norm());
                far = far.max(k.carleman_section(mother, -probe, order)?.norm());
                probe += cfg.annulus_step * 2.0;
            }
            records.push(CheckRecord::within(
                format!("{prefix}carleman-{tag}decay-d{order}"),
                far,
                cfg.eps_decay,
                started,
            ));
        }
    }
    Ok(records)
}

/// Kernel action against the conjugated operator, in coefficient space and
/// through explicit quadrature on a grid of output points.
pub fn check_action(
    kernel: &SmoothKernel,
    conjugated: &OperatorSpec,
    report: &TruncationReport,
    mother: &MotherWavelet,
    cfg: &CheckConfig,
    prefix: &str,
) -> Result<Vec<CheckRecord>> {
    let started = Instant::now();
    let slots = kernel.slot_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x616374);
    let mut records = Vec::new();

    // Coefficient space: residual bounded by the dropped Schmidt tail.
    let mut coeff_resid: f64 = 0.0;
    for _ in 0..cfg.action_functions {
        let f = crate::synth::random_unit_vector(&mut rng, slots);
        let via_kernel = kernel.apply_coefficients(&f)?;
        let via_matrix = conjugated.apply(&f)?;
        coeff_resid = coeff_resid.max((via_kernel - via_matrix).norm());
    }
    records.push(CheckRecord::within(
        format!("{prefix}action-coeff"),
        coeff_resid,
        report.action_bound() + 1e-11,
        started,
    ));

    // Quadrature route: test functions supported on atoms that decay
    // within a tractable window (scale 0 and finer).
    let local: Vec<usize> = kernel
        .used_pairs()
        .iter()
        .enumerate()
        .filter(|(_, &(j, _))| j >= 0)
        .map(|(slot, _)| slot)
        .collect();
    let decay_r = mother.decay_radius();
    let mut t_range: f64 = 0.0;
    for &slot in &local {
        let (j, k) = kernel.used_pairs()[slot];
        t_range = t_range.max((decay_r + k.abs() as f64) / (j as f64).exp2());
    }
    t_range += 2.0;
    let finest = kernel
        .used_pairs()
        .iter()
        .map(|&(j, _)| j)
        .max()
        .unwrap_or(0);
    let freq = SUPPORT_HI * (finest.max(0) as f64).exp2();
    let panels = ((2.0 * t_range * freq / (2.0 * std::f64::consts::PI) / 2.0).ceil() as usize)
        .max(16);
    let rule = GaussLegendre::new(12);
    let width = 2.0 * t_range / panels as f64;
    let mut t_nodes = Vec::with_capacity(panels * rule.len());
    let mut t_weights = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let mid = -t_range + (p as f64 + 0.5) * width;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            t_nodes.push(mid + 0.5 * width * x);
            t_weights.push(w * 0.5 * width);
        }
    }
    let s_grid = symmetric_grid(cfg.grid_half_width, cfg.grid_points);
    let kernel_grid = kernel.eval_grid(mother, &s_grid, &t_nodes, (0, 0))?;
    let atom_t = kernel.atom_matrix(mother, &t_nodes, 0)?;
    let atom_s = kernel.atom_matrix(mother, &s_grid, 0)?;
    let mut quad_resid: f64 = 0.0;
    for _ in 0..cfg.action_functions {
        let mut f = DVector::<C64>::zeros(slots);
        for &slot in &local {
            f[slot] = crate::synth::random_complex(&mut rng);
        }
        let norm = f.norm();
        if norm == 0.0 {
            continue;
        }
        f /= C64::new(norm, 0.0);
        // Pointwise values of f on the t-nodes, times quadrature weights.
        let f_values = atom_t.transpose() * &f;
        let weighted = DVector::<C64>::from_iterator(
            t_nodes.len(),
            f_values
                .iter()
                .zip(&t_weights)
                .map(|(v, &w)| v * C64::new(w, 0.0)),
        );
        let integrals = &kernel_grid * weighted;
        let image_coefficients = conjugated.apply(&f)?;
        let image_values = atom_s.transpose() * image_coefficients;
        for (q, integral) in integrals.iter().enumerate() {
            quad_resid = quad_resid.max((integral - image_values[q]).norm());
        }
    }
    records.push(CheckRecord::within(
        format!("{prefix}action-quadrature"),
        quad_resid,
        report.action_bound() + cfg.action_tol,
        started,
    ));
    Ok(records)
}

/// Max grid deviation of K̃(t, s) from conj(K(s, t)).
pub fn check_adjoint_symmetry(
    kernel: &SmoothKernel,
    kernel_adj: &SmoothKernel,
    mother: &MotherWavelet,
    cfg: &CheckConfig,
    prefix: &str,
) -> Result<CheckRecord> {
    let started = Instant::now();
    let axis = symmetric_grid(cfg.grid_half_width, cfg.grid_points);
    let k_grid = kernel.eval_grid(mother, &axis, &axis, (0, 0))?;
    let adj_grid = kernel_adj.eval_grid(mother, &axis, &axis, (0, 0))?;
    let mut worst: f64 = 0.0;
    for s in 0..axis.len() {
        for t in 0..axis.len() {
            worst = worst.max((adj_grid[(t, s)] - k_grid[(s, t)].conj()).norm());
        }
    }
    Ok(CheckRecord::within(
        format!("{prefix}adjoint-symmetry"),
        worst,
        1e-10,
        started,
    ))
}

/// Synthesize the kernel pair for one operator and run every kernel-level
/// check, prefixing record names.
#[allow(clippy::too_many_arguments)]
pub fn run_kernel_suite(
    op: &OperatorSpec,
    u: &UnitaryMap,
    plan: &PairingPlan,
    e: &BasisEnumeration,
    mother: &MotherWavelet,
    rank_cap: usize,
    cfg: &CheckConfig,
    prefix: &str,
) -> Result<Vec<CheckRecord>> {
    let started = Instant::now();
    let (kernel, kernel_adj, trunc) = synthesize_kernel(op, u, plan, e, mother, rank_cap)?;
    let conjugated = conjugate(op, u)?;
    let mut records = vec![CheckRecord::within(
        format!("{prefix}two-form"),
        trunc.two_form_max,
        1e-10,
        started,
    )];
    // The retained terms must represent the operator within the run's
    // action tolerance; a too-aggressive rank cap fails here.
    records.push(CheckRecord::within(
        format!("{prefix}truncation-budget"),
        trunc.action_bound().max(trunc.action_bound_adjoint()),
        cfg.action_tol,
        started,
    ));
    records.push(check_adjoint_symmetry(
        &kernel,
        &kernel_adj,
        mother,
        cfg,
        prefix,
    )?);
    records.extend(check_vanish_at_infinity(&kernel, mother, cfg, prefix)?);
    records.extend(check_carleman(
        &kernel,
        &kernel_adj,
        mother,
        cfg,
        prefix,
    )?);
    records.extend(check_action(
        &kernel,
        &conjugated,
        &trunc,
        mother,
        cfg,
        prefix,
    )?);
    Ok(records)
}

/// One sampled member of the multiplicative neighborhood: A = S·p(S*S)
/// with the polynomial scaled so the two-sided factors stay contractive.
pub struct MercerSample {
    pub operator: OperatorSpec,
    /// c⁴ = max(‖V‖, ‖W‖).
    pub c: f64,
    pub degree: usize,
}

pub fn sample_mercer<R: Rng>(s: &OperatorSpec, rng: &mut R, index: usize) -> Result<MercerSample> {
    let degree = rng.random_range(1..=2usize);
    let mut coefficients: Vec<C64> = (0..=degree)
        .map(|_| crate::synth::random_complex(rng))
        .collect();
    let gram_fwd = s.matrix().adjoint() * s.matrix();
    let gram_adj = s.matrix() * s.matrix().adjoint();
    let poly = |m: &DMatrix<C64>, c: &[C64]| {
        let dim = m.nrows();
        let mut acc = DMatrix::<C64>::identity(dim, dim) * c[0];
        let mut power = DMatrix::<C64>::identity(dim, dim);
        for coef in &c[1..] {
            power = &power * m;
            acc += &power * *coef;
        }
        acc
    };
    let scale = {
        let v = poly(&gram_fwd, &coefficients);
        let w = poly(&gram_adj, &coefficients);
        spectral_norm(&v).max(spectral_norm(&w))
    };
    if scale > 1.0 {
        let inv = C64::new(1.0 / (scale * (1.0 + 1e-12)), 0.0);
        for c in coefficients.iter_mut() {
            *c *= inv;
        }
    }
    let v = poly(&gram_fwd, &coefficients);
    let w = poly(&gram_adj, &coefficients);
    let norm_v = spectral_norm(&v);
    let norm_w = spectral_norm(&w);
    if norm_v > 1.0 + 1e-9 || norm_w > 1.0 + 1e-9 {
        return Err(Error::SampleConstruction(format!(
            "factor norms {norm_v:e}, {norm_w:e} exceed 1 after scaling"
        )));
    }
    let a = s.matrix() * &v;
    let intertwined = &w * s.matrix();
    let gap = (&a - intertwined).camax();
    if gap > 1e-10 * s.spectral_norm().max(1.0) {
        return Err(Error::SampleConstruction(format!(
            "intertwining S·p(S*S) = p(SS*)·S violated by {gap:e}"
        )));
    }
    Ok(MercerSample {
        operator: OperatorSpec::from_matrix(format!("{}·p{index}", s.label()), a),
        c: norm_v.max(norm_w).powf(0.25),
        degree,
    })
}

/// Closure of the multiplicative neighborhood: sampled A = S·p(S*S) must
/// satisfy the selection inequality at every pair and pass the full kernel
/// suite under the same unitary.
#[allow(clippy::too_many_arguments)]
pub fn check_mercer_closure(
    s: &OperatorSpec,
    u: &UnitaryMap,
    plan: &PairingPlan,
    e: &BasisEnumeration,
    mother: &MotherWavelet,
    rank_cap: usize,
    cfg: &CheckConfig,
    samples: usize,
) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6d657263);
    let mut records = Vec::new();
    for index in 0..samples {
        let started = Instant::now();
        let sample = sample_mercer(s, &mut rng, index)?;
        let mut margin = f64::NEG_INFINITY;
        for (x, &d_k) in plan.x_vecs.iter().zip(&plan.d) {
            let lhs = sample.operator.apply(x)?.norm().powf(0.25)
                + sample.operator.adjoint_apply(x)?.norm().powf(0.25);
            margin = margin.max(lhs - sample.c * d_k);
        }
        records.push(CheckRecord::within(
            format!("mercer{index}-inequality"),
            margin.max(0.0),
            1e-10,
            started,
        ));
        records.extend(run_kernel_suite(
            &sample.operator,
            u,
            plan,
            e,
            mother,
            rank_cap,
            cfg,
            &format!("mercer{index}-"),
        )?);
    }
    Ok(records)
}

/// Finite linear combination G = Σ z_α S_α with Σ|z| ≤ 1: the decay
/// inequality holds at every selected index and the combination passes the
/// kernel suite under the same unitary.
#[allow(clippy::too_many_arguments)]
pub fn check_linear_combination(
    family: &OperatorFamily,
    z: &[C64],
    u: &UnitaryMap,
    plan: &PairingPlan,
    e: &BasisEnumeration,
    mother: &MotherWavelet,
    rank_cap: usize,
    cfg: &CheckConfig,
) -> Result<Vec<CheckRecord>> {
    let started = Instant::now();
    if z.len() != family.members().len() {
        return Err(Error::DimensionMismatch(z.len(), family.members().len()));
    }
    let budget: f64 = z.iter().map(|c| c.norm()).sum();
    if budget > 1.0 + 1e-12 {
        return Err(Error::CoefficientBudgetExceeded(budget));
    }
    let dim = family.dim();
    let mut combination = DMatrix::<C64>::zeros(dim, dim);
    for (coef, member) in z.iter().zip(family.members()) {
        combination += member.matrix() * *coef;
    }
    let g = OperatorSpec::from_matrix("combination", combination);

    let mut margin = f64::NEG_INFINITY;
    for &src in &plan.x_src {
        let e_n = &family.e_seq()[src];
        let mut sup_fwd = 0.0f64;
        let mut sup_adj = 0.0f64;
        for member in family.members() {
            sup_fwd = sup_fwd.max(member.apply(e_n)?.norm());
            sup_adj = sup_adj.max(member.adjoint_apply(e_n)?.norm());
        }
        margin = margin.max(g.apply(e_n)?.norm() - sup_fwd);
        margin = margin.max(g.adjoint_apply(e_n)?.norm() - sup_adj);
    }
    let mut records = vec![CheckRecord::within(
        "combo-decay-inequality",
        margin.max(0.0),
        1e-10,
        started,
    )];
    records.extend(run_kernel_suite(
        &g, u, plan, e, mother, rank_cap, cfg, "combo-",
    )?);
    Ok(records)
}

/// The full suite for one family member (or the whole family when `label`
/// is `None`, which checks the Schwarz chain for every member and the
/// kernel suite for the first).
#[allow(clippy::too_many_arguments)]
pub fn run_full_suite(
    family: &OperatorFamily,
    label: Option<&str>,
    plan: &PairingPlan,
    e: &BasisEnumeration,
    mother: &MotherWavelet,
    rank_cap: usize,
    cfg: &CheckConfig,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let started = Instant::now();
    match plan.check_invariants() {
        Ok(()) => report.push(CheckRecord::within("plan-invariants", 0.0, 1.0, started)),
        Err(err) => report.push(CheckRecord {
            name: format!("plan-invariants ({err})"),
            measured: f64::INFINITY,
            bound: 1.0,
            pass: false,
            runtime_ms: started.elapsed().as_millis() as u64,
        }),
    }

    let u = build_unitary(plan, e)?;
    let identity_defect = {
        let m = u.matrix();
        (m.adjoint() * m - DMatrix::<C64>::identity(u.dim(), u.dim())).camax()
    };
    report.push(CheckRecord::within(
        "unitarity",
        identity_defect,
        1e-10,
        started,
    ));

    let projector = crate::operator::project_onto(&plan.x_vecs, family.dim())?;
    for member in family.members() {
        let started = Instant::now();
        let parts = crate::operator::split(member, &projector)?;
        match schwarz_chain(&parts.j, &parts.j_tilde, &plan.x_vecs, &plan.d) {
            Ok(chain) => {
                let mut worst = f64::NEG_INFINITY;
                for row in &chain.rows {
                    worst = worst.max(row.b_side - row.quarter_side);
                    worst = worst.max(row.quarter_side - row.d_k);
                }
                report.push(CheckRecord::within(
                    format!("schwarz-{}", member.label()),
                    worst.max(0.0),
                    1e-10,
                    started,
                ));
            }
            Err(err) => report.push(CheckRecord {
                name: format!("schwarz-{} ({err})", member.label()),
                measured: f64::INFINITY,
                bound: 1e-10,
                pass: false,
                runtime_ms: started.elapsed().as_millis() as u64,
            }),
        }
    }

    let member = match label {
        Some(l) => family
            .member(l)
            .ok_or_else(|| Error::Config(format!("no family member labeled {l}")))?,
        None => &family.members()[0],
    };
    report.extend(run_kernel_suite(
        member,
        &u,
        plan,
        e,
        mother,
        rank_cap,
        cfg,
        "",
    )?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{make_bell, TransitionKind};
    use crate::pairing::build_plan;
    use crate::synth;
    use crate::wavelet::QuadratureSpec;
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

    struct Fixture {
        family: OperatorFamily,
        e: BasisEnumeration,
        plan: PairingPlan,
        u: UnitaryMap,
    }

    fn fixture() -> &'static Fixture {
        static FIX: OnceLock<Fixture> = OnceLock::new();
        FIX.get_or_init(|| {
            let dim = 24;
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let family = synth::decaying_family(&mut rng, dim, 5, 3, 16.0);
            let e = BasisEnumeration::new((-22, 2), (-2, 2)).unwrap();
            let pairs = 3;
            let plan =
                build_plan(&family, &e, mother(), pairs, dim - pairs, 0, 1.0, 3.5).unwrap();
            let u = build_unitary(&plan, &e).unwrap();
            Fixture { family, e, plan, u }
        })
    }

    fn small_cfg() -> CheckConfig {
        CheckConfig {
            boxes: vec![6.0, 12.0, 24.0],
            grid_half_width: 5.0,
            grid_points: 11,
            annulus_step: 0.75,
            annulus_margin: 4.0,
            section_samples: 6,
            action_functions: 5,
            vanish_orders: 1,
            ..CheckConfig::default()
        }
    }

    #[test]
    fn empty_kernel_passes_vanish_and_carleman() {
        let cfg = small_cfg();
        let empty = SmoothKernel::empty(3);
        let records = check_vanish_at_infinity(&empty, mother(), &cfg, "").unwrap();
        assert!(records.iter().all(|r| r.pass));
        assert!(records
            .iter()
            .filter(|r| r.name.contains("final"))
            .all(|r| r.measured == 0.0));
        let sections = check_carleman(&empty, &empty, mother(), &cfg, "").unwrap();
        assert!(sections.iter().all(|r| r.pass));
    }

    #[test]
    fn member_kernel_suite_passes() {
        let fix = fixture();
        let cfg = small_cfg();
        let records = run_kernel_suite(
            &fix.family.members()[0],
            &fix.u,
            &fix.plan,
            &fix.e,
            mother(),
            24,
            &cfg,
            "",
        )
        .unwrap();
        for r in &records {
            assert!(r.pass, "{}: measured {:e} vs bound {:e}", r.name, r.measured, r.bound);
        }
    }

    #[test]
    fn action_residual_is_certified_on_random_trials() {
        // The coefficient-space residual must stay under the report bound
        // whenever terms are dropped.
        let fix = fixture();
        let cfg = CheckConfig {
            action_functions: 200,
            ..small_cfg()
        };
        let member = &fix.family.members()[0];
        let (kernel, _, trunc) =
            synthesize_kernel(member, &fix.u, &fix.plan, &fix.e, mother(), 1).unwrap();
        let conjugated = conjugate(member, &fix.u).unwrap();
        let records =
            check_action(&kernel, &conjugated, &trunc, mother(), &cfg, "").unwrap();
        let coeff = records.iter().find(|r| r.name == "action-coeff").unwrap();
        assert!(coeff.pass, "{coeff:?}");
    }

    #[test]
    fn forced_truncation_fails_action() {
        // Rank cap 0 on a member with nonvanishing Schmidt half: the kernel
        // misses the whole nuclear piece and the action check must fail.
        let fix = fixture();
        let x1 = &fix.plan.x_vecs[0];
        let x2 = &fix.plan.x_vecs[1];
        let s = OperatorSpec::from_matrix("S", &(x2 * x1.adjoint()) * C64::new(0.5, 0.0));
        let (kernel, _, trunc) =
            synthesize_kernel(&s, &fix.u, &fix.plan, &fix.e, mother(), 0).unwrap();
        let conjugated = conjugate(&s, &fix.u).unwrap();
        let cfg = small_cfg();
        let records = check_action(&kernel, &conjugated, &trunc, mother(), &cfg, "").unwrap();
        let coeff = records.iter().find(|r| r.name == "action-coeff").unwrap();
        // Random test functions overlap the dropped direction with
        // magnitude ~1/√N; the residual must be visibly nonzero and the
        // bound must still certify it.
        assert!(coeff.measured > 0.01, "dropped piece should show up: {coeff:?}");
        assert!((trunc.action_bound() - 0.5).abs() < 1e-12);
        assert!(trunc.action_bound() >= coeff.measured - 1e-11);
    }

    #[test]
    fn mercer_samples_pass() {
        let fix = fixture();
        let cfg = small_cfg();
        let records = check_mercer_closure(
            &fix.family.members()[0],
            &fix.u,
            &fix.plan,
            &fix.e,
            mother(),
            24,
            &cfg,
            2,
        )
        .unwrap();
        for r in &records {
            assert!(r.pass, "{}: {:e} vs {:e}", r.name, r.measured, r.bound);
        }
    }

    #[test]
    fn mercer_identity_polynomial_reduces_to_member() {
        // p ≡ 1 gives A = S with c = 1: the inequality is the pairing
        // weight definition with the factor-2 slack.
        let fix = fixture();
        let s = &fix.family.members()[0];
        for (x, &d_k) in fix.plan.x_vecs.iter().zip(&fix.plan.d) {
            let lhs = s.apply(x).unwrap().norm().powf(0.25)
                + s.adjoint_apply(x).unwrap().norm().powf(0.25);
            assert!(lhs <= d_k + 1e-12);
        }
    }

    #[test]
    fn linear_combination_passes_and_budget_is_enforced() {
        let fix = fixture();
        let cfg = small_cfg();
        let z = vec![
            C64::new(0.5, 0.0),
            C64::new(1.0 / 3.0, 0.0),
            C64::new(1.0 / 6.0, 0.0),
        ];
        let records = check_linear_combination(
            &fix.family,
            &z,
            &fix.u,
            &fix.plan,
            &fix.e,
            mother(),
            24,
            &cfg,
        )
        .unwrap();
        for r in &records {
            assert!(r.pass, "{}: {:e} vs {:e}", r.name, r.measured, r.bound);
        }

        let over = vec![
            C64::new(0.9, 0.0),
            C64::new(0.2, 0.0),
            C64::new(0.0, 0.0),
        ];
        assert!(matches!(
            check_linear_combination(
                &fix.family,
                &over,
                &fix.u,
                &fix.plan,
                &fix.e,
                mother(),
                24,
                &cfg,
            ),
            Err(Error::CoefficientBudgetExceeded(_))
        ));
    }

    #[test]
    fn zero_combination_gives_empty_kernel_records() {
        let fix = fixture();
        let cfg = small_cfg();
        let z = vec![C64::new(0.0, 0.0); 3];
        let records = check_linear_combination(
            &fix.family,
            &z,
            &fix.u,
            &fix.plan,
            &fix.e,
            mother(),
            24,
            &cfg,
        )
        .unwrap();
        assert!(records.iter().all(|r| r.pass));
        let final_records: Vec<_> = records
            .iter()
            .filter(|r| r.name.contains("vanish-final"))
            .collect();
        assert!(final_records.iter().all(|r| r.measured == 0.0));
    }

    #[test]
    fn measured_values_are_reproducible() {
        let fix = fixture();
        let cfg = small_cfg();
        let member = &fix.family.members()[0];
        let (kernel, _, trunc) =
            synthesize_kernel(member, &fix.u, &fix.plan, &fix.e, mother(), 24).unwrap();
        let conjugated = conjugate(member, &fix.u).unwrap();
        let first = check_action(&kernel, &conjugated, &trunc, mother(), &cfg, "").unwrap();
        let second = check_action(&kernel, &conjugated, &trunc, mother(), &cfg, "").unwrap();
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(a.measured, b.measured, "{}", a.name);
            assert_eq!(a.bound, b.bound);
        }
    }

    #[test]
    fn full_suite_verdict() {
        let fix = fixture();
        let cfg = small_cfg();
        let report = run_full_suite(
            &fix.family,
            None,
            &fix.plan,
            &fix.e,
            mother(),
            24,
            &cfg,
        )
        .unwrap();
        assert!(report.verdict(), "failing records: {:?}",
            report.records.iter().filter(|r| !r.pass).collect::<Vec<_>>());
        assert!(report.records.iter().any(|r| r.name.starts_with("schwarz-")));
    }
}
