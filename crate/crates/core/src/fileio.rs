//! Delimited-text file formats: '#'-prefixed headers carry the format
//! version and the hash of the driving configuration; numbers are written
//! in shortest round-trip decimal so files reproduce bit-for-bit.

use crate::basis::BasisEnumeration;
use crate::error::{Error, Result};
use crate::operator::{OperatorFamily, OperatorSpec};
use crate::pairing::{PairingPlan, PlanBudgets};
use crate::transform::{SmoothKernel, TruncationReport};
use crate::verify::{CheckRecord, VerificationReport};
use crate::wavelet::{C64, MotherWavelet};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_f64(token: &str, path: &Path, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("bad float {token:?}")))
}

fn parse_usize(token: &str, path: &Path, line: usize) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("bad integer {token:?}")))
}

fn write_vector(out: &mut String, v: &DVector<C64>) {
    let mut first = true;
    for z in v.iter() {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{} {}", z.re, z.im);
    }
    out.push('\n');
}

fn parse_vector(tokens: &[&str], path: &Path, line: usize) -> Result<DVector<C64>> {
    if tokens.len() % 2 != 0 {
        return Err(parse_err(path, line, "odd float count in complex vector"));
    }
    let mut values = Vec::with_capacity(tokens.len() / 2);
    for pair in tokens.chunks(2) {
        values.push(C64::new(
            parse_f64(pair[0], path, line)?,
            parse_f64(pair[1], path, line)?,
        ));
    }
    Ok(DVector::from_vec(values))
}

/// Bound tables: one row per atom (n, j, k, D_n), then one row per order
/// (i, A_i).
pub fn write_bounds(
    path: &Path,
    config_hash: &str,
    e: &BasisEnumeration,
    d: &[f64],
    a: &[f64],
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# carleman-bounds v1\n");
    let _ = writeln!(out, "# config-sha256 {config_hash}");
    let (j_lo, j_hi) = e.j_range();
    let (k_lo, k_hi) = e.k_range();
    let _ = writeln!(out, "# window j {j_lo}..{j_hi} k {k_lo}..{k_hi}");
    out.push_str("# columns: n j k D\n");
    for (n, &(j, k)) in e.pairs().iter().enumerate() {
        let _ = writeln!(out, "{n} {j} {k} {}", d[n]);
    }
    out.push_str("# columns: i A\n");
    for (i, value) in a.iter().enumerate() {
        let _ = writeln!(out, "{i} {value}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Atom samples: rows (n, i, s, Re, Im) over the export grid for the first
/// few atoms.
pub fn write_atom_samples(
    path: &Path,
    config_hash: &str,
    e: &BasisEnumeration,
    mother: &MotherWavelet,
    atoms: usize,
    grid: &[f64],
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# carleman-atoms v1\n");
    let _ = writeln!(out, "# config-sha256 {config_hash}");
    out.push_str("# columns: n i s re im\n");
    for n in 0..atoms.min(e.len()) {
        for order in 0..=mother.m_max() {
            for &s in grid {
                let v = e.eval_atom(mother, n, s, order)?;
                let _ = writeln!(out, "{n} {order} {s} {} {}", v.re, v.im);
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Dense operator: dimension header, then row-major complex entries.
pub fn write_operator(path: &Path, op: &OperatorSpec) -> Result<()> {
    let mut out = String::new();
    out.push_str("# carleman-operator v1\n");
    let _ = writeln!(out, "# label {}", op.label());
    let _ = writeln!(out, "# dim {}", op.dim());
    let _ = writeln!(out, "# norm-bound {}", op.norm_bound());
    for r in 0..op.dim() {
        let row = op.matrix().row(r).transpose();
        write_vector(&mut out, &row);
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_operator(path: &Path) -> Result<OperatorSpec> {
    let text = std::fs::read_to_string(path)?;
    let mut label = String::from("operator");
    let mut dim = None;
    let mut norm_bound = None;
    let mut rows: Vec<DVector<C64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            match tokens.as_slice() {
                ["label", l] => label = (*l).to_string(),
                ["dim", d] => dim = Some(parse_usize(d, path, line_no)?),
                ["norm-bound", b] => norm_bound = Some(parse_f64(b, path, line_no)?),
                _ => {}
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        rows.push(parse_vector(&tokens, path, line_no)?);
    }
    let dim = dim.ok_or_else(|| parse_err(path, 0, "missing dim header"))?;
    if rows.len() != dim {
        return Err(parse_err(
            path,
            0,
            format!("expected {dim} rows, found {}", rows.len()),
        ));
    }
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(parse_err(path, 0, format!("row {r} has {} entries", row.len())));
        }
        matrix.set_row(r, &row.transpose());
    }
    match norm_bound {
        Some(bound) => OperatorSpec::new(label, matrix, bound),
        None => Ok(OperatorSpec::from_matrix(label, matrix)),
    }
}

/// Family manifest: member labels with their operator files (relative to
/// the manifest), then the orthonormal sequence.
pub fn write_family(dir: &Path, manifest_name: &str, family: &OperatorFamily) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut out = String::new();
    out.push_str("# carleman-family v1\n");
    let _ = writeln!(out, "# dim {}", family.dim());
    let _ = writeln!(out, "# members {}", family.members().len());
    for member in family.members() {
        let file = format!("{}.op", member.label());
        write_operator(&dir.join(&file), member)?;
        let _ = writeln!(out, "member {} {file}", member.label());
    }
    let _ = writeln!(out, "eseq {}", family.e_seq().len());
    for e in family.e_seq() {
        out.push_str("e ");
        write_vector(&mut out, e);
    }
    let manifest = dir.join(manifest_name);
    std::fs::write(&manifest, out)?;
    Ok(manifest)
}

pub fn read_family(manifest: &Path) -> Result<OperatorFamily> {
    let text = std::fs::read_to_string(manifest)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut members = Vec::new();
    let mut e_seq = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.first() {
            Some(&"member") => {
                if tokens.len() != 3 {
                    return Err(parse_err(manifest, line_no, "member lines take label and file"));
                }
                let mut op = read_operator(&dir.join(tokens[2]))?;
                if op.label() != tokens[1] {
                    op = OperatorSpec::new(tokens[1], op.matrix().clone(), op.norm_bound())?;
                }
                members.push(op);
            }
            Some(&"eseq") => {}
            Some(&"e") => {
                e_seq.push(parse_vector(&tokens[1..], manifest, line_no)?);
            }
            _ => return Err(parse_err(manifest, line_no, format!("unexpected line {line:?}"))),
        }
    }
    OperatorFamily::new(members, e_seq)
}

/// Pairing manifest: sections [h], [g], [x], [y], [g-table], [h-table],
/// [budgets], all in exact shortest-round-trip decimal.
pub fn write_pairing(path: &Path, config_hash: &str, plan: &PairingPlan, e: &BasisEnumeration) -> Result<()> {
    let mut out = String::new();
    out.push_str("# carleman-pairing v1\n");
    let _ = writeln!(out, "# config-sha256 {config_hash}");
    let _ = writeln!(out, "dim {}", plan.dim());
    let _ = writeln!(out, "pairs {}", plan.pair_count());
    let _ = writeln!(out, "h-count {}", plan.h_count());
    let _ = writeln!(out, "m-max {}", plan.m_max);
    out.push_str("[h]\n");
    for (k, &n) in plan.h_idx.iter().enumerate() {
        let (j, kt) = e.pair(n)?;
        let _ = writeln!(out, "{k} {n} {j} {kt}");
    }
    out.push_str("[g]\n");
    for (k, &n) in plan.g_idx.iter().enumerate() {
        let (j, kt) = e.pair(n)?;
        let _ = writeln!(out, "{k} {n} {j} {kt}");
    }
    out.push_str("[x]\n");
    for (k, x) in plan.x_vecs.iter().enumerate() {
        let _ = writeln!(out, "x {k} {} {}", plan.x_src[k], plan.d[k]);
        out.push_str("v ");
        write_vector(&mut out, x);
    }
    out.push_str("[y]\n");
    for (k, y) in plan.y_vecs.iter().enumerate() {
        let _ = writeln!(out, "y {k}");
        out.push_str("v ");
        write_vector(&mut out, y);
    }
    out.push_str("[g-table]\n");
    for (k, row) in plan.g_table.iter().enumerate() {
        let _ = write!(out, "{k}");
        for value in row {
            let _ = write!(out, " {value}");
        }
        out.push('\n');
    }
    out.push_str("[h-table]\n");
    for (k, row) in plan.h_table.iter().enumerate() {
        let _ = write!(out, "{k}");
        for value in row {
            let _ = write!(out, " {value}");
        }
        out.push('\n');
    }
    out.push_str("[budgets]\n");
    for (i, v) in plan.budgets.dg_sums.iter().enumerate() {
        let _ = writeln!(out, "dg {i} {v}");
    }
    for (i, v) in plan.budgets.h_sums.iter().enumerate() {
        let _ = writeln!(out, "h {i} {v}");
    }
    let _ = writeln!(out, "dg-tail {}", plan.budgets.dg_tail);
    for (i, v) in plan.budgets.h_tail.iter().enumerate() {
        let _ = writeln!(out, "h-tail {i} {v}");
    }
    let _ = writeln!(out, "declared-dg {}", plan.budgets.declared_dg);
    for (i, v) in plan.budgets.declared_h.iter().enumerate() {
        let _ = writeln!(out, "declared-h {i} {v}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a pairing manifest back; returns the plan and the config hash it
/// was stamped with.
pub fn read_pairing(path: &Path) -> Result<(PairingPlan, String)> {
    let text = std::fs::read_to_string(path)?;
    let mut hash = String::new();
    let mut m_max = 0usize;
    let mut h_idx = Vec::new();
    let mut g_idx = Vec::new();
    let mut x_src = Vec::new();
    let mut d = Vec::new();
    let mut x_vecs: Vec<DVector<C64>> = Vec::new();
    let mut y_vecs: Vec<DVector<C64>> = Vec::new();
    let mut g_table: Vec<Vec<f64>> = Vec::new();
    let mut h_table: Vec<Vec<f64>> = Vec::new();
    let mut dg_sums = Vec::new();
    let mut h_sums = Vec::new();
    let mut dg_tail = 0.0;
    let mut h_tail = Vec::new();
    let mut declared_dg = 0.0;
    let mut declared_h = Vec::new();
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Preamble,
        H,
        G,
        X,
        Y,
        GTable,
        HTable,
        Budgets,
    }
    let mut section = Section::Preamble;
    let mut pending_vector: Option<Section> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if tokens.as_slice().first() == Some(&"config-sha256") && tokens.len() == 2 {
                hash = tokens[1].to_string();
            }
            continue;
        }
        match line {
            "[h]" => {
                section = Section::H;
                continue;
            }
            "[g]" => {
                section = Section::G;
                continue;
            }
            "[x]" => {
                section = Section::X;
                continue;
            }
            "[y]" => {
                section = Section::Y;
                continue;
            }
            "[g-table]" => {
                section = Section::GTable;
                continue;
            }
            "[h-table]" => {
                section = Section::HTable;
                continue;
            }
            "[budgets]" => {
                section = Section::Budgets;
                continue;
            }
            _ => {}
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Preamble => match tokens.as_slice() {
                ["dim", _] | ["pairs", _] | ["h-count", _] => {}
                ["m-max", v] => m_max = parse_usize(v, path, line_no)?,
                _ => return Err(parse_err(path, line_no, "unexpected preamble line")),
            },
            Section::H => h_idx.push(parse_usize(tokens[1], path, line_no)?),
            Section::G => g_idx.push(parse_usize(tokens[1], path, line_no)?),
            Section::X => match tokens.first() {
                Some(&"x") => {
                    x_src.push(parse_usize(tokens[2], path, line_no)?);
                    d.push(parse_f64(tokens[3], path, line_no)?);
                    pending_vector = Some(Section::X);
                }
                Some(&"v") if pending_vector == Some(Section::X) => {
                    x_vecs.push(parse_vector(&tokens[1..], path, line_no)?);
                    pending_vector = None;
                }
                _ => return Err(parse_err(path, line_no, "malformed [x] section")),
            },
            Section::Y => match tokens.first() {
                Some(&"y") => pending_vector = Some(Section::Y),
                Some(&"v") if pending_vector == Some(Section::Y) => {
                    y_vecs.push(parse_vector(&tokens[1..], path, line_no)?);
                    pending_vector = None;
                }
                _ => return Err(parse_err(path, line_no, "malformed [y] section")),
            },
            Section::GTable | Section::HTable => {
                let mut row = Vec::with_capacity(tokens.len() - 1);
                for token in &tokens[1..] {
                    row.push(parse_f64(token, path, line_no)?);
                }
                if section == Section::GTable {
                    g_table.push(row);
                } else {
                    h_table.push(row);
                }
            }
            Section::Budgets => match tokens.as_slice() {
                ["dg", _, v] => dg_sums.push(parse_f64(v, path, line_no)?),
                ["h", _, v] => h_sums.push(parse_f64(v, path, line_no)?),
                ["dg-tail", v] => dg_tail = parse_f64(v, path, line_no)?,
                ["h-tail", _, v] => h_tail.push(parse_f64(v, path, line_no)?),
                ["declared-dg", v] => declared_dg = parse_f64(v, path, line_no)?,
                ["declared-h", _, v] => declared_h.push(parse_f64(v, path, line_no)?),
                _ => return Err(parse_err(path, line_no, "malformed [budgets] line")),
            },
        }
    }
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
        budgets: PlanBudgets {
            dg_sums,
            h_sums,
            dg_tail,
            h_tail,
            declared_dg,
            declared_h,
        },
    };
    Ok((plan, hash))
}

/// Kernel grid: header with grid spec, term counts and tail bounds, then
/// rows (s, t, Re K, Im K), one block per requested derivative pair.
#[allow(clippy::too_many_arguments)]
pub fn write_kernel_grid(
    path: &Path,
    config_hash: &str,
    label: &str,
    kernel: &SmoothKernel,
    mother: &MotherWavelet,
    grid: &[f64],
    derivative_blocks: &[(usize, usize)],
    report: &TruncationReport,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# carleman-kernel v1\n");
    let _ = writeln!(out, "# config-sha256 {config_hash}");
    let _ = writeln!(out, "# label {label}");
    let _ = writeln!(
        out,
        "# grid {} {} {}",
        grid.first().copied().unwrap_or(0.0),
        grid.last().copied().unwrap_or(0.0),
        grid.len()
    );
    let _ = writeln!(
        out,
        "# terms projection {} schmidt {}",
        report.h_count,
        report.svd_rank_kept
    );
    let _ = write!(out, "# tail-dg");
    for v in &report.tail_dg {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    let _ = write!(out, "# tail-sh");
    for v in &report.tail_sh {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    let _ = writeln!(out, "# action-bound {}", report.action_bound());
    let _ = write!(out, "# uniform");
    for v in &report.uniform_bound {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    out.push_str("# columns: s t re im\n");
    let mut blocks = vec![(0usize, 0usize)];
    blocks.extend_from_slice(derivative_blocks);
    for (i, j) in blocks {
        let _ = writeln!(out, "# block {i} {j}");
        let values = kernel.eval_grid(mother, grid, grid, (i, j))?;
        for (si, &s) in grid.iter().enumerate() {
            for (ti, &t) in grid.iter().enumerate() {
                let v = values[(si, ti)];
                let _ = writeln!(out, "{s} {t} {} {}", v.re, v.im);
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Truncation report as its own file.
pub fn write_truncation(path: &Path, config_hash: &str, report: &TruncationReport) -> Result<()> {
    let mut out = String::new();
    out.push_str("# carleman-truncation v1\n");
    let _ = writeln!(out, "# config-sha256 {config_hash}");
    let _ = writeln!(out, "pairs {}", report.pair_count);
    let _ = writeln!(out, "h-count {}", report.h_count);
    let _ = writeln!(out, "svd-rank-full {}", report.svd_rank_full);
    let _ = writeln!(out, "svd-rank-kept {}", report.svd_rank_kept);
    let _ = writeln!(out, "adj-rank-full {}", report.adj_rank_full);
    let _ = writeln!(out, "adj-rank-kept {}", report.adj_rank_kept);
    for (i, v) in report.tail_dg.iter().enumerate() {
        let _ = writeln!(out, "tail-dg {i} {v}");
    }
    for (i, v) in report.tail_sh.iter().enumerate() {
        let _ = writeln!(out, "tail-sh {i} {v}");
    }
    let _ = writeln!(out, "svd-tail-half {}", report.svd_tail_half);
    let _ = writeln!(out, "svd-tail-half-adj {}", report.svd_tail_half_adj);
    let _ = writeln!(out, "dropped-sum {}", report.dropped_sum);
    let _ = writeln!(out, "dropped-sum-adj {}", report.dropped_sum_adj);
    for (i, v) in report.uniform_bound.iter().enumerate() {
        let _ = writeln!(out, "uniform {i} {v}");
    }
    let _ = writeln!(out, "two-form-max {}", report.two_form_max);
    std::fs::write(path, out)?;
    Ok(())
}

/// Verification report: tab-delimited records, one per check, and the
/// final verdict; exit semantics live in the driver.
pub fn write_verification(
    path: &Path,
    config_hash: &str,
    report: &VerificationReport,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# carleman-verify v1\n");
    let _ = writeln!(out, "# config-sha256 {config_hash}");
    out.push_str("# columns: check <tab> measured <tab> bound <tab> pass <tab> runtime-ms\n");
    for record in &report.records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            record.name, record.measured, record.bound, record.pass, record.runtime_ms
        );
    }
    let _ = writeln!(
        out,
        "verdict\t{}",
        if report.verdict() { "pass" } else { "fail" }
    );
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_verification(path: &Path) -> Result<(VerificationReport, String)> {
    let text = std::fs::read_to_string(path)?;
    let mut hash = String::new();
    let mut records = Vec::new();
    let mut verdict_line = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if tokens.first() == Some(&"config-sha256") && tokens.len() == 2 {
                hash = tokens[1].to_string();
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.first() == Some(&"verdict") {
            verdict_line = Some(fields.get(1).copied().unwrap_or(""));
            continue;
        }
        if fields.len() != 5 {
            return Err(parse_err(path, line_no, "expected 5 tab-delimited fields"));
        }
        records.push(CheckRecord {
            name: fields[0].to_string(),
            measured: parse_f64(fields[1], path, line_no)?,
            bound: parse_f64(fields[2], path, line_no)?,
            pass: fields[3] == "true",
            runtime_ms: parse_usize(fields[4], path, line_no)? as u64,
        });
    }
    let report = VerificationReport { records };
    if let Some(v) = verdict_line {
        let expect = if report.verdict() { "pass" } else { "fail" };
        if v != expect {
            return Err(parse_err(path, 0, "verdict disagrees with records"));
        }
    }
    Ok((report, hash))
}
