use std::io::Write;

use super::{AgreementMode, AgreementTable, Margin, UniqueCounts, UpperBound};
use crate::error::Result;

/// Published reference values, reported as targets next to measured ones.
pub mod reference {
    /// Single-domain models: (format name, clean, 0 dB).
    pub const SINGLE: [(&str, f64, f64); 10] = [
        ("magnitude", 0.856, 0.683),
        ("phase-w", 0.237, 0.224),
        ("phase-u", 0.769, 0.374),
        ("polar2-w", 0.349, 0.269),
        ("polar2-u", 0.797, 0.532),
        ("real", 0.820, 0.744),
        ("imag", 0.833, 0.756),
        ("rect2", 0.815, 0.749),
        ("polrect4-w", 0.311, 0.265),
        ("polrect4-u", 0.795, 0.441),
    ];

    /// Multi-domain model evaluated on domain subsets.
    pub const MULTI: [(&str, f64, f64); 11] = [
        ("magnitude", 0.920, 0.863),
        ("phase-w", 0.616, 0.461),
        ("phase-u", 0.877, 0.760),
        ("polar2-w", 0.911, 0.861),
        ("polar2-u", 0.938, 0.916),
        ("real", 0.893, 0.856),
        ("imag", 0.895, 0.858),
        ("rect2", 0.904, 0.893),
        ("polrect4-w", 0.920, 0.909),
        ("polrect4-u", 0.925, 0.918),
        ("polrect5", 0.927, 0.906),
    ];

    /// Error-agreement order: real, imag, magnitude, phase-w, phase-u.
    pub const AGREEMENT_ORDER: [&str; 5] = ["real", "imag", "magnitude", "phase-w", "phase-u"];
    pub const AGREEMENT_COUNTS: [usize; 5] = [47, 46, 35, 168, 54];
    /// `AGREEMENT[q][r]` as printed: row `q`, column `r`, i.e. the fraction
    /// of `r`'s errors on which `q` predicts the same class.
    pub const AGREEMENT: [[f64; 5]; 5] = [
        [1.000, 0.478, 0.429, 0.065, 0.278],
        [0.468, 1.000, 0.514, 0.054, 0.204],
        [0.319, 0.391, 1.000, 0.030, 0.185],
        [0.234, 0.196, 0.143, 1.000, 0.111],
        [0.319, 0.239, 0.286, 0.036, 1.000],
    ];

    pub const UNIQUE: [usize; 5] = [0, 4, 2, 4, 8];
    pub const UNIQUE_TOTAL: usize = 18;
    pub const TEST_SAMPLES: usize = 438;
    pub const UPPER_BOUND_CORRECT: usize = 432;
    pub const MARGIN_BASE_ACCURACY: f64 = 0.920;
    pub const MARGIN_RECOVERABLE: usize = 16;

    /// Meta module: (input, activation, accuracy).
    pub const META: [(&str, &str, f64); 4] = [
        ("confidences", "linear", 0.929),
        ("confidences", "leaky_relu", 0.938),
        ("embeddings", "linear", 0.947),
        ("embeddings", "leaky_relu", 0.941),
    ];
    pub const META_BASE: f64 = 0.938;
}

/// Column label used in the agreement table.
pub fn short_label(name: &str) -> &str {
    match name {
        "real" => "Re",
        "imag" => "Im",
        "magnitude" => "Mag",
        "phase-w" => "Ph (W)",
        "phase-u" => "Ph (U)",
        other => other,
    }
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    /// Format name, e.g. `polar2-u`.
    pub representation: String,
    pub label: String,
    pub clean: f64,
    pub noisy: f64,
}

/// Mode, clean and 0 dB accuracy, one row per representation.
pub fn write_accuracy_csv<W: Write>(rows: &[AccuracyRow], mut w: W) -> Result<()> {
    writeln!(w, "mode,accuracy_clean,accuracy_0db")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.label, fmt3(r.clean), fmt3(r.noisy))?;
    }
    Ok(())
}

/// Error-agreement table with error counts on top, columns for the
/// representation whose errors are counted and rows for the one compared
/// against it.
pub fn write_agreement_csv<W: Write>(t: &AgreementTable, mut w: W) -> Result<()> {
    let labels: Vec<&str> = t.representations.iter().map(|r| short_label(r)).collect();
    writeln!(w, ",{}", labels.join(","))?;
    let counts: Vec<String> = t.error_counts.iter().map(usize::to_string).collect();
    writeln!(w, "Count,{}", counts.join(","))?;
    for (q, lq) in labels.iter().enumerate() {
        let cells: Vec<String> = (0..labels.len())
            .map(|r| t.matrix[r][q].map(fmt3).unwrap_or_else(|| "N/A".into()))
            .collect();
        writeln!(w, "{lq},{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_unique_csv<W: Write>(u: &UniqueCounts, mut w: W) -> Result<()> {
    writeln!(w, "representation,unique_correct,out_of")?;
    for (r, c) in u.representations.iter().zip(&u.counts) {
        writeln!(w, "{r},{c},{}", u.samples)?;
    }
    writeln!(w, "total,{},{}", u.total, u.samples)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaRow {
    pub input: String,
    pub activation: String,
    pub accuracy: f64,
}

pub fn write_meta_csv<W: Write>(rows: &[MetaRow], base: Option<(&str, f64)>, mut w: W) -> Result<()> {
    writeln!(w, "input_type,activation,test_accuracy")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.input, r.activation, fmt3(r.accuracy))?;
    }
    if let Some((name, acc)) = base {
        writeln!(w, "base:{name},-,{}", fmt3(acc))?;
    }
    Ok(())
}

/// Everything the plain-text report summarizes.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub single: Vec<AccuracyRow>,
    pub multi: Vec<AccuracyRow>,
    pub agreement: Option<AgreementTable>,
    pub agreement_both_wrong: Option<AgreementTable>,
    pub unique: Option<UniqueCounts>,
    pub upper: Option<UpperBound>,
    pub margin: Option<Margin>,
    pub meta: Vec<MetaRow>,
    pub notes: Vec<String>,
}

fn lookup<'a>(table: &'a [(&'a str, f64, f64)], name: &str) -> Option<&'a (&'a str, f64, f64)> {
    table.iter().find(|r| r.0 == name)
}

fn write_accuracy_section<W: Write>(
    w: &mut W,
    title: &str,
    rows: &[AccuracyRow],
    refs: &[(&str, f64, f64)],
) -> Result<()> {
    writeln!(w, "{title}")?;
    writeln!(w, "  {:<28} {:>7} {:>7}   {:>9} {:>9}", "mode", "clean", "0 dB", "ref clean", "ref 0 dB")?;
    for r in rows {
        let (rc, rn) = lookup(refs, &r.representation)
            .map(|x| (fmt3(x.1), fmt3(x.2)))
            .unwrap_or(("-".into(), "-".into()));
        writeln!(w, "  {:<28} {:>7} {:>7}   {:>9} {:>9}", r.label, fmt3(r.clean), fmt3(r.noisy), rc, rn)?;
    }
    if rows.is_empty() {
        writeln!(w, "  (no runs)")?;
    }
    writeln!(w)?;
    Ok(())
}

/// Plain-text run report. Published values are listed as reference
/// targets only.
pub fn write_report<W: Write>(inp: &ReportInputs, mut w: W) -> Result<()> {
    writeln!(w, "micro-Doppler representation study: run report")?;
    writeln!(w, "Published values are reference targets for the full dataset, not pass/fail gates.")?;
    writeln!(w, "Error analyses use clean (noise-free) test predictions.")?;
    writeln!(w)?;
    write_accuracy_section(&mut w, "Single-domain accuracy", &inp.single, &reference::SINGLE)?;
    write_accuracy_section(&mut w, "Multi-domain accuracy (domain subsets)", &inp.multi, &reference::MULTI)?;
    for t in [&inp.agreement, &inp.agreement_both_wrong].into_iter().flatten() {
        let title = match t.mode {
            AgreementMode::SameLabel => "Error agreement (same wrong class)",
            AgreementMode::BothWrong => "Error agreement (both wrong, any class; comparison variant)",
        };
        writeln!(w, "{title}")?;
        let mut buf = Vec::new();
        write_agreement_csv(t, &mut buf)?;
        for line in String::from_utf8_lossy(&buf).lines() {
            writeln!(w, "  {line}")?;
        }
        writeln!(w)?;
    }
    if inp.agreement.is_some() {
        let counts: Vec<String> = reference::AGREEMENT_COUNTS.iter().map(usize::to_string).collect();
        writeln!(w, "  reference error counts (Re, Im, Mag, Ph (W), Ph (U)): {}", counts.join(", "))?;
        writeln!(w, "  reference Mag errors repeated by Im: 0.514")?;
        writeln!(w)?;
    }
    if let Some(u) = &inp.unique {
        writeln!(w, "Unique correct samples")?;
        for (r, c) in u.representations.iter().zip(&u.counts) {
            writeln!(w, "  {r:<12} {c} out of {}", u.samples)?;
        }
        writeln!(w, "  total        {} out of {}", u.total, u.samples)?;
        writeln!(
            w,
            "  reference: Re 0, Im 4, Mag 2, Ph (W) 4, Ph (U) 8; total {} out of {}",
            reference::UNIQUE_TOTAL,
            reference::TEST_SAMPLES
        )?;
        writeln!(w)?;
    }
    if let Some(b) = &inp.upper {
        writeln!(w, "Oracle upper bound: {} of {} = {}", b.correct_any, b.total, fmt3(b.fraction))?;
        writeln!(
            w,
            "  reference: {} of {} = {}",
            reference::UPPER_BOUND_CORRECT,
            reference::TEST_SAMPLES,
            fmt3(reference::UPPER_BOUND_CORRECT as f64 / reference::TEST_SAMPLES as f64)
        )?;
        writeln!(w)?;
    }
    if let Some(m) = &inp.margin {
        writeln!(
            w,
            "Potential margin over {}: {} + {}/{} = {}",
            m.base,
            fmt3(m.base_accuracy),
            m.recoverable,
            m.total,
            fmt3(m.potential)
        )?;
        writeln!(
            w,
            "  reference: {} + {}/{} = {}",
            fmt3(reference::MARGIN_BASE_ACCURACY),
            reference::MARGIN_RECOVERABLE,
            reference::TEST_SAMPLES,
            fmt3(reference::MARGIN_BASE_ACCURACY + reference::MARGIN_RECOVERABLE as f64 / reference::TEST_SAMPLES as f64)
        )?;
        writeln!(w)?;
    }
    if !inp.meta.is_empty() {
        writeln!(w, "Meta module")?;
        for r in &inp.meta {
            let rf = reference::META
                .iter()
                .find(|x| x.0 == r.input && x.1 == r.activation)
                .map(|x| fmt3(x.2))
                .unwrap_or_else(|| "-".into());
            writeln!(w, "  {:<12} {:<11} {}   ref {}", r.input, r.activation, fmt3(r.accuracy), rf)?;
        }
        writeln!(w, "  reference base model polar2-u: {}", fmt3(reference::META_BASE))?;
        writeln!(w)?;
    }
    write_reference_targets(&mut w)?;
    for n in &inp.notes {
        writeln!(w, "note: {n}")?;
    }
    Ok(())
}

/// The full published accuracy tables, printed in every report.
fn write_reference_targets<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "Reference targets (published, full dataset)")?;
    for (title, table) in [("single-domain", &reference::SINGLE[..]), ("multi-domain", &reference::MULTI[..])] {
        writeln!(w, "  {title}: clean / 0 dB")?;
        for (name, clean, noisy) in table {
            writeln!(w, "    {name:<12} {} / {}", fmt3(*clean), fmt3(*noisy))?;
        }
    }
    writeln!(w, "  meta module over polar2-u base {}", fmt3(reference::META_BASE))?;
    for (input, activation, acc) in reference::META {
        writeln!(w, "    {input:<12} {activation:<11} {}", fmt3(acc))?;
    }
    writeln!(w)?;
    Ok(())
}
