//! Plain-text run report rendered from the results bundle.

use std::fmt::Write as _;
use std::path::Path;

use super::analysis::{AnalysisResults, REPORT_FILE, RESULTS_FILE};
use super::io::write_text;
use crate::error::{Error, Result};

/// Significance level for the coefficient checks of the report.
const ALPHA: f64 = 0.05;

/// One qualitative check on a finished analysis. `passed` is `None` when
/// the corpus grid lacks the f0 values the check needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub description: String,
    pub passed: Option<bool>,
    pub detail: String,
}

fn median_at(r: &AnalysisResults, f0: f64) -> Option<f64> {
    r.summary_at(f0).map(|s| s.median)
}

fn adjusted_at(r: &AnalysisResults, f0: f64) -> Option<(f64, bool)> {
    let c = &r.comparisons;
    c.comparisons
        .iter()
        .position(|x| x.f0 == f0)
        .map(|i| (c.fdr.adjusted_p[i], c.fdr.rejected[i]))
}

/// The structural checks the report prints at its end.
pub fn qualitative_checks(r: &AnalysisResults) -> Vec<Check> {
    let mut out = Vec::new();

    let shrink = median_at(r, 220.0).zip(median_at(r, 880.0));
    out.push(Check {
        name: "shrinkage",
        description: "median within-cluster distance at 880 Hz below half of 220 Hz".into(),
        passed: shrink.map(|(lo, hi)| hi < 0.5 * lo),
        detail: shrink.map_or("n/a".into(), |(lo, hi)| format!("{hi:.3} vs {lo:.3}")),
    });

    let fit = &r.fit;
    out.push(Check {
        name: "hinge",
        description: format!("beta2 negative with p < {ALPHA}, beta1 with p > {ALPHA}"),
        passed: Some(fit.beta2 < 0.0 && fit.p_beta2 < ALPHA && fit.p_beta1 > ALPHA),
        detail: format!(
            "beta1 = {:.5} (p = {:.4}), beta2 = {:.5} (p = {:.3e})",
            fit.beta1, fit.p_beta1, fit.beta2, fit.p_beta2
        ),
    });

    let kept: Vec<_> = [330.0, 440.0].iter().map(|&f| adjusted_at(r, f)).collect();
    let dropped: Vec<_> = [523.0, 587.0, 698.0, 784.0, 880.0, 988.0, 1046.0]
        .iter()
        .map(|&f| adjusted_at(r, f))
        .collect();
    let fdr_ok = kept.iter().chain(&dropped).all(Option::is_some);
    out.push(Check {
        name: "fdr-pattern",
        description: format!(
            "{} Hz vs 330/440 Hz not rejected, vs 523-1046 Hz rejected",
            r.config.reference_f0
        ),
        passed: fdr_ok.then(|| {
            kept.iter().all(|k| !k.unwrap().1) && dropped.iter().all(|k| k.unwrap().1)
        }),
        detail: if fdr_ok {
            let largest_kept = kept.iter().map(|k| k.unwrap().0).fold(f64::INFINITY, f64::min);
            let largest_dropped = dropped.iter().map(|k| k.unwrap().0).fold(0.0, f64::max);
            format!("min adjusted p kept {largest_kept:.4}, max adjusted p rejected {largest_dropped:.4}")
        } else {
            "n/a".into()
        },
    });

    let ratios = r
        .embedding_at(220.0)
        .zip(r.embedding_at(1046.0))
        .map(|(a, b)| (a.axis_ratio, b.axis_ratio));
    out.push(Check {
        name: "axis-ratio",
        description: "axis ratio at 1046 Hz below 220 Hz".into(),
        passed: ratios.map(|(lo, hi)| hi < lo),
        detail: ratios.map_or("n/a".into(), |(lo, hi)| format!("{hi:.3} vs {lo:.3}")),
    });

    let corners: Vec<String> = r
        .hull
        .iter()
        .map(|h| {
            format!(
                "/{}/ {}",
                h.vowel,
                if h.on_hull { "on hull" } else { "inside" }
            )
        })
        .collect();
    out.push(Check {
        name: "corners",
        description: format!("/i a u/ on the convex hull at {} Hz", r.config.reference_f0),
        passed: (!r.hull.is_empty()).then(|| r.hull.iter().all(|h| h.on_hull)),
        detail: corners.join(", "),
    });

    let high: Option<Vec<f64>> = [880.0, 988.0, 1046.0]
        .iter()
        .map(|&f| median_at(r, f))
        .collect();
    out.push(Check {
        name: "plateau",
        description: "medians at 880, 988, 1046 Hz within 25% of each other".into(),
        passed: high.as_ref().map(|m| {
            let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = m.iter().copied().fold(0.0, f64::max);
            hi <= 1.25 * lo
        }),
        detail: high.map_or("n/a".into(), |m| {
            m.iter()
                .map(|v| format!("{v:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        }),
    });
    out
}

/// Renders the report. Output depends only on `r`.
pub fn render_report(r: &AnalysisResults) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "vowel auditory-space analysis");
    if let Some(t) = &r.generated_at {
        let _ = writeln!(w, "generated: {t}");
    }
    let _ = writeln!(
        w,
        "tokens: {} ({} speakers x {} f0 x 8 vowels), averaging: {}, test: {:?}",
        r.tokens.len(),
        r.speakers.len(),
        r.grid.len(),
        r.config.averaging,
        r.config.paired_test
    );
    let worst = r
        .tokens
        .iter()
        .map(|t| (t.measured_f0 - t.target_f0).abs() / t.target_f0)
        .fold(0.0, f64::max);
    let _ = writeln!(w, "largest f0 deviation: {:.3}%", 100.0 * worst);

    let _ = writeln!(w, "\nwithin-cluster distances per f0");
    let _ = writeln!(
        w,
        "{:>8} {:>4} {:>9} {:>9} {:>9} {:>11}",
        "f0", "n", "q1", "median", "q3", "axis_ratio"
    );
    for s in &r.summaries {
        let ratio = r.embedding_at(s.f0).map_or(f64::NAN, |e| e.axis_ratio);
        let _ = writeln!(
            w,
            "{:>8} {:>4} {:>9.3} {:>9.3} {:>9.3} {:>11.3}",
            s.f0, s.n, s.q1, s.median, s.q3, ratio
        );
    }

    let _ = writeln!(w, "\ncluster medians");
    for f0 in [220.0, 523.0, 880.0] {
        let parts: Vec<String> = r
            .cluster_summaries
            .iter()
            .filter(|c| c.f0 == f0)
            .map(|c| format!("{} {:.3}", c.cluster.as_deref().unwrap_or("all"), c.median))
            .collect();
        if !parts.is_empty() {
            let _ = writeln!(w, "{f0:>8}: {}", parts.join(", "));
        }
    }

    let f = &r.fit;
    let _ = writeln!(
        w,
        "\npiecewise fit (breakpoint {} Hz, dof {})",
        f.breakpoint, f.dof
    );
    let _ = writeln!(
        w,
        "{:<12} {:>13} {:>12} {:>11}",
        "coefficient", "estimate", "se", "p"
    );
    for (name, est, se, p) in [
        ("beta0", f.beta0, f.se_beta0, f.p_beta0),
        ("beta1", f.beta1, f.se_beta1, f.p_beta1),
        ("beta2", f.beta2, f.se_beta2, f.p_beta2),
        (
            "slope_above",
            f.slope_above,
            f.se_slope_above,
            f.p_slope_above,
        ),
    ] {
        let _ = writeln!(w, "{name:<12} {est:>13.6} {se:>12.6} {p:>11.3e}");
    }
    let _ = writeln!(
        w,
        "residual variance {:.4}, speaker intercept variance {:.4}",
        f.residual_variance, f.intercept_variance
    );
    for (s, u) in &f.speaker_intercepts {
        let _ = writeln!(w, "  speaker {s}: {u:+.4}");
    }

    let c = &r.comparisons;
    let _ = writeln!(
        w,
        "\npairwise comparisons against {} Hz (q = {})",
        r.config.reference_f0, c.fdr.q
    );
    let _ = writeln!(
        w,
        "{:>8} {:>10} {:>11} {:>11} {:>9}",
        "f0", "mean diff", "raw p", "adjusted p", "rejected"
    );
    for (i, x) in c.comparisons.iter().enumerate() {
        let _ = writeln!(
            w,
            "{:>8} {:>10.3} {:>11.3e} {:>11.3e} {:>9}",
            x.f0,
            x.mean_difference,
            x.raw_p,
            c.fdr.adjusted_p[i],
            if c.fdr.rejected[i] { "yes" } else { "no" }
        );
    }

    let _ = writeln!(w, "\nchecks");
    for k in qualitative_checks(r) {
        let status = match k.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        let _ = writeln!(w, "{status} {}: {} [{}]", k.name, k.description, k.detail);
    }
    s
}

/// Re-renders `report.txt` from `results.json` in `dir`.
pub fn cmd_report(dir: &Path) -> Result<String> {
    let path = dir.join(RESULTS_FILE);
    if !path.is_file() {
        return Err(Error::MissingStage(format!(
            "analyze ({} not found)",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let results: AnalysisResults = serde_json::from_str(&text).map_err(|e| {
        Error::MissingStage(format!("analyze ({} unreadable: {e})", path.display()))
    })?;
    let report = render_report(&results);
    write_text(dir.join(REPORT_FILE), &report)?;
    Ok(report)
}
