use std::fmt::Write as _;
use std::str::FromStr;

use isojet::embedding::{cartan_janet_dim, cartan_janet_metric_order, singular_ambient_dim, singular_metric_order};
use isojet::io::MetricInput;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    NormalForm,
    Admissibility,
    CartanJanet,
    SingularData,
    SolvePoints,
    Characteristics,
    Conoid,
}

pub const ALL_STAGES: [Stage; 7] = [
    Stage::NormalForm,
    Stage::Admissibility,
    Stage::CartanJanet,
    Stage::SingularData,
    Stage::SolvePoints,
    Stage::Characteristics,
    Stage::Conoid,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::NormalForm => "normal-form",
            Stage::Admissibility => "admissibility",
            Stage::CartanJanet => "cartan-janet",
            Stage::SingularData => "singular-data",
            Stage::SolvePoints => "solve-points",
            Stage::Characteristics => "characteristics",
            Stage::Conoid => "conoid",
        }
    }

    fn summary(self) -> &'static str {
        match self {
            Stage::NormalForm => "remove the cross terms g_jn by a tangential change of coordinates",
            Stage::Admissibility => "check that g_nn = (|x'|^2 + x_n^2l) F0 and that the tangential block is admissible",
            Stage::CartanJanet => "embed a nonsingular metric into E^N by Cauchy-Kovalevskaya induction",
            Stage::SingularData => "build Cauchy data (u0, u1) on x_n = 0 and the frame determinant Delta",
            Stage::SolvePoints => "solve the augmented system about (x', 0) for x' away from the singular point",
            Stage::Characteristics => "characteristic and non-exceptionality tests, phase series (scalar symbols), bicharacteristic strip",
            Stage::Conoid => "sample the characteristic conoid by bicharacteristic strips",
        }
    }

    /// Stages that must run before this one.
    pub fn requires(self, has_symbol: bool) -> Vec<Vec<Stage>> {
        match self {
            Stage::SingularData => vec![vec![Stage::Admissibility]],
            Stage::SolvePoints => vec![vec![Stage::SingularData]],
            Stage::Characteristics if has_symbol => Vec::new(),
            Stage::Characteristics => vec![vec![Stage::SingularData]],
            Stage::Conoid => vec![vec![Stage::Characteristics]],
            _ => Vec::new(),
        }
    }

    pub fn needs_metric(self) -> bool {
        !matches!(self, Stage::Characteristics | Stage::Conoid)
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_STAGES
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = ALL_STAGES.iter().map(|s| s.name()).collect();
                format!("unknown stage {s:?} (expected one of {})", names.join(", "))
            })
    }
}

/// Parses a comma-separated stage list; an empty string gives an empty plan.
pub fn parse_stages(text: &str) -> Result<Vec<Stage>, String> {
    let mut stages: Vec<Stage> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Stage::from_str)
        .collect::<Result<_, _>>()?;
    stages.sort();
    stages.dedup();
    Ok(stages)
}

/// Stages run when none are requested: everything that applies to the input.
pub fn default_stages(input: &MetricInput, singular: bool) -> Vec<Stage> {
    let mut stages = Vec::new();
    if input.has_metric() {
        stages.push(Stage::NormalForm);
        if singular {
            stages.extend([Stage::Admissibility, Stage::SingularData, Stage::SolvePoints]);
        } else {
            stages.push(Stage::CartanJanet);
        }
    }
    if singular || input.scalar_symbol.is_some() {
        stages.extend([Stage::Characteristics, Stage::Conoid]);
    }
    stages
}

#[derive(Debug)]
pub enum PlanError {
    Dependency(String),
    MissingInput(String),
}

impl std::fmt::Display for PlanError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanError::Dependency(m) | PlanError::MissingInput(m) => f.write_str(m),
        }
    }
}

pub fn validate(stages: &[Stage], input: &MetricInput) -> Result<(), PlanError> {
    let has_symbol = input.scalar_symbol.is_some();
    for &stage in stages {
        if stage.needs_metric() && !input.has_metric() {
            return Err(PlanError::MissingInput(format!(
                "stage {} needs metric entries in the input",
                stage.name()
            )));
        }
        for alternatives in stage.requires(has_symbol) {
            if !alternatives.iter().any(|a| stages.contains(a)) {
                let names: Vec<_> = alternatives.iter().map(|a| a.name()).collect();
                return Err(PlanError::Dependency(format!(
                    "stage {} requires {}",
                    stage.name(),
                    names.join(" or ")
                )));
            }
        }
    }
    Ok(())
}

/// Metric truncation order needed by the selected stages.
pub fn metric_order(stages: &[Stage], n: usize, k: usize) -> usize {
    let mut order = k;
    if stages.contains(&Stage::CartanJanet) {
        order = order.max(cartan_janet_metric_order(n, k));
    }
    if stages.contains(&Stage::SingularData) {
        order = order.max(singular_metric_order(n, k));
    }
    // the coordinate change costs one order
    if stages.contains(&Stage::NormalForm) {
        order += 1;
    }
    order
}

pub fn explain(stages: &[Stage], input: &MetricInput, k: usize, mode: isojet::Mode) -> String {
    let n = input.n;
    let mut out = String::new();
    let _ = writeln!(out, "input: n = {n}, K = {k}, mode = {mode}");
    if stages.is_empty() {
        let _ = writeln!(out, "no stages selected; nothing to run");
        return out;
    }
    let _ = writeln!(out, "stages:");
    for (i, s) in stages.iter().enumerate() {
        let deps: Vec<String> = s
            .requires(input.scalar_symbol.is_some())
            .iter()
            .map(|alt| alt.iter().map(|a| a.name()).collect::<Vec<_>>().join(" | "))
            .collect();
        let after = if deps.is_empty() {
            String::new()
        } else {
            format!("  (after {})", deps.join(", "))
        };
        let _ = writeln!(out, "  {}. {:<16} {}{}", i + 1, s.name(), s.summary(), after);
    }
    let _ = writeln!(out, "dimensions:");
    let _ = writeln!(out, "  N = n(n+1)/2 = {}", cartan_janet_dim(n));
    if n >= 2 {
        let _ = writeln!(out, "  N + n - 2 = (n^2 + 3n - 4)/2 = {}", singular_ambient_dim(n));
    }
    if input.has_metric() && stages.iter().any(|s| s.needs_metric()) {
        let _ = writeln!(out, "  metric expanded to order {}", metric_order(stages, n, k));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(with_symbol: bool) -> MetricInput {
        let symbol = if with_symbol {
            r#", "scalar_symbol": {"terms": [[0, 0, 0, 0, 0, 1, 1, 1]], "surface": [[0, 0, 1, 1, 1]]}"#
        } else {
            ""
        };
        MetricInput::from_json(&format!(
            r#"{{"n": 3, "K": 4, "entries": [{{"i": 1, "j": 1, "terms": [[0, 0, 0, 1, 1]]}}]{symbol}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn stage_lists_parse_in_pipeline_order() {
        assert_eq!(
            parse_stages("conoid, admissibility,conoid").unwrap(),
            vec![Stage::Admissibility, Stage::Conoid]
        );
        assert!(parse_stages("").unwrap().is_empty());
        assert!(parse_stages("warp").is_err());
    }

    #[test]
    fn dependencies_are_enforced() {
        let g = input(false);
        assert!(matches!(validate(&[Stage::Conoid], &g), Err(PlanError::Dependency(_))));
        assert!(matches!(validate(&[Stage::SingularData], &g), Err(PlanError::Dependency(_))));
        assert!(validate(&[Stage::Admissibility, Stage::SingularData], &g).is_ok());
        assert!(validate(&[], &g).is_ok());
        // a scalar symbol lets characteristics run without the embedding stages
        assert!(validate(&[Stage::Characteristics, Stage::Conoid], &input(true)).is_ok());
    }

    #[test]
    fn explain_lists_both_ambient_dimensions() {
        let g = input(false);
        let text = explain(&default_stages(&g, true), &g, 4, isojet::Mode::Exact);
        assert!(text.contains("N = n(n+1)/2 = 6"), "{text}");
        assert!(text.contains("(n^2 + 3n - 4)/2 = 7"), "{text}");
        assert!(explain(&[], &g, 4, isojet::Mode::Exact).contains("nothing to run"));
    }
}
