use std::fmt::Write as _;
use std::path::PathBuf;

use npcrank_core::baselines::BaselineKind;
use npcrank_core::simulate::{run_experiment, ExperimentReport, ModelKind, ModelSpec, Ranker};

use crate::args::{CriterionArg, ScoringArgs, SimulateArgs};
use crate::output::{invalid, sig6, value_name, write_text, CliError, Header};
use crate::rank::scoring_config;

const FULL_REPS: usize = 1000;

fn default_reps(kind: ModelKind) -> usize {
    match kind {
        ModelKind::Gauss500 => 50,
        _ => 200,
    }
}

fn default_rankers(kind: ModelKind) -> Vec<String> {
    let mut out = vec!["cc".to_string()];
    match kind {
        ModelKind::Toy2D => out.extend(["npc:0.01", "npc:0.2"].map(String::from)),
        _ => out.extend(["npc:0.05", "npc:0.1", "npc:0.2", "npc:0.3"].map(String::from)),
    }
    if kind == ModelKind::Mixture2D {
        out.extend(BaselineKind::ALL.iter().map(|b| b.name().to_string()));
    }
    out
}

/// `cc`, `npc:<alpha>` or a baseline name.
pub fn parse_ranker(token: &str, scoring: &ScoringArgs) -> Result<Ranker, CliError> {
    let token = token.trim();
    if token == "cc" {
        return Ok(Ranker::Criterion(scoring_config(
            CriterionArg::Cc,
            None,
            scoring,
        )?));
    }
    if let Some(alpha) = token.strip_prefix("npc:") {
        let alpha: f64 = alpha
            .parse()
            .map_err(|_| invalid(format!("--criteria: bad alpha in `{token}`")))?;
        return Ok(Ranker::Criterion(scoring_config(
            CriterionArg::Npc,
            Some(alpha),
            scoring,
        )?));
    }
    token
        .parse::<BaselineKind>()
        .map(Ranker::Baseline)
        .map_err(|_| {
            invalid(format!(
                "--criteria: unknown ranker `{token}` (expected cc, npc:<alpha>, pearson, dcor, welch-t or wilcoxon)"
            ))
        })
}

pub fn report_table(header: &Header, report: &ExperimentReport) -> String {
    let mut out = header.render();
    out.push_str("ranker\tfeature\ttop_frequency\taverage_rank\n");
    for r in &report.rankers {
        for (j, name) in report.feature_names.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.label,
                name,
                sig6(r.top_frequency[j]),
                sig6(r.average_ranks[j])
            )
            .expect("write to string");
        }
    }
    out
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let kind: ModelKind = args.model.parse().map_err(invalid)?;
    let n = args.n.unwrap_or(kind.default_n());
    let reps = if args.full {
        FULL_REPS
    } else {
        args.reps.unwrap_or(default_reps(kind))
    };
    let tokens = args
        .criteria
        .clone()
        .unwrap_or_else(|| default_rankers(kind));
    if tokens.is_empty() {
        return Err(invalid("--criteria is empty"));
    }
    let rankers = tokens
        .iter()
        .map(|t| parse_ranker(t, &args.scoring))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = ModelSpec::new(kind, n, args.scoring.seed)?;
    log::info!(
        "simulating {kind} with n={n}, {reps} reps, {} rankers",
        rankers.len()
    );
    let report = run_experiment(&spec, &rankers, reps)?;

    let mut h = Header::new("simulate");
    h.push("model", kind);
    h.push("n", n);
    h.push("reps", reps);
    h.push("seed", args.scoring.seed);
    h.push("criteria", tokens.join(","));
    h.push("splits", args.scoring.splits);
    h.push("delta1", args.scoring.delta1);
    h.push("kernel", value_name(args.scoring.kernel));
    h.push("bandwidth", value_name(args.scoring.bandwidth));
    h.push(
        "prior_ratio",
        args.scoring
            .prior_ratio
            .map_or("none".to_string(), |r| r.to_string()),
    );
    let table = report_table(&h, &report);

    match &args.output_prefix {
        None => write_text(None, &table),
        Some(prefix) => {
            let with_ext = |ext: &str| {
                let mut p = prefix.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            write_text(Some(&with_ext(".tsv")), &table)?;
            let json = serde_json::json!({ "config": h.to_json(), "report": report });
            let mut text = serde_json::to_string_pretty(&json)
                .map_err(|e| CliError::Compute(format!("json encoding failed: {e}")))?;
            text.push('\n');
            write_text(Some(&with_ext(".json")), &text)
        }
    }
}
