use std::fmt::Write as _;

use npcrank_core::criteria::{CriterionConfig, CriterionKind, RankingResult};
use npcrank_core::{load_csv, rank_features, BandwidthRule, KdeConfig, Kernel};

use crate::args::{CriterionArg, RankArgs, ScoringArgs};
use crate::output::{invalid, sig6, write_text, CliError, Header};

pub fn scoring_config(
    criterion: CriterionArg,
    alpha: Option<f64>,
    s: &ScoringArgs,
) -> Result<CriterionConfig, CliError> {
    let base = match criterion {
        CriterionArg::Cc => {
            if alpha.is_some() {
                log::warn!("--alpha is ignored by the classical criterion");
            }
            CriterionConfig::classical(s.splits, s.seed)
        }
        CriterionArg::Npc => {
            let alpha = alpha.ok_or_else(|| invalid("--alpha is required with --criterion npc"))?;
            CriterionConfig::neyman_pearson(alpha, s.delta1, s.splits, s.seed)
                .map_err(|e| invalid(format!("--alpha/--delta1: {e}")))?
        }
    };
    let mut config = base.with_kde(KdeConfig {
        kernel: s.kernel.into(),
        bandwidth_rule: s.bandwidth.into(),
    });
    if criterion == CriterionArg::Cc {
        config = config.with_prior_ratio(s.prior_ratio);
    } else if s.prior_ratio.is_some() {
        log::warn!("--prior-ratio is ignored by the Neyman-Pearson criterion");
    }
    config.validate()?;
    Ok(config)
}

pub fn describe_config(h: &mut Header, config: &CriterionConfig) {
    match config.kind {
        CriterionKind::Classical => {
            h.push("criterion", "cc");
            h.push(
                "prior_ratio",
                config
                    .prior_ratio
                    .map_or("none".to_string(), |r| r.to_string()),
            );
        }
        CriterionKind::NeymanPearson(u) => {
            h.push("criterion", "npc");
            h.push("alpha", u.alpha());
            h.push("delta1", u.delta1());
        }
    }
    h.push("splits", config.splits);
    h.push("seed", config.seed);
    h.push(
        "kernel",
        match config.kde.kernel {
            Kernel::Gaussian => "gaussian",
            Kernel::Epanechnikov => "epanechnikov",
        },
    );
    h.push(
        "bandwidth",
        match config.kde.bandwidth_rule {
            BandwidthRule::PaperRate => "paper-rate",
            BandwidthRule::Silverman => "silverman",
        },
    );
}

pub fn ranking_table(header: &Header, result: &RankingResult) -> String {
    let mut out = header.render();
    out.push_str("rank\tfeature\tscore\tskipped_splits\n");
    for (pos, &j) in result.order.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            pos + 1,
            result.feature_names[j],
            sig6(result.scores[j]),
            result.skipped_splits[j]
        )
        .expect("write to string");
    }
    out
}

pub fn run(args: &RankArgs) -> Result<(), CliError> {
    let config = scoring_config(args.criterion, args.alpha, &args.scoring)?;
    let mut data = load_csv(&args.input, &args.label_col)?;
    if args.swap_labels {
        data = data.swap_labels();
    }
    log::info!(
        "{} samples (m={}, n={}), {} features",
        data.n_samples(),
        data.class_count(0),
        data.class_count(1),
        data.n_features()
    );
    let result = rank_features(&data, &config)?;

    let mut h = Header::new("rank");
    h.push("input", args.input.display());
    h.push("label_col", &args.label_col);
    h.push("swap_labels", args.swap_labels);
    h.push("m", data.class_count(0));
    h.push("n", data.class_count(1));
    describe_config(&mut h, &config);
    write_text(args.output.as_deref(), &ranking_table(&h, &result))
}
