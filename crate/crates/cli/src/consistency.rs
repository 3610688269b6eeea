use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use npcrank_core::criteria::CriterionConfig;
use npcrank_core::load_csv;
use npcrank_core::metrics::{
    bias_robustness_report_with, consistency_curve, RankList, SubsampleProtocol,
};

use crate::args::{ConsistencyArgs, CriterionArg, ProtocolArg, ScoringArgs};
use crate::output::{invalid, sig6, value_name, write_text, CliError, Header};
use crate::rank::scoring_config;

/// Feature names of a rank table, in the order of its `rank` column.
pub fn read_rank_file(path: &Path) -> Result<RankList, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| invalid(format!("{}: empty rank file", path.display())))?
        .split('\t')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| invalid(format!("{}: missing `{name}` column", path.display())))
    };
    let (rank_col, feature_col) = (col("rank")?, col("feature")?);
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split('\t').collect();
        let bad = || invalid(format!("{}: malformed row {}", path.display(), i + 1));
        let rank: usize = cells
            .get(rank_col)
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        let name = cells.get(feature_col).ok_or_else(bad)?.to_string();
        rows.push((rank, name));
    }
    rows.sort_by_key(|r| r.0);
    Ok(RankList::new(rows.into_iter().map(|r| r.1).collect())?)
}

fn curve_rows(out: &mut String, columns: &[&[f64]]) {
    for j in 0..columns[0].len() {
        write!(out, "{}", j + 1).expect("write to string");
        for c in columns {
            write!(out, "\t{}", sig6(c[j])).expect("write to string");
        }
        out.push('\n');
    }
}

pub fn run(args: &ConsistencyArgs) -> Result<(), CliError> {
    let text = match &args.input {
        None => {
            if args.rank_files.len() != 2 {
                return Err(invalid(
                    "give two rank files, or --input with --label-col, --alpha and --seed",
                ));
            }
            let a = read_rank_file(&args.rank_files[0])?;
            let b = read_rank_file(&args.rank_files[1])?;
            let curve = consistency_curve(&a, &b)?;
            let mut h = Header::new("consistency");
            h.push("ranks_a", args.rank_files[0].display());
            h.push("ranks_b", args.rank_files[1].display());
            let mut out = h.render();
            out.push_str("j\tconsistency\n");
            curve_rows(&mut out, &[&curve]);
            out
        }
        Some(input) => {
            let label_col = args
                .label_col
                .as_deref()
                .ok_or_else(|| invalid("--label-col is required"))?;
            let seed = args.seed.ok_or_else(|| invalid("--seed is required"))?;
            let (cc, npc) = configs(args, seed)?;
            let data = load_csv(input, label_col)?;
            let protocol = match args.protocol {
                ProtocolArg::Paper => SubsampleProtocol::paper(),
            };
            let report = bias_robustness_report_with(&data, &cc, &npc, protocol, seed)?;

            let mut h = Header::new("consistency");
            h.push("input", input.display());
            h.push("label_col", label_col);
            h.push("protocol", value_name(args.protocol));
            h.push(
                "sizes_a",
                format!("{}/{}", report.sizes[0].0, report.sizes[0].1),
            );
            h.push(
                "sizes_b",
                format!("{}/{}", report.sizes[1].0, report.sizes[1].1),
            );
            h.push("alpha", args.alpha.expect("checked above"));
            h.push("delta1", args.delta1);
            h.push("splits", args.splits);
            h.push("seed", seed);
            h.push("kernel", value_name(args.kernel));
            h.push("bandwidth", value_name(args.bandwidth));
            let mut out = h.render();
            out.push_str("j\ts-CC\ts-NPC\n");
            curve_rows(&mut out, &[&report.cc, &report.npc]);
            out
        }
    };
    write_text(args.output.as_deref(), &text)
}

fn configs(
    args: &ConsistencyArgs,
    seed: u64,
) -> Result<(CriterionConfig, CriterionConfig), CliError> {
    let scoring = ScoringArgs {
        splits: args.splits,
        delta1: args.delta1,
        kernel: args.kernel,
        bandwidth: args.bandwidth,
        prior_ratio: None,
        seed,
    };
    let alpha = args
        .alpha
        .ok_or_else(|| invalid("--alpha is required with --input"))?;
    Ok((
        scoring_config(CriterionArg::Cc, None, &scoring)?,
        scoring_config(CriterionArg::Npc, Some(alpha), &scoring)?,
    ))
}
