use std::fmt::Write as _;

use npcrank_core::oracle::{
    gaussian_classical_risk, gaussian_np_type2, mc_population_criterion, GaussianFeature,
    OracleError, PopulationCriterion,
};
use npcrank_core::simulate::{Model, ModelKind};

use crate::args::{CriterionArg, GaussianArgs, OracleCommand};
use crate::output::{invalid, sig6, write_text, CliError};

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn feature(a: &GaussianArgs) -> Result<GaussianFeature, CliError> {
    Ok(GaussianFeature::new(a.mu0, a.sigma0, a.mu1, a.sigma1)?)
}

pub fn run(cmd: &OracleCommand) -> Result<(), CliError> {
    let text = match cmd {
        OracleCommand::GaussianNp { feature: f, alpha } => {
            format!("{}\n", sig6(gaussian_np_type2(&feature(f)?, *alpha)?))
        }
        OracleCommand::Classical { feature: f, pi0 } => {
            format!("{}\n", sig6(gaussian_classical_risk(&feature(f)?, *pi0)?))
        }
        OracleCommand::Population {
            model,
            criterion,
            alpha,
            sample_size,
            seed,
        } => {
            let kind: ModelKind = model.parse().map_err(invalid)?;
            let pc = match criterion {
                CriterionArg::Cc => PopulationCriterion::Classical,
                CriterionArg::Npc => PopulationCriterion::NeymanPearson {
                    alpha: alpha
                        .ok_or_else(|| invalid("--alpha is required with --criterion npc"))?,
                },
            };
            let m = Model::new(kind, *seed);
            let est = mc_population_criterion(&m, pc, *sample_size, *seed)?;
            let mut out = format!("# command=oracle population\n# model={kind}\n# sample_size={sample_size}\n# seed={seed}\n");
            match pc {
                PopulationCriterion::Classical => out.push_str("# criterion=cc\n"),
                PopulationCriterion::NeymanPearson { alpha } => {
                    writeln!(out, "# criterion=npc\n# alpha={alpha}").expect("write to string");
                }
            }
            out.push_str("feature\tvalue\tstd_error\n");
            for (name, e) in m.feature_names().iter().zip(&est) {
                writeln!(out, "{name}\t{}\t{}", sig6(e.value), sig6(e.std_error))
                    .expect("write to string");
            }
            out
        }
    };
    write_text(None, &text)
}
