//! Command dispatch: turns resolved settings and a data table into a report.

use groupperm_core::oracle::{
    self, analysis_design, exact_exposure_distribution, exact_pvalue, feasibility_check,
    rational_to_f64, ENUMERATION_GUARD,
};
use groupperm_core::sim::{self, SimConfig, TimingConfig};
use groupperm_core::{
    pvalue_curve, shift_ci, test_pairwise, test_sharp, CoarseningMap, CrDesign, Design, Experiment,
    Exposure, ExposureKind, ExposureMapping, NullSpec, ShiftGrid, SrDesign, TestConfig,
    TestStatistic,
};

use crate::error::CliError;
use crate::report::{DataSummary, ExposureAtom, OracleOutput, Report};
use crate::settings::{parse_list, AnalysisConfig, DesignSpec, NullKind, Settings, StatisticSpec};
use crate::table::{load_csv, ExperimentTable};

/// Extra outputs a command can write besides the report.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub null_draws: Option<Vec<f64>>,
    pub curve: Option<Vec<groupperm_core::estimation::CurvePoint>>,
    pub simulation_csv: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisCommand {
    TestSharp,
    TestPairwise,
    Hl,
    Ci,
    OracleEnumerate,
    OracleExactP,
    OracleFeasibility,
}

impl AnalysisCommand {
    pub fn name(self) -> &'static str {
        match self {
            AnalysisCommand::TestSharp => "test-sharp",
            AnalysisCommand::TestPairwise => "test-pairwise",
            AnalysisCommand::Hl => "hl",
            AnalysisCommand::Ci => "ci",
            AnalysisCommand::OracleEnumerate => "oracle enumerate",
            AnalysisCommand::OracleExactP => "oracle exact-p",
            AnalysisCommand::OracleFeasibility => "oracle feasibility",
        }
    }

    /// Interval commands default to the studentized statistic, whose
    /// intervals are valid for the average effect; tests default to the
    /// difference in means.
    fn default_statistic(self) -> &'static str {
        match self {
            AnalysisCommand::Ci => "studentized",
            _ => "diff-in-means",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimCommand {
    Power,
    Covariate,
    Coverage,
    Timing,
}

impl SimCommand {
    pub fn name(self) -> &'static str {
        match self {
            SimCommand::Power => "simulate power",
            SimCommand::Covariate => "simulate covariate",
            SimCommand::Coverage => "simulate coverage",
            SimCommand::Timing => "simulate timing",
        }
    }
}

/// Everything an analysis needs once the table is loaded.
struct Prepared {
    table: ExperimentTable,
    experiment: Experiment,
    design: Design,
    kind: ExposureKind,
}

fn prepare(settings: &mut Settings, cfg: &AnalysisConfig) -> Result<Prepared, CliError> {
    let table = load_csv(&cfg.data, cfg.levels.as_deref())?;
    let kind = match cfg.exposure {
        Some(kind) => kind,
        None if table.attributes.is_binary() => ExposureKind::Count,
        None => ExposureKind::Multiset,
    };
    settings.or_default("exposure", &kind.to_string());
    let mapping = match kind {
        ExposureKind::Multiset => ExposureMapping::Multiset,
        ExposureKind::Count => ExposureMapping::Count,
        ExposureKind::Coarsened => {
            let path = cfg.coarsen_map.as_ref().ok_or_else(|| {
                CliError::validation("exposure 'coarsened' needs a coarsen-map file")
            })?;
            ExposureMapping::Coarsened(load_coarsening(path)?)
        }
    };
    let design = match &cfg.design {
        DesignSpec::Sr => Design::Sr(SrDesign::from_observed(
            &table.labels,
            table.attributes.values(),
        )?),
        DesignSpec::SrBy(col) => {
            let refined = table.attributes.refine(&table.code_column(col)?)?;
            Design::Sr(SrDesign::from_observed(&table.labels, refined.values())?)
        }
        DesignSpec::Cr => Design::Cr(CrDesign::from_observed(&table.labels)?),
    };
    let experiment = Experiment::new(
        table.attributes.clone(),
        table.labels.clone(),
        table.outcomes.clone(),
        mapping,
    )?;
    Ok(Prepared {
        table,
        experiment,
        design,
        kind,
    })
}

/// Two-column CSV `(multiset, label)` with a header row.
pub fn load_coarsening(path: &std::path::Path) -> Result<CoarseningMap, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| {
            CliError::Io(format!(
                "cannot open coarsening map {}: {e}",
                path.display()
            ))
        })?;
    let mut map = CoarseningMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record =
            record.map_err(|e| CliError::validation(format!("coarsening map row {row}: {e}")))?;
        if record.len() != 2 {
            return Err(CliError::validation(format!(
                "coarsening map row {row}: expected 2 columns, found {}",
                record.len()
            )));
        }
        let codes = match Exposure::parse(&record[0], ExposureKind::Multiset) {
            Ok(Exposure::Multiset(codes)) => codes,
            Ok(_) => unreachable!("multiset parse yields a multiset"),
            Err(e) => {
                return Err(CliError::validation(format!(
                    "coarsening map row {row}: {e}"
                )))
            }
        };
        if map.get(&codes).is_some() {
            return Err(CliError::validation(format!(
                "coarsening map row {row}: multiset {} listed twice",
                &record[0]
            )));
        }
        if record[1].is_empty() {
            return Err(CliError::validation(format!(
                "coarsening map row {row}: empty label"
            )));
        }
        map.insert(codes, &record[1]);
    }
    if map.is_empty() {
        return Err(CliError::validation("coarsening map has no rows"));
    }
    Ok(map)
}

fn statistic(spec: &StatisticSpec, table: &ExperimentTable) -> Result<TestStatistic, CliError> {
    Ok(match spec {
        StatisticSpec::DiffInMeans => TestStatistic::DiffInMeans,
        StatisticSpec::Studentized => TestStatistic::Studentized,
        StatisticSpec::Stratified(col) => TestStatistic::StratifiedDiff(table.code_column(col)?),
        StatisticSpec::Residual(cols) => {
            let columns: Vec<Vec<f64>> = cols
                .iter()
                .map(|c| table.real_column(c))
                .collect::<Result<_, _>>()?;
            TestStatistic::ResidualAdjusted(columns)
        }
    })
}

fn contrast(settings: &Settings, kind: ExposureKind) -> Result<(Exposure, Exposure), CliError> {
    let parse = |key: &str| -> Result<Exposure, CliError> {
        Exposure::parse(settings.require(key)?, kind)
            .map_err(|e| CliError::validation(format!("setting '{key}': {e}")))
    };
    let (c1, c2) = (parse("c1")?, parse("c2")?);
    if c1 == c2 {
        return Err(CliError::validation("c1 and c2 must differ"));
    }
    Ok((c1, c2))
}

fn null_spec(
    kind: NullKind,
    c1: Exposure,
    c2: Exposure,
    cfg: &AnalysisConfig,
) -> Result<NullSpec, CliError> {
    match kind {
        NullKind::Sharp if cfg.subgroup.is_some() => Err(CliError::validation(
            "subgroup applies only to pairwise nulls",
        )),
        NullKind::Sharp => Ok(NullSpec::Sharp { c1, c2 }),
        NullKind::Pairwise => Ok(NullSpec::Pairwise {
            c1,
            c2,
            subgroup: cfg.subgroup,
        }),
    }
}

/// Runs an analysis command. `settings` is updated with every default used,
/// so the echoed config reproduces the run.
pub fn run_analysis(
    command: AnalysisCommand,
    mut settings: Settings,
) -> Result<(Report, Artifacts), CliError> {
    let cfg = AnalysisConfig::from_settings(&mut settings, command.default_statistic())?;
    let prepared = prepare(&mut settings, &cfg)?;
    let mut artifacts = Artifacts::default();
    let summary = DataSummary::new(&prepared.table, prepared.experiment.exposures().values());
    let test_cfg = TestConfig {
        statistic: statistic(&cfg.statistic, &prepared.table)?,
        direction: cfg.direction,
        estimator: cfg.estimator,
        replicates: cfg.permutations,
        seed: cfg.seed,
    };
    let exp = &prepared.experiment;
    let (mut test, mut interval, mut oracle_out) = (None, None, None);
    match command {
        AnalysisCommand::TestSharp | AnalysisCommand::TestPairwise => {
            let (c1, c2) = contrast(&settings, prepared.kind)?;
            let mut result = if command == AnalysisCommand::TestSharp {
                if cfg.subgroup.is_some() {
                    return Err(CliError::validation(
                        "subgroup applies only to pairwise nulls",
                    ));
                }
                test_sharp(exp, &prepared.design, &c1, &c2, &test_cfg)?
            } else {
                test_pairwise(exp, &prepared.design, &c1, &c2, cfg.subgroup, &test_cfg)?
            };
            artifacts.null_draws = Some(std::mem::take(&mut result.null_draws));
            test = Some(result);
        }
        AnalysisCommand::Hl | AnalysisCommand::Ci => {
            let (c1, c2) = contrast(&settings, prepared.kind)?;
            let grid = match settings.get("grid") {
                Some(raw) => raw.parse::<ShiftGrid>()?,
                None => {
                    let grid = ShiftGrid::default_for(exp, &c1, &c2, cfg.subgroup)?;
                    settings.or_default("grid", &grid.to_string());
                    grid
                }
            };
            let ci = if command == AnalysisCommand::Hl {
                let curve = pvalue_curve(
                    exp,
                    &prepared.design,
                    &c1,
                    &c2,
                    cfg.subgroup,
                    &grid,
                    &test_cfg,
                )?;
                groupperm_core::invert_ci(&curve, cfg.alpha)?
            } else {
                shift_ci(
                    exp,
                    &prepared.design,
                    &c1,
                    &c2,
                    cfg.subgroup,
                    &grid,
                    cfg.alpha,
                    &test_cfg,
                )?
            };
            artifacts.curve = Some(ci.pvalue_curve.clone());
            interval = Some(ci);
        }
        AnalysisCommand::OracleEnumerate => {
            let limit = settings.parse("limit", &ENUMERATION_GUARD.to_string())?;
            let design = analysis_design(exp, &prepared.design)?;
            let support = oracle::enumerate_assignments(&design, limit)?;
            let law = exact_exposure_distribution(&design, exp.attributes(), exp.mapping(), limit)?;
            oracle_out = Some(OracleOutput::Enumerate {
                support_size: support.len(),
                assignments: support
                    .iter()
                    .map(|l| l.labels().iter().map(|g| g + 1).collect())
                    .collect(),
                exposure_distribution: law
                    .atoms()
                    .iter()
                    .map(|(w, p)| ExposureAtom {
                        exposures: w.iter().map(ToString::to_string).collect(),
                        probability: p.to_string(),
                    })
                    .collect(),
            });
        }
        AnalysisCommand::OracleExactP => {
            let limit = settings.parse("limit", &ENUMERATION_GUARD.to_string())?;
            let kind: NullKind = settings.parse("null", "pairwise")?;
            let (c1, c2) = contrast(&settings, prepared.kind)?;
            let null = null_spec(kind, c1, c2, &cfg)?;
            let p = exact_pvalue(
                exp,
                &prepared.design,
                &null,
                &test_cfg.statistic,
                cfg.direction,
                limit,
            )?;
            oracle_out = Some(OracleOutput::ExactP {
                null: settings.get("null").unwrap_or("pairwise").to_string(),
                statistic_name: test_cfg.statistic.name().to_string(),
                p_value: p.to_string(),
                p_value_f64: rational_to_f64(&p),
            });
        }
        AnalysisCommand::OracleFeasibility => {
            let limit = settings.parse("limit", &ENUMERATION_GUARD.to_string())?;
            let column = settings.require("candidate-col")?.to_string();
            let candidate: Vec<Exposure> = prepared
                .table
                .text_column(&column)?
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    Exposure::parse(s, prepared.kind).map_err(|e| {
                        CliError::validation(format!("row {}: column '{column}': {e}", i + 1))
                    })
                })
                .collect::<Result<_, _>>()?;
            let feasible = feasibility_check(
                &candidate,
                &prepared.design,
                exp.attributes(),
                exp.mapping(),
                limit,
            )?;
            oracle_out = Some(OracleOutput::Feasibility { column, feasible });
        }
    }
    let mut report = Report::new(command.name(), settings.values().clone());
    report.data = Some(summary);
    report.test = test;
    report.interval = interval;
    report.oracle = oracle_out;
    Ok((report, artifacts))
}

/// Runs a simulation study.
pub fn run_simulation(
    command: SimCommand,
    mut settings: Settings,
) -> Result<(Report, Artifacts), CliError> {
    let report = if command == SimCommand::Timing {
        let defaults = TimingConfig::default();
        let cfg = TimingConfig {
            groups: parse_list(
                "groups",
                &settings.or_default("groups", &crate::table::join(&defaults.groups)),
            )?,
            draws: settings.parse("draws", &defaults.draws.to_string())?,
            cap: settings.parse("cap", &defaults.cap.to_string())?,
            seed: settings.parse("seed", &defaults.seed.to_string())?,
        };
        sim::timing_study(&cfg)?
    } else {
        let defaults = SimConfig::default();
        let taus = match command {
            SimCommand::Power => sim::POWER_TAUS.as_slice(),
            SimCommand::Covariate => sim::COVARIATE_TAUS.as_slice(),
            _ => sim::COVERAGE_TAUS.as_slice(),
        };
        let replicates = if command == SimCommand::Coverage {
            100
        } else {
            defaults.replicates
        };
        let types: Vec<usize> = parse_list(
            "group-types",
            &settings.or_default(
                "group-types",
                &crate::table::join(&sim::DEFAULT_GROUP_TYPES),
            ),
        )?;
        let cfg = SimConfig {
            ones_per_group: sim::expand_group_types(&types),
            taus: parse_list(
                "taus",
                &settings.or_default("taus", &crate::table::join(taus)),
            )?,
            replicates: settings.parse("replicates", &replicates.to_string())?,
            permutations: settings.parse("permutations", &defaults.permutations.to_string())?,
            alpha: settings.parse("alpha", &defaults.alpha.to_string())?,
            seed: settings.parse("seed", &defaults.seed.to_string())?,
            ..defaults
        };
        match command {
            SimCommand::Power => sim::power_study(&cfg)?,
            SimCommand::Covariate => sim::covariate_gain_study(&cfg)?,
            _ => sim::hl_coverage_study(&cfg)?,
        }
    };
    let artifacts = Artifacts {
        simulation_csv: Some(crate::report::simulation_csv(&report)),
        ..Artifacts::default()
    };
    let mut out = Report::new(command.name(), settings.values().clone());
    out.simulation = Some(report);
    Ok((out, artifacts))
}
