//! End-to-end runs: covering → pair → lemma chain → projections → invariants.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use cocycle_core::almostrep::{induce_pair, torus_constant_cocycle, FiniteSubset, RepMap};
use cocycle_core::assembly::{assemble_all, measure_lemma_chain, LemmaReport, Stages};
use cocycle_core::cocycle::{
    cocycle_defect, epsilon_above, generalized_pair_defect, identity_cocycle, perturb_to_almost_pair,
    random_smooth_field, torus_line_bundle, CocyclePair, PairDefect,
};
use cocycle_core::invariants::{partition_independence, verify_k_relation, IndependenceReport, InvariantsReport, KRelationReport};
use cocycle_core::projection::{extract_projection, Extraction};
use cocycle_core::space::{BumpProfile, Covering, PartitionOfUnity, SampleGrid, SpaceKind};
use serde::Serialize;

use crate::config::{EpsilonChoice, ExperimentConfig, PartitionChoice, Rep, Source, Space};
use crate::RunError;

/// Everything built from a config before any measurement.
pub struct Setup {
    pub covering: Arc<Covering>,
    pub pou: PartitionOfUnity,
    /// The second partition when `partition = both`.
    pub pou_alt: Option<PartitionOfUnity>,
    pub pair: CocyclePair,
}

fn rep(r: Rep, n: usize) -> RepMap {
    match r {
        Rep::Voiculescu => RepMap::voiculescu(n),
        Rep::Trivial => RepMap::trivial(n),
    }
}

/// Builds the covering, partition(s) and cocycle pair. Geometry errors are
/// config errors.
pub fn setup(cfg: &ExperimentConfig) -> Result<Setup, RunError> {
    let kind = match cfg.space {
        Space::Circle => SpaceKind::Circle,
        Space::Torus => SpaceKind::Torus,
    };
    let grid = Arc::new(SampleGrid::new(kind, cfg.n).map_err(RunError::config)?);
    let covering = Arc::new(Covering::new(grid, cfg.charts, cfg.chart_side).map_err(RunError::config)?);
    let profile = match cfg.partition {
        PartitionChoice::Quadratic => BumpProfile::Quadratic,
        _ => BumpProfile::Cosine,
    };
    let pou = PartitionOfUnity::new(covering.clone(), profile).map_err(RunError::config)?;
    let pou_alt = match cfg.partition {
        PartitionChoice::Both => Some(PartitionOfUnity::new(covering.clone(), BumpProfile::Quadratic).map_err(RunError::config)?),
        _ => None,
    };

    let n = cfg.effective_fiber_dim();
    let pair = match cfg.source {
        Source::Identity => {
            let id = identity_cocycle(covering.clone(), n);
            CocyclePair::new(id.clone(), id, 1.0)?
        }
        Source::Perturbed => perturb_to_almost_pair(&identity_cocycle(covering.clone(), n), cfg.strength, cfg.seed)?,
        Source::BlockGeneralized => {
            let u = random_smooth_field(covering.clone(), n - 1, 1.0, cfg.seed)?;
            let plus = u.direct_sum(&torus_line_bundle(covering.clone(), 1)?)?;
            let minus = u.direct_sum(&identity_cocycle(covering.clone(), 1))?;
            CocyclePair::new(plus, minus, 1.0)?
        }
        Source::AlmostRep => {
            let gamma = torus_constant_cocycle(covering.clone()).map_err(RunError::config)?;
            let subset = FiniteSubset::ball(cfg.f_radius);
            let (plus, minus) = (rep(cfg.rep_plus, n), rep(cfg.rep_minus, n));
            induce_pair(&plus, &minus, &gamma, &subset).map_err(RunError::config)?.pair
        }
    };
    let pair = match cfg.epsilon {
        EpsilonChoice::Fixed(e) => CocyclePair::new(pair.plus, pair.minus, e)?,
        EpsilonChoice::Auto => CocyclePair::with_measured_epsilon(pair.plus, pair.minus)?,
    };
    Ok(Setup { covering, pou, pou_alt, pair })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringSummary {
    pub space: &'static str,
    pub n: usize,
    pub points: usize,
    pub charts: usize,
    pub chart_side: f64,
    pub partition_deviation: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CocycleDefects {
    pub plus: f64,
    pub minus: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtractionMargins {
    pub defect: f64,
    pub gap: f64,
    pub measured_gap: f64,
    pub distance: f64,
    pub gap_bound: f64,
}

impl From<&Extraction> for ExtractionMargins {
    fn from(e: &Extraction) -> Self {
        Self { defect: e.defect, gap: e.gap, measured_gap: e.measured_gap, distance: e.distance, gap_bound: e.gap_bound }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Status {
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub covering: CoveringSummary,
    pub cocycle_defects: CocycleDefects,
    pub pair_defect: PairDefect,
    pub lemmas: LemmaReport,
    /// `‖Q − Q²‖` and the spectral-cut margins; absent when `Q` is not an
    /// almost projection.
    pub extraction: Option<ExtractionMargins>,
    /// `ξ` from `Q`.
    pub invariants: Option<InvariantsReport>,
    pub q_defect: Option<f64>,
    pub k_relation: Option<KRelationReport>,
    pub independence: Option<IndependenceReport>,
    pub status: Status,
}

/// Wall-clock seconds per stage, kept out of the report so that reports are
/// reproducible byte for byte.
pub type Timings = BTreeMap<String, f64>;

struct Clock {
    start: Instant,
    timings: Timings,
}

impl Clock {
    fn new() -> Self {
        Self { start: Instant::now(), timings: Timings::new() }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.insert(stage.to_string(), (now - self.start).as_secs_f64());
        self.start = now;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Verify,
    Invariants,
}

pub struct Run {
    pub report: RunReport,
    pub timings: Timings,
    pub stages: Stages,
    pub xi: Option<Extraction>,
    pub setup: Setup,
}

pub fn run(cfg: &ExperimentConfig, mode: Mode) -> Result<Run, RunError> {
    let mut clock = Clock::new();
    let setup = setup(cfg)?;
    clock.lap("setup");

    let cocycle_defects = CocycleDefects { plus: cocycle_defect(&setup.pair.plus)?, minus: cocycle_defect(&setup.pair.minus)? };
    let pair_defect = generalized_pair_defect(&setup.pair)?;
    clock.lap("defects");

    let stages = assemble_all(&setup.pair, &setup.pou)?;
    clock.lap("assembly");
    let lemmas = measure_lemma_chain(&setup.pair, &stages)?;
    clock.lap("lemmas");

    let mut failures: Vec<String> = lemmas.failures().into_iter().map(|f| format!("lemma:{f}")).collect();
    let (mut extraction, mut invariants, mut q_defect, mut k_relation, mut independence, mut xi) =
        (None, None, None, None, None, None);

    if mode == Mode::Invariants {
        match extract_projection(&stages.q) {
            Ok(e) => {
                extraction = Some(ExtractionMargins::from(&e));
                q_defect = Some(e.defect);
                invariants = Some(InvariantsReport::of(&e, "xi")?);
                xi = Some(e);
            }
            Err(cocycle_core::Error::NotAlmostProjection(d)) => {
                q_defect = Some(d);
                failures.push("extraction:xi".into());
            }
            Err(e) => return Err(e.into()),
        }
        clock.lap("extraction");

        let k = verify_k_relation(&setup.pair, &setup.pou)?;
        if k.rank_identity == Some(false) {
            failures.push("k_relation:rank_identity".into());
        }
        if k.chern_identity == Some(false) {
            failures.push("k_relation:chern_identity".into());
        }
        k_relation = Some(k);
        clock.lap("k_relation");

        if let Some(alt) = &setup.pou_alt {
            let r = partition_independence(&setup.pair, &setup.pou, alt)?;
            if !r.pass() {
                failures.push("independence:xi".into());
            }
            independence = Some(r);
            clock.lap("independence");
        }
    }

    let covering = CoveringSummary {
        space: match cfg.space {
            Space::Circle => "circle",
            Space::Torus => "torus",
        },
        n: cfg.n,
        points: setup.covering.grid().len(),
        charts: setup.covering.chart_count(),
        chart_side: setup.covering.side(),
        partition_deviation: setup.pou.max_square_sum_deviation(),
    };
    let report = RunReport {
        command: match mode {
            Mode::Verify => "verify".into(),
            Mode::Invariants => "invariants".into(),
        },
        config: cfg.echo(),
        seed: cfg.seed,
        covering,
        cocycle_defects,
        pair_defect,
        lemmas,
        extraction,
        invariants,
        q_defect,
        k_relation,
        independence,
        status: Status { pass: failures.is_empty(), failures },
    };
    Ok(Run { report, timings: clock.timings, stages, xi, setup })
}

/// `ε` such that the pair passes with the measured defect.
pub fn measured_epsilon(pair: &CocyclePair) -> Result<f64, RunError> {
    Ok(epsilon_above(generalized_pair_defect(pair)?.max()))
}
