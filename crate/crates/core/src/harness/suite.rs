//! Grid runner: expands a [`SuiteConfig`] into cells, evaluates every trial and
//! aggregates margins per named check.
//!
//! A cell fixes (check, dim, rank profile, family, a, t). Its seed is derived from the
//! suite seed and the cell's position in the grid, and each trial uses its own stream of
//! that seed, so the report does not depend on the worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::checks::*;
use super::ensemble::{block_state, draw_state, mix_seed, trial_rng, Family, RankProfile};
use super::report::{CheckKind, CheckReport, MarginTally};
use crate::error::{Error, Result};
use crate::matrix_io::write_matrix;
use crate::operator::{support_projector, DensityMatrix, HermitianMatrix, PsdMatrix, ToleranceConfig};

/// Checks the suite knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Triangle1,
    Triangle2,
    Rbts,
    Rbts2,
    Tderiv,
    Aux,
    Monoboth,
    Convexity,
    Scaling,
    Fannes,
    Triangle1Equality,
    Triangle2Equality,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::Triangle1,
        Check::Triangle2,
        Check::Rbts,
        Check::Rbts2,
        Check::Tderiv,
        Check::Aux,
        Check::Monoboth,
        Check::Convexity,
        Check::Scaling,
        Check::Fannes,
        Check::Triangle1Equality,
        Check::Triangle2Equality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Triangle1 => "triangle1",
            Check::Triangle2 => "triangle2",
            Check::Rbts => "rbts",
            Check::Rbts2 => "rbts2",
            Check::Tderiv => "tderiv",
            Check::Aux => "aux",
            Check::Monoboth => "monoboth",
            Check::Convexity => "convexity",
            Check::Scaling => "scaling",
            Check::Fannes => "fannes",
            Check::Triangle1Equality => "triangle1_equality",
            Check::Triangle2Equality => "triangle2_equality",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    fn uses_a(self) -> bool {
        matches!(
            self,
            Check::Triangle1
                | Check::Triangle2
                | Check::Monoboth
                | Check::Convexity
                | Check::Scaling
                | Check::Triangle1Equality
                | Check::Triangle2Equality
        )
    }

    fn is_equality(self) -> bool {
        matches!(self, Check::Triangle1Equality | Check::Triangle2Equality)
    }

    /// Named margins produced per trial, with their kind and fixed threshold (None = suite tol).
    fn margins(self) -> &'static [(&'static str, CheckKind, Option<f64>)] {
        use CheckKind::*;
        match self {
            Check::Triangle1 => &[("triangle1", Inequality, None)],
            Check::Triangle2 => &[
                ("triangle2.tight", Inequality, None),
                ("triangle2.linear", Inequality, None),
                ("triangle2.chain", Inequality, Some(1e-12)),
            ],
            Check::Rbts => &[
                ("rbts.upper", Inequality, None),
                ("rbts.lower", Inequality, None),
                ("rbts.eq_upper", Inequality, None),
                ("rbts.eq_lower", Inequality, None),
            ],
            Check::Rbts2 => &[("rbts2.upper", Inequality, None), ("rbts2.lower", Inequality, None)],
            Check::Tderiv => &[("tderiv.lower", Inequality, None), ("tderiv.upper", Inequality, None)],
            Check::Aux => &[
                ("lieb1", Inequality, None),
                ("lieb2", Inequality, None),
                ("lemma_f", Inequality, Some(1e-12)),
                ("s0_linearity", Inequality, Some(1e-10)),
                ("s1_linearity", Inequality, Some(1e-10)),
                ("coefficient", Inequality, None),
                ("s1_fannes", Inequality, Some(1e-10)),
            ],
            Check::Monoboth => &[
                ("monoboth.rel_both", Inequality, None),
                ("monoboth.tre_both", Inequality, None),
                ("monoboth.rel_second", Inequality, None),
                ("monoboth.tre_second", Inequality, None),
            ],
            Check::Convexity => &[("convexity.tre", Inequality, Some(1e-10)), ("convexity.t_form", Inequality, Some(1e-10))],
            Check::Scaling => &[("scaling", Inequality, Some(1e-10)), ("commuting_collapse", Inequality, Some(1e-10))],
            Check::Fannes => &[("s1_fannes", Inequality, Some(1e-10))],
            Check::Triangle1Equality => &[("triangle1.equality", Equality, Some(1e-8))],
            Check::Triangle2Equality => &[("triangle2.equality", Equality, Some(1e-8))],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub checks: Vec<Check>,
    pub dims: Vec<usize>,
    pub a_values: Vec<f64>,
    /// Mixing weights for the equality families.
    pub t_values: Vec<f64>,
    pub profiles: Vec<RankProfile>,
    pub families: Vec<Family>,
    /// Trials per grid cell.
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub numerics: ToleranceConfig,
    pub record_trials: bool,
    /// Worker threads; None uses the global pool. Does not affect results.
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Directory receiving the inputs of violating trials.
    #[serde(skip)]
    pub dump_failures: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            checks: Vec::new(),
            dims: vec![2, 3, 4, 8],
            a_values: vec![0.05, 0.5, 0.95],
            t_values: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            profiles: vec![RankProfile::Full],
            families: vec![Family::GenericMixed],
            trials: 100,
            seed: 0,
            tol: 1e-9,
            numerics: ToleranceConfig::default(),
            record_trials: false,
            workers: None,
            dump_failures: None,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidSpec(format!("tol must be positive, got {}", self.tol)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpec(format!("dim must be at least 2, got {d}")));
        }
        if let Some(&a) = self.a_values.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::InvalidSpec(format!("a must lie in (0, 1), got {a}")));
        }
        if let Some(&t) = self.t_values.iter().find(|&&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::InvalidSpec(format!("t must lie in [0, 1], got {t}")));
        }
        for p in &self.profiles {
            if let RankProfile::Deficient(0) = p {
                return Err(Error::InvalidSpec("deficient rank must be at least 1".into()));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidSpec("workers must be at least 1".into()));
        }
        self.numerics.validate()
    }

    /// Hex SHA-256 of the result-relevant part of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub pass: bool,
    pub config_digest: String,
    pub seed: u64,
    pub config: SuiteConfig,
    pub reports: Vec<CheckReport>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
struct Cell {
    check: Check,
    dim: usize,
    profile: RankProfile,
    family: Family,
    a: Option<f64>,
    t: Option<f64>,
    seed: u64,
}

impl Cell {
    fn label(&self, trial: u64) -> String {
        let mut s = format!("{}/dim={}/{:?}/{:?}", self.check.name(), self.dim, self.profile, self.family);
        if let Some(a) = self.a {
            s.push_str(&format!("/a={a}"));
        }
        if let Some(t) = self.t {
            s.push_str(&format!("/t={t}"));
        }
        s.push_str(&format!("/seed={}/trial={trial}", self.seed));
        s
    }

    fn rank(&self) -> usize {
        self.profile.rank_capped(self.dim)
    }
}

fn expand(config: &SuiteConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    let mut checks = config.checks.clone();
    checks.sort();
    checks.dedup();
    for &check in &checks {
        let a_grid: Vec<Option<f64>> = if check.uses_a() {
            config.a_values.iter().map(|&a| Some(a)).collect()
        } else {
            vec![None]
        };
        let t_grid: Vec<Option<f64>> = if check.is_equality() {
            config.t_values.iter().map(|&t| Some(t)).collect()
        } else {
            vec![None]
        };
        let families: Vec<Family> = if check.is_equality() {
            vec![Family::OrthogonalBlocks]
        } else {
            config.families.clone()
        };
        for &dim in &config.dims {
            for &profile in &config.profiles {
                for &family in &families {
                    for &a in &a_grid {
                        for &t in &t_grid {
                            let salt = cells.len() as u64;
                            cells.push(Cell {
                                check,
                                dim,
                                profile,
                                family,
                                a,
                                t,
                                seed: mix_seed(config.seed, salt),
                            });
                        }
                    }
                }
            }
        }
    }
    cells
}

/// Inputs of one trial. Scalars (weights, quadratic coefficients) are drawn after the
/// matrices from the same stream.
struct TrialInputs {
    states: Vec<DensityMatrix>,
    psd: Vec<PsdMatrix>,
    hermitian: Vec<HermitianMatrix>,
    scalars: Vec<f64>,
}

impl TrialInputs {
    fn matrices(&self) -> Vec<HermitianMatrix> {
        let mut out: Vec<HermitianMatrix> = self.states.iter().map(|s| s.matrix().clone()).collect();
        out.extend(self.psd.iter().map(|p| p.matrix().clone()));
        out.extend(self.hermitian.iter().cloned());
        out
    }
}

fn draw_states(rng: &mut ChaCha8Rng, cell: &Cell, n: usize) -> Result<Vec<DensityMatrix>> {
    (0..n).map(|slot| draw_state(rng, cell.dim, cell.rank(), cell.family, slot)).collect()
}

/// State scaled to a trace log-uniform in [1e-2, 1e2].
fn draw_operator(rng: &mut ChaCha8Rng, cell: &Cell, slot: usize) -> Result<PsdMatrix> {
    let s = draw_state(rng, cell.dim, cell.rank(), cell.family, slot)?;
    let trace = 10f64.powf(rng.random_range(-2.0..=2.0));
    s.scaled(trace)
}

fn draw_operators(rng: &mut ChaCha8Rng, cell: &Cell, n: usize) -> Result<Vec<PsdMatrix>> {
    (0..n).map(|slot| draw_operator(rng, cell, slot)).collect()
}

fn draw_inputs(cell: &Cell, trial: u64, tol: &ToleranceConfig) -> Result<TrialInputs> {
    let mut rng = trial_rng(cell.seed, trial);
    let mut inputs = TrialInputs {
        states: Vec::new(),
        psd: Vec::new(),
        hermitian: Vec::new(),
        scalars: Vec::new(),
    };
    match cell.check {
        Check::Triangle1 | Check::Triangle2 | Check::Fannes => {
            inputs.states = draw_states(&mut rng, cell, 3)?;
        }
        Check::Rbts | Check::Rbts2 | Check::Tderiv | Check::Monoboth => {
            inputs.psd = draw_operators(&mut rng, cell, 3)?;
        }
        Check::Aux => {
            inputs.psd = draw_operators(&mut rng, cell, 2)?;
            inputs.states = draw_states(&mut rng, cell, 3)?;
            let alpha = rng.random_range(0.0..2.0);
            let gamma = rng.random_range(-2.0..=0.0);
            let beta = rng.random_range(gamma..=2.0);
            let w = rng.random_range(0.0..=1.0);
            inputs.scalars = vec![alpha, beta, gamma, w];
        }
        Check::Convexity => {
            inputs.states = draw_states(&mut rng, cell, 4)?;
            inputs.psd = draw_operators(&mut rng, cell, 2)?;
            for p in &inputs.psd {
                let h = super::ensemble::random_hermitian(&mut rng, cell.dim);
                let proj = support_projector(p, tol);
                let compressed = HermitianMatrix::hermitian_part(&(proj.entries() * h.entries() * proj.entries()));
                inputs.hermitian.push(compressed);
            }
        }
        Check::Scaling => {
            inputs.states = draw_states(&mut rng, cell, 2)?;
            let b = rng.random_range(0.0..2.0);
            let c = rng.random_range(0.0..2.0);
            inputs.scalars = vec![b, c];
        }
        Check::Triangle1Equality | Check::Triangle2Equality => {
            // exact block form: first state on block 0, second on block 1
            let rank = cell.rank();
            inputs.states = vec![
                block_state(&mut rng, cell.dim, rank, 0)?,
                block_state(&mut rng, cell.dim, rank, 1)?,
            ];
        }
    }
    Ok(inputs)
}

const SCALING_FACTORS: [f64; 3] = [0.5, 2.0, 10.0];

fn evaluate(cell: &Cell, x: &TrialInputs, tol: &ToleranceConfig) -> Vec<Option<f64>> {
    let s = &x.states;
    let p = &x.psd;
    let a = cell.a.unwrap_or(0.5);
    match cell.check {
        Check::Triangle1 => vec![check_triangle1(a, &s[0], &s[1], &s[2], tol).ok()],
        Check::Triangle2 => group(check_triangle2(a, &s[0], &s[1], &s[2], tol).map(|m| [m.tight, m.linear, m.chain])),
        Check::Rbts => group(check_rbts(&p[0], &p[1], &p[2], tol).map(|m| [m.upper, m.lower, m.eq_upper, m.eq_lower])),
        Check::Rbts2 => group(check_rbts2(&p[0], &p[1], &p[2], tol).map(|m| [m.upper, m.lower])),
        Check::Tderiv => group(check_tderiv(&p[0], &p[1], &p[2], tol).map(|m| [m.lower, m.upper])),
        Check::Aux => {
            let [alpha, beta, gamma, w] = x.scalars[..] else { unreachable!() };
            vec![
                lieb1_margin(&p[0], &p[1], tol).ok(),
                lieb2_margin(&p[0], &p[1], tol).ok(),
                Some(lemma_f_margin(alpha, beta, gamma, 200)),
                s0_linearity_defect(w, &s[0], &s[1], &s[2], tol).ok(),
                s1_linearity_defect(w, &s[0], &s[1], &s[2], tol).ok(),
                Some(linear_coefficient(w.clamp(1e-6, 1.0 - 1e-6)) - 1.0),
                s1_fannes_margin(&s[0], &s[1], &s[2], tol).ok(),
            ]
        }
        Check::Monoboth => group(check_monoboth(a, &p[0], &p[1], &p[2], tol).map(|m| [m.rel_both, m.tre_both, m.rel_second, m.tre_second])),
        Check::Convexity => vec![
            tre_convexity_margin(a, (&s[0], &s[1]), (&s[2], &s[3]), tol).ok(),
            t_form_convexity_margin((&p[0], &x.hermitian[0]), (&p[1], &x.hermitian[1]), tol).ok(),
        ],
        Check::Scaling => {
            let worst = SCALING_FACTORS
                .iter()
                .map(|&b| scaling_defect(a, b, &s[0], &s[1], tol))
                .try_fold(f64::INFINITY, |acc, d| d.map(|d| acc.min(d)));
            vec![worst.ok(), commuting_collapse_defect(a, x.scalars[0], x.scalars[1], &s[0], tol).ok()]
        }
        Check::Fannes => vec![s1_fannes_margin(&s[0], &s[1], &s[2], tol).ok()],
        Check::Triangle1Equality => vec![triangle1_equality_margin(a, cell.t.unwrap_or(0.5), &s[0], &s[1], tol).ok()],
        Check::Triangle2Equality => vec![triangle2_equality_margin(a, cell.t.unwrap_or(0.5), &s[0], &s[1], tol).ok()],
    }
}

/// All margins of a grouped check, or none if its evaluation failed.
fn group<const N: usize>(r: Result<[f64; N]>) -> Vec<Option<f64>> {
    match r {
        Ok(m) => m.into_iter().map(Some).collect(),
        Err(_) => vec![None; N],
    }
}

fn run_trial(cell: &Cell, trial: u64, tol: &ToleranceConfig) -> Vec<Option<f64>> {
    let n = cell.check.margins().len();
    match draw_inputs(cell, trial, tol) {
        Ok(inputs) => evaluate(cell, &inputs, tol),
        Err(_) => vec![None; n],
    }
}

fn trial_digest(label: &str) -> String {
    hex(&Sha256::digest(label.as_bytes())[..8])
}

/// Runs every selected check over the configured grid.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let digest = config.digest();
    let cells = expand(config);
    let trials = config.trials as u64;
    let tol = config.numerics;
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();

    let compute = || -> Vec<Vec<Option<f64>>> {
        jobs.par_iter()
            .map(|&(c, t)| run_trial(&cells[c], t, &tol))
            .collect()
    };
    let outcomes = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidSpec(format!("cannot start worker pool: {e}")))?
            .install(compute),
        None => compute(),
    };

    let mut tallies: BTreeMap<&'static str, (usize, MarginTally)> = BTreeMap::new();
    let mut order = 0;
    let mut failures: Vec<(usize, u64, &'static str)> = Vec::new();
    for (&(c, t), margins) in jobs.iter().zip(&outcomes) {
        let cell = &cells[c];
        for (&(name, kind, fixed), &m) in cell.check.margins().iter().zip(margins) {
            let (_, tally) = tallies.entry(name).or_insert_with(|| {
                order += 1;
                (order, MarginTally::new(name, kind, fixed.unwrap_or(config.tol), config.record_trials))
            });
            let violated = tally.push(m, || {
                let label = cell.label(t);
                let d = trial_digest(&label);
                (label, d)
            });
            if violated {
                failures.push((c, t, name));
            }
        }
    }

    if let Some(dir) = &config.dump_failures {
        dump_failures(dir, &cells, &failures, &tol)?;
    }

    let mut ordered: Vec<(usize, MarginTally)> = tallies.into_values().collect();
    ordered.sort_by_key(|(o, _)| *o);
    let reports: Vec<CheckReport> = ordered
        .into_iter()
        .map(|(_, t)| t.finish(config.seed, &digest))
        .collect();
    Ok(SuiteReport {
        pass: reports.iter().all(CheckReport::passed),
        config_digest: digest,
        seed: config.seed,
        config: config.clone(),
        reports,
    })
}

fn dump_failures(
    dir: &Path,
    cells: &[Cell],
    failures: &[(usize, u64, &'static str)],
    tol: &ToleranceConfig,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut seen = std::collections::BTreeSet::new();
    for &(c, t, name) in failures {
        if !seen.insert((c, t)) {
            continue;
        }
        let cell = &cells[c];
        let label = cell.label(t);
        let d = trial_digest(&label);
        let Ok(inputs) = draw_inputs(cell, t, tol) else {
            continue;
        };
        for (k, m) in inputs.matrices().iter().enumerate() {
            write_matrix(&dir.join(format!("{name}-{d}-{k}.json")), m)?;
        }
        std::fs::write(dir.join(format!("{name}-{d}.txt")), format!("{label}\n"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(checks: Vec<Check>) -> SuiteConfig {
        SuiteConfig {
            checks,
            dims: vec![2, 3],
            a_values: vec![0.5],
            t_values: vec![0.3],
            trials: 5,
            seed: 11,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn empty_check_list_passes() {
        let r = run_suite(&small(vec![])).unwrap();
        assert!(r.pass);
        assert!(r.reports.is_empty());
    }

    #[test]
    fn negative_tol_is_invalid() {
        let mut c = small(vec![Check::Triangle1]);
        c.tol = -1.0;
        assert!(matches!(run_suite(&c), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn replay_and_worker_count_do_not_change_reports() {
        let mut c = small(Check::ALL.to_vec());
        c.record_trials = true;
        let one = run_suite(&SuiteConfig { workers: Some(1), ..c.clone() }).unwrap();
        let two = run_suite(&SuiteConfig { workers: Some(2), ..c.clone() }).unwrap();
        let again = run_suite(&c).unwrap();
        let j = |r: &SuiteReport| serde_json::to_string(r).unwrap();
        assert_eq!(j(&one), j(&two));
        assert_eq!(j(&one), j(&again));
        assert!(one.pass, "{}", j(&one));
    }

    #[test]
    fn cell_seeds_differ() {
        let cells = expand(&small(vec![Check::Triangle1, Check::Triangle2]));
        assert_eq!(cells.len(), 4);
        let mut seeds: Vec<u64> = cells.iter().map(|c| c.seed).collect();
        seeds.dedup();
        assert_eq!(seeds.len(), 4);
    }

    #[test]
    fn check_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(Check::from_name(c.name()), Some(c));
        }
        assert_eq!(Check::from_name("nope"), None);
    }
}
