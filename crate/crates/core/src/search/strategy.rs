//! FSB-1 / FSB-2 / DSB drivers: choose sources and orientations, run the
//! per-ray search and collect the boundary inputs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    search_boundary, BoundaryHarvest, OrientationPolicy, SearchConfig, SearchError, StopReason,
    Strategy,
};
use crate::geometry::{
    axis_orientations, cosine_distance, fsb2_orientations, mirror_to_orthants, InputDomain,
    Orientation, Point,
};
use crate::oracles::Oracle;

/// DSB gives up after this many consecutive rounds without a new boundary
/// input.
const MAX_IDLE_ROUNDS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FsbVariant {
    /// Signed coordinate axes: `2d` orientations.
    Axes,
    /// Axes plus orthant diagonals: `2d + 2^d` orientations (axes only when
    /// `d = 1`).
    AxesAndDiagonals,
}

impl FsbVariant {
    pub fn orientations(self, d: usize) -> Result<Vec<Orientation>, SearchError> {
        Ok(match self {
            FsbVariant::Axes => axis_orientations(d)?,
            FsbVariant::AxesAndDiagonals if d == 1 => axis_orientations(d)?,
            FsbVariant::AxesAndDiagonals => fsb2_orientations(d)?,
        })
    }
}

fn check_sources(sources: &[Point], domain: &InputDomain) -> Result<(), SearchError> {
    if sources.is_empty() {
        return Err(SearchError::NoSources);
    }
    for s in sources {
        if !domain.contains(s) {
            return Err(SearchError::SourceOutsideDomain(s.coords().to_vec()));
        }
    }
    Ok(())
}

/// Outcome of feeding one ray into the harvest: `true` once the run must
/// stop (target reached or budget spent).
fn harvest_ray<O: Oracle + ?Sized>(
    harvest: &mut BoundaryHarvest,
    source: &Point,
    orientation: &Orientation,
    config: &SearchConfig,
    oracle: &mut O,
    domain: &InputDomain,
) -> Result<(Option<Point>, bool), SearchError> {
    if harvest.probes >= config.probe_budget {
        harvest.stop = StopReason::BudgetExhausted;
        return Ok((None, true));
    }
    let ray = search_boundary(
        source,
        orientation,
        &config.ray_params(),
        oracle,
        domain,
        config.probe_budget - harvest.probes,
    )?;
    harvest.absorb(&ray, config.lambda);
    let found = (!ray.degenerate).then_some(ray.boundary);
    if let Some(b) = &found {
        harvest.boundary_inputs.push(b.clone());
    }
    if harvest.boundary_inputs.len() >= config.target {
        harvest.stop = StopReason::TargetReached;
        return Ok((found, true));
    }
    if ray.budget_hit {
        harvest.stop = StopReason::BudgetExhausted;
        return Ok((found, true));
    }
    Ok((found, false))
}

/// Fixed-orientation search. Sources are drawn uniformly from a pool of
/// unused failure-causing inputs and retired after one use; every boundary
/// input found joins the pool.
pub fn run_fsb<O, R>(
    variant: FsbVariant,
    initial_sources: &[Point],
    config: &SearchConfig,
    oracle: &mut O,
    domain: &InputDomain,
    rng: &mut R,
) -> Result<BoundaryHarvest, SearchError>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    check_sources(initial_sources, domain)?;
    let orientations = variant.orientations(domain.dim())?;
    let mut pool: Vec<Point> = initial_sources.to_vec();
    let mut harvest = BoundaryHarvest::new(initial_sources.to_vec());

    'sources: loop {
        if pool.is_empty() {
            harvest.stop = StopReason::PoolExhausted;
            break;
        }
        let source = pool.swap_remove(rng.random_range(0..pool.len()));
        harvest.retired_sources.push(source.clone());
        let chosen: Vec<&Orientation> = match config.orientation_policy {
            OrientationPolicy::AllPerSource => orientations.iter().collect(),
            OrientationPolicy::OnePerSource => {
                vec![&orientations[rng.random_range(0..orientations.len())]]
            }
        };
        for orientation in chosen {
            let (found, stop) =
                harvest_ray(&mut harvest, &source, orientation, config, oracle, domain)?;
            if let Some(b) = found {
                pool.push(b);
            }
            if stop {
                break 'sources;
            }
        }
    }
    Ok(harvest)
}

/// Index of the candidate maximising the minimum cosine distance to the
/// already selected orientations; ties go to the lowest index.
pub fn select_most_diverse(candidates: &[Orientation], selected: &[Orientation]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let score = selected
            .iter()
            .map(|s| cosine_distance(c.components(), s.components()).expect("unit vectors"))
            .fold(f64::INFINITY, f64::min);
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

/// Next first-orthant orientation for DSB: random for the first draw,
/// otherwise the most diverse of `k` random candidates.
pub fn next_dsb_orientation<R: Rng + ?Sized>(
    selected: &[Orientation],
    d: usize,
    k: usize,
    rng: &mut R,
) -> Orientation {
    if selected.is_empty() {
        return Orientation::random_first_orthant(d, rng);
    }
    let mut candidates: Vec<Orientation> = (0..k.max(1))
        .map(|_| Orientation::random_first_orthant(d, rng))
        .collect();
    let pick = select_most_diverse(&candidates, selected);
    candidates.swap_remove(pick)
}

/// Diverse-orientation search from one fixed source. Each round draws one
/// first-orthant orientation, mirrors it into every orthant and searches
/// all mirrored rays.
pub fn run_dsb<O, R>(
    source: &Point,
    config: &SearchConfig,
    oracle: &mut O,
    domain: &InputDomain,
    rng: &mut R,
) -> Result<BoundaryHarvest, SearchError>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    check_sources(std::slice::from_ref(source), domain)?;
    let d = domain.dim();
    let mut harvest = BoundaryHarvest::new(vec![source.clone()]);
    let mut selected: Vec<Orientation> = Vec::new();
    let mut idle_rounds = 0;

    'rounds: loop {
        let orientation = next_dsb_orientation(&selected, d, config.dsb_candidates, rng);
        harvest.orientation_draws += 1;
        let mirrored = mirror_to_orthants(&orientation)?;
        selected.push(orientation);
        let before = harvest.boundary_inputs.len();
        for ray in &mirrored {
            let (_, stop) = harvest_ray(&mut harvest, source, ray, config, oracle, domain)?;
            if stop {
                break 'rounds;
            }
        }
        if harvest.boundary_inputs.len() == before {
            idle_rounds += 1;
            if idle_rounds >= MAX_IDLE_ROUNDS {
                harvest.stop = StopReason::Stalled;
                break;
            }
        } else {
            idle_rounds = 0;
        }
    }
    Ok(harvest)
}

/// Dispatches on `config.strategy`, starting from one failure-causing input.
pub fn run_strategy<O, R>(
    first_failure: &Point,
    config: &SearchConfig,
    oracle: &mut O,
    domain: &InputDomain,
    rng: &mut R,
) -> Result<BoundaryHarvest, SearchError>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    let sources = std::slice::from_ref(first_failure);
    match config.strategy {
        Strategy::Fsb1 => run_fsb(FsbVariant::Axes, sources, config, oracle, domain, rng),
        Strategy::Fsb2 => run_fsb(
            FsbVariant::AxesAndDiagonals,
            sources,
            config,
            oracle,
            domain,
            rng,
        ),
        Strategy::Dsb => run_dsb(first_failure, config, oracle, domain, rng),
    }
}
