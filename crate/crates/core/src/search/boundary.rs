//! Searching one ray from a failure-causing source for the last
//! failure-causing input before the region boundary.
//!
//! Positions along the ray are tracked as a signed scalar offset `t`, the
//! probe point being `source + t * orientation`. A probe that falls outside
//! the input domain is a miss and never reaches the oracle.

use serde::{Deserialize, Serialize};

use super::{Alg1Mode, SearchError};
use crate::geometry::{InputDomain, Orientation, Point};
use crate::oracles::Oracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayParams {
    pub extension_length: f64,
    pub lambda: u32,
    pub mode: Alg1Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeOutcome {
    Hit,
    Miss,
    OutOfDomain,
}

impl ProbeOutcome {
    pub fn is_hit(self) -> bool {
        self == ProbeOutcome::Hit
    }
}

/// Literal-mode state after a probe: the next step length, the sign of the
/// orientation relative to the original ray, and the retracted flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiteralState {
    pub step_length: f64,
    pub sign: i8,
    pub retracted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeStep {
    pub offset: f64,
    pub outcome: ProbeOutcome,
    pub literal: Option<LiteralState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayOutcome {
    /// The boundary input, or the source itself when `degenerate`.
    pub boundary: Point,
    /// Offset of `boundary` along the ray.
    pub offset: f64,
    /// No failure-causing input other than the source was found.
    pub degenerate: bool,
    pub probes: u64,
    pub iterations: u64,
    pub max_miss_streak: u32,
    pub budget_hit: bool,
}

/// Searches one ray. `probe_allowance` caps the oracle calls this ray may
/// make.
pub fn search_boundary<O: Oracle + ?Sized>(
    source: &Point,
    orientation: &Orientation,
    params: &RayParams,
    oracle: &mut O,
    domain: &InputDomain,
    probe_allowance: u64,
) -> Result<RayOutcome, SearchError> {
    let mut ray = Ray::new(source, orientation, oracle, domain, probe_allowance, false)?;
    ray.run(params)
}

/// Like [`search_boundary`] but also returns every probe step in order.
pub fn search_boundary_traced<O: Oracle + ?Sized>(
    source: &Point,
    orientation: &Orientation,
    params: &RayParams,
    oracle: &mut O,
    domain: &InputDomain,
    probe_allowance: u64,
) -> Result<(RayOutcome, Vec<ProbeStep>), SearchError> {
    let mut ray = Ray::new(source, orientation, oracle, domain, probe_allowance, true)?;
    let outcome = ray.run(params)?;
    Ok((outcome, ray.trace.unwrap_or_default()))
}

struct Ray<'a, O: ?Sized> {
    source: &'a Point,
    orientation: &'a Orientation,
    oracle: &'a mut O,
    domain: &'a InputDomain,
    allowance: u64,
    probes: u64,
    iterations: u64,
    streak: u32,
    max_streak: u32,
    budget_hit: bool,
    trace: Option<Vec<ProbeStep>>,
}

impl<'a, O: Oracle + ?Sized> Ray<'a, O> {
    fn new(
        source: &'a Point,
        orientation: &'a Orientation,
        oracle: &'a mut O,
        domain: &'a InputDomain,
        allowance: u64,
        traced: bool,
    ) -> Result<Self, SearchError> {
        if source.dim() != domain.dim() || orientation.dim() != domain.dim() {
            return Err(crate::geometry::GeometryError::DimensionMismatch {
                expected: domain.dim(),
                found: if source.dim() != domain.dim() {
                    source.dim()
                } else {
                    orientation.dim()
                },
            }
            .into());
        }
        Ok(Ray {
            source,
            orientation,
            oracle,
            domain,
            allowance,
            probes: 0,
            iterations: 0,
            streak: 0,
            max_streak: 0,
            budget_hit: false,
            trace: traced.then(Vec::new),
        })
    }

    fn point(&self, t: f64) -> Point {
        self.source.along(self.orientation, t)
    }

    /// `None` when the probe allowance is spent.
    fn probe(&mut self, t: f64) -> Result<Option<ProbeOutcome>, SearchError> {
        let p = self.point(t);
        let outcome = if !self.domain.contains(&p) {
            ProbeOutcome::OutOfDomain
        } else {
            if self.probes >= self.allowance {
                self.budget_hit = true;
                return Ok(None);
            }
            self.probes += 1;
            if self.oracle.verdict(&p)?.is_fail() {
                ProbeOutcome::Hit
            } else {
                ProbeOutcome::Miss
            }
        };
        self.iterations += 1;
        if outcome.is_hit() {
            self.streak = 0;
        } else {
            self.streak += 1;
            self.max_streak = self.max_streak.max(self.streak);
        }
        if let Some(trace) = self.trace.as_mut() {
            trace.push(ProbeStep {
                offset: t,
                outcome,
                literal: None,
            });
        }
        Ok(Some(outcome))
    }

    fn run(&mut self, params: &RayParams) -> Result<RayOutcome, SearchError> {
        let found = match params.mode {
            Alg1Mode::Bracketing => self.bracketing(params)?,
            Alg1Mode::Literal => self.literal(params)?,
        };
        let (boundary, offset, degenerate) = match found {
            Some(t) => (self.point(t), t, false),
            None => (self.source.clone(), 0.0, true),
        };
        Ok(RayOutcome {
            boundary,
            offset,
            degenerate,
            probes: self.probes,
            iterations: self.iterations,
            max_miss_streak: self.max_streak,
            budget_hit: self.budget_hit,
        })
    }

    /// Returns the deepest failure-causing offset, if any.
    fn bracketing(&mut self, params: &RayParams) -> Result<Option<f64>, SearchError> {
        let step = params.extension_length;
        let mut lo = 0.0;
        let mut hi;
        loop {
            let t = lo + step;
            match self.probe(t)? {
                None => return Ok((lo > 0.0).then_some(lo)),
                Some(ProbeOutcome::Hit) => lo = t,
                Some(_) => {
                    hi = t;
                    break;
                }
            }
        }
        while self.streak < params.lambda {
            let mid = lo + 0.5 * (hi - lo);
            if !(mid > lo && mid < hi) {
                break;
            }
            let p_mid = self.point(mid);
            if p_mid == self.point(lo) || p_mid == self.point(hi) {
                break;
            }
            match self.probe(mid)? {
                None => break,
                Some(ProbeOutcome::Hit) => lo = mid,
                Some(_) => hi = mid,
            }
        }
        Ok((lo > 0.0).then_some(lo))
    }

    /// Returns the last failure-causing offset, if any.
    fn literal(&mut self, params: &RayParams) -> Result<Option<f64>, SearchError> {
        let mut pos = 0.0;
        let mut len = params.extension_length;
        let mut sign = 1.0;
        let mut retracted = false;
        let mut last_hit = None;
        while self.streak < params.lambda {
            let next = pos + len * sign;
            if next == pos {
                break;
            }
            pos = next;
            let Some(outcome) = self.probe(pos)? else {
                break;
            };
            if outcome.is_hit() {
                last_hit = Some(pos);
                if retracted {
                    len /= 2.0;
                    sign = -sign;
                    retracted = false;
                }
            } else {
                len /= 2.0;
                sign = -sign;
                retracted = true;
            }
            if let Some(step) = self.trace.as_mut().and_then(|t| t.last_mut()) {
                step.literal = Some(LiteralState {
                    step_length: len,
                    sign: if sign > 0.0 { 1 } else { -1 },
                    retracted,
                });
            }
        }
        Ok(last_hit.filter(|t| *t != 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::FnOracle;

    fn interval_oracle(lo: f64, hi: f64) -> FnOracle<impl FnMut(&Point) -> bool> {
        FnOracle::new(1, move |p: &Point| (lo..=hi).contains(&p.coords()[0]))
    }

    fn one(x: f64) -> Point {
        Point::new(vec![x]).unwrap()
    }

    fn plus() -> Orientation {
        Orientation::from_unit(vec![1.0]).unwrap()
    }

    fn params(length: f64, lambda: u32, mode: Alg1Mode) -> RayParams {
        RayParams {
            extension_length: length,
            lambda,
            mode,
        }
    }

    #[test]
    fn bracketing_converges_to_interval_end() {
        let domain = InputDomain::unit(1).unwrap();
        let mut oracle = interval_oracle(0.2, 0.6);
        let out = search_boundary(
            &one(0.4),
            &plus(),
            &params(1.0, 20, Alg1Mode::Bracketing),
            &mut oracle,
            &domain,
            u64::MAX,
        )
        .unwrap();
        assert!(!out.degenerate);
        let x = out.boundary.coords()[0];
        assert!(x <= 0.6 && 0.6 - x <= 2f64.powi(-19));
    }

    #[test]
    fn domain_edge_acts_as_boundary() {
        let domain = InputDomain::unit(1).unwrap();
        let mut oracle = FnOracle::new(1, |_: &Point| true);
        let out = search_boundary(
            &one(0.5),
            &plus(),
            &params(1.0, 20, Alg1Mode::Bracketing),
            &mut oracle,
            &domain,
            u64::MAX,
        )
        .unwrap();
        assert!((out.boundary.coords()[0] - 1.0).abs() < 1e-4);
        // out-of-domain probes never reach the oracle
        assert!(oracle.stats().probe_count < out.iterations);
    }

    #[test]
    fn golden_bracketing_trace() {
        let domain = InputDomain::unit(1).unwrap();
        let mut oracle = interval_oracle(0.2, 0.6);
        let (_, trace) = search_boundary_traced(
            &one(0.4),
            &plus(),
            &params(0.3, 20, Alg1Mode::Bracketing),
            &mut oracle,
            &domain,
            u64::MAX,
        )
        .unwrap();
        let want = [
            (0.7, ProbeOutcome::Miss),
            (0.55, ProbeOutcome::Hit),
            (0.625, ProbeOutcome::Miss),
            (0.5875, ProbeOutcome::Hit),
        ];
        for (step, (x, outcome)) in trace.iter().zip(want) {
            assert!((0.4 + step.offset - x).abs() < 1e-12);
            assert_eq!(step.outcome, outcome);
        }
    }

    #[test]
    fn source_only_region_is_degenerate() {
        let domain = InputDomain::unit(1).unwrap();
        let mut oracle = FnOracle::new(1, |p: &Point| p.coords()[0] == 0.4);
        let out = search_boundary(
            &one(0.4),
            &plus(),
            &params(1.0, 20, Alg1Mode::Bracketing),
            &mut oracle,
            &domain,
            u64::MAX,
        )
        .unwrap();
        assert!(out.degenerate);
        assert_eq!(out.boundary, one(0.4));
        assert!(out.max_miss_streak >= 20);
    }

    #[test]
    fn allowance_caps_oracle_calls() {
        let domain = InputDomain::unit(1).unwrap();
        let mut oracle = interval_oracle(0.2, 0.6);
        let out = search_boundary(
            &one(0.4),
            &plus(),
            &params(1.0, 20, Alg1Mode::Bracketing),
            &mut oracle,
            &domain,
            3,
        )
        .unwrap();
        assert!(out.budget_hit);
        assert_eq!(out.probes, 3);
        assert_eq!(oracle.stats().probe_count, 3);
    }

    #[test]
    fn literal_flips_on_every_miss() {
        // region [0.2, 0.6]; from 0.4 with L = 1 the first probe leaves the
        // domain, the retraction to 0.9 misses, so the orientation flips
        // back outward (1.15, 1.025, ...) and never returns
        let domain = InputDomain::unit(1).unwrap();
        let mut oracle = interval_oracle(0.2, 0.6);
        let (out, trace) = search_boundary_traced(
            &one(0.4),
            &plus(),
            &params(1.0, 20, Alg1Mode::Literal),
            &mut oracle,
            &domain,
            u64::MAX,
        )
        .unwrap();
        assert_eq!(trace[0].outcome, ProbeOutcome::OutOfDomain);
        assert!((trace[1].offset - 0.5).abs() < 1e-15);
        assert_eq!(trace[1].outcome, ProbeOutcome::Miss);
        assert!(out.max_miss_streak >= 2);
    }
}
