//! The five scenario pipelines.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::{num, Check, DominationSummary, Report, Table, Verdict};
use super::{Expectation, PipelineName, PipelineSpec, Prepared};
use crate::base::{BasePoint, BaseSystem, Leaf};
use crate::cocycle::{
    check_domination_with, poc_check, Cocycle, DiffeoField, DominationReport, Family, Observable,
    PocReport,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::fiber::{d0, CircleDiffeo, FiberGrid};
use crate::holonomy::{
    holder_ratio_scan, verify_composition, verify_equivariance, HolderScan, HolonomyDiagnostics,
    HolonomyEngine, HolonomyOptions, HolonomyResult,
};
use crate::rigidity::{
    cohomology_residual, period_reduce, promote, regularity_probe, su_consistency, witness_points,
    CocyclePair, PromotionReport, RegularityReport, ResidualReport, SuConsistency, TransferMap,
};

/// Hölder pairs used by the domination estimate of a scenario.
const HOLDER_PAIRS: usize = 64;
const IDENTITY_LEAVES: [Leaf; 2] = [Leaf::Stable, Leaf::Unstable];
/// Flow times used by the equivariance samples, in rotation.
const FLOW_TIMES: [i64; 5] = [1, 2, 3, -1, -2];

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
    /// Wall time of stages, in seconds. Not part of the report.
    pub timings: BTreeMap<String, f64>,
}

/// Pipeline-specific measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pipeline", rename_all = "kebab-case")]
pub enum PipelineResults {
    HolonomyVerify(HolonomyVerifyResults),
    PocCheck(PocCheckResults),
    Reconstruct(ReconstructResults),
    RigidityFull(RigidityResults),
    RegularityProbe(ProbeResults),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub count: usize,
    pub max_deviation: f64,
    pub failures: usize,
    /// Samples whose holonomies did not converge (tolerated only without domination).
    pub no_convergence: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub ratio: f64,
    pub rho: f64,
    pub lambda: f64,
    pub exponent: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyVerifyResults {
    pub dominated: bool,
    pub representative: Vec<HolonomyDiagnostics>,
    pub rate: Option<RateCheck>,
    pub composition: IdentitySummary,
    pub equivariance: IdentitySummary,
    pub holder_scans: Vec<HolderScan>,
    pub degraded_holonomies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocCheckResults {
    pub anchor: String,
    pub poc_max_deviation: f64,
    pub poc_per_period: Vec<f64>,
    pub poc_passed: bool,
    pub homoclinic: Vec<SuConsistency>,
    pub su_max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub kind: String,
    pub points: usize,
    pub sup_d0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructResults {
    pub anchor: String,
    pub dominated: bool,
    pub residual: ResidualReport,
    pub oracle: Option<OracleComparison>,
    pub evaluated_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityResults {
    pub anchor: String,
    pub n0: u32,
    pub reduced_lambda: f64,
    /// POC of the reduced cocycles over `F = f^{n0}`.
    pub poc_reduced_max: f64,
    pub poc_reduced_passed: bool,
    /// POC of the original cocycles over `f`, for information.
    pub poc_base_max: f64,
    pub residual_reduced: ResidualReport,
    pub promotion: Option<PromotionReport>,
    /// Smallest one-step residual over the witnesses when none passed.
    pub witness_failure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResults {
    pub anchor: String,
    pub probe: RegularityReport,
    pub c0_exponents: Vec<f64>,
}

/// A closed-form transfer map read off the scenario's families.
enum Oracle {
    Field(DiffeoField),
    Rotation(Observable),
}

impl Oracle {
    fn derive(alpha: &Family, beta: &Family, grid: FiberGrid) -> Option<(&'static str, Oracle)> {
        match (alpha, beta) {
            (a, Family::Conjugate { of, p }) if **of == *a => Some((
                "conjugacy",
                Oracle::Field(DiffeoField::new(p.clone(), grid)),
            )),
            (Family::Coboundary { p }, Family::Identity) => Some((
                "coboundary",
                Oracle::Field(DiffeoField::new(p.clone(), grid)),
            )),
            (
                Family::Rotation { phi },
                Family::Rotation {
                    phi: Observable::Cohomologous { base, psi, shift },
                },
            ) if **base == *phi && *shift == 0.0 => {
                Some(("livsic", Oracle::Rotation((**psi).clone())))
            }
            _ => None,
        }
    }

    /// Value at the anchor, used to normalize the transfer map.
    fn anchor_value(
        &self,
        sys: &BaseSystem,
        x0: &BasePoint,
        grid: FiberGrid,
    ) -> Result<CircleDiffeo> {
        match self {
            Oracle::Field(f) => f.eval(sys, x0),
            Oracle::Rotation(_) => Ok(CircleDiffeo::identity(grid)),
        }
    }

    fn eval(
        &self,
        sys: &BaseSystem,
        x0: &BasePoint,
        z: &BasePoint,
        grid: FiberGrid,
    ) -> Result<CircleDiffeo> {
        match self {
            Oracle::Field(f) => f.eval(sys, z),
            Oracle::Rotation(psi) => Ok(CircleDiffeo::rotation(
                psi.eval(sys, z) - psi.eval(sys, x0),
                grid,
            )),
        }
    }
}

struct Run<'p> {
    p: &'p Prepared,
    spec: &'p PipelineSpec,
    checks: Vec<Check>,
    tables: Vec<Table>,
    timings: BTreeMap<String, f64>,
    degraded: bool,
}

/// Runs the scenario's pipeline. Pipeline errors end up in the report.
pub fn execute(p: &Prepared) -> Outcome {
    let spec = &p.scenario.pipeline;
    let mut run = Run {
        p,
        spec,
        checks: Vec::new(),
        tables: Vec::new(),
        timings: BTreeMap::new(),
        degraded: false,
    };
    let t0 = Instant::now();
    let domination = run.domination();
    run.timings
        .insert("domination".into(), t0.elapsed().as_secs_f64());
    let (domination, results, error) = match domination {
        Err(e) => (None, None, Some(e.to_string())),
        Ok(dom) => {
            let t1 = Instant::now();
            let r = match spec.name {
                PipelineName::HolonomyVerify => run
                    .holonomy_verify(&dom)
                    .map(PipelineResults::HolonomyVerify),
                PipelineName::PocCheck => run.poc(&dom).map(PipelineResults::PocCheck),
                PipelineName::Reconstruct => {
                    run.reconstruct(&dom).map(PipelineResults::Reconstruct)
                }
                PipelineName::RigidityFull => run.rigidity(&dom).map(PipelineResults::RigidityFull),
                PipelineName::RegularityProbe => {
                    run.probe(&dom).map(PipelineResults::RegularityProbe)
                }
            };
            run.timings
                .insert("pipeline".into(), t1.elapsed().as_secs_f64());
            match r {
                Ok(r) => (Some(dom), Some(r), None),
                Err(e) => (Some(dom), None, Some(e.to_string())),
            }
        }
    };
    let verdict =
        if error.is_some() || run.checks.is_empty() || run.checks.iter().any(|c| !c.passed) {
            Verdict::Fail
        } else if run.degraded {
            Verdict::Degraded
        } else {
            Verdict::Pass
        };
    let report = Report {
        scenario: p.scenario.clone(),
        base: p.sys.descriptor(),
        domination,
        results,
        checks: run.checks,
        degraded: run.degraded,
        error,
        verdict,
    };
    Outcome {
        report,
        tables: run.tables,
        timings: run.timings,
    }
}

fn options(tol: f64, dom: &DominationReport) -> HolonomyOptions {
    HolonomyOptions {
        dominated: Some(dom.satisfied),
        ..HolonomyOptions::with_tol(tol)
    }
}

impl<'p> Run<'p> {
    fn beta(&self) -> Result<&'p Cocycle> {
        self.p
            .beta
            .as_ref()
            .ok_or_else(|| Error::config("beta", "missing"))
    }

    fn domination(&mut self) -> Result<DominationSummary> {
        let t = (2 * self.p.grid.jet_order - 1) as f64;
        let n = self.spec.domination_samples;
        let alpha = check_domination_with(&self.p.alpha, &self.p.sys, t, n, HOLDER_PAIRS)?;
        let beta = match &self.p.beta {
            Some(b) => Some(check_domination_with(b, &self.p.sys, t, n, HOLDER_PAIRS)?),
            None => None,
        };
        // the gate must agree with the report's own numbers
        for (name, d) in
            std::iter::once(("alpha", &alpha)).chain(beta.as_ref().map(|b| ("beta", b)))
        {
            let recomputed = d.rho.powf(d.t) * d.lambda.powf(d.nu);
            self.checks.push(Check::holds(
                &format!("domination_gate_{name}"),
                d.satisfied == (recomputed < 1.0) && recomputed == d.product,
            ));
            if !d.satisfied {
                self.degraded = true;
            }
        }
        Ok(DominationSummary { alpha, beta })
    }

    fn pair(&self, dom: &DominationSummary) -> Result<CocyclePair<'p>> {
        let beta_dom = dom.beta.as_ref().unwrap_or(&dom.alpha);
        Ok(CocyclePair {
            alpha: HolonomyEngine::new(
                &self.p.alpha,
                &self.p.sys,
                options(self.spec.holonomy_tol, &dom.alpha),
            )?,
            beta: HolonomyEngine::new(
                self.beta()?,
                &self.p.sys,
                options(self.spec.holonomy_tol, beta_dom),
            )?,
        })
    }

    fn transfer_map(
        &self,
        dom: &DominationSummary,
        oracle: Option<&Oracle>,
    ) -> Result<TransferMap> {
        let both = dom.alpha.satisfied && dom.beta.as_ref().is_none_or(|b| b.satisfied);
        let opts = HolonomyOptions {
            dominated: Some(both),
            ..HolonomyOptions::with_tol(self.spec.holonomy_tol)
        };
        let anchor_value = match oracle {
            Some(o) => Some(o.anchor_value(&self.p.sys, &self.p.anchor, self.p.grid)?),
            None => None,
        };
        TransferMap::new(
            self.p.alpha.clone(),
            self.beta()?.clone(),
            self.p.sys.clone(),
            self.p.anchor.clone(),
            anchor_value,
            opts,
        )
    }

    fn holonomy_verify(&mut self, dom: &DominationSummary) -> Result<HolonomyVerifyResults> {
        let (sys, spec) = (&self.p.sys, self.spec);
        let engine =
            HolonomyEngine::new(&self.p.alpha, sys, options(spec.holonomy_tol, &dom.alpha))?;
        let dominated = engine.is_dominated();
        let pts = sys.sample_points(spec.samples, self.p.scenario.seed);

        // representative holonomies: increments, rate and timing
        let mut representative = Vec::new();
        let mut slowest = 0.0f64;
        let mut increments = Table::new(
            "increments",
            &[
                "holonomy",
                "leaf",
                "n",
                "dk_increment",
                "c0_increment",
                "tail_bound",
            ],
        );
        for (i, leaf) in IDENTITY_LEAVES.iter().enumerate() {
            let pair = sys.local_leaf_pairs(&pts[0], *leaf, 1)?.remove(0);
            let t = Instant::now();
            let h = engine.along(&pair)?;
            slowest = slowest.max(t.elapsed().as_secs_f64());
            push_increments(&mut increments, i, &h);
            representative.push(h.diagnostics());
        }
        self.timings.insert("holonomy_max_seconds".into(), slowest);
        self.tables.push(increments);

        let rate = if dominated {
            let exponent = dom.alpha.t;
            let ratio = representative
                .iter()
                .map(|h| h.ratio.max(h.c0_ratio))
                .fold(0.0, f64::max);
            let bound = dom.alpha.rho.powf(exponent) * dom.alpha.lambda + spec.rate_slack;
            self.checks
                .push(Check::at_most("increment_ratio", ratio, bound));
            Some(RateCheck {
                ratio,
                rho: dom.alpha.rho,
                lambda: dom.alpha.lambda,
                exponent,
                bound,
            })
        } else {
            None
        };

        let mut identities = Table::new(
            "identities",
            &["kind", "index", "leaf", "n", "deviation", "passed"],
        );
        let comp = exec::map_range(pts.len(), |i| {
            let leaf = IDENTITY_LEAVES[i % 2];
            let lp = sys.local_leaf_pairs(&pts[i], leaf, 3)?;
            let r = verify_composition(&engine, &pts[i], &lp[2].z, &lp[0].z, leaf, spec.check_tol)?;
            Ok::<_, Error>((leaf, r))
        });
        let equi = exec::map_range(pts.len(), |i| {
            let leaf = IDENTITY_LEAVES[(i / 2) % 2];
            let n = FLOW_TIMES[i % FLOW_TIMES.len()];
            let pair = sys.local_leaf_pairs(&pts[i], leaf, 2)?.remove(1);
            let r = verify_equivariance(&engine, &pair, n, spec.check_tol)?;
            Ok::<_, Error>((leaf, n, r))
        });
        let composition = summarize(comp.iter().map(|r| r.as_ref().map(|(_, c)| c)), dominated)?;
        let equivariance = summarize(
            equi.iter().map(|r| r.as_ref().map(|(_, _, c)| c)),
            dominated,
        )?;
        for (i, r) in comp.iter().enumerate() {
            if let Ok((leaf, c)) = r {
                identities.push(vec![
                    "composition".into(),
                    i.to_string(),
                    leaf.tag().into(),
                    "0".into(),
                    num(c.deviation),
                    c.passed.to_string(),
                ]);
            }
        }
        for (i, r) in equi.iter().enumerate() {
            if let Ok((leaf, n, c)) = r {
                identities.push(vec![
                    "equivariance".into(),
                    i.to_string(),
                    leaf.tag().into(),
                    n.to_string(),
                    num(c.deviation),
                    c.passed.to_string(),
                ]);
            }
        }
        self.tables.push(identities);
        self.checks.push(Check::at_most(
            "composition_max_d0",
            composition.max_deviation,
            spec.check_tol,
        ));
        self.checks.push(Check::at_most(
            "equivariance_max_d0",
            equivariance.max_deviation,
            spec.check_tol,
        ));

        let mut holder = Table::new(
            "holder_scan",
            &["leaf", "order", "scale", "dist", "dk", "ratio"],
        );
        let mut holder_scans = Vec::new();
        for leaf in IDENTITY_LEAVES {
            let scan = holder_ratio_scan(
                &engine,
                &pts[0],
                leaf,
                spec.scales,
                self.p.grid.jet_order.saturating_sub(1),
            )?;
            for r in &scan.rows {
                holder.push(vec![
                    leaf.tag().into(),
                    scan.order.to_string(),
                    r.scale.to_string(),
                    num(r.dist),
                    num(r.dk),
                    num(r.ratio),
                ]);
            }
            self.checks.push(Check::holds(
                &format!("holder_scan_{}", leaf.tag()),
                scan.passed,
            ));
            holder_scans.push(scan);
        }
        self.tables.push(holder);

        let degraded_holonomies = representative.iter().filter(|h| h.degraded).count();
        if degraded_holonomies > 0 || composition.no_convergence + equivariance.no_convergence > 0 {
            self.degraded = true;
        }
        if !dominated {
            // without domination nothing may come back jet-certified
            let certified = representative
                .iter()
                .any(|h| h.certified_order > 0 && !h.degraded);
            self.checks
                .push(Check::holds("no_silent_jet_certificate", !certified));
        }
        Ok(HolonomyVerifyResults {
            dominated,
            representative,
            rate,
            composition,
            equivariance,
            holder_scans,
            degraded_holonomies,
        })
    }

    fn poc(&mut self, dom: &DominationSummary) -> Result<PocCheckResults> {
        let (sys, spec, x) = (&self.p.sys, self.spec, &self.p.anchor);
        let beta = self.beta()?;
        let rep = poc_check(&self.p.alpha, beta, sys, spec.poc_periods, spec.poc_tol)?;
        self.tables.push(poc_table(&rep));
        let pair = self.pair(dom)?;
        let hs = sys.homoclinic_points(x, spec.homoclinic_points)?;
        let su = exec::try_map(&hs, |h| su_consistency(&pair, x, h, spec.su_tol, None))?;
        let mut t = Table::new("su_consistency", &["point", "deviation", "tol", "passed"]);
        for s in &su {
            t.push(vec![
                s.point.clone(),
                num(s.deviation),
                num(s.tol),
                s.passed.to_string(),
            ]);
        }
        self.tables.push(t);
        let su_max = su.iter().map(|s| s.deviation).fold(0.0, f64::max);
        match spec.expect {
            Expectation::PocViolated => {
                self.checks.push(Check::above(
                    "poc_violation_detected",
                    rep.max_deviation,
                    spec.poc_tol,
                ));
                self.checks.push(Check::above(
                    "su_disagreement",
                    su_max,
                    spec.disagreement_min,
                ));
            }
            _ => {
                self.checks.push(Check::at_most(
                    "poc_max_deviation",
                    rep.max_deviation,
                    spec.poc_tol,
                ));
                self.checks
                    .push(Check::at_most("su_max_deviation", su_max, spec.su_tol));
                self.checks.push(Check::holds(
                    "homoclinic_points_found",
                    su.len() >= spec.homoclinic_points,
                ));
            }
        }
        Ok(PocCheckResults {
            anchor: x.label(),
            poc_max_deviation: rep.max_deviation,
            poc_per_period: rep.per_period,
            poc_passed: rep.passed,
            homoclinic: su,
            su_max_deviation: su_max,
        })
    }

    fn residual_checks(&mut self, prefix: &str, rep: &ResidualReport) {
        let tol = self.spec.residual_tol;
        self.checks.push(Check::below(
            &format!("{prefix}residual_max"),
            rep.max_residual,
            tol,
        ));
        for s in &rep.spot_checks {
            self.checks.push(Check::below(
                &format!("{prefix}residual_n{}_max", s.n),
                s.max_residual,
                tol,
            ));
        }
    }

    fn reconstruct(&mut self, dom: &DominationSummary) -> Result<ReconstructResults> {
        let (sys, spec, grid) = (&self.p.sys, self.spec, self.p.grid);
        let oracle = Oracle::derive(
            &self.p.scenario.alpha,
            self.p.scenario.beta.as_ref().expect("validated"),
            grid,
        );
        let tm = self.transfer_map(dom, oracle.as_ref().map(|o| &o.1))?;
        let (a_dom, b_dom) = tm.dominated();
        self.degraded |= !(a_dom && b_dom);
        let residual = cohomology_residual(&tm, spec.residual_samples)?;
        self.tables.push(residual_table(&residual));
        self.residual_checks("", &residual);
        let pts = sys.sample_points(spec.eval_points, self.p.scenario.seed);
        let vals = tm.evaluate_many(&pts)?;
        let oracle = match oracle {
            Some((kind, o)) => {
                let devs = exec::try_map(&pts.iter().zip(&vals).collect::<Vec<_>>(), |(z, v)| {
                    Ok::<_, Error>(d0(v, &o.eval(sys, &self.p.anchor, z, grid)?))
                })?;
                let mut t = Table::new("oracle", &["point", "d0"]);
                for (z, d) in pts.iter().zip(&devs) {
                    t.push(vec![z.label(), num(*d)]);
                }
                self.tables.push(t);
                let sup_d0 = devs.iter().cloned().fold(0.0, f64::max);
                self.checks
                    .push(Check::below("oracle_sup_d0", sup_d0, spec.oracle_tol));
                Some(OracleComparison {
                    kind: kind.into(),
                    points: pts.len(),
                    sup_d0,
                })
            }
            None => None,
        };
        Ok(ReconstructResults {
            anchor: self.p.anchor.label(),
            dominated: a_dom && b_dom,
            residual,
            oracle,
            evaluated_points: tm.cached_points(),
        })
    }

    fn rigidity(&mut self, dom: &DominationSummary) -> Result<RigidityResults> {
        let (sys, spec, x0) = (&self.p.sys, self.spec, &self.p.anchor);
        let (alpha, beta) = (&self.p.alpha, self.beta()?);
        let red = period_reduce(alpha, beta, sys, x0)?;
        let poc_red = poc_check(
            &red.alpha,
            &red.beta,
            &red.sys,
            spec.poc_periods,
            spec.poc_tol,
        )?;
        let poc_base = poc_check(alpha, beta, sys, spec.poc_periods, spec.poc_tol)?;
        self.tables.push(poc_table(&poc_red));
        self.checks.push(Check::at_most(
            "poc_reduced_max_deviation",
            poc_red.max_deviation,
            spec.poc_tol,
        ));
        let both = dom.alpha.satisfied && dom.beta.as_ref().is_none_or(|b| b.satisfied);
        self.degraded |= !both;
        let opts = HolonomyOptions {
            dominated: Some(both),
            ..HolonomyOptions::with_tol(spec.holonomy_tol)
        };
        let tm = TransferMap::new(
            red.alpha.clone(),
            red.beta.clone(),
            red.sys.clone(),
            x0.clone(),
            None,
            opts,
        )?;
        let residual_reduced = cohomology_residual(&tm, spec.residual_samples)?;
        self.residual_checks("reduced_", &residual_reduced);
        let w = witness_points(&tm, spec.witnesses)?;
        let (promotion, witness_failure) = match promote(
            &tm,
            alpha,
            beta,
            sys,
            &w,
            spec.promote_tol,
            spec.global_samples,
        ) {
            Ok(rep) => (Some(rep), None),
            Err(Error::WitnessFailed { best_residual })
                if spec.expect == Expectation::WitnessFailed =>
            {
                (None, Some(best_residual))
            }
            Err(e) => return Err(e),
        };
        match (&promotion, spec.expect) {
            (Some(rep), Expectation::Pass) => {
                let mut t = Table::new("residuals", &["point", "n", "residual"]);
                for s in rep.witnesses.iter().chain(&rep.global) {
                    t.push(vec![s.point.clone(), "1".into(), num(s.residual)]);
                }
                self.tables.push(t);
                self.checks
                    .push(Check::holds("witness_found", rep.witness.is_some()));
                self.checks.push(Check::below(
                    "one_step_residual_max",
                    rep.global_max,
                    spec.promote_tol,
                ));
            }
            (_, Expectation::WitnessFailed) => {
                self.tables.push(residual_table(&residual_reduced));
                self.checks
                    .push(Check::holds("witness_failed", witness_failure.is_some()));
            }
            _ => self.checks.push(Check::holds("promotion", false)),
        }
        Ok(RigidityResults {
            anchor: x0.label(),
            n0: red.n0,
            reduced_lambda: red.sys.lambda(),
            poc_reduced_max: poc_red.max_deviation,
            poc_reduced_passed: poc_red.passed,
            poc_base_max: poc_base.max_deviation,
            residual_reduced,
            promotion,
            witness_failure,
        })
    }

    fn probe(&mut self, dom: &DominationSummary) -> Result<ProbeResults> {
        let tm = self.transfer_map(dom, None)?;
        let (a_dom, b_dom) = tm.dominated();
        self.degraded |= !(a_dom && b_dom);
        let probe = regularity_probe(&tm, self.spec.scales)?;
        let mut t = Table::new("probe", &["family", "scale", "dist", "order", "dk"]);
        for f in &probe.families {
            for r in &f.rows {
                for (k, v) in r.dk.iter().enumerate() {
                    t.push(vec![
                        f.family.clone(),
                        r.scale.to_string(),
                        num(r.dist),
                        k.to_string(),
                        num(*v),
                    ]);
                }
            }
        }
        self.tables.push(t);
        let c0_exponents = probe.c0_exponents();
        let [lo, hi] = self.spec.exponent_range;
        self.checks.push(Check::holds(
            "transfer_map_varies",
            !c0_exponents.is_empty(),
        ));
        for f in &probe.families {
            if let Some(Some(e)) = f.exponents.first() {
                self.checks.push(Check::holds(
                    &format!("c0_exponent_{}", f.family),
                    (lo..=hi).contains(e),
                ));
            }
        }
        Ok(ProbeResults {
            anchor: tm.anchor().label(),
            probe,
            c0_exponents,
        })
    }
}

fn summarize<'a>(
    items: impl Iterator<Item = std::result::Result<&'a crate::holonomy::IdentityCheck, &'a Error>>,
    dominated: bool,
) -> Result<IdentitySummary> {
    let mut s = IdentitySummary {
        count: 0,
        max_deviation: 0.0,
        failures: 0,
        no_convergence: 0,
    };
    for r in items {
        match r {
            Ok(c) => {
                s.count += 1;
                s.max_deviation = s.max_deviation.max(c.deviation);
                s.failures += usize::from(!c.passed);
            }
            Err(Error::NoConvergence(_)) if !dominated => s.no_convergence += 1,
            Err(e) => return Err(e.clone()),
        }
    }
    Ok(s)
}

fn push_increments(t: &mut Table, index: usize, h: &HolonomyResult) {
    let jets = h.certified_order > 0 && !h.degraded;
    let (incs, q) = if jets {
        (&h.increments, h.ratio)
    } else {
        (&h.c0_increments, h.c0_ratio)
    };
    for (n, (dk, c0)) in incs.iter().zip(&h.c0_increments).enumerate() {
        let tail = if q > 0.0 && q < 1.0 {
            dk * q / (1.0 - q)
        } else {
            f64::NAN
        };
        t.push(vec![
            index.to_string(),
            h.leaf.tag().into(),
            (n + 1).to_string(),
            num(*dk),
            num(*c0),
            num(tail),
        ]);
    }
}

fn poc_table(rep: &PocReport) -> Table {
    let mut t = Table::new("poc", &["period", "point", "deviation"]);
    for e in &rep.entries {
        t.push(vec![
            e.period.to_string(),
            e.point.clone(),
            num(e.deviation),
        ]);
    }
    t
}

fn residual_table(rep: &ResidualReport) -> Table {
    let mut t = Table::new("residuals", &["point", "n", "residual"]);
    for s in &rep.samples {
        t.push(vec![s.point.clone(), "1".into(), num(s.residual)]);
    }
    t
}
