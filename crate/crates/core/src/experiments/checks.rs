//! The projection laws as finite checks. Each function evaluates one family
//! of laws on a measure and a list of sampled subspaces and returns the
//! per-(q, V) records; verdicts are assembled in [`super::suite`].

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    cover_proxy_with, legendre_transform, s_energy, BoxTables, ConvTables, CoverProxy,
    DimensionEstimate, ProxyKind, ProxyTables, ScaleGrid, ScaleSpec, TauOptions,
};
use crate::geometry::{
    haar_projected_ball_mass, potential, project_measure_with_map, RandomSource, Subspace,
};
use crate::measure::index::dist2;
use crate::measure::{quantize, DiscreteMeasure, MeasureView, Point, SupportSubset};
use crate::serde_ext::{ext_f64, ext_f64_opt};

/// How the records of a law enter the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawScope {
    /// Must hold for every sampled V.
    ForAll,
    /// Must hold for a quota of the sampled V.
    AlmostEvery,
    /// A statement about the source measure alone; must hold.
    Source,
    /// Reported, never binding.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub law: String,
    /// `None` for the kernel laws, which are indexed by (point, r) instead.
    pub q: Option<f64>,
    /// Index of the sampled subspace; `None` for source-level records.
    pub v: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(with = "ext_f64")]
    pub lhs: f64,
    #[serde(with = "ext_f64")]
    pub rhs: f64,
    #[serde(with = "ext_f64_opt")]
    pub predicted: Option<f64>,
    pub slack: f64,
    pub pass: bool,
}

/// An assumption of a theorem and what became of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    /// "met", "unmet" or "assumed".
    pub status: String,
    pub detail: String,
}

/// Closed-form comparison of a source estimate (catalog measures only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub q: f64,
    pub quantity: String,
    #[serde(with = "ext_f64")]
    pub estimate: f64,
    pub closed_form: f64,
    pub within: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub atoms: usize,
    pub dim: usize,
    pub diameter: f64,
    pub resolution: f64,
    /// Radii of the scale window, largest first.
    pub radii: Vec<f64>,
    /// Whether cover proxies (dyadic-partition stand-ins) were used.
    pub proxy: bool,
    pub max_depth: Option<u32>,
    pub experimental: bool,
    pub hypotheses: Vec<Hypothesis>,
    pub oracle: Vec<OracleRow>,
    pub notes: Vec<String>,
}

/// What a check function produces before the verdict is assembled.
#[derive(Debug, Clone, Default)]
pub struct CheckOutcome {
    pub laws: Vec<(String, LawScope)>,
    pub records: Vec<CheckRecord>,
    pub diagnostics: Diagnostics,
    /// Set when a hypothesis of the theorem is unmet on the data.
    pub inconclusive: Option<String>,
}

impl CheckOutcome {
    fn for_measure(mu: &DiscreteMeasure, radii: &[f64]) -> Self {
        CheckOutcome {
            diagnostics: Diagnostics {
                atoms: mu.len(),
                dim: mu.dim(),
                diameter: mu.diameter(),
                resolution: mu.resolution(),
                radii: radii.to_vec(),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn law(&mut self, name: &str, scope: LawScope) {
        if !self.laws.iter().any(|(n, _)| n == name) {
            self.laws.push((name.to_string(), scope));
        }
    }

    fn push(&mut self, scope: LawScope, rec: CheckRecord) {
        self.law(&rec.law, scope);
        self.records.push(rec);
    }
}

/// Per-V records with the laws they belong to.
type VRecords = Vec<(LawScope, CheckRecord)>;

fn record(law: &str, q: f64, v: Option<usize>, lhs: f64, rhs: f64, predicted: Option<f64>, slack: f64, pass: bool) -> CheckRecord {
    CheckRecord {
        law: law.to_string(),
        q: Some(q),
        v,
        point: None,
        r: None,
        lhs,
        rhs,
        predicted,
        slack,
        pass,
    }
}

/// lhs ≤ rhs + tol, with −∞ ≤ anything.
fn le(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs == f64::NEG_INFINITY || lhs <= rhs + tol
}

/// |lhs − rhs| ≤ tol, with equal infinities equal.
fn near(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs == rhs || (lhs - rhs).abs() <= tol
}

fn inequality(law: &str, q: f64, v: Option<usize>, lhs: f64, rhs: f64, tol: f64) -> CheckRecord {
    record(law, q, v, lhs, rhs, None, tol, le(lhs, rhs, tol))
}

fn equality(law: &str, q: f64, v: Option<usize>, lhs: f64, predicted: f64, tol: f64) -> CheckRecord {
    record(law, q, v, lhs, predicted, Some(predicted), tol, near(lhs, predicted, tol))
}

fn check_dims(mu: &DiscreteMeasure, vs: &[Subspace]) -> Result<usize> {
    let first = vs
        .first()
        .ok_or_else(|| Error::validation("no subspaces sampled"))?;
    let m = first.dim();
    if vs.iter().any(|v| v.ambient_dim() != mu.dim() || v.dim() != m) {
        return Err(Error::validation(format!(
            "subspaces must all lie in G({}, {m})",
            mu.dim()
        )));
    }
    Ok(m)
}

fn check_q(q: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    if q.is_empty() {
        return Err(Error::validation("q list is empty"));
    }
    if let Some(bad) = q.iter().find(|&&x| !ok(x)) {
        return Err(Error::domain(format!("q={bad} outside the hypothesis {what}")));
    }
    Ok(())
}

/// Projected measure and the image of E in it.
fn project_subset(mu: &DiscreteMeasure, e: &MeasureView<'_>, v: &Subspace) -> Result<(DiscreteMeasure, SupportSubset)> {
    let (proj, map) = project_measure_with_map(mu, v)?;
    let mut image: Vec<usize> = e.indices().map(|i| map[i]).collect();
    image.sort_unstable();
    image.dedup();
    let subset = SupportSubset::new(image, proj.len())?;
    Ok((proj, subset))
}

fn oracle_rows(out: &mut CheckOutcome, analytic: Option<&dyn Fn(f64) -> f64>, quantity: &str, est: &[(f64, f64)], estimator_tol: Option<f64>) {
    if let Some(tau) = analytic {
        for &(q, e) in est {
            let exact = tau(q);
            out.diagnostics.oracle.push(OracleRow {
                q,
                quantity: quantity.to_string(),
                estimate: e,
                closed_form: exact,
                within: estimator_tol.map(|t| near(e, exact, t)),
            });
        }
    }
}

/// Options shared by the projection checks.
#[derive(Clone, Copy)]
pub struct CheckContext<'a> {
    /// Grid of the source measure.
    pub grid: &'a ScaleGrid,
    /// How the grid was chosen; projected measures get their own grid from
    /// it, relative to their own diameter.
    pub scales: &'a ScaleSpec,
    pub opts: &'a TauOptions,
    pub max_depth: u32,
    pub tol: f64,
    /// Closed-form τ of the source, for diagnostics only.
    pub analytic: Option<&'a (dyn Fn(f64) -> f64 + Sync)>,
    pub estimator_tol: Option<f64>,
}

impl<'a> CheckContext<'a> {
    fn radii(&self) -> &'a [f64] {
        self.grid.window_radii()
    }

    fn radii_for(&self, view: &MeasureView<'_>) -> Result<Vec<f64>> {
        let diam = view.diameter();
        if matches!(self.scales, ScaleSpec::Radii { .. }) || diam <= 0.0 {
            return Ok(self.radii().to_vec());
        }
        let g = self.scales.grid(diam, view.measure().resolution(), Vec::new())?;
        Ok(g.window_radii().to_vec())
    }

    fn oracle(&self, out: &mut CheckOutcome, quantity: &str, est: &[(f64, f64)]) {
        let f = self.analytic.map(|f| f as &dyn Fn(f64) -> f64);
        oracle_rows(out, f, quantity, est, self.estimator_tol);
    }
}

fn box_estimates(view: &MeasureView<'_>, q: &[f64], ctx: &CheckContext<'_>) -> Result<Vec<DimensionEstimate>> {
    BoxTables::new(view, &ctx.radii_for(view)?, ctx.opts.exact_masses).estimates(&view.index_vec(), q, ctx.opts.mode, f64::INFINITY)
}

/// Box cover proxies of the requested kinds, from one set of tables.
fn box_proxies(view: &MeasureView<'_>, q: &[f64], kinds: &[ProxyKind], ctx: &CheckContext<'_>) -> Result<Vec<Vec<CoverProxy>>> {
    let t = BoxTables::new(view, &ctx.radii_for(view)?, ctx.opts.exact_masses);
    kinds
        .iter()
        .map(|&k| cover_proxy_with(view, ProxyTables::Box(&t, ctx.opts.mode), q, k, ctx.max_depth))
        .collect()
}

fn conv_tables<'m>(view: &MeasureView<'m>, m: usize, ctx: &CheckContext<'_>) -> Result<ConvTables<'m>> {
    ConvTables::new(view, &ctx.radii_for(view)?, m as f64, ctx.opts.conv_tolerance)
}

fn proxy_notes(out: &mut CheckOutcome, who: &str, p: &CoverProxy) {
    for d in &p.depths {
        if let Some(why) = &d.skipped {
            let note = format!("{who} {}: depth {} skipped ({why})", p.kind.as_str(), d.depth);
            if !out.diagnostics.notes.contains(&note) {
                out.diagnostics.notes.push(note);
            }
        }
    }
}

/// Theorem-style check on each V in parallel; results come back in V order.
fn per_subspace<F>(vs: &[Subspace], f: F) -> Result<Vec<VRecords>>
where
    F: Fn(usize, &Subspace) -> Result<VRecords> + Sync,
{
    vs.par_iter().enumerate().map(|(k, v)| f(k, v)).collect()
}

fn absorb(out: &mut CheckOutcome, per_v: Vec<VRecords>) {
    for recs in per_v {
        for (scope, r) in recs {
            out.push(scope, r);
        }
    }
}

/// Monte-Carlo side of the kernel identity against the exact potential.
///
/// For every (x, r): the mean over `count` sampled V of μ_V(B(π_V x, r))
/// versus μ∗φ^m_r(x). With m = n the projection is an isometry and the
/// check becomes: MC side equals μ(B(x, r)) and the potential dominates it.
/// The exact Haar average (incomplete-beta kernel) is reported alongside as
/// an informational law.
pub fn check_kernel_identity(
    mu: &DiscreteMeasure,
    points: &[Point],
    radii: &[f64],
    m: usize,
    count: usize,
    rng: &RandomSource,
    tol: f64,
) -> Result<CheckOutcome> {
    let n = mu.dim();
    if !(tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    if count < 100 {
        return Err(Error::validation(format!("kernel identity needs at least 100 subspaces, got {count}")));
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::validation("kernel identity radii must lie in (0, 1)"));
    }
    if points.is_empty() || points.iter().any(|p| p.dim() != n) {
        return Err(Error::validation(format!("kernel identity needs points in R^{n}")));
    }
    let vs = crate::geometry::sample_grassmannian(n, m, count, rng)?;
    let sums = mc_projected_masses(mu, points, radii, &vs);
    let mut out = CheckOutcome::for_measure(mu, radii);
    out.diagnostics.notes.push(format!(
        "{count} subspaces of G({n},{m}); lhs = mean projected ball mass, rhs = potential with kernel min(1, (r/|x-y|)^{m})"
    ));
    let at = |mut rec: CheckRecord, pi: usize, r: f64| {
        rec.q = None;
        rec.point = Some(pi);
        rec.r = Some(r);
        rec
    };
    for (pi, x) in points.iter().enumerate() {
        for (ri, &r) in radii.iter().enumerate() {
            let lhs = sums[pi * radii.len() + ri] / count as f64;
            if m == n {
                let ball = mu.ball_mass(&x[..], r);
                let slack = 1e-12 * ball.max(1.0);
                let pass = (lhs - ball).abs() <= slack;
                out.push(LawScope::Source, at(record("kernel-isometry", 0.0, None, lhs, ball, None, slack, pass), pi, r));
                let pot = potential(mu, &x[..], r, m as f64)?;
                let rec = record("kernel-dominates", 0.0, None, pot, ball, None, 1e-12, pot >= ball - 1e-12);
                out.push(LawScope::Source, at(rec, pi, r));
                continue;
            }
            let pot = potential(mu, &x[..], r, m as f64)?;
            let haar = haar_projected_ball_mass(mu, &x[..], r, m);
            let slack = tol * pot;
            let rec = record("kernel-identity", 0.0, None, lhs, pot, Some(haar), slack, (lhs - pot).abs() <= slack);
            out.push(LawScope::Source, at(rec, pi, r));
            let slack = tol * haar;
            let rec = record("kernel-haar", 0.0, None, lhs, haar, Some(haar), slack, (lhs - haar).abs() <= slack);
            out.push(LawScope::Informational, at(rec, pi, r));
        }
    }
    Ok(out)
}

/// Σ over V of μ_V(B(π_V x, r)), laid out [point][radius]. Images are
/// quantized exactly as [`project_measure`](crate::geometry::project_measure)
/// does, so each sum is the projected measure's ball mass.
pub fn mc_projected_masses(mu: &DiscreteMeasure, points: &[Point], radii: &[f64], vs: &[Subspace]) -> Vec<f64> {
    let per_v: Vec<Vec<f64>> = vs
        .par_iter()
        .map(|v| {
            let m = v.dim();
            let coords = crate::geometry::projected_coords(mu, v);
            let mut xv = vec![0.0; m];
            let mut out = vec![0.0; points.len() * radii.len()];
            for (pi, x) in points.iter().enumerate() {
                v.project_into(&x[..], &mut xv);
                for c in xv.iter_mut() {
                    *c = quantize(*c);
                }
                for (ri, &r) in radii.iter().enumerate() {
                    let r2 = r * r;
                    let mut s = 0.0;
                    for (i, p) in coords.chunks_exact(m).enumerate() {
                        if dist2(p, &xv) <= r2 {
                            s += mu.weight(i);
                        }
                    }
                    out[pi * radii.len() + ri] = s;
                }
            }
            out
        })
        .collect();
    let mut total = vec![0.0; points.len() * radii.len()];
    for row in per_v {
        for (t, x) in total.iter_mut().zip(row) {
            *t += x;
        }
    }
    total
}

/// `count` distinct atoms of μ chosen by `rng`, in ascending index order.
pub fn sample_atoms(mu: &DiscreteMeasure, count: usize, rng: &RandomSource) -> Vec<Point> {
    let k = count.min(mu.len());
    let mut idx = sample(&mut rng.generator(), mu.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| Point::new(mu.point(i).to_vec())).collect()
}

/// For q ≤ 1 and every V: lower and upper box estimates of π_V(E) under μ_V
/// do not exceed those of E under μ.
pub fn check_th1(mu: &DiscreteMeasure, e: &MeasureView<'_>, q: &[f64], vs: &[Subspace], ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
    check_q(q, |x| x <= 1.0, "q <= 1")?;
    check_dims(mu, vs)?;
    let tol = ctx.tol;
    let src = box_estimates(e, q, ctx)?;
    let mut out = CheckOutcome::for_measure(mu, ctx.radii());
    ctx.oracle(&mut out, "source-ols", &src.iter().map(|d| (d.q, d.ols)).collect::<Vec<_>>());
    out.law("th1-lower", LawScope::ForAll);
    out.law("th1-upper", LawScope::ForAll);
    let per_v = per_subspace(vs, |k, v| {
        let (proj, image) = project_subset(mu, e, v)?;
        let view = crate::measure::restrict(&proj, &image)?;
        let est = box_estimates(&view, q, ctx)?;
        let mut recs = VRecords::new();
        for (s, p) in src.iter().zip(&est) {
            recs.push((LawScope::ForAll, inequality("th1-lower", s.q, Some(k), p.lower, s.lower, tol)));
            recs.push((LawScope::ForAll, inequality("th1-upper", s.q, Some(k), p.upper, s.upper, tol)));
        }
        Ok(recs)
    })?;
    absorb(&mut out, per_v);
    Ok(out)
}

/// Box estimates of projections against convolution estimates of the
/// source (s = m) and the max(m(1 − q), ·) laws, branching at q = 2.
pub fn check_thld(mu: &DiscreteMeasure, e: &MeasureView<'_>, q: &[f64], vs: &[Subspace], ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
    check_q(q, |x| x > 1.0, "q > 1")?;
    let m = check_dims(mu, vs)?;
    let tol = ctx.tol;
    let mf = m as f64;
    let src = box_estimates(e, q, ctx)?;
    let conv = conv_tables(e, m, ctx)?.estimates(&e.index_vec(), q, f64::INFINITY)?;
    let mut out = CheckOutcome::for_measure(mu, ctx.radii());
    ctx.oracle(&mut out, "source-ols", &src.iter().map(|d| (d.q, d.ols)).collect::<Vec<_>>());
    for (s, c) in src.iter().zip(&conv) {
        let qq = s.q;
        out.push(LawScope::Source, inequality("thld1-conv-lower", qq, None, s.lower, c.lower, tol));
        out.push(LawScope::Source, inequality("thld1-conv-upper", qq, None, s.upper, c.upper, tol));
        if qq <= 2.0 {
            let pred = (mf * (1.0 - qq)).max(s.upper);
            out.push(LawScope::Source, equality("thld2-conv-upper", qq, None, c.upper, pred, tol));
        } else if s.upper >= -mf {
            out.push(LawScope::Source, equality("thld3a-conv-upper", qq, None, c.upper, s.upper, tol));
        }
        if qq > 2.0 {
            out.diagnostics.hypotheses.push(Hypothesis {
                name: format!("upper box dimension >= -m at q={qq}"),
                status: if s.upper >= -mf { "met" } else { "unmet" }.into(),
                detail: format!("estimate {:.4}, -m = {}", s.upper, -mf),
            });
        }
    }
    for name in ["thld1-lower", "thld1-upper"] {
        out.law(name, LawScope::ForAll);
    }
    let per_v = per_subspace(vs, |k, v| {
        let (proj, image) = project_subset(mu, e, v)?;
        let view = crate::measure::restrict(&proj, &image)?;
        let est = box_estimates(&view, q, ctx)?;
        let mut recs = VRecords::new();
        for ((s, c), p) in src.iter().zip(&conv).zip(&est) {
            let qq = s.q;
            // lhs ≥ rhs − tol is rhs ≤ lhs + tol
            recs.push((LawScope::ForAll, flip(inequality("thld1-lower", qq, Some(k), c.lower, p.lower, tol))));
            recs.push((LawScope::ForAll, flip(inequality("thld1-upper", qq, Some(k), c.upper, p.upper, tol))));
            if qq <= 2.0 {
                let pred = (mf * (1.0 - qq)).max(s.upper);
                recs.push((LawScope::AlmostEvery, equality("thld2-upper", qq, Some(k), p.upper, pred, tol)));
                recs.push((LawScope::AlmostEvery, equality("thld2-lower", qq, Some(k), p.lower, c.lower, tol)));
            } else {
                if s.upper >= -mf {
                    recs.push((LawScope::AlmostEvery, equality("thld3a-upper", qq, Some(k), p.upper, s.upper, tol)));
                }
                let pred = (mf * (1.0 - qq)).max(c.lower);
                recs.push((LawScope::AlmostEvery, equality("thld3b-lower", qq, Some(k), p.lower, pred, tol)));
            }
        }
        Ok(recs)
    })?;
    absorb(&mut out, per_v);
    Ok(out)
}

/// Swaps lhs and rhs of an inequality record so that lhs is the projected
/// side, keeping the pass flag.
fn flip(mut r: CheckRecord) -> CheckRecord {
    std::mem::swap(&mut r.lhs, &mut r.rhs);
    r
}

/// The upper cover proxy (box-upper kind) of projections against the source.
///
/// With `conv` set, the source's conv-upper proxy (s = m) is also compared
/// with the max-law prediction for 1 < q ≤ 2.
pub fn check_th2(mu: &DiscreteMeasure, q: &[f64], vs: &[Subspace], conv: bool, ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
    check_q(q, |x| x > 1.0, "q > 1")?;
    let m = check_dims(mu, vs)?;
    let mf = m as f64;
    let tol = ctx.tol;
    let view = mu.view();
    let src = box_proxies(&view, q, &[ProxyKind::BoxUpper], ctx)?.remove(0);
    let mut out = CheckOutcome::for_measure(mu, ctx.radii());
    out.diagnostics.proxy = true;
    out.diagnostics.max_depth = Some(ctx.max_depth);
    ctx.oracle(&mut out, "source-proxy-box-upper", &src.iter().map(|p| (p.q, p.value)).collect::<Vec<_>>());
    for p in &src {
        proxy_notes(&mut out, "source", p);
    }
    if conv {
        let t = conv_tables(&view, m, ctx)?;
        let cp = cover_proxy_with(&view, ProxyTables::Conv(&t), q, ProxyKind::ConvUpper, ctx.max_depth)?;
        for (s, c) in src.iter().zip(&cp) {
            if s.q <= 2.0 {
                let pred = (mf * (1.0 - s.q)).max(s.value);
                out.push(LawScope::Source, equality("th2-2-conv", s.q, None, c.value, pred, tol));
            }
        }
    }
    let mut h3 = Vec::new();
    for p in &src {
        if p.q > 2.0 {
            let met = pieces_at_least(p, -mf);
            out.diagnostics.hypotheses.push(Hypothesis {
                name: format!("cover condition at q={}", p.q),
                status: if met { "met" } else { "unmet" }.into(),
                detail: "upper box estimate >= -m on every cell of the dyadic partitions used; \
                         other covers are not examined"
                    .into(),
            });
            h3.push(met);
        } else {
            h3.push(false);
        }
    }
    out.law("th2-1", LawScope::ForAll);
    let per_v = per_subspace(vs, |k, v| {
        let proj = crate::geometry::project_measure(mu, v)?;
        let pv = box_proxies(&proj.view(), q, &[ProxyKind::BoxUpper], ctx)?.remove(0);
        let mut recs = VRecords::new();
        for ((s, p), &met) in src.iter().zip(&pv).zip(&h3) {
            recs.push((LawScope::ForAll, flip(inequality("th2-1", s.q, Some(k), s.value, p.value, tol))));
            if s.q <= 2.0 {
                let pred = (mf * (1.0 - s.q)).max(s.value);
                recs.push((LawScope::AlmostEvery, equality("th2-2", s.q, Some(k), p.value, pred, tol)));
            } else if met {
                recs.push((LawScope::AlmostEvery, equality("th2-3", s.q, Some(k), p.value, s.value, tol)));
            }
        }
        Ok(recs)
    })?;
    absorb(&mut out, per_v);
    Ok(out)
}

/// Whether every cell estimate behind the proxy is ≥ `bound`.
fn pieces_at_least(p: &CoverProxy, bound: f64) -> bool {
    let used: Vec<f64> = p.depths.iter().filter_map(|d| d.min_piece).collect();
    !used.is_empty() && used.iter().all(|&v| v >= bound)
}

/// The lower cover proxy of projections against the source's conv-lower
/// proxy (s = m), with the max-clamp for q > 2.
pub fn check_th3(mu: &DiscreteMeasure, q: &[f64], vs: &[Subspace], ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
    check_q(q, |x| x > 1.0, "q > 1")?;
    let m = check_dims(mu, vs)?;
    let mf = m as f64;
    let tol = ctx.tol;
    let view = mu.view();
    let src = box_proxies(&view, q, &[ProxyKind::BoxLower], ctx)?.remove(0);
    let t = conv_tables(&view, m, ctx)?;
    let cp = cover_proxy_with(&view, ProxyTables::Conv(&t), q, ProxyKind::ConvLower, ctx.max_depth)?;
    let mut out = CheckOutcome::for_measure(mu, ctx.radii());
    out.diagnostics.proxy = true;
    out.diagnostics.max_depth = Some(ctx.max_depth);
    ctx.oracle(&mut out, "source-proxy-box-lower", &src.iter().map(|p| (p.q, p.value)).collect::<Vec<_>>());
    for p in src.iter().chain(&cp) {
        proxy_notes(&mut out, "source", p);
    }
    out.law("th3-1", LawScope::ForAll);
    let per_v = per_subspace(vs, |k, v| {
        let proj = crate::geometry::project_measure(mu, v)?;
        let pv = box_proxies(&proj.view(), q, &[ProxyKind::BoxLower], ctx)?.remove(0);
        let mut recs = VRecords::new();
        for ((s, c), p) in src.iter().zip(&cp).zip(&pv) {
            recs.push((LawScope::ForAll, flip(inequality("th3-1", s.q, Some(k), s.value, p.value, tol))));
            if s.q <= 2.0 {
                recs.push((LawScope::AlmostEvery, equality("th3-2", s.q, Some(k), p.value, c.value, tol)));
            } else {
                let pred = (mf * (1.0 - s.q)).max(c.value);
                recs.push((LawScope::AlmostEvery, equality("th3-3", s.q, Some(k), p.value, pred, tol)));
            }
        }
        Ok(recs)
    })?;
    absorb(&mut out, per_v);
    Ok(out)
}

/// Threshold on I_s(μ) standing in for "finite energy" on an atomic
/// approximation: `base + per_log · ln(#atoms)`. At the critical exponent the
/// energy of a depth-k approximation grows like k, i.e. like ln(#atoms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyThreshold {
    pub base: f64,
    pub per_log: f64,
}

impl Default for EnergyThreshold {
    fn default() -> Self {
        EnergyThreshold {
            base: 4.0,
            per_log: 4.0,
        }
    }
}

impl EnergyThreshold {
    pub fn value(&self, atoms: usize) -> f64 {
        self.base + self.per_log * (atoms.max(1) as f64).ln()
    }
}

/// Energy-regime bounds on the projected cover proxies (full supports).
/// An energy above the threshold makes the outcome inconclusive.
pub fn check_thbb(
    mu: &DiscreteMeasure,
    s: f64,
    q: &[f64],
    vs: &[Subspace],
    threshold: &EnergyThreshold,
    ctx: &CheckContext<'_>,
) -> Result<CheckOutcome> {
    check_q(q, |x| x >= 0.0, "q >= 0")?;
    let m = check_dims(mu, vs)?;
    let mf = m as f64;
    let n = mu.dim() as f64;
    if !(mf <= s && s < n) {
        return Err(Error::domain(format!("energy exponent s={s} must satisfy m={m} <= s < n={n}")));
    }
    let tol = ctx.tol;
    let energy = s_energy(mu, s)?;
    let limit = threshold.value(mu.len());
    let mut out = CheckOutcome::for_measure(mu, ctx.radii());
    out.diagnostics.proxy = true;
    out.diagnostics.max_depth = Some(ctx.max_depth);
    let finite = energy <= limit;
    out.diagnostics.hypotheses.push(Hypothesis {
        name: format!("finite {s}-energy"),
        status: if finite { "met" } else { "unmet" }.into(),
        detail: format!("I_s = {energy:.6e}, threshold {limit:.6e}"),
    });
    if !finite {
        out.inconclusive = Some(format!("I_{s} = {energy:.4e} exceeds the finite-energy threshold {limit:.4e}"));
        return Ok(out);
    }
    let strong = 2.0 * mf < s;
    let per_v = per_subspace(vs, |k, v| {
        let proj = crate::geometry::project_measure(mu, v)?;
        let pv = box_proxies(&proj.view(), q, &[ProxyKind::BoxLower, ProxyKind::BoxUpper], ctx)?;
        let mut recs = VRecords::new();
        for (lo, up) in pv[0].iter().zip(&pv[1]) {
            let qq = lo.q;
            let base = mf * (1.0 - qq);
            if strong {
                recs.push((LawScope::AlmostEvery, equality("thbb1-lower", qq, Some(k), lo.value, base, tol)));
                recs.push((LawScope::AlmostEvery, equality("thbb1-upper", qq, Some(k), up.value, base, tol)));
            } else {
                let cap = base.max(-s * qq / 2.0);
                recs.push((LawScope::AlmostEvery, flip(inequality("thbb2-lower", qq, Some(k), base, lo.value, tol))));
                recs.push((LawScope::AlmostEvery, inequality("thbb2-order", qq, Some(k), lo.value, up.value, tol)));
                let mut r = inequality("thbb2-upper", qq, Some(k), up.value, cap, tol);
                r.predicted = Some(cap);
                recs.push((LawScope::AlmostEvery, r));
            }
        }
        Ok(recs)
    })?;
    absorb(&mut out, per_v);
    Ok(out)
}

/// Experimental: the Legendre conjugates of the projected and source upper
/// cover proxies agree at α = −B̂'(q) (central differences at interior grid
/// points). The Frostman-measure hypothesis is assumed, not constructed.
pub fn check_formalism(mu: &DiscreteMeasure, q: &[f64], vs: &[Subspace], ctx: &CheckContext<'_>) -> Result<CheckOutcome> {
    check_q(q, |x| x >= 0.0, "q >= 0")?;
    if q.len() < 3 || q.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("FORMALISM needs at least 3 increasing q-values"));
    }
    let m = check_dims(mu, vs)?;
    let tol = ctx.tol;
    let view = mu.view();
    let mut both = box_proxies(&view, q, &[ProxyKind::BoxUpper, ProxyKind::BoxLower], ctx)?;
    let lower = both.pop().unwrap_or_default();
    let src = both.pop().unwrap_or_default();
    let mut out = CheckOutcome::for_measure(mu, ctx.radii());
    out.diagnostics.proxy = true;
    out.diagnostics.max_depth = Some(ctx.max_depth);
    out.diagnostics.experimental = true;
    out.diagnostics.hypotheses.push(Hypothesis {
        name: "Frostman measure".into(),
        status: "assumed".into(),
        detail: "a nontrivial Frostman measure on the iso-Hölder set is assumed to exist".into(),
    });
    let mf = m as f64;
    let cover_ok = lower.iter().all(|p| pieces_at_least(p, (-mf).max(mf * (1.0 - p.q))));
    out.diagnostics.hypotheses.push(Hypothesis {
        name: "cover condition".into(),
        status: if cover_ok { "met" } else { "unmet" }.into(),
        detail: "pieces >= max(-m, m(1-q)); checked on the dyadic partitions used only".into(),
    });
    if !cover_ok {
        out.inconclusive = Some("cover condition unmet on the dyadic partitions".into());
        return Ok(out);
    }
    let curve = |ps: &[CoverProxy]| -> Option<Vec<(f64, f64)>> {
        ps.iter().map(|p| p.value.is_finite().then_some((p.q, p.value))).collect()
    };
    let Some(fsrc) = curve(&src) else {
        out.inconclusive = Some("source proxy is not finite on the whole q-grid".into());
        return Ok(out);
    };
    let alphas: Vec<(f64, f64)> = (1..fsrc.len() - 1)
        .map(|k| (fsrc[k].0, -(fsrc[k + 1].1 - fsrc[k - 1].1) / (fsrc[k + 1].0 - fsrc[k - 1].0)))
        .collect();
    let grid: Vec<f64> = alphas.iter().map(|a| a.1).collect();
    let conj_src = legendre_transform(&fsrc, &grid)?;
    out.law("formalism", LawScope::AlmostEvery);
    let per_v = per_subspace(vs, |k, v| {
        let proj = crate::geometry::project_measure(mu, v)?;
        let pv = box_proxies(&proj.view(), q, &[ProxyKind::BoxUpper], ctx)?.remove(0);
        let mut recs = VRecords::new();
        let Some(fv) = curve(&pv) else {
            for &(qq, _) in &alphas {
                recs.push((LawScope::AlmostEvery, record("formalism", qq, Some(k), f64::NAN, f64::NAN, None, tol, false)));
            }
            return Ok(recs);
        };
        let conj = legendre_transform(&fv, &grid)?;
        for (j, &(qq, _)) in alphas.iter().enumerate() {
            let lhs = conj.points[j].f;
            let rhs = conj_src.points[j].f;
            recs.push((LawScope::AlmostEvery, record("formalism", qq, Some(k), lhs, rhs, Some(rhs), tol, near(lhs, rhs, tol))));
        }
        Ok(recs)
    })?;
    absorb(&mut out, per_v);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_grassmannian;

    fn ctx<'a>(grid: &'a ScaleGrid, scales: &'a ScaleSpec, opts: &'a TauOptions, tol: f64) -> CheckContext<'a> {
        CheckContext {
            grid,
            scales,
            opts,
            max_depth: 1,
            tol,
            analytic: None,
            estimator_tol: None,
        }
    }

    #[test]
    fn kernel_identity_single_atom() {
        let mu = DiscreteMeasure::from_atoms(2, vec![([0.3, 0.4].into(), 1.0)]).unwrap();
        let out = check_kernel_identity(&mu, &[[0.3, 0.4].into()], &[0.1, 0.5], 1, 100, &RandomSource::new(1, 0), 1e-9).unwrap();
        for r in out.records {
            assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
            assert!(r.pass);
        }
    }

    #[test]
    fn kernel_identity_isometry() {
        let mu = DiscreteMeasure::from_atoms(2, vec![([0.0, 0.0].into(), 0.5), ([0.3, 0.0].into(), 0.5)]).unwrap();
        let out = check_kernel_identity(&mu, &[[0.0, 0.0].into()], &[0.2, 0.5], 2, 100, &RandomSource::new(1, 0), 0.01).unwrap();
        assert!(out.records.iter().all(|r| r.pass), "{:?}", out.records);
        assert!(out.records.iter().any(|r| r.law == "kernel-isometry" && r.lhs == 0.5));
    }

    #[test]
    fn th1_empty_subset_is_vacuous() {
        let mu = crate::measure::from_ifs(&crate::experiments::catalog_entry("uniform_square").unwrap().spec, 5).unwrap();
        let e = SupportSubset::empty();
        let view = crate::measure::restrict(&mu, &e).unwrap();
        let scales = ScaleSpec::ladder(2.0, 2.0, 5.0, 1);
        let grid = scales.grid(mu.diameter(), mu.resolution(), vec![0.0]).unwrap();
        let opts = TauOptions::default();
        let vs = sample_grassmannian(2, 1, 2, &RandomSource::new(3, 0)).unwrap();
        let out = check_th1(&mu, &view, &[0.0, 0.5], &vs, &ctx(&grid, &scales, &opts, 0.05)).unwrap();
        assert!(out.records.iter().all(|r| r.pass && r.lhs == f64::NEG_INFINITY));
    }

    #[test]
    fn hypotheses_enforced() {
        let mu = DiscreteMeasure::from_atoms(2, vec![([0.0, 0.0].into(), 1.0)]).unwrap();
        let grid = ScaleGrid::dyadic(1.0, 1, 4, vec![]).unwrap();
        let scales = ScaleSpec::Radii { radii: grid.window_radii().to_vec() };
        let opts = TauOptions::default();
        let vs = sample_grassmannian(2, 1, 1, &RandomSource::new(3, 0)).unwrap();
        let c = ctx(&grid, &scales, &opts, 0.05);
        assert!(check_th1(&mu, &mu.view(), &[1.5], &vs, &c).is_err());
        assert!(check_th2(&mu, &[1.0], &vs, false, &c).is_err());
        assert!(check_thbb(&mu, 0.5, &[0.0], &vs, &EnergyThreshold::default(), &c).is_err());
    }

    #[test]
    fn th3_single_atom_all_zero() {
        let mu = DiscreteMeasure::from_atoms(2, vec![([0.2, 0.2].into(), 1.0)]).unwrap();
        let grid = ScaleGrid::dyadic(1.0, 1, 4, vec![]).unwrap();
        let scales = ScaleSpec::Radii { radii: grid.window_radii().to_vec() };
        let opts = TauOptions::default();
        let vs = sample_grassmannian(2, 1, 3, &RandomSource::new(3, 0)).unwrap();
        let out = check_th3(&mu, &[1.5, 3.0], &vs, &ctx(&grid, &scales, &opts, 1e-9)).unwrap();
        for r in &out.records {
            if r.q == Some(1.5) {
                assert_eq!(r.lhs, 0.0, "{r:?}");
            }
        }
        assert!(out.records.iter().all(|r| r.pass), "{:?}", out.records);
    }
}
