//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{Datelike, TimeZone, Utc};
use regex::Regex;
use tempex::assembler::{ExternalListIngest, SnapshotTuple};
use tempex::crawler::TrapConfig;
use tempex::backend::{CdxBackend, ReplayBackend};
use tempex::cdx::{CdxGateway, CdxQuery};
use tempex::change::{
    aggregate_categories, mine_trends, PageCategory, RedirectCategory, RedirectKind, TermChangeReport,
};
use tempex::fixture::{FixtureStore, ObservedBackend, RequestKind};
use tempex::pipeline::{
    analyze, assemble, provenance, read_seeds, run_analyze, run_assemble, run_crawl, AssembleInputs, Context,
    RunConfig,
};
use tempex::provenance::{mine_provenance, SourceGroup, SourceGroupingTable, TrendShape};
use tempex::rate::{Clock, RateLimitPolicy, RateLimiter, VirtualClock};
use tempex::url_keys::{canonicalize, DepthClass};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn context(name: &str) -> Context {
    Context::new(RunConfig::load(&fixture(name).join("tempex.json")).expect("config")).expect("context")
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(actual: usize, expected: usize, tol: usize) -> bool {
    actual.abs_diff(expected) <= tol
}

/// Crawl, assemble, provenance and analysis of paper-mini written under `out`.
fn paper_mini_run(out: &Path) -> (Context, Vec<SnapshotTuple>, tempex::pipeline::AssembleReport, Duration) {
    let ctx = context("paper-mini");
    let seeds = read_seeds(ctx.config.inputs.seeds.as_ref().unwrap()).unwrap();
    let candidates = out.join("candidates.jsonl");
    run_crawl(&ctx, &seeds, &candidates).unwrap();
    let mut inputs = AssembleInputs::from_config(&ctx.config);
    inputs.candidates.push(candidates);
    let triplets = out.join("triplets.jsonl");
    let start = Instant::now();
    let assembly = run_assemble(&ctx, &inputs, &triplets).unwrap();
    let assemble_time = start.elapsed();
    run_analyze(&ctx, &triplets, &out.join("report.json")).unwrap();
    (ctx, assembly.tuples, assembly.report, assemble_time)
}

fn funnel() -> Check {
    let ctx = context("paper-mini");
    let start = Instant::now();
    let assembly = assemble(&ctx, &AssembleInputs::from_config(&ctx.config)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let o = &assembly.report.originals;
    ensure(o.pairs == 1067, format!("pairs {}", o.pairs))?;
    ensure(o.tuples == 90, format!("tuples {} != 90", o.tuples))?;
    // 9% of pairs had an early capture; about 6% of those were non-success.
    let early = (o.pairs as f64 * 0.09).round() as usize;
    let eliminated = (o.with_early_capture as f64 * 0.06).round() as usize;
    ensure(within(o.with_early_capture, early, 1), format!("with early {} vs {early}", o.with_early_capture))?;
    ensure(within(o.early_non_success, eliminated, 1), format!("eliminated {} vs {eliminated}", o.early_non_success))?;
    ensure(o.with_early_capture - o.early_non_success == o.tuples, "funnel does not close")?;
    ensure(elapsed < Duration::from_secs(10), format!("runtime {elapsed:?}"))?;
    Ok(format!(
        "{} pairs -> {} early -> {} eliminated -> {} tuples in {:.2?}",
        o.pairs, o.with_early_capture, o.early_non_success, o.tuples, elapsed
    ))
}

/// Path segment repeated three times, more than twelve segments, a
/// `/YYYY/MM/DD/` path or a session id in the query.
fn looks_like_trap(url: &url::Url) -> bool {
    let segs: Vec<&str> = url.path().split('/').filter(|s| !s.is_empty()).collect();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &segs {
        *seen.entry(s).or_default() += 1;
    }
    let calendar = Regex::new(r"/(19|20)\d\d/\d{1,2}/\d{1,2}(/|$)").unwrap();
    let session = url
        .query_pairs()
        .any(|(k, _)| ["jsessionid", "phpsessid", "sid", "sessionid"].contains(&k.to_ascii_lowercase().as_str()));
    seen.values().any(|&n| n >= 3) || segs.len() > 12 || calendar.is_match(url.path()) || session
}

fn crawl_12() -> Check {
    let ctx = context("crawl-12");
    let store = FixtureStore::load(fixture("crawl-12")).map_err(|e| e.to_string())?;
    let seeds = read_seeds(ctx.config.inputs.seeds.as_ref().unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (report, _) = run_crawl(&ctx, &seeds, &dir.path().join("c.jsonl")).map_err(|e| e.to_string())?;
    let got: BTreeSet<String> = report.candidates.iter().map(|c| c.surt.key.clone()).collect();

    let target = Utc.with_ymd_and_hms(2008, 1, 1, 0, 0, 0).unwrap();
    let href = Regex::new(r#"href="([^"]*)""#).unwrap();
    let mut expected = BTreeSet::new();
    let mut visited = BTreeSet::new();
    let mut queue: VecDeque<url::Url> = seeds.iter().map(|s| url::Url::parse(s).unwrap()).collect();
    while let Some(u) = queue.pop_front() {
        if !visited.insert(u.to_string()) {
            continue;
        }
        let in_scope = u.host_str().is_some_and(|h| h.ends_with(".gov"));
        if !in_scope || looks_like_trap(&u) {
            continue;
        }
        let Some(replay) = store.replay(u.as_str(), target).map_err(|e| e.to_string())? else {
            continue;
        };
        let year = replay.capture.datetime.year();
        if replay.capture.status != Some(200) || !(2007..=2008).contains(&year) {
            continue;
        }
        expected.insert(canonicalize(u.as_str()).unwrap().key);
        for cap in href.captures_iter(&replay.body) {
            if let Ok(next) = u.join(&cap[1]) {
                queue.push_back(next);
            }
        }
    }
    ensure(got == expected, format!("crawl {got:?} != oracle {expected:?}"))?;
    let hub = canonicalize("http://www.nps.gov/hub/").unwrap().key;
    let child = canonicalize("http://www.nps.gov/hub/k.htm").unwrap().key;
    ensure(!got.contains(&hub) && !got.contains(&child), "2009 hub subtree present")?;
    let child_ok = store
        .replay("http://www.nps.gov/hub/k.htm", target)
        .unwrap()
        .is_some_and(|r| r.capture.status == Some(200) && r.capture.datetime.year() == 2008);
    ensure(child_ok, "hub child should itself be acceptable")?;
    Ok(format!("{} candidates equal the oracle; hub subtree pruned", got.len()))
}

fn quota() -> Check {
    let ctx = context("quota");
    let dir = tempfile::tempdir().unwrap();
    let seeds = read_seeds(ctx.config.inputs.seeds.as_ref().unwrap()).unwrap();
    let candidates = dir.path().join("c.jsonl");
    let (crawl, _) = run_crawl(&ctx, &seeds, &candidates).map_err(|e| e.to_string())?;
    let usgs_stream = crawl
        .candidates
        .iter()
        .filter(|c| c.agency == "usgs.gov" && c.crawl_depth > 0)
        .count();
    let mut inputs = AssembleInputs::from_config(&ctx.config);
    inputs.candidates.push(candidates);
    let assembly = assemble(&ctx, &inputs).map_err(|e| e.to_string())?;
    let count = |agency: &str, depth: DepthClass| {
        assembly
            .tuples
            .iter()
            .filter(|t| t.agency == agency && t.depth.class == depth)
            .count()
    };
    let (high, deep) = (count("usgs.gov", DepthClass::High), count("usgs.gov", DepthClass::Deep));
    ensure(high == 15 && deep == 15, format!("usgs {high} high + {deep} deep"))?;
    let examined_usgs = assembly.ledger.found("usgs.gov", DepthClass::High) + assembly.ledger.found("usgs.gov", DepthClass::Deep);
    let examined = assembly.report.sources.values().map(|s| s.counters.examined).sum::<usize>();
    let total_stream = crawl.candidates.len();
    ensure(usgs_stream == 274, format!("usgs stream {usgs_stream}"))?;
    ensure(examined < total_stream, format!("stream exhausted: examined {examined} of {total_stream}"))?;
    let cdc = count("cdc.gov", DepthClass::Deep);
    ensure(cdc == 18, format!("cdc deep {cdc}"))?;
    Ok(format!(
        "usgs 15 high + 15 deep ({examined_usgs} claimed, {examined} of {total_stream} candidates examined); cdc 18 deep"
    ))
}

fn rate_limit() -> Check {
    let ctx = context("paper-mini");
    let tuples = assemble(&ctx, &AssembleInputs::from_config(&ctx.config)).map_err(|e| e.to_string())?.tuples;
    let subset: Vec<SnapshotTuple> = tuples.into_iter().take(17).collect();

    let start = Instant::now();
    let clock: Arc<dyn Clock> = Arc::new(VirtualClock::new());
    let store = FixtureStore::load(fixture("paper-mini")).map_err(|e| e.to_string())?;
    let observed = Arc::new(ObservedBackend::new(store, clock.clone()));
    let cdx_limiter = Arc::new(RateLimiter::new(RateLimitPolicy::cdx_default(), clock.clone(), 11));
    let gateway = CdxGateway::new(observed.clone() as Arc<dyn CdxBackend>, cdx_limiter);
    let cdx_kind = |k: RequestKind| matches!(k, RequestKind::CdxPage | RequestKind::CdxPageCount);
    while observed.log().iter().filter(|(k, _)| cdx_kind(*k)).count() < 150 {
        gateway
            .fetch_cdx(&CdxQuery::prefix("http://www.globalchange.gov/"))
            .map_err(|e| e.to_string())?;
    }

    let prov_limiter = RateLimiter::new(RateLimitPolicy::provenance_default(), clock.clone(), 12);
    mine_provenance(&subset, observed.as_ref(), &prov_limiter, &SourceGroupingTable::default());

    let cdx = observed.gaps(cdx_kind);
    let prov = observed.gaps(|k| k == RequestKind::Provenance);
    let total = observed.log().len();
    ensure(total >= 200, format!("only {total} requests"))?;
    let bad_cdx = cdx
        .iter()
        .filter(|g| **g < Duration::from_secs(8) || **g > Duration::from_secs(11))
        .count();
    let bad_prov = prov.iter().filter(|g| **g != Duration::from_secs(15)).count();
    ensure(prov.len() >= 49, format!("{} provenance gaps", prov.len()))?;
    ensure(bad_cdx == 0 && bad_prov == 0, format!("{bad_cdx} cdx and {bad_prov} provenance violations"))?;
    let wall = start.elapsed();
    ensure(wall < Duration::from_secs(1), format!("wall time {wall:?}"))?;
    Ok(format!(
        "{total} requests, {} cdx gaps in [8s, 11s], {} provenance gaps of 15s, wall {wall:.2?}",
        cdx.len(),
        prov.len()
    ))
}

fn prefix_vs_domain() -> Check {
    let ctx = context("paper-mini");
    let gateway = ctx.gateway();
    let tt = "gov,osmre,techtransfer)";
    let domain = gateway.fetch_cdx(&CdxQuery::domain("osmre.gov")).map_err(|e| e.to_string())?;
    let prefix = gateway
        .fetch_cdx(&CdxQuery::prefix("http://www.osmre.gov/"))
        .map_err(|e| e.to_string())?;
    let d = domain.records.iter().filter(|r| r.urlkey.starts_with(tt)).count();
    let p = prefix.records.iter().filter(|r| r.urlkey.starts_with(tt)).count();
    ensure(d == 3 && p == 0, format!("techtransfer rows: domain {d}, prefix {p}"))?;
    ensure(!prefix.records.is_empty(), "prefix query returned nothing at all")?;
    Ok(format!("techtransfer rows: domain {d}, prefix {p}"))
}

fn trap_filtering() -> Check {
    let ctx = context("paper-mini");
    let path = fixture("paper-mini").join("inputs/eot-blm.txt");
    let ingest = ExternalListIngest::new(
        std::io::BufReader::new(std::fs::File::open(&path).unwrap()),
        ctx.config.scope.clone(),
        TrapConfig::default(),
        ctx.attribution(),
    );
    let mut ingest = ingest;
    let emitted: Vec<_> = ingest.by_ref().collect();
    let trapped_emitted = emitted
        .iter()
        .filter(|c| looks_like_trap(&url::Url::parse(&c.key.source_url).unwrap()))
        .count();
    let lines = std::fs::read_to_string(&path).unwrap();
    let oracle_traps = lines
        .lines()
        .filter(|l| url::Url::parse(l.trim()).is_ok_and(|u| looks_like_trap(&u)))
        .count();
    let oracle_ratio = oracle_traps as f64 / lines.lines().count() as f64;

    let assembly = assemble(&ctx, &AssembleInputs::from_config(&ctx.config)).map_err(|e| e.to_string())?;
    let ratio = assembly.report.external.first().and_then(|e| e.trap_ratio).ok_or("no trap ratio reported")?;
    ensure((ratio - 0.75).abs() <= 0.01, format!("reported trap ratio {ratio}"))?;
    ensure((oracle_ratio - 0.75).abs() <= 0.01, format!("oracle trap ratio {oracle_ratio}"))?;
    ensure(trapped_emitted == 0, format!("{trapped_emitted} trap urls emitted"))?;
    Ok(format!("trap ratio {ratio:.3}; {} emitted, 0 traps among them", emitted.len()))
}

fn synthetic_report(i: usize, category: PageCategory, changed: bool) -> TermChangeReport {
    TermChangeReport {
        page: format!("http://www.example.gov/p{i}"),
        agency: "example.gov".into(),
        presence: BTreeMap::new(),
        deleted_terms: Vec::new(),
        deleted_tokens: BTreeSet::new(),
        changed,
        page_category: category,
    }
}

fn category_arithmetic() -> Check {
    let plan = [
        (PageCategory::DeletedBothOrigins, 373, true),
        (PageCategory::DeletedMiddleOnly, 274, true),
        (PageCategory::DeletedPriorOnly, 55, true),
        (PageCategory::ChangedNoTrackedDeletion, 990 - 702, true),
        (PageCategory::Unchanged, 1220 - 990, false),
    ];
    let mut reports = Vec::new();
    for (category, n, changed) in plan {
        for _ in 0..n {
            reports.push(synthetic_report(reports.len(), category, changed));
        }
    }
    let s = aggregate_categories(&reports);
    let c = s.counts;
    ensure(
        (c.total_pages, c.changed, c.deleted_both, c.deleted_middle_only, c.deleted_prior_only) == (1220, 990, 373, 274, 55),
        format!("counts {c:?}"),
    )?;
    ensure(s.percentages.percent_changed == Some(81.1), format!("{:?}", s.percentages))?;

    // The stated denominator (740 pages with deletions) is larger than the
    // three deletion categories together (702), so it enters as a count.
    let counts = tempex::change::CategoryCounts {
        with_deletions: 740,
        ..c
    };
    let p = counts.percentages();
    let oracle = |n: f64, d: f64| (n / d * 1000.0).round() / 10.0;
    let expected = (oracle(274.0, 740.0), oracle(647.0, 740.0), oracle(990.0, 1220.0));
    ensure(expected == (37.0, 87.4, 81.1), format!("oracle {expected:?}"))?;
    let got = (p.percent_middle_only, p.percent_any_middle, p.percent_changed);
    ensure(got == (Some(37.0), Some(87.4), Some(81.1)), format!("percentages {p:?}"))?;
    Ok("37.0% / 87.4% / 81.1%".into())
}

struct Analysis {
    reports: Vec<TermChangeReport>,
    summary: tempex::pipeline::AnalysisReport,
    tuples: Vec<SnapshotTuple>,
    ctx: Context,
}

fn paper_mini_analysis() -> Analysis {
    let ctx = context("paper-mini");
    let dir = tempfile::tempdir().unwrap();
    let seeds = read_seeds(ctx.config.inputs.seeds.as_ref().unwrap()).unwrap();
    let candidates = dir.path().join("c.jsonl");
    run_crawl(&ctx, &seeds, &candidates).unwrap();
    let mut inputs = AssembleInputs::from_config(&ctx.config);
    inputs.candidates.push(candidates);
    let tuples = assemble(&ctx, &inputs).unwrap().tuples;
    let (reports, summary) = analyze(&ctx, &tuples).unwrap();
    Analysis {
        reports,
        summary,
        tuples,
        ctx,
    }
}

fn trends(a: &Analysis) -> Check {
    let has = |agency: &str, term: &str, n: usize| {
        a.summary
            .trends
            .iter()
            .any(|t| t.agency == agency && t.term == term && t.page_count == n)
    };
    ensure(has("osha.gov", "exposure", 8), format!("missing osha exposure 8 in {:?}", a.summary.trends))?;
    ensure(has("nih.gov", "healthier", 5), format!("missing nih healthier 5 in {:?}", a.summary.trends))?;
    // Independent count: distinct pages per (agency, deleted token).
    let mut pages: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    for r in &a.reports {
        for t in &r.deleted_tokens {
            pages.entry((r.agency.as_str(), t.as_str())).or_default().insert(&r.page);
        }
    }
    let oracle: BTreeSet<(String, String, usize)> = pages
        .iter()
        .filter(|(_, p)| p.len() >= a.ctx.config.trend_threshold)
        .map(|((ag, t), p)| (ag.to_string(), t.to_string(), p.len()))
        .collect();
    let got: BTreeSet<(String, String, usize)> =
        a.summary.trends.iter().map(|t| (t.agency.clone(), t.term.clone(), t.page_count)).collect();
    ensure(got == oracle, "trend set differs from oracle")?;
    let gao: Vec<TermChangeReport> = a.reports.iter().filter(|r| r.agency == "gao.gov").cloned().collect();
    ensure(gao.iter().any(|r| !r.deleted_tokens.is_empty()), "gao fixture has no deletions")?;
    let gao_trends = mine_trends(&gao, a.ctx.config.trend_threshold);
    ensure(gao_trends.is_empty(), format!("gao trends {gao_trends:?}"))?;
    Ok(format!("{} trends incl. (osha, exposure, 8) and (nih, healthier, 5); gao none", got.len()))
}

fn tracked_table(a: &Analysis) -> Check {
    let expected = [
        ("regulation", 16),
        ("safety", 13),
        ("sustainable", 8),
        ("emission", 7),
        ("climate", 5),
        ("economic", 4),
        ("pollution", 3),
        ("wildfires", 3),
    ];
    let got: Vec<(&str, usize)> = a.summary.tracked_table.iter().map(|r| (r.term.as_str(), r.count)).collect();
    ensure(got == expected, format!("{got:?}"))?;
    Ok("16/13/8/7/5/4/3/3 in table order".into())
}

fn redirects(a: &Analysis) -> Check {
    let decay = a.summary.decay.as_ref().ok_or("no probe set configured")?;
    let expected = [
        (RedirectKind::NonWwwToWww, 4, RedirectCategory::Canonical),
        (RedirectKind::OldToNew3xx, 8, RedirectCategory::NonCanonical),
        (RedirectKind::OldToNew404, 7, RedirectCategory::NonCanonical),
        (RedirectKind::SubdomainChange, 2, RedirectCategory::NonCanonical),
        (RedirectKind::Sink, 1, RedirectCategory::Soft404),
    ];
    for (kind, n, category) in expected {
        let got = decay.counts.get(&kind).copied().unwrap_or(0);
        ensure(got == n, format!("{kind:?}: {got} != {n}"))?;
        ensure(kind.category() == category, format!("{kind:?} category {:?}", kind.category()))?;
    }
    let total: usize = decay.counts.values().sum();
    ensure(total == 22, format!("{total} probes classified"))?;
    Ok("4/8/7/2/1 with Canonical/NonCanonical/Soft404".into())
}

fn paper_shape(a: usize, b: usize, c: usize) -> TrendShape {
    // Exhaustive sign-pair table; a flat step follows the other step.
    let s1 = (b as i64 - a as i64).signum();
    let s2 = (c as i64 - b as i64).signum();
    match (s1, s2) {
        (1, 1) | (1, 0) | (0, 1) | (0, 0) => TrendShape::AlwaysGrowing,
        (-1, -1) | (-1, 0) | (0, -1) => TrendShape::AlwaysShrinking,
        (1, -1) => TrendShape::GrowThenShrink,
        _ => TrendShape::ShrinkThenGrow,
    }
}

fn provenance_distribution(a: &Analysis) -> Check {
    let (_, report) = provenance(&a.ctx, &a.tuples).map_err(|e| e.to_string())?;
    let orgs = &report.by_epoch["2008"].organizations;
    let expected = [
        ("Alexa", 82),
        ("Common Crawl", 22),
        ("Internet Archive", 8),
        ("End of Term", 6),
        ("Archive-It", 3),
        ("INA", 0),
    ];
    let mut line = Vec::new();
    for (org, n) in expected {
        let got = orgs.get(org).copied().unwrap_or(0);
        ensure(within(got, n, 1), format!("{org}: {got} vs {n} in {orgs:?}"))?;
        line.push(got.to_string());
    }
    let paper = [
        (SourceGroup::Monitoring, TrendShape::AlwaysGrowing),
        (SourceGroup::SavePageNow, TrendShape::AlwaysGrowing),
        (SourceGroup::ArchiveTeam, TrendShape::AlwaysGrowing),
        (SourceGroup::LargeImportedCrawls, TrendShape::AlwaysShrinking),
        (SourceGroup::InternalCrawls, TrendShape::GrowThenShrink),
        (SourceGroup::ArchiveIt, TrendShape::GrowThenShrink),
        (SourceGroup::SmallImportedCrawls, TrendShape::GrowThenShrink),
        (SourceGroup::Social, TrendShape::GrowThenShrink),
        (SourceGroup::EndOfTerm, TrendShape::ShrinkThenGrow),
    ];
    for (group, shape) in paper {
        let series = report.series.get(&group).ok_or(format!("no series for {group:?}"))?;
        let [x, y, z] = series[..] else {
            return Err(format!("{group:?} series {series:?}"));
        };
        ensure(paper_shape(x, y, z) == shape, format!("{group:?} fixture series {series:?} is not {shape:?}"))?;
        ensure(report.shapes.get(&group) == Some(&shape), format!("{group:?} classified {:?}", report.shapes.get(&group)))?;
    }
    Ok(format!("2008 organizations {}; nine group shapes match", line.join("/")))
}

fn determinism() -> Check {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    paper_mini_run(a.path());
    paper_mini_run(b.path());
    for name in ["triplets.jsonl", "report.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        ensure(!x.is_empty() && x == y, format!("{name} differs between runs"))?;
    }
    Ok("triplets.jsonl and report.json byte-identical".into())
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, f: &dyn Fn() -> Check| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    };
    report("funnel arithmetic", &funnel);
    report("sticky-time crawl soundness", &crawl_12);
    report("quota semantics", &quota);
    report("rate-limit contract", &rate_limit);
    report("prefix vs domain cdx", &prefix_vs_domain);
    report("trap filtering", &trap_filtering);
    report("change-analysis arithmetic", &category_arithmetic);
    let analysis = paper_mini_analysis();
    report("trend mining", &|| trends(&analysis));
    report("tracked-term table", &|| tracked_table(&analysis));
    report("redirect taxonomy", &|| redirects(&analysis));
    report("provenance distribution", &|| provenance_distribution(&analysis));
    report("determinism", &determinism);
    println!("{} of 12 criteria passed", 12 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
