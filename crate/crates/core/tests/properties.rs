use std::sync::Arc;
use std::time::Duration;

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use tempex::assembler::QuotaLedger;
use tempex::cdx::{parse_cdx_line, CdxQuery, MatchType, TimeBound};
use tempex::change::CategoryCounts;
use tempex::curation::{live_set, DecisionAction, DecisionLog};
use tempex::provenance::{shape_of, TrendShape};
use tempex::rate::{Clock, RateLimitPolicy, RateLimiter, VirtualClock};
use tempex::url_keys::{canonicalize, DepthClass};

fn host() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z][a-z0-9]{0,6}", 1..4).prop_map(|labels| format!("{}.gov", labels.join(".")))
}

fn path() -> impl Strategy<Value = String> {
    prop::collection::vec("[A-Za-z0-9_.-]{1,8}", 0..5).prop_map(|segs| format!("/{}", segs.join("/")))
}

fn params() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec(("[a-z]{1,5}", "[a-z0-9]{0,4}"), 0..4)
}

fn query_string(params: &[(String, String)]) -> String {
    if params.is_empty() {
        return String::new();
    }
    let joined: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("?{}", joined.join("&"))
}

proptest! {
    #[test]
    fn canonical_key_is_a_fixed_point(h in host(), p in path(), q in params()) {
        let url = format!("http://{h}{p}{}", query_string(&q));
        let first = canonicalize(&url).unwrap();
        let second = canonicalize(&first.source_url).unwrap();
        prop_assert_eq!(first.key, second.key);
    }

    #[test]
    fn key_ignores_host_case_and_param_order(h in host(), p in path(), q in params()) {
        let mut reversed = q.clone();
        reversed.reverse();
        let a = canonicalize(&format!("http://{h}{p}{}", query_string(&q))).unwrap();
        let b = canonicalize(&format!("HTTP://{}{p}{}", h.to_uppercase(), query_string(&reversed))).unwrap();
        prop_assert_eq!(a.key, b.key);
    }

    #[test]
    fn key_host_part_is_reversed_host(h in host(), p in path()) {
        let key = canonicalize(&format!("http://{h}{p}")).unwrap();
        let mut labels: Vec<&str> = h.split('.').collect();
        if labels.first() == Some(&"www") && labels.len() > 2 {
            labels.remove(0);
        }
        labels.reverse();
        prop_assert_eq!(key.host_part(), labels.join(","));
    }

    #[test]
    fn cdx_row_roundtrips_through_display(
        h in host(),
        p in path(),
        secs in 946_684_800i64..1_700_000_000,
        status in prop_oneof![Just("-".to_string()), (100u16..600).prop_map(|c| c.to_string())],
        digest in "[A-Z2-7]{32}",
        length in any::<u32>(),
    ) {
        let url = format!("http://{h}{p}");
        let key = canonicalize(&url).unwrap().key;
        let ts = Utc.timestamp_opt(secs, 0).unwrap().format("%Y%m%d%H%M%S");
        let line = format!("{key} {ts} {url} text/html {status} {digest} {length}");
        let record = parse_cdx_line(&line).unwrap();
        prop_assert_eq!(record.to_string(), line);
        prop_assert_eq!(parse_cdx_line(&record.to_string()).unwrap(), record);
    }

    #[test]
    fn cdx_query_params_roundtrip(
        target in "[a-z]{1,8}\\.gov/[a-z]{0,6}",
        kind in prop_oneof![Just(MatchType::Exact), Just(MatchType::Prefix), Just(MatchType::Domain)],
        years in prop::option::of((1996i32..2030, 0i32..10)),
    ) {
        let mut query = CdxQuery::new(kind, target);
        if let Some((from, span)) = years {
            query = query.years(from, from + span);
        }
        let params = query.to_params();
        let back = CdxQuery::from_params(params.iter().map(|(k, v)| (*k, v.as_str()))).unwrap();
        prop_assert_eq!(back, query);
    }

    #[test]
    fn time_bounds_cover_their_year(year in 1996i32..2100) {
        let b = TimeBound::year(year);
        prop_assert!(b.lower() < b.upper());
        prop_assert_eq!(b.lower(), Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap());
        prop_assert_eq!(b.upper(), Utc.with_ymd_and_hms(year, 12, 31, 23, 59, 59).unwrap());
    }

    #[test]
    fn shape_matches_extremum_oracle(a in 0usize..6, b in 0usize..6, c in 0usize..6) {
        let expected = if b > a && b > c {
            TrendShape::GrowThenShrink
        } else if b < a && b < c {
            TrendShape::ShrinkThenGrow
        } else if a >= b && b >= c && a > c {
            TrendShape::AlwaysShrinking
        } else {
            TrendShape::AlwaysGrowing
        };
        prop_assert_eq!(shape_of(a, b, c), expected);
    }

    #[test]
    fn percentages_stay_in_range(
        total in 0usize..2000,
        changed_frac in 0.0f64..=1.0,
        deletion_split in prop::collection::vec(0usize..400, 3),
    ) {
        let changed = (total as f64 * changed_frac) as usize;
        let (both, middle, prior) = (deletion_split[0], deletion_split[1], deletion_split[2]);
        let counts = CategoryCounts {
            total_pages: total,
            changed,
            with_deletions: both + middle + prior,
            deleted_both: both,
            deleted_middle_only: middle,
            deleted_prior_only: prior,
        };
        let pct = counts.percentages();
        for v in [pct.percent_middle_only, pct.percent_any_middle, pct.percent_changed].into_iter().flatten() {
            prop_assert!((0.0..=100.0).contains(&v), "{v}");
            prop_assert!(((v * 10.0).round() - v * 10.0).abs() < 1e-9);
        }
        prop_assert_eq!(pct.percent_changed.is_none(), total == 0);
        if let (Some(m), Some(any)) = (pct.percent_middle_only, pct.percent_any_middle) {
            prop_assert!(m <= any);
        }
    }

    #[test]
    fn quota_never_exceeds_target(
        target in 0usize..20,
        claims in prop::collection::vec((0usize..3, any::<bool>()), 0..120),
    ) {
        let ledger = Arc::new(QuotaLedger::new(target));
        let agencies = ["usgs", "cdc", "nih"];
        let chunks: Vec<Vec<(usize, bool)>> = claims.chunks(30).map(|c| c.to_vec()).collect();
        let granted: usize = std::thread::scope(|s| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let ledger = ledger.clone();
                    s.spawn(move || {
                        chunk
                            .iter()
                            .filter(|(a, deep)| {
                                let depth = if *deep { DepthClass::Deep } else { DepthClass::High };
                                ledger.try_claim(agencies[*a], depth)
                            })
                            .count()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        });
        let mut expected = 0;
        for (i, agency) in agencies.iter().enumerate() {
            for (deep, depth) in [(false, DepthClass::High), (true, DepthClass::Deep)] {
                let asked = claims.iter().filter(|(a, d)| *a == i && *d == deep).count();
                prop_assert_eq!(ledger.found(agency, depth), asked.min(target));
                expected += asked.min(target);
            }
        }
        prop_assert_eq!(granted, expected);
    }

    #[test]
    fn live_set_is_last_write_per_key(ops in prop::collection::vec((0usize..4, any::<bool>()), 0..40)) {
        let mut log = DecisionLog::in_memory();
        let mut model: std::collections::BTreeMap<String, DecisionAction> = Default::default();
        let at = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        for (k, accept) in ops {
            let surt = format!("gov,example)/page{k}");
            let action = if accept { DecisionAction::Accept } else { DecisionAction::Reject };
            let result = log.record(&surt, "http://example.gov/", action, "tester", at, None);
            if model.get(&surt) == Some(&action) {
                prop_assert!(result.is_err());
            } else {
                prop_assert!(result.is_ok());
                model.insert(surt, action);
            }
        }
        let live = log.live();
        prop_assert_eq!(live.len(), model.len());
        for (surt, action) in &model {
            prop_assert_eq!(live[surt.as_str()].action, *action);
        }
        prop_assert_eq!(live_set(log.entries()), live);
        let ids: Vec<u64> = log.entries().iter().map(|d| d.id).collect();
        prop_assert!(ids.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn virtual_gaps_respect_policy(seed in any::<u64>(), lo in 1u64..20, extra in 0u64..10, n in 2usize..40) {
        let policy = RateLimitPolicy::new(Duration::from_secs(lo), Duration::from_secs(lo + extra)).unwrap();
        let clock = Arc::new(VirtualClock::new());
        let limiter = RateLimiter::new(policy, clock.clone(), seed);
        let mut stamps = Vec::with_capacity(n);
        for _ in 0..n {
            limiter.acquire();
            stamps.push(clock.now());
        }
        for w in stamps.windows(2) {
            let gap = w[1] - w[0];
            prop_assert!(gap >= Duration::from_secs(lo) && gap <= Duration::from_secs(lo + extra), "{gap:?}");
        }
    }
}
