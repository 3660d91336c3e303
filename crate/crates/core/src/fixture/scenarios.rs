//! Generators for the shipped fixtures. Every fixture is a pure function of
//! this code, so regenerating produces byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use super::{write_fixture, FixtureError, FixtureStore, Manifest, ManifestCapture, ManifestPage};
use crate::assembler::{CaptureRow, PairRow};
use crate::cdx::{ts, CdxStatus};
use crate::change::{HopKind, Probe, ProbeResponse, ProbeSet, RedirectHop, TrackedTermList};
use crate::curation::{CurationDecision, DecisionAction};
use crate::epoch::{ymd, Timestamp};
use crate::memento::ArchiveEndpoint;

pub const CRAWL_12: &str = "crawl-12";
pub const QUOTA: &str = "quota";
pub const PAPER_MINI: &str = "paper-mini";

pub const SEEDS_FILE: &str = "inputs/seeds.txt";
pub const PAIRS_FILE: &str = "inputs/pairs.jsonl";
pub const EXTERNAL_FILE: &str = "inputs/eot-blm.txt";
pub const DECISIONS_FILE: &str = "inputs/decisions.jsonl";
pub const PROBES_FILE: &str = "inputs/probes.json";
pub const TERMS_FILE: &str = "inputs/terms.json";
pub const CONFIG_FILE: &str = "tempex.json";

const LEAF: &str = "pages/leaf.html";

/// A fixture under construction: archive contents plus pipeline inputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub manifest: Manifest,
    pub bodies: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
}

impl Scenario {
    fn new(name: &'static str, page_size: usize) -> Self {
        Scenario {
            name,
            manifest: Manifest {
                cdx_page_size: page_size,
                pages: Vec::new(),
            },
            bodies: BTreeMap::new(),
            inputs: BTreeMap::new(),
        }
    }

    fn body(&mut self, rel: impl Into<String>, html: String) -> String {
        let rel = rel.into();
        self.bodies.insert(rel.clone(), html);
        rel
    }

    fn page(&mut self, url: &str, captures: Vec<ManifestCapture>) {
        self.manifest.pages.push(ManifestPage {
            url: url.to_string(),
            captures,
        });
    }

    fn input(&mut self, rel: &str, content: String) {
        self.inputs.insert(rel.to_string(), content);
    }

    pub fn store(&self) -> Result<FixtureStore, FixtureError> {
        FixtureStore::from_parts(self.manifest.clone(), self.bodies.clone())
    }

    /// Writes manifest, bodies and inputs under `root`.
    pub fn write(&self, root: &Path) -> Result<(), FixtureError> {
        write_fixture(root, &self.manifest, &self.bodies)?;
        for (rel, content) in &self.inputs {
            let path = root.join(rel);
            let io = |source| FixtureError::Io {
                path: path.display().to_string(),
                source,
            };
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
            std::fs::write(&path, content).map_err(io)?;
        }
        Ok(())
    }
}

pub fn all() -> Vec<Scenario> {
    vec![crawl_12(), quota(), paper_mini()]
}

/// Writes every scenario to `root/<name>`.
pub fn generate_all(root: &Path) -> Result<(), FixtureError> {
    for s in all() {
        s.write(&root.join(s.name))?;
    }
    Ok(())
}

fn cap(ts: Timestamp, status: u16) -> ManifestCapture {
    ManifestCapture::new(ts, CdxStatus::Code(status))
}

fn noon(y: i32, m: u32, d: u32) -> Timestamp {
    ts(y, m, d, 12, 0, 0)
}

fn html(title: &str, text: &str, links: &[&str]) -> String {
    let mut out = format!("<html><head><title>{title}</title></head><body>\n<h1>{title}</h1>\n<p>{text}</p>\n");
    if !links.is_empty() {
        out.push_str("<ul>\n");
        for l in links {
            out.push_str(&format!("<li><a href=\"{l}\">{l}</a></li>\n"));
        }
        out.push_str("</ul>\n");
    }
    out.push_str("</body></html>\n");
    out
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("fixture rows serialize") + "\n")
        .collect()
}

fn slug(url: &str) -> String {
    url.trim_start_matches("http://")
        .trim_start_matches("https://")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect()
}

fn wayback_uri(ts: &Timestamp, url: &str) -> String {
    ArchiveEndpoint::wayback().replay_url(ts, url)
}

/// The 12-page past web: nine pages reachable through accepted pages, a
/// 2009-dated hub whose only child is otherwise unreachable, and a trap.
pub fn crawl_12() -> Scenario {
    let mut s = Scenario::new(CRAWL_12, 100);
    let base = "http://www.nps.gov";
    let u = |p: &str| format!("{base}{p}");
    // (path, capture date, status, outlinks)
    let graph: Vec<(&str, Timestamp, u16, Vec<String>)> = vec![
        (
            "/",
            noon(2008, 1, 2),
            200,
            vec![
                u("/parks/"),
                u("/history/"),
                u("/news/"),
                u("/hub/"),
                u("/news/cookie/cookie/cookie/x.htm"),
                "http://www.example.com/".into(),
            ],
        ),
        ("/parks/", noon(2007, 11, 20), 200, vec![u("/parks/yell/"), u("/parks/grca/")]),
        ("/history/", noon(2008, 3, 5), 200, vec![u("/history/archeology/"), u("/")]),
        ("/news/", noon(2008, 5, 1), 200, vec![u("/news/releases/"), "/parks/".into()]),
        ("/parks/yell/", noon(2008, 2, 11), 200, vec![u("/parks/yell/index.htm")]),
        ("/parks/grca/", noon(2007, 6, 30), 200, vec![]),
        ("/history/archeology/", noon(2008, 1, 15), 200, vec![]),
        ("/news/releases/", noon(2007, 12, 15), 200, vec![]),
        ("/parks/yell/index.htm", noon(2008, 9, 9), 200, vec![u("/parks/yell/")]),
        ("/hub/", noon(2009, 3, 1), 200, vec![u("/hub/k.htm")]),
        ("/hub/k.htm", noon(2008, 4, 1), 200, vec![]),
        ("/news/cookie/cookie/cookie/x.htm", noon(2008, 2, 2), 200, vec![]),
    ];
    for (i, (path, at, status, links)) in graph.iter().enumerate() {
        let refs: Vec<&str> = links.iter().map(String::as_str).collect();
        let body = s.body(format!("pages/p{i:02}.html"), html(&format!("nps {path}"), "national park service", &refs));
        let url = u(path);
        s.page(&url, vec![cap(*at, *status).body(body)]);
    }
    s.input(SEEDS_FILE, format!("{base}/\n"));
    s.input(CONFIG_FILE, config_json(&[("seeds", "\"inputs/seeds.txt\"")], ""));
    s
}

/// Quota scenarios: usgs with 274 crawl candidates and cdc whose crawl
/// overlaps five original-collection Deep pages.
pub fn quota() -> Scenario {
    let mut s = Scenario::new(QUOTA, 100);
    s.body(LEAF, html("archived page", "archived content", &[]));
    let full = |s: &mut Scenario, url: &str| {
        s.page(
            url,
            vec![
                cap(noon(2008, 2, 1), 200).body(LEAF),
                cap(noon(2016, 6, 1), 200),
                cap(noon(2020, 6, 1), 200),
            ],
        );
    };

    let mut usgs_links = Vec::new();
    for i in 0..120 {
        usgs_links.push(format!("http://www.usgs.gov/h{i:03}.html"));
    }
    for i in 0..154 {
        usgs_links.push(format!("http://www.usgs.gov/science/d{i:03}.html"));
    }
    for (n, url) in usgs_links.iter().enumerate() {
        let verifies = if n < 120 { n % 3 == 0 } else { (n - 120) % 4 == 0 };
        if verifies {
            full(&mut s, url);
        } else if n % 2 == 0 {
            s.page(url, vec![cap(noon(2008, 3, 1), 200).body(LEAF), cap(noon(2016, 3, 1), 200)]);
        } else {
            s.page(url, vec![cap(noon(2008, 3, 1), 200).body(LEAF)]);
        }
    }
    let refs: Vec<&str> = usgs_links.iter().map(String::as_str).collect();
    let hub = s.body("pages/usgs.html", html("usgs", "science for a changing world", &refs));
    s.page("http://www.usgs.gov/", vec![cap(noon(2008, 1, 3), 200).body(hub)]);

    let cdc_deep: Vec<String> = (0..22)
        .map(|i| format!("http://www.cdc.gov/programs/area{i:02}/index.html"))
        .collect();
    // Original-collection pairs: areas 03, 07, 30, 31, 32 (Deep) and ten High pages.
    let mut originals: Vec<String> = vec![cdc_deep[3].clone(), cdc_deep[7].clone()];
    originals.extend((30..33).map(|i| format!("http://www.cdc.gov/programs/area{i:02}/index.html")));
    originals.extend((0..10).map(|i| format!("http://www.cdc.gov/topic{i:02}.html")));
    let mut pairs = Vec::new();
    for url in &originals {
        if !cdc_deep.contains(url) {
            full(&mut s, url);
        }
        pairs.push(pair_row(url, noon(2016, 6, 1), noon(2020, 6, 1)));
    }
    for (i, url) in cdc_deep.iter().enumerate() {
        if i == 5 || i == 11 {
            s.page(url, vec![cap(noon(2008, 2, 1), 200).body(LEAF), cap(noon(2016, 6, 1), 200)]);
        } else {
            full(&mut s, url);
        }
    }
    let refs: Vec<&str> = cdc_deep.iter().map(String::as_str).collect();
    let hub = s.body("pages/cdc.html", html("cdc", "disease control and prevention", &refs));
    s.page("http://www.cdc.gov/", vec![cap(noon(2008, 1, 3), 200).body(hub)]);

    s.input(SEEDS_FILE, "http://www.usgs.gov/\nhttp://www.cdc.gov/\n".into());
    s.input(PAIRS_FILE, jsonl(&pairs));
    s.input(
        CONFIG_FILE,
        config_json(&[("seeds", "\"inputs/seeds.txt\""), ("pairs", "[\"inputs/pairs.jsonl\"]")], ""),
    );
    s
}

/// Fixture-local run config with a virtual clock.
fn config_json(inputs: &[(&str, &str)], extra: &str) -> String {
    let inputs: Vec<String> = inputs.iter().map(|(k, v)| format!("    \"{k}\": {v}")).collect();
    format!(
        "{{\n  \"backend\": \"fixture:.\",\n  \"virtual_clock\": true,\n  \"seed\": 7,\n  \"inputs\": {{\n{}\n  }}{extra}\n}}\n",
        inputs.join(",\n")
    )
}

fn pair_row(url: &str, mid: Timestamp, late: Timestamp) -> PairRow {
    let row = |t: Timestamp| CaptureRow {
        archive: crate::memento::WAYBACK_ID.into(),
        datetime: t,
        uri_m: wayback_uri(&t, url),
    };
    PairRow {
        url: url.to_string(),
        captures: BTreeMap::from([("2016".to_string(), row(mid)), ("2020".to_string(), row(late))]),
    }
}

/// Text category a tuple page is built to fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Plan {
    Unchanged,
    Changed,
    Both,
    Middle,
    Prior,
}

#[derive(Debug, Clone)]
struct TuplePage {
    url: String,
    agency: String,
    dates: [Timestamp; 3],
    plan: Plan,
    middle_terms: Vec<String>,
    prior_terms: Vec<String>,
    extra_deleted: Vec<&'static str>,
    collections: [Vec<String>; 3],
    partner: Option<String>,
}

const ORIGINAL_ALLOCATION: &[(&str, usize, usize)] = &[
    ("cdc.gov", 5, 5),
    ("epa.gov", 7, 0),
    ("ferc.gov", 11, 7),
    ("fws.gov", 4, 1),
    ("nih.gov", 3, 5),
    ("noaa.gov", 20, 6),
    ("osha.gov", 10, 6),
];

/// Per-epoch provenance labels, as (collection label, count, partner).
fn provenance_plan() -> [Vec<(&'static str, usize, Option<&'static str>)>; 3] {
    [
        vec![
            ("alexa_crawl_2008", 82, None),
            ("commoncrawl", 22, None),
            ("internet archive wide crawl", 8, None),
            ("end-of-term-2008", 6, None),
            ("archive-it partner 1068", 3, Some("University of North Texas Libraries")),
            ("NARA web harvest", 1, None),
        ],
        vec![
            ("alexa_crawl_2016", 25, None),
            ("commoncrawl", 15, None),
            ("internet archive wide crawl", 12, None),
            ("gdelt", 8, None),
            ("archive-it partner 4143", 8, Some("State Library of Oregon")),
            ("INA web", 1, None),
            ("IMLS", 2, None),
            ("wikipedia outlinks", 2, None),
            ("end-of-term-2016", 2, None),
            ("EDGI", 25, None),
            ("mediacloud", 5, None),
            ("archiveteam", 17, None),
        ],
        vec![
            ("perma.cc", 3, None),
            ("arquivo.pt", 2, None),
            ("internet archive wide crawl", 6, None),
            ("archive-it partner 1068", 4, Some("University of North Texas Libraries")),
            ("NARA web harvest", 1, None),
            ("twitter outlinks", 1, None),
            ("end-of-term-2020", 5, None),
            ("EDGI", 50, None),
            ("gdelt", 15, None),
            ("mediacloud", 5, None),
            ("save page now", 10, None),
            ("archiveteam", 20, None),
        ],
    ]
}

/// Permutes `0..n` with a fixed stride so consecutive labels spread out.
fn spread(n: usize, stride: usize) -> Vec<usize> {
    assert_eq!(gcd(n, stride), 1, "stride must be coprime with {n}");
    (0..n).map(|i| (i * stride) % n).collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

const TREND_CAP: usize = 4;

/// Assigns tracked-term deletions and extra deleted tokens so that the
/// tracked table and the two intended trends come out exactly, and no other
/// (agency, token) pair reaches five pages.
fn plan_texts(pages: &mut [TuplePage]) {
    let n = pages.len();
    let mut labels = Vec::new();
    for (plan, count) in [
        (Plan::Unchanged, 23),
        (Plan::Changed, 48),
        (Plan::Both, 20),
        (Plan::Middle, 25),
        (Plan::Prior, 6),
    ] {
        labels.extend(std::iter::repeat_n(plan, count));
    }
    assert_eq!(labels.len(), n);
    for (i, slot) in spread(n, 45).into_iter().enumerate() {
        pages[i].plan = labels[slot];
    }

    let tracked = TrackedTermList::published();
    let counts = [16usize, 13, 8, 7, 5, 4, 3, 3];
    let mut per_agency: BTreeMap<(String, String), usize> = BTreeMap::new();
    let middle_pages: Vec<usize> = (0..n)
        .filter(|&i| matches!(pages[i].plan, Plan::Both | Plan::Middle))
        .collect();
    let mut cursor = 0;
    for (term, count) in tracked.0.iter().map(|t| t.term.clone()).zip(counts) {
        for _ in 0..count {
            let mut placed = false;
            for limit in 1..=2 {
                for step in 0..middle_pages.len() {
                    let i = middle_pages[(cursor + step) % middle_pages.len()];
                    let key = (pages[i].agency.clone(), term.clone());
                    let p = &pages[i];
                    if p.middle_terms.len() < limit
                        && !p.middle_terms.contains(&term)
                        && per_agency.get(&key).copied().unwrap_or(0) < TREND_CAP
                    {
                        pages[i].middle_terms.push(term.clone());
                        *per_agency.entry(key).or_default() += 1;
                        cursor = (cursor + step + 1) % middle_pages.len();
                        placed = true;
                        break;
                    }
                }
                if placed {
                    break;
                }
            }
            assert!(placed, "cannot place deletion of {term}");
        }
    }
    assert!(
        middle_pages.iter().all(|&i| !pages[i].middle_terms.is_empty()),
        "every middle-deletion page needs a tracked deletion"
    );
    let terms: Vec<String> = tracked.0.iter().map(|t| t.term.clone()).collect();
    let mut rot = 0;
    for i in 0..n {
        if !matches!(pages[i].plan, Plan::Both | Plan::Prior) {
            continue;
        }
        let mut placed = false;
        for step in 0..terms.len() {
            let term = &terms[(rot + step) % terms.len()];
            let key = (pages[i].agency.clone(), term.clone());
            if !pages[i].middle_terms.contains(term) && per_agency.get(&key).copied().unwrap_or(0) < TREND_CAP {
                pages[i].prior_terms.push(term.clone());
                *per_agency.entry(key).or_default() += 1;
                rot = (rot + step + 1) % terms.len();
                placed = true;
                break;
            }
        }
        assert!(placed, "cannot place prior deletion on {}", pages[i].url);
    }

    for (agency, token, count) in [("osha.gov", "exposure", 8), ("nih.gov", "healthier", 5)] {
        let chosen: Vec<usize> = (0..n)
            .filter(|&i| pages[i].agency == agency && pages[i].plan != Plan::Unchanged)
            .take(count)
            .collect();
        assert_eq!(chosen.len(), count, "{agency} lacks changed pages for {token}");
        for i in chosen {
            pages[i].extra_deleted.push(token);
        }
    }
}

fn page_texts(p: &TuplePage, ordinal: usize) -> [String; 3] {
    let base = format!(
        "{} public information resource number {ordinal} with program details and contact listings",
        p.agency.trim_end_matches(".gov")
    );
    if p.plan == Plan::Unchanged {
        return [base.clone(), base.clone(), base];
    }
    let mut early = base.clone();
    let mut middle = format!("{base} overview");
    let mut late = format!("{base} overview revised");
    for t in &p.prior_terms {
        early.push_str(&format!(" {t}"));
        middle.push_str(&format!(" {t}"));
    }
    for t in &p.middle_terms {
        middle.push_str(&format!(" {t}"));
    }
    for t in &p.extra_deleted {
        middle.push_str(&format!(" {t}"));
    }
    late.push(' ');
    late.push_str("contact");
    [early, middle, late]
}

/// The scaled-down end-to-end fixture.
pub fn paper_mini() -> Scenario {
    let mut s = Scenario::new(PAPER_MINI, 5);
    s.body(LEAF, html("archived page", "archived content", &[]));
    let mut tuples: Vec<TuplePage> = Vec::new();
    let tuple = |url: &str, agency: &str, dates: [Timestamp; 3]| TuplePage {
        url: url.to_string(),
        agency: agency.to_string(),
        dates,
        plan: Plan::Unchanged,
        middle_terms: Vec::new(),
        prior_terms: Vec::new(),
        extra_deleted: Vec::new(),
        collections: Default::default(),
        partner: None,
    };
    let mut day = 0u32;
    let mut dates = || {
        day += 1;
        let d = day % 27 + 1;
        let m = day % 12 + 1;
        [noon(2008, m, d), noon(2016, m, d), noon(2020, m, d)]
    };

    // Original-collection pairs: 90 verify, 6 have only non-success 2008
    // rows, 971 have nothing in the 2007-2008 window.
    let mut pairs = Vec::new();
    for (agency, high, deep) in ORIGINAL_ALLOCATION {
        for i in 0..*high {
            let url = format!("http://www.{agency}/about{i:02}.html");
            let d = dates();
            pairs.push(pair_row(&url, d[1], d[2]));
            tuples.push(tuple(&url, agency, d));
        }
        for i in 0..*deep {
            let url = format!("http://www.{agency}/programs/area{i:02}/index.html");
            let d = dates();
            pairs.push(pair_row(&url, d[1], d[2]));
            tuples.push(tuple(&url, agency, d));
        }
    }
    let filler_agencies = ["epa.gov", "noaa.gov", "ferc.gov", "osha.gov", "nih.gov", "fws.gov", "cdc.gov", "doi.gov"];
    let bad_statuses = [
        CdxStatus::Code(302),
        CdxStatus::Code(404),
        CdxStatus::Code(302),
        CdxStatus::Code(500),
        CdxStatus::Code(404),
        CdxStatus::Revisit,
    ];
    for (i, status) in bad_statuses.iter().enumerate() {
        let agency = filler_agencies[i % filler_agencies.len()];
        let url = format!("http://www.{agency}/moved/item{i:02}.html");
        let (mid, late) = (noon(2016, 4, 4), noon(2020, 4, 4));
        s.page(
            &url,
            vec![
                ManifestCapture::new(noon(2008, 4, 4), *status),
                cap(mid, 200),
                cap(late, 200),
            ],
        );
        pairs.push(pair_row(&url, mid, late));
    }
    for i in 0..971 {
        let agency = filler_agencies[i % filler_agencies.len()];
        let url = format!("http://www.{agency}/pairs/p{i:04}.html");
        let (mid, late) = (noon(2016, 5, 5), noon(2020, 5, 5));
        let mut caps = vec![cap(mid, 200), cap(late, 200)];
        match i % 3 {
            0 => caps.insert(0, cap(noon(2010, 3, 3), 200)),
            1 => caps.insert(0, cap(noon(2006, 3, 3), 200)),
            _ => {}
        }
        s.page(&url, caps);
        pairs.push(pair_row(&url, mid, late));
    }

    // Past-web crawl: hubs linking to candidates that do or do not persist.
    let crawl_plan: &[(&str, usize, usize)] = &[
        ("gao.gov", 3, 0),
        ("justice.gov", 3, 2),
        ("nasa.gov", 3, 2),
        ("nps.gov", 2, 0),
        ("usda.gov", 2, 0),
        ("hhs.gov", 2, 0),
    ];
    let mut seeds = Vec::new();
    for (agency, high, deep) in crawl_plan {
        let root = format!("http://www.{agency}/");
        let mut links = Vec::new();
        for i in 0..*high {
            let url = format!("http://www.{agency}/topic{i}.html");
            tuples.push(tuple(&url, agency, dates()));
            links.push(url);
        }
        for i in 0..*deep {
            let url = format!("http://www.{agency}/offices/unit{i}/index.html");
            tuples.push(tuple(&url, agency, dates()));
            links.push(url);
        }
        match *agency {
            "gao.gov" => {
                for i in 0..2 {
                    let url = format!("http://www.gao.gov/reports/r{i}.html");
                    s.page(
                        &url,
                        vec![
                            cap(noon(2008, 6, 1), 200).body(LEAF),
                            cap(noon(2016, 6, 1), 200),
                            cap(noon(2017, 6, 1), 200),
                            cap(noon(2022, 6, 1), 200),
                        ],
                    );
                    links.push(url);
                }
                let url = "http://www.gao.gov/reports/gone.html".to_string();
                s.page(&url, vec![cap(noon(2008, 6, 1), 200).body(LEAF), cap(noon(2020, 6, 1), 200)]);
                links.push(url);
                links.push("http://www.gao.gov/cal/2008/01/01/".into());
                links.push("http://www.example.com/".into());
            }
            "nps.gov" => {
                let url = "http://www.nps.gov/history/archeology/aiassess/index.htm".to_string();
                s.page(
                    &url,
                    vec![
                        cap(noon(2008, 7, 1), 200).body(LEAF),
                        cap(noon(2016, 7, 1), 200),
                        cap(noon(2017, 7, 1), 200),
                        cap(noon(2022, 7, 1), 200),
                    ],
                );
                links.push(url);
                let url = "http://www.nps.gov/history/archeology/EAM/landmarks.htm".to_string();
                s.page(
                    &url,
                    vec![
                        cap(noon(2008, 7, 1), 200).body(LEAF),
                        cap(noon(2015, 7, 1), 200),
                        cap(noon(2017, 7, 1), 404),
                        cap(noon(2021, 7, 1), 200),
                    ],
                );
                links.push(url);
            }
            _ => {}
        }
        let refs: Vec<&str> = links.iter().map(String::as_str).collect();
        let hub = s.body(format!("pages/hub_{}.html", agency.trim_end_matches(".gov")), html(agency, "agency home", &refs));
        s.page(&root, vec![cap(noon(2008, 1, 3), 200).body(hub)]);
        seeds.push(root);
    }
    {
        let mut links = Vec::new();
        for i in 0..10 {
            let url = format!("http://www.whitehouse.gov/news/releases/2008/r{i}.html");
            s.page(
                &url,
                vec![cap(noon(2008, 2, 1), 200).body(LEAF), cap(noon(2016, 2, 1), 200), cap(noon(2020, 2, 1), 404)],
            );
            links.push(url);
        }
        let refs: Vec<&str> = links.iter().map(String::as_str).collect();
        let hub = s.body("pages/hub_whitehouse.html", html("whitehouse.gov", "president", &refs));
        s.page("http://www.whitehouse.gov/", vec![cap(noon(2008, 1, 3), 200).body(hub)]);
        seeds.push("http://www.whitehouse.gov/".into());
    }

    // Domain sweeps.
    for i in 0..3 {
        let url = format!("http://www.osmre.gov/topic{i}.shtm");
        tuples.push(tuple(&url, "osmre.gov", dates()));
    }
    for i in 0..4 {
        s.page(&format!("http://www.osmre.gov/archive/a{i}.shtm"), vec![cap(noon(2008, 8, 8), 200)]);
    }
    s.page(
        "http://techtransfer.osmre.gov/index.shtm",
        vec![cap(noon(2008, 5, 5), 200), cap(noon(2012, 5, 5), 200), cap(noon(2014, 5, 5), 200)],
    );
    for name in ["about", "resources", "news"] {
        tuples.push(tuple(&format!("http://www.globalchange.gov/{name}.html"), "globalchange.gov", dates()));
    }
    for i in 1..=12 {
        let url = format!("http://www.globalchange.gov/policies/comments/{i:04}.html");
        let at = if i == 11 { noon(2006, 9, 9) } else { noon(2008, 9, 9) };
        s.page(&url, vec![cap(at, 200)]);
    }
    for i in 0..190 {
        s.page(&format!("http://www.globalchange.gov/news/item{i:03}.html"), vec![cap(noon(2008, 10, 1), 200)]);
    }
    tuples.push(tuple("http://www.federalregister.gov/", "federalregister.gov", dates()));
    for (i, y) in [2011, 2015, 2021].iter().enumerate() {
        s.page(
            &format!("http://www.federalregister.gov/articles/a{i}.html"),
            vec![cap(noon(*y, 3, 3), 200), cap(noon(2023, 3, 3), 200)],
        );
    }

    // External list and manual curation, both blm.
    let eot_keep = [
        "http://www.blm.gov/ca/st/en.html",
        "http://www.blm.gov/nm/st/en.html",
        "http://www.blm.gov/or/st/en.html",
    ];
    for url in eot_keep {
        tuples.push(tuple(url, "blm.gov", dates()));
    }
    let mut eot = Vec::new();
    for i in 0..1000 {
        let line = match i % 4 {
            0 => format!("http://www.blm.gov/eot2008/p{:03}.html", i / 4),
            _ if i % 40 == 1 => format!("http://www.blm.gov/calendar/2008/01/{:02}/event{i}.html", i % 28 + 1),
            _ if i % 40 == 2 => format!("http://www.blm.gov/search.php?q=x{i}&jsessionid=s{i}"),
            _ if i % 40 == 3 => format!("http://www.blm.gov/{}", ["a"; 13].join("/") + &format!("{i}")),
            _ => format!("http://www.blm.gov/wo/st/en/info/newsroom/cookie/cookie/cookie/n{i}.html"),
        };
        eot.push(line);
    }
    for (slot, url) in [0usize, 4, 8].iter().zip(eot_keep) {
        eot[*slot] = url.to_string();
    }
    s.input(EXTERNAL_FILE, eot.iter().map(|l| format!("{l}\n")).collect());

    let fire_links = [
        "http://www.blm.gov/ak/st/en/prog/fire.html",
        "http://www.blm.gov/ak/st/en/prog/fire/afs.html",
        "http://fire.ak.blm.gov/predsvcs/weather.php",
        "http://fire.ak.blm.gov/content/aicc/",
        "http://fire.ak.blm.gov/logdata/",
    ];
    for url in &fire_links[..3] {
        tuples.push(tuple(url, "blm.gov", dates()));
    }
    s.page(
        fire_links[3],
        vec![cap(noon(2008, 4, 1), 200).body(LEAF), cap(noon(2016, 4, 1), 200), cap(noon(2021, 4, 1), 200)],
    );
    s.page(fire_links[4], vec![cap(noon(2008, 4, 1), 200).body(LEAF)]);
    let fire = s.body("pages/fire_ak_blm.html", html("Alaska Fire Service", "fire information", &fire_links));
    s.page(
        "http://fire.ak.blm.gov/",
        vec![cap(noon(2008, 3, 3), 200).body(fire), cap(noon(2016, 3, 3), 200), cap(noon(2020, 3, 3), 200)],
    );
    let decisions: Vec<CurationDecision> = fire_links[..4]
        .iter()
        .enumerate()
        .map(|(i, url)| CurationDecision {
            id: i as u64 + 1,
            surt: crate::url_keys::canonicalize(url).expect("fixture urls parse").key,
            url: url.to_string(),
            action: if i < 3 { DecisionAction::Accept } else { DecisionAction::Reject },
            actor: "curator".into(),
            at: ymd(2025, 3, 1 + i as u32),
            note: (i == 3).then(|| "no 2020 capture".to_string()),
        })
        .collect();
    s.input(DECISIONS_FILE, jsonl(&decisions));

    // Prefix-listing examples.
    s.page(
        "http://www.blm.gov/ak/akcache/index.html",
        vec![cap(noon(2006, 5, 1), 200), cap(noon(2012, 5, 1), 302), cap(noon(2023, 5, 1), 200)],
    );
    s.page(
        "http://www.blm.gov/ak/akcache/old.html",
        vec![cap(noon(2006, 5, 1), 200), cap(noon(2007, 5, 1), 200)],
    );

    assert_eq!(tuples.len(), 122);
    tuples.sort_by(|a, b| (&a.agency, &a.url).cmp(&(&b.agency, &b.url)));
    plan_texts(&mut tuples);
    for (epoch, plan) in provenance_plan().iter().enumerate() {
        let mut labels = Vec::new();
        for (label, count, partner) in plan {
            labels.extend(std::iter::repeat_n((*label, *partner), *count));
        }
        assert_eq!(labels.len(), tuples.len());
        for (i, slot) in spread(tuples.len(), 37).into_iter().enumerate() {
            let (label, partner) = labels[slot];
            tuples[i].collections[epoch] = vec![label.to_string()];
            if epoch == 0 {
                tuples[i].partner = partner.map(str::to_string);
            }
        }
    }
    for (ordinal, t) in tuples.iter().enumerate() {
        let texts = page_texts(t, ordinal);
        let mut caps = Vec::new();
        for e in 0..3 {
            let body = s.body(
                format!("pages/{}/{}.html", slug(&t.url), ["2008", "2016", "2020"][e]),
                html(&format!("{} {}", t.agency, ordinal), &texts[e], &[]),
            );
            let mut c = cap(t.dates[e], 200).body(body).collections(t.collections[e].clone());
            if e == 0 {
                if let Some(p) = &t.partner {
                    c = c.partner(p.clone());
                }
            }
            caps.push(c);
        }
        if ordinal % 10 == 0 {
            caps.push(ManifestCapture::new(noon(2016, 12, 30), CdxStatus::Revisit));
        }
        s.page(&t.url, caps);
    }

    s.manifest.pages.sort_by(|a, b| a.url.cmp(&b.url));
    let mut seen = BTreeSet::new();
    for p in &s.manifest.pages {
        assert!(seen.insert(p.url.clone()), "duplicate fixture page {}", p.url);
    }
    s.input(SEEDS_FILE, seeds.iter().map(|l| format!("{l}\n")).collect());
    s.input(PAIRS_FILE, jsonl(&pairs));
    s.input(PROBES_FILE, serde_json::to_string_pretty(&probe_set()).expect("probes serialize") + "\n");
    s.input(
        TERMS_FILE,
        serde_json::to_string_pretty(&TrackedTermList::published()).expect("terms serialize") + "\n",
    );
    let sweep = |target: &str| {
        format!("    {{\"match_type\": \"prefix\", \"target\": \"{target}\", \"from\": \"2008\", \"to\": \"2008\"}}")
    };
    let sweeps = ["http://www.osmre.gov/", "http://www.globalchange.gov/", "http://www.federalregister.gov/"]
        .map(sweep)
        .join(",\n");
    s.input(
        CONFIG_FILE,
        config_json(
            &[
                ("seeds", "\"inputs/seeds.txt\""),
                ("pairs", "[\"inputs/pairs.jsonl\"]"),
                ("external", "[\"inputs/eot-blm.txt\"]"),
                ("decisions", "\"inputs/decisions.jsonl\""),
                ("probes", "\"inputs/probes.json\""),
            ],
            &format!(",\n  \"terms\": \"inputs/terms.json\",\n  \"sweeps\": [\n{sweeps}\n  ]"),
        ),
    );
    s
}

fn probe(old: &str, status: u16, chain: &[(&str, u16, HopKind)], final_url: &str) -> Probe {
    Probe {
        old_url: old.into(),
        response: ProbeResponse {
            status,
            redirect_chain: chain
                .iter()
                .map(|(url, status, kind)| RedirectHop {
                    url: url.to_string(),
                    status: Some(*status),
                    kind: *kind,
                })
                .collect(),
            final_url: final_url.into(),
            final_body: None,
        },
        erroneous_index: false,
    }
}

/// Later-epoch probes of decayed pages.
pub fn probe_set() -> ProbeSet {
    use HopKind::*;
    let mut probes = Vec::new();
    for path in ["/environmentaljustice/", "/climatechange/", "/airquality/", "/watersense/"] {
        let old = format!("http://epa.gov{path}");
        let new = format!("http://www.epa.gov{path}");
        probes.push(probe(&old, 200, &[(&new, 301, Http)], &new));
    }
    for (old, new) in [
        ("http://www.osha.gov/SLTC/heatstress/index.html", "https://www.osha.gov/heat-exposure"),
        ("http://www.osha.gov/SLTC/silicacrystalline/index.html", "https://www.osha.gov/silica-crystalline"),
        ("http://www.osha.gov/dsg/topics/safetyhealth/index.html", "https://www.osha.gov/safety-management"),
        ("http://www.noaa.gov/climate.html", "https://www.noaa.gov/climate"),
        ("http://www.ferc.gov/industries/electric/indus-act/reliability.asp", "https://www.ferc.gov/electric-reliability"),
        ("http://www.ferc.gov/legal/staff-reports.asp", "https://www.ferc.gov/staff-reports"),
        ("http://www.cdc.gov/nceh/ehs/Docs/factsheet.cfm", "https://www.cdc.gov/nceh/ehs/factsheet.html"),
        ("http://www.nih.gov/news/health/2008/index.aspx", "https://www.nih.gov/news-events"),
    ] {
        probes.push(probe(old, 200, &[(new, 301, Http)], new));
    }
    for old in [
        "http://www.epa.gov/region1/eco/drinkwater/index.html",
        "http://www.osha.gov/SLTC/ergonomics/index.html",
        "http://www.noaa.gov/fisheries.html",
        "http://www.fws.gov/endangered/factsheets/index.html",
        "http://www.nih.gov/about/almanac/index.htm",
        "http://www.cdc.gov/climatechange/effects/default.htm",
        "http://www.ferc.gov/about/strat-docs/strat-plan.asp",
    ] {
        probes.push(probe(old, 404, &[], old));
    }
    for (old, new) in [
        ("http://www.nih.gov/news/pr/healthier.htm", "https://newsinhealth.nih.gov/healthier"),
        ("http://www.noaa.gov/ocean/index.html", "https://oceanservice.noaa.gov/ocean/index.html"),
    ] {
        probes.push(probe(old, 200, &[(new, 301, Http)], new));
    }
    let sink = "http://www.globalchange.gov/";
    probes.push(probe(
        "http://www.globalchange.gov/news/great-lakes-regional-assessment-report-released",
        200,
        &[(sink, 302, Http), (sink, 200, Meta)],
        sink,
    ));
    let siblings = ["regional-assessments", "midwest-report-released", "coasts-report-released"]
        .iter()
        .map(|p| probe(&format!("http://www.globalchange.gov/news/{p}"), 200, &[(sink, 302, Http)], sink))
        .collect();
    ProbeSet { probes, siblings }
}
