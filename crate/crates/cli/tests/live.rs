use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc};

use tempex::fixture::FixtureStore;
use tempex::pipeline::{assemble, AssembleInputs, BackendSpec, Context, RunConfig};
use tempex_cli::archive;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn serve(store: FixtureStore) -> String {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, archive::router(Arc::new(store))).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

fn keyed(ctx: &Context) -> Vec<(String, Vec<String>)> {
    let inputs = AssembleInputs::from_config(&ctx.config);
    let mut rows: Vec<_> = assemble(ctx, &inputs)
        .unwrap()
        .tuples
        .into_iter()
        .map(|t| {
            let stamps = t.captures.values().map(|c| c.datetime.to_rfc3339()).collect();
            (t.url().to_string(), stamps)
        })
        .collect();
    rows.sort();
    rows
}

#[test]
fn live_client_reproduces_fixture_assembly() {
    let dir = fixture("quota");
    let config = RunConfig::load(&dir.join("tempex.json")).unwrap();
    let local = Context::new(config.clone()).unwrap();
    let expected = keyed(&local);
    assert!(!expected.is_empty());

    let base = serve(FixtureStore::load(&dir).unwrap());
    let mut live_config = config;
    live_config.backend = BackendSpec::live_base(&base);
    let live = Context::new(live_config).unwrap();
    assert_eq!(keyed(&live), expected);
}

#[test]
fn archive_routes_answer_in_wayback_dialect() {
    let dir = fixture("paper-mini");
    let base = serve(FixtureStore::load(&dir).unwrap());
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();

    let mut r = agent
        .get(format!("{base}/cdx/search/cdx"))
        .query("url", "http://www.globalchange.gov/")
        .query("matchType", "prefix")
        .query("showNumPages", "true")
        .call()
        .unwrap();
    let pages: u32 = r.body_mut().read_to_string().unwrap().trim().parse().unwrap();
    assert!(pages > 1);

    let mut r = agent.get(format!("{base}/web/20080303id_/http://fire.ak.blm.gov/")).call().unwrap();
    assert_eq!(r.status().as_u16(), 200);
    let md = r.headers().get("memento-datetime").unwrap().to_str().unwrap().to_string();
    assert_eq!(md, "Mon, 03 Mar 2008 12:00:00 GMT");
    assert!(r.body_mut().read_to_string().unwrap().contains("Alaska Fire Service"));

    let r = agent.get(format!("{base}/web/2008id_/http://nowhere.gov/")).call().unwrap();
    assert_eq!(r.status().as_u16(), 404);
    let r = agent.get(format!("{base}/web/notatime/http://fire.ak.blm.gov/")).call().unwrap();
    assert_eq!(r.status().as_u16(), 400);
    let r = agent.get(format!("{base}/cdx/search/cdx")).call().unwrap();
    assert_eq!(r.status().as_u16(), 400);
}
