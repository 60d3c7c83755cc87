use std::collections::BTreeSet;

use maplot_core::export::{export_csv, export_session, import_session, format_number};
use maplot_core::ingest::{parse_csv, Dataset, IngestOptions, Schema};
use maplot_core::ma::PValue;
use maplot_core::selection::{BoxRegion, CombineOp, Origin, SelectionId};
use maplot_core::session::{SessionId, SessionState};
use maplot_core::GeneRecord;

const RAW: &str = "\
gene,intensity_r,intensity_g,padj,comment
ACTB,5120.5,4980.25,0.73,housekeeping
IL6,812.0,96.5,3.2e-9,
CXCL8,1500,90,1e-300,\"chemokine, induced\"
SOX2,12.5,210,0.004,
NANOG,33,31,NA,
";

fn options() -> IngestOptions {
    IngestOptions::default()
}

#[test]
fn raw_and_precomputed_forms_give_the_same_dataset() {
    let (raw, report) = parse_csv(RAW.as_bytes(), &options()).unwrap();
    assert_eq!(report.schema, Schema::Raw);
    assert_eq!(report.warnings, vec!["ignored column \"comment\"".to_owned()]);

    let mut pre = String::from("name,log2FoldChange,baseMean_log2,pvalue\n");
    for r in raw.records() {
        let p = r.p.get().map(format_number).unwrap_or_else(|| "NA".into());
        pre += &format!("{},{},{},{p}\n", r.name, format_number(r.m), format_number(r.a));
    }
    let (pre, report) = parse_csv(pre.as_bytes(), &options()).unwrap();
    assert_eq!(report.schema, Schema::Precomputed);

    assert_eq!(raw.id(), pre.id());
    for (x, y) in raw.records().iter().zip(pre.records()) {
        assert_eq!((&x.name, x.m, x.a, x.p), (&y.name, y.m, y.a, y.p));
        assert!(x.raw.is_some() && y.raw.is_none());
    }
}

#[test]
fn csv_export_parses_back_to_the_same_records() {
    let (d, _) = parse_csv(RAW.as_bytes(), &options()).unwrap();
    let genes: BTreeSet<String> = ["IL6", "CXCL8", "NANOG"].map(String::from).into();
    let bytes = export_csv(&d, &genes).unwrap();
    let (back, _) = parse_csv(&bytes, &options()).unwrap();
    let want: Vec<_> = d
        .records()
        .iter()
        .filter(|r| genes.contains(&r.name))
        .map(|r| GeneRecord { raw: None, ..r.clone() })
        .collect();
    assert_eq!(back.records(), &want[..]);
}

#[test]
fn extreme_values_survive_csv_and_bundle() {
    let values = [
        1.0571691227343931,
        -1e-7,
        5e-324,
        f64::MAX,
        -0.0,
        1e16,
        123456789.12345679,
    ];
    let records = values
        .iter()
        .enumerate()
        .map(|(i, &v)| GeneRecord {
            name: format!("x{i}"),
            m: v,
            a: -v,
            p: PValue::new(if i % 2 == 0 { 1e-300 } else { 0.5 }).unwrap(),
            raw: None,
        })
        .collect();
    let d = Dataset::from_records(records).unwrap();
    let all: BTreeSet<String> = d.names().map(String::from).collect();
    let (back, _) = parse_csv(&export_csv(&d, &all).unwrap(), &options()).unwrap();
    assert_eq!(back.id(), d.id());
    for (x, y) in d.records().iter().zip(back.records()) {
        assert_eq!(x.m.to_bits(), y.m.to_bits(), "{}", x.name);
        assert_eq!(x.a.to_bits(), y.a.to_bits(), "{}", x.name);
    }

    let s = SessionState::new(SessionId("s-x".into()), &d, 0.05).unwrap();
    let bundle = import_session(&export_session(&s, &d)).unwrap();
    assert_eq!(bundle.dataset, d);
}

#[test]
fn bundle_keeps_selection_order_past_nine() {
    let (d, _) = parse_csv(RAW.as_bytes(), &options()).unwrap();
    let mut s = SessionState::new(SessionId("s-order".into()), &d, 0.05).unwrap();
    for i in 0..12 {
        let region = BoxRegion::new(0.0, 20.0 + i as f64, -10.0, 10.0).unwrap();
        s.add_selection(&d, Origin::Box { region }, None).unwrap();
    }
    let first = export_session(&s, &d);
    let bundle = import_session(&first).unwrap();
    let ids: Vec<String> = bundle.session.selections().map(|x| x.id.0.clone()).collect();
    let want: Vec<String> = (1..=12).map(|i| format!("sel-{i}")).collect();
    assert_eq!(ids, want);
    assert_eq!(export_session(&bundle.session, &bundle.dataset), first);
    bundle.verify_replay().unwrap();
}

#[test]
fn bundle_double_round_trip_is_byte_identical() {
    let (d, _) = parse_csv(RAW.as_bytes(), &options()).unwrap();
    let mut s = SessionState::new(SessionId("s-rt".into()), &d, 0.01).unwrap();
    let up = BoxRegion::new(0.0, 20.0, 0.0, 10.0).unwrap();
    let sig = BoxRegion::new(0.0, 20.0, -10.0, 10.0).unwrap();
    s.add_selection(&d, Origin::Box { region: up }, Some("up half".into())).unwrap();
    s.add_selection(&d, Origin::Box { region: sig }, None).unwrap();
    let inputs = vec![SelectionId("sel-1".into()), SelectionId("sel-2".into())];
    s.add_selection(&d, Origin::Combine { op: CombineOp::KeepSingles, inputs }, None)
        .unwrap();
    s.track(&SelectionId("sel-3".into())).unwrap();
    s.set_notes("Zellen reagieren stark — siehe IL6 ↑, «CXCL8» 🔬".into()).unwrap();
    s.set_alpha(0.1).unwrap();

    let first = export_session(&s, &d);
    let once = import_session(&first).unwrap();
    assert_eq!(once.session, s);
    let second = export_session(&once.session, &once.dataset);
    let twice = import_session(&second).unwrap();
    assert_eq!(first, second);
    assert_eq!(export_session(&twice.session, &twice.dataset), second);
    once.verify_replay().unwrap();
}

#[test]
fn reordered_selections_fail_verification() {
    let (d, _) = parse_csv(RAW.as_bytes(), &options()).unwrap();
    let mut s = SessionState::new(SessionId("s-swap".into()), &d, 0.05).unwrap();
    for name in ["IL6", "SOX2"] {
        s.add_selection(&d, Origin::Search { query: name.into(), pick: None }, None)
            .unwrap();
    }
    let text = String::from_utf8(export_session(&s, &d)).unwrap();
    let (head, rest) = text.split_once("\"sel-1\": {").unwrap();
    let (sel1, tail) = rest.split_once("},\n      \"sel-2\": {").unwrap();
    let (sel2, after) = tail.split_once("\n      }\n    },").unwrap();
    let swapped = format!("{head}\"sel-2\": {{{sel2}\n      }},\n      \"sel-1\": {{{sel1}}}\n    }},{after}");
    let bundle = import_session(swapped.as_bytes()).unwrap();
    assert_eq!(bundle.session, s, "maps compare without order");
    assert!(bundle.verify_replay().is_err());
}
