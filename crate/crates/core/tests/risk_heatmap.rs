mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use riskmap::heatmap::kept_ids;
use riskmap::ingest::{Antenna, AntennaId, AntennaRegistry, Direction};
use riskmap::oracle;
use riskmap::pipeline::{golden_table, shortlist_csv, viewer_bundle};
use riskmap::risk::{indicators_json, read_indicators_json, write_indicators_csv, AntennaIndicators, Indicators};
use riskmap::{build_circles, export_layer, filter_antennas, tag_vulnerable, FilterParams, LayerFormat, SocialGraph, UserId};

fn table(rows: &[(u64, u64)]) -> (AntennaRegistry, Indicators) {
    let reg = AntennaRegistry::from_entries(rows.iter().enumerate().map(|(i, _)| Antenna {
        id: format!("T{i:02}"),
        lat: -30.0 + i as f64 * 0.1,
        lon: -60.0 - i as f64 * 0.1,
    }))
    .unwrap();
    let ind = rows
        .iter()
        .enumerate()
        .map(|(i, &(n, v))| {
            let a = AntennaId(i as u32);
            (a, AntennaIndicators { antenna: a, n_residents: n, n_vulnerable: v, calls_out: 3 * n, vulnerable_calls: n })
        })
        .collect();
    (reg, ind)
}

fn arb_rows() -> impl Strategy<Value = Vec<(u64, u64)>> {
    prop::collection::vec((0u64..200).prop_flat_map(|n| (Just(n), 0..=n)), 1..40)
}

#[test]
fn twenty_antenna_circles_recomputed_by_hand() {
    let rows: Vec<(u64, u64)> = (0..20u64).map(|i| (10 * i, 7 * i * i % (10 * i + 1))).collect();
    let (reg, ind) = table(&rows);
    let k = 0.25;
    let circles = build_circles(&filter_antennas(&ind, &FilterParams { beta: 0.0, min_volume: 0 }), &reg, k).unwrap();
    for c in &circles {
        let i: usize = c.antenna_id[1..].parse().unwrap();
        let (n, v) = rows[i];
        assert_eq!((c.population, c.vulnerable), (n, v));
        assert!((c.radius_scale - k * (n as f64).sqrt()).abs() <= 1e-9);
        assert!((c.intensity - v as f64 / n as f64).abs() <= 1e-9);
    }
    let expected = rows.iter().filter(|(n, v)| *n > 0 && *v > 0).count();
    assert_eq!(circles.len(), expected);
}

#[test]
fn argentina_national_preset_matches_explicit_values() {
    let rows: Vec<(u64, u64)> = vec![(50, 40), (51, 8), (51, 7), (51, 8), (200, 31), (200, 30), (1000, 151)];
    let (_, ind) = table(&rows);
    let kept = kept_ids(&ind, &FilterParams { beta: 0.15, min_volume: 50 });
    assert_eq!(kept, kept_ids(&ind, &riskmap::Preset::ArgentinaNational.params()));
    // N=50 fails the strict volume floor, 8/51 > 0.15 passes, 7/51 does not, 30/200 is exactly 0.15
    assert_eq!(kept, vec![AntennaId(1), AntennaId(3), AntennaId(4), AntennaId(6)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn filter_matches_the_literal_rule(rows in arb_rows(), beta in 0.0f64..1.0, m in 0u64..150) {
        let (reg, ind) = table(&rows);
        let got: Vec<String> = filter_antennas(&ind, &FilterParams { beta, min_volume: m })
            .iter().map(|i| reg.antenna(i.antenna).id.clone()).collect();
        let plain: Vec<(String, u64, u64)> = ind.values().map(|i| (reg.antenna(i.antenna).id.clone(), i.n_residents, i.n_vulnerable)).collect();
        prop_assert_eq!(got, oracle::filter_rows(&plain, beta, m));
    }

    #[test]
    fn raising_either_threshold_never_adds_antennas(rows in arb_rows(), b1 in 0.0f64..1.0, b2 in 0.0f64..1.0, m1 in 0u64..150, m2 in 0u64..150) {
        let (_, ind) = table(&rows);
        let (lo_b, hi_b) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let (lo_m, hi_m) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        let set = |beta, min_volume| -> BTreeSet<AntennaId> { kept_ids(&ind, &FilterParams { beta, min_volume }).into_iter().collect() };
        prop_assert!(set(hi_b, lo_m).is_subset(&set(lo_b, lo_m)));
        prop_assert!(set(lo_b, hi_m).is_subset(&set(lo_b, lo_m)));
    }

    #[test]
    fn filtering_is_idempotent(rows in arb_rows(), beta in 0.0f64..1.0, m in 0u64..150) {
        let (_, ind) = table(&rows);
        let p = FilterParams { beta, min_volume: m };
        let once = filter_antennas(&ind, &p);
        let again: Indicators = once.iter().map(|i| (i.antenna, *i)).collect();
        prop_assert_eq!(filter_antennas(&again, &p), once);
    }

    #[test]
    fn circle_area_is_proportional_to_population(rows in arb_rows(), k in 0.01f64..10.0) {
        let (reg, ind) = table(&rows);
        let circles = build_circles(&filter_antennas(&ind, &FilterParams { beta: 0.0, min_volume: 0 }), &reg, k).unwrap();
        for c in &circles {
            let ratio = c.radius_scale * c.radius_scale / c.population as f64;
            prop_assert!((ratio - k * k).abs() <= 1e-9 * k * k);
        }
    }

    #[test]
    fn exports_are_deterministic_and_parse_back(rows in arb_rows()) {
        let (reg, ind) = table(&rows);
        let circles = build_circles(&filter_antennas(&ind, &FilterParams { beta: 0.0, min_volume: 0 }), &reg, 1.0).unwrap();
        let a = export_layer(&circles, LayerFormat::GeoJson);
        prop_assert_eq!(&a, &export_layer(&circles, LayerFormat::GeoJson));
        let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
        prop_assert_eq!(v["features"].as_array().unwrap().len(), circles.len());
        let csv = export_layer(&circles, LayerFormat::Csv);
        prop_assert_eq!(csv.iter().filter(|&&b| b == b'\n').count(), circles.len() + 1);

        let (reg2, ind2) = read_indicators_json(&indicators_json(&ind, &reg).to_string()).unwrap();
        prop_assert_eq!(ind2, ind);
        prop_assert_eq!(reg2.len(), reg.len());
    }

    #[test]
    fn vulnerable_set_matches_the_scan(
        n in 1u32..60,
        pairs in prop::collection::vec((0u32..60, 0u32..60), 0..150),
        resident_mask in any::<u64>(),
    ) {
        let pairs: Vec<(UserId, UserId)> = pairs.into_iter().filter(|&(a, b)| a < n && b < n).map(|(a, b)| (UserId(a), UserId(b))).collect();
        let g = SocialGraph::from_pairs(n as usize, pairs);
        let residents: BTreeSet<UserId> = (0..n).filter(|i| resident_mask >> (i % 64) & 1 == 1).map(UserId).collect();
        let got: BTreeSet<u32> = tag_vulnerable(&g, &residents).iter().map(|u| u.0).collect();
        let nodes: Vec<u32> = g.nodes().iter().map(|u| u.0).collect();
        let edges: Vec<(u32, u32)> = g.edges().map(|e| (e.n_i.0, e.n_j.0)).collect();
        prop_assert_eq!(got, oracle::vulnerable_by_scan(&nodes, &edges, &residents.iter().map(|u| u.0).collect()));
    }
}

#[test]
fn indicators_match_the_recount_on_generated_data() {
    let run = common::run(&common::small(5, 600, 30), 3);
    let ids = oracle::antenna_ids(&run.data.antennas_csv);
    let text = String::from_utf8(run.data.cdr_bytes()).unwrap();
    let calls = oracle::tally_lines(&text, &ids).calls;
    let homes: BTreeMap<String, String> = run
        .homes
        .values()
        .map(|h| (run.log.users.name(h.user).to_string(), run.registry.antenna(h.home_antenna).id.clone()))
        .collect();
    let want = oracle::recount_indicators(
        &ids,
        &calls,
        &homes,
        &common::names(&run.log, &run.residents),
        &common::names(&run.log, &run.vulnerable),
    );
    let got: BTreeMap<String, (u64, u64, u64, u64)> = run
        .indicators
        .values()
        .map(|i| (run.registry.antenna(i.antenna).id.clone(), (i.n_residents, i.n_vulnerable, i.calls_out, i.vulnerable_calls)))
        .collect();
    assert_eq!(got, want);
    let outgoing = run.log.records.iter().filter(|r| r.direction == Direction::Outgoing).count() as u64;
    assert_eq!(run.indicators.values().map(|i| i.calls_out).sum::<u64>(), outgoing);
}

#[test]
fn shortlist_rows_are_byte_equal_to_the_indicator_csv() {
    let run = common::run(&common::small(9, 400, 25), 1);
    let mut csv = Vec::new();
    write_indicators_csv(&run.indicators, &run.registry, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let pick: Vec<AntennaId> = run.indicators.keys().copied().step_by(3).collect();
    let short = shortlist_csv(&run.indicators, &run.registry, &pick);
    let lines: BTreeSet<&str> = csv.lines().collect();
    assert_eq!(short.lines().next(), csv.lines().next());
    assert_eq!(short.lines().count(), pick.len() + 1);
    assert!(short.lines().all(|l| lines.contains(l)));
}

#[test]
fn viewer_bundle_and_golden_table_agree_with_the_filter() {
    let run = common::run(&common::small(13, 3000, 30), 1);
    let params = riskmap::Preset::Mexico.params();
    let bundle = viewer_bundle(&run.indicators, &run.registry, &run.data.zone, &params, 1.0);
    assert_eq!(bundle["version"], 1);
    assert_eq!(bundle["presets"].as_array().unwrap().len(), 4);
    assert_eq!(bundle["zone"]["type"], "Feature");
    let antennas = bundle["antennas"].as_array().unwrap();
    assert_eq!(antennas.len(), run.registry.len());

    // a client re-filtering the bundle with the strict rule reproduces the primary output
    let visible: Vec<String> = antennas
        .iter()
        .filter(|a| {
            let (n, v) = (a["N"].as_u64().unwrap(), a["V"].as_u64().unwrap());
            n > params.min_volume && v as f64 / n as f64 > params.beta
        })
        .map(|a| a["id"].as_str().unwrap().to_string())
        .collect();
    let primary: Vec<String> = kept_ids(&run.indicators, &params).iter().map(|&a| run.registry.antenna(a).id.clone()).collect();
    assert!(!primary.is_empty());
    assert_eq!(visible, primary);

    let golden = golden_table(&run.indicators, &run.registry, &[params.beta], &[params.min_volume]);
    let row = golden.lines().nth(1).unwrap();
    assert!(row.ends_with(&primary.join(" ")), "{row}");
}
