//! Round trips of the text and binary formats and the run header.

use std::collections::BTreeMap;

use proptest::prelude::*;

use annulus_lab::io::{
    circles_to_text, decode_grid, encode_grid, format_scale, parse_circles, parse_config, parse_scale, parse_scale_list, sha256_hex,
    verify_wrapped, PointSetFile, RunHeader,
};

fn finite() -> impl Strategy<Value = f64> {
    -1e6f64..1e6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dyadic_scales_round_trip_exactly(k in 1u32..60) {
        let d = parse_scale(&format!("2^-{k}")).unwrap();
        prop_assert_eq!(d, 2f64.powi(-(k as i32)));
        prop_assert_eq!(format_scale(d), format!("2^-{k}"));
        prop_assert_eq!(parse_scale(&format_scale(d)).unwrap(), d);
    }

    #[test]
    fn scale_ranges_list_every_octave(a in 1u32..20, b in 1u32..20) {
        let list = parse_scale_list(&format!("2^-{a}..2^-{b}")).unwrap();
        prop_assert_eq!(list.len() as u32, a.abs_diff(b) + 1);
        prop_assert_eq!(list[0], 2f64.powi(-(a as i32)));
        prop_assert_eq!(*list.last().unwrap(), 2f64.powi(-(b as i32)));
    }

    #[test]
    fn point_sets_round_trip(k in 1u32..30, alpha in 0.01f64..2.0, pts in proptest::collection::vec((finite(), finite(), 0.0f64..10.0), 1..50), weighted in any::<bool>()) {
        let f = PointSetFile {
            delta: 2f64.powi(-(k as i32)),
            alpha,
            points: pts.iter().map(|p| [p.0, p.1]).collect(),
            weights: weighted.then(|| pts.iter().map(|p| p.2).collect()),
        };
        let back = PointSetFile::parse(&f.to_text()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn circles_round_trip(cs in proptest::collection::vec((finite(), finite(), 0.001f64..10.0), 0..30)) {
        let circles: Vec<([f64; 2], f64)> = cs.iter().map(|c| ([c.0, c.1], c.2)).collect();
        prop_assert_eq!(parse_circles(&circles_to_text(circles.iter().copied())).unwrap(), circles);
    }

    #[test]
    fn grids_round_trip(k in 0u32..40, nx in 1usize..20, ny in 1usize..20, seed in any::<u64>()) {
        let vals: Vec<f64> = (0..nx * ny).map(|i| ((seed.wrapping_mul(i as u64 + 1)) % 1000) as f64 / 7.0).collect();
        let d = 2f64.powi(-(k as i32));
        let bytes = encode_grid(d, nx, ny, &vals).unwrap();
        prop_assert_eq!(bytes.len(), 32 + 8 * nx * ny);
        prop_assert_eq!(decode_grid(&bytes).unwrap(), (d, nx, ny, vals));
    }

    #[test]
    fn config_round_trips(map in proptest::collection::btree_map("[a-z_]{1,10}", "[A-Za-z0-9^./-]{1,12}", 0..10)) {
        let text: String = map.iter().map(|(k, v)| format!("{k} = {v}  # note\n")).collect();
        prop_assert_eq!(parse_config(&text).unwrap(), map);
    }

    /// The header hash accepts its own body and rejects any change to it.
    #[test]
    fn header_hash_detects_tampering(seed in any::<u64>(), body in "[a-z0-9,.\n]{1,200}", flip in any::<prop::sample::Index>()) {
        let h = RunHeader { command: "avg".into(), seed, params: BTreeMap::from([("delta".into(), "2^-6".into())]) };
        let text = h.wrap(&body);
        prop_assert_eq!(verify_wrapped(&text).unwrap(), body.as_str());
        prop_assert_eq!(h.wrap(&body), text, "wrapping is deterministic");
        let mut bytes = body.clone().into_bytes();
        let i = flip.index(bytes.len());
        bytes[i] = if bytes[i] == b'x' { b'y' } else { b'x' };
        let tampered = h.wrap("").replace(&sha256_hex(b""), &sha256_hex(body.as_bytes())) + std::str::from_utf8(&bytes).unwrap();
        prop_assert!(verify_wrapped(&tampered).is_err());
    }
}
