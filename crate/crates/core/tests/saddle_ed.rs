use std::fs;
use std::path::Path;

use scarlab::saddle::projector_irrelevance_gaps;
use scarlab::spin::ModelParams;
use scarlab::C64;

const XS: [i64; 5] = [-2, -1, 0, 1, 2];
const TS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

#[test]
fn projector_gap_does_not_grow_with_size() {
    let zeta = C64::new(0.0, -1.0);
    let maxima: Vec<f64> = [6usize, 8, 10]
        .iter()
        .map(|&l| {
            let g = projector_irrelevance_gaps(&ModelParams::reference(l), zeta, l / 2, &XS, &TS).unwrap();
            g.into_iter().fold(0.0, f64::max)
        })
        .collect();
    assert!(maxima.windows(2).all(|w| w[1] <= w[0]), "{maxima:?}");

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/projector_gap.json");
    if std::env::var_os("SCARLAB_BLESS").is_some() {
        fs::write(&golden, serde_json::to_string_pretty(&serde_json::json!({ "L": [6, 8, 10], "max_gap": maxima })).unwrap()).unwrap();
    }
    let want: serde_json::Value = serde_json::from_str(&fs::read_to_string(&golden).unwrap()).unwrap();
    for (a, b) in want["max_gap"].as_array().unwrap().iter().zip(&maxima) {
        assert!((a.as_f64().unwrap() - b).abs() < 1e-10);
    }
}
