use gnrr_core::gnn::LayerKind;
use gnrr_core::gradcheck::{gradcheck, TOLERANCE};

#[test]
fn every_layer_kind_matches_finite_differences() {
    for kind in LayerKind::ALL {
        let report = gradcheck(kind, 20, 11).unwrap();
        for (block, err) in &report.max_rel_err {
            assert!(*err < TOLERANCE, "{kind} {block}: rel err {err:e}");
        }
        assert!(report.max_rel_err.keys().any(|k| k.starts_with("individual0")));
        assert!(report.max_rel_err.keys().any(|k| k.starts_with("scorer1")));
    }
}
